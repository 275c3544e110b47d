//! Numerical differential geometry for parametrized quantum state families.
//!
//! The crate computes the quantum geometric tensor of a family of state
//! vectors, moves metrics between real charts (including a Wick-twisted
//! chart with Lorentzian signature and the Euler-angle chart of S³),
//! classifies metric signatures and checks flatness through numerical
//! Christoffel symbols and Riemann tensors.

pub mod charts;
pub mod coords;
pub mod curvature;
pub mod diff;
pub mod dsl;
pub mod metric;
pub mod states;

pub use coords::{Chart, DomainError, Interval, ParameterPoint};
pub use diff::{DifferentiationScheme, SchemeKind};
pub use states::{builtin_family, inner_product, StateFamily, StateVector};
