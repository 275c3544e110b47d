//! Real coordinate charts, chart maps, Jacobians, metric pullbacks and line elements.
//!
//! The Wick-rotated chart is kept real: the fourth target coordinate is
//! `c·t` and the flat target metric carries a `-1` on that axis (the
//! map's *twist*). A twist is folded into a target metric as
//! `(S·G + G·S)/2` with `S = diag(s)`, which is the real part of the formal
//! substitution `x⁴ → i·x⁴`: diagonal entries pick up `s_a`, mixed
//! entries between axes of opposite sign vanish.

use std::collections::BTreeMap;
use std::f64::consts::PI;
use std::fmt;
use std::sync::Arc;

use nalgebra::DMatrix;
use num_complex::Complex64;
use thiserror::Error;

use crate::coords::{Chart, DomainError, Interval};
use crate::diff::DifferentiationScheme;
use crate::dsl::{DefinitionKind, EvalError, Expr, FamilyDefinition};

/// Relative tolerance for metric symmetry.
pub const SYMMETRY_TOL: f64 = 1e-13;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ChartError {
    #[error(transparent)]
    Domain(#[from] DomainError),
    #[error("evaluation failed: {0}")]
    Eval(#[from] EvalError),
    #[error("dimension mismatch: expected {expected}, got {got}")]
    Dimension { expected: usize, got: usize },
    #[error("{name} must be positive and finite, got {value}")]
    NonPositive { name: &'static str, value: f64 },
    #[error("matrix is not symmetric: |G - Gᵀ| = {asymmetry:e}")]
    NotSymmetric { asymmetry: f64 },
    #[error("matrix has non-finite entries")]
    NonFinite,
    #[error("stencil on axis `{axis}` with reach {reach} leaves the declared bounds at {value}")]
    StencilOutOfBounds { axis: String, value: f64, reach: f64 },
    #[error("chart `{chart}` is rank-deficient near {axis} = {value}")]
    RankDeficient { chart: String, axis: String, value: f64 },
    #[error("map component {component} is not real-valued (imaginary part {imag:e})")]
    NonReal { component: usize, imag: f64 },
    #[error("definition `{0}` is a state family, not a chart")]
    NotAChart(String),
}

/// Real symmetric matrix of metric components at a point.
#[derive(Debug, Clone, PartialEq)]
pub struct MetricTensor {
    components: DMatrix<f64>,
}

impl MetricTensor {
    /// Validates squareness, finiteness and symmetry (relative `1e-13`).
    pub fn new(components: DMatrix<f64>) -> Result<Self, ChartError> {
        if components.nrows() != components.ncols() {
            return Err(ChartError::Dimension {
                expected: components.nrows(),
                got: components.ncols(),
            });
        }
        if components.iter().any(|v| !v.is_finite()) {
            return Err(ChartError::NonFinite);
        }
        let asymmetry = asymmetry(&components);
        if asymmetry > SYMMETRY_TOL * components.amax().max(1.0) {
            return Err(ChartError::NotSymmetric { asymmetry });
        }
        Ok(MetricTensor { components })
    }

    /// Replaces `G` by `(G + Gᵀ)/2` before validating.
    pub fn symmetrized(components: DMatrix<f64>) -> Result<Self, ChartError> {
        if components.nrows() != components.ncols() {
            return Err(ChartError::Dimension {
                expected: components.nrows(),
                got: components.ncols(),
            });
        }
        let sym = (&components + components.transpose()) * 0.5;
        MetricTensor::new(sym)
    }

    pub fn diagonal(entries: &[f64]) -> Result<Self, ChartError> {
        MetricTensor::new(DMatrix::from_diagonal(&nalgebra::DVector::from_column_slice(entries)))
    }

    pub fn flat(dim: usize) -> Self {
        MetricTensor {
            components: DMatrix::identity(dim, dim),
        }
    }

    pub fn dim(&self) -> usize {
        self.components.nrows()
    }

    pub fn components(&self) -> &DMatrix<f64> {
        &self.components
    }

    pub fn into_inner(self) -> DMatrix<f64> {
        self.components
    }

    /// `ds² = G_ab dx^a dx^b`.
    pub fn line_element(&self, d: &Displacement) -> Result<f64, ChartError> {
        check_dim(self.dim(), d.0.len())?;
        let v = nalgebra::DVector::from_column_slice(&d.0);
        Ok(v.dot(&(&self.components * &v)))
    }

    /// Folds per-axis signs into the metric as `(S·G + G·S)/2`.
    pub fn twisted(&self, twist: &[f64]) -> Result<Self, ChartError> {
        check_dim(self.dim(), twist.len())?;
        let n = self.dim();
        let m = DMatrix::from_fn(n, n, |a, b| 0.5 * (twist[a] + twist[b]) * self.components[(a, b)]);
        Ok(MetricTensor { components: m })
    }
}

fn asymmetry(m: &DMatrix<f64>) -> f64 {
    (m - m.transpose()).amax()
}

fn check_dim(expected: usize, got: usize) -> Result<(), ChartError> {
    if expected != got {
        return Err(ChartError::Dimension { expected, got });
    }
    Ok(())
}

fn check_positive(name: &'static str, value: f64) -> Result<(), ChartError> {
    if !(value > 0.0 && value.is_finite()) {
        return Err(ChartError::NonPositive { name, value });
    }
    Ok(())
}

/// Real coordinate increments.
#[derive(Debug, Clone, PartialEq)]
pub struct Displacement(pub Vec<f64>);

/// `dx² + dy² + dz² - c²·dt²` for `d = (dx, dy, dz, dt)`.
pub fn minkowski_line_element(d: &Displacement, c: f64) -> Result<f64, ChartError> {
    check_dim(4, d.0.len())?;
    check_positive("c", c)?;
    let [dx, dy, dz, dt] = [d.0[0], d.0[1], d.0[2], d.0[3]];
    Ok(dx * dx + dy * dy + dz * dz - c * c * dt * dt)
}

/// `(x¹, x², x³, x⁴) ↦ (x¹ + i·x², x³ + i·x⁴)`.
pub fn complexify_pairs(x: [f64; 4]) -> (Complex64, Complex64) {
    (Complex64::new(x[0], x[1]), Complex64::new(x[2], x[3]))
}

/// Inverse of [`complexify_pairs`].
pub fn split_pairs(z1: Complex64, z2: Complex64) -> [f64; 4] {
    [z1.re, z1.im, z2.re, z2.im]
}

/// `g11·|dZ¹|² + g22·|dZ²|²`.
pub fn complex_pair_line_element(dz1: Complex64, dz2: Complex64, g11: f64, g22: f64) -> f64 {
    g11 * dz1.norm_sqr() + g22 * dz2.norm_sqr()
}

/// Like [`complex_pair_line_element`], with `|Z|²` replaced by `s_re·re² + s_im·im²`
/// per pair, using `twist = [s₁, s₂, s₃, s₄]`.
pub fn twisted_pair_line_element(dz1: Complex64, dz2: Complex64, g11: f64, g22: f64, twist: [f64; 4]) -> f64 {
    let q1 = twist[0] * dz1.re * dz1.re + twist[1] * dz1.im * dz1.im;
    let q2 = twist[2] * dz2.re * dz2.re + twist[3] * dz2.im * dz2.im;
    g11 * q1 + g22 * q2
}

pub const WICK_TWIST: [f64; 4] = [1.0, 1.0, 1.0, -1.0];

/// Line element of `(dx, dy, dz, dt)` through the Wick chart and the complex pairs
/// `dZ¹ = dx + i·dy`, `dZ² = dz + i·c·dt` with the last axis twisted.
pub fn wick_pair_line_element(d: &Displacement, c: f64) -> Result<f64, ChartError> {
    check_dim(4, d.0.len())?;
    check_positive("c", c)?;
    let (dz1, dz2) = complexify_pairs([d.0[0], d.0[1], d.0[2], c * d.0[3]]);
    Ok(twisted_pair_line_element(dz1, dz2, 1.0, 1.0, WICK_TWIST))
}

type MapFn = dyn Fn(&[f64]) -> Result<Vec<f64>, ChartError> + Send + Sync;

#[derive(Clone)]
enum MapRule {
    /// `y = M·x`; the Jacobian is `M` exactly.
    Linear(DMatrix<f64>),
    Nonlinear(Arc<MapFn>),
}

/// A differentiable map between real charts, with a per-target-axis sign twist.
#[derive(Clone)]
pub struct ChartMap {
    name: String,
    source: Chart,
    target_dim: usize,
    rule: MapRule,
    twist: Vec<f64>,
}

impl fmt::Debug for ChartMap {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("ChartMap")
            .field("name", &self.name)
            .field("source", &self.source)
            .field("target_dim", &self.target_dim)
            .field("linear", &matches!(self.rule, MapRule::Linear(_)))
            .field("twist", &self.twist)
            .finish()
    }
}

impl ChartMap {
    pub fn linear(name: impl Into<String>, source: Chart, matrix: DMatrix<f64>) -> Result<Self, ChartError> {
        check_dim(source.dim(), matrix.ncols())?;
        let target_dim = matrix.nrows();
        Ok(ChartMap {
            name: name.into(),
            source,
            target_dim,
            rule: MapRule::Linear(matrix),
            twist: vec![1.0; target_dim],
        })
    }

    pub fn from_fn<F>(name: impl Into<String>, source: Chart, target_dim: usize, f: F) -> Self
    where
        F: Fn(&[f64]) -> Result<Vec<f64>, ChartError> + Send + Sync + 'static,
    {
        ChartMap {
            name: name.into(),
            source,
            target_dim,
            rule: MapRule::Nonlinear(Arc::new(f)),
            twist: vec![1.0; target_dim],
        }
    }

    pub fn identity(dim: usize) -> Self {
        let axes: Vec<String> = (0..dim).map(|i| format!("x{i}")).collect();
        let axes: Vec<&str> = axes.iter().map(String::as_str).collect();
        ChartMap::linear("identity", Chart::unbounded("identity", &axes), DMatrix::identity(dim, dim))
            .expect("square identity")
    }

    pub fn with_twist(mut self, twist: Vec<f64>) -> Result<Self, ChartError> {
        check_dim(self.target_dim, twist.len())?;
        self.twist = twist;
        Ok(self)
    }

    /// Builds a map from a `chart` definition file.
    pub fn from_definition(def: &FamilyDefinition, overrides: &BTreeMap<String, f64>) -> Result<Self, ChartError> {
        if def.kind != DefinitionKind::Chart {
            return Err(ChartError::NotAChart(def.name.clone()));
        }
        let names: Vec<&str> = def.parameters.iter().map(|p| p.name.as_str()).collect();
        let source = Chart::new(def.name.clone(), &names, def.parameters.iter().map(|p| p.bounds).collect());
        let mut constants = def.constants.clone();
        for (k, v) in overrides {
            if let Some(slot) = constants.get_mut(k) {
                *slot = *v;
            }
        }
        let params: Vec<String> = names.iter().map(|s| s.to_string()).collect();
        let components: Vec<Expr> = def.components.clone();
        let map = ChartMap::from_fn(def.name.clone(), source, def.components.len(), move |p| {
            let lookup = |sym: &str| {
                params
                    .iter()
                    .position(|n| n == sym)
                    .map(|i| Complex64::new(p[i], 0.0))
                    .or_else(|| constants.get(sym).map(|&v| Complex64::new(v, 0.0)))
            };
            components
                .iter()
                .enumerate()
                .map(|(component, e)| {
                    let v = e.eval_with(&lookup)?;
                    if v.im.abs() > 1e-12 * v.re.abs().max(1.0) {
                        return Err(ChartError::NonReal { component, imag: v.im });
                    }
                    Ok(v.re)
                })
                .collect()
        });
        match &def.twist {
            Some(t) => map.with_twist(t.clone()),
            None => Ok(map),
        }
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn source(&self) -> &Chart {
        &self.source
    }

    pub fn source_dim(&self) -> usize {
        self.source.dim()
    }

    pub fn target_dim(&self) -> usize {
        self.target_dim
    }

    pub fn twist(&self) -> &[f64] {
        &self.twist
    }

    pub fn is_linear(&self) -> bool {
        matches!(self.rule, MapRule::Linear(_))
    }

    /// Target coordinates of an in-bounds source point.
    pub fn evaluate(&self, p: &[f64]) -> Result<Vec<f64>, ChartError> {
        self.source.check_point(p)?;
        let y = match &self.rule {
            MapRule::Linear(m) => (m * nalgebra::DVector::from_column_slice(p)).iter().copied().collect(),
            MapRule::Nonlinear(f) => f(p)?,
        };
        if y.len() != self.target_dim {
            return Err(ChartError::Dimension {
                expected: self.target_dim,
                got: y.len(),
            });
        }
        if y.iter().any(|v| !v.is_finite()) {
            return Err(ChartError::NonFinite);
        }
        Ok(y)
    }

    /// `then ∘ self`; the result carries `then`'s twist.
    pub fn then(&self, then: &ChartMap) -> Result<ChartMap, ChartError> {
        check_dim(then.source_dim(), self.target_dim)?;
        let first = self.clone();
        let second = then.clone();
        let name = format!("{}∘{}", then.name, self.name);
        ChartMap::from_fn(name, self.source.clone(), then.target_dim, move |p| {
            second.evaluate(&first.evaluate(p)?)
        })
        .with_twist(then.twist.clone())
    }
}

/// `(x, y, z, t) ↦ (x, y, z, c·t)` with twist `(+1, +1, +1, -1)`.
pub fn wick_chart(c: f64) -> Result<ChartMap, ChartError> {
    check_positive("c", c)?;
    let source = Chart::unbounded("minkowski", &["x", "y", "z", "t"]);
    let m = DMatrix::from_diagonal(&nalgebra::DVector::from_column_slice(&[1.0, 1.0, 1.0, c]));
    ChartMap::linear("wick", source, m)?.with_twist(WICK_TWIST.to_vec())
}

fn hopf_coords(r: f64, theta: f64, phi: f64, chi: f64) -> Vec<f64> {
    let (z1, z2) = (
        Complex64::from_polar(r * (theta / 2.0).cos(), (chi + phi) / 2.0),
        Complex64::from_polar(r * (theta / 2.0).sin(), (chi - phi) / 2.0),
    );
    split_pairs(z1, z2).to_vec()
}

/// Euler-angle chart of the 3-sphere: `x¹ + i·x² = r·cos(θ/2)·e^{i(χ+φ)/2}`,
/// `x³ + i·x⁴ = r·sin(θ/2)·e^{i(χ-φ)/2}`.
///
/// With `r = None` the radius becomes the first source coordinate.
pub fn hopf_chart(r: Option<f64>) -> Result<ChartMap, ChartError> {
    let angles = [
        Interval::closed(0.0, PI),
        Interval::half_open(0.0, 2.0 * PI),
        Interval::half_open(0.0, 4.0 * PI),
    ];
    match r {
        Some(r) => {
            check_positive("r", r)?;
            let source = Chart::new("hopf", &["theta", "phi", "chi"], angles.to_vec())
                .with_singular(0, 0.0, 1e-2)
                .with_singular(0, PI, 1e-2);
            Ok(ChartMap::from_fn("hopf", source, 4, move |p| Ok(hopf_coords(r, p[0], p[1], p[2]))))
        }
        None => {
            let mut bounds = vec![Interval::half_open(0.0, f64::INFINITY)];
            bounds.extend(angles);
            let source = Chart::new("hopf_r", &["r", "theta", "phi", "chi"], bounds)
                .with_singular(0, 0.0, 1e-2)
                .with_singular(1, 0.0, 1e-2)
                .with_singular(1, PI, 1e-2);
            Ok(ChartMap::from_fn("hopf_r", source, 4, |p| Ok(hopf_coords(p[0], p[1], p[2], p[3]))))
        }
    }
}

fn check_regular(map: &ChartMap, p: &[f64]) -> Result<(), ChartError> {
    map.source.check_point(p)?;
    if let Some(band) = map
        .source
        .singular
        .iter()
        .find(|s| (p[s.axis] - s.value).abs() < s.half_width)
    {
        return Err(ChartError::RankDeficient {
            chart: map.source.id.clone(),
            axis: map.source.axes[band.axis].clone(),
            value: p[band.axis],
        });
    }
    Ok(())
}

/// `J[a][b] = ∂y^a/∂x^b` (target × source). Linear maps return their matrix exactly.
///
/// Points inside a singular band of the source chart are rejected with
/// [`ChartError::RankDeficient`].
pub fn jacobian(map: &ChartMap, p: &[f64], scheme: &DifferentiationScheme) -> Result<DMatrix<f64>, ChartError> {
    check_regular(map, p)?;
    let f = match &map.rule {
        MapRule::Linear(m) => return Ok(m.clone()),
        MapRule::Nonlinear(f) => f,
    };
    let m = map.source_dim();
    let mut jac = DMatrix::zeros(map.target_dim, m);
    let mut q = p.to_vec();
    for b in 0..m {
        let h = scheme.step_at(b, p[b]);
        let reach = scheme.reach() * h;
        if !map.source.bounds[b].contains_span(p[b], reach) {
            return Err(ChartError::StencilOutOfBounds {
                axis: map.source.axes[b].clone(),
                value: p[b],
                reach,
            });
        }
        let col: Vec<f64> = scheme.apply(p[b], h, |x| {
            q[b] = x;
            f(&q)
        })?;
        q[b] = p[b];
        if col.iter().any(|v| !v.is_finite()) {
            return Err(ChartError::NonFinite);
        }
        jac.set_column(b, &nalgebra::DVector::from_vec(col));
    }
    Ok(jac)
}

/// `Jᵀ·G̃·J` where `G̃` is `target` with the map's twist folded in; symmetrized.
pub fn pullback_metric(
    target: &MetricTensor,
    map: &ChartMap,
    p: &[f64],
    scheme: &DifferentiationScheme,
) -> Result<MetricTensor, ChartError> {
    check_dim(map.target_dim, target.dim())?;
    let twisted = target.twisted(&map.twist)?;
    let jac = jacobian(map, p, scheme)?;
    let g = jac.transpose() * twisted.components() * &jac;
    if g.iter().any(|v| !v.is_finite()) {
        return Err(ChartError::NonFinite);
    }
    MetricTensor::symmetrized(g)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn disp(v: &[f64]) -> Displacement {
        Displacement(v.to_vec())
    }

    #[test]
    fn minkowski_examples() {
        assert_eq!(minkowski_line_element(&disp(&[1.0, 0.0, 0.0, 1.0]), 1.0).unwrap(), 0.0);
        assert_eq!(minkowski_line_element(&disp(&[0.0, 0.0, 0.0, 1.0]), 2.0).unwrap(), -4.0);
        assert_eq!(minkowski_line_element(&disp(&[3.0, 4.0, 0.0, 0.0]), 7.3).unwrap(), 25.0);
        assert!(matches!(
            minkowski_line_element(&disp(&[1.0, 0.0, 0.0]), 1.0),
            Err(ChartError::Dimension { .. })
        ));
        assert!(matches!(
            minkowski_line_element(&disp(&[1.0, 0.0, 0.0, 0.0]), 0.0),
            Err(ChartError::NonPositive { .. })
        ));
    }

    #[test]
    fn complexify_examples() {
        assert_eq!(
            complexify_pairs([1.0, 2.0, 3.0, 4.0]),
            (Complex64::new(1.0, 2.0), Complex64::new(3.0, 4.0))
        );
        assert_eq!(
            complexify_pairs([1.0, 0.0, 0.0, 0.0]),
            (Complex64::new(1.0, 0.0), Complex64::new(0.0, 0.0))
        );
    }

    #[test]
    fn complex_pair_examples() {
        let z = Complex64::new(0.0, 0.0);
        assert_eq!(complex_pair_line_element(Complex64::new(1.0, 1.0), z, 1.0, 1.0), 2.0);
        assert_eq!(complex_pair_line_element(z, Complex64::new(0.0, 1.0), 5.0, 3.0), 3.0);
        let d = disp(&[0.3, -0.2, 0.7, 0.4]);
        let lhs = minkowski_line_element(&d, 1.0).unwrap();
        let rhs = wick_pair_line_element(&d, 1.0).unwrap();
        assert!((lhs - rhs).abs() < 1e-15);
    }

    #[test]
    fn wick_pullbacks() {
        let flat = MetricTensor::flat(4);
        let p = [0.2, -1.0, 3.0, 0.5];
        let s = DifferentiationScheme::default();
        let g = pullback_metric(&flat, &wick_chart(1.0).unwrap(), &p, &s).unwrap();
        assert_eq!(g.components(), MetricTensor::diagonal(&[1.0, 1.0, 1.0, -1.0]).unwrap().components());
        let g = pullback_metric(&flat, &wick_chart(2.5).unwrap(), &p, &s).unwrap();
        assert_eq!(g.components(), MetricTensor::diagonal(&[1.0, 1.0, 1.0, -6.25]).unwrap().components());
        let j = jacobian(&wick_chart(3.0).unwrap(), &p, &s).unwrap();
        assert_eq!(j, DMatrix::from_diagonal(&nalgebra::DVector::from_column_slice(&[1.0, 1.0, 1.0, 3.0])));
        assert!(wick_chart(-1.0).is_err());
    }

    #[test]
    fn identity_and_scaling_pullbacks() {
        let g = MetricTensor::new(DMatrix::from_row_slice(2, 2, &[2.0, 0.5, 0.5, -1.0])).unwrap();
        let s = DifferentiationScheme::default();
        let id = ChartMap::identity(2);
        assert_eq!(pullback_metric(&g, &id, &[0.3, 0.4], &s).unwrap(), g);
        assert_eq!(jacobian(&id, &[0.3, 0.4], &s).unwrap(), DMatrix::identity(2, 2));
        let scale = ChartMap::linear("scale", Chart::unbounded("r2", &["a", "b"]), DMatrix::identity(2, 2) * 2.0).unwrap();
        let g = pullback_metric(&MetricTensor::flat(2), &scale, &[1.0, 1.0], &s).unwrap();
        assert_eq!(g.components(), &(DMatrix::identity(2, 2) * 4.0));
    }

    #[test]
    fn hopf_pole_and_norm() {
        let map = hopf_chart(Some(1.0)).unwrap();
        let y = map.evaluate(&[0.0, 0.0, 0.0]).unwrap();
        assert_eq!(y, vec![1.0, 0.0, 0.0, 0.0]);
        let y = hopf_chart(Some(2.0)).unwrap().evaluate(&[1.0, 2.0, 3.0]).unwrap();
        let norm: f64 = y.iter().map(|v| v * v).sum();
        assert!((norm - 4.0).abs() < 1e-14);
        assert!(hopf_chart(Some(0.0)).is_err());
    }

    #[test]
    fn hopf_singular_band_is_diagnosed() {
        let map = hopf_chart(Some(1.0)).unwrap();
        let s = DifferentiationScheme::default();
        assert!(matches!(
            jacobian(&map, &[0.005, 1.0, 1.0], &s),
            Err(ChartError::RankDeficient { .. })
        ));
        assert!(matches!(
            pullback_metric(&MetricTensor::flat(4), &map, &[PI - 0.001, 1.0, 1.0], &s),
            Err(ChartError::RankDeficient { .. })
        ));
    }

    #[test]
    fn metric_validation() {
        let asym = DMatrix::from_row_slice(2, 2, &[1.0, 0.1, 0.0, 1.0]);
        assert!(matches!(MetricTensor::new(asym.clone()), Err(ChartError::NotSymmetric { .. })));
        let sym = MetricTensor::symmetrized(asym).unwrap();
        assert_eq!(sym.components()[(0, 1)], 0.05);
        assert!(matches!(
            MetricTensor::new(DMatrix::from_element(2, 2, f64::NAN)),
            Err(ChartError::NonFinite)
        ));
        assert!(matches!(
            MetricTensor::new(DMatrix::zeros(2, 3)),
            Err(ChartError::Dimension { .. })
        ));
    }

    #[test]
    fn twist_folding() {
        let g = MetricTensor::new(DMatrix::from_row_slice(2, 2, &[2.0, 3.0, 3.0, 5.0])).unwrap();
        let t = g.twisted(&[1.0, -1.0]).unwrap();
        assert_eq!(t.components(), &DMatrix::from_row_slice(2, 2, &[2.0, 0.0, 0.0, -5.0]));
    }

    #[test]
    fn chart_definition_matches_wick() {
        let def = crate::dsl::parse_family_file(crate::states::shipped_source("wick").unwrap()).unwrap();
        let overrides = BTreeMap::from([("c".to_string(), 2.0)]);
        let map = ChartMap::from_definition(&def, &overrides).unwrap();
        let s = DifferentiationScheme::default();
        let g = pullback_metric(&MetricTensor::flat(4), &map, &[0.1, 0.2, 0.3, 0.4], &s).unwrap();
        let expected = DMatrix::from_diagonal(&nalgebra::DVector::from_column_slice(&[1.0, 1.0, 1.0, -4.0]));
        assert!((g.components() - expected).amax() < 1e-9);
    }
}
