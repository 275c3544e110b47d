//! Parametrized families of (unnormalized) state vectors.

use std::collections::BTreeMap;
use std::f64::consts::PI;
use std::fmt;
use std::sync::Arc;

use num_complex::Complex64;
use thiserror::Error;

use crate::coords::{Chart, DomainError, Interval};
use crate::diff::DifferentiationScheme;
use crate::dsl::{DefinitionKind, EvalError, Expr, FamilyDefinition};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum StateError {
    #[error(transparent)]
    Domain(#[from] DomainError),
    #[error("evaluation failed: {0}")]
    Eval(#[from] EvalError),
    #[error("unknown built-in family `{0}`")]
    UnknownFamily(String),
    #[error("family `{family}` requires constant `{name}`")]
    MissingConstant { family: String, name: String },
    #[error("constant `{name}` is invalid: {reason}")]
    BadConstant { name: String, reason: String },
    #[error("stencil on axis `{axis}` with reach {reach} leaves the declared bounds at {value}")]
    StencilOutOfBounds { axis: String, value: f64, reach: f64 },
    #[error("state vectors have lengths {0} and {1}")]
    LengthMismatch(usize, usize),
    #[error("state has zero norm")]
    ZeroNorm,
    #[error("definition `{0}` is a chart, not a state family")]
    NotAFamily(String),
    #[error("state vector entries must be finite and non-empty")]
    InvalidVector,
}

/// Complex amplitudes; not required to be normalized.
#[derive(Debug, Clone, PartialEq)]
pub struct StateVector(pub Vec<Complex64>);

impl StateVector {
    pub fn new(amplitudes: Vec<Complex64>) -> Result<Self, StateError> {
        if amplitudes.is_empty() || amplitudes.iter().any(|z| !(z.re.is_finite() && z.im.is_finite())) {
            return Err(StateError::InvalidVector);
        }
        Ok(StateVector(amplitudes))
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn norm_sqr(&self) -> f64 {
        self.0.iter().map(|z| z.norm_sqr()).sum()
    }

    pub fn amplitudes(&self) -> &[Complex64] {
        &self.0
    }
}

/// `⟨a|b⟩ = Σ conj(aᵢ)·bᵢ`.
pub fn inner_product(a: &StateVector, b: &StateVector) -> Result<Complex64, StateError> {
    if a.len() != b.len() {
        return Err(StateError::LengthMismatch(a.len(), b.len()));
    }
    Ok(a.0.iter().zip(&b.0).map(|(x, y)| x.conj() * y).sum())
}

type EvalFn = dyn Fn(&[f64]) -> Result<Vec<Complex64>, StateError> + Send + Sync;

/// A smooth map from a real parameter chart to state vectors.
#[derive(Clone)]
pub struct StateFamily {
    name: String,
    chart: Chart,
    state_dim: usize,
    constants: BTreeMap<String, f64>,
    rule: Arc<EvalFn>,
}

impl fmt::Debug for StateFamily {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("StateFamily")
            .field("name", &self.name)
            .field("chart", &self.chart)
            .field("state_dim", &self.state_dim)
            .field("constants", &self.constants)
            .finish_non_exhaustive()
    }
}

/// Definition-file sources shipped with the crate.
pub fn shipped_source(name: &str) -> Option<&'static str> {
    match name {
        "hopf_s3" => Some(include_str!("../families/hopf_s3.fam")),
        "hopf_s3_nohalf" => Some(include_str!("../families/hopf_s3_nohalf.fam")),
        "bloch_cp1" => Some(include_str!("../families/bloch_cp1.fam")),
        "wick" => Some(include_str!("../families/wick.chart")),
        _ => None,
    }
}

pub const BUILTIN_FAMILIES: [&str; 5] = ["hopf_s3", "hopf_s3_nohalf", "bloch_cp1", "plane_wave", "constant_state"];

fn constant_or(constants: &BTreeMap<String, f64>, name: &str, default: f64) -> f64 {
    constants.get(name).copied().unwrap_or(default)
}

fn required(constants: &BTreeMap<String, f64>, family: &str, name: &str) -> Result<f64, StateError> {
    constants.get(name).copied().ok_or_else(|| StateError::MissingConstant {
        family: family.to_string(),
        name: name.to_string(),
    })
}

fn euler_chart(id: &str) -> Chart {
    Chart::new(
        id,
        &["theta", "phi", "chi"],
        vec![
            Interval::closed(0.0, PI),
            Interval::half_open(0.0, 2.0 * PI),
            Interval::half_open(0.0, 4.0 * PI),
        ],
    )
    .with_singular(0, 0.0, 1e-2)
    .with_singular(0, PI, 1e-2)
}

/// Looks up a built-in family by name.
///
/// * `hopf_s3` / `hopf_s3_nohalf`: constant `r` (default 1).
/// * `bloch_cp1`: no constants.
/// * `plane_wave`: requires `k` and `omega`.
/// * `constant_state`: `re0, im0, re1, im1, ..` (default `(1+2i, 0)`) and
///   `params` (chart dimension, default 2).
pub fn builtin_family(name: &str, constants: &BTreeMap<String, f64>) -> Result<StateFamily, StateError> {
    match name {
        "hopf_s3" | "hopf_s3_nohalf" => {
            let r = constant_or(constants, "r", 1.0);
            if !(r > 0.0 && r.is_finite()) {
                return Err(StateError::BadConstant {
                    name: "r".into(),
                    reason: "must be positive".into(),
                });
            }
            let phase = if name == "hopf_s3" { 0.5 } else { 1.0 };
            Ok(StateFamily::from_fn(name, euler_chart(name), 2, move |p| {
                let (t, f, c) = (p[0], p[1], p[2]);
                Ok(vec![
                    Complex64::from_polar(r * (t / 2.0).cos(), phase * (c + f)),
                    Complex64::from_polar(r * (t / 2.0).sin(), phase * (c - f)),
                ])
            })
            .with_constants([("r".to_string(), r)]))
        }
        "bloch_cp1" => {
            let chart = Chart::new(
                name,
                &["theta", "phi"],
                vec![Interval::closed(0.0, PI), Interval::half_open(0.0, 2.0 * PI)],
            )
            .with_singular(0, 0.0, 1e-2)
            .with_singular(0, PI, 1e-2);
            Ok(StateFamily::from_fn(name, chart, 2, |p| {
                Ok(vec![
                    Complex64::new((p[0] / 2.0).cos(), 0.0),
                    Complex64::from_polar((p[0] / 2.0).sin(), p[1]),
                ])
            }))
        }
        "plane_wave" => {
            let k = required(constants, name, "k")?;
            let omega = required(constants, name, "omega")?;
            let chart = Chart::unbounded(name, &["z", "t"]);
            Ok(StateFamily::from_fn(name, chart, 1, move |p| {
                Ok(vec![Complex64::from_polar(1.0, k * p[0] - omega * p[1])])
            })
            .with_constants([("k".to_string(), k), ("omega".to_string(), omega)]))
        }
        "constant_state" => {
            let params = constant_or(constants, "params", 2.0);
            if !(params >= 1.0 && params.fract() == 0.0) {
                return Err(StateError::BadConstant {
                    name: "params".into(),
                    reason: "must be a positive integer".into(),
                });
            }
            let mut amps = Vec::new();
            for idx in 0.. {
                let (re, im) = (format!("re{idx}"), format!("im{idx}"));
                if !constants.contains_key(&re) && !constants.contains_key(&im) {
                    break;
                }
                amps.push(Complex64::new(constant_or(constants, &re, 0.0), constant_or(constants, &im, 0.0)));
            }
            if amps.is_empty() {
                amps = vec![Complex64::new(1.0, 2.0), Complex64::new(0.0, 0.0)];
            }
            let axes: Vec<String> = (0..params as usize).map(|i| format!("a{i}")).collect();
            let axes: Vec<&str> = axes.iter().map(String::as_str).collect();
            StateFamily::constant(StateVector::new(amps)?, Chart::unbounded(name, &axes))
        }
        _ => Err(StateError::UnknownFamily(name.to_string())),
    }
}

impl StateFamily {
    /// Wraps a closed-form evaluation rule.
    pub fn from_fn<F>(name: impl Into<String>, chart: Chart, state_dim: usize, rule: F) -> Self
    where
        F: Fn(&[f64]) -> Result<Vec<Complex64>, StateError> + Send + Sync + 'static,
    {
        StateFamily {
            name: name.into(),
            chart,
            state_dim,
            constants: BTreeMap::new(),
            rule: Arc::new(rule),
        }
    }

    fn with_constants(mut self, constants: impl IntoIterator<Item = (String, f64)>) -> Self {
        self.constants.extend(constants);
        self
    }

    pub fn constant(state: StateVector, chart: Chart) -> Result<Self, StateError> {
        if state.norm_sqr() == 0.0 {
            return Err(StateError::ZeroNorm);
        }
        let dim = state.len();
        let amps = state.0;
        Ok(StateFamily::from_fn("constant_state", chart, dim, move |_| Ok(amps.clone())))
    }

    /// Builds a family from a parsed definition; `overrides` replace declared constants.
    pub fn from_definition(def: &FamilyDefinition, overrides: &BTreeMap<String, f64>) -> Result<Self, StateError> {
        if def.kind != DefinitionKind::Family {
            return Err(StateError::NotAFamily(def.name.clone()));
        }
        let names: Vec<&str> = def.parameters.iter().map(|p| p.name.as_str()).collect();
        let chart = Chart::new(def.name.clone(), &names, def.parameters.iter().map(|p| p.bounds).collect());
        let mut constants = def.constants.clone();
        for (k, v) in overrides {
            if constants.contains_key(k) {
                constants.insert(k.clone(), *v);
            }
        }
        let params: Vec<String> = names.iter().map(|s| s.to_string()).collect();
        let components: Vec<Expr> = def.components.clone();
        let bound_constants = constants.clone();
        let rule = move |p: &[f64]| -> Result<Vec<Complex64>, StateError> {
            let lookup = |sym: &str| {
                params
                    .iter()
                    .position(|n| n == sym)
                    .map(|i| Complex64::new(p[i], 0.0))
                    .or_else(|| bound_constants.get(sym).map(|&v| Complex64::new(v, 0.0)))
            };
            components
                .iter()
                .map(|e| e.eval_with(&lookup).map_err(StateError::from))
                .collect()
        };
        Ok(StateFamily::from_fn(def.name.clone(), chart, def.components.len(), rule).with_constants(constants))
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn chart(&self) -> &Chart {
        &self.chart
    }

    pub fn param_dim(&self) -> usize {
        self.chart.dim()
    }

    pub fn state_dim(&self) -> usize {
        self.state_dim
    }

    pub fn constants(&self) -> &BTreeMap<String, f64> {
        &self.constants
    }

    /// Evaluates all components at an in-bounds point.
    pub fn evaluate(&self, p: &[f64]) -> Result<StateVector, StateError> {
        self.chart.check_point(p)?;
        let amps = (self.rule)(p)?;
        debug_assert_eq!(amps.len(), self.state_dim);
        StateVector::new(amps)
    }

    /// Numerical `∂Ψ/∂x^axis`. The whole stencil must lie inside the declared bounds.
    pub fn differentiate(
        &self,
        p: &[f64],
        axis: usize,
        scheme: &DifferentiationScheme,
    ) -> Result<StateVector, StateError> {
        self.chart.check_point(p)?;
        if axis >= self.param_dim() {
            return Err(DomainError::Axis {
                axis,
                dim: self.param_dim(),
            }
            .into());
        }
        let h = scheme.step_at(axis, p[axis]);
        let reach = scheme.reach() * h;
        if !self.chart.bounds[axis].contains_span(p[axis], reach) {
            return Err(StateError::StencilOutOfBounds {
                axis: self.chart.axes[axis].clone(),
                value: p[axis],
                reach,
            });
        }
        let mut q = p.to_vec();
        let d = scheme.apply(p[axis], h, |x| {
            q[axis] = x;
            self.evaluate(&q).map(|s| s.0)
        })?;
        Ok(StateVector(d))
    }

    /// Multiplies every state by `exp(i·alpha(p))`.
    pub fn with_phase<F>(&self, alpha: F) -> Self
    where
        F: Fn(&[f64]) -> f64 + Send + Sync + 'static,
    {
        let inner = self.rule.clone();
        StateFamily {
            name: format!("{}*phase", self.name),
            rule: Arc::new(move |p| {
                let phase = Complex64::from_polar(1.0, alpha(p));
                Ok(inner(p)?.into_iter().map(|z| z * phase).collect())
            }),
            ..self.clone()
        }
    }

    /// Multiplies every state by a fixed complex factor.
    pub fn scaled(&self, factor: Complex64) -> Self {
        let inner = self.rule.clone();
        StateFamily {
            name: format!("{}*scale", self.name),
            rule: Arc::new(move |p| Ok(inner(p)?.into_iter().map(|z| z * factor).collect())),
            ..self.clone()
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::FRAC_1_SQRT_2;

    fn consts(pairs: &[(&str, f64)]) -> BTreeMap<String, f64> {
        pairs.iter().map(|(k, v)| (k.to_string(), *v)).collect()
    }

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn hopf_poles() {
        let fam = builtin_family("hopf_s3", &BTreeMap::new()).unwrap();
        assert_eq!(fam.evaluate(&[0.0, 0.0, 0.0]).unwrap().0, vec![c(1.0, 0.0), c(0.0, 0.0)]);
        let s = fam.evaluate(&[PI, 0.0, 0.0]).unwrap();
        assert!(s.0[0].norm() < 1e-16);
        assert!((s.0[1] - c(1.0, 0.0)).norm() < 1e-16);
    }

    #[test]
    fn constant_state_is_fixed() {
        let fam = builtin_family("constant_state", &BTreeMap::new()).unwrap();
        assert_eq!(fam.evaluate(&[3.0, -7.0]).unwrap().0, vec![c(1.0, 2.0), c(0.0, 0.0)]);
        let d = fam.differentiate(&[0.3, 0.1], 1, &DifferentiationScheme::default()).unwrap();
        assert!(d.0.iter().all(|z| z.norm() < 1e-15));
    }

    #[test]
    fn plane_wave_origin_and_missing_constant() {
        let fam = builtin_family("plane_wave", &consts(&[("k", 1.0), ("omega", 1.0)])).unwrap();
        assert_eq!(fam.evaluate(&[0.0, 0.0]).unwrap().0, vec![c(1.0, 0.0)]);
        assert!(matches!(
            builtin_family("plane_wave", &consts(&[("k", 1.0)])),
            Err(StateError::MissingConstant { .. })
        ));
        assert!(matches!(
            builtin_family("nope", &BTreeMap::new()),
            Err(StateError::UnknownFamily(_))
        ));
    }

    #[test]
    fn bloch_equator() {
        let fam = builtin_family("bloch_cp1", &BTreeMap::new()).unwrap();
        let s = fam.evaluate(&[PI / 2.0, 0.0]).unwrap();
        assert!((s.0[0] - c(FRAC_1_SQRT_2, 0.0)).norm() < 1e-15);
        assert!((s.0[1] - c(FRAC_1_SQRT_2, 0.0)).norm() < 1e-15);
    }

    #[test]
    fn evaluation_out_of_bounds() {
        let fam = builtin_family("bloch_cp1", &BTreeMap::new()).unwrap();
        assert!(matches!(fam.evaluate(&[4.0, 0.0]), Err(StateError::Domain(_))));
        assert!(matches!(fam.evaluate(&[1.0]), Err(StateError::Domain(DomainError::Arity { .. }))));
    }

    #[test]
    fn stencil_must_stay_in_bounds() {
        let fam = builtin_family("bloch_cp1", &BTreeMap::new()).unwrap();
        let scheme = DifferentiationScheme::central4(1e-3);
        assert!(matches!(
            fam.differentiate(&[1e-3, 1.0], 0, &scheme),
            Err(StateError::StencilOutOfBounds { .. })
        ));
        assert!(matches!(
            fam.differentiate(&[1.0, 1.0], 2, &scheme),
            Err(StateError::Domain(DomainError::Axis { .. }))
        ));
    }

    #[test]
    fn inner_products() {
        let v = |a: &[Complex64]| StateVector::new(a.to_vec()).unwrap();
        let e0 = v(&[c(1.0, 0.0), c(0.0, 0.0)]);
        let e1 = v(&[c(0.0, 0.0), c(1.0, 0.0)]);
        assert_eq!(inner_product(&e0, &e1).unwrap(), c(0.0, 0.0));
        let iv = v(&[c(0.0, 1.0)]);
        assert_eq!(inner_product(&iv, &iv).unwrap(), c(1.0, 0.0));
        let a = v(&[c(1.0, 1.0), c(2.0, 0.0)]);
        let b = v(&[c(1.0, 0.0), c(0.0, 1.0)]);
        assert_eq!(inner_product(&a, &b).unwrap(), c(1.0, 1.0));
        assert_eq!(inner_product(&a, &iv), Err(StateError::LengthMismatch(2, 1)));
    }

    #[test]
    fn invalid_vectors() {
        assert_eq!(StateVector::new(vec![]), Err(StateError::InvalidVector));
        assert_eq!(StateVector::new(vec![c(f64::NAN, 0.0)]), Err(StateError::InvalidVector));
        assert!(matches!(
            StateFamily::constant(StateVector::new(vec![c(0.0, 0.0)]).unwrap(), Chart::unbounded("z", &["a"])),
            Err(StateError::ZeroNorm)
        ));
    }
}
