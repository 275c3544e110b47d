//! Numerical Christoffel symbols, Riemann tensor and flatness scans.
//!
//! Metric derivatives use the caller's scheme. Derivatives of the
//! Christoffel symbols use central differences with a step
//! [`OUTER_STEP_FACTOR`] times larger than the inner step on that axis.

use std::f64::consts::PI;
use std::fmt;
use std::sync::Arc;

use nalgebra::{DMatrix, SymmetricEigen};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;
use thiserror::Error;

use crate::charts::{hopf_chart, pullback_metric, ChartError, ChartMap, MetricTensor};
use crate::coords::{Chart, DomainError, Interval};
use crate::diff::{DifferentiationScheme, SchemeKind};
use crate::metric::{qgt, Convention, MetricError};
use crate::states::StateFamily;

pub const OUTER_STEP_FACTOR: f64 = 10.0;

/// Fixed inner step used when no scheme is given.
pub const DEFAULT_STEP: f64 = 1e-3;

/// Central-4 with a fixed step of [`DEFAULT_STEP`] on every axis.
///
/// The relative step rule of [`DifferentiationScheme::default`] widens the
/// outer stencil on angles above 1 rad, which costs accuracy in `∂Γ`.
pub fn default_scheme() -> DifferentiationScheme {
    DifferentiationScheme::central4(DEFAULT_STEP)
}

/// Inversion rejects metrics with `|λ_min| < SINGULAR_RATIO·|λ_max|`.
pub const SINGULAR_RATIO: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum CurvatureError {
    #[error(transparent)]
    Domain(#[from] DomainError),
    #[error(transparent)]
    Chart(#[from] ChartError),
    #[error(transparent)]
    Metric(#[from] MetricError),
    #[error("metric is singular at {point:?}: |λ_min|/|λ_max| = {ratio:e}")]
    Singular { point: Vec<f64>, ratio: f64 },
    #[error("stencil on axis `{axis}` with reach {reach} leaves the domain at {value}")]
    StencilOutOfBounds { axis: String, value: f64, reach: f64 },
    #[error("field returned a {got}x{got} metric on a {expected}-dimensional chart")]
    Dimension { expected: usize, got: usize },
    #[error("no admissible sample points: {0}")]
    EmptyRegion(String),
    #[error("unknown built-in metric field `{0}`")]
    UnknownField(String),
}

type FieldFn = dyn Fn(&[f64]) -> Result<DMatrix<f64>, CurvatureError> + Send + Sync;

/// A rule assigning a symmetric metric to each point of a chart.
#[derive(Clone)]
pub struct MetricField {
    name: String,
    chart: Chart,
    /// Region used by [`flatness_scan`]; defaults to the chart bounds.
    sampling: Vec<Interval>,
    rule: Arc<FieldFn>,
}

impl fmt::Debug for MetricField {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("MetricField")
            .field("name", &self.name)
            .field("chart", &self.chart)
            .field("sampling", &self.sampling)
            .finish_non_exhaustive()
    }
}

pub const BUILTIN_FIELDS: [&str; 4] = ["sphere2", "polar", "sphere3", "minkowski"];

impl MetricField {
    pub fn from_fn<F>(name: impl Into<String>, chart: Chart, rule: F) -> Self
    where
        F: Fn(&[f64]) -> Result<DMatrix<f64>, CurvatureError> + Send + Sync + 'static,
    {
        let sampling = chart.bounds.clone();
        MetricField {
            name: name.into(),
            chart,
            sampling,
            rule: Arc::new(rule),
        }
    }

    /// The same metric everywhere on `[-1, 1]^d`.
    pub fn constant(name: impl Into<String>, g: MetricTensor) -> Self {
        let axes: Vec<String> = match g.dim() {
            4 => ["x", "y", "z", "t"].iter().map(|s| s.to_string()).collect(),
            d => (0..d).map(|i| format!("x{i}")).collect(),
        };
        let axes: Vec<&str> = axes.iter().map(String::as_str).collect();
        let chart = Chart::new("box", &axes, vec![Interval::closed(-1.0, 1.0); g.dim()]);
        let m = g.into_inner();
        MetricField::from_fn(name, chart, move |_| Ok(m.clone()))
    }

    /// Pullback of a fixed target metric through a chart map.
    pub fn pullback(target: MetricTensor, map: ChartMap, scheme: DifferentiationScheme) -> Self {
        let chart = map.source().clone();
        let name = format!("pullback:{}", map.name());
        MetricField::from_fn(name, chart, move |p| {
            Ok(pullback_metric(&target, &map, p, &scheme)?.into_inner())
        })
    }

    /// `Re Q` of a state family.
    pub fn quantum(family: StateFamily, scheme: DifferentiationScheme, convention: Convention) -> Self {
        let chart = family.chart().clone();
        let name = format!("qgt:{}", family.name());
        MetricField::from_fn(name, chart, move |p| {
            Ok(qgt(&family, p, &scheme, convention)?.metric()?.into_inner())
        })
    }

    /// Unit 2-sphere `diag(1, sin²θ)`; scans stay in `θ ∈ [π/4, 3π/4]`.
    pub fn sphere2() -> Self {
        let chart = Chart::new(
            "sphere2",
            &["theta", "phi"],
            vec![Interval::closed(0.0, PI), Interval::half_open(0.0, 2.0 * PI)],
        );
        MetricField::from_fn("sphere2", chart, |p| {
            let s = p[0].sin();
            Ok(DMatrix::from_row_slice(2, 2, &[1.0, 0.0, 0.0, s * s]))
        })
        .with_sampling(vec![
            Interval::closed(PI / 4.0, 3.0 * PI / 4.0),
            Interval::half_open(0.0, 2.0 * PI),
        ])
    }

    /// Flat plane in polar coordinates `diag(1, ρ²)`.
    pub fn polar() -> Self {
        let chart = Chart::new(
            "polar",
            &["rho", "phi"],
            vec![Interval::closed(0.0, 10.0), Interval::half_open(0.0, 2.0 * PI)],
        );
        MetricField::from_fn("polar", chart, |p| {
            Ok(DMatrix::from_row_slice(2, 2, &[1.0, 0.0, 0.0, p[0] * p[0]]))
        })
        .with_sampling(vec![Interval::closed(1.0, 10.0), Interval::half_open(0.0, 2.0 * PI)])
    }

    /// Round S³ of radius `r`: flat ℝ⁴ pulled back through the Euler-angle chart.
    pub fn sphere3(r: f64) -> Result<Self, CurvatureError> {
        let map = hopf_chart(Some(r))?;
        let field = MetricField::pullback(MetricTensor::flat(4), map, DifferentiationScheme::default());
        Ok(field.with_sampling(vec![
            Interval::closed(PI / 4.0, 3.0 * PI / 4.0),
            Interval::half_open(0.0, 2.0 * PI),
            Interval::half_open(0.0, 4.0 * PI),
        ]))
    }

    pub fn builtin(name: &str) -> Result<Self, CurvatureError> {
        match name {
            "sphere2" => Ok(MetricField::sphere2()),
            "polar" => Ok(MetricField::polar()),
            "sphere3" => MetricField::sphere3(1.0),
            "minkowski" => Ok(MetricField::constant(
                "minkowski",
                MetricTensor::diagonal(&[1.0, 1.0, 1.0, -1.0])?,
            )),
            _ => Err(CurvatureError::UnknownField(name.to_string())),
        }
    }

    pub fn with_sampling(mut self, sampling: Vec<Interval>) -> Self {
        assert_eq!(sampling.len(), self.chart.dim());
        self.sampling = sampling;
        self
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn chart(&self) -> &Chart {
        &self.chart
    }

    pub fn dim(&self) -> usize {
        self.chart.dim()
    }

    pub fn sampling(&self) -> &[Interval] {
        &self.sampling
    }

    pub fn evaluate(&self, p: &[f64]) -> Result<DMatrix<f64>, CurvatureError> {
        self.chart.check_point(p)?;
        let g = (self.rule)(p)?;
        if g.nrows() != self.dim() || g.ncols() != self.dim() {
            return Err(CurvatureError::Dimension {
                expected: self.dim(),
                got: g.nrows(),
            });
        }
        Ok(g)
    }

    fn check_span(&self, p: &[f64], axis: usize, reach: f64) -> Result<(), CurvatureError> {
        if !self.chart.bounds[axis].contains_span(p[axis], reach) {
            return Err(CurvatureError::StencilOutOfBounds {
                axis: self.chart.axes[axis].clone(),
                value: p[axis],
                reach,
            });
        }
        Ok(())
    }
}

/// Inverse through a symmetric eigendecomposition; singular metrics are an error.
pub fn invert_metric(g: &DMatrix<f64>, point: &[f64]) -> Result<DMatrix<f64>, CurvatureError> {
    let sym = (g + g.transpose()) * 0.5;
    let eig = SymmetricEigen::new(sym);
    let max = eig.eigenvalues.amax();
    let min = eig.eigenvalues.iter().fold(f64::INFINITY, |m, l| m.min(l.abs()));
    let ratio = if max > 0.0 { min / max } else { 0.0 };
    if !(ratio >= SINGULAR_RATIO) {
        return Err(CurvatureError::Singular {
            point: point.to_vec(),
            ratio,
        });
    }
    let inv_diag = DMatrix::from_diagonal(&eig.eigenvalues.map(|l| 1.0 / l));
    Ok(&eig.eigenvectors * inv_diag * eig.eigenvectors.transpose())
}

/// `Γ^a_{bc}`, stored densely.
#[derive(Debug, Clone, PartialEq)]
pub struct Christoffel {
    dim: usize,
    data: Vec<f64>,
}

impl Christoffel {
    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn get(&self, a: usize, b: usize, c: usize) -> f64 {
        self.data[(a * self.dim + b) * self.dim + c]
    }

    fn zeros(dim: usize) -> Self {
        Christoffel {
            dim,
            data: vec![0.0; dim * dim * dim],
        }
    }

    fn set(&mut self, a: usize, b: usize, c: usize, v: f64) {
        self.data[(a * self.dim + b) * self.dim + c] = v;
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().fold(0.0, |m, v| m.max(v.abs()))
    }
}

/// `Γ^a_{bc} = ½ g^{ad}(∂_b g_{dc} + ∂_c g_{db} − ∂_d g_{bc})`.
pub fn christoffel(
    field: &MetricField,
    p: &[f64],
    scheme: &DifferentiationScheme,
) -> Result<Christoffel, CurvatureError> {
    let n = field.dim();
    let g = field.evaluate(p)?;
    let ginv = invert_metric(&g, p)?;
    let mut dg = Vec::with_capacity(n);
    let mut q = p.to_vec();
    for axis in 0..n {
        let h = scheme.step_at(axis, p[axis]);
        field.check_span(p, axis, scheme.reach() * h)?;
        let d = scheme.apply(p[axis], h, |x| {
            q[axis] = x;
            field.evaluate(&q)
        })?;
        q[axis] = p[axis];
        dg.push(d);
    }
    let mut gamma = Christoffel::zeros(n);
    for a in 0..n {
        for b in 0..n {
            for c in b..n {
                let v: f64 = (0..n)
                    .map(|d| ginv[(a, d)] * (dg[b][(d, c)] + dg[c][(d, b)] - dg[d][(b, c)]))
                    .sum::<f64>()
                    * 0.5;
                gamma.set(a, b, c, v);
                gamma.set(a, c, b, v);
            }
        }
    }
    Ok(gamma)
}

/// `R^a_{bcd}` with scalar curvature `g^{bd} R^a_{bad}`.
#[derive(Debug, Clone, PartialEq)]
pub struct Riemann {
    dim: usize,
    data: Vec<f64>,
    pub scalar: f64,
}

impl Riemann {
    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn get(&self, a: usize, b: usize, c: usize, d: usize) -> f64 {
        let n = self.dim;
        self.data[((a * n + b) * n + c) * n + d]
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    /// Largest `|R^a_{bcd} + R^a_{bdc}|`.
    pub fn antisymmetry_defect(&self) -> f64 {
        let n = self.dim;
        let mut worst: f64 = 0.0;
        for a in 0..n {
            for b in 0..n {
                for c in 0..n {
                    for d in 0..n {
                        worst = worst.max((self.get(a, b, c, d) + self.get(a, b, d, c)).abs());
                    }
                }
            }
        }
        worst
    }

    /// Largest `|R^a_{bcd} + R^a_{cdb} + R^a_{dbc}|`.
    pub fn bianchi_defect(&self) -> f64 {
        let n = self.dim;
        let mut worst: f64 = 0.0;
        for a in 0..n {
            for b in 0..n {
                for c in 0..n {
                    for d in 0..n {
                        let s = self.get(a, b, c, d) + self.get(a, c, d, b) + self.get(a, d, b, c);
                        worst = worst.max(s.abs());
                    }
                }
            }
        }
        worst
    }
}

/// `R^a_{bcd} = ∂_c Γ^a_{db} − ∂_d Γ^a_{cb} + Γ^a_{ce}Γ^e_{db} − Γ^a_{de}Γ^e_{cb}`.
pub fn riemann(field: &MetricField, p: &[f64], scheme: &DifferentiationScheme) -> Result<Riemann, CurvatureError> {
    let n = field.dim();
    let gamma = christoffel(field, p, scheme)?;
    let outer = DifferentiationScheme::central2(1.0);
    let mut dgamma: Vec<Vec<f64>> = Vec::with_capacity(n);
    let mut q = p.to_vec();
    for axis in 0..n {
        let big = OUTER_STEP_FACTOR * scheme.step_at(axis, p[axis]);
        field.check_span(p, axis, big)?;
        let d = outer.apply(p[axis], big, |x| {
            q[axis] = x;
            christoffel(field, &q, scheme).map(|g| g.data)
        })?;
        q[axis] = p[axis];
        dgamma.push(d);
    }
    let dg = |axis: usize, a: usize, b: usize, c: usize| dgamma[axis][(a * n + b) * n + c];
    let mut data = vec![0.0; n * n * n * n];
    for a in 0..n {
        for b in 0..n {
            for c in 0..n {
                for d in 0..n {
                    let mut v = dg(c, a, d, b) - dg(d, a, c, b);
                    for e in 0..n {
                        v += gamma.get(a, c, e) * gamma.get(e, d, b) - gamma.get(a, d, e) * gamma.get(e, c, b);
                    }
                    data[((a * n + b) * n + c) * n + d] = v;
                }
            }
        }
    }
    let ginv = invert_metric(&field.evaluate(p)?, p)?;
    let mut scalar = 0.0;
    for b in 0..n {
        for d in 0..n {
            let ricci: f64 = (0..n).map(|a| data[((a * n + b) * n + a) * n + d]).sum();
            scalar += ginv[(b, d)] * ricci;
        }
    }
    Ok(Riemann { dim: n, data, scalar })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PointRecord {
    pub index: usize,
    pub coords: Vec<f64>,
    pub max_abs_riemann: f64,
    pub scalar_curvature: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SchemeSummary {
    pub kind: SchemeKind,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub step: Option<f64>,
    pub relative_step: f64,
    pub order: usize,
    pub outer_step_factor: f64,
}

impl From<&DifferentiationScheme> for SchemeSummary {
    fn from(s: &DifferentiationScheme) -> Self {
        SchemeSummary {
            kind: s.kind,
            step: s.step,
            relative_step: s.relative_step,
            order: s.order(),
            outer_step_factor: OUTER_STEP_FACTOR,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CurvatureReport {
    pub field: String,
    pub seed: u64,
    pub tolerance: f64,
    pub scheme: SchemeSummary,
    pub points: Vec<PointRecord>,
    pub global_max: f64,
    pub flat: bool,
}

/// Draws `n` seeded points from the field's sampling region, keeping stencil
/// margins and singular bands clear.
pub fn sample_points(
    field: &MetricField,
    n: usize,
    seed: u64,
    scheme: &DifferentiationScheme,
) -> Result<Vec<Vec<f64>>, CurvatureError> {
    let mut ranges = Vec::with_capacity(field.dim());
    for (axis, iv) in field.sampling.iter().enumerate() {
        let name = &field.chart.axes[axis];
        if !iv.is_finite() {
            return Err(CurvatureError::EmptyRegion(format!("axis `{name}` is unbounded")));
        }
        let extent = iv.lower.abs().max(iv.upper.abs());
        let margin = (OUTER_STEP_FACTOR + scheme.reach()) * scheme.step_at(axis, extent) * 1.01;
        let bounds = field.chart.bounds[axis];
        let lo = iv.lower.max(bounds.lower + margin);
        let hi = iv.upper.min(bounds.upper - margin);
        if !(lo < hi) {
            return Err(CurvatureError::EmptyRegion(format!(
                "axis `{name}` has no interior after a stencil margin of {margin}"
            )));
        }
        ranges.push((lo, hi));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = Vec::with_capacity(n);
    let mut attempts = 0usize;
    while out.len() < n {
        attempts += 1;
        if attempts > 1000 * n.max(1) {
            return Err(CurvatureError::EmptyRegion(
                "sampling region is covered by singular bands".into(),
            ));
        }
        let p: Vec<f64> = ranges.iter().map(|&(lo, hi)| rng.random_range(lo..hi)).collect();
        if !field.chart.near_singularity(&p) {
            out.push(p);
        }
    }
    Ok(out)
}

/// Riemann tensor at `n_points` seeded sample points; flat iff the largest
/// component anywhere is below `tol`.
pub fn flatness_scan(
    field: &MetricField,
    n_points: usize,
    tol: f64,
    seed: u64,
    scheme: &DifferentiationScheme,
) -> Result<CurvatureReport, CurvatureError> {
    if n_points == 0 {
        return Err(CurvatureError::EmptyRegion("n_points must be at least 1".into()));
    }
    let pts = sample_points(field, n_points, seed, scheme)?;
    let points = pts
        .into_par_iter()
        .enumerate()
        .map(|(index, coords)| {
            let r = riemann(field, &coords, scheme)?;
            Ok(PointRecord {
                index,
                coords,
                max_abs_riemann: r.max_abs(),
                scalar_curvature: r.scalar,
            })
        })
        .collect::<Result<Vec<_>, CurvatureError>>()?;
    let global_max = points.iter().fold(0.0, |m: f64, r| m.max(r.max_abs_riemann));
    Ok(CurvatureReport {
        field: field.name.clone(),
        seed,
        tolerance: tol,
        scheme: scheme.into(),
        points,
        global_max,
        flat: global_max < tol,
    })
}
