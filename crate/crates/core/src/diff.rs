//! Finite-difference stencils.

use std::collections::BTreeMap;

use nalgebra::DMatrix;
use num_complex::Complex64;
use serde::Serialize;
use thiserror::Error;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum SchemeKind {
    Central2,
    Central4,
    /// Central-2 estimates at `h, h/2, ..` combined by Richardson extrapolation.
    Richardson { levels: usize },
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SchemeError {
    #[error("step must be positive and finite, got {0}")]
    Step(f64),
    #[error("richardson extrapolation needs at least 2 levels, got {0}")]
    Levels(usize),
}

/// How a derivative is approximated.
///
/// With `step == None` the step on an axis is `relative_step * max(1, |x|)`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DifferentiationScheme {
    pub kind: SchemeKind,
    pub step: Option<f64>,
    pub relative_step: f64,
    pub axis_steps: BTreeMap<usize, f64>,
}

impl Default for DifferentiationScheme {
    fn default() -> Self {
        DifferentiationScheme {
            kind: SchemeKind::Central4,
            step: None,
            relative_step: 1e-3,
            axis_steps: BTreeMap::new(),
        }
    }
}

impl DifferentiationScheme {
    pub fn new(kind: SchemeKind, step: Option<f64>) -> Result<Self, SchemeError> {
        let scheme = DifferentiationScheme {
            kind,
            step,
            ..Default::default()
        };
        scheme.validate()?;
        Ok(scheme)
    }

    pub fn central2(h: f64) -> Self {
        DifferentiationScheme {
            kind: SchemeKind::Central2,
            step: Some(h),
            ..Default::default()
        }
    }

    pub fn central4(h: f64) -> Self {
        DifferentiationScheme {
            kind: SchemeKind::Central4,
            step: Some(h),
            ..Default::default()
        }
    }

    pub fn richardson(h: f64, levels: usize) -> Self {
        DifferentiationScheme {
            kind: SchemeKind::Richardson { levels },
            step: Some(h),
            ..Default::default()
        }
    }

    pub fn with_axis_step(mut self, axis: usize, h: f64) -> Self {
        self.axis_steps.insert(axis, h);
        self
    }

    pub fn validate(&self) -> Result<(), SchemeError> {
        let steps = self
            .step
            .into_iter()
            .chain(self.axis_steps.values().copied())
            .chain(std::iter::once(self.relative_step));
        for h in steps {
            if !(h > 0.0 && h.is_finite()) {
                return Err(SchemeError::Step(h));
            }
        }
        if let SchemeKind::Richardson { levels } = self.kind {
            if levels < 2 {
                return Err(SchemeError::Levels(levels));
            }
        }
        Ok(())
    }

    /// Step used on `axis` at coordinate value `x`.
    pub fn step_at(&self, axis: usize, x: f64) -> f64 {
        if let Some(&h) = self.axis_steps.get(&axis) {
            return h;
        }
        self.step.unwrap_or(self.relative_step * x.abs().max(1.0))
    }

    /// Largest stencil offset in units of the step.
    pub fn reach(&self) -> f64 {
        match self.kind {
            SchemeKind::Central2 | SchemeKind::Richardson { .. } => 1.0,
            SchemeKind::Central4 => 2.0,
        }
    }

    /// Formal truncation order.
    pub fn order(&self) -> usize {
        match self.kind {
            SchemeKind::Central2 => 2,
            SchemeKind::Central4 => 4,
            SchemeKind::Richardson { levels } => 2 * levels,
        }
    }

    /// Positive offsets `o` and weights `w` of the antisymmetric stencil
    /// `f'(x) ≈ Σ w · (f(x + o) - f(x - o))`.
    pub fn stencil(&self, h: f64) -> Vec<(f64, f64)> {
        match self.kind {
            SchemeKind::Central2 => vec![(h, 0.5 / h)],
            SchemeKind::Central4 => {
                let d = 12.0 * h;
                vec![(h, 8.0 / d), (2.0 * h, -1.0 / d)]
            }
            SchemeKind::Richardson { levels } => richardson_stencil(h, levels),
        }
    }

    /// Differentiates `f` at `x` with step `h`.
    pub fn apply<T, E, F>(&self, x: f64, h: f64, mut f: F) -> Result<T, E>
    where
        T: Linear,
        F: FnMut(f64) -> Result<T, E>,
    {
        let mut acc: Option<T> = None;
        for (offset, w) in self.stencil(h) {
            let mut diff = f(x + offset)?;
            diff.add_scaled(-1.0, &f(x - offset)?);
            match acc.as_mut() {
                Some(a) => a.add_scaled(w, &diff),
                None => {
                    let mut a = diff.zeros_like();
                    a.add_scaled(w, &diff);
                    acc = Some(a);
                }
            }
        }
        Ok(acc.expect("stencils are non-empty"))
    }
}

/// Linear weights of a Richardson table over central-2 estimates at `h / 2^k`.
fn richardson_stencil(h: f64, levels: usize) -> Vec<(f64, f64)> {
    // Entry k weighs the antisymmetric pair at ±h/2^k.
    let mut table: Vec<Vec<f64>> = (0..levels)
        .map(|k| {
            let mut w = vec![0.0; levels];
            w[k] = 0.5 * f64::powi(2.0, k as i32) / h;
            w
        })
        .collect();
    for j in 1..levels {
        let factor = f64::powi(4.0, j as i32);
        for k in (j..levels).rev() {
            let prev = table[k - 1].clone();
            for (cur, p) in table[k].iter_mut().zip(&prev) {
                *cur += (*cur - p) / (factor - 1.0);
            }
        }
    }
    let last = &table[levels - 1];
    (0..levels)
        .map(|k| (h / f64::powi(2.0, k as i32), last[k]))
        .collect()
}

/// Values that stencils can combine.
pub trait Linear {
    fn zeros_like(&self) -> Self;
    fn add_scaled(&mut self, w: f64, other: &Self);
}

impl Linear for f64 {
    fn zeros_like(&self) -> Self {
        0.0
    }
    fn add_scaled(&mut self, w: f64, other: &Self) {
        *self += w * other;
    }
}

impl Linear for Vec<f64> {
    fn zeros_like(&self) -> Self {
        vec![0.0; self.len()]
    }
    fn add_scaled(&mut self, w: f64, other: &Self) {
        for (a, b) in self.iter_mut().zip(other) {
            *a += w * b;
        }
    }
}

impl Linear for Vec<Complex64> {
    fn zeros_like(&self) -> Self {
        vec![Complex64::new(0.0, 0.0); self.len()]
    }
    fn add_scaled(&mut self, w: f64, other: &Self) {
        for (a, b) in self.iter_mut().zip(other) {
            *a += b * w;
        }
    }
}

impl Linear for DMatrix<f64> {
    fn zeros_like(&self) -> Self {
        DMatrix::zeros(self.nrows(), self.ncols())
    }
    fn add_scaled(&mut self, w: f64, other: &Self) {
        *self += other * w;
    }
}
