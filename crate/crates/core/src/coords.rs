//! Coordinate domains shared by state families, chart maps and metric fields.

use serde::Serialize;
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum DomainError {
    #[error("expected {expected} coordinates, got {got}")]
    Arity { expected: usize, got: usize },
    #[error("coordinate {axis} is not finite")]
    NonFinite { axis: usize },
    #[error("coordinate {name}={value} outside its declared bounds [{lower}, {upper}]")]
    OutOfBounds {
        name: String,
        value: f64,
        lower: f64,
        upper: f64,
        upper_closed: bool,
    },
    #[error("axis {axis} out of range for a {dim}-dimensional chart")]
    Axis { axis: usize, dim: usize },
}

/// A closed-below interval with an open or closed upper end. Infinite ends are allowed.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Interval {
    pub lower: f64,
    pub upper: f64,
    pub upper_closed: bool,
}

impl Interval {
    pub fn closed(lower: f64, upper: f64) -> Self {
        Interval {
            lower,
            upper,
            upper_closed: true,
        }
    }

    pub fn half_open(lower: f64, upper: f64) -> Self {
        Interval {
            lower,
            upper,
            upper_closed: false,
        }
    }

    pub fn unbounded() -> Self {
        Interval::closed(f64::NEG_INFINITY, f64::INFINITY)
    }

    pub fn contains(&self, x: f64) -> bool {
        x >= self.lower && if self.upper_closed { x <= self.upper } else { x < self.upper }
    }

    /// True when `[x - reach, x + reach]` lies inside the interval.
    pub fn contains_span(&self, x: f64, reach: f64) -> bool {
        self.contains(x - reach) && self.contains(x + reach)
    }

    pub fn is_finite(&self) -> bool {
        self.lower.is_finite() && self.upper.is_finite()
    }

    pub fn midpoint(&self) -> f64 {
        if self.is_finite() {
            0.5 * (self.lower + self.upper)
        } else if self.lower.is_finite() {
            self.lower + 1.0
        } else if self.upper.is_finite() {
            self.upper - 1.0
        } else {
            0.0
        }
    }
}

/// A coordinate value near which a chart loses rank.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SingularBand {
    pub axis: usize,
    pub value: f64,
    pub half_width: f64,
}

/// A real coordinate chart: named axes with bounds.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Chart {
    pub id: String,
    pub axes: Vec<String>,
    pub bounds: Vec<Interval>,
    pub singular: Vec<SingularBand>,
}

impl Chart {
    pub fn new(id: impl Into<String>, axes: &[&str], bounds: Vec<Interval>) -> Self {
        assert_eq!(axes.len(), bounds.len());
        Chart {
            id: id.into(),
            axes: axes.iter().map(|s| s.to_string()).collect(),
            bounds,
            singular: Vec::new(),
        }
    }

    pub fn unbounded(id: impl Into<String>, axes: &[&str]) -> Self {
        let bounds = vec![Interval::unbounded(); axes.len()];
        Chart::new(id, axes, bounds)
    }

    pub fn with_singular(mut self, axis: usize, value: f64, half_width: f64) -> Self {
        self.singular.push(SingularBand {
            axis,
            value,
            half_width,
        });
        self
    }

    pub fn dim(&self) -> usize {
        self.axes.len()
    }

    pub fn axis_index(&self, name: &str) -> Option<usize> {
        self.axes.iter().position(|a| a == name)
    }

    pub fn check_arity(&self, coords: &[f64]) -> Result<(), DomainError> {
        if coords.len() != self.dim() {
            return Err(DomainError::Arity {
                expected: self.dim(),
                got: coords.len(),
            });
        }
        if let Some(axis) = coords.iter().position(|x| !x.is_finite()) {
            return Err(DomainError::NonFinite { axis });
        }
        Ok(())
    }

    pub fn check_point(&self, coords: &[f64]) -> Result<(), DomainError> {
        self.check_arity(coords)?;
        for (axis, (&x, b)) in coords.iter().zip(&self.bounds).enumerate() {
            if !b.contains(x) {
                return Err(self.out_of_bounds(axis, x));
            }
        }
        Ok(())
    }

    pub(crate) fn out_of_bounds(&self, axis: usize, value: f64) -> DomainError {
        let b = self.bounds[axis];
        DomainError::OutOfBounds {
            name: self.axes[axis].clone(),
            value,
            lower: b.lower,
            upper: b.upper,
            upper_closed: b.upper_closed,
        }
    }

    /// True when `coords` falls inside any singular band.
    pub fn near_singularity(&self, coords: &[f64]) -> bool {
        self.singular
            .iter()
            .any(|s| (coords[s.axis] - s.value).abs() < s.half_width)
    }
}

/// A point in a chart.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ParameterPoint {
    pub chart: String,
    pub coords: Vec<f64>,
}

impl ParameterPoint {
    pub fn new(chart: &Chart, coords: Vec<f64>) -> Result<Self, DomainError> {
        chart.check_arity(&coords)?;
        Ok(ParameterPoint {
            chart: chart.id.clone(),
            coords,
        })
    }
}
