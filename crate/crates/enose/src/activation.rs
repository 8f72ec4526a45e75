//! The log-sigmoid activation, exact and as a precomputed lookup table.
//!
//! Training always differentiates the exact function. The table exists for
//! the light inference path: once trained, a forward pass is a vector-matrix
//! multiply plus an indexed read with one linear interpolation per unit.

use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum TableError {
    #[error("table bounds must satisfy lower < upper, got [{lower}, {upper}]")]
    InvalidBounds { lower: f64, upper: f64 },
    #[error("table needs at least 2 entries, got {entries}")]
    TooFewEntries { entries: usize },
}

/// Logistic function 1 / (1 + e^(-x)).
///
/// The two branches keep the exponential argument non-positive, so neither
/// side overflows anywhere in the finite range.
pub fn log_sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

/// Log-sigmoid sampled at `entries` uniform nodes over [lower, upper].
///
/// Lookups interpolate linearly between the two bracketing nodes; inputs
/// outside the bounds clamp to the first or last entry.
#[derive(Debug, Clone, PartialEq)]
pub struct SigmoidTable {
    lower: f64,
    upper: f64,
    values: Vec<f64>,
}

impl SigmoidTable {
    pub fn new(lower: f64, upper: f64, entries: usize) -> Result<SigmoidTable, TableError> {
        if !lower.is_finite() || !upper.is_finite() || lower >= upper {
            return Err(TableError::InvalidBounds { lower, upper });
        }
        if entries < 2 {
            return Err(TableError::TooFewEntries { entries });
        }
        let step = (upper - lower) / (entries - 1) as f64;
        let values = (0..entries)
            .map(|i| log_sigmoid(lower + step * i as f64))
            .collect();
        Ok(SigmoidTable {
            lower,
            upper,
            values,
        })
    }

    pub fn lower(&self) -> f64 {
        self.lower
    }

    pub fn upper(&self) -> f64 {
        self.upper
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    /// Interpolated sigmoid approximation, clamped at the table edges.
    pub fn lookup(&self, x: f64) -> f64 {
        if x <= self.lower {
            return self.values[0];
        }
        if x >= self.upper {
            return self.values[self.values.len() - 1];
        }
        let step = (self.upper - self.lower) / (self.values.len() - 1) as f64;
        let pos = (x - self.lower) / step;
        let i = (pos as usize).min(self.values.len() - 2);
        let t = pos - i as f64;
        self.values[i] + t * (self.values[i + 1] - self.values[i])
    }
}
