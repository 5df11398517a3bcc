//! Composite Simpson quadrature on uniform grids.

use crate::error::{FransonError, Result};

/// Default grid size for spectral integrals.
pub const DEFAULT_POINTS: usize = (1 << 14) + 1;

/// A closed uniform grid `[lo, hi]` with `n` points, `n ≡ 1 (mod 4)` so that
/// both the full grid and its every-other-point subgrid admit Simpson's rule.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct UniformGrid {
    lo: f64,
    hi: f64,
    n: usize,
}

impl UniformGrid {
    pub fn new(lo: f64, hi: f64, n: usize) -> Result<Self> {
        if !(lo.is_finite() && hi.is_finite()) || hi <= lo {
            return Err(FransonError::Configuration(format!(
                "grid bounds must be finite with lo < hi, got [{lo}, {hi}]"
            )));
        }
        if n < 5 || (n - 1) % 4 != 0 {
            return Err(FransonError::Configuration(format!(
                "grid size must be 4k+1 with k >= 1, got {n}"
            )));
        }
        Ok(Self { lo, hi, n })
    }

    pub fn lo(&self) -> f64 {
        self.lo
    }

    pub fn hi(&self) -> f64 {
        self.hi
    }

    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn step(&self) -> f64 {
        (self.hi - self.lo) / (self.n - 1) as f64
    }

    /// Grid abscissa `i`. Grids centred on zero are sampled so that point
    /// `i` and point `n-1-i` are exact negatives of each other.
    pub fn point(&self, i: usize) -> f64 {
        let last = (self.n - 1) as f64;
        if self.lo == -self.hi {
            self.hi * ((2 * i) as f64 - last) / last
        } else if i == self.n - 1 {
            self.hi
        } else {
            self.lo + (self.hi - self.lo) * (i as f64 / last)
        }
    }

    pub fn points(&self) -> impl ExactSizeIterator<Item = f64> + '_ {
        (0..self.n).map(|i| self.point(i))
    }

    /// Simpson weights (including the step) for the full grid.
    pub fn simpson_weights(&self) -> Vec<f64> {
        simpson_weights(self.n, self.step())
    }
}

/// Composite Simpson weights for `n` (odd) equally spaced samples.
pub fn simpson_weights(n: usize, h: f64) -> Vec<f64> {
    debug_assert!(n >= 3 && n % 2 == 1);
    let third = h / 3.0;
    (0..n)
        .map(|i| {
            if i == 0 || i == n - 1 {
                third
            } else if i % 2 == 1 {
                4.0 * third
            } else {
                2.0 * third
            }
        })
        .collect()
}

/// Simpson estimates on the full grid and on the every-other-point subgrid,
/// for samples `values` taken on a grid of step `h`.
pub fn simpson_pair(values: &[f64], h: f64) -> (f64, f64) {
    let n = values.len();
    debug_assert!(n >= 5 && (n - 1) % 4 == 0);
    let fine: f64 = simpson_weights(n, h)
        .iter()
        .zip(values)
        .map(|(w, v)| w * v)
        .sum();
    let coarse_n = (n - 1) / 2 + 1;
    let coarse: f64 = simpson_weights(coarse_n, 2.0 * h)
        .iter()
        .zip(values.iter().step_by(2))
        .map(|(w, v)| w * v)
        .sum();
    (fine, coarse)
}

/// Richardson error estimate for composite Simpson: `|I_h − I_2h| / 15`.
pub fn richardson_error(fine: f64, coarse: f64) -> f64 {
    (fine - coarse).abs() / 15.0
}
