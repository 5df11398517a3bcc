//! Accidental-coincidence penalty on raw visibility and CHSH significance.

use std::f64::consts::SQRT_2;

use crate::error::{FransonError, Result};

/// Multi-pair emission, parameterized by the mean number of generated
/// pairs per detector gate.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NoiseModel {
    alpha: f64,
}

impl NoiseModel {
    pub fn new(alpha: f64) -> Result<Self> {
        if !(0.0..1.0).contains(&alpha) {
            return Err(FransonError::Domain(format!(
                "mean pairs per gate must lie in [0, 1), got {alpha}"
            )));
        }
        Ok(Self { alpha })
    }

    pub fn noiseless() -> Self {
        Self { alpha: 0.0 }
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }
}

/// Raw visibility `V·(1 − α)` after accidentals.
pub fn observed_visibility(v_intrinsic: f64, noise: &NoiseModel) -> Result<f64> {
    if !(0.0..=1.0).contains(&v_intrinsic) {
        return Err(FransonError::Domain(format!(
            "visibility must lie in [0, 1], got {v_intrinsic}"
        )));
    }
    Ok(v_intrinsic * (1.0 - noise.alpha))
}

pub fn alpha_sweep(v_intrinsic: f64, alphas: &[f64]) -> Result<Vec<(f64, f64)>> {
    alphas
        .iter()
        .map(|&a| observed_visibility(v_intrinsic, &NoiseModel::new(a)?).map(|v| (a, v)))
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LineFit {
    pub slope: f64,
    pub intercept: f64,
}

/// Ordinary least-squares line through `(x, y)` points.
pub fn fit_line(points: &[(f64, f64)]) -> Result<LineFit> {
    if points.len() < 2 {
        return Err(FransonError::Statistics(format!(
            "line fit needs at least 2 points, got {}",
            points.len()
        )));
    }
    let n = points.len() as f64;
    let mean_x = points.iter().map(|p| p.0).sum::<f64>() / n;
    let mean_y = points.iter().map(|p| p.1).sum::<f64>() / n;
    let sxx: f64 = points.iter().map(|p| (p.0 - mean_x).powi(2)).sum();
    let sxy: f64 = points.iter().map(|p| (p.0 - mean_x) * (p.1 - mean_y)).sum();
    if sxx == 0.0 {
        return Err(FransonError::Statistics(
            "line fit needs at least two distinct abscissae".into(),
        ));
    }
    let slope = sxy / sxx;
    Ok(LineFit {
        slope,
        intercept: mean_y - slope * mean_x,
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BellResult {
    pub s_value: f64,
    /// Standard deviations above the local bound `S = 2`.
    pub sigma_violation: f64,
}

/// CHSH value `S = 2√2·V` and its distance from `S = 2` in units of the
/// propagated uncertainty `2√2·σ_V`.
pub fn bell_significance(v: f64, sigma_v: f64) -> Result<BellResult> {
    if !(sigma_v > 0.0 && sigma_v.is_finite()) {
        return Err(FransonError::Domain(format!(
            "visibility uncertainty must be positive, got {sigma_v}"
        )));
    }
    if !(0.0..=1.0).contains(&v) {
        return Err(FransonError::Domain(format!(
            "visibility must lie in [0, 1], got {v}"
        )));
    }
    let s_value = 2.0 * SQRT_2 * v;
    Ok(BellResult {
        s_value,
        sigma_violation: (s_value - 2.0) / (2.0 * SQRT_2 * sigma_v),
    })
}
