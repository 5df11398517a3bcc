//! Biphoton spectral densities as functions of angular-frequency detuning
//! from degeneracy.
//!
//! With a monochromatic pump the idler detuning is exactly the negative of
//! the signal detuning, so the joint spectrum collapses to a single density
//! `S(Ω)` over the signal detuning. Densities are sampled once on a uniform
//! grid at construction and normalized with the same Simpson weights used by
//! every downstream integral, so `Σ wᵢ·S(Ωᵢ) = 1` to rounding.

use std::f64::consts::PI;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{FransonError, Result};
use crate::quadrature::{UniformGrid, DEFAULT_POINTS};
use crate::units::{gaussian_fwhm_per_sigma, C_NM_PER_PS};

/// Degenerate wavelength used when none is given, nm.
pub const DEFAULT_CENTER_NM: f64 = 1560.0;

/// Default half-width of the sinc² window, in nm either side of the centre.
pub const SINC2_DEFAULT_HALF_WINDOW_NM: f64 = 15.0;

/// Default half-width of the Gaussian window, in standard deviations.
pub const GAUSSIAN_DEFAULT_HALF_WINDOW_SIGMAS: f64 = 6.0;

/// Argument at which `sinc²(x) = 1/2`.
pub const SINC2_HALF_MAX_ARG: f64 = 1.391_557_378_251_510_3;

/// Angular-frequency detuning from degeneracy, rad/ps.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd, Serialize, Deserialize)]
pub struct Detuning(pub f64);

impl Detuning {
    pub fn rad_per_ps(self) -> f64 {
        self.0
    }
}

impl std::ops::Neg for Detuning {
    type Output = Detuning;
    fn neg(self) -> Detuning {
        Detuning(-self.0)
    }
}

/// Exact conversion of a wavelength to a detuning from `center_nm`.
/// Shorter wavelengths map to positive detuning.
pub fn wavelength_to_detuning(lambda_nm: f64, center_nm: f64) -> Result<Detuning> {
    if !(lambda_nm > 0.0 && lambda_nm.is_finite()) || !(center_nm > 0.0 && center_nm.is_finite()) {
        return Err(FransonError::Domain(format!(
            "wavelengths must be positive and finite, got lambda={lambda_nm} nm, center={center_nm} nm"
        )));
    }
    Ok(Detuning(
        2.0 * PI * C_NM_PER_PS * (1.0 / lambda_nm - 1.0 / center_nm),
    ))
}

/// Inverse of [`wavelength_to_detuning`].
pub fn detuning_to_wavelength(omega: Detuning, center_nm: f64) -> f64 {
    1.0 / (omega.0 / (2.0 * PI * C_NM_PER_PS) + 1.0 / center_nm)
}

/// Width in rad/ps of a band `width_nm` wide centred on `center_nm`,
/// using the exact conversion at both band edges. Returns infinity when
/// the band reaches zero wavelength.
pub fn bandwidth_to_radps(width_nm: f64, center_nm: f64) -> f64 {
    let half = 0.5 * width_nm;
    if half >= center_nm {
        return f64::INFINITY;
    }
    2.0 * PI * C_NM_PER_PS * (1.0 / (center_nm - half) - 1.0 / (center_nm + half))
}

/// Inverse of [`bandwidth_to_radps`]: the symmetric wavelength band (nm)
/// whose edges are `width_radps` apart in detuning.
pub fn radps_to_bandwidth(width_radps: f64, center_nm: f64) -> f64 {
    // width = K(1/(λ−h) − 1/(λ+h)) = 2Kh/(λ² − h²); the quadratic root in
    // rationalized form avoids cancellation.
    let k = 2.0 * PI * C_NM_PER_PS;
    let w = width_radps;
    let wl = w * center_nm;
    2.0 * wl * center_nm / (k + k.hypot(wl))
}

/// Analytic line shapes accepted by [`make_spectrum`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum AnalyticShape {
    Sinc2,
    Gaussian,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SpectrumModel {
    Sinc2,
    Gaussian,
    Tabulated,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum FilterShape {
    Gaussian,
    FlatTop,
}

#[derive(Debug, Clone, PartialEq)]
enum LineShape {
    Sinc2 { b: f64 },
    Gaussian { sigma: f64 },
    Tabulated { omegas: Vec<f64>, values: Vec<f64> },
}

impl LineShape {
    fn eval(&self, omega: f64) -> f64 {
        match self {
            LineShape::Sinc2 { b } => {
                let x = b * omega.abs();
                if x == 0.0 {
                    1.0
                } else {
                    let s = x.sin() / x;
                    s * s
                }
            }
            LineShape::Gaussian { sigma } => (-0.5 * (omega / sigma).powi(2)).exp(),
            LineShape::Tabulated { omegas, values } => interpolate(omegas, values, omega),
        }
    }
}

fn interpolate(xs: &[f64], ys: &[f64], x: f64) -> f64 {
    let (first, last) = (xs[0], xs[xs.len() - 1]);
    if x < first || x > last {
        return 0.0;
    }
    // first index with xs[idx] >= x
    let idx = xs.partition_point(|&v| v < x);
    if idx == 0 {
        return ys[0];
    }
    let (x0, x1) = (xs[idx - 1], xs[idx]);
    let t = (x - x0) / (x1 - x0);
    ys[idx - 1] + t * (ys[idx] - ys[idx - 1])
}

#[derive(Debug, Clone, Copy, PartialEq)]
struct Bandpass {
    shape: FilterShape,
    /// Full width at half transmission, rad/ps.
    fwhm: f64,
}

impl Bandpass {
    fn transmission(&self, omega: f64) -> f64 {
        if self.fwhm.is_infinite() {
            return 1.0;
        }
        match self.shape {
            FilterShape::FlatTop => {
                if omega.abs() <= 0.5 * self.fwhm {
                    1.0
                } else {
                    0.0
                }
            }
            FilterShape::Gaussian => {
                let sigma = self.fwhm / gaussian_fwhm_per_sigma();
                (-0.5 * (omega / sigma).powi(2)).exp()
            }
        }
    }
}

/// Normalized biphoton spectral density over signal detuning.
#[derive(Debug, Clone)]
pub struct JointSpectrum {
    model: SpectrumModel,
    center_nm: f64,
    nominal_fwhm_nm: f64,
    span: f64,
    shape: LineShape,
    filters: Vec<Bandpass>,
    grid: UniformGrid,
    /// Raw (filtered, unnormalized) shape integral; divides `shape × filters`.
    norm: f64,
    density: Vec<f64>,
    weights: Vec<f64>,
    passband_fraction: f64,
}

/// Builds an analytic sinc² or Gaussian spectrum.
///
/// `span` is the half-width of the window in rad/ps; `None` selects
/// ±15 nm for sinc² and ±6σ for the Gaussian. The sinc² visibility penalty
/// is carried by the side lobes, so results depend on this window.
pub fn make_spectrum(
    shape: AnalyticShape,
    fwhm_nm: f64,
    center_nm: f64,
    span: Option<f64>,
) -> Result<JointSpectrum> {
    make_spectrum_with_points(shape, fwhm_nm, center_nm, span, DEFAULT_POINTS)
}

pub fn make_spectrum_with_points(
    shape: AnalyticShape,
    fwhm_nm: f64,
    center_nm: f64,
    span: Option<f64>,
    points: usize,
) -> Result<JointSpectrum> {
    if !(fwhm_nm > 0.0 && fwhm_nm.is_finite()) {
        return Err(FransonError::Domain(format!(
            "spectral FWHM must be positive, got {fwhm_nm} nm"
        )));
    }
    if !(center_nm > 0.0 && center_nm.is_finite()) {
        return Err(FransonError::Domain(format!(
            "center wavelength must be positive, got {center_nm} nm"
        )));
    }
    let fwhm = bandwidth_to_radps(fwhm_nm, center_nm);
    if !fwhm.is_finite() {
        return Err(FransonError::Domain(format!(
            "spectral FWHM {fwhm_nm} nm is wider than twice the center wavelength"
        )));
    }
    let (line, model, default_span, main_lobe) = match shape {
        AnalyticShape::Sinc2 => {
            let b = SINC2_HALF_MAX_ARG / (0.5 * fwhm);
            let window = bandwidth_to_radps(2.0 * SINC2_DEFAULT_HALF_WINDOW_NM, center_nm) / 2.0;
            (LineShape::Sinc2 { b }, SpectrumModel::Sinc2, window, PI / b)
        }
        AnalyticShape::Gaussian => {
            let sigma = fwhm / gaussian_fwhm_per_sigma();
            (
                LineShape::Gaussian { sigma },
                SpectrumModel::Gaussian,
                GAUSSIAN_DEFAULT_HALF_WINDOW_SIGMAS * sigma,
                0.5 * fwhm,
            )
        }
    };
    let span = span.unwrap_or(default_span);
    if !(span.is_finite() && span > fwhm && span >= main_lobe) {
        return Err(FransonError::Configuration(format!(
            "span ±{span:.4} rad/ps does not contain the main lobe (FWHM {fwhm:.4} rad/ps, lobe half-width {main_lobe:.4} rad/ps)"
        )));
    }
    let grid = UniformGrid::new(-span, span, points)?;
    JointSpectrum::build(model, center_nm, fwhm_nm, span, line, Vec::new(), grid, 1.0)
}

/// Builds a spectrum from measured `(wavelength nm, intensity)` rows.
///
/// Intensities are interpolated linearly in detuning, zero outside the
/// sampled range, and renormalized to unit integral.
pub fn load_tabulated(rows: &[(f64, f64)], center_nm: f64) -> Result<JointSpectrum> {
    load_tabulated_with_points(rows, center_nm, DEFAULT_POINTS)
}

pub fn load_tabulated_with_points(
    rows: &[(f64, f64)],
    center_nm: f64,
    points: usize,
) -> Result<JointSpectrum> {
    if rows.len() < 8 {
        return Err(FransonError::Data(format!(
            "tabulated spectrum needs at least 8 rows, got {}",
            rows.len()
        )));
    }
    for (i, &(lambda, intensity)) in rows.iter().enumerate() {
        if !lambda.is_finite() || !intensity.is_finite() {
            return Err(FransonError::Data(format!("row {i}: non-finite value")));
        }
        if intensity < 0.0 {
            return Err(FransonError::Data(format!(
                "row {i}: negative intensity {intensity}"
            )));
        }
    }
    let increasing = rows[1].0 > rows[0].0;
    let monotonic = rows.windows(2).all(|w| {
        if increasing {
            w[1].0 > w[0].0
        } else {
            w[1].0 < w[0].0
        }
    });
    if !monotonic {
        return Err(FransonError::Data(
            "wavelength column must be strictly monotonic".into(),
        ));
    }
    if rows.iter().all(|&(_, v)| v == 0.0) {
        return Err(FransonError::Data("all intensities are zero".into()));
    }

    let mut samples = rows
        .iter()
        .map(|&(lambda, v)| wavelength_to_detuning(lambda, center_nm).map(|d| (d.0, v)))
        .collect::<Result<Vec<_>>>()?;
    samples.sort_by(|a, b| a.0.total_cmp(&b.0));
    let (omegas, values): (Vec<f64>, Vec<f64>) = samples.into_iter().unzip();

    let grid = UniformGrid::new(omegas[0], omegas[omegas.len() - 1], points)?;
    let span = grid.lo().abs().max(grid.hi().abs());
    let line = LineShape::Tabulated { omegas, values };
    let mut spectrum = JointSpectrum::build(
        SpectrumModel::Tabulated,
        center_nm,
        f64::NAN,
        span,
        line,
        Vec::new(),
        grid,
        1.0,
    )?;
    spectrum.nominal_fwhm_nm = radps_to_bandwidth(spectrum.fwhm_radps(), center_nm);
    Ok(spectrum)
}

/// Reads a two-column `wavelength_nm,intensity` CSV. A non-numeric first
/// row is treated as a header; lines starting with `#` are comments.
pub fn read_spectrum_csv(path: &Path) -> Result<Vec<(f64, f64)>> {
    let text = std::fs::read_to_string(path).map_err(|source| FransonError::Io {
        path: path.display().to_string(),
        source,
    })?;
    parse_spectrum_csv(&text)
}

pub fn parse_spectrum_csv(text: &str) -> Result<Vec<(f64, f64)>> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(false)
        .comment(Some(b'#'))
        .trim(csv::Trim::All)
        .from_reader(text.as_bytes());
    let mut rows = Vec::new();
    for (idx, record) in reader.records().enumerate() {
        let record = record.map_err(|e| FransonError::Parse(e.to_string()))?;
        let line = record.position().map(|p| p.line()).unwrap_or(0);
        if record.len() != 2 {
            return Err(FransonError::Parse(format!(
                "line {line}: expected 2 columns, found {}",
                record.len()
            )));
        }
        let parsed = (record[0].parse::<f64>(), record[1].parse::<f64>());
        match parsed {
            (Ok(lambda), Ok(intensity)) => rows.push((lambda, intensity)),
            _ if idx == 0 => continue,
            _ => {
                return Err(FransonError::Parse(format!(
                    "line {line}: cannot parse '{},{}' as numbers",
                    &record[0], &record[1]
                )))
            }
        }
    }
    Ok(rows)
}

/// Multiplies `spectrum` by a band-pass transmission centred on Ω = 0 and
/// renormalizes. The fraction of the incoming density that survives is
/// accumulated into [`JointSpectrum::passband_fraction`].
///
/// A flat-top narrower than the current window re-samples the spectrum on
/// the passband alone, so the filter edges fall on grid end points.
pub fn apply_bandpass(
    spectrum: &JointSpectrum,
    filter_fwhm_nm: f64,
    shape: FilterShape,
) -> Result<JointSpectrum> {
    if filter_fwhm_nm.is_nan() || filter_fwhm_nm <= 0.0 {
        return Err(FransonError::Domain(format!(
            "filter FWHM must be positive, got {filter_fwhm_nm} nm"
        )));
    }
    let filter = Bandpass {
        shape,
        fwhm: bandwidth_to_radps(filter_fwhm_nm, spectrum.center_nm),
    };
    let old = &spectrum.grid;
    let grid = match shape {
        FilterShape::FlatTop if filter.fwhm.is_finite() => {
            let half = 0.5 * filter.fwhm;
            let lo = old.lo().max(-half);
            let hi = old.hi().min(half);
            if hi <= lo {
                return Err(FransonError::Configuration(
                    "flat-top passband does not overlap the spectrum".into(),
                ));
            }
            if lo == old.lo() && hi == old.hi() {
                *old
            } else {
                UniformGrid::new(lo, hi, old.len())?
            }
        }
        _ => *old,
    };

    // Surviving fraction of the incoming normalized density.
    let weights = grid.simpson_weights();
    let surviving: f64 = grid
        .points()
        .zip(&weights)
        .map(|(w_omega, w)| {
            w * spectrum.density_at(Detuning(w_omega)) * filter.transmission(w_omega)
        })
        .sum();
    if surviving.is_nan() || surviving <= 0.0 {
        return Err(FransonError::Configuration(
            "band-pass filter blocks the entire spectrum".into(),
        ));
    }

    let mut filters = spectrum.filters.clone();
    filters.push(filter);
    JointSpectrum::build(
        spectrum.model,
        spectrum.center_nm,
        spectrum.nominal_fwhm_nm,
        spectrum.span,
        spectrum.shape.clone(),
        filters,
        grid,
        spectrum.passband_fraction * surviving,
    )
}

impl JointSpectrum {
    #[allow(clippy::too_many_arguments)]
    fn build(
        model: SpectrumModel,
        center_nm: f64,
        nominal_fwhm_nm: f64,
        span: f64,
        shape: LineShape,
        filters: Vec<Bandpass>,
        grid: UniformGrid,
        passband_fraction: f64,
    ) -> Result<Self> {
        let raw: Vec<f64> = grid
            .points()
            .map(|omega| Self::raw_value(&shape, &filters, omega))
            .collect();
        let simpson = grid.simpson_weights();
        let norm: f64 = raw.iter().zip(&simpson).map(|(v, w)| v * w).sum();
        if !(norm > 0.0 && norm.is_finite()) {
            return Err(FransonError::Data(
                "spectral density has zero integral over its window".into(),
            ));
        }
        let density: Vec<f64> = raw.iter().map(|v| v / norm).collect();
        let weights = density.iter().zip(&simpson).map(|(d, w)| d * w).collect();
        Ok(Self {
            model,
            center_nm,
            nominal_fwhm_nm,
            span,
            shape,
            filters,
            grid,
            norm,
            density,
            weights,
            passband_fraction,
        })
    }

    fn raw_value(shape: &LineShape, filters: &[Bandpass], omega: f64) -> f64 {
        filters
            .iter()
            .fold(shape.eval(omega), |acc, f| acc * f.transmission(omega))
    }

    pub fn model(&self) -> SpectrumModel {
        self.model
    }

    pub fn center_nm(&self) -> f64 {
        self.center_nm
    }

    /// FWHM the spectrum was constructed with (measured, for tabulated data).
    pub fn nominal_fwhm_nm(&self) -> f64 {
        self.nominal_fwhm_nm
    }

    /// Half-width of the construction window, rad/ps.
    pub fn span(&self) -> f64 {
        self.span
    }

    pub fn grid(&self) -> &UniformGrid {
        &self.grid
    }

    pub fn is_filtered(&self) -> bool {
        !self.filters.is_empty()
    }

    /// Density samples on [`Self::grid`].
    pub fn density(&self) -> &[f64] {
        &self.density
    }

    /// Quadrature weights `wᵢ·S(Ωᵢ)`; `Σ weights · f(Ωᵢ)` integrates `f`
    /// against the density.
    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    /// Fraction of the unfiltered flux passed by all applied filters.
    pub fn passband_fraction(&self) -> f64 {
        self.passband_fraction
    }

    /// Normalized density at an arbitrary detuning; zero outside the grid.
    pub fn density_at(&self, omega: Detuning) -> f64 {
        let w = omega.0;
        if w < self.grid.lo() || w > self.grid.hi() {
            return 0.0;
        }
        Self::raw_value(&self.shape, &self.filters, w) / self.norm
    }

    pub fn integral(&self) -> f64 {
        self.weights.iter().sum()
    }

    /// Standard deviation of the Gaussian line shape, if this is one.
    pub fn gaussian_sigma(&self) -> Option<f64> {
        match self.shape {
            LineShape::Gaussian { sigma } => Some(sigma),
            _ => None,
        }
    }

    /// Full width at half maximum of the sampled density, rad/ps.
    ///
    /// Half-maximum crossings are located by linear interpolation; a
    /// density still above half maximum at a window edge crosses there.
    pub fn fwhm_radps(&self) -> f64 {
        let d = &self.density;
        let (peak_idx, peak) =
            d.iter().copied().enumerate().fold(
                (0, f64::MIN),
                |acc, (i, v)| if v > acc.1 { (i, v) } else { acc },
            );
        let half = 0.5 * peak;
        let x = |i: usize| self.grid.point(i);
        let crossing = |inside: usize, outside: usize| {
            let t = (d[inside] - half) / (d[inside] - d[outside]);
            x(inside) + t * (x(outside) - x(inside))
        };
        let left = (0..peak_idx)
            .rev()
            .find(|&i| d[i] < half)
            .map(|i| crossing(i + 1, i))
            .unwrap_or_else(|| self.grid.lo());
        let right = (peak_idx + 1..d.len())
            .find(|&i| d[i] < half)
            .map(|i| crossing(i - 1, i))
            .unwrap_or_else(|| self.grid.hi());
        right - left
    }

    #[cfg(test)]
    pub(crate) fn scale_weights_for_test(&mut self, factor: f64) {
        self.weights.iter_mut().for_each(|w| *w *= factor);
    }

    pub fn fwhm_nm(&self) -> f64 {
        radps_to_bandwidth(self.fwhm_radps(), self.center_nm)
    }
}
