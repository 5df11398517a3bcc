//! Franson coincidence rate and two-photon interference visibility.
//!
//! In the cw-pump limit the post-selected coincidence rate reduces to a
//! single spectral integral
//!
//! ```text
//! C(φ̃) = ∫ dΩ S(Ω) cos²[(φ̃ + φ_p − Φ_s(Ω) − Φ_i(−Ω)) / 2]
//! ```
//!
//! where `Φ_s`, `Φ_i` are the differential dispersion phases of the two
//! interferometers and `φ_p` is the pump phase `ω_pΔT` folded mod 2π.
//! Dispersion between the source and the interferometers multiplies both
//! interfering amplitudes by the same phase and never enters `C`.

use std::f64::consts::TAU;

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::dispersion::{stack_moments, DifferentialDispersion, PathStack};
use crate::error::{FransonError, Result};
use crate::quadrature::{richardson_error, simpson_pair};
use crate::spectra::{Detuning, JointSpectrum};

/// Largest tolerated difference between the two interferometer delays, ns.
pub const MAX_DELAY_MISMATCH_NS: f64 = 1e-3;

/// Minimum number of coarse phase samples in a sweep.
pub const SWEEP_POINTS: usize = 720;

const NORMALIZATION_TOLERANCE: f64 = 1e-9;

/// One unbalanced Mach-Zehnder interferometer.
#[derive(Debug, Clone, PartialEq)]
pub struct MziConfig {
    pub long: PathStack,
    pub short: PathStack,
    /// Long-minus-short propagation delay, ns.
    pub delta_t_ns: f64,
    /// Phase control setting, radians.
    pub phase: f64,
}

impl MziConfig {
    pub fn new(long: PathStack, short: PathStack, delta_t_ns: f64, phase: f64) -> Result<Self> {
        if !(delta_t_ns > 0.0 && delta_t_ns.is_finite()) {
            return Err(FransonError::Configuration(format!(
                "interferometer delay must be positive, got {delta_t_ns} ns"
            )));
        }
        if !phase.is_finite() {
            return Err(FransonError::Configuration("phase must be finite".into()));
        }
        Ok(Self {
            long,
            short,
            delta_t_ns,
            phase,
        })
    }

    pub fn differential(&self) -> DifferentialDispersion {
        stack_moments(&self.long, &self.short)
    }
}

/// The full two-arm experiment.
#[derive(Debug, Clone)]
pub struct FransonConfig {
    pub signal_arm: MziConfig,
    pub idler_arm: MziConfig,
    pub spectrum: JointSpectrum,
    /// `ω_pΔT` mod 2π.
    pub pump_phase_offset: f64,
    pub source_common_dispersion: DifferentialDispersion,
}

impl FransonConfig {
    pub fn new(
        signal_arm: MziConfig,
        idler_arm: MziConfig,
        spectrum: JointSpectrum,
    ) -> Result<Self> {
        let mismatch = (signal_arm.delta_t_ns - idler_arm.delta_t_ns).abs();
        if mismatch > MAX_DELAY_MISMATCH_NS {
            return Err(FransonError::Configuration(format!(
                "interferometer delays differ by {:.3} ps, more than the 1 ps coherence limit",
                mismatch * 1e3
            )));
        }
        Ok(Self {
            signal_arm,
            idler_arm,
            spectrum,
            pump_phase_offset: 0.0,
            source_common_dispersion: DifferentialDispersion::ZERO,
        })
    }

    pub fn with_pump_phase_offset(mut self, offset: f64) -> Self {
        self.pump_phase_offset = offset;
        self
    }

    pub fn with_source_dispersion(mut self, d: DifferentialDispersion) -> Self {
        self.source_common_dispersion = d;
        self
    }

    /// Sets the phase controls so that `φ₁ + φ₂ = phi_tilde`.
    pub fn with_phase_sum(mut self, phi_tilde: f64) -> Self {
        self.signal_arm.phase = phi_tilde;
        self.idler_arm.phase = 0.0;
        self
    }

    pub fn signal_dispersion(&self) -> DifferentialDispersion {
        self.signal_arm.differential()
    }

    pub fn idler_dispersion(&self) -> DifferentialDispersion {
        self.idler_arm.differential()
    }

    /// Current `φ̃ = φ₁ + φ₂`.
    pub fn phase_sum(&self) -> f64 {
        self.signal_arm.phase + self.idler_arm.phase
    }

    /// Mean interferometer delay, ns.
    pub fn delta_t_ns(&self) -> f64 {
        0.5 * (self.signal_arm.delta_t_ns + self.idler_arm.delta_t_ns)
    }

    /// `Φ_s(Ω) + Φ_i(−Ω)`: the idler sits at the mirrored detuning.
    pub fn total_phase(&self, omega: Detuning) -> f64 {
        self.signal_dispersion().phase(omega) + self.idler_dispersion().phase(-omega)
    }

    fn total_phases(&self) -> Vec<f64> {
        let (signal, idler) = (self.signal_dispersion(), self.idler_dispersion());
        self.spectrum
            .grid()
            .points()
            .map(|w| signal.phase(Detuning(w)) + idler.phase(Detuning(-w)))
            .collect()
    }

    fn check_normalized(&self) -> Result<()> {
        let integral = self.spectrum.integral();
        if (integral - 1.0).abs() > NORMALIZATION_TOLERANCE {
            return Err(FransonError::Contract(format!(
                "spectrum integrates to {integral}, expected 1"
            )));
        }
        Ok(())
    }
}

pub fn total_phase(cfg: &FransonConfig, omega: Detuning) -> f64 {
    cfg.total_phase(omega)
}

fn rate_with(weights: &[f64], phases: &[f64], psi: f64) -> f64 {
    weights
        .iter()
        .zip(phases)
        .map(|(w, theta)| {
            let c = (0.5 * (psi - theta)).cos();
            w * c * c
        })
        .sum()
}

/// Normalized coincidence rate at phase sum `phi_tilde`, in `[0, 1]`.
pub fn coincidence_rate(cfg: &FransonConfig, phi_tilde: f64) -> Result<f64> {
    cfg.check_normalized()?;
    let phases = cfg.total_phases();
    Ok(rate_with(
        cfg.spectrum.weights(),
        &phases,
        phi_tilde + cfg.pump_phase_offset,
    ))
}

/// Coincidence fringe sampled at `points` uniform phases over `[0, 2π)`.
pub fn fringe(cfg: &FransonConfig, points: usize) -> Result<Vec<(f64, f64)>> {
    cfg.check_normalized()?;
    let phases = cfg.total_phases();
    let weights = cfg.spectrum.weights();
    Ok((0..points)
        .into_par_iter()
        .map(|k| {
            let phi = TAU * k as f64 / points as f64;
            (
                phi,
                rate_with(weights, &phases, phi + cfg.pump_phase_offset),
            )
        })
        .collect())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum VisibilityMethod {
    /// Scan φ̃ and refine the extrema by golden-section search.
    #[serde(rename = "sweep")]
    PhaseSweep,
    /// `V = |∫ S(Ω) exp(−i·Φ(Ω)) dΩ|`.
    #[serde(rename = "integral")]
    ComplexIntegral,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct VisibilityResult {
    pub visibility: f64,
    pub c_max: f64,
    pub c_min: f64,
    /// φ̃ at which the fringe peaks, in `[0, 2π)`.
    pub phase_at_max: f64,
    pub method: VisibilityMethod,
    /// Richardson estimate of the relative quadrature error.
    pub quadrature_error: f64,
}

pub fn visibility(cfg: &FransonConfig, method: VisibilityMethod) -> Result<VisibilityResult> {
    cfg.check_normalized()?;
    let phases = cfg.total_phases();
    let quadrature_error = overlap_error(cfg, &phases);
    let mut result = match method {
        VisibilityMethod::ComplexIntegral => by_complex_integral(cfg, &phases),
        VisibilityMethod::PhaseSweep => by_phase_sweep(cfg, &phases),
    };
    result.quadrature_error = quadrature_error;
    Ok(result)
}

/// Spectral overlap `∫ S(Ω) e^{−iΦ(Ω)} dΩ`.
fn overlap(weights: &[f64], phases: &[f64]) -> Complex64 {
    weights
        .iter()
        .zip(phases)
        .map(|(w, theta)| Complex64::from_polar(*w, -theta))
        .sum()
}

fn overlap_error(cfg: &FransonConfig, phases: &[f64]) -> f64 {
    let h = cfg.spectrum.grid().step();
    let density = cfg.spectrum.density();
    let re: Vec<f64> = density
        .iter()
        .zip(phases)
        .map(|(d, t)| d * t.cos())
        .collect();
    let im: Vec<f64> = density
        .iter()
        .zip(phases)
        .map(|(d, t)| -d * t.sin())
        .collect();
    let (re_f, re_c) = simpson_pair(&re, h);
    let (im_f, im_c) = simpson_pair(&im, h);
    let magnitude = re_f.hypot(im_f).max(f64::MIN_POSITIVE);
    richardson_error(re_f, re_c).hypot(richardson_error(im_f, im_c)) / magnitude
}

fn by_complex_integral(cfg: &FransonConfig, phases: &[f64]) -> VisibilityResult {
    let z = overlap(cfg.spectrum.weights(), phases);
    let v = z.norm().min(1.0);
    // C(φ̃) = (1 + Re[e^{i(φ̃+φ_p)} z]) / 2 peaks where φ̃ + φ_p + arg z = 0.
    let phase_at_max = (-z.arg() - cfg.pump_phase_offset).rem_euclid(TAU);
    VisibilityResult {
        visibility: v,
        c_max: 0.5 * (1.0 + v),
        c_min: 0.5 * (1.0 - v),
        phase_at_max,
        method: VisibilityMethod::ComplexIntegral,
        quadrature_error: 0.0,
    }
}

fn by_phase_sweep(cfg: &FransonConfig, phases: &[f64]) -> VisibilityResult {
    let weights = cfg.spectrum.weights();
    let offset = cfg.pump_phase_offset;
    let rate = |phi: f64| rate_with(weights, phases, phi + offset);
    let step = TAU / SWEEP_POINTS as f64;
    let samples: Vec<f64> = (0..SWEEP_POINTS)
        .into_par_iter()
        .map(|k| rate(k as f64 * step))
        .collect();
    let (i_max, i_min) = samples
        .iter()
        .enumerate()
        .fold((0, 0), |(imax, imin), (i, &v)| {
            (
                if v > samples[imax] { i } else { imax },
                if v < samples[imin] { i } else { imin },
            )
        });
    let center_max = i_max as f64 * step;
    let center_min = i_min as f64 * step;
    let phi_max = golden_section(|p| -rate(p), center_max - step, center_max + step);
    let phi_min = golden_section(rate, center_min - step, center_min + step);
    let c_max = rate(phi_max).max(samples[i_max]);
    let c_min = rate(phi_min).min(samples[i_min]).max(0.0);
    VisibilityResult {
        visibility: (c_max - c_min) / (c_max + c_min),
        c_max,
        c_min,
        phase_at_max: phi_max.rem_euclid(TAU),
        method: VisibilityMethod::PhaseSweep,
        quadrature_error: 0.0,
    }
}

/// Minimizes a unimodal `f` on `[a, b]`.
fn golden_section(f: impl Fn(f64) -> f64, mut a: f64, mut b: f64) -> f64 {
    let inv_phi = (5f64.sqrt() - 1.0) / 2.0;
    let mut c = b - inv_phi * (b - a);
    let mut d = a + inv_phi * (b - a);
    let (mut fc, mut fd) = (f(c), f(d));
    while (b - a).abs() > 1e-10 {
        if fc < fd {
            b = d;
            d = c;
            fd = fc;
            c = b - inv_phi * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + inv_phi * (b - a);
            fd = f(d);
        }
    }
    0.5 * (a + b)
}

/// Closed-form visibility for a Gaussian spectrum of width `sigma` under a
/// purely quadratic total phase `a·Ω²/2`: `(1 + a²σ⁴)^(−1/4)`.
pub fn gaussian_quadratic_visibility(sigma: f64, a_ps2: f64) -> f64 {
    (1.0 + a_ps2 * a_ps2 * sigma.powi(4)).powf(-0.25)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dispersion::{FiberSegment, FiberSpec};
    use crate::spectra::{make_spectrum, AnalyticShape};
    use std::f64::consts::PI;

    fn arm(extra_smf_mm: f64) -> MziConfig {
        let short = PathStack::single(FiberSpec::smf(), 1900.0).unwrap();
        let long = PathStack::single(FiberSpec::smf(), 1900.0 + extra_smf_mm).unwrap();
        MziConfig::new(long, short, 4.77, 0.0).unwrap()
    }

    fn dispersion_free() -> FransonConfig {
        let s = make_spectrum(AnalyticShape::Sinc2, 1.6, 1560.0, None).unwrap();
        FransonConfig::new(arm(0.0), arm(0.0), s).unwrap()
    }

    #[test]
    fn cos2_law_without_dispersion() {
        let cfg = dispersion_free();
        assert!((coincidence_rate(&cfg, 0.0).unwrap() - 1.0).abs() < 1e-12);
        assert!(coincidence_rate(&cfg, PI).unwrap().abs() < 1e-12);
        assert!((coincidence_rate(&cfg, PI / 2.0).unwrap() - 0.5).abs() < 1e-12);
        let shifted = cfg.clone().with_pump_phase_offset(PI);
        assert!(coincidence_rate(&shifted, 0.0).unwrap().abs() < 1e-12);
    }

    #[test]
    fn zero_dispersion_gives_unit_visibility() {
        let cfg = dispersion_free();
        for m in [
            VisibilityMethod::PhaseSweep,
            VisibilityMethod::ComplexIntegral,
        ] {
            let r = visibility(&cfg, m).unwrap();
            assert!((r.visibility - 1.0).abs() < 1e-9, "{m:?}: {}", r.visibility);
            assert!(r.phase_at_max.min(TAU - r.phase_at_max) < 1e-6);
        }
    }

    #[test]
    fn total_phase_examples() {
        let s = make_spectrum(AnalyticShape::Sinc2, 1.6, 1560.0, None).unwrap();
        // idler arm built to +2.2018e-2 ps² is approximated with a long SMF short path
        let plus = {
            let long = PathStack::single(FiberSpec::smf(), 1900.0).unwrap();
            let short = PathStack::single(FiberSpec::smf(), 1900.0 + 978.6).unwrap();
            MziConfig::new(long, short, 4.77, 0.0).unwrap()
        };
        let nonlocal = FransonConfig::new(arm(978.6), plus, s.clone()).unwrap();
        assert_eq!(nonlocal.total_phase(Detuning(1.0)), 0.0);

        let both = FransonConfig::new(arm(978.6), arm(978.6), s).unwrap();
        let expected = 2.0 * 0.5 * (-22.5 * 978.6 * 1e-6);
        assert!((both.total_phase(Detuning(1.0)) - expected).abs() < 1e-15);
        assert!((expected + 2.2018e-2).abs() < 1e-6);
    }

    #[test]
    fn mismatched_delays_are_rejected() {
        let s = make_spectrum(AnalyticShape::Gaussian, 1.6, 1560.0, None).unwrap();
        let mut idler = arm(0.0);
        idler.delta_t_ns = 4.7715;
        assert!(matches!(
            FransonConfig::new(arm(0.0), idler, s),
            Err(FransonError::Configuration(_))
        ));
        assert!(MziConfig::new(PathStack::default(), PathStack::default(), 0.0, 0.0).is_err());
    }

    #[test]
    fn unnormalized_spectrum_is_contract_violation() {
        let mut cfg = dispersion_free();
        cfg.spectrum.scale_weights_for_test(2.0);
        assert!(matches!(
            coincidence_rate(&cfg, 0.0),
            Err(FransonError::Contract(_))
        ));
        assert!(visibility(&cfg, VisibilityMethod::ComplexIntegral).is_err());
    }

    #[test]
    fn golden_section_finds_parabola_minimum() {
        let x = golden_section(|x| (x - 0.3).powi(2), 0.0, 1.0);
        assert!((x - 0.3).abs() < 1e-9);
    }

    #[test]
    fn third_order_cancels_between_arms() {
        let s = make_spectrum(AnalyticShape::Sinc2, 1.6, 1560.0, None).unwrap();
        let fiber = FiberSpec::new("b3", 0.0).with_beta3(50.0);
        let mk = || {
            let long = PathStack::new(vec![FiberSegment::new(fiber.clone(), 1000.0).unwrap()]);
            MziConfig::new(long, PathStack::default(), 4.77, 0.0).unwrap()
        };
        let cfg = FransonConfig::new(mk(), mk(), s).unwrap();
        assert_eq!(cfg.total_phase(Detuning(3.0)), 0.0);
        let v = visibility(&cfg, VisibilityMethod::ComplexIntegral).unwrap();
        assert!((v.visibility - 1.0).abs() < 1e-6);
    }
}
