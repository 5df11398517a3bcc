//! Experiment description files and the built-in scenario presets.
//!
//! A config is a TOML document with `[spectrum]`, `[signal_arm]`,
//! `[idler_arm]`, `[noise]`, `[detector]` and `[run]` sections plus optional
//! `[[fiber]]` catalog entries. Unknown keys are rejected.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::designer::{solve_lengths, DesignProblem};
use crate::dispersion::{DifferentialDispersion, FiberCatalog, FiberSegment, FiberSpec, PathStack};
use crate::error::{FransonError, Result};
use crate::interference::{FransonConfig, MziConfig, VisibilityMethod};
use crate::montecarlo::{uniform_phases, DetectorModel, MonteCarloSettings, MIN_WINDOW};
use crate::noise::NoiseModel;
use crate::quadrature::DEFAULT_POINTS;
use crate::spectra::{
    apply_bandpass, load_tabulated_with_points, make_spectrum_with_points, read_spectrum_csv,
    AnalyticShape, FilterShape, JointSpectrum, SpectrumModel, DEFAULT_CENTER_NM,
};

/// Bumped whenever a preset's expansion changes.
pub const PRESET_VERSION: u32 = 1;

pub const PRESET_NAMES: [&str; 4] = ["fig4a", "fig4b", "fig4c", "fig4d"];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub spectrum: SpectrumSection,
    pub signal_arm: ArmSection,
    pub idler_arm: ArmSection,
    #[serde(default)]
    pub noise: NoiseSection,
    #[serde(default)]
    pub detector: DetectorModel,
    #[serde(default)]
    pub run: RunSection,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub fiber: Vec<FiberSpec>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SpectrumSection {
    pub model: SpectrumModel,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub fwhm_nm: Option<f64>,
    #[serde(default = "default_center")]
    pub center_nm: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub span_rad_per_ps: Option<f64>,
    #[serde(default = "default_points")]
    pub points: usize,
    /// Two-column CSV for the tabulated model, relative to the config file.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub path: Option<PathBuf>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub filter: Option<FilterSection>,
}

fn default_center() -> f64 {
    DEFAULT_CENTER_NM
}

fn default_points() -> usize {
    DEFAULT_POINTS
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FilterSection {
    pub shape: FilterShape,
    pub fwhm_nm: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SegmentEntry {
    pub fiber: String,
    pub length_mm: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ArmSection {
    pub delta_t_ns: f64,
    #[serde(default)]
    pub phase_rad: f64,
    pub long: Vec<SegmentEntry>,
    pub short: Vec<SegmentEntry>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NoiseSection {
    pub alpha: f64,
}

impl Default for NoiseSection {
    fn default() -> Self {
        Self { alpha: 0.0024 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RunSection {
    pub pump_phase_offset_rad: f64,
    pub source_d_beta2_ps2: f64,
    pub source_d_beta3_ps3: f64,
    pub method: VisibilityMethod,
    /// Visibility uncertainty used for the Bell significance.
    pub sigma_v: f64,
    pub fringe_points: usize,
    pub seed: u64,
    pub gates: u64,
    pub batches: usize,
    pub phase_points: usize,
    pub window: usize,
}

impl Default for RunSection {
    fn default() -> Self {
        let mc = MonteCarloSettings::default();
        Self {
            pump_phase_offset_rad: 0.0,
            source_d_beta2_ps2: 0.0,
            source_d_beta3_ps3: 0.0,
            method: VisibilityMethod::ComplexIntegral,
            sigma_v: 0.002,
            fringe_points: 72,
            seed: mc.seed,
            gates: mc.n_gates,
            batches: mc.batches,
            phase_points: mc.phases.len(),
            window: MIN_WINDOW,
        }
    }
}

impl RunSection {
    pub fn monte_carlo(&self) -> MonteCarloSettings {
        MonteCarloSettings {
            n_gates: self.gates,
            phases: uniform_phases(self.phase_points),
            batches: self.batches,
            seed: self.seed,
            window: self.window,
        }
    }
}

/// A fully resolved experiment.
#[derive(Debug, Clone)]
pub struct Experiment {
    pub config: FransonConfig,
    pub noise: NoiseModel,
    pub detector: DetectorModel,
    pub run: RunSection,
}

impl ExperimentConfig {
    pub fn parse(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| FransonError::Parse(e.to_string()))
    }

    /// Parses `path`; tabulated spectra resolve relative to its directory.
    pub fn load(path: &Path) -> Result<(Self, PathBuf)> {
        let text = std::fs::read_to_string(path).map_err(|source| FransonError::Io {
            path: path.display().to_string(),
            source,
        })?;
        let cfg = Self::parse(&text).map_err(|e| match e {
            FransonError::Parse(msg) => FransonError::Parse(format!("{}: {msg}", path.display())),
            other => other,
        })?;
        let base = path.parent().map(Path::to_path_buf).unwrap_or_default();
        Ok((cfg, base))
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("experiment config serializes")
    }

    pub fn catalog(&self) -> Result<FiberCatalog> {
        let mut catalog = FiberCatalog::builtin();
        catalog.extend(self.fiber.iter().cloned())?;
        Ok(catalog)
    }

    pub fn build_spectrum(&self, base_dir: &Path) -> Result<JointSpectrum> {
        let s = &self.spectrum;
        let analytic = |shape| {
            let fwhm = s.fwhm_nm.ok_or_else(|| {
                FransonError::Configuration(
                    "[spectrum] fwhm_nm is required for analytic models".into(),
                )
            })?;
            make_spectrum_with_points(shape, fwhm, s.center_nm, s.span_rad_per_ps, s.points)
        };
        let spectrum = match s.model {
            SpectrumModel::Sinc2 => analytic(AnalyticShape::Sinc2)?,
            SpectrumModel::Gaussian => analytic(AnalyticShape::Gaussian)?,
            SpectrumModel::Tabulated => {
                let rel = s.path.as_ref().ok_or_else(|| {
                    FransonError::Configuration(
                        "[spectrum] path is required for tabulated data".into(),
                    )
                })?;
                let rows = read_spectrum_csv(&base_dir.join(rel))?;
                load_tabulated_with_points(&rows, s.center_nm, s.points)?
            }
        };
        match s.filter {
            Some(f) => apply_bandpass(&spectrum, f.fwhm_nm, f.shape),
            None => Ok(spectrum),
        }
    }

    pub fn build(&self, base_dir: &Path) -> Result<Experiment> {
        let catalog = self.catalog()?;
        let spectrum = self.build_spectrum(base_dir)?;
        let signal = arm(&self.signal_arm, &catalog)?;
        let idler = arm(&self.idler_arm, &catalog)?;
        let config = FransonConfig::new(signal, idler, spectrum)?
            .with_pump_phase_offset(self.run.pump_phase_offset_rad)
            .with_source_dispersion(DifferentialDispersion::new(
                self.run.source_d_beta2_ps2,
                self.run.source_d_beta3_ps3,
            ));
        let noise = NoiseModel::new(self.noise.alpha)?;
        self.detector.validate()?;
        if self.run.fringe_points == 0 {
            return Err(FransonError::Configuration(
                "[run] fringe_points must be positive".into(),
            ));
        }
        Ok(Experiment {
            config,
            noise,
            detector: self.detector,
            run: self.run.clone(),
        })
    }
}

fn stack(entries: &[SegmentEntry], catalog: &FiberCatalog) -> Result<PathStack> {
    Ok(PathStack::new(
        entries
            .iter()
            .map(|e| FiberSegment::new(catalog.get(&e.fiber)?.clone(), e.length_mm))
            .collect::<Result<Vec<_>>>()?,
    ))
}

fn arm(section: &ArmSection, catalog: &FiberCatalog) -> Result<MziConfig> {
    MziConfig::new(
        stack(&section.long, catalog)?,
        stack(&section.short, catalog)?,
        section.delta_t_ns,
        section.phase_rad,
    )
}

const DELTA_T_NS: f64 = 4.77;
const SHORT_SMF_MM: f64 = 1900.0;
/// Extra SMF on the long path of an all-SMF arm: −22.5 fs²/mm × 978.6 mm ≈ −2.2e-2 ps².
const ALL_SMF_EXTRA_MM: f64 = 978.6;

fn seg(fiber: &str, length_mm: f64) -> SegmentEntry {
    SegmentEntry {
        fiber: fiber.into(),
        length_mm,
    }
}

fn all_smf_arm() -> ArmSection {
    ArmSection {
        delta_t_ns: DELTA_T_NS,
        phase_rad: 0.0,
        long: vec![seg("SMF", SHORT_SMF_MM + ALL_SMF_EXTRA_MM)],
        short: vec![seg("SMF", SHORT_SMF_MM)],
    }
}

fn locally_cancelled_arm() -> Result<ArmSection> {
    let sol = solve_lengths(&DesignProblem {
        target_d_beta2_l: 0.0,
        delta_t_ns: DELTA_T_NS,
        short_fiber: FiberSpec::smf(),
        short_length_mm: SHORT_SMF_MM,
        long_fibers: vec![FiberSpec::leaf(), FiberSpec::smf()],
    })?;
    Ok(ArmSection {
        delta_t_ns: DELTA_T_NS,
        phase_rad: 0.0,
        long: sol
            .lengths_mm
            .iter()
            .map(|(f, l)| seg(&f.name, *l))
            .collect(),
        short: vec![seg("SMF", SHORT_SMF_MM)],
    })
}

fn nonlocal_idler_arm() -> ArmSection {
    ArmSection {
        delta_t_ns: DELTA_T_NS,
        phase_rad: 0.0,
        long: vec![seg("LEAF", 2695.0), seg("SMF", 180.0)],
        short: vec![seg("SMF", SHORT_SMF_MM)],
    }
}

fn sinc2_spectrum() -> SpectrumSection {
    SpectrumSection {
        model: SpectrumModel::Sinc2,
        fwhm_nm: Some(1.6),
        center_nm: DEFAULT_CENTER_NM,
        span_rad_per_ps: None,
        points: DEFAULT_POINTS,
        path: None,
        filter: None,
    }
}

/// Expands a scenario preset:
///
/// * `fig4a`: both interferometers all-SMF, no compensation
/// * `fig4b`: as `fig4a` with a 0.36 nm flat-top band-pass on the biphoton
/// * `fig4c`: each long path part LEAF so each interferometer nulls its own dispersion
/// * `fig4d`: all-SMF signal side, LEAF/SMF idler side with opposite dispersion
pub fn preset(name: &str) -> Result<ExperimentConfig> {
    let base = |spectrum, signal_arm, idler_arm| ExperimentConfig {
        spectrum,
        signal_arm,
        idler_arm,
        noise: NoiseSection::default(),
        detector: DetectorModel::default(),
        run: RunSection::default(),
        fiber: Vec::new(),
    };
    Ok(match name {
        "fig4a" => base(sinc2_spectrum(), all_smf_arm(), all_smf_arm()),
        "fig4b" => {
            let mut spectrum = sinc2_spectrum();
            spectrum.filter = Some(FilterSection {
                shape: FilterShape::FlatTop,
                fwhm_nm: 0.36,
            });
            base(spectrum, all_smf_arm(), all_smf_arm())
        }
        "fig4c" => base(
            sinc2_spectrum(),
            locally_cancelled_arm()?,
            locally_cancelled_arm()?,
        ),
        "fig4d" => base(sinc2_spectrum(), all_smf_arm(), nonlocal_idler_arm()),
        other => {
            return Err(FransonError::Configuration(format!(
                "unknown preset '{other}' (known: {})",
                PRESET_NAMES.join(", ")
            )))
        }
    })
}

pub fn preset_description(name: &str) -> &'static str {
    match name {
        "fig4a" => "all-SMF interferometers, dispersion uncompensated",
        "fig4b" => "all-SMF interferometers, 0.36 nm flat-top band-pass on the biphoton",
        "fig4c" => "local cancellation: LEAF/SMF long paths null each interferometer",
        "fig4d" => "nonlocal cancellation: idler interferometer carries opposite dispersion",
        _ => "",
    }
}

/// Resolves a preset straight to an experiment.
pub fn preset_experiment(name: &str) -> Result<Experiment> {
    preset(name)?.build(Path::new("."))
}
