//! Dispersion-aware model of time-bin entanglement distributed through a
//! pair of unbalanced Mach-Zehnder interferometers.
//!
//! The pipeline runs from a joint spectral density ([`spectra`]), through the
//! differential dispersion of each interferometer ([`dispersion`]), to the
//! coincidence fringe and its visibility ([`interference`]). Accidentals are
//! handled analytically ([`noise`]) or by a gated-detector simulation
//! ([`montecarlo`]), and [`designer`] solves for compensating fiber lengths.

pub mod config;
pub mod designer;
pub mod dispersion;
pub mod error;
pub mod interference;
pub mod montecarlo;
pub mod noise;
pub mod quadrature;
pub mod spectra;
pub mod units;

pub use config::{preset, preset_experiment, Experiment, ExperimentConfig};
pub use designer::{solve_lengths, DesignProblem, DesignProblemFile, DesignSolution};
pub use dispersion::{DifferentialDispersion, FiberCatalog, FiberSegment, FiberSpec, PathStack};
pub use error::{FransonError, Result};
pub use interference::{
    coincidence_rate, fringe, visibility, FransonConfig, MziConfig, VisibilityMethod,
    VisibilityResult,
};
pub use montecarlo::{
    estimate_visibility, simulate_run, DetectorModel, EventRecord, MonteCarloEstimate,
    MonteCarloSettings,
};
pub use noise::{bell_significance, observed_visibility, NoiseModel};
pub use spectra::{
    apply_bandpass, load_tabulated, make_spectrum, AnalyticShape, Detuning, FilterShape,
    JointSpectrum, SpectrumModel,
};
