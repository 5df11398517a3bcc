//! Shared fixtures for the criterion benches.

use franson::{preset_experiment, Experiment, MonteCarloSettings};

/// A resolved preset; panics on unknown names.
pub fn experiment(name: &str) -> Experiment {
    preset_experiment(name).expect("built-in preset resolves")
}

/// A short phase-scanned run: 32 phases, a few batches.
pub fn small_monte_carlo(n_gates: u64, batches: usize) -> MonteCarloSettings {
    MonteCarloSettings {
        n_gates,
        batches,
        ..MonteCarloSettings::default()
    }
}
