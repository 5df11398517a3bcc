//! Gate-resolved event simulation of a Franson measurement with gated
//! single-photon detectors.
//!
//! Each gate emits at most one pair (Bernoulli, probability α). Each photon
//! leaves its interferometer through the monitored port with probability
//! 1/2 and arrives either at its generation gate (short path) or `m` gates
//! later (long path). Mixed short/long outcomes land in the ±m coincidence
//! bins with no phase dependence. Same-path outcomes are indistinguishable
//! and are sampled from the post-selected rate `C(φ̃)`:
//!
//! | ports (signal, idler) | probability |
//! |-----------------------|-------------|
//! | monitored, monitored  | C/2         |
//! | open, open            | C/2         |
//! | monitored, open       | (1−C)/2     |
//! | open, monitored       | (1−C)/2     |
//!
//! Single-detector rates are therefore phase independent, and coincidences
//! between photons of different pairs form a flat accidental floor. With
//! intrinsic visibility `V` the expected raw visibility is `V/(1+α)`.

use std::collections::VecDeque;
use std::f64::consts::TAU;
use std::fmt;
use std::io::Write;

use nalgebra::{Matrix3, Vector3};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Geometric};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{FransonError, Result};
use crate::interference::{coincidence_rate, FransonConfig};
use crate::noise::NoiseModel;

/// Largest tolerated misalignment between ΔT and a whole number of gate
/// periods, as a fraction of one period.
pub const GATE_ALIGNMENT_TOLERANCE: f64 = 0.01;

pub const MIN_WINDOW: usize = 3;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct DetectorModel {
    pub efficiency: f64,
    pub gate_rate_mhz: f64,
    pub dark_prob: f64,
    pub afterpulse_prob: f64,
    /// Timing jitter; carried for reference, gate assignment ignores it.
    pub jitter_rms_ps: f64,
}

impl Default for DetectorModel {
    fn default() -> Self {
        Self {
            efficiency: 0.20,
            gate_rate_mhz: 628.5,
            dark_prob: 2e-6,
            afterpulse_prob: 0.06,
            jitter_rms_ps: 100.0,
        }
    }
}

impl DetectorModel {
    /// Unit efficiency, no dark counts, no afterpulsing.
    pub fn ideal() -> Self {
        Self {
            efficiency: 1.0,
            dark_prob: 0.0,
            afterpulse_prob: 0.0,
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        let unit = |name: &str, v: f64| {
            if (0.0..=1.0).contains(&v) {
                Ok(())
            } else {
                Err(FransonError::Configuration(format!(
                    "detector {name} must lie in [0, 1], got {v}"
                )))
            }
        };
        unit("efficiency", self.efficiency)?;
        unit("dark_prob", self.dark_prob)?;
        if !(0.0..1.0).contains(&self.afterpulse_prob) {
            return Err(FransonError::Configuration(format!(
                "detector afterpulse_prob must lie in [0, 1), got {}",
                self.afterpulse_prob
            )));
        }
        if !(self.gate_rate_mhz > 0.0 && self.gate_rate_mhz.is_finite()) {
            return Err(FransonError::Configuration(format!(
                "gate rate must be positive, got {} MHz",
                self.gate_rate_mhz
            )));
        }
        if self.jitter_rms_ps.is_nan() || self.jitter_rms_ps < 0.0 {
            return Err(FransonError::Configuration(
                "jitter must be non-negative".into(),
            ));
        }
        Ok(())
    }

    pub fn gate_period_ns(&self) -> f64 {
        1e3 / self.gate_rate_mhz
    }
}

/// Interferometer delay expressed in whole detector gates.
pub fn delay_in_gates(delta_t_ns: f64, det: &DetectorModel) -> Result<u64> {
    let periods = delta_t_ns / det.gate_period_ns();
    let m = periods.round();
    if m < 1.0 || (periods - m).abs() > GATE_ALIGNMENT_TOLERANCE {
        return Err(FransonError::Configuration(format!(
            "interferometer delay {delta_t_ns} ns is {periods:.4} gate periods, not a whole number"
        )));
    }
    Ok(m as u64)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Detector {
    Signal,
    Idler,
}

impl fmt::Display for Detector {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Detector::Signal => "signal",
            Detector::Idler => "idler",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct EventRecord {
    pub gate_index: u64,
    pub detector: Detector,
}

impl EventRecord {
    pub fn new(detector: Detector, gate_index: u64) -> Self {
        Self {
            gate_index,
            detector,
        }
    }
}

pub fn write_events_csv<W: Write>(events: &[EventRecord], mut out: W) -> std::io::Result<()> {
    writeln!(out, "detector,gate_index")?;
    for e in events {
        writeln!(out, "{},{}", e.detector, e.gate_index)?;
    }
    Ok(())
}

/// Signal/idler coincidence counts by gate offset `idler − signal`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CoincidenceHistogram {
    window: usize,
    counts: Vec<u64>,
    total_gates: u64,
}

impl CoincidenceHistogram {
    pub fn new(window: usize, total_gates: u64) -> Self {
        Self {
            window,
            counts: vec![0; 2 * window + 1],
            total_gates,
        }
    }

    pub fn window(&self) -> usize {
        self.window
    }

    pub fn total_gates(&self) -> u64 {
        self.total_gates
    }

    /// Counts at `offset`; zero outside the window.
    pub fn count(&self, offset: i64) -> u64 {
        let idx = offset + self.window as i64;
        if idx < 0 || idx as usize >= self.counts.len() {
            0
        } else {
            self.counts[idx as usize]
        }
    }

    pub fn iter(&self) -> impl Iterator<Item = (i64, u64)> + '_ {
        let k = self.window as i64;
        self.counts
            .iter()
            .enumerate()
            .map(move |(i, &c)| (i as i64 - k, c))
    }

    pub fn total(&self) -> u64 {
        self.counts.iter().sum()
    }

    pub fn merge(&mut self, other: &CoincidenceHistogram) {
        assert_eq!(self.window, other.window, "histogram windows differ");
        for (a, b) in self.counts.iter_mut().zip(&other.counts) {
            *a += b;
        }
        self.total_gates += other.total_gates;
    }

    pub fn write_csv<W: Write>(&self, mut out: W) -> std::io::Result<()> {
        writeln!(out, "offset,counts")?;
        for (offset, c) in self.iter() {
            writeln!(out, "{offset},{c}")?;
        }
        Ok(())
    }
}

/// Gate-aligned coincidence counting in one pass over a gate-sorted stream.
pub fn count_coincidences(
    events: &[EventRecord],
    window: usize,
    total_gates: u64,
) -> Result<CoincidenceHistogram> {
    if window < MIN_WINDOW {
        return Err(FransonError::Contract(format!(
            "coincidence window must be at least {MIN_WINDOW} gates, got {window}"
        )));
    }
    let mut hist = CoincidenceHistogram::new(window, total_gates);
    let k = window as u64;
    let mut recent: VecDeque<EventRecord> = VecDeque::new();
    let mut last_gate = 0;
    for e in events {
        if e.gate_index < last_gate {
            return Err(FransonError::Contract(format!(
                "events are not sorted by gate (gate {} after {last_gate})",
                e.gate_index
            )));
        }
        last_gate = e.gate_index;
        while recent
            .front()
            .is_some_and(|f| f.gate_index + k < e.gate_index)
        {
            recent.pop_front();
        }
        for r in recent.iter().filter(|r| r.detector != e.detector) {
            let d = (e.gate_index - r.gate_index) as i64;
            let offset = match e.detector {
                Detector::Idler => d,
                Detector::Signal => -d,
            };
            hist.counts[(offset + window as i64) as usize] += 1;
        }
        recent.push_back(*e);
    }
    Ok(hist)
}

#[derive(Debug, Clone, Copy)]
struct GateModel {
    /// Post-selected coincidence probability C(φ̃).
    coincidence: f64,
    delay: u64,
    alpha: f64,
    det: DetectorModel,
}

fn geometric(p: f64) -> Option<Geometric> {
    if p > 0.0 {
        Geometric::new(p).ok()
    } else {
        None
    }
}

/// Visits the gates in `[0, n)` selected by independent Bernoulli(p) trials.
fn for_each_bernoulli_gate(
    rng: &mut ChaCha8Rng,
    p: f64,
    n: u64,
    mut f: impl FnMut(&mut ChaCha8Rng, u64),
) {
    let Some(skip) = geometric(p) else { return };
    let mut gate = 0u64;
    loop {
        gate = gate.saturating_add(skip.sample(rng));
        if gate >= n {
            break;
        }
        f(rng, gate);
        gate += 1;
    }
}

fn generate(rng: &mut ChaCha8Rng, model: &GateModel, n_gates: u64) -> Vec<EventRecord> {
    let eta = model.det.efficiency;
    let c = model.coincidence;
    let m = model.delay;
    let mut clicks = Vec::new();
    let mut detect = |rng: &mut ChaCha8Rng, detector, gate: u64| {
        if gate < n_gates && rng.random::<f64>() < eta {
            clicks.push(EventRecord::new(detector, gate));
        }
    };

    for_each_bernoulli_gate(rng, model.alpha, n_gates, |rng, g| {
        let class: f64 = rng.random();
        let (signal_late, idler_late, signal_open, idler_open) = if class < 0.25 {
            (false, true, rng.random::<bool>(), rng.random::<bool>())
        } else if class < 0.5 {
            (true, false, rng.random::<bool>(), rng.random::<bool>())
        } else {
            let late = rng.random::<bool>();
            let u: f64 = rng.random();
            let (s, i) = if u < 0.5 * c {
                (true, true)
            } else if u < c {
                (false, false)
            } else if u < 0.5 * (1.0 + c) {
                (true, false)
            } else {
                (false, true)
            };
            (late, late, s, i)
        };
        if signal_open {
            detect(rng, Detector::Signal, g + if signal_late { m } else { 0 });
        }
        if idler_open {
            detect(rng, Detector::Idler, g + if idler_late { m } else { 0 });
        }
    });

    for detector in [Detector::Signal, Detector::Idler] {
        for_each_bernoulli_gate(rng, model.det.dark_prob, n_gates, |_, g| {
            clicks.push(EventRecord::new(detector, g));
        });
    }

    // a gated detector clicks at most once per gate
    clicks.sort_unstable();
    clicks.dedup();

    let p_after = model.det.afterpulse_prob;
    if p_after > 0.0 {
        let after: Vec<EventRecord> = clicks
            .iter()
            .filter(|e| e.gate_index + 1 < n_gates && rng.random::<f64>() < p_after)
            .map(|e| EventRecord::new(e.detector, e.gate_index + 1))
            .collect();
        if !after.is_empty() {
            clicks.extend(after);
            clicks.sort_unstable();
            clicks.dedup();
        }
    }
    clicks
}

fn gate_model(
    cfg: &FransonConfig,
    noise: &NoiseModel,
    det: &DetectorModel,
    phi: f64,
) -> Result<GateModel> {
    det.validate()?;
    let delay = delay_in_gates(cfg.delta_t_ns(), det)?;
    let coincidence = coincidence_rate(cfg, phi)?.clamp(0.0, 1.0);
    Ok(GateModel {
        coincidence,
        delay,
        alpha: noise.alpha(),
        det: *det,
    })
}

fn stream_rng(seed: u64, batch: usize, phase: usize) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(((batch as u64) << 32) | phase as u64);
    rng
}

/// Simulates `n_gates` gates at the configuration's current phase sum and
/// returns the detection stream sorted by gate. Deterministic in `seed`.
pub fn simulate_run(
    cfg: &FransonConfig,
    noise: &NoiseModel,
    det: &DetectorModel,
    n_gates: u64,
    seed: u64,
) -> Result<Vec<EventRecord>> {
    if n_gates == 0 {
        return Err(FransonError::Configuration(
            "run needs at least one gate".into(),
        ));
    }
    let model = gate_model(cfg, noise, det, cfg.phase_sum())?;
    Ok(generate(&mut stream_rng(seed, 0, 0), &model, n_gates))
}

#[derive(Debug, Clone, PartialEq)]
pub struct MonteCarloSettings {
    /// Gates per batch, split evenly across the phase points.
    pub n_gates: u64,
    pub phases: Vec<f64>,
    pub batches: usize,
    pub seed: u64,
    pub window: usize,
}

impl Default for MonteCarloSettings {
    fn default() -> Self {
        Self {
            n_gates: 10_000_000,
            phases: uniform_phases(32),
            batches: 100,
            seed: 0,
            window: MIN_WINDOW,
        }
    }
}

pub fn uniform_phases(n: usize) -> Vec<f64> {
    (0..n).map(|k| TAU * k as f64 / n as f64).collect()
}

#[derive(Debug, Clone)]
pub struct MonteCarloEstimate {
    /// Mean fitted visibility over batches.
    pub visibility: f64,
    /// One standard deviation of the per-batch visibilities.
    pub sigma: f64,
    pub batch_visibilities: Vec<f64>,
    pub phases: Vec<f64>,
    pub gates_per_phase: u64,
    /// Delay in gates; the long/short side peaks sit at ±`delay`.
    pub delay: u64,
    /// Offset-0 counts per phase, summed over batches.
    pub central_counts: Vec<u64>,
    /// Offset ±`delay` counts per phase, summed over batches.
    pub side_counts: Vec<u64>,
    pub histogram: CoincidenceHistogram,
    pub fit_method: &'static str,
}

pub const FIT_METHOD: &str = "least-squares A(1 + V cos(phi - phi0))";

/// Least-squares fit of `A(1 + V cos(φ − φ₀))` to counts; returns `V`.
pub fn fit_fringe(phases: &[f64], counts: &[u64]) -> Result<f64> {
    if phases.len() != counts.len() || phases.len() < 3 {
        return Err(FransonError::Statistics(
            "fringe fit needs at least 3 phase points with one count each".into(),
        ));
    }
    if counts.iter().all(|&c| c == 0) {
        return Err(FransonError::Statistics(
            "no coincidences recorded in the fringe".into(),
        ));
    }
    let mut normal = Matrix3::<f64>::zeros();
    let mut rhs = Vector3::<f64>::zeros();
    for (&phi, &n) in phases.iter().zip(counts) {
        let row = Vector3::new(1.0, phi.cos(), phi.sin());
        normal += row * row.transpose();
        rhs += row * n as f64;
    }
    let sol = normal
        .lu()
        .solve(&rhs)
        .ok_or_else(|| FransonError::Statistics("phase points do not resolve a fringe".into()))?;
    if sol[0].is_nan() || sol[0] <= 0.0 {
        return Err(FransonError::Statistics(
            "fitted fringe offset is not positive".into(),
        ));
    }
    Ok(sol[1].hypot(sol[2]) / sol[0])
}

struct BatchOutcome {
    visibility: f64,
    central: Vec<u64>,
    side: Vec<u64>,
    histogram: CoincidenceHistogram,
}

/// Repeats a phase-scanned measurement over independent batches and fits
/// each batch's offset-0 fringe.
pub fn estimate_visibility(
    cfg: &FransonConfig,
    noise: &NoiseModel,
    det: &DetectorModel,
    settings: &MonteCarloSettings,
) -> Result<MonteCarloEstimate> {
    if settings.batches < 2 {
        return Err(FransonError::Configuration(format!(
            "need at least 2 batches, got {}",
            settings.batches
        )));
    }
    if settings.phases.len() < 3 {
        return Err(FransonError::Configuration(
            "need at least 3 phase points".into(),
        ));
    }
    let gates_per_phase = settings.n_gates / settings.phases.len() as u64;
    if gates_per_phase == 0 {
        return Err(FransonError::Configuration(
            "fewer gates than phase points".into(),
        ));
    }
    let models = settings
        .phases
        .iter()
        .map(|&phi| gate_model(cfg, noise, det, phi))
        .collect::<Result<Vec<_>>>()?;
    let delay = models[0].delay;
    let window = settings.window.max(delay as usize);

    let outcomes = (0..settings.batches)
        .into_par_iter()
        .map(|batch| {
            let mut central = Vec::with_capacity(models.len());
            let mut side = Vec::with_capacity(models.len());
            let mut histogram = CoincidenceHistogram::new(window, 0);
            for (k, model) in models.iter().enumerate() {
                let mut rng = stream_rng(settings.seed, batch, k);
                let events = generate(&mut rng, model, gates_per_phase);
                let h = count_coincidences(&events, window, gates_per_phase)?;
                central.push(h.count(0));
                side.push(h.count(delay as i64) + h.count(-(delay as i64)));
                histogram.merge(&h);
            }
            let visibility = fit_fringe(&settings.phases, &central)
                .map_err(|e| FransonError::Statistics(format!("batch {batch}: {e}")))?;
            Ok(BatchOutcome {
                visibility,
                central,
                side,
                histogram,
            })
        })
        .collect::<Result<Vec<_>>>()?;

    let n = outcomes.len() as f64;
    let batch_visibilities: Vec<f64> = outcomes.iter().map(|o| o.visibility).collect();
    let mean = batch_visibilities.iter().sum::<f64>() / n;
    let var = batch_visibilities
        .iter()
        .map(|v| (v - mean).powi(2))
        .sum::<f64>()
        / (n - 1.0);

    let mut central_counts = vec![0; settings.phases.len()];
    let mut side_counts = vec![0; settings.phases.len()];
    let mut histogram = CoincidenceHistogram::new(window, 0);
    for o in &outcomes {
        for (acc, c) in central_counts.iter_mut().zip(&o.central) {
            *acc += c;
        }
        for (acc, c) in side_counts.iter_mut().zip(&o.side) {
            *acc += c;
        }
        histogram.merge(&o.histogram);
    }

    Ok(MonteCarloEstimate {
        visibility: mean,
        sigma: var.sqrt(),
        batch_visibilities,
        phases: settings.phases.clone(),
        gates_per_phase,
        delay,
        central_counts,
        side_counts,
        histogram,
        fit_method: FIT_METHOD,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dispersion::{FiberSpec, PathStack};
    use crate::interference::MziConfig;
    use crate::spectra::{make_spectrum, AnalyticShape};
    use std::f64::consts::PI;

    fn flat_config() -> FransonConfig {
        let s = make_spectrum(AnalyticShape::Gaussian, 1.6, 1560.0, None).unwrap();
        let arm = || {
            MziConfig::new(
                PathStack::single(FiberSpec::smf(), 1000.0).unwrap(),
                PathStack::single(FiberSpec::smf(), 1000.0).unwrap(),
                4.77,
                0.0,
            )
            .unwrap()
        };
        FransonConfig::new(arm(), arm(), s).unwrap()
    }

    fn dark_only(p: f64) -> DetectorModel {
        DetectorModel {
            dark_prob: p,
            afterpulse_prob: 0.0,
            ..DetectorModel::default()
        }
    }

    #[test]
    fn reference_delay_spans_three_gates() {
        assert_eq!(delay_in_gates(4.77, &DetectorModel::default()).unwrap(), 3);
        assert!(matches!(
            delay_in_gates(4.0, &DetectorModel::default()),
            Err(FransonError::Configuration(_))
        ));
    }

    #[test]
    fn no_sources_no_events() {
        let events = simulate_run(
            &flat_config(),
            &NoiseModel::noiseless(),
            &dark_only(0.0),
            1_000_000,
            7,
        )
        .unwrap();
        assert!(events.is_empty());
    }

    #[test]
    fn dark_counts_follow_poisson_total() {
        let events = simulate_run(
            &flat_config(),
            &NoiseModel::noiseless(),
            &dark_only(2e-6),
            10_000_000,
            11,
        )
        .unwrap();
        // 2 detectors × 1e7 gates × 2e-6 = 40, ±2√40
        let n = events.len() as f64;
        assert!((n - 40.0).abs() <= 13.0, "{n}");
    }

    #[test]
    fn runs_are_seed_deterministic() {
        let cfg = flat_config();
        let noise = NoiseModel::new(0.01).unwrap();
        let det = DetectorModel::default();
        let a = simulate_run(&cfg, &noise, &det, 200_000, 42).unwrap();
        let b = simulate_run(&cfg, &noise, &det, 200_000, 42).unwrap();
        let c = simulate_run(&cfg, &noise, &det, 200_000, 43).unwrap();
        assert_eq!(a, b);
        assert_ne!(a, c);
        assert!(a.windows(2).all(|w| w[0] < w[1]));
    }

    #[test]
    fn destructive_phase_empties_central_bin() {
        let cfg = flat_config().with_phase_sum(PI);
        let noise = NoiseModel::new(0.0024).unwrap();
        let n = 10_000_000;
        let events = simulate_run(&cfg, &noise, &DetectorModel::ideal(), n, 3).unwrap();
        let h = count_coincidences(&events, 3, n).unwrap();
        // true coincidences vanish; the accidental floor is α²/8 per gate
        let floor = n as f64 * 0.0024f64.powi(2) / 8.0;
        assert!(
            (h.count(0) as f64) < floor + 5.0 * floor.sqrt() + 1.0,
            "{}",
            h.count(0)
        );
        // each mixed-path bin collects α/16 per gate
        let side = n as f64 * 0.0024 / 16.0;
        for off in [-3, 3] {
            let c = h.count(off) as f64;
            assert!((c - side).abs() < 5.0 * side.sqrt(), "{off}: {c} vs {side}");
        }
    }

    #[test]
    fn counting_examples() {
        let h = count_coincidences(&[], 3, 0).unwrap();
        assert_eq!(h.total(), 0);
        let events = [
            EventRecord::new(Detector::Signal, 10),
            EventRecord::new(Detector::Idler, 13),
        ];
        let h = count_coincidences(&events, 3, 20).unwrap();
        assert_eq!(h.count(3), 1);
        assert_eq!(h.total(), 1);

        let events = [
            EventRecord::new(Detector::Idler, 5),
            EventRecord::new(Detector::Signal, 5),
            EventRecord::new(Detector::Signal, 7),
            EventRecord::new(Detector::Idler, 12),
        ];
        let h = count_coincidences(&events, 4, 20).unwrap();
        assert_eq!(h.count(0), 1);
        assert_eq!(h.count(-2), 1);
        assert_eq!(h.count(-1), 0);
        assert_eq!(h.total(), 2);
    }

    #[test]
    fn counting_contract() {
        let events = [
            EventRecord::new(Detector::Signal, 10),
            EventRecord::new(Detector::Idler, 9),
        ];
        assert!(matches!(
            count_coincidences(&events, 3, 20),
            Err(FransonError::Contract(_))
        ));
        assert!(count_coincidences(&[], 2, 0).is_err());
    }

    #[test]
    fn dark_only_accidentals_are_rare() {
        let n = 10_000_000;
        let events = simulate_run(
            &flat_config(),
            &NoiseModel::noiseless(),
            &dark_only(2e-6),
            n,
            5,
        )
        .unwrap();
        let h = count_coincidences(&events, 3, n).unwrap();
        // 7 bins × 1e7 × (2e-6)² = 2.8e-4 expected in total
        assert!(h.total() <= 1);
    }

    #[test]
    fn fit_recovers_exact_fringe() {
        let phases = uniform_phases(16);
        let counts: Vec<u64> = phases
            .iter()
            .map(|p| (1000.0 * (1.0 + 0.8 * (p - 0.4).cos())).round() as u64)
            .collect();
        let v = fit_fringe(&phases, &counts).unwrap();
        assert!((v - 0.8).abs() < 2e-3);
        assert!(fit_fringe(&phases, &[0; 16]).is_err());
        assert!(fit_fringe(&phases[..2], &counts[..2]).is_err());
    }

    #[test]
    fn dark_counts_only_is_statistics_error() {
        let settings = MonteCarloSettings {
            n_gates: 1_000_000,
            batches: 2,
            ..MonteCarloSettings::default()
        };
        let err = estimate_visibility(
            &flat_config(),
            &NoiseModel::noiseless(),
            &dark_only(2e-6),
            &settings,
        )
        .unwrap_err();
        assert!(matches!(err, FransonError::Statistics(_)), "{err}");
    }

    #[test]
    fn ideal_estimate_matches_accidental_law() {
        let settings = MonteCarloSettings {
            n_gates: 10_000_000,
            batches: 8,
            seed: 9,
            ..MonteCarloSettings::default()
        };
        let est = estimate_visibility(
            &flat_config(),
            &NoiseModel::new(0.0024).unwrap(),
            &DetectorModel::ideal(),
            &settings,
        )
        .unwrap();
        assert!(
            (est.visibility - 0.9976).abs() <= 3.0 * est.sigma,
            "{est:?}"
        );
        // about 3000 offset-0 counts per batch: sqrt(2/N) ≈ 0.026
        assert!(est.sigma > 0.005 && est.sigma < 0.05, "{}", est.sigma);
        assert_eq!(est.delay, 3);
    }

    #[test]
    fn events_and_histogram_csv() {
        let mut buf = Vec::new();
        write_events_csv(&[EventRecord::new(Detector::Idler, 4)], &mut buf).unwrap();
        assert_eq!(
            String::from_utf8(buf).unwrap(),
            "detector,gate_index\nidler,4\n"
        );
        let mut h = CoincidenceHistogram::new(3, 10);
        h.counts[6] = 2;
        let mut buf = Vec::new();
        h.write_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert!(text.starts_with("offset,counts\n-3,0\n"));
        assert!(text.ends_with("3,2\n"));
    }
}
