use std::collections::BTreeMap;
use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};

use franson::config::{preset_description, ArmSection, SegmentEntry, PRESET_NAMES, PRESET_VERSION};
use franson::dispersion::{stack_moments, temporal_spread};
use franson::montecarlo::write_events_csv;
use franson::noise::fit_line;
use franson::{
    bell_significance, estimate_visibility, fringe as fringe_points, observed_visibility, preset,
    simulate_run, solve_lengths, visibility as compute_visibility, DesignProblemFile,
    ExperimentConfig, FiberCatalog, FransonError, NoiseModel, VisibilityMethod,
};

use crate::report::{sci, Report};
use crate::{
    AlphaSweepArgs, CliError, DesignArgs, FringeArgs, MethodArg, MonteCarloArgs, RunOverrides,
    Source, VisibilityArgs,
};

type Result<T> = std::result::Result<T, CliError>;

fn load_config(source: &Source) -> Result<(ExperimentConfig, PathBuf, String)> {
    match (&source.config, &source.preset) {
        (Some(path), None) => {
            let (cfg, base) = ExperimentConfig::load(path)?;
            Ok((cfg, base, path.display().to_string()))
        }
        (None, Some(name)) => Ok((preset(name)?, PathBuf::from("."), name.clone())),
        _ => Err(CliError::Usage(
            "exactly one of --config or --preset is required".into(),
        )),
    }
}

fn apply_overrides(cfg: &mut ExperimentConfig, run: &RunOverrides, method: Option<MethodArg>) {
    if let Some(seed) = run.seed {
        cfg.run.seed = seed;
    }
    if let Some(gates) = run.gates {
        cfg.run.gates = gates;
    }
    if let Some(batches) = run.batches {
        cfg.run.batches = batches;
    }
    if let Some(m) = method {
        cfg.run.method = m.into();
    }
}

fn create(path: &Path) -> Result<BufWriter<File>> {
    File::create(path).map(BufWriter::new).map_err(|source| {
        FransonError::Io {
            path: path.display().to_string(),
            source,
        }
        .into()
    })
}

fn io_err(path: Option<&Path>) -> impl Fn(io::Error) -> CliError + '_ {
    move |source| {
        FransonError::Io {
            path: path.map_or_else(|| "<stdout>".into(), |p| p.display().to_string()),
            source,
        }
        .into()
    }
}

/// Runs `f` against `--out` when given, stdout otherwise.
fn with_output(
    path: Option<&Path>,
    f: impl FnOnce(&mut dyn Write) -> io::Result<()>,
) -> Result<()> {
    match path {
        Some(p) => {
            let mut w = create(p)?;
            f(&mut w).and_then(|_| w.flush()).map_err(io_err(path))
        }
        None => {
            let stdout = io::stdout();
            let mut lock = stdout.lock();
            f(&mut lock).map_err(io_err(None))
        }
    }
}

fn emit(text: &str) -> Result<()> {
    with_output(None, |w| w.write_all(text.as_bytes()))
}

fn method_name(m: VisibilityMethod) -> &'static str {
    match m {
        VisibilityMethod::PhaseSweep => "sweep",
        VisibilityMethod::ComplexIntegral => "integral",
    }
}

fn write_fringe(rows: &[(f64, f64)], out: &mut dyn Write) -> io::Result<()> {
    writeln!(out, "phi_rad,coincidence_rate")?;
    for (phi, c) in rows {
        writeln!(out, "{},{}", sci(*phi), sci(*c))?;
    }
    Ok(())
}

pub fn visibility(args: VisibilityArgs) -> Result<()> {
    let (mut cfg, base, label) = load_config(&args.source)?;
    if let Some(m) = args.method {
        cfg.run.method = m.into();
    }
    if let Some(s) = args.sigma_v {
        cfg.run.sigma_v = s;
    }
    if let Some(p) = args.points {
        cfg.run.fringe_points = p;
    }
    let exp = cfg.build(&base)?;
    let sweep = compute_visibility(&exp.config, VisibilityMethod::PhaseSweep)?;
    let integral = compute_visibility(&exp.config, VisibilityMethod::ComplexIntegral)?;
    let chosen = match exp.run.method {
        VisibilityMethod::PhaseSweep => &sweep,
        VisibilityMethod::ComplexIntegral => &integral,
    };
    let observed = observed_visibility(chosen.visibility.min(1.0), &exp.noise)?;
    let bell = bell_significance(observed, exp.run.sigma_v)?;
    let signal = exp.config.signal_dispersion();
    let idler = exp.config.idler_dispersion();
    let fwhm = exp.config.spectrum.fwhm_radps();

    let mut r = Report::new();
    r.text("source", &label)
        .text("method", method_name(exp.run.method))
        .num("alpha", exp.noise.alpha())
        .num("visibility_sweep", sweep.visibility)
        .num("visibility_integral", integral.visibility)
        .num("quadrature_error", integral.quadrature_error)
        .num("visibility_observed", observed)
        .num("sigma_v", exp.run.sigma_v)
        .num("chsh_s", bell.s_value)
        .num("bell_sigma", bell.sigma_violation)
        .num("c_max", chosen.c_max)
        .num("c_min", chosen.c_min)
        .num("signal_d_beta2_ps2", signal.d_beta2_l)
        .num("idler_d_beta2_ps2", idler.d_beta2_l)
        .num("signal_d_beta3_ps3", signal.d_beta3_l)
        .num("idler_d_beta3_ps3", idler.d_beta3_l)
        .num("spectrum_fwhm_rad_per_ps", fwhm)
        .num("passband_fraction", exp.config.spectrum.passband_fraction());
    let total = signal + idler;
    if total.d_beta2_l != 0.0 && fwhm > 0.0 {
        r.num("temporal_spread_fs", temporal_spread(&total, fwhm)?);
    }
    emit(&r.to_string())?;

    if let Some(path) = &args.out {
        let rows = fringe_points(&exp.config, exp.run.fringe_points)?;
        with_output(Some(path), |w| write_fringe(&rows, w))?;
    }
    Ok(())
}

pub fn fringe(args: FringeArgs) -> Result<()> {
    let (mut cfg, base, _) = load_config(&args.source)?;
    if let Some(p) = args.points {
        cfg.run.fringe_points = p;
    }
    let exp = cfg.build(&base)?;
    let rows = fringe_points(&exp.config, exp.run.fringe_points)?;
    with_output(args.out.as_deref(), |w| write_fringe(&rows, w))
}

pub fn alpha_sweep(args: AlphaSweepArgs) -> Result<()> {
    if args.alphas.is_empty() {
        return Err(CliError::Usage("--alphas needs at least one value".into()));
    }
    let (mut cfg, base, label) = load_config(&args.source)?;
    apply_overrides(&mut cfg, &args.run, args.method);
    let exp = cfg.build(&base)?;
    let intrinsic = compute_visibility(&exp.config, exp.run.method)?
        .visibility
        .min(1.0);
    let settings = exp.run.monte_carlo();

    let mut rows = Vec::with_capacity(args.alphas.len());
    for &alpha in &args.alphas {
        let noise = NoiseModel::new(alpha)?;
        let analytic = observed_visibility(intrinsic, &noise)?;
        let mc = if args.analytic_only {
            None
        } else {
            Some(estimate_visibility(
                &exp.config,
                &noise,
                &exp.detector,
                &settings,
            )?)
        };
        rows.push((alpha, analytic, mc.map(|e| (e.visibility, e.sigma))));
    }

    with_output(args.out.as_deref(), |w| {
        writeln!(w, "alpha,V_analytic,V_montecarlo,sigma_mc")?;
        for (alpha, analytic, mc) in &rows {
            match mc {
                Some((v, s)) => writeln!(
                    w,
                    "{},{},{},{}",
                    sci(*alpha),
                    sci(*analytic),
                    sci(*v),
                    sci(*s)
                )?,
                None => writeln!(w, "{},{},,", sci(*alpha), sci(*analytic))?,
            }
        }
        Ok(())
    })?;

    let mut r = Report::new();
    r.text("source", &label)
        .num("visibility_intrinsic", intrinsic);
    let points: Vec<(f64, f64)> = rows.iter().map(|(a, v, _)| (*a, *v)).collect();
    if let Ok(fit) = fit_line(&points) {
        r.num("analytic_slope", fit.slope)
            .num("analytic_intercept", fit.intercept);
    }
    let mc_points: Vec<(f64, f64)> = rows
        .iter()
        .filter_map(|(a, _, mc)| mc.map(|(v, _)| (*a, v)))
        .collect();
    if let Ok(fit) = fit_line(&mc_points) {
        r.num("montecarlo_slope", fit.slope)
            .num("montecarlo_intercept", fit.intercept);
    }
    // keep stdout clean for the CSV when no --out is given
    if args.out.is_some() {
        emit(&r.to_string())?;
    } else {
        eprint!("{r}");
    }
    Ok(())
}

pub fn montecarlo(args: MonteCarloArgs) -> Result<()> {
    let (mut cfg, base, label) = load_config(&args.source)?;
    apply_overrides(&mut cfg, &args.run, args.method);
    if let Some(p) = args.phases {
        cfg.run.phase_points = p;
    }
    let exp = cfg.build(&base)?;
    let settings = exp.run.monte_carlo();
    let est = estimate_visibility(&exp.config, &exp.noise, &exp.detector, &settings)?;
    let intrinsic = compute_visibility(&exp.config, exp.run.method)?
        .visibility
        .min(1.0);
    let analytic = observed_visibility(intrinsic, &exp.noise)?;
    let deviation = (est.visibility - analytic).abs();

    let mut r = Report::new();
    r.text("source", &label)
        .text("fit_method", est.fit_method)
        .int("seed", exp.run.seed)
        .int("batches", settings.batches as u64)
        .int("phase_points", settings.phases.len() as u64)
        .int("gates_per_phase", est.gates_per_phase)
        .int("delay_gates", est.delay)
        .int("central_counts", est.central_counts.iter().sum::<u64>())
        .int("side_counts", est.side_counts.iter().sum::<u64>())
        .num("visibility_montecarlo", est.visibility)
        .num("sigma_montecarlo", est.sigma)
        .num("visibility_analytic", analytic)
        .num(
            "deviation_sigmas",
            if est.sigma > 0.0 {
                deviation / est.sigma
            } else {
                f64::INFINITY
            },
        );
    emit(&r.to_string())?;

    if let Some(path) = &args.out {
        with_output(Some(path), |w| {
            writeln!(w, "batch,visibility")?;
            for (i, v) in est.batch_visibilities.iter().enumerate() {
                writeln!(w, "{i},{}", sci(*v))?;
            }
            Ok(())
        })?;
    }
    if let Some(path) = &args.histogram {
        with_output(Some(path), |w| est.histogram.write_csv(w))?;
    }
    if let Some(path) = &args.events {
        let events = simulate_run(
            &exp.config,
            &exp.noise,
            &exp.detector,
            exp.run.gates,
            exp.run.seed,
        )?;
        with_output(Some(path), |w| write_events_csv(&events, w))?;
    }
    Ok(())
}

pub fn design(args: DesignArgs) -> Result<()> {
    let text = std::fs::read_to_string(&args.problem).map_err(|source| FransonError::Io {
        path: args.problem.display().to_string(),
        source,
    })?;
    let file = DesignProblemFile::parse(&text).map_err(|e| match e {
        FransonError::Parse(msg) => {
            FransonError::Parse(format!("{}: {msg}", args.problem.display()))
        }
        other => other,
    })?;
    let catalog = match &args.catalog {
        Some(path) => FiberCatalog::load(path)?,
        None => FiberCatalog::builtin(),
    };
    let problem = file.resolve(&catalog)?;
    let sol = solve_lengths(&problem)?;
    let forward = stack_moments(&sol.long_stack(), &problem.short_stack()?);

    let mut r = Report::new();
    for (fiber, length) in &sol.lengths_mm {
        r.num(&format!("length_mm.{}", fiber.name), *length);
    }
    r.num("target_d_beta2_ps2", problem.target_d_beta2_l)
        .num("achieved_d_beta2_ps2", sol.achieved_d_beta2_l)
        .num("achieved_delay_ns", sol.achieved_delay_ns)
        .num("dispersion_residual_ps2", sol.dispersion_residual)
        .num("delay_residual_ns", sol.delay_residual_ns)
        .num("forward_check_d_beta2_ps2", forward.d_beta2_l)
        .num(
            "forward_check_residual_ps2",
            forward.d_beta2_l - problem.target_d_beta2_l,
        );
    emit(&r.to_string())?;

    if let Some(arm) = &args.fragment {
        let section = ArmSection {
            delta_t_ns: problem.delta_t_ns,
            phase_rad: 0.0,
            long: sol
                .lengths_mm
                .iter()
                .map(|(f, l)| SegmentEntry {
                    fiber: f.name.clone(),
                    length_mm: *l,
                })
                .collect(),
            short: vec![SegmentEntry {
                fiber: problem.short_fiber.name.clone(),
                length_mm: problem.short_length_mm,
            }],
        };
        let fragment = BTreeMap::from([(arm.clone(), section)]);
        emit(&format!(
            "\n{}",
            toml::to_string(&fragment).expect("arm section serializes")
        ))?;
    }
    Ok(())
}

pub fn presets_list() -> Result<()> {
    let list: String = PRESET_NAMES
        .iter()
        .map(|name| format!("{name}\t{}\n", preset_description(name)))
        .collect();
    emit(&list)
}

pub fn presets_show(name: &str) -> Result<()> {
    let cfg = preset(name)?;
    emit(&format!(
        "# preset {name} (version {PRESET_VERSION}): {}\n{}",
        preset_description(name),
        cfg.to_toml()
    ))
}
