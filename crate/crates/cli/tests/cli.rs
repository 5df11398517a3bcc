use std::collections::BTreeMap;
use std::path::Path;
use std::process::{Command, Output};

fn franson(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_franson"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn stderr(o: &Output) -> String {
    String::from_utf8(o.stderr.clone()).unwrap()
}

fn ok(args: &[&str]) -> String {
    let o = franson(args);
    assert!(o.status.success(), "{args:?}: {}", stderr(&o));
    stdout(&o)
}

/// Parses `key = value` report lines; quoted values are skipped.
fn report(text: &str) -> BTreeMap<String, f64> {
    text.lines()
        .filter_map(|l| l.split_once(" = "))
        .filter_map(|(k, v)| v.parse().ok().map(|v| (k.to_string(), v)))
        .collect()
}

fn write(dir: &Path, name: &str, text: &str) -> String {
    let p = dir.join(name);
    std::fs::write(&p, text).unwrap();
    p.display().to_string()
}

#[test]
fn visibility_presets() {
    let c = report(&ok(&["visibility", "--preset", "fig4c"]));
    let d = report(&ok(&[
        "visibility",
        "--preset",
        "fig4d",
        "--method",
        "sweep",
    ]));
    let a = report(&ok(&["visibility", "--preset", "fig4a"]));
    assert!((c["visibility_observed"] - 0.9976).abs() <= 5e-4);
    assert!((d["visibility_observed"] - c["visibility_observed"]).abs() <= 1e-4);
    assert!((0.980..=0.988).contains(&a["visibility_observed"]));
    assert!((a["visibility_sweep"] - a["visibility_integral"]).abs() <= 1e-6);
}

#[test]
fn numbers_use_nine_significant_digits() {
    let out = ok(&["visibility", "--preset", "fig4c"]);
    let line = out
        .lines()
        .find(|l| l.starts_with("visibility_observed"))
        .unwrap();
    assert_eq!(line, "visibility_observed = 9.97600000e-1");
    let keys: Vec<&str> = out
        .lines()
        .map(|l| l.split(" = ").next().unwrap())
        .collect();
    let mut sorted = keys.clone();
    sorted.sort();
    assert_eq!(keys, sorted);
}

#[test]
fn bell_significance_from_sigma_v() {
    let r = report(&ok(&[
        "visibility",
        "--preset",
        "fig4c",
        "--sigma-v",
        "0.002",
    ]));
    assert!((r["bell_sigma"] - 145.6).abs() < 0.5, "{}", r["bell_sigma"]);
}

#[test]
fn fringe_csv() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("fringe.csv");
    ok(&[
        "visibility",
        "--preset",
        "fig4a",
        "--points",
        "16",
        "--out",
        out.to_str().unwrap(),
    ]);
    let text = std::fs::read_to_string(&out).unwrap();
    assert_eq!(text.lines().next(), Some("phi_rad,coincidence_rate"));
    assert_eq!(text.lines().count(), 17);
    assert_eq!(ok(&["fringe", "--preset", "fig4a", "--points", "16"]), text);
}

#[test]
fn alpha_sweep_slope_and_intercept() {
    let o = franson(&[
        "alpha-sweep",
        "--preset",
        "fig4c",
        "--alphas",
        "0.0024,0.01,0.02,0.04",
        "--analytic-only",
    ]);
    assert!(o.status.success());
    let csv = stdout(&o);
    assert_eq!(
        csv.lines().next(),
        Some("alpha,V_analytic,V_montecarlo,sigma_mc")
    );
    assert_eq!(csv.lines().count(), 5);
    let r = report(&stderr(&o));
    assert!((r["analytic_slope"] + 1.0).abs() <= 0.01);

    let o = franson(&[
        "alpha-sweep",
        "--preset",
        "fig4a",
        "--alphas",
        "0.0024,0.01,0.02,0.04",
        "--analytic-only",
    ]);
    let r = report(&stderr(&o));
    assert!((r["analytic_intercept"] - 0.987).abs() <= 0.007);
}

#[test]
fn alpha_sweep_with_monte_carlo_columns() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("sweep.csv");
    let text = ok(&[
        "alpha-sweep",
        "--preset",
        "fig4c",
        "--alphas",
        "0.01,0.04",
        "--gates",
        "2000000",
        "--batches",
        "3",
        "--out",
        out.to_str().unwrap(),
    ]);
    assert!(report(&text).contains_key("montecarlo_slope"));
    let csv = std::fs::read_to_string(&out).unwrap();
    for line in csv.lines().skip(1) {
        assert_eq!(
            line.split(',').filter(|f| !f.is_empty()).count(),
            4,
            "{line}"
        );
    }
}

#[test]
fn empty_alpha_list_is_usage_error() {
    assert_eq!(
        franson(&["alpha-sweep", "--preset", "fig4c", "--alphas"])
            .status
            .code(),
        Some(2)
    );
    assert_eq!(
        franson(&["alpha-sweep", "--preset", "fig4c"]).status.code(),
        Some(2)
    );
}

#[test]
fn source_is_required_and_exclusive() {
    assert_eq!(franson(&["visibility"]).status.code(), Some(2));
    assert_eq!(
        franson(&["visibility", "--preset", "fig4a", "--config", "x.toml"])
            .status
            .code(),
        Some(2)
    );
}

#[test]
fn montecarlo_outputs_are_deterministic() {
    let dir = tempfile::tempdir().unwrap();
    let run = |tag: &str| {
        let p = |n: &str| dir.path().join(format!("{tag}-{n}")).display().to_string();
        let (out, hist, events) = (p("batches.csv"), p("hist.csv"), p("events.csv"));
        let report = ok(&[
            "montecarlo",
            "--preset",
            "fig4a",
            "--seed",
            "42",
            "--gates",
            "320000",
            "--batches",
            "3",
            "--out",
            &out,
            "--histogram",
            &hist,
            "--events",
            &events,
        ]);
        let read = |f: &str| std::fs::read(f).unwrap();
        (report, read(&out), read(&hist), read(&events))
    };
    let first = run("a");
    assert_eq!(first, run("b"));
    let (report_text, batches, hist, events) = first;
    assert_eq!(report(&report_text)["delay_gates"], 3.0);
    assert!(String::from_utf8(batches)
        .unwrap()
        .starts_with("batch,visibility\n"));
    assert!(String::from_utf8(hist)
        .unwrap()
        .starts_with("offset,counts\n"));
    assert!(String::from_utf8(events)
        .unwrap()
        .starts_with("detector,gate_index\n"));

    let other = ok(&[
        "montecarlo",
        "--preset",
        "fig4a",
        "--seed",
        "43",
        "--gates",
        "320000",
        "--batches",
        "3",
    ]);
    assert_ne!(other, run("c").0);
}

#[test]
fn design_nonlocal_idler_arm() {
    let dir = tempfile::tempdir().unwrap();
    let problem = write(
        dir.path(),
        "p.toml",
        "target_d_beta2_ps2 = 2.2018e-2\ndelta_t_ns = 4.77\nshort_fiber = \"SMF\"\nshort_length_mm = 1900.0\nlong_fibers = [\"LEAF\", \"SMF\"]\n",
    );
    let text = ok(&["design", "--problem", &problem, "--fragment", "idler_arm"]);
    let r = report(&text);
    assert!((r["length_mm.LEAF"] / 2695.0 - 1.0).abs() <= 0.05);
    assert!((r["length_mm.SMF"] / 180.0 - 1.0).abs() <= 0.05);
    assert!(r["forward_check_residual_ps2"].abs() <= 1e-5);
    assert!(text.contains("[idler_arm]"), "{text}");
}

#[test]
fn design_fragment_drops_into_a_config() {
    let dir = tempfile::tempdir().unwrap();
    let problem = write(
        dir.path(),
        "p.toml",
        "target_d_beta2_ps2 = 2.2018e-2\ndelta_t_ns = 4.77\nshort_fiber = \"SMF\"\nshort_length_mm = 1900.0\nlong_fibers = [\"LEAF\", \"SMF\"]\n",
    );
    let text = ok(&["design", "--problem", &problem, "--fragment", "idler_arm"]);
    let fragment = &text[text.find("[idler_arm]").unwrap()..];
    let base = ok(&["presets", "show", "fig4a"]);
    let start = base.find("[idler_arm]").unwrap();
    let end = start + base[start..].find("\n[noise]").unwrap();
    let merged = format!("{}{}\n{}", &base[..start], fragment, &base[end + 1..]);
    let cfg = write(dir.path(), "exp.toml", &merged);
    let r = report(&ok(&["visibility", "--config", &cfg]));
    assert!((r["visibility_integral"] - 1.0).abs() <= 1e-6, "{merged}");
}

#[test]
fn design_local_zero() {
    let dir = tempfile::tempdir().unwrap();
    let problem = write(
        dir.path(),
        "p.toml",
        "target_d_beta2_ps2 = 0.0\ndelta_t_ns = 4.77\nshort_fiber = \"SMF\"\nshort_length_mm = 1900.0\nlong_fibers = [\"LEAF\", \"SMF\"]\n",
    );
    let r = report(&ok(&["design", "--problem", &problem]));
    assert!(r["achieved_d_beta2_ps2"].abs() <= 1e-5);
    let (leaf, smf) = (r["length_mm.LEAF"], r["length_mm.SMF"]);
    assert!(leaf > 0.0 && smf > 0.0);
    // equal group indices: the long path exceeds the short one by ΔT·c/n_g
    let excess = 4.77 * 299.792458 / 1.468;
    assert!((leaf + smf - 1900.0 - excess).abs() < 1e-6, "{leaf} {smf}");
}

#[test]
fn design_infeasible_single_fiber() {
    let dir = tempfile::tempdir().unwrap();
    let problem = write(
        dir.path(),
        "p.toml",
        "target_d_beta2_ps2 = 0.0\ndelta_t_ns = 4.77\nshort_fiber = \"SMF\"\nshort_length_mm = 1900.0\nlong_fibers = [\"SMF\"]\n",
    );
    let o = franson(&["design", "--problem", &problem]);
    assert_eq!(o.status.code(), Some(5));
    assert!(!stderr(&o).is_empty());
}

#[test]
fn design_uses_extra_catalog() {
    let dir = tempfile::tempdir().unwrap();
    let catalog = write(
        dir.path(),
        "fibers.toml",
        "[[fiber]]\nname = \"DCF\"\nbeta2_fs2_per_mm = 120.0\n",
    );
    let problem = write(
        dir.path(),
        "p.toml",
        "target_d_beta2_ps2 = 0.0\ndelta_t_ns = 4.77\nshort_fiber = \"SMF\"\nshort_length_mm = 1900.0\nlong_fibers = [\"DCF\", \"SMF\"]\n",
    );
    assert_eq!(
        franson(&["design", "--problem", &problem]).status.code(),
        Some(4)
    );
    let r = report(&ok(&[
        "design",
        "--problem",
        &problem,
        "--catalog",
        &catalog,
    ]));
    assert!(r["length_mm.DCF"] > 0.0);
}

#[test]
fn exit_codes_by_error_class() {
    let dir = tempfile::tempdir().unwrap();
    let bad = write(
        dir.path(),
        "bad.toml",
        "[spectrum]\nmodel = \"sinc2\"\nfwhm_nm = 1.6\ncolour = 3\n",
    );
    let o = franson(&["visibility", "--config", &bad]);
    assert_eq!(o.status.code(), Some(3));
    assert!(stderr(&o).contains("line 4"), "{}", stderr(&o));

    assert_eq!(
        franson(&["visibility", "--preset", "fig9"]).status.code(),
        Some(4)
    );
    assert_eq!(
        franson(&["visibility", "--config", "/no/such/file.toml"])
            .status
            .code(),
        Some(7)
    );

    // a delay mismatch between the two interferometers violates the physics contract
    let text =
        ok(&["presets", "show", "fig4a"]).replacen("delta_t_ns = 4.77", "delta_t_ns = 4.9", 1);
    let cfg = write(dir.path(), "mismatch.toml", &text);
    let o = franson(&["visibility", "--config", &cfg]);
    assert_eq!(o.status.code(), Some(4), "{}", stderr(&o));

    // all events dark: no fringe to fit
    let text = ok(&["presets", "show", "fig4c"]).replace("alpha = 0.0024", "alpha = 0.0");
    let cfg = write(dir.path(), "dark.toml", &text);
    let o = franson(&[
        "montecarlo",
        "--config",
        &cfg,
        "--gates",
        "64000",
        "--batches",
        "2",
    ]);
    assert_eq!(o.status.code(), Some(6), "{}", stderr(&o));
}

#[test]
fn presets_list_and_show_round_trip() {
    let list = ok(&["presets", "list"]);
    for name in ["fig4a", "fig4b", "fig4c", "fig4d"] {
        assert!(list.contains(name));
        let dir = tempfile::tempdir().unwrap();
        let cfg = write(dir.path(), "p.toml", &ok(&["presets", "show", name]));
        assert_eq!(
            ok(&["visibility", "--config", &cfg]).replace(&cfg, name),
            ok(&["visibility", "--preset", name])
        );
    }
}

#[test]
fn filtered_preset_reports_flux_penalty() {
    let r = report(&ok(&["visibility", "--preset", "fig4b"]));
    assert!(r["visibility_integral"] >= 0.9999);
    assert!(r["passband_fraction"] > 0.0 && r["passband_fraction"] < 0.5);
}
