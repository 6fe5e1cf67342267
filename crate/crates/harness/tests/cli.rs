use std::fs;
use std::path::Path;
use std::process::Command;

use mixfield::ScenarioName;
use mixfield_harness::experiments::{ComplexityRow, GRow, SwitchSummaryRow, TrackUsageRow};
use mixfield_harness::output::read_rows;
use mixfield_harness::{parse_config, run_experiment, ExperimentKind, ExperimentSpec};

fn spec(kind: ExperimentKind, toml_overrides: &str) -> ExperimentSpec {
    parse_config(
        &format!("kind = \"{kind}\"\n[overrides]\n{toml_overrides}"),
        None,
    )
    .unwrap()
}

fn read(dir: &Path, name: &str) -> String {
    fs::read_to_string(dir.join(format!("{name}.csv"))).unwrap()
}

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_mixfield"))
}

#[test]
fn same_seed_gives_identical_artifacts() {
    let mut s = spec(ExperimentKind::PosRmse, "distances = [4.0, 20.0]\n");
    s.trials = 3;
    s.seed = 7;
    let (a, b) = (tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap());
    run_experiment(&s, a.path()).unwrap();
    run_experiment(&s, b.path()).unwrap();
    for name in ["pos_rmse", "pos_rmse_trials"] {
        assert_eq!(read(a.path(), name), read(b.path(), name), "{name}");
    }

    let text = read(a.path(), "pos_rmse");
    let mut lines = text.lines();
    assert!(lines
        .next()
        .unwrap()
        .starts_with("# kind=pos-rmse scenario=A seed=7 version="));
    assert_eq!(lines.next().unwrap(), "d,rmse_ff,rmse_nf");
    assert_eq!(lines.count(), 2);

    s.seed = 8;
    run_experiment(&s, b.path()).unwrap();
    assert_ne!(
        read(a.path(), "pos_rmse_trials"),
        read(b.path(), "pos_rmse_trials")
    );
}

#[test]
fn parameter_rmse_has_one_row_per_distance() {
    let mut s = spec(ExperimentKind::DofAodRmse, "distances = [5.0]\n");
    s.trials = 2;
    let dir = tempfile::tempdir().unwrap();
    run_experiment(&s, dir.path()).unwrap();
    let text = read(dir.path(), "dof_aod_rmse");
    assert_eq!(
        text.lines().nth(1).unwrap(),
        "d,dof_ff,dof_nf,az_ff,az_nf,el_ff,el_nf"
    );
    assert_eq!(text.lines().count(), 3);
}

#[test]
fn g_sweep_writes_six_curves() {
    let s = spec(
        ExperimentKind::GSweep,
        "distances = [0.8, 2.0, 10.0, 30.0]\n",
    );
    let dir = tempfile::tempdir().unwrap();
    run_experiment(&s, dir.path()).unwrap();
    let rows: Vec<GRow> = read_rows(&read(dir.path(), "g_sweep")).unwrap();
    let mut curves: Vec<(ScenarioName, u64)> =
        rows.iter().map(|r| (r.scenario, r.dz.to_bits())).collect();
    curves.dedup();
    assert_eq!(curves.len(), 6);
    assert!(rows
        .iter()
        .all(|r| r.d > r.dz && r.g > 0.0 && r.g <= 1.0 + 1e-12));
}

#[test]
fn complexity_ratio_grows_with_beam_count() {
    let s = spec(
        ExperimentKind::Complexity,
        "array_sides = [8]\nbeam_ratios = [1, 4]\n",
    );
    let dir = tempfile::tempdir().unwrap();
    run_experiment(&s, dir.path()).unwrap();
    let rows: Vec<ComplexityRow> = read_rows(&read(dir.path(), "complexity")).unwrap();
    assert_eq!(rows.len(), 2);
    assert_eq!((rows[0].j2, rows[1].j2), (21, 84));
    assert!(rows[1].inner_ratio > rows[0].inner_ratio);
    assert!(rows.iter().all(|r| r.nf_distance == r.nf_steering));
}

#[test]
fn tracking_reports_every_variant() {
    let mut s = spec(ExperimentKind::Tracking, "speed = 4.0\n");
    s.scenario = ScenarioName::B;
    s.trials = 1;
    let dir = tempfile::tempdir().unwrap();
    run_experiment(&s, dir.path()).unwrap();
    let usage: Vec<TrackUsageRow> = read_rows(&read(dir.path(), "tracking_usage")).unwrap();
    let labels: Vec<&str> = usage.iter().map(|u| u.variant.as_str()).collect();
    assert_eq!(
        labels,
        ["ff-only", "nf-only", "adaptive-th4", "adaptive-th2"]
    );
    assert_eq!(usage[0].nf_usage, 0.0);
    assert_eq!(usage[1].nf_usage, 1.0);
    assert!(
        read(dir.path(), "tracking_rmse").lines().nth(1).unwrap()
            == "variant,bin_lo,bin_hi,rmse,count"
    );
    assert!(read(dir.path(), "tracking_steps").lines().count() > 4);
}

#[test]
fn switch_summary_covers_each_threshold() {
    let mut s = spec(
        ExperimentKind::SwitchCdf,
        "scenarios = [\"B\"]\nspeed = 4.0\n",
    );
    s.trials = 2;
    let dir = tempfile::tempdir().unwrap();
    run_experiment(&s, dir.path()).unwrap();
    let rows: Vec<SwitchSummaryRow> = read_rows(&read(dir.path(), "switch_cdf_summary")).unwrap();
    assert_eq!(rows.len(), 2);
    assert!(rows
        .iter()
        .all(|r| r.scenario == ScenarioName::B && r.runs == 2));
    assert_eq!(read(dir.path(), "switch_cdf").lines().count(), 2 + 4);
}

#[test]
fn cli_writes_artifacts_from_a_config() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("g.toml");
    fs::write(
        &cfg,
        "kind = \"g-sweep\"\n[overrides]\ndistances = [2.0, 20.0]\nscenarios = [\"A\"]\n",
    )
    .unwrap();
    let out = dir.path().join("out");
    let status = bin()
        .arg("run")
        .arg("--config")
        .arg(&cfg)
        .arg("--out")
        .arg(&out)
        .output()
        .unwrap();
    assert!(
        status.status.success(),
        "{}",
        String::from_utf8_lossy(&status.stderr)
    );
    assert!(String::from_utf8_lossy(&status.stdout).contains("g_sweep.csv"));
    assert!(read(&out, "g_sweep").starts_with("# kind=g-sweep scenario=A seed=1"));

    let status = bin()
        .args(["complexity", "--seed", "3", "--out"])
        .arg(&out)
        .arg("--config")
        .arg(dir.path().join("c.toml"))
        .output()
        .unwrap();
    assert_eq!(status.status.code(), Some(2), "missing config file");
}

#[test]
fn cli_rejects_bad_input_with_usage_code() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("bad.toml");
    fs::write(&cfg, "kind = \"tracking\"\n[overrides]\nthreshold = 2.0\n").unwrap();
    let cases: [Vec<&str>; 3] = [
        vec!["pos-rmse", "--scenario", "Z"],
        vec!["pos-rmse", "--trials", "0"],
        vec!["run", "--config", cfg.to_str().unwrap()],
    ];
    for args in cases {
        let out = bin()
            .args(&args)
            .arg("--out")
            .arg(dir.path())
            .output()
            .unwrap();
        assert_eq!(
            out.status.code(),
            Some(2),
            "{args:?}: {}",
            String::from_utf8_lossy(&out.stderr)
        );
    }
    let out = bin()
        .args(["tracking", "--config", cfg.to_str().unwrap()])
        .arg("--out")
        .arg(dir.path())
        .output()
        .unwrap();
    assert!(String::from_utf8_lossy(&out.stderr).contains("threshold"));
}
