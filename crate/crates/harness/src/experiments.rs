//! Monte Carlo drivers behind each experiment kind.
//!
//! Every driver fans trials out with rayon and collects them in index order,
//! so results depend only on the master seed.

use std::path::{Path, PathBuf};

use mixfield::estimators::EstimateRecord;
use mixfield::rng::{derive_seed, trial_rng};
use mixfield::{
    cartesian_from_spherical, compatibility_metric, empirical_cdf, rmse, run_tracking,
    spherical_from_cartesian, switching_distance, Mobility, OpTally, Point3F64, ScenarioF64,
    ScenarioName, ScenarioPreset, Scheme, SimLocalizer, SphericalPose, TrackConfig, TrackLog,
};
use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::config::{Direction, ExperimentKind, ExperimentSpec, Overrides};
use crate::error::Result;
use crate::output::{write_artifact, Header};

const STREAM_PLACEMENT: u64 = 0x706c_6163;
const STREAM_CHANNEL: u64 = 0x6368_616e;
const STREAM_PATH: u64 = 0x7061_7468;
const STREAM_TRACK: u64 = 0x7472_6b73;

/// Preset plus overrides, with the search settings validated.
pub fn build_scenario(name: ScenarioName, o: &Overrides) -> Result<ScenarioF64> {
    let mut p = ScenarioPreset::new(name);
    if let Some(v) = o.tx_power_dbm {
        p.tx_power_dbm = v;
    }
    if let Some(j) = o.j1 {
        p.j1 = j;
    }
    if let Some([r, a, e]) = o.nf_grid {
        p.nf_grid = (r, a, e);
        p.j2 = r * a * e;
    }
    let mut s: ScenarioF64 = p.build()?;
    let c = &mut s.search;
    if let Some(v) = o.outer_iters {
        c.outer_iters = v;
    }
    if let Some(v) = o.range_steps {
        c.range_steps = v;
    }
    if let Some(v) = o.angle_steps {
        c.angle_steps = v;
    }
    if let Some(v) = o.rssi_floor {
        c.rssi_floor = v;
    }
    if let Some(v) = o.refine_factor {
        c.refine_factor = v;
    }
    s.search.validate(&s.grid)?;
    Ok(s)
}

/// `count` log-spaced points over `[lo, hi]`.
pub fn log_spaced(lo: f64, hi: f64, count: usize) -> Vec<f64> {
    if count < 2 {
        return vec![lo];
    }
    let (a, b) = (lo.ln(), hi.ln());
    (0..count)
        .map(|i| (a + (b - a) * i as f64 / (count - 1) as f64).exp())
        .collect()
}

fn sweep_distances(s: &ScenarioF64, o: &Overrides) -> Vec<f64> {
    o.distances
        .clone()
        .unwrap_or_else(|| log_spaced(s.preset.d_range.0, s.preset.d_range.1, 12))
}

/// Errors of one estimate against the truth.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ErrorSample {
    pub position: f64,
    pub dof: f64,
    pub az: f64,
    pub el: f64,
}

#[derive(Debug, Clone)]
pub struct DistanceErrors {
    pub d: f64,
    pub ff: Vec<ErrorSample>,
    pub nf: Vec<ErrorSample>,
    pub records: Vec<EstimateRecord>,
}

/// Both schemes on the same random placements at every distance.
pub fn mismatch_study(
    s: &ScenarioF64,
    distances: &[f64],
    trials: usize,
    seed: u64,
) -> Result<Vec<DistanceErrors>> {
    let jobs: Vec<(usize, usize)> = (0..distances.len())
        .flat_map(|i| (0..trials).map(move |t| (i, t)))
        .collect();
    let results: Vec<[(ErrorSample, EstimateRecord); 2]> = jobs
        .par_iter()
        .map(|&(i, t)| {
            let index = ((i as u64) << 32) | t as u64;
            let mut rng = trial_rng(derive_seed(seed, STREAM_PLACEMENT, index));
            let truth = s.sample_ue(distances[i], &mut rng)?;
            let pose = spherical_from_cartesian(truth, s.origin())?;
            let channel_seed = derive_seed(seed, STREAM_CHANNEL, index);
            let run = |scheme| -> Result<(ErrorSample, EstimateRecord)> {
                let est = s.estimate(scheme, truth, channel_seed)?;
                let sample = ErrorSample {
                    position: est.position.distance(truth),
                    dof: est.pose.dof - pose.dof,
                    az: est.pose.az - pose.az,
                    el: est.pose.el - pose.el,
                };
                Ok((sample, EstimateRecord::new(index, truth, pose, &est)))
            };
            Ok([run(Scheme::Ff)?, run(Scheme::Nf)?])
        })
        .collect::<Result<_>>()?;

    let mut out: Vec<DistanceErrors> = distances
        .iter()
        .map(|&d| DistanceErrors {
            d,
            ff: Vec::with_capacity(trials),
            nf: Vec::with_capacity(trials),
            records: Vec::with_capacity(2 * trials),
        })
        .collect();
    for (&(i, _), [ff, nf]) in jobs.iter().zip(results) {
        out[i].ff.push(ff.0);
        out[i].nf.push(nf.0);
        out[i].records.extend([ff.1, nf.1]);
    }
    Ok(out)
}

fn rmse_of(samples: &[ErrorSample], f: impl Fn(&ErrorSample) -> f64) -> Result<f64> {
    let v: Vec<f64> = samples.iter().map(f).collect();
    Ok(rmse(&v)?)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PosRmseRow {
    pub d: f64,
    pub rmse_ff: f64,
    pub rmse_nf: f64,
}

/// Range in meters, angles in radians.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ParamRmseRow {
    pub d: f64,
    pub dof_ff: f64,
    pub dof_nf: f64,
    pub az_ff: f64,
    pub az_nf: f64,
    pub el_ff: f64,
    pub el_nf: f64,
}

pub fn pos_rmse_rows(study: &[DistanceErrors]) -> Result<Vec<PosRmseRow>> {
    study
        .iter()
        .map(|e| {
            Ok(PosRmseRow {
                d: e.d,
                rmse_ff: rmse_of(&e.ff, |s| s.position)?,
                rmse_nf: rmse_of(&e.nf, |s| s.position)?,
            })
        })
        .collect()
}

pub fn param_rmse_rows(study: &[DistanceErrors]) -> Result<Vec<ParamRmseRow>> {
    study
        .iter()
        .map(|e| {
            Ok(ParamRmseRow {
                d: e.d,
                dof_ff: rmse_of(&e.ff, |s| s.dof)?,
                dof_nf: rmse_of(&e.nf, |s| s.dof)?,
                az_ff: rmse_of(&e.ff, |s| s.az)?,
                az_nf: rmse_of(&e.nf, |s| s.az)?,
                el_ff: rmse_of(&e.ff, |s| s.el)?,
                el_nf: rmse_of(&e.nf, |s| s.el)?,
            })
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GRow {
    pub scenario: ScenarioName,
    pub dz: f64,
    pub d: f64,
    pub g: f64,
}

/// Compatibility at azimuth zero for every `(scenario, dz, d)` with `d > dz`.
pub fn g_sweep(
    scenarios: &[ScenarioF64],
    height_offsets: &[f64],
    distances: &[f64],
) -> Result<Vec<GRow>> {
    let mut jobs = Vec::new();
    for s in scenarios {
        for &dz in height_offsets {
            for &d in distances.iter().filter(|&&d| d > dz) {
                jobs.push((s, dz, d));
            }
        }
    }
    jobs.par_iter()
        .map(|&(s, dz, d)| {
            let p =
                cartesian_from_spherical(SphericalPose::new(d, 0.0, (-dz / d).asin())?, s.origin());
            Ok(GRow {
                scenario: s.preset.name,
                dz,
                d,
                g: compatibility_metric(&s.geom, &s.grid, p)?,
            })
        })
        .collect()
}

/// One protocol configuration compared in the tracking study.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum TrackVariant {
    FfOnly,
    NfOnly,
    Adaptive { threshold: f64 },
}

impl TrackVariant {
    pub fn label(&self) -> String {
        match self {
            TrackVariant::FfOnly => "ff-only".into(),
            TrackVariant::NfOnly => "nf-only".into(),
            TrackVariant::Adaptive { threshold } => format!("adaptive-th{threshold}"),
        }
    }

    pub fn config(&self, base: &TrackConfig<f64>) -> TrackConfig<f64> {
        match *self {
            TrackVariant::FfOnly => base.clone().ff_only(),
            TrackVariant::NfOnly => base.clone().nf_only(),
            TrackVariant::Adaptive { threshold } => TrackConfig {
                error_threshold: threshold,
                ..base.clone()
            },
        }
    }
}

/// Tracking defaults for `s`, with overrides applied.
pub fn track_config(s: &ScenarioF64, o: &Overrides) -> TrackConfig<f64> {
    let mut cfg = TrackConfig::new(usize::MAX, o.nf_limit.unwrap_or(s.preset.fd));
    if let Some(v) = o.memory_window {
        cfg.memory_window = v;
    }
    if let Some(v) = o.poly_degree {
        cfg.poly_degree = v;
    }
    if let Some(v) = o.step_period {
        cfg.step_period = v;
    }
    if let Some(v) = o.flush_on_switch {
        cfg.flush_on_switch = v;
    }
    if let Some(t) = o.error_threshold {
        cfg.error_threshold = t;
    }
    cfg.initial_scheme = o
        .initial_scheme
        .unwrap_or(match o.direction.unwrap_or_default() {
            Direction::Inbound => Scheme::Ff,
            Direction::Outbound => Scheme::Nf,
        });
    cfg
}

/// Far end of the radial paths, meters.
pub const PATH_FAR: f64 = 20.0;
/// Near end of the radial paths, meters.
pub const PATH_NEAR: f64 = 2.0;
pub const DEFAULT_SPEED: f64 = 2.0;

/// Radial paths at random azimuth and height, one per run.
pub fn radial_paths(
    s: &ScenarioF64,
    runs: usize,
    seed: u64,
    direction: Direction,
    speed: f64,
    step_period: f64,
) -> Result<Vec<Mobility<f64>>> {
    let far = PATH_FAR.min(s.preset.d_range.1);
    let near = PATH_NEAR.max(s.preset.d_range.0);
    let (from, to) = match direction {
        Direction::Inbound => (far, near),
        Direction::Outbound => (near, far),
    };
    (0..runs)
        .map(|run| {
            let mut rng = trial_rng(derive_seed(seed, STREAM_PATH, run as u64));
            let (lo, hi) = s.preset.az_range;
            let az = rng.random_range(lo..=hi);
            let (zl, zh) = s.preset.ue_z_range;
            let z = rng.random_range(zl..=zh);
            Ok(Mobility::radial(
                s.origin(),
                az,
                z,
                from,
                to,
                speed,
                step_period,
            )?)
        })
        .collect()
}

/// Runs every path with `cfg`; run `i` draws its channels from the same
/// seed under every configuration.
pub fn track_runs(
    s: &ScenarioF64,
    cfg: &TrackConfig<f64>,
    paths: &[Mobility<f64>],
    seed: u64,
    stop_at_switch: bool,
) -> Result<Vec<TrackLog>> {
    paths
        .par_iter()
        .enumerate()
        .map(|(run, path)| {
            let mut loc = SimLocalizer::new(s, derive_seed(seed, STREAM_TRACK, run as u64));
            Ok(run_tracking(
                path,
                cfg,
                &s.region,
                s.origin(),
                &mut loc,
                stop_at_switch,
            )?)
        })
        .collect()
}

#[derive(Debug, Clone)]
pub struct VariantLogs {
    pub variant: TrackVariant,
    pub logs: Vec<TrackLog>,
}

pub fn tracking_study(s: &ScenarioF64, spec: &ExperimentSpec) -> Result<Vec<VariantLogs>> {
    let o = &spec.overrides;
    let base = track_config(s, o);
    let direction = o.direction.unwrap_or_default();
    let speed = o.speed.unwrap_or(DEFAULT_SPEED);
    let paths = radial_paths(
        s,
        spec.trials,
        spec.seed,
        direction,
        speed,
        base.step_period,
    )?;
    let mut variants = vec![TrackVariant::FfOnly, TrackVariant::NfOnly];
    variants.extend(
        spec.error_thresholds()
            .into_iter()
            .map(|threshold| TrackVariant::Adaptive { threshold }),
    );
    variants
        .into_iter()
        .map(|variant| {
            log::info!("tracking variant {}", variant.label());
            let logs = track_runs(s, &variant.config(&base), &paths, spec.seed, false)?;
            Ok(VariantLogs { variant, logs })
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrackRmseRow {
    pub variant: String,
    pub bin_lo: f64,
    pub bin_hi: f64,
    pub rmse: f64,
    pub count: usize,
}

/// Position RMSE of every step, pooled over runs, in bins of true range.
pub fn binned_rmse(v: &VariantLogs, width: f64) -> Result<Vec<TrackRmseRow>> {
    let mut bins: std::collections::BTreeMap<i64, Vec<f64>> = Default::default();
    for row in v.logs.iter().flat_map(|l| &l.rows) {
        if let Some(e) = row.position_error() {
            bins.entry((row.true_dof / width).floor() as i64)
                .or_default()
                .push(e);
        }
    }
    bins.into_iter()
        .map(|(b, errs)| {
            Ok(TrackRmseRow {
                variant: v.variant.label(),
                bin_lo: b as f64 * width,
                bin_hi: (b + 1) as f64 * width,
                rmse: rmse(&errs)?,
                count: errs.len(),
            })
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrackUsageRow {
    pub variant: String,
    pub runs: usize,
    pub estimations: usize,
    pub nf_usage: f64,
}

/// Near-field share of all estimator runs, pooled over runs.
pub fn usage(v: &VariantLogs) -> TrackUsageRow {
    let rows = v.logs.iter().flat_map(|l| &l.rows);
    let (mut nf, mut all) = (0, 0);
    for r in rows {
        nf += r.nf_run as usize;
        all += r.nf_run as usize + r.ff_run as usize;
    }
    TrackUsageRow {
        variant: v.variant.label(),
        runs: v.logs.len(),
        estimations: all,
        nf_usage: if all == 0 {
            0.0
        } else {
            nf as f64 / all as f64
        },
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrackStepRow {
    pub variant: String,
    pub run: usize,
    pub k: usize,
    pub t: f64,
    pub true_x: f64,
    pub true_y: f64,
    pub true_z: f64,
    pub true_dof: f64,
    pub est_x: Option<f64>,
    pub est_y: Option<f64>,
    pub est_z: Option<f64>,
    pub scheme: u8,
    pub traj_error: Option<f64>,
    pub switched: bool,
    pub pos_err: Option<f64>,
}

pub fn step_rows(v: &VariantLogs) -> Vec<TrackStepRow> {
    let label = v.variant.label();
    v.logs
        .iter()
        .enumerate()
        .flat_map(|(run, log)| {
            let label = label.clone();
            log.rows.iter().map(move |r| TrackStepRow {
                variant: label.clone(),
                run,
                k: r.k,
                t: r.t,
                true_x: r.true_x,
                true_y: r.true_y,
                true_z: r.true_z,
                true_dof: r.true_dof,
                est_x: r.est_x,
                est_y: r.est_y,
                est_z: r.est_z,
                scheme: r.scheme,
                traj_error: r.traj_error,
                switched: r.switched,
                pos_err: r.position_error(),
            })
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SwitchRow {
    pub scenario: ScenarioName,
    pub threshold: f64,
    pub run: usize,
    /// Empty when the run never requested the near-field scheme.
    pub switch_d: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SwitchSummaryRow {
    pub scenario: ScenarioName,
    pub threshold: f64,
    pub runs: usize,
    pub censored: f64,
    pub median: Option<f64>,
    pub iqr: Option<f64>,
}

/// Inbound switching distances for every scenario and threshold.
pub fn switch_study(spec: &ExperimentSpec) -> Result<Vec<SwitchRow>> {
    let o = &spec.overrides;
    let names =
        o.scenarios
            .clone()
            .unwrap_or(vec![ScenarioName::A, ScenarioName::B, ScenarioName::C]);
    let mut rows = Vec::new();
    for name in names {
        let s = build_scenario(name, o)?;
        let base = track_config(&s, o);
        let speed = o.speed.unwrap_or(DEFAULT_SPEED);
        let paths = radial_paths(
            &s,
            spec.trials,
            spec.seed,
            Direction::Inbound,
            speed,
            base.step_period,
        )?;
        for threshold in spec.error_thresholds() {
            let cfg = TrackConfig {
                error_threshold: threshold,
                initial_scheme: Scheme::Ff,
                ..base.clone()
            };
            log::info!("switching runs: scenario {name}, threshold {threshold}");
            let logs = track_runs(&s, &cfg, &paths, spec.seed, true)?;
            rows.extend(logs.iter().enumerate().map(|(run, log)| SwitchRow {
                scenario: name,
                threshold,
                run,
                switch_d: switching_distance(log),
            }));
        }
    }
    Ok(rows)
}

pub fn switch_summary(rows: &[SwitchRow]) -> Result<Vec<SwitchSummaryRow>> {
    let mut groups: Vec<(ScenarioName, f64)> = Vec::new();
    for r in rows {
        if !groups.contains(&(r.scenario, r.threshold)) {
            groups.push((r.scenario, r.threshold));
        }
    }
    groups
        .into_iter()
        .map(|(scenario, threshold)| {
            let samples: Vec<Option<f64>> = rows
                .iter()
                .filter(|r| r.scenario == scenario && r.threshold == threshold)
                .map(|r| r.switch_d)
                .collect();
            let cdf = empirical_cdf(&samples)?;
            Ok(SwitchSummaryRow {
                scenario,
                threshold,
                runs: samples.len(),
                censored: cdf.censored_fraction(),
                median: cdf.median(),
                iqr: cdf.iqr(),
            })
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ComplexityRow {
    pub side: usize,
    pub n_bs: usize,
    pub j1: usize,
    pub j2: usize,
    pub ff_steering: u64,
    pub nf_steering: u64,
    pub ff_inner: u64,
    pub nf_inner: u64,
    pub nf_distance: u64,
    pub steering_ratio: f64,
    pub inner_ratio: f64,
}

/// Literal-mode operation counts of both estimators for one noiseless UE.
pub fn complexity_point(s: &ScenarioF64) -> Result<(OpTally, OpTally)> {
    let d = 0.5 * (s.preset.d_range.0 + s.preset.d_range.1);
    let dz = 0.5 * (s.preset.ue_z_range.0 + s.preset.ue_z_range.1) - s.preset.bs_position[2];
    let truth: Point3F64 =
        cartesian_from_spherical(SphericalPose::new(d, 0.1, (dz / d).asin())?, s.origin());
    let mut quiet = s.clone();
    quiet.noise_var = 0.0;
    let search = s.literal_search();
    let ff = quiet.estimate_with(Scheme::Ff, truth, 0, &search)?;
    let nf = quiet.estimate_with(Scheme::Nf, truth, 0, &search)?;
    Ok((ff.tally, nf.tally))
}

pub fn complexity_study(spec: &ExperimentSpec) -> Result<Vec<ComplexityRow>> {
    let o = &spec.overrides;
    let sides = o.array_sides.clone().unwrap_or(vec![8, 16, 24, 32]);
    let ratios = o.beam_ratios.clone().unwrap_or(vec![1, 2, 4]);
    let mut jobs = Vec::new();
    for &side in &sides {
        for &ratio in &ratios {
            jobs.push((side, ratio));
        }
    }
    jobs.par_iter()
        .map(|&(side, ratio)| {
            let mut preset = ScenarioPreset::new(spec.scenario);
            preset.n_x = side;
            preset.n_z = side;
            if let Some(v) = o.tx_power_dbm {
                preset.tx_power_dbm = v;
            }
            let j1 = o.j1.unwrap_or(preset.j1);
            preset.j1 = j1;
            preset.nf_grid = (ratio, j1, 1);
            preset.j2 = ratio * j1;
            let mut s: ScenarioF64 = preset.build()?;
            if let Some(v) = o.outer_iters {
                s.search.outer_iters = v;
            }
            if let Some(v) = o.range_steps {
                s.search.range_steps = v;
            }
            if let Some(v) = o.angle_steps {
                s.search.angle_steps = v;
            }
            let (ff, nf) = complexity_point(&s)?;
            let ratio = mixfield::complexity_ratio(&nf, &ff)?;
            Ok(ComplexityRow {
                side,
                n_bs: side * side,
                j1,
                j2: preset.j2,
                ff_steering: ff.steering_constructions,
                nf_steering: nf.steering_constructions,
                ff_inner: ff.inner_products,
                nf_inner: nf.inner_products,
                nf_distance: nf.distance_evals,
                steering_ratio: ratio.steering_constructions,
                inner_ratio: ratio.inner_products,
            })
        })
        .collect()
}

/// Files written and a few headline numbers.
#[derive(Debug, Clone, Default)]
pub struct RunSummary {
    pub artifacts: Vec<PathBuf>,
    pub lines: Vec<String>,
}

fn header(spec: &ExperimentSpec, scenarios: &[ScenarioName]) -> Header {
    Header {
        kind: spec.kind,
        scenario: scenarios
            .iter()
            .map(|s| s.to_string())
            .collect::<Vec<_>>()
            .join("+"),
        seed: spec.seed,
    }
}

/// Dispatches on the experiment kind and writes its artifacts under `out`.
pub fn run_experiment(spec: &ExperimentSpec, out: &Path) -> Result<RunSummary> {
    spec.validate()?;
    let o = &spec.overrides;
    let mut summary = RunSummary::default();
    let single = header(spec, &[spec.scenario]);
    let name = spec.kind.as_str().replace('-', "_");
    match spec.kind {
        ExperimentKind::PosRmse | ExperimentKind::DofAodRmse => {
            let s = build_scenario(spec.scenario, o)?;
            let study = mismatch_study(&s, &sweep_distances(&s, o), spec.trials, spec.seed)?;
            if spec.kind == ExperimentKind::PosRmse {
                let rows = pos_rmse_rows(&study)?;
                for r in &rows {
                    summary.lines.push(format!(
                        "d={:.3} rmse_ff={:.4} rmse_nf={:.4}",
                        r.d, r.rmse_ff, r.rmse_nf
                    ));
                }
                summary
                    .artifacts
                    .push(write_artifact(out, &name, &single, &rows)?);
            } else {
                let rows = param_rmse_rows(&study)?;
                summary
                    .artifacts
                    .push(write_artifact(out, &name, &single, &rows)?);
            }
            let records: Vec<EstimateRecord> = study.into_iter().flat_map(|e| e.records).collect();
            summary.artifacts.push(write_artifact(
                out,
                &format!("{name}_trials"),
                &single,
                &records,
            )?);
        }
        ExperimentKind::GSweep => {
            let names = o
                .scenarios
                .clone()
                .unwrap_or(vec![ScenarioName::A, ScenarioName::B]);
            let scenarios = names
                .iter()
                .map(|&n| build_scenario(n, o))
                .collect::<Result<Vec<_>>>()?;
            let distances = o
                .distances
                .clone()
                .unwrap_or_else(|| log_spaced(1.0, 30.0, 40));
            let dzs = o.height_offsets.clone().unwrap_or(vec![0.0, 0.5, 1.0]);
            let rows = g_sweep(&scenarios, &dzs, &distances)?;
            summary
                .artifacts
                .push(write_artifact(out, &name, &header(spec, &names), &rows)?);
        }
        ExperimentKind::Tracking => {
            let s = build_scenario(spec.scenario, o)?;
            let study = tracking_study(&s, spec)?;
            let mut rmse_rows = Vec::new();
            let mut usage_rows = Vec::new();
            let mut steps = Vec::new();
            for v in &study {
                rmse_rows.extend(binned_rmse(v, 2.0)?);
                let u = usage(v);
                summary
                    .lines
                    .push(format!("{} nf_usage={:.4}", u.variant, u.nf_usage));
                usage_rows.push(u);
                steps.extend(step_rows(v));
            }
            summary
                .artifacts
                .push(write_artifact(out, "tracking_rmse", &single, &rmse_rows)?);
            summary
                .artifacts
                .push(write_artifact(out, "tracking_usage", &single, &usage_rows)?);
            summary
                .artifacts
                .push(write_artifact(out, "tracking_steps", &single, &steps)?);
        }
        ExperimentKind::SwitchCdf => {
            let names = o.scenarios.clone().unwrap_or(vec![
                ScenarioName::A,
                ScenarioName::B,
                ScenarioName::C,
            ]);
            let h = header(spec, &names);
            let rows = switch_study(spec)?;
            let sums = switch_summary(&rows)?;
            for r in &sums {
                summary.lines.push(format!(
                    "scenario={} threshold={} median={:?} iqr={:?} censored={:.3}",
                    r.scenario, r.threshold, r.median, r.iqr, r.censored
                ));
            }
            summary
                .artifacts
                .push(write_artifact(out, "switch_cdf", &h, &rows)?);
            summary
                .artifacts
                .push(write_artifact(out, "switch_cdf_summary", &h, &sums)?);
        }
        ExperimentKind::Complexity => {
            let rows = complexity_study(spec)?;
            for r in &rows {
                summary.lines.push(format!(
                    "n_bs={} j2/j1={} inner_ratio={:.3}",
                    r.n_bs,
                    r.j2 / r.j1,
                    r.inner_ratio
                ));
            }
            summary
                .artifacts
                .push(write_artifact(out, &name, &single, &rows)?);
        }
    }
    Ok(summary)
}
