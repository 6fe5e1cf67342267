//! Adaptive scheme selection for a moving UE.
//!
//! Each step estimates with the currently selected scheme. A far-field
//! estimate is checked against a polynomial trajectory fitted to recent
//! memory and against the near-field range limit; if either check fails the
//! near-field scheme is run again within the same step.

use std::collections::VecDeque;
use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::geometry::Region;
use crate::linalg::{least_squares, Point3};
use crate::ofdm::Scheme;
use crate::scalar::Real;

#[derive(Debug, Clone, PartialEq)]
pub struct TrackConfig<T> {
    /// Number of steps `K`.
    pub horizon: usize,
    /// Most recent memory entries used by a fit.
    pub memory_window: usize,
    pub poly_degree: usize,
    /// Largest accepted gap between estimate and trajectory, meters.
    pub error_threshold: T,
    /// Range below which far-field estimates are not trusted, meters.
    pub nf_limit: T,
    pub initial_scheme: Scheme,
    pub step_period: T,
    pub flush_on_switch: bool,
}

impl<T: Real> TrackConfig<T> {
    pub fn new(horizon: usize, nf_limit: T) -> Self {
        Self {
            horizon,
            memory_window: 10,
            poly_degree: 2,
            error_threshold: T::lit(4.0),
            nf_limit,
            initial_scheme: Scheme::Ff,
            step_period: T::lit(0.25),
            flush_on_switch: true,
        }
    }

    /// Never leaves the far-field scheme.
    pub fn ff_only(mut self) -> Self {
        self.initial_scheme = Scheme::Ff;
        self.error_threshold = T::infinity();
        self.nf_limit = T::zero();
        self
    }

    /// Never leaves the near-field scheme.
    pub fn nf_only(mut self) -> Self {
        self.initial_scheme = Scheme::Nf;
        self.nf_limit = T::infinity();
        self
    }

    pub fn validate(&self) -> Result<()> {
        if self.memory_window <= self.poly_degree {
            return Err(invalid("memory window must exceed the polynomial degree"));
        }
        if !(self.error_threshold > T::zero()) {
            return Err(invalid("error threshold must be positive"));
        }
        if !(self.nf_limit >= T::zero()) {
            return Err(invalid("near-field limit must be non-negative"));
        }
        if !(self.step_period > T::zero()) {
            return Err(invalid("step period must be positive"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MemoryEntry<T> {
    pub time: T,
    pub position: Point3<T>,
    pub scheme: Scheme,
}

/// Time-ordered buffer of accepted positions.
#[derive(Debug, Clone, PartialEq)]
pub struct TrackMemory<T> {
    entries: VecDeque<MemoryEntry<T>>,
    capacity: usize,
}

impl<T: Real> TrackMemory<T> {
    pub fn new(capacity: usize) -> Self {
        Self {
            entries: VecDeque::with_capacity(capacity.min(1024)),
            capacity: capacity.max(1),
        }
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn clear(&mut self) {
        self.entries.clear();
    }

    /// Appends an entry; the oldest is dropped once the capacity is reached.
    pub fn push(&mut self, entry: MemoryEntry<T>) -> Result<()> {
        if let Some(last) = self.entries.back() {
            if !(entry.time > last.time) {
                return Err(invalid("memory times must strictly increase"));
            }
        }
        if self.entries.len() == self.capacity {
            self.entries.pop_front();
        }
        self.entries.push_back(entry);
        Ok(())
    }

    /// Up to `n` most recent entries, oldest first.
    pub fn latest(&self, n: usize) -> Vec<MemoryEntry<T>> {
        let skip = self.entries.len().saturating_sub(n);
        self.entries.iter().skip(skip).copied().collect()
    }

    pub fn iter(&self) -> impl Iterator<Item = &MemoryEntry<T>> {
        self.entries.iter()
    }
}

/// Per-axis polynomial in time, fitted by least squares.
#[derive(Debug, Clone, PartialEq)]
pub struct TrajectoryModel<T> {
    /// Coefficients per axis in the normalized time variable, lowest order first.
    coeffs: [Vec<T>; 3],
    t_center: T,
    t_scale: T,
    fit_times: Vec<T>,
}

impl<T: Real> TrajectoryModel<T> {
    pub fn degree(&self) -> usize {
        self.coeffs[0].len() - 1
    }

    pub fn fit_times(&self) -> &[T] {
        &self.fit_times
    }

    pub fn predict(&self, t: T) -> Point3<T> {
        let s = (t - self.t_center) / self.t_scale;
        let eval = |c: &[T]| c.iter().rev().fold(T::zero(), |acc, &a| acc * s + a);
        Point3::new(
            eval(&self.coeffs[0]),
            eval(&self.coeffs[1]),
            eval(&self.coeffs[2]),
        )
    }
}

/// Fits a degree-`degree` trajectory to the most recent `window` points.
pub fn fit_trajectory<T: Real>(
    points: &[MemoryEntry<T>],
    degree: usize,
    window: usize,
) -> Result<TrajectoryModel<T>> {
    let used = &points[points.len().saturating_sub(window)..];
    let cols = degree + 1;
    if used.len() < cols {
        return Err(Error::InsufficientPoints {
            have: used.len(),
            need: cols,
        });
    }
    let times: Vec<T> = used.iter().map(|e| e.time).collect();
    let lo = times.iter().copied().fold(T::infinity(), T::min);
    let hi = times.iter().copied().fold(T::neg_infinity(), T::max);
    let t_center = (lo + hi) / T::lit(2.0);
    let half = (hi - lo) / T::lit(2.0);
    let t_scale = if half > T::zero() { half } else { T::one() };

    let mut design = Vec::with_capacity(used.len() * cols);
    for &t in &times {
        let s = (t - t_center) / t_scale;
        let mut v = T::one();
        for _ in 0..cols {
            design.push(v);
            v *= s;
        }
    }
    let axis = |f: fn(&Point3<T>) -> T| -> Result<Vec<T>> {
        let b: Vec<T> = used.iter().map(|e| f(&e.position)).collect();
        least_squares(&design, used.len(), cols, &b)
    };
    Ok(TrajectoryModel {
        coeffs: [axis(|p| p.x)?, axis(|p| p.y)?, axis(|p| p.z)?],
        t_center,
        t_scale,
        fit_times: times,
    })
}

pub fn trajectory_error<T: Real>(estimate: Point3<T>, predicted: Point3<T>) -> T {
    estimate.distance(predicted)
}

/// Produces a position estimate for the UE at `truth` using `scheme`.
pub trait Localizer<T> {
    fn localize(&mut self, scheme: Scheme, truth: Point3<T>, step: usize) -> Result<Point3<T>>;
}

impl<T, F> Localizer<T> for F
where
    F: FnMut(Scheme, Point3<T>, usize) -> Result<Point3<T>>,
{
    fn localize(&mut self, scheme: Scheme, truth: Point3<T>, step: usize) -> Result<Point3<T>> {
        self(scheme, truth, step)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrackState<T> {
    pub memory: TrackMemory<T>,
    pub next_scheme: Scheme,
    pub step: usize,
    origin: Point3<T>,
}

impl<T: Real> TrackState<T> {
    pub fn new(cfg: &TrackConfig<T>, origin: Point3<T>) -> Self {
        Self {
            memory: TrackMemory::new(cfg.horizon),
            next_scheme: cfg.initial_scheme,
            step: 0,
            origin,
        }
    }
}

/// What happened during one step.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrackRow {
    pub k: usize,
    pub t: f64,
    pub true_x: f64,
    pub true_y: f64,
    pub true_z: f64,
    pub true_dof: f64,
    pub est_x: Option<f64>,
    pub est_y: Option<f64>,
    pub est_z: Option<f64>,
    /// Scheme of the final estimate (1 far field, 2 near field).
    pub scheme: u8,
    pub ff_run: bool,
    pub nf_run: bool,
    pub traj_error: Option<f64>,
    pub traj_trigger: bool,
    pub range_trigger: bool,
    /// An estimator returned an error during this step.
    pub unreliable: bool,
    /// The near-field scheme was re-run inside a far-field step.
    pub switched: bool,
    pub next_scheme: u8,
}

impl TrackRow {
    pub fn estimate(&self) -> Option<[f64; 3]> {
        Some([self.est_x?, self.est_y?, self.est_z?])
    }

    pub fn position_error(&self) -> Option<f64> {
        let e = self.estimate()?;
        Some(
            ((e[0] - self.true_x).powi(2)
                + (e[1] - self.true_y).powi(2)
                + (e[2] - self.true_z).powi(2))
            .sqrt(),
        )
    }
}

/// Fits memory plus the fresh estimate and returns the smoothed point at `t`;
/// falls back to the estimate while memory holds `degree` points or fewer.
fn smooth<T: Real>(
    memory: &TrackMemory<T>,
    cfg: &TrackConfig<T>,
    t: T,
    estimate: Point3<T>,
    scheme: Scheme,
) -> Point3<T> {
    if memory.len() <= cfg.poly_degree {
        return estimate;
    }
    let mut pts = memory.latest(cfg.memory_window);
    pts.push(MemoryEntry {
        time: t,
        position: estimate,
        scheme,
    });
    fit_trajectory(&pts, cfg.poly_degree, cfg.memory_window + 1)
        .map(|m| m.predict(t))
        .unwrap_or(estimate)
}

/// Runs one protocol step for a UE at `truth`.
pub fn track_step<T: Real, L: Localizer<T> + ?Sized>(
    state: &mut TrackState<T>,
    truth: Point3<T>,
    localizer: &mut L,
    cfg: &TrackConfig<T>,
) -> Result<TrackRow> {
    let k = state.step;
    let t = T::from_count(k) * cfg.step_period;
    let scheme = state.next_scheme;
    let mut row = TrackRow {
        k,
        t: t.as_f64(),
        true_x: truth.x.as_f64(),
        true_y: truth.y.as_f64(),
        true_z: truth.z.as_f64(),
        true_dof: truth.distance(state.origin).as_f64(),
        est_x: None,
        est_y: None,
        est_z: None,
        scheme: scheme.index(),
        ff_run: false,
        nf_run: false,
        traj_error: None,
        traj_trigger: false,
        range_trigger: false,
        unreliable: false,
        switched: false,
        next_scheme: scheme.index(),
    };

    let mut estimate = None;
    let mut rerun = false;
    match scheme {
        Scheme::Ff => {
            row.ff_run = true;
            match localizer.localize(Scheme::Ff, truth, k) {
                Ok(p) => {
                    let predicted = if state.memory.len() > cfg.poly_degree + 1 {
                        fit_trajectory(
                            &state.memory.latest(cfg.memory_window),
                            cfg.poly_degree,
                            cfg.memory_window,
                        )
                        .map(|m| m.predict(t))
                        .unwrap_or(p)
                    } else {
                        p
                    };
                    let err = trajectory_error(p, predicted);
                    row.traj_error = Some(err.as_f64());
                    row.traj_trigger = err > cfg.error_threshold;
                    row.range_trigger = p.distance(state.origin) < cfg.nf_limit;
                    if row.traj_trigger || row.range_trigger {
                        rerun = true;
                    } else {
                        let kept = smooth(&state.memory, cfg, t, p, Scheme::Ff);
                        state.memory.push(MemoryEntry {
                            time: t,
                            position: kept,
                            scheme: Scheme::Ff,
                        })?;
                        estimate = Some((p, Scheme::Ff));
                    }
                }
                Err(e) => {
                    log::debug!("far-field estimate failed at step {k}: {e}");
                    row.unreliable = true;
                    rerun = true;
                }
            }
            if rerun {
                row.switched = true;
                if cfg.flush_on_switch {
                    state.memory.clear();
                }
                row.nf_run = true;
                match localizer.localize(Scheme::Nf, truth, k) {
                    Ok(p) => {
                        state.memory.push(MemoryEntry {
                            time: t,
                            position: p,
                            scheme: Scheme::Nf,
                        })?;
                        estimate = Some((p, Scheme::Nf));
                    }
                    Err(e) => {
                        log::debug!("near-field estimate failed at step {k}: {e}");
                        row.unreliable = true;
                    }
                }
            }
        }
        Scheme::Nf => {
            row.nf_run = true;
            match localizer.localize(Scheme::Nf, truth, k) {
                Ok(p) => {
                    let kept = smooth(&state.memory, cfg, t, p, Scheme::Nf);
                    state.memory.push(MemoryEntry {
                        time: t,
                        position: kept,
                        scheme: Scheme::Nf,
                    })?;
                    estimate = Some((p, Scheme::Nf));
                }
                Err(e) => {
                    log::debug!("near-field estimate failed at step {k}: {e}");
                    row.unreliable = true;
                }
            }
        }
    }

    state.next_scheme = match estimate {
        Some((p, used)) => {
            row.scheme = used.index();
            row.est_x = Some(p.x.as_f64());
            row.est_y = Some(p.y.as_f64());
            row.est_z = Some(p.z.as_f64());
            if p.distance(state.origin) >= cfg.nf_limit {
                Scheme::Ff
            } else {
                Scheme::Nf
            }
        }
        None => Scheme::Nf,
    };
    row.next_scheme = state.next_scheme.index();
    state.step += 1;
    Ok(row)
}

/// Straight-line motion sampled every `step_period`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Mobility<T> {
    pub start: Point3<T>,
    pub velocity: Point3<T>,
    pub step_period: T,
    pub steps: usize,
}

impl<T: Real> Mobility<T> {
    pub fn position(&self, k: usize) -> Point3<T> {
        self.start + self.velocity * (T::from_count(k) * self.step_period)
    }

    /// Horizontal radial motion at fixed height and azimuth, from range
    /// `d_start` to `d_end` at `speed`.
    pub fn radial(
        origin: Point3<T>,
        az: T,
        z: T,
        d_start: T,
        d_end: T,
        speed: T,
        step_period: T,
    ) -> Result<Self> {
        let dz = z - origin.z;
        let horizontal = |d: T| {
            let r2 = d * d - dz * dz;
            if r2 > T::zero() {
                Ok(r2.sqrt())
            } else {
                Err(invalid("range shorter than the height offset"))
            }
        };
        let (r0, r1) = (horizontal(d_start)?, horizontal(d_end)?);
        if !(speed > T::zero()) || !(step_period > T::zero()) {
            return Err(invalid("speed and step period must be positive"));
        }
        let dir = Point3::new(az.sin(), az.cos(), T::zero());
        let start = Point3::new(origin.x, origin.y, z) + dir * r0;
        let sign = if r1 < r0 { -T::one() } else { T::one() };
        let steps = ((r1 - r0).abs() / (speed * step_period) + T::lit(1e-9))
            .floor()
            .to_usize()
            .unwrap_or(0)
            + 1;
        Ok(Self {
            start,
            velocity: dir * (sign * speed),
            step_period,
            steps,
        })
    }
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct TrackLog {
    pub rows: Vec<TrackRow>,
}

impl TrackLog {
    /// Near-field runs over all estimator runs.
    pub fn nf_usage(&self) -> f64 {
        let nf = self.rows.iter().filter(|r| r.nf_run).count();
        let all = nf + self.rows.iter().filter(|r| r.ff_run).count();
        if all == 0 {
            0.0
        } else {
            nf as f64 / all as f64
        }
    }

    pub fn write_csv<W: Write>(&self, w: W) -> Result<()> {
        let mut out = csv::Writer::from_writer(w);
        for r in &self.rows {
            out.serialize(r)?;
        }
        out.flush()?;
        Ok(())
    }
}

/// True range at the first step that ran the near-field scheme.
pub fn switching_distance(log: &TrackLog) -> Option<f64> {
    log.rows.iter().find(|r| r.nf_run).map(|r| r.true_dof)
}

/// Runs the protocol along `mobility`. Steps leaving `region` end the run.
///
/// With `stop_at_switch` the run ends after the first near-field step,
/// which is all a switching-distance study needs.
pub fn run_tracking<T: Real, L: Localizer<T> + ?Sized>(
    mobility: &Mobility<T>,
    cfg: &TrackConfig<T>,
    region: &Region<T>,
    origin: Point3<T>,
    localizer: &mut L,
    stop_at_switch: bool,
) -> Result<TrackLog> {
    cfg.validate()?;
    let mut state = TrackState::new(cfg, origin);
    let mut log = TrackLog::default();
    for k in 0..mobility.steps.min(cfg.horizon) {
        let truth = mobility.position(k);
        if !region.contains(truth, origin) {
            log::warn!("trajectory leaves the region at step {k}; truncating");
            break;
        }
        let row = track_step(&mut state, truth, localizer, cfg)?;
        let nf = row.nf_run;
        log.rows.push(row);
        if stop_at_switch && nf {
            break;
        }
    }
    Ok(log)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn entry(t: f64, p: [f64; 3]) -> MemoryEntry<f64> {
        MemoryEntry {
            time: t,
            position: Point3::from_array(p),
            scheme: Scheme::Ff,
        }
    }

    fn origin() -> Point3<f64> {
        Point3::new(0.0, 0.0, 2.0)
    }

    #[test]
    fn stationary_fit_predicts_constant() {
        let pts: Vec<_> = (0..5).map(|i| entry(i as f64, [1.0, 2.0, 3.0])).collect();
        for deg in 0..=3 {
            let m = fit_trajectory(&pts, deg, 10).unwrap();
            assert!(m.predict(7.3).distance(Point3::new(1.0, 2.0, 3.0)) < 1e-9);
        }
    }

    #[test]
    fn linear_path_is_reproduced() {
        let p = |t: f64| [0.3, 20.0 - 2.0 * t, 1.2];
        let pts: Vec<_> = (0..6)
            .map(|i| entry(i as f64 * 0.25, p(i as f64 * 0.25)))
            .collect();
        let m = fit_trajectory(&pts, 1, 10).unwrap();
        for t in [0.0, 0.6, 3.0, 10.0] {
            assert!(m.predict(t).distance(Point3::from_array(p(t))) < 1e-9);
        }
    }

    #[test]
    fn higher_degree_reduces_quadratic_residual() {
        let p = |t: f64| [t * t, 1.0, 0.0];
        let pts: Vec<_> = (0..8).map(|i| entry(i as f64, p(i as f64))).collect();
        let resid = |deg| {
            let m = fit_trajectory(&pts, deg, 10).unwrap();
            pts.iter()
                .map(|e| m.predict(e.time).distance(e.position).powi(2))
                .sum::<f64>()
        };
        let (r1, r2) = (resid(1), resid(2));
        assert!(r1 > 1e-6 && r2 < 1e-12 && r2 < r1);
    }

    #[test]
    fn fit_uses_only_the_window() {
        let mut pts: Vec<_> = (0..3).map(|i| entry(i as f64, [100.0, 0.0, 0.0])).collect();
        pts.extend((3..6).map(|i| entry(i as f64, [0.0, 0.0, 0.0])));
        let m = fit_trajectory(&pts, 0, 3).unwrap();
        assert!(m.predict(10.0).norm() < 1e-12);
        assert_eq!(m.fit_times(), &[3.0, 4.0, 5.0]);
        assert!(matches!(
            fit_trajectory(&pts[..2], 2, 10),
            Err(Error::InsufficientPoints { have: 2, need: 3 })
        ));
    }

    #[test]
    fn trajectory_error_is_euclidean() {
        let a = Point3::new(1.0, 1.0, 1.0);
        assert_eq!(trajectory_error(a, a), 0.0);
        assert_eq!(
            trajectory_error(Point3::new(3.0, 4.0, 0.0), Point3::zero()),
            5.0
        );
    }

    #[test]
    fn memory_respects_capacity_and_order() {
        let mut m = TrackMemory::new(3);
        for i in 0..5 {
            m.push(entry(i as f64, [i as f64, 0.0, 0.0])).unwrap();
        }
        assert_eq!(m.len(), 3);
        assert_eq!(m.latest(2)[0].time, 3.0);
        assert!(m.push(entry(4.0, [0.0; 3])).is_err());
    }

    fn truth_localizer(s: Scheme, p: Point3<f64>, _k: usize) -> Result<Point3<f64>> {
        let _ = s;
        Ok(p)
    }

    #[test]
    fn first_far_field_step_cannot_gate() {
        let cfg = TrackConfig::new(10, 3.0);
        let mut st = TrackState::new(&cfg, origin());
        let row = track_step(
            &mut st,
            Point3::new(0.0, 10.0, 1.2),
            &mut truth_localizer,
            &cfg,
        )
        .unwrap();
        assert_eq!(row.traj_error, Some(0.0));
        assert!(!row.nf_run && !row.switched);
        assert_eq!(st.memory.len(), 1);
    }

    #[test]
    fn short_range_estimate_reruns_near_field() {
        let cfg = TrackConfig::new(10, 7.2);
        let mut st = TrackState::new(&cfg, origin());
        let truth = Point3::new(0.0, 5.0, 1.2);
        let row = track_step(&mut st, truth, &mut truth_localizer, &cfg).unwrap();
        assert!(row.ff_run && row.nf_run && row.range_trigger && !row.traj_trigger);
        assert_eq!(row.scheme, 2);
        assert_eq!(st.memory.latest(1)[0].scheme, Scheme::Nf);
        assert_eq!(st.next_scheme, Scheme::Nf);
    }

    #[test]
    fn divergent_estimate_triggers_rerun() {
        let cfg = TrackConfig::new(20, 1.0);
        let mut st = TrackState::new(&cfg, origin());
        let mut calls = 0;
        let mut loc = |s: Scheme, p: Point3<f64>, k: usize| {
            calls += 1;
            if k == 5 && s == Scheme::Ff {
                Ok(p + Point3::new(10.0, 0.0, 0.0))
            } else {
                Ok(p)
            }
        };
        let path = |k: usize| Point3::new(0.0, 20.0 - 0.5 * k as f64, 1.2);
        for k in 0..5 {
            let r = track_step(&mut st, path(k), &mut loc, &cfg).unwrap();
            assert!(!r.switched);
        }
        let r = track_step(&mut st, path(5), &mut loc, &cfg).unwrap();
        assert!(r.traj_trigger && r.switched && r.nf_run);
        assert_eq!(st.memory.len(), 1);
        assert_eq!(calls, 7);
    }

    #[test]
    fn failed_estimate_forces_near_field() {
        let cfg = TrackConfig::new(5, 1.0);
        let mut st = TrackState::new(&cfg, origin());
        let mut loc = |s: Scheme, p: Point3<f64>, _k: usize| match s {
            Scheme::Ff => Err(Error::NoSignalEnergy),
            Scheme::Nf => Ok(p),
        };
        let row = track_step(&mut st, Point3::new(0.0, 10.0, 1.2), &mut loc, &cfg).unwrap();
        assert!(row.unreliable && row.nf_run && row.estimate().is_some());
        let mut dead = |_s: Scheme, _p: Point3<f64>, _k: usize| Err(Error::NoSignalEnergy);
        let row = track_step(&mut st, Point3::new(0.0, 9.5, 1.2), &mut dead, &cfg).unwrap();
        assert!(row.unreliable && row.estimate().is_none());
        assert_eq!(st.next_scheme, Scheme::Nf);
    }

    #[test]
    fn near_field_step_returns_to_far_field_when_distant() {
        let cfg = TrackConfig {
            initial_scheme: Scheme::Nf,
            ..TrackConfig::new(5, 3.0)
        };
        let mut st = TrackState::new(&cfg, origin());
        let row = track_step(
            &mut st,
            Point3::new(0.0, 10.0, 1.2),
            &mut truth_localizer,
            &cfg,
        )
        .unwrap();
        assert!(row.nf_run && !row.ff_run);
        assert_eq!(st.next_scheme, Scheme::Ff);
    }

    #[test]
    fn variants_never_switch() {
        let region = Region::new(1.0, 30.0, -0.8, 0.8, 1.0, 1.5).unwrap();
        let mob = Mobility::radial(origin(), 0.2, 1.2, 20.0, 2.0, 2.0, 0.25).unwrap();
        assert_eq!(mob.steps, 37);
        let ff = TrackConfig::new(100, 7.2).ff_only();
        let log = run_tracking(&mob, &ff, &region, origin(), &mut truth_localizer, false).unwrap();
        assert_eq!(log.rows.len(), 37);
        assert_eq!(log.nf_usage(), 0.0);
        assert_eq!(switching_distance(&log), None);
        let nf = TrackConfig::new(100, 7.2).nf_only();
        let log = run_tracking(&mob, &nf, &region, origin(), &mut truth_localizer, false).unwrap();
        assert_eq!(log.nf_usage(), 1.0);
    }

    #[test]
    fn exact_inbound_switches_at_the_limit() {
        let region = Region::new(1.0, 30.0, -0.8, 0.8, 1.0, 1.5).unwrap();
        let mob = Mobility::radial(origin(), 0.0, 1.2, 20.0, 2.0, 2.0, 0.25).unwrap();
        let cfg = TrackConfig::new(100, 7.2);
        let log = run_tracking(&mob, &cfg, &region, origin(), &mut truth_localizer, false).unwrap();
        let d = switching_distance(&log).unwrap();
        assert!(d < 7.2 && d > 6.6, "{d}");
        assert!(log.rows.iter().all(|r| !r.traj_trigger));
        let early =
            run_tracking(&mob, &cfg, &region, origin(), &mut truth_localizer, true).unwrap();
        assert_eq!(early.rows.last().unwrap().true_dof, d);
    }

    #[test]
    fn path_leaving_region_is_truncated() {
        let region = Region::new(5.0, 30.0, -0.8, 0.8, 1.0, 1.5).unwrap();
        let mob = Mobility::radial(origin(), 0.0, 1.2, 20.0, 2.0, 2.0, 0.25).unwrap();
        let cfg = TrackConfig::new(100, 1.0);
        let log = run_tracking(&mob, &cfg, &region, origin(), &mut truth_localizer, false).unwrap();
        assert!(log.rows.len() < mob.steps);
        assert!(log.rows.iter().all(|r| r.true_dof >= 5.0));
    }

    #[test]
    fn log_csv_has_header() {
        let cfg = TrackConfig::new(3, 1.0);
        let mut st = TrackState::new(&cfg, origin());
        let row = track_step(
            &mut st,
            Point3::new(0.0, 4.0, 1.2),
            &mut truth_localizer,
            &cfg,
        )
        .unwrap();
        let mut buf = Vec::new();
        TrackLog { rows: vec![row] }.write_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert!(text.starts_with("k,t,true_x,true_y,true_z,true_dof,est_x"));
    }
}
