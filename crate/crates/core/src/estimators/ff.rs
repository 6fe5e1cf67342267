//! Far-field localization: per-beam range from the subcarrier phase roll,
//! then azimuth and elevation from the weighted beam combination.

use num_complex::Complex;

use super::{
    check_inputs, line_search_max, line_search_max_many, mean, weighted_beam_sum, Evaluation,
    OpTally, PositionEstimate, SearchConfig,
};
use crate::beambook::BeamBook;
use crate::error::{Error, Result};
use crate::geometry::{
    cartesian_from_spherical, elevation_bounds, ArrayGeometry, Interval, SphericalPose,
};
use crate::linalg::cdot;
use crate::ofdm::{ff_steering, ff_steering_factors, subcarrier_phase_vector, OfdmGrid, Scheme};
use crate::receiver::RxSnapshot;
use crate::scalar::Real;

pub fn localize_ff<T: Real>(
    y: &RxSnapshot<T>,
    book: &BeamBook<T>,
    cfg: &SearchConfig<T>,
    geom: &ArrayGeometry<T>,
    grid: &OfdmGrid<T>,
) -> Result<PositionEstimate<T>> {
    check_inputs(y, book, grid, geom.element_count(), Scheme::Ff)?;
    cfg.validate(grid)?;
    let weights = super::beam_weights(y, cfg.rssi_floor)?;
    let active: Vec<usize> = (0..weights.len())
        .filter(|&j| weights[j] > T::zero())
        .collect();
    if active.is_empty() {
        return Err(Error::NoReliableBeam);
    }
    let weight_sum: T = active.iter().map(|&j| weights[j]).sum();

    let mut ctx = Ctx {
        y,
        book,
        cfg,
        geom,
        grid,
        weights: &weights,
        tally: OpTally::default(),
        combined: None,
    };
    if cfg.evaluation == Evaluation::Fast {
        ctx.combined = Some(ctx.precombine());
    }

    let mut dof = cfg.range_bracket.mid();
    let mut az = cfg.az_bracket.mid();
    let mut el = T::zero();
    let mut trace = Vec::with_capacity(cfg.outer_iters);
    for it in 0..cfg.outer_iters {
        let rb = cfg.bracket(cfg.range_bracket, dof, it);
        let per_beam = ctx.range_search(&active, rb);
        dof = active
            .iter()
            .zip(&per_beam)
            .map(|(&j, &d)| weights[j] * d)
            .sum::<T>()
            / weight_sum;

        let el_full = elevation_bounds(cfg.height_offsets, dof);
        if it == 0 {
            el = el_full.mid();
        }
        let ab = cfg.bracket(cfg.az_bracket, az, it);
        az = mean(ctx.azimuth_search(ab, el).into_iter());
        let eb = cfg.bracket(el_full, el, it);
        el = mean(ctx.elevation_search(eb, az).into_iter());
        trace.push(ctx.angular_objective(az, el));
    }

    let tally = ctx.tally;
    let pose = SphericalPose::new(dof, az, el)?;
    Ok(PositionEstimate {
        position: cartesian_from_spherical(pose, geom.origin()),
        pose,
        weights,
        scheme: Scheme::Ff,
        tally,
        trace,
    })
}

struct Ctx<'a, T> {
    y: &'a RxSnapshot<T>,
    book: &'a BeamBook<T>,
    cfg: &'a SearchConfig<T>,
    geom: &'a ArrayGeometry<T>,
    grid: &'a OfdmGrid<T>,
    weights: &'a [T],
    tally: OpTally,
    /// `F diag(w) y_q` per subcarrier, cached in fast mode.
    combined: Option<Vec<Vec<Complex<T>>>>,
}

impl<T: Real> Ctx<'_, T> {
    fn precombine(&mut self) -> Vec<Vec<Complex<T>>> {
        let q = self.grid.q_count();
        self.tally
            .mac(q * self.geom.element_count() * self.book.beam_count());
        (0..q)
            .map(|q| weighted_beam_sum(self.book, self.weights, self.y, q))
            .collect()
    }

    fn combine_literal(&mut self, q: usize) -> Vec<Complex<T>> {
        self.tally
            .mac(self.geom.element_count() * self.book.beam_count());
        weighted_beam_sum(self.book, self.weights, self.y, q)
    }

    /// Per-beam argmax of `|y_j^H t(d)|`.
    fn range_search(&mut self, active: &[usize], bracket: Interval<T>) -> Vec<T> {
        let steps = self.cfg.range_steps;
        let q = self.grid.q_count();
        let rows: Vec<Vec<Complex<T>>> = active.iter().map(|&j| self.y.y.row(j)).collect();
        match self.cfg.evaluation {
            Evaluation::Literal => rows
                .iter()
                .map(|row| {
                    let tally = &mut self.tally;
                    line_search_max(
                        |d| {
                            let t = subcarrier_phase_vector(self.grid, d);
                            tally.steer(q);
                            tally.mac(q);
                            cdot(row, &t).norm()
                        },
                        bracket,
                        steps,
                    )
                    .0
                })
                .collect(),
            Evaluation::Fast => {
                let tally = &mut self.tally;
                line_search_max_many(
                    |d, out| {
                        let t = subcarrier_phase_vector(self.grid, d);
                        tally.steer(q);
                        for (o, row) in out.iter_mut().zip(&rows) {
                            *o = cdot(row, &t).norm();
                        }
                        tally.mac(q * rows.len());
                    },
                    bracket,
                    steps,
                    rows.len(),
                )
                .into_iter()
                .map(|(d, _)| d)
                .collect()
            }
        }
    }

    /// Per-subcarrier azimuth argmax at fixed elevation.
    fn azimuth_search(&mut self, bracket: Interval<T>, el: T) -> Vec<T> {
        let steps = self.cfg.angle_steps;
        let n = self.geom.element_count();
        match self.cfg.evaluation {
            Evaluation::Literal => (0..self.grid.q_count())
                .map(|q| {
                    line_search_max(
                        |az| {
                            let v = self.combine_literal(q);
                            let a = ff_steering(self.geom, az, el);
                            self.tally.steer(n);
                            self.tally.mac(n);
                            cdot(&a, &v).norm()
                        },
                        bracket,
                        steps,
                    )
                    .0
                })
                .collect(),
            Evaluation::Fast => {
                let (nx, nz) = (self.geom.n_x(), self.geom.n_z());
                let (_, fz) = ff_steering_factors(self.geom, T::zero(), el);
                self.tally.steer(nz);
                // collapse the z axis once: u_q[ix] = sum_iz conj(fz) v_q
                let partial: Vec<Vec<Complex<T>>> = self
                    .combined
                    .as_ref()
                    .expect("fast mode precombines")
                    .iter()
                    .map(|v| {
                        (0..nx)
                            .map(|ix| (0..nz).map(|iz| fz[iz].conj() * v[iz * nx + ix]).sum())
                            .collect()
                    })
                    .collect();
                self.tally.mac(partial.len() * n);
                let xs = self.geom.x_offsets();
                let lambda = self.geom.wavelength();
                let tally = &mut self.tally;
                line_search_max_many(
                    |az, out| {
                        let fx = x_factor(&xs, lambda, az, el);
                        tally.steer(nx);
                        for (o, u) in out.iter_mut().zip(&partial) {
                            *o = cdot(&fx, u).norm();
                        }
                        tally.mac(nx * partial.len());
                    },
                    bracket,
                    steps,
                    partial.len(),
                )
                .into_iter()
                .map(|(a, _)| a)
                .collect()
            }
        }
    }

    /// Per-subcarrier elevation argmax at fixed azimuth.
    fn elevation_search(&mut self, bracket: Interval<T>, az: T) -> Vec<T> {
        let steps = self.cfg.angle_steps;
        let n = self.geom.element_count();
        match self.cfg.evaluation {
            Evaluation::Literal => (0..self.grid.q_count())
                .map(|q| {
                    line_search_max(
                        |el| {
                            let v = self.combine_literal(q);
                            let a = ff_steering(self.geom, az, el);
                            self.tally.steer(n);
                            self.tally.mac(n);
                            cdot(&a, &v).norm()
                        },
                        bracket,
                        steps,
                    )
                    .0
                })
                .collect(),
            Evaluation::Fast => {
                let (nx, nz) = (self.geom.n_x(), self.geom.n_z());
                let combined = self.combined.as_ref().expect("fast mode precombines");
                let tally = &mut self.tally;
                line_search_max_many(
                    |el, out| {
                        let (fx, fz) = ff_steering_factors(self.geom, az, el);
                        tally.steer(nx + nz);
                        for (o, v) in out.iter_mut().zip(combined) {
                            let s: Complex<T> = (0..nz)
                                .map(|iz| fz[iz].conj() * cdot(&fx, &v[iz * nx..(iz + 1) * nx]))
                                .sum();
                            *o = s.norm();
                        }
                        tally.mac((n + nz) * combined.len());
                    },
                    bracket,
                    steps,
                    combined.len(),
                )
                .into_iter()
                .map(|(e, _)| e)
                .collect()
            }
        }
    }

    /// `sum_q |a(az, el)^H F diag(w) y_q|`, untallied.
    fn angular_objective(&self, az: T, el: T) -> T {
        let a = ff_steering(self.geom, az, el);
        (0..self.grid.q_count())
            .map(|q| cdot(&a, &weighted_beam_sum(self.book, self.weights, self.y, q)).norm())
            .sum()
    }
}

/// x-axis factor of the planar steering vector.
fn x_factor<T: Real>(x_offsets: &[T], wavelength: T, az: T, el: T) -> Vec<Complex<T>> {
    let ux = el.cos() * az.sin();
    x_offsets
        .iter()
        .map(|&x| Complex::from_polar(T::one(), T::TAU() * x * ux / wavelength))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::beambook::BeamMeta;
    use crate::geometry::spherical_from_cartesian;
    use crate::ofdm::{ff_channel, nf_channel};
    use crate::receiver::simulate_rx;
    use crate::scenario::{Scenario, ScenarioName, ScenarioPreset};
    use num_complex::Complex;

    fn scenario_a() -> Scenario<f64> {
        ScenarioPreset::new(ScenarioName::A).build().unwrap()
    }

    fn small() -> Scenario<f64> {
        let mut p = ScenarioPreset::new(ScenarioName::A);
        p.n_x = 8;
        p.n_z = 4;
        p.build().unwrap()
    }

    fn at(s: &Scenario<f64>, d: f64, az: f64, dz: f64) -> crate::linalg::Point3<f64> {
        cartesian_from_spherical(
            SphericalPose::new(d, az, (dz / d).asin()).unwrap(),
            s.origin(),
        )
    }

    fn snapshot(s: &Scenario<f64>, p: crate::linalg::Point3<f64>, nf: bool) -> RxSnapshot<f64> {
        let h = if nf {
            nf_channel(&s.geom, &s.grid, p, 0.7).unwrap()
        } else {
            ff_channel(&s.geom, &s.grid, p, 0.7).unwrap()
        };
        simulate_rx(&h, &s.ff_book, s.tx_power, 0.0, 0).unwrap()
    }

    fn run(
        s: &Scenario<f64>,
        y: &RxSnapshot<f64>,
        cfg: &SearchConfig<f64>,
    ) -> PositionEstimate<f64> {
        localize_ff(y, &s.ff_book, cfg, &s.geom, &s.grid).unwrap()
    }

    #[test]
    fn matched_beam_azimuth_within_grid_step() {
        let s = scenario_a();
        let az = beam_az(&s, 12);
        let truth = at(&s, 30.0, az, -0.75);
        let est = run(&s, &snapshot(&s, truth, true), &s.search);
        let cfg = &s.search;
        let step =
            cfg.az_bracket.width() * cfg.refine_factor.powi(2) / (cfg.angle_steps - 1) as f64;
        assert!((est.pose.az - az).abs() < step, "{} vs {az}", est.pose.az);
    }

    fn beam_az(s: &Scenario<f64>, j: usize) -> f64 {
        match s.ff_book.beams()[j] {
            BeamMeta::Steer { az, .. } => az,
            _ => unreachable!(),
        }
    }

    #[test]
    fn on_beam_level_ue_is_recovered_from_own_model() {
        let s = scenario_a();
        let az = beam_az(&s, 12);
        let truth = at(&s, 15.0, az, 0.0);
        let mut cfg = s.search.clone();
        cfg.height_offsets = Interval::new(-0.5, 0.5).unwrap();
        let est = run(&s, &snapshot(&s, truth, false), &cfg);
        assert!(est.position.distance(truth) < 0.1, "{:?}", est.pose);
    }

    #[test]
    fn range_is_accurate_even_under_model_mismatch() {
        let s = scenario_a();
        let truth = at(&s, 2.0, 0.0, -0.75);
        let est = run(&s, &snapshot(&s, truth, true), &s.search);
        assert!((est.pose.dof - 2.0).abs() < 0.1, "{}", est.pose.dof);
    }

    #[test]
    fn fast_and_literal_agree() {
        let s = small();
        for (k, d) in [2.0, 6.0, 14.0].into_iter().enumerate() {
            let y = snapshot(&s, at(&s, d, 0.2 - 0.15 * k as f64, -0.6), true);
            let fast = run(&s, &y, &s.search);
            let lit = run(&s, &y, &s.literal_search());
            assert!((fast.pose.dof - lit.pose.dof).abs() < 1e-9);
            assert!((fast.pose.az - lit.pose.az).abs() < 1e-9);
            assert!((fast.pose.el - lit.pose.el).abs() < 1e-9);
            assert!(fast.tally.inner_products < lit.tally.inner_products);
        }
    }

    #[test]
    fn literal_tally_matches_loop_structure() {
        let s = small();
        let y = snapshot(&s, at(&s, 9.0, 0.1, -0.7), true);
        let n = s.geom.element_count() as u64;
        let q = s.grid.q_count() as u64;
        let j = s.ff_book.beam_count() as u64;
        for (iters, id, ia) in [(1, 20, 30), (2, 20, 30), (3, 50, 10)] {
            let mut cfg = s.literal_search();
            cfg.outer_iters = iters;
            cfg.range_steps = id;
            cfg.angle_steps = ia;
            let est = run(&s, &y, &cfg);
            let active = est.weights.iter().filter(|w| **w > 0.0).count() as u64;
            let (i, id, ia) = (iters as u64, id as u64, ia as u64);
            let range = i * active * id * q;
            let angle = i * q * 2 * ia;
            assert_eq!(est.tally.steering_constructions, range + angle * n);
            assert_eq!(est.tally.inner_products, range + angle * (n * j + n));
            assert_eq!(est.tally.distance_evals, 0);
        }
    }

    #[test]
    fn invariant_to_gain_and_phase() {
        let s = scenario_a();
        let y = snapshot(&s, at(&s, 11.0, -0.3, -0.9), true);
        let base = run(&s, &y, &s.search);
        let rotated = y.scaled(Complex::from_polar(4.0, 1.1));
        let other = run(&s, &rotated, &s.search);
        assert!((base.pose.dof - other.pose.dof).abs() < 1e-9);
        assert!((base.pose.az - other.pose.az).abs() < 1e-9);
        assert!((base.pose.el - other.pose.el).abs() < 1e-9);
        assert_eq!(
            base.weights.iter().filter(|w| **w > 0.0).count(),
            other.weights.iter().filter(|w| **w > 0.0).count()
        );
        let again = run(&s, &y, &s.search);
        assert_eq!(base.pose, again.pose);
    }

    #[test]
    fn range_objective_repeats_every_ambiguity_period() {
        let s = scenario_a();
        let y = snapshot(&s, at(&s, 7.0, 0.1, -0.5), true);
        let row = y.y.row(3);
        let period = s.grid.ambiguity_range();
        for d in [0.5, 7.0, 123.4] {
            let a = cdot(&row, &subcarrier_phase_vector(&s.grid, d)).norm();
            let b = cdot(&row, &subcarrier_phase_vector(&s.grid, d + period)).norm();
            assert!((a - b).abs() < 1e-9 * a.max(1e-30), "{a} {b}");
        }
    }

    #[test]
    fn objective_trace_does_not_decrease() {
        let s = scenario_a();
        let mut cfg = s.search.clone();
        cfg.height_offsets = Interval::new(-0.5, 0.5).unwrap();
        for d in [3.0, 12.0, 25.0] {
            let est = run(&s, &snapshot(&s, at(&s, d, 0.25, 0.1), false), &cfg);
            assert_eq!(est.trace.len(), s.search.outer_iters);
            for w in est.trace.windows(2) {
                assert!(w[1] >= w[0] * (1.0 - 1e-9), "{:?}", est.trace);
            }
        }
    }

    #[test]
    fn rejects_near_field_book() {
        let s = small();
        let h = nf_channel(&s.geom, &s.grid, at(&s, 5.0, 0.0, -0.5), 0.0).unwrap();
        let y = simulate_rx(&h, &s.nf_book, 1.0, 0.0, 0).unwrap();
        let err = localize_ff(&y, &s.nf_book, &s.search, &s.geom, &s.grid).unwrap_err();
        assert!(matches!(err, Error::WrongScheme { .. }));
        let silent = y.scaled(Complex::new(0.0, 0.0));
        let err = localize_ff(&silent, &s.ff_book, &s.search, &s.geom, &s.grid);
        assert!(err.is_err());
    }

    #[test]
    fn single_precision_tracks_double() {
        let p = ScenarioPreset::new(ScenarioName::B);
        let s64: Scenario<f64> = p.build().unwrap();
        let s32: Scenario<f32> = p.build().unwrap();
        let truth = at(&s64, 8.0, 0.2, -0.7);
        let e64 = run(&s64, &snapshot(&s64, truth, true), &s64.search);
        let h = nf_channel(&s32.geom, &s32.grid, truth.cast(), 0.7).unwrap();
        let y = simulate_rx(&h, &s32.ff_book, s32.tx_power, 0.0, 0).unwrap();
        let e32 = localize_ff(&y, &s32.ff_book, &s32.search, &s32.geom, &s32.grid).unwrap();
        let back = spherical_from_cartesian(e32.position.cast::<f64>(), s64.origin()).unwrap();
        assert!((back.dof - e64.pose.dof).abs() < 0.05);
        assert!((back.az - e64.pose.az).abs() < 0.01);
    }
}
