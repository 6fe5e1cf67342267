//! Near-field localization: alternating range / azimuth / elevation searches
//! against the spherical steering vector, started at the strongest focus point.

use num_complex::Complex;

use super::{
    check_inputs, line_search_max, line_search_max_many, mean, weighted_beam_sum, Evaluation,
    OpTally, PositionEstimate, SearchConfig,
};
use crate::beambook::{BeamBook, BeamMeta};
use crate::error::{Error, Result};
use crate::geometry::{
    cartesian_from_spherical, direction, elevation_bounds, ArrayGeometry, Interval, SphericalPose,
};
use crate::linalg::{cdot, Point3};
use crate::ofdm::{nf_steering, OfdmGrid, Scheme};
use crate::receiver::RxSnapshot;
use crate::scalar::{cycles_to_radians, Real};

pub fn localize_nf<T: Real>(
    y: &RxSnapshot<T>,
    book: &BeamBook<T>,
    cfg: &SearchConfig<T>,
    geom: &ArrayGeometry<T>,
    grid: &OfdmGrid<T>,
) -> Result<PositionEstimate<T>> {
    check_inputs(y, book, grid, geom.element_count(), Scheme::Nf)?;
    cfg.validate(grid)?;
    let weights = super::beam_weights(y, cfg.rssi_floor)?;
    let (_, start) = strongest_focus(&weights, book)?;

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

    let (mut dof, mut az, mut el) = (start.dof, start.az, start.el);
    let mut trace = Vec::with_capacity(cfg.outer_iters);
    for it in 0..cfg.outer_iters {
        let rb = cfg.bracket(cfg.range_bracket, dof, it);
        dof = mean(
            ctx.search(rb, cfg.range_steps, |d| (d, az, el))?
                .into_iter(),
        );
        let ab = cfg.bracket(cfg.az_bracket, az, it);
        az = mean(
            ctx.search(ab, cfg.angle_steps, |a| (dof, a, el))?
                .into_iter(),
        );
        let eb = cfg.bracket(elevation_bounds(cfg.height_offsets, dof), el, it);
        el = mean(
            ctx.search(eb, cfg.angle_steps, |e| (dof, az, e))?
                .into_iter(),
        );
        trace.push(ctx.objective_at(dof, az, el)?);
    }

    let tally = ctx.tally;
    let pose = SphericalPose::new(dof, az, el)?;
    Ok(PositionEstimate {
        position: cartesian_from_spherical(pose, geom.origin()),
        pose,
        weights,
        scheme: Scheme::Nf,
        tally,
        trace,
    })
}

/// Index and pose of the first beam carrying the largest nonzero weight.
fn strongest_focus<T: Real>(
    weights: &[T],
    book: &BeamBook<T>,
) -> Result<(usize, SphericalPose<T>)> {
    let strongest = weights
        .iter()
        .enumerate()
        .fold(None::<(usize, T)>, |best, (j, &w)| match best {
            Some((_, bw)) if !(w > bw) => best,
            _ if w > T::zero() => Some((j, w)),
            _ => best,
        })
        .map(|(j, _)| j)
        .ok_or(Error::NoReliableBeam)?;
    match book.beams()[strongest] {
        BeamMeta::Focus { pose, .. } => Ok((strongest, pose)),
        BeamMeta::Steer { .. } => Err(Error::WrongScheme {
            expected: "nf",
            got: "ff",
        }),
    }
}

struct Ctx<'a, T> {
    y: &'a RxSnapshot<T>,
    book: &'a BeamBook<T>,
    cfg: &'a SearchConfig<T>,
    geom: &'a ArrayGeometry<T>,
    grid: &'a OfdmGrid<T>,
    weights: &'a [T],
    tally: OpTally,
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

    fn point(&self, (d, az, el): (T, T, T)) -> Point3<T> {
        self.geom.origin() + direction(az, el) * d
    }

    /// Per-subcarrier argmax over one coordinate; `pose` maps the probe
    /// coordinate to `(d, az, el)`.
    fn search<F: Fn(T) -> (T, T, T)>(
        &mut self,
        bracket: Interval<T>,
        steps: usize,
        pose: F,
    ) -> Result<Vec<T>> {
        let n = self.geom.element_count();
        let q_count = self.grid.q_count();
        let mut failure = None;
        let found = match self.cfg.evaluation {
            Evaluation::Literal => (0..q_count)
                .map(|q| {
                    line_search_max(
                        |x| {
                            let p = self.point(pose(x));
                            self.tally.mac(n * self.book.beam_count());
                            let v = weighted_beam_sum(self.book, self.weights, self.y, q);
                            self.tally.steer(n);
                            self.tally.dist(n);
                            self.tally.mac(n);
                            match nf_steering(self.geom, self.grid, q, p) {
                                Ok(a) => cdot(&a, &v).norm(),
                                Err(e) => {
                                    failure.get_or_insert(e);
                                    T::neg_infinity()
                                }
                            }
                        },
                        bracket,
                        steps,
                    )
                    .0
                })
                .collect(),
            Evaluation::Fast => {
                let combined = self.combined.take().expect("fast mode precombines");
                let found = line_search_max_many(
                    |x, out| {
                        let p = self.point(pose(x));
                        if let Err(e) = self.fast_objectives(&combined, p, out) {
                            failure.get_or_insert(e);
                            out.iter_mut().for_each(|o| *o = T::neg_infinity());
                        }
                    },
                    bracket,
                    steps,
                    q_count,
                );
                self.combined = Some(combined);
                found.into_iter().map(|(x, _)| x).collect()
            }
        };
        match failure {
            Some(e) => Err(e),
            None => Ok(found),
        }
    }

    /// `|a_q(p)^H v_q|` for every subcarrier from one pass over the elements.
    ///
    /// The per-subcarrier phase `exp(-j 2 pi d_n / lambda_q)` factors into a
    /// carrier term times `q` powers of a per-element roll.
    fn fast_objectives(
        &mut self,
        combined: &[Vec<Complex<T>>],
        p: Point3<T>,
        out: &mut [T],
    ) -> Result<()> {
        let n = self.geom.element_count();
        let q_count = combined.len();
        let d = p.distance(self.geom.origin());
        let lambda0 = self.grid.wavelength(0);
        let roll = self.grid.sub_spacing() / self.grid.speed_of_light();
        let mut acc = vec![Complex::new(T::zero(), T::zero()); q_count];
        for (idx, &pn) in self.geom.element_positions().iter().enumerate() {
            let dn = p.distance(pn);
            if !(dn > T::zero()) {
                return Err(Error::SingularRange { element: idx });
            }
            let amp = d / dn;
            let mut phasor = Complex::from_polar(amp, cycles_to_radians(dn / lambda0));
            let step = Complex::from_polar(T::one(), cycles_to_radians(dn * roll));
            // conj(a_q) accumulates directly: the phasor carries +phase
            for (a, v) in acc.iter_mut().zip(combined) {
                *a += phasor * v[idx];
                phasor *= step;
            }
        }
        let lo = self.geom.wavelength();
        for (q, (o, a)) in out.iter_mut().zip(&acc).enumerate() {
            *o = a.norm() * self.grid.wavelength(q) / lo;
        }
        self.tally.dist(n);
        self.tally.steer(n * q_count);
        self.tally.mac(n * q_count);
        Ok(())
    }

    /// `sum_q |a_q(p)^H F diag(w) y_q|` at a pose, untallied.
    fn objective_at(&self, d: T, az: T, el: T) -> Result<T> {
        let p = self.point((d, az, el));
        (0..self.grid.q_count())
            .map(|q| {
                let v = weighted_beam_sum(self.book, self.weights, self.y, q);
                Ok(cdot(&nf_steering(self.geom, self.grid, q, p)?, &v).norm())
            })
            .sum()
    }
}
