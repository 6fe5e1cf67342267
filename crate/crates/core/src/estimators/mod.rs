//! Grid-search localization from received beam sweeps.
//!
//! Both estimators share the same skeleton: per-beam RSSI weights, then
//! alternating one-dimensional grid maximizations over range, azimuth and
//! elevation, repeated with brackets that shrink around the incumbent.

mod ff;
mod nf;

use std::io::Write;
use std::ops::{Add, AddAssign};

use num_complex::Complex;
use serde::{Deserialize, Serialize};

use crate::beambook::BeamBook;
use crate::error::{invalid, Error, Result};
use crate::geometry::{Interval, Region, SphericalPose};
use crate::linalg::{cnorm, Point3};
use crate::ofdm::{OfdmGrid, Scheme};
use crate::receiver::RxSnapshot;
use crate::scalar::Real;

pub use ff::localize_ff;
pub use nf::localize_nf;

/// How objectives are evaluated.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Evaluation {
    /// Shares work across subcarriers and probes (factorized steering,
    /// precomputed weighted beams, phase recurrences). Same estimates.
    #[default]
    Fast,
    /// Rebuilds every steering vector and weighted beam product per probe and
    /// per subcarrier, as a direct transcription would. Used for op counts.
    Literal,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SearchConfig<T> {
    pub outer_iters: usize,
    pub range_steps: usize,
    pub angle_steps: usize,
    /// Beams whose normalized RSSI falls below this are ignored.
    pub rssi_floor: T,
    pub range_bracket: Interval<T>,
    pub az_bracket: Interval<T>,
    /// Height span `z - origin_z`; the elevation bracket is derived from it
    /// at the current range estimate.
    pub height_offsets: Interval<T>,
    /// Bracket width multiplier applied per outer iteration.
    pub refine_factor: T,
    pub evaluation: Evaluation,
}

impl<T: Real> SearchConfig<T> {
    pub fn for_region(region: &Region<T>, origin_z: T) -> Self {
        Self {
            outer_iters: 3,
            range_steps: 100,
            angle_steps: 100,
            rssi_floor: T::lit(0.5),
            range_bracket: region.range(),
            az_bracket: region.azimuth(),
            height_offsets: region.height_offsets(origin_z),
            refine_factor: T::lit(0.2),
            evaluation: Evaluation::Fast,
        }
    }

    pub fn with_evaluation(mut self, evaluation: Evaluation) -> Self {
        self.evaluation = evaluation;
        self
    }

    pub fn validate(&self, grid: &OfdmGrid<T>) -> Result<()> {
        if self.outer_iters == 0 {
            return Err(invalid("at least one outer iteration is required"));
        }
        if self.range_steps < 2 || self.angle_steps < 2 {
            return Err(invalid("search grids need at least two steps"));
        }
        if !(self.rssi_floor >= T::zero() && self.rssi_floor < T::one()) {
            return Err(invalid("rssi floor must lie in [0, 1)"));
        }
        if !(self.refine_factor > T::zero() && self.refine_factor <= T::one()) {
            return Err(invalid("refine factor must lie in (0, 1]"));
        }
        if !(self.range_bracket.lo > T::zero()) {
            return Err(invalid("range bracket must be positive"));
        }
        if !(self.range_bracket.hi < grid.ambiguity_range()) {
            return Err(invalid("range bracket exceeds the unambiguous range"));
        }
        Ok(())
    }

    /// Bracket for outer iteration `iter`: the full bracket first, then a
    /// window of width `full * refine^iter` centred on the incumbent.
    pub(crate) fn bracket(&self, full: Interval<T>, incumbent: T, iter: usize) -> Interval<T> {
        if iter == 0 {
            full
        } else {
            let iter = i32::try_from(iter).unwrap_or(i32::MAX);
            full.window(incumbent, full.width() * self.refine_factor.powi(iter))
        }
    }
}

/// Operation counts accumulated by an estimator run.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct OpTally {
    /// Steering or phase-roll vector entries built.
    pub steering_constructions: u64,
    /// Complex multiply-accumulates.
    pub inner_products: u64,
    /// Element-to-point distances evaluated.
    pub distance_evals: u64,
}

impl Add for OpTally {
    type Output = Self;
    fn add(self, o: Self) -> Self {
        Self {
            steering_constructions: self.steering_constructions + o.steering_constructions,
            inner_products: self.inner_products + o.inner_products,
            distance_evals: self.distance_evals + o.distance_evals,
        }
    }
}

impl AddAssign for OpTally {
    fn add_assign(&mut self, o: Self) {
        *self = *self + o;
    }
}

impl OpTally {
    pub(crate) fn steer(&mut self, n: usize) {
        self.steering_constructions += n as u64;
    }

    pub(crate) fn mac(&mut self, n: usize) {
        self.inner_products += n as u64;
    }

    pub(crate) fn dist(&mut self, n: usize) {
        self.distance_evals += n as u64;
    }
}

/// Near-field over far-field tally ratios.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TallyRatio {
    pub steering_constructions: f64,
    pub inner_products: f64,
    /// `None` when the far-field run evaluated no distances.
    pub distance_evals: Option<f64>,
}

pub fn complexity_ratio(tally_nf: &OpTally, tally_ff: &OpTally) -> Result<TallyRatio> {
    if tally_ff.steering_constructions == 0 {
        return Err(Error::ZeroDenominator("steering constructions"));
    }
    if tally_ff.inner_products == 0 {
        return Err(Error::ZeroDenominator("inner products"));
    }
    let r = |a: u64, b: u64| a as f64 / b as f64;
    Ok(TallyRatio {
        steering_constructions: r(
            tally_nf.steering_constructions,
            tally_ff.steering_constructions,
        ),
        inner_products: r(tally_nf.inner_products, tally_ff.inner_products),
        distance_evals: (tally_ff.distance_evals > 0)
            .then(|| r(tally_nf.distance_evals, tally_ff.distance_evals)),
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct PositionEstimate<T> {
    pub position: Point3<T>,
    pub pose: SphericalPose<T>,
    pub weights: Vec<T>,
    pub scheme: Scheme,
    pub tally: OpTally,
    /// Summed angular objective at the estimate after each outer iteration.
    pub trace: Vec<T>,
}

/// Normalized per-beam row norms with entries below `rssi_floor` zeroed.
pub fn beam_weights<T: Real>(y: &RxSnapshot<T>, rssi_floor: T) -> Result<Vec<T>> {
    let norms: Vec<T> = (0..y.beam_count()).map(|j| cnorm(&y.y.row(j))).collect();
    if norms.is_empty() {
        return Err(Error::EmptyInput);
    }
    let max = norms.iter().copied().fold(T::zero(), T::max);
    if !(max > T::zero()) {
        return Err(Error::NoSignalEnergy);
    }
    Ok(norms
        .into_iter()
        .map(|n| {
            let w = n / max;
            if w < rssi_floor {
                T::zero()
            } else {
                w
            }
        })
        .collect())
}

/// Probe `i` of `steps` points spanning `bracket` inclusively.
#[inline]
pub(crate) fn probe<T: Real>(bracket: Interval<T>, steps: usize, i: usize) -> T {
    if i + 1 == steps {
        bracket.hi
    } else {
        bracket.lo + bracket.width() * T::from_count(i) / T::from_count(steps - 1)
    }
}

/// Grid maximization over `steps` inclusive points of `bracket`.
///
/// Ties go to the smaller coordinate; NaN values never win.
pub fn line_search_max<T: Real, F: FnMut(T) -> T>(
    mut objective: F,
    bracket: Interval<T>,
    steps: usize,
) -> (T, T) {
    let mut best = (bracket.lo, T::neg_infinity());
    for i in 0..steps.max(2) {
        let x = probe(bracket, steps.max(2), i);
        let v = objective(x);
        if v > best.1 {
            best = (x, v);
        }
    }
    best
}

/// Runs `count` grid maximizations sharing the same probes; `eval` fills one
/// objective value per search at each probe.
pub(crate) fn line_search_max_many<T: Real, F: FnMut(T, &mut [T])>(
    mut eval: F,
    bracket: Interval<T>,
    steps: usize,
    count: usize,
) -> Vec<(T, T)> {
    let mut best = vec![(bracket.lo, T::neg_infinity()); count];
    let mut vals = vec![T::zero(); count];
    for i in 0..steps {
        let x = probe(bracket, steps, i);
        eval(x, &mut vals);
        for (b, &v) in best.iter_mut().zip(&vals) {
            if v > b.1 {
                *b = (x, v);
            }
        }
    }
    best
}

pub(crate) fn mean<T: Real>(xs: impl ExactSizeIterator<Item = T>) -> T {
    let n = T::from_count(xs.len());
    xs.sum::<T>() / n
}

/// Checks that snapshot, book and grid agree and the book has the expected scheme.
pub(crate) fn check_inputs<T: Real>(
    y: &RxSnapshot<T>,
    book: &BeamBook<T>,
    grid: &OfdmGrid<T>,
    n_elements: usize,
    expected: Scheme,
) -> Result<()> {
    if book.scheme() != expected {
        return Err(Error::WrongScheme {
            expected: expected.as_str(),
            got: book.scheme().as_str(),
        });
    }
    if y.beam_count() != book.beam_count() {
        return Err(Error::DimensionMismatch {
            what: "snapshot rows vs beams",
            expected: book.beam_count(),
            got: y.beam_count(),
        });
    }
    if y.q_count() != grid.q_count() {
        return Err(Error::DimensionMismatch {
            what: "snapshot columns vs subcarriers",
            expected: grid.q_count(),
            got: y.q_count(),
        });
    }
    if book.matrix().rows() != n_elements {
        return Err(Error::DimensionMismatch {
            what: "beam book rows vs elements",
            expected: n_elements,
            got: book.matrix().rows(),
        });
    }
    Ok(())
}

/// `F diag(w) y_q` for subcarrier `q`.
pub(crate) fn weighted_beam_sum<T: Real>(
    book: &BeamBook<T>,
    weights: &[T],
    y: &RxSnapshot<T>,
    q: usize,
) -> Vec<Complex<T>> {
    let f = book.matrix();
    let mut out = vec![Complex::new(T::zero(), T::zero()); f.rows()];
    for (j, &w) in weights.iter().enumerate() {
        let c = y.y.get(j, q) * w;
        for (o, &fv) in out.iter_mut().zip(f.column(j)) {
            *o += fv * c;
        }
    }
    out
}

/// One CSV row per estimate.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EstimateRecord {
    pub trial: u64,
    pub scheme: Scheme,
    pub true_x: f64,
    pub true_y: f64,
    pub true_z: f64,
    pub est_x: f64,
    pub est_y: f64,
    pub est_z: f64,
    pub pos_err: f64,
    pub dof_err: f64,
    pub az_err: f64,
    pub el_err: f64,
    pub steering_constructions: u64,
    pub inner_products: u64,
    pub distance_evals: u64,
}

impl EstimateRecord {
    pub fn new<T: Real>(
        trial: u64,
        truth: Point3<T>,
        truth_pose: SphericalPose<T>,
        est: &PositionEstimate<T>,
    ) -> Self {
        let f = |v: T| v.as_f64();
        Self {
            trial,
            scheme: est.scheme,
            true_x: f(truth.x),
            true_y: f(truth.y),
            true_z: f(truth.z),
            est_x: f(est.position.x),
            est_y: f(est.position.y),
            est_z: f(est.position.z),
            pos_err: f(est.position.distance(truth)),
            dof_err: f(est.pose.dof - truth_pose.dof),
            az_err: f(est.pose.az - truth_pose.az),
            el_err: f(est.pose.el - truth_pose.el),
            steering_constructions: est.tally.steering_constructions,
            inner_products: est.tally.inner_products,
            distance_evals: est.tally.distance_evals,
        }
    }
}

pub fn write_estimates<W: Write>(w: W, records: &[EstimateRecord]) -> Result<()> {
    let mut out = csv::Writer::from_writer(w);
    for r in records {
        out.serialize(r)?;
    }
    out.flush()?;
    Ok(())
}
