//! Far-field compatibility, error aggregation and empirical distributions.

use std::io::Write;

use num_complex::Complex;

use crate::error::{invalid, Error, Result};
use crate::geometry::ArrayGeometry;
use crate::linalg::Point3;
use crate::ofdm::{nf_steering, subcarrier_phase_vector, OfdmGrid};
use crate::scalar::Real;

/// How well a boresight far-field beam plus range-only phase roll explains
/// the true spherical response at `p`.
///
/// Normalized by `N * Q`; equals `sum_q lambda_q / (lambda_o Q)` when every
/// element sees the same range.
pub fn compatibility_metric<T: Real>(
    geom: &ArrayGeometry<T>,
    grid: &OfdmGrid<T>,
    p: Point3<T>,
) -> Result<T> {
    let beam = vec![Complex::new(T::one(), T::zero()); geom.element_count()];
    compatibility_metric_with_beam(geom, grid, p, &beam)
}

/// [`compatibility_metric`] for an arbitrary transmit beam `f`.
pub fn compatibility_metric_with_beam<T: Real>(
    geom: &ArrayGeometry<T>,
    grid: &OfdmGrid<T>,
    p: Point3<T>,
    beam: &[Complex<T>],
) -> Result<T> {
    if beam.len() != geom.element_count() {
        return Err(Error::DimensionMismatch {
            what: "beam length",
            expected: geom.element_count(),
            got: beam.len(),
        });
    }
    let d = p.distance(geom.origin());
    let t = subcarrier_phase_vector(grid, d);
    let mut acc = Complex::new(T::zero(), T::zero());
    for (q, tq) in t.iter().enumerate() {
        let a = nf_steering(geom, grid, q, p)?;
        let s_q: Complex<T> = beam.iter().zip(&a).map(|(f, v)| f.conj() * v).sum();
        acc += s_q.conj() * tq;
    }
    Ok(acc.norm() / T::from_count(geom.element_count() * grid.q_count()))
}

pub fn rmse<T: Real>(errors: &[T]) -> Result<T> {
    if errors.is_empty() {
        return Err(Error::EmptyInput);
    }
    Ok((errors.iter().map(|e| *e * *e).sum::<T>() / T::from_count(errors.len())).sqrt())
}

/// Right-continuous empirical CDF of the observed samples, with missing
/// samples counted separately as censored.
#[derive(Debug, Clone, PartialEq)]
pub struct EmpiricalCdf {
    sorted: Vec<f64>,
    censored: usize,
}

impl EmpiricalCdf {
    pub fn observed(&self) -> &[f64] {
        &self.sorted
    }

    /// Fraction of all samples that were missing.
    pub fn censored_fraction(&self) -> f64 {
        self.censored as f64 / (self.censored + self.sorted.len()) as f64
    }

    /// Fraction of observed samples `<= x`.
    pub fn eval(&self, x: f64) -> f64 {
        if self.sorted.is_empty() {
            return 0.0;
        }
        self.sorted.partition_point(|&v| v <= x) as f64 / self.sorted.len() as f64
    }

    /// `(x, F(x))` at every jump.
    pub fn steps(&self) -> Vec<(f64, f64)> {
        let n = self.sorted.len() as f64;
        let mut out: Vec<(f64, f64)> = Vec::new();
        for (i, &x) in self.sorted.iter().enumerate() {
            let f = (i + 1) as f64 / n;
            match out.last_mut() {
                Some(last) if last.0 == x => last.1 = f,
                _ => out.push((x, f)),
            }
        }
        out
    }

    /// Smallest observed `x` with `F(x) >= p`.
    pub fn quantile(&self, p: f64) -> Option<f64> {
        if self.sorted.is_empty() || !(0.0..=1.0).contains(&p) {
            return None;
        }
        let n = self.sorted.len();
        let idx = ((p * n as f64).ceil() as usize).clamp(1, n) - 1;
        Some(self.sorted[idx])
    }

    pub fn median(&self) -> Option<f64> {
        self.quantile(0.5)
    }

    pub fn iqr(&self) -> Option<f64> {
        Some(self.quantile(0.75)? - self.quantile(0.25)?)
    }
}

pub fn empirical_cdf(samples: &[Option<f64>]) -> Result<EmpiricalCdf> {
    if samples.is_empty() {
        return Err(Error::EmptyInput);
    }
    let mut sorted: Vec<f64> = samples.iter().flatten().copied().collect();
    if sorted.iter().any(|v| v.is_nan()) {
        return Err(invalid("NaN sample"));
    }
    sorted.sort_by(f64::total_cmp);
    Ok(EmpiricalCdf {
        censored: samples.len() - sorted.len(),
        sorted,
    })
}

/// A labelled curve.
#[derive(Debug, Clone, PartialEq)]
pub struct MetricSeries {
    pub label: String,
    pub abscissa: Vec<f64>,
    pub values: Vec<f64>,
}

impl MetricSeries {
    pub fn new(label: impl Into<String>, abscissa: Vec<f64>, values: Vec<f64>) -> Result<Self> {
        if abscissa.len() != values.len() {
            return Err(Error::DimensionMismatch {
                what: "series lengths",
                expected: abscissa.len(),
                got: values.len(),
            });
        }
        if abscissa.windows(2).any(|w| w[1] < w[0]) {
            return Err(invalid("series abscissa must be sorted"));
        }
        Ok(Self {
            label: label.into(),
            abscissa,
            values,
        })
    }

    pub fn write_csv<W: Write>(&self, w: W, x_name: &str) -> Result<()> {
        let mut out = csv::Writer::from_writer(w);
        out.write_record([x_name, self.label.as_str()])?;
        for (x, y) in self.abscissa.iter().zip(&self.values) {
            out.write_record([x.to_string(), y.to_string()])?;
        }
        out.flush()?;
        Ok(())
    }
}
