//! Beam-steering and beam-focusing codebooks.

use std::io::Write;

use num_complex::Complex;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::geometry::{cartesian_from_spherical, ArrayGeometry, Region, SphericalPose};
use crate::linalg::{cnorm, CMatrix, Point3};
use crate::ofdm::{ff_steering, nf_steering_at, Scheme};
use crate::scalar::Real;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ColumnNorm {
    /// Every column scaled to unit norm.
    #[default]
    Unit,
    /// Raw steering vectors.
    Raw,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum BeamMeta<T> {
    Steer {
        az: T,
        el: T,
    },
    Focus {
        point: Point3<T>,
        pose: SphericalPose<T>,
    },
}

/// Precoding matrix (`N_BS x J`) plus what each column points at.
#[derive(Debug, Clone, PartialEq)]
pub struct BeamBook<T> {
    matrix: CMatrix<T>,
    scheme: Scheme,
    beams: Vec<BeamMeta<T>>,
    column_norm: ColumnNorm,
}

impl<T: Real> BeamBook<T> {
    fn from_columns(
        mut columns: Vec<Vec<Complex<T>>>,
        scheme: Scheme,
        beams: Vec<BeamMeta<T>>,
        column_norm: ColumnNorm,
    ) -> Result<Self> {
        if columns.is_empty() {
            return Err(Error::EmptyInput);
        }
        if column_norm == ColumnNorm::Unit {
            for c in &mut columns {
                let inv = T::one() / cnorm(c);
                c.iter_mut().for_each(|v| *v = v.scale(inv));
            }
        }
        Ok(Self {
            matrix: CMatrix::from_columns(&columns)?,
            scheme,
            beams,
            column_norm,
        })
    }

    pub fn matrix(&self) -> &CMatrix<T> {
        &self.matrix
    }

    pub fn scheme(&self) -> Scheme {
        self.scheme
    }

    pub fn beams(&self) -> &[BeamMeta<T>] {
        &self.beams
    }

    pub fn column_norm(&self) -> ColumnNorm {
        self.column_norm
    }

    pub fn beam_count(&self) -> usize {
        self.matrix.cols()
    }

    pub fn column(&self, j: usize) -> &[Complex<T>] {
        self.matrix.column(j)
    }

    /// One row per beam: `scheme,index,az,el,x,y,z,dof`.
    pub fn write_csv<W: Write>(&self, w: W) -> Result<()> {
        let mut out = csv::Writer::from_writer(w);
        for (index, b) in self.beams.iter().enumerate() {
            let row = match *b {
                BeamMeta::Steer { az, el } => BeamRow {
                    scheme: self.scheme,
                    index,
                    az: az.as_f64(),
                    el: el.as_f64(),
                    x: None,
                    y: None,
                    z: None,
                    dof: None,
                },
                BeamMeta::Focus { point, pose } => BeamRow {
                    scheme: self.scheme,
                    index,
                    az: pose.az.as_f64(),
                    el: pose.el.as_f64(),
                    x: Some(point.x.as_f64()),
                    y: Some(point.y.as_f64()),
                    z: Some(point.z.as_f64()),
                    dof: Some(pose.dof.as_f64()),
                },
            };
            out.serialize(row)?;
        }
        out.flush()?;
        Ok(())
    }
}

#[derive(Debug, Serialize, Deserialize)]
struct BeamRow {
    scheme: Scheme,
    index: usize,
    az: f64,
    el: f64,
    x: Option<f64>,
    y: Option<f64>,
    z: Option<f64>,
    dof: Option<f64>,
}

/// `n` points spread uniformly over `[lo, hi]`; a single point sits at the middle.
fn uniform<T: Real>(lo: T, hi: T, n: usize) -> Vec<T> {
    if n == 1 {
        return vec![(lo + hi) / T::lit(2.0)];
    }
    let step = (hi - lo) / T::from_count(n - 1);
    (0..n)
        .map(|i| {
            if i + 1 == n {
                hi
            } else {
                lo + step * T::from_count(i)
            }
        })
        .collect()
}

/// `n` points geometrically spaced over `[lo, hi]`; a single point sits at the geometric mean.
fn geometric<T: Real>(lo: T, hi: T, n: usize) -> Vec<T> {
    if n == 1 {
        return vec![(lo * hi).sqrt()];
    }
    let ratio = hi / lo;
    (0..n)
        .map(|i| {
            if i + 1 == n {
                hi
            } else {
                lo * ratio.powf(T::from_count(i) / T::from_count(n - 1))
            }
        })
        .collect()
}

/// Steering beams at `j1` azimuths spanning the region, elevation zero.
pub fn design_ff_beambook<T: Real>(
    geom: &ArrayGeometry<T>,
    region: &Region<T>,
    j1: usize,
    column_norm: ColumnNorm,
) -> Result<BeamBook<T>> {
    if j1 < 2 {
        return Err(invalid("a steering book needs at least two beams"));
    }
    let azimuths = uniform(region.az_min, region.az_max, j1);
    let columns = azimuths
        .iter()
        .map(|&az| ff_steering(geom, az, T::zero()))
        .collect();
    let beams = azimuths
        .into_iter()
        .map(|az| BeamMeta::Steer { az, el: T::zero() })
        .collect();
    BeamBook::from_columns(columns, Scheme::Ff, beams, column_norm)
}

/// Focusing beams on a range x azimuth x elevation grid inside the region.
///
/// Ranges are geometric on `[d_min, d_max]`; elevations are uniform over the
/// band reachable at each ring's own range. Columns use the carrier wavelength.
pub fn design_nf_beambook<T: Real>(
    geom: &ArrayGeometry<T>,
    region: &Region<T>,
    n_range: usize,
    n_az: usize,
    n_el: usize,
    column_norm: ColumnNorm,
) -> Result<BeamBook<T>> {
    if n_range == 0 || n_az == 0 || n_el == 0 {
        return Err(Error::EmptyInput);
    }
    let origin = geom.origin();
    let mut columns = Vec::with_capacity(n_range * n_az * n_el);
    let mut beams = Vec::with_capacity(columns.capacity());
    for d in geometric(region.d_min, region.d_max, n_range) {
        let band = region.elevation_bounds(d, origin.z);
        for az in uniform(region.az_min, region.az_max, n_az) {
            for el in uniform(band.lo, band.hi, n_el) {
                let pose = SphericalPose::new(d, az, el)?;
                let point = cartesian_from_spherical(pose, origin);
                columns.push(nf_steering_at(geom, geom.wavelength(), point)?);
                beams.push(BeamMeta::Focus { point, pose });
            }
        }
    }
    BeamBook::from_columns(columns, Scheme::Nf, beams, column_norm)
}
