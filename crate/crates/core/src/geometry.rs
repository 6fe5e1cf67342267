//! Base-station array geometry, serviced region, spherical/Cartesian
//! conversions and the Fraunhofer distance.
//!
//! The planar array is wall-mounted in the x-z plane with boresight along
//! +y. Azimuth is measured from +y toward +x and elevation from the x-y
//! plane toward +z, so a pose `(d, az, el)` maps to
//! `origin + d * [cos el sin az, cos el cos az, sin el]`.

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::linalg::Point3;
use crate::scalar::Real;

/// Speed of light in vacuum, m/s.
pub const SPEED_OF_LIGHT: f64 = 2.997_924_58e8;

/// Rounded speed of light used by the published scenario tables; with it
/// 24 GHz gives a 12.5 mm wavelength exactly.
pub const ROUNDED_SPEED_OF_LIGHT: f64 = 3.0e8;

/// Aperture convention for [`ArrayGeometry::fraunhofer_distance_with`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ApertureConvention {
    /// `D = sqrt(2) * max(n_x, n_z) * spacing`: the diagonal of the square
    /// spanned by the longer side. Reproduces the tabulated scenario values.
    #[default]
    MaxSide,
    /// `D = sqrt(n_x^2 + n_z^2) * spacing`: the true rectangle diagonal.
    Diagonal,
}

/// Uniform planar array of `n_x * n_z` elements centred on `origin`.
#[derive(Debug, Clone, PartialEq)]
pub struct ArrayGeometry<T> {
    n_x: usize,
    n_z: usize,
    spacing: T,
    origin: Point3<T>,
    carrier_freq: T,
    speed_of_light: T,
    wavelength: T,
    positions: Vec<Point3<T>>,
}

impl<T: Real> ArrayGeometry<T> {
    pub fn new(
        n_x: usize,
        n_z: usize,
        spacing: T,
        origin: Point3<T>,
        carrier_freq: T,
        speed_of_light: T,
    ) -> Result<Self> {
        if n_x == 0 || n_z == 0 {
            return Err(invalid("array needs at least one element per axis"));
        }
        if !(spacing > T::zero()) {
            return Err(invalid("element spacing must be positive"));
        }
        if !(carrier_freq > T::zero()) || !(speed_of_light > T::zero()) {
            return Err(invalid(
                "carrier frequency and speed of light must be positive",
            ));
        }
        let wavelength = speed_of_light / carrier_freq;
        let positions = build_positions(n_x, n_z, spacing, origin);
        Ok(Self {
            n_x,
            n_z,
            spacing,
            origin,
            carrier_freq,
            speed_of_light,
            wavelength,
            positions,
        })
    }

    /// Array with half-wavelength element spacing.
    pub fn half_wavelength(
        n_x: usize,
        n_z: usize,
        origin: Point3<T>,
        carrier_freq: T,
        speed_of_light: T,
    ) -> Result<Self> {
        let spacing = speed_of_light / carrier_freq / T::lit(2.0);
        Self::new(n_x, n_z, spacing, origin, carrier_freq, speed_of_light)
    }

    pub fn n_x(&self) -> usize {
        self.n_x
    }

    pub fn n_z(&self) -> usize {
        self.n_z
    }

    pub fn element_count(&self) -> usize {
        self.n_x * self.n_z
    }

    pub fn spacing(&self) -> T {
        self.spacing
    }

    pub fn origin(&self) -> Point3<T> {
        self.origin
    }

    pub fn carrier_freq(&self) -> T {
        self.carrier_freq
    }

    pub fn speed_of_light(&self) -> T {
        self.speed_of_light
    }

    pub fn wavelength(&self) -> T {
        self.wavelength
    }

    /// Element positions, row-major: index `i_z * n_x + i_x`.
    pub fn element_positions(&self) -> &[Point3<T>] {
        &self.positions
    }

    /// Element offsets from the origin along x, indexed by `i_x`.
    pub fn x_offsets(&self) -> Vec<T> {
        axis_offsets(self.n_x, self.spacing)
    }

    /// Element offsets from the origin along z, indexed by `i_z`.
    pub fn z_offsets(&self) -> Vec<T> {
        axis_offsets(self.n_z, self.spacing)
    }

    pub fn aperture(&self, convention: ApertureConvention) -> T {
        let nx = T::from_count(self.n_x);
        let nz = T::from_count(self.n_z);
        match convention {
            ApertureConvention::MaxSide => T::SQRT_2() * nx.max(nz) * self.spacing,
            ApertureConvention::Diagonal => (nx * nx + nz * nz).sqrt() * self.spacing,
        }
    }

    /// `2 D^2 / lambda` with the default aperture convention.
    pub fn fraunhofer_distance(&self) -> T {
        self.fraunhofer_distance_with(ApertureConvention::MaxSide)
    }

    pub fn fraunhofer_distance_with(&self, convention: ApertureConvention) -> T {
        let d = self.aperture(convention);
        T::lit(2.0) * d * d / self.wavelength
    }
}

fn axis_offsets<T: Real>(n: usize, spacing: T) -> Vec<T> {
    let center = T::from_count(n - 1) / T::lit(2.0);
    (0..n)
        .map(|i| (T::from_count(i) - center) * spacing)
        .collect()
}

fn build_positions<T: Real>(
    n_x: usize,
    n_z: usize,
    spacing: T,
    origin: Point3<T>,
) -> Vec<Point3<T>> {
    let xs = axis_offsets(n_x, spacing);
    let zs = axis_offsets(n_z, spacing);
    let mut out = Vec::with_capacity(n_x * n_z);
    for &z in &zs {
        for &x in &xs {
            out.push(origin + Point3::new(x, T::zero(), z));
        }
    }
    out
}

/// Closed interval `[lo, hi]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Interval<T> {
    pub lo: T,
    pub hi: T,
}

impl<T: Real> Interval<T> {
    pub fn new(lo: T, hi: T) -> Result<Self> {
        if !(lo <= hi) {
            return Err(invalid("interval lower end exceeds upper end"));
        }
        Ok(Self { lo, hi })
    }

    pub fn width(&self) -> T {
        self.hi - self.lo
    }

    pub fn mid(&self) -> T {
        (self.lo + self.hi) / T::lit(2.0)
    }

    pub fn contains(&self, x: T) -> bool {
        x >= self.lo && x <= self.hi
    }

    pub fn clamp(&self, x: T) -> T {
        x.max(self.lo).min(self.hi)
    }

    /// Window of `width` centred on `center`, intersected with `self`.
    pub fn window(&self, center: T, width: T) -> Self {
        let c = self.clamp(center);
        let half = width / T::lit(2.0);
        Self {
            lo: (c - half).max(self.lo),
            hi: (c + half).min(self.hi),
        }
    }
}

/// Cylindrical serviced region around the base station.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Region<T> {
    pub d_min: T,
    pub d_max: T,
    pub az_min: T,
    pub az_max: T,
    pub z_min: T,
    pub z_max: T,
}

impl<T: Real> Region<T> {
    pub fn new(d_min: T, d_max: T, az_min: T, az_max: T, z_min: T, z_max: T) -> Result<Self> {
        if !(d_min > T::zero()) {
            return Err(invalid("d_min must be positive"));
        }
        if !(d_min < d_max) {
            return Err(invalid("d_min must be below d_max"));
        }
        if !(az_min < az_max) {
            return Err(invalid("az_min must be below az_max"));
        }
        if !(z_min <= z_max) {
            return Err(invalid("z_min must not exceed z_max"));
        }
        Ok(Self {
            d_min,
            d_max,
            az_min,
            az_max,
            z_min,
            z_max,
        })
    }

    pub fn range(&self) -> Interval<T> {
        Interval {
            lo: self.d_min,
            hi: self.d_max,
        }
    }

    pub fn azimuth(&self) -> Interval<T> {
        Interval {
            lo: self.az_min,
            hi: self.az_max,
        }
    }

    /// Height offsets `z - origin_z` spanned by the region.
    pub fn height_offsets(&self, origin_z: T) -> Interval<T> {
        Interval {
            lo: self.z_min - origin_z,
            hi: self.z_max - origin_z,
        }
    }

    /// Elevation bounds reachable at range `d`, from `el = asin(dz / d)`.
    pub fn elevation_bounds(&self, d: T, origin_z: T) -> Interval<T> {
        elevation_bounds(self.height_offsets(origin_z), d)
    }

    pub fn contains(&self, p: Point3<T>, origin: Point3<T>) -> bool {
        let tol = T::lit(1e-9);
        match spherical_from_cartesian(p, origin) {
            Ok(pose) => {
                pose.dof >= self.d_min - tol
                    && pose.dof <= self.d_max + tol
                    && pose.az >= self.az_min - tol
                    && pose.az <= self.az_max + tol
                    && p.z >= self.z_min - tol
                    && p.z <= self.z_max + tol
            }
            Err(_) => false,
        }
    }
}

/// Steepest elevation a bracket may reach, just short of vertical.
pub const MAX_ELEVATION: f64 = std::f64::consts::FRAC_PI_2 - 1e-3;

/// Elevation interval `[asin(dz_lo / d), asin(dz_hi / d)]`, limited to
/// `+/- MAX_ELEVATION` when the range is shorter than the height offset.
pub fn elevation_bounds<T: Real>(height_offsets: Interval<T>, d: T) -> Interval<T> {
    let lim = T::lit(MAX_ELEVATION);
    let s = |dz: T| {
        (dz / d)
            .max(-T::one())
            .min(T::one())
            .asin()
            .max(-lim)
            .min(lim)
    };
    Interval {
        lo: s(height_offsets.lo),
        hi: s(height_offsets.hi),
    }
}

/// Range / azimuth / elevation of a point relative to the array reference.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SphericalPose<T> {
    pub dof: T,
    pub az: T,
    pub el: T,
}

impl<T: Real> SphericalPose<T> {
    pub fn new(dof: T, az: T, el: T) -> Result<Self> {
        if !(dof > T::zero()) {
            return Err(Error::ZeroRange);
        }
        if !(el.abs() < T::FRAC_PI_2()) {
            return Err(Error::Zenith);
        }
        Ok(Self { dof, az, el })
    }

    /// Unit direction `[cos el sin az, cos el cos az, sin el]`.
    pub fn direction(&self) -> Point3<T> {
        direction(self.az, self.el)
    }
}

pub fn direction<T: Real>(az: T, el: T) -> Point3<T> {
    let (se, ce) = el.sin_cos();
    let (sa, ca) = az.sin_cos();
    Point3::new(ce * sa, ce * ca, se)
}

pub fn cartesian_from_spherical<T: Real>(pose: SphericalPose<T>, origin: Point3<T>) -> Point3<T> {
    origin + pose.direction() * pose.dof
}

pub fn spherical_from_cartesian<T: Real>(
    p: Point3<T>,
    origin: Point3<T>,
) -> Result<SphericalPose<T>> {
    let r = p - origin;
    let d = r.norm();
    if !(d > T::zero()) {
        return Err(Error::ZeroRange);
    }
    let s = (r.z / d).max(-T::one()).min(T::one());
    let el = s.asin();
    if !(el.abs() < T::FRAC_PI_2()) {
        return Err(Error::Zenith);
    }
    Ok(SphericalPose {
        dof: d,
        az: r.x.atan2(r.y),
        el,
    })
}
