//! OFDM numerology, steering vectors and the spherical / planar channel
//! matrices.

use num_complex::Complex;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::geometry::{spherical_from_cartesian, ArrayGeometry};
use crate::linalg::{CMatrix, Point3};
use crate::scalar::{cycles_to_radians, Real};

/// Which propagation model (and matching signaling scheme) is in play.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Scheme {
    /// Planar wavefront; beam steering over azimuth.
    Ff,
    /// Spherical wavefront; beam focusing on points.
    Nf,
}

impl Scheme {
    /// Protocol index: 1 for far field, 2 for near field.
    pub fn index(self) -> u8 {
        match self {
            Scheme::Ff => 1,
            Scheme::Nf => 2,
        }
    }

    pub fn from_index(i: u8) -> Option<Self> {
        match i {
            1 => Some(Scheme::Ff),
            2 => Some(Scheme::Nf),
            _ => None,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Scheme::Ff => "ff",
            Scheme::Nf => "nf",
        }
    }
}

impl std::fmt::Display for Scheme {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Subcarrier layout. Subcarrier `q` (0-based) sits at `f_o + q * W_sub`.
#[derive(Debug, Clone, PartialEq)]
pub struct OfdmGrid<T> {
    q_count: usize,
    sub_bw: T,
    sub_spacing: T,
    carrier_freq: T,
    speed_of_light: T,
    wavelengths: Vec<T>,
}

impl<T: Real> OfdmGrid<T> {
    pub fn new(
        q_count: usize,
        sub_bw: T,
        sub_spacing: T,
        carrier_freq: T,
        speed_of_light: T,
    ) -> Result<Self> {
        if q_count == 0 {
            return Err(invalid("at least one subcarrier is required"));
        }
        if !(sub_bw > T::zero()) || !(sub_spacing > T::zero()) {
            return Err(invalid("subcarrier bandwidth and spacing must be positive"));
        }
        if !(carrier_freq > T::zero()) || !(speed_of_light > T::zero()) {
            return Err(invalid(
                "carrier frequency and speed of light must be positive",
            ));
        }
        let wavelengths = (0..q_count)
            .map(|q| speed_of_light / (carrier_freq + T::from_count(q) * sub_spacing))
            .collect();
        Ok(Self {
            q_count,
            sub_bw,
            sub_spacing,
            carrier_freq,
            speed_of_light,
            wavelengths,
        })
    }

    pub fn q_count(&self) -> usize {
        self.q_count
    }

    pub fn sub_bw(&self) -> T {
        self.sub_bw
    }

    pub fn sub_spacing(&self) -> T {
        self.sub_spacing
    }

    pub fn carrier_freq(&self) -> T {
        self.carrier_freq
    }

    pub fn speed_of_light(&self) -> T {
        self.speed_of_light
    }

    pub fn wavelength(&self, q: usize) -> T {
        self.wavelengths[q]
    }

    pub fn wavelengths(&self) -> &[T] {
        &self.wavelengths
    }

    /// `(Q - 1) * W_sub + W_o`.
    pub fn total_bandwidth(&self) -> T {
        T::from_count(self.q_count - 1) * self.sub_spacing + self.sub_bw
    }

    /// Range over which the subcarrier phase roll is unambiguous, `c / W_sub`.
    pub fn ambiguity_range(&self) -> T {
        self.speed_of_light / self.sub_spacing
    }
}

/// Spherical-wave steering vector for subcarrier `q` toward `p`.
///
/// Entry `n` is `(lambda_q d) / (lambda_o d_n) * exp(-j 2 pi d_n / lambda_q)`,
/// `d` being the range from the array reference and `d_n` from element `n`.
pub fn nf_steering<T: Real>(
    geom: &ArrayGeometry<T>,
    grid: &OfdmGrid<T>,
    q: usize,
    p: Point3<T>,
) -> Result<Vec<Complex<T>>> {
    if q >= grid.q_count() {
        return Err(Error::DimensionMismatch {
            what: "subcarrier index",
            expected: grid.q_count(),
            got: q,
        });
    }
    nf_steering_at(geom, grid.wavelength(q), p)
}

/// [`nf_steering`] at an explicit wavelength.
pub fn nf_steering_at<T: Real>(
    geom: &ArrayGeometry<T>,
    wavelength: T,
    p: Point3<T>,
) -> Result<Vec<Complex<T>>> {
    let d = p.distance(geom.origin());
    let amp0 = wavelength * d / geom.wavelength();
    geom.element_positions()
        .iter()
        .enumerate()
        .map(|(n, &pn)| {
            let dn = p.distance(pn);
            if !(dn > T::zero()) {
                return Err(Error::SingularRange { element: n });
            }
            let phase = -cycles_to_radians(dn / wavelength);
            Ok(Complex::from_polar(amp0 / dn, phase))
        })
        .collect()
}

/// Planar-wave steering vector, entry `n = exp(+j 2 pi / lambda_o (p_n - o) . u)`.
pub fn ff_steering<T: Real>(geom: &ArrayGeometry<T>, az: T, el: T) -> Vec<Complex<T>> {
    let (fx, fz) = ff_steering_factors(geom, az, el);
    let mut out = Vec::with_capacity(geom.element_count());
    for z in &fz {
        for x in &fx {
            out.push(*z * *x);
        }
    }
    out
}

/// The planar steering vector factorizes over the two array axes; returns
/// the per-column (x) and per-row (z) factors.
pub fn ff_steering_factors<T: Real>(
    geom: &ArrayGeometry<T>,
    az: T,
    el: T,
) -> (Vec<Complex<T>>, Vec<Complex<T>>) {
    let lambda = geom.wavelength();
    let ux = el.cos() * az.sin();
    let uz = el.sin();
    let fx = geom
        .x_offsets()
        .into_iter()
        .map(|x| Complex::from_polar(T::one(), T::TAU() * x * ux / lambda))
        .collect();
    let fz = geom
        .z_offsets()
        .into_iter()
        .map(|z| Complex::from_polar(T::one(), T::TAU() * z * uz / lambda))
        .collect();
    (fx, fz)
}

/// Subcarrier phase roll `t(d)`, entry `q = exp(-j 2 pi q W_sub d / c)`.
pub fn subcarrier_phase_vector<T: Real>(grid: &OfdmGrid<T>, d: T) -> Vec<Complex<T>> {
    let step = grid.sub_spacing() * d / grid.speed_of_light();
    (0..grid.q_count())
        .map(|q| Complex::from_polar(T::one(), -cycles_to_radians(T::from_count(q) * step)))
        .collect()
}

/// Free-space path gain with a synchronization phase offset.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PathGain<T> {
    pub dof: T,
    pub phase_offset: T,
    pub value: Complex<T>,
}

pub fn path_gain<T: Real>(geom: &ArrayGeometry<T>, d: T, phase_offset: T) -> Result<PathGain<T>> {
    if !(d > T::zero()) {
        return Err(invalid("path gain needs a positive distance"));
    }
    let amp = geom.wavelength() / (T::lit(4.0) * T::PI() * d);
    Ok(PathGain {
        dof: d,
        phase_offset,
        value: Complex::from_polar(amp, -phase_offset),
    })
}

/// `N_BS x Q` channel with the model that generated it.
#[derive(Debug, Clone, PartialEq)]
pub struct ChannelMatrix<T> {
    pub entries: CMatrix<T>,
    pub model: Scheme,
}

impl<T: Real> ChannelMatrix<T> {
    pub fn rows(&self) -> usize {
        self.entries.rows()
    }

    pub fn q_count(&self) -> usize {
        self.entries.cols()
    }
}

/// Spherical-wavefront channel: column `q` is `beta * nf_steering(q, p)`.
pub fn nf_channel<T: Real>(
    geom: &ArrayGeometry<T>,
    grid: &OfdmGrid<T>,
    p: Point3<T>,
    phase_offset: T,
) -> Result<ChannelMatrix<T>> {
    let d = p.distance(geom.origin());
    let beta = path_gain(geom, d, phase_offset)?.value;
    let n = geom.element_count();
    let mut h = CMatrix::zeros(n, grid.q_count());
    // distances are shared by every subcarrier
    let dists: Vec<T> = geom
        .element_positions()
        .iter()
        .map(|&pn| p.distance(pn))
        .collect();
    if let Some(element) = dists.iter().position(|dn| !(*dn > T::zero())) {
        return Err(Error::SingularRange { element });
    }
    for q in 0..grid.q_count() {
        let lq = grid.wavelength(q);
        let amp0 = lq * d / geom.wavelength();
        for (dst, &dn) in h.column_mut(q).iter_mut().zip(&dists) {
            *dst = beta * Complex::from_polar(amp0 / dn, -cycles_to_radians(dn / lq));
        }
    }
    Ok(ChannelMatrix {
        entries: h,
        model: Scheme::Nf,
    })
}

/// Planar-wavefront channel `beta * ff_steering(az, el) * t(d)^T`.
pub fn ff_channel<T: Real>(
    geom: &ArrayGeometry<T>,
    grid: &OfdmGrid<T>,
    p: Point3<T>,
    phase_offset: T,
) -> Result<ChannelMatrix<T>> {
    let pose = spherical_from_cartesian(p, geom.origin())?;
    let beta = path_gain(geom, pose.dof, phase_offset)?.value;
    let a = ff_steering(geom, pose.az, pose.el);
    let t = subcarrier_phase_vector(grid, pose.dof);
    let mut h = CMatrix::zeros(a.len(), t.len());
    for (q, &tq) in t.iter().enumerate() {
        for (dst, &an) in h.column_mut(q).iter_mut().zip(&a) {
            *dst = beta * an * tq;
        }
    }
    Ok(ChannelMatrix {
        entries: h,
        model: Scheme::Ff,
    })
}

/// Relative Frobenius gap `min_psi ||e^{j psi} H_ff - H_nf|| / ||H_nf||`.
///
/// The planar model drops the common carrier phase `exp(-j 2 pi d / lambda_o)`,
/// so the comparison is made after removing the best common phase.
pub fn model_gap<T: Real>(h_nf: &ChannelMatrix<T>, h_ff: &ChannelMatrix<T>) -> Result<T> {
    let ip = h_ff.entries.inner(&h_nf.entries)?;
    let rot = if ip.norm() > T::zero() {
        ip / ip.norm()
    } else {
        Complex::new(T::one(), T::zero())
    };
    let denom = h_nf.entries.frobenius_norm();
    if !(denom > T::zero()) {
        return Err(Error::ZeroDenominator("model gap"));
    }
    let diff = h_ff
        .entries
        .as_slice()
        .iter()
        .zip(h_nf.entries.as_slice())
        .map(|(&f, &n)| (f * rot - n).norm_sqr())
        .sum::<T>()
        .sqrt();
    Ok(diff / denom)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{cartesian_from_spherical, SphericalPose, ROUNDED_SPEED_OF_LIGHT};
    use crate::linalg::cnorm;
    use proptest::prelude::*;
    use std::f64::consts::{PI, TAU};

    const C: f64 = ROUNDED_SPEED_OF_LIGHT;

    fn origin() -> Point3<f64> {
        Point3::new(0.0, 0.0, 2.0)
    }

    fn array(n: usize) -> ArrayGeometry<f64> {
        ArrayGeometry::half_wavelength(n, n, origin(), 24e9, C).unwrap()
    }

    fn grid() -> OfdmGrid<f64> {
        OfdmGrid::new(12, 15e3, 750e3, 24e9, C).unwrap()
    }

    fn boresight(d: f64) -> Point3<f64> {
        Point3::new(0.0, d, 2.0)
    }

    #[test]
    fn total_bandwidth_matches_table() {
        assert!((grid().total_bandwidth() - 8.265e6).abs() < 1e-6);
    }

    #[test]
    fn wavelengths_strictly_decrease_from_carrier() {
        let g = grid();
        assert_eq!(g.wavelength(0), C / 24e9);
        assert!(g.wavelengths().windows(2).all(|w| w[1] < w[0]));
    }

    #[test]
    fn single_element_steering() {
        let geom = ArrayGeometry::new(1, 1, 0.00625, origin(), 24e9, C).unwrap();
        let p = Point3::new(1.0, 3.0, 1.2);
        let d = p.distance(origin());
        let a = nf_steering(&geom, &grid(), 0, p).unwrap();
        assert!((a[0].norm() - 1.0).abs() < 1e-12);
        let expected = Complex::from_polar(1.0, -TAU * d / geom.wavelength());
        assert!((a[0] - expected).norm() < 1e-9);
    }

    #[test]
    fn steering_on_an_element_is_singular() {
        let geom = array(4);
        let p = geom.element_positions()[5];
        assert!(matches!(
            nf_steering(&geom, &grid(), 0, p),
            Err(Error::SingularRange { element: 5 })
        ));
    }

    #[test]
    fn far_nf_steering_norm_near_sqrt_n() {
        let geom = array(24);
        let a = nf_steering(&geom, &grid(), 0, boresight(1000.0)).unwrap();
        let target = (geom.element_count() as f64).sqrt();
        assert!((cnorm(&a) - target).abs() / target < 1e-3);
    }

    #[test]
    fn nf_moduli_follow_distance_ratio() {
        let geom = array(6);
        let g = grid();
        let p = Point3::new(0.4, 1.5, 1.3);
        let d = p.distance(origin());
        for q in [0, 5, 11] {
            let a = nf_steering(&geom, &g, q, p).unwrap();
            for (an, &pn) in a.iter().zip(geom.element_positions()) {
                let expected = g.wavelength(q) * d / (geom.wavelength() * p.distance(pn));
                assert!((an.norm() - expected).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn ff_boresight_is_all_ones() {
        let a = ff_steering(&array(5), 0.0, 0.0);
        assert!(a
            .iter()
            .all(|v| (v - Complex::new(1.0, 0.0)).norm() < 1e-15));
    }

    proptest! {
        #[test]
        fn ff_unit_modulus_and_sign_flip(az in -1.2f64..1.2, el in -1.2f64..1.2) {
            let geom = array(7);
            let a = ff_steering(&geom, az, el);
            let b = ff_steering(&geom, -az, -el);
            prop_assert!((cnorm(&a) - 7.0).abs() < 1e-10);
            for (x, y) in a.iter().zip(&b) {
                prop_assert!((x.norm() - 1.0).abs() < 1e-12);
                prop_assert!((x.conj() - y).norm() < 1e-10);
            }
        }

        #[test]
        fn phase_roll_is_stationary(d1 in 0.0f64..300.0, d2 in 0.0f64..300.0, s in 0.0f64..50.0) {
            let g = grid();
            let a = crate::linalg::cdot(&subcarrier_phase_vector(&g, d1), &subcarrier_phase_vector(&g, d2));
            let b = crate::linalg::cdot(&subcarrier_phase_vector(&g, d1 + s), &subcarrier_phase_vector(&g, d2 + s));
            prop_assert!((a - b).norm() < 1e-9);
        }
    }

    #[test]
    fn phase_roll_special_distances() {
        let g = grid();
        assert!(subcarrier_phase_vector(&g, 0.0)
            .iter()
            .all(|v| (v - Complex::new(1.0, 0.0)).norm() < 1e-15));
        assert!((g.ambiguity_range() - 400.0).abs() < 1e-9);
        let period = subcarrier_phase_vector(&g, 400.0);
        assert!(period
            .iter()
            .all(|v| (v - Complex::new(1.0, 0.0)).norm() < 1e-9));
        let half = subcarrier_phase_vector(&g, 200.0);
        for (q, v) in half.iter().enumerate() {
            let sign = if q % 2 == 0 { 1.0 } else { -1.0 };
            assert!((v - Complex::new(sign, 0.0)).norm() < 1e-9, "q={q}");
        }
    }

    #[test]
    fn path_gain_values() {
        let geom = array(24);
        let b = path_gain(&geom, 1.0, 0.0).unwrap();
        assert!((b.value.norm() - 0.0125 / (4.0 * PI)).abs() < 1e-15);
        assert!((b.value.norm() - 9.9472e-4).abs() < 1e-8);
        assert!(b.value.im == 0.0 && b.value.re > 0.0);
        let far = path_gain(&geom, 2.0, 0.7).unwrap();
        assert!((far.value.norm() - b.value.norm() / 2.0).abs() < 1e-15);
        assert!((far.value.arg() + 0.7).abs() < 1e-12);
        assert!(path_gain(&geom, 0.0, 0.0).is_err());
    }

    #[test]
    fn nf_channel_matches_elementwise_loop() {
        let geom = array(5);
        let g = grid();
        let p = Point3::new(-0.3, 2.2, 1.4);
        let phi = 1.1;
        let h = nf_channel(&geom, &g, p, phi).unwrap();
        let d = p.distance(origin());
        let beta = geom.wavelength() / (4.0 * PI * d) * Complex::from_polar(1.0, -phi);
        for q in 0..g.q_count() {
            let lq = C / (24e9 + q as f64 * 750e3);
            for (n, &pn) in geom.element_positions().iter().enumerate() {
                let dn = p.distance(pn);
                let v = beta
                    * (lq * d / (geom.wavelength() * dn))
                    * Complex::from_polar(1.0, -TAU * dn / lq);
                assert!((h.entries.get(n, q) - v).norm() < 1e-12);
            }
        }
    }

    #[test]
    fn nf_channel_far_column_norms() {
        let geom = array(24);
        let d = 10.0 * geom.fraunhofer_distance();
        let h = nf_channel(&geom, &grid(), boresight(d), 0.3).unwrap();
        let target = geom.wavelength() / (4.0 * PI * d) * (geom.element_count() as f64).sqrt();
        for q in 0..12 {
            assert!((cnorm(h.entries.column(q)) - target).abs() / target < 5e-3);
        }
    }

    #[test]
    fn phase_offset_is_a_common_factor() {
        let geom = array(4);
        let p = Point3::new(0.2, 3.0, 1.5);
        let a = nf_channel(&geom, &grid(), p, 0.0).unwrap();
        let b = nf_channel(&geom, &grid(), p, 2.0).unwrap();
        let rot = Complex::from_polar(1.0, -2.0);
        for (x, y) in a.entries.as_slice().iter().zip(b.entries.as_slice()) {
            assert!((x * rot - y).norm() < 1e-15);
        }
    }

    #[test]
    fn ff_channel_is_rank_one() {
        use nalgebra::DMatrix;
        let geom = array(6);
        let p = cartesian_from_spherical(SphericalPose::new(4.0, 0.3, -0.1).unwrap(), origin());
        let h = ff_channel(&geom, &grid(), p, 0.5).unwrap();
        let m = DMatrix::from_fn(h.rows(), h.q_count(), |r, c| {
            let v = h.entries.get(r, c);
            nalgebra::Complex::new(v.re, v.im)
        });
        let sv = m.singular_values();
        assert!(sv[1] < 1e-10 * sv[0]);
    }

    #[test]
    fn model_gap_near_and_far() {
        let geom = array(24);
        let g = grid();
        let gap = |d: f64| {
            let nf = nf_channel(&geom, &g, boresight(d), 0.0).unwrap();
            let ff = ff_channel(&geom, &g, boresight(d), 0.0).unwrap();
            model_gap(&nf, &ff).unwrap()
        };
        assert!(gap(1000.0) < 1e-2);
        assert!(gap(1.0) > 0.1);
        let sweep: Vec<f64> = (0..=30).map(|i| gap(10f64.powf(i as f64 / 10.0))).collect();
        assert!(sweep.windows(2).all(|w| w[1] < w[0]), "{sweep:?}");
    }

    #[test]
    fn f32_steering_tracks_f64() {
        let g64 = array(8);
        let g32 =
            ArrayGeometry::<f32>::half_wavelength(8, 8, Point3::new(0.0, 0.0, 2.0), 24e9, 3e8)
                .unwrap();
        let grid32 = OfdmGrid::<f32>::new(12, 15e3, 750e3, 24e9, 3e8).unwrap();
        let p = Point3::new(0.5, 2.0, 1.2);
        let a = nf_steering(&g64, &grid(), 3, p).unwrap();
        let b = nf_steering(&g32, &grid32, 3, p.cast()).unwrap();
        for (x, y) in a.iter().zip(&b) {
            assert!((x - Complex::new(y.re as f64, y.im as f64)).norm() < 1e-3);
        }
    }
}
