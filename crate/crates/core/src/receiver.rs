//! Downlink pilot reception through a beam book, with thermal noise.

use std::io::{Read, Write};

use num_complex::Complex;
use rand::Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::beambook::BeamBook;
use crate::error::{Error, Result};
use crate::linalg::{cdot, CMatrix};
use crate::ofdm::{ChannelMatrix, OfdmGrid, Scheme};
use crate::rng::trial_rng;
use crate::scalar::Real;

pub fn dbm_to_watts(dbm: f64) -> f64 {
    10f64.powf((dbm - 30.0) / 10.0)
}

pub fn watts_to_dbm(w: f64) -> f64 {
    10.0 * w.log10() + 30.0
}

/// Thermal noise power over one subcarrier's occupied bandwidth, in watts.
pub fn noise_variance<T: Real>(
    grid: &OfdmGrid<T>,
    noise_figure_db: f64,
    noise_density_dbm_hz: f64,
) -> f64 {
    dbm_to_watts(noise_density_dbm_hz + 10.0 * grid.sub_bw().as_f64().log10() + noise_figure_db)
}

/// Received pilots, one row per beam and one column per subcarrier.
#[derive(Debug, Clone, PartialEq)]
pub struct RxSnapshot<T> {
    pub y: CMatrix<T>,
    pub scheme: Scheme,
    pub noise_var: f64,
    pub tx_power: f64,
}

impl<T: Real> RxSnapshot<T> {
    pub fn beam_count(&self) -> usize {
        self.y.rows()
    }

    pub fn q_count(&self) -> usize {
        self.y.cols()
    }

    /// Same snapshot with every sample multiplied by `s`.
    pub fn scaled(&self, s: Complex<T>) -> Self {
        Self {
            y: self.y.scaled(s),
            ..self.clone()
        }
    }

    /// Long-format CSV, one `j,q,re,im` row per sample.
    pub fn write_csv<W: Write>(&self, w: W) -> Result<()> {
        let mut out = csv::Writer::from_writer(w);
        for q in 0..self.q_count() {
            for j in 0..self.beam_count() {
                let v = self.y.get(j, q);
                out.serialize(SampleRow {
                    j,
                    q,
                    re: v.re.as_f64(),
                    im: v.im.as_f64(),
                })?;
            }
        }
        out.flush()?;
        Ok(())
    }

    /// Reads the [`write_csv`](Self::write_csv) format; the matrix shape is
    /// inferred from the largest indices.
    pub fn read_csv<R: Read>(r: R, scheme: Scheme, noise_var: f64, tx_power: f64) -> Result<Self> {
        let mut rows = Vec::new();
        for rec in csv::Reader::from_reader(r).deserialize() {
            let row: SampleRow = rec?;
            rows.push(row);
        }
        let j_count = rows
            .iter()
            .map(|r| r.j + 1)
            .max()
            .ok_or(Error::EmptyInput)?;
        let q_count = rows
            .iter()
            .map(|r| r.q + 1)
            .max()
            .ok_or(Error::EmptyInput)?;
        if rows.len() != j_count * q_count {
            return Err(Error::DimensionMismatch {
                what: "snapshot samples",
                expected: j_count * q_count,
                got: rows.len(),
            });
        }
        let mut y = CMatrix::zeros(j_count, q_count);
        for r in rows {
            y.set(r.j, r.q, Complex::new(T::lit(r.re), T::lit(r.im)));
        }
        Ok(Self {
            y,
            scheme,
            noise_var,
            tx_power,
        })
    }
}

#[derive(Debug, Serialize, Deserialize)]
struct SampleRow {
    j: usize,
    q: usize,
    re: f64,
    im: f64,
}

/// `y[j, q] = sqrt(P) f_j^H h_q + z`, unit pilots, seeded noise.
pub fn simulate_rx<T: Real>(
    channel: &ChannelMatrix<T>,
    book: &BeamBook<T>,
    tx_power: f64,
    noise_var: f64,
    seed: u64,
) -> Result<RxSnapshot<T>> {
    simulate_rx_with(channel, book, tx_power, noise_var, &mut trial_rng(seed))
}

/// [`simulate_rx`] drawing noise from a caller-supplied generator.
pub fn simulate_rx_with<T: Real, R: Rng + ?Sized>(
    channel: &ChannelMatrix<T>,
    book: &BeamBook<T>,
    tx_power: f64,
    noise_var: f64,
    rng: &mut R,
) -> Result<RxSnapshot<T>> {
    let f = book.matrix();
    if channel.rows() != f.rows() {
        return Err(Error::DimensionMismatch {
            what: "channel rows vs beam book rows",
            expected: f.rows(),
            got: channel.rows(),
        });
    }
    if tx_power < 0.0 || noise_var < 0.0 {
        return Err(crate::error::invalid(
            "power and noise variance must be non-negative",
        ));
    }
    let amp = T::lit(tx_power.sqrt());
    let sigma = (noise_var / 2.0).sqrt();
    let mut y = CMatrix::zeros(f.cols(), channel.q_count());
    // column-major fill keeps the noise draw order fixed: q outer, j inner
    for q in 0..channel.q_count() {
        let h = channel.entries.column(q);
        for j in 0..f.cols() {
            let mut v = cdot(f.column(j), h) * amp;
            if noise_var > 0.0 {
                let re: f64 = StandardNormal.sample(rng);
                let im: f64 = StandardNormal.sample(rng);
                v += Complex::new(T::lit(sigma * re), T::lit(sigma * im));
            }
            y.set(j, q, v);
        }
    }
    Ok(RxSnapshot {
        y,
        scheme: book.scheme(),
        noise_var,
        tx_power,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::beambook::{design_ff_beambook, design_nf_beambook, BeamMeta, ColumnNorm};
    use crate::geometry::{ArrayGeometry, Region, ROUNDED_SPEED_OF_LIGHT};
    use crate::linalg::{cnorm, Point3};
    use crate::ofdm::nf_channel;
    use std::f64::consts::FRAC_PI_4;

    fn setup() -> (ArrayGeometry<f64>, OfdmGrid<f64>, Region<f64>) {
        (
            ArrayGeometry::half_wavelength(
                24,
                24,
                Point3::new(0.0, 0.0, 2.0),
                24e9,
                ROUNDED_SPEED_OF_LIGHT,
            )
            .unwrap(),
            OfdmGrid::new(12, 15e3, 750e3, 24e9, ROUNDED_SPEED_OF_LIGHT).unwrap(),
            Region::new(1.0, 30.0, -FRAC_PI_4, FRAC_PI_4, 1.0, 1.5).unwrap(),
        )
    }

    #[test]
    fn noise_floor_values() {
        let (_, grid, _) = setup();
        let s = noise_variance(&grid, 10.0, -174.0);
        assert!((watts_to_dbm(s) + 122.239).abs() < 1e-3);
        assert!((s - 5.97e-16).abs() < 0.01e-16);
        let one_hz = OfdmGrid::new(12, 1.0, 750e3, 24e9, 3e8).unwrap();
        assert!((watts_to_dbm(noise_variance(&one_hz, 0.0, -174.0)) + 174.0).abs() < 1e-9);
        let wide = OfdmGrid::new(12, 30e3, 750e3, 24e9, 3e8).unwrap();
        let step = watts_to_dbm(noise_variance(&wide, 10.0, -174.0)) - watts_to_dbm(s);
        assert!((step - 3.0103).abs() < 1e-4);
    }

    #[test]
    fn zero_channel_gives_zero_snapshot() {
        let (geom, _, region) = setup();
        let book = design_ff_beambook(&geom, &region, 21, ColumnNorm::Unit).unwrap();
        let channel = ChannelMatrix {
            entries: CMatrix::zeros(geom.element_count(), 12),
            model: Scheme::Nf,
        };
        let y = simulate_rx(&channel, &book, 0.1, 0.0, 1).unwrap();
        assert!(y.y.as_slice().iter().all(|v| v.norm() == 0.0));
    }

    #[test]
    fn matched_focus_row_is_strongest() {
        let (geom, grid, region) = setup();
        let book = design_nf_beambook(&geom, &region, 4, 21, 1, ColumnNorm::Unit).unwrap();
        let j = 47;
        let BeamMeta::Focus { point, .. } = book.beams()[j] else {
            panic!()
        };
        let h = nf_channel(&geom, &grid, point, 0.4).unwrap();
        let y = simulate_rx(&h, &book, 0.1, 0.0, 0).unwrap();
        let norms: Vec<f64> = (0..book.beam_count()).map(|r| cnorm(&y.y.row(r))).collect();
        assert!(norms
            .iter()
            .enumerate()
            .all(|(i, &n)| i == j || n < norms[j]));
    }

    #[test]
    fn pure_noise_second_moment() {
        let (geom, _, region) = setup();
        let small = ArrayGeometry::half_wavelength(2, 2, geom.origin(), 24e9, 3e8).unwrap();
        let book = design_ff_beambook(&small, &region, 2, ColumnNorm::Unit).unwrap();
        let channel = ChannelMatrix {
            entries: CMatrix::zeros(4, 50_000),
            model: Scheme::Nf,
        };
        let s2 = 2.5e-3;
        let y = simulate_rx(&channel, &book, 0.0, s2, 9).unwrap();
        let mean = y.y.as_slice().iter().map(|v| v.norm_sqr()).sum::<f64>() / 100_000.0;
        assert!((mean - s2).abs() / s2 < 0.05);
    }

    #[test]
    fn linear_in_amplitude_and_reproducible() {
        let (geom, grid, region) = setup();
        let book = design_ff_beambook(&geom, &region, 21, ColumnNorm::Unit).unwrap();
        let h = nf_channel(&geom, &grid, Point3::new(1.0, 6.0, 1.2), 0.0).unwrap();
        let a = simulate_rx(&h, &book, 0.1, 0.0, 0).unwrap();
        let b = simulate_rx(&h, &book, 0.4, 0.0, 0).unwrap();
        for (x, y) in a.y.as_slice().iter().zip(b.y.as_slice()) {
            assert!((x * 2.0 - y).norm() <= 1e-12 * y.norm().max(1e-30));
        }
        let n1 = simulate_rx(&h, &book, 0.1, 1e-9, 77).unwrap();
        let n2 = simulate_rx(&h, &book, 0.1, 1e-9, 77).unwrap();
        assert_eq!(n1, n2);
    }

    #[test]
    fn rejects_mismatched_shapes() {
        let (geom, grid, region) = setup();
        let small = ArrayGeometry::half_wavelength(4, 4, geom.origin(), 24e9, 3e8).unwrap();
        let book = design_ff_beambook(&small, &region, 3, ColumnNorm::Unit).unwrap();
        let h = nf_channel(&geom, &grid, Point3::new(0.0, 5.0, 1.2), 0.0).unwrap();
        assert!(matches!(
            simulate_rx(&h, &book, 1.0, 0.0, 0),
            Err(Error::DimensionMismatch { .. })
        ));
    }

    #[test]
    fn csv_round_trip() {
        let (geom, grid, region) = setup();
        let book = design_ff_beambook(&geom, &region, 5, ColumnNorm::Unit).unwrap();
        let h = nf_channel(&geom, &grid, Point3::new(0.5, 4.0, 1.3), 0.0).unwrap();
        let y = simulate_rx(&h, &book, 0.1, 1e-12, 3).unwrap();
        let mut buf = Vec::new();
        y.write_csv(&mut buf).unwrap();
        let back = RxSnapshot::<f64>::read_csv(buf.as_slice(), Scheme::Ff, 1e-12, 0.1).unwrap();
        assert_eq!(back, y);
    }
}
