//! Simulation presets and an end-to-end pipeline from UE position to estimate.

use std::f64::consts::{FRAC_PI_4, TAU};
use std::fmt;
use std::str::FromStr;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::beambook::{design_ff_beambook, design_nf_beambook, BeamBook, ColumnNorm};
use crate::error::{invalid, Error, Result};
use crate::estimators::{localize_ff, localize_nf, Evaluation, PositionEstimate, SearchConfig};
use crate::geometry::{ArrayGeometry, Region, ROUNDED_SPEED_OF_LIGHT};
use crate::linalg::Point3;
use crate::ofdm::{nf_channel, OfdmGrid, Scheme};
use crate::receiver::{dbm_to_watts, noise_variance, simulate_rx_with};
use crate::rng::{derive_seed, trial_rng};
use crate::scalar::Real;
use crate::tracking::Localizer;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum ScenarioName {
    A,
    B,
    C,
}

impl fmt::Display for ScenarioName {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            ScenarioName::A => "A",
            ScenarioName::B => "B",
            ScenarioName::C => "C",
        })
    }
}

impl FromStr for ScenarioName {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "A" | "a" => Ok(ScenarioName::A),
            "B" | "b" => Ok(ScenarioName::B),
            "C" | "c" => Ok(ScenarioName::C),
            other => Err(invalid(format!("unknown scenario {other:?}"))),
        }
    }
}

/// Every constant needed to build a scenario.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScenarioPreset {
    pub name: ScenarioName,
    pub n_x: usize,
    pub n_z: usize,
    /// Tabulated Fraunhofer distance, meters.
    pub fd: f64,
    pub ue_z_range: (f64, f64),
    pub d_range: (f64, f64),
    pub az_range: (f64, f64),
    pub bs_position: [f64; 3],
    pub carrier_freq: f64,
    pub speed_of_light: f64,
    pub q_count: usize,
    pub sub_bw: f64,
    pub sub_spacing: f64,
    pub total_bw: f64,
    pub j1: usize,
    pub j2: usize,
    pub nf_grid: (usize, usize, usize),
    pub noise_figure_db: f64,
    pub noise_density_dbm_hz: f64,
    pub tx_power_dbm: f64,
}

impl ScenarioPreset {
    pub fn new(name: ScenarioName) -> Self {
        let (n_x, n_z, fd, z, d) = match name {
            ScenarioName::A => (24, 24, 7.2, (1.0, 1.5), (1.0, 30.0)),
            ScenarioName::B => (16, 16, 3.2, (1.0, 1.5), (1.0, 15.0)),
            ScenarioName::C => (16, 8, 3.2, (1.0, 2.0), (1.0, 15.0)),
        };
        Self {
            name,
            n_x,
            n_z,
            fd,
            ue_z_range: z,
            d_range: d,
            az_range: (-FRAC_PI_4, FRAC_PI_4),
            bs_position: [0.0, 0.0, 2.0],
            carrier_freq: 24e9,
            speed_of_light: ROUNDED_SPEED_OF_LIGHT,
            q_count: 12,
            sub_bw: 15e3,
            sub_spacing: 750e3,
            total_bw: 8.265e6,
            j1: 21,
            j2: 84,
            nf_grid: (4, 21, 1),
            noise_figure_db: 10.0,
            noise_density_dbm_hz: -174.0,
            tx_power_dbm: 20.0,
        }
    }

    pub fn spacing(&self) -> f64 {
        self.speed_of_light / self.carrier_freq / 2.0
    }

    pub fn build<T: Real>(&self) -> Result<Scenario<T>> {
        Scenario::from_preset(self)
    }
}

/// Geometry, numerology, books and search settings for one preset.
#[derive(Debug, Clone)]
pub struct Scenario<T> {
    pub preset: ScenarioPreset,
    pub geom: ArrayGeometry<T>,
    pub grid: OfdmGrid<T>,
    pub region: Region<T>,
    pub ff_book: BeamBook<T>,
    pub nf_book: BeamBook<T>,
    pub search: SearchConfig<T>,
    pub tx_power: f64,
    pub noise_var: f64,
}

impl<T: Real> Scenario<T> {
    pub fn from_preset(p: &ScenarioPreset) -> Result<Self> {
        let l = T::lit;
        let origin = Point3::from_array(p.bs_position.map(l));
        let geom = ArrayGeometry::new(
            p.n_x,
            p.n_z,
            l(p.spacing()),
            origin,
            l(p.carrier_freq),
            l(p.speed_of_light),
        )?;
        let grid = OfdmGrid::new(
            p.q_count,
            l(p.sub_bw),
            l(p.sub_spacing),
            l(p.carrier_freq),
            l(p.speed_of_light),
        )?;
        let region = Region::new(
            l(p.d_range.0),
            l(p.d_range.1),
            l(p.az_range.0),
            l(p.az_range.1),
            l(p.ue_z_range.0),
            l(p.ue_z_range.1),
        )?;
        let ff_book = design_ff_beambook(&geom, &region, p.j1, ColumnNorm::Unit)?;
        let (nr, na, ne) = p.nf_grid;
        let nf_book = design_nf_beambook(&geom, &region, nr, na, ne, ColumnNorm::Unit)?;
        if nf_book.beam_count() != p.j2 {
            return Err(invalid(format!(
                "near-field grid {nr}x{na}x{ne} does not give {} beams",
                p.j2
            )));
        }
        let search = SearchConfig::for_region(&region, origin.z);
        Ok(Self {
            preset: p.clone(),
            noise_var: noise_variance(&grid, p.noise_figure_db, p.noise_density_dbm_hz),
            tx_power: dbm_to_watts(p.tx_power_dbm),
            geom,
            grid,
            region,
            ff_book,
            nf_book,
            search,
        })
    }

    pub fn origin(&self) -> Point3<T> {
        self.geom.origin()
    }

    pub fn book(&self, scheme: Scheme) -> &BeamBook<T> {
        match scheme {
            Scheme::Ff => &self.ff_book,
            Scheme::Nf => &self.nf_book,
        }
    }

    /// Replaces the near-field book with a `n_range x n_az x n_el` grid.
    pub fn with_nf_grid(mut self, n_range: usize, n_az: usize, n_el: usize) -> Result<Self> {
        self.nf_book = design_nf_beambook(
            &self.geom,
            &self.region,
            n_range,
            n_az,
            n_el,
            ColumnNorm::Unit,
        )?;
        self.preset.nf_grid = (n_range, n_az, n_el);
        self.preset.j2 = self.nf_book.beam_count();
        Ok(self)
    }

    /// Replaces the far-field book with `j1` beams.
    pub fn with_ff_beams(mut self, j1: usize) -> Result<Self> {
        self.ff_book = design_ff_beambook(&self.geom, &self.region, j1, ColumnNorm::Unit)?;
        self.preset.j1 = j1;
        Ok(self)
    }

    /// Random UE at range `d`: azimuth uniform over the region span and
    /// height uniform over the UE heights reachable at that range.
    pub fn sample_ue<R: Rng + ?Sized>(&self, d: f64, rng: &mut R) -> Result<Point3<T>> {
        let (az_lo, az_hi) = self.preset.az_range;
        let oz = self.preset.bs_position[2];
        // keep clear of the point straight below or above the array
        let reach = d * crate::geometry::MAX_ELEVATION.sin();
        let z_lo = self.preset.ue_z_range.0.max(oz - reach);
        let z_hi = self.preset.ue_z_range.1.min(oz + reach);
        if z_lo > z_hi {
            return Err(invalid(format!("no UE height is reachable at range {d} m")));
        }
        let az = rng.random_range(az_lo..=az_hi);
        let z = if z_hi > z_lo {
            rng.random_range(z_lo..=z_hi)
        } else {
            z_lo
        };
        let dz = z - oz;
        let r2 = d * d - dz * dz;
        let r = r2.sqrt();
        let o = self.preset.bs_position;
        Ok(Point3::new(
            T::lit(o[0] + r * az.sin()),
            T::lit(o[1] + r * az.cos()),
            T::lit(z),
        ))
    }

    /// True spherical channel at `truth`, received through `scheme`'s book
    /// and localized with the matching estimator. `seed` drives the phase
    /// offset and the noise.
    pub fn estimate(
        &self,
        scheme: Scheme,
        truth: Point3<T>,
        seed: u64,
    ) -> Result<PositionEstimate<T>> {
        self.estimate_with(scheme, truth, seed, &self.search)
    }

    pub fn estimate_with(
        &self,
        scheme: Scheme,
        truth: Point3<T>,
        seed: u64,
        search: &SearchConfig<T>,
    ) -> Result<PositionEstimate<T>> {
        let mut rng = trial_rng(seed);
        let phase = T::lit(rng.random_range(0.0..TAU));
        let h = nf_channel(&self.geom, &self.grid, truth, phase)?;
        let book = self.book(scheme);
        let y = simulate_rx_with(&h, book, self.tx_power, self.noise_var, &mut rng)?;
        match scheme {
            Scheme::Ff => localize_ff(&y, book, search, &self.geom, &self.grid),
            Scheme::Nf => localize_nf(&y, book, search, &self.geom, &self.grid),
        }
    }

    /// Literal-evaluation copy of the search settings.
    pub fn literal_search(&self) -> SearchConfig<T> {
        self.search.clone().with_evaluation(Evaluation::Literal)
    }
}

/// [`Localizer`] running the full simulated pipeline, with per-step seeds.
pub struct SimLocalizer<'a, T> {
    scenario: &'a Scenario<T>,
    seed: u64,
    runs: [usize; 2],
}

impl<'a, T: Real> SimLocalizer<'a, T> {
    pub fn new(scenario: &'a Scenario<T>, seed: u64) -> Self {
        Self {
            scenario,
            seed,
            runs: [0; 2],
        }
    }

    /// `(far-field runs, near-field runs)` so far.
    pub fn runs(&self) -> (usize, usize) {
        (self.runs[0], self.runs[1])
    }
}

impl<T: Real> Localizer<T> for SimLocalizer<'_, T> {
    fn localize(&mut self, scheme: Scheme, truth: Point3<T>, step: usize) -> Result<Point3<T>> {
        self.runs[usize::from(scheme.index() - 1)] += 1;
        // both schemes at one step see the same channel realization
        let seed = derive_seed(self.seed, 0x74_7261_636b, step as u64);
        Ok(self.scenario.estimate(scheme, truth, seed)?.position)
    }
}
