//! Downlink localization and tracking under mixed near-field / far-field
//! propagation from a wall-mounted planar array.
//!
//! The numeric core is generic over [`Real`] (`f32` or `f64`); the aliases
//! below pin the common `f64` instantiations.

pub mod beambook;
pub mod error;
pub mod estimators;
pub mod geometry;
pub mod linalg;
pub mod metrics;
pub mod ofdm;
pub mod receiver;
pub mod rng;
pub mod scalar;
pub mod scenario;
pub mod tracking;

pub use beambook::{design_ff_beambook, design_nf_beambook, BeamBook, BeamMeta, ColumnNorm};
pub use error::{Error, Result};
pub use estimators::{
    beam_weights, complexity_ratio, line_search_max, localize_ff, localize_nf, Evaluation, OpTally,
    PositionEstimate, SearchConfig,
};
pub use geometry::{
    cartesian_from_spherical, spherical_from_cartesian, ApertureConvention, ArrayGeometry,
    Interval, Region, SphericalPose,
};
pub use linalg::{CMatrix, Point3};
pub use metrics::{compatibility_metric, empirical_cdf, rmse, EmpiricalCdf, MetricSeries};
pub use ofdm::{
    ff_channel, ff_steering, nf_channel, nf_steering, path_gain, subcarrier_phase_vector,
    ChannelMatrix, OfdmGrid, PathGain, Scheme,
};
pub use receiver::{noise_variance, simulate_rx, RxSnapshot};
pub use scalar::Real;
pub use scenario::{Scenario, ScenarioName, ScenarioPreset, SimLocalizer};
pub use tracking::{
    fit_trajectory, run_tracking, switching_distance, track_step, trajectory_error, Localizer,
    Mobility, TrackConfig, TrackLog, TrackMemory, TrackRow, TrackState, TrajectoryModel,
};

pub type ArrayGeometryF64 = ArrayGeometry<f64>;
pub type ArrayGeometryF32 = ArrayGeometry<f32>;
pub type OfdmGridF64 = OfdmGrid<f64>;
pub type OfdmGridF32 = OfdmGrid<f32>;
pub type BeamBookF64 = BeamBook<f64>;
pub type BeamBookF32 = BeamBook<f32>;
pub type RxSnapshotF64 = RxSnapshot<f64>;
pub type RxSnapshotF32 = RxSnapshot<f32>;
pub type ScenarioF64 = Scenario<f64>;
pub type ScenarioF32 = Scenario<f32>;
pub type Point3F64 = Point3<f64>;
pub type Point3F32 = Point3<f32>;
