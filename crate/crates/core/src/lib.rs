//! Angle-of-arrival estimation with true-time-delay uniform linear arrays.
//!
//! * [`array`]: frequency-domain signal model and noisy snapshots.
//! * [`fisher`]: kappa weights, their frequency moments, Fisher information
//!   and Cramér-Rao bounds.
//! * [`estimators`]: grid-search ML and smoothed-peak estimators.
//! * [`montecarlo`]: reproducible MSE sweeps and the score-variance check.
//! * [`config`] and [`report`]: run configuration and CSV/manifest output
//!   used by the `ttd-aoa` binary.
//!
//! Angles are radians in the library and degrees in files and on the
//! command line.

pub mod array;
pub mod config;
pub mod error;
pub mod estimators;
pub mod fisher;
pub mod montecarlo;
pub mod report;

pub use array::{ArrayConfig, FrequencyGrid, Observation, SignalSpec};
pub use error::{Error, Result};
pub use estimators::{AngleGrid, EstimateResult, EstimatorKind, MlEstimator, PeakConfig};
pub use fisher::{FisherResult, KappaMoments, Quadrature};
pub use montecarlo::{SweepConfig, SweepReport};
