//! Group movable antenna (GMA) receiver: an `M`-element half-wavelength
//! array that slides along one axis while `N` RF chains select a uniform
//! sparse subset of every `eta`-th element. The crate models the resulting
//! multipath channels, evaluates MRC/MMSE combining, and jointly optimizes
//! the array position `y` and sparsity `eta`, together with the fixed-array,
//! independently-movable-antenna and exhaustive-search baselines.

pub mod array;
pub mod baselines;
pub mod combining;
pub mod error;
pub mod experiment;
pub mod grid;
pub mod landscape;
pub mod multiuser;
pub mod sca;
pub mod scenario;
pub mod solution;

pub use array::{channel_vector, max_sparsity, steering, ArrayConfig, ChannelVector, Path, PathSet, Spacing};
pub use baselines::{exhaustive_oracle, fpa_metric, ma_optimize, MaLayout, MaOutcome, OracleResult};
pub use combining::{objective, sinr, sum_rate, LinkPowers};
pub use error::{GmaError, Result};
pub use grid::GridSpec;
pub use landscape::{landscape, Landscape};
pub use multiuser::{optimize_multiuser, optimize_multiuser_from};
pub use sca::{optimize_single_user, EtaInit, OptimizerSettings};
pub use scenario::{sample_scenario, sample_trial, Scenario, ScenarioParams};
pub use solution::GmaSolution;
