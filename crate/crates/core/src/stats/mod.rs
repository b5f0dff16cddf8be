//! Monte Carlo statistics over walks and replica ensembles.

pub mod axis;
pub mod cdf;
pub mod drift;
pub mod ensemble;
pub mod exit;
pub mod ks;
pub mod martingale;
pub mod msd;
pub mod output;
pub mod paths;
pub mod reduce;
pub mod zeros;

pub use axis::{axis_occupation_error, predicted_axis_exponent, uniform_axis_second_moment, AxisReport};
pub use cdf::{normalized_cdf_distance, CdfReport};
pub use drift::{lyapunov_drift_probe, DriftBin, DriftOptions, DriftReport};
pub use ensemble::{run_replicas, try_run_replicas, ReplicaEnsemble};
pub use exit::{exit_time, exit_time_ensemble, exit_time_streamed, ExitObservation, ExitReport, EXIT_CAP};
pub use ks::{ks_one_sample, ks_two_sample, ks_two_sample_threshold, std_normal_cdf};
pub use martingale::{martingale_residuals, GammaCase, MartingaleWeights, ResidualReport, ResidualRow};
pub use msd::{msd_empirical, msd_exact, MsdPoint, MsdReport};
pub use output::{StatCurve, Verdict};
pub use paths::{
    direction_series, lil_band, lil_ratio, log_norm_exponent, log_norm_exponent_ensemble, rate_of_escape_check,
    DirectionResult, EscapeResult, ExponentReport, LilBand, LilResult,
};
pub use reduce::{column, log_checkpoints, ls_slope, median, tree_sum, MeanSe};
pub use zeros::{count_zeros, count_zeros_streamed, srw_expected_zeros, zero_counts, ZeroReport};
