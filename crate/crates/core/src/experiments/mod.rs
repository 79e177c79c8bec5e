//! Synthetic experiments: the linear-Gaussian family, sweeps over its grid,
//! bias and rate fitting, and the entropy / mutual-information estimators.

mod info;
mod rates;
mod sweep;
mod synthetic;

pub use info::{
    entropy_estimate, mi_direct, mi_tcpc_estimate, mutual_information_exact, total_correlation_estimate,
    ScalarEstimate,
};
pub use rates::{
    bias_curve, chi2_bias_prediction, fit_log_slope, BiasPoint, Chi2BiasPrediction, RateColumn, RateShape, RateTable,
};
pub use sweep::{run_sweep, truth_for, Estimate, EstimateRecord, SweepConfig, Truth};
pub use synthetic::{make_family, model_at, SyntheticFamily, DEFAULT_EPS};
