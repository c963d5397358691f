//! Statistics for the Monte Carlo experiments.

mod correlation;
mod moments;
mod suite;
mod testing;

pub use correlation::{
    estimate_pair_correlation, estimate_same_tree, multi_point_same_tree, multi_point_same_tree_graph,
    rescaled_correlation, MultiPointEstimate,
};
pub use moments::{EstimateWithError, MomentAccumulator, MAX_MOMENT_ORDER};
pub use suite::{gaussianity_tests, moment_suite, EcfPoint, GaussianityReport, MomentSuite, ECF_GRID, MIN_SUITE_SAMPLES};
pub use testing::{
    chi_square_test, fit_line, kolmogorov_p_value, ks_distance, log_log_slope, weighted_log_log_slope, ChiSquareTest,
    LineFit,
};
