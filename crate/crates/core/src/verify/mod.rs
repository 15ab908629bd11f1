//! Numerical verification: integration against mu, characteristic
//! functionals, density sampling, and the check suites for the
//! standardization laws.

pub mod checks;
pub mod report;
pub mod sampling;
pub mod suites;

pub use crate::quadrature::{integrate_mu, integrate_mu1, QuadratureGrid};
pub use checks::{
    cf_of_expansion, characteristic_functional, check_centering_cf, check_covariance_cf,
    check_lp_boundary, check_lp_boundary_for_norm, check_mixture, check_s_transform,
    classify_refinement, lp_boundary_estimates, TailBehavior, LP_REFINEMENT_ORDERS,
};
pub use report::{CheckRecord, VerificationReport};
pub use sampling::{
    empirical_cf, empirical_covariance, empirical_mean, kolmogorov_pvalue,
    ks_statistic_normal_marginal, sample_density, simulate_standardized, standard_normal_cdf,
    SampleBatch, SampleConfig,
};
pub use suites::{run_suite, run_suites, Suite, SuiteOptions};
