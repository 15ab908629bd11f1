//! Named verification suites driven by the CLI: each runs a family of
//! identity checks against a density and returns a structured report.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::chaos::ChaosExpansion;
use crate::error::{Error, Result};
use crate::quadrature::QuadratureGrid;
use crate::standardize::{
    extract_deficiency_direction, identity_covariance_density, DensityExpansion, StandardizeOptions,
};
use crate::tensor::{CmVector, SymmetricTensor};
use crate::verify::checks::{
    characteristic_functional, check_centering_cf, check_covariance_cf, check_lp_boundary_for_norm,
    check_mixture, check_s_transform, LP_REFINEMENT_ORDERS,
};
use crate::verify::report::{CheckRecord, VerificationReport};
use crate::verify::sampling::{
    empirical_cf, empirical_covariance, empirical_mean, kolmogorov_pvalue,
    ks_statistic_normal_marginal, sample_density, simulate_standardized, SampleConfig,
};

/// The verification suites.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Suite {
    CfCentering,
    CfCovariance,
    STransform,
    LpBoundary,
    Mixture,
    Sampling,
}

impl Suite {
    pub const ALL: [Suite; 6] = [
        Suite::CfCentering,
        Suite::CfCovariance,
        Suite::STransform,
        Suite::LpBoundary,
        Suite::Mixture,
        Suite::Sampling,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Suite::CfCentering => "cf-centering",
            Suite::CfCovariance => "cf-covariance",
            Suite::STransform => "s-transform",
            Suite::LpBoundary => "lp-boundary",
            Suite::Mixture => "mixture",
            Suite::Sampling => "sampling",
        }
    }

    pub fn parse(name: &str) -> Result<Suite> {
        Suite::ALL
            .iter()
            .copied()
            .find(|s| s.name() == name)
            .ok_or_else(|| Error::InvalidParameter {
                name: "suite",
                reason: format!(
                    "unknown suite {name:?}; expected one of {}",
                    Suite::ALL.map(|s| s.name()).join(", ")
                ),
            })
    }
}

/// Knobs shared by every suite run.
#[derive(Debug, Clone)]
pub struct SuiteOptions {
    pub seed: u64,
    /// Per-axis grid order; defaults to the dimension-appropriate order.
    pub grid_order: Option<usize>,
    /// Monte Carlo batch size for the sampling suite.
    pub samples: usize,
    /// Kernel-order cap for transforms taken inside suites.
    pub max_order: usize,
    /// Tolerance for characteristic-functional identities.
    pub cf_tol: f64,
    /// Tolerance for algebra-vs-quadrature agreements.
    pub quad_tol: f64,
    /// Relative tolerance for the S-transform factorization.
    pub factor_tol: f64,
    /// Tolerance for mixture-vs-closed-form agreement.
    pub mixture_tol: f64,
    /// Sigma multiplier for Monte Carlo assertions (keeps the false-failure
    /// probability of a full run below 1e-3).
    pub mc_sigmas: f64,
    pub standardize: StandardizeOptions,
}

impl SuiteOptions {
    pub fn new(seed: u64) -> Self {
        SuiteOptions {
            seed,
            grid_order: None,
            samples: 100_000,
            max_order: crate::wick::DEFAULT_MAX_ORDER,
            cf_tol: 1e-6,
            quad_tol: 1e-8,
            factor_tol: 1e-10,
            mixture_tol: 1e-8,
            mc_sigmas: 5.0,
            standardize: StandardizeOptions::default(),
        }
    }

    /// Takes seed, grid order, and batch size from a Gaussian-space config.
    pub fn from_space(space: &crate::chaos::GaussianSpace) -> Self {
        let mut opts = SuiteOptions::new(space.seed());
        opts.grid_order = Some(space.quad_order());
        opts.samples = space.sample_count();
        opts
    }
}

fn suite_rng(opts: &SuiteOptions, suite: Suite) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
    // suite-specific streams, far away from the sampler's per-point streams
    rng.set_stream(u64::MAX - suite as u64);
    rng
}

fn grid_for(f: &DensityExpansion, opts: &SuiteOptions) -> Result<QuadratureGrid> {
    match opts.grid_order {
        Some(order) => QuadratureGrid::new(f.dimension(), order),
        None => QuadratureGrid::with_default_order(f.dimension()),
    }
}

fn random_vectors(rng: &mut ChaCha8Rng, d: usize, count: usize, max_norm: f64) -> Vec<CmVector> {
    (0..count)
        .map(|_| loop {
            let raw: Vec<f64> = (0..d).map(|_| rng.gen_range(-1.0..1.0)).collect();
            let norm_sq: f64 = raw.iter().map(|x| x * x).sum();
            if norm_sq < 1e-4 {
                continue;
            }
            let target = rng.gen_range(0.2 * max_norm..max_norm);
            let scale = target / norm_sq.sqrt();
            return CmVector::new(raw.into_iter().map(|x| x * scale).collect())
                .expect("finite components");
        })
        .collect()
}

fn random_points(rng: &mut ChaCha8Rng, d: usize, count: usize, half_width: f64) -> Vec<Vec<f64>> {
    (0..count)
        .map(|_| {
            (0..d)
                .map(|_| rng.gen_range(-half_width..half_width))
                .collect()
        })
        .collect()
}

/// Runs one suite against a validated density.
pub fn run_suite(
    f: &DensityExpansion,
    suite: Suite,
    opts: &SuiteOptions,
) -> Result<VerificationReport> {
    if !f.is_validated() {
        return Err(Error::NotValidated);
    }
    let d = f.dimension();
    let mut rng = suite_rng(opts, suite);
    match suite {
        Suite::CfCentering => {
            let grid = grid_for(f, opts)?;
            let phis = random_vectors(&mut rng, d, 10, 2.0);
            check_centering_cf(
                f,
                &phis,
                &grid,
                opts.max_order,
                &opts.standardize,
                opts.cf_tol,
            )
        }
        Suite::CfCovariance => {
            let grid = grid_for(f, opts)?;
            let centered = require_centered(f)?;
            let g = extract_deficiency_direction(&centered, opts.standardize.structure_tol)?;
            let phis = random_vectors(&mut rng, d, 10, 2.0);
            check_covariance_cf(
                &centered,
                &g,
                &phis,
                &grid,
                opts.max_order,
                &opts.standardize,
                opts.cf_tol,
            )
        }
        Suite::STransform => {
            let grid = grid_for(f, opts)?;
            let probes: Vec<(CmVector, ChaosExpansion)> = random_vectors(&mut rng, d, 5, 1.0)
                .into_iter()
                .map(|h| {
                    let probe = random_probe_expansion(&mut rng, d);
                    (h, probe)
                })
                .collect();
            check_s_transform(f, &probes, &grid, opts.quad_tol, opts.factor_tol)
        }
        Suite::LpBoundary => {
            let mut report = VerificationReport::new();
            for &p in &[1.5f64, 2.0, 3.0] {
                for &factor in &[0.8f64, 1.2] {
                    let norm_sq = factor / (p - 1.0);
                    report.extend(check_lp_boundary_for_norm(
                        norm_sq,
                        p,
                        &LP_REFINEMENT_ORDERS,
                    )?);
                }
            }
            Ok(report)
        }
        Suite::Mixture => {
            let grid = grid_for(f, opts)?;
            let centered = require_centered(f)?;
            let g = extract_deficiency_direction(&centered, opts.standardize.structure_tol)?;
            let points = random_points(&mut rng, d, 5, 2.5);
            check_mixture(
                &centered,
                &g,
                &points,
                opts.max_order,
                &grid,
                &opts.standardize,
                opts.mixture_tol,
            )
        }
        Suite::Sampling => run_sampling_suite(f, opts, &mut rng),
    }
}

/// Runs several suites, concatenating reports.
pub fn run_suites(
    f: &DensityExpansion,
    suites: &[Suite],
    opts: &SuiteOptions,
) -> Result<VerificationReport> {
    let mut report = VerificationReport::new();
    for &suite in suites {
        report.extend(run_suite(f, suite, opts)?);
    }
    Ok(report)
}

/// Suites that exercise the covariance transform need a centered density;
/// a nonzero mean is a hypothesis failure, reported as such.
fn require_centered(f: &DensityExpansion) -> Result<DensityExpansion> {
    let mean_norm = f.mean().norm();
    if mean_norm > 1e-9 {
        return Err(Error::MeanNotZero {
            norm: mean_norm,
            tol: 1e-9,
        });
    }
    Ok(f.clone())
}

fn random_probe_expansion(rng: &mut ChaCha8Rng, d: usize) -> ChaosExpansion {
    let mut kernels = vec![SymmetricTensor::scalar(d, rng.gen_range(0.5..1.5))];
    for order in 1..=2usize {
        let direction: Vec<f64> = (0..d).map(|_| rng.gen_range(-0.7..0.7)).collect();
        let h = CmVector::new(direction).expect("finite components");
        kernels.push(SymmetricTensor::rank_one_power(&h, order).scale(rng.gen_range(-0.5..0.5)));
    }
    ChaosExpansion::new(d, kernels).expect("well-formed kernels")
}

/// Model covariance from the kernels: second-moment form minus the mean
/// outer product, valid for any validated density.
fn model_covariance(f: &DensityExpansion) -> Vec<Vec<f64>> {
    let d = f.dimension();
    let second = f.covariance();
    let m = f.mean();
    let mut cov = vec![vec![0.0; d]; d];
    for (i, row) in cov.iter_mut().enumerate() {
        for (j, slot) in row.iter_mut().enumerate() {
            *slot = second.entry(i, j) - m.components()[i] * m.components()[j];
        }
    }
    cov
}

fn run_sampling_suite(
    f: &DensityExpansion,
    opts: &SuiteOptions,
    rng: &mut ChaCha8Rng,
) -> Result<VerificationReport> {
    let d = f.dimension();
    let n = opts.samples;
    let mut report = VerificationReport::new();
    let config = SampleConfig::new(opts.seed, n);
    let batch = sample_density(f, &config)?;
    report.push(CheckRecord::assertion(
        format!("sampling/acceptance-rate={:.4}", batch.acceptance_rate),
        batch.acceptance_rate > 0.0,
    ));

    let sqrt_n = (n as f64).sqrt();
    let mean = empirical_mean(&batch);
    let model_mean = f.mean();
    for i in 0..d {
        report.push(CheckRecord::within(
            format!("sampling/mean/axis{i}"),
            4.0 / sqrt_n,
            (mean.components()[i] - model_mean.components()[i]).abs(),
        ));
    }
    let cov = empirical_covariance(&batch);
    let model_cov = model_covariance(f);
    for (i, row) in cov.iter().enumerate() {
        for (j, &value) in row.iter().enumerate().skip(i) {
            report.push(CheckRecord::within(
                format!("sampling/covariance/{i}{j}"),
                6.0 / sqrt_n,
                (value - model_cov[i][j]).abs(),
            ));
        }
    }

    // against mu itself the marginals are standard normal
    if f.body().trimmed().max_order() == 0 {
        for axis in 0..d {
            let statistic = ks_statistic_normal_marginal(&batch, axis);
            let p = kolmogorov_pvalue(statistic, n);
            report.push(CheckRecord::assertion(
                format!("sampling/ks-marginal/axis{axis}/p={p:.4}"),
                p > 0.01,
            ));
        }
    }

    // randomization step: X + Zg carries the transformed density
    let centered = require_centered(f)?;
    let g = extract_deficiency_direction(&centered, opts.standardize.structure_tol)?;
    let randomized = simulate_standardized(&centered, &g, &config)?;
    let cov_hat = empirical_covariance(&randomized);
    for (i, row) in cov_hat.iter().enumerate() {
        for (j, &value) in row.iter().enumerate().skip(i) {
            let expected = if i == j { 1.0 } else { 0.0 };
            report.push(CheckRecord::within(
                format!("sampling/standardized-covariance/{i}{j}"),
                6.0 / sqrt_n,
                (value - expected).abs(),
            ));
        }
    }

    let grid = grid_for(f, opts)?;
    let transformed =
        identity_covariance_density(&centered, &g, opts.max_order, &grid, &opts.standardize)?;
    let phis = random_vectors(rng, d, 5, 2.0);
    for (i, phi) in phis.iter().enumerate() {
        let (emp, se_re, se_im) = empirical_cf(&randomized, phi)?;
        let quad = characteristic_functional(&transformed, phi, &grid)?;
        report.push(CheckRecord::within(
            format!("sampling/standardized-cf-re/phi{i}"),
            opts.mc_sigmas * se_re + 1e-9,
            (emp.re - quad.re).abs(),
        ));
        report.push(CheckRecord::within(
            format!("sampling/standardized-cf-im/phi{i}"),
            opts.mc_sigmas * se_im + 1e-9,
            (emp.im - quad.im).abs(),
        ));
    }
    Ok(report)
}
