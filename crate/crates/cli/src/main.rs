//! Batch interface for chaos-expansion densities.
//!
//! Exit codes are a stable contract: 0 success, 1 validation or hypothesis
//! failure (bad config, density check, theorem preconditions), 2 numeric or
//! check failure (truncation budget, failed verification suite).

mod config;
mod manifest;

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use wickstd::chaos::{ChaosExpansion, GaussianSpace};
use wickstd::error::ErrorClass;
use wickstd::quadrature::QuadratureGrid;
use wickstd::standardize::{
    center_density, example_density, example_quartic, max_admissible_norm, standardize,
    DensityExpansion, StandardizeOptions,
};
use wickstd::tensor::CmVector;
use wickstd::verify::{cf_of_expansion, run_suites, Suite, SuiteOptions};

use config::{ExpansionConfig, Metadata};
use manifest::RunManifest;

#[derive(Parser)]
#[command(
    name = "wickstd",
    version,
    about = "Wick-calculus toolbox: standardize and verify densities with respect to the \
             standard Gaussian measure"
)]
struct Cli {
    /// Seed for every randomized procedure (suites, sampling).
    #[arg(long, global = true, env = "WICKSTD_SEED", default_value_t = 0)]
    seed: u64,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Print dimension, orders, mass, mean, covariance, and the density
    /// check status of a config.
    Inspect { config: PathBuf },
    /// Wick-multiply by the linear exponential that sets the mean to zero.
    Center {
        config: PathBuf,
        #[arg(short, long)]
        output: PathBuf,
        #[arg(long, default_value_t = wickstd::wick::DEFAULT_MAX_ORDER)]
        max_order: usize,
    },
    /// Full standardization: center, then fix the covariance to the identity.
    Standardize {
        config: PathBuf,
        #[arg(short, long)]
        output: PathBuf,
        #[arg(long, default_value_t = wickstd::wick::DEFAULT_MAX_ORDER)]
        max_order: usize,
        /// Cap on the recovered deficiency direction norm.
        #[arg(long)]
        norm_cap: Option<f64>,
        /// Structure tolerance for the theorem hypotheses.
        #[arg(long)]
        tol: Option<f64>,
    },
    /// Run verification suites against a config; streams one JSON record
    /// per check to stdout.
    Verify {
        config: PathBuf,
        /// Comma-separated: all, cf-centering, cf-covariance, s-transform,
        /// lp-boundary, mixture, sampling.
        #[arg(long, default_value = "all", value_delimiter = ',')]
        suite: Vec<String>,
        #[arg(long)]
        grid_order: Option<usize>,
        #[arg(long, default_value_t = 100_000)]
        samples: usize,
        /// Also write the report to a file.
        #[arg(long)]
        report: Option<PathBuf>,
        /// Tabulate the characteristic functional along the first axis
        /// (columns: |phi|, re, im) for external plotting.
        #[arg(long)]
        plot_cf: Option<PathBuf>,
    },
    /// Write the worked example density config for a given |g|.
    Example {
        #[arg(long)]
        g_norm: f64,
        /// Direction of g as comma-separated components (any scale).
        #[arg(long, default_value = "1,0")]
        direction: String,
        #[arg(short, long)]
        output: PathBuf,
        /// Tabulate the quartic profile (columns: t, value) for external
        /// plotting.
        #[arg(long)]
        plot_quartic: Option<PathBuf>,
    },
}

enum CliError {
    /// Bad input, failed density check, or violated theorem hypothesis.
    Validation(String),
    /// Numeric failure: truncation budget, envelope, failed checks.
    Numeric(String),
}

impl CliError {
    fn exit_code(&self) -> u8 {
        match self {
            CliError::Validation(_) => 1,
            CliError::Numeric(_) => 2,
        }
    }

    fn message(&self) -> &str {
        match self {
            CliError::Validation(m) | CliError::Numeric(m) => m,
        }
    }
}

impl From<wickstd::Error> for CliError {
    fn from(e: wickstd::Error) -> Self {
        match e.class() {
            ErrorClass::Validation => CliError::Validation(e.to_string()),
            ErrorClass::Numeric => CliError::Numeric(e.to_string()),
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {}", e.message());
            ExitCode::from(e.exit_code())
        }
    }
}

fn read_config(path: &Path) -> Result<(ExpansionConfig, Vec<u8>), CliError> {
    let bytes = fs::read(path)
        .map_err(|e| CliError::Validation(format!("cannot read {}: {e}", path.display())))?;
    let text = String::from_utf8_lossy(&bytes);
    let config = ExpansionConfig::parse(&text).map_err(CliError::Validation)?;
    Ok((config, bytes))
}

fn write_file(path: &Path, contents: &str) -> Result<(), CliError> {
    fs::write(path, contents)
        .map_err(|e| CliError::Validation(format!("cannot write {}: {e}", path.display())))
}

fn manifest_path(output: &Path) -> PathBuf {
    let mut name = output.file_name().unwrap_or_default().to_os_string();
    name.push(".manifest.json");
    output.with_file_name(name)
}

fn validated_density(
    body: ChaosExpansion,
    grid: &QuadratureGrid,
    opts: &StandardizeOptions,
) -> Result<DensityExpansion, CliError> {
    DensityExpansion::validated(body, grid, opts).map_err(CliError::from)
}

fn default_grid(dimension: usize, order: Option<usize>) -> Result<QuadratureGrid, CliError> {
    match order {
        Some(order) => QuadratureGrid::new(dimension, order).map_err(CliError::from),
        None => QuadratureGrid::with_default_order(dimension).map_err(CliError::from),
    }
}

fn format_vector(v: &CmVector) -> String {
    let parts: Vec<String> = v.components().iter().map(|x| format!("{x}")).collect();
    format!("[{}]", parts.join(", "))
}

fn run(cli: Cli) -> Result<(), CliError> {
    let seed = cli.seed;
    match cli.command {
        Command::Inspect { config } => cmd_inspect(&config),
        Command::Center {
            config,
            output,
            max_order,
        } => cmd_center(&config, &output, max_order, seed),
        Command::Standardize {
            config,
            output,
            max_order,
            norm_cap,
            tol,
        } => cmd_standardize(&config, &output, max_order, norm_cap, tol, seed),
        Command::Verify {
            config,
            suite,
            grid_order,
            samples,
            report,
            plot_cf,
        } => cmd_verify(&config, &suite, grid_order, samples, report, plot_cf, seed),
        Command::Example {
            g_norm,
            direction,
            output,
            plot_quartic,
        } => cmd_example(g_norm, &direction, &output, plot_quartic, seed),
    }
}

fn cmd_inspect(path: &Path) -> Result<(), CliError> {
    let (config, _) = read_config(path)?;
    let body = config.to_expansion().map_err(CliError::Validation)?;
    let opts = StandardizeOptions::default();
    let grid = default_grid(body.dimension(), None)?;

    if let Some(meta) = &config.metadata {
        if let Some(name) = &meta.name {
            println!("name: {name}");
        }
    }
    println!("dimension: {}", body.dimension());
    println!("max order: {}", body.trimmed().max_order());
    let present: Vec<String> = body
        .trimmed()
        .kernels()
        .iter()
        .enumerate()
        .filter(|(_, k)| !k.is_zero(0.0))
        .map(|(i, _)| i.to_string())
        .collect();
    println!(
        "orders present: {}",
        if present.is_empty() {
            "none".into()
        } else {
            present.join(", ")
        }
    );
    println!("mass: {}", body.expectation());

    let density = validated_density(body, &grid, &opts)?;
    println!("mean kernel: {}", format_vector(&density.mean()));
    let cov = density.covariance();
    println!(
        "covariance ({}):",
        if cov.is_central() {
            "central"
        } else {
            "raw second-moment form"
        }
    );
    for i in 0..cov.dimension() {
        let row: Vec<String> = (0..cov.dimension())
            .map(|j| format!("{:+.6}", cov.entry(i, j)))
            .collect();
        println!("  [{}]", row.join(", "));
    }
    println!("density check: PASS");
    Ok(())
}

fn cmd_center(path: &Path, output: &Path, max_order: usize, seed: u64) -> Result<(), CliError> {
    let (config, bytes) = read_config(path)?;
    let body = config.to_expansion().map_err(CliError::Validation)?;
    let opts = StandardizeOptions::default();
    let grid = default_grid(body.dimension(), None)?;
    let density = validated_density(body, &grid, &opts)?;
    let centered = center_density(&density, max_order, &grid, &opts)?;

    let meta = Metadata {
        name: config.metadata.as_ref().and_then(|m| m.name.clone()),
        description: Some("centered density (mean set to zero)".into()),
    };
    let out_config = ExpansionConfig::from_expansion(centered.body(), Some(meta));
    write_file(output, &out_config.to_json())?;
    let manifest = RunManifest::new("center", &bytes, seed, &opts, max_order);
    write_file(&manifest_path(output), &manifest.to_json())?;
    println!("mean removed: {}", format_vector(&density.mean()));
    println!("truncation tail: {:.3e}", centered.truncation_tail());
    println!("wrote {}", output.display());
    Ok(())
}

fn cmd_standardize(
    path: &Path,
    output: &Path,
    max_order: usize,
    norm_cap: Option<f64>,
    tol: Option<f64>,
    seed: u64,
) -> Result<(), CliError> {
    let (config, bytes) = read_config(path)?;
    let body = config.to_expansion().map_err(CliError::Validation)?;
    let mut opts = StandardizeOptions::default();
    if let Some(cap) = norm_cap {
        opts.norm_cap = cap;
    }
    if let Some(tol) = tol {
        opts.structure_tol = tol;
    }
    let grid = default_grid(body.dimension(), None)?;
    let density = validated_density(body, &grid, &opts)?;
    let (standardized, m, g) = standardize(&density, max_order, &grid, &opts)?;

    let meta = Metadata {
        name: config.metadata.as_ref().and_then(|m| m.name.clone()),
        description: Some("standardized density (mean zero, identity covariance)".into()),
    };
    let out_config = ExpansionConfig::from_expansion(standardized.body(), Some(meta));
    write_file(output, &out_config.to_json())?;
    let manifest = RunManifest::new("standardize", &bytes, seed, &opts, max_order);
    write_file(&manifest_path(output), &manifest.to_json())?;
    println!("m: {}", format_vector(&m));
    println!("g: {}", format_vector(&g));
    println!("truncation tail: {:.3e}", standardized.truncation_tail());
    println!("wrote {}", output.display());
    Ok(())
}

fn cmd_verify(
    path: &Path,
    suite_names: &[String],
    grid_order: Option<usize>,
    samples: usize,
    report_path: Option<PathBuf>,
    plot_cf: Option<PathBuf>,
    seed: u64,
) -> Result<(), CliError> {
    let (config, _) = read_config(path)?;
    let body = config.to_expansion().map_err(CliError::Validation)?;
    let std_opts = StandardizeOptions::default();
    let dimension = body.dimension();
    let default_order = if dimension <= 3 { 24 } else { 12 };
    let space = GaussianSpace::with_config(
        dimension,
        grid_order.unwrap_or(default_order),
        samples,
        seed,
    )
    .map_err(CliError::from)?;
    let grid = space.grid().map_err(CliError::from)?;
    let density = validated_density(body, &grid, &std_opts)?;

    let suites: Vec<Suite> = if suite_names.iter().any(|s| s == "all") {
        Suite::ALL.to_vec()
    } else {
        suite_names
            .iter()
            .map(|name| Suite::parse(name).map_err(CliError::from))
            .collect::<Result<_, _>>()?
    };

    let opts = SuiteOptions::from_space(&space);
    let report = run_suites(&density, &suites, &opts)?;

    let jsonl = report.to_jsonl();
    print!("{jsonl}");
    if let Some(report_path) = report_path {
        write_file(&report_path, &jsonl)?;
    }
    if let Some(plot_path) = plot_cf {
        let mut table = String::from("phi_norm\tre\tim\n");
        let e1 = CmVector::basis(density.dimension(), 1).map_err(CliError::from)?;
        let mut s = 0.0f64;
        while s <= 3.0 + 1e-12 {
            let value =
                cf_of_expansion(density.body(), &e1.scale(s), &grid).map_err(CliError::from)?;
            table.push_str(&format!("{s:.2}\t{}\t{}\n", value.re, value.im));
            s += 0.05;
        }
        write_file(&plot_path, &table)?;
    }

    let (passed, total) = (
        report.checks.iter().filter(|c| c.pass).count(),
        report.len(),
    );
    eprintln!("{passed}/{total} checks passed");
    if report.all_pass() {
        Ok(())
    } else {
        Err(CliError::Numeric(format!(
            "{} checks failed",
            total - passed
        )))
    }
}

fn cmd_example(
    g_norm: f64,
    direction: &str,
    output: &Path,
    plot_quartic: Option<PathBuf>,
    seed: u64,
) -> Result<(), CliError> {
    let components: Result<Vec<f64>, _> = direction
        .split(',')
        .map(|part| part.trim().parse::<f64>())
        .collect();
    let components =
        components.map_err(|e| CliError::Validation(format!("bad --direction: {e}")))?;
    let raw = CmVector::new(components).map_err(CliError::from)?;
    if raw.norm() == 0.0 {
        return Err(CliError::Validation("--direction must be nonzero".into()));
    }
    let g = raw.scale(g_norm / raw.norm());
    let opts = StandardizeOptions::default();
    let grid = default_grid(g.dimension(), None)?;
    // names the threshold c* in the error message when |g| is too large
    let density = example_density(&g, &grid, &opts)?;

    let meta = Metadata {
        name: Some("example-density".into()),
        description: Some(format!(
            "quartic example density with |g| = {g_norm} along {}",
            format_vector(&g)
        )),
    };
    let out_config = ExpansionConfig::from_expansion(density.body(), Some(meta));
    write_file(output, &out_config.to_json())?;
    let manifest = RunManifest::new(
        "example",
        format!("g_norm={g_norm};direction={direction}").as_bytes(),
        seed,
        &opts,
        density.body().max_order(),
    );
    write_file(&manifest_path(output), &manifest.to_json())?;

    if let Some(plot_path) = plot_quartic {
        let mut table = String::from("t\tvalue\n");
        let mut t = -4.0f64;
        while t <= 4.0 + 1e-12 {
            table.push_str(&format!("{t:.2}\t{}\n", example_quartic(g_norm, t)));
            t += 0.01;
        }
        write_file(&plot_path, &table)?;
    }
    println!(
        "wrote {} (|g| = {g_norm}, admissible below c* = {:.6})",
        output.display(),
        max_admissible_norm()
    );
    Ok(())
}
