use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::Context;
use clap::{Args, Parser, Subcommand};
use rsklpr::{predict, DataSet, DistanceKernel, ErrorKind, EstimatorConfig, K2Variant, Method};
use rsklpr_bench::io::{parse_bandwidth, parse_list, write_dataset, write_table, QuerySpec};
use rsklpr_bench::suites::{loss_curves_csv, write_outputs, write_text};
use rsklpr_bench::{
    bootstrap_ci, generate_synthetic, BenchConfig, BenchError, Curve, NoiseFamily, NoiseSpec, Suite, SyntheticSpec,
};

#[derive(Parser)]
#[command(
    name = "rsklpr",
    version,
    about = "Robust local polynomial regression and benchmarks"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Draw a synthetic dataset and write it as x1..xd,y CSV.
    Generate(GenerateArgs),
    /// Fit a local regression and write predictions at the queries.
    Fit(FitArgs),
    /// Fit with percentile bootstrap intervals.
    Ci(CiArgs),
    /// Run a benchmark suite and write a JSON report plus a CSV table.
    Bench(BenchArgs),
    /// Write the effective loss curves as residual,sigma,value CSV.
    Losscurve(LossArgs),
}

#[derive(Args)]
struct GenerateArgs {
    #[arg(long, default_value = "sine_hetero")]
    curve: String,
    #[arg(long)]
    n: usize,
    /// gaussian_homo, gaussian_hetero, exponential, lognormal, gamma or weibull.
    #[arg(long, default_value = "gaussian_hetero")]
    noise: String,
    /// Exponential rate, or Weibull scale.
    #[arg(long)]
    lambda: Option<f64>,
    /// Gaussian or log-normal sigma.
    #[arg(long)]
    sigma: Option<f64>,
    #[arg(long)]
    mu: Option<f64>,
    /// Gamma or Weibull shape.
    #[arg(long)]
    shape: Option<f64>,
    /// Gamma scale.
    #[arg(long)]
    scale: Option<f64>,
    /// Heteroscedastic profile: sigma(x) = base + slope * x.
    #[arg(long, default_value_t = 0.1)]
    base: f64,
    #[arg(long, default_value_t = 0.3)]
    slope: f64,
    /// Subtract the analytic noise mean.
    #[arg(long, default_value_t = true, action = clap::ArgAction::Set)]
    center: bool,
    /// Fraction of responses shifted up as gross outliers.
    #[arg(long, default_value_t = 0.0)]
    outliers: f64,
    /// Outlier offset in local noise standard deviations.
    #[arg(long, default_value_t = 5.0)]
    outlier_offset: f64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    out: PathBuf,
    /// Also write the ground truth at each point as x1..xd,truth.
    #[arg(long)]
    truth_out: Option<PathBuf>,
}

#[derive(Args)]
struct EstimatorArgs {
    #[arg(long)]
    data: PathBuf,
    /// rsklpr, lpr or robust_lowess.
    #[arg(long, default_value = "rsklpr")]
    method: String,
    /// Neighborhood size; defaults to max(5, 0.2 T).
    #[arg(long)]
    neighbors: Option<usize>,
    #[arg(long, default_value_t = 1)]
    degree: usize,
    /// conditional, joint or none; defaults to conditional for rsklpr.
    #[arg(long)]
    k2: Option<String>,
    /// Defaults to laplacian, or tricube for robust_lowess.
    #[arg(long)]
    k1: Option<String>,
    /// scott, silverman, fixed:h,.. , cv or cv:m,..
    #[arg(long, default_value = "scott")]
    bandwidth: String,
    /// Robustness passes for robust_lowess.
    #[arg(long, default_value_t = 5)]
    iterations: usize,
    /// grid:G or data.
    #[arg(long, default_value = "grid:100")]
    queries: String,
}

#[derive(Args)]
struct FitArgs {
    #[command(flatten)]
    est: EstimatorArgs,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct CiArgs {
    #[command(flatten)]
    est: EstimatorArgs,
    #[arg(long, default_value_t = 500)]
    replicates: usize,
    #[arg(long, default_value_t = 0.95)]
    level: f64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct BenchArgs {
    #[arg(long)]
    suite: String,
    /// Number of seeds; seeds run from --seed-base upward.
    #[arg(long, default_value_t = 10)]
    seeds: u64,
    #[arg(long, default_value_t = 0)]
    seed_base: u64,
    /// TOML config replacing the bundled defaults.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Worker threads; all cores by default.
    #[arg(long)]
    workers: Option<usize>,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct LossArgs {
    #[arg(long, default_value = "1,2,3")]
    sigmas: String,
    #[arg(long)]
    out: PathBuf,
}

fn usage(msg: impl Into<String>) -> BenchError {
    BenchError::Usage(msg.into())
}

fn noise_family(a: &GenerateArgs) -> Result<NoiseFamily, BenchError> {
    Ok(match a.noise.as_str() {
        "gaussian_homo" => NoiseFamily::GaussianHomo { sigma: a.sigma.unwrap_or(0.25) },
        "gaussian_hetero" => NoiseFamily::GaussianHetero { base: a.base, slope: a.slope },
        "exponential" => NoiseFamily::Exponential { rate: a.lambda.unwrap_or(1.0) },
        "lognormal" => NoiseFamily::LogNormal {
            mu: a.mu.unwrap_or(0.0),
            sigma: a.sigma.unwrap_or(0.5),
        },
        "gamma" => NoiseFamily::Gamma {
            shape: a.shape.unwrap_or(2.0),
            scale: a.scale.unwrap_or(0.5),
        },
        "weibull" => NoiseFamily::Weibull {
            shape: a.shape.unwrap_or(1.5),
            scale: a.lambda.unwrap_or(1.0),
        },
        other => {
            return Err(usage(format!(
                "unknown noise {other:?}; expected gaussian_homo, gaussian_hetero, exponential, lognormal, gamma or weibull"
            )))
        }
    })
}

fn generate(a: GenerateArgs) -> anyhow::Result<()> {
    let curve: Curve = a.curve.parse()?;
    let mut spec = SyntheticSpec::new(curve, a.n, NoiseSpec::new(noise_family(&a)?, a.center), a.seed);
    if a.outliers > 0.0 {
        spec = spec.with_contamination(a.outliers, a.outlier_offset);
    }
    let synth = generate_synthetic(&spec)?;
    write_dataset(&a.out, &synth.data)?;
    if let Some(path) = &a.truth_out {
        write_table(path, synth.data.predictors(), &[("truth", &synth.truth)])?;
    }
    Ok(())
}

fn estimator(a: &EstimatorArgs, data: &DataSet<f64>) -> Result<EstimatorConfig, BenchError> {
    let method: Method = a.method.parse()?;
    let neighbors = a
        .neighbors
        .unwrap_or_else(|| BenchConfig::default().neighbors_for(data.len()));
    let mut cfg = match method {
        Method::Rsklpr => EstimatorConfig::rsklpr(neighbors),
        Method::Lpr => EstimatorConfig::lpr(neighbors),
        Method::RobustLowess => EstimatorConfig::robust_lowess(neighbors, a.iterations),
    };
    if let Some(k2) = &a.k2 {
        cfg = cfg.with_k2(k2.parse::<K2Variant>()?);
    }
    if let Some(k1) = &a.k1 {
        cfg = cfg.with_k1(k1.parse::<DistanceKernel>()?);
    }
    cfg = cfg.with_degree(a.degree).with_bandwidth(parse_bandwidth(&a.bandwidth)?);
    cfg.validate(data.dim())?;
    Ok(cfg)
}

fn load(a: &EstimatorArgs) -> anyhow::Result<(DataSet<f64>, EstimatorConfig, ndarray::Array2<f64>)> {
    let queries: QuerySpec = a.queries.parse()?;
    let data = DataSet::<f64>::load_csv(&a.data)?;
    let cfg = estimator(a, &data)?;
    let q = queries.build(&data);
    Ok((data, cfg, q))
}

fn fit(a: FitArgs) -> anyhow::Result<()> {
    let (data, cfg, q) = load(&a.est)?;
    let y_hat = predict(&cfg, &data, q.view())?;
    write_table(&a.out, q.view(), &[("y_hat", &y_hat)])?;
    Ok(())
}

fn ci(a: CiArgs) -> anyhow::Result<()> {
    let (data, cfg, q) = load(&a.est)?;
    let y_hat = predict(&cfg, &data, q.view())?;
    let ci = bootstrap_ci(&data, &cfg, q.view(), a.replicates, a.level, a.seed)?;
    if ci.skipped > 0 {
        eprintln!(
            "skipped {} of {} bootstrap replicates whose fit failed",
            ci.skipped, ci.replicates
        );
    }
    write_table(
        &a.out,
        q.view(),
        &[("y_hat", &y_hat), ("ci_lo", &ci.lower), ("ci_hi", &ci.upper)],
    )?;
    Ok(())
}

fn bench(a: BenchArgs) -> anyhow::Result<()> {
    let suite: Suite = a.suite.parse()?;
    let cfg = match &a.config {
        Some(path) => BenchConfig::load(path)?,
        None => BenchConfig::default(),
    };
    let seeds: Vec<u64> = (a.seed_base..a.seed_base + a.seeds).collect();
    let output = rsklpr_bench::run_suite(suite, &cfg, &seeds, a.workers)?;
    let companion = write_outputs(&output, &a.out)?;
    eprintln!(
        "{}: {} cells written to {} and {}",
        suite,
        output.report.cells.len(),
        a.out.display(),
        companion.display()
    );
    Ok(())
}

fn losscurve(a: LossArgs) -> anyhow::Result<()> {
    let sigmas = parse_list(&a.sigmas)?;
    let csv = loss_curves_csv(&sigmas, &BenchConfig::default())?;
    write_text(&a.out, &csv).with_context(|| "writing loss curves")?;
    Ok(())
}

fn exit_code(err: &anyhow::Error) -> u8 {
    let kind = err
        .chain()
        .find_map(|e| {
            e.downcast_ref::<BenchError>()
                .map(BenchError::kind)
                .or_else(|| e.downcast_ref::<rsklpr::Error>().map(rsklpr::Error::kind))
        })
        .unwrap_or(ErrorKind::Data);
    match kind {
        ErrorKind::Usage => 1,
        ErrorKind::Data => 2,
        ErrorKind::Numerical => 3,
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() {
                ExitCode::from(1)
            } else {
                ExitCode::SUCCESS
            };
        }
    };
    let result = match cli.command {
        Command::Generate(a) => generate(a),
        Command::Fit(a) => fit(a),
        Command::Ci(a) => ci(a),
        Command::Bench(a) => bench(a),
        Command::Losscurve(a) => losscurve(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(exit_code(&e))
        }
    }
}
