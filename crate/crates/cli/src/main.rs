//! `cscox`: fit, bootstrap, simulate and study modified Cox regression
//! models for data with current status observations.
//!
//! Exit codes: 0 on success, 1 on input errors, 2 when a fit stops short of
//! convergence (results are still written).

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::str::FromStr;

use clap::{Args, Parser, Subcommand};
use cscox_core::bootstrap::MIN_REPLICATES;
use cscox_core::io::fmt17;
use cscox_core::{
    bootstrap, fit, population_oracle, read_dataset, run_study, simulate, write_dataset,
    write_results, BootstrapConfig, Dataset, Error, FitConfig, FitResult, Model, OutputOptions,
    ScenarioSpec, StudyConfig, StudyRow, Truncation, WeightLaw,
};

const THREADS_ENV: &str = "CSCOX_THREADS";

#[derive(Parser)]
#[command(
    name = "cscox",
    version,
    about = "Cox regression with current status observations"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Fit a model and write the result document and tables.
    Fit(FitArgs),
    /// Draw a dataset from a scenario file.
    Simulate(SimulateArgs),
    /// Fit, then add multiplier bootstrap intervals.
    Bootstrap(BootstrapArgs),
    /// Monte Carlo study over a grid of sample sizes.
    McStudy(StudyArgs),
    /// Population quantities of a scenario by numerical integration.
    Oracle(OracleArgs),
}

#[derive(Args)]
struct ModelArgs {
    /// Data file with header `x,a,z1,...,zq`.
    #[arg(long)]
    data: PathBuf,
    /// `right-cs` or `left-cs`.
    #[arg(long)]
    model: Model,
    /// Upper truncation for the right model: `auto` or a value.
    #[arg(long, default_value = "auto")]
    tau: Truncation,
    /// Lower truncation for the left model: `auto` or a value.
    #[arg(long, default_value = "auto")]
    rho: Truncation,
    /// Output directory.
    #[arg(long)]
    out: PathBuf,
    /// Covariate vector for a conditional curve, e.g. "0,1.5"; repeatable.
    #[arg(long = "curve-z")]
    curve_z: Vec<Numbers>,
    /// Seed of the random starting points of the optimizer.
    #[arg(long = "start-seed", default_value_t = FitConfig::default().seed)]
    start_seed: u64,
    /// Break tied durations by adding `i * step` to the `i`-th one.
    #[arg(long = "tie-jitter")]
    tie_jitter: Option<f64>,
    /// Iteration limit of each optimizer run.
    #[arg(long = "max-iter", default_value_t = FitConfig::default().max_iter)]
    max_iter: usize,
}

#[derive(Args)]
struct FitArgs {
    #[command(flatten)]
    model: ModelArgs,
}

#[derive(Args)]
struct BootstrapArgs {
    #[command(flatten)]
    model: ModelArgs,
    /// Number of bootstrap replicates.
    #[arg(short = 'B', long = "replicates")]
    replicates: usize,
    /// Seed of the multiplier weights.
    #[arg(long)]
    seed: u64,
    /// Multiplier law: exponential, gaussian or unit.
    #[arg(long, default_value = "exponential")]
    weights: WeightLaw,
    /// Nominal level of the percentile intervals.
    #[arg(long, default_value_t = 0.95)]
    level: f64,
}

#[derive(Args)]
struct SimulateArgs {
    /// Scenario file.
    #[arg(long)]
    spec: PathBuf,
    /// Output data file.
    #[arg(long)]
    out: PathBuf,
    /// Overrides the scenario seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Overrides the scenario sample size.
    #[arg(long)]
    n: Option<usize>,
}

#[derive(Args)]
struct StudyArgs {
    /// Scenario file; its seed drives every replicate.
    #[arg(long)]
    spec: PathBuf,
    /// Datasets per sample size.
    #[arg(long)]
    reps: usize,
    /// Sample sizes, e.g. "200,500,2000".
    #[arg(long = "grid-n")]
    grid_n: Sizes,
    /// Output directory for `summary.csv` and `summary.json`.
    #[arg(long)]
    out: PathBuf,
    /// Upper truncation for the right model: `auto` or a value.
    #[arg(long, default_value = "auto")]
    tau: Truncation,
    /// Lower truncation for the left model: `auto` or a value.
    #[arg(long, default_value = "auto")]
    rho: Truncation,
    /// Bootstrap replicates per dataset; 0 skips coverage.
    #[arg(short = 'B', long = "replicates", default_value_t = 0)]
    replicates: usize,
    /// Multiplier law: exponential, gaussian or unit.
    #[arg(long, default_value = "exponential")]
    weights: WeightLaw,
    /// Nominal level of the percentile intervals.
    #[arg(long, default_value_t = 0.95)]
    level: f64,
}

#[derive(Args)]
struct OracleArgs {
    /// Scenario file.
    #[arg(long)]
    spec: PathBuf,
    /// Time points, e.g. "0.5,1,2".
    #[arg(long)]
    t: Numbers,
    /// Covariate vector for the conditional curve.
    #[arg(long)]
    z: Numbers,
    /// Output file; the table goes to stdout when absent.
    #[arg(long)]
    out: Option<PathBuf>,
}

/// Comma-separated finite numbers.
#[derive(Clone, Debug)]
struct Numbers(Vec<f64>);

impl FromStr for Numbers {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        s.split(',')
            .map(|v| {
                let v = v.trim();
                v.parse::<f64>()
                    .ok()
                    .filter(|x| x.is_finite())
                    .ok_or_else(|| format!("`{v}` is not a finite number"))
            })
            .collect::<Result<_, _>>()
            .map(Numbers)
    }
}

/// Comma-separated positive sample sizes.
#[derive(Clone, Debug)]
struct Sizes(Vec<usize>);

impl FromStr for Sizes {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        s.split(',')
            .map(|v| {
                let v = v.trim();
                v.parse::<usize>()
                    .ok()
                    .filter(|&n| n > 0)
                    .ok_or_else(|| format!("`{v}` is not a positive sample size"))
            })
            .collect::<Result<_, _>>()
            .map(Sizes)
    }
}

fn curve_vectors(args: &ModelArgs) -> Vec<Vec<f64>> {
    args.curve_z.iter().map(|z| z.0.clone()).collect()
}

/// Outcome of a command that ran to completion.
enum Done {
    Ok,
    NotConverged,
}

fn fit_config(args: &ModelArgs) -> FitConfig {
    FitConfig {
        tau: args.tau,
        rho: args.rho,
        seed: args.start_seed,
        tie_jitter: args.tie_jitter,
        max_iter: args.max_iter,
        ..FitConfig::default()
    }
}

fn load(args: &ModelArgs) -> Result<Dataset, Error> {
    let data = read_dataset(&args.data, args.model)?;
    if let Some(z) = args.curve_z.iter().find(|z| z.0.len() != data.q()) {
        return Err(Error::InvalidArgument(format!(
            "--curve-z has {} entries, {} has {} covariates",
            z.0.len(),
            args.data.display(),
            data.q()
        )));
    }
    Ok(data)
}

fn report(f: &FitResult, out: &Path) {
    let beta: Vec<String> = f.theta_hat.beta.iter().map(|&b| fmt17(b)).collect();
    println!("p_hat\t{}", fmt17(f.theta_hat.p));
    println!("beta_hat\t{}", beta.join("\t"));
    println!("truncation\t{}", fmt17(f.truncation));
    println!("converged\t{}", f.converged);
    println!("results\t{}", out.display());
}

fn outcome_of(f: &FitResult) -> Done {
    if f.has_nonconvergence() {
        Done::NotConverged
    } else {
        Done::Ok
    }
}

fn cmd_fit(args: &FitArgs) -> Result<Done, Error> {
    let data = load(&args.model)?;
    let f = fit(&data, &fit_config(&args.model))?;
    let options = OutputOptions {
        curve_z: curve_vectors(&args.model),
        ..OutputOptions::default()
    };
    write_results(&args.model.out, &data, &f, None, &options)?;
    report(&f, &args.model.out);
    Ok(outcome_of(&f))
}

fn cmd_bootstrap(args: &BootstrapArgs) -> Result<Done, Error> {
    if args.replicates < MIN_REPLICATES {
        return Err(Error::InvalidArgument(format!(
            "-B {} is below the minimum of {MIN_REPLICATES} replicates",
            args.replicates
        )));
    }
    if !(args.level > 0.0 && args.level < 1.0) {
        return Err(Error::InvalidArgument(format!(
            "--level {} outside (0, 1)",
            args.level
        )));
    }
    let data = load(&args.model)?;
    let config = fit_config(&args.model);
    let f = fit(&data, &config)?;
    let boot = BootstrapConfig {
        replicates: args.replicates,
        seed: args.seed,
        weight_law: args.weights,
        curve_z: curve_vectors(&args.model),
    };
    let draws = bootstrap(&data, &f, &config, &boot)?;
    let options = OutputOptions {
        curve_z: curve_vectors(&args.model),
        level: args.level,
    };
    write_results(&args.model.out, &data, &f, Some(&draws), &options)?;
    report(&f, &args.model.out);
    Ok(outcome_of(&f))
}

fn cmd_simulate(args: &SimulateArgs) -> Result<Done, Error> {
    let mut spec = ScenarioSpec::from_path(&args.spec)?;
    if let Some(seed) = args.seed {
        spec.seed = seed;
    }
    if let Some(n) = args.n {
        spec.n = n;
    }
    let data = simulate(&spec)?;
    write_dataset(&args.out, &data)?;
    println!("wrote {} records to {}", data.n(), args.out.display());
    Ok(Done::Ok)
}

fn summary_header(q: usize, with_boot: bool) -> Vec<String> {
    let mut h: Vec<String> = ["n", "reps", "failed", "mean_p", "bias_p", "sd_p"]
        .iter()
        .map(|s| s.to_string())
        .collect();
    h.extend((1..=q).map(|j| format!("bias_beta{j}")));
    h.extend((1..=q).map(|j| format!("sd_beta{j}")));
    h.extend(
        [
            "mean_beta_error",
            "mean_sup_hazard_error",
            "mean_curve_at_truncation",
        ]
        .iter()
        .map(|s| s.to_string()),
    );
    if with_boot {
        h.extend((1..=q).map(|j| format!("coverage_beta{j}")));
        h.extend((1..=q).map(|j| format!("bootstrap_sd_beta{j}")));
    }
    h
}

fn summary_row(r: &StudyRow) -> Vec<String> {
    let mut row = vec![r.n.to_string(), r.reps.to_string(), r.failed.to_string()];
    let numbers = [r.mean_p, r.bias_p, r.sd_p]
        .into_iter()
        .chain(r.bias_beta.iter().copied())
        .chain(r.sd_beta.iter().copied())
        .chain([
            r.mean_beta_error,
            r.mean_sup_hazard_error,
            r.mean_curve_at_truncation,
        ])
        .chain(r.coverage.iter().copied())
        .chain(r.mean_bootstrap_sd.iter().copied());
    row.extend(numbers.map(fmt17));
    row
}

fn csv_error(path: &Path, e: impl std::fmt::Display) -> Error {
    Error::Io {
        path: path.display().to_string(),
        message: e.to_string(),
    }
}

fn cmd_study(args: &StudyArgs) -> Result<Done, Error> {
    if args.reps == 0 {
        return Err(Error::InvalidArgument("--reps must be positive".into()));
    }
    if args.replicates > 0 && args.replicates < MIN_REPLICATES {
        return Err(Error::InvalidArgument(format!(
            "-B {} is below the minimum of {MIN_REPLICATES} replicates",
            args.replicates
        )));
    }
    let spec = ScenarioSpec::from_path(&args.spec)?;
    let config = StudyConfig {
        reps: args.reps,
        grid_n: args.grid_n.0.clone(),
        fit: FitConfig {
            tau: args.tau,
            rho: args.rho,
            ..FitConfig::default()
        },
        bootstrap_replicates: args.replicates,
        weight_law: args.weights,
        level: args.level,
    };
    let rows = run_study(&spec, &config)?;
    fs::create_dir_all(&args.out).map_err(|e| csv_error(&args.out, e))?;

    let path = args.out.join("summary.csv");
    let mut w = csv::Writer::from_path(&path).map_err(|e| csv_error(&path, e))?;
    w.write_record(summary_header(spec.q(), args.replicates > 0))
        .map_err(|e| csv_error(&path, e))?;
    for r in &rows {
        w.write_record(summary_row(r))
            .map_err(|e| csv_error(&path, e))?;
    }
    w.flush().map_err(|e| csv_error(&path, e))?;

    let path = args.out.join("summary.json");
    let json = serde_json::to_string_pretty(&rows).map_err(|e| csv_error(&path, e))?;
    fs::write(&path, json + "\n").map_err(|e| csv_error(&path, e))?;
    println!("wrote {} rows to {}", rows.len(), args.out.display());
    Ok(Done::Ok)
}

fn cmd_oracle(args: &OracleArgs) -> Result<Done, Error> {
    let spec = ScenarioSpec::from_path(&args.spec)?;
    if args.z.0.len() != spec.q() {
        return Err(Error::InvalidArgument(format!(
            "--z has {} entries, the scenario has {} covariates",
            args.z.0.len(),
            spec.q()
        )));
    }
    let mut table =
        String::from("t,baseline_cumulative,represented_cumulative,conditional,risk,h0,h1,h2\n");
    for &t in &args.t.0 {
        let p = population_oracle(&spec, t, &args.z.0)?;
        let fields = [
            p.t,
            p.baseline_cumulative,
            p.represented_cumulative,
            p.conditional,
            p.risk,
            p.masses[0],
            p.masses[1],
            p.masses[2],
        ];
        let line: Vec<String> = fields.into_iter().map(fmt17).collect();
        table.push_str(&line.join(","));
        table.push('\n');
    }
    match &args.out {
        Some(path) => fs::write(path, table).map_err(|e| csv_error(path, e))?,
        None => std::io::stdout()
            .write_all(table.as_bytes())
            .map_err(|e| csv_error(Path::new("<stdout>"), e))?,
    }
    Ok(Done::Ok)
}

fn configure_threads() -> Result<(), Error> {
    let Ok(value) = std::env::var(THREADS_ENV) else {
        return Ok(());
    };
    let threads: usize = value
        .trim()
        .parse()
        .ok()
        .filter(|&n| n > 0)
        .ok_or_else(|| {
            Error::InvalidArgument(format!("{THREADS_ENV}={value} is not a positive integer"))
        })?;
    rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build_global()
        .map_err(|e| Error::InvalidArgument(format!("thread pool: {e}")))
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn"))
        .format_timestamp(None)
        .init();
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            // usage errors are input errors; help and version are not
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    let result = configure_threads().and_then(|()| match &cli.command {
        Command::Fit(a) => cmd_fit(a),
        Command::Simulate(a) => cmd_simulate(a),
        Command::Bootstrap(a) => cmd_bootstrap(a),
        Command::McStudy(a) => cmd_study(a),
        Command::Oracle(a) => cmd_oracle(a),
    });
    match result {
        Ok(Done::Ok) => ExitCode::SUCCESS,
        Ok(Done::NotConverged) => {
            eprintln!("warning: the optimizer did not converge; results were written");
            ExitCode::from(2)
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(1)
        }
    }
}
