//! Command-line front end. `run` is the whole program minus process exit,
//! so it can be driven from tests.

use std::ffi::OsString;
use std::fmt::Write as _;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::{json, Value};

use crate::em::{em_fit, EmConfig};
use crate::error::CbError;
use crate::files::{format_estimates, format_observations, parse_estimates, parse_observations};
use crate::model::{cb_pmf, sample, CbParams};
use crate::oracle::{grid_mle, GridSpec};
use crate::plot::{build_quantile_polygon, emit_plot};
use crate::sim::{run_scenario, Scenario, ScenarioReport, INTERVAL_LEVEL};

pub const SCHEMA_VERSION: u32 = 1;

pub const EXIT_OK: i32 = 0;
pub const EXIT_USAGE: i32 = 1;
pub const EXIT_DATA: i32 = 2;
pub const EXIT_NOT_CONVERGED: i32 = 3;

/// Polygon resolution used for emitted plots; includes levels 0.025 and 0.975.
pub const PLOT_RESOLUTION: usize = 41;

#[derive(Parser, Debug)]
#[command(name = "cbem", version, about = "Maximum-likelihood fitting of the correlated binomial distribution CB(n, p, rho)")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Fit (p, rho) to an observation file by EM.
    Fit(FitArgs),
    /// Monte-Carlo bias/RMSE study for one parameter setting.
    Simulate(SimulateArgs),
    /// Print the CB probability mass function.
    Pmf(PmfArgs),
    /// Draw a seeded random sample into an observation file.
    Sample(SampleArgs),
    /// Box-percentile plot of one or more estimates files.
    Plot(PlotArgs),
}

#[derive(ValueEnum, Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Format {
    #[default]
    Text,
    Json,
}

#[derive(Args, Debug, Clone)]
pub struct EmArgs {
    #[arg(long, default_value_t = 0.5)]
    pub start_p: f64,
    #[arg(long, default_value_t = 0.5)]
    pub start_rho: f64,
    #[arg(long, default_value_t = 1000)]
    pub maxits: usize,
    #[arg(long, default_value_t = 1e-15)]
    pub eps: f64,
}

impl EmArgs {
    fn config(&self) -> Result<EmConfig, CbError> {
        EmConfig::new(self.start_p, self.start_rho, self.maxits, self.eps)
    }
}

#[derive(Args, Debug)]
pub struct FitArgs {
    /// Observation file: whitespace-separated integers, `#` comments.
    #[arg(long)]
    pub input: PathBuf,
    /// Number of trials per observation.
    #[arg(long)]
    pub n: u32,
    #[command(flatten)]
    pub em: EmArgs,
    /// Cross-check against the brute-force grid maximizer.
    #[arg(long)]
    pub oracle: bool,
    #[arg(long, value_enum, default_value_t)]
    pub format: Format,
    /// Write the report here instead of stdout.
    #[arg(long)]
    pub output: Option<PathBuf>,
}

#[derive(Args, Debug)]
pub struct SimulateArgs {
    #[arg(long)]
    pub n: u32,
    #[arg(long)]
    pub p: f64,
    #[arg(long)]
    pub rho: f64,
    /// Sample size per replication.
    #[arg(long, default_value_t = 30)]
    pub k: usize,
    #[arg(long, default_value_t = 1000)]
    pub reps: usize,
    /// Master seed; a fresh one is generated and reported when omitted.
    #[arg(long)]
    pub seed: Option<u64>,
    #[command(flatten)]
    pub em: EmArgs,
    /// Directory for estimates files and the box-percentile plot.
    #[arg(long)]
    pub plot: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t)]
    pub format: Format,
    #[arg(long)]
    pub output: Option<PathBuf>,
}

#[derive(Args, Debug)]
pub struct PmfArgs {
    #[arg(long)]
    pub n: u32,
    #[arg(long)]
    pub p: f64,
    #[arg(long)]
    pub rho: f64,
    #[arg(long, value_enum, default_value_t)]
    pub format: Format,
}

#[derive(Args, Debug)]
pub struct SampleArgs {
    #[arg(long)]
    pub n: u32,
    #[arg(long)]
    pub p: f64,
    #[arg(long)]
    pub rho: f64,
    #[arg(long)]
    pub k: usize,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub output: PathBuf,
}

#[derive(Args, Debug)]
pub struct PlotArgs {
    /// Estimates file (one value per line); repeat for several glyphs.
    #[arg(long, required = true)]
    pub input: Vec<PathBuf>,
    /// Output directory for the SVG and CSV files.
    #[arg(long)]
    pub output: PathBuf,
    #[arg(long, default_value_t = PLOT_RESOLUTION)]
    pub resolution: usize,
}

/// A failed command: message plus exit status.
#[derive(Debug)]
pub struct Failure {
    pub status: i32,
    pub message: String,
}

impl Failure {
    fn usage(message: impl Into<String>) -> Self {
        Self {
            status: EXIT_USAGE,
            message: message.into(),
        }
    }

    fn data(message: impl Into<String>) -> Self {
        Self {
            status: EXIT_DATA,
            message: message.into(),
        }
    }
}

fn usage_err(err: CbError) -> Failure {
    Failure::usage(err.to_string())
}

fn data_err(err: CbError) -> Failure {
    Failure::data(err.to_string())
}

fn read_file(path: &Path) -> Result<String, Failure> {
    fs::read_to_string(path).map_err(|e| Failure::data(format!("{}: {e}", path.display())))
}

fn write_file(path: &Path, contents: &str) -> Result<(), Failure> {
    fs::write(path, contents).map_err(|e| Failure::data(format!("{}: {e}", path.display())))
}

/// Output of a successful command.
pub struct Outcome {
    pub status: i32,
    pub stdout: String,
    pub stderr: String,
}

impl Outcome {
    fn ok(stdout: String) -> Self {
        Self {
            status: EXIT_OK,
            stdout,
            stderr: String::new(),
        }
    }
}

fn envelope(command: &str, params: Value, results: Value, seed: Option<u64>) -> Value {
    json!({
        "schema_version": SCHEMA_VERSION,
        "command": command,
        "params": params,
        "results": results,
        "seed": seed,
    })
}

fn to_json(value: &Value) -> String {
    let mut s = serde_json::to_string_pretty(value).expect("json values always serialize");
    s.push('\n');
    s
}

/// Sends a report to `--output` when given, otherwise returns it for stdout.
fn deliver(report: String, output: Option<&Path>) -> Result<String, Failure> {
    match output {
        Some(path) => {
            write_file(path, &report)?;
            Ok(String::new())
        }
        None => Ok(report),
    }
}

fn fresh_seed() -> u64 {
    rand::random()
}

pub fn run_fit(args: &FitArgs) -> Result<Outcome, Failure> {
    let config = args.em.config().map_err(usage_err)?;
    if args.n == 0 {
        return Err(Failure::usage("--n must be at least 1"));
    }
    let text = read_file(&args.input)?;
    let data = parse_observations(&text, args.n)
        .map_err(|e| Failure::data(format!("{}: {e}", args.input.display())))?;
    let fit = em_fit(&data, &config).map_err(data_err)?;
    let oracle = if args.oracle {
        Some(grid_mle(&data, &GridSpec::default()).map_err(data_err)?)
    } else {
        None
    };

    let report = match args.format {
        Format::Json => {
            let mut results = json!({
                "p_hat": fit.p_hat,
                "rho_hat": fit.rho_hat,
                "iterations": fit.iterations,
                "converged": fit.converged(),
                "converged_p": fit.converged_p,
                "converged_rho": fit.converged_rho,
                "log_likelihood": fit.log_likelihood,
                "likelihood": fit.log_likelihood.exp(),
                "oracle": Value::Null,
            });
            if let Some(o) = oracle {
                results["oracle"] = json!({
                    "p": o.p,
                    "rho": o.rho,
                    "log_likelihood": o.log_likelihood,
                    "log_likelihood_gap": fit.log_likelihood - o.log_likelihood,
                });
            }
            let params = json!({
                "input": args.input.display().to_string(),
                "n": args.n,
                "k": data.len(),
                "start_p": config.start_p,
                "start_rho": config.start_rho,
                "maxits": config.max_iterations,
                "eps": config.epsilon,
            });
            to_json(&envelope("fit", params, results, None))
        }
        Format::Text => {
            let mut s = String::new();
            let _ = writeln!(s, "observations    {} (n = {})", data.len(), args.n);
            let _ = writeln!(s, "p_hat           {:.7}", fit.p_hat);
            let _ = writeln!(s, "rho_hat         {:.7}", fit.rho_hat);
            let _ = writeln!(s, "iterations      {}", fit.iterations);
            let _ = writeln!(s, "converged       {} {}", fit.converged_p, fit.converged_rho);
            let _ = writeln!(s, "log_likelihood  {:.5}", fit.log_likelihood);
            let _ = writeln!(s, "likelihood      {:.6e}", fit.log_likelihood.exp());
            if let Some(o) = oracle {
                let _ = writeln!(
                    s,
                    "oracle          p = {:.7}, rho = {:.7}, log_likelihood = {:.5}, gap = {:.3e}",
                    o.p,
                    o.rho,
                    o.log_likelihood,
                    fit.log_likelihood - o.log_likelihood
                );
            }
            s
        }
    };
    let stdout = deliver(report, args.output.as_deref())?;
    let mut outcome = Outcome::ok(stdout);
    if !fit.converged() {
        outcome.status = EXIT_NOT_CONVERGED;
        outcome.stderr = format!(
            "EM stopped at the iteration cap ({}) without converging\n",
            config.max_iterations
        );
    }
    Ok(outcome)
}

fn summary_json(s: &crate::sim::ParameterSummary) -> Value {
    json!({
        "truth": s.truth,
        "bias": s.bias,
        "rmse": s.rmse,
        "interval_low": s.interval_low,
        "interval_high": s.interval_high,
    })
}

fn write_study_plot(report: &ScenarioReport, dir: &Path) -> Result<(), Failure> {
    let io = |e: std::io::Error| Failure::data(format!("{}: {e}", dir.display()));
    fs::create_dir_all(dir).map_err(io)?;
    write_file(&dir.join("p_estimates.txt"), &format_estimates(&report.p.estimates))?;
    write_file(&dir.join("rho_estimates.txt"), &format_estimates(&report.rho.estimates))?;
    let polygons = vec![
        build_quantile_polygon("p", &report.p.estimates, PLOT_RESOLUTION).map_err(data_err)?,
        build_quantile_polygon("rho", &report.rho.estimates, PLOT_RESOLUTION).map_err(data_err)?,
    ];
    emit_plot(&polygons, dir).map_err(io)?;
    Ok(())
}

pub fn run_simulate(args: &SimulateArgs) -> Result<Outcome, Failure> {
    let params = CbParams::new(args.n, args.p, args.rho).map_err(usage_err)?;
    let em_config = args.em.config().map_err(usage_err)?;
    let (seed, generated) = match args.seed {
        Some(seed) => (seed, false),
        None => (fresh_seed(), true),
    };
    let scenario = Scenario {
        params,
        sample_size: args.k,
        replications: args.reps,
        em_config,
        seed,
    };
    scenario.validate().map_err(usage_err)?;
    let report = run_scenario(&scenario).map_err(data_err)?;
    if let Some(dir) = &args.plot {
        write_study_plot(&report, dir)?;
    }

    let text = match args.format {
        Format::Json => {
            let params = json!({
                "n": args.n,
                "p": args.p,
                "rho": args.rho,
                "k": args.k,
                "reps": args.reps,
                "start_p": em_config.start_p,
                "start_rho": em_config.start_rho,
                "maxits": em_config.max_iterations,
                "eps": em_config.epsilon,
                "interval_level": INTERVAL_LEVEL,
            });
            let results = json!({
                "p": summary_json(&report.p),
                "rho": summary_json(&report.rho),
                "degenerate_count": report.degenerate_count,
                "failed_count": report.failed_count,
            });
            to_json(&envelope("simulate", params, results, Some(seed)))
        }
        Format::Text => {
            let mut s = String::new();
            let _ = writeln!(
                s,
                "CB({}, {}, {})  k = {}  N = {}  seed = {}",
                args.n, args.p, args.rho, args.k, args.reps, seed
            );
            let _ = writeln!(
                s,
                "{:<5} {:>14} {:>12} {:>12} {:>12}",
                "param", "bias", "rmse", "2.5%", "97.5%"
            );
            for (name, sm) in [("p", &report.p), ("rho", &report.rho)] {
                let _ = writeln!(
                    s,
                    "{:<5} {:>14.10} {:>12.8} {:>12.7} {:>12.7}",
                    name, sm.bias, sm.rmse, sm.interval_low, sm.interval_high
                );
            }
            let _ = writeln!(
                s,
                "degenerate {}  failed {}",
                report.degenerate_count, report.failed_count
            );
            s
        }
    };
    let stdout = deliver(text, args.output.as_deref())?;
    let mut outcome = Outcome::ok(stdout);
    if generated {
        outcome.stderr = format!("seed: {seed}\n");
    }
    Ok(outcome)
}

pub fn run_pmf(args: &PmfArgs) -> Result<Outcome, Failure> {
    let params = CbParams::new(args.n, args.p, args.rho).map_err(usage_err)?;
    let probs: Vec<f64> = (0..=args.n)
        .map(|y| cb_pmf(y, &params))
        .collect::<Result<_, _>>()
        .map_err(usage_err)?;
    let total: f64 = probs.iter().sum();
    let out = match args.format {
        Format::Json => {
            let params = json!({ "n": args.n, "p": args.p, "rho": args.rho });
            let results = json!({ "pmf": probs, "sum": total });
            to_json(&envelope("pmf", params, results, None))
        }
        Format::Text => {
            let mut s = String::new();
            let _ = writeln!(s, "{:>6}  probability", "y");
            for (y, pr) in probs.iter().enumerate() {
                let _ = writeln!(s, "{y:>6}  {pr:.12}");
            }
            let _ = writeln!(s, "{:>6}  {total:.12}", "sum");
            s
        }
    };
    Ok(Outcome::ok(out))
}

pub fn run_sample(args: &SampleArgs) -> Result<Outcome, Failure> {
    let params = CbParams::new(args.n, args.p, args.rho).map_err(usage_err)?;
    let (seed, generated) = match args.seed {
        Some(seed) => (seed, false),
        None => (fresh_seed(), true),
    };
    let data = sample(&params, args.k, seed).map_err(usage_err)?;
    let header = format!(
        "CB sample n={} p={} rho={} k={} seed={}",
        args.n, args.p, args.rho, args.k, seed
    );
    write_file(&args.output, &format_observations(&data, &header))?;
    let mut outcome = Outcome::ok(format!(
        "wrote {} observations to {}\n",
        data.len(),
        args.output.display()
    ));
    if generated {
        outcome.stderr = format!("seed: {seed}\n");
    }
    Ok(outcome)
}

fn glyph_name(path: &Path) -> String {
    let stem = path
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| "estimates".into());
    stem.strip_suffix("_estimates").map(str::to_owned).unwrap_or(stem)
}

pub fn run_plot(args: &PlotArgs) -> Result<Outcome, Failure> {
    if args.resolution < 3 {
        return Err(Failure::usage("--resolution must be at least 3"));
    }
    let mut polygons = Vec::with_capacity(args.input.len());
    for path in &args.input {
        let values = parse_estimates(&read_file(path)?)
            .map_err(|e| Failure::data(format!("{}: {e}", path.display())))?;
        polygons.push(build_quantile_polygon(&glyph_name(path), &values, args.resolution).map_err(data_err)?);
    }
    let written = emit_plot(&polygons, &args.output)
        .map_err(|e| Failure::data(format!("{}: {e}", args.output.display())))?;
    let mut s = String::new();
    for path in written {
        let _ = writeln!(s, "wrote {}", path.display());
    }
    Ok(Outcome::ok(s))
}

pub fn dispatch(command: &Command) -> Result<Outcome, Failure> {
    match command {
        Command::Fit(a) => run_fit(a),
        Command::Simulate(a) => run_simulate(a),
        Command::Pmf(a) => run_pmf(a),
        Command::Sample(a) => run_sample(a),
        Command::Plot(a) => run_plot(a),
    }
}

/// Parses `args` (program name first), runs the command, writes to the
/// given streams and returns the exit status.
pub fn run<I, T>(args: I, stdout: &mut dyn Write, stderr: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(err) => {
            let status = if err.use_stderr() { EXIT_USAGE } else { EXIT_OK };
            let rendered = err.render().to_string();
            let _ = if err.use_stderr() {
                stderr.write_all(rendered.as_bytes())
            } else {
                stdout.write_all(rendered.as_bytes())
            };
            return status;
        }
    };
    match dispatch(&cli.command) {
        Ok(outcome) => {
            let _ = stdout.write_all(outcome.stdout.as_bytes());
            let _ = stderr.write_all(outcome.stderr.as_bytes());
            outcome.status
        }
        Err(failure) => {
            let _ = writeln!(stderr, "error: {}", failure.message);
            failure.status
        }
    }
}
