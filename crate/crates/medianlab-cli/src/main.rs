//! Batch front end for the risk laboratory.
//!
//! Subcommands: `rates` (n-ladder sweeps plus a log–log rate fit), `sweep`
//! (one width sweep), `profile` (per-index expectation curve), `crossover`
//! (shrinking-noise ladder), `oracle` (order-statistic one-liners) and
//! `denoise` (file in, file out). All randomness is seeded; identical argv
//! produce byte-identical output files.

use std::fmt::Write as _;
use std::fs;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use medianlab::filters::FilterSpec;
use medianlab::grid::GridSample;
use medianlab::noise::NoiseModel;
use medianlab::phantoms::Phantom;
use medianlab::plot::{line_plot, Series};
use medianlab::risk::{
    bias_profile, crossover_csv, crossover_experiment, profile_csv, rate_csv, rate_fit, risk_csv,
    sweep_h, FilterKind, RiskReport,
};
use medianlab::stats;

#[derive(Parser)]
#[command(
    name = "medianlab",
    about = "Window-filter risk experiments on noisy signals and images",
    version
)]
struct Cli {
    /// Worker threads for Monte Carlo replicates (default: all cores).
    /// Results are identical for every thread count.
    #[arg(long, global = true)]
    threads: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Sweep widths across an n-ladder and fit the log-log rate exponent
    Rates(RatesArgs),
    /// Sweep widths at a single n and write the per-width risk table
    Sweep(SweepArgs),
    /// Estimate the per-index expectation profile of a filter
    Profile(ProfileArgs),
    /// Compare best linear vs best median risk under a noise schedule
    Crossover(CrossoverArgs),
    /// One-line order-statistic oracles
    #[command(subcommand)]
    Oracle(OracleCmd),
    /// Filter a sample file
    Denoise(DenoiseArgs),
}

#[derive(Args)]
struct ExperimentArgs {
    /// Grid dimension: 1 or 2 (must match the phantom)
    #[arg(long)]
    dim: u8,
    /// Filter family: linear | median | two-scale
    #[arg(long)]
    filter: String,
    /// Phantom: step | disc | square | random1d:<seed> | random2d:<seed>
    #[arg(long)]
    phantom: String,
    /// Noise model: gaussian | laplace | cauchy | uniform
    #[arg(long, default_value = "gaussian")]
    model: String,
    /// Noise level (unit variance models, so sigma is the per-sample sd)
    #[arg(long)]
    sigma: f64,
    /// Monte Carlo replicates per width
    #[arg(long)]
    reps: usize,
    /// Experiment seed; replicate t draws from substream (seed, t)
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Echo the resolved configuration as a comment line atop the CSV
    #[arg(long)]
    dump_config: bool,
}

#[derive(Args)]
struct RatesArgs {
    #[command(flatten)]
    common: ExperimentArgs,
    /// Ladder of grid sides, comma separated (at least 3)
    #[arg(long, value_delimiter = ',', required = true)]
    n: Vec<usize>,
    /// Risk table output path
    #[arg(long)]
    out: PathBuf,
    /// Rate-fit output path (default: <out>.rates.csv)
    #[arg(long)]
    rate_out: Option<PathBuf>,
    /// Optional SVG of risk vs width, one line per n
    #[arg(long)]
    svg: Option<PathBuf>,
}

#[derive(Args)]
struct SweepArgs {
    #[command(flatten)]
    common: ExperimentArgs,
    /// Grid side
    #[arg(long)]
    n: usize,
    #[arg(long)]
    out: PathBuf,
    /// Optional SVG of risk vs width
    #[arg(long)]
    svg: Option<PathBuf>,
}

#[derive(Args)]
struct ProfileArgs {
    /// Filter: linear | median | two-scale | chain:<h1,h2,...>
    /// (all widths are continuum fractions of the unit interval)
    #[arg(long)]
    filter: String,
    /// Window radius for linear/median, fraction of the unit interval
    #[arg(long)]
    h: Option<f64>,
    /// Fine (block) width for two-scale, fraction of the unit interval
    #[arg(long)]
    h1: Option<f64>,
    /// Coarse width for two-scale, fraction of the unit interval
    #[arg(long)]
    h2: Option<f64>,
    #[arg(long)]
    phantom: String,
    #[arg(long, default_value = "gaussian")]
    model: String,
    #[arg(long)]
    sigma: f64,
    #[arg(long)]
    n: usize,
    #[arg(long)]
    reps: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    dump_config: bool,
    #[arg(long)]
    out: PathBuf,
    /// Optional SVG of the profile vs index
    #[arg(long)]
    svg: Option<PathBuf>,
}

#[derive(Args)]
struct CrossoverArgs {
    /// Noise schedule: const:<sigma> or pow:<c>,<q> for sigma = c·n^{-q}
    #[arg(long)]
    schedule: String,
    /// Ladder of grid sides, comma separated
    #[arg(long, value_delimiter = ',', required = true)]
    n: Vec<usize>,
    #[arg(long)]
    phantom: String,
    #[arg(long, default_value = "gaussian")]
    model: String,
    #[arg(long)]
    reps: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    dump_config: bool,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Subcommand)]
enum OracleCmd {
    /// Quantile-variance exponent alpha(zeta)
    Alpha {
        /// Tail-decay exponent (> 1; "inf" accepted)
        #[arg(long)]
        zeta: f64,
    },
    /// Near-edge risk factor nu(zeta, sigma)
    Nu {
        #[arg(long)]
        zeta: f64,
        /// Noise level in (0,1)
        #[arg(long)]
        sigma: f64,
    },
    /// Monte Carlo E[Med_m^2]; prints estimate,stderr,reps,seed
    Medmom {
        #[arg(long, default_value = "gaussian")]
        model: String,
        /// Odd sample size
        #[arg(long)]
        m: usize,
        #[arg(long)]
        reps: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// Monte Carlo E[Z_{m,p}^2]; prints estimate,stderr,reps,seed,shape_ratio
    Quantmom {
        #[arg(long, default_value = "gaussian")]
        model: String,
        #[arg(long)]
        m: usize,
        /// Quantile probability in the admissible range
        #[arg(long)]
        p: f64,
        #[arg(long)]
        reps: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// CDF of sqrt(2m+1)·Median of 2m+1 draws at x
    Repcdf {
        #[arg(long, default_value = "gaussian")]
        model: String,
        /// Half-size m (sample size 2m+1)
        #[arg(long)]
        m: usize,
        #[arg(long)]
        x: f64,
    },
    /// Empirical quantile of a sample file
    Quantile {
        /// Sample CSV (dim,n header format)
        #[arg(long = "in")]
        input: PathBuf,
        #[arg(long)]
        p: f64,
    },
}

#[derive(Args)]
struct DenoiseArgs {
    /// Noisy sample CSV (dim,n header format)
    #[arg(long = "in")]
    input: PathBuf,
    /// Filter: linear | median | two-scale | chain:<h1,h2,...>
    /// (all widths are continuum fractions of the unit interval)
    #[arg(long)]
    filter: String,
    /// Window radius for linear/median, fraction of the unit interval
    #[arg(long)]
    h: Option<f64>,
    /// Fine (block) width for two-scale, fraction of the unit interval
    #[arg(long)]
    h1: Option<f64>,
    /// Coarse width for two-scale, fraction of the unit interval
    #[arg(long)]
    h2: Option<f64>,
    /// Output sample CSV path
    #[arg(long)]
    out: PathBuf,
}

enum CliError {
    Config(String),
    Runtime(String),
}

impl From<medianlab::Error> for CliError {
    fn from(e: medianlab::Error) -> Self {
        match e {
            medianlab::Error::Domain(_) | medianlab::Error::Parse(_) => {
                CliError::Config(e.to_string())
            }
            medianlab::Error::Io(_) => CliError::Runtime(e.to_string()),
        }
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Runtime(e.to_string())
    }
}

fn config_err(msg: impl Into<String>) -> CliError {
    CliError::Config(msg.into())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if let Some(threads) = cli.threads {
        if threads == 0 {
            eprintln!("error: --threads must be positive");
            return ExitCode::from(2);
        }
        // ignore failure if a pool already exists (tests, repeated init)
        let _ = rayon::ThreadPoolBuilder::new().num_threads(threads).build_global();
    }
    match run(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(CliError::Config(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
        Err(CliError::Runtime(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(1)
        }
    }
}

fn run(command: Command) -> Result<(), CliError> {
    match command {
        Command::Rates(args) => rates(args),
        Command::Sweep(args) => sweep(args),
        Command::Profile(args) => profile(args),
        Command::Crossover(args) => crossover(args),
        Command::Oracle(cmd) => oracle(cmd),
        Command::Denoise(args) => denoise(args),
    }
}

/// Resolve shared experiment flags into concrete objects, validating every
/// range before any computation starts.
fn resolve(common: &ExperimentArgs) -> Result<(FilterKind, Phantom, NoiseModel), CliError> {
    let kind = FilterKind::from_name(&common.filter)?;
    let phantom = Phantom::from_name(&common.phantom)?;
    let model = NoiseModel::from_name(&common.model)?;
    if phantom.dim().as_u8() != common.dim {
        return Err(config_err(format!(
            "--dim {} does not match phantom '{}' (dimension {})",
            common.dim,
            common.phantom,
            phantom.dim().as_u8()
        )));
    }
    if common.sigma < 0.0 {
        return Err(config_err(format!("--sigma must be nonnegative, got {}", common.sigma)));
    }
    if common.reps < 2 {
        return Err(config_err(format!("--reps must be at least 2, got {}", common.reps)));
    }
    Ok((kind, phantom, model))
}

fn dump_line(enabled: bool, description: &str) -> String {
    if enabled {
        format!("# config: {description}\n")
    } else {
        String::new()
    }
}

fn rates(args: RatesArgs) -> Result<(), CliError> {
    let (kind, phantom, model) = resolve(&args.common)?;
    if args.n.len() < 3 {
        return Err(config_err("--n ladder needs at least 3 sizes for a rate fit"));
    }
    let mut table = String::new();
    let mut points = Vec::new();
    let mut reports: Vec<RiskReport> = Vec::new();
    for &n in &args.n {
        let report = sweep_h(
            kind,
            &phantom,
            model,
            args.common.sigma,
            n,
            args.common.reps,
            args.common.seed,
        )?;
        points.push((n as f64, report.best().mse));
        reports.push(report);
    }
    let fit = rate_fit(&points)?;
    let config = format!(
        "rates --dim {} --filter {} --phantom {} --model {} --sigma {} --n {:?} --reps {} --seed {}",
        args.common.dim,
        kind.name(),
        args.common.phantom,
        model.name(),
        args.common.sigma,
        args.n,
        args.common.reps,
        args.common.seed
    );
    table.push_str(&dump_line(args.common.dump_config, &config));
    for (i, report) in reports.iter().enumerate() {
        let csv = risk_csv("rates", report);
        if i == 0 {
            table.push_str(&csv);
        } else {
            // skip the repeated header
            table.push_str(csv.split_once('\n').map(|x| x.1).unwrap_or(""));
        }
    }
    fs::write(&args.out, table)?;
    let rate_path = args
        .rate_out
        .unwrap_or_else(|| PathBuf::from(format!("{}.rates.csv", args.out.display())));
    let mut rate_table = dump_line(args.common.dump_config, &config);
    rate_table.push_str(&rate_csv("rates", &fit));
    fs::write(&rate_path, rate_table)?;
    if let Some(svg) = &args.svg {
        fs::write(svg, sweep_svg(&reports, kind)?)?;
    }
    println!(
        "rates: filter={} phantom={} slope={:.4} r2={:.4} out={}",
        kind.name(),
        args.common.phantom,
        fit.slope,
        fit.r_squared,
        args.out.display()
    );
    Ok(())
}

fn sweep_svg(reports: &[RiskReport], kind: FilterKind) -> Result<String, CliError> {
    let mut series = Vec::new();
    let mut labels = Vec::new();
    for report in reports {
        labels.push(format!("n={}", report.n));
        // for two-scale, show the best risk per fine width
        let mut points: Vec<(f64, f64)> = Vec::new();
        for rec in &report.records {
            match points.last_mut() {
                Some(last) if last.0 == rec.h1 => {
                    if rec.mse < last.1 {
                        last.1 = rec.mse;
                    }
                }
                _ => points.push((rec.h1, rec.mse)),
            }
        }
        series.push(points);
    }
    let series: Vec<Series<'_>> = labels
        .iter()
        .zip(&series)
        .map(|(label, points)| Series { label, points: points.clone() })
        .collect();
    Ok(line_plot(&format!("{} risk vs width", kind.name()), &series, true, true))
}

fn sweep(args: SweepArgs) -> Result<(), CliError> {
    let (kind, phantom, model) = resolve(&args.common)?;
    let report = sweep_h(
        kind,
        &phantom,
        model,
        args.common.sigma,
        args.n,
        args.common.reps,
        args.common.seed,
    )?;
    let config = format!(
        "sweep --dim {} --filter {} --phantom {} --model {} --sigma {} --n {} --reps {} --seed {}",
        args.common.dim,
        kind.name(),
        args.common.phantom,
        model.name(),
        args.common.sigma,
        args.n,
        args.common.reps,
        args.common.seed
    );
    let mut table = dump_line(args.common.dump_config, &config);
    table.push_str(&risk_csv("sweep", &report));
    fs::write(&args.out, table)?;
    if let Some(svg) = &args.svg {
        fs::write(svg, sweep_svg(std::slice::from_ref(&report), kind)?)?;
    }
    let best = report.best();
    println!(
        "sweep: filter={} n={} argmin h1={}{} min_mse={:.6} out={}",
        kind.name(),
        args.n,
        best.h1,
        best.h2.map(|h| format!(" h2={h}")).unwrap_or_default(),
        best.mse,
        args.out.display()
    );
    Ok(())
}

/// Build a `FilterSpec` from the `--filter` string plus width flags.
fn filter_spec(
    name: &str,
    h: Option<f64>,
    h1: Option<f64>,
    h2: Option<f64>,
) -> Result<FilterSpec, CliError> {
    if let Some(widths) = name.strip_prefix("chain:") {
        let widths: Result<Vec<f64>, _> = widths.split(',').map(|w| w.trim().parse()).collect();
        let widths =
            widths.map_err(|_| config_err(format!("bad width list in '{name}'")))?;
        if widths.iter().any(|&w| !(w > 0.0 && w < 1.0)) {
            return Err(config_err("chain widths must lie in (0,1)"));
        }
        return Ok(FilterSpec::Chain { widths });
    }
    match name {
        "linear" | "median" => {
            let h = h.ok_or_else(|| config_err(format!("--filter {name} requires --h")))?;
            if !(h > 0.0 && h < 1.0) {
                return Err(config_err(format!("--h must lie in (0,1), got {h}")));
            }
            Ok(if name == "linear" { FilterSpec::Linear { h } } else { FilterSpec::Median { h } })
        }
        "two-scale" => {
            let (h1, h2) = match (h1, h2) {
                (Some(a), Some(b)) => (a, b),
                _ => return Err(config_err("--filter two-scale requires --h1 and --h2")),
            };
            if !(h1 > 0.0 && h1 < h2 && h2 < 1.0) {
                return Err(config_err(format!(
                    "two-scale widths must satisfy 0 < h1 < h2 < 1, got ({h1}, {h2})"
                )));
            }
            Ok(FilterSpec::TwoScale { h1, h2 })
        }
        other => Err(config_err(format!(
            "unknown filter '{other}' (expected linear|median|two-scale|chain:<h1,h2,...>)"
        ))),
    }
}

fn profile(args: ProfileArgs) -> Result<(), CliError> {
    let spec = filter_spec(&args.filter, args.h, args.h1, args.h2)?;
    let phantom = Phantom::from_name(&args.phantom)?;
    let model = NoiseModel::from_name(&args.model)?;
    if args.sigma < 0.0 {
        return Err(config_err("--sigma must be nonnegative"));
    }
    let prof = bias_profile(&spec, &phantom, model, args.sigma, args.n, args.reps, args.seed)?;
    let config = format!(
        "profile --filter {} --phantom {} --model {} --sigma {} --n {} --reps {} --seed {}",
        args.filter,
        args.phantom,
        model.name(),
        args.sigma,
        args.n,
        args.reps,
        args.seed
    );
    let mut table = dump_line(args.dump_config, &config);
    table.push_str(&profile_csv(&prof));
    fs::write(&args.out, table)?;
    if let Some(svg) = &args.svg {
        let truth = phantom.sample(args.n)?;
        let series = [
            Series {
                label: "E[T(i)]",
                points: prof
                    .mean
                    .iter()
                    .enumerate()
                    .map(|(i, &v)| ((i + 1) as f64, v))
                    .collect(),
            },
            Series {
                label: "truth",
                points: truth
                    .values()
                    .iter()
                    .enumerate()
                    .map(|(i, &v)| ((i + 1) as f64, v))
                    .collect(),
            },
        ];
        fs::write(svg, line_plot("expectation profile", &series, false, false))?;
    }
    println!(
        "profile: filter={} n={} reps={} out={}",
        args.filter,
        args.n,
        args.reps,
        args.out.display()
    );
    Ok(())
}

fn parse_schedule(text: &str) -> Result<Box<dyn Fn(usize) -> f64>, CliError> {
    if let Some(v) = text.strip_prefix("const:") {
        let sigma: f64 =
            v.parse().map_err(|_| config_err(format!("bad schedule '{text}'")))?;
        if sigma <= 0.0 {
            return Err(config_err("schedule sigma must be positive"));
        }
        return Ok(Box::new(move |_| sigma));
    }
    if let Some(v) = text.strip_prefix("pow:") {
        let parts: Vec<&str> = v.split(',').collect();
        if parts.len() != 2 {
            return Err(config_err(format!(
                "bad schedule '{text}' (expected pow:<c>,<q> for sigma = c·n^-q)"
            )));
        }
        let c: f64 = parts[0]
            .trim()
            .parse()
            .map_err(|_| config_err(format!("bad schedule constant in '{text}'")))?;
        let q: f64 = parts[1]
            .trim()
            .parse()
            .map_err(|_| config_err(format!("bad schedule exponent in '{text}'")))?;
        if c <= 0.0 {
            return Err(config_err("schedule constant must be positive"));
        }
        return Ok(Box::new(move |n| c * (n as f64).powf(-q)));
    }
    Err(config_err(format!(
        "unknown schedule '{text}' (expected const:<sigma> or pow:<c>,<q>)"
    )))
}

fn crossover(args: CrossoverArgs) -> Result<(), CliError> {
    let schedule = parse_schedule(&args.schedule)?;
    let phantom = Phantom::from_name(&args.phantom)?;
    let model = NoiseModel::from_name(&args.model)?;
    let table = crossover_experiment(&args.n, &*schedule, model, &phantom, args.reps, args.seed)?;
    let config = format!(
        "crossover --schedule {} --phantom {} --model {} --n {:?} --reps {} --seed {}",
        args.schedule,
        args.phantom,
        model.name(),
        args.n,
        args.reps,
        args.seed
    );
    let mut out = dump_line(args.dump_config, &config);
    out.push_str(&crossover_csv(&table));
    fs::write(&args.out, out)?;
    let mut summary = String::new();
    for row in &table.rows {
        let _ = write!(summary, " {}:{:.3}", row.n, row.ratio);
    }
    println!(
        "crossover: median/linear ratios{}{} out={}",
        summary,
        if table.schedule_warning { " (warning: sigma·n not increasing)" } else { "" },
        args.out.display()
    );
    Ok(())
}

fn oracle(cmd: OracleCmd) -> Result<(), CliError> {
    match cmd {
        OracleCmd::Alpha { zeta } => {
            println!("{}", stats::alpha_of_zeta(zeta)?);
        }
        OracleCmd::Nu { zeta, sigma } => {
            println!("{}", stats::nu_n(zeta, sigma)?);
        }
        OracleCmd::Medmom { model, m, reps, seed } => {
            let model = NoiseModel::from_name(&model)?;
            let est = stats::median_second_moment_mc(model, m, reps, seed)?;
            println!("{},{},{},{}", est.estimate, est.stderr, est.reps, est.seed);
        }
        OracleCmd::Quantmom { model, m, p, reps, seed } => {
            let model = NoiseModel::from_name(&model)?;
            let est = stats::quantile_second_moment_mc(model, m, p, reps, seed)?;
            println!(
                "{},{},{},{},{}",
                est.mc.estimate, est.mc.stderr, est.mc.reps, est.mc.seed, est.shape_ratio
            );
        }
        OracleCmd::Repcdf { model, m, x } => {
            let model = NoiseModel::from_name(&model)?;
            println!("{}", stats::repeated_median_cdf(model, m, x));
        }
        OracleCmd::Quantile { input, p } => {
            let text = fs::read_to_string(&input)?;
            let sample = GridSample::from_csv_str(&text)?;
            println!("{}", stats::empirical_quantile(sample.values(), p)?);
        }
    }
    Ok(())
}

fn denoise(args: DenoiseArgs) -> Result<(), CliError> {
    let spec = filter_spec(&args.filter, args.h, args.h1, args.h2)?;
    let text = fs::read_to_string(&args.input)?;
    let noisy = GridSample::from_csv_str(&text)?;
    let clean = spec.apply(&noisy)?;
    fs::write(&args.out, clean.to_csv())?;
    println!(
        "denoise: filter={} dim={} n={} out={}",
        args.filter,
        clean.dim().as_u8(),
        clean.n(),
        args.out.display()
    );
    Ok(())
}
