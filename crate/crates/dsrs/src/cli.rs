//! The `dsrs` command line.
//!
//! Exit codes: 0 on success, 1 on validation or IO errors (including
//! malformed input lines), 2 on numerical failures. Every diagnostic goes to
//! standard error as `error[<tag>]: ...`, `warning[<tag>]: ...` or
//! `info: ...`.

use std::ffi::OsString;
use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::time::Instant;

use clap::{Args, Parser, Subcommand, ValueEnum};
use dsrs_core::confidence::ProbBounds;
use dsrs_core::dsrs::SolverSettings;
use dsrs_core::pipeline::{
    acr, expected_ball_record, rescale_counts, sqrt_d_curve, ablation_k, CertResult, CertifyConfig, CountRecord,
    CurveRow, Method, NoiseConfig, SqrtDConfig,
};
use dsrs_core::synthetic::ball_batch;
use rayon::prelude::*;

use crate::batch::{certify_batch, pool, synth_records, SynthModel};
use crate::config::{parse_list, CommonOptions, ConfigFile, RunConfig};
use crate::counts::{parse_counts, write_counts};
use crate::error::{CliError, CliResult};
use crate::output::{build_table, read_results_csv, write_curve, write_results, write_table, ResultsFormat, TableFormat};

#[derive(Debug, Parser)]
#[command(name = "dsrs", version, about = "Certified L2 robustness radii for randomized-smoothing classifiers")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Certify a JSON-lines count file and write per-example results.
    Certify(CertifyArgs),
    /// Sample counts from a synthetic classifier, then certify them.
    Synth(SynthArgs),
    /// Emit an ablation or dimension-growth curve as CSV.
    Curve(CurveArgs),
    /// Aggregate results files into a certified-accuracy table.
    Table(TableArgs),
}

#[derive(Debug, Clone, Default, Args)]
struct CommonArgs {
    /// Flat `key = value` configuration file; flags take precedence.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Certificates to compute: np, dsrs or both.
    #[arg(long, value_parser = ["np", "dsrs", "both"])]
    mode: Option<String>,
    /// Noise family: standard-gaussian or general-gaussian.
    #[arg(long)]
    kind: Option<String>,
    /// Scale of the smoothing distribution P.
    #[arg(long)]
    sigma_p: Option<f64>,
    /// Scale of the second distribution Q [default: 0.8 * sigma-p].
    #[arg(long)]
    sigma_q: Option<f64>,
    /// Generalized-Gaussian exponent (2k < d).
    #[arg(long)]
    k: Option<u32>,
    /// Input dimension.
    #[arg(long)]
    d: Option<u32>,
    /// Total failure probability of the confidence bounds.
    #[arg(long)]
    alpha: Option<f64>,
    /// Monte Carlo draws per distribution.
    #[arg(long)]
    num_samples: Option<u64>,
    /// Draws used to select the top class.
    #[arg(long)]
    n_selection: Option<u64>,
    /// Radius grid as start:stop:step.
    #[arg(long)]
    grid: Option<String>,
    /// Radius search tolerance.
    #[arg(long)]
    tol: Option<f64>,
    /// Worker threads [default: available cores].
    #[arg(long)]
    workers: Option<usize>,
    /// Base random seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Output path [default: standard output].
    #[arg(long)]
    out: Option<PathBuf>,
    /// Number of synthetic examples.
    #[arg(long)]
    examples: Option<usize>,
}

impl CommonArgs {
    fn options(&self) -> CommonOptions {
        CommonOptions {
            mode: self.mode.clone(),
            kind: self.kind.clone(),
            sigma_p: self.sigma_p,
            sigma_q: self.sigma_q,
            k: self.k,
            d: self.d,
            alpha: self.alpha,
            num_samples: self.num_samples,
            n_selection: self.n_selection,
            grid: self.grid.clone(),
            tol: self.tol,
            workers: self.workers,
            seed: self.seed,
            out: self.out.clone(),
            examples: self.examples,
        }
    }

    fn load(&self) -> CliResult<(ConfigFile, RunConfig)> {
        let file = match &self.config {
            Some(p) => ConfigFile::load(p)?,
            None => ConfigFile::default(),
        };
        let cfg = RunConfig::resolve(&self.options(), &file)?;
        Ok((file, cfg))
    }
}

#[derive(Debug, Args)]
struct CertifyArgs {
    #[command(flatten)]
    common: CommonArgs,
    /// JSON-lines count file.
    #[arg(long)]
    input: Option<PathBuf>,
    /// Results format [default: csv].
    #[arg(long, value_enum)]
    format: Option<ResultsFormat>,
}

#[derive(Debug, Args)]
struct SynthArgs {
    #[command(flatten)]
    common: CommonArgs,
    /// Centered ball classifiers evaluated at their centers (default).
    #[arg(long, conflicts_with = "linear")]
    ball: bool,
    /// Halfspace classifiers.
    #[arg(long)]
    linear: bool,
    /// Also write the sampled counts to this JSON-lines file.
    #[arg(long)]
    counts: Option<PathBuf>,
    /// Results format [default: csv].
    #[arg(long, value_enum)]
    format: Option<ResultsFormat>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum CurveKind {
    /// Radii of exact-probability ball instances against dimension.
    SqrtD,
    /// Radii against the generalized-Gaussian exponent at fixed probabilities.
    K,
    /// ACR against the number of samples.
    N,
    /// ACR against the scale of Q.
    Sigma,
}

#[derive(Debug, Args)]
struct CurveArgs {
    #[arg(value_enum)]
    which: CurveKind,
    #[command(flatten)]
    common: CommonArgs,
    /// Dimensions for sqrt-d [default: 64,256,1024,4096].
    #[arg(long)]
    dims: Option<String>,
    /// Exponents for k [default: 0, d/4, d/2-15, d/2-8, d/2-4].
    #[arg(long)]
    k_values: Option<String>,
    /// Sample sizes for n [default: 50,100,500,1000,5000,10000,20000,50000].
    #[arg(long)]
    n_values: Option<String>,
    /// Q scales for sigma [default: 0.8, 1.0, 1.2 times sigma-p].
    #[arg(long)]
    sigma_q_values: Option<String>,
    /// Lower bound on the top-class probability under P, for k.
    #[arg(long)]
    pa: Option<f64>,
    /// Interval for the top-class probability under Q, for k.
    #[arg(long)]
    qa_low: Option<f64>,
    #[arg(long)]
    qa_high: Option<f64>,
    /// Count file to rescale for n [default: a synthetic ball batch].
    #[arg(long)]
    input: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct TableArgs {
    #[command(flatten)]
    common: CommonArgs,
    /// Results CSV, one per run; repeat for several runs.
    #[arg(long)]
    input: Vec<PathBuf>,
    /// Table format [default: markdown].
    #[arg(long, value_enum)]
    format: Option<TableFormat>,
    /// Label for the setting column, such as the noise scale.
    #[arg(long)]
    setting: Option<String>,
    /// One row per run instead of pooled mean and interval.
    #[arg(long)]
    per_run: bool,
}

fn pick_enum<T: ValueEnum>(cli: Option<T>, file: &ConfigFile, key: &str) -> CliResult<Option<T>> {
    if cli.is_some() {
        return Ok(cli);
    }
    file.raw(key)
        .map(|v| T::from_str(v, true).map_err(|e| CliError::validation(format!("config key {key}: {e}"))))
        .transpose()
}

fn with_output(path: Option<&Path>, f: impl FnOnce(&mut dyn Write) -> io::Result<()>) -> CliResult<()> {
    match path {
        Some(p) => {
            let file = File::create(p).map_err(|e| CliError::io(p, e))?;
            let mut w = BufWriter::new(file);
            f(&mut w).and_then(|_| w.flush()).map_err(|e| CliError::io(p, e))
        }
        None => {
            let stdout = io::stdout();
            let mut lock = stdout.lock();
            f(&mut lock).map_err(|e| CliError::io(Path::new("<stdout>"), e))
        }
    }
}

fn certify_config(cfg: &RunConfig) -> CertifyConfig {
    CertifyConfig { mode: cfg.mode, alpha: cfg.alpha, tol: cfg.tol, settings: SolverSettings::default() }
}

/// Certifies and reports record errors; returns results and the exit code
/// implied by those errors.
fn certify_and_report(records: &[CountRecord], cfg: &RunConfig) -> CliResult<(Vec<CertResult>, i32)> {
    let start = Instant::now();
    let (results, errors) = certify_batch(records, &certify_config(cfg), cfg.workers)?;
    let mut code = 0;
    for e in &errors {
        eprintln!("error[{}]: record {}: {}", e.error.tag(), e.example_id, e.error);
        code = code.max(e.error.exit_code());
    }
    eprintln!(
        "info: certified {} records ({} failed) in {:.2}s",
        records.len() - errors.len(),
        errors.len(),
        start.elapsed().as_secs_f64()
    );
    Ok((results, code))
}

fn run_certify(args: &CertifyArgs) -> CliResult<i32> {
    let (file, cfg) = args.common.load()?;
    let input = file
        .pick(args.input.clone(), "input")?
        .ok_or_else(|| CliError::validation("certify needs --input"))?;
    let format = pick_enum(args.format, &file, "format")?.unwrap_or(ResultsFormat::Csv);
    let mut records = Vec::new();
    let mut code = 0;
    for item in parse_counts(&input)? {
        match item {
            Ok(r) => records.push(r),
            Err(e) => {
                eprintln!("error[parse]: {}:{}: {}", input.display(), e.line, e.message);
                code = 1;
            }
        }
    }
    if records.is_empty() && code == 0 {
        eprintln!("warning[empty-input]: {} contains no records", input.display());
    }
    let (results, cert_code) = certify_and_report(&records, &cfg)?;
    with_output(cfg.out.as_deref(), |w| write_results(w, &results, format))?;
    Ok(code.max(cert_code))
}

fn run_synth(args: &SynthArgs) -> CliResult<i32> {
    let (file, cfg) = args.common.load()?;
    let model = if args.linear { SynthModel::Linear } else { SynthModel::Ball };
    let format = pick_enum(args.format, &file, "format")?.unwrap_or(ResultsFormat::Csv);
    let counts_path = file.pick(args.counts.clone(), "counts")?;
    let records = synth_records(
        model,
        cfg.noise,
        cfg.examples,
        cfg.num_samples,
        cfg.n_selection,
        cfg.seed,
        cfg.workers,
    )?;
    if let Some(p) = &counts_path {
        with_output(Some(p), |w| write_counts(w, &records))?;
    }
    let (results, code) = certify_and_report(&records, &cfg)?;
    with_output(cfg.out.as_deref(), |w| write_results(w, &results, format))?;
    Ok(code)
}

fn acr_row(x: f64, records: &[CountRecord], cfg: &RunConfig) -> CliResult<CurveRow> {
    let both = RunConfig { mode: dsrs_core::pipeline::Mode::Both, ..cfg.clone() };
    let (results, errors) = certify_batch(records, &certify_config(&both), cfg.workers)?;
    if let Some(e) = errors.into_iter().next() {
        return Err(e.error);
    }
    let by = |m: Method| acr(&results.iter().filter(|c| c.method == m).cloned().collect::<Vec<_>>());
    Ok(CurveRow { x, np_value: by(Method::Np), dsrs_value: by(Method::Dsrs) })
}

fn ball_records(noise: NoiseConfig, cfg: &RunConfig) -> CliResult<Vec<CountRecord>> {
    let (p, _) = noise.specs()?;
    ball_batch(&p, cfg.examples)?
        .iter()
        .enumerate()
        .map(|(i, (ball, label))| Ok(expected_ball_record(&format!("ex-{i:05}"), ball, *label, noise, cfg.num_samples)?))
        .collect()
}

fn list_or<T: std::str::FromStr>(cli: &Option<String>, file: &ConfigFile, key: &str, default: Vec<T>) -> CliResult<Vec<T>> {
    match file.pick(cli.clone(), key)? {
        Some(s) => parse_list(&s),
        None => Ok(default),
    }
}

fn run_curve(args: &CurveArgs) -> CliResult<i32> {
    let (file, cfg) = args.common.load()?;
    let noise = cfg.noise;
    let settings = SolverSettings::default();
    let rows: Vec<CurveRow> = match args.which {
        CurveKind::SqrtD => {
            let dims: Vec<u32> = list_or(&args.dims, &file, "dims", vec![64, 256, 1024, 4096])?;
            let sq = SqrtDConfig {
                sigma: noise.sigma_p,
                q_ratio: noise.sigma_q / noise.sigma_p,
                tol: cfg.tol,
                settings,
                ..SqrtDConfig::default()
            };
            let out: CliResult<Vec<Vec<CurveRow>>> = pool(cfg.workers)?
                .install(|| dims.par_iter().map(|&d| Ok(sqrt_d_curve(&[d], &sq)?)).collect());
            out?.into_iter().flatten().collect()
        }
        CurveKind::K => {
            let d = noise.d;
            let half = d.div_ceil(2);
            let mut default: Vec<u32> = [Some(0), Some(d / 4), half.checked_sub(15), half.checked_sub(8), half.checked_sub(4)]
                .into_iter()
                .flatten()
                .filter(|&k| 2 * k < d)
                .collect();
            default.dedup();
            let ks: Vec<u32> = list_or(&args.k_values, &file, "k-values", default)?;
            let bounds = ProbBounds {
                pa_low: file.pick(args.pa, "pa")?.unwrap_or(0.99),
                qa_low: file.pick(args.qa_low, "qa-low")?.unwrap_or(0.999),
                qa_high: file.pick(args.qa_high, "qa-high")?.unwrap_or(1.0),
                alpha: cfg.alpha,
                n: 0,
            };
            let out: CliResult<Vec<Vec<CurveRow>>> = pool(cfg.workers)?.install(|| {
                ks.par_iter()
                    .map(|&k| Ok(ablation_k(d, noise.sigma_p, noise.sigma_q, &[k], &bounds, cfg.tol, settings)?))
                    .collect()
            });
            out?.into_iter().flatten().collect()
        }
        CurveKind::N => {
            let ns: Vec<u64> =
                list_or(&args.n_values, &file, "n-values", vec![50, 100, 500, 1000, 5000, 10_000, 20_000, 50_000])?;
            let base = match file.pick(args.input.clone(), "input")? {
                Some(path) => parse_counts(&path)?
                    .collect::<Result<Vec<_>, _>>()
                    .map_err(|e| CliError::validation(format!("{}:{}: {}", path.display(), e.line, e.message)))?,
                None => ball_records(noise, &cfg)?,
            };
            ns.iter()
                .map(|&n| {
                    let scaled = base.iter().map(|r| rescale_counts(r, n)).collect::<Result<Vec<_>, _>>()?;
                    acr_row(n as f64, &scaled, &cfg)
                })
                .collect::<CliResult<_>>()?
        }
        CurveKind::Sigma => {
            let s = noise.sigma_p;
            let qs: Vec<f64> = list_or(&args.sigma_q_values, &file, "sigma-q-values", vec![0.8 * s, s, 1.2 * s])?;
            qs.iter()
                .map(|&sigma_q| {
                    let records = ball_records(NoiseConfig { sigma_q, ..noise }, &cfg)?;
                    acr_row(sigma_q, &records, &cfg)
                })
                .collect::<CliResult<_>>()?
        }
    };
    with_output(cfg.out.as_deref(), |w| write_curve(w, &rows))?;
    Ok(0)
}

fn run_table(args: &TableArgs) -> CliResult<i32> {
    let (file, cfg) = args.common.load()?;
    let inputs: Vec<PathBuf> = if args.input.is_empty() {
        file.raw("input").map(|s| s.split(',').map(|p| PathBuf::from(p.trim())).collect()).unwrap_or_default()
    } else {
        args.input.clone()
    };
    if inputs.is_empty() {
        return Err(CliError::validation("table needs at least one --input"));
    }
    let format = pick_enum(args.format, &file, "format")?.unwrap_or(TableFormat::Markdown);
    let setting = file
        .pick(args.setting.clone(), "setting")?
        .unwrap_or_else(|| format!("sigma={}", cfg.noise.sigma_p));
    let mut runs = Vec::new();
    for path in &inputs {
        let f = File::open(path).map_err(|e| CliError::io(path, e))?;
        let results = read_results_csv(f).map_err(|e| CliError::validation(format!("{}: {e}", path.display())))?;
        if results.is_empty() {
            eprintln!("warning[empty-input]: {} has no results; its row is all zero", path.display());
        }
        let name = path.file_stem().map_or_else(|| path.display().to_string(), |s| s.to_string_lossy().into_owned());
        runs.push((name, results));
    }
    let rows = build_table(&setting, &runs, &cfg.grid, args.per_run)?;
    with_output(cfg.out.as_deref(), |w| write_table(w, &rows, &cfg.grid, format))?;
    Ok(0)
}

/// Runs the command line on `argv` (program name first) and returns the
/// process exit code.
pub fn cli_main<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(c) => c,
        Err(e) => {
            use clap::error::ErrorKind;
            return match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => {
                    print!("{e}");
                    0
                }
                _ => {
                    let text = e.render().to_string();
                    eprint!("error[validation]: {}", text.trim_start_matches("error: "));
                    1
                }
            };
        }
    };
    let outcome = match &cli.command {
        Command::Certify(a) => run_certify(a),
        Command::Synth(a) => run_synth(a),
        Command::Curve(a) => run_curve(a),
        Command::Table(a) => run_table(a),
    };
    match outcome {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error[{}]: {e}", e.tag());
            e.exit_code()
        }
    }
}
