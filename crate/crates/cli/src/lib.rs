//! Command-line front end: `lqglab <subcommand> [--config PATH] [--seed U64] [--out DIR] ...`.
//!
//! Every subcommand writes into its output directory a `config.json` echo of the
//! resolved configuration plus a `manifest.json` with the sha256 of each file.
//! Errors are reported as a single `error kind=... message="..."` line on stderr.

use std::ffi::OsString;
use std::fs::{self, File};
use std::io::BufWriter;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use lqglab::experiments::trial::{FieldAnalysis, TrialResult};
use lqglab::experiments::{summarize, Experiment, ExperimentSummary, TrialConfig};
use lqglab::geodesics::write_coalescence_csv;
use lqglab::gff::FieldGrid;
use lqglab::gmc::{write_gmc_csv, GmcRow};
use lqglab::io::report::read_flat_csv;
use lqglab::io::{emit_report, parse_config, write_manifest, Format};
use lqglab::metric::distance;
use lqglab::profile::{write_atoms_csv, write_profile_csv};
use lqglab::{Error, Result};

/// Environment variable overriding the worker count.
pub const THREADS_ENV: &str = "LQGLAB_THREADS";
const DEFAULT_OUT: &str = "lqglab-out";

#[derive(Parser)]
#[command(name = "lqglab", version, about = "Monte-Carlo laboratory for boundary LQG metrics", arg_required_else_help = true)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Clone, Debug)]
struct Common {
    /// TOML configuration file; defaults apply to missing keys.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Master seed, overriding the configuration.
    #[arg(long)]
    seed: Option<u64>,
    /// Output directory.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Number of trials, overriding the configuration.
    #[arg(long)]
    trials: Option<usize>,
    /// Summary format.
    #[arg(long)]
    format: Option<Format>,
}

#[derive(Args, Clone, Debug)]
struct FieldArgs {
    #[command(flatten)]
    common: Common,
    /// Field file written by `sample-field`; otherwise the field of `--trial` is sampled.
    #[arg(long)]
    field: Option<PathBuf>,
    /// Trial index whose field is sampled.
    #[arg(long, default_value_t = 0)]
    trial: u64,
}

#[derive(Args, Clone, Debug)]
struct ExperimentArgs {
    #[command(flatten)]
    common: Common,
    /// Also write every per-trial result to `trials.json`.
    #[arg(long)]
    keep_trials: bool,
}

#[derive(Args, Clone, Debug)]
struct ReportArgs {
    /// A `summary.json` or `summary.csv` written by `experiment`.
    #[arg(long)]
    input: PathBuf,
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, default_value = "json")]
    format: Format,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Sample the normalized field of one trial to `field.lqgf`.
    SampleField(FieldArgs),
    /// Geodesic trees from the reference point and the far arc.
    Metric(FieldArgs),
    /// Boundary distance profile from the reference point.
    Profile(FieldArgs),
    /// Boundary GMC masses of the sub-intervals.
    Gmc(FieldArgs),
    /// Atoms of the three variation measures at every level.
    Variation(FieldArgs),
    /// Coalescence records at every level.
    Coalescence(FieldArgs),
    /// Run all trials and write the summary.
    Experiment(ExperimentArgs),
    /// Re-emit an existing summary in another format.
    Report(ReportArgs),
}

/// Parses `argv`, runs the subcommand and maps the outcome to an exit code.
pub fn run_cli<I, T>(argv: I) -> ExitCode
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(e.exit_code() as u8);
        }
    };
    match with_pool(|| dispatch(cli.command)) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("{}", error_line(&e));
            ExitCode::FAILURE
        }
    }
}

/// The one-line diagnostic printed for `e`.
pub fn error_line(e: &Error) -> String {
    let line = match e {
        Error::Config { line, .. } => format!(" line={line}"),
        _ => String::new(),
    };
    format!("error kind={}{line} message={:?}", e.kind(), e.to_string())
}

fn with_pool(f: impl FnOnce() -> Result<()> + Send) -> Result<()> {
    let Ok(raw) = std::env::var(THREADS_ENV) else {
        return f();
    };
    let n: usize = raw
        .trim()
        .parse()
        .ok()
        .filter(|&n| n > 0)
        .ok_or_else(|| Error::InvalidParameter { name: THREADS_ENV.into(), reason: format!("{raw:?} is not a positive integer") })?;
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(n)
        .build()
        .map_err(|e| Error::Numerical(format!("cannot start worker pool: {e}")))?;
    pool.install(f)
}

struct Resolved {
    config: TrialConfig,
    out: PathBuf,
    format: Format,
}

fn resolve(c: &Common) -> Result<Resolved> {
    let run = match &c.config {
        Some(path) => parse_config(&fs::read_to_string(path)?)?,
        None => parse_config("")?,
    };
    let mut config = run.trial;
    if let Some(seed) = c.seed {
        config.master_seed = seed;
    }
    if let Some(t) = c.trials {
        config.trials = t;
    }
    config.validate()?;
    let out = c.out.clone().or(run.output.dir).unwrap_or_else(|| PathBuf::from(DEFAULT_OUT));
    fs::create_dir_all(&out)?;
    fs::write(out.join("config.json"), json(&config)?)?;
    Ok(Resolved { config, out, format: c.format.unwrap_or(run.output.format) })
}

fn json<T: serde::Serialize>(v: &T) -> Result<String> {
    serde_json::to_string_pretty(v).map(|s| s + "\n").map_err(|e| Error::Format(e.to_string()))
}

fn create(path: &Path) -> Result<BufWriter<File>> {
    Ok(BufWriter::new(File::create(path)?))
}

fn load_field(a: &FieldArgs, exp: &Experiment) -> Result<FieldGrid> {
    match &a.field {
        Some(p) => FieldGrid::read_from(std::io::BufReader::new(File::open(p)?)),
        None => exp.field(a.trial),
    }
}

fn dispatch(command: Command) -> Result<()> {
    match command {
        Command::Experiment(a) => experiment(a),
        Command::Report(a) => report(a),
        Command::SampleField(a) => field_command(a, Kind::SampleField),
        Command::Metric(a) => field_command(a, Kind::Metric),
        Command::Profile(a) => field_command(a, Kind::Profile),
        Command::Gmc(a) => field_command(a, Kind::Gmc),
        Command::Variation(a) => field_command(a, Kind::Variation),
        Command::Coalescence(a) => field_command(a, Kind::Coalescence),
    }
}

#[derive(Clone, Copy)]
enum Kind {
    SampleField,
    Metric,
    Profile,
    Gmc,
    Variation,
    Coalescence,
}

fn field_command(a: FieldArgs, kind: Kind) -> Result<()> {
    let r = resolve(&a.common)?;
    let c = &r.config;
    let exp = Experiment::new(c.clone())?;
    let field = load_field(&a, &exp)?;
    if let Kind::SampleField = kind {
        field.write_to(create(&r.out.join("field.lqgf"))?)?;
        write_manifest(&r.out)?;
        return Ok(());
    }
    let seed = field.seed;
    let analysis = FieldAnalysis::new(c, field)?;
    match kind {
        Kind::SampleField => unreachable!("handled above"),
        Kind::Metric => {
            analysis.reference_tree.write_to(create(&r.out.join("tree_reference.lqgt"))?)?;
            analysis.far_tree.write_to(create(&r.out.join("tree_far.lqgt"))?)?;
            let g = &c.grid;
            let ends = [g.boundary_vertex(c.window.lo)?, g.boundary_vertex(c.window.hi)?];
            let info = serde_json::json!({
                "trial": a.trial,
                "seed": seed,
                "vertices": g.len(),
                "reference_to_window_ends": ends.map(|v| distance(&analysis.reference_tree, v)),
                "weyl_residual": analysis.weyl_residual(c)?,
            });
            fs::write(r.out.join("metric.json"), json(&info)?)?;
        }
        Kind::Profile => write_profile_csv(create(&r.out.join("profile.csv"))?, &analysis.profile(c)?)?,
        Kind::Gmc => {
            let rows: Vec<GmcRow> = c
                .sub_intervals()
                .iter()
                .zip(analysis.gmc_masses(c)?)
                .map(|(iv, mass)| GmcRow { trial: a.trial, interval_lo: iv.lo, interval_hi: iv.hi, epsilon: c.epsilon, mass })
                .collect();
            write_gmc_csv(create(&r.out.join("gmc.csv"))?, &rows)?;
        }
        Kind::Variation => {
            let profile = analysis.profile(c)?;
            let levels = c.levels.iter().map(|&n| analysis.level(c, &profile, n).map(|l| l.0)).collect::<Result<Vec<_>>>()?;
            let partial = TrialResult {
                index: a.trial,
                seed,
                levels,
                gmc: vec![],
                busemann_samples: vec![],
                restricted: vec![],
                weyl_residual: 0.0,
                domination_violations: 0,
                identity_checks: 0,
                identity_violations: 0,
                max_identity_error: 0.0,
            };
            write_atoms_csv(create(&r.out.join("atoms.csv"))?, &partial.atom_rows())?;
        }
        Kind::Coalescence => {
            let mut w = create(&r.out.join("coalescence.csv"))?;
            let mut records = Vec::new();
            for &n in &c.levels {
                records.extend(analysis.records(c, n)?);
            }
            write_coalescence_csv(&mut w, a.trial, &records)?;
        }
    }
    write_manifest(&r.out)?;
    Ok(())
}

fn experiment(a: ExperimentArgs) -> Result<()> {
    let r = resolve(&a.common)?;
    let exp = Experiment::new(r.config.clone())?;
    let results = exp.run_all()?;
    if a.keep_trials {
        fs::write(r.out.join("trials.json"), json(&results)?)?;
    }
    let summary = summarize(&r.config, &results)?;
    emit_report(&summary, Format::Json, &r.out)?;
    if r.format != Format::Json {
        emit_report(&summary, r.format, &r.out)?;
    }
    write_manifest(&r.out)?;
    Ok(())
}

fn report(a: ReportArgs) -> Result<()> {
    let text = fs::read(&a.input)?;
    let value = if a.input.extension().is_some_and(|e| e == "csv") {
        read_flat_csv(&text[..])?
    } else {
        serde_json::from_slice(&text).map_err(|e| Error::Format(e.to_string()))?
    };
    let summary: ExperimentSummary = serde_json::from_value(value).map_err(|e| Error::Format(e.to_string()))?;
    let out = a.out.unwrap_or_else(|| a.input.parent().map_or_else(|| PathBuf::from(DEFAULT_OUT), Path::to_path_buf));
    emit_report(&summary, a.format, &out)?;
    write_manifest(&out)?;
    Ok(())
}
