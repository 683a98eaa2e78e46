//! Command-line front end.
//!
//! Exit codes: 0 success, 2 a statistical check failed, 3 bad input or a
//! failed precondition, 4 an internal numerical inconsistency.

use std::ffi::OsString;
use std::fs;
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::sync::Arc;
use std::time::{SystemTime, UNIX_EPOCH};

use clap::{Args, Parser, Subcommand, ValueEnum};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::fields::{
    cov_from_table, write_fields_csv, FieldLabel, FieldOnNet, GaussianFieldSampler, Scaling, TangentTable,
};
use crate::geometry::{Point, SpaceSpec};
use crate::harness::{run_clt_experiment, ExperimentConfig, NetSpec};
use crate::measures::{frechet_mean, frechet_mean_with_grid, AtomSampler, DiscreteMeasure, MeanConfig};
use crate::regularity::{dimension_constant, fmt};
use crate::rng::substream;

pub const EXIT_OK: i32 = 0;
pub const EXIT_STATISTICAL: i32 = 2;
pub const EXIT_INPUT: i32 = 3;
pub const EXIT_NUMERICAL: i32 = 4;

#[derive(Debug, Parser)]
#[command(name = "stratclt", version, about = "Fréchet means, tangent fields and CLT checks on stratified spaces")]
pub struct Cli {
    /// Worker threads; 0 picks the number of cores.
    #[arg(long, env = "STRATCLT_THREADS", default_value_t = 0, global = true)]
    pub threads: usize,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Certified Fréchet mean of a measure file.
    Mean(MeanArgs),
    /// Monte Carlo CLT experiment.
    Clt(CltArgs),
    /// Covering numbers of the space of directions at a point.
    Cover(CoverArgs),
    /// Gaussian (and optionally empirical) tangent field draws on a net.
    Field(FieldArgs),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Json,
    Csv,
    Both,
}

impl Format {
    fn json(self) -> bool {
        self != Format::Csv
    }

    fn csv(self) -> bool {
        self != Format::Json
    }
}

#[derive(Debug, Args)]
pub struct MeanArgs {
    /// Measure file.
    #[arg(long)]
    pub config: PathBuf,
    /// Optional solver settings (JSON).
    #[arg(long)]
    pub solver: Option<PathBuf>,
    /// Write `(point, F)` for every certificate grid point.
    #[arg(long)]
    pub grid_csv: Option<PathBuf>,
    /// Also write mean.json and a manifest here.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct CltArgs {
    #[arg(long)]
    pub config: PathBuf,
    #[arg(long)]
    pub seed: u64,
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long, value_enum, default_value_t = Format::Both)]
    pub format: Format,
}

#[derive(Debug, Args)]
pub struct CoverArgs {
    /// Space as JSON, e.g. '{"kind":"spider","legs":3}'.
    #[arg(long)]
    pub space: String,
    /// Comma-separated point coordinates; defaults to the canonical origin.
    #[arg(long, allow_hyphen_values = true)]
    pub base: Option<String>,
    #[arg(long, default_value_t = 10)]
    pub n_max: usize,
    /// Output directory; the table goes to stdout without it.
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t = Format::Both)]
    pub format: Format,
}

#[derive(Debug, Args)]
pub struct FieldArgs {
    #[arg(long)]
    pub config: PathBuf,
    #[arg(long)]
    pub seed: u64,
    #[arg(long, default_value_t = 1000)]
    pub draws: usize,
    /// Also draw empirical fields `G_n` at this sample size.
    #[arg(long)]
    pub empirical_n: Option<usize>,
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long, value_enum, default_value_t = Format::Csv)]
    pub format: Format,
}

/// Inputs of the `field` subcommand. Unknown keys are ignored so experiment
/// configs can be reused.
#[derive(Clone, Debug, Deserialize)]
pub struct FieldConfig {
    pub measure: DiscreteMeasure,
    #[serde(default)]
    pub base: Option<Vec<f64>>,
    pub net: NetSpec,
    #[serde(default)]
    pub localization: Option<FieldMeanConfig>,
}

#[derive(Clone, Debug, Default, Deserialize)]
pub struct FieldMeanConfig {
    #[serde(default)]
    pub mean: MeanConfig,
}

#[derive(Clone, Debug, Serialize)]
pub struct RunManifest {
    pub tool: String,
    pub version: String,
    pub command: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub config_path: Option<String>,
    /// SHA-256 of the config file bytes.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub config_sha256: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    pub started_unix: f64,
    pub finished_unix: f64,
    pub outputs: Vec<String>,
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

fn now() -> f64 {
    SystemTime::now().duration_since(UNIX_EPOCH).map(|d| d.as_secs_f64()).unwrap_or(0.0)
}

pub fn exit_code(e: &Error) -> i32 {
    match e {
        Error::Numerical(_) => EXIT_NUMERICAL,
        _ => EXIT_INPUT,
    }
}

/// Parse arguments, dispatch, and return the process exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_INPUT } else { EXIT_OK };
            let _ = e.print();
            return code;
        }
    };
    let pool = match rayon::ThreadPoolBuilder::new().num_threads(cli.threads).build() {
        Ok(p) => p,
        Err(e) => {
            eprintln!("error: cannot start thread pool: {e}");
            return EXIT_INPUT;
        }
    };
    match pool.install(|| dispatch(&cli.command)) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            exit_code(&e)
        }
    }
}

fn dispatch(cmd: &Command) -> Result<i32> {
    match cmd {
        Command::Mean(a) => cmd_mean(a),
        Command::Clt(a) => cmd_clt(a),
        Command::Cover(a) => cmd_cover(a),
        Command::Field(a) => cmd_field(a),
    }
}

fn read(path: &Path) -> Result<Vec<u8>> {
    fs::read(path).map_err(|e| Error::Invalid(format!("cannot read {}: {e}", path.display())))
}

fn text(bytes: &[u8], path: &Path) -> Result<String> {
    String::from_utf8(bytes.to_vec()).map_err(|_| Error::Invalid(format!("{} is not UTF-8", path.display())))
}

fn prepare_dir(dir: &Path) -> Result<()> {
    fs::create_dir_all(dir).map_err(|e| Error::Invalid(format!("cannot create {}: {e}", dir.display())))
}

fn write_file(dir: &Path, name: &str, contents: &str, outputs: &mut Vec<String>) -> Result<()> {
    fs::write(dir.join(name), contents)?;
    outputs.push(name.to_string());
    Ok(())
}

fn write_manifest(dir: &Path, mut manifest: RunManifest) -> Result<()> {
    manifest.finished_unix = now();
    fs::write(dir.join("manifest.json"), serde_json::to_string_pretty(&manifest)? + "\n")?;
    Ok(())
}

fn manifest(command: &str, config: Option<(&Path, &[u8])>, seed: Option<u64>, started: f64) -> RunManifest {
    RunManifest {
        tool: env!("CARGO_PKG_NAME").into(),
        version: env!("CARGO_PKG_VERSION").into(),
        command: command.into(),
        config_path: config.map(|(p, _)| p.display().to_string()),
        config_sha256: config.map(|(_, b)| sha256_hex(b)),
        seed,
        started_unix: started,
        finished_unix: started,
        outputs: Vec::new(),
    }
}

/// A measure file, or any config carrying one under `"measure"`.
pub fn read_measure(text: &str) -> Result<DiscreteMeasure> {
    let value: serde_json::Value = serde_json::from_str(text)?;
    match value.get("measure") {
        Some(m) => Ok(serde_json::from_value(m.clone())?),
        None => Ok(serde_json::from_value(value)?),
    }
}

pub fn cmd_mean(a: &MeanArgs) -> Result<i32> {
    let started = now();
    let bytes = read(&a.config)?;
    let mu = read_measure(&text(&bytes, &a.config)?)?;
    let cfg: MeanConfig = match &a.solver {
        Some(p) => serde_json::from_slice(&read(p)?)?,
        None => MeanConfig::default(),
    };
    let mut grid = Vec::new();
    let d = frechet_mean_with_grid(&mu, &cfg, a.grid_csv.as_ref().map(|_| &mut grid))?;
    let json = serde_json::to_string_pretty(&d)? + "\n";
    print!("{json}");
    if let Some(path) = &a.grid_csv {
        let mut w = BufWriter::new(fs::File::create(path)?);
        let dim = grid.first().map_or(0, |(p, _)| p.len());
        let header: Vec<String> = (0..dim).map(|i| format!("x{i}")).chain(["frechet".to_string()]).collect();
        writeln!(w, "{}", header.join(","))?;
        for (p, f) in &grid {
            let row: Vec<String> = p.iter().chain([f]).map(|v| fmt(*v)).collect();
            writeln!(w, "{}", row.join(","))?;
        }
        w.flush()?;
    }
    if let Some(dir) = &a.out {
        prepare_dir(dir)?;
        let mut m = manifest("mean", Some((&a.config, &bytes)), None, started);
        write_file(dir, "mean.json", &json, &mut m.outputs)?;
        if let Some(p) = &a.grid_csv {
            m.outputs.push(p.display().to_string());
        }
        write_manifest(dir, m)?;
    }
    Ok(EXIT_OK)
}

pub fn cmd_clt(a: &CltArgs) -> Result<i32> {
    let started = now();
    let bytes = read(&a.config)?;
    let mut cfg = ExperimentConfig::from_json(&text(&bytes, &a.config)?)?;
    cfg.seed = a.seed;
    let report = run_clt_experiment(cfg)?;
    prepare_dir(&a.out)?;
    let mut m = manifest("clt", Some((&a.config, &bytes)), Some(a.seed), started);
    if a.format.json() {
        write_file(&a.out, "report.json", &(report.to_json()? + "\n"), &mut m.outputs)?;
    }
    if a.format.csv() {
        m.outputs.extend(report.write_csvs(&a.out)?);
    }
    write_manifest(&a.out, m)?;
    for f in &report.failures {
        eprintln!("FAIL {f}");
    }
    Ok(if report.pass { EXIT_OK } else { EXIT_STATISTICAL })
}

pub fn parse_point(space: SpaceSpec, list: &str) -> Result<Point> {
    let coords = list
        .split(',')
        .map(|s| s.trim().parse::<f64>().map_err(|_| Error::Invalid(format!("bad coordinate {s:?} in {list:?}"))))
        .collect::<Result<Vec<_>>>()?;
    Point::from_array(space, &coords)
}

pub fn cmd_cover(a: &CoverArgs) -> Result<i32> {
    let started = now();
    let space: SpaceSpec = serde_json::from_str(&a.space)?;
    let base = match &a.base {
        Some(b) => parse_point(space, b)?,
        None => Point::origin(space),
    };
    let profile = dimension_constant(&base, a.n_max)?;
    match &a.out {
        None => {
            let stdout = io::stdout();
            profile.write_csv(stdout.lock())?;
            eprintln!("d_estimate {} stratum_sum {}", profile.d_estimate, profile.stratum_sum);
        }
        Some(dir) => {
            prepare_dir(dir)?;
            let mut m = manifest("cover", None, None, started);
            if a.format.csv() {
                profile.write_csv(fs::File::create(dir.join("cover.csv"))?)?;
                m.outputs.push("cover.csv".into());
            }
            if a.format.json() {
                write_file(dir, "cover.json", &(serde_json::to_string_pretty(&profile)? + "\n"), &mut m.outputs)?;
            }
            write_manifest(dir, m)?;
        }
    }
    Ok(EXIT_OK)
}

// substream tags for field draws
const GAUSSIAN: u64 = 11;
const EMPIRICAL: u64 = 12;

#[derive(Serialize)]
struct FieldSummary<'a> {
    base: Vec<f64>,
    labels: Vec<String>,
    eigenvalues: Vec<f64>,
    gaussian: Vec<&'a [f64]>,
    #[serde(skip_serializing_if = "Option::is_none")]
    empirical: Option<Vec<&'a [f64]>>,
}

pub fn cmd_field(a: &FieldArgs) -> Result<i32> {
    let started = now();
    let bytes = read(&a.config)?;
    let cfg: FieldConfig = serde_json::from_str(&text(&bytes, &a.config)?)?;
    if a.draws == 0 {
        return Err(Error::Invalid("--draws must be positive".into()));
    }
    let mu = &cfg.measure;
    let base = match &cfg.base {
        Some(b) => Point::from_array(mu.space(), b)?,
        None => frechet_mean(mu, &cfg.localization.unwrap_or_default().mean)?.mean,
    };
    let net = Arc::new(cfg.net.build(&base)?);
    let table = TangentTable::new(mu, net.clone())?;
    let cov = cov_from_table(&table)?;
    let sampler = GaussianFieldSampler::new(cov.clone());
    let gaussian: Vec<FieldOnNet> =
        (0..a.draws).into_par_iter().map(|r| sampler.sample(&mut substream(a.seed, &[GAUSSIAN, r as u64]))).collect();
    let empirical = match a.empirical_n {
        None => None,
        Some(n) => {
            let atoms = AtomSampler::new(mu);
            let fields: Result<Vec<FieldOnNet>> = (0..a.draws)
                .into_par_iter()
                .map(|r| {
                    let mut rng = substream(a.seed, &[EMPIRICAL, r as u64]);
                    let mut counts = vec![0; mu.len()];
                    for _ in 0..n {
                        counts[atoms.draw(&mut rng)] += 1;
                    }
                    table.field_from_counts(&counts, Scaling::Clt)
                })
                .collect();
            Some(fields?)
        }
    };
    debug_assert!(gaussian.iter().all(|f| f.label() == FieldLabel::Gaussian));

    prepare_dir(&a.out)?;
    let mut m = manifest("field", Some((&a.config, &bytes)), Some(a.seed), started);
    if a.format.csv() {
        write_fields_csv(&gaussian, fs::File::create(a.out.join("gaussian.csv"))?)?;
        m.outputs.push("gaussian.csv".into());
        if let Some(e) = &empirical {
            write_fields_csv(e, fs::File::create(a.out.join("empirical.csv"))?)?;
            m.outputs.push("empirical.csv".into());
        }
        cov.write_csv(fs::File::create(a.out.join("covariance.csv"))?)?;
        m.outputs.push("covariance.csv".into());
    }
    if a.format.json() {
        let summary = FieldSummary {
            base: base.to_array(),
            labels: net.labels(),
            eigenvalues: cov.eigenvalues().iter().copied().collect(),
            gaussian: gaussian.iter().map(FieldOnNet::values).collect(),
            empirical: empirical.as_ref().map(|e| e.iter().map(FieldOnNet::values).collect()),
        };
        write_file(&a.out, "field.json", &(serde_json::to_string_pretty(&summary)? + "\n"), &mut m.outputs)?;
    }
    write_manifest(&a.out, m)?;
    Ok(EXIT_OK)
}
