//! `carspeed` command line.
//!
//! Exit codes: 0 on success, 1 on runtime or data failures, 2 on usage and
//! validation errors (including unreadable or malformed input files). Data
//! goes to files or stdout, diagnostics to stderr.

use std::ffi::OsString;
use std::fmt::Display;
use std::fs::{self, File};
use std::io::{self, Write};
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use log::{info, warn};
use rayon::prelude::*;

use crate::features::{
    extract_entry, read_features_table, write_features_table, DepthRegion, ExtractionConfig,
    FileRasters, PrimarySelection, SampleRecord, TableError,
};
use crate::interchange::{read_manifest, InterchangeError};
use crate::regression::{
    evaluate, feature_importance, load_model, predict, save_model, train_and_evaluate, BaseFeature,
    MetricBlock, PolynomialBasis, RegressionError, RegressionModel, DEFAULT_SPLIT_SEED,
    DEFAULT_TEST_FRACTION, IMPORTANCE_METRIC, MAX_DEGREE,
};
use crate::synth::{generate_dataset, DatasetSpec, DepthMode, NoiseParams, SynthError};

pub const EXIT_OK: i32 = 0;
pub const EXIT_FAILURE: i32 = 1;
pub const EXIT_USAGE: i32 = 2;

#[derive(Debug, Parser)]
#[command(
    name = "carspeed",
    version,
    about = "Vehicle speed from detections and depth maps"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Generate a labelled synthetic dataset.
    Synth(SynthArgs),
    /// Extract (t, area_diff, dist_diff) per sample from a manifest.
    Extract(ExtractArgs),
    /// Fit a polynomial speed model on a features table.
    Fit(FitArgs),
    /// Evaluate a model on labelled features.
    Eval(EvalArgs),
    /// Predict speeds for a features table.
    Predict(PredictArgs),
    /// Write delimited summaries of a model for external plotting.
    Report(ReportArgs),
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum DepthModeArg {
    Metric,
    InverseRelative,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum DepthRegionArg {
    Mask,
    Bbox,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum PrimaryArg {
    MaxArea,
    MaxConfidence,
}

#[derive(Debug, Args)]
pub struct SynthArgs {
    #[arg(long)]
    pub n: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Output directory.
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long, default_value_t = 5.0)]
    pub speed_min: f64,
    #[arg(long, default_value_t = 60.0)]
    pub speed_max: f64,
    #[arg(long, default_value_t = 2.0)]
    pub duration_min: f64,
    #[arg(long, default_value_t = 6.0)]
    pub duration_max: f64,
    #[arg(long, default_value_t = 110.0)]
    pub distance_min: f64,
    #[arg(long, default_value_t = 150.0)]
    pub distance_max: f64,
    #[arg(long, default_value_t = 30.0)]
    pub fps: f64,
    #[arg(long, default_value_t = 1000.0)]
    pub focal: f64,
    #[arg(long, default_value_t = 1.8)]
    pub vehicle_width: f64,
    #[arg(long, default_value_t = 1.5)]
    pub vehicle_height: f64,
    #[arg(long, default_value_t = 640)]
    pub image_width: u32,
    #[arg(long, default_value_t = 480)]
    pub image_height: u32,
    #[arg(long, value_enum, default_value_t = DepthModeArg::Metric)]
    pub depth_mode: DepthModeArg,
    /// Standard deviation of per-corner bbox noise, in pixels.
    #[arg(long, default_value_t = 0.0)]
    pub bbox_noise: f64,
    /// Standard deviation of per-pixel depth noise, in depth units.
    #[arg(long, default_value_t = 0.0)]
    pub depth_noise: f64,
    /// Also write every k-th frame between the endpoints.
    #[arg(long, value_parser = clap::value_parser!(u64).range(1..))]
    pub frame_stride: Option<u64>,
}

#[derive(Debug, Args)]
pub struct ExtractArgs {
    #[arg(long)]
    pub manifest: PathBuf,
    /// Features table to write (stdout when omitted).
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long, default_value_t = 0.7, value_parser = parse_unit_interval)]
    pub confidence_threshold: f64,
    #[arg(long, value_enum, default_value_t = DepthRegionArg::Mask)]
    pub depth_region: DepthRegionArg,
    #[arg(long, value_enum, default_value_t = PrimaryArg::MaxArea)]
    pub primary: PrimaryArg,
    /// Accepted detector classes.
    #[arg(long = "class", default_values_t = ["car".to_string()])]
    pub classes: Vec<String>,
}

#[derive(Debug, Args)]
pub struct FitArgs {
    #[arg(long)]
    pub features: PathBuf,
    /// Model file to write.
    #[arg(long)]
    pub model: PathBuf,
    #[arg(long, default_value_t = MAX_DEGREE, value_parser = clap::value_parser!(u32).range(1..=MAX_DEGREE as i64))]
    pub degree: u32,
    #[arg(long, default_value_t = DEFAULT_TEST_FRACTION, value_parser = parse_open_fraction)]
    pub test_fraction: f64,
    #[arg(long, default_value_t = DEFAULT_SPLIT_SEED)]
    pub seed: u64,
    /// Base features to expand, comma separated.
    #[arg(long, value_delimiter = ',', default_values_t = BaseFeature::ALL)]
    pub bases: Vec<BaseFeature>,
}

#[derive(Debug, Args)]
pub struct EvalArgs {
    #[arg(long)]
    pub model: PathBuf,
    #[arg(long)]
    pub features: PathBuf,
    /// Actual-vs-predicted table to write.
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct PredictArgs {
    #[arg(long)]
    pub model: PathBuf,
    #[arg(long)]
    pub features: PathBuf,
    /// Predictions table to write (stdout when omitted).
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct ReportArgs {
    #[arg(long)]
    pub model: PathBuf,
    /// Labelled features for the actual-vs-predicted series.
    #[arg(long)]
    pub features: Option<PathBuf>,
    /// Output directory.
    #[arg(long)]
    pub out: PathBuf,
}

fn parse_unit_interval(s: &str) -> Result<f64, String> {
    let v: f64 = s.parse().map_err(|e| format!("{e}"))?;
    if (0.0..=1.0).contains(&v) {
        Ok(v)
    } else {
        Err(format!("{v} is not in [0, 1]"))
    }
}

fn parse_open_fraction(s: &str) -> Result<f64, String> {
    let v: f64 = s.parse().map_err(|e| format!("{e}"))?;
    if v > 0.0 && v < 1.0 {
        Ok(v)
    } else {
        Err(format!("{v} is not in (0, 1)"))
    }
}

/// A command failure carrying its exit code.
#[derive(Debug)]
pub struct Failure {
    pub code: i32,
    pub message: String,
}

impl Failure {
    fn usage(message: impl Display) -> Self {
        Self {
            code: EXIT_USAGE,
            message: message.to_string(),
        }
    }

    fn runtime(message: impl Display) -> Self {
        Self {
            code: EXIT_FAILURE,
            message: message.to_string(),
        }
    }
}

impl From<RegressionError> for Failure {
    fn from(e: RegressionError) -> Self {
        match e {
            RegressionError::InvalidDegree(_)
            | RegressionError::NoBaseFeatures
            | RegressionError::InvalidFraction(_)
            | RegressionError::Unlabeled { .. }
            | RegressionError::SchemaMismatch(_)
            | RegressionError::Json(_) => Self::usage(e),
            _ => Self::runtime(e),
        }
    }
}

impl From<SynthError> for Failure {
    fn from(e: SynthError) -> Self {
        match e {
            SynthError::InvalidScenario(_) => Self::usage(e),
            _ => Self::runtime(e),
        }
    }
}

type CmdResult = Result<(), Failure>;

/// Parses `args` (including the program name) and runs the command.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let _ = env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn"))
        .try_init();
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return e.exit_code();
        }
    };
    let result = match cli.command {
        Command::Synth(a) => cmd_synth(&a),
        Command::Extract(a) => cmd_extract(&a),
        Command::Fit(a) => cmd_fit(&a),
        Command::Eval(a) => cmd_eval(&a),
        Command::Predict(a) => cmd_predict(&a),
        Command::Report(a) => cmd_report(&a),
    };
    match result {
        Ok(()) => EXIT_OK,
        Err(f) => {
            eprintln!("error: {}", f.message);
            f.code
        }
    }
}

pub fn cmd_synth(args: &SynthArgs) -> CmdResult {
    let spec = DatasetSpec {
        speed_kmh: [args.speed_min, args.speed_max],
        duration_s: [args.duration_min, args.duration_max],
        initial_distance_m: [args.distance_min, args.distance_max],
        focal_px: args.focal,
        vehicle_width_m: args.vehicle_width,
        vehicle_height_m: args.vehicle_height,
        fps: args.fps,
        image_width: args.image_width,
        image_height: args.image_height,
        depth_mode: match args.depth_mode {
            DepthModeArg::Metric => DepthMode::Metric,
            DepthModeArg::InverseRelative => DepthMode::InverseRelative,
        },
        noise: NoiseParams {
            bbox_sigma_px: args.bbox_noise,
            depth_sigma: args.depth_noise,
        },
        frame_stride: args.frame_stride,
    };
    let manifest = generate_dataset(args.n, &spec, args.seed, &args.out)?;
    emit(&[format!(
        "wrote {} samples (seed {}) to {}",
        manifest.samples.len(),
        args.seed,
        args.out.display()
    )])
}

pub fn cmd_extract(args: &ExtractArgs) -> CmdResult {
    let manifest = read_manifest(&args.manifest).map_err(|e| match e {
        InterchangeError::Io { .. } => Failure::runtime(e),
        _ => Failure::usage(e),
    })?;
    let config = ExtractionConfig {
        confidence_threshold: args.confidence_threshold,
        accepted_classes: args.classes.iter().cloned().collect(),
        depth_region: match args.depth_region {
            DepthRegionArg::Mask => DepthRegion::Mask,
            DepthRegionArg::Bbox => DepthRegion::Bbox,
        },
        primary_selection: match args.primary {
            PrimaryArg::MaxArea => PrimarySelection::MaxArea,
            PrimaryArg::MaxConfidence => PrimarySelection::MaxConfidence,
        },
    };
    config.validate().map_err(Failure::usage)?;
    let rasters = FileRasters::for_manifest(&args.manifest);

    let results: Vec<_> = manifest
        .samples
        .par_iter()
        .map(|entry| {
            (
                entry.sample_id.as_str(),
                extract_entry(entry, &config, &rasters),
            )
        })
        .collect();
    let mut records = Vec::new();
    let mut skipped = Vec::new();
    for (id, result) in results {
        match result {
            Ok(record) => records.push(record),
            Err(e) => {
                warn!("skipping {id}: {e}");
                skipped.push(id);
            }
        }
    }
    records.sort_by(|a, b| a.sample_id.cmp(&b.sample_id));
    skipped.sort_unstable();

    eprintln!("extracted {}, skipped {}", records.len(), skipped.len());
    if !skipped.is_empty() {
        eprintln!("skipped: {}", skipped.join(", "));
    }
    if records.is_empty() {
        return Err(Failure::runtime("no samples could be extracted"));
    }
    write_output(args.out.as_deref(), |w| {
        write_features_table(&records, w).map_err(Failure::runtime)
    })
}

fn read_features(path: &Path) -> Result<Vec<SampleRecord>, Failure> {
    let file = File::open(path).map_err(|e| Failure::usage(format!("{}: {e}", path.display())))?;
    read_features_table(file).map_err(|e| match e {
        TableError::Csv(_) | TableError::Header { .. } | TableError::Row { .. } => {
            Failure::usage(format!("{}: {e}", path.display()))
        }
    })
}

fn read_model(path: &Path) -> Result<RegressionModel, Failure> {
    load_model(path).map_err(|e| Failure::usage(format!("{}: {e}", path.display())))
}

/// Prints `lines` to stdout; a closed pipe is not an error.
fn emit(lines: &[String]) -> CmdResult {
    let mut out = io::stdout().lock();
    let result = lines
        .iter()
        .try_for_each(|l| writeln!(out, "{l}"))
        .and_then(|_| out.flush());
    match result {
        Err(e) if e.kind() != io::ErrorKind::BrokenPipe => Err(Failure::runtime(e)),
        _ => Ok(()),
    }
}

/// Runs `body` against the file at `path`, or stdout when `path` is `None`.
fn write_output(path: Option<&Path>, body: impl FnOnce(&mut dyn Write) -> CmdResult) -> CmdResult {
    match path {
        Some(p) => {
            let mut file = io::BufWriter::new(
                File::create(p).map_err(|e| Failure::runtime(format!("{}: {e}", p.display())))?,
            );
            body(&mut file)?;
            file.flush().map_err(Failure::runtime)
        }
        None => {
            let stdout = io::stdout();
            let mut lock = stdout.lock();
            body(&mut lock)?;
            lock.flush().map_err(Failure::runtime)
        }
    }
}

fn format_block(label: &str, block: &MetricBlock) -> String {
    let adj = block
        .adj_r2
        .map_or_else(|| "n/a".to_string(), |v| format!("{v:.6}"));
    format!(
        "{label:<5} n={:<5} r2={:.6}  adj_r2={adj}  rmse={:.6}",
        block.n, block.r2, block.rmse
    )
}

fn importance_lines(model: &RegressionModel) -> Vec<String> {
    feature_importance(model)
        .into_iter()
        .enumerate()
        .map(|(i, (name, v))| format!("{:>3}  {name:<28} {v:.6}", i + 1))
        .collect()
}

pub fn cmd_fit(args: &FitArgs) -> CmdResult {
    let records = read_features(&args.features)?;
    let basis = PolynomialBasis::new(args.degree, &args.bases)?;
    let outcome = train_and_evaluate(&records, &basis, args.test_fraction, args.seed)?;
    save_model(&outcome.model, &args.model)
        .map_err(|e| Failure::runtime(format!("{}: {e}", args.model.display())))?;

    let model = &outcome.model;
    let mut lines = vec![format!(
        "model: degree {} over {}, {} predictors + intercept -> {}",
        model.degree,
        model
            .base_features
            .iter()
            .map(|b| b.name())
            .collect::<Vec<_>>()
            .join(","),
        model.num_predictors(),
        args.model.display()
    )];
    lines.push(format!(
        "split: {} train / {} test (seed {})",
        outcome.train.len(),
        outcome.test.len(),
        args.seed
    ));
    lines.push(format_block("train", &outcome.train_report.block()));
    lines.push(match &outcome.test_report {
        Some(r) => format_block("test", &r.block()),
        None => format!("test  n={:<5} (constant speeds, no R²)", outcome.test.len()),
    });
    lines.push(format!("importance ({IMPORTANCE_METRIC}):"));
    lines.extend(importance_lines(model));
    emit(&lines)
}

pub fn cmd_eval(args: &EvalArgs) -> CmdResult {
    let model = read_model(&args.model)?;
    let records = read_features(&args.features)?;
    let report = evaluate(&model, &records)?;
    write_output(Some(&args.out), |w| {
        write_actual_vs_predicted(w, &records, &report.predictions)
    })?;
    emit(&[format_block("eval", &report.block())])
}

fn write_actual_vs_predicted(
    w: &mut dyn Write,
    records: &[SampleRecord],
    predictions: &[f64],
) -> CmdResult {
    let mut csv = csv::Writer::from_writer(w);
    csv.write_record(["sample_id", "actual_kmh", "predicted_kmh", "residual_kmh"])
        .map_err(Failure::runtime)?;
    for (r, p) in records.iter().zip(predictions) {
        let actual = r.speed_kmh.unwrap_or(f64::NAN);
        csv.write_record([
            r.sample_id.clone(),
            actual.to_string(),
            p.to_string(),
            (actual - p).to_string(),
        ])
        .map_err(Failure::runtime)?;
    }
    csv.flush().map_err(Failure::runtime)
}

pub fn cmd_predict(args: &PredictArgs) -> CmdResult {
    let model = read_model(&args.model)?;
    let records = read_features(&args.features)?;
    let predictions: Vec<f64> = records.iter().map(|r| predict(&model, r)).collect();
    for (r, p) in records.iter().zip(&predictions) {
        if *p < 0.0 {
            warn!("{}: negative predicted speed {p} km/h", r.sample_id);
        }
    }
    write_output(args.out.as_deref(), |w| {
        let mut csv = csv::Writer::from_writer(w);
        csv.write_record(["sample_id", "predicted_kmh", "negative"])
            .map_err(Failure::runtime)?;
        for (r, p) in records.iter().zip(&predictions) {
            csv.write_record([r.sample_id.clone(), p.to_string(), (*p < 0.0).to_string()])
                .map_err(Failure::runtime)?;
        }
        csv.flush().map_err(Failure::runtime)
    })
}

pub fn cmd_report(args: &ReportArgs) -> CmdResult {
    let model = read_model(&args.model)?;
    let records = args.features.as_deref().map(read_features).transpose()?;
    fs::create_dir_all(&args.out)
        .map_err(|e| Failure::runtime(format!("{}: {e}", args.out.display())))?;
    let out = |name: &str| args.out.join(name);

    write_output(Some(&out("importance.csv")), |w| {
        let mut csv = csv::Writer::from_writer(w);
        csv.write_record(["rank", "feature", "importance", "coefficient"])
            .map_err(Failure::runtime)?;
        let coefficient = |name: &str| {
            model
                .monomials
                .iter()
                .position(|m| m.display_name == name)
                .map(|i| model.coefficients[i])
                .unwrap_or(f64::NAN)
        };
        for (i, (name, v)) in feature_importance(&model).into_iter().enumerate() {
            csv.write_record([
                (i + 1).to_string(),
                name.clone(),
                v.to_string(),
                coefficient(&name).to_string(),
            ])
            .map_err(Failure::runtime)?;
        }
        csv.flush().map_err(Failure::runtime)
    })?;

    let mut summary = vec![
        format!("degree: {}", model.degree),
        format!("predictors: {}", model.num_predictors()),
        format!("intercept: {}", model.intercept),
    ];
    if let Some(b) = &model.train_metrics {
        summary.push(format_block("train", b));
    }
    if let Some(b) = &model.test_metrics {
        summary.push(format_block("test", b));
    }
    if let Some(records) = &records {
        let report = evaluate(&model, records)?;
        write_output(Some(&out("actual_vs_predicted.csv")), |w| {
            write_actual_vs_predicted(w, records, &report.predictions)
        })?;
        summary.push(format_block("eval", &report.block()));
    }
    summary.push(format!("importance ({IMPORTANCE_METRIC}):"));
    summary.extend(importance_lines(&model));

    let text = summary.join("\n") + "\n";
    fs::write(out("summary.txt"), &text).map_err(Failure::runtime)?;
    info!("report written to {}", args.out.display());
    emit(&summary)
}
