//! Command line front end.
//!
//! Exit codes: 0 on success, 1 on validation errors (bad flags, missing
//! inputs, out-of-range parameters), 2 on processing errors. Batch modes
//! keep going past failed items and exit 2 if any item failed.

use std::ffi::OsString;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use tomkit_core::fusion::mean_latents;
use tomkit_core::loss::{loss_breakdown, LossConfig};
use tomkit_core::maskgen::{reflectance_to_mask, Direction, MaskGenConfig};
use tomkit_core::metrics::{evaluate_with, EvalOptions};
use tomkit_core::synth::{make_mirror_scene, SceneConfig};
use tomkit_core::tonemap::{random_augment, tonemap, AugmentSpec, TonemapParams};
use tomkit_core::{AlignMode, BinaryMask, LogBase};

use crate::codec::CodecSpec;
use crate::pfm::{read_pfm, write_depth_pfm, write_pfm};
use crate::png::{read_mask_png, write_ldr_png, write_mask_png};
use crate::read_depth;
use crate::report::{
    write_json, write_summary_csv, BatchItem, EvalReport, EvalSummary, ItemStatus, LossReport,
};

/// Environment variable that overrides `--jobs`.
pub const JOBS_ENV: &str = "TOMKIT_JOBS";

#[derive(Debug, Parser)]
#[command(name = "tomkit", version, about = "Depth-estimation tooling for transparent and mirror surfaces")]
pub struct Cli {
    /// Worker threads for batch work (default: available cores).
    #[arg(long, global = true)]
    pub jobs: Option<usize>,

    #[arg(long, global = true, default_value = "warn")]
    pub log_level: log::LevelFilter,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Percentile-anchored random tone-mapping augmentation.
    Augment(AugmentArgs),
    /// Derive a ToM mask from a reflectance map.
    Maskgen(MaskgenArgs),
    /// ToM guidance loss, SSI loss and their total.
    Loss(LossArgs),
    /// Region metrics for one prediction or a batch.
    Eval(EvalArgs),
    /// Fuse exposures by averaging codec latents.
    Fuse(FuseArgs),
    /// Generate a synthetic mirror scene.
    Synth(SynthArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ImageFormat {
    Pfm,
    Png,
}

#[derive(Debug, Args)]
pub struct AugmentArgs {
    /// Linear HDR input (PFM).
    #[arg(long, required_unless_present = "list", conflicts_with = "list")]
    pub input: Option<PathBuf>,
    /// Output path; `.png` writes an 8-bit preview, anything else PFM.
    #[arg(long, required_unless_present = "list", conflicts_with = "list")]
    pub output: Option<PathBuf>,
    /// File listing one input per line (relative to the list's directory).
    #[arg(long, requires = "out_dir")]
    pub list: Option<PathBuf>,
    #[arg(long)]
    pub out_dir: Option<PathBuf>,
    /// Output format in batch mode.
    #[arg(long, value_enum, default_value = "pfm")]
    pub format: ImageFormat,
    /// Base seed; batch item `i` (in sorted order) uses `seed + i`.
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Fixed anchor percentile (disables random sampling).
    #[arg(long, conflicts_with = "range")]
    pub percentile: Option<f64>,
    /// Random anchor percentile range.
    #[arg(long, num_args = 2, value_names = ["LO", "HI"])]
    pub range: Option<Vec<f64>>,
    #[arg(long, default_value_t = 1.0 / 2.2)]
    pub gamma: f64,
    #[arg(long, default_value_t = 0.8)]
    pub target: f64,
    #[arg(long)]
    pub no_clip: bool,
    /// Draw whole-number percentiles.
    #[arg(long)]
    pub integer_percentile: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum DirectionArg {
    Below,
    Above,
}

#[derive(Debug, Args)]
pub struct MaskgenArgs {
    #[arg(long)]
    pub reflectance: PathBuf,
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long, default_value_t = 0.1)]
    pub threshold: f64,
    #[arg(long, value_enum, default_value = "below")]
    pub direction: DirectionArg,
    #[arg(long, default_value_t = 0)]
    pub erode: usize,
}

#[derive(Debug, Args)]
pub struct LossArgs {
    #[arg(long)]
    pub pred: PathBuf,
    #[arg(long)]
    pub gt: PathBuf,
    #[arg(long)]
    pub tom_mask: PathBuf,
    /// Validity mask for the SSI term (default: every pixel).
    #[arg(long)]
    pub valid: Option<PathBuf>,
    #[arg(long, default_value_t = 0.2)]
    pub trim: f64,
    #[arg(long, default_value_t = 10)]
    pub min_mask_pixels: usize,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum AlignArg {
    None,
    Lstsq,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum LogBaseArg {
    #[value(name = "10")]
    Ten,
    #[value(name = "e")]
    E,
}

#[derive(Debug, Args)]
pub struct EvalArgs {
    #[arg(long, required_unless_present = "list", conflicts_with = "list")]
    pub pred: Option<PathBuf>,
    #[arg(long, required_unless_present = "list", conflicts_with = "list")]
    pub gt: Option<PathBuf>,
    #[arg(long, required_unless_present = "list", conflicts_with = "list")]
    pub tom_mask: Option<PathBuf>,
    /// CSV with header `pred,gt,mask`; paths relative to the CSV's directory.
    #[arg(long)]
    pub list: Option<PathBuf>,
    #[arg(long, value_enum, default_value = "none")]
    pub align: AlignArg,
    #[arg(long, value_enum, default_value = "10")]
    pub log_base: LogBaseArg,
    #[arg(long)]
    pub out: PathBuf,
    /// Also write a flat CSV table (batch mode).
    #[arg(long, requires = "list")]
    pub csv: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct FuseArgs {
    #[arg(long, num_args = 1.., required = true)]
    pub images: Vec<PathBuf>,
    /// `identity` or an external codec command line.
    #[arg(long, default_value = "identity")]
    pub codec: String,
    /// Directory for codec temp files (default: the system temp dir).
    #[arg(long)]
    pub workdir: Option<PathBuf>,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Preset {
    Default,
}

#[derive(Debug, Args)]
pub struct SynthArgs {
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long, value_enum, default_value = "default")]
    pub preset: Preset,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Virtual offset of the reflected content.
    #[arg(long)]
    pub offset: Option<f64>,
    /// Gaussian noise sigma inside the mirror.
    #[arg(long)]
    pub noise: Option<f64>,
}

#[derive(Debug)]
pub enum Failure {
    Validation(String),
    Processing(String),
}

impl Failure {
    pub fn exit_code(&self) -> i32 {
        match self {
            Failure::Validation(_) => 1,
            Failure::Processing(_) => 2,
        }
    }
}

impl std::fmt::Display for Failure {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Failure::Validation(m) | Failure::Processing(m) => f.write_str(m),
        }
    }
}

impl From<crate::Error> for Failure {
    fn from(e: crate::Error) -> Self {
        Failure::Processing(e.to_string())
    }
}

impl From<tomkit_core::Error> for Failure {
    fn from(e: tomkit_core::Error) -> Self {
        Failure::Processing(e.to_string())
    }
}

fn invalid(e: impl std::fmt::Display) -> Failure {
    Failure::Validation(e.to_string())
}

/// Parses `args` (including the program name) and runs the subcommand.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return match e.kind() {
                clap::error::ErrorKind::DisplayHelp | clap::error::ErrorKind::DisplayVersion => 0,
                _ => 1,
            };
        }
    };
    let _ = env_logger::Builder::new().filter_level(cli.log_level).try_init();
    match execute(&cli) {
        Ok(()) => 0,
        Err(failure) => {
            eprintln!("error: {failure}");
            failure.exit_code()
        }
    }
}

pub fn resolve_jobs(flag: Option<usize>) -> Result<usize, Failure> {
    if let Ok(raw) = std::env::var(JOBS_ENV) {
        return match raw.trim().parse::<usize>() {
            Ok(n) if n > 0 => Ok(n),
            _ => Err(Failure::Validation(format!("{JOBS_ENV} must be a positive integer, got {raw:?}"))),
        };
    }
    match flag {
        Some(0) => Err(Failure::Validation("--jobs must be positive".into())),
        Some(n) => Ok(n),
        None => Ok(std::thread::available_parallelism().map_or(1, |n| n.get())),
    }
}

pub fn execute(cli: &Cli) -> Result<(), Failure> {
    let jobs = resolve_jobs(cli.jobs)?;
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(jobs)
        .build()
        .map_err(|e| Failure::Processing(e.to_string()))?;
    log::debug!("running with {jobs} worker(s)");
    pool.install(|| match &cli.command {
        Command::Augment(args) => augment(args),
        Command::Maskgen(args) => maskgen(args),
        Command::Loss(args) => loss(args),
        Command::Eval(args) => eval(args),
        Command::Fuse(args) => fuse(args),
        Command::Synth(args) => synth(args),
    })
}

fn require_inputs<'a>(paths: impl IntoIterator<Item = &'a Path>) -> Result<(), Failure> {
    for path in paths {
        if !path.is_file() {
            return Err(Failure::Validation(format!("input file not found: {}", path.display())));
        }
    }
    Ok(())
}

fn ensure_dir(dir: &Path) -> Result<(), Failure> {
    std::fs::create_dir_all(dir).map_err(|e| Failure::Processing(format!("{}: {e}", dir.display())))
}

fn resolve_relative(base: &Path, entry: &str) -> PathBuf {
    let p = Path::new(entry);
    if p.is_absolute() {
        p.to_owned()
    } else {
        base.join(p)
    }
}

fn list_dir(list: &Path) -> PathBuf {
    list.parent().map(Path::to_owned).unwrap_or_default()
}

// ---------------------------------------------------------------- augment

/// Per-item record written to `augment.json` in batch mode.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AugmentItem {
    pub input: String,
    pub output: String,
    pub seed: u64,
    pub status: ItemStatus,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub percentile: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

fn augment_settings(args: &AugmentArgs) -> Result<(AugmentSpec, TonemapParams), Failure> {
    let (low, high) = match (&args.range, args.percentile) {
        (Some(range), _) => (range[0], range[1]),
        (None, Some(p)) => (p, p),
        (None, None) => (70.0, 99.0),
    };
    let spec = AugmentSpec {
        percentile_low: low,
        percentile_high: high,
        seed: args.seed,
        integer_percentile: args.integer_percentile,
    };
    let params = TonemapParams {
        gamma: args.gamma,
        target_value: args.target,
        percentile: low,
        clip: !args.no_clip,
    };
    spec.validate().map_err(invalid)?;
    params.validate().map_err(invalid)?;
    Ok((spec, params))
}

fn augment_one(
    input: &Path,
    output: &Path,
    format: ImageFormat,
    spec: &AugmentSpec,
    params: &TonemapParams,
    fixed: Option<f64>,
) -> Result<f64, Failure> {
    let image = read_pfm(input)?;
    let (out, p) = match fixed {
        Some(p) => (tonemap(&image, &params.with_percentile(p))?, p),
        None => random_augment(&image, spec, params)?,
    };
    match format {
        ImageFormat::Png => write_ldr_png(&out, output)?,
        ImageFormat::Pfm => write_pfm(&out, output)?,
    }
    Ok(p)
}

fn format_for(path: &Path) -> ImageFormat {
    match path.extension().and_then(|e| e.to_str()) {
        Some(ext) if ext.eq_ignore_ascii_case("png") => ImageFormat::Png,
        _ => ImageFormat::Pfm,
    }
}

fn augment(args: &AugmentArgs) -> Result<(), Failure> {
    let (spec, params) = augment_settings(args)?;
    let fixed = args.percentile;
    if let (Some(input), Some(output)) = (&args.input, &args.output) {
        require_inputs([input.as_path()])?;
        let p = augment_one(input, output, format_for(output), &spec, &params, fixed)?;
        println!("percentile {p}");
        return Ok(());
    }

    let (list, out_dir) = match (&args.list, &args.out_dir) {
        (Some(l), Some(o)) => (l, o),
        _ => return Err(Failure::Validation("augment needs --input/--output or --list/--out-dir".into())),
    };
    require_inputs([list.as_path()])?;
    let text = std::fs::read_to_string(list).map_err(|e| Failure::Processing(format!("{}: {e}", list.display())))?;
    let mut entries: Vec<String> = text
        .lines()
        .map(str::trim)
        .filter(|l| !l.is_empty())
        .map(str::to_owned)
        .collect();
    entries.sort();
    let base = list_dir(list);
    let inputs: Vec<PathBuf> = entries.iter().map(|e| resolve_relative(&base, e)).collect();
    require_inputs(inputs.iter().map(PathBuf::as_path))?;

    let ext = match args.format {
        ImageFormat::Pfm => "pfm",
        ImageFormat::Png => "png",
    };
    let mut names: Vec<String> = Vec::with_capacity(inputs.len());
    for input in &inputs {
        let stem = input
            .file_stem()
            .map(|s| s.to_string_lossy().into_owned())
            .unwrap_or_else(|| "image".into());
        let name = format!("{stem}.{ext}");
        if names.contains(&name) {
            return Err(Failure::Validation(format!("two inputs map to the same output name {name}")));
        }
        names.push(name);
    }
    ensure_dir(out_dir)?;

    let items: Vec<AugmentItem> = inputs
        .par_iter()
        .zip(names.par_iter())
        .enumerate()
        .map(|(index, (input, name))| {
            let seed = args.seed.wrapping_add(index as u64);
            let item_spec = AugmentSpec { seed, ..spec };
            let result = augment_one(input, &out_dir.join(name), args.format, &item_spec, &params, fixed);
            let (status, percentile, error) = match result {
                Ok(p) => (ItemStatus::Ok, Some(p), None),
                Err(e) => (ItemStatus::Error, None, Some(e.to_string())),
            };
            AugmentItem {
                input: entries[index].clone(),
                output: name.clone(),
                seed,
                status,
                percentile,
                error,
            }
        })
        .collect();
    write_json(&items, out_dir.join("augment.json"))?;
    finish_batch(items.iter().filter(|i| i.status == ItemStatus::Error).count(), items.len())
}

fn finish_batch(failed: usize, total: usize) -> Result<(), Failure> {
    if failed > 0 {
        Err(Failure::Processing(format!("{failed} of {total} items failed")))
    } else {
        Ok(())
    }
}

// ---------------------------------------------------------------- maskgen

fn maskgen(args: &MaskgenArgs) -> Result<(), Failure> {
    let cfg = MaskGenConfig {
        threshold: args.threshold,
        direction: match args.direction {
            DirectionArg::Below => Direction::Below,
            DirectionArg::Above => Direction::Above,
        },
        erode_radius: args.erode,
    };
    if !(0.0..=1.0).contains(&cfg.threshold) {
        return Err(Failure::Validation("--threshold must lie in [0, 1]".into()));
    }
    require_inputs([args.reflectance.as_path()])?;
    let reflectance = read_pfm(&args.reflectance)?;
    let mask = reflectance_to_mask(&reflectance, &cfg)?;
    write_mask_png(&mask, &args.out)?;
    Ok(())
}

// ---------------------------------------------------------------- loss

fn loss(args: &LossArgs) -> Result<(), Failure> {
    let cfg = LossConfig {
        trim_fraction: args.trim,
        min_mask_pixels: args.min_mask_pixels,
        ..LossConfig::default()
    };
    cfg.validate().map_err(invalid)?;
    let mut inputs = vec![args.pred.as_path(), args.gt.as_path(), args.tom_mask.as_path()];
    inputs.extend(args.valid.as_deref());
    require_inputs(inputs)?;

    let pred = read_depth(&args.pred)?;
    let gt = read_depth(&args.gt)?;
    let tom = read_mask_png(&args.tom_mask)?;
    let valid = match &args.valid {
        Some(path) => read_mask_png(path)?,
        None => BinaryMask::filled(gt.height(), gt.width(), true)?,
    };
    let breakdown = loss_breakdown(&pred, &gt, &tom, &valid, &cfg)?;
    write_json(&LossReport::from(&breakdown), &args.out)?;
    Ok(())
}

// ---------------------------------------------------------------- eval

#[derive(Debug, Deserialize)]
struct PairRow {
    pred: String,
    gt: String,
    mask: String,
}

fn eval_options(args: &EvalArgs) -> EvalOptions {
    EvalOptions {
        align: match args.align {
            AlignArg::None => AlignMode::None,
            AlignArg::Lstsq => AlignMode::Lstsq,
        },
        log_base: match args.log_base {
            LogBaseArg::Ten => LogBase::Ten,
            LogBaseArg::E => LogBase::Natural,
        },
    }
}

fn eval_pair(pred: &Path, gt: &Path, mask: &Path, options: EvalOptions) -> Result<EvalReport, Failure> {
    let pred = read_depth(pred)?;
    let gt = read_depth(gt)?;
    let tom = read_mask_png(mask)?;
    let report = evaluate_with(&pred, &gt, &tom, options)?;
    Ok(EvalReport::new(&report, options.log_base))
}

fn eval(args: &EvalArgs) -> Result<(), Failure> {
    let options = eval_options(args);
    if let (Some(pred), Some(gt), Some(mask)) = (&args.pred, &args.gt, &args.tom_mask) {
        require_inputs([pred.as_path(), gt.as_path(), mask.as_path()])?;
        let report = eval_pair(pred, gt, mask, options)?;
        write_json(&report, &args.out)?;
        return Ok(());
    }
    let Some(list) = &args.list else {
        return Err(Failure::Validation("eval needs --pred/--gt/--tom-mask or --list".into()));
    };
    require_inputs([list.as_path()])?;
    let mut reader = csv::Reader::from_path(list).map_err(|e| Failure::Validation(format!("{}: {e}", list.display())))?;
    let headers = reader
        .headers()
        .map_err(|e| Failure::Validation(format!("{}: {e}", list.display())))?
        .clone();
    if headers.iter().map(str::trim).collect::<Vec<_>>() != ["pred", "gt", "mask"] {
        return Err(Failure::Validation(format!(
            "{}: header must be `pred,gt,mask`",
            list.display()
        )));
    }
    let mut rows: Vec<PairRow> = reader
        .deserialize()
        .collect::<Result<_, _>>()
        .map_err(|e| Failure::Validation(format!("{}: {e}", list.display())))?;
    rows.sort_by(|a, b| (&a.pred, &a.gt, &a.mask).cmp(&(&b.pred, &b.gt, &b.mask)));
    let base = list_dir(list);
    let resolved: Vec<[PathBuf; 3]> = rows
        .iter()
        .map(|r| [&r.pred, &r.gt, &r.mask].map(|p| resolve_relative(&base, p.trim())))
        .collect();
    require_inputs(resolved.iter().flatten().map(PathBuf::as_path))?;

    let items: Vec<BatchItem> = rows
        .par_iter()
        .zip(resolved.par_iter())
        .map(|(row, [pred, gt, mask])| {
            let (status, report, error) = match eval_pair(pred, gt, mask, options) {
                Ok(r) => (ItemStatus::Ok, Some(r), None),
                Err(e) => (ItemStatus::Error, None, Some(e.to_string())),
            };
            BatchItem {
                pred: row.pred.clone(),
                gt: row.gt.clone(),
                mask: row.mask.clone(),
                status,
                error,
                report,
            }
        })
        .collect();
    let summary = EvalSummary::new(options.align, options.log_base, items);
    write_json(&summary, &args.out)?;
    if let Some(csv_path) = &args.csv {
        write_summary_csv(&summary, csv_path)?;
    }
    finish_batch(summary.failed, summary.items.len())
}

// ---------------------------------------------------------------- fuse

fn fuse(args: &FuseArgs) -> Result<(), Failure> {
    require_inputs(args.images.iter().map(PathBuf::as_path))?;
    let workdir = args.workdir.clone().unwrap_or_else(std::env::temp_dir);
    let spec = CodecSpec::parse(&args.codec, &workdir).map_err(Failure::Validation)?;
    if matches!(spec, CodecSpec::External { .. }) {
        ensure_dir(&workdir)?;
    }
    let codec = spec.build();
    let images = args
        .images
        .iter()
        .map(read_pfm)
        .collect::<Result<Vec<_>, _>>()?;
    if let Some(bad) = images.iter().position(|img| !img.same_shape(&images[0])) {
        return Err(Failure::Processing(format!(
            "{} does not match the dimensions of {}",
            args.images[bad].display(),
            args.images[0].display()
        )));
    }
    let latents = images
        .par_iter()
        .map(|img| codec.encode(img))
        .collect::<Result<Vec<_>, _>>()?;
    let fused = codec.decode(&mean_latents(&latents)?)?;
    write_pfm(&fused, &args.out)?;
    Ok(())
}

// ---------------------------------------------------------------- synth

/// Contents of `scene.json`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SceneRecord {
    pub preset: Preset,
    pub seed: u64,
    pub config: SceneConfig,
}

fn synth(args: &SynthArgs) -> Result<(), Failure> {
    let mut config = match args.preset {
        Preset::Default => SceneConfig::default(),
    };
    if let Some(offset) = args.offset {
        config.virtual_offset = offset;
    }
    if let Some(noise) = args.noise {
        config.noise_sigma = noise;
    }
    config.validate().map_err(invalid)?;
    let scene = make_mirror_scene(&config, args.seed)?;
    ensure_dir(&args.out)?;
    write_depth_pfm(&scene.gt_depth, args.out.join("gt.pfm"))?;
    write_depth_pfm(&scene.contaminated_depth, args.out.join("contaminated.pfm"))?;
    write_mask_png(&scene.tom_mask, args.out.join("mask.png"))?;
    write_pfm(&scene.reflectance, args.out.join("reflectance.pfm"))?;
    let record = SceneRecord {
        preset: args.preset,
        seed: args.seed,
        config,
    };
    write_json(&record, args.out.join("scene.json"))?;
    Ok(())
}
