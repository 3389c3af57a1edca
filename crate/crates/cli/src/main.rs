use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use flurry::dataset::{self, load_dataset, mix_datasets, Branch, Dataset, Manifest};
use flurry::eval::{eval_images, evaluate, load_predictions, PredictionFormat, DEFAULT_IOU_THRESHOLD};
use flurry::RunConfig;

mod bosch;

/// Synthetic snow augmentation and detection evaluation.
#[derive(Debug, Parser)]
#[command(name = "flurry", version)]
struct Cli {
    /// Master seed for every random draw (overrides the config file).
    #[arg(long, global = true)]
    seed: Option<u64>,

    /// Worker threads (overrides the config file).
    #[arg(long, global = true)]
    workers: Option<usize>,

    /// Flat TOML run configuration.
    #[arg(long, global = true)]
    config: Option<PathBuf>,

    /// Annotation format of datasets read and written.
    #[arg(long, global = true, value_parser = ["yolo", "jsonl"])]
    format: Option<String>,

    /// Log more (repeat for debug output).
    #[arg(short, long, global = true, action = clap::ArgAction::Count)]
    verbose: u8,

    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Args)]
struct DatasetArgs {
    /// Input dataset root (images/ plus labels).
    input: Option<PathBuf>,
    /// Output dataset root.
    output: Option<PathBuf>,
    /// Only process images whose file names are listed (one per line).
    #[arg(long)]
    list: Option<PathBuf>,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Add synthetic snow to every image of a dataset.
    Generate(DatasetArgs),
    /// Emit a training set mixing original and snowy images.
    Mix {
        #[command(flatten)]
        data: DatasetArgs,
        /// Probability of emitting the synthesized image.
        #[arg(long)]
        p_synthetic: Option<f64>,
    },
    /// Score detector predictions against ground truth.
    Eval {
        /// Ground-truth dataset root.
        gt: PathBuf,
        /// Prediction directory (or JSONL file).
        pred: PathBuf,
        #[arg(long, default_value = "absolute", value_parser = ["absolute", "yolo", "jsonl"])]
        pred_format: String,
        /// Where to write the JSON report.
        #[arg(long, default_value = "eval_report.json")]
        report: PathBuf,
        #[arg(long, default_value_t = DEFAULT_IOU_THRESHOLD)]
        iou_threshold: f64,
    },
    /// Convert a Bosch Small Traffic Lights YAML index to a YOLO dataset.
    ImportBosch { yaml: PathBuf, output: PathBuf },
    /// Print dataset statistics.
    Inspect {
        input: PathBuf,
        #[arg(long)]
        json: bool,
    },
}

/// Exit 1: the run finished but some items failed. Exit 2: bad config or input.
enum Failure {
    Partial(String),
    Usage(String),
}

impl Failure {
    fn usage(e: impl std::fmt::Display) -> Self {
        Failure::Usage(e.to_string())
    }
}

type CmdResult = Result<(), Failure>;

fn main() -> ExitCode {
    let cli = Cli::parse();
    let level = match cli.verbose {
        0 => log::LevelFilter::Warn,
        1 => log::LevelFilter::Info,
        _ => log::LevelFilter::Debug,
    };
    env_logger::Builder::new().filter_level(level).init();

    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Partial(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(1)
        }
        Err(Failure::Usage(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
    }
}

fn resolve_config(cli: &Cli) -> Result<RunConfig, Failure> {
    let mut cfg = match &cli.config {
        Some(path) => RunConfig::from_file(path).map_err(Failure::usage)?,
        None => RunConfig::default(),
    };
    if let Some(seed) = cli.seed {
        cfg.set_seed(seed);
    }
    if let Some(w) = cli.workers {
        cfg.workers = w;
    }
    if let Some(f) = &cli.format {
        cfg.io.format = f.parse().map_err(Failure::usage)?;
    }
    cfg.validate().map_err(Failure::usage)?;
    Ok(cfg)
}

fn run(cli: Cli) -> CmdResult {
    let mut cfg = resolve_config(&cli)?;
    match cli.command {
        Command::Generate(data) => {
            cfg.mix.p_synthetic = 1.0;
            cmd_mix(&cfg, &data)
        }
        Command::Mix { data, p_synthetic } => {
            if let Some(p) = p_synthetic {
                cfg.mix.p_synthetic = p;
                cfg.validate().map_err(Failure::usage)?;
            }
            cmd_mix(&cfg, &data)
        }
        Command::Eval {
            gt,
            pred,
            pred_format,
            report,
            iou_threshold,
        } => cmd_eval(&cfg, &gt, &pred, &pred_format, &report, iou_threshold),
        Command::ImportBosch { yaml, output } => cmd_import_bosch(&yaml, &output),
        Command::Inspect { input, json } => cmd_inspect(&cfg, &input, json),
    }
}

fn read_list(path: &Path) -> Result<Vec<String>, Failure> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| Failure::Usage(format!("{}: {e}", path.display())))?;
    Ok(text
        .lines()
        .map(str::trim)
        .filter(|l| !l.is_empty())
        .map(String::from)
        .collect())
}

fn load(cfg: &RunConfig, input: &Path, list: Option<&Path>) -> Result<Dataset, Failure> {
    if !input.is_dir() {
        return Err(Failure::Usage(format!(
            "{}: input directory not found or unreadable",
            input.display()
        )));
    }
    let mut data = load_dataset(input, cfg.io.format).map_err(Failure::usage)?;
    if let Some(list) = list {
        data.retain_listed(&read_list(list)?);
    }
    Ok(data)
}

fn cmd_mix(cfg: &RunConfig, args: &DatasetArgs) -> CmdResult {
    let input = args
        .input
        .clone()
        .or_else(|| cfg.io.input.clone())
        .ok_or_else(|| Failure::usage("no input directory given"))?;
    let output = args
        .output
        .clone()
        .or_else(|| cfg.io.output.clone())
        .ok_or_else(|| Failure::usage("no output directory given"))?;
    let data = load(cfg, &input, args.list.as_deref())?;
    let manifest = mix_datasets(&data.items, &cfg.snow, &cfg.mix, cfg.io.format, &output, cfg.workers)
        .map_err(|e| Failure::Partial(e.to_string()))?;
    report_manifest(&manifest, &output)
}

fn report_manifest(manifest: &Manifest, output: &Path) -> CmdResult {
    println!(
        "{} original, {} synthetic, {} failed",
        manifest.count(Branch::Original),
        manifest.count(Branch::Synthetic),
        manifest.failed()
    );
    println!("manifest: {}", output.join(dataset::MANIFEST_FILE).display());
    let failed: Vec<String> = manifest
        .records
        .iter()
        .filter_map(|r| r.error.as_ref().map(|e| format!("  {}: {e}", r.source)))
        .collect();
    if failed.is_empty() {
        Ok(())
    } else {
        Err(Failure::Partial(format!(
            "{} item(s) failed:\n{}",
            failed.len(),
            failed.join("\n")
        )))
    }
}

fn cmd_eval(
    cfg: &RunConfig,
    gt: &Path,
    pred: &Path,
    pred_format: &str,
    report: &Path,
    threshold: f64,
) -> CmdResult {
    if !(threshold > 0.0 && threshold < 1.0) {
        return Err(Failure::Usage(format!("iou threshold {threshold} outside (0, 1)")));
    }
    let data = load(cfg, gt, None)?;
    let format: PredictionFormat = pred_format.parse().map_err(Failure::usage)?;
    let predictions = load_predictions(&data.items, pred, format).map_err(Failure::usage)?;
    let images = eval_images(&data.items, predictions);
    let result = evaluate(&images, threshold).map_err(Failure::usage)?;
    result
        .save(report)
        .map_err(|e| Failure::Partial(e.to_string()))?;
    print!("{}", result.table());
    Ok(())
}

fn cmd_import_bosch(yaml: &Path, output: &Path) -> CmdResult {
    let text = std::fs::read_to_string(yaml)
        .map_err(|e| Failure::Usage(format!("{}: {e}", yaml.display())))?;
    let entries = bosch::parse_index(&text)
        .map_err(|e| Failure::Usage(format!("{}: {e}", yaml.display())))?;
    let yaml_dir = yaml.parent().unwrap_or(Path::new("."));
    let summary = bosch::import(&entries, yaml_dir, output)
        .map_err(|e| Failure::Partial(format!("{}: {e}", output.display())))?;
    println!(
        "{} images, {} boxes, {} skipped boxes",
        summary.images, summary.boxes, summary.skipped_boxes
    );
    if summary.failures.is_empty() {
        Ok(())
    } else {
        Err(Failure::Partial(summary.failures.join("\n")))
    }
}

fn cmd_inspect(cfg: &RunConfig, input: &Path, json: bool) -> CmdResult {
    let data = load(cfg, input, None)?;
    let stats = data.stats();
    if json {
        println!(
            "{}",
            serde_json::to_string_pretty(&stats).map_err(Failure::usage)?
        );
        return Ok(());
    }
    println!("images:          {}", stats.images);
    println!("boxes:           {}", stats.boxes);
    println!("dropped boxes:   {}", stats.dropped_boxes);
    println!("empty images:    {}", stats.empty_images);
    println!("boxes per image: {:.3}", stats.mean_boxes_per_image);
    if let (Some(lo), Some(hi)) = (stats.min_box_area, stats.max_box_area) {
        println!("box area:        {lo:.1} .. {hi:.1} px^2");
    }
    for (size, n) in &stats.image_sizes {
        println!("size {size}: {n}");
    }
    for (class, n) in &stats.class_counts {
        println!("class {class}: {n}");
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use clap::CommandFactory;
    use flurry::dataset::AnnotationFormat;

    #[test]
    fn cli_definition_is_consistent() {
        Cli::command().debug_assert();
    }

    #[test]
    fn format_flag_parses() {
        let cli = Cli::try_parse_from(["flurry", "--format", "jsonl", "--seed", "3", "inspect", "x"]).unwrap();
        let cfg = resolve_config(&cli).ok().unwrap();
        assert_eq!(cfg.io.format, AnnotationFormat::Jsonl);
        assert_eq!(cfg.snow.seed, 3);
    }
}
