//! `tempokit` — one binary over the whole toolkit: dataset evaluation
//! with sliced AUC reports, threshold-curve emission, raw model-output
//! parsing, rule-based query post-processing, synthetic supervision
//! planning, and the attention-kernel invariant suite.
//!
//! Exit codes: 0 success, 2 schema/usage error, 3 invariant failure,
//! 4 IO error.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Deserialize;

use tempokit::dattn::check::{CheckConfig, FaultInjection};
use tempokit::dattn::TextMode;
use tempokit::error::Error;
use tempokit::intervals::SampleScores;
use tempokit::io as tio;
use tempokit::metrics;
use tempokit::parsers::{FrameIndexBase, FrameTimebase};
use tempokit::postproc::{self, DropReason, FormatHeuristics, PostprocConfig};
use tempokit::synthgen::{self, ActiveModality};

const EXIT_SCHEMA: u8 = 2;
const EXIT_INVARIANT: u8 = 3;
const EXIT_IO: u8 = 4;

/// Environment variable naming a JSON file with default flag values.
const CONFIG_ENV: &str = "TEMPOKIT_CONFIG";

#[derive(Parser)]
#[command(name = "tempokit", version, about = "Temporal retrieval evaluation toolkit")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Score predictions against ground truth and write the sliced report.
    Evaluate(EvaluateArgs),
    /// Write accuracy-threshold curves as CSV.
    Curves(CurvesArgs),
    /// Convert raw model-output text into canonical prediction JSONL.
    Parse(ParseArgs),
    /// Filter generated query candidates through the four rules.
    Postprocess(PostprocessArgs),
    /// Plan a synthetic training video and emit its supervision pairs.
    Synth(SynthArgs),
    /// Run the decomposed-attention invariant suite.
    DattnCheck(DattnCheckArgs),
}

#[derive(Args)]
struct EvaluateArgs {
    /// Ground-truth JSONL file.
    #[arg(long)]
    ground_truth: PathBuf,
    /// Prediction JSONL file (ranges or raw_text per line).
    #[arg(long)]
    predictions: PathBuf,
    /// Directory for report.json, report.md, and curves.csv.
    #[arg(long)]
    out_dir: PathBuf,
    /// Threshold grid size for the AUC sweep.
    #[arg(long)]
    grid_n: Option<usize>,
    /// Merge gap (seconds) applied to predictions before scoring.
    #[arg(long)]
    merge_gap: Option<f64>,
}

#[derive(Args)]
struct CurvesArgs {
    #[arg(long)]
    ground_truth: PathBuf,
    #[arg(long)]
    predictions: PathBuf,
    /// Output CSV path.
    #[arg(long)]
    out: PathBuf,
    #[arg(long)]
    grid_n: Option<usize>,
    #[arg(long)]
    merge_gap: Option<f64>,
}

#[derive(Clone, Copy, ValueEnum)]
enum ParseKind {
    /// Clock timestamps and bare seconds.
    Timestamps,
    /// Frame index ranges.
    Frames,
}

#[derive(Clone, Copy, ValueEnum)]
enum FrameMode {
    /// Frames sampled at --fps.
    Dense,
    /// --n-frames sampled uniformly over the video.
    Uniform,
}

#[derive(Clone, Copy, ValueEnum)]
enum IndexBaseArg {
    Zero,
    One,
}

#[derive(Args)]
struct ParseArgs {
    /// Raw prediction JSONL (raw_text entries; range entries pass through).
    #[arg(long)]
    input: PathBuf,
    /// Canonical prediction JSONL to write.
    #[arg(long)]
    output: PathBuf,
    /// Ground-truth JSONL supplying per-query video durations.
    #[arg(long)]
    duration_from: PathBuf,
    /// Which grammar the raw text uses.
    #[arg(long, value_enum, default_value_t = ParseKind::Timestamps)]
    kind: ParseKind,
    /// Frame sampling mode (frames kind only).
    #[arg(long, value_enum, default_value_t = FrameMode::Dense)]
    mode: FrameMode,
    /// Frames per second for dense mode.
    #[arg(long)]
    fps: Option<f64>,
    /// Total sampled frames for uniform mode.
    #[arg(long)]
    n_frames: Option<u64>,
    /// Whether the model counts frames from zero or one.
    #[arg(long, value_enum, default_value_t = IndexBaseArg::Zero)]
    index_base: IndexBaseArg,
    #[arg(long)]
    merge_gap: Option<f64>,
}

#[derive(Args)]
struct PostprocessArgs {
    /// Candidate JSONL: {"query","ranges","confidence"[,"source"]}.
    #[arg(long)]
    input: PathBuf,
    /// Output JSONL for kept candidates.
    #[arg(long)]
    kept: PathBuf,
    /// Output JSONL for dropped candidates with reasons.
    #[arg(long)]
    dropped: PathBuf,
    /// Merge gap in seconds (rule 1).
    #[arg(long)]
    gap: Option<f64>,
    /// Confidence cutoff (rule 2).
    #[arg(long)]
    min_confidence: Option<f64>,
    /// Maximum merged ranges before a query is too general (rule 3).
    #[arg(long)]
    max_ranges: Option<usize>,
    /// Extra blocklist phrases, one per line (rule 4).
    #[arg(long)]
    blocklist: Option<PathBuf>,
}

#[derive(Clone, Copy, ValueEnum)]
enum ModalityArg {
    Visual,
    Audio,
}

#[derive(Args)]
struct SynthArgs {
    /// Seed for the whole plan.
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Number of source items to synthesize.
    #[arg(long, default_value_t = 10)]
    n_samples: usize,
    /// Frame rate of the planned video.
    #[arg(long)]
    fps: Option<f64>,
    /// Which stream the manifest exercises.
    #[arg(long, value_enum, default_value_t = ModalityArg::Visual)]
    modality: ModalityArg,
    /// Manifest JSON output path.
    #[arg(long)]
    manifest_out: PathBuf,
    /// Training-example JSONL output path.
    #[arg(long)]
    tasks_out: PathBuf,
}

#[derive(Clone, Copy, ValueEnum)]
enum TextModeArg {
    Fixed,
    Adaptive,
}

#[derive(Clone, Copy, ValueEnum)]
enum FaultArg {
    SignFlip,
}

#[derive(Args)]
struct DattnCheckArgs {
    /// Number of random seeds for the equivalence trials.
    #[arg(long, default_value_t = 100)]
    seeds: u64,
    /// Model widths to cycle through.
    #[arg(long, value_delimiter = ',', default_values_t = vec![8usize, 16, 32])]
    dims: Vec<usize>,
    /// Text-branch combination rule used in layer-level checks.
    #[arg(long, value_enum, default_value_t = TextModeArg::Fixed)]
    mode: TextModeArg,
    /// Corrupt a kernel output to prove the suite detects faults.
    #[arg(long, value_enum, hide = true)]
    inject_fault: Option<FaultArg>,
}

/// Optional defaults loaded from the file named by `TEMPOKIT_CONFIG`.
#[derive(Debug, Default, Deserialize)]
struct ConfigDefaults {
    grid_n: Option<usize>,
    merge_gap: Option<f64>,
    gap: Option<f64>,
    min_confidence: Option<f64>,
    max_ranges: Option<usize>,
    fps: Option<f64>,
}

impl ConfigDefaults {
    fn load() -> Result<Self, Error> {
        match std::env::var_os(CONFIG_ENV) {
            None => Ok(Self::default()),
            Some(path) => {
                let body = fs::read_to_string(&path)?;
                serde_json::from_str(&body).map_err(|e| {
                    Error::Schema(format!("{}: {e}", Path::new(&path).display()))
                })
            }
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let defaults = match ConfigDefaults::load() {
        Ok(d) => d,
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(exit_code_for(&e));
        }
    };
    let outcome = match cli.command {
        Command::Evaluate(args) => run_evaluate(args, &defaults),
        Command::Curves(args) => run_curves(args, &defaults),
        Command::Parse(args) => run_parse(args, &defaults),
        Command::Postprocess(args) => run_postprocess(args, &defaults),
        Command::Synth(args) => run_synth(args, &defaults),
        Command::DattnCheck(args) => return run_dattn_check(args),
    };
    match outcome {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code_for(&e))
        }
    }
}

fn exit_code_for(error: &Error) -> u8 {
    match error {
        Error::Io(_) => EXIT_IO,
        Error::EmptyAttention | Error::DegenerateAttention(_) | Error::Numeric(_) => {
            EXIT_INVARIANT
        }
        _ => EXIT_SCHEMA,
    }
}

fn print_warnings(warnings: &[String]) {
    for w in warnings {
        eprintln!("warning: {w}");
    }
}

fn load_scored(
    ground_truth: &Path,
    predictions: &Path,
    merge_gap: f64,
) -> Result<Vec<metrics::EvaluatedSample>, Error> {
    let records = tio::load_ground_truth(ground_truth)?;
    let entries = tio::load_prediction_entries(predictions)?;
    let durations = tio::duration_index(&records);
    let loaded = tio::resolve_prediction_entries(
        &entries,
        &durations,
        merge_gap,
        &tio::RawTextParser::Timestamps,
    )?;
    print_warnings(&loaded.warnings);
    metrics::evaluate(&records, &loaded.to_map())
}

fn run_evaluate(args: EvaluateArgs, defaults: &ConfigDefaults) -> Result<(), Error> {
    let grid_n = args.grid_n.or(defaults.grid_n).unwrap_or(1001);
    let merge_gap = args.merge_gap.or(defaults.merge_gap).unwrap_or(0.0);
    let evaluated = load_scored(&args.ground_truth, &args.predictions, merge_gap)?;
    let report = metrics::report(&evaluated, grid_n)?;
    fs::create_dir_all(&args.out_dir)?;
    tio::write_report_json(&args.out_dir.join("report.json"), &report)?;
    tio::write_report_markdown(&args.out_dir.join("report.md"), &report)?;
    let scores: Vec<SampleScores> = evaluated.iter().map(|e| e.scores).collect();
    let rows = tio::curve_rows(&scores, grid_n)?;
    tio::write_curve_csv(&args.out_dir.join("curves.csv"), &rows)?;
    println!(
        "evaluated {} queries ({} missing predictions): precision_auc {:.4}, recall_auc {:.4}, iou_auc {:.4}",
        report.overall.n_queries,
        report.missing_predictions,
        report.overall.precision_auc,
        report.overall.recall_auc,
        report.overall.iou_auc
    );
    Ok(())
}

fn run_curves(args: CurvesArgs, defaults: &ConfigDefaults) -> Result<(), Error> {
    let grid_n = args.grid_n.or(defaults.grid_n).unwrap_or(1001);
    let merge_gap = args.merge_gap.or(defaults.merge_gap).unwrap_or(0.0);
    let evaluated = load_scored(&args.ground_truth, &args.predictions, merge_gap)?;
    let scores: Vec<SampleScores> = evaluated.iter().map(|e| e.scores).collect();
    let rows = tio::curve_rows(&scores, grid_n)?;
    tio::write_curve_csv(&args.out, &rows)?;
    println!("wrote {} curve rows to {}", rows.len(), args.out.display());
    Ok(())
}

fn run_parse(args: ParseArgs, defaults: &ConfigDefaults) -> Result<(), Error> {
    let merge_gap = args.merge_gap.or(defaults.merge_gap).unwrap_or(0.0);
    let records = tio::load_ground_truth(&args.duration_from)?;
    let durations = tio::duration_index(&records);
    let entries = tio::load_prediction_entries(&args.input)?;
    let parser = match args.kind {
        ParseKind::Timestamps => tio::RawTextParser::Timestamps,
        ParseKind::Frames => {
            let timebase = match args.mode {
                FrameMode::Dense => FrameTimebase::Dense {
                    fps: args.fps.or(defaults.fps).unwrap_or(1.0),
                },
                FrameMode::Uniform => FrameTimebase::Uniform {
                    n_frames: args.n_frames.ok_or_else(|| {
                        Error::InvalidInput(
                            "--n-frames is required with --mode uniform".into(),
                        )
                    })?,
                },
            };
            let index_base = match args.index_base {
                IndexBaseArg::Zero => FrameIndexBase::Zero,
                IndexBaseArg::One => FrameIndexBase::One,
            };
            tio::RawTextParser::Frames {
                timebase,
                index_base,
            }
        }
    };
    let loaded = tio::resolve_prediction_entries(&entries, &durations, merge_gap, &parser)?;
    print_warnings(&loaded.warnings);
    tio::write_predictions_jsonl(&args.output, &loaded.entries)?;
    println!(
        "parsed {} predictions ({} warnings) into {}",
        loaded.entries.len(),
        loaded.warnings.len(),
        args.output.display()
    );
    Ok(())
}

fn run_postprocess(args: PostprocessArgs, defaults: &ConfigDefaults) -> Result<(), Error> {
    let mut config = PostprocConfig {
        merge_gap_s: args.gap.or(defaults.gap).unwrap_or(0.5),
        min_confidence: args
            .min_confidence
            .or(defaults.min_confidence)
            .unwrap_or(0.9),
        max_ranges: args.max_ranges.or(defaults.max_ranges).unwrap_or(10),
        ..PostprocConfig::default()
    };
    if let Some(path) = &args.blocklist {
        let body = fs::read_to_string(path)?;
        config.blocklist.extend(
            body.lines()
                .map(str::trim)
                .filter(|l| !l.is_empty())
                .map(String::from),
        );
    }
    let candidates = tio::load_candidates(&args.input)?;
    let report = postproc::pipeline(&candidates, &config);
    tio::write_filter_report(&args.kept, &args.dropped, &report, &FormatHeuristics::default())?;
    println!("candidates: {}", report.total());
    println!("kept:       {}", report.kept.len());
    for (reason, label) in [
        (DropReason::EmptyAfterMerge, "empty_after_merge"),
        (DropReason::LowConfidence, "low_confidence"),
        (DropReason::TooGeneral, "too_general"),
        (DropReason::MachineStyle, "machine_style"),
    ] {
        println!("dropped/{label}: {}", report.count_with_reason(reason));
    }
    Ok(())
}

fn run_synth(args: SynthArgs, defaults: &ConfigDefaults) -> Result<(), Error> {
    if args.n_samples == 0 {
        return Err(Error::InvalidInput("--n-samples must be at least 1".into()));
    }
    let fps = args.fps.or(defaults.fps).unwrap_or(1.0);
    let manifest = match args.modality {
        ModalityArg::Visual => {
            let items = synthgen::placeholder_visual_items(args.seed, args.n_samples);
            synthgen::assemble_visual(&items, args.seed, fps)?
        }
        ModalityArg::Audio => {
            let clips = synthgen::placeholder_audio_clips(args.seed, args.n_samples);
            synthgen::splice_audio(&clips, args.seed)?
        }
    };
    let tasks = synthgen::emit_tasks(&manifest);
    tio::write_manifest_json(&args.manifest_out, &manifest)?;
    tio::write_training_examples(&args.tasks_out, &tasks)?;
    println!(
        "planned a {:.1} s {} manifest with {} segments and {} training examples",
        manifest.total_duration_s,
        match manifest.active_modality {
            ActiveModality::Visual => "visual",
            ActiveModality::Audio => "audio",
        },
        manifest.segments.len(),
        tasks.len()
    );
    Ok(())
}

fn run_dattn_check(args: DattnCheckArgs) -> ExitCode {
    let config = CheckConfig {
        seeds: args.seeds,
        dims: if args.dims.is_empty() {
            vec![8, 16, 32]
        } else {
            args.dims.clone()
        },
        text_mode: match args.mode {
            TextModeArg::Fixed => TextMode::Fixed,
            TextModeArg::Adaptive => TextMode::Adaptive,
        },
        fault: args.inject_fault.map(|FaultArg::SignFlip| {
            FaultInjection::DecompositionSignFlip
        }),
    };
    let report = tempokit::dattn::check::run_suite(&config);
    print!("{}", report.to_table());
    if report.all_passed() {
        println!("all checks passed");
        ExitCode::SUCCESS
    } else {
        let failed = report
            .first_failure()
            .map(|o| o.name)
            .unwrap_or("unknown");
        eprintln!("error: invariant check failed: {failed}");
        ExitCode::from(EXIT_INVARIANT)
    }
}
