use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use log::warn;

use predmatch::error::{Error, Result};
use predmatch::experiment::{scatter_points, sweep, PairEntry};
use predmatch::io::{
    read_json, read_manifest, read_predictions, write_match_summary, write_predictions,
    write_report, write_scatter_csv, write_sweep_csv, LogFormat, MatchSummary, ReportFormat,
};
use predmatch::matcher::{
    orient, repeat_match, MatchConfig, MatchCriterion, TargetOrder, DEFAULT_EPSILON, DEFAULT_RUNS,
};
use predmatch::metrics::{build_report_with, BinningSpec, ReportOptions, DEFAULT_BINS};
use predmatch::model::PredictionSet;
use predmatch::synth::{sample_set, SynthSpec};

/// Compare a classifier on two test datasets using matched prediction subsets.
///
/// Prediction logs hold one record per line with 0-based labels:
/// {"y": <ground truth>, "yhat": <predicted>, "p": <predicted probability>}.
/// Files ending in .csv are read as CSV with a `y,yhat,p` header.
#[derive(Debug, Parser)]
#[command(name = "predmatch", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Check a prediction log and print its accuracy and mean confidence.
    Validate {
        log: PathBuf,
        #[arg(long)]
        classes: u32,
        #[arg(long, value_enum)]
        log_format: Option<LogFormatArg>,
    },
    /// Match two logs and write per-run matched statistics as JSON.
    Match {
        #[command(flatten)]
        pair: PairArgs,
        #[command(flatten)]
        matching: MatchArgs,
        /// Output file; stdout when omitted.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Match two logs and write the full report.
    Eval {
        #[command(flatten)]
        pair: PairArgs,
        #[command(flatten)]
        matching: MatchArgs,
        #[command(flatten)]
        report: ReportArgs,
    },
    /// Evaluate every manifest entry and write a table sorted by source accuracy.
    Sweep {
        #[arg(long)]
        manifest: PathBuf,
        #[arg(long)]
        classes: u32,
        #[command(flatten)]
        matching: MatchArgs,
        #[arg(long, default_value_t = DEFAULT_BINS)]
        bins: usize,
        /// Output CSV; stdout when omitted.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Write a synthetic prediction log from a JSON spec.
    Synth {
        #[arg(long)]
        spec: PathBuf,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
    },
    /// Accuracy and mean confidence of every manifest log, as CSV.
    Scatter {
        #[arg(long)]
        manifest: PathBuf,
        #[arg(long)]
        classes: u32,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(Debug, Args)]
struct PairArgs {
    #[arg(long)]
    src: PathBuf,
    #[arg(long)]
    tgt: PathBuf,
    #[arg(long)]
    classes: u32,
    /// Log format for both inputs; inferred from the extension when omitted.
    #[arg(long, value_enum)]
    log_format: Option<LogFormatArg>,
    /// Swap source and target when the target is the larger set.
    #[arg(long)]
    auto_swap: bool,
}

#[derive(Debug, Args)]
struct MatchArgs {
    #[arg(long, default_value_t = DEFAULT_EPSILON)]
    epsilon: f64,
    #[arg(long, value_enum, default_value_t = CriterionArg::LabelProb)]
    criterion: CriterionArg,
    #[arg(long, default_value_t = DEFAULT_RUNS)]
    runs: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, value_enum, default_value_t = OrderArg::File)]
    target_order: OrderArg,
    /// Also report the source records that were never matched.
    #[arg(long)]
    include_unmatched_src: bool,
}

#[derive(Debug, Args)]
struct ReportArgs {
    #[arg(long, default_value_t = DEFAULT_BINS)]
    bins: usize,
    #[arg(long, default_value = "report.json")]
    out: PathBuf,
    #[arg(long, value_enum, default_value_t = FormatArg::Json)]
    format: FormatArg,
    /// Emit curves for every run, not only the first.
    #[arg(long)]
    all_runs: bool,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum CriterionArg {
    LabelProb,
    Prob,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum OrderArg {
    File,
    Shuffle,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum FormatArg {
    Json,
    CsvBundle,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum LogFormatArg {
    Jsonl,
    Csv,
}

impl MatchArgs {
    fn config(&self) -> Result<MatchConfig> {
        let cfg = MatchConfig {
            epsilon: self.epsilon,
            criterion: match self.criterion {
                CriterionArg::LabelProb => MatchCriterion::LabelAndProbability,
                CriterionArg::Prob => MatchCriterion::ProbabilityOnly,
            },
            seed: self.seed,
            target_order: match self.target_order {
                OrderArg::File => TargetOrder::FileOrder,
                OrderArg::Shuffle => TargetOrder::ShuffledPerSeed,
            },
        };
        cfg.validate()?;
        Ok(cfg)
    }
}

fn load(path: &Path, classes: u32, format: Option<LogFormatArg>) -> Result<PredictionSet> {
    let format = match format {
        Some(LogFormatArg::Jsonl) => LogFormat::JsonLines,
        Some(LogFormatArg::Csv) => LogFormat::Csv,
        None => LogFormat::from_path(path),
    };
    let set = read_predictions(path, format, classes)?;
    let below = set.below_chance_count();
    if below > 0 {
        warn!(
            "{}: {below} record(s) have confidence below 1/{classes}",
            path.display()
        );
    }
    Ok(set)
}

fn output(path: Option<&Path>) -> Result<Box<dyn Write>> {
    Ok(match path {
        Some(p) => Box::new(BufWriter::new(File::create(p).map_err(|e| Error::Io {
            path: p.to_path_buf(),
            source: e,
        })?)),
        None => Box::new(io::stdout().lock()),
    })
}

fn load_entries(manifest: &Path, classes: u32) -> Result<Vec<PairEntry>> {
    read_manifest(manifest)?
        .into_iter()
        .map(|row| {
            let src = load(&row.src_path, classes, None)?;
            let tgt = load(&row.tgt_path, classes, None)?;
            PairEntry::new(row.name, src, tgt)
        })
        .collect()
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Validate {
            log,
            classes,
            log_format,
        } => {
            let set = load(&log, classes, log_format)?;
            println!(
                "{}: {} records, {} classes, accuracy {}, mean confidence {}, below chance {}",
                log.display(),
                set.len(),
                set.num_classes(),
                set.accuracy(),
                set.mean_confidence(),
                set.below_chance_count()
            );
        }
        Command::Match {
            pair,
            matching,
            out,
        } => {
            let cfg = matching.config()?;
            let src = load(&pair.src, pair.classes, pair.log_format)?;
            let tgt = load(&pair.tgt, pair.classes, pair.log_format)?;
            let (src, tgt, swapped) = orient(&src, &tgt, pair.auto_swap);
            let outcomes = repeat_match(src, tgt, &cfg, matching.runs)?;
            let summary =
                MatchSummary::new(&outcomes, cfg, swapped, matching.include_unmatched_src);
            match out {
                Some(path) => write_match_summary(&summary, &path)?,
                None => {
                    let text = serde_json::to_string_pretty(&summary).expect("summary serializes");
                    println!("{text}");
                }
            }
        }
        Command::Eval {
            pair,
            matching,
            report,
        } => {
            let cfg = matching.config()?;
            let bins = BinningSpec::new(report.bins)?;
            let src = load(&pair.src, pair.classes, pair.log_format)?;
            let tgt = load(&pair.tgt, pair.classes, pair.log_format)?;
            let (src, tgt, _) = orient(&src, &tgt, pair.auto_swap);
            let outcomes = repeat_match(src, tgt, &cfg, matching.runs)?;
            let options = ReportOptions {
                all_runs: report.all_runs,
                include_unmatched_src: matching.include_unmatched_src,
            };
            let built = build_report_with(src, tgt, &outcomes, bins, options)?;
            let format = match report.format {
                FormatArg::Json => ReportFormat::Json,
                FormatArg::CsvBundle => ReportFormat::CsvBundle,
            };
            write_report(&built, &report.out, format)?;
        }
        Command::Sweep {
            manifest,
            classes,
            matching,
            bins,
            out,
        } => {
            let cfg = matching.config()?;
            let bins = BinningSpec::new(bins)?;
            let entries = load_entries(&manifest, classes)?;
            let rows = sweep(&entries, &cfg, matching.runs, bins)?;
            write_sweep_csv(&rows, output(out.as_deref())?)?;
        }
        Command::Synth { spec, seed, out } => {
            let spec: SynthSpec = read_json(&spec)?;
            let name = out
                .file_stem()
                .map(|s| s.to_string_lossy().into_owned())
                .unwrap_or_else(|| "synthetic".into());
            let set = sample_set(&spec, seed, &name)?;
            write_predictions(&set, &out)?;
        }
        Command::Scatter {
            manifest,
            classes,
            out,
        } => {
            let entries = load_entries(&manifest, classes)?;
            write_scatter_csv(&scatter_points(&entries)?, output(out.as_deref())?)?;
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() {
                ExitCode::from(1)
            } else {
                ExitCode::SUCCESS
            };
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(if e.is_io() { 2 } else { 1 })
        }
    }
}
