//! Prediction logs, manifests, and report serialization.
//!
//! Prediction logs use 0-based labels. The canonical format is JSON lines,
//! one object per line with keys `y` (ground truth), `yhat` (predicted
//! label), `p` (predicted probability) and an optional `id` string:
//!
//! ```text
//! {"y":3,"yhat":3,"p":0.8675}
//! ```
//!
//! CSV logs must start with a header naming the columns `y,yhat,p` (and
//! optionally `id`). Reals are written with the shortest decimal that parses
//! back to the same f64.

use std::fs::{self, File};
use std::io::{BufRead, BufReader, BufWriter, Read, Write};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::experiment::{ScatterPoint, SweepRow};
use crate::matcher::{MatchConfig, MatchOutcome};
use crate::metrics::{Report, RunSummary, SubsetCurves};
use crate::model::{check_record, PredictionRecord, PredictionSet};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LogFormat {
    JsonLines,
    Csv,
}

impl LogFormat {
    /// `.csv` files are CSV; everything else is JSON lines.
    pub fn from_path(path: &Path) -> Self {
        match path.extension().and_then(|e| e.to_str()) {
            Some(ext) if ext.eq_ignore_ascii_case("csv") => LogFormat::Csv,
            _ => LogFormat::JsonLines,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ReportFormat {
    Json,
    /// A directory with `scalars.csv`, `runs.csv`, and one CSV per curve
    /// and histogram.
    CsvBundle,
}

#[derive(Debug, Deserialize, Serialize)]
struct LogLine {
    y: u32,
    yhat: u32,
    p: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    id: Option<String>,
}

fn parse_error(
    source: &str,
    line: usize,
    id: Option<&str>,
    message: impl std::fmt::Display,
) -> Error {
    let message = match id {
        Some(id) => format!("record '{id}': {message}"),
        None => message.to_string(),
    };
    Error::Parse {
        path: source.to_string(),
        line,
        message,
    }
}

/// Reads a prediction log. The set is named after the file stem.
pub fn read_predictions(path: &Path, format: LogFormat, num_classes: u32) -> Result<PredictionSet> {
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    let name = path
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| path.display().to_string());
    parse_predictions(
        file,
        format,
        num_classes,
        &path.display().to_string(),
        &name,
    )
}

/// Parses a prediction log from any reader. `source` names the input in
/// error messages.
pub fn parse_predictions<R: Read>(
    reader: R,
    format: LogFormat,
    num_classes: u32,
    source: &str,
    name: &str,
) -> Result<PredictionSet> {
    if num_classes == 0 {
        return Err(Error::InvalidConfig(
            "number of classes must be positive".into(),
        ));
    }
    let lines = match format {
        LogFormat::JsonLines => parse_jsonl(reader, source)?,
        LogFormat::Csv => parse_csv(reader, source)?,
    };
    if lines.is_empty() {
        return Err(parse_error(source, 0, None, "empty prediction log"));
    }
    let mut records = Vec::with_capacity(lines.len());
    for (line_no, line) in lines {
        let record = PredictionRecord::new(records.len(), line.y, line.yhat, line.p);
        check_record(&record, num_classes)
            .map_err(|m| parse_error(source, line_no, line.id.as_deref(), m))?;
        records.push(record);
    }
    PredictionSet::new(name, num_classes, records)
}

fn parse_jsonl<R: Read>(reader: R, source: &str) -> Result<Vec<(usize, LogLine)>> {
    let mut out = Vec::new();
    for (i, line) in BufReader::new(reader).lines().enumerate() {
        let line_no = i + 1;
        let line = line.map_err(|e| Error::io(source, e))?;
        if line.trim().is_empty() {
            continue;
        }
        let parsed: LogLine =
            serde_json::from_str(&line).map_err(|e| parse_error(source, line_no, None, e))?;
        out.push((line_no, parsed));
    }
    Ok(out)
}

fn parse_csv<R: Read>(reader: R, source: &str) -> Result<Vec<(usize, LogLine)>> {
    let mut rdr = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .from_reader(reader);
    let headers = rdr
        .headers()
        .map_err(|e| parse_error(source, 1, None, e))?
        .clone();
    for required in ["y", "yhat", "p"] {
        if !headers.iter().any(|h| h == required) {
            return Err(parse_error(
                source,
                1,
                None,
                format!("CSV header must name columns y,yhat,p (missing '{required}')"),
            ));
        }
    }
    let mut out = Vec::new();
    for row in rdr.records() {
        let row = row.map_err(|e| {
            let line = e.position().map_or(0, |p| p.line() as usize);
            parse_error(source, line, None, e)
        })?;
        let line_no = row.position().map_or(0, |p| p.line() as usize);
        let parsed: LogLine = row
            .deserialize(Some(&headers))
            .map_err(|e| parse_error(source, line_no, None, e))?;
        out.push((line_no, parsed));
    }
    Ok(out)
}

/// Writes a set as JSON lines.
pub fn write_predictions(set: &PredictionSet, path: &Path) -> Result<()> {
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    let mut w = BufWriter::new(file);
    for r in set.records() {
        let line = LogLine {
            y: r.ground_truth.id(),
            yhat: r.predicted.id(),
            p: r.confidence,
            id: None,
        };
        serde_json::to_writer(&mut w, &line).map_err(|e| Error::io(path, e.into()))?;
        w.write_all(b"\n").map_err(|e| Error::io(path, e))?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

pub fn write_report(report: &Report, path: &Path, format: ReportFormat) -> Result<()> {
    match format {
        ReportFormat::Json => write_json(report, path),
        ReportFormat::CsvBundle => write_csv_bundle(report, path),
    }
}

pub fn read_report(path: &Path) -> Result<Report> {
    read_json(path)
}

pub fn write_json<T: Serialize>(value: &T, path: &Path) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value).map_err(|e| Error::io(path, e.into()))?;
    text.push('\n');
    fs::write(path, text).map_err(|e| Error::io(path, e))
}

pub fn read_json<T: for<'de> Deserialize<'de>>(path: &Path) -> Result<T> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    serde_json::from_str(&text).map_err(|e| Error::Parse {
        path: path.display().to_string(),
        line: e.line(),
        message: e.to_string(),
    })
}

fn opt(v: Option<f64>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

fn curve_stem(c: &SubsetCurves) -> String {
    match c.seed {
        Some(seed) => format!("{}_seed{seed}", c.subset.as_str()),
        None => c.subset.as_str().to_string(),
    }
}

struct CsvOut {
    path: PathBuf,
    w: csv::Writer<File>,
}

impl CsvOut {
    fn create(path: PathBuf, header: &[&str]) -> Result<Self> {
        let file = File::create(&path).map_err(|e| Error::io(&path, e))?;
        let mut out = CsvOut {
            w: csv::Writer::from_writer(file),
            path,
        };
        out.row(header.iter().map(|s| s.to_string()))?;
        Ok(out)
    }

    fn row(&mut self, fields: impl IntoIterator<Item = String>) -> Result<()> {
        self.w
            .write_record(fields.into_iter().collect::<Vec<_>>())
            .map_err(|e| Error::io(&self.path, e.into()))
    }

    fn finish(mut self) -> Result<()> {
        self.w.flush().map_err(|e| Error::io(&self.path, e))
    }
}

/// Flattened `(key, value)` scalars of a report, in a fixed order. Values
/// use shortest round-trip formatting; absent values are empty.
pub fn report_scalars(report: &Report) -> Vec<(String, String)> {
    let mut out: Vec<(String, String)> = Vec::new();
    let mut put = |k: &str, v: String| out.push((k.to_string(), v));
    put("src_name", report.src.name.clone());
    put("src_size", report.src.size.to_string());
    put("src_accuracy", report.src.accuracy.to_string());
    put(
        "src_mean_confidence",
        report.src.mean_confidence.to_string(),
    );
    put("tgt_name", report.tgt.name.clone());
    put("tgt_size", report.tgt.size.to_string());
    put("tgt_accuracy", report.tgt.accuracy.to_string());
    put(
        "tgt_mean_confidence",
        report.tgt.mean_confidence.to_string(),
    );
    put("accuracy_gap", report.accuracy_gap.to_string());
    for (key, stat) in [
        ("matched_accuracy_src", report.matched_accuracy_src),
        ("matched_accuracy_tgt", report.matched_accuracy_tgt),
        ("matched_gap", report.matched_gap),
        ("matched_pairs", Some(report.matched_pairs)),
        ("fraction_unmatched", Some(report.fraction_unmatched)),
        ("unmatched_accuracy", report.unmatched_accuracy),
    ] {
        put(&format!("{key}_mean"), opt(stat.map(|s| s.mean)));
        put(&format!("{key}_stderr"), opt(stat.map(|s| s.stderr)));
        put(
            &format!("{key}_runs"),
            stat.map(|s| s.runs.to_string()).unwrap_or_default(),
        );
    }
    let c = &report.config;
    put("epsilon", c.epsilon.to_string());
    put("criterion", format!("{:?}", c.criterion));
    put("target_order", format!("{:?}", c.target_order));
    put(
        "seeds",
        c.seeds
            .iter()
            .map(u64::to_string)
            .collect::<Vec<_>>()
            .join(" "),
    );
    put("runs", c.runs.to_string());
    put("bins", c.bins.to_string());
    put("prng", c.prng.clone());
    out
}

fn write_csv_bundle(report: &Report, dir: &Path) -> Result<()> {
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;

    let mut scalars = CsvOut::create(dir.join("scalars.csv"), &["key", "value"])?;
    for (k, v) in report_scalars(report) {
        scalars.row([k, v])?;
    }
    scalars.finish()?;

    let mut runs = CsvOut::create(
        dir.join("runs.csv"),
        &[
            "seed",
            "matched_pairs",
            "matched_accuracy_src",
            "matched_accuracy_tgt",
            "fraction_unmatched",
            "unmatched_accuracy",
        ],
    )?;
    for r in &report.runs {
        runs.row(run_fields(r))?;
    }
    runs.finish()?;

    for c in &report.curves {
        let stem = curve_stem(c);
        if let Some(curve) = &c.reliability {
            let mut out = CsvOut::create(
                dir.join(format!("reliability_{stem}.csv")),
                &["lower", "upper", "count", "mean_confidence", "accuracy"],
            )?;
            for b in curve {
                out.row([
                    b.lower.to_string(),
                    b.upper.to_string(),
                    b.count.to_string(),
                    opt(b.mean_confidence),
                    opt(b.accuracy),
                ])?;
            }
            out.finish()?;
        }
        if let Some(hist) = &c.histogram {
            let mut out = CsvOut::create(
                dir.join(format!("histogram_{stem}.csv")),
                &["lower", "upper", "density"],
            )?;
            for b in hist {
                out.row([
                    b.lower.to_string(),
                    b.upper.to_string(),
                    b.density.to_string(),
                ])?;
            }
            out.finish()?;
        }
    }
    Ok(())
}

fn run_fields(r: &RunSummary) -> [String; 6] {
    [
        r.seed.to_string(),
        r.matched_pairs.to_string(),
        opt(r.matched_accuracy_src),
        opt(r.matched_accuracy_tgt),
        r.fraction_unmatched.to_string(),
        opt(r.unmatched_accuracy),
    ]
}

/// Summary of a set of matching runs, as written by the `match` command.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MatchSummary {
    pub src_name: String,
    pub tgt_name: String,
    pub src_size: usize,
    pub tgt_size: usize,
    pub swapped: bool,
    pub config: MatchConfig,
    pub runs: Vec<RunSummary>,
    /// Per run, the source indices never drawn. Only filled on request.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub src_unmatched: Option<Vec<Vec<usize>>>,
}

impl MatchSummary {
    pub fn new(
        outcomes: &[MatchOutcome],
        base: MatchConfig,
        swapped: bool,
        include_unmatched_src: bool,
    ) -> Self {
        let first = &outcomes[0];
        MatchSummary {
            src_name: first.src_name.clone(),
            tgt_name: first.tgt_name.clone(),
            src_size: first.src_len,
            tgt_size: first.tgt_len,
            swapped,
            config: base,
            runs: outcomes.iter().map(RunSummary::of).collect(),
            src_unmatched: include_unmatched_src.then(|| {
                outcomes
                    .iter()
                    .map(|o| o.src_unmatched.iter().map(|r| r.index).collect())
                    .collect()
            }),
        }
    }
}

pub fn write_match_summary(summary: &MatchSummary, path: &Path) -> Result<()> {
    write_json(summary, path)
}

/// One manifest row: a model and its two prediction logs.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ManifestRow {
    pub name: String,
    pub src_path: PathBuf,
    pub tgt_path: PathBuf,
}

/// Reads a `name,src_path,tgt_path` manifest. A header row with exactly
/// those names is optional, `#` starts a comment line, and relative paths
/// resolve against the manifest's directory.
pub fn read_manifest(path: &Path) -> Result<Vec<ManifestRow>> {
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    let base = path.parent().unwrap_or_else(|| Path::new("."));
    let source = path.display().to_string();
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(false)
        .trim(csv::Trim::All)
        .comment(Some(b'#'))
        .from_reader(file);
    let mut rows = Vec::new();
    for rec in rdr.records() {
        let rec = rec.map_err(|e| {
            let line = e.position().map_or(0, |p| p.line() as usize);
            parse_error(&source, line, None, e)
        })?;
        let line = rec.position().map_or(0, |p| p.line() as usize);
        if rec.len() != 3 {
            return Err(parse_error(
                &source,
                line,
                None,
                "expected name,src_path,tgt_path",
            ));
        }
        if rows.is_empty() && &rec[0] == "name" && &rec[1] == "src_path" && &rec[2] == "tgt_path" {
            continue;
        }
        let resolve = |p: &str| {
            let p = Path::new(p);
            if p.is_absolute() {
                p.to_path_buf()
            } else {
                base.join(p)
            }
        };
        rows.push(ManifestRow {
            name: rec[0].to_string(),
            src_path: resolve(&rec[1]),
            tgt_path: resolve(&rec[2]),
        });
    }
    if rows.is_empty() {
        return Err(parse_error(&source, 0, None, "manifest lists no entries"));
    }
    Ok(rows)
}

pub const SWEEP_HEADER: [&str; 14] = [
    "model_name",
    "accuracy_src",
    "accuracy_tgt",
    "accuracy_gap",
    "matched_accuracy_src",
    "matched_accuracy_src_stderr",
    "matched_accuracy_tgt",
    "matched_accuracy_tgt_stderr",
    "matched_gap",
    "matched_gap_stderr",
    "fraction_unmatched",
    "fraction_unmatched_stderr",
    "runs",
    "first_seed",
];

pub fn write_sweep_csv<W: Write>(rows: &[SweepRow], writer: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    let io_err = |e: csv::Error| Error::io("sweep table", e.into());
    w.write_record(SWEEP_HEADER).map_err(io_err)?;
    for r in rows {
        w.write_record([
            r.model_name.clone(),
            r.accuracy_src.to_string(),
            r.accuracy_tgt.to_string(),
            r.accuracy_gap.to_string(),
            opt(r.matched_accuracy_src),
            opt(r.matched_accuracy_src_stderr),
            opt(r.matched_accuracy_tgt),
            opt(r.matched_accuracy_tgt_stderr),
            opt(r.matched_gap),
            opt(r.matched_gap_stderr),
            r.fraction_unmatched.to_string(),
            r.fraction_unmatched_stderr.to_string(),
            r.runs.to_string(),
            r.first_seed.to_string(),
        ])
        .map_err(io_err)?;
    }
    w.flush().map_err(|e| Error::io("sweep table", e))
}

pub fn write_scatter_csv<W: Write>(points: &[ScatterPoint], writer: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    let io_err = |e: csv::Error| Error::io("scatter table", e.into());
    w.write_record(["model_name", "dataset_name", "accuracy", "mean_confidence"])
        .map_err(io_err)?;
    for p in points {
        w.write_record([
            p.model_name.clone(),
            p.dataset_name.clone(),
            p.accuracy.to_string(),
            p.mean_confidence.to_string(),
        ])
        .map_err(io_err)?;
    }
    w.flush().map_err(|e| Error::io("scatter table", e))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn parse(text: &str, format: LogFormat, k: u32) -> Result<PredictionSet> {
        parse_predictions(text.as_bytes(), format, k, "mem", "mem")
    }

    #[test]
    fn jsonl_line_maps_to_record() {
        let set = parse(
            "{\"y\":3,\"yhat\":3,\"p\":0.8675}\n",
            LogFormat::JsonLines,
            10,
        )
        .unwrap();
        assert_eq!(set.records(), &[PredictionRecord::new(0, 3, 3, 0.8675)]);
    }

    #[test]
    fn csv_row_maps_to_same_record() {
        let set = parse("y,yhat,p\n3,3,0.8675\n", LogFormat::Csv, 10).unwrap();
        assert_eq!(set.records(), &[PredictionRecord::new(0, 3, 3, 0.8675)]);
        let reordered = parse("p,id,yhat,y\n0.8675,a,3,3\n", LogFormat::Csv, 10).unwrap();
        assert_eq!(reordered.records(), set.records());
    }

    #[test]
    fn out_of_range_probability_names_the_line() {
        let text = "{\"y\":0,\"yhat\":0,\"p\":0.5}\n{\"y\":0,\"yhat\":0,\"p\":1.2}\n";
        let err = parse(text, LogFormat::JsonLines, 2).unwrap_err();
        let msg = err.to_string();
        assert!(msg.contains("mem:2"), "{msg}");
        assert!(msg.contains("1.2"), "{msg}");
        assert!(!err.is_io());

        let err = parse("y,yhat,p\n0,0,0.5\n0,0,1.2\n", LogFormat::Csv, 2).unwrap_err();
        assert!(err.to_string().contains("mem:3"), "{err}");
    }

    #[test]
    fn label_out_of_range_and_diagnostic_id() {
        let err = parse(
            "{\"y\":0,\"yhat\":5,\"p\":0.5,\"id\":\"img_7\"}\n",
            LogFormat::JsonLines,
            5,
        )
        .unwrap_err();
        let msg = err.to_string();
        assert!(
            msg.contains("img_7") && msg.contains("predicted label 5"),
            "{msg}"
        );
    }

    #[test]
    fn malformed_and_empty_inputs() {
        assert!(parse("{\"y\":0,\"yhat\":0}\n", LogFormat::JsonLines, 2)
            .unwrap_err()
            .to_string()
            .contains("mem:1"));
        assert!(parse("{\"y\":-1,\"yhat\":0,\"p\":0.3}\n", LogFormat::JsonLines, 2).is_err());
        assert!(parse("", LogFormat::JsonLines, 2).is_err());
        assert!(parse("\n\n", LogFormat::JsonLines, 2).is_err());
        assert!(parse("y,yhat,p\n", LogFormat::Csv, 2).is_err());
        assert!(parse("3,3,0.8\n", LogFormat::Csv, 10).is_err());
        assert!(parse("y,yhat,p\nx,0,0.1\n", LogFormat::Csv, 10).is_err());
    }

    #[test]
    fn blank_lines_keep_line_numbers() {
        let text = "{\"y\":0,\"yhat\":0,\"p\":0.5}\n\n{\"y\":0,\"yhat\":0,\"p\":9}\n";
        let err = parse(text, LogFormat::JsonLines, 2).unwrap_err();
        assert!(err.to_string().contains("mem:3"), "{err}");
    }

    #[test]
    fn missing_file_is_io_error() {
        let err = read_predictions(Path::new("/nonexistent/log.jsonl"), LogFormat::JsonLines, 2)
            .unwrap_err();
        assert!(err.is_io());
    }

    #[test]
    fn format_from_extension() {
        assert_eq!(LogFormat::from_path(Path::new("a.CSV")), LogFormat::Csv);
        assert_eq!(
            LogFormat::from_path(Path::new("a.jsonl")),
            LogFormat::JsonLines
        );
        assert_eq!(LogFormat::from_path(Path::new("a")), LogFormat::JsonLines);
    }
}
