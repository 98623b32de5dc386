use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::classifier::ClassifierKind;
use crate::encoding::NormalizationKind;
use crate::ensemble::ExecMode;
use crate::error::{Error, Result};

/// One Monte Carlo run of one experiment cell.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunResult {
    pub dataset: String,
    pub normalization: NormalizationKind,
    pub classifier: ClassifierKind,
    pub control_qubits: usize,
    pub mode: ExecMode,
    pub run: usize,
    pub seed: u64,
    /// Accuracy of one classifier over the whole training set.
    pub single_accuracy: f64,
    /// Accuracy of each ensemble branch, evaluated in closed form.
    pub internal_accuracies: Vec<f64>,
    pub ensemble_accuracy: f64,
    /// Learned branch weights, bias, and logistic scale.
    pub weights: Vec<f64>,
    pub bias: f64,
    pub scale: f64,
    pub mean_selection_prob: f64,
    /// Wall-clock diagnostic; the only field exempt from the
    /// fixed-seed determinism contract.
    pub elapsed_ms: f64,
}

/// Aggregate over the runs of one experiment cell. Internal statistics
/// pool every branch of every run.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SummaryRow {
    pub dataset: String,
    pub normalization: NormalizationKind,
    pub classifier: ClassifierKind,
    pub control_qubits: usize,
    pub mode: ExecMode,
    pub runs: usize,
    pub single_mean: f64,
    pub single_std: f64,
    pub internal_mean: f64,
    pub internal_std: f64,
    pub ensemble_mean: f64,
    pub ensemble_std: f64,
}

/// Both result tables under one roof, the shape of the JSON document.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ResultsDocument {
    pub runs: Vec<RunResult>,
    pub summary: Vec<SummaryRow>,
}

/// Emission and ingestion formats for result files.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum OutputFormat {
    Csv,
    Json,
}

impl OutputFormat {
    /// Picks a format from the file extension; anything but `.json`
    /// falls back to csv.
    pub fn from_path(path: &Path) -> OutputFormat {
        match path.extension().and_then(|e| e.to_str()) {
            Some(e) if e.eq_ignore_ascii_case("json") => OutputFormat::Json,
            _ => OutputFormat::Csv,
        }
    }
}

fn mean_std(values: &[f64]) -> (f64, f64) {
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n;
    (mean, var.sqrt())
}

/// Collapses detail rows into one summary row per experiment cell,
/// keeping first-appearance order.
pub fn summarize(results: &[RunResult]) -> Vec<SummaryRow> {
    let mut order: Vec<(&str, NormalizationKind, ClassifierKind, usize, ExecMode)> = Vec::new();
    for r in results {
        let key = (
            r.dataset.as_str(),
            r.normalization,
            r.classifier,
            r.control_qubits,
            r.mode,
        );
        if !order.contains(&key) {
            order.push(key);
        }
    }
    order
        .into_iter()
        .map(|key| {
            let cell: Vec<&RunResult> = results
                .iter()
                .filter(|r| {
                    (
                        r.dataset.as_str(),
                        r.normalization,
                        r.classifier,
                        r.control_qubits,
                        r.mode,
                    ) == key
                })
                .collect();
            let single: Vec<f64> = cell.iter().map(|r| r.single_accuracy).collect();
            let internal: Vec<f64> = cell
                .iter()
                .flat_map(|r| r.internal_accuracies.iter().copied())
                .collect();
            let ensemble: Vec<f64> = cell.iter().map(|r| r.ensemble_accuracy).collect();
            let (single_mean, single_std) = mean_std(&single);
            let (internal_mean, internal_std) = mean_std(&internal);
            let (ensemble_mean, ensemble_std) = mean_std(&ensemble);
            SummaryRow {
                dataset: key.0.to_string(),
                normalization: key.1,
                classifier: key.2,
                control_qubits: key.3,
                mode: key.4,
                runs: cell.len(),
                single_mean,
                single_std,
                internal_mean,
                internal_std,
                ensemble_mean,
                ensemble_std,
            }
        })
        .collect()
}

const CSV_HEADER: [&str; 20] = [
    "record",
    "dataset",
    "normalization",
    "classifier",
    "d",
    "mode",
    "run",
    "runs",
    "seed",
    "single",
    "single_std",
    "internal",
    "internal_std",
    "ensemble",
    "ensemble_std",
    "weights",
    "bias",
    "scale",
    "selection",
    "elapsed_ms",
];

fn join_vec(values: &[f64]) -> String {
    values
        .iter()
        .map(|v| v.to_string())
        .collect::<Vec<_>>()
        .join(" ")
}

/// Writes detail and summary rows to one file. Floating-point fields
/// use the shortest representation that parses back to the same bits,
/// so an emit/parse round trip is exact.
pub fn emit_results(
    results: &[RunResult],
    summary: &[SummaryRow],
    path: impl AsRef<Path>,
    format: OutputFormat,
) -> Result<()> {
    let path = path.as_ref();
    if results.is_empty() {
        return Err(Error::Config("no results to emit".into()));
    }
    match format {
        OutputFormat::Json => {
            let doc = ResultsDocument {
                runs: results.to_vec(),
                summary: summary.to_vec(),
            };
            let text = serde_json::to_string_pretty(&doc)
                .map_err(|e| Error::Numeric(format!("cannot serialize results: {e}")))?;
            std::fs::write(path, text + "\n")?;
        }
        OutputFormat::Csv => {
            let mut w = csv::Writer::from_path(path).map_err(csv_io)?;
            w.write_record(CSV_HEADER).map_err(csv_io)?;
            for r in results {
                w.write_record([
                    "detail".into(),
                    r.dataset.clone(),
                    r.normalization.to_string(),
                    r.classifier.to_string(),
                    r.control_qubits.to_string(),
                    r.mode.to_string(),
                    r.run.to_string(),
                    String::new(),
                    r.seed.to_string(),
                    r.single_accuracy.to_string(),
                    String::new(),
                    join_vec(&r.internal_accuracies),
                    String::new(),
                    r.ensemble_accuracy.to_string(),
                    String::new(),
                    join_vec(&r.weights),
                    r.bias.to_string(),
                    r.scale.to_string(),
                    r.mean_selection_prob.to_string(),
                    r.elapsed_ms.to_string(),
                ])
                .map_err(csv_io)?;
            }
            for s in summary {
                w.write_record([
                    "summary".into(),
                    s.dataset.clone(),
                    s.normalization.to_string(),
                    s.classifier.to_string(),
                    s.control_qubits.to_string(),
                    s.mode.to_string(),
                    String::new(),
                    s.runs.to_string(),
                    String::new(),
                    s.single_mean.to_string(),
                    s.single_std.to_string(),
                    s.internal_mean.to_string(),
                    s.internal_std.to_string(),
                    s.ensemble_mean.to_string(),
                    s.ensemble_std.to_string(),
                    String::new(),
                    String::new(),
                    String::new(),
                    String::new(),
                    String::new(),
                ])
                .map_err(csv_io)?;
            }
            w.flush()?;
        }
    }
    Ok(())
}

/// Reads a result file emitted by [`emit_results`] back into memory.
pub fn parse_results(
    path: impl AsRef<Path>,
    format: OutputFormat,
) -> Result<(Vec<RunResult>, Vec<SummaryRow>)> {
    let path = path.as_ref();
    match format {
        OutputFormat::Json => {
            let text = std::fs::read_to_string(path)?;
            let doc: ResultsDocument = serde_json::from_str(&text).map_err(|e| {
                result_error(path, None, format!("malformed results document: {e}"))
            })?;
            Ok((doc.runs, doc.summary))
        }
        OutputFormat::Csv => parse_csv_results(path),
    }
}

fn parse_csv_results(path: &Path) -> Result<(Vec<RunResult>, Vec<SummaryRow>)> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .from_path(path)
        .map_err(csv_io)?;
    let headers = reader.headers().map_err(csv_io)?.clone();
    let col = |name: &str| -> Result<usize> {
        headers
            .iter()
            .position(|h| h == name)
            .ok_or_else(|| result_error(path, None, format!("missing column {name:?}")))
    };
    let mut cols = [0usize; 20];
    for (i, name) in CSV_HEADER.iter().enumerate() {
        cols[i] = col(name)?;
    }

    let mut runs = Vec::new();
    let mut summary = Vec::new();
    for (r, record) in reader.records().enumerate() {
        let file_row = r + 2;
        let record = record.map_err(csv_io)?;
        let cell = |i: usize| record.get(cols[i]).unwrap_or("");
        let num = |i: usize| -> Result<f64> {
            cell(i).parse().map_err(|_| {
                result_error(
                    path,
                    Some(file_row),
                    format!("bad number {:?} in column {}", cell(i), CSV_HEADER[i]),
                )
            })
        };
        let int = |i: usize| -> Result<usize> {
            cell(i).parse().map_err(|_| {
                result_error(
                    path,
                    Some(file_row),
                    format!("bad count {:?} in column {}", cell(i), CSV_HEADER[i]),
                )
            })
        };
        let vec_of = |i: usize| -> Result<Vec<f64>> {
            cell(i)
                .split_whitespace()
                .map(|v| {
                    v.parse().map_err(|_| {
                        result_error(
                            path,
                            Some(file_row),
                            format!("bad number {v:?} in column {}", CSV_HEADER[i]),
                        )
                    })
                })
                .collect()
        };
        let normalization: NormalizationKind = cell(2).parse()?;
        let classifier: ClassifierKind = cell(3).parse()?;
        let mode: ExecMode = cell(5).parse()?;
        match cell(0) {
            "detail" => runs.push(RunResult {
                dataset: cell(1).to_string(),
                normalization,
                classifier,
                control_qubits: int(4)?,
                mode,
                run: int(6)?,
                seed: cell(8).parse().map_err(|_| {
                    result_error(path, Some(file_row), format!("bad seed {:?}", cell(8)))
                })?,
                single_accuracy: num(9)?,
                internal_accuracies: vec_of(11)?,
                ensemble_accuracy: num(13)?,
                weights: vec_of(15)?,
                bias: num(16)?,
                scale: num(17)?,
                mean_selection_prob: num(18)?,
                elapsed_ms: num(19)?,
            }),
            "summary" => summary.push(SummaryRow {
                dataset: cell(1).to_string(),
                normalization,
                classifier,
                control_qubits: int(4)?,
                mode,
                runs: int(7)?,
                single_mean: num(9)?,
                single_std: num(10)?,
                internal_mean: num(11)?,
                internal_std: num(12)?,
                ensemble_mean: num(13)?,
                ensemble_std: num(14)?,
            }),
            other => {
                return Err(result_error(
                    path,
                    Some(file_row),
                    format!("unknown record type {other:?}"),
                ));
            }
        }
    }
    Ok((runs, summary))
}

fn result_error(path: &Path, row: Option<usize>, message: String) -> Error {
    Error::Dataset {
        path: path.display().to_string(),
        row,
        column: None,
        message,
    }
}

fn csv_io(e: csv::Error) -> Error {
    match e.into_kind() {
        csv::ErrorKind::Io(io) => Error::Io(io),
        other => Error::Numeric(format!("csv failure: {other:?}")),
    }
}
