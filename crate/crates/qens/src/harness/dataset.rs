use std::path::Path;

use crate::encoding::Dataset;
use crate::error::{Error, Result};

fn ingest_error(
    path: &Path,
    row: Option<usize>,
    column: Option<String>,
    message: String,
) -> Error {
    Error::Dataset {
        path: path.display().to_string(),
        row,
        column,
        message,
    }
}

/// Loads a comma-separated dataset with a header row.
///
/// One column must be named `label`; every other column is read as a
/// numeric feature, kept in header order. Two label conventions are
/// accepted per file: {-1, +1} is kept as is, {0, 1} is mapped through
/// y = 1 - 2l so class 0 becomes +1. A file mixing -1 with 0 is
/// ambiguous and rejected. Row numbers in diagnostics count physical
/// lines, header included.
pub fn load_dataset(path: impl AsRef<Path>) -> Result<Dataset> {
    let path = path.as_ref();
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .trim(csv::Trim::All)
        .from_path(path)
        .map_err(|e| csv_error(path, None, e))?;

    let headers = reader
        .headers()
        .map_err(|e| csv_error(path, None, e))?
        .clone();
    let label_col = headers
        .iter()
        .position(|h| h == "label")
        .ok_or_else(|| {
            ingest_error(
                path,
                None,
                Some("label".into()),
                "no column named `label` in the header".into(),
            )
        })?;
    if headers.len() < 2 {
        return Err(ingest_error(
            path,
            None,
            None,
            "the file has a label column but no feature columns".into(),
        ));
    }

    let mut features: Vec<Vec<f64>> = Vec::new();
    let mut raw_labels: Vec<i8> = Vec::new();
    for (r, record) in reader.records().enumerate() {
        let file_row = r + 2;
        let record = record.map_err(|e| csv_error(path, Some(file_row), e))?;
        let mut row = Vec::with_capacity(headers.len() - 1);
        for (c, cell) in record.iter().enumerate() {
            let col_name = || Some(headers[c].to_string());
            if c == label_col {
                let value: f64 = cell.parse().map_err(|_| {
                    ingest_error(
                        path,
                        Some(file_row),
                        col_name(),
                        format!("cannot parse label {cell:?}"),
                    )
                })?;
                raw_labels.push(if value == -1.0 {
                    -1
                } else if value == 0.0 {
                    0
                } else if value == 1.0 {
                    1
                } else {
                    return Err(ingest_error(
                        path,
                        Some(file_row),
                        col_name(),
                        format!("unsupported label {cell:?} (expected -1, 0, or 1)"),
                    ));
                });
            } else {
                let value: f64 = cell.parse().map_err(|_| {
                    ingest_error(
                        path,
                        Some(file_row),
                        col_name(),
                        format!("cannot parse {cell:?} as a number"),
                    )
                })?;
                if !value.is_finite() {
                    return Err(ingest_error(
                        path,
                        Some(file_row),
                        col_name(),
                        format!("non-finite value {cell:?}"),
                    ));
                }
                row.push(value);
            }
        }
        features.push(row);
    }

    if features.len() < 2 {
        return Err(ingest_error(
            path,
            None,
            None,
            format!("need at least 2 data rows, found {}", features.len()),
        ));
    }

    let has_neg = raw_labels.contains(&-1);
    let has_zero = raw_labels.contains(&0);
    if has_neg && has_zero {
        return Err(ingest_error(
            path,
            None,
            Some("label".into()),
            "labels mix the {-1,+1} and {0,1} conventions".into(),
        ));
    }
    let labels: Vec<i8> = if has_zero {
        raw_labels.iter().map(|&l| 1 - 2 * l).collect()
    } else {
        raw_labels
    };

    Dataset::new(features, labels).map_err(|e| ingest_error(path, None, None, e.to_string()))
}

fn csv_error(path: &Path, row: Option<usize>, e: csv::Error) -> Error {
    match e.into_kind() {
        csv::ErrorKind::Io(io) => Error::Io(io),
        other => ingest_error(path, row, None, format!("malformed csv: {other:?}")),
    }
}
