//! Metrics CSV: fixed header, reals in 17 significant digits so every value
//! reads back bit for bit.

use std::fs;
use std::path::Path;

use crate::error::{HarnessError, Result};

pub const HEADER: [&str; 9] = [
    "run_id",
    "epoch",
    "step",
    "train_loss",
    "train_acc",
    "val_loss",
    "val_acc",
    "effective_lr",
    "wall_ms",
];

/// One row. Epoch rows leave `step` empty; per-iteration rows fill it.
/// Metrics that were not computed are `None` and print as empty fields.
#[derive(Debug, Clone, PartialEq)]
pub struct MetricsRecord {
    pub run_id: String,
    pub epoch: usize,
    pub step: Option<u64>,
    pub train_loss: f64,
    pub train_acc: Option<f64>,
    pub val_loss: Option<f64>,
    pub val_acc: Option<f64>,
    /// `None` where no learning rate applies (PSO).
    pub effective_lr: Option<f64>,
    pub wall_ms: Option<f64>,
}

pub fn format_real(x: f64) -> String {
    format!("{x:.16e}")
}

fn opt(x: Option<f64>) -> String {
    x.map(format_real).unwrap_or_default()
}

/// Orders rows by `(run_id, epoch, step)`, epoch rows first.
pub fn sort_records(records: &mut [MetricsRecord]) {
    records.sort_by(|a, b| (&a.run_id, a.epoch, a.step).cmp(&(&b.run_id, b.epoch, b.step)));
}

pub fn metrics_csv(records: &[MetricsRecord]) -> String {
    let mut sorted = records.to_vec();
    sort_records(&mut sorted);
    let mut w = csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(Vec::new());
    w.write_record(HEADER).expect("in-memory write");
    for r in &sorted {
        w.write_record([
            r.run_id.clone(),
            r.epoch.to_string(),
            r.step.map(|s| s.to_string()).unwrap_or_default(),
            format_real(r.train_loss),
            opt(r.train_acc),
            opt(r.val_loss),
            opt(r.val_acc),
            opt(r.effective_lr),
            opt(r.wall_ms),
        ])
        .expect("in-memory write");
    }
    String::from_utf8(w.into_inner().expect("in-memory flush")).expect("csv of utf-8 fields")
}

pub fn write_metrics(records: &[MetricsRecord], path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir).map_err(|source| HarnessError::Io {
            path: dir.to_path_buf(),
            source,
        })?;
    }
    fs::write(path, metrics_csv(records)).map_err(|source| HarnessError::Io {
        path: path.to_path_buf(),
        source,
    })
}

/// Raw string rows after checking the header.
pub(crate) fn read_rows(path: &Path) -> Result<Vec<csv::StringRecord>> {
    let csv_err = |source| HarnessError::Csv {
        path: path.to_path_buf(),
        source,
    };
    let mut reader = csv::Reader::from_path(path).map_err(csv_err)?;
    let header = reader.headers().map_err(csv_err)?.clone();
    if header.iter().ne(HEADER) {
        return Err(HarnessError::Metrics {
            path: path.to_path_buf(),
            message: format!("header `{}` is not `{}`", header.iter().collect::<Vec<_>>().join(","), HEADER.join(",")),
        });
    }
    reader.records().map(|r| r.map_err(csv_err)).collect()
}

pub fn read_metrics(path: impl AsRef<Path>) -> Result<Vec<MetricsRecord>> {
    let path = path.as_ref();
    let bad = |row: usize, field: &str, value: &str| HarnessError::Metrics {
        path: path.to_path_buf(),
        message: format!("row {row}: bad {field} `{value}`"),
    };
    read_rows(path)?
        .iter()
        .enumerate()
        .map(|(i, row)| {
            let row_no = i + 2;
            let real = |k: usize| -> Result<Option<f64>> {
                match &row[k] {
                    "" => Ok(None),
                    v => v.parse().map(Some).map_err(|_| bad(row_no, HEADER[k], v)),
                }
            };
            let required = |k: usize| real(k)?.ok_or_else(|| bad(row_no, HEADER[k], ""));
            Ok(MetricsRecord {
                run_id: row[0].to_string(),
                epoch: row[1].parse().map_err(|_| bad(row_no, "epoch", &row[1]))?,
                step: match &row[2] {
                    "" => None,
                    v => Some(v.parse().map_err(|_| bad(row_no, "step", v))?),
                },
                train_loss: required(3)?,
                train_acc: real(4)?,
                val_loss: real(5)?,
                val_acc: real(6)?,
                effective_lr: real(7)?,
                wall_ms: real(8)?,
            })
        })
        .collect()
}
