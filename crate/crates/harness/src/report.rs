//! Side-by-side comparison of metrics CSVs. Values are read as exact
//! decimals, so a delta between printed numbers is exactly the printed
//! difference.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{Signed, ToPrimitive, Zero};

use crate::error::{HarnessError, Result};
use crate::metrics::read_rows;

pub type Exact = BigRational;

pub const METRICS: [&str; 4] = ["train_loss", "train_acc", "val_loss", "val_acc"];

/// Parses a plain or scientific decimal literal exactly.
pub fn parse_decimal(text: &str) -> Option<Exact> {
    let t = text.trim();
    let (mantissa, exp) = match t.find(['e', 'E']) {
        Some(i) => (&t[..i], t[i + 1..].parse::<i64>().ok()?),
        None => (t, 0),
    };
    let (negative, digits) = match mantissa.strip_prefix('-') {
        Some(rest) => (true, rest),
        None => (false, mantissa.strip_prefix('+').unwrap_or(mantissa)),
    };
    let (int, frac) = digits.split_once('.').unwrap_or((digits, ""));
    if int.is_empty() && frac.is_empty() || !(int.bytes().chain(frac.bytes())).all(|b| b.is_ascii_digit()) {
        return None;
    }
    let mut n: BigInt = format!("0{int}{frac}").parse().ok()?;
    if negative {
        n = -n;
    }
    let scale = exp - frac.len() as i64;
    let ten = BigInt::from(10);
    let pow = num_traits::pow(ten, scale.unsigned_abs() as usize);
    Some(if scale >= 0 {
        BigRational::from_integer(n * pow)
    } else {
        BigRational::new(n, pow)
    })
}

/// Exact decimal expansion when one exists (denominator of 2s and 5s only);
/// otherwise 17 significant digits.
pub fn format_decimal(x: &Exact) -> String {
    let mut d = x.denom().clone();
    let (two, five) = (BigInt::from(2), BigInt::from(5));
    let (mut twos, mut fives) = (0usize, 0usize);
    while (&d % &two).is_zero() {
        d /= &two;
        twos += 1;
    }
    while (&d % &five).is_zero() {
        d /= &five;
        fives += 1;
    }
    if d != BigInt::from(1) {
        return format!("{:.16e}", x.to_f64().unwrap_or(f64::NAN));
    }
    let places = twos.max(fives);
    let scaled = (x * BigRational::from_integer(num_traits::pow(BigInt::from(10), places))).to_integer();
    let digits = scaled.abs().to_string();
    let sign = if scaled.is_negative() { "-" } else { "" };
    if places == 0 {
        return format!("{sign}{digits}");
    }
    let padded = format!("{digits:0>width$}", width = places + 1);
    let (int, frac) = padded.split_at(padded.len() - places);
    format!("{sign}{int}.{frac}")
}

#[derive(Debug, Clone, PartialEq, Default)]
struct Series {
    label: String,
    /// Epoch rows: metric values in [`METRICS`] order.
    epochs: BTreeMap<usize, [Option<Exact>; 4]>,
    /// Per-iteration training loss.
    iterations: Vec<(u64, Exact)>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct DeltaRow {
    pub epoch: usize,
    /// `a − b` per metric in [`METRICS`] order; `None` if either side lacks it.
    pub deltas: [Option<Exact>; 4],
}

impl DeltaRow {
    pub fn get(&self, metric: &str) -> Option<&Exact> {
        METRICS.iter().position(|m| *m == metric).and_then(|i| self.deltas[i].as_ref())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PairDeltas {
    pub a: String,
    pub b: String,
    pub rows: Vec<DeltaRow>,
}

/// A run that is strictly better than the other at every shared epoch.
#[derive(Debug, Clone, PartialEq)]
pub struct Dominance {
    pub metric: &'static str,
    pub winner: String,
    pub loser: String,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct ReportOptions {
    /// Report the first epoch with `val_acc ≥` this.
    pub acc_threshold: Option<Exact>,
    /// Report the first epoch with `val_loss ≤` this, and the first logged
    /// iteration with `train_loss ≤` this.
    pub loss_threshold: Option<Exact>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Report {
    pub runs: Vec<String>,
    pub pairs: Vec<PairDeltas>,
    pub dominance: Vec<Dominance>,
    pub text: String,
    /// `series,epoch,step,metric,value` rows for plotting.
    pub long_csv: String,
}

impl Report {
    pub fn pair(&self, a: &str, b: &str) -> Option<&PairDeltas> {
        self.pairs.iter().find(|p| p.a == a && p.b == b)
    }
}

fn load(paths: &[PathBuf]) -> Result<Vec<Series>> {
    let mut out: Vec<(String, usize, Series)> = Vec::new();
    for (file_no, path) in paths.iter().enumerate() {
        let bad = |row: usize, value: &str| HarnessError::Metrics {
            path: path.clone(),
            message: format!("row {row}: `{value}` is not a decimal"),
        };
        let mut by_run: BTreeMap<String, Series> = BTreeMap::new();
        for (i, row) in read_rows(path)?.iter().enumerate() {
            let row_no = i + 2;
            let series = by_run.entry(row[0].to_string()).or_default();
            let epoch: usize = row[1].parse().map_err(|_| bad(row_no, &row[1]))?;
            let mut values: [Option<Exact>; 4] = Default::default();
            for (k, v) in values.iter_mut().enumerate() {
                let field = &row[3 + k];
                if !field.is_empty() {
                    *v = Some(parse_decimal(field).ok_or_else(|| bad(row_no, field))?);
                }
            }
            match &row[2] {
                "" => {
                    series.epochs.insert(epoch, values);
                }
                step => {
                    let step = step.parse().map_err(|_| bad(row_no, step))?;
                    if let Some(loss) = values[0].take() {
                        series.iterations.push((step, loss));
                    }
                }
            }
        }
        out.extend(by_run.into_iter().map(|(id, s)| (id, file_no + 1, s)));
    }
    let labels: Vec<String> = out
        .iter()
        .map(|(id, file_no, _)| {
            let repeated = out.iter().filter(|(other, ..)| other == id).count() > 1;
            if repeated {
                format!("{id}@{file_no}")
            } else {
                id.clone()
            }
        })
        .collect();
    Ok(out
        .into_iter()
        .zip(labels)
        .map(|((_, _, mut s), label)| {
            s.label = label;
            s
        })
        .collect())
}

/// Compares every run in the given CSVs against every later one.
pub fn compare_report<P: AsRef<Path>>(csv_paths: &[P], options: &ReportOptions) -> Result<Report> {
    let paths: Vec<PathBuf> = csv_paths.iter().map(|p| p.as_ref().to_path_buf()).collect();
    let series = load(&paths)?;
    if series.len() < 2 {
        return Err(HarnessError::Report(format!("need at least two runs, found {}", series.len())));
    }
    let mut pairs = Vec::new();
    let mut dominance = Vec::new();
    for (i, a) in series.iter().enumerate() {
        for b in &series[i + 1..] {
            let rows: Vec<DeltaRow> = a
                .epochs
                .iter()
                .filter_map(|(epoch, va)| {
                    let vb = b.epochs.get(epoch)?;
                    let deltas = std::array::from_fn(|k| match (&va[k], &vb[k]) {
                        (Some(x), Some(y)) => Some(x - y),
                        _ => None,
                    });
                    Some(DeltaRow { epoch: *epoch, deltas })
                })
                .collect();
            if rows.is_empty() && !(a.epochs.is_empty() && b.epochs.is_empty()) {
                return Err(HarnessError::Report(format!("runs {} and {} share no epochs", a.label, b.label)));
            }
            for (k, metric) in METRICS.iter().enumerate() {
                let lower_is_better = metric.ends_with("loss");
                let deltas: Vec<&Exact> = rows.iter().filter_map(|r| r.deltas[k].as_ref()).collect();
                if deltas.is_empty() {
                    continue;
                }
                let a_better = deltas.iter().all(|d| if lower_is_better { d.is_negative() } else { d.is_positive() });
                let b_better = deltas.iter().all(|d| if lower_is_better { d.is_positive() } else { d.is_negative() });
                let (winner, loser) = match (a_better, b_better) {
                    (true, _) => (&a.label, &b.label),
                    (_, true) => (&b.label, &a.label),
                    _ => continue,
                };
                dominance.push(Dominance {
                    metric,
                    winner: winner.clone(),
                    loser: loser.clone(),
                });
            }
            pairs.push(PairDeltas {
                a: a.label.clone(),
                b: b.label.clone(),
                rows,
            });
        }
    }
    let text = render(&series, &paths, &pairs, &dominance, options);
    let long_csv = long_format(&series, &pairs);
    Ok(Report {
        runs: series.iter().map(|s| s.label.clone()).collect(),
        pairs,
        dominance,
        text,
        long_csv,
    })
}

fn cell(x: &Option<Exact>) -> String {
    x.as_ref().map(format_decimal).unwrap_or_else(|| "-".into())
}

fn render(
    series: &[Series],
    paths: &[PathBuf],
    pairs: &[PairDeltas],
    dominance: &[Dominance],
    options: &ReportOptions,
) -> String {
    let mut t = String::new();
    let files: Vec<String> = paths.iter().map(|p| p.display().to_string()).collect();
    let _ = writeln!(t, "inputs: {}", files.join(", "));
    let _ = writeln!(t, "runs: {}", series.iter().map(|s| s.label.as_str()).collect::<Vec<_>>().join(", "));
    for pair in pairs {
        let _ = writeln!(t, "\n{} - {}", pair.a, pair.b);
        let mut table = vec![std::iter::once("epoch".to_string()).chain(METRICS.iter().map(|m| format!("d_{m}"))).collect::<Vec<_>>()];
        for row in &pair.rows {
            table.push(std::iter::once(row.epoch.to_string()).chain(row.deltas.iter().map(cell)).collect());
        }
        let widths: Vec<usize> = (0..5).map(|c| table.iter().map(|r| r[c].len()).max().unwrap_or(0)).collect();
        for r in &table {
            let line: Vec<String> = r.iter().zip(&widths).map(|(v, w)| format!("{v:>w$}")).collect();
            let _ = writeln!(t, "{}", line.join("  ").trim_end());
        }
    }
    let _ = writeln!(t, "\ndominance (strictly better at every shared epoch):");
    if dominance.is_empty() {
        let _ = writeln!(t, "  none");
    }
    for d in dominance {
        let _ = writeln!(t, "  {}: {} dominates {}", d.metric, d.winner, d.loser);
    }
    if options.acc_threshold.is_some() || options.loss_threshold.is_some() {
        let _ = writeln!(t, "\nthresholds:");
        for s in series {
            let first_epoch = |k: usize, hit: &dyn Fn(&Exact) -> bool| {
                s.epochs.iter().find(|(_, v)| v[k].as_ref().is_some_and(hit)).map(|(e, _)| *e)
            };
            let mut parts = Vec::new();
            if let Some(thr) = &options.acc_threshold {
                let e = first_epoch(3, &|v| v >= thr);
                parts.push(format!("val_acc >= {}: {}", format_decimal(thr), at("epoch", e)));
            }
            if let Some(thr) = &options.loss_threshold {
                let e = first_epoch(2, &|v| v <= thr);
                parts.push(format!("val_loss <= {}: {}", format_decimal(thr), at("epoch", e)));
                if !s.iterations.is_empty() {
                    let step = s.iterations.iter().find(|(_, l)| l <= thr).map(|(k, _)| *k as usize);
                    parts.push(format!("train_loss <= {}: {}", format_decimal(thr), at("step", step)));
                }
            }
            let _ = writeln!(t, "  {}: {}", s.label, parts.join("; "));
        }
    }
    t
}

fn at(unit: &str, x: Option<usize>) -> String {
    x.map_or_else(|| "never".into(), |x| format!("{unit} {x}"))
}

fn long_format(series: &[Series], pairs: &[PairDeltas]) -> String {
    let mut w = csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(Vec::new());
    let mut put = |fields: [&str; 5]| w.write_record(fields).expect("in-memory write");
    put(["series", "epoch", "step", "metric", "value"]);
    for s in series {
        for (epoch, values) in &s.epochs {
            for (metric, v) in METRICS.iter().zip(values) {
                if let Some(v) = v {
                    put([&s.label, &epoch.to_string(), "", metric, &format_decimal(v)]);
                }
            }
        }
        for (step, loss) in &s.iterations {
            put([&s.label, "", &step.to_string(), "train_loss", &format_decimal(loss)]);
        }
    }
    for p in pairs {
        let label = format!("{} - {}", p.a, p.b);
        for row in &p.rows {
            for (metric, d) in METRICS.iter().zip(&row.deltas) {
                if let Some(d) = d {
                    put([&label, &row.epoch.to_string(), "", &format!("d_{metric}"), &format_decimal(d)]);
                }
            }
        }
    }
    String::from_utf8(w.into_inner().expect("in-memory flush")).expect("utf-8 fields")
}
