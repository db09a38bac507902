//! CSV ingestion, train/test splitting and result files.

use std::fs::File;
use std::io::Write;
use std::path::Path;

use ndarray::{Array1, Array2};
use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::metrics::MethodOutput;
use crate::types::{Dataset, PredictionInference, SeedSpec};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FeatureColumns {
    AllOthers,
    Named(Vec<String>),
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NaPolicy {
    #[default]
    Reject,
    DropRows,
    /// Missing features take the mean of the observed values in their
    /// column; rows with a missing response are dropped.
    ImputeMean,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CsvSchema {
    pub response_column: String,
    pub feature_columns: FeatureColumns,
    #[serde(default)]
    pub na_policy: NaPolicy,
}

impl CsvSchema {
    pub fn new(response_column: impl Into<String>, feature_columns: FeatureColumns, na_policy: NaPolicy) -> Result<Self> {
        let schema = Self {
            response_column: response_column.into(),
            feature_columns,
            na_policy,
        };
        schema.validate()?;
        Ok(schema)
    }

    fn validate(&self) -> Result<()> {
        if let FeatureColumns::Named(cols) = &self.feature_columns {
            if cols.contains(&self.response_column) {
                return Err(Error::InvalidConfig(format!(
                    "response column '{}' is also listed as a feature",
                    self.response_column
                )));
            }
            if cols.is_empty() {
                return Err(Error::InvalidConfig("no feature columns selected".into()));
            }
        }
        Ok(())
    }
}

fn is_missing(cell: &str) -> bool {
    matches!(cell.trim(), "" | "NA" | "N/A" | "na" | "NaN" | "nan" | "null" | "NULL")
}

/// Reads a headed, comma-separated file into a dataset, keeping row order.
pub fn load_csv(path: impl AsRef<Path>, schema: &CsvSchema) -> Result<Dataset<f64>> {
    schema.validate()?;
    let path = path.as_ref();
    let mut reader = csv::ReaderBuilder::new().has_headers(true).from_path(path)?;
    let headers: Vec<String> = reader.headers()?.iter().map(|h| h.trim().to_string()).collect();
    let find = |name: &str| {
        headers
            .iter()
            .position(|h| h == name)
            .ok_or_else(|| Error::InvalidData(format!("column '{name}' not found in {}", path.display())))
    };
    let y_col = find(&schema.response_column)?;
    let x_cols: Vec<usize> = match &schema.feature_columns {
        FeatureColumns::AllOthers => (0..headers.len()).filter(|&c| c != y_col).collect(),
        FeatureColumns::Named(names) => names.iter().map(|n| find(n)).collect::<Result<_>>()?,
    };
    if x_cols.is_empty() {
        return Err(Error::InvalidData("no feature columns in file".into()));
    }

    // rows of (response, features) with missing cells as None
    let mut rows: Vec<(Option<f64>, Vec<Option<f64>>)> = Vec::new();
    for (line, record) in reader.records().enumerate() {
        let record = record?;
        let parse = |c: usize| -> Result<Option<f64>> {
            let cell = record.get(c).unwrap_or("");
            if is_missing(cell) {
                return Ok(None);
            }
            let v: f64 = cell.trim().parse().map_err(|_| {
                Error::InvalidData(format!(
                    "non-numeric value '{cell}' in column '{}' at data row {}",
                    headers[c],
                    line + 1
                ))
            })?;
            if v.is_finite() {
                Ok(Some(v))
            } else {
                Err(Error::InvalidData(format!("non-finite value at data row {}", line + 1)))
            }
        };
        let y = parse(y_col)?;
        let x = x_cols.iter().map(|&c| parse(c)).collect::<Result<Vec<_>>>()?;
        rows.push((y, x));
    }
    if rows.is_empty() {
        return Err(Error::InvalidData(format!("{} has no data rows", path.display())));
    }

    match schema.na_policy {
        NaPolicy::Reject => {
            if let Some(i) = rows.iter().position(|(y, x)| y.is_none() || x.iter().any(Option::is_none)) {
                return Err(Error::InvalidData(format!("missing value at data row {}", i + 1)));
            }
        }
        NaPolicy::DropRows => rows.retain(|(y, x)| y.is_some() && x.iter().all(Option::is_some)),
        NaPolicy::ImputeMean => rows.retain(|(y, _)| y.is_some()),
    }
    if rows.is_empty() {
        return Err(Error::InvalidData("no complete rows remain".into()));
    }
    let p = x_cols.len();
    let means: Vec<f64> = (0..p)
        .map(|j| {
            let seen: Vec<f64> = rows.iter().filter_map(|(_, x)| x[j]).collect();
            if seen.is_empty() {
                f64::NAN
            } else {
                seen.iter().sum::<f64>() / seen.len() as f64
            }
        })
        .collect();
    let n = rows.len();
    let features = Array2::from_shape_fn((n, p), |(i, j)| rows[i].1[j].unwrap_or(means[j]));
    let responses: Array1<f64> = rows.iter().map(|(y, _)| y.expect("filtered")).collect();
    let names = x_cols.iter().map(|&c| headers[c].clone()).collect::<Vec<_>>();
    Dataset::with_names(features, responses, Some(names))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SplitSize {
    TrainFraction(f64),
    TrainCount(usize),
}

#[derive(Debug, Clone)]
pub struct Split {
    pub train: Dataset<f64>,
    pub test: Dataset<f64>,
    pub train_indices: Vec<usize>,
    pub test_indices: Vec<usize>,
}

/// Seeded random partition into train and test rows (each kept in file order).
pub fn split(data: &Dataset<f64>, size: SplitSize, seed: SeedSpec) -> Result<Split> {
    let n = data.n();
    let n_train = match size {
        SplitSize::TrainFraction(f) if f > 0.0 && f < 1.0 => (n as f64 * f).round() as usize,
        SplitSize::TrainFraction(f) => return Err(Error::InvalidConfig(format!("train fraction {f} outside (0, 1)"))),
        SplitSize::TrainCount(c) => c,
    };
    if n_train == 0 || n_train >= n {
        return Err(Error::InvalidConfig(format!(
            "split of {n} rows leaves {n_train} for training; both parts must be nonempty"
        )));
    }
    let mut order: Vec<usize> = (0..n).collect();
    order.shuffle(&mut seed.rng(0));
    let mut train_indices = order[..n_train].to_vec();
    let mut test_indices = order[n_train..].to_vec();
    train_indices.sort_unstable();
    test_indices.sort_unstable();
    Ok(Split {
        train: data.select_rows(&train_indices),
        test: data.select_rows(&test_indices),
        train_indices,
        test_indices,
    })
}

/// One line of a results file.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ResultRow {
    pub id: usize,
    pub y_hat: f64,
    pub se: Option<f64>,
    pub lower: f64,
    pub upper: f64,
    pub truth: Option<f64>,
    pub covered: Option<u8>,
}

pub fn result_rows(out: &MethodOutput, truth: Option<&[f64]>) -> Result<Vec<ResultRow>> {
    if truth.is_some_and(|t| t.len() != out.len()) {
        return Err(Error::Shape("truth length differs from the number of predictions".into()));
    }
    Ok((0..out.len())
        .map(|i| {
            let (lower, upper) = out.intervals[i];
            let t = truth.map(|t| t[i]);
            ResultRow {
                id: i,
                y_hat: out.y_hat[i],
                se: out.se.as_ref().map(|s| s[i]),
                lower,
                upper,
                truth: t,
                covered: t.map(|t| u8::from(crate::metrics::covers(t, lower, upper))),
            }
        })
        .collect())
}

/// Writes `id,y_hat,se,lower,upper[,truth,covered]`. Reals use the shortest
/// representation that parses back to the same value; a missing SE is empty.
pub fn write_results(path: impl AsRef<Path>, out: &MethodOutput, truth: Option<&[f64]>) -> Result<()> {
    let rows = result_rows(out, truth)?;
    let mut w = csv::Writer::from_path(path)?;
    let mut header = vec!["id", "y_hat", "se", "lower", "upper"];
    if truth.is_some() {
        header.extend(["truth", "covered"]);
    }
    w.write_record(&header)?;
    for r in &rows {
        let mut rec = vec![
            r.id.to_string(),
            r.y_hat.to_string(),
            r.se.map(|s| s.to_string()).unwrap_or_default(),
            r.lower.to_string(),
            r.upper.to_string(),
        ];
        if let (Some(t), Some(c)) = (r.truth, r.covered) {
            rec.push(t.to_string());
            rec.push(c.to_string());
        }
        w.write_record(&rec)?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_inferences(path: impl AsRef<Path>, inf: &[PredictionInference<f64>], truth: Option<&[f64]>) -> Result<()> {
    let out = MethodOutput::new(
        inf.iter().map(|p| p.y_hat).collect(),
        Some(inf.iter().map(|p| p.sigma_hat).collect()),
        inf.iter().map(|p| (p.lower, p.upper)).collect(),
    )?;
    write_results(path, &out, truth)
}

/// Parses a file produced by [`write_results`].
pub fn read_results(path: impl AsRef<Path>) -> Result<Vec<ResultRow>> {
    let mut reader = csv::Reader::from_path(path)?;
    let has_truth = reader.headers()?.len() > 5;
    let mut rows = Vec::new();
    for rec in reader.records() {
        let rec = rec?;
        let num = |c: usize| -> Result<f64> {
            rec.get(c)
                .unwrap_or("")
                .parse()
                .map_err(|_| Error::InvalidData(format!("bad number in results column {c}")))
        };
        let se = match rec.get(2) {
            Some("") | None => None,
            Some(_) => Some(num(2)?),
        };
        rows.push(ResultRow {
            id: num(0)? as usize,
            y_hat: num(1)?,
            se,
            lower: num(3)?,
            upper: num(4)?,
            truth: if has_truth { Some(num(5)?) } else { None },
            covered: if has_truth { Some(num(6)? as u8) } else { None },
        });
    }
    Ok(rows)
}

/// Pretty-printed JSON with a trailing newline.
pub fn write_json<S: Serialize>(path: impl AsRef<Path>, value: &S) -> Result<()> {
    let mut f = File::create(path)?;
    serde_json::to_writer_pretty(&mut f, value)?;
    writeln!(f)?;
    Ok(())
}
