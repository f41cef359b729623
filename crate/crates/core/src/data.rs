//! Dataset representation, CSV ingestion and deterministic column transforms.

use std::collections::HashSet;
use std::path::Path;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// A T×d panel of observations; rows are time, columns are variables.
#[derive(Debug, Clone, PartialEq)]
pub struct TimeSeriesDataset {
    values: DMatrix<f64>,
    names: Vec<String>,
    index: Option<Vec<String>>,
}

impl TimeSeriesDataset {
    pub fn new(values: DMatrix<f64>, names: Vec<String>, index: Option<Vec<String>>) -> Result<Self> {
        let (t, d) = values.shape();
        if t == 0 || d == 0 {
            return Err(Error::Shape(format!("dataset must be non-empty, got {t}x{d}")));
        }
        if names.len() != d {
            return Err(Error::Shape(format!("{} names for {} columns", names.len(), d)));
        }
        let unique: HashSet<&String> = names.iter().collect();
        if unique.len() != d {
            return Err(Error::Shape("variable names must be unique".into()));
        }
        if let Some(ix) = &index {
            if ix.len() != t {
                return Err(Error::Shape(format!("index has {} labels for {} rows", ix.len(), t)));
            }
        }
        for c in 0..d {
            for r in 0..t {
                let v = values[(r, c)];
                if !v.is_finite() {
                    return Err(Error::Parse { row: r, col: c, msg: format!("non-finite value {v}") });
                }
            }
        }
        Ok(Self { values, names, index })
    }

    /// Dataset with generated names `v1..vd` and no index.
    pub fn from_matrix(values: DMatrix<f64>) -> Result<Self> {
        let names = default_names(values.ncols());
        Self::new(values, names, None)
    }

    pub fn values(&self) -> &DMatrix<f64> {
        &self.values
    }

    pub fn names(&self) -> &[String] {
        &self.names
    }

    pub fn index(&self) -> Option<&[String]> {
        self.index.as_deref()
    }

    pub fn nobs(&self) -> usize {
        self.values.nrows()
    }

    pub fn dim(&self) -> usize {
        self.values.ncols()
    }

    /// Rows `start..end` as a new dataset.
    pub fn slice_rows(&self, start: usize, end: usize) -> Result<Self> {
        if start >= end || end > self.nobs() {
            return Err(Error::Shape(format!("row range {start}..{end} outside 0..{}", self.nobs())));
        }
        let values = self.values.rows(start, end - start).into_owned();
        let index = self.index.as_ref().map(|ix| ix[start..end].to_vec());
        Self::new(values, self.names.clone(), index)
    }

    /// Linear map applied to every observation: `y_t ↦ m · y_t`.
    pub fn premultiply(&self, m: &DMatrix<f64>) -> Result<Self> {
        if m.nrows() != self.dim() || m.ncols() != self.dim() {
            return Err(Error::Shape("premultiplier must be d×d".into()));
        }
        let values = &self.values * m.transpose();
        Self::new(values, self.names.clone(), self.index.clone())
    }
}

pub fn default_names(d: usize) -> Vec<String> {
    (1..=d).map(|i| format!("v{i}")).collect()
}

/// Reads a comma-separated file of decimal reals.
///
/// `index_col` names a column holding opaque time labels; it is never parsed as data.
/// Parse errors report 0-based data-row and file-column coordinates.
pub fn load_csv(path: impl AsRef<Path>, has_header: bool, index_col: Option<usize>) -> Result<TimeSeriesDataset> {
    let text = std::fs::read_to_string(path.as_ref())?;
    parse_csv(&text, has_header, index_col)
}

pub fn parse_csv(text: &str, has_header: bool, index_col: Option<usize>) -> Result<TimeSeriesDataset> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(false)
        .flexible(true)
        .trim(csv::Trim::All)
        .from_reader(text.as_bytes());

    let mut header: Option<Vec<String>> = None;
    let mut rows: Vec<Vec<f64>> = Vec::new();
    let mut labels: Vec<String> = Vec::new();
    let mut width: Option<usize> = None;

    for (line, rec) in reader.records().enumerate() {
        let rec = rec.map_err(|e| Error::Shape(format!("malformed CSV record: {e}")))?;
        if rec.len() == 1 && rec.get(0).is_some_and(|s| s.is_empty()) {
            continue;
        }
        match width {
            None => width = Some(rec.len()),
            Some(w) if w != rec.len() => {
                return Err(Error::Shape(format!(
                    "ragged row at line {}: {} fields, expected {}",
                    line + 1,
                    rec.len(),
                    w
                )))
            }
            _ => {}
        }
        if has_header && header.is_none() {
            header = Some(rec.iter().map(str::to_string).collect());
            continue;
        }
        let data_row = rows.len();
        let mut vals = Vec::with_capacity(rec.len());
        for (c, cell) in rec.iter().enumerate() {
            if Some(c) == index_col {
                labels.push(cell.to_string());
                continue;
            }
            let v: f64 = cell.parse().map_err(|_| Error::Parse {
                row: data_row,
                col: c,
                msg: format!("'{cell}' is not a real number"),
            })?;
            if !v.is_finite() {
                return Err(Error::Parse { row: data_row, col: c, msg: format!("'{cell}' is not finite") });
            }
            vals.push(v);
        }
        rows.push(vals);
    }

    let w = width.ok_or_else(|| Error::Shape("empty CSV".into()))?;
    if let Some(ic) = index_col {
        if ic >= w {
            return Err(Error::Shape(format!("index column {ic} outside {w} columns")));
        }
    }
    let d = w - usize::from(index_col.is_some());
    let t = rows.len();
    if t == 0 || d == 0 {
        return Err(Error::Shape("CSV holds no data".into()));
    }
    let names = match header {
        Some(h) => h
            .into_iter()
            .enumerate()
            .filter(|(c, _)| Some(*c) != index_col)
            .map(|(_, s)| s)
            .collect(),
        None => default_names(d),
    };
    let values = DMatrix::from_fn(t, d, |r, c| rows[r][c]);
    let index = index_col.map(|_| labels);
    TimeSeriesDataset::new(values, names, index)
}

/// Per-column transform.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Transform {
    None,
    Log,
    Diff(usize),
    Demean,
}

impl std::str::FromStr for Transform {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        match s {
            "none" => Ok(Transform::None),
            "log" => Ok(Transform::Log),
            "demean" => Ok(Transform::Demean),
            "diff" => Ok(Transform::Diff(1)),
            _ => {
                let k = s
                    .strip_prefix("diff(")
                    .and_then(|r| r.strip_suffix(')'))
                    .or_else(|| s.strip_prefix("diff"))
                    .and_then(|k| k.parse::<usize>().ok())
                    .ok_or_else(|| Error::InvalidArgument(format!("unknown transform '{s}'")))?;
                Ok(Transform::Diff(k))
            }
        }
    }
}

/// One transform per column.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TransformSpec(pub Vec<Transform>);

impl TransformSpec {
    pub fn identity(d: usize) -> Self {
        Self(vec![Transform::None; d])
    }

    /// Comma-separated list, e.g. `log,diff(1),none`.
    pub fn parse(s: &str) -> Result<Self> {
        s.split(',').map(str::parse).collect::<Result<Vec<_>>>().map(Self)
    }
}

/// Applies `spec` column by column.
///
/// Logs and differences run first; all columns are then cut from the top to the shortest
/// resulting length so rows stay contemporaneous; demeaning runs last, on the aligned sample.
pub fn transform(ds: &TimeSeriesDataset, spec: &TransformSpec) -> Result<TimeSeriesDataset> {
    let d = ds.dim();
    let t = ds.nobs();
    if spec.0.len() != d {
        return Err(Error::Shape(format!("{} transforms for {} columns", spec.0.len(), d)));
    }
    let mut cols: Vec<Vec<f64>> = Vec::with_capacity(d);
    for (c, op) in spec.0.iter().enumerate() {
        let mut col: Vec<f64> = ds.values.column(c).iter().copied().collect();
        match *op {
            Transform::None | Transform::Demean => {}
            Transform::Log => {
                if let Some((r, v)) = col.iter().enumerate().find(|(_, v)| **v <= 0.0) {
                    return Err(Error::Domain(format!(
                        "log of non-positive value {v} in column '{}' at row {r}",
                        ds.names[c]
                    )));
                }
                col.iter_mut().for_each(|v| *v = v.ln());
            }
            Transform::Diff(k) => {
                if k == 0 {
                    return Err(Error::InvalidArgument("difference order must be at least 1".into()));
                }
                for _ in 0..k {
                    col = col.windows(2).map(|w| w[1] - w[0]).collect();
                }
            }
        }
        cols.push(col);
    }
    let len = cols.iter().map(Vec::len).min().unwrap_or(0);
    if len == 0 {
        return Err(Error::InsufficientData("transforms leave no observations".into()));
    }
    for (c, op) in spec.0.iter().enumerate() {
        let drop = cols[c].len() - len;
        cols[c].drain(..drop);
        if *op == Transform::Demean {
            let mean = cols[c].iter().sum::<f64>() / len as f64;
            cols[c].iter_mut().for_each(|v| *v -= mean);
        }
    }
    let values = DMatrix::from_fn(len, d, |r, c| cols[c][r]);
    let index = ds.index.as_ref().map(|ix| ix[t - len..].to_vec());
    TimeSeriesDataset::new(values, ds.names.clone(), index)
}
