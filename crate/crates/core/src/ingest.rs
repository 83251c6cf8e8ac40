//! Delimited-text loading and preprocessing.
//!
//! Empty cells and `?` are missing values; [`impute_missing`] replaces them
//! with zero. A label column, when selected, is held apart from the
//! features and only ever reaches evaluation.

use std::fs::File;
use std::io::{BufRead, BufReader, Write};
use std::path::{Path, PathBuf};
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::model::Dataset;

/// Column holding ground-truth labels, by zero-based index or header name.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum LabelColumn {
    Index(usize),
    Name(String),
}

impl FromStr for LabelColumn {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        if s.is_empty() {
            return Err(Error::InvalidConfig("empty label column".into()));
        }
        Ok(match s.parse::<usize>() {
            Ok(i) => LabelColumn::Index(i),
            Err(_) => LabelColumn::Name(s.to_string()),
        })
    }
}

/// Parsed table before imputation. `header` and `rows` cover feature
/// columns only.
#[derive(Debug, Clone, PartialEq)]
pub struct RawTable {
    pub name: String,
    pub header: Option<Vec<String>>,
    pub rows: Vec<Vec<Option<f64>>>,
    pub n_cols: usize,
    pub labels: Option<Vec<String>>,
    pub label_name: Option<String>,
}

impl RawTable {
    pub fn missing_count(&self) -> usize {
        self.rows.iter().flatten().filter(|c| c.is_none()).count()
    }
}

fn is_missing(cell: &str) -> bool {
    cell.is_empty() || cell == "?"
}

fn sniff_delimiter(path: &Path) -> Result<u8> {
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    let mut first = String::new();
    BufReader::new(file)
        .read_line(&mut first)
        .map_err(|e| Error::io(path, e))?;
    Ok(if first.contains('\t') { b'\t' } else { b',' })
}

pub fn load_csv(path: &Path, label: Option<&LabelColumn>, has_header: bool) -> Result<RawTable> {
    let delimiter = sniff_delimiter(path)?;
    let mut reader = csv::ReaderBuilder::new()
        .delimiter(delimiter)
        .has_headers(false)
        .flexible(true)
        .trim(csv::Trim::All)
        .from_path(path)
        .map_err(|e| Error::Csv {
            path: path.to_path_buf(),
            source: e,
        })?;
    let parse_err = |row: usize, col: usize, msg: String| Error::Parse {
        path: path.to_path_buf(),
        row,
        col,
        msg,
    };

    let mut records = reader.records();
    let mut header: Option<Vec<String>> = None;
    let mut width = None;
    if has_header {
        match records.next() {
            Some(rec) => {
                let rec = rec.map_err(|e| Error::Csv {
                    path: path.to_path_buf(),
                    source: e,
                })?;
                width = Some(rec.len());
                header = Some(rec.iter().map(str::to_string).collect());
            }
            None => return Err(Error::Empty("file has no rows")),
        }
    }

    let mut cells: Vec<(usize, csv::StringRecord)> = Vec::new();
    for rec in records {
        let rec = rec.map_err(|e| Error::Csv {
            path: path.to_path_buf(),
            source: e,
        })?;
        let line = rec.position().map_or(0, |p| p.line() as usize);
        if rec.len() == 1 && rec[0].is_empty() {
            continue;
        }
        let expected = *width.get_or_insert(rec.len());
        if rec.len() != expected {
            return Err(parse_err(
                line,
                rec.len().min(expected) + 1,
                format!("expected {expected} cells, found {}", rec.len()),
            ));
        }
        cells.push((line, rec));
    }
    let width = width.ok_or(Error::Empty("file has no rows"))?;
    if cells.is_empty() {
        return Err(Error::Empty("file has no data rows"));
    }

    let label_idx = match label {
        None => None,
        Some(LabelColumn::Index(i)) if *i < width => Some(*i),
        Some(LabelColumn::Index(i)) => {
            return Err(Error::InvalidConfig(format!(
                "label column {i} out of range for {width} columns"
            )))
        }
        Some(LabelColumn::Name(name)) => {
            let h = header.as_ref().ok_or_else(|| {
                Error::InvalidConfig(format!("label column '{name}' named but the file has no header"))
            })?;
            Some(h.iter().position(|c| c == name).ok_or_else(|| {
                Error::InvalidConfig(format!("no column named '{name}'"))
            })?)
        }
    };
    if label_idx.is_some() && width < 2 {
        return Err(Error::InvalidData("no feature columns besides the label".into()));
    }

    let mut rows = Vec::with_capacity(cells.len());
    let mut labels = label_idx.map(|_| Vec::with_capacity(cells.len()));
    for (line, rec) in &cells {
        let mut row = Vec::with_capacity(width);
        for (c, cell) in rec.iter().enumerate() {
            if Some(c) == label_idx {
                labels.as_mut().expect("label vector").push(cell.to_string());
                continue;
            }
            if is_missing(cell) {
                row.push(None);
                continue;
            }
            let v: f64 = cell
                .parse()
                .map_err(|_| parse_err(*line, c + 1, format!("'{cell}' is not a number")))?;
            if !v.is_finite() {
                return Err(parse_err(*line, c + 1, format!("'{cell}' is not finite")));
            }
            row.push(Some(v));
        }
        rows.push(row);
    }

    let label_name = label_idx.map(|i| {
        header
            .as_ref()
            .map_or_else(|| format!("column{i}"), |h| h[i].clone())
    });
    let header = header.map(|h| {
        h.into_iter()
            .enumerate()
            .filter(|(i, _)| Some(*i) != label_idx)
            .map(|(_, name)| name)
            .collect()
    });
    Ok(RawTable {
        name: path
            .file_stem()
            .map_or_else(|| "data".to_string(), |s| s.to_string_lossy().into_owned()),
        header,
        rows,
        n_cols: width - usize::from(label_idx.is_some()),
        labels,
        label_name,
    })
}

/// Replaces every missing cell with 0.0.
pub fn impute_missing(raw: &RawTable) -> Result<Dataset> {
    let values: Vec<f64> = raw
        .rows
        .iter()
        .flat_map(|r| r.iter().map(|c| c.unwrap_or(0.0)))
        .collect();
    let ds = Dataset::from_flat(raw.name.clone(), raw.n_cols, values)?;
    match &raw.labels {
        Some(l) => ds.with_labels(l.clone()),
        None => Ok(ds),
    }
}

/// Per-column z-scores. Constant columns become all zero.
pub fn standardize(dataset: &Dataset) -> Result<Dataset> {
    let (n, dim) = (dataset.len(), dataset.dim());
    let mut mean = vec![0.0; dim];
    for p in dataset.points() {
        for (m, x) in mean.iter_mut().zip(p) {
            *m += x;
        }
    }
    mean.iter_mut().for_each(|m| *m /= n as f64);
    let mut sd = vec![0.0; dim];
    for p in dataset.points() {
        for ((s, x), m) in sd.iter_mut().zip(p).zip(&mean) {
            *s += (x - m) * (x - m);
        }
    }
    sd.iter_mut().for_each(|s| *s = (*s / n as f64).sqrt());
    let values = dataset
        .points()
        .flat_map(|p| {
            p.iter()
                .zip(&mean)
                .zip(&sd)
                .map(|((x, m), s)| if *s > 0.0 { (x - m) / s } else { 0.0 })
                .collect::<Vec<_>>()
        })
        .collect();
    let out = Dataset::from_flat(dataset.name(), dim, values)?;
    match dataset.labels() {
        Some(l) => out.with_labels(l.to_vec()),
        None => Ok(out),
    }
}

/// Writes the dataset as comma-separated text with a header row
/// (`x0..x{D-1}`, then `label` when labels exist). Values are written in
/// shortest round-trip form.
pub fn write_csv(path: &Path, dataset: &Dataset) -> Result<()> {
    let io_err = |e| Error::io(PathBuf::from(path), e);
    let mut out = std::io::BufWriter::new(File::create(path).map_err(io_err)?);
    let mut header: Vec<String> = (0..dataset.dim()).map(|j| format!("x{j}")).collect();
    if dataset.labels().is_some() {
        header.push("label".into());
    }
    writeln!(out, "{}", header.join(",")).map_err(io_err)?;
    for (i, p) in dataset.points().enumerate() {
        let mut cells: Vec<String> = p.iter().map(|v| v.to_string()).collect();
        if let Some(l) = dataset.labels() {
            cells.push(l[i].clone());
        }
        writeln!(out, "{}", cells.join(",")).map_err(io_err)?;
    }
    out.flush().map_err(io_err)
}
