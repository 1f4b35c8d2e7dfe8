//! Side-by-side comparison of an MAE table against reference values.

use std::fmt;
use std::path::{Path, PathBuf};

use crate::error::{AppError, Result};
use crate::format::sci3;
use crate::output::{csv_bytes, write_atomic, Table};

#[derive(Debug, Clone, Default)]
pub struct CompareOptions {
    pub ours_col: Option<String>,
    pub ref_col: Option<String>,
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Row {
    pub key: String,
    pub ours: String,
    pub reference: String,
    pub ratio: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ColumnComparison {
    pub ours_col: String,
    pub ref_col: String,
    pub rows: Vec<Row>,
}

impl ColumnComparison {
    pub fn max_ratio(&self) -> f64 {
        self.rows.iter().map(|r| r.ratio).fold(f64::NAN, f64::max)
    }

    pub fn mean_ratio(&self) -> f64 {
        self.rows.iter().map(|r| r.ratio).sum::<f64>() / self.rows.len() as f64
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Summary {
    pub key_name: String,
    pub columns: Vec<ColumnComparison>,
    pub out: PathBuf,
}

impl fmt::Display for Summary {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for c in &self.columns {
            writeln!(f, "{} (ours) vs {} (reference)", c.ours_col, c.ref_col)?;
            for r in &c.rows {
                writeln!(
                    f,
                    "  {}={}  ours {}  reference {}  ratio {}",
                    self.key_name,
                    r.key,
                    r.ours,
                    r.reference,
                    sci3(r.ratio)
                )?;
            }
            writeln!(
                f,
                "  max ratio {}  mean ratio {}",
                sci3(c.max_ratio()),
                sci3(c.mean_ratio())
            )?;
        }
        write!(f, "wrote {}", self.out.display())
    }
}

fn parse_key(path: &Path, s: &str) -> Result<f64> {
    s.parse()
        .map_err(|_| AppError::format(path, format!("row key {s:?} is not a number")))
}

fn parse_value(path: &Path, s: &str) -> Result<f64> {
    s.parse()
        .map_err(|_| AppError::format(path, format!("value {s:?} is not a number")))
}

fn default_out(ours: &Path, reference: &Path) -> PathBuf {
    let stem = |p: &Path| {
        p.file_stem()
            .map_or_else(|| "table".into(), |s| s.to_string_lossy().into_owned())
    };
    let name = format!("{}_vs_{}.csv", stem(ours), stem(reference));
    ours.parent()
        .map_or_else(|| PathBuf::from(&name), |d| d.join(&name))
}

/// Column pairs to compare: the named ones, or every value column the two
/// tables share.
fn column_pairs(
    ours: &Table,
    reference: &Table,
    o: &CompareOptions,
) -> Result<Vec<(usize, usize)>> {
    let find = |t: &Table, name: &str, which: &str| {
        t.column(name)
            .filter(|&i| i > 0)
            .ok_or_else(|| AppError::Compare(format!("{which} table has no column {name:?}")))
    };
    match (&o.ours_col, &o.ref_col) {
        (Some(a), Some(b)) => Ok(vec![(
            find(ours, a, "our")?,
            find(reference, b, "reference")?,
        )]),
        (Some(a), None) | (None, Some(a)) => Ok(vec![(
            find(ours, a, "our")?,
            find(reference, a, "reference")?,
        )]),
        (None, None) => {
            let pairs: Vec<_> = reference.header[1..]
                .iter()
                .enumerate()
                .filter_map(|(j, name)| ours.column(name).filter(|&i| i > 0).map(|i| (i, j + 1)))
                .collect();
            if pairs.is_empty() {
                return Err(AppError::Compare(
                    "no shared value columns; pick them with --ours-col and --ref-col".into(),
                ));
            }
            Ok(pairs)
        }
    }
}

/// Matches rows by numeric key. Every reference key must be present in
/// `ours`; extra rows in `ours` are ignored. Ratios are `|ours| / |reference|`.
/// The side-by-side CSV is written only once the comparison succeeds.
pub fn compare(ours_path: &Path, ref_path: &Path, opts: &CompareOptions) -> Result<Summary> {
    let reference = Table::read(ref_path)?;
    if reference.header.len() < 2 || reference.rows.is_empty() {
        return Err(AppError::Compare(format!(
            "reference {} has no data",
            ref_path.display()
        )));
    }
    let ours = Table::read(ours_path)?;
    if ours.header.len() < 2 {
        return Err(AppError::Compare(format!(
            "{} has no value columns",
            ours_path.display()
        )));
    }
    let pairs = column_pairs(&ours, &reference, opts)?;

    let our_keys = ours
        .rows
        .iter()
        .map(|r| parse_key(ours_path, &r[0]))
        .collect::<Result<Vec<_>>>()?;
    let mut matched = Vec::with_capacity(reference.rows.len());
    let mut missing = Vec::new();
    for row in &reference.rows {
        let k = parse_key(ref_path, &row[0])?;
        match our_keys.iter().position(|&o| (o - k).abs() <= 1e-9) {
            Some(i) => matched.push((&ours.rows[i], row)),
            None => missing.push(row[0].clone()),
        }
    }
    if !missing.is_empty() {
        return Err(AppError::Compare(format!(
            "keys missing from {}: {}",
            ours_path.display(),
            missing.join(", ")
        )));
    }

    let mut columns = Vec::with_capacity(pairs.len());
    for &(oi, ri) in &pairs {
        let rows = matched
            .iter()
            .map(|(o, r)| {
                let ours_v = parse_value(ours_path, &o[oi])?;
                let ref_v = parse_value(ref_path, &r[ri])?;
                Ok(Row {
                    key: r[0].clone(),
                    ours: o[oi].clone(),
                    reference: r[ri].clone(),
                    ratio: ours_v.abs() / ref_v.abs(),
                })
            })
            .collect::<Result<Vec<_>>>()?;
        columns.push(ColumnComparison {
            ours_col: ours.header[oi].clone(),
            ref_col: reference.header[ri].clone(),
            rows,
        });
    }

    let key_name = reference.header[0].clone();
    let header: Vec<String> = [
        key_name.as_str(),
        "ours_column",
        "reference_column",
        "ours",
        "reference",
        "ratio",
    ]
    .map(String::from)
    .to_vec();
    let rows: Vec<Vec<String>> = columns
        .iter()
        .flat_map(|c| {
            c.rows.iter().map(|r| {
                vec![
                    r.key.clone(),
                    c.ours_col.clone(),
                    c.ref_col.clone(),
                    r.ours.clone(),
                    r.reference.clone(),
                    sci3(r.ratio),
                ]
            })
        })
        .collect();
    let out = opts
        .out
        .clone()
        .unwrap_or_else(|| default_out(ours_path, ref_path));
    write_atomic(&out, &csv_bytes(&header, &rows)?)?;
    Ok(Summary {
        key_name,
        columns,
        out,
    })
}
