//! CSV input: raw observation tables and correlation matrices.
//!
//! Files are comma separated with a header row; cells are trimmed and must
//! parse as decimal numbers.

use std::collections::HashSet;
use std::fs::File;
use std::io::Read;
use std::path::Path;

use gridge_core::dataset::RawDataset;
use nalgebra::DMatrix;

use crate::error::{Error, Result};

fn open(path: &Path) -> Result<File> {
    File::open(path).map_err(|source| Error::Io { path: path.to_path_buf(), source })
}

struct Table {
    header: Vec<String>,
    rows: Vec<Vec<f64>>,
}

fn read_table<R: Read>(reader: R) -> Result<Table> {
    let mut csv = csv::ReaderBuilder::new().has_headers(true).trim(csv::Trim::All).from_reader(reader);
    let header: Vec<String> = csv.headers().map_err(|e| Error::Csv(e.to_string()))?.iter().map(String::from).collect();
    let mut seen = HashSet::new();
    for name in &header {
        if !seen.insert(name.as_str()) {
            return Err(Error::DuplicateHeader(name.clone()));
        }
    }
    let mut rows = Vec::new();
    for record in csv.records() {
        let record = record.map_err(|e| Error::Csv(e.to_string()))?;
        let line = record.position().map_or(0, |p| p.line());
        let row = record
            .iter()
            .zip(&header)
            .map(|(cell, column)| {
                cell.parse::<f64>().map_err(|_| Error::NonNumeric {
                    line,
                    column: column.clone(),
                    value: cell.to_string(),
                })
            })
            .collect::<Result<Vec<_>>>()?;
        rows.push(row);
    }
    Ok(Table { header, rows })
}

/// Reads every column; `dependent` names the response.
pub fn load_csv(path: &Path, dependent: &str) -> Result<RawDataset> {
    load_csv_excluding(path, dependent, &[])
}

/// Like [`load_csv`], dropping the columns named in `exclude`.
pub fn load_csv_excluding(path: &Path, dependent: &str, exclude: &[String]) -> Result<RawDataset> {
    read_csv(open(path)?, dependent, exclude)
}

pub fn read_csv<R: Read>(reader: R, dependent: &str, exclude: &[String]) -> Result<RawDataset> {
    let table = read_table(reader)?;
    for name in exclude {
        if !table.header.contains(name) {
            return Err(Error::UnknownColumn(name.clone()));
        }
        if name == dependent {
            return Err(Error::Usage(format!("cannot exclude the dependent column `{dependent}`")));
        }
    }
    let keep: Vec<usize> = (0..table.header.len()).filter(|&j| !exclude.contains(&table.header[j])).collect();
    let names: Vec<String> = keep.iter().map(|&j| table.header[j].clone()).collect();
    let dependent_index =
        names.iter().position(|n| n == dependent).ok_or_else(|| Error::UnknownColumn(dependent.to_string()))?;
    let obs = DMatrix::from_fn(table.rows.len(), keep.len(), |i, j| table.rows[i][keep[j]]);
    Ok(RawDataset::new(obs, names, dependent_index)?)
}

/// A square matrix whose header row carries the regressor names.
pub fn load_correlation(path: &Path) -> Result<(Vec<String>, DMatrix<f64>)> {
    read_correlation(open(path)?)
}

pub fn read_correlation<R: Read>(reader: R) -> Result<(Vec<String>, DMatrix<f64>)> {
    let table = read_table(reader)?;
    let m = table.header.len();
    if table.rows.len() != m {
        return Err(Error::Csv(format!("correlation matrix has {m} columns but {} rows", table.rows.len())));
    }
    let matrix = DMatrix::from_fn(m, m, |i, j| table.rows[i][j]);
    Ok((table.header, matrix))
}

/// Comma-separated numbers, e.g. `-0.6,-18.4,19.5`.
pub fn parse_list(text: &str) -> Result<Vec<f64>> {
    text.split(',')
        .map(|s| {
            let s = s.trim();
            s.parse::<f64>().map_err(|_| Error::Usage(format!("cannot parse `{s}` as a number")))
        })
        .collect()
}
