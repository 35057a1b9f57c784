//! Comma-separated data files. A header row is mandatory; cells are parsed
//! with `str::parse::<f64>`, so only a decimal point is accepted.

use std::path::{Path, PathBuf};

use ocr_core::{Dataset, Matrix};

use crate::error::{CliError, Result};

/// Name given to the all-ones column when `--intercept` is on.
pub const INTERCEPT_NAME: &str = "(intercept)";

/// A parsed file: header plus raw string cells.
#[derive(Debug, Clone)]
pub struct Table {
    pub path: PathBuf,
    pub headers: Vec<String>,
    rows: Vec<csv::StringRecord>,
}

impl Table {
    pub fn read(path: &Path) -> Result<Self> {
        let file = std::fs::File::open(path).map_err(|e| CliError::io(path, e))?;
        let mut rdr = csv::ReaderBuilder::new().has_headers(true).trim(csv::Trim::All).from_reader(file);
        let csv_err = |source| CliError::Csv { path: path.to_path_buf(), source };
        let headers: Vec<String> = rdr.headers().map_err(csv_err)?.iter().map(str::to_owned).collect();
        if headers.iter().all(|h| h.is_empty()) {
            return Err(CliError::EmptyFile(path.to_path_buf()));
        }
        let rows = rdr.records().collect::<Result<Vec<_>, _>>().map_err(csv_err)?;
        if rows.is_empty() {
            return Err(CliError::EmptyFile(path.to_path_buf()));
        }
        Ok(Self { path: path.to_path_buf(), headers, rows })
    }

    pub fn n_rows(&self) -> usize {
        self.rows.len()
    }

    pub fn column_index(&self, name: &str) -> Result<usize> {
        self.headers.iter().position(|h| h == name).ok_or_else(|| CliError::MissingColumn(name.to_owned()))
    }

    /// Parses column `j`; rows are numbered from 1, header excluded.
    pub fn numeric_column(&self, j: usize) -> Result<Vec<f64>> {
        self.rows
            .iter()
            .enumerate()
            .map(|(i, r)| {
                let cell = r.get(j).unwrap_or("");
                match cell.parse::<f64>() {
                    Ok(v) if v.is_finite() => Ok(v),
                    _ => Err(CliError::NonNumericCell {
                        row: i + 1,
                        column: self.headers[j].clone(),
                        value: cell.to_owned(),
                    }),
                }
            })
            .collect()
    }

    /// Row-major matrix from the given columns.
    pub fn matrix(&self, columns: &[usize]) -> Result<Matrix> {
        let parsed = columns.iter().map(|&j| self.numeric_column(j)).collect::<Result<Vec<_>>>()?;
        let n = self.n_rows();
        let mut data = Vec::with_capacity(n * columns.len());
        for i in 0..n {
            data.extend(parsed.iter().map(|c| c[i]));
        }
        Ok(Matrix::new(n, columns.len(), data)?)
    }
}

#[derive(Debug, Clone)]
pub struct LoadedData {
    pub dataset: Dataset,
    pub w: Option<Vec<f64>>,
    /// One name per design column, the intercept included.
    pub columns: Vec<String>,
}

/// `X` is every column except the outcome and `w`, in file order.
pub fn read_csv(path: &Path, outcome: &str, w_column: Option<&str>, intercept: bool) -> Result<LoadedData> {
    let table = Table::read(path)?;
    let yj = table.column_index(outcome)?;
    let wj = w_column.map(|w| table.column_index(w)).transpose()?;
    let xj: Vec<usize> = (0..table.headers.len()).filter(|&j| j != yj && Some(j) != wj).collect();
    let x = table.matrix(&xj)?;
    let y = table.numeric_column(yj)?;
    let w = wj.map(|j| table.numeric_column(j)).transpose()?;
    let mut columns: Vec<String> = xj.iter().map(|&j| table.headers[j].clone()).collect();
    let dataset = if intercept {
        columns.insert(0, INTERCEPT_NAME.to_owned());
        Dataset::with_intercept(&x, y)?
    } else {
        Dataset::new(x, y)?
    };
    Ok(LoadedData { dataset, w, columns })
}

/// Design matrix for new data, matched against the model's column names.
/// An `outcome` column, if named and present, is ignored.
pub fn read_features(path: &Path, columns: &[String], outcome: Option<&str>) -> Result<Matrix> {
    let table = Table::read(path)?;
    let intercept = columns.first().is_some_and(|c| c == INTERCEPT_NAME);
    let wanted = if intercept { &columns[1..] } else { columns };
    let present: Vec<usize> =
        (0..table.headers.len()).filter(|&j| Some(table.headers[j].as_str()) != outcome).collect();
    if present.len() != wanted.len() {
        return Err(ocr_core::OcrError::DimensionMismatch { expected: wanted.len(), got: present.len() }.into());
    }
    let idx = wanted.iter().map(|c| table.column_index(c)).collect::<Result<Vec<_>>>()?;
    let x = table.matrix(&idx)?;
    if !intercept {
        return Ok(x);
    }
    let mut data = Vec::with_capacity(x.rows() * columns.len());
    for i in 0..x.rows() {
        data.push(1.0);
        data.extend_from_slice(x.row(i));
    }
    Ok(Matrix::new(x.rows(), columns.len(), data)?)
}

/// Writes the feature columns then the outcome. An intercept column is
/// skipped, so reading back with the same intercept flag restores `d`.
pub fn write_csv(path: &Path, d: &Dataset, columns: &[String], outcome: &str) -> Result<()> {
    let skip = usize::from(d.has_intercept_column());
    let mut wtr = csv::Writer::from_path(path).map_err(|source| CliError::Csv { path: path.to_path_buf(), source })?;
    let wrap = |source| CliError::Csv { path: path.to_path_buf(), source };
    let mut header: Vec<&str> = columns[skip..].iter().map(String::as_str).collect();
    header.push(outcome);
    wtr.write_record(&header).map_err(wrap)?;
    for i in 0..d.n() {
        let mut rec: Vec<String> = d.x().row(i)[skip..].iter().map(f64::to_string).collect();
        rec.push(d.y()[i].to_string());
        wtr.write_record(&rec).map_err(wrap)?;
    }
    wtr.flush().map_err(|e| CliError::io(path, e))
}
