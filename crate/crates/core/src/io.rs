//! Headerless numeric CSV. Functional data carry the grid in the first row.
//! Lines starting with `#` are skipped.

use std::io::{Read, Write};
use std::sync::Arc;

use crate::data::{Dataset, FuncData};
use crate::error::{Result, RfmError};
use crate::numerics::Grid;

fn read_rows<R: Read>(reader: R) -> Result<Vec<Vec<f64>>> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(false)
        .trim(csv::Trim::All)
        .comment(Some(b'#'))
        .flexible(true)
        .from_reader(reader);
    let mut rows = Vec::new();
    for (i, rec) in rdr.records().enumerate() {
        let rec = rec?;
        if rec.iter().all(str::is_empty) {
            continue;
        }
        let row = rec
            .iter()
            .map(|f| {
                f.parse::<f64>().map_err(|e| RfmError::Parse {
                    line: i + 1,
                    reason: format!("{f:?}: {e}"),
                })
            })
            .collect::<Result<Vec<f64>>>()?;
        if let Some(first) = rows.first().map(Vec::len) {
            if row.len() != first {
                return Err(RfmError::Parse {
                    line: i + 1,
                    reason: format!("expected {first} fields, found {}", row.len()),
                });
            }
        }
        rows.push(row);
    }
    Ok(rows)
}

pub fn read_dataset<R: Read>(reader: R) -> Result<Dataset> {
    Dataset::from_rows(&read_rows(reader)?)
}

pub fn read_func_data<R: Read>(reader: R) -> Result<FuncData> {
    let mut rows = read_rows(reader)?.into_iter();
    let grid = Arc::new(Grid::new(rows.next().ok_or(RfmError::Empty("grid row"))?)?);
    let obs: Vec<Vec<f64>> = rows.collect();
    let n = obs.len();
    FuncData::new(grid, n, obs.concat())
}

pub fn read_labels<R: Read>(reader: R) -> Result<Vec<usize>> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(false)
        .trim(csv::Trim::All)
        .comment(Some(b'#'))
        .from_reader(reader);
    rdr.records()
        .enumerate()
        .map(|(i, rec)| {
            let rec = rec?;
            let f = rec.get(0).unwrap_or("");
            f.parse().map_err(|e| RfmError::Parse {
                line: i + 1,
                reason: format!("{f:?}: {e}"),
            })
        })
        .collect()
}

/// Writes `values` as rows of `width` fields.
pub fn write_rows<W: Write>(writer: W, values: &[f64], width: usize) -> Result<()> {
    let mut wtr = csv::WriterBuilder::new().has_headers(false).from_writer(writer);
    for row in values.chunks(width.max(1)) {
        wtr.write_record(row.iter().map(|v| v.to_string()))?;
    }
    wtr.flush()?;
    Ok(())
}

pub fn write_labels<W: Write>(writer: W, labels: &[usize]) -> Result<()> {
    let mut wtr = csv::WriterBuilder::new().has_headers(false).from_writer(writer);
    for l in labels {
        wtr.write_record([l.to_string()])?;
    }
    wtr.flush()?;
    Ok(())
}
