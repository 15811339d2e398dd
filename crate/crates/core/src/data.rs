//! Row-oriented datasets: `n × d` numeric observations and `n × T` sampled
//! functions sharing one grid.

use std::sync::Arc;

use crate::error::{Result, RfmError};
use crate::numerics::{FuncObs, Grid};

/// An `n × d` matrix of observations, stored row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    n: usize,
    d: usize,
    values: Vec<f64>,
}

impl Dataset {
    pub fn new(n: usize, d: usize, values: Vec<f64>) -> Result<Self> {
        if d == 0 {
            return Err(RfmError::Empty("dataset dimension"));
        }
        if values.len() != n * d {
            return Err(RfmError::DimensionMismatch {
                expected: n * d,
                got: values.len(),
            });
        }
        if let Some(i) = values.iter().position(|v| !v.is_finite()) {
            return Err(RfmError::NonFinite(i));
        }
        Ok(Dataset { n, d, values })
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let d = rows.first().map(Vec::len).ok_or(RfmError::Empty("dataset"))?;
        let mut values = Vec::with_capacity(rows.len() * d);
        for row in rows {
            if row.len() != d {
                return Err(RfmError::DimensionMismatch {
                    expected: d,
                    got: row.len(),
                });
            }
            values.extend_from_slice(row);
        }
        Self::new(rows.len(), d, values)
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn d(&self) -> usize {
        self.d
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.values[i * self.d..(i + 1) * self.d]
    }

    pub fn rows(&self) -> std::slice::ChunksExact<'_, f64> {
        self.values.chunks_exact(self.d)
    }

    pub fn column(&self, j: usize) -> Vec<f64> {
        self.rows().map(|r| r[j]).collect()
    }

    pub fn mean(&self) -> Vec<f64> {
        let mut acc = vec![0.0; self.d];
        for r in self.rows() {
            for (a, v) in acc.iter_mut().zip(r) {
                *a += v;
            }
        }
        acc.iter_mut().for_each(|a| *a /= self.n as f64);
        acc
    }

    /// Maximum-likelihood (divide by n) covariance.
    pub fn covariance(&self) -> Vec<f64> {
        let mu = self.mean();
        let d = self.d;
        let mut acc = vec![0.0; d * d];
        for r in self.rows() {
            for i in 0..d {
                let di = r[i] - mu[i];
                for j in i..d {
                    acc[i * d + j] += di * (r[j] - mu[j]);
                }
            }
        }
        for i in 0..d {
            for j in i..d {
                let v = acc[i * d + j] / self.n as f64;
                acc[i * d + j] = v;
                acc[j * d + i] = v;
            }
        }
        acc
    }

    /// Applies `x ↦ A x + b` to every row.
    pub fn affine_map(&self, a: &[f64], b: &[f64]) -> Dataset {
        let d = self.d;
        let mut values = Vec::with_capacity(self.values.len());
        for r in self.rows() {
            for i in 0..d {
                values.push(b[i] + (0..d).map(|j| a[i * d + j] * r[j]).sum::<f64>());
            }
        }
        Dataset { n: self.n, d, values }
    }
}

/// `n` functions sampled on a common grid, stored row-major (`n × T`).
#[derive(Debug, Clone, PartialEq)]
pub struct FuncData {
    grid: Arc<Grid>,
    n: usize,
    values: Vec<f64>,
}

impl FuncData {
    pub fn new(grid: Arc<Grid>, n: usize, values: Vec<f64>) -> Result<Self> {
        if values.len() != n * grid.len() {
            return Err(RfmError::DimensionMismatch {
                expected: n * grid.len(),
                got: values.len(),
            });
        }
        if let Some(i) = values.iter().position(|v| !v.is_finite()) {
            return Err(RfmError::NonFinite(i));
        }
        Ok(FuncData { grid, n, values })
    }

    pub fn from_obs(obs: &[FuncObs]) -> Result<Self> {
        let grid = obs.first().ok_or(RfmError::Empty("functional sample"))?.grid().clone();
        let mut values = Vec::with_capacity(obs.len() * grid.len());
        for o in obs {
            if **o.grid() != *grid {
                return Err(RfmError::GridMismatch);
            }
            values.extend_from_slice(o.values());
        }
        Ok(FuncData {
            grid,
            n: obs.len(),
            values,
        })
    }

    pub fn grid(&self) -> &Arc<Grid> {
        &self.grid
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn len_grid(&self) -> usize {
        self.grid.len()
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn row(&self, i: usize) -> &[f64] {
        let t = self.grid.len();
        &self.values[i * t..(i + 1) * t]
    }

    pub fn rows(&self) -> std::slice::ChunksExact<'_, f64> {
        self.values.chunks_exact(self.grid.len())
    }

    pub fn obs(&self, i: usize) -> FuncObs {
        FuncObs::new(self.grid.clone(), self.row(i).to_vec()).expect("row matches grid")
    }

    /// Subtracts `center(t)` from every function.
    pub fn centered(&self, center: &[f64]) -> FuncData {
        let values = self
            .rows()
            .flat_map(|r| r.iter().zip(center).map(|(v, c)| v - c))
            .collect();
        FuncData {
            grid: self.grid.clone(),
            n: self.n,
            values,
        }
    }

    pub fn scaled(&self, c: f64) -> FuncData {
        FuncData {
            grid: self.grid.clone(),
            n: self.n,
            values: self.values.iter().map(|v| c * v).collect(),
        }
    }

    pub fn pointwise_mean(&self) -> Vec<f64> {
        let t = self.grid.len();
        let mut acc = vec![0.0; t];
        for r in self.rows() {
            for (a, v) in acc.iter_mut().zip(r) {
                *a += v;
            }
        }
        acc.iter_mut().for_each(|a| *a /= self.n as f64);
        acc
    }
}

/// Row selection, used to carve a sample into subsamples.
pub trait RowSet: Sized + Sync {
    fn n_rows(&self) -> usize;
    fn select_rows(&self, idx: &[usize]) -> Self;
}

impl RowSet for Dataset {
    fn n_rows(&self) -> usize {
        self.n
    }

    fn select_rows(&self, idx: &[usize]) -> Self {
        let mut values = Vec::with_capacity(idx.len() * self.d);
        for &i in idx {
            values.extend_from_slice(self.row(i));
        }
        Dataset {
            n: idx.len(),
            d: self.d,
            values,
        }
    }
}

impl RowSet for FuncData {
    fn n_rows(&self) -> usize {
        self.n
    }

    fn select_rows(&self, idx: &[usize]) -> Self {
        let mut values = Vec::with_capacity(idx.len() * self.grid.len());
        for &i in idx {
            values.extend_from_slice(self.row(i));
        }
        FuncData {
            grid: self.grid.clone(),
            n: idx.len(),
            values,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn covariance_of_small_sample() {
        let x = Dataset::from_rows(&[vec![1.0, 2.0], vec![3.0, 6.0]]).unwrap();
        assert_eq!(x.mean(), vec![2.0, 4.0]);
        assert_eq!(x.covariance(), vec![1.0, 2.0, 2.0, 4.0]);
    }

    #[test]
    fn ragged_rows_rejected() {
        assert!(Dataset::from_rows(&[vec![1.0], vec![1.0, 2.0]]).is_err());
        assert!(Dataset::from_rows(&[]).is_err());
    }

    #[test]
    fn select_rows_keeps_order() {
        let x = Dataset::from_rows(&[vec![1.0], vec![2.0], vec![3.0]]).unwrap();
        assert_eq!(x.select_rows(&[2, 0]).values(), &[3.0, 1.0]);
    }
}
