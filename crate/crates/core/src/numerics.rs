//! Vector, matrix and grid-function types together with the norms used by
//! the depth functions: Euclidean for locations, maximum absolute row sum for
//! scatter matrices and Hilbert–Schmidt for covariance kernels.

use std::sync::Arc;

use serde::Serialize;

use crate::error::{Result, RfmError};

const SYMMETRY_RTOL: f64 = 1e-10;

fn check_finite(values: &[f64]) -> Result<()> {
    match values.iter().position(|v| !v.is_finite()) {
        Some(i) => Err(RfmError::NonFinite(i)),
        None => Ok(()),
    }
}

/// A point in ℝ^d.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct VectorObs(Vec<f64>);

impl VectorObs {
    pub fn new(coords: Vec<f64>) -> Result<Self> {
        if coords.is_empty() {
            return Err(RfmError::Empty("vector"));
        }
        check_finite(&coords)?;
        Ok(VectorObs(coords))
    }

    pub fn coords(&self) -> &[f64] {
        &self.0
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }

    pub fn norm(&self) -> f64 {
        euclidean_norm(&self.0)
    }

    pub fn into_inner(self) -> Vec<f64> {
        self.0
    }
}

pub fn euclidean_norm(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

pub fn squared_distance(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

/// Symmetric d×d matrix stored row-major.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SymMatrix {
    dim: usize,
    entries: Vec<f64>,
}

impl SymMatrix {
    /// Validates shape, finiteness and symmetry (relative tolerance 1e-10 of
    /// the largest entry). Asymmetric input is rejected, not repaired.
    pub fn new(dim: usize, entries: Vec<f64>) -> Result<Self> {
        if dim == 0 {
            return Err(RfmError::Empty("matrix"));
        }
        if entries.len() != dim * dim {
            return Err(RfmError::DimensionMismatch {
                expected: dim * dim,
                got: entries.len(),
            });
        }
        check_finite(&entries)?;
        let scale = entries.iter().fold(0.0f64, |m, v| m.max(v.abs())).max(f64::MIN_POSITIVE);
        let mut worst = 0.0f64;
        for i in 0..dim {
            for j in (i + 1)..dim {
                worst = worst.max((entries[i * dim + j] - entries[j * dim + i]).abs() / scale);
            }
        }
        if worst > SYMMETRY_RTOL {
            return Err(RfmError::NotSymmetric(worst));
        }
        Ok(SymMatrix { dim, entries })
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let dim = rows.len();
        let mut entries = Vec::with_capacity(dim * dim);
        for row in rows {
            if row.len() != dim {
                return Err(RfmError::DimensionMismatch {
                    expected: dim,
                    got: row.len(),
                });
            }
            entries.extend_from_slice(row);
        }
        Self::new(dim, entries)
    }

    pub fn identity(dim: usize) -> Self {
        let mut entries = vec![0.0; dim * dim];
        for i in 0..dim {
            entries[i * dim + i] = 1.0;
        }
        SymMatrix { dim, entries }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn entries(&self) -> &[f64] {
        &self.entries
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.entries[i * self.dim + j]
    }

    pub fn trace(&self) -> f64 {
        (0..self.dim).map(|i| self.get(i, i)).sum()
    }

    pub fn to_nalgebra(&self) -> nalgebra::DMatrix<f64> {
        nalgebra::DMatrix::from_row_slice(self.dim, self.dim, &self.entries)
    }

    pub fn norm(&self) -> f64 {
        max_abs_rowsum_norm(self)
    }
}

/// `max_i Σ_j |S_ij|`.
pub fn max_abs_rowsum_norm(s: &SymMatrix) -> f64 {
    rowsum_norm_flat(&s.entries, s.dim)
}

pub(crate) fn rowsum_norm_flat(entries: &[f64], dim: usize) -> f64 {
    entries
        .chunks_exact(dim)
        .map(|row| row.iter().map(|v| v.abs()).sum::<f64>())
        .fold(0.0, f64::max)
}

/// Sampling grid on an interval with trapezoid quadrature weights.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Grid {
    points: Vec<f64>,
    weights: Vec<f64>,
}

impl Grid {
    pub fn new(points: Vec<f64>) -> Result<Self> {
        if points.len() < 2 {
            return Err(RfmError::param("grid", "needs at least two points"));
        }
        check_finite(&points)?;
        if points.windows(2).any(|w| w[1] <= w[0]) {
            return Err(RfmError::param("grid", "points must be strictly increasing"));
        }
        let t = points.len();
        let mut weights = vec![0.0; t];
        for s in 0..t - 1 {
            let h = 0.5 * (points[s + 1] - points[s]);
            weights[s] += h;
            weights[s + 1] += h;
        }
        Ok(Grid { points, weights })
    }

    /// `len` equally spaced points from `a` to `b` inclusive.
    pub fn uniform(a: f64, b: f64, len: usize) -> Result<Self> {
        if len < 2 {
            return Err(RfmError::param("grid", "needs at least two points"));
        }
        let step = (b - a) / (len - 1) as f64;
        Self::new((0..len).map(|i| a + step * i as f64).collect())
    }

    pub fn points(&self) -> &[f64] {
        &self.points
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    /// Quadrature approximation of `∫ f g`.
    pub fn inner(&self, f: &[f64], g: &[f64]) -> f64 {
        self.weights
            .iter()
            .zip(f.iter().zip(g))
            .map(|(w, (a, b))| w * a * b)
            .sum()
    }
}

/// One function sampled on a grid.
#[derive(Debug, Clone, PartialEq)]
pub struct FuncObs {
    grid: Arc<Grid>,
    values: Vec<f64>,
}

impl FuncObs {
    pub fn new(grid: Arc<Grid>, values: Vec<f64>) -> Result<Self> {
        if values.len() != grid.len() {
            return Err(RfmError::DimensionMismatch {
                expected: grid.len(),
                got: values.len(),
            });
        }
        check_finite(&values)?;
        Ok(FuncObs { grid, values })
    }

    pub fn grid(&self) -> &Arc<Grid> {
        &self.grid
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn inner(&self, other: &FuncObs) -> Result<f64> {
        if self.grid != other.grid {
            return Err(RfmError::GridMismatch);
        }
        Ok(self.grid.inner(&self.values, &other.values))
    }

    /// The rank-one kernel `f(s) f(t)`.
    pub fn outer(&self) -> CovKernel {
        let t = self.values.len();
        let mut values = vec![0.0; t * t];
        for s in 0..t {
            for u in 0..t {
                values[s * t + u] = self.values[s] * self.values[u];
            }
        }
        CovKernel {
            grid: self.grid.clone(),
            values,
        }
    }
}

/// A covariance kernel `K(s, t)` on a grid, stored row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct CovKernel {
    grid: Arc<Grid>,
    values: Vec<f64>,
}

impl CovKernel {
    pub fn new(grid: Arc<Grid>, values: Vec<f64>) -> Result<Self> {
        let t = grid.len();
        if values.len() != t * t {
            return Err(RfmError::DimensionMismatch {
                expected: t * t,
                got: values.len(),
            });
        }
        check_finite(&values)?;
        let scale = values.iter().fold(0.0f64, |m, v| m.max(v.abs())).max(f64::MIN_POSITIVE);
        let mut worst = 0.0f64;
        for i in 0..t {
            for j in (i + 1)..t {
                worst = worst.max((values[i * t + j] - values[j * t + i]).abs() / scale);
            }
        }
        if worst > SYMMETRY_RTOL {
            return Err(RfmError::NotSymmetric(worst));
        }
        Ok(CovKernel { grid, values })
    }

    pub fn zeros(grid: Arc<Grid>) -> Self {
        let t = grid.len();
        CovKernel {
            grid,
            values: vec![0.0; t * t],
        }
    }

    pub fn grid(&self) -> &Arc<Grid> {
        &self.grid
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn get(&self, s: usize, t: usize) -> f64 {
        self.values[s * self.grid.len() + t]
    }

    pub fn hs_norm(&self) -> f64 {
        hs_norm_flat(&self.values, self.grid.weights())
    }

    /// Frobenius norm of the raw grid values, ignoring quadrature weights.
    pub fn grid_frobenius_norm(&self) -> f64 {
        euclidean_norm(&self.values)
    }

    pub fn sub(&self, other: &CovKernel) -> Result<CovKernel> {
        if self.grid != other.grid {
            return Err(RfmError::GridMismatch);
        }
        Ok(CovKernel {
            grid: self.grid.clone(),
            values: self.values.iter().zip(&other.values).map(|(a, b)| a - b).collect(),
        })
    }

    pub(crate) fn from_parts_unchecked(grid: Arc<Grid>, values: Vec<f64>) -> Self {
        CovKernel { grid, values }
    }
}

/// `Σ_{s,t} K1(s,t) K2(s,t) w_s w_t`.
pub fn hs_inner(k1: &CovKernel, k2: &CovKernel) -> Result<f64> {
    if k1.grid != k2.grid {
        return Err(RfmError::GridMismatch);
    }
    Ok(hs_inner_flat(&k1.values, &k2.values, k1.grid.weights()))
}

pub(crate) fn hs_inner_flat(a: &[f64], b: &[f64], w: &[f64]) -> f64 {
    let t = w.len();
    let mut total = 0.0;
    for s in 0..t {
        let row: f64 = (0..t).map(|u| a[s * t + u] * b[s * t + u] * w[u]).sum();
        total += w[s] * row;
    }
    total
}

pub(crate) fn hs_norm_flat(a: &[f64], w: &[f64]) -> f64 {
    hs_inner_flat(a, a, w).max(0.0).sqrt()
}
