//! Synthetic data: contaminated Gaussians, a Fourier-type functional model,
//! and a planar three-cluster model with background noise.

use std::f64::consts::PI;
use std::sync::Arc;

use nalgebra::DMatrix;
use rand::seq::SliceRandom;
use rand::Rng;
use rand_distr::StandardNormal;
use serde::Serialize;

use crate::data::{Dataset, FuncData};
use crate::error::{Result, RfmError};
use crate::numerics::{CovKernel, Grid, SymMatrix};
use crate::rng::{rng_from_seed, SimRng};

/// Standard Cauchy draw by inverse CDF.
pub fn cauchy(rng: &mut SimRng) -> f64 {
    let u: f64 = rng.random();
    (PI * (u - 0.5)).tan()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ContaminatedGaussianSpec {
    pub d: usize,
    pub off_diag: f64,
    pub outlier_center: f64,
    pub p: f64,
    pub n: usize,
    pub seed: u64,
}

impl ContaminatedGaussianSpec {
    /// Dimension 5, off-diagonal 0.2, Cauchy outliers centred at 50.
    pub fn standard(n: usize, p: f64, seed: u64) -> Self {
        ContaminatedGaussianSpec {
            d: 5,
            off_diag: 0.2,
            outlier_center: 50.0,
            p,
            n,
            seed,
        }
    }

    /// Covariance of the clean rows.
    pub fn sigma(&self) -> SymMatrix {
        let d = self.d;
        let entries = (0..d * d)
            .map(|ij| if ij / d == ij % d { 1.0 } else { self.off_diag })
            .collect();
        SymMatrix::new(d, entries).expect("equicorrelation matrix is symmetric")
    }
}

/// Rows are clean `N(0, Σ)` draws or, with probability `p`, vectors of
/// independent standard Cauchy coordinates shifted by `outlier_center`.
pub fn gen_contaminated_gaussian(spec: &ContaminatedGaussianSpec) -> Result<(Dataset, Vec<bool>)> {
    if spec.d == 0 {
        return Err(RfmError::param("d", "must be at least 1"));
    }
    if !(0.0..=1.0).contains(&spec.p) {
        return Err(RfmError::param("p", format!("{} not in [0, 1]", spec.p)));
    }
    let d = spec.d;
    let chol = spec
        .sigma()
        .to_nalgebra()
        .cholesky()
        .ok_or_else(|| RfmError::param("off_diag", format!("{} gives a covariance that is not positive definite", spec.off_diag)))?;
    let l: DMatrix<f64> = chol.l();
    let mut rng = rng_from_seed(spec.seed);
    let mut values = Vec::with_capacity(spec.n * d);
    let mut flags = Vec::with_capacity(spec.n);
    let mut z = vec![0.0; d];
    for _ in 0..spec.n {
        let outlier = rng.random::<f64>() < spec.p;
        flags.push(outlier);
        if outlier {
            for _ in 0..d {
                values.push(spec.outlier_center + cauchy(&mut rng));
            }
        } else {
            for zi in z.iter_mut() {
                *zi = rng.sample(StandardNormal);
            }
            for i in 0..d {
                values.push((0..=i).map(|j| l[(i, j)] * z[j]).sum());
            }
        }
    }
    Ok((Dataset::new(spec.n, d, values)?, flags))
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct KrausModelSpec {
    pub n_grid: usize,
    pub n: usize,
    pub p: f64,
    pub outlier_shift: bool,
    pub seed: u64,
    /// Sine coefficients, default `k⁻³`.
    pub lambda: Vec<f64>,
    /// Cosine coefficients, default `3⁻ᵏ`.
    pub nu: Vec<f64>,
}

impl KrausModelSpec {
    pub fn new(n_grid: usize, n: usize, p: f64, seed: u64) -> Self {
        KrausModelSpec {
            n_grid,
            n,
            p,
            outlier_shift: true,
            seed,
            lambda: (1..=10).map(|k| (k as f64).powi(-3)).collect(),
            nu: (1..=10).map(|k| 3f64.powi(-k)).collect(),
        }
    }

    pub fn grid(&self) -> Result<Arc<Grid>> {
        Ok(Arc::new(Grid::uniform(0.0, 1.0, self.n_grid)?))
    }

    fn basis(&self, t: f64) -> (Vec<f64>, Vec<f64>) {
        let a = self
            .lambda
            .iter()
            .enumerate()
            .map(|(k, l)| 2f64.sqrt() * l * (2.0 * PI * (k + 1) as f64 * t).sin())
            .collect();
        let b = self
            .nu
            .iter()
            .enumerate()
            .map(|(k, v)| 2f64.sqrt() * v * (2.0 * PI * (k + 1) as f64 * t).cos())
            .collect();
        (a, b)
    }

    /// Covariance kernel of the clean process on the grid.
    pub fn true_kernel(&self) -> Result<CovKernel> {
        let grid = self.grid()?;
        let basis: Vec<(Vec<f64>, Vec<f64>)> = grid.points().iter().map(|&t| self.basis(t)).collect();
        let t = grid.len();
        let mut values = vec![0.0; t * t];
        for s in 0..t {
            for u in 0..t {
                let (a_s, b_s) = &basis[s];
                let (a_u, b_u) = &basis[u];
                values[s * t + u] = a_s.iter().zip(a_u).map(|(x, y)| x * y).sum::<f64>()
                    + b_s.iter().zip(b_u).map(|(x, y)| x * y).sum::<f64>();
            }
        }
        for s in 0..t {
            for u in 0..s {
                values[s * t + u] = values[u * t + s];
            }
        }
        CovKernel::new(grid, values)
    }
}

/// Mean function of the contaminating curves.
pub fn kraus_outlier_mean(t: f64) -> f64 {
    2.0 - 8.0 * (PI * t).sin()
}

pub fn gen_kraus(spec: &KrausModelSpec) -> Result<(FuncData, Vec<bool>)> {
    if !(0.0..=1.0).contains(&spec.p) {
        return Err(RfmError::param("p", format!("{} not in [0, 1]", spec.p)));
    }
    let grid = spec.grid()?;
    let basis: Vec<(Vec<f64>, Vec<f64>)> = grid.points().iter().map(|&t| spec.basis(t)).collect();
    let shift: Vec<f64> = grid.points().iter().map(|&t| kraus_outlier_mean(t)).collect();
    let (ka, kb) = (spec.lambda.len(), spec.nu.len());
    let mut rng = rng_from_seed(spec.seed);
    let mut values = Vec::with_capacity(spec.n * grid.len());
    let mut flags = Vec::with_capacity(spec.n);
    let mut a = vec![0.0; ka];
    let mut b = vec![0.0; kb];
    for _ in 0..spec.n {
        let outlier = rng.random::<f64>() < spec.p;
        flags.push(outlier);
        a.iter_mut().for_each(|v| *v = rng.sample(StandardNormal));
        b.iter_mut().for_each(|v| *v = rng.sample(StandardNormal));
        for (s, (ba, bb)) in basis.iter().enumerate() {
            let mut x: f64 = ba.iter().zip(&a).map(|(u, v)| u * v).sum::<f64>()
                + bb.iter().zip(&b).map(|(u, v)| u * v).sum::<f64>();
            if outlier && spec.outlier_shift {
                x += shift[s];
            }
            values.push(x);
        }
    }
    Ok((FuncData::new(grid, spec.n, values)?, flags))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ThreeClusterSpec {
    pub fac: usize,
    pub seed: u64,
}

impl ThreeClusterSpec {
    pub const MEANS: [[f64; 2]; 4] = [[0.0, 0.0], [0.0, 10.0], [6.0, 0.0], [2.0, 10.0 / 3.0]];
    pub const CLUSTER_COV_SCALE: f64 = 1.5;
    pub const OUTLIER_COV_SCALE: f64 = 20.0;
    /// Sizes of clusters 1–3 and of the noise group, before scaling by `fac`.
    pub const BASE_SIZES: [usize; 4] = [15, 30, 30, 40];
    pub const ELLIPSOID_LEVEL: f64 = 0.75;

    /// `χ²₂` quantile at the ellipsoid level: `−2 ln(1 − level)`.
    pub fn ellipsoid_radius2() -> f64 {
        -2.0 * (1.0 - Self::ELLIPSOID_LEVEL).ln()
    }

    pub fn n(&self) -> usize {
        self.fac * Self::BASE_SIZES.iter().sum::<usize>()
    }

    /// Whether `x` lies in the level ellipsoid of some cluster.
    pub fn in_cluster_ellipsoid(x: &[f64]) -> bool {
        let q = Self::ellipsoid_radius2();
        Self::MEANS[..3].iter().any(|m| {
            ((x[0] - m[0]).powi(2) + (x[1] - m[1]).powi(2)) / Self::CLUSTER_COV_SCALE <= q
        })
    }
}

/// Three Gaussian clusters (labels 1–3) plus wide Gaussian noise (label 0)
/// redrawn until it falls outside every cluster's level ellipsoid. Rows are
/// returned in random order.
pub fn gen_three_clusters(spec: &ThreeClusterSpec) -> Result<(Dataset, Vec<usize>)> {
    if spec.fac == 0 {
        return Err(RfmError::param("fac", "must be at least 1"));
    }
    let mut rng = rng_from_seed(spec.seed);
    let mut rows: Vec<([f64; 2], usize)> = Vec::with_capacity(spec.n());
    for (g, &base) in ThreeClusterSpec::BASE_SIZES.iter().enumerate() {
        let (mean, label) = if g < 3 {
            (ThreeClusterSpec::MEANS[g], g + 1)
        } else {
            (ThreeClusterSpec::MEANS[3], 0)
        };
        let sd = if g < 3 {
            ThreeClusterSpec::CLUSTER_COV_SCALE.sqrt()
        } else {
            ThreeClusterSpec::OUTLIER_COV_SCALE.sqrt()
        };
        for _ in 0..base * spec.fac {
            loop {
                let x = [
                    mean[0] + sd * rng.sample::<f64, _>(StandardNormal),
                    mean[1] + sd * rng.sample::<f64, _>(StandardNormal),
                ];
                if label > 0 || !ThreeClusterSpec::in_cluster_ellipsoid(&x) {
                    rows.push((x, label));
                    break;
                }
            }
        }
    }
    rows.shuffle(&mut rng);
    let values = rows.iter().flat_map(|(x, _)| *x).collect();
    let labels = rows.iter().map(|(_, l)| *l).collect();
    Ok((Dataset::new(rows.len(), 2, values)?, labels))
}
