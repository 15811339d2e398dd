//! Impartial trimmed mean of rank-one operators, a resistant estimator of
//! the covariance operator of grid-sampled functional data.
//!
//! Each observation `X_i` defines the rank-one operator `W_i = X_i ⊗ X_i`.
//! Hilbert–Schmidt distances between them need only inner products of the
//! functions:
//!
//! ```text
//! ‖W_i − W_j‖²_HS = ‖X_i‖⁴ + ‖X_j‖⁴ − 2 ⟨X_i, X_j⟩²
//! ```
//!
//! The estimator picks the observation whose `r`-th nearest neighbour (in
//! this distance, counting itself) is closest, with `r = ⌊(1−α)n⌋ + 1`, and
//! averages the `W_j` of its `r` nearest neighbours.

use rayon::prelude::*;
use serde::Serialize;

use crate::data::FuncData;
use crate::error::{Result, RfmError};
use crate::numerics::CovKernel;
use crate::robust::median_in_place;

/// Squared norms and Gram matrix of a functional sample under the grid
/// quadrature; enough to recover every pairwise rank-one distance.
#[derive(Debug, Clone)]
pub struct RankOneDistances {
    n: usize,
    /// `‖X_i‖⁴`
    pub norms4: Vec<f64>,
    /// `⟨X_i, X_j⟩`, row-major `n × n`
    pub gram: Vec<f64>,
}

impl RankOneDistances {
    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    pub fn gram(&self, i: usize, j: usize) -> f64 {
        self.gram[i * self.n + j]
    }

    pub fn distance(&self, i: usize, j: usize) -> f64 {
        if i == j {
            return 0.0;
        }
        let g = self.gram(i, j);
        (self.norms4[i] + self.norms4[j] - 2.0 * g * g).max(0.0).sqrt()
    }
}

/// Rows scaled by the square roots of the quadrature weights, so plain dot
/// products are the weighted inner products.
fn weighted_rows(x: &FuncData) -> Vec<f64> {
    let sw: Vec<f64> = x.grid().weights().iter().map(|w| w.sqrt()).collect();
    x.rows()
        .flat_map(|r| r.iter().zip(&sw).map(|(v, s)| v * s).collect::<Vec<_>>())
        .collect()
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub fn pairwise_hs_distance(x: &FuncData) -> RankOneDistances {
    let n = x.n();
    let t = x.len_grid();
    let xw = weighted_rows(x);
    let xw = &xw;
    let gram: Vec<f64> = (0..n)
        .into_par_iter()
        .flat_map_iter(|i| {
            let xi = &xw[i * t..(i + 1) * t];
            (0..n).map(move |j| dot(xi, &xw[j * t..(j + 1) * t]))
        })
        .collect();
    let norms4 = (0..n).map(|i| gram[i * n + i] * gram[i * n + i]).collect();
    RankOneDistances { n, norms4, gram }
}

/// Number of observations kept by the trimmed estimator.
pub fn retained_count(n: usize, alpha: f64) -> Result<usize> {
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(RfmError::param("alpha", format!("{alpha} not in (0, 1)")));
    }
    if n == 0 {
        return Err(RfmError::Empty("functional sample"));
    }
    let kept = ((1.0 - alpha) * n as f64 + 1e-9).floor() as usize;
    Ok((kept + 1).min(n))
}

#[derive(Debug, Clone)]
pub struct TrimmedCovEstimate {
    pub kernel: CovKernel,
    /// Indices of the averaged observations, ascending.
    pub retained: Vec<usize>,
    pub pivot: usize,
    /// Distance from the pivot to its `r`-th nearest neighbour.
    pub radius: f64,
}

fn outer_average(x: &FuncData, idx: &[usize]) -> CovKernel {
    let t = x.len_grid();
    let mut acc = vec![0.0; t * t];
    for &j in idx {
        let r = x.row(j);
        for s in 0..t {
            for u in s..t {
                acc[s * t + u] += r[s] * r[u];
            }
        }
    }
    let k = idx.len() as f64;
    for s in 0..t {
        for u in s..t {
            let v = acc[s * t + u] / k;
            acc[s * t + u] = v;
            acc[u * t + s] = v;
        }
    }
    CovKernel::from_parts_unchecked(x.grid().clone(), acc)
}

/// `(1/n) Σ X_i(s) X_i(t)`; no centering.
pub fn empirical_cov_kernel(x: &FuncData) -> Result<CovKernel> {
    if x.n() == 0 {
        return Err(RfmError::Empty("functional sample"));
    }
    let idx: Vec<usize> = (0..x.n()).collect();
    Ok(outer_average(x, &idx))
}

/// Classical covariance kernel: centre by the pointwise mean, then average
/// the outer products.
pub fn sample_cov_kernel(x: &FuncData) -> Result<CovKernel> {
    if x.n() == 0 {
        return Err(RfmError::Empty("functional sample"));
    }
    empirical_cov_kernel(&x.centered(&x.pointwise_mean()))
}

pub fn pointwise_median(x: &FuncData) -> Vec<f64> {
    let t = x.len_grid();
    let mut col = vec![0.0; x.n()];
    (0..t)
        .map(|s| {
            for (c, r) in col.iter_mut().zip(x.rows()) {
                *c = r[s];
            }
            median_in_place(&mut col)
        })
        .collect()
}

/// The impartial trimmed mean of the rank-one operators of `x`, taken as
/// given (no centering).
pub fn impartial_trimmed_cov(x: &FuncData, alpha: f64) -> Result<TrimmedCovEstimate> {
    let n = x.n();
    let r = retained_count(n, alpha)?;
    let t = x.len_grid();
    let xw = weighted_rows(x);
    let sq: Vec<f64> = (0..n).map(|i| {
        let xi = &xw[i * t..(i + 1) * t];
        dot(xi, xi)
    }).collect();
    let row_distances = |i: usize, buf: &mut Vec<f64>| {
        let xi = &xw[i * t..(i + 1) * t];
        buf.clear();
        buf.extend((0..n).map(|j| {
            if j == i {
                return 0.0;
            }
            let g = dot(xi, &xw[j * t..(j + 1) * t]);
            (sq[i] * sq[i] + sq[j] * sq[j] - 2.0 * g * g).max(0.0).sqrt()
        }));
    };

    let kth: Vec<f64> = (0..n)
        .into_par_iter()
        .map_init(Vec::new, |buf, i| {
            row_distances(i, buf);
            *buf.select_nth_unstable_by(r - 1, f64::total_cmp).1
        })
        .collect();

    let mut pivot = 0;
    for (i, &v) in kth.iter().enumerate() {
        if v < kth[pivot] {
            pivot = i;
        }
    }

    let mut buf = Vec::with_capacity(n);
    row_distances(pivot, &mut buf);
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| buf[a].total_cmp(&buf[b]).then(a.cmp(&b)));
    let mut retained = order[..r].to_vec();
    retained.sort_unstable();

    Ok(TrimmedCovEstimate {
        kernel: outer_average(x, &retained),
        retained,
        pivot,
        radius: kth[pivot],
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Centering {
    None,
    PointwiseMedian,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TrimmedCovConfig {
    pub alpha: f64,
    pub centering: Centering,
}

impl Default for TrimmedCovConfig {
    fn default() -> Self {
        TrimmedCovConfig {
            alpha: 0.25,
            centering: Centering::PointwiseMedian,
        }
    }
}

/// Trimmed covariance estimate with the configured centering applied first.
pub fn robust_cov_kernel(x: &FuncData, cfg: &TrimmedCovConfig) -> Result<TrimmedCovEstimate> {
    match cfg.centering {
        Centering::None => impartial_trimmed_cov(x, cfg.alpha),
        Centering::PointwiseMedian => {
            if x.n() == 0 {
                return Err(RfmError::Empty("functional sample"));
            }
            impartial_trimmed_cov(&x.centered(&pointwise_median(x)), cfg.alpha)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numerics::{FuncObs, Grid};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;
    use std::sync::Arc;

    fn random_sample(rng: &mut ChaCha8Rng, n: usize, t: usize) -> FuncData {
        let grid = Arc::new(Grid::uniform(0.0, 1.0, t).unwrap());
        let values = (0..n * t).map(|_| rng.random_range(-2.0..2.0)).collect();
        FuncData::new(grid, n, values).unwrap()
    }

    #[test]
    fn identical_and_orthogonal_pairs() {
        let grid = Arc::new(Grid::new(vec![0.0, 1.0, 2.0, 3.0]).unwrap());
        // weights 0.5, 1, 1, 0.5: f and g below are orthogonal
        let f = vec![1.0, 1.0, 0.0, 0.0];
        let g = vec![0.0, 0.0, 2.0, 0.0];
        let x = FuncData::new(grid, 3, [f.clone(), f, g].concat()).unwrap();
        let d = pairwise_hs_distance(&x);
        assert_eq!(d.distance(0, 1), 0.0);
        let a2 = 1.5; // ‖f‖²
        let b2 = 4.0; // ‖g‖²
        assert!((d.distance(0, 2).powi(2) - (a2 * a2 + b2 * b2)).abs() < 1e-12);
    }

    #[test]
    fn mixed_grids_are_rejected() {
        let g1 = Arc::new(Grid::uniform(0.0, 1.0, 3).unwrap());
        let g2 = Arc::new(Grid::uniform(0.0, 2.0, 3).unwrap());
        let a = FuncObs::new(g1, vec![1.0, 2.0, 3.0]).unwrap();
        let b = FuncObs::new(g2, vec![1.0, 2.0, 3.0]).unwrap();
        assert!(matches!(FuncData::from_obs(&[a, b]), Err(RfmError::GridMismatch)));
    }

    #[test]
    fn empirical_kernel_examples() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let x = random_sample(&mut rng, 1, 5);
        assert_eq!(empirical_cov_kernel(&x).unwrap(), x.obs(0).outer());

        let y = random_sample(&mut rng, 4, 5);
        let neg = y.scaled(-1.0);
        let both = FuncData::new(y.grid().clone(), 8, [y.values(), neg.values()].concat()).unwrap();
        let doubled = FuncData::new(y.grid().clone(), 8, [y.values(), y.values()].concat()).unwrap();
        assert_eq!(empirical_cov_kernel(&both).unwrap(), empirical_cov_kernel(&doubled).unwrap());

        let z = random_sample(&mut rng, 30, 6);
        let k = empirical_cov_kernel(&z).unwrap();
        for s in 0..6 {
            for t in 0..6 {
                let mut acc = 0.0;
                for i in 0..30 {
                    acc += z.row(i)[s] * z.row(i)[t];
                }
                assert!((k.get(s, t) - acc / 30.0).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn retained_count_values() {
        assert_eq!(retained_count(5, 0.4).unwrap(), 4);
        assert_eq!(retained_count(100, 0.25).unwrap(), 76);
        assert_eq!(retained_count(10, 1e-6).unwrap(), 10);
        assert!(retained_count(10, 0.0).is_err());
        assert!(retained_count(10, 1.0).is_err());
    }

    #[test]
    fn no_trimming_gives_the_full_second_moment() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let x = random_sample(&mut rng, 12, 5);
        let est = impartial_trimmed_cov(&x, 1e-6).unwrap();
        assert_eq!(est.retained.len(), 12);
        let full = empirical_cov_kernel(&x).unwrap();
        for (a, b) in est.kernel.values().iter().zip(full.values()) {
            assert!((a - b).abs() < 1e-12);
        }
    }

    /// Enumerate every pivot and every `r`-subset containing it; distances
    /// come from explicit rank-one kernels.
    #[test]
    fn tiny_instance_matches_exhaustive_search() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..20 {
            let x = random_sample(&mut rng, 5, 4);
            let r = 4;
            let kernels: Vec<CovKernel> = (0..5).map(|i| x.obs(i).outer()).collect();
            let dist = |i: usize, j: usize| kernels[i].sub(&kernels[j]).unwrap().hs_norm();
            let mut best: Option<(f64, usize, Vec<usize>)> = None;
            for pivot in 0..5 {
                for mask in 0u32..32 {
                    if mask.count_ones() as usize != r || mask & (1 << pivot) == 0 {
                        continue;
                    }
                    let set: Vec<usize> = (0..5).filter(|j| mask & (1 << j) != 0).collect();
                    let radius = set.iter().map(|&j| dist(pivot, j)).fold(0.0, f64::max);
                    if best.as_ref().is_none_or(|b| radius < b.0 - 1e-12) {
                        best = Some((radius, pivot, set));
                    }
                }
            }
            let (radius, pivot, set) = best.unwrap();
            let est = impartial_trimmed_cov(&x, 0.4).unwrap();
            assert_eq!(est.pivot, pivot);
            assert_eq!(est.retained, set);
            assert!((est.radius - radius).abs() < 1e-10 * radius.max(1.0));
            let mut mean = vec![0.0; 16];
            for &j in &set {
                for (m, v) in mean.iter_mut().zip(kernels[j].values()) {
                    *m += v / r as f64;
                }
            }
            for (a, b) in est.kernel.values().iter().zip(&mean) {
                assert!((a - b).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn scale_equivariance() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let x = random_sample(&mut rng, 40, 8);
        let base = impartial_trimmed_cov(&x, 0.3).unwrap();
        for c in [2.0, 0.25] {
            let est = impartial_trimmed_cov(&x.scaled(c), 0.3).unwrap();
            assert_eq!(est.retained, base.retained);
            for (a, b) in est.kernel.values().iter().zip(base.kernel.values()) {
                assert_eq!(*a, c * c * b);
            }
        }
        let est = impartial_trimmed_cov(&x.scaled(3.0), 0.3).unwrap();
        assert_eq!(est.retained, base.retained);
    }

    #[test]
    fn huge_outliers_are_never_retained() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let n = 100;
        let alpha = 0.2;
        let n_out = (alpha * n as f64).floor() as usize - 1;
        let mut x = random_sample(&mut rng, n, 10).values().to_vec();
        let outliers: Vec<usize> = (0..n_out).map(|i| 3 + 5 * i).collect();
        for &i in &outliers {
            for v in &mut x[i * 10..(i + 1) * 10] {
                *v = 1e6 * rng.random_range(0.5..1.5);
            }
        }
        let grid = Arc::new(Grid::uniform(0.0, 1.0, 10).unwrap());
        let est = impartial_trimmed_cov(&FuncData::new(grid, n, x).unwrap(), alpha).unwrap();
        assert!(outliers.iter().all(|i| !est.retained.contains(i)));
    }

    #[test]
    fn estimate_is_psd() {
        let mut rng = ChaCha8Rng::seed_from_u64(6);
        let x = random_sample(&mut rng, 60, 7);
        let est = robust_cov_kernel(&x, &TrimmedCovConfig::default()).unwrap();
        let m = nalgebra::DMatrix::from_row_slice(7, 7, est.kernel.values());
        let eig = m.symmetric_eigenvalues();
        let trace: f64 = (0..7).map(|i| est.kernel.get(i, i)).sum();
        assert!(eig.min() >= -1e-8 * trace);
        assert!(est.retained.contains(&est.pivot));
    }
}
