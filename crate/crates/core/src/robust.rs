//! Per-subsample robust estimators.
//!
//! Univariate: median, MAD and the shorth. Multivariate: a location/scatter
//! M-estimator with Tukey biweight weights on Mahalanobis distances, started
//! from the coordinatewise median and MAD, and rescaled after every step so
//! that the median squared distance matches the median of χ²_d (consistency
//! at the normal model).

use nalgebra::{DMatrix, DVector};
use serde::Serialize;
use statrs::function::gamma::gamma_lr;

use crate::data::Dataset;
use crate::error::{Result, RfmError};
use crate::numerics::{SymMatrix, VectorObs};

/// Consistency factor of the MAD at the normal distribution.
pub const MAD_NORMAL_SCALE: f64 = 1.482_602_218_505_602;

const MAX_CONDITION: f64 = 1e12;

/// Sample median (average of the two middle order statistics for even n).
pub fn median1d(xs: &[f64]) -> Result<f64> {
    if xs.is_empty() {
        return Err(RfmError::Empty("median of empty slice"));
    }
    let mut v = xs.to_vec();
    Ok(median_in_place(&mut v))
}

/// Median of a non-empty buffer; reorders the buffer.
pub(crate) fn median_in_place(v: &mut [f64]) -> f64 {
    let n = v.len();
    let mid = n / 2;
    let (left, upper, _) = v.select_nth_unstable_by(mid, f64::total_cmp);
    let upper = *upper;
    if n % 2 == 1 {
        upper
    } else {
        let lower = left.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        0.5 * (lower + upper)
    }
}

/// Median absolute deviation about the median (unscaled).
pub fn mad(xs: &[f64]) -> Result<f64> {
    let med = median1d(xs)?;
    let mut dev: Vec<f64> = xs.iter().map(|x| (x - med).abs()).collect();
    Ok(median_in_place(&mut dev))
}

/// Mean of the observations in the shortest window holding `⌈n/2⌉` sorted
/// points. Ties between equally short windows go to the leftmost one.
pub fn shorth(xs: &[f64]) -> Result<f64> {
    let n = xs.len();
    if n < 2 {
        return Err(RfmError::InsufficientData(format!(
            "shorth needs at least 2 observations, got {n}"
        )));
    }
    let mut v = xs.to_vec();
    v.sort_by(f64::total_cmp);
    let h = n.div_ceil(2);
    let mut best = 0;
    let mut best_width = f64::INFINITY;
    for i in 0..=(n - h) {
        let width = v[i + h - 1] - v[i];
        if width < best_width {
            best_width = width;
            best = i;
        }
    }
    Ok(v[best..best + h].iter().sum::<f64>() / h as f64)
}

/// Median of the χ² distribution with `dof` degrees of freedom, by bisection
/// on the regularized lower incomplete gamma function.
pub fn chi2_median(dof: usize) -> f64 {
    assert!(dof >= 1, "degrees of freedom must be positive");
    let a = dof as f64 / 2.0;
    let cdf = |x: f64| gamma_lr(a, x / 2.0);
    let (mut lo, mut hi) = (0.0, dof as f64 + 10.0);
    while cdf(hi) < 0.5 {
        hi *= 2.0;
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if cdf(mid) < 0.5 {
            lo = mid;
        } else {
            hi = mid;
        }
        if hi - lo <= 1e-15 * hi {
            break;
        }
    }
    0.5 * (lo + hi)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct MEstimatorConfig {
    /// Biweight cutoff on the univariate standardized scale; converted to the
    /// Mahalanobis scale by `sqrt(med χ²_d / med χ²_1)`.
    pub tuning_c: f64,
    pub max_iter: usize,
    pub tol: f64,
}

impl Default for MEstimatorConfig {
    fn default() -> Self {
        MEstimatorConfig {
            tuning_c: 4.685,
            max_iter: 200,
            tol: 1e-7,
        }
    }
}

impl MEstimatorConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.tuning_c > 0.0 && self.tuning_c.is_finite()) {
            return Err(RfmError::param("tuning_c", "must be positive"));
        }
        if self.max_iter == 0 {
            return Err(RfmError::param("max_iter", "must be at least 1"));
        }
        if self.tol.is_nan() || self.tol <= 0.0 {
            return Err(RfmError::param("tol", "must be positive"));
        }
        Ok(())
    }

    /// Cutoff applied to Mahalanobis distances in dimension `d`.
    pub fn cutoff(&self, d: usize) -> f64 {
        self.tuning_c * (chi2_median(d) / chi2_median(1)).sqrt()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LocScatterEstimate {
    pub location: VectorObs,
    pub scatter: SymMatrix,
    pub iterations: usize,
    pub converged: bool,
}

fn biweight(u: f64) -> f64 {
    if u < 1.0 {
        let t = 1.0 - u * u;
        t * t
    } else {
        0.0
    }
}

/// Cholesky factor of a scatter matrix after a conditioning check.
fn factor(s: &DMatrix<f64>) -> Result<nalgebra::Cholesky<f64, nalgebra::Dyn>> {
    let eig = s.clone().symmetric_eigenvalues();
    let max = eig.max();
    let min = eig.min();
    if min.is_nan() || min <= 0.0 || max / min > MAX_CONDITION {
        let cond = if min > 0.0 { max / min } else { f64::INFINITY };
        return Err(RfmError::Singular(cond));
    }
    s.clone().cholesky().ok_or(RfmError::Singular(f64::INFINITY))
}

fn squared_distances(x: &Dataset, mu: &DVector<f64>, chol: &nalgebra::Cholesky<f64, nalgebra::Dyn>) -> Vec<f64> {
    let l = chol.l();
    let d = x.d();
    let mut y = vec![0.0; d];
    x.rows()
        .map(|r| {
            // forward substitution L y = r − μ
            for i in 0..d {
                let mut acc = r[i] - mu[i];
                for j in 0..i {
                    acc -= l[(i, j)] * y[j];
                }
                y[i] = acc / l[(i, i)];
            }
            y.iter().map(|v| v * v).sum()
        })
        .collect()
}

fn weighted_moments(x: &Dataset, w: &[f64]) -> (DVector<f64>, DMatrix<f64>) {
    let d = x.d();
    let total: f64 = w.iter().sum();
    let mut mu = DVector::zeros(d);
    for (r, &wi) in x.rows().zip(w) {
        for j in 0..d {
            mu[j] += wi * r[j];
        }
    }
    mu /= total;
    let mut s = DMatrix::zeros(d, d);
    let mut c = vec![0.0; d];
    for (r, &wi) in x.rows().zip(w) {
        if wi == 0.0 {
            continue;
        }
        for j in 0..d {
            c[j] = r[j] - mu[j];
        }
        for i in 0..d {
            for j in i..d {
                s[(i, j)] += wi * c[i] * c[j];
            }
        }
    }
    for i in 0..d {
        for j in i..d {
            let v = s[(i, j)] / total;
            s[(i, j)] = v;
            s[(j, i)] = v;
        }
    }
    (mu, s)
}

/// Affine-invariant size of the step `(μ, S) → (μ', S')`.
fn step_size(
    mu: &DVector<f64>,
    s: &DMatrix<f64>,
    mu_new: &DVector<f64>,
    chol_new: &nalgebra::Cholesky<f64, nalgebra::Dyn>,
) -> f64 {
    let d = mu.len();
    let dmu = chol_new.l().solve_lower_triangular(&(mu_new - mu)).expect("nonsingular factor");
    let l = chol_new.l();
    let a = l.solve_lower_triangular(s).expect("nonsingular factor");
    let b = l.solve_lower_triangular(&a.transpose()).expect("nonsingular factor");
    let dev = (b - DMatrix::<f64>::identity(d, d)).norm();
    dmu.norm().max(dev)
}

/// Biweight M-estimate of location and scatter.
pub fn m_estimate_loc_scatter(x: &Dataset, cfg: &MEstimatorConfig) -> Result<LocScatterEstimate> {
    cfg.validate()?;
    let (n, d) = (x.n(), x.d());
    if n <= d {
        return Err(RfmError::InsufficientData(format!(
            "need more observations ({n}) than dimensions ({d})"
        )));
    }
    let cutoff = cfg.cutoff(d);
    let target = chi2_median(d);

    let mut mu = DVector::zeros(d);
    let mut s = DMatrix::zeros(d, d);
    for j in 0..d {
        let col = x.column(j);
        mu[j] = median1d(&col)?;
        let scale = MAD_NORMAL_SCALE * mad(&col)?;
        s[(j, j)] = scale * scale;
    }
    let mut chol = factor(&s)?;

    let mut iterations = 0;
    let mut converged = false;
    while iterations < cfg.max_iter {
        iterations += 1;
        let dist2 = squared_distances(x, &mu, &chol);
        let w: Vec<f64> = dist2.iter().map(|d2| biweight(d2.sqrt() / cutoff)).collect();
        if w.iter().sum::<f64>() <= 0.0 {
            return Err(RfmError::InsufficientData("all biweight weights vanished".into()));
        }
        let (mu_new, mut s_new) = weighted_moments(x, &w);
        let chol_raw = factor(&s_new)?;
        let mut d2_new = squared_distances(x, &mu_new, &chol_raw);
        let med = median_in_place(&mut d2_new);
        if med.is_nan() || med <= 0.0 {
            return Err(RfmError::Singular(f64::INFINITY));
        }
        s_new *= med / target;
        let chol_new = factor(&s_new)?;
        let step = step_size(&mu, &s, &mu_new, &chol_new);
        mu = mu_new;
        s = s_new;
        chol = chol_new;
        if step < cfg.tol {
            converged = true;
            break;
        }
    }

    let mut entries = vec![0.0; d * d];
    for i in 0..d {
        for j in 0..d {
            entries[i * d + j] = s[(i, j)];
        }
    }
    Ok(LocScatterEstimate {
        location: VectorObs::new(mu.iter().copied().collect())?,
        scatter: SymMatrix::new(d, entries)?,
        iterations,
        converged,
    })
}
