//! Impartial trimmed k-means: choose `k` centers and discard the `⌊nα⌋`
//! observations that fit worst, minimizing the mean squared distance of the
//! retained points to their nearest center.
//!
//! The optimizer runs concentration steps (trim, assign, recompute means)
//! from several random starts and keeps the best.

use rand::seq::index::sample;
use rayon::prelude::*;
use serde::Serialize;

use crate::data::Dataset;
use crate::error::{Result, RfmError};
use crate::numerics::{squared_distance, VectorObs};
use crate::rng::{derive_seed, rng_from_seed};

/// `k` distinct centers in `ℝ^d`, stored row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct CenterSet {
    k: usize,
    d: usize,
    values: Vec<f64>,
}

impl CenterSet {
    pub fn new(centers: &[VectorObs]) -> Result<Self> {
        let d = centers.first().ok_or(RfmError::Empty("center set"))?.dim();
        let mut values = Vec::with_capacity(centers.len() * d);
        for c in centers {
            if c.dim() != d {
                return Err(RfmError::DimensionMismatch {
                    expected: d,
                    got: c.dim(),
                });
            }
            values.extend_from_slice(c.coords());
        }
        Self::from_flat(centers.len(), d, values)
    }

    pub fn from_flat(k: usize, d: usize, values: Vec<f64>) -> Result<Self> {
        if k == 0 || d == 0 {
            return Err(RfmError::Empty("center set"));
        }
        if values.len() != k * d {
            return Err(RfmError::DimensionMismatch {
                expected: k * d,
                got: values.len(),
            });
        }
        if let Some(i) = values.iter().position(|v| !v.is_finite()) {
            return Err(RfmError::NonFinite(i));
        }
        let set = CenterSet { k, d, values };
        for a in 0..k {
            for b in a + 1..k {
                if set.center(a) == set.center(b) {
                    return Err(RfmError::param("centers", format!("centers {a} and {b} coincide")));
                }
            }
        }
        Ok(set)
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn dim(&self) -> usize {
        self.d
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn center(&self, j: usize) -> &[f64] {
        &self.values[j * self.d..(j + 1) * self.d]
    }

    pub fn centers(&self) -> impl Iterator<Item = &[f64]> {
        self.values.chunks_exact(self.d)
    }

    /// Index of the nearest center (ties to the lowest) and the squared
    /// distance to it.
    fn nearest(&self, x: &[f64]) -> (usize, f64) {
        let mut best = (0, f64::INFINITY);
        for (j, c) in self.centers().enumerate() {
            let d2 = squared_distance(x, c);
            if d2 < best.1 {
                best = (j, d2);
            }
        }
        best
    }

    /// The centers as a dataset, one center per row.
    pub fn to_dataset(&self) -> Dataset {
        Dataset::new(self.k, self.d, self.values.clone()).expect("centers are finite")
    }
}

pub fn dist_to_centerset(x: &VectorObs, centers: &CenterSet) -> Result<f64> {
    if x.dim() != centers.dim() {
        return Err(RfmError::DimensionMismatch {
            expected: centers.dim(),
            got: x.dim(),
        });
    }
    Ok(centers.nearest(x.coords()).1.sqrt())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct ITkMConfig {
    pub n_starts: usize,
    pub max_iter: usize,
    pub seed: u64,
}

impl Default for ITkMConfig {
    fn default() -> Self {
        ITkMConfig {
            n_starts: 20,
            max_iter: 100,
            seed: 0,
        }
    }
}

impl ITkMConfig {
    pub fn validate(&self) -> Result<()> {
        if self.n_starts == 0 {
            return Err(RfmError::param("n_starts", "must be at least 1"));
        }
        if self.max_iter == 0 {
            return Err(RfmError::param("max_iter", "must be at least 1"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrimmedKMeansResult {
    pub centers: CenterSet,
    pub radius: f64,
    /// `0` marks a trimmed point, `j ≥ 1` the `j`-th center.
    pub labels: Vec<usize>,
    pub objective: f64,
}

/// Number of points discarded at level `alpha`.
pub fn trim_count(n: usize, alpha: f64) -> Result<usize> {
    if !(0.0..1.0).contains(&alpha) {
        return Err(RfmError::param("alpha", format!("{alpha} not in [0, 1)")));
    }
    Ok(((n as f64 * alpha + 1e-9).floor() as usize).min(n))
}

/// Trims the `trim` worst-fitting points (ties: larger index trimmed),
/// labels the rest by nearest center. Returns labels, nearest squared
/// distances and the objective.
fn trim_assign(x: &Dataset, centers: &CenterSet, trim: usize) -> (Vec<usize>, Vec<f64>, f64) {
    let n = x.n();
    let near: Vec<(usize, f64)> = x.rows().map(|r| centers.nearest(r)).collect();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| near[a].1.total_cmp(&near[b].1).then(a.cmp(&b)));
    let mut labels = vec![0; n];
    let mut loss = 0.0;
    for &i in &order[..n - trim] {
        labels[i] = near[i].0 + 1;
        loss += near[i].1;
    }
    let d2 = near.into_iter().map(|(_, d)| d).collect();
    (labels, d2, loss / (n - trim) as f64)
}

/// Cluster means of the retained points. An empty cluster is moved to the
/// retained point farthest from its own center.
fn update_centers(x: &Dataset, labels: &[usize], d2: &[f64], old: &CenterSet) -> CenterSet {
    let (k, d) = (old.k, old.d);
    let mut sums = vec![0.0; k * d];
    let mut counts = vec![0usize; k];
    for (r, &l) in x.rows().zip(labels) {
        if l > 0 {
            counts[l - 1] += 1;
            for (s, v) in sums[(l - 1) * d..l * d].iter_mut().zip(r) {
                *s += v;
            }
        }
    }
    let mut used = Vec::new();
    for j in 0..k {
        if counts[j] > 0 {
            sums[j * d..(j + 1) * d].iter_mut().for_each(|s| *s /= counts[j] as f64);
            continue;
        }
        let far = (0..x.n())
            .filter(|&i| labels[i] > 0 && !used.contains(&i))
            .max_by(|&a, &b| d2[a].total_cmp(&d2[b]).then(b.cmp(&a)));
        match far {
            Some(i) => {
                used.push(i);
                sums[j * d..(j + 1) * d].copy_from_slice(x.row(i));
            }
            None => sums[j * d..(j + 1) * d].copy_from_slice(old.center(j)),
        }
    }
    CenterSet { k, d, values: sums }
}

/// One run of concentration steps from `init`. Also returns the objective
/// after each trim/assign pass.
pub fn concentrate(
    x: &Dataset,
    init: CenterSet,
    alpha: f64,
    max_iter: usize,
) -> Result<(TrimmedKMeansResult, Vec<f64>)> {
    if init.dim() != x.d() {
        return Err(RfmError::DimensionMismatch {
            expected: x.d(),
            got: init.dim(),
        });
    }
    let trim = trim_count(x.n(), alpha)?;
    if x.n() - trim < init.k() {
        return Err(RfmError::InsufficientData(format!(
            "{} retained points for {} centers",
            x.n() - trim,
            init.k()
        )));
    }
    let mut centers = init;
    let mut trace = Vec::new();
    let mut prev: Option<Vec<usize>> = None;
    let mut iter = 0;
    loop {
        let (labels, d2, objective) = trim_assign(x, &centers, trim);
        trace.push(objective);
        iter += 1;
        if prev.as_ref() == Some(&labels) || iter > max_iter {
            let radius = labels
                .iter()
                .zip(&d2)
                .filter(|(l, _)| **l > 0)
                .map(|(_, d)| *d)
                .fold(0.0, f64::max)
                .sqrt();
            let result = TrimmedKMeansResult {
                centers,
                radius,
                labels,
                objective,
            };
            return Ok((result, trace));
        }
        centers = update_centers(x, &labels, &d2, &centers);
        prev = Some(labels);
    }
}

/// Indices of pairwise distinct rows, first occurrence kept.
fn distinct_rows(x: &Dataset) -> Vec<usize> {
    let mut order: Vec<usize> = (0..x.n()).collect();
    let cmp = |a: &usize, b: &usize| {
        x.row(*a)
            .iter()
            .zip(x.row(*b))
            .map(|(u, v)| u.total_cmp(v))
            .find(|o| o.is_ne())
            .unwrap_or(std::cmp::Ordering::Equal)
    };
    order.sort_by(|a, b| cmp(a, b).then(a.cmp(b)));
    order.dedup_by(|a, b| cmp(a, b).is_eq());
    order.sort_unstable();
    order
}

/// Multi-start trimmed k-means. Starts run in parallel with seeds derived
/// from `cfg.seed`; the lowest objective wins, ties to the earliest start.
pub fn itkm(x: &Dataset, k: usize, alpha: f64, cfg: &ITkMConfig) -> Result<TrimmedKMeansResult> {
    cfg.validate()?;
    if k == 0 {
        return Err(RfmError::param("k", "must be at least 1"));
    }
    let trim = trim_count(x.n(), alpha)?;
    if x.n() - trim < k {
        return Err(RfmError::InsufficientData(format!(
            "{} retained points for {k} centers",
            x.n() - trim
        )));
    }
    let distinct = distinct_rows(x);
    if distinct.len() < k {
        return Err(RfmError::InsufficientData(format!(
            "{} distinct points for {k} centers",
            distinct.len()
        )));
    }
    let runs: Vec<TrimmedKMeansResult> = (0..cfg.n_starts)
        .into_par_iter()
        .map(|s| {
            let mut rng = rng_from_seed(derive_seed(cfg.seed, s as u64));
            let mut picks = sample(&mut rng, distinct.len(), k).into_vec();
            picks.sort_unstable();
            let values = picks.iter().flat_map(|&p| x.row(distinct[p]).to_vec()).collect();
            let init = CenterSet { k, d: x.d(), values };
            concentrate(x, init, alpha, cfg.max_iter).map(|(r, _)| r)
        })
        .collect::<Result<_>>()?;
    let mut best = 0;
    for (s, r) in runs.iter().enumerate() {
        if r.objective < runs[best].objective {
            best = s;
        }
    }
    Ok(runs.into_iter().nth(best).expect("at least one start"))
}

/// Closed-ball labelling: `0` if the point is farther than `radius` from
/// every center, else the nearest center (ties to the lowest index).
pub fn assign_labels(x: &Dataset, centers: &CenterSet, radius: f64) -> Result<Vec<usize>> {
    if x.d() != centers.dim() {
        return Err(RfmError::DimensionMismatch {
            expected: centers.dim(),
            got: x.d(),
        });
    }
    if radius.is_nan() || radius < 0.0 {
        return Err(RfmError::param("radius", format!("{radius} is negative")));
    }
    let r2 = radius * radius;
    Ok(x.rows()
        .map(|r| {
            let (j, d2) = centers.nearest(r);
            // compare distances, not squares, so the boundary is exact
            if d2 <= r2 || d2.sqrt() <= radius {
                j + 1
            } else {
                0
            }
        })
        .collect())
}

/// Nearest-center labels with the `trim` farthest points set to `0`
/// (ties: larger index trimmed).
pub fn label_with_trim(x: &Dataset, centers: &CenterSet, trim: usize) -> Result<Vec<usize>> {
    if x.d() != centers.dim() {
        return Err(RfmError::DimensionMismatch {
            expected: centers.dim(),
            got: x.d(),
        });
    }
    if trim > x.n() {
        return Err(RfmError::param("trim", format!("{trim} exceeds {} points", x.n())));
    }
    Ok(trim_assign(x, centers, trim).0)
}
