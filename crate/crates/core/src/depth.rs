//! Spatial depth of a candidate with respect to the empirical distribution of
//! a finite candidate set, and the two fusion selections built on it.
//!
//! For a set `{X_1, …, X_m}` in a normed space the depth of `x` is
//!
//! ```text
//! D(x) = 1 − ‖ (1/m) Σ_i (X_i − x) / ‖X_i − x‖ ‖
//! ```
//!
//! Terms with `X_i = x` contribute the zero vector. Candidates are handled
//! through their flat coordinate representation, so the same code serves
//! vectors (Euclidean norm), scatter matrices (maximum absolute row sum) and
//! covariance kernels (Hilbert–Schmidt norm with trapezoid weights).

use std::sync::Arc;

use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Result, RfmError};
use crate::numerics::{
    euclidean_norm, hs_norm_flat, rowsum_norm_flat, CovKernel, Grid, SymMatrix, VectorObs,
};

/// A fusable estimate.
#[derive(Debug, Clone, PartialEq)]
pub enum Candidate {
    Vector(VectorObs),
    Matrix(SymMatrix),
    Kernel(CovKernel),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum NormKind {
    Euclidean,
    MaxAbsRowsum,
    HilbertSchmidt,
}

impl Candidate {
    /// The norm paired with this kind of estimate.
    pub fn natural_norm(&self) -> NormKind {
        match self {
            Candidate::Vector(_) => NormKind::Euclidean,
            Candidate::Matrix(_) => NormKind::MaxAbsRowsum,
            Candidate::Kernel(_) => NormKind::HilbertSchmidt,
        }
    }

    pub fn flat(&self) -> &[f64] {
        match self {
            Candidate::Vector(v) => v.coords(),
            Candidate::Matrix(m) => m.entries(),
            Candidate::Kernel(k) => k.values(),
        }
    }

    fn same_shape(&self, other: &Candidate) -> bool {
        match (self, other) {
            (Candidate::Vector(a), Candidate::Vector(b)) => a.dim() == b.dim(),
            (Candidate::Matrix(a), Candidate::Matrix(b)) => a.dim() == b.dim(),
            (Candidate::Kernel(a), Candidate::Kernel(b)) => a.grid() == b.grid(),
            _ => false,
        }
    }

    /// A candidate of the same shape with new coordinates.
    fn with_flat(&self, values: Vec<f64>) -> Result<Candidate> {
        Ok(match self {
            Candidate::Vector(_) => Candidate::Vector(VectorObs::new(values)?),
            Candidate::Matrix(m) => Candidate::Matrix(SymMatrix::new(m.dim(), values)?),
            Candidate::Kernel(k) => Candidate::Kernel(CovKernel::new(k.grid().clone(), values)?),
        })
    }

    /// Norm of `self − other` under the natural norm of the kind.
    pub fn distance(&self, other: &Candidate) -> Result<f64> {
        if !self.same_shape(other) {
            return Err(RfmError::KindMismatch);
        }
        let diff: Vec<f64> = self.flat().iter().zip(other.flat()).map(|(a, b)| a - b).collect();
        Ok(Norm::for_candidate(self).eval(&diff))
    }

    pub fn as_vector(&self) -> Option<&VectorObs> {
        match self {
            Candidate::Vector(v) => Some(v),
            _ => None,
        }
    }

    pub fn as_matrix(&self) -> Option<&SymMatrix> {
        match self {
            Candidate::Matrix(m) => Some(m),
            _ => None,
        }
    }

    pub fn as_kernel(&self) -> Option<&CovKernel> {
        match self {
            Candidate::Kernel(k) => Some(k),
            _ => None,
        }
    }
}

impl From<VectorObs> for Candidate {
    fn from(v: VectorObs) -> Self {
        Candidate::Vector(v)
    }
}

impl From<SymMatrix> for Candidate {
    fn from(m: SymMatrix) -> Self {
        Candidate::Matrix(m)
    }
}

impl From<CovKernel> for Candidate {
    fn from(k: CovKernel) -> Self {
        Candidate::Kernel(k)
    }
}

/// A norm resolved against a concrete shape.
#[derive(Debug, Clone)]
enum Norm {
    Euclidean,
    RowSum(usize),
    Hs(Arc<Grid>),
}

impl Norm {
    fn for_candidate(c: &Candidate) -> Norm {
        match c {
            Candidate::Vector(_) => Norm::Euclidean,
            Candidate::Matrix(m) => Norm::RowSum(m.dim()),
            Candidate::Kernel(k) => Norm::Hs(k.grid().clone()),
        }
    }

    fn eval(&self, v: &[f64]) -> f64 {
        match self {
            Norm::Euclidean => euclidean_norm(v),
            Norm::RowSum(d) => rowsum_norm_flat(v, *d),
            Norm::Hs(grid) => hs_norm_flat(v, grid.weights()),
        }
    }
}

/// A non-empty collection of candidates of one kind and shape.
#[derive(Debug, Clone)]
pub struct CandidateSet {
    items: Vec<Candidate>,
    norm_kind: NormKind,
    norm: Norm,
}

impl CandidateSet {
    /// Builds a set using the natural norm of the candidates' kind.
    pub fn new(items: Vec<Candidate>) -> Result<Self> {
        let kind = items.first().ok_or(RfmError::Empty("candidate set"))?.natural_norm();
        Self::with_norm(items, kind)
    }

    pub fn with_norm(items: Vec<Candidate>, norm_kind: NormKind) -> Result<Self> {
        let first = items.first().ok_or(RfmError::Empty("candidate set"))?;
        if first.natural_norm() != norm_kind || items.iter().any(|c| !c.same_shape(first)) {
            return Err(RfmError::KindMismatch);
        }
        let norm = Norm::for_candidate(first);
        Ok(CandidateSet {
            items,
            norm_kind,
            norm,
        })
    }

    pub fn items(&self) -> &[Candidate] {
        &self.items
    }

    pub fn len(&self) -> usize {
        self.items.len()
    }

    pub fn is_empty(&self) -> bool {
        self.items.is_empty()
    }

    pub fn norm_kind(&self) -> NormKind {
        self.norm_kind
    }

    pub fn into_items(self) -> Vec<Candidate> {
        self.items
    }

    fn depth_of_flat(&self, x: &[f64]) -> f64 {
        let mut acc = vec![0.0; x.len()];
        let mut diff = vec![0.0; x.len()];
        for item in &self.items {
            for ((d, a), b) in diff.iter_mut().zip(item.flat()).zip(x) {
                *d = a - b;
            }
            let dist = self.norm.eval(&diff);
            if dist > 0.0 {
                for (s, d) in acc.iter_mut().zip(&diff) {
                    *s += d / dist;
                }
            }
        }
        let m = self.items.len() as f64;
        acc.iter_mut().for_each(|s| *s /= m);
        (1.0 - self.norm.eval(&acc)).max(0.0)
    }
}

/// Empirical spatial depth of `x` with respect to `set`.
pub fn spatial_depth(x: &Candidate, set: &CandidateSet) -> Result<f64> {
    if !x.same_shape(&set.items[0]) {
        return Err(RfmError::KindMismatch);
    }
    Ok(set.depth_of_flat(x.flat()))
}

/// Depth of every member of the set, in set order.
pub fn depth_profile(set: &CandidateSet) -> Vec<f64> {
    set.items
        .par_iter()
        .map(|c| set.depth_of_flat(c.flat()))
        .collect()
}

/// Index of the largest depth; ties go to the smallest index.
pub fn argmax_depth(depths: &[f64]) -> usize {
    let mut best = 0;
    for (i, &d) in depths.iter().enumerate() {
        if d > depths[best] {
            best = i;
        }
    }
    best
}

/// Indices of the `⌈fraction·m⌉` deepest candidates, deepest first
/// (ties by index).
pub fn deepest_indices(depths: &[f64], fraction: f64) -> Result<Vec<usize>> {
    if !(fraction > 0.0 && fraction <= 1.0) {
        return Err(RfmError::param("fraction", format!("{fraction} not in (0, 1]")));
    }
    let m = depths.len();
    // the 1e-9 guard keeps e.g. 0.7·10 from rounding up to 8
    let keep = ((fraction * m as f64 - 1e-9).ceil() as usize).clamp(1, m);
    let mut order: Vec<usize> = (0..m).collect();
    order.sort_by(|&a, &b| depths[b].total_cmp(&depths[a]).then(a.cmp(&b)));
    order.truncate(keep);
    Ok(order)
}

/// The deepest member of the set.
pub fn deepest(set: &CandidateSet) -> (usize, Candidate) {
    let depths = depth_profile(set);
    let idx = argmax_depth(&depths);
    (idx, set.items[idx].clone())
}

/// Entrywise average of the selected members.
pub fn average_of(set: &CandidateSet, indices: &[usize]) -> Result<Candidate> {
    let first = indices
        .first()
        .map(|&i| &set.items[i])
        .ok_or(RfmError::Empty("selection"))?;
    let mut acc = vec![0.0; first.flat().len()];
    for &i in indices {
        for (a, v) in acc.iter_mut().zip(set.items[i].flat()) {
            *a += v;
        }
    }
    let k = indices.len() as f64;
    acc.iter_mut().for_each(|a| *a /= k);
    first.with_flat(acc)
}

/// Average of the `⌈fraction·m⌉` deepest members.
pub fn deepest_trimmed_mean(set: &CandidateSet, fraction: f64) -> Result<Candidate> {
    let depths = depth_profile(set);
    let chosen = deepest_indices(&depths, fraction)?;
    average_of(set, &chosen)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn vset(points: &[&[f64]]) -> CandidateSet {
        CandidateSet::new(
            points
                .iter()
                .map(|p| Candidate::Vector(VectorObs::new(p.to_vec()).unwrap()))
                .collect(),
        )
        .unwrap()
    }

    fn v(p: &[f64]) -> Candidate {
        Candidate::Vector(VectorObs::new(p.to_vec()).unwrap())
    }

    #[test]
    fn symmetric_pair_in_one_dimension() {
        let s = vset(&[&[-1.0], &[1.0]]);
        assert_eq!(spatial_depth(&v(&[0.0]), &s).unwrap(), 1.0);
        assert_eq!(spatial_depth(&v(&[5.0]), &s).unwrap(), 0.0);
    }

    #[test]
    fn direct_formula_in_the_plane() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for _ in 0..20 {
            let pts: Vec<[f64; 2]> = (0..5)
                .map(|_| [rng.random_range(-3.0..3.0), rng.random_range(-3.0..3.0)])
                .collect();
            let x = [rng.random_range(-3.0..3.0), rng.random_range(-3.0..3.0)];
            let (mut sx, mut sy) = (0.0, 0.0);
            for p in &pts {
                let (dx, dy) = (p[0] - x[0], p[1] - x[1]);
                let r = (dx * dx + dy * dy).sqrt();
                sx += dx / r;
                sy += dy / r;
            }
            let oracle = 1.0 - ((sx / 5.0).powi(2) + (sy / 5.0).powi(2)).sqrt();
            let refs: Vec<&[f64]> = pts.iter().map(|p| p.as_slice()).collect();
            let got = spatial_depth(&v(&x), &vset(&refs)).unwrap();
            assert!((got - oracle).abs() <= 1e-12 * oracle.abs().max(1.0));
        }
    }

    #[test]
    fn deepest_examples() {
        let s = vset(&[&[3.0, 1.0]]);
        assert_eq!(deepest(&s).0, 0);
        let s = vset(&[&[0.0], &[1.0], &[2.0], &[3.0], &[4.0]]);
        let (i, c) = deepest(&s);
        assert_eq!(i, 2);
        assert_eq!(c, v(&[2.0]));
        // brute force on the collinear set
        let depths: Vec<f64> = s.items().iter().map(|c| spatial_depth(c, &s).unwrap()).collect();
        assert_eq!(depths[2], 1.0);
        assert!(depths.iter().enumerate().all(|(j, d)| j == 2 || *d < 1.0));
    }

    #[test]
    fn deepest_on_matrices_matches_exhaustive_argmax() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let mats: Vec<Candidate> = (0..7)
            .map(|_| {
                let a: f64 = rng.random_range(-1.0..1.0);
                let b: f64 = rng.random_range(-1.0..1.0);
                let c: f64 = rng.random_range(-1.0..1.0);
                Candidate::Matrix(SymMatrix::from_rows(&[vec![a, b], vec![b, c]]).unwrap())
            })
            .collect();
        let set = CandidateSet::new(mats.clone()).unwrap();
        let mut best = (0usize, f64::NEG_INFINITY);
        for (j, x) in mats.iter().enumerate() {
            // direct evaluation: unit directions under the max row-sum norm
            let mut acc = [0.0; 4];
            for y in &mats {
                let diff: Vec<f64> = y.flat().iter().zip(x.flat()).map(|(p, q)| p - q).collect();
                let r = (diff[0].abs() + diff[1].abs()).max(diff[2].abs() + diff[3].abs());
                if r > 0.0 {
                    for k in 0..4 {
                        acc[k] += diff[k] / r;
                    }
                }
            }
            let nrm = ((acc[0].abs() + acc[1].abs()).max(acc[2].abs() + acc[3].abs())) / 7.0;
            let d = 1.0 - nrm;
            if d > best.1 {
                best = (j, d);
            }
        }
        assert_eq!(deepest(&set).0, best.0);
    }

    #[test]
    fn trimmed_mean_examples() {
        let s = vset(&[&[1.0, 0.0], &[3.0, 2.0], &[5.0, 1.0]]);
        assert_eq!(deepest_trimmed_mean(&s, 1.0).unwrap(), v(&[3.0, 1.0]));
        let one = vset(&[&[2.5]]);
        assert_eq!(deepest_trimmed_mean(&one, 0.4).unwrap(), v(&[2.5]));
        assert!(deepest_trimmed_mean(&s, 0.0).is_err());
        assert!(deepest_trimmed_mean(&s, 1.5).is_err());

        let mut rng = ChaCha8Rng::seed_from_u64(8);
        let pts: Vec<Vec<f64>> = (0..10)
            .map(|_| vec![rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)])
            .collect();
        let refs: Vec<&[f64]> = pts.iter().map(|p| p.as_slice()).collect();
        let s = vset(&refs);
        // oracle: depth by hand, sort, average top 4
        let mut scored: Vec<(f64, usize)> = pts
            .iter()
            .enumerate()
            .map(|(i, p)| (spatial_depth(&v(p), &s).unwrap(), i))
            .collect();
        scored.sort_by(|a, b| b.0.partial_cmp(&a.0).unwrap().then(a.1.cmp(&b.1)));
        let mut mean = [0.0, 0.0];
        for &(_, i) in &scored[..4] {
            mean[0] += pts[i][0] / 4.0;
            mean[1] += pts[i][1] / 4.0;
        }
        let got = deepest_trimmed_mean(&s, 0.4).unwrap();
        let g = got.flat();
        assert!((g[0] - mean[0]).abs() < 1e-15 && (g[1] - mean[1]).abs() < 1e-15);
    }

    #[test]
    fn top_fraction_count_is_a_ceiling() {
        let depths = vec![0.1; 10];
        assert_eq!(deepest_indices(&depths, 0.4).unwrap().len(), 4);
        assert_eq!(deepest_indices(&depths, 0.7).unwrap().len(), 7);
        assert_eq!(deepest_indices(&depths, 0.41).unwrap().len(), 5);
        assert_eq!(deepest_indices(&depths[..3], 0.01).unwrap(), vec![0]);
    }

    #[test]
    fn kind_mismatch_is_rejected() {
        let s = vset(&[&[1.0, 2.0]]);
        assert!(spatial_depth(&v(&[1.0]), &s).is_err());
        let m = Candidate::Matrix(SymMatrix::identity(2));
        assert!(spatial_depth(&m, &s).is_err());
        assert!(CandidateSet::new(vec![v(&[1.0]), m.clone()]).is_err());
        assert!(CandidateSet::with_norm(vec![m], NormKind::Euclidean).is_err());
    }
}
