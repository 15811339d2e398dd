//! Split a sample into `m` subsamples, estimate on each, and fuse the `m`
//! estimates by spatial depth or by a second trimmed k-means on the pooled
//! centers.

use std::time::Instant;

use rand::seq::SliceRandom;
use rayon::prelude::*;
use serde::Serialize;

use crate::covop::{robust_cov_kernel, TrimmedCovConfig};
use crate::data::{Dataset, FuncData, RowSet};
use crate::depth::{
    argmax_depth, average_of, deepest_indices, depth_profile, Candidate, CandidateSet,
};
use crate::error::{Result, RfmError};
use crate::numerics::{SymMatrix, VectorObs};
use crate::rng::{derive_seed, rng_from_seed};
use crate::robust::{m_estimate_loc_scatter, median_in_place, MEstimatorConfig};
use crate::tkm::{itkm, label_with_trim, trim_count, CenterSet, ITkMConfig, TrimmedKMeansResult};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Assignment {
    Contiguous,
    Shuffled(u64),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct SplitPlan {
    pub m: usize,
    pub l: usize,
    pub assignment: Assignment,
}

impl SplitPlan {
    pub fn contiguous(m: usize, l: usize) -> Self {
        SplitPlan {
            m,
            l,
            assignment: Assignment::Contiguous,
        }
    }

    /// `m` subsamples of size `⌊n/m⌋`.
    pub fn even(n: usize, m: usize, assignment: Assignment) -> Result<Self> {
        if m == 0 || m > n {
            return Err(RfmError::param("m", format!("{m} subsamples for {n} observations")));
        }
        Ok(SplitPlan {
            m,
            l: n / m,
            assignment,
        })
    }

    pub fn validate(&self, n: usize) -> Result<()> {
        if self.m == 0 {
            return Err(RfmError::param("m", "must be at least 1"));
        }
        if self.l == 0 {
            return Err(RfmError::param("l", "must be at least 1"));
        }
        if self.m * self.l > n {
            return Err(RfmError::param(
                "m",
                format!("{} subsamples of size {} exceed {n} observations", self.m, self.l),
            ));
        }
        Ok(())
    }

    /// Row indices of each subsample.
    pub fn indices(&self, n: usize) -> Result<Vec<Vec<usize>>> {
        self.validate(n)?;
        let mut order: Vec<usize> = (0..n).collect();
        if let Assignment::Shuffled(seed) = self.assignment {
            order.shuffle(&mut rng_from_seed(seed));
        }
        Ok(order
            .chunks_exact(self.l)
            .take(self.m)
            .map(<[usize]>::to_vec)
            .collect())
    }
}

/// Subsamples in order, plus the number of discarded observations.
pub fn split<D: RowSet>(x: &D, plan: &SplitPlan) -> Result<(Vec<D>, usize)> {
    let n = x.n_rows();
    let parts = plan.indices(n)?.iter().map(|idx| x.select_rows(idx)).collect();
    Ok((parts, n - plan.m * plan.l))
}

/// Subsample size from the rate rule `l = n^{(b−1)/(a+b−1)}`.
pub fn plan_split(n: usize, a: f64, b: f64) -> Result<SplitPlan> {
    if a.is_nan() || a <= 0.0 {
        return Err(RfmError::param("a", format!("{a} must be positive")));
    }
    if b.is_nan() || b <= 1.0 {
        return Err(RfmError::param("b", format!("{b} must exceed 1")));
    }
    if n == 0 {
        return Err(RfmError::Empty("sample"));
    }
    let e = (b - 1.0) / (a + b - 1.0);
    let l = ((n as f64).powf(e).round() as usize).clamp(1, n);
    Ok(SplitPlan::contiguous(n / l, l))
}

/// A per-subsample estimator. `index` is the subsample position, for
/// estimators that derive their own random streams.
pub trait SubsampleEstimator<D>: Sync {
    fn estimate(&self, sub: &D, index: usize) -> Result<Candidate>;
}

impl<D, F> SubsampleEstimator<D> for F
where
    F: Fn(&D, usize) -> Result<Candidate> + Sync,
{
    fn estimate(&self, sub: &D, index: usize) -> Result<Candidate> {
        self(sub, index)
    }
}

/// Coordinatewise median.
#[derive(Debug, Clone, Copy, Default)]
pub struct CoordMedian;

impl SubsampleEstimator<Dataset> for CoordMedian {
    fn estimate(&self, sub: &Dataset, _: usize) -> Result<Candidate> {
        if sub.n() == 0 {
            return Err(RfmError::Empty("subsample"));
        }
        let med = (0..sub.d()).map(|j| median_in_place(&mut sub.column(j))).collect();
        Ok(Candidate::Vector(VectorObs::new(med)?))
    }
}

/// Location part of the biweight M-estimator.
#[derive(Debug, Clone, Copy, Default)]
pub struct MLocation(pub MEstimatorConfig);

impl SubsampleEstimator<Dataset> for MLocation {
    fn estimate(&self, sub: &Dataset, _: usize) -> Result<Candidate> {
        Ok(Candidate::Vector(m_estimate_loc_scatter(sub, &self.0)?.location))
    }
}

/// Scatter part of the biweight M-estimator.
#[derive(Debug, Clone, Copy, Default)]
pub struct MScatter(pub MEstimatorConfig);

impl SubsampleEstimator<Dataset> for MScatter {
    fn estimate(&self, sub: &Dataset, _: usize) -> Result<Candidate> {
        Ok(Candidate::Matrix(m_estimate_loc_scatter(sub, &self.0)?.scatter))
    }
}

/// Impartial trimmed covariance kernel.
#[derive(Debug, Clone, Copy, Default)]
pub struct TrimmedCov(pub TrimmedCovConfig);

impl SubsampleEstimator<FuncData> for TrimmedCov {
    fn estimate(&self, sub: &FuncData, _: usize) -> Result<Candidate> {
        Ok(Candidate::Kernel(robust_cov_kernel(sub, &self.0)?.kernel))
    }
}

/// Sample mean, sample covariance: the classical counterparts.
pub fn sample_mean(x: &Dataset) -> Result<Candidate> {
    if x.n() == 0 {
        return Err(RfmError::Empty("dataset"));
    }
    Ok(Candidate::Vector(VectorObs::new(x.mean())?))
}

pub fn sample_covariance(x: &Dataset) -> Result<Candidate> {
    if x.n() == 0 {
        return Err(RfmError::Empty("dataset"));
    }
    Ok(Candidate::Matrix(SymMatrix::new(x.d(), x.covariance())?))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum FuseRule {
    /// The deepest candidate.
    Deepest,
    /// Average of the 40% deepest candidates.
    Deepest40,
}

impl FuseRule {
    pub fn fraction(self) -> Option<f64> {
        match self {
            FuseRule::Deepest => None,
            FuseRule::Deepest40 => Some(0.4),
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct Timing {
    pub per_subsample: Vec<f64>,
    pub fuse: f64,
}

#[derive(Debug, Clone)]
pub struct FusionResult {
    pub estimate: Candidate,
    pub candidates: CandidateSet,
    pub depths: Vec<f64>,
    /// The selected candidate, or the averaged ones (deepest first).
    pub chosen: Vec<usize>,
    pub discarded: usize,
    pub timing: Timing,
}

impl FusionResult {
    /// Plain average of all subsample estimates.
    pub fn average(&self) -> Result<Candidate> {
        let all: Vec<usize> = (0..self.candidates.len()).collect();
        average_of(&self.candidates, &all)
    }
}

/// Runs `estimator` on every subsample (in parallel, collected in order).
pub fn subsample_estimates<D: RowSet, E: SubsampleEstimator<D> + ?Sized>(
    x: &D,
    plan: &SplitPlan,
    estimator: &E,
) -> Result<(Vec<Candidate>, Vec<f64>, usize)> {
    let (parts, discarded) = split(x, plan)?;
    let out: Vec<(Candidate, f64)> = parts
        .par_iter()
        .enumerate()
        .map(|(j, sub)| {
            let t = Instant::now();
            estimator
                .estimate(sub, j)
                .map(|c| (c, t.elapsed().as_secs_f64()))
                .map_err(|e| RfmError::Subsample {
                    index: j,
                    source: Box::new(e),
                })
        })
        .collect::<Result<_>>()?;
    let (cands, secs) = out.into_iter().unzip();
    Ok((cands, secs, discarded))
}

/// Fuses already computed candidates.
pub fn fuse(candidates: Vec<Candidate>, rule: FuseRule) -> Result<(Candidate, CandidateSet, Vec<f64>, Vec<usize>)> {
    let set = CandidateSet::new(candidates)?;
    let depths = depth_profile(&set);
    let (estimate, chosen) = match rule.fraction() {
        None => {
            let i = argmax_depth(&depths);
            (set.items()[i].clone(), vec![i])
        }
        Some(f) => {
            let idx = deepest_indices(&depths, f)?;
            (average_of(&set, &idx)?, idx)
        }
    };
    Ok((estimate, set, depths, chosen))
}

pub fn rfm_estimate<D: RowSet, E: SubsampleEstimator<D> + ?Sized>(
    x: &D,
    plan: &SplitPlan,
    estimator: &E,
    rule: FuseRule,
) -> Result<FusionResult> {
    let (cands, per_subsample, discarded) = subsample_estimates(x, plan, estimator)?;
    let t = Instant::now();
    let (estimate, candidates, depths, chosen) = fuse(cands, rule)?;
    Ok(FusionResult {
        estimate,
        candidates,
        depths,
        chosen,
        discarded,
        timing: Timing {
            per_subsample,
            fuse: t.elapsed().as_secs_f64(),
        },
    })
}

#[derive(Debug, Clone)]
pub struct ClusterFusion {
    /// Fused centers with the labelling of the full sample.
    pub result: TrimmedKMeansResult,
    /// The `k·m` first-stage centers, subsample by subsample.
    pub pooled: Dataset,
    /// Second-stage fit on the pooled centers.
    pub second_stage: TrimmedKMeansResult,
    pub discarded: usize,
    pub timing: Timing,
}

/// Two-stage trimmed k-means: level `alpha1` on every subsample, level
/// `alpha2` on the pooled centers, then every observation is assigned to
/// its nearest fused center with the `⌊n·alpha1⌋` farthest trimmed.
pub fn rfm_cluster(
    x: &Dataset,
    plan: &SplitPlan,
    k: usize,
    alpha1: f64,
    alpha2: f64,
    cfg: &ITkMConfig,
) -> Result<ClusterFusion> {
    cfg.validate()?;
    let (parts, discarded) = split(x, plan)?;
    let stage1: Vec<(TrimmedKMeansResult, f64)> = parts
        .par_iter()
        .enumerate()
        .map(|(j, sub)| {
            let t = Instant::now();
            let sub_cfg = ITkMConfig {
                seed: derive_seed(cfg.seed, j as u64),
                ..*cfg
            };
            itkm(sub, k, alpha1, &sub_cfg)
                .map(|r| (r, t.elapsed().as_secs_f64()))
                .map_err(|e| RfmError::Subsample {
                    index: j,
                    source: Box::new(e),
                })
        })
        .collect::<Result<_>>()?;

    let t = Instant::now();
    let mut values = Vec::with_capacity(k * plan.m * x.d());
    for (r, _) in &stage1 {
        values.extend_from_slice(r.centers.values());
    }
    let pooled = Dataset::new(k * plan.m, x.d(), values)?;
    let fuse_cfg = ITkMConfig {
        seed: derive_seed(cfg.seed, plan.m as u64),
        ..*cfg
    };
    let second_stage = itkm(&pooled, k, alpha2, &fuse_cfg)?;
    let result = relabel(x, second_stage.centers.clone(), trim_count(x.n(), alpha1)?)?;
    Ok(ClusterFusion {
        result,
        pooled,
        second_stage,
        discarded,
        timing: Timing {
            per_subsample: stage1.iter().map(|(_, s)| *s).collect(),
            fuse: t.elapsed().as_secs_f64(),
        },
    })
}

/// Labels `x` by nearest center, trimming the `trim` farthest, and reports
/// radius and objective of that labelling.
pub fn relabel(x: &Dataset, centers: CenterSet, trim: usize) -> Result<TrimmedKMeansResult> {
    let labels = label_with_trim(x, &centers, trim)?;
    let mut loss = 0.0;
    let mut radius2: f64 = 0.0;
    for (row, &l) in x.rows().zip(&labels) {
        if l > 0 {
            let d2 = crate::numerics::squared_distance(row, centers.center(l - 1));
            loss += d2;
            radius2 = radius2.max(d2);
        }
    }
    let kept = x.n() - trim;
    Ok(TrimmedKMeansResult {
        centers,
        radius: radius2.sqrt(),
        labels,
        objective: if kept > 0 { loss / kept as f64 } else { 0.0 },
    })
}
