//! Replicated comparisons of classical, robust, averaged and fused
//! estimators on the synthetic designs.

use std::time::Instant;

use serde::Serialize;

use crate::covop::{robust_cov_kernel, sample_cov_kernel, TrimmedCovConfig};
use crate::data::{Dataset, RowSet};
use crate::depth::{average_of, Candidate, NormKind};
use crate::error::{Result, RfmError};
use crate::fusion::{
    fuse, rfm_cluster, sample_covariance, sample_mean, subsample_estimates, FuseRule, MLocation,
    Assignment, MScatter, SplitPlan, SubsampleEstimator, TrimmedCov,
};
use crate::metrics::{matching_error, mse_report};
use crate::numerics::{CovKernel, VectorObs};
use crate::rng::derive_seed;
use crate::robust::{m_estimate_loc_scatter, MEstimatorConfig};
use crate::sim::generators::{
    gen_contaminated_gaussian, gen_kraus, gen_three_clusters, ContaminatedGaussianSpec,
    KrausModelSpec, ThreeClusterSpec,
};
use crate::tkm::{itkm, ITkMConfig};

/// Mean errors over replicates for each method, with mean wall times.
/// `None` marks a method that was not run.
#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct MethodErrors {
    pub mle: Option<f64>,
    pub rob: Option<f64>,
    pub avrob: Option<f64>,
    pub rfm1: Option<f64>,
    pub rfm: Option<f64>,
    pub t0: Option<f64>,
    pub t1: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct MultivariateStudy {
    pub n: usize,
    pub m: usize,
    pub p: f64,
    pub reps: usize,
    pub seed: u64,
    /// Also run the robust estimator on the whole sample.
    pub with_rob: bool,
    pub mest: MEstimatorConfig,
}

impl MultivariateStudy {
    pub fn new(n: usize, m: usize, p: f64, reps: usize, seed: u64) -> Self {
        MultivariateStudy {
            n,
            m,
            p,
            reps,
            seed,
            with_rob: true,
            mest: MEstimatorConfig::default(),
        }
    }
}

fn mean_of(xs: &[f64]) -> f64 {
    xs.iter().sum::<f64>() / xs.len() as f64
}

#[derive(Default)]
struct Collected {
    mle: Vec<Candidate>,
    rob: Vec<Candidate>,
    avrob: Vec<Candidate>,
    rfm1: Vec<Candidate>,
    rfm: Vec<Candidate>,
    t0: Vec<f64>,
    t1: Vec<f64>,
}

impl Collected {
    fn push_fused<D, E>(&mut self, x: &D, plan: &SplitPlan, est: &E) -> Result<()>
    where
        D: RowSet,
        E: SubsampleEstimator<D>,
    {
        let t = Instant::now();
        let (cands, _, _) = subsample_estimates(x, plan, est)?;
        let (rfm, set, _, _) = fuse(cands, FuseRule::Deepest)?;
        self.t1.push(t.elapsed().as_secs_f64());
        let items = set.into_items();
        let all: Vec<usize> = (0..items.len()).collect();
        let (rfm1, set, _, _) = fuse(items, FuseRule::Deepest40)?;
        self.avrob.push(average_of(&set, &all)?);
        self.rfm1.push(rfm1);
        self.rfm.push(rfm);
        Ok(())
    }

    fn errors(&self, truth: &Candidate, kind: NormKind) -> Result<MethodErrors> {
        let mse = |v: &[Candidate]| -> Result<Option<f64>> {
            if v.is_empty() {
                Ok(None)
            } else {
                mse_report(v, truth, kind).map(Some)
            }
        };
        Ok(MethodErrors {
            mle: mse(&self.mle)?,
            rob: mse(&self.rob)?,
            avrob: mse(&self.avrob)?,
            rfm1: mse(&self.rfm1)?,
            rfm: mse(&self.rfm)?,
            t0: (!self.t0.is_empty()).then(|| mean_of(&self.t0)),
            t1: (!self.t1.is_empty()).then(|| mean_of(&self.t1)),
        })
    }
}

fn contaminated_replicate(s: &MultivariateStudy, r: usize) -> Result<(Dataset, SplitPlan)> {
    let spec = ContaminatedGaussianSpec::standard(s.n, s.p, derive_seed(s.seed, r as u64));
    let (x, _) = gen_contaminated_gaussian(&spec)?;
    let plan = SplitPlan::even(s.n, s.m, Assignment::Contiguous)?;
    Ok((x, plan))
}

/// Location errors (squared Euclidean, averaged over replicates); the
/// truth is the origin.
pub fn location_study(s: &MultivariateStudy) -> Result<MethodErrors> {
    let mut c = Collected::default();
    for r in 0..s.reps {
        let (x, plan) = contaminated_replicate(s, r)?;
        c.mle.push(sample_mean(&x)?);
        if s.with_rob {
            let t = Instant::now();
            c.rob.push(Candidate::Vector(m_estimate_loc_scatter(&x, &s.mest)?.location));
            c.t0.push(t.elapsed().as_secs_f64());
        }
        c.push_fused(&x, &plan, &MLocation(s.mest))?;
    }
    let truth = Candidate::Vector(VectorObs::new(vec![0.0; 5])?);
    c.errors(&truth, NormKind::Euclidean)
}

/// Scatter errors (squared maximum absolute row sum, averaged over
/// replicates) against the clean covariance.
pub fn scatter_study(s: &MultivariateStudy) -> Result<MethodErrors> {
    let mut c = Collected::default();
    for r in 0..s.reps {
        let (x, plan) = contaminated_replicate(s, r)?;
        c.mle.push(sample_covariance(&x)?);
        if s.with_rob {
            let t = Instant::now();
            c.rob.push(Candidate::Matrix(m_estimate_loc_scatter(&x, &s.mest)?.scatter));
            c.t0.push(t.elapsed().as_secs_f64());
        }
        c.push_fused(&x, &plan, &MScatter(s.mest))?;
    }
    let truth = Candidate::Matrix(ContaminatedGaussianSpec::standard(s.n, s.p, 0).sigma());
    c.errors(&truth, NormKind::MaxAbsRowsum)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CovopStudy {
    pub n_grid: usize,
    pub n: usize,
    pub m: usize,
    pub p: f64,
    pub reps: usize,
    pub seed: u64,
    pub with_rob: bool,
    pub trim: TrimmedCovConfig,
}

impl CovopStudy {
    pub fn new(n: usize, m: usize, p: f64, alpha: f64, reps: usize, seed: u64) -> Self {
        CovopStudy {
            n_grid: 20,
            n,
            m,
            p,
            reps,
            seed,
            with_rob: false,
            trim: TrimmedCovConfig {
                alpha,
                ..Default::default()
            },
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CovopErrors {
    /// Squared Hilbert–Schmidt errors.
    pub hs: MethodErrors,
    /// Squared unweighted grid Frobenius errors of the same estimates.
    pub grid: MethodErrors,
}

fn grid_mse(estimates: &[Candidate], truth: &CovKernel) -> Result<Option<f64>> {
    if estimates.is_empty() {
        return Ok(None);
    }
    let mut acc = 0.0;
    for e in estimates {
        let k = e.as_kernel().ok_or(RfmError::KindMismatch)?;
        acc += k.sub(truth)?.grid_frobenius_norm().powi(2);
    }
    Ok(Some(acc / estimates.len() as f64))
}

/// Covariance-kernel errors on the functional model; RFM1 is not part of
/// this comparison.
pub fn covop_study(s: &CovopStudy) -> Result<CovopErrors> {
    let mut c = Collected::default();
    let base = KrausModelSpec::new(s.n_grid, s.n, s.p, s.seed);
    let truth = base.true_kernel()?;
    for r in 0..s.reps {
        let spec = KrausModelSpec {
            seed: derive_seed(s.seed, r as u64),
            ..base.clone()
        };
        let (x, _) = gen_kraus(&spec)?;
        c.mle.push(Candidate::Kernel(sample_cov_kernel(&x)?));
        if s.with_rob {
            let t = Instant::now();
            c.rob.push(Candidate::Kernel(robust_cov_kernel(&x, &s.trim)?.kernel));
            c.t0.push(t.elapsed().as_secs_f64());
        }
        let plan = SplitPlan::even(s.n, s.m, Assignment::Contiguous)?;
        c.push_fused(&x, &plan, &TrimmedCov(s.trim))?;
    }
    c.rfm1.clear();
    let truth_c = Candidate::Kernel(truth.clone());
    let hs = c.errors(&truth_c, NormKind::HilbertSchmidt)?;
    let grid = MethodErrors {
        mle: grid_mse(&c.mle, &truth)?,
        rob: grid_mse(&c.rob, &truth)?,
        avrob: grid_mse(&c.avrob, &truth)?,
        rfm1: None,
        rfm: grid_mse(&c.rfm, &truth)?,
        t0: hs.t0,
        t1: hs.t1,
    };
    Ok(CovopErrors { hs, grid })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ClusterStudy {
    pub fac: usize,
    pub m: usize,
    pub k: usize,
    pub alpha1: f64,
    pub alpha2: f64,
    pub reps: usize,
    pub seed: u64,
    pub itkm: ITkMConfig,
}

impl ClusterStudy {
    pub fn new(fac: usize, m: usize, alpha1: f64, alpha2: f64, reps: usize, seed: u64) -> Self {
        ClusterStudy {
            fac,
            m,
            k: 3,
            alpha1,
            alpha2,
            reps,
            seed,
            itkm: ITkMConfig::default(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ClusterErrors {
    /// Whole-sample trimmed k-means.
    pub me1: f64,
    /// Two-stage fusion.
    pub me2: f64,
    pub t0: f64,
    pub t1: f64,
}

/// Mean matching errors of whole-sample and fused trimmed k-means.
pub fn cluster_study(s: &ClusterStudy) -> Result<ClusterErrors> {
    let (mut me1, mut me2, mut t0, mut t1) = (vec![], vec![], vec![], vec![]);
    for r in 0..s.reps {
        let rep_seed = derive_seed(s.seed, r as u64);
        let (x, truth) = gen_three_clusters(&ThreeClusterSpec {
            fac: s.fac,
            seed: rep_seed,
        })?;
        let cfg = ITkMConfig {
            seed: derive_seed(rep_seed, 1),
            ..s.itkm
        };
        let t = Instant::now();
        let whole = itkm(&x, s.k, s.alpha1, &cfg)?;
        t0.push(t.elapsed().as_secs_f64());
        me1.push(matching_error(&truth, &whole.labels, s.k)?);

        let plan = SplitPlan::even(x.n(), s.m, Assignment::Contiguous)?;
        let t = Instant::now();
        let fused = rfm_cluster(&x, &plan, s.k, s.alpha1, s.alpha2, &cfg)?;
        t1.push(t.elapsed().as_secs_f64());
        me2.push(matching_error(&truth, &fused.result.labels, s.k)?);
    }
    Ok(ClusterErrors {
        me1: mean_of(&me1),
        me2: mean_of(&me2),
        t0: mean_of(&t0),
        t1: mean_of(&t1),
    })
}
