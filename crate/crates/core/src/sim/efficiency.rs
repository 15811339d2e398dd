//! Median of medians: exact density of a subsample median, Monte Carlo
//! efficiency against the full-sample median, and the breakdown frequency
//! of depth fusion under Bernoulli contamination.

use std::sync::Arc;

use rand::Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::Serialize;
use statrs::distribution::{Continuous, ContinuousCDF, Normal};
use statrs::function::factorial::ln_factorial;

use crate::error::{Result, RfmError};
use crate::rng::{derive_seed, rng_from_seed};
use crate::robust::median_in_place;

type RealFn = Arc<dyn Fn(f64) -> f64 + Send + Sync>;

/// Median of `l = 2k + 1` draws from a distribution with density `pdf` and
/// distribution function `cdf`.
#[derive(Clone)]
pub struct EfficiencyModel {
    pub k: usize,
    pub pdf: RealFn,
    pub cdf: RealFn,
}

impl EfficiencyModel {
    pub fn standard_normal(k: usize) -> Self {
        let n = Normal::standard();
        EfficiencyModel {
            k,
            pdf: Arc::new(move |x| n.pdf(x)),
            cdf: Arc::new(move |x| n.cdf(x)),
        }
    }
}

impl std::fmt::Debug for EfficiencyModel {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("EfficiencyModel").field("k", &self.k).finish_non_exhaustive()
    }
}

/// `g(y) = (2k+1)!/(k!)² F(y)^k (1−F(y))^k f(y)`, evaluated in logs.
pub fn median_density(y: f64, model: &EfficiencyModel) -> f64 {
    let k = model.k as u64;
    let f = (model.pdf)(y);
    if k == 0 {
        return f;
    }
    let big_f = (model.cdf)(y);
    if f <= 0.0 || big_f <= 0.0 || big_f >= 1.0 {
        return 0.0;
    }
    let log_c = ln_factorial(2 * k + 1) - 2.0 * ln_factorial(k);
    let kf = k as f64;
    (log_c + kf * big_f.ln() + kf * (1.0 - big_f).ln() + f.ln()).exp()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct EfficiencyOutcome {
    /// `Var(full-sample median) / Var(median of subsample medians)`.
    pub ratio: f64,
    pub var_full: f64,
    pub var_fused: f64,
    /// Plug-in `1 / (4 m g(0)²)` for the fused variance.
    pub var_fused_plugin: f64,
}

fn variance(xs: &[f64]) -> f64 {
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0)
}

/// Standard normal data, `m` subsamples of size `2k + 1`.
pub fn efficiency_study(k: usize, m: usize, reps: usize, seed: u64) -> Result<EfficiencyOutcome> {
    if reps < 100 {
        return Err(RfmError::param("reps", format!("{reps} is below 100")));
    }
    if m == 0 {
        return Err(RfmError::param("m", "must be at least 1"));
    }
    let l = 2 * k + 1;
    let pairs: Vec<(f64, f64)> = (0..reps)
        .into_par_iter()
        .map(|r| {
            let mut rng = rng_from_seed(derive_seed(seed, r as u64));
            let mut x: Vec<f64> = (0..m * l).map(|_| rng.sample(StandardNormal)).collect();
            let mut meds: Vec<f64> = x.chunks_exact_mut(l).map(median_in_place).collect();
            let fused = median_in_place(&mut meds);
            (median_in_place(&mut x), fused)
        })
        .collect();
    let full: Vec<f64> = pairs.iter().map(|p| p.0).collect();
    let fused: Vec<f64> = pairs.iter().map(|p| p.1).collect();
    let (var_full, var_fused) = (variance(&full), variance(&fused));
    let g0 = median_density(0.0, &EfficiencyModel::standard_normal(k));
    Ok(EfficiencyOutcome {
        ratio: var_full / var_fused,
        var_full,
        var_fused,
        var_fused_plugin: 1.0 / (4.0 * m as f64 * g0 * g0),
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BreakdownTable {
    pub n: usize,
    pub reps: usize,
    pub seed: u64,
    pub m_values: Vec<usize>,
    pub p_values: Vec<f64>,
    /// Subsample size used for each `m`.
    pub l_values: Vec<usize>,
    /// Observations left over for each `m`.
    pub discarded: Vec<usize>,
    /// `freq[i][j]`: breakdown frequency for `m_values[i]`, `p_values[j]`.
    pub freq: Vec<Vec<f64>>,
}

/// Monte Carlo frequency with which more than half of the subsamples hold
/// a contaminated majority.
///
/// A subsample of size `l` counts as broken when its contaminated count `S`
/// satisfies `2S ≥ l`, and fusion breaks when `2·(broken) ≥ m`; both agree
/// with the strict majority rule for odd sizes. Each replicate draws one
/// uniform per observation and reuses it for every `p` and `m`, so the
/// frequencies are monotone in `p`.
pub fn breakdown_mc(
    n: usize,
    m_values: &[usize],
    p_values: &[f64],
    reps: usize,
    seed: u64,
) -> Result<BreakdownTable> {
    if let Some(&m) = m_values.iter().find(|&&m| m == 0 || m > n) {
        return Err(RfmError::param("m", format!("{m} subsamples for {n} observations")));
    }
    if let Some(&p) = p_values.iter().find(|p| !(0.0..=1.0).contains(*p)) {
        return Err(RfmError::param("p", format!("{p} not in [0, 1]")));
    }
    if reps == 0 {
        return Err(RfmError::param("reps", "must be at least 1"));
    }
    let l_values: Vec<usize> = m_values.iter().map(|&m| n / m).collect();
    let cells = m_values.len() * p_values.len();
    let counts: Vec<Vec<u32>> = (0..reps)
        .into_par_iter()
        .map(|r| {
            let mut rng = rng_from_seed(derive_seed(seed, r as u64));
            let u: Vec<f64> = (0..n).map(|_| rng.random()).collect();
            let mut out = vec![0u32; cells];
            for (j, &p) in p_values.iter().enumerate() {
                let mut prefix = Vec::with_capacity(n + 1);
                prefix.push(0usize);
                for &ui in &u {
                    prefix.push(prefix.last().unwrap() + usize::from(ui < p));
                }
                for (i, (&m, &l)) in m_values.iter().zip(&l_values).enumerate() {
                    let broken = (0..m).filter(|&b| 2 * (prefix[(b + 1) * l] - prefix[b * l]) >= l).count();
                    out[i * p_values.len() + j] = u32::from(2 * broken >= m);
                }
            }
            out
        })
        .collect();
    let mut totals = vec![0u64; cells];
    for c in &counts {
        for (t, v) in totals.iter_mut().zip(c) {
            *t += u64::from(*v);
        }
    }
    let freq = (0..m_values.len())
        .map(|i| {
            (0..p_values.len())
                .map(|j| totals[i * p_values.len() + j] as f64 / reps as f64)
                .collect()
        })
        .collect();
    Ok(BreakdownTable {
        n,
        reps,
        seed,
        m_values: m_values.to_vec(),
        p_values: p_values.to_vec(),
        discarded: m_values.iter().zip(&l_values).map(|(m, l)| n - m * l).collect(),
        l_values,
        freq,
    })
}
