//! Library behind the `rfm` binary: fused robust estimation from CSV data
//! and the simulation studies.

mod output;

use std::fs::File;
use std::io::BufReader;
use std::ffi::OsString;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use rfm_core::covop::{Centering, TrimmedCovConfig};
use rfm_core::depth::Candidate;
use rfm_core::fusion::{
    plan_split, rfm_cluster, rfm_estimate, Assignment, FuseRule, MLocation, MScatter, SplitPlan,
    TrimmedCov,
};
use rfm_core::io::{read_dataset, read_func_data};
use rfm_core::robust::MEstimatorConfig;
use rfm_core::sim::{
    breakdown_mc, cluster_study, covop_study, efficiency_study, location_study, scatter_study,
    ClusterStudy, CovopStudy, MethodErrors, MultivariateStudy,
};
use rfm_core::tkm::ITkMConfig;
use rfm_core::RfmError;

use output::{Body, Format, Report};

#[derive(Parser, Debug)]
#[command(name = "rfm", version, about = "Robust fusion of subsample estimates")]
struct Cli {
    /// Worker threads (default: all cores)
    #[arg(long, global = true)]
    threads: Option<usize>,
    /// Output format
    #[arg(long, global = true, value_enum, default_value_t = Format::Csv)]
    format: Format,
    /// Write output here instead of stdout
    #[arg(long, short, global = true)]
    output: Option<PathBuf>,
    /// Include wall-clock timings (makes output run-dependent)
    #[arg(long, global = true)]
    timings: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, ValueEnum)]
enum Fuse {
    Deepest,
    Deepest40,
}

impl From<Fuse> for FuseRule {
    fn from(f: Fuse) -> Self {
        match f {
            Fuse::Deepest => FuseRule::Deepest,
            Fuse::Deepest40 => FuseRule::Deepest40,
        }
    }
}

#[derive(Args, Debug)]
struct SplitArgs {
    /// Input CSV (headerless, one observation per row)
    #[arg(long)]
    input: PathBuf,
    /// Number of subsamples
    #[arg(long)]
    m: usize,
    /// Shuffle rows with this seed before splitting (default: contiguous blocks)
    #[arg(long)]
    seed: Option<u64>,
}

#[derive(Args, Debug)]
struct MestArgs {
    /// Biweight tuning constant
    #[arg(long, default_value_t = 4.685)]
    tuning_c: f64,
    /// Iteration cap of the M-estimator
    #[arg(long, default_value_t = 200)]
    max_iter: usize,
    /// Convergence tolerance of the M-estimator
    #[arg(long, default_value_t = 1e-7)]
    tol: f64,
}

impl MestArgs {
    fn config(&self) -> MEstimatorConfig {
        MEstimatorConfig {
            tuning_c: self.tuning_c,
            max_iter: self.max_iter,
            tol: self.tol,
        }
    }
}

#[derive(Args, Debug)]
struct KmeansArgs {
    /// Random starts of trimmed k-means
    #[arg(long, default_value_t = 20)]
    starts: usize,
    /// Concentration steps per start
    #[arg(long, default_value_t = 100)]
    kmeans_iter: usize,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Fused robust location estimate of a CSV dataset
    EstimateLocation {
        #[command(flatten)]
        split: SplitArgs,
        #[arg(long, value_enum, default_value_t = Fuse::Deepest)]
        fuse: Fuse,
        #[command(flatten)]
        mest: MestArgs,
    },
    /// Fused robust scatter estimate of a CSV dataset
    EstimateScatter {
        #[command(flatten)]
        split: SplitArgs,
        #[arg(long, value_enum, default_value_t = Fuse::Deepest)]
        fuse: Fuse,
        #[command(flatten)]
        mest: MestArgs,
    },
    /// Fused trimmed covariance kernel of functional data (first row: grid)
    EstimateCovop {
        #[command(flatten)]
        split: SplitArgs,
        #[arg(long, value_enum, default_value_t = Fuse::Deepest)]
        fuse: Fuse,
        /// Trimming level
        #[arg(long, default_value_t = 0.25)]
        alpha: f64,
        /// Do not subtract the pointwise median first
        #[arg(long)]
        no_center: bool,
    },
    /// Two-stage trimmed k-means; prints one label per row (0 = trimmed)
    Cluster {
        #[command(flatten)]
        split: SplitArgs,
        /// Number of clusters
        #[arg(long, default_value_t = 3)]
        k: usize,
        /// Trimming level on each subsample and in the final labelling
        #[arg(long, default_value_t = 0.2)]
        alpha1: f64,
        /// Trimming level on the pooled centers
        #[arg(long, default_value_t = 0.1)]
        alpha2: f64,
        /// Seed of the k-means starts
        #[arg(long, default_value_t = 1)]
        kmeans_seed: u64,
        #[command(flatten)]
        kmeans: KmeansArgs,
    },
    /// Location errors on contaminated Gaussian data
    SimulateLocation(MultivariateArgs),
    /// Scatter errors on contaminated Gaussian data
    SimulateScatter(MultivariateArgs),
    /// Covariance-kernel errors on the functional model
    SimulateCovop {
        /// Sample size
        #[arg(long, default_value_t = 50_000)]
        n: usize,
        /// Number of subsamples
        #[arg(long, default_value_t = 20)]
        m: usize,
        /// Contamination probability
        #[arg(long, default_value_t = 0.2)]
        p: f64,
        /// Trimming level
        #[arg(long, default_value_t = 0.25)]
        alpha: f64,
        /// Grid points
        #[arg(long, default_value_t = 20)]
        grid: usize,
        /// Monte Carlo replicates
        #[arg(long, default_value_t = 5)]
        reps: usize,
        /// Base seed
        #[arg(long, default_value_t = 1)]
        seed: u64,
        /// Also run the trimmed estimator on the whole sample (quadratic in n)
        #[arg(long)]
        rob: bool,
    },
    /// Matching errors of whole-sample and fused trimmed k-means
    SimulateCluster {
        /// Size multiplier of the base design (n = 115·fac)
        #[arg(long, default_value_t = 10)]
        fac: usize,
        /// Number of subsamples
        #[arg(long, default_value_t = 10)]
        m: usize,
        /// Number of clusters
        #[arg(long, default_value_t = 3)]
        k: usize,
        /// Trimming level on each subsample and in the final labelling
        #[arg(long, default_value_t = 0.35)]
        alpha1: f64,
        /// Trimming level on the pooled centers
        #[arg(long, default_value_t = 0.1)]
        alpha2: f64,
        /// Monte Carlo replicates
        #[arg(long, default_value_t = 5)]
        reps: usize,
        /// Base seed
        #[arg(long, default_value_t = 1)]
        seed: u64,
        #[command(flatten)]
        kmeans: KmeansArgs,
    },
    /// Breakdown frequency of depth fusion under Bernoulli contamination
    Breakdown {
        /// Sample size
        #[arg(long, default_value_t = 30_000)]
        n: usize,
        /// Subsample counts (comma separated)
        #[arg(long, value_delimiter = ',', default_value = "5,10,30,50,100,150")]
        m_values: Vec<usize>,
        /// Contamination probabilities (comma separated)
        #[arg(long, value_delimiter = ',', default_value = "0.45,0.49,0.495,0.499")]
        p_values: Vec<f64>,
        /// Monte Carlo replicates
        #[arg(long, default_value_t = 5000)]
        reps: usize,
        /// Base seed
        #[arg(long, default_value_t = 1)]
        seed: u64,
    },
    /// Variance ratio of the full-sample median to the median of medians
    Efficiency {
        /// Subsample size is 2k + 1
        #[arg(long, default_value_t = 20)]
        k: usize,
        /// Number of subsamples
        #[arg(long, default_value_t = 200)]
        m: usize,
        /// Monte Carlo replicates
        #[arg(long, default_value_t = 2000)]
        reps: usize,
        /// Base seed
        #[arg(long, default_value_t = 1)]
        seed: u64,
    },
    /// Subsample size from the rate rule l = n^((b-1)/(a+b-1))
    PlanSplit {
        /// Sample size
        #[arg(long)]
        n: usize,
        #[arg(long)]
        a: f64,
        #[arg(long)]
        b: f64,
    },
}

#[derive(Args, Debug)]
struct MultivariateArgs {
    /// Sample size
    #[arg(long, default_value_t = 100_000)]
    n: usize,
    /// Number of subsamples
    #[arg(long, default_value_t = 100)]
    m: usize,
    /// Contamination probability
    #[arg(long, default_value_t = 0.2)]
    p: f64,
    /// Monte Carlo replicates
    #[arg(long, default_value_t = 5)]
    reps: usize,
    /// Base seed
    #[arg(long, default_value_t = 1)]
    seed: u64,
    /// Skip the whole-sample robust estimate
    #[arg(long)]
    no_rob: bool,
    #[command(flatten)]
    mest: MestArgs,
}

/// A failure, split by exit code.
enum Failure {
    Config(String),
    Runtime(String),
}

impl From<RfmError> for Failure {
    fn from(e: RfmError) -> Self {
        match e {
            RfmError::InvalidParameter { name, reason } => {
                Failure::Config(format!("--{}: {reason}", name.replace('_', "-")))
            }
            other => Failure::Runtime(other.to_string()),
        }
    }
}

fn check(ok: bool, flag: &str, reason: impl FnOnce() -> String) -> Result<(), Failure> {
    if ok {
        Ok(())
    } else {
        Err(Failure::Config(format!("--{flag}: {}", reason())))
    }
}

fn check_prob(v: f64, flag: &str, open_left: bool) -> Result<(), Failure> {
    let ok = if open_left { v > 0.0 && v < 1.0 } else { (0.0..1.0).contains(&v) };
    check(ok, flag, || format!("{v} out of range"))
}

fn plan_for(split: &SplitArgs, n: usize) -> Result<SplitPlan, Failure> {
    check(split.m >= 1 && split.m <= n, "m", || {
        format!("{} subsamples for {n} observations", split.m)
    })?;
    let assignment = match split.seed {
        Some(s) => Assignment::Shuffled(s),
        None => Assignment::Contiguous,
    };
    Ok(SplitPlan::even(n, split.m, assignment)?)
}

fn open(path: &PathBuf) -> Result<BufReader<File>, Failure> {
    File::open(path)
        .map(BufReader::new)
        .map_err(|e| Failure::Runtime(format!("{}: {e}", path.display())))
}

fn check_mest(m: &MestArgs) -> Result<(), Failure> {
    check(m.tuning_c > 0.0, "tuning-c", || "must be positive".into())?;
    check(m.max_iter >= 1, "max-iter", || "must be at least 1".into())?;
    check(m.tol > 0.0, "tol", || "must be positive".into())
}

fn check_kmeans(k: &KmeansArgs) -> Result<(), Failure> {
    check(k.starts >= 1, "starts", || "must be at least 1".into())?;
    check(k.kmeans_iter >= 1, "kmeans-iter", || "must be at least 1".into())
}

fn method_columns(e: &MethodErrors, names: &[&str], timings: bool) -> (Vec<String>, Vec<Option<f64>>) {
    let mut cols = Vec::new();
    let mut vals = Vec::new();
    if timings {
        cols.extend(["T0".to_string(), "T1".to_string()]);
        vals.extend([e.t0, e.t1]);
    }
    for &name in names {
        cols.push(name.to_string());
        vals.push(match name {
            "MLE" => e.mle,
            "ROB" => e.rob,
            "avROB" => e.avrob,
            "RFM1" => e.rfm1,
            _ => e.rfm,
        });
    }
    (cols, vals)
}

fn estimate_report(
    command: &'static str,
    split: &SplitArgs,
    plan: &SplitPlan,
    fuse: Fuse,
    r: &rfm_core::fusion::FusionResult,
    mut config: Vec<(String, String)>,
    timings: bool,
) -> Report {
    config.splice(
        0..0,
        [
            ("input".to_string(), split.input.display().to_string()),
            ("m".into(), plan.m.to_string()),
            ("l".into(), plan.l.to_string()),
            ("seed".into(), split.seed.map_or("none".into(), |s| s.to_string())),
            ("fuse".into(), format!("{fuse:?}").to_lowercase()),
            ("discarded".into(), r.discarded.to_string()),
        ],
    );
    let (width, values) = match &r.estimate {
        Candidate::Vector(v) => (v.dim(), v.coords().to_vec()),
        Candidate::Matrix(s) => (s.dim(), s.entries().to_vec()),
        Candidate::Kernel(k) => (k.grid().len(), k.values().to_vec()),
    };
    let timing = timings.then(|| r.timing.clone());
    Report {
        command,
        config,
        body: Body::Estimate {
            width,
            values,
            depths: r.depths.clone(),
            chosen: r.chosen.clone(),
            grid: r.estimate.as_kernel().map(|k| k.grid().points().to_vec()),
            timing,
        },
    }
}

fn run(cli: &Cli) -> Result<Report, Failure> {
    let timings = cli.timings;
    match &cli.command {
        Command::EstimateLocation { split, fuse, mest } | Command::EstimateScatter { split, fuse, mest } => {
            check_mest(mest)?;
            let x = read_dataset(open(&split.input)?)?;
            let plan = plan_for(split, x.n())?;
            let (name, r) = if matches!(cli.command, Command::EstimateLocation { .. }) {
                ("estimate-location", rfm_estimate(&x, &plan, &MLocation(mest.config()), (*fuse).into())?)
            } else {
                ("estimate-scatter", rfm_estimate(&x, &plan, &MScatter(mest.config()), (*fuse).into())?)
            };
            let config = vec![
                ("tuning_c".into(), mest.tuning_c.to_string()),
                ("max_iter".into(), mest.max_iter.to_string()),
                ("tol".into(), mest.tol.to_string()),
            ];
            Ok(estimate_report(name, split, &plan, *fuse, &r, config, timings))
        }
        Command::EstimateCovop { split, fuse, alpha, no_center } => {
            check_prob(*alpha, "alpha", true)?;
            let x = read_func_data(open(&split.input)?)?;
            let plan = plan_for(split, x.n())?;
            let cfg = TrimmedCovConfig {
                alpha: *alpha,
                centering: if *no_center { Centering::None } else { Centering::PointwiseMedian },
            };
            let r = rfm_estimate(&x, &plan, &TrimmedCov(cfg), (*fuse).into())?;
            let config = vec![
                ("alpha".into(), alpha.to_string()),
                ("center".into(), (!no_center).to_string()),
            ];
            Ok(estimate_report("estimate-covop", split, &plan, *fuse, &r, config, timings))
        }
        Command::Cluster { split, k, alpha1, alpha2, kmeans_seed, kmeans } => {
            check(*k >= 1, "k", || "must be at least 1".into())?;
            check_prob(*alpha1, "alpha1", false)?;
            check_prob(*alpha2, "alpha2", false)?;
            check_kmeans(kmeans)?;
            let x = read_dataset(open(&split.input)?)?;
            let plan = plan_for(split, x.n())?;
            let cfg = ITkMConfig {
                n_starts: kmeans.starts,
                max_iter: kmeans.kmeans_iter,
                seed: *kmeans_seed,
            };
            let r = rfm_cluster(&x, &plan, *k, *alpha1, *alpha2, &cfg)?;
            let config = vec![
                ("input".to_string(), split.input.display().to_string()),
                ("m".into(), plan.m.to_string()),
                ("l".into(), plan.l.to_string()),
                ("seed".into(), split.seed.map_or("none".into(), |s| s.to_string())),
                ("k".into(), k.to_string()),
                ("alpha1".into(), alpha1.to_string()),
                ("alpha2".into(), alpha2.to_string()),
                ("kmeans_seed".into(), kmeans_seed.to_string()),
                ("starts".into(), kmeans.starts.to_string()),
                ("kmeans_iter".into(), kmeans.kmeans_iter.to_string()),
                ("discarded".into(), r.discarded.to_string()),
                ("radius".into(), r.result.radius.to_string()),
                ("objective".into(), r.result.objective.to_string()),
            ];
            Ok(Report {
                command: "cluster",
                config,
                body: Body::Labels {
                    labels: r.result.labels.clone(),
                    centers: r.result.centers.values().to_vec(),
                    dim: x.d(),
                    timing: timings.then(|| r.timing.clone()),
                },
            })
        }
        Command::SimulateLocation(a) | Command::SimulateScatter(a) => {
            check_mest(&a.mest)?;
            check(a.reps >= 1, "reps", || "must be at least 1".into())?;
            check(a.m >= 1 && a.m <= a.n, "m", || format!("{} subsamples for {} observations", a.m, a.n))?;
            check((0.0..=1.0).contains(&a.p), "p", || format!("{} out of range", a.p))?;
            let study = MultivariateStudy {
                with_rob: !a.no_rob,
                mest: a.mest.config(),
                ..MultivariateStudy::new(a.n, a.m, a.p, a.reps, a.seed)
            };
            let location = matches!(cli.command, Command::SimulateLocation(_));
            let (command, errs) = if location {
                ("simulate-location", location_study(&study)?)
            } else {
                ("simulate-scatter", scatter_study(&study)?)
            };
            let (cols, vals) = method_columns(&errs, &["MLE", "ROB", "avROB", "RFM1", "RFM"], timings);
            Ok(Report::table(
                command,
                vec![
                    ("n".into(), a.n.to_string()),
                    ("m".into(), a.m.to_string()),
                    ("p".into(), a.p.to_string()),
                    ("reps".into(), a.reps.to_string()),
                    ("seed".into(), a.seed.to_string()),
                    ("error".into(), if location { "squared euclidean" } else { "squared max abs row sum" }.into()),
                ],
                size_columns(a.n, a.m),
                cols,
                vals,
            ))
        }
        Command::SimulateCovop { n, m, p, alpha, grid, reps, seed, rob } => {
            check(*reps >= 1, "reps", || "must be at least 1".into())?;
            check(*m >= 1 && m <= n, "m", || format!("{m} subsamples for {n} observations"))?;
            check(*grid >= 2, "grid", || "needs at least 2 points".into())?;
            check((0.0..=1.0).contains(p), "p", || format!("{p} out of range"))?;
            check_prob(*alpha, "alpha", true)?;
            let study = CovopStudy {
                n_grid: *grid,
                with_rob: *rob,
                ..CovopStudy::new(*n, *m, *p, *alpha, *reps, *seed)
            };
            let e = covop_study(&study)?;
            let (mut cols, mut vals) = method_columns(&e.hs, &["MLE", "ROB", "avROB", "RFM"], timings);
            let (gcols, gvals) = method_columns(&e.grid, &["MLE", "ROB", "avROB", "RFM"], false);
            cols.extend(gcols.into_iter().map(|c| format!("{c}_grid")));
            vals.extend(gvals);
            Ok(Report::table(
                "simulate-covop",
                vec![
                    ("n".into(), n.to_string()),
                    ("m".into(), m.to_string()),
                    ("p".into(), p.to_string()),
                    ("alpha".into(), alpha.to_string()),
                    ("grid".into(), grid.to_string()),
                    ("reps".into(), reps.to_string()),
                    ("seed".into(), seed.to_string()),
                    ("error".into(), "squared hilbert-schmidt; *_grid: squared unweighted grid frobenius".into()),
                ],
                size_columns(*n, *m),
                cols,
                vals,
            ))
        }
        Command::SimulateCluster { fac, m, k, alpha1, alpha2, reps, seed, kmeans } => {
            check(*fac >= 1, "fac", || "must be at least 1".into())?;
            check(*reps >= 1, "reps", || "must be at least 1".into())?;
            check(*m >= 1 && *m <= 115 * fac, "m", || format!("{m} subsamples for {} observations", 115 * fac))?;
            check(*k >= 1, "k", || "must be at least 1".into())?;
            check_prob(*alpha1, "alpha1", false)?;
            check_prob(*alpha2, "alpha2", false)?;
            check_kmeans(kmeans)?;
            let study = ClusterStudy {
                k: *k,
                itkm: ITkMConfig {
                    n_starts: kmeans.starts,
                    max_iter: kmeans.kmeans_iter,
                    seed: 0,
                },
                ..ClusterStudy::new(*fac, *m, *alpha1, *alpha2, *reps, *seed)
            };
            let e = cluster_study(&study)?;
            let mut cols = vec![];
            let mut vals = vec![];
            if timings {
                cols.extend(["T0".to_string(), "T1".to_string()]);
                vals.extend([Some(e.t0), Some(e.t1)]);
            }
            cols.extend(["ME1".to_string(), "ME2".to_string()]);
            vals.extend([Some(e.me1), Some(e.me2)]);
            let n = 115 * fac;
            Ok(Report::table(
                "simulate-cluster",
                vec![
                    ("fac".into(), fac.to_string()),
                    ("n".into(), n.to_string()),
                    ("m".into(), m.to_string()),
                    ("k".into(), k.to_string()),
                    ("alpha1".into(), alpha1.to_string()),
                    ("alpha2".into(), alpha2.to_string()),
                    ("reps".into(), reps.to_string()),
                    ("seed".into(), seed.to_string()),
                ],
                vec![("n".into(), n as f64), ("m".into(), *m as f64), ("alpha1".into(), *alpha1)],
                cols,
                vals,
            ))
        }
        Command::Breakdown { n, m_values, p_values, reps, seed } => {
            check(!m_values.is_empty(), "m-values", || "empty list".into())?;
            check(!p_values.is_empty(), "p-values", || "empty list".into())?;
            for &m in m_values {
                check(m >= 1 && m <= *n, "m-values", || format!("{m} subsamples for {n} observations"))?;
            }
            for &p in p_values {
                check((0.0..=1.0).contains(&p), "p-values", || format!("{p} out of range"))?;
            }
            check(*reps >= 1, "reps", || "must be at least 1".into())?;
            let t = breakdown_mc(*n, m_values, p_values, *reps, *seed)?;
            Ok(Report {
                command: "breakdown",
                config: vec![
                    ("n".into(), n.to_string()),
                    ("reps".into(), reps.to_string()),
                    ("seed".into(), seed.to_string()),
                    ("discarded".into(), format!("{:?}", t.discarded)),
                ],
                body: Body::Breakdown(t),
            })
        }
        Command::Efficiency { k, m, reps, seed } => {
            check(*reps >= 100, "reps", || format!("{reps} is below 100"))?;
            check(*m >= 1, "m", || "must be at least 1".into())?;
            let e = efficiency_study(*k, *m, *reps, *seed)?;
            Ok(Report::table(
                "efficiency",
                vec![
                    ("k".into(), k.to_string()),
                    ("m".into(), m.to_string()),
                    ("reps".into(), reps.to_string()),
                    ("seed".into(), seed.to_string()),
                ],
                vec![("k".into(), *k as f64), ("m".into(), *m as f64)],
                ["ratio", "var_full", "var_fused", "var_fused_plugin", "limit_2_over_pi"]
                    .map(String::from)
                    .to_vec(),
                vec![
                    Some(e.ratio),
                    Some(e.var_full),
                    Some(e.var_fused),
                    Some(e.var_fused_plugin),
                    Some(2.0 / std::f64::consts::PI),
                ],
            ))
        }
        Command::PlanSplit { n, a, b } => {
            check(*n >= 1, "n", || "must be at least 1".into())?;
            check(*a > 0.0, "a", || format!("{a} must be positive"))?;
            check(*b > 1.0, "b", || format!("{b} must exceed 1"))?;
            let plan = plan_split(*n, *a, *b)?;
            Ok(Report::table(
                "plan-split",
                vec![
                    ("n".into(), n.to_string()),
                    ("a".into(), a.to_string()),
                    ("b".into(), b.to_string()),
                ],
                vec![("n".into(), *n as f64)],
                vec!["l".into(), "m".into(), "discarded".into()],
                vec![
                    Some(plan.l as f64),
                    Some(plan.m as f64),
                    Some((n - plan.m * plan.l) as f64),
                ],
            ))
        }
    }
}

/// Leading `n` (in millions) and `m` columns of the simulation tables.
fn size_columns(n: usize, m: usize) -> Vec<(String, f64)> {
    vec![("n_millions".into(), n as f64 / 1e6), ("m".into(), m as f64)]
}

/// What a run produced: exit code and the bytes for stdout and stderr.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Outcome {
    pub code: u8,
    pub stdout: Vec<u8>,
    pub stderr: String,
}

impl Outcome {
    fn fail(code: u8, msg: String) -> Outcome {
        Outcome {
            code,
            stdout: Vec::new(),
            stderr: format!("error: {msg}\n"),
        }
    }
}

/// Parses `args` (program name first) and runs the command. Output meant
/// for `--output` is written there; otherwise it is returned in `stdout`.
pub fn execute<I, T>(args: I) -> Outcome
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let text = e.render().to_string();
            let code = e.exit_code() as u8;
            return if e.use_stderr() {
                Outcome { code, stdout: Vec::new(), stderr: text }
            } else {
                Outcome { code, stdout: text.into_bytes(), stderr: String::new() }
            };
        }
    };
    if cli.threads == Some(0) {
        return Outcome::fail(2, "--threads: must be at least 1".into());
    }
    let pool = match rayon::ThreadPoolBuilder::new()
        .num_threads(cli.threads.unwrap_or(0))
        .build()
    {
        Ok(p) => p,
        Err(e) => return Outcome::fail(1, e.to_string()),
    };
    let report = match pool.install(|| run(&cli)) {
        Ok(r) => r,
        Err(Failure::Config(msg)) => return Outcome::fail(2, msg),
        Err(Failure::Runtime(msg)) => return Outcome::fail(1, msg),
    };
    let text = report.render(cli.format);
    match &cli.output {
        Some(path) => match std::fs::write(path, text) {
            Ok(()) => Outcome { code: 0, stdout: Vec::new(), stderr: String::new() },
            Err(e) => Outcome::fail(1, format!("{}: {e}", path.display())),
        },
        None => Outcome { code: 0, stdout: text.into_bytes(), stderr: String::new() },
    }
}
