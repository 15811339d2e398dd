//! Monte Carlo harness: data generators and the replicated studies.

pub mod efficiency;
pub mod generators;
pub mod studies;

pub use efficiency::{breakdown_mc, efficiency_study, median_density, BreakdownTable, EfficiencyModel};
pub use generators::{
    gen_contaminated_gaussian, gen_kraus, gen_three_clusters, ContaminatedGaussianSpec,
    KrausModelSpec, ThreeClusterSpec,
};
pub use studies::{
    cluster_study, covop_study, location_study, scatter_study, ClusterStudy, CovopStudy,
    MethodErrors, MultivariateStudy,
};
