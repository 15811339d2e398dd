//! Robust estimators, spatial depth, and depth-based fusion of subsample
//! estimates.

pub mod covop;
pub mod data;
pub mod depth;
pub mod error;
pub mod fusion;
pub mod io;
pub mod metrics;
pub mod numerics;
pub mod robust;
pub mod rng;
pub mod sim;
pub mod tkm;

pub use data::{Dataset, FuncData, RowSet};
pub use error::{Result, RfmError};
pub use numerics::{CovKernel, FuncObs, Grid, SymMatrix, VectorObs};
