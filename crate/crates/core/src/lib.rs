//! Robust location and scatter estimation with the Stahel-Donoho
//! outlyingness and its median-of-means variant.
//!
//! The crate is `no_std` and needs only `alloc`. File formats, the command
//! line, and the Monte Carlo harness live in the `sdmom` companion crate.
#![no_std]

extern crate alloc;
#[cfg(test)]
extern crate std;

pub mod contamination;
pub mod covariance;
pub mod data;
pub mod depth;
pub mod error;
pub mod estimators;
mod lp;
pub mod math;
pub mod seed;
pub mod theory;

pub use data::{
    bucket_means, empirical_h, median, median_with, partition_blocks, quantile_w, BlockPartition,
    BucketedMeans, Dataset, EmpiricalTail, MedianConvention, Oracle,
};
pub use depth::{
    generate_directions, mad_1d, momad, sdo_eval, DepthProfile, DirectionConfig, DirectionSet,
    Provenance,
};
pub use error::{Error, Result};
pub use theory::{estimate_phis, estimate_phis_model, solve_rstar, tail_h, PhiEstimate, RstarBudget, TailModel};
pub use covariance::{estimate_scatter, psd_project, scatter_error, ScatterEstimate};
pub use contamination::{apply_attack, apply_custom_attack, generate_clean, Attack, AttackKind, AttackSpec, DataModel, ModelKind};
pub use estimators::{
    baselines, lepski_select, mom_sde_weighted, sdo_median_gaussian_case, sdo_mom_median, EstimateReport,
    LepskiConfig, LepskiOutcome, SolverConfig,
};
