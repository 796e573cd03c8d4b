//! Total Sobol' indices with robustness post-processing.
//!
//! The pipeline draws pick-freeze samples from a product density, estimates
//! the total indices, partitions the input space with a regression tree, and
//! then asks how far the indices can move when the input density is
//! perturbed within each partition box. Perturbed indices are recomputed by
//! reweighting the existing model evaluations, so the robustness analysis
//! costs no extra model calls.

pub mod config;
pub mod densities;
pub mod error;
pub mod frechet;
pub mod matrix;
pub mod models;
pub mod numerics;
pub mod partition;
pub mod pipeline;
pub mod report;
pub mod reweight;
pub mod rng;
pub mod sobol;
pub mod svg;

pub use config::{ModelName, RunConfig};
pub use densities::{HyperRect, Interval, Marginal, MarginalFamily, ProductDensity};
pub use error::{Error, Result};
pub use frechet::{
    derivative_table, normalized_derivative_table, optimal_direction, DerivativeTable,
    PerturbationBasis, PerturbationDirection, Target,
};
pub use matrix::Matrix;
pub use models::{GFunction, Linear3, Lorenz, Model};
pub use partition::{fit_tree, refine_by_quantiles, Partition, SplitRule};
pub use reweight::{
    analyze, delta_scan, perturbed_total_indices, select_extremes, AnalysisOptions, Nominal,
    PerturbationCandidate, PerturbedDensitySpec, RobustnessReport,
};
pub use sobol::{build_sample_set, total_indices, IndexVector, SampleSet, Subsamples};
