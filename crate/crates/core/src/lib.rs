//! Mixed-type tabular missing-value imputation.
//!
//! The centerpiece is a feature-specific adversarial imputer (IFGAN): one
//! small generator network per column learns to predict that column from all
//! others, while a per-column discriminator learns to spot imputed entries
//! and pushes the generator toward values that blend in with the observed
//! data. Around it sit the classic baselines (mean, KNN, iterative SVD,
//! chained ridge regressions), MCAR/MAR/MNAR amputation simulators, and a
//! deterministic benchmark harness with RMSE and post-imputation AUROC
//! metrics.

pub mod baselines;
pub mod dataframe;
pub mod error;
pub mod eval;
pub mod harness;
pub mod imputer;
pub mod missingness;
pub mod neuralnet;
pub mod numerics;
pub mod synth;

pub use dataframe::{
    decode, encode, parse_csv, Cell, ColumnKind, ColumnSpec, EncodingMap, MaskMatrix, MixedDataset,
    Schema,
};
pub use error::{Error, Result};
pub use missingness::{AmputationConfig, AmputationResult, Mechanism};
pub use numerics::{Matrix, RngStream};
