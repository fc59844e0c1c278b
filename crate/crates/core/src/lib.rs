//! Causal-effect estimation from summarized genetic association data.
//!
//! Per-variant ratio estimates with delta-method variances are pooled by
//! inverse-variance weighted meta-analysis under fixed-effect, additive
//! random-effects, and multiplicative random-effects models, with a choice of
//! first-order or second-order weights. A Monte Carlo engine generates
//! individual-level data under a linear instrumental-variable model to study
//! the bias and coverage of the six weight/model combinations.

pub mod error;
pub mod meta;
pub mod ratio;
pub mod regression;
pub mod simulate;
pub mod summary;

pub use error::{Error, Result};
pub use meta::{analyze, IvwResult, PoolingModel};
pub use ratio::{RatioEstimate, WeightRule};
pub use summary::{bundled_menopause_dataset, load_dataset, SummaryDataset, VariantAssociation};
