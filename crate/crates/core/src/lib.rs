//! Contrastive preference embedding for content-based music recommendation.
//!
//! Song feature vectors are embedded by a shared-weight (Siamese) MLP trained
//! with a margin contrastive loss. Which song pairs are pulled together is set
//! by a [`Strategy`]:
//!
//! - `PN`: like-like and dislike-dislike pairs attract, mixed pairs repel
//! - `P`: only like-like pairs attract
//! - `N`: only dislike-dislike pairs attract
//!
//! A small sigmoid MLP head is then trained on the frozen embeddings to
//! predict like-probabilities. The crate also carries the evaluation harness:
//! confusion-derived metrics, AUROC, Friedman and Wilcoxon signed-rank tests,
//! a synthetic user generator with controllable taste geometry, and a 2-D PCA
//! projection for inspecting embedding spaces.
//!
//! ```text
//! features.tsv + prefs.tsv -> split -> train_clep -> train_predictor -> metrics -> stats
//! ```

pub mod checkpoint;
pub mod clep;
pub mod cli;
pub mod data;
mod error;
pub mod metrics;
pub mod numerics;
pub mod predictor;
pub mod projection;
pub mod stats;
pub mod synth;
pub(crate) mod tsv;

pub use clep::{ClepConfig, ClepModel, GeometryReport};
pub use data::{FeatureTable, LabeledPair, Preference, PreferenceSet, SplitSpec, Strategy};
pub use error::{Error, Result};
pub use metrics::{ConfusionCounts, MetricReport};
pub use predictor::{PredictorConfig, PredictorModel};
pub use stats::{FriedmanResult, WilcoxonResult};
pub use synth::{SynthConfig, SynthUser};
