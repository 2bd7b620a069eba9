//! Analytic imbalance rectifier (AIR): exemplar-free continual learning with
//! closed-form, class-re-weighted ridge classifiers over imbalanced streams.
//!
//! The crate covers the full experimental loop at desk scale:
//!
//! - [`features`]: a frozen random buffer layer, a synthetic class-conditional
//!   generator standing in for a backbone network, and the binary `AIRF`
//!   feature-file format for precomputed features.
//! - [`scenarios`]: long-tailed class-incremental and Si-blurry generalized
//!   stream builders.
//! - [`classifier`]: online statistic accumulation, the re-weighted
//!   closed-form fit, the memory-folded CIL trainer, the per-class GCIL
//!   trainer, the unweighted baseline and a joint batch oracle.
//! - [`metrics`]: phase accuracies, streaming AUC, confusion matrices,
//!   per-class weight norms and per-class MSE.
//! - [`run`]: end-to-end experiment orchestration behind the `air` binary.
//!
//! The `examples/` directory contains one runnable example per capability;
//! start with `cargo run --example imbalance_rectification`.

pub mod classifier;
pub mod config;
pub mod error;
pub mod features;
pub mod linalg;
pub mod metrics;
pub mod run;
pub mod scenarios;

mod seeding;

pub use classifier::{fit_joint_oracle, ClassifierState, Mode, Weights};
pub use error::{AirError, Result};
pub use features::{BufferLayer, FeatureSet, LabeledFeature, SyntheticSpec};
pub use metrics::EvalReport;
pub use scenarios::{LtConfig, PhaseOrder, PhaseStream, SiBlurryConfig};
