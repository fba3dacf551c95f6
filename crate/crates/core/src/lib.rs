//! Zero-shot classification core: bilinear compatibility baselines (ESZSL and
//! SJE), bagging over random subsets of training classes, and the metrics and
//! paired test used to compare methods across random class partitions.
//!
//! The crate is `no_std` and only needs `alloc`. File formats, the CLI and the
//! parallel runner live in the `zscbench` crate.
#![cfg_attr(not(any(feature = "std", test)), no_std)]
#![deny(missing_docs)]

extern crate alloc;

pub mod dataset;
pub mod ensemble;
pub mod error;
pub mod evaluation;
pub mod linalg;
pub mod models;
pub mod splits;
pub mod synth;

pub use dataset::{class_sample_counts, l2_normalize, restrict_to_classes, ClassId, ClassSet, Dataset, DatasetView};
pub use ensemble::{predict_hard, predict_soft, train_bagged, Ensemble, Member, Voting};
pub use error::{Error, Result};
pub use evaluation::{
    mean_std, per_class_accuracy, top1_accuracy, wilcoxon_signed_rank, EvalRecord, TestMethod, TestResult,
};
pub use linalg::Matrix;
pub use models::{
    predict, score_matrix, train_eszsl, train_sje, CompatibilityModel, EszslParams, SjeParams, Trainer,
};
pub use splits::{sample_partition, sample_partitions, sample_subset_classes, ClassPartition, SeedSpec};
pub use synth::{generate, SynthSpec};
