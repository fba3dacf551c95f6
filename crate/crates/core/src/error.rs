//! Error type shared by every module of the crate.

use alloc::string::String;

/// Failures reported by the core routines.
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    /// Two inputs that must agree on a dimension do not.
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),
    /// A dataset invariant does not hold.
    #[error("invalid dataset: {0}")]
    InvalidDataset(String),
    /// A row whose Euclidean norm is too small to normalize.
    #[error("degenerate row {row} in {matrix} (norm {norm:e})")]
    DegenerateRow {
        /// `"features"` or `"attributes"`.
        matrix: &'static str,
        /// Zero-based row index.
        row: usize,
        /// The offending norm.
        norm: f64,
    },
    /// A class id outside `[0, num_classes)`.
    #[error("class id {id} out of range for {num_classes} classes")]
    ClassOutOfRange {
        /// The offending id.
        id: usize,
        /// Number of classes in the dataset.
        num_classes: usize,
    },
    /// An empty class set where at least one class is required.
    #[error("empty class set")]
    EmptyClassSet,
    /// A parameter outside its admissible range.
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    /// Training needs samples from at least two classes.
    #[error("training needs at least 2 classes with samples, found {0}")]
    TooFewClasses(usize),
    /// A matrix that should be symmetric positive definite is not.
    #[error("matrix is not positive definite (pivot {pivot} = {value:e})")]
    NotPositiveDefinite {
        /// Index of the failing pivot.
        pivot: usize,
        /// Value of the failing pivot.
        value: f64,
    },
    /// Training produced NaN or infinite weights.
    #[error("non-finite value in {0}")]
    NonFinite(&'static str),
    /// Metric inputs of different lengths or no input at all.
    #[error("invalid metric input: {0}")]
    InvalidInput(String),
    /// Every paired difference is zero, so the signed-rank test is undefined.
    #[error("all differences zero")]
    AllDifferencesZero,
    /// The synthetic generator could not separate class attributes.
    #[error("attribute separation {required} unachievable; best minimum distance was {best}")]
    SeparationUnachievable {
        /// Requested minimum pairwise distance.
        required: f64,
        /// Largest minimum pairwise distance seen over all attempts.
        best: f64,
    },
    /// An error raised while training ensemble member `member`.
    #[error("ensemble member {member}: {source}")]
    Member {
        /// Zero-based member index.
        member: usize,
        /// Underlying failure.
        source: alloc::boxed::Box<Error>,
    },
}

/// Shorthand for results carrying [`Error`].
pub type Result<T> = core::result::Result<T, Error>;
