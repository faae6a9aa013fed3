//! Linear and polynomial least-squares speed models over (t, ΔA, ΔD),
//! their evaluation metrics, the seeded train/test split and
//! standardized-coefficient feature importance.

mod basis;
mod lstsq;
mod metrics;
mod model;
mod split;

use thiserror::Error;

pub use basis::{
    base_values, expand_polynomial, BaseFeature, MonomialDescriptor, PolynomialBasis, MAX_DEGREE,
};
pub use lstsq::{fit_columns, fit_least_squares, OlsFit, RANK_TOLERANCE};
pub use metrics::{adjusted_r_squared, r_squared, rmse, EvaluationReport, MetricBlock};
pub use model::{
    evaluate, feature_importance, load_model, predict, save_model, train_and_evaluate,
    RegressionModel, TrainingOutcome, IMPORTANCE_METRIC,
};
pub use split::{
    shuffled_indices, test_size, train_test_split, DEFAULT_SPLIT_SEED, DEFAULT_TEST_FRACTION,
};

#[derive(Debug, Error)]
pub enum RegressionError {
    #[error("polynomial degree must be 1, 2 or 3, got {0}")]
    InvalidDegree(u32),

    #[error("at least one base feature is required")]
    NoBaseFeatures,

    #[error("design matrix has numerical rank {rank} < {required}; dependent columns: {}", columns.join(", "))]
    RankDeficient {
        rank: usize,
        required: usize,
        columns: Vec<String>,
    },

    #[error("need at least {required} samples, got {n}")]
    TooFewSamples { n: usize, required: usize },

    #[error("length mismatch: {left} vs {right}")]
    LengthMismatch { left: usize, right: usize },

    #[error("non-finite value in row {row}")]
    NonFinite { row: usize },

    #[error("empty input")]
    Empty,

    #[error("actual values have zero variance")]
    ZeroVariance,

    #[error("adjusted R² needs n > p + 1 (n = {n}, p = {p})")]
    DegenerateDof { n: usize, p: usize },

    #[error("test fraction must lie in (0, 1), got {0}")]
    InvalidFraction(f64),

    #[error("sample {sample_id} has no ground-truth speed")]
    Unlabeled { sample_id: String },

    #[error("model schema mismatch: {0}")]
    SchemaMismatch(String),

    #[error("model file: {0}")]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}
