//! Native classifier implementations: multinomial logistic regression trained
//! by full-batch gradient descent, and a random forest of CART trees with
//! Gini splitting. Both are deterministic given (data, params, seed).

mod forest;
mod logistic;

pub use forest::{fit_random_forest, ForestModel, MaxFeatures, RandomForestParams};
pub use logistic::{
    fit_logistic, loss_and_gradient, regularized_loss, LogisticRegressionParams, SoftmaxModel,
    TrainingStats,
};

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum ModelError {
    #[error("need at least 2 samples, got {0}")]
    TooFewSamples(usize),
    #[error("single-class labels: every sample is class {0}")]
    SingleClass(usize),
    #[error("non-finite value in feature matrix at row {row}, column {col}")]
    NonFinite { row: usize, col: usize },
    #[error("dimension mismatch: model expects {expected} features, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("invalid parameter: {0}")]
    InvalidParam(String),
    #[error("class counts are all zero")]
    EmptyCounts,
}

/// A fitted classifier ready for prediction. Immutable and shareable.
#[derive(Debug, Clone, PartialEq)]
pub enum TrainedModel {
    Softmax(SoftmaxModel),
    Forest(ForestModel),
}

impl TrainedModel {
    pub fn n_features(&self) -> usize {
        match self {
            TrainedModel::Softmax(m) => m.n_features(),
            TrainedModel::Forest(m) => m.n_features(),
        }
    }

    pub fn n_classes(&self) -> usize {
        match self {
            TrainedModel::Softmax(m) => m.n_classes(),
            TrainedModel::Forest(m) => m.n_classes(),
        }
    }

    /// Per-row class probabilities; rows sum to 1 within 1e-9.
    pub fn predict_proba(&self, x: &[Vec<f64>]) -> Result<Vec<Vec<f64>>, ModelError> {
        for row in x {
            if row.len() != self.n_features() {
                return Err(ModelError::DimensionMismatch {
                    expected: self.n_features(),
                    got: row.len(),
                });
            }
        }
        Ok(match self {
            TrainedModel::Softmax(m) => m.predict_proba(x),
            TrainedModel::Forest(m) => m.predict_proba(x),
        })
    }

    /// Argmax of [`predict_proba`](Self::predict_proba), ties broken by the
    /// lowest class id.
    pub fn predict(&self, x: &[Vec<f64>]) -> Result<Vec<usize>, ModelError> {
        let proba = self.predict_proba(x)?;
        Ok(proba.iter().map(|row| argmax_lowest(row)).collect())
    }
}

pub(crate) fn argmax_lowest(row: &[f64]) -> usize {
    let mut best = 0;
    for (i, &v) in row.iter().enumerate().skip(1) {
        if v > row[best] {
            best = i;
        }
    }
    best
}

/// Gini impurity of a class-count vector: `1 - sum((count_i / total)^2)`.
pub fn gini(class_counts: &[usize]) -> Result<f64, ModelError> {
    let total: usize = class_counts.iter().sum();
    if total == 0 {
        return Err(ModelError::EmptyCounts);
    }
    let total = total as f64;
    let sum_sq: f64 = class_counts
        .iter()
        .map(|&c| {
            let p = c as f64 / total;
            p * p
        })
        .sum();
    Ok(1.0 - sum_sq)
}

pub(crate) fn check_training_input(
    x: &[Vec<f64>],
    y: &[usize],
    n_classes: usize,
) -> Result<(), ModelError> {
    if x.len() < 2 {
        return Err(ModelError::TooFewSamples(x.len()));
    }
    if y.len() != x.len() {
        return Err(ModelError::DimensionMismatch {
            expected: x.len(),
            got: y.len(),
        });
    }
    for (i, row) in x.iter().enumerate() {
        for (j, v) in row.iter().enumerate() {
            if !v.is_finite() {
                return Err(ModelError::NonFinite { row: i, col: j });
            }
        }
    }
    let mut seen = vec![false; n_classes];
    for &label in y {
        if label >= n_classes {
            return Err(ModelError::DimensionMismatch {
                expected: n_classes,
                got: label,
            });
        }
        seen[label] = true;
    }
    if seen.iter().filter(|&&s| s).count() < 2 {
        return Err(ModelError::SingleClass(y[0]));
    }
    Ok(())
}
