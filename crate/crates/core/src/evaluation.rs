//! The evaluation stage: preprocessing, cross-validated training, metric
//! computation, and failure capture. Failures never escape; they are folded
//! into the report status so the optimization loop keeps running.

use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::data::{stratified_folds, Dataset};
use crate::models::{
    fit_logistic, fit_random_forest, LogisticRegressionParams, MaxFeatures, RandomForestParams,
    TrainedModel,
};
use crate::space::{default_space, Configuration, ModelFamily};

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum EvalError {
    #[error("length mismatch: {true_len} true labels vs {pred_len} predictions")]
    LengthMismatch { true_len: usize, pred_len: usize },
    #[error("empty label vectors")]
    EmptyLabels,
    #[error("class id {id} out of range for {n_classes} classes")]
    ClassOutOfRange { id: usize, n_classes: usize },
}

/// Classification metrics on one prediction vector; macro averages are
/// unweighted means over all classes, with 0/0 cells defined as 0.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricSet {
    pub accuracy: f64,
    pub precision_macro: f64,
    pub recall_macro: f64,
    pub f1_macro: f64,
}

/// Outcome of evaluating one configuration.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum EvalStatus {
    Success,
    Failed { reason: String },
}

impl EvalStatus {
    pub fn is_success(&self) -> bool {
        matches!(self, EvalStatus::Success)
    }
}

/// Cross-validated result for one configuration. Failed reports carry no
/// fold metrics and zeroed means.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvaluationReport {
    pub config: Configuration,
    pub fold_metrics: Vec<MetricSet>,
    pub mean_accuracy: f64,
    pub mean_f1_macro: f64,
    pub wall_time_s: f64,
    pub status: EvalStatus,
}

impl EvaluationReport {
    pub fn failed(config: Configuration, reason: impl Into<String>, wall_time_s: f64) -> Self {
        EvaluationReport {
            config,
            fold_metrics: Vec::new(),
            mean_accuracy: 0.0,
            mean_f1_macro: 0.0,
            wall_time_s,
            status: EvalStatus::Failed {
                reason: reason.into(),
            },
        }
    }
}

/// Accuracy plus per-class precision/recall/F1 macro-averaged over all
/// `n_classes` classes (absent classes contribute zeros).
pub fn compute_metrics(
    y_true: &[usize],
    y_pred: &[usize],
    n_classes: usize,
) -> Result<MetricSet, EvalError> {
    if y_true.len() != y_pred.len() {
        return Err(EvalError::LengthMismatch {
            true_len: y_true.len(),
            pred_len: y_pred.len(),
        });
    }
    if y_true.is_empty() {
        return Err(EvalError::EmptyLabels);
    }
    for &id in y_true.iter().chain(y_pred) {
        if id >= n_classes {
            return Err(EvalError::ClassOutOfRange { id, n_classes });
        }
    }

    let mut tp = vec![0usize; n_classes];
    let mut fp = vec![0usize; n_classes];
    let mut fn_ = vec![0usize; n_classes];
    let mut correct = 0usize;
    for (&t, &p) in y_true.iter().zip(y_pred) {
        if t == p {
            correct += 1;
            tp[t] += 1;
        } else {
            fp[p] += 1;
            fn_[t] += 1;
        }
    }

    let mut precision_sum = 0.0;
    let mut recall_sum = 0.0;
    let mut f1_sum = 0.0;
    for c in 0..n_classes {
        let precision = ratio_or_zero(tp[c], tp[c] + fp[c]);
        let recall = ratio_or_zero(tp[c], tp[c] + fn_[c]);
        let f1 = if precision + recall == 0.0 {
            0.0
        } else {
            2.0 * precision * recall / (precision + recall)
        };
        precision_sum += precision;
        recall_sum += recall;
        f1_sum += f1;
    }
    let k = n_classes as f64;
    Ok(MetricSet {
        accuracy: correct as f64 / y_true.len() as f64,
        precision_macro: precision_sum / k,
        recall_macro: recall_sum / k,
        f1_macro: f1_sum / k,
    })
}

fn ratio_or_zero(num: usize, den: usize) -> f64 {
    if den == 0 {
        0.0
    } else {
        num as f64 / den as f64
    }
}

/// Feature standardization fitted on training rows only. Features with zero
/// spread map to 0.
#[derive(Debug, Clone, PartialEq)]
pub struct Standardizer {
    pub mean: Vec<f64>,
    pub std: Vec<f64>,
}

impl Standardizer {
    /// Population mean/std per feature over the given rows.
    pub fn fit(rows: &[Vec<f64>]) -> Standardizer {
        let n = rows.len() as f64;
        let d = rows[0].len();
        let mut mean = vec![0.0; d];
        for row in rows {
            for (m, &v) in mean.iter_mut().zip(row) {
                *m += v;
            }
        }
        for m in &mut mean {
            *m /= n;
        }
        let mut std = vec![0.0; d];
        for row in rows {
            for ((s, &v), &m) in std.iter_mut().zip(row).zip(&mean) {
                *s += (v - m) * (v - m);
            }
        }
        for s in &mut std {
            *s = (*s / n).sqrt();
        }
        Standardizer { mean, std }
    }

    pub fn transform(&self, rows: &[Vec<f64>]) -> Vec<Vec<f64>> {
        rows.iter()
            .map(|row| {
                row.iter()
                    .enumerate()
                    .map(|(j, &v)| {
                        if self.std[j] > 0.0 {
                            (v - self.mean[j]) / self.std[j]
                        } else {
                            0.0
                        }
                    })
                    .collect()
            })
            .collect()
    }
}

fn logistic_params(config: &Configuration) -> Result<LogisticRegressionParams, String> {
    let c = config.real("c").ok_or("missing or non-numeric `c`")?;
    let max_iter = config.int("max_iter").ok_or("missing `max_iter`")?;
    LogisticRegressionParams::new(c, max_iter as usize).map_err(|e| e.to_string())
}

fn forest_params(config: &Configuration) -> Result<RandomForestParams, String> {
    let n_estimators = config.int("n_estimators").ok_or("missing `n_estimators`")?;
    let max_depth = config.int("max_depth").ok_or("missing `max_depth`")?;
    let min_split = config
        .int("min_samples_split")
        .ok_or("missing `min_samples_split`")?;
    let max_features: MaxFeatures = config
        .text("max_features")
        .ok_or("missing `max_features`")?
        .parse()
        .map_err(|e: crate::models::ModelError| e.to_string())?;
    RandomForestParams::new(
        n_estimators as usize,
        max_depth as usize,
        min_split as usize,
        max_features,
    )
    .map_err(|e| e.to_string())
}

/// Cross-validate one configuration: for each fold, train on the other k-1
/// folds and score the held-out fold. Standardization (logistic regression
/// only) is fitted on training rows alone. Every failure is captured in the
/// returned status; this function never panics on invalid configurations.
pub fn evaluate(dataset: &Dataset, config: &Configuration, k: usize, seed: u64) -> EvaluationReport {
    let start = Instant::now();
    match evaluate_inner(dataset, config, k, seed) {
        Ok(fold_metrics) => {
            let kf = fold_metrics.len() as f64;
            let mean_accuracy = fold_metrics.iter().map(|m| m.accuracy).sum::<f64>() / kf;
            let mean_f1_macro = fold_metrics.iter().map(|m| m.f1_macro).sum::<f64>() / kf;
            EvaluationReport {
                config: config.clone(),
                fold_metrics,
                mean_accuracy,
                mean_f1_macro,
                wall_time_s: start.elapsed().as_secs_f64(),
                status: EvalStatus::Success,
            }
        }
        Err(reason) => {
            EvaluationReport::failed(config.clone(), reason, start.elapsed().as_secs_f64())
        }
    }
}

fn evaluate_inner(
    dataset: &Dataset,
    config: &Configuration,
    k: usize,
    seed: u64,
) -> Result<Vec<MetricSet>, String> {
    let space = default_space(config.family());
    let violations = space.validate(config);
    if !violations.is_empty() {
        return Err(format!("invalid configuration: {}", violations[0]));
    }

    let folds = stratified_folds(dataset, k, seed).map_err(|e| e.to_string())?;
    let n_classes = dataset.n_classes();
    let mut fold_metrics = Vec::with_capacity(k);
    for fold in 0..k {
        let run_fold = || -> Result<MetricSet, String> {
            let train_idx = folds.train_indices(fold);
            let test_idx = folds.test_indices(fold);
            let (train_x, train_y) = dataset.subset(&train_idx);
            let (test_x, test_y) = dataset.subset(&test_idx);
            let fold_seed = crate::seeding::derive(seed, fold as u64);

            let model = match config.family() {
                ModelFamily::LogisticRegression => {
                    let params = logistic_params(config)?;
                    let scaler = Standardizer::fit(&train_x);
                    let train_x = scaler.transform(&train_x);
                    let model = fit_logistic(&train_x, &train_y, n_classes, &params, fold_seed)
                        .map_err(|e| e.to_string())?;
                    let test_x = scaler.transform(&test_x);
                    return metrics_for(&TrainedModel::Softmax(model), &test_x, &test_y, n_classes);
                }
                ModelFamily::RandomForest => {
                    let params = forest_params(config)?;
                    let model = fit_random_forest(&train_x, &train_y, n_classes, &params, fold_seed)
                        .map_err(|e| e.to_string())?;
                    TrainedModel::Forest(model)
                }
            };
            metrics_for(&model, &test_x, &test_y, n_classes)
        };
        match run_fold() {
            Ok(m) => fold_metrics.push(m),
            Err(reason) => return Err(format!("fold {fold}: {reason}")),
        }
    }
    Ok(fold_metrics)
}

fn metrics_for(
    model: &TrainedModel,
    test_x: &[Vec<f64>],
    test_y: &[usize],
    n_classes: usize,
) -> Result<MetricSet, String> {
    let pred = model.predict(test_x).map_err(|e| e.to_string())?;
    compute_metrics(test_y, &pred, n_classes).map_err(|e| e.to_string())
}
