//! Multinomial (softmax) logistic regression trained by full-batch gradient
//! descent on the L2-regularized cross-entropy. Weights are zero-initialized,
//! so training is deterministic; the seed parameter exists only for interface
//! uniformity with the forest trainer.

use super::{check_training_input, ModelError};

#[derive(Debug, Clone, PartialEq)]
pub struct LogisticRegressionParams {
    /// Inverse L2 strength; the penalty weight is `1 / (c * n)`.
    pub c: f64,
    pub max_iter: usize,
    pub tol: f64,
    pub learning_rate: f64,
}

impl LogisticRegressionParams {
    pub fn new(c: f64, max_iter: usize) -> Result<Self, ModelError> {
        if !c.is_finite() || c <= 0.0 {
            return Err(ModelError::InvalidParam(format!("c must be > 0, got {c}")));
        }
        if max_iter < 1 {
            return Err(ModelError::InvalidParam("max_iter must be >= 1".into()));
        }
        Ok(LogisticRegressionParams {
            c,
            max_iter,
            tol: 1e-6,
            learning_rate: 0.1,
        })
    }
}

/// Diagnostics captured while fitting.
#[derive(Debug, Clone, PartialEq)]
pub struct TrainingStats {
    pub iterations: usize,
    pub step_halvings: usize,
    /// Objective value at the initial point and after every accepted step.
    pub losses: Vec<f64>,
}

/// Fitted softmax weights, one row per class, bias in the last column.
#[derive(Debug, Clone, PartialEq)]
pub struct SoftmaxModel {
    weights: Vec<Vec<f64>>,
    n_features: usize,
    pub stats: TrainingStats,
}

impl SoftmaxModel {
    #[cfg(test)]
    pub(crate) fn from_weights(weights: Vec<Vec<f64>>, n_features: usize) -> Self {
        SoftmaxModel {
            weights,
            n_features,
            stats: TrainingStats {
                iterations: 0,
                step_halvings: 0,
                losses: Vec::new(),
            },
        }
    }

    pub fn n_features(&self) -> usize {
        self.n_features
    }

    pub fn n_classes(&self) -> usize {
        self.weights.len()
    }

    pub fn weights(&self) -> &[Vec<f64>] {
        &self.weights
    }

    pub fn predict_proba(&self, x: &[Vec<f64>]) -> Vec<Vec<f64>> {
        x.iter().map(|row| softmax_row(&self.weights, row)).collect()
    }
}

fn softmax_row(weights: &[Vec<f64>], row: &[f64]) -> Vec<f64> {
    let d = row.len();
    let logits: Vec<f64> = weights
        .iter()
        .map(|w| {
            let mut z = w[d]; // bias
            for (j, &v) in row.iter().enumerate() {
                z += w[j] * v;
            }
            z
        })
        .collect();
    let max = logits.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let exps: Vec<f64> = logits.iter().map(|z| (z - max).exp()).collect();
    let sum: f64 = exps.iter().sum();
    exps.iter().map(|e| e / sum).collect()
}

/// Mean cross-entropy plus `l2_weight/2 * sum(w^2)` over non-bias weights.
pub fn regularized_loss(
    x: &[Vec<f64>],
    y: &[usize],
    weights: &[Vec<f64>],
    l2_weight: f64,
) -> f64 {
    let n = x.len() as f64;
    let d = x[0].len();
    let mut loss = 0.0;
    for (row, &label) in x.iter().zip(y) {
        let logits: Vec<f64> = weights
            .iter()
            .map(|w| {
                let mut z = w[d];
                for (j, &v) in row.iter().enumerate() {
                    z += w[j] * v;
                }
                z
            })
            .collect();
        let max = logits.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let log_sum: f64 = logits.iter().map(|z| (z - max).exp()).sum::<f64>().ln() + max;
        loss += log_sum - logits[label];
    }
    loss /= n;
    let mut penalty = 0.0;
    for w in weights {
        for &v in &w[..d] {
            penalty += v * v;
        }
    }
    loss + 0.5 * l2_weight * penalty
}

/// Loss and its analytic gradient with respect to every weight (bias included;
/// the penalty term touches only non-bias weights).
pub fn loss_and_gradient(
    x: &[Vec<f64>],
    y: &[usize],
    weights: &[Vec<f64>],
    l2_weight: f64,
) -> (f64, Vec<Vec<f64>>) {
    let n = x.len() as f64;
    let d = x[0].len();
    let n_classes = weights.len();
    let mut grad = vec![vec![0.0; d + 1]; n_classes];
    let mut loss = 0.0;
    for (row, &label) in x.iter().zip(y) {
        let probs = softmax_row(weights, row);
        let logits_loss = -probs[label].max(f64::MIN_POSITIVE).ln();
        loss += logits_loss;
        for (c, &p) in probs.iter().enumerate() {
            let err = p - if c == label { 1.0 } else { 0.0 };
            let g = &mut grad[c];
            for (j, &v) in row.iter().enumerate() {
                g[j] += err * v;
            }
            g[d] += err;
        }
    }
    loss /= n;
    let mut penalty = 0.0;
    for (c, w) in weights.iter().enumerate() {
        for j in 0..=d {
            grad[c][j] /= n;
            if j < d {
                grad[c][j] += l2_weight * w[j];
            }
        }
        for &v in &w[..d] {
            penalty += v * v;
        }
    }
    (loss + 0.5 * l2_weight * penalty, grad)
}

/// Full-batch gradient descent with a fixed step that halves whenever a step
/// would increase the objective, so the recorded loss path never increases.
/// Stops at `max_iter` or when the gradient infinity norm drops below `tol`.
pub fn fit_logistic(
    x: &[Vec<f64>],
    y: &[usize],
    n_classes: usize,
    params: &LogisticRegressionParams,
    _seed: u64,
) -> Result<SoftmaxModel, ModelError> {
    check_training_input(x, y, n_classes)?;
    let n = x.len() as f64;
    let d = x[0].len();
    let l2_weight = 1.0 / (params.c * n);

    let mut weights = vec![vec![0.0; d + 1]; n_classes];
    let mut step = params.learning_rate;
    let mut halvings = 0usize;
    let mut iterations = 0usize;

    // The loss trace is computed by regularized_loss throughout so the
    // non-increase guarantee compares like with like.
    let mut loss = regularized_loss(x, y, &weights, l2_weight);
    let mut losses = vec![loss];

    'outer: for _ in 0..params.max_iter {
        let (_, grad) = loss_and_gradient(x, y, &weights, l2_weight);
        let grad_norm = grad
            .iter()
            .flat_map(|g| g.iter())
            .fold(0.0f64, |acc, &g| acc.max(g.abs()));
        if grad_norm < params.tol {
            break;
        }

        // Backtrack: halve the step until the objective does not increase.
        loop {
            let candidate: Vec<Vec<f64>> = weights
                .iter()
                .zip(&grad)
                .map(|(w, g)| w.iter().zip(g).map(|(&wv, &gv)| wv - step * gv).collect())
                .collect();
            let new_loss = regularized_loss(x, y, &candidate, l2_weight);
            if new_loss <= loss {
                weights = candidate;
                loss = new_loss;
                break;
            }
            if step < 1e-18 {
                // No step this small makes progress; training has converged
                // as far as float arithmetic allows.
                break 'outer;
            }
            step *= 0.5;
            halvings += 1;
        }
        iterations += 1;
        losses.push(loss);
    }

    Ok(SoftmaxModel {
        weights,
        n_features: d,
        stats: TrainingStats {
            iterations,
            step_halvings: halvings,
            losses,
        },
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::Rng;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn separable_toy() -> (Vec<Vec<f64>>, Vec<usize>) {
        // Labeled by the sign of x1.
        let x = vec![
            vec![-1.0, -1.0],
            vec![-1.0, 1.0],
            vec![1.0, -1.0],
            vec![1.0, 1.0],
            vec![-2.0, 0.5],
            vec![2.0, -0.5],
        ];
        let y = vec![0, 0, 1, 1, 0, 1];
        (x, y)
    }

    #[test]
    fn separable_reaches_full_accuracy() {
        let (x, y) = separable_toy();
        let params = LogisticRegressionParams::new(1.0, 500).unwrap();
        let model = fit_logistic(&x, &y, 2, &params, 0).unwrap();
        let proba = model.predict_proba(&x);
        let pred: Vec<usize> = proba.iter().map(|r| super::super::argmax_lowest(r)).collect();
        assert_eq!(pred, y);
    }

    #[test]
    fn fit_is_bit_deterministic() {
        let (x, y) = separable_toy();
        let params = LogisticRegressionParams::new(0.5, 200).unwrap();
        let a = fit_logistic(&x, &y, 2, &params, 0).unwrap();
        let b = fit_logistic(&x, &y, 2, &params, 99).unwrap();
        assert_eq!(a.weights, b.weights);
    }

    #[test]
    fn loss_path_never_increases() {
        let (x, y) = separable_toy();
        let params = LogisticRegressionParams::new(10.0, 300).unwrap();
        let model = fit_logistic(&x, &y, 2, &params, 0).unwrap();
        for pair in model.stats.losses.windows(2) {
            assert!(pair[1] <= pair[0] + 1e-15, "loss increased: {pair:?}");
        }
    }

    #[test]
    fn zero_weights_give_uniform_probabilities() {
        let model = SoftmaxModel::from_weights(vec![vec![0.0; 3]; 4], 2);
        let proba = model.predict_proba(&[vec![3.0, -1.0]]);
        for p in &proba[0] {
            assert!((p - 0.25).abs() < 1e-12);
        }
    }

    #[test]
    fn rejects_single_class() {
        let x = vec![vec![0.0], vec![1.0]];
        let y = vec![1, 1];
        let params = LogisticRegressionParams::new(1.0, 10).unwrap();
        assert!(matches!(
            fit_logistic(&x, &y, 2, &params, 0),
            Err(ModelError::SingleClass(1))
        ));
    }

    #[test]
    fn rejects_non_finite() {
        let x = vec![vec![0.0], vec![f64::NAN]];
        let y = vec![0, 1];
        let params = LogisticRegressionParams::new(1.0, 10).unwrap();
        assert!(matches!(
            fit_logistic(&x, &y, 2, &params, 0),
            Err(ModelError::NonFinite { row: 1, col: 0 })
        ));
    }

    /// Central finite differences of the regularized loss, the independent
    /// oracle for the analytic gradient.
    fn numeric_gradient(
        x: &[Vec<f64>],
        y: &[usize],
        weights: &[Vec<f64>],
        l2: f64,
    ) -> Vec<Vec<f64>> {
        let h = 1e-5;
        let mut grad = vec![vec![0.0; weights[0].len()]; weights.len()];
        for c in 0..weights.len() {
            for j in 0..weights[0].len() {
                let mut plus = weights.to_vec();
                plus[c][j] += h;
                let mut minus = weights.to_vec();
                minus[c][j] -= h;
                grad[c][j] =
                    (regularized_loss(x, y, &plus, l2) - regularized_loss(x, y, &minus, l2))
                        / (2.0 * h);
            }
        }
        grad
    }

    #[test]
    fn gradient_matches_finite_differences() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for _ in 0..10 {
            let n = rng.gen_range(4..20);
            let d = rng.gen_range(1..5);
            let n_classes = rng.gen_range(2..4);
            let x: Vec<Vec<f64>> = (0..n)
                .map(|_| (0..d).map(|_| rng.gen_range(-2.0..2.0)).collect())
                .collect();
            let y: Vec<usize> = (0..n)
                .map(|i| {
                    if i < n_classes {
                        i // guarantee every class appears
                    } else {
                        rng.gen_range(0..n_classes)
                    }
                })
                .collect();
            let weights: Vec<Vec<f64>> = (0..n_classes)
                .map(|_| (0..=d).map(|_| rng.gen_range(-1.0..1.0)).collect())
                .collect();
            let l2 = 1.0 / (rng.gen_range(0.1..10.0) * n as f64);

            let (_, analytic) = loss_and_gradient(&x, &y, &weights, l2);
            let numeric = numeric_gradient(&x, &y, &weights, l2);
            for c in 0..n_classes {
                for j in 0..=d {
                    let a = analytic[c][j];
                    let e = numeric[c][j];
                    let rel = (a - e).abs() / a.abs().max(e.abs()).max(1e-8);
                    assert!(rel < 1e-5, "gradient mismatch at [{c}][{j}]: {a} vs {e}");
                }
            }
        }
    }
}
