//! Imputation and post-imputation metrics: RMSE over the amputed cells, a
//! deterministic regularized logistic classifier, and AUROC in its
//! rank-statistic form.

use crate::dataframe::MaskMatrix;
use crate::error::{Error, Result};
use crate::numerics::Matrix;

/// Root mean squared error over the missing cells, in encoded (scaled)
/// space: `sqrt(sum_missing (x_com - x_imp)^2 / #NA)`.
pub fn rmse(x_com: &Matrix, x_imp: &Matrix, mask: &MaskMatrix) -> Result<f64> {
    if x_com.rows() != x_imp.rows() || x_com.cols() != x_imp.cols() {
        return Err(Error::shape(
            "rmse",
            (x_com.rows(), x_com.cols()),
            (x_imp.rows(), x_imp.cols()),
        ));
    }
    let mut sum = 0.0;
    let mut na = 0usize;
    for r in 0..x_com.rows() {
        for c in 0..x_com.cols() {
            if !mask.observed(r, c) {
                let d = x_com.get(r, c) - x_imp.get(r, c);
                sum += d * d;
                na += 1;
            }
        }
    }
    if na == 0 {
        return Err(Error::UndefinedMetric(
            "rmse needs at least one missing cell".into(),
        ));
    }
    Ok((sum / na as f64).sqrt())
}

#[derive(Debug, Clone)]
pub struct LogisticConfig {
    pub learning_rate: f64,
    pub epochs: usize,
    pub l2: f64,
}

impl Default for LogisticConfig {
    fn default() -> LogisticConfig {
        LogisticConfig {
            learning_rate: 0.5,
            epochs: 500,
            l2: 1e-3,
        }
    }
}

fn sigmoid(z: f64) -> f64 {
    1.0 / (1.0 + (-z).exp())
}

/// Full-batch gradient descent on the mean cross-entropy with an L2 penalty
/// on the non-intercept weights. Weights start at zero, so the fit is
/// deterministic. Returns `[w_0..w_{d-1}, intercept]`.
pub fn fit_logistic(features: &Matrix, labels: &[u8], cfg: &LogisticConfig) -> Result<Vec<f64>> {
    if features.rows() != labels.len() {
        return Err(Error::shape(
            "fit_logistic",
            (features.rows(), features.cols()),
            (labels.len(), 1),
        ));
    }
    if !labels.contains(&0) || !labels.contains(&1) {
        return Err(Error::DegenerateLabels(
            "both classes must be present to fit a classifier".into(),
        ));
    }
    let n = features.rows();
    let d = features.cols();
    let mut w = vec![0.0; d + 1];
    for _ in 0..cfg.epochs {
        let mut grad = vec![0.0; d + 1];
        for r in 0..n {
            let row = features.row(r);
            let mut z = w[d];
            for (x, wi) in row.iter().zip(&w[..d]) {
                z += x * wi;
            }
            let err = sigmoid(z) - f64::from(labels[r]);
            for (g, x) in grad[..d].iter_mut().zip(row) {
                *g += err * x;
            }
            grad[d] += err;
        }
        let scale = 1.0 / n as f64;
        for (i, g) in grad.iter_mut().enumerate() {
            *g *= scale;
            if i < d {
                *g += 2.0 * cfg.l2 * w[i];
            }
        }
        for (wi, g) in w.iter_mut().zip(&grad) {
            *wi -= cfg.learning_rate * g;
        }
    }
    Ok(w)
}

/// Class-1 probabilities under a fitted weight vector.
pub fn predict_logistic(features: &Matrix, weights: &[f64]) -> Result<Vec<f64>> {
    let d = features.cols();
    if weights.len() != d + 1 {
        return Err(Error::shape(
            "predict_logistic",
            (weights.len(), 1),
            (d + 1, 1),
        ));
    }
    Ok((0..features.rows())
        .map(|r| {
            let row = features.row(r);
            let mut z = weights[d];
            for (x, wi) in row.iter().zip(&weights[..d]) {
                z += x * wi;
            }
            sigmoid(z)
        })
        .collect())
}

/// Area under the ROC curve: the probability that a random positive outranks
/// a random negative, ties counted one half (the rank-statistic form).
pub fn auroc(scores: &[f64], labels: &[u8]) -> Result<f64> {
    if scores.len() != labels.len() {
        return Err(Error::shape("auroc", (scores.len(), 1), (labels.len(), 1)));
    }
    let pos = labels.iter().filter(|&&l| l == 1).count();
    let neg = labels.len() - pos;
    if pos == 0 || neg == 0 {
        return Err(Error::DegenerateLabels("auroc needs both classes".into()));
    }
    let mut order: Vec<usize> = (0..scores.len()).collect();
    order.sort_by(|&a, &b| scores[a].partial_cmp(&scores[b]).expect("finite scores"));

    // Average ranks over tied score groups.
    let mut rank_sum_pos = 0.0;
    let mut i = 0;
    while i < order.len() {
        let mut j = i;
        while j + 1 < order.len() && scores[order[j + 1]] == scores[order[i]] {
            j += 1;
        }
        // 1-based ranks i+1 ..= j+1 share the average rank.
        let avg = (i + 1 + j + 1) as f64 / 2.0;
        for &idx in &order[i..=j] {
            if labels[idx] == 1 {
                rank_sum_pos += avg;
            }
        }
        i = j + 1;
    }
    let p = pos as f64;
    let u = rank_sum_pos - p * (p + 1.0) / 2.0;
    Ok(u / (p * neg as f64))
}
