//! Reference imputers: column means, partial-distance KNN, iterative
//! truncated-SVD completion, and deterministic chained ridge regressions.
//! All operate on the encoded matrix / mask contract and never rewrite
//! observed cells.

use crate::dataframe::{sort_columns_by_missingness, EncodingMap, MaskMatrix};
use crate::error::{Error, Result};
use crate::imputer::delta;
use crate::numerics::{Matrix, RngStream};

#[derive(Debug, Clone)]
pub struct BaselineConfig {
    pub knn_k: usize,
    /// Truncation rank for SVD completion; `None` resolves to
    /// `min(10, d' - 1)` at run time.
    pub svd_rank: Option<usize>,
    pub svd_tol: f64,
    pub svd_max_iters: usize,
    pub mice_sweeps: usize,
    pub mice_ridge: f64,
}

impl Default for BaselineConfig {
    fn default() -> BaselineConfig {
        BaselineConfig {
            knn_k: 5,
            svd_rank: None,
            svd_tol: 1e-4,
            svd_max_iters: 100,
            mice_sweeps: 10,
            mice_ridge: 1e-3,
        }
    }
}

impl BaselineConfig {
    fn validate(&self) -> Result<()> {
        if self.knn_k == 0 || self.mice_sweeps == 0 {
            return Err(Error::Config("knn_k and mice_sweeps must be >= 1".into()));
        }
        if self.svd_rank == Some(0) {
            return Err(Error::Config("svd_rank must be >= 1".into()));
        }
        if self.mice_ridge < 0.0 {
            return Err(Error::Config("mice_ridge must be non-negative".into()));
        }
        Ok(())
    }

    pub fn resolved_svd_rank(&self, encoded_width: usize) -> usize {
        self.svd_rank
            .unwrap_or_else(|| 10.min(encoded_width.saturating_sub(1)))
            .max(1)
    }
}

fn column_means(x: &Matrix, mask: &MaskMatrix) -> Result<Vec<f64>> {
    let mut means = Vec::with_capacity(x.cols());
    for c in 0..x.cols() {
        let mut sum = 0.0;
        let mut n = 0usize;
        for r in 0..x.rows() {
            if mask.observed(r, c) {
                sum += x.get(r, c);
                n += 1;
            }
        }
        if n == 0 {
            return Err(Error::UnimputableColumn {
                column: format!("{c}"),
                reason: "no observed cells".into(),
            });
        }
        means.push(sum / n as f64);
    }
    Ok(means)
}

/// Fills each missing cell with its column's mean over observed cells.
pub fn impute_mean(x_hat: &Matrix, mask: &MaskMatrix) -> Result<Matrix> {
    let means = column_means(x_hat, mask)?;
    let mut out = x_hat.clone();
    for r in 0..out.rows() {
        for c in 0..out.cols() {
            if !mask.observed(r, c) {
                out.set(r, c, means[c]);
            }
        }
    }
    Ok(out)
}

/// Partial Euclidean distance between two rows over coordinates observed in
/// both, normalized by the shared-coordinate count:
/// `sqrt(sum((a - b)^2) / |shared|)`. `None` when the rows share nothing.
fn partial_distance(x: &Matrix, mask: &MaskMatrix, a: usize, b: usize) -> Option<f64> {
    let mut sum = 0.0;
    let mut shared = 0usize;
    for c in 0..x.cols() {
        if mask.observed(a, c) && mask.observed(b, c) {
            let d = x.get(a, c) - x.get(b, c);
            sum += d * d;
            shared += 1;
        }
    }
    (shared > 0).then(|| (sum / shared as f64).sqrt())
}

/// KNN imputation: each missing cell takes the mean of the target values of
/// the k nearest rows that observe it (ties on distance broken by row
/// index). Cells no candidate observes fall back to the column mean.
pub fn impute_knn(x_hat: &Matrix, mask: &MaskMatrix, cfg: &BaselineConfig) -> Result<Matrix> {
    cfg.validate()?;
    if x_hat.rows() < cfg.knn_k + 1 {
        return Err(Error::Config(format!(
            "knn needs at least k + 1 = {} rows, got {}",
            cfg.knn_k + 1,
            x_hat.rows()
        )));
    }
    let means = column_means(x_hat, mask)?;
    let mut out = x_hat.clone();
    for r in 0..x_hat.rows() {
        let missing_cols: Vec<usize> = (0..x_hat.cols())
            .filter(|&c| !mask.observed(r, c))
            .collect();
        if missing_cols.is_empty() {
            continue;
        }
        // Distances to every other row, reused across this row's cells.
        let mut neighbors: Vec<(f64, usize)> = (0..x_hat.rows())
            .filter(|&c| c != r)
            .filter_map(|c| partial_distance(x_hat, mask, r, c).map(|d| (d, c)))
            .collect();
        neighbors.sort_by(|a, b| {
            a.0.partial_cmp(&b.0)
                .expect("finite distances")
                .then(a.1.cmp(&b.1))
        });

        for col in missing_cols {
            let mut sum = 0.0;
            let mut taken = 0usize;
            for &(_, cand) in &neighbors {
                if !mask.observed(cand, col) {
                    continue;
                }
                sum += x_hat.get(cand, col);
                taken += 1;
                if taken == cfg.knn_k {
                    break;
                }
            }
            let fill = if taken == 0 {
                means[col]
            } else {
                sum / taken as f64
            };
            out.set(r, col, fill);
        }
    }
    Ok(out)
}

/// Modified Gram-Schmidt with deterministic re-randomization of degenerate
/// columns. Columns live in a `rows x k` matrix.
fn orthonormalize(m: &mut Matrix, rng: &mut RngStream) {
    let rows = m.rows();
    let k = m.cols();
    for j in 0..k {
        for attempt in 0..3 {
            for prev in 0..j {
                let mut dot = 0.0;
                for r in 0..rows {
                    dot += m.get(r, j) * m.get(r, prev);
                }
                for r in 0..rows {
                    m.set(r, j, m.get(r, j) - dot * m.get(r, prev));
                }
            }
            let norm: f64 = (0..rows).map(|r| m.get(r, j).powi(2)).sum::<f64>().sqrt();
            if norm > 1e-12 {
                for r in 0..rows {
                    m.set(r, j, m.get(r, j) / norm);
                }
                break;
            }
            // Degenerate direction: re-draw and orthogonalize again.
            debug_assert!(attempt < 2, "could not orthonormalize column {j}");
            for r in 0..rows {
                m.set(r, j, rng.normal());
            }
        }
    }
}

/// Projection of `x` onto its top-`rank` right singular subspace, found by
/// orthogonal iteration on the Gram matrix `x^T x`. This is the best rank-k
/// approximation of `x` in the Frobenius norm.
fn rank_k_approximation(x: &Matrix, rank: usize, rng: &mut RngStream) -> Result<Matrix> {
    const MAX_ITERS: usize = 2000;
    const EIG_TOL: f64 = 1e-11;
    let d = x.cols();
    let gram = x.transpose().matmul(x)?;

    let mut q = Matrix::zeros(d, rank);
    for r in 0..d {
        for c in 0..rank {
            q.set(r, c, rng.normal());
        }
    }
    orthonormalize(&mut q, rng);

    let mut prev_eigs = vec![f64::INFINITY; rank];
    let mut converged = false;
    for _ in 0..MAX_ITERS {
        let mut z = gram.matmul(&q)?;
        orthonormalize(&mut z, rng);
        q = z;
        // Rayleigh quotients approximate the eigenvalues.
        let bq = gram.matmul(&q)?;
        let mut eigs = vec![0.0; rank];
        for c in 0..rank {
            for r in 0..d {
                eigs[c] += q.get(r, c) * bq.get(r, c);
            }
        }
        let scale = eigs.iter().fold(1.0_f64, |a, b| a.max(b.abs()));
        let moved = eigs
            .iter()
            .zip(&prev_eigs)
            .map(|(e, p)| (e - p).abs())
            .fold(0.0_f64, f64::max);
        prev_eigs = eigs;
        if moved <= EIG_TOL * scale {
            converged = true;
            break;
        }
    }
    if !converged {
        return Err(Error::Numerical(format!(
            "orthogonal iteration did not converge within {MAX_ITERS} iterations"
        )));
    }
    // x . V . V^T
    let xv = x.matmul(&q)?;
    xv.matmul(&q.transpose())
}

/// Iterative SVD completion: initialize missing cells with column means,
/// then repeatedly overwrite only the missing cells with the rank-k
/// approximation's values until the normalized change drops below `svd_tol`
/// or the iteration budget runs out.
pub fn impute_svd(
    x_hat: &Matrix,
    mask: &MaskMatrix,
    cfg: &BaselineConfig,
    rng: &mut RngStream,
) -> Result<Matrix> {
    cfg.validate()?;
    let rank = cfg.resolved_svd_rank(x_hat.cols());
    if rank >= x_hat.rows().min(x_hat.cols()) && x_hat.rows().min(x_hat.cols()) > 1 {
        return Err(Error::Config(format!(
            "svd rank {rank} must be below min(rows, cols) = {}",
            x_hat.rows().min(x_hat.cols())
        )));
    }
    let mut x = impute_mean(x_hat, mask)?;
    if mask.missing_count() == 0 {
        return Ok(x);
    }
    for _ in 0..cfg.svd_max_iters {
        let approx = rank_k_approximation(&x, rank, rng)?;
        let mut next = x.clone();
        for r in 0..x.rows() {
            for c in 0..x.cols() {
                if !mask.observed(r, c) {
                    next.set(r, c, approx.get(r, c));
                }
            }
        }
        let d = delta(&next, &x)?;
        x = next;
        if d < cfg.svd_tol {
            break;
        }
    }
    Ok(x)
}

/// Ridge-regularized least squares with an unpenalized intercept, solved by
/// Cholesky on the normal equations. `a` must not include the intercept
/// column; the returned vector is `[w_0..w_{p-1}, intercept]`.
fn ridge_fit(a: &Matrix, y: &[f64], ridge: f64) -> Result<Vec<f64>> {
    let n = a.rows();
    let p = a.cols();
    let dim = p + 1;
    // Normal equations with the intercept appended as a ones column.
    let mut m = vec![0.0; dim * dim];
    let mut rhs = vec![0.0; dim];
    for r in 0..n {
        let row = a.row(r);
        for i in 0..p {
            for j in i..p {
                m[i * dim + j] += row[i] * row[j];
            }
            m[i * dim + p] += row[i];
            rhs[i] += row[i] * y[r];
        }
        rhs[p] += y[r];
    }
    m[p * dim + p] = n as f64;
    for i in 0..p {
        m[i * dim + i] += ridge;
    }
    // Mirror the upper triangle.
    for i in 0..dim {
        for j in 0..i {
            m[i * dim + j] = m[j * dim + i];
        }
    }

    // Cholesky decomposition, failing on non-positive pivots.
    let mut l = vec![0.0; dim * dim];
    for i in 0..dim {
        for j in 0..=i {
            let mut sum = m[i * dim + j];
            for k in 0..j {
                sum -= l[i * dim + k] * l[j * dim + k];
            }
            if i == j {
                if sum <= 0.0 {
                    return Err(Error::Numerical(
                        "singular normal equations despite ridge".into(),
                    ));
                }
                l[i * dim + j] = sum.sqrt();
            } else {
                l[i * dim + j] = sum / l[j * dim + j];
            }
        }
    }
    // Solve L z = rhs, then L^T w = z.
    let mut z = vec![0.0; dim];
    for i in 0..dim {
        let mut sum = rhs[i];
        for k in 0..i {
            sum -= l[i * dim + k] * z[k];
        }
        z[i] = sum / l[i * dim + i];
    }
    let mut w = vec![0.0; dim];
    for i in (0..dim).rev() {
        let mut sum = z[i];
        for k in i + 1..dim {
            sum -= l[k * dim + i] * w[k];
        }
        w[i] = sum / l[i * dim + i];
    }
    Ok(w)
}

fn predict_ridge(a: &Matrix, w: &[f64]) -> Vec<f64> {
    let p = a.cols();
    (0..a.rows())
        .map(|r| {
            let row = a.row(r);
            let mut v = w[p];
            for (x, wi) in row.iter().zip(&w[..p]) {
                v += x * wi;
            }
            v
        })
        .collect()
}

/// Chained-equation imputation with deterministic regression means: visit
/// raw columns in ascending-missingness order, fit a ridge regression of the
/// column's observed values on all other encoded columns, and fill the
/// column's missing cells with the regression predictions. No posterior
/// draws are taken, so repeated runs agree exactly.
pub fn impute_mice(
    x_hat: &Matrix,
    mask: &MaskMatrix,
    map: &EncodingMap,
    cfg: &BaselineConfig,
) -> Result<Matrix> {
    cfg.validate()?;
    let mut x = impute_mean(x_hat, mask)?;
    let order: Vec<usize> = sort_columns_by_missingness(mask, map)
        .into_iter()
        .filter(|&g| map.group(g).model_imputable())
        .collect();
    if order.is_empty() {
        return Ok(x);
    }
    for _ in 0..cfg.mice_sweeps {
        for &g in &order {
            let group = map.group(g);
            let span = group.span();
            let predictors: Vec<usize> = (0..x.cols()).filter(|c| !span.contains(c)).collect();
            let obs_rows: Vec<usize> = (0..x.rows())
                .filter(|&r| mask.observed(r, group.start))
                .collect();
            let mis_rows: Vec<usize> = (0..x.rows())
                .filter(|&r| !mask.observed(r, group.start))
                .collect();
            if mis_rows.is_empty() {
                continue;
            }

            let gather = |rows: &[usize]| {
                let mut m = Matrix::zeros(rows.len(), predictors.len());
                for (i, &r) in rows.iter().enumerate() {
                    for (j, &c) in predictors.iter().enumerate() {
                        m.set(i, j, x.get(r, c));
                    }
                }
                m
            };
            let a_obs = gather(&obs_rows);
            let a_mis = gather(&mis_rows);

            for target_col in span.clone() {
                let y: Vec<f64> = obs_rows.iter().map(|&r| x.get(r, target_col)).collect();
                let w = ridge_fit(&a_obs, &y, cfg.mice_ridge)?;
                let preds = predict_ridge(&a_mis, &w);
                for (&r, &p) in mis_rows.iter().zip(&preds) {
                    if !p.is_finite() {
                        return Err(Error::Numerical("ridge prediction is not finite".into()));
                    }
                    x.set(r, target_col, p);
                }
            }
        }
    }
    Ok(x)
}
