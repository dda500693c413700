//! Synthetic dataset generators used by the test suites, benchmarks, and
//! demos: linearly entangled columns, exact low-rank matrices, and labeled
//! logistic data.

use crate::dataframe::{Cell, ColumnKind, ColumnSpec, MixedDataset, Schema};
use crate::error::Result;
use crate::numerics::{Matrix, RngStream};

/// Columns 0 and 1 are independent uniforms; every later column is a noisy
/// convex blend of two earlier columns, min-max rescaled to `[0, 1]`. The
/// noise standard deviation applies in the scaled units.
pub fn linear_blend_matrix(n: usize, d: usize, noise_sd: f64, rng: &mut RngStream) -> Matrix {
    assert!(d >= 2 && n >= 2);
    let mut cols: Vec<Vec<f64>> = Vec::with_capacity(d);
    for j in 0..d {
        let col: Vec<f64> = if j < 2 {
            (0..n).map(|_| rng.uniform_f64()).collect()
        } else {
            let p = rng.uniform_below(j);
            let q = {
                let mut q = rng.uniform_below(j - 1);
                if q >= p {
                    q += 1;
                }
                q
            };
            let a = 0.3 + 0.4 * rng.uniform_f64();
            let raw: Vec<f64> = (0..n)
                .map(|r| a * cols[p][r] + (1.0 - a) * cols[q][r] + noise_sd * rng.normal())
                .collect();
            rescale_unit(raw)
        };
        cols.push(col);
    }
    let mut m = Matrix::zeros(n, d);
    for (j, col) in cols.iter().enumerate() {
        for (r, &v) in col.iter().enumerate() {
            m.set(r, j, v);
        }
    }
    m
}

fn rescale_unit(col: Vec<f64>) -> Vec<f64> {
    let min = col.iter().cloned().fold(f64::INFINITY, f64::min);
    let max = col.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    if max > min {
        col.into_iter().map(|v| (v - min) / (max - min)).collect()
    } else {
        vec![0.0; col.len()]
    }
}

/// Wraps [`linear_blend_matrix`] into a continuous-only dataset with columns
/// named `c0..c{d-1}`.
pub fn linear_blend_dataset(
    n: usize,
    d: usize,
    noise_sd: f64,
    rng: &mut RngStream,
) -> Result<MixedDataset> {
    let m = linear_blend_matrix(n, d, noise_sd, rng);
    let schema = Schema::new(
        (0..d)
            .map(|j| ColumnSpec {
                name: format!("c{j}"),
                kind: ColumnKind::Continuous,
            })
            .collect(),
        None,
    )?;
    let mut cells = Vec::with_capacity(n * d);
    for r in 0..n {
        for c in 0..d {
            cells.push(Cell::Number(m.get(r, c)));
        }
    }
    MixedDataset::new(schema, n, cells)
}

/// Exact rank-`rank` matrix with entries inside `[0, 1]`: a dominant
/// positive rank-1 component plus small signed components, no rescaling
/// (which would raise the rank).
pub fn low_rank_matrix(n: usize, d: usize, rank: usize, rng: &mut RngStream) -> Matrix {
    assert!(rank >= 1 && rank <= n.min(d));
    let mut m = Matrix::zeros(n, d);
    let amp = 0.3 / rank.max(1) as f64;
    for k in 0..rank {
        let (lo, hi, signed) = if k == 0 {
            (0.35, 0.45, false)
        } else {
            (0.0, amp, true)
        };
        let u: Vec<f64> = (0..n)
            .map(|_| {
                let v = lo + (hi - lo) * rng.uniform_f64();
                if signed && rng.uniform_f64() < 0.5 {
                    -v
                } else {
                    v
                }
            })
            .collect();
        let v: Vec<f64> = (0..d).map(|_| 0.6 + 0.4 * rng.uniform_f64()).collect();
        for r in 0..n {
            for c in 0..d {
                m.set(r, c, m.get(r, c) + u[r] * v[c]);
            }
        }
    }
    for r in 0..n {
        for c in 0..d {
            debug_assert!((0.0..=1.0).contains(&m.get(r, c)));
        }
    }
    m
}

/// Correlated features plus a binary label drawn from a logistic model over
/// the true feature values. The label column is declared as the schema's
/// label and never carries missing cells.
pub fn labeled_logistic_dataset(
    n: usize,
    d: usize,
    noise_sd: f64,
    rng: &mut RngStream,
) -> Result<MixedDataset> {
    let features = linear_blend_matrix(n, d, noise_sd, rng);
    let weights: Vec<f64> = (0..d)
        .map(|j| if j % 2 == 0 { 2.5 } else { -2.5 })
        .collect();
    let mut columns: Vec<ColumnSpec> = (0..d)
        .map(|j| ColumnSpec {
            name: format!("c{j}"),
            kind: ColumnKind::Continuous,
        })
        .collect();
    columns.push(ColumnSpec {
        name: "outcome".into(),
        kind: ColumnKind::Categorical(vec!["neg".into(), "pos".into()]),
    });
    let schema = Schema::new(columns, Some("outcome".into()))?;

    let mut cells = Vec::with_capacity(n * (d + 1));
    for r in 0..n {
        let mut logit = 0.0;
        for (j, w) in weights.iter().enumerate() {
            logit += w * (features.get(r, j) - 0.5);
        }
        let p = 1.0 / (1.0 + (-2.0 * logit).exp());
        let label = usize::from(rng.uniform_f64() < p);
        for c in 0..d {
            cells.push(Cell::Number(features.get(r, c)));
        }
        cells.push(Cell::Category(label));
    }
    MixedDataset::new(schema, n, cells)
}
