//! Dense matrix arithmetic, deterministic random streams, and the order
//! statistics used by the amputation simulators.

use crate::error::{Error, Result};

/// Row-major dense matrix of finite `f64` values.
///
/// Missing cells never reach this layer; the dataframe layer tracks them in a
/// mask and stores a placeholder value here.
#[derive(Debug, Clone, PartialEq)]
pub struct Matrix {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl Matrix {
    pub fn zeros(rows: usize, cols: usize) -> Matrix {
        Matrix {
            rows,
            cols,
            data: vec![0.0; rows * cols],
        }
    }

    /// Builds a matrix from row-major data, checking length and finiteness.
    pub fn from_vec(rows: usize, cols: usize, data: Vec<f64>) -> Result<Matrix> {
        if data.len() != rows * cols {
            return Err(Error::shape("from_vec", (rows, cols), (data.len(), 1)));
        }
        if let Some(pos) = data.iter().position(|v| !v.is_finite()) {
            return Err(Error::Numerical(format!(
                "non-finite value at flat index {pos}"
            )));
        }
        Ok(Matrix { rows, cols, data })
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Matrix> {
        let nrows = rows.len();
        let ncols = rows.first().map_or(0, Vec::len);
        let mut data = Vec::with_capacity(nrows * ncols);
        for (i, r) in rows.iter().enumerate() {
            if r.len() != ncols {
                return Err(Error::shape("from_rows", (i, r.len()), (0, ncols)));
            }
            data.extend_from_slice(r);
        }
        Matrix::from_vec(nrows, ncols, data)
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    #[inline]
    pub fn get(&self, r: usize, c: usize) -> f64 {
        debug_assert!(r < self.rows && c < self.cols);
        self.data[r * self.cols + c]
    }

    #[inline]
    pub fn set(&mut self, r: usize, c: usize, v: f64) {
        debug_assert!(r < self.rows && c < self.cols);
        debug_assert!(v.is_finite());
        self.data[r * self.cols + c] = v;
    }

    #[inline]
    pub fn row(&self, r: usize) -> &[f64] {
        &self.data[r * self.cols..(r + 1) * self.cols]
    }

    pub fn values(&self) -> &[f64] {
        &self.data
    }

    pub fn transpose(&self) -> Matrix {
        let mut out = Matrix::zeros(self.cols, self.rows);
        for r in 0..self.rows {
            for c in 0..self.cols {
                out.data[c * self.rows + r] = self.data[r * self.cols + c];
            }
        }
        out
    }

    /// Standard matrix product; errors on incompatible inner dimensions.
    pub fn matmul(&self, other: &Matrix) -> Result<Matrix> {
        if self.cols != other.rows {
            return Err(Error::shape(
                "matmul",
                (self.rows, self.cols),
                (other.rows, other.cols),
            ));
        }
        let mut out = Matrix::zeros(self.rows, other.cols);
        for i in 0..self.rows {
            let a_row = &self.data[i * self.cols..(i + 1) * self.cols];
            let out_row = &mut out.data[i * other.cols..(i + 1) * other.cols];
            for (k, &a) in a_row.iter().enumerate() {
                let b_row = &other.data[k * other.cols..(k + 1) * other.cols];
                for (o, &b) in out_row.iter_mut().zip(b_row) {
                    *o += a * b;
                }
            }
        }
        Ok(out)
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> Matrix {
        Matrix {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().map(|&v| f(v)).collect(),
        }
    }
}

const FNV_OFFSET: u64 = 0xcbf29ce484222325;
const FNV_PRIME: u64 = 0x100000001b3;

fn fnv1a(identity: u64, label: &str) -> u64 {
    let mut h = FNV_OFFSET;
    for b in identity.to_le_bytes().iter().chain(label.as_bytes()) {
        h ^= u64::from(*b);
        h = h.wrapping_mul(FNV_PRIME);
    }
    h
}

fn splitmix64(state: &mut u64) -> u64 {
    *state = state.wrapping_add(0x9E3779B97F4A7C15);
    let mut z = *state;
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58476D1CE4E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D049BB133111EB);
    z ^ (z >> 31)
}

/// Deterministic random stream: xoshiro256++ seeded through SplitMix64.
///
/// The same seed yields the same draw sequence on every platform. Child
/// streams are derived from the stream's identity seed and a label, so they
/// do not depend on how many draws the parent has made.
#[derive(Debug, Clone)]
pub struct RngStream {
    s: [u64; 4],
    identity: u64,
}

impl RngStream {
    pub fn new(seed: u64) -> RngStream {
        let mut sm = seed;
        let mut s = [0u64; 4];
        for slot in &mut s {
            *slot = splitmix64(&mut sm);
        }
        // xoshiro256++ must not start from the all-zero state.
        if s == [0, 0, 0, 0] {
            s[0] = 1;
        }
        RngStream { s, identity: seed }
    }

    /// Independent stream keyed by `(identity seed, label)`.
    pub fn child(&self, label: &str) -> RngStream {
        RngStream::new(fnv1a(self.identity, label))
    }

    pub fn seed(&self) -> u64 {
        self.identity
    }

    pub fn next_u64(&mut self) -> u64 {
        let result = self.s[0]
            .wrapping_add(self.s[3])
            .rotate_left(23)
            .wrapping_add(self.s[0]);
        let t = self.s[1] << 17;
        self.s[2] ^= self.s[0];
        self.s[3] ^= self.s[1];
        self.s[1] ^= self.s[2];
        self.s[0] ^= self.s[3];
        self.s[2] ^= t;
        self.s[3] = self.s[3].rotate_left(45);
        result
    }

    /// Uniform draw on `[0, 1)` with 53 bits of precision.
    pub fn uniform_f64(&mut self) -> f64 {
        (self.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
    }

    /// Uniform integer in `[0, n)` via rejection sampling.
    pub fn uniform_below(&mut self, n: usize) -> usize {
        assert!(n > 0, "uniform_below(0)");
        let n = n as u64;
        let zone = u64::MAX - (u64::MAX - n + 1) % n;
        loop {
            let v = self.next_u64();
            if v <= zone {
                return (v % n) as usize;
            }
        }
    }

    /// Fisher-Yates shuffle.
    pub fn shuffle<T>(&mut self, xs: &mut [T]) {
        for i in (1..xs.len()).rev() {
            let j = self.uniform_below(i + 1);
            xs.swap(i, j);
        }
    }

    /// `k` distinct indices from `[0, n)`, in draw order.
    pub fn sample_indices(&mut self, n: usize, k: usize) -> Vec<usize> {
        assert!(k <= n, "cannot sample {k} of {n} without replacement");
        let mut pool: Vec<usize> = (0..n).collect();
        for i in 0..k {
            let j = i + self.uniform_below(n - i);
            pool.swap(i, j);
        }
        pool.truncate(k);
        pool
    }

    /// Standard normal draw (Box-Muller).
    pub fn normal(&mut self) -> f64 {
        let u1 = loop {
            let u = self.uniform_f64();
            if u > 0.0 {
                break u;
            }
        };
        let u2 = self.uniform_f64();
        (-2.0 * u1.ln()).sqrt() * (std::f64::consts::TAU * u2).cos()
    }
}

/// Matrix with entries i.i.d. uniform on `[0, 1)`.
pub fn uniform_matrix(rows: usize, cols: usize, rng: &mut RngStream) -> Result<Matrix> {
    if rows == 0 || cols == 0 {
        return Err(Error::shape("uniform_matrix", (rows, cols), (1, 1)));
    }
    let data = (0..rows * cols).map(|_| rng.uniform_f64()).collect();
    Ok(Matrix { rows, cols, data })
}

/// Lower median of column `j`: the order statistic at 1-indexed position
/// `ceil(rows / 2)`. Deterministic for even row counts.
pub fn column_median(m: &Matrix, j: usize) -> Result<f64> {
    if j >= m.cols() {
        return Err(Error::Index {
            what: "column",
            index: j,
            len: m.cols(),
        });
    }
    if m.rows() == 0 {
        return Err(Error::Index {
            what: "row",
            index: 0,
            len: 0,
        });
    }
    let mut col: Vec<f64> = (0..m.rows()).map(|r| m.get(r, j)).collect();
    col.sort_unstable_by(|a, b| a.partial_cmp(b).expect("finite values"));
    Ok(col[(m.rows() - 1) / 2])
}

#[cfg(test)]
mod tests {
    use super::*;

    fn naive_matmul(a: &Matrix, b: &Matrix) -> Matrix {
        // Independent triple-loop oracle.
        let mut out = Matrix::zeros(a.rows(), b.cols());
        for i in 0..a.rows() {
            for j in 0..b.cols() {
                let mut acc = 0.0;
                for k in 0..a.cols() {
                    acc += a.get(i, k) * b.get(k, j);
                }
                out.set(i, j, acc);
            }
        }
        out
    }

    #[test]
    fn matmul_identity() {
        let eye = Matrix::from_rows(&[vec![1.0, 0.0], vec![0.0, 1.0]]).unwrap();
        let m = Matrix::from_rows(&[vec![1.0, 2.0], vec![3.0, 4.0]]).unwrap();
        assert_eq!(eye.matmul(&m).unwrap(), m);
    }

    #[test]
    fn matmul_dot_product() {
        let a = Matrix::from_rows(&[vec![1.0, 2.0]]).unwrap();
        let b = Matrix::from_rows(&[vec![3.0], vec![4.0]]).unwrap();
        let prod = a.matmul(&b).unwrap();
        assert_eq!(prod.rows(), 1);
        assert_eq!(prod.cols(), 1);
        assert_eq!(prod.get(0, 0), 11.0);
    }

    #[test]
    fn matmul_matches_triple_loop_oracle() {
        let mut rng = RngStream::new(7);
        let a = uniform_matrix(5, 4, &mut rng).unwrap();
        let b = uniform_matrix(4, 3, &mut rng).unwrap();
        let fast = a.matmul(&b).unwrap();
        let slow = naive_matmul(&a, &b);
        for i in 0..5 {
            for j in 0..3 {
                assert!((fast.get(i, j) - slow.get(i, j)).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn matmul_shape_error_names_both_shapes() {
        let a = Matrix::zeros(2, 3);
        let b = Matrix::zeros(2, 3);
        let err = a.matmul(&b).unwrap_err();
        let msg = err.to_string();
        assert!(msg.contains("2x3"), "{msg}");
    }

    #[test]
    fn matmul_associative_on_random_triples() {
        let mut rng = RngStream::new(11);
        for _ in 0..10 {
            let a = uniform_matrix(4, 5, &mut rng).unwrap();
            let b = uniform_matrix(5, 3, &mut rng).unwrap();
            let c = uniform_matrix(3, 6, &mut rng).unwrap();
            let left = a.matmul(&b).unwrap().matmul(&c).unwrap();
            let right = a.matmul(&b.matmul(&c).unwrap()).unwrap();
            for i in 0..left.rows() {
                for j in 0..left.cols() {
                    let l = left.get(i, j);
                    let r = right.get(i, j);
                    assert!((l - r).abs() <= 1e-9 * l.abs().max(r.abs()).max(1.0));
                }
            }
        }
    }

    #[test]
    fn uniform_matrix_range_and_determinism() {
        let mut rng = RngStream::new(3);
        let single = uniform_matrix(1, 1, &mut rng).unwrap();
        let v = single.get(0, 0);
        assert!((0.0..1.0).contains(&v));

        let a = uniform_matrix(4, 4, &mut RngStream::new(42)).unwrap();
        let b = uniform_matrix(4, 4, &mut RngStream::new(42)).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn uniform_matrix_sample_mean() {
        let m = uniform_matrix(10_000, 10, &mut RngStream::new(5)).unwrap();
        let mean: f64 = m.values().iter().sum::<f64>() / m.values().len() as f64;
        assert!((0.49..=0.51).contains(&mean), "mean {mean}");
    }

    #[test]
    fn uniform_matrix_rejects_zero_dims() {
        assert!(uniform_matrix(0, 3, &mut RngStream::new(1)).is_err());
        assert!(uniform_matrix(3, 0, &mut RngStream::new(1)).is_err());
    }

    #[test]
    fn child_streams_are_decorrelated() {
        let root = RngStream::new(99);
        let mut a = root.child("left");
        let mut b = root.child("right");
        let n = 100_000;
        let xs: Vec<f64> = (0..n).map(|_| a.uniform_f64()).collect();
        let ys: Vec<f64> = (0..n).map(|_| b.uniform_f64()).collect();
        let mx = xs.iter().sum::<f64>() / n as f64;
        let my = ys.iter().sum::<f64>() / n as f64;
        let mut cov = 0.0;
        let mut vx = 0.0;
        let mut vy = 0.0;
        for (x, y) in xs.iter().zip(&ys) {
            cov += (x - mx) * (y - my);
            vx += (x - mx).powi(2);
            vy += (y - my).powi(2);
        }
        let corr = cov / (vx.sqrt() * vy.sqrt());
        assert!(corr.abs() < 0.02, "correlation {corr}");
    }

    #[test]
    fn child_streams_independent_of_parent_draw_order() {
        let mut parent = RngStream::new(7);
        let before = parent.child("x");
        for _ in 0..1000 {
            parent.next_u64();
        }
        let after = parent.child("x");
        let mut a = before.clone();
        let mut b = after.clone();
        for _ in 0..16 {
            assert_eq!(a.next_u64(), b.next_u64());
        }
    }

    #[test]
    fn column_median_odd_and_even() {
        let m = Matrix::from_rows(&[vec![3.0], vec![1.0], vec![2.0]]).unwrap();
        assert_eq!(column_median(&m, 0).unwrap(), 2.0);
        let m = Matrix::from_rows(&[vec![4.0], vec![1.0], vec![3.0], vec![2.0]]).unwrap();
        assert_eq!(column_median(&m, 0).unwrap(), 2.0);
    }

    #[test]
    fn column_median_matches_sort_oracle_and_permutation_invariant() {
        let mut rng = RngStream::new(13);
        let m = uniform_matrix(1000, 1, &mut rng).unwrap();
        let mut sorted: Vec<f64> = m.values().to_vec();
        sorted.sort_by(|a, b| a.partial_cmp(b).unwrap());
        let expect = sorted[(1000 - 1) / 2];
        assert_eq!(column_median(&m, 0).unwrap(), expect);

        let mut perm: Vec<f64> = m.values().to_vec();
        rng.shuffle(&mut perm);
        let pm = Matrix::from_vec(1000, 1, perm).unwrap();
        assert_eq!(column_median(&pm, 0).unwrap(), expect);
    }

    #[test]
    fn column_median_index_error() {
        let m = Matrix::zeros(2, 2);
        assert!(column_median(&m, 5).is_err());
    }

    #[test]
    fn sample_indices_distinct() {
        let mut rng = RngStream::new(21);
        let picks = rng.sample_indices(10, 10);
        let mut sorted = picks.clone();
        sorted.sort_unstable();
        assert_eq!(sorted, (0..10).collect::<Vec<_>>());
    }
}
