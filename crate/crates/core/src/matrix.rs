//! Dense row-major `f64` matrices.
//!
//! This is the only numeric container in the crate. Shapes are validated with
//! `assert!` because a mismatch at this level is a programmer error; the public
//! operations built on top validate their inputs and return `Result` instead.

use serde::{Deserialize, Serialize};

/// A dense matrix of 64-bit floats in row-major layout.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Matrix2D {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl Matrix2D {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Matrix2D {
            rows,
            cols,
            data: vec![0.0; rows * cols],
        }
    }

    /// Builds a matrix from a row-major slice of `rows * cols` entries.
    pub fn from_flat(rows: usize, cols: usize, data: Vec<f64>) -> Self {
        assert_eq!(
            data.len(),
            rows * cols,
            "flat data length {} does not match {}x{}",
            data.len(),
            rows,
            cols
        );
        Matrix2D { rows, cols, data }
    }

    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> f64) -> Self {
        let mut data = Vec::with_capacity(rows * cols);
        for r in 0..rows {
            for c in 0..cols {
                data.push(f(r, c));
            }
        }
        Matrix2D { rows, cols, data }
    }

    /// Stacks row vectors; all rows must share a length.
    pub fn from_rows(rows: &[Vec<f64>]) -> Self {
        assert!(!rows.is_empty(), "from_rows needs at least one row");
        let cols = rows[0].len();
        let mut data = Vec::with_capacity(rows.len() * cols);
        for row in rows {
            assert_eq!(row.len(), cols, "ragged rows: {} vs {}", row.len(), cols);
            data.extend_from_slice(row);
        }
        Matrix2D {
            rows: rows.len(),
            cols,
            data,
        }
    }

    #[inline]
    pub fn rows(&self) -> usize {
        self.rows
    }

    #[inline]
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
        self.data[r * self.cols + c] = v;
    }

    #[inline]
    pub fn row(&self, r: usize) -> &[f64] {
        &self.data[r * self.cols..(r + 1) * self.cols]
    }

    #[inline]
    pub fn row_mut(&mut self, r: usize) -> &mut [f64] {
        &mut self.data[r * self.cols..(r + 1) * self.cols]
    }

    #[inline]
    pub fn data(&self) -> &[f64] {
        &self.data
    }

    #[inline]
    pub fn data_mut(&mut self) -> &mut [f64] {
        &mut self.data
    }

    pub fn column(&self, c: usize) -> Vec<f64> {
        assert!(c < self.cols);
        (0..self.rows).map(|r| self.get(r, c)).collect()
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|v| v.is_finite())
    }

    /// `self * rhs`, shapes `(m x k) * (k x n) -> (m x n)`.
    pub fn matmul(&self, rhs: &Matrix2D) -> Matrix2D {
        assert_eq!(
            self.cols, rhs.rows,
            "matmul shape mismatch: {}x{} * {}x{}",
            self.rows, self.cols, rhs.rows, rhs.cols
        );
        let mut out = Matrix2D::zeros(self.rows, rhs.cols);
        gemm(
            self.rows, self.cols, rhs.cols,
            &self.data, self.cols as isize, 1,
            &rhs.data, rhs.cols as isize, 1,
            &mut out.data,
        );
        out
    }

    /// `self^T * rhs`, shapes `(k x m)^T * (k x n) -> (m x n)`.
    pub fn t_matmul(&self, rhs: &Matrix2D) -> Matrix2D {
        assert_eq!(
            self.rows, rhs.rows,
            "t_matmul shape mismatch: ({}x{})^T * {}x{}",
            self.rows, self.cols, rhs.rows, rhs.cols
        );
        let mut out = Matrix2D::zeros(self.cols, rhs.cols);
        gemm(
            self.cols, self.rows, rhs.cols,
            &self.data, 1, self.cols as isize,
            &rhs.data, rhs.cols as isize, 1,
            &mut out.data,
        );
        out
    }

    /// `self * rhs^T`, shapes `(m x k) * (n x k)^T -> (m x n)`.
    pub fn matmul_t(&self, rhs: &Matrix2D) -> Matrix2D {
        assert_eq!(
            self.cols, rhs.cols,
            "matmul_t shape mismatch: {}x{} * ({}x{})^T",
            self.rows, self.cols, rhs.rows, rhs.cols
        );
        let mut out = Matrix2D::zeros(self.rows, rhs.rows);
        gemm(
            self.rows, self.cols, rhs.rows,
            &self.data, self.cols as isize, 1,
            &rhs.data, 1, rhs.cols as isize,
            &mut out.data,
        );
        out
    }

    /// Per-row maximum, one value per row.
    pub fn row_max(&self) -> Vec<f64> {
        (0..self.rows)
            .map(|r| {
                self.row(r)
                    .iter()
                    .copied()
                    .fold(f64::NEG_INFINITY, f64::max)
            })
            .collect()
    }
}

#[allow(clippy::too_many_arguments)]
fn gemm(
    m: usize,
    k: usize,
    n: usize,
    a: &[f64],
    a_rs: isize,
    a_cs: isize,
    b: &[f64],
    b_rs: isize,
    b_cs: isize,
    c: &mut [f64],
) {
    // c is freshly zeroed by the callers, beta = 0 overwrites it.
    unsafe {
        matrixmultiply::dgemm(
            m, k, n,
            1.0,
            a.as_ptr(), a_rs, a_cs,
            b.as_ptr(), b_rs, b_cs,
            0.0,
            c.as_mut_ptr(), n as isize, 1,
        );
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    /// Independent triple-loop product used as the oracle for the gemm paths.
    pub(crate) fn matmul_oracle(a: &Matrix2D, b: &Matrix2D) -> Matrix2D {
        let mut out = Matrix2D::zeros(a.rows(), b.cols());
        for i in 0..a.rows() {
            for j in 0..b.cols() {
                let mut acc = 0.0;
                for l in 0..a.cols() {
                    acc += a.get(i, l) * b.get(l, j);
                }
                out.set(i, j, acc);
            }
        }
        out
    }

    fn random_matrix(rows: usize, cols: usize, seed: u64) -> Matrix2D {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha12Rng::seed_from_u64(seed);
        Matrix2D::from_fn(rows, cols, |_, _| rng.gen_range(-1.0..1.0))
    }

    fn assert_matrix_close(a: &Matrix2D, b: &Matrix2D, tol: f64) {
        assert_eq!(a.rows(), b.rows());
        assert_eq!(a.cols(), b.cols());
        for (x, y) in a.data().iter().zip(b.data()) {
            let scale = x.abs().max(y.abs()).max(1.0);
            assert!(
                (x - y).abs() <= tol * scale,
                "entries differ: {x} vs {y}"
            );
        }
    }

    #[test]
    fn matmul_matches_triple_loop_oracle() {
        let a = random_matrix(7, 13, 1);
        let b = random_matrix(13, 5, 2);
        assert_matrix_close(&a.matmul(&b), &matmul_oracle(&a, &b), 1e-13);
    }

    #[test]
    fn transposed_products_match_explicit_transpose() {
        let a = random_matrix(9, 4, 3);
        let b = random_matrix(9, 6, 4);
        let at = Matrix2D::from_fn(4, 9, |r, c| a.get(c, r));
        assert_matrix_close(&a.t_matmul(&b), &matmul_oracle(&at, &b), 1e-13);

        let c = random_matrix(5, 8, 5);
        let d = random_matrix(3, 8, 6);
        let dt = Matrix2D::from_fn(8, 3, |r, c| d.get(c, r));
        assert_matrix_close(&c.matmul_t(&d), &matmul_oracle(&c, &dt), 1e-13);
    }

    #[test]
    #[should_panic(expected = "matmul shape mismatch")]
    fn matmul_panics_on_shape_mismatch() {
        let a = Matrix2D::zeros(2, 3);
        let b = Matrix2D::zeros(2, 3);
        let _ = a.matmul(&b);
    }

    #[test]
    fn row_max_and_finite_checks() {
        let m = Matrix2D::from_rows(&[vec![1.0, -2.0, 0.5], vec![-4.0, -5.0, -6.0]]);
        assert_eq!(m.row_max(), vec![1.0, -4.0]);
        assert!(m.is_finite());
        let mut n = m.clone();
        n.set(0, 0, f64::NAN);
        assert!(!n.is_finite());
    }
}
