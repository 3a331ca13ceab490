use std::fmt::Write as _;

use crate::scalar::Real;

/// Compressed sparse row matrix with sorted column indices.
#[derive(Debug, Clone)]
pub struct CsrMatrix<T> {
    n: usize,
    row_ptr: Vec<usize>,
    cols: Vec<usize>,
    vals: Vec<T>,
}

impl<T: Real> CsrMatrix<T> {
    /// Builds an all-zero matrix with the given sorted, deduplicated row patterns.
    pub fn with_pattern(rows: Vec<Vec<usize>>) -> Self {
        let n = rows.len();
        let mut row_ptr = Vec::with_capacity(n + 1);
        row_ptr.push(0);
        let mut cols = Vec::new();
        for r in rows {
            debug_assert!(r.windows(2).all(|w| w[0] < w[1]));
            cols.extend(r);
            row_ptr.push(cols.len());
        }
        let nnz = cols.len();
        CsrMatrix { n, row_ptr, cols, vals: vec![T::zero(); nnz] }
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn nnz(&self) -> usize {
        self.cols.len()
    }

    pub fn row(&self, i: usize) -> (&[usize], &[T]) {
        let (a, b) = (self.row_ptr[i], self.row_ptr[i + 1]);
        (&self.cols[a..b], &self.vals[a..b])
    }

    /// Adds `v` to entry `(i, j)`, which must be in the pattern.
    pub fn add_to(&mut self, i: usize, j: usize, v: T) {
        let (a, b) = (self.row_ptr[i], self.row_ptr[i + 1]);
        let pos = self.cols[a..b]
            .iter()
            .position(|&c| c == j)
            .expect("entry outside sparsity pattern");
        self.vals[a + pos] += v;
    }

    pub fn get(&self, i: usize, j: usize) -> T {
        let (cols, vals) = self.row(i);
        cols.iter().position(|&c| c == j).map_or(T::zero(), |p| vals[p])
    }

    pub fn diagonal(&self) -> Vec<T> {
        (0..self.n).map(|i| self.get(i, i)).collect()
    }

    pub fn matvec(&self, x: &[T], y: &mut [T]) {
        for i in 0..self.n {
            let (a, b) = (self.row_ptr[i], self.row_ptr[i + 1]);
            let mut s = T::zero();
            for k in a..b {
                s += self.vals[k] * x[self.cols[k]];
            }
            y[i] = s;
        }
    }

    /// `xᵀ A x`.
    pub fn quadratic_form(&self, x: &[T]) -> T {
        let mut y = vec![T::zero(); self.n];
        self.matvec(x, &mut y);
        crate::scalar::dot(x, &y)
    }

    /// Largest `|A_ij − A_ji|`.
    pub fn asymmetry(&self) -> T {
        let mut worst = T::zero();
        for i in 0..self.n {
            let (cols, vals) = self.row(i);
            for (&j, &v) in cols.iter().zip(vals) {
                worst = worst.max((v - self.get(j, i)).abs());
            }
        }
        worst
    }

    /// Coordinate text export: one `row col value` line per stored entry,
    /// 0-based indices, values with 17 significant digits.
    pub fn to_coordinate_text(&self) -> String {
        let mut out = String::new();
        for i in 0..self.n {
            let (cols, vals) = self.row(i);
            for (&j, &v) in cols.iter().zip(vals) {
                let _ = writeln!(out, "{i} {j} {:.16e}", v.as_f64());
            }
        }
        out
    }
}
