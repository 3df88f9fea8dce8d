//! Minimal compressed-sparse-row matrix for Fock-space operators.

use nalgebra::{DMatrix, DVector};

#[derive(Debug, Clone, PartialEq)]
pub struct SparseMatrix {
    pub rows: usize,
    pub cols: usize,
    pub indptr: Vec<usize>,
    pub indices: Vec<usize>,
    pub data: Vec<f64>,
}

impl SparseMatrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self {
            rows,
            cols,
            indptr: vec![0; rows + 1],
            indices: Vec::new(),
            data: Vec::new(),
        }
    }

    pub fn identity(n: usize) -> Self {
        Self::diagonal(&vec![1.0; n])
    }

    pub fn diagonal(d: &[f64]) -> Self {
        let n = d.len();
        Self {
            rows: n,
            cols: n,
            indptr: (0..=n).collect(),
            indices: (0..n).collect(),
            data: d.to_vec(),
        }
    }

    /// Builds from `(row, col, value)` triplets; duplicates are summed, exact zeros dropped.
    pub fn from_triplets(rows: usize, cols: usize, mut t: Vec<(usize, usize, f64)>) -> Self {
        t.sort_by_key(|a| (a.0, a.1));
        let mut indptr = vec![0; rows + 1];
        let mut indices = Vec::with_capacity(t.len());
        let mut data: Vec<f64> = Vec::with_capacity(t.len());
        let mut last: Option<(usize, usize)> = None;
        for (r, c, v) in t {
            if last == Some((r, c)) {
                *data.last_mut().unwrap() += v;
            } else {
                indices.push(c);
                data.push(v);
                indptr[r + 1] += 1;
                last = Some((r, c));
            }
        }
        for r in 0..rows {
            indptr[r + 1] += indptr[r];
        }
        let mut m = Self {
            rows,
            cols,
            indptr,
            indices,
            data,
        };
        m.prune();
        m
    }

    fn prune(&mut self) {
        let mut t = Vec::with_capacity(self.data.len());
        for r in 0..self.rows {
            for p in self.indptr[r]..self.indptr[r + 1] {
                if self.data[p] != 0.0 {
                    t.push((r, self.indices[p], self.data[p]));
                }
            }
        }
        if t.len() == self.data.len() {
            return;
        }
        let mut indptr = vec![0; self.rows + 1];
        for &(r, _, _) in &t {
            indptr[r + 1] += 1;
        }
        for r in 0..self.rows {
            indptr[r + 1] += indptr[r];
        }
        self.indptr = indptr;
        self.indices = t.iter().map(|x| x.1).collect();
        self.data = t.iter().map(|x| x.2).collect();
    }

    pub fn triplets(&self) -> impl Iterator<Item = (usize, usize, f64)> + '_ {
        (0..self.rows).flat_map(move |r| {
            (self.indptr[r]..self.indptr[r + 1]).map(move |p| (r, self.indices[p], self.data[p]))
        })
    }

    pub fn nnz(&self) -> usize {
        self.data.len()
    }

    pub fn get(&self, r: usize, c: usize) -> f64 {
        (self.indptr[r]..self.indptr[r + 1])
            .find(|&p| self.indices[p] == c)
            .map_or(0.0, |p| self.data[p])
    }

    pub fn transpose(&self) -> Self {
        Self::from_triplets(
            self.cols,
            self.rows,
            self.triplets().map(|(r, c, v)| (c, r, v)).collect(),
        )
    }

    pub fn scale(&self, s: f64) -> Self {
        let mut m = self.clone();
        m.data.iter_mut().for_each(|v| *v *= s);
        m.prune();
        m
    }

    pub fn add(&self, other: &Self) -> Self {
        assert_eq!((self.rows, self.cols), (other.rows, other.cols));
        Self::from_triplets(
            self.rows,
            self.cols,
            self.triplets().chain(other.triplets()).collect(),
        )
    }

    pub fn sub(&self, other: &Self) -> Self {
        self.add(&other.scale(-1.0))
    }

    pub fn matmul(&self, other: &Self) -> Self {
        assert_eq!(self.cols, other.rows);
        let mut t = Vec::new();
        let mut acc = vec![0.0; other.cols];
        let mut touched = Vec::new();
        for r in 0..self.rows {
            for p in self.indptr[r]..self.indptr[r + 1] {
                let (k, a) = (self.indices[p], self.data[p]);
                for q in other.indptr[k]..other.indptr[k + 1] {
                    let c = other.indices[q];
                    if acc[c] == 0.0 {
                        touched.push(c);
                    }
                    acc[c] += a * other.data[q];
                }
            }
            touched.sort_unstable();
            touched.dedup();
            for &c in &touched {
                t.push((r, c, acc[c]));
                acc[c] = 0.0;
            }
            touched.clear();
        }
        Self::from_triplets(self.rows, other.cols, t)
    }

    pub fn commutator(&self, other: &Self) -> Self {
        self.matmul(other).sub(&other.matmul(self))
    }

    pub fn mul_vec(&self, x: &DVector<f64>) -> DVector<f64> {
        DVector::from_fn(self.rows, |r, _| {
            (self.indptr[r]..self.indptr[r + 1])
                .map(|p| self.data[p] * x[self.indices[p]])
                .sum()
        })
    }

    /// `X M^T` for a dense `X` whose columns are indexed like the columns of `M`.
    pub fn right_apply_transposed(&self, x: &DMatrix<f64>) -> DMatrix<f64> {
        assert_eq!(x.ncols(), self.cols);
        let mut out = DMatrix::zeros(x.nrows(), self.rows);
        for r in 0..self.rows {
            let mut col = out.column_mut(r);
            for p in self.indptr[r]..self.indptr[r + 1] {
                col.axpy(self.data[p], &x.column(self.indices[p]), 1.0);
            }
        }
        out
    }

    /// `M X` for dense `X`.
    pub fn mul_dense(&self, x: &DMatrix<f64>) -> DMatrix<f64> {
        self.right_apply_transposed(&x.transpose()).transpose()
    }

    pub fn to_dense(&self) -> DMatrix<f64> {
        let mut d = DMatrix::zeros(self.rows, self.cols);
        for (r, c, v) in self.triplets() {
            d[(r, c)] += v;
        }
        d
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    pub fn is_symmetric(&self, tol: f64) -> bool {
        self.sub(&self.transpose()).max_abs() <= tol
    }
}
