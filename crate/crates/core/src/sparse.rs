//! Minimal compressed-sparse-row matrices over `Complex64`.
//!
//! The operator matrices here are small (desk scale is a few thousand rows)
//! but far from dense, and the verification suite needs exact, reproducible
//! entry arithmetic: triplets are summed in a fixed order, rows keep their
//! columns sorted, and no iteration order depends on hashing.

use nalgebra::DMatrix;
use num_complex::Complex64;

#[derive(Debug, Clone, PartialEq)]
pub struct CsrMatrix {
    nrows: usize,
    ncols: usize,
    row_ptr: Vec<usize>,
    cols: Vec<usize>,
    vals: Vec<Complex64>,
}

impl CsrMatrix {
    pub fn zeros(nrows: usize, ncols: usize) -> Self {
        CsrMatrix { nrows, ncols, row_ptr: vec![0; nrows + 1], cols: Vec::new(), vals: Vec::new() }
    }

    pub fn identity(n: usize) -> Self {
        CsrMatrix {
            nrows: n,
            ncols: n,
            row_ptr: (0..=n).collect(),
            cols: (0..n).collect(),
            vals: vec![Complex64::new(1.0, 0.0); n],
        }
    }

    pub fn from_diagonal(diag: &[Complex64]) -> Self {
        let triplets = diag
            .iter()
            .enumerate()
            .filter(|(_, v)| **v != Complex64::ZERO)
            .map(|(i, v)| (i, i, *v))
            .collect();
        Self::from_triplets(diag.len(), diag.len(), triplets)
    }

    /// Builds from (row, col, value) triplets; duplicates are summed in
    /// (row, col) order, exact zeros after summation are dropped.
    pub fn from_triplets(nrows: usize, ncols: usize, mut t: Vec<(usize, usize, Complex64)>) -> Self {
        t.sort_by_key(|&(r, c, _)| (r, c));
        let mut entries: Vec<(usize, usize, Complex64)> = Vec::with_capacity(t.len());
        for (r, c, v) in t {
            assert!(r < nrows && c < ncols, "triplet ({r}, {c}) outside {nrows}x{ncols}");
            match entries.last_mut() {
                Some((lr, lc, lv)) if *lr == r && *lc == c => *lv += v,
                _ => entries.push((r, c, v)),
            }
        }
        entries.retain(|&(_, _, v)| v != Complex64::ZERO);
        let mut row_ptr = vec![0usize; nrows + 1];
        for &(r, _, _) in &entries {
            row_ptr[r + 1] += 1;
        }
        for i in 0..nrows {
            row_ptr[i + 1] += row_ptr[i];
        }
        let cols = entries.iter().map(|e| e.1).collect();
        let vals = entries.iter().map(|e| e.2).collect();
        CsrMatrix { nrows, ncols, row_ptr, cols, vals }
    }

    pub fn nrows(&self) -> usize {
        self.nrows
    }

    pub fn ncols(&self) -> usize {
        self.ncols
    }

    pub fn nnz(&self) -> usize {
        self.vals.len()
    }

    pub fn get(&self, r: usize, c: usize) -> Complex64 {
        let lo = self.row_ptr[r];
        let hi = self.row_ptr[r + 1];
        match self.cols[lo..hi].binary_search(&c) {
            Ok(k) => self.vals[lo + k],
            Err(_) => Complex64::ZERO,
        }
    }

    pub fn iter(&self) -> impl Iterator<Item = (usize, usize, Complex64)> + '_ {
        (0..self.nrows).flat_map(move |r| {
            (self.row_ptr[r]..self.row_ptr[r + 1]).map(move |k| (r, self.cols[k], self.vals[k]))
        })
    }

    pub fn scale(&self, factor: Complex64) -> CsrMatrix {
        let mut out = self.clone();
        for v in &mut out.vals {
            *v *= factor;
        }
        out
    }

    pub fn add(&self, other: &CsrMatrix) -> CsrMatrix {
        assert_eq!((self.nrows, self.ncols), (other.nrows, other.ncols));
        let mut t: Vec<(usize, usize, Complex64)> = self.iter().collect();
        t.extend(other.iter());
        CsrMatrix::from_triplets(self.nrows, self.ncols, t)
    }

    pub fn sub(&self, other: &CsrMatrix) -> CsrMatrix {
        self.add(&other.scale(Complex64::new(-1.0, 0.0)))
    }

    pub fn adjoint(&self) -> CsrMatrix {
        let t = self.iter().map(|(r, c, v)| (c, r, v.conj())).collect();
        CsrMatrix::from_triplets(self.ncols, self.nrows, t)
    }

    pub fn matmul(&self, other: &CsrMatrix) -> CsrMatrix {
        assert_eq!(self.ncols, other.nrows, "inner dimensions must agree");
        let mut t = Vec::new();
        // Row-by-row accumulation keeps the k-summation in ascending column
        // order of the left factor, which makes repeated products bit-stable.
        let mut acc: Vec<Complex64> = vec![Complex64::ZERO; other.ncols];
        let mut touched: Vec<usize> = Vec::new();
        for r in 0..self.nrows {
            for k in self.row_ptr[r]..self.row_ptr[r + 1] {
                let mid = self.cols[k];
                let lv = self.vals[k];
                for j in other.row_ptr[mid]..other.row_ptr[mid + 1] {
                    let c = other.cols[j];
                    if acc[c] == Complex64::ZERO {
                        touched.push(c);
                    }
                    acc[c] += lv * other.vals[j];
                }
            }
            touched.sort_unstable();
            for &c in &touched {
                if acc[c] != Complex64::ZERO {
                    t.push((r, c, acc[c]));
                }
                acc[c] = Complex64::ZERO;
            }
            touched.clear();
        }
        CsrMatrix::from_triplets(self.nrows, other.ncols, t)
    }

    pub fn matvec(&self, x: &[Complex64]) -> Vec<Complex64> {
        assert_eq!(x.len(), self.ncols);
        let mut y = vec![Complex64::ZERO; self.nrows];
        for r in 0..self.nrows {
            let mut acc = Complex64::ZERO;
            for k in self.row_ptr[r]..self.row_ptr[r + 1] {
                acc += self.vals[k] * x[self.cols[k]];
            }
            y[r] = acc;
        }
        y
    }

    pub fn max_abs(&self) -> f64 {
        self.vals.iter().map(|v| v.norm()).fold(0.0, f64::max)
    }

    /// Largest row sum of absolute values; cheap upper bound on the spectral
    /// norm of a Hermitian matrix.
    pub fn inf_norm(&self) -> f64 {
        let mut best = 0.0f64;
        for r in 0..self.nrows {
            let s: f64 = (self.row_ptr[r]..self.row_ptr[r + 1]).map(|k| self.vals[k].norm()).sum();
            best = best.max(s);
        }
        best
    }

    /// `max |A - A^+|` over all entries.
    pub fn hermiticity_residual(&self) -> f64 {
        self.sub(&self.adjoint()).max_abs()
    }

    pub fn max_abs_diff(&self, other: &CsrMatrix) -> f64 {
        self.sub(other).max_abs()
    }

    /// Submatrix on the given row and column index sets (in the given order).
    pub fn restrict(&self, rows: &[usize], cols: &[usize]) -> CsrMatrix {
        let col_pos: std::collections::HashMap<usize, usize> =
            cols.iter().enumerate().map(|(i, &c)| (c, i)).collect();
        let mut t = Vec::new();
        for (new_r, &r) in rows.iter().enumerate() {
            for k in self.row_ptr[r]..self.row_ptr[r + 1] {
                if let Some(&new_c) = col_pos.get(&self.cols[k]) {
                    t.push((new_r, new_c, self.vals[k]));
                }
            }
        }
        CsrMatrix::from_triplets(rows.len(), cols.len(), t)
    }

    pub fn to_dense(&self) -> DMatrix<Complex64> {
        let mut m = DMatrix::zeros(self.nrows, self.ncols);
        for (r, c, v) in self.iter() {
            m[(r, c)] = v;
        }
        m
    }
}
