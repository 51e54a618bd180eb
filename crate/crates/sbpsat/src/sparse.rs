//! Compressed sparse row matrices with the handful of operations the assembly needs.

use ndarray::Array2;

/// Real CSR matrix. Column indices are sorted within each row and duplicates are summed.
#[derive(Clone, Debug, PartialEq)]
pub struct CsrMatrix {
    nrows: usize,
    ncols: usize,
    indptr: Vec<usize>,
    indices: Vec<usize>,
    values: Vec<f64>,
}

/// Accumulates `(row, col, value)` entries before compressing.
#[derive(Clone, Debug)]
pub struct TripletBuilder {
    nrows: usize,
    ncols: usize,
    entries: Vec<(usize, usize, f64)>,
}

impl TripletBuilder {
    pub fn new(nrows: usize, ncols: usize) -> Self {
        Self { nrows, ncols, entries: Vec::new() }
    }

    pub fn push(&mut self, row: usize, col: usize, value: f64) {
        debug_assert!(row < self.nrows && col < self.ncols);
        if value != 0.0 {
            self.entries.push((row, col, value));
        }
    }

    /// Adds `scale * m` with its top-left corner at `(row_off, col_off)`.
    pub fn add_block(&mut self, row_off: usize, col_off: usize, m: &CsrMatrix, scale: f64) {
        for (i, j, v) in m.iter() {
            self.push(row_off + i, col_off + j, scale * v);
        }
    }

    pub fn build(self) -> CsrMatrix {
        CsrMatrix::from_triplets(self.nrows, self.ncols, self.entries)
    }
}

impl CsrMatrix {
    pub fn zeros(nrows: usize, ncols: usize) -> Self {
        Self { nrows, ncols, indptr: vec![0; nrows + 1], indices: Vec::new(), values: Vec::new() }
    }

    pub fn identity(n: usize) -> Self {
        Self::diag(&vec![1.0; n])
    }

    pub fn diag(d: &[f64]) -> Self {
        let n = d.len();
        Self { nrows: n, ncols: n, indptr: (0..=n).collect(), indices: (0..n).collect(), values: d.to_vec() }
    }

    pub fn from_triplets(nrows: usize, ncols: usize, mut entries: Vec<(usize, usize, f64)>) -> Self {
        entries.sort_unstable_by_key(|e| (e.0, e.1));
        let mut indptr = vec![0usize; nrows + 1];
        let mut indices = Vec::with_capacity(entries.len());
        let mut values: Vec<f64> = Vec::with_capacity(entries.len());
        let mut last: Option<(usize, usize)> = None;
        for (i, j, v) in entries {
            assert!(i < nrows && j < ncols, "triplet ({i},{j}) outside {nrows}x{ncols}");
            if last == Some((i, j)) {
                *values.last_mut().unwrap() += v;
            } else {
                indices.push(j);
                values.push(v);
                indptr[i + 1] += 1;
                last = Some((i, j));
            }
        }
        for i in 0..nrows {
            indptr[i + 1] += indptr[i];
        }
        Self { nrows, ncols, indptr, indices, values }
    }

    pub fn from_dense(a: &Array2<f64>) -> Self {
        let mut b = TripletBuilder::new(a.nrows(), a.ncols());
        for ((i, j), &v) in a.indexed_iter() {
            b.push(i, j, v);
        }
        b.build()
    }

    pub fn nrows(&self) -> usize {
        self.nrows
    }

    pub fn ncols(&self) -> usize {
        self.ncols
    }

    pub fn nnz(&self) -> usize {
        self.values.len()
    }

    pub fn row(&self, i: usize) -> (&[usize], &[f64]) {
        let (a, b) = (self.indptr[i], self.indptr[i + 1]);
        (&self.indices[a..b], &self.values[a..b])
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        let (idx, val) = self.row(i);
        match idx.binary_search(&j) {
            Ok(k) => val[k],
            Err(_) => 0.0,
        }
    }

    /// Iterates stored entries as `(row, col, value)`.
    pub fn iter(&self) -> impl Iterator<Item = (usize, usize, f64)> + '_ {
        (0..self.nrows).flat_map(move |i| {
            let (idx, val) = self.row(i);
            idx.iter().zip(val).map(move |(&j, &v)| (i, j, v))
        })
    }

    pub fn to_dense(&self) -> Array2<f64> {
        let mut a = Array2::zeros((self.nrows, self.ncols));
        for (i, j, v) in self.iter() {
            a[[i, j]] += v;
        }
        a
    }

    /// `y = A x`.
    pub fn matvec_into(&self, x: &[f64], y: &mut [f64]) {
        assert_eq!(x.len(), self.ncols);
        assert_eq!(y.len(), self.nrows);
        for (i, yi) in y.iter_mut().enumerate() {
            let (a, b) = (self.indptr[i], self.indptr[i + 1]);
            let mut s = 0.0;
            for k in a..b {
                s += self.values[k] * x[self.indices[k]];
            }
            *yi = s;
        }
    }

    pub fn matvec(&self, x: &[f64]) -> Vec<f64> {
        let mut y = vec![0.0; self.nrows];
        self.matvec_into(x, &mut y);
        y
    }

    pub fn transpose(&self) -> Self {
        let entries = self.iter().map(|(i, j, v)| (j, i, v)).collect();
        Self::from_triplets(self.ncols, self.nrows, entries)
    }

    pub fn scale(&self, s: f64) -> Self {
        let mut m = self.clone();
        m.values.iter_mut().for_each(|v| *v *= s);
        m
    }

    /// `diag(d) * A`.
    pub fn scale_rows(&self, d: &[f64]) -> Self {
        assert_eq!(d.len(), self.nrows);
        let mut m = self.clone();
        for (i, &di) in d.iter().enumerate() {
            for k in m.indptr[i]..m.indptr[i + 1] {
                m.values[k] *= di;
            }
        }
        m
    }

    /// `A * diag(d)`.
    pub fn scale_cols(&self, d: &[f64]) -> Self {
        assert_eq!(d.len(), self.ncols);
        let mut m = self.clone();
        for k in 0..m.values.len() {
            m.values[k] *= d[m.indices[k]];
        }
        m
    }

    pub fn add(&self, other: &Self) -> Self {
        assert_eq!((self.nrows, self.ncols), (other.nrows, other.ncols));
        let entries = self.iter().chain(other.iter()).collect();
        Self::from_triplets(self.nrows, self.ncols, entries)
    }

    pub fn sub(&self, other: &Self) -> Self {
        self.add(&other.scale(-1.0))
    }

    /// Sparse product `A * B`.
    pub fn matmul(&self, other: &Self) -> Self {
        assert_eq!(self.ncols, other.nrows, "inner dimensions differ");
        let mut indptr = vec![0usize; self.nrows + 1];
        let mut indices = Vec::new();
        let mut values = Vec::new();
        let mut acc = vec![0.0; other.ncols];
        let mut mark = vec![usize::MAX; other.ncols];
        let mut cols: Vec<usize> = Vec::new();
        for i in 0..self.nrows {
            cols.clear();
            let (ai, av) = self.row(i);
            for (&k, &a) in ai.iter().zip(av) {
                let (bj, bv) = other.row(k);
                for (&j, &b) in bj.iter().zip(bv) {
                    if mark[j] != i {
                        mark[j] = i;
                        acc[j] = 0.0;
                        cols.push(j);
                    }
                    acc[j] += a * b;
                }
            }
            cols.sort_unstable();
            for &j in &cols {
                indices.push(j);
                values.push(acc[j]);
            }
            indptr[i + 1] = indices.len();
        }
        Self { nrows: self.nrows, ncols: other.ncols, indptr, indices, values }
    }

    /// Kronecker product `A ⊗ B`.
    pub fn kron(&self, other: &Self) -> Self {
        let mut b = TripletBuilder::new(self.nrows * other.nrows, self.ncols * other.ncols);
        for (i, j, v) in self.iter() {
            for (k, l, w) in other.iter() {
                b.push(i * other.nrows + k, j * other.ncols + l, v * w);
            }
        }
        b.build()
    }

    /// Rows `rows` and columns `cols` as a new matrix.
    pub fn submatrix(&self, rows: std::ops::Range<usize>, cols: std::ops::Range<usize>) -> Self {
        let mut b = TripletBuilder::new(rows.len(), cols.len());
        for i in rows.clone() {
            let (idx, val) = self.row(i);
            for (&j, &v) in idx.iter().zip(val) {
                if cols.contains(&j) {
                    b.push(i - rows.start, j - cols.start, v);
                }
            }
        }
        b.build()
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    /// Largest entry of `|A - Aᵀ|`.
    pub fn asymmetry(&self) -> f64 {
        assert_eq!(self.nrows, self.ncols);
        self.sub(&self.transpose()).max_abs()
    }

    /// Writes `row col value` triplets (0-based), one per line.
    pub fn write_triplets<W: std::io::Write>(&self, mut w: W) -> std::io::Result<()> {
        writeln!(w, "# {} {} {}", self.nrows, self.ncols, self.nnz())?;
        for (i, j, v) in self.iter() {
            writeln!(w, "{i} {j} {v:.17e}")?;
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::array;

    #[test]
    fn triplets_sum_duplicates() {
        let m = CsrMatrix::from_triplets(2, 2, vec![(0, 1, 1.0), (0, 1, 2.0), (1, 0, -1.0)]);
        assert_eq!(m.get(0, 1), 3.0);
        assert_eq!(m.nnz(), 2);
    }

    #[test]
    fn products_match_dense() {
        let a = array![[1.0, 2.0, 0.0], [0.0, -1.0, 4.0]];
        let b = array![[1.0, 0.0], [3.0, 1.0], [0.0, 2.0]];
        let sa = CsrMatrix::from_dense(&a);
        let sb = CsrMatrix::from_dense(&b);
        assert_eq!(sa.matmul(&sb).to_dense(), a.dot(&b));
        assert_eq!(sa.transpose().to_dense(), a.t().to_owned());
        assert_eq!(sa.matvec(&[1.0, 1.0, 1.0]), vec![3.0, 3.0]);
        let k = sa.kron(&sb).to_dense();
        assert_eq!(k.dim(), (6, 6));
        assert_eq!(k[[1, 1]], a[[0, 0]] * b[[1, 1]]);
        assert_eq!(k[[4, 5]], a[[1, 2]] * b[[1, 1]]);
    }

    #[test]
    fn scaling_and_submatrix() {
        let a = CsrMatrix::from_dense(&array![[1.0, 2.0], [3.0, 4.0]]);
        assert_eq!(a.scale_rows(&[2.0, 1.0]).to_dense(), array![[2.0, 4.0], [3.0, 4.0]]);
        assert_eq!(a.scale_cols(&[2.0, 1.0]).to_dense(), array![[2.0, 2.0], [6.0, 4.0]]);
        assert_eq!(a.submatrix(1..2, 0..2).to_dense(), array![[3.0, 4.0]]);
        assert_eq!(a.asymmetry(), 1.0);
    }
}
