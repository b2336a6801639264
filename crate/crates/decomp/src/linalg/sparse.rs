use crate::error::{Error, Result};
use crate::linalg::dense::{kahan_sum_of_squares, DenseMatrix};

/// Compressed sparse row matrix.
///
/// Invariants enforced at construction: `row_offsets` has length
/// `rows + 1`, is nondecreasing, and brackets `values`; column indices are
/// strictly increasing within each row and in bounds; no explicit zeros are
/// stored (they are pruned while building).
#[derive(Debug, Clone, PartialEq)]
pub struct CsrMatrix {
    rows: usize,
    cols: usize,
    row_offsets: Vec<usize>,
    col_indices: Vec<usize>,
    values: Vec<f64>,
}

impl CsrMatrix {
    pub fn from_parts(
        rows: usize,
        cols: usize,
        row_offsets: Vec<usize>,
        col_indices: Vec<usize>,
        values: Vec<f64>,
    ) -> Result<Self> {
        if rows == 0 || cols == 0 {
            return Err(Error::InvalidMatrix(format!(
                "dimensions must be positive, got {rows}x{cols}"
            )));
        }
        if row_offsets.len() != rows + 1 {
            return Err(Error::InvalidMatrix(format!(
                "row_offsets length {} != rows + 1 = {}",
                row_offsets.len(),
                rows + 1
            )));
        }
        if row_offsets[0] != 0 || *row_offsets.last().unwrap() != values.len() {
            return Err(Error::InvalidMatrix(
                "row_offsets must start at 0 and end at nnz".into(),
            ));
        }
        if col_indices.len() != values.len() {
            return Err(Error::InvalidMatrix(
                "col_indices and values lengths differ".into(),
            ));
        }
        for w in row_offsets.windows(2) {
            if w[1] < w[0] {
                return Err(Error::InvalidMatrix("row_offsets must be nondecreasing".into()));
            }
        }
        for i in 0..rows {
            let (lo, hi) = (row_offsets[i], row_offsets[i + 1]);
            for k in lo..hi {
                if col_indices[k] >= cols {
                    return Err(Error::InvalidMatrix(format!(
                        "column index {} out of bounds in row {i}",
                        col_indices[k]
                    )));
                }
                if k > lo && col_indices[k] <= col_indices[k - 1] {
                    return Err(Error::InvalidMatrix(format!(
                        "column indices must be strictly increasing within row {i}"
                    )));
                }
            }
        }
        for (k, &v) in values.iter().enumerate() {
            if !v.is_finite() {
                return Err(Error::NonFinite { row: 0, col: col_indices[k], value: v });
            }
        }
        let mut m = CsrMatrix { rows, cols, row_offsets, col_indices, values };
        m.prune_zeros();
        Ok(m)
    }

    /// Build from unordered `(row, col, value)` triplets; duplicates are
    /// summed, zeros (including cancellations) are pruned.
    pub fn from_triplets(
        rows: usize,
        cols: usize,
        triplets: &[(usize, usize, f64)],
    ) -> Result<Self> {
        if rows == 0 || cols == 0 {
            return Err(Error::InvalidMatrix(format!(
                "dimensions must be positive, got {rows}x{cols}"
            )));
        }
        for &(i, j, v) in triplets {
            if i >= rows || j >= cols {
                return Err(Error::InvalidMatrix(format!(
                    "triplet ({i}, {j}) out of bounds for {rows}x{cols}"
                )));
            }
            if !v.is_finite() {
                return Err(Error::NonFinite { row: i, col: j, value: v });
            }
        }
        let mut sorted: Vec<(usize, usize, f64)> = triplets.to_vec();
        sorted.sort_by(|a, b| (a.0, a.1).cmp(&(b.0, b.1)));

        let mut row_offsets = vec![0usize; rows + 1];
        let mut col_indices = Vec::with_capacity(sorted.len());
        let mut values = Vec::with_capacity(sorted.len());
        let mut iter = sorted.into_iter().peekable();
        while let Some((i, j, mut v)) = iter.next() {
            while let Some(&(ni, nj, nv)) = iter.peek() {
                if ni == i && nj == j {
                    v += nv;
                    iter.next();
                } else {
                    break;
                }
            }
            if v != 0.0 {
                col_indices.push(j);
                values.push(v);
                row_offsets[i + 1] += 1;
            }
        }
        for i in 0..rows {
            row_offsets[i + 1] += row_offsets[i];
        }
        Ok(CsrMatrix { rows, cols, row_offsets, col_indices, values })
    }

    pub fn identity(n: usize) -> Self {
        CsrMatrix {
            rows: n,
            cols: n,
            row_offsets: (0..=n).collect(),
            col_indices: (0..n).collect(),
            values: vec![1.0; n],
        }
    }

    fn prune_zeros(&mut self) {
        if !self.values.iter().any(|&v| v == 0.0) {
            return;
        }
        let mut offsets = vec![0usize; self.rows + 1];
        let mut cols = Vec::with_capacity(self.values.len());
        let mut vals = Vec::with_capacity(self.values.len());
        for i in 0..self.rows {
            for k in self.row_offsets[i]..self.row_offsets[i + 1] {
                if self.values[k] != 0.0 {
                    cols.push(self.col_indices[k]);
                    vals.push(self.values[k]);
                    offsets[i + 1] += 1;
                }
            }
        }
        for i in 0..self.rows {
            offsets[i + 1] += offsets[i];
        }
        self.row_offsets = offsets;
        self.col_indices = cols;
        self.values = vals;
    }

    #[inline]
    pub fn rows(&self) -> usize {
        self.rows
    }

    #[inline]
    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn shape(&self) -> (usize, usize) {
        (self.rows, self.cols)
    }

    pub fn nnz(&self) -> usize {
        self.values.len()
    }

    /// All stored values, row-major.
    pub fn values(&self) -> &[f64] {
        &self.values
    }

    /// Column indices and values of row `i`.
    #[inline]
    pub fn row(&self, i: usize) -> (&[usize], &[f64]) {
        let (lo, hi) = (self.row_offsets[i], self.row_offsets[i + 1]);
        (&self.col_indices[lo..hi], &self.values[lo..hi])
    }

    pub fn iter(&self) -> impl Iterator<Item = (usize, usize, f64)> + '_ {
        (0..self.rows).flat_map(move |i| {
            let (cols, vals) = self.row(i);
            cols.iter().zip(vals).map(move |(&j, &v)| (i, j, v))
        })
    }

    pub fn transpose(&self) -> CsrMatrix {
        let mut offsets = vec![0usize; self.cols + 1];
        for &j in &self.col_indices {
            offsets[j + 1] += 1;
        }
        for j in 0..self.cols {
            offsets[j + 1] += offsets[j];
        }
        let mut cursor = offsets.clone();
        let mut cols = vec![0usize; self.nnz()];
        let mut vals = vec![0.0f64; self.nnz()];
        for i in 0..self.rows {
            let (rc, rv) = self.row(i);
            for (&j, &v) in rc.iter().zip(rv) {
                let slot = cursor[j];
                cols[slot] = i;
                vals[slot] = v;
                cursor[j] += 1;
            }
        }
        CsrMatrix {
            rows: self.cols,
            cols: self.rows,
            row_offsets: offsets,
            col_indices: cols,
            values: vals,
        }
    }

    pub fn to_dense(&self) -> DenseMatrix {
        let mut d = DenseMatrix::zeros(self.rows, self.cols);
        for (i, j, v) in self.iter() {
            d[(i, j)] = v;
        }
        d
    }

    pub fn frobenius_norm(&self) -> f64 {
        kahan_sum_of_squares(&self.values).sqrt()
    }
}

/// Which side of the dense operand the sparse matrix multiplies on.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Side {
    Left,
    Right,
}

/// Sparse × dense product in `O(nnz(S) · width(B))`.
///
/// `Left` computes `S·B` (or `Sᵀ·B`), `Right` computes `B·S` (or `B·Sᵀ`).
/// Iteration order is fixed, so results are bit-deterministic.
pub fn spmm(s: &CsrMatrix, b: &DenseMatrix, side: Side, transpose_s: bool) -> Result<DenseMatrix> {
    match (side, transpose_s) {
        (Side::Left, false) => {
            if s.cols != b.rows() {
                return Err(Error::dim("spmm S·B", s.shape(), b.shape()));
            }
            let mut c = DenseMatrix::zeros(s.rows, b.cols());
            for i in 0..s.rows {
                let (cols, vals) = s.row(i);
                let c_row = c.row_mut(i);
                for (&j, &v) in cols.iter().zip(vals) {
                    for (cv, &bv) in c_row.iter_mut().zip(b.row(j)) {
                        *cv += v * bv;
                    }
                }
            }
            Ok(c)
        }
        (Side::Left, true) => {
            if s.rows != b.rows() {
                return Err(Error::dim("spmm Sᵀ·B", (s.cols, s.rows), b.shape()));
            }
            let mut c = DenseMatrix::zeros(s.cols, b.cols());
            for i in 0..s.rows {
                let (cols, vals) = s.row(i);
                let b_row = b.row(i);
                for (&j, &v) in cols.iter().zip(vals) {
                    for (cv, &bv) in c.row_mut(j).iter_mut().zip(b_row) {
                        *cv += v * bv;
                    }
                }
            }
            Ok(c)
        }
        (Side::Right, false) => {
            if b.cols() != s.rows {
                return Err(Error::dim("spmm B·S", b.shape(), s.shape()));
            }
            let mut c = DenseMatrix::zeros(b.rows(), s.cols);
            for i in 0..b.rows() {
                let b_row = b.row(i);
                let c_row = c.row_mut(i);
                for (k, &bik) in b_row.iter().enumerate() {
                    let (cols, vals) = s.row(k);
                    for (&j, &v) in cols.iter().zip(vals) {
                        c_row[j] += bik * v;
                    }
                }
            }
            Ok(c)
        }
        (Side::Right, true) => {
            if b.cols() != s.cols {
                return Err(Error::dim("spmm B·Sᵀ", b.shape(), (s.cols, s.rows)));
            }
            let mut c = DenseMatrix::zeros(b.rows(), s.rows);
            for i in 0..b.rows() {
                let b_row = b.row(i);
                let c_row = c.row_mut(i);
                for r in 0..s.rows {
                    let (cols, vals) = s.row(r);
                    let mut acc = 0.0;
                    for (&j, &v) in cols.iter().zip(vals) {
                        acc += b_row[j] * v;
                    }
                    c_row[r] = acc;
                }
            }
            Ok(c)
        }
    }
}

/// `A·B` with both operands sparse, dense result; cost is
/// `Σ_rows nnz(A row) · nnz(B rows hit)`.
pub fn csr_csr_dense(a: &CsrMatrix, b: &CsrMatrix) -> Result<DenseMatrix> {
    if a.cols != b.rows {
        return Err(Error::dim("csr·csr", a.shape(), b.shape()));
    }
    let mut c = DenseMatrix::zeros(a.rows, b.cols);
    for i in 0..a.rows {
        let (acols, avals) = a.row(i);
        let c_row = c.row_mut(i);
        for (&k, &av) in acols.iter().zip(avals) {
            let (bcols, bvals) = b.row(k);
            for (&j, &bv) in bcols.iter().zip(bvals) {
                c_row[j] += av * bv;
            }
        }
    }
    Ok(c)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sketch::{sample_dense_gaussian, sample_sparse_subgaussian, SketchSpec, SubGaussianLaw};

    fn random_sparse(rows: usize, cols: usize, p: f64, seed: u64) -> CsrMatrix {
        let spec = SketchSpec::new(rows, cols, p, seed).unwrap();
        sample_sparse_subgaussian(&spec, &SubGaussianLaw::scaled_normal()).unwrap()
    }

    #[test]
    fn from_parts_validates_structure() {
        // nondecreasing offsets
        assert!(CsrMatrix::from_parts(2, 2, vec![0, 2, 1], vec![0, 1], vec![1.0, 2.0]).is_err());
        // strictly increasing columns within a row
        assert!(CsrMatrix::from_parts(1, 3, vec![0, 2], vec![1, 1], vec![1.0, 2.0]).is_err());
        // column bound
        assert!(CsrMatrix::from_parts(1, 2, vec![0, 1], vec![5], vec![1.0]).is_err());
        // offset bracket
        assert!(CsrMatrix::from_parts(1, 2, vec![0, 2], vec![0], vec![1.0]).is_err());
    }

    #[test]
    fn explicit_zeros_are_pruned() {
        let m = CsrMatrix::from_parts(2, 2, vec![0, 2, 3], vec![0, 1, 0], vec![1.0, 0.0, 2.0])
            .unwrap();
        assert_eq!(m.nnz(), 2);
        let t = CsrMatrix::from_triplets(2, 2, &[(0, 0, 1.0), (0, 0, -1.0), (1, 1, 3.0)]).unwrap();
        assert_eq!(t.nnz(), 1, "cancelled duplicate must be pruned");
    }

    #[test]
    fn triplets_sum_duplicates_and_sort() {
        let m = CsrMatrix::from_triplets(2, 3, &[(1, 2, 1.0), (0, 1, 2.0), (1, 2, 0.5)]).unwrap();
        assert_eq!(m.to_dense()[(1, 2)], 1.5);
        assert_eq!(m.to_dense()[(0, 1)], 2.0);
        assert_eq!(m.nnz(), 2);
    }

    #[test]
    fn spmm_identity_is_noop() {
        let b = sample_dense_gaussian(4, 3, 17);
        let id = CsrMatrix::identity(4);
        assert_eq!(spmm(&id, &b, Side::Left, false).unwrap(), b);
    }

    #[test]
    fn spmm_empty_sparse_gives_zero() {
        let s = CsrMatrix::from_triplets(3, 4, &[]).unwrap();
        let b = sample_dense_gaussian(4, 2, 5);
        let c = spmm(&s, &b, Side::Left, false).unwrap();
        assert_eq!(c.max_abs(), 0.0);
    }

    #[test]
    fn spmm_all_modes_match_densified_oracle() {
        let s = random_sparse(50, 40, 0.05, 99);
        let dense_s = s.to_dense();
        let b_right = sample_dense_gaussian(40, 8, 7);
        let b_left_t = sample_dense_gaussian(50, 8, 8);
        let b_rows = sample_dense_gaussian(6, 50, 9);
        let b_rows_t = sample_dense_gaussian(6, 40, 10);

        let cases = [
            (
                spmm(&s, &b_right, Side::Left, false).unwrap(),
                crate::linalg::gemm(&dense_s, &b_right).unwrap(),
            ),
            (
                spmm(&s, &b_left_t, Side::Left, true).unwrap(),
                crate::linalg::gemm(&dense_s.transpose(), &b_left_t).unwrap(),
            ),
            (
                spmm(&s, &b_rows, Side::Right, false).unwrap(),
                crate::linalg::gemm(&b_rows, &dense_s).unwrap(),
            ),
            (
                spmm(&s, &b_rows_t, Side::Right, true).unwrap(),
                crate::linalg::gemm(&b_rows_t, &dense_s.transpose()).unwrap(),
            ),
        ];
        for (got, want) in &cases {
            assert!(got.sub(want).unwrap().max_abs() <= 1e-12);
        }
    }

    #[test]
    fn spmm_dimension_mismatch_is_structured() {
        let s = random_sparse(5, 4, 0.5, 1);
        let b = sample_dense_gaussian(7, 2, 2);
        let msg = spmm(&s, &b, Side::Left, false).unwrap_err().to_string();
        assert!(msg.contains("5x4") && msg.contains("7x2"), "got: {msg}");
    }

    #[test]
    fn transpose_round_trips() {
        let s = random_sparse(20, 30, 0.1, 42);
        let tt = s.transpose().transpose();
        assert_eq!(s, tt);
        let dt = s.transpose().to_dense();
        assert_eq!(dt, s.to_dense().transpose());
    }

    #[test]
    fn csr_csr_matches_dense_oracle() {
        let a = random_sparse(12, 20, 0.2, 5);
        let b = random_sparse(20, 9, 0.3, 6);
        let got = csr_csr_dense(&a, &b).unwrap();
        let want = crate::linalg::gemm(&a.to_dense(), &b.to_dense()).unwrap();
        assert!(got.sub(&want).unwrap().max_abs() <= 1e-12);
    }

    #[test]
    fn frobenius_matches_dense() {
        let s = random_sparse(15, 15, 0.25, 3);
        assert!((s.frobenius_norm() - s.to_dense().frobenius_norm()).abs() <= 1e-12);
    }
}
