use crate::error::{Error, Result};

/// Dense row-major matrix of `f64`.
///
/// Construction through the public constructors guarantees positive
/// dimensions and finite entries; arithmetic on already-constructed
/// matrices is not re-validated.
#[derive(Debug, Clone, PartialEq)]
pub struct DenseMatrix {
    rows: usize,
    cols: usize,
    entries: Vec<f64>,
}

impl DenseMatrix {
    pub fn from_vec(rows: usize, cols: usize, entries: Vec<f64>) -> Result<Self> {
        if rows == 0 || cols == 0 {
            return Err(Error::InvalidMatrix(format!(
                "dimensions must be positive, got {rows}x{cols}"
            )));
        }
        if entries.len() != rows * cols {
            return Err(Error::InvalidMatrix(format!(
                "expected {rows}x{cols} = {} entries, got {}",
                rows * cols,
                entries.len()
            )));
        }
        for (idx, &v) in entries.iter().enumerate() {
            if !v.is_finite() {
                return Err(Error::NonFinite {
                    row: idx / cols,
                    col: idx % cols,
                    value: v,
                });
            }
        }
        Ok(DenseMatrix { rows, cols, entries })
    }

    pub fn from_rows(rows: &[&[f64]]) -> Result<Self> {
        let r = rows.len();
        let c = rows.first().map_or(0, |row| row.len());
        if rows.iter().any(|row| row.len() != c) {
            return Err(Error::InvalidMatrix("ragged rows".into()));
        }
        Self::from_vec(r, c, rows.concat())
    }

    pub fn zeros(rows: usize, cols: usize) -> Self {
        assert!(rows > 0 && cols > 0, "dimensions must be positive");
        DenseMatrix { rows, cols, entries: vec![0.0; rows * cols] }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m.entries[i * n + i] = 1.0;
        }
        m
    }

    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> f64) -> Self {
        let mut m = Self::zeros(rows, cols);
        for i in 0..rows {
            for j in 0..cols {
                m.entries[i * cols + j] = f(i, j);
            }
        }
        m
    }

    pub fn from_diag(diag: &[f64]) -> Self {
        let n = diag.len();
        let mut m = Self::zeros(n, n);
        for (i, &d) in diag.iter().enumerate() {
            m.entries[i * n + i] = d;
        }
        m
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

    #[inline]
    pub fn row(&self, i: usize) -> &[f64] {
        &self.entries[i * self.cols..(i + 1) * self.cols]
    }

    #[inline]
    pub fn row_mut(&mut self, i: usize) -> &mut [f64] {
        &mut self.entries[i * self.cols..(i + 1) * self.cols]
    }

    pub fn entries(&self) -> &[f64] {
        &self.entries
    }

    pub fn entries_mut(&mut self) -> &mut [f64] {
        &mut self.entries
    }

    pub fn column(&self, j: usize) -> Vec<f64> {
        (0..self.rows).map(|i| self.entries[i * self.cols + j]).collect()
    }

    pub fn transpose(&self) -> DenseMatrix {
        let mut t = Self::zeros(self.cols, self.rows);
        for i in 0..self.rows {
            for j in 0..self.cols {
                t.entries[j * self.rows + i] = self.entries[i * self.cols + j];
            }
        }
        t
    }

    /// Keep the first `k` columns.
    pub fn truncate_cols(&self, k: usize) -> DenseMatrix {
        assert!(k >= 1 && k <= self.cols);
        let mut out = Self::zeros(self.rows, k);
        for i in 0..self.rows {
            out.row_mut(i).copy_from_slice(&self.row(i)[..k]);
        }
        out
    }

    /// Keep the first `k` rows.
    pub fn truncate_rows(&self, k: usize) -> DenseMatrix {
        assert!(k >= 1 && k <= self.rows);
        DenseMatrix {
            rows: k,
            cols: self.cols,
            entries: self.entries[..k * self.cols].to_vec(),
        }
    }

    pub fn scaled(&self, factor: f64) -> DenseMatrix {
        DenseMatrix {
            rows: self.rows,
            cols: self.cols,
            entries: self.entries.iter().map(|v| v * factor).collect(),
        }
    }

    pub fn sub(&self, other: &DenseMatrix) -> Result<DenseMatrix> {
        if self.shape() != other.shape() {
            return Err(Error::dim("sub", self.shape(), other.shape()));
        }
        Ok(DenseMatrix {
            rows: self.rows,
            cols: self.cols,
            entries: self
                .entries
                .iter()
                .zip(&other.entries)
                .map(|(a, b)| a - b)
                .collect(),
        })
    }

    /// Scale column `j` in place by `factor`.
    pub fn scale_col(&mut self, j: usize, factor: f64) {
        for i in 0..self.rows {
            self.entries[i * self.cols + j] *= factor;
        }
    }

    /// Largest absolute entry.
    pub fn max_abs(&self) -> f64 {
        self.entries.iter().fold(0.0_f64, |acc, v| acc.max(v.abs()))
    }

    /// Frobenius norm with compensated (Kahan) accumulation of the squares,
    /// so the reduction order cannot drift with refactoring.
    pub fn frobenius_norm(&self) -> f64 {
        kahan_sum_of_squares(&self.entries).sqrt()
    }

    /// Max absolute deviation of `selfᵀ·self` from the identity; cheap
    /// orthonormality diagnostic for tall matrices.
    pub fn orthonormality_defect(&self) -> f64 {
        let gram = gemm_tn(self, self);
        let mut worst = 0.0_f64;
        for i in 0..gram.rows {
            for j in 0..gram.cols {
                let target = if i == j { 1.0 } else { 0.0 };
                worst = worst.max((gram.entries[i * gram.cols + j] - target).abs());
            }
        }
        worst
    }
}

impl std::ops::Index<(usize, usize)> for DenseMatrix {
    type Output = f64;
    #[inline]
    fn index(&self, (i, j): (usize, usize)) -> &f64 {
        &self.entries[i * self.cols + j]
    }
}

impl std::ops::IndexMut<(usize, usize)> for DenseMatrix {
    #[inline]
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut f64 {
        &mut self.entries[i * self.cols + j]
    }
}

pub(crate) fn kahan_sum_of_squares(values: &[f64]) -> f64 {
    let mut sum = 0.0_f64;
    let mut comp = 0.0_f64;
    for &v in values {
        let term = v * v - comp;
        let next = sum + term;
        comp = (next - sum) - term;
        sum = next;
    }
    sum
}

/// `A·B`. Accumulation order over the inner index is fixed (ascending), so
/// repeated calls on identical inputs are bit-identical.
pub fn gemm(a: &DenseMatrix, b: &DenseMatrix) -> Result<DenseMatrix> {
    if a.cols != b.rows {
        return Err(Error::dim("gemm", a.shape(), b.shape()));
    }
    let mut c = DenseMatrix::zeros(a.rows, b.cols);
    for i in 0..a.rows {
        let a_row = a.row(i);
        let c_row = c.row_mut(i);
        for (k, &aik) in a_row.iter().enumerate() {
            let b_row = &b.entries[k * b.cols..(k + 1) * b.cols];
            for (cv, &bv) in c_row.iter_mut().zip(b_row) {
                *cv += aik * bv;
            }
        }
    }
    Ok(c)
}

/// `Aᵀ·B` without materializing the transpose.
pub fn gemm_tn(a: &DenseMatrix, b: &DenseMatrix) -> DenseMatrix {
    assert_eq!(a.rows, b.rows, "gemm_tn: row counts must match");
    let mut c = DenseMatrix::zeros(a.cols, b.cols);
    for k in 0..a.rows {
        let a_row = a.row(k);
        let b_row = b.row(k);
        for (i, &aki) in a_row.iter().enumerate() {
            let c_row = &mut c.entries[i * b.cols..(i + 1) * b.cols];
            for (cv, &bv) in c_row.iter_mut().zip(b_row) {
                *cv += aki * bv;
            }
        }
    }
    c
}

/// `A·Bᵀ` without materializing the transpose.
pub fn gemm_nt(a: &DenseMatrix, b: &DenseMatrix) -> DenseMatrix {
    assert_eq!(a.cols, b.cols, "gemm_nt: col counts must match");
    let mut c = DenseMatrix::zeros(a.rows, b.rows);
    for i in 0..a.rows {
        let a_row = a.row(i);
        for j in 0..b.rows {
            let b_row = b.row(j);
            let mut acc = 0.0;
            for (&av, &bv) in a_row.iter().zip(b_row) {
                acc += av * bv;
            }
            c.entries[i * b.rows + j] = acc;
        }
    }
    c
}

#[cfg(test)]
mod tests {
    use super::*;

    /// Independent reference: textbook triple loop, no reuse of `gemm`.
    fn gemm_oracle(a: &DenseMatrix, b: &DenseMatrix) -> DenseMatrix {
        let mut c = DenseMatrix::zeros(a.rows(), b.cols());
        for i in 0..a.rows() {
            for j in 0..b.cols() {
                let mut acc = 0.0;
                for k in 0..a.cols() {
                    acc += a[(i, k)] * b[(k, j)];
                }
                c[(i, j)] = acc;
            }
        }
        c
    }

    fn seeded(rows: usize, cols: usize, seed: u64) -> DenseMatrix {
        crate::sketch::sample_dense_gaussian(rows, cols, seed)
    }

    #[test]
    fn construction_rejects_bad_inputs() {
        assert!(DenseMatrix::from_vec(0, 3, vec![]).is_err());
        assert!(DenseMatrix::from_vec(2, 2, vec![1.0; 3]).is_err());
        let err = DenseMatrix::from_vec(2, 2, vec![1.0, f64::NAN, 0.0, 0.0]).unwrap_err();
        assert!(matches!(err, Error::NonFinite { row: 0, col: 1, .. }));
        assert!(DenseMatrix::from_vec(1, 2, vec![f64::INFINITY, 0.0]).is_err());
    }

    #[test]
    fn gemm_identity_is_noop() {
        let m = seeded(4, 3, 7);
        let id = DenseMatrix::identity(4);
        let prod = gemm(&id, &m).unwrap();
        assert_eq!(prod, m);
    }

    #[test]
    fn gemm_small_known_product() {
        let a = DenseMatrix::from_rows(&[&[1.0, 2.0], &[3.0, 4.0]]).unwrap();
        let b = DenseMatrix::from_rows(&[&[0.0, 1.0], &[1.0, 0.0]]).unwrap();
        let c = gemm(&a, &b).unwrap();
        let expected = DenseMatrix::from_rows(&[&[2.0, 1.0], &[4.0, 3.0]]).unwrap();
        assert_eq!(c, expected);
    }

    #[test]
    fn gemm_matches_triple_loop_oracle() {
        let a = seeded(7, 5, 11);
        let b = seeded(5, 3, 13);
        let c = gemm(&a, &b).unwrap();
        let reference = gemm_oracle(&a, &b);
        for i in 0..7 {
            for j in 0..3 {
                assert!((c[(i, j)] - reference[(i, j)]).abs() <= 1e-13);
            }
        }
    }

    #[test]
    fn gemm_dimension_mismatch_names_both_shapes() {
        let a = seeded(3, 4, 1);
        let b = seeded(5, 2, 2);
        let msg = gemm(&a, &b).unwrap_err().to_string();
        assert!(msg.contains("3x4") && msg.contains("5x2"), "got: {msg}");
    }

    #[test]
    fn gemm_is_bit_deterministic() {
        let a = seeded(20, 30, 3);
        let b = seeded(30, 10, 4);
        let c1 = gemm(&a, &b).unwrap();
        let c2 = gemm(&a, &b).unwrap();
        assert_eq!(c1.entries, c2.entries);
    }

    #[test]
    fn gemm_variants_match_explicit_transposes() {
        let a = seeded(6, 4, 5);
        let b = seeded(6, 3, 6);
        let tn = gemm_tn(&a, &b);
        let tn_ref = gemm(&a.transpose(), &b).unwrap();
        assert!(tn.sub(&tn_ref).unwrap().max_abs() <= 1e-13);

        let c = seeded(5, 4, 8);
        let d = seeded(7, 4, 9);
        let nt = gemm_nt(&c, &d);
        let nt_ref = gemm(&c, &d.transpose()).unwrap();
        assert!(nt.sub(&nt_ref).unwrap().max_abs() <= 1e-13);
    }

    #[test]
    fn frobenius_of_zero_matrix_is_zero() {
        assert_eq!(DenseMatrix::zeros(5, 7).frobenius_norm(), 0.0);
    }

    #[test]
    fn frobenius_of_three_four_is_five() {
        let m = DenseMatrix::from_rows(&[&[3.0, 4.0]]).unwrap();
        assert!((m.frobenius_norm() - 5.0).abs() <= 1e-15);
    }

    #[test]
    fn frobenius_matches_gram_trace_oracle() {
        let m = seeded(9, 9, 21);
        let gram = gemm(&m.transpose(), &m).unwrap();
        let trace: f64 = (0..9).map(|i| gram[(i, i)]).sum();
        assert!((m.frobenius_norm() - trace.sqrt()).abs() <= 1e-12);
    }
}
