use crate::error::{Error, Result};
use crate::linalg::dense::DenseMatrix;

/// A permutation of `0..n`, stored in one-line notation.
///
/// Acting on rows, `(P·M)[i] = M[perm[i]]`; acting on columns,
/// `(M·P)[:, j] = M[:, perm[j]]`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PermutationVector {
    perm: Vec<usize>,
}

impl PermutationVector {
    pub fn new(perm: Vec<usize>) -> Result<Self> {
        let n = perm.len();
        if n == 0 {
            return Err(Error::InvalidPermutation("empty permutation".into()));
        }
        let mut seen = vec![false; n];
        for &p in &perm {
            if p >= n {
                return Err(Error::InvalidPermutation(format!(
                    "index {p} out of bounds for length {n}"
                )));
            }
            if seen[p] {
                return Err(Error::InvalidPermutation(format!("index {p} repeated")));
            }
            seen[p] = true;
        }
        Ok(PermutationVector { perm })
    }

    pub fn identity(n: usize) -> Self {
        PermutationVector { perm: (0..n).collect() }
    }

    pub fn len(&self) -> usize {
        self.perm.len()
    }

    pub fn is_empty(&self) -> bool {
        self.perm.is_empty()
    }

    pub fn as_slice(&self) -> &[usize] {
        &self.perm
    }

    pub fn is_identity(&self) -> bool {
        self.perm.iter().enumerate().all(|(i, &p)| i == p)
    }

    /// Swap images `i` and `j` (used while pivoting).
    pub(crate) fn swap(&mut self, i: usize, j: usize) {
        self.perm.swap(i, j);
    }

    /// `P·M`: gather rows, `out[i] = M[perm[i]]`.
    pub fn apply_to_rows(&self, m: &DenseMatrix) -> Result<DenseMatrix> {
        if self.len() != m.rows() {
            return Err(Error::InvalidPermutation(format!(
                "permutation length {} does not match row count {}",
                self.len(),
                m.rows()
            )));
        }
        let mut out = DenseMatrix::zeros(m.rows(), m.cols());
        for i in 0..m.rows() {
            out.row_mut(i).copy_from_slice(m.row(self.perm[i]));
        }
        Ok(out)
    }

    /// `M·P`: gather columns, `out[:, j] = M[:, perm[j]]`.
    pub fn apply_to_cols(&self, m: &DenseMatrix) -> Result<DenseMatrix> {
        if self.len() != m.cols() {
            return Err(Error::InvalidPermutation(format!(
                "permutation length {} does not match col count {}",
                self.len(),
                m.cols()
            )));
        }
        let mut out = DenseMatrix::zeros(m.rows(), m.cols());
        for i in 0..m.rows() {
            let src = m.row(i);
            let dst = out.row_mut(i);
            for (j, &p) in self.perm.iter().enumerate() {
                dst[j] = src[p];
            }
        }
        Ok(out)
    }

    /// The permutation representing `P_outer · P_inner` as row actions:
    /// `(P_outer·(P_inner·M))[i] = M[inner[outer[i]]]`.
    pub fn compose_after(&self, inner: &PermutationVector) -> Result<PermutationVector> {
        if self.len() != inner.len() {
            return Err(Error::InvalidPermutation("length mismatch in composition".into()));
        }
        Ok(PermutationVector {
            perm: self.perm.iter().map(|&i| inner.perm[i]).collect(),
        })
    }

    pub fn inverse(&self) -> PermutationVector {
        let mut inv = vec![0usize; self.len()];
        for (i, &p) in self.perm.iter().enumerate() {
            inv[p] = i;
        }
        PermutationVector { perm: inv }
    }
}
