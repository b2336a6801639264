use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::linalg::dense::{gemm, gemm_tn, DenseMatrix};
use crate::linalg::perm::PermutationVector;
use crate::linalg::sparse::{spmm, CsrMatrix, Side};

/// Matrix-free linear map. `apply` multiplies a dense block from the left
/// (`A·X`), `adjoint_apply` applies the transpose (`Aᵀ·Y`). Implementations
/// must be deterministic: the same input block yields bit-identical output.
pub trait LinearOperator {
    fn rows(&self) -> usize;
    fn cols(&self) -> usize;

    /// `A·x` for a `cols × w` block `x`; returns `rows × w`.
    fn apply(&self, x: &DenseMatrix) -> DenseMatrix;

    /// `Aᵀ·y` for a `rows × w` block `y`; returns `cols × w`.
    fn adjoint_apply(&self, y: &DenseMatrix) -> DenseMatrix;

    /// Advisory nonzero count for cost models; `None` when unknown/dense.
    fn nnz_hint(&self) -> Option<usize> {
        None
    }
}

impl<T: LinearOperator + ?Sized> LinearOperator for &T {
    fn rows(&self) -> usize {
        (**self).rows()
    }
    fn cols(&self) -> usize {
        (**self).cols()
    }
    fn apply(&self, x: &DenseMatrix) -> DenseMatrix {
        (**self).apply(x)
    }
    fn adjoint_apply(&self, y: &DenseMatrix) -> DenseMatrix {
        (**self).adjoint_apply(y)
    }
    fn nnz_hint(&self) -> Option<usize> {
        (**self).nnz_hint()
    }
}

impl LinearOperator for DenseMatrix {
    fn rows(&self) -> usize {
        DenseMatrix::rows(self)
    }
    fn cols(&self) -> usize {
        DenseMatrix::cols(self)
    }
    fn apply(&self, x: &DenseMatrix) -> DenseMatrix {
        gemm(self, x).expect("operator apply: block height must equal cols")
    }
    fn adjoint_apply(&self, y: &DenseMatrix) -> DenseMatrix {
        assert_eq!(self.rows(), y.rows(), "operator adjoint: block height must equal rows");
        gemm_tn(self, y)
    }
}

impl LinearOperator for CsrMatrix {
    fn rows(&self) -> usize {
        CsrMatrix::rows(self)
    }
    fn cols(&self) -> usize {
        CsrMatrix::cols(self)
    }
    fn apply(&self, x: &DenseMatrix) -> DenseMatrix {
        spmm(self, x, Side::Left, false).expect("operator apply: block height must equal cols")
    }
    fn adjoint_apply(&self, y: &DenseMatrix) -> DenseMatrix {
        spmm(self, y, Side::Left, true).expect("operator adjoint: block height must equal rows")
    }
    fn nnz_hint(&self) -> Option<usize> {
        Some(self.nnz())
    }
}

/// `U·diag(s)·Vᵀ` as an operator (`U: m×r`, `V: n×r`).
pub struct LowRankOperator<'a> {
    pub u: &'a DenseMatrix,
    pub s: &'a [f64],
    pub v: &'a DenseMatrix,
}

impl LinearOperator for LowRankOperator<'_> {
    fn rows(&self) -> usize {
        self.u.rows()
    }
    fn cols(&self) -> usize {
        self.v.rows()
    }
    fn apply(&self, x: &DenseMatrix) -> DenseMatrix {
        let mut t = gemm_tn(self.v, x); // r × w
        for (i, &si) in self.s.iter().enumerate() {
            for v in t.row_mut(i) {
                *v *= si;
            }
        }
        gemm(self.u, &t).unwrap()
    }
    fn adjoint_apply(&self, y: &DenseMatrix) -> DenseMatrix {
        let mut t = gemm_tn(self.u, y);
        for (i, &si) in self.s.iter().enumerate() {
            for v in t.row_mut(i) {
                *v *= si;
            }
        }
        gemm(self.v, &t).unwrap()
    }
}

/// `L·R` as an operator (`L: m×r`, `R: r×n`), never materialized.
pub struct ProductOperator<'a> {
    pub left: &'a DenseMatrix,
    pub right: &'a DenseMatrix,
}

impl LinearOperator for ProductOperator<'_> {
    fn rows(&self) -> usize {
        self.left.rows()
    }
    fn cols(&self) -> usize {
        self.right.cols()
    }
    fn apply(&self, x: &DenseMatrix) -> DenseMatrix {
        gemm(self.left, &gemm(self.right, x).unwrap()).unwrap()
    }
    fn adjoint_apply(&self, y: &DenseMatrix) -> DenseMatrix {
        gemm_tn(self.right, &gemm_tn(self.left, y))
    }
}

/// `A − B` as an operator.
pub struct DifferenceOperator<A, B> {
    pub a: A,
    pub b: B,
}

impl<A: LinearOperator, B: LinearOperator> LinearOperator for DifferenceOperator<A, B> {
    fn rows(&self) -> usize {
        self.a.rows()
    }
    fn cols(&self) -> usize {
        self.a.cols()
    }
    fn apply(&self, x: &DenseMatrix) -> DenseMatrix {
        self.a.apply(x).sub(&self.b.apply(x)).unwrap()
    }
    fn adjoint_apply(&self, y: &DenseMatrix) -> DenseMatrix {
        self.a.adjoint_apply(y).sub(&self.b.adjoint_apply(y)).unwrap()
    }
}

/// `P·A·Q` for row permutation `P` and column permutation `Q`.
pub struct PermutedOperator<'a, A> {
    pub a: A,
    pub row_perm: &'a PermutationVector,
    pub col_perm: &'a PermutationVector,
}

impl<A: LinearOperator> LinearOperator for PermutedOperator<'_, A> {
    fn rows(&self) -> usize {
        self.a.rows()
    }
    fn cols(&self) -> usize {
        self.a.cols()
    }
    fn apply(&self, x: &DenseMatrix) -> DenseMatrix {
        // (P·A·Q)x = P·(A·(Qx)) where (Qx)[q[j]] = x[j].
        let mut qx = DenseMatrix::zeros(x.rows(), x.cols());
        for (j, &p) in self.col_perm.as_slice().iter().enumerate() {
            qx.row_mut(p).copy_from_slice(x.row(j));
        }
        self.row_perm.apply_to_rows(&self.a.apply(&qx)).unwrap()
    }
    fn adjoint_apply(&self, y: &DenseMatrix) -> DenseMatrix {
        // (P·A·Q)ᵀ = Qᵀ·Aᵀ·Pᵀ; Pᵀ scatters, Qᵀ gathers.
        let mut pty = DenseMatrix::zeros(y.rows(), y.cols());
        for (i, &p) in self.row_perm.as_slice().iter().enumerate() {
            pty.row_mut(p).copy_from_slice(y.row(i));
        }
        let at = self.a.adjoint_apply(&pty);
        let mut out = DenseMatrix::zeros(at.rows(), at.cols());
        for (j, &p) in self.col_perm.as_slice().iter().enumerate() {
            out.row_mut(j).copy_from_slice(at.row(p));
        }
        out
    }
}

/// Materialize an operator by applying it to the identity. Intended for
/// small verification problems; cost is one apply per column.
pub fn materialize(a: &dyn LinearOperator) -> DenseMatrix {
    a.apply(&DenseMatrix::identity(a.cols()))
}

/// Power iteration on `AᵀA` estimating `‖A‖₂` from below.
///
/// The iterate's Rayleigh quotient is nondecreasing in the iteration count,
/// so more iterations never worsen the estimate. Deterministic per seed.
pub fn spectral_norm_estimate(a: &dyn LinearOperator, iters: usize, seed: u64) -> f64 {
    assert!(iters >= 1, "spectral_norm_estimate: need at least one iteration");
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut x = DenseMatrix::zeros(a.cols(), 1);
    for i in 0..a.cols() {
        x[(i, 0)] = rng.sample::<f64, _>(rand_distr::StandardNormal);
    }
    let mut estimate = 0.0;
    for _ in 0..iters {
        let norm_x = x.frobenius_norm();
        if norm_x == 0.0 {
            return 0.0;
        }
        for v in x.entries_mut() {
            *v /= norm_x;
        }
        let y = a.apply(&x);
        estimate = y.frobenius_norm();
        if estimate == 0.0 {
            return 0.0;
        }
        x = a.adjoint_apply(&y);
    }
    estimate
}

/// Max relative defect of `⟨A·x, y⟩ = ⟨x, Aᵀ·y⟩` over seeded random probes.
pub fn adjoint_consistency_defect(a: &dyn LinearOperator, probes: usize, seed: u64) -> f64 {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut worst = 0.0_f64;
    for _ in 0..probes {
        let x = DenseMatrix::from_fn(a.cols(), 1, |_, _| {
            rng.sample::<f64, _>(rand_distr::StandardNormal)
        });
        let y = DenseMatrix::from_fn(a.rows(), 1, |_, _| {
            rng.sample::<f64, _>(rand_distr::StandardNormal)
        });
        let ax = a.apply(&x);
        let aty = a.adjoint_apply(&y);
        let lhs: f64 = ax.entries().iter().zip(y.entries()).map(|(p, q)| p * q).sum();
        let rhs: f64 = x.entries().iter().zip(aty.entries()).map(|(p, q)| p * q).sum();
        let scale = ax.frobenius_norm() * y.frobenius_norm()
            + x.frobenius_norm() * aty.frobenius_norm();
        if scale > 0.0 {
            worst = worst.max((lhs - rhs).abs() / scale);
        }
    }
    worst
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sketch::{sample_dense_gaussian, sample_sparse_subgaussian, SketchSpec, SubGaussianLaw};

    #[test]
    fn dense_and_csr_adjoints_are_consistent() {
        let d = sample_dense_gaussian(9, 6, 3);
        assert!(adjoint_consistency_defect(&d, 100, 0) <= 1e-12);
        let s = sample_sparse_subgaussian(
            &SketchSpec::new(8, 11, 0.3, 5).unwrap(),
            &SubGaussianLaw::scaled_normal(),
        )
        .unwrap();
        assert!(adjoint_consistency_defect(&s, 100, 1) <= 1e-12);
    }

    #[test]
    fn low_rank_and_product_operators_match_materialization() {
        let u = sample_dense_gaussian(7, 3, 1);
        let v = sample_dense_gaussian(5, 3, 2);
        let s = vec![3.0, 2.0, 0.5];
        let op = LowRankOperator { u: &u, s: &s, v: &v };
        let mut expl = gemm(&u, &DenseMatrix::from_diag(&s)).unwrap();
        expl = gemm(&expl, &v.transpose()).unwrap();
        let diff = materialize(&op).sub(&expl).unwrap().max_abs();
        assert!(diff <= 1e-12);
        assert!(adjoint_consistency_defect(&op, 50, 9) <= 1e-12);

        let l = sample_dense_gaussian(6, 2, 3);
        let r = sample_dense_gaussian(2, 4, 4);
        let prod = ProductOperator { left: &l, right: &r };
        let want = gemm(&l, &r).unwrap();
        assert!(materialize(&prod).sub(&want).unwrap().max_abs() <= 1e-12);
    }

    #[test]
    fn permuted_operator_matches_explicit_permutation() {
        let a = sample_dense_gaussian(4, 5, 8);
        let p = PermutationVector::new(vec![2, 0, 3, 1]).unwrap();
        let q = PermutationVector::new(vec![4, 2, 0, 1, 3]).unwrap();
        let op = PermutedOperator { a: &a, row_perm: &p, col_perm: &q };
        let want = p.apply_to_rows(&q.apply_to_cols(&a).unwrap()).unwrap();
        assert!(materialize(&op).sub(&want).unwrap().max_abs() <= 1e-13);
        assert!(adjoint_consistency_defect(&op, 50, 11) <= 1e-12);
    }

    #[test]
    fn spectral_norm_of_zero_operator_is_zero() {
        let z = DenseMatrix::zeros(6, 4);
        assert_eq!(spectral_norm_estimate(&z, 25, 0), 0.0);
    }

    #[test]
    fn spectral_norm_of_diagonal_hits_top_entry() {
        let d = DenseMatrix::from_diag(&[5.0, 1.0, 1.0]);
        let est = spectral_norm_estimate(&d, 60, 0);
        assert!((est - 5.0).abs() / 5.0 <= 0.01, "estimate {est}");
    }

    #[test]
    fn spectral_norm_estimate_is_monotone_in_iters() {
        let a = sample_dense_gaussian(30, 20, 12);
        let mut prev = 0.0;
        for iters in [20, 40, 80, 160] {
            let est = spectral_norm_estimate(&a, iters, 7);
            assert!(est >= prev - 1e-12, "estimate decreased: {prev} -> {est}");
            prev = est;
        }
    }
}
