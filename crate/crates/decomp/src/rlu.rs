//! Randomized rank-`r` LU decomposition: `P·A·Qc ≈ L·U` with the row
//! permutation, unit-lower-trapezoidal `L`, and upper-trapezoidal `U` all
//! recovered from two small pivoted factorizations of sketched matrices.
//!
//! The pipeline:
//!
//! ```text
//! Y  = A·Ωᵀ                     (m × k range sketch, Ω sparse sub-Gaussian)
//! Z  = [Y]ᵣ                     (rank-r compression of the sketch, m × r)
//! P·Z = L_y·U_y                 (partial-pivot LU)
//! B  = L_y†·(P·A)               (r × n)
//! B·Qc = L_b·U_b                (column-pivot LU)
//! L  = L_y·L_b,  U = U_b
//! ```
//!
//! The compression step matters: the residual is exactly the part of `A`
//! outside `range(L_y)`, and running the LU on `Y` directly and keeping the
//! first `r` columns of `L_y` would make that range the span of the first
//! `r` sketch columns alone — the `k − r` column oversampling would buy
//! nothing and the error would be limited by the conditioning of an
//! un-oversampled `r`-column sketch. Compressing `Y` onto its top `r`
//! left singular directions first keeps the whole sketch in play.
//!
//! A last partial-pivot LU of `L` (folding its permutation into `P`)
//! restores the entrywise bound `|L| ≤ 1`: the product `L_y·L_b` is unit
//! lower trapezoidal but can carry entries larger than 1, and
//! `P₂·(L·U) = (P₂·L)·U` leaves the residual untouched.

use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{
    default_rank_tol, dense_svd, gemm, lu_column_pivot, lu_partial_pivot, numerical_rank,
    spectral_norm_estimate, DenseMatrix, DifferenceOperator, LinearOperator, PermutationVector,
    PermutedOperator, ProductOperator,
};
use crate::rsvd::{MatrixInput, RESIDUAL_POWER_ITERS};
use crate::sketch::{
    derive_seed, sample_sparse_subgaussian, sketch_matrix, SketchMode, SketchOperand, SketchSpec,
    SubGaussianLaw,
};

pub(crate) const TAG_OMEGA: u64 = 0xB1;
pub(crate) const TAG_RESIDUAL: u64 = 0xB2;

// ── Parameters ─────────────────────────────────────────────────────────────

/// Sketch width `k`, density `p`, and seed for [`randomized_lu`].
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct RluParams {
    pub k: usize,
    pub p: f64,
    pub seed: u64,
}

impl RluParams {
    /// `k = ⌈2.5r⌉` clamped to `min(m, n)`, `p = 3/n` — the same sketch
    /// regime as the SVD defaults.
    pub fn defaults(r: usize, m: usize, n: usize, seed: u64) -> Result<Self> {
        let minmn = m.min(n);
        if r == 0 || r > minmn {
            return Err(Error::InvalidParams(format!(
                "target rank {r} outside [1, min(m, n) = {minmn}]"
            )));
        }
        let k = ((r * 5 + 1) / 2).min(minmn);
        let params = RluParams { k, p: (3.0 / n as f64).min(1.0), seed };
        params.validate(r, m, n)?;
        Ok(params)
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    pub fn validate(&self, r: usize, m: usize, n: usize) -> Result<()> {
        let minmn = m.min(n);
        if r == 0 || r > self.k {
            return Err(Error::InvalidParams(format!(
                "need 1 ≤ r ≤ k, got r = {r}, k = {}",
                self.k
            )));
        }
        if self.k > minmn {
            return Err(Error::InvalidParams(format!(
                "sketch width k = {} exceeds min(m, n) = {minmn}",
                self.k
            )));
        }
        if !(self.p > 0.0 && self.p <= 1.0) {
            return Err(Error::InvalidDensity(self.p));
        }
        Ok(())
    }
}

// ── Factors ────────────────────────────────────────────────────────────────

/// The output `P·A·Qc ≈ L·U`: `p` permutes rows of `A`, `qc` its columns,
/// `l` is `m × r` unit lower trapezoidal with `|l[i][j]| ≤ 1`, and `u` is
/// `r × n` upper trapezoidal.
pub struct LuFactors {
    pub p: PermutationVector,
    pub qc: PermutationVector,
    pub l: DenseMatrix,
    pub u: DenseMatrix,
}

/// Worst-case deviations from the factor shape contracts; all but
/// `l_max_abs` are exactly zero by construction.
#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
pub struct LuStructure {
    /// Largest `|L|` entry (the pivoting contract bounds this by 1).
    pub l_max_abs: f64,
    /// Largest `|L[i][i] − 1|`.
    pub l_diag_defect: f64,
    /// Largest `|L[i][j]|` above the diagonal.
    pub l_strict_upper: f64,
    /// Largest `|U[i][j]|` below the diagonal.
    pub u_strict_lower: f64,
}

impl LuFactors {
    pub fn rank(&self) -> usize {
        self.l.cols()
    }

    pub fn structure(&self) -> LuStructure {
        let r = self.rank();
        let mut l_max_abs: f64 = 0.0;
        let mut l_diag_defect: f64 = 0.0;
        let mut l_strict_upper: f64 = 0.0;
        for i in 0..self.l.rows() {
            for j in 0..r {
                let x = self.l[(i, j)].abs();
                if j < i {
                    l_max_abs = l_max_abs.max(x);
                } else if j == i {
                    l_max_abs = l_max_abs.max(x);
                    l_diag_defect = l_diag_defect.max((self.l[(i, j)] - 1.0).abs());
                } else {
                    l_strict_upper = l_strict_upper.max(x);
                }
            }
        }
        let mut u_strict_lower: f64 = 0.0;
        for i in 0..r {
            for j in 0..i.min(self.u.cols()) {
                u_strict_lower = u_strict_lower.max(self.u[(i, j)].abs());
            }
        }
        LuStructure { l_max_abs, l_diag_defect, l_strict_upper, u_strict_lower }
    }

    /// Exact `‖P·A·Qc − L·U‖_F` against a materialized `A` (test and
    /// small-problem use; the estimator in [`RluResult`] scales better).
    pub fn frobenius_residual(&self, a: &DenseMatrix) -> Result<f64> {
        let paq = self.p.apply_to_rows(&self.qc.apply_to_cols(a)?)?;
        let lu = gemm(&self.l, &self.u)?;
        Ok(paq.sub(&lu)?.frobenius_norm())
    }
}

/// Factors plus the estimated spectral residual `‖P·A·Qc − L·U‖₂`.
pub struct RluResult {
    pub factors: LuFactors,
    pub spectral_residual: f64,
    pub elapsed_ms: f64,
}

impl RluResult {
    pub fn record(&self, r: usize, params: &RluParams) -> RluRecord {
        RluRecord {
            r,
            params: *params,
            elapsed_ms: self.elapsed_ms,
            err_spectral: self.spectral_residual,
            structure: self.factors.structure(),
        }
    }
}

/// Serializable run summary (factors omitted).
#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
pub struct RluRecord {
    pub r: usize,
    pub params: RluParams,
    pub elapsed_ms: f64,
    pub err_spectral: f64,
    pub structure: LuStructure,
}

// ── The decomposition ──────────────────────────────────────────────────────

/// Randomized rank-`r` LU of `A` with a sparse sub-Gaussian range sketch.
pub fn randomized_lu(a: &MatrixInput, r: usize, params: &RluParams) -> Result<RluResult> {
    let (m, n) = a.shape();
    params.validate(r, m, n)?;
    let seed = params.seed;
    let clock = Instant::now();

    // Range sketch: Y = A·Ωᵀ with Ω sampled k × n.
    let spec = SketchSpec::new(params.k, n, params.p, derive_seed(seed, TAG_OMEGA))?;
    let omega = sample_sparse_subgaussian(&spec, &SubGaussianLaw::normal())?;
    let y = sketch_matrix(
        &SketchOperand::Sparse(&omega),
        &a.data_operand(),
        SketchMode::RightTranspose,
    )?;

    // The sketch must carry an r-dimensional range or the factors cannot.
    let y_svd = dense_svd(&y)?;
    let observed = numerical_rank(&y_svd.s, default_rank_tol(m, params.k));
    if observed < r {
        return Err(Error::RankDeficientSketch { observed, required: r });
    }

    // Z = [Y]_r: best rank-r compression of the sketch (see module docs for
    // why the LU runs on Z rather than on Y's leading columns).
    let z = {
        let mut uz = y_svd.u.truncate_cols(r);
        for (j, &s) in y_svd.s.iter().take(r).enumerate() {
            uz.scale_col(j, s);
        }
        uz
    };
    let (p, l_y, _u_y) = lu_partial_pivot(&z)?;

    // B = L_y†·(P·A). Permuting the columns of L_y† by P⁻¹ lets the data
    // matrix stay unpermuted (and matrix-free inputs stay matrix-free):
    // gathered·A = L_y†·(P·A).
    let pinv = dense_svd(&l_y)?.pseudo_inverse(default_rank_tol(m, r)); // r × m
    let gathered = p.inverse().apply_to_cols(&pinv)?;
    let b = a.adjoint_apply(&gathered.transpose()).transpose(); // r × n

    let (qc, l_b, u_b) = lu_column_pivot(&b)?;
    let l_combined = gemm(&l_y, &l_b)?;

    // Final re-factor: restore |L| ≤ 1, fold the new row permutation into P.
    let (p2, l, u2) = lu_partial_pivot(&l_combined)?;
    let u = gemm(&u2, &u_b)?;
    let p = p2.compose_after(&p)?;
    let elapsed_ms = clock.elapsed().as_secs_f64() * 1e3;

    let factors = LuFactors { p, qc, l, u };
    let spectral_residual = spectral_norm_estimate(
        &DifferenceOperator {
            a: PermutedOperator { a, row_perm: &factors.p, col_perm: &factors.qc },
            b: ProductOperator { left: &factors.l, right: &factors.u },
        },
        RESIDUAL_POWER_ITERS,
        derive_seed(seed, TAG_RESIDUAL),
    );

    Ok(RluResult { factors, spectral_residual, elapsed_ms })
}

// ── Tests ──────────────────────────────────────────────────────────────────

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{gemm_nt, thin_qr, CsrMatrix};
    use crate::sketch::sample_dense_gaussian;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn synthetic(m: usize, n: usize, spectrum: &[f64], seed: u64) -> DenseMatrix {
        assert_eq!(spectrum.len(), m.min(n));
        let (u, _) = thin_qr(&sample_dense_gaussian(m, spectrum.len(), derive_seed(seed, 1)))
            .unwrap();
        let (v, _) = thin_qr(&sample_dense_gaussian(n, spectrum.len(), derive_seed(seed, 2)))
            .unwrap();
        let mut us = u;
        for (j, &s) in spectrum.iter().enumerate() {
            us.scale_col(j, s);
        }
        gemm_nt(&us, &v)
    }

    fn assert_structure(f: &LuFactors) {
        let s = f.structure();
        assert!(s.l_max_abs <= 1.0 + 1e-14, "|L| bound violated: {}", s.l_max_abs);
        assert_eq!(s.l_diag_defect, 0.0);
        assert_eq!(s.l_strict_upper, 0.0);
        assert_eq!(s.u_strict_lower, 0.0);
        assert!(PermutationVector::new(f.p.as_slice().to_vec()).is_ok());
        assert!(PermutationVector::new(f.qc.as_slice().to_vec()).is_ok());
    }

    #[test]
    fn defaults_and_validation() {
        let p = RluParams::defaults(30, 500, 500, 0).unwrap();
        assert_eq!(p.k, 75);
        assert!((p.p - 3.0 / 500.0).abs() < 1e-15);

        // Clamped when 2.5r exceeds the short side.
        assert_eq!(RluParams::defaults(20, 30, 20, 0).unwrap().k, 20);

        assert!(RluParams::defaults(0, 10, 10, 0).is_err());
        let base = RluParams { k: 10, p: 0.5, seed: 0 };
        assert!(base.validate(11, 40, 30).is_err()); // r > k
        assert!(RluParams { k: 31, ..base }.validate(5, 40, 30).is_err()); // k > min
        assert!(RluParams { p: 0.0, ..base }.validate(5, 40, 30).is_err());
        assert!(RluParams { p: 1.5, ..base }.validate(5, 40, 30).is_err());
    }

    #[test]
    fn exact_rank_r_input_is_recovered() {
        let left = sample_dense_gaussian(40, 5, 7);
        let right = sample_dense_gaussian(30, 5, 8);
        let a = gemm_nt(&left, &right);
        let params = RluParams::defaults(5, 40, 30, 19).unwrap();
        let out = randomized_lu(&MatrixInput::Dense(&a), 5, &params).unwrap();
        assert_structure(&out.factors);
        let rel = out.factors.frobenius_residual(&a).unwrap() / a.frobenius_norm();
        assert!(rel <= 1e-8, "relative residual {rel}");
        assert!(out.spectral_residual <= 1e-8 * a.frobenius_norm());
    }

    #[test]
    fn lu_shaped_input_residual_matches_the_svd_tail() {
        // A built from permuted unit-lower times upper factors with a decaying
        // diagonal; the rank-r residual should track σ_{r+1} within factor 3.
        let mut rng = ChaCha8Rng::seed_from_u64(99);
        let (m, n, r) = (60, 50, 10);
        let mut l0 = DenseMatrix::zeros(m, n);
        for i in 0..m {
            for j in 0..n.min(i) {
                l0[(i, j)] = rng.gen_range(-1.0..1.0);
            }
            if i < n {
                l0[(i, i)] = 1.0;
            }
        }
        let mut u0 = DenseMatrix::zeros(n, n);
        for i in 0..n {
            u0[(i, i)] = 2.0_f64.powf(-(i as f64) / 2.0);
            for j in i + 1..n {
                u0[(i, j)] = 0.3 * rng.gen_range(-1.0..1.0) * u0[(i, i)];
            }
        }
        let mut order: Vec<usize> = (0..m).collect();
        for i in (1..m).rev() {
            order.swap(i, rng.gen_range(0..=i));
        }
        let p0 = PermutationVector::new(order).unwrap();
        let a = p0.apply_to_rows(&gemm(&l0, &u0).unwrap()).unwrap();

        let tail = dense_svd(&a).unwrap().s[r];
        let params = RluParams::defaults(r, m, n, 4).unwrap();
        let out = randomized_lu(&MatrixInput::Dense(&a), r, &params).unwrap();
        assert_structure(&out.factors);
        let ratio = out.spectral_residual / tail;
        assert!(
            (0.9..=3.0).contains(&ratio),
            "residual {} vs tail {tail} (ratio {ratio})",
            out.spectral_residual
        );
    }

    #[test]
    fn step_spectrum_ratio_stays_within_three() {
        // Plateau of 30 ones, then a geometric tail from 1e-3 down to 1e-9.
        let mut spectrum = vec![1.0; 500];
        let decay = (1e-9_f64 / 1e-3).powf(1.0 / 469.0);
        for (i, s) in spectrum.iter_mut().enumerate().skip(30) {
            *s = 1e-3 * decay.powi((i - 30) as i32);
        }
        let a = synthetic(500, 500, &spectrum, 12);
        let params = RluParams::defaults(30, 500, 500, 5).unwrap();
        let out = randomized_lu(&MatrixInput::Dense(&a), 30, &params).unwrap();
        assert_structure(&out.factors);
        let ratio = out.spectral_residual / 1e-3;
        assert!(ratio <= 3.0, "ratio {ratio}");
        assert!(ratio >= 0.9, "suspiciously small ratio {ratio}");
    }

    #[test]
    fn full_rank_square_and_rectangular_runs_are_exact() {
        for (m, n, seed) in [(25usize, 25usize, 1u64), (30, 20, 2)] {
            let r = m.min(n);
            let spectrum: Vec<f64> = (1..=r).map(|i| 1.0 / i as f64).collect();
            let a = synthetic(m, n, &spectrum, seed);
            let params = RluParams { k: r, p: 0.5, seed: 60 + seed };
            let out = randomized_lu(&MatrixInput::Dense(&a), r, &params).unwrap();
            assert_structure(&out.factors);
            let res = out.factors.frobenius_residual(&a).unwrap();
            assert!(
                res <= 1e-10 * a.frobenius_norm(),
                "{m}×{n}: residual {res}"
            );
        }
    }

    #[test]
    fn factor_shapes_match_the_contract() {
        let a = synthetic(80, 60, &(1..=60).map(|i| 1.0 / i as f64).collect::<Vec<_>>(), 3);
        let out = randomized_lu(
            &MatrixInput::Dense(&a),
            12,
            &RluParams::defaults(12, 80, 60, 44).unwrap(),
        )
        .unwrap();
        assert_eq!(out.factors.l.shape(), (80, 12));
        assert_eq!(out.factors.u.shape(), (12, 60));
        assert_eq!(out.factors.p.len(), 80);
        assert_eq!(out.factors.qc.len(), 60);
        assert_eq!(out.factors.rank(), 12);
        assert_structure(&out.factors);
    }

    #[test]
    fn sparse_and_dense_inputs_agree() {
        let mut triplets = Vec::new();
        for i in 0..40 {
            triplets.push((i, i, 1.0 / (1 + i) as f64));
            triplets.push((i, (i * 7 + 3) % 40, 0.05));
        }
        let sp = CsrMatrix::from_triplets(40, 40, &triplets).unwrap();
        let de = sp.to_dense();
        let params = RluParams { k: 20, p: 0.3, seed: 77 };
        let a = randomized_lu(&MatrixInput::Sparse(&sp), 8, &params).unwrap();
        let b = randomized_lu(&MatrixInput::Dense(&de), 8, &params).unwrap();
        assert_eq!(a.factors.p, b.factors.p);
        assert_eq!(a.factors.qc, b.factors.qc);
        assert_eq!(a.factors.l.entries(), b.factors.l.entries());
        assert_eq!(a.factors.u.entries(), b.factors.u.entries());
    }

    #[test]
    fn runs_are_seed_deterministic() {
        let a = synthetic(30, 24, &(1..=24).map(|i| 1.0 / i as f64).collect::<Vec<_>>(), 6);
        let params = RluParams::defaults(6, 30, 24, 13).unwrap();
        let x = randomized_lu(&MatrixInput::Dense(&a), 6, &params).unwrap();
        let y = randomized_lu(&MatrixInput::Dense(&a), 6, &params).unwrap();
        assert_eq!(x.factors.l.entries(), y.factors.l.entries());
        assert_eq!(x.factors.u.entries(), y.factors.u.entries());
        assert_eq!(x.spectral_residual, y.spectral_residual);

        let z = randomized_lu(&MatrixInput::Dense(&a), 6, &params.with_seed(14)).unwrap();
        assert_ne!(x.factors.l.entries(), z.factors.l.entries());
    }

    #[test]
    fn starved_sketch_reports_rank_deficiency() {
        let a = synthetic(20, 16, &(1..=16).map(|i| 1.0 / i as f64).collect::<Vec<_>>(), 2);
        let params = RluParams { k: 8, p: 1e-9, seed: 3 };
        match randomized_lu(&MatrixInput::Dense(&a), 4, &params) {
            Err(Error::RankDeficientSketch { observed, required }) => {
                assert!(observed < required);
            }
            Err(other) => panic!("unexpected error: {other}"),
            Ok(_) => panic!("expected rank-deficiency error, got factors"),
        }
    }

    #[test]
    fn record_carries_structure_diagnostics() {
        let a = synthetic(24, 18, &(1..=18).map(|i| 1.0 / i as f64).collect::<Vec<_>>(), 9);
        let params = RluParams::defaults(5, 24, 18, 31).unwrap();
        let out = randomized_lu(&MatrixInput::Dense(&a), 5, &params).unwrap();
        let json = serde_json::to_value(out.record(5, &params)).unwrap();
        assert_eq!(json["r"], 5);
        assert!(json["params"]["k"].is_number());
        assert!(json["err_spectral"].is_number());
        assert!(json["structure"]["l_max_abs"].as_f64().unwrap() <= 1.0 + 1e-14);
    }
}
