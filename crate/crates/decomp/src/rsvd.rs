//! Randomized rank-`r` SVD through two sparse sub-Gaussian sketches.
//!
//! The pipeline: compress the columns of `A` with a sparse sketch `Ω₁`
//! re-mixed by a small Gaussian `Ω₁′`; orthonormalize the compressed columns
//! (thin QR); then recover the row structure by solving a second, independent
//! sketch `Ω₂` against both `Q` and `A`:
//!
//! ```text
//! W = Ω₁ᵀ·Ω₁′ᵀ          (n × l, sparse × small dense)
//! B = A·W               (m × l, one pass over A)
//! B = Q·R               (thin QR)
//! T = (Ω₂Q)†·(Ω₂A)      (l × n)
//! T = Ũ·Σ·Ṽᵀ            (small dense SVD, truncated to r)
//! U = Q·Ũᵣ
//! ```
//!
//! `A` only ever appears in two products (`A·W` and `Ω₂A`), so sparse and
//! matrix-free inputs run at sketch cost. `W` is formed before touching `A`;
//! this is arithmetically identical — bit for bit — to precomputing the
//! composite sketch `Ω₁′·Ω₁` and costs `O(nnz(A)·l)` instead of
//! `O(m·k₁·l)` on the big operand.

use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{
    dense_svd, default_rank_tol, gemm, gemm_nt, gemm_tn, numerical_rank, spectral_norm_estimate,
    spmm, thin_qr, CsrMatrix, DenseMatrix, DifferenceOperator, LinearOperator, LowRankOperator,
    Side,
};
use crate::sketch::{
    derive_seed, sample_countsketch, sample_dense_gaussian, sample_sparse_subgaussian,
    sample_srft_apply, sketch_matrix, DataOperand, SketchKind, SketchMode, SketchOperand,
    SketchSpec, SubGaussianLaw,
};

pub(crate) const TAG_OMEGA1: u64 = 0xA1;
pub(crate) const TAG_OMEGA1_PRIME: u64 = 0xA2;
pub(crate) const TAG_OMEGA2: u64 = 0xA3;
pub(crate) const TAG_RESIDUAL: u64 = 0xA4;

/// Power-iteration count used for residual spectral-norm estimates.
pub const RESIDUAL_POWER_ITERS: usize = 100;

// ── Parameters ─────────────────────────────────────────────────────────────

/// Parameter bundle for [`randomized_svd`]: target rank `r`, first sketch
/// rows `k1`, second sketch rows `k2`, Gaussian re-compression rows `l`, and
/// sketch densities `p1` (for the `k1 × n` sketch) and `p2` (`k2 × m`).
///
/// Validity: `r ≤ l ≤ k1`, `l ≤ k2` (so `Ω₂Q` has a left inverse), and all
/// of them at most `min(m, n)`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct RsvdParams {
    pub r: usize,
    pub k1: usize,
    pub k2: usize,
    pub l: usize,
    pub p1: f64,
    pub p2: f64,
    pub seed: u64,
}

impl RsvdParams {
    /// Defaults for an `m × n` target: `k1 = ⌈2.5r⌉`, `k2 = ⌈3.5r⌉`,
    /// `l = ⌈1.25r⌉ + 8` (clamped so the invariants hold), densities
    /// `p1 = 3/n`, `p2 = 3/m`.
    pub fn defaults(r: usize, m: usize, n: usize, seed: u64) -> Result<Self> {
        let minmn = m.min(n);
        if r == 0 || r > minmn {
            return Err(Error::InvalidParams(format!(
                "target rank {r} outside [1, min(m, n) = {minmn}]"
            )));
        }
        let ceil_mul = |x: usize, num: usize, den: usize| (x * num + den - 1) / den;
        let k1 = ceil_mul(r, 5, 2).min(minmn);
        let k2 = ceil_mul(r, 7, 2).min(minmn);
        let l = (ceil_mul(r, 5, 4) + 8).min(k1).min(k2);
        let params = RsvdParams {
            r,
            k1,
            k2,
            l,
            p1: (3.0 / n as f64).min(1.0),
            p2: (3.0 / m as f64).min(1.0),
            seed,
        };
        params.validate(m, n)?;
        Ok(params)
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    pub fn validate(&self, m: usize, n: usize) -> Result<()> {
        let minmn = m.min(n);
        if self.r == 0 {
            return Err(Error::InvalidParams("target rank must be positive".into()));
        }
        if !(self.r <= self.l && self.l <= self.k1) {
            return Err(Error::InvalidParams(format!(
                "need r ≤ l ≤ k1, got r = {}, l = {}, k1 = {}",
                self.r, self.l, self.k1
            )));
        }
        if self.l > self.k2 {
            return Err(Error::InvalidParams(format!(
                "need l ≤ k2 so the second sketch of Q stays left-invertible, got l = {}, k2 = {}",
                self.l, self.k2
            )));
        }
        if self.k1 > minmn || self.k2 > minmn {
            return Err(Error::InvalidParams(format!(
                "sketch sizes k1 = {}, k2 = {} exceed min(m, n) = {minmn}",
                self.k1, self.k2
            )));
        }
        for (name, p) in [("p1", self.p1), ("p2", self.p2)] {
            if !(p > 0.0 && p <= 1.0) {
                return Err(Error::InvalidParams(format!("density {name} = {p} outside (0, 1]")));
            }
        }
        Ok(())
    }
}

// ── Inputs and outputs ─────────────────────────────────────────────────────

/// The matrix being decomposed: dense, sparse, or matrix-free.
pub enum MatrixInput<'a> {
    Dense(&'a DenseMatrix),
    Sparse(&'a CsrMatrix),
    Operator(&'a dyn LinearOperator),
}

impl MatrixInput<'_> {
    pub fn shape(&self) -> (usize, usize) {
        match self {
            MatrixInput::Dense(a) => a.shape(),
            MatrixInput::Sparse(a) => (a.rows(), a.cols()),
            MatrixInput::Operator(a) => (a.rows(), a.cols()),
        }
    }

    pub(crate) fn data_operand(&self) -> DataOperand<'_> {
        match self {
            MatrixInput::Dense(a) => DataOperand::Dense(a),
            MatrixInput::Sparse(a) => DataOperand::Sparse(a),
            MatrixInput::Operator(a) => DataOperand::Operator(*a),
        }
    }
}

impl LinearOperator for MatrixInput<'_> {
    fn rows(&self) -> usize {
        self.shape().0
    }
    fn cols(&self) -> usize {
        self.shape().1
    }
    fn apply(&self, x: &DenseMatrix) -> DenseMatrix {
        match self {
            MatrixInput::Dense(a) => a.apply(x),
            MatrixInput::Sparse(a) => a.apply(x),
            MatrixInput::Operator(a) => a.apply(x),
        }
    }
    fn adjoint_apply(&self, y: &DenseMatrix) -> DenseMatrix {
        match self {
            MatrixInput::Dense(a) => a.adjoint_apply(y),
            MatrixInput::Sparse(a) => a.adjoint_apply(y),
            MatrixInput::Operator(a) => a.adjoint_apply(y),
        }
    }
    fn nnz_hint(&self) -> Option<usize> {
        match self {
            MatrixInput::Sparse(a) => Some(a.nnz()),
            MatrixInput::Dense(_) | MatrixInput::Operator(_) => None,
        }
    }
}

/// Rank-`r` factors `U·diag(s)·Vᵀ` with orthonormal `U` (m×r) and `V` (n×r),
/// `s` sorted descending.
#[derive(Clone, Debug)]
pub struct SvdFactors {
    pub u: DenseMatrix,
    pub s: Vec<f64>,
    pub v: DenseMatrix,
}

impl SvdFactors {
    pub fn rank(&self) -> usize {
        self.s.len()
    }

    /// Worst of `‖UᵀU − I‖_max` and `‖VᵀV − I‖_max`.
    pub fn orthonormality_defect(&self) -> f64 {
        self.u.orthonormality_defect().max(self.v.orthonormality_defect())
    }

    pub fn is_sorted_descending(&self) -> bool {
        self.s.windows(2).all(|w| w[0] >= w[1]) && self.s.iter().all(|&x| x >= 0.0)
    }

    /// The factors as a matrix-free operator.
    pub fn as_operator(&self) -> LowRankOperator<'_> {
        LowRankOperator { u: &self.u, s: &self.s, v: &self.v }
    }
}

/// Wall time of each pipeline stage, in milliseconds. `total_ms` covers the
/// decomposition itself; residual estimation is measurement and is excluded.
#[derive(Clone, Copy, Debug, Default, Serialize, Deserialize)]
pub struct StageTimings {
    pub sketch_ms: f64,
    pub qr_ms: f64,
    pub second_sketch_ms: f64,
    pub small_svd_ms: f64,
    pub total_ms: f64,
}

/// A decomposition plus its diagnostics.
pub struct RsvdResult {
    pub factors: SvdFactors,
    pub timings: StageTimings,
    /// Power-iteration estimate of `‖A − U·diag(s)·Vᵀ‖₂`.
    pub spectral_residual: f64,
    /// Exact `‖A − U·diag(s)·Vᵀ‖_F`; `None` for matrix-free inputs.
    pub frobenius_residual: Option<f64>,
}

impl RsvdResult {
    pub fn record(&self, params: &RsvdParams) -> RsvdRecord {
        RsvdRecord {
            params: *params,
            timings: self.timings,
            err_spectral: self.spectral_residual,
            err_frobenius: self.frobenius_residual,
            singular_values: self.factors.s.clone(),
        }
    }
}

/// Serializable run summary (the factor matrices themselves are omitted).
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct RsvdRecord {
    pub params: RsvdParams,
    pub timings: StageTimings,
    pub err_spectral: f64,
    pub err_frobenius: Option<f64>,
    pub singular_values: Vec<f64>,
}

// ── The decomposition ──────────────────────────────────────────────────────

/// Randomized rank-`r` SVD with sparse sub-Gaussian sketches on both sides.
pub fn randomized_svd(a: &MatrixInput, params: &RsvdParams) -> Result<RsvdResult> {
    randomized_svd_with_kind(a, params, SketchKind::SparseSubgaussian)
}

/// Same pipeline with the first-stage sketch ensemble swapped out (the
/// second sketch stays sparse sub-Gaussian — it is part of the algorithm,
/// not of the comparison). Used by the benchmark harness to compare
/// ensembles under identical downstream treatment.
pub fn randomized_svd_with_kind(
    a: &MatrixInput,
    params: &RsvdParams,
    kind: SketchKind,
) -> Result<RsvdResult> {
    let (m, n) = a.shape();
    params.validate(m, n)?;
    let seed = params.seed;

    // Stage 1: W = Ω₁ᵀ·Ω₁′ᵀ, then B = A·W — the only pass over all of A.
    let clock = Instant::now();
    let omega1p = sample_dense_gaussian(params.l, params.k1, derive_seed(seed, TAG_OMEGA1_PRIME));
    let omega1p_t = omega1p.transpose(); // k1 × l
    let w = match kind {
        SketchKind::SparseSubgaussian => {
            let spec = SketchSpec::new(params.k1, n, params.p1, derive_seed(seed, TAG_OMEGA1))?;
            let omega1 = sample_sparse_subgaussian(&spec, &SubGaussianLaw::normal())?;
            spmm(&omega1, &omega1p_t, Side::Left, true)?
        }
        SketchKind::Countsketch => {
            let omega1 = sample_countsketch(params.k1, n, derive_seed(seed, TAG_OMEGA1));
            spmm(&omega1, &omega1p_t, Side::Left, true)?
        }
        SketchKind::Srft => {
            let omega1 = sample_srft_apply(n, params.k1, derive_seed(seed, TAG_OMEGA1));
            omega1.adjoint_apply(&omega1p_t)
        }
        SketchKind::DenseGaussian => {
            let omega1 = sample_dense_gaussian(params.k1, n, derive_seed(seed, TAG_OMEGA1));
            gemm_tn(&omega1, &omega1p_t)
        }
    };
    let b = a.apply(&w); // m × l
    let sketch_ms = clock.elapsed().as_secs_f64() * 1e3;

    // Stage 2: orthonormalize the compressed columns.
    let clock = Instant::now();
    let (q, _r) = thin_qr(&b)?;
    let qr_ms = clock.elapsed().as_secs_f64() * 1e3;

    // Stage 3: the independent second sketch of both Q and A.
    let clock = Instant::now();
    let spec2 = SketchSpec::new(params.k2, m, params.p2, derive_seed(seed, TAG_OMEGA2))?;
    let omega2 = sample_sparse_subgaussian(&spec2, &SubGaussianLaw::normal())?;
    let omega2q = spmm(&omega2, &q, Side::Left, false)?;
    let omega2a = sketch_matrix(
        &SketchOperand::Sparse(&omega2),
        &a.data_operand(),
        SketchMode::Left,
    )?;
    let second_sketch_ms = clock.elapsed().as_secs_f64() * 1e3;

    // Stage 4: left-invert Ω₂Q, small SVD, lift back through Q.
    let clock = Instant::now();
    let rank_tol = default_rank_tol(params.k2, params.l);
    let oq_svd = dense_svd(&omega2q)?;
    let observed = numerical_rank(&oq_svd.s, rank_tol);
    if observed < params.l {
        return Err(Error::RankDeficientSketch { observed, required: params.l });
    }
    let pinv = oq_svd.pseudo_inverse(rank_tol); // l × k2
    let t = gemm(&pinv, &omega2a)?; // l × n
    let t_svd = dense_svd(&t)?;
    let u_small = t_svd.u.truncate_cols(params.r);
    let mut s = t_svd.s;
    s.truncate(params.r);
    let v = t_svd.v.truncate_cols(params.r);
    let u = gemm(&q, &u_small)?;
    let small_svd_ms = clock.elapsed().as_secs_f64() * 1e3;

    let factors = SvdFactors { u, s, v };
    let spectral_residual = spectral_norm_estimate(
        &DifferenceOperator { a, b: factors.as_operator() },
        RESIDUAL_POWER_ITERS,
        derive_seed(seed, TAG_RESIDUAL),
    );
    let frobenius_residual = frobenius_residual(a, &factors);

    Ok(RsvdResult {
        factors,
        timings: StageTimings {
            sketch_ms,
            qr_ms,
            second_sketch_ms,
            small_svd_ms,
            total_ms: sketch_ms + qr_ms + second_sketch_ms + small_svd_ms,
        },
        spectral_residual,
        frobenius_residual,
    })
}

/// Exact `‖A − U·diag(s)·Vᵀ‖_F` for stored inputs, streamed over row blocks
/// so the low-rank product is never fully materialized.
pub fn frobenius_residual(a: &MatrixInput, f: &SvdFactors) -> Option<f64> {
    const BLOCK: usize = 256;
    let (m, _n) = a.shape();
    let mut total = 0.0;
    let mut block = |lo: usize, hi: usize, fill: &dyn Fn(&mut DenseMatrix)| {
        // rows lo..hi of U·diag(s) — small (block × r)
        let r = f.s.len();
        let mut us = DenseMatrix::zeros(hi - lo, r);
        for i in lo..hi {
            for j in 0..r {
                us[(i - lo, j)] = f.u[(i, j)] * f.s[j];
            }
        }
        let mut diff = gemm_nt(&us, &f.v).scaled(-1.0); // −(UΣVᵀ) rows
        fill(&mut diff);
        total += diff.frobenius_norm().powi(2);
    };
    match a {
        MatrixInput::Dense(a) => {
            let mut lo = 0;
            while lo < m {
                let hi = (lo + BLOCK).min(m);
                block(lo, hi, &|diff: &mut DenseMatrix| {
                    for i in lo..hi {
                        for (d, &v) in diff.row_mut(i - lo).iter_mut().zip(a.row(i)) {
                            *d += v;
                        }
                    }
                });
                lo = hi;
            }
        }
        MatrixInput::Sparse(a) => {
            let mut lo = 0;
            while lo < m {
                let hi = (lo + BLOCK).min(m);
                block(lo, hi, &|diff: &mut DenseMatrix| {
                    for i in lo..hi {
                        let (cols, vals) = a.row(i);
                        for (&j, &v) in cols.iter().zip(vals) {
                            diff[(i - lo, j)] += v;
                        }
                    }
                });
                lo = hi;
            }
        }
        MatrixInput::Operator(_) => return None,
    }
    Some(total.sqrt())
}

// ── Truncation and the Weyl check ──────────────────────────────────────────

/// Keeps the leading `r` singular triplets.
pub fn truncate_rank(u: &DenseMatrix, s: &[f64], v: &DenseMatrix, r: usize) -> Result<SvdFactors> {
    if r == 0 || r > s.len() {
        return Err(Error::InvalidParams(format!(
            "truncation rank {r} outside [1, {}]",
            s.len()
        )));
    }
    Ok(SvdFactors {
        u: u.truncate_cols(r),
        s: s[..r].to_vec(),
        v: v.truncate_cols(r),
    })
}

/// Per-index singular-value gaps of two equal-shape matrices against the
/// spectral norm of their difference.
#[derive(Clone, Debug, Serialize)]
pub struct WeylReport {
    /// `‖A − B‖₂`.
    pub epsilon: f64,
    /// `|σ_k(A) − σ_k(B)|` for each k.
    pub gaps: Vec<f64>,
    pub max_gap: f64,
    /// Slack used on top of `epsilon` (`1e-10 · ‖A‖₂`).
    pub tolerance: f64,
    /// Whether `max_gap ≤ epsilon + tolerance`.
    pub holds: bool,
}

/// Checks the singular-value perturbation inequality
/// `|σ_k(A) − σ_k(B)| ≤ ‖A − B‖₂` for every index.
pub fn weyl_check(a: &DenseMatrix, b: &DenseMatrix) -> Result<WeylReport> {
    if a.shape() != b.shape() {
        return Err(Error::dim("weyl_check", a.shape(), b.shape()));
    }
    let sa = dense_svd(a)?.s;
    let sb = dense_svd(b)?.s;
    let diff = a.sub(b)?;
    let epsilon = dense_svd(&diff)?.s.first().copied().unwrap_or(0.0);
    let gaps: Vec<f64> = sa.iter().zip(&sb).map(|(x, y)| (x - y).abs()).collect();
    let max_gap = gaps.iter().cloned().fold(0.0, f64::max);
    let tolerance = 1e-10 * sa.first().copied().unwrap_or(0.0);
    Ok(WeylReport {
        epsilon,
        gaps,
        max_gap,
        tolerance,
        holds: max_gap <= epsilon + tolerance,
    })
}

// ── Tests ──────────────────────────────────────────────────────────────────
