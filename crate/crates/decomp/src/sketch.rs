//! Seeded samplers for the random sketch ensembles used by the
//! decompositions: sparse sub-Gaussian, dense Gaussian, CountSketch, and a
//! subsampled randomized Fourier transform, plus `sketch_matrix`, which
//! applies a sketch to a dense, sparse, or matrix-free operand at a cost
//! proportional to the stored nonzeros.
//!
//! Every sampler is a pure function of its seed. Rows are generated on
//! independent RNG streams keyed by row index, so outputs never depend on
//! evaluation order.

use rand::distributions::Distribution;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Binomial, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fourier::RealDft;
use crate::linalg::{
    csr_csr_dense, materialize, spmm, CsrMatrix, DenseMatrix, LinearOperator, Side,
};

// ── Seeds ──────────────────────────────────────────────────────────────────

/// Derives an independent 64-bit seed from a base seed and a tag
/// (splitmix64 finalizer). Used to give each stage of a pipeline, each row,
/// or each Monte-Carlo trial its own stream without seed collisions.
pub fn derive_seed(base: u64, tag: u64) -> u64 {
    let mut z = base ^ tag.wrapping_mul(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

fn row_rng(seed: u64, row: usize) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(row as u64);
    rng
}

// ── Ensemble descriptions ──────────────────────────────────────────────────

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SketchKind {
    SparseSubgaussian,
    DenseGaussian,
    Countsketch,
    Srft,
}

/// Declarative description of a sketch ensemble: kind, shape `rows × cols`
/// (the sketch is applied to length-`cols` vectors), nonzero density `p`
/// (meaningful for the sparse sub-Gaussian kind), and seed.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SketchSpec {
    pub kind: SketchKind,
    pub rows: usize,
    pub cols: usize,
    pub p: f64,
    pub seed: u64,
}

impl SketchSpec {
    /// Builds a sparse sub-Gaussian spec (the default ensemble). `p` must
    /// lie in (0, 1]. A sketch with more rows than columns is unusual for
    /// embedding use and is warned about, not rejected.
    pub fn new(rows: usize, cols: usize, p: f64, seed: u64) -> Result<Self> {
        if rows == 0 || cols == 0 {
            return Err(Error::InvalidParams(format!(
                "sketch dimensions must be positive, got {rows}x{cols}"
            )));
        }
        if !(p > 0.0 && p <= 1.0) {
            return Err(Error::InvalidDensity(p));
        }
        if rows > cols {
            log::warn!("sketch has more rows ({rows}) than columns ({cols}); it cannot reduce dimension");
        }
        Ok(SketchSpec {
            kind: SketchKind::SparseSubgaussian,
            rows,
            cols,
            p,
            seed,
        })
    }

    pub fn with_kind(mut self, kind: SketchKind) -> Self {
        self.kind = kind;
        self
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum BaseLaw {
    StandardNormal,
    Rademacher,
}

/// The nonzero-value law of a sparse sub-Gaussian entry: a unit-variance
/// base draw `Z`, optionally scaled by `1/√p` so the sparse entry keeps unit
/// second moment. The decompositions default to the unscaled variant (a
/// global scale cancels out of the factors); the distribution checks in the
/// `conservation` module use the scaled one, whose moments the bounds are
/// stated for.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct SubGaussianLaw {
    pub base: BaseLaw,
    pub scaled: bool,
}

impl SubGaussianLaw {
    pub fn normal() -> Self {
        SubGaussianLaw {
            base: BaseLaw::StandardNormal,
            scaled: false,
        }
    }

    pub fn scaled_normal() -> Self {
        SubGaussianLaw {
            base: BaseLaw::StandardNormal,
            scaled: true,
        }
    }

    pub fn rademacher() -> Self {
        SubGaussianLaw {
            base: BaseLaw::Rademacher,
            scaled: false,
        }
    }

    pub fn scaled_rademacher() -> Self {
        SubGaussianLaw {
            base: BaseLaw::Rademacher,
            scaled: true,
        }
    }

    /// E Z³ of the base law (zero: both supported laws are symmetric).
    pub fn z3(&self) -> f64 {
        0.0
    }

    /// E Z⁴ of the base law.
    pub fn ez4(&self) -> f64 {
        match self.base {
            BaseLaw::StandardNormal => 3.0,
            BaseLaw::Rademacher => 1.0,
        }
    }

    /// The kurtosis bound constant `z₄ = E Z⁴ + 1` the tail estimates use.
    pub fn z4(&self) -> f64 {
        self.ez4() + 1.0
    }

    /// Multiplier applied to each nonzero draw at density `p`.
    pub fn scale_factor(&self, p: f64) -> f64 {
        if self.scaled {
            1.0 / p.sqrt()
        } else {
            1.0
        }
    }

    /// One unscaled draw of the base variable `Z`.
    pub fn draw(&self, rng: &mut ChaCha8Rng) -> f64 {
        match self.base {
            BaseLaw::StandardNormal => rng.sample(StandardNormal),
            BaseLaw::Rademacher => {
                if rng.gen::<bool>() {
                    1.0
                } else {
                    -1.0
                }
            }
        }
    }
}

// ── Samplers ───────────────────────────────────────────────────────────────

/// Samples a sparse sub-Gaussian sketch: each entry is independently zero
/// with probability `1 − p` and a draw of the law otherwise. Per row, the
/// nonzero count is Binomial(cols, p) and positions are sampled without
/// replacement, so creation costs O(nnz) rather than O(rows·cols) Bernoulli
/// trials while realizing exactly the i.i.d. entry law.
pub fn sample_sparse_subgaussian(spec: &SketchSpec, law: &SubGaussianLaw) -> Result<CsrMatrix> {
    if spec.kind != SketchKind::SparseSubgaussian {
        return Err(Error::InvalidParams(format!(
            "sample_sparse_subgaussian called with kind {:?}",
            spec.kind
        )));
    }
    if !(spec.p > 0.0 && spec.p <= 1.0) {
        return Err(Error::InvalidDensity(spec.p));
    }
    let scale = law.scale_factor(spec.p);
    let binomial = Binomial::new(spec.cols as u64, spec.p)
        .map_err(|e| Error::InvalidParams(format!("binomial setup failed: {e}")))?;

    let mut row_offsets = Vec::with_capacity(spec.rows + 1);
    row_offsets.push(0usize);
    let mut col_indices = Vec::new();
    let mut values = Vec::new();
    for row in 0..spec.rows {
        let mut rng = row_rng(spec.seed, row);
        let count = binomial.sample(&mut rng) as usize;
        let mut positions = rand::seq::index::sample(&mut rng, spec.cols, count).into_vec();
        positions.sort_unstable();
        for pos in positions {
            col_indices.push(pos);
            values.push(law.draw(&mut rng) * scale);
        }
        row_offsets.push(col_indices.len());
    }
    CsrMatrix::from_parts(spec.rows, spec.cols, row_offsets, col_indices, values)
}

/// Samples a dense matrix of i.i.d. standard normal entries, one RNG stream
/// per row.
pub fn sample_dense_gaussian(rows: usize, cols: usize, seed: u64) -> DenseMatrix {
    let mut out = DenseMatrix::zeros(rows, cols);
    for row in 0..rows {
        let mut rng = row_rng(seed, row);
        for col in 0..cols {
            out[(row, col)] = rng.sample(StandardNormal);
        }
    }
    out
}

/// Samples a CountSketch matrix: every column holds exactly one nonzero, in
/// a uniformly random row, with value ±1 equiprobably, so `nnz = cols` and
/// application costs one add per input coordinate.
pub fn sample_countsketch(k: usize, n: usize, seed: u64) -> CsrMatrix {
    assert!(k >= 1 && n >= 1, "sketch dimensions must be positive");
    if k > n {
        log::warn!("CountSketch with more rows ({k}) than columns ({n}); it cannot reduce dimension");
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut triplets = Vec::with_capacity(n);
    for col in 0..n {
        let row = rng.gen_range(0..k);
        let value = if rng.gen::<bool>() { 1.0 } else { -1.0 };
        triplets.push((row, col, value));
    }
    CsrMatrix::from_triplets(k, n, &triplets).expect("CountSketch triplets are always valid")
}

// ── Subsampled randomized Fourier transform ────────────────────────────────

/// Matrix-free SRFT operator `x ↦ √(n/k) · gather(C(D·x))`: random ±1 sign
/// flip `D`, the orthonormal real Fourier map `C` (see [`crate::fourier`]),
/// then a uniformly-without-replacement selection of `k` of the `n` real
/// components, kept in ascending order. Applying it costs O(n log n) per
/// column via the FFT.
pub struct SrftOperator {
    n: usize,
    k: usize,
    signs: Vec<f64>,
    selected: Vec<usize>,
    scale: f64,
    dft: RealDft,
}

/// Samples an SRFT sketch operator of shape `k × n`.
pub fn sample_srft_apply(n: usize, k: usize, seed: u64) -> SrftOperator {
    assert!(n >= 1 && k >= 1, "sketch dimensions must be positive");
    if k > n {
        log::warn!("SRFT with more rows ({k}) than columns ({n}); it cannot reduce dimension");
    }
    let amount = k.min(n);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let signs: Vec<f64> = (0..n)
        .map(|_| if rng.gen::<bool>() { 1.0 } else { -1.0 })
        .collect();
    let mut selected = rand::seq::index::sample(&mut rng, n, amount).into_vec();
    // Rows beyond n (k > n, warned above) repeat components cyclically so the
    // operator still has the declared shape.
    for extra in amount..k {
        selected.push(extra % n);
    }
    selected[..amount].sort_unstable();
    SrftOperator {
        n,
        k,
        signs,
        selected,
        scale: (n as f64 / k as f64).sqrt(),
        dft: RealDft::new(n),
    }
}

impl SrftOperator {
    fn transform_column(&self, col: &[f64]) -> Vec<f64> {
        let flipped: Vec<f64> = col
            .iter()
            .zip(&self.signs)
            .map(|(&v, &s)| v * s)
            .collect();
        let spectrum = self.dft.forward(&flipped);
        self.selected
            .iter()
            .map(|&i| spectrum[i] * self.scale)
            .collect()
    }

    fn adjoint_column(&self, col: &[f64]) -> Vec<f64> {
        let mut spectrum = vec![0.0; self.n];
        for (r, &i) in self.selected.iter().enumerate() {
            spectrum[i] += col[r] * self.scale;
        }
        let back = self.dft.inverse(&spectrum);
        back.iter().zip(&self.signs).map(|(&v, &s)| v * s).collect()
    }
}

impl LinearOperator for SrftOperator {
    fn rows(&self) -> usize {
        self.k
    }

    fn cols(&self) -> usize {
        self.n
    }

    fn apply(&self, x: &DenseMatrix) -> DenseMatrix {
        assert_eq!(x.rows(), self.n, "operand rows must match operator cols");
        let mut out = DenseMatrix::zeros(self.k, x.cols());
        for j in 0..x.cols() {
            let col = self.transform_column(&x.column(j));
            for i in 0..self.k {
                out[(i, j)] = col[i];
            }
        }
        out
    }

    fn adjoint_apply(&self, y: &DenseMatrix) -> DenseMatrix {
        assert_eq!(y.rows(), self.k, "operand rows must match operator rows");
        let mut out = DenseMatrix::zeros(self.n, y.cols());
        for j in 0..y.cols() {
            let col = self.adjoint_column(&y.column(j));
            for i in 0..self.n {
                out[(i, j)] = col[i];
            }
        }
        out
    }
}

// ── Sketch application ─────────────────────────────────────────────────────

/// A sketch operand: explicitly stored sparse, or matrix-free.
pub enum SketchOperand<'a> {
    Sparse(&'a CsrMatrix),
    Operator(&'a dyn LinearOperator),
}

/// The matrix being sketched.
pub enum DataOperand<'a> {
    Dense(&'a DenseMatrix),
    Sparse(&'a CsrMatrix),
    Operator(&'a dyn LinearOperator),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SketchMode {
    /// `S · A` — compresses the rows of `A`.
    Left,
    /// `A · Sᵀ` — compresses the columns of `A`.
    RightTranspose,
}

impl SketchOperand<'_> {
    fn shape(&self) -> (usize, usize) {
        match self {
            SketchOperand::Sparse(s) => (s.rows(), s.cols()),
            SketchOperand::Operator(s) => (s.rows(), s.cols()),
        }
    }
}

impl DataOperand<'_> {
    fn shape(&self) -> (usize, usize) {
        match self {
            DataOperand::Dense(a) => a.shape(),
            DataOperand::Sparse(a) => (a.rows(), a.cols()),
            DataOperand::Operator(a) => (a.rows(), a.cols()),
        }
    }
}

/// Applies a sketch to a matrix: `S·A` or `A·Sᵀ`. Sparse–sparse products run
/// in time proportional to the stored nonzeros; matrix-free operands are
/// driven through their `apply`/`adjoint_apply` so nothing larger than the
/// result is ever materialized.
pub fn sketch_matrix(s: &SketchOperand, a: &DataOperand, mode: SketchMode) -> Result<DenseMatrix> {
    let (sk, sn) = s.shape();
    let (am, an) = a.shape();
    match mode {
        SketchMode::Left => {
            if sn != am {
                return Err(Error::dim("sketch_matrix(S·A)", (sk, sn), (am, an)));
            }
        }
        SketchMode::RightTranspose => {
            if an != sn {
                return Err(Error::dim("sketch_matrix(A·Sᵀ)", (am, an), (sn, sk)));
            }
        }
    }

    match (mode, s, a) {
        (SketchMode::Left, SketchOperand::Sparse(s), DataOperand::Dense(a)) => {
            spmm(s, a, Side::Left, false)
        }
        (SketchMode::Left, SketchOperand::Sparse(s), DataOperand::Sparse(a)) => {
            csr_csr_dense(s, a)
        }
        (SketchMode::Left, SketchOperand::Sparse(s), DataOperand::Operator(a)) => {
            // S·A = (Aᵀ·Sᵀ)ᵀ, staged through the operator's adjoint.
            let st = s.transpose().to_dense();
            Ok(a.adjoint_apply(&st).transpose())
        }
        (SketchMode::Left, SketchOperand::Operator(s), DataOperand::Dense(a)) => Ok(s.apply(a)),
        (SketchMode::Left, SketchOperand::Operator(s), DataOperand::Sparse(a)) => {
            Ok(s.apply(&a.to_dense()))
        }
        (SketchMode::Left, SketchOperand::Operator(s), DataOperand::Operator(a)) => {
            Ok(s.apply(&materialize(*a)))
        }
        (SketchMode::RightTranspose, SketchOperand::Sparse(s), DataOperand::Dense(a)) => {
            spmm(s, a, Side::Right, true)
        }
        (SketchMode::RightTranspose, SketchOperand::Sparse(s), DataOperand::Sparse(a)) => {
            csr_csr_dense(a, &s.transpose())
        }
        (SketchMode::RightTranspose, SketchOperand::Sparse(s), DataOperand::Operator(a)) => {
            Ok(a.apply(&s.transpose().to_dense()))
        }
        (SketchMode::RightTranspose, SketchOperand::Operator(s), DataOperand::Dense(a)) => {
            Ok(s.apply(&a.transpose()).transpose())
        }
        (SketchMode::RightTranspose, SketchOperand::Operator(s), DataOperand::Sparse(a)) => {
            Ok(s.apply(&a.transpose().to_dense()).transpose())
        }
        (SketchMode::RightTranspose, SketchOperand::Operator(s), DataOperand::Operator(a)) => {
            let st = s.adjoint_apply(&DenseMatrix::identity(s.rows()));
            Ok(a.apply(&st))
        }
    }
}

// ── Tests ──────────────────────────────────────────────────────────────────
