//! Experiment grids: build synthetic test matrices, run every requested
//! method at every requested rank, and collect per-stage timings plus error
//! metrics against the known spectrum.
//!
//! A grid cell is one `(matrix, method, rank)` triple. Cells are independent
//! — each derives its own seed from the matrix seed, the method, and the
//! rank — so a failed cell is recorded and skipped rather than aborting the
//! sweep, and the parallel mode produces bit-identical numeric output.

use std::fmt;
use std::fs;
use std::path::{Path, PathBuf};
use std::str::FromStr;
use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::bench::dft::{dft_sandwich_operator, DftSandwichOperator};
use crate::bench::spectrum::SpectrumSpec;
use crate::error::{Error, Result};
use crate::linalg::{dense_svd, gemm_nt, materialize, thin_qr, DenseMatrix};
use crate::rsvd::{randomized_svd_with_kind, MatrixInput, RsvdParams, StageTimings};
use crate::sketch::{derive_seed, sample_dense_gaussian, SketchKind};

// ── Seed derivation tags ───────────────────────────────────────────────────

const TAG_SYNTH_U: u64 = 0xD1;
const TAG_SYNTH_V: u64 = 0xD2;
const TAG_CELL: u64 = 0xD3;

// ── Methods ────────────────────────────────────────────────────────────────

/// A column in the comparison tables: one of the four sketch ensembles for
/// the randomized SVD, or the dense SVD baseline.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Method {
    SparseSubgaussian,
    Gaussian,
    Countsketch,
    Srft,
    FullSvd,
}

impl Method {
    pub const ALL: [Method; 5] = [
        Method::SparseSubgaussian,
        Method::Gaussian,
        Method::Countsketch,
        Method::Srft,
        Method::FullSvd,
    ];

    /// The ensemble driving the first-stage sketch; `None` for the baseline.
    pub fn sketch_kind(self) -> Option<SketchKind> {
        match self {
            Method::SparseSubgaussian => Some(SketchKind::SparseSubgaussian),
            Method::Gaussian => Some(SketchKind::DenseGaussian),
            Method::Countsketch => Some(SketchKind::Countsketch),
            Method::Srft => Some(SketchKind::Srft),
            Method::FullSvd => None,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Method::SparseSubgaussian => "sparse-subgaussian",
            Method::Gaussian => "gaussian",
            Method::Countsketch => "countsketch",
            Method::Srft => "srft",
            Method::FullSvd => "full-svd",
        }
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Method {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Method::ALL
            .iter()
            .copied()
            .find(|m| m.name() == s)
            .ok_or_else(|| {
                Error::InvalidParams(format!(
                    "unknown method `{s}`; expected sparse-subgaussian, gaussian, \
                     countsketch, srft, or full-svd"
                ))
            })
    }
}

// ── Grid configuration ─────────────────────────────────────────────────────

/// How the test matrix is handed to the decomposition.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum MatrixForm {
    /// Materialized `U·diag(σ)·Vᵀ` with Haar-distributed factors.
    #[default]
    Dense,
    /// Matrix-free DFT sandwich `C·Σ·C`; square power-of-two sizes only.
    DftSandwich,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MatrixSpec {
    pub m: usize,
    pub n: usize,
    pub spectrum: SpectrumSpec,
    pub seed: u64,
    #[serde(default)]
    pub form: MatrixForm,
}

fn default_repeats() -> usize {
    5
}

/// A full sweep: every matrix × method × rank cell is run.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub matrices: Vec<MatrixSpec>,
    pub methods: Vec<Method>,
    pub ranks: Vec<usize>,
    /// Timed repetitions per cell, after one discarded warm-up run.
    #[serde(default = "default_repeats")]
    pub repeats: usize,
    /// Report directory for `emit_report`; optional because callers may
    /// consume records programmatically instead.
    #[serde(default)]
    pub output: Option<PathBuf>,
}

impl ExperimentConfig {
    pub fn from_file(path: &Path) -> Result<Self> {
        let file_err = |message: String| Error::MatrixFile {
            path: path.to_path_buf(),
            message,
        };
        let text = fs::read_to_string(path).map_err(|e| file_err(e.to_string()))?;
        let config: ExperimentConfig =
            serde_json::from_str(&text).map_err(|e| file_err(format!("config parse error: {e}")))?;
        config.validate()?;
        Ok(config)
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::InvalidParams(msg));
        if self.matrices.is_empty() || self.methods.is_empty() || self.ranks.is_empty() {
            return bad("config needs at least one matrix, one method, and one rank".into());
        }
        if self.repeats == 0 {
            return bad("repeats must be at least 1".into());
        }
        if self.ranks.iter().any(|&r| r == 0) {
            return bad("ranks must be positive".into());
        }
        for mat in &self.matrices {
            if mat.spectrum.length() != mat.m.min(mat.n) {
                return bad(format!(
                    "matrix {}x{}: spectrum length {} must equal min(m, n)",
                    mat.m,
                    mat.n,
                    mat.spectrum.length()
                ));
            }
            if mat.form == MatrixForm::DftSandwich && (mat.m != mat.n || !mat.n.is_power_of_two()) {
                return bad(format!(
                    "matrix {}x{}: dft-sandwich form needs a square power-of-two size",
                    mat.m, mat.n
                ));
            }
        }
        Ok(())
    }
}

// ── Records ────────────────────────────────────────────────────────────────

/// One grid cell. Field order is the CSV column order.
///
/// Sketch parameters are empty for the dense baseline, and `p` (the
/// first-stage sketch density) is populated only for the sparse sub-Gaussian
/// method, where it is meaningful. Stage times are medians over the timed
/// repetitions; `t_total_ms` is their sum, so each row is internally
/// consistent. Residual estimation happens outside the timed stages.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExperimentRecord {
    pub method: Method,
    pub m: usize,
    pub n: usize,
    pub spectrum: String,
    pub seed: u64,
    pub r: usize,
    pub k1: Option<usize>,
    pub k2: Option<usize>,
    pub l: Option<usize>,
    pub p: Option<f64>,
    pub t_sketch_ms: f64,
    pub t_qr_ms: f64,
    pub t_second_sketch_ms: f64,
    pub t_small_svd_ms: f64,
    pub t_total_ms: f64,
    pub err_spectral: f64,
    pub err_frobenius: Option<f64>,
    /// `err_spectral / σ_{r+1}`; at least `1 − 1e-6` (optimality floor).
    pub rel_err: f64,
    /// True `σ_{r+1}` of the synthetic spectrum.
    pub sigma_r_plus_1: f64,
    /// True Frobenius tail `Δ_{r+1} = (Σ_{i>r} σ_i²)^{1/2}`.
    pub delta_r_plus_1: f64,
}

/// A cell that errored. Recorded and skipped, never fatal to the sweep.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CellFailure {
    pub method: Method,
    pub m: usize,
    pub n: usize,
    pub seed: u64,
    pub r: usize,
    pub message: String,
}

pub struct ExperimentRun {
    pub records: Vec<ExperimentRecord>,
    pub failures: Vec<CellFailure>,
}

// ── Matrix synthesis ───────────────────────────────────────────────────────

/// Dense test matrix with a prescribed spectrum: `A = U·diag(σ)·Vᵀ` where
/// `U` and `V` are Q factors of seeded Gaussian matrices, hence
/// Haar-distributed orthonormal frames. Returns the matrix and the true
/// singular values.
pub fn synth_matrix(
    m: usize,
    n: usize,
    spectrum: &SpectrumSpec,
    seed: u64,
) -> Result<(DenseMatrix, Vec<f64>)> {
    let rank = m.min(n);
    if spectrum.length() != rank {
        return Err(Error::InvalidParams(format!(
            "spectrum length {} must equal min(m, n) = {rank}",
            spectrum.length()
        )));
    }
    let sigma = spectrum.realize()?;
    let (mut u, _) = thin_qr(&sample_dense_gaussian(m, rank, derive_seed(seed, TAG_SYNTH_U)))?;
    let (v, _) = thin_qr(&sample_dense_gaussian(n, rank, derive_seed(seed, TAG_SYNTH_V)))?;
    for (j, &s) in sigma.iter().enumerate() {
        u.scale_col(j, s);
    }
    Ok((gemm_nt(&u, &v), sigma))
}

enum BuiltMatrix {
    Dense { a: DenseMatrix, sigma: Vec<f64> },
    Operator { op: DftSandwichOperator, sigma: Vec<f64> },
}

impl BuiltMatrix {
    fn sigma(&self) -> &[f64] {
        match self {
            BuiltMatrix::Dense { sigma, .. } | BuiltMatrix::Operator { sigma, .. } => sigma,
        }
    }

    fn input(&self) -> MatrixInput<'_> {
        match self {
            BuiltMatrix::Dense { a, .. } => MatrixInput::Dense(a),
            BuiltMatrix::Operator { op, .. } => MatrixInput::Operator(op),
        }
    }
}

fn build_matrix(spec: &MatrixSpec) -> Result<BuiltMatrix> {
    match spec.form {
        MatrixForm::Dense => {
            let (a, sigma) = synth_matrix(spec.m, spec.n, &spec.spectrum, spec.seed)?;
            Ok(BuiltMatrix::Dense { a, sigma })
        }
        MatrixForm::DftSandwich => {
            let op = dft_sandwich_operator(spec.n, &spec.spectrum)?;
            let sigma = op.singular_values().to_vec();
            Ok(BuiltMatrix::Operator { op, sigma })
        }
    }
}

// ── The sweep ──────────────────────────────────────────────────────────────

/// Runs every cell sequentially — the timing-faithful mode.
pub fn run_experiment(config: &ExperimentConfig) -> Result<ExperimentRun> {
    run_cells(config, 1)
}

/// The same sweep fanned out over `threads` workers. Numeric outputs are
/// bit-identical to the sequential mode because each cell derives its own
/// seed; reported times are contended, so use this mode for error-only
/// sweeps.
pub fn run_experiment_parallel(config: &ExperimentConfig, threads: usize) -> Result<ExperimentRun> {
    run_cells(config, threads.max(1))
}

fn run_cells(config: &ExperimentConfig, threads: usize) -> Result<ExperimentRun> {
    config.validate()?;
    let mut cells = Vec::new();
    for (mat_idx, _) in config.matrices.iter().enumerate() {
        for &method in &config.methods {
            for &r in &config.ranks {
                cells.push((cells.len(), mat_idx, method, r));
            }
        }
    }

    // Workers take every `threads`-th cell. Cells are ordered matrix-major,
    // so caching the most recently built matrix keeps each matrix build to
    // one per worker.
    let run_stripe = |stripe: usize| {
        let mut records: Vec<(usize, ExperimentRecord)> = Vec::new();
        let mut failures: Vec<(usize, CellFailure)> = Vec::new();
        let mut cache: Option<(usize, BuiltMatrix)> = None;
        for &(idx, mat_idx, method, r) in cells.iter().skip(stripe).step_by(threads) {
            let spec = &config.matrices[mat_idx];
            let fail = |message: String| CellFailure {
                method,
                m: spec.m,
                n: spec.n,
                seed: spec.seed,
                r,
                message,
            };
            if cache.as_ref().map(|(i, _)| *i) != Some(mat_idx) {
                match build_matrix(spec) {
                    Ok(built) => cache = Some((mat_idx, built)),
                    Err(e) => {
                        failures.push((idx, fail(e.to_string())));
                        continue;
                    }
                }
            }
            let built = &cache.as_ref().expect("cache was just filled").1;
            match run_cell(built, spec, method, r, config.repeats) {
                Ok(record) => records.push((idx, record)),
                Err(e) => failures.push((idx, fail(e.to_string()))),
            }
        }
        (records, failures)
    };

    let (mut records, mut failures) = if threads == 1 {
        run_stripe(0)
    } else {
        std::thread::scope(|scope| {
            let worker = &run_stripe;
            let handles: Vec<_> = (0..threads)
                .map(|w| scope.spawn(move || worker(w)))
                .collect();
            let mut records = Vec::new();
            let mut failures = Vec::new();
            for handle in handles {
                let (r, f) = handle.join().expect("experiment worker panicked");
                records.extend(r);
                failures.extend(f);
            }
            (records, failures)
        })
    };
    records.sort_by_key(|(idx, _)| *idx);
    failures.sort_by_key(|(idx, _)| *idx);
    Ok(ExperimentRun {
        records: records.into_iter().map(|(_, r)| r).collect(),
        failures: failures.into_iter().map(|(_, f)| f).collect(),
    })
}

/// Everything a cell produces besides the shared descriptor fields.
struct CellOutcome {
    k1: Option<usize>,
    k2: Option<usize>,
    l: Option<usize>,
    p: Option<f64>,
    /// Medians for sketch / qr / second sketch / small svd, in ms.
    stage_ms: [f64; 4],
    err_spectral: f64,
    err_frobenius: Option<f64>,
}

fn run_cell(
    built: &BuiltMatrix,
    spec: &MatrixSpec,
    method: Method,
    r: usize,
    repeats: usize,
) -> Result<ExperimentRecord> {
    let rank = spec.m.min(spec.n);
    if r >= rank {
        return Err(Error::InvalidParams(format!(
            "rank {r} leaves no spectral tail on a {}x{} matrix; need r < min(m, n)",
            spec.m, spec.n
        )));
    }
    let sigma = built.sigma();
    let sigma_r_plus_1 = sigma[r];
    let delta_r_plus_1 = sigma[r..].iter().map(|v| v * v).sum::<f64>().sqrt();
    let cell_seed = derive_seed(
        derive_seed(derive_seed(spec.seed, TAG_CELL), method as u64),
        r as u64,
    );

    let outcome = match method.sketch_kind() {
        Some(kind) => sketch_cell(built, r, repeats, cell_seed, kind)?,
        None => full_svd_cell(built, r, repeats)?,
    };
    let rel_err = outcome.err_spectral / sigma_r_plus_1;
    debug_assert!(rel_err >= 1.0 - 1e-6, "optimality floor violated: {rel_err}");
    Ok(ExperimentRecord {
        method,
        m: spec.m,
        n: spec.n,
        spectrum: spec.spectrum.to_string(),
        seed: spec.seed,
        r,
        k1: outcome.k1,
        k2: outcome.k2,
        l: outcome.l,
        p: outcome.p,
        t_sketch_ms: outcome.stage_ms[0],
        t_qr_ms: outcome.stage_ms[1],
        t_second_sketch_ms: outcome.stage_ms[2],
        t_small_svd_ms: outcome.stage_ms[3],
        t_total_ms: outcome.stage_ms.iter().sum(),
        err_spectral: outcome.err_spectral,
        err_frobenius: outcome.err_frobenius,
        rel_err,
        sigma_r_plus_1,
        delta_r_plus_1,
    })
}

fn sketch_cell(
    built: &BuiltMatrix,
    r: usize,
    repeats: usize,
    seed: u64,
    kind: SketchKind,
) -> Result<CellOutcome> {
    let input = built.input();
    let (m, n) = input.shape();
    let params = RsvdParams::defaults(r, m, n, seed)?;
    let mut samples: Vec<StageTimings> = Vec::with_capacity(repeats);
    let mut last = None;
    for i in 0..=repeats {
        let result = randomized_svd_with_kind(&input, &params, kind)?;
        if i > 0 {
            samples.push(result.timings);
        }
        last = Some(result);
    }
    let last = last.expect("loop ran at least once");
    let stage_ms = [
        median(samples.iter().map(|t| t.sketch_ms).collect()),
        median(samples.iter().map(|t| t.qr_ms).collect()),
        median(samples.iter().map(|t| t.second_sketch_ms).collect()),
        median(samples.iter().map(|t| t.small_svd_ms).collect()),
    ];
    Ok(CellOutcome {
        k1: Some(params.k1),
        k2: Some(params.k2),
        l: Some(params.l),
        p: (kind == SketchKind::SparseSubgaussian).then_some(params.p1),
        stage_ms,
        err_spectral: last.spectral_residual,
        err_frobenius: last.frobenius_residual,
    })
}

/// The dense baseline: full SVD, then read the exact rank-`r` truncation
/// errors straight off the tail of the computed spectrum. A matrix-free
/// input is materialized once outside the timed region.
fn full_svd_cell(built: &BuiltMatrix, r: usize, repeats: usize) -> Result<CellOutcome> {
    let materialized;
    let a = match built {
        BuiltMatrix::Dense { a, .. } => a,
        BuiltMatrix::Operator { op, .. } => {
            materialized = materialize(op);
            &materialized
        }
    };
    let mut times = Vec::with_capacity(repeats);
    let mut svd = None;
    for i in 0..=repeats {
        let t = Instant::now();
        let out = dense_svd(a)?;
        let elapsed_ms = t.elapsed().as_secs_f64() * 1e3;
        if i > 0 {
            times.push(elapsed_ms);
        }
        svd = Some(out);
    }
    let svd = svd.expect("loop ran at least once");
    Ok(CellOutcome {
        k1: None,
        k2: None,
        l: None,
        p: None,
        stage_ms: [0.0, 0.0, 0.0, median(times)],
        err_spectral: svd.s[r],
        err_frobenius: Some(svd.s[r..].iter().map(|v| v * v).sum::<f64>().sqrt()),
    })
}

fn median(mut xs: Vec<f64>) -> f64 {
    if xs.is_empty() {
        return 0.0;
    }
    xs.sort_by(f64::total_cmp);
    let mid = xs.len() / 2;
    if xs.len() % 2 == 1 {
        xs[mid]
    } else {
        0.5 * (xs[mid - 1] + xs[mid])
    }
}

// ── Tests ──────────────────────────────────────────────────────────────────
