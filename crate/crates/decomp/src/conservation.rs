//! Monte-Carlo checks of the distributional facts the sketches are chosen
//! for: extreme singular values of a sketch restricted to a subspace,
//! small-ball probabilities, and moment bounds of sparse sub-Gaussian sums.
//!
//! Random subspaces are sampled Haar-ish (thin QR of a Gaussian). That makes
//! these *necessary* checks, not proofs — the theory quantifies over every
//! subspace, the harness samples them. Every probabilistic assertion made on
//! top of these estimates carries an explicit ±3-standard-error slack so it
//! can be asserted literally in tests.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{
    dense_svd, spectral_norm_estimate, spmm, thin_qr, CsrMatrix, DenseMatrix, Side,
};
use crate::sketch::{
    derive_seed, sample_dense_gaussian, sample_sparse_subgaussian, SketchSpec, SubGaussianLaw,
};

use rand::seq::index;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub(crate) const TAG_OMEGA: u64 = 0xC1;
pub(crate) const TAG_BASIS: u64 = 0xC2;

/// Probe points for the empirical quantile summaries in [`TailReport`].
pub const QUANTILE_PROBES: [f64; 11] =
    [0.0, 0.01, 0.05, 0.1, 0.25, 0.5, 0.75, 0.9, 0.95, 0.99, 1.0];

// ── Configuration ──────────────────────────────────────────────────────────

/// Dimensions, density, and knobs for the tail estimators: `k × n` sketches
/// hit `r`-dimensional subspaces over `trials` repetitions.
///
/// `eta` is the incompressibility level (the theory wants `η` below a
/// constant times `√p`; the default sits at `√p / 2`), `eps_c = ε₀·η·√p` the
/// compressibility cutoff with free knob `ε₀ = 1`, and `lambda` the
/// small-ball radius (default `1/2`).
#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
pub struct ConservationConfig {
    pub n: usize,
    pub r: usize,
    pub k: usize,
    pub p: f64,
    pub trials: usize,
    pub eta: f64,
    pub eps_c: f64,
    pub lambda: f64,
    pub seed: u64,
}

impl ConservationConfig {
    pub fn new(n: usize, r: usize, k: usize, p: f64, trials: usize, seed: u64) -> Result<Self> {
        let eta = (0.5 * p.max(0.0).sqrt()).min(0.9);
        let config = ConservationConfig {
            n,
            r,
            k,
            p,
            trials,
            eta,
            eps_c: eta * p.max(0.0).sqrt(),
            lambda: 0.5,
            seed,
        };
        config.validate()?;
        Ok(config)
    }

    /// Override `η` and the `ε₀` knob; `eps_c` is recomputed as `ε₀·η·√p`.
    pub fn with_eta(mut self, eta: f64, eps0: f64) -> Self {
        self.eta = eta;
        self.eps_c = eps0 * eta * self.p.sqrt();
        self
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.r < self.k && self.k <= self.n) {
            return Err(Error::InvalidParams(format!(
                "need r < k ≤ n, got r = {}, k = {}, n = {}",
                self.r, self.k, self.n
            )));
        }
        if self.r == 0 {
            return Err(Error::InvalidParams("subspace dimension must be positive".into()));
        }
        if self.trials < 100 {
            return Err(Error::InvalidParams(format!(
                "need at least 100 trials for the tail estimates, got {}",
                self.trials
            )));
        }
        if !(self.p > 0.0 && self.p <= 1.0) {
            return Err(Error::InvalidDensity(self.p));
        }
        for (name, x) in [("eta", self.eta), ("lambda", self.lambda)] {
            if !(x > 0.0 && x < 1.0) {
                return Err(Error::InvalidParams(format!("{name} = {x} outside (0, 1)")));
            }
        }
        if self.eps_c <= 0.0 {
            return Err(Error::InvalidParams(format!("eps_c = {} not positive", self.eps_c)));
        }
        Ok(())
    }
}

// ── Reports ────────────────────────────────────────────────────────────────

/// A Monte-Carlo mean with its standard error.
#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
pub struct MonteCarloEstimate {
    pub mean: f64,
    pub standard_error: f64,
    pub trials: usize,
}

#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
pub struct QuantilePoint {
    pub probe: f64,
    pub value: f64,
}

/// Empirical tail summary of a normalized extreme singular value
/// (`σ/√k`) over the configured trials.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct TailReport {
    pub trials: usize,
    /// Threshold in units of `√k`.
    pub threshold: f64,
    /// Fraction of trials beyond the threshold (below for the min tail,
    /// above for the max tail).
    pub fraction: f64,
    /// Binomial standard error of `fraction`.
    pub standard_error: f64,
    /// Empirical quantiles of `σ/√k` at [`QUANTILE_PROBES`].
    pub quantiles: Vec<QuantilePoint>,
    /// For the max tail only: fraction of trials with the whole-sketch
    /// spectral norm estimate above `t·√n`.
    pub omega_sigma1_fraction: Option<f64>,
}

fn binomial_se(fraction: f64, trials: usize) -> f64 {
    (fraction * (1.0 - fraction) / trials as f64).sqrt()
}

fn empirical_quantiles(sorted: &[f64]) -> Vec<QuantilePoint> {
    let t = sorted.len();
    QUANTILE_PROBES
        .iter()
        .map(|&probe| {
            let idx = ((probe * (t as f64 - 1.0)).round() as usize).min(t - 1);
            QuantilePoint { probe, value: sorted[idx] }
        })
        .collect()
}

// ── Subspace extremes ──────────────────────────────────────────────────────

/// Extreme singular values of `Ω·B` for an orthonormal-column `B`: these are
/// exactly `min`/`max` of `‖Ωx‖` over unit vectors `x` in `range(B)`.
pub fn subspace_extreme_singvals(omega: &CsrMatrix, b: &DenseMatrix) -> Result<(f64, f64)> {
    if omega.cols() != b.rows() {
        return Err(Error::dim(
            "subspace_extreme_singvals",
            (omega.rows(), omega.cols()),
            b.shape(),
        ));
    }
    let defect = b.orthonormality_defect();
    if defect > 1e-10 {
        return Err(Error::InvalidParams(format!(
            "subspace basis is not orthonormal (defect {defect:.3e})"
        )));
    }
    let product = spmm(omega, b, Side::Left, false)?;
    let s = dense_svd(&product)?.s;
    let hi = s.first().copied().unwrap_or(0.0);
    let lo = s.last().copied().unwrap_or(0.0);
    Ok((lo, hi))
}

/// One (sketch, subspace) draw for the tail estimators. The law is the
/// scaled one — the normalization the tail theory is stated in.
fn trial_extremes(config: &ConservationConfig, trial: usize) -> Result<(f64, f64)> {
    let trial_seed = derive_seed(config.seed, trial as u64);
    let spec = SketchSpec::new(config.k, config.n, config.p, derive_seed(trial_seed, TAG_OMEGA))?;
    let omega = sample_sparse_subgaussian(&spec, &SubGaussianLaw::scaled_normal())?;
    let gaussian = sample_dense_gaussian(config.n, config.r, derive_seed(trial_seed, TAG_BASIS));
    let (basis, _) = thin_qr(&gaussian)?;
    subspace_extreme_singvals(&omega, &basis)
}

/// Estimates `P(σ_min(Ω·B) ≤ threshold·√k)` over random subspaces.
pub fn min_singval_tail(config: &ConservationConfig, threshold: f64) -> Result<TailReport> {
    config.validate()?;
    let sqrt_k = (config.k as f64).sqrt();
    let mut values: Vec<f64> = (0..config.trials)
        .map(|trial| trial_extremes(config, trial).map(|(lo, _)| lo / sqrt_k))
        .collect::<Result<_>>()?;
    let hits = values.iter().filter(|&&v| v <= threshold).count();
    let fraction = hits as f64 / config.trials as f64;
    values.sort_by(|a, b| a.partial_cmp(b).unwrap());
    Ok(TailReport {
        trials: config.trials,
        threshold,
        fraction,
        standard_error: binomial_se(fraction, config.trials),
        quantiles: empirical_quantiles(&values),
        omega_sigma1_fraction: None,
    })
}

/// Estimates `P(σ_max(Ω·B) > t·√k)`, and alongside it the fraction of
/// trials whose whole-sketch norm estimate exceeds `t·√n`.
pub fn max_singval_tail(config: &ConservationConfig, t: f64) -> Result<TailReport> {
    config.validate()?;
    let sqrt_k = (config.k as f64).sqrt();
    let sqrt_n = (config.n as f64).sqrt();
    let mut values = Vec::with_capacity(config.trials);
    let mut sigma1_hits = 0usize;
    for trial in 0..config.trials {
        let trial_seed = derive_seed(config.seed, trial as u64);
        let spec =
            SketchSpec::new(config.k, config.n, config.p, derive_seed(trial_seed, TAG_OMEGA))?;
        let omega = sample_sparse_subgaussian(&spec, &SubGaussianLaw::scaled_normal())?;
        let gaussian =
            sample_dense_gaussian(config.n, config.r, derive_seed(trial_seed, TAG_BASIS));
        let (basis, _) = thin_qr(&gaussian)?;
        let (_, hi) = subspace_extreme_singvals(&omega, &basis)?;
        values.push(hi / sqrt_k);
        let sigma1 = spectral_norm_estimate(&omega, 60, trial_seed);
        if sigma1 > t * sqrt_n {
            sigma1_hits += 1;
        }
    }
    let hits = values.iter().filter(|&&v| v > t).count();
    let fraction = hits as f64 / config.trials as f64;
    values.sort_by(|a, b| a.partial_cmp(b).unwrap());
    Ok(TailReport {
        trials: config.trials,
        threshold: t,
        fraction,
        standard_error: binomial_se(fraction, config.trials),
        quantiles: empirical_quantiles(&values),
        omega_sigma1_fraction: Some(sigma1_hits as f64 / config.trials as f64),
    })
}

// ── Compressibility ────────────────────────────────────────────────────────

/// Squared mass carried by the coordinates of magnitude ≤ `eps_c`, and the
/// incompressibility verdict `mass ≥ η²`.
pub fn incompressibility_mass(v: &[f64], eta: f64, eps_c: f64) -> Result<(f64, bool)> {
    let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
    if (norm - 1.0).abs() > 1e-10 {
        return Err(Error::InvalidParams(format!(
            "incompressibility_mass needs a unit vector, got ‖v‖ = {norm}"
        )));
    }
    let mass: f64 = v.iter().filter(|x| x.abs() <= eps_c).map(|x| x * x).sum();
    Ok((mass, mass >= eta * eta))
}

// ── Small-ball and moment estimates ────────────────────────────────────────

/// One draw of `S = Σ aᵢ·Xᵢ` with `Xᵢ` zero with probability `1 − p` and a
/// (possibly `1/√p`-scaled) sub-Gaussian draw otherwise.
fn draw_sum(a: &[f64], law: &SubGaussianLaw, p: f64, rng: &mut ChaCha8Rng) -> f64 {
    let n = a.len();
    let count = if p >= 1.0 {
        n
    } else {
        let bin = rand_distr::Binomial::new(n as u64, p).expect("valid binomial");
        rng.sample(bin) as usize
    };
    let scale = law.scale_factor(p);
    let mut s = 0.0;
    if count == n {
        for &ai in a {
            s += ai * law.draw(rng) * scale;
        }
    } else {
        for j in index::sample(rng, n, count) {
            s += a[j] * law.draw(rng) * scale;
        }
    }
    s
}

fn check_unit(a: &[f64], op: &str) -> Result<()> {
    let norm = a.iter().map(|x| x * x).sum::<f64>().sqrt();
    if (norm - 1.0).abs() > 1e-10 {
        return Err(Error::InvalidParams(format!("{op} needs a unit vector, got ‖a‖ = {norm}")));
    }
    Ok(())
}

/// Monte-Carlo estimate of the small-ball probability `P(|S| < λ)` for
/// `S = Σ aᵢXᵢ`.
pub fn small_ball_estimate(
    a: &[f64],
    law: &SubGaussianLaw,
    p: f64,
    lambda: f64,
    trials: usize,
    seed: u64,
) -> Result<MonteCarloEstimate> {
    check_unit(a, "small_ball_estimate")?;
    if !(p > 0.0 && p <= 1.0) {
        return Err(Error::InvalidDensity(p));
    }
    if !(lambda > 0.0 && lambda < 1.0) {
        return Err(Error::InvalidParams(format!("lambda = {lambda} outside (0, 1)")));
    }
    if trials == 0 {
        return Err(Error::InvalidParams("trials must be positive".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut hits = 0usize;
    for _ in 0..trials {
        if draw_sum(a, law, p, &mut rng).abs() < lambda {
            hits += 1;
        }
    }
    let mean = hits as f64 / trials as f64;
    Ok(MonteCarloEstimate { mean, standard_error: binomial_se(mean, trials), trials })
}

/// The theoretical ceiling the small-ball estimate is checked against:
/// `1 − p(1−λ²)²/z₄`.
pub fn small_ball_bound(law: &SubGaussianLaw, p: f64, lambda: f64) -> f64 {
    let one_minus = 1.0 - lambda * lambda;
    1.0 - p * one_minus * one_minus / law.z4()
}

/// Empirical third and fourth moments of `S = Σ aᵢXᵢ`, each with its
/// standard error. The ceilings they are checked against are
/// `E(Z³)/√p` and `(E(Z⁴)+1)/p` (under the scaled normalization `E S² = 1`).
pub fn moment_bound_estimate(
    a: &[f64],
    law: &SubGaussianLaw,
    p: f64,
    trials: usize,
    seed: u64,
) -> Result<(MonteCarloEstimate, MonteCarloEstimate)> {
    check_unit(a, "moment_bound_estimate")?;
    if !(p > 0.0 && p <= 1.0) {
        return Err(Error::InvalidDensity(p));
    }
    if trials < 2 {
        return Err(Error::InvalidParams("need at least 2 trials".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (mut s3, mut s4, mut s6, mut s8) = (0.0f64, 0.0f64, 0.0f64, 0.0f64);
    for _ in 0..trials {
        let s = draw_sum(a, law, p, &mut rng);
        let p3 = s * s * s;
        let p4 = p3 * s;
        s3 += p3;
        s4 += p4;
        s6 += p3 * p3;
        s8 += p4 * p4;
    }
    let t = trials as f64;
    let (m3, m4) = (s3 / t, s4 / t);
    let var3 = (s6 / t - m3 * m3).max(0.0);
    let var4 = (s8 / t - m4 * m4).max(0.0);
    Ok((
        MonteCarloEstimate { mean: m3, standard_error: (var3 / t).sqrt(), trials },
        MonteCarloEstimate { mean: m4, standard_error: (var4 / t).sqrt(), trials },
    ))
}

// ── Tests ──────────────────────────────────────────────────────────────────
