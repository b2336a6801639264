//! Matrix-free DFT sandwich operator `A = C·Σ·C`.
//!
//! `C` is the real orthogonal DFT map from [`crate::fourier`] and `Σ` is a
//! diagonal of spectrum values, so the singular values of `A` are exactly
//! the spectrum while one application costs two FFTs per vector — O(n log n)
//! instead of the O(n²) of a materialized product. This is the matrix family
//! behind the largest benchmark grids, where materializing `A` would cost
//! more than the decomposition being measured.

use crate::bench::spectrum::SpectrumSpec;
use crate::error::{Error, Result};
use crate::fourier::RealDft;
use crate::linalg::{DenseMatrix, LinearOperator};

pub struct DftSandwichOperator {
    dft: RealDft,
    sigma: Vec<f64>,
}

/// Builds the sandwich operator for an `n × n` profile. `n` must be a power
/// of two (radix-2 transform) and must match the spectrum length.
pub fn dft_sandwich_operator(n: usize, spectrum: &SpectrumSpec) -> Result<DftSandwichOperator> {
    if !n.is_power_of_two() {
        return Err(Error::InvalidParams(format!(
            "dft sandwich needs a power-of-two size for the radix-2 transform, got n = {n}"
        )));
    }
    if spectrum.length() != n {
        return Err(Error::InvalidParams(format!(
            "spectrum length {} does not match operator size {n}",
            spectrum.length()
        )));
    }
    Ok(DftSandwichOperator {
        dft: RealDft::new(n),
        sigma: spectrum.realize()?,
    })
}

impl DftSandwichOperator {
    pub fn n(&self) -> usize {
        self.sigma.len()
    }

    /// The exact singular values of the operator (the realized spectrum).
    pub fn singular_values(&self) -> &[f64] {
        &self.sigma
    }

    /// `C·Σ·C` column by column; the transposed flavor runs `Cᵀ·Σ·Cᵀ`, which
    /// is the adjoint because `Σ` is diagonal.
    fn sandwich(&self, x: &DenseMatrix, transposed: bool) -> DenseMatrix {
        let n = self.sigma.len();
        assert_eq!(x.rows(), n, "dft sandwich: block height must be {n}");
        let mut out = DenseMatrix::zeros(n, x.cols());
        for j in 0..x.cols() {
            let col = x.column(j);
            let mut mid = if transposed {
                self.dft.inverse(&col)
            } else {
                self.dft.forward(&col)
            };
            for (v, &s) in mid.iter_mut().zip(&self.sigma) {
                *v *= s;
            }
            let fin = if transposed {
                self.dft.inverse(&mid)
            } else {
                self.dft.forward(&mid)
            };
            for (i, &v) in fin.iter().enumerate() {
                out.row_mut(i)[j] = v;
            }
        }
        out
    }
}

impl LinearOperator for DftSandwichOperator {
    fn rows(&self) -> usize {
        self.sigma.len()
    }

    fn cols(&self) -> usize {
        self.sigma.len()
    }

    fn apply(&self, x: &DenseMatrix) -> DenseMatrix {
        self.sandwich(x, false)
    }

    fn adjoint_apply(&self, y: &DenseMatrix) -> DenseMatrix {
        self.sandwich(y, true)
    }
}

// ── Tests ──────────────────────────────────────────────────────────────────
