//! Real-valued orthonormal DFT map.
//!
//! All matrices in this crate are real, so the complex DFT is carried as an
//! orthogonal map `C: R^n → R^n` built from the usual real-input transform:
//!
//! * component 0: `X_0 / √n` (the mean term),
//! * components `2j−1, 2j` for `0 < j < n/2`: `√2·Re(X_j)/√n` and
//!   `√2·Im(X_j)/√n`,
//! * component `n−1` for even `n`: the Nyquist term `X_{n/2} / √n`,
//!
//! where `X = FFT(x)`. The rows of `C` are the normalized cosine/sine
//! vectors, so `C` is orthogonal: `forward` preserves norms exactly and
//! `inverse` is simultaneously the inverse and the adjoint.

use std::f64::consts::SQRT_2;
use std::sync::Arc;

use rustfft::num_complex::Complex;
use rustfft::{Fft, FftPlanner};

pub struct RealDft {
    n: usize,
    forward: Arc<dyn Fft<f64>>,
    inverse: Arc<dyn Fft<f64>>,
}

impl RealDft {
    pub fn new(n: usize) -> Self {
        assert!(n >= 1, "transform length must be positive");
        let mut planner = FftPlanner::new();
        RealDft {
            n,
            forward: planner.plan_fft_forward(n),
            inverse: planner.plan_fft_inverse(n),
        }
    }

    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    /// Applies the orthogonal map `C` (an O(n log n) FFT under the hood).
    pub fn forward(&self, x: &[f64]) -> Vec<f64> {
        let n = self.n;
        assert_eq!(x.len(), n, "input length must match transform length");
        let mut buf: Vec<Complex<f64>> = x.iter().map(|&v| Complex::new(v, 0.0)).collect();
        self.forward.process(&mut buf);

        let scale = 1.0 / (n as f64).sqrt();
        let pair_scale = SQRT_2 * scale;
        let mut y = vec![0.0; n];
        y[0] = buf[0].re * scale;
        for j in 1..(n + 1) / 2 {
            y[2 * j - 1] = buf[j].re * pair_scale;
            y[2 * j] = buf[j].im * pair_scale;
        }
        if n % 2 == 0 && n > 1 {
            y[n - 1] = buf[n / 2].re * scale;
        }
        y
    }

    /// Applies `C⁻¹ = Cᵀ`, reconstructing the input of [`RealDft::forward`].
    pub fn inverse(&self, y: &[f64]) -> Vec<f64> {
        let n = self.n;
        assert_eq!(y.len(), n, "input length must match transform length");
        let scale = (n as f64).sqrt();
        let pair_scale = scale / SQRT_2;
        let mut buf = vec![Complex::new(0.0, 0.0); n];
        buf[0] = Complex::new(y[0] * scale, 0.0);
        for j in 1..(n + 1) / 2 {
            let c = Complex::new(y[2 * j - 1] * pair_scale, y[2 * j] * pair_scale);
            buf[j] = c;
            buf[n - j] = c.conj();
        }
        if n % 2 == 0 && n > 1 {
            buf[n / 2] = Complex::new(y[n - 1] * scale, 0.0);
        }
        self.inverse.process(&mut buf);
        let inv_n = 1.0 / n as f64;
        buf.into_iter().map(|c| c.re * inv_n).collect()
    }
}
