use crate::error::{Error, Result};
use crate::linalg::dense::DenseMatrix;

/// Householder thin QR of a tall matrix `B` (`rows ≥ cols`).
///
/// Returns `(Q, R)` with `Q: rows×cols` having orthonormal columns,
/// `R: cols×cols` upper triangular with nonnegative diagonal (signs are
/// normalized into `Q`). Rank deficiency is fine: a numerically zero pivot
/// column simply yields a zero row in `R` while `Q` stays orthonormal.
pub fn thin_qr(b: &DenseMatrix) -> Result<(DenseMatrix, DenseMatrix)> {
    let (m, n) = b.shape();
    if m < n {
        return Err(Error::InvalidParams(format!(
            "thin_qr requires rows >= cols, got {m}x{n}"
        )));
    }
    let mut work = b.clone();
    // Householder vectors, one per column, stored with their beta.
    let mut reflectors: Vec<(Vec<f64>, f64)> = Vec::with_capacity(n);

    for k in 0..n {
        // Build the reflector for column k over rows k..m.
        let mut v: Vec<f64> = (k..m).map(|i| work[(i, k)]).collect();
        let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
        let beta;
        if norm == 0.0 {
            beta = 0.0;
        } else {
            let alpha = if v[0] >= 0.0 { -norm } else { norm };
            v[0] -= alpha;
            let vnorm2: f64 = v.iter().map(|x| x * x).sum();
            beta = if vnorm2 == 0.0 { 0.0 } else { 2.0 / vnorm2 };
            // Apply (I - beta·v·vᵀ) to the trailing columns k..n.
            for j in k..n {
                let mut dot = 0.0;
                for (idx, &vi) in v.iter().enumerate() {
                    dot += vi * work[(k + idx, j)];
                }
                let scale = beta * dot;
                for (idx, &vi) in v.iter().enumerate() {
                    work[(k + idx, j)] -= scale * vi;
                }
            }
            work[(k, k)] = alpha;
            for i in k + 1..m {
                work[(i, k)] = 0.0;
            }
        }
        reflectors.push((v, beta));
    }

    // Accumulate the thin Q by applying reflectors in reverse to I(m×n).
    let mut q = DenseMatrix::zeros(m, n);
    for j in 0..n {
        q[(j, j)] = 1.0;
    }
    for k in (0..n).rev() {
        let (v, beta) = &reflectors[k];
        if *beta == 0.0 {
            continue;
        }
        for j in 0..n {
            let mut dot = 0.0;
            for (idx, &vi) in v.iter().enumerate() {
                dot += vi * q[(k + idx, j)];
            }
            let scale = beta * dot;
            for (idx, &vi) in v.iter().enumerate() {
                q[(k + idx, j)] -= scale * vi;
            }
        }
    }

    let mut r = DenseMatrix::zeros(n, n);
    for i in 0..n {
        for j in i..n {
            r[(i, j)] = work[(i, j)];
        }
    }
    // Normalize signs so the diagonal of R is nonnegative.
    for i in 0..n {
        if r[(i, i)] < 0.0 {
            for j in i..n {
                r[(i, j)] = -r[(i, j)];
            }
            q.scale_col(i, -1.0);
        }
    }
    Ok((q, r))
}
