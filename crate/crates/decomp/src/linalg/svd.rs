use crate::error::{Error, Result};
use crate::linalg::dense::{gemm, DenseMatrix};
use crate::linalg::qr::thin_qr;

/// Thin singular value decomposition `M = U·diag(s)·Vᵀ` with
/// `U: rows×p`, `V: cols×p`, `p = min(rows, cols)`, `s` nonincreasing ≥ 0.
#[derive(Debug, Clone)]
pub struct Svd {
    pub u: DenseMatrix,
    pub s: Vec<f64>,
    pub v: DenseMatrix,
}

// The textbook budget of ~30 sweeps per singular value is calibrated for
// well-separated spectra. On steeply graded ones (condition ≳ 1e8 at n in the
// hundreds) a single boundary value can take over 100 implicit-shift sweeps
// before the deflation threshold trips, so the budget is deliberately
// generous; each sweep is only O(n) rotations, and genuine stagnation still
// terminates with a clear error.
const MAX_QR_ITERS_PER_VALUE: usize = 500;

/// Golub–Kahan bidiagonalization followed by implicit-shift QR on the
/// bidiagonal. Wide inputs are handled by factoring the transpose; strongly
/// tall inputs are compressed with a thin QR first so the iteration always
/// runs on a roughly square core.
pub fn dense_svd(m: &DenseMatrix) -> Result<Svd> {
    let (rows, cols) = m.shape();
    if rows < cols {
        let t = dense_svd(&m.transpose())?;
        return Ok(Svd { u: t.v, s: t.s, v: t.u });
    }
    if rows * 3 > cols * 5 && rows > 32 {
        // Tall: M = Q·R, svd(R), U = Q·U_r. Keeps rotation updates O(n²).
        let (q, r) = thin_qr(m)?;
        let core = svd_square_core(&r)?;
        return Ok(Svd { u: gemm(&q, &core.u).unwrap(), s: core.s, v: core.v });
    }
    svd_square_core(m)
}

/// Core Golub–Reinsch on `rows ≥ cols`.
fn svd_square_core(m: &DenseMatrix) -> Result<Svd> {
    let (rows, cols) = m.shape();
    debug_assert!(rows >= cols);
    let (mut u, mut v, mut w, mut rv1) = bidiagonalize(m);
    qr_iterate_bidiagonal(&mut u, &mut v, &mut w, &mut rv1)?;
    sort_descending(&mut u, &mut v, &mut w);
    Ok(Svd { u, s: w, v })
}

/// Householder bidiagonalization of a tall matrix.
///
/// Returns `(U, V, w, rv1)` with `U: m×n`, `V: n×n`,
/// `w[i] = B[i][i]`, `rv1[i] = B[i-1][i]` (`rv1[0] = 0`), such that
/// `M = U·B·Vᵀ`.
fn bidiagonalize(m: &DenseMatrix) -> (DenseMatrix, DenseMatrix, Vec<f64>, Vec<f64>) {
    let (rows, cols) = m.shape();
    let mut work = m.clone();
    let mut left: Vec<(Vec<f64>, f64)> = Vec::with_capacity(cols);
    let mut right: Vec<(Vec<f64>, f64)> = Vec::with_capacity(cols);
    let mut w = vec![0.0; cols];
    let mut rv1 = vec![0.0; cols];

    for k in 0..cols {
        // Left reflector clearing column k below the diagonal.
        let mut vcol: Vec<f64> = (k..rows).map(|i| work[(i, k)]).collect();
        let norm = vcol.iter().map(|x| x * x).sum::<f64>().sqrt();
        let mut beta = 0.0;
        if norm != 0.0 {
            let alpha = if vcol[0] >= 0.0 { -norm } else { norm };
            vcol[0] -= alpha;
            let vnorm2: f64 = vcol.iter().map(|x| x * x).sum();
            if vnorm2 != 0.0 {
                beta = 2.0 / vnorm2;
                for j in k..cols {
                    let mut dot = 0.0;
                    for (idx, &vi) in vcol.iter().enumerate() {
                        dot += vi * work[(k + idx, j)];
                    }
                    let scale = beta * dot;
                    for (idx, &vi) in vcol.iter().enumerate() {
                        work[(k + idx, j)] -= scale * vi;
                    }
                }
            }
            work[(k, k)] = alpha;
        }
        w[k] = work[(k, k)];
        left.push((vcol, beta));

        // Right reflector clearing row k beyond the superdiagonal.
        if k + 2 < cols {
            let mut vrow: Vec<f64> = (k + 1..cols).map(|j| work[(k, j)]).collect();
            let rnorm = vrow.iter().map(|x| x * x).sum::<f64>().sqrt();
            let mut rbeta = 0.0;
            if rnorm != 0.0 {
                let alpha = if vrow[0] >= 0.0 { -rnorm } else { rnorm };
                vrow[0] -= alpha;
                let vnorm2: f64 = vrow.iter().map(|x| x * x).sum();
                if vnorm2 != 0.0 {
                    rbeta = 2.0 / vnorm2;
                    for i in k..rows {
                        let mut dot = 0.0;
                        for (idx, &vj) in vrow.iter().enumerate() {
                            dot += vj * work[(i, k + 1 + idx)];
                        }
                        let scale = rbeta * dot;
                        for (idx, &vj) in vrow.iter().enumerate() {
                            work[(i, k + 1 + idx)] -= scale * vj;
                        }
                    }
                }
                work[(k, k + 1)] = alpha;
            }
            right.push((vrow, rbeta));
        }
        if k + 1 < cols {
            rv1[k + 1] = work[(k, k + 1)];
        }
    }

    // Backward accumulation of the thin U.
    let mut u = DenseMatrix::zeros(rows, cols);
    for j in 0..cols {
        u[(j, j)] = 1.0;
    }
    for k in (0..cols).rev() {
        let (vcol, beta) = &left[k];
        if *beta == 0.0 {
            continue;
        }
        for j in 0..cols {
            let mut dot = 0.0;
            for (idx, &vi) in vcol.iter().enumerate() {
                dot += vi * u[(k + idx, j)];
            }
            let scale = beta * dot;
            for (idx, &vi) in vcol.iter().enumerate() {
                u[(k + idx, j)] -= scale * vi;
            }
        }
    }

    // Backward accumulation of V from the right reflectors.
    let mut v = DenseMatrix::identity(cols);
    for k in (0..right.len()).rev() {
        let (vrow, beta) = &right[k];
        if *beta == 0.0 {
            continue;
        }
        for j in 0..cols {
            let mut dot = 0.0;
            for (idx, &vj) in vrow.iter().enumerate() {
                dot += vj * v[(k + 1 + idx, j)];
            }
            let scale = beta * dot;
            for (idx, &vj) in vrow.iter().enumerate() {
                v[(k + 1 + idx, j)] -= scale * vj;
            }
        }
    }

    (u, v, w, rv1)
}

fn rotate_cols(m: &mut DenseMatrix, a: usize, b: usize, c: f64, s: f64) {
    let cols = m.cols();
    let entries = m.entries_mut();
    let mut idx = 0;
    while idx < entries.len() {
        let x = entries[idx + a];
        let z = entries[idx + b];
        entries[idx + a] = x * c + z * s;
        entries[idx + b] = z * c - x * s;
        idx += cols;
    }
}

fn pythag(a: f64, b: f64) -> f64 {
    a.hypot(b)
}

/// Implicit-shift QR on the bidiagonal (`w` diagonal, `rv1` superdiagonal
/// with the `rv1[i] = B[i-1][i]` convention), rotations accumulated into
/// the columns of `u` and `v`.
fn qr_iterate_bidiagonal(
    u: &mut DenseMatrix,
    v: &mut DenseMatrix,
    w: &mut [f64],
    rv1: &mut [f64],
) -> Result<()> {
    let n = w.len();
    let eps = f64::EPSILON;
    let anorm = (0..n)
        .map(|i| w[i].abs() + rv1[i].abs())
        .fold(0.0_f64, f64::max);
    if anorm == 0.0 {
        return Ok(());
    }

    for k in (0..n).rev() {
        let mut converged = false;
        for iteration in 0..MAX_QR_ITERS_PER_VALUE {
            // Search for a split point.
            let mut l = k;
            let mut cancel = false;
            loop {
                if l == 0 || rv1[l].abs() <= eps * anorm {
                    rv1[l] = 0.0;
                    break;
                }
                if w[l - 1].abs() <= eps * anorm {
                    cancel = true;
                    break;
                }
                l -= 1;
            }

            if cancel {
                // w[l-1] is negligible: chase rv1[l] away with left
                // rotations against rows l..k so the block splits cleanly.
                let mut c = 0.0;
                let mut s = 1.0;
                let nm = l - 1;
                for i in l..=k {
                    let f = s * rv1[i];
                    rv1[i] *= c;
                    if f.abs() <= eps * anorm {
                        break;
                    }
                    let g = w[i];
                    let h = pythag(f, g);
                    w[i] = h;
                    c = g / h;
                    s = -f / h;
                    rotate_cols(u, nm, i, c, s);
                }
            }

            let z = w[k];
            if l == k {
                if z < 0.0 {
                    w[k] = -z;
                    v.scale_col(k, -1.0);
                }
                converged = true;
                break;
            }
            if iteration + 1 == MAX_QR_ITERS_PER_VALUE {
                break;
            }

            // Implicit-shift QR step on block [l..=k].
            let x = w[l];
            let nm = k - 1;
            let y = w[nm];
            let mut g = rv1[nm];
            let mut h = rv1[k];
            let mut f = ((y - z) * (y + z) + (g - h) * (g + h)) / (2.0 * h * y);
            g = pythag(f, 1.0);
            let sign_g = if f >= 0.0 { g } else { -g };
            f = ((x - z) * (x + z) + h * (y / (f + sign_g) - h)) / x;
            let mut c = 1.0;
            let mut s = 1.0;
            let mut x = x;
            for j in l..=nm {
                let i = j + 1;
                g = rv1[i];
                let mut y = w[i];
                h = s * g;
                g *= c;
                let mut zz = pythag(f, h);
                rv1[j] = zz;
                c = f / zz;
                s = h / zz;
                f = x * c + g * s;
                g = g * c - x * s;
                h = y * s;
                y *= c;
                rotate_cols(v, j, i, c, s);
                zz = pythag(f, h);
                w[j] = zz;
                if zz != 0.0 {
                    let inv = 1.0 / zz;
                    c = f * inv;
                    s = h * inv;
                }
                f = c * g + s * y;
                x = c * y - s * g;
                rotate_cols(u, j, i, c, s);
            }
            rv1[l] = 0.0;
            rv1[k] = f;
            w[k] = x;
        }
        if !converged {
            return Err(Error::SvdNonConvergence { iterations: MAX_QR_ITERS_PER_VALUE });
        }
    }
    Ok(())
}

fn sort_descending(u: &mut DenseMatrix, v: &mut DenseMatrix, w: &mut [f64]) {
    let n = w.len();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| w[b].partial_cmp(&w[a]).unwrap());
    if order.iter().enumerate().all(|(i, &p)| i == p) {
        return;
    }
    let permute = |m: &mut DenseMatrix| {
        let src = m.clone();
        for (dst_col, &src_col) in order.iter().enumerate() {
            for i in 0..m.rows() {
                m[(i, dst_col)] = src[(i, src_col)];
            }
        }
    };
    permute(u);
    permute(v);
    let old = w.to_vec();
    for (dst, &src) in order.iter().enumerate() {
        w[dst] = old[src];
    }
}

/// Default relative cutoff used to decide numerical rank.
pub fn default_rank_tol(rows: usize, cols: usize) -> f64 {
    rows.max(cols) as f64 * f64::EPSILON
}

impl Svd {
    /// Moore–Penrose pseudoinverse assembled from the factors; singular
    /// values at or below `rank_tol · s_max` are treated as exact zeros.
    pub fn pseudo_inverse(&self, rank_tol: f64) -> DenseMatrix {
        let cutoff = rank_tol * self.s.first().copied().unwrap_or(0.0);
        let mut v_scaled = self.v.clone(); // columns scaled by 1/s where kept
        for (j, &sj) in self.s.iter().enumerate() {
            let factor = if sj > cutoff && sj > 0.0 { 1.0 / sj } else { 0.0 };
            v_scaled.scale_col(j, factor);
        }
        // pinv = V·diag(1/s)·Uᵀ
        crate::linalg::dense::gemm_nt(&v_scaled, &self.u)
    }
}

/// Moore–Penrose pseudoinverse through the SVD: singular values at or below
/// `rank_tol · s_max` are treated as exact zeros.
pub fn pseudo_inverse(m: &DenseMatrix, rank_tol: f64) -> Result<DenseMatrix> {
    Ok(dense_svd(m)?.pseudo_inverse(rank_tol))
}

/// Number of singular values above `rank_tol · s_max`.
pub fn numerical_rank(s: &[f64], rank_tol: f64) -> usize {
    let cutoff = rank_tol * s.first().copied().unwrap_or(0.0);
    s.iter().filter(|&&x| x > cutoff && x > 0.0).count()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::dense::{gemm_nt, gemm_tn};
    use crate::linalg::operator::spectral_norm_estimate;
    use crate::sketch::sample_dense_gaussian;

    /// Brute-force eigenvalues of a symmetric matrix by cyclic Jacobi
    /// rotations — an independent route to singular values via MᵀM.
    fn jacobi_eigenvalues(sym: &DenseMatrix) -> Vec<f64> {
        let n = sym.rows();
        let mut a = sym.clone();
        for _sweep in 0..200 {
            let mut off = 0.0;
            for p in 0..n {
                for q in p + 1..n {
                    off += a[(p, q)] * a[(p, q)];
                }
            }
            if off <= 1e-28 * a.frobenius_norm().powi(2).max(1e-300) {
                break;
            }
            for p in 0..n {
                for q in p + 1..n {
                    let apq = a[(p, q)];
                    if apq.abs() <= 1e-300 {
                        continue;
                    }
                    let theta = (a[(q, q)] - a[(p, p)]) / (2.0 * apq);
                    let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                    let c = 1.0 / (t * t + 1.0).sqrt();
                    let s = t * c;
                    for k in 0..n {
                        let akp = a[(k, p)];
                        let akq = a[(k, q)];
                        a[(k, p)] = c * akp - s * akq;
                        a[(k, q)] = s * akp + c * akq;
                    }
                    for k in 0..n {
                        let apk = a[(p, k)];
                        let aqk = a[(q, k)];
                        a[(p, k)] = c * apk - s * aqk;
                        a[(q, k)] = s * apk + c * aqk;
                    }
                }
            }
        }
        let mut eig: Vec<f64> = (0..n).map(|i| a[(i, i)]).collect();
        eig.sort_by(|x, y| y.partial_cmp(x).unwrap());
        eig
    }

    fn assert_svd_contract(m: &DenseMatrix) {
        let Svd { u, s, v } = dense_svd(m).unwrap();
        let p = m.rows().min(m.cols());
        assert_eq!(u.shape(), (m.rows(), p));
        assert_eq!(v.shape(), (m.cols(), p));
        assert_eq!(s.len(), p);
        for i in 1..p {
            assert!(s[i - 1] >= s[i], "singular values not sorted: {s:?}");
        }
        for &x in &s {
            assert!(x >= 0.0);
        }
        let defect_scale = 1e-12 * m.rows().max(m.cols()) as f64;
        assert!(u.orthonormality_defect() <= defect_scale);
        assert!(v.orthonormality_defect() <= defect_scale);
        // ‖U·diag(s)·Vᵀ − M‖_F ≤ 1e-10 · max(rows, cols) · ‖M‖_F
        let mut us = u.clone();
        for (j, &sj) in s.iter().enumerate() {
            us.scale_col(j, sj);
        }
        let recon = gemm_nt(&us, &v);
        let tol = 1e-10 * m.rows().max(m.cols()) as f64 * m.frobenius_norm().max(1e-300);
        assert!(recon.sub(m).unwrap().frobenius_norm() <= tol);
    }

    #[test]
    fn diagonal_matrix_returns_its_diagonal() {
        let m = DenseMatrix::from_diag(&[3.0, 2.0, 1.0]);
        let svd = dense_svd(&m).unwrap();
        for (got, want) in svd.s.iter().zip([3.0, 2.0, 1.0]) {
            assert!((got - want).abs() <= 1e-14);
        }
        assert_svd_contract(&m);
    }

    #[test]
    fn zero_matrix_has_zero_spectrum() {
        let m = DenseMatrix::zeros(4, 3);
        let svd = dense_svd(&m).unwrap();
        assert!(svd.s.iter().all(|&x| x == 0.0));
        assert!(svd.u.orthonormality_defect() <= 1e-14);
        assert!(svd.v.orthonormality_defect() <= 1e-14);
    }

    #[test]
    fn squared_singular_values_match_jacobi_oracle() {
        let m = sample_dense_gaussian(6, 5, 31);
        let svd = dense_svd(&m).unwrap();
        let gram = gemm_tn(&m, &m);
        let eig = jacobi_eigenvalues(&gram);
        for (sv, lambda) in svd.s.iter().zip(eig) {
            assert!(
                (sv * sv - lambda).abs() <= 1e-9,
                "s² = {} vs oracle eigenvalue {lambda}",
                sv * sv
            );
        }
    }

    #[test]
    fn contract_holds_across_shapes_and_seeds() {
        for seed in 0..6 {
            assert_svd_contract(&sample_dense_gaussian(8, 8, seed));
            assert_svd_contract(&sample_dense_gaussian(12, 5, seed + 100));
            assert_svd_contract(&sample_dense_gaussian(5, 12, seed + 200)); // wide
            assert_svd_contract(&sample_dense_gaussian(60, 7, seed + 300)); // tall QR-first path
        }
    }

    #[test]
    fn rank_deficient_input_is_handled() {
        // Outer product → rank 1.
        let a = sample_dense_gaussian(7, 1, 3);
        let b = sample_dense_gaussian(1, 6, 4);
        let m = gemm(&a, &b).unwrap();
        let svd = dense_svd(&m).unwrap();
        assert!(svd.s[1] <= 1e-12 * svd.s[0]);
        assert_svd_contract(&m);
    }

    #[test]
    fn repeated_columns_and_zero_rows() {
        let mut m = DenseMatrix::zeros(6, 4);
        for i in 0..6 {
            let x = (i as f64 * 0.7).cos();
            m[(i, 0)] = x;
            m[(i, 1)] = x;
            m[(i, 2)] = if i % 2 == 0 { 1.0 } else { 0.0 };
        }
        assert_svd_contract(&m);
    }

    #[test]
    fn known_rank_two_spectrum() {
        // M = 5·x·yᵀ + 3·p·qᵀ with orthonormal {x,p}, {y,q}.
        let (qx, _) = crate::linalg::thin_qr(&sample_dense_gaussian(9, 2, 8)).unwrap();
        let (qy, _) = crate::linalg::thin_qr(&sample_dense_gaussian(7, 2, 9)).unwrap();
        let mut scaled = qx.clone();
        scaled.scale_col(0, 5.0);
        scaled.scale_col(1, 3.0);
        let m = gemm_nt(&scaled, &qy);
        let svd = dense_svd(&m).unwrap();
        assert!((svd.s[0] - 5.0).abs() <= 1e-12);
        assert!((svd.s[1] - 3.0).abs() <= 1e-12);
        assert!(svd.s[2] <= 1e-12);
    }

    #[test]
    fn steeply_graded_spectrum_converges() {
        // Condition 1e10 at n = 300: boundary values on a steeply graded
        // spectrum take far more QR sweeps than a flat one before the
        // deflation threshold trips. Regression guard for the iteration
        // budget; also pins the accuracy of the well-conditioned half.
        let n = 300;
        let (qx, _) = crate::linalg::thin_qr(&sample_dense_gaussian(n, n, 21)).unwrap();
        let (qy, _) = crate::linalg::thin_qr(&sample_dense_gaussian(n, n, 22)).unwrap();
        let sigma: Vec<f64> = (0..n)
            .map(|j| 10f64.powf(-10.0 * j as f64 / (n - 1) as f64))
            .collect();
        let mut scaled = qx;
        for (j, &s) in sigma.iter().enumerate() {
            scaled.scale_col(j, s);
        }
        let m = gemm_nt(&scaled, &qy);
        let svd = dense_svd(&m).expect("graded spectrum must converge");
        for j in 0..n / 2 {
            let rel = (svd.s[j] - sigma[j]).abs() / sigma[j];
            assert!(rel <= 1e-9, "σ_{j}: got {}, want {}", svd.s[j], sigma[j]);
        }
    }

    #[test]
    fn determinism_bit_for_bit() {
        let m = sample_dense_gaussian(20, 9, 77);
        let a = dense_svd(&m).unwrap();
        let b = dense_svd(&m).unwrap();
        assert_eq!(a.s, b.s);
        assert_eq!(a.u.entries(), b.u.entries());
        assert_eq!(a.v.entries(), b.v.entries());
    }

    #[test]
    fn spectral_norm_estimate_agrees_with_svd() {
        let m = sample_dense_gaussian(30, 20, 5);
        let est = spectral_norm_estimate(&m, 200, 3);
        let svd = dense_svd(&m).unwrap();
        assert!((est - svd.s[0]).abs() / svd.s[0] <= 0.01);
    }

    #[test]
    fn pseudo_inverse_of_identity_is_identity() {
        let id = DenseMatrix::identity(4);
        let pinv = pseudo_inverse(&id, default_rank_tol(4, 4)).unwrap();
        assert!(pinv.sub(&id).unwrap().max_abs() <= 1e-13);
    }

    #[test]
    fn pseudo_inverse_zeroes_defective_directions() {
        let m = DenseMatrix::from_diag(&[2.0, 0.0]);
        let pinv = pseudo_inverse(&m, default_rank_tol(2, 2)).unwrap();
        assert!((pinv[(0, 0)] - 0.5).abs() <= 1e-14);
        assert_eq!(pinv[(1, 1)], 0.0);
    }

    #[test]
    fn pseudo_inverse_is_left_inverse_at_full_column_rank() {
        let m = sample_dense_gaussian(12, 5, 6);
        let pinv = pseudo_inverse(&m, default_rank_tol(12, 5)).unwrap();
        let prod = gemm(&pinv, &m).unwrap();
        assert!(prod.sub(&DenseMatrix::identity(5)).unwrap().max_abs() <= 1e-9);
    }

    #[test]
    fn penrose_identities_hold_even_rank_deficient() {
        // Random rank-2 matrix in 6×4.
        let a = sample_dense_gaussian(6, 2, 10);
        let b = sample_dense_gaussian(2, 4, 11);
        let m = gemm(&a, &b).unwrap();
        let p = pseudo_inverse(&m, default_rank_tol(6, 4)).unwrap();
        let mpm = gemm(&gemm(&m, &p).unwrap(), &m).unwrap();
        assert!(mpm.sub(&m).unwrap().max_abs() <= 1e-10);
        let pmp = gemm(&gemm(&p, &m).unwrap(), &p).unwrap();
        assert!(pmp.sub(&p).unwrap().max_abs() <= 1e-10);
        let mp = gemm(&m, &p).unwrap();
        assert!(mp.sub(&mp.transpose()).unwrap().max_abs() <= 1e-10);
        let pm = gemm(&p, &m).unwrap();
        assert!(pm.sub(&pm.transpose()).unwrap().max_abs() <= 1e-10);
    }
}
