//! Cyclic Jacobi eigendecomposition for real symmetric matrices.
//!
//! Jacobi is slow compared to tridiagonalization methods but rock solid and
//! accurate to machine precision, which is what the stability certificates
//! need. All matrices here are at most a few dozen rows.

use super::mat::Mat;
use super::NumericsError;

const MAX_SWEEPS: usize = 64;

/// Returns eigenvalues in ascending order and the matching eigenvector
/// columns, so that `a = V diag(values) Vᵀ`.
pub(crate) fn jacobi_eigen(a: &Mat) -> Result<(Vec<f64>, Mat), NumericsError> {
    assert!(a.is_square());
    let n = a.nrows();
    let mut w = a.clone();
    let mut v = Mat::identity(n);

    if n <= 1 {
        return Ok((vec![if n == 1 { w[(0, 0)] } else { 0.0 }; n], v));
    }

    let scale = w.fro_norm();
    // Absolute threshold below which an off-diagonal entry counts as zero.
    let done_tol = scale * 1e-15;

    for _sweep in 0..MAX_SWEEPS {
        let mut off = 0.0f64;
        for p in 0..n {
            for q in (p + 1)..n {
                off += w[(p, q)] * w[(p, q)];
            }
        }
        if (2.0 * off).sqrt() <= done_tol {
            let mut pairs: Vec<(f64, usize)> =
                (0..n).map(|i| (w[(i, i)], i)).collect();
            pairs.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap());
            let values: Vec<f64> = pairs.iter().map(|p| p.0).collect();
            let order: Vec<usize> = pairs.iter().map(|p| p.1).collect();
            let vectors = v.select_cols(&order);
            return Ok((values, vectors));
        }

        for p in 0..n {
            for q in (p + 1)..n {
                let apq = w[(p, q)];
                if apq.abs() <= done_tol / (n as f64) {
                    continue;
                }
                let theta = (w[(q, q)] - w[(p, p)]) / (2.0 * apq);
                let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;

                // Apply the rotation J(p, q, θ) on both sides: w ← JᵀwJ.
                let wpp = w[(p, p)];
                let wqq = w[(q, q)];
                w[(p, p)] = wpp - t * apq;
                w[(q, q)] = wqq + t * apq;
                w[(p, q)] = 0.0;
                w[(q, p)] = 0.0;
                for i in 0..n {
                    if i != p && i != q {
                        let wip = w[(i, p)];
                        let wiq = w[(i, q)];
                        w[(i, p)] = c * wip - s * wiq;
                        w[(p, i)] = w[(i, p)];
                        w[(i, q)] = s * wip + c * wiq;
                        w[(q, i)] = w[(i, q)];
                    }
                }
                for i in 0..n {
                    let vip = v[(i, p)];
                    let viq = v[(i, q)];
                    v[(i, p)] = c * vip - s * viq;
                    v[(i, q)] = s * vip + c * viq;
                }
            }
        }
    }
    Err(NumericsError::NoConvergence(MAX_SWEEPS))
}
