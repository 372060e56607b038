//! Householder QR least squares for tall systems.

use super::mat::Mat;
use super::NumericsError;

/// Solve `min_x ||a x - b||₂` for a tall full-column-rank `a` via Householder
/// QR. Deterministic (no pivoting), which keeps greedy solvers reproducible.
pub(crate) fn lstsq(a: &Mat, b: &[f64]) -> Result<Vec<f64>, NumericsError> {
    let m = a.nrows();
    let k = a.ncols();
    if b.len() != m {
        return Err(NumericsError::Dimension(format!(
            "lstsq rhs has length {}, expected {}",
            b.len(),
            m
        )));
    }
    if m < k {
        return Err(NumericsError::Dimension(format!(
            "lstsq needs a tall matrix, got {}x{}",
            m, k
        )));
    }

    let mut r = a.clone();
    let mut y = b.to_vec();
    let rank_tol = 1e-13 * a.fro_norm().max(f64::MIN_POSITIVE);

    for j in 0..k {
        // Householder vector for column j below the diagonal.
        let mut norm = 0.0;
        for i in j..m {
            norm += r[(i, j)] * r[(i, j)];
        }
        let norm = norm.sqrt();
        if norm <= rank_tol {
            return Err(NumericsError::RankDeficient(format!(
                "column {} is numerically dependent on its predecessors",
                j
            )));
        }
        let alpha = if r[(j, j)] >= 0.0 { -norm } else { norm };
        let mut v: Vec<f64> = (j..m).map(|i| r[(i, j)]).collect();
        v[0] -= alpha;
        let vtv: f64 = v.iter().map(|x| x * x).sum();
        if vtv > 0.0 {
            // Reflect the remaining columns and the rhs.
            for col in j..k {
                let mut s = 0.0;
                for (off, vi) in v.iter().enumerate() {
                    s += vi * r[(j + off, col)];
                }
                let f = 2.0 * s / vtv;
                for (off, vi) in v.iter().enumerate() {
                    r[(j + off, col)] -= f * vi;
                }
            }
            let mut s = 0.0;
            for (off, vi) in v.iter().enumerate() {
                s += vi * y[j + off];
            }
            let f = 2.0 * s / vtv;
            for (off, vi) in v.iter().enumerate() {
                y[j + off] -= f * vi;
            }
        }
        r[(j, j)] = alpha;
    }

    // Back substitution on the upper-triangular k×k block.
    let mut x = vec![0.0; k];
    for j in (0..k).rev() {
        let mut s = y[j];
        for l in (j + 1)..k {
            s -= r[(j, l)] * x[l];
        }
        if r[(j, j)].abs() <= rank_tol {
            return Err(NumericsError::RankDeficient(format!(
                "zero pivot at column {}",
                j
            )));
        }
        x[j] = s / r[(j, j)];
    }
    Ok(x)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exact_square_solve() {
        let a = Mat::from_rows(&[vec![2.0, 1.0], vec![1.0, 3.0]]);
        let x = lstsq(&a, &[5.0, 10.0]).unwrap();
        assert!((x[0] - 1.0).abs() < 1e-12);
        assert!((x[1] - 3.0).abs() < 1e-12);
    }

    #[test]
    fn overdetermined_average() {
        // min ||[1;1] x - [1;3]|| -> x = 2
        let a = Mat::column(&[1.0, 1.0]);
        let x = lstsq(&a, &[1.0, 3.0]).unwrap();
        assert!((x[0] - 2.0).abs() < 1e-12);
    }

    #[test]
    fn dependent_columns_rejected() {
        let a = Mat::from_rows(&[vec![1.0, 2.0], vec![2.0, 4.0], vec![3.0, 6.0]]);
        assert!(matches!(
            lstsq(&a, &[1.0, 1.0, 1.0]),
            Err(NumericsError::RankDeficient(_))
        ));
    }
}
