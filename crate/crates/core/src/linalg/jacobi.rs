use ndarray::{Array1, Array2, ArrayView2, Axis};

use super::{canonical_sign, EigPairs, LinalgError, SymMatrix};

/// Sweep budget for the cyclic Jacobi method.
pub const MAX_SWEEPS: usize = 100;

/// Relative off-diagonal threshold: iteration stops once
/// `off(A) <= CONVERGENCE * ||A||_F`.
const CONVERGENCE: f64 = 1e-12;

/// Top-`k` eigenpairs of `s` by algebraic value. Indefinite input is fine.
pub fn sym_eig(s: &SymMatrix, k: usize) -> Result<EigPairs, LinalgError> {
    let d = s.dim();
    if k > d {
        return Err(LinalgError::RankTooLarge { k, d });
    }
    Ok(eigh(s.view())?.truncate(k))
}

/// Full eigendecomposition of a symmetric matrix of any size, values
/// descending, each eigenvector sign-normalized (largest-magnitude entry
/// positive). Only the lower triangle is read.
pub fn eigh(a: ArrayView2<f64>) -> Result<EigPairs, LinalgError> {
    let (rows, cols) = a.dim();
    if rows != cols {
        return Err(LinalgError::NotSquare { rows, cols });
    }
    if a.iter().any(|v| !v.is_finite()) {
        return Err(LinalgError::NonFinite);
    }
    let n = rows;
    // row-major working copy; eigenvectors are accumulated as rows of `vt`
    let mut m = vec![0.0; n * n];
    for i in 0..n {
        for j in 0..=i {
            m[i * n + j] = a[[i, j]];
            m[j * n + i] = a[[i, j]];
        }
    }
    let mut vt = vec![0.0; n * n];
    for i in 0..n {
        vt[i * n + i] = 1.0;
    }
    let tol = CONVERGENCE * m.iter().map(|x| x * x).sum::<f64>().sqrt();

    let mut converged = false;
    for _ in 0..MAX_SWEEPS {
        if off_diagonal(&m, n) <= tol {
            converged = true;
            break;
        }
        for p in 0..n.saturating_sub(1) {
            for q in (p + 1)..n {
                rotate(&mut m, &mut vt, n, p, q);
            }
        }
    }
    if !converged && off_diagonal(&m, n) > tol {
        return Err(LinalgError::NoConvergence { sweeps: MAX_SWEEPS });
    }

    let mut order: Vec<usize> = (0..n).collect();
    // stable: equal eigenvalues keep solver order
    order.sort_by(|&i, &j| m[j * n + j].total_cmp(&m[i * n + i]));

    let values = Array1::from_iter(order.iter().map(|&i| m[i * n + i]));
    let mut vectors = Array2::zeros((n, n));
    for (col, &i) in order.iter().enumerate() {
        for r in 0..n {
            vectors[[r, col]] = vt[i * n + r];
        }
    }
    for col in vectors.axis_iter_mut(Axis(1)) {
        canonical_sign(col);
    }
    Ok(EigPairs { values, vectors })
}

fn off_diagonal(m: &[f64], n: usize) -> f64 {
    let mut sum = 0.0;
    for i in 0..n {
        for j in 0..n {
            if i != j {
                sum += m[i * n + j] * m[i * n + j];
            }
        }
    }
    sum.sqrt()
}

/// One Jacobi rotation annihilating `m[p][q]`; accumulates into the rows
/// of `vt`.
fn rotate(m: &mut [f64], vt: &mut [f64], n: usize, p: usize, q: usize) {
    let apq = m[p * n + q];
    if apq == 0.0 {
        return;
    }
    let app = m[p * n + p];
    let aqq = m[q * n + q];
    let theta = (aqq - app) / (2.0 * apq);
    let t = if theta.abs() > 1e150 {
        0.5 / theta
    } else {
        theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt())
    };
    let c = 1.0 / (t * t + 1.0).sqrt();
    let s = t * c;

    // rows p and q are contiguous; the symmetric columns are written after
    let (lo, hi) = m.split_at_mut(q * n);
    let row_p = &mut lo[p * n..p * n + n];
    let row_q = &mut hi[..n];
    for (ap, aq) in row_p.iter_mut().zip(row_q.iter_mut()) {
        let arp = *ap;
        let arq = *aq;
        *ap = c * arp - s * arq;
        *aq = s * arp + c * arq;
    }
    m[p * n + p] = app - t * apq;
    m[q * n + q] = aqq + t * apq;
    m[p * n + q] = 0.0;
    m[q * n + p] = 0.0;
    for r in 0..n {
        if r != p && r != q {
            m[r * n + p] = m[p * n + r];
            m[r * n + q] = m[q * n + r];
        }
    }

    let (lo, hi) = vt.split_at_mut(q * n);
    let vp = &mut lo[p * n..p * n + n];
    let vq = &mut hi[..n];
    for (a, b) in vp.iter_mut().zip(vq.iter_mut()) {
        let x = *a;
        let y = *b;
        *a = c * x - s * y;
        *b = s * x + c * y;
    }
}
