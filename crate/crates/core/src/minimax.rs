//! Offline gradient descent-ascent for the similarity-matching minimax
//! problem whose solution is the cPCA* subspace.
//!
//! With `Z = M^-1 W X+` (the minimizer over outputs), each iteration applies
//!
//! ```text
//! W <- W + 2 eta (Z X+' / T - W B)
//! M <- M + (eta / tau) (Z Z' / T - M)
//! ```
//!
//! The solver works with the Gram matrix `C = X+ X+' / T`, so that
//! `Z X+' / T = M^-1 W C` and `Z Z' / T = M^-1 W C W' M^-T`.

use ndarray::{Array2, ArrayView2};

use crate::error::{Error, Result};
use crate::eval::projector_alignment;
use crate::linalg::{frobenius, min_eigenvalue, solve_gev, spd_solve, SymMatrix};
use crate::online::gaussian_weights;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MinimaxConfig {
    pub k: usize,
    pub eta: f64,
    pub tau: f64,
    pub max_iters: usize,
    /// Seed for the Gaussian initialization of `W`.
    pub seed: u64,
    pub record_every: usize,
    /// Early stop once both update norms fall below this.
    pub tol: f64,
}

impl MinimaxConfig {
    pub fn new(k: usize, eta: f64, tau: f64, max_iters: usize) -> Self {
        MinimaxConfig {
            k,
            eta,
            tau,
            max_iters,
            seed: 0,
            record_every: 100,
            tol: 1e-9,
        }
    }

    pub fn seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    pub fn record_every(mut self, every: usize) -> Self {
        self.record_every = every.max(1);
        self
    }
}

#[derive(Debug, Clone)]
pub struct MinimaxFit {
    /// `k x d` feedforward weights.
    pub w: Array2<f64>,
    /// `k x k` lateral weights.
    pub m: Array2<f64>,
    /// `(iteration, alignment with the direct GEV subspace)`.
    pub trajectory: Vec<(usize, f64)>,
    pub iterations: usize,
    pub converged: bool,
}

impl MinimaxFit {
    /// `M^-1 W`, whose row space is the learned subspace.
    pub fn filters(&self) -> Result<Array2<f64>> {
        Ok(spd_solve(self.m.view(), self.w.view())?)
    }

    /// Learned subspace as a `d x k` basis (not orthonormalized).
    pub fn basis(&self) -> Result<Array2<f64>> {
        Ok(self.filters()?.reversed_axes())
    }
}

/// Relative residuals of the two fixed-point identities
/// `M = Z Z' / T` and `Z X+' / T = W B`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FixedPointResiduals {
    pub m_rel: f64,
    pub w_rel: f64,
}

/// Exact gradient increments `(dW, dM)` at `(W, M)`, evaluated through the
/// explicit outputs `Z = M^-1 W X+`.
pub fn offline_increments(
    w: ArrayView2<f64>,
    m: ArrayView2<f64>,
    xpos: ArrayView2<f64>,
    b: &SymMatrix,
    eta: f64,
    tau: f64,
) -> Result<(Array2<f64>, Array2<f64>)> {
    let t = xpos.ncols() as f64;
    let z = spd_solve(m, w.dot(&xpos).view())?;
    let dw = (z.dot(&xpos.t()) / t - w.dot(b.as_array())) * (2.0 * eta);
    let dm = (z.dot(&z.t()) / t - m) * (eta / tau);
    Ok((dw, dm))
}

pub fn fixed_point_residuals(
    fit: &MinimaxFit,
    xpos: ArrayView2<f64>,
    b: &SymMatrix,
) -> Result<FixedPointResiduals> {
    let t = xpos.ncols() as f64;
    let z = spd_solve(fit.m.view(), fit.w.dot(&xpos).view())?;
    let zz = z.dot(&z.t()) / t;
    let zx = z.dot(&xpos.t()) / t;
    let wb = fit.w.dot(b.as_array());
    Ok(FixedPointResiduals {
        m_rel: frobenius((&fit.m - &zz).view()) / frobenius(fit.m.view()),
        w_rel: frobenius((&zx - &wb).view()) / frobenius(wb.view()),
    })
}

/// Runs gradient descent-ascent from `W ~ N(0, 1/d)`, `M = I`.
///
/// `xpos` is `d x T`. Fails if `eta` is outside `(0, tau)`, if `B` is not
/// positive definite, or if `M` loses definiteness along the way.
pub fn offline_minimax_fit(
    xpos: ArrayView2<f64>,
    b: &SymMatrix,
    config: &MinimaxConfig,
) -> Result<MinimaxFit> {
    let (d, t) = xpos.dim();
    let k = config.k;
    if b.dim() != d {
        return Err(Error::Shape(format!(
            "data has d={d} but B is {0}x{0}",
            b.dim()
        )));
    }
    if k == 0 || k >= d {
        return Err(Error::InvalidRank { k, d });
    }
    if !(config.eta > 0.0 && config.eta < config.tau) {
        return Err(Error::InvalidStepSize {
            eta: config.eta,
            tau: config.tau,
        });
    }
    if t == 0 {
        return Err(Error::InvalidInput("no positive samples".into()));
    }

    let gram = SymMatrix::new(xpos.dot(&xpos.t()) / t as f64)?;
    let oracle = solve_gev(&gram, b, k)?.vectors;
    let gram = gram.into_array();
    let b = b.as_array();

    let mut w = gaussian_weights(k, d, config.seed);
    let mut m = Array2::<f64>::eye(k);
    let mut trajectory = Vec::new();
    let every = config.record_every.max(1);
    let mut converged = false;
    let mut iterations = 0;

    let align = |w: &Array2<f64>, m: &Array2<f64>| -> Result<f64> {
        let f = spd_solve(m.view(), w.view())?;
        projector_alignment(f.t(), oracle.view())
    };

    for it in 1..=config.max_iters {
        let f = spd_solve(m.view(), w.view())?;
        let fc = f.dot(&gram);
        let dw = (&fc - &w.dot(b)) * (2.0 * config.eta);
        let dm = (fc.dot(&f.t()) - &m) * (config.eta / config.tau);
        w += &dw;
        m += &dm;
        m = crate::linalg::symmetrize_owned(m);
        iterations = it;

        if w.iter().chain(m.iter()).any(|v| !v.is_finite()) {
            return Err(Error::Diverged);
        }
        let min_eig = min_eigenvalue(m.view())?;
        if min_eig <= 1e-12 {
            return Err(Error::LostDefiniteness { min_eig });
        }
        let done = frobenius(dw.view()) < config.tol && frobenius(dm.view()) < config.tol;
        if it % every == 0 || done {
            trajectory.push((it, align(&w, &m)?));
        }
        if done {
            converged = true;
            break;
        }
    }
    if trajectory.last().map(|(i, _)| *i) != Some(iterations) {
        trajectory.push((iterations, align(&w, &m)?));
    }
    Ok(MinimaxFit {
        w,
        m,
        trajectory,
        iterations,
        converged,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::array;

    #[test]
    fn rejects_step_outside_open_interval() {
        let x = Array2::from_shape_fn((3, 10), |(i, j)| (i + j) as f64);
        let b = SymMatrix::identity(3).unwrap();
        for eta in [0.0, 1.0, 2.0] {
            let err = offline_minimax_fit(x.view(), &b, &MinimaxConfig::new(1, eta, 1.0, 10));
            assert!(matches!(err, Err(Error::InvalidStepSize { .. })));
        }
    }

    #[test]
    fn orthogonal_rows_find_top_principal_direction() {
        // rows of X are orthogonal: variances 4, 1, 0.25 along e1, e2, e3
        let x = array![
            [2.0, -2.0, 2.0, -2.0],
            [1.0, 1.0, -1.0, -1.0],
            [0.5, -0.5, -0.5, 0.5]
        ];
        let b = SymMatrix::identity(3).unwrap();
        let fit = offline_minimax_fit(
            x.view(),
            &b,
            &MinimaxConfig::new(1, 0.05, 1.0, 20_000).seed(3),
        )
        .unwrap();
        let e1 = array![[1.0], [0.0], [0.0]];
        let a = projector_alignment(fit.basis().unwrap().view(), e1.view()).unwrap();
        assert!(a >= 0.999, "alignment {a}");
        assert!(fit.converged);
    }

    #[test]
    fn fixed_point_has_small_updates() {
        let x = array![
            [2.0, -2.0, 2.0, -2.0, 0.3],
            [1.0, 1.0, -1.0, -1.0, 0.2],
            [0.5, -0.5, -0.5, 0.5, 0.1]
        ];
        let b = SymMatrix::new(array![[1.0, 0.1, 0.0], [0.1, 2.0, 0.0], [0.0, 0.0, 1.5]]).unwrap();
        let fit = offline_minimax_fit(
            x.view(),
            &b,
            &MinimaxConfig::new(2, 0.05, 0.5, 100_000).seed(1),
        )
        .unwrap();
        assert!(fit.converged);
        let (dw, dm) = offline_increments(fit.w.view(), fit.m.view(), x.view(), &b, 0.05, 0.5).unwrap();
        assert!(frobenius(dw.view()) <= 1e-6);
        assert!(frobenius(dm.view()) <= 1e-6);
        let res = fixed_point_residuals(&fit, x.view(), &b).unwrap();
        assert!(res.m_rel <= 1e-6 && res.w_rel <= 1e-6, "{res:?}");
    }
}
