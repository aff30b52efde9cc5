//! Streaming cPCA*.
//!
//! Each sample `(x, delta)` drives a two-layer network with feedforward
//! weights `W` (k x d) and lateral weights `-M` (k x k):
//!
//! 1. the running negative fraction is updated,
//!    `p_t = p_{t-1} + (1 - delta - p_{t-1}) / t`;
//! 2. the output settles at the equilibrium of `dz/dg = delta c - M z`,
//!    i.e. `z = delta M^-1 c` with `c = W x`;
//! 3. `W <- W + 2 eta (z - beta (1 - delta) / p_t c) x' - 2 eta (1 - beta) W`;
//! 4. `M <- M + (eta / tau) (z z' - M)`.
//!
//! Step 3 replaces `B_beta` with the one-sample estimate
//! `beta (1 - delta) / p_t x x' + (1 - beta) I`. Both updates are local: a
//! synapse only sees its pre- and postsynaptic activity and the shared `p_t`.

use std::path::Path;

use ndarray::{Array1, Array2, ArrayView1, Axis};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};
use serde_json::Map;

use crate::data::{Label, LabeledSample};
use crate::error::{Error, Result};
use crate::eval::projector_alignment;
use crate::linalg::{
    canonical_sign, eigh, min_eigenvalue, orthonormalize_columns, spd_solve, symmetrize_owned,
};
use crate::offline::{Method, SubspaceModel};

/// Initial value of the running negative fraction.
pub const P0: f64 = 0.5;

/// Smallest admissible eigenvalue of `M` after a step.
const MIN_LATERAL_EIG: f64 = 1e-12;

/// `k x d` matrix with i.i.d. `N(0, 1/d)` entries drawn from `seed`.
pub fn gaussian_weights(k: usize, d: usize, seed: u64) -> Array2<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let normal = Normal::new(0.0, 1.0 / (d as f64).sqrt()).expect("finite std");
    Array2::from_shape_simple_fn((k, d), || normal.sample(&mut rng))
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum LearningRate {
    #[default]
    Constant,
    /// `eta_t = eta / (1 + t / t0)`
    InverseTime { t0: f64 },
}

#[derive(Debug, Clone, PartialEq)]
pub struct OnlineState {
    /// Feedforward weights, `k x d`.
    pub w: Array2<f64>,
    /// Lateral weights, `k x k`, symmetric positive definite.
    pub m: Array2<f64>,
    /// Running estimate of the fraction of negative samples.
    pub p: f64,
    /// Number of steps applied.
    pub t: u64,
    pub beta: f64,
    pub eta: f64,
    pub tau: f64,
    pub schedule: LearningRate,
    pub seed: u64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct StepOutput {
    /// Network output; exactly zero for negative samples.
    pub z: Array1<f64>,
    /// Feedforward drive `W x`.
    pub c: Array1<f64>,
    pub accepted: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrajectoryPoint {
    pub t: u64,
    pub alignment: Option<f64>,
    pub p: f64,
}

#[derive(Serialize, Deserialize)]
struct Checkpoint {
    d: usize,
    k: usize,
    beta: f64,
    eta: f64,
    tau: f64,
    p: f64,
    t: u64,
    /// row-major
    w: Vec<f64>,
    /// row-major
    m: Vec<f64>,
    seed: u64,
    #[serde(default)]
    schedule: LearningRate,
}

fn check_hyper(d: usize, k: usize, beta: f64, eta: f64, tau: f64) -> Result<()> {
    if k == 0 || k >= d {
        return Err(Error::InvalidRank { k, d });
    }
    if !(0.0..=1.0).contains(&beta) {
        return Err(Error::ContrastOutOfRange(beta));
    }
    if !(eta > 0.0 && eta < tau) {
        return Err(Error::InvalidStepSize { eta, tau });
    }
    Ok(())
}

impl OnlineState {
    /// `W ~ N(0, 1/d)` from `seed`, `M = I`, `p = 0.5`, `t = 0`.
    pub fn init(d: usize, k: usize, beta: f64, eta: f64, tau: f64, seed: u64) -> Result<Self> {
        check_hyper(d, k, beta, eta, tau)?;
        Ok(OnlineState {
            w: gaussian_weights(k, d, seed),
            m: Array2::eye(k),
            p: P0,
            t: 0,
            beta,
            eta,
            tau,
            schedule: LearningRate::Constant,
            seed,
        })
    }

    /// Builds a state from explicit weights, validating shapes and `M`.
    pub fn from_parts(
        w: Array2<f64>,
        m: Array2<f64>,
        p: f64,
        t: u64,
        beta: f64,
        eta: f64,
        tau: f64,
    ) -> Result<Self> {
        let (k, d) = w.dim();
        if m.dim() != (k, k) {
            return Err(Error::Shape(format!(
                "W is {k}x{d} so M must be {k}x{k}, got {:?}",
                m.dim()
            )));
        }
        check_hyper(d, k, beta, eta, tau)?;
        if !(0.0..=1.0).contains(&p) {
            return Err(Error::InvalidInput(format!("p = {p} outside [0, 1]")));
        }
        let min_eig = min_eigenvalue(m.view())?;
        if min_eig <= MIN_LATERAL_EIG {
            return Err(Error::LostDefiniteness { min_eig });
        }
        Ok(OnlineState {
            w,
            m: symmetrize_owned(m),
            p,
            t,
            beta,
            eta,
            tau,
            schedule: LearningRate::Constant,
            seed: 0,
        })
    }

    pub fn with_schedule(mut self, schedule: LearningRate) -> Self {
        self.schedule = schedule;
        self
    }

    pub fn d(&self) -> usize {
        self.w.ncols()
    }

    pub fn k(&self) -> usize {
        self.w.nrows()
    }

    /// Step size for the next update.
    pub fn current_eta(&self) -> f64 {
        match self.schedule {
            LearningRate::Constant => self.eta,
            LearningRate::InverseTime { t0 } => self.eta / (1.0 + self.t as f64 / t0),
        }
    }

    /// Advances `t` and folds `delta` into the running negative fraction.
    pub fn update_p(&mut self, label: Label) {
        self.t += 1;
        self.p += (1.0 - label.delta() - self.p) / self.t as f64;
    }

    /// Equilibrium output `z = delta M^-1 W x`.
    pub fn output(&self, x: ArrayView1<f64>, label: Label) -> Result<StepOutput> {
        if x.len() != self.d() {
            return Err(Error::Shape(format!(
                "sample has length {}, state has d={}",
                x.len(),
                self.d()
            )));
        }
        let c = self.w.dot(&x);
        let z = match label {
            Label::Negative => Array1::zeros(self.k()),
            Label::Positive => {
                let rhs = c.view().insert_axis(Axis(1));
                spd_solve(self.m.view(), rhs)?.remove_axis(Axis(1))
            }
        };
        Ok(StepOutput {
            z,
            c,
            accepted: label == Label::Positive,
        })
    }

    /// One full online update. On error the state is left as it was.
    pub fn step(&mut self, sample: &LabeledSample) -> Result<StepOutput> {
        let x = ArrayView1::from(&sample.x[..]);
        if x.len() != self.d() {
            return Err(Error::Shape(format!(
                "sample has length {}, state has d={}",
                x.len(),
                self.d()
            )));
        }
        let mut next = self.clone();
        next.update_p(sample.label);
        let out = next.output(x, sample.label)?;
        let eta = self.current_eta();

        let neg_weight = match sample.label {
            Label::Positive => 0.0,
            Label::Negative => {
                assert!(next.p > 0.0, "a negative sample forces p_t >= 1/t");
                next.beta / next.p
            }
        };
        // W <- (1 - 2 eta (1 - beta)) W + 2 eta (z - beta (1 - delta)/p c) x'
        let drive = &out.z - &(&out.c * neg_weight);
        next.w *= 1.0 - 2.0 * eta * (1.0 - next.beta);
        let x_row = x.insert_axis(Axis(0));
        let drive_col = drive.view().insert_axis(Axis(1));
        next.w += &(drive_col.dot(&x_row) * (2.0 * eta));

        let zz = out.z.view().insert_axis(Axis(1)).dot(&out.z.view().insert_axis(Axis(0)));
        let rate = eta / next.tau;
        next.m = symmetrize_owned(&next.m + &((zz - &next.m) * rate));

        if next.w.iter().chain(next.m.iter()).any(|v| !v.is_finite()) {
            return Err(Error::Diverged);
        }
        let min_eig = min_eigenvalue(next.m.view())?;
        if min_eig <= MIN_LATERAL_EIG {
            return Err(Error::LostDefiniteness { min_eig });
        }
        *self = next;
        Ok(out)
    }

    /// Orthonormal basis for the row space of `M^-1 W`, the map from a
    /// positive input to the network output.
    pub fn extract_subspace(&self) -> Result<SubspaceModel> {
        if self.t == 0 {
            return Err(Error::InvalidInput(
                "no samples have been streamed yet".into(),
            ));
        }
        let f = spd_solve(self.m.view(), self.w.view())?;
        let gram = eigh(f.dot(&f.t()).view())?;
        let largest = gram.values[0].max(0.0);
        let smallest = gram.values[gram.values.len() - 1].max(0.0);
        let ratio = if largest > 0.0 {
            (smallest / largest).sqrt()
        } else {
            0.0
        };
        if ratio <= 1e-10 {
            return Err(Error::DegenerateState { ratio });
        }
        let mut basis = orthonormalize_columns(f.t())?;
        for col in basis.axis_iter_mut(Axis(1)) {
            canonical_sign(col);
        }
        let mut meta = Map::new();
        meta.insert("t".into(), self.t.into());
        meta.insert("p".into(), self.p.into());
        meta.insert("eta".into(), self.eta.into());
        meta.insert("tau".into(), self.tau.into());
        meta.insert("values".into(), "eigenvalues of M".into());
        Ok(SubspaceModel {
            method: Method::CpcaStarOnline,
            contrast: self.beta,
            k: self.k(),
            d: self.d(),
            values: eigh(self.m.view())?.values.to_vec(),
            basis,
            center: false,
            meta,
        })
    }

    pub fn to_json(&self) -> Result<String> {
        let cp = Checkpoint {
            d: self.d(),
            k: self.k(),
            beta: self.beta,
            eta: self.eta,
            tau: self.tau,
            p: self.p,
            t: self.t,
            w: self.w.iter().copied().collect(),
            m: self.m.iter().copied().collect(),
            seed: self.seed,
            schedule: self.schedule,
        };
        Ok(serde_json::to_string(&cp)?)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let cp: Checkpoint = serde_json::from_str(text)?;
        let w = Array2::from_shape_vec((cp.k, cp.d), cp.w)
            .map_err(|e| Error::Shape(format!("W: {e}")))?;
        let m = Array2::from_shape_vec((cp.k, cp.k), cp.m)
            .map_err(|e| Error::Shape(format!("M: {e}")))?;
        let mut state = Self::from_parts(w, m, cp.p, cp.t, cp.beta, cp.eta, cp.tau)?;
        state.seed = cp.seed;
        state.schedule = cp.schedule;
        Ok(state)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        std::fs::write(path, self.to_json()? + "\n").map_err(|e| Error::io(path, e))
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_json(&text)
    }
}

/// One-sample estimate of `B_beta`: `beta (1 - delta) / p x x' + (1 - beta) I`.
pub fn b_beta_estimate(beta: f64, p: f64, x: ArrayView1<f64>, label: Label) -> Array2<f64> {
    let d = x.len();
    let mut b = Array2::eye(d) * (1.0 - beta);
    if label == Label::Negative {
        let col = x.insert_axis(Axis(1));
        b += &(col.dot(&col.t()) * (beta / p));
    }
    b
}

/// The `W` increment of one online step taken with a frozen negative
/// fraction `p` and without advancing the state.
pub fn online_w_increment(state: &OnlineState, x: ArrayView1<f64>, label: Label, p: f64) -> Result<Array2<f64>> {
    let out = state.output(x, label)?;
    let neg_weight = if label == Label::Negative { state.beta / p } else { 0.0 };
    let drive = &out.z - &(&out.c * neg_weight);
    let eta = state.current_eta();
    let outer = drive.view().insert_axis(Axis(1)).dot(&x.insert_axis(Axis(0)));
    Ok(outer * (2.0 * eta) - &state.w * (2.0 * eta * (1.0 - state.beta)))
}

/// Applies [`OnlineState::step`] to every sample in order, recording
/// `(t, alignment, p)` every `record_every` steps. Alignment is measured
/// against `oracle` when given.
pub fn run_stream<'a, I>(
    state: &mut OnlineState,
    samples: I,
    record_every: usize,
    oracle: Option<&SubspaceModel>,
) -> Result<Vec<TrajectoryPoint>>
where
    I: IntoIterator<Item = &'a LabeledSample>,
{
    if let Some(o) = oracle {
        if o.d != state.d() || o.k != state.k() {
            return Err(Error::Shape(format!(
                "oracle has d={}, k={}; state has d={}, k={}",
                o.d,
                o.k,
                state.d(),
                state.k()
            )));
        }
    }
    let every = record_every.max(1) as u64;
    let mut trajectory = Vec::new();
    for (index, sample) in samples.into_iter().enumerate() {
        state.step(sample).map_err(|e| Error::Step {
            index,
            source: Box::new(e),
        })?;
        if state.t % every == 0 {
            let alignment = match oracle {
                Some(o) => match state.extract_subspace() {
                    Ok(model) => Some(projector_alignment(model.basis(), o.basis())?),
                    Err(Error::DegenerateState { .. }) => Some(0.0),
                    Err(e) => return Err(e),
                },
                None => None,
            };
            trajectory.push(TrajectoryPoint {
                t: state.t,
                alignment,
                p: state.p,
            });
        }
    }
    Ok(trajectory)
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::array;

    fn hand_state(p: f64) -> OnlineState {
        OnlineState::from_parts(array![[1.0, 0.0]], array![[1.0]], p, 1, 0.5, 0.1, 1.0).unwrap()
    }

    #[test]
    fn init_matches_defaults() {
        let s = OnlineState::init(77, 2, 0.9, 0.003, 1.0, 7).unwrap();
        assert_eq!(s.p, 0.5);
        assert_eq!(s.t, 0);
        assert_eq!(s.m, Array2::<f64>::eye(2));
        assert_eq!(s.w.dim(), (2, 77));
        let again = OnlineState::init(77, 2, 0.9, 0.003, 1.0, 7).unwrap();
        assert_eq!(s.w, again.w);
    }

    #[test]
    fn init_rejects_eta_at_tau() {
        assert!(matches!(
            OnlineState::init(4, 2, 0.5, 1.0, 1.0, 0),
            Err(Error::InvalidStepSize { .. })
        ));
    }

    #[test]
    fn p_recursion() {
        let mut s = OnlineState::init(3, 1, 0.5, 0.1, 1.0, 0).unwrap();
        s.update_p(Label::Positive);
        assert_eq!((s.t, s.p), (1, 0.0));
        let mut s = OnlineState::init(3, 1, 0.5, 0.1, 1.0, 0).unwrap();
        for _ in 0..50 {
            s.update_p(Label::Negative);
            assert_eq!(s.p, 1.0);
        }
        assert_eq!(s.t, 50);
    }

    #[test]
    fn output_examples() {
        let s = hand_state(0.5);
        let x = array![1.0, 1.0];
        let out = s.output(x.view(), Label::Positive).unwrap();
        assert_eq!((out.c[0], out.z[0]), (1.0, 1.0));
        let out = s.output(x.view(), Label::Negative).unwrap();
        assert_eq!(out.z[0], 0.0);
        assert!(!out.accepted);

        let s = OnlineState::from_parts(
            array![[1.0, 2.0, 0.0], [0.0, 1.0, -1.0]],
            Array2::eye(2) * 2.0,
            0.5,
            1,
            0.5,
            0.1,
            1.0,
        )
        .unwrap();
        let out = s.output(array![1.0, -1.0, 3.0].view(), Label::Positive).unwrap();
        let half = &out.c / 2.0;
        assert!(out.z.iter().zip(half.iter()).all(|(a, b)| (a - b).abs() < 1e-15));
    }

    #[test]
    fn positive_step_by_hand() {
        // p = 1 at t = 1; a positive sample moves it to 0.5
        let mut s = hand_state(1.0);
        let out = s.step(&LabeledSample::positive(vec![1.0, 1.0])).unwrap();
        assert_eq!(s.p, 0.5);
        assert_eq!(out.z[0], 1.0);
        assert!((s.w[[0, 0]] - 1.1).abs() <= 1e-15);
        assert!((s.w[[0, 1]] - 0.2).abs() <= 1e-15);
        assert_eq!(s.m[[0, 0]], 1.0);
    }

    #[test]
    fn negative_step_by_hand() {
        let mut s = hand_state(0.0);
        let out = s.step(&LabeledSample::negative(vec![1.0, 1.0])).unwrap();
        assert_eq!(s.p, 0.5);
        assert_eq!(out.z[0], 0.0);
        assert!((s.w[[0, 0]] - 0.7).abs() <= 1e-15);
        assert!((s.w[[0, 1]] + 0.2).abs() <= 1e-15);
        assert!((s.m[[0, 0]] - 0.9).abs() <= 1e-15);
    }

    #[test]
    fn beta_zero_negative_is_pure_decay() {
        let mut s = OnlineState::init(4, 2, 0.0, 0.01, 1.0, 9).unwrap();
        let before = s.w.clone();
        s.step(&LabeledSample::negative(vec![1.0, -2.0, 0.5, 3.0])).unwrap();
        let expected = before * (1.0 - 2.0 * 0.01);
        assert!((&s.w - &expected).iter().all(|v| v.abs() < 1e-15));
    }

    #[test]
    fn wrong_dimension_is_rejected() {
        let mut s = OnlineState::init(4, 2, 0.5, 0.01, 1.0, 9).unwrap();
        assert!(s.step(&LabeledSample::positive(vec![1.0])).is_err());
        assert_eq!(s.t, 0);
    }

    #[test]
    fn divergence_is_reported() {
        let mut s = OnlineState::init(3, 1, 1.0, 0.9, 1.0, 1).unwrap();
        let big = LabeledSample::negative(vec![1e3, 1e3, 1e3]);
        let mut failed = false;
        for _ in 0..100 {
            if let Err(e) = s.step(&big) {
                assert!(matches!(e, Error::Diverged | Error::LostDefiniteness { .. } | Error::Linalg(_)));
                failed = true;
                break;
            }
        }
        assert!(failed);
    }

    #[test]
    fn extract_identity_state() {
        let w = array![[1.0, 0.0, 0.0, 0.0], [0.0, 1.0, 0.0, 0.0]];
        let s = OnlineState::from_parts(w, Array2::eye(2), 0.5, 1, 0.5, 0.1, 1.0).unwrap();
        let model = s.extract_subspace().unwrap();
        assert_eq!(model.basis, array![[1.0, 0.0], [0.0, 1.0], [0.0, 0.0], [0.0, 0.0]]);
        assert_eq!(model.method, Method::CpcaStarOnline);
    }

    #[test]
    fn extract_rejects_rank_deficiency() {
        let w = array![[1.0, 0.0, 0.0], [2.0, 0.0, 0.0]];
        let s = OnlineState::from_parts(w, Array2::eye(2), 0.5, 1, 0.5, 0.1, 1.0).unwrap();
        assert!(matches!(s.extract_subspace(), Err(Error::DegenerateState { .. })));
    }

    #[test]
    fn checkpoint_round_trip_is_bitwise() {
        let mut s = OnlineState::init(5, 2, 0.7, 0.01, 1.0, 42).unwrap();
        for i in 0..20 {
            let x = vec![i as f64 * 0.1, 1.0 / (i + 1) as f64, -0.3, 0.7, 1e-3];
            let sample = if i % 3 == 0 {
                LabeledSample::negative(x)
            } else {
                LabeledSample::positive(x)
            };
            s.step(&sample).unwrap();
        }
        let back = OnlineState::from_json(&s.to_json().unwrap()).unwrap();
        assert_eq!(back.t, s.t);
        assert_eq!(back.p.to_bits(), s.p.to_bits());
        assert!(back.w.iter().zip(s.w.iter()).all(|(a, b)| a.to_bits() == b.to_bits()));
        assert!(back.m.iter().zip(s.m.iter()).all(|(a, b)| a.to_bits() == b.to_bits()));
        assert_eq!(back.seed, 42);
    }

    #[test]
    fn run_stream_counts_and_records() {
        let mut s = OnlineState::init(3, 1, 0.5, 0.01, 1.0, 0).unwrap();
        let data: Vec<LabeledSample> = (0..25)
            .map(|i| {
                let x = vec![1.0, (i as f64).sin(), 0.5];
                if i % 2 == 0 {
                    LabeledSample::positive(x)
                } else {
                    LabeledSample::negative(x)
                }
            })
            .collect();
        let traj = run_stream(&mut s, &data, 10, None).unwrap();
        assert_eq!(s.t, 25);
        assert_eq!(traj.iter().map(|p| p.t).collect::<Vec<_>>(), vec![10, 20]);
        assert!(traj.iter().all(|p| p.alignment.is_none()));
    }

    #[test]
    fn inverse_time_schedule_decays() {
        let mut s = OnlineState::init(3, 1, 0.5, 0.1, 1.0, 0)
            .unwrap()
            .with_schedule(LearningRate::InverseTime { t0: 10.0 });
        assert_eq!(s.current_eta(), 0.1);
        s.t = 10;
        assert_eq!(s.current_eta(), 0.05);
    }
}
