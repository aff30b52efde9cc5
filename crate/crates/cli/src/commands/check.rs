//! Seeded property suite over the library, runnable without the test harness.

use cpca::eval::projector_alignment;
use cpca::linalg::{accumulate_moments, frobenius, solve_gev, sym_eig, SymMatrix};
use cpca::minimax::{fixed_point_residuals, offline_increments, offline_minimax_fit, MinimaxConfig};
use cpca::offline::{build_b_beta, fit, snr_ratio, unit};
use cpca::online::{b_beta_estimate, online_w_increment};
use cpca::{ContrastConfig, Label, LabeledSample, Method, MomentPair, OnlineState};
use ndarray::{Array1, Array2, ArrayView1, Axis};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::Serialize;

use super::write_file;
use crate::cli::CheckArgs;
use crate::error::{CliError, CliResult};

#[derive(Debug, Serialize)]
struct Outcome {
    name: &'static str,
    cases: usize,
    /// Largest violation measure seen; passes when `worst <= bound`.
    worst: f64,
    bound: f64,
    pass: bool,
}

type Property = fn(&mut ChaCha8Rng) -> cpca::Result<f64>;

const PROPERTIES: [(&str, f64, Property); 8] = [
    ("endpoint-equivalence", 1e-10, endpoints),
    ("gev-residual", 1e-8, gev_residual),
    ("gev-b-orthonormality", 1e-8, gev_orthonormality),
    ("snr-maximality", 0.0, snr_maximality),
    ("negative-gating", 0.0, negative_gating),
    ("b-estimate-consistency", 0.05, b_estimate),
    ("online-offline-increment", 1e-10, increment_average),
    ("minimax-fixed-point", 1e-6, minimax_fixed_point),
];

pub fn run(args: &CheckArgs) -> CliResult<()> {
    if args.cases == 0 {
        return Err(CliError::Usage("--cases must be at least 1".into()));
    }
    let mut outcomes = Vec::new();
    for (i, (name, bound, property)) in PROPERTIES.iter().enumerate() {
        let mut rng = ChaCha8Rng::seed_from_u64(args.seed);
        rng.set_stream(i as u64);
        let mut worst = 0.0f64;
        for _ in 0..args.cases {
            let v = property(&mut rng)?;
            worst = if v.is_nan() { f64::NAN } else { worst.max(v) };
        }
        let pass = worst <= *bound;
        println!(
            "{} {name} cases={} worst={worst:.3e} bound={bound:.1e}",
            if pass { "PASS" } else { "FAIL" },
            args.cases
        );
        outcomes.push(Outcome {
            name,
            cases: args.cases,
            worst,
            bound: *bound,
            pass,
        });
    }
    let failed = outcomes.iter().filter(|o| !o.pass).count();
    if let Some(path) = &args.out {
        let text = serde_json::to_string_pretty(&outcomes).map_err(|e| CliError::Core(e.into()))?;
        write_file(path, text + "\n")?;
    }
    if failed > 0 {
        return Err(CliError::Domain(format!("{failed} properties failed")));
    }
    println!("all {} properties passed", outcomes.len());
    Ok(())
}

fn normal(rng: &mut ChaCha8Rng) -> f64 {
    rng.sample(StandardNormal)
}

fn gaussian_matrix(rows: usize, cols: usize, rng: &mut ChaCha8Rng) -> Array2<f64> {
    Array2::from_shape_simple_fn((rows, cols), || normal(rng))
}

fn random_spd(d: usize, floor: f64, rng: &mut ChaCha8Rng) -> SymMatrix {
    let g = gaussian_matrix(d, d, rng);
    let mut a = g.dot(&g.t()) / d as f64;
    a.diag_mut().mapv_inplace(|v| v + floor);
    SymMatrix::new((&a + &a.t()) * 0.5).expect("symmetric by construction")
}

/// Anisotropic background; positives add variance along a few random
/// directions.
fn random_samples(d: usize, n_pos: usize, n_neg: usize, rng: &mut ChaCha8Rng) -> Vec<LabeledSample> {
    let mix = gaussian_matrix(d, d, rng);
    let signal = gaussian_matrix(d, 2, rng);
    let mut out = Vec::with_capacity(n_pos + n_neg);
    for i in 0..n_pos + n_neg {
        let z = Array1::from_shape_simple_fn(d, || normal(rng));
        let mut x = mix.dot(&z);
        if i < n_pos {
            let s = Array1::from_shape_simple_fn(2, || 2.0 * normal(rng));
            x += &signal.dot(&s);
            out.push(LabeledSample::positive(x.to_vec()));
        } else {
            out.push(LabeledSample::negative(x.to_vec()));
        }
    }
    out
}

fn endpoints(rng: &mut ChaCha8Rng) -> cpca::Result<f64> {
    let d = rng.gen_range(3..=10);
    let k = rng.gen_range(1..d);
    let m = accumulate_moments(&random_samples(d, 40, 40, rng))?;
    let a = fit(&m, &ContrastConfig::new(Method::Cpca, 0.0, k))?;
    let b = fit(&m, &ContrastConfig::new(Method::CpcaStar, 0.0, k))?;
    let pca = sym_eig(&m.pos, k)?.vectors;
    let worst = [
        projector_alignment(a.basis(), b.basis())?,
        projector_alignment(a.basis(), pca.view())?,
        projector_alignment(b.basis(), pca.view())?,
    ]
    .into_iter()
    .map(|al| 1.0 - al)
    .fold(0.0, f64::max);
    Ok(worst)
}

fn gev_pairs(rng: &mut ChaCha8Rng) -> cpca::Result<(SymMatrix, SymMatrix, Array1<f64>, Array2<f64>)> {
    let d = rng.gen_range(2..=12);
    let k = rng.gen_range(1..=d);
    let g = gaussian_matrix(d, d, rng);
    let a = SymMatrix::new(g.dot(&g.t()) - Array2::<f64>::eye(d))?;
    let b = random_spd(d, 0.1, rng);
    let pairs = solve_gev(&a, &b, k)?;
    Ok((a, b, pairs.values, pairs.vectors))
}

fn gev_residual(rng: &mut ChaCha8Rng) -> cpca::Result<f64> {
    let (a, b, values, vectors) = gev_pairs(rng)?;
    let scale = a.frobenius() + b.frobenius();
    let mut worst = 0.0f64;
    for (j, v) in vectors.axis_iter(Axis(1)).enumerate() {
        let r = a.as_array().dot(&v) - b.as_array().dot(&v) * values[j];
        let rel = r.dot(&r).sqrt() / (scale * v.dot(&v).sqrt());
        worst = worst.max(rel);
    }
    Ok(worst)
}

fn gev_orthonormality(rng: &mut ChaCha8Rng) -> cpca::Result<f64> {
    let (_, b, _, vectors) = gev_pairs(rng)?;
    let gram = vectors.t().dot(b.as_array()).dot(&vectors);
    let k = gram.nrows();
    Ok(frobenius((gram - Array2::<f64>::eye(k)).view()))
}

/// Margin by which the best of 1000 random unit directions reaches the SNR
/// of the top generalized eigenvector; zero when the eigenvector wins.
fn snr_maximality(rng: &mut ChaCha8Rng) -> cpca::Result<f64> {
    let d = rng.gen_range(3..=10);
    let neg = random_spd(d, 0.2, rng);
    let extra = random_spd(d, 0.0, rng);
    let pos = SymMatrix::new(neg.as_array() + extra.as_array())?;
    let m = MomentPair::new(pos, neg, 100, 100)?;
    let top = fit(&m, &ContrastConfig::new(Method::CpcaStar, 1.0, 1))?;
    let best = snr_ratio(unit(top.direction(0)).view(), &m)?;
    let mut gap = f64::NEG_INFINITY;
    for _ in 0..1000 {
        let v = unit(Array1::from_shape_simple_fn(d, || normal(rng)).view());
        gap = gap.max(snr_ratio(v.view(), &m)? - best);
    }
    Ok(if gap < 0.0 { 0.0 } else { gap.max(f64::MIN_POSITIVE) })
}

fn negative_gating(rng: &mut ChaCha8Rng) -> cpca::Result<f64> {
    let d = rng.gen_range(2..=8);
    let k = rng.gen_range(1..d);
    let mut state = OnlineState::init(d, k, rng.gen_range(0.0..1.0), 0.01, 1.0, rng.gen())?;
    let x: Vec<f64> = (0..d).map(|_| 10.0 * normal(rng)).collect();
    let out = state.step(&LabeledSample::negative(x))?;
    let leak = out.z.iter().fold(0.0f64, |a, v| a.max(v.abs()));
    Ok(if out.accepted { leak.max(1.0) } else { leak })
}

/// Relative Frobenius distance between the mean per-step background
/// estimate over an i.i.d. stream and the batch matrix.
fn b_estimate(rng: &mut ChaCha8Rng) -> cpca::Result<f64> {
    const STEPS: usize = 100_000;
    let d = 4;
    let beta = rng.gen_range(0.2..1.0);
    let q = rng.gen_range(0.2..0.8);
    let mix = gaussian_matrix(d, d, rng);
    let mut state = OnlineState::init(d, 1, beta, 0.001, 1.0, 0)?;
    let mut sum = Array2::<f64>::zeros((d, d));
    let mut negatives = Vec::new();
    for _ in 0..STEPS {
        let z = Array1::from_shape_simple_fn(d, || normal(rng));
        let x = mix.dot(&z);
        let label = if rng.gen_bool(q) { Label::Negative } else { Label::Positive };
        state.update_p(label);
        sum += &b_beta_estimate(beta, state.p, x.view(), label);
        if label == Label::Negative {
            negatives.push(LabeledSample::negative(x.to_vec()));
        }
    }
    let mean = sum / STEPS as f64;
    let mut samples = negatives;
    samples.push(LabeledSample::positive(vec![0.0; d]));
    let m = accumulate_moments(&samples)?;
    let batch = build_b_beta(&m, beta)?;
    Ok(frobenius((&mean - batch.as_array()).view()) / batch.frobenius())
}

fn increment_average(rng: &mut ChaCha8Rng) -> cpca::Result<f64> {
    let d = rng.gen_range(3..=8);
    let k = rng.gen_range(1..d);
    let samples = random_samples(d, rng.gen_range(10..40), rng.gen_range(10..40), rng);
    let n = samples.len();
    let w = gaussian_matrix(k, d, rng);
    let g = gaussian_matrix(k, k, rng);
    let mut m = g.dot(&g.t());
    m.diag_mut().mapv_inplace(|v| v + 0.5);
    let state = OnlineState::from_parts(w, m, 0.5, 0, rng.gen_range(0.0..1.0), 0.01, 1.0)?;
    let p = samples.iter().filter(|s| !s.is_positive()).count() as f64 / n as f64;
    let mut avg = Array2::<f64>::zeros((k, d));
    let mut xpos = Array2::<f64>::zeros((d, n));
    for (j, s) in samples.iter().enumerate() {
        let x = ArrayView1::from(&s.x[..]);
        avg += &online_w_increment(&state, x, s.label, p)?;
        if s.is_positive() {
            xpos.column_mut(j).assign(&x);
        }
    }
    avg /= n as f64;
    let b = build_b_beta(&accumulate_moments(&samples)?, state.beta)?;
    let (dw, _) = offline_increments(state.w.view(), state.m.view(), xpos.view(), &b, state.eta, state.tau)?;
    Ok(frobenius((&avg - &dw).view()) / frobenius(dw.view()).max(1.0))
}

fn minimax_fixed_point(rng: &mut ChaCha8Rng) -> cpca::Result<f64> {
    let d = rng.gen_range(3..=5);
    let k = rng.gen_range(1..=2);
    let samples = random_samples(d, 100, 100, rng);
    let raw = accumulate_moments(&samples)?;
    let scale = (raw.pos.trace() / d as f64).sqrt();
    let samples: Vec<LabeledSample> = samples
        .iter()
        .map(|s| LabeledSample::new(s.x.iter().map(|v| v / scale).collect(), s.label))
        .collect();
    let m = accumulate_moments(&samples)?;
    let xpos = Array2::from_shape_fn((d, m.n_pos), |(i, j)| samples[j].x[i]);
    let b = build_b_beta(&m, 0.6)?;
    let config = MinimaxConfig::new(k, 0.05, 0.5, 200_000).seed(rng.gen());
    let f = offline_minimax_fit(xpos.view(), &b, &config)?;
    let res = fixed_point_residuals(&f, xpos.view(), &b)?;
    Ok(if f.converged { res.m_rel.max(res.w_rel) } else { f64::INFINITY })
}
