//! Acceptance run: one PASS/FAIL line per criterion, non-zero exit on any
//! failure. Run with `cargo test --test acceptance`.

use std::fs;
use std::path::Path;
use std::process::{Command, Output};
use std::time::{Duration, Instant};

use cpca::eval::EvalReport;
use cpca::linalg::{accumulate_moments, solve_gev, SymMatrix};
use cpca::minimax::{fixed_point_residuals, offline_minimax_fit, MinimaxConfig};
use cpca::offline::{build_b_beta, fit, snr_ratio, unit};
use cpca::online::b_beta_estimate;
use cpca::{ContrastConfig, Label, LabeledSample, Method, OnlineState};
use nalgebra::{DMatrix, SymmetricEigen};
use ndarray::{array, Array1, Array2};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use tempfile::TempDir;

struct Verdict {
    pass: bool,
    detail: String,
}

type Criterion = (&'static str, Duration, fn() -> Verdict);

fn verdict(pass: bool, detail: String) -> Verdict {
    Verdict { pass, detail }
}

fn main() {
    let criteria: [Criterion; 9] = [
        ("1 endpoint equivalence", Duration::from_secs(5), endpoint_equivalence),
        ("2 generalized eigenproblem", Duration::from_secs(10), gev_correctness),
        ("3 SNR maximality", Duration::from_secs(5), snr_maximality),
        ("4 online hand-check", Duration::from_secs(1), online_hand_check),
        ("5 online convergence", Duration::from_secs(120), online_convergence),
        ("6 contrast robustness", Duration::from_secs(60), contrast_robustness),
        ("7 offline minimax", Duration::from_secs(30), offline_minimax),
        ("8 background estimator", Duration::from_secs(10), background_estimator),
        ("9 CLI end to end", Duration::from_secs(120), cli_end_to_end),
    ];
    let mut failures = 0;
    for (name, limit, check) in criteria {
        let start = Instant::now();
        let v = check();
        let elapsed = start.elapsed();
        let pass = v.pass && elapsed < limit;
        if !pass {
            failures += 1;
        }
        println!(
            "{} {name}: {} [{:.2}s, limit {}s]",
            if pass { "PASS" } else { "FAIL" },
            v.detail,
            elapsed.as_secs_f64(),
            limit.as_secs()
        );
    }
    if failures > 0 {
        println!("{failures} of 9 criteria failed");
        std::process::exit(1);
    }
    println!("all 9 criteria passed");
}

fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
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
    SymMatrix::new((&a + &a.t()) * 0.5).unwrap()
}

/// Positives and negatives with independent anisotropic mixing.
fn random_samples(d: usize, n_pos: usize, n_neg: usize, rng: &mut ChaCha8Rng) -> Vec<LabeledSample> {
    let mix_pos = gaussian_matrix(d, d, rng);
    let mix_neg = gaussian_matrix(d, d, rng);
    let mut out = Vec::with_capacity(n_pos + n_neg);
    for (n, mix, positive) in [(n_pos, &mix_pos, true), (n_neg, &mix_neg, false)] {
        for _ in 0..n {
            let z = Array1::from_shape_fn(d, |i| normal(rng) * (i + 1) as f64);
            let x = mix.dot(&z).to_vec();
            out.push(LabeledSample::new(x, if positive { Label::Positive } else { Label::Negative }));
        }
    }
    out
}

fn to_na(a: &Array2<f64>) -> DMatrix<f64> {
    DMatrix::from_fn(a.nrows(), a.ncols(), |i, j| a[[i, j]])
}

/// Eigenvectors of a symmetric matrix for the `k` largest eigenvalues.
fn top_eigvecs(a: &DMatrix<f64>, k: usize) -> DMatrix<f64> {
    let eig = SymmetricEigen::new(a.clone());
    let mut order: Vec<usize> = (0..a.nrows()).collect();
    order.sort_by(|&i, &j| eig.eigenvalues[j].total_cmp(&eig.eigenvalues[i]));
    DMatrix::from_fn(a.nrows(), k, |i, j| eig.eigenvectors[(i, order[j])])
}

/// `tr(Pa Pb) / k` from orthonormalized bases.
fn alignment(a: &DMatrix<f64>, b: &DMatrix<f64>) -> f64 {
    let qa = a.clone().qr().q();
    let qb = b.clone().qr().q();
    (qa.transpose() * qb).norm_squared() / a.ncols() as f64
}

fn endpoint_equivalence() -> Verdict {
    let mut r = rng(1);
    let mut worst = 0.0f64;
    for _ in 0..50 {
        let d = r.gen_range(3..=10);
        let k = r.gen_range(1..d);
        let m = accumulate_moments(&random_samples(d, 60, 60, &mut r)).unwrap();
        let a = fit(&m, &ContrastConfig::new(Method::Cpca, 0.0, k)).unwrap();
        let b = fit(&m, &ContrastConfig::new(Method::CpcaStar, 0.0, k)).unwrap();
        let pca = top_eigvecs(&to_na(m.pos.as_array()), k);
        let (a, b) = (to_na(&a.basis), to_na(&b.basis));
        for al in [alignment(&a, &b), alignment(&a, &pca), alignment(&b, &pca)] {
            worst = worst.max(1.0 - al);
        }
    }
    verdict(worst <= 1e-10, format!("50 datasets, worst 1 - alignment {worst:.2e} (bound 1e-10)"))
}

fn gev_correctness() -> Verdict {
    let mut r = rng(2);
    let (mut res, mut orth, mut mis) = (0.0f64, 0.0f64, 0.0f64);
    for _ in 0..100 {
        let d = r.gen_range(2..=12);
        let k = r.gen_range(1..=d);
        let a = random_spd(d, 0.05, &mut r);
        let b = random_spd(d, 0.1, &mut r);
        let pairs = solve_gev(&a, &b, k).unwrap();
        let (na, nb, v) = (to_na(a.as_array()), to_na(b.as_array()), to_na(&pairs.vectors));
        for j in 0..k {
            let col = v.column(j);
            let resid = &na * col - (&nb * col) * pairs.values[j];
            res = res.max(resid.norm() / ((na.norm() + pairs.values[j].abs() * nb.norm()) * col.norm()));
        }
        let gram = v.transpose() * &nb * &v;
        orth = orth.max((gram - DMatrix::identity(k, k)).norm());

        let eig = SymmetricEigen::new(nb.clone());
        let inv_sqrt = &eig.eigenvectors
            * DMatrix::from_diagonal(&eig.eigenvalues.map(|l| 1.0 / l.sqrt()))
            * eig.eigenvectors.transpose();
        let s = &inv_sqrt * &na * &inv_sqrt;
        let s = (&s + s.transpose()) * 0.5;
        let oracle = &inv_sqrt * top_eigvecs(&s, k);
        mis = mis.max(1.0 - alignment(&oracle, &v));
    }
    let pass = res <= 1e-8 && orth <= 1e-8 && mis <= 1e-6;
    verdict(
        pass,
        format!("100 instances, residual {res:.2e}, B-orthonormality {orth:.2e}, 1 - alignment to whitening oracle {mis:.2e}"),
    )
}

fn snr_maximality() -> Verdict {
    let mut r = rng(3);
    let mut wins = 0;
    let mut smallest_margin = f64::INFINITY;
    for _ in 0..20 {
        let d = r.gen_range(3..=10);
        let m = accumulate_moments(&random_samples(d, 200, 200, &mut r)).unwrap();
        let top = fit(&m, &ContrastConfig::new(Method::CpcaStar, 1.0, 1)).unwrap();
        let best = snr_ratio(unit(top.direction(0)).view(), &m).unwrap();
        let mut rival = f64::NEG_INFINITY;
        for _ in 0..1000 {
            let v = unit(Array1::from_shape_simple_fn(d, || normal(&mut r)).view());
            rival = rival.max(snr_ratio(v.view(), &m).unwrap());
        }
        if best > rival {
            wins += 1;
        }
        smallest_margin = smallest_margin.min(best - rival);
    }
    verdict(wins == 20, format!("{wins}/20 instances beat 1000 random directions, smallest margin {smallest_margin:.3e}"))
}

fn online_hand_check() -> Verdict {
    // W = [1 0], M = [1], t = 1, beta = 0.5, eta = 0.1, tau = 1, x = (1, 1)
    let state = |p: f64| OnlineState::from_parts(array![[1.0, 0.0]], array![[1.0]], p, 1, 0.5, 0.1, 1.0).unwrap();
    let close = |a: f64, b: f64| (a - b).abs() <= 1e-15;
    let mut errors = Vec::new();

    // positive: p 1 -> 0.5, z = 1, W += 0.2 (1 - 0) x' - 0.1 W, M += 0.1 (1 - 1)
    let mut s = state(1.0);
    let out = s.step(&LabeledSample::positive(vec![1.0, 1.0])).unwrap();
    let got = [s.p, out.z[0], s.w[[0, 0]], s.w[[0, 1]], s.m[[0, 0]]];
    let want = [0.5, 1.0, 1.1, 0.2, 1.0];
    if !got.iter().zip(&want).all(|(g, w)| close(*g, *w)) {
        errors.push(format!("positive step {got:?} != {want:?}"));
    }

    // negative: p 0 -> 0.5, z = 0, W += 0.2 (0 - 0.5/0.5 * 1) x' - 0.1 W, M += 0.1 (0 - 1)
    let mut s = state(0.0);
    let out = s.step(&LabeledSample::negative(vec![1.0, 1.0])).unwrap();
    let got = [s.p, out.z[0], s.w[[0, 0]], s.w[[0, 1]], s.m[[0, 0]]];
    let want = [0.5, 0.0, 0.7, -0.2, 0.9];
    if !got.iter().zip(&want).all(|(g, w)| close(*g, *w)) {
        errors.push(format!("negative step {got:?} != {want:?}"));
    }
    if errors.is_empty() {
        verdict(true, "positive and negative steps match to 1e-15".into())
    } else {
        verdict(false, errors.join("; "))
    }
}

fn cpca_bin(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_cpca"))
        .args(args)
        .current_dir(dir)
        .env_remove("CPCA_OUT_DIR")
        .output()
        .expect("binary runs")
}

fn run_ok(dir: &Path, args: &[&str]) -> Result<String, String> {
    let o = cpca_bin(dir, args);
    if o.status.success() {
        Ok(String::from_utf8_lossy(&o.stdout).into_owned())
    } else {
        Err(format!(
            "{args:?} exited {:?}: {}",
            o.status.code(),
            String::from_utf8_lossy(&o.stderr).trim()
        ))
    }
}

fn online_convergence() -> Verdict {
    let dir = TempDir::new().unwrap();
    let d = dir.path();
    let run = || -> Result<Verdict, String> {
        run_ok(d, &["gen", "artificial", "--seed", "0", "-o", "art.jsonl"])?;
        run_ok(
            d,
            &[
                "stream", "art.jsonl", "--normalize", "--beta", "0.9", "-k", "2", "--eta", "0.003", "--tau", "1",
                "--epochs", "250", "--seeds", "5", "--record-every", "10", "-o", "traj.csv",
            ],
        )?;
        let text = fs::read_to_string(d.join("traj.csv")).map_err(|e| e.to_string())?;
        let rows: Vec<Vec<f64>> = text
            .lines()
            .skip(1)
            .map(|l| l.split(',').map(|v| v.parse().unwrap()).collect())
            .collect();
        let q = rows.len() / 4;
        let final_mean = rows.last().ok_or("empty trajectory")?[6];
        let mut trend_ok = true;
        let mut gains = Vec::new();
        for seed in 1..=5 {
            let first: f64 = rows[..q].iter().map(|r| r[seed]).sum::<f64>() / q as f64;
            let last: f64 = rows[rows.len() - q..].iter().map(|r| r[seed]).sum::<f64>() / q as f64;
            trend_ok &= last > first;
            gains.push(format!("{:+.4}", last - first));
        }
        Ok(verdict(
            final_mean >= 0.9 && trend_ok,
            format!(
                "final mean alignment {final_mean:.4} over 5 seeds (bound 0.9), last-minus-first quartile [{}] after {} samples",
                gains.join(", "),
                rows.last().unwrap()[0]
            ),
        ))
    };
    run().unwrap_or_else(|e| verdict(false, e))
}

/// Longest run of consecutive grid cells with score above `threshold`, as a
/// fraction of the grid.
fn longest_interval(report: &EvalReport, threshold: f64) -> f64 {
    let (mut best, mut cur) = (0usize, 0usize);
    for s in &report.scores {
        if matches!(s, Some(v) if *v > threshold) {
            cur += 1;
            best = best.max(cur);
        } else {
            cur = 0;
        }
    }
    best as f64 / report.grid.len() as f64
}

fn contrast_robustness() -> Verdict {
    let dir = TempDir::new().unwrap();
    let d = dir.path();
    let run = || -> Result<Verdict, String> {
        run_ok(d, &["gen", "artificial", "--seed", "0", "-o", "art.jsonl"])?;
        let mut reports = Vec::new();
        for method in ["cpca", "cpca-star"] {
            for metric in ["lda", "sym-kl"] {
                let stem = format!("{method}-{metric}");
                run_ok(
                    d,
                    &["sweep", "art.jsonl", "--method", method, "--metric", metric, "--grid", "0:1:51", "-k", "2", "-o", &stem],
                )?;
                reports.push(EvalReport::load(d.join(format!("{stem}.json"))).map_err(|e| e.to_string())?);
            }
        }
        let lda = |r: &EvalReport| r.good_range_width.unwrap();
        let kl = |r: &EvalReport| longest_interval(r, 0.5 * r.max_score().unwrap());
        let (lda_c, lda_s) = (lda(&reports[0]), lda(&reports[2]));
        let (kl_c, kl_s) = (kl(&reports[1]), kl(&reports[3]));
        Ok(verdict(
            lda_s >= lda_c && kl_s >= kl_c,
            format!(
                "LDA>0.9 width cPCA* {lda_s:.3} vs cPCA {lda_c:.3}; KL>50%-of-max interval cPCA* {kl_s:.3} vs cPCA {kl_c:.3}"
            ),
        ))
    };
    run().unwrap_or_else(|e| verdict(false, e))
}

fn offline_minimax() -> Verdict {
    let mut r = rng(7);
    let (mut worst_al, mut worst_fp) = (1.0f64, 0.0f64);
    let mut unconverged = 0;
    for i in 0..20 {
        let d = r.gen_range(3..=10);
        let k = r.gen_range(1..=3.min(d - 1));
        let beta = r.gen_range(0.3..0.9);
        let raw = random_samples(d, 300, 300, &mut r);
        let scale = (accumulate_moments(&raw).unwrap().pos.trace() / d as f64).sqrt();
        let samples: Vec<LabeledSample> = raw
            .iter()
            .map(|s| LabeledSample::new(s.x.iter().map(|v| v / scale).collect(), s.label))
            .collect();
        let m = accumulate_moments(&samples).unwrap();
        let xpos = Array2::from_shape_fn((d, m.n_pos), |(a, j)| samples[j].x[a]);
        let b = build_b_beta(&m, beta).unwrap();
        let config = MinimaxConfig::new(k, 0.05, 0.5, 200_000).seed(i);
        let f = offline_minimax_fit(xpos.view(), &b, &config).unwrap();
        if !f.converged {
            unconverged += 1;
        }
        let reference = fit(&m, &ContrastConfig::new(Method::CpcaStar, beta, k)).unwrap();
        worst_al = worst_al.min(alignment(&to_na(&f.basis().unwrap()), &to_na(&reference.basis)));
        let res = fixed_point_residuals(&f, xpos.view(), &b).unwrap();
        worst_fp = worst_fp.max(res.m_rel.max(res.w_rel));
    }
    verdict(
        worst_al >= 0.99 && worst_fp <= 1e-6,
        format!(
            "20 instances (tau 0.5), worst alignment {worst_al:.6} (bound 0.99), worst fixed-point residual {worst_fp:.2e} (bound 1e-6), {unconverged} hit the iteration cap"
        ),
    )
}

fn background_estimator() -> Verdict {
    const STEPS: usize = 100_000;
    let d = 5;
    let beta = 0.7;
    let mut r = rng(8);
    let mix = gaussian_matrix(d, d, &mut r);
    let mut state = OnlineState::init(d, 2, beta, 0.001, 1.0, 0).unwrap();
    let mut sum = Array2::<f64>::zeros((d, d));
    // population background second moment is mix mix'
    for _ in 0..STEPS {
        let x = mix.dot(&Array1::from_shape_simple_fn(d, || normal(&mut r)));
        let label = if r.gen_bool(0.4) { Label::Negative } else { Label::Positive };
        state.update_p(label);
        sum += &b_beta_estimate(beta, state.p, x.view(), label);
    }
    let mean = sum / STEPS as f64;
    let batch = mix.dot(&mix.t()) * beta + Array2::<f64>::eye(d) * (1.0 - beta);
    let rel = to_na(&(&mean - &batch)).norm() / to_na(&batch).norm();
    verdict(rel <= 0.05, format!("relative Frobenius distance {rel:.4} after 1e5 steps (bound 0.05)"))
}

fn cli_end_to_end() -> Verdict {
    let pipeline: Vec<Vec<&str>> = vec![
        vec!["gen", "artificial", "--seed", "5", "-o", "data.jsonl"],
        vec!["gen", "synthetic-digits", "--count", "60", "--seed", "5", "-o", "digits.jsonl"],
        vec!["fit", "data.jsonl", "--normalize", "--contrast", "0.9", "-k", "2", "-o", "model.json", "--projections", "proj.csv"],
        vec!["fit", "digits.jsonl", "--method", "cpca", "--contrast", "0.5", "-k", "2", "-o", "digits-model.json"],
        vec!["stream", "data.jsonl", "--normalize", "--epochs", "5", "--seeds", "3", "--record-every", "100", "--oracle", "model.json", "-o", "stream.csv", "--state-dir", "states"],
        vec!["sweep", "data.jsonl", "--grid", "0:1:21", "-o", "sweep"],
        vec!["plot", "proj.csv", "--kind", "scatter", "-o", "scatter.svg"],
        vec!["plot", "sweep.json", "--kind", "curve", "-o", "curve.svg"],
        vec!["plot", "sweep.json", "--kind", "barcode", "-o", "barcode.svg"],
        vec!["plot", "stream.csv", "--kind", "curve", "-o", "stream.svg"],
        vec!["eval", "model.json", "--data", "data.jsonl", "--json"],
        vec!["check", "--seed", "3", "--cases", "10", "-o", "check.json"],
    ];
    let run_all = |dir: &Path| -> Result<Vec<(String, Vec<u8>)>, String> {
        let mut outputs = Vec::new();
        for args in &pipeline {
            outputs.push((format!("stdout of {}", args.join(" ")), run_ok(dir, args)?.into_bytes()));
        }
        let mut files = Vec::new();
        collect_files(dir, dir, &mut files);
        files.sort();
        for rel in files {
            let bytes = fs::read(dir.join(&rel)).map_err(|e| e.to_string())?;
            outputs.push((rel, bytes));
        }
        Ok(outputs)
    };
    let (a, b) = (TempDir::new().unwrap(), TempDir::new().unwrap());
    let result = run_all(a.path()).and_then(|x| run_all(b.path()).map(|y| (x, y)));
    match result {
        Err(e) => verdict(false, e),
        Ok((x, y)) => {
            let differing: Vec<&str> = x
                .iter()
                .zip(&y)
                .filter(|(p, q)| p != q)
                .map(|(p, _)| p.0.as_str())
                .collect();
            let same_listing = x.len() == y.len();
            verdict(
                same_listing && differing.is_empty(),
                format!(
                    "{} commands exited 0 twice; {} outputs compared, {} differ{}",
                    pipeline.len(),
                    x.len(),
                    differing.len(),
                    if differing.is_empty() { String::new() } else { format!(": {differing:?}") }
                ),
            )
        }
    }
}

fn collect_files(root: &Path, dir: &Path, out: &mut Vec<String>) {
    for entry in fs::read_dir(dir).unwrap().flatten() {
        let path = entry.path();
        if path.is_dir() {
            collect_files(root, &path, out);
        } else {
            out.push(path.strip_prefix(root).unwrap().to_string_lossy().into_owned());
        }
    }
}
