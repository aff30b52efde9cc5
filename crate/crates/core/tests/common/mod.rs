#![allow(dead_code)]

use cpca::{LabeledDataset, LabeledSample, SymMatrix};
use nalgebra::{DMatrix, SymmetricEigen};
use ndarray::Array2;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn gaussian(rng: &mut ChaCha8Rng) -> f64 {
    // Box-Muller keeps the helper free of distribution crates
    let u: f64 = rng.gen_range(f64::EPSILON..1.0);
    let v: f64 = rng.gen();
    (-2.0 * u.ln()).sqrt() * (std::f64::consts::TAU * v).cos()
}

pub fn gaussian_matrix(rows: usize, cols: usize, rng: &mut ChaCha8Rng) -> Array2<f64> {
    Array2::from_shape_simple_fn((rows, cols), || gaussian(rng))
}

pub fn random_sym(d: usize, rng: &mut ChaCha8Rng) -> SymMatrix {
    let g = gaussian_matrix(d, d, rng);
    SymMatrix::new(&g + &g.t()).unwrap()
}

/// `G G' / d + floor I`, well conditioned for moderate `floor`.
pub fn random_spd(d: usize, floor: f64, rng: &mut ChaCha8Rng) -> SymMatrix {
    let g = gaussian_matrix(d, d, rng);
    let mut a = g.dot(&g.t()) / d as f64;
    a.diag_mut().mapv_inplace(|v| v + floor);
    SymMatrix::new(a).unwrap()
}

/// Positives with anisotropic scales `1..=d` along random axes, negatives
/// with a different random anisotropy, so spectra are generically simple.
pub fn random_dataset(d: usize, n_pos: usize, n_neg: usize, rng: &mut ChaCha8Rng) -> LabeledDataset {
    let mix_pos = gaussian_matrix(d, d, rng);
    let mix_neg = gaussian_matrix(d, d, rng);
    let mut samples = Vec::with_capacity(n_pos + n_neg);
    for (n, mix, positive) in [(n_pos, &mix_pos, true), (n_neg, &mix_neg, false)] {
        for _ in 0..n {
            let z = ndarray::Array1::from_shape_fn(d, |i| gaussian(rng) * (i + 1) as f64);
            let x = mix.dot(&z).to_vec();
            samples.push(if positive {
                LabeledSample::positive(x)
            } else {
                LabeledSample::negative(x)
            });
        }
    }
    let tags = vec![None; samples.len()];
    LabeledDataset::new(samples, tags).unwrap()
}

pub fn to_na(a: &Array2<f64>) -> DMatrix<f64> {
    DMatrix::from_fn(a.nrows(), a.ncols(), |i, j| a[[i, j]])
}

pub fn from_na(m: &DMatrix<f64>) -> Array2<f64> {
    Array2::from_shape_fn((m.nrows(), m.ncols()), |(i, j)| m[(i, j)])
}

/// Top-`k` generalized eigenvectors of `(A, B)` through the symmetric
/// square root `B^-1/2`, computed by nalgebra. Returns `(values, d x k)`.
pub fn whitening_oracle(a: &SymMatrix, b: &SymMatrix, k: usize) -> (Vec<f64>, Array2<f64>) {
    let bn = SymmetricEigen::new(to_na(b.as_array()));
    let inv_sqrt = &bn.eigenvectors
        * DMatrix::from_diagonal(&bn.eigenvalues.map(|l| 1.0 / l.sqrt()))
        * bn.eigenvectors.transpose();
    let c = &inv_sqrt * to_na(a.as_array()) * &inv_sqrt;
    let c = (&c + c.transpose()) * 0.5;
    let e = SymmetricEigen::new(c);
    let mut order: Vec<usize> = (0..e.eigenvalues.len()).collect();
    order.sort_by(|&i, &j| e.eigenvalues[j].total_cmp(&e.eigenvalues[i]));
    let values = order[..k].iter().map(|&i| e.eigenvalues[i]).collect();
    let u = DMatrix::from_fn(a.dim(), k, |r, c| e.eigenvectors[(r, order[c])]);
    (values, from_na(&(inv_sqrt * u)))
}

/// Plain symmetric eigen-oracle: top-`k` eigenvectors as `d x k`.
pub fn eig_oracle(a: &Array2<f64>, k: usize) -> (Vec<f64>, Array2<f64>) {
    let e = SymmetricEigen::new(to_na(a));
    let mut order: Vec<usize> = (0..e.eigenvalues.len()).collect();
    order.sort_by(|&i, &j| e.eigenvalues[j].total_cmp(&e.eigenvalues[i]));
    let values = order[..k].iter().map(|&i| e.eigenvalues[i]).collect();
    let v = Array2::from_shape_fn((a.nrows(), k), |(r, c)| e.eigenvectors[(r, order[c])]);
    (values, v)
}

pub fn frob(a: &Array2<f64>) -> f64 {
    a.iter().map(|v| v * v).sum::<f64>().sqrt()
}
