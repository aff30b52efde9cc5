use ndarray::Array1;
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::data::{LabeledDataset, LabeledSample};
use crate::error::{Error, Result};

/// Parameters of the two-cluster contrastive toy problem.
///
/// The first `d - signal_dims` coordinates carry isotropic background noise
/// of std `noise_std` in both classes. On the last `signal_dims` coordinates
/// negatives are `N(0, background_signal_std^2)`, while positives form two
/// balanced clusters at `+-signal_mean` along the all-ones direction `u`,
/// with std `cluster_std` except along a second direction `v` (orthogonal to
/// `u`) where the clusters are stretched to std `spread_std`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ArtificialParams {
    pub n_pos: usize,
    pub n_neg: usize,
    pub d: usize,
    pub signal_dims: usize,
    pub noise_std: f64,
    pub signal_mean: f64,
    pub cluster_std: f64,
    pub spread_std: f64,
    pub background_signal_std: f64,
}

impl Default for ArtificialParams {
    fn default() -> Self {
        ArtificialParams {
            n_pos: 200,
            n_neg: 200,
            d: 30,
            signal_dims: 10,
            noise_std: 3.0,
            signal_mean: 1.5,
            cluster_std: 0.5,
            spread_std: 1.2,
            background_signal_std: 0.5,
        }
    }
}

pub fn gen_artificial(seed: u64) -> LabeledDataset {
    gen_artificial_with(&ArtificialParams::default(), seed).expect("default parameters are valid")
}

pub fn gen_artificial_with(params: &ArtificialParams, seed: u64) -> Result<LabeledDataset> {
    let p = *params;
    if p.signal_dims < 2 || p.signal_dims >= p.d {
        return Err(Error::InvalidInput(format!(
            "need 2 <= signal_dims < d, got signal_dims={} d={}",
            p.signal_dims, p.d
        )));
    }
    if p.spread_std < p.cluster_std {
        return Err(Error::InvalidInput("spread_std must be >= cluster_std".into()));
    }
    let bad = [p.noise_std, p.signal_mean, p.cluster_std, p.background_signal_std]
        .iter()
        .any(|v| !(v.is_finite() && *v >= 0.0));
    if bad {
        return Err(Error::InvalidInput("scales must be finite and non-negative".into()));
    }

    let m = p.signal_dims;
    let noise_dims = p.d - m;
    let u = Array1::from_elem(m, 1.0 / (m as f64).sqrt());
    let mut v = Array1::from_shape_fn(m, |i| if i % 2 == 0 { 1.0 } else { -1.0 });
    let proj = v.dot(&u);
    v.scaled_add(-proj, &u);
    v /= v.dot(&v).sqrt();
    let stretch = (p.spread_std.powi(2) - p.cluster_std.powi(2)).sqrt();

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let std_normal = Normal::new(0.0, 1.0).unwrap();
    let draw = |rng: &mut ChaCha8Rng, s: f64| s * std_normal.sample(rng);

    let mut cluster: Vec<u32> = (0..p.n_pos).map(|i| (i % 2) as u32).collect();
    cluster.shuffle(&mut rng);

    let mut samples = Vec::with_capacity(p.n_pos + p.n_neg);
    let mut tags = Vec::with_capacity(p.n_pos + p.n_neg);
    for &c in &cluster {
        let mut x = Vec::with_capacity(p.d);
        for _ in 0..noise_dims {
            x.push(draw(&mut rng, p.noise_std));
        }
        let sign = if c == 1 { 1.0 } else { -1.0 };
        let along_v = draw(&mut rng, stretch);
        for i in 0..m {
            let within = draw(&mut rng, p.cluster_std);
            x.push(sign * p.signal_mean * u[i] + along_v * v[i] + within);
        }
        samples.push(LabeledSample::positive(x));
        tags.push(Some(c));
    }
    for _ in 0..p.n_neg {
        let mut x = Vec::with_capacity(p.d);
        for _ in 0..noise_dims {
            x.push(draw(&mut rng, p.noise_std));
        }
        for _ in 0..m {
            x.push(draw(&mut rng, p.background_signal_std));
        }
        samples.push(LabeledSample::negative(x));
        tags.push(None);
    }
    Ok(LabeledDataset::new(samples, tags)?
        .with_meta("generator", Value::from("artificial"))
        .with_meta("seed", Value::from(seed))
        .with_meta("params", serde_json::to_value(p)?))
}
