//! Digits superimposed on textured backgrounds.
//!
//! Positives are `clip(background + digit, 0, 2)` with both parts scaled to
//! `[0, 1]`; negatives are plain backgrounds. Tags record which of the two
//! digit classes was drawn.

use std::path::Path;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};
use serde_json::Value;

use super::idx;
use super::pgm::{read_pgm, GrayImage};
use crate::data::{LabeledDataset, LabeledSample};
use crate::error::{Error, Result};

/// Side length of MNIST digits.
pub const DIGIT_SIDE: usize = 28;

fn superimpose(background: &[f64], digit: &[f64]) -> Vec<f64> {
    background
        .iter()
        .zip(digit)
        .map(|(b, d)| (b + d).clamp(0.0, 2.0))
        .collect()
}

fn random_crop(img: &GrayImage, side: usize, rng: &mut ChaCha8Rng) -> Vec<f64> {
    let r0 = rng.gen_range(0..=img.height - side);
    let c0 = rng.gen_range(0..=img.width - side);
    let mut out = Vec::with_capacity(side * side);
    for r in 0..side {
        for c in 0..side {
            out.push(img.get(r0 + r, c0 + c));
        }
    }
    out
}

/// Builds the noisy-digits dataset from in-memory parts: `digits` are
/// 28x28 images scaled to `[0, 1]` with their class (0 or 1), and
/// `backgrounds` are images at least 28x28.
pub fn noisy_digits_from(
    digits: &[(Vec<f64>, u32)],
    backgrounds: &[GrayImage],
    count: usize,
    seed: u64,
) -> Result<LabeledDataset> {
    let side = DIGIT_SIDE;
    let usable: Vec<&GrayImage> = backgrounds
        .iter()
        .filter(|b| b.width >= side && b.height >= side)
        .collect();
    if usable.is_empty() {
        return Err(Error::InvalidInput(
            "no background image is at least 28x28".into(),
        ));
    }
    let by_class: [Vec<&Vec<f64>>; 2] = [0, 1].map(|c| {
        digits
            .iter()
            .filter(|(img, l)| *l == c && img.len() == side * side)
            .map(|(img, _)| img)
            .collect()
    });
    if by_class.iter().any(Vec::is_empty) {
        return Err(Error::InvalidInput(
            "need 28x28 images of both digit 0 and digit 1".into(),
        ));
    }

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut samples = Vec::with_capacity(2 * count);
    let mut tags = Vec::with_capacity(2 * count);
    for _ in 0..count {
        let class = rng.gen_range(0..2u32);
        let digit = by_class[class as usize].choose(&mut rng).unwrap();
        let bg = random_crop(usable.choose(&mut rng).unwrap(), side, &mut rng);
        samples.push(LabeledSample::positive(superimpose(&bg, digit)));
        tags.push(Some(class));
    }
    for _ in 0..count {
        let bg = random_crop(usable.choose(&mut rng).unwrap(), side, &mut rng);
        samples.push(LabeledSample::negative(bg));
        tags.push(None);
    }
    Ok(LabeledDataset::new(samples, tags)?
        .with_meta("generator", Value::from("noisy-digits"))
        .with_meta("seed", Value::from(seed))
        .with_meta("superposition", Value::from("add then clip to [0,2]")))
}

/// Loads MNIST digits 0 and 1 from IDX files and every PGM image in
/// `background_dir`, then superimposes `count` digits on random crops and
/// adds `count` plain crops as negatives.
pub fn gen_noisy_digits(
    mnist_images: impl AsRef<Path>,
    mnist_labels: impl AsRef<Path>,
    background_dir: impl AsRef<Path>,
    count: usize,
    seed: u64,
) -> Result<LabeledDataset> {
    let images = idx::read_images(&mnist_images)?;
    let labels = idx::read_labels(&mnist_labels)?;
    if images.rows != DIGIT_SIDE || images.cols != DIGIT_SIDE {
        return Err(Error::parse(
            mnist_images.as_ref(),
            format!("expected 28x28 images, got {}x{}", images.rows, images.cols),
        ));
    }
    let digits: Vec<(Vec<f64>, u32)> = labels
        .iter()
        .enumerate()
        .take(images.len())
        .filter(|(_, &l)| l <= 1)
        .map(|(i, &l)| {
            let img = images.image(i).iter().map(|&p| p as f64 / 255.0).collect();
            (img, l as u32)
        })
        .collect();

    let dir = background_dir.as_ref();
    let mut paths: Vec<_> = std::fs::read_dir(dir)
        .map_err(|e| Error::io(dir, e))?
        .filter_map(|entry| entry.ok().map(|e| e.path()))
        .filter(|p| {
            p.extension()
                .and_then(|e| e.to_str())
                .map(|e| e.eq_ignore_ascii_case("pgm"))
                .unwrap_or(false)
        })
        .collect();
    paths.sort();
    let backgrounds = paths.iter().map(read_pgm).collect::<Result<Vec<_>>>()?;
    noisy_digits_from(&digits, &backgrounds, count, seed)
}

/// Knobs of the procedural digits substitute.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SyntheticDigitParams {
    /// Image side length.
    pub side: usize,
    /// Peak intensity of a glyph.
    pub glyph_amplitude: f64,
    /// Glyph shift range in pixels (each axis, uniform in `[-j, j]`).
    pub jitter: i32,
    /// Std of the background field around its 0.5 mean.
    pub background_std: f64,
    /// Gaussian smoothing length of the background field, in pixels.
    pub smoothing: f64,
}

impl Default for SyntheticDigitParams {
    fn default() -> Self {
        SyntheticDigitParams {
            side: 16,
            glyph_amplitude: 0.5,
            jitter: 1,
            background_std: 0.2,
            smoothing: 2.5,
        }
    }
}

/// Ring (class 0) or vertical bar (class 1) centered in a `side x side`
/// image and shifted by `(dr, dc)`.
fn glyph(class: u32, side: usize, dr: i32, dc: i32) -> Vec<f64> {
    let center = (side as f64 - 1.0) / 2.0;
    let radius = side as f64 * 0.28;
    let half_len = side as f64 * 0.3;
    let mut img = vec![0.0; side * side];
    for r in 0..side {
        for c in 0..side {
            let y = r as f64 - center - dr as f64;
            let x = c as f64 - center - dc as f64;
            let on = match class {
                0 => ((x * x + y * y).sqrt() - radius).abs() < 0.9,
                _ => x.abs() < 1.0 && y.abs() <= half_len,
            };
            if on {
                img[r * side + c] = 1.0;
            }
        }
    }
    img
}

/// Smoothed white noise, rescaled to `0.5 + std * N(0,1)` per pixel and
/// clipped to `[0, 1]`.
fn background_field(p: &SyntheticDigitParams, rng: &mut ChaCha8Rng) -> Vec<f64> {
    let side = p.side;
    let pad = (3.0 * p.smoothing).ceil() as usize;
    let big = side + 2 * pad;
    let white: Vec<f64> = (0..big * big).map(|_| StandardNormal.sample(rng)).collect();
    let kernel: Vec<f64> = (0..=2 * pad)
        .map(|i| {
            let x = i as f64 - pad as f64;
            (-0.5 * x * x / (p.smoothing * p.smoothing)).exp()
        })
        .collect();
    // separable kernel, unit L2 norm in 2-D so the field has unit variance
    let norm: f64 = kernel.iter().map(|k| k * k).sum::<f64>();
    let scale = 1.0 / norm;
    let mut rows = vec![0.0; big * side];
    for r in 0..big {
        for c in 0..side {
            rows[r * side + c] = (0..kernel.len())
                .map(|i| kernel[i] * white[r * big + c + i])
                .sum();
        }
    }
    let mut out = Vec::with_capacity(side * side);
    for r in 0..side {
        for c in 0..side {
            let v: f64 = (0..kernel.len())
                .map(|i| kernel[i] * rows[(r + i) * side + c])
                .sum();
            out.push((0.5 + p.background_std * v * scale).clamp(0.0, 1.0));
        }
    }
    out
}

pub fn gen_synthetic_digits(count: usize, seed: u64) -> LabeledDataset {
    gen_synthetic_digits_with(&SyntheticDigitParams::default(), count, seed)
        .expect("default parameters are valid")
}

pub fn gen_synthetic_digits_with(
    params: &SyntheticDigitParams,
    count: usize,
    seed: u64,
) -> Result<LabeledDataset> {
    let p = *params;
    if p.side < 8 || p.smoothing <= 0.0 || p.jitter < 0 || p.jitter as usize >= p.side / 4 {
        return Err(Error::InvalidInput(format!(
            "invalid synthetic digit parameters {p:?}"
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut samples = Vec::with_capacity(2 * count);
    let mut tags = Vec::with_capacity(2 * count);
    for _ in 0..count {
        let class = rng.gen_range(0..2u32);
        let dr = rng.gen_range(-p.jitter..=p.jitter);
        let dc = rng.gen_range(-p.jitter..=p.jitter);
        let gain = p.glyph_amplitude * rng.gen_range(0.8..1.2);
        let digit: Vec<f64> = glyph(class, p.side, dr, dc).iter().map(|v| v * gain).collect();
        let bg = background_field(&p, &mut rng);
        samples.push(LabeledSample::positive(superimpose(&bg, &digit)));
        tags.push(Some(class));
    }
    for _ in 0..count {
        samples.push(LabeledSample::negative(background_field(&p, &mut rng)));
        tags.push(None);
    }
    Ok(LabeledDataset::new(samples, tags)?
        .with_meta("generator", Value::from("synthetic-digits"))
        .with_meta("seed", Value::from(seed))
        .with_meta("params", serde_json::to_value(p)?)
        .with_meta("superposition", Value::from("add then clip to [0,2]")))
}
