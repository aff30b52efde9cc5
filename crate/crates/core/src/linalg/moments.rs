use ndarray::{Array1, Array2, ArrayView1};
use serde::{Deserialize, Serialize};

use super::SymMatrix;
use crate::data::{Label, LabeledSample};
use crate::error::{Error, Result};

/// Conditional second moments of the positive and negative samples.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MomentPair {
    /// `<x x' | positive>`
    pub pos: SymMatrix,
    /// `<x x' | negative>`
    pub neg: SymMatrix,
    pub n_pos: usize,
    pub n_neg: usize,
    /// Whether per-class means were subtracted before accumulation.
    pub centered: bool,
}

impl MomentPair {
    pub fn new(pos: SymMatrix, neg: SymMatrix, n_pos: usize, n_neg: usize) -> Result<Self> {
        if pos.dim() != neg.dim() {
            return Err(Error::Shape(format!(
                "positive moment is {0}x{0}, negative moment is {1}x{1}",
                pos.dim(),
                neg.dim()
            )));
        }
        Ok(MomentPair {
            pos,
            neg,
            n_pos,
            n_neg,
            centered: false,
        })
    }

    pub fn dim(&self) -> usize {
        self.pos.dim()
    }
}

/// Uncentered conditional moments `C+ = mean(x x' | positive)`,
/// `C- = mean(x x' | negative)`.
pub fn accumulate_moments(samples: &[LabeledSample]) -> Result<MomentPair> {
    accumulate_moments_with(samples, false)
}

/// Like [`accumulate_moments`], optionally subtracting each class mean first.
pub fn accumulate_moments_with(samples: &[LabeledSample], center: bool) -> Result<MomentPair> {
    let d = samples
        .first()
        .map(|s| s.x.len())
        .ok_or(Error::MissingClass {
            positives: 0,
            negatives: 0,
        })?;
    for (index, s) in samples.iter().enumerate() {
        if s.x.len() != d {
            return Err(Error::DimensionMismatch {
                index,
                expected: d,
                found: s.x.len(),
            });
        }
    }
    let n_pos = samples.iter().filter(|s| s.label == Label::Positive).count();
    let n_neg = samples.len() - n_pos;
    if n_pos == 0 || n_neg == 0 {
        return Err(Error::MissingClass {
            positives: n_pos,
            negatives: n_neg,
        });
    }

    let class_mean = |label: Label, n: usize| -> Array1<f64> {
        let mut mean = Array1::zeros(d);
        if center {
            for s in samples.iter().filter(|s| s.label == label) {
                mean += &ArrayView1::from(&s.x[..]);
            }
            mean /= n as f64;
        }
        mean
    };
    let mean_pos = class_mean(Label::Positive, n_pos);
    let mean_neg = class_mean(Label::Negative, n_neg);

    let mut pos = Array2::<f64>::zeros((d, d));
    let mut neg = Array2::<f64>::zeros((d, d));
    let mut buf = Array1::<f64>::zeros(d);
    for s in samples {
        let (acc, mean) = match s.label {
            Label::Positive => (&mut pos, &mean_pos),
            Label::Negative => (&mut neg, &mean_neg),
        };
        buf.assign(&ArrayView1::from(&s.x[..]));
        buf -= mean;
        // lower triangle only; mirrored below
        for i in 0..d {
            let xi = buf[i];
            if xi == 0.0 {
                continue;
            }
            for j in 0..=i {
                acc[[i, j]] += xi * buf[j];
            }
        }
    }
    for acc in [&mut pos, &mut neg] {
        for i in 0..d {
            for j in 0..i {
                acc[[j, i]] = acc[[i, j]];
            }
        }
    }
    pos /= n_pos as f64;
    neg /= n_neg as f64;

    Ok(MomentPair {
        pos: SymMatrix::new(pos)?,
        neg: SymMatrix::new(neg)?,
        n_pos,
        n_neg,
        centered: center,
    })
}
