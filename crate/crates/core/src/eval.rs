//! Separation and alignment metrics, and the contrast-parameter sweep.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;

use ndarray::{Array1, Array2, ArrayView1, ArrayView2, Axis};
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::data::LabeledDataset;
use crate::error::{Error, Result};
use crate::linalg::{
    accumulate_moments_with, cholesky_factor, orthonormalize_columns, spd_solve, LinalgError,
};
use crate::offline::{fit, project, ContrastConfig, Method};

/// Normalized projector overlap `tr(P_a P_b) / k` for two `d x k` bases.
/// Bases need not be orthonormal; they are orthonormalized first.
pub fn projector_alignment(a: ArrayView2<f64>, b: ArrayView2<f64>) -> Result<f64> {
    if a.dim() != b.dim() {
        return Err(Error::Shape(format!(
            "bases have shapes {:?} and {:?}",
            a.dim(),
            b.dim()
        )));
    }
    let k = a.ncols();
    if k == 0 {
        return Err(Error::Shape("empty basis".into()));
    }
    let qa = orthonormalize_columns(a)?;
    let qb = orthonormalize_columns(b)?;
    let overlap = qa.t().dot(&qb);
    let tr = overlap.iter().map(|v| v * v).sum::<f64>();
    Ok((tr / k as f64).clamp(0.0, 1.0))
}

/// Sample mean and (n-1)-normalized covariance of the columns of `x`.
fn gaussian_fit(x: ArrayView2<f64>) -> (Array1<f64>, Array2<f64>) {
    let n = x.ncols();
    let mean = x.mean_axis(Axis(1)).expect("at least one column");
    let centered = &x - &mean.view().insert_axis(Axis(1));
    let cov = centered.dot(&centered.t()) / (n.max(2) - 1) as f64;
    (mean, cov)
}

fn ridge(cov: &mut Array2<f64>) {
    let k = cov.nrows();
    let eps = 1e-9 * cov.diag().sum() / k as f64;
    cov.diag_mut().mapv_inplace(|v| v + eps);
}

fn log_det_spd(a: ArrayView2<f64>) -> std::result::Result<f64, LinalgError> {
    let l = cholesky_factor(a)?;
    Ok(2.0 * l.diag().iter().map(|v| v.ln()).sum::<f64>())
}

/// Closed-form `KL(a||b) + KL(b||a)` between two Gaussians.
pub fn symmetric_kl_gaussian(
    mean_a: &Array1<f64>,
    cov_a: &Array2<f64>,
    mean_b: &Array1<f64>,
    cov_b: &Array2<f64>,
) -> Result<f64> {
    let k = mean_a.len();
    let diff = (mean_a - mean_b).insert_axis(Axis(1));
    // log-determinant terms cancel in the symmetric sum; factoring still
    // validates definiteness
    log_det_spd(cov_a.view())?;
    log_det_spd(cov_b.view())?;
    let inv_b_a = spd_solve(cov_b.view(), cov_a.view())?;
    let inv_a_b = spd_solve(cov_a.view(), cov_b.view())?;
    let inv_a_d = spd_solve(cov_a.view(), diff.view())?;
    let inv_b_d = spd_solve(cov_b.view(), diff.view())?;
    let mahal = diff.t().dot(&inv_a_d)[[0, 0]] + diff.t().dot(&inv_b_d)[[0, 0]];
    let value = 0.5 * (inv_b_a.diag().sum() + inv_a_b.diag().sum()) - k as f64 + 0.5 * mahal;
    Ok(value.max(0.0))
}

/// Symmetrized KL divergence between Gaussian fits of two projection clouds
/// (`k x n_a` and `k x n_b`).
pub fn symmetric_kl(proj_a: ArrayView2<f64>, proj_b: ArrayView2<f64>) -> Result<f64> {
    let k = proj_a.nrows();
    if proj_b.nrows() != k {
        return Err(Error::Shape(format!(
            "projection clouds have {} and {} rows",
            k,
            proj_b.nrows()
        )));
    }
    for (name, n) in [("a", proj_a.ncols()), ("b", proj_b.ncols())] {
        if n < k + 2 {
            return Err(Error::InvalidInput(format!(
                "cloud {name} has {n} points, need at least k+2 = {}",
                k + 2
            )));
        }
    }
    let (mean_a, mut cov_a) = gaussian_fit(proj_a);
    let (mean_b, mut cov_b) = gaussian_fit(proj_b);
    ridge(&mut cov_a);
    ridge(&mut cov_b);
    symmetric_kl_gaussian(&mean_a, &cov_a, &mean_b, &cov_b)
}

/// Two-class linear discriminant: predicts `true` when
/// `w.x - mid + offset > 0`.
#[derive(Debug, Clone, PartialEq)]
pub struct LdaRule {
    pub w: Array1<f64>,
    pub mid: f64,
    pub offset: f64,
}

impl LdaRule {
    /// Shared-covariance LDA with ridge `1e-9 trace/k` and a log prior-ratio
    /// offset.
    pub fn fit(projections: ArrayView2<f64>, tags: &[bool]) -> Result<LdaRule> {
        let (k, n) = projections.dim();
        if tags.len() != n {
            return Err(Error::Shape(format!("{} tags for {n} points", tags.len())));
        }
        let n1 = tags.iter().filter(|&&t| t).count();
        let n0 = n - n1;
        if n0 == 0 || n1 == 0 {
            return Err(Error::InvalidInput(
                "LDA needs points from both tag classes".into(),
            ));
        }
        let idx0: Vec<usize> = (0..n).filter(|&i| !tags[i]).collect();
        let idx1: Vec<usize> = (0..n).filter(|&i| tags[i]).collect();
        let x0 = projections.select(Axis(1), &idx0);
        let x1 = projections.select(Axis(1), &idx1);
        let mu0 = x0.mean_axis(Axis(1)).unwrap();
        let mu1 = x1.mean_axis(Axis(1)).unwrap();

        let c0 = &x0 - &mu0.view().insert_axis(Axis(1));
        let c1 = &x1 - &mu1.view().insert_axis(Axis(1));
        let mut pooled = (c0.dot(&c0.t()) + c1.dot(&c1.t())) / n as f64;
        let mut eps = 1e-9 * pooled.diag().sum() / k as f64;
        if !(eps > 0.0) {
            // zero within-class scatter: fall back to the scale of the data
            let total = projections.iter().map(|v| v * v).sum::<f64>() / n as f64;
            eps = 1e-9 * total.max(f64::MIN_POSITIVE) / k as f64;
        }
        pooled.diag_mut().mapv_inplace(|v| v + eps);

        let diff = (&mu1 - &mu0).insert_axis(Axis(1));
        let w = spd_solve(pooled.view(), diff.view())?.remove_axis(Axis(1));
        let mid = 0.5 * w.dot(&(&mu0 + &mu1));
        let offset = (n1 as f64 / n0 as f64).ln();
        Ok(LdaRule { w, mid, offset })
    }

    pub fn predict(&self, x: ArrayView1<f64>) -> bool {
        self.w.dot(&x) - self.mid + self.offset > 0.0
    }

    /// Fraction of columns classified correctly.
    pub fn accuracy(&self, projections: ArrayView2<f64>, tags: &[bool]) -> f64 {
        let correct = projections
            .axis_iter(Axis(1))
            .zip(tags)
            .filter(|(x, &t)| self.predict(x.view()) == t)
            .count();
        correct as f64 / tags.len().max(1) as f64
    }
}

/// Training-set accuracy of two-class linear discriminant analysis on
/// `k x n` projections with binary tags.
pub fn lda_accuracy(projections: ArrayView2<f64>, tags: &[bool]) -> Result<f64> {
    let rule = LdaRule::fit(projections, tags)?;
    Ok(rule.accuracy(projections, tags))
}

/// LDA accuracy on a random held-out fraction of the points, with the rule
/// fit on the rest.
pub fn lda_holdout_accuracy(
    projections: ArrayView2<f64>,
    tags: &[bool],
    test_fraction: f64,
    seed: u64,
) -> Result<f64> {
    let n = projections.ncols();
    if tags.len() != n {
        return Err(Error::Shape(format!("{} tags for {n} points", tags.len())));
    }
    if !(test_fraction > 0.0 && test_fraction < 1.0) {
        return Err(Error::InvalidInput(format!(
            "held-out fraction must be in (0, 1), got {test_fraction}"
        )));
    }
    let mut order: Vec<usize> = (0..n).collect();
    order.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
    let n_test = ((n as f64 * test_fraction).round() as usize).clamp(1, n.saturating_sub(2));
    let (test, train) = order.split_at(n_test);
    let pick = |idx: &[usize]| {
        (
            projections.select(Axis(1), idx),
            idx.iter().map(|&i| tags[i]).collect::<Vec<_>>(),
        )
    };
    let (xtr, ttr) = pick(train);
    let (xte, tte) = pick(test);
    Ok(LdaRule::fit(xtr.view(), &ttr)?.accuracy(xte.view(), &tte))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Metric {
    #[serde(rename = "sym_kl")]
    SymKl,
    #[serde(rename = "lda")]
    Lda,
}

impl Metric {
    pub fn name(self) -> &'static str {
        match self {
            Metric::SymKl => "sym_kl",
            Metric::Lda => "lda",
        }
    }
}

/// Scores of one metric across a grid of contrast values.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub metric_name: String,
    pub method: Method,
    pub k: usize,
    pub grid: Vec<f64>,
    /// `None` where the fit was not available (singular `B_1`).
    pub scores: Vec<Option<f64>>,
    pub threshold: Option<f64>,
    pub good_range_width: Option<f64>,
    /// How the metric was estimated, e.g. the KL density model.
    pub estimator: String,
}

impl EvalReport {
    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let report: EvalReport = serde_json::from_str(text)?;
        if report.grid.len() != report.scores.len() {
            return Err(Error::Shape(format!(
                "{} grid points but {} scores",
                report.grid.len(),
                report.scores.len()
            )));
        }
        Ok(report)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_json(&text).map_err(|e| Error::parse(path, e.to_string()))
    }

    pub fn save_json(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        std::fs::write(path, self.to_json()? + "\n").map_err(|e| Error::io(path, e))
    }

    /// Two columns, `contrast,score`; unavailable scores are left empty.
    pub fn write_csv<W: Write>(&self, w: W) -> Result<()> {
        let mut out = csv::Writer::from_writer(w);
        let err = |e: csv::Error| Error::InvalidInput(e.to_string());
        out.write_record(["contrast", "score"]).map_err(err)?;
        for (c, s) in self.grid.iter().zip(&self.scores) {
            let score = s.map(|v| v.to_string()).unwrap_or_default();
            out.write_record([c.to_string(), score]).map_err(err)?;
        }
        out.flush().map_err(|e| Error::io("<csv>", e))
    }

    pub fn save_csv(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        let file = File::create(path).map_err(|e| Error::io(path, e))?;
        self.write_csv(BufWriter::new(file))
    }

    pub fn max_score(&self) -> Option<f64> {
        self.scores.iter().flatten().copied().reduce(f64::max)
    }
}

/// Fraction of grid points whose score exceeds `threshold`; also stored in
/// the report.
pub fn good_range_width(report: &mut EvalReport, threshold: f64) -> f64 {
    let width = if report.grid.is_empty() {
        0.0
    } else {
        report
            .scores
            .iter()
            .filter(|s| matches!(s, Some(v) if *v > threshold))
            .count() as f64
            / report.grid.len() as f64
    };
    report.threshold = Some(threshold);
    report.good_range_width = Some(width);
    width
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct SweepOptions {
    pub center: bool,
}

/// Positive samples that carry a tag, as a `d x n` matrix, with the binary
/// class of each (`tag != 0`).
pub fn tagged_positives(data: &LabeledDataset) -> Result<(Array2<f64>, Vec<bool>)> {
    let tagged: Vec<(usize, bool)> = data
        .positive_tags()
        .iter()
        .enumerate()
        .filter_map(|(i, t)| t.map(|t| (i, t != 0)))
        .collect();
    if tagged.is_empty() {
        return Err(Error::InvalidInput(
            "dataset has no tagged positive samples".into(),
        ));
    }
    let cols: Vec<usize> = tagged.iter().map(|(i, _)| *i).collect();
    let tags: Vec<bool> = tagged.iter().map(|(_, t)| *t).collect();
    Ok((data.positive_matrix().select(Axis(1), &cols), tags))
}

/// Fits the method at every grid value, projects the positive samples and
/// scores how well their tags separate.
pub fn sweep(
    data: &LabeledDataset,
    method: Method,
    grid: &[f64],
    k: usize,
    metric: Metric,
    options: SweepOptions,
) -> Result<EvalReport> {
    if grid.is_empty() {
        return Err(Error::InvalidInput("empty contrast grid".into()));
    }
    if grid.iter().any(|c| !(0.0..=1.0).contains(c)) {
        return Err(Error::ContrastOutOfRange(
            *grid.iter().find(|c| !(0.0..=1.0).contains(*c)).unwrap(),
        ));
    }
    if grid.windows(2).any(|w| w[0] >= w[1]) {
        return Err(Error::InvalidInput("grid must be strictly increasing".into()));
    }
    if method == Method::CpcaStarOnline {
        return Err(Error::InvalidInput(
            "sweeps run the batch methods only".into(),
        ));
    }
    let moments = accumulate_moments_with(data.samples(), options.center)?;
    let (xpos, tags) = tagged_positives(data)?;

    let scores = grid
        .par_iter()
        .map(|&c| {
            let config = ContrastConfig::new(method, c, k).centered(options.center);
            let model = match fit(&moments, &config) {
                Ok(m) => m,
                Err(Error::SingularBackground { .. }) => return Ok(None),
                Err(e) => return Err(e),
            };
            let proj = project(&model, xpos.view())?;
            score(proj.view(), &tags, metric).map(Some)
        })
        .collect::<Result<Vec<_>>>()?;

    Ok(EvalReport {
        metric_name: metric.name().to_string(),
        method,
        k,
        grid: grid.to_vec(),
        scores,
        threshold: None,
        good_range_width: None,
        estimator: match metric {
            Metric::SymKl => "gaussian-fit closed form".into(),
            Metric::Lda => "two-class LDA, training accuracy".into(),
        },
    })
}

/// Scores a `k x n` projection cloud against binary tags.
pub fn score(proj: ArrayView2<f64>, tags: &[bool], metric: Metric) -> Result<f64> {
    match metric {
        Metric::Lda => lda_accuracy(proj, tags),
        Metric::SymKl => {
            let a: Vec<usize> = (0..tags.len()).filter(|&i| !tags[i]).collect();
            let b: Vec<usize> = (0..tags.len()).filter(|&i| tags[i]).collect();
            symmetric_kl(proj.select(Axis(1), &a).view(), proj.select(Axis(1), &b).view())
        }
    }
}

/// `n` evenly spaced points from `start` to `end` inclusive.
pub fn linear_grid(start: f64, end: f64, n: usize) -> Vec<f64> {
    match n {
        0 => vec![],
        1 => vec![start],
        _ => (0..n)
            .map(|i| {
                if i == n - 1 {
                    end
                } else {
                    start + (end - start) * i as f64 / (n - 1) as f64
                }
            })
            .collect(),
    }
}
