//! Labeled samples and datasets, plus the JSON-lines dataset format.
//!
//! A dataset file starts with one header object followed by one object per
//! sample:
//!
//! ```text
//! {"format":"cpca-dataset","version":1,"d":2,"n":2,"n_pos":1,"n_neg":1,"meta":{}}
//! {"x":[1.0,2.0],"label":1,"tag":0}
//! {"x":[0.5,0.0],"label":0,"tag":null}
//! ```
//!
//! `label` is the positive indicator (1 positive, 0 negative); `tag` is an
//! optional auxiliary class used only by the evaluation metrics.

use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Read, Write};
use std::path::Path;

use ndarray::Array2;
use serde::{Deserialize, Serialize};
use serde_json::{Map, Value};

use crate::error::{Error, Result};

pub const FORMAT_NAME: &str = "cpca-dataset";
pub const FORMAT_VERSION: u32 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Label {
    Positive,
    Negative,
}

impl Label {
    /// The indicator `delta`: 1 for positive samples, 0 for negative ones.
    pub fn delta(self) -> f64 {
        match self {
            Label::Positive => 1.0,
            Label::Negative => 0.0,
        }
    }

    pub fn from_indicator(v: u8) -> Option<Label> {
        match v {
            1 => Some(Label::Positive),
            0 => Some(Label::Negative),
            _ => None,
        }
    }

    pub fn indicator(self) -> u8 {
        match self {
            Label::Positive => 1,
            Label::Negative => 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LabeledSample {
    pub x: Vec<f64>,
    pub label: Label,
}

impl LabeledSample {
    pub fn new(x: Vec<f64>, label: Label) -> Self {
        LabeledSample { x, label }
    }

    pub fn positive(x: Vec<f64>) -> Self {
        Self::new(x, Label::Positive)
    }

    pub fn negative(x: Vec<f64>) -> Self {
        Self::new(x, Label::Negative)
    }

    pub fn is_positive(&self) -> bool {
        self.label == Label::Positive
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LabeledDataset {
    samples: Vec<LabeledSample>,
    tags: Vec<Option<u32>>,
    d: usize,
    /// Free-form provenance (generator name, parameters, preprocessing).
    pub meta: Map<String, Value>,
}

#[derive(Serialize, Deserialize)]
struct Header {
    format: String,
    version: u32,
    d: usize,
    n: usize,
    n_pos: usize,
    n_neg: usize,
    #[serde(default)]
    meta: Map<String, Value>,
}

#[derive(Serialize, Deserialize)]
struct Line {
    x: Vec<f64>,
    label: u8,
    tag: Option<u32>,
}

impl LabeledDataset {
    /// Validates uniform dimension and finite entries. `tags` must be empty
    /// (no tags) or have one entry per sample.
    pub fn new(samples: Vec<LabeledSample>, tags: Vec<Option<u32>>) -> Result<Self> {
        let d = samples.first().map(|s| s.x.len()).unwrap_or(0);
        for (index, s) in samples.iter().enumerate() {
            if s.x.len() != d {
                return Err(Error::DimensionMismatch {
                    index,
                    expected: d,
                    found: s.x.len(),
                });
            }
            if s.x.iter().any(|v| !v.is_finite()) {
                return Err(Error::InvalidInput(format!(
                    "sample {index} has non-finite entries"
                )));
            }
        }
        let tags = if tags.is_empty() {
            vec![None; samples.len()]
        } else if tags.len() == samples.len() {
            tags
        } else {
            return Err(Error::Shape(format!(
                "{} tags for {} samples",
                tags.len(),
                samples.len()
            )));
        };
        Ok(LabeledDataset {
            samples,
            tags,
            d,
            meta: Map::new(),
        })
    }

    pub fn with_meta(mut self, key: &str, value: Value) -> Self {
        self.meta.insert(key.to_string(), value);
        self
    }

    pub fn dim(&self) -> usize {
        self.d
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn samples(&self) -> &[LabeledSample] {
        &self.samples
    }

    pub fn tags(&self) -> &[Option<u32>] {
        &self.tags
    }

    pub fn n_pos(&self) -> usize {
        self.samples.iter().filter(|s| s.is_positive()).count()
    }

    pub fn n_neg(&self) -> usize {
        self.len() - self.n_pos()
    }

    pub fn has_tags(&self) -> bool {
        self.tags.iter().any(Option::is_some)
    }

    /// Positive samples as the columns of a `d x n_pos` matrix.
    pub fn positive_matrix(&self) -> Array2<f64> {
        let pos: Vec<&LabeledSample> = self.samples.iter().filter(|s| s.is_positive()).collect();
        Array2::from_shape_fn((self.d, pos.len()), |(i, j)| pos[j].x[i])
    }

    /// Tags of the positive samples, in the column order of
    /// [`positive_matrix`](Self::positive_matrix).
    pub fn positive_tags(&self) -> Vec<Option<u32>> {
        self.samples
            .iter()
            .zip(&self.tags)
            .filter(|(s, _)| s.is_positive())
            .map(|(_, t)| *t)
            .collect()
    }

    /// Per-feature root-mean-square over every sample (uncentered).
    pub fn feature_rms(&self) -> Vec<f64> {
        let n = self.len().max(1) as f64;
        let mut ss = vec![0.0; self.d];
        for s in &self.samples {
            for (acc, v) in ss.iter_mut().zip(&s.x) {
                *acc += v * v;
            }
        }
        ss.into_iter().map(|v| (v / n).sqrt()).collect()
    }

    /// Divides each feature by its own factor.
    pub fn scaled_per_feature(&self, factors: &[f64]) -> Result<LabeledDataset> {
        if factors.len() != self.d {
            return Err(Error::Shape(format!(
                "{} scale factors for d={}",
                factors.len(),
                self.d
            )));
        }
        if factors.iter().any(|f| !(f.is_finite() && *f > 0.0)) {
            return Err(Error::InvalidInput(
                "scale factors must be positive (a feature is constant zero?)".into(),
            ));
        }
        let samples = self
            .samples
            .iter()
            .map(|s| {
                let x = s.x.iter().zip(factors).map(|(v, f)| v / f).collect();
                LabeledSample::new(x, s.label)
            })
            .collect();
        Ok(LabeledDataset {
            samples,
            tags: self.tags.clone(),
            d: self.d,
            meta: self.meta.clone(),
        })
    }

    /// Scales every feature to unit root-mean-square (all-zero features are
    /// left alone). Returns the factors so the map can be reapplied.
    pub fn standardized(&self) -> Result<(LabeledDataset, Vec<f64>)> {
        let factors: Vec<f64> = self
            .feature_rms()
            .into_iter()
            .map(|f| if f > 0.0 { f } else { 1.0 })
            .collect();
        Ok((self.scaled_per_feature(&factors)?, factors))
    }

    pub fn write_jsonl<W: Write>(&self, mut w: W) -> Result<()> {
        let header = Header {
            format: FORMAT_NAME.to_string(),
            version: FORMAT_VERSION,
            d: self.d,
            n: self.len(),
            n_pos: self.n_pos(),
            n_neg: self.n_neg(),
            meta: self.meta.clone(),
        };
        let io = |e| Error::io("<dataset>", e);
        serde_json::to_writer(&mut w, &header)?;
        w.write_all(b"\n").map_err(io)?;
        for (s, tag) in self.samples.iter().zip(&self.tags) {
            let line = Line {
                x: s.x.clone(),
                label: s.label.indicator(),
                tag: *tag,
            };
            serde_json::to_writer(&mut w, &line)?;
            w.write_all(b"\n").map_err(io)?;
        }
        w.flush().map_err(io)
    }

    pub fn save_jsonl(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        let file = File::create(path).map_err(|e| Error::io(path, e))?;
        self.write_jsonl(BufWriter::new(file)).map_err(|e| match e {
            Error::Io { source, .. } => Error::io(path, source),
            other => other,
        })
    }

    pub fn read_jsonl<R: Read>(r: R, origin: &Path) -> Result<Self> {
        let mut lines = BufReader::new(r).lines();
        let header_line = lines
            .next()
            .ok_or_else(|| Error::parse(origin, "empty file"))?
            .map_err(|e| Error::io(origin, e))?;
        let header: Header = serde_json::from_str(&header_line)
            .map_err(|e| Error::parse(origin, format!("line 1: bad header: {e}")))?;
        if header.format != FORMAT_NAME {
            return Err(Error::parse(
                origin,
                format!("unknown format {:?}", header.format),
            ));
        }
        let mut samples = Vec::with_capacity(header.n);
        let mut tags = Vec::with_capacity(header.n);
        for (i, line) in lines.enumerate() {
            let line = line.map_err(|e| Error::io(origin, e))?;
            if line.trim().is_empty() {
                continue;
            }
            let parsed: Line = serde_json::from_str(&line)
                .map_err(|e| Error::parse(origin, format!("line {}: {e}", i + 2)))?;
            let label = Label::from_indicator(parsed.label).ok_or_else(|| {
                Error::parse(origin, format!("line {}: label must be 0 or 1", i + 2))
            })?;
            samples.push(LabeledSample::new(parsed.x, label));
            tags.push(parsed.tag);
        }
        if samples.len() != header.n {
            return Err(Error::parse(
                origin,
                format!("header declares {} samples, found {}", header.n, samples.len()),
            ));
        }
        let mut ds = LabeledDataset::new(samples, tags)?;
        if !ds.is_empty() && ds.d != header.d {
            return Err(Error::parse(
                origin,
                format!("header declares d={}, samples have d={}", header.d, ds.d),
            ));
        }
        ds.d = header.d;
        ds.meta = header.meta;
        Ok(ds)
    }

    pub fn load_jsonl(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let file = File::open(path).map_err(|e| Error::io(path, e))?;
        Self::read_jsonl(file, path)
    }
}
