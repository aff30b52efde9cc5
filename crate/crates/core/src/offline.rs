//! Batch contrastive PCA.
//!
//! * cPCA: top-`k` eigenvectors of `A_alpha = (1 - alpha) C+ - alpha C-`.
//! * cPCA*: top-`k` generalized eigenvectors of `C+ v = lambda B_beta v`
//!   with `B_beta = (1 - beta) I + beta C-`.
//!
//! Both contrast parameters live in `[0, 1]`; at 0 either method is PCA of
//! the positive samples. The original cPCA parametrization `C+ - a C-`
//! with `a >= 0` corresponds to `alpha = a / (1 + a)`.

use std::fs::File;
use std::io::{BufReader, BufWriter, Write};
use std::path::Path;

use ndarray::{Array1, Array2, ArrayView1, ArrayView2, Axis};
use serde::{Deserialize, Serialize};
use serde_json::{Map, Value};

use crate::data::LabeledDataset;
use crate::error::{Error, Result};
use crate::linalg::{
    accumulate_moments_with, solve_gev, sym_eig, LinalgError, MomentPair, SymMatrix,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Method {
    #[serde(rename = "cpca")]
    Cpca,
    #[serde(rename = "cpca-star")]
    CpcaStar,
    /// Subspace learned by the streaming cPCA* network.
    #[serde(rename = "cpca-star-online")]
    CpcaStarOnline,
}

impl Method {
    pub fn name(self) -> &'static str {
        match self {
            Method::Cpca => "cpca",
            Method::CpcaStar => "cpca-star",
            Method::CpcaStarOnline => "cpca-star-online",
        }
    }
}

impl std::fmt::Display for Method {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ContrastConfig {
    pub method: Method,
    /// alpha for cPCA, beta for cPCA*.
    pub contrast: f64,
    pub k: usize,
    /// Subtract per-class means before accumulating moments.
    pub center: bool,
    /// Explicit ridge added to `B_beta` (cPCA* only). Off by default.
    pub ridge: Option<f64>,
}

impl ContrastConfig {
    pub fn new(method: Method, contrast: f64, k: usize) -> Self {
        ContrastConfig {
            method,
            contrast,
            k,
            center: false,
            ridge: None,
        }
    }

    pub fn centered(mut self, center: bool) -> Self {
        self.center = center;
        self
    }

    pub fn with_ridge(mut self, ridge: f64) -> Self {
        self.ridge = Some(ridge);
        self
    }

    pub fn validate(&self, d: usize) -> Result<()> {
        check_contrast(self.contrast)?;
        if self.k == 0 || self.k >= d {
            return Err(Error::InvalidRank { k: self.k, d });
        }
        if let Some(r) = self.ridge {
            if !(r >= 0.0 && r.is_finite()) {
                return Err(Error::InvalidInput(format!("ridge must be >= 0, got {r}")));
            }
        }
        Ok(())
    }
}

fn check_contrast(c: f64) -> Result<()> {
    if (0.0..=1.0).contains(&c) {
        Ok(())
    } else {
        Err(Error::ContrastOutOfRange(c))
    }
}

/// A fitted projection: `k` directions in `R^d` with their eigenvalues.
///
/// cPCA bases are orthonormal; cPCA* bases are `B_beta`-orthonormal; online
/// bases are orthonormal.
#[derive(Debug, Clone, PartialEq)]
pub struct SubspaceModel {
    pub method: Method,
    pub contrast: f64,
    pub k: usize,
    pub d: usize,
    pub values: Vec<f64>,
    /// `d x k`, one direction per column.
    pub basis: Array2<f64>,
    pub center: bool,
    pub meta: Map<String, Value>,
}

#[derive(Serialize, Deserialize)]
struct ModelFile {
    method: Method,
    contrast: f64,
    k: usize,
    d: usize,
    values: Vec<f64>,
    /// column-major: `k` rows of length `d`
    basis: Vec<Vec<f64>>,
    #[serde(default)]
    center: bool,
    #[serde(default)]
    meta: Map<String, Value>,
}

impl SubspaceModel {
    pub fn basis(&self) -> ArrayView2<'_, f64> {
        self.basis.view()
    }

    pub fn direction(&self, j: usize) -> ArrayView1<'_, f64> {
        self.basis.column(j)
    }

    pub fn to_json(&self) -> Result<String> {
        let file = ModelFile {
            method: self.method,
            contrast: self.contrast,
            k: self.k,
            d: self.d,
            values: self.values.clone(),
            basis: self
                .basis
                .axis_iter(Axis(1))
                .map(|c| c.to_vec())
                .collect(),
            center: self.center,
            meta: self.meta.clone(),
        };
        Ok(serde_json::to_string_pretty(&file)?)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let f: ModelFile = serde_json::from_str(text)?;
        if f.basis.len() != f.k || f.values.len() != f.k {
            return Err(Error::Shape(format!(
                "model declares k={} but has {} basis vectors and {} values",
                f.k,
                f.basis.len(),
                f.values.len()
            )));
        }
        if f.basis.iter().any(|c| c.len() != f.d) {
            return Err(Error::Shape(format!(
                "model declares d={} but a basis vector has another length",
                f.d
            )));
        }
        let basis = Array2::from_shape_fn((f.d, f.k), |(i, j)| f.basis[j][i]);
        Ok(SubspaceModel {
            method: f.method,
            contrast: f.contrast,
            k: f.k,
            d: f.d,
            values: f.values,
            basis,
            center: f.center,
            meta: f.meta,
        })
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        let mut w = BufWriter::new(File::create(path).map_err(|e| Error::io(path, e))?);
        w.write_all(self.to_json()?.as_bytes())
            .and_then(|_| w.write_all(b"\n"))
            .and_then(|_| w.flush())
            .map_err(|e| Error::io(path, e))
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let file = File::open(path).map_err(|e| Error::io(path, e))?;
        let f: ModelFile = serde_json::from_reader(BufReader::new(file))
            .map_err(|e| Error::parse(path, e.to_string()))?;
        Self::from_json(&serde_json::to_string(&f)?).map_err(|e| match e {
            Error::Shape(m) => Error::parse(path, m),
            other => other,
        })
    }
}

/// `A_alpha = (1 - alpha) C+ - alpha C-`. May be indefinite.
pub fn build_a_alpha(moments: &MomentPair, alpha: f64) -> Result<SymMatrix> {
    check_contrast(alpha)?;
    Ok(moments.pos.combine(1.0 - alpha, &moments.neg, -alpha)?)
}

/// `B_beta = (1 - beta) I + beta C-`. Positive definite whenever `beta < 1`.
pub fn build_b_beta(moments: &MomentPair, beta: f64) -> Result<SymMatrix> {
    check_contrast(beta)?;
    let eye = SymMatrix::identity(moments.dim())?;
    Ok(eye.combine(1.0 - beta, &moments.neg, beta)?)
}

/// Fits cPCA or cPCA* from precomputed moments.
pub fn fit(moments: &MomentPair, config: &ContrastConfig) -> Result<SubspaceModel> {
    let d = moments.dim();
    config.validate(d)?;
    let mut meta = Map::new();
    meta.insert("n_pos".into(), moments.n_pos.into());
    meta.insert("n_neg".into(), moments.n_neg.into());

    let pairs = match config.method {
        Method::Cpca => sym_eig(&build_a_alpha(moments, config.contrast)?, config.k)?,
        Method::CpcaStar => {
            let mut b = build_b_beta(moments, config.contrast)?;
            if let Some(r) = config.ridge {
                b = b.with_ridge(r);
                meta.insert("ridge".into(), r.into());
            }
            solve_gev(&moments.pos, &b, config.k).map_err(|e| match e {
                LinalgError::NotPositiveDefinite { pivot, .. } => Error::SingularBackground {
                    beta: config.contrast,
                    pivot,
                },
                other => other.into(),
            })?
        }
        Method::CpcaStarOnline => {
            return Err(Error::InvalidInput(
                "the online method is fitted by streaming, not from moments".into(),
            ))
        }
    };
    Ok(SubspaceModel {
        method: config.method,
        contrast: config.contrast,
        k: config.k,
        d,
        values: pairs.values.to_vec(),
        basis: pairs.vectors,
        center: config.center,
        meta,
    })
}

/// Accumulates moments (centered if the config asks for it) and fits.
pub fn fit_dataset(data: &LabeledDataset, config: &ContrastConfig) -> Result<SubspaceModel> {
    let moments = accumulate_moments_with(data.samples(), config.center)?;
    fit(&moments, config)
}

/// `basis' X` for a `d x n` data matrix.
pub fn project(model: &SubspaceModel, x: ArrayView2<f64>) -> Result<Array2<f64>> {
    if x.nrows() != model.d {
        return Err(Error::Shape(format!(
            "model has d={} but data has {} rows",
            model.d,
            x.nrows()
        )));
    }
    Ok(model.basis.t().dot(&x))
}

/// Signal-to-noise ratio `v'(C+ - C-)v / v'C- v` of a unit direction.
pub fn snr_ratio(v: ArrayView1<f64>, moments: &MomentPair) -> Result<f64> {
    if v.len() != moments.dim() {
        return Err(Error::Shape(format!(
            "direction has length {}, moments are {}x{}",
            v.len(),
            moments.dim(),
            moments.dim()
        )));
    }
    let norm = v.dot(&v).sqrt();
    if (norm - 1.0).abs() > 1e-10 {
        return Err(Error::NotUnit(norm));
    }
    let noise = moments.neg.quad_form(v);
    if noise <= 1e-14 * moments.neg.trace() {
        return Err(Error::NoiseFreeDirection(noise));
    }
    Ok((moments.pos.quad_form(v) - noise) / noise)
}

/// Normalizes `v` to unit length (helper for [`snr_ratio`] on generalized
/// eigenvectors, which are `B`-normalized).
pub fn unit(v: ArrayView1<f64>) -> Array1<f64> {
    let n = v.dot(&v).sqrt();
    v.mapv(|x| x / n)
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::array;

    fn diag_moments() -> MomentPair {
        MomentPair::new(
            SymMatrix::from_diag(&[4.0, 1.0]).unwrap(),
            SymMatrix::from_diag(&[1.0, 4.0]).unwrap(),
            10,
            10,
        )
        .unwrap()
    }

    #[test]
    fn a_alpha_endpoints_and_midpoint() {
        let m = diag_moments();
        assert_eq!(build_a_alpha(&m, 0.0).unwrap(), m.pos);
        assert_eq!(build_a_alpha(&m, 1.0).unwrap(), m.neg.scaled(-1.0));
        assert_eq!(
            build_a_alpha(&m, 0.5).unwrap().as_array(),
            &array![[1.5, 0.0], [0.0, -1.5]]
        );
        assert!(matches!(
            build_a_alpha(&m, 1.5),
            Err(Error::ContrastOutOfRange(_))
        ));
    }

    #[test]
    fn b_beta_endpoints_and_midpoint() {
        let m = MomentPair::new(
            SymMatrix::identity(2).unwrap(),
            SymMatrix::from_diag(&[1.0, 3.0]).unwrap(),
            1,
            1,
        )
        .unwrap();
        assert_eq!(build_b_beta(&m, 0.0).unwrap(), SymMatrix::identity(2).unwrap());
        assert_eq!(build_b_beta(&m, 1.0).unwrap(), m.neg);
        assert_eq!(
            build_b_beta(&m, 0.5).unwrap().as_array(),
            &array![[1.0, 0.0], [0.0, 2.0]]
        );
        assert!(build_b_beta(&m, -0.1).is_err());
    }

    #[test]
    fn cpca_star_diagonal_ratio() {
        let model = fit(&diag_moments(), &ContrastConfig::new(Method::CpcaStar, 1.0, 1)).unwrap();
        assert!((model.values[0] - 4.0).abs() < 1e-14);
        assert!((model.basis[[0, 0]] - 1.0).abs() < 1e-14);
        assert!(model.basis[[1, 0]].abs() < 1e-14);
    }

    #[test]
    fn singular_background_at_beta_one() {
        let m = MomentPair::new(
            SymMatrix::identity(3).unwrap(),
            SymMatrix::from_diag(&[1.0, 1.0, 0.0]).unwrap(),
            5,
            2,
        )
        .unwrap();
        let err = fit(&m, &ContrastConfig::new(Method::CpcaStar, 1.0, 1)).unwrap_err();
        assert!(matches!(err, Error::SingularBackground { pivot: 2, .. }));
        assert!(err.to_string().contains("beta < 1"));
        // an explicit ridge makes the problem solvable
        fit(&m, &ContrastConfig::new(Method::CpcaStar, 1.0, 1).with_ridge(1e-3)).unwrap();
        // and any beta < 1 is already regularized
        fit(&m, &ContrastConfig::new(Method::CpcaStar, 0.99, 1)).unwrap();
    }

    #[test]
    fn config_validation() {
        let m = diag_moments();
        assert!(matches!(
            fit(&m, &ContrastConfig::new(Method::Cpca, 0.5, 2)),
            Err(Error::InvalidRank { k: 2, d: 2 })
        ));
        assert!(matches!(
            fit(&m, &ContrastConfig::new(Method::Cpca, 0.5, 0)),
            Err(Error::InvalidRank { .. })
        ));
    }

    fn coordinate_model(cols: &[&[f64]]) -> SubspaceModel {
        let d = cols[0].len();
        SubspaceModel {
            method: Method::Cpca,
            contrast: 0.0,
            k: cols.len(),
            d,
            values: vec![1.0; cols.len()],
            basis: Array2::from_shape_fn((d, cols.len()), |(i, j)| cols[j][i]),
            center: false,
            meta: Map::new(),
        }
    }

    #[test]
    fn projection_examples() {
        let model = coordinate_model(&[&[1.0, 0.0, 0.0], &[0.0, 1.0, 0.0]]);
        let out = project(&model, array![[3.0], [4.0], [5.0]].view()).unwrap();
        assert_eq!(out, array![[3.0], [4.0]]);
        let zero = project(&model, Array2::zeros((3, 4)).view()).unwrap();
        assert!(zero.iter().all(|&v| v == 0.0));
        assert!(project(&model, Array2::zeros((2, 1)).view()).is_err());

        let h = std::f64::consts::FRAC_1_SQRT_2;
        let diag = coordinate_model(&[&[h, h]]);
        let out = project(&diag, array![[1.0], [1.0]].view()).unwrap();
        assert!((out[[0, 0]] - 2f64.sqrt()).abs() < 1e-15);
    }

    #[test]
    fn snr_examples() {
        let m = diag_moments();
        assert_eq!(snr_ratio(array![1.0, 0.0].view(), &m).unwrap(), 3.0);

        let neg = SymMatrix::new(array![[2.0, 0.3], [0.3, 1.0]]).unwrap();
        let prop = MomentPair::new(neg.scaled(2.0), neg, 1, 1).unwrap();
        let v = unit(array![0.3, -0.7].view());
        assert!((snr_ratio(v.view(), &prop).unwrap() - 1.0).abs() < 1e-14);

        assert!(matches!(
            snr_ratio(array![2.0, 0.0].view(), &m),
            Err(Error::NotUnit(_))
        ));
        let flat = MomentPair::new(
            SymMatrix::identity(2).unwrap(),
            SymMatrix::from_diag(&[1.0, 0.0]).unwrap(),
            1,
            1,
        )
        .unwrap();
        assert!(matches!(
            snr_ratio(array![0.0, 1.0].view(), &flat),
            Err(Error::NoiseFreeDirection(_))
        ));
    }

    #[test]
    fn model_json_round_trip_is_column_major() {
        let model = coordinate_model(&[&[0.6, 0.8, 0.0]]);
        let json = model.to_json().unwrap();
        let v: Value = serde_json::from_str(&json).unwrap();
        assert_eq!(v["basis"][0].as_array().unwrap().len(), 3);
        assert_eq!(v["method"], "cpca");
        assert_eq!(SubspaceModel::from_json(&json).unwrap(), model);
    }
}
