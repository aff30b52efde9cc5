//! Contrastive principal component analysis.
//!
//! Two batch formulations are provided: cPCA, the top eigen-subspace of
//! `(1 - alpha) C+ - alpha C-`, and cPCA*, the top generalized eigen-subspace
//! of `C+ v = lambda ((1 - beta) I + beta C-) v`. cPCA* can also be learned
//! by an offline gradient descent-ascent solver ([`minimax`]) or by a
//! streaming network with local learning rules ([`online`]).
//!
//! ```
//! use cpca::data::LabeledSample;
//! use cpca::linalg::accumulate_moments;
//! use cpca::offline::{fit, ContrastConfig, Method};
//!
//! let samples = vec![
//!     LabeledSample::positive(vec![2.0, 0.1, 0.0]),
//!     LabeledSample::positive(vec![-2.0, 0.0, 0.2]),
//!     LabeledSample::negative(vec![0.1, 1.0, 0.0]),
//!     LabeledSample::negative(vec![0.0, 0.1, 1.0]),
//!     LabeledSample::negative(vec![0.2, -1.0, 0.5]),
//! ];
//! let moments = accumulate_moments(&samples).unwrap();
//! let model = fit(&moments, &ContrastConfig::new(Method::CpcaStar, 0.5, 1)).unwrap();
//! assert!(model.basis[[0, 0]].abs() > 0.9);
//! ```

pub mod data;
pub mod datasets;
pub mod error;
pub mod eval;
pub mod linalg;
pub mod minimax;
pub mod offline;
pub mod online;

pub use data::{Label, LabeledDataset, LabeledSample};
pub use error::{Error, Result};
pub use linalg::{MomentPair, SymMatrix};
pub use offline::{ContrastConfig, Method, SubspaceModel};
pub use online::OnlineState;
