//! Analogy-based prediction and explanation over tabular data.
//!
//! Instances are feature vectors in `[0, 1]^d`. A quadruple `a : b :: c : d` is
//! graded by an analogical-proportion [`Kernel`]; classification transfers the
//! labels of the strongest training triplets `(a, b, c)` to a query `d`, and
//! preference prediction transfers stored preferences `a > b` to a query pair.
//! The same retrieved analogies double as explanations, next to a
//! nearest-neighbor baseline.

pub mod analysis;
pub mod cli;
pub mod data;
pub mod error;
pub mod explain;
pub mod kernels;
pub mod predict;
pub mod search;

pub use data::{LabeledDataset, NormalizationParams, PreferenceDataset, SynthSpec, Table};
pub use error::{Error, Result};
pub use kernels::Kernel;
pub use search::{Direction, ScoredPair, ScoredTriplet, TripletIndex, TripletQuery};
