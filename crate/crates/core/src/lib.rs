pub mod error;
pub mod experiment;
pub mod io;
pub mod kmeans;
pub mod linalg;
pub mod metrics;
pub mod models;
pub mod pipelines;
pub mod regularization;
pub mod rng;
pub mod serde_extended;
pub mod serde_matrix;
pub mod types;

pub use error::{Error, Result};
pub use types::{BiAdjacency, CenterSeparation, KMeansMatrix, Membership, SbmSpec, TruncatedSvd};
