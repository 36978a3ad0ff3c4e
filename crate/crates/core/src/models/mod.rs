//! Generative models and their exact population quantities.

mod graphon;
mod population;
mod sbm;
mod subgaussian;

pub use graphon::{l4_deviation, sample_graphon, GraphonSample, GraphonSpec, Interval, Perturbation};
pub use population::{
    block_mean, population_svd, sbm_approximation, separation_constants, PopulationSvd,
    SeparationConstants,
};
pub use sbm::{planted_partition, sample_sbm, sample_symmetric_sbm, SbmSample};
pub use subgaussian::{sample_subgaussian, SubGaussianSample, SubGaussianSpec};
