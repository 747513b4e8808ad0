//! Loss oracles: exact quadratics, stochastic quadratic families sharing one
//! curvature matrix, and a small MLP classifier with step-scoped noise.

mod dataset;
mod mlp;
mod quadratic;
mod spd;

pub use dataset::{read_dataset, two_blobs, write_dataset, Sample};
pub use mlp::{Activation, MlpConfig, MlpProblem, NoiseDraw, NoiseKind};
pub use quadratic::{
    family_mean_argmin, FamilyArgmin, QuadraticProblem, StochasticQuadraticFamily,
};
pub use spd::make_random_spd;
