//! Concrete surrogates.

pub mod alpha;
pub mod custom;
pub mod latent;
pub mod mirror;
pub mod mirror_map;
pub mod mixture;
pub mod newton;
pub mod objective;

pub use alpha::{alpha_em_problem, AlphaEm, AlphaIndex, AlphaMode};
pub use custom::boundary_counterexample;
pub use latent::{
    em_population_problem, em_sample_problem, fisher_information, EmPopulation, EmSample,
    FisherInformation, GaussianLatentModel,
};
pub use mirror::{
    gradient_descent_problem, mirror_descent_problem, mirror_prox_problem, MirrorDescent,
    MirrorProx,
};
pub use mirror_map::MirrorMap;
pub use mixture::{MixtureEm, SymmetricMixture};
pub use newton::{newton_problem, Newton};
pub use objective::Objective;
