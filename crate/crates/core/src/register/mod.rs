//! Registration of embedded point clouds over the orthogonal ambiguity
//! group: the full Wasserstein alternation, the sliced-Wasserstein methods
//! with a curvilinear search on `O(n)`, the empirical averaged-plan method,
//! and the multi-scale driver.

mod algorithms;
mod curvilinear;
mod multiscale;
mod procrustes;
mod sliced;
mod types;

pub use algorithms::{
    empirical_register, empirical_register_seeded, rswd_register_alternating,
    rswd_register_alternating_seeded, rwd_distance_upper_bound, rwd_register, RegistrationSeed,
};
pub use curvilinear::{
    cayley, curvilinear_search, curvilinear_search_traced, gradient, skew, SearchTrace,
};
pub use multiscale::{
    multiscale_direction_count, multiscale_register, LevelConfig, Method, MultiscaleConfig,
};
pub use procrustes::{energy, procrustes};
pub use sliced::{rswd_eval, sliced_energy, sliced_plans};
pub use types::{
    default_direction_count, signed_permutations, CurvilinearConfig, DirectionSet,
    OrthogonalMatrix, RegistrationResult, ScaleReport, ORTHOGONALITY_TOL,
};
