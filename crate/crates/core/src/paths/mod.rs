//! Grid samples of continuous functions on `[0, 1]`, ensembles of them, the
//! modulus of continuity, generators and ensemble files.

mod ensemble;
mod generate;
mod io;
mod path;

pub(crate) use ensemble::Fnv1a;
pub use ensemble::{Generator, Manifest, PathEnsemble};
pub use generate::{
    covariance_factor, derive_seed, gen_brownian, gen_gaussian, gen_theta, path_rng, splitmix64,
    theta_coordinate, theta_path, theta_tau, theta_value, Covariance,
};
pub use io::{load_ensemble, manifest_path, save_ensemble, BINARY_MAGIC};
pub use path::{grid_steps, is_grid_representable, Path};
