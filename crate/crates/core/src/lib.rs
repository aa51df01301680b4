//! Orlicz norms, moduli of continuity, and compactly embedded support spaces
//! for sampled random processes on `[0, 1]`.

pub mod compactness;
pub mod error;
pub mod experiments;
pub mod orlicz;
pub mod paths;
pub mod support;

pub use error::{Error, Result};
