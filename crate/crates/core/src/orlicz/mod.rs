//! Orlicz functions, their classification, and Luxemburg norms of weighted samples.

mod function;
mod norm;

pub use function::{
    delta2_probe, embedding_constant, is_delta2, weaker_than, Family, Measure, OrliczFunction,
};
pub use norm::{
    luxemburg_norm, WeightedSample, DEFAULT_TOL, MAX_BRACKET_STEPS, PROBABILITY_MASS_TOL,
};
