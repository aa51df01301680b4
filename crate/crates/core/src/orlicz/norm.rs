use serde::{Deserialize, Serialize};

use super::{Measure, OrliczFunction};
use crate::error::{invalid, Error, Result};

/// Mass tolerance for treating a sample as a probability measure.
pub const PROBABILITY_MASS_TOL: f64 = 1e-12;

/// Default relative tolerance for [`luxemburg_norm`].
pub const DEFAULT_TOL: f64 = 1e-10;

/// Cap on bracket doublings/halvings before giving up with [`Error::Overflow`].
pub const MAX_BRACKET_STEPS: usize = 200;

/// A finite scalar sample with nonnegative weights: an empirical measure.
///
/// Total mass 1 (within [`PROBABILITY_MASS_TOL`]) is a probability sample;
/// any other positive finite mass stands in for a σ-finite measure.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct WeightedSample {
    values: Vec<f64>,
    weights: Vec<f64>,
    total_mass: f64,
}

impl WeightedSample {
    pub fn new(values: Vec<f64>, weights: Vec<f64>) -> Result<Self> {
        if values.len() != weights.len() {
            return Err(invalid(format!(
                "{} values but {} weights",
                values.len(),
                weights.len()
            )));
        }
        if values.is_empty() {
            return Err(invalid("empty sample"));
        }
        if let Some(i) = weights.iter().position(|w| !(w.is_finite() && *w >= 0.0)) {
            return Err(invalid(format!(
                "weight {i} is {} (must be finite and >= 0)",
                weights[i]
            )));
        }
        let total_mass: f64 = weights.iter().sum();
        if !(total_mass > 0.0 && total_mass.is_finite()) {
            return Err(invalid(format!(
                "total mass must be positive, got {total_mass}"
            )));
        }
        Ok(Self {
            values,
            weights,
            total_mass,
        })
    }

    /// Equal weights `1/n`.
    pub fn uniform(values: Vec<f64>) -> Result<Self> {
        let n = values.len();
        Self::new(values, vec![1.0 / n as f64; n])
    }

    /// Like [`WeightedSample::new`] but insists on total mass 1.
    pub fn probability(values: Vec<f64>, weights: Vec<f64>) -> Result<Self> {
        let s = Self::new(values, weights)?;
        if s.measure() != Measure::Probability {
            return Err(invalid(format!(
                "probability sample needs total mass 1, got {}",
                s.total_mass
            )));
        }
        Ok(s)
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn total_mass(&self) -> f64 {
        self.total_mass
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn measure(&self) -> Measure {
        if (self.total_mass - 1.0).abs() <= PROBABILITY_MASS_TOL {
            Measure::Probability
        } else {
            Measure::SigmaFinite
        }
    }

    /// `a · η` with the same weights.
    pub fn scaled(&self, a: f64) -> Self {
        Self {
            values: self.values.iter().map(|v| a * v).collect(),
            ..self.clone()
        }
    }

    /// Weighted moment `Σ wᵢ Φ(|ηᵢ|/λ)`, summed in index order.
    ///
    /// Atoms of zero weight are skipped so that `0 · ∞` never occurs.
    pub fn modular(&self, phi: &OrliczFunction, lambda: f64) -> f64 {
        self.values
            .iter()
            .zip(&self.weights)
            .filter(|(_, &w)| w > 0.0)
            .map(|(&v, &w)| w * phi.evaluate(v / lambda))
            .sum()
    }
}

/// Luxemburg norm `inf{λ > 0 : Σ wᵢ Φ(|ηᵢ|/λ) <= 1}`.
///
/// The modular `G(λ)` is continuous and strictly decreasing wherever some
/// weighted value is nonzero, so the norm is the unique root of `G(λ) = 1`.
/// The root is bracketed by doubling (or halving) from `max |ηᵢ|` and refined
/// by bisection until the bracket is within `tol` relative; the upper end of
/// the final bracket is returned, so `G(norm) <= 1` always holds.
pub fn luxemburg_norm(phi: &OrliczFunction, sample: &WeightedSample, tol: f64) -> Result<f64> {
    if !(tol > 0.0 && tol.is_finite()) {
        return Err(invalid(format!("tolerance must be positive, got {tol}")));
    }
    if let Some(i) = sample.values.iter().position(|v| !v.is_finite()) {
        return Err(Error::NonFinite { row: i, column: 0 });
    }
    let max_abs = sample
        .values
        .iter()
        .zip(&sample.weights)
        .filter(|(_, &w)| w > 0.0)
        .map(|(v, _)| v.abs())
        .fold(0.0, f64::max);
    if max_abs == 0.0 {
        return Ok(0.0);
    }

    let g = |lambda: f64| sample.modular(phi, lambda);
    let (mut lo, mut hi);
    if g(max_abs) <= 1.0 {
        hi = max_abs;
        lo = hi;
        let mut steps = 0;
        loop {
            lo *= 0.5;
            if g(lo) > 1.0 {
                break;
            }
            hi = lo;
            steps += 1;
            if steps >= MAX_BRACKET_STEPS || lo == 0.0 {
                return Err(Error::Overflow {
                    iterations: MAX_BRACKET_STEPS,
                });
            }
        }
    } else {
        lo = max_abs;
        hi = lo;
        let mut steps = 0;
        loop {
            hi *= 2.0;
            if g(hi) <= 1.0 {
                break;
            }
            lo = hi;
            steps += 1;
            if steps >= MAX_BRACKET_STEPS || hi.is_infinite() {
                return Err(Error::Overflow {
                    iterations: MAX_BRACKET_STEPS,
                });
            }
        }
    }

    // invariant: g(lo) > 1 >= g(hi)
    while hi - lo > tol * hi {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if g(mid) <= 1.0 {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    Ok(hi)
}
