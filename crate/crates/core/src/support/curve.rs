use std::cell::RefCell;
use std::collections::HashMap;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};
use crate::orlicz::{luxemburg_norm, OrliczFunction};
use crate::paths::{grid_steps, PathEnsemble};

/// `δ ↦ ||ω(ξ, δ)||_{Or(Ψ)}` sampled on a decreasing list of `δ`.
///
/// `moments[j] = Σ wᵢ Ψ(ω(ξᵢ, δⱼ))` is the mean (modular) counterpart of
/// `m_values[j]`; without Δ2 the two can converge at different rates. Empty
/// for curves not measured on an ensemble.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MCurve {
    pub psi: OrliczFunction,
    pub grid_n: usize,
    pub deltas: Vec<f64>,
    pub m_values: Vec<f64>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub moments: Vec<f64>,
    pub ensemble_fingerprint: String,
}

impl MCurve {
    /// A curve from given values, e.g. a synthetic `M(δ)` for testing schedules.
    pub fn from_values(
        psi: OrliczFunction,
        grid_n: usize,
        deltas: Vec<f64>,
        m_values: Vec<f64>,
        ensemble_fingerprint: String,
    ) -> Result<Self> {
        check_deltas(&deltas)?;
        if m_values.len() != deltas.len() {
            return Err(invalid("deltas and m_values differ in length"));
        }
        if m_values.iter().any(|m| !(m.is_finite() && *m >= 0.0)) {
            return Err(invalid("m_values must be finite and nonnegative"));
        }
        Ok(Self {
            psi,
            grid_n,
            deltas,
            m_values,
            moments: Vec::new(),
            ensemble_fingerprint,
        })
    }

    /// Tabulates `M` at every grid point `k/N`, `k = N, N-1, ..., 1`.
    pub fn tabulate(
        psi: OrliczFunction,
        grid_n: usize,
        m: impl Fn(f64) -> f64,
        ensemble_fingerprint: String,
    ) -> Result<Self> {
        let deltas: Vec<f64> = (1..=grid_n)
            .rev()
            .map(|k| k as f64 / grid_n as f64)
            .collect();
        let values = deltas.iter().map(|&d| m(d)).collect();
        Self::from_values(psi, grid_n, deltas, values, ensemble_fingerprint)
    }

    /// Whether `m` is nondecreasing in `δ` up to `slack`.
    pub fn is_monotone(&self, slack: f64) -> bool {
        // deltas are decreasing, so m must be (almost) nonincreasing along the list
        self.m_values.windows(2).all(|w| w[1] <= w[0] + slack)
    }
}

fn check_deltas(deltas: &[f64]) -> Result<()> {
    if deltas.is_empty() {
        return Err(invalid("need at least one delta"));
    }
    if let Some(d) = deltas.iter().find(|d| !(**d > 0.0 && **d <= 1.0)) {
        return Err(invalid(format!("deltas must lie in (0, 1], got {d}")));
    }
    if deltas.windows(2).any(|w| w[1] > w[0]) {
        return Err(invalid("deltas must be sorted in decreasing order"));
    }
    Ok(())
}

/// Per-path moduli `ω(ξᵢ, k/N)`, in path order.
pub fn ensemble_moduli(e: &PathEnsemble, steps: usize) -> Vec<f64> {
    e.paths()
        .par_iter()
        .map(|p| p.modulus_steps(steps))
        .collect()
}

/// Orlicz norms of the modulus of continuity across an ensemble.
///
/// For each `δ`, the per-path values `ω(ξᵢ, δ)` with the ensemble weights form
/// a weighted sample whose Luxemburg `Or(Ψ)` norm is `m(δ)`.
pub fn modulus_norm_curve(
    e: &PathEnsemble,
    psi: &OrliczFunction,
    deltas: &[f64],
    tol: f64,
) -> Result<MCurve> {
    check_deltas(deltas)?;
    let mut m_values = Vec::with_capacity(deltas.len());
    let mut moments = Vec::with_capacity(deltas.len());
    for &d in deltas {
        let sample = e.sample_of(ensemble_moduli(e, grid_steps(d, e.n_grid())))?;
        m_values.push(luxemburg_norm(psi, &sample, tol)?);
        moments.push(sample.modular(psi, 1.0));
    }
    Ok(MCurve {
        psi: *psi,
        grid_n: e.n_grid(),
        deltas: deltas.to_vec(),
        m_values,
        moments,
        ensemble_fingerprint: e.fingerprint_hex(),
    })
}

/// Source of `m(k/N)` values for the schedule builder.
pub trait ModulusNormOracle {
    fn grid_n(&self) -> usize;
    /// `||ω(ξ, steps/N)||_{Or(Ψ)}`, nondecreasing in `steps`.
    fn m_at(&self, steps: usize) -> Result<f64>;
}

/// Measures `m` directly on an ensemble, memoizing by grid step.
pub struct EnsembleOracle<'a> {
    ensemble: &'a PathEnsemble,
    psi: OrliczFunction,
    tol: f64,
    cache: RefCell<HashMap<usize, f64>>,
}

impl<'a> EnsembleOracle<'a> {
    pub fn new(ensemble: &'a PathEnsemble, psi: OrliczFunction, tol: f64) -> Self {
        Self {
            ensemble,
            psi,
            tol,
            cache: RefCell::new(HashMap::new()),
        }
    }
}

impl ModulusNormOracle for EnsembleOracle<'_> {
    fn grid_n(&self) -> usize {
        self.ensemble.n_grid()
    }

    fn m_at(&self, steps: usize) -> Result<f64> {
        if let Some(&m) = self.cache.borrow().get(&steps) {
            return Ok(m);
        }
        let sample = self
            .ensemble
            .sample_of(ensemble_moduli(self.ensemble, steps))?;
        let m = luxemburg_norm(&self.psi, &sample, self.tol)?;
        self.cache.borrow_mut().insert(steps, m);
        Ok(m)
    }
}

/// A tabulated curve as an oracle. Off-table points take the value at the
/// nearest tabulated `δ` above them, an upper bound for a monotone curve.
impl ModulusNormOracle for MCurve {
    fn grid_n(&self) -> usize {
        self.grid_n
    }

    fn m_at(&self, steps: usize) -> Result<f64> {
        let delta = steps as f64 / self.grid_n as f64;
        self.deltas
            .iter()
            .zip(&self.m_values)
            .filter(|(d, _)| grid_steps(**d, self.grid_n) >= steps)
            .min_by(|a, b| a.0.total_cmp(b.0))
            .map(|(_, m)| *m)
            .ok_or_else(|| invalid(format!("curve has no entry at or above delta = {delta}")))
    }
}

/// Pointwise maximum of several oracles on a shared grid.
pub struct MaxOracle<O> {
    members: Vec<O>,
}

impl<O: ModulusNormOracle> MaxOracle<O> {
    pub fn new(members: Vec<O>) -> Result<Self> {
        let Some(first) = members.first() else {
            return Err(invalid("empty family"));
        };
        let n = first.grid_n();
        if members.iter().any(|m| m.grid_n() != n) {
            return Err(invalid("family members must share the grid size N"));
        }
        Ok(Self { members })
    }
}

impl<O: ModulusNormOracle> ModulusNormOracle for MaxOracle<O> {
    fn grid_n(&self) -> usize {
        self.members[0].grid_n()
    }

    fn m_at(&self, steps: usize) -> Result<f64> {
        self.members
            .iter()
            .try_fold(0.0f64, |acc, o| Ok(acc.max(o.m_at(steps)?)))
    }
}
