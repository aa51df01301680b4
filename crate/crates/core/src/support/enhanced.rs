use serde::{Deserialize, Serialize};

use super::schedule::{level_weight, Schedule};
use crate::error::{Error, Result};
use crate::paths::{is_grid_representable, Path};

/// Grid steps of every `δ(n)` on a path grid of size `n_grid`.
pub(crate) fn schedule_steps(sch: &Schedule, n_grid: usize) -> Result<Vec<usize>> {
    sch.deltas()
        .iter()
        .map(|&d| {
            if is_grid_representable(d, n_grid) {
                Ok((d * n_grid as f64).round() as usize)
            } else {
                Err(Error::GridIncompatible {
                    delta: d,
                    grid_n: n_grid,
                })
            }
        })
        .collect()
}

/// `aₙ = 2^n ω(g, δ(n))` for `n = 1..=n_max`.
pub fn weighted_moduli(g: &Path, sch: &Schedule) -> Result<Vec<f64>> {
    Ok(schedule_steps(sch, g.n_grid())?
        .into_iter()
        .enumerate()
        .map(|(i, k)| level_weight(i + 1) * g.modulus_steps(k))
        .collect())
}

/// `|g|_∞ + max_n 2^n ω(g, δ(n))`.
pub fn enhanced_norm(g: &Path, sch: &Schedule) -> Result<f64> {
    let a = weighted_moduli(g, sch)?;
    Ok(g.sup_norm() + a.into_iter().fold(0.0, f64::max))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum Membership {
    MemberConsistent,
    Inconclusive,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MembershipReport {
    pub terms: Vec<f64>,
    pub verdict: Membership,
}

/// Trend check of `aₙ = 2^n ω(g, δ(n))` against `aₙ → 0`.
///
/// `MEMBER_CONSISTENT` when the last `max(2, ⌈n_max/2⌉)` terms decrease
/// strictly (a run of exact zeros also counts), `INCONCLUSIVE` otherwise.
/// A finite prefix cannot prove the limit either way.
pub fn membership_diagnostic(g: &Path, sch: &Schedule) -> Result<MembershipReport> {
    let terms = weighted_moduli(g, sch)?;
    let window = terms.len().div_ceil(2).max(2);
    let verdict = if terms.iter().all(|&a| a == 0.0) {
        Membership::MemberConsistent
    } else if terms.len() < window {
        Membership::Inconclusive
    } else {
        let tail = &terms[terms.len() - window..];
        if tail
            .windows(2)
            .all(|w| w[1] < w[0] || (w[0] == 0.0 && w[1] == 0.0))
        {
            Membership::MemberConsistent
        } else {
            Membership::Inconclusive
        }
    };
    Ok(MembershipReport { terms, verdict })
}
