//! Equicontinuity and covering diagnostics for the unit ball of a support space.

use rand::Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::paths::{path_rng, Generator, Manifest, Path, PathEnsemble};
use crate::support::{enhanced_norm, Schedule};

/// Oscillation bound `4 · 2^-n` over gaps `<= δ(n)` for `enhanced_norm <= 1`.
pub fn equicontinuity_bound(sch: &Schedule, n: usize) -> Result<f64> {
    if n == 0 || n > sch.n_max() {
        return Err(invalid(format!("level {n} outside 1..={}", sch.n_max())));
    }
    Ok(4.0 * 2f64.powi(-(n as i32)))
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CoveringReport {
    pub epsilon: f64,
    pub n_star: usize,
    pub anchor_count: usize,
    pub level_count: usize,
    /// `anchor_count · ln(level_count)`, an upper bound on the log ε-covering number.
    pub log_bound: f64,
    #[serde(default)]
    pub empirical_net_size: Option<usize>,
}

/// Anchors-times-levels upper bound on the sup-norm ε-covering number of the
/// unit ball.
///
/// `n_star` is the first level with oscillation bound `4 · 2^-n <= ε/2`;
/// functions are pinned at `⌈1/δ(n_star)⌉ + 1` anchors and quantized to
/// `2⌈2/ε⌉ + 1` levels spaced `ε/2` across `[-1, 1]`.
pub fn covering_bound(sch: &Schedule, epsilon: f64) -> Result<CoveringReport> {
    if !(epsilon > 0.0 && epsilon.is_finite()) {
        return Err(invalid(format!("epsilon must be positive, got {epsilon}")));
    }
    // smallest n with 4 * 2^-n <= eps/2, i.e. 2^n >= 8/eps
    let needed = (8.0 / epsilon).log2().ceil().max(1.0) as usize;
    let needed = (needed.saturating_sub(1)..=needed + 1)
        .find(|&n| n >= 1 && 4.0 * 2f64.powi(-(n as i32)) <= epsilon / 2.0)
        .unwrap_or(needed);
    if needed > sch.n_max() {
        return Err(Error::ResolutionInsufficient {
            epsilon,
            needed,
            n_max: sch.n_max(),
        });
    }
    let steps = (sch.delta(needed) * sch.grid_n() as f64).round() as usize;
    let anchor_count = sch.grid_n().div_ceil(steps) + 1;
    let level_count = 2 * (2.0 / epsilon).ceil() as usize + 1;
    Ok(CoveringReport {
        epsilon,
        n_star: needed,
        anchor_count,
        level_count,
        log_bound: anchor_count as f64 * (level_count as f64).ln(),
        empirical_net_size: None,
    })
}

/// Random test points on the unit sphere of the support norm.
///
/// Each path mixes a piecewise-linear curve through 2 to 33 uniform anchor
/// values in `[-1, 1]` with a Brownian component (random mixing weight), and is
/// divided by its own enhanced norm. Heuristic; not a uniform distribution.
pub fn sample_unit_ball(sch: &Schedule, count: usize, master_seed: u64) -> Result<PathEnsemble> {
    if count == 0 {
        return Err(invalid("count must be >= 1"));
    }
    let n = sch.grid_n();
    let paths: Vec<Path> = (0..count)
        .into_par_iter()
        .map(|i| {
            let mut rng = path_rng(master_seed, i);
            loop {
                let anchors: usize = rng.random_range(2..=33);
                let knots: Vec<f64> = (0..anchors).map(|_| rng.random_range(-1.0..=1.0)).collect();
                let rough: f64 = rng.random();
                let sd = (n as f64).recip().sqrt();
                let mut walk = 0.0;
                let values: Vec<f64> = (0..=n)
                    .map(|j| {
                        if j > 0 {
                            let z: f64 = rng.sample(StandardNormal);
                            walk += sd * z;
                        }
                        let x = j as f64 / n as f64 * (anchors - 1) as f64;
                        let seg = (x.floor() as usize).min(anchors - 2);
                        let frac = x - seg as f64;
                        let smooth = knots[seg] * (1.0 - frac) + knots[seg + 1] * frac;
                        (1.0 - rough) * smooth + rough * walk
                    })
                    .collect();
                let g = Path::new(values)?;
                let c = enhanced_norm(&g, sch)?;
                if c > 0.0 {
                    return Path::new(g.values().iter().map(|v| v / c).collect());
                }
            }
        })
        .collect::<Result<_>>()?;
    let manifest = Manifest {
        generator: Generator::UnitBall {
            schedule_fingerprint: sch.fingerprint_hex(),
        },
        master_seed,
        k: count,
        n,
        continuity_assumed: true,
        phi: None,
    };
    PathEnsemble::new(paths, manifest, None)
}

/// `max_i |f_i - g_i|`.
pub fn sup_distance(f: &Path, g: &Path) -> f64 {
    f.values()
        .iter()
        .zip(g.values())
        .fold(0.0, |m, (a, b)| m.max((a - b).abs()))
}

/// Indices of the greedy ε-net: paths are scanned in order and kept when
/// farther than `ε` (sup norm) from every path kept so far.
///
/// Members are pairwise more than `ε` apart, and every path lies within `ε`
/// of some member.
pub fn empirical_net_members(e: &PathEnsemble, epsilon: f64) -> Result<Vec<usize>> {
    if epsilon.is_nan() || epsilon <= 0.0 {
        return Err(invalid(format!("epsilon must be positive, got {epsilon}")));
    }
    let paths = e.paths();
    let mut members: Vec<usize> = Vec::new();
    for (i, p) in paths.iter().enumerate() {
        let covered = members
            .par_iter()
            .any(|&j| sup_distance(p, &paths[j]) <= epsilon);
        if !covered {
            members.push(i);
        }
    }
    Ok(members)
}

/// Size of the greedy ε-net of [`empirical_net_members`].
pub fn empirical_net(e: &PathEnsemble, epsilon: f64) -> Result<usize> {
    Ok(empirical_net_members(e, epsilon)?.len())
}
