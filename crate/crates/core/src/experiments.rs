//! The `θ(t) = τt - |t|^p/p` process: closed-form sup, tail fits, and an
//! Orlicz-norm growth probe over widening domains.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::orlicz::{luxemburg_norm, OrliczFunction, WeightedSample};
use crate::paths::{theta_path, theta_tau, theta_value};

fn check_p(p: f64) -> Result<()> {
    if p > 1.0 && p < 2.0 {
        Ok(())
    } else {
        Err(invalid(format!("p must lie in (1, 2), got {p}")))
    }
}

/// Conjugate exponent `q = p / (p - 1)`.
pub fn conjugate(p: f64) -> f64 {
    p / (p - 1.0)
}

/// `sup_t θ(t) = |τ|^q / q` over the whole line.
pub fn counterexample_sup(tau: f64, p: f64) -> Result<f64> {
    check_p(p)?;
    let q = conjugate(p);
    Ok(tau.abs().powf(q) / q)
}

/// Maximizer `t* = sign(τ) |τ|^{1/(p-1)}`.
pub fn counterexample_argmax(tau: f64, p: f64) -> Result<f64> {
    check_p(p)?;
    Ok(tau.signum() * tau.abs().powf(1.0 / (p - 1.0)))
}

/// `sup_{|t| <= L} θ(t)`, exact: `θ` is concave, so the maximum sits at `t*`
/// clamped to the interval.
pub fn theta_sup(tau: f64, p: f64, half_width: f64) -> Result<f64> {
    let t = counterexample_argmax(tau, p)?.clamp(-half_width, half_width);
    Ok(theta_value(tau, p, t))
}

/// `sup_{|t| <= L} |θ(t)|`, exact. The minimum of a concave function on an
/// interval is at an endpoint.
pub fn theta_abs_sup(tau: f64, p: f64, half_width: f64) -> Result<f64> {
    Ok(theta_sup(tau, p, half_width)?
        .abs()
        .max(theta_value(tau, p, half_width).abs())
        .max(theta_value(tau, p, -half_width).abs()))
}

pub const MIN_TAIL_SAMPLES: usize = 1000;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TailReport {
    /// Slope `β` of `ln(-ln S(x))` against `ln x`, `S` the empirical survival function.
    pub fitted_exponent: f64,
    /// Smallest and largest sample inside the quantile window.
    pub fit_window: (f64, f64),
    pub quantile_window: (f64, f64),
    pub sample_count: usize,
    pub reference_exponent: f64,
}

/// Weibull-type tail exponent by least squares on the double-log survival plot.
///
/// The `i`-th order statistic (1-based) of `n` gets plotting position
/// `i/(n+1)` and survival `1 - i/(n+1)`; points with plotting position inside
/// `window` enter the fit.
pub fn tail_exponent(
    samples: &[f64],
    window: (f64, f64),
    reference_exponent: f64,
) -> Result<TailReport> {
    let n = samples.len();
    if n < MIN_TAIL_SAMPLES {
        return Err(invalid(format!(
            "need at least {MIN_TAIL_SAMPLES} samples, got {n}"
        )));
    }
    let (lo, hi) = window;
    if !(0.5 < lo && lo < hi && hi < 1.0) {
        return Err(invalid(format!(
            "quantile window must satisfy 0.5 < lo < hi < 1, got ({lo}, {hi})"
        )));
    }
    if let Some(i) = samples.iter().position(|x| !(x.is_finite() && *x > 0.0)) {
        return Err(invalid(format!(
            "sample {i} is not a positive finite number"
        )));
    }
    let mut sorted = samples.to_vec();
    sorted.sort_by(f64::total_cmp);
    if sorted[0] == sorted[n - 1] {
        return Err(Error::Degenerate("all samples are equal".into()));
    }
    let denom = (n + 1) as f64;
    let points: Vec<(f64, f64)> = sorted
        .iter()
        .enumerate()
        .filter_map(|(i, &x)| {
            let q = (i + 1) as f64 / denom;
            (lo <= q && q <= hi).then(|| (x.ln(), (-(1.0 - q).ln()).ln()))
        })
        .collect();
    if points.len() < 2 {
        return Err(invalid(format!(
            "quantile window ({lo}, {hi}) holds fewer than two order statistics"
        )));
    }
    let m = points.len() as f64;
    let mx = points.iter().map(|p| p.0).sum::<f64>() / m;
    let my = points.iter().map(|p| p.1).sum::<f64>() / m;
    let sxx: f64 = points.iter().map(|p| (p.0 - mx).powi(2)).sum();
    let sxy: f64 = points.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    if sxx == 0.0 {
        return Err(Error::Degenerate(
            "all samples inside the quantile window are equal".into(),
        ));
    }
    Ok(TailReport {
        fitted_exponent: sxy / sxx,
        fit_window: (points[0].0.exp(), points[points.len() - 1].0.exp()),
        quantile_window: window,
        sample_count: n,
        reference_exponent,
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Trend {
    NoTrend,
    Plateau,
    Growing,
}

/// Relative change of the last step below which the profile counts as a plateau.
pub const PLATEAU_REL: f64 = 1e-3;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DhProbeReport {
    /// Always `"EXPLORATORY"`: the profile is evidence, not a verdict.
    pub label: String,
    pub p: f64,
    pub psi: OrliczFunction,
    pub k: usize,
    pub n: usize,
    pub master_seed: u64,
    pub half_widths: Vec<f64>,
    /// `|| sup_{|t|<=L} θ(t) ||_Ψ` from the exact per-path sup.
    pub estimates: Vec<f64>,
    /// Same norm from the maximum over the `N`-point grid of each path.
    pub grid_estimates: Vec<f64>,
    /// `|| sup_{|t|<=L} |θ(t)| ||_Ψ`; grows with `L` through `|θ(±L)| ~ L^p/p`.
    pub abs_estimates: Vec<f64>,
    pub trend: Trend,
}

/// Monte Carlo profile of `L ↦ || sup_{|t|<=L} θ(t) ||_Ψ`, with the `|θ|`
/// profile alongside.
///
/// The `τ` draws are shared across all `L` (same as [`crate::paths::gen_theta`]
/// with the same seed), so `estimates` is nondecreasing in `L`. The trend is
/// `plateau` when the last step changes the estimate by at most
/// [`PLATEAU_REL`] relative, `growing` otherwise.
pub fn dh_probe(
    p: f64,
    psi: &OrliczFunction,
    half_widths: &[f64],
    k: usize,
    n: usize,
    master_seed: u64,
    tol: f64,
) -> Result<DhProbeReport> {
    check_p(p)?;
    if half_widths.is_empty() {
        return Err(invalid("at least one L is required"));
    }
    if half_widths.iter().any(|l| !(*l > 0.0 && l.is_finite()))
        || half_widths.windows(2).any(|w| w[1] <= w[0])
    {
        return Err(invalid("L values must be positive and strictly increasing"));
    }
    if k == 0 || n < 2 {
        return Err(invalid(format!("need K >= 1 and N >= 2, got K={k}, N={n}")));
    }
    let taus: Vec<f64> = (0..k).map(|i| theta_tau(master_seed, i)).collect();
    let mut estimates = Vec::with_capacity(half_widths.len());
    let mut grid_estimates = Vec::with_capacity(half_widths.len());
    let mut abs_estimates = Vec::with_capacity(half_widths.len());
    let norm = |v: Vec<f64>| luxemburg_norm(psi, &WeightedSample::uniform(v)?, tol);
    for &l in half_widths {
        let exact: Vec<f64> = taus
            .iter()
            .map(|&t| theta_sup(t, p, l))
            .collect::<Result<_>>()?;
        let abs: Vec<f64> = taus
            .iter()
            .map(|&t| theta_abs_sup(t, p, l))
            .collect::<Result<_>>()?;
        let grid: Vec<f64> = taus
            .par_iter()
            .map(|&t| {
                theta_path(t, p, l, n)
                    .map(|g| g.values().iter().copied().fold(f64::NEG_INFINITY, f64::max))
            })
            .collect::<Result<_>>()?;
        estimates.push(norm(exact)?);
        grid_estimates.push(norm(grid)?);
        abs_estimates.push(norm(abs)?);
    }
    let trend = match estimates.as_slice() {
        [_] => Trend::NoTrend,
        [.., a, b] if *b - *a <= PLATEAU_REL * a.abs() => Trend::Plateau,
        _ => Trend::Growing,
    };
    Ok(DhProbeReport {
        label: "EXPLORATORY".into(),
        p,
        psi: *psi,
        k,
        n,
        master_seed,
        half_widths: half_widths.to_vec(),
        estimates,
        grid_estimates,
        abs_estimates,
        trend,
    })
}
