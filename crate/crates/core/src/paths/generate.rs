//! Seeded path generators.
//!
//! Path `i` of an ensemble draws from its own ChaCha8 stream seeded with
//! [`derive_seed`]`(master_seed, i)`, so ensembles are identical whatever the
//! thread count or evaluation order.

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{Generator, Manifest, Path, PathEnsemble};
use crate::error::{invalid, Error, Result};
use crate::orlicz::OrliczFunction;

const GOLDEN_GAMMA: u64 = 0x9e37_79b9_7f4a_7c15;

/// SplitMix64 output function applied to `x + γ`.
pub fn splitmix64(x: u64) -> u64 {
    let mut z = x.wrapping_add(GOLDEN_GAMMA);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Per-path seed: `splitmix64(splitmix64(master) ^ index)`.
pub fn derive_seed(master_seed: u64, index: u64) -> u64 {
    splitmix64(splitmix64(master_seed) ^ index)
}

/// RNG for path `index` of an ensemble seeded with `master_seed`.
pub fn path_rng(master_seed: u64, index: usize) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(derive_seed(master_seed, index as u64))
}

fn check_shape(n: usize, k: usize) -> Result<()> {
    if n < 2 {
        return Err(invalid(format!("grid size N must be >= 2, got {n}")));
    }
    if k < 1 {
        return Err(invalid("ensemble size K must be >= 1"));
    }
    Ok(())
}

/// Standard Brownian motion on `[0, 1]`: `W(0) = 0`, increments `N(0, 1/N)`.
///
/// The manifest records `Exp(2)` as a controlling Orlicz function for the
/// sup norm (Gaussian tails of `sup |W|`).
pub fn gen_brownian(n: usize, k: usize, master_seed: u64) -> Result<PathEnsemble> {
    check_shape(n, k)?;
    let sd = (n as f64).recip().sqrt();
    let paths: Vec<Path> = (0..k)
        .into_par_iter()
        .map(|i| {
            let mut rng = path_rng(master_seed, i);
            let mut values = Vec::with_capacity(n + 1);
            let mut w = 0.0;
            values.push(w);
            for _ in 0..n {
                let z: f64 = rng.sample(StandardNormal);
                w += sd * z;
                values.push(w);
            }
            Path::new(values)
        })
        .collect::<Result<_>>()?;
    let manifest = Manifest {
        generator: Generator::Brownian,
        master_seed,
        k,
        n,
        continuity_assumed: true,
        phi: Some(OrliczFunction::exp(2.0)?),
    };
    PathEnsemble::new(paths, manifest, None)
}

/// Covariance kernels evaluated on the grid `i/N`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum Covariance {
    Zero,
    /// `min(s, t)`.
    Brownian,
    /// `min(s, t) - s t`.
    BrownianBridge,
    /// `variance · 1{s = t}`.
    WhiteNoise {
        variance: f64,
    },
    /// `variance · exp(-(s - t)² / (2 ℓ²))`.
    SquaredExponential {
        variance: f64,
        length_scale: f64,
    },
}

impl Covariance {
    fn validate(&self) -> Result<()> {
        match *self {
            Covariance::WhiteNoise { variance } if !(variance >= 0.0 && variance.is_finite()) => {
                Err(invalid(format!("variance must be >= 0, got {variance}")))
            }
            Covariance::SquaredExponential {
                variance,
                length_scale,
            } if !(variance >= 0.0
                && variance.is_finite()
                && length_scale > 0.0
                && length_scale.is_finite()) =>
            {
                Err(invalid(
                    "squared exponential needs variance >= 0 and length_scale > 0",
                ))
            }
            _ => Ok(()),
        }
    }

    pub fn kernel(&self, s: f64, t: f64) -> f64 {
        match *self {
            Covariance::Zero => 0.0,
            Covariance::Brownian => s.min(t),
            Covariance::BrownianBridge => s.min(t) - s * t,
            Covariance::WhiteNoise { variance } => {
                if s == t {
                    variance
                } else {
                    0.0
                }
            }
            Covariance::SquaredExponential {
                variance,
                length_scale,
            } => variance * (-(s - t).powi(2) / (2.0 * length_scale * length_scale)).exp(),
        }
    }

    /// The `(N+1) × (N+1)` grid covariance matrix.
    pub fn matrix(&self, n: usize) -> DMatrix<f64> {
        let nf = n as f64;
        DMatrix::from_fn(n + 1, n + 1, |i, j| {
            self.kernel(i as f64 / nf, j as f64 / nf)
        })
    }
}

/// Square-root factor `A` with `A Aᵀ = C` from the symmetric eigendecomposition.
///
/// Eigenvalues down to `-1e-9 · max(1, max |λ|)` are treated as rounding noise
/// and clamped to zero; anything more negative is reported.
pub fn covariance_factor(cov: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    let eig = SymmetricEigen::new(cov.clone());
    let min = eig
        .eigenvalues
        .iter()
        .copied()
        .fold(f64::INFINITY, f64::min);
    let scale = eig.eigenvalues.iter().fold(1.0f64, |m, v| m.max(v.abs()));
    if min < -1e-9 * scale {
        return Err(Error::Factorization {
            min_eigenvalue: min,
        });
    }
    let roots = eig.eigenvalues.map(|l| l.max(0.0).sqrt());
    let mut factor = eig.eigenvectors;
    for (j, r) in roots.iter().enumerate() {
        factor.column_mut(j).scale_mut(*r);
    }
    Ok(factor)
}

/// Centered Gaussian paths with the given grid covariance.
///
/// Cost is dominated by the `O(N³)` eigendecomposition; intended for
/// `N` up to a few hundred.
pub fn gen_gaussian(
    cov: &Covariance,
    n: usize,
    k: usize,
    master_seed: u64,
) -> Result<PathEnsemble> {
    check_shape(n, k)?;
    cov.validate()?;
    let factor = covariance_factor(&cov.matrix(n))?;
    let paths: Vec<Path> = (0..k)
        .into_par_iter()
        .map(|i| {
            let mut rng = path_rng(master_seed, i);
            let z = DVector::from_fn(n + 1, |_, _| rng.sample::<f64, _>(StandardNormal));
            let x = &factor * z;
            Path::new(x.iter().copied().collect())
        })
        .collect::<Result<_>>()?;
    let manifest = Manifest {
        generator: Generator::Gaussian {
            covariance: cov.clone(),
        },
        master_seed,
        k,
        n,
        continuity_assumed: true,
        phi: Some(OrliczFunction::exp(2.0)?),
    };
    PathEnsemble::new(paths, manifest, None)
}

/// `θ(x) = τx - |x|^p/p`.
pub fn theta_value(tau: f64, p: f64, x: f64) -> f64 {
    tau * x - x.abs().powf(p) / p
}

/// Point of `[-L, L]` that grid index `j` of `N` maps to: `L (2j - N) / N`.
pub fn theta_coordinate(half_width: f64, n: usize, j: usize) -> f64 {
    half_width * (2.0 * j as f64 - n as f64) / n as f64
}

fn check_theta(p: f64, half_width: f64) -> Result<()> {
    if !(p > 1.0 && p < 2.0) {
        return Err(invalid(format!("p must lie in (1, 2), got {p}")));
    }
    if !(half_width > 0.0 && half_width.is_finite()) {
        return Err(invalid(format!("L must be positive, got {half_width}")));
    }
    Ok(())
}

/// Draws `τ ~ N(0, 1)` for path `index`; independent of `L` and `N`.
pub fn theta_tau(master_seed: u64, index: usize) -> f64 {
    path_rng(master_seed, index).sample(StandardNormal)
}

/// Paths of `θ(x) = τx - |x|^p/p`, `τ ~ N(0, 1)`, on `[-L, L]` mapped onto `[0, 1]`.
///
/// The `τ` of every path and `L` are recorded in the manifest.
pub fn gen_theta(
    p: f64,
    half_width: f64,
    n: usize,
    k: usize,
    master_seed: u64,
) -> Result<PathEnsemble> {
    check_shape(n, k)?;
    check_theta(p, half_width)?;
    let taus: Vec<f64> = (0..k).map(|i| theta_tau(master_seed, i)).collect();
    let paths: Vec<Path> = taus
        .par_iter()
        .map(|&tau| theta_path(tau, p, half_width, n))
        .collect::<Result<_>>()?;
    let manifest = Manifest {
        generator: Generator::Theta {
            p,
            half_width,
            taus,
        },
        master_seed,
        k,
        n,
        continuity_assumed: true,
        phi: None,
    };
    PathEnsemble::new(paths, manifest, None)
}

/// One `θ` path for a given `τ`.
pub fn theta_path(tau: f64, p: f64, half_width: f64, n: usize) -> Result<Path> {
    check_theta(p, half_width)?;
    Path::new(
        (0..=n)
            .map(|j| theta_value(tau, p, theta_coordinate(half_width, n, j)))
            .collect(),
    )
}
