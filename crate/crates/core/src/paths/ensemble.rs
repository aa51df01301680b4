use serde::{Deserialize, Serialize};

use super::generate::Covariance;
use super::Path;
use crate::error::{invalid, Result};
use crate::orlicz::{OrliczFunction, WeightedSample};

/// How an ensemble was produced.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum Generator {
    Brownian,
    Gaussian {
        covariance: Covariance,
    },
    /// `θ(x) = τx - |x|^p/p` on `[-L, L]`, mapped affinely onto `[0, 1]`.
    Theta {
        p: f64,
        half_width: f64,
        taus: Vec<f64>,
    },
    /// Normalized test points for the unit ball of a support space.
    UnitBall {
        schedule_fingerprint: String,
    },
    /// Paths supplied from outside (e.g. a CSV without a manifest).
    External,
}

/// Provenance and shape of a [`PathEnsemble`].
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Manifest {
    pub generator: Generator,
    pub master_seed: u64,
    pub k: usize,
    pub n: usize,
    /// Paths are grid samples; continuity of the sampled process is assumed, not checked.
    #[serde(default = "yes")]
    pub continuity_assumed: bool,
    /// An Orlicz function known to control the sup norm of the process, if any.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub phi: Option<OrliczFunction>,
}

fn yes() -> bool {
    true
}

impl Manifest {
    pub fn external(k: usize, n: usize) -> Self {
        Self {
            generator: Generator::External,
            master_seed: 0,
            k,
            n,
            continuity_assumed: true,
            phi: None,
        }
    }
}

/// `K >= 1` paths on a common grid plus optional nonnegative weights.
///
/// Without weights the ensemble is the uniform empirical measure `1/K`.
/// Weights of arbitrary positive total mass model a σ-finite measure.
#[derive(Clone, Debug, PartialEq)]
pub struct PathEnsemble {
    paths: Vec<Path>,
    weights: Option<Vec<f64>>,
    manifest: Manifest,
}

impl PathEnsemble {
    pub fn new(paths: Vec<Path>, manifest: Manifest, weights: Option<Vec<f64>>) -> Result<Self> {
        let Some(first) = paths.first() else {
            return Err(invalid("an ensemble needs at least one path"));
        };
        let n = first.n_grid();
        if let Some(i) = paths.iter().position(|p| p.n_grid() != n) {
            return Err(invalid(format!(
                "path {i} has N = {} but path 0 has N = {n}",
                paths[i].n_grid()
            )));
        }
        if manifest.k != paths.len() || manifest.n != n {
            return Err(invalid(format!(
                "manifest says K = {}, N = {} but data has K = {}, N = {n}",
                manifest.k,
                manifest.n,
                paths.len()
            )));
        }
        if let Some(w) = &weights {
            // reuse the sample validation for lengths, signs and mass
            WeightedSample::new(vec![0.0; paths.len()], w.clone())?;
        }
        Ok(Self {
            paths,
            weights,
            manifest,
        })
    }

    /// Wraps paths with an [`Generator::External`] manifest and uniform weights.
    pub fn from_paths(paths: Vec<Path>) -> Result<Self> {
        let n = paths.first().map_or(0, Path::n_grid);
        let manifest = Manifest::external(paths.len(), n);
        Self::new(paths, manifest, None)
    }

    pub fn with_weights(self, weights: Vec<f64>) -> Result<Self> {
        Self::new(self.paths, self.manifest, Some(weights))
    }

    pub fn paths(&self) -> &[Path] {
        &self.paths
    }

    pub fn manifest(&self) -> &Manifest {
        &self.manifest
    }

    pub fn weights(&self) -> Option<&[f64]> {
        self.weights.as_deref()
    }

    pub fn k(&self) -> usize {
        self.paths.len()
    }

    pub fn n_grid(&self) -> usize {
        self.manifest.n
    }

    /// Explicit weights, or `1/K` each.
    pub fn measure_weights(&self) -> Vec<f64> {
        match &self.weights {
            Some(w) => w.clone(),
            None => vec![1.0 / self.k() as f64; self.k()],
        }
    }

    /// Per-path scalars paired with the ensemble measure.
    pub fn sample_of(&self, values: Vec<f64>) -> Result<WeightedSample> {
        WeightedSample::new(values, self.measure_weights())
    }

    /// 64-bit FNV-1a hash of `N`, `K`, the row-major values and the weights,
    /// all as little-endian bytes.
    pub fn fingerprint(&self) -> u64 {
        let mut h = Fnv1a::new();
        h.write(&(self.n_grid() as u64).to_le_bytes());
        h.write(&(self.k() as u64).to_le_bytes());
        for p in &self.paths {
            for v in p.values() {
                h.write(&v.to_le_bytes());
            }
        }
        if let Some(w) = &self.weights {
            for v in w {
                h.write(&v.to_le_bytes());
            }
        }
        h.finish()
    }

    pub fn fingerprint_hex(&self) -> String {
        format!("{:016x}", self.fingerprint())
    }
}

pub(crate) struct Fnv1a(u64);

impl Fnv1a {
    pub(crate) fn new() -> Self {
        Self(0xcbf2_9ce4_8422_2325)
    }

    pub(crate) fn write(&mut self, bytes: &[u8]) {
        for &b in bytes {
            self.0 ^= u64::from(b);
            self.0 = self.0.wrapping_mul(0x0000_0100_0000_01b3);
        }
    }

    pub(crate) fn finish(&self) -> u64 {
        self.0
    }
}
