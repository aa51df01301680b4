use std::collections::VecDeque;

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};

/// Samples `f(i/N)`, `i = 0..=N`, of a function on `[0, 1]`, with `N >= 2`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<f64>", into = "Vec<f64>")]
pub struct Path {
    values: Vec<f64>,
}

impl TryFrom<Vec<f64>> for Path {
    type Error = Error;

    fn try_from(values: Vec<f64>) -> Result<Self> {
        Path::new(values)
    }
}

impl From<Path> for Vec<f64> {
    fn from(p: Path) -> Self {
        p.values
    }
}

impl Path {
    pub fn new(values: Vec<f64>) -> Result<Self> {
        if values.len() < 3 {
            return Err(invalid(format!(
                "a path needs N >= 2 (at least 3 grid values), got {}",
                values.len()
            )));
        }
        if let Some(i) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFinite { row: 0, column: i });
        }
        Ok(Self { values })
    }

    /// Samples `f` at `i/N`.
    pub fn from_fn(n_grid: usize, f: impl Fn(f64) -> f64) -> Result<Self> {
        let n = n_grid as f64;
        Self::new((0..=n_grid).map(|i| f(i as f64 / n)).collect())
    }

    pub fn n_grid(&self) -> usize {
        self.values.len() - 1
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    /// `max_i |f(i/N)|`.
    pub fn sup_norm(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    /// Modulus of continuity `ω(f, δ) = 0.25 · sup_{|h| <= δ} sup_t |f(t+h) - f(t)|`.
    ///
    /// `t + h` is clamped into `[0, 1]` and `δ` is floored to the grid. A
    /// clamped shift never reaches further than an unclamped shift of the same
    /// or smaller size, and a negative shift from `t` is a positive shift from
    /// `t + h`, so the double sup equals the largest oscillation `max - min`
    /// over any window of `⌊δN⌋ + 1` consecutive grid values.
    pub fn modulus(&self, delta: f64) -> Result<f64> {
        if !(0.0..=1.0).contains(&delta) {
            return Err(invalid(format!("delta must lie in [0, 1], got {delta}")));
        }
        Ok(self.modulus_steps(grid_steps(delta, self.n_grid())))
    }

    /// [`Path::modulus`] with the shift bound given in grid steps.
    pub fn modulus_steps(&self, steps: usize) -> f64 {
        0.25 * max_window_range(&self.values, steps)
    }

    /// Pointwise `a · f`.
    pub fn scaled(&self, a: f64) -> Self {
        Self {
            values: self.values.iter().map(|v| a * v).collect(),
        }
    }
}

/// `⌊δN⌋`, snapping products within `1e-9` of an integer to that integer so
/// that values like `0.1 · 10` land on the intended grid point.
pub fn grid_steps(delta: f64, n_grid: usize) -> usize {
    let x = delta * n_grid as f64;
    let r = x.round();
    let k = if (x - r).abs() <= 1e-9 * x.max(1.0) {
        r
    } else {
        x.floor()
    };
    (k.max(0.0) as usize).min(n_grid)
}

/// Whether `δ` is (up to `1e-9` relative) a multiple of `1/N`.
pub fn is_grid_representable(delta: f64, n_grid: usize) -> bool {
    let x = delta * n_grid as f64;
    (x - x.round()).abs() <= 1e-9 * x.max(1.0)
}

/// Largest `max - min` over windows of `steps + 1` consecutive values, via
/// monotone deques in `O(len)`.
fn max_window_range(values: &[f64], steps: usize) -> f64 {
    if steps == 0 {
        return 0.0;
    }
    let width = (steps + 1).min(values.len());
    let mut maxq: VecDeque<usize> = VecDeque::with_capacity(width);
    let mut minq: VecDeque<usize> = VecDeque::with_capacity(width);
    let mut best = 0.0f64;
    for (i, &v) in values.iter().enumerate() {
        while maxq.back().is_some_and(|&j| values[j] <= v) {
            maxq.pop_back();
        }
        maxq.push_back(i);
        while minq.back().is_some_and(|&j| values[j] >= v) {
            minq.pop_back();
        }
        minq.push_back(i);
        if i + 1 >= width {
            let start = i + 1 - width;
            while maxq.front().is_some_and(|&j| j < start) {
                maxq.pop_front();
            }
            while minq.front().is_some_and(|&j| j < start) {
                minq.pop_front();
            }
            best = best.max(values[maxq[0]] - values[minq[0]]);
        }
    }
    best
}
