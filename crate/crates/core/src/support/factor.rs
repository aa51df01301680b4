use serde::{Deserialize, Serialize};

use super::schedule::Schedule;

/// Deterministic staircase `r(t, s) = 4 · 2^-n(|t - s|)` from a schedule,
/// where `n(h) = max{n <= n_max : δ(n) >= h}`; `r = 2` beyond `δ(1)` and
/// `r(t, t) = 0`.
///
/// With `ζ(g) = enhanced_norm(g)`, every grid pair satisfies
/// `|g(t) - g(s)| <= ζ(g) · r(t, s)`: for `|t - s| <= δ(n)` the difference is
/// at most `4 ω(g, δ(n)) <= 4 · 2^-n (ζ - |g|_∞)`, and any difference is at
/// most `2 |g|_∞`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ScheduleDistance {
    grid_n: usize,
    deltas: Vec<f64>,
    steps: Vec<usize>,
}

pub fn factorization(sch: &Schedule) -> ScheduleDistance {
    let grid_n = sch.grid_n();
    ScheduleDistance {
        grid_n,
        deltas: sch.deltas().to_vec(),
        steps: sch
            .deltas()
            .iter()
            .map(|d| (d * grid_n as f64).round() as usize)
            .collect(),
    }
}

impl ScheduleDistance {
    fn from_level(level: Option<usize>) -> f64 {
        match level {
            Some(n) => 4.0 * 2f64.powi(-(n as i32)),
            None => 2.0,
        }
    }

    /// `r(t, s)` for real `t, s` in `[0, 1]`.
    pub fn distance(&self, t: f64, s: f64) -> f64 {
        let h = (t - s).abs();
        if h == 0.0 {
            return 0.0;
        }
        // relative slack absorbs rounding in h for grid-valued t, s
        let level = self.deltas.iter().rposition(|&d| d * (1.0 + 1e-12) >= h);
        Self::from_level(level.map(|i| i + 1))
    }

    /// `r(i/N, j/N)` on the schedule grid, compared in whole grid steps.
    pub fn grid_distance(&self, i: usize, j: usize) -> f64 {
        let h = i.abs_diff(j);
        if h == 0 {
            return 0.0;
        }
        let level = self.steps.iter().rposition(|&k| k >= h);
        Self::from_level(level.map(|i| i + 1))
    }

    pub fn grid_n(&self) -> usize {
        self.grid_n
    }
}
