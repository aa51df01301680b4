use serde::{Deserialize, Serialize};

use super::curve::{EnsembleOracle, MCurve, MaxOracle, ModulusNormOracle};
use crate::error::{invalid, Error, Result};
use crate::orlicz::OrliczFunction;
use crate::paths::{is_grid_representable, Fnv1a, PathEnsemble};

/// Base `b` of the level targets `b^-n`.
pub const SCHEDULE_BASE: f64 = 4.0;

/// The support space `Z`, described by a strictly decreasing `δ(1..=n_max)`.
///
/// Level `n` (1-based; `deltas[n-1]`) is certified by
/// `certified_m[n-1] = ||ω(ξ, δ(n))||_{Or(Ψ)} <= 4^-n`. `Z` carries the norm
/// `|g|_∞ + max_n 2^n ω(g, δ(n))`.
///
/// JSON: `{"psi": .., "base": 4.0, "deltas": [..], "certified_m": [..],
/// "n_max": k, "ensemble_fingerprint": "<hex>", "grid_n": N}`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawSchedule", into = "RawSchedule")]
pub struct Schedule {
    psi: OrliczFunction,
    deltas: Vec<f64>,
    certified_m: Vec<f64>,
    ensemble_fingerprint: String,
    grid_n: usize,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawSchedule {
    psi: OrliczFunction,
    base: f64,
    deltas: Vec<f64>,
    certified_m: Vec<f64>,
    n_max: usize,
    ensemble_fingerprint: String,
    grid_n: usize,
}

impl TryFrom<RawSchedule> for Schedule {
    type Error = Error;

    fn try_from(raw: RawSchedule) -> Result<Self> {
        if raw.base != SCHEDULE_BASE {
            return Err(invalid(format!(
                "schedule base must be 4, got {}",
                raw.base
            )));
        }
        if raw.n_max != raw.deltas.len() {
            return Err(invalid(format!(
                "n_max = {} but {} deltas given",
                raw.n_max,
                raw.deltas.len()
            )));
        }
        Schedule::new(
            raw.psi,
            raw.deltas,
            raw.certified_m,
            raw.grid_n,
            raw.ensemble_fingerprint,
        )
    }
}

impl From<Schedule> for RawSchedule {
    fn from(s: Schedule) -> Self {
        Self {
            psi: s.psi,
            base: SCHEDULE_BASE,
            n_max: s.deltas.len(),
            deltas: s.deltas,
            certified_m: s.certified_m,
            ensemble_fingerprint: s.ensemble_fingerprint,
            grid_n: s.grid_n,
        }
    }
}

/// `4^-n`.
pub fn level_target(n: usize) -> f64 {
    SCHEDULE_BASE.powi(-(n as i32))
}

/// `2^n`.
pub fn level_weight(n: usize) -> f64 {
    2f64.powi(n as i32)
}

impl Schedule {
    /// Validates every schedule invariant.
    pub fn new(
        psi: OrliczFunction,
        deltas: Vec<f64>,
        certified_m: Vec<f64>,
        grid_n: usize,
        ensemble_fingerprint: String,
    ) -> Result<Self> {
        if grid_n < 2 {
            return Err(invalid(format!("grid_n must be >= 2, got {grid_n}")));
        }
        if deltas.is_empty() {
            return Err(invalid("a schedule needs n_max >= 1"));
        }
        if certified_m.len() != deltas.len() {
            return Err(invalid("deltas and certified_m differ in length"));
        }
        for (i, &d) in deltas.iter().enumerate() {
            if !(d > 0.0 && d <= 1.0) {
                return Err(invalid(format!("delta({}) = {d} outside (0, 1]", i + 1)));
            }
            if !is_grid_representable(d, grid_n) {
                return Err(Error::GridIncompatible { delta: d, grid_n });
            }
        }
        if let Some(i) = deltas.windows(2).position(|w| w[1] >= w[0]) {
            return Err(invalid(format!(
                "deltas must decrease strictly: delta({}) = {} >= delta({}) = {}",
                i + 2,
                deltas[i + 1],
                i + 1,
                deltas[i]
            )));
        }
        for (i, &m) in certified_m.iter().enumerate() {
            let n = i + 1;
            if !(m >= 0.0 && m <= level_target(n)) {
                return Err(invalid(format!(
                    "certified_m({n}) = {m} violates the target 4^-{n} = {}",
                    level_target(n)
                )));
            }
        }
        Ok(Self {
            psi,
            deltas,
            certified_m,
            ensemble_fingerprint,
            grid_n,
        })
    }

    pub fn psi(&self) -> &OrliczFunction {
        &self.psi
    }

    pub fn deltas(&self) -> &[f64] {
        &self.deltas
    }

    pub fn certified_m(&self) -> &[f64] {
        &self.certified_m
    }

    pub fn n_max(&self) -> usize {
        self.deltas.len()
    }

    pub fn grid_n(&self) -> usize {
        self.grid_n
    }

    pub fn base(&self) -> f64 {
        SCHEDULE_BASE
    }

    pub fn ensemble_fingerprint(&self) -> &str {
        &self.ensemble_fingerprint
    }

    /// `δ(n)` for `1 <= n <= n_max`.
    pub fn delta(&self, n: usize) -> f64 {
        self.deltas[n - 1]
    }

    /// `Σ_n 2^n · certified_m(n)`; below `Σ 2^-n < 1` by construction.
    pub fn telescoped_sum(&self) -> f64 {
        self.certified_m
            .iter()
            .enumerate()
            .map(|(i, m)| level_weight(i + 1) * m)
            .sum()
    }

    /// Hash of the schedule contents.
    pub fn fingerprint_hex(&self) -> String {
        let mut h = Fnv1a::new();
        h.write(&(self.grid_n as u64).to_le_bytes());
        for v in self.deltas.iter().chain(&self.certified_m) {
            h.write(&v.to_le_bytes());
        }
        h.write(self.ensemble_fingerprint.as_bytes());
        format!("{:016x}", h.finish())
    }
}

/// Builds the schedule from an arbitrary `m` oracle.
///
/// Level `n` takes the largest grid `δ` below `δ(n-1)` (by at least one grid
/// step; `δ(0) := 1 + 1/N`) with `m(δ) <= 4^-n`, found by binary search over a
/// monotone `m`. Construction stops at `n_max_request` or when no grid point
/// qualifies.
pub fn build_schedule_with<O: ModulusNormOracle + ?Sized>(
    oracle: &O,
    psi: OrliczFunction,
    n_max_request: usize,
    ensemble_fingerprint: String,
) -> Result<Schedule> {
    if n_max_request == 0 {
        return Err(invalid("n_max_request must be >= 1"));
    }
    let grid_n = oracle.grid_n();
    let mut steps: Vec<usize> = Vec::new();
    let mut certified = Vec::new();
    let mut upper = grid_n;
    for n in 1..=n_max_request {
        if upper == 0 {
            break;
        }
        let target = level_target(n);
        let floor_m = oracle.m_at(1)?;
        if floor_m > target {
            if n == 1 {
                return Err(Error::ScheduleUnreachable {
                    m_floor: floor_m,
                    target,
                });
            }
            break;
        }
        // invariant: m(lo) <= target, and m(hi) > target unless hi == upper
        let (mut lo, mut hi) = (1usize, upper);
        if oracle.m_at(hi)? <= target {
            lo = hi;
        }
        while hi - lo > 1 {
            let mid = lo + (hi - lo) / 2;
            if oracle.m_at(mid)? <= target {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        steps.push(lo);
        certified.push(oracle.m_at(lo)?);
        upper = lo - 1;
    }
    let deltas = steps.iter().map(|&k| k as f64 / grid_n as f64).collect();
    Schedule::new(psi, deltas, certified, grid_n, ensemble_fingerprint)
}

/// Schedule for one ensemble. With `m_oracle`, the tabulated curve replaces
/// direct measurement.
pub fn build_schedule(
    e: &PathEnsemble,
    psi: &OrliczFunction,
    n_max_request: usize,
    m_oracle: Option<&MCurve>,
    tol: f64,
) -> Result<Schedule> {
    let fingerprint = e.fingerprint_hex();
    match m_oracle {
        Some(curve) => {
            if curve.grid_n != e.n_grid() {
                return Err(invalid(format!(
                    "oracle grid N = {} differs from ensemble grid N = {}",
                    curve.grid_n,
                    e.n_grid()
                )));
            }
            build_schedule_with(curve, *psi, n_max_request, fingerprint)
        }
        None => build_schedule_with(
            &EnsembleOracle::new(e, *psi, tol),
            *psi,
            n_max_request,
            fingerprint,
        ),
    }
}

/// Common schedule for a finite family: `M(δ)` is the largest per-member
/// `m(δ)`, so every member is certified at every level.
pub fn build_schedule_family(
    ensembles: &[PathEnsemble],
    psi: &OrliczFunction,
    n_max_request: usize,
    tol: f64,
) -> Result<Schedule> {
    let oracle = MaxOracle::new(
        ensembles
            .iter()
            .map(|e| EnsembleOracle::new(e, *psi, tol))
            .collect(),
    )?;
    build_schedule_with(&oracle, *psi, n_max_request, family_fingerprint(ensembles))
}

/// The member fingerprint for a single ensemble; otherwise a hash of all of them.
pub fn family_fingerprint(ensembles: &[PathEnsemble]) -> String {
    if let [single] = ensembles {
        return single.fingerprint_hex();
    }
    let mut h = Fnv1a::new();
    for e in ensembles {
        h.write(&e.fingerprint().to_le_bytes());
    }
    format!("{:016x}", h.finish())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::orlicz::DEFAULT_TOL;
    use crate::paths::{gen_brownian, Path};

    fn psi() -> OrliczFunction {
        OrliczFunction::exp(1.0).unwrap()
    }

    #[test]
    fn identity_oracle_inverts_exactly() {
        let n = 4096;
        let curve = MCurve::tabulate(psi(), n, |d| d, String::new()).unwrap();
        let s = build_schedule_with(&curve, psi(), 10, String::new()).unwrap();
        assert_eq!(s.n_max(), 6);
        for level in 1..=6 {
            assert_eq!(s.delta(level), level_target(level));
        }
    }

    #[test]
    fn constant_paths_take_every_grid_step() {
        let e = PathEnsemble::from_paths(vec![Path::new(vec![1.0; 33]).unwrap(); 2]).unwrap();
        let s = build_schedule(&e, &psi(), 5, None, DEFAULT_TOL).unwrap();
        assert_eq!(s.n_max(), 5);
        assert_eq!(
            s.deltas(),
            &[1.0, 31.0 / 32.0, 30.0 / 32.0, 29.0 / 32.0, 28.0 / 32.0]
        );
        assert!(s.certified_m().iter().all(|&m| m == 0.0));
    }

    #[test]
    fn constant_paths_stop_at_grid_floor() {
        let e = PathEnsemble::from_paths(vec![Path::new(vec![0.0; 4]).unwrap()]).unwrap();
        let s = build_schedule(&e, &psi(), 10, None, DEFAULT_TOL).unwrap();
        assert_eq!(s.deltas(), &[1.0, 2.0 / 3.0, 1.0 / 3.0]);
    }

    #[test]
    fn rough_ensemble_is_unreachable() {
        let e = gen_brownian(8, 50, 3).unwrap().paths().to_vec();
        let scaled: Vec<Path> = e.iter().map(|p| p.scaled(100.0)).collect();
        let e = PathEnsemble::from_paths(scaled).unwrap();
        match build_schedule(&e, &psi(), 3, None, DEFAULT_TOL) {
            Err(Error::ScheduleUnreachable { m_floor, target }) => {
                assert!(m_floor > target);
                assert_eq!(target, 0.25);
            }
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn brownian_schedule_invariants() {
        let e = gen_brownian(1024, 300, 17).unwrap();
        let s = build_schedule(&e, &psi(), 8, None, DEFAULT_TOL).unwrap();
        assert!(s.n_max() >= 1);
        assert!(s.deltas().windows(2).all(|w| w[1] < w[0]));
        assert!(s.telescoped_sum() < 1.0);
        // maximality: one grid step more violates the target (or hits the previous level)
        let oracle = EnsembleOracle::new(&e, psi(), DEFAULT_TOL);
        for level in 1..=s.n_max() {
            let k = (s.delta(level) * 1024.0).round() as usize;
            let prev = if level == 1 {
                1025
            } else {
                (s.delta(level - 1) * 1024.0).round() as usize
            };
            if k + 1 < prev {
                assert!(oracle.m_at(k + 1).unwrap() > level_target(level));
            }
        }
    }

    #[test]
    fn family_max_matches_members() {
        let b = gen_brownian(256, 100, 1).unwrap();
        let c = PathEnsemble::from_paths(vec![Path::new(vec![0.5; 257]).unwrap()]).unwrap();
        let alone = build_schedule(&b, &psi(), 6, None, DEFAULT_TOL).unwrap();
        let single =
            build_schedule_family(std::slice::from_ref(&b), &psi(), 6, DEFAULT_TOL).unwrap();
        assert_eq!(alone, single);
        let family = build_schedule_family(&[b, c], &psi(), 6, DEFAULT_TOL).unwrap();
        assert_eq!(family.deltas(), alone.deltas());
        assert_eq!(family.certified_m(), alone.certified_m());
    }

    #[test]
    fn family_requires_shared_grid() {
        let a = gen_brownian(16, 2, 1).unwrap();
        let b = gen_brownian(32, 2, 1).unwrap();
        assert!(build_schedule_family(&[a, b], &psi(), 2, DEFAULT_TOL).is_err());
    }

    #[test]
    fn json_round_trip_and_validation() {
        let s = Schedule::new(psi(), vec![0.25, 0.0625], vec![0.1, 0.0], 16, "ab".into()).unwrap();
        let json = serde_json::to_string(&s).unwrap();
        assert_eq!(
            json,
            r#"{"psi":{"family":"Exp","alpha":1.0,"scale":1.0},"base":4.0,"deltas":[0.25,0.0625],"certified_m":[0.1,0.0],"n_max":2,"ensemble_fingerprint":"ab","grid_n":16}"#
        );
        assert_eq!(serde_json::from_str::<Schedule>(&json).unwrap(), s);
        for bad in [
            json.replace("\"base\":4.0", "\"base\":3.0"),
            json.replace("\"n_max\":2", "\"n_max\":3"),
            json.replace("[0.1,0.0]", "[0.3,0.0]"),
            json.replace("[0.25,0.0625]", "[0.0625,0.25]"),
            json.replace("[0.25,0.0625]", "[0.25,0.06]"),
        ] {
            assert!(serde_json::from_str::<Schedule>(&bad).is_err(), "{bad}");
        }
    }

    #[test]
    fn zero_request_is_rejected() {
        let e = gen_brownian(16, 2, 1).unwrap();
        assert!(build_schedule(&e, &psi(), 0, None, DEFAULT_TOL).is_err());
    }
}
