use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};

/// Parametric shape of an Orlicz function.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Family {
    /// `|u|^p`, `p >= 1`.
    Power { p: f64 },
    /// `exp(|u|^alpha) - 1`, `alpha >= 1`.
    Exp { alpha: f64 },
    /// `|u|^a` on `[0, 1]`, `|u|^b` beyond, with `1 <= a <= b`.
    PiecewisePower { a: f64, b: f64 },
}

/// Whether the underlying measure is a probability or only σ-finite.
///
/// The σ-finite case adds the small-argument condition to [`weaker_than`].
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Measure {
    Probability,
    SigmaFinite,
}

/// An even convex Orlicz function `Φ(u) = F(scale · |u|)` from a fixed catalog.
///
/// JSON form: `{"family":"Exp","alpha":2.0,"scale":1.0}`,
/// `{"family":"Power","p":2.0}`, `{"family":"PiecewisePower","a":2.0,"b":4.0}`.
/// `scale` is optional and defaults to 1. Unknown keys and parameters that
/// belong to another family are rejected.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawOrlicz", into = "RawOrlicz")]
pub struct OrliczFunction {
    family: Family,
    scale: f64,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawOrlicz {
    family: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    p: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    alpha: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    a: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    b: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    scale: Option<f64>,
}

impl TryFrom<RawOrlicz> for OrliczFunction {
    type Error = Error;

    fn try_from(raw: RawOrlicz) -> Result<Self> {
        let family = match raw.family.as_str() {
            "Power" => {
                reject_extra(
                    &raw.family,
                    &[("alpha", raw.alpha), ("a", raw.a), ("b", raw.b)],
                )?;
                Family::Power {
                    p: raw.p.ok_or_else(|| invalid("Power requires field \"p\""))?,
                }
            }
            "Exp" => {
                reject_extra(&raw.family, &[("p", raw.p), ("a", raw.a), ("b", raw.b)])?;
                Family::Exp {
                    alpha: raw
                        .alpha
                        .ok_or_else(|| invalid("Exp requires field \"alpha\""))?,
                }
            }
            "PiecewisePower" => {
                reject_extra(&raw.family, &[("p", raw.p), ("alpha", raw.alpha)])?;
                Family::PiecewisePower {
                    a: raw
                        .a
                        .ok_or_else(|| invalid("PiecewisePower requires field \"a\""))?,
                    b: raw
                        .b
                        .ok_or_else(|| invalid("PiecewisePower requires field \"b\""))?,
                }
            }
            other => return Err(invalid(format!("unknown Orlicz family {other:?}"))),
        };
        OrliczFunction::with_scale(family, raw.scale.unwrap_or(1.0))
    }
}

fn reject_extra(family: &str, fields: &[(&str, Option<f64>)]) -> Result<()> {
    match fields.iter().find(|(_, v)| v.is_some()) {
        Some((name, _)) => Err(invalid(format!(
            "field {name:?} does not apply to family {family}"
        ))),
        None => Ok(()),
    }
}

impl From<OrliczFunction> for RawOrlicz {
    fn from(f: OrliczFunction) -> Self {
        let mut raw = RawOrlicz {
            family: String::new(),
            p: None,
            alpha: None,
            a: None,
            b: None,
            scale: Some(f.scale),
        };
        match f.family {
            Family::Power { p } => {
                raw.family = "Power".into();
                raw.p = Some(p);
            }
            Family::Exp { alpha } => {
                raw.family = "Exp".into();
                raw.alpha = Some(alpha);
            }
            Family::PiecewisePower { a, b } => {
                raw.family = "PiecewisePower".into();
                raw.a = Some(a);
                raw.b = Some(b);
            }
        }
        raw
    }
}

impl fmt::Display for OrliczFunction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.family {
            Family::Power { p } => write!(f, "Power({p})")?,
            Family::Exp { alpha } => write!(f, "Exp({alpha})")?,
            Family::PiecewisePower { a, b } => write!(f, "PiecewisePower({a},{b})")?,
        }
        if self.scale != 1.0 {
            write!(f, "[scale={}]", self.scale)?;
        }
        Ok(())
    }
}

// Growth of the base function at infinity.
enum Growth {
    Poly(f64),
    ExpPow(f64),
}

impl OrliczFunction {
    pub fn new(family: Family) -> Result<Self> {
        Self::with_scale(family, 1.0)
    }

    pub fn with_scale(family: Family, scale: f64) -> Result<Self> {
        if !(scale.is_finite() && scale > 0.0) {
            return Err(invalid(format!(
                "scale must be positive and finite, got {scale}"
            )));
        }
        match family {
            Family::Power { p } if !(p.is_finite() && p >= 1.0) => {
                Err(invalid(format!("Power exponent must be >= 1, got {p}")))
            }
            Family::Exp { alpha } if !(alpha.is_finite() && alpha >= 1.0) => {
                Err(invalid(format!("Exp exponent must be >= 1, got {alpha}")))
            }
            Family::PiecewisePower { a, b }
                if !(a.is_finite() && b.is_finite() && a >= 1.0 && b >= a) =>
            {
                Err(invalid(format!(
                    "PiecewisePower needs 1 <= a <= b, got a = {a}, b = {b}"
                )))
            }
            _ => Ok(Self { family, scale }),
        }
    }

    pub fn power(p: f64) -> Result<Self> {
        Self::new(Family::Power { p })
    }

    pub fn exp(alpha: f64) -> Result<Self> {
        Self::new(Family::Exp { alpha })
    }

    pub fn piecewise_power(a: f64, b: f64) -> Result<Self> {
        Self::new(Family::PiecewisePower { a, b })
    }

    pub fn family(&self) -> Family {
        self.family
    }

    pub fn scale(&self) -> f64 {
        self.scale
    }

    /// `Φ(u)`. Overflow saturates to `+∞`; a NaN argument yields NaN.
    pub fn evaluate(&self, u: f64) -> f64 {
        let x = u.abs() * self.scale;
        match self.family {
            Family::Power { p } => x.powf(p),
            Family::Exp { alpha } => x.powf(alpha).exp_m1(),
            Family::PiecewisePower { a, b } => {
                if x <= 1.0 {
                    x.powf(a)
                } else {
                    x.powf(b)
                }
            }
        }
    }

    /// `ln Φ(u)`, accurate where `Φ(u)` itself under- or overflows.
    pub fn ln_evaluate(&self, u: f64) -> f64 {
        let x = u.abs() * self.scale;
        if x == 0.0 {
            return f64::NEG_INFINITY;
        }
        let lx = x.ln();
        match self.family {
            Family::Power { p } => p * lx,
            Family::PiecewisePower { a, b } => {
                if x <= 1.0 {
                    a * lx
                } else {
                    b * lx
                }
            }
            Family::Exp { alpha } => {
                let ln_y = alpha * lx;
                let y = x.powf(alpha);
                if y < 1e-8 {
                    // ln(expm1(y)) = ln y + y/2 + O(y^2)
                    ln_y + 0.5 * y
                } else if y > 40.0 {
                    y + (-(-y).exp()).ln_1p()
                } else {
                    y.exp_m1().ln()
                }
            }
        }
    }

    /// Exponent `e` with `Φ(u) ≍ u^e` as `u → 0+`.
    fn exponent_at_zero(&self) -> f64 {
        match self.family {
            Family::Power { p } => p,
            Family::Exp { alpha } => alpha,
            Family::PiecewisePower { a, .. } => a,
        }
    }

    fn growth_at_infinity(&self) -> Growth {
        match self.family {
            Family::Power { p } => Growth::Poly(p),
            Family::PiecewisePower { b, .. } => Growth::Poly(b),
            Family::Exp { alpha } => Growth::ExpPow(alpha),
        }
    }
}

/// Whether `limsup Φ(2u)/Φ(u) < ∞`, decided analytically per family.
///
/// Polynomial families satisfy the condition; the exponential family does not.
/// [`delta2_probe`] gives the independent numeric answer.
pub fn is_delta2(phi: &OrliczFunction) -> bool {
    !matches!(phi.family, Family::Exp { .. })
}

/// Numeric Δ2 probe along `u = 2^k`, `k = 4..=40`.
///
/// Declares the ratio unbounded when its logarithm increases strictly over the
/// last three grid points and the final ratio exceeds `10^6`.
pub fn delta2_probe(phi: &OrliczFunction) -> bool {
    let log_ratios: Vec<f64> = (4..=40)
        .map(|k| {
            let u = 2f64.powi(k);
            phi.ln_evaluate(2.0 * u) - phi.ln_evaluate(u)
        })
        .collect();
    let tail = &log_ratios[log_ratios.len() - 4..];
    let increasing = tail.windows(2).all(|w| w[1] > w[0]);
    let large = tail[3] > 1e6f64.ln();
    !(increasing && large)
}

const PROBE_VS: [f64; 4] = [0.5, 1.0, 2.0, 10.0];
const PROBE_MAX_K: i32 = 1000;
const PROBE_STREAK: usize = 3;

/// Whether `Ψ` is weaker than `Φ` (`Ψ << Φ`).
///
/// Probability mode: `Ψ(vu)/Φ(u) → 0` as `u → ∞` for every `v > 0`. σ-finite
/// mode additionally requires the same limit as `u → 0+`. The answer is decided
/// analytically by comparing growth exponents and confirmed by a numeric probe
/// over `v ∈ {0.5, 1, 2, 10}`, `u = 2^{±k}`: the ratio must drop below `10^-6`
/// and then decrease for three consecutive `k`. Disagreement between the two
/// yields [`Error::Inconclusive`].
///
/// Scales never affect the answer since `v` ranges over all positive reals.
pub fn weaker_than(psi: &OrliczFunction, phi: &OrliczFunction, mode: Measure) -> Result<bool> {
    let at_inf = weaker_at_infinity_analytic(psi, phi);
    check_probe(
        at_inf,
        ratio_vanishes(psi, phi, 1.0),
        psi,
        phi,
        "u -> infinity",
    )?;
    if !at_inf || mode == Measure::Probability {
        return Ok(at_inf);
    }
    let at_zero = psi.exponent_at_zero() > phi.exponent_at_zero();
    check_probe(at_zero, ratio_vanishes(psi, phi, -1.0), psi, phi, "u -> 0+")?;
    Ok(at_zero)
}

fn check_probe(
    analytic: bool,
    numeric: bool,
    psi: &OrliczFunction,
    phi: &OrliczFunction,
    side: &str,
) -> Result<()> {
    if analytic == numeric {
        Ok(())
    } else {
        Err(Error::Inconclusive(format!(
            "{psi} vs {phi} as {side}: analytic rule says {analytic}, numeric probe says {numeric}"
        )))
    }
}

fn weaker_at_infinity_analytic(psi: &OrliczFunction, phi: &OrliczFunction) -> bool {
    match (psi.growth_at_infinity(), phi.growth_at_infinity()) {
        (Growth::Poly(e1), Growth::Poly(e2)) => e1 < e2,
        (Growth::Poly(_), Growth::ExpPow(_)) => true,
        (Growth::ExpPow(_), Growth::Poly(_)) => false,
        (Growth::ExpPow(a1), Growth::ExpPow(a2)) => a1 < a2,
    }
}

// `direction` = +1 probes u = 2^k, -1 probes u = 2^-k.
fn ratio_vanishes(psi: &OrliczFunction, phi: &OrliczFunction, direction: f64) -> bool {
    let threshold = 1e-6f64.ln();
    PROBE_VS.iter().all(|&v| {
        let mut prev: Option<f64> = None;
        let mut streak = 0usize;
        let mut below = false;
        for k in 1..=PROBE_MAX_K {
            let u = 2f64.powf(direction * f64::from(k));
            let lr = psi.ln_evaluate(v * u) - phi.ln_evaluate(u);
            if lr.is_nan() {
                return false;
            }
            if below {
                match prev {
                    Some(p) if lr < p => streak += 1,
                    _ => streak = 0,
                }
                if streak >= PROBE_STREAK {
                    return true;
                }
            }
            if lr < threshold {
                below = true;
            }
            prev = Some(lr);
        }
        false
    })
}

/// Constant `c*` with `||η||_Ψ <= c* · ||η||_Φ` for probability samples.
///
/// `c` is the smallest point of the grid `2^{j/64}`, `|j| <= 64·40`, with
/// `Ψ(u/c) <= max(Φ(u), 1)` for all `u = 2^{i/8}` in `[2^-20, 2^20]`; then
/// `E Ψ(|η|/(c λ)) <= 2` with `λ = ||η||_Φ`, and convexity halves that to 1 at
/// `c* = 2c`.
///
/// Requires `Ψ << Φ` (probability mode) or `Ψ = Φ`; otherwise, or when no grid
/// constant works, the result is [`Error::Unbounded`].
pub fn embedding_constant(psi: &OrliczFunction, phi: &OrliczFunction) -> Result<f64> {
    if psi != phi && !weaker_than(psi, phi, Measure::Probability)? {
        return Err(Error::Unbounded(format!(
            "{psi} is neither equal to nor weaker than {phi}"
        )));
    }
    let test_grid: Vec<f64> = (-160..=160)
        .map(|i| 2f64.powf(f64::from(i) / 8.0))
        .collect();
    let dominated = |j: i32| {
        let c = 2f64.powf(f64::from(j) / 64.0);
        test_grid
            .iter()
            .all(|&u| psi.evaluate(u / c) <= phi.evaluate(u).max(1.0))
    };
    const J_MAX: i32 = 64 * 40;
    if !dominated(J_MAX) {
        return Err(Error::Unbounded(format!(
            "no constant up to 2^40 dominates {psi} by {phi} on the test grid"
        )));
    }
    if dominated(-J_MAX) {
        return Ok(2.0 * 2f64.powf(-40.0));
    }
    // invariant: dominated(hi) && !dominated(lo)
    let (mut lo, mut hi) = (-J_MAX, J_MAX);
    while hi - lo > 1 {
        let mid = lo + (hi - lo) / 2;
        if dominated(mid) {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    Ok(2.0 * 2f64.powf(f64::from(hi) / 64.0))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn catalog() -> Vec<OrliczFunction> {
        vec![
            OrliczFunction::power(1.0).unwrap(),
            OrliczFunction::power(2.0).unwrap(),
            OrliczFunction::power(3.0).unwrap(),
            OrliczFunction::exp(1.0).unwrap(),
            OrliczFunction::exp(2.0).unwrap(),
            OrliczFunction::piecewise_power(2.0, 4.0).unwrap(),
            OrliczFunction::piecewise_power(1.0, 1.5).unwrap(),
        ]
    }

    #[test]
    fn evaluate_examples() {
        assert_eq!(OrliczFunction::power(2.0).unwrap().evaluate(3.0), 9.0);
        assert_eq!(OrliczFunction::exp(1.0).unwrap().evaluate(0.0), 0.0);
        assert_relative_eq!(
            OrliczFunction::exp(2.0).unwrap().evaluate(1.0),
            std::f64::consts::E - 1.0,
            max_relative = 1e-15
        );
        let pp = OrliczFunction::piecewise_power(2.0, 4.0).unwrap();
        assert_eq!(pp.evaluate(0.5), 0.25);
        assert_eq!(pp.evaluate(-2.0), 16.0);
    }

    #[test]
    fn evaluate_saturates() {
        let e = OrliczFunction::exp(2.0).unwrap();
        assert_eq!(e.evaluate(1e200), f64::INFINITY);
        assert!(e.ln_evaluate(1e200).is_infinite());
        assert_relative_eq!(e.ln_evaluate(1e100), 1e200, max_relative = 1e-15);
        assert_relative_eq!(e.ln_evaluate(30.0), 900.0, max_relative = 1e-15);
    }

    #[test]
    fn ln_evaluate_matches_direct() {
        for phi in catalog() {
            for &u in &[1e-3, 0.1, 0.7, 1.0, 1.5, 3.0, 5.0] {
                assert_relative_eq!(
                    phi.ln_evaluate(u),
                    phi.evaluate(u).ln(),
                    max_relative = 1e-9,
                    epsilon = 1e-12
                );
            }
        }
    }

    #[test]
    fn scale_multiplies_argument() {
        let phi = OrliczFunction::with_scale(Family::Power { p: 2.0 }, 3.0).unwrap();
        assert_eq!(phi.evaluate(2.0), 36.0);
    }

    #[test]
    fn catalog_invariants_on_grid() {
        let grid: Vec<f64> = (0..=400).map(|i| f64::from(i) * 0.025).collect();
        for phi in catalog() {
            assert_eq!(phi.evaluate(0.0), 0.0);
            for w in grid.windows(3) {
                assert_eq!(phi.evaluate(w[1]), phi.evaluate(-w[1]));
                assert!(phi.evaluate(w[1]) < phi.evaluate(w[2]) || w[1] == 0.0 && w[2] == 0.0);
                let mid = phi.evaluate(0.5 * (w[0] + w[2]));
                assert!(mid <= 0.5 * (phi.evaluate(w[0]) + phi.evaluate(w[2])) * (1.0 + 1e-12));
            }
            let mut prev = 0.0;
            let mut u = 1.0;
            for _ in 0..12 {
                u *= 2.0;
                let v = phi.evaluate(u);
                assert!(v > prev || v == f64::INFINITY);
                prev = v;
            }
            assert!(prev > 1e3);
        }
    }

    #[test]
    fn invalid_parameters_rejected() {
        assert!(OrliczFunction::power(0.5).is_err());
        assert!(OrliczFunction::exp(0.9).is_err());
        assert!(OrliczFunction::piecewise_power(3.0, 2.0).is_err());
        assert!(OrliczFunction::with_scale(Family::Power { p: 2.0 }, 0.0).is_err());
        assert!(OrliczFunction::power(f64::NAN).is_err());
    }

    #[test]
    fn delta2_examples_and_probe_agree() {
        assert!(is_delta2(&OrliczFunction::power(3.0).unwrap()));
        assert!(!is_delta2(&OrliczFunction::exp(1.0).unwrap()));
        assert!(is_delta2(
            &OrliczFunction::piecewise_power(2.0, 4.0).unwrap()
        ));
        for phi in catalog() {
            assert_eq!(is_delta2(&phi), delta2_probe(&phi), "{phi}");
        }
    }

    #[test]
    fn weaker_than_examples() {
        let p2 = OrliczFunction::power(2.0).unwrap();
        let p3 = OrliczFunction::power(3.0).unwrap();
        let e1 = OrliczFunction::exp(1.0).unwrap();
        let pp = OrliczFunction::piecewise_power(2.0, 4.0).unwrap();
        assert!(weaker_than(&p2, &e1, Measure::Probability).unwrap());
        assert!(!weaker_than(&e1, &e1, Measure::Probability).unwrap());
        assert!(weaker_than(&p3, &pp, Measure::SigmaFinite).unwrap());
        assert!(weaker_than(&p3, &e1, Measure::Probability).unwrap());
        assert!(weaker_than(&p2, &p3, Measure::Probability).unwrap());
        // near zero (vu)^2 / u^3 blows up
        assert!(!weaker_than(&p2, &p3, Measure::SigmaFinite).unwrap());
    }

    #[test]
    fn weaker_than_is_irreflexive_and_never_inconclusive_on_catalog() {
        for psi in catalog() {
            for mode in [Measure::Probability, Measure::SigmaFinite] {
                assert!(!weaker_than(&psi, &psi, mode).unwrap(), "{psi}");
            }
            for phi in catalog() {
                for mode in [Measure::Probability, Measure::SigmaFinite] {
                    weaker_than(&psi, &phi, mode).unwrap_or_else(|e| panic!("{psi} vs {phi}: {e}"));
                }
            }
        }
    }

    #[test]
    fn embedding_constant_examples() {
        let p2 = OrliczFunction::power(2.0).unwrap();
        let e1 = OrliczFunction::exp(1.0).unwrap();
        let e2 = OrliczFunction::exp(2.0).unwrap();
        assert_eq!(embedding_constant(&p2, &p2).unwrap(), 2.0);
        let c = embedding_constant(&p2, &e1).unwrap();
        assert!(c.is_finite() && c >= 2.0 * std::f64::consts::LN_2, "{c}");
        assert!(matches!(
            embedding_constant(&e2, &p2),
            Err(Error::Unbounded(_))
        ));
    }

    #[test]
    fn json_schema() {
        let phi: OrliczFunction =
            serde_json::from_str(r#"{"family":"Exp","alpha":2.0,"scale":1.0}"#).unwrap();
        assert_eq!(phi, OrliczFunction::exp(2.0).unwrap());
        let psi: OrliczFunction = serde_json::from_str(r#"{"family":"Power","p":2}"#).unwrap();
        assert_eq!(psi.scale(), 1.0);
        assert_eq!(
            serde_json::to_string(&psi).unwrap(),
            r#"{"family":"Power","p":2.0,"scale":1.0}"#
        );
        let pp: OrliczFunction =
            serde_json::from_str(r#"{"family":"PiecewisePower","a":2,"b":4}"#).unwrap();
        assert_eq!(pp, OrliczFunction::piecewise_power(2.0, 4.0).unwrap());
        for bad in [
            r#"{"family":"Power","alpha":2}"#,
            r#"{"family":"Power","p":2,"extra":1}"#,
            r#"{"family":"Gauss","p":2}"#,
            r#"{"family":"Exp","alpha":0.5}"#,
            r#"{"family":"PiecewisePower","a":2}"#,
        ] {
            assert!(
                serde_json::from_str::<OrliczFunction>(bad).is_err(),
                "{bad}"
            );
        }
    }
}
