use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::curve::ensemble_moduli;
use super::enhanced::{enhanced_norm, schedule_steps};
use super::schedule::{level_weight, Schedule};
use crate::error::{invalid, Error, Result};
use crate::orlicz::{embedding_constant, luxemburg_norm, Measure, OrliczFunction};
use crate::paths::PathEnsemble;

/// Orlicz-norm budget of the support space on one ensemble.
///
/// The chain checked is
/// `||enhanced||_Ψ <= ||sup||_Ψ + Σ 2^n ||ω(·, δ(n))||_Ψ <= ||sup||_Ψ + 1`,
/// the first step by the Luxemburg triangle inequality (with `max <= Σ`), the
/// second because every level contributes at most `2^n · 4^-n`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SupportBoundReport {
    /// `|| |ξ|_∞ ||_{Or(Ψ)}`.
    pub sup_norm_psi: f64,
    /// `Σ 2^n certified_m(n)` from the schedule.
    pub telescoped_sum: f64,
    /// `|| |ξ|_{∞,ω} ||_{Or(Ψ)}`.
    pub enhanced_norm_psi: f64,
    /// `||ω(·, δ(n))||_{Or(Ψ)}` measured on this ensemble.
    pub remeasured_m: Vec<f64>,
    /// `Σ 2^n remeasured_m(n)`.
    pub remeasured_sum: f64,
    /// `sup_norm_psi + remeasured_sum`.
    pub chain_bound: f64,
    /// `sup_norm_psi + 1`.
    pub step_bound: f64,
    pub bound_satisfied: bool,
    pub holdout: bool,
    pub ensemble_fingerprint: String,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub warnings: Vec<String>,
    /// Domination constant `C` with `||·||_Ψ <= C ||·||_Φ`, when `Φ` is known.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub embedding_constant: Option<f64>,
    /// `|| |ξ|_∞ ||_{Or(Φ)}`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sup_norm_phi: Option<f64>,
    /// `C · sup_norm_phi + 1`, a `Φ`-side bound on `enhanced_norm_psi`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub phi_bound: Option<f64>,
}

impl SupportBoundReport {
    /// Adds the `Φ`-side bound `C ||sup||_Φ + 1` (probability ensembles only).
    pub fn with_phi_bound(
        mut self,
        e: &PathEnsemble,
        psi: &OrliczFunction,
        phi: &OrliczFunction,
        tol: f64,
    ) -> Result<Self> {
        let sample = e.sample_of(e.paths().iter().map(|p| p.sup_norm()).collect())?;
        if sample.measure() != Measure::Probability {
            return Err(invalid(
                "the embedding constant applies to probability ensembles only",
            ));
        }
        let c = embedding_constant(psi, phi)?;
        let norm = luxemburg_norm(phi, &sample, tol)?;
        self.embedding_constant = Some(c);
        self.sup_norm_phi = Some(norm);
        self.phi_bound = Some(c * norm + 1.0);
        Ok(self)
    }
}

/// Training and optional holdout reports.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SupportVerification {
    pub training: SupportBoundReport,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub holdout: Option<SupportBoundReport>,
}

/// Checks the Orlicz bound chain for the support space on its training
/// ensemble, and describes the same quantities on a holdout ensemble.
///
/// Training requires the ensemble fingerprint recorded in the schedule;
/// holdout results are descriptive, and a fingerprint mismatch there is
/// recorded as a warning.
pub fn verify_support_bound(
    e: &PathEnsemble,
    sch: &Schedule,
    psi: &OrliczFunction,
    holdout: Option<&PathEnsemble>,
    tol: f64,
) -> Result<SupportVerification> {
    if sch.psi() != psi {
        return Err(invalid(format!(
            "schedule was built for {} but {psi} was requested",
            sch.psi()
        )));
    }
    let found = e.fingerprint_hex();
    if found != sch.ensemble_fingerprint() {
        return Err(Error::FingerprintMismatch {
            expected: sch.ensemble_fingerprint().to_string(),
            found,
        });
    }
    let training = measure(e, sch, psi, tol, false)?;
    let holdout = holdout
        .map(|h| {
            let mut r = measure(h, sch, psi, tol, true)?;
            if r.ensemble_fingerprint != sch.ensemble_fingerprint() {
                r.warnings.push(format!(
                    "fingerprint mismatch: schedule built on {}, holdout is {}; \
                     the certified levels need not hold here",
                    sch.ensemble_fingerprint(),
                    r.ensemble_fingerprint
                ));
            }
            Ok::<_, Error>(r)
        })
        .transpose()?;
    Ok(SupportVerification { training, holdout })
}

fn measure(
    e: &PathEnsemble,
    sch: &Schedule,
    psi: &OrliczFunction,
    tol: f64,
    holdout: bool,
) -> Result<SupportBoundReport> {
    let steps = schedule_steps(sch, e.n_grid())?;
    let sup_norm_psi = luxemburg_norm(
        psi,
        &e.sample_of(e.paths().iter().map(|p| p.sup_norm()).collect())?,
        tol,
    )?;
    let enhanced: Vec<f64> = e
        .paths()
        .par_iter()
        .map(|p| enhanced_norm(p, sch))
        .collect::<Result<_>>()?;
    let enhanced_norm_psi = luxemburg_norm(psi, &e.sample_of(enhanced)?, tol)?;
    let remeasured_m = steps
        .iter()
        .map(|&k| luxemburg_norm(psi, &e.sample_of(ensemble_moduli(e, k))?, tol))
        .collect::<Result<Vec<f64>>>()?;
    let remeasured_sum: f64 = remeasured_m
        .iter()
        .enumerate()
        .map(|(i, m)| level_weight(i + 1) * m)
        .sum();
    let chain_bound = sup_norm_psi + remeasured_sum;
    let step_bound = sup_norm_psi + 1.0;
    let telescoped_sum = sch.telescoped_sum();
    let slack = |x: f64| x * (1.0 + 10.0 * tol) + 10.0 * tol;
    let bound_satisfied = enhanced_norm_psi <= slack(chain_bound)
        && chain_bound <= slack(step_bound)
        && telescoped_sum < 1.0;
    Ok(SupportBoundReport {
        sup_norm_psi,
        telescoped_sum,
        enhanced_norm_psi,
        remeasured_m,
        remeasured_sum,
        chain_bound,
        step_bound,
        bound_satisfied,
        holdout,
        ensemble_fingerprint: e.fingerprint_hex(),
        warnings: Vec::new(),
        embedding_constant: None,
        sup_norm_phi: None,
        phi_bound: None,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::orlicz::DEFAULT_TOL;
    use crate::paths::{gen_brownian, Path};
    use crate::support::build_schedule;

    fn psi() -> OrliczFunction {
        OrliczFunction::exp(1.0).unwrap()
    }

    #[test]
    fn constant_ensemble_enhanced_equals_sup() {
        let e = PathEnsemble::from_paths(vec![
            Path::new(vec![1.0; 17]).unwrap(),
            Path::new(vec![-3.0; 17]).unwrap(),
        ])
        .unwrap();
        let sch = build_schedule(&e, &psi(), 4, None, DEFAULT_TOL).unwrap();
        let v = verify_support_bound(&e, &sch, &psi(), None, DEFAULT_TOL).unwrap();
        assert_eq!(v.training.enhanced_norm_psi, v.training.sup_norm_psi);
        assert!(v.training.bound_satisfied);
        assert_eq!(v.training.telescoped_sum, 0.0);
    }

    #[test]
    fn brownian_training_bound_holds_and_holdout_is_descriptive() {
        let e = gen_brownian(512, 200, 4).unwrap();
        let h = gen_brownian(512, 200, 5).unwrap();
        let sch = build_schedule(&e, &psi(), 6, None, DEFAULT_TOL).unwrap();
        let v = verify_support_bound(&e, &sch, &psi(), Some(&h), DEFAULT_TOL).unwrap();
        assert!(v.training.bound_satisfied);
        assert!(v.training.telescoped_sum < 1.0);
        assert_eq!(v.training.remeasured_m, sch.certified_m());
        let ho = v.holdout.unwrap();
        assert!(ho.holdout);
        assert_eq!(ho.warnings.len(), 1);
        assert!(ho.enhanced_norm_psi <= ho.chain_bound * (1.0 + 1e-9));
    }

    #[test]
    fn training_fingerprint_must_match() {
        let e = gen_brownian(64, 20, 4).unwrap();
        let other = gen_brownian(64, 20, 6).unwrap();
        let sch = build_schedule(&e, &psi(), 3, None, DEFAULT_TOL).unwrap();
        assert!(matches!(
            verify_support_bound(&other, &sch, &psi(), None, DEFAULT_TOL),
            Err(Error::FingerprintMismatch { .. })
        ));
        let v = verify_support_bound(&e, &sch, &psi(), Some(&e), DEFAULT_TOL).unwrap();
        assert!(v.holdout.unwrap().warnings.is_empty());
        let p2 = OrliczFunction::power(2.0).unwrap();
        assert!(verify_support_bound(&e, &sch, &p2, None, DEFAULT_TOL).is_err());
    }

    #[test]
    fn phi_side_bound_dominates() {
        let e = gen_brownian(256, 200, 8).unwrap();
        let sch = build_schedule(&e, &psi(), 4, None, DEFAULT_TOL).unwrap();
        let v = verify_support_bound(&e, &sch, &psi(), None, DEFAULT_TOL).unwrap();
        let phi = OrliczFunction::exp(2.0).unwrap();
        let r = v
            .training
            .with_phi_bound(&e, &psi(), &phi, DEFAULT_TOL)
            .unwrap();
        let c = r.embedding_constant.unwrap();
        assert!(r.sup_norm_psi <= c * r.sup_norm_phi.unwrap() + 1e-9);
        assert!(r.enhanced_norm_psi <= r.phi_bound.unwrap());
    }
}
