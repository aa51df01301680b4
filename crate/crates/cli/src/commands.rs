use std::fs;
use std::path::{Path, PathBuf};

use osup_core::compactness::{
    covering_bound, empirical_net, equicontinuity_bound, sample_unit_ball,
};
use osup_core::experiments::{
    conjugate, counterexample_argmax, counterexample_sup, dh_probe, tail_exponent,
};
use osup_core::orlicz::{
    delta2_probe, embedding_constant, is_delta2, weaker_than, Measure, OrliczFunction,
};
use osup_core::paths::{
    gen_brownian, gen_gaussian, gen_theta, load_ensemble, save_ensemble, theta_coordinate,
    theta_path, theta_tau, PathEnsemble,
};
use osup_core::support::{
    build_schedule, build_schedule_family, enhanced_norm, family_fingerprint,
    membership_diagnostic, modulus_norm_curve, verify_support_bound, MCurve, Membership, Schedule,
};
use osup_core::Error;
use rayon::prelude::*;
use serde::Serialize;
use serde_json::{json, Value};

use crate::args::*;
use crate::{emit, envelope, guard_outputs, load_wrapped, usage, CliResult, Command};

pub(crate) fn dispatch(command: Command) -> CliResult<()> {
    match command {
        Command::Gen(a) => gen(&a),
        Command::Mcurve(a) => mcurve(&a),
        Command::BuildSupport(a) => build_support(&a),
        Command::EnhancedNorm(a) => enhanced(&a),
        Command::VerifyBound(a) => verify_bound(&a),
        Command::Compactness(a) => compactness(&a),
        Command::Counterexample(a) => counterexample(&a),
        Command::Tail(a) => tail(&a),
        Command::DhProbe(a) => probe(&a),
        Command::Classify(a) => classify(&a),
    }
}

fn seed_of(e: &PathEnsemble) -> Value {
    json!(e.manifest().master_seed)
}

fn load_schedule(path: &Path) -> CliResult<Schedule> {
    load_wrapped(path, "schedule")
}

fn gen(a: &GenArgs) -> CliResult<()> {
    let need = |v: Option<f64>, flag: &str| {
        v.ok_or_else(|| usage(format!("--kind {:?} requires --{flag}", a.kind).to_lowercase()))
    };
    let e = match a.kind {
        GenKind::Brownian => gen_brownian(a.n, a.k, a.seed)?,
        GenKind::Gaussian => {
            let cov = a
                .covariance
                .as_ref()
                .ok_or_else(|| usage("--kind gaussian requires --covariance"))?;
            gen_gaussian(cov, a.n, a.k, a.seed)?
        }
        GenKind::Theta => gen_theta(
            need(a.p, "p")?,
            need(a.half_width, "half-width")?,
            a.n,
            a.k,
            a.seed,
        )?,
    };
    let e = match a.phi {
        Some(phi) => {
            let mut manifest = e.manifest().clone();
            manifest.phi = Some(phi);
            PathEnsemble::new(e.paths().to_vec(), manifest, None)?
        }
        None => e,
    };
    save_ensemble(&e, &a.out)?;
    let report = envelope(
        "gen",
        a,
        json!(a.seed),
        json!({ "ensemble": e.fingerprint_hex() }),
        json!({
            "path": a.out,
            "manifest_path": osup_core::paths::manifest_path(&a.out),
            "manifest": e.manifest(),
        }),
    )?;
    emit(&report, None)
}

fn dyadic_deltas(n: usize) -> Vec<f64> {
    let mut out = Vec::new();
    let mut k = n;
    while k >= 1 {
        out.push(k as f64 / n as f64);
        if k == 1 {
            break;
        }
        k = k.div_ceil(2);
    }
    out
}

fn mcurve(a: &McurveArgs) -> CliResult<()> {
    guard_outputs(&[&a.ensemble], &[a.out.as_ref()])?;
    let e = load_ensemble(&a.ensemble)?;
    let n = e.n_grid();
    let deltas = match (&a.deltas, a.full) {
        (Some(d), _) => d.clone(),
        (None, true) => (1..=n).rev().map(|k| k as f64 / n as f64).collect(),
        (None, false) => dyadic_deltas(n),
    };
    let curve = modulus_norm_curve(&e, &a.psi, &deltas, a.tol)?;
    let report = envelope(
        "mcurve",
        a,
        seed_of(&e),
        json!({ "ensemble": e.fingerprint_hex() }),
        json!({ "curve": curve, "monotone": curve.is_monotone(10.0 * a.tol) }),
    )?;
    emit(&report, a.out.as_deref())
}

#[derive(Serialize)]
struct Advisory {
    phi: OrliczFunction,
    phi_source: &'static str,
    weaker_than: Option<bool>,
    weaker_than_status: String,
    phi_delta2: bool,
    psi_delta2: bool,
}

fn advisory(
    psi: &OrliczFunction,
    phi: OrliczFunction,
    source: &'static str,
    m: Measure,
) -> Advisory {
    let (weaker, status) = match weaker_than(psi, &phi, m) {
        Ok(w) => (Some(w), "DECIDED".to_string()),
        Err(e) => (None, format!("INCONCLUSIVE: {e}")),
    };
    Advisory {
        phi,
        phi_source: source,
        weaker_than: weaker,
        weaker_than_status: status,
        phi_delta2: is_delta2(&phi),
        psi_delta2: is_delta2(psi),
    }
}

fn build_support(a: &BuildSupportArgs) -> CliResult<()> {
    let mut inputs: Vec<&PathBuf> = a.ensemble.iter().collect();
    if let Some(m) = &a.m_oracle {
        inputs.push(m);
    }
    guard_outputs(&inputs, &[a.out.as_ref(), a.schedule_out.as_ref()])?;
    let ensembles = a
        .ensemble
        .iter()
        .map(|p| load_ensemble(p))
        .collect::<osup_core::Result<Vec<_>>>()?;
    let curve: Option<MCurve> = a
        .m_oracle
        .as_deref()
        .map(|p| load_wrapped(p, "curve"))
        .transpose()?;
    let schedule = match (ensembles.as_slice(), &curve) {
        ([e], c) => build_schedule(e, &a.psi, a.n_max, c.as_ref(), a.tol)?,
        (_, Some(_)) => return Err(usage("--m-oracle applies to a single --ensemble only")),
        (many, None) => build_schedule_family(many, &a.psi, a.n_max, a.tol)?,
    };
    let phi = a
        .phi
        .map(|p| (p, "flag"))
        .or_else(|| ensembles[0].manifest().phi.map(|p| (p, "manifest")));
    let advisory = phi.map(|(p, src)| advisory(&a.psi, p, src, a.measure.into()));
    let mut warnings = Vec::new();
    if schedule.n_max() < a.n_max {
        warnings.push(format!(
            "only {} of {} requested levels are reachable on this grid",
            schedule.n_max(),
            a.n_max
        ));
    }
    if let Some(adv) = &advisory {
        if adv.weaker_than != Some(true) {
            warnings.push(format!(
                "Ψ = {} is not known to be weaker than Φ = {}; the Φ-side bound does not apply",
                a.psi, adv.phi
            ));
        }
    }
    if let Some(c) = &curve {
        if c.ensemble_fingerprint != ensembles[0].fingerprint_hex() {
            warnings.push("the m-oracle curve was measured on a different ensemble".into());
        }
    }
    if let Some(p) = &a.schedule_out {
        let mut text = serde_json::to_string_pretty(&schedule)?;
        text.push('\n');
        fs::write(p, text)?;
    }
    let seeds: Vec<u64> = ensembles.iter().map(|e| e.manifest().master_seed).collect();
    let report = envelope(
        "build-support",
        a,
        if seeds.len() == 1 {
            json!(seeds[0])
        } else {
            json!(seeds)
        },
        json!({
            "ensembles": ensembles.iter().map(|e| e.fingerprint_hex()).collect::<Vec<_>>(),
            "family": family_fingerprint(&ensembles),
            "schedule": schedule.fingerprint_hex(),
        }),
        json!({ "schedule": schedule, "advisory": advisory, "warnings": warnings }),
    )?;
    emit(&report, a.out.as_deref())
}

#[derive(Serialize)]
struct PathNorm {
    index: usize,
    sup_norm: f64,
    enhanced_norm: f64,
    terms: Vec<f64>,
    verdict: Membership,
}

fn enhanced(a: &EnhancedNormArgs) -> CliResult<()> {
    guard_outputs(&[&a.ensemble, &a.schedule], &[a.out.as_ref()])?;
    let e = load_ensemble(&a.ensemble)?;
    let sch = load_schedule(&a.schedule)?;
    let rows: Vec<PathNorm> = e
        .paths()
        .par_iter()
        .enumerate()
        .map(|(index, g)| {
            let m = membership_diagnostic(g, &sch)?;
            Ok(PathNorm {
                index,
                sup_norm: g.sup_norm(),
                enhanced_norm: enhanced_norm(g, &sch)?,
                terms: m.terms,
                verdict: m.verdict,
            })
        })
        .collect::<osup_core::Result<_>>()?;
    let consistent = rows
        .iter()
        .filter(|r| r.verdict == Membership::MemberConsistent)
        .count();
    let max = rows.iter().map(|r| r.enhanced_norm).fold(0.0, f64::max);
    let report = envelope(
        "enhanced-norm",
        a,
        seed_of(&e),
        json!({ "ensemble": e.fingerprint_hex(), "schedule": sch.fingerprint_hex() }),
        json!({
            "paths": rows,
            "max_enhanced_norm": max,
            "member_consistent": consistent,
            "inconclusive": rows.len() - consistent,
        }),
    )?;
    emit(&report, a.out.as_deref())
}

fn verify_bound(a: &VerifyBoundArgs) -> CliResult<()> {
    let mut inputs = vec![&a.ensemble, &a.schedule];
    if let Some(h) = &a.holdout {
        inputs.push(h);
    }
    guard_outputs(&inputs, &[a.out.as_ref()])?;
    let e = load_ensemble(&a.ensemble)?;
    let sch = load_schedule(&a.schedule)?;
    let holdout = a.holdout.as_deref().map(load_ensemble).transpose()?;
    let psi = a.psi.unwrap_or(*sch.psi());
    let mut v = verify_support_bound(&e, &sch, &psi, holdout.as_ref(), a.tol)?;
    match (a.phi, e.manifest().phi) {
        (Some(phi), _) => v.training = v.training.with_phi_bound(&e, &psi, &phi, a.tol)?,
        (None, Some(phi)) => match v.training.clone().with_phi_bound(&e, &psi, &phi, a.tol) {
            Ok(t) => v.training = t,
            Err(err) => v
                .training
                .warnings
                .push(format!("no Φ-side bound for manifest Φ = {phi}: {err}")),
        },
        (None, None) => {}
    }
    let report = envelope(
        "verify-bound",
        a,
        seed_of(&e),
        json!({
            "ensemble": e.fingerprint_hex(),
            "holdout": holdout.as_ref().map(|h| h.fingerprint_hex()),
            "schedule": sch.fingerprint_hex(),
            "schedule_ensemble": sch.ensemble_fingerprint(),
        }),
        &v,
    )?;
    emit(&report, a.out.as_deref())
}

fn compactness(a: &CompactnessArgs) -> CliResult<()> {
    guard_outputs(&[&a.schedule], &[a.out.as_ref()])?;
    let sch = load_schedule(&a.schedule)?;
    let levels = (1..=sch.n_max())
        .map(|n| {
            Ok(json!({
                "n": n,
                "delta": sch.delta(n),
                "bound": equicontinuity_bound(&sch, n)?,
            }))
        })
        .collect::<osup_core::Result<Vec<_>>>()?;
    let mut cover = covering_bound(&sch, a.epsilon)?;
    let mut empirical = Value::Null;
    if a.count > 0 {
        let ball = sample_unit_ball(&sch, a.count, a.seed)?;
        cover.empirical_net_size = Some(empirical_net(&ball, a.epsilon)?);
        let mut violations = 0usize;
        for g in ball.paths() {
            for n in 1..=sch.n_max() {
                let k = (sch.delta(n) * sch.grid_n() as f64).round() as usize;
                if 4.0 * g.modulus_steps(k) > equicontinuity_bound(&sch, n)? {
                    violations += 1;
                }
            }
        }
        empirical = json!({
            "count": a.count,
            "fingerprint": ball.fingerprint_hex(),
            "equicontinuity_violations": violations,
        });
    }
    let report = envelope(
        "compactness",
        a,
        json!(a.seed),
        json!({ "schedule": sch.fingerprint_hex() }),
        json!({ "equicontinuity": levels, "covering": cover, "unit_ball": empirical }),
    )?;
    emit(&report, a.out.as_deref())
}

#[derive(Serialize)]
struct CounterexampleRow {
    tau: f64,
    sup_closed_form: f64,
    argmax: f64,
    grid_max: f64,
    grid_argmax: f64,
    relative_error: f64,
    /// Present when `L >= |t*|`.
    argmax_within_one_step: Option<bool>,
}

fn counterexample(a: &CounterexampleArgs) -> CliResult<()> {
    guard_outputs(&[], &[a.out.as_ref()])?;
    let taus: Vec<f64> = match (&a.tau, a.count) {
        (Some(t), _) => t.clone(),
        (None, Some(c)) => (0..c).map(|i| theta_tau(a.seed, i)).collect(),
        (None, None) => return Err(usage("give --tau or --count")),
    };
    let step = 2.0 * a.half_width / a.n as f64;
    let rows: Vec<CounterexampleRow> =
        taus.par_iter()
            .map(|&tau| {
                let exact = counterexample_sup(tau, a.p)?;
                let argmax = counterexample_argmax(tau, a.p)?;
                let g = theta_path(tau, a.p, a.half_width, a.n)?;
                let (j, grid_max) = g.values().iter().copied().enumerate().fold(
                    (0, f64::NEG_INFINITY),
                    |b, (i, v)| if v > b.1 { (i, v) } else { b },
                );
                let grid_argmax = theta_coordinate(a.half_width, a.n, j);
                let relative_error = if exact == 0.0 {
                    grid_max.abs()
                } else {
                    (exact - grid_max).abs() / exact
                };
                Ok(CounterexampleRow {
                    tau,
                    sup_closed_form: exact,
                    argmax,
                    grid_max,
                    grid_argmax,
                    relative_error,
                    argmax_within_one_step: (argmax.abs() <= a.half_width)
                        .then(|| (grid_argmax - argmax).abs() <= step * (1.0 + 1e-12)),
                })
            })
            .collect::<osup_core::Result<_>>()?;
    let worst = rows.iter().map(|r| r.relative_error).fold(0.0, f64::max);
    let report = envelope(
        "counterexample",
        a,
        json!(a.seed),
        json!({}),
        json!({ "q": conjugate(a.p), "rows": rows, "max_relative_error": worst }),
    )?;
    emit(&report, a.out.as_deref())
}

fn read_samples(path: &Path) -> CliResult<Vec<f64>> {
    let text = fs::read_to_string(path)?;
    let mut out = Vec::new();
    for (i, line) in text.lines().enumerate() {
        let t = line.trim();
        if t.is_empty() || t.starts_with('#') {
            continue;
        }
        let v: f64 = t.parse().map_err(|_| Error::Malformed {
            line: i + 1,
            message: format!("not a number: {t:?}"),
        })?;
        out.push(v);
    }
    Ok(out)
}

fn tail(a: &TailArgs) -> CliResult<()> {
    let mut inputs = Vec::new();
    if let Some(s) = &a.samples {
        inputs.push(s);
    }
    guard_outputs(&inputs, &[a.out.as_ref()])?;
    let (samples, exact) = match (&a.samples, a.statistic) {
        (Some(p), _) => (read_samples(p)?, None),
        (None, Some(stat)) => {
            let q = conjugate(a.p);
            if !(a.p > 1.0 && a.p < 2.0) {
                return Err(usage(format!("p must lie in (1, 2), got {}", a.p)));
            }
            let taus: Vec<f64> = (0..a.k)
                .into_par_iter()
                .map(|i| theta_tau(a.seed, i))
                .collect();
            match stat {
                TailStatistic::ThetaSup => (
                    taus.iter().map(|t| t.abs().powf(q) / q).collect(),
                    Some(2.0 / q),
                ),
                TailStatistic::AbsTau => (taus.iter().map(|t| t.abs()).collect(), Some(2.0)),
            }
        }
        (None, None) => return Err(usage("give --samples or --statistic")),
    };
    let reference = a.reference.or(exact).unwrap_or(2.0);
    let r = tail_exponent(&samples, (a.window[0], a.window[1]), reference)?;
    let report = envelope(
        "tail",
        a,
        if a.samples.is_some() {
            Value::Null
        } else {
            json!(a.seed)
        },
        json!({}),
        &r,
    )?;
    emit(&report, a.out.as_deref())
}

fn probe(a: &DhProbeArgs) -> CliResult<()> {
    guard_outputs(&[], &[a.out.as_ref()])?;
    let r = dh_probe(a.p, &a.psi, &a.half_widths, a.k, a.n, a.seed, a.tol)?;
    let report = envelope("dh-probe", a, json!(a.seed), json!({}), &r)?;
    emit(&report, a.out.as_deref())
}

fn classify(a: &ClassifyArgs) -> CliResult<()> {
    guard_outputs(&[], &[a.out.as_ref()])?;
    let measure: Measure = a.measure.into();
    let (weaker, status) = match weaker_than(&a.psi, &a.phi, measure) {
        Ok(w) => (Some(w), "DECIDED".to_string()),
        Err(e @ Error::Inconclusive(_)) => (None, format!("INCONCLUSIVE: {e}")),
        Err(e) => return Err(e.into()),
    };
    let constant = match (measure, embedding_constant(&a.psi, &a.phi)) {
        (Measure::Probability, Ok(c)) => Some(c),
        _ => None,
    };
    let report = envelope(
        "classify",
        a,
        Value::Null,
        json!({}),
        json!({
            "psi": a.psi,
            "phi": a.phi,
            "measure": measure,
            "weaker_than": weaker,
            "weaker_than_status": status,
            "psi_delta2": is_delta2(&a.psi),
            "phi_delta2": is_delta2(&a.phi),
            "psi_delta2_probe": delta2_probe(&a.psi),
            "phi_delta2_probe": delta2_probe(&a.phi),
            "embedding_constant": constant,
        }),
    )?;
    emit(&report, a.out.as_deref())
}
