use osup_core::compactness::{
    covering_bound, empirical_net, equicontinuity_bound, sample_unit_ball,
};
use osup_core::orlicz::{OrliczFunction, DEFAULT_TOL};
use osup_core::paths::{gen_brownian, Path};
use osup_core::support::{
    build_schedule, build_schedule_with, enhanced_norm, factorization, level_target,
    ModulusNormOracle, Schedule,
};
use osup_core::Result;
use proptest::prelude::*;

struct Identity(usize);

impl ModulusNormOracle for Identity {
    fn grid_n(&self) -> usize {
        self.0
    }
    fn m_at(&self, steps: usize) -> Result<f64> {
        Ok(steps as f64 / self.0 as f64)
    }
}

fn psi() -> OrliczFunction {
    OrliczFunction::exp(1.0).unwrap()
}

fn quartic(n_max: usize, grid_n: usize) -> Schedule {
    build_schedule_with(&Identity(grid_n), psi(), n_max, String::new()).unwrap()
}

#[test]
fn identity_oracle_inverts_to_powers_of_four() {
    let s = quartic(5, 4096);
    for n in 1..=5 {
        assert!((s.delta(n) - level_target(n)).abs() <= 1.0 / 4096.0);
    }
}

fn path_on(n: usize) -> impl Strategy<Value = Path> {
    prop::collection::vec(-10.0f64..10.0, n + 1).prop_map(|v| Path::new(v).unwrap())
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(500))]

    #[test]
    fn enhanced_norm_is_a_norm(f in path_on(256), g in path_on(256), a in -8.0f64..8.0) {
        let s = quartic(4, 256);
        let nf = enhanced_norm(&f, &s).unwrap();
        let ng = enhanced_norm(&g, &s).unwrap();
        // powers of two scale every term exactly
        let a2 = 2f64.powi(a as i32);
        prop_assert_eq!(enhanced_norm(&f.scaled(a2), &s).unwrap(), a2 * nf);
        prop_assert_eq!(enhanced_norm(&f.scaled(-a2), &s).unwrap(), a2 * nf);
        let nfa = enhanced_norm(&f.scaled(a), &s).unwrap();
        prop_assert!((nfa - a.abs() * nf).abs() <= 1e-12 * nf);
        let sum = Path::new(f.values().iter().zip(g.values()).map(|(x, y)| x + y).collect()).unwrap();
        prop_assert!(enhanced_norm(&sum, &s).unwrap() <= (nf + ng) * (1.0 + 1e-15));
        prop_assert!(f.sup_norm() <= nf);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(100))]

    #[test]
    fn factorization_bound_on_every_grid_pair(f in path_on(128)) {
        let s = quartic(3, 128);
        let r = factorization(&s);
        let z = enhanced_norm(&f, &s).unwrap();
        let v = f.values();
        for i in 0..v.len() {
            for j in 0..v.len() {
                prop_assert!((v[i] - v[j]).abs() <= z * r.grid_distance(i, j), "{i} {j}");
            }
        }
    }
}

#[test]
fn unit_ball_is_equicontinuous_and_coverable() {
    let s = quartic(5, 1024);
    let ball = sample_unit_ball(&s, 200, 17).unwrap();
    for g in ball.paths() {
        for n in 1..=s.n_max() {
            let k = (s.delta(n) * 1024.0).round() as usize;
            let osc = 4.0 * g.modulus_steps(k);
            assert!(osc <= equicontinuity_bound(&s, n).unwrap());
        }
    }
    let cover = covering_bound(&s, 0.5).unwrap();
    let net = empirical_net(&ball, 0.5).unwrap();
    assert!((net as f64).ln() <= cover.log_bound);
    assert_eq!(empirical_net(&ball, 2.0).unwrap(), 1);
}

#[test]
fn brownian_schedule_certifies_each_level() {
    let e = gen_brownian(1024, 300, 2).unwrap();
    let s = build_schedule(&e, &psi(), 8, None, DEFAULT_TOL).unwrap();
    assert!(s.n_max() >= 1);
    for (n, m) in s.certified_m().iter().enumerate() {
        assert!(*m <= level_target(n + 1));
    }
    assert!(s.deltas().windows(2).all(|w| w[1] < w[0]));
    assert!(s.telescoped_sum() < 1.0);
}
