//! Cross-module checks: operator files, solve reports, gauge conjugation.

use gsh::fourier::{analyze_partial, synthesize, GridFunction, GridSpec, SpectralField, SpectralFieldJson};
use gsh::global_solver::{annihilator_test, apply_operator, random_field, solve, Annihilator, SolveOptions};
use gsh::operator_model::{catalog, classify, gauge_reduce, ClassifyOptions, EvolutionOperator, Status};
use num_complex::Complex64;
use proptest::prelude::*;

#[test]
fn every_catalog_operator_survives_json() {
    for (name, op) in catalog::named() {
        let text = serde_json::to_string(&op.to_json()).unwrap();
        let back = EvolutionOperator::parse(&text).unwrap();
        assert_eq!(back, op, "{name}");
    }
}

#[test]
fn verdicts_are_decided_on_the_catalog() {
    let opts = ClassifyOptions { bound: 8, probe_bound: 8 };
    for (name, op) in catalog::named() {
        let c = classify(&op, &opts);
        assert_ne!(c.gs.status, Status::UnknownAtBound, "{name}");
        assert_ne!(c.gh.status, Status::UnknownAtBound, "{name}");
        // GH never holds without GS
        if c.gh.status == Status::Yes {
            assert_eq!(c.gs.status, Status::Yes, "{name}");
        }
    }
}

#[test]
fn solve_from_grid_samples() {
    let op = catalog::span_one_irrational_damping();
    let u = random_field(1, 1, 128, 3, 2, 0.2, 11).unwrap();
    let g = apply_operator(&op, &u).unwrap();
    let spec = GridSpec::for_bound(1, 1, g.n_t, g.bound);
    let grid: GridFunction = synthesize(&g, &spec).unwrap();
    let bytes = grid.to_bytes();
    let g2 = analyze_partial(&GridFunction::from_bytes(&bytes).unwrap(), g.bound).unwrap();
    assert!(g2.max_diff(&g) < 1e-11);
    let rep = solve(&op, &g2, &SolveOptions::default()).unwrap();
    assert!(rep.residual_sup < 1e-9);
    assert!(rep.u.max_diff(&u) < 1e-9);
    let j = rep.to_json();
    assert!(j["residual_sup"].as_f64().unwrap() < 1e-9);
    let back = SpectralField::try_from(serde_json::from_value::<SpectralFieldJson>(j["u"].clone()).unwrap()).unwrap();
    assert!(back.max_diff(&rep.u) == 0.0);
}

#[test]
fn range_membership_matches_solvability() {
    let op = catalog::rotating_connected();
    let u = random_field(1, 1, 64, 2, 2, 0.0, 5).unwrap();
    let g = apply_operator(&op, &u).unwrap();
    assert_eq!(annihilator_test(&op, &g, usize::MAX).unwrap(), Annihilator::In);
    // the constant mode has theta = 3i, so e^{-3it} pairs to 2 pi against its kernel
    let mut bad = g.clone();
    let key = bad.table.keys().find(|m| m.xi == vec![0] && m.l[0].to_f64() == 0.0).unwrap().clone();
    let n = bad.n_t;
    for (j, v) in bad.table.get_mut(&key).unwrap().iter_mut().enumerate() {
        *v += Complex64::from_polar(1.0, -3.0 * std::f64::consts::TAU * j as f64 / n as f64);
    }
    assert!(!annihilator_test(&op, &bad, usize::MAX).unwrap().is_in());
    assert!(solve(&op, &bad, &SolveOptions::default()).is_err());
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(16))]

    #[test]
    fn gauge_conjugates_the_operator(seed in 0u64..1000, which in 0usize..8) {
        let (_, op, _, _) = catalog::golden().swap_remove(which);
        let (reduced, gauge) = gauge_reduce(&op);
        let u = random_field(op.r, op.s, 32, 2, 2, 0.1, seed).unwrap();
        let lhs = apply_operator(&op, &gauge.apply(&u, false)).unwrap();
        let rhs = gauge.apply(&apply_operator(&reduced, &u).unwrap(), false);
        prop_assert!(lhs.max_diff(&rhs) <= 1e-10 * (1.0 + rhs.sup_norm()));
    }

    #[test]
    fn solve_is_linear_on_damped_operator(s1 in 0u64..500, s2 in 500u64..1000, a in -2.0f64..2.0) {
        let op = catalog::span_one_irrational_damping();
        let g1 = random_field(1, 1, 32, 2, 2, 0.0, s1).unwrap();
        let g2 = random_field(1, 1, 32, 2, 2, 0.0, s2).unwrap();
        let k = Complex64::new(a, 0.5);
        let sum = g1.linear_combination(Complex64::new(1.0, 0.0), &g2, k).unwrap();
        let o = SolveOptions::default();
        let (u1, u2, us) = (solve(&op, &g1, &o).unwrap().u, solve(&op, &g2, &o).unwrap().u, solve(&op, &sum, &o).unwrap().u);
        let comb = u1.linear_combination(Complex64::new(1.0, 0.0), &u2, k).unwrap();
        prop_assert!(us.max_diff(&comb) <= 1e-9 * (1.0 + comb.sup_norm()));
    }
}
