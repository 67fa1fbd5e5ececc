use pmlab::energy::{pm_energy, LatticeField};
use pmlab::statics::{all_branches, critical_lambda, overstretch_branches, Classification, DirichletBC};
use proptest::prelude::*;

const EPS: f64 = 1e-2;
const N: usize = 100;

#[test]
fn local_minimum_count_along_the_load_sweep() {
    let crit = critical_lambda(EPS).unwrap();
    for k in 0..=300 {
        let lambda = k as f64 * 0.01;
        if (lambda - crit).abs() < 1e-6 {
            continue;
        }
        let branches = all_branches(EPS, &DirichletBC::pulled(lambda).unwrap(), N).unwrap();
        let mins: Vec<_> = branches.iter().filter(|p| p.classification == Classification::LocalMin).collect();
        let expected = if lambda < crit { 1 } else { 2 };
        assert_eq!(mins.len(), expected, "λ = {lambda}");
        for p in mins {
            let over = p.field.elongations().iter().filter(|d| p.field.scaling().scaled(**d).abs() > 1.0).count();
            assert!(over <= 1, "λ = {lambda}: {over} overstretched springs");
        }
    }
}

#[test]
fn high_branch_drops_below_the_elastic_energy_for_large_loads() {
    let p = overstretch_branches(EPS, &DirichletBC::pulled(3.0).unwrap(), N).unwrap();
    let high = &p[0];
    assert!(high.energy < 9.0);
}

#[test]
fn moving_the_overstretched_spring_keeps_the_energy() {
    let p = overstretch_branches(EPS, &DirichletBC::pulled(1.7).unwrap(), N).unwrap();
    let field = &p[0].field;
    let mut incs = field.elongations();
    for target in [0, 13, 50] {
        let last = incs.len() - 1;
        incs.swap(target, last);
        let mut v = vec![0.0];
        for d in &incs {
            v.push(v.last().unwrap() + d);
        }
        let moved = LatticeField::new(v).unwrap();
        let (a, b) = (pm_energy(&moved), pm_energy(field));
        assert!((a - b).abs() <= 1e-14 * b, "{a} vs {b}");
        incs.swap(target, last);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn negative_loads_negate_the_branches(lambda in 0.0f64..3.0) {
        let pos = all_branches(EPS, &DirichletBC::pulled(lambda).unwrap(), N).unwrap();
        let neg = all_branches(EPS, &DirichletBC::pulled(-lambda).unwrap(), N).unwrap();
        prop_assert_eq!(pos.len(), neg.len());
        for (p, q) in pos.iter().zip(&neg) {
            prop_assert!(p.field.values().iter().zip(q.field.values()).all(|(a, b)| *a == -*b));
            prop_assert_eq!(p.classification, q.classification);
        }
    }

    #[test]
    fn every_branch_is_stationary(lambda in 0.0f64..3.0) {
        for p in all_branches(EPS, &DirichletBC::pulled(lambda).unwrap(), N).unwrap() {
            prop_assert!(p.residual <= 1e-10);
        }
    }
}
