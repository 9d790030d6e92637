use std::sync::OnceLock;

use fracsp::energy::Functional;
use fracsp::grid::{GridSpec, RealField};
use fracsp::model::*;
use fracsp::multisolve::*;

fn grid() -> GridSpec {
    GridSpec::cubic(16, 10.0, 1.0).unwrap()
}

fn functional() -> &'static Functional {
    static F: OnceLock<Functional> = OnceLock::new();
    F.get_or_init(|| Functional::new(grid(), Potential::harmonic(), builtin_log_quartic()).unwrap())
}

fn basis() -> &'static EigenBasis {
    static B: OnceLock<EigenBasis> = OnceLock::new();
    B.get_or_init(|| schrodinger_eigenbasis(&grid(), functional().potential_field(), 1.0, 20).unwrap())
}

fn solutions() -> &'static SolutionSet {
    static S: OnceLock<SolutionSet> = OnceLock::new();
    S.get_or_init(|| find_solutions(functional(), basis(), &SolverOptions::default()).unwrap())
}

fn gaussian(scale: f64) -> RealField {
    RealField::from_fn(grid(), |x| {
        scale * (-(x[0] * x[0] + x[1] * x[1] + x[2] * x[2]) / 2.0).exp()
    })
    .unwrap()
}

#[test]
fn nehari_projection_lands_on_the_manifold() {
    let f = functional();
    for scale in [0.05, 1.0, 20.0] {
        let u = nehari_project(f, &gaussian(scale), 1e3).unwrap().unwrap();
        let du = f.derivative(&u, &u).unwrap();
        let n2 = f.norm_e(&u).unwrap().powi(2);
        assert!(du.abs() <= 1e-8 * n2, "scale {scale}: {du} vs {n2}");
        assert!(f.energy(&u).unwrap().total > 0.0);
    }
    let zero = RealField::zeros(grid());
    assert!(nehari_project(f, &zero, 1e3).unwrap().is_none());
}

#[test]
fn symmetrize_projects_onto_classes() {
    let mut rng = <rand_chacha::ChaCha8Rng as rand::SeedableRng>::seed_from_u64(4);
    let u = RealField::random_bumps(grid(), &mut rng, 3, 1.0);
    for class in CANONICAL_CLASSES {
        let s = symmetrize(&u, class);
        assert_eq!(symmetrize(&s, class), s);
        for (axis, &sign) in class.iter().enumerate() {
            let r = s.reflected(axis).scaled(f64::from(sign));
            assert!(r.sub(&s).unwrap().max_abs() <= 1e-14);
        }
    }
}

#[test]
fn finds_three_distinct_solutions_with_partners() {
    let set = solutions();
    assert!(!set.shortfall);
    assert!(set.len() >= 3);
    for r in &set.records {
        assert!(r.residual_preconditioned <= r.threshold);
        assert!(r.partner_residual_preconditioned <= r.threshold);
        assert!((r.partner_energy - r.energy.total).abs() <= 1e-10 * r.energy.total.abs());
        assert!(r.norm_e >= 1e-3);
    }
    for i in 0..set.len() {
        for j in 0..i {
            let gap = (set.records[i].energy.total - set.records[j].energy.total).abs();
            assert!(gap > 1e-3);
            assert!(set.distances[i][j] > 1e-2);
        }
    }
    let e: Vec<f64> = set.records.iter().map(|r| r.energy.total).collect();
    assert!(e.windows(2).all(|w| w[0] <= w[1]), "{e:?}");
}

#[test]
fn verification_of_found_and_perturbed_states() {
    let f = functional();
    let set = solutions();
    let u = &set.fields[0];
    let rep = verify_solution(f, u, 1e-6, 0).unwrap();
    assert!(rep.pass);
    assert_eq!(rep.test_fields, 50);
    let ratio = rep.weak_residual / rep.strong_preconditioned;
    assert!((0.1..=10.0).contains(&ratio), "{ratio}");
    assert!(rep.poisson_residual < 0.05);

    let e1 = basis().combine(0, &[1.0]);
    let bumped = u.axpy(0.1, &e1).unwrap();
    let bad = verify_solution(f, &bumped, 1e-6, 0).unwrap();
    assert!(!bad.pass);
    assert!(bad.strong_preconditioned > 100.0 * rep.strong_preconditioned);
    let ratio = bad.weak_residual / bad.strong_preconditioned;
    assert!((0.1..=10.0).contains(&ratio), "{ratio}");
}

#[test]
fn verification_of_zero_is_exactly_critical() {
    let rep = verify_solution(functional(), &RealField::zeros(grid()), 1e-6, 0).unwrap();
    assert_eq!(rep.norm_e, 0.0);
    assert_eq!(rep.weak_residual, 0.0);
    assert_eq!(rep.strong_l2, 0.0);
    assert!(rep.pass);
}

#[test]
fn unreachable_tolerance_reports_shortfall() {
    let opts = SolverOptions {
        tol: 1e-30,
        max_iterations: 30,
        max_restarts: 0,
        classes: CANONICAL_CLASSES[..2].to_vec(),
        ..Default::default()
    };
    let set = find_solutions(functional(), basis(), &opts).unwrap();
    assert!(set.shortfall);
    assert!(set.records.is_empty());
    assert!(set
        .attempts
        .iter()
        .all(|a| matches!(a.outcome, Outcome::IterationBudget | Outcome::Stalled)));
}

#[test]
fn zero_nonlinearity_has_no_nehari_root() {
    let f = Functional::new(grid(), Potential::harmonic(), zero()).unwrap();
    let opts = SolverOptions {
        max_restarts: 1,
        ..Default::default()
    };
    let set = find_solutions(&f, basis(), &opts).unwrap();
    assert!(set.shortfall && set.is_empty());
    assert!(!set.attempts.is_empty());
    assert!(set.attempts.iter().all(|a| a.outcome == Outcome::NoNehariRoot));
}

#[test]
fn runs_are_deterministic_and_saved() {
    let opts = SolverOptions {
        count_target: 2,
        ..Default::default()
    };
    let a = find_solutions(functional(), basis(), &opts).unwrap();
    let b = find_solutions(functional(), basis(), &opts).unwrap();
    assert_eq!(a.len(), b.len());
    for (x, y) in a.fields.iter().zip(&b.fields) {
        assert_eq!(x, y);
    }
    let dir = tempfile::tempdir().unwrap();
    a.save(dir.path()).unwrap();
    for i in 0..a.len() {
        let u = fracsp::io::load_field(dir.path().join(format!("solution_{i:03}.fld"))).unwrap();
        assert_eq!(u, a.fields[i]);
    }
    let index: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(dir.path().join("index.json")).unwrap()).unwrap();
    assert_eq!(index["records"].as_array().unwrap().len(), a.len());
}
