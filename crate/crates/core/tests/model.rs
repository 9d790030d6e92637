use fracsp::grid::{GridSpec, RealField};
use fracsp::model::*;
use proptest::prelude::*;

fn grid() -> GridSpec {
    GridSpec::cubic(16, 10.0, 1.0).unwrap()
}

fn builtins() -> Vec<Nonlinearity> {
    vec![
        builtin_log_quartic(),
        builtin_exp_weighted_power(5.0).unwrap(),
        builtin_exp_weighted_power(4.5).unwrap(),
    ]
}

#[test]
fn log_quartic_passes_every_hypothesis() {
    let rep = check_hypotheses(
        &builtin_log_quartic(),
        &Potential::harmonic(),
        &grid(),
        &SamplingPlan::default(),
    )
    .unwrap();
    for c in &rep.checks {
        assert!(c.pass, "{} failed: {:?}", c.id, c.witnesses);
        assert!(c.samples > 0);
    }
    assert!(rep.all_pass);
    assert_eq!(rep.checks.len(), 5);
}

#[test]
fn exp_weighted_power_passes_every_hypothesis() {
    let plan = SamplingPlan {
        u_max: 100.0,
        ..Default::default()
    };
    let rep = check_hypotheses(
        &builtin_exp_weighted_power(5.0).unwrap(),
        &Potential::harmonic(),
        &grid(),
        &plan,
    )
    .unwrap();
    assert!(
        rep.all_pass,
        "{:?}",
        rep.checks.iter().filter(|c| !c.pass).collect::<Vec<_>>()
    );
}

#[test]
fn cubic_fails_divergence_with_witness() {
    let rep = check_hypotheses(
        &power_law(4.0, 1.0).unwrap(),
        &Potential::harmonic(),
        &grid(),
        &SamplingPlan::default(),
    )
    .unwrap();
    let h2 = rep.check("H2").unwrap();
    assert!(!h2.pass);
    assert!(!h2.witnesses.is_empty());
    assert!((h2.witnesses[0].lhs - 0.25).abs() < 1e-12);
    assert!(rep.check("H1").unwrap().pass);
    assert!(!rep.all_pass);
}

#[test]
fn linear_fails_divergence_but_satisfies_growth() {
    let rep = check_hypotheses(
        &power_law(2.0, 1.0).unwrap(),
        &Potential::harmonic(),
        &grid(),
        &SamplingPlan::default(),
    )
    .unwrap();
    assert!(!rep.check("H2").unwrap().pass);
    assert!(rep.check("H1").unwrap().pass);
}

#[test]
fn non_odd_custom_fails_oddness() {
    let nl = custom(
        "shifted",
        std::sync::Arc::new(|_, u| u * u * u * u * u + 1.0),
        None,
        GrowthParams {
            p: 5.0,
            c1: 1.0,
            c2: 1.0,
        },
        0.0,
    );
    let plan = SamplingPlan {
        x_stride: 8,
        u_count: 21,
        random_count: 0,
        ladder_max: 1e3,
        ..Default::default()
    };
    let rep = check_hypotheses(&nl, &Potential::harmonic(), &grid(), &plan).unwrap();
    let h4 = rep.check("H4").unwrap();
    assert!(!h4.pass && !h4.witnesses.is_empty());
}

#[test]
fn potential_failures_carry_witnesses() {
    let g = grid();
    let flat = Potential::constant(2.0);
    let rep = check_hypotheses(&builtin_log_quartic(), &flat, &g, &SamplingPlan::default()).unwrap();
    let v = rep.check("V").unwrap();
    assert!(!v.pass && !v.witnesses.is_empty());

    let field = Potential::harmonic().evaluate(&g).unwrap();
    let undeclared = Potential::Tabulated {
        field: field.clone(),
        coercive: false,
    };
    let rep = check_hypotheses(&builtin_log_quartic(), &undeclared, &g, &SamplingPlan::default()).unwrap();
    assert!(!rep.check("V").unwrap().pass);
    let declared = Potential::Tabulated { field, coercive: true };
    let rep = check_hypotheses(&builtin_log_quartic(), &declared, &g, &SamplingPlan::default()).unwrap();
    assert!(rep.check("V").unwrap().pass);

    let negative = RealField::from_fn(g, |x| x[0]).unwrap();
    let rep = check_hypotheses(
        &builtin_log_quartic(),
        &Potential::Tabulated {
            field: negative,
            coercive: true,
        },
        &g,
        &SamplingPlan::default(),
    )
    .unwrap();
    assert!(!rep.check("V").unwrap().pass);
}

#[test]
fn sign_condition_note_is_reported() {
    let rep = check_hypotheses(
        &builtin_log_quartic(),
        &Potential::harmonic(),
        &grid(),
        &SamplingPlan::default(),
    )
    .unwrap();
    assert!(rep.notes.iter().any(|n| n.contains("u < 0")));
}

#[test]
fn reports_are_deterministic() {
    let plan = SamplingPlan {
        seed: 42,
        ..Default::default()
    };
    let a = check_hypotheses(&builtin_log_quartic(), &Potential::harmonic(), &grid(), &plan).unwrap();
    let b = check_hypotheses(&builtin_log_quartic(), &Potential::harmonic(), &grid(), &plan).unwrap();
    assert_eq!(serde_json::to_string(&a).unwrap(), serde_json::to_string(&b).unwrap());
}

#[test]
fn primitive_derivative_matches_f_at_hundred_points() {
    let g = grid();
    for nl in builtins() {
        for i in 0..100 {
            let x = g.coord((i * 37) % g.len());
            let u = -6.0 + 0.12 * i as f64 + 0.01;
            let h = 1e-5 * (1.0 + u.abs());
            let fd = (nl.primitive(x, u + h) - nl.primitive(x, u - h)) / (2.0 * h);
            let f = nl.f(x, u);
            assert!(
                (fd - f).abs() <= 1e-7 * (1.0 + f.abs()),
                "{} at u={u}: {fd} vs {f}",
                nl.name()
            );
        }
    }
}

#[test]
fn g_identity_and_zero_primitive() {
    let g = grid();
    for nl in builtins() {
        for idx in (0..g.len()).step_by(97) {
            let x = g.coord(idx);
            assert_eq!(nl.primitive(x, 0.0), 0.0);
            for k in 0..=200 {
                let u = -50.0 + 0.5 * k as f64;
                let closed = nl.g_closed(x, u).unwrap();
                let combo = nl.g_combination(x, u);
                let scale = (0.25 * nl.f(x, u) * u).abs() + nl.primitive(x, u).abs();
                assert!(
                    (closed - combo).abs() <= 1e-12 * scale.max(1e-300),
                    "{} u={u}",
                    nl.name()
                );
            }
        }
    }
}

#[test]
fn quadrature_budget_exhaustion_reports_estimate() {
    let r = primitive_by_quadrature(|_, t| 1.0 / (t - 0.5).abs(), [0.0; 3], 1.0);
    match r {
        Err(fracsp::Error::Quadrature { estimate, .. }) => assert!(estimate.is_finite()),
        other => panic!("expected quadrature error, got {other:?}"),
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn prop_builtins_odd_and_primitive_even(u in -200.0f64..200.0, i in 0usize..4096) {
        let g = grid();
        let x = g.coord(i);
        for nl in builtins() {
            prop_assert_eq!(nl.f(x, -u), -nl.f(x, u));
            prop_assert_eq!(nl.primitive(x, -u), nl.primitive(x, u));
        }
    }

    #[test]
    fn prop_quadrature_matches_closed_form(u in -8.0f64..8.0) {
        let nl = builtin_exp_weighted_power(5.0).unwrap();
        let x = [0.3, -0.2, 0.1];
        let q = primitive_by_quadrature(|x, t| nl.f(x, t), x, u).unwrap();
        prop_assert!((q - nl.primitive(x, u)).abs() <= 1e-9 * (1.0 + q.abs()));
    }

    #[test]
    fn prop_failed_checks_have_witnesses(q in 1.5f64..4.0, c in 0.1f64..3.0) {
        let plan = SamplingPlan { x_stride: 8, u_count: 11, random_count: 5, ..Default::default() };
        let rep = check_hypotheses(&power_law(q, c).unwrap(), &Potential::harmonic(), &grid(), &plan).unwrap();
        prop_assert!(!rep.all_pass);
        for chk in &rep.checks {
            prop_assert!(chk.pass || !chk.witnesses.is_empty());
        }
    }
}
