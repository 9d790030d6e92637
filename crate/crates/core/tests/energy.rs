use std::sync::Arc;

use fracsp::energy::{cerami_identity_check, energy, evenness_check, gradient_field, Functional};
use fracsp::grid::{frac_laplacian, GridSpec, RealField};
use fracsp::model::*;
use fracsp::riesz::{k_alpha, riesz_potential_direct};
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn field(grid: GridSpec, seed: u64, amp: f64) -> RealField {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    RealField::random_bumps(grid, &mut rng, 2, amp)
}

fn models() -> Vec<Nonlinearity> {
    vec![builtin_log_quartic(), builtin_exp_weighted_power(5.0).unwrap()]
}

#[test]
fn total_matches_direct_sum_reevaluation() {
    let grid = GridSpec::cubic(16, 8.0, 1.0).unwrap();
    let u = RealField::from_fn(grid, |x| 0.9 * (-(x[0] * x[0] + x[1] * x[1] + x[2] * x[2]) / 2.0).exp()).unwrap();
    let e = energy(&u, &Potential::harmonic(), &builtin_log_quartic(), 1.0).unwrap();

    // independent path: direct-sum φ, physical-space half-Laplacian, hand-written F
    let dv = grid.cell_volume();
    let phi = riesz_potential_direct(&u, 1.0).unwrap().phi;
    let half = frac_laplacian(&u, 0.5).unwrap();
    let mut quad = 0.0;
    let mut coup = 0.0;
    let mut nonl = 0.0;
    for i in 0..grid.len() {
        let x = grid.coord(i);
        let s = u.values()[i];
        let v = 1.0 + x[0] * x[0] + x[1] * x[1] + x[2] * x[2];
        quad += 0.5 * (half.values()[i].powi(2) + v * s * s) * dv;
        coup += 0.25 * k_alpha(1.0).unwrap() * phi.values()[i] * s * s * dv;
        nonl += s.powi(4) * (s * s + 1.0).ln() * dv;
    }
    let total = quad + coup - nonl;
    assert!((e.total - total).abs() <= 1e-9 * total.abs(), "{} vs {total}", e.total);
    assert!((e.coupling - coup).abs() <= 1e-9 * coup);
}

#[test]
fn gradient_matches_central_differences() {
    for alpha in [0.8, 1.0] {
        let grid = GridSpec::cubic(16, 8.0, alpha).unwrap();
        for nl in models() {
            let f = Functional::new(grid, Potential::harmonic(), nl.clone()).unwrap();
            let mut orders = Vec::new();
            for pair in 0..20 {
                let u = field(grid, 2 * pair, 1.0);
                let v = field(grid, 2 * pair + 1, 1.0);
                let exact = f.derivative(&u, &v).unwrap();
                let fd = |eps: f64| {
                    let p = f.energy(&u.axpy(eps, &v).unwrap()).unwrap().total;
                    let m = f.energy(&u.axpy(-eps, &v).unwrap()).unwrap().total;
                    (p - m) / (2.0 * eps)
                };
                let e4 = (fd(1e-4) - exact).abs() / exact.abs();
                let e3 = (fd(1e-3) - exact).abs() / exact.abs();
                assert!(e4 <= 1e-6, "{} alpha {alpha} pair {pair}: {e4}", nl.name());
                orders.push((e3 / e4).log10());
            }
            orders.sort_by(f64::total_cmp);
            let median = orders[orders.len() / 2];
            assert!(median > 1.8, "{} alpha {alpha}: observed order {median}", nl.name());
        }
    }
}

#[test]
fn cerami_identity_on_hundred_fields() {
    let grid = GridSpec::cubic(12, 8.0, 1.0).unwrap();
    for nl in models() {
        for seed in 0..100 {
            let u = field(grid, seed, 0.3 + 0.05 * (seed % 20) as f64);
            let d = cerami_identity_check(&u, &Potential::harmonic(), &nl, 1.0).unwrap();
            assert!(d <= 1e-10, "{} seed {seed}: {d}", nl.name());
        }
    }
}

#[test]
fn cerami_lower_bound_for_weighted_power() {
    let grid = GridSpec::cubic(12, 8.0, 1.0).unwrap();
    let f = Functional::new(grid, Potential::harmonic(), builtin_exp_weighted_power(5.0).unwrap()).unwrap();
    for seed in 0..40 {
        let u = field(grid, seed, 0.1 * (1 + seed % 10) as f64);
        let t = f.cerami_terms(&u).unwrap();
        assert!(t.rhs >= t.lower_bound, "seed {seed}: {} < {}", t.rhs, t.lower_bound);
    }
}

#[test]
fn evenness_and_zero() {
    let grid = GridSpec::cubic(12, 8.0, 1.0).unwrap();
    for nl in models() {
        let f = Functional::new(grid, Potential::harmonic(), nl).unwrap();
        assert_eq!(f.energy(&RealField::zeros(grid)).unwrap().total, 0.0);
        for seed in 0..20 {
            let u = field(grid, seed, 1.0);
            assert!(evenness_check(&u, &Potential::harmonic(), f.nonlinearity(), 1.0).unwrap() <= 1e-13);
            let g = f.gradient(&u).unwrap().g;
            let gm = gradient_field(&u.scaled(-1.0), &Potential::harmonic(), f.nonlinearity(), 1.0)
                .unwrap()
                .g;
            assert!(g.add(&gm).unwrap().max_abs() <= 1e-12 * (1.0 + g.max_abs()));
        }
    }
}

#[test]
fn evenness_fails_for_non_odd_f() {
    let grid = GridSpec::cubic(12, 8.0, 1.0).unwrap();
    let nl = custom(
        "u_plus_one",
        Arc::new(|_, u| u + 1.0),
        Some(Arc::new(|_, u| 0.5 * u * u + u)),
        GrowthParams {
            p: 5.0,
            c1: 1.0,
            c2: 1.0,
        },
        0.0,
    );
    let u = field(grid, 3, 1.0);
    assert!(evenness_check(&u, &Potential::harmonic(), &nl, 1.0).unwrap() > 1e-6);
}

#[test]
fn coupling_is_quartic_and_nonnegative() {
    let grid = GridSpec::cubic(12, 8.0, 0.9).unwrap();
    let f = Functional::new(grid, Potential::harmonic(), zero()).unwrap();
    for seed in 0..10 {
        let u = field(grid, seed, 1.0);
        let a = f.energy(&u).unwrap();
        let b = f.energy(&u.scaled(1.7)).unwrap();
        assert!(a.coupling >= 0.0);
        assert!((b.coupling - 1.7f64.powi(4) * a.coupling).abs() <= 1e-12 * b.coupling);
        assert!((b.total - (b.quadratic + b.coupling - b.nonlinear)).abs() <= 1e-13 * b.total.abs());
    }
}

#[test]
fn zero_gradient_at_zero() {
    let grid = GridSpec::cubic(8, 4.0, 1.0).unwrap();
    for nl in models() {
        let g = gradient_field(&RealField::zeros(grid), &Potential::harmonic(), &nl, 1.0).unwrap();
        assert_eq!(g.g.max_abs(), 0.0);
        assert_eq!(g.preconditioned_norm, 0.0);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn prop_terms_signs(seed in any::<u64>(), amp in 0.01f64..3.0) {
        let grid = GridSpec::cubic(8, 6.0, 1.0).unwrap();
        let u = field(grid, seed, amp);
        let e = energy(&u, &Potential::harmonic(), &builtin_log_quartic(), 1.0).unwrap();
        prop_assert!(e.quadratic >= 0.0 && e.coupling >= 0.0 && e.nonlinear >= 0.0);
        prop_assert_eq!(e.total, e.quadratic + e.coupling - e.nonlinear);
    }

    #[test]
    fn prop_cerami_defect_small(seed in any::<u64>(), amp in 0.01f64..2.0) {
        let grid = GridSpec::cubic(8, 6.0, 1.0).unwrap();
        let u = field(grid, seed, amp);
        for nl in models() {
            prop_assert!(cerami_identity_check(&u, &Potential::harmonic(), &nl, 1.0).unwrap() <= 1e-10);
        }
    }
}
