use std::f64::consts::PI;

use fracsp::grid::{
    forward_transform, frac_laplacian, inner_e, inverse_transform, lp_norm, norm_e, seminorm_dalpha, GridSpec,
    RealField,
};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn noise(grid: GridSpec, seed: u64) -> RealField {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let v = (0..grid.len()).map(|_| rng.gen_range(-1.0..1.0)).collect();
    RealField::new(grid, v).unwrap()
}

fn smooth(grid: GridSpec, seed: u64) -> RealField {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    RealField::random_bumps(grid, &mut rng, 3, 1.0)
}

fn rel_max(a: &RealField, b: &RealField) -> f64 {
    a.sub(b).unwrap().max_abs() / b.max_abs()
}

fn mode(grid: GridSpec, m: [f64; 3]) -> (RealField, f64) {
    let l = grid.lengths();
    let k = [2.0 * PI * m[0] / l[0], 2.0 * PI * m[1] / l[1], 2.0 * PI * m[2] / l[2]];
    let u = RealField::from_fn(grid, |x| (k[0] * x[0] + k[1] * x[1] + k[2] * x[2] + 0.3).cos()).unwrap();
    (u, k[0] * k[0] + k[1] * k[1] + k[2] * k[2])
}

#[test]
fn round_trip_thousand_trials() {
    let grid = GridSpec::new([8, 6, 4], [3.0, 2.0, 5.0], 1.0).unwrap();
    for seed in 0..1000 {
        let u = noise(grid, seed);
        let back = inverse_transform(&forward_transform(&u).unwrap()).unwrap();
        assert!(back.sub(&u).unwrap().max_abs() <= 1e-12);
    }
}

#[test]
fn pure_modes_are_eigenfunctions_on_32_cubed() {
    let grid = GridSpec::cubic(32, 7.0, 1.0).unwrap();
    for alpha in [0.5, 0.8, 1.0] {
        for m in [[1.0, 0.0, 0.0], [1.0, 2.0, 3.0], [5.0, -3.0, 7.0], [15.0, 1.0, -2.0]] {
            let (u, k2) = mode(grid, m);
            let got = frac_laplacian(&u, alpha).unwrap();
            let want = u.scaled(k2.powf(alpha));
            assert!(
                rel_max(&got, &want) <= 1e-12,
                "alpha {alpha} m {m:?}: {}",
                rel_max(&got, &want)
            );
        }
    }
}

#[test]
fn semigroup_composition() {
    let grid = GridSpec::cubic(32, 10.0, 1.0).unwrap();
    for alpha in [0.5, 0.8, 1.0] {
        for seed in 0..3 {
            let u = smooth(grid, seed);
            let half = frac_laplacian(&frac_laplacian(&u, alpha / 2.0).unwrap(), alpha / 2.0).unwrap();
            let full = frac_laplacian(&u, alpha).unwrap();
            assert!(rel_max(&half, &full) <= 1e-11);
        }
    }
}

/// Second-order centered finite-difference Laplacian with periodic wrap.
fn fd_laplacian(u: &RealField) -> RealField {
    let g = *u.grid();
    let n = g.n();
    let h = g.spacing();
    let v = u.values();
    let out = (0..g.len())
        .map(|idx| {
            let ijk = g.unravel(idx);
            let mut s = 0.0;
            for a in 0..3 {
                let mut p = ijk;
                let mut m = ijk;
                p[a] = (ijk[a] + 1) % n[a];
                m[a] = (ijk[a] + n[a] - 1) % n[a];
                s += (2.0 * v[idx] - v[g.index(p[0], p[1], p[2])] - v[g.index(m[0], m[1], m[2])]) / (h[a] * h[a]);
            }
            s
        })
        .collect();
    RealField::new(g, out).unwrap()
}

#[test]
fn laplacian_agrees_with_finite_differences_at_second_order() {
    let err = |n: usize| {
        let grid = GridSpec::cubic(n, 12.0, 1.0).unwrap();
        let u = RealField::from_fn(grid, |x| (-(x[0] * x[0] + x[1] * x[1] + x[2] * x[2]) / 2.0).exp()).unwrap();
        let spec = frac_laplacian(&u, 1.0).unwrap();
        rel_max(&fd_laplacian(&u), &spec)
    };
    let (e32, e64) = (err(32), err(64));
    let order = (e32 / e64).log2();
    assert!(e64 < 1e-2, "e32 {e32} e64 {e64}");
    assert!((order - 2.0).abs() < 0.25, "observed order {order}");
}

#[test]
fn plancherel_on_random_fields() {
    let grid = GridSpec::cubic(16, 8.0, 1.0).unwrap();
    for alpha in [0.5, 0.8, 1.0] {
        for seed in 0..100 {
            let u = smooth(grid, seed);
            let half = frac_laplacian(&u, alpha / 2.0).unwrap();
            let physical = half.dot(&half).unwrap();
            let spectral = seminorm_dalpha(&u, alpha).unwrap();
            assert!((physical - spectral).abs() <= 1e-12 * spectral);
        }
    }
}

#[test]
fn single_mode_seminorm_and_energy_norm() {
    let grid = GridSpec::cubic(16, 6.0, 0.8).unwrap();
    let (u, k2) = mode(grid, [2.0, -1.0, 3.0]);
    let vol = grid.volume();
    let s = seminorm_dalpha(&u, 0.8).unwrap();
    assert!((s - k2.powf(0.8) * vol / 2.0).abs() <= 1e-12 * s);
    let one = RealField::constant(grid, 1.0).unwrap();
    let e = norm_e(&u, &one, 0.8).unwrap().powi(2);
    assert!((e - (k2.powf(0.8) + 1.0) * vol / 2.0).abs() <= 1e-12 * e);
    assert_eq!(norm_e(&RealField::zeros(grid), &one, 0.8).unwrap(), 0.0);
}

#[test]
fn lp_norm_two_matches_spectral_l2() {
    let grid = GridSpec::cubic(16, 8.0, 1.0).unwrap();
    for seed in 0..20 {
        let u = noise(grid, seed);
        let spec = forward_transform(&u).unwrap().energy().sqrt();
        let lp = lp_norm(&u, 2.0).unwrap();
        assert!((spec - lp).abs() <= 1e-12 * lp);
    }
}

#[test]
fn self_adjointness_and_cauchy_schwarz() {
    let grid = GridSpec::cubic(16, 8.0, 0.8).unwrap();
    let v = RealField::from_fn(grid, |x| 1.0 + x[0] * x[0] + 0.5 * x[1] * x[1] + x[2] * x[2]).unwrap();
    for seed in 0..100 {
        let a = noise(grid, 2 * seed);
        let b = smooth(grid, 2 * seed + 1);
        for alpha in [0.5, 0.8, 1.0] {
            let lhs = frac_laplacian(&a, alpha).unwrap().dot(&b).unwrap();
            let rhs = a.dot(&frac_laplacian(&b, alpha).unwrap()).unwrap();
            assert!((lhs - rhs).abs() <= 1e-11 * a.l2_norm() * b.l2_norm());
        }
        let ip = inner_e(&a, &b, &v, 0.8).unwrap();
        let bound = norm_e(&a, &v, 0.8).unwrap() * norm_e(&b, &v, 0.8).unwrap();
        assert!(ip.abs() <= bound * (1.0 + 1e-14));
    }
}

fn arb_grid() -> impl Strategy<Value = GridSpec> {
    (2usize..6, 2usize..6, 2usize..6, 1.0f64..10.0, 0.05f64..=1.0)
        .prop_map(|(a, b, c, l, alpha)| GridSpec::new([2 * a, 2 * b, 2 * c], [l, 1.3 * l, 0.7 * l], alpha).unwrap())
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn prop_round_trip(grid in arb_grid(), seed in any::<u64>()) {
        let u = noise(grid, seed);
        let back = inverse_transform(&forward_transform(&u).unwrap()).unwrap();
        prop_assert!(back.sub(&u).unwrap().max_abs() <= 1e-12);
    }

    #[test]
    fn prop_linearity(grid in arb_grid(), seed in any::<u64>(), a in -3.0f64..3.0, b in -3.0f64..3.0) {
        let alpha = grid.alpha();
        let u = noise(grid, seed);
        let w = noise(grid, seed ^ 0xabcdef);
        let lhs = frac_laplacian(&u.scaled(a).axpy(b, &w).unwrap(), alpha).unwrap();
        let rhs = frac_laplacian(&u, alpha).unwrap().scaled(a).axpy(b, &frac_laplacian(&w, alpha).unwrap()).unwrap();
        let scale = 1.0 + rhs.max_abs();
        prop_assert!(lhs.sub(&rhs).unwrap().max_abs() <= 1e-12 * scale);
    }

    #[test]
    fn prop_seminorm_nonnegative_and_constants_vanish(grid in arb_grid(), seed in any::<u64>(), c in -5.0f64..5.0) {
        let alpha = grid.alpha();
        prop_assert!(seminorm_dalpha(&noise(grid, seed), alpha).unwrap() >= 0.0);
        let k = RealField::constant(grid, c).unwrap();
        prop_assert!(seminorm_dalpha(&k, alpha).unwrap() <= 1e-24 * (1.0 + c * c));
    }

    #[test]
    fn prop_lp_homogeneous(grid in arb_grid(), seed in any::<u64>(), t in -4.0f64..4.0, r in 1.0f64..7.0) {
        let u = noise(grid, seed);
        let a = lp_norm(&u.scaled(t), r).unwrap();
        let b = t.abs() * lp_norm(&u, r).unwrap();
        prop_assert!((a - b).abs() <= 1e-12 * (1.0 + b));
    }

    #[test]
    fn prop_inner_e_symmetric(grid in arb_grid(), seed in any::<u64>()) {
        let alpha = grid.alpha();
        let v = RealField::constant(grid, 1.5).unwrap();
        let u = noise(grid, seed);
        let w = noise(grid, seed.wrapping_add(1));
        let a = inner_e(&u, &w, &v, alpha).unwrap();
        let b = inner_e(&w, &u, &v, alpha).unwrap();
        prop_assert!((a - b).abs() <= 1e-12 * (1.0 + a.abs()));
        let n2 = norm_e(&u, &v, alpha).unwrap().powi(2);
        let uu = inner_e(&u, &u, &v, alpha).unwrap();
        prop_assert!((n2 - uu).abs() <= 1e-12 * n2);
    }
}
