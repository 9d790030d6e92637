//! Gauss–Legendre rules and a simple adaptive integrator.

use std::f64::consts::PI;

use crate::error::{Error, Result};

/// Nodes and weights of the `n`-point Gauss–Legendre rule on [-1, 1].
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    assert!(n >= 1);
    let mut nodes = vec![0.0; n];
    let mut weights = vec![0.0; n];
    for i in 0..n.div_ceil(2) {
        // Tricomi initial guess, then Newton on P_n.
        let mut x = (PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (p, d) = legendre_with_derivative(n, x);
            dp = d;
            let dx = p / d;
            x -= dx;
            if dx.abs() < 1e-16 {
                break;
            }
        }
        let (_, d) = legendre_with_derivative(n, x);
        dp = if d != 0.0 { d } else { dp };
        let w = 2.0 / ((1.0 - x * x) * dp * dp);
        nodes[i] = -x;
        nodes[n - 1 - i] = x;
        weights[i] = w;
        weights[n - 1 - i] = w;
    }
    (nodes, weights)
}

fn legendre_with_derivative(n: usize, x: f64) -> (f64, f64) {
    let (mut p0, mut p1) = (1.0, x);
    for k in 2..=n {
        let p2 = ((2 * k - 1) as f64 * x * p1 - (k - 1) as f64 * p0) / k as f64;
        p0 = p1;
        p1 = p2;
    }
    let p = if n == 0 { 1.0 } else { p1 };
    let dp = n as f64 * (x * p1 - p0) / (x * x - 1.0);
    (p, dp)
}

fn panel(f: &impl Fn(f64) -> f64, a: f64, b: f64, nodes: &[f64], weights: &[f64]) -> f64 {
    let (c, h) = (0.5 * (a + b), 0.5 * (b - a));
    nodes.iter().zip(weights).map(|(x, w)| w * f(c + h * x)).sum::<f64>() * h
}

/// Adaptive bisection with a 12-point Gauss–Legendre panel; a panel is
/// accepted when it agrees with its two halves to within its share of `tol`.
pub fn adaptive(f: impl Fn(f64) -> f64, a: f64, b: f64, tol: f64, max_panels: usize) -> Result<f64> {
    if a == b {
        return Ok(0.0);
    }
    let (nodes, weights) = gauss_legendre(12);
    let width = (b - a).abs();
    let mut stack = vec![(a, b, panel(&f, a, b, &nodes, &weights))];
    let mut total = 0.0;
    let mut err_total = 0.0;
    let mut panels = 0;
    while let Some((lo, hi, whole)) = stack.pop() {
        panels += 1;
        let mid = 0.5 * (lo + hi);
        let left = panel(&f, lo, mid, &nodes, &weights);
        let right = panel(&f, mid, hi, &nodes, &weights);
        let err = (left + right - whole).abs();
        let share = tol * (hi - lo).abs() / width;
        if err <= share || panels >= max_panels {
            total += left + right;
            err_total += err;
        } else {
            stack.push((mid, hi, right));
            stack.push((lo, mid, left));
        }
    }
    if err_total > tol {
        return Err(Error::Quadrature {
            estimate: total,
            error: err_total,
            tolerance: tol,
        });
    }
    Ok(total)
}
