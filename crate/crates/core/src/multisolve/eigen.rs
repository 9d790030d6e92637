//! Low eigenpairs of `A = (−Δ)^α + V` by Chebyshev-filtered subspace
//! iteration with Rayleigh–Ritz, using only operator applications.

use nalgebra::{DMatrix, SymmetricEigen};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::grid::{apply_multiplier, check_order, frac_symbol, GridSpec, RealField};
use crate::sum::csum;

#[derive(Debug, Clone, Serialize)]
pub struct EigenOptions {
    pub k: usize,
    /// Extra block vectors beyond `k`; `None` picks `max(10, k/2)`.
    pub guard: Option<usize>,
    pub degree: usize,
    pub max_iterations: usize,
    /// Relative residual `‖Ax − λx‖ ≤ tol·λ‖x‖`.
    pub tol: f64,
    pub seed: u64,
}

impl EigenOptions {
    pub fn new(k: usize) -> Self {
        Self {
            k,
            guard: None,
            degree: 16,
            max_iterations: 300,
            tol: 1e-8,
            seed: 0,
        }
    }
}

/// E-orthonormal eigenpairs, eigenvalues ascending.
#[derive(Debug, Clone)]
pub struct EigenBasis {
    grid: GridSpec,
    v: RealField,
    pub eigenvalues: Vec<f64>,
    /// `‖e_j‖_E = 1`.
    pub modes: Vec<RealField>,
    /// Relative residuals `‖Ae_j − λ_j e_j‖₂ / (λ_j‖e_j‖₂)`.
    pub residuals: Vec<f64>,
    pub iterations: usize,
    pub block_size: usize,
}

impl EigenBasis {
    pub fn k(&self) -> usize {
        self.eigenvalues.len()
    }

    pub fn grid(&self) -> &GridSpec {
        &self.grid
    }

    pub fn potential_field(&self) -> &RealField {
        &self.v
    }

    /// `Σ_j c_j e_{offset+j}`.
    pub fn combine(&self, offset: usize, coeffs: &[f64]) -> RealField {
        let mut out = vec![0.0; self.grid.len()];
        for (c, e) in coeffs.iter().zip(&self.modes[offset..]) {
            for (o, x) in out.iter_mut().zip(e.values()) {
                *o += c * x;
            }
        }
        RealField::from_raw(self.grid, out)
    }

    /// E-coefficients `(u, e_j)_E = λ_j ∫ u e_j`.
    pub fn coefficients(&self, u: &RealField) -> Result<Vec<f64>> {
        self.modes
            .iter()
            .zip(&self.eigenvalues)
            .map(|(e, &l)| Ok(l * u.dot(e)?))
            .collect()
    }
}

struct Operator<'a> {
    grid: GridSpec,
    alpha: f64,
    v: &'a [f64],
}

impl Operator<'_> {
    fn apply(&self, x: &[f64]) -> Vec<f64> {
        let alpha = self.alpha;
        let lap = apply_multiplier(&RealField::from_raw(self.grid, x.to_vec()), |k2| frac_symbol(k2, alpha));
        lap.into_values()
            .into_iter()
            .zip(x.iter().zip(self.v))
            .map(|(l, (xi, vi))| l + vi * xi)
            .collect()
    }

    fn apply_block(&self, xs: &[Vec<f64>]) -> Vec<Vec<f64>> {
        xs.par_iter().map(|x| self.apply(x)).collect()
    }

    fn upper_bound(&self) -> f64 {
        let k2max: f64 = self
            .grid
            .k2_tables()
            .iter()
            .map(|t| t.iter().cloned().fold(0.0, f64::max))
            .sum();
        frac_symbol(k2max, self.alpha) + self.v.iter().cloned().fold(f64::NEG_INFINITY, f64::max)
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    csum(a.iter().zip(b).map(|(x, y)| x * y))
}

fn orthonormalize(xs: &[Vec<f64>]) -> Vec<Vec<f64>> {
    let n = xs[0].len();
    let m = DMatrix::from_fn(n, xs.len(), |i, j| xs[j][i]);
    let q = m.qr().q();
    (0..xs.len()).map(|j| q.column(j).iter().cloned().collect()).collect()
}

/// Rayleigh–Ritz on span(q): returns sorted Ritz values, vectors and their images.
fn rayleigh_ritz(op: &Operator, q: &[Vec<f64>]) -> (Vec<f64>, Vec<Vec<f64>>, Vec<Vec<f64>>) {
    let aq = op.apply_block(q);
    let m = q.len();
    let mut h = DMatrix::zeros(m, m);
    for i in 0..m {
        for j in i..m {
            let s = 0.5 * (dot(&q[i], &aq[j]) + dot(&q[j], &aq[i]));
            h[(i, j)] = s;
            h[(j, i)] = s;
        }
    }
    let eig = SymmetricEigen::new(h);
    let mut order: Vec<usize> = (0..m).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
    let n = q[0].len();
    let rotate = |src: &[Vec<f64>], col: usize| -> Vec<f64> {
        let mut out = vec![0.0; n];
        for (i, s) in src.iter().enumerate() {
            let c = eig.eigenvectors[(i, col)];
            for (o, x) in out.iter_mut().zip(s) {
                *o += c * x;
            }
        }
        out
    };
    let values = order.iter().map(|&c| eig.eigenvalues[c]).collect();
    let x: Vec<Vec<f64>> = order.par_iter().map(|&c| rotate(q, c)).collect();
    let ax: Vec<Vec<f64>> = order.par_iter().map(|&c| rotate(&aq, c)).collect();
    (values, x, ax)
}

/// Degree-`degree` Chebyshev filter damping `[a, b]` and scaled at `a0`.
fn chebyshev_filter(op: &Operator, xs: &[Vec<f64>], degree: usize, a: f64, b: f64, a0: f64) -> Vec<Vec<f64>> {
    let e = 0.5 * (b - a);
    let c = 0.5 * (b + a);
    xs.par_iter()
        .map(|x0| {
            let mut sigma = e / (a0 - c);
            let tau = 2.0 / sigma;
            let ax = op.apply(x0);
            let mut prev = x0.clone();
            let mut cur: Vec<f64> = ax.iter().zip(x0).map(|(ai, xi)| (ai - c * xi) * sigma / e).collect();
            for _ in 2..=degree {
                let sigma_new = 1.0 / (tau - sigma);
                let ay = op.apply(&cur);
                let next: Vec<f64> = ay
                    .iter()
                    .zip(&cur)
                    .zip(&prev)
                    .map(|((ai, yi), pi)| 2.0 * sigma_new / e * (ai - c * yi) - sigma * sigma_new * pi)
                    .collect();
                prev = cur;
                cur = next;
                sigma = sigma_new;
            }
            // keep the block well scaled
            let nrm = dot(&cur, &cur).sqrt();
            cur.iter().map(|v| v / nrm).collect()
        })
        .collect()
}

pub fn schrodinger_eigenbasis(grid: &GridSpec, v: &RealField, alpha: f64, k: usize) -> Result<EigenBasis> {
    schrodinger_eigenbasis_with(grid, v, alpha, &EigenOptions::new(k))
}

pub fn schrodinger_eigenbasis_with(
    grid: &GridSpec,
    v: &RealField,
    alpha: f64,
    opts: &EigenOptions,
) -> Result<EigenBasis> {
    check_order(alpha)?;
    grid.check_same(v.grid())?;
    if v.values().iter().any(|&x| x <= 0.0) {
        return Err(Error::invalid("eigenbasis needs a positive potential"));
    }
    let k = opts.k;
    let m = k + opts.guard.unwrap_or((k / 2).max(10));
    if k == 0 || m > grid.len() / 2 {
        return Err(Error::invalid(format!(
            "requested {k} eigenpairs (block {m}) on a grid of {} points",
            grid.len()
        )));
    }
    if opts.degree < 2 || opts.tol.is_nan() || opts.tol <= 0.0 {
        return Err(Error::invalid("eigen options: degree >= 2 and tol > 0"));
    }
    let op = Operator {
        grid: *grid,
        alpha,
        v: v.values(),
    };
    let upper = op.upper_bound();
    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
    let init: Vec<Vec<f64>> = (0..m)
        .map(|_| (0..grid.len()).map(|_| StandardNormal.sample(&mut rng)).collect())
        .collect();
    let (mut theta, mut x, mut ax) = rayleigh_ritz(&op, &orthonormalize(&init));
    let mut best = vec![f64::INFINITY; k];
    let mut iterations = 0;
    loop {
        let res: Vec<f64> = (0..k)
            .map(|j| {
                let r: Vec<f64> = ax[j].iter().zip(&x[j]).map(|(a, b)| a - theta[j] * b).collect();
                dot(&r, &r).sqrt() / theta[j].abs()
            })
            .collect();
        if res.iter().cloned().fold(0.0, f64::max) < best.iter().cloned().fold(0.0, f64::max) {
            best = res.clone();
        }
        if res.iter().all(|&r| r <= opts.tol) {
            return Ok(finish(grid, v, theta, x, res, iterations, m));
        }
        if iterations >= opts.max_iterations {
            return Err(Error::NonConvergence {
                solver: "eigenbasis",
                iterations,
                best_residual: best.iter().cloned().fold(0.0, f64::max),
                residuals: best,
            });
        }
        iterations += 1;
        let filtered = chebyshev_filter(&op, &x, opts.degree, theta[m - 1], upper, theta[0]);
        (theta, x, ax) = rayleigh_ritz(&op, &orthonormalize(&filtered));
    }
}

fn finish(
    grid: &GridSpec,
    v: &RealField,
    theta: Vec<f64>,
    x: Vec<Vec<f64>>,
    res: Vec<f64>,
    iterations: usize,
    m: usize,
) -> EigenBasis {
    let k = res.len();
    let dv = grid.cell_volume();
    let modes = x
        .into_iter()
        .take(k)
        .zip(&theta)
        .map(|(col, &l)| {
            // ‖col‖ = 1 in ℓ², so ‖col/√dv‖_{L²} = 1 and ‖·‖²_E = λ.
            let s = 1.0 / (dv * l).sqrt();
            let mut vals: Vec<f64> = col.into_iter().map(|c| c * s).collect();
            // fix the sign: largest-magnitude entry positive
            let imax = (0..vals.len()).fold(0, |b, i| if vals[i].abs() > vals[b].abs() { i } else { b });
            if vals[imax] < 0.0 {
                vals.iter_mut().for_each(|c| *c = -*c);
            }
            RealField::from_raw(*grid, vals)
        })
        .collect();
    EigenBasis {
        grid: *grid,
        v: v.clone(),
        eigenvalues: theta.into_iter().take(k).collect(),
        modes,
        residuals: res,
        iterations,
        block_size: m,
    }
}
