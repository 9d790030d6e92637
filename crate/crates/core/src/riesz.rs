//! Riesz-potential solution of `(−Δ)^α φ = K_α u²`.
//!
//! `φ(u)(x) = ∫ |x−y|^{2α−3} u²(y) dy` is evaluated as a linear (non-circular)
//! convolution on a zero-padded grid of twice the extent per axis. The
//! singular self-cell weight is the exact integral of `|z|^{2α−3}` over one
//! cell, so the padded solver and the direct double sum see the same kernel.

use std::collections::HashMap;
use std::f64::consts::PI;
use std::sync::{Arc, Mutex, OnceLock};

use num_complex::Complex64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::fft;
use crate::grid::{check_order, frac_laplacian, frac_symbol, norm_e, seminorm_dalpha, GridSpec, RealField};
use crate::quad::gauss_legendre;
use crate::sum::csum;

/// Largest grid accepted by the O(N²) direct-summation oracle.
pub const DIRECT_SUM_LIMIT: usize = 4096;

/// `K_α = π^{−α}Γ(α) / (π^{−(3−2α)/2} Γ((3−2α)/2))`, evaluated through log-Γ.
pub fn k_alpha(alpha: f64) -> Result<f64> {
    check_order(alpha)?;
    let b = (3.0 - 2.0 * alpha) / 2.0;
    let ln_pi = PI.ln();
    Ok((-alpha * ln_pi + libm::lgamma(alpha) + b * ln_pi - libm::lgamma(b)).exp())
}

#[derive(Debug, Clone, Copy, Serialize)]
pub struct RieszConstants {
    pub alpha: f64,
    pub k_alpha: f64,
    /// `π^{−α/2} Γ(−α/2)`, kept for reference alongside `k_alpha`.
    pub c_alpha: f64,
    pub kernel_exponent: f64,
}

pub fn riesz_constants(alpha: f64) -> Result<RieszConstants> {
    Ok(RieszConstants {
        alpha,
        k_alpha: k_alpha(alpha)?,
        c_alpha: PI.powf(-alpha / 2.0) * libm::tgamma(-alpha / 2.0),
        kernel_exponent: 2.0 * alpha - 3.0,
    })
}

/// Sharp constant of `‖u‖_{2N/(N−α)} ≤ B ‖(−Δ)^{α/2}u‖_2` in dimension `N`,
/// evaluated with the factor `Γ(N)/Γ(N/2)` exactly as the constant is usually
/// displayed. Requires `0 < α < N/2`.
pub fn sobolev_best_constant(dim: usize, alpha: f64) -> Result<f64> {
    let n = dim as f64;
    if !(alpha > 0.0 && alpha < n / 2.0) {
        return Err(Error::invalid(format!(
            "need 0 < alpha < N/2, got alpha = {alpha}, N = {dim}"
        )));
    }
    let g = libm::tgamma;
    Ok(
        2f64.powf(-alpha) * PI.powf(-alpha / 2.0) * g((n - alpha) / 2.0) / g((n + alpha) / 2.0)
            * (g(n) / g(n / 2.0)).powf(alpha / n),
    )
}

/// Constant `C` with `(−Δ)^α (|·|^{2α−3} ⋆ s) = C s` on ℝ³ under `k = 2πm/L`.
pub fn whole_space_inversion_constant(alpha: f64) -> Result<f64> {
    check_order(alpha)?;
    Ok(4f64.powf(alpha) * PI.powf(1.5) * libm::tgamma(alpha) / libm::tgamma(1.5 - alpha))
}

/// Closed-form calibration `K_α / C = (2π)^{−2α}`, reported next to the measured one.
pub fn analytic_calibration(alpha: f64) -> Result<f64> {
    check_order(alpha)?;
    Ok((2.0 * PI).powf(-2.0 * alpha))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum PoissonMethod {
    PaddedConvolution,
    DirectSum,
    /// Periodic `(K_α/κ)(−Δ)^{−α}` with the zero mode dropped; diagnostics only.
    SpectralInverse,
}

#[derive(Debug, Clone)]
pub struct PoissonSolution {
    pub phi: RealField,
    pub alpha: f64,
    pub method: PoissonMethod,
    /// κ(α): `κ (−Δ)^α φ ≈ K_α u²` relates the kernel form to the multiplier form.
    pub calibration: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct PoissonMetadata {
    pub method: PoissonMethod,
    pub alpha: f64,
    pub calibration: f64,
    pub analytic_calibration: f64,
    pub k_alpha: f64,
    pub grid: GridSpec,
}

impl PoissonSolution {
    pub fn metadata(&self) -> PoissonMetadata {
        PoissonMetadata {
            method: self.method,
            alpha: self.alpha,
            calibration: self.calibration,
            analytic_calibration: analytic_calibration(self.alpha).unwrap_or(f64::NAN),
            k_alpha: k_alpha(self.alpha).unwrap_or(f64::NAN),
            grid: *self.phi.grid(),
        }
    }
}

/// `∫_{cell} |z|^β dz` over a cell of the given spacing centered at 0, β > −3.
///
/// The cell splits into six pyramids with apex at the origin; on each the
/// radial integral is `1/(β+3)` in closed form and the remaining face integral
/// has a smooth integrand, done by tensor Gauss–Legendre.
pub fn self_cell_integral(spacing: [f64; 3], beta: f64) -> f64 {
    assert!(beta > -3.0);
    let (nodes, weights) = gauss_legendre(40);
    let half = [spacing[0] / 2.0, spacing[1] / 2.0, spacing[2] / 2.0];
    let mut total = 0.0;
    for axis in 0..3 {
        let a = half[axis];
        let (b, c) = (half[(axis + 1) % 3], half[(axis + 2) % 3]);
        let mut face = 0.0;
        for (y, wy) in nodes.iter().zip(&weights) {
            for (z, wz) in nodes.iter().zip(&weights) {
                let (yy, zz) = (b * y, c * z);
                face += wy * wz * (a * a + yy * yy + zz * zz).powf(beta / 2.0);
            }
        }
        face *= b * c;
        total += 2.0 * a / (beta + 3.0) * face;
    }
    total
}

fn kernel_value(d: [f64; 3], beta: f64, self_weight: f64) -> f64 {
    let r2 = d[0] * d[0] + d[1] * d[1] + d[2] * d[2];
    if r2 == 0.0 {
        self_weight
    } else {
        r2.powf(beta / 2.0)
    }
}

type KernelKey = ([usize; 3], [u64; 3], u64);

fn kernel_cache() -> &'static Mutex<HashMap<KernelKey, Arc<Vec<Complex64>>>> {
    static CACHE: OnceLock<Mutex<HashMap<KernelKey, Arc<Vec<Complex64>>>>> = OnceLock::new();
    CACHE.get_or_init(|| Mutex::new(HashMap::new()))
}

/// Spectrum of `dV·kernel` on the padded grid, pre-divided by the padded size.
fn padded_kernel_spectrum(grid: &GridSpec, alpha: f64) -> Arc<Vec<Complex64>> {
    let n = grid.n();
    let l = grid.lengths();
    let key = (n, [l[0].to_bits(), l[1].to_bits(), l[2].to_bits()], alpha.to_bits());
    if let Some(hit) = kernel_cache().lock().expect("kernel cache").get(&key) {
        return hit.clone();
    }
    let beta = 2.0 * alpha - 3.0;
    let h = grid.spacing();
    let dv = grid.cell_volume();
    let self_weight = self_cell_integral(h, beta) / dv;
    let np = [2 * n[0], 2 * n[1], 2 * n[2]];
    let total = np[0] * np[1] * np[2];
    let mut values = vec![0.0; total];
    for (idx, slot) in values.iter_mut().enumerate() {
        let i = idx % np[0];
        let j = (idx / np[0]) % np[1];
        let k = idx / (np[0] * np[1]);
        let d = [
            GridSpec::signed_mode(i, np[0]) as f64 * h[0],
            GridSpec::signed_mode(j, np[1]) as f64 * h[1],
            GridSpec::signed_mode(k, np[2]) as f64 * h[2],
        ];
        *slot = kernel_value(d, beta, self_weight) * dv / total as f64;
    }
    let spec = Arc::new(fft::plan(np).forward(&values));
    kernel_cache().lock().expect("kernel cache").insert(key, spec.clone());
    spec
}

/// `(|·|^{2α−3} ⋆ s)(x) = Σ_y K(x−y) s(y) dV` on the box, no periodic wrap.
pub fn convolve_source(source: &RealField, alpha: f64) -> Result<RealField> {
    check_order(alpha)?;
    let grid = *source.grid();
    let n = grid.n();
    let np = [2 * n[0], 2 * n[1], 2 * n[2]];
    let mut padded = Vec::new();
    padded
        .try_reserve_exact(np[0] * np[1] * np[2])
        .map_err(|e| Error::Resource(format!("padded grid allocation failed: {e}")))?;
    padded.resize(np[0] * np[1] * np[2], 0.0);
    for k in 0..n[2] {
        for j in 0..n[1] {
            let src = &source.values()[grid.index(0, j, k)..grid.index(0, j, k) + n[0]];
            let at = np[0] * (j + np[1] * k);
            padded[at..at + n[0]].copy_from_slice(src);
        }
    }
    let plan = fft::plan(np);
    let kernel = padded_kernel_spectrum(&grid, alpha);
    let mut spec = plan.forward(&padded);
    for (c, kk) in spec.iter_mut().zip(kernel.iter()) {
        *c *= kk;
    }
    let full = plan.inverse(spec);
    let mut out = Vec::with_capacity(grid.len());
    for k in 0..n[2] {
        for j in 0..n[1] {
            let at = np[0] * (j + np[1] * k);
            out.extend_from_slice(&full[at..at + n[0]]);
        }
    }
    RealField::new(grid, out)
}

/// Same sum as [`convolve_source`], evaluated pair by pair.
pub fn direct_convolve_source(source: &RealField, alpha: f64) -> Result<RealField> {
    check_order(alpha)?;
    let grid = *source.grid();
    if grid.len() > DIRECT_SUM_LIMIT {
        return Err(Error::GridTooLarge {
            points: grid.len(),
            limit: DIRECT_SUM_LIMIT,
        });
    }
    let beta = 2.0 * alpha - 3.0;
    let h = grid.spacing();
    let dv = grid.cell_volume();
    let self_weight = self_cell_integral(h, beta) / dv;
    let s = source.values();
    let out: Vec<f64> = (0..grid.len())
        .into_par_iter()
        .map(|x| {
            let px = grid.unravel(x);
            csum((0..grid.len()).map(|y| {
                let py = grid.unravel(y);
                let d = [
                    (px[0] as f64 - py[0] as f64) * h[0],
                    (px[1] as f64 - py[1] as f64) * h[1],
                    (px[2] as f64 - py[2] as f64) * h[2],
                ];
                kernel_value(d, beta, self_weight) * s[y]
            })) * dv
        })
        .collect();
    RealField::new(grid, out)
}

pub fn riesz_potential_direct(u: &RealField, alpha: f64) -> Result<PoissonSolution> {
    let phi = direct_convolve_source(&u.squared(), alpha)?;
    Ok(PoissonSolution {
        phi,
        alpha,
        method: PoissonMethod::DirectSum,
        calibration: calibration(alpha)?,
    })
}

pub fn solve_poisson(u: &RealField, alpha: f64) -> Result<PoissonSolution> {
    let phi = convolve_source(&u.squared(), alpha)?;
    Ok(PoissonSolution {
        phi,
        alpha,
        method: PoissonMethod::PaddedConvolution,
        calibration: calibration(alpha)?,
    })
}

/// Periodic spectral inverse; makes `κ‖φ‖²_{D^α} = K_α ∫ φ u²` a discrete identity.
pub fn spectral_inverse(u: &RealField, alpha: f64) -> Result<PoissonSolution> {
    let kappa = calibration(alpha)?;
    let scale = k_alpha(alpha)? / kappa;
    let phi = crate::grid::apply_multiplier(&u.squared(), |k2| {
        if k2 == 0.0 {
            0.0
        } else {
            scale / frac_symbol(k2, alpha)
        }
    });
    Ok(PoissonSolution {
        phi,
        alpha,
        method: PoissonMethod::SpectralInverse,
        calibration: kappa,
    })
}

/// Reference problem for κ(α): a unit Gaussian on a 32³ box of side 12.
const CALIBRATION_POINTS: usize = 32;
const CALIBRATION_BOX: f64 = 12.0;

fn calibration_cache() -> &'static Mutex<HashMap<u64, f64>> {
    static CACHE: OnceLock<Mutex<HashMap<u64, f64>>> = OnceLock::new();
    CACHE.get_or_init(|| Mutex::new(HashMap::new()))
}

/// Measured κ(α): least-squares fit of `κ (−Δ)^α φ ≈ K_α u²` over the central
/// eighth of the reference box. Computed once per α and cached.
pub fn calibration(alpha: f64) -> Result<f64> {
    check_order(alpha)?;
    if let Some(&k) = calibration_cache()
        .lock()
        .expect("calibration cache")
        .get(&alpha.to_bits())
    {
        return Ok(k);
    }
    let grid = GridSpec::cubic(CALIBRATION_POINTS, CALIBRATION_BOX, alpha)?;
    let u = RealField::from_fn(grid, |x| (-(x[0] * x[0] + x[1] * x[1] + x[2] * x[2]) / 2.0).exp())?;
    let phi = convolve_source(&u.squared(), alpha)?;
    let w = frac_laplacian(&phi, alpha)?;
    let s = u.squared();
    let ka = k_alpha(alpha)?;
    let central = central_eighth(&grid);
    let ws = csum(central.iter().map(|&i| w.values()[i] * s.values()[i]));
    let ww = csum(central.iter().map(|&i| w.values()[i] * w.values()[i]));
    let kappa = ka * ws / ww;
    calibration_cache()
        .lock()
        .expect("calibration cache")
        .insert(alpha.to_bits(), kappa);
    Ok(kappa)
}

/// Indices of the central eighth of the box (middle half on every axis).
pub fn central_eighth(grid: &GridSpec) -> Vec<usize> {
    let n = grid.n();
    let mut out = Vec::new();
    for k in n[2] / 4..3 * n[2] / 4 {
        for j in n[1] / 4..3 * n[1] / 4 {
            for i in n[0] / 4..3 * n[0] / 4 {
                out.push(grid.index(i, j, k));
            }
        }
    }
    out
}

/// Max-norm error of `κ (−Δ)^α φ` against `K_α u²` on the central eighth,
/// relative to `max K_α u²` there.
pub fn inversion_residual(u: &RealField, sol: &PoissonSolution) -> Result<f64> {
    u.grid().check_same(sol.phi.grid())?;
    let w = frac_laplacian(&sol.phi, sol.alpha)?;
    let ka = k_alpha(sol.alpha)?;
    let idx = central_eighth(u.grid());
    let mut err = 0.0_f64;
    let mut scale = 0.0_f64;
    for i in idx {
        let target = ka * u.values()[i] * u.values()[i];
        err = err.max((sol.calibration * w.values()[i] - target).abs());
        scale = scale.max(target.abs());
    }
    Ok(if scale > 0.0 { err / scale } else { err })
}

/// `∫ φ(u) u² dx`.
pub fn coupling_integral(u: &RealField, sol: &PoissonSolution) -> Result<f64> {
    let s = u.squared();
    s.dot(&sol.phi)
}

/// Relative defect of `κ ‖φ‖²_{D^α} = K_α ∫ φ u²`.
pub fn dirichlet_identity_defect(u: &RealField, sol: &PoissonSolution) -> Result<f64> {
    let lhs = sol.calibration * seminorm_dalpha(&sol.phi, sol.alpha)?;
    let rhs = k_alpha(sol.alpha)? * coupling_integral(u, sol)?;
    let scale = lhs.abs().max(rhs.abs());
    Ok(if scale > 0.0 { (lhs - rhs).abs() / scale } else { 0.0 })
}

/// `[Φ'(u)](v) = 2 |·|^{2α−3} ⋆ (u v)`.
pub fn phi_derivative_action(u: &RealField, v: &RealField, alpha: f64) -> Result<RealField> {
    let uv = u.pointwise_mul(v)?;
    Ok(convolve_source(&uv, alpha)?.scaled(2.0))
}

#[derive(Debug, Clone, Serialize)]
pub struct BoundRatioReport {
    pub trials: usize,
    pub seed: u64,
    pub alpha: f64,
    /// sup ‖φ(u)‖_{D^α} / ‖u‖²_E over the sampled fields.
    pub max_dirichlet_ratio: f64,
    /// sup ∫φ(u)u² / ‖u‖⁴_E over the sampled fields.
    pub max_coupling_ratio: f64,
    pub sobolev_constant: f64,
    pub sobolev_note: String,
}

/// Empirical constants for `‖φ(u)‖_{D^α} ≤ C‖u‖²_E` and `∫φ(u)u² ≤ C‖u‖⁴_E`.
pub fn bound_ratios(
    trials: usize,
    grid: GridSpec,
    v_pot: &RealField,
    alpha: f64,
    seed: u64,
) -> Result<BoundRatioReport> {
    check_order(alpha)?;
    if alpha <= 0.75 {
        return Err(Error::invalid(format!("bound ratios need alpha > 3/4, got {alpha}")));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut max_d = 0.0_f64;
    let mut max_c = 0.0_f64;
    for _ in 0..trials {
        let bumps = 1 + (rand::Rng::gen_range(&mut rng, 0..3usize));
        let u = RealField::random_bumps(grid, &mut rng, bumps, 1.0);
        let (d, c) = field_bound_ratios(&u, v_pot, alpha)?;
        max_d = max_d.max(d);
        max_c = max_c.max(c);
    }
    Ok(BoundRatioReport {
        trials,
        seed,
        alpha,
        max_dirichlet_ratio: max_d,
        max_coupling_ratio: max_c,
        sobolev_constant: sobolev_best_constant(3, alpha)?,
        sobolev_note: "evaluated with Gamma(N) in the numerator factor as displayed; the \
                       displayed formula appears to contain a typo"
            .into(),
    })
}

/// The two scale-invariant ratios for a single field.
pub fn field_bound_ratios(u: &RealField, v_pot: &RealField, alpha: f64) -> Result<(f64, f64)> {
    let sol = solve_poisson(u, alpha)?;
    let e2 = norm_e(u, v_pot, alpha)?.powi(2);
    let d = seminorm_dalpha(&sol.phi, alpha)?.sqrt() / e2;
    let c = coupling_integral(u, &sol)? / (e2 * e2);
    Ok((d, c))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn k_alpha_exact_values() {
        assert!((k_alpha(1.0).unwrap() - 1.0 / PI).abs() < 1e-14 / PI);
        assert!((k_alpha(0.5).unwrap() - PI).abs() < 1e-14 * PI);
        assert!(k_alpha(0.0).is_err());
        assert!(k_alpha(1.01).is_err());
    }

    #[test]
    fn constants_ranges() {
        for a in [0.05, 0.3, 0.75, 0.9, 1.0] {
            let c = riesz_constants(a).unwrap();
            assert!(c.k_alpha.is_finite() && c.k_alpha > 0.0);
            assert!(c.kernel_exponent > -3.0 && c.kernel_exponent <= -1.0);
            assert!(c.c_alpha.is_finite() && c.c_alpha < 0.0);
        }
    }

    #[test]
    fn analytic_calibration_matches_constant_ratio() {
        for a in [0.3, 0.8, 1.0] {
            let r = k_alpha(a).unwrap() / whole_space_inversion_constant(a).unwrap();
            assert!((r - analytic_calibration(a).unwrap()).abs() < 1e-13 * r);
        }
    }

    #[test]
    fn self_cell_matches_brute_force() {
        // Midpoint sum on a fine subgrid skipping the singular center region,
        // plus the analytic integral over a small inner ball for that region.
        let h = [0.5, 0.7, 0.6];
        let beta = -1.0;
        let m = 140;
        let mut s = 0.0;
        let r0 = 0.01;
        let cell = [h[0] / m as f64, h[1] / m as f64, h[2] / m as f64];
        for i in 0..m {
            for j in 0..m {
                for k in 0..m {
                    let x = -h[0] / 2.0 + (i as f64 + 0.5) * cell[0];
                    let y = -h[1] / 2.0 + (j as f64 + 0.5) * cell[1];
                    let z = -h[2] / 2.0 + (k as f64 + 0.5) * cell[2];
                    let r = (x * x + y * y + z * z).sqrt();
                    if r >= r0 {
                        s += r.powf(beta);
                    }
                }
            }
        }
        s *= cell[0] * cell[1] * cell[2];
        // ∫_{|z|<r0} |z|^β = 4π r0^{β+3}/(β+3)
        s += 4.0 * PI * r0.powf(beta + 3.0) / (beta + 3.0);
        let exact = self_cell_integral(h, beta);
        assert!((s - exact).abs() < 2e-3 * exact, "{s} vs {exact}");
    }

    #[test]
    fn direct_sum_guard() {
        let g = GridSpec::cubic(18, 4.0, 1.0).unwrap();
        let u = RealField::zeros(g);
        assert!(matches!(
            riesz_potential_direct(&u, 1.0),
            Err(Error::GridTooLarge { .. })
        ));
    }

    #[test]
    fn zero_source() {
        let g = GridSpec::cubic(8, 4.0, 0.9).unwrap();
        let u = RealField::zeros(g);
        assert_eq!(solve_poisson(&u, 0.9).unwrap().phi.max_abs(), 0.0);
        assert_eq!(riesz_potential_direct(&u, 0.9).unwrap().phi.max_abs(), 0.0);
        assert_eq!(coupling_integral(&u, &solve_poisson(&u, 0.9).unwrap()).unwrap(), 0.0);
    }

    #[test]
    fn sobolev_constant_rejects_out_of_range() {
        assert!(sobolev_best_constant(3, 1.6).is_err());
        assert!(sobolev_best_constant(3, 0.0).is_err());
        assert!(sobolev_best_constant(3, 1.0).unwrap() > 0.0);
    }
}
