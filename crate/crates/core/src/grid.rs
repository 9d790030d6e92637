//! Periodic box discretization, spectral transforms and the norms built on them.
//!
//! Frequencies follow the angular convention `k = 2π m / L`. The forward
//! transform is scaled so that `û(k) ≈ vol^{-1/2} ∫ u(x) e^{-ik·x} dx`, which
//! makes Parseval read `Σ |u|² dV = Σ |û|²` over the full spectrum.

use std::f64::consts::PI;

use num_complex::Complex64;
use rand::Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::Serialize;

use crate::error::{Error, Result};
use crate::fft;
use crate::sum::csum;

/// Rejects fractional orders outside `(0, 1]`.
pub fn check_order(alpha: f64) -> Result<()> {
    if alpha.is_finite() && alpha > 0.0 && alpha <= 1.0 {
        Ok(())
    } else {
        Err(Error::invalid(format!("fractional order {alpha} outside (0, 1]")))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct GridSpec {
    n: [usize; 3],
    l: [f64; 3],
    alpha: f64,
}

impl GridSpec {
    pub fn new(n: [usize; 3], l: [f64; 3], alpha: f64) -> Result<Self> {
        for (axis, &ni) in n.iter().enumerate() {
            if ni < 4 || ni % 2 != 0 {
                return Err(Error::invalid(format!(
                    "axis {axis}: point count {ni} must be even and >= 4"
                )));
            }
        }
        for (axis, &li) in l.iter().enumerate() {
            if !(li.is_finite() && li > 0.0) {
                return Err(Error::invalid(format!("axis {axis}: box length {li} must be positive")));
            }
        }
        check_order(alpha)?;
        Ok(Self { n, l, alpha })
    }

    /// Cube with `n` points and side `l` on every axis.
    pub fn cubic(n: usize, l: f64, alpha: f64) -> Result<Self> {
        Self::new([n; 3], [l; 3], alpha)
    }

    pub fn with_alpha(&self, alpha: f64) -> Result<Self> {
        Self::new(self.n, self.l, alpha)
    }

    pub fn n(&self) -> [usize; 3] {
        self.n
    }

    pub fn lengths(&self) -> [f64; 3] {
        self.l
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn len(&self) -> usize {
        self.n[0] * self.n[1] * self.n[2]
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn spacing(&self) -> [f64; 3] {
        [
            self.l[0] / self.n[0] as f64,
            self.l[1] / self.n[1] as f64,
            self.l[2] / self.n[2] as f64,
        ]
    }

    pub fn cell_volume(&self) -> f64 {
        let h = self.spacing();
        h[0] * h[1] * h[2]
    }

    pub fn volume(&self) -> f64 {
        self.l[0] * self.l[1] * self.l[2]
    }

    #[inline]
    pub fn index(&self, i: usize, j: usize, k: usize) -> usize {
        i + self.n[0] * (j + self.n[1] * k)
    }

    #[inline]
    pub fn unravel(&self, idx: usize) -> [usize; 3] {
        let i = idx % self.n[0];
        let j = (idx / self.n[0]) % self.n[1];
        let k = idx / (self.n[0] * self.n[1]);
        [i, j, k]
    }

    /// Physical coordinate of a node; the box is centered at the origin, which
    /// is itself a node (index `n/2` on every axis).
    #[inline]
    pub fn coord(&self, idx: usize) -> [f64; 3] {
        let ijk = self.unravel(idx);
        let h = self.spacing();
        let mut x = [0.0; 3];
        for a in 0..3 {
            x[a] = (ijk[a] as f64 - (self.n[a] / 2) as f64) * h[a];
        }
        x
    }

    /// Signed mode number for storage index `m` along an axis of `n` points.
    #[inline]
    pub(crate) fn signed_mode(m: usize, n: usize) -> i64 {
        if m <= n / 2 {
            m as i64
        } else {
            m as i64 - n as i64
        }
    }

    /// Per-axis tables of k² for storage indices of the half spectrum.
    pub(crate) fn k2_tables(&self) -> [Vec<f64>; 3] {
        let table = |axis: usize, count: usize| -> Vec<f64> {
            (0..count)
                .map(|m| {
                    let k = 2.0 * PI * Self::signed_mode(m, self.n[axis]) as f64 / self.l[axis];
                    k * k
                })
                .collect()
        };
        [table(0, self.n[0] / 2 + 1), table(1, self.n[1]), table(2, self.n[2])]
    }

    /// |k|² for every half-spectrum coefficient, in storage order.
    pub(crate) fn half_spectrum_k2(&self) -> Vec<f64> {
        let [tx, ty, tz] = self.k2_tables();
        let mut out = Vec::with_capacity(tx.len() * ty.len() * tz.len());
        for kz in &tz {
            for ky in &ty {
                for kx in &tx {
                    out.push(kx + ky + kz);
                }
            }
        }
        out
    }

    /// Multiplicity of a half-spectrum coefficient in the full spectrum.
    #[inline]
    pub(crate) fn parseval_weight(&self, storage_idx: usize) -> f64 {
        let hx = self.n[0] / 2 + 1;
        let ix = storage_idx % hx;
        if ix == 0 || ix == self.n[0] / 2 {
            1.0
        } else {
            2.0
        }
    }

    pub fn check_same(&self, other: &GridSpec) -> Result<()> {
        if self.n == other.n && self.l == other.l {
            Ok(())
        } else {
            Err(Error::GridMismatch(format!(
                "{:?}/{:?} vs {:?}/{:?}",
                self.n, self.l, other.n, other.l
            )))
        }
    }
}

/// Real scalar field sampled on a grid, x-index fastest.
#[derive(Debug, Clone, PartialEq)]
pub struct RealField {
    grid: GridSpec,
    values: Vec<f64>,
}

impl RealField {
    pub fn new(grid: GridSpec, values: Vec<f64>) -> Result<Self> {
        if values.len() != grid.len() {
            return Err(Error::invalid(format!(
                "field has {} values, grid needs {}",
                values.len(),
                grid.len()
            )));
        }
        if let Some((index, &value)) = values.iter().enumerate().find(|(_, v)| !v.is_finite()) {
            return Err(Error::NonFinite { index, value });
        }
        Ok(Self { grid, values })
    }

    /// Internal constructor for values produced by arithmetic on valid fields.
    pub(crate) fn from_raw(grid: GridSpec, values: Vec<f64>) -> Self {
        debug_assert_eq!(values.len(), grid.len());
        Self { grid, values }
    }

    pub fn zeros(grid: GridSpec) -> Self {
        Self {
            grid,
            values: vec![0.0; grid.len()],
        }
    }

    pub fn constant(grid: GridSpec, c: f64) -> Result<Self> {
        Self::new(grid, vec![c; grid.len()])
    }

    pub fn from_fn(grid: GridSpec, f: impl Fn([f64; 3]) -> f64) -> Result<Self> {
        let values = (0..grid.len()).map(|i| f(grid.coord(i))).collect();
        Self::new(grid, values)
    }

    pub fn grid(&self) -> &GridSpec {
        &self.grid
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    /// Re-tag the field with a grid of identical shape (e.g. a different α).
    pub fn with_grid(mut self, grid: GridSpec) -> Result<Self> {
        self.grid.check_same(&grid)?;
        self.grid = grid;
        Ok(self)
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> Result<RealField> {
        RealField::new(self.grid, self.values.iter().map(|&v| f(v)).collect())
    }

    pub fn scaled(&self, t: f64) -> RealField {
        RealField::from_raw(self.grid, self.values.iter().map(|v| t * v).collect())
    }

    pub fn add(&self, other: &RealField) -> Result<RealField> {
        self.axpy(1.0, other)
    }

    pub fn sub(&self, other: &RealField) -> Result<RealField> {
        self.axpy(-1.0, other)
    }

    /// `self + a * other`
    pub fn axpy(&self, a: f64, other: &RealField) -> Result<RealField> {
        self.grid.check_same(&other.grid)?;
        Ok(RealField::from_raw(
            self.grid,
            self.values.iter().zip(&other.values).map(|(x, y)| x + a * y).collect(),
        ))
    }

    pub fn pointwise_mul(&self, other: &RealField) -> Result<RealField> {
        self.grid.check_same(&other.grid)?;
        Ok(RealField::from_raw(
            self.grid,
            self.values.iter().zip(&other.values).map(|(x, y)| x * y).collect(),
        ))
    }

    pub fn squared(&self) -> RealField {
        RealField::from_raw(self.grid, self.values.iter().map(|v| v * v).collect())
    }

    /// L² inner product `∫ u v dx` (collocation).
    pub fn dot(&self, other: &RealField) -> Result<f64> {
        self.grid.check_same(&other.grid)?;
        Ok(csum(self.values.iter().zip(&other.values).map(|(x, y)| x * y)) * self.grid.cell_volume())
    }

    pub fn l2_norm(&self) -> f64 {
        (csum(self.values.iter().map(|v| v * v)) * self.grid.cell_volume()).sqrt()
    }

    /// Integral `∫ u dx`.
    pub fn integral(&self) -> f64 {
        csum(self.values.iter().copied()) * self.grid.cell_volume()
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0_f64, |m, v| m.max(v.abs()))
    }

    /// Mirror image across the plane through the box center normal to `axis`.
    pub fn reflected(&self, axis: usize) -> RealField {
        let n = self.grid.n;
        let mut out = vec![0.0; self.values.len()];
        for (idx, slot) in out.iter_mut().enumerate() {
            let mut ijk = self.grid.unravel(idx);
            ijk[axis] = (n[axis] - ijk[axis]) % n[axis];
            *slot = self.values[self.grid.index(ijk[0], ijk[1], ijk[2])];
        }
        RealField::from_raw(self.grid, out)
    }

    /// Smooth decaying random field: a sum of `bumps` Gaussians with signed
    /// normal amplitudes, centers in the middle half of the box and widths
    /// between 8% and 15% of the shortest side.
    pub fn random_bumps<R: Rng + ?Sized>(grid: GridSpec, rng: &mut R, bumps: usize, amplitude: f64) -> RealField {
        let lmin = grid.l.iter().cloned().fold(f64::INFINITY, f64::min);
        let params: Vec<([f64; 3], f64, f64)> = (0..bumps)
            .map(|_| {
                let c = [
                    rng.gen_range(-0.25..0.25) * grid.l[0],
                    rng.gen_range(-0.25..0.25) * grid.l[1],
                    rng.gen_range(-0.25..0.25) * grid.l[2],
                ];
                let w = rng.gen_range(0.08..0.15) * lmin;
                let a: f64 = StandardNormal.sample(rng);
                (c, w, a * amplitude)
            })
            .collect();
        let values = (0..grid.len())
            .map(|idx| {
                let x = grid.coord(idx);
                params
                    .iter()
                    .map(|(c, w, a)| {
                        let r2 = (x[0] - c[0]).powi(2) + (x[1] - c[1]).powi(2) + (x[2] - c[2]).powi(2);
                        a * (-r2 / (2.0 * w * w)).exp()
                    })
                    .sum()
            })
            .collect();
        RealField::from_raw(grid, values)
    }
}

/// Half-spectrum coefficients of a real field (Hermitian symmetry implied).
#[derive(Debug, Clone)]
pub struct SpectralField {
    grid: GridSpec,
    coeffs: Vec<Complex64>,
}

impl SpectralField {
    pub fn grid(&self) -> &GridSpec {
        &self.grid
    }

    /// Stored coefficients: `nx/2+1` x-frequencies fastest, then y, then z.
    pub fn coefficients(&self) -> &[Complex64] {
        &self.coeffs
    }

    /// Coefficient for integer mode numbers `(mx, my, mz)` anywhere in the
    /// full spectrum; negative x-modes come from conjugate symmetry.
    pub fn coefficient(&self, m: [i64; 3]) -> Complex64 {
        let n = self.grid.n;
        let wrap = |v: i64, n: usize| v.rem_euclid(n as i64) as usize;
        let (ix, iy, iz) = (wrap(m[0], n[0]), wrap(m[1], n[1]), wrap(m[2], n[2]));
        let hx = n[0] / 2 + 1;
        if ix < hx {
            self.coeffs[ix + hx * (iy + n[1] * iz)]
        } else {
            let (jx, jy, jz) = (wrap(-m[0], n[0]), wrap(-m[1], n[1]), wrap(-m[2], n[2]));
            self.coeffs[jx + hx * (jy + n[1] * jz)].conj()
        }
    }

    /// Full-spectrum `Σ |û|²`.
    pub fn energy(&self) -> f64 {
        csum(
            self.coeffs
                .iter()
                .enumerate()
                .map(|(i, c)| self.grid.parseval_weight(i) * c.norm_sqr()),
        )
    }
}

fn unitary_scale(grid: &GridSpec) -> f64 {
    (grid.cell_volume() / grid.len() as f64).sqrt()
}

pub fn forward_transform(u: &RealField) -> Result<SpectralField> {
    if let Some((index, &value)) = u.values.iter().enumerate().find(|(_, v)| !v.is_finite()) {
        return Err(Error::NonFinite { index, value });
    }
    let plan = fft::plan(u.grid.n);
    let s = unitary_scale(&u.grid);
    let mut coeffs = plan.forward(&u.values);
    coeffs.iter_mut().for_each(|c| *c *= s);
    Ok(SpectralField { grid: u.grid, coeffs })
}

pub fn inverse_transform(spec: &SpectralField) -> Result<RealField> {
    let plan = fft::plan(spec.grid.n);
    let s = 1.0 / (unitary_scale(&spec.grid) * spec.grid.len() as f64);
    let values: Vec<f64> = plan.inverse(spec.coeffs.clone()).into_iter().map(|v| v * s).collect();
    RealField::new(spec.grid, values)
}

/// Applies a Fourier multiplier given as a function of |k|².
pub(crate) fn apply_multiplier(u: &RealField, mult: impl Fn(f64) -> f64) -> RealField {
    let plan = fft::plan(u.grid.n);
    let k2 = u.grid.half_spectrum_k2();
    let mut spec = plan.forward(&u.values);
    let inv_n = 1.0 / u.grid.len() as f64;
    for (c, &q) in spec.iter_mut().zip(&k2) {
        *c *= mult(q) * inv_n;
    }
    RealField::from_raw(u.grid, plan.inverse(spec))
}

/// Weighted spectral quadratic form `Σ w(|k|²) |û|²` over the full spectrum.
pub(crate) fn spectral_quadratic(u: &RealField, weight: impl Fn(f64) -> f64) -> f64 {
    let spec = forward_transform(u).expect("fields are finite by construction");
    let k2 = u.grid.half_spectrum_k2();
    csum(
        spec.coeffs
            .iter()
            .zip(&k2)
            .enumerate()
            .map(|(i, (c, &q))| u.grid.parseval_weight(i) * weight(q) * c.norm_sqr()),
    )
}

fn spectral_bilinear(u: &RealField, v: &RealField, weight: impl Fn(f64) -> f64) -> f64 {
    let su = forward_transform(u).expect("finite");
    let sv = forward_transform(v).expect("finite");
    let k2 = u.grid.half_spectrum_k2();
    csum(
        su.coeffs
            .iter()
            .zip(&sv.coeffs)
            .zip(&k2)
            .enumerate()
            .map(|(i, ((a, b), &q))| u.grid.parseval_weight(i) * weight(q) * (a * b.conj()).re),
    )
}

/// Multiplier `|k|^{2α}`, zero at k = 0.
#[inline]
pub(crate) fn frac_symbol(k2: f64, alpha: f64) -> f64 {
    if k2 == 0.0 {
        0.0
    } else {
        k2.powf(alpha)
    }
}

/// `(−Δ)^α u` via the multiplier `|k|^{2α}`.
pub fn frac_laplacian(u: &RealField, alpha: f64) -> Result<RealField> {
    check_order(alpha)?;
    Ok(apply_multiplier(u, |k2| frac_symbol(k2, alpha)))
}

/// Squared seminorm `∫ |(−Δ)^{α/2} u|² dx = Σ |k|^{2α} |û|²`.
pub fn seminorm_dalpha(u: &RealField, alpha: f64) -> Result<f64> {
    check_order(alpha)?;
    Ok(spectral_quadratic(u, |k2| frac_symbol(k2, alpha)))
}

fn check_potential(u: &RealField, v_pot: &RealField) -> Result<()> {
    u.grid.check_same(&v_pot.grid)?;
    if let Some((i, &v)) = v_pot.values.iter().enumerate().find(|(_, &v)| v <= 0.0) {
        return Err(Error::invalid(format!(
            "potential must be positive (inf V >= a1 > 0); V[{i}] = {v}"
        )));
    }
    Ok(())
}

/// `(u, v)_E = ∫ (−Δ)^{α/2}u (−Δ)^{α/2}v + V u v`.
pub fn inner_e(u: &RealField, v: &RealField, v_pot: &RealField, alpha: f64) -> Result<f64> {
    check_order(alpha)?;
    u.grid.check_same(&v.grid)?;
    check_potential(u, v_pot)?;
    let kinetic = spectral_bilinear(u, v, |k2| frac_symbol(k2, alpha));
    let potential = csum(
        u.values
            .iter()
            .zip(&v.values)
            .zip(&v_pot.values)
            .map(|((a, b), w)| w * a * b),
    ) * u.grid.cell_volume();
    Ok(kinetic + potential)
}

/// `‖u‖_E`.
pub fn norm_e(u: &RealField, v_pot: &RealField, alpha: f64) -> Result<f64> {
    check_order(alpha)?;
    check_potential(u, v_pot)?;
    let kinetic = spectral_quadratic(u, |k2| frac_symbol(k2, alpha));
    let potential = csum(u.values.iter().zip(&v_pot.values).map(|(a, w)| w * a * a)) * u.grid.cell_volume();
    Ok((kinetic + potential).sqrt())
}

/// `(Σ |u|^r dV)^{1/r}`.
pub fn lp_norm(u: &RealField, r: f64) -> Result<f64> {
    if !(r.is_finite() && r >= 1.0) {
        return Err(Error::invalid(format!("Lebesgue exponent {r} must be >= 1")));
    }
    let s = if r == 2.0 {
        csum(u.values.iter().map(|v| v * v))
    } else {
        csum(u.values.iter().map(|v| v.abs().powf(r)))
    };
    Ok((s * u.grid.cell_volume()).powf(1.0 / r))
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn grid() -> GridSpec {
        GridSpec::new([8, 6, 10], [6.0, 5.0, 7.0], 0.8).unwrap()
    }

    fn mode_field(g: GridSpec, m: [i64; 3]) -> (RealField, f64) {
        let l = g.lengths();
        let k = [
            2.0 * PI * m[0] as f64 / l[0],
            2.0 * PI * m[1] as f64 / l[1],
            2.0 * PI * m[2] as f64 / l[2],
        ];
        let u = RealField::from_fn(g, |x| (k[0] * x[0] + k[1] * x[1] + k[2] * x[2]).cos()).unwrap();
        (u, k[0] * k[0] + k[1] * k[1] + k[2] * k[2])
    }

    #[test]
    fn rejects_bad_grids() {
        assert!(GridSpec::cubic(5, 1.0, 1.0).is_err());
        assert!(GridSpec::cubic(2, 1.0, 1.0).is_err());
        assert!(GridSpec::cubic(8, 0.0, 1.0).is_err());
        assert!(GridSpec::cubic(8, 1.0, 0.0).is_err());
        assert!(GridSpec::cubic(8, 1.0, 1.5).is_err());
        assert!(GridSpec::cubic(8, 1.0, 1.0).is_ok());
    }

    #[test]
    fn rejects_non_finite_values() {
        let g = grid();
        let mut v = vec![0.0; g.len()];
        v[3] = f64::NAN;
        assert!(matches!(RealField::new(g, v), Err(Error::NonFinite { index: 3, .. })));
    }

    #[test]
    fn centered_coordinates() {
        let g = grid();
        let c = g.index(4, 3, 5);
        assert_eq!(g.coord(c), [0.0, 0.0, 0.0]);
        assert_eq!(g.coord(0), [-3.0, -2.5, -3.5]);
    }

    #[test]
    fn constant_field_has_only_dc() {
        let g = grid();
        let u = RealField::constant(g, 2.5).unwrap();
        let s = forward_transform(&u).unwrap();
        let c0 = s.coefficients()[0];
        assert!((c0.re - 2.5 * g.volume().sqrt()).abs() < 1e-12);
        assert!(s.coefficients()[1..].iter().all(|c| c.norm() < 1e-12));
    }

    #[test]
    fn pure_mode_has_two_conjugate_coefficients() {
        let g = grid();
        let (u, _) = mode_field(g, [1, 2, -3]);
        let s = forward_transform(&u).unwrap();
        let n = g.n();
        let mut nonzero = vec![];
        for mz in 0..n[2] as i64 {
            for my in 0..n[1] as i64 {
                for mx in 0..n[0] as i64 {
                    let c = s.coefficient([mx, my, mz]);
                    if c.norm() > 1e-10 {
                        nonzero.push((c, [mx, my, mz]));
                    }
                }
            }
        }
        assert_eq!(nonzero.len(), 2);
        let a = s.coefficient([1, 2, -3]);
        let b = s.coefficient([-1, -2, 3]);
        assert!((a - b.conj()).norm() < 1e-12);
        // |û|² sums to ∫cos² = vol/2 split evenly.
        assert!((a.norm_sqr() - g.volume() / 4.0).abs() < 1e-10);
    }

    #[test]
    fn hermitian_symmetry_on_random_field() {
        let g = grid();
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let u = RealField::random_bumps(g, &mut rng, 4, 1.0);
        let s = forward_transform(&u).unwrap();
        for m in [[1, 1, 1], [3, -2, 4], [0, 3, 5], [4, 3, 5]] {
            let a = s.coefficient(m);
            let b = s.coefficient([-m[0], -m[1], -m[2]]);
            assert!((a - b.conj()).norm() < 1e-12, "{m:?}");
        }
    }

    #[test]
    fn parseval() {
        let g = grid();
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let values: Vec<f64> = (0..g.len()).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let u = RealField::new(g, values).unwrap();
        let s = forward_transform(&u).unwrap();
        let phys = u.l2_norm().powi(2);
        assert!((s.energy() - phys).abs() <= 1e-12 * phys);
    }

    #[test]
    fn frac_laplacian_on_mode() {
        let g = grid();
        let (u, k2) = mode_field(g, [2, -1, 3]);
        let out = frac_laplacian(&u, 0.8).unwrap();
        let expect = u.scaled(k2.powf(0.8));
        let err = out.sub(&expect).unwrap().max_abs() / expect.max_abs();
        assert!(err < 1e-12, "{err}");
    }

    #[test]
    fn frac_laplacian_rejects_bad_order() {
        let u = RealField::zeros(grid());
        assert!(frac_laplacian(&u, 0.0).is_err());
        assert!(frac_laplacian(&u, 1.2).is_err());
        assert!(frac_laplacian(&u, f64::NAN).is_err());
    }

    #[test]
    fn seminorm_of_constant_and_mode() {
        let g = grid();
        let c = RealField::constant(g, 3.0).unwrap();
        assert!(seminorm_dalpha(&c, 0.7).unwrap().abs() < 1e-20);
        let (u, k2) = mode_field(g, [1, 0, 2]);
        let got = seminorm_dalpha(&u, 0.7).unwrap();
        let expect = k2.powf(0.7) * g.volume() / 2.0;
        assert!((got - expect).abs() < 1e-12 * expect);
    }

    #[test]
    fn energy_norm_single_mode() {
        let g = grid();
        let (u, k2) = mode_field(g, [0, 1, 1]);
        let v = RealField::constant(g, 1.0).unwrap();
        let n = norm_e(&u, &v, 0.8).unwrap();
        let expect = (k2.powf(0.8) + 1.0) * g.volume() / 2.0;
        assert!((n * n - expect).abs() < 1e-12 * expect);
        assert_eq!(norm_e(&RealField::zeros(g), &v, 0.8).unwrap(), 0.0);
    }

    #[test]
    fn energy_norm_rejects_nonpositive_potential() {
        let g = grid();
        let u = RealField::constant(g, 1.0).unwrap();
        let mut vv = vec![1.0; g.len()];
        vv[7] = 0.0;
        let v = RealField::new(g, vv).unwrap();
        assert!(norm_e(&u, &v, 0.8).is_err());
        assert!(inner_e(&u, &u, &v, 0.8).is_err());
    }

    #[test]
    fn lp_norm_spike_and_errors() {
        let g = grid();
        let mut vals = vec![0.0; g.len()];
        vals[17] = 3.0;
        let u = RealField::new(g, vals).unwrap();
        let dv = g.cell_volume();
        for r in [1.0, 2.0, 3.5] {
            let expect = (3.0_f64.powf(r) * dv).powf(1.0 / r);
            assert!((lp_norm(&u, r).unwrap() - expect).abs() < 1e-14 * expect);
        }
        assert!(lp_norm(&u, 0.5).is_err());
    }

    #[test]
    fn reflection_is_involution() {
        let g = grid();
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let u = RealField::random_bumps(g, &mut rng, 3, 1.0);
        for axis in 0..3 {
            assert_eq!(u.reflected(axis).reflected(axis), u);
        }
        let x = RealField::from_fn(g, |p| p[0]).unwrap();
        let rx = x.reflected(0);
        // x ↦ −x except the boundary node −L/2, which is its own periodic image.
        for idx in 0..g.len() {
            let p = g.coord(idx);
            if p[0] != -3.0 {
                assert_eq!(rx.values()[idx], -p[0]);
            }
        }
    }
}
