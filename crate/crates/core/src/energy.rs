//! Reduced functional
//!
//! `J(u) = ½‖u‖²_E + (K_α/4)∫φ(u)u² − ∫F(x,u)`
//!
//! and its derivative in strong form
//! `g = (−Δ)^α u + Vu + K_α φ(u)u − f(x,u)`, so that `J′(u)[v] = ∫ g v`.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::grid::{self, frac_laplacian, frac_symbol, GridSpec, RealField};
use crate::model::{critical_exponent, Nonlinearity, Potential};
use crate::riesz::{convolve_source, k_alpha};
use crate::sum::csum;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct EnergyBreakdown {
    /// `½∫(|(−Δ)^{α/2}u|² + Vu²)`
    pub quadratic: f64,
    /// `(K_α/4)∫u²φ(u)`
    pub coupling: f64,
    /// `∫F(x,u)`
    pub nonlinear: f64,
    pub total: f64,
}

impl EnergyBreakdown {
    fn new(quadratic: f64, coupling: f64, nonlinear: f64) -> Self {
        Self {
            quadratic,
            coupling,
            nonlinear,
            total: quadratic + coupling - nonlinear,
        }
    }
}

#[derive(Debug, Clone)]
pub struct GradientField {
    pub g: RealField,
    pub l2_norm: f64,
    /// `‖((−Δ)^α + V̄)^{−1/2} g‖₂` with V̄ the mean of V.
    pub preconditioned_norm: f64,
}

/// J bound to a grid, potential and nonlinearity. α is taken from the grid.
#[derive(Debug, Clone)]
pub struct Functional {
    grid: GridSpec,
    potential: Potential,
    v: RealField,
    nl: Nonlinearity,
    k_alpha: f64,
    v_mean: f64,
    warnings: Vec<String>,
}

impl Functional {
    pub fn new(grid: GridSpec, potential: Potential, nl: Nonlinearity) -> Result<Self> {
        let v = potential.evaluate(&grid)?;
        if let Some(&bad) = v.values().iter().find(|&&x| x <= 0.0) {
            return Err(Error::invalid(format!("potential must be positive, found {bad}")));
        }
        let alpha = grid.alpha();
        let mut warnings = Vec::new();
        if alpha <= 0.75 {
            warnings.push(format!("alpha = {alpha} <= 3/4: outside the variational regime"));
        }
        let p = nl.growth.p;
        let crit = critical_exponent(alpha);
        if !nl.is_zero() && !(p > 4.0 && (alpha <= 0.75 || p < crit)) {
            warnings.push(format!("growth exponent p = {p} outside (4, {crit})"));
        }
        Ok(Self {
            grid,
            v_mean: v.integral() / grid.volume(),
            v,
            k_alpha: k_alpha(alpha)?,
            potential,
            nl,
            warnings,
        })
    }

    pub fn grid(&self) -> &GridSpec {
        &self.grid
    }

    pub fn alpha(&self) -> f64 {
        self.grid.alpha()
    }

    pub fn potential(&self) -> &Potential {
        &self.potential
    }

    pub fn potential_field(&self) -> &RealField {
        &self.v
    }

    pub fn nonlinearity(&self) -> &Nonlinearity {
        &self.nl
    }

    pub fn k_alpha(&self) -> f64 {
        self.k_alpha
    }

    pub fn v_mean(&self) -> f64 {
        self.v_mean
    }

    /// Regime violations; evaluation proceeds regardless.
    pub fn warnings(&self) -> &[String] {
        &self.warnings
    }

    fn check(&self, u: &RealField) -> Result<()> {
        self.grid.check_same(u.grid())
    }

    /// `φ(u) = |·|^{2α−3} ⋆ u²` by padded convolution.
    pub fn phi(&self, u: &RealField) -> Result<RealField> {
        self.check(u)?;
        convolve_source(&u.squared(), self.alpha())
    }

    pub fn norm_e(&self, u: &RealField) -> Result<f64> {
        grid::norm_e(u, &self.v, self.alpha())
    }

    pub fn inner_e(&self, u: &RealField, w: &RealField) -> Result<f64> {
        grid::inner_e(u, w, &self.v, self.alpha())
    }

    pub fn energy(&self, u: &RealField) -> Result<EnergyBreakdown> {
        let phi = self.phi(u)?;
        self.energy_with_phi(u, &phi)
    }

    pub fn energy_with_phi(&self, u: &RealField, phi: &RealField) -> Result<EnergyBreakdown> {
        self.check(u)?;
        self.check(phi)?;
        let quadratic = 0.5 * self.norm_e(u)?.powi(2);
        let coupling = 0.25 * self.k_alpha * u.squared().dot(phi)?;
        let nonlinear = self.integrate_pointwise(u, |x, s| self.nl.primitive(x, s));
        Ok(EnergyBreakdown::new(quadratic, coupling, nonlinear))
    }

    /// `∫ h(x, u(x)) dx` by collocation.
    pub fn integrate_pointwise(&self, u: &RealField, h: impl Fn([f64; 3], f64) -> f64) -> f64 {
        let g = &self.grid;
        csum(u.values().iter().enumerate().map(|(i, &s)| h(g.coord(i), s))) * g.cell_volume()
    }

    pub fn gradient(&self, u: &RealField) -> Result<GradientField> {
        let phi = self.phi(u)?;
        self.gradient_with_phi(u, &phi)
    }

    pub fn gradient_with_phi(&self, u: &RealField, phi: &RealField) -> Result<GradientField> {
        self.check(u)?;
        self.check(phi)?;
        let lap = frac_laplacian(u, self.alpha())?;
        let grid = self.grid;
        let values: Vec<f64> = (0..grid.len())
            .map(|i| {
                let s = u.values()[i];
                lap.values()[i] + self.v.values()[i] * s + self.k_alpha * phi.values()[i] * s
                    - self.nl.f(grid.coord(i), s)
            })
            .collect();
        let g = RealField::new(grid, values)?;
        Ok(GradientField {
            l2_norm: g.l2_norm(),
            preconditioned_norm: self.preconditioned_norm(&g),
            g,
        })
    }

    /// `J′(u)[w] = ∫ g w`.
    pub fn derivative(&self, u: &RealField, w: &RealField) -> Result<f64> {
        self.gradient(u)?.g.dot(w)
    }

    /// `((−Δ)^α + V̄)^{−1} r`.
    pub fn precondition(&self, r: &RealField) -> RealField {
        let (alpha, vm) = (self.alpha(), self.v_mean);
        grid::apply_multiplier(r, |k2| 1.0 / (frac_symbol(k2, alpha) + vm))
    }

    pub fn preconditioned_norm(&self, r: &RealField) -> f64 {
        let (alpha, vm) = (self.alpha(), self.v_mean);
        grid::spectral_quadratic(r, |k2| 1.0 / (frac_symbol(k2, alpha) + vm)).sqrt()
    }

    /// Both sides of `J(u) − ¼J′(u)[u] = ¼‖u‖²_E + ∫G(x,u)`.
    pub fn cerami_terms(&self, u: &RealField) -> Result<CeramiTerms> {
        let phi = self.phi(u)?;
        let e = self.energy_with_phi(u, &phi)?;
        let grad = self.gradient_with_phi(u, &phi)?;
        let lhs = e.total - 0.25 * grad.g.dot(u)?;
        let quarter_norm = 0.5 * e.quadratic;
        let g_integral = self.integrate_pointwise(u, |x, s| self.nl.g_combination(x, s));
        let rhs = quarter_norm + g_integral;
        let weight_integral = self.integrate_pointwise(u, |x, _| self.nl.weight(x));
        Ok(CeramiTerms {
            lhs,
            rhs,
            quarter_norm,
            g_integral,
            lower_bound: quarter_norm - self.nl.a0 * weight_integral,
            defect: (lhs - rhs).abs() / (1.0 + lhs.abs()),
        })
    }

    pub fn cerami_identity_check(&self, u: &RealField) -> Result<f64> {
        Ok(self.cerami_terms(u)?.defect)
    }

    /// `|J(u) − J(−u)| / (1 + |J(u)|)`.
    pub fn evenness_check(&self, u: &RealField) -> Result<f64> {
        let a = self.energy(u)?.total;
        let b = self.energy(&u.scaled(-1.0))?.total;
        Ok((a - b).abs() / (1.0 + a.abs()))
    }
}

#[derive(Debug, Clone, Copy, Serialize)]
pub struct CeramiTerms {
    pub lhs: f64,
    pub rhs: f64,
    /// `¼‖u‖²_E`
    pub quarter_norm: f64,
    /// `∫G(x,u)`
    pub g_integral: f64,
    /// `¼‖u‖²_E − a₀∫g`
    pub lower_bound: f64,
    pub defect: f64,
}

fn functional_for(u: &RealField, potential: &Potential, nl: &Nonlinearity, alpha: f64) -> Result<Functional> {
    Functional::new(u.grid().with_alpha(alpha)?, potential.clone(), nl.clone())
}

fn on_grid(u: &RealField, f: &Functional) -> Result<RealField> {
    u.clone().with_grid(*f.grid())
}

pub fn energy(u: &RealField, potential: &Potential, nl: &Nonlinearity, alpha: f64) -> Result<EnergyBreakdown> {
    let f = functional_for(u, potential, nl, alpha)?;
    f.energy(&on_grid(u, &f)?)
}

pub fn gradient_field(u: &RealField, potential: &Potential, nl: &Nonlinearity, alpha: f64) -> Result<GradientField> {
    let f = functional_for(u, potential, nl, alpha)?;
    f.gradient(&on_grid(u, &f)?)
}

pub fn cerami_identity_check(u: &RealField, potential: &Potential, nl: &Nonlinearity, alpha: f64) -> Result<f64> {
    let f = functional_for(u, potential, nl, alpha)?;
    f.cerami_identity_check(&on_grid(u, &f)?)
}

pub fn evenness_check(u: &RealField, potential: &Potential, nl: &Nonlinearity, alpha: f64) -> Result<f64> {
    let f = functional_for(u, potential, nl, alpha)?;
    f.evenness_check(&on_grid(u, &f)?)
}
