//! Potentials, nonlinearities and sampled checks of the structural hypotheses.
//!
//! Hypotheses checked by [`check_hypotheses`]:
//!
//! * (V)  `inf V ≥ a₁ > 0` and `V → ∞` (monotone growth along rays)
//! * (H1) `|f(x,u)| ≤ c₁|u| + c₂|u|^{p−1}`, `4 < p < 6/(3−2α)`, `α > 3/4`, and
//!   `f(x,u)u ≥ 0` for `u ≥ 0`
//! * (H2) `F(x,u)/u⁴ → ∞` uniformly in x
//! * (H3) `G(x,u) = ¼f(x,u)u − F(x,u) ≥ −a₀ g(x)` with `g ≥ 0` integrable
//! * (H4) `f(x,−u) = −f(x,u)`
//!
//! Limits at infinity cannot be sampled, so (V) and (H2) are semi-decisions:
//! monotone growth to the box boundary, and monotone growth of `F/u⁴` along
//! a geometric ladder that must end above a threshold.

use std::collections::BTreeMap;
use std::fmt;
use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::grid::{GridSpec, RealField};
use crate::quad;

#[derive(Debug, Clone)]
pub enum Potential {
    /// `V(x) = base + coef·|x − x_c|^exponent`, box-centered.
    ConstantPlusRadial { base: f64, coef: f64, exponent: f64 },
    /// User samples on a specific grid; `coercive` is the user's declaration
    /// that the tabulated V tends to infinity.
    Tabulated { field: RealField, coercive: bool },
}

impl Potential {
    /// `V(x) = 1 + |x − x_c|²`.
    pub fn harmonic() -> Self {
        Potential::ConstantPlusRadial {
            base: 1.0,
            coef: 1.0,
            exponent: 2.0,
        }
    }

    pub fn constant(c: f64) -> Self {
        Potential::ConstantPlusRadial {
            base: c,
            coef: 0.0,
            exponent: 2.0,
        }
    }

    pub fn evaluate(&self, grid: &GridSpec) -> Result<RealField> {
        match self {
            Potential::ConstantPlusRadial { base, coef, exponent } => {
                if !(*base > 0.0 && *coef >= 0.0 && *exponent > 0.0) {
                    return Err(Error::invalid(format!(
                        "radial potential needs base > 0, coef >= 0, exponent > 0 (got {base}, {coef}, {exponent})"
                    )));
                }
                RealField::from_fn(*grid, |x| {
                    let r = (x[0] * x[0] + x[1] * x[1] + x[2] * x[2]).sqrt();
                    base + coef * r.powf(*exponent)
                })
            }
            Potential::Tabulated { field, .. } => {
                field.grid().check_same(grid)?;
                Ok(field.clone().with_grid(*grid)?)
            }
        }
    }

    /// Declared (or, for tabulated data, sampled) lower bound a₁.
    pub fn lower_bound(&self) -> f64 {
        match self {
            Potential::ConstantPlusRadial { base, .. } => *base,
            Potential::Tabulated { field, .. } => field.values().iter().cloned().fold(f64::INFINITY, f64::min),
        }
    }

    pub fn declared_coercive(&self) -> bool {
        match self {
            Potential::ConstantPlusRadial { coef, .. } => *coef > 0.0,
            Potential::Tabulated { coercive, .. } => *coercive,
        }
    }

    /// Parses `harmonic`, `constant:value=c` or `radial:base=..,coef=..,exponent=..`.
    pub fn from_spec(spec: &str) -> Result<Self> {
        let (name, mut params) = parse_spec(spec)?;
        let pot = match name.as_str() {
            "harmonic" => {
                let base = params.take("base", 1.0)?;
                let coef = params.take("coef", 1.0)?;
                Potential::ConstantPlusRadial {
                    base,
                    coef,
                    exponent: 2.0,
                }
            }
            "constant" => Potential::constant(params.take("value", 1.0)?),
            "radial" => Potential::ConstantPlusRadial {
                base: params.take("base", 1.0)?,
                coef: params.take("coef", 1.0)?,
                exponent: params.take("exponent", 2.0)?,
            },
            other => return Err(Error::invalid(format!("unknown potential '{other}'"))),
        };
        params.finish(&name)?;
        Ok(pot)
    }
}

impl fmt::Display for Potential {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Potential::ConstantPlusRadial { base, coef, exponent } => {
                write!(f, "radial:base={base},coef={coef},exponent={exponent}")
            }
            Potential::Tabulated { coercive, .. } => write!(f, "tabulated:coercive={coercive}"),
        }
    }
}

/// Constants of the growth bound `|f| ≤ c₁|u| + c₂|u|^{p−1}`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct GrowthParams {
    pub p: f64,
    pub c1: f64,
    pub c2: f64,
}

type ScalarFn = Arc<dyn Fn([f64; 3], f64) -> f64 + Send + Sync>;

#[derive(Clone)]
pub struct CustomFn {
    pub name: String,
    pub f: ScalarFn,
    /// Closed-form primitive; quadrature is used when absent.
    pub primitive: Option<ScalarFn>,
}

impl fmt::Debug for CustomFn {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("CustomFn").field("name", &self.name).finish()
    }
}

#[derive(Debug, Clone)]
pub enum NonlinearityKind {
    Zero,
    /// `f = 4u³ln(u²+1) + 2u⁵/(u²+1)`, `F = u⁴ln(u²+1)`.
    LogQuartic,
    /// `f = e^{−Σ|x_i|}u + |u|^{p−2}u`.
    ExpWeightedPower {
        p: f64,
    },
    /// `f = c|u|^{q−2}u`, `F = c|u|^q/q`.
    Power {
        q: f64,
        c: f64,
    },
    Custom(CustomFn),
}

#[derive(Debug, Clone)]
pub struct Nonlinearity {
    pub kind: NonlinearityKind,
    pub growth: GrowthParams,
    /// Constant of `G ≥ −a₀ g(x)`.
    pub a0: f64,
}

fn exp_weight(x: [f64; 3]) -> f64 {
    (-(x[0].abs() + x[1].abs() + x[2].abs())).exp()
}

/// Critical Sobolev exponent `2*_α = 6/(3 − 2α)`.
pub fn critical_exponent(alpha: f64) -> f64 {
    6.0 / (3.0 - 2.0 * alpha)
}

/// `((p/(p−4))^{1/(p−2)} + 1)`, the cutoff radius behind a₀ for the weighted power law.
pub fn exp_weighted_r0(p: f64) -> f64 {
    (p / (p - 4.0)).powf(1.0 / (p - 2.0)) + 1.0
}

pub fn builtin_log_quartic() -> Nonlinearity {
    Nonlinearity {
        kind: NonlinearityKind::LogQuartic,
        growth: GrowthParams {
            p: 5.0,
            c1: 1.0,
            c2: 4.0,
        },
        a0: 0.0,
    }
}

/// Rejects `p` outside `(4, ∞)`; the upper limit `2*_α` depends on α and is
/// enforced by the (H1) check and the energy regime warnings.
pub fn builtin_exp_weighted_power(p: f64) -> Result<Nonlinearity> {
    if !(p.is_finite() && p > 4.0 && p < 6.0) {
        return Err(Error::invalid(format!("exponent p = {p} outside (4, 2*_α) ⊂ (4, 6)")));
    }
    let r0 = exp_weighted_r0(p);
    Ok(Nonlinearity {
        kind: NonlinearityKind::ExpWeightedPower { p },
        growth: GrowthParams { p, c1: 1.0, c2: 1.0 },
        a0: r0 * r0 / 4.0,
    })
}

/// Pure power `f = c|u|^{q−2}u` (q = 4 is the cubic boundary case, q = 2 linear).
pub fn power_law(q: f64, c: f64) -> Result<Nonlinearity> {
    if !(q >= 1.0 && c >= 0.0) {
        return Err(Error::invalid(format!(
            "power law needs q >= 1 and c >= 0 (got q={q}, c={c})"
        )));
    }
    let p = q.max(5.0);
    // |c u^{q-1}| ≤ c|u| + c|u|^{p-1} whenever 2 <= q <= p.
    Ok(Nonlinearity {
        kind: NonlinearityKind::Power { q, c },
        growth: GrowthParams {
            p,
            c1: c.max(1e-12),
            c2: c.max(1e-12),
        },
        a0: 0.0,
    })
}

pub fn zero() -> Nonlinearity {
    Nonlinearity {
        kind: NonlinearityKind::Zero,
        growth: GrowthParams {
            p: 5.0,
            c1: 1e-12,
            c2: 1e-12,
        },
        a0: 0.0,
    }
}

pub fn custom(name: &str, f: ScalarFn, primitive: Option<ScalarFn>, growth: GrowthParams, a0: f64) -> Nonlinearity {
    Nonlinearity {
        kind: NonlinearityKind::Custom(CustomFn {
            name: name.to_string(),
            f,
            primitive,
        }),
        growth,
        a0,
    }
}

impl Nonlinearity {
    /// Parses `log_quartic`, `exp_weighted_power:p=5`, `power:q=4,c=1`, `zero`;
    /// `p`, `c1`, `c2` override the growth constants of any kind.
    pub fn from_spec(spec: &str) -> Result<Self> {
        let (name, mut params) = parse_spec(spec)?;
        let mut nl = match name.as_str() {
            "log_quartic" => builtin_log_quartic(),
            "exp_weighted_power" => builtin_exp_weighted_power(params.take("p", 5.0)?)?,
            "power" => {
                let q = params.take("q", 4.0)?;
                let c = params.take("c", 1.0)?;
                power_law(q, c)?
            }
            "zero" => zero(),
            other => return Err(Error::invalid(format!("unknown nonlinearity '{other}'"))),
        };
        if let Some(p) = params.take_opt("p")? {
            nl.growth.p = p;
        }
        if let Some(c1) = params.take_opt("c1")? {
            nl.growth.c1 = c1;
        }
        if let Some(c2) = params.take_opt("c2")? {
            nl.growth.c2 = c2;
        }
        params.finish(&name)?;
        Ok(nl)
    }

    pub fn name(&self) -> String {
        match &self.kind {
            NonlinearityKind::Zero => "zero".into(),
            NonlinearityKind::LogQuartic => "log_quartic".into(),
            NonlinearityKind::ExpWeightedPower { p } => format!("exp_weighted_power:p={p}"),
            NonlinearityKind::Power { q, c } => format!("power:q={q},c={c}"),
            NonlinearityKind::Custom(c) => format!("custom:{}", c.name),
        }
    }

    pub fn is_zero(&self) -> bool {
        matches!(self.kind, NonlinearityKind::Zero)
    }

    #[inline]
    pub fn f(&self, x: [f64; 3], u: f64) -> f64 {
        match &self.kind {
            NonlinearityKind::Zero => 0.0,
            NonlinearityKind::LogQuartic => {
                let u2 = u * u;
                4.0 * u2 * u * u2.ln_1p() + 2.0 * u2 * u2 * u / (u2 + 1.0)
            }
            NonlinearityKind::ExpWeightedPower { p } => exp_weight(x) * u + u.abs().powf(p - 2.0) * u,
            NonlinearityKind::Power { q, c } => c * u.abs().powf(q - 2.0) * u,
            NonlinearityKind::Custom(cf) => (cf.f)(x, u),
        }
    }

    /// `F(x,u) = ∫₀ᵘ f(x,t) dt`.
    #[inline]
    pub fn primitive(&self, x: [f64; 3], u: f64) -> f64 {
        match &self.kind {
            NonlinearityKind::Zero => 0.0,
            NonlinearityKind::LogQuartic => {
                let u2 = u * u;
                u2 * u2 * u2.ln_1p()
            }
            NonlinearityKind::ExpWeightedPower { p } => 0.5 * exp_weight(x) * u * u + u.abs().powf(*p) / p,
            NonlinearityKind::Power { q, c } => c * u.abs().powf(*q) / q,
            NonlinearityKind::Custom(cf) => match &cf.primitive {
                Some(prim) => prim(x, u),
                None => {
                    let scale = 1.0 + (u * (cf.f)(x, u)).abs();
                    let f = &cf.f;
                    match quad::adaptive(|t| f(x, t), 0.0, u, 1e-10 * scale, 4000) {
                        Ok(v) => v,
                        Err(Error::Quadrature { estimate, .. }) => estimate,
                        Err(_) => f64::NAN,
                    }
                }
            },
        }
    }

    /// `G = ¼ f u − F` assembled from `f` and `F`.
    #[inline]
    pub fn g_combination(&self, x: [f64; 3], u: f64) -> f64 {
        0.25 * self.f(x, u) * u - self.primitive(x, u)
    }

    /// Closed form of `G` where one is known.
    pub fn g_closed(&self, x: [f64; 3], u: f64) -> Option<f64> {
        match &self.kind {
            NonlinearityKind::Zero => Some(0.0),
            NonlinearityKind::LogQuartic => {
                let u2 = u * u;
                Some(u2 * u2 * u2 / (2.0 * (u2 + 1.0)))
            }
            NonlinearityKind::ExpWeightedPower { p } => {
                Some(-0.25 * exp_weight(x) * u * u + (0.25 - 1.0 / p) * u.abs().powf(*p))
            }
            NonlinearityKind::Power { q, c } => Some(c * (0.25 - 1.0 / q) * u.abs().powf(*q)),
            NonlinearityKind::Custom(_) => None,
        }
    }

    /// Weight `g(x) ≥ 0` in `G ≥ −a₀ g(x)`.
    pub fn weight(&self, x: [f64; 3]) -> f64 {
        match &self.kind {
            NonlinearityKind::ExpWeightedPower { .. } => exp_weight(x),
            _ => {
                if self.a0 > 0.0 {
                    1.0
                } else {
                    0.0
                }
            }
        }
    }
}

/// `F(x,u) = ∫₀ᵘ f(x,t) dt` by adaptive Gauss–Legendre to absolute tolerance 1e-10.
pub fn primitive_by_quadrature(f: impl Fn([f64; 3], f64) -> f64, x: [f64; 3], u: f64) -> Result<f64> {
    quad::adaptive(|t| f(x, t), 0.0, u, 1e-10, 20_000)
}

// ---------------------------------------------------------------------------
// spec strings `name[:k=v,...]`

pub(crate) struct SpecParams(BTreeMap<String, f64>);

impl SpecParams {
    fn take(&mut self, key: &str, default: f64) -> Result<f64> {
        Ok(self.0.remove(key).unwrap_or(default))
    }

    fn take_opt(&mut self, key: &str) -> Result<Option<f64>> {
        Ok(self.0.remove(key))
    }

    fn finish(self, name: &str) -> Result<()> {
        match self.0.keys().next() {
            None => Ok(()),
            Some(k) => Err(Error::invalid(format!("unknown parameter '{k}' for '{name}'"))),
        }
    }
}

pub(crate) fn parse_spec(spec: &str) -> Result<(String, SpecParams)> {
    let spec = spec.trim();
    let (name, rest) = match spec.split_once(':') {
        Some((n, r)) => (n.trim(), r),
        None => (spec, ""),
    };
    if name.is_empty() {
        return Err(Error::invalid("empty model name"));
    }
    let mut map = BTreeMap::new();
    for item in rest.split(',').map(str::trim).filter(|s| !s.is_empty()) {
        let (k, v) = item
            .split_once('=')
            .ok_or_else(|| Error::invalid(format!("expected key=value, got '{item}'")))?;
        let v: f64 = v
            .trim()
            .parse()
            .map_err(|_| Error::invalid(format!("parameter '{k}' is not a number: '{v}'")))?;
        map.insert(k.trim().to_string(), v);
    }
    Ok((name.to_string(), SpecParams(map)))
}

// ---------------------------------------------------------------------------
// hypothesis checks

#[derive(Debug, Clone, Serialize)]
pub struct SamplingPlan {
    /// u is sampled on `[-u_max, u_max]`.
    pub u_max: f64,
    /// Uniform lattice points in u.
    pub u_count: usize,
    /// Additional uniformly random u values.
    pub random_count: usize,
    /// Grid subsampling stride for the x-lattice.
    pub x_stride: usize,
    pub seed: u64,
    /// Top of the geometric (H2) ladder.
    pub ladder_max: f64,
    pub ladder_per_decade: usize,
    /// `min_x F/u⁴` must exceed this at the top of the ladder.
    pub divergence_threshold: f64,
    /// Required growth of `F/u⁴` over the last decade of the ladder.
    pub min_decade_growth: f64,
}

impl Default for SamplingPlan {
    fn default() -> Self {
        Self {
            u_max: 50.0,
            u_count: 201,
            random_count: 200,
            x_stride: 2,
            seed: 0,
            ladder_max: 1e6,
            ladder_per_decade: 10,
            divergence_threshold: 10.0,
            min_decade_growth: 1.01,
        }
    }
}

impl SamplingPlan {
    fn validate(&self) -> Result<()> {
        if !(self.u_max.is_finite() && self.u_max > 0.0) {
            return Err(Error::invalid("sampling plan: u_max must be positive"));
        }
        if self.u_count < 2 || self.x_stride == 0 || self.ladder_per_decade == 0 {
            return Err(Error::invalid(
                "sampling plan: u_count >= 2, x_stride >= 1, ladder_per_decade >= 1",
            ));
        }
        if !(self.ladder_max >= 100.0 && self.ladder_max.is_finite()) {
            return Err(Error::invalid("sampling plan: ladder_max must be >= 100"));
        }
        if !(self.divergence_threshold > 0.0 && self.min_decade_growth >= 1.0) {
            return Err(Error::invalid("sampling plan: thresholds must be positive"));
        }
        Ok(())
    }

    fn u_samples(&self) -> Vec<f64> {
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        let step = 2.0 * self.u_max / (self.u_count - 1) as f64;
        let mut out: Vec<f64> = (0..self.u_count).map(|i| -self.u_max + i as f64 * step).collect();
        out.extend((0..self.random_count).map(|_| rng.gen_range(-self.u_max..=self.u_max)));
        out
    }

    fn ladder(&self) -> Vec<f64> {
        let decades = self.ladder_max.log10();
        let steps = (decades * self.ladder_per_decade as f64).round() as usize;
        (0..=steps)
            .map(|j| 10f64.powf(decades * j as f64 / steps as f64))
            .collect()
    }
}

#[derive(Debug, Clone, Copy, Serialize)]
pub struct Witness {
    pub x: [f64; 3],
    pub u: f64,
    pub lhs: f64,
    pub rhs: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct HypothesisCheck {
    pub id: &'static str,
    pub pass: bool,
    pub samples: usize,
    pub violations: usize,
    pub witnesses: Vec<Witness>,
    pub detail: String,
}

#[derive(Debug, Clone, Serialize)]
pub struct HypothesisReport {
    pub nonlinearity: String,
    pub potential: String,
    pub grid: GridSpec,
    pub plan: SamplingPlan,
    pub checks: Vec<HypothesisCheck>,
    pub notes: Vec<String>,
    pub all_pass: bool,
}

impl HypothesisReport {
    pub fn check(&self, id: &str) -> Option<&HypothesisCheck> {
        self.checks.iter().find(|c| c.id == id)
    }
}

const MAX_WITNESSES: usize = 5;

#[derive(Default)]
struct Tally {
    samples: usize,
    violations: usize,
    witnesses: Vec<Witness>,
}

impl Tally {
    fn record(&mut self, ok: bool, w: impl FnOnce() -> Witness) {
        self.samples += 1;
        if !ok {
            self.violations += 1;
            if self.witnesses.len() < MAX_WITNESSES {
                self.witnesses.push(w());
            }
        }
    }

    fn merge(mut self, other: Tally) -> Tally {
        self.samples += other.samples;
        self.violations += other.violations;
        for w in other.witnesses {
            if self.witnesses.len() < MAX_WITNESSES {
                self.witnesses.push(w);
            }
        }
        self
    }

    fn finish(self, id: &'static str, detail: String) -> HypothesisCheck {
        HypothesisCheck {
            id,
            pass: self.violations == 0,
            samples: self.samples,
            violations: self.violations,
            witnesses: self.witnesses,
            detail,
        }
    }
}

fn x_lattice(grid: &GridSpec, stride: usize) -> Vec<[f64; 3]> {
    (0..grid.len())
        .filter(|&i| grid.unravel(i).iter().all(|c| c % stride == 0))
        .map(|i| grid.coord(i))
        .collect()
}

/// Runs (V) and (H1)–(H4) on the sampling plan. Failures are reported, not
/// raised; only a malformed plan or potential is an error.
pub fn check_hypotheses(
    nl: &Nonlinearity,
    potential: &Potential,
    grid: &GridSpec,
    plan: &SamplingPlan,
) -> Result<HypothesisReport> {
    plan.validate()?;
    let v = potential.evaluate(grid)?;
    let xs = x_lattice(grid, plan.x_stride);
    let us = plan.u_samples();
    let mut notes = Vec::new();

    let checks = vec![
        check_v(potential, &v, grid),
        check_h1(nl, grid, &xs, &us, &mut notes),
        check_h2(nl, &xs, plan),
        check_h3(nl, &xs, &us),
        check_h4(nl, &xs, &us),
    ];
    let all_pass = checks.iter().all(|c| c.pass);
    Ok(HypothesisReport {
        nonlinearity: nl.name(),
        potential: potential.to_string(),
        grid: *grid,
        plan: plan.clone(),
        checks,
        notes,
        all_pass,
    })
}

fn check_v(potential: &Potential, v: &RealField, grid: &GridSpec) -> HypothesisCheck {
    let a1 = potential.lower_bound();
    let mut t = Tally::default();
    for (i, &val) in v.values().iter().enumerate() {
        t.record(a1 > 0.0 && val >= a1, || Witness {
            x: grid.coord(i),
            u: 0.0,
            lhs: val,
            rhs: a1,
        });
    }
    // Monotone growth along the 26 lattice rays from the center node.
    let n = grid.n();
    let center = [n[0] / 2, n[1] / 2, n[2] / 2];
    let mut rays = 0;
    for dz in -1i64..=1 {
        for dy in -1i64..=1 {
            for dx in -1i64..=1 {
                if (dx, dy, dz) == (0, 0, 0) {
                    continue;
                }
                rays += 1;
                let dir = [dx, dy, dz];
                let mut prev: Option<f64> = None;
                for s in 0i64.. {
                    let mut ijk = [0usize; 3];
                    let mut inside = true;
                    for a in 0..3 {
                        let c = center[a] as i64 + s * dir[a];
                        if c < 0 || c >= n[a] as i64 {
                            inside = false;
                        }
                        ijk[a] = c.max(0) as usize;
                    }
                    if !inside {
                        break;
                    }
                    let idx = grid.index(ijk[0], ijk[1], ijk[2]);
                    let val = v.values()[idx];
                    if let Some(p) = prev {
                        t.record(val > p, || Witness {
                            x: grid.coord(idx),
                            u: 0.0,
                            lhs: val,
                            rhs: p,
                        });
                    }
                    prev = Some(val);
                }
            }
        }
    }
    let coercive = potential.declared_coercive();
    let mut check = t.finish(
        "V",
        format!("inf V >= a1 = {a1} on the grid; strict growth along {rays} rays to the boundary; coercivity declared: {coercive}"),
    );
    if !coercive {
        check.pass = false;
        check.violations += 1;
        if check.witnesses.is_empty() {
            check.witnesses.push(Witness {
                x: [0.0; 3],
                u: 0.0,
                lhs: a1,
                rhs: f64::INFINITY,
            });
        }
    }
    check
}

fn check_h1(
    nl: &Nonlinearity,
    grid: &GridSpec,
    xs: &[[f64; 3]],
    us: &[f64],
    notes: &mut Vec<String>,
) -> HypothesisCheck {
    let GrowthParams { p, c1, c2 } = nl.growth;
    let alpha = grid.alpha();
    let crit = critical_exponent(alpha);
    let mut t = Tally::default();
    t.record(alpha > 0.75 && p > 4.0 && p < crit && c1 > 0.0 && c2 > 0.0, || {
        Witness {
            x: [0.0; 3],
            u: 0.0,
            lhs: p,
            rhs: crit,
        }
    });
    let per_x: Vec<(Tally, usize)> = xs
        .par_iter()
        .map(|&x| {
            let mut t = Tally::default();
            let mut negative_sign = 0;
            for &u in us {
                let f = nl.f(x, u);
                let bound = c1 * u.abs() + c2 * u.abs().powf(p - 1.0);
                t.record(f.abs() <= bound * (1.0 + 1e-12), || Witness {
                    x,
                    u,
                    lhs: f.abs(),
                    rhs: bound,
                });
                if u >= 0.0 {
                    t.record(f * u >= 0.0, || Witness {
                        x,
                        u,
                        lhs: f * u,
                        rhs: 0.0,
                    });
                } else if f * u < 0.0 {
                    negative_sign += 1;
                }
            }
            (t, negative_sign)
        })
        .collect();
    let mut negative = 0;
    for (tx, neg) in per_x {
        t = t.merge(tx);
        negative += neg;
    }
    notes.push(format!(
        "H1 sign condition checked for u >= 0 only; f(x,u)u < 0 at {negative} sampled points with u < 0 (informational)"
    ));
    t.finish(
        "H1",
        format!("|f| <= {c1}|u| + {c2}|u|^(p-1), p = {p} in (4, {crit:.6}), alpha = {alpha}; f(x,u)u >= 0 for u >= 0"),
    )
}

fn check_h2(nl: &Nonlinearity, xs: &[[f64; 3]], plan: &SamplingPlan) -> HypothesisCheck {
    let ladder = plan.ladder();
    let mut t = Tally::default();
    let mut top_ratio = f64::INFINITY;
    for sign in [1.0, -1.0] {
        // min over x of F/u⁴ at each rung
        let ratios: Vec<([f64; 3], f64)> = ladder
            .iter()
            .map(|&u| {
                let u = sign * u;
                xs.iter()
                    .map(|&x| (x, nl.primitive(x, u) / (u * u * u * u)))
                    .fold(([0.0; 3], f64::INFINITY), |a, b| if b.1 < a.1 { b } else { a })
            })
            .collect();
        let last = ladder.len() - 1;
        let decade_start = last.saturating_sub(plan.ladder_per_decade);
        for j in decade_start + 1..=last {
            let (x, r) = ratios[j];
            let prev = ratios[j - 1].1;
            t.record(r >= prev, || Witness {
                x,
                u: sign * ladder[j],
                lhs: r,
                rhs: prev,
            });
        }
        let (x, r_top) = ratios[last];
        let r_start = ratios[decade_start].1;
        t.record(r_top >= plan.min_decade_growth * r_start, || Witness {
            x,
            u: sign * ladder[last],
            lhs: r_top,
            rhs: plan.min_decade_growth * r_start,
        });
        t.record(r_top >= plan.divergence_threshold, || Witness {
            x,
            u: sign * ladder[last],
            lhs: r_top,
            rhs: plan.divergence_threshold,
        });
        top_ratio = top_ratio.min(r_top);
    }
    t.finish(
        "H2",
        format!(
            "min_x F/u^4 increasing over the last decade below |u| = {:e} and >= {} there (observed {top_ratio:.6e})",
            plan.ladder_max, plan.divergence_threshold
        ),
    )
}

fn check_h3(nl: &Nonlinearity, xs: &[[f64; 3]], us: &[f64]) -> HypothesisCheck {
    let a0 = nl.a0;
    let tallies: Vec<Tally> = xs
        .par_iter()
        .map(|&x| {
            let mut t = Tally::default();
            let g = nl.weight(x);
            t.record(g >= 0.0, || Witness {
                x,
                u: 0.0,
                lhs: g,
                rhs: 0.0,
            });
            for &u in us {
                let quarter = 0.25 * nl.f(x, u) * u;
                let prim = nl.primitive(x, u);
                let gval = quarter - prim;
                let slack = 1e-12 * (quarter.abs() + prim.abs());
                t.record(gval + a0 * g >= -slack, || Witness {
                    x,
                    u,
                    lhs: gval,
                    rhs: -a0 * g,
                });
            }
            t
        })
        .collect();
    let t = tallies.into_iter().fold(Tally::default(), Tally::merge);
    t.finish("H3", format!("G(x,u) >= -a0 g(x) with a0 = {a0}"))
}

fn check_h4(nl: &Nonlinearity, xs: &[[f64; 3]], us: &[f64]) -> HypothesisCheck {
    let tallies: Vec<Tally> = xs
        .par_iter()
        .map(|&x| {
            let mut t = Tally::default();
            for &u in us {
                let a = nl.f(x, u);
                let b = nl.f(x, -u);
                t.record((a + b).abs() <= 1e-12 * (1.0 + a.abs()), || Witness {
                    x,
                    u,
                    lhs: b,
                    rhs: -a,
                });
            }
            t
        })
        .collect();
    let t = tallies.into_iter().fold(Tally::default(), Tally::merge);
    t.finish("H4", "f(x,-u) = -f(x,u) to 1e-12".into())
}
