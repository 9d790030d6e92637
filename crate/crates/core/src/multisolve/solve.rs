//! Nehari-projected preconditioned descent with restarts, parity classes and
//! deflation against previously found solutions.

use std::fs;
use std::path::Path;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::Serialize;

use super::eigen::EigenBasis;
use crate::energy::{EnergyBreakdown, Functional};
use crate::error::{Error, Result};
use crate::grid::{GridSpec, RealField};
use crate::io::save_field;
use crate::riesz::{inversion_residual, solve_poisson};

/// Reflection parity per axis: +1 even, −1 odd, 0 unrestricted.
pub type Parity = [i8; 3];

pub const CANONICAL_CLASSES: [Parity; 8] = [
    [1, 1, 1],
    [-1, 1, 1],
    [-1, -1, 1],
    [-1, -1, -1],
    [1, -1, 1],
    [1, 1, -1],
    [-1, 1, -1],
    [1, -1, -1],
];

#[derive(Debug, Clone, Serialize)]
pub struct SolverOptions {
    pub count_target: usize,
    /// Converged when the preconditioned residual is ≤ `tol·(1 + ‖u‖_E)`.
    pub tol: f64,
    pub max_iterations: usize,
    /// Total number of starts.
    pub max_restarts: usize,
    /// Leading eigenmodes used to build starts.
    pub start_modes: usize,
    pub perturbation: f64,
    pub seed: u64,
    /// Upper end of the Nehari bracket in t.
    pub t_max: f64,
    /// Members need `‖u‖_E` above this.
    pub nontrivial: f64,
    /// Distinct if E-distance > `separation·max‖u‖_E` ...
    pub separation: f64,
    /// ... or the energy gap exceeds this.
    pub energy_gap: f64,
    pub classes: Vec<Parity>,
}

impl Default for SolverOptions {
    fn default() -> Self {
        Self {
            count_target: 3,
            tol: 1e-6,
            max_iterations: 2000,
            max_restarts: 8,
            start_modes: 20,
            perturbation: 0.1,
            seed: 0,
            t_max: 1e3,
            nontrivial: 1e-3,
            separation: 1e-2,
            energy_gap: 1e-3,
            classes: CANONICAL_CLASSES.to_vec(),
        }
    }
}

impl SolverOptions {
    fn validate(&self) -> Result<()> {
        if !(self.tol > 0.0 && self.t_max > 0.0 && self.nontrivial >= 0.0) {
            return Err(Error::invalid("solver options: tol > 0, t_max > 0, nontrivial >= 0"));
        }
        if self.count_target == 0 || self.classes.is_empty() || self.start_modes == 0 {
            return Err(Error::invalid(
                "solver options: count_target, classes and start_modes must be nonempty",
            ));
        }
        if self.classes.iter().flatten().any(|s| !matches!(s, -1..=1)) {
            return Err(Error::invalid("parity entries must be -1, 0 or 1"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct SolutionRecord {
    pub index: usize,
    pub class: Parity,
    pub start: String,
    pub iterations: usize,
    pub energy: EnergyBreakdown,
    pub norm_e: f64,
    pub residual_l2: f64,
    pub residual_preconditioned: f64,
    /// `tol·(1 + ‖u‖_E)`
    pub threshold: f64,
    pub partner_energy: f64,
    pub partner_residual_preconditioned: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Outcome {
    Accepted,
    Duplicate,
    Trivial,
    Stalled,
    IterationBudget,
    NoNehariRoot,
    EmptyStart,
}

#[derive(Debug, Clone, Serialize)]
pub struct Attempt {
    pub start: String,
    pub class: Parity,
    pub outcome: Outcome,
    pub iterations: usize,
    pub final_residual: f64,
    pub energy: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct SolutionSet {
    pub grid: GridSpec,
    pub nonlinearity: String,
    pub potential: String,
    pub options: SolverOptions,
    pub records: Vec<SolutionRecord>,
    #[serde(skip)]
    pub fields: Vec<RealField>,
    /// Pairwise E-distances between members.
    pub distances: Vec<Vec<f64>>,
    pub attempts: Vec<Attempt>,
    pub shortfall: bool,
}

impl SolutionSet {
    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    /// `solution_NNN.fld` per member plus `index.json`.
    pub fn save(&self, dir: &Path) -> Result<()> {
        fs::create_dir_all(dir)?;
        for (i, u) in self.fields.iter().enumerate() {
            save_field(u, dir.join(format!("solution_{i:03}.fld")))?;
        }
        let json = serde_json::to_string_pretty(self).map_err(|e| Error::Resource(e.to_string()))?;
        fs::write(dir.join("index.json"), json)?;
        Ok(())
    }
}

/// `½(u + s·R_a u)` for every restricted axis a.
pub fn symmetrize(u: &RealField, class: Parity) -> RealField {
    let mut out = u.clone();
    for (axis, &s) in class.iter().enumerate() {
        if s != 0 {
            let r = out.reflected(axis);
            out = out.axpy(f64::from(s), &r).expect("same grid").scaled(0.5);
        }
    }
    out
}

/// Whether V and f are invariant under the reflection of `axis`.
fn axis_symmetric(f: &Functional, axis: usize) -> bool {
    let v = f.potential_field();
    if v.reflected(axis) != *v {
        return false;
    }
    let grid = f.grid();
    let nl = f.nonlinearity();
    let n = grid.n();
    (0..grid.len()).step_by(7).all(|idx| {
        let mut ijk = grid.unravel(idx);
        let x = grid.coord(idx);
        ijk[axis] = (n[axis] - ijk[axis]) % n[axis];
        let y = grid.coord(grid.index(ijk[0], ijk[1], ijk[2]));
        [0.3, 1.0, 2.5].iter().all(|&u| nl.f(x, u) == nl.f(y, u))
    })
}

/// Nehari scaling: the root t* of `d/dt J(tu) = t‖u‖² + t³K∫φ(u)u² − ∫f(x,tu)u`
/// on (0, t_max], returned as `t*·u`.
pub fn nehari_project(f: &Functional, u: &RealField, t_max: f64) -> Result<Option<RealField>> {
    let a = f.norm_e(u)?.powi(2);
    if a == 0.0 {
        return Ok(None);
    }
    let c = f.k_alpha() * u.squared().dot(&f.phi(u)?)?;
    let nl = f.nonlinearity();
    let psi = |t: f64| t * a + t * t * t * c - f.integrate_pointwise(u, |x, s| nl.f(x, t * s) * s);
    let (mut lo, mut hi) = (1e-6_f64, t_max);
    if !(psi(lo) > 0.0 && psi(hi) < 0.0) {
        return Ok(None);
    }
    for _ in 0..200 {
        let mid = if hi / lo > 4.0 {
            (lo * hi).sqrt()
        } else {
            0.5 * (lo + hi)
        };
        if psi(mid) > 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
        if hi - lo < 1e-15 * hi {
            break;
        }
    }
    Ok(Some(u.scaled(0.5 * (lo + hi))))
}

struct Descent {
    u: RealField,
    outcome: Outcome,
    iterations: usize,
    residual: f64,
}

fn descend(f: &Functional, u0: &RealField, class: Parity, opts: &SolverOptions) -> Result<Descent> {
    let Some(mut u) = nehari_project(f, &symmetrize(u0, class), opts.t_max)? else {
        return Ok(Descent {
            u: u0.clone(),
            outcome: Outcome::NoNehariRoot,
            iterations: 0,
            residual: f64::NAN,
        });
    };
    let mut tau = 1.0_f64;
    let mut residual = f64::INFINITY;
    for it in 0..=opts.max_iterations {
        let phi = f.phi(&u)?;
        let grad = f.gradient_with_phi(&u, &phi)?;
        residual = grad.preconditioned_norm;
        if residual <= opts.tol * (1.0 + f.norm_e(&u)?) {
            return Ok(Descent {
                u,
                outcome: Outcome::Accepted,
                iterations: it,
                residual,
            });
        }
        if it == opts.max_iterations {
            break;
        }
        let jc = f.energy_with_phi(&u, &phi)?.total;
        let d = f.precondition(&grad.g);
        let gd = grad.g.dot(&d)?;
        loop {
            let trial = symmetrize(&u.axpy(-tau, &d)?, class);
            if let Some(un) = nehari_project(f, &trial, opts.t_max)? {
                if f.energy(&un)?.total < jc - 1e-4 * tau * gd {
                    u = un;
                    break;
                }
            }
            tau *= 0.5;
            if tau < 1e-10 {
                return Ok(Descent {
                    u,
                    outcome: Outcome::Stalled,
                    iterations: it,
                    residual,
                });
            }
        }
        tau = (1.5 * tau).min(4.0);
    }
    Ok(Descent {
        u,
        outcome: Outcome::IterationBudget,
        iterations: opts.max_iterations,
        residual,
    })
}

fn class_label(c: Parity) -> String {
    c.iter()
        .map(|s| match s {
            1 => '+',
            -1 => '-',
            _ => '*',
        })
        .collect()
}

/// Searches for `count_target` distinct nontrivial critical points of J.
pub fn find_solutions(f: &Functional, basis: &EigenBasis, opts: &SolverOptions) -> Result<SolutionSet> {
    opts.validate()?;
    f.grid().check_same(basis.grid())?;
    let symmetric: Vec<bool> = (0..3).map(|a| axis_symmetric(f, a)).collect();
    let mut classes: Vec<Parity> = Vec::new();
    for c in &opts.classes {
        let mut c = *c;
        for a in 0..3 {
            if !symmetric[a] {
                c[a] = 0;
            }
        }
        if !classes.contains(&c) {
            classes.push(c);
        }
    }
    let nmodes = opts.start_modes.min(basis.k());
    let mut fields: Vec<RealField> = Vec::new();
    let mut records: Vec<SolutionRecord> = Vec::new();
    let mut attempts = Vec::new();
    for attempt in 0..opts.max_restarts {
        if records.len() >= opts.count_target {
            break;
        }
        let class = classes[attempt % classes.len()];
        let round = attempt / classes.len();
        let seed = opts.seed.wrapping_add(attempt as u64);
        let start = format!("class {} round {round} seed {seed}", class_label(class));
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut coeffs: Vec<f64> = (0..nmodes)
            .map(|_| {
                let z: f64 = StandardNormal.sample(&mut rng);
                if round == 0 {
                    opts.perturbation * z
                } else {
                    z
                }
            })
            .collect();
        if round == 0 {
            // lead with the lowest mode living in this class
            if let Some(j) = (0..nmodes).find(|&j| {
                let e = &basis.modes[j];
                symmetrize(e, class).l2_norm() > 0.5 * e.l2_norm()
            }) {
                coeffs[j] += 1.0;
            }
        }
        let mut u0 = symmetrize(&basis.combine(0, &coeffs), class);
        for s in &fields {
            let proj = f.inner_e(&u0, s)? / f.inner_e(s, s)?;
            u0 = u0.axpy(-proj, s)?;
        }
        u0 = symmetrize(&u0, class);
        if f.norm_e(&u0)? <= 1e-12 {
            attempts.push(Attempt {
                start,
                class,
                outcome: Outcome::EmptyStart,
                iterations: 0,
                final_residual: f64::NAN,
                energy: f64::NAN,
            });
            continue;
        }
        let run = descend(f, &u0, class, opts)?;
        let mut outcome = run.outcome;
        let mut energy = f64::NAN;
        if outcome == Outcome::Accepted {
            let e = f.energy(&run.u)?;
            energy = e.total;
            let norm = f.norm_e(&run.u)?;
            if norm <= opts.nontrivial {
                outcome = Outcome::Trivial;
            } else if !distinct_from_all(f, &run.u, e.total, &fields, &records, opts)? {
                outcome = Outcome::Duplicate;
            } else {
                let grad = f.gradient(&run.u)?;
                let neg = run.u.scaled(-1.0);
                let partner_grad = f.gradient(&neg)?;
                records.push(SolutionRecord {
                    index: records.len(),
                    class,
                    start: start.clone(),
                    iterations: run.iterations,
                    energy: e,
                    norm_e: norm,
                    residual_l2: grad.l2_norm,
                    residual_preconditioned: grad.preconditioned_norm,
                    threshold: opts.tol * (1.0 + norm),
                    partner_energy: f.energy(&neg)?.total,
                    partner_residual_preconditioned: partner_grad.preconditioned_norm,
                });
                fields.push(run.u);
            }
        }
        attempts.push(Attempt {
            start,
            class,
            outcome,
            iterations: run.iterations,
            final_residual: run.residual,
            energy,
        });
    }
    let mut distances = vec![vec![0.0; fields.len()]; fields.len()];
    for i in 0..fields.len() {
        for j in i + 1..fields.len() {
            let d = f.norm_e(&fields[i].sub(&fields[j])?)?;
            distances[i][j] = d;
            distances[j][i] = d;
        }
    }
    Ok(SolutionSet {
        grid: *f.grid(),
        nonlinearity: f.nonlinearity().name(),
        potential: f.potential().to_string(),
        options: opts.clone(),
        shortfall: records.len() < opts.count_target,
        records,
        fields,
        distances,
        attempts,
    })
}

/// Distinct from every member and its partner `−u_i`.
fn distinct_from_all(
    f: &Functional,
    u: &RealField,
    energy: f64,
    fields: &[RealField],
    records: &[SolutionRecord],
    opts: &SolverOptions,
) -> Result<bool> {
    let nu = f.norm_e(u)?;
    for (s, rec) in fields.iter().zip(records) {
        let scale = opts.separation * nu.max(rec.norm_e);
        let d = f.norm_e(&u.sub(s)?)?.min(f.norm_e(&u.add(s)?)?);
        if !(d > scale || (energy - rec.energy.total).abs() > opts.energy_gap) {
            return Ok(false);
        }
    }
    Ok(true)
}

#[derive(Debug, Clone, Serialize)]
pub struct VerificationReport {
    pub norm_e: f64,
    /// `max_v |J′(u)[v]| / ‖v‖_E` over the test fields.
    pub weak_residual: f64,
    pub test_fields: usize,
    pub strong_l2: f64,
    pub strong_preconditioned: f64,
    /// Calibrated inversion error of φ(u) on the central eighth.
    pub poisson_residual: f64,
    pub tol: f64,
    pub pass: bool,
}

/// Weak-form residual over 50 test fields (the Riesz representer of J′(u)
/// under the preconditioner plus 49 random smooth fields) and strong-form norms.
pub fn verify_solution(f: &Functional, u: &RealField, tol: f64, seed: u64) -> Result<VerificationReport> {
    let grad = f.gradient(u)?;
    let norm = f.norm_e(u)?;
    let mut tests = Vec::with_capacity(50);
    tests.push(f.precondition(&grad.g));
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for i in 0..49 {
        tests.push(RealField::random_bumps(*f.grid(), &mut rng, 1 + i % 3, 1.0));
    }
    let mut weak = 0.0_f64;
    for v in &tests {
        let nv = f.norm_e(v)?;
        if nv > 0.0 {
            weak = weak.max(grad.g.dot(v)?.abs() / nv);
        }
    }
    let poisson = solve_poisson(u, f.alpha())?;
    Ok(VerificationReport {
        norm_e: norm,
        weak_residual: weak,
        test_fields: tests.len(),
        strong_l2: grad.l2_norm,
        strong_preconditioned: grad.preconditioned_norm,
        poisson_residual: inversion_residual(u, &poisson)?,
        tol,
        pass: grad.preconditioned_norm <= tol * (1.0 + norm),
    })
}
