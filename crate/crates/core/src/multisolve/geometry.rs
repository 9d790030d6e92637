//! Sampled fountain-geometry checks on the truncated eigen-decomposition
//! `Y_k = span{e_1..e_k}`, `Z_k ≈ span{e_{k+1}..e_K}`.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::Serialize;

use super::eigen::EigenBasis;
use crate::energy::Functional;
use crate::error::{Error, Result};
use crate::grid::lp_norm;
use crate::model::critical_exponent;

pub const TRUNCATION_NOTE: &str =
    "Z_k is represented by span{e_(k+1), ..., e_K}; suprema over Z_k are therefore sampled from below";

fn random_unit(rng: &mut ChaCha8Rng, len: usize) -> Vec<f64> {
    let mut c: Vec<f64> = (0..len).map(|_| StandardNormal.sample(rng)).collect();
    let n = c.iter().map(|x| x * x).sum::<f64>().sqrt();
    c.iter_mut().for_each(|x| *x /= n);
    c
}

/// Unit coefficient vectors over `len` modes: every single mode, then random directions.
fn unit_samples(len: usize, random: usize, seed: u64) -> Vec<Vec<f64>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out: Vec<Vec<f64>> = (0..len)
        .map(|j| {
            let mut c = vec![0.0; len];
            c[j] = 1.0;
            c
        })
        .collect();
    out.extend((0..random).map(|_| random_unit(&mut rng, len)));
    out
}

/// Geometric t-grid from 0.01 to 1000, 24 points per decade.
pub fn default_t_grid() -> Vec<f64> {
    (0..=120).map(|j| 10f64.powf(-2.0 + j as f64 / 24.0)).collect()
}

#[derive(Debug, Clone, Serialize)]
pub struct RayTrace {
    pub ray: usize,
    /// Smallest sampled t with `J(s·w) ≤ 0` for every sampled `s ≥ t`.
    pub r: Option<f64>,
    /// J strictly decreasing on the sampled t ≥ R.
    pub tail_decreasing: bool,
    /// `J(R) > J(2R) > J(4R)`.
    pub doubling_decreasing: bool,
    pub j_at_max: f64,
    pub trace: Vec<(f64, f64)>,
}

#[derive(Debug, Clone, Serialize)]
pub struct CoercivityReport {
    pub k: usize,
    pub rays: Vec<RayTrace>,
    /// `max_w R_w` when every ray has a finite R.
    pub r_max: Option<f64>,
    pub all_finite: bool,
    pub all_decreasing: bool,
}

/// `J(t·w)` along random E-unit directions `w ∈ Y_k`.
pub fn coercivity_scan(
    f: &Functional,
    basis: &EigenBasis,
    k: usize,
    rays: usize,
    t_grid: &[f64],
    seed: u64,
) -> Result<CoercivityReport> {
    if k == 0 || k > basis.k() {
        return Err(Error::invalid(format!(
            "coercivity scan needs 1 <= k <= K = {}, got {k}",
            basis.k()
        )));
    }
    if t_grid.is_empty() || t_grid.windows(2).any(|w| w[1].partial_cmp(&w[0]) != Some(std::cmp::Ordering::Greater)) || t_grid[0] <= 0.0 {
        return Err(Error::invalid("t-grid must be positive and strictly increasing"));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut traces = Vec::with_capacity(rays);
    for ray in 0..rays {
        let w = basis.combine(0, &random_unit(&mut rng, k));
        let phi = f.phi(&w)?;
        let j_at = |t: f64| -> Result<f64> { Ok(f.energy_with_phi(&w.scaled(t), &phi.scaled(t * t))?.total) };
        let trace: Vec<(f64, f64)> = t_grid.iter().map(|&t| Ok((t, j_at(t)?))).collect::<Result<_>>()?;
        let start = trace.iter().rposition(|&(_, j)| j > 0.0).map_or(0, |i| i + 1);
        let r = (start < trace.len()).then(|| trace[start].0);
        let tail_decreasing = r.is_some() && trace[start..].windows(2).all(|p| p[1].1 < p[0].1);
        let doubling_decreasing = match r {
            Some(r) => {
                let (a, b, c) = (j_at(r)?, j_at(2.0 * r)?, j_at(4.0 * r)?);
                a > b && b > c
            }
            None => false,
        };
        traces.push(RayTrace {
            ray,
            r,
            tail_decreasing,
            doubling_decreasing,
            j_at_max: trace.last().map_or(f64::NAN, |p| p.1),
            trace,
        });
    }
    let all_finite = traces.iter().all(|t| t.r.is_some());
    let all_decreasing = traces.iter().all(|t| t.tail_decreasing && t.doubling_decreasing);
    let r_max = if all_finite {
        traces.iter().filter_map(|t| t.r).reduce(f64::max)
    } else {
        None
    };
    Ok(CoercivityReport {
        k,
        rays: traces,
        r_max,
        all_finite,
        all_decreasing,
    })
}

#[derive(Debug, Clone, Serialize)]
pub struct MRow {
    pub m: usize,
    /// sampled sup of ‖u‖₂² over E-unit u in Z_m
    pub sup_l2_squared: f64,
    /// sampled sup of ‖u‖_p^p over E-unit u in Z_m
    pub sup_lp_power: f64,
    pub pass: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct MSelection {
    pub m: usize,
    pub p: f64,
    pub c1: f64,
    pub c2: f64,
    /// `1/(2c₁)`
    pub l2_cap: f64,
    /// `p/(4c₂)`
    pub lp_cap: f64,
    pub samples: usize,
    pub table: Vec<MRow>,
    pub note: &'static str,
}

/// Smallest m with `‖u‖₂² ≤ 1/(2c₁)` and `‖u‖_p^p ≤ p/(4c₂)` on all sampled
/// E-unit `u ∈ Z_m`.
pub fn select_m(f: &Functional, basis: &EigenBasis, samples: usize, seed: u64) -> Result<MSelection> {
    let g = f.nonlinearity().growth;
    if !(g.c1 > 0.0 && g.c2 > 0.0 && g.p > 2.0) {
        return Err(Error::invalid("select_m needs c1, c2 > 0 and p > 2"));
    }
    let (l2_cap, lp_cap) = (0.5 / g.c1, g.p / (4.0 * g.c2));
    let kk = basis.k();
    let mut table = Vec::new();
    for m in 1..kk {
        let mut sup_l2 = 0.0_f64;
        let mut sup_lp = 0.0_f64;
        for c in unit_samples(kk - m, samples, seed ^ (m as u64).wrapping_mul(0x9e37_79b9_7f4a_7c15)) {
            let u = basis.combine(m, &c);
            sup_l2 = sup_l2.max(u.l2_norm().powi(2));
            sup_lp = sup_lp.max(lp_norm(&u, g.p)?.powf(g.p));
        }
        let pass = sup_l2 <= l2_cap && sup_lp <= lp_cap;
        table.push(MRow {
            m,
            sup_l2_squared: sup_l2,
            sup_lp_power: sup_lp,
            pass,
        });
        if pass {
            return Ok(MSelection {
                m,
                p: g.p,
                c1: g.c1,
                c2: g.c2,
                l2_cap,
                lp_cap,
                samples,
                table,
                note: TRUNCATION_NOTE,
            });
        }
    }
    let best = table
        .last()
        .map(|r| format!("m={}: {:.4e}/{:.4e}", r.m, r.sup_l2_squared, r.sup_lp_power))
        .unwrap_or_default();
    Err(Error::invalid(format!(
        "no m <= K-1 = {} satisfies both bounds (caps {l2_cap:.4e}, {lp_cap:.4e}; last {best})",
        kk.saturating_sub(1)
    )))
}

#[derive(Debug, Clone, Serialize)]
pub struct RingReport {
    pub m: usize,
    pub rho: f64,
    pub p: f64,
    /// `¼(ρ² − ρᵖ)`
    pub delta: f64,
    pub min_j: f64,
    pub samples: usize,
    pub pass: bool,
    /// sampled minimum within 10% of δ
    pub near_binding: bool,
    /// Z_m coefficients of the minimizing sample
    pub argmin: Vec<f64>,
}

/// Samples `J` on `{u ∈ Z_m : ‖u‖_E = ρ}` and compares the minimum with δ.
pub fn ring_check(
    f: &Functional,
    basis: &EigenBasis,
    m: usize,
    rho: f64,
    samples: usize,
    seed: u64,
) -> Result<RingReport> {
    if !(rho > 0.0 && rho < 1.0) {
        return Err(Error::invalid(format!("ring radius must lie in (0, 1), got {rho}")));
    }
    if m == 0 || m >= basis.k() {
        return Err(Error::invalid(format!("ring check needs 1 <= m < K = {}", basis.k())));
    }
    let p = f.nonlinearity().growth.p;
    let delta = 0.25 * (rho * rho - rho.powf(p));
    let mut min_j = f64::INFINITY;
    let mut argmin = Vec::new();
    let set = unit_samples(basis.k() - m, samples, seed);
    let count = set.len();
    for c in set {
        let u = basis.combine(m, &c).scaled(rho);
        let j = f.energy(&u)?.total;
        if j < min_j {
            min_j = j;
            argmin = c;
        }
    }
    Ok(RingReport {
        m,
        rho,
        p,
        delta,
        min_j,
        samples: count,
        pass: min_j >= delta,
        near_binding: min_j < 1.1 * delta,
        argmin,
    })
}

/// Lower estimate of `β_k(r) = sup{‖u‖_r : u ∈ Z_k, ‖u‖_E = 1}`.
pub fn beta_k_estimate(basis: &EigenBasis, k: usize, r: f64, trials: usize, seed: u64) -> Result<f64> {
    let crit = critical_exponent(basis.grid().alpha());
    if !(r >= 2.0 && r < crit) {
        return Err(Error::invalid(format!("beta_k needs 2 <= r < {crit}, got {r}")));
    }
    if k == 0 || k >= basis.k() {
        return Err(Error::invalid(format!("beta_k needs 1 <= k < K = {}", basis.k())));
    }
    let len = basis.k() - k;
    let norm_of = |c: &[f64]| -> Result<f64> { lp_norm(&basis.combine(k, c), r) };
    let mut best = Vec::new();
    let mut best_val = f64::NEG_INFINITY;
    for c in unit_samples(len, trials, seed) {
        let v = norm_of(&c)?;
        if v > best_val {
            best_val = v;
            best = c;
        }
    }
    // projected ascent on the unit sphere of coefficients
    let mut step = 0.1;
    for _ in 0..8 {
        let u = basis.combine(k, &best);
        let w = u.map(|x| x.abs().powf(r - 2.0) * x)?;
        let mut grad: Vec<f64> = basis.modes[k..].iter().map(|e| w.dot(e)).collect::<Result<_>>()?;
        let along: f64 = grad.iter().zip(&best).map(|(g, c)| g * c).sum();
        grad.iter_mut().zip(&best).for_each(|(g, c)| *g -= along * c);
        let gn = grad.iter().map(|g| g * g).sum::<f64>().sqrt();
        if gn == 0.0 {
            break;
        }
        let mut cand: Vec<f64> = best.iter().zip(&grad).map(|(c, g)| c + step * g / gn).collect();
        let cn = cand.iter().map(|x| x * x).sum::<f64>().sqrt();
        cand.iter_mut().for_each(|x| *x /= cn);
        let v = norm_of(&cand)?;
        if v > best_val {
            best_val = v;
            best = cand;
        } else {
            step *= 0.5;
        }
    }
    Ok(best_val)
}

#[derive(Debug, Clone, Serialize)]
pub struct BetaRow {
    pub k: usize,
    pub r: f64,
    pub estimate: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct GeometryConfig {
    pub m_samples: usize,
    pub rhos: Vec<f64>,
    pub ring_samples: usize,
    pub coercivity_ks: Vec<usize>,
    pub rays: usize,
    pub t_grid: Vec<f64>,
    pub beta_ks: Vec<usize>,
    pub beta_r: f64,
    pub beta_trials: usize,
    pub seed: u64,
}

impl Default for GeometryConfig {
    fn default() -> Self {
        Self {
            m_samples: 500,
            rhos: vec![0.3, 0.5, 0.8],
            ring_samples: 1000,
            coercivity_ks: vec![2, 4, 6],
            rays: 20,
            t_grid: default_t_grid(),
            beta_ks: vec![5, 10, 20, 35],
            beta_r: 2.0,
            beta_trials: 200,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct GeometryReport {
    pub m_selection: Option<MSelection>,
    pub m_error: Option<String>,
    pub rings: Vec<RingReport>,
    pub coercivity: Vec<CoercivityReport>,
    pub beta: Vec<BetaRow>,
    pub beta_decreasing: bool,
    pub truncation_note: &'static str,
    pub all_pass: bool,
}

/// select_m, ring checks at the selected m, coercivity scans and the β_k table.
pub fn run_geometry(f: &Functional, basis: &EigenBasis, cfg: &GeometryConfig) -> Result<GeometryReport> {
    for &k in cfg.coercivity_ks.iter().chain(&cfg.beta_ks) {
        if k == 0 || k > basis.k() {
            return Err(Error::invalid(format!("requested k = {k} exceeds K = {}", basis.k())));
        }
    }
    let (m_selection, m_error) = match select_m(f, basis, cfg.m_samples, cfg.seed) {
        Ok(s) => (Some(s), None),
        Err(e) => (None, Some(e.to_string())),
    };
    let mut rings = Vec::new();
    if let Some(sel) = &m_selection {
        for (i, &rho) in cfg.rhos.iter().enumerate() {
            rings.push(ring_check(
                f,
                basis,
                sel.m,
                rho,
                cfg.ring_samples,
                cfg.seed.wrapping_add(i as u64 + 1),
            )?);
        }
    }
    let coercivity = cfg
        .coercivity_ks
        .iter()
        .map(|&k| {
            coercivity_scan(
                f,
                basis,
                k,
                cfg.rays,
                &cfg.t_grid,
                cfg.seed.wrapping_add(100 + k as u64),
            )
        })
        .collect::<Result<Vec<_>>>()?;
    let beta = cfg
        .beta_ks
        .iter()
        .map(|&k| {
            Ok(BetaRow {
                k,
                r: cfg.beta_r,
                estimate: beta_k_estimate(basis, k, cfg.beta_r, cfg.beta_trials, cfg.seed)?,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let beta_decreasing = beta.windows(2).all(|w| w[1].estimate < w[0].estimate);
    let all_pass = m_selection.is_some()
        && rings.iter().all(|r| r.pass)
        && coercivity.iter().all(|c| c.all_finite && c.all_decreasing)
        && beta_decreasing;
    Ok(GeometryReport {
        m_selection,
        m_error,
        rings,
        coercivity,
        beta,
        beta_decreasing,
        truncation_note: TRUNCATION_NOTE,
        all_pass,
    })
}

impl GeometryReport {
    /// Writes `rays.csv`, `coercivity.csv`, `rings.csv`, `m_table.csv` and `beta.csv`.
    pub fn write_csv(&self, dir: &Path) -> Result<Vec<PathBuf>> {
        fs::create_dir_all(dir)?;
        let mut written = Vec::new();
        let mut table = |name: &str, header: &str, rows: Vec<String>| -> Result<()> {
            let path = dir.join(name);
            let mut w = std::io::BufWriter::new(fs::File::create(&path)?);
            writeln!(w, "{header}")?;
            for r in rows {
                writeln!(w, "{r}")?;
            }
            w.flush()?;
            written.push(path);
            Ok(())
        };
        let fmt_opt = |x: Option<f64>| x.map_or_else(|| "none".to_string(), |v| format!("{v:e}"));
        table(
            "rays.csv",
            "k,ray,t,J",
            self.coercivity
                .iter()
                .flat_map(|c| {
                    c.rays.iter().flat_map(move |r| {
                        r.trace
                            .iter()
                            .map(move |(t, j)| format!("{},{},{t:e},{j:e}", c.k, r.ray))
                    })
                })
                .collect(),
        )?;
        table(
            "coercivity.csv",
            "k,ray,R,tail_decreasing,doubling_decreasing,J_at_tmax",
            self.coercivity
                .iter()
                .flat_map(|c| {
                    c.rays.iter().map(move |r| {
                        format!(
                            "{},{},{},{},{},{:e}",
                            c.k,
                            r.ray,
                            fmt_opt(r.r),
                            r.tail_decreasing,
                            r.doubling_decreasing,
                            r.j_at_max
                        )
                    })
                })
                .collect(),
        )?;
        table(
            "rings.csv",
            "m,rho,delta,min_J,samples,pass,near_binding",
            self.rings
                .iter()
                .map(|r| {
                    format!(
                        "{},{},{:e},{:e},{},{},{}",
                        r.m, r.rho, r.delta, r.min_j, r.samples, r.pass, r.near_binding
                    )
                })
                .collect(),
        )?;
        table(
            "m_table.csv",
            "m,sup_l2_squared,sup_lp_power,pass",
            self.m_selection
                .iter()
                .flat_map(|s| {
                    s.table
                        .iter()
                        .map(|r| format!("{},{:e},{:e},{}", r.m, r.sup_l2_squared, r.sup_lp_power, r.pass))
                })
                .collect(),
        )?;
        table(
            "beta.csv",
            "k,r,estimate",
            self.beta
                .iter()
                .map(|b| format!("{},{},{:e}", b.k, b.r, b.estimate))
                .collect(),
        )?;
        Ok(written)
    }
}
