//! The four run commands. Each writes its reports into `cfg.run.out` and
//! returns the written files plus an exit code (0 pass, 1 check/target failure).

use std::fs;
use std::path::{Path, PathBuf};

use serde::Serialize;

use fracsp::energy::Functional;
use fracsp::grid::{GridSpec, RealField};
use fracsp::io::{load_field, save_field};
use fracsp::model::{check_hypotheses, HypothesisReport, Nonlinearity, Potential, SamplingPlan};
use fracsp::multisolve::{
    find_solutions, run_geometry, schrodinger_eigenbasis_with, verify_solution, EigenBasis, EigenOptions,
    GeometryConfig, GeometryReport, SolutionSet, SolverOptions, VerificationReport,
};
use fracsp::riesz::{
    coupling_integral, inversion_residual, riesz_potential_direct, solve_poisson, PoissonMetadata, DIRECT_SUM_LIMIT,
};
use fracsp::Error;

use crate::config::{ReportFormat, RunConfig};
use crate::CliError;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CommandKind {
    Poisson,
    Check,
    Geometry,
    Solve,
}

impl CommandKind {
    pub fn name(self) -> &'static str {
        match self {
            Self::Poisson => "poisson",
            Self::Check => "check",
            Self::Geometry => "geometry",
            Self::Solve => "solve",
        }
    }

    pub fn from_name(s: &str) -> Option<Self> {
        [Self::Poisson, Self::Check, Self::Geometry, Self::Solve]
            .into_iter()
            .find(|c| c.name() == s)
    }
}

pub struct CommandOutput {
    pub code: i32,
    pub files: Vec<PathBuf>,
    pub summary: Vec<String>,
}

fn write_json<T: Serialize>(dir: &Path, name: &str, value: &T) -> Result<PathBuf, CliError> {
    let path = dir.join(name);
    let json = serde_json::to_string_pretty(value).map_err(|e| CliError::format(e.to_string()))?;
    fs::write(&path, json + "\n").map_err(|e| CliError::io(&path, e))?;
    Ok(path)
}

fn write_csv(dir: &Path, name: &str, header: &[&str], rows: Vec<Vec<String>>) -> Result<PathBuf, CliError> {
    let path = dir.join(name);
    let mut w = csv::Writer::from_path(&path).map_err(|e| CliError::format(format!("{}: {e}", path.display())))?;
    let mut put = |rec: &[String]| w.write_record(rec).map_err(|e| CliError::format(e.to_string()));
    put(&header.iter().map(|s| s.to_string()).collect::<Vec<_>>())?;
    for r in &rows {
        put(r)?;
    }
    w.flush().map_err(|e| CliError::io(&path, e))?;
    Ok(path)
}

fn grid(cfg: &RunConfig) -> Result<GridSpec, Error> {
    GridSpec::cubic(cfg.grid.n, cfg.grid.l, cfg.grid.alpha)
}

fn functional(cfg: &RunConfig) -> Result<Functional, Error> {
    let potential = Potential::from_spec(&cfg.model.potential)?;
    let nl = Nonlinearity::from_spec(&cfg.model.nonlinearity)?;
    Functional::new(grid(cfg)?, potential, nl)
}

fn eigenbasis(f: &Functional, cfg: &RunConfig) -> Result<EigenBasis, Error> {
    let opts = EigenOptions {
        seed: cfg.run.seed,
        ..EigenOptions::new(cfg.solver.modes)
    };
    schrodinger_eigenbasis_with(f.grid(), f.potential_field(), f.alpha(), &opts)
}

pub fn run(kind: CommandKind, cfg: &RunConfig) -> Result<CommandOutput, CliError> {
    match kind {
        CommandKind::Poisson => cmd_poisson(cfg),
        CommandKind::Check => cmd_check(cfg),
        CommandKind::Geometry => cmd_geometry(cfg),
        CommandKind::Solve => cmd_solve(cfg),
    }
}

#[derive(Debug, Serialize)]
pub struct OracleReport {
    pub points: usize,
    pub max_abs_defect: f64,
    pub max_rel_defect: f64,
}

#[derive(Debug, Serialize)]
pub struct PoissonReport {
    pub metadata: PoissonMetadata,
    pub input_max_abs: f64,
    pub phi_max_abs: f64,
    pub coupling_integral: f64,
    pub inversion_residual: f64,
    pub oracle: Option<OracleReport>,
}

pub fn cmd_poisson(cfg: &RunConfig) -> Result<CommandOutput, CliError> {
    let input = cfg
        .run
        .input
        .as_ref()
        .ok_or_else(|| CliError::validation("poisson needs an input field (--input or run.input)"))?;
    let u = load_field(input)?;
    let alpha = cfg.grid.alpha;
    let u = u.clone().with_grid(u.grid().with_alpha(alpha)?)?;
    let sol = solve_poisson(&u, alpha)?;
    let oracle = if cfg.run.oracle {
        if u.len() > DIRECT_SUM_LIMIT {
            return Err(Error::GridTooLarge {
                points: u.len(),
                limit: DIRECT_SUM_LIMIT,
            }
            .into());
        }
        let direct = riesz_potential_direct(&u, alpha)?;
        let diff = sol.phi.sub(&direct.phi)?.max_abs();
        let scale = direct.phi.max_abs();
        Some(OracleReport {
            points: u.len(),
            max_abs_defect: diff,
            max_rel_defect: if scale > 0.0 { diff / scale } else { diff },
        })
    } else {
        None
    };
    let report = PoissonReport {
        metadata: sol.metadata(),
        input_max_abs: u.max_abs(),
        phi_max_abs: sol.phi.max_abs(),
        coupling_integral: coupling_integral(&u, &sol)?,
        inversion_residual: inversion_residual(&u, &sol)?,
        oracle,
    };
    let dir = &cfg.run.out;
    let phi_path = dir.join("phi.fld");
    save_field(&sol.phi, &phi_path)?;
    let mut files = vec![phi_path];
    files.push(match cfg.run.format {
        ReportFormat::Json => write_json(dir, "poisson.json", &report)?,
        ReportFormat::Csv => {
            let mut rows = vec![
                vec!["alpha".into(), alpha.to_string()],
                vec!["calibration".into(), report.metadata.calibration.to_string()],
                vec!["k_alpha".into(), report.metadata.k_alpha.to_string()],
                vec!["phi_max_abs".into(), report.phi_max_abs.to_string()],
                vec!["coupling_integral".into(), report.coupling_integral.to_string()],
                vec!["inversion_residual".into(), report.inversion_residual.to_string()],
            ];
            if let Some(o) = &report.oracle {
                rows.push(vec!["oracle_max_rel_defect".into(), o.max_rel_defect.to_string()]);
            }
            write_csv(dir, "poisson.csv", &["quantity", "value"], rows)?
        }
    });
    let mut summary = vec![format!(
        "phi written: max|phi| = {:.6e}, inversion residual {:.3e}",
        report.phi_max_abs, report.inversion_residual
    )];
    if let Some(o) = &report.oracle {
        summary.push(format!(
            "direct-sum oracle: max relative defect {:.3e}",
            o.max_rel_defect
        ));
    }
    Ok(CommandOutput {
        code: 0,
        files,
        summary,
    })
}

pub fn sampling_plan(cfg: &RunConfig) -> SamplingPlan {
    SamplingPlan {
        u_max: cfg.check.u_max,
        u_count: cfg.check.u_count,
        random_count: cfg.check.random_count,
        x_stride: cfg.check.x_stride,
        seed: cfg.run.seed,
        ladder_max: cfg.check.ladder_max,
        divergence_threshold: cfg.check.divergence_threshold,
        min_decade_growth: cfg.check.min_decade_growth,
        ..SamplingPlan::default()
    }
}

fn check_tables(dir: &Path, report: &HypothesisReport) -> Result<Vec<PathBuf>, CliError> {
    let checks = report
        .checks
        .iter()
        .map(|c| {
            vec![
                c.id.to_string(),
                c.pass.to_string(),
                c.samples.to_string(),
                c.violations.to_string(),
                c.detail.clone(),
            ]
        })
        .collect();
    let witnesses = report
        .checks
        .iter()
        .flat_map(|c| {
            c.witnesses.iter().map(move |w| {
                vec![
                    c.id.to_string(),
                    w.x[0].to_string(),
                    w.x[1].to_string(),
                    w.x[2].to_string(),
                    w.u.to_string(),
                    w.lhs.to_string(),
                    w.rhs.to_string(),
                ]
            })
        })
        .collect();
    Ok(vec![
        write_csv(
            dir,
            "check.csv",
            &["id", "pass", "samples", "violations", "detail"],
            checks,
        )?,
        write_csv(
            dir,
            "witnesses.csv",
            &["id", "x", "y", "z", "u", "lhs", "rhs"],
            witnesses,
        )?,
    ])
}

pub fn cmd_check(cfg: &RunConfig) -> Result<CommandOutput, CliError> {
    let nl = Nonlinearity::from_spec(&cfg.model.nonlinearity)?;
    let potential = Potential::from_spec(&cfg.model.potential)?;
    let report = check_hypotheses(&nl, &potential, &grid(cfg)?, &sampling_plan(cfg))?;
    let dir = &cfg.run.out;
    let files = match cfg.run.format {
        ReportFormat::Json => vec![write_json(dir, "check.json", &report)?],
        ReportFormat::Csv => check_tables(dir, &report)?,
    };
    let summary = report
        .checks
        .iter()
        .map(|c| {
            let mut line = format!(
                "({}) {}: {} violations in {} samples",
                c.id,
                if c.pass { "pass" } else { "FAIL" },
                c.violations,
                c.samples
            );
            if let Some(w) = c.witnesses.first().filter(|_| !c.pass) {
                line += &format!("; witness x = {:?}, u = {:e}: {:e} vs {:e}", w.x, w.u, w.lhs, w.rhs);
            }
            line
        })
        .collect();
    Ok(CommandOutput {
        code: if report.all_pass { 0 } else { 1 },
        files,
        summary,
    })
}

#[derive(Serialize)]
struct GeometryOutput<'a> {
    eigenvalues: &'a [f64],
    eigen_residuals: &'a [f64],
    report: &'a GeometryReport,
}

pub fn geometry_config(cfg: &RunConfig) -> GeometryConfig {
    GeometryConfig {
        m_samples: cfg.geometry.m_samples,
        rhos: cfg.geometry.rhos.clone(),
        ring_samples: cfg.geometry.ring_samples,
        coercivity_ks: cfg.geometry.ks.clone(),
        rays: cfg.geometry.rays,
        beta_ks: cfg.geometry.beta_ks.clone(),
        beta_r: cfg.geometry.beta_r,
        beta_trials: cfg.geometry.beta_trials,
        seed: cfg.run.seed,
        ..GeometryConfig::default()
    }
}

pub fn cmd_geometry(cfg: &RunConfig) -> Result<CommandOutput, CliError> {
    let gcfg = geometry_config(cfg);
    let kmax = cfg.solver.modes;
    if let Some(&k) = gcfg
        .coercivity_ks
        .iter()
        .chain(&gcfg.beta_ks)
        .find(|&&k| k == 0 || k > kmax)
    {
        return Err(CliError::validation(format!(
            "requested k = {k} exceeds K = {kmax} (solver.modes)"
        )));
    }
    let f = functional(cfg)?;
    let basis = eigenbasis(&f, cfg)?;
    let report = run_geometry(&f, &basis, &gcfg)?;
    let dir = &cfg.run.out;
    let mut files = report.write_csv(dir)?;
    if cfg.run.format == ReportFormat::Json {
        let out = GeometryOutput {
            eigenvalues: &basis.eigenvalues,
            eigen_residuals: &basis.residuals,
            report: &report,
        };
        files.push(write_json(dir, "geometry.json", &out)?);
    }
    let mut summary = vec![match &report.m_selection {
        Some(s) => format!("select_m: m = {}", s.m),
        None => format!("select_m: FAIL ({})", report.m_error.as_deref().unwrap_or("no m")),
    }];
    for r in &report.rings {
        summary.push(format!(
            "ring rho = {}: min J = {:.6e}, delta = {:.6e}, {}",
            r.rho,
            r.min_j,
            r.delta,
            if r.pass { "pass" } else { "FAIL" }
        ));
    }
    for c in &report.coercivity {
        let rs: Vec<String> = c
            .rays
            .iter()
            .map(|r| r.r.map_or_else(|| "no R".to_string(), |r| format!("{r:.3e}")))
            .collect();
        summary.push(format!(
            "coercivity k = {}: R_max = {}, rays [{}]",
            c.k,
            c.r_max.map_or_else(|| "no R".to_string(), |r| format!("{r:.3e}")),
            rs.join(" ")
        ));
    }
    let betas: Vec<String> = report
        .beta
        .iter()
        .map(|b| format!("k={}: {:.4}", b.k, b.estimate))
        .collect();
    summary.push(format!(
        "beta (r = {}): {} ({})",
        gcfg.beta_r,
        betas.join(", "),
        if report.beta_decreasing {
            "decreasing"
        } else {
            "NOT decreasing"
        }
    ));
    Ok(CommandOutput {
        code: if report.all_pass { 0 } else { 1 },
        files,
        summary,
    })
}

#[derive(Debug, Serialize)]
pub struct VerifiedPair {
    pub index: usize,
    pub solution: VerificationReport,
    pub partner: VerificationReport,
}

#[derive(Serialize)]
struct SolveReport<'a> {
    eigenvalues: &'a [f64],
    warnings: &'a [String],
    solutions: &'a SolutionSet,
    verification: &'a [VerifiedPair],
    pass: bool,
}

pub fn solver_options(cfg: &RunConfig) -> SolverOptions {
    let defaults = SolverOptions::default();
    SolverOptions {
        count_target: cfg.solver.count_target,
        tol: cfg.solver.tol,
        max_iterations: cfg.solver.max_iterations,
        max_restarts: cfg.solver.max_restarts,
        start_modes: defaults.start_modes.min(cfg.solver.modes),
        seed: cfg.run.seed,
        ..defaults
    }
}

pub fn cmd_solve(cfg: &RunConfig) -> Result<CommandOutput, CliError> {
    let f = functional(cfg)?;
    let basis = eigenbasis(&f, cfg)?;
    let opts = solver_options(cfg);
    let set = find_solutions(&f, &basis, &opts)?;
    let verification = set
        .fields
        .iter()
        .enumerate()
        .map(|(index, u): (usize, &RealField)| {
            Ok(VerifiedPair {
                index,
                solution: verify_solution(&f, u, opts.tol, cfg.run.seed)?,
                partner: verify_solution(&f, &u.scaled(-1.0), opts.tol, cfg.run.seed)?,
            })
        })
        .collect::<Result<Vec<_>, Error>>()?;
    let pass = !set.shortfall && verification.iter().all(|v| v.solution.pass && v.partner.pass);
    let dir = &cfg.run.out;
    let sol_dir = dir.join("solutions");
    set.save(&sol_dir)?;
    let mut files: Vec<PathBuf> = (0..set.len())
        .map(|i| sol_dir.join(format!("solution_{i:03}.fld")))
        .collect();
    files.push(sol_dir.join("index.json"));
    files.push(match cfg.run.format {
        ReportFormat::Json => write_json(
            dir,
            "solve.json",
            &SolveReport {
                eigenvalues: &basis.eigenvalues,
                warnings: f.warnings(),
                solutions: &set,
                verification: &verification,
                pass,
            },
        )?,
        ReportFormat::Csv => {
            let rows = set
                .records
                .iter()
                .zip(&verification)
                .map(|(r, v)| {
                    vec![
                        r.index.to_string(),
                        r.class
                            .iter()
                            .map(|s| match s {
                                1 => '+',
                                -1 => '-',
                                _ => '*',
                            })
                            .collect(),
                        r.energy.total.to_string(),
                        r.norm_e.to_string(),
                        r.residual_preconditioned.to_string(),
                        r.partner_residual_preconditioned.to_string(),
                        r.threshold.to_string(),
                        v.solution.weak_residual.to_string(),
                        (v.solution.pass && v.partner.pass).to_string(),
                    ]
                })
                .collect();
            write_csv(
                dir,
                "solve.csv",
                &[
                    "index",
                    "class",
                    "energy",
                    "norm_e",
                    "residual",
                    "partner_residual",
                    "threshold",
                    "weak_residual",
                    "verified",
                ],
                rows,
            )?
        }
    });
    let mut summary: Vec<String> = set
        .records
        .iter()
        .map(|r| {
            format!(
                "solution {}: J = {:.6}, |u|_E = {:.4}, residual {:.2e} (partner {:.2e}), {} iterations",
                r.index,
                r.energy.total,
                r.norm_e,
                r.residual_preconditioned,
                r.partner_residual_preconditioned,
                r.iterations
            )
        })
        .collect();
    if set.shortfall {
        summary.push(format!(
            "shortfall: {} of {} requested solutions after {} attempts",
            set.len(),
            opts.count_target,
            set.attempts.len()
        ));
    }
    Ok(CommandOutput {
        code: if pass { 0 } else { 1 },
        files,
        summary,
    })
}
