//! Grid-refinement studies: one configuration, a list of grid sizes, and a
//! report with error norms, observed orders, condition estimates and solver
//! statistics per grid.

use std::fmt::Write as _;
use std::path::Path;
use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::analysis::{
    fitted_order, make_case, relative_error, relative_error_vec, ManufacturedCase, Norm,
};
use crate::fd::{assemble_fd, fd_gradient, FdOptions};
use crate::fem::{assemble_fem, fem_gradient, fem_values, FemOptions};
use crate::geometry::{make_domain, BcType, BoundarySpec, Grid, LevelSetDomain, ProjectionOptions};
use crate::linalg::{
    estimate_cond2, solve_cg, solve_direct, solve_nonsymmetric, CsrMatrix, KrylovOptions,
    LuFactorization, PreconditionerKind, SolveReport, SolverError,
};
use crate::{Error, Result};

/// Largest grid for which the condition number is estimated when the
/// configuration leaves `compute_cond` unset.
pub const AUTO_COND_MAX_N: usize = 320;

/// A direct solve whose recomputed residual exceeds this is treated as
/// failed; iterative solves must meet `solver_tol`.
pub const DIRECT_RESIDUAL_LIMIT: f64 = 1e-8;

pub const CSV_HEADER: &str = "scheme,domain,bc,p,alpha,N,h,err_u_l1,err_u_l2,err_u_linf,err_g_l1,err_g_l2,err_g_linf,order_u_linf,order_g_linf,cond2,solver,precond,iters,residual,assemble_s,solve_s";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Scheme {
    Fd,
    Fem,
}

impl Scheme {
    pub fn label(self) -> &'static str {
        match self {
            Scheme::Fd => "fd",
            Scheme::Fem => "fem",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SolverKind {
    /// Sparse LU with iterative refinement.
    Direct,
    /// Preconditioned conjugate gradients; symmetric systems only.
    Cg,
    /// ILU(0)-preconditioned BiCGSTAB.
    Krylov,
}

impl SolverKind {
    pub fn label(self) -> &'static str {
        match self {
            SolverKind::Direct => "direct",
            SolverKind::Cg => "cg",
            SolverKind::Krylov => "krylov",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum OutputFormat {
    #[default]
    Csv,
    Json,
}

/// A convergence study. Unset options take scheme-dependent defaults, see
/// the accessor methods.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    pub domain: String,
    pub bc: BcType,
    pub scheme: Scheme,
    pub case: String,
    /// FD interpolation order.
    pub p: Option<usize>,
    /// FEM penalty and snapping exponent.
    pub alpha: Option<f64>,
    pub grids: Vec<usize>,
    pub solver: Option<SolverKind>,
    pub preconditioner: Option<PreconditionerKind>,
    /// Relative residual target of the iterative solvers.
    pub solver_tol: f64,
    pub max_iter: usize,
    pub compute_cond: Option<bool>,
    /// Bisection tolerance of the FD boundary projection, in units of `h`.
    pub tol_factor: f64,
    /// Report wall-clock times; off by default so that output is
    /// reproducible.
    pub timings: bool,
    pub output: Option<std::path::PathBuf>,
    pub format: OutputFormat,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        ExperimentConfig {
            domain: "circle".into(),
            bc: BcType::Dirichlet,
            scheme: Scheme::Fd,
            case: "paper_sin".into(),
            p: None,
            alpha: None,
            grids: vec![40, 80, 160, 320],
            solver: None,
            preconditioner: None,
            solver_tol: 1e-12,
            max_iter: 20_000,
            compute_cond: None,
            tol_factor: ProjectionOptions::default().tol_factor,
            timings: false,
            output: None,
            format: OutputFormat::Csv,
        }
    }
}

impl ExperimentConfig {
    pub fn p(&self) -> usize {
        self.p.unwrap_or(2)
    }

    pub fn alpha(&self) -> f64 {
        self.alpha.unwrap_or(2.0)
    }

    pub fn solver(&self) -> SolverKind {
        self.solver.unwrap_or(match self.scheme {
            Scheme::Fd => SolverKind::Direct,
            Scheme::Fem => SolverKind::Cg,
        })
    }

    pub fn preconditioner(&self) -> PreconditionerKind {
        self.preconditioner.unwrap_or(PreconditionerKind::Jacobi)
    }

    pub fn compute_cond_for(&self, n: usize) -> bool {
        self.compute_cond.unwrap_or(n <= AUTO_COND_MAX_N)
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::Config(msg));
        make_domain(&self.domain)?;
        make_case(&self.case)?;
        if self.grids.is_empty() {
            return bad("grid list is empty".into());
        }
        for &n in &self.grids {
            if n < 4 || n % 2 != 0 {
                return bad(format!("grid size {n} must be even and at least 4"));
            }
        }
        if self.grids.windows(2).any(|w| w[1] <= w[0]) {
            return bad(format!(
                "grid sizes {:?} must be strictly increasing",
                self.grids
            ));
        }
        match self.scheme {
            Scheme::Fd => {
                if self.alpha.is_some() {
                    return bad("alpha applies to the fem scheme only".into());
                }
                if !matches!(self.p(), 1 | 2) {
                    return bad(format!("p = {} not supported (expected 1 or 2)", self.p()));
                }
                if self.solver() == SolverKind::Cg {
                    return bad(
                        "cg needs a symmetric matrix; the fd system is not symmetric".into(),
                    );
                }
            }
            Scheme::Fem => {
                if self.p.is_some() {
                    return bad("p applies to the fd scheme only".into());
                }
                if !(1.5..=2.0).contains(&self.alpha()) {
                    return bad(format!("alpha = {} outside [1.5, 2]", self.alpha()));
                }
            }
        }
        if self.preconditioner.is_some() && self.solver() != SolverKind::Cg {
            return bad("a preconditioner can only be chosen for the cg solver".into());
        }
        if let Some(PreconditionerKind::Sor { omega }) = self.preconditioner {
            if !(omega > 0.0 && omega < 2.0) {
                return bad(format!("SOR relaxation {omega} outside (0, 2)"));
            }
        }
        if !(self.tol_factor > 0.0 && self.tol_factor < 1.0) {
            return bad(format!("tol_factor = {} outside (0, 1)", self.tol_factor));
        }
        if !(self.solver_tol > 0.0 && self.solver_tol < 1.0) {
            return bad(format!("solver_tol = {} outside (0, 1)", self.solver_tol));
        }
        if self.max_iter == 0 {
            return bad("max_iter must be positive".into());
        }
        Ok(())
    }
}

/// Relative errors in the three norms.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ErrorNorms {
    pub l1: f64,
    pub l2: f64,
    pub linf: f64,
}

impl ErrorNorms {
    pub fn get(&self, norm: Norm) -> f64 {
        match norm {
            Norm::L1 => self.l1,
            Norm::L2 => self.l2,
            Norm::Linf => self.linf,
        }
    }

    fn from_fn(mut f: impl FnMut(Norm) -> Result<f64>) -> Result<Self> {
        Ok(ErrorNorms {
            l1: f(Norm::L1)?,
            l2: f(Norm::L2)?,
            linf: f(Norm::Linf)?,
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReportRow {
    pub n: usize,
    pub h: f64,
    pub unknowns: usize,
    pub err_u: ErrorNorms,
    pub err_g: ErrorNorms,
    /// FEM only: L∞ error at the nodes inside Ω.
    pub err_u_nodal_linf: Option<f64>,
    /// Orders against the previous row.
    pub order_u_linf: Option<f64>,
    pub order_g_linf: Option<f64>,
    pub cond2: Option<f64>,
    pub solve: SolveReport,
    pub assemble_s: Option<f64>,
    pub solve_s: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConvergenceReport {
    pub config: ExperimentConfig,
    pub rows: Vec<ReportRow>,
}

fn pair_order(
    coarse: &ReportRow,
    fine: &ReportRow,
    err: impl Fn(&ReportRow) -> f64,
) -> Option<f64> {
    fitted_order(&[coarse.h, fine.h], &[err(coarse), err(fine)])
}

impl ConvergenceReport {
    pub fn hs(&self) -> Vec<f64> {
        self.rows.iter().map(|r| r.h).collect()
    }

    /// Least-squares slope of `log err_u` against `log h` over all rows.
    pub fn fitted_order_u(&self, norm: Norm) -> Option<f64> {
        let e: Vec<f64> = self.rows.iter().map(|r| r.err_u.get(norm)).collect();
        fitted_order(&self.hs(), &e)
    }

    pub fn fitted_order_g(&self, norm: Norm) -> Option<f64> {
        let e: Vec<f64> = self.rows.iter().map(|r| r.err_g.get(norm)).collect();
        fitted_order(&self.hs(), &e)
    }

    /// Orders between consecutive rows.
    pub fn pairwise_orders_u(&self, norm: Norm) -> Vec<Option<f64>> {
        self.rows
            .windows(2)
            .map(|w| pair_order(&w[0], &w[1], |r| r.err_u.get(norm)))
            .collect()
    }

    pub fn pairwise_orders_g(&self, norm: Norm) -> Vec<Option<f64>> {
        self.rows
            .windows(2)
            .map(|w| pair_order(&w[0], &w[1], |r| r.err_g.get(norm)))
            .collect()
    }

    pub fn to_csv(&self) -> String {
        let c = &self.config;
        let num = |v: Option<f64>| v.map_or_else(|| "n/a".to_string(), |x| format!("{x:e}"));
        let (p, alpha) = match c.scheme {
            Scheme::Fd => (c.p().to_string(), "n/a".to_string()),
            Scheme::Fem => ("n/a".to_string(), format!("{:e}", c.alpha())),
        };
        let precond = match c.solver() {
            SolverKind::Direct => "n/a",
            SolverKind::Cg => c.preconditioner().label(),
            SolverKind::Krylov => "ilu0",
        };
        let mut out = String::from(CSV_HEADER);
        out.push('\n');
        for r in &self.rows {
            let _ = writeln!(
                out,
                "{},{},{},{},{},{},{:e},{:e},{:e},{:e},{:e},{:e},{:e},{},{},{},{},{},{},{:e},{},{}",
                c.scheme.label(),
                c.domain,
                c.bc.label(),
                p,
                alpha,
                r.n,
                r.h,
                r.err_u.l1,
                r.err_u.l2,
                r.err_u.linf,
                r.err_g.l1,
                r.err_g.l2,
                r.err_g.linf,
                num(r.order_u_linf),
                num(r.order_g_linf),
                num(r.cond2),
                c.solver().label(),
                precond,
                r.solve.iterations,
                r.solve.final_residual,
                num(r.assemble_s),
                num(r.solve_s),
            );
        }
        out
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report contains only serializable data")
    }

    pub fn render(&self, format: OutputFormat) -> String {
        match format {
            OutputFormat::Csv => self.to_csv(),
            OutputFormat::Json => self.to_json(),
        }
    }

    pub fn write(&self, path: &Path, format: OutputFormat) -> std::io::Result<()> {
        std::fs::write(path, self.render(format))
    }
}

/// Runs every grid of the study. Grids are processed concurrently; rows come
/// back in grid order.
pub fn run(config: &ExperimentConfig) -> Result<ConvergenceReport> {
    config.validate()?;
    let mut rows = config
        .grids
        .par_iter()
        .map(|&n| {
            run_grid(config, n).map_err(|e| {
                e.context(format!(
                    "{} on {} ({}), N = {n}",
                    config.scheme.label(),
                    config.domain,
                    config.bc.label()
                ))
            })
        })
        .collect::<Result<Vec<_>>>()?;
    for k in 1..rows.len() {
        let (prev, cur) = rows.split_at_mut(k);
        let (c, f) = (&prev[k - 1], &mut cur[0]);
        f.order_u_linf = pair_order(c, f, |r| r.err_u.linf);
        f.order_g_linf = pair_order(c, f, |r| r.err_g.linf);
    }
    Ok(ConvergenceReport {
        config: config.clone(),
        rows,
    })
}

fn solve(config: &ExperimentConfig, a: &CsrMatrix, b: &[f64]) -> Result<(Vec<f64>, SolveReport)> {
    let opts = KrylovOptions {
        tol: config.solver_tol,
        max_iter: config.max_iter,
    };
    let (x, report) = match config.solver() {
        SolverKind::Direct => solve_direct(a, b)?,
        SolverKind::Cg => solve_cg(a, b, config.preconditioner(), &opts)?,
        SolverKind::Krylov => solve_nonsymmetric(a, b, &opts)?,
    };
    let target = match config.solver() {
        SolverKind::Direct => DIRECT_RESIDUAL_LIMIT,
        _ => config.solver_tol,
    };
    if !(report.final_residual <= target) {
        return Err(SolverError::NotConverged {
            method: report.method,
            iterations: report.iterations,
            residual: report.final_residual,
            note: report.note,
        }
        .into());
    }
    Ok((x, report))
}

fn cond2(a: &CsrMatrix) -> Result<f64> {
    let lu = LuFactorization::new(a)?;
    Ok(estimate_cond2(a, &lu).value)
}

/// One row of the study: assemble, solve and measure on an `n × n` grid.
pub fn run_grid(config: &ExperimentConfig, n: usize) -> Result<ReportRow> {
    let grid = Grid::new(n)?;
    let domain = make_domain(&config.domain)?;
    let bc = BoundarySpec::for_domain(config.bc, &config.domain);
    let case = make_case(&config.case)?;
    let mut row = match config.scheme {
        Scheme::Fd => run_fd(config, &grid, &domain, &bc, &case)?,
        Scheme::Fem => run_fem(config, &grid, &domain, &bc, &case)?,
    };
    if !config.timings {
        row.assemble_s = None;
        row.solve_s = None;
        row.solve.wall_time = 0.0;
    }
    Ok(row)
}

fn run_fd(
    config: &ExperimentConfig,
    grid: &Grid,
    domain: &LevelSetDomain,
    bc: &BoundarySpec,
    case: &ManufacturedCase,
) -> Result<ReportRow> {
    let opts = FdOptions {
        p: config.p(),
        projection: ProjectionOptions {
            tol_factor: config.tol_factor,
            ..ProjectionOptions::default()
        },
        ..FdOptions::default()
    };
    let start = Instant::now();
    let sys = assemble_fd(grid, domain, bc, case, &opts)?;
    let assemble_s = start.elapsed().as_secs_f64();
    let (u, report) = solve(config, &sys.matrix, &sys.rhs)?;

    let rows = sys.interior_rows();
    let points: Vec<_> = rows
        .iter()
        .map(|&r| grid.node_point(sys.nodes[r]))
        .collect();
    let weights = vec![grid.h() * grid.h(); rows.len()];
    let approx: Vec<f64> = rows.iter().map(|&r| u[r]).collect();
    let exact: Vec<f64> = points.iter().map(|&p| case.u(p)).collect();
    let grad = fd_gradient(&sys, &u)?;
    let grad_exact: Vec<_> = points.iter().map(|&p| case.grad(p)).collect();

    Ok(ReportRow {
        n: grid.cells_per_side(),
        h: grid.h(),
        unknowns: sys.num_rows(),
        err_u: ErrorNorms::from_fn(|b| Ok(relative_error(&approx, &exact, &weights, b)?))?,
        err_g: ErrorNorms::from_fn(|b| Ok(relative_error_vec(&grad, &grad_exact, &weights, b)?))?,
        err_u_nodal_linf: None,
        order_u_linf: None,
        order_g_linf: None,
        cond2: config
            .compute_cond_for(grid.cells_per_side())
            .then(|| cond2(&sys.matrix))
            .transpose()?,
        solve_s: Some(report.wall_time),
        solve: report,
        assemble_s: Some(assemble_s),
    })
}

fn run_fem(
    config: &ExperimentConfig,
    grid: &Grid,
    domain: &LevelSetDomain,
    bc: &BoundarySpec,
    case: &ManufacturedCase,
) -> Result<ReportRow> {
    let opts = FemOptions {
        alpha: config.alpha(),
        ..FemOptions::default()
    };
    let start = Instant::now();
    let sys = assemble_fem(grid, domain, bc, case, &opts)?;
    let assemble_s = start.elapsed().as_secs_f64();
    let (u, report) = solve(config, &sys.matrix, &sys.rhs)?;

    let quad = sys.quadrature_points();
    let weights: Vec<f64> = quad.iter().map(|q| q.weight).collect();
    let approx = fem_values(&sys, &u, &quad);
    let exact: Vec<f64> = quad.iter().map(|q| case.u(q.point)).collect();
    let grad = fem_gradient(&sys, &u, &quad);
    let grad_exact: Vec<_> = quad.iter().map(|q| case.grad(q.point)).collect();

    let inside: Vec<usize> = (0..sys.num_rows())
        .filter(|&r| sys.classification.phi[sys.nodes[r]] > 0.0)
        .collect();
    let nodal_approx: Vec<f64> = inside.iter().map(|&r| u[r]).collect();
    let nodal_exact: Vec<f64> = inside
        .iter()
        .map(|&r| case.u(grid.node_point(sys.nodes[r])))
        .collect();
    let nodal = relative_error(
        &nodal_approx,
        &nodal_exact,
        &vec![1.0; inside.len()],
        Norm::Linf,
    )?;

    Ok(ReportRow {
        n: grid.cells_per_side(),
        h: grid.h(),
        unknowns: sys.num_rows(),
        err_u: ErrorNorms::from_fn(|b| Ok(relative_error(&approx, &exact, &weights, b)?))?,
        err_g: ErrorNorms::from_fn(|b| Ok(relative_error_vec(&grad, &grad_exact, &weights, b)?))?,
        err_u_nodal_linf: Some(nodal),
        order_u_linf: None,
        order_g_linf: None,
        cond2: config
            .compute_cond_for(grid.cells_per_side())
            .then(|| cond2(&sys.matrix))
            .transpose()?,
        solve_s: Some(report.wall_time),
        solve: report,
        assemble_s: Some(assemble_s),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn fd_config(grids: Vec<usize>) -> ExperimentConfig {
        ExperimentConfig {
            grids,
            compute_cond: Some(false),
            ..ExperimentConfig::default()
        }
    }

    #[test]
    fn defaults_depend_on_scheme() {
        let fd = ExperimentConfig::default();
        assert_eq!(fd.solver(), SolverKind::Direct);
        assert_eq!(fd.p(), 2);
        let fem = ExperimentConfig {
            scheme: Scheme::Fem,
            ..ExperimentConfig::default()
        };
        assert_eq!(fem.solver(), SolverKind::Cg);
        assert_eq!(fem.preconditioner(), PreconditionerKind::Jacobi);
        assert_eq!(fem.alpha(), 2.0);
        assert!(fem.compute_cond_for(320) && !fem.compute_cond_for(640));
    }

    #[test]
    fn invalid_configurations_are_rejected() {
        let base = ExperimentConfig::default();
        let cases = [
            ExperimentConfig {
                grids: vec![40, 41],
                ..base.clone()
            },
            ExperimentConfig {
                grids: vec![80, 40],
                ..base.clone()
            },
            ExperimentConfig {
                grids: vec![],
                ..base.clone()
            },
            ExperimentConfig {
                alpha: Some(2.0),
                ..base.clone()
            },
            ExperimentConfig {
                p: Some(3),
                ..base.clone()
            },
            ExperimentConfig {
                solver: Some(SolverKind::Cg),
                ..base.clone()
            },
            ExperimentConfig {
                scheme: Scheme::Fem,
                p: Some(2),
                ..base.clone()
            },
            ExperimentConfig {
                scheme: Scheme::Fem,
                alpha: Some(1.4),
                ..base.clone()
            },
            ExperimentConfig {
                domain: "square".into(),
                ..base.clone()
            },
            ExperimentConfig {
                case: "cubic".into(),
                ..base.clone()
            },
            ExperimentConfig {
                tol_factor: 0.0,
                ..base.clone()
            },
            ExperimentConfig {
                preconditioner: Some(PreconditionerKind::Jacobi),
                ..base.clone()
            },
        ];
        for c in cases {
            assert!(c.validate().is_err(), "{c:?}");
        }
        assert!(base.validate().is_ok());
    }

    #[test]
    fn csv_layout() {
        let report = run(&fd_config(vec![20, 40])).unwrap();
        let csv = report.to_csv();
        let lines: Vec<&str> = csv.lines().collect();
        assert_eq!(lines.len(), 3);
        assert_eq!(lines[0], CSV_HEADER);
        let cols = CSV_HEADER.split(',').count();
        for l in &lines[1..] {
            assert_eq!(l.split(',').count(), cols);
        }
        let first: Vec<&str> = lines[1].split(',').collect();
        assert_eq!(
            &first[..7],
            &["fd", "circle", "dirichlet", "2", "n/a", "20", "1e-1"]
        );
        // no previous row, no cond, no timings
        assert_eq!(first[13], "n/a");
        assert_eq!(first[15], "n/a");
        assert_eq!(&first[20..], &["n/a", "n/a"]);
        let second: Vec<&str> = lines[2].split(',').collect();
        let order: f64 = second[13].parse().unwrap();
        assert!(order > 1.5, "order {order}");
        for field in &second[7..13] {
            let v: f64 = field.parse().unwrap();
            assert_eq!(format!("{v:e}"), *field);
        }
    }

    #[test]
    fn output_is_deterministic() {
        let c = ExperimentConfig {
            scheme: Scheme::Fem,
            bc: BcType::Mixed,
            grids: vec![40, 80],
            compute_cond: Some(true),
            ..ExperimentConfig::default()
        };
        let a = run(&c).unwrap();
        let b = run(&c).unwrap();
        assert_eq!(a.to_csv(), b.to_csv());
        assert_eq!(a.to_json(), b.to_json());
        assert!(a
            .rows
            .iter()
            .all(|r| r.cond2.unwrap() > 1.0 && r.err_u_nodal_linf.is_some()));
    }

    #[test]
    fn json_round_trips() {
        let report = run(&fd_config(vec![20])).unwrap();
        let back: ConvergenceReport = serde_json::from_str(&report.to_json()).unwrap();
        assert_eq!(back, report);
    }

    #[test]
    fn timings_only_on_request() {
        let c = ExperimentConfig {
            timings: true,
            ..fd_config(vec![20])
        };
        let row = &run(&c).unwrap().rows[0];
        assert!(row.assemble_s.is_some() && row.solve_s.is_some());
    }

    #[test]
    fn errors_carry_context() {
        let c = ExperimentConfig {
            scheme: Scheme::Fem,
            max_iter: 1,
            ..fd_config(vec![20])
        };
        let msg = run(&c).unwrap_err().to_string();
        assert!(
            msg.contains("fem on circle (dirichlet), N = 20") && msg.contains("cg-jacobi"),
            "{msg}"
        );
    }
}
