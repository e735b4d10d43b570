use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{bail, Context};
use clap::{Parser, ValueEnum};
use uel_core::experiment::{run, ExperimentConfig, OutputFormat, Scheme, SolverKind};
use uel_core::geometry::BcType;
use uel_core::linalg::PreconditionerKind;

/// Grid-refinement studies for the ghost-point finite-difference and ghost
/// finite-element Poisson solvers on level-set domains.
///
/// Settings come from an optional TOML file; command-line flags override it.
/// The worker thread count can be set with UEL_THREADS.
#[derive(Debug, Parser)]
#[command(name = "uel", version, arg_required_else_help = true)]
struct Cli {
    /// TOML file with experiment settings (same keys as the flags, snake_case).
    #[arg(long, short)]
    config: Option<PathBuf>,
    /// circle, leaf, flower or hourglass.
    #[arg(long)]
    domain: Option<String>,
    #[arg(long, value_enum)]
    bc: Option<Bc>,
    #[arg(long, value_enum)]
    scheme: Option<SchemeArg>,
    /// Manufactured solution: paper_sin, linear, quadratic or constant.
    #[arg(long)]
    case: Option<String>,
    /// Boundary interpolation order of the fd scheme (1 or 2).
    #[arg(long)]
    p: Option<usize>,
    /// Penalty and snapping exponent of the fem scheme, in [1.5, 2].
    #[arg(long)]
    alpha: Option<f64>,
    /// Comma-separated cells per side, e.g. 40,80,160,320.
    #[arg(long, value_delimiter = ',')]
    grids: Option<Vec<usize>>,
    #[arg(long, value_enum)]
    solver: Option<SolverArg>,
    /// Preconditioner for cg.
    #[arg(long, value_enum)]
    precond: Option<PrecondArg>,
    /// Relaxation factor of the SOR preconditioner.
    #[arg(long)]
    omega: Option<f64>,
    /// Relative residual target of the iterative solvers.
    #[arg(long)]
    solver_tol: Option<f64>,
    #[arg(long)]
    max_iter: Option<usize>,
    /// Estimate the 2-norm condition number on every grid.
    #[arg(long, conflicts_with = "no_cond")]
    cond: bool,
    /// Skip the condition estimate (default: estimate up to N = 320).
    #[arg(long)]
    no_cond: bool,
    /// Bisection tolerance of the boundary projection, in units of h.
    #[arg(long)]
    tol_factor: Option<f64>,
    /// Report assembly and solve times.
    #[arg(long)]
    timings: bool,
    /// Write the report here instead of standard output.
    #[arg(long, short)]
    output: Option<PathBuf>,
    #[arg(long, value_enum)]
    format: Option<Format>,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum Bc {
    Dirichlet,
    Mixed,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum SchemeArg {
    Fd,
    Fem,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum SolverArg {
    Direct,
    Cg,
    Krylov,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum PrecondArg {
    None,
    Jacobi,
    Sor,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum Format {
    Csv,
    Json,
}

impl Cli {
    fn into_config(self) -> anyhow::Result<ExperimentConfig> {
        let mut c = match &self.config {
            Some(path) => {
                let text = std::fs::read_to_string(path)
                    .with_context(|| format!("reading config file {}", path.display()))?;
                toml::from_str(&text)
                    .with_context(|| format!("parsing config file {}", path.display()))?
            }
            None => ExperimentConfig::default(),
        };
        if let Some(d) = self.domain {
            c.domain = d;
        }
        if let Some(bc) = self.bc {
            c.bc = match bc {
                Bc::Dirichlet => BcType::Dirichlet,
                Bc::Mixed => BcType::Mixed,
            };
        }
        if let Some(s) = self.scheme {
            c.scheme = match s {
                SchemeArg::Fd => Scheme::Fd,
                SchemeArg::Fem => Scheme::Fem,
            };
        }
        if let Some(case) = self.case {
            c.case = case;
        }
        if self.p.is_some() {
            c.p = self.p;
        }
        if self.alpha.is_some() {
            c.alpha = self.alpha;
        }
        if let Some(g) = self.grids {
            c.grids = g;
        }
        if let Some(s) = self.solver {
            c.solver = Some(match s {
                SolverArg::Direct => SolverKind::Direct,
                SolverArg::Cg => SolverKind::Cg,
                SolverArg::Krylov => SolverKind::Krylov,
            });
        }
        c.preconditioner = match (self.precond, self.omega) {
            (Some(PrecondArg::Sor), omega) => Some(PreconditionerKind::Sor {
                omega: omega.unwrap_or(PreconditionerKind::DEFAULT_OMEGA),
            }),
            (_, Some(_)) => bail!("--omega applies to --precond sor only"),
            (Some(PrecondArg::None), None) => Some(PreconditionerKind::None),
            (Some(PrecondArg::Jacobi), None) => Some(PreconditionerKind::Jacobi),
            (None, None) => c.preconditioner,
        };
        if let Some(t) = self.solver_tol {
            c.solver_tol = t;
        }
        if let Some(m) = self.max_iter {
            c.max_iter = m;
        }
        if self.cond {
            c.compute_cond = Some(true);
        }
        if self.no_cond {
            c.compute_cond = Some(false);
        }
        if let Some(t) = self.tol_factor {
            c.tol_factor = t;
        }
        if self.timings {
            c.timings = true;
        }
        if self.output.is_some() {
            c.output = self.output;
        }
        if let Some(f) = self.format {
            c.format = match f {
                Format::Csv => OutputFormat::Csv,
                Format::Json => OutputFormat::Json,
            };
        }
        Ok(c)
    }
}

fn configure_threads() -> anyhow::Result<()> {
    let Ok(value) = std::env::var("UEL_THREADS") else {
        return Ok(());
    };
    let threads: usize = value
        .trim()
        .parse()
        .ok()
        .filter(|&t| t > 0)
        .with_context(|| format!("UEL_THREADS must be a positive integer, got `{value}`"))?;
    rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build_global()
        .context("configuring the thread pool")?;
    Ok(())
}

fn main_inner(cli: Cli) -> anyhow::Result<()> {
    configure_threads()?;
    let config = cli.into_config()?;
    let report = run(&config)?;
    let text = report.render(config.format);
    match &config.output {
        Some(path) => {
            std::fs::write(path, text).with_context(|| format!("writing {}", path.display()))?
        }
        None => print!("{text}"),
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match main_inner(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
