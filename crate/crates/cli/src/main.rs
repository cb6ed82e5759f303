//! `pdmm`: reproduces the mismatched-adjoint experiments from a TOML config
//! or command-line flags and writes CSV/JSON/PGM artifacts.

// `!(x > 0.0)` is used on purpose so that NaN fails positivity checks.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

mod config;
mod experiments;
mod report;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use pdmm_core::problems::ScenarioError;
use thiserror::Error;

use config::{Experiment, ExperimentConfig, Planner};

#[derive(Debug, Error)]
pub enum RunError {
    #[error("configuration error: {0}")]
    Config(String),
    #[error("{0}")]
    Scenario(#[from] ScenarioError),
    #[error("stepsize planning failed: {0}")]
    Plan(#[from] pdmm_core::stepsize::PlanError),
    #[error("solver failed: {0}")]
    Solve(#[from] pdmm_core::solver::SolveError),
    #[error("analysis failed: {0}")]
    Analysis(#[from] pdmm_core::analysis::AnalysisError),
    #[error("behavior mismatch: {0}")]
    BehaviorMismatch(String),
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
}

impl RunError {
    fn exit_code(&self) -> u8 {
        match self {
            RunError::Config(_) | RunError::Plan(_) => 2,
            RunError::Scenario(
                ScenarioError::PreconditionViolated { .. } | ScenarioError::InvalidParameter(_),
            ) => 2,
            RunError::BehaviorMismatch(_) => 3,
            _ => 1,
        }
    }
}

#[derive(Parser, Debug)]
#[command(
    name = "pdmm",
    version,
    about = "Primal-dual experiments with a mismatched adjoint"
)]
struct Cli {
    /// TOML experiment configuration; flags override its values.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Output directory for all artifacts.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    #[arg(long, global = true)]
    seed: Option<u64>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Run the experiment named in the config file.
    Run,
    /// Random quadratic testbed: convergence to the fixed point and error bound.
    Quadratic(QuadraticArgs),
    /// `min ‖x‖₁` with `V = −αI`: monotone divergence.
    Counterexample(CounterexampleArgs),
    /// Accelerated stepsizes on a 1×2 problem: unbounded iterates.
    Divergence(DivergenceArgs),
    /// TV-regularized CT reconstruction, matched and mismatched.
    Ct(CtArgs),
    /// Planned stepsizes and certificate verdicts for given moduli and norms.
    Certify(CertifyArgs),
}

#[derive(Args, Debug)]
struct QuadraticArgs {
    #[arg(long)]
    n: Option<usize>,
    #[arg(long)]
    m: Option<usize>,
    #[arg(long)]
    alpha: Option<f64>,
    #[arg(long)]
    beta: Option<f64>,
    #[arg(long)]
    mismatch_scale: Option<f64>,
    #[arg(long)]
    kappa: Option<f64>,
    #[arg(long, value_enum)]
    planner: Option<Planner>,
    #[arg(long)]
    tau: Option<f64>,
    #[arg(long)]
    allow_infeasible: bool,
    #[arg(long)]
    max_iter: Option<usize>,
    #[arg(long)]
    rel_tol: Option<f64>,
    #[arg(long)]
    tail_fraction: Option<f64>,
}

#[derive(Args, Debug)]
struct CounterexampleArgs {
    #[arg(long)]
    n: Option<usize>,
    #[arg(long)]
    alpha_mm: Option<f64>,
    #[arg(long)]
    tau: Option<f64>,
    #[arg(long)]
    sigma: Option<f64>,
    #[arg(long, allow_negative_numbers = true)]
    x0: Option<f64>,
    #[arg(long, allow_negative_numbers = true)]
    y0: Option<f64>,
    #[arg(long)]
    iterations: Option<usize>,
}

#[derive(Args, Debug)]
struct DivergenceArgs {
    #[arg(long, allow_negative_numbers = true)]
    z: Option<f64>,
    #[arg(long)]
    tau0: Option<f64>,
    #[arg(long)]
    sigma0: Option<f64>,
    #[arg(long)]
    iterations: Option<usize>,
}

#[derive(Args, Debug)]
struct CtArgs {
    #[arg(long)]
    height: Option<usize>,
    #[arg(long)]
    width: Option<usize>,
    #[arg(long)]
    n_angles: Option<usize>,
    #[arg(long)]
    n_bins: Option<usize>,
    #[arg(long)]
    lambda0: Option<f64>,
    /// Comma-separated sweep, e.g. `0.6,1.2,2.4`.
    #[arg(long, value_delimiter = ',')]
    lambda1: Option<Vec<f64>>,
    #[arg(long)]
    lambda2: Option<f64>,
    #[arg(long)]
    eps: Option<f64>,
    #[arg(long)]
    noise_rel: Option<f64>,
    #[arg(long)]
    kappa: Option<f64>,
    /// Fail with the measured quantities when `γ_G·γ_F* ≤ 2‖A−V‖²`.
    #[arg(long)]
    require_precondition: bool,
    #[arg(long)]
    max_iter: Option<usize>,
    #[arg(long)]
    rel_tol: Option<f64>,
}

#[derive(Args, Debug)]
struct CertifyArgs {
    #[arg(long)]
    gamma_g: Option<f64>,
    #[arg(long)]
    gamma_fstar: Option<f64>,
    #[arg(long)]
    norm_v: Option<f64>,
    #[arg(long)]
    norm_amv: Option<f64>,
    #[arg(long)]
    kappa: Option<f64>,
    #[arg(long)]
    n_iters: Option<usize>,
}

fn set<T>(slot: &mut T, value: Option<T>) {
    if let Some(v) = value {
        *slot = v;
    }
}

fn resolve(cli: Cli) -> Result<ExperimentConfig, RunError> {
    let mut cfg = match &cli.config {
        Some(path) => ExperimentConfig::load(path)?,
        None => ExperimentConfig::default(),
    };
    set(&mut cfg.out, cli.out);
    set(&mut cfg.seed, cli.seed);
    match cli.command {
        Command::Run => {
            if cli.config.is_none() {
                return Err(RunError::Config("`run` needs --config".into()));
            }
        }
        Command::Quadratic(a) => {
            cfg.experiment = Some(Experiment::Quadratic);
            let q = &mut cfg.quadratic;
            set(&mut q.n, a.n);
            set(&mut q.m, a.m);
            set(&mut q.alpha, a.alpha);
            set(&mut q.beta, a.beta);
            set(&mut q.mismatch_scale, a.mismatch_scale);
            set(&mut q.kappa, a.kappa);
            set(&mut q.planner, a.planner);
            if a.tau.is_some() {
                q.tau = a.tau;
            }
            q.allow_infeasible |= a.allow_infeasible;
            set(&mut q.max_iter, a.max_iter);
            set(&mut q.rel_tol, a.rel_tol);
            set(&mut q.tail_fraction, a.tail_fraction);
        }
        Command::Counterexample(a) => {
            cfg.experiment = Some(Experiment::Counterexample);
            let c = &mut cfg.counterexample;
            set(&mut c.n, a.n);
            set(&mut c.alpha_mm, a.alpha_mm);
            set(&mut c.tau, a.tau);
            set(&mut c.sigma, a.sigma);
            set(&mut c.x0, a.x0);
            set(&mut c.y0, a.y0);
            set(&mut c.iterations, a.iterations);
        }
        Command::Divergence(a) => {
            cfg.experiment = Some(Experiment::Divergence);
            let d = &mut cfg.divergence;
            set(&mut d.z, a.z);
            set(&mut d.tau0, a.tau0);
            set(&mut d.sigma0, a.sigma0);
            set(&mut d.iterations, a.iterations);
        }
        Command::Ct(a) => {
            cfg.experiment = Some(Experiment::Ct);
            let c = &mut cfg.ct;
            set(&mut c.height, a.height);
            set(&mut c.width, a.width);
            set(&mut c.n_angles, a.n_angles);
            set(&mut c.n_bins, a.n_bins);
            set(&mut c.lambda0, a.lambda0);
            set(&mut c.lambda1, a.lambda1);
            set(&mut c.lambda2, a.lambda2);
            set(&mut c.eps, a.eps);
            set(&mut c.noise_rel, a.noise_rel);
            set(&mut c.kappa, a.kappa);
            if a.require_precondition {
                c.allow_infeasible = false;
            }
            set(&mut c.max_iter, a.max_iter);
            set(&mut c.rel_tol, a.rel_tol);
        }
        Command::Certify(a) => {
            cfg.experiment = Some(Experiment::Certify);
            let c = &mut cfg.certify;
            set(&mut c.gamma_g, a.gamma_g);
            set(&mut c.gamma_fstar, a.gamma_fstar);
            set(&mut c.norm_v, a.norm_v);
            set(&mut c.norm_amv, a.norm_amv);
            set(&mut c.kappa, a.kappa);
            set(&mut c.n_iters, a.n_iters);
        }
    }
    cfg.validate()?;
    Ok(cfg)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = resolve(cli).and_then(|cfg| experiments::run(&cfg));
    match result {
        Ok(report) => {
            println!("{}", report.summary());
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("pdmm: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
