//! One runner per experiment. Each writes its artifacts below the configured
//! output directory and returns the report.

use pdmm_core::analysis::{estimate_linear_rate, RateEstimate};
use pdmm_core::io::{fmt_num, write_grid_csv, write_pgm};
use pdmm_core::problems::{
    build_divergence_example, build_l1_counterexample, build_quadratic, build_tv_ct, CtParams,
    QuadraticParams, ScenarioError,
};
use pdmm_core::solver::{
    solve, step_accelerated, step_mismatched, AccelState, IterateState, RunTrace, SolveError,
    SolveOptions, Termination,
};
use pdmm_core::stepsize::{
    plan_classical, plan_cor33, plan_thm31, plan_thm32, verify_certificate, CertificateReport,
    ConvexityData, NormData, PlanError, StepPlan,
};
use serde::Serialize;
use serde_json::json;

use crate::config::{Experiment, ExperimentConfig, Planner};
use crate::report::{Artifacts, ExperimentReport, Status};
use crate::RunError;

pub fn run(cfg: &ExperimentConfig) -> Result<ExperimentReport, RunError> {
    match cfg.experiment {
        Some(Experiment::Quadratic) => run_quadratic(cfg),
        Some(Experiment::Counterexample) => run_counterexample(cfg),
        Some(Experiment::Divergence) => run_divergence(cfg),
        Some(Experiment::Ct) => run_ct(cfg),
        Some(Experiment::Certify) => run_certify(cfg),
        None => Err(RunError::Config("no experiment selected".into())),
    }
}

fn norm(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

/// CSV text with a header row and pre-formatted fields.
struct Table {
    writer: csv::Writer<Vec<u8>>,
}

impl Table {
    fn new(header: &[&str]) -> Self {
        let mut writer = csv::Writer::from_writer(Vec::new());
        writer.write_record(header).expect("in-memory write");
        Self { writer }
    }

    fn row(&mut self, fields: &[String]) {
        self.writer.write_record(fields).expect("in-memory write");
    }

    fn into_bytes(self) -> Vec<u8> {
        self.writer.into_inner().expect("in-memory flush")
    }
}

fn opt_num(v: Option<f64>) -> String {
    v.map(fmt_num).unwrap_or_default()
}

fn pgm(values: &[f64], height: usize, width: usize) -> Vec<u8> {
    let mut buf = Vec::new();
    write_pgm(&mut buf, values, height, width, 0.0, 1.0).expect("in-memory write");
    buf
}

fn grid_csv(values: &[f64], height: usize, width: usize) -> Vec<u8> {
    let mut buf = Vec::new();
    write_grid_csv(&mut buf, values, height, width).expect("in-memory write");
    buf
}

#[derive(Serialize)]
struct CertificateSummary {
    iterations: usize,
    passed: bool,
    violation: Option<String>,
}

impl From<&CertificateReport> for CertificateSummary {
    fn from(r: &CertificateReport) -> Self {
        Self {
            iterations: r.iterations,
            passed: r.passed(),
            violation: r.violation.as_ref().map(|v| {
                format!(
                    "{} at iteration {} (slack {:e})",
                    v.condition, v.iteration, v.slack
                )
            }),
        }
    }
}

/// Runs `solve`, keeping the partial trace when the iteration blows up.
fn solve_keep_trace(
    prob: &pdmm_core::SaddleProblem,
    plan: &StepPlan,
    x0: Vec<f64>,
    y0: Vec<f64>,
    opts: &SolveOptions,
) -> Result<RunTrace, RunError> {
    match solve(prob, plan, x0, y0, opts) {
        Ok(t) => Ok(t),
        Err(SolveError::NonFinite { trace, .. }) => Ok(*trace),
        Err(e) => Err(e.into()),
    }
}

fn run_quadratic(cfg: &ExperimentConfig) -> Result<ExperimentReport, RunError> {
    let q = &cfg.quadratic;
    let sc = build_quadratic(&QuadraticParams {
        n: q.n,
        m: q.m,
        alpha: q.alpha,
        beta: q.beta,
        mismatch_scale: q.mismatch_scale,
        kappa: q.kappa,
        seed: cfg.seed,
        allow_infeasible: q.allow_infeasible,
    })?;
    let conv = sc.scenario.conv();
    let mut notes = Vec::new();
    let planned = match q.planner {
        Planner::Thm32 => plan_thm32(conv, q.kappa, sc.norms),
        Planner::Cor33 => plan_cor33(conv, q.kappa, sc.norms),
        Planner::Classical => plan_classical(conv, q.kappa, sc.norms.norm_v),
    };
    let planned = match planned {
        Err(PlanError::Degenerate) => {
            notes.push("zero mismatch: exact-adjoint (classical) plan used".to_string());
            plan_classical(conv, q.kappa, sc.norms.norm_v)?
        }
        other => other?,
    };
    let plan = match q.tau {
        Some(tau) if tau > 0.0 => planned.with_tau(tau),
        Some(tau) => {
            return Err(RunError::Config(format!(
                "tau override must be positive, got {tau}"
            )))
        }
        None => planned,
    };

    let mut opts = SolveOptions::new(q.max_iter, q.rel_tol);
    for r in &sc.scenario.references {
        opts = opts.with_reference(r.clone());
    }
    if let Some(obj) = &sc.scenario.primal_objective {
        opts = opts.with_objective(obj.clone());
    }
    let s = &sc.scenario;
    let trace = solve_keep_trace(&s.problem, &plan, s.x0.clone(), s.y0.clone(), &opts)?;
    let certificate = verify_certificate(&plan, &sc.norms, &conv, trace.iterations().max(1));

    let mut table = Table::new(&[
        "iter",
        "residual",
        "dist_fixed_point",
        "dist_true_solution",
        "bound",
        "objective",
    ]);
    for r in &trace.records {
        table.row(&[
            r.iter.to_string(),
            fmt_num(r.residual),
            fmt_num(r.ref_dists[0].primal),
            fmt_num(r.ref_dists[1].primal),
            fmt_num(sc.error_bound),
            opt_num(r.objective),
        ]);
    }

    let rate: Option<RateEstimate> =
        match estimate_linear_rate(&trace, 0, q.tail_fraction, plan.omega) {
            Ok(r) => Some(r),
            Err(e) => {
                notes.push(format!("no rate estimate: {e}"));
                None
            }
        };
    let last = trace.last();
    let final_true = last.map(|r| r.ref_dists[1].primal);
    let fixed_point_gap = norm(
        &sc.fixed_point
            .x_hat
            .iter()
            .zip(&sc.x_star)
            .map(|(a, b)| a - b)
            .collect::<Vec<_>>(),
    );
    let results = json!({
        "norms": sc.norms,
        "precondition": sc.precondition,
        "plan": plan,
        "certificate": CertificateSummary::from(&certificate),
        "termination": trace.termination,
        "iterations": trace.iterations(),
        "final_residual": last.map(|r| r.residual),
        "final_dist_fixed_point": last.map(|r| r.ref_dists[0].primal),
        "final_dist_true_solution": final_true,
        "final_objective": last.and_then(|r| r.objective),
        "fixed_point_error": fixed_point_gap,
        "error_bound": sc.error_bound,
        "final_within_bound": final_true.map(|d| d <= sc.error_bound * (1.0 + 1e-10) + 1e-12),
        "rate": rate,
        "notes": notes,
    });

    let mut art = Artifacts::create(&cfg.out)?;
    art.write("trace.csv", table.into_bytes())?;
    if trace.termination == Termination::Diverged && q.tau.is_none() {
        let report = art.finish(cfg, Status::BehaviorMismatch, results)?;
        return Err(RunError::BehaviorMismatch(format!(
            "planned stepsizes diverged after {} iterations (see {})",
            trace.iterations(),
            report.out.display()
        )));
    }
    art.finish(cfg, Status::Ok, results)
}

fn run_counterexample(cfg: &ExperimentConfig) -> Result<ExperimentReport, RunError> {
    let c = &cfg.counterexample;
    let sc = build_l1_counterexample(
        c.n,
        c.alpha_mm,
        c.tau,
        c.sigma,
        vec![c.x0; c.n],
        vec![c.y0; c.n],
    )?;
    let plan = match sc.plan_hint {
        pdmm_core::problems::PlanHint::Manual { plan } => plan,
        _ => unreachable!("counterexample carries a manual plan"),
    };
    let expected_increment = c.alpha_mm * c.tau;

    let mut table = Table::new(&[
        "iter",
        "x_norm",
        "x_min",
        "x_max",
        "min_increment",
        "y_min",
        "y_max",
    ]);
    let mut state = IterateState::new(sc.x0.clone(), sc.y0.clone());
    let mut first_violation = None;
    let mut saturated_from = None;
    let mut saturated_error: f64 = 0.0;
    for _ in 0..c.iterations {
        let next = step_mismatched(&state, &plan, &sc.problem)?;
        let min_inc = next
            .x
            .iter()
            .zip(&state.x)
            .map(|(a, b)| a - b)
            .fold(f64::INFINITY, f64::min);
        if !(min_inc > 0.0) && first_violation.is_none() {
            first_violation = Some(next.iter);
        }
        if saturated_from.is_some() {
            for (a, b) in next.x.iter().zip(&state.x) {
                saturated_error = saturated_error.max((a - b - expected_increment).abs());
            }
        }
        if saturated_from.is_none() && state.y.iter().all(|y| *y == 1.0) {
            saturated_from = Some(state.iter);
            for (a, b) in next.x.iter().zip(&state.x) {
                saturated_error = saturated_error.max((a - b - expected_increment).abs());
            }
        }
        let (x_min, x_max) = min_max(&next.x);
        let (y_min, y_max) = min_max(&next.y);
        table.row(&[
            next.iter.to_string(),
            fmt_num(norm(&next.x)),
            fmt_num(x_min),
            fmt_num(x_max),
            fmt_num(min_inc),
            fmt_num(y_min),
            fmt_num(y_max),
        ]);
        state = next;
    }
    let monotone = first_violation.is_none();
    let increment_ok = saturated_error <= 1e-12 * (1.0 + expected_increment);
    let results = json!({
        "expected_behavior": sc.expected_behavior,
        "plan": plan,
        "iterations": c.iterations,
        "monotone_increase": monotone,
        "first_violation": first_violation,
        "saturated_from": saturated_from,
        "expected_saturated_increment": expected_increment,
        "max_saturated_increment_error": saturated_error,
        "final_x_norm": norm(&state.x),
        "final_distance_to_solution": norm(&state.x),
    });
    let mut art = Artifacts::create(&cfg.out)?;
    art.write("growth.csv", table.into_bytes())?;
    if !(monotone && increment_ok) {
        art.finish(cfg, Status::BehaviorMismatch, results)?;
        return Err(RunError::BehaviorMismatch(match first_violation {
            Some(i) => format!("x did not increase strictly at iteration {i}"),
            None => format!("saturated increment off by {saturated_error:e}"),
        }));
    }
    art.finish(cfg, Status::Ok, results)
}

fn min_max(v: &[f64]) -> (f64, f64) {
    v.iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), x| {
            (lo.min(*x), hi.max(*x))
        })
}

fn run_divergence(cfg: &ExperimentConfig) -> Result<ExperimentReport, RunError> {
    let d = &cfg.divergence;
    let sc = build_divergence_example(d.z, d.tau0, d.sigma0)?;
    let gamma = match sc.plan_hint {
        pdmm_core::problems::PlanHint::Accelerated { gamma, .. } => gamma,
        _ => unreachable!("divergence example carries an accelerated schedule"),
    };
    let mut state = AccelState::new(sc.x0.clone(), sc.y0.clone(), d.tau0, d.sigma0, gamma);
    let mut table = Table::new(&[
        "iter",
        "tau",
        "sigma",
        "tau_sum",
        "tau_lower_bound",
        "x1",
        "x2",
        "y",
        "x_norm",
    ]);
    let z = d.z;
    let mut tau_sum = 0.0;
    let mut tau_bound_ok = true;
    let mut dual_pinned = true;
    let mut closed_form_err: f64 = 0.0;
    let mut increasing = true;
    let mut stationary = true;
    let mut prev_norm = norm(&state.x);
    let mut norm_at_100 = None;
    for i in 0..d.iterations {
        // τ_i is the stepsize of step i + 1.
        let lower = 1.0 / (i as f64 + 1.0 / d.tau0);
        tau_bound_ok &= state.tau >= lower;
        tau_sum += state.tau;
        state = step_accelerated(&state, &sc.problem)?;
        let xn = norm(&state.x);
        dual_pinned &= (state.y[0] + z).abs() <= 1e-12 * (1.0 + z.abs());
        let scale = tau_sum * z.abs();
        closed_form_err = closed_form_err
            .max((state.x[0] - tau_sum * z).abs() / (1.0 + scale))
            .max((state.x[1] + tau_sum * z).abs() / (1.0 + scale));
        increasing &= xn > prev_norm;
        stationary &= state.x.iter().chain(&state.y).all(|v| *v == 0.0);
        prev_norm = xn;
        if state.iter == 100 {
            norm_at_100 = Some(xn);
        }
        table.row(&[
            state.iter.to_string(),
            fmt_num(state.tau),
            fmt_num(state.sigma),
            fmt_num(tau_sum),
            fmt_num(lower),
            fmt_num(state.x[0]),
            fmt_num(state.x[1]),
            fmt_num(state.y[0]),
            fmt_num(xn),
        ]);
    }
    let closed_form_ok = closed_form_err <= 1e-10;
    let (ok, behavior) = if z == 0.0 {
        (stationary, "stationary")
    } else {
        (
            dual_pinned && closed_form_ok && tau_bound_ok && increasing,
            "diverges_unbounded",
        )
    };
    let results = json!({
        "expected_behavior": sc.expected_behavior,
        "observed": behavior,
        "stationary": stationary,
        "iterations": d.iterations,
        "dual_pinned": dual_pinned,
        "closed_form_max_error": closed_form_err,
        "tau_lower_bound_holds": tau_bound_ok,
        "norm_increasing": increasing,
        "tau_sum": tau_sum,
        "final_x_norm": prev_norm,
        "growth_ratio_vs_iter100": norm_at_100.filter(|n| *n > 0.0).map(|n| prev_norm / n),
    });
    let mut art = Artifacts::create(&cfg.out)?;
    art.write("growth.csv", table.into_bytes())?;
    if !ok {
        art.finish(cfg, Status::BehaviorMismatch, results)?;
        return Err(RunError::BehaviorMismatch(format!(
            "z = {z}: dual pinned {dual_pinned}, closed form {closed_form_ok}, τ bound {tau_bound_ok}, increasing {increasing}, stationary {stationary}"
        )));
    }
    art.finish(cfg, Status::Ok, results)
}

#[derive(Serialize)]
struct CtRunSummary {
    plan: StepPlan,
    termination: Termination,
    iterations: usize,
    final_residual: Option<f64>,
    final_objective: Option<f64>,
    final_rel_dist_phantom: Option<f64>,
}

#[derive(Serialize)]
struct CtSweepRow {
    lambda1: f64,
    dir: String,
    norms: pdmm_core::problems::CtNorms,
    precondition: pdmm_core::problems::PreconditionCheck,
    mismatched: CtRunSummary,
    matched: CtRunSummary,
    /// `F(x_mismatched) − F(x_matched)` at the final iterates.
    objective_gap: Option<f64>,
}

#[derive(Serialize)]
struct Timing {
    lambda1: f64,
    mismatched_mean_iteration_secs: f64,
    matched_mean_iteration_secs: f64,
}

struct CtOutcome {
    row: CtSweepRow,
    files: Vec<(String, Vec<u8>)>,
    timing: Timing,
}

fn ct_trace_csv(trace: &RunTrace, phantom_norm: f64) -> Vec<u8> {
    let mut t = Table::new(&["iter", "residual", "rel_dist_phantom", "objective"]);
    for r in &trace.records {
        t.row(&[
            r.iter.to_string(),
            fmt_num(r.residual),
            fmt_num(r.ref_dists[0].primal / phantom_norm),
            opt_num(r.objective),
        ]);
    }
    t.into_bytes()
}

fn ct_summary(plan: StepPlan, trace: &RunTrace, phantom_norm: f64) -> CtRunSummary {
    let last = trace.last();
    CtRunSummary {
        plan,
        termination: trace.termination,
        iterations: trace.iterations(),
        final_residual: last.map(|r| r.residual),
        final_objective: last.and_then(|r| r.objective),
        final_rel_dist_phantom: last.map(|r| r.ref_dists[0].primal / phantom_norm),
    }
}

fn run_ct_single(cfg: &ExperimentConfig, lambda1: f64, dir: String) -> Result<CtOutcome, RunError> {
    let c = &cfg.ct;
    let ct = build_tv_ct(&CtParams {
        height: c.height,
        width: c.width,
        n_angles: c.n_angles,
        n_bins: c.n_bins,
        lambda0: c.lambda0,
        lambda1,
        lambda2: c.lambda2,
        eps: c.eps,
        noise_rel: c.noise_rel,
        kappa: c.kappa,
        seed: cfg.seed,
        allow_infeasible: c.allow_infeasible,
    })
    .map_err(|e| match e {
        ScenarioError::PreconditionViolated { .. } => RunError::Config(format!(
            "λ₁ = {lambda1}: {e}; for CT increase lambda2 or eps, or pass allow_infeasible"
        )),
        other => other.into(),
    })?;
    let (h, w) = (c.height, c.width);
    let phantom_norm = norm(&ct.phantom.values);
    let mut files = Vec::new();
    let mut run =
        |label: &str, sc: &pdmm_core::problems::Scenario, norm_op: f64| -> Result<_, RunError> {
            let plan = plan_classical(sc.conv(), c.kappa, norm_op)?;
            let mut opts = SolveOptions::new(c.max_iter, c.rel_tol);
            for r in &sc.references {
                opts = opts.with_reference(r.clone());
            }
            if let Some(obj) = &sc.primal_objective {
                opts = opts.with_objective(obj.clone());
            }
            let trace = solve_keep_trace(&sc.problem, &plan, sc.x0.clone(), sc.y0.clone(), &opts)?;
            let x = &trace.final_state.x;
            let err: Vec<f64> = x
                .iter()
                .zip(&ct.phantom.values)
                .map(|(a, b)| (a - b).abs())
                .collect();
            files.push((
                format!("{dir}/{label}_trace.csv"),
                ct_trace_csv(&trace, phantom_norm),
            ));
            files.push((format!("{dir}/{label}_recon.pgm"), pgm(x, h, w)));
            files.push((format!("{dir}/{label}_recon.csv"), grid_csv(x, h, w)));
            files.push((format!("{dir}/{label}_abs_error.pgm"), pgm(&err, h, w)));
            Ok((
                ct_summary(plan, &trace, phantom_norm),
                trace.mean_iteration_time(),
            ))
        };
    let (mismatched, t_mm) = run("mismatched", &ct.mismatched, ct.norms.norm_v)?;
    let (matched, t_m) = run("matched", &ct.matched, ct.norms.norm_a)?;
    let objective_gap = match (mismatched.final_objective, matched.final_objective) {
        (Some(a), Some(b)) => Some(a - b),
        _ => None,
    };
    Ok(CtOutcome {
        row: CtSweepRow {
            lambda1,
            dir,
            norms: ct.norms,
            precondition: ct.precondition,
            mismatched,
            matched,
            objective_gap,
        },
        files,
        timing: Timing {
            lambda1,
            mismatched_mean_iteration_secs: t_mm,
            matched_mean_iteration_secs: t_m,
        },
    })
}

fn run_ct(cfg: &ExperimentConfig) -> Result<ExperimentReport, RunError> {
    let c = &cfg.ct;
    // Independent λ₁ runs in parallel, each into its own subdirectory.
    let outcomes: Vec<Result<CtOutcome, RunError>> = std::thread::scope(|s| {
        let handles: Vec<_> = c
            .lambda1
            .iter()
            .enumerate()
            .map(|(k, &l1)| s.spawn(move || run_ct_single(cfg, l1, format!("lambda1_{k:02}"))))
            .collect();
        handles
            .into_iter()
            .map(|h| h.join().expect("CT worker panicked"))
            .collect()
    });
    let outcomes: Vec<CtOutcome> = outcomes.into_iter().collect::<Result<_, _>>()?;

    let mut art = Artifacts::create(&cfg.out)?;
    // Phantom and sinogram do not depend on λ₁.
    let ct0 = build_tv_ct(&CtParams {
        height: c.height,
        width: c.width,
        n_angles: c.n_angles,
        n_bins: c.n_bins,
        seed: cfg.seed,
        noise_rel: c.noise_rel,
        allow_infeasible: true,
        ..CtParams::default()
    })?;
    art.write("phantom.pgm", pgm(&ct0.phantom.values, c.height, c.width))?;
    art.write(
        "phantom.csv",
        grid_csv(&ct0.phantom.values, c.height, c.width),
    )?;
    art.write(
        "sinogram.csv",
        grid_csv(&ct0.sinogram, c.n_angles, c.n_bins),
    )?;

    let mut summary = Table::new(&[
        "lambda1",
        "mismatched_iterations",
        "mismatched_termination",
        "mismatched_objective",
        "mismatched_rel_dist_phantom",
        "matched_iterations",
        "matched_termination",
        "matched_objective",
        "matched_rel_dist_phantom",
    ]);
    let mut rows = Vec::new();
    let mut timing = Vec::new();
    for o in outcomes {
        for (path, bytes) in &o.files {
            art.write(path, bytes)?;
        }
        let r = &o.row;
        summary.row(&[
            fmt_num(r.lambda1),
            r.mismatched.iterations.to_string(),
            r.mismatched.termination.as_str().to_string(),
            opt_num(r.mismatched.final_objective),
            opt_num(r.mismatched.final_rel_dist_phantom),
            r.matched.iterations.to_string(),
            r.matched.termination.as_str().to_string(),
            opt_num(r.matched.final_objective),
            opt_num(r.matched.final_rel_dist_phantom),
        ]);
        rows.push(o.row);
        timing.push(o.timing);
    }
    art.write("sweep.csv", summary.into_bytes())?;
    // Wall times vary between runs, so they live outside the report.
    art.write(
        "timing.json",
        serde_json::to_string_pretty(&timing).expect("timing serializes") + "\n",
    )?;
    let results = json!({
        "geometry": {
            "n_angles": ct0.geometry.n_angles,
            "n_bins": ct0.geometry.n_bins,
            "detector_spacing": ct0.geometry.detector_spacing,
            "pixel_spacing": ct0.geometry.pixel_spacing,
        },
        "sweep": rows,
    });
    art.finish(cfg, Status::Ok, results)
}

#[derive(Serialize)]
struct PlannerEntry {
    planner: &'static str,
    status: &'static str,
    error: Option<String>,
    plan: Option<StepPlan>,
    certificate: Option<CertificateSummary>,
    note: Option<String>,
}

impl PlannerEntry {
    fn new(
        planner: &'static str,
        planned: Result<StepPlan, PlanError>,
        norms: &NormData,
        conv: &ConvexityData,
        n_iters: usize,
    ) -> Self {
        match planned {
            Ok(plan) => {
                let cert = verify_certificate(&plan, norms, conv, n_iters);
                Self {
                    planner,
                    status: "planned",
                    error: None,
                    plan: Some(plan),
                    certificate: Some(CertificateSummary::from(&cert)),
                    note: None,
                }
            }
            Err(e) => Self {
                planner,
                status: "rejected",
                error: Some(e.to_string()),
                plan: None,
                certificate: None,
                note: None,
            },
        }
    }
}

const GRID_FRACTIONS: usize = 19;
const GRID_EPS: usize = 49;

/// Largest-`τ` feasible `(μ_G, μ_F*, ε)` for the general planner, with
/// `δ = κ`, `μ = fγ` for `f ∈ {0.05, …, 0.95}` and `ε` on a log grid
/// `10^-6 … 10^6`. Candidates are certified in decreasing `τ` order.
fn thm31_search(
    conv: ConvexityData,
    kappa: f64,
    norms: NormData,
    n_iters: usize,
) -> (Option<StepPlan>, usize) {
    let mut feasible = Vec::new();
    for i in 1..=GRID_FRACTIONS {
        for j in 1..=GRID_FRACTIONS {
            for k in 0..GRID_EPS {
                let mu_g = i as f64 / 20.0 * conv.gamma_g;
                let mu_f = j as f64 / 20.0 * conv.gamma_fstar;
                let eps = 10f64.powf(-6.0 + 12.0 * k as f64 / (GRID_EPS - 1) as f64);
                if let Ok(p) = plan_thm31(conv, mu_g, mu_f, eps, kappa, kappa, norms) {
                    feasible.push(p);
                }
            }
        }
    }
    let n_feasible = feasible.len();
    feasible.sort_by(|a, b| b.tau.total_cmp(&a.tau));
    let best = feasible
        .into_iter()
        .find(|p| verify_certificate(p, &norms, &conv, n_iters).passed());
    (best, n_feasible)
}

fn run_certify(cfg: &ExperimentConfig) -> Result<ExperimentReport, RunError> {
    let c = &cfg.certify;
    let conv = ConvexityData::new(c.gamma_g, c.gamma_fstar);
    let norms = NormData::new(c.norm_v, c.norm_amv);
    let product = c.gamma_g * c.gamma_fstar;
    let required = 2.0 * c.norm_amv * c.norm_amv;

    let mut entries = vec![
        PlannerEntry::new(
            "thm32",
            plan_thm32(conv, c.kappa, norms),
            &norms,
            &conv,
            c.n_iters,
        ),
        PlannerEntry::new(
            "cor33",
            plan_cor33(conv, c.kappa, norms),
            &norms,
            &conv,
            c.n_iters,
        ),
    ];
    let mut classical = PlannerEntry::new(
        "classical",
        plan_classical(conv, c.kappa, c.norm_v),
        &norms,
        &conv,
        c.n_iters,
    );
    classical.note = Some(if c.norm_amv == 0.0 {
        "zero mismatch: the exact-adjoint plan applies".into()
    } else {
        "exact-adjoint rule; not designed for a nonzero mismatch".into()
    });
    entries.push(classical);

    let (best, n_feasible) = if c.gamma_g > 0.0 && c.gamma_fstar > 0.0 && c.norm_v > 0.0 {
        thm31_search(conv, c.kappa, norms, c.n_iters)
    } else {
        (None, 0)
    };
    let mut thm31 = match best {
        Some(plan) => PlannerEntry::new("thm31", Ok(plan), &norms, &conv, c.n_iters),
        None => PlannerEntry {
            planner: "thm31",
            status: "rejected",
            error: Some("no certified parameters on the search grid".into()),
            plan: None,
            certificate: None,
            note: None,
        },
    };
    thm31.note = Some(format!(
        "grid search over {} (mu_G, mu_F*, epsilon) points, {n_feasible} satisfied the moduli conditions",
        GRID_FRACTIONS * GRID_FRACTIONS * GRID_EPS
    ));
    entries.push(thm31);

    let mut table = Table::new(&[
        "planner",
        "status",
        "tau",
        "sigma",
        "omega",
        "certified",
        "detail",
    ]);
    for e in &entries {
        let p = e.plan.as_ref();
        table.row(&[
            e.planner.to_string(),
            e.status.to_string(),
            opt_num(p.map(|p| p.tau)),
            opt_num(p.map(|p| p.sigma)),
            opt_num(p.map(|p| p.omega)),
            e.certificate
                .as_ref()
                .map(|c| c.passed.to_string())
                .unwrap_or_default(),
            e.error
                .clone()
                .or_else(|| e.certificate.as_ref().and_then(|c| c.violation.clone()))
                .unwrap_or_default(),
        ]);
    }
    let results = json!({
        "precondition": {
            "product": product,
            "required": required,
            "satisfied": product > required,
        },
        "planners": entries,
    });
    let mut art = Artifacts::create(&cfg.out)?;
    art.write("certify.csv", table.into_bytes())?;
    art.finish(cfg, Status::Ok, results)
}
