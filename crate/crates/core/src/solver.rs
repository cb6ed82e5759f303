//! The primal-dual iteration with a mismatched adjoint.
//!
//! One step with constant stepsizes `(τ, σ, ω)`:
//!
//! ```text
//! x⁺ = prox_{τG}(x − τ Vᵀ y)
//! x̄  = x⁺ + ω (x⁺ − x)
//! y⁺ = prox_{σF*}(y + σ A x̄)
//! ```
//!
//! With `V = A` this is the classical method. Each step applies `Vᵀ` once
//! and `A` once.

use std::sync::Arc;
use std::time::Instant;

use serde::Serialize;
use thiserror::Error;

use crate::io::fmt_num;
use crate::operators::{LinearMap, SharedMap};
use crate::prox::Prox;
use crate::stepsize::{ConvexityData, StepPlan};
use crate::vecops;

/// Primal objective `x ↦ F(Ax) + G(x)` supplied by a scenario.
pub type ObjectiveFn = Arc<dyn Fn(&[f64]) -> f64 + Send + Sync>;

#[derive(Debug, Error)]
pub enum SolveError {
    #[error("dimension mismatch: {0}")]
    Dimension(String),
    #[error("non-finite iterate at iteration {iter}")]
    NonFinite { iter: usize, trace: Box<RunTrace> },
    #[error("non-finite accelerated iterate at iteration {iter}")]
    NonFiniteAccelerated { iter: usize },
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("no primal objective attached to this problem")]
    Unavailable,
}

/// `min_x max_y G(x) + ⟨Ax, y⟩ − F*(y)`, solved with `Vᵀ` in place of `Aᵀ`.
#[derive(Clone)]
pub struct SaddleProblem {
    prox_g: Arc<dyn Prox>,
    prox_fstar: Arc<dyn Prox>,
    forward: SharedMap,
    surrogate: SharedMap,
    conv: ConvexityData,
}

impl SaddleProblem {
    pub fn new(
        prox_g: Arc<dyn Prox>,
        prox_fstar: Arc<dyn Prox>,
        forward: SharedMap,
        surrogate: SharedMap,
    ) -> Result<Self, SolveError> {
        let n = prox_g.dim();
        let m = prox_fstar.dim();
        if forward.cols() != n || surrogate.cols() != n {
            return Err(SolveError::Dimension(format!(
                "primal dimension {n} vs operator cols {} / {}",
                forward.cols(),
                surrogate.cols()
            )));
        }
        if forward.rows() != m || surrogate.rows() != m {
            return Err(SolveError::Dimension(format!(
                "dual dimension {m} vs operator rows {} / {}",
                forward.rows(),
                surrogate.rows()
            )));
        }
        let conv = ConvexityData::new(prox_g.strong_convexity(), prox_fstar.strong_convexity());
        Ok(Self {
            prox_g,
            prox_fstar,
            forward,
            surrogate,
            conv,
        })
    }

    /// Exact-adjoint problem: the surrogate is the forward operator itself.
    pub fn matched(
        prox_g: Arc<dyn Prox>,
        prox_fstar: Arc<dyn Prox>,
        forward: SharedMap,
    ) -> Result<Self, SolveError> {
        Self::new(prox_g, prox_fstar, forward.clone(), forward)
    }

    /// Same functions and forward operator with the surrogate replaced.
    pub fn with_surrogate(&self, surrogate: SharedMap) -> Result<Self, SolveError> {
        Self::new(
            self.prox_g.clone(),
            self.prox_fstar.clone(),
            self.forward.clone(),
            surrogate,
        )
    }

    pub fn is_matched(&self) -> bool {
        Arc::ptr_eq(&self.forward, &self.surrogate)
    }

    pub fn primal_dim(&self) -> usize {
        self.prox_g.dim()
    }

    pub fn dual_dim(&self) -> usize {
        self.prox_fstar.dim()
    }

    pub fn conv(&self) -> ConvexityData {
        self.conv
    }

    pub fn forward(&self) -> &SharedMap {
        &self.forward
    }

    pub fn surrogate(&self) -> &SharedMap {
        &self.surrogate
    }

    pub fn prox_g(&self) -> &Arc<dyn Prox> {
        &self.prox_g
    }

    pub fn prox_fstar(&self) -> &Arc<dyn Prox> {
        &self.prox_fstar
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct IterateState {
    pub x: Vec<f64>,
    pub y: Vec<f64>,
    pub x_prev: Vec<f64>,
    pub iter: usize,
}

impl IterateState {
    pub fn new(x0: Vec<f64>, y0: Vec<f64>) -> Self {
        Self {
            x_prev: x0.clone(),
            x: x0,
            y: y0,
            iter: 0,
        }
    }

    pub fn zeros(prob: &SaddleProblem) -> Self {
        Self::new(vec![0.0; prob.primal_dim()], vec![0.0; prob.dual_dim()])
    }

    fn is_finite(&self) -> bool {
        vecops::all_finite(&self.x) && vecops::all_finite(&self.y)
    }
}

/// Scratch buffers for one step.
struct Workspace {
    vty: Vec<f64>,
    primal: Vec<f64>,
    x_new: Vec<f64>,
    ax: Vec<f64>,
    dual: Vec<f64>,
    y_new: Vec<f64>,
}

impl Workspace {
    fn new(n: usize, m: usize) -> Self {
        Self {
            vty: vec![0.0; n],
            primal: vec![0.0; n],
            x_new: vec![0.0; n],
            ax: vec![0.0; m],
            dual: vec![0.0; m],
            y_new: vec![0.0; m],
        }
    }
}

/// One mismatched step; on return `state` holds the new iterate.
fn step_in_place(
    state: &mut IterateState,
    plan: &StepPlan,
    prob: &SaddleProblem,
    ws: &mut Workspace,
) {
    let (tau, sigma, omega) = (plan.tau, plan.sigma, plan.omega);

    prob.surrogate.apply_transpose_into(&state.y, &mut ws.vty);
    for ((p, x), v) in ws.primal.iter_mut().zip(&state.x).zip(&ws.vty) {
        *p = x - tau * v;
    }
    prob.prox_g.prox_into(&ws.primal, tau, &mut ws.x_new);

    // x̄ reuses the primal buffer.
    for ((xb, xn), x) in ws.primal.iter_mut().zip(&ws.x_new).zip(&state.x) {
        *xb = xn + omega * (xn - x);
    }
    prob.forward.apply_into(&ws.primal, &mut ws.ax);
    for ((d, y), ax) in ws.dual.iter_mut().zip(&state.y).zip(&ws.ax) {
        *d = y + sigma * ax;
    }
    prob.prox_fstar.prox_into(&ws.dual, sigma, &mut ws.y_new);

    std::mem::swap(&mut state.x_prev, &mut state.x);
    state.x.copy_from_slice(&ws.x_new);
    state.y.copy_from_slice(&ws.y_new);
    state.iter += 1;
}

fn check_state(state: &IterateState, prob: &SaddleProblem) -> Result<(), SolveError> {
    if state.x.len() != prob.primal_dim()
        || state.x_prev.len() != prob.primal_dim()
        || state.y.len() != prob.dual_dim()
    {
        return Err(SolveError::Dimension(format!(
            "iterate ({}, {}) does not match problem ({}, {})",
            state.x.len(),
            state.y.len(),
            prob.primal_dim(),
            prob.dual_dim()
        )));
    }
    Ok(())
}

/// A single mismatched step from `state`.
pub fn step_mismatched(
    state: &IterateState,
    plan: &StepPlan,
    prob: &SaddleProblem,
) -> Result<IterateState, SolveError> {
    check_state(state, prob)?;
    let mut next = state.clone();
    let mut ws = Workspace::new(prob.primal_dim(), prob.dual_dim());
    step_in_place(&mut next, plan, prob, &mut ws);
    if !next.is_finite() {
        return Err(SolveError::NonFinite {
            iter: next.iter,
            trace: Box::new(RunTrace::empty(next, Termination::Diverged)),
        });
    }
    Ok(next)
}

/// A reference point `(x_ref, y_ref)`; distances to it are recorded each
/// iteration. Without `y` only the primal distance is tracked.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Reference {
    pub label: String,
    pub x: Vec<f64>,
    pub y: Option<Vec<f64>>,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct RefDistance {
    /// `‖x − x_ref‖`.
    pub primal: f64,
    /// `sqrt(‖x − x_ref‖² + ‖y − y_ref‖²)` when the reference has a dual part.
    pub joint: Option<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct IterRecord {
    /// Index of the iterate produced by this step (first step → 1).
    pub iter: usize,
    /// `‖u^{i+1} − u^i‖` in the unweighted joint norm.
    pub residual: f64,
    pub ref_dists: Vec<RefDistance>,
    pub objective: Option<f64>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Termination {
    Converged,
    MaxIter,
    Diverged,
}

impl Termination {
    pub fn as_str(&self) -> &'static str {
        match self {
            Termination::Converged => "converged",
            Termination::MaxIter => "max_iter",
            Termination::Diverged => "diverged",
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct RunTrace {
    pub records: Vec<IterRecord>,
    pub final_state: IterateState,
    pub termination: Termination,
    /// Total wall time spent in the iteration loop.
    #[serde(skip)]
    pub wall_time_secs: f64,
}

impl RunTrace {
    fn empty(final_state: IterateState, termination: Termination) -> Self {
        Self {
            records: Vec::new(),
            final_state,
            termination,
            wall_time_secs: 0.0,
        }
    }

    pub fn iterations(&self) -> usize {
        self.records.len()
    }

    pub fn last(&self) -> Option<&IterRecord> {
        self.records.last()
    }

    /// Mean wall time per iteration in seconds.
    pub fn mean_iteration_time(&self) -> f64 {
        if self.records.is_empty() {
            0.0
        } else {
            self.wall_time_secs / self.records.len() as f64
        }
    }

    /// CSV with columns `iter,residual,dist_to_ref1,dist_to_ref2,objective`.
    /// Distances are primal; absent values are left empty.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("iter,residual,dist_to_ref1,dist_to_ref2,objective\n");
        for r in &self.records {
            let d = |k: usize| {
                r.ref_dists
                    .get(k)
                    .map(|d| fmt_num(d.primal))
                    .unwrap_or_default()
            };
            let obj = r.objective.map(fmt_num).unwrap_or_default();
            out.push_str(&format!(
                "{},{},{},{},{}\n",
                r.iter,
                fmt_num(r.residual),
                d(0),
                d(1),
                obj
            ));
        }
        out
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("trace serializes")
    }
}

#[derive(Clone)]
pub struct SolveOptions {
    pub max_iter: usize,
    pub rel_tol: f64,
    pub references: Vec<Reference>,
    pub objective: Option<ObjectiveFn>,
}

impl SolveOptions {
    pub fn new(max_iter: usize, rel_tol: f64) -> Self {
        Self {
            max_iter,
            rel_tol,
            references: Vec::new(),
            objective: None,
        }
    }

    pub fn with_reference(mut self, reference: Reference) -> Self {
        self.references.push(reference);
        self
    }

    pub fn with_objective(mut self, objective: ObjectiveFn) -> Self {
        self.objective = Some(objective);
        self
    }
}

/// Iterates [`step_mismatched`] from `(x0, y0)` until
/// `‖u^{i+1} − u^i‖ ≤ rel_tol·(1 + ‖u^{i+1}‖)` or `max_iter` steps.
///
/// A NaN/Inf iterate (or an overflowing residual) ends the run with [`SolveError::NonFinite`], which
/// carries the trace recorded so far.
pub fn solve(
    prob: &SaddleProblem,
    plan: &StepPlan,
    x0: Vec<f64>,
    y0: Vec<f64>,
    opts: &SolveOptions,
) -> Result<RunTrace, SolveError> {
    if opts.max_iter == 0 {
        return Err(SolveError::InvalidParameter("max_iter must be ≥ 1".into()));
    }
    if !(opts.rel_tol > 0.0) {
        return Err(SolveError::InvalidParameter(
            "rel_tol must be positive".into(),
        ));
    }
    let mut state = IterateState::new(x0, y0);
    check_state(&state, prob)?;
    for r in &opts.references {
        if r.x.len() != prob.primal_dim()
            || r.y.as_ref().is_some_and(|y| y.len() != prob.dual_dim())
        {
            return Err(SolveError::Dimension(format!(
                "reference {:?} has wrong shape",
                r.label
            )));
        }
    }

    let mut ws = Workspace::new(prob.primal_dim(), prob.dual_dim());
    let mut records = Vec::with_capacity(opts.max_iter.min(1 << 16));
    let mut y_prev = state.y.clone();
    let mut termination = Termination::MaxIter;
    let mut elapsed = 0.0;

    for _ in 0..opts.max_iter {
        y_prev.copy_from_slice(&state.y);
        let t0 = Instant::now();
        step_in_place(&mut state, plan, prob, &mut ws);
        elapsed += t0.elapsed().as_secs_f64();

        let dx = vecops::dist(&state.x, &state.x_prev);
        let dy = vecops::dist(&state.y, &y_prev);
        let residual = dx.hypot(dy);
        if !(state.is_finite() && residual.is_finite()) {
            let trace = RunTrace {
                records,
                final_state: state.clone(),
                termination: Termination::Diverged,
                wall_time_secs: elapsed,
            };
            return Err(SolveError::NonFinite {
                iter: state.iter,
                trace: Box::new(trace),
            });
        }

        let ref_dists = opts
            .references
            .iter()
            .map(|r| {
                let primal = vecops::dist(&state.x, &r.x);
                let joint =
                    r.y.as_ref()
                        .map(|ry| primal.hypot(vecops::dist(&state.y, ry)));
                RefDistance { primal, joint }
            })
            .collect();
        let objective = opts.objective.as_ref().map(|f| f(&state.x));
        records.push(IterRecord {
            iter: state.iter,
            residual,
            ref_dists,
            objective,
        });

        let unorm = vecops::norm(&state.x).hypot(vecops::norm(&state.y));
        if residual <= opts.rel_tol * (1.0 + unorm) {
            termination = Termination::Converged;
            break;
        }
    }
    Ok(RunTrace {
        records,
        final_state: state,
        termination,
        wall_time_secs: elapsed,
    })
}

/// Evaluates a scenario-supplied primal objective.
pub fn primal_objective(objective: Option<&ObjectiveFn>, x: &[f64]) -> Result<f64, SolveError> {
    objective.map(|f| f(x)).ok_or(SolveError::Unavailable)
}

/// Iterate of the accelerated variant with varying stepsizes.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct AccelState {
    pub x: Vec<f64>,
    pub y: Vec<f64>,
    pub x_prev: Vec<f64>,
    pub tau: f64,
    pub sigma: f64,
    /// Acceleration modulus in `θ = 1/sqrt(1 + 2τγ)`.
    pub gamma: f64,
    pub iter: usize,
}

impl AccelState {
    pub fn new(x0: Vec<f64>, y0: Vec<f64>, tau0: f64, sigma0: f64, gamma: f64) -> Self {
        Self {
            x_prev: x0.clone(),
            x: x0,
            y: y0,
            tau: tau0,
            sigma: sigma0,
            gamma,
            iter: 0,
        }
    }
}

/// One accelerated step:
///
/// ```text
/// x⁺ = prox_{τ_i G}(x − τ_i Vᵀ y)
/// θ_i = 1/sqrt(1 + 2τ_iγ),  τ_{i+1} = θ_i τ_i,  σ_{i+1} = σ_i/θ_i
/// y⁺ = prox_{σ_{i+1} F*}(y + σ_{i+1} A(x⁺ + θ_i(x⁺ − x)))
/// ```
pub fn step_accelerated(
    state: &AccelState,
    prob: &SaddleProblem,
) -> Result<AccelState, SolveError> {
    if !(state.gamma > 0.0 && state.tau > 0.0 && state.sigma > 0.0) {
        return Err(SolveError::InvalidParameter(
            "accelerated steps need positive gamma, tau and sigma".into(),
        ));
    }
    let tau = state.tau;
    let vty = prob.surrogate.apply_transpose(&state.y);
    let primal: Vec<f64> = state.x.iter().zip(&vty).map(|(x, v)| x - tau * v).collect();
    let x_new = prob.prox_g.prox(&primal, tau);

    let theta = 1.0 / (1.0 + 2.0 * tau * state.gamma).sqrt();
    let tau_next = theta * tau;
    let sigma_next = state.sigma / theta;

    let x_bar: Vec<f64> = x_new
        .iter()
        .zip(&state.x)
        .map(|(xn, x)| xn + theta * (xn - x))
        .collect();
    let ax = prob.forward.apply(&x_bar);
    let dual: Vec<f64> = state
        .y
        .iter()
        .zip(&ax)
        .map(|(y, a)| y + sigma_next * a)
        .collect();
    let y_new = prob.prox_fstar.prox(&dual, sigma_next);

    if !(vecops::all_finite(&x_new) && vecops::all_finite(&y_new)) {
        return Err(SolveError::NonFiniteAccelerated {
            iter: state.iter + 1,
        });
    }
    Ok(AccelState {
        x_prev: state.x.clone(),
        x: x_new,
        y: y_new,
        tau: tau_next,
        sigma: sigma_next,
        gamma: state.gamma,
        iter: state.iter + 1,
    })
}
