//! Constant stepsizes with a linear-convergence guarantee for the mismatched
//! iteration, and a runtime certificate re-checking every step-length
//! condition.
//!
//! The convergence argument weights the iterates with a diagonal test
//! operator `diag(φ_i I, ψ_{i+1} I)`. All of its requirements reduce to scalar
//! (in)equalities in `φ_i`, `ψ_i`, `η_i = τφ_i = σψ_i`, the stepsizes and the
//! norms `‖V‖`, `‖A − V‖`; [`verify_certificate`] evaluates exactly those.

use std::fmt;

use nalgebra::{Matrix4, SymmetricEigen};
use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Relative tolerance for the exact-arithmetic identities and inequalities.
pub const CERT_RTOL: f64 = 1e-10;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ConvexityData {
    pub gamma_g: f64,
    pub gamma_fstar: f64,
}

impl ConvexityData {
    pub fn new(gamma_g: f64, gamma_fstar: f64) -> Self {
        assert!(
            gamma_g >= 0.0 && gamma_fstar >= 0.0,
            "moduli must be nonnegative"
        );
        Self {
            gamma_g,
            gamma_fstar,
        }
    }

    fn product(&self) -> f64 {
        self.gamma_g * self.gamma_fstar
    }
}

/// `‖V‖` and `‖A − V‖`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct NormData {
    pub norm_v: f64,
    pub norm_amv: f64,
}

impl NormData {
    pub fn new(norm_v: f64, norm_amv: f64) -> Self {
        assert!(
            norm_v >= 0.0 && norm_amv >= 0.0,
            "norms must be nonnegative"
        );
        Self { norm_v, norm_amv }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Provenance {
    Thm31,
    Thm32,
    Cor33,
    Classical,
    Manual,
}

/// Constant stepsizes `(τ, σ, ω)` plus the planner parameters that produced
/// them. For manual plans the internals are zero.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct StepPlan {
    pub tau: f64,
    pub sigma: f64,
    pub omega: f64,
    pub kappa: f64,
    pub delta: f64,
    pub epsilon: f64,
    pub b: f64,
    pub a: f64,
    pub mu_g: f64,
    pub mu_fstar: f64,
    pub provenance: Provenance,
}

impl StepPlan {
    /// Hand-picked stepsizes without planner internals.
    pub fn manual(tau: f64, sigma: f64, omega: f64) -> Self {
        Self {
            tau,
            sigma,
            omega,
            kappa: 0.0,
            delta: 0.0,
            epsilon: 0.0,
            b: 0.0,
            a: 0.0,
            mu_g: 0.0,
            mu_fstar: 0.0,
            provenance: Provenance::Manual,
        }
    }

    /// Replaces `τ` and recomputes `σ = (μ_G/μ_F*)τ` and `ω = 1/(1 + 2τμ_G)`,
    /// keeping every other parameter. The result is tagged manual.
    pub fn with_tau(&self, tau: f64) -> Self {
        let sigma = if self.mu_fstar > 0.0 {
            self.mu_g / self.mu_fstar * tau
        } else {
            self.sigma * tau / self.tau
        };
        Self {
            tau,
            sigma,
            omega: 1.0 / (1.0 + 2.0 * tau * self.mu_g),
            provenance: Provenance::Manual,
            ..*self
        }
    }
}

/// Names of the checked step-length conditions.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Condition {
    /// `ω σ ψ_{i+1} = τ φ_i` (self-adjointness of the tested preconditioner).
    #[serde(rename = "adjointpd")]
    AdjointPd,
    /// `ψ_i σ = φ_i τ`.
    #[serde(rename = "def-eta")]
    DefEta,
    /// `ψ_{i+1} ≥ η_i² ‖V‖² / (φ_i (1 − κ))`.
    #[serde(rename = "cond-psi")]
    CondPsi,
    /// Second diagonal block of `S`: `ψ_{i+1} − η_i²‖V‖²/(φ_i(1−κ)) ≥ 0`.
    #[serde(rename = "S-diag2")]
    SSecondDiagonal,
    /// `φ_i ≥ ε η_i ‖A − V‖ / δ`.
    #[serde(rename = "cond-phi")]
    CondPhi,
    /// First diagonal block of `S`: `δφ_i − εη_i‖A − V‖ ≥ 0`.
    #[serde(rename = "S-diag1")]
    SFirstDiagonal,
    /// `γ_G ≥ ε‖A − V‖/(2ω) + μ_G`.
    #[serde(rename = "cond-gammaG")]
    CondGammaG,
    /// `γ_F* ≥ (1 + ω)‖A − V‖/(2ε) + μ_F*`.
    #[serde(rename = "cond-gammaFstar")]
    CondGammaFstar,
}

impl Condition {
    pub fn name(&self) -> &'static str {
        match self {
            Condition::AdjointPd => "adjointpd",
            Condition::DefEta => "def-eta",
            Condition::CondPsi => "cond-psi",
            Condition::SSecondDiagonal => "S-diag2",
            Condition::CondPhi => "cond-phi",
            Condition::SFirstDiagonal => "S-diag1",
            Condition::CondGammaG => "cond-gammaG",
            Condition::CondGammaFstar => "cond-gammaFstar",
        }
    }
}

impl fmt::Display for Condition {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum KappaBound {
    Half,
    MismatchRatio,
    NormRatio,
}

#[derive(Debug, Error, PartialEq)]
pub enum PlanError {
    #[error("condition {condition} violated (relative slack {slack:e})")]
    ConditionViolated { condition: Condition, slack: f64 },
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("precondition γ_G·γ_F* > 2‖A−V‖² violated: {product:e} ≤ {required:e}")]
    PreconditionViolated { product: f64, required: f64 },
    #[error("zero mismatch: this planner degenerates, use plan_classical")]
    Degenerate,
    #[error("kappa {kappa} exceeds the {bound:?} bound {limit:e}")]
    KappaOutOfRange {
        kappa: f64,
        bound: KappaBound,
        limit: f64,
    },
}

fn invalid(msg: impl Into<String>) -> PlanError {
    PlanError::InvalidParameter(msg.into())
}

fn check_kappa(kappa: f64) -> Result<(), PlanError> {
    if kappa > 0.0 && kappa < 1.0 {
        Ok(())
    } else {
        Err(invalid(format!("kappa must lie in (0, 1), got {kappa}")))
    }
}

/// Relative slack of `lhs ≥ rhs`.
fn rel_slack(lhs: f64, rhs: f64) -> f64 {
    let scale = lhs.abs().max(rhs.abs());
    if scale == 0.0 {
        0.0
    } else {
        (lhs - rhs) / scale
    }
}

fn check_mismatch_conditions(
    conv: &ConvexityData,
    plan: &StepPlan,
    norms: &NormData,
) -> Result<(), PlanError> {
    let g = rel_slack(
        conv.gamma_g,
        plan.epsilon / (2.0 * plan.omega) * norms.norm_amv + plan.mu_g,
    );
    if g < -CERT_RTOL {
        return Err(PlanError::ConditionViolated {
            condition: Condition::CondGammaG,
            slack: g,
        });
    }
    let f = rel_slack(
        conv.gamma_fstar,
        (1.0 + plan.omega) / (2.0 * plan.epsilon) * norms.norm_amv + plan.mu_fstar,
    );
    if f < -CERT_RTOL {
        return Err(PlanError::ConditionViolated {
            condition: Condition::CondGammaFstar,
            slack: f,
        });
    }
    Ok(())
}

/// Stepsizes from explicitly chosen `μ_G, μ_F*, ε, δ, κ`:
///
/// `τ = min{δ/(ε‖A−V‖), sqrt((1−κ)μ_F*/(‖V‖²μ_G))}`, `σ = (μ_G/μ_F*)τ`,
/// `ω = 1/(1 + 2τμ_G)`; the moduli conditions are re-checked at this `ω`.
pub fn plan_thm31(
    conv: ConvexityData,
    mu_g: f64,
    mu_fstar: f64,
    epsilon: f64,
    delta: f64,
    kappa: f64,
    norms: NormData,
) -> Result<StepPlan, PlanError> {
    check_kappa(kappa)?;
    if !(delta > 0.0 && delta <= kappa) {
        return Err(invalid(format!(
            "delta must lie in (0, kappa], got {delta}"
        )));
    }
    if !(mu_g > 0.0 && mu_fstar > 0.0 && epsilon > 0.0) {
        return Err(invalid("mu_G, mu_F* and epsilon must be positive"));
    }
    if norms.norm_v <= 0.0 {
        return Err(invalid("‖V‖ must be positive"));
    }
    let plan = thm31_core(
        conv,
        mu_g,
        mu_fstar,
        epsilon,
        delta,
        kappa,
        norms,
        Provenance::Thm31,
    );
    check_mismatch_conditions(&conv, &plan, &norms)?;
    Ok(plan)
}

#[allow(clippy::too_many_arguments)]
fn thm31_core(
    conv: ConvexityData,
    mu_g: f64,
    mu_fstar: f64,
    epsilon: f64,
    delta: f64,
    kappa: f64,
    norms: NormData,
    provenance: Provenance,
) -> StepPlan {
    let mismatch_term = if norms.norm_amv == 0.0 {
        f64::INFINITY
    } else {
        delta / (epsilon * norms.norm_amv)
    };
    let coupling_term = ((1.0 - kappa) * mu_fstar / (norms.norm_v.powi(2) * mu_g)).sqrt();
    let tau = mismatch_term.min(coupling_term);
    let ratio = |mu: f64, gamma: f64| if gamma > 0.0 { mu / gamma } else { 0.0 };
    StepPlan {
        tau,
        sigma: mu_g / mu_fstar * tau,
        omega: 1.0 / (1.0 + 2.0 * tau * mu_g),
        kappa,
        delta,
        epsilon,
        b: ratio(mu_g, conv.gamma_g),
        a: ratio(mu_fstar, conv.gamma_fstar),
        mu_g,
        mu_fstar,
        provenance,
    }
}

fn check_precondition(conv: &ConvexityData, norms: &NormData) -> Result<(), PlanError> {
    let required = 2.0 * norms.norm_amv.powi(2);
    if conv.product() > required {
        Ok(())
    } else {
        Err(PlanError::PreconditionViolated {
            product: conv.product(),
            required,
        })
    }
}

/// The `b` of the feasible-parameter construction.
pub fn thm32_b(conv: &ConvexityData, kappa: f64, norms: &NormData) -> f64 {
    let prod = conv.product();
    let r = norms.norm_amv.powi(2) / prod;
    let second = (0.5 - r) / kappa;
    let third = (1.0 - kappa) / (kappa * kappa) * norms.norm_amv.powi(4) / norms.norm_v.powi(2)
        * (2.0 / prod);
    0.5_f64.min(second).min(third)
}

/// Feasible stepsizes whenever `γ_G γ_F* > 2‖A − V‖²`.
///
/// Fixes `a = 1/2`, `μ_G = bγ_G`, `μ_F* = γ_F*/2`, `ε = ‖A−V‖/((1−a)γ_F*)`,
/// `δ = κ` and evaluates the constant-step formulas with these parameters.
/// `τ` is the smaller of `κ(1−a)γ_F*/‖A−V‖²` and
/// `sqrt((1−κ)γ_F*/(2b‖V‖²γ_G))`; the two coincide when `b` is set by its
/// third bound.
pub fn plan_thm32(conv: ConvexityData, kappa: f64, norms: NormData) -> Result<StepPlan, PlanError> {
    check_kappa(kappa)?;
    check_precondition(&conv, &norms)?;
    if norms.norm_amv == 0.0 {
        return Err(PlanError::Degenerate);
    }
    if norms.norm_v <= 0.0 {
        return Err(invalid("‖V‖ must be positive"));
    }
    let b = thm32_b(&conv, kappa, &norms);
    let a = 0.5;
    let mu_g = b * conv.gamma_g;
    let mu_fstar = a * conv.gamma_fstar;
    let epsilon = norms.norm_amv / ((1.0 - a) * conv.gamma_fstar);
    Ok(thm31_core(
        conv,
        mu_g,
        mu_fstar,
        epsilon,
        kappa,
        kappa,
        norms,
        Provenance::Thm32,
    ))
}

/// The three upper bounds on `κ` that make `b = 1/2`.
pub fn cor33_kappa_bounds(conv: &ConvexityData, norms: &NormData) -> [(KappaBound, f64); 3] {
    let prod = conv.product();
    [
        (KappaBound::Half, 0.5),
        (
            KappaBound::MismatchRatio,
            1.0 - 2.0 * norms.norm_amv.powi(2) / prod,
        ),
        (
            KappaBound::NormRatio,
            norms.norm_amv.powi(2) / norms.norm_v * (2.0 / prod).sqrt(),
        ),
    ]
}

/// Simplified parameter choice with `b = 1/2`: `σ = (γ_G/γ_F*)τ`,
/// `ω = 1/(1 + τγ_G)`.
pub fn plan_cor33(conv: ConvexityData, kappa: f64, norms: NormData) -> Result<StepPlan, PlanError> {
    check_kappa(kappa)?;
    check_precondition(&conv, &norms)?;
    if norms.norm_amv == 0.0 {
        return Err(PlanError::Degenerate);
    }
    if norms.norm_v <= 0.0 {
        return Err(invalid("‖V‖ must be positive"));
    }
    let (bound, limit) = cor33_kappa_bounds(&conv, &norms)
        .into_iter()
        .min_by(|a, b| a.1.total_cmp(&b.1))
        .unwrap();
    if kappa > limit {
        return Err(PlanError::KappaOutOfRange {
            kappa,
            bound,
            limit,
        });
    }
    let epsilon = 2.0 * norms.norm_amv / conv.gamma_fstar;
    Ok(thm31_core(
        conv,
        0.5 * conv.gamma_g,
        0.5 * conv.gamma_fstar,
        epsilon,
        kappa,
        kappa,
        norms,
        Provenance::Cor33,
    ))
}

/// Exact-adjoint stepsizes (`‖A − V‖ = 0`, `μ = γ`):
/// `τ = sqrt((1−κ)γ_F*/(‖V‖²γ_G))`, `σ = (γ_G/γ_F*)τ`, `ω = 1/(1 + 2τγ_G)`.
pub fn plan_classical(conv: ConvexityData, kappa: f64, norm_v: f64) -> Result<StepPlan, PlanError> {
    check_kappa(kappa)?;
    if !(conv.gamma_g > 0.0 && conv.gamma_fstar > 0.0) {
        return Err(invalid("both moduli must be positive"));
    }
    if !(norm_v > 0.0 && norm_v.is_finite()) {
        return Err(invalid(format!("‖V‖ must be positive, got {norm_v}")));
    }
    let tau = ((1.0 - kappa) * conv.gamma_fstar / (norm_v * norm_v * conv.gamma_g)).sqrt();
    Ok(StepPlan {
        tau,
        sigma: conv.gamma_g / conv.gamma_fstar * tau,
        omega: 1.0 / (1.0 + 2.0 * tau * conv.gamma_g),
        kappa,
        delta: kappa,
        epsilon: 1.0,
        b: 1.0,
        a: 1.0,
        mu_g: conv.gamma_g,
        mu_fstar: conv.gamma_fstar,
        provenance: Provenance::Classical,
    })
}

/// Test-operator scalars `(φ_i, ψ_i, η_i)` at iteration `i`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct CertificateState {
    pub phi: f64,
    pub psi: f64,
    pub eta: f64,
    pub iter: usize,
}

impl CertificateState {
    /// `φ₀ = 1/τ`, `ψ₀ = 1/σ`, hence `η₀ = 1`.
    pub fn initial(plan: &StepPlan) -> Self {
        Self {
            phi: 1.0 / plan.tau,
            psi: 1.0 / plan.sigma,
            eta: 1.0,
            iter: 0,
        }
    }

    fn rescaled(&self, factor: f64) -> Self {
        Self {
            phi: self.phi * factor,
            psi: self.psi * factor,
            eta: self.eta * factor,
            iter: self.iter,
        }
    }
}

/// `φ_{i+1} = φ_i(1 + 2τμ_G)`, `ψ_{i+1} = ψ_i(1 + 2σμ_F*)`, `η_{i+1} = τφ_{i+1}`.
pub fn advance_certificate(state: CertificateState, plan: &StepPlan) -> CertificateState {
    let phi = state.phi * (1.0 + 2.0 * plan.tau * plan.mu_g);
    CertificateState {
        phi,
        psi: state.psi * (1.0 + 2.0 * plan.sigma * plan.mu_fstar),
        eta: phi * plan.tau,
        iter: state.iter + 1,
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct Violation {
    pub condition: Condition,
    pub iteration: usize,
    pub slack: f64,
}

/// Outcome of [`verify_certificate`]. Slacks are relative:
/// `(lhs − rhs)/max(|lhs|, |rhs|)` for inequalities, `−|lhs − rhs|/max` for
/// identities.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CertificateReport {
    pub iterations: usize,
    pub violation: Option<Violation>,
    /// Smallest slack observed per condition, in check order.
    pub min_slack: Vec<(Condition, f64)>,
}

impl CertificateReport {
    pub fn passed(&self) -> bool {
        self.violation.is_none()
    }

    /// One line per condition: `name<TAB>iteration<TAB>slack<TAB>status`.
    pub fn to_lines(&self) -> String {
        let mut out = String::new();
        for (c, s) in &self.min_slack {
            let (iter, status) = match &self.violation {
                Some(v) if v.condition == *c => (v.iteration.to_string(), "FAIL"),
                _ => ("-".to_string(), "ok"),
            };
            out.push_str(&format!("{}\t{}\t{:.6e}\t{}\n", c.name(), iter, s, status));
        }
        out
    }
}

const CHECK_ORDER: [Condition; 8] = [
    Condition::AdjointPd,
    Condition::DefEta,
    Condition::CondPsi,
    Condition::SSecondDiagonal,
    Condition::CondPhi,
    Condition::SFirstDiagonal,
    Condition::CondGammaG,
    Condition::CondGammaFstar,
];

fn condition_slacks(
    plan: &StepPlan,
    norms: &NormData,
    conv: &ConvexityData,
    cur: &CertificateState,
    next: &CertificateState,
) -> [f64; 8] {
    let identity = |l: f64, r: f64| -rel_slack(l, r).abs();
    let coupling = cur.eta * cur.eta * norms.norm_v.powi(2) / (cur.phi * (1.0 - plan.kappa));
    let mismatch = plan.epsilon * cur.eta * norms.norm_amv;
    let phi_rhs = if mismatch == 0.0 {
        0.0
    } else {
        mismatch / plan.delta
    };
    [
        identity(plan.omega * plan.sigma * next.psi, plan.tau * cur.phi),
        identity(cur.psi * plan.sigma, cur.phi * plan.tau),
        rel_slack(next.psi, coupling),
        rel_slack(next.psi, coupling),
        rel_slack(cur.phi, phi_rhs),
        rel_slack(plan.delta * cur.phi, mismatch),
        rel_slack(
            conv.gamma_g,
            plan.epsilon / (2.0 * plan.omega) * norms.norm_amv + plan.mu_g,
        ),
        rel_slack(
            conv.gamma_fstar,
            if norms.norm_amv == 0.0 {
                plan.mu_fstar
            } else {
                (1.0 + plan.omega) / (2.0 * plan.epsilon) * norms.norm_amv + plan.mu_fstar
            },
        ),
    ]
}

/// Evolves the test-operator scalars for `n_iters` steps of a constant plan
/// and checks every step-length condition at each step.
///
/// All conditions are homogeneous of degree one in `(φ, ψ, η)`, so the state
/// is renormalized whenever it grows large; verdicts are unaffected.
pub fn verify_certificate(
    plan: &StepPlan,
    norms: &NormData,
    conv: &ConvexityData,
    n_iters: usize,
) -> CertificateReport {
    let mut min_slack: Vec<(Condition, f64)> =
        CHECK_ORDER.iter().map(|c| (*c, f64::INFINITY)).collect();
    let mut violation = None;
    let mut cur = CertificateState::initial(plan);
    for i in 0..n_iters {
        let next = advance_certificate(cur, plan);
        let slacks = condition_slacks(plan, norms, conv, &cur, &next);
        for (k, s) in slacks.iter().enumerate() {
            if *s < min_slack[k].1 {
                min_slack[k].1 = *s;
            }
            if violation.is_none() && (*s < -CERT_RTOL || s.is_nan()) {
                violation = Some(Violation {
                    condition: CHECK_ORDER[k],
                    iteration: i,
                    slack: *s,
                });
            }
        }
        cur = next;
        if cur.eta > 1e100 {
            cur = cur.rescaled(1.0 / cur.eta);
        }
    }
    CertificateReport {
        iterations: n_iters,
        violation,
        min_slack,
    }
}

/// The 4×4 symmetric matrix of the quadratic form in
/// `(‖x_{i+1}−x̂‖, ‖y_{i+1}−ŷ‖, ‖x_{i+1}−x_i‖, ‖y_{i+1}−y_i‖)` whose
/// nonnegativity would certify descent with only one strongly convex term.
#[allow(clippy::too_many_arguments)]
pub fn q_matrix(
    conv: &ConvexityData,
    mu_g: f64,
    mu_fstar: f64,
    norms: &NormData,
    eta_i: f64,
    eta_ip1: f64,
    phi_i: f64,
    psi_ip1: f64,
) -> Matrix4<f64> {
    let m = norms.norm_amv;
    let q12 = -0.5 * eta_ip1 * m;
    let q23 = -0.5 * eta_i * m;
    let q34 = -eta_i * norms.norm_v;
    Matrix4::new(
        eta_i * (conv.gamma_g - mu_g),
        q12,
        0.0,
        0.0,
        q12,
        eta_ip1 * (conv.gamma_fstar - mu_fstar),
        q23,
        0.0,
        0.0,
        q23,
        phi_i,
        q34,
        0.0,
        0.0,
        q34,
        psi_ip1,
    )
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct QCheck {
    pub is_psd: bool,
    pub min_eigenvalue: f64,
}

/// Positive semidefiniteness of [`q_matrix`]; eigenvalues above
/// `−1e-10·max(1, max|Q_ij|)` count as nonnegative.
#[allow(clippy::too_many_arguments)]
pub fn check_q_psd(
    conv: &ConvexityData,
    mu_g: f64,
    mu_fstar: f64,
    norms: &NormData,
    eta_i: f64,
    eta_ip1: f64,
    phi_i: f64,
    psi_ip1: f64,
) -> QCheck {
    let q = q_matrix(conv, mu_g, mu_fstar, norms, eta_i, eta_ip1, phi_i, psi_ip1);
    let scale = q.iter().fold(1.0_f64, |acc, v| acc.max(v.abs()));
    let min_eigenvalue = SymmetricEigen::new(q)
        .eigenvalues
        .iter()
        .copied()
        .fold(f64::INFINITY, f64::min);
    QCheck {
        is_psd: min_eigenvalue >= -1e-10 * scale,
        min_eigenvalue,
    }
}
