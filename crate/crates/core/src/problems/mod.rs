//! Scenario builders for the quadratic testbed, the two divergence
//! counterexamples and TV-regularized parallel-beam CT.
//!
//! A [`Scenario`] bundles a [`SaddleProblem`] with a starting point, a
//! recommended stepsize rule, closed-form references where they exist and
//! the behavior the run is expected to show.

mod gradient;
mod phantom;
mod radon;

pub use gradient::{gradient_op, Gradient};
pub use phantom::{shepp_logan, shepp_logan_value, ImageGrid};
pub use radon::{radon_line, radon_strip, GeometryError, SinogramGeometry};

use std::sync::Arc;

use nalgebra::{DMatrix, DVector};
use serde::Serialize;
use thiserror::Error;

use crate::analysis::{
    error_bound, quadratic_mismatched_fixed_point, quadratic_true_solution, random_quadratic,
    AnalysisError, FixedPointPair, QuadraticProblem,
};
use crate::operators::{
    estimate_operator_norm, DenseMap, DifferenceMap, LinearMap, SharedMap, StackedMap,
};
use crate::prox::{
    prox_box_indicator, prox_ct_dual_block, prox_quadratic_dual, prox_scaled_sqnorm, prox_zero,
    ProxError,
};
use crate::solver::{ObjectiveFn, Reference, SaddleProblem, SolveError};
use crate::stepsize::{ConvexityData, NormData, StepPlan};
use crate::vecops::{self, gaussian_vec, seeded_rng};

#[derive(Debug, Error)]
pub enum ScenarioError {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error(
        "precondition γ_G·γ_F* > 2‖A−V‖² violated: {product:e} ≤ {required:e} (‖A−V‖ = {mismatch_norm:e}); \
         increase the strong-convexity moduli or reduce the mismatch"
    )]
    PreconditionViolated {
        product: f64,
        required: f64,
        mismatch_norm: f64,
    },
    #[error(transparent)]
    Analysis(#[from] AnalysisError),
    #[error(transparent)]
    Geometry(#[from] GeometryError),
    #[error(transparent)]
    Prox(#[from] ProxError),
    #[error(transparent)]
    Solve(#[from] SolveError),
}

fn invalid(msg: impl Into<String>) -> ScenarioError {
    ScenarioError::InvalidParameter(msg.into())
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum ExpectedBehavior {
    ConvergesLinear,
    DivergesMonotone,
    DivergesUnbounded,
}

/// Recommended stepsize rule for a scenario.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
#[serde(tag = "planner", rename_all = "snake_case")]
pub enum PlanHint {
    Thm32 {
        kappa: f64,
    },
    Cor33 {
        kappa: f64,
    },
    /// Exact-adjoint rule evaluated with the scenario's `‖V‖`.
    Classical {
        kappa: f64,
    },
    Manual {
        plan: StepPlan,
    },
    /// Varying stepsizes `θ_i = 1/sqrt(1 + 2τ_iγ)`.
    Accelerated {
        tau0: f64,
        sigma0: f64,
        gamma: f64,
    },
}

#[derive(Clone)]
pub struct Scenario {
    pub name: &'static str,
    pub problem: SaddleProblem,
    pub x0: Vec<f64>,
    pub y0: Vec<f64>,
    pub plan_hint: PlanHint,
    pub references: Vec<Reference>,
    pub primal_objective: Option<ObjectiveFn>,
    pub expected_behavior: ExpectedBehavior,
}

impl Scenario {
    pub fn conv(&self) -> ConvexityData {
        self.problem.conv()
    }

    pub fn primal_objective(&self, x: &[f64]) -> Result<f64, SolveError> {
        crate::solver::primal_objective(self.primal_objective.as_ref(), x)
    }
}

/// `γ_G·γ_F*` against `2‖A − V‖²`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct PreconditionCheck {
    pub product: f64,
    pub required: f64,
    pub mismatch_norm: f64,
    pub satisfied: bool,
}

impl PreconditionCheck {
    pub fn new(conv: ConvexityData, mismatch_norm: f64) -> Self {
        let product = conv.gamma_g * conv.gamma_fstar;
        let required = 2.0 * mismatch_norm * mismatch_norm;
        Self {
            product,
            required,
            mismatch_norm,
            satisfied: product > required,
        }
    }

    fn into_result(self) -> Result<Self, ScenarioError> {
        if self.satisfied {
            Ok(self)
        } else {
            Err(ScenarioError::PreconditionViolated {
                product: self.product,
                required: self.required,
                mismatch_norm: self.mismatch_norm,
            })
        }
    }
}

const NORM_TOL: f64 = 1e-13;
const NORM_MAX_ITER: usize = 200_000;

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct QuadraticParams {
    pub n: usize,
    pub m: usize,
    pub alpha: f64,
    pub beta: f64,
    pub mismatch_scale: f64,
    pub kappa: f64,
    pub seed: u64,
    /// Build even when the precondition fails.
    pub allow_infeasible: bool,
}

impl Default for QuadraticParams {
    fn default() -> Self {
        Self {
            n: 100,
            m: 50,
            alpha: 0.15,
            beta: 1.0,
            mismatch_scale: 0.05,
            kappa: 0.01,
            seed: 0,
            allow_infeasible: false,
        }
    }
}

pub struct QuadraticScenario {
    pub scenario: Scenario,
    pub data: QuadraticProblem,
    pub x_star: Vec<f64>,
    pub y_star: Vec<f64>,
    pub fixed_point: FixedPointPair,
    pub norms: NormData,
    /// `‖(V − A)ᵀŷ‖/γ_G`.
    pub error_bound: f64,
    pub precondition: PreconditionCheck,
}

/// Random quadratic testbed `min (α/2)‖x‖² + (1/(2β))‖Ax − z‖²` with
/// `V = A + E`.
///
/// `A` is standard normal rescaled to unit spectral norm, `E` standard
/// normal rescaled to `‖E‖ = mismatch_scale`. References: the mismatched
/// fixed point `(x̂, ŷ)` first, the true saddle point `(x*, y*)` second.
pub fn build_quadratic(params: &QuadraticParams) -> Result<QuadraticScenario, ScenarioError> {
    let QuadraticParams {
        n,
        m,
        alpha,
        beta,
        mismatch_scale,
        kappa,
        seed,
        allow_infeasible,
    } = *params;
    if n == 0 || m == 0 {
        return Err(invalid("n and m must be ≥ 1"));
    }
    if !(alpha > 0.0 && beta > 0.0) {
        return Err(invalid(format!(
            "alpha and beta must be positive, got {alpha}, {beta}"
        )));
    }
    let data = random_quadratic(n, m, alpha, beta, mismatch_scale, true, seed)?;
    let norms = NormData::new(
        estimate_operator_norm(
            &DenseMap::new(data.v.clone()),
            NORM_TOL,
            NORM_MAX_ITER,
            seed,
        )
        .value,
        estimate_operator_norm(
            &DenseMap::new(&data.a - &data.v),
            NORM_TOL,
            NORM_MAX_ITER,
            seed,
        )
        .value,
    );
    let conv = ConvexityData::new(alpha, beta);
    let precondition = PreconditionCheck::new(conv, norms.norm_amv);
    if !allow_infeasible {
        precondition.into_result()?;
    }

    let x_star = quadratic_true_solution(&data)?;
    let ax = &data.a * DVector::from_column_slice(&x_star);
    let y_star: Vec<f64> = ax
        .iter()
        .zip(&data.z)
        .map(|(a, z)| (a - z) / beta)
        .collect();
    let fixed_point = quadratic_mismatched_fixed_point(&data)?;
    let problem = data.saddle_problem();
    let bound = error_bound(
        alpha,
        problem.forward(),
        problem.surrogate(),
        &fixed_point.y_hat,
    )?;

    let a = data.a.clone();
    let z = DVector::from_column_slice(&data.z);
    let objective: ObjectiveFn = Arc::new(move |x: &[f64]| {
        let r = &a * DVector::from_column_slice(x) - &z;
        0.5 * alpha * vecops::dot(x, x) + r.norm_squared() / (2.0 * beta)
    });

    let scenario = Scenario {
        name: "quadratic",
        x0: vec![0.0; n],
        y0: vec![0.0; m],
        plan_hint: PlanHint::Thm32 { kappa },
        references: vec![
            Reference {
                label: "fixed_point".into(),
                x: fixed_point.x_hat.clone(),
                y: Some(fixed_point.y_hat.clone()),
            },
            Reference {
                label: "true_solution".into(),
                x: x_star.clone(),
                y: Some(y_star.clone()),
            },
        ],
        primal_objective: Some(objective),
        expected_behavior: ExpectedBehavior::ConvergesLinear,
        problem,
    };
    Ok(QuadraticScenario {
        scenario,
        data,
        x_star,
        y_star,
        fixed_point,
        norms,
        error_bound: bound,
        precondition,
    })
}

/// `min ‖x‖₁` written with `A = I`, `G ≡ 0`, `F* = I_{‖·‖∞ ≤ 1}`, solved
/// with the surrogate `V = −α_mm I`. From a positive start the primal
/// iterates grow without bound although `0` is the unique solution.
pub fn build_l1_counterexample(
    n: usize,
    alpha_mm: f64,
    tau: f64,
    sigma: f64,
    x0: Vec<f64>,
    y0: Vec<f64>,
) -> Result<Scenario, ScenarioError> {
    if n == 0 {
        return Err(invalid("n must be ≥ 1"));
    }
    if !(alpha_mm > 0.0 && tau > 0.0 && sigma > 0.0) {
        return Err(invalid("alpha_mm, tau and sigma must be positive"));
    }
    if x0.len() != n || y0.len() != n {
        return Err(invalid(format!("initial point must have {n} entries")));
    }
    if !x0.iter().chain(&y0).all(|v| *v > 0.0) {
        return Err(invalid("initial point must be componentwise positive"));
    }
    let a: SharedMap = Arc::new(DenseMap::identity(n));
    let v: SharedMap = Arc::new(DenseMap::new(DMatrix::identity(n, n) * -alpha_mm));
    let problem = SaddleProblem::new(
        Arc::new(prox_zero(n)),
        Arc::new(prox_box_indicator(1.0, n)?),
        a,
        v,
    )?;
    Ok(Scenario {
        name: "counterexample",
        problem,
        x0,
        y0,
        plan_hint: PlanHint::Manual {
            plan: StepPlan::manual(tau, sigma, 1.0),
        },
        references: vec![Reference {
            label: "saddle_point".into(),
            x: vec![0.0; n],
            y: Some(vec![0.0; n]),
        }],
        primal_objective: Some(Arc::new(|x: &[f64]| x.iter().map(|v| v.abs()).sum())),
        expected_behavior: ExpectedBehavior::DivergesMonotone,
    })
}

/// `min_x (⟨(1, 1), x⟩ − z)²/2` with the surrogate `V = (1, −1)`, run with
/// accelerated stepsizes from `x⁰ = 0`, `y⁰ = −z`. The dual stays at `−z`
/// and `x^n = (Σ_{i<n} τ_i)·z·(1, −1)`, which is unbounded when `z ≠ 0`.
pub fn build_divergence_example(z: f64, tau0: f64, sigma0: f64) -> Result<Scenario, ScenarioError> {
    if !(tau0 > 0.0 && sigma0 > 0.0) {
        return Err(invalid("tau0 and sigma0 must be positive"));
    }
    if tau0 * sigma0 >= 0.5 {
        return Err(invalid(format!(
            "stepsizes must satisfy τ₀σ₀ < 1/‖A‖² = 1/2, got {}",
            tau0 * sigma0
        )));
    }
    if !z.is_finite() {
        return Err(invalid("z must be finite"));
    }
    let a: SharedMap = Arc::new(DenseMap::from_row_slice(1, 2, &[1.0, 1.0]));
    let v: SharedMap = Arc::new(DenseMap::from_row_slice(1, 2, &[1.0, -1.0]));
    let problem = SaddleProblem::new(
        Arc::new(prox_zero(2)),
        Arc::new(prox_quadratic_dual(1.0, vec![z])?),
        a,
        v,
    )?;
    Ok(Scenario {
        name: "divergence",
        problem,
        x0: vec![0.0, 0.0],
        y0: vec![-z],
        plan_hint: PlanHint::Accelerated {
            tau0,
            sigma0,
            gamma: 1.0,
        },
        references: Vec::new(),
        primal_objective: Some(Arc::new(move |x: &[f64]| 0.5 * (x[0] + x[1] - z).powi(2))),
        expected_behavior: ExpectedBehavior::DivergesUnbounded,
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct CtParams {
    pub height: usize,
    pub width: usize,
    pub n_angles: usize,
    pub n_bins: usize,
    pub lambda0: f64,
    pub lambda1: f64,
    pub lambda2: f64,
    pub eps: f64,
    pub noise_rel: f64,
    pub kappa: f64,
    pub seed: u64,
    /// Build even when the precondition fails.
    pub allow_infeasible: bool,
}

impl Default for CtParams {
    fn default() -> Self {
        Self {
            height: 64,
            width: 64,
            n_angles: 20,
            n_bins: 90,
            lambda0: 1.0,
            lambda1: 1.2,
            lambda2: 0.01,
            eps: 0.01,
            noise_rel: 0.15,
            kappa: 0.01,
            seed: 0,
            allow_infeasible: false,
        }
    }
}

/// Measured operator norms of the CT problem.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct CtNorms {
    pub norm_a: f64,
    pub norm_v: f64,
    pub norm_amv: f64,
}

pub struct CtScenario {
    /// Forward `A = (R_strip; ∇)`, surrogate `V = (R_line; ∇)`.
    pub mismatched: Scenario,
    /// The same problem with the exact adjoint `Aᵀ`.
    pub matched: Scenario,
    pub geometry: SinogramGeometry,
    pub phantom: ImageGrid,
    pub clean_sinogram: Vec<f64>,
    pub sinogram: Vec<f64>,
    pub norms: CtNorms,
    pub precondition: PreconditionCheck,
    pub strip: SharedMap,
    pub line: SharedMap,
}

/// Huberized total variation `Σ_pixels h(|v|)` of a gradient field in
/// component-major layout, `h(r) = r²/(2ε)` for `r ≤ ελ₁` and
/// `λ₁r − ελ₁²/2` beyond; `ε = 0` gives `λ₁ Σ|v|`.
pub fn huber_tv(grad: &[f64], lambda1: f64, eps: f64) -> f64 {
    let np = grad.len() / 2;
    let (gv, gh) = grad.split_at(np);
    gv.iter()
        .zip(gh)
        .map(|(a, b)| {
            let r = a.hypot(*b);
            if r <= eps * lambda1 {
                r * r / (2.0 * eps)
            } else {
                lambda1 * r - 0.5 * eps * lambda1 * lambda1
            }
        })
        .sum()
}

/// TV-regularized reconstruction of the Shepp-Logan phantom from a noisy
/// parallel-beam sinogram:
///
/// `min_x (λ₀/2)‖Rx − z‖² + Σ h_{λ₁,ε}(|∇x|) + (λ₂/2)‖x‖²`
///
/// whose dual is `F*(q, p) = ‖q‖²/(2λ₀) + ⟨q, z⟩ + I_{|p| ≤ λ₁} + (ε/2)‖p‖²`.
/// The data are generated with the strip projector; the mismatched problem
/// backprojects with the line projector's transpose.
pub fn build_tv_ct(params: &CtParams) -> Result<CtScenario, ScenarioError> {
    let p = *params;
    if !(p.lambda0 > 0.0 && p.lambda1 > 0.0 && p.lambda2 > 0.0) {
        return Err(invalid("lambda0, lambda1 and lambda2 must be positive"));
    }
    if !(p.eps >= 0.0 && p.noise_rel >= 0.0) {
        return Err(invalid("eps and noise_rel must be nonnegative"));
    }
    let (m, n) = (p.height, p.width);
    let geometry = SinogramGeometry::covering(p.n_angles, p.n_bins, m, n);
    let strip: SharedMap = Arc::new(radon_strip(&geometry, m, n)?);
    let line: SharedMap = Arc::new(radon_line(&geometry, m, n)?);
    let grad: SharedMap = Arc::new(gradient_op(m, n));
    let phantom = shepp_logan(m, n);

    let clean_sinogram = strip.apply(&phantom.values);
    let mut rng = seeded_rng(p.seed);
    let noise = gaussian_vec(&mut rng, clean_sinogram.len());
    let scale = p.noise_rel * vecops::norm(&clean_sinogram) / vecops::norm(&noise);
    let sinogram: Vec<f64> = clean_sinogram
        .iter()
        .zip(&noise)
        .map(|(c, e)| c + scale * e)
        .collect();

    let a: SharedMap = Arc::new(StackedMap::new(vec![strip.clone(), grad.clone()]));
    let v: SharedMap = Arc::new(StackedMap::new(vec![line.clone(), grad.clone()]));
    let g = Arc::new(prox_scaled_sqnorm(p.lambda2, m * n)?);
    let fstar = Arc::new(prox_ct_dual_block(
        p.lambda0,
        sinogram.clone(),
        geometry.sinogram_len(),
        p.lambda1,
        p.eps,
        m,
        n,
    )?);
    let mismatched_problem = SaddleProblem::new(g.clone(), fstar.clone(), a.clone(), v.clone())?;
    let matched_problem = SaddleProblem::matched(g, fstar, a.clone())?;

    let norms = CtNorms {
        norm_a: estimate_operator_norm(&*a, 1e-10, 50_000, p.seed).value,
        norm_v: estimate_operator_norm(&*v, 1e-10, 50_000, p.seed).value,
        norm_amv: estimate_operator_norm(
            &DifferenceMap::new(strip.clone(), line.clone()),
            1e-10,
            50_000,
            p.seed,
        )
        .value,
    };
    let precondition = PreconditionCheck::new(mismatched_problem.conv(), norms.norm_amv);
    if !p.allow_infeasible {
        precondition.into_result()?;
    }

    let objective: ObjectiveFn = {
        let (strip, grad, z) = (strip.clone(), grad.clone(), sinogram.clone());
        Arc::new(move |x: &[f64]| {
            let rx = strip.apply(x);
            let data = rx
                .iter()
                .zip(&z)
                .map(|(r, z)| (r - z) * (r - z))
                .sum::<f64>();
            0.5 * p.lambda0 * data
                + huber_tv(&grad.apply(x), p.lambda1, p.eps)
                + 0.5 * p.lambda2 * vecops::dot(x, x)
        })
    };
    let reference = Reference {
        label: "phantom".into(),
        x: phantom.values.clone(),
        y: None,
    };
    let x0 = vec![0.0; m * n];
    let y0 = vec![0.0; mismatched_problem.dual_dim()];
    let mismatched = Scenario {
        name: "ct_mismatched",
        problem: mismatched_problem,
        x0: x0.clone(),
        y0: y0.clone(),
        plan_hint: PlanHint::Classical { kappa: p.kappa },
        references: vec![reference.clone()],
        primal_objective: Some(objective.clone()),
        expected_behavior: ExpectedBehavior::ConvergesLinear,
    };
    let matched = Scenario {
        name: "ct_matched",
        problem: matched_problem,
        x0,
        y0,
        plan_hint: PlanHint::Classical { kappa: p.kappa },
        references: vec![reference],
        primal_objective: Some(objective),
        expected_behavior: ExpectedBehavior::ConvergesLinear,
    };
    Ok(CtScenario {
        mismatched,
        matched,
        geometry,
        phantom,
        clean_sinogram,
        sinogram,
        norms,
        precondition,
        strip,
        line,
    })
}
