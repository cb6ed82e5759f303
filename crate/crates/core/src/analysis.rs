//! Closed forms for the quadratic testbed
//! `min_x (α/2)‖x‖² + (1/(2β))‖Ax − z‖²`, the fixed-point error bound and
//! empirical rate fits.
//!
//! With `V` in place of `Aᵀ` the iteration converges to
//! `x̂ = Vᵀ(αβI + AVᵀ)⁻¹z`, `ŷ = −α(αβI + AVᵀ)⁻¹z`, while the true
//! minimizer is `x* = Aᵀ(αβI + AAᵀ)⁻¹z`. The two are related by
//! `‖x* − x̂‖ ≤ ‖(V − A)ᵀŷ‖/γ_G`.

use std::sync::Arc;

use nalgebra::{DMatrix, DVector};
use serde::Serialize;
use thiserror::Error;

use crate::operators::{estimate_operator_norm, DenseMap, DifferenceMap, LinearMap};
use crate::prox::{prox_quadratic_dual, prox_scaled_sqnorm};
use crate::solver::{step_mismatched, IterateState, RunTrace, SaddleProblem};
use crate::stepsize::StepPlan;
use crate::vecops::{self, gaussian_vec, seeded_rng};

#[derive(Debug, Error, PartialEq)]
pub enum AnalysisError {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("linear solve failed: {0}")]
    SolveFailed(String),
    #[error("αβI + AVᵀ is numerically singular")]
    SingularSystem,
    #[error("fixed-point residual {residual:e} exceeds tolerance")]
    FixedPointResidual { residual: f64 },
    #[error("need at least {needed} above-floor points, found {found}")]
    InsufficientData { needed: usize, found: usize },
}

/// Relative residual accepted for closed-form references.
const REF_TOL: f64 = 1e-9;

#[derive(Clone, Debug, PartialEq)]
pub struct QuadraticProblem {
    pub a: DMatrix<f64>,
    pub v: DMatrix<f64>,
    pub z: Vec<f64>,
    pub alpha: f64,
    pub beta: f64,
}

impl QuadraticProblem {
    pub fn new(
        a: DMatrix<f64>,
        v: DMatrix<f64>,
        z: Vec<f64>,
        alpha: f64,
        beta: f64,
    ) -> Result<Self, AnalysisError> {
        if !(alpha > 0.0 && beta > 0.0) {
            return Err(AnalysisError::InvalidParameter(format!(
                "alpha and beta must be positive, got {alpha}, {beta}"
            )));
        }
        if a.shape() != v.shape() {
            return Err(AnalysisError::InvalidParameter(format!(
                "A is {:?} but V is {:?}",
                a.shape(),
                v.shape()
            )));
        }
        if z.len() != a.nrows() {
            return Err(AnalysisError::InvalidParameter(format!(
                "z has {} entries, A has {} rows",
                z.len(),
                a.nrows()
            )));
        }
        Ok(Self {
            a,
            v,
            z,
            alpha,
            beta,
        })
    }

    /// `G = (α/2)‖·‖²`, `F* = (β/2)‖·‖² + ⟨·, z⟩`, forward `A`, surrogate `V`.
    /// When `A == V` entrywise the surrogate is the forward object itself.
    pub fn saddle_problem(&self) -> SaddleProblem {
        let n = self.a.ncols();
        let g = Arc::new(prox_scaled_sqnorm(self.alpha, n).expect("alpha validated"));
        let f = Arc::new(prox_quadratic_dual(self.beta, self.z.clone()).expect("beta validated"));
        let a: Arc<dyn LinearMap> = Arc::new(DenseMap::new(self.a.clone()));
        let prob = if self.a == self.v {
            SaddleProblem::matched(g, f, a)
        } else {
            SaddleProblem::new(g, f, a, Arc::new(DenseMap::new(self.v.clone())))
        };
        prob.expect("shapes validated")
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct FixedPointPair {
    pub x_hat: Vec<f64>,
    pub y_hat: Vec<f64>,
}

fn solve_dense(m: DMatrix<f64>, rhs: &[f64]) -> Option<DVector<f64>> {
    let scale = m.amax().max(1.0);
    let lu = m.lu();
    let u = lu.u();
    let min_pivot = u
        .diagonal()
        .iter()
        .fold(f64::INFINITY, |acc, d| acc.min(d.abs()));
    if !(min_pivot > 1e-13 * scale) {
        return None;
    }
    lu.solve(&DVector::from_column_slice(rhs))
}

/// `x* = Aᵀ(αβI + AAᵀ)⁻¹z`.
pub fn quadratic_true_solution(prob: &QuadraticProblem) -> Result<Vec<f64>, AnalysisError> {
    let m = prob.a.nrows();
    let ab = prob.alpha * prob.beta;
    let sys = DMatrix::identity(m, m) * ab + &prob.a * prob.a.transpose();
    let w = solve_dense(sys, &prob.z)
        .ok_or_else(|| AnalysisError::SolveFailed("αβI + AAᵀ is singular".into()))?;
    let x = prob.a.transpose() * w;

    // Normal equations: (αI + β⁻¹AᵀA)x = β⁻¹Aᵀz.
    let ax = &prob.a * &x;
    let resid_vec = &x * prob.alpha
        + prob.a.transpose() * (ax - DVector::from_column_slice(&prob.z)) / prob.beta;
    let scale =
        1.0 + prob.alpha * x.norm() + prob.a.transpose().norm() * vecops::norm(&prob.z) / prob.beta;
    if resid_vec.norm() > REF_TOL * scale {
        return Err(AnalysisError::SolveFailed(format!(
            "normal-equation residual {:e}",
            resid_vec.norm()
        )));
    }
    Ok(x.as_slice().to_vec())
}

/// Unique fixed point of the mismatched iteration on the quadratic problem.
///
/// The pair is checked by applying one mismatched step with `τ = σ = 1`,
/// `ω = 1`: the displacement must stay below `1e-9·(1 + ‖û‖)`.
pub fn quadratic_mismatched_fixed_point(
    prob: &QuadraticProblem,
) -> Result<FixedPointPair, AnalysisError> {
    let m = prob.a.nrows();
    let ab = prob.alpha * prob.beta;
    let sys = DMatrix::identity(m, m) * ab + &prob.a * prob.v.transpose();
    let w = solve_dense(sys, &prob.z).ok_or(AnalysisError::SingularSystem)?;
    let x_hat = (prob.v.transpose() * &w).as_slice().to_vec();
    let y_hat = (w * -prob.alpha).as_slice().to_vec();

    let saddle = prob.saddle_problem();
    let state = IterateState::new(x_hat.clone(), y_hat.clone());
    let next = step_mismatched(&state, &StepPlan::manual(1.0, 1.0, 1.0), &saddle)
        .map_err(|e| AnalysisError::SolveFailed(e.to_string()))?;
    let moved = vecops::dist(&next.x, &x_hat).hypot(vecops::dist(&next.y, &y_hat));
    let size = vecops::norm(&x_hat).hypot(vecops::norm(&y_hat));
    if moved > REF_TOL * (1.0 + size) {
        return Err(AnalysisError::FixedPointResidual { residual: moved });
    }
    Ok(FixedPointPair { x_hat, y_hat })
}

/// `‖(V − A)ᵀŷ‖ / γ_G`.
pub fn error_bound(
    gamma_g: f64,
    a: &dyn LinearMap,
    v: &dyn LinearMap,
    y_hat: &[f64],
) -> Result<f64, AnalysisError> {
    if !(gamma_g > 0.0) {
        return Err(AnalysisError::InvalidParameter(format!(
            "gamma_G must be positive, got {gamma_g}"
        )));
    }
    let diff = DifferenceMap::new(v, a);
    Ok(vecops::norm(&diff.apply_transpose(y_hat)) / gamma_g)
}

/// Distances at or below this value are treated as numerical floor.
pub const DISTANCE_FLOOR: f64 = 1e-13;

/// Minimum number of tail points for a rate fit.
pub const MIN_TAIL_POINTS: usize = 10;

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct RateEstimate {
    /// Fitted slope of `log‖u^i − û‖²` per iteration.
    pub empirical_log_rate: f64,
    pub r_squared: f64,
    /// `log ω`.
    pub theoretical_log_rate: f64,
    /// First iteration index used in the fit.
    pub tail_start: usize,
    pub n_points: usize,
}

/// Least-squares fit of `log‖u^i − û‖²` against `i`.
///
/// Uses the joint distance to reference `ref_index` (primal if the
/// reference has no dual part). Only the leading run of iterations with
/// distance above [`DISTANCE_FLOOR`] counts, and of those the final
/// `tail_fraction`.
pub fn estimate_linear_rate(
    trace: &RunTrace,
    ref_index: usize,
    tail_fraction: f64,
    omega: f64,
) -> Result<RateEstimate, AnalysisError> {
    if !(tail_fraction > 0.0 && tail_fraction <= 1.0) {
        return Err(AnalysisError::InvalidParameter(format!(
            "tail_fraction must lie in (0, 1], got {tail_fraction}"
        )));
    }
    if !(omega > 0.0 && omega <= 1.0) {
        return Err(AnalysisError::InvalidParameter(format!(
            "omega must lie in (0, 1], got {omega}"
        )));
    }
    let mut points = Vec::new();
    for r in &trace.records {
        let Some(d) = r.ref_dists.get(ref_index) else {
            return Err(AnalysisError::InvalidParameter(format!(
                "trace has no reference {ref_index}"
            )));
        };
        let dist = d.joint.unwrap_or(d.primal);
        if !(dist > DISTANCE_FLOOR) {
            break;
        }
        points.push((r.iter as f64, (dist * dist).ln()));
    }
    let keep = ((points.len() as f64) * tail_fraction).floor() as usize;
    if keep < MIN_TAIL_POINTS {
        return Err(AnalysisError::InsufficientData {
            needed: MIN_TAIL_POINTS,
            found: keep,
        });
    }
    let tail = &points[points.len() - keep..];
    let (slope, r_squared) = linear_fit(tail);
    Ok(RateEstimate {
        empirical_log_rate: slope,
        r_squared,
        theoretical_log_rate: omega.ln(),
        tail_start: tail[0].0 as usize,
        n_points: keep,
    })
}

/// Slope and coefficient of determination of an ordinary least-squares line.
fn linear_fit(points: &[(f64, f64)]) -> (f64, f64) {
    let n = points.len() as f64;
    let mx = points.iter().map(|p| p.0).sum::<f64>() / n;
    let my = points.iter().map(|p| p.1).sum::<f64>() / n;
    let sxx: f64 = points.iter().map(|p| (p.0 - mx).powi(2)).sum();
    let sxy: f64 = points.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let syy: f64 = points.iter().map(|p| (p.1 - my).powi(2)).sum();
    let slope = sxy / sxx;
    let r2 = if syy == 0.0 {
        1.0
    } else {
        (sxy * sxy / (sxx * syy)).clamp(0.0, 1.0)
    };
    (slope, r2)
}

/// Derives an independent seed for instance `index` of a seeded suite.
pub fn instance_seed(seed: u64, index: u64) -> u64 {
    // splitmix64 finalizer on the combined input
    let mut z = seed ^ index.wrapping_mul(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Seeded random quadratic instance: standard-normal `A` (optionally
/// rescaled to `‖A‖ = 1`), `E` standard normal rescaled to
/// `‖E‖ = mismatch_scale·‖A‖`, `V = A + E`, standard-normal `z`.
pub fn random_quadratic(
    n: usize,
    m: usize,
    alpha: f64,
    beta: f64,
    mismatch_scale: f64,
    unit_norm_a: bool,
    seed: u64,
) -> Result<QuadraticProblem, AnalysisError> {
    if n == 0 || m == 0 {
        return Err(AnalysisError::InvalidParameter(
            "n and m must be ≥ 1".into(),
        ));
    }
    if !(mismatch_scale >= 0.0 && mismatch_scale.is_finite()) {
        return Err(AnalysisError::InvalidParameter(format!(
            "mismatch_scale must be nonnegative, got {mismatch_scale}"
        )));
    }
    let mut rng = seeded_rng(seed);
    let mut a = DMatrix::from_row_slice(m, n, &gaussian_vec(&mut rng, m * n));
    let mut norm_a = estimate_operator_norm(&DenseMap::new(a.clone()), 1e-13, 100_000, seed).value;
    if unit_norm_a {
        a /= norm_a;
        norm_a = 1.0;
    }
    let e_raw = DMatrix::from_row_slice(m, n, &gaussian_vec(&mut rng, m * n));
    let z = gaussian_vec(&mut rng, m);
    let v = if mismatch_scale == 0.0 {
        a.clone()
    } else {
        let norm_e =
            estimate_operator_norm(&DenseMap::new(e_raw.clone()), 1e-13, 100_000, seed ^ 1).value;
        &a + e_raw * (mismatch_scale * norm_a / norm_e)
    };
    QuadraticProblem::new(a, v, z, alpha, beta)
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct InstanceResult {
    pub index: usize,
    pub seed: u64,
    pub actual_error: f64,
    pub bound: f64,
    pub holds: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Theorem11Report {
    pub instances: Vec<InstanceResult>,
    /// Instances skipped because `αβI + AVᵀ` was singular.
    pub skipped: Vec<usize>,
    pub violations: usize,
    pub holds: bool,
}

/// Checks `‖x* − x̂‖ ≤ ‖(V − A)ᵀŷ‖/α` on seeded random quadratic instances
/// with `1e-10` relative slack.
pub fn verify_theorem11_on_random(
    n: usize,
    m: usize,
    alpha: f64,
    beta: f64,
    mismatch_scale: f64,
    n_instances: usize,
    seed: u64,
) -> Result<Theorem11Report, AnalysisError> {
    if n_instances == 0 {
        return Err(AnalysisError::InvalidParameter(
            "n_instances must be ≥ 1".into(),
        ));
    }
    let mut instances = Vec::with_capacity(n_instances);
    let mut skipped = Vec::new();
    for k in 0..n_instances {
        let s = instance_seed(seed, k as u64);
        let prob = random_quadratic(n, m, alpha, beta, mismatch_scale, false, s)?;
        let x_star = quadratic_true_solution(&prob)?;
        let fp = match quadratic_mismatched_fixed_point(&prob) {
            Ok(fp) => fp,
            Err(AnalysisError::SingularSystem) => {
                skipped.push(k);
                continue;
            }
            Err(e) => return Err(e),
        };
        let actual_error = vecops::dist(&x_star, &fp.x_hat);
        let bound = error_bound(
            alpha,
            &DenseMap::new(prob.a.clone()),
            &DenseMap::new(prob.v.clone()),
            &fp.y_hat,
        )?;
        let holds = actual_error <= bound * (1.0 + 1e-10) + f64::MIN_POSITIVE;
        instances.push(InstanceResult {
            index: k,
            seed: s,
            actual_error,
            bound,
            holds,
        });
    }
    let violations = instances.iter().filter(|r| !r.holds).count();
    Ok(Theorem11Report {
        holds: violations == 0,
        instances,
        skipped,
        violations,
    })
}
