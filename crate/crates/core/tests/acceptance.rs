//! End-to-end acceptance checks. Each test prints one `PASS`/`FAIL` line
//! and then asserts.

use std::sync::Arc;
use std::time::{Duration, Instant};

use nalgebra::{DMatrix, Matrix2};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use pdmm_core::analysis::{
    estimate_linear_rate, quadratic_mismatched_fixed_point, verify_theorem11_on_random,
    QuadraticProblem,
};
use pdmm_core::operators::{
    adjointness_defect, estimate_operator_norm, to_dense, DenseMap, DifferenceMap, LinearMap,
    StackedMap,
};
use pdmm_core::problems::{
    build_divergence_example, build_l1_counterexample, build_quadratic, build_tv_ct, gradient_op,
    radon_line, radon_strip, CtParams, QuadraticParams, SinogramGeometry,
};
use pdmm_core::prox::{
    prox_box_indicator, prox_ct_dual_block, prox_huber_tv_dual, prox_quadratic_dual,
    prox_scaled_sqnorm, prox_zero, Prox,
};
use pdmm_core::solver::{
    solve, step_accelerated, step_mismatched, AccelState, IterateState, SolveOptions, Termination,
};
use pdmm_core::stepsize::{
    check_q_psd, cor33_kappa_bounds, plan_classical, plan_cor33, plan_thm32, verify_certificate,
    ConvexityData, NormData, PlanError,
};

fn report(id: u32, name: &str, ok: bool, elapsed: Duration, limit: Duration, detail: &str) {
    let within = elapsed <= limit;
    let verdict = if ok && within { "PASS" } else { "FAIL" };
    println!(
        "[{verdict}] criterion {id:>2} {name}: {detail} ({:.2}s, limit {}s)",
        elapsed.as_secs_f64(),
        limit.as_secs()
    );
    assert!(ok, "criterion {id} failed: {detail}");
    assert!(within, "criterion {id} exceeded its runtime bound");
}

fn dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(x, y)| (x - y).powi(2))
        .sum::<f64>()
        .sqrt()
}

fn norm(a: &[f64]) -> f64 {
    a.iter().map(|x| x * x).sum::<f64>().sqrt()
}

#[test]
fn criterion_01_scalar_fixed_point() {
    let start = Instant::now();
    let prob = QuadraticProblem::new(
        DMatrix::from_element(1, 1, 1.0),
        DMatrix::from_element(1, 1, 0.5),
        vec![2.0],
        1.0,
        1.0,
    )
    .unwrap();
    // Oracle: x̂ = v(αβ + av)⁻¹z, ŷ = −α(αβ + av)⁻¹z.
    let (x_or, y_or) = (0.5 / 1.5 * 2.0, -2.0 / 1.5);
    let fp = quadratic_mismatched_fixed_point(&prob).unwrap();
    let closed_ok = (fp.x_hat[0] - 2.0 / 3.0).abs() < 1e-15
        && (fp.y_hat[0] + 4.0 / 3.0).abs() < 1e-15
        && (fp.x_hat[0] - x_or).abs() < 1e-15
        && (fp.y_hat[0] - y_or).abs() < 1e-15;

    let saddle = prob.saddle_problem();
    let plan = plan_thm32(saddle.conv(), 0.5, NormData::new(0.5, 0.5)).unwrap();
    let mut state = IterateState::new(vec![0.0], vec![0.0]);
    let mut hit = None;
    for k in 1..=2000 {
        state = step_mismatched(&state, &plan, &saddle).unwrap();
        let d = (state.x[0] - x_or).hypot(state.y[0] - y_or);
        if d <= 1e-8 {
            hit = Some(k);
            break;
        }
    }
    let ok = closed_ok && hit.is_some();
    report(
        1,
        "scalar closed-form fixed point",
        ok,
        start.elapsed(),
        Duration::from_secs(1),
        &format!(
            "x̂ = {:.15}, ŷ = {:.15}, within 1e-8 after {:?} iterations",
            fp.x_hat[0], fp.y_hat[0], hit
        ),
    );
}

#[test]
fn criterion_02_quadratic_rate_and_error_bound() {
    let start = Instant::now();
    let q = build_quadratic(&QuadraticParams::default()).unwrap();
    let plan = plan_thm32(q.scenario.conv(), 0.01, q.norms).unwrap();
    let mut opts = SolveOptions::new(100_000, 1e-15);
    opts.references = q.scenario.references.clone();
    let trace = solve(
        &q.scenario.problem,
        &plan,
        q.scenario.x0.clone(),
        q.scenario.y0.clone(),
        &opts,
    )
    .unwrap();
    let rate = estimate_linear_rate(&trace, 0, 0.5, plan.omega).unwrap();
    let rate_ok =
        rate.r_squared >= 0.99 && rate.empirical_log_rate <= rate.theoretical_log_rate + 1e-3;

    let final_err = trace.last().unwrap().ref_dists[1].primal;
    // Oracle for the bound: dense ‖(V − A)ᵀŷ‖/γ_G.
    let yv = nalgebra::DVector::from_column_slice(&q.fixed_point.y_hat);
    let bound_oracle = ((&q.data.v - &q.data.a).transpose() * yv).norm() / q.data.alpha;
    let bound_ok = (bound_oracle - q.error_bound).abs() <= 1e-12 * bound_oracle;
    let thm_ok = final_err <= q.error_bound * (1.0 + 1e-10);
    report(
        2,
        "quadratic rate and error bound",
        rate_ok && bound_ok && thm_ok,
        start.elapsed(),
        Duration::from_secs(30),
        &format!(
            "slope {:.4} vs log ω {:.4}, R² {:.5}; ‖x−x*‖ {:.6e} ≤ bound {:.6e}",
            rate.empirical_log_rate,
            rate.theoretical_log_rate,
            rate.r_squared,
            final_err,
            q.error_bound
        ),
    );
}

#[test]
fn criterion_03_theorem11_suite() {
    let start = Instant::now();
    let r = verify_theorem11_on_random(20, 10, 0.15, 1.0, 0.05, 100, 2024).unwrap();
    let checked = r.instances.len();
    report(
        3,
        "fixed-point error bound on random instances",
        r.holds && r.violations == 0 && checked + r.skipped.len() == 100,
        start.elapsed(),
        Duration::from_secs(10),
        &format!(
            "{checked} instances checked, {} skipped, {} violations",
            r.skipped.len(),
            r.violations
        ),
    );
}

#[test]
fn criterion_04_l1_counterexample() {
    let start = Instant::now();
    let (n, alpha_mm, tau, sigma) = (5, 1.0, 0.5, 0.5);
    let sc = build_l1_counterexample(n, alpha_mm, tau, sigma, vec![1.0; n], vec![1.0; n]).unwrap();
    let plan = pdmm_core::StepPlan::manual(tau, sigma, 1.0);
    let mut state = IterateState::new(sc.x0.clone(), sc.y0.clone());
    let mut increasing = true;
    let mut saturated_steps = 0;
    let mut increment_ok = true;
    for _ in 0..1000 {
        let saturated = state.y.iter().all(|v| *v == 1.0);
        let next = step_mismatched(&state, &plan, &sc.problem).unwrap();
        for k in 0..n {
            let inc = next.x[k] - state.x[k];
            increasing &= inc > 0.0;
            if saturated {
                increment_ok &= (inc - alpha_mm * tau).abs() <= 1e-12;
            }
        }
        if saturated {
            saturated_steps += 1;
        }
        state = next;
    }
    report(
        4,
        "ℓ¹ counterexample diverges monotonically",
        increasing && increment_ok && saturated_steps > 900,
        start.elapsed(),
        Duration::from_secs(1),
        &format!(
            "strictly increasing: {increasing}; {saturated_steps} saturated steps with increment α·τ: {increment_ok}; x[0] = {}",
            state.x[0]
        ),
    );
}

#[test]
fn criterion_05_accelerated_divergence() {
    let start = Instant::now();
    let (z, tau0, sigma0) = (1.0, 0.5, 0.9);
    let sc = build_divergence_example(z, tau0, sigma0).unwrap();
    let mut state = AccelState::new(sc.x0.clone(), sc.y0.clone(), tau0, sigma0, 1.0);
    let mut y_pinned = true;
    let mut tau_ok = true;
    let mut growing = true;
    let mut prev_norm = norm(&state.x);
    let mut norm_at_100 = 0.0;
    for i in 1..=10_000usize {
        // τ_i is the stepsize used in step i + 1.
        tau_ok &= state.tau >= 1.0 / ((i - 1) as f64 + 1.0 / tau0);
        state = step_accelerated(&state, &sc.problem).unwrap();
        y_pinned &= (state.y[0] + z).abs() <= 1e-12;
        let nx = norm(&state.x);
        growing &= nx > prev_norm;
        prev_norm = nx;
        if i == 100 {
            norm_at_100 = nx;
        }
    }
    let ratio = prev_norm / norm_at_100;
    report(
        5,
        "accelerated divergence with pinned dual",
        y_pinned && tau_ok && growing && ratio > 1.5,
        start.elapsed(),
        Duration::from_secs(5),
        &format!("y ≡ −z: {y_pinned}; τ_i ≥ 1/(i+1/τ₀): {tau_ok}; ‖x‖ increasing: {growing}; ‖x¹⁰⁰⁰⁰‖/‖x¹⁰⁰‖ = {ratio:.4}"),
    );
}

#[test]
fn criterion_06_zero_mismatch_reduction() {
    let start = Instant::now();
    let q = build_quadratic(&QuadraticParams {
        mismatch_scale: 0.0,
        ..QuadraticParams::default()
    })
    .unwrap();
    let prob = &q.scenario.problem;
    let same_object = prob.is_matched();
    let norm_a = estimate_operator_norm(&**prob.forward(), 1e-13, 100_000, 1).value;
    let plan = plan_classical(prob.conv(), 0.01, norm_a).unwrap();

    // Classical iteration written out with the exact adjoint.
    let a = prob.forward().clone();
    let (g, f) = (prob.prox_g().clone(), prob.prox_fstar().clone());
    let (mut x, mut y) = (q.scenario.x0.clone(), q.scenario.y0.clone());
    let mut state = IterateState::new(x.clone(), y.clone());
    let mut identical = true;
    for _ in 0..500 {
        let aty = a.apply_transpose(&y);
        let p: Vec<f64> = x
            .iter()
            .zip(&aty)
            .map(|(xi, v)| xi - plan.tau * v)
            .collect();
        let xn = g.prox(&p, plan.tau);
        let xbar: Vec<f64> = xn
            .iter()
            .zip(&x)
            .map(|(n, o)| n + plan.omega * (n - o))
            .collect();
        let ax = a.apply(&xbar);
        let d: Vec<f64> = y
            .iter()
            .zip(&ax)
            .map(|(yi, v)| yi + plan.sigma * v)
            .collect();
        y = f.prox(&d, plan.sigma);
        x = xn;
        state = step_mismatched(&state, &plan, prob).unwrap();
        identical &= state.x == x && state.y == y;
    }
    let trace = solve(
        prob,
        &plan,
        q.scenario.x0.clone(),
        q.scenario.y0.clone(),
        &SolveOptions::new(500, 1e-300),
    )
    .unwrap();
    let solve_identical = trace.final_state.x == x && trace.final_state.y == y;
    report(
        6,
        "zero mismatch reproduces the classical iteration",
        same_object && identical && solve_identical,
        start.elapsed(),
        Duration::from_secs(30),
        &format!("surrogate is forward object: {same_object}; 500 iterates bit-identical: {identical}; solve final state identical: {solve_identical}"),
    );
}

/// Log-uniform sample in `[lo, hi]`.
fn log_uniform(rng: &mut ChaCha8Rng, lo: f64, hi: f64) -> f64 {
    (lo.ln() + rng.random::<f64>() * (hi.ln() - lo.ln())).exp()
}

#[test]
fn criterion_07_certificate_fuzzing() {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let mut passed = 0;
    let mut failures = Vec::new();
    for k in 0..50 {
        let conv = ConvexityData::new(
            log_uniform(&mut rng, 0.05, 20.0),
            log_uniform(&mut rng, 0.05, 20.0),
        );
        let limit = (conv.gamma_g * conv.gamma_fstar / 2.0).sqrt();
        let norms = NormData::new(
            log_uniform(&mut rng, 0.2, 10.0),
            limit * rng.random_range(0.02..0.98),
        );
        let kmax = cor33_kappa_bounds(&conv, &norms)
            .iter()
            .map(|b| b.1)
            .fold(f64::INFINITY, f64::min);
        let kappa = kmax * rng.random_range(0.05..1.0);
        let mut ok = true;
        for plan in [
            plan_thm32(conv, kappa, norms),
            plan_cor33(conv, kappa, norms),
        ] {
            match plan {
                Ok(p) => ok &= verify_certificate(&p, &norms, &conv, 1000).passed(),
                Err(e) => {
                    ok = false;
                    failures.push(format!("tuple {k}: {e}"));
                }
            }
        }
        if ok {
            passed += 1;
        } else {
            failures.push(format!("tuple {k}: certificate failed"));
        }
    }
    let mut rejected = 0;
    for _ in 0..50 {
        let conv = ConvexityData::new(
            log_uniform(&mut rng, 0.05, 20.0),
            log_uniform(&mut rng, 0.05, 20.0),
        );
        let limit = (conv.gamma_g * conv.gamma_fstar / 2.0).sqrt();
        let norms = NormData::new(
            log_uniform(&mut rng, 0.2, 10.0),
            limit * rng.random_range(1.0..3.0),
        );
        let kappa = rng.random_range(0.01..0.99);
        let both = [
            plan_thm32(conv, kappa, norms),
            plan_cor33(conv, kappa, norms),
        ];
        if both
            .iter()
            .all(|r| matches!(r, Err(PlanError::PreconditionViolated { .. })))
        {
            rejected += 1;
        }
    }
    report(
        7,
        "certificate fuzzing",
        passed == 50 && rejected == 50,
        start.elapsed(),
        Duration::from_secs(30),
        &format!("{passed}/50 feasible tuples certified, {rejected}/50 infeasible tuples rejected {failures:?}"),
    );
}

#[test]
fn criterion_08_q_matrix_obstruction() {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let mut agree = 0;
    for k in 0..20 {
        let conv = ConvexityData::new(
            log_uniform(&mut rng, 0.1, 10.0),
            log_uniform(&mut rng, 0.1, 10.0),
        );
        let norms = NormData::new(
            log_uniform(&mut rng, 0.2, 5.0),
            log_uniform(&mut rng, 0.01, 2.0),
        );
        let (eta_i, eta_ip1) = (
            log_uniform(&mut rng, 0.1, 10.0),
            log_uniform(&mut rng, 0.1, 10.0),
        );
        let (phi, psi) = (
            log_uniform(&mut rng, 0.1, 10.0),
            log_uniform(&mut rng, 0.1, 10.0),
        );
        // Alternate which modulus is fully consumed; the other keeps slack.
        let (mu_g, mu_f) = if k % 2 == 0 {
            (conv.gamma_g, 0.5 * conv.gamma_fstar)
        } else {
            (0.5 * conv.gamma_g, conv.gamma_fstar)
        };
        let check = check_q_psd(&conv, mu_g, mu_f, &norms, eta_i, eta_ip1, phi, psi);

        // Oracle: Q assembled independently; a 2×2 principal minor with a zero
        // diagonal entry and nonzero coupling has negative determinant, and a
        // dense eigensolver confirms a negative eigenvalue.
        let m = norms.norm_amv;
        let q = DMatrix::from_row_slice(
            4,
            4,
            &[
                eta_i * (conv.gamma_g - mu_g),
                -0.5 * eta_ip1 * m,
                0.0,
                0.0,
                -0.5 * eta_ip1 * m,
                eta_ip1 * (conv.gamma_fstar - mu_f),
                -0.5 * eta_i * m,
                0.0,
                0.0,
                -0.5 * eta_i * m,
                phi,
                -eta_i * norms.norm_v,
                0.0,
                0.0,
                -eta_i * norms.norm_v,
                psi,
            ],
        );
        let minor = Matrix2::new(q[(0, 0)], q[(0, 1)], q[(1, 0)], q[(1, 1)]);
        let min_eig = q.clone().symmetric_eigen().eigenvalues.min();
        let oracle_not_psd = minor.determinant() < 0.0 && min_eig < 0.0;
        if oracle_not_psd
            && !check.is_psd
            && (check.min_eigenvalue - min_eig).abs() <= 1e-9 * q.amax().max(1.0)
        {
            agree += 1;
        }
    }
    report(
        8,
        "Q-matrix obstruction",
        agree == 20,
        start.elapsed(),
        Duration::from_secs(10),
        &format!(
            "{agree}/20 configurations reported not PSD, in agreement with the dense eigensolver"
        ),
    );
}

#[test]
fn criterion_09_ct_desk_scale() {
    let start = Instant::now();
    let mut lines = Vec::new();
    let mut ok = true;

    let geom = SinogramGeometry::covering(20, 90, 64, 64);
    let strip = radon_strip(&geom, 64, 64).unwrap();
    let line = radon_line(&geom, 64, 64).unwrap();
    let cross = pdmm_core::operators::FnMap::new(
        strip.rows(),
        strip.cols(),
        {
            let s = strip.clone();
            move |x, out| s.apply_into(x, out)
        },
        {
            let l = line.clone();
            move |y, out| l.apply_transpose_into(y, out)
        },
    );
    let own = adjointness_defect(&strip, 20, 1).max(adjointness_defect(&line, 20, 1));
    let cross_defect = adjointness_defect(&cross, 20, 1);
    ok &= cross_defect > 1e-6 && own <= 1e-10;
    lines.push(format!(
        "(a) cross defect {cross_defect:.3e}, own defect {own:.3e}"
    ));

    for lambda1 in [0.6, 1.2, 2.4] {
        let ct = build_tv_ct(&CtParams {
            lambda1,
            allow_infeasible: true,
            ..CtParams::default()
        })
        .unwrap();
        lines.push(format!(
            "λ₁={lambda1}: (b) γ_Gγ_F* = {:.3e} vs 2‖A−V‖² = {:.3e}, satisfied {}",
            ct.precondition.product, ct.precondition.required, ct.precondition.satisfied
        ));

        let mm = &ct.mismatched;
        let plan_mm = plan_classical(mm.conv(), 0.01, ct.norms.norm_v).unwrap();
        let stop = solve(
            &mm.problem,
            &plan_mm,
            mm.x0.clone(),
            mm.y0.clone(),
            &SolveOptions::new(5000, 1e-4),
        )
        .unwrap();
        let c_ok = stop.termination == Termination::Converged;
        ok &= c_ok;

        let objective = mm.primal_objective.clone().unwrap();
        let long = SolveOptions::new(5000, 1e-14).with_objective(objective);
        let mm_run = solve(&mm.problem, &plan_mm, mm.x0.clone(), mm.y0.clone(), &long).unwrap();
        let mt = &ct.matched;
        let plan_m = plan_classical(mt.conv(), 0.01, ct.norms.norm_a).unwrap();
        let m_run = solve(&mt.problem, &plan_m, mt.x0.clone(), mt.y0.clone(), &long).unwrap();
        let f_mm = mm_run.last().unwrap().objective.unwrap();
        let f_m = m_run.last().unwrap().objective.unwrap();
        let d_ok = f_m <= f_mm;

        let objs: Vec<f64> = m_run.records.iter().map(|r| r.objective.unwrap()).collect();
        let tail = &objs[objs.len() / 2..];
        let worst = tail
            .windows(2)
            .map(|w| w[1] - w[0])
            .fold(f64::NEG_INFINITY, f64::max);
        let e_ok = worst <= 1e-8;
        ok &= d_ok && e_ok;
        lines.push(format!(
            "λ₁={lambda1}: (c) residual < 1e-4 after {} iterations ({}); (d) F(matched) {f_m:.6} ≤ F(mismatched) {f_mm:.6}: {d_ok}; (e) max tail increase {worst:.3e}",
            stop.iterations(),
            stop.termination.as_str()
        ));
    }
    report(
        9,
        "CT desk scale",
        ok,
        start.elapsed(),
        Duration::from_secs(300),
        &lines.join("; "),
    );
}

/// Largest ratio `‖prox(a) − prox(b)‖ / (‖a − b‖/(1 + tγ))` over random pairs.
fn contraction_ratio(p: &dyn Prox, rng: &mut ChaCha8Rng, scale: f64) -> f64 {
    let mut worst: f64 = 0.0;
    for _ in 0..50 {
        let a: Vec<f64> = (0..p.dim())
            .map(|_| scale * rng.random_range(-1.0..1.0))
            .collect();
        let b: Vec<f64> = (0..p.dim())
            .map(|_| scale * rng.random_range(-1.0..1.0))
            .collect();
        let t = log_uniform(rng, 0.01, 100.0);
        let bound = dist(&a, &b) / (1.0 + t * p.strong_convexity());
        worst = worst.max(dist(&p.prox(&a, t), &p.prox(&b, t)) / bound);
    }
    worst
}

#[test]
fn criterion_10_operator_and_prox_invariants() {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(10);
    let mut details = Vec::new();

    let grad = gradient_op(24, 17);
    let geom = SinogramGeometry::covering(9, 40, 24, 17);
    let dense = DenseMap::new(DMatrix::from_fn(13, 9, |i, j| {
        ((i * 5 + j * 7) % 11) as f64 - 5.0
    }));
    let stacked = StackedMap::new(vec![
        Arc::new(radon_strip(&geom, 24, 17).unwrap()),
        Arc::new(grad),
    ]);
    let defects = [
        adjointness_defect(&grad, 50, 1),
        adjointness_defect(&radon_line(&geom, 24, 17).unwrap(), 50, 2),
        adjointness_defect(&radon_strip(&geom, 24, 17).unwrap(), 50, 3),
        adjointness_defect(&dense, 50, 4),
        adjointness_defect(&stacked, 50, 5),
    ];
    let adj_ok = defects.iter().all(|d| *d <= 1e-12);
    details.push(format!(
        "max adjointness defect {:.2e}",
        defects.iter().fold(0.0_f64, |a, b| a.max(*b))
    ));

    let proxes: Vec<Box<dyn Prox>> = vec![
        Box::new(prox_scaled_sqnorm(0.7, 6).unwrap()),
        Box::new(prox_quadratic_dual(2.0, vec![0.5, -1.0, 2.0]).unwrap()),
        Box::new(prox_zero(4)),
        Box::new(prox_box_indicator(1.5, 5).unwrap()),
        Box::new(prox_huber_tv_dual(1.2, 0.01, 3, 4).unwrap()),
        Box::new(prox_ct_dual_block(1.0, vec![1.0, 2.0, 3.0], 3, 0.6, 0.05, 2, 2).unwrap()),
    ];
    let ratios: Vec<f64> = proxes
        .iter()
        .map(|p| contraction_ratio(p.as_ref(), &mut rng, 3.0))
        .collect();
    let prox_ok = ratios.iter().all(|r| *r <= 1.0 + 1e-12);
    details.push(format!(
        "worst prox contraction ratio {:.6}",
        ratios.iter().fold(0.0_f64, |a, b| a.max(*b))
    ));

    let mut grad_norm: f64 = 0.0;
    for (m, n) in [(2, 2), (5, 9), (32, 32), (64, 64)] {
        grad_norm =
            grad_norm.max(estimate_operator_norm(&gradient_op(m, n), 1e-12, 100_000, 3).value);
    }
    let grad_ok = grad_norm <= 8f64.sqrt();
    details.push(format!("max ‖∇‖ {grad_norm:.6} ≤ √8"));

    let mut worst_rel: f64 = 0.0;
    for k in 0..10 {
        let (r, c) = (rng.random_range(2..40), rng.random_range(2..40));
        let m = DMatrix::from_fn(r, c, |_, _| rng.random_range(-1.0..1.0));
        let svd = m.clone().svd(false, false).singular_values.max();
        let est = estimate_operator_norm(&DenseMap::new(m), 1e-14, 200_000, k).value;
        worst_rel = worst_rel.max((est - svd).abs() / svd);
    }
    let diff = DifferenceMap::new(
        DenseMap::new(DMatrix::from_fn(8, 6, |i, j| (i as f64 - j as f64).sin())),
        DenseMap::new(DMatrix::from_fn(8, 6, |i, j| (i as f64 + j as f64).cos())),
    );
    let svd = to_dense(&diff).svd(false, false).singular_values.max();
    worst_rel =
        worst_rel.max((estimate_operator_norm(&diff, 1e-14, 200_000, 99).value - svd).abs() / svd);
    let power_ok = worst_rel <= 1e-6;
    details.push(format!(
        "power method vs SVD max relative error {worst_rel:.2e}"
    ));

    report(
        10,
        "operator and prox invariants",
        adj_ok && prox_ok && grad_ok && power_ok,
        start.elapsed(),
        Duration::from_secs(30),
        &details.join("; "),
    );
}
