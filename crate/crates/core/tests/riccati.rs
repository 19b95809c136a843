use std::time::Instant;

use craftlearn::ddp::{
    backward_pass, ddp_optimize, forward_pass, lqr_oracle, DdpOptions, DdpTermination, GainSchedule,
};
use craftlearn::dynamics::{rollout, Control, CraftModel, CraftParams, LinearDynamics, Matrix, State, Vector};
use craftlearn::task::{stationary_reference, CostModel, CostWeights};
use proptest::prelude::*;

fn regulator(n: usize, q: Matrix, r: Matrix, q_f: Matrix, h: usize) -> CostModel {
    CostModel::new(q, r, q_f, vec![Vector::zeros(n); h + 1]).unwrap()
}

fn random_matrix(rows: usize, cols: usize, seed: &[f64]) -> Matrix {
    Matrix::from_fn(rows, cols, |i, j| seed[(i * cols + j) % seed.len()])
}

fn spd(n: usize, seed: &[f64], shift: f64) -> Matrix {
    let l = random_matrix(n, n, seed);
    &l * l.transpose() + Matrix::identity(n, n) * shift
}

/// Optimal LQR rollout from `x0` under the oracle gains.
fn oracle_rollout(a: &Matrix, b: &Matrix, gains: &[Matrix], x0: &Vector) -> (Vec<Vector>, Vec<Vector>) {
    let mut xs = vec![x0.clone()];
    let mut us = Vec::new();
    for k in gains {
        let u = -(k * xs.last().unwrap());
        let next = a * xs.last().unwrap() + b * &u;
        us.push(u);
        xs.push(next);
    }
    (xs, us)
}

#[test]
fn double_integrator_matches_riccati_solution() {
    let h = 50;
    let model = LinearDynamics::double_integrator(0.1);
    let eye2 = Matrix::identity(2, 2);
    let eye1 = Matrix::identity(1, 1);
    let cost = regulator(2, eye2.clone(), eye1.clone(), eye2.clone(), h);
    let lqr = lqr_oracle(model.a(), model.b(), &eye2, &eye1, &eye2, h).unwrap();
    let x0 = Vector::from_vec(vec![1.0, -0.5]);

    let start = Instant::now();
    let sol = ddp_optimize(&model, &cost, &vec![Vector::zeros(1); h], &x0, &DdpOptions::default()).unwrap();
    let elapsed = start.elapsed();

    let optimal = x0.dot(&(&lqr.p[0] * &x0));
    assert!((sol.cost() - optimal).abs() / optimal < 1e-6);
    let (_, us) = oracle_rollout(model.a(), model.b(), &lqr.gains, &x0);
    for (k, u) in us.iter().enumerate() {
        assert!((&sol.policy.nominal_controls[k] - u).amax() < 1e-6, "control {k}");
    }
    assert!(elapsed.as_secs_f64() < 1.0);
}

#[test]
fn already_optimal_input_converges_immediately() {
    let h = 30;
    let model = LinearDynamics::double_integrator(0.1);
    let eye2 = Matrix::identity(2, 2);
    let eye1 = Matrix::identity(1, 1);
    let cost = regulator(2, eye2.clone(), eye1.clone(), eye2.clone(), h);
    let lqr = lqr_oracle(model.a(), model.b(), &eye2, &eye1, &eye2, h).unwrap();
    let x0 = Vector::from_vec(vec![2.0, 0.3]);
    let (_, us) = oracle_rollout(model.a(), model.b(), &lqr.gains, &x0);
    let sol = ddp_optimize(&model, &cost, &us, &x0, &DdpOptions::default()).unwrap();
    assert_eq!(sol.termination, DdpTermination::Converged);
    assert!(sol.iterations <= 2, "took {} iterations", sol.iterations);
    for (new, old) in sol.policy.nominal_controls.iter().zip(&us) {
        assert!((new - old).amax() < 1e-8);
    }
}

#[test]
fn lqr_forward_pass_at_full_step_reaches_optimum() {
    let h = 25;
    let model = LinearDynamics::double_integrator(0.2);
    let q = Matrix::from_row_slice(2, 2, &[2.0, 0.3, 0.3, 1.0]);
    let r = Matrix::from_element(1, 1, 0.5);
    let q_f = Matrix::identity(2, 2) * 4.0;
    let cost = regulator(2, q.clone(), r.clone(), q_f.clone(), h);
    let x0 = Vector::from_vec(vec![-1.0, 2.0]);
    let nominal = rollout(&model, &vec![Vector::from_element(1, 0.7); h], &x0).unwrap();
    let bp = backward_pass(&model, &cost, &nominal, 0.0, false).unwrap();
    let (_, j) = forward_pass(&model, &cost, &nominal, &bp.gains, 1.0).unwrap();
    let lqr = lqr_oracle(model.a(), model.b(), &q, &r, &q_f, h).unwrap();
    let optimal = x0.dot(&(&lqr.p[0] * &x0));
    assert!((j - optimal).abs() / optimal < 1e-9);
}

#[test]
fn zero_gains_reproduce_nominal_exactly() {
    let params = CraftParams::default();
    let model = CraftModel::new(params, 0.05).unwrap();
    let s = State::new(0.0, 10.0, 0.1, 1.0, 0.0, 0.0);
    let reference = stationary_reference(&s, 40, 0.05);
    let cost = CostModel::for_craft(&reference, &CostWeights::default(), &params).unwrap();
    let tape: Vec<Vector> = (0..40)
        .map(|k| Control::new(9.0 + 0.01 * k as f64, 0.02).to_vector())
        .collect();
    let nominal = rollout(&model, &tape, &s.to_vector()).unwrap();
    let (traj, j) = forward_pass(&model, &cost, &nominal, &GainSchedule::zeros(40, 6, 2), 1.0).unwrap();
    assert_eq!(traj, nominal);
    assert_eq!(j, cost.total_cost(&nominal).unwrap());
}

#[test]
fn craft_hover_holds_position() {
    let params = CraftParams::default();
    let model = CraftModel::new(params, 0.05).unwrap();
    let s = State::new(3.0, 12.0, 0.0, 0.0, 0.0, 0.0);
    let h = 60;
    let reference = stationary_reference(&s, h, 0.05);
    // raw thrust is penalized, so the optimum sags by roughly R·m·g / Q_f near
    // the end; a light control weight keeps that below the tolerance
    let weights = CostWeights {
        control: 1e-5,
        ..CostWeights::default()
    };
    let cost = CostModel::for_craft(&reference, &weights, &params).unwrap();
    let sol = ddp_optimize(
        &model,
        &cost,
        &vec![Vector::zeros(2); h],
        &s.to_vector(),
        &DdpOptions::default(),
    )
    .unwrap();
    for x in &sol.policy.nominal_states {
        assert!(
            (x[0] - 3.0).hypot(x[1] - 12.0) < 1e-3,
            "drifted to ({}, {})",
            x[0],
            x[1]
        );
    }
    for u in &sol.policy.nominal_controls {
        assert!((u[0] - params.hover_thrust()).abs() < 0.05);
    }
}

#[test]
fn accepted_costs_strictly_decrease_on_craft_task() {
    let params = CraftParams::default();
    let model = CraftModel::new(params, 0.05).unwrap();
    let s = State::new(0.0, 10.0, 0.0, 0.0, 0.0, 0.0);
    let target = State::new(5.0, 14.0, 0.0, 0.0, 0.0, 0.0);
    let reference = stationary_reference(&target, 50, 0.05);
    let cost = CostModel::for_craft(&reference, &CostWeights::default(), &params).unwrap();
    let sol = ddp_optimize(
        &model,
        &cost,
        &vec![Vector::zeros(2); 50],
        &s.to_vector(),
        &DdpOptions::default(),
    )
    .unwrap();
    assert!(sol.cost_history.len() > 2);
    assert!(sol.cost_history.windows(2).all(|w| w[1] < w[0]));
}

prop_compose! {
    fn linear_instance()(
        n in 1usize..4,
        m in 1usize..3,
        h in 1usize..15,
        a_seed in prop::collection::vec(-1.2f64..1.2, 9),
        b_seed in prop::collection::vec(-1.0f64..1.0, 6),
        q_seed in prop::collection::vec(-1.0f64..1.0, 9),
        r_seed in prop::collection::vec(-1.0f64..1.0, 4),
        x_seed in prop::collection::vec(-3.0f64..3.0, 3),
        u_seed in prop::collection::vec(-2.0f64..2.0, 2),
    ) -> (LinearDynamics, Matrix, Matrix, Matrix, Vector, Vec<Vector>) {
        let a = random_matrix(n, n, &a_seed);
        let b = random_matrix(n, m, &b_seed);
        let q = spd(n, &q_seed, 0.0);
        let r = spd(m, &r_seed, 0.1);
        let x0 = Vector::from_fn(n, |i, _| x_seed[i]);
        let us = (0..h).map(|k| Vector::from_fn(m, |i, _| u_seed[i] * (k as f64 * 0.3).cos())).collect();
        (LinearDynamics::new(a, b, 0.1).unwrap(), q, r, q_f_for(n, &q_seed), x0, us)
    }
}

fn q_f_for(n: usize, seed: &[f64]) -> Matrix {
    spd(n, &seed.iter().rev().copied().collect::<Vec<_>>(), 0.5)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn backward_pass_agrees_with_riccati((model, q, r, q_f, x0, us) in linear_instance()) {
        let h = us.len();
        let n = x0.len();
        let cost = regulator(n, q.clone(), r.clone(), q_f.clone(), h);
        let nominal = rollout(&model, &us, &x0).unwrap();
        let bp = backward_pass(&model, &cost, &nominal, 0.0, false).unwrap();
        let lqr = lqr_oracle(model.a(), model.b(), &q, &r, &q_f, h).unwrap();
        for k in 0..h {
            let scale = 1.0 + lqr.gains[k].amax();
            prop_assert!((&bp.gains.betas[k] + &lqr.gains[k]).amax() / scale < 1e-8);
            // the cost carries no ½, so the value Hessian is twice the Riccati matrix
            let scale = 1.0 + lqr.p[k].amax();
            prop_assert!((&bp.values[k].v_xx - &lqr.p[k] * 2.0).amax() / scale < 1e-8);
        }
    }

    #[test]
    fn feedforward_is_stationary_point_of_q_model((model, q, r, q_f, x0, us) in linear_instance()) {
        let h = us.len();
        let cost = regulator(x0.len(), q, r, q_f, h);
        let nominal = rollout(&model, &us, &x0).unwrap();
        let bp = backward_pass(&model, &cost, &nominal, 0.0, false).unwrap();
        for k in 0..h {
            let qm = &bp.q_models[k];
            let residual = &qm.q_u + &qm.q_uu * &bp.gains.alphas[k];
            prop_assert!(residual.amax() < 1e-10 * (1.0 + qm.q_u.amax() + qm.q_uu.amax()));
        }
    }

    #[test]
    fn expected_improvement_is_never_positive(
        (model, q, r, q_f, x0, us) in linear_instance(),
        lambda in 0.0f64..10.0,
    ) {
        let h = us.len();
        let cost = regulator(x0.len(), q, r, q_f, h);
        let nominal = rollout(&model, &us, &x0).unwrap();
        let bp = backward_pass(&model, &cost, &nominal, lambda, false).unwrap();
        prop_assert!(bp.gains.expected_improvement <= 0.0);
        let all_zero = bp.q_models.iter().all(|qm| qm.q_u.amax() == 0.0);
        prop_assert_eq!(bp.gains.expected_improvement == 0.0, all_zero);
    }
}

#[test]
fn expected_improvement_vanishes_at_optimum() {
    let h = 20;
    let model = LinearDynamics::double_integrator(0.1);
    let eye2 = Matrix::identity(2, 2);
    let eye1 = Matrix::identity(1, 1);
    let cost = regulator(2, eye2.clone(), eye1.clone(), eye2.clone(), h);
    let lqr = lqr_oracle(model.a(), model.b(), &eye2, &eye1, &eye2, h).unwrap();
    let x0 = Vector::from_vec(vec![1.0, 1.0]);
    let (_, us) = oracle_rollout(model.a(), model.b(), &lqr.gains, &x0);
    let nominal = rollout(&model, &us, &x0).unwrap();
    let bp = backward_pass(&model, &cost, &nominal, 0.0, false).unwrap();
    assert!(bp.gains.expected_improvement.abs() < 1e-12);
    assert!(bp.gains.expected_improvement <= 0.0);
}
