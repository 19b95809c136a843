//! Differential dynamic programming.
//!
//! The backward sweep expands `l_k + V_{k+1}` to second order around the
//! nominal trajectory and solves for the affine control correction
//! `δu = α + β δx`; the forward sweep rolls the corrected controls out with a
//! step scale on `α`. Regularization is Levenberg–Marquardt style on `Q_uu`.

mod lqr;

pub use lqr::{lqr_oracle, LqrSolution};

use nalgebra::Cholesky;

use crate::dynamics::{contract, rollout, Dynamics, Matrix, Trajectory, Vector};
use crate::error::{Error, Result};
use crate::task::{CostModel, Stage};

/// Quadratic model of `l_k + V_{k+1}` in `(δx, δu)`. `q_uu` excludes
/// regularization.
#[derive(Debug, Clone, PartialEq)]
pub struct QModel {
    pub q0: f64,
    pub q_x: Vector,
    pub q_u: Vector,
    pub q_xx: Matrix,
    pub q_xu: Matrix,
    pub q_uu: Matrix,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ValueModel {
    pub v: f64,
    pub v_x: Vector,
    pub v_xx: Matrix,
}

#[derive(Debug, Clone, PartialEq)]
pub struct GainSchedule {
    pub alphas: Vec<Vector>,
    pub betas: Vec<Matrix>,
    /// Predicted cost change of a full step; never positive.
    pub expected_improvement: f64,
}

impl GainSchedule {
    pub fn zeros(horizon: usize, n: usize, m: usize) -> Self {
        Self {
            alphas: vec![Vector::zeros(m); horizon],
            betas: vec![Matrix::zeros(m, n); horizon],
            expected_improvement: 0.0,
        }
    }

    pub fn horizon(&self) -> usize {
        self.alphas.len()
    }
}

/// Nominal trajectory with the local feedback law
/// `u_k = ū_k + α_k + β_k (x_k − x̄_k)`.
#[derive(Debug, Clone, PartialEq)]
pub struct AffinePolicy {
    pub nominal_states: Vec<Vector>,
    pub nominal_controls: Vec<Vector>,
    pub gains: GainSchedule,
    pub dt: f64,
}

impl AffinePolicy {
    pub fn nominal(&self) -> Trajectory {
        Trajectory::new(self.dt, self.nominal_states.clone(), self.nominal_controls.clone())
            .expect("policy nominal is a validated rollout")
    }

    /// Feedback control at step `k` for state `x` (full step on `α`).
    pub fn control(&self, k: usize, x: &Vector) -> Vector {
        &self.nominal_controls[k] + &self.gains.alphas[k] + &self.gains.betas[k] * (x - &self.nominal_states[k])
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct DdpOptions {
    pub max_iterations: usize,
    /// Relative cost change below which the optimizer stops.
    pub cost_tolerance: f64,
    pub lambda_init: f64,
    pub lambda_factor: f64,
    pub lambda_max: f64,
    /// Step scales tried in order on the feedforward term.
    pub step_ladder: Vec<f64>,
    /// Include the dynamics Hessian tensors in the Q-model.
    pub second_order: bool,
}

impl Default for DdpOptions {
    fn default() -> Self {
        Self {
            max_iterations: 200,
            cost_tolerance: 1e-6,
            lambda_init: 1e-6,
            lambda_factor: 10.0,
            lambda_max: 1e10,
            step_ladder: (0..=10).map(|i| 0.5f64.powi(i)).collect(),
            second_order: false,
        }
    }
}

impl DdpOptions {
    pub fn validate(&self) -> Result<()> {
        validate_ladder(&self.step_ladder, "step_ladder")?;
        if !(self.lambda_init > 0.0 && self.lambda_max > self.lambda_init) {
            return Err(Error::InvalidInput(
                "lambda bounds need 0 < lambda_init < lambda_max".into(),
            ));
        }
        if !(self.lambda_factor > 1.0) {
            return Err(Error::InvalidInput("lambda_factor > 1".into()));
        }
        if !(self.cost_tolerance >= 0.0) {
            return Err(Error::InvalidInput("cost_tolerance >= 0".into()));
        }
        Ok(())
    }
}

/// Ladders are non-empty, inside `(0, 1]` and strictly decreasing.
pub fn validate_ladder(ladder: &[f64], name: &str) -> Result<()> {
    let inside = ladder.iter().all(|&g| g > 0.0 && g <= 1.0);
    let decreasing = ladder.windows(2).all(|w| w[1] < w[0]);
    if ladder.is_empty() || !inside || !decreasing {
        return Err(Error::InvalidInput(format!(
            "{name} must be non-empty, strictly decreasing and inside (0, 1]"
        )));
    }
    Ok(())
}

/// Output of one backward sweep.
#[derive(Debug, Clone)]
pub struct BackwardPass {
    pub gains: GainSchedule,
    /// `values[k]` for `k = 0..=H`.
    pub values: Vec<ValueModel>,
    /// `q_models[k]` for `k = 0..H`.
    pub q_models: Vec<QModel>,
}

fn symmetrize(m: &Matrix) -> Matrix {
    (m + m.transpose()) * 0.5
}

fn check_horizons<D: Dynamics + ?Sized>(model: &D, cost: &CostModel, nominal: &Trajectory) -> Result<()> {
    if nominal.horizon() != cost.horizon() {
        return Err(Error::HorizonMismatch {
            expected: cost.horizon(),
            got: nominal.horizon(),
        });
    }
    if model.state_dim() != cost.state_dim() || model.control_dim() != cost.control_dim() {
        return Err(Error::DimensionMismatch("model and cost dimensions differ".into()));
    }
    Ok(())
}

pub fn backward_pass<D: Dynamics + ?Sized>(
    model: &D,
    cost: &CostModel,
    nominal: &Trajectory,
    lambda: f64,
    second_order: bool,
) -> Result<BackwardPass> {
    check_horizons(model, cost, nominal)?;
    let h = nominal.horizon();
    let n = model.state_dim();
    let m = model.control_dim();
    let xs = nominal.states();
    let us = nominal.controls();

    let terminal = cost.quadratize(&xs[h], &Vector::zeros(m), Stage::Terminal);
    let mut values = vec![
        ValueModel {
            v: 0.0,
            v_x: Vector::zeros(n),
            v_xx: Matrix::zeros(n, n),
        };
        h + 1
    ];
    values[h] = ValueModel {
        v: terminal.l,
        v_x: terminal.l_x,
        v_xx: terminal.l_xx,
    };
    let mut alphas = vec![Vector::zeros(m); h];
    let mut betas = vec![Matrix::zeros(m, n); h];
    let mut q_models = Vec::with_capacity(h);
    let mut expected = 0.0;

    for k in (0..h).rev() {
        let next = &values[k + 1];
        let l = cost.quadratize(&xs[k], &us[k], Stage::Running(k));
        let jac = model.jacobians(&xs[k], &us[k], k)?;
        let fx_t = jac.f_x.transpose();
        let fu_t = jac.f_u.transpose();
        let vxx_fx = &next.v_xx * &jac.f_x;
        let vxx_fu = &next.v_xx * &jac.f_u;

        let q_x = &l.l_x + &fx_t * &next.v_x;
        let q_u = &l.l_u + &fu_t * &next.v_x;
        let mut q_xx = &l.l_xx + &fx_t * &vxx_fx;
        let mut q_uu = &l.l_uu + &fu_t * &vxx_fu;
        let mut q_xu = &l.l_xu + &fx_t * &vxx_fu;
        if second_order {
            let t = model.hessian_tensors(&xs[k], &us[k], k)?;
            q_xx += contract(&next.v_x, &t.f_xx);
            q_xu += contract(&next.v_x, &t.f_xu);
            q_uu += contract(&next.v_x, &t.f_uu);
        }
        let q_xx = symmetrize(&q_xx);
        let q_uu = symmetrize(&q_uu);

        let regularized = &q_uu + Matrix::identity(m, m) * lambda;
        let chol = Cholesky::new(regularized).ok_or(Error::NotPositiveDefinite { step: k })?;
        let alpha = -chol.solve(&q_u);
        let beta = -chol.solve(&q_xu.transpose());
        if alpha.iter().chain(beta.iter()).any(|v| !v.is_finite()) {
            return Err(Error::numerical(k, "non-finite gains"));
        }

        let q0 = l.l + next.v;
        let quu_alpha = &q_uu * &alpha;
        let beta_t = beta.transpose();
        let v_x = &q_x + &q_xu * &alpha + &beta_t * &q_u + &beta_t * &quu_alpha;
        let v_xx = &q_xx + &q_xu * &beta + (&q_xu * &beta).transpose() + &beta_t * &q_uu * &beta;
        let v = q0 + alpha.dot(&q_u) + 0.5 * alpha.dot(&quu_alpha);
        // −½ q_uᵀ(Q_uu + λI)⁻¹q_u
        expected += 0.5 * alpha.dot(&q_u);

        values[k] = ValueModel {
            v,
            v_x,
            v_xx: symmetrize(&v_xx),
        };
        alphas[k] = alpha;
        betas[k] = beta;
        q_models.push(QModel {
            q0,
            q_x,
            q_u,
            q_xx,
            q_xu,
            q_uu,
        });
    }
    q_models.reverse();
    Ok(BackwardPass {
        gains: GainSchedule {
            alphas,
            betas,
            expected_improvement: expected,
        },
        values,
        q_models,
    })
}

/// Rolls out `u_k = ū_k + γ α_k + β_k (x_k − x̄_k)` from the nominal start.
pub fn forward_pass<D: Dynamics + ?Sized>(
    model: &D,
    cost: &CostModel,
    nominal: &Trajectory,
    gains: &GainSchedule,
    gamma: f64,
) -> Result<(Trajectory, f64)> {
    check_horizons(model, cost, nominal)?;
    if !(0.0..=1.0).contains(&gamma) {
        return Err(Error::InvalidInput(format!("step scale {gamma} outside [0, 1]")));
    }
    if gains.horizon() != nominal.horizon() {
        return Err(Error::HorizonMismatch {
            expected: nominal.horizon(),
            got: gains.horizon(),
        });
    }
    let h = nominal.horizon();
    let xs = nominal.states();
    let us = nominal.controls();
    let mut states = Vec::with_capacity(h + 1);
    let mut controls = Vec::with_capacity(h);
    states.push(xs[0].clone());
    for k in 0..h {
        let dx = &states[k] - &xs[k];
        let u = &us[k] + &gains.alphas[k] * gamma + &gains.betas[k] * dx;
        let next = model.step(&states[k], &u, k)?;
        states.push(next);
        controls.push(u);
    }
    let traj = Trajectory::new(nominal.dt(), states, controls)?;
    let j = cost.total_cost(&traj)?;
    Ok((traj, j))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DdpTermination {
    /// Relative cost change fell below tolerance, or no descent was predicted.
    Converged,
    /// Regularization grew past `lambda_max` after at least one accepted step.
    LambdaExceeded,
    MaxIterations,
}

#[derive(Debug, Clone)]
pub struct DdpSolution {
    pub policy: AffinePolicy,
    /// Initial cost followed by the cost after every accepted iteration.
    pub cost_history: Vec<f64>,
    pub iterations: usize,
    pub termination: DdpTermination,
    pub final_lambda: f64,
}

impl DdpSolution {
    pub fn cost(&self) -> f64 {
        *self.cost_history.last().expect("history starts with the initial cost")
    }
}

pub fn ddp_optimize<D: Dynamics + ?Sized>(
    model: &D,
    cost: &CostModel,
    initial_controls: &[Vector],
    s0: &Vector,
    opts: &DdpOptions,
) -> Result<DdpSolution> {
    opts.validate()?;
    let mut nominal = rollout(model, initial_controls, s0)?;
    check_horizons(model, cost, &nominal)?;
    let mut j = cost.total_cost(&nominal)?;
    if !j.is_finite() {
        return Err(Error::OptimizationFailure("initial cost is not finite".into()));
    }
    let mut history = vec![j];
    let mut lambda = opts.lambda_init;
    let mut termination = DdpTermination::MaxIterations;
    let mut iterations = 0;

    while iterations < opts.max_iterations {
        iterations += 1;
        let bp = match backward_pass(model, cost, &nominal, lambda, opts.second_order) {
            Ok(bp) => bp,
            Err(Error::NotPositiveDefinite { step }) => {
                lambda *= opts.lambda_factor;
                if lambda > opts.lambda_max {
                    if history.len() == 1 {
                        return Err(Error::OptimizationFailure(format!(
                            "Q_uu stayed indefinite at step {step} up to lambda_max"
                        )));
                    }
                    termination = DdpTermination::LambdaExceeded;
                    break;
                }
                continue;
            }
            Err(e) => return Err(e),
        };

        let mut accepted = None;
        for &gamma in &opts.step_ladder {
            let (cand, jc) = forward_pass(model, cost, &nominal, &bp.gains, gamma)?;
            if jc.is_finite() && jc < j {
                accepted = Some((cand, jc));
                break;
            }
        }

        match accepted {
            Some((cand, jc)) => {
                let rel = (j - jc) / j.abs().max(f64::MIN_POSITIVE);
                nominal = cand;
                j = jc;
                history.push(j);
                lambda = (lambda / opts.lambda_factor).max(opts.lambda_init);
                if rel < opts.cost_tolerance {
                    termination = DdpTermination::Converged;
                    break;
                }
            }
            None => {
                // nothing left to gain according to the local model
                if -bp.gains.expected_improvement <= opts.cost_tolerance * j.abs() {
                    termination = DdpTermination::Converged;
                    break;
                }
                lambda *= opts.lambda_factor;
                if lambda > opts.lambda_max {
                    if history.len() == 1 {
                        return Err(Error::OptimizationFailure(
                            "no descent step found before lambda_max".into(),
                        ));
                    }
                    termination = DdpTermination::LambdaExceeded;
                    break;
                }
            }
        }
    }

    let gains = final_gains(model, cost, &nominal, lambda, opts);
    let (dt, nominal_states, nominal_controls) = nominal.into_parts();
    Ok(DdpSolution {
        policy: AffinePolicy {
            nominal_states,
            nominal_controls,
            gains,
            dt,
        },
        cost_history: history,
        iterations,
        termination,
        final_lambda: lambda,
    })
}

/// Gains at the returned nominal, escalating regularization if needed.
fn final_gains<D: Dynamics + ?Sized>(
    model: &D,
    cost: &CostModel,
    nominal: &Trajectory,
    mut lambda: f64,
    opts: &DdpOptions,
) -> GainSchedule {
    while lambda <= opts.lambda_max {
        if let Ok(bp) = backward_pass(model, cost, nominal, lambda, opts.second_order) {
            return bp.gains;
        }
        lambda *= opts.lambda_factor;
    }
    GainSchedule::zeros(nominal.horizon(), model.state_dim(), model.control_dim())
}
