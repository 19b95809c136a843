//! Policy learning with an approximate model and few real rollouts.
//!
//! Each iteration runs the current control tape on the real system, shifts
//! the approximate model by the observed per-step residuals so that it
//! reproduces that rollout exactly, lets DDP on the shifted model propose a
//! new tape, and line-searches along the proposal using real rollouts only.

use std::sync::atomic::{AtomicUsize, Ordering};

use crate::ddp::{ddp_optimize, validate_ladder, DdpOptions, DdpSolution};
use crate::dynamics::{apply_bias, compute_bias, rollout, Dynamics, Trajectory, Vector};
use crate::error::{Error, Result};
use crate::task::CostModel;

/// The system whose rollouts are scarce. Runs must be deterministic.
pub trait RealSystem {
    fn run(&self, controls: &[Vector], s0: &Vector) -> Result<Trajectory>;

    /// Number of runs so far.
    fn trials(&self) -> usize;
}

/// A simulator standing in for the real system, with a trial counter.
#[derive(Debug)]
pub struct SimulatedSystem<M> {
    model: M,
    trials: AtomicUsize,
}

impl<M: Dynamics> SimulatedSystem<M> {
    pub fn new(model: M) -> Self {
        Self {
            model,
            trials: AtomicUsize::new(0),
        }
    }

    pub fn model(&self) -> &M {
        &self.model
    }
}

impl<M: Dynamics> RealSystem for SimulatedSystem<M> {
    fn run(&self, controls: &[Vector], s0: &Vector) -> Result<Trajectory> {
        self.trials.fetch_add(1, Ordering::SeqCst);
        rollout(&self.model, controls, s0)
    }

    fn trials(&self) -> usize {
        self.trials.load(Ordering::SeqCst)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LearnerOptions {
    /// Relative improvement threshold; an iteration stalls when it gains
    /// less than `epsilon * (1 + |J|)`.
    pub epsilon: f64,
    /// Consecutive stalled iterations before stopping.
    pub n_stall: usize,
    pub max_iterations: usize,
    /// Step sizes tried on the real system, largest first.
    pub alpha_ladder: Vec<f64>,
    pub ddp: DdpOptions,
}

impl Default for LearnerOptions {
    fn default() -> Self {
        Self {
            epsilon: 1e-3,
            n_stall: 3,
            max_iterations: 50,
            alpha_ladder: (0..6).map(|i| 0.5f64.powi(i)).collect(),
            ddp: DdpOptions::default(),
        }
    }
}

impl LearnerOptions {
    pub fn validate(&self) -> Result<()> {
        if !(self.epsilon > 0.0) {
            return Err(Error::InvalidInput("epsilon > 0".into()));
        }
        if self.n_stall < 1 {
            return Err(Error::InvalidInput("n_stall >= 1".into()));
        }
        validate_ladder(&self.alpha_ladder, "alpha_ladder")?;
        self.ddp.validate()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct IterationRecord {
    pub iteration: usize,
    /// Tape executed at the start of the iteration.
    pub theta: Vec<Vector>,
    pub real_trajectory: Trajectory,
    pub real_cost: f64,
    pub bias_norm: f64,
    /// Largest componentwise error of the biased model replaying `real_trajectory`.
    pub bias_replay_error: f64,
    /// Cost of `theta` and of the proposed tape under the biased model.
    pub model_cost_before: f64,
    pub model_cost_after: f64,
    pub ddp_cost_history: Vec<f64>,
    pub chosen_alpha: Option<f64>,
    /// Real cost decrease achieved by the line search (0 when none).
    pub improvement: f64,
    pub real_trials_used: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LearnTermination {
    Stall,
    MaxIterations,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LearnLog {
    /// Model-only policy and its real cost.
    pub initial_theta: Vec<Vector>,
    pub initial_real_cost: f64,
    pub initial_ddp_history: Vec<f64>,
    pub records: Vec<IterationRecord>,
    pub terminated_by: Option<LearnTermination>,
    pub total_real_trials: usize,
}

impl LearnLog {
    /// Best real cost seen after each iteration.
    pub fn best_cost_history(&self) -> Vec<f64> {
        self.records.iter().map(|r| r.real_cost - r.improvement).collect()
    }
}

#[derive(Debug, Clone)]
pub struct LearnOutcome {
    pub theta: Vec<Vector>,
    pub trajectory: Trajectory,
    pub cost: f64,
    pub log: LearnLog,
}

/// A learning run that stopped on an error, with everything logged so far.
#[derive(Debug, Clone, thiserror::Error)]
#[error("learning stopped after {} iterations: {source}", log.records.len())]
pub struct LearnFailure {
    pub source: Error,
    pub log: LearnLog,
}

/// DDP on the unbiased approximate model, warm-started from `warm_start`.
pub fn initial_policy<D: Dynamics + ?Sized>(
    model: &D,
    cost: &CostModel,
    s0: &Vector,
    warm_start: &[Vector],
    opts: &DdpOptions,
) -> Result<DdpSolution> {
    if warm_start.is_empty() {
        return Err(Error::InvalidInput("horizon must be at least 1".into()));
    }
    ddp_optimize(model, cost, warm_start, s0, opts)
}

/// Improvement direction `d = θ* − θ`, where `θ*` is DDP's optimum on the
/// biased model warm-started at `θ`.
#[derive(Debug, Clone)]
pub struct Direction {
    pub d: Vec<Vector>,
    pub solution: DdpSolution,
}

pub fn improvement_direction<D: Dynamics + ?Sized>(
    biased_model: &D,
    cost: &CostModel,
    theta: &[Vector],
    s0: &Vector,
    opts: &DdpOptions,
) -> Result<Direction> {
    let solution = ddp_optimize(biased_model, cost, theta, s0, opts)?;
    let d = solution
        .policy
        .nominal_controls
        .iter()
        .zip(theta)
        .map(|(new, old)| new - old)
        .collect();
    Ok(Direction { d, solution })
}

#[derive(Debug, Clone)]
pub struct LineSearchOutcome {
    pub theta: Vec<Vector>,
    pub cost: f64,
    /// Real trajectory of the accepted tape; `None` keeps the incumbent.
    pub trajectory: Option<Trajectory>,
    pub alpha: Option<f64>,
    pub trials: usize,
}

impl LineSearchOutcome {
    pub fn improved(&self) -> bool {
        self.alpha.is_some()
    }
}

/// Tries `θ + α d` on the real system for each `α` in order, stopping at the
/// first that gains more than `epsilon * (1 + |J|)`. Otherwise keeps the best
/// strictly improving candidate, or the incumbent if there is none. Tapes are
/// clamped to the cost's actuator limits before execution.
#[allow(clippy::too_many_arguments)]
pub fn line_search_real<R: RealSystem + ?Sized>(
    real: &R,
    cost: &CostModel,
    theta: &[Vector],
    incumbent_cost: f64,
    d: &[Vector],
    ladder: &[f64],
    epsilon: f64,
    s0: &Vector,
) -> Result<LineSearchOutcome> {
    if d.len() != theta.len() {
        return Err(Error::HorizonMismatch {
            expected: theta.len(),
            got: d.len(),
        });
    }
    let threshold = epsilon * (1.0 + incumbent_cost.abs());
    let mut best: Option<(f64, Vec<Vector>, Trajectory, f64)> = None;
    let mut trials = 0;
    for &alpha in ladder {
        let candidate = clamp_tape(cost, theta.iter().zip(d).map(|(t, dk)| t + dk * alpha));
        let traj = real.run(&candidate, s0)?;
        trials += 1;
        let j = cost.total_cost(&traj)?;
        if !j.is_finite() || j >= incumbent_cost {
            continue;
        }
        let beats_best = best.as_ref().is_none_or(|(bj, ..)| j < *bj);
        if beats_best {
            best = Some((j, candidate, traj, alpha));
        }
        if incumbent_cost - j > threshold {
            break;
        }
    }
    Ok(match best {
        Some((j, theta, traj, alpha)) => LineSearchOutcome {
            theta,
            cost: j,
            trajectory: Some(traj),
            alpha: Some(alpha),
            trials,
        },
        None => LineSearchOutcome {
            theta: theta.to_vec(),
            cost: incumbent_cost,
            trajectory: None,
            alpha: None,
            trials,
        },
    })
}

/// Saturates every control at the cost model's actuator limits, if it has any.
pub fn clamp_tape(cost: &CostModel, tape: impl Iterator<Item = Vector>) -> Vec<Vector> {
    match cost.limits() {
        Some(l) => tape.map(|u| l.clamp(&u)).collect(),
        None => tape.collect(),
    }
}

/// True iff each of the last `n_stall` improvements is below
/// `epsilon * (1 + |j_scale|)`.
pub fn should_terminate(history: &[f64], epsilon: f64, n_stall: usize, j_scale: f64) -> bool {
    if n_stall == 0 || history.len() < n_stall {
        return false;
    }
    let threshold = epsilon * (1.0 + j_scale.abs());
    history[history.len() - n_stall..].iter().all(|&imp| imp < threshold)
}

/// Runs the full learning loop. The returned tape has the lowest real cost
/// observed.
#[allow(clippy::result_large_err)]
pub fn learn<R, D>(
    real: &R,
    approx_model: &D,
    cost: &CostModel,
    s0: &Vector,
    warm_start: &[Vector],
    opts: &LearnerOptions,
) -> std::result::Result<LearnOutcome, LearnFailure>
where
    R: RealSystem + ?Sized,
    D: Dynamics + ?Sized,
{
    let trials_at_start = real.trials();
    let mut log = LearnLog {
        initial_theta: Vec::new(),
        initial_real_cost: f64::NAN,
        initial_ddp_history: Vec::new(),
        records: Vec::new(),
        terminated_by: None,
        total_real_trials: 0,
    };
    let fail = |source: Error, mut log: LearnLog| {
        log.total_real_trials = real.trials() - trials_at_start;
        LearnFailure { source, log }
    };
    if let Err(e) = opts.validate() {
        return Err(fail(e, log));
    }
    if warm_start.len() != cost.horizon() {
        let e = Error::HorizonMismatch {
            expected: cost.horizon(),
            got: warm_start.len(),
        };
        return Err(fail(e, log));
    }

    let initial = match initial_policy(approx_model, cost, s0, warm_start, &opts.ddp) {
        Ok(sol) => sol,
        Err(e) => return Err(fail(e, log)),
    };
    let mut theta = clamp_tape(cost, initial.policy.nominal_controls.iter().cloned());
    log.initial_theta = theta.clone();
    log.initial_ddp_history = initial.cost_history;

    let mut real_traj = match real.run(&theta, s0) {
        Ok(t) => t,
        Err(e) => return Err(fail(e, log)),
    };
    let mut real_cost = match cost.total_cost(&real_traj) {
        Ok(j) => j,
        Err(e) => return Err(fail(e, log)),
    };
    log.initial_real_cost = real_cost;
    let mut pending_trials = 1;
    let mut improvements = Vec::new();

    for iteration in 0..opts.max_iterations {
        let step = (|| -> Result<(IterationRecord, LineSearchOutcome)> {
            let bias = compute_bias(approx_model, &real_traj)?;
            let bias_norm = bias.norm();
            let biased = apply_bias(approx_model, bias);
            let bias_replay_error = replay_error(&biased, &real_traj)?;
            let dir = improvement_direction(&biased, cost, &theta, s0, &opts.ddp)?;
            let ls = line_search_real(
                real,
                cost,
                &theta,
                real_cost,
                &dir.d,
                &opts.alpha_ladder,
                opts.epsilon,
                s0,
            )?;
            let record = IterationRecord {
                iteration,
                theta: theta.clone(),
                real_trajectory: real_traj.clone(),
                real_cost,
                bias_norm,
                bias_replay_error,
                model_cost_before: dir.solution.cost_history[0],
                model_cost_after: dir.solution.cost(),
                ddp_cost_history: dir.solution.cost_history.clone(),
                chosen_alpha: ls.alpha,
                improvement: real_cost - ls.cost,
                real_trials_used: pending_trials + ls.trials,
            };
            Ok((record, ls))
        })();
        let (record, ls) = match step {
            Ok(v) => v,
            Err(e) => return Err(fail(e, log)),
        };
        pending_trials = 0;
        improvements.push(record.improvement);
        log.records.push(record);
        if let Some(traj) = ls.trajectory {
            // deterministic system: the line-search rollout is the next step-3 run
            theta = ls.theta;
            real_traj = traj;
            real_cost = ls.cost;
        }
        if should_terminate(&improvements, opts.epsilon, opts.n_stall, real_cost) {
            log.terminated_by = Some(LearnTermination::Stall);
            break;
        }
    }
    if log.terminated_by.is_none() {
        log.terminated_by = Some(LearnTermination::MaxIterations);
    }
    log.total_real_trials = real.trials() - trials_at_start;
    debug_assert_eq!(
        log.total_real_trials,
        pending_trials + log.records.iter().map(|r| r.real_trials_used).sum::<usize>()
    );
    Ok(LearnOutcome {
        theta,
        trajectory: real_traj,
        cost: real_cost,
        log,
    })
}

/// Largest componentwise gap between `model.step` and the recorded next states.
pub fn replay_error<D: Dynamics + ?Sized>(model: &D, traj: &Trajectory) -> Result<f64> {
    let xs = traj.states();
    let mut worst: f64 = 0.0;
    for (t, u) in traj.controls().iter().enumerate() {
        let pred = model.step(&xs[t], u, t)?;
        worst = worst.max((pred - &xs[t + 1]).amax());
    }
    Ok(worst)
}
