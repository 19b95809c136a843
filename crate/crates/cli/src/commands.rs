//! Subcommand implementations. Each writes its files, then returns the
//! console lines and the exit status.

use std::path::{Path, PathBuf};

use craftlearn::dynamics::{rollout, Trajectory};
use craftlearn::learner::{clamp_tape, initial_policy, learn, LearnOutcome, SimulatedSystem};
use craftlearn::metrics::{compare, evaluate, MetricsReport};

use crate::baseline::{baseline_controller, BaselineGains};
use crate::config::ExperimentConfig;
use crate::error::Result;
use crate::io::{read_tape, read_trajectory, write_learn_log, write_tape, write_trajectory};
use crate::report::{render_comparison, render_report, write_comparison, write_figures, write_series, write_summary};

/// The final trajectory has a stop or collision error.
pub const EXIT_TRAJECTORY_ERROR: i32 = 3;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SystemChoice {
    /// True-parameter simulator standing in for the real craft.
    True,
    Model,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CommandOutput {
    pub lines: Vec<String>,
    pub exit_code: i32,
    pub files: Vec<PathBuf>,
}

impl CommandOutput {
    fn new() -> Self {
        Self {
            lines: Vec::new(),
            exit_code: 0,
            files: Vec::new(),
        }
    }

    fn wrote(&mut self, path: PathBuf) {
        self.files.push(path);
    }

    fn say(&mut self, line: impl Into<String>) {
        self.lines.push(line.into());
    }

    /// Flags trajectory errors in `report` through the exit code.
    fn gate(&mut self, what: &str, report: &MetricsReport) {
        if report.stop.stopped {
            self.say(format!(
                "error: {what} stops at step {}",
                report.stop.first_index.unwrap_or(0)
            ));
        }
        if report.collision.collided {
            self.say(format!(
                "error: {what} hits the deck at step {}",
                report.collision.first_index.unwrap_or(0)
            ));
        }
        if report.has_errors() {
            self.exit_code = EXIT_TRAJECTORY_ERROR;
        }
    }
}

fn metrics_of(config: &ExperimentConfig, traj: &Trajectory) -> Result<MetricsReport> {
    Ok(evaluate(
        traj,
        &config.reference()?,
        config.task.deck.as_ref(),
        &config.craft,
        config.v_eps,
    )?)
}

/// Model-only optimization: DDP on the approximate model from hover.
pub fn ddp_run(config: &ExperimentConfig, out: &Path) -> Result<CommandOutput> {
    let mut o = CommandOutput::new();
    let model = config.approx_model()?;
    let cost = config.cost()?;
    let s0 = config.s0()?.to_vector();
    let sol = initial_policy(&model, &cost, &s0, &config.warm_start(), &config.ddp)?;
    let tape = clamp_tape(&cost, sol.policy.nominal_controls.iter().cloned());
    let traj = rollout(&model, &tape, &s0)?;
    let j = cost.total_cost(&traj)?;

    let tape_path = out.join("ddp_tape.csv");
    write_tape(&tape_path, &tape)?;
    o.wrote(tape_path);
    let traj_path = out.join("ddp_model_trajectory.csv");
    write_trajectory(&traj_path, &traj)?;
    o.wrote(traj_path);

    o.say(format!(
        "ddp: {} iterations, {:?}, model cost {j:.16e}",
        sol.iterations, sol.termination
    ));
    o.gate("model trajectory", &metrics_of(config, &traj)?);
    Ok(o)
}

/// Full learning loop on the true-parameter simulator.
pub fn learn_run(config: &ExperimentConfig, out: &Path) -> Result<(CommandOutput, LearnOutcome)> {
    let mut o = CommandOutput::new();
    let real = SimulatedSystem::new(config.true_model()?);
    let approx = config.approx_model()?;
    let cost = config.cost()?;
    let s0 = config.s0()?.to_vector();
    let log_path = out.join("learn_log.csv");
    let outcome = match learn(&real, &approx, &cost, &s0, &config.warm_start(), &config.learner) {
        Ok(outcome) => outcome,
        Err(failure) => {
            // keep whatever was learned before the failure
            let last = failure.log.best_cost_history().last().copied();
            write_learn_log(&log_path, &failure.log, last.unwrap_or(failure.log.initial_real_cost))?;
            return Err(failure.source.into());
        }
    };

    let tape_path = out.join("learn_tape.csv");
    write_tape(&tape_path, &outcome.theta)?;
    o.wrote(tape_path);
    let traj_path = out.join("learn_trajectory.csv");
    write_trajectory(&traj_path, &outcome.trajectory)?;
    o.wrote(traj_path);
    write_learn_log(&log_path, &outcome.log, outcome.cost)?;
    o.wrote(log_path);

    let log = &outcome.log;
    o.say(format!("initial real cost {:.16e}", log.initial_real_cost));
    o.say(format!("final real cost {:.16e}", outcome.cost));
    o.say(format!(
        "{} iterations ({:?}), {} real trials",
        log.records.len(),
        log.terminated_by.expect("set on success"),
        log.total_real_trials
    ));
    o.gate("learned trajectory", &metrics_of(config, &outcome.trajectory)?);
    Ok((o, outcome))
}

pub fn rollout_run(config: &ExperimentConfig, tape: &Path, system: SystemChoice, out: &Path) -> Result<CommandOutput> {
    let mut o = CommandOutput::new();
    let controls = read_tape(tape)?;
    let model = match system {
        SystemChoice::True => config.true_model()?,
        SystemChoice::Model => config.approx_model()?,
    };
    let traj = rollout(&model, &controls, &config.s0()?.to_vector())?;
    let cost = config.cost()?.total_cost(&traj)?;
    let traj_path = out.join("rollout_trajectory.csv");
    write_trajectory(&traj_path, &traj)?;
    o.wrote(traj_path);
    o.say(format!("cost {cost:.16e}"));
    o.gate("rollout", &metrics_of(config, &traj)?);
    Ok(o)
}

pub fn metrics_run(config: &ExperimentConfig, trajectory: &Path, out: &Path) -> Result<CommandOutput> {
    let mut o = CommandOutput::new();
    let traj = read_trajectory(trajectory)?;
    let report = metrics_of(config, &traj)?;
    let summary = out.join("metrics_summary.csv");
    write_summary(&summary, &report)?;
    o.wrote(summary);
    let series = out.join("metrics_series.csv");
    write_series(&series, &traj, &report)?;
    o.wrote(series);
    o.lines.extend(render_report(&report).lines().map(str::to_string));
    o.gate("trajectory", &report);
    Ok(o)
}

pub fn compare_run(config: &ExperimentConfig, a: &Path, b: &Path, out: &Path) -> Result<CommandOutput> {
    let mut o = CommandOutput::new();
    let ta = read_trajectory(a)?;
    let tb = read_trajectory(b)?;
    let c = compare(
        &ta,
        &tb,
        &config.reference()?,
        config.task.deck.as_ref(),
        &config.craft,
        config.v_eps,
    )?;
    let path = out.join("compare.csv");
    write_comparison(&path, &c)?;
    o.wrote(path);
    write_figures(out, ("a", &ta), ("b", &tb), &c)?;
    for (name, _) in crate::report::FIGURES {
        o.wrote(out.join(name));
    }
    o.say(format!("a = {}", a.display()));
    o.say(format!("b = {}", b.display()));
    o.lines
        .extend(render_comparison(&c, "a", "b").lines().map(str::to_string));
    Ok(o)
}

pub fn baseline_run(config: &ExperimentConfig, out: &Path) -> Result<CommandOutput> {
    let mut o = CommandOutput::new();
    let run = baseline_controller(
        &config.craft,
        &config.reference()?,
        &config.s0()?,
        config.task.deck.as_ref(),
        &BaselineGains::default(),
    )?;
    let tape_path = out.join("baseline_tape.csv");
    write_tape(&tape_path, &run.tape)?;
    o.wrote(tape_path);
    let traj_path = out.join("baseline_trajectory.csv");
    write_trajectory(&traj_path, &run.trajectory)?;
    o.wrote(traj_path);
    o.say(format!(
        "baseline cost {:.16e}",
        config.cost()?.total_cost(&run.trajectory)?
    ));
    o.gate("baseline trajectory", &metrics_of(config, &run.trajectory)?);
    Ok(o)
}
