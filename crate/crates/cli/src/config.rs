//! Experiment configuration.
//!
//! The file is a flat sectioned key-value format:
//!
//! ```text
//! # comment
//! [task]
//! waypoints = 0,20; 10,20; 20,25
//! horizon = 200
//! dt = 0.05
//! ```
//!
//! Sections are `[craft]`, `[model]`, `[task]`, `[ddp]`, `[learner]`,
//! `[metrics]` and `[output]`. Vectors are comma-separated numbers, point
//! lists are semicolon-separated `x,y` pairs and several deck polylines are
//! separated by `|`. Unknown sections or keys and repeated keys are errors.
//! Every key except `task.waypoints`, `task.horizon` and `task.dt` has a
//! default:
//!
//! | key | default |
//! |-----|---------|
//! | `craft.*` | mass 1, inertia 0.1, gravity 9.8, linear_drag 0, thrust_max 30, torque_max 5 |
//! | `model.*` | the `[craft]` value, except `gravity` which defaults to 0 |
//! | `task.speed` | path length / (horizon · dt) |
//! | `task.s0` | first reference target (position and velocity, level, not spinning) |
//! | `task.*_weight`, `task.terminal_scale` | see [`CostWeights::default`] |
//! | `task.deck` | none (collision never fires) |
//! | `task.craft_radius` | 0.5 |
//! | `ddp.*`, `learner.*` | see [`DdpOptions::default`], [`LearnerOptions::default`] |
//! | `metrics.v_eps` | 1e-3 |
//! | `output.dir` | `out` |
//! | `output.seed` | 0 |

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use craftlearn::ddp::DdpOptions;
use craftlearn::dynamics::{Control, CraftModel, CraftParams, State, Vector};
use craftlearn::learner::LearnerOptions;
use craftlearn::metrics::DEFAULT_V_EPS;
use craftlearn::task::{build_reference, CostModel, CostWeights, DeckGeometry, Point, ReferenceTrajectory};

use crate::error::{CliError, Result};

const SECTIONS: [&str; 7] = ["craft", "model", "task", "ddp", "learner", "metrics", "output"];

pub const DEFAULT_CRAFT_RADIUS: f64 = 0.5;

#[derive(Debug, Clone, PartialEq)]
pub struct TaskConfig {
    pub waypoints: Vec<Point>,
    pub horizon: usize,
    pub dt: f64,
    pub speed: Option<f64>,
    pub s0: Option<State>,
    pub weights: CostWeights,
    pub deck: Option<DeckGeometry>,
    pub craft_radius: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    /// The system that plays the part of reality.
    pub craft: CraftParams,
    /// The approximate model used for planning.
    pub model: CraftParams,
    pub task: TaskConfig,
    pub ddp: DdpOptions,
    /// `learner.ddp` mirrors [`ExperimentConfig::ddp`].
    pub learner: LearnerOptions,
    pub v_eps: f64,
    pub output_dir: PathBuf,
    pub seed: u64,
}

impl ExperimentConfig {
    pub fn reference(&self) -> Result<ReferenceTrajectory> {
        Ok(build_reference(
            &self.task.waypoints,
            self.task.horizon,
            self.task.dt,
            self.task.speed,
        )?)
    }

    /// Tracking cost with the real actuator limits.
    pub fn cost(&self) -> Result<CostModel> {
        Ok(CostModel::for_craft(
            &self.reference()?,
            &self.task.weights,
            &self.craft,
        )?)
    }

    pub fn true_model(&self) -> Result<CraftModel> {
        Ok(CraftModel::new(self.craft, self.task.dt)?)
    }

    pub fn approx_model(&self) -> Result<CraftModel> {
        Ok(CraftModel::new(self.model, self.task.dt)?)
    }

    pub fn s0(&self) -> Result<State> {
        match self.task.s0 {
            Some(s) => Ok(s),
            None => {
                let first = self.reference()?.targets[0];
                Ok(State::new(first.x, first.y, 0.0, first.vx, first.vy, 0.0))
            }
        }
    }

    /// Hover thrust of the approximate model at every step.
    pub fn warm_start(&self) -> Vec<Vector> {
        vec![Control::new(self.model.hover_thrust(), 0.0).to_vector(); self.task.horizon]
    }
}

struct Entry {
    value: String,
    line: usize,
}

/// Key-value pairs of one section, consumed as they are read.
struct Section<'a> {
    name: &'static str,
    entries: BTreeMap<String, Entry>,
    path: &'a Path,
}

impl Section<'_> {
    fn take(&mut self, key: &str) -> Option<Entry> {
        self.entries.remove(key)
    }

    fn error(&self, line: usize, message: impl Into<String>) -> CliError {
        CliError::Parse {
            path: self.path.to_path_buf(),
            line,
            message: message.into(),
        }
    }

    fn parsed<T>(&mut self, key: &str, parse: impl Fn(&str) -> std::result::Result<T, String>) -> Result<Option<T>> {
        match self.take(key) {
            None => Ok(None),
            Some(e) => parse(&e.value)
                .map(Some)
                .map_err(|m| self.error(e.line, format!("{}.{key}: {m}", self.name))),
        }
    }

    fn number(&mut self, key: &str) -> Result<Option<f64>> {
        self.parsed(key, number)
    }

    fn number_or(&mut self, key: &str, default: f64) -> Result<f64> {
        Ok(self.number(key)?.unwrap_or(default))
    }

    fn count_or(&mut self, key: &str, default: usize) -> Result<usize> {
        Ok(self
            .parsed(key, |s| {
                s.parse::<usize>()
                    .map_err(|_| format!("expected a non-negative integer, got {s:?}"))
            })?
            .unwrap_or(default))
    }

    /// Rejects whatever was not consumed.
    fn finish(self) -> Result<()> {
        match self.entries.iter().min_by_key(|(_, e)| e.line) {
            Some((key, e)) => Err(self.error(e.line, format!("unknown key {key:?} in [{}]", self.name))),
            None => Ok(()),
        }
    }
}

fn number(s: &str) -> std::result::Result<f64, String> {
    let v: f64 = s
        .trim()
        .parse()
        .map_err(|_| format!("expected a number, got {:?}", s.trim()))?;
    if v.is_finite() {
        Ok(v)
    } else {
        Err(format!("expected a finite number, got {:?}", s.trim()))
    }
}

fn numbers(s: &str) -> std::result::Result<Vec<f64>, String> {
    s.split(',').map(number).collect()
}

fn points(s: &str) -> std::result::Result<Vec<Point>, String> {
    s.split(';')
        .map(|pair| match numbers(pair)?.as_slice() {
            [x, y] => Ok([*x, *y]),
            _ => Err(format!("expected an x,y pair, got {:?}", pair.trim())),
        })
        .collect()
}

fn boolean(s: &str) -> std::result::Result<bool, String> {
    match s.trim() {
        "true" => Ok(true),
        "false" => Ok(false),
        other => Err(format!("expected true or false, got {other:?}")),
    }
}

/// Splits the text into sections, checking syntax, section names and duplicates.
fn split_sections<'a>(text: &str, path: &'a Path) -> Result<BTreeMap<&'static str, Section<'a>>> {
    let mut sections: BTreeMap<&'static str, Section<'a>> = SECTIONS
        .iter()
        .map(|&name| {
            let s = Section {
                name,
                entries: BTreeMap::new(),
                path,
            };
            (name, s)
        })
        .collect();
    let parse_error = |line: usize, message: String| CliError::Parse {
        path: path.to_path_buf(),
        line,
        message,
    };
    let mut current: Option<&'static str> = None;
    for (idx, raw) in text.lines().enumerate() {
        let line = idx + 1;
        let content = raw.split('#').next().unwrap_or("").trim();
        if content.is_empty() {
            continue;
        }
        if let Some(rest) = content.strip_prefix('[') {
            let name = rest
                .strip_suffix(']')
                .ok_or_else(|| parse_error(line, format!("malformed section header {content:?}")))?
                .trim();
            let known = SECTIONS
                .iter()
                .find(|&&s| s == name)
                .ok_or_else(|| parse_error(line, format!("unknown section [{name}]")))?;
            current = Some(known);
            continue;
        }
        let (key, value) = content
            .split_once('=')
            .ok_or_else(|| parse_error(line, format!("expected key = value, got {content:?}")))?;
        let key = key.trim();
        let valid_key = !key.is_empty()
            && key
                .chars()
                .all(|c| c.is_ascii_lowercase() || c.is_ascii_digit() || c == '_');
        if !valid_key {
            return Err(parse_error(line, format!("keys are lowercase snake case, got {key:?}")));
        }
        let section = current.ok_or_else(|| parse_error(line, format!("key {key:?} outside any section")))?;
        let entries = &mut sections.get_mut(section).expect("known section").entries;
        if let Some(prev) = entries.get(key) {
            return Err(parse_error(
                line,
                format!("duplicate key {key:?} in [{section}] (first set on line {})", prev.line),
            ));
        }
        entries.insert(
            key.to_string(),
            Entry {
                value: value.trim().to_string(),
                line,
            },
        );
    }
    Ok(sections)
}

fn craft_section(s: &mut Section, base: CraftParams) -> Result<CraftParams> {
    Ok(CraftParams {
        mass: s.number_or("mass", base.mass)?,
        inertia: s.number_or("inertia", base.inertia)?,
        gravity: s.number_or("gravity", base.gravity)?,
        linear_drag: s.number_or("linear_drag", base.linear_drag)?,
        thrust_max: s.number_or("thrust_max", base.thrust_max)?,
        torque_max: s.number_or("torque_max", base.torque_max)?,
    })
}

fn required<T>(value: Option<T>, key: &str) -> Result<T> {
    value.ok_or_else(|| CliError::Config(format!("missing required key {key}")))
}

pub fn parse_config(text: &str, path: &Path) -> Result<ExperimentConfig> {
    let mut sections = split_sections(text, path)?;
    let mut sec = |name: &str| sections.remove(name).expect("known section");

    let mut s = sec("craft");
    let craft = craft_section(&mut s, CraftParams::default())?;
    s.finish()?;
    let mut s = sec("model");
    let model = craft_section(&mut s, CraftParams { gravity: 0.0, ..craft })?;
    s.finish()?;

    let mut s = sec("task");
    let waypoints = required(s.parsed("waypoints", points)?, "task.waypoints")?;
    let horizon = required(
        s.parsed("horizon", |v| {
            v.parse::<usize>()
                .map_err(|_| format!("expected a positive integer, got {v:?}"))
        })?,
        "task.horizon",
    )?;
    let dt = required(s.number("dt")?, "task.dt")?;
    let speed = s.number("speed")?;
    let s0 = s.parsed("s0", |v| match numbers(v)?.as_slice() {
        [x, y, th, vx, vy, om] => Ok(State::new(*x, *y, *th, *vx, *vy, *om)),
        other => Err(format!(
            "expected 6 numbers (x,y,theta,vx,vy,omega), got {}",
            other.len()
        )),
    })?;
    let d = CostWeights::default();
    let weights = CostWeights {
        position: s.number_or("position_weight", d.position)?,
        velocity: s.number_or("velocity_weight", d.velocity)?,
        theta: s.number_or("theta_weight", d.theta)?,
        omega: s.number_or("omega_weight", d.omega)?,
        control: s.number_or("control_weight", d.control)?,
        terminal_scale: s.number_or("terminal_scale", d.terminal_scale)?,
        control_limit_weight: s.number_or("control_limit_weight", d.control_limit_weight)?,
    };
    let deck_lines = s.parsed("deck", |v| {
        v.split('|').map(points).collect::<std::result::Result<Vec<_>, _>>()
    })?;
    let craft_radius = s.number_or("craft_radius", DEFAULT_CRAFT_RADIUS)?;
    s.finish()?;

    let mut s = sec("ddp");
    let dd = DdpOptions::default();
    let ddp = DdpOptions {
        max_iterations: s.count_or("max_iterations", dd.max_iterations)?,
        cost_tolerance: s.number_or("cost_tolerance", dd.cost_tolerance)?,
        lambda_init: s.number_or("lambda_init", dd.lambda_init)?,
        lambda_factor: s.number_or("lambda_factor", dd.lambda_factor)?,
        lambda_max: s.number_or("lambda_max", dd.lambda_max)?,
        step_ladder: s.parsed("step_ladder", numbers)?.unwrap_or(dd.step_ladder),
        second_order: s.parsed("second_order", boolean)?.unwrap_or(dd.second_order),
    };
    s.finish()?;

    let mut s = sec("learner");
    let ld = LearnerOptions::default();
    let learner = LearnerOptions {
        epsilon: s.number_or("epsilon", ld.epsilon)?,
        n_stall: s.count_or("n_stall", ld.n_stall)?,
        max_iterations: s.count_or("max_iterations", ld.max_iterations)?,
        alpha_ladder: s.parsed("alpha_ladder", numbers)?.unwrap_or(ld.alpha_ladder),
        ddp: ddp.clone(),
    };
    s.finish()?;

    let mut s = sec("metrics");
    let v_eps = s.number_or("v_eps", DEFAULT_V_EPS)?;
    s.finish()?;

    let mut s = sec("output");
    let output_dir = s
        .parsed("dir", |v| Ok(PathBuf::from(v)))?
        .unwrap_or_else(|| PathBuf::from("out"));
    let seed = s
        .parsed("seed", |v| {
            v.parse::<u64>()
                .map_err(|_| format!("expected a non-negative integer, got {v:?}"))
        })?
        .unwrap_or(0);
    s.finish()?;

    let deck = match deck_lines {
        Some(lines) => {
            Some(DeckGeometry::new(lines, craft_radius).map_err(|e| CliError::Config(format!("[task] deck: {e}")))?)
        }
        None => None,
    };
    let config = ExperimentConfig {
        craft,
        model,
        task: TaskConfig {
            waypoints,
            horizon,
            dt,
            speed,
            s0,
            weights,
            deck,
            craft_radius,
        },
        ddp,
        learner,
        v_eps,
        output_dir,
        seed,
    };
    validate(&config)?;
    Ok(config)
}

fn tagged(section: &'static str) -> impl Fn(craftlearn::Error) -> CliError {
    move |e| CliError::Config(format!("[{section}] {e}"))
}

/// Checks every cross-field invariant, naming the one that fails.
pub fn validate(c: &ExperimentConfig) -> Result<()> {
    c.craft.validate().map_err(tagged("craft"))?;
    c.model.validate().map_err(tagged("model"))?;
    let t = &c.task;
    let checks = [
        (t.horizon >= 3, "horizon >= 3"),
        (t.dt > 0.0, "dt > 0"),
        (t.waypoints.len() >= 2, "at least two waypoints"),
        (t.speed.is_none_or(|v| v > 0.0), "speed > 0"),
        (t.craft_radius > 0.0, "craft_radius > 0"),
        (c.v_eps > 0.0, "v_eps > 0"),
    ];
    for (ok, rule) in checks {
        if !ok {
            return Err(CliError::Config(format!("violates {rule}")));
        }
    }
    if let Some(s0) = t.s0 {
        if !s0.is_finite() {
            return Err(CliError::Config("[task] s0 must be finite".into()));
        }
    }
    let w = &t.weights;
    let weights = [
        w.position,
        w.velocity,
        w.theta,
        w.omega,
        w.terminal_scale,
        w.control_limit_weight,
    ];
    if weights.iter().any(|&v| v < 0.0) {
        return Err(CliError::Config("[task] violates weights >= 0".into()));
    }
    if !(w.control > 0.0) {
        return Err(CliError::Config("[task] violates control_weight > 0".into()));
    }
    c.ddp.validate().map_err(tagged("ddp"))?;
    c.learner.validate().map_err(tagged("learner"))?;
    c.reference().map_err(|e| CliError::Config(format!("[task] {e}")))?;
    Ok(())
}

pub fn load_config(path: &Path) -> Result<ExperimentConfig> {
    let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
    parse_config(&text, path)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn parse(text: &str) -> Result<ExperimentConfig> {
        parse_config(text, Path::new("test.cfg"))
    }

    const MINIMAL: &str = "[task]\nwaypoints = 0,0; 10,0\nhorizon = 10\ndt = 0.1\n";

    #[test]
    fn minimal_config_takes_defaults() {
        let c = parse(MINIMAL).unwrap();
        assert_eq!(c.craft, CraftParams::default());
        assert_eq!(
            c.model,
            CraftParams {
                gravity: 0.0,
                ..CraftParams::default()
            }
        );
        assert_eq!(c.task.weights, CostWeights::default());
        assert_eq!(c.ddp, DdpOptions::default());
        assert_eq!(c.learner, LearnerOptions::default());
        assert_eq!(c.v_eps, DEFAULT_V_EPS);
        assert_eq!(c.output_dir, PathBuf::from("out"));
        assert!(c.task.deck.is_none());
    }

    #[test]
    fn model_inherits_craft_values() {
        let c = parse(&format!("[craft]\nmass = 2\n{MINIMAL}")).unwrap();
        assert_eq!(c.model.mass, 2.0);
        assert_eq!(c.model.gravity, 0.0);
    }

    #[test]
    fn negative_mass_names_the_invariant() {
        let err = parse(&format!("[craft]\nmass = -1\n{MINIMAL}")).unwrap_err();
        assert!(err.to_string().contains("mass > 0"), "{err}");
        assert_eq!(err.exit_code(), 1);
    }

    #[test]
    fn duplicate_key_reports_its_line() {
        let err = parse("[task]\nwaypoints = 0,0; 1,0\nhorizon = 10\nhorizon = 12\ndt = 0.1\n").unwrap_err();
        match err {
            CliError::Parse { line, ref message, .. } => {
                assert_eq!(line, 4);
                assert!(message.contains("duplicate"));
            }
            other => panic!("unexpected {other}"),
        }
    }

    #[test]
    fn unknown_key_and_section_are_rejected() {
        let err = parse(&format!("{MINIMAL}wobble = 3\n")).unwrap_err();
        assert!(matches!(err, CliError::Parse { line: 5, .. }), "{err}");
        let err = parse(&format!("[extras]\n{MINIMAL}")).unwrap_err();
        assert!(matches!(err, CliError::Parse { line: 1, .. }), "{err}");
    }

    #[test]
    fn deck_with_several_polylines() {
        let c = parse(&format!(
            "{MINIMAL}deck = -5,-1; 15,-1 | 3,2; 4,3; 5,2\ncraft_radius = 0.25\n"
        ))
        .unwrap();
        let deck = c.task.deck.unwrap();
        assert_eq!(deck.polylines().len(), 2);
        assert_eq!(deck.polylines()[1], vec![[3.0, 2.0], [4.0, 3.0], [5.0, 2.0]]);
        assert_eq!(deck.craft_radius(), 0.25);
    }

    #[test]
    fn bad_number_reports_line() {
        let err = parse("[task]\nwaypoints = 0,0; 1,x\nhorizon = 10\ndt = 0.1\n").unwrap_err();
        assert!(matches!(err, CliError::Parse { line: 2, .. }), "{err}");
    }

    #[test]
    fn missing_horizon_is_named() {
        let err = parse("[task]\nwaypoints = 0,0; 1,0\ndt = 0.1\n").unwrap_err();
        assert!(err.to_string().contains("task.horizon"));
    }

    #[test]
    fn default_start_is_first_target() {
        let c = parse(MINIMAL).unwrap();
        let s0 = c.s0().unwrap();
        assert_eq!((s0.x, s0.y, s0.vx, s0.vy), (0.0, 0.0, 10.0, 0.0));
    }
}
