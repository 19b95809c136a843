//! Craft state types, steppable dynamics and rollouts.
//!
//! Every model implements [`Dynamics`], a discrete-time map
//! `x_{k+1} = f_k(x_k, u_k)`. The optimizer only ever talks to this trait, so
//! the same code drives the thrust craft, the bias-corrected craft and the
//! plain linear systems used for Riccati cross-checks.

mod bias;
mod craft;
mod derivatives;
mod linear;

pub use bias::{apply_bias, compute_bias, BiasedModel, TimeBias};
pub use craft::{craft_derivative, CraftModel, CraftParams};
pub use derivatives::{contract, fd_hessian_tensors, fd_jacobians, HessianTensors, JacobianPair};
pub use linear::LinearDynamics;

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};

pub type Vector = DVector<f64>;
pub type Matrix = DMatrix<f64>;

pub const STATE_DIM: usize = 6;
pub const CONTROL_DIM: usize = 2;

/// Planar craft state. `theta` is unwrapped.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct State {
    pub x: f64,
    pub y: f64,
    pub theta: f64,
    pub vx: f64,
    pub vy: f64,
    pub omega: f64,
}

impl State {
    pub fn new(x: f64, y: f64, theta: f64, vx: f64, vy: f64, omega: f64) -> Self {
        Self {
            x,
            y,
            theta,
            vx,
            vy,
            omega,
        }
    }

    pub fn to_array(&self) -> [f64; STATE_DIM] {
        [self.x, self.y, self.theta, self.vx, self.vy, self.omega]
    }

    pub fn to_vector(&self) -> Vector {
        Vector::from_row_slice(&self.to_array())
    }

    /// Reads the first six entries of `v`.
    pub fn from_slice(v: &[f64]) -> Self {
        assert!(v.len() >= STATE_DIM, "state slice needs 6 entries");
        Self::new(v[0], v[1], v[2], v[3], v[4], v[5])
    }

    pub fn position(&self) -> [f64; 2] {
        [self.x, self.y]
    }

    pub fn speed(&self) -> f64 {
        self.vx.hypot(self.vy)
    }

    pub fn is_finite(&self) -> bool {
        self.to_array().iter().all(|v| v.is_finite())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Control {
    pub thrust: f64,
    pub torque: f64,
}

impl Control {
    pub fn new(thrust: f64, torque: f64) -> Self {
        Self { thrust, torque }
    }

    pub fn to_vector(&self) -> Vector {
        Vector::from_row_slice(&[self.thrust, self.torque])
    }

    pub fn from_slice(v: &[f64]) -> Self {
        assert!(v.len() >= CONTROL_DIM, "control slice needs 2 entries");
        Self::new(v[0], v[1])
    }

    pub fn is_finite(&self) -> bool {
        self.thrust.is_finite() && self.torque.is_finite()
    }
}

/// A time-indexed rollout: `H + 1` states and `H` controls.
#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    dt: f64,
    states: Vec<Vector>,
    controls: Vec<Vector>,
}

impl Trajectory {
    pub fn new(dt: f64, states: Vec<Vector>, controls: Vec<Vector>) -> Result<Self> {
        if !(dt > 0.0 && dt.is_finite()) {
            return Err(Error::InvalidInput(format!("dt must be positive, got {dt}")));
        }
        if states.len() != controls.len() + 1 {
            return Err(Error::InvalidInput(format!(
                "trajectory needs |states| = |controls| + 1, got {} and {}",
                states.len(),
                controls.len()
            )));
        }
        if let Some(k) = states.iter().position(|s| s.iter().any(|v| !v.is_finite())) {
            return Err(Error::numerical(k, "non-finite state in trajectory"));
        }
        if let Some(k) = controls.iter().position(|u| u.iter().any(|v| !v.is_finite())) {
            return Err(Error::numerical(k, "non-finite control in trajectory"));
        }
        Ok(Self { dt, states, controls })
    }

    /// Builds a craft trajectory from typed states and controls.
    pub fn from_craft(dt: f64, states: &[State], controls: &[Control]) -> Result<Self> {
        Self::new(
            dt,
            states.iter().map(State::to_vector).collect(),
            controls.iter().map(Control::to_vector).collect(),
        )
    }

    pub fn dt(&self) -> f64 {
        self.dt
    }

    /// Number of control steps `H`.
    pub fn horizon(&self) -> usize {
        self.controls.len()
    }

    pub fn states(&self) -> &[Vector] {
        &self.states
    }

    pub fn controls(&self) -> &[Vector] {
        &self.controls
    }

    pub fn into_parts(self) -> (f64, Vec<Vector>, Vec<Vector>) {
        (self.dt, self.states, self.controls)
    }

    /// Craft view of state `k`; panics for non-craft dimensions.
    pub fn state(&self, k: usize) -> State {
        State::from_slice(self.states[k].as_slice())
    }

    pub fn control(&self, k: usize) -> Control {
        Control::from_slice(self.controls[k].as_slice())
    }

    pub fn craft_states(&self) -> Vec<State> {
        (0..self.states.len()).map(|k| self.state(k)).collect()
    }

    pub fn positions(&self) -> Vec<[f64; 2]> {
        self.states.iter().map(|s| [s[0], s[1]]).collect()
    }
}

/// A deterministic discrete-time dynamics model.
pub trait Dynamics {
    fn state_dim(&self) -> usize;
    fn control_dim(&self) -> usize;
    fn dt(&self) -> f64;

    /// Advances one step from `x` under `u` at step index `k`.
    fn step(&self, x: &Vector, u: &Vector, k: usize) -> Result<Vector>;

    /// First-order sensitivities of [`Dynamics::step`]. Central differences
    /// unless the model knows better.
    fn jacobians(&self, x: &Vector, u: &Vector, k: usize) -> Result<JacobianPair> {
        fd_jacobians(self, x, u, k)
    }

    /// Second-order sensitivities, differenced from [`Dynamics::jacobians`].
    fn hessian_tensors(&self, x: &Vector, u: &Vector, k: usize) -> Result<HessianTensors> {
        fd_hessian_tensors(self, x, u, k)
    }
}

impl<D: Dynamics + ?Sized> Dynamics for &D {
    fn state_dim(&self) -> usize {
        (**self).state_dim()
    }
    fn control_dim(&self) -> usize {
        (**self).control_dim()
    }
    fn dt(&self) -> f64 {
        (**self).dt()
    }
    fn step(&self, x: &Vector, u: &Vector, k: usize) -> Result<Vector> {
        (**self).step(x, u, k)
    }
    fn jacobians(&self, x: &Vector, u: &Vector, k: usize) -> Result<JacobianPair> {
        (**self).jacobians(x, u, k)
    }
    fn hessian_tensors(&self, x: &Vector, u: &Vector, k: usize) -> Result<HessianTensors> {
        (**self).hessian_tensors(x, u, k)
    }
}

pub(crate) fn check_finite(v: &Vector, step: usize, what: &str) -> Result<()> {
    if v.iter().all(|x| x.is_finite()) {
        Ok(())
    } else {
        Err(Error::numerical(step, format!("non-finite {what}")))
    }
}

/// Runs `controls` open loop from `s0`.
pub fn rollout<D: Dynamics + ?Sized>(model: &D, controls: &[Vector], s0: &Vector) -> Result<Trajectory> {
    if controls.is_empty() {
        return Err(Error::InvalidInput("rollout needs at least one control".into()));
    }
    if s0.len() != model.state_dim() {
        return Err(Error::DimensionMismatch(format!(
            "initial state has {} entries, model expects {}",
            s0.len(),
            model.state_dim()
        )));
    }
    let mut states = Vec::with_capacity(controls.len() + 1);
    states.push(s0.clone());
    for (k, u) in controls.iter().enumerate() {
        if u.len() != model.control_dim() {
            return Err(Error::DimensionMismatch(format!(
                "control {k} has {} entries, model expects {}",
                u.len(),
                model.control_dim()
            )));
        }
        let next = model.step(&states[k], u, k)?;
        states.push(next);
    }
    Trajectory::new(model.dt(), states, controls.to_vec())
}
