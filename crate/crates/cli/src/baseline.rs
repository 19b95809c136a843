//! Scripted comparison pilot: a proportional-derivative waypoint follower.
//!
//! It is a plain hand-tuned tracking controller run on the true system, not a
//! model of any human pilot. At each step it asks for the acceleration
//!
//! ```text
//! a = kp (p_ref - p) + kd (v_ref - v) + (0, g)
//! ```
//!
//! tilts the body axis toward `a` with a PD attitude loop and sets the thrust
//! to the component of `m a` along the current body axis.

use craftlearn::dynamics::{Control, CraftModel, CraftParams, Dynamics, State, Trajectory, Vector};
use craftlearn::metrics::collision_error;
use craftlearn::task::{ControlLimits, DeckGeometry, ReferenceTrajectory};

use crate::error::Result;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BaselineGains {
    /// Position gain, 1/s².
    pub kp: f64,
    /// Velocity gain, 1/s.
    pub kd: f64,
    pub k_theta: f64,
    pub k_omega: f64,
}

impl Default for BaselineGains {
    fn default() -> Self {
        Self {
            kp: 2.0,
            kd: 2.5,
            k_theta: 60.0,
            k_omega: 15.0,
        }
    }
}

#[derive(Debug, Clone)]
pub struct BaselineRun {
    pub tape: Vec<Vector>,
    pub trajectory: Trajectory,
    /// First state index touching the deck, if any.
    pub collision: Option<usize>,
}

/// PD control for state `s` chasing `target`, saturated at the actuator limits.
pub fn pd_control(s: &State, target: &State, params: &CraftParams, gains: &BaselineGains) -> Control {
    let ax = gains.kp * (target.x - s.x) + gains.kd * (target.vx - s.vx);
    let ay = gains.kp * (target.y - s.y) + gains.kd * (target.vy - s.vy) + params.gravity;
    let theta_des = (-ax).atan2(ay);
    // body axis (-sin θ, cos θ)
    let along = -ax * s.theta.sin() + ay * s.theta.cos();
    let thrust = (params.mass * along).clamp(0.0, params.thrust_max);
    let err = wrap_angle(theta_des - s.theta);
    let torque =
        (params.inertia * (gains.k_theta * err - gains.k_omega * s.omega)).clamp(-params.torque_max, params.torque_max);
    Control::new(thrust, torque)
}

fn wrap_angle(a: f64) -> f64 {
    let two_pi = std::f64::consts::TAU;
    a - two_pi * ((a + std::f64::consts::PI) / two_pi).floor()
}

/// Closes the loop on the true system over the whole reference horizon.
pub fn baseline_controller(
    params: &CraftParams,
    reference: &ReferenceTrajectory,
    s0: &State,
    deck: Option<&DeckGeometry>,
    gains: &BaselineGains,
) -> Result<BaselineRun> {
    let model = CraftModel::new(*params, reference.dt)?;
    let limits = ControlLimits::for_craft(params);
    let h = reference.horizon();
    let mut states = Vec::with_capacity(h + 1);
    let mut tape = Vec::with_capacity(h);
    states.push(s0.to_vector());
    for k in 0..h {
        let s = State::from_slice(states[k].as_slice());
        // aim one step ahead so the command is in phase with the target
        let u = limits.clamp(&pd_control(&s, &reference.targets[k + 1], params, gains).to_vector());
        let next = model.step(&states[k], &u, k)?;
        tape.push(u);
        states.push(next);
    }
    let trajectory = Trajectory::new(model.dt(), states, tape.clone())?;
    let collision = deck.and_then(|d| collision_error(&trajectory, d).first_index);
    Ok(BaselineRun {
        tape,
        trajectory,
        collision,
    })
}
