use nalgebra::{Matrix6, Matrix6x2, Vector2, Vector6};

use super::{Control, Dynamics, JacobianPair, Matrix, State, Vector, CONTROL_DIM, STATE_DIM};
use crate::error::{Error, Result};

/// Physical parameters of the thrust craft.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CraftParams {
    /// kg
    pub mass: f64,
    /// kg·m²
    pub inertia: f64,
    /// m/s²
    pub gravity: f64,
    /// N·s/m
    pub linear_drag: f64,
    /// N
    pub thrust_max: f64,
    /// N·m
    pub torque_max: f64,
}

impl Default for CraftParams {
    fn default() -> Self {
        Self {
            mass: 1.0,
            inertia: 0.1,
            gravity: 9.8,
            linear_drag: 0.0,
            thrust_max: 30.0,
            torque_max: 5.0,
        }
    }
}

impl CraftParams {
    /// Checks every parameter invariant, naming the first one violated.
    pub fn validate(&self) -> Result<()> {
        let checks = [
            (self.mass > 0.0, "mass > 0"),
            (self.inertia > 0.0, "inertia > 0"),
            (self.gravity >= 0.0, "gravity >= 0"),
            (self.linear_drag >= 0.0, "linear_drag >= 0"),
            (self.thrust_max > 0.0, "thrust_max > 0"),
            (self.torque_max > 0.0, "torque_max > 0"),
        ];
        for (ok, rule) in checks {
            if !ok {
                return Err(Error::InvalidInput(format!("craft parameter violates {rule}")));
            }
        }
        let all = [
            self.mass,
            self.inertia,
            self.gravity,
            self.linear_drag,
            self.thrust_max,
            self.torque_max,
        ];
        if all.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidInput("craft parameters must be finite".into()));
        }
        Ok(())
    }

    /// Thrust that balances gravity at zero tilt.
    pub fn hover_thrust(&self) -> f64 {
        self.mass * self.gravity
    }
}

/// Continuous-time craft dynamics. Thrust acts along the body "up" axis,
/// which is +y when `theta = 0`.
pub fn craft_derivative(state: &State, control: &Control, params: &CraftParams) -> [f64; STATE_DIM] {
    let d = derivative(
        &Vector6::from(state.to_array()),
        &Vector2::new(control.thrust, control.torque),
        params,
    );
    [d[0], d[1], d[2], d[3], d[4], d[5]]
}

fn derivative(x: &Vector6<f64>, u: &Vector2<f64>, p: &CraftParams) -> Vector6<f64> {
    let (s, c) = x[2].sin_cos();
    let f_over_m = u[0] / p.mass;
    let drag = p.linear_drag / p.mass;
    Vector6::new(
        x[3],
        x[4],
        x[5],
        -f_over_m * s - drag * x[3],
        f_over_m * c - p.gravity - drag * x[4],
        u[1] / p.inertia,
    )
}

fn derivative_jacobians(x: &Vector6<f64>, u: &Vector2<f64>, p: &CraftParams) -> (Matrix6<f64>, Matrix6x2<f64>) {
    let (s, c) = x[2].sin_cos();
    let drag = p.linear_drag / p.mass;
    let mut a = Matrix6::zeros();
    a[(0, 3)] = 1.0;
    a[(1, 4)] = 1.0;
    a[(2, 5)] = 1.0;
    a[(3, 2)] = -u[0] / p.mass * c;
    a[(3, 3)] = -drag;
    a[(4, 2)] = -u[0] / p.mass * s;
    a[(4, 4)] = -drag;
    let mut b = Matrix6x2::zeros();
    b[(3, 0)] = -s / p.mass;
    b[(4, 0)] = c / p.mass;
    b[(5, 1)] = 1.0 / p.inertia;
    (a, b)
}

/// The craft integrated with one fixed RK4 step per control interval.
#[derive(Debug, Clone, PartialEq)]
pub struct CraftModel {
    params: CraftParams,
    dt: f64,
}

impl CraftModel {
    pub fn new(params: CraftParams, dt: f64) -> Result<Self> {
        params.validate()?;
        if !(dt > 0.0 && dt.is_finite()) {
            return Err(Error::InvalidInput(format!("dt must be positive, got {dt}")));
        }
        Ok(Self { params, dt })
    }

    pub fn params(&self) -> &CraftParams {
        &self.params
    }

    /// Continuous drift on plain vectors.
    pub fn drift(&self, x: &Vector, u: &Vector) -> Vector {
        let d = derivative(&to6(x), &to2(u), &self.params);
        Vector::from_column_slice(d.as_slice())
    }

    fn rk4(&self, x: &Vector6<f64>, u: &Vector2<f64>) -> Vector6<f64> {
        let p = &self.params;
        let h = self.dt;
        let k1 = derivative(x, u, p);
        let k2 = derivative(&(x + k1 * (0.5 * h)), u, p);
        let k3 = derivative(&(x + k2 * (0.5 * h)), u, p);
        let k4 = derivative(&(x + k3 * h), u, p);
        x + (k1 + k2 * 2.0 + k3 * 2.0 + k4) * (h / 6.0)
    }

    /// Exact derivative of the RK4 map, chained through its four stages.
    fn rk4_jacobians(&self, x: &Vector6<f64>, u: &Vector2<f64>) -> (Matrix6<f64>, Matrix6x2<f64>) {
        let p = &self.params;
        let h = self.dt;
        let eye = Matrix6::identity();

        let k1 = derivative(x, u, p);
        let (a1, b1) = derivative_jacobians(x, u, p);
        let (j1x, j1u) = (a1, b1);

        let x2 = x + k1 * (0.5 * h);
        let k2 = derivative(&x2, u, p);
        let (a2, b2) = derivative_jacobians(&x2, u, p);
        let j2x = a2 * (eye + j1x * (0.5 * h));
        let j2u = a2 * (j1u * (0.5 * h)) + b2;

        let x3 = x + k2 * (0.5 * h);
        let (a3, b3) = derivative_jacobians(&x3, u, p);
        let j3x = a3 * (eye + j2x * (0.5 * h));
        let j3u = a3 * (j2u * (0.5 * h)) + b3;

        let k3 = derivative(&x3, u, p);
        let x4 = x + k3 * h;
        let (a4, b4) = derivative_jacobians(&x4, u, p);
        let j4x = a4 * (eye + j3x * h);
        let j4u = a4 * (j3u * h) + b4;

        let fx = eye + (j1x + j2x * 2.0 + j3x * 2.0 + j4x) * (h / 6.0);
        let fu = (j1u + j2u * 2.0 + j3u * 2.0 + j4u) * (h / 6.0);
        (fx, fu)
    }
}

fn to6(x: &Vector) -> Vector6<f64> {
    assert_eq!(x.len(), STATE_DIM, "craft state must have 6 entries");
    Vector6::from_column_slice(x.as_slice())
}

fn to2(u: &Vector) -> Vector2<f64> {
    assert_eq!(u.len(), CONTROL_DIM, "craft control must have 2 entries");
    Vector2::from_column_slice(u.as_slice())
}

impl Dynamics for CraftModel {
    fn state_dim(&self) -> usize {
        STATE_DIM
    }

    fn control_dim(&self) -> usize {
        CONTROL_DIM
    }

    fn dt(&self) -> f64 {
        self.dt
    }

    fn step(&self, x: &Vector, u: &Vector, k: usize) -> Result<Vector> {
        let next = self.rk4(&to6(x), &to2(u));
        if next.iter().any(|v| !v.is_finite()) {
            return Err(Error::numerical(k, "craft integration produced a non-finite state"));
        }
        Ok(Vector::from_column_slice(next.as_slice()))
    }

    fn jacobians(&self, x: &Vector, u: &Vector, k: usize) -> Result<JacobianPair> {
        let (fx, fu) = self.rk4_jacobians(&to6(x), &to2(u));
        let pair = JacobianPair {
            f_x: Matrix::from_column_slice(6, 6, fx.as_slice()),
            f_u: Matrix::from_column_slice(6, 2, fu.as_slice()),
        };
        pair.check(k)?;
        Ok(pair)
    }
}
