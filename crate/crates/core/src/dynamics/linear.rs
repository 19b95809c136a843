use super::{Dynamics, JacobianPair, Matrix, Vector};
use crate::error::{Error, Result};

/// `x_{k+1} = A x_k + B u_k`.
#[derive(Debug, Clone, PartialEq)]
pub struct LinearDynamics {
    a: Matrix,
    b: Matrix,
    dt: f64,
}

impl LinearDynamics {
    pub fn new(a: Matrix, b: Matrix, dt: f64) -> Result<Self> {
        if !a.is_square() || b.nrows() != a.nrows() {
            return Err(Error::DimensionMismatch(format!(
                "A is {}x{}, B is {}x{}",
                a.nrows(),
                a.ncols(),
                b.nrows(),
                b.ncols()
            )));
        }
        if !(dt > 0.0) {
            return Err(Error::InvalidInput("dt must be positive".into()));
        }
        Ok(Self { a, b, dt })
    }

    /// Exact zero-order-hold discretization of a double integrator.
    pub fn double_integrator(dt: f64) -> Self {
        let a = Matrix::from_row_slice(2, 2, &[1.0, dt, 0.0, 1.0]);
        let b = Matrix::from_row_slice(2, 1, &[0.5 * dt * dt, dt]);
        Self { a, b, dt }
    }

    pub fn a(&self) -> &Matrix {
        &self.a
    }

    pub fn b(&self) -> &Matrix {
        &self.b
    }
}

impl Dynamics for LinearDynamics {
    fn state_dim(&self) -> usize {
        self.a.nrows()
    }

    fn control_dim(&self) -> usize {
        self.b.ncols()
    }

    fn dt(&self) -> f64 {
        self.dt
    }

    fn step(&self, x: &Vector, u: &Vector, k: usize) -> Result<Vector> {
        let next = &self.a * x + &self.b * u;
        super::check_finite(&next, k, "linear step")?;
        Ok(next)
    }

    fn jacobians(&self, _x: &Vector, _u: &Vector, _k: usize) -> Result<JacobianPair> {
        Ok(JacobianPair {
            f_x: self.a.clone(),
            f_u: self.b.clone(),
        })
    }
}
