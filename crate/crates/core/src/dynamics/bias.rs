use super::{Dynamics, HessianTensors, JacobianPair, Trajectory, Vector};
use crate::error::{Error, Result};

/// Per-step additive state correction, one entry per step of the trajectory
/// that produced it.
#[derive(Debug, Clone, PartialEq)]
pub struct TimeBias {
    biases: Vec<Vector>,
}

impl TimeBias {
    pub fn new(biases: Vec<Vector>) -> Result<Self> {
        if let Some(t) = biases.iter().position(|b| b.iter().any(|v| !v.is_finite())) {
            return Err(Error::numerical(t, "non-finite bias"));
        }
        Ok(Self { biases })
    }

    pub fn zeros(horizon: usize, state_dim: usize) -> Self {
        Self {
            biases: vec![Vector::zeros(state_dim); horizon],
        }
    }

    pub fn len(&self) -> usize {
        self.biases.len()
    }

    pub fn is_empty(&self) -> bool {
        self.biases.is_empty()
    }

    pub fn biases(&self) -> &[Vector] {
        &self.biases
    }

    pub fn get(&self, t: usize) -> Option<&Vector> {
        self.biases.get(t)
    }

    /// Frobenius norm over all steps.
    pub fn norm(&self) -> f64 {
        self.biases.iter().map(|b| b.norm_squared()).sum::<f64>().sqrt()
    }
}

/// `biases[t] = s_{t+1} − f̂_t(s_t, a_t)` along a recorded trajectory.
pub fn compute_bias<D: Dynamics + ?Sized>(model: &D, real: &Trajectory) -> Result<TimeBias> {
    if real.horizon() == 0 {
        return Err(Error::InvalidInput(
            "bias needs a trajectory with at least one step".into(),
        ));
    }
    let states = real.states();
    let biases = real
        .controls()
        .iter()
        .enumerate()
        .map(|(t, u)| Ok(&states[t + 1] - model.step(&states[t], u, t)?))
        .collect::<Result<Vec<_>>>()?;
    TimeBias::new(biases)
}

/// A model shifted by a time-indexed bias. Steps past the end of the bias
/// are unbiased.
#[derive(Debug, Clone)]
pub struct BiasedModel<M> {
    base: M,
    bias: TimeBias,
}

impl<M: Dynamics> BiasedModel<M> {
    pub fn base(&self) -> &M {
        &self.base
    }

    pub fn bias(&self) -> &TimeBias {
        &self.bias
    }
}

pub fn apply_bias<M: Dynamics>(model: M, bias: TimeBias) -> BiasedModel<M> {
    BiasedModel { base: model, bias }
}

impl<M: Dynamics> Dynamics for BiasedModel<M> {
    fn state_dim(&self) -> usize {
        self.base.state_dim()
    }

    fn control_dim(&self) -> usize {
        self.base.control_dim()
    }

    fn dt(&self) -> f64 {
        self.base.dt()
    }

    fn step(&self, x: &Vector, u: &Vector, k: usize) -> Result<Vector> {
        let next = self.base.step(x, u, k)?;
        Ok(match self.bias.get(k) {
            Some(b) => next + b,
            None => next,
        })
    }

    // The bias is constant in (x, u), so derivatives are the base model's.
    fn jacobians(&self, x: &Vector, u: &Vector, k: usize) -> Result<JacobianPair> {
        self.base.jacobians(x, u, k)
    }

    fn hessian_tensors(&self, x: &Vector, u: &Vector, k: usize) -> Result<HessianTensors> {
        self.base.hessian_tensors(x, u, k)
    }
}
