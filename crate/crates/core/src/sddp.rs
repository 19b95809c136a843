//! Value backups for `dx = f(x,u) dt + F(x,u) dω`.
//!
//! This is a kit of expansions rather than an optimizer: discretized
//! linearization `(A, B, Γ)`, the second-order drift remainder, and the
//! expected quadratic value substitution over the Brownian increment
//! `ξ ~ N(0, Σ dt)`. The expectation contributes only the scalar
//! `½ tr(Γᵀ V_xx Γ Σ dt)`, so gains are untouched by additive noise.

use nalgebra::Cholesky;

use crate::ddp::{BackwardPass, GainSchedule, QModel, ValueModel};
use crate::dynamics::{Dynamics, HessianTensors, Matrix, Trajectory, Vector};
use crate::error::{Error, Result};
use crate::task::{CostModel, Stage};

const GRADIENT_REL_STEP: f64 = 1e-6;
const HESSIAN_REL_STEP: f64 = 1e-4;

type DiffusionFn = dyn Fn(&Vector, &Vector) -> Matrix + Send + Sync;

/// Diffusion `F(x, u)` (n×p) and channel covariance `Σ` (p×p).
pub struct NoiseModel {
    diffusion: Box<DiffusionFn>,
    channels: usize,
    sigma: Matrix,
}

impl std::fmt::Debug for NoiseModel {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("NoiseModel")
            .field("channels", &self.channels)
            .field("sigma", &self.sigma)
            .finish_non_exhaustive()
    }
}

impl NoiseModel {
    pub fn new<F>(channels: usize, sigma: Matrix, diffusion: F) -> Result<Self>
    where
        F: Fn(&Vector, &Vector) -> Matrix + Send + Sync + 'static,
    {
        if sigma.shape() != (channels, channels) {
            return Err(Error::DimensionMismatch(format!("Σ must be {channels}x{channels}")));
        }
        if (&sigma - sigma.transpose()).amax() > 1e-12 * (1.0 + sigma.amax()) {
            return Err(Error::InvalidInput("Σ must be symmetric".into()));
        }
        let eig = sigma.clone().symmetric_eigenvalues();
        if eig.iter().any(|&e| e < -1e-12 * (1.0 + sigma.amax())) {
            return Err(Error::InvalidInput("Σ must be positive semidefinite".into()));
        }
        Ok(Self {
            diffusion: Box::new(diffusion),
            channels,
            sigma,
        })
    }

    /// State- and control-independent diffusion with `Σ = I`.
    pub fn additive(f: Matrix) -> Self {
        let p = f.ncols();
        Self {
            diffusion: Box::new(move |_, _| f.clone()),
            channels: p,
            sigma: Matrix::identity(p, p),
        }
    }

    /// `F ≡ 0` with a single dummy channel.
    pub fn noiseless(state_dim: usize) -> Self {
        Self::additive(Matrix::zeros(state_dim, 1))
    }

    pub fn diffusion(&self, x: &Vector, u: &Vector) -> Matrix {
        (self.diffusion)(x, u)
    }

    pub fn channels(&self) -> usize {
        self.channels
    }

    pub fn sigma(&self) -> &Matrix {
        &self.sigma
    }
}

/// `δx' = A δx + B δu + Γ ξ + O_d`.
#[derive(Debug, Clone, PartialEq)]
pub struct StochasticExpansion {
    pub a: Matrix,
    pub b: Matrix,
    pub gamma: Matrix,
    /// Drift Hessians times `dt`; zero unless second order was requested.
    pub remainder_order2: HessianTensors,
}

impl StochasticExpansion {
    pub fn check(&self) -> Result<()> {
        let finite = self
            .a
            .iter()
            .chain(self.b.iter())
            .chain(self.gamma.iter())
            .all(|v| v.is_finite())
            && self.remainder_order2.max_abs().is_finite();
        if finite {
            Ok(())
        } else {
            Err(Error::numerical(0, "non-finite stochastic expansion"))
        }
    }
}

fn rel_step(z: f64, rel: f64) -> f64 {
    rel * z.abs().max(1.0)
}

/// Central-difference derivative of `fun` along coordinate `j` of the joint
/// vector `z = [x; u]`.
fn partial<T, G>(fun: &G, x: &Vector, u: &Vector, j: usize, rel: f64) -> T
where
    G: Fn(&Vector, &Vector) -> T,
    T: std::ops::Sub<Output = T> + std::ops::Div<f64, Output = T>,
{
    let n = x.len();
    let (mut xp, mut xm, mut up, mut um) = (x.clone(), x.clone(), u.clone(), u.clone());
    let width = if j < n {
        let h = rel_step(x[j], rel);
        xp[j] += h;
        xm[j] -= h;
        xp[j] - xm[j]
    } else {
        let h = rel_step(u[j - n], rel);
        up[j - n] += h;
        um[j - n] -= h;
        up[j - n] - um[j - n]
    };
    (fun(&xp, &up) - fun(&xm, &um)) / width
}

/// `[∇_x f  ∇_u f]` by central differences.
fn drift_gradient<G>(drift: &G, x: &Vector, u: &Vector) -> Matrix
where
    G: Fn(&Vector, &Vector) -> Vector,
{
    let n = x.len();
    let nz = n + u.len();
    let mut g = Matrix::zeros(n, nz);
    for j in 0..nz {
        g.set_column(j, &partial(drift, x, u, j, GRADIENT_REL_STEP));
    }
    g
}

/// Discretized first-order expansion around `(x̄, ū)`:
/// `A = I + ∇_x f dt`, `B = ∇_u f dt`, `Γ = ∇_x F·δx + ∇_u F·δu + F`.
pub fn discretize_stochastic<G>(
    drift: &G,
    noise: &NoiseModel,
    x_bar: &Vector,
    u_bar: &Vector,
    dx: &Vector,
    du: &Vector,
    dt: f64,
) -> Result<StochasticExpansion>
where
    G: Fn(&Vector, &Vector) -> Vector,
{
    if !(dt > 0.0) {
        return Err(Error::InvalidInput("dt must be positive".into()));
    }
    let n = x_bar.len();
    let m = u_bar.len();
    if dx.len() != n || du.len() != m {
        return Err(Error::DimensionMismatch(
            "perturbation sizes differ from the nominal".into(),
        ));
    }
    let grad = drift_gradient(drift, x_bar, u_bar);
    let a = Matrix::identity(n, n) + grad.columns(0, n) * dt;
    let b = grad.columns(n, m) * dt;

    let diffusion = |x: &Vector, u: &Vector| noise.diffusion(x, u);
    let mut gamma = noise.diffusion(x_bar, u_bar);
    let deltas = dx.iter().chain(du.iter());
    for (j, &d) in deltas.enumerate() {
        if d != 0.0 {
            gamma += partial(&diffusion, x_bar, u_bar, j, GRADIENT_REL_STEP) * d;
        }
    }
    let out = StochasticExpansion {
        a,
        b,
        gamma,
        remainder_order2: HessianTensors::zeros(n, m),
    };
    out.check()?;
    Ok(out)
}

/// Drift Hessians `∇²f` per output, differenced from central gradients and
/// symmetrized over `[x; u]`.
pub fn drift_hessians<G>(drift: &G, x: &Vector, u: &Vector) -> HessianTensors
where
    G: Fn(&Vector, &Vector) -> Vector,
{
    let n = x.len();
    let m = u.len();
    let nz = n + m;
    let grad = |xx: &Vector, uu: &Vector| drift_gradient(drift, xx, uu);
    // columns[j] = d/dz_j of the n×nz gradient
    let columns: Vec<Matrix> = (0..nz).map(|j| partial(&grad, x, u, j, HESSIAN_REL_STEP)).collect();
    let mut out = HessianTensors::zeros(n, m);
    for i in 0..n {
        let h = Matrix::from_fn(nz, nz, |l, j| columns[j][(i, l)]);
        let sym = (&h + h.transpose()) * 0.5;
        out.f_xx[i] = sym.view((0, 0), (n, n)).into_owned();
        out.f_xu[i] = sym.view((0, n), (n, m)).into_owned();
        out.f_uu[i] = sym.view((n, n), (m, m)).into_owned();
    }
    out
}

/// [`discretize_stochastic`] at `δx = δu = 0` plus the second-order drift
/// remainder `∇²f · dt`. The mixed blocks satisfy `Φ_ux[j] = Φ_xu[j]ᵀ`
/// exactly; read them through [`HessianTensors::f_ux`].
pub fn expand_dynamics_second_order<G>(
    drift: &G,
    noise: &NoiseModel,
    x_bar: &Vector,
    u_bar: &Vector,
    dt: f64,
) -> Result<StochasticExpansion>
where
    G: Fn(&Vector, &Vector) -> Vector,
{
    let zx = Vector::zeros(x_bar.len());
    let zu = Vector::zeros(u_bar.len());
    let mut out = discretize_stochastic(drift, noise, x_bar, u_bar, &zx, &zu, dt)?;
    out.remainder_order2 = drift_hessians(drift, x_bar, u_bar).scaled(dt);
    out.check()?;
    Ok(out)
}

/// `½ tr(Γᵀ V_xx Γ Σ dt)`, the expected quadratic value of the noise term.
pub fn noise_trace_term(v_xx: &Matrix, gamma: &Matrix, sigma: &Matrix, dt: f64) -> f64 {
    0.5 * (gamma.transpose() * v_xx * gamma * sigma).trace() * dt
}

/// `E_ξ[V(x̄' + Aδx + Bδu + Γξ)]` as a quadratic model in `(δx, δu)`.
/// Cost terms are not included.
pub fn stochastic_value_backup(next: &ValueModel, exp: &StochasticExpansion, sigma: &Matrix, dt: f64) -> QModel {
    let at = exp.a.transpose();
    let bt = exp.b.transpose();
    let vxx_a = &next.v_xx * &exp.a;
    let vxx_b = &next.v_xx * &exp.b;
    QModel {
        q0: next.v + noise_trace_term(&next.v_xx, &exp.gamma, sigma, dt),
        q_x: &at * &next.v_x,
        q_u: &bt * &next.v_x,
        q_xx: &at * vxx_a,
        q_xu: &at * &vxx_b,
        q_uu: &bt * vxx_b,
    }
}

/// A full backward sweep whose value substitution is
/// [`stochastic_value_backup`]. `A` and `B` are the discrete model's
/// Jacobians and `Γ = F(x̄_k, ū_k)`; perturbation coupling inside `Γ` is not
/// propagated. Second-order terms are omitted.
pub fn stochastic_backward_pass<D: Dynamics + ?Sized>(
    model: &D,
    cost: &CostModel,
    nominal: &Trajectory,
    noise: &NoiseModel,
    lambda: f64,
) -> Result<BackwardPass> {
    let h = nominal.horizon();
    if h != cost.horizon() {
        return Err(Error::HorizonMismatch {
            expected: cost.horizon(),
            got: h,
        });
    }
    let n = model.state_dim();
    let m = model.control_dim();
    let dt = model.dt();
    let xs = nominal.states();
    let us = nominal.controls();

    let term = cost.quadratize(&xs[h], &Vector::zeros(m), Stage::Terminal);
    let mut values = Vec::with_capacity(h + 1);
    values.push(ValueModel {
        v: term.l,
        v_x: term.l_x,
        v_xx: term.l_xx,
    });
    let mut alphas = Vec::with_capacity(h);
    let mut betas = Vec::with_capacity(h);
    let mut q_models = Vec::with_capacity(h);
    let mut expected = 0.0;

    for k in (0..h).rev() {
        let next = values.last().expect("seeded with the terminal value");
        let jac = model.jacobians(&xs[k], &us[k], k)?;
        let exp = StochasticExpansion {
            a: jac.f_x,
            b: jac.f_u,
            gamma: noise.diffusion(&xs[k], &us[k]),
            remainder_order2: HessianTensors::zeros(n, m),
        };
        let backup = stochastic_value_backup(next, &exp, noise.sigma(), dt);
        let l = cost.quadratize(&xs[k], &us[k], Stage::Running(k));
        let q_uu_raw = l.l_uu + backup.q_uu;
        let q_xx_raw = l.l_xx + backup.q_xx;
        let q = QModel {
            q0: l.l + backup.q0,
            q_x: l.l_x + backup.q_x,
            q_u: l.l_u + backup.q_u,
            q_xx: (&q_xx_raw + q_xx_raw.transpose()) * 0.5,
            q_xu: l.l_xu + backup.q_xu,
            q_uu: (&q_uu_raw + q_uu_raw.transpose()) * 0.5,
        };

        let chol =
            Cholesky::new(&q.q_uu + Matrix::identity(m, m) * lambda).ok_or(Error::NotPositiveDefinite { step: k })?;
        let alpha = -chol.solve(&q.q_u);
        let beta = -chol.solve(&q.q_xu.transpose());

        // V = Q0 + αᵀq_u + ½αᵀQ_uuα and the matching gradient/Hessian
        let quu_alpha = &q.q_uu * &alpha;
        let quu_beta = &q.q_uu * &beta;
        let v = q.q0 + alpha.dot(&q.q_u) + 0.5 * alpha.dot(&quu_alpha);
        let v_x = &q.q_x + &q.q_xu * &alpha + beta.tr_mul(&q.q_u) + beta.tr_mul(&quu_alpha);
        let cross = &q.q_xu * &beta;
        let v_xx = &q.q_xx + &cross + cross.transpose() + beta.tr_mul(&quu_beta);
        expected += 0.5 * alpha.dot(&q.q_u);

        values.push(ValueModel {
            v,
            v_x,
            v_xx: (&v_xx + v_xx.transpose()) * 0.5,
        });
        alphas.push(alpha);
        betas.push(beta);
        q_models.push(q);
    }
    values.reverse();
    alphas.reverse();
    betas.reverse();
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
