use super::{Dynamics, Matrix, Vector};
use crate::error::{Error, Result};

const JACOBIAN_REL_STEP: f64 = 1e-6;
const HESSIAN_REL_STEP: f64 = 1e-4;

/// `f_x` (n×n) and `f_u` (n×m) of one discrete step.
#[derive(Debug, Clone, PartialEq)]
pub struct JacobianPair {
    pub f_x: Matrix,
    pub f_u: Matrix,
}

impl JacobianPair {
    pub(crate) fn check(&self, step: usize) -> Result<()> {
        if self.f_x.iter().chain(self.f_u.iter()).all(|v| v.is_finite()) {
            Ok(())
        } else {
            Err(Error::numerical(step, "non-finite Jacobian entry"))
        }
    }
}

/// Second derivatives of a step, one slice per output component `i`:
/// `f_xx[i]` is n×n, `f_xu[i]` is n×m and `f_uu[i]` is m×m.
#[derive(Debug, Clone, PartialEq)]
pub struct HessianTensors {
    pub f_xx: Vec<Matrix>,
    pub f_xu: Vec<Matrix>,
    pub f_uu: Vec<Matrix>,
}

impl HessianTensors {
    pub fn zeros(n: usize, m: usize) -> Self {
        Self {
            f_xx: vec![Matrix::zeros(n, n); n],
            f_xu: vec![Matrix::zeros(n, m); n],
            f_uu: vec![Matrix::zeros(m, m); n],
        }
    }

    pub fn scaled(&self, factor: f64) -> Self {
        let scale = |v: &[Matrix]| v.iter().map(|m| m * factor).collect();
        Self {
            f_xx: scale(&self.f_xx),
            f_xu: scale(&self.f_xu),
            f_uu: scale(&self.f_uu),
        }
    }

    /// `f_ux[i] = f_xu[i]ᵀ`.
    pub fn f_ux(&self) -> Vec<Matrix> {
        self.f_xu.iter().map(|m| m.transpose()).collect()
    }

    pub fn max_abs(&self) -> f64 {
        self.f_xx
            .iter()
            .chain(&self.f_xu)
            .chain(&self.f_uu)
            .map(|m| m.amax())
            .fold(0.0, f64::max)
    }
}

/// Tensor contraction `(a * b)_{jk} = a_i b_{ijk}`.
pub fn contract(a: &Vector, b: &[Matrix]) -> Matrix {
    assert_eq!(a.len(), b.len(), "contraction length mismatch");
    let (r, c) = b.first().map(|m| m.shape()).unwrap_or((0, 0));
    b.iter()
        .zip(a.iter())
        .fold(Matrix::zeros(r, c), |acc, (slice, &w)| acc + slice * w)
}

fn rel_step(z: f64, rel: f64) -> f64 {
    rel * z.abs().max(1.0)
}

/// Central-difference Jacobians of `model.step`, perturbing each coordinate
/// by `1e-6 * max(1, |z_i|)`.
pub fn fd_jacobians<D: Dynamics + ?Sized>(model: &D, x: &Vector, u: &Vector, k: usize) -> Result<JacobianPair> {
    let n = model.state_dim();
    let m = model.control_dim();
    let mut f_x = Matrix::zeros(n, n);
    let mut f_u = Matrix::zeros(n, m);
    for j in 0..n {
        let h = rel_step(x[j], JACOBIAN_REL_STEP);
        let (mut xp, mut xm) = (x.clone(), x.clone());
        xp[j] += h;
        xm[j] -= h;
        let col = (model.step(&xp, u, k)? - model.step(&xm, u, k)?) / (xp[j] - xm[j]);
        f_x.set_column(j, &col);
    }
    for j in 0..m {
        let h = rel_step(u[j], JACOBIAN_REL_STEP);
        let (mut up, mut um) = (u.clone(), u.clone());
        up[j] += h;
        um[j] -= h;
        let col = (model.step(x, &up, k)? - model.step(x, &um, k)?) / (up[j] - um[j]);
        f_u.set_column(j, &col);
    }
    let pair = JacobianPair { f_x, f_u };
    pair.check(k)?;
    Ok(pair)
}

/// Central differences of `model.jacobians` with relative step `1e-4`,
/// symmetrized over the joint (x, u) Hessian of every output.
pub fn fd_hessian_tensors<D: Dynamics + ?Sized>(model: &D, x: &Vector, u: &Vector, k: usize) -> Result<HessianTensors> {
    let n = model.state_dim();
    let m = model.control_dim();
    let nz = n + m;
    // raw[i] holds d(J_i,l)/dz_j at (l, j), J = [f_x f_u].
    let mut raw = vec![Matrix::zeros(nz, nz); n];
    for j in 0..nz {
        let (mut xp, mut xm, mut up, mut um) = (x.clone(), x.clone(), u.clone(), u.clone());
        let width = if j < n {
            let h = rel_step(x[j], HESSIAN_REL_STEP);
            xp[j] += h;
            xm[j] -= h;
            xp[j] - xm[j]
        } else {
            let h = rel_step(u[j - n], HESSIAN_REL_STEP);
            up[j - n] += h;
            um[j - n] -= h;
            up[j - n] - um[j - n]
        };
        let jp = model.jacobians(&xp, &up, k)?;
        let jm = model.jacobians(&xm, &um, k)?;
        for (i, slice) in raw.iter_mut().enumerate() {
            for l in 0..nz {
                let (a, b) = if l < n {
                    (jp.f_x[(i, l)], jm.f_x[(i, l)])
                } else {
                    (jp.f_u[(i, l - n)], jm.f_u[(i, l - n)])
                };
                slice[(l, j)] = (a - b) / width;
            }
        }
    }
    let mut out = HessianTensors::zeros(n, m);
    for (i, h) in raw.into_iter().enumerate() {
        let sym = (&h + h.transpose()) * 0.5;
        if sym.iter().any(|v| !v.is_finite()) {
            return Err(Error::numerical(k, "non-finite Hessian entry"));
        }
        out.f_xx[i] = sym.view((0, 0), (n, n)).into_owned();
        out.f_xu[i] = sym.view((0, n), (n, m)).into_owned();
        out.f_uu[i] = sym.view((n, n), (m, m)).into_owned();
    }
    Ok(out)
}
