use nalgebra::{Cholesky, DMatrix};

use crate::error::{Error, Result};

/// Gains `K_k` and cost-to-go matrices `P_k` of a finite-horizon LQR with
/// stage cost `xᵀQx + uᵀRu` and terminal cost `xᵀQ_f x`.
#[derive(Debug, Clone, PartialEq)]
pub struct LqrSolution {
    /// `gains[k]` for `k = 0..H`; the optimal control is `u_k = −K_k x_k`.
    pub gains: Vec<DMatrix<f64>>,
    /// `p[k]` for `k = 0..=H`.
    pub p: Vec<DMatrix<f64>>,
}

/// Backward discrete Riccati recursion:
/// `P_H = Q_f`, `K_k = (R + BᵀP_{k+1}B)⁻¹BᵀP_{k+1}A`,
/// `P_k = Q + AᵀP_{k+1}(A − BK_k)`.
pub fn lqr_oracle(
    a: &DMatrix<f64>,
    b: &DMatrix<f64>,
    q: &DMatrix<f64>,
    r: &DMatrix<f64>,
    q_f: &DMatrix<f64>,
    horizon: usize,
) -> Result<LqrSolution> {
    let n = a.nrows();
    let m = b.ncols();
    let dims_ok =
        a.is_square() && b.nrows() == n && q.shape() == (n, n) && q_f.shape() == (n, n) && r.shape() == (m, m);
    if !dims_ok {
        return Err(Error::DimensionMismatch("LQR matrices have inconsistent shapes".into()));
    }
    let mut p = vec![DMatrix::zeros(n, n); horizon + 1];
    let mut gains = vec![DMatrix::zeros(m, n); horizon];
    p[horizon] = q_f.clone();
    for k in (0..horizon).rev() {
        let pn = &p[k + 1];
        let s = r + b.transpose() * pn * b;
        let chol = Cholesky::new(s).ok_or(Error::NotPositiveDefinite { step: k })?;
        let gain = chol.solve(&(b.transpose() * pn * a));
        let pk = q + a.transpose() * pn * (a - b * &gain);
        p[k] = (&pk + pk.transpose()) * 0.5;
        gains[k] = gain;
    }
    Ok(LqrSolution { gains, p })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn one(v: f64) -> DMatrix<f64> {
        DMatrix::from_element(1, 1, v)
    }

    #[test]
    fn zero_input_matrix_gives_zero_gain() {
        let a = DMatrix::from_row_slice(2, 2, &[1.0, 0.1, 0.0, 0.9]);
        let b = DMatrix::zeros(2, 1);
        let q = DMatrix::identity(2, 2);
        let sol = lqr_oracle(&a, &b, &q, &one(1.0), &q, 3).unwrap();
        for k in 0..3 {
            assert_eq!(sol.gains[k], DMatrix::zeros(1, 2));
            let expect = &q + a.transpose() * &sol.p[k + 1] * &a;
            assert!((&sol.p[k] - expect).amax() < 1e-14);
        }
    }

    #[test]
    fn zero_horizon_is_terminal_weight() {
        let q_f = DMatrix::from_row_slice(2, 2, &[2.0, 0.5, 0.5, 1.0]);
        let sol = lqr_oracle(
            &DMatrix::identity(2, 2),
            &DMatrix::zeros(2, 1),
            &DMatrix::identity(2, 2),
            &one(1.0),
            &q_f,
            0,
        )
        .unwrap();
        assert!(sol.gains.is_empty());
        assert_eq!(sol.p[0], q_f);
    }

    #[test]
    fn scalar_hand_case() {
        let sol = lqr_oracle(&one(1.0), &one(1.0), &one(1.0), &one(1.0), &one(1.0), 1).unwrap();
        assert!((sol.gains[0][(0, 0)] - 0.5).abs() < 1e-15);
        assert!((sol.p[0][(0, 0)] - 1.5).abs() < 1e-15);
    }

    #[test]
    fn singular_input_weight_is_an_error() {
        let err = lqr_oracle(&one(1.0), &one(1.0), &one(1.0), &one(0.0), &one(0.0), 1).unwrap_err();
        assert!(matches!(err, Error::NotPositiveDefinite { .. }));
    }
}
