//! Jacobians of QP maps in x-coordinates.
//!
//! With `F_i = x_i exp(phi_i)` and `K = A diag(Q) B` one has
//! `dF_i/dx_j = exp(phi_i) (delta_ij + x_i K_ij / x_j)`, hence
//! `J = diag(exp(phi)) D_x (I + K) D_x^-1` and
//! `det J = exp(sum_i phi_i) det(I + K)`. The determinant is evaluated through
//! the second form: `I + K` is usually far better scaled than `J`.

use nalgebra::DMatrix;
use serde::Serialize;

use crate::classify::omega_sum;
use crate::error::{QpError, Result};
use crate::map::{QPMap, State};
use crate::scalar::{Scalar, EPS_STRUCT};

/// Relative central-difference step.
pub const DEFAULT_FD_STEP: f64 = 1e-6;

#[derive(Clone, Debug)]
pub struct JacobianEval {
    pub j: DMatrix<f64>,
    pub det: f64,
    pub k: DMatrix<f64>,
    /// The evaluation point in x-coordinates.
    pub x: Vec<f64>,
}

impl JacobianEval {
    /// `phi_ij = d phi_i / d x_j = K_ij / x_j`.
    pub fn phi(&self) -> DMatrix<f64> {
        let n = self.x.len();
        DMatrix::from_fn(n, n, |i, j| self.k[(i, j)] / self.x[j])
    }
}

pub fn analytic_jacobian(map: &QPMap, s: &State) -> Result<JacobianEval> {
    let n = map.n();
    let m = map.m();
    let q = map.eval_quasimonomials(s)?;
    let phi = map.increments(s)?;
    if let Some(i) = phi.iter().position(|p| !(*p <= map.overflow_guard())) {
        return Err(QpError::OverflowGuard {
            index: i,
            exponent: phi[i],
        });
    }
    let x = s.x();
    let k = DMatrix::from_fn(n, n, |i, jj| {
        (0..m).map(|p| map.a_f64(i, p) * q[p] * map.b_f64(p, jj)).sum::<f64>()
    });
    let j = DMatrix::from_fn(n, n, |i, jj| {
        let delta = if i == jj { 1.0 } else { 0.0 };
        phi[i].exp() * (delta + x[i] * k[(i, jj)] / x[jj])
    });

    // sum_i phi_i regrouped as sum(lambda) + sum_p colsum(A)_p Q_p
    let trace_phi: f64 = map.lambda_f64().iter().sum::<f64>()
        + (0..m)
            .map(|p| (0..n).map(|i| map.a_f64(i, p)).sum::<f64>() * q[p])
            .sum::<f64>();
    let ipk = DMatrix::<f64>::identity(n, n) + &k;
    let det = trace_phi.exp() * ipk.lu().determinant();
    if !det.is_finite() {
        return Err(QpError::OverflowGuard {
            index: 0,
            exponent: trace_phi,
        });
    }
    Ok(JacobianEval { j, det, k, x })
}

/// Central differences of `F` in x-coordinates with step
/// `h_j = rel_step * max(1, |x_j|)` (capped at `x_j / 2` to stay positive).
pub fn fd_jacobian(map: &QPMap, s: &State, rel_step: f64) -> Result<DMatrix<f64>> {
    if !(rel_step > 0.0) {
        return Err(QpError::InvalidParameter("finite-difference step must be positive".into()));
    }
    let n = map.n();
    let x = s.x();
    let image = |pt: &[f64]| -> Result<Vec<f64>> { Ok(map.step(&State::from_x(pt)?)?.x()) };
    let mut jac = DMatrix::zeros(n, n);
    for col in 0..n {
        let h = (rel_step * x[col].abs().max(1.0)).min(0.5 * x[col]);
        let mut plus = x.clone();
        let mut minus = x.clone();
        plus[col] += h;
        minus[col] -= h;
        let (fp, fm) = (image(&plus)?, image(&minus)?);
        let width = plus[col] - minus[col];
        for row in 0..n {
            jac[(row, col)] = (fp[row] - fm[row]) / width;
        }
    }
    Ok(jac)
}

/// Coefficients of the n = 3 determinant as a quasipolynomial:
///
/// `det J = exp(lambda_sum) * (1 + sum_i linear_i Q_i + sum_{k<l} quadratic_kl Q_k Q_l)`
///
/// valid whenever every column of `A` sums to zero (then `rank K <= 2` and
/// the cubic term vanishes).
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Delta3Expansion {
    pub constant: Scalar,
    /// `A_1i B_i1 + A_2i B_i2 + A_3i B_i3`.
    pub linear_coeffs: Vec<Scalar>,
    /// `((k, l), Omega_12kl + Omega_13kl + Omega_23kl)` for `k < l`, 0-based.
    pub quadratic_coeffs: Vec<((usize, usize), Scalar)>,
    pub lambda_sum: Scalar,
}

impl Delta3Expansion {
    /// Value of the expansion for quasimonomial values `q`.
    pub fn evaluate(&self, q: &[f64]) -> f64 {
        let lin: f64 = self
            .linear_coeffs
            .iter()
            .zip(q)
            .map(|(c, qi)| c.to_f64() * qi)
            .sum();
        let quad: f64 = self
            .quadratic_coeffs
            .iter()
            .map(|((k, l), c)| c.to_f64() * q[*k] * q[*l])
            .sum();
        (self.constant.to_f64() + lin + quad) * self.lambda_sum.to_f64().exp()
    }

    pub fn evaluate_at(&self, map: &QPMap, s: &State) -> Result<f64> {
        Ok(self.evaluate(&map.eval_quasimonomials(s)?))
    }

    /// True when the expansion is identically 1.
    pub fn is_identically_one(&self, eps: f64) -> bool {
        self.lambda_sum.is_zero_tol(eps)
            && self.linear_coeffs.iter().all(|c| c.is_zero_tol(eps))
            && self.quadratic_coeffs.iter().all(|(_, c)| c.is_zero_tol(eps))
    }
}

pub fn delta3_expansion(map: &QPMap) -> Result<Delta3Expansion> {
    delta3_expansion_with(map, EPS_STRUCT)
}

pub fn delta3_expansion_with(map: &QPMap, eps: f64) -> Result<Delta3Expansion> {
    if map.n() != 3 {
        return Err(QpError::WrongDimension {
            expected: 3,
            got: map.n(),
        });
    }
    let (a, b, m) = (map.a(), map.b(), map.m());
    for j in 0..m {
        let s: Scalar = (0..3).map(|i| a.get(i, j).clone()).sum();
        if !s.is_zero_tol(eps) {
            return Err(QpError::ConditionTwoViolated(j));
        }
    }
    let linear_coeffs = (0..m)
        .map(|p| (0..3).map(|i| a.get(i, p) * b.get(p, i)).sum())
        .collect();
    let mut quadratic_coeffs = Vec::new();
    for k in 0..m {
        for l in k + 1..m {
            quadratic_coeffs.push(((k, l), omega_sum(map, k, l)));
        }
    }
    Ok(Delta3Expansion {
        constant: Scalar::one(),
        linear_coeffs,
        quadratic_coeffs,
        lambda_sum: map.lambda().iter().sum(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::families::make_example1;
    use crate::matrix::Matrix;

    #[test]
    fn identity_map() {
        let map = QPMap::from_components(vec![Scalar::zero(); 2], Matrix::zeros(2, 0), Matrix::zeros(0, 2)).unwrap();
        let ev = analytic_jacobian(&map, &State::from_x(&[0.3, 4.0]).unwrap()).unwrap();
        assert_eq!(ev.j, DMatrix::identity(2, 2));
        assert_eq!(ev.det, 1.0);
        let fd = fd_jacobian(&map, &State::from_x(&[0.3, 4.0]).unwrap(), DEFAULT_FD_STEP).unwrap();
        assert!((fd - DMatrix::<f64>::identity(2, 2)).amax() <= 1e-10);
    }

    #[test]
    fn scalar_map_derivative() {
        // F(x) = x e^x, F'(1) = 2e
        let map = QPMap::from_components(vec![Scalar::zero()], Matrix::from_i64(&[&[1]]), Matrix::from_i64(&[&[1]])).unwrap();
        let s = State::from_x(&[1.0]).unwrap();
        let ev = analytic_jacobian(&map, &s).unwrap();
        let e = std::f64::consts::E;
        assert!((ev.det - 2.0 * e).abs() < 1e-14);
        assert!((ev.j[(0, 0)] - 2.0 * e).abs() < 1e-14);
        let fd = fd_jacobian(&map, &s, DEFAULT_FD_STEP).unwrap();
        assert!((fd[(0, 0)] - 2.0 * e).abs() < 1e-6);
    }

    #[test]
    fn example1_unit_determinant() {
        let map = make_example1(Scalar::real(0.1), Scalar::real(-0.05), Scalar::real(0.7)).unwrap();
        let ev = analytic_jacobian(&map, &State::from_x(&[1.0, 1.0, 1.0]).unwrap()).unwrap();
        assert!((ev.det - 1.0).abs() < 1e-14);
        assert!((ev.j.determinant() - 1.0).abs() < 1e-12);
        let exp = delta3_expansion(&map).unwrap();
        assert!(exp.is_identically_one(EPS_STRUCT));
    }

    #[test]
    fn expansion_requires_balanced_columns() {
        let map = QPMap::from_components(vec![Scalar::zero(); 3], Matrix::identity(3), Matrix::identity(3)).unwrap();
        assert_eq!(delta3_expansion(&map), Err(QpError::ConditionTwoViolated(0)));
        let two = QPMap::from_components(vec![Scalar::zero(); 2], Matrix::zeros(2, 0), Matrix::zeros(0, 2)).unwrap();
        assert!(matches!(delta3_expansion(&two), Err(QpError::WrongDimension { .. })));
    }

    #[test]
    fn lv_linear_coefficient() {
        // B = I, columns of A sum to zero, A11 = 1
        let a = Matrix::from_i64(&[&[1, 1, 0], &[-1, -2, 1], &[0, 1, -1]]);
        let map = QPMap::from_components(vec![Scalar::zero(); 3], a, Matrix::identity(3)).unwrap();
        let exp = delta3_expansion(&map).unwrap();
        assert_eq!(exp.linear_coeffs[0], Scalar::one());
    }

    #[test]
    fn overflow_is_reported() {
        let map = QPMap::from_components(vec![Scalar::zero()], Matrix::from_i64(&[&[1]]), Matrix::from_i64(&[&[1]])).unwrap();
        let s = State::from_log(vec![7.0]).unwrap(); // phi = e^7 > 700
        assert!(matches!(analytic_jacobian(&map, &s), Err(QpError::OverflowGuard { .. })));
    }
}
