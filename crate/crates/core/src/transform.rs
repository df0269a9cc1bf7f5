//! Quasimonomial transformations (QMTs).
//!
//! A QMT with invertible matrix `C` is the change of variables
//! `x_i = prod_j y_j^C_ij`, i.e. `u_x = C u_y` in log-coordinates. It maps a
//! QP map `(lambda, A, B)` to `(C^-1 lambda, C^-1 A, B C)`, so `B M` is
//! unchanged and the two maps are conjugate.

use serde::Serialize;

use crate::error::{QpError, Result};
use crate::map::{canonicalize_logged, CanonEvent, MapParts, QPMap, State};
use crate::matrix::Matrix;
use crate::scalar::{Scalar, EPS_STRUCT};

#[derive(Clone, Debug, PartialEq)]
pub struct Qmt {
    c: Matrix,
    c_inv: Matrix,
    c_f: Vec<f64>,
    c_inv_f: Vec<f64>,
}

impl Qmt {
    /// Fails with `SingularC` (or `IllConditioned` for double matrices).
    pub fn new(c: Matrix) -> Result<Self> {
        let c_inv = c.inverse()?;
        Ok(Self::from_pair(c, c_inv))
    }

    /// Builds the QMT whose inverse matrix is `c_inv`.
    pub fn from_inverse(c_inv: Matrix) -> Result<Self> {
        let c = c_inv.inverse()?;
        Ok(Self::from_pair(c, c_inv))
    }

    fn from_pair(c: Matrix, c_inv: Matrix) -> Self {
        let c_f = c.entries().map(Scalar::to_f64).collect();
        let c_inv_f = c_inv.entries().map(Scalar::to_f64).collect();
        Qmt {
            c,
            c_inv,
            c_f,
            c_inv_f,
        }
    }

    pub fn identity(n: usize) -> Self {
        Self::from_pair(Matrix::identity(n), Matrix::identity(n))
    }

    /// `C = C^-1 = [[1, 1], [0, -1]]`: `y1 = x1 x2`, `y2 = 1/x2`.
    pub fn two_dim_splitting() -> Self {
        let c = Matrix::from_i64(&[&[1, 1], &[0, -1]]);
        Self::from_pair(c.clone(), c)
    }

    /// `C^-1` is the identity with its last row replaced by ones, so the last
    /// new coordinate is `y_n = x_1 x_2 ... x_n`.
    pub fn product_foliation(n: usize) -> Self {
        assert!(n >= 1);
        let mut c_inv = Matrix::identity(n);
        let mut c = Matrix::identity(n);
        for k in 0..n - 1 {
            c_inv.set(n - 1, k, Scalar::one());
            c.set(n - 1, k, Scalar::int(-1));
        }
        Self::from_pair(c, c_inv)
    }

    pub fn n(&self) -> usize {
        self.c.rows()
    }

    pub fn c(&self) -> &Matrix {
        &self.c
    }

    pub fn c_inv(&self) -> &Matrix {
        &self.c_inv
    }

    pub fn is_exact(&self) -> bool {
        self.c.is_exact() && self.c_inv.is_exact()
    }
}

fn mat_vec_f64(m: &[f64], v: &[f64]) -> Vec<f64> {
    let n = v.len();
    (0..n)
        .map(|i| (0..n).map(|j| m[i * n + j] * v[j]).sum())
        .collect()
}

fn check_dims(map_n: usize, t: &Qmt) -> Result<()> {
    if map_n != t.n() {
        return Err(QpError::DimensionMismatch(format!(
            "QMT has dimension {}, map has n = {map_n}",
            t.n()
        )));
    }
    Ok(())
}

/// `A' = C^-1 A`, `B' = B C`, `lambda' = C^-1 lambda` before canonicalization.
pub fn transformed_parts(map: &QPMap, t: &Qmt) -> Result<MapParts> {
    check_dims(map.n(), t)?;
    let lambda = t.c_inv.mul_vec(map.lambda());
    let a = t.c_inv.mul(map.a());
    let b = map.b().mul(&t.c);
    MapParts::new(map.n(), map.m(), lambda, a, b)
}

/// Transforms and canonicalizes; the events list records any merged, folded or
/// dropped quasimonomials.
pub fn apply_qmt_logged(map: &QPMap, t: &Qmt) -> Result<(QPMap, Vec<CanonEvent>)> {
    Ok(canonicalize_logged(transformed_parts(map, t)?, EPS_STRUCT))
}

pub fn apply_qmt(map: &QPMap, t: &Qmt) -> Result<QPMap> {
    apply_qmt_logged(map, t).map(|(m, _)| m)
}

/// New coordinates to old: `u_x = C u_y`.
pub fn transform_state(t: &Qmt, y: &State) -> Result<State> {
    check_dims(y.dim(), t)?;
    State::from_log(mat_vec_f64(&t.c_f, y.log()))
}

/// Old coordinates to new: `u_y = C^-1 u_x`.
pub fn inverse_transform_state(t: &Qmt, x: &State) -> Result<State> {
    check_dims(x.dim(), t)?;
    State::from_log(mat_vec_f64(&t.c_inv_f, x.log()))
}

/// The QMT equivalent to applying `t2` first and then `t1`:
/// `apply_qmt(&apply_qmt(map, t2), t1) == apply_qmt(map, &compose(t1, t2))`.
///
/// With `u_x = C2 u_y` and `u_y = C1 u_z` the composite matrix is `C2 C1`.
pub fn compose(t1: &Qmt, t2: &Qmt) -> Result<Qmt> {
    if t1.n() != t2.n() {
        return Err(QpError::DimensionMismatch(format!(
            "cannot compose QMTs of dimension {} and {}",
            t1.n(),
            t2.n()
        )));
    }
    Ok(Qmt::from_pair(t2.c.mul(&t1.c), t1.c_inv.mul(&t2.c_inv)))
}

/// `B M`, i.e. the columns `B lambda` and `B A`; an `m x (m+1)` matrix.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ClassInvariant {
    pub bm: Matrix,
}

pub fn class_invariant(map: &QPMap) -> ClassInvariant {
    ClassInvariant {
        bm: map.b().mul(&map.m_matrix()),
    }
}

/// Iterates `map` from `s0` and the transformed map from `C^-1 u(s0)`, and
/// returns `max_t || u_x(t) - C u_y(t) ||_inf`.
pub fn check_conjugacy(map: &QPMap, t: &Qmt, s0: &State, steps: usize) -> Result<f64> {
    let image = apply_qmt(map, t)?;
    let y0 = inverse_transform_state(t, s0)?;
    let direct = map.iterate(s0, steps)?;
    let pulled = image.iterate(&y0, steps)?;
    let mut dev: f64 = 0.0;
    for (x, y) in direct.states.iter().zip(&pulled.states) {
        let back = transform_state(t, y)?;
        dev = dev.max(x.max_log_deviation(&back));
    }
    Ok(dev)
}
