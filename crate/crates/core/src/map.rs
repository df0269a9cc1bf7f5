//! Quasipolynomial maps
//!
//! ```text
//! x_i(t+1) = x_i(t) * exp(lambda_i + sum_j A_ij * Q_j(x(t))),   Q_j(x) = prod_k x_k^B_jk
//! ```
//!
//! States are stored in log-coordinates `u = ln x`, where one step is
//! `u' = u + lambda + A * exp(B * u)`. The positive orthant is then invariant
//! by construction and products of powers never have to be formed explicitly.

use std::collections::hash_map::DefaultHasher;
use std::hash::{Hash, Hasher};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{QpError, Result};
use crate::matrix::Matrix;
use crate::scalar::{Scalar, EPS_STRUCT};

/// Largest `|(B u)_j|` accepted before `exp` would leave the double range.
pub const DEFAULT_OVERFLOW_GUARD: f64 = 700.0;

/// A dimension-consistent but otherwise unchecked `(lambda, A, B)` triple.
///
/// This is the input of [`QPMap::validate`] and of [`canonicalize`]; it may
/// contain zero or duplicate rows of `B` and zero columns of `A`.
#[derive(Clone, Debug, PartialEq)]
pub struct MapParts {
    pub lambda: Vec<Scalar>,
    pub a: Matrix,
    pub b: Matrix,
}

impl MapParts {
    pub fn new(n: usize, m: usize, lambda: Vec<Scalar>, a: Matrix, b: Matrix) -> Result<Self> {
        if n == 0 {
            return Err(QpError::DimensionMismatch("n must be positive".into()));
        }
        if lambda.len() != n {
            return Err(QpError::DimensionMismatch(format!(
                "lambda has length {}, expected n = {n}",
                lambda.len()
            )));
        }
        // an empty A/B deserializes as 0x0; accept it as n x 0 / 0 x n when m = 0
        let a = if m == 0 && a.rows() * a.cols() == 0 {
            Matrix::zeros(n, 0)
        } else {
            a
        };
        let b = if m == 0 && b.rows() * b.cols() == 0 {
            Matrix::zeros(0, n)
        } else {
            b
        };
        if a.rows() != n || a.cols() != m {
            return Err(QpError::DimensionMismatch(format!(
                "A is {}x{}, expected {n}x{m}",
                a.rows(),
                a.cols()
            )));
        }
        if b.rows() != m || b.cols() != n {
            return Err(QpError::DimensionMismatch(format!(
                "B is {}x{}, expected {m}x{n}",
                b.rows(),
                b.cols()
            )));
        }
        Ok(MapParts { lambda, a, b })
    }

    pub fn n(&self) -> usize {
        self.lambda.len()
    }

    pub fn m(&self) -> usize {
        self.a.cols()
    }
}

/// A validated quasipolynomial map. Immutable once built.
#[derive(Clone, Debug)]
pub struct QPMap {
    parts: MapParts,
    guard: f64,
    lambda_f: Vec<f64>,
    a_f: Vec<f64>,
    b_f: Vec<f64>,
}

impl PartialEq for QPMap {
    fn eq(&self, other: &Self) -> bool {
        self.parts == other.parts
    }
}

impl QPMap {
    /// Checks every map invariant and freezes the map.
    ///
    /// Rejects zero columns of `A`, zero rows of `B` and repeated rows of `B`;
    /// double entries are compared with the absolute tolerance `eps`.
    pub fn validate_with(parts: MapParts, eps: f64) -> Result<Self> {
        let (n, m) = (parts.n(), parts.m());
        if parts.lambda.iter().any(|x| !x.is_finite()) {
            return Err(QpError::NonFiniteEntry("lambda".into()));
        }
        if parts.a.entries().any(|x| !x.is_finite()) {
            return Err(QpError::NonFiniteEntry("A".into()));
        }
        if parts.b.entries().any(|x| !x.is_finite()) {
            return Err(QpError::NonFiniteEntry("B".into()));
        }
        for j in 0..m {
            if (0..n).all(|i| parts.a.get(i, j).is_zero_tol(eps)) {
                return Err(QpError::ZeroColumnInA(j));
            }
        }
        for j in 0..m {
            if parts.b.row(j).iter().all(|x| x.is_zero_tol(eps)) {
                return Err(QpError::ZeroRowInB(j));
            }
        }
        for j in 0..m {
            for k in j + 1..m {
                if rows_equal(parts.b.row(j), parts.b.row(k), eps) {
                    return Err(QpError::DuplicateBRows(j, k));
                }
            }
        }
        Ok(Self::freeze(parts))
    }

    pub fn validate(parts: MapParts) -> Result<Self> {
        Self::validate_with(parts, EPS_STRUCT)
    }

    /// Validates raw components in one go.
    pub fn from_components(lambda: Vec<Scalar>, a: Matrix, b: Matrix) -> Result<Self> {
        let n = lambda.len();
        let m = a.cols();
        Self::validate(MapParts::new(n, m, lambda, a, b)?)
    }

    fn freeze(parts: MapParts) -> Self {
        let lambda_f = parts.lambda.iter().map(Scalar::to_f64).collect();
        let a_f = parts.a.entries().map(Scalar::to_f64).collect();
        let b_f = parts.b.entries().map(Scalar::to_f64).collect();
        QPMap {
            parts,
            guard: DEFAULT_OVERFLOW_GUARD,
            lambda_f,
            a_f,
            b_f,
        }
    }

    pub fn with_overflow_guard(mut self, guard: f64) -> Self {
        self.guard = guard;
        self
    }

    pub fn overflow_guard(&self) -> f64 {
        self.guard
    }

    pub fn n(&self) -> usize {
        self.parts.n()
    }

    pub fn m(&self) -> usize {
        self.parts.m()
    }

    pub fn lambda(&self) -> &[Scalar] {
        &self.parts.lambda
    }

    pub fn a(&self) -> &Matrix {
        &self.parts.a
    }

    pub fn b(&self) -> &Matrix {
        &self.parts.b
    }

    pub fn parts(&self) -> &MapParts {
        &self.parts
    }

    pub fn into_parts(self) -> MapParts {
        self.parts
    }

    /// True when every entry is an exact rational, so structural checks are exact.
    pub fn is_exact(&self) -> bool {
        self.parts.lambda.iter().all(Scalar::is_exact) && self.parts.a.is_exact() && self.parts.b.is_exact()
    }

    /// `M = (lambda | A)`, an `n x (m+1)` matrix.
    pub fn m_matrix(&self) -> Matrix {
        self.parts.a.prepend_col(&self.parts.lambda)
    }

    /// `m = n` and `B` is the identity.
    pub fn is_lotka_volterra(&self) -> bool {
        let n = self.n();
        self.m() == n
            && (0..n).all(|j| {
                (0..n).all(|k| {
                    let v = self.parts.b.get(j, k);
                    if j == k {
                        v.approx_eq(&Scalar::one(), 0.0)
                    } else {
                        v.is_exactly_zero()
                    }
                })
            })
    }

    pub(crate) fn lambda_f64(&self) -> &[f64] {
        &self.lambda_f
    }

    pub(crate) fn a_f64(&self, i: usize, j: usize) -> f64 {
        self.a_f[i * self.m() + j]
    }

    pub(crate) fn b_f64(&self, j: usize, k: usize) -> f64 {
        self.b_f[j * self.n() + k]
    }

    /// Stable-within-a-build identifier derived from the map's JSON form.
    pub fn digest(&self) -> u64 {
        let mut h = DefaultHasher::new();
        serde_json::to_string(&crate::io::MapFile::from(self))
            .unwrap_or_default()
            .hash(&mut h);
        h.finish()
    }

    fn check_state(&self, s: &State) -> Result<()> {
        if s.dim() != self.n() {
            return Err(QpError::DimensionMismatch(format!(
                "state has dimension {}, map has n = {}",
                s.dim(),
                self.n()
            )));
        }
        Ok(())
    }

    /// Exponents `(B u)_j` of the quasimonomials.
    pub fn quasimonomial_exponents(&self, s: &State) -> Result<Vec<f64>> {
        self.check_state(s)?;
        let n = self.n();
        (0..self.m())
            .map(|j| {
                let e: f64 = (0..n).map(|k| self.b_f64(j, k) * s.u[k]).sum();
                if !(e.abs() <= self.guard) {
                    return Err(QpError::OverflowGuard { index: j, exponent: e });
                }
                Ok(e)
            })
            .collect()
    }

    /// `Q_j = exp((B u)_j)`, all strictly positive.
    pub fn eval_quasimonomials(&self, s: &State) -> Result<Vec<f64>> {
        Ok(self
            .quasimonomial_exponents(s)?
            .into_iter()
            .map(f64::exp)
            .collect())
    }

    /// `phi_i = lambda_i + sum_j A_ij Q_j`, the log-increment of coordinate `i`.
    pub fn increments(&self, s: &State) -> Result<Vec<f64>> {
        let q = self.eval_quasimonomials(s)?;
        Ok((0..self.n())
            .map(|i| {
                self.lambda_f[i]
                    + q.iter()
                        .enumerate()
                        .map(|(j, qj)| self.a_f64(i, j) * qj)
                        .sum::<f64>()
            })
            .collect())
    }

    pub fn step(&self, s: &State) -> Result<State> {
        let phi = self.increments(s)?;
        let u: Vec<f64> = s.u.iter().zip(&phi).map(|(u, p)| u + p).collect();
        if let Some(i) = u.iter().position(|x| !x.is_finite()) {
            return Err(QpError::NonFiniteState(i));
        }
        Ok(State { u })
    }

    pub fn iterate(&self, s0: &State, steps: usize) -> Result<Trajectory> {
        if steps == 0 {
            return Err(QpError::InvalidParameter("steps must be at least 1".into()));
        }
        self.check_state(s0)?;
        let mut states = Vec::with_capacity(steps + 1);
        states.push(s0.clone());
        for t in 0..steps {
            let next = self.step(&states[t]).map_err(|e| QpError::StepFailed {
                t,
                source: Box::new(e),
            })?;
            states.push(next);
        }
        Ok(Trajectory {
            states,
            map_id: self.digest(),
        })
    }

    /// Iterates from many initial states in parallel. Output order follows input order.
    pub fn iterate_many(&self, starts: &[State], steps: usize) -> Vec<Result<Trajectory>> {
        starts.par_iter().map(|s| self.iterate(s, steps)).collect()
    }

    pub fn canonicalize(&self) -> QPMap {
        canonicalize(self.parts.clone())
    }
}

fn rows_equal(a: &[Scalar], b: &[Scalar], eps: f64) -> bool {
    a.iter().zip(b).all(|(x, y)| x.approx_eq(y, eps))
}

/// A point of the positive orthant, held as `u = ln x`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct State {
    u: Vec<f64>,
}

impl State {
    pub fn from_log(u: Vec<f64>) -> Result<Self> {
        if let Some(i) = u.iter().position(|x| !x.is_finite()) {
            return Err(QpError::NonFiniteState(i));
        }
        Ok(State { u })
    }

    /// From positive coordinates `x`.
    pub fn from_x(x: &[f64]) -> Result<Self> {
        if let Some(i) = x.iter().position(|v| !(*v > 0.0) || !v.is_finite()) {
            return Err(QpError::InvalidParameter(format!(
                "coordinate {i} must be positive and finite, got {}",
                x[i]
            )));
        }
        Self::from_log(x.iter().map(|v| v.ln()).collect())
    }

    pub fn log(&self) -> &[f64] {
        &self.u
    }

    pub fn x(&self) -> Vec<f64> {
        self.u.iter().map(|u| u.exp()).collect()
    }

    pub fn dim(&self) -> usize {
        self.u.len()
    }

    /// `max_i |u_i - v_i|`.
    pub fn max_log_deviation(&self, other: &State) -> f64 {
        self.u
            .iter()
            .zip(&other.u)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Trajectory {
    pub states: Vec<State>,
    /// [`QPMap::digest`] of the generating map.
    pub map_id: u64,
}

impl Trajectory {
    /// Number of steps `T` (there are `T + 1` states).
    pub fn steps(&self) -> usize {
        self.states.len().saturating_sub(1)
    }

    pub fn max_log_deviation(&self, other: &Trajectory) -> f64 {
        self.states
            .iter()
            .zip(&other.states)
            .map(|(a, b)| a.max_log_deviation(b))
            .fold(0.0, f64::max)
    }
}

/// One rewrite performed by [`canonicalize_logged`]. Indices refer to the
/// quasimonomial numbering of the input.
#[derive(Clone, Debug, PartialEq, Serialize)]
#[serde(tag = "event", rename_all = "snake_case")]
pub enum CanonEvent {
    /// Row `removed` of B repeated row `kept`; its A column was added to `kept`'s.
    Merged { kept: usize, removed: usize },
    /// Row `row` of B was zero, so `Q = 1` and its A column moved into lambda.
    FoldedConstant { row: usize },
    /// Column `col` of A was zero (possibly after merging); the quasimonomial is dead.
    DroppedZeroColumn { col: usize },
}

/// Rewrites a dimension-consistent triple into a valid map defining the same
/// dynamics on the positive orthant.
pub fn canonicalize(parts: MapParts) -> QPMap {
    canonicalize_logged(parts, EPS_STRUCT).0
}

pub fn canonicalize_logged(parts: MapParts, eps: f64) -> (QPMap, Vec<CanonEvent>) {
    let (n, m) = (parts.n(), parts.m());
    let mut log = Vec::new();
    let mut lambda = parts.lambda.clone();

    // group identical rows of B, summing their A columns into the first occurrence
    let mut kept: Vec<(usize, Vec<Scalar>)> = Vec::new();
    let mut owner = vec![usize::MAX; m];
    for j in 0..m {
        if let Some(g) = kept
            .iter()
            .position(|(k, _)| rows_equal(parts.b.row(*k), parts.b.row(j), eps))
        {
            let col = &mut kept[g].1;
            for (i, c) in col.iter_mut().enumerate() {
                *c = &*c + parts.a.get(i, j);
            }
            owner[j] = g;
            log.push(CanonEvent::Merged {
                kept: kept[g].0,
                removed: j,
            });
        } else {
            owner[j] = kept.len();
            kept.push((j, parts.a.col(j)));
        }
    }

    let mut surviving: Vec<(usize, Vec<Scalar>)> = Vec::new();
    for (j, col) in kept {
        if parts.b.row(j).iter().all(|x| x.is_zero_tol(eps)) {
            for (l, c) in lambda.iter_mut().zip(&col) {
                *l = &*l + c;
            }
            log.push(CanonEvent::FoldedConstant { row: j });
        } else if col.iter().all(|x| x.is_zero_tol(eps)) {
            log.push(CanonEvent::DroppedZeroColumn { col: j });
        } else {
            surviving.push((j, col));
        }
    }

    let m2 = surviving.len();
    let mut a = Matrix::zeros(n, m2);
    let mut b = Matrix::zeros(m2, n);
    for (jj, (j, col)) in surviving.into_iter().enumerate() {
        for (i, c) in col.into_iter().enumerate() {
            a.set(i, jj, c);
        }
        for k in 0..n {
            b.set(jj, k, parts.b.get(j, k).clone());
        }
    }
    let out = MapParts { lambda, a, b };
    (QPMap::freeze(out), log)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn s(v: &[i64]) -> Vec<Scalar> {
        v.iter().map(|&x| Scalar::int(x)).collect()
    }

    #[test]
    fn validate_accepts_simple_map() {
        let map = QPMap::from_components(
            s(&[0, 0]),
            Matrix::from_i64(&[&[1], &[-1]]),
            Matrix::from_i64(&[&[1, 1]]),
        )
        .unwrap();
        assert_eq!((map.n(), map.m()), (2, 1));
        assert!(map.is_exact());
    }

    #[test]
    fn validate_rejects_zero_column() {
        let err = QPMap::from_components(
            s(&[0, 0]),
            Matrix::from_i64(&[&[0], &[0]]),
            Matrix::from_i64(&[&[1, 1]]),
        )
        .unwrap_err();
        assert_eq!(err, QpError::ZeroColumnInA(0));
    }

    #[test]
    fn validate_rejects_zero_row() {
        let err = QPMap::from_components(
            s(&[0, 0]),
            Matrix::from_i64(&[&[1], &[2]]),
            Matrix::from_i64(&[&[0, 0]]),
        )
        .unwrap_err();
        assert_eq!(err, QpError::ZeroRowInB(0));
    }

    #[test]
    fn validate_rejects_duplicate_rows() {
        let err = QPMap::from_components(
            s(&[0, 0, 0]),
            Matrix::from_i64(&[&[1, 1], &[1, 1], &[1, 1]]),
            Matrix::from_i64(&[&[0, 0, 1], &[0, 0, 1]]),
        )
        .unwrap_err();
        assert_eq!(err, QpError::DuplicateBRows(0, 1));
    }

    #[test]
    fn validate_rejects_bad_shapes() {
        let err = MapParts::new(2, 1, s(&[0]), Matrix::from_i64(&[&[1], &[1]]), Matrix::from_i64(&[&[1, 1]]));
        assert!(matches!(err, Err(QpError::DimensionMismatch(_))));
        let err = MapParts::new(2, 1, s(&[0, 0]), Matrix::from_i64(&[&[1, 1]]), Matrix::from_i64(&[&[1, 1]]));
        assert!(matches!(err, Err(QpError::DimensionMismatch(_))));
    }

    #[test]
    fn quasimonomials_product() {
        let map = QPMap::from_components(
            s(&[0, 0]),
            Matrix::from_i64(&[&[1], &[-1]]),
            Matrix::from_i64(&[&[1, 1]]),
        )
        .unwrap();
        let st = State::from_x(&[2.0, 3.0]).unwrap();
        let q = map.eval_quasimonomials(&st).unwrap();
        assert!((q[0] - 6.0).abs() < 1e-14);
    }

    #[test]
    fn quasimonomial_of_last_coordinate() {
        let map = QPMap::from_components(
            s(&[0, 0, 0]),
            Matrix::from_i64(&[&[1], &[-1], &[0]]),
            Matrix::from_i64(&[&[0, 0, 1]]),
        )
        .unwrap();
        let st = State::from_log(vec![3.7, -12.0, 0.0]).unwrap();
        assert_eq!(map.eval_quasimonomials(&st).unwrap(), vec![1.0]);
    }

    #[test]
    fn overflow_guard_trips() {
        let map = QPMap::from_components(s(&[0]), Matrix::from_i64(&[&[1]]), Matrix::from_i64(&[&[1]])).unwrap();
        let st = State::from_log(vec![701.0]).unwrap();
        assert!(matches!(map.step(&st), Err(QpError::OverflowGuard { index: 0, .. })));
        let relaxed = map.clone().with_overflow_guard(800.0);
        assert!(relaxed.eval_quasimonomials(&st).is_ok());
    }

    #[test]
    fn pure_scaling_step() {
        let map = QPMap::from_components(
            vec![Scalar::real(0.2)],
            Matrix::zeros(1, 0),
            Matrix::zeros(0, 1),
        )
        .unwrap();
        let next = map.step(&State::from_log(vec![0.0]).unwrap()).unwrap();
        assert_eq!(next.log(), &[0.2]);
    }

    #[test]
    fn scalar_step_matches_substitution() {
        // x' = x * exp(x)
        let map = QPMap::from_components(s(&[0]), Matrix::from_i64(&[&[1]]), Matrix::from_i64(&[&[1]])).unwrap();
        for c in [0.25_f64, 1.0, 3.5] {
            let next = map.step(&State::from_x(&[c]).unwrap()).unwrap();
            let direct = c * c.exp();
            assert!((next.log()[0] - (c.ln() + c)).abs() < 1e-14);
            assert!((next.x()[0] - direct).abs() <= 1e-13 * direct);
        }
    }

    #[test]
    fn iterate_reports_failing_step() {
        let map = QPMap::from_components(s(&[0]), Matrix::from_i64(&[&[1]]), Matrix::from_i64(&[&[1]])).unwrap();
        let err = map.iterate(&State::from_x(&[2.0]).unwrap(), 10).unwrap_err();
        match err {
            QpError::StepFailed { t, .. } => assert!(t > 0 && t < 10),
            other => panic!("unexpected {other:?}"),
        }
        assert!(map.iterate(&State::from_x(&[2.0]).unwrap(), 0).is_err());
    }

    #[test]
    fn identity_iteration_is_constant() {
        let map = QPMap::from_components(s(&[0]), Matrix::zeros(1, 0), Matrix::zeros(0, 1)).unwrap();
        let s0 = State::from_log(vec![0.3]).unwrap();
        let traj = map.iterate(&s0, 10).unwrap();
        assert_eq!(traj.states.len(), 11);
        assert!(traj.states.iter().all(|st| st == &s0));
    }

    #[test]
    fn canonicalize_merges_duplicates() {
        let parts = MapParts::new(
            2,
            2,
            s(&[0, 0]),
            Matrix::from_i64(&[&[1, 2], &[3, 4]]),
            Matrix::from_i64(&[&[1, 0], &[1, 0]]),
        )
        .unwrap();
        let (map, log) = canonicalize_logged(parts, EPS_STRUCT);
        assert_eq!(map.b(), &Matrix::from_i64(&[&[1, 0]]));
        assert_eq!(map.a(), &Matrix::from_i64(&[&[3], &[7]]));
        assert_eq!(log, vec![CanonEvent::Merged { kept: 0, removed: 1 }]);
    }

    #[test]
    fn canonicalize_folds_constant_quasimonomial() {
        let parts = MapParts::new(
            2,
            2,
            s(&[10, 20]),
            Matrix::from_i64(&[&[1, 5], &[2, 6]]),
            Matrix::from_i64(&[&[0, 0], &[1, 2]]),
        )
        .unwrap();
        let map = canonicalize(parts);
        assert_eq!(map.lambda(), &s(&[11, 22])[..]);
        assert_eq!(map.b(), &Matrix::from_i64(&[&[1, 2]]));
        assert_eq!(map.a(), &Matrix::from_i64(&[&[5], &[6]]));
    }

    #[test]
    fn canonicalize_drops_cancelled_columns() {
        let parts = MapParts::new(
            2,
            2,
            s(&[0, 0]),
            Matrix::from_i64(&[&[1, -1], &[2, -2]]),
            Matrix::from_i64(&[&[1, 1], &[1, 1]]),
        )
        .unwrap();
        let (map, log) = canonicalize_logged(parts, EPS_STRUCT);
        assert_eq!(map.m(), 0);
        assert!(log.contains(&CanonEvent::DroppedZeroColumn { col: 0 }));
    }

    #[test]
    fn canonicalize_keeps_zero_state_column_of_b() {
        let parts = MapParts::new(
            2,
            2,
            s(&[0, 1]),
            Matrix::from_i64(&[&[0, 0], &[3, 4]]),
            Matrix::from_i64(&[&[2, 0], &[1, 0]]),
        )
        .unwrap();
        let map = canonicalize(parts.clone());
        assert_eq!(map.parts(), &parts);
    }

    #[test]
    fn lotka_volterra_detection() {
        let lv = QPMap::from_components(s(&[0, 0, 0]), Matrix::identity(3), Matrix::identity(3)).unwrap();
        assert!(lv.is_lotka_volterra());
        let m0 = QPMap::from_components(s(&[0]), Matrix::zeros(1, 0), Matrix::zeros(0, 1)).unwrap();
        assert!(!m0.is_lotka_volterra());
    }
}
