//! Closed-form solution in dimension 2 and reduction of conservative maps by
//! one dimension.
//!
//! A map with `sum lambda = 0` and zero column sums of `A` preserves
//! `P = x_1 x_2 ... x_n`. The QMT with `y_n = P` freezes the last new
//! coordinate, leaving an `(n-1)`-dimensional QP map on each leaf `P = c`.

use serde::Serialize;

use crate::classify::{check_thm1, Verdict};
use crate::error::{QpError, Result};
use crate::map::{canonicalize_logged, CanonEvent, MapParts, QPMap, State, Trajectory};
use crate::matrix::Matrix;
use crate::scalar::{Scalar, EPS_STRUCT};
use crate::transform::{apply_qmt, inverse_transform_state, transform_state, transformed_parts, Qmt};

/// `x1(t) = x1(0) k^t`, `x2(t) = x2(0) k^-t` for a conservative 2-d map.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ClosedForm2D {
    pub k: f64,
    pub ln_k: f64,
    pub x0: State,
}

impl ClosedForm2D {
    pub fn at(&self, t: i64) -> State {
        let u = self.x0.log();
        let shift = t as f64 * self.ln_k;
        State::from_log(vec![u[0] + shift, u[1] - shift]).expect("finite for moderate t")
    }

    pub fn describe(&self) -> String {
        let x = self.x0.x();
        format!(
            "x1(t) = {:.17e} * k^t, x2(t) = {:.17e} * k^(-t), k = {:.17e}",
            x[0], x[1], self.k
        )
    }
}

/// Solves a 2-d map classified conservative. `k` depends on the leaf
/// `x1 x2 = x1(0) x2(0)` and is evaluated at `s0`.
pub fn solve_2d(map: &QPMap, s0: &State) -> Result<ClosedForm2D> {
    if check_thm1(map)?.verdict != Verdict::Conservative {
        return Err(QpError::NotConservative2D);
    }
    check_state_dim(s0, 2)?;
    let leaf = s0.log()[0] + s0.log()[1];
    let ln_k = map.lambda()[0].to_f64()
        + (0..map.m())
            .map(|j| map.a().get(0, j).to_f64() * (map.b().get(j, 0).to_f64() * leaf).exp())
            .sum::<f64>();
    Ok(ClosedForm2D {
        k: ln_k.exp(),
        ln_k,
        x0: s0.clone(),
    })
}

fn check_state_dim(s: &State, n: usize) -> Result<()> {
    if s.dim() != n {
        return Err(QpError::DimensionMismatch(format!(
            "state has dimension {}, expected {n}",
            s.dim()
        )));
    }
    Ok(())
}

#[derive(Clone, Debug)]
pub struct ReductionResult {
    /// `C^-1` is the identity with a last row of ones.
    pub qmt: Qmt,
    /// `y_n(0) = prod_i x_i(0)`.
    pub constant_coordinate: f64,
    /// `ln y_n(0) = sum_i u_i(0)`.
    pub constant_log: f64,
    pub reduced_map: QPMap,
    /// `(y_1(0), ..., y_{n-1}(0))`.
    pub reduced_x0: State,
    /// `B'_jn` per source quasimonomial; `A~_ij = A_ij y_n(0)^B'_jn`.
    pub lift_exponents: Vec<Scalar>,
    /// Rescaled `(n-1)`-dimensional triple before canonicalization.
    pub raw_reduced: MapParts,
    pub canon_events: Vec<CanonEvent>,
    pub source_digest: u64,
}

/// Serializable summary of a [`ReductionResult`], sufficient to lift a reduced
/// trajectory without the source map.
#[derive(Clone, Debug, Serialize)]
#[allow(non_snake_case)]
pub struct LiftManifest {
    pub C: Matrix,
    pub C_inv: Matrix,
    pub constant_coordinate: f64,
    pub constant_log: f64,
    pub lift_exponents: Vec<Scalar>,
    pub canon_events: Vec<CanonEvent>,
    pub reduced_x0: Vec<f64>,
    pub source_digest: String,
    pub reduced_digest: String,
}

impl ReductionResult {
    pub fn manifest(&self) -> LiftManifest {
        LiftManifest {
            C: self.qmt.c().clone(),
            C_inv: self.qmt.c_inv().clone(),
            constant_coordinate: self.constant_coordinate,
            constant_log: self.constant_log,
            lift_exponents: self.lift_exponents.clone(),
            canon_events: self.canon_events.clone(),
            reduced_x0: self.reduced_x0.x(),
            source_digest: format!("{:016x}", self.source_digest),
            reduced_digest: format!("{:016x}", self.reduced_map.digest()),
        }
    }
}

/// `y^e` for `ln y = log_base`, exact when `e = 0` or `y = 1`.
fn exact_power(log_base: f64, e: &Scalar) -> Scalar {
    if e.is_exactly_zero() || log_base == 0.0 {
        Scalar::one()
    } else {
        Scalar::real((e.to_f64() * log_base).exp())
    }
}

/// Reduces a map with `sum lambda = 0` and zero column sums of `A` to the
/// `(n-1)`-dimensional map on the leaf of `s0`. The reduced map is in
/// general not conservative.
pub fn reduce_conservative(map: &QPMap, s0: &State) -> Result<ReductionResult> {
    reduce_conservative_with(map, s0, EPS_STRUCT)
}

pub fn reduce_conservative_with(map: &QPMap, s0: &State, eps: f64) -> Result<ReductionResult> {
    let (n, m) = (map.n(), map.m());
    if n < 2 {
        return Err(QpError::InvalidParameter("reduction needs n >= 2".into()));
    }
    check_state_dim(s0, n)?;
    let trace: Scalar = map.lambda().iter().sum();
    if !trace.is_zero_tol(eps) {
        return Err(QpError::ConditionsNotMet(format!(
            "condition (1) fails: sum of lambda is {trace}, not 0"
        )));
    }
    if let Some((j, s)) = (0..m)
        .map(|j| (j, map.a().col(j).iter().sum::<Scalar>()))
        .find(|(_, s)| !s.is_zero_tol(eps))
    {
        return Err(QpError::ConditionsNotMet(format!(
            "condition (2) fails: column {} of A sums to {s}, not 0",
            j + 1
        )));
    }

    let qmt = Qmt::product_foliation(n);
    let t = transformed_parts(map, &qmt)?;
    let last_row_zero = t.lambda[n - 1].is_zero_tol(eps) && (0..m).all(|j| t.a.get(n - 1, j).is_zero_tol(eps));
    if !last_row_zero {
        return Err(QpError::ConditionsNotMet("last row of the transformed M is not zero".into()));
    }

    let y0 = inverse_transform_state(&qmt, s0)?;
    let constant_log = y0.log()[n - 1];
    let lift_exponents: Vec<Scalar> = (0..m).map(|j| t.b.get(j, n - 1).clone()).collect();

    let mut a = Matrix::zeros(n - 1, m);
    for j in 0..m {
        let scale = exact_power(constant_log, &lift_exponents[j]);
        for i in 0..n - 1 {
            a.set(i, j, t.a.get(i, j) * &scale);
        }
    }
    let b_rows = (0..m).map(|j| t.b.row(j)[..n - 1].to_vec()).collect();
    let b = Matrix::from_rows(b_rows, n - 1)?;
    let raw = MapParts::new(n - 1, m, t.lambda[..n - 1].to_vec(), a, b)?;
    let (reduced_map, canon_events) = canonicalize_logged(raw.clone(), eps);

    Ok(ReductionResult {
        qmt,
        constant_coordinate: constant_log.exp(),
        constant_log,
        reduced_map,
        reduced_x0: State::from_log(y0.log()[..n - 1].to_vec())?,
        lift_exponents,
        raw_reduced: raw,
        canon_events,
        source_digest: map.digest(),
    })
}

/// Appends the frozen coordinate and maps back through `u_x = C u_y`.
pub fn lift_trajectory(red: &ReductionResult, reduced: &Trajectory) -> Result<Trajectory> {
    let n = red.qmt.n();
    let states = reduced
        .states
        .iter()
        .map(|z| {
            check_state_dim(z, n - 1)?;
            let mut y = z.log().to_vec();
            y.push(red.constant_log);
            transform_state(&red.qmt, &State::from_log(y)?)
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(Trajectory {
        states,
        map_id: red.source_digest,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize)]
#[serde(tag = "class", rename_all = "snake_case")]
pub enum CoordinateRole {
    /// Row `i` of `M'` vanishes.
    Constant { log_value: f64 },
    /// `y_i(t) = y_i(0) mu^t`.
    Geometric { mu: f64, log_mu: f64 },
    Residual,
}

/// A quasimonomial term of a residual equation, with constant coordinates
/// already substituted.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ResidualTerm {
    /// Quasimonomial index in the transformed map, 0-based.
    pub quasimonomial: usize,
    pub coefficient: f64,
    /// `(coordinate, exponent)` over the non-constant coordinates, 0-based.
    pub exponents: Vec<(usize, f64)>,
}

/// `ln y_i(t+1) = ln y_i(t) + effective_lambda + sum_terms c prod_k y_k(t)^e_k`.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ResidualEquation {
    pub coordinate: usize,
    /// `lambda'_i` plus every term that depends only on constant coordinates.
    pub effective_lambda: f64,
    pub terms: Vec<ResidualTerm>,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CoordinateAnalysis {
    pub roles: Vec<CoordinateRole>,
    pub residual: Vec<ResidualEquation>,
    pub y0: State,
}

impl CoordinateAnalysis {
    pub fn constants(&self) -> Vec<usize> {
        self.indices(|r| matches!(r, CoordinateRole::Constant { .. }))
    }

    pub fn geometric(&self) -> Vec<usize> {
        self.indices(|r| matches!(r, CoordinateRole::Geometric { .. }))
    }

    pub fn residual_coordinates(&self) -> Vec<usize> {
        self.indices(|r| matches!(r, CoordinateRole::Residual))
    }

    fn indices(&self, f: impl Fn(&CoordinateRole) -> bool) -> Vec<usize> {
        (0..self.roles.len()).filter(|&i| f(&self.roles[i])).collect()
    }

    /// Iterates the decomposition: frozen constants, closed-form geometric
    /// coordinates and the residual equations. States are in y-coordinates.
    pub fn iterate(&self, steps: usize) -> Result<Vec<State>> {
        let mut u = self.y0.log().to_vec();
        let mut out = vec![self.y0.clone()];
        for t in 1..=steps {
            let mut next = u.clone();
            for (i, role) in self.roles.iter().enumerate() {
                if let CoordinateRole::Geometric { log_mu, .. } = role {
                    next[i] = self.y0.log()[i] + t as f64 * log_mu;
                }
            }
            for eq in &self.residual {
                let incr: f64 = eq.effective_lambda
                    + eq
                        .terms
                        .iter()
                        .map(|term| {
                            let e: f64 = term.exponents.iter().map(|&(k, b)| b * u[k]).sum();
                            term.coefficient * e.exp()
                        })
                        .sum::<f64>();
                next[eq.coordinate] = u[eq.coordinate] + incr;
            }
            u = next;
            out.push(State::from_log(u.clone()).map_err(|e| QpError::StepFailed {
                t: t - 1,
                source: Box::new(e),
            })?);
        }
        Ok(out)
    }

    /// One line per coordinate, 1-based names `y1, y2, ...`.
    pub fn describe(&self) -> String {
        let mut lines = Vec::new();
        for (i, role) in self.roles.iter().enumerate() {
            match role {
                CoordinateRole::Constant { log_value } => {
                    lines.push(format!("y{} constant = {:.17e}", i + 1, log_value.exp()))
                }
                CoordinateRole::Geometric { mu, .. } => {
                    lines.push(format!("y{0}(t) = y{0}(0) * mu^t, mu = {1:.17e}", i + 1, mu))
                }
                CoordinateRole::Residual => {
                    let eq = self.residual.iter().find(|e| e.coordinate == i).expect("every residual has an equation");
                    let mut rhs = format!("{:.17e}", eq.effective_lambda);
                    for term in &eq.terms {
                        let mono: Vec<String> = term.exponents.iter().map(|(k, e)| format!("y{}^{}", k + 1, e)).collect();
                        rhs.push_str(&format!(" + {:.17e}*{}", term.coefficient, mono.join("*")));
                    }
                    lines.push(format!("y{0}(t+1) = y{0}(t) * exp({rhs})", i + 1));
                }
            }
        }
        lines.join("\n")
    }
}

/// Applies `t` and classifies each new coordinate syntactically as constant
/// (zero row of `M'`), geometric (zero row of `A'`, or every quasimonomial of
/// the row depends only on constant coordinates) or residual.
pub fn reduce_with_qmt(map: &QPMap, t: &Qmt, s0: &State) -> Result<(QPMap, CoordinateAnalysis)> {
    reduce_with_qmt_eps(map, t, s0, EPS_STRUCT)
}

pub fn reduce_with_qmt_eps(map: &QPMap, t: &Qmt, s0: &State, eps: f64) -> Result<(QPMap, CoordinateAnalysis)> {
    check_state_dim(s0, map.n())?;
    let image = apply_qmt(map, t)?;
    let y0 = inverse_transform_state(t, s0)?;
    let (n, m) = (image.n(), image.m());
    let (a, b, lam) = (image.a(), image.b(), image.lambda());
    let yl = y0.log();

    let constant: Vec<bool> = (0..n)
        .map(|i| lam[i].is_zero_tol(eps) && (0..m).all(|j| a.get(i, j).is_zero_tol(eps)))
        .collect();
    let only_constant = |j: usize| (0..n).all(|k| constant[k] || b.get(j, k).is_zero_tol(eps));
    // exp(sum over constant coordinates of B'_jk ln y_k(0))
    let frozen = |j: usize| -> f64 {
        (0..n)
            .filter(|&k| constant[k])
            .map(|k| b.get(j, k).to_f64() * yl[k])
            .sum::<f64>()
            .exp()
    };
    let active = |i: usize| (0..m).filter(move |&j| !a.get(i, j).is_zero_tol(eps));

    let mut roles = Vec::with_capacity(n);
    let mut residual = Vec::new();
    for i in 0..n {
        if constant[i] {
            roles.push(CoordinateRole::Constant { log_value: yl[i] });
            continue;
        }
        let mut eff = lam[i].to_f64();
        let mut terms = Vec::new();
        for j in active(i) {
            let coeff = a.get(i, j).to_f64() * frozen(j);
            if only_constant(j) {
                eff += coeff;
            } else {
                let exponents = (0..n)
                    .filter(|&k| !constant[k] && !b.get(j, k).is_zero_tol(eps))
                    .map(|k| (k, b.get(j, k).to_f64()))
                    .collect();
                terms.push(ResidualTerm {
                    quasimonomial: j,
                    coefficient: coeff,
                    exponents,
                });
            }
        }
        if terms.is_empty() {
            roles.push(CoordinateRole::Geometric {
                mu: eff.exp(),
                log_mu: eff,
            });
        } else {
            roles.push(CoordinateRole::Residual);
            residual.push(ResidualEquation {
                coordinate: i,
                effective_lambda: eff,
                terms,
            });
        }
    }
    Ok((image, CoordinateAnalysis { roles, residual, y0 }))
}
