//! Conservativity classification of QP maps.
//!
//! Every criterion here is a polynomial identity in the entries of
//! `lambda`, `A` and `B`, so all-rational maps are classified exactly. Maps
//! with double entries compare against the absolute tolerance of the
//! [`Classifier`].
//!
//! Indexing: witnesses in reports and the arguments of [`compute_omega`] are
//! 1-based, matching the usual mathematical notation for matrix entries.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{QpError, Result};
use crate::jacobian::analytic_jacobian;
use crate::map::{QPMap, State};
use crate::matrix::Matrix;
use crate::scalar::{Scalar, EPS_STRUCT};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Verdict {
    Conservative,
    NotConservative,
    NecessaryConditionsHold,
    Indeterminate,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Orientation {
    Preserving,
    Unknown,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Criterion {
    /// n = 1: only the identity is conservative.
    Dimension1,
    /// n = 2 iff-classification.
    TwoDimensional,
    /// n = 3 iff-classification for non-negative, non-degenerate `B`.
    ThreeDimensional,
    /// Necessary conditions in any dimension for non-negative `B`.
    NecessaryConditions,
    /// Symplectic conditions (a)-(d) for `n = 2s`.
    Symplectic,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Witness {
    /// 1-based indices of the offending entries.
    pub indices: Vec<usize>,
    /// The value that should have vanished, when there is one.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub value: Option<Scalar>,
}

impl Witness {
    fn at(indices: Vec<usize>) -> Self {
        Witness { indices, value: None }
    }

    fn with_value(indices: Vec<usize>, value: Scalar) -> Self {
        Witness {
            indices,
            value: Some(value),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ConditionCheck {
    /// Short label: "1".."4" for numbered conditions, "a".."d" for the symplectic ones.
    pub id: String,
    pub description: String,
    pub holds: bool,
    /// First violation found, when `holds` is false.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub witness: Option<Witness>,
}

impl ConditionCheck {
    fn new(id: &str, description: &str, failure: Option<Witness>) -> Self {
        ConditionCheck {
            id: id.into(),
            description: description.into(),
            holds: failure.is_none(),
            witness: failure,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ClassificationReport {
    pub criterion: Criterion,
    pub verdict: Verdict,
    pub orientation: Orientation,
    pub conditions: Vec<ConditionCheck>,
    /// Hypotheses of the criterion (e.g. `B` non-negative); reuse the condition record.
    pub hypotheses: Vec<ConditionCheck>,
}

impl ClassificationReport {
    pub fn condition(&self, id: &str) -> Option<&ConditionCheck> {
        self.conditions.iter().find(|c| c.id == id)
    }

    pub fn all_conditions_hold(&self) -> bool {
        self.conditions.iter().all(|c| c.holds)
    }

    pub fn hypotheses_hold(&self) -> bool {
        self.hypotheses.iter().all(|c| c.holds)
    }

    fn decide(criterion: Criterion, conditions: Vec<ConditionCheck>, hypotheses: Vec<ConditionCheck>, on_success: Verdict) -> Self {
        let verdict = if !hypotheses.iter().all(|h| h.holds) {
            Verdict::Indeterminate
        } else if conditions.iter().all(|c| c.holds) {
            on_success
        } else {
            Verdict::NotConservative
        };
        let orientation = if verdict == Verdict::Conservative {
            Orientation::Preserving
        } else {
            Orientation::Unknown
        };
        ClassificationReport {
            criterion,
            verdict,
            orientation,
            conditions,
            hypotheses,
        }
    }
}

/// Quasimonomial first integrals `prod_i x_i^c_i` with `c^T M = 0`.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct IntegralBasis {
    /// Each vector has its first nonzero component equal to 1.
    pub exponent_vectors: Vec<Vec<Scalar>>,
}

impl IntegralBasis {
    pub fn len(&self) -> usize {
        self.exponent_vectors.len()
    }

    pub fn is_empty(&self) -> bool {
        self.exponent_vectors.is_empty()
    }

    /// Whether `c` lies in the span of the basis.
    pub fn contains_direction(&self, c: &[Scalar], eps: f64) -> bool {
        if self.exponent_vectors.is_empty() {
            return c.iter().all(|x| x.is_zero_tol(eps));
        }
        let n = c.len();
        let mut rows = self.exponent_vectors.clone();
        let base = Matrix::from_rows(rows.clone(), n).expect("basis vectors share a length");
        rows.push(c.to_vec());
        let ext = Matrix::from_rows(rows, n).expect("same length");
        base.rank(eps) == ext.rank(eps)
    }

    /// `c . u`, the log of the integral at `s`.
    pub fn log_value(c: &[Scalar], s: &State) -> f64 {
        c.iter().zip(s.log()).map(|(ci, ui)| ci.to_f64() * ui).sum()
    }
}

/// Settings for the Jacobian sampling oracle.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct OracleConfig {
    /// States are drawn log-uniformly from `[e^-w, e^w]^n`.
    pub half_width: f64,
    /// `||det J| - 1|` above this marks the map as not conservative.
    pub threshold: f64,
    /// Redraws per point before an overflow is propagated.
    pub max_attempts: usize,
}

impl Default for OracleConfig {
    fn default() -> Self {
        OracleConfig {
            half_width: 2.0,
            threshold: 1e-6,
            max_attempts: 16,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum OracleVerdict {
    ConsistentWithConservative,
    NotConservative,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct OracleReport {
    pub verdict: OracleVerdict,
    /// `max ||det J| - 1|` over the evaluated points.
    pub max_abs_deviation: f64,
    /// `max |det J - 1|`; differs from the above only if some `det J < 0`.
    pub max_deviation: f64,
    pub points: usize,
    /// Draws discarded because of the overflow guard.
    pub resampled: usize,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Classifier {
    pub eps: f64,
}

impl Default for Classifier {
    fn default() -> Self {
        Classifier { eps: EPS_STRUCT }
    }
}

fn expect_n(map: &QPMap, n: usize) -> Result<()> {
    if map.n() != n {
        return Err(QpError::WrongDimension {
            expected: n,
            got: map.n(),
        });
    }
    Ok(())
}

/// `sum_i a_i` unless it vanishes.
fn nonzero_sum<'a>(items: impl Iterator<Item = &'a Scalar>, eps: f64) -> Option<Scalar> {
    let s: Scalar = items.sum();
    (!s.is_zero_tol(eps)).then_some(s)
}

fn det2(a: &Scalar, b: &Scalar, c: &Scalar, d: &Scalar) -> Scalar {
    &(a * d) - &(b * c)
}

/// `Omega_ijkl` with 0-based indices: state pair `(i, j)`, quasimonomial pair `(k, l)`.
fn omega0(map: &QPMap, i: usize, j: usize, k: usize, l: usize) -> Scalar {
    let (a, b) = (map.a(), map.b());
    let da = det2(a.get(i, k), a.get(i, l), a.get(j, k), a.get(j, l));
    if da.is_exactly_zero() {
        return da;
    }
    da * det2(b.get(k, i), b.get(k, j), b.get(l, i), b.get(l, j))
}

/// `Omega_12kl + Omega_13kl + Omega_23kl` for an n = 3 map, 0-based `k < l`.
pub(crate) fn omega_sum(map: &QPMap, k: usize, l: usize) -> Scalar {
    omega0(map, 0, 1, k, l) + omega0(map, 0, 2, k, l) + omega0(map, 1, 2, k, l)
}

/// `Omega_ijkl = det[[A_ik, A_il], [A_jk, A_jl]] * det[[B_ki, B_kj], [B_li, B_lj]]`
/// with 1-based `i < j <= n` and `k < l <= m`.
pub fn compute_omega(map: &QPMap, i: usize, j: usize, k: usize, l: usize) -> Result<Scalar> {
    if !(1 <= i && i < j && j <= map.n()) {
        return Err(QpError::IndexOutOfRange(format!(
            "state pair ({i}, {j}) needs 1 <= i < j <= {}",
            map.n()
        )));
    }
    if !(1 <= k && k < l && l <= map.m()) {
        return Err(QpError::IndexOutOfRange(format!(
            "quasimonomial pair ({k}, {l}) needs 1 <= k < l <= {}",
            map.m()
        )));
    }
    Ok(omega0(map, i - 1, j - 1, k - 1, l - 1))
}

impl Classifier {
    pub fn new(eps: f64) -> Self {
        Classifier { eps }
    }

    fn trace_lambda(&self, map: &QPMap, id: &str) -> ConditionCheck {
        let fail = nonzero_sum(map.lambda().iter(), self.eps).map(|v| Witness::with_value(vec![], v));
        ConditionCheck::new(id, "sum of lambda_i vanishes", fail)
    }

    fn column_sums(&self, map: &QPMap, id: &str) -> ConditionCheck {
        let a = map.a();
        let fail = (0..map.m()).find_map(|j| {
            let col = a.col(j);
            nonzero_sum(col.iter(), self.eps).map(|v| Witness::with_value(vec![j + 1], v))
        });
        ConditionCheck::new(id, "every column of A sums to zero", fail)
    }

    fn nonnegative_b(&self, map: &QPMap) -> ConditionCheck {
        let b = map.b();
        let fail = (0..map.m())
            .flat_map(|j| (0..map.n()).map(move |k| (j, k)))
            .find(|&(j, k)| b.get(j, k).is_negative_tol(self.eps))
            .map(|(j, k)| Witness::with_value(vec![j + 1, k + 1], b.get(j, k).clone()));
        ConditionCheck::new("B_nonnegative", "B has no negative entry", fail)
    }

    /// n = 1: conservative iff the map is the identity (`lambda = 0`, `m = 0`).
    pub fn check_dim1(&self, map: &QPMap) -> Result<ClassificationReport> {
        expect_n(map, 1)?;
        let map = map.canonicalize();
        let lam = &map.lambda()[0];
        let conditions = vec![
            ConditionCheck::new(
                "1",
                "lambda vanishes",
                (!lam.is_zero_tol(self.eps)).then(|| Witness::with_value(vec![1], lam.clone())),
            ),
            ConditionCheck::new(
                "2",
                "no quasimonomial terms",
                (map.m() > 0).then(|| Witness::at((1..=map.m()).collect())),
            ),
        ];
        Ok(ClassificationReport::decide(Criterion::Dimension1, conditions, vec![], Verdict::Conservative))
    }

    /// n = 2: conservative iff `lambda1 + lambda2 = 0`, `A_1i + A_2i = 0` and
    /// `B_i1 = B_i2` for every `i`.
    pub fn check_thm1(&self, map: &QPMap) -> Result<ClassificationReport> {
        expect_n(map, 2)?;
        let b = map.b();
        let equal_exponents = (0..map.m())
            .find(|&i| !b.get(i, 0).approx_eq(b.get(i, 1), self.eps))
            .map(|i| Witness::with_value(vec![i + 1], b.get(i, 0) - b.get(i, 1)));
        let conditions = vec![
            self.trace_lambda(map, "1"),
            self.column_sums(map, "2"),
            ConditionCheck::new("3", "B_i1 = B_i2 for every quasimonomial", equal_exponents),
        ];
        Ok(ClassificationReport::decide(Criterion::TwoDimensional, conditions, vec![], Verdict::Conservative))
    }

    /// Non-degeneracy of an `m x 3` exponent matrix: no row equals the sum of
    /// two other rows, and no two disjoint pairs of rows have equal sums.
    /// On failure returns the offending 1-based rows: `[i, j, k]` for
    /// `B_i = B_j + B_k`, `[i, j, k, l]` for `B_i + B_j = B_k + B_l`.
    pub fn is_b_nondegenerate(&self, map: &QPMap) -> Result<(bool, Option<Vec<usize>>)> {
        expect_n(map, 3)?;
        Ok(match degeneracy(map.b(), self.eps) {
            None => (true, None),
            Some(w) => (false, Some(w)),
        })
    }

    /// n = 3 with `B` non-negative and non-degenerate: conservative iff
    /// (1) `sum lambda = 0`, (2) columns of `A` sum to zero,
    /// (3) `A_1i B_i1 + A_2i B_i2 + A_3i B_i3 = 0` for every `i`,
    /// (4) `Omega_12kl + Omega_13kl + Omega_23kl = 0` for every `k < l`.
    /// Outside the hypotheses the verdict is `Indeterminate`.
    pub fn check_thm3(&self, map: &QPMap) -> Result<ClassificationReport> {
        expect_n(map, 3)?;
        let (a, b, m) = (map.a(), map.b(), map.m());
        let nondeg = ConditionCheck::new(
            "B_nondegenerate",
            "no row of B is a sum of two others; no two disjoint row pairs share a sum",
            degeneracy(b, self.eps).map(Witness::at),
        );
        let hypotheses = vec![self.nonnegative_b(map), nondeg];

        let diag = (0..m).find_map(|i| {
            let v: Scalar = (0..3).map(|r| a.get(r, i) * b.get(i, r)).sum();
            (!v.is_zero_tol(self.eps)).then(|| Witness::with_value(vec![i + 1], v))
        });
        let omega = (0..m)
            .flat_map(|k| (k + 1..m).map(move |l| (k, l)))
            .find_map(|(k, l)| {
                let v = omega_sum(map, k, l);
                (!v.is_zero_tol(self.eps)).then(|| Witness::with_value(vec![k + 1, l + 1], v))
            });
        let conditions = vec![
            self.trace_lambda(map, "1"),
            self.column_sums(map, "2"),
            ConditionCheck::new("3", "A_1i B_i1 + A_2i B_i2 + A_3i B_i3 = 0 for every i", diag),
            ConditionCheck::new("4", "Omega_12kl + Omega_13kl + Omega_23kl = 0 for every k < l", omega),
        ];
        Ok(ClassificationReport::decide(Criterion::ThreeDimensional, conditions, hypotheses, Verdict::Conservative))
    }

    /// Necessary conditions for non-negative `B` in any dimension. Dimensions
    /// 1-3 are delegated to the exact classifiers; when the n = 3 classifier
    /// is inconclusive only because `B` is degenerate, the necessary
    /// conditions are reported instead.
    pub fn check_thm5_necessary(&self, map: &QPMap) -> Result<ClassificationReport> {
        match map.n() {
            1 => return self.check_dim1(map),
            2 => return self.check_thm1(map),
            3 => {
                let r = self.check_thm3(map)?;
                let nonneg = r.hypotheses.first().is_some_and(|h| h.holds);
                if r.verdict != Verdict::Indeterminate || !nonneg {
                    return Ok(r);
                }
            }
            _ => {}
        }
        let conditions = vec![self.trace_lambda(map, "1"), self.column_sums(map, "2")];
        Ok(ClassificationReport::decide(
            Criterion::NecessaryConditions,
            conditions,
            vec![self.nonnegative_b(map)],
            Verdict::NecessaryConditionsHold,
        ))
    }

    /// Symplectic conditions for `n = 2s`:
    /// (a) `A_ij + A_{s+i,j} = 0`, (b) `lambda_i + lambda_{s+i} = 0`,
    /// (c) `A_ip B_pj = A_ip B_{p,s+j} = 0` for `i != j`,
    /// (d) `A_ip (B_pi - B_{p,s+i}) = 0`.
    ///
    /// A symplectic map is conservative. A map failing the conditions is not
    /// thereby non-conservative, so the verdict is then `Indeterminate` with
    /// the `symplectic` hypothesis marked as failing.
    pub fn check_symplectic(&self, map: &QPMap) -> Result<ClassificationReport> {
        let n = map.n();
        if n % 2 != 0 {
            return Err(QpError::OddDimension(n));
        }
        let s = n / 2;
        let (a, b, m, lam) = (map.a(), map.b(), map.m(), map.lambda());
        let eps = self.eps;

        let cond_a = (0..s)
            .flat_map(|i| (0..m).map(move |j| (i, j)))
            .find_map(|(i, j)| {
                let v = a.get(i, j) + a.get(s + i, j);
                (!v.is_zero_tol(eps)).then(|| Witness::with_value(vec![i + 1, j + 1], v))
            });
        let cond_b = (0..s).find_map(|i| {
            let v = &lam[i] + &lam[s + i];
            (!v.is_zero_tol(eps)).then(|| Witness::with_value(vec![i + 1], v))
        });
        let mut cond_c = None;
        'c: for i in 0..s {
            for j in (0..s).filter(|&j| j != i) {
                for p in 0..m {
                    for col in [j, s + j] {
                        let v = a.get(i, p) * b.get(p, col);
                        if !v.is_zero_tol(eps) {
                            cond_c = Some(Witness::with_value(vec![i + 1, col + 1, p + 1], v));
                            break 'c;
                        }
                    }
                }
            }
        }
        let cond_d = (0..s)
            .flat_map(|i| (0..m).map(move |p| (i, p)))
            .find_map(|(i, p)| {
                let v = a.get(i, p) * &(b.get(p, i) - b.get(p, s + i));
                (!v.is_zero_tol(eps)).then(|| Witness::with_value(vec![i + 1, p + 1], v))
            });
        let conditions = vec![
            ConditionCheck::new("a", "A_ij + A_{s+i,j} = 0", cond_a),
            ConditionCheck::new("b", "lambda_i + lambda_{s+i} = 0", cond_b),
            ConditionCheck::new("c", "A_ip B_pj = A_ip B_{p,s+j} = 0 for i != j", cond_c),
            ConditionCheck::new("d", "A_ip (B_pi - B_{p,s+i}) = 0", cond_d),
        ];
        let symplectic = conditions.iter().all(|c| c.holds);
        let hypotheses = vec![ConditionCheck::new(
            "symplectic",
            "conditions (a)-(d) all hold",
            (!symplectic).then(|| Witness::at(vec![])),
        )];
        Ok(ClassificationReport::decide(Criterion::Symplectic, conditions, hypotheses, Verdict::Conservative))
    }

    /// Basis of `{c : c^T M = 0}`; each `c` gives the conserved quantity
    /// `prod_i x_i^c_i`.
    pub fn find_integrals(&self, map: &QPMap) -> IntegralBasis {
        let mt = map.m_matrix().transpose();
        let exponent_vectors = mt
            .nullspace(self.eps)
            .into_iter()
            .map(|v| {
                let lead = v
                    .iter()
                    .find(|x| !x.is_zero_tol(self.eps))
                    .cloned()
                    .expect("kernel vectors are nonzero");
                v.iter()
                    .map(|x| x.checked_div(&lead).expect("nonzero lead"))
                    .collect()
            })
            .collect();
        IntegralBasis { exponent_vectors }
    }
}

/// First degeneracy of the rows of `b`, as 1-based indices.
fn degeneracy(b: &Matrix, eps: f64) -> Option<Vec<usize>> {
    let m = b.rows();
    let sum = |i: usize, j: usize| -> Vec<Scalar> { b.row(i).iter().zip(b.row(j)).map(|(x, y)| x + y).collect() };
    let same = |u: &[Scalar], v: &[Scalar]| u.iter().zip(v).all(|(x, y)| x.approx_eq(y, eps));
    for i in 0..m {
        for j in 0..m {
            for k in j + 1..m {
                if i != j && i != k && same(b.row(i), &sum(j, k)) {
                    return Some(vec![i + 1, j + 1, k + 1]);
                }
            }
        }
    }
    for i in 0..m {
        for j in i + 1..m {
            for k in 0..m {
                for l in k + 1..m {
                    let disjoint = k != i && k != j && l != i && l != j;
                    // each unordered split of four rows is visited once
                    if disjoint && i < k && same(&sum(i, j), &sum(k, l)) {
                        return Some(vec![i + 1, j + 1, k + 1, l + 1]);
                    }
                }
            }
        }
    }
    None
}

pub fn check_dim1(map: &QPMap) -> Result<ClassificationReport> {
    Classifier::default().check_dim1(map)
}

pub fn check_thm1(map: &QPMap) -> Result<ClassificationReport> {
    Classifier::default().check_thm1(map)
}

pub fn is_b_nondegenerate(map: &QPMap) -> Result<(bool, Option<Vec<usize>>)> {
    Classifier::default().is_b_nondegenerate(map)
}

pub fn check_thm3(map: &QPMap) -> Result<ClassificationReport> {
    Classifier::default().check_thm3(map)
}

pub fn check_thm5_necessary(map: &QPMap) -> Result<ClassificationReport> {
    Classifier::default().check_thm5_necessary(map)
}

pub fn check_symplectic(map: &QPMap) -> Result<ClassificationReport> {
    Classifier::default().check_symplectic(map)
}

pub fn find_integrals(map: &QPMap) -> IntegralBasis {
    Classifier::default().find_integrals(map)
}

/// Best exact verdict available for the map's dimension.
pub fn classify(map: &QPMap) -> Result<ClassificationReport> {
    Classifier::default().check_thm5_necessary(map)
}

/// Evaluates `det J` at `npoints` states drawn log-uniformly from the oracle
/// box. Point `i` uses its own ChaCha stream, so the result does not depend
/// on evaluation order. Probabilistic evidence only.
pub fn sampling_oracle(map: &QPMap, seed: u64, npoints: usize) -> Result<OracleReport> {
    sampling_oracle_with(map, seed, npoints, &OracleConfig::default())
}

pub fn sampling_oracle_with(map: &QPMap, seed: u64, npoints: usize, cfg: &OracleConfig) -> Result<OracleReport> {
    if npoints == 0 {
        return Err(QpError::InvalidParameter("npoints must be at least 1".into()));
    }
    let n = map.n();
    let per_point: Vec<Result<(f64, usize)>> = (0..npoints)
        .into_par_iter()
        .map(|i| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(i as u64);
            let mut last_err = None;
            for attempt in 0..cfg.max_attempts {
                let u: Vec<f64> = (0..n).map(|_| rng.gen_range(-cfg.half_width..=cfg.half_width)).collect();
                match analytic_jacobian(map, &State::from_log(u)?) {
                    Ok(ev) => return Ok((ev.det, attempt)),
                    Err(e @ QpError::OverflowGuard { .. }) => last_err = Some(e),
                    Err(e) => return Err(e),
                }
            }
            Err(last_err.expect("at least one attempt"))
        })
        .collect();

    let mut max_abs = 0.0_f64;
    let mut max_dev = 0.0_f64;
    let mut resampled = 0;
    for r in per_point {
        let (det, retries) = r?;
        max_abs = max_abs.max((det.abs() - 1.0).abs());
        max_dev = max_dev.max((det - 1.0).abs());
        resampled += retries;
    }
    let verdict = if max_abs > cfg.threshold {
        OracleVerdict::NotConservative
    } else {
        OracleVerdict::ConsistentWithConservative
    };
    Ok(OracleReport {
        verdict,
        max_abs_deviation: max_abs,
        max_deviation: max_dev,
        points: npoints,
        resampled,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::families::{make_example1, make_example2};

    fn ints(v: &[i64]) -> Vec<Scalar> {
        v.iter().map(|&x| Scalar::int(x)).collect()
    }

    fn q(n: i64, d: i64) -> Scalar {
        Scalar::ratio(n, d)
    }

    fn thm1_map() -> QPMap {
        QPMap::from_components(
            vec![q(3, 10), q(-3, 10)],
            Matrix::from_rows(vec![vec![q(3, 2)], vec![q(-3, 2)]], 1).unwrap(),
            Matrix::from_i64(&[&[2, 2]]),
        )
        .unwrap()
    }

    #[test]
    fn dim1_cases() {
        let id = QPMap::from_components(ints(&[0]), Matrix::zeros(1, 0), Matrix::zeros(0, 1)).unwrap();
        assert_eq!(check_dim1(&id).unwrap().verdict, Verdict::Conservative);
        assert_eq!(check_dim1(&id).unwrap().orientation, Orientation::Preserving);
        let shift = QPMap::from_components(vec![q(1, 10)], Matrix::zeros(1, 0), Matrix::zeros(0, 1)).unwrap();
        assert_eq!(check_dim1(&shift).unwrap().verdict, Verdict::NotConservative);
        let xe = QPMap::from_components(ints(&[0]), Matrix::from_i64(&[&[1]]), Matrix::from_i64(&[&[1]])).unwrap();
        assert_eq!(check_dim1(&xe).unwrap().verdict, Verdict::NotConservative);
        assert!(check_dim1(&thm1_map()).is_err());
    }

    #[test]
    fn thm1_conservative_example() {
        let r = check_thm1(&thm1_map()).unwrap();
        assert_eq!(r.verdict, Verdict::Conservative);
        assert_eq!(r.orientation, Orientation::Preserving);
    }

    #[test]
    fn thm1_lv_fails_condition_three() {
        let lv = QPMap::from_components(ints(&[0, 0]), Matrix::from_i64(&[&[0, 1], &[1, 0]]), Matrix::identity(2)).unwrap();
        let r = check_thm1(&lv).unwrap();
        assert_eq!(r.verdict, Verdict::NotConservative);
        let c3 = r.condition("3").unwrap();
        assert!(!c3.holds);
        assert_eq!(c3.witness.as_ref().unwrap().indices, vec![1]);
    }

    #[test]
    fn thm1_trace_failure() {
        let map = QPMap::from_components(ints(&[1, 1]), Matrix::from_i64(&[&[1], &[-1]]), Matrix::from_i64(&[&[1, 1]])).unwrap();
        let r = check_thm1(&map).unwrap();
        assert!(!r.condition("1").unwrap().holds);
        assert!(r.condition("2").unwrap().holds);
        assert_eq!(r.verdict, Verdict::NotConservative);
    }

    #[test]
    fn float_maps_use_tolerance() {
        let map = QPMap::from_components(
            vec![Scalar::real(0.1), Scalar::real(-0.1 + 1e-14)],
            Matrix::from_f64(2, 1, &[0.3, -0.3]),
            Matrix::from_f64(1, 2, &[1.0, 1.0]),
        )
        .unwrap();
        assert_eq!(check_thm1(&map).unwrap().verdict, Verdict::Conservative);
        let loose = Classifier::new(0.0).check_thm1(&map).unwrap();
        assert_eq!(loose.verdict, Verdict::NotConservative);
    }

    #[test]
    fn nondegeneracy() {
        let with_b = |rows: &[&[i64]]| {
            let m = rows.len();
            let a = Matrix::from_rows((0..3).map(|_| vec![Scalar::one(); m]).collect(), m).unwrap();
            QPMap::from_components(ints(&[0, 0, 0]), a, Matrix::from_i64(rows)).unwrap()
        };
        let ex2 = with_b(&[&[1, 0, 0], &[0, 1, 0], &[0, 0, 1], &[1, 1, 1]]);
        assert_eq!(is_b_nondegenerate(&ex2).unwrap(), (true, None));
        let tri = with_b(&[&[1, 0, 0], &[0, 1, 0], &[1, 1, 0]]);
        assert_eq!(is_b_nondegenerate(&tri).unwrap(), (false, Some(vec![3, 1, 2])));
        let quad = with_b(&[&[2, 0, 0], &[0, 2, 0], &[1, 1, 1], &[1, 1, -1]]);
        let (ok, w) = is_b_nondegenerate(&quad).unwrap();
        assert!(!ok);
        let w = w.unwrap();
        assert_eq!(w.len(), 4);
        let rows = quad.b().to_rows();
        let add = |i: usize, j: usize| -> Vec<Scalar> { rows[i - 1].iter().zip(&rows[j - 1]).map(|(x, y)| x + y).collect() };
        assert_eq!(add(w[0], w[1]), add(w[2], w[3]));
        assert!(is_b_nondegenerate(&thm1_map()).is_err());
    }

    #[test]
    fn omega_index_checks_and_proportional_columns() {
        let a = Matrix::from_i64(&[&[1, 2], &[2, 4], &[-3, -6]]);
        let map = QPMap::from_components(ints(&[0, 0, 0]), a, Matrix::from_i64(&[&[1, 0, 0], &[0, 1, 0]])).unwrap();
        for (i, j) in [(1, 2), (1, 3), (2, 3)] {
            assert_eq!(compute_omega(&map, i, j, 1, 2).unwrap(), Scalar::zero());
        }
        assert!(compute_omega(&map, 0, 1, 1, 2).is_err());
        assert!(compute_omega(&map, 2, 1, 1, 2).is_err());
        assert!(compute_omega(&map, 1, 2, 1, 3).is_err());
    }

    #[test]
    fn omega_on_lv_reduces_to_products() {
        // B = I: Omega_ijkl = (A_ik A_jl - A_il A_jk)(d_ki d_lj - d_kj d_li)
        let a = Matrix::from_i64(&[&[0, 2, 3], &[5, 0, 7], &[-5, -2, 0]]);
        let map = QPMap::from_components(ints(&[0, 0, 0]), a.clone(), Matrix::identity(3)).unwrap();
        let g = |i: usize, j: usize| a.get(i - 1, j - 1).clone();
        // (k,l) = (1,2): only Omega_1212 survives = A11 A22 - A12 A21 = -A12 A21 when A11=A22=0
        assert_eq!(omega_sum(&map, 0, 1), -(g(1, 2) * g(2, 1)));
        assert_eq!(omega_sum(&map, 0, 2), -(g(1, 3) * g(3, 1)));
        assert_eq!(omega_sum(&map, 1, 2), -(g(2, 3) * g(3, 2)));
    }

    #[test]
    fn examples_are_conservative() {
        let e1 = make_example1(q(1, 10), q(-1, 20), q(7, 10)).unwrap();
        let r = check_thm3(&e1).unwrap();
        assert_eq!(r.verdict, Verdict::Conservative, "{r:?}");
        let e2 = make_example2(q(1, 10), q(1, 5), q(1, 2), q(3, 10), q(-1, 10)).unwrap();
        let r = check_thm3(&e2).unwrap();
        assert_eq!(r.verdict, Verdict::Conservative, "{r:?}");
        assert!(r.hypotheses_hold());
        // the (k,l) = (1,2) quadratic coefficient vanishes with A12 = A21 = 0
        assert_eq!(omega_sum(&e2, 0, 1), Scalar::zero());
    }

    #[test]
    fn thm3_lv_diagonal_violates_condition_three() {
        let a = Matrix::from_i64(&[&[1, 0, 0], &[-1, 0, 0], &[0, 0, 0]]);
        let a = Matrix::from_rows(
            a.to_rows()
                .into_iter()
                .enumerate()
                .map(|(i, mut r)| {
                    // keep every column nonzero and balanced
                    r[1] = Scalar::int([1, 0, -1][i]);
                    r[2] = Scalar::int([1, -1, 0][i]);
                    r
                })
                .collect(),
            3,
        )
        .unwrap();
        let lv = QPMap::from_components(ints(&[0, 0, 0]), a, Matrix::identity(3)).unwrap();
        let r = check_thm3(&lv).unwrap();
        assert_eq!(r.verdict, Verdict::NotConservative);
        let c3 = r.condition("3").unwrap();
        assert_eq!(c3.witness.as_ref().unwrap().indices, vec![1]);
    }

    #[test]
    fn thm3_indeterminate_outside_hypotheses() {
        let neg = QPMap::from_components(
            ints(&[0, 0, 0]),
            Matrix::from_i64(&[&[1], &[-1], &[0]]),
            Matrix::from_i64(&[&[0, 0, -1]]),
        )
        .unwrap();
        let r = check_thm3(&neg).unwrap();
        assert_eq!(r.verdict, Verdict::Indeterminate);
        assert_eq!(r.orientation, Orientation::Unknown);
        assert!(!r.hypotheses[0].holds);
    }

    #[test]
    fn thm5_delegation_and_failure() {
        let e1 = make_example1(q(1, 10), q(-1, 20), q(7, 10)).unwrap();
        let r = check_thm5_necessary(&e1).unwrap();
        assert_eq!((r.criterion, r.verdict), (Criterion::ThreeDimensional, Verdict::Conservative));

        let lam = vec![q(1, 1), q(0, 1), q(0, 1), q(0, 1)];
        let a = Matrix::from_i64(&[&[1], &[-1], &[0], &[0]]);
        let map = QPMap::from_components(lam, a, Matrix::from_i64(&[&[1, 1, 0, 0]])).unwrap();
        let r = check_thm5_necessary(&map).unwrap();
        assert_eq!(r.verdict, Verdict::NotConservative);
        assert!(!r.condition("1").unwrap().holds);
    }

    #[test]
    fn symplectic_rejects_odd_dimension() {
        let e1 = make_example1(q(1, 10), q(-1, 20), q(7, 10)).unwrap();
        assert_eq!(check_symplectic(&e1), Err(QpError::OddDimension(3)));
    }

    #[test]
    fn symplectic_condition_b_witness() {
        let map = QPMap::from_components(
            vec![q(1, 2), q(0, 1), q(-1, 2), q(1, 3)],
            Matrix::from_i64(&[&[1], &[0], &[-1], &[0]]),
            Matrix::from_i64(&[&[1, 0, 1, 0]]),
        )
        .unwrap();
        let r = check_symplectic(&map).unwrap();
        assert_eq!(r.verdict, Verdict::Indeterminate);
        let b = r.condition("b").unwrap();
        assert!(!b.holds);
        assert_eq!(b.witness.as_ref().unwrap().indices, vec![2]);
        assert!(r.conditions.iter().filter(|c| c.id != "b").all(|c| c.holds));
    }

    #[test]
    fn integrals_of_examples() {
        let e1 = make_example1(q(1, 10), q(-1, 20), q(7, 10)).unwrap();
        let basis = find_integrals(&e1);
        assert_eq!(basis.exponent_vectors, vec![ints(&[1, 1, 1])]);
        let b2 = find_integrals(&thm1_map());
        assert_eq!(b2.exponent_vectors, vec![ints(&[1, 1])]);
    }

    #[test]
    fn integral_of_frozen_coordinate() {
        let map = QPMap::from_components(ints(&[-1, 0]), Matrix::from_i64(&[&[1], &[0]]), Matrix::from_i64(&[&[1, 1]])).unwrap();
        let basis = find_integrals(&map);
        assert_eq!(basis.exponent_vectors, vec![ints(&[0, 1])]);
        let traj = map.iterate(&State::from_x(&[0.2, 0.3]).unwrap(), 10).unwrap();
        for s in &traj.states {
            assert_eq!(s.log()[1], 0.3_f64.ln());
        }
    }

    #[test]
    fn oracle_basic_cases() {
        let id = QPMap::from_components(ints(&[0, 0]), Matrix::zeros(2, 0), Matrix::zeros(0, 2)).unwrap();
        let r = sampling_oracle(&id, 1, 50).unwrap();
        assert_eq!(r.verdict, OracleVerdict::ConsistentWithConservative);
        assert_eq!(r.max_abs_deviation, 0.0);

        let lv = QPMap::from_components(ints(&[0, 0]), Matrix::from_i64(&[&[0, 1], &[1, 0]]), Matrix::identity(2)).unwrap();
        assert_eq!(sampling_oracle(&lv, 1, 50).unwrap().verdict, OracleVerdict::NotConservative);
        assert!(sampling_oracle(&lv, 1, 0).is_err());
    }

    #[test]
    fn oracle_is_deterministic() {
        let e2 = make_example2(q(1, 10), q(1, 5), q(1, 2), q(3, 10), q(-1, 10)).unwrap();
        let a = sampling_oracle(&e2, 42, 200).unwrap();
        let b = sampling_oracle(&e2, 42, 200).unwrap();
        assert_eq!(a, b);
        assert!(a.max_abs_deviation <= 1e-10);
    }
}
