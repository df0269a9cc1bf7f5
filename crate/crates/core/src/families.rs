//! Map constructors: the two worked three-dimensional examples and seeded
//! random families whose structural conditions hold by construction.

use std::fmt;
use std::str::FromStr;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{QpError, Result};
use crate::map::QPMap;
use crate::matrix::Matrix;
use crate::scalar::Scalar;

/// Conservative Lotka-Volterra-derived map in dimension 3:
/// `lambda = (l1, l2, -l1-l2)`, `A = (a13, -a13, 0)^T`, `B = (0 0 1)`.
pub fn make_example1(l1: Scalar, l2: Scalar, a13: Scalar) -> Result<QPMap> {
    if a13.is_exactly_zero() {
        return Err(QpError::InvalidParameter("A13 must be nonzero".into()));
    }
    let l3 = -(&l1 + &l2);
    let a = Matrix::from_rows(vec![vec![a13.clone()], vec![-a13], vec![Scalar::zero()]], 1)?;
    QPMap::from_components(vec![l1, l2, l3], a, Matrix::from_i64(&[&[0, 0, 1]]))
}

/// Conservative non-LV map in dimension 3 with `B = [[0,0,1],[1,1,1]]` and
/// `A = [[a13, a14], [-a13, a24], [0, -a14-a24]]`.
pub fn make_example2(l1: Scalar, l2: Scalar, a13: Scalar, a14: Scalar, a24: Scalar) -> Result<QPMap> {
    if a13.is_exactly_zero() {
        return Err(QpError::InvalidParameter("A13 must be nonzero".into()));
    }
    if a14.is_exactly_zero() && a24.is_exactly_zero() {
        return Err(QpError::InvalidParameter(
            "A14 and A24 cannot both vanish (zero column of A)".into(),
        ));
    }
    let l3 = -(&l1 + &l2);
    let a34 = -(&a14 + &a24);
    let a = Matrix::from_rows(
        vec![
            vec![a13.clone(), a14],
            vec![-a13, a24],
            vec![Scalar::zero(), a34],
        ],
        2,
    )?;
    QPMap::from_components(vec![l1, l2, l3], a, Matrix::from_i64(&[&[0, 0, 1], &[1, 1, 1]]))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Profile {
    /// Arbitrary `lambda`, `A` and integer `B` in `[-2, 2]`.
    Unconstrained,
    /// `n = 2`: `lambda1 + lambda2 = 0`, `A1j + A2j = 0`, `Bj1 = Bj2`.
    Thm1Conservative,
    /// `make_example1` with random parameters (`n = 3`, `m = 1`).
    Example1Family,
    /// `make_example2` with random parameters (`n = 3`, `m = 2`).
    Example2Family,
    /// `B` is the identity (`m = n`).
    LotkaVolterra,
    /// `n = 2s`, symplectic conditions (a)-(d) with non-negative `B`.
    Symplectic(usize),
    /// `sum lambda = 0`, every column of `A` sums to zero, `B` non-negative
    /// integer in `[0, 2]`.
    ZeroTrace,
}

impl fmt::Display for Profile {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Profile::Unconstrained => f.write_str("unconstrained"),
            Profile::Thm1Conservative => f.write_str("thm1"),
            Profile::Example1Family => f.write_str("example1"),
            Profile::Example2Family => f.write_str("example2"),
            Profile::LotkaVolterra => f.write_str("lv"),
            Profile::Symplectic(s) => write!(f, "symplectic({s})"),
            Profile::ZeroTrace => f.write_str("zero_trace"),
        }
    }
}

impl FromStr for Profile {
    type Err = QpError;

    /// Accepts the `Display` names; `symplectic` alone means `s = 1`.
    fn from_str(s: &str) -> Result<Self> {
        Ok(match s {
            "unconstrained" => Profile::Unconstrained,
            "thm1" | "thm1_conservative" => Profile::Thm1Conservative,
            "example1" | "example1_family" => Profile::Example1Family,
            "example2" | "example2_family" => Profile::Example2Family,
            "lv" => Profile::LotkaVolterra,
            "zero_trace" | "thm5" => Profile::ZeroTrace,
            "symplectic" => Profile::Symplectic(1),
            other => {
                let inner = other
                    .strip_prefix("symplectic(")
                    .and_then(|r| r.strip_suffix(')'))
                    .and_then(|r| r.parse().ok())
                    .ok_or_else(|| QpError::InvalidParameter(format!("unknown profile {other:?}")))?;
                Profile::Symplectic(inner)
            }
        })
    }
}

/// Bounds for random `lambda` and `A` entries. Values are drawn from the
/// rational grid `k / GRID` inside the interval so generated maps are exact.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct EntryRange {
    pub lo: f64,
    pub hi: f64,
}

impl Default for EntryRange {
    fn default() -> Self {
        EntryRange { lo: -1.0, hi: 1.0 }
    }
}

const GRID: i64 = 8;

struct Sampler {
    rng: ChaCha8Rng,
    lo: i64,
    hi: i64,
}

impl Sampler {
    fn new(seed: u64, range: EntryRange) -> Result<Self> {
        if !(range.lo.is_finite() && range.hi.is_finite() && range.lo <= range.hi) {
            return Err(QpError::InvalidParameter(format!(
                "entry range [{}, {}] is not a bounded interval",
                range.lo, range.hi
            )));
        }
        let lo = (range.lo * GRID as f64).ceil() as i64;
        let hi = (range.hi * GRID as f64).floor() as i64;
        if lo > hi || (lo == 0 && hi == 0) {
            return Err(QpError::InvalidParameter(format!(
                "entry range [{}, {}] contains no nonzero grid value",
                range.lo, range.hi
            )));
        }
        Ok(Sampler {
            rng: ChaCha8Rng::seed_from_u64(seed),
            lo,
            hi,
        })
    }

    fn any(&mut self) -> Scalar {
        Scalar::ratio(self.rng.gen_range(self.lo..=self.hi), GRID)
    }

    fn nonzero(&mut self) -> Scalar {
        loop {
            let k = self.rng.gen_range(self.lo..=self.hi);
            if k != 0 {
                return Scalar::ratio(k, GRID);
            }
        }
    }

    fn column(&mut self, n: usize) -> Vec<Scalar> {
        let mut col: Vec<Scalar> = (0..n).map(|_| self.any()).collect();
        if col.iter().all(Scalar::is_exactly_zero) {
            let i = self.rng.gen_range(0..n);
            col[i] = self.nonzero();
        }
        col
    }

    /// Column with entries summing to zero and at least one nonzero entry.
    fn balanced_column(&mut self, n: usize) -> Vec<Scalar> {
        let mut col: Vec<Scalar> = (0..n - 1).map(|_| self.any()).collect();
        if col.iter().all(Scalar::is_exactly_zero) {
            let i = self.rng.gen_range(0..n - 1);
            col[i] = self.nonzero();
        }
        let last = -col.iter().sum::<Scalar>();
        col.push(last);
        col
    }

    /// `count` distinct nonzero rows drawn from `{lo..=hi}^n`.
    fn distinct_int_rows(&mut self, count: usize, n: usize, lo: i64, hi: i64) -> Result<Vec<Vec<i64>>> {
        let span = (hi - lo + 1) as u32;
        let available = (span as u64).checked_pow(n as u32).unwrap_or(u64::MAX) - 1;
        if count as u64 > available {
            return Err(QpError::InvalidParameter(format!(
                "cannot draw {count} distinct exponent rows in dimension {n}"
            )));
        }
        let mut rows: Vec<Vec<i64>> = Vec::with_capacity(count);
        while rows.len() < count {
            let r: Vec<i64> = (0..n).map(|_| self.rng.gen_range(lo..=hi)).collect();
            if r.iter().any(|&v| v != 0) && !rows.contains(&r) {
                rows.push(r);
            }
        }
        Ok(rows)
    }
}

fn int_matrix(rows: &[Vec<i64>], cols: usize) -> Matrix {
    let rows = rows
        .iter()
        .map(|r| r.iter().map(|&v| Scalar::int(v)).collect())
        .collect();
    Matrix::from_rows(rows, cols).expect("rectangular by construction")
}

fn columns_to_matrix(cols: Vec<Vec<Scalar>>, n: usize) -> Matrix {
    let m = cols.len();
    let mut a = Matrix::zeros(n, m);
    for (j, col) in cols.into_iter().enumerate() {
        for (i, v) in col.into_iter().enumerate() {
            a.set(i, j, v);
        }
    }
    a
}

fn expect_dim(profile: Profile, want: usize, n: usize) -> Result<()> {
    if n != want {
        return Err(QpError::InvalidParameter(format!(
            "profile {profile} needs n = {want}, got n = {n}"
        )));
    }
    Ok(())
}

/// Deterministic random map for `seed`.
///
/// `m` is ignored by the profiles that fix it (`Example1Family`,
/// `Example2Family`, `LotkaVolterra`).
pub fn random_map(seed: u64, n: usize, m: usize, range: EntryRange, profile: Profile) -> Result<QPMap> {
    if n == 0 {
        return Err(QpError::InvalidParameter("n must be positive".into()));
    }
    let mut s = Sampler::new(seed, range)?;
    match profile {
        Profile::Unconstrained => {
            let lambda = (0..n).map(|_| s.any()).collect();
            let a = columns_to_matrix((0..m).map(|_| s.column(n)).collect(), n);
            let b = int_matrix(&s.distinct_int_rows(m, n, -2, 2)?, n);
            QPMap::from_components(lambda, a, b)
        }
        Profile::Thm1Conservative => {
            expect_dim(profile, 2, n)?;
            let halves: Vec<i64> = (-4..=4).filter(|&k| k != 0).collect();
            if m > halves.len() {
                return Err(QpError::InvalidParameter(format!(
                    "profile thm1 supports m <= {}",
                    halves.len()
                )));
            }
            let l = s.any();
            let lambda = vec![l.clone(), -l];
            let a = columns_to_matrix(
                (0..m)
                    .map(|_| {
                        let v = s.nonzero();
                        vec![v.clone(), -v]
                    })
                    .collect(),
                2,
            );
            let mut picks = halves.clone();
            picks.shuffle(&mut s.rng);
            let b_rows = picks[..m]
                .iter()
                .map(|&k| vec![Scalar::ratio(k, 2), Scalar::ratio(k, 2)])
                .collect();
            QPMap::from_components(lambda, a, Matrix::from_rows(b_rows, 2)?)
        }
        Profile::Example1Family => {
            expect_dim(profile, 3, n)?;
            make_example1(s.any(), s.any(), s.nonzero())
        }
        Profile::Example2Family => {
            expect_dim(profile, 3, n)?;
            let (l1, l2, a13) = (s.any(), s.any(), s.nonzero());
            let a14 = s.any();
            let a24 = if a14.is_exactly_zero() { s.nonzero() } else { s.any() };
            make_example2(l1, l2, a13, a14, a24)
        }
        Profile::LotkaVolterra => {
            let lambda = (0..n).map(|_| s.any()).collect();
            let a = columns_to_matrix((0..n).map(|_| s.column(n)).collect(), n);
            QPMap::from_components(lambda, a, Matrix::identity(n))
        }
        Profile::Symplectic(half) => {
            if half == 0 {
                return Err(QpError::InvalidParameter("symplectic profile needs s >= 1".into()));
            }
            expect_dim(profile, 2 * half, n)?;
            // quasimonomial p is owned by one pair (i, s+i): B_p has the same
            // positive exponent at i and s+i and zeros elsewhere, A_p is
            // (a, -a) on that pair and zero elsewhere
            let mut slots: Vec<(usize, i64)> = (0..half).flat_map(|i| (1..=4).map(move |k| (i, k))).collect();
            if m > slots.len() {
                return Err(QpError::InvalidParameter(format!(
                    "profile symplectic({half}) supports m <= {}",
                    slots.len()
                )));
            }
            slots.shuffle(&mut s.rng);
            slots.truncate(m);
            let lambda_half: Vec<Scalar> = (0..half).map(|_| s.any()).collect();
            let mut lambda = lambda_half.clone();
            lambda.extend(lambda_half.iter().map(|l| -l));
            let mut a = Matrix::zeros(n, m);
            let mut b = Matrix::zeros(m, n);
            for (p, &(owner, k)) in slots.iter().enumerate() {
                let v = s.nonzero();
                a.set(owner, p, v.clone());
                a.set(half + owner, p, -v);
                b.set(p, owner, Scalar::ratio(k, 2));
                b.set(p, half + owner, Scalar::ratio(k, 2));
            }
            QPMap::from_components(lambda, a, b)
        }
        Profile::ZeroTrace => {
            if n < 2 {
                return Err(QpError::InvalidParameter("profile zero_trace needs n >= 2".into()));
            }
            let lambda = s.balanced_column(n);
            let a = columns_to_matrix((0..m).map(|_| s.balanced_column(n)).collect(), n);
            let b = int_matrix(&s.distinct_int_rows(m, n, 0, 2)?, n);
            QPMap::from_components(lambda, a, b)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn example1_matrices_verbatim() {
        let map = make_example1(Scalar::ratio(1, 10), Scalar::ratio(-1, 20), Scalar::ratio(7, 10)).unwrap();
        assert_eq!(
            map.lambda(),
            &[Scalar::ratio(1, 10), Scalar::ratio(-1, 20), Scalar::ratio(-1, 20)]
        );
        assert_eq!(map.a().col(0), vec![Scalar::ratio(7, 10), Scalar::ratio(-7, 10), Scalar::zero()]);
        assert_eq!(map.b(), &Matrix::from_i64(&[&[0, 0, 1]]));
        assert!(!map.is_lotka_volterra());
        assert!(make_example1(Scalar::zero(), Scalar::zero(), Scalar::zero()).is_err());
    }

    #[test]
    fn example2_matrices_verbatim() {
        let q = |n, d| Scalar::ratio(n, d);
        let map = make_example2(q(1, 10), q(1, 5), q(1, 2), q(3, 10), q(-1, 10)).unwrap();
        assert_eq!(map.lambda(), &[q(1, 10), q(1, 5), q(-3, 10)]);
        assert_eq!(
            map.a().to_rows(),
            vec![vec![q(1, 2), q(3, 10)], vec![q(-1, 2), q(-1, 10)], vec![q(0, 1), q(-1, 5)]]
        );
        assert_eq!(map.b(), &Matrix::from_i64(&[&[0, 0, 1], &[1, 1, 1]]));
        assert!(map.b().entries().all(|x| !x.is_negative_tol(0.0)));
        assert!(make_example2(q(0, 1), q(0, 1), q(1, 1), q(0, 1), q(0, 1)).is_err());
    }

    #[test]
    fn deterministic_in_seed() {
        for profile in [Profile::Unconstrained, Profile::ZeroTrace] {
            let a = random_map(5, 3, 3, EntryRange::default(), profile).unwrap();
            let b = random_map(5, 3, 3, EntryRange::default(), profile).unwrap();
            assert_eq!(a, b);
        }
    }

    #[test]
    fn impossible_profiles() {
        let r = EntryRange::default();
        assert!(random_map(1, 3, 1, r, Profile::Thm1Conservative).is_err());
        assert!(random_map(1, 3, 1, r, Profile::Symplectic(1)).is_err());
        assert!(random_map(1, 2, 100, r, Profile::ZeroTrace).is_err());
        assert!(random_map(1, 2, 1, EntryRange { lo: 0.0, hi: 0.01 }, Profile::Unconstrained).is_err());
    }

    #[test]
    fn lv_profile_has_identity_exponents() {
        let map = random_map(1, 2, 0, EntryRange::default(), Profile::LotkaVolterra).unwrap();
        assert!(map.is_lotka_volterra());
    }

    #[test]
    fn profile_names_roundtrip() {
        for p in [
            Profile::Unconstrained,
            Profile::Thm1Conservative,
            Profile::Example1Family,
            Profile::Example2Family,
            Profile::LotkaVolterra,
            Profile::Symplectic(3),
            Profile::ZeroTrace,
        ] {
            assert_eq!(p.to_string().parse::<Profile>().unwrap(), p);
        }
    }
}
