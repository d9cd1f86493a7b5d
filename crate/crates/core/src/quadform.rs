//! Integer quadratic forms `R(x) = xᵀMx` and their exact linear algebra.

use std::fmt;

use num_bigint::BigInt;
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, Signed, Zero};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Non-degenerate quadratic form with symmetric integer matrix.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct QuadraticForm {
    dim: usize,
    /// Row-major `dim × dim` matrix.
    matrix: Vec<i64>,
}

/// Counts of positive and negative squares, and `s = min(p, q)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Signature {
    pub positive: usize,
    pub negative: usize,
    pub s: usize,
}

impl Signature {
    fn new(positive: usize, negative: usize) -> Self {
        Self {
            positive,
            negative,
            s: positive.min(negative),
        }
    }
}

/// `R(v) = D(Tv)` with `T` rational and `D` diagonal.
#[derive(Debug, Clone, PartialEq)]
pub struct RationalDiagonalization {
    /// Rows of `T`.
    pub transform: Vec<Vec<BigRational>>,
    /// Diagonal coefficients of `D`.
    pub diagonal: Vec<BigRational>,
    /// Least common multiple of the denominators of `T`, so that
    /// `T(ℤ^d) ⊂ q⁻¹ℤ^d`.
    pub denominator: BigInt,
}

impl RationalDiagonalization {
    pub fn apply(&self, v: &[BigRational]) -> Vec<BigRational> {
        self.transform
            .iter()
            .map(|row| {
                row.iter()
                    .zip(v)
                    .fold(BigRational::zero(), |acc, (t, x)| acc + t * x)
            })
            .collect()
    }

    /// `D(Tv)`.
    pub fn evaluate(&self, v: &[BigRational]) -> BigRational {
        self.apply(v)
            .iter()
            .zip(&self.diagonal)
            .fold(BigRational::zero(), |acc, (y, c)| acc + c * y * y)
    }

    pub fn signature(&self) -> Signature {
        let pos = self.diagonal.iter().filter(|c| c.is_positive()).count();
        let neg = self.diagonal.iter().filter(|c| c.is_negative()).count();
        Signature::new(pos, neg)
    }
}

impl QuadraticForm {
    /// Builds a form from a row-major matrix, rejecting asymmetric or
    /// singular input.
    pub fn new(dim: usize, matrix: Vec<i64>) -> Result<Self> {
        if dim == 0 {
            return Err(Error::InvalidParameter("dimension must be positive".into()));
        }
        if matrix.len() != dim * dim {
            return Err(Error::DimensionMismatch {
                expected: dim * dim,
                got: matrix.len(),
            });
        }
        let mut bad = Vec::new();
        for i in 0..dim {
            for j in (i + 1)..dim {
                let (a, b) = (matrix[i * dim + j], matrix[j * dim + i]);
                if a != b {
                    bad.push(format!("({i},{j})={a} vs ({j},{i})={b}"));
                }
            }
        }
        if !bad.is_empty() {
            return Err(Error::Asymmetric(bad.join(", ")));
        }
        let form = Self { dim, matrix };
        if form.determinant().is_zero() {
            return Err(Error::Degenerate);
        }
        Ok(form)
    }

    pub fn diagonal(coeffs: &[i64]) -> Result<Self> {
        let d = coeffs.len();
        let mut m = vec![0; d * d];
        for (i, &c) in coeffs.iter().enumerate() {
            m[i * d + i] = c;
        }
        Self::new(d, m)
    }

    /// Parses `diag:1,-1` or `matrix:0,1,1,0` (square row-major list).
    pub fn parse(spec: &str) -> Result<Self> {
        let (kind, body) = spec
            .split_once(':')
            .ok_or_else(|| Error::Parse(format!("form `{spec}`: expected diag:... or matrix:...")))?;
        let entries = parse_int_list(body)?;
        match kind.trim() {
            "diag" => Self::diagonal(&entries),
            "matrix" => {
                let d = (entries.len() as f64).sqrt().round() as usize;
                if d * d != entries.len() {
                    return Err(Error::Parse(format!(
                        "matrix form has {} entries, not a perfect square",
                        entries.len()
                    )));
                }
                Self::new(d, entries)
            }
            other => Err(Error::Parse(format!("unknown form kind `{other}`"))),
        }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn matrix(&self) -> &[i64] {
        &self.matrix
    }

    pub fn entry(&self, i: usize, j: usize) -> i64 {
        self.matrix[i * self.dim + j]
    }

    /// Stable 64-bit FNV-1a digest of `(dim, matrix)`.
    pub fn digest(&self) -> u64 {
        let mut h: u64 = 0xcbf2_9ce4_8422_2325;
        let mut feed = |x: i64| {
            for b in x.to_le_bytes() {
                h ^= b as u64;
                h = h.wrapping_mul(0x0000_0100_0000_01b3);
            }
        };
        feed(self.dim as i64);
        for &m in &self.matrix {
            feed(m);
        }
        h
    }

    /// `nᵀMn`, exactly; errors if the result leaves the `i64` range.
    pub fn evaluate(&self, n: &[i64]) -> Result<i64> {
        if n.len() != self.dim {
            return Err(Error::DimensionMismatch {
                expected: self.dim,
                got: n.len(),
            });
        }
        let mut acc: i128 = 0;
        for i in 0..self.dim {
            let mut row: i128 = 0;
            for j in 0..self.dim {
                row = (self.entry(i, j) as i128)
                    .checked_mul(n[j] as i128)
                    .and_then(|t| row.checked_add(t))
                    .ok_or(Error::Overflow("R(n)"))?;
            }
            acc = row
                .checked_mul(n[i] as i128)
                .and_then(|t| acc.checked_add(t))
                .ok_or(Error::Overflow("R(n)"))?;
        }
        i64::try_from(acc).map_err(|_| Error::Overflow("R(n)"))
    }

    /// Evaluation without range checks for hot loops; callers guarantee
    /// `|n|∞` small enough (see [`QuadraticForm::frequency_bound`]).
    #[inline]
    pub(crate) fn eval_unchecked(&self, n: &[i64]) -> i64 {
        let d = self.dim;
        let mut acc = 0i64;
        for i in 0..d {
            let row: i64 = (0..d).map(|j| self.matrix[i * d + j] * n[j]).sum();
            acc += row * n[i];
        }
        acc
    }

    pub fn evaluate_rational(&self, v: &[BigRational]) -> BigRational {
        let mut acc = BigRational::zero();
        for i in 0..self.dim {
            for j in 0..self.dim {
                let m = self.entry(i, j);
                if m != 0 {
                    acc += BigRational::from_integer(BigInt::from(m)) * &v[i] * &v[j];
                }
            }
        }
        acc
    }

    /// Exact determinant by fraction-free (Bareiss) elimination.
    pub fn determinant(&self) -> BigInt {
        let d = self.dim;
        let mut a: Vec<Vec<BigInt>> = (0..d)
            .map(|i| (0..d).map(|j| BigInt::from(self.entry(i, j))).collect())
            .collect();
        let mut sign = BigInt::one();
        let mut prev = BigInt::one();
        for k in 0..d {
            if a[k][k].is_zero() {
                match (k + 1..d).find(|&r| !a[r][k].is_zero()) {
                    Some(r) => {
                        a.swap(k, r);
                        sign = -sign;
                    }
                    None => return BigInt::zero(),
                }
            }
            for i in (k + 1)..d {
                for j in (k + 1)..d {
                    let v = &a[i][j] * &a[k][k] - &a[i][k] * &a[k][j];
                    a[i][j] = v / &prev;
                }
            }
            prev = a[k][k].clone();
        }
        sign * &a[d - 1][d - 1]
    }

    /// Lagrange diagonalization over ℚ.
    ///
    /// Each step picks `w` with `wᵀAw = c ≠ 0` (a basis vector when a
    /// diagonal entry survives, else `e_i + e_j`), peels off
    /// `(wᵀAv)² / c` and replaces `A` by `A - (Aw)(Aw)ᵀ/c`, which kills
    /// `w` and lowers the rank by one. Rows are scaled so that their
    /// leading nonzero entry is 1.
    pub fn diagonalize_rational(&self) -> RationalDiagonalization {
        let d = self.dim;
        let mut a: Vec<Vec<BigRational>> = (0..d)
            .map(|i| {
                (0..d)
                    .map(|j| BigRational::from_integer(BigInt::from(self.entry(i, j))))
                    .collect()
            })
            .collect();
        let mut transform = Vec::with_capacity(d);
        let mut diagonal = Vec::with_capacity(d);
        for _ in 0..d {
            let w: Vec<BigRational> = match (0..d).find(|&k| !a[k][k].is_zero()) {
                Some(k) => unit(d, &[k]),
                None => {
                    let (i, j) = (0..d)
                        .flat_map(|i| (i + 1..d).map(move |j| (i, j)))
                        .find(|&(i, j)| !a[i][j].is_zero())
                        .expect("non-degenerate form keeps full rank");
                    unit(d, &[i, j])
                }
            };
            let aw: Vec<BigRational> = (0..d)
                .map(|i| {
                    a[i].iter()
                        .zip(&w)
                        .fold(BigRational::zero(), |acc, (x, y)| acc + x * y)
                })
                .collect();
            let c = aw
                .iter()
                .zip(&w)
                .fold(BigRational::zero(), |acc, (x, y)| acc + x * y);
            for i in 0..d {
                for j in 0..d {
                    let delta = &aw[i] * &aw[j] / &c;
                    a[i][j] -= delta;
                }
            }
            let lead = aw
                .iter()
                .find(|x| !x.is_zero())
                .cloned()
                .expect("Aw is nonzero when wᵀAw ≠ 0");
            let row: Vec<BigRational> = aw.iter().map(|x| x / &lead).collect();
            diagonal.push(&lead * &lead / &c);
            transform.push(row);
        }
        let denominator = transform
            .iter()
            .flatten()
            .fold(BigInt::one(), |acc, x| acc.lcm(x.denom()));
        RationalDiagonalization {
            transform,
            diagonal,
            denominator,
        }
    }

    pub fn signature(&self) -> Signature {
        self.diagonalize_rational().signature()
    }

    /// Eigenvalue sign counts from the characteristic polynomial.
    ///
    /// The polynomial is computed exactly (Faddeev–LeVerrier over ℚ). A real
    /// symmetric matrix has only real eigenvalues, so Descartes' rule of
    /// signs is exact for `p(λ)` and `p(-λ)`.
    pub fn inertia_from_charpoly(&self) -> Signature {
        let coeffs = self.characteristic_polynomial();
        let positive = sign_changes(&coeffs);
        let flipped: Vec<BigRational> = coeffs
            .iter()
            .enumerate()
            .map(|(k, c)| if k % 2 == 1 { -c } else { c.clone() })
            .collect();
        Signature::new(positive, sign_changes(&flipped))
    }

    /// Coefficients of `det(λI - M)`, lowest degree first.
    pub fn characteristic_polynomial(&self) -> Vec<BigRational> {
        let d = self.dim;
        let a: Vec<Vec<BigRational>> = (0..d)
            .map(|i| {
                (0..d)
                    .map(|j| BigRational::from_integer(BigInt::from(self.entry(i, j))))
                    .collect()
            })
            .collect();
        let mut coeffs = vec![BigRational::zero(); d + 1];
        coeffs[d] = BigRational::one();
        let mut m = vec![vec![BigRational::zero(); d]; d];
        for k in 1..=d {
            // M_k = A M_{k-1} + c_{d-k+1} I
            let mut next = vec![vec![BigRational::zero(); d]; d];
            for i in 0..d {
                for j in 0..d {
                    let mut s = BigRational::zero();
                    for l in 0..d {
                        s += &a[i][l] * &m[l][j];
                    }
                    if i == j {
                        s += &coeffs[d - k + 1];
                    }
                    next[i][j] = s;
                }
            }
            m = next;
            let mut tr = BigRational::zero();
            for i in 0..d {
                for l in 0..d {
                    tr += &a[i][l] * &m[l][i];
                }
            }
            coeffs[d - k] = -tr / BigRational::from_integer(BigInt::from(k as i64));
        }
        coeffs
    }

    /// Upper bound `4N²·Σ|M_ij|` for `max_{|n|∞ ≤ 2N} |R(n)|`.
    pub fn frequency_bound(&self, n: u64) -> u64 {
        let total: u64 = self.matrix.iter().map(|m| m.unsigned_abs()).sum();
        4 * n * n * total
    }

    /// `max |R(n)|` and `min R(n)`, `max R(n)` over `|n|∞ ≤ radius`,
    /// by enumeration; only for small boxes.
    pub fn range_on_box(&self, radius: i64) -> (i64, i64) {
        let mut lo = i64::MAX;
        let mut hi = i64::MIN;
        for n in crate::scalar::BoxIter::new(self.dim, radius) {
            let r = self.eval_unchecked(&n);
            lo = lo.min(r);
            hi = hi.max(r);
        }
        (lo, hi)
    }
}

impl fmt::Display for QuadraticForm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let body: Vec<String> = self.matrix.iter().map(|m| m.to_string()).collect();
        write!(f, "matrix:{}", body.join(","))
    }
}

fn unit(d: usize, ones: &[usize]) -> Vec<BigRational> {
    let mut v = vec![BigRational::zero(); d];
    for &k in ones {
        v[k] = BigRational::one();
    }
    v
}

fn sign_changes(coeffs: &[BigRational]) -> usize {
    let signs: Vec<bool> = coeffs
        .iter()
        .filter(|c| !c.is_zero())
        .map(|c| c.is_positive())
        .collect();
    signs.windows(2).filter(|w| w[0] != w[1]).count()
}

pub(crate) fn parse_int_list(body: &str) -> Result<Vec<i64>> {
    body.split(',')
        .map(|t| {
            t.trim()
                .parse::<i64>()
                .map_err(|e| Error::Parse(format!("`{}`: {e}", t.trim())))
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn q(n: i64) -> BigRational {
        BigRational::from_integer(BigInt::from(n))
    }

    fn hyperbolic() -> QuadraticForm {
        QuadraticForm::new(2, vec![0, 1, 1, 0]).unwrap()
    }

    #[test]
    fn evaluate_examples() {
        let r = QuadraticForm::diagonal(&[1, -1]).unwrap();
        assert_eq!(r.evaluate(&[3, 2]).unwrap(), 5);
        for k in -5..=5 {
            assert_eq!(r.evaluate(&[k, k]).unwrap(), 0);
        }
        assert_eq!(hyperbolic().evaluate(&[2, 3]).unwrap(), 12);
        assert!(matches!(
            r.evaluate(&[1]),
            Err(Error::DimensionMismatch { .. })
        ));
    }

    #[test]
    fn evaluate_rejects_overflow() {
        let r = QuadraticForm::diagonal(&[1, -1]).unwrap();
        assert_eq!(
            r.evaluate(&[i64::MAX, 0]),
            Err(Error::Overflow("R(n)"))
        );
    }

    #[test]
    fn construction_rejects_bad_matrices() {
        let err = QuadraticForm::new(2, vec![1, 2, 3, 1]).unwrap_err();
        match err {
            Error::Asymmetric(msg) => assert!(msg.contains("(0,1)=2")),
            other => panic!("{other:?}"),
        }
        assert_eq!(
            QuadraticForm::new(2, vec![1, 1, 1, 1]).unwrap_err(),
            Error::Degenerate
        );
        assert!(QuadraticForm::parse("matrix:1,2,3").is_err());
        assert!(QuadraticForm::parse("diag:1,x").is_err());
    }

    #[test]
    fn signature_examples() {
        let s = QuadraticForm::diagonal(&[1, -1]).unwrap().signature();
        assert_eq!((s.positive, s.negative, s.s), (1, 1, 1));
        let s = QuadraticForm::diagonal(&[1, 1, 1]).unwrap().signature();
        assert_eq!((s.positive, s.negative, s.s), (3, 0, 0));
        let s = hyperbolic().signature();
        assert_eq!((s.positive, s.negative, s.s), (1, 1, 1));
        assert_eq!(hyperbolic().inertia_from_charpoly(), s);
    }

    #[test]
    fn diagonalize_examples() {
        let dg = QuadraticForm::diagonal(&[1, -1]).unwrap().diagonalize_rational();
        assert_eq!(dg.transform, vec![vec![q(1), q(0)], vec![q(0), q(1)]]);
        assert_eq!(dg.diagonal, vec![q(1), q(-1)]);
        assert_eq!(dg.denominator, BigInt::one());

        let dg = hyperbolic().diagonalize_rational();
        assert_eq!(dg.transform, vec![vec![q(1), q(1)], vec![q(1), q(-1)]]);
        let half = BigRational::new(BigInt::from(1), BigInt::from(2));
        assert_eq!(dg.diagonal, vec![half.clone(), -half]);
        assert_eq!(dg.denominator, BigInt::one());

        let dg = QuadraticForm::diagonal(&[4]).unwrap().diagonalize_rational();
        assert_eq!(dg.transform, vec![vec![q(1)]]);
        assert_eq!(dg.diagonal, vec![q(4)]);
    }

    #[test]
    fn diagonalization_round_trip_random_vectors() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let form = hyperbolic();
        let dg = form.diagonalize_rational();
        for _ in 0..100 {
            let v: Vec<BigRational> = (0..2)
                .map(|_| BigRational::new(rng.gen_range(-50..50).into(), rng.gen_range(1..9).into()))
                .collect();
            assert_eq!(form.evaluate_rational(&v), dg.evaluate(&v));
        }
    }

    #[test]
    fn denominators_appear_for_mixed_forms() {
        // 2x² + 2xy + 2y²: T = [[1, 1/2], [0, 1]], D = (2, 3/2).
        let form = QuadraticForm::new(2, vec![2, 1, 1, 2]).unwrap();
        let dg = form.diagonalize_rational();
        assert_eq!(dg.denominator, BigInt::from(2));
        assert_eq!(dg.diagonal[0], q(2));
        assert_eq!(dg.diagonal[1], BigRational::new(3.into(), 2.into()));
    }

    #[test]
    fn determinant_small_cases() {
        assert_eq!(hyperbolic().determinant(), BigInt::from(-1));
        let f = QuadraticForm::new(3, vec![0, 1, 0, 1, 0, 0, 0, 0, 5]).unwrap();
        assert_eq!(f.determinant(), BigInt::from(-5));
    }

    #[test]
    fn frequency_bound_examples() {
        assert_eq!(QuadraticForm::diagonal(&[1, -1]).unwrap().frequency_bound(1), 8);
        assert_eq!(QuadraticForm::diagonal(&[1]).unwrap().frequency_bound(4), 64);
        assert_eq!(hyperbolic().frequency_bound(2), 32);
    }

    #[test]
    fn frequency_bound_dominates_exhaustively() {
        let forms = [
            QuadraticForm::diagonal(&[1]).unwrap(),
            QuadraticForm::diagonal(&[-3]).unwrap(),
            QuadraticForm::diagonal(&[1, -1]).unwrap(),
            hyperbolic(),
            QuadraticForm::new(2, vec![2, -3, -3, 1]).unwrap(),
        ];
        for form in &forms {
            for n in 1..=8u64 {
                let (lo, hi) = form.range_on_box(2 * n as i64);
                let max = lo.unsigned_abs().max(hi.unsigned_abs());
                assert!(form.frequency_bound(n) >= max);
            }
        }
    }

    #[test]
    fn charpoly_of_diagonal() {
        // det(λ - 2)(λ + 3) = λ² + λ - 6
        let f = QuadraticForm::diagonal(&[2, -3]).unwrap();
        assert_eq!(f.characteristic_polynomial(), vec![q(-6), q(1), q(1)]);
    }
}
