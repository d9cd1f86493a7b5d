//! Scalar abstraction for the analytic modules.
//!
//! Exact work (form diagonalization, representation counts, divisor moments)
//! uses integers and rationals. Everything that samples exponential sums is
//! generic over [`Real`], which is implemented for `f32` and `f64`.

use std::fmt::{Debug, Display};
use std::iter::Sum;

use num_complex::Complex;
use num_traits::{Float, FloatConst, FromPrimitive, NumAssign, ToPrimitive};

/// Floating point type usable by the exponential-sum kernels.
pub trait Real:
    Float
    + NumAssign
    + FloatConst
    + FromPrimitive
    + ToPrimitive
    + rustfft::FftNum
    + Default
    + Debug
    + Display
    + Sum
    + Send
    + Sync
    + 'static
{
    /// Converts an `f64` literal or parameter into `Self`.
    #[inline]
    fn lit(x: f64) -> Self {
        Self::from_f64(x).expect("f64 is representable")
    }

    #[inline]
    fn from_int(n: i64) -> Self {
        Self::from_i64(n).expect("integer is representable")
    }

    #[inline]
    fn as_f64(self) -> f64 {
        self.to_f64().expect("finite value")
    }
}

impl Real for f32 {}
impl Real for f64 {}

/// `e(x) = exp(2πix)`, with the phase reduced modulo 1 first.
#[inline]
pub fn expi<T: Real>(x: T) -> Complex<T> {
    let frac = x - x.round();
    let angle = T::TAU() * frac;
    Complex::new(angle.cos(), angle.sin())
}

/// Pairwise (tree) summation in slice order.
pub fn pairwise_sum<T: Real>(terms: &[Complex<T>]) -> Complex<T> {
    const BLOCK: usize = 16;
    if terms.len() <= BLOCK {
        let mut acc = Complex::new(T::zero(), T::zero());
        for t in terms {
            acc += *t;
        }
        return acc;
    }
    let mid = terms.len() / 2;
    pairwise_sum(&terms[..mid]) + pairwise_sum(&terms[mid..])
}

/// Pairwise summation of real terms.
pub fn pairwise_sum_real<T: Real>(terms: &[T]) -> T {
    const BLOCK: usize = 16;
    if terms.len() <= BLOCK {
        return terms.iter().fold(T::zero(), |a, &b| a + b);
    }
    let mid = terms.len() / 2;
    pairwise_sum_real(&terms[..mid]) + pairwise_sum_real(&terms[mid..])
}

/// Cartesian iteration over `[-radius, radius]^dim` in lexicographic order
/// (last coordinate fastest).
pub(crate) struct BoxIter {
    radius: i64,
    current: Vec<i64>,
    done: bool,
}

impl BoxIter {
    pub(crate) fn new(dim: usize, radius: i64) -> Self {
        Self {
            radius,
            current: vec![-radius; dim],
            done: radius < 0,
        }
    }
}

impl Iterator for BoxIter {
    type Item = Vec<i64>;

    fn next(&mut self) -> Option<Vec<i64>> {
        if self.done {
            return None;
        }
        let out = self.current.clone();
        let mut k = self.current.len();
        loop {
            if k == 0 {
                self.done = true;
                break;
            }
            k -= 1;
            if self.current[k] < self.radius {
                self.current[k] += 1;
                break;
            }
            self.current[k] = -self.radius;
        }
        Some(out)
    }
}
