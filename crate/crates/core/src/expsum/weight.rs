//! The smooth lattice weight `ω(n) = η(n/N)`.

use num_complex::Complex;

use super::sequence::CoefficientSequence;
use crate::bump::SmoothBump;
use crate::error::{Error, Result};
use crate::scalar::Real;

/// Tensor-product weight with `ω = 1` on `[-N, N]^d` and `ω = 0` outside
/// `(-2N, 2N)^d`.
#[derive(Debug, Clone)]
pub struct SmoothWeight<T: Real> {
    dim: usize,
    n: u64,
    /// `η₁(m/N)` for `m ∈ [-2N, 2N]`.
    profile: Vec<T>,
}

impl<T: Real> SmoothWeight<T> {
    pub fn new(dim: usize, n: u64) -> Result<Self> {
        if dim == 0 || n == 0 {
            return Err(Error::InvalidParameter("weight needs d >= 1 and N >= 1".into()));
        }
        let bump = SmoothBump::<f64>::new();
        let r = 2 * n as i64;
        let profile = (-r..=r)
            .map(|m| T::lit(bump.eval(m as f64 / n as f64)))
            .collect();
        Ok(Self { dim, n, profile })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn n(&self) -> u64 {
        self.n
    }

    /// `η₁(m/N)`.
    pub fn profile(&self, m: i64) -> T {
        let r = 2 * self.n as i64;
        if m.abs() > r {
            T::zero()
        } else {
            self.profile[(m + r) as usize]
        }
    }

    /// `ω(n)`.
    pub fn value(&self, n: &[i64]) -> T {
        n.iter().fold(T::one(), |acc, &m| acc * self.profile(m))
    }

    /// Support radius `2N - 1`; `ω` vanishes on `|n|∞ = 2N`.
    pub fn support_radius(&self) -> u64 {
        2 * self.n - 1
    }

    /// The weight as a coefficient sequence on `[-(2N-1), 2N-1]^d`.
    pub fn to_sequence(&self) -> CoefficientSequence<T> {
        CoefficientSequence::from_fn(self.dim, self.support_radius(), |n| {
            Complex::new(self.value(n), T::zero())
        })
        .expect("weight box fits")
    }

    /// `Σ ω(n) = (Σ_m η₁(m/N))^d`.
    pub fn total(&self) -> T {
        let one: T = self.profile.iter().copied().sum();
        one.powi(self.dim as i32)
    }
}
