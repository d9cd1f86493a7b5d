//! Compactly supported smooth bumps.
//!
//! The one-dimensional bump equals 1 on `[-1, 1]`, vanishes outside
//! `(-2, 2)` and decays monotonically in between through the normalized
//! primitive of the standard mollifier `t ↦ exp(-1/(1 - t²))`. The same
//! profile backs both the lattice weight `η` and the arc bump `κ`.

use gauss_quad::GaussLegendre;

use crate::scalar::Real;

const PANELS: usize = 12;
const NODES: usize = 12;

/// The standard mollifier `exp(-1/(1-t²))` on `(-1, 1)`, zero elsewhere.
pub fn mollifier<T: Real>(t: T) -> T {
    let s = T::one() - t * t;
    if s <= T::zero() {
        T::zero()
    } else {
        (-T::one() / s).exp()
    }
}

/// Smooth bump with `[-1,1] ≺ bump ≺ [-2,2]`.
#[derive(Debug, Clone)]
pub struct SmoothBump<T: Real> {
    nodes: Vec<T>,
    weights: Vec<T>,
    total: T,
}

impl<T: Real> Default for SmoothBump<T> {
    fn default() -> Self {
        Self::new()
    }
}

impl<T: Real> SmoothBump<T> {
    pub fn new() -> Self {
        let rule = GaussLegendre::new(NODES).expect("valid order");
        let (nodes, weights): (Vec<T>, Vec<T>) = rule
            .iter()
            .map(|&(x, w)| (T::lit(x), T::lit(w)))
            .unzip();
        let mut bump = Self {
            nodes,
            weights,
            total: T::one(),
        };
        // Both halves are computed with the same rule so the profile is
        // exactly antisymmetric about the midpoint of the transition.
        bump.total = bump.primitive(T::zero()) * T::lit(2.0);
        bump
    }

    /// `∫_{-1}^{y} mollifier` for `y ∈ [-1, 0]`, composite Gauss–Legendre.
    fn primitive(&self, y: T) -> T {
        let lo = -T::one();
        let width = (y - lo) / T::from_int(PANELS as i64);
        if width <= T::zero() {
            return T::zero();
        }
        let half = width / T::lit(2.0);
        let mut acc = T::zero();
        for p in 0..PANELS {
            let mid = lo + width * (T::from_int(p as i64) + T::lit(0.5));
            let mut panel = T::zero();
            for (x, w) in self.nodes.iter().zip(&self.weights) {
                panel += *w * mollifier(mid + half * *x);
            }
            acc += panel * half;
        }
        acc
    }

    /// Normalized transition `H(u)`, `H(0) = 0`, `H(1) = 1`, `H(u) + H(1-u) = 1`.
    pub fn transition(&self, u: T) -> T {
        if u <= T::zero() {
            return T::zero();
        }
        if u >= T::one() {
            return T::one();
        }
        let half = T::lit(0.5);
        if u <= half {
            let v = self.primitive(T::lit(2.0) * u - T::one()) / self.total;
            v.max(T::zero()).min(half)
        } else {
            T::one() - self.transition(T::one() - u)
        }
    }

    /// The bump profile at `x`.
    pub fn eval(&self, x: T) -> T {
        let ax = x.abs();
        if ax <= T::one() {
            T::one()
        } else if ax >= T::lit(2.0) {
            T::zero()
        } else {
            self.transition(T::lit(2.0) - ax)
        }
    }

    /// `∫_ℝ bump = 3`: the flat part has length 2 and the two transitions
    /// contribute 1/2 each by the antisymmetry of `H`.
    pub fn integral(&self) -> T {
        T::lit(3.0)
    }
}
