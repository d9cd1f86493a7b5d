//! Composite Gauss–Legendre rules.

use gauss_quad::GaussLegendre;

use crate::error::{Error, Result};
use crate::scalar::Real;

/// Nodes and weights of a composite Gauss–Legendre rule on an interval.
#[derive(Debug, Clone)]
pub struct CompositeRule<T: Real> {
    pub nodes: Vec<T>,
    pub weights: Vec<T>,
}

impl<T: Real> CompositeRule<T> {
    /// `order` nodes on each of the panels delimited by `breaks`
    /// (strictly increasing).
    pub fn on_breaks(breaks: &[f64], order: usize) -> Result<Self> {
        if order < 2 {
            return Err(Error::InvalidParameter(format!(
                "quadrature order {order} < 2"
            )));
        }
        if breaks.len() < 2 || breaks.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::InvalidParameter(
                "panel breaks must be strictly increasing".into(),
            ));
        }
        let rule = GaussLegendre::new(order)
            .map_err(|e| Error::InvalidParameter(e.to_string()))?;
        let mut nodes = Vec::with_capacity(order * (breaks.len() - 1));
        let mut weights = Vec::with_capacity(nodes.capacity());
        for w in breaks.windows(2) {
            let mid = 0.5 * (w[0] + w[1]);
            let half = 0.5 * (w[1] - w[0]);
            for &(x, wt) in rule.iter() {
                nodes.push(T::lit(mid + half * x));
                weights.push(T::lit(half * wt));
            }
        }
        Ok(Self { nodes, weights })
    }

    /// `panels` equal panels on `[lo, hi]`.
    pub fn uniform(lo: f64, hi: f64, panels: usize, order: usize) -> Result<Self> {
        if panels == 0 {
            return Err(Error::InvalidParameter("zero panels".into()));
        }
        let breaks: Vec<f64> = (0..=panels)
            .map(|k| lo + (hi - lo) * k as f64 / panels as f64)
            .collect();
        Self::on_breaks(&breaks, order)
    }

    pub fn integrate<F: FnMut(T) -> T>(&self, mut f: F) -> T {
        self.nodes
            .iter()
            .zip(&self.weights)
            .fold(T::zero(), |acc, (&x, &w)| acc + w * f(x))
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn integrates_polynomials_exactly() {
        let rule = CompositeRule::<f64>::uniform(-2.0, 2.0, 4, 5).unwrap();
        let got = rule.integrate(|x| x.powi(8) - 3.0 * x * x + 1.0);
        let want = 2.0 * (2f64.powi(9) / 9.0 - 8.0 + 2.0);
        assert!((got - want).abs() < 1e-10);
    }

    #[test]
    fn rejects_bad_breaks() {
        assert!(CompositeRule::<f64>::on_breaks(&[0.0, 0.0], 4).is_err());
        assert!(CompositeRule::<f64>::on_breaks(&[0.0, 1.0], 1).is_err());
    }
}
