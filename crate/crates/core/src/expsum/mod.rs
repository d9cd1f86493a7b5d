//! Exponential sums `F_a(α, θ) = Σ a(n) e(αR(n) + θ·n)` and their smoothed,
//! complete and continuous relatives.

mod gauss;
mod grid;
mod oscillatory;
mod sequence;
mod weight;

pub use gauss::{gauss_sum, gauss_sums_all_b, GaussRow, GaussTable};
pub use grid::{
    fast_size, grid_evaluate, grid_evaluate_smoothed, FieldMeta, FieldValues, GridEvaluator,
    GridField, SumKind, TorusGrid,
};
pub use oscillatory::{
    major_arc_approx, oscillatory_integral, MajorArcValue, OscillatoryValue, PoissonMajorArc,
};
pub use sequence::{CoefficientSequence, SequenceFamily};
pub use weight::SmoothWeight;

use num_complex::Complex;

use crate::error::{Error, Result};
use crate::quadform::QuadraticForm;
use crate::scalar::{expi, pairwise_sum, Real};

/// `Σ_n c(n) e(αR(n) + θ·n)` over the sequence box, lexicographic order,
/// pairwise summation. Phases are formed in `f64`.
fn lattice_sum<T: Real>(
    form: &QuadraticForm,
    coeffs: &CoefficientSequence<T>,
    alpha: f64,
    theta: &[f64],
) -> Result<Complex<T>> {
    let d = form.dim();
    if theta.len() != d {
        return Err(Error::DimensionMismatch {
            expected: d,
            got: theta.len(),
        });
    }
    if coeffs.dim() != d {
        return Err(Error::DimensionMismatch {
            expected: d,
            got: coeffs.dim(),
        });
    }
    let mut terms = Vec::with_capacity(coeffs.values().len());
    for (n, &c) in coeffs.points().zip(coeffs.values()) {
        let r = form.evaluate(&n)?;
        let mut phase = (alpha * r as f64).fract();
        for (t, &x) in theta.iter().zip(&n) {
            phase += (t * x as f64).fract();
        }
        let e = expi::<f64>(phase);
        terms.push(c * Complex::new(T::lit(e.re), T::lit(e.im)));
    }
    Ok(pairwise_sum(&terms))
}

/// `F_a(α, θ)` by direct summation.
pub fn extension_direct<T: Real>(
    form: &QuadraticForm,
    a: &CoefficientSequence<T>,
    alpha: f64,
    theta: &[f64],
) -> Result<Complex<T>> {
    lattice_sum(form, a, alpha, theta)
}

/// `F(α, θ) = Σ ω(n) e(αR(n) + θ·n)` by direct summation over `(-2N, 2N)^d`.
pub fn smoothed_sum_direct<T: Real>(
    form: &QuadraticForm,
    weight: &SmoothWeight<T>,
    alpha: f64,
    theta: &[f64],
) -> Result<Complex<T>> {
    if weight.dim() != form.dim() {
        return Err(Error::DimensionMismatch {
            expected: form.dim(),
            got: weight.dim(),
        });
    }
    lattice_sum(form, &weight.to_sequence(), alpha, theta)
}

/// Reusable direct evaluator for many points with the same coefficients.
pub struct DirectEvaluator<T: Real> {
    dim: usize,
    terms: Vec<(Vec<i64>, i64, Complex<T>)>,
}

impl<T: Real> DirectEvaluator<T> {
    pub fn new(form: &QuadraticForm, coeffs: &CoefficientSequence<T>) -> Result<Self> {
        if coeffs.dim() != form.dim() {
            return Err(Error::DimensionMismatch {
                expected: form.dim(),
                got: coeffs.dim(),
            });
        }
        let mut terms = Vec::new();
        for (n, &c) in coeffs.points().zip(coeffs.values()) {
            if c.norm_sqr() > T::zero() {
                let r = form.evaluate(&n)?;
                terms.push((n, r, c));
            }
        }
        Ok(Self {
            dim: form.dim(),
            terms,
        })
    }

    pub fn eval(&self, alpha: f64, theta: &[f64]) -> Complex<T> {
        assert_eq!(theta.len(), self.dim);
        let parts: Vec<Complex<T>> = self
            .terms
            .iter()
            .map(|(n, r, c)| {
                let mut phase = (alpha * *r as f64).fract();
                for (t, &x) in theta.iter().zip(n) {
                    phase += (t * x as f64).fract();
                }
                let e = expi::<f64>(phase);
                *c * Complex::new(T::lit(e.re), T::lit(e.im))
            })
            .collect();
        pairwise_sum(&parts)
    }
}
