//! Equispaced torus grids and FFT evaluation of lattice sums on them.

use std::sync::Arc;

use num_complex::Complex;
use rayon::prelude::*;
use rustfft::{Fft, FftPlanner};
use serde::{Deserialize, Serialize};

use super::sequence::CoefficientSequence;
use crate::error::{Error, Result};
use crate::quadform::QuadraticForm;
use crate::scalar::{expi, Real};

/// Grid `offset + (j/M_alpha, k/M_theta)` on `𝕋^{d+1}`; the offset's first
/// entry is the `α` phase.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TorusGrid {
    pub m_alpha: usize,
    pub m_theta: usize,
    pub dim: usize,
    pub offset: Vec<f64>,
}

impl TorusGrid {
    pub fn new(m_alpha: usize, m_theta: usize, dim: usize, offset: Vec<f64>) -> Result<Self> {
        if m_alpha == 0 || m_theta == 0 || dim == 0 {
            return Err(Error::InvalidParameter("grid sizes and dimension must be positive".into()));
        }
        if offset.len() != dim + 1 {
            return Err(Error::DimensionMismatch {
                expected: dim + 1,
                got: offset.len(),
            });
        }
        if offset.iter().any(|o| !(0.0..1.0).contains(o)) {
            return Err(Error::InvalidParameter(format!("offset {offset:?} not in [0,1)")));
        }
        Ok(Self {
            m_alpha,
            m_theta,
            dim,
            offset,
        })
    }

    pub fn unshifted(m_alpha: usize, m_theta: usize, dim: usize) -> Result<Self> {
        Self::new(m_alpha, m_theta, dim, vec![0.0; dim + 1])
    }

    /// Smallest grid on which equal-weight quadrature of `|F_a|^p` is exact
    /// for even `p`: `M_alpha > p·R_max` and `M_theta > 2pN`, with `R_max`
    /// the form's frequency bound at radius `N`. `M_theta` is rounded up to
    /// an FFT-friendly size.
    pub fn nyquist(form: &QuadraticForm, radius: u64, p: u32) -> Result<Self> {
        let (ma, mt) = nyquist_sizes(form, radius, p);
        Self::unshifted(ma, fast_size(mt), form.dim())
    }

    pub fn cell_measure(&self) -> f64 {
        1.0 / (self.m_alpha as f64 * (self.m_theta as f64).powi(self.dim as i32))
    }

    pub fn slice_len(&self) -> usize {
        self.m_theta.pow(self.dim as u32)
    }

    pub fn total_cells(&self) -> usize {
        self.m_alpha * self.slice_len()
    }

    pub fn alpha(&self, j: usize) -> f64 {
        self.offset[0] + j as f64 / self.m_alpha as f64
    }

    /// `θ` at flat slice index `k` (last coordinate fastest).
    pub fn theta(&self, mut k: usize) -> Vec<f64> {
        let mut out = vec![0.0; self.dim];
        for i in (0..self.dim).rev() {
            out[i] = self.offset[i + 1] + (k % self.m_theta) as f64 / self.m_theta as f64;
            k /= self.m_theta;
        }
        out
    }

    /// True when the grid meets [`TorusGrid::nyquist`] for this `p`.
    pub fn is_exact_for(&self, form: &QuadraticForm, radius: u64, p: u32) -> bool {
        let (ma, mt) = nyquist_sizes(form, radius, p);
        self.m_alpha >= ma && self.m_theta >= mt
    }
}

fn nyquist_sizes(form: &QuadraticForm, radius: u64, p: u32) -> (usize, usize) {
    let r_max = form.frequency_bound(radius.max(1));
    (
        (p as u64 * r_max + 1) as usize,
        (2 * p as u64 * radius + 1) as usize,
    )
}

/// Smallest integer `≥ n` whose prime factors are in `{2, 3, 5, 7}`.
pub fn fast_size(n: usize) -> usize {
    let mut m = n.max(1);
    loop {
        let mut r = m;
        for p in [2, 3, 5, 7] {
            while r.is_multiple_of(p) {
                r /= p;
            }
        }
        if r == 1 {
            return m;
        }
        m += 1;
    }
}

/// Which lattice sum a field samples.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum SumKind {
    /// `F_a` for a coefficient sequence.
    Extension,
    /// `F` with the smooth weight `ω`.
    Smoothed,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FieldMeta {
    pub kind: SumKind,
    pub n: u64,
    pub form_digest: u64,
}

#[derive(Debug, Clone, PartialEq)]
pub enum FieldValues<T: Real> {
    Complex(Vec<Complex<T>>),
    Magnitude(Vec<T>),
}

/// Sampled lattice sum; slice `j` occupies `[j·M_θ^d, (j+1)·M_θ^d)`.
#[derive(Debug, Clone, PartialEq)]
pub struct GridField<T: Real> {
    pub grid: TorusGrid,
    pub values: FieldValues<T>,
    pub meta: FieldMeta,
}

impl<T: Real> GridField<T> {
    pub fn len(&self) -> usize {
        match &self.values {
            FieldValues::Complex(v) => v.len(),
            FieldValues::Magnitude(v) => v.len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn magnitude(&self, i: usize) -> T {
        match &self.values {
            FieldValues::Complex(v) => v[i].norm(),
            FieldValues::Magnitude(v) => v[i],
        }
    }

    pub fn complex(&self, i: usize) -> Option<Complex<T>> {
        match &self.values {
            FieldValues::Complex(v) => Some(v[i]),
            FieldValues::Magnitude(_) => None,
        }
    }

    pub fn magnitudes(&self) -> Vec<T> {
        match &self.values {
            FieldValues::Complex(v) => v.iter().map(|z| z.norm()).collect(),
            FieldValues::Magnitude(v) => v.clone(),
        }
    }

    /// Drops phases, keeping `|F|`.
    pub fn into_magnitude(self) -> Self {
        let values = FieldValues::Magnitude(self.magnitudes());
        Self { values, ..self }
    }

    pub fn max_abs(&self) -> T {
        (0..self.len()).fold(T::zero(), |m, i| m.max(self.magnitude(i)))
    }

    /// Grid point of flat index `i` as `(α, θ)`.
    pub fn point(&self, i: usize) -> (f64, Vec<f64>) {
        let sl = self.grid.slice_len();
        (self.grid.alpha(i / sl), self.grid.theta(i % sl))
    }
}

struct Term<T> {
    fold: usize,
    r_mod: u64,
    base_phase: f64,
    coeff: Complex<T>,
}

/// Slice-by-slice evaluator of `Σ c(n) e(αR(n) + θ·n)` on a torus grid.
///
/// For a fixed `α` the sum is a trigonometric polynomial in `θ` whose
/// frequencies fit in one period of the `θ` lattice, so a `d`-dimensional
/// inverse FFT of the twisted coefficients `c(n)e(αR(n))`, folded modulo
/// `M_θ`, returns the whole slice.
pub struct GridEvaluator<T: Real> {
    grid: TorusGrid,
    terms: Vec<Term<T>>,
    fft: Arc<dyn Fft<T>>,
    meta: FieldMeta,
}

impl<T: Real> GridEvaluator<T> {
    pub fn new(
        form: &QuadraticForm,
        coeffs: &CoefficientSequence<T>,
        grid: &TorusGrid,
        kind: SumKind,
        n_param: u64,
    ) -> Result<Self> {
        let d = form.dim();
        if coeffs.dim() != d || grid.dim != d {
            return Err(Error::DimensionMismatch {
                expected: d,
                got: if coeffs.dim() != d { coeffs.dim() } else { grid.dim },
            });
        }
        let need = coeffs.width();
        if grid.m_theta < need {
            return Err(Error::GridTooCoarse {
                axis: "theta",
                got: grid.m_theta,
                need,
            });
        }
        let ma = grid.m_alpha as i64;
        let mt = grid.m_theta as i64;
        let mut terms = Vec::new();
        for (n, &c) in coeffs.points().zip(coeffs.values()) {
            if c.norm_sqr() == T::zero() {
                continue;
            }
            let r = form.evaluate(&n)?;
            let fold = n.iter().fold(0usize, |acc, &x| acc * mt as usize + x.rem_euclid(mt) as usize);
            let mut base = (grid.offset[0] * r as f64).fract();
            for (o, &x) in grid.offset[1..].iter().zip(&n) {
                base += (o * x as f64).fract();
            }
            terms.push(Term {
                fold,
                r_mod: r.rem_euclid(ma) as u64,
                base_phase: base,
                coeff: c,
            });
        }
        let fft = FftPlanner::new().plan_fft_inverse(grid.m_theta);
        Ok(Self {
            grid: grid.clone(),
            terms,
            fft,
            meta: FieldMeta {
                kind,
                n: n_param,
                form_digest: form.digest(),
            },
        })
    }

    pub fn grid(&self) -> &TorusGrid {
        &self.grid
    }

    pub fn meta(&self) -> &FieldMeta {
        &self.meta
    }

    /// Writes slice `j` into `out` (length `M_θ^d`).
    pub fn slice_into(&self, j: usize, out: &mut [Complex<T>], scratch: &mut Vec<Complex<T>>) {
        let zero = Complex::new(T::zero(), T::zero());
        out.fill(zero);
        let ma = self.grid.m_alpha as u64;
        let jm = j as u64 % ma;
        for t in &self.terms {
            let k = (jm * t.r_mod) % ma;
            let phase = t.base_phase + k as f64 / ma as f64;
            let e = expi::<f64>(phase);
            out[t.fold] += t.coeff * Complex::new(T::lit(e.re), T::lit(e.im));
        }
        inverse_fft_nd(&*self.fft, out, self.grid.m_theta, self.grid.dim, scratch);
    }

    pub fn slice(&self, j: usize) -> Vec<Complex<T>> {
        let mut out = vec![Complex::new(T::zero(), T::zero()); self.grid.slice_len()];
        let mut scratch = Vec::new();
        self.slice_into(j, &mut out, &mut scratch);
        out
    }

    /// Folds every slice into an accumulator and returns the per-chunk
    /// accumulators in slice order. Chunk boundaries do not depend on the
    /// thread count, so merged results are reproducible.
    pub fn fold_slices<A, I, F>(&self, init: I, step: F) -> Vec<A>
    where
        A: Send,
        I: Fn() -> A + Sync,
        F: Fn(&mut A, usize, &[Complex<T>]) + Sync,
    {
        const CHUNK: usize = 32;
        let chunks = self.grid.m_alpha.div_ceil(CHUNK);
        (0..chunks)
            .into_par_iter()
            .map(|c| {
                let mut acc = init();
                let mut buf = vec![Complex::new(T::zero(), T::zero()); self.grid.slice_len()];
                let mut scratch = Vec::new();
                for j in c * CHUNK..((c + 1) * CHUNK).min(self.grid.m_alpha) {
                    self.slice_into(j, &mut buf, &mut scratch);
                    step(&mut acc, j, &buf);
                }
                acc
            })
            .collect()
    }

    /// Materializes the field.
    pub fn evaluate(&self) -> GridField<T> {
        let sl = self.grid.slice_len();
        let mut values = vec![Complex::new(T::zero(), T::zero()); self.grid.total_cells()];
        values.par_chunks_mut(sl).enumerate().for_each_init(Vec::new, |scratch, (j, out)| {
            self.slice_into(j, out, scratch);
        });
        GridField {
            grid: self.grid.clone(),
            values: FieldValues::Complex(values),
            meta: self.meta.clone(),
        }
    }
}

/// Unnormalized inverse FFT (`Σ x_n e(+nk/M)`) along every axis of a
/// `dim`-dimensional cube with side `m`.
fn inverse_fft_nd<T: Real>(fft: &dyn Fft<T>, data: &mut [Complex<T>], m: usize, dim: usize, line: &mut Vec<Complex<T>>) {
    // Last axis is contiguous.
    fft.process(data);
    if dim == 1 {
        return;
    }
    line.resize(m, Complex::new(T::zero(), T::zero()));
    let total = data.len();
    let mut stride = m;
    for _ in 1..dim {
        let block = stride * m;
        for start in (0..total).step_by(block) {
            for inner in 0..stride {
                for (i, slot) in line.iter_mut().enumerate() {
                    *slot = data[start + inner + i * stride];
                }
                fft.process(line);
                for (i, v) in line.iter().enumerate() {
                    data[start + inner + i * stride] = *v;
                }
            }
        }
        stride = block;
    }
}

/// `F_a` on the grid.
pub fn grid_evaluate<T: Real>(
    form: &QuadraticForm,
    a: &CoefficientSequence<T>,
    grid: &TorusGrid,
) -> Result<GridField<T>> {
    Ok(GridEvaluator::new(form, a, grid, SumKind::Extension, a.radius())?.evaluate())
}

/// `F` with weight `ω` on the grid.
pub fn grid_evaluate_smoothed<T: Real>(
    form: &QuadraticForm,
    weight: &super::weight::SmoothWeight<T>,
    grid: &TorusGrid,
) -> Result<GridField<T>> {
    let seq = weight.to_sequence();
    Ok(GridEvaluator::new(form, &seq, grid, SumKind::Smoothed, weight.n())?.evaluate())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::expsum::extension_direct;

    #[test]
    fn fast_sizes() {
        assert_eq!(fast_size(97), 98);
        assert_eq!(fast_size(11), 12);
        assert_eq!(fast_size(64), 64);
    }

    #[test]
    fn grid_coordinates() {
        let g = TorusGrid::new(4, 3, 2, vec![0.5, 0.0, 0.25]).unwrap();
        assert_eq!(g.alpha(1), 0.75);
        assert_eq!(g.theta(5), vec![1.0 / 3.0, 0.25 + 2.0 / 3.0]);
        assert!((g.cell_measure() - 1.0 / 36.0).abs() < 1e-15);
        assert!(TorusGrid::new(4, 3, 2, vec![0.0, 1.0, 0.0]).is_err());
    }

    #[test]
    fn coarse_grid_rejected() {
        let form = QuadraticForm::diagonal(&[1]).unwrap();
        let a = CoefficientSequence::<f64>::ones(1, 4).unwrap();
        let g = TorusGrid::unshifted(8, 8, 1).unwrap();
        assert_eq!(
            grid_evaluate(&form, &a, &g).unwrap_err(),
            Error::GridTooCoarse { axis: "theta", got: 8, need: 9 }
        );
    }

    #[test]
    fn delta_gives_constant_field() {
        let form = QuadraticForm::diagonal(&[1, -1]).unwrap();
        let a = CoefficientSequence::<f64>::delta(2, 2).unwrap();
        let g = TorusGrid::new(7, 5, 2, vec![0.1, 0.2, 0.3]).unwrap();
        let f = grid_evaluate(&form, &a, &g).unwrap();
        for i in 0..f.len() {
            let z = f.complex(i).unwrap();
            assert!((z - Complex::new(1.0, 0.0)).norm() < 1e-14);
        }
    }

    #[test]
    fn matches_direct_at_random_points_d1() {
        let form = QuadraticForm::diagonal(&[1]).unwrap();
        let a = CoefficientSequence::<f64>::random_unit(1, 4, 5).unwrap();
        let g = TorusGrid::new(37, 11, 1, vec![0.3, 0.7]).unwrap();
        let f = grid_evaluate(&form, &a, &g).unwrap();
        for i in (0..f.len()).step_by(f.len() / 16) {
            let (al, th) = f.point(i);
            let direct = extension_direct(&form, &a, al, &th).unwrap();
            let z = f.complex(i).unwrap();
            assert!((z - direct).norm() <= 1e-10 * (1.0 + direct.norm()));
        }
    }

    #[test]
    fn matches_direct_d3_with_cross_terms() {
        let form = QuadraticForm::new(3, vec![1, 2, 0, 2, -1, 1, 0, 1, 3]).unwrap();
        let a = CoefficientSequence::<f64>::random_unit(3, 1, 9).unwrap();
        let g = TorusGrid::new(5, 4, 3, vec![0.05, 0.1, 0.2, 0.9]).unwrap();
        let f = grid_evaluate(&form, &a, &g).unwrap();
        for i in 0..f.len() {
            let (al, th) = f.point(i);
            let direct = extension_direct(&form, &a, al, &th).unwrap();
            assert!((f.complex(i).unwrap() - direct).norm() <= 1e-10 * (1.0 + direct.norm()));
        }
    }

    #[test]
    fn fold_matches_evaluate() {
        let form = QuadraticForm::diagonal(&[1, -1]).unwrap();
        let a = CoefficientSequence::<f64>::random_unit(2, 2, 1).unwrap();
        let g = TorusGrid::unshifted(70, 5, 2).unwrap();
        let ev = GridEvaluator::new(&form, &a, &g, SumKind::Extension, 2).unwrap();
        let field = ev.evaluate();
        let sums = ev.fold_slices(|| 0.0f64, |acc, _, s| *acc += s.iter().map(|z| z.norm_sqr()).sum::<f64>());
        let total: f64 = sums.iter().sum();
        let direct: f64 = field.magnitudes().iter().map(|m| m * m).sum();
        assert!((total - direct).abs() < 1e-9 * direct);
    }

    #[test]
    fn single_precision_agrees() {
        let form = QuadraticForm::diagonal(&[1, -1]).unwrap();
        let a = CoefficientSequence::<f64>::random_unit(2, 3, 2).unwrap();
        let g = TorusGrid::new(13, 7, 2, vec![0.2, 0.4, 0.6]).unwrap();
        let f64f = grid_evaluate(&form, &a, &g).unwrap();
        let f32f = grid_evaluate(&form, &a.cast::<f32>(), &g).unwrap();
        for i in 0..f64f.len() {
            assert!((f64f.magnitude(i) - f32f.magnitude(i) as f64).abs() < 1e-5);
        }
    }
}
