//! The oscillatory integral `I(β, γ; N)` and the Poisson expansion of `F`
//! near a rational `a/q`.

use num_complex::Complex64;
use num_integer::Integer;

use super::gauss::gauss_sums_all_b;
use crate::bump::SmoothBump;
use crate::error::{Error, Result};
use crate::quadform::QuadraticForm;
use crate::quadrature::CompositeRule;
use crate::scalar::expi;

const BREAKS: [f64; 5] = [-2.0, -1.0, 0.0, 1.0, 2.0];

/// Quadrature value with the difference against the half-order rule.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OscillatoryValue {
    pub value: Complex64,
    pub error_estimate: f64,
    pub order: usize,
}

/// `∫ η(x) e(βN²R(x) + Nγ·x) dx` over `[-2, 2]^d` by a tensor composite
/// Gauss–Legendre rule with `quad_order` nodes on each unit panel.
pub fn oscillatory_integral(
    form: &QuadraticForm,
    beta: f64,
    gamma: &[f64],
    n: u64,
    quad_order: usize,
) -> Result<OscillatoryValue> {
    if quad_order < 8 {
        return Err(Error::InvalidParameter(format!("quad_order {quad_order} < 8")));
    }
    if gamma.len() != form.dim() {
        return Err(Error::DimensionMismatch {
            expected: form.dim(),
            got: gamma.len(),
        });
    }
    let sets: Vec<Vec<f64>> = gamma.iter().map(|&g| vec![g]).collect();
    let hi = TensorIntegrator::new(form, beta, n, quad_order)?.product_set(&sets)[0];
    let lo = TensorIntegrator::new(form, beta, n, quad_order / 2)?.product_set(&sets)[0];
    Ok(OscillatoryValue {
        value: hi,
        error_estimate: (hi - lo).norm(),
        order: quad_order,
    })
}

/// Node order per unit panel that resolves the phase of `I(β, γ; N)`
/// for `|γ_i| ≤ gamma_max`, doubled so the half-order rule also resolves it.
pub fn auto_order(form: &QuadraticForm, beta: f64, n: u64, gamma_max: f64) -> usize {
    let d = form.dim();
    let row_max = (0..d)
        .map(|i| (0..d).map(|j| form.entry(i, j).unsigned_abs()).sum::<u64>())
        .max()
        .unwrap_or(0) as f64;
    let nf = n as f64;
    // |∂_i R| ≤ 2·Σ_j|M_ij|·|x|∞ with |x|∞ ≤ 2.
    let cycles = beta.abs() * nf * nf * 4.0 * row_max + nf * gamma_max;
    let base = (std::f64::consts::PI * cycles).ceil() as usize + 16;
    2 * base.max(12)
}

/// Samples of `η(x) e(βN²R(x))` on a tensor rule, contracted against
/// linear phases one axis at a time.
struct TensorIntegrator {
    dim: usize,
    n: f64,
    nodes: Vec<f64>,
    /// Separable factors for diagonal forms, else the full tensor.
    kernel: Kernel,
}

enum Kernel {
    Separable(Vec<Vec<Complex64>>),
    Full(Vec<Complex64>),
}

impl TensorIntegrator {
    fn new(form: &QuadraticForm, beta: f64, n: u64, order: usize) -> Result<Self> {
        let rule = CompositeRule::<f64>::on_breaks(&BREAKS, order)?;
        let bump = SmoothBump::<f64>::new();
        let d = form.dim();
        let nf = n as f64;
        let scale = beta * nf * nf;
        let w: Vec<f64> = rule
            .nodes
            .iter()
            .zip(&rule.weights)
            .map(|(&x, &wt)| wt * bump.eval(x))
            .collect();
        let diagonal = (0..d).all(|i| (0..d).all(|j| i == j || form.entry(i, j) == 0));
        let kernel = if diagonal {
            Kernel::Separable(
                (0..d)
                    .map(|i| {
                        let c = form.entry(i, i) as f64;
                        rule.nodes
                            .iter()
                            .zip(&w)
                            .map(|(&x, &wx)| expi(scale * c * x * x) * wx)
                            .collect()
                    })
                    .collect(),
            )
        } else {
            let p = rule.nodes.len();
            let total = p.checked_pow(d as u32).filter(|&t| t <= 1 << 27).ok_or_else(|| {
                Error::BudgetExceeded(format!("tensor rule with {p}^{d} nodes is too large"))
            })?;
            let mut full = Vec::with_capacity(total);
            let mut x = vec![0.0; d];
            for mut k in 0..total {
                let mut weight = 1.0;
                for i in (0..d).rev() {
                    let idx = k % p;
                    k /= p;
                    x[i] = rule.nodes[idx];
                    weight *= w[idx];
                }
                let mut r = 0.0;
                for i in 0..d {
                    for j in 0..d {
                        r += form.entry(i, j) as f64 * x[i] * x[j];
                    }
                }
                full.push(expi(scale * r) * weight);
            }
            Kernel::Full(full)
        };
        Ok(Self {
            dim: d,
            n: nf,
            nodes: rule.nodes,
            kernel,
        })
    }

    /// `I` at every `γ` in `sets[0] × … × sets[d-1]`, row-major.
    fn product_set(&self, sets: &[Vec<f64>]) -> Vec<Complex64> {
        let phases = |g: f64| -> Vec<Complex64> {
            self.nodes.iter().map(|&x| expi(self.n * g * x)).collect()
        };
        match &self.kernel {
            Kernel::Separable(factors) => {
                let per_axis: Vec<Vec<Complex64>> = sets
                    .iter()
                    .zip(factors)
                    .map(|(set, f)| {
                        set.iter()
                            .map(|&g| phases(g).iter().zip(f).map(|(e, v)| e * v).sum())
                            .collect()
                    })
                    .collect();
                let mut out = vec![Complex64::new(1.0, 0.0)];
                for axis in per_axis {
                    out = out
                        .iter()
                        .flat_map(|&acc| axis.iter().map(move |&v| acc * v))
                        .collect();
                }
                out
            }
            Kernel::Full(full) => {
                let p = self.nodes.len();
                let mut tensor = full.clone();
                let mut outer = 1usize;
                for (i, set) in sets.iter().enumerate() {
                    let inner = p.pow((self.dim - i - 1) as u32);
                    let mats: Vec<Vec<Complex64>> = set.iter().map(|&g| phases(g)).collect();
                    let mut next = vec![Complex64::new(0.0, 0.0); outer * set.len() * inner];
                    for o in 0..outer {
                        for (gi, e) in mats.iter().enumerate() {
                            let dst = &mut next[(o * set.len() + gi) * inner..][..inner];
                            for (x, ex) in e.iter().enumerate() {
                                let src = &tensor[(o * p + x) * inner..][..inner];
                                for (dv, sv) in dst.iter_mut().zip(src) {
                                    *dv += ex * sv;
                                }
                            }
                        }
                    }
                    tensor = next;
                    outer *= set.len();
                }
                tensor
            }
        }
    }
}

/// Result of the truncated Poisson expansion.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MajorArcValue {
    pub value: Complex64,
    /// Sum of term magnitudes on the outermost shell `|m|∞ = m_cut`.
    pub tail: f64,
    /// Difference against the half-order quadrature.
    pub quadrature_error: f64,
    pub order: usize,
}

/// Poisson expansion of `F` at `α = a/q + β`:
/// `Σ_{b mod q} q^{-d} S(a, b; q) Σ_{|m|∞ ≤ m_cut} N^d I(β, θ - b/q - m; N)`.
pub struct PoissonMajorArc {
    form: QuadraticForm,
    q: u64,
    beta: f64,
    n: u64,
    m_cut: i64,
    gauss: Vec<Complex64>,
}

impl PoissonMajorArc {
    pub fn new(form: &QuadraticForm, a: i64, q: u64, beta: f64, n: u64, m_cut: u32) -> Result<Self> {
        if q == 0 || q > n {
            return Err(Error::InvalidParameter(format!("need 1 <= q <= N, got q={q}, N={n}")));
        }
        if a.unsigned_abs().gcd(&q) != 1 {
            return Err(Error::InvalidParameter(format!("gcd({a}, {q}) != 1")));
        }
        if beta.abs() > 1.0 / (q as f64 * n as f64) * (1.0 + 1e-12) {
            return Err(Error::InvalidParameter(format!(
                "|beta| = {} exceeds 1/(qN) = {}",
                beta.abs(),
                1.0 / (q as f64 * n as f64)
            )));
        }
        Ok(Self {
            form: form.clone(),
            q,
            beta,
            n,
            m_cut: m_cut as i64,
            gauss: gauss_sums_all_b(form, a, q),
        })
    }

    pub fn evaluate(&self, theta: &[f64]) -> Result<MajorArcValue> {
        let d = self.form.dim();
        if theta.len() != d {
            return Err(Error::DimensionMismatch {
                expected: d,
                got: theta.len(),
            });
        }
        let q = self.q as i64;
        let k = 2 * self.m_cut + 1;
        // γ-values per axis, indexed by (b_i, m_i) with m_i fastest.
        let sets: Vec<Vec<f64>> = theta
            .iter()
            .map(|&t| {
                let t = t - t.floor();
                (0..q)
                    .flat_map(|b| (-self.m_cut..=self.m_cut).map(move |m| t - b as f64 / q as f64 - m as f64))
                    .collect()
            })
            .collect();
        let gamma_max = sets.iter().flatten().fold(0.0f64, |m, g| m.max(g.abs()));
        let order = auto_order(&self.form, self.beta, self.n, gamma_max);
        let hi = TensorIntegrator::new(&self.form, self.beta, self.n, order)?.product_set(&sets);
        let lo = TensorIntegrator::new(&self.form, self.beta, self.n, order / 2)?.product_set(&sets);
        let scale = (self.n as f64).powi(d as i32) / (q as f64).powi(d as i32);
        let per_axis = (q * k) as usize;
        let mut value = Complex64::new(0.0, 0.0);
        let mut coarse = Complex64::new(0.0, 0.0);
        let mut tail = 0.0;
        for flat in 0..hi.len() {
            let mut b_index = 0usize;
            let mut shell = false;
            let mut idx = vec![0usize; d];
            let mut r = flat;
            for slot in idx.iter_mut().rev() {
                *slot = r % per_axis;
                r /= per_axis;
            }
            for &c in &idx {
                let b = c / k as usize;
                let m = (c % k as usize) as i64 - self.m_cut;
                b_index = b_index * q as usize + b;
                shell |= m.abs() == self.m_cut;
            }
            let s = self.gauss[b_index] * scale;
            let term = s * hi[flat];
            value += term;
            coarse += s * lo[flat];
            if shell {
                tail += term.norm();
            }
        }
        Ok(MajorArcValue {
            value,
            tail,
            quadrature_error: (value - coarse).norm(),
            order,
        })
    }
}

/// Truncated Poisson approximant of `F(a/q + β, θ)`.
pub fn major_arc_approx(
    form: &QuadraticForm,
    a: i64,
    q: u64,
    beta: f64,
    theta: &[f64],
    n: u64,
    m_cut: u32,
) -> Result<MajorArcValue> {
    PoissonMajorArc::new(form, a, q, beta, n, m_cut)?.evaluate(theta)
}
