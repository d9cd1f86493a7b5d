//! Complete quadratic exponential sums `S(a, b; q)`.

use num_complex::Complex64;
use num_integer::Integer;
use rustfft::FftPlanner;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::quadform::QuadraticForm;
use crate::scalar::pairwise_sum;

fn unit_roots(q: u64) -> Vec<Complex64> {
    (0..q)
        .map(|k| {
            let t = std::f64::consts::TAU * k as f64 / q as f64;
            Complex64::new(t.cos(), t.sin())
        })
        .collect()
}

/// Residues `u ∈ [0, q)^d` in lexicographic order.
fn residues(d: usize, q: u64) -> impl Iterator<Item = Vec<i64>> {
    let total = (q as usize).pow(d as u32);
    (0..total).map(move |mut k| {
        let mut u = vec![0i64; d];
        for slot in u.iter_mut().rev() {
            *slot = (k % q as usize) as i64;
            k /= q as usize;
        }
        u
    })
}

/// `R(u) mod q` with exact integer arithmetic.
fn form_mod(form: &QuadraticForm, u: &[i64], q: i64) -> i64 {
    let d = form.dim();
    let mut acc: i128 = 0;
    for i in 0..d {
        for j in 0..d {
            acc += form.entry(i, j) as i128 * u[i] as i128 * u[j] as i128;
        }
    }
    acc.rem_euclid(q as i128) as i64
}

/// `S(a, b; q) = Σ_{u mod q} e((aR(u) + b·u)/q)` by direct summation.
pub fn gauss_sum(form: &QuadraticForm, a: i64, b: &[i64], q: i64) -> Result<Complex64> {
    if q <= 0 {
        return Err(Error::InvalidParameter(format!("modulus q={q} must be positive")));
    }
    if b.len() != form.dim() {
        return Err(Error::DimensionMismatch {
            expected: form.dim(),
            got: b.len(),
        });
    }
    let roots = unit_roots(q as u64);
    let terms: Vec<Complex64> = residues(form.dim(), q as u64)
        .map(|u| {
            let lin: i128 = b.iter().zip(&u).map(|(&x, &y)| x as i128 * y as i128).sum();
            let k = (a as i128 * form_mod(form, &u, q) as i128 + lin).rem_euclid(q as i128);
            roots[k as usize]
        })
        .collect();
    Ok(pairwise_sum(&terms))
}

/// `S(a, b; q)` for every `b ∈ [0, q)^d`, by a `d`-dimensional FFT of
/// `u ↦ e(aR(u)/q)`. Output is row-major in `b`.
pub fn gauss_sums_all_b(form: &QuadraticForm, a: i64, q: u64) -> Vec<Complex64> {
    let d = form.dim();
    let roots = unit_roots(q);
    let mut data: Vec<Complex64> = residues(d, q)
        .map(|u| {
            let k = (a as i128 * form_mod(form, &u, q as i64) as i128).rem_euclid(q as i128);
            roots[k as usize]
        })
        .collect();
    let fft = FftPlanner::new().plan_fft_inverse(q as usize);
    fft.process(&mut data);
    let m = q as usize;
    let mut line = vec![Complex64::new(0.0, 0.0); m];
    let mut stride = m;
    for _ in 1..d {
        let block = stride * m;
        for start in (0..data.len()).step_by(block) {
            for inner in 0..stride {
                for (i, slot) in line.iter_mut().enumerate() {
                    *slot = data[start + inner + i * stride];
                }
                fft.process(&mut line);
                for (i, v) in line.iter().enumerate() {
                    data[start + inner + i * stride] = *v;
                }
            }
        }
        stride = block;
    }
    data
}

/// Per-`(q, a)` maxima of `|S(a, b; q)|` over all `b`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GaussRow {
    pub q: u64,
    pub a: u64,
    pub max_abs: f64,
    /// `max_b |S| / q^{d/2}`.
    pub max_ratio: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GaussTable {
    pub rows: Vec<GaussRow>,
}

impl GaussTable {
    /// All `q ≤ q_max` and reduced `a mod q`.
    pub fn compute(form: &QuadraticForm, q_max: u64) -> Self {
        let d = form.dim() as i32;
        let mut rows = Vec::new();
        for q in 1..=q_max {
            for a in 1..=q {
                if a.gcd(&q) != 1 {
                    continue;
                }
                let max_abs = gauss_sums_all_b(form, a as i64, q)
                    .iter()
                    .fold(0.0f64, |m, z| m.max(z.norm()));
                rows.push(GaussRow {
                    q,
                    a,
                    max_abs,
                    max_ratio: max_abs / (q as f64).powf(d as f64 / 2.0),
                });
            }
        }
        Self { rows }
    }

    /// Largest ratio over rows with `q ≤ q_cap`.
    pub fn max_ratio_up_to(&self, q_cap: u64) -> f64 {
        self.rows
            .iter()
            .filter(|r| r.q <= q_cap)
            .fold(0.0, |m, r| m.max(r.max_ratio))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn square() -> QuadraticForm {
        QuadraticForm::diagonal(&[1]).unwrap()
    }

    #[test]
    fn residue_enumeration() {
        let all: Vec<_> = residues(2, 3).collect();
        assert_eq!(all.len(), 9);
        assert_eq!(all[0], vec![0, 0]);
        assert_eq!(all[1], vec![0, 1]);
        assert_eq!(all[8], vec![2, 2]);
    }

    #[test]
    fn examples() {
        let z = gauss_sum(&square(), 1, &[0], 1).unwrap();
        assert!((z - Complex64::new(1.0, 0.0)).norm() < 1e-15);
        assert!(gauss_sum(&square(), 1, &[0], 2).unwrap().norm() < 1e-15);
        let z = gauss_sum(&square(), 1, &[0], 5).unwrap();
        assert!((z.norm() - 5f64.sqrt()).abs() < 1e-10);
        assert!(gauss_sum(&square(), 1, &[0], 0).is_err());
        assert!(gauss_sum(&square(), 1, &[0, 0], 3).is_err());
    }

    #[test]
    fn fft_table_matches_direct() {
        let forms = [
            square(),
            QuadraticForm::diagonal(&[1, -1]).unwrap(),
            QuadraticForm::new(2, vec![0, 1, 1, 0]).unwrap(),
            QuadraticForm::new(2, vec![2, 1, 1, -3]).unwrap(),
        ];
        for form in &forms {
            for q in [1u64, 2, 6, 7] {
                let all = gauss_sums_all_b(form, 5, q);
                for (k, z) in all.iter().enumerate() {
                    let b: Vec<i64> = if form.dim() == 1 {
                        vec![k as i64]
                    } else {
                        vec![(k / q as usize) as i64, (k % q as usize) as i64]
                    };
                    let direct = gauss_sum(form, 5, &b, q as i64).unwrap();
                    assert!((z - direct).norm() < 1e-9, "q={q} b={b:?}");
                }
            }
        }
    }

    #[test]
    fn square_root_cancellation_one_variable() {
        let table = GaussTable::compute(&square(), 64);
        for row in &table.rows {
            assert!(row.max_abs <= (2.0 * row.q as f64).sqrt() + 1e-9, "{row:?}");
        }
    }
}
