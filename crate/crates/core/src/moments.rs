//! Moments, truncated moments and level sets of `|F_a|`.

use num_complex::{Complex, Complex64};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::expsum::{CoefficientSequence, GridEvaluator, GridField, SumKind, TorusGrid};
use crate::quadform::QuadraticForm;
use crate::scalar::{pairwise_sum_real, Real};

/// Limits for the exact convolution oracle.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ExactBudget {
    /// Largest dense key box.
    pub max_keys: usize,
    /// Largest number of multiply-adds over all convolution rounds.
    pub max_work: f64,
}

impl Default for ExactBudget {
    fn default() -> Self {
        Self {
            max_keys: 1 << 25,
            max_work: 2e10,
        }
    }
}

/// Number of solutions of `Σ_{i≤k} (R(n_i), n_i) = Σ_{i≤k} (R(m_i), m_i)`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RepresentationCount {
    pub p_half: u32,
    pub count: u128,
    pub weighted: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExactMoment {
    pub p: u32,
    pub value: f64,
    /// Present when `a` is an indicator, so the moment is an integer count.
    pub count: Option<RepresentationCount>,
}

/// Dense key box `[r_lo, r_hi] × Π[lo_i, hi_i]` with row-major layout.
struct KeyBox {
    r_lo: i64,
    lo: Vec<i64>,
    dims: Vec<usize>,
    strides: Vec<usize>,
}

impl KeyBox {
    fn new(r_lo: i64, r_hi: i64, lo: Vec<i64>, hi: &[i64]) -> Option<Self> {
        let mut dims = vec![(r_hi - r_lo + 1) as usize];
        dims.extend(lo.iter().zip(hi).map(|(l, h)| (h - l + 1) as usize));
        let mut strides = vec![1usize; dims.len()];
        for i in (0..dims.len() - 1).rev() {
            strides[i] = strides[i + 1].checked_mul(dims[i + 1])?;
        }
        strides[0].checked_mul(dims[0])?;
        Some(Self { r_lo, lo, dims, strides })
    }

    fn len(&self) -> usize {
        self.strides[0] * self.dims[0]
    }

    /// Linear part of the index; `index = base + linear(key)`.
    fn linear(&self, r: i64, n: &[i64]) -> i64 {
        r * self.strides[0] as i64
            + n.iter()
                .zip(&self.strides[1..])
                .map(|(&x, &s)| x * s as i64)
                .sum::<i64>()
    }

    fn base(&self) -> i64 {
        -self.linear(self.r_lo, &self.lo)
    }

    fn decode(&self, mut idx: usize) -> (i64, Vec<i64>) {
        let mut coords = vec![0i64; self.dims.len()];
        for i in 0..self.dims.len() {
            coords[i] = (idx / self.strides[i]) as i64;
            idx %= self.strides[i];
        }
        let r = coords[0] + self.r_lo;
        let n = coords[1..].iter().zip(&self.lo).map(|(c, l)| c + l).collect();
        (r, n)
    }
}

/// `∫|F_a|^p` for even `p` as `Σ_key |W_{p/2}(key)|²`, where `W_k` is the
/// `k`-fold convolution of `a` placed at keys `(R(n), n)`.
pub fn even_moment_exact<T: Real>(
    form: &QuadraticForm,
    a: &CoefficientSequence<T>,
    p: u32,
) -> Result<ExactMoment> {
    even_moment_exact_with(form, a, p, ExactBudget::default())
}

pub fn even_moment_exact_with<T: Real>(
    form: &QuadraticForm,
    a: &CoefficientSequence<T>,
    p: u32,
    budget: ExactBudget,
) -> Result<ExactMoment> {
    if p == 0 || p % 2 == 1 {
        return Err(Error::InvalidParameter(format!("exact moments need even p >= 2, got {p}")));
    }
    if a.dim() != form.dim() {
        return Err(Error::DimensionMismatch {
            expected: form.dim(),
            got: a.dim(),
        });
    }
    let d = form.dim();
    let k = p / 2;
    let mut terms: Vec<(i64, Vec<i64>, Complex64)> = Vec::new();
    for (n, &c) in a.points().zip(a.values()) {
        if c.norm_sqr() > T::zero() {
            let r = form.evaluate(&n)?;
            terms.push((r, n, Complex64::new(c.re.as_f64(), c.im.as_f64())));
        }
    }
    if terms.is_empty() {
        return Ok(ExactMoment { p, value: 0.0, count: None });
    }
    let indicator = a.is_indicator();
    let r_lo = terms.iter().map(|t| t.0).min().unwrap();
    let r_hi = terms.iter().map(|t| t.0).max().unwrap();
    let lo: Vec<i64> = (0..d).map(|i| terms.iter().map(|t| t.1[i]).min().unwrap()).collect();
    let hi: Vec<i64> = (0..d).map(|i| terms.iter().map(|t| t.1[i]).max().unwrap()).collect();
    let level_box = |j: i64| {
        KeyBox::new(
            j * r_lo,
            j * r_hi,
            lo.iter().map(|x| j * x).collect(),
            &hi.iter().map(|x| j * x).collect::<Vec<_>>(),
        )
    };
    let too_big = || {
        Error::BudgetExceeded(format!(
            "exact p={p} moment exceeds the key/work budget; use a Nyquist grid instead"
        ))
    };
    // Up-front budget: the last box and a bound on total work.
    let last = level_box(k as i64).ok_or_else(too_big)?;
    if last.len() > budget.max_keys {
        return Err(too_big());
    }
    let mut work = 0.0;
    for j in 1..k as i64 {
        let prev = level_box(j).ok_or_else(too_big)?.len() as f64;
        work += prev.min((terms.len() as f64).powi(j as i32)) * terms.len() as f64;
    }
    if work > budget.max_work {
        return Err(too_big());
    }

    let mut current_box = level_box(1).unwrap();
    let mut weights = vec![Complex64::new(0.0, 0.0); current_box.len()];
    let mut counts = if indicator { vec![0u64; current_box.len()] } else { Vec::new() };
    let base1 = current_box.base();
    for (r, n, c) in &terms {
        let idx = (base1 + current_box.linear(*r, n)) as usize;
        weights[idx] += c;
        if indicator {
            counts[idx] += 1;
        }
    }
    for j in 2..=k as i64 {
        let next_box = level_box(j).unwrap();
        let base = next_box.base();
        let step: Vec<(i64, Complex64)> = terms
            .iter()
            .map(|(r, n, c)| (next_box.linear(*r, n), *c))
            .collect();
        let mut next = vec![Complex64::new(0.0, 0.0); next_box.len()];
        let mut next_counts = if indicator { vec![0u64; next_box.len()] } else { Vec::new() };
        for (idx, &w) in weights.iter().enumerate() {
            let cnt = if indicator { counts[idx] } else { 0 };
            if w.norm_sqr() == 0.0 && cnt == 0 {
                continue;
            }
            let (r, n) = current_box.decode(idx);
            let off = base + next_box.linear(r, &n);
            for &(lin, c) in &step {
                let t = (off + lin) as usize;
                next[t] += w * c;
                if indicator {
                    next_counts[t] += cnt;
                }
            }
        }
        weights = next;
        counts = next_counts;
        current_box = next_box;
    }
    let squares: Vec<f64> = weights.iter().map(|w| w.norm_sqr()).collect();
    let value = pairwise_sum_real(&squares);
    let count = indicator.then(|| RepresentationCount {
        p_half: k,
        count: counts.iter().map(|&c| c as u128 * c as u128).sum(),
        weighted: false,
    });
    let value = count.as_ref().map_or(value, |c| c.count as f64);
    Ok(ExactMoment { p, value, count })
}

/// Streaming reduction of `|F|` over grid cells: full and truncated
/// `p`-th power sums and level-set counts.
#[derive(Debug, Clone, PartialEq)]
pub struct MomentAccumulator {
    p: f64,
    thresholds: Vec<f64>,
    lambdas: Vec<f64>,
    full: f64,
    /// `bins[j]`: power sum of cells with exactly `j` thresholds `≤ |F|`.
    bins: Vec<f64>,
    /// `level_bins[j]`: cells with exactly `j` levels `≤ |F|`.
    level_bins: Vec<u64>,
    max_abs: f64,
    cells: u64,
}

impl MomentAccumulator {
    /// `thresholds` and `lambdas` are sorted internally.
    pub fn new(p: f64, thresholds: &[f64], lambdas: &[f64]) -> Self {
        let mut thresholds = thresholds.to_vec();
        thresholds.sort_by(f64::total_cmp);
        let mut lambdas = lambdas.to_vec();
        lambdas.sort_by(f64::total_cmp);
        Self {
            p,
            bins: vec![0.0; thresholds.len() + 1],
            level_bins: vec![0; lambdas.len() + 1],
            thresholds,
            lambdas,
            full: 0.0,
            max_abs: 0.0,
            cells: 0,
        }
    }

    pub fn add_magnitudes<I: IntoIterator<Item = f64>>(&mut self, mags: I) {
        let mut powers = Vec::new();
        let mut bin_parts: Vec<Vec<f64>> = vec![Vec::new(); self.bins.len()];
        for m in mags {
            let pw = m.powf(self.p);
            powers.push(pw);
            let j = self.thresholds.partition_point(|&t| t <= m);
            bin_parts[j].push(pw);
            let l = self.lambdas.partition_point(|&t| t <= m);
            self.level_bins[l] += 1;
            self.max_abs = self.max_abs.max(m);
            self.cells += 1;
        }
        self.full += pairwise_sum_real(&powers);
        for (b, part) in self.bins.iter_mut().zip(&bin_parts) {
            *b += pairwise_sum_real(part);
        }
    }

    pub fn add_slice<T: Real>(&mut self, slice: &[Complex<T>]) {
        self.add_magnitudes(slice.iter().map(|z| z.norm().as_f64()));
    }

    pub fn merge(&mut self, other: &Self) {
        self.full += other.full;
        for (a, b) in self.bins.iter_mut().zip(&other.bins) {
            *a += b;
        }
        for (a, b) in self.level_bins.iter_mut().zip(&other.level_bins) {
            *a += b;
        }
        self.max_abs = self.max_abs.max(other.max_abs);
        self.cells += other.cells;
    }

    pub fn finish(&self, cell_measure: f64) -> GridMoments {
        let mut truncated = Vec::with_capacity(self.thresholds.len());
        let mut tail: f64 = self.bins.iter().sum();
        for (i, &t) in self.thresholds.iter().enumerate() {
            tail -= self.bins[i];
            truncated.push((t, tail.max(0.0) * cell_measure));
        }
        let mut levels = Vec::with_capacity(self.lambdas.len());
        let mut above: u64 = self.level_bins.iter().sum();
        for (i, &l) in self.lambdas.iter().enumerate() {
            above -= self.level_bins[i];
            levels.push((l, above as f64 * cell_measure));
        }
        GridMoments {
            p: self.p,
            full: self.full * cell_measure,
            truncated,
            levels,
            max_abs: self.max_abs,
            cells: self.cells,
        }
    }
}

/// Result of one pass over a grid.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridMoments {
    pub p: f64,
    pub full: f64,
    /// `(threshold, ∫_{|F| ≥ threshold} |F|^p)`, thresholds increasing.
    pub truncated: Vec<(f64, f64)>,
    /// `(λ, |E_λ|)`, `λ` increasing.
    pub levels: Vec<(f64, f64)>,
    pub max_abs: f64,
    pub cells: u64,
}

/// One streaming pass over the grid without storing the field.
pub fn stream_moments<T: Real>(
    evaluator: &GridEvaluator<T>,
    p: f64,
    thresholds: &[f64],
    lambdas: &[f64],
) -> GridMoments {
    let parts = evaluator.fold_slices(
        || MomentAccumulator::new(p, thresholds, lambdas),
        |acc, _, slice| acc.add_slice(slice),
    );
    let mut total = MomentAccumulator::new(p, thresholds, lambdas);
    for part in &parts {
        total.merge(part);
    }
    total.finish(evaluator.grid().cell_measure())
}

fn field_pass<T: Real>(field: &GridField<T>, p: f64, thresholds: &[f64], lambdas: &[f64]) -> GridMoments {
    let mut acc = MomentAccumulator::new(p, thresholds, lambdas);
    let sl = field.grid.slice_len();
    for j in 0..field.grid.m_alpha {
        acc.add_magnitudes((j * sl..(j + 1) * sl).map(|i| field.magnitude(i).as_f64()));
    }
    acc.finish(field.grid.cell_measure())
}

/// Cell-weighted `Σ|F|^p`.
pub fn grid_moment<T: Real>(field: &GridField<T>, p: f64) -> f64 {
    field_pass(field, p, &[], &[]).full
}

/// `C·N^{d/4}·‖a‖₂`.
pub fn truncation_threshold(n: u64, dim: usize, c: f64, norm_a: f64) -> f64 {
    c * (n as f64).powf(dim as f64 / 4.0) * norm_a
}

/// Cell-weighted `Σ|F|^p` over cells with `|F| ≥ C·N^{d/4}·‖a‖₂`.
pub fn truncated_moment<T: Real>(field: &GridField<T>, p: f64, c: f64, norm_a: f64) -> Result<f64> {
    if c <= 0.0 {
        return Err(Error::InvalidParameter(format!("C={c} must be positive")));
    }
    let t = truncation_threshold(field.meta.n, field.grid.dim, c, norm_a);
    Ok(field_pass(field, p, &[t], &[]).truncated[0].1)
}

/// `|E_λ| = |{|F| ≥ λ}|` as a fraction of cells.
pub fn level_set_measure<T: Real>(field: &GridField<T>, lambda: f64) -> Result<f64> {
    if lambda < 0.0 {
        return Err(Error::InvalidParameter(format!("lambda={lambda} must be >= 0")));
    }
    Ok(field_pass(field, 0.0, &[], &[lambda]).levels[0].1)
}

/// `(λ, |E_λ|)` for a sorted list of levels, in one pass.
pub fn level_set_profile<T: Real>(field: &GridField<T>, lambdas: &[f64]) -> Result<Vec<(f64, f64)>> {
    if lambdas.windows(2).any(|w| w[0] > w[1]) {
        return Err(Error::InvalidParameter("levels must be sorted".into()));
    }
    Ok(field_pass(field, 0.0, &[], lambdas).levels)
}

/// `p·∫λ^{p-1}|E_λ|dλ` by the trapezoid rule on a level profile that
/// starts at `λ = 0`.
pub fn layer_cake(profile: &[(f64, f64)], p: f64) -> f64 {
    profile
        .windows(2)
        .map(|w| {
            let (l0, e0) = w[0];
            let (l1, e1) = w[1];
            0.5 * (l1 - l0) * p * (l0.powf(p - 1.0) * e0 + l1.powf(p - 1.0) * e1)
        })
        .sum()
}

/// Moments of one sequence, possibly averaged over several grid offsets.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MomentReport {
    pub form: String,
    #[serde(rename = "N")]
    pub n: u64,
    pub p: f64,
    #[serde(rename = "C")]
    pub c: f64,
    pub threshold: f64,
    #[serde(rename = "full")]
    pub full_moment: f64,
    #[serde(rename = "truncated")]
    pub truncated_moment: f64,
    #[serde(rename = "levels")]
    pub level_set_table: Vec<(f64, f64)>,
    pub grid: TorusGrid,
    pub offsets: usize,
    /// Grid met the exactness condition for even integer `p`.
    pub exact: bool,
    /// Spread (max - min) of the full moment across offsets.
    pub full_spread: f64,
    /// Spread of the truncated moment across offsets.
    pub truncated_spread: f64,
    pub max_abs: f64,
    pub norm_a: f64,
    /// Exact oracle value, when it was computed.
    pub oracle: Option<f64>,
}

impl MomentReport {
    pub const CSV_HEADER: &'static str =
        "form,N,p,C,threshold,full,truncated,full_spread,truncated_spread,max_abs,exact,cells,offsets";

    pub fn csv_row(&self) -> String {
        format!(
            "{},{},{:.16e},{:.16e},{:.16e},{:.16e},{:.16e},{:.16e},{:.16e},{:.16e},{},{},{}",
            self.form.replace(',', " "),
            self.n,
            self.p,
            self.c,
            self.threshold,
            self.full_moment,
            self.truncated_moment,
            self.full_spread,
            self.truncated_spread,
            self.max_abs,
            self.exact,
            self.grid.total_cells(),
            self.offsets
        )
    }
}

/// Evaluates `F_a` on each grid and averages the moments.
pub fn report_on_grids<T: Real>(
    form: &QuadraticForm,
    a: &CoefficientSequence<T>,
    grids: &[TorusGrid],
    p: f64,
    c: f64,
    lambdas: &[f64],
) -> Result<MomentReport> {
    if grids.is_empty() {
        return Err(Error::InvalidParameter("at least one grid is required".into()));
    }
    let norm_a = a.norm().as_f64();
    let threshold = truncation_threshold(a.radius(), a.dim(), c, norm_a);
    let mut runs = Vec::with_capacity(grids.len());
    for g in grids {
        let ev = GridEvaluator::new(form, a, g, SumKind::Extension, a.radius())?;
        runs.push(stream_moments(&ev, p, &[threshold], lambdas));
    }
    let k = runs.len() as f64;
    let mean = |f: &dyn Fn(&GridMoments) -> f64| runs.iter().map(f).sum::<f64>() / k;
    let spread = |f: &dyn Fn(&GridMoments) -> f64| {
        let v: Vec<f64> = runs.iter().map(f).collect();
        v.iter().cloned().fold(f64::MIN, f64::max) - v.iter().cloned().fold(f64::MAX, f64::min)
    };
    let full = |g: &GridMoments| g.full;
    let trunc = |g: &GridMoments| g.truncated[0].1;
    let levels = (0..lambdas.len())
        .map(|i| {
            let l = runs[0].levels[i].0;
            (l, runs.iter().map(|r| r.levels[i].1).sum::<f64>() / k)
        })
        .collect();
    let even = p.fract() == 0.0 && p >= 2.0 && (p as u64).is_multiple_of(2);
    let exact = even && grids.iter().all(|g| g.is_exact_for(form, a.radius(), p as u32));
    Ok(MomentReport {
        form: form.to_string(),
        n: a.radius(),
        p,
        c,
        threshold,
        full_moment: mean(&full),
        truncated_moment: mean(&trunc),
        level_set_table: levels,
        grid: grids[0].clone(),
        offsets: grids.len(),
        exact,
        full_spread: spread(&full),
        truncated_spread: spread(&trunc),
        max_abs: runs.iter().map(|r| r.max_abs).fold(0.0, f64::max),
        norm_a,
        oracle: None,
    })
}
