//! Log-log scaling experiments over `N`.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::expsum::{fast_size, SequenceFamily, TorusGrid};
use crate::moments::{even_moment_exact, report_on_grids, ExactBudget, MomentReport};
use crate::quadform::QuadraticForm;

/// Reference exponents for `∫|F_a|^p` with `‖a‖₂ = 1`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TheoryExponents {
    /// `sp/2 - s`.
    pub full_sub: f64,
    /// `dp/2 - (d+2)`.
    pub full_super: f64,
    /// `dp/2 - (d+2)`, the truncated-moment exponent.
    pub truncated: f64,
    /// `2(d+2)/d`.
    pub critical_p: f64,
    /// `2(d-s+2)/(d-s)`, undefined when `s = d`.
    pub critical_p_ds: Option<f64>,
}

impl TheoryExponents {
    /// Exponent of the full moment: the larger of the two regimes.
    pub fn full(&self) -> f64 {
        self.full_sub.max(self.full_super)
    }
}

pub fn theory_exponents(form: &QuadraticForm, p: f64) -> Result<TheoryExponents> {
    if p < 2.0 || !p.is_finite() {
        return Err(Error::InvalidParameter(format!("p={p} must be >= 2")));
    }
    let d = form.dim() as f64;
    let s = form.signature().s as f64;
    let sup = d * p / 2.0 - (d + 2.0);
    Ok(TheoryExponents {
        full_sub: s * p / 2.0 - s,
        full_super: sup,
        truncated: sup,
        critical_p: 2.0 * (d + 2.0) / d,
        critical_p_ds: (s < d).then(|| 2.0 * (d - s + 2.0) / (d - s)),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum GridPolicy {
    /// Exact grids for even `p` (`p` rounded up to an even integer otherwise).
    Nyquist,
    /// At most `max_cells` cells per offset. `M_θ` starts at the support
    /// width and grows while `M_α` can stay at the frequency bound; `M_α`
    /// then fills the budget, capped at the exact size.
    Budgeted { max_cells: usize },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Quantity {
    Full,
    Truncated,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScalingExperiment {
    pub form: QuadraticForm,
    pub family: SequenceFamily,
    pub n_list: Vec<u64>,
    pub p: f64,
    pub c: f64,
    pub grid: GridPolicy,
    pub offsets: usize,
    pub seed: u64,
    /// Level-set heights as multiples of `N^{d/4}`.
    pub level_factors: Vec<f64>,
    /// Compute the exact even moment when the budget allows.
    pub exact_oracle: bool,
}

impl ScalingExperiment {
    pub fn validate(&self) -> Result<()> {
        if self.n_list.len() < 3 {
            return Err(Error::InvalidParameter(format!(
                "N_list needs at least 3 entries, got {}",
                self.n_list.len()
            )));
        }
        if self.n_list.windows(2).any(|w| w[0] >= w[1]) || self.n_list[0] == 0 {
            return Err(Error::InvalidParameter("N_list must be positive and strictly increasing".into()));
        }
        if self.offsets == 0 {
            return Err(Error::InvalidParameter("offsets must be >= 1".into()));
        }
        if self.c <= 0.0 {
            return Err(Error::InvalidParameter(format!("C={} must be positive", self.c)));
        }
        if self.p < 2.0 {
            return Err(Error::InvalidParameter(format!("p={} must be >= 2", self.p)));
        }
        Ok(())
    }

    /// Grids used at size `n`.
    pub fn grids_for(&self, n: u64) -> Result<Vec<TorusGrid>> {
        let d = self.form.dim();
        let p_even = {
            let c = self.p.ceil() as u32;
            c + c % 2
        };
        let nyq = TorusGrid::nyquist(&self.form, n, p_even)?;
        match self.grid {
            GridPolicy::Nyquist => {
                if self.offsets == 1 {
                    return Ok(vec![nyq]);
                }
                let mut rng = ChaCha8Rng::seed_from_u64(self.seed ^ n.rotate_left(32));
                (0..self.offsets)
                    .map(|_| {
                        let off = (0..=d).map(|_| rng.gen::<f64>()).collect();
                        TorusGrid::new(nyq.m_alpha, nyq.m_theta, d, off)
                    })
                    .collect()
            }
            GridPolicy::Budgeted { max_cells } => {
                // Start from the support width in θ, then refine θ towards the
                // exact size while M_α can still reach the frequency bound.
                let alpha_target = (self.form.frequency_bound(n) as usize).min(nyq.m_alpha);
                let cells = |mt: usize| mt.pow(d as u32).saturating_mul(alpha_target);
                let mut mt = fast_size(2 * n as usize + 1);
                loop {
                    let next = fast_size(mt + 1);
                    if next > nyq.m_theta || cells(next) > max_cells {
                        break;
                    }
                    mt = next;
                }
                let ma = (max_cells / mt.pow(d as u32)).clamp(1, nyq.m_alpha);
                let mut rng = ChaCha8Rng::seed_from_u64(self.seed ^ n.rotate_left(32));
                (0..self.offsets)
                    .map(|_| {
                        let off = (0..=d).map(|_| rng.gen::<f64>()).collect();
                        TorusGrid::new(ma, mt, d, off)
                    })
                    .collect()
            }
        }
    }
}

/// Outcome at one `N`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScalingPoint {
    #[serde(rename = "N")]
    pub n: u64,
    pub report: Option<MomentReport>,
    /// `‖a‖₂` before normalization.
    pub raw_norm: f64,
    /// Per-offset full and truncated moments, offset order.
    pub per_offset: Vec<(f64, f64)>,
    pub error: Option<String>,
}

impl ScalingPoint {
    /// Moment of the unnormalized sequence, `‖a‖₂^p` times the normalized one.
    pub fn raw_full(&self) -> Option<f64> {
        self.report
            .as_ref()
            .map(|r| r.full_moment * self.raw_norm.powf(r.p))
    }
}

fn run_one(exp: &ScalingExperiment, n: u64) -> Result<(MomentReport, f64, Vec<(f64, f64)>)> {
    let d = exp.form.dim();
    let raw = exp.family.build::<f64>(d, n)?;
    let raw_norm = raw.norm();
    let a = raw.clone().normalized();
    let grids = exp.grids_for(n)?;
    let scale = (n as f64).powf(d as f64 / 4.0);
    let lambdas: Vec<f64> = exp.level_factors.iter().map(|f| f * scale).collect();
    let mut per_offset = Vec::with_capacity(grids.len());
    for g in &grids {
        let r = report_on_grids(&exp.form, &a, std::slice::from_ref(g), exp.p, exp.c, &lambdas)?;
        per_offset.push((r.full_moment, r.truncated_moment));
    }
    let mut report = report_on_grids(&exp.form, &a, &grids, exp.p, exp.c, &lambdas)?;
    let p_int = exp.p as u32;
    if exp.exact_oracle && exp.p.fract() == 0.0 && p_int.is_multiple_of(2) {
        if let Ok(m) = even_moment_exact(&exp.form, &a, p_int) {
            report.oracle = Some(m.value);
        } else if let Ok(m) = crate::moments::even_moment_exact_with(&exp.form, &raw, p_int, ExactBudget::default()) {
            report.oracle = Some(m.value / raw_norm.powf(exp.p));
        }
    }
    Ok((report, raw_norm, per_offset))
}

/// Runs every `N` (concurrently); failures are recorded per point.
pub fn run_experiment(exp: &ScalingExperiment) -> Result<Vec<ScalingPoint>> {
    exp.validate()?;
    Ok(exp
        .n_list
        .par_iter()
        .map(|&n| match run_one(exp, n) {
            Ok((report, raw_norm, per_offset)) => ScalingPoint {
                n,
                report: Some(report),
                raw_norm,
                per_offset,
                error: None,
            },
            Err(e) => ScalingPoint {
                n,
                report: None,
                raw_norm: f64::NAN,
                per_offset: Vec::new(),
                error: Some(e.to_string()),
            },
        })
        .collect())
}

/// Least-squares line through `(log N, log value)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LogLogFit {
    pub slope: f64,
    pub intercept: f64,
    pub residual_rms: f64,
    /// Slopes between successive points.
    pub pairwise_slopes: Vec<f64>,
    /// Every value was zero; no line was fitted.
    pub degenerate_zero: bool,
}

pub fn fit_loglog(points: &[(f64, f64)]) -> Result<LogLogFit> {
    if points.len() < 3 {
        return Err(Error::InvalidParameter(format!(
            "log-log fit needs at least 3 points, got {}",
            points.len()
        )));
    }
    if points.iter().all(|&(_, v)| v == 0.0) {
        return Ok(LogLogFit {
            slope: 0.0,
            intercept: f64::NEG_INFINITY,
            residual_rms: 0.0,
            pairwise_slopes: Vec::new(),
            degenerate_zero: true,
        });
    }
    let bad: Vec<String> = points
        .iter()
        .filter(|&&(n, v)| !(v > 0.0 && v.is_finite()) || !(n > 0.0))
        .map(|&(n, v)| format!("N={n} (value {v})"))
        .collect();
    if !bad.is_empty() {
        return Err(Error::InvalidParameter(format!(
            "log-log fit needs positive values; offending: {}",
            bad.join(", ")
        )));
    }
    let xs: Vec<f64> = points.iter().map(|p| p.0.ln()).collect();
    let ys: Vec<f64> = points.iter().map(|p| p.1.ln()).collect();
    let k = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / k;
    let my = ys.iter().sum::<f64>() / k;
    let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let rss: f64 = xs
        .iter()
        .zip(&ys)
        .map(|(x, y)| (y - intercept - slope * x).powi(2))
        .sum();
    let pairwise_slopes = xs
        .windows(2)
        .zip(ys.windows(2))
        .map(|(x, y)| (y[1] - y[0]) / (x[1] - x[0]))
        .collect();
    Ok(LogLogFit {
        slope,
        intercept,
        residual_rms: (rss / k).sqrt(),
        pairwise_slopes,
        degenerate_zero: false,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Verdict {
    Within,
    Outside,
    DegenerateZero,
}

/// Fit of one quantity across `N` against its reference exponent.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScalingFit {
    pub quantity: Quantity,
    pub fit: LogLogFit,
    pub per_n: Vec<(u64, f64)>,
    pub theory_slope: f64,
    pub tolerance: f64,
    /// Slopes fitted to each offset's values separately.
    pub offset_slopes: Vec<f64>,
    /// Fit of the unnormalized full moment, when it applies.
    pub raw_fit: Option<LogLogFit>,
    pub raw_theory_slope: Option<f64>,
    pub verdict: Verdict,
}

impl ScalingFit {
    pub fn passed(&self) -> bool {
        self.verdict != Verdict::Outside
    }
}

/// Fits `quantity` over the successful points. The verdict requires the
/// pooled slope and every per-offset slope to lie within `tolerance`.
pub fn summarize(
    exp: &ScalingExperiment,
    points: &[ScalingPoint],
    quantity: Quantity,
    tolerance: f64,
) -> Result<ScalingFit> {
    let ok: Vec<&ScalingPoint> = points.iter().filter(|p| p.report.is_some()).collect();
    let value = |p: &ScalingPoint| {
        let r = p.report.as_ref().unwrap();
        match quantity {
            Quantity::Full => r.oracle.unwrap_or(r.full_moment),
            Quantity::Truncated => r.truncated_moment,
        }
    };
    let per_n: Vec<(u64, f64)> = ok.iter().map(|p| (p.n, value(p))).collect();
    let fit = fit_loglog(&per_n.iter().map(|&(n, v)| (n as f64, v)).collect::<Vec<_>>())?;
    let th = theory_exponents(&exp.form, exp.p)?;
    let theory_slope = match quantity {
        Quantity::Full => th.full(),
        Quantity::Truncated => th.truncated,
    };
    let offsets = ok.iter().map(|p| p.per_offset.len()).min().unwrap_or(0);
    let mut offset_slopes = Vec::new();
    if !fit.degenerate_zero && offsets > 1 {
        for k in 0..offsets {
            let pts: Vec<(f64, f64)> = ok
                .iter()
                .map(|p| {
                    let (f, t) = p.per_offset[k];
                    (p.n as f64, if quantity == Quantity::Full { f } else { t })
                })
                .collect();
            if let Ok(f) = fit_loglog(&pts) {
                offset_slopes.push(f.slope);
            }
        }
    }
    let (raw_fit, raw_theory_slope) = if quantity == Quantity::Full {
        let pts: Vec<(f64, f64)> = ok
            .iter()
            .map(|p| (p.n as f64, value(p) * p.raw_norm.powf(exp.p)))
            .collect();
        // ‖a‖₂² grows like N^{k} with k fitted from the norms themselves.
        let norm_pts: Vec<(f64, f64)> = ok.iter().map(|p| (p.n as f64, p.raw_norm)).collect();
        let norm_slope = fit_loglog(&norm_pts).map(|f| f.slope).unwrap_or(0.0);
        (fit_loglog(&pts).ok(), Some(theory_slope + exp.p * norm_slope))
    } else {
        (None, None)
    };
    let inside = |s: f64| (s - theory_slope).abs() <= tolerance;
    let verdict = if fit.degenerate_zero {
        Verdict::DegenerateZero
    } else if inside(fit.slope) && offset_slopes.iter().all(|&s| inside(s)) {
        Verdict::Within
    } else {
        Verdict::Outside
    };
    Ok(ScalingFit {
        quantity,
        fit,
        per_n,
        theory_slope,
        tolerance,
        offset_slopes,
        raw_fit,
        raw_theory_slope,
        verdict,
    })
}

/// `|E_λ|·λ^q·N^{d+2-dq/2}` for each level in a report.
pub fn level_set_normalized(report: &MomentReport, dim: usize, q: f64) -> Vec<(f64, f64)> {
    let n = report.n as f64;
    let d = dim as f64;
    report
        .level_set_table
        .iter()
        .map(|&(l, m)| (l, m * l.powf(q) * n.powf(d + 2.0 - d * q / 2.0)))
        .collect()
}
