//! Smooth partitions of the circle adapted to rationals with small
//! denominator, their Fourier coefficients, and the resulting pieces of
//! the smoothed sum `F`.
//!
//! For dyadic `Q ≤ N₁` and `Q ≤ 2^s ≤ Ñ = 2^⌊log₂N⌋`:
//!
//! * `φ^(s) = κ(2^sN·) - κ(2^{s+1}N·)` for `2^s < Ñ`, and `κ(ÑN·)` at `2^s = Ñ`;
//! * `Φ_{Q,s}(α) = Σ_{q∼Q, (a,q)=1} φ^(s)(α - a/q)`, 1-periodic;
//! * `λ = Σ Φ_{Q,s}`, `ρ = 1 - λ`;
//! * `Ψ_{Q,s} = Φ_{Q,s} - (∫Φ_{Q,s}/∫ρ)·ρ` has mean zero.

use std::marker::PhantomData;

use num_complex::Complex;
use serde::{Deserialize, Serialize};

use crate::bump::SmoothBump;
use crate::error::{Error, Result};
use crate::expsum::{smoothed_sum_direct, SmoothWeight};
use crate::numtheory::{
    dyadic_floor, farey_neighbours, ramanujan_sum, totient, truncated_divisor, Fraction,
};
use crate::quadform::QuadraticForm;
use crate::quadrature::CompositeRule;
use crate::scalar::Real;

/// Largest `N₁` whose Farey family is still enumerated when the analytic
/// criterion `16·Q_max ≤ N` fails.
const ENUMERATION_LIMIT: u64 = 2048;
/// `κ̂` uses a cached rule up to this frequency.
const CACHED_XI: f64 = 64.0;

/// Label of `α` relative to the major arcs `|α - a/q| ≤ c₁/(qN)`, `q ≤ N₁`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum ArcLabel {
    Major { a: i64, q: u64, big_q: u64, beta: f64 },
    Minor,
}

/// How interval disjointness was established.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Disjointness {
    /// `16·Q_max ≤ N`.
    Analytic,
    /// Every adjacent pair of the Farey family was compared exactly.
    Enumerated { fractions: usize },
    /// No arcs (`N₁ = 0`).
    Empty,
}

/// Mollifier family for a given `N` and `c₁ = c1_num/c1_den`.
#[derive(Debug, Clone)]
pub struct MollifierFamily<T: Real> {
    n: u64,
    c1_num: u64,
    c1_den: u64,
    n1: u64,
    s_max: u32,
    bump: SmoothBump<f64>,
    /// `(x, w·κ(x))` on `[1, 2]` for the cached `κ̂` rule.
    tail_rule: Vec<(f64, f64)>,
    pieces: Vec<(u64, u32)>,
    /// `∫Φ_{Q,s}`, aligned with `pieces`.
    phi_mass: Vec<f64>,
    rho_mass: f64,
    disjointness: Disjointness,
    _scalar: PhantomData<T>,
}

impl<T: Real> MollifierFamily<T> {
    /// Default `c₁ = 1/16`.
    pub fn new(n: u64) -> Result<Self> {
        Self::with_c1(n, 1, 16)
    }

    /// Builds the family and verifies that the arc supports
    /// `a/q ± 2/(QN)` are pairwise disjoint.
    pub fn with_c1(n: u64, c1_num: u64, c1_den: u64) -> Result<Self> {
        if n == 0 {
            return Err(Error::InvalidParameter("N must be positive".into()));
        }
        if c1_den == 0 || c1_num == 0 || c1_num > c1_den {
            return Err(Error::InvalidParameter(format!(
                "c1 = {c1_num}/{c1_den} must lie in (0, 1]"
            )));
        }
        let n1 = c1_num * n / c1_den;
        let s_max = 63 - n.leading_zeros();
        let bump = SmoothBump::<f64>::new();
        let panels = (4.0 * CACHED_XI) as usize;
        let rule = CompositeRule::<f64>::uniform(1.0, 2.0, panels, 16)?;
        let tail_rule = rule
            .nodes
            .iter()
            .zip(&rule.weights)
            .map(|(&x, &w)| (x, w * bump.eval(x)))
            .collect();
        let mut fam = Self {
            n,
            c1_num,
            c1_den,
            n1,
            s_max,
            bump,
            tail_rule,
            pieces: Vec::new(),
            phi_mass: Vec::new(),
            rho_mass: 1.0,
            disjointness: Disjointness::Empty,
            _scalar: PhantomData,
        };
        fam.disjointness = fam.check_disjoint()?;
        let mut q = 1;
        while q <= n1 {
            for s in q.trailing_zeros()..=s_max {
                fam.pieces.push((q, s));
            }
            q *= 2;
        }
        fam.phi_mass = fam
            .pieces
            .iter()
            .map(|&(q, s)| fam.phi_fourier_f64(q, s, 0))
            .collect();
        fam.rho_mass = 1.0 - fam.phi_mass.iter().sum::<f64>();
        Ok(fam)
    }

    pub fn n(&self) -> u64 {
        self.n
    }

    pub fn n1(&self) -> u64 {
        self.n1
    }

    pub fn c1(&self) -> f64 {
        self.c1_num as f64 / self.c1_den as f64
    }

    pub fn s_max(&self) -> u32 {
        self.s_max
    }

    /// `Ñ = 2^s_max`.
    pub fn n_tilde(&self) -> u64 {
        1 << self.s_max
    }

    pub fn disjointness(&self) -> Disjointness {
        self.disjointness
    }

    /// All `(Q, s)` with dyadic `Q ≤ N₁` and `Q ≤ 2^s ≤ Ñ`.
    pub fn pieces(&self) -> &[(u64, u32)] {
        &self.pieces
    }

    /// Dyadic `Q ≤ N₁`.
    pub fn dyadic_qs(&self) -> Vec<u64> {
        std::iter::successors(Some(1u64), |q| Some(q * 2))
            .take_while(|&q| q <= self.n1)
            .collect()
    }

    /// `∫ρ`.
    pub fn rho_mass(&self) -> T {
        T::lit(self.rho_mass)
    }

    fn kappa(&self, x: f64) -> f64 {
        self.bump.eval(x)
    }

    fn check_s(&self, s: u32) -> Result<()> {
        if s > self.s_max {
            return Err(Error::InvalidParameter(format!("s={s} exceeds s_max={}", self.s_max)));
        }
        Ok(())
    }

    fn check_piece(&self, q: u64, s: u32) -> Result<()> {
        self.check_s(s)?;
        if !q.is_power_of_two() {
            return Err(Error::InvalidParameter(format!("Q={q} is not dyadic")));
        }
        if q > self.n1 || q > 1 << s {
            return Err(Error::InvalidParameter(format!(
                "need Q <= 2^s and Q <= N1 (Q={q}, s={s}, N1={})",
                self.n1
            )));
        }
        Ok(())
    }

    fn index_of(&self, q: u64, s: u32) -> Result<usize> {
        self.check_piece(q, s)?;
        Ok(self
            .pieces
            .iter()
            .position(|&p| p == (q, s))
            .expect("validated piece is enumerated"))
    }

    fn phi_s_f64(&self, s: u32, x: f64) -> f64 {
        let scale = (1u64 << s) as f64 * self.n as f64;
        if s == self.s_max {
            self.kappa(scale * x)
        } else {
            self.kappa(scale * x) - self.kappa(2.0 * scale * x)
        }
    }

    /// `φ^(s)(x)`.
    pub fn phi_s(&self, s: u32, x: f64) -> Result<T> {
        self.check_s(s)?;
        Ok(T::lit(self.phi_s_f64(s, x)))
    }

    /// Reduced fractions with `q ∼ Q` adjacent to `α`, with offsets `α - a/q`.
    fn near_fractions(&self, q: u64, alpha: f64) -> impl Iterator<Item = (Fraction, f64)> {
        let (lo, hi) = farey_neighbours(alpha, 2 * q - 1);
        let same = lo == hi;
        [Some(lo), (!same).then_some(hi)]
            .into_iter()
            .flatten()
            .filter(move |f| f.den >= q && f.den < 2 * q)
            .map(move |f| (f, f.offset(alpha)))
    }

    fn phi_qs_f64(&self, q: u64, s: u32, alpha: f64) -> f64 {
        self.near_fractions(q, alpha)
            .map(|(_, x)| self.phi_s_f64(s, x))
            .sum()
    }

    /// `Φ_{Q,s}(α)` via the Farey neighbours of `α` of order `2Q - 1`.
    pub fn phi_qs(&self, q: u64, s: u32, alpha: f64) -> Result<T> {
        self.check_piece(q, s)?;
        Ok(T::lit(self.phi_qs_f64(q, s, alpha)))
    }

    /// `Φ_{Q,s}(α)` by summing over every reduced `a/q`, periodized; test oracle.
    pub fn phi_qs_naive(&self, q: u64, s: u32, alpha: f64) -> Result<T> {
        self.check_piece(q, s)?;
        let mut acc = 0.0;
        for f in crate::numtheory::reduced_fractions(q, 2 * q) {
            let mut x = f.offset(alpha);
            x -= x.round();
            acc += self.phi_s_f64(s, x);
        }
        Ok(T::lit(acc))
    }

    fn lambda_f64(&self, alpha: f64) -> f64 {
        let mut acc = 0.0;
        for q in self.dyadic_qs() {
            let scale = q as f64 * self.n as f64;
            for (_, x) in self.near_fractions(q, alpha) {
                acc += self.kappa(scale * x);
            }
        }
        acc
    }

    /// `(λ(α), ρ(α))` using `λ = Σ_Q Σ_{q∼Q} κ(QN(α - a/q))`.
    pub fn lambda_rho(&self, alpha: f64) -> (T, T) {
        let l = self.lambda_f64(alpha);
        (T::lit(l), T::lit(1.0 - l))
    }

    /// `λ` as `Σ_{Q,s} Φ_{Q,s}`, without the telescoping shortcut.
    pub fn lambda_by_pieces(&self, alpha: f64) -> T {
        T::lit(
            self.pieces
                .iter()
                .map(|&(q, s)| self.phi_qs_f64(q, s, alpha))
                .sum(),
        )
    }

    /// Max over `samples` points of `|Σ_{Q ≤ 2^s ≤ Ñ} φ^(s)(x) - κ(QNx)|`,
    /// with `x` spread over `[-3/(QN), 3/(QN)]`.
    pub fn partition_identity_check(&self, q: u64, samples: usize) -> Result<f64> {
        if !q.is_power_of_two() || q > self.n {
            return Err(Error::InvalidParameter(format!("Q={q} must be dyadic and <= N")));
        }
        let scale = q as f64 * self.n as f64;
        let s0 = q.trailing_zeros();
        let mut worst = 0.0f64;
        for i in 0..samples {
            // Golden-ratio sequence: deterministic and well spread.
            let u = (i as f64 * 0.618_033_988_749_894_9).fract();
            let x = (6.0 * u - 3.0) / scale;
            let lhs: f64 = (s0..=self.s_max).map(|s| self.phi_s_f64(s, x)).sum();
            worst = worst.max((lhs - self.kappa(scale * x)).abs());
        }
        Ok(worst)
    }

    /// `κ̂(ξ) = ∫κ(x) e(-ξx) dx = 2∫₀² κ(x) cos(2πξx) dx`.
    pub fn kappa_hat(&self, xi: f64) -> f64 {
        let xi = xi.abs();
        let flat = if xi == 0.0 {
            1.0
        } else {
            let t = std::f64::consts::TAU * xi;
            t.sin() / t
        };
        let tau = std::f64::consts::TAU;
        let tail = if xi <= CACHED_XI {
            self.tail_rule
                .iter()
                .map(|&(x, wk)| wk * (tau * xi * x).cos())
                .sum::<f64>()
        } else {
            let panels = (4.0 * xi).ceil() as usize;
            let rule = CompositeRule::<f64>::uniform(1.0, 2.0, panels, 16).expect("valid rule");
            rule.integrate(|x| self.kappa(x) * (tau * xi * x).cos())
        };
        2.0 * (flat + tail)
    }

    /// `γ̂^(s)(ξ)`: `κ̂(ξ) - κ̂(ξ/2)/2` below the top scale, `κ̂(ξ)` at it.
    pub fn gamma_hat(&self, s: u32, xi: f64) -> Result<T> {
        self.check_s(s)?;
        Ok(T::lit(self.gamma_hat_f64(s, xi)))
    }

    fn gamma_hat_f64(&self, s: u32, xi: f64) -> f64 {
        if s == self.s_max {
            self.kappa_hat(xi)
        } else {
            self.kappa_hat(xi) - 0.5 * self.kappa_hat(xi / 2.0)
        }
    }

    /// `Σ_{q∼Q} c_q(n)`.
    pub fn farey_comb_coeff(q: u64, n: i64) -> i64 {
        (q..2 * q).map(|r| ramanujan_sum(r, n)).sum()
    }

    fn phi_fourier_f64(&self, q: u64, s: u32, n: i64) -> f64 {
        let width = (1u64 << s) as f64 * self.n as f64;
        let comb = if n == 0 {
            (q..2 * q).map(totient).sum::<u64>() as f64
        } else {
            Self::farey_comb_coeff(q, n) as f64
        };
        comb / width * self.gamma_hat_f64(s, n as f64 / width)
    }

    /// `Φ̂_{Q,s}(n) = (Σ_{q∼Q} c_q(n))·(2^sN)⁻¹·γ̂^(s)(n/(2^sN))`; real.
    pub fn phi_fourier(&self, q: u64, s: u32, n: i64) -> Result<Complex<T>> {
        self.check_piece(q, s)?;
        Ok(Complex::new(T::lit(self.phi_fourier_f64(q, s, n)), T::zero()))
    }

    /// `∫Φ_{Q,s}`.
    pub fn phi_mass(&self, q: u64, s: u32) -> Result<T> {
        Ok(T::lit(self.phi_mass[self.index_of(q, s)?]))
    }

    /// `ρ̂(n) = 1_{n=0} - Σ_{Q,s} Φ̂_{Q,s}(n)`.
    pub fn rho_fourier(&self, n: i64) -> T {
        let delta = if n == 0 { 1.0 } else { 0.0 };
        let sum: f64 = self
            .pieces
            .iter()
            .map(|&(q, s)| self.phi_fourier_f64(q, s, n))
            .sum();
        T::lit(delta - sum)
    }

    /// `Ψ_{Q,s}(α)`.
    pub fn psi_qs(&self, q: u64, s: u32, alpha: f64) -> Result<T> {
        let i = self.index_of(q, s)?;
        let rho = 1.0 - self.lambda_f64(alpha);
        Ok(T::lit(
            self.phi_qs_f64(q, s, alpha) - self.phi_mass[i] / self.rho_mass * rho,
        ))
    }

    /// `Ψ̂_{Q,s}(n)`.
    pub fn psi_fourier(&self, q: u64, s: u32, n: i64) -> Result<T> {
        let i = self.index_of(q, s)?;
        let rho_hat = self.rho_fourier(n).as_f64();
        Ok(T::lit(
            self.phi_fourier_f64(q, s, n) - self.phi_mass[i] / self.rho_mass * rho_hat,
        ))
    }

    /// `F_{Q,s}(α, θ) = F(α, θ)·Ψ_{Q,s}(α)`.
    pub fn piece_f_qs(
        &self,
        form: &QuadraticForm,
        weight: &SmoothWeight<T>,
        q: u64,
        s: u32,
        alpha: f64,
        theta: &[f64],
    ) -> Result<Complex<T>> {
        let psi = self.psi_qs(q, s, alpha)?;
        Ok(smoothed_sum_direct(form, weight, alpha, theta)? * psi)
    }

    /// Multiplier `F_𝔪/F = ρ/∫ρ`.
    pub fn minor_multiplier(&self, alpha: f64) -> T {
        T::lit((1.0 - self.lambda_f64(alpha)) / self.rho_mass)
    }

    /// Multiplier `F_𝔐/F = Σ_{Q,s} Ψ_{Q,s} = λ - ((1 - ∫ρ)/∫ρ)·ρ`.
    pub fn major_multiplier(&self, alpha: f64) -> T {
        let l = self.lambda_f64(alpha);
        T::lit(l - (1.0 - self.rho_mass) / self.rho_mass * (1.0 - l))
    }

    /// `Σ_{(Q,s) ∈ set} Ψ_{Q,s}(α)`.
    pub fn multiplier_over(&self, set: &[(u64, u32)], alpha: f64) -> Result<T> {
        let mut acc = T::zero();
        for &(q, s) in set {
            acc += self.psi_qs(q, s, alpha)?;
        }
        Ok(acc)
    }

    /// `ψ̂_N(m, ℓ)·ω(ℓ)·Ψ̂_{Q,s}(m - R(ℓ))`, the Fourier coefficient of `F_{Q,s}`
    /// with the frequency window applied.
    pub fn piece_fourier_coeff(
        &self,
        form: &QuadraticForm,
        weight: &SmoothWeight<T>,
        q: u64,
        s: u32,
        m: i64,
        l: &[i64],
    ) -> Result<Complex<T>> {
        if l.len() != form.dim() {
            return Err(Error::DimensionMismatch {
                expected: form.dim(),
                got: l.len(),
            });
        }
        let w = weight.value(l);
        if w == T::zero() {
            self.check_piece(q, s)?;
            return Ok(Complex::new(T::zero(), T::zero()));
        }
        let r = form.evaluate(l)?;
        let window = frequency_window(form, self.n, m, l);
        let psi = self.psi_fourier(q, s, m - r)?;
        Ok(Complex::new(T::lit(window) * w * psi, T::zero()))
    }

    /// Splits the pieces at `Q₁` into `Q ≤ Q₁` and `Q₁ < Q ≤ N₁`.
    pub fn split_f1_f2(&self, q1: u64) -> Result<PieceSplit> {
        if q1 == 0 || q1 > self.n1 {
            return Err(Error::InvalidParameter(format!(
                "Q1={q1} must satisfy 1 <= Q1 <= N1={}",
                self.n1
            )));
        }
        let (first, second) = self.pieces.iter().partition(|&&(q, _)| q <= q1);
        Ok(PieceSplit { q1, first, second })
    }

    /// Major arc test `|α - a/q| ≤ c₁/(qN)` over `q ≤ N₁`. By Legendre's
    /// criterion such an `a/q` is a Farey neighbour of `α` of order `N₁`.
    pub fn classify_arc(&self, alpha: f64) -> ArcLabel {
        if self.n1 == 0 {
            return ArcLabel::Minor;
        }
        let (lo, hi) = farey_neighbours(alpha, self.n1);
        let c1 = self.c1();
        for f in [lo, hi] {
            let beta = f.offset(alpha);
            if beta.abs() <= c1 / (f.den as f64 * self.n as f64) {
                return ArcLabel::Major {
                    a: f.num,
                    q: f.den,
                    big_q: dyadic_floor(f.den),
                    beta,
                };
            }
        }
        ArcLabel::Minor
    }

    fn check_disjoint(&self) -> Result<Disjointness> {
        if self.n1 == 0 {
            return Ok(Disjointness::Empty);
        }
        let q_max = dyadic_floor(self.n1);
        if 16 * q_max <= self.n {
            return Ok(Disjointness::Analytic);
        }
        if self.n1 > ENUMERATION_LIMIT {
            return Err(Error::ArcOverlap(format!(
                "cannot certify disjointness for N={} with N1={} (16*Q_max > N)",
                self.n, self.n1
            )));
        }
        let order = 2 * q_max - 1;
        let farey = farey_sequence(order);
        let n = self.n as u128;
        let overlaps = |a: (i64, u64), b: (i64, u64)| -> bool {
            // gap = (b.0*a.1 - a.0*b.1)/(a.1*b.1); radii 2/(Q_a N) + 2/(Q_b N).
            let (qa, qb) = (dyadic_floor(a.1) as u128, dyadic_floor(b.1) as u128);
            let det = (b.0 as i128 * a.1 as i128 - a.0 as i128 * b.1 as i128) as u128;
            det * qa * qb * n < 2 * (a.1 as u128) * (b.1 as u128) * (qa + qb)
        };
        let mut pairs: Vec<((i64, u64), (i64, u64))> =
            farey.windows(2).map(|w| (w[0], w[1])).collect();
        // Wrap around the circle: last fraction 1/1 against 1 + first.
        let first = farey[0];
        pairs.push((*farey.last().unwrap(), (first.0 + first.1 as i64, first.1)));
        for (a, b) in pairs {
            if overlaps(a, b) {
                return Err(Error::ArcOverlap(format!(
                    "supports of {}/{} and {}/{} overlap (N={}, c1={}/{})",
                    a.0, a.1, b.0, b.1, self.n, self.c1_num, self.c1_den
                )));
            }
        }
        Ok(Disjointness::Enumerated {
            fractions: farey.len(),
        })
    }
}

/// Reduced fractions in `(0, 1]` with denominator `≤ k`, increasing.
pub fn farey_sequence(k: u64) -> Vec<(i64, u64)> {
    let (mut a, mut b, mut c, mut d) = (0i64, 1u64, 1i64, k);
    let mut out = Vec::new();
    while c <= d as i64 {
        out.push((c, d));
        let t = (k + b) / d;
        let (na, nb) = (c, d);
        c = t as i64 * c - a;
        d = t * d - b;
        a = na;
        b = nb;
        if a == 1 && b == 1 {
            break;
        }
    }
    out
}

/// De la Vallée Poussin trapezoid: 1 on `|x| ≤ B`, 0 beyond `2B`.
pub fn trapezoid(x: f64, b: f64) -> f64 {
    let ax = x.abs();
    if ax <= b {
        1.0
    } else if ax >= 2.0 * b {
        0.0
    } else {
        2.0 - ax / b
    }
}

/// `ψ̂_N(m, ℓ)`: trapezoids with core `|m| ≤ R_max` and `|ℓ_i| ≤ 2N`.
pub fn frequency_window(form: &QuadraticForm, n: u64, m: i64, l: &[i64]) -> f64 {
    let r_max = form.frequency_bound(n) as f64;
    l.iter()
        .fold(trapezoid(m as f64, r_max), |acc, &x| acc * trapezoid(x as f64, 2.0 * n as f64))
}

/// Index sets of the `F₁ + F₂` split.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PieceSplit {
    pub q1: u64,
    pub first: Vec<(u64, u32)>,
    pub second: Vec<(u64, u32)>,
}

/// Right-hand side `(Q/(2^sN))·d(n, 2Q)` of the pointwise Fourier bound.
pub fn phi_fourier_bound(n_param: u64, q: u64, s: u32, n: i64) -> f64 {
    q as f64 / ((1u64 << s) as f64 * n_param as f64) * truncated_divisor(n, 2 * q) as f64
}
