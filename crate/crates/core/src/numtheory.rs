//! Arithmetic helpers: Möbius, totient, Ramanujan sums, truncated divisor
//! counts and Farey-neighbour search.

use num_bigint::BigUint;
use num_integer::Integer;
use num_traits::ToPrimitive;

/// Möbius function.
pub fn mobius(mut n: u64) -> i64 {
    assert!(n >= 1, "mobius is defined for n >= 1");
    let mut sign = 1;
    let mut p = 2;
    while p * p <= n {
        if n.is_multiple_of(p) {
            n /= p;
            if n.is_multiple_of(p) {
                return 0;
            }
            sign = -sign;
        }
        p += 1;
    }
    if n > 1 {
        sign = -sign;
    }
    sign
}

/// Euler's totient.
pub fn totient(mut n: u64) -> u64 {
    assert!(n >= 1, "totient is defined for n >= 1");
    let mut out = n;
    let mut p = 2;
    while p * p <= n {
        if n.is_multiple_of(p) {
            while n.is_multiple_of(p) {
                n /= p;
            }
            out -= out / p;
        }
        p += 1;
    }
    if n > 1 {
        out -= out / n;
    }
    out
}

/// `c_q(n) = Σ_{d | (n, q)} d·μ(q/d)`, with `(0, q) = q`.
pub fn ramanujan_sum(q: u64, n: i64) -> i64 {
    assert!(q >= 1, "ramanujan_sum needs q >= 1");
    let g = if n == 0 { q } else { n.unsigned_abs().gcd(&q) };
    let mut total = 0i64;
    let mut d = 1;
    while d * d <= g {
        if g % d == 0 {
            total += d as i64 * mobius(q / d);
            let e = g / d;
            if e != d {
                total += e as i64 * mobius(q / e);
            }
        }
        d += 1;
    }
    total
}

/// `d(n, Q) = #{1 ≤ t ≤ Q : t | n}`; every `t` divides 0.
pub fn truncated_divisor(n: i64, q: u64) -> u64 {
    if n == 0 {
        return q;
    }
    let m = n.unsigned_abs();
    let mut count = 0;
    let mut t = 1;
    while t * t <= m {
        if m.is_multiple_of(t) {
            if t <= q {
                count += 1;
            }
            let u = m / t;
            if u != t && u <= q {
                count += 1;
            }
        }
        t += 1;
    }
    count
}

/// `Σ_{|ℓ| ≤ X} d(ℓ, Q)^B`, exact.
pub fn divisor_moment(x: u64, q: u64, b: u32) -> BigUint {
    let len = x as usize + 1;
    let mut cnt = vec![0u64; len];
    for t in 1..=q.min(x) {
        let mut m = t;
        while m <= x {
            cnt[m as usize] += 1;
            m += t;
        }
    }
    let fast = (|| {
        let mut acc = (q as u128).checked_pow(b)?;
        for &c in &cnt[1..] {
            acc = acc.checked_add((c as u128).checked_pow(b)?.checked_mul(2)?)?;
        }
        Some(acc)
    })();
    if let Some(v) = fast {
        return BigUint::from(v);
    }
    let mut acc = BigUint::from(q).pow(b);
    for &c in &cnt[1..] {
        acc += BigUint::from(c).pow(b) * 2u32;
    }
    acc
}

/// Lossy conversion used for diagnostics.
pub fn biguint_to_f64(v: &BigUint) -> f64 {
    v.to_f64().unwrap_or(f64::INFINITY)
}

/// Reduced fraction `num/den` with `den ≥ 1`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Fraction {
    pub num: i64,
    pub den: u64,
}

impl Fraction {
    pub fn new(num: i64, den: u64) -> Self {
        assert!(den >= 1);
        let g = num.unsigned_abs().gcd(&den);
        let g = if g == 0 { 1 } else { g };
        Self {
            num: num / g as i64,
            den: den / g,
        }
    }

    pub fn value(self) -> f64 {
        self.num as f64 / self.den as f64
    }

    /// Signed distance `x - num/den`.
    pub fn offset(self, x: f64) -> f64 {
        // Subtract the integer part first to keep the difference accurate.
        let whole = Integer::div_floor(&self.num, &(self.den as i64));
        let rem = self.num - whole * self.den as i64;
        (x - whole as f64) - rem as f64 / self.den as f64
    }
}

/// Consecutive Farey fractions `lo ≤ x ≤ hi` with denominators `≤ k`.
///
/// Stern–Brocot descent with runs collapsed, so the cost is the number of
/// partial quotients of `x` that fit below `k`.
pub fn farey_neighbours(x: f64, k: u64) -> (Fraction, Fraction) {
    assert!(k >= 1 && x.is_finite());
    let base = x.floor();
    let y = x - base;
    let base = base as i64;
    let (mut la, mut lq, mut ha, mut hq) = (0i64, 1u64, 1i64, 1u64);
    let le = |a: i64, q: u64| (a as f64) <= y * q as f64;
    loop {
        let mq = lq + hq;
        if mq > k {
            break;
        }
        let ma = la + ha;
        if le(ma, mq) {
            let cap = (k - lq) / hq;
            let den = ha as f64 - y * hq as f64;
            let guess = ((y * lq as f64 - la as f64) / den).floor();
            let mut t = if guess.is_finite() && guess >= 1.0 {
                (guess as u64).min(cap)
            } else {
                1
            };
            while t > 1 && !le(la + t as i64 * ha, lq + t * hq) {
                t -= 1;
            }
            while t < cap && le(la + (t + 1) as i64 * ha, lq + (t + 1) * hq) {
                t += 1;
            }
            la += t as i64 * ha;
            lq += t * hq;
        } else {
            let cap = (k - hq) / lq;
            let den = y * lq as f64 - la as f64;
            let guess = if den > 0.0 {
                ((ha as f64 - y * hq as f64) / den).ceil() - 1.0
            } else {
                f64::INFINITY
            };
            let mut t = if guess.is_finite() && guess >= 1.0 {
                (guess as u64).min(cap)
            } else if guess.is_finite() {
                1
            } else {
                cap
            };
            while t > 1 && le(ha + t as i64 * la, hq + t * lq) {
                t -= 1;
            }
            while t < cap && !le(ha + (t + 1) as i64 * la, hq + (t + 1) * lq) {
                t += 1;
            }
            ha += t as i64 * la;
            hq += t * lq;
        }
    }
    (
        Fraction::new(la + base * lq as i64, lq),
        Fraction::new(ha + base * hq as i64, hq),
    )
}

/// Closest fraction to `x` with denominator `≤ q_max`; ties go to the
/// smaller denominator. Returns the fraction and `|x - a/q|`.
pub fn rational_approximation(x: f64, q_max: u64) -> (Fraction, f64) {
    let (lo, hi) = farey_neighbours(x, q_max);
    let (el, eh) = (lo.offset(x).abs(), hi.offset(x).abs());
    if el < eh || (el == eh && lo.den <= hi.den) {
        (lo, el)
    } else {
        (hi, eh)
    }
}

/// Largest power of two not exceeding `q`.
pub fn dyadic_floor(q: u64) -> u64 {
    assert!(q >= 1);
    1 << (63 - q.leading_zeros())
}

pub fn is_power_of_two(q: u64) -> bool {
    q.is_power_of_two()
}

/// Reduced fractions `a/q` with `q ∈ [q_lo, q_hi)` and `a ∈ [1, q]`.
pub fn reduced_fractions(q_lo: u64, q_hi: u64) -> Vec<Fraction> {
    let mut out = Vec::new();
    for q in q_lo.max(1)..q_hi {
        for a in 1..=q {
            if a.gcd(&q) == 1 {
                out.push(Fraction { num: a as i64, den: q });
            }
        }
    }
    out
}
