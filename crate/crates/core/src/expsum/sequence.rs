//! Coefficient sequences on the box `[-N, N]^d`.

use std::fs;
use std::io::{BufRead, BufReader, Read, Write};
use std::path::Path;

use num_complex::Complex;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};
use crate::scalar::{BoxIter, Real};

/// Complex coefficients `a(n)` for `n ∈ [-N, N]^d`, stored row-major with
/// the last coordinate fastest.
#[derive(Debug, Clone, PartialEq)]
pub struct CoefficientSequence<T: Real> {
    dim: usize,
    radius: i64,
    values: Vec<Complex<T>>,
}

impl<T: Real> CoefficientSequence<T> {
    pub fn new(dim: usize, radius: u64, values: Vec<Complex<T>>) -> Result<Self> {
        if dim == 0 {
            return Err(Error::InvalidParameter("dimension must be positive".into()));
        }
        let expected = box_len(dim, radius)?;
        if values.len() != expected {
            return Err(Error::DimensionMismatch {
                expected,
                got: values.len(),
            });
        }
        Ok(Self {
            dim,
            radius: radius as i64,
            values,
        })
    }

    pub fn zeros(dim: usize, radius: u64) -> Result<Self> {
        let len = box_len(dim, radius)?;
        Self::new(dim, radius, vec![Complex::new(T::zero(), T::zero()); len])
    }

    /// Fills the box from `f(n)`.
    pub fn from_fn<F: FnMut(&[i64]) -> Complex<T>>(dim: usize, radius: u64, mut f: F) -> Result<Self> {
        box_len(dim, radius)?;
        let values = BoxIter::new(dim, radius as i64).map(|n| f(&n)).collect();
        Self::new(dim, radius, values)
    }

    /// `a ≡ 1` on the box.
    pub fn ones(dim: usize, radius: u64) -> Result<Self> {
        Self::from_fn(dim, radius, |_| Complex::new(T::one(), T::zero()))
    }

    /// `a = δ₀`.
    pub fn delta(dim: usize, radius: u64) -> Result<Self> {
        Self::from_fn(dim, radius, |n| {
            let v = if n.iter().all(|&x| x == 0) { T::one() } else { T::zero() };
            Complex::new(v, T::zero())
        })
    }

    /// Indicator of the diagonal `{(x, x) : x ∈ [1, N]^s}` in dimension `2s`.
    pub fn diagonal_extremizer(s: usize, radius: u64) -> Result<Self> {
        if s == 0 {
            return Err(Error::InvalidParameter("extremizer needs s >= 1".into()));
        }
        Self::from_fn(2 * s, radius, |n| {
            let (x, y) = n.split_at(s);
            let hit = x == y && x.iter().all(|&v| v >= 1);
            Complex::new(if hit { T::one() } else { T::zero() }, T::zero())
        })
    }

    /// I.i.d. complex Gaussian coefficients scaled to unit `ℓ²` norm.
    pub fn random_unit(dim: usize, radius: u64, seed: u64) -> Result<Self> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let seq = Self::from_fn(dim, radius, |_| {
            let re: f64 = rng.sample(StandardNormal);
            let im: f64 = rng.sample(StandardNormal);
            Complex::new(T::lit(re), T::lit(im))
        })?;
        Ok(seq.normalized())
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// The box radius `N`.
    pub fn radius(&self) -> u64 {
        self.radius as u64
    }

    /// Side length `2N + 1`.
    pub fn width(&self) -> usize {
        2 * self.radius as usize + 1
    }

    pub fn values(&self) -> &[Complex<T>] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [Complex<T>] {
        &mut self.values
    }

    /// Lattice points in storage order.
    pub fn points(&self) -> impl Iterator<Item = Vec<i64>> {
        BoxIter::new(self.dim, self.radius)
    }

    fn offset_of(&self, n: &[i64]) -> Option<usize> {
        if n.len() != self.dim || n.iter().any(|&x| x.abs() > self.radius) {
            return None;
        }
        let w = self.width();
        Some(n.iter().fold(0, |acc, &x| acc * w + (x + self.radius) as usize))
    }

    /// `a(n)`, zero outside the box.
    pub fn get(&self, n: &[i64]) -> Complex<T> {
        self.offset_of(n)
            .map(|i| self.values[i])
            .unwrap_or_else(|| Complex::new(T::zero(), T::zero()))
    }

    pub fn set(&mut self, n: &[i64], v: Complex<T>) -> Result<()> {
        let i = self.offset_of(n).ok_or_else(|| {
            Error::InvalidParameter(format!("{n:?} outside [-{r},{r}]^{}", self.dim, r = self.radius))
        })?;
        self.values[i] = v;
        Ok(())
    }

    pub fn norm_sq(&self) -> T {
        let terms: Vec<T> = self.values.iter().map(|v| v.norm_sqr()).collect();
        crate::scalar::pairwise_sum_real(&terms)
    }

    /// `‖a‖₂`.
    pub fn norm(&self) -> T {
        self.norm_sq().sqrt()
    }

    /// Scales to unit norm; the zero sequence is returned unchanged.
    pub fn normalized(mut self) -> Self {
        let n = self.norm();
        if n > T::zero() {
            for v in &mut self.values {
                *v /= n;
            }
        }
        self
    }

    pub fn scaled(mut self, c: T) -> Self {
        for v in &mut self.values {
            *v *= c;
        }
        self
    }

    /// Number of nonzero coefficients.
    pub fn support_size(&self) -> usize {
        self.values.iter().filter(|v| v.norm_sqr() > T::zero()).count()
    }

    /// True when every coefficient is 0 or 1.
    pub fn is_indicator(&self) -> bool {
        self.values
            .iter()
            .all(|v| v.im == T::zero() && (v.re == T::zero() || v.re == T::one()))
    }

    pub fn cast<U: Real>(&self) -> CoefficientSequence<U> {
        CoefficientSequence {
            dim: self.dim,
            radius: self.radius,
            values: self
                .values
                .iter()
                .map(|v| Complex::new(U::lit(v.re.as_f64()), U::lit(v.im.as_f64())))
                .collect(),
        }
    }

    /// Text format: a header line `d N`, then one `re im` line per lattice
    /// point in storage order. Lines starting with `#` are ignored.
    pub fn write_text<W: Write>(&self, mut out: W) -> Result<()> {
        writeln!(out, "{} {}", self.dim, self.radius)?;
        for v in &self.values {
            writeln!(out, "{:.17e} {:.17e}", v.re.as_f64(), v.im.as_f64())?;
        }
        Ok(())
    }

    pub fn read_text<R: Read>(input: R) -> Result<Self> {
        let mut lines = BufReader::new(input)
            .lines()
            .enumerate()
            .filter(|(_, l)| l.as_ref().map_or(true, |s| !s.trim().is_empty() && !s.trim_start().starts_with('#')));
        let (_, header) = lines.next().ok_or_else(|| Error::Parse("empty coefficient file".into()))?;
        let header = header?;
        let mut it = header.split_whitespace();
        let parse_u = |t: Option<&str>, what: &str| -> Result<u64> {
            t.ok_or_else(|| Error::Parse(format!("header missing {what}")))?
                .parse::<u64>()
                .map_err(|e| Error::Parse(format!("header {what}: {e}")))
        };
        let dim = parse_u(it.next(), "d")? as usize;
        let radius = parse_u(it.next(), "N")?;
        let len = box_len(dim, radius)?;
        let mut values = Vec::with_capacity(len);
        for (lineno, line) in lines {
            let line = line?;
            let mut parts = line.split_whitespace();
            let mut num = |what: &str| -> Result<f64> {
                parts
                    .next()
                    .ok_or_else(|| Error::Parse(format!("line {}: missing {what}", lineno + 1)))?
                    .parse::<f64>()
                    .map_err(|e| Error::Parse(format!("line {}: {e}", lineno + 1)))
            };
            let re = num("real part")?;
            let im = num("imaginary part")?;
            values.push(Complex::new(T::lit(re), T::lit(im)));
        }
        Self::new(dim, radius, values)
    }

    /// Binary format: `u32` LE `d`, `u32` LE `N`, then `f64` LE `(re, im)`
    /// pairs in storage order.
    pub fn write_binary<W: Write>(&self, mut out: W) -> Result<()> {
        out.write_all(&(self.dim as u32).to_le_bytes())?;
        out.write_all(&(self.radius as u32).to_le_bytes())?;
        for v in &self.values {
            out.write_all(&v.re.as_f64().to_le_bytes())?;
            out.write_all(&v.im.as_f64().to_le_bytes())?;
        }
        Ok(())
    }

    pub fn read_binary<R: Read>(mut input: R) -> Result<Self> {
        let mut word = [0u8; 4];
        input.read_exact(&mut word)?;
        let dim = u32::from_le_bytes(word) as usize;
        input.read_exact(&mut word)?;
        let radius = u32::from_le_bytes(word) as u64;
        let len = box_len(dim, radius)?;
        let mut buf = vec![0u8; len * 16];
        input.read_exact(&mut buf)?;
        let mut rest = Vec::new();
        input.read_to_end(&mut rest)?;
        if !rest.is_empty() {
            return Err(Error::Parse(format!("{} trailing bytes", rest.len())));
        }
        let values = buf
            .chunks_exact(16)
            .map(|c| {
                let re = f64::from_le_bytes(c[..8].try_into().unwrap());
                let im = f64::from_le_bytes(c[8..].try_into().unwrap());
                Complex::new(T::lit(re), T::lit(im))
            })
            .collect();
        Self::new(dim, radius, values)
    }

    /// Reads a file, choosing the binary reader for a `.bin` extension.
    pub fn load(path: &Path) -> Result<Self> {
        let file = fs::File::open(path).map_err(|e| Error::Io(format!("{}: {e}", path.display())))?;
        if path.extension().is_some_and(|e| e == "bin") {
            Self::read_binary(file)
        } else {
            Self::read_text(file)
        }
    }
}

/// Named sequence generators.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum SequenceFamily {
    Ones,
    Delta,
    /// Diagonal indicator; `None` takes `s = d/2`.
    DiagonalExtremizer(Option<usize>),
    RandomUnit(u64),
    File(String),
}

impl SequenceFamily {
    /// Accepts `ones`, `delta`, `extremizer`, `diagonal-extremizer`,
    /// `diagonal-extremizer(s)`, `random-unit(seed)` and `file:path`.
    pub fn parse(spec: &str) -> Result<Self> {
        let spec = spec.trim();
        if let Some(path) = spec.strip_prefix("file:") {
            return Ok(Self::File(path.to_string()));
        }
        let (name, arg) = match spec.split_once('(') {
            Some((name, rest)) => {
                let arg = rest
                    .strip_suffix(')')
                    .ok_or_else(|| Error::Parse(format!("family `{spec}`: missing `)`")))?;
                (name.trim(), Some(arg.trim()))
            }
            None => (spec, None),
        };
        let int = |a: &str| {
            a.parse::<u64>()
                .map_err(|e| Error::Parse(format!("family `{spec}`: {e}")))
        };
        match (name, arg) {
            ("ones", None) => Ok(Self::Ones),
            ("delta", None) => Ok(Self::Delta),
            ("extremizer" | "diagonal-extremizer", None) => Ok(Self::DiagonalExtremizer(None)),
            ("extremizer" | "diagonal-extremizer", Some(a)) => {
                Ok(Self::DiagonalExtremizer(Some(int(a)? as usize)))
            }
            ("random-unit", Some(a)) => Ok(Self::RandomUnit(int(a)?)),
            ("random-unit", None) => Ok(Self::RandomUnit(0)),
            _ => Err(Error::Parse(format!("unknown sequence family `{spec}`"))),
        }
    }

    /// Builds the raw (unnormalized) sequence; `random-unit` is unit norm.
    pub fn build<T: Real>(&self, dim: usize, radius: u64) -> Result<CoefficientSequence<T>> {
        match self {
            Self::Ones => CoefficientSequence::ones(dim, radius),
            Self::Delta => CoefficientSequence::delta(dim, radius),
            Self::DiagonalExtremizer(s) => {
                let s = s.unwrap_or(dim / 2);
                if 2 * s != dim {
                    return Err(Error::InvalidParameter(format!(
                        "diagonal extremizer with s={s} needs d=2s, got d={dim}"
                    )));
                }
                CoefficientSequence::diagonal_extremizer(s, radius)
            }
            Self::RandomUnit(seed) => CoefficientSequence::random_unit(dim, radius, *seed),
            Self::File(path) => {
                let seq = CoefficientSequence::load(Path::new(path))?;
                if seq.dim() != dim {
                    return Err(Error::DimensionMismatch {
                        expected: dim,
                        got: seq.dim(),
                    });
                }
                Ok(seq)
            }
        }
    }

    pub fn name(&self) -> String {
        match self {
            Self::Ones => "ones".into(),
            Self::Delta => "delta".into(),
            Self::DiagonalExtremizer(None) => "diagonal-extremizer".into(),
            Self::DiagonalExtremizer(Some(s)) => format!("diagonal-extremizer({s})"),
            Self::RandomUnit(seed) => format!("random-unit({seed})"),
            Self::File(p) => format!("file:{p}"),
        }
    }
}

fn box_len(dim: usize, radius: u64) -> Result<usize> {
    let w = 2 * radius as usize + 1;
    let mut len = 1usize;
    for _ in 0..dim {
        len = len
            .checked_mul(w)
            .filter(|&l| l <= 1 << 32)
            .ok_or_else(|| Error::BudgetExceeded(format!("box [-{radius},{radius}]^{dim} is too large")))?;
    }
    Ok(len)
}

#[cfg(test)]
mod tests {
    use super::*;

    type Seq = CoefficientSequence<f64>;

    #[test]
    fn indexing_and_norms() {
        let a = Seq::ones(2, 3).unwrap();
        assert_eq!(a.values().len(), 49);
        assert!((a.norm_sq() - 49.0).abs() < 1e-12);
        assert_eq!(a.get(&[4, 0]), Complex::new(0.0, 0.0));
        let d = Seq::delta(3, 2).unwrap();
        assert_eq!(d.support_size(), 1);
        assert_eq!(d.get(&[0, 0, 0]).re, 1.0);
        let pts: Vec<_> = Seq::zeros(2, 1).unwrap().points().take(2).collect();
        assert_eq!(pts, vec![vec![-1, -1], vec![-1, 0]]);
    }

    #[test]
    fn extremizer_support() {
        let a = Seq::diagonal_extremizer(1, 3).unwrap();
        assert_eq!(a.support_size(), 3);
        for x in 1..=3 {
            assert_eq!(a.get(&[x, x]).re, 1.0);
        }
        assert_eq!(a.get(&[0, 0]).re, 0.0);
        assert!(a.is_indicator());
        assert!((a.norm() - 3f64.sqrt()).abs() < 1e-12);
    }

    #[test]
    fn random_unit_is_normalized_and_seeded() {
        let a = Seq::random_unit(2, 4, 7).unwrap();
        let b = Seq::random_unit(2, 4, 7).unwrap();
        assert_eq!(a, b);
        assert!((a.norm() - 1.0).abs() < 1e-12);
        assert_ne!(a, Seq::random_unit(2, 4, 8).unwrap());
    }

    #[test]
    fn text_and_binary_round_trip() {
        let a = Seq::random_unit(2, 2, 3).unwrap();
        let mut txt = Vec::new();
        a.write_text(&mut txt).unwrap();
        assert_eq!(Seq::read_text(txt.as_slice()).unwrap(), a);
        let mut bin = Vec::new();
        a.write_binary(&mut bin).unwrap();
        assert_eq!(bin.len(), 8 + 25 * 16);
        assert_eq!(Seq::read_binary(bin.as_slice()).unwrap(), a);
    }

    #[test]
    fn text_reader_rejects_short_input() {
        let err = Seq::read_text("1 1\n1 0\n0 0\n".as_bytes()).unwrap_err();
        assert!(matches!(err, Error::DimensionMismatch { expected: 3, got: 2 }));
        assert!(Seq::read_text("1 1\n1 0\nx 0\n0 0\n".as_bytes()).is_err());
    }

    #[test]
    fn family_parsing() {
        assert_eq!(SequenceFamily::parse("ones").unwrap(), SequenceFamily::Ones);
        assert_eq!(
            SequenceFamily::parse("diagonal-extremizer(2)").unwrap(),
            SequenceFamily::DiagonalExtremizer(Some(2))
        );
        assert_eq!(
            SequenceFamily::parse("random-unit(42)").unwrap(),
            SequenceFamily::RandomUnit(42)
        );
        assert!(SequenceFamily::parse("zeros").is_err());
        assert!(SequenceFamily::DiagonalExtremizer(None).build::<f64>(3, 2).is_err());
    }
}
