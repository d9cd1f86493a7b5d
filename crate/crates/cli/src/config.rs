//! Run configuration: defaults, then a `key = value` file, then flags.
//!
//! File syntax: one `key = value` per line, `#` starts a comment, and a
//! `[section]` line prefixes later keys with `section.`. Unknown keys are
//! rejected with their line number.

use std::fmt;
use std::path::{Path, PathBuf};

use quadsurf::expsum::SequenceFamily;
use quadsurf::scaling::{GridPolicy, Quantity};
use quadsurf::QuadraticForm;

/// Where a value came from, for error messages.
#[derive(Debug, Clone)]
pub enum Origin {
    Line { file: PathBuf, line: usize },
    Flag(&'static str),
}

impl fmt::Display for Origin {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Origin::Line { file, line } => write!(f, "{}:{line}", file.display()),
            Origin::Flag(name) => write!(f, "flag --{name}"),
        }
    }
}

#[derive(Debug)]
pub struct ConfigError(pub String);

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for ConfigError {}

/// Keys accepted in config files, with the flag that sets each one.
pub const KEYS: &[(&str, &str)] = &[
    ("form", "form"),
    ("family", "family"),
    ("seed", "seed"),
    ("N", "N"),
    ("N_list", "N-list"),
    ("p", "p"),
    ("C", "C"),
    ("c1", "c1"),
    ("normalize", "normalize"),
    ("grid.policy", "grid"),
    ("grid.max_cells", "max-cells"),
    ("offsets", "offsets"),
    ("levels", "levels"),
    ("q", "q"),
    ("Q", "Q"),
    ("q_max", "q-max"),
    ("samples", "samples"),
    ("m_cut", "m-cut"),
    ("quantity", "quantity"),
    ("oracle", "oracle"),
    ("tolerance.slope", "tol-slope"),
    ("tolerance.oracle", "tol-oracle"),
    ("tolerance.identity", "tol-identity"),
    ("tolerance.approx", "tol-approx"),
    ("out.json", "out"),
    ("out.csv", "csv"),
];

#[derive(Debug, Clone)]
pub struct RunConfig {
    pub form: QuadraticForm,
    pub family: SequenceFamily,
    pub seed: u64,
    pub n: u64,
    pub n_list: Vec<u64>,
    pub p: f64,
    /// Truncation constants; single-valued commands use the first.
    pub c: Vec<f64>,
    pub c1: (u64, u64),
    pub normalize: bool,
    pub grid: GridPolicy,
    pub offsets: usize,
    /// Level heights as multiples of `N^{d/4}·‖a‖₂`.
    pub levels: Vec<f64>,
    /// Level-set exponent.
    pub q: f64,
    /// Restricts `mollifier-check` to one dyadic `Q`.
    pub big_q: Option<u64>,
    pub q_max: u64,
    /// Sample count; each command has its own default.
    pub samples: Option<usize>,
    pub m_cut: u32,
    pub quantity: Quantity,
    pub oracle: bool,
    pub tol_slope: f64,
    pub tol_oracle: f64,
    pub tol_identity: f64,
    pub tol_approx: f64,
    pub out_json: Option<PathBuf>,
    pub out_csv: Option<PathBuf>,
    seed_set: bool,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            form: QuadraticForm::diagonal(&[1, -1]).expect("valid default form"),
            family: SequenceFamily::Ones,
            seed: 0,
            n: 8,
            n_list: vec![8, 16, 32],
            p: 4.0,
            c: vec![1.0],
            c1: (1, 16),
            normalize: false,
            grid: GridPolicy::Nyquist,
            offsets: 1,
            levels: vec![0.5, 1.0, 1.5, 2.0],
            q: 4.5,
            big_q: None,
            q_max: 4,
            samples: None,
            m_cut: 3,
            quantity: Quantity::Full,
            oracle: true,
            tol_slope: 0.75,
            tol_oracle: 1e-6,
            tol_identity: 1e-12,
            tol_approx: 0.05,
            out_json: None,
            out_csv: None,
            seed_set: false,
        }
    }
}

fn parse_list<T: std::str::FromStr>(v: &str) -> Result<Vec<T>, String>
where
    T::Err: fmt::Display,
{
    v.split(',')
        .map(|x| x.trim().parse::<T>().map_err(|e| format!("`{}`: {e}", x.trim())))
        .collect()
}

fn parse_one<T: std::str::FromStr>(v: &str) -> Result<T, String>
where
    T::Err: fmt::Display,
{
    v.trim().parse::<T>().map_err(|e| format!("`{}`: {e}", v.trim()))
}

fn parse_bool(v: &str) -> Result<bool, String> {
    match v.trim() {
        "true" | "yes" | "1" => Ok(true),
        "false" | "no" | "0" => Ok(false),
        other => Err(format!("`{other}` is not a boolean")),
    }
}

/// `a/b`, an integer, or a terminating decimal.
fn parse_ratio(v: &str) -> Result<(u64, u64), String> {
    let v = v.trim();
    if let Some((a, b)) = v.split_once('/') {
        return Ok((parse_one(a)?, parse_one(b)?));
    }
    if let Ok(k) = v.parse::<u64>() {
        return Ok((k, 1));
    }
    let x: f64 = parse_one(v)?;
    // Decimal input: scale by a power of ten until integral.
    let mut den = 1u64;
    while (x * den as f64).fract() != 0.0 && den < 1_000_000_000 {
        den *= 10;
    }
    Ok(((x * den as f64).round() as u64, den))
}

impl RunConfig {
    /// Applies one `key = value` pair.
    pub fn set(&mut self, key: &str, value: &str, origin: &Origin) -> Result<(), ConfigError> {
        let fail = |msg: String| ConfigError(format!("{origin}: {key}: {msg}"));
        let r: Result<(), String> = (|| {
            match key {
                "form" => self.form = QuadraticForm::parse(value).map_err(|e| e.to_string())?,
                "family" => self.family = SequenceFamily::parse(value).map_err(|e| e.to_string())?,
                "seed" => {
                    self.seed = parse_one(value)?;
                    self.seed_set = true;
                }
                "N" => self.n = parse_one(value)?,
                "N_list" => self.n_list = parse_list(value)?,
                "p" => self.p = parse_one(value)?,
                "C" => self.c = parse_list(value)?,
                "c1" => self.c1 = parse_ratio(value)?,
                "normalize" => self.normalize = parse_bool(value)?,
                "grid.policy" => {
                    self.grid = match value.trim() {
                        "nyquist" => GridPolicy::Nyquist,
                        "budgeted" => GridPolicy::Budgeted {
                            max_cells: match self.grid {
                                GridPolicy::Budgeted { max_cells } => max_cells,
                                GridPolicy::Nyquist => 1 << 24,
                            },
                        },
                        other => return Err(format!("unknown grid policy `{other}` (nyquist | budgeted)")),
                    }
                }
                "grid.max_cells" => {
                    self.grid = GridPolicy::Budgeted {
                        max_cells: parse_one(value)?,
                    }
                }
                "offsets" => self.offsets = parse_one(value)?,
                "levels" => self.levels = parse_list(value)?,
                "q" => self.q = parse_one(value)?,
                "Q" => self.big_q = Some(parse_one(value)?),
                "q_max" => self.q_max = parse_one(value)?,
                "samples" => self.samples = Some(parse_one(value)?),
                "m_cut" => self.m_cut = parse_one(value)?,
                "quantity" => {
                    self.quantity = match value.trim() {
                        "full" => Quantity::Full,
                        "truncated" => Quantity::Truncated,
                        other => return Err(format!("unknown quantity `{other}` (full | truncated)")),
                    }
                }
                "oracle" => self.oracle = parse_bool(value)?,
                "tolerance.slope" => self.tol_slope = parse_one(value)?,
                "tolerance.oracle" => self.tol_oracle = parse_one(value)?,
                "tolerance.identity" => self.tol_identity = parse_one(value)?,
                "tolerance.approx" => self.tol_approx = parse_one(value)?,
                "out.json" => self.out_json = Some(PathBuf::from(value.trim())),
                "out.csv" => self.out_csv = Some(PathBuf::from(value.trim())),
                _ => return Err("unknown key".into()),
            }
            Ok(())
        })();
        r.map_err(fail)
    }

    /// Reads a config file on top of the current values.
    pub fn apply_file(&mut self, path: &Path) -> Result<(), ConfigError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| ConfigError(format!("{}: {e}", path.display())))?;
        let mut section = String::new();
        for (i, raw) in text.lines().enumerate() {
            let origin = Origin::Line {
                file: path.to_path_buf(),
                line: i + 1,
            };
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            if let Some(name) = line.strip_prefix('[').and_then(|l| l.strip_suffix(']')) {
                section = name.trim().to_string();
                continue;
            }
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| ConfigError(format!("{origin}: expected `key = value`, got `{line}`")))?;
            let key = key.trim();
            let full = if section.is_empty() {
                key.to_string()
            } else {
                format!("{section}.{key}")
            };
            if !KEYS.iter().any(|(k, _)| *k == full) {
                return Err(ConfigError(format!("{origin}: unknown key `{full}`")));
            }
            self.set(&full, value, &origin)?;
        }
        Ok(())
    }

    /// Cross-field checks, run once every source has been applied.
    pub fn finish(mut self) -> Result<Self, ConfigError> {
        if self.seed_set {
            if let SequenceFamily::RandomUnit(_) = self.family {
                self.family = SequenceFamily::RandomUnit(self.seed);
            }
        }
        let bad = |m: String| Err(ConfigError(m));
        if self.n == 0 {
            return bad("N must be positive".into());
        }
        if !(self.p >= 2.0 && self.p.is_finite()) {
            return bad(format!("p={} must be >= 2", self.p));
        }
        if self.c.is_empty() || self.c.iter().any(|&c| !(c > 0.0)) {
            return bad(format!("C={:?} must be positive", self.c));
        }
        if self.offsets == 0 {
            return bad("offsets must be >= 1".into());
        }
        if self.levels.iter().any(|&l| !(l >= 0.0)) {
            return bad("levels must be nonnegative".into());
        }
        if let Some(q) = self.big_q {
            if !q.is_power_of_two() {
                return bad(format!("Q={q} is not dyadic"));
            }
        }
        if self.c1.0 == 0 || self.c1.1 == 0 || self.c1.0 > self.c1.1 {
            return bad(format!("c1={}/{} must lie in (0, 1]", self.c1.0, self.c1.1));
        }
        Ok(self)
    }

    pub fn c_first(&self) -> f64 {
        self.c[0]
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn write(text: &str) -> tempfile::NamedTempFile {
        let mut f = tempfile::NamedTempFile::new().unwrap();
        std::io::Write::write_all(&mut f, text.as_bytes()).unwrap();
        f
    }

    #[test]
    fn sections_and_comments() {
        let f = write("# sweep\nform = diag:1,1\n[grid]\npolicy = budgeted\nmax_cells = 1000 # small\n[tolerance]\nslope=0.5\n");
        let mut c = RunConfig::default();
        c.apply_file(f.path()).unwrap();
        assert_eq!(c.form, QuadraticForm::diagonal(&[1, 1]).unwrap());
        assert_eq!(c.grid, GridPolicy::Budgeted { max_cells: 1000 });
        assert_eq!(c.tol_slope, 0.5);
    }

    #[test]
    fn unknown_key_reports_line() {
        let f = write("p = 4\n\nbogus = 1\n");
        let err = RunConfig::default().apply_file(f.path()).unwrap_err().0;
        assert!(err.contains(":3: unknown key `bogus`"), "{err}");
    }

    #[test]
    fn bad_value_reports_origin() {
        let err = RunConfig::default()
            .set("p", "four", &Origin::Flag("p"))
            .unwrap_err()
            .0;
        assert!(err.starts_with("flag --p: p:"), "{err}");
    }

    #[test]
    fn ratios() {
        assert_eq!(parse_ratio("1/16").unwrap(), (1, 16));
        assert_eq!(parse_ratio("0.0625").unwrap(), (625, 10000));
        assert_eq!(parse_ratio("1").unwrap(), (1, 1));
    }

    #[test]
    fn seed_applies_to_random_family() {
        let mut c = RunConfig::default();
        c.set("family", "random-unit", &Origin::Flag("family")).unwrap();
        c.set("seed", "42", &Origin::Flag("seed")).unwrap();
        assert_eq!(c.finish().unwrap().family, SequenceFamily::RandomUnit(42));
    }

    #[test]
    fn every_key_has_a_setter() {
        let mut c = RunConfig::default();
        for (k, _) in KEYS {
            let err = c.set(k, "\u{0}", &Origin::Flag("x"));
            if let Err(e) = err {
                assert!(!e.0.contains("unknown key"), "{k}");
            }
        }
    }
}
