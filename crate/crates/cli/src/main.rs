//! `quadsurf`: moments, level sets and arc diagnostics for quadratic
//! exponential sums.

mod commands;
mod config;
mod output;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use commands::Failure;
use config::{Origin, RunConfig, KEYS};

#[derive(Parser)]
#[command(name = "quadsurf", version, about = "Moments and level sets of quadratic exponential sums")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Full moment of |F_a| on a grid, checked against the exact count for even p.
    Moment(Common),
    /// Truncated moments for each C in the list.
    Truncated(Common),
    /// Level-set measures at heights given as multiples of N^{d/4}·‖a‖.
    Levelset(Common),
    /// Sweep over N_list and fit a log-log slope.
    Scaling(Common),
    /// Partition-of-unity identities of the mollifier family.
    MollifierCheck(Common),
    /// Major/minor arc ratios and the Poisson approximant against direct sums.
    ArcCheck(Common),
    /// Largest Gauss sums for each q ≤ q_max.
    GaussTable(Common),
    /// Exact rational diagonalization and signature.
    Diagonalize(Common),
}

/// Flags mirror config keys; explicit flags override the config file.
#[derive(Args, Default)]
struct Common {
    /// `key = value` config file.
    #[arg(long)]
    config: Option<PathBuf>,
    /// `diag:c1,..,cd` or `matrix:r11,..,rdd`.
    #[arg(long)]
    form: Option<String>,
    /// ones | delta | extremizer | random-unit(seed) | file:path.
    #[arg(long)]
    family: Option<String>,
    #[arg(long)]
    seed: Option<String>,
    #[arg(long = "N")]
    n: Option<String>,
    /// Comma-separated, strictly increasing.
    #[arg(long = "N-list")]
    n_list: Option<String>,
    #[arg(long)]
    p: Option<String>,
    /// Truncation constant(s), comma-separated.
    #[arg(long = "C")]
    c: Option<String>,
    /// Major-arc constant, e.g. `1/16`.
    #[arg(long)]
    c1: Option<String>,
    /// Scale the sequence to unit ℓ² norm.
    #[arg(long)]
    normalize: Option<String>,
    /// nyquist | budgeted.
    #[arg(long)]
    grid: Option<String>,
    #[arg(long = "max-cells")]
    max_cells: Option<String>,
    #[arg(long)]
    offsets: Option<String>,
    #[arg(long)]
    levels: Option<String>,
    #[arg(long)]
    q: Option<String>,
    #[arg(long = "Q")]
    big_q: Option<String>,
    #[arg(long = "q-max")]
    q_max: Option<String>,
    #[arg(long)]
    samples: Option<String>,
    #[arg(long = "m-cut")]
    m_cut: Option<String>,
    /// full | truncated.
    #[arg(long)]
    quantity: Option<String>,
    /// Compute the exact moment when possible.
    #[arg(long)]
    oracle: Option<String>,
    #[arg(long = "tol-slope")]
    tol_slope: Option<String>,
    #[arg(long = "tol-oracle")]
    tol_oracle: Option<String>,
    #[arg(long = "tol-identity")]
    tol_identity: Option<String>,
    #[arg(long = "tol-approx")]
    tol_approx: Option<String>,
    /// JSON output path (stdout when absent).
    #[arg(long)]
    out: Option<PathBuf>,
    /// CSV output path.
    #[arg(long)]
    csv: Option<PathBuf>,
}

impl Common {
    fn flags(&self) -> Vec<(&'static str, String)> {
        let path = |p: &Option<PathBuf>| p.as_ref().map(|p| p.display().to_string());
        let values: Vec<(&str, Option<String>)> = vec![
            ("form", self.form.clone()),
            ("family", self.family.clone()),
            ("seed", self.seed.clone()),
            ("N", self.n.clone()),
            ("N_list", self.n_list.clone()),
            ("p", self.p.clone()),
            ("C", self.c.clone()),
            ("c1", self.c1.clone()),
            ("normalize", self.normalize.clone()),
            ("grid.policy", self.grid.clone()),
            ("grid.max_cells", self.max_cells.clone()),
            ("offsets", self.offsets.clone()),
            ("levels", self.levels.clone()),
            ("q", self.q.clone()),
            ("Q", self.big_q.clone()),
            ("q_max", self.q_max.clone()),
            ("samples", self.samples.clone()),
            ("m_cut", self.m_cut.clone()),
            ("quantity", self.quantity.clone()),
            ("oracle", self.oracle.clone()),
            ("tolerance.slope", self.tol_slope.clone()),
            ("tolerance.oracle", self.tol_oracle.clone()),
            ("tolerance.identity", self.tol_identity.clone()),
            ("tolerance.approx", self.tol_approx.clone()),
            ("out.json", path(&self.out)),
            ("out.csv", path(&self.csv)),
        ];
        values
            .into_iter()
            .filter_map(|(k, v)| {
                let key = KEYS.iter().find(|(name, _)| *name == k).expect("flag maps to a key").0;
                v.map(|v| (key, v))
            })
            .collect()
    }

    fn resolve(&self) -> Result<RunConfig, config::ConfigError> {
        let mut cfg = RunConfig::default();
        if let Some(path) = &self.config {
            cfg.apply_file(path)?;
        }
        // The policy flag goes first so that --max-cells is not reset by it.
        let mut flags = self.flags();
        flags.sort_by_key(|(k, _)| *k != "grid.policy");
        for (key, value) in flags {
            let flag = KEYS.iter().find(|(k, _)| *k == key).expect("known key").1;
            cfg.set(key, &value, &Origin::Flag(flag))?;
        }
        cfg.finish()
    }
}

fn configure_threads() -> Result<(), String> {
    if let Ok(v) = std::env::var("QUADSURF_THREADS") {
        let n: usize = v
            .trim()
            .parse()
            .map_err(|e| format!("QUADSURF_THREADS=`{v}`: {e}"))?;
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| format!("thread pool: {e}"))?;
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if let Err(msg) = configure_threads() {
        eprintln!("error: {msg}");
        return ExitCode::from(2);
    }
    let (common, run): (&Common, fn(&RunConfig) -> commands::Outcome) = match &cli.command {
        Command::Moment(c) => (c, commands::moment),
        Command::Truncated(c) => (c, commands::truncated),
        Command::Levelset(c) => (c, commands::levelset),
        Command::Scaling(c) => (c, commands::scaling),
        Command::MollifierCheck(c) => (c, commands::mollifier_check),
        Command::ArcCheck(c) => (c, commands::arc_check),
        Command::GaussTable(c) => (c, commands::gauss_table),
        Command::Diagonalize(c) => (c, commands::diagonalize),
    };
    let cfg = match common.resolve() {
        Ok(cfg) => cfg,
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(2);
        }
    };
    match run(&cfg) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Check(msg)) => {
            eprintln!("{msg}");
            ExitCode::from(1)
        }
        Err(Failure::Validation(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
    }
}
