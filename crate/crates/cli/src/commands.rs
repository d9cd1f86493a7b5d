//! Subcommand implementations. Each returns the exit status it wants.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use quadsurf::arcs::{phi_fourier_bound, ArcLabel, Disjointness, MollifierFamily};
use quadsurf::expsum::{gauss_sums_all_b, DirectEvaluator, GaussTable, PoissonMajorArc, SmoothWeight};
use quadsurf::moments::{even_moment_exact, report_on_grids, MomentReport};
use quadsurf::numtheory::reduced_fractions;
use quadsurf::scaling::{
    level_set_normalized, run_experiment, summarize, theory_exponents, ScalingExperiment, ScalingFit,
    ScalingPoint, TheoryExponents, Verdict,
};
use quadsurf::{Coefficients, QuadraticForm};

use crate::config::RunConfig;
use crate::output::{emit, fmt_f64};

#[derive(Debug)]
pub enum Failure {
    /// Bad input: exit 2.
    Validation(String),
    /// A check or tolerance failed: exit 1.
    Check(String),
}

impl From<quadsurf::Error> for Failure {
    fn from(e: quadsurf::Error) -> Self {
        match e {
            quadsurf::Error::ArcOverlap(_) => Failure::Check(e.to_string()),
            _ => Failure::Validation(e.to_string()),
        }
    }
}

impl From<std::io::Error> for Failure {
    fn from(e: std::io::Error) -> Self {
        Failure::Validation(format!("output: {e}"))
    }
}

pub type Outcome = std::result::Result<(), Failure>;

fn write<T: Serialize>(cfg: &RunConfig, value: &T, header: &str, rows: Vec<String>) -> Outcome {
    emit(value, Some((header, rows)), cfg.out_json.as_deref(), cfg.out_csv.as_deref())?;
    Ok(())
}

fn experiment(cfg: &RunConfig, n_list: Vec<u64>, c: f64) -> ScalingExperiment {
    ScalingExperiment {
        form: cfg.form.clone(),
        family: cfg.family.clone(),
        n_list,
        p: cfg.p,
        c,
        grid: cfg.grid,
        offsets: cfg.offsets,
        seed: cfg.seed,
        level_factors: cfg.levels.clone(),
        exact_oracle: cfg.oracle,
    }
}

fn sequence(cfg: &RunConfig) -> Result<Coefficients, Failure> {
    let a = cfg.family.build::<f64>(cfg.form.dim(), cfg.n)?;
    Ok(if cfg.normalize { a.normalized() } else { a })
}

/// Grid moments of one sequence; level heights scale with `N^{d/4}·‖a‖₂`.
fn moment_report(cfg: &RunConfig, a: &Coefficients, c: f64) -> Result<MomentReport, Failure> {
    let grids = experiment(cfg, vec![cfg.n], c).grids_for(cfg.n)?;
    let scale = (cfg.n as f64).powf(cfg.form.dim() as f64 / 4.0) * a.norm();
    let lambdas: Vec<f64> = cfg.levels.iter().map(|f| f * scale).collect();
    Ok(report_on_grids(&cfg.form, a, &grids, cfg.p, c, &lambdas)?)
}

#[derive(Serialize)]
struct MomentOutput {
    report: MomentReport,
    oracle_status: String,
    relative_difference: Option<f64>,
}

pub fn moment(cfg: &RunConfig) -> Outcome {
    let a = sequence(cfg)?;
    let mut report = moment_report(cfg, &a, cfg.c_first())?;
    let even = cfg.p.fract() == 0.0 && (cfg.p as u32).is_multiple_of(2);
    let mut status = "not requested".to_string();
    let mut rel = None;
    if cfg.oracle && even {
        match even_moment_exact(&cfg.form, &a, cfg.p as u32) {
            Ok(m) => {
                report.oracle = Some(m.value);
                let r = (report.full_moment - m.value).abs() / m.value.abs().max(f64::MIN_POSITIVE);
                rel = Some(r);
                status = if !report.exact {
                    "computed; grid is not exact, no comparison".into()
                } else if r <= cfg.tol_oracle {
                    "agrees".into()
                } else {
                    "DISAGREEMENT".into()
                };
            }
            Err(quadsurf::Error::BudgetExceeded(msg)) => status = format!("skipped: {msg}"),
            Err(e) => return Err(e.into()),
        }
    } else if cfg.oracle {
        status = "skipped: p is not an even integer".into();
    }
    let row = report.csv_row();
    let disagree = status == "DISAGREEMENT";
    let out = MomentOutput {
        report,
        oracle_status: status,
        relative_difference: rel,
    };
    write(cfg, &out, MomentReport::CSV_HEADER, vec![row])?;
    if disagree {
        return Err(Failure::Check(format!(
            "DISAGREEMENT: grid and exact moments differ by {} (tolerance {})",
            fmt_f64(rel.unwrap_or(f64::NAN)),
            fmt_f64(cfg.tol_oracle)
        )));
    }
    Ok(())
}

pub fn truncated(cfg: &RunConfig) -> Outcome {
    let a = sequence(cfg)?;
    let mut reports = Vec::new();
    for &c in &cfg.c {
        reports.push(moment_report(cfg, &a, c)?);
    }
    let rows = reports.iter().map(MomentReport::csv_row).collect();
    write(cfg, &reports, MomentReport::CSV_HEADER, rows)
}

#[derive(Serialize)]
struct LevelRow {
    factor: f64,
    lambda: f64,
    measure: f64,
    normalized: f64,
}

#[derive(Serialize)]
struct LevelSetOutput {
    form: String,
    #[serde(rename = "N")]
    n: u64,
    q: f64,
    norm_a: f64,
    cells: usize,
    offsets: usize,
    rows: Vec<LevelRow>,
}

pub fn levelset(cfg: &RunConfig) -> Outcome {
    let a = sequence(cfg)?;
    let report = moment_report(cfg, &a, cfg.c_first())?;
    // |E_λ|·λ^q·N^{d+2-dq/2} for ‖a‖₂ = 1; rescale λ for other norms.
    let unit = MomentReport {
        level_set_table: report
            .level_set_table
            .iter()
            .map(|&(l, m)| (l / report.norm_a, m))
            .collect(),
        ..report.clone()
    };
    let normalized = level_set_normalized(&unit, cfg.form.dim(), cfg.q);
    let rows: Vec<LevelRow> = cfg
        .levels
        .iter()
        .zip(&report.level_set_table)
        .zip(&normalized)
        .map(|((&factor, &(lambda, measure)), &(_, nv))| LevelRow {
            factor,
            lambda,
            measure,
            normalized: nv,
        })
        .collect();
    let csv = rows
        .iter()
        .map(|r| {
            format!(
                "{},{},{},{},{},{}",
                cfg.n,
                fmt_f64(r.factor),
                fmt_f64(r.lambda),
                fmt_f64(r.measure),
                fmt_f64(cfg.q),
                fmt_f64(r.normalized)
            )
        })
        .collect();
    let out = LevelSetOutput {
        form: report.form.clone(),
        n: cfg.n,
        q: cfg.q,
        norm_a: report.norm_a,
        cells: report.grid.total_cells(),
        offsets: report.offsets,
        rows,
    };
    write(cfg, &out, "N,factor,lambda,measure,q,normalized", csv)
}

#[derive(Serialize)]
struct ScalingOutput {
    form: String,
    family: String,
    p: f64,
    #[serde(rename = "C")]
    c: f64,
    theory: TheoryExponents,
    points: Vec<ScalingPoint>,
    fit: Option<ScalingFit>,
    verdict: String,
}

const SCALING_HEADER: &str =
    "N,norm_raw,full,truncated,full_spread,truncated_spread,oracle,raw_full,max_abs,cells,offsets,error";

fn scaling_row(p: &ScalingPoint) -> String {
    match &p.report {
        Some(r) => format!(
            "{},{},{},{},{},{},{},{},{},{},{},",
            p.n,
            fmt_f64(p.raw_norm),
            fmt_f64(r.full_moment),
            fmt_f64(r.truncated_moment),
            fmt_f64(r.full_spread),
            fmt_f64(r.truncated_spread),
            r.oracle.map(fmt_f64).unwrap_or_default(),
            p.raw_full().map(fmt_f64).unwrap_or_default(),
            fmt_f64(r.max_abs),
            r.grid.total_cells(),
            r.offsets
        ),
        None => format!(
            "{},,,,,,,,,,,{}",
            p.n,
            p.error.as_deref().unwrap_or("").replace([',', '\n'], " ")
        ),
    }
}

pub fn scaling(cfg: &RunConfig) -> Outcome {
    let exp = experiment(cfg, cfg.n_list.clone(), cfg.c_first());
    exp.validate()?;
    let theory = theory_exponents(&cfg.form, cfg.p)?;
    let points = run_experiment(&exp)?;
    let failed: Vec<u64> = points.iter().filter(|p| p.error.is_some()).map(|p| p.n).collect();
    let fit = summarize(&exp, &points, cfg.quantity, cfg.tol_slope);
    let verdict = match &fit {
        Ok(f) => match f.verdict {
            Verdict::Within => "within tolerance".to_string(),
            Verdict::Outside => "outside tolerance".to_string(),
            Verdict::DegenerateZero => "degenerate: identically zero".to_string(),
        },
        Err(e) => format!("no fit: {e}"),
    };
    let rows = points.iter().map(scaling_row).collect();
    let passed = fit.as_ref().map(ScalingFit::passed).unwrap_or(false);
    let out = ScalingOutput {
        form: cfg.form.to_string(),
        family: cfg.family.name(),
        p: cfg.p,
        c: cfg.c_first(),
        theory,
        points,
        fit: fit.ok(),
        verdict: verdict.clone(),
    };
    write(cfg, &out, SCALING_HEADER, rows)?;
    eprintln!("verdict: {verdict}");
    if !failed.is_empty() {
        return Err(Failure::Check(format!("runs failed at N = {failed:?}")));
    }
    if !passed {
        return Err(Failure::Check(verdict));
    }
    Ok(())
}

#[derive(Serialize)]
struct IdentityRow {
    check: String,
    #[serde(rename = "Q")]
    big_q: Option<u64>,
    s: Option<u32>,
    value: f64,
    limit: Option<f64>,
    pass: bool,
}

#[derive(Serialize)]
struct MollifierOutput {
    #[serde(rename = "N")]
    n: u64,
    c1: f64,
    n1: u64,
    disjointness: Disjointness,
    rows: Vec<IdentityRow>,
}

pub fn mollifier_check(cfg: &RunConfig) -> Outcome {
    let fam = MollifierFamily::<f64>::with_c1(cfg.n, cfg.c1.0, cfg.c1.1)?;
    let tol = cfg.tol_identity;
    let samples = cfg.samples.unwrap_or(10_000);
    let qs: Vec<u64> = match cfg.big_q {
        Some(q) if q > cfg.n => {
            return Err(Failure::Validation(format!("Q={q} exceeds N={}", cfg.n)));
        }
        Some(q) => vec![q],
        None => std::iter::successors(Some(1u64), |q| Some(q * 2))
            .take_while(|&q| q <= cfg.n)
            .collect(),
    };
    let mut rows = Vec::new();
    for &q in &qs {
        let defect = fam.partition_identity_check(q, samples)?;
        rows.push(IdentityRow {
            check: "partition".into(),
            big_q: Some(q),
            s: None,
            value: defect,
            limit: Some(tol),
            pass: defect <= tol,
        });
    }
    let (mut range, mut pieces) = (0.0f64, 0.0f64);
    for i in 0..samples {
        let alpha = (i as f64 * 0.618_033_988_749_894_9).fract();
        let (l, r) = fam.lambda_rho(alpha);
        range = range.max((-l).max(l - 1.0)).max((l + r - 1.0).abs());
        pieces = pieces.max((fam.lambda_by_pieces(alpha) - l).abs());
    }
    rows.push(IdentityRow {
        check: "lambda in [0,1], lambda+rho=1".into(),
        big_q: None,
        s: None,
        value: range.max(0.0),
        limit: Some(tol),
        pass: range <= tol,
    });
    rows.push(IdentityRow {
        check: "lambda = sum of pieces".into(),
        big_q: None,
        s: None,
        value: pieces,
        limit: Some(tol),
        pass: pieces <= tol,
    });
    let mut rho_core = 0.0f64;
    for f in reduced_fractions(1, fam.n1() + 1) {
        let width = fam.c1() / (f.den as f64 * cfg.n as f64);
        for t in [-1.0, -0.5, 0.0, 0.5, 1.0] {
            let alpha = (f.value() + t * width).rem_euclid(1.0);
            rho_core = rho_core.max(fam.lambda_rho(alpha).1.abs());
        }
    }
    rows.push(IdentityRow {
        check: "rho = 0 on core major intervals".into(),
        big_q: None,
        s: None,
        value: rho_core,
        limit: Some(tol),
        pass: rho_core <= tol,
    });
    // Fourier bound ratios, reported without a limit.
    for &(q, s) in fam.pieces() {
        let width = (1i64 << s) * cfg.n as i64;
        let worst = (0..=4 * width)
            .step_by((width / 16).max(1) as usize)
            .map(|m| fam.phi_fourier(q, s, m).map(|z| z.re.abs() / phi_fourier_bound(cfg.n, q, s, m)))
            .collect::<Result<Vec<f64>, _>>()?
            .into_iter()
            .fold(0.0, f64::max);
        rows.push(IdentityRow {
            check: "fourier bound ratio".into(),
            big_q: Some(q),
            s: Some(s),
            value: worst,
            limit: None,
            pass: true,
        });
    }
    let ok = rows.iter().all(|r| r.pass);
    let csv = rows
        .iter()
        .map(|r| {
            format!(
                "{},{},{},{},{},{}",
                r.check.replace(',', " "),
                r.big_q.map(|q| q.to_string()).unwrap_or_default(),
                r.s.map(|s| s.to_string()).unwrap_or_default(),
                fmt_f64(r.value),
                r.limit.map(fmt_f64).unwrap_or_default(),
                r.pass
            )
        })
        .collect();
    let out = MollifierOutput {
        n: cfg.n,
        c1: fam.c1(),
        n1: fam.n1(),
        disjointness: fam.disjointness(),
        rows,
    };
    write(cfg, &out, "check,Q,s,value,limit,pass", csv)?;
    if !ok {
        return Err(Failure::Check("identity defect above tolerance".into()));
    }
    Ok(())
}

#[derive(Serialize)]
struct ArcRow {
    kind: &'static str,
    q: u64,
    a: i64,
    alpha: f64,
    beta: f64,
    theta: Vec<f64>,
    #[serde(rename = "abs_F")]
    abs_f: f64,
    reference: f64,
    ratio: f64,
}

#[derive(Serialize)]
struct ArcOutput {
    form: String,
    #[serde(rename = "N")]
    n: u64,
    max_poisson_error: f64,
    /// Non-fatal: whether the Poisson error stayed within `tolerance.approx`.
    poisson_within_tolerance: bool,
    max_majorant_ratio: f64,
    max_minor_ratio: f64,
    rows: Vec<ArcRow>,
}

pub fn arc_check(cfg: &RunConfig) -> Outcome {
    let form = &cfg.form;
    let d = form.dim();
    let n = cfg.n;
    if cfg.q_max == 0 || cfg.q_max > n {
        return Err(Failure::Validation(format!("q_max={} must lie in [1, N]", cfg.q_max)));
    }
    let weight = SmoothWeight::<f64>::new(d, n)?;
    let direct = DirectEvaluator::new(form, &weight.to_sequence())?;
    let fam = MollifierFamily::<f64>::with_c1(n, cfg.c1.0, cfg.c1.1)?;
    let samples = cfg.samples.unwrap_or(20);
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut rows = Vec::new();
    let nd = (n as f64).powi(d as i32);
    for k in 0..samples {
        let q = 1 + (k as u64 % cfg.q_max);
        let a = loop {
            let a = rng.gen_range(0..q as i64);
            if num_gcd(a, q as i64) == 1 {
                break a;
            }
        };
        // Major-arc offsets |β| ≤ c₁/(qN).
        let beta = if k == 0 { 0.0 } else { rng.gen_range(-1.0..1.0) * fam.c1() / (q as f64 * n as f64) };
        let s = gauss_sums_all_b(form, a, q);
        let best = (0..s.len()).max_by(|&i, &j| s[i].norm().total_cmp(&s[j].norm())).unwrap_or(0);
        let mut b = vec![0u64; d];
        let mut r = best as u64;
        for slot in b.iter_mut().rev() {
            *slot = r % q;
            r /= q;
        }
        let theta: Vec<f64> = if k == 0 {
            vec![0.0; d]
        } else {
            b.iter()
                .map(|&bi| bi as f64 / q as f64 + rng.gen_range(-0.3..0.3) / n as f64)
                .collect()
        };
        let alpha = a as f64 / q as f64 + beta;
        let f = direct.eval(alpha, &theta);
        let approx = PoissonMajorArc::new(form, a, q, beta, n, cfg.m_cut)?.evaluate(&theta)?;
        let err = (approx.value - f).norm() / f.norm();
        rows.push(ArcRow {
            kind: "poisson",
            q,
            a,
            alpha,
            beta,
            theta: theta.clone(),
            abs_f: f.norm(),
            reference: approx.value.norm(),
            ratio: err,
        });
        let majorant = (q as f64).powf(-(d as f64) / 2.0)
            * if beta == 0.0 { nd } else { nd.min(beta.abs().powf(-(d as f64) / 2.0)) };
        rows.push(ArcRow {
            kind: "major",
            q,
            a,
            alpha,
            beta,
            theta,
            abs_f: f.norm(),
            reference: majorant,
            ratio: f.norm() / majorant,
        });
    }
    let mut minor = 0;
    let mut attempts = 0;
    while minor < samples && attempts < 1000 * samples.max(1) {
        attempts += 1;
        let alpha: f64 = rng.gen();
        if fam.classify_arc(alpha) != ArcLabel::Minor || fam.lambda_rho(alpha).1 <= 0.0 {
            continue;
        }
        minor += 1;
        let theta: Vec<f64> = (0..d).map(|_| rng.gen()).collect();
        let f = direct.eval(alpha, &theta).norm();
        let reference = (n as f64).powf(d as f64 / 2.0);
        rows.push(ArcRow {
            kind: "minor",
            q: 0,
            a: 0,
            alpha,
            beta: 0.0,
            theta,
            abs_f: f,
            reference,
            ratio: f / reference,
        });
    }
    let max_of = |kind: &str| {
        rows.iter()
            .filter(|r| r.kind == kind)
            .map(|r| r.ratio)
            .fold(0.0, f64::max)
    };
    let out = ArcOutput {
        form: form.to_string(),
        n,
        max_poisson_error: max_of("poisson"),
        poisson_within_tolerance: max_of("poisson") <= cfg.tol_approx,
        max_majorant_ratio: max_of("major"),
        max_minor_ratio: max_of("minor"),
        rows,
    };
    let csv = out
        .rows
        .iter()
        .map(|r| {
            let theta: Vec<String> = r.theta.iter().map(|&t| fmt_f64(t)).collect();
            format!(
                "{},{},{},{},{},{},{},{},{}",
                r.kind,
                r.q,
                r.a,
                fmt_f64(r.alpha),
                fmt_f64(r.beta),
                theta.join(" "),
                fmt_f64(r.abs_f),
                fmt_f64(r.reference),
                fmt_f64(r.ratio)
            )
        })
        .collect();
    eprintln!(
        "max poisson error {}, max majorant ratio {}, max minor ratio {}",
        fmt_f64(out.max_poisson_error),
        fmt_f64(out.max_majorant_ratio),
        fmt_f64(out.max_minor_ratio)
    );
    write(cfg, &out, "kind,q,a,alpha,beta,theta,abs_F,reference,ratio", csv)
}

fn num_gcd(mut a: i64, mut b: i64) -> i64 {
    while b != 0 {
        (a, b) = (b, a.rem_euclid(b));
    }
    a.abs()
}

pub fn gauss_table(cfg: &RunConfig) -> Outcome {
    if cfg.q_max == 0 {
        return Err(Failure::Validation("q_max must be positive".into()));
    }
    let table = GaussTable::compute(&cfg.form, cfg.q_max);
    let rows = table
        .rows
        .iter()
        .map(|r| format!("{},{},{},{}", r.q, r.a, fmt_f64(r.max_abs), fmt_f64(r.max_ratio)))
        .collect();
    write(cfg, &table, "q,a,max_abs,max_ratio", rows)
}

#[derive(Serialize)]
struct DiagonalizeOutput {
    form: String,
    transform: Vec<Vec<String>>,
    diagonal: Vec<String>,
    denominator: String,
    signature: quadsurf::Signature,
    charpoly_signature: quadsurf::Signature,
    checked_vectors: usize,
    mismatches: usize,
}

pub fn diagonalize(cfg: &RunConfig) -> Outcome {
    use num_bigint::BigInt;
    use num_rational::BigRational;
    let form: &QuadraticForm = &cfg.form;
    let diag = form.diagonalize_rational();
    let samples = cfg.samples.unwrap_or(1000);
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut mismatches = 0;
    for _ in 0..samples {
        let v: Vec<BigRational> = (0..form.dim())
            .map(|_| BigRational::from_integer(BigInt::from(rng.gen_range(-1000i64..=1000))))
            .collect();
        if diag.evaluate(&v) != form.evaluate_rational(&v) {
            mismatches += 1;
        }
    }
    let out = DiagonalizeOutput {
        form: form.to_string(),
        transform: diag
            .transform
            .iter()
            .map(|row| row.iter().map(|x| x.to_string()).collect())
            .collect(),
        diagonal: diag.diagonal.iter().map(|x| x.to_string()).collect(),
        denominator: diag.denominator.to_string(),
        signature: diag.signature(),
        charpoly_signature: form.inertia_from_charpoly(),
        checked_vectors: samples,
        mismatches,
    };
    let rows = out
        .diagonal
        .iter()
        .enumerate()
        .map(|(i, c)| format!("{i},{c},{}", out.transform[i].join(" ")))
        .collect();
    let agree = out.signature == out.charpoly_signature;
    write(cfg, &out, "index,diagonal,transform_row", rows)?;
    if mismatches > 0 || !agree {
        return Err(Failure::Check(format!(
            "diagonalization check failed: {mismatches} mismatches, signatures agree: {agree}"
        )));
    }
    Ok(())
}
