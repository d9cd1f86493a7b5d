//! Acceptance criteria. Each test prints one `PASS`/`FAIL` line; run with
//! `cargo test -p quadsurf --test acceptance -- --nocapture --test-threads=1`
//! to see them in order.

use nalgebra::DMatrix;
use num_bigint::BigInt;
use num_complex::Complex64;
use num_rational::BigRational;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use quadsurf::arcs::MollifierFamily;
use quadsurf::expsum::{
    extension_direct, gauss_sum, gauss_sums_all_b, major_arc_approx, smoothed_sum_direct,
    CoefficientSequence, GridEvaluator, SequenceFamily, SmoothWeight, SumKind, TorusGrid,
};
use quadsurf::moments::{
    even_moment_exact, grid_moment, layer_cake, level_set_profile, report_on_grids,
};
use quadsurf::numtheory::{mobius, ramanujan_sum};
use quadsurf::scaling::{run_experiment, summarize, GridPolicy, Quantity, ScalingExperiment};
use quadsurf::{Coefficients, QuadraticForm};

fn verdict(id: u32, name: &str, ok: bool, detail: String) {
    println!("acceptance {id:>2} {name:<28} {} {detail}", if ok { "PASS" } else { "FAIL" });
    assert!(ok, "criterion {id} ({name}) failed: {detail}");
}

fn form_for(d: usize) -> QuadraticForm {
    match d {
        1 => QuadraticForm::diagonal(&[1]).unwrap(),
        _ => QuadraticForm::diagonal(&[1, -1]).unwrap(),
    }
}

fn hyperbolic() -> QuadraticForm {
    QuadraticForm::diagonal(&[1, -1]).unwrap()
}

#[test]
fn criterion_01_parseval() {
    let mut worst = 0.0f64;
    for d in 1..=2 {
        let form = form_for(d);
        for n in [2u64, 4, 8] {
            let grid = TorusGrid::nyquist(&form, n, 2).unwrap();
            for k in 0..50u64 {
                let a = Coefficients::random_unit(d, n, 1000 * n + k + 17 * d as u64).unwrap();
                let r = report_on_grids(&form, &a, std::slice::from_ref(&grid), 2.0, 1.0, &[]).unwrap();
                assert!(r.exact);
                worst = worst.max((r.full_moment - 1.0).abs());
            }
        }
    }
    verdict(1, "parseval", worst <= 1e-8, format!("max |moment-1| = {worst:.3e}"));
}

#[test]
fn criterion_02_oracle_equivalence() {
    let mut worst = 0.0f64;
    let mut cases = 0;
    for d in 1..=2usize {
        let form = form_for(d);
        for n in [2u64, 4, 8] {
            for p in [4u32, 6] {
                let grid = TorusGrid::nyquist(&form, n, p).unwrap();
                for k in 0..10u64 {
                    let a = Coefficients::random_unit(d, n, 77 + 31 * k + 7 * n + p as u64 + 1000 * d as u64)
                        .unwrap();
                    let exact = even_moment_exact(&form, &a, p).unwrap().value;
                    let r = report_on_grids(&form, &a, std::slice::from_ref(&grid), p as f64, 1.0, &[])
                        .unwrap();
                    worst = worst.max((r.full_moment - exact).abs() / exact);
                    cases += 1;
                }
            }
        }
    }
    verdict(2, "oracle equivalence", worst <= 1e-6, format!("{cases} cases, max rel err {worst:.3e}"));
}

/// Counts 4-tuples of support points with equal `R` sums and equal vector sums.
fn brute_force_p4(form: &QuadraticForm, pts: &[Vec<i64>]) -> u64 {
    let r: Vec<i64> = pts.iter().map(|p| form.evaluate(p).unwrap()).collect();
    let k = pts.len();
    let mut count = 0;
    for i in 0..k {
        for j in 0..k {
            for l in 0..k {
                for m in 0..k {
                    let same_r = r[i] + r[j] == r[l] + r[m];
                    let same_n = (0..pts[i].len()).all(|c| pts[i][c] + pts[j][c] == pts[l][c] + pts[m][c]);
                    count += (same_r && same_n) as u64;
                }
            }
        }
    }
    count
}

#[test]
fn criterion_03_exact_counts() {
    let form = hyperbolic();
    let formula = |n: u64| (2 * n * n * n + n) / 3;
    let mut ok = true;
    for n in 1..=6u64 {
        let pts: Vec<Vec<i64>> = (1..=n as i64).map(|x| vec![x, x]).collect();
        ok &= brute_force_p4(&form, &pts) == formula(n);
    }
    let count = |n: u64| {
        let a = Coefficients::diagonal_extremizer(1, n).unwrap();
        even_moment_exact(&form, &a, 4).unwrap().count.unwrap().count
    };
    let at3 = count(3);
    ok &= at3 == 19;
    let mismatches: Vec<u64> = (1..=32).filter(|&n| count(n) != formula(n) as u128).collect();
    ok &= mismatches.is_empty();
    verdict(3, "exact counts", ok, format!("N=3 count {at3}, formula mismatches {mismatches:?}"));
}

#[test]
fn criterion_04_mollifier_identities() {
    let mut partition = 0.0f64;
    let mut sum_defect = 0.0f64;
    for n in [16u64, 64, 256] {
        let fam = MollifierFamily::<f64>::new(n).unwrap();
        let mut q = 1;
        while q <= n {
            partition = partition.max(fam.partition_identity_check(q, 10_000).unwrap());
            q *= 2;
        }
        let mut rng = ChaCha8Rng::seed_from_u64(n);
        for _ in 0..2000 {
            let alpha: f64 = rng.gen();
            let (l, r) = fam.lambda_rho(alpha);
            sum_defect = sum_defect.max((l + r - 1.0).abs()).max((fam.lambda_by_pieces(alpha) - l).abs());
        }
    }
    // ρ on the core intervals |α - a/q| ≤ 1/(QN), Q the dyadic floor of q.
    let mut rho_core = 0.0f64;
    let mut intervals = 0;
    for n in 1..=64u64 {
        let fam = MollifierFamily::<f64>::new(n).unwrap();
        for q in 1..=fam.n1() {
            let big_q = 1u64 << (63 - q.leading_zeros());
            for a in 0..q {
                if num_integer::gcd(a, q) != 1 {
                    continue;
                }
                intervals += 1;
                let width = 1.0 / (big_q as f64 * n as f64);
                for t in 0..=40 {
                    let alpha = a as f64 / q as f64 + width * (t as f64 / 20.0 - 1.0);
                    rho_core = rho_core.max(fam.lambda_rho(alpha.rem_euclid(1.0)).1.abs());
                }
            }
        }
    }
    let mut ramanujan_mismatch = 0;
    for q in 1..=50u64 {
        for n in -50..=50i64 {
            let direct: f64 = (1..=q)
                .filter(|&a| num_integer::gcd(a, q) == 1)
                .map(|a| (2.0 * std::f64::consts::PI * (a as f64) * (n as f64) / q as f64).cos())
                .sum();
            let via_mobius: i64 = (1..=q)
                .filter(|d| q % d == 0 && n.rem_euclid(*d as i64) == 0)
                .map(|d| mobius(q / d) * d as i64)
                .sum();
            if ramanujan_sum(q, n) != direct.round() as i64 || ramanujan_sum(q, n) != via_mobius {
                ramanujan_mismatch += 1;
            }
        }
    }
    let ok = partition <= 1e-12 && sum_defect <= 1e-12 && rho_core <= 1e-15 && ramanujan_mismatch == 0;
    verdict(
        4,
        "mollifier identities",
        ok,
        format!(
            "partition {partition:.2e}, lambda+rho {sum_defect:.2e}, rho on {intervals} core intervals {rho_core:.2e}, ramanujan mismatches {ramanujan_mismatch}"
        ),
    );
}

#[test]
fn criterion_05_gauss_sums() {
    let form = QuadraticForm::diagonal(&[1]).unwrap();
    let mut worst = f64::NEG_INFINITY;
    for q in 1..=64i64 {
        for a in 1..=q {
            if num_integer::gcd(a, q) != 1 {
                continue;
            }
            for b in 0..q {
                let s = gauss_sum(&form, a, &[b], q).unwrap();
                worst = worst.max(s.norm() - (2.0 * q as f64).sqrt());
            }
        }
    }
    let s5 = gauss_sum(&form, 1, &[0], 5).unwrap().norm();
    let err5 = (s5 - 5f64.sqrt()).abs();
    verdict(
        5,
        "gauss sums",
        worst <= 1e-9 && err5 <= 1e-10,
        format!("max |S|-sqrt(2q) = {worst:.3e}, ||S(1,0;5)|-sqrt5| = {err5:.1e}"),
    );
}

#[test]
fn criterion_06_major_arc_approximant() {
    let form = hyperbolic();
    let n = 32u64;
    let w = SmoothWeight::<f64>::new(2, n).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    let mut worst = 0.0f64;
    for k in 0..20 {
        let q = 1 + (k % 4) as u64;
        let a = loop {
            let a = rng.gen_range(0..q as i64);
            if num_integer::gcd(a, q as i64) == 1 {
                break a;
            }
        };
        // Major arcs |β| ≤ c₁/(qN) with c₁ = 1/8, so that q ≤ 4 = c₁N.
        let beta = rng.gen_range(-1.0..1.0) / (8.0 * q as f64 * n as f64);
        // θ near a residue class with a non-vanishing Gauss sum.
        let s = gauss_sums_all_b(&form, a, q);
        let best = (0..s.len()).max_by(|&i, &j| s[i].norm().total_cmp(&s[j].norm())).unwrap();
        let b = [best as u64 / q, best as u64 % q];
        let theta: Vec<f64> = b
            .iter()
            .map(|&bi| bi as f64 / q as f64 + rng.gen_range(-0.3..0.3) / n as f64)
            .collect();
        let alpha = a as f64 / q as f64 + beta;
        let direct: Complex64 = smoothed_sum_direct(&form, &w, alpha, &theta).unwrap();
        let approx = major_arc_approx(&form, a, q, beta, &theta, n, 3).unwrap();
        worst = worst.max((approx.value - direct).norm() / direct.norm());
    }
    verdict(6, "major arc approximant", worst <= 0.05, format!("20 points, max rel err {worst:.3e}"));
}

#[test]
fn criterion_07_minor_arc_boundedness() {
    let form = hyperbolic();
    let mut values = Vec::new();
    for n in [8u64, 16, 32, 64] {
        let fam = MollifierFamily::<f64>::new(n).unwrap();
        let weight = SmoothWeight::<f64>::new(2, n).unwrap().to_sequence();
        let m_theta = quadsurf::expsum::fast_size(weight.width());
        let grid = TorusGrid::unshifted(2048, m_theta, 2).unwrap();
        let ev = GridEvaluator::new(&form, &weight, &grid, SumKind::Smoothed, n).unwrap();
        let maxima = ev.fold_slices(
            || 0.0f64,
            |acc, j, slice| {
                if fam.lambda_rho(grid.alpha(j)).1 > 0.0 {
                    *acc = slice.iter().fold(*acc, |m, z| m.max(z.norm()));
                }
            },
        );
        let sup = maxima.into_iter().fold(0.0, f64::max);
        values.push((n, sup / n as f64));
    }
    let ok = values.windows(2).all(|w| w[1].1 <= 2.0 * w[0].1);
    let shown: Vec<String> = values.iter().map(|(n, v)| format!("N={n}: {v:.4}")).collect();
    verdict(7, "minor arc boundedness", ok, shown.join(", "));
}

/// Cells per offset for the truncated-moment scaling run.
const SCALING_CELLS: usize = 1 << 29;

#[test]
fn criterion_08_truncated_slope() {
    let exp = ScalingExperiment {
        form: hyperbolic(),
        family: SequenceFamily::Ones,
        n_list: vec![8, 16, 32, 64],
        p: 6.0,
        c: 1.0,
        grid: GridPolicy::Budgeted { max_cells: SCALING_CELLS },
        offsets: 3,
        seed: 8,
        level_factors: vec![],
        exact_oracle: false,
    };
    let pts = run_experiment(&exp).unwrap();
    let fit = summarize(&exp, &pts, Quantity::Truncated, 0.75).unwrap();
    let ok = pts.iter().all(|p| p.error.is_none()) && (fit.fit.slope - 2.0).abs() <= 0.75;
    verdict(
        8,
        "truncated moment slope",
        ok,
        format!(
            "slope {:.3} (per offset {:?}, pairwise {:?})",
            fit.fit.slope, fit.offset_slopes, fit.fit.pairwise_slopes
        ),
    );
}

#[test]
fn criterion_09_extremizer_degeneracy() {
    let exp = ScalingExperiment {
        form: hyperbolic(),
        family: SequenceFamily::DiagonalExtremizer(None),
        n_list: vec![2, 4, 8, 16],
        p: 4.0,
        c: 2.0,
        grid: GridPolicy::Nyquist,
        offsets: 1,
        seed: 9,
        level_factors: vec![],
        exact_oracle: false,
    };
    let pts = run_experiment(&exp).unwrap();
    let truncated: Vec<f64> = pts.iter().map(|p| p.report.as_ref().unwrap().truncated_moment).collect();
    let ok = truncated.iter().all(|&t| t == 0.0);
    verdict(9, "extremizer degeneracy", ok, format!("truncated moments {truncated:?}"));
}

fn random_rational(rng: &mut ChaCha8Rng) -> BigRational {
    BigRational::new(BigInt::from(rng.gen_range(-30i64..=30)), BigInt::from(rng.gen_range(1i64..=7)))
}

#[test]
fn criterion_10_diagonalization() {
    let mut rng = ChaCha8Rng::seed_from_u64(10);
    let mut forms = 0;
    let mut bad = 0;
    while forms < 100 {
        let d = rng.gen_range(1..=4usize);
        let mut m = vec![0i64; d * d];
        for i in 0..d {
            for j in i..d {
                let v = rng.gen_range(-6..=6);
                m[i * d + j] = v;
                m[j * d + i] = v;
            }
        }
        let Ok(form) = QuadraticForm::new(d, m.clone()) else { continue };
        forms += 1;
        let diag = form.diagonalize_rational();
        for _ in 0..1000 {
            let v: Vec<BigRational> = (0..d).map(|_| random_rational(&mut rng)).collect();
            if diag.evaluate(&v) != form.evaluate_rational(&v) {
                bad += 1;
            }
        }
        let eig = DMatrix::from_row_slice(d, d, &m.iter().map(|&x| x as f64).collect::<Vec<_>>())
            .symmetric_eigenvalues();
        let pos = eig.iter().filter(|&&e| e > 0.0).count();
        let neg = eig.iter().filter(|&&e| e < 0.0).count();
        let sig = diag.signature();
        if (sig.positive, sig.negative) != (pos, neg) || form.signature() != sig {
            bad += 1;
        }
    }
    verdict(10, "diagonalization", bad == 0, format!("{forms} forms, {bad} mismatches"));
}

#[test]
fn criterion_11_layer_cake() {
    let form = form_for(1);
    let n = 8;
    let a = Coefficients::random_unit(1, n, 11).unwrap();
    let grid = TorusGrid::nyquist(&form, n, 4).unwrap();
    let field = quadsurf::expsum::grid_evaluate(&form, &a, &grid).unwrap();
    let top = field.max_abs();
    let steps = 4000;
    let lambdas: Vec<f64> = (0..=steps).map(|i| top * i as f64 / steps as f64).collect();
    let profile = level_set_profile(&field, &lambdas).unwrap();
    let cake = layer_cake(&profile, 4.0);
    let direct = grid_moment(&field, 4.0);
    let rel = (cake - direct).abs() / direct;
    verdict(11, "layer cake", rel <= 0.02, format!("layer-cake {cake:.6}, grid {direct:.6}, rel {rel:.2e}"));
}

#[test]
fn direct_and_grid_agree_on_sample_points() {
    // Sanity link between the grid evaluator and the direct sum used above.
    let form = hyperbolic();
    let a: CoefficientSequence<f64> = Coefficients::random_unit(2, 3, 5).unwrap();
    let grid = TorusGrid::new(17, 8, 2, vec![0.3, 0.1, 0.7]).unwrap();
    let field = quadsurf::expsum::grid_evaluate(&form, &a, &grid).unwrap();
    for i in (0..field.len()).step_by(37) {
        let (alpha, theta) = field.point(i);
        let z = extension_direct(&form, &a, alpha, &theta).unwrap();
        assert!((z - field.complex(i).unwrap()).norm() < 1e-10);
    }
}
