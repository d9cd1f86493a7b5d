//! Cross-module invariants and recorded-constant checks.

use nalgebra::DMatrix;
use num_complex::Complex64;
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use quadsurf::arcs::MollifierFamily;
use quadsurf::expsum::{
    extension_direct, fast_size, gauss_sums_all_b, grid_evaluate, DirectEvaluator, GaussTable,
    GridEvaluator, SequenceFamily, SmoothWeight, SumKind, TorusGrid,
};
use quadsurf::moments::{even_moment_exact, grid_moment, truncated_moment};
use quadsurf::numtheory::truncated_divisor;
use quadsurf::scaling::{fit_loglog, level_set_normalized, run_experiment, GridPolicy, ScalingExperiment};
use quadsurf::{Coefficients, QuadraticForm};

fn hyperbolic() -> QuadraticForm {
    QuadraticForm::diagonal(&[1, -1]).unwrap()
}

fn random_form(rng: &mut ChaCha8Rng, d: usize, bound: i64) -> (QuadraticForm, Vec<i64>) {
    loop {
        let mut m = vec![0i64; d * d];
        for i in 0..d {
            for j in i..d {
                let v = rng.gen_range(-bound..=bound);
                m[i * d + j] = v;
                m[j * d + i] = v;
            }
        }
        if let Ok(f) = QuadraticForm::new(d, m.clone()) {
            return (f, m);
        }
    }
}

#[test]
fn signature_matches_eigenvalue_signs() {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    for _ in 0..1000 {
        let d = rng.gen_range(1..=4);
        let (form, m) = random_form(&mut rng, d, 9);
        let eig = DMatrix::from_row_slice(d, d, &m.iter().map(|&x| x as f64).collect::<Vec<_>>())
            .symmetric_eigenvalues();
        let pos = eig.iter().filter(|&&e| e > 0.0).count();
        let sig = form.signature();
        assert_eq!((sig.positive, sig.negative), (pos, d - pos), "{m:?}");
        assert_eq!(form.diagonalize_rational().signature(), sig);
    }
}

#[test]
fn grid_matches_direct_on_random_triples() {
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    for d in 1..=2usize {
        for n in [2u64, 4, 8] {
            for _ in 0..100 {
                let (form, _) = random_form(&mut rng, d, 4);
                let a = Coefficients::random_unit(d, n, rng.gen()).unwrap();
                let width = 2 * n as usize + 1;
                let off = (0..=d).map(|_| rng.gen::<f64>()).collect();
                let grid = TorusGrid::new(rng.gen_range(1..24), width + rng.gen_range(0..4), d, off).unwrap();
                let ev = GridEvaluator::new(&form, &a, &grid, SumKind::Extension, n).unwrap();
                let j = rng.gen_range(0..grid.m_alpha);
                let slice = ev.slice(j);
                let k = rng.gen_range(0..slice.len());
                let direct = extension_direct(&form, &a, grid.alpha(j), &grid.theta(k)).unwrap();
                assert!((slice[k] - direct).norm() <= 1e-10 * (1.0 + direct.norm()));
            }
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn sup_is_below_cauchy_schwarz(d in 1usize..=2, n in 1u64..=5, seed in any::<u64>(), scale in 0.1f64..10.0,
                                   ma in 3usize..40, oa in 0.0f64..1.0, ot in 0.0f64..1.0) {
        let form = if d == 1 { QuadraticForm::diagonal(&[2]).unwrap() } else { QuadraticForm::new(2, vec![1, 2, 2, -3]).unwrap() };
        let a = Coefficients::random_unit(d, n, seed).unwrap().scaled(scale);
        let grid = TorusGrid::new(ma, 2 * n as usize + 1, d, vec![oa, ot, ot][..=d].to_vec()).unwrap();
        let field = grid_evaluate(&form, &a, &grid).unwrap();
        let bound = (2.0 * n as f64 + 1.0).powf(d as f64 / 2.0) * a.norm();
        prop_assert!(field.max_abs() <= bound * (1.0 + 1e-12));
    }

    #[test]
    fn truncated_moment_is_monotone_in_c(seed in any::<u64>(), n in 1u64..=4, p in 2.0f64..7.0,
                                         c in proptest::collection::vec(0.01f64..4.0, 2..6)) {
        let form = hyperbolic();
        let a = Coefficients::random_unit(2, n, seed).unwrap();
        let grid = TorusGrid::new(31, 2 * n as usize + 1, 2, vec![0.1, 0.2, 0.3]).unwrap();
        let field = grid_evaluate(&form, &a, &grid).unwrap();
        let full = grid_moment(&field, p);
        let mut cs = c.clone();
        cs.sort_by(f64::total_cmp);
        let vals: Vec<f64> = cs.iter().map(|&c| truncated_moment(&field, p, c, 1.0).unwrap()).collect();
        prop_assert!(vals.windows(2).all(|w| w[1] <= w[0]));
        prop_assert!(vals[0] <= full);
        prop_assert_eq!(truncated_moment(&field, p, 1e-300, 1.0).unwrap(), full);
        let beyond = 1.01 * (2.0 * n as f64 + 1.0) / (n as f64).sqrt();
        prop_assert_eq!(truncated_moment(&field, p, beyond, 1.0).unwrap(), 0.0);
    }
}

#[test]
fn gauss_ratio_is_uniform_for_general_forms() {
    let forms = [
        QuadraticForm::diagonal(&[1]).unwrap(),
        QuadraticForm::diagonal(&[3]).unwrap(),
        hyperbolic(),
        QuadraticForm::new(2, vec![2, 1, 1, 2]).unwrap(),
        QuadraticForm::new(2, vec![1, 2, 2, -3]).unwrap(),
    ];
    for form in &forms {
        let table = GaussTable::compute(form, 64);
        let (small, all) = (table.max_ratio_up_to(16), table.max_ratio_up_to(64));
        assert!(all <= 2.0 * small, "{form}: {all} vs {small}");
    }
}

/// max over samples of `|F| / (q^{-d/2+0.1}·min(N^d, |β|^{-d/2}))`.
fn majorant_constant(n: u64, samples: usize, seed: u64) -> f64 {
    let form = hyperbolic();
    let d = 2.0;
    let weight = SmoothWeight::<f64>::new(2, n).unwrap();
    let direct = DirectEvaluator::new(&form, &weight.to_sequence()).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut worst = 0.0f64;
    for k in 0..samples {
        let q = rng.gen_range(1..=8u64);
        let a = loop {
            let a = rng.gen_range(0..q as i64);
            if num_integer::gcd(a, q as i64) == 1 {
                break a;
            }
        };
        let beta = rng.gen_range(-1.0..1.0) / (q as f64 * n as f64);
        let theta: Vec<f64> = if k % 2 == 0 {
            let s = gauss_sums_all_b(&form, a, q);
            let best = (0..s.len()).max_by(|&i, &j| s[i].norm().total_cmp(&s[j].norm())).unwrap() as u64;
            vec![(best / q) as f64 / q as f64, (best % q) as f64 / q as f64]
        } else {
            vec![rng.gen(), rng.gen()]
        };
        let f: Complex64 = direct.eval(a as f64 / q as f64 + beta, &theta);
        let nd = (n as f64).powf(d);
        let majorant = (q as f64).powf(-d / 2.0 + 0.1) * nd.min(beta.abs().powf(-d / 2.0));
        worst = worst.max(f.norm() / majorant);
    }
    worst
}

#[test]
fn major_arc_majorant_constant_is_stable() {
    let c32 = majorant_constant(32, 50, 3);
    let c16 = majorant_constant(16, 50, 3);
    println!("major-arc majorant constant: N=16 {c16:.4}, N=32 {c32:.4}");
    assert!(c32.is_finite() && c32 <= 2.0 * c16);
}

#[test]
fn minor_part_sup_is_uniform() {
    let form = hyperbolic();
    let mut values = Vec::new();
    for n in [8u64, 16, 32] {
        let fam = MollifierFamily::<f64>::new(n).unwrap();
        let weight = SmoothWeight::<f64>::new(2, n).unwrap().to_sequence();
        let grid = TorusGrid::unshifted(1024, fast_size(weight.width()), 2).unwrap();
        let ev = GridEvaluator::new(&form, &weight, &grid, SumKind::Smoothed, n).unwrap();
        let sup = ev
            .fold_slices(
                || 0.0f64,
                |acc, j, slice| {
                    let m = fam.minor_multiplier(grid.alpha(j)).abs();
                    if m > 0.0 {
                        *acc = slice.iter().fold(*acc, |x, z| x.max(z.norm() * m));
                    }
                },
            )
            .into_iter()
            .fold(0.0, f64::max);
        values.push(sup / n as f64);
    }
    println!("minor-part sup / N: {values:?}");
    assert!(values.windows(2).all(|w| w[1] <= 2.0 * w[0]), "{values:?}");
}

fn piece_bound_constant(n: u64, samples: usize, seed: u64) -> f64 {
    let form = hyperbolic();
    let fam = MollifierFamily::<f64>::new(n).unwrap();
    let weight = SmoothWeight::<f64>::new(2, n).unwrap();
    let pieces = fam.pieces().to_vec();
    let m_max = 2 * form.frequency_bound(n) as i64;
    let l_max = 2 * n as i64 - 1;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut worst = 0.0f64;
    for _ in 0..samples {
        let (q, s) = pieces[rng.gen_range(0..pieces.len())];
        let m = rng.gen_range(-m_max..=m_max);
        let l = [rng.gen_range(-l_max..=l_max), rng.gen_range(-l_max..=l_max)];
        let coeff = fam.piece_fourier_coeff(&form, &weight, q, s, m, &l).unwrap().norm();
        let k = m - form.evaluate(&l).unwrap();
        let width = (1u64 << s) as f64 * n as f64;
        let bound = q as f64 / width * truncated_divisor(k, 2 * q) as f64
            + (q * q) as f64 / ((1u64 << s) as f64 * (n as f64).powf(1.9));
        worst = worst.max(coeff / bound);
    }
    worst
}

#[test]
fn piece_fourier_bound_constant_is_stable() {
    let c32 = piece_bound_constant(32, 1000, 4);
    let c64 = piece_bound_constant(64, 1000, 4);
    println!("piece Fourier bound constant: N=32 {c32:.4}, N=64 {c64:.4}");
    assert!(c32.is_finite() && c32 > 0.0);
    assert!(c64 <= 2.0 * c32);
}

#[test]
fn extremizer_exact_count_slope() {
    let form = hyperbolic();
    let pts: Vec<(f64, f64)> = [4u64, 8, 16, 32]
        .iter()
        .map(|&n| {
            let a = Coefficients::diagonal_extremizer(1, n).unwrap();
            (n as f64, even_moment_exact(&form, &a, 4).unwrap().value)
        })
        .collect();
    let raw = fit_loglog(&pts).unwrap();
    assert!((2.75..=3.25).contains(&raw.slope), "{}", raw.slope);
    // Unit normalization divides by ‖a‖₂⁴ = N².
    let unit: Vec<(f64, f64)> = pts.iter().map(|&(n, v)| (n, v / (n * n))).collect();
    assert!((fit_loglog(&unit).unwrap().slope - 1.0).abs() < 0.25);
}

#[test]
fn power_law_fits_are_exact() {
    for e in [0.5, 1.0, 2.25, 3.0, 4.5] {
        let pts: Vec<(f64, f64)> = [3.0f64, 7.0, 12.0, 40.0].iter().map(|&n| (n, 0.3 * n.powf(e))).collect();
        let f = fit_loglog(&pts).unwrap();
        assert!((f.slope - e).abs() < 1e-10 && f.residual_rms < 1e-10);
    }
}

#[test]
fn level_set_exponent_proxy() {
    let exp = ScalingExperiment {
        form: hyperbolic(),
        family: SequenceFamily::Ones,
        n_list: vec![8, 16, 32],
        p: 4.0,
        c: 1.0,
        grid: GridPolicy::Budgeted { max_cells: 1 << 24 },
        offsets: 3,
        seed: 12,
        level_factors: vec![1.5],
        exact_oracle: false,
    };
    let values: Vec<f64> = run_experiment(&exp)
        .unwrap()
        .iter()
        .map(|p| level_set_normalized(p.report.as_ref().unwrap(), 2, 4.5)[0].1)
        .collect();
    let (lo, hi) = values.iter().fold((f64::MAX, 0.0f64), |(l, h), &v| (l.min(v), h.max(v)));
    println!("normalized level-set values: {values:?}");
    assert!(lo > 0.0 && hi <= 4.0 * lo, "{values:?}");
}
