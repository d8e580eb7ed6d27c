use fraclog::kernels::SymbolKind;
use fraclog::pointwise::*;
use fraclog::quadrature::GaussLegendre;
use fraclog::specfun::EULER_GAMMA;
use fraclog::test_functions::AnalyticTestFunction;
use fraclog::OperatorParams;
use proptest::prelude::*;
use std::f64::consts::{LN_2, PI};

fn gaussian(n: usize) -> AnalyticTestFunction {
    AnalyticTestFunction::gaussian(vec![0.0; n], 1.0, 1.0).unwrap()
}

#[test]
fn pv_and_fourier_routes_agree() {
    for n in [1, 2] {
        for s in [0.25, 0.5, 0.75] {
            for x0 in [0.0, 0.7] {
                let mut x = vec![0.0; n];
                x[0] = x0;
                let p = OperatorParams::new(n, s).unwrap();
                let pv = eval_fraclog_pv(&gaussian(n), &x, &p).unwrap();
                let f = eval_fraclog_fourier(&gaussian(n), &x, &p).unwrap();
                assert!(
                    (pv.value - f.value).abs() <= 1e-4 * (1.0 + f.value.abs()),
                    "n={n} s={s} x={x0}"
                );
                assert!(f.imaginary.abs() < 1e-10);
            }
        }
    }
}

#[test]
fn fraclap_examples() {
    let p = OperatorParams::new(1, 0.5).unwrap();
    let v = eval_fraclap(&gaussian(1), &[0.0], &p).unwrap();
    assert!((v.value - 2.0 / (2.0 * PI).sqrt()).abs() < 1e-9);
    let b = AnalyticTestFunction::bump(vec![0.0], 0.5, 1.0).unwrap();
    assert!(eval_fraclap(&b, &[2.0], &p).unwrap().value < 0.0);
    assert_eq!(
        eval_fraclap(&gaussian(1).scaled(0.0), &[0.3], &p)
            .unwrap()
            .value,
        0.0
    );
}

#[test]
fn fourier_fractional_kind_equals_fraclap() {
    for n in [1, 2] {
        let p = OperatorParams::new(n, 0.4).unwrap();
        let mut x = vec![0.0; n];
        x[0] = 0.3;
        let a = eval_fraclap(&gaussian(n), &x, &p).unwrap().value;
        let b = eval_fourier(&gaussian(n), &x, SymbolKind::Fractional, &p)
            .unwrap()
            .value;
        assert!((a - b).abs() < 1e-8, "{a} vs {b}");
    }
}

#[test]
fn loglap_examples() {
    let p = OperatorParams::new(1, 0.5).unwrap();
    let v = eval_loglap(&gaussian(1), &[0.0]).unwrap().value;
    let f = eval_fourier(&gaussian(1), &[0.0], SymbolKind::Logarithmic, &p)
        .unwrap()
        .value;
    assert!((v - f).abs() < 1e-6);
    assert!((v + EULER_GAMMA + LN_2).abs() < 1e-8);
    assert_eq!(
        eval_loglap(&gaussian(1).scaled(0.0), &[0.0]).unwrap().value,
        0.0
    );
    // PV part alone at the maximum of a bump is nonnegative
    let b = AnalyticTestFunction::bump(vec![0.0], 0.8, 1.0).unwrap();
    let full = eval_loglap(&b, &[0.0]).unwrap().value;
    let rho = fraclog::specfun::constants(&p).rho_n;
    let far_and_local = rho * b.value(&[0.0]);
    // far-field term vanishes because the support lies inside the unit ball
    assert!(full - far_and_local >= 0.0);
}

#[test]
fn fraclog_anchor() {
    let p = OperatorParams::new(1, 0.5).unwrap();
    let anchor = 2.0 * (LN_2 - EULER_GAMMA) / (2.0 * PI).sqrt();
    assert!(
        (eval_fraclog_fourier(&gaussian(1), &[0.0], &p)
            .unwrap()
            .value
            - anchor)
            .abs()
            < 1e-6
    );
    assert!((eval_fraclog_pv(&gaussian(1), &[0.0], &p).unwrap().value - anchor).abs() < 1e-6);
    assert_eq!(
        eval_fraclog_pv(&gaussian(1).scaled(0.0), &[0.0], &p)
            .unwrap()
            .value,
        0.0
    );
}

/// Brute-force tensor Gauss–Legendre over the square [−R, R]² in frequency.
#[test]
fn fourier_2d_matches_tensor_quadrature() {
    let p = OperatorParams::new(2, 0.5).unwrap();
    let rule = GaussLegendre::new(20);
    let r = 9.0;
    let panels = 36;
    let h = 2.0 * r / panels as f64;
    let mut nodes = Vec::new();
    for k in 0..panels {
        let a = -r + k as f64 * h;
        for (t, w) in rule.nodes().iter().zip(rule.weights()) {
            nodes.push((a + 0.5 * h * (t + 1.0), 0.5 * h * w));
        }
    }
    let mut sum = 0.0;
    for &(x1, w1) in &nodes {
        for &(x2, w2) in &nodes {
            let rho = (x1 * x1 + x2 * x2).sqrt();
            if rho == 0.0 {
                continue;
            }
            let sym = rho * 2.0 * rho.ln();
            sum += w1 * w2 * sym * (-0.5 * rho * rho).exp();
        }
    }
    let oracle = sum / (2.0 * PI);
    let v = eval_fraclog_fourier(&gaussian(2), &[0.0, 0.0], &p)
        .unwrap()
        .value;
    assert!((v - oracle).abs() < 1e-6, "{v} vs {oracle}");
}

#[test]
fn diff_quotient_is_second_order() {
    let p = OperatorParams::new(1, 0.5).unwrap();
    let u = gaussian(1);
    let reference = eval_fraclog_fourier(&u, &[0.0], &p).unwrap().value;
    let errs: Vec<f64> = [1e-2, 1e-3, 1e-4]
        .iter()
        .map(|&h| (diff_quotient(&u, &[0.0], &p, h).unwrap().value - reference).abs())
        .collect();
    for w in errs.windows(2) {
        assert!((w[0] / w[1]).log10() >= 1.8, "{errs:?}");
    }
    let pv = eval_fraclog_pv(&u, &[0.0], &p).unwrap().value;
    assert!((diff_quotient(&u, &[0.0], &p, 1e-3).unwrap().value - pv).abs() < 1e-4);
    assert_eq!(
        diff_quotient(&u.scaled(0.0), &[0.0], &p, 1e-3)
            .unwrap()
            .value,
        0.0
    );
}

#[test]
fn small_order_sweep_decreases() {
    let grid: Vec<Vec<f64>> = (0..41).map(|i| vec![-4.0 + 0.2 * i as f64]).collect();
    let d = small_order_sweep(&gaussian(1), &grid, &[0.1, 0.05, 0.025]).unwrap();
    assert!(d[0] > d[1] && d[1] > d[2], "{d:?}");
    assert_eq!(
        small_order_sweep(&gaussian(1), &grid[..3], &[0.1])
            .unwrap()
            .len(),
        1
    );
    let zero = small_order_sweep(&gaussian(1).scaled(0.0), &grid[..5], &[0.1, 0.05]).unwrap();
    assert!(zero.iter().all(|&v| v == 0.0));
    assert!(small_order_sweep(&gaussian(1), &grid[..1], &[0.3]).is_err());
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn linearity(alpha in -5.0f64..5.0, s in 0.1f64..0.9, x in -2.0f64..2.0) {
        let p = OperatorParams::new(1, s).unwrap();
        let u = AnalyticTestFunction::gaussian(vec![0.2], 0.7, 1.3).unwrap();
        let v = u.scaled(alpha);
        for (a, b) in [
            (eval_fraclap(&u, &[x], &p).unwrap().value, eval_fraclap(&v, &[x], &p).unwrap().value),
            (eval_loglap(&u, &[x]).unwrap().value, eval_loglap(&v, &[x]).unwrap().value),
            (eval_fraclog_pv(&u, &[x], &p).unwrap().value, eval_fraclog_pv(&v, &[x], &p).unwrap().value),
        ] {
            prop_assert!((alpha * a - b).abs() <= 1e-13 * (alpha * a).abs().max(1e-300) + 1e-15);
        }
    }

    #[test]
    fn translation_equivariance(shift in -3.0f64..3.0, x in -1.5f64..1.5, s in 0.2f64..0.8) {
        let p = OperatorParams::new(1, s).unwrap();
        for u in [
            AnalyticTestFunction::gaussian(vec![0.0], 0.9, 1.0).unwrap(),
            AnalyticTestFunction::bump(vec![0.0], 0.9, 1.0).unwrap(),
        ] {
            let a = eval_fraclog_pv(&u, &[x], &p).unwrap().value;
            let b = eval_fraclog_pv(&u.translated(&[shift]), &[x + shift], &p).unwrap().value;
            prop_assert!((a - b).abs() < 1e-9 * (1.0 + a.abs()));
        }
    }
}
