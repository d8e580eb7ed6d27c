//! Acceptance suite: one test per criterion, each printing a PASS/FAIL line.
//! Run with `cargo test -p fraclog-cli --test acceptance -- --nocapture`.

use std::f64::consts::{LN_2, PI};

use fraclog::dirichlet::{
    alpha_r, assemble, coercivity_threshold, solve_eigs, solve_generalized, solve_poisson,
};
use fraclog::dirichlet::{AssemblyRoute, Discretization};
use fraclog::domain::{DomainSpec, Grid};
use fraclog::energy::{form_via_multiplier, CompactField, FormTables};
use fraclog::extension::{b1_integral, dtn_limit, eval_extension};
use fraclog::pointwise::{diff_quotient, eval_fraclog_fourier, eval_fraclog_pv, small_order_sweep};
use fraclog::quadrature::{gl24, graded_toward_start};
use fraclog::spectral::*;
use fraclog::test_functions::AnalyticTestFunction;
use fraclog::OperatorParams;
use rand::{RngExt, SeedableRng};
use rand_chacha::ChaCha8Rng;
use sha2::{Digest, Sha256};

const EULER: f64 = 0.577_215_664_901_532_9;

fn verdict(id: u32, name: &str, pass: bool, detail: String) {
    println!(
        "criterion {id:>2} [{}] {name}: {detail}",
        if pass { "PASS" } else { "FAIL" }
    );
    assert!(pass, "criterion {id} failed: {detail}");
}

fn sci(v: &[f64]) -> String {
    v.iter()
        .map(|x| format!("{x:.2e}"))
        .collect::<Vec<_>>()
        .join(", ")
}

fn hex(bytes: &[u8]) -> String {
    bytes.iter().map(|b| format!("{b:02x}")).collect()
}

fn p(n: usize, s: f64) -> OperatorParams {
    OperatorParams::new(n, s).unwrap()
}

fn gaussian(n: usize) -> AnalyticTestFunction {
    AnalyticTestFunction::gaussian(vec![0.0; n], 1.0, 1.0).unwrap()
}

fn bump_fn(t: f64) -> f64 {
    if t.abs() < 1.0 {
        (-1.0 / (1.0 - t * t)).exp()
    } else {
        0.0
    }
}

#[test]
fn c01_closed_form_constants() {
    let k = p(1, 0.5).constants();
    let k2 = p(2, 0.5).constants();
    let devs = [
        k.c_ns - 1.0 / PI,
        k.b_ns - (2.0 - 2.0 * EULER),
        k.d_s - 1.0,
        k.b1 + 2.0 * LN_2,
        k2.rho_n - (2.0 * LN_2 - 2.0 * EULER),
    ];
    let worst = devs.iter().fold(0.0f64, |m, d| m.max(d.abs()));
    verdict(
        1,
        "closed-form constants",
        worst <= 1e-12,
        format!("max abs deviation {worst:.2e} (tol 1e-12)"),
    );
}

#[test]
fn c02_derivative_identity() {
    let mut worst = 0.0f64;
    for n in [1, 2] {
        for i in 1..=19 {
            worst =
                worst.max(fraclog::specfun::b_derivative_check(n, 0.05 * i as f64, 1e-5).unwrap());
        }
    }
    verdict(
        2,
        "b = d/ds ln c",
        worst < 1e-7,
        format!("max relative discrepancy {worst:.2e} (tol 1e-7)"),
    );
}

#[test]
fn c03_representation_equivalence() {
    let mut worst = 0.0f64;
    let mut count = 0;
    for (n, s, x) in [
        (1, 0.1, vec![0.0]),
        (1, 0.3, vec![0.5]),
        (1, 0.5, vec![0.0]),
        (1, 0.5, vec![1.2]),
        (1, 0.7, vec![2.0]),
        (1, 0.9, vec![0.3]),
        (2, 0.1, vec![0.0, 0.0]),
        (2, 0.3, vec![0.4, -0.2]),
        (2, 0.5, vec![0.0, 0.0]),
        (2, 0.5, vec![1.0, 0.5]),
        (2, 0.7, vec![0.2, 0.2]),
        (2, 0.9, vec![-1.5, 0.0]),
    ] {
        let params = p(n, s);
        let a = eval_fraclog_pv(&gaussian(n), &x, &params).unwrap().value;
        let b = eval_fraclog_fourier(&gaussian(n), &x, &params)
            .unwrap()
            .value;
        worst = worst.max(((a - b) / b).abs());
        count += 1;
    }
    let anchor = 2.0 * (LN_2 - EULER) / (2.0 * PI).sqrt();
    let v = eval_fraclog_fourier(&gaussian(1), &[0.0], &p(1, 0.5))
        .unwrap()
        .value;
    let dev = (v - anchor).abs();
    verdict(
        3,
        "PV vs Fourier representations",
        count == 12 && worst <= 1e-4 && dev <= 1e-6,
        format!("{count} cases, max relative gap {worst:.2e} (tol 1e-4); anchor {v:.8} vs {anchor:.8}, dev {dev:.1e} (tol 1e-6)"),
    );
}

#[test]
fn c04_derivative_definition() {
    let params = p(1, 0.5);
    let u = gaussian(1);
    let reference = eval_fraclog_fourier(&u, &[0.0], &params).unwrap().value;
    let errs: Vec<f64> = [1e-2, 1e-3, 1e-4]
        .iter()
        .map(|&h| (diff_quotient(&u, &[0.0], &params, h).unwrap().value - reference).abs())
        .collect();
    let orders: Vec<f64> = errs.windows(2).map(|w| (w[0] / w[1]).log10()).collect();
    let pass = orders.iter().all(|&o| o >= 1.8);
    verdict(
        4,
        "difference quotient in s",
        pass,
        format!(
            "errors {}, observed orders {orders:.2?} (min 1.8)",
            sci(&errs)
        ),
    );
}

#[test]
fn c05_small_order_stability() {
    let grid: Vec<Vec<f64>> = (0..41).map(|i| vec![-4.0 + 0.2 * i as f64]).collect();
    let d = small_order_sweep(&gaussian(1), &grid, &[0.1, 0.05, 0.025]).unwrap();
    let pass = d[0] > d[1] && d[1] > d[2];
    verdict(
        5,
        "small-order stability",
        pass,
        format!("sup deviations {} for s = 0.1, 0.05, 0.025", sci(&d)),
    );
}

#[test]
fn c06_plancherel_form_identity() {
    let params = p(1, 0.5);
    let gap = |cells: usize| {
        let g = Grid::new(DomainSpec::interval(-0.15, 0.15).unwrap(), cells).unwrap();
        let u = CompactField::from_fn(g.clone(), |x| bump_fn(x[0] / 0.15));
        let kernel = FormTables::new(&g, &params)
            .unwrap()
            .breakdown(&u)
            .unwrap()
            .e_plus;
        let mult = form_via_multiplier(&u, &params).unwrap();
        ((kernel - mult) / kernel).abs()
    };
    let (a, b) = (gap(128), gap(256));
    verdict(
        6,
        "kernel vs multiplier E+",
        a <= 1e-3 && b < a,
        format!("relative gap {a:.2e} at 128 cells, {b:.2e} at 256 (tol 1e-3, must improve)"),
    );
}

#[test]
fn c07_inequality_suite() {
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    let params = p(1, 0.5);
    let g = Grid::new(DomainSpec::interval(-0.15, 0.15).unwrap(), 32).unwrap();
    let t = FormTables::new(&g, &params).unwrap();
    let names = [
        "E- bound",
        "small-diameter bound",
        "split bound",
        "Poincare positivity",
        "modulus contraction",
    ];
    let mut worst = [f64::INFINITY; 5];
    for _ in 0..100 {
        let c: Vec<f64> = (0..g.interior_count())
            .map(|_| rng.random_range(-1.0..1.0))
            .collect();
        let u = CompactField::from_coefficients(g.clone(), &c).unwrap();
        let scale = t.breakdown(&u).unwrap().e_s;
        let split = [0.1, 0.3, 0.6]
            .iter()
            .map(|&r| t.split_bound_slack(&u, r).unwrap())
            .fold(f64::INFINITY, f64::min);
        let vals = [
            t.e_minus_bound_slack(&u).unwrap() / scale,
            t.small_diameter_slack(&u).unwrap() / scale,
            split / scale,
            t.poincare_ratio(&u).unwrap(),
            t.modulus_contraction(&u).unwrap() / scale,
        ];
        for (w, v) in worst.iter_mut().zip(vals) {
            *w = w.min(v);
        }
    }
    let pass = worst[..3].iter().chain(&worst[4..]).all(|&v| v >= -1e-8) && worst[3] > 0.0;
    let detail = names
        .iter()
        .zip(&worst)
        .map(|(n, w)| format!("{n} {w:.2e}"))
        .collect::<Vec<_>>()
        .join(", ");
    verdict(
        7,
        "form inequalities over 100 seeded fields",
        pass,
        format!("min normalized slack: {detail}"),
    );
}

#[test]
fn c08_dual_route_galerkin() {
    let d = DomainSpec::interval(-0.15, 0.15).unwrap();
    let params = p(1, 0.5);
    let disc = Discretization::new(&d, 128).unwrap();
    let a = solve_eigs(
        &assemble(&d, &disc, &params, AssemblyRoute::Kernel).unwrap(),
        10,
    )
    .unwrap();
    let b = solve_eigs(
        &assemble(&d, &disc, &params, AssemblyRoute::TorusSymbol).unwrap(),
        10,
    )
    .unwrap();
    let gap = a
        .eigenvalues
        .iter()
        .zip(&b.eigenvalues)
        .map(|(x, y)| ((x - y) / x).abs())
        .fold(0.0, f64::max);
    let v = a.eigenvectors.as_ref().unwrap().column(0).clone_owned();
    let one_signed = v.iter().all(|x| *x >= -1e-8 * v.amax());
    let pass = gap <= 0.02 && a.eigenvalues[0] > 0.0 && one_signed;
    verdict(
        8,
        "kernel vs torus-symbol Dirichlet eigenvalues",
        pass,
        format!("max relative gap {gap:.2e} over 10 (tol 2e-2), lambda1 = {:.4}, one-signed = {one_signed}", a.eigenvalues[0]),
    );
}

#[test]
fn c09_poisson_certification() {
    let params = p(1, 0.5);
    let thr = coercivity_threshold(&params, 0.1);
    let al = alpha_r(&params, 0.1);
    let hand_thr = 8.0 / PI + 40.0 * (2.0 - 2.0 * EULER) / PI;
    let hand_al = 1.0 - (2.0 - 2.0 * EULER) / (2.0 * 10f64.ln());
    let d = DomainSpec::interval(-0.15, 0.15).unwrap();
    let sys = assemble(
        &d,
        &Discretization::new(&d, 48).unwrap(),
        &params,
        AssemblyRoute::Kernel,
    )
    .unwrap();
    let nodes = sys.grid.node_count();
    let shifted = &sys.stiffness + &sys.mass * 14.0;
    let (low, _, _) = solve_generalized(&shifted, &sys.mass, 1).unwrap();
    let f: Vec<f64> = (0..nodes)
        .map(|k| bump_fn(sys.grid.node_point(k)[0] / 0.15))
        .collect();
    let sol = solve_poisson(&sys, &vec![14.0; nodes], &f, 0.1).unwrap();
    let zero = solve_poisson(&sys, &vec![14.0; nodes], &vec![0.0; nodes], 0.1).unwrap();
    let zero_exact = zero.coefficients.iter().all(|c| *c == 0.0);
    let pass = (thr - hand_thr).abs() <= 1e-6
        && (al - hand_al).abs() <= 1e-6
        && (thr - 13.31).abs() < 5e-3
        && (al - 0.8164).abs() < 5e-5
        && low[0] > 0.0
        && sol.certificate.certified
        && sol.a_priori_ratio <= 1.0
        && zero_exact;
    verdict(
        9,
        "Poisson coercivity certificate",
        pass,
        format!(
            "threshold {thr:.6} (hand {hand_thr:.6}), alpha_r {al:.6} (hand {hand_al:.6}), min eig of S+14M {:.3}, a priori ratio {:.4}, f=0 gives u=0: {zero_exact}",
            low[0], sol.a_priori_ratio
        ),
    );
}

fn phase_space_quadrature(l: f64, params: &OperatorParams) -> f64 {
    let r = symbol_ball_radius(l, params).unwrap();
    let n = params.n() as i32;
    let s = params.s();
    let mut br = graded_toward_start(0.0, r.min(1.0), 0.3, 40);
    if r > 1.0 {
        let m = (r.ceil() as usize).max(2) * 4;
        br.extend((1..=m).map(|k| 1.0 + (r - 1.0) * k as f64 / m as f64));
    }
    let f = |rho: f64| (l - 2.0 * rho.powf(2.0 * s) * rho.ln()) * rho.powi(n - 1);
    params.constants().sphere_measure * gl24().composite(&br, f)
}

#[test]
fn c10_weyl_identities() {
    let side = 2.0 * PI;
    let mut rng = ChaCha8Rng::seed_from_u64(10);
    let mut notes = Vec::new();

    // lattice-ball identity
    let mut mismatches = 0;
    for n in [1, 2] {
        let params = p(n, 0.5);
        let top = if n == 1 { 1e4 } else { 2e3 };
        let eigs = torus_spectrum(side, &params, top).unwrap();
        let lambdas: Vec<f64> = (0..50).map(|_| rng.random_range(0.01..top)).collect();
        let data = counting(&eigs, &lambdas).unwrap();
        for (l, c) in lambdas.iter().zip(&data.counts) {
            if *c != lattice_ball_count(side, n, symbol_ball_radius(*l, &params).unwrap()) {
                mismatches += 1;
            }
        }
    }
    notes.push(format!("lattice mismatches {mismatches}/100"));

    // radius residual
    let mut worst_res = 0.0f64;
    for s in [0.1, 0.5, 0.9] {
        let params = p(1, s);
        for e in -2..=8 {
            let l = 10f64.powi(e);
            let r = symbol_ball_radius(l, &params).unwrap();
            worst_res = worst_res.max((2.0 * r.powf(2.0 * s) * r.ln() - l).abs() / l);
        }
    }
    notes.push(format!("radius residual {worst_res:.1e}"));

    // phase-space closed form
    let mut worst_ps = 0.0f64;
    for (n, s) in [(1, 0.5), (1, 0.2), (2, 0.5), (2, 0.8)] {
        let params = p(n, s);
        for l in [0.1, 1.0, 50.0, 300.0] {
            let a = phase_space_riesz(l, &params).unwrap();
            let b = phase_space_quadrature(l, &params);
            worst_ps = worst_ps.max(((a - b) / b).abs());
        }
    }
    notes.push(format!("phase-space gap {worst_ps:.1e}"));

    // Riesz brackets
    let params = p(1, 0.5);
    let eigs = torus_spectrum(side, &params, 3000.0).unwrap();
    let mut brackets = true;
    for k in 1..=60 {
        let l = 50.0 * k as f64;
        let hi = counting(&eigs, &[l]).unwrap();
        for kappa in [l / 10.0, l / 100.0] {
            let lo = counting(&eigs, &[l - kappa]).unwrap();
            brackets &= hi.riesz[0] - lo.riesz[0] <= kappa * hi.counts[0] as f64 * (1.0 + 1e-12);
        }
    }
    notes.push(format!("Riesz brackets hold {brackets}"));

    // geometric ratio
    let lambdas: Vec<f64> = [500.0f64, 1000.0, 5000.0]
        .iter()
        .map(|r| 2.0 * r * r.ln())
        .collect();
    let eigs = torus_spectrum(side, &params, *lambdas.last().unwrap()).unwrap();
    let an = counting_analysis(&eigs, &lambdas, side, &params).unwrap();
    let geo = an
        .geometric_ratio
        .iter()
        .fold(0.0f64, |m, g| m.max((g - 1.0).abs()));
    notes.push(format!("geometric ratio deviation {geo:.1e}"));

    // k-th law drift
    let eigs = torus_spectrum(side, &params, 2.2e5).unwrap();
    let law = kth_eigenvalue_law(&eigs[..20000], &params, side).unwrap();
    let dev: Vec<f64> = [100, 1000, 5000, 20000]
        .iter()
        .map(|&k| (law.ratios[k - 2].1 - law.target).abs() / law.target)
        .collect();
    let drift = dev.windows(2).all(|w| w[1] < w[0]) && dev[3] <= 0.3;
    notes.push(format!(
        "k-th law relative deviation at k = 100, 1e3, 5e3, 2e4: {dev:.3?}"
    ));

    let pass = mismatches == 0
        && worst_res <= 1e-10
        && worst_ps <= 1e-8
        && brackets
        && geo <= 0.01
        && drift;
    verdict(10, "Weyl structural identities", pass, notes.join("; "));
}

#[test]
fn c11_extension() {
    let bump = AnalyticTestFunction::bump(vec![0.0], 1.0, 1.0).unwrap();
    let mut trace_ok = true;
    for s in [0.3, 0.5, 0.7] {
        let params = p(1, s);
        let b1 = params.constants().b1;
        let ux = bump.value(&[0.2]);
        let dv: Vec<f64> = [0.1, 0.03, 0.01]
            .iter()
            .map(|&t| (eval_extension(&bump, &[0.2], t, &params).unwrap().v - b1 * ux).abs())
            .collect();
        trace_ok &= dv.windows(2).all(|w| w[1] < w[0]);
    }
    let ts = [0.1, 0.05, 0.025, 0.0125];
    let mut worst = 0.0f64;
    for (s, x) in [(0.3, 0.0), (0.5, 0.0), (0.5, 0.7), (0.7, 0.4)] {
        let params = p(1, s);
        let r = dtn_limit(&gaussian(1), &[x], &params, &ts).unwrap().value;
        let f = eval_fraclog_fourier(&gaussian(1), &[x], &params)
            .unwrap()
            .value;
        worst = worst.max(((r - f) / f).abs());
    }
    let b1 = [(1, 0.2), (1, 0.5), (2, 0.5), (2, 0.8)]
        .iter()
        .map(|&(n, s)| (b1_integral(&p(n, s)) - p(n, s).constants().b1).abs())
        .fold(0.0f64, f64::max);
    let pass = trace_ok && worst <= 1e-2 && b1 <= 1e-8;
    verdict(
        11,
        "half-space extension",
        pass,
        format!("v trace monotone {trace_ok}; DtN max relative gap {worst:.2e} (tol 1e-2); b1 integral gap {b1:.1e} (tol 1e-8)"),
    );
}

fn run_hash(args: &[&str]) -> (i32, String) {
    let mut out = Vec::new();
    let mut err = Vec::new();
    let code = fraclog_cli::run(
        std::iter::once("fraclog").chain(args.iter().copied()),
        &mut out,
        &mut err,
    );
    (code, hex(&Sha256::digest(&out)))
}

#[test]
fn c12_determinism() {
    let commands: Vec<Vec<&str>> = vec![
        vec!["constants", "--n", "2", "--s", "0.3"],
        vec!["symbol", "--kind", "fraclog"],
        vec!["apply", "--points", "0,0.5,1.5"],
        vec!["form", "--fields", "5", "--seed", "9"],
        vec!["eig", "--elements", "48", "--route", "torus_symbol"],
        vec!["poisson", "--elements", "32"],
        vec!["weyl", "--lambda-max", "500"],
        vec!["extension"],
        vec!["selftest", "--seed", "3"],
    ];
    let mut ok = true;
    for c in &commands {
        let (a, ha) = run_hash(c);
        let (b, hb) = run_hash(c);
        ok &= a == 0 && b == 0 && ha == hb;
    }
    let dir = std::env::temp_dir().join(format!("fraclog-acceptance-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    let prefix = dir.join("form");
    let prefix = prefix.to_str().unwrap();
    let mut digests = Vec::new();
    for _ in 0..2 {
        let (code, _) = run_hash(&["form", "--fields", "3", "--out", prefix]);
        ok &= code == 0;
        let bytes = [
            std::fs::read(dir.join("form.csv")).unwrap(),
            std::fs::read(dir.join("form.json")).unwrap(),
        ]
        .concat();
        digests.push(hex(&Sha256::digest(&bytes)));
    }
    std::fs::remove_dir_all(&dir).ok();
    ok &= digests[0] == digests[1];
    verdict(
        12,
        "byte-identical reruns",
        ok,
        format!(
            "{} commands hashed twice, file outputs {}",
            commands.len(),
            &digests[0][..12]
        ),
    );
}
