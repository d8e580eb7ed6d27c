//! Gauss–Legendre and Gauss–Kronrod quadrature on panels.

use std::sync::OnceLock;

use crate::error::{Error, Result};

/// An n-point Gauss–Legendre rule on [-1, 1].
#[derive(Debug, Clone)]
pub struct GaussLegendre {
    nodes: Vec<f64>,
    weights: Vec<f64>,
}

impl GaussLegendre {
    pub fn new(order: usize) -> Self {
        assert!(order >= 1, "Gauss-Legendre order must be positive");
        let n = order;
        let mut nodes = vec![0.0; n];
        let mut weights = vec![0.0; n];
        let nf = n as f64;
        for i in 0..n.div_ceil(2) {
            // Chebyshev-like initial guess, then Newton on P_n.
            let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (nf + 0.5)).cos();
            let mut dp = 1.0;
            for _ in 0..100 {
                let (mut p0, mut p1) = (1.0, x);
                for k in 2..=n {
                    let kf = k as f64;
                    let p2 = ((2.0 * kf - 1.0) * x * p1 - (kf - 1.0) * p0) / kf;
                    p0 = p1;
                    p1 = p2;
                }
                let pn = if n == 1 { x } else { p1 };
                let pm = if n == 1 { 1.0 } else { p0 };
                dp = nf * (x * pn - pm) / (x * x - 1.0);
                let dx = pn / dp;
                x -= dx;
                if dx.abs() < 1e-16 {
                    break;
                }
            }
            let w = 2.0 / ((1.0 - x * x) * dp * dp);
            nodes[i] = -x;
            nodes[n - 1 - i] = x;
            weights[i] = w;
            weights[n - 1 - i] = w;
        }
        if n % 2 == 1 {
            nodes[n / 2] = 0.0;
        }
        Self { nodes, weights }
    }

    pub fn order(&self) -> usize {
        self.nodes.len()
    }

    pub fn nodes(&self) -> &[f64] {
        &self.nodes
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    /// ∫_a^b f.
    #[inline]
    pub fn integrate<F: FnMut(f64) -> f64>(&self, a: f64, b: f64, mut f: F) -> f64 {
        let half = 0.5 * (b - a);
        let mid = 0.5 * (a + b);
        let mut sum = 0.0;
        for (x, w) in self.nodes.iter().zip(&self.weights) {
            sum += w * f(mid + half * x);
        }
        sum * half
    }

    /// Sum of the rule over consecutive panels given by sorted breakpoints.
    pub fn composite<F: FnMut(f64) -> f64>(&self, breaks: &[f64], mut f: F) -> f64 {
        breaks
            .windows(2)
            .filter(|w| w[1] > w[0])
            .map(|w| self.integrate(w[0], w[1], &mut f))
            .sum()
    }
}

/// Shared 8-, 16- and 24-point rules.
pub fn gl8() -> &'static GaussLegendre {
    static RULE: OnceLock<GaussLegendre> = OnceLock::new();
    RULE.get_or_init(|| GaussLegendre::new(8))
}

pub fn gl16() -> &'static GaussLegendre {
    static RULE: OnceLock<GaussLegendre> = OnceLock::new();
    RULE.get_or_init(|| GaussLegendre::new(16))
}

pub fn gl24() -> &'static GaussLegendre {
    static RULE: OnceLock<GaussLegendre> = OnceLock::new();
    RULE.get_or_init(|| GaussLegendre::new(24))
}

/// Breakpoints `a, a + (b-a) q^{levels}, …, a + (b-a) q, b`, graded
/// geometrically toward `a` with ratio `q`.
pub fn graded_toward_start(a: f64, b: f64, ratio: f64, levels: usize) -> Vec<f64> {
    let mut pts = Vec::with_capacity(levels + 2);
    pts.push(a);
    for k in (1..=levels).rev() {
        pts.push(a + (b - a) * ratio.powi(k as i32));
    }
    pts.push(b);
    pts
}

/// Splits every panel of `breaks` so no panel exceeds `max_width`.
pub fn refine_breaks(breaks: &[f64], max_width: f64) -> Vec<f64> {
    let mut out = Vec::with_capacity(breaks.len());
    for w in breaks.windows(2) {
        out.push(w[0]);
        let len = w[1] - w[0];
        if len > max_width {
            let m = (len / max_width).ceil() as usize;
            for j in 1..m {
                out.push(w[0] + len * j as f64 / m as f64);
            }
        }
    }
    if let Some(&last) = breaks.last() {
        out.push(last);
    }
    out
}

/// Sorted, deduplicated breakpoints clipped to [lo, hi].
pub fn merge_breaks(mut pts: Vec<f64>, lo: f64, hi: f64) -> Vec<f64> {
    pts.retain(|p| p.is_finite() && *p >= lo && *p <= hi);
    pts.push(lo);
    pts.push(hi);
    pts.sort_by(|a, b| a.partial_cmp(b).unwrap());
    pts.dedup_by(|a, b| (*a - *b).abs() <= 1e-14 * a.abs().max(b.abs()));
    pts
}

/// ∫_0^ε r^{p−1}(−ln r)^j dr for j = 0, 1 (p > 0, ε < 1).
pub fn power_log_head(p: f64, eps: f64) -> [f64; 2] {
    let ep = eps.powf(p);
    [ep / p, ep * (-eps.ln()) / p + ep / (p * p)]
}

#[allow(clippy::excessive_precision)]
const GK_XK: [f64; 8] = [
    0.991455371120812639206854697526329,
    0.949107912342758524526189684047851,
    0.864864423359769072789712788640926,
    0.741531185599394439863864773280788,
    0.586087235467691130294144845693013,
    0.405845151377397166906606412076961,
    0.207784955007898467600689403773245,
    0.000000000000000000000000000000000,
];
#[allow(clippy::excessive_precision)]
const GK_WK: [f64; 8] = [
    0.022935322010529224963732008058970,
    0.063092092629978553290700663189204,
    0.104790010322250183839876322541518,
    0.140653259715525918745189590510238,
    0.169004726639267902826583426598550,
    0.190350578064785409913256402421014,
    0.204432940075298892414161999234649,
    0.209482141084727828012999174891714,
];
#[allow(clippy::excessive_precision)]
const GK_WG: [f64; 4] = [
    0.129484966168869693270611432679082,
    0.279705391489276667901467771423780,
    0.381830050505118944950369775488975,
    0.417959183673469387755102040816327,
];

/// One 7/15-point Gauss–Kronrod step: (Kronrod value, |Kronrod − Gauss|).
pub fn gk15<F: FnMut(f64) -> f64>(a: f64, b: f64, f: &mut F) -> (f64, f64) {
    let half = 0.5 * (b - a);
    let mid = 0.5 * (a + b);
    let fc = f(mid);
    let mut k = fc * GK_WK[7];
    let mut g = fc * GK_WG[3];
    for j in 0..7 {
        let dx = half * GK_XK[j];
        let f1 = f(mid - dx);
        let f2 = f(mid + dx);
        k += GK_WK[j] * (f1 + f2);
        if j % 2 == 1 {
            g += GK_WG[j / 2] * (f1 + f2);
        }
    }
    (k * half, ((k - g) * half).abs())
}

/// Outcome of an adaptive integration.
#[derive(Debug, Clone, Copy)]
pub struct Integral {
    pub value: f64,
    pub error: f64,
    pub evaluations: usize,
}

/// Adaptive Gauss–Kronrod integration with deterministic bisection.
///
/// Each panel is accepted when its estimate is below its share of the
/// tolerance `max(abs_tol, rel_tol·|I|)`; refinement stops at `max_depth`
/// bisection levels and reports a numerical error if the total estimate is
/// still above tolerance.
pub fn adaptive<F: FnMut(f64) -> f64>(
    mut f: F,
    a: f64,
    b: f64,
    rel_tol: f64,
    abs_tol: f64,
    max_depth: usize,
) -> Result<Integral> {
    let (whole, _) = gk15(a, b, &mut f);
    let mut evaluations = 15;
    let mut stack = vec![(a, b, 0usize)];
    let mut value: f64 = 0.0;
    let mut error: f64 = 0.0;
    let width = (b - a).abs();
    let tol_density = |scale: f64| abs_tol.max(rel_tol * scale) / width.max(1e-300);
    while let Some((lo, hi, depth)) = stack.pop() {
        let (v, e) = gk15(lo, hi, &mut f);
        evaluations += 15;
        let allowed = tol_density(whole.abs().max(value.abs())) * (hi - lo).abs();
        if e <= allowed || depth >= max_depth {
            value += v;
            error += e;
        } else {
            let m = 0.5 * (lo + hi);
            stack.push((m, hi, depth + 1));
            stack.push((lo, m, depth + 1));
        }
    }
    let tol = abs_tol.max(rel_tol * value.abs());
    if error > 10.0 * tol && error > 1e-14 * value.abs().max(1.0) {
        return Err(Error::Numerical {
            what: "adaptive quadrature".into(),
            estimate: error,
        });
    }
    Ok(Integral {
        value,
        error,
        evaluations,
    })
}
