//! Pointwise evaluation of (−Δ)^s, Log(−Δ) and (−Δ)^{s+Log} on analytic
//! test functions.
//!
//! The principal-value route integrates the symmetric second difference
//! D(y) = 2u(x) − u(x+y) − u(x−y) against radial weights
//! |y|^{−n−q}(−ln|y|)^j over the unit ball, and splits the exterior into an
//! analytic u(x) tail minus a quadrature of u(x+y) over the support. The
//! Fourier route integrates symbol × transform radially for Gaussians.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::kernels::{symbol, SymbolKind};
use crate::parallel;
use crate::quadrature::{self, gl16, gl24, power_log_head};
use crate::specfun::{bessel_j0, OperatorParams};
use crate::test_functions::{AnalyticTestFunction, Family};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Route {
    PvQuadrature,
    Fourier,
    DiffQuotient,
}

impl Route {
    pub fn as_str(&self) -> &'static str {
        match self {
            Route::PvQuadrature => "pv_quadrature",
            Route::Fourier => "fourier",
            Route::DiffQuotient => "diff_quotient",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PointEvaluation {
    pub value: f64,
    /// Refinement delta of the quadrature (GL24 vs GL16, trapezoid M vs 2M).
    pub error_estimate: f64,
    pub route: Route,
    pub nodes_used: usize,
    /// Imaginary part of the Fourier integral; zero for the other routes.
    pub imaginary: f64,
}

const NEAR_LEVELS: usize = 48;
const FOURIER_LEVELS: usize = 50;
const MAX_TRAPEZOID: usize = 1 << 14;

fn check_inputs(u: &AnalyticTestFunction, x: &[f64], params: &OperatorParams) -> Result<()> {
    u.check_point(x)?;
    if u.dim() != params.n() {
        return Err(Error::config(format!(
            "test function dimension {} does not match n = {}",
            u.dim(),
            params.n()
        )));
    }
    Ok(())
}

/// Trapezoid rule for a periodic integrand, doubled until the change falls
/// below 1e-14 of max(|value|, scale). Returns (value, last change, evals).
fn periodic_trapezoid<F: Fn(f64) -> f64>(
    f: F,
    period: f64,
    m0: usize,
    scale: f64,
) -> (f64, f64, usize) {
    let mut m = m0.max(4);
    let mut sum: f64 = (0..m).map(|k| f(period * k as f64 / m as f64)).sum();
    let mut value = sum * period / m as f64;
    let mut evals = m;
    loop {
        let mid: f64 = (0..m)
            .map(|k| f(period * (k as f64 + 0.5) / m as f64))
            .sum();
        evals += m;
        sum += mid;
        m *= 2;
        let next = sum * period / m as f64;
        let change = (next - value).abs();
        value = next;
        if change <= 1e-14 * value.abs().max(scale) || m >= MAX_TRAPEZOID {
            return (value, change, evals);
        }
    }
}

/// ∫ r^{−1−q}(−ln r)^j A(r) dr over the panels, j = 0, 1, where A returns
/// (value, error, evals).
fn radial_moments<A>(breaks: &[f64], q: f64, angular: A) -> ([f64; 2], [f64; 2], usize)
where
    A: Fn(f64) -> (f64, f64, usize) + Sync + Send,
{
    let panels: Vec<(f64, f64)> = breaks
        .windows(2)
        .filter(|w| w[1] > w[0])
        .map(|w| (w[0], w[1]))
        .collect();
    let parts = parallel::map_slice(&panels, |&(a, b)| {
        let half = 0.5 * (b - a);
        let mid = 0.5 * (a + b);
        let mut hi = [0.0; 2];
        let mut lo = [0.0; 2];
        let mut ang_err = [0.0; 2];
        let mut evals = 0;
        for (rule, acc, track) in [(gl24(), &mut hi, true), (gl16(), &mut lo, false)] {
            for (t, wt) in rule.nodes().iter().zip(rule.weights()) {
                let r = mid + half * t;
                let (val, err, ev) = angular(r);
                evals += ev;
                let base = wt * half * r.powf(-1.0 - q);
                let lg = -r.ln();
                acc[0] += base * val;
                acc[1] += base * lg * val;
                if track {
                    ang_err[0] += (base * err).abs();
                    ang_err[1] += (base * lg * err).abs();
                }
            }
        }
        let err = [
            (hi[0] - lo[0]).abs() + ang_err[0],
            (hi[1] - lo[1]).abs() + ang_err[1],
        ];
        (hi, err, evals)
    });
    let mut total = [0.0; 2];
    let mut err = [0.0; 2];
    let mut evals = 0;
    for (v, e, ev) in parts {
        for j in 0..2 {
            total[j] += v[j];
            err[j] += e[j];
        }
        evals += ev;
    }
    (total, err, evals)
}

/// Pieces of ½∫ D(y) |y|^{−n−q}(−ln|y|)^j dy.
#[derive(Debug, Clone, Copy)]
struct PvMoments {
    /// ½∫_{|y|<1} D(y) |y|^{−n−q}(−ln|y|)^j dy
    near: [f64; 2],
    /// ∫_{|y|>1} u(x+y) |y|^{−n−q}(−ln|y|)^j dy
    far: [f64; 2],
    err: [f64; 2],
    nodes: usize,
    ux: f64,
}

impl PvMoments {
    /// near + u(x)·|S|∫_1^∞ r^{−1−q}(−ln r)^j dr − far, for q > 0.
    fn total(&self, q: f64, sphere: f64) -> [f64; 2] {
        let tail = [sphere / q, -sphere / (q * q)];
        [
            self.near[0] + self.ux * tail[0] - self.far[0],
            self.near[1] + self.ux * tail[1] - self.far[1],
        ]
    }
}

fn pv_moments(u: &AnalyticTestFunction, x: &[f64], q: f64) -> PvMoments {
    let n = u.dim();
    let w = u.width;
    let big_r = u.support_radius();
    let delta: Vec<f64> = x.iter().zip(&u.center).map(|(a, c)| a - c).collect();
    let dist = delta.iter().map(|d| d * d).sum::<f64>().sqrt();
    let ux = u.value(x);
    let sup = u.sup_norm();
    let max_panel = (0.25 * w).min(0.25);

    // near field: r in (0, 1)
    let mut pts = quadrature::graded_toward_start(0.0, 1.0, 0.5, NEAR_LEVELS);
    if u.family == Family::Bump {
        pts.extend([dist + w, (dist - w).abs()]);
    }
    let pts = quadrature::refine_breaks(&quadrature::merge_breaks(pts, 0.0, 1.0), max_panel);
    let eps = pts[1];
    let hess = u.hessian(x);
    let kappa = if n == 1 {
        -hess[0][0]
    } else {
        -0.5 * std::f64::consts::PI * (hess[0][0] + hess[1][1])
    };
    let head = power_log_head(2.0 - q, eps);

    let (near_body, near_err, near_evals) = if n == 1 {
        radial_moments(&pts[1..], q, |r| (u.second_difference(x, &[r]), 0.0, 1))
    } else {
        radial_moments(&pts[1..], q, |r| {
            let scale = std::f64::consts::PI * sup * (r * r / (w * w)).min(1.0);
            let m0 = (16.0 * (1.0 + r * (dist + r) / (w * w))).ceil() as usize;
            periodic_trapezoid(
                |th| u.second_difference(x, &[r * th.cos(), r * th.sin()]),
                std::f64::consts::PI,
                m0.next_power_of_two(),
                scale,
            )
        })
    };
    let near = [
        kappa * head[0] + near_body[0],
        kappa * head[1] + near_body[1],
    ];

    // far field: u(x+y) for |y| > 1 on the support
    let lo = (dist - big_r).max(1.0);
    let hi = dist + big_r;
    let (far, far_err, far_evals) = if hi <= lo {
        ([0.0; 2], [0.0; 2], 0)
    } else {
        let pts = quadrature::merge_breaks(vec![big_r - dist], lo, hi);
        let pts = quadrature::refine_breaks(&pts, max_panel);
        if n == 1 {
            let x0 = x[0];
            radial_moments(&pts, q, |r| {
                (u.value(&[x0 + r]) + u.value(&[x0 - r]), 0.0, 2)
            })
        } else {
            radial_moments(&pts, q, |r| {
                let scale = 2.0 * std::f64::consts::PI * sup * 1e-2;
                let m0 = (16.0 * (1.0 + r * (dist + r) / (w * w))).ceil() as usize;
                periodic_trapezoid(
                    |th| u.value(&[x[0] + r * th.cos(), x[1] + r * th.sin()]),
                    2.0 * std::f64::consts::PI,
                    m0.next_power_of_two(),
                    scale,
                )
            })
        }
    };
    PvMoments {
        near,
        far,
        err: [near_err[0] + far_err[0], near_err[1] + far_err[1]],
        nodes: near_evals + far_evals,
        ux,
    }
}

fn pv_eval(value: f64, error_estimate: f64, nodes_used: usize) -> PointEvaluation {
    PointEvaluation {
        value,
        error_estimate,
        route: Route::PvQuadrature,
        nodes_used,
        imaginary: 0.0,
    }
}

/// (−Δ)^s u(x) = (c_{n,s}/2)∫ D(y)|y|^{−n−2s} dy.
pub fn eval_fraclap(
    u: &AnalyticTestFunction,
    x: &[f64],
    params: &OperatorParams,
) -> Result<PointEvaluation> {
    check_inputs(u, x, params)?;
    let q = 2.0 * params.s();
    let k = params.constants();
    let m = pv_moments(u, x, q);
    let t = m.total(q, k.sphere_measure);
    Ok(pv_eval(k.c_ns * t[0], k.c_ns * m.err[0], m.nodes))
}

/// Log(−Δ)u(x) = c_n ∫_{B₁}(u(x)−u(x+y))|y|^{−n} − c_n ∫_{|y|>1} u(x+y)|y|^{−n} + ρ_n u(x).
pub fn eval_loglap(u: &AnalyticTestFunction, x: &[f64]) -> Result<PointEvaluation> {
    let params = OperatorParams::new(u.dim(), 0.5)?;
    check_inputs(u, x, &params)?;
    let k = params.constants();
    let m = pv_moments(u, x, 0.0);
    let value = k.c_n * (m.near[0] - m.far[0]) + k.rho_n * m.ux;
    Ok(pv_eval(value, k.c_n * m.err[0], m.nodes))
}

/// c_{n,s} 𝓛₁u(x) + b_{n,s}(−Δ)^s u(x), where
/// 𝓛₁u(x) = PV∫(u(x) − u(y))(−2 ln|x−y|)|x−y|^{−n−2s} dy.
pub fn eval_fraclog_pv(
    u: &AnalyticTestFunction,
    x: &[f64],
    params: &OperatorParams,
) -> Result<PointEvaluation> {
    check_inputs(u, x, params)?;
    let q = 2.0 * params.s();
    let k = params.constants();
    let m = pv_moments(u, x, q);
    let t = m.total(q, k.sphere_measure);
    let fraclap = k.c_ns * t[0];
    let l1 = 2.0 * t[1];
    let value = k.c_ns * l1 + k.b_ns * fraclap;
    let err = k.c_ns * (2.0 * m.err[1] + k.b_ns.abs() * m.err[0]);
    Ok(pv_eval(value, err, m.nodes))
}

/// ∫_0^ε σ(ξ) ξ^{n−1} dξ.
fn symbol_head(kind: SymbolKind, n: usize, s: f64, eps: f64) -> f64 {
    let nf = n as f64;
    match kind {
        SymbolKind::Fractional => eps.powf(2.0 * s + nf) / (2.0 * s + nf),
        SymbolKind::Logarithmic => -2.0 * power_log_head(nf, eps)[1],
        SymbolKind::Fraclog => -2.0 * power_log_head(2.0 * s + nf, eps)[1],
    }
}

/// (2π)^{−n/2}∫ σ(|ξ|) û(ξ) e^{iξ·x} dξ for test functions with a
/// closed-form transform.
pub fn eval_fourier(
    u: &AnalyticTestFunction,
    x: &[f64],
    kind: SymbolKind,
    params: &OperatorParams,
) -> Result<PointEvaluation> {
    check_inputs(u, x, params)?;
    u.fourier_transform(&vec![0.0; u.dim()])?;
    let n = u.dim();
    let s = params.s();
    let w = u.width;
    let dist = x
        .iter()
        .zip(&u.center)
        .map(|(a, c)| (a - c) * (a - c))
        .sum::<f64>()
        .sqrt();
    let xi_max = 9.5 / w;
    let knee = (1.0 / w).min(xi_max);
    let mut pts = quadrature::graded_toward_start(0.0, knee, 0.5, FOURIER_LEVELS);
    pts.push(1.0);
    pts.push(xi_max);
    let pts = quadrature::merge_breaks(pts, 0.0, xi_max);
    let mut max_panel = 0.25 / w;
    if dist > 0.0 {
        max_panel = max_panel.min(0.25 * std::f64::consts::PI / dist);
    }
    let pts = quadrature::refine_breaks(&pts, max_panel);
    let eps = pts[1];

    // (re, im) of the angular integral of û(ξ)e^{iξ·x} at radius ρ, with the
    // (2π)^{−n/2} normalization folded in.
    let centered = u.translated(&u.center.iter().map(|c| -c).collect::<Vec<_>>());
    let angular = |rho: f64| -> Result<(f64, f64)> {
        if n == 1 {
            let mut re = 0.0;
            let mut im = 0.0;
            for sgn in [1.0, -1.0] {
                let xi = sgn * rho;
                let (ur, ui) = u.fourier_transform(&[xi])?;
                let (c, sn) = ((xi * x[0]).cos(), (xi * x[0]).sin());
                re += ur * c - ui * sn;
                im += ur * sn + ui * c;
            }
            let norm = (2.0 * std::f64::consts::PI).sqrt();
            Ok((re / norm, im / norm))
        } else {
            // û(ξ) = e^{−iξ·c} g(|ξ|) with g real, so the circle average is
            // 2π g(ρ) J₀(ρ|x−c|); the imaginary part is the odd-angle sum.
            let (g, _) = centered.fourier_transform(&[rho, 0.0])?;
            let re = g * bessel_j0(rho * dist);
            let m = 64;
            let mut im = 0.0;
            for k in 0..m {
                let th = 2.0 * std::f64::consts::PI * k as f64 / m as f64;
                let xi = [rho * th.cos(), rho * th.sin()];
                let (ur, ui) = u.fourier_transform(&xi)?;
                let ph = xi[0] * x[0] + xi[1] * x[1];
                im += ur * ph.sin() + ui * ph.cos();
            }
            Ok((re, im / m as f64))
        }
    };

    let panels: Vec<(f64, f64)> = pts[1..]
        .windows(2)
        .filter(|p| p[1] > p[0])
        .map(|p| (p[0], p[1]))
        .collect();
    let parts = parallel::map_slice(&panels, |&(a, b)| -> Result<(f64, f64, f64)> {
        let half = 0.5 * (b - a);
        let mid = 0.5 * (a + b);
        let mut sums = [(0.0, 0.0); 2];
        for (idx, rule) in [gl24(), gl16()].into_iter().enumerate() {
            for (t, wt) in rule.nodes().iter().zip(rule.weights()) {
                let rho = mid + half * t;
                let (re, im) = angular(rho)?;
                let f = wt * half * symbol(rho, kind, params) * rho.powi(n as i32 - 1);
                sums[idx].0 += f * re;
                sums[idx].1 += f * im;
            }
        }
        Ok((sums[0].0, sums[0].1, (sums[0].0 - sums[1].0).abs()))
    });
    let (re0, _) = angular(0.0)?;
    let mut value = re0 * symbol_head(kind, n, s, eps);
    let mut imag = 0.0;
    let mut err = 0.0;
    for p in parts {
        let (re, im, e) = p?;
        value += re;
        imag += im;
        err += e;
    }
    let per_node = if n == 1 { 2 } else { 65 };
    Ok(PointEvaluation {
        value,
        error_estimate: err,
        route: Route::Fourier,
        nodes_used: panels.len() * 40 * per_node,
        imaginary: imag,
    })
}

pub fn eval_fraclog_fourier(
    u: &AnalyticTestFunction,
    x: &[f64],
    params: &OperatorParams,
) -> Result<PointEvaluation> {
    eval_fourier(u, x, SymbolKind::Fraclog, params)
}

/// ((−Δ)^{s+h}u(x) − (−Δ)^{s−h}u(x)) / (2h).
pub fn diff_quotient(
    u: &AnalyticTestFunction,
    x: &[f64],
    params: &OperatorParams,
    h: f64,
) -> Result<PointEvaluation> {
    let s = params.s();
    if !(h > 0.0) || s - h <= 0.0 || s + h >= 1.0 {
        return Err(Error::domain(format!(
            "orders s ± h = {s} ± {h} must lie in (0, 1)"
        )));
    }
    let up = eval_fraclap(u, x, &params.with_order(s + h)?)?;
    let dn = eval_fraclap(u, x, &params.with_order(s - h)?)?;
    Ok(PointEvaluation {
        value: (up.value - dn.value) / (2.0 * h),
        error_estimate: (up.error_estimate + dn.error_estimate) / (2.0 * h),
        route: Route::DiffQuotient,
        nodes_used: up.nodes_used + dn.nodes_used,
        imaginary: 0.0,
    })
}

/// For each s, sup over the grid of |(−Δ)^{s+Log}u − Log(−Δ)u|.
pub fn small_order_sweep(
    u: &AnalyticTestFunction,
    grid: &[Vec<f64>],
    s_list: &[f64],
) -> Result<Vec<f64>> {
    if s_list.windows(2).any(|w| w[1] >= w[0]) {
        return Err(Error::config("s_list must be strictly decreasing"));
    }
    if let Some(bad) = s_list.iter().find(|&&s| !(s > 0.0 && s < 0.25)) {
        return Err(Error::Precondition(format!(
            "small-order sweep needs 0 < s < 1/4, got {bad}"
        )));
    }
    let base: Vec<f64> = parallel::map_slice(grid, |x| eval_loglap(u, x).map(|e| e.value))
        .into_iter()
        .collect::<Result<_>>()?;
    let mut out = Vec::with_capacity(s_list.len());
    for &s in s_list {
        let params = OperatorParams::new(u.dim(), s)?;
        let vals: Vec<f64> =
            parallel::map_slice(grid, |x| eval_fraclog_pv(u, x, &params).map(|e| e.value))
                .into_iter()
                .collect::<Result<_>>()?;
        let dev = vals
            .iter()
            .zip(&base)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max);
        out.push(dev);
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::specfun::EULER_GAMMA;
    use std::f64::consts::{LN_2, PI};

    fn unit_gaussian() -> AnalyticTestFunction {
        AnalyticTestFunction::gaussian(vec![0.0], 1.0, 1.0).unwrap()
    }

    #[test]
    fn fraclap_of_gaussian_at_origin() {
        let p = OperatorParams::new(1, 0.5).unwrap();
        let v = eval_fraclap(&unit_gaussian(), &[0.0], &p).unwrap();
        assert!((v.value - 2.0 / (2.0 * PI).sqrt()).abs() < 1e-10, "{v:?}");
    }

    #[test]
    fn fraclog_anchor_both_routes() {
        let p = OperatorParams::new(1, 0.5).unwrap();
        let anchor = 2.0 * (LN_2 - EULER_GAMMA) / (2.0 * PI).sqrt();
        let f = eval_fraclog_fourier(&unit_gaussian(), &[0.0], &p).unwrap();
        let pv = eval_fraclog_pv(&unit_gaussian(), &[0.0], &p).unwrap();
        assert!((f.value - anchor).abs() < 1e-10, "{f:?}");
        assert!((pv.value - anchor).abs() < 1e-9, "{pv:?}");
    }

    #[test]
    fn loglap_of_gaussian_at_origin() {
        // (2/√(2π)) ∫_0^∞ 2 ln ξ e^{−ξ²/2} dξ = −(γ + ln 2)
        let v = eval_loglap(&unit_gaussian(), &[0.0]).unwrap();
        assert!((v.value + (EULER_GAMMA + LN_2)).abs() < 1e-9, "{v:?}");
    }

    #[test]
    fn bump_rejected_by_fourier_route() {
        let b = AnalyticTestFunction::bump(vec![0.0], 1.0, 1.0).unwrap();
        let p = OperatorParams::new(1, 0.5).unwrap();
        assert!(matches!(
            eval_fraclog_fourier(&b, &[0.0], &p),
            Err(Error::Unsupported(_))
        ));
    }

    #[test]
    fn diff_quotient_domain() {
        let p = OperatorParams::new(1, 0.5).unwrap();
        assert!(diff_quotient(&unit_gaussian(), &[0.0], &p, 0.6).is_err());
    }
}
