//! Half-space extension of (−Δ)^{s+Log} in one space dimension.
//!
//! With ρ = (y − x)/t and α = (n + 2s)/2,
//! w(x,t) = p/t ∫ u(y)(1+ρ²)^{−α} dy and
//! v(x,t) = −p/t ∫ u(y) ln(1+ρ²)(1+ρ²)^{−α} dy.
//! Panels are graded geometrically at scale t around y = x and refined to
//! the width of u elsewhere.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::parallel;
use crate::quadrature::{gl16, gl24, graded_toward_start, merge_breaks, refine_breaks};
use crate::specfun::OperatorParams;
use crate::test_functions::{AnalyticTestFunction, Family};

/// Smallest height at which the graded panels stay representable.
pub const MIN_HEIGHT: f64 = 1e-6;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExtensionEvaluation {
    pub w: f64,
    pub v: f64,
    pub x: Vec<f64>,
    pub t: f64,
    /// |GL24 − GL16| summed over both functions.
    pub quadrature_error: f64,
}

fn check(u: &AnalyticTestFunction, x: &[f64], params: &OperatorParams) -> Result<()> {
    if params.n() != 1 {
        return Err(Error::Unsupported(format!(
            "half-space extension is implemented for n = 1 only, got n = {}",
            params.n()
        )));
    }
    if u.dim() != 1 {
        return Err(Error::config(format!(
            "test function must be one-dimensional, got dimension {}",
            u.dim()
        )));
    }
    u.check_point(x)
}

fn check_height(t: f64) -> Result<()> {
    if !t.is_finite() || t <= 0.0 {
        return Err(Error::domain(format!("height t must be positive, got {t}")));
    }
    if t < MIN_HEIGHT {
        return Err(Error::Resolution(format!(
            "height t = {t:e} is below the minimum {MIN_HEIGHT:e}"
        )));
    }
    Ok(())
}

fn panels(u: &AnalyticTestFunction, x: f64, t: f64) -> Vec<f64> {
    let c = u.center[0];
    let r = u.support_radius();
    let (lo, hi) = (c - r, c + r);
    let mut pts = Vec::new();
    let mut g = 0.5;
    while g * t < 4.0 * r + (x - c).abs() {
        pts.push(x - g * t);
        pts.push(x + g * t);
        g *= 2.0;
    }
    pts.push(x);
    let fine = match u.family {
        Family::Gaussian => u.width / 8.0,
        Family::Bump => u.width / 16.0,
    };
    refine_breaks(&merge_breaks(pts, lo, hi), fine)
}

fn integrate(
    u: &AnalyticTestFunction,
    x: f64,
    t: f64,
    params: &OperatorParams,
    breaks: &[f64],
) -> (f64, f64, f64) {
    let alpha = 0.5 * (1.0 + 2.0 * params.s());
    let p = params.constants().p_ns;
    let run = |rule: &crate::quadrature::GaussLegendre| {
        let mut w = 0.0;
        let mut v = 0.0;
        for pair in breaks.windows(2) {
            let (a, b) = (pair[0], pair[1]);
            let half = 0.5 * (b - a);
            let mid = 0.5 * (a + b);
            for (z, wt) in rule.nodes().iter().zip(rule.weights()) {
                let y = mid + half * z;
                let rho = (y - x) / t;
                let q = rho * rho;
                let k = (1.0 + q).powf(-alpha) * u.value(&[y]) * wt * half;
                w += k;
                v -= k * q.ln_1p();
            }
        }
        (p * w / t, p * v / t)
    };
    let (w, v) = run(gl24());
    let (w16, v16) = run(gl16());
    (w, v, (w - w16).abs() + (v - v16).abs())
}

/// w and v at (x, t) by graded Gauss–Legendre quadrature over y.
pub fn eval_extension(
    u: &AnalyticTestFunction,
    x: &[f64],
    t: f64,
    params: &OperatorParams,
) -> Result<ExtensionEvaluation> {
    check(u, x, params)?;
    check_height(t)?;
    let (w, v, err) = integrate(u, x[0], t, params, &panels(u, x[0], t));
    Ok(ExtensionEvaluation {
        w,
        v,
        x: x.to_vec(),
        t,
        quadrature_error: err,
    })
}

/// Normalized residual of div(t^{1−2s}∇v) = 2t^{−2s}∂_t w at (x, t).
///
/// Both sides use central differences with step h on a panel set frozen at
/// the center of the stencil, so quadrature error stays smooth in (x, t).
pub fn pde_residual(
    u: &AnalyticTestFunction,
    x: &[f64],
    t: f64,
    params: &OperatorParams,
    h: f64,
) -> Result<f64> {
    check(u, x, params)?;
    if !(h > 0.0 && t > 2.0 * h && t.is_finite()) {
        return Err(Error::domain(format!(
            "require t > 2h > 0, got t = {t}, h = {h}"
        )));
    }
    check_height(t - h)?;
    let x0 = x[0];
    let breaks = panels(u, x0, t);
    let at = |dx: f64, dt: f64| {
        let (w, v, _) = integrate(u, x0 + dx, t + dt, params, &breaks);
        (w, v)
    };
    let (_, v0) = at(0.0, 0.0);
    let (_, vxp) = at(h, 0.0);
    let (_, vxm) = at(-h, 0.0);
    let (wtp, vtp) = at(0.0, h);
    let (wtm, vtm) = at(0.0, -h);
    let e = 1.0 - 2.0 * params.s();
    let x_term = t.powf(e) * (vxp - 2.0 * v0 + vxm) / (h * h);
    let t_term =
        ((t + 0.5 * h).powf(e) * (vtp - v0) - (t - 0.5 * h).powf(e) * (v0 - vtm)) / (h * h);
    let rhs = 2.0 * t.powf(-2.0 * params.s()) * (wtp - wtm) / (2.0 * h);
    let scale = x_term.abs().max(t_term.abs()).max(rhs.abs());
    if scale == 0.0 {
        return Ok(0.0);
    }
    Ok((x_term + t_term - rhs).abs() / scale)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DtnSample {
    pub t: f64,
    pub w: f64,
    pub v: f64,
    /// −d_s[(b − 2 ln t)t^{−2s}(w − u(x)) + t^{−2s}(v − b1 u(x))].
    pub dtn_term: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DtnResult {
    pub value: f64,
    pub samples: Vec<DtnSample>,
    /// Exponent γ in the fitted error model t^γ ln t, t^γ, t².
    pub exponent: f64,
    pub warning: Option<String>,
}

/// The boundary expression at each t, extrapolated to t = 0.
///
/// Boundary values are substituted exactly: w(x,0) = u(x), v(x,0) = b1·u(x).
/// The error model is L + A t^γ ln t + B t^γ + C t² with γ = 2 − 2s, fitted
/// exactly through the smallest heights available.
pub fn dtn_limit(
    u: &AnalyticTestFunction,
    x: &[f64],
    params: &OperatorParams,
    t_list: &[f64],
) -> Result<DtnResult> {
    check(u, x, params)?;
    if t_list.is_empty() {
        return Err(Error::config("t_list must not be empty"));
    }
    if t_list.windows(2).any(|w| w[1] >= w[0]) {
        return Err(Error::config("t_list must be strictly decreasing"));
    }
    if let Some(t) = t_list.iter().find(|t| !(**t >= 1e-4) || !t.is_finite()) {
        return Err(Error::domain(format!(
            "heights must be at least 1e-4, got {t}"
        )));
    }
    let k = params.constants();
    let s = params.s();
    let ux = u.value(x);
    let samples = parallel::map_slice(t_list, |&t| -> Result<DtnSample> {
        let e = eval_extension(u, x, t, params)?;
        let ts = t.powf(-2.0 * s);
        let term = -k.d_s * ((k.b_ns - 2.0 * t.ln()) * ts * (e.w - ux) + ts * (e.v - k.b1 * ux));
        Ok(DtnSample {
            t,
            w: e.w,
            v: e.v,
            dtn_term: term,
        })
    })
    .into_iter()
    .collect::<Result<Vec<_>>>()?;

    let gamma = 2.0 - 2.0 * s;
    let basis: Vec<Box<dyn Fn(f64) -> f64>> = {
        let mut b: Vec<Box<dyn Fn(f64) -> f64>> = vec![
            Box::new(|_| 1.0),
            Box::new(move |t: f64| t.powf(gamma) * t.ln()),
            Box::new(move |t: f64| t.powf(gamma)),
        ];
        if (gamma - 2.0).abs() > 0.1 {
            b.push(Box::new(|t: f64| t * t));
        }
        b
    };
    let m = basis.len().min(samples.len());
    let used = &samples[samples.len() - m..];
    let value = if m == 1 {
        used[0].dtn_term
    } else {
        let a = DMatrix::from_fn(m, m, |i, j| basis[j](used[i].t));
        let rhs = DVector::from_iterator(m, used.iter().map(|d| d.dtn_term));
        match a.lu().solve(&rhs) {
            Some(c) => c[0],
            None => used[m - 1].dtn_term,
        }
    };

    let gaps: Vec<f64> = samples.iter().map(|d| (d.dtn_term - value).abs()).collect();
    let warning = if gaps.windows(2).any(|g| g[1] > g[0]) {
        Some(format!(
            "non-monotone convergence of the boundary expression: deviations {gaps:?}"
        ))
    } else {
        None
    };
    Ok(DtnResult {
        value,
        samples,
        exponent: gamma,
        warning,
    })
}

/// p_{n,s}∫ −ln(|z|²+1)(|z|²+1)^{−(n+2s)/2} dz by quadrature, for n = 1, 2.
///
/// With |z| = tan θ the integral becomes
/// 2|S^{n−1}|∫_0^{π/2} ln(cos θ) sin^{n−1}θ cos^{2s−1}θ dθ; the endpoint
/// singularity is graded and its last sliver integrated in closed form.
pub fn b1_integral(params: &OperatorParams) -> f64 {
    let n = params.n() as i32;
    let s = params.s();
    let k = params.constants();
    let half_pi = std::f64::consts::FRAC_PI_2;
    // φ = π/2 − θ; integrand ln(sin φ) cos^{n−1}φ sin^{2s−1}φ
    let f = |phi: f64| phi.sin().ln() * phi.cos().powi(n - 1) * phi.sin().powf(2.0 * s - 1.0);
    let eps = 1e-12;
    let br = graded_toward_start(eps, half_pi, 0.25, 24);
    let body = gl24().composite(&br, f);
    // ∫_0^ε φ^{2s−1} ln φ dφ
    let head = -crate::quadrature::power_log_head(2.0 * s, eps)[1];
    2.0 * k.p_ns * k.sphere_measure * (body + head)
}
