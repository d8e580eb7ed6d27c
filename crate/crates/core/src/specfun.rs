//! Special functions (Γ, ψ, J₀) and the normalization constants of the
//! fractional, logarithmic and fractional-logarithmic operators.
//!
//! Γ and ψ shift the argument up to at least 10 with the recurrence and then
//! apply the Stirling / asymptotic series with Bernoulli coefficients. The
//! target accuracy is about 14 significant digits, which is what every
//! downstream tolerance in the crate is calibrated against.

use std::f64::consts::{LN_2, PI};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Euler–Mascheroni constant.
pub const EULER_GAMMA: f64 = 0.577_215_664_901_532_9;

const SHIFT_THRESHOLD: f64 = 10.0;

// B_{2k} / (2k (2k-1)) for the Stirling series of ln Γ.
const STIRLING: [f64; 8] = [
    1.0 / 12.0,
    -1.0 / 360.0,
    1.0 / 1260.0,
    -1.0 / 1680.0,
    1.0 / 1188.0,
    -691.0 / 360360.0,
    1.0 / 156.0,
    -3617.0 / 122400.0,
];

// B_{2k} / (2k) for the asymptotic series of ψ.
const DIGAMMA_ASYM: [f64; 7] = [
    1.0 / 12.0,
    -1.0 / 120.0,
    1.0 / 252.0,
    -1.0 / 240.0,
    1.0 / 132.0,
    -691.0 / 32760.0,
    1.0 / 12.0,
];

fn check_positive(x: f64, name: &str) -> Result<()> {
    if x.is_finite() && x > 0.0 {
        Ok(())
    } else {
        Err(Error::domain(format!(
            "{name} requires a positive finite argument, got {x}"
        )))
    }
}

/// ln Γ(x) for x ≥ 10 by the Stirling series.
fn ln_gamma_large(x: f64) -> f64 {
    let inv = 1.0 / x;
    let inv2 = inv * inv;
    let mut series = 0.0;
    let mut pow = inv;
    for c in STIRLING {
        series += c * pow;
        pow *= inv2;
    }
    (x - 0.5) * x.ln() - x + 0.5 * (2.0 * PI).ln() + series
}

/// Γ(x) for x > 0.
pub fn gamma_fn(x: f64) -> Result<f64> {
    check_positive(x, "gamma")?;
    if x == x.floor() && x <= 21.0 {
        // exact factorials
        let mut acc = 1.0;
        let mut k = 2.0;
        while k < x {
            acc *= k;
            k += 1.0;
        }
        return Ok(acc);
    }
    let mut y = x;
    let mut denom = 1.0;
    while y < SHIFT_THRESHOLD {
        denom *= y;
        y += 1.0;
    }
    Ok(ln_gamma_large(y).exp() / denom)
}

/// ln Γ(x) for x > 0.
pub fn ln_gamma(x: f64) -> Result<f64> {
    check_positive(x, "ln_gamma")?;
    let mut y = x;
    let mut log_denom = 0.0;
    while y < SHIFT_THRESHOLD {
        log_denom += y.ln();
        y += 1.0;
    }
    Ok(ln_gamma_large(y) - log_denom)
}

/// Digamma ψ(x) = Γ'(x)/Γ(x) for x > 0.
pub fn digamma(x: f64) -> Result<f64> {
    check_positive(x, "digamma")?;
    let mut y = x;
    let mut acc = 0.0;
    while y < SHIFT_THRESHOLD {
        acc -= 1.0 / y;
        y += 1.0;
    }
    let inv2 = 1.0 / (y * y);
    let mut series = 0.0;
    let mut pow = inv2;
    for c in DIGAMMA_ASYM {
        series += c * pow;
        pow *= inv2;
    }
    Ok(acc + y.ln() - 0.5 / y - series)
}

/// Bessel function J₀(t).
///
/// Power series for |t| ≤ 8, trapezoidal rule on the periodic integral
/// representation up to 30, Hankel asymptotics beyond.
pub fn bessel_j0(t: f64) -> f64 {
    let t = t.abs();
    if t <= 8.0 {
        let q = -0.25 * t * t;
        let mut term: f64 = 1.0;
        let mut sum: f64 = 1.0;
        let mut k = 1.0;
        while term.abs() > 1e-18 * sum.abs().max(1e-300) || k < 3.0 {
            term *= q / (k * k);
            sum += term;
            k += 1.0;
            if k > 80.0 {
                break;
            }
        }
        sum
    } else if t <= 30.0 {
        // J0(t) = (1/π) ∫_0^π cos(t sin θ) dθ; the integrand is smooth and
        // even-periodic, so the trapezoid rule converges geometrically.
        let m = 96;
        let h = PI / m as f64;
        let mut sum = 0.5 * (1.0 + (t * PI.sin()).cos());
        for j in 1..m {
            sum += (t * (j as f64 * h).sin()).cos();
        }
        sum / m as f64
    } else {
        // Hankel expansion: t_k = a_k(0) / t^k with a_k(0) built recursively;
        // P = t_0 - t_2 + t_4 - ..., Q = t_1 - t_3 + ...
        let z8 = 8.0 * t;
        let mut p = 1.0;
        let mut q = 0.0;
        let mut term: f64 = 1.0;
        for k in 1..40usize {
            let kf = k as f64;
            let next = term * (-(2.0 * kf - 1.0) * (2.0 * kf - 1.0)) / (kf * z8);
            if next.abs() > term.abs() {
                break;
            }
            term = next;
            let sign = if (k / 2) % 2 == 0 { 1.0 } else { -1.0 };
            if k % 2 == 1 {
                q += sign * term;
            } else {
                p += sign * term;
            }
            if term.abs() < 1e-17 {
                break;
            }
        }
        let chi = t - 0.25 * PI;
        (2.0 / (PI * t)).sqrt() * (p * chi.cos() - q * chi.sin())
    }
}

/// 1 − J₀(t), accurate for small t.
pub fn one_minus_j0(t: f64) -> f64 {
    let t = t.abs();
    if t <= 2.0 {
        let q = -0.25 * t * t;
        let mut term: f64 = 1.0;
        let mut sum: f64 = 0.0;
        let mut k = 1.0;
        loop {
            term *= q / (k * k);
            sum -= term;
            if term.abs() <= 1e-18 * sum.abs().max(1e-300) || k > 60.0 {
                break;
            }
            k += 1.0;
        }
        sum
    } else {
        1.0 - bessel_j0(t)
    }
}

/// Surface measure |𝕊^{n−1}| of the unit sphere in ℝⁿ.
pub fn sphere_measure(n: usize) -> f64 {
    let h = n as f64 / 2.0;
    2.0 * PI.powf(h) / gamma_fn(h).expect("positive")
}

/// Volume ω_n of the unit ball in ℝⁿ.
pub fn ball_volume(n: usize) -> f64 {
    let h = n as f64 / 2.0;
    PI.powf(h) / gamma_fn(h + 1.0).expect("positive")
}

/// Spatial dimension and differentiation order, the parameter pair shared by
/// every computation in the crate.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawParams", into = "RawParams")]
pub struct OperatorParams {
    n: usize,
    s: f64,
}

#[derive(Serialize, Deserialize)]
struct RawParams {
    n: usize,
    s: f64,
}

impl TryFrom<RawParams> for OperatorParams {
    type Error = Error;
    fn try_from(raw: RawParams) -> Result<Self> {
        OperatorParams::new(raw.n, raw.s)
    }
}

impl From<OperatorParams> for RawParams {
    fn from(p: OperatorParams) -> Self {
        RawParams { n: p.n, s: p.s }
    }
}

impl OperatorParams {
    pub fn new(n: usize, s: f64) -> Result<Self> {
        if !(s > 0.0 && s < 1.0) {
            return Err(Error::config(format!("order s must lie in (0,1), got {s}")));
        }
        if !(n == 1 || n == 2) {
            return Err(Error::config(format!(
                "dimension n must be 1 or 2, got {n}"
            )));
        }
        Ok(Self { n, s })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn s(&self) -> f64 {
        self.s
    }

    /// Same dimension, different order.
    pub fn with_order(&self, s: f64) -> Result<Self> {
        Self::new(self.n, s)
    }

    pub fn constants(&self) -> OperatorConstants {
        constants(self)
    }
}

/// Every closed-form constant attached to an [`OperatorParams`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OperatorConstants {
    /// Normalization of (−Δ)^s.
    pub c_ns: f64,
    /// Logarithmic derivative of `c_ns` in s.
    pub b_ns: f64,
    /// Poisson-kernel normalization of the half-space extension.
    pub p_ns: f64,
    /// c_ns / p_ns, independent of n.
    pub d_s: f64,
    /// Boundary trace constant of the s-derivative of the extension.
    pub b1: f64,
    /// Constant term of the logarithmic Laplacian.
    pub rho_n: f64,
    /// Kernel constant of the logarithmic Laplacian.
    pub c_n: f64,
    pub sphere_measure: f64,
    pub ball_volume: f64,
}

/// c_{n,s} for any positive dimension.
pub fn c_ns(n: usize, s: f64) -> f64 {
    let nf = n as f64;
    let lg = ln_gamma(0.5 * (nf + 2.0 * s)).expect("positive") - ln_gamma(1.0 - s).expect("s < 1");
    (2.0 * s * LN_2 - 0.5 * nf * PI.ln() + lg).exp() * s
}

/// b_{n,s} = d/ds ln c_{n,s}.
pub fn b_ns(n: usize, s: f64) -> f64 {
    let nf = n as f64;
    2.0 * LN_2
        + 1.0 / s
        + digamma(1.0 - s).expect("s < 1")
        + digamma(0.5 * (nf + 2.0 * s)).expect("positive")
}

/// p_{n,s}, the Poisson-kernel normalization.
pub fn p_ns(n: usize, s: f64) -> f64 {
    let nf = n as f64;
    (ln_gamma(0.5 * (nf + 2.0 * s)).expect("positive")
        - ln_gamma(s).expect("positive")
        - 0.5 * nf * PI.ln())
    .exp()
}

pub fn constants(params: &OperatorParams) -> OperatorConstants {
    let (n, s) = (params.n, params.s);
    let nf = n as f64;
    let c = c_ns(n, s);
    let p = p_ns(n, s);
    let d_s = (2.0 * s * LN_2 + ln_gamma(1.0 + s).unwrap() - ln_gamma(1.0 - s).unwrap()).exp();
    OperatorConstants {
        c_ns: c,
        b_ns: b_ns(n, s),
        p_ns: p,
        d_s,
        b1: digamma(s).unwrap() - digamma(0.5 * (nf + 2.0 * s)).unwrap(),
        rho_n: 2.0 * LN_2 + digamma(0.5 * nf).unwrap() - EULER_GAMMA,
        c_n: (ln_gamma(0.5 * nf).unwrap() - 0.5 * nf * PI.ln()).exp(),
        sphere_measure: sphere_measure(n),
        ball_volume: ball_volume(n),
    }
}

/// Relative discrepancy between the central difference of c_{n,s} in s and
/// the closed form c_{n,s}·b_{n,s}.
pub fn b_derivative_check(n: usize, s: f64, h: f64) -> Result<f64> {
    if n == 0 {
        return Err(Error::domain("dimension must be positive"));
    }
    if !(h > 0.0) || !(s - h > 0.0 && s + h < 1.0) {
        return Err(Error::domain(format!(
            "step {h} leaves (0,1) around s = {s}"
        )));
    }
    let fd = (c_ns(n, s + h) - c_ns(n, s - h)) / (2.0 * h);
    let exact = c_ns(n, s) * b_ns(n, s);
    Ok((fd - exact).abs() / exact.abs())
}

/// Absolute discrepancy between b1 and the central difference of −ln p_{n,s}.
pub fn b1_derivative_check(n: usize, s: f64, h: f64) -> Result<f64> {
    if !(h > 0.0) || !(s - h > 0.0 && s + h < 1.0) {
        return Err(Error::domain(format!(
            "step {h} leaves (0,1) around s = {s}"
        )));
    }
    let fd = -(p_ns(n, s + h).ln() - p_ns(n, s - h).ln()) / (2.0 * h);
    let b1 = digamma(s)? - digamma(0.5 * (n as f64 + 2.0 * s))?;
    Ok((fd - b1).abs())
}

/// The order s₀ ∈ (0,1) at which b_{n,s} changes sign, by bisection on
/// the bracket [lo, hi].
pub fn b_sign_change(n: usize, lo: f64, hi: f64) -> Result<f64> {
    let (mut a, mut b) = (lo, hi);
    let (fa, fb) = (b_ns(n, a), b_ns(n, b));
    if !(fa > 0.0 && fb < 0.0) {
        return Err(Error::domain(format!(
            "b_{{n,s}} does not change sign on [{lo}, {hi}]"
        )));
    }
    for _ in 0..200 {
        let m = 0.5 * (a + b);
        if b_ns(n, m) > 0.0 {
            a = m;
        } else {
            b = m;
        }
        if b - a < 1e-15 {
            break;
        }
    }
    Ok(0.5 * (a + b))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn gamma_reference_values() {
        assert_eq!(gamma_fn(1.0).unwrap(), 1.0);
        assert_eq!(gamma_fn(4.0).unwrap(), 6.0);
        let sqrt_pi = 1.7724538509055159;
        assert!((gamma_fn(0.5).unwrap() - sqrt_pi).abs() / sqrt_pi < 1e-13);
        // Γ(x+1) = xΓ(x) across the shift threshold
        for &x in &[0.1, 0.37, 2.5, 9.3, 9.99, 10.5, 33.3] {
            let lhs = gamma_fn(x + 1.0).unwrap();
            let rhs = x * gamma_fn(x).unwrap();
            assert!((lhs - rhs).abs() / lhs < 1e-13, "x = {x}");
        }
        // reflection Γ(x)Γ(1-x) = π / sin(πx)
        for &x in &[0.1, 0.25, 0.4, 0.75] {
            let lhs = gamma_fn(x).unwrap() * gamma_fn(1.0 - x).unwrap();
            let rhs = PI / (PI * x).sin();
            assert!((lhs - rhs).abs() / rhs < 1e-13, "x = {x}");
        }
    }

    #[test]
    fn gamma_rejects_nonpositive() {
        assert!(gamma_fn(0.0).is_err());
        assert!(gamma_fn(-1.5).is_err());
        assert!(digamma(0.0).is_err());
        assert!(digamma(f64::NAN).is_err());
    }

    #[test]
    fn digamma_reference_values() {
        assert!((digamma(1.0).unwrap() + EULER_GAMMA).abs() < 1e-12);
        assert!((digamma(0.5).unwrap() - (-1.9635100260214235)).abs() < 1e-12);
        assert!((digamma(2.0).unwrap() - 0.4227843350984671).abs() < 1e-12);
    }

    #[test]
    fn digamma_matches_series_oracle() {
        // ψ(x) = -γ + Σ_{k≥0} (1/(k+1) - 1/(k+x)), summed with an integral tail.
        for &x in &[0.05, 0.3, 1.7, 4.2, 12.5] {
            let kmax = 200_000usize;
            let mut sum = 0.0;
            for k in (0..kmax).rev() {
                let k = k as f64;
                sum += 1.0 / (k + 1.0) - 1.0 / (k + x);
            }
            // tail Σ_{k≥K} (x-1)/((k+1)(k+x)) ≈ (x-1)/(K + x/2)
            let kf = kmax as f64;
            sum += (x - 1.0) / (kf + 0.5 * x);
            let oracle = -EULER_GAMMA + sum;
            assert!((digamma(x).unwrap() - oracle).abs() < 1e-9, "x = {x}");
        }
    }

    #[test]
    fn j0_reference_values() {
        // zeros and values from standard tables
        assert!((bessel_j0(0.0) - 1.0).abs() < 1e-15);
        assert!((bessel_j0(1.0) - 0.7651976865579666).abs() < 1e-14);
        assert!((bessel_j0(5.0) - (-0.1775967713143383)).abs() < 1e-13);
        assert!((bessel_j0(10.0) - (-0.2459357644513483)).abs() < 1e-13);
        assert!(bessel_j0(2.404825557695773).abs() < 1e-13);
        assert!((bessel_j0(50.0) - 0.05581232766925181).abs() < 1e-13);
        assert!((bessel_j0(100.0) - 0.01998585030422312).abs() < 1e-13);
        // continuity across the branch points
        for &t in &[8.0, 30.0] {
            let a = bessel_j0(t * (1.0 - 1e-12));
            let b = bessel_j0(t * (1.0 + 1e-12));
            assert!((a - b).abs() < 1e-10, "t = {t}");
        }
        assert!((one_minus_j0(1e-4) - (2.5e-9 - 1.5625e-18)).abs() < 1e-24);
    }

    #[test]
    fn closed_form_constants_half_order() {
        let p = OperatorParams::new(1, 0.5).unwrap();
        let k = p.constants();
        assert!((k.c_ns - 1.0 / PI).abs() < 1e-12);
        assert!((k.b_ns - (2.0 - 2.0 * EULER_GAMMA)).abs() < 1e-12);
        assert!((k.d_s - 1.0).abs() < 1e-12);
        assert!((k.b1 + 2.0 * LN_2).abs() < 1e-12);
        assert!((k.sphere_measure - 2.0).abs() < 1e-14);
        assert!((k.ball_volume - 2.0).abs() < 1e-14);

        let p2 = OperatorParams::new(2, 0.5).unwrap();
        let k2 = p2.constants();
        assert!((k2.b_ns - (4.0 - 2.0 * EULER_GAMMA - 2.0 * LN_2)).abs() < 1e-12);
        assert!((k2.rho_n - (2.0 * LN_2 - 2.0 * EULER_GAMMA)).abs() < 1e-12);
        assert!((k2.c_n - 1.0 / PI).abs() < 1e-14);
        assert!((k2.ball_volume - PI).abs() < 1e-14);
    }

    #[test]
    fn params_validation() {
        assert!(OperatorParams::new(1, 0.0).is_err());
        assert!(OperatorParams::new(1, 1.0).is_err());
        assert!(OperatorParams::new(3, 0.5).is_err());
        assert!(OperatorParams::new(0, 0.5).is_err());
        let err = OperatorParams::new(1, 1.5).unwrap_err().to_string();
        assert!(err.contains("(0,1)"));
    }

    #[test]
    fn d_s_independent_of_dimension() {
        for &s in &[0.1, 0.5, 0.9] {
            let d1 = OperatorParams::new(1, s).unwrap().constants();
            let d2 = OperatorParams::new(2, s).unwrap().constants();
            assert!((d1.d_s - d2.d_s).abs() < 1e-13 * d1.d_s);
            assert!((d1.c_ns / d1.p_ns - d1.d_s).abs() < 1e-12 * d1.d_s);
            assert!((d2.c_ns / d2.p_ns - d2.d_s).abs() < 1e-12 * d2.d_s);
        }
    }

    #[test]
    fn derivative_checks() {
        assert!(b_derivative_check(1, 0.5, 1e-5).unwrap() < 1e-8);
        assert!(b_derivative_check(2, 0.25, 1e-5).unwrap() < 1e-8);
        let coarse = b_derivative_check(1, 0.5, 1e-3).unwrap();
        let fine = b_derivative_check(1, 0.5, 1e-4).unwrap();
        let ratio = coarse / fine;
        assert!(ratio > 100.0 / 3.0 && ratio < 300.0, "ratio {ratio}");
        assert!(b_derivative_check(1, 0.5, 0.6).is_err());
    }

    #[test]
    fn b_monotone_and_sign_change() {
        for n in [1, 2] {
            let grid: Vec<f64> = (1..20).map(|k| 0.05 * k as f64).collect();
            for w in grid.windows(2) {
                assert!(b_ns(n, w[1]) < b_ns(n, w[0]));
            }
            assert!(b_ns(n, 0.55) > 0.0 && b_ns(n, 0.99) < 0.0);
            let s0 = b_sign_change(n, 0.55, 0.99).unwrap();
            assert!(s0 > 0.5 && s0 < 1.0);
            assert!(b_ns(n, s0).abs() < 1e-10);
        }
    }

    #[test]
    fn small_order_limit_of_cb() {
        for n in [1, 2] {
            let s = 1e-3;
            let cn = OperatorParams::new(n, 0.5).unwrap().constants().c_n;
            let cb = c_ns(n, s) * b_ns(n, s);
            assert!((cb - cn).abs() < 0.01 * cn);
        }
    }
}
