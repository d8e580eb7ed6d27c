//! Radial kernels and Fourier symbols of (−Δ)^s, Log(−Δ) and (−Δ)^{s+Log},
//! the positive/negative kernel split, and the multiplier m(ξ) of the
//! positive-part energy.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::quadrature::{self, gl16};
use crate::specfun::{one_minus_j0, OperatorConstants, OperatorParams};

/// Values of the kernel and its parts at one radius.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct KernelSplit {
    /// K_{s+Log}(r) = c (b − 2 ln r) r^{−n−2s}
    pub full: f64,
    /// c r^{−n−2s} (−ln r)₊, supported in r < 1
    pub plus: f64,
    /// c r^{−n−2s} (ln r)₊, supported in r > 1
    pub minus: f64,
    /// c r^{−n−2s}
    pub frac: f64,
}

/// Which piece of the kernel a radial computation refers to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum KernelPart {
    Full,
    Plus,
    Minus,
    /// The bare |z|^{−n−2s} without the c_{n,s} factor, as in 𝓔_s.
    Fractional,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SymbolKind {
    Fractional,
    Logarithmic,
    Fraclog,
}

impl std::str::FromStr for SymbolKind {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "fractional" => Ok(SymbolKind::Fractional),
            "logarithmic" => Ok(SymbolKind::Logarithmic),
            "fraclog" => Ok(SymbolKind::Fraclog),
            other => Err(Error::config(format!("unknown symbol kind '{other}'"))),
        }
    }
}

/// Precomputed radial kernel evaluator for one parameter pair.
#[derive(Debug, Clone, Copy)]
pub struct RadialKernel {
    pub params: OperatorParams,
    pub consts: OperatorConstants,
}

impl RadialKernel {
    pub fn new(params: OperatorParams) -> Self {
        Self {
            params,
            consts: params.constants(),
        }
    }

    fn power(&self, r: f64) -> f64 {
        r.powf(-(self.params.n() as f64) - 2.0 * self.params.s())
    }

    /// Kernel value at radius r > 0.
    #[inline]
    pub fn value(&self, part: KernelPart, r: f64) -> f64 {
        let c = self.consts.c_ns;
        let p = self.power(r);
        match part {
            KernelPart::Full => c * (self.consts.b_ns - 2.0 * r.ln()) * p,
            KernelPart::Plus => {
                if r < 1.0 {
                    -c * r.ln() * p
                } else {
                    0.0
                }
            }
            KernelPart::Minus => {
                if r > 1.0 {
                    c * r.ln() * p
                } else {
                    0.0
                }
            }
            KernelPart::Fractional => p,
        }
    }

    /// ∫_a^∞ k(r) r^{n−1} dr, the radial tail of a kernel part.
    pub fn tail(&self, part: KernelPart, a: f64) -> f64 {
        let s = self.params.s();
        let c = self.consts.c_ns;
        // ∫_a^∞ r^{-1-2s} ln r dr
        let log_tail = |a: f64| a.powf(-2.0 * s) * (2.0 * s * a.ln() + 1.0) / (4.0 * s * s);
        match part {
            KernelPart::Fractional => a.powf(-2.0 * s) / (2.0 * s),
            KernelPart::Minus => c * log_tail(a.max(1.0)),
            KernelPart::Plus => {
                if a >= 1.0 {
                    0.0
                } else {
                    c * (log_tail(1.0) - log_tail(a))
                }
            }
            KernelPart::Full => {
                c * (self.consts.b_ns * a.powf(-2.0 * s) / (2.0 * s) - 2.0 * log_tail(a))
            }
        }
    }
}

pub fn kernel_split(r: f64, params: &OperatorParams) -> Result<KernelSplit> {
    if !(r > 0.0 && r.is_finite()) {
        return Err(Error::domain(format!(
            "kernel radius must be positive, got {r}"
        )));
    }
    let k = RadialKernel::new(*params);
    Ok(KernelSplit {
        full: k.value(KernelPart::Full, r),
        plus: k.value(KernelPart::Plus, r),
        minus: k.value(KernelPart::Minus, r),
        frac: k.consts.c_ns * k.value(KernelPart::Fractional, r),
    })
}

/// The unique zero e^{b/2} of K_{s+Log}.
pub fn kernel_sign_radius(params: &OperatorParams) -> f64 {
    (0.5 * params.constants().b_ns).exp()
}

/// Fourier symbol at |ξ|. The logarithmic symbol returns −∞ at ξ = 0.
pub fn symbol(xi_norm: f64, kind: SymbolKind, params: &OperatorParams) -> f64 {
    let s = params.s();
    match kind {
        SymbolKind::Fractional => xi_norm.powf(2.0 * s),
        SymbolKind::Logarithmic => {
            if xi_norm == 0.0 {
                f64::NEG_INFINITY
            } else {
                2.0 * xi_norm.ln()
            }
        }
        SymbolKind::Fraclog => {
            if xi_norm == 0.0 {
                0.0
            } else {
                xi_norm.powf(2.0 * s) * 2.0 * xi_norm.ln()
            }
        }
    }
}

/// 1 − cos t in 1D, 1 − J₀(t) in 2D: the spherical mean of 1 − cos(ξ·z).
#[inline]
fn angular_weight(n: usize, t: f64) -> f64 {
    if n == 1 {
        let h = (0.5 * t).sin();
        2.0 * h * h
    } else {
        one_minus_j0(t)
    }
}

/// (∫_0^ε a t^{1−2s} dt, ∫_0^ε a t^{1−2s} ln t dt) where W(t) ≈ a t² near 0.
fn small_argument_head(n: usize, s: f64, eps: f64) -> (f64, f64) {
    let a = if n == 1 { 0.5 } else { 0.25 };
    let p = 2.0 - 2.0 * s;
    let ep = eps.powf(p);
    (a * ep / p, a * ep * (eps.ln() / p - 1.0 / (p * p)))
}

/// m(ξ) = 2 ∫ (1 − cos(ξ·z)) k₊(z) dz by adaptive quadrature over the unit
/// ball in the radial variable.
pub fn form_multiplier(xi_norm: f64, params: &OperatorParams) -> Result<f64> {
    if !(xi_norm >= 0.0) {
        return Err(Error::domain("frequency norm must be nonnegative"));
    }
    if xi_norm == 0.0 {
        return Ok(0.0);
    }
    let n = params.n();
    let s = params.s();
    let consts = params.constants();
    let pref = 2.0 * consts.sphere_measure * consts.c_ns;
    let integrand = |rho: f64| {
        if rho <= 0.0 {
            return 0.0;
        }
        angular_weight(n, xi_norm * rho) * rho.powf(-1.0 - 2.0 * s) * (-rho.ln())
    };
    // geometric grading toward 0, then panels of at most a quarter period
    let knee = (1.0 / xi_norm).min(0.5);
    let mut breaks = quadrature::graded_toward_start(0.0, knee, 0.5, 60);
    breaks.pop();
    let upper = quadrature::refine_breaks(
        &[knee, 1.0],
        (0.5 * std::f64::consts::PI / xi_norm).max(1e-6),
    );
    breaks.extend(upper);
    let head = -xi_norm * xi_norm * small_argument_head(n, s, breaks[1]).1;
    let total = head + quadrature::gl24().composite(&breaks[1..], integrand);
    let coarse = head + gl16().composite(&breaks[1..], integrand);
    let err = (total - coarse).abs();
    if err > 1e-9 * total.abs() && err > 1e-15 {
        return Err(Error::Numerical {
            what: "form multiplier".into(),
            estimate: err,
        });
    }
    Ok(pref * total)
}

/// m(ξ) at many frequencies at once.
///
/// Uses m(ξ) = P ξ^{2s} [ln ξ · I₀(ξ) − I₁(ξ)] with
/// I_j(X) = ∫_0^X W(t) t^{−1−2s} (ln t)^j dt accumulated along the sorted
/// frequencies, so the cost is linear in the largest frequency.
pub fn form_multiplier_table(xis: &[f64], params: &OperatorParams) -> Vec<f64> {
    let n = params.n();
    let s = params.s();
    let consts = params.constants();
    let pref = 2.0 * consts.sphere_measure * consts.c_ns;
    let mut order: Vec<usize> = (0..xis.len()).collect();
    order.sort_by(|&a, &b| xis[a].partial_cmp(&xis[b]).unwrap());

    let rule = gl16();
    let seg = |a: f64, b: f64| -> (f64, f64) {
        let mut i0 = 0.0;
        let mut i1 = 0.0;
        let breaks = if a == 0.0 {
            let knee = b.min(1.0);
            let mut br = quadrature::graded_toward_start(0.0, knee, 0.5, 60);
            if b > knee {
                br.pop();
                br.extend(quadrature::refine_breaks(&[knee, b], 1.0));
            }
            let (h0, h1) = small_argument_head(n, s, br[1]);
            i0 += h0;
            i1 += h1;
            br.remove(0);
            br
        } else {
            quadrature::refine_breaks(&[a, b], 1.0)
        };
        for w in breaks.windows(2) {
            if w[1] <= w[0] {
                continue;
            }
            i0 += rule.integrate(w[0], w[1], |t| {
                angular_weight(n, t) * t.powf(-1.0 - 2.0 * s)
            });
            i1 += rule.integrate(w[0], w[1], |t| {
                angular_weight(n, t) * t.powf(-1.0 - 2.0 * s) * t.ln()
            });
        }
        (i0, i1)
    };

    let mut out = vec![0.0; xis.len()];
    let (mut prev, mut i0, mut i1) = (0.0, 0.0, 0.0);
    for idx in order {
        let x = xis[idx];
        if x <= 0.0 {
            out[idx] = 0.0;
            continue;
        }
        if x > prev {
            let (d0, d1) = seg(prev, x);
            i0 += d0;
            i1 += d1;
            prev = x;
        }
        out[idx] = pref * x.powf(2.0 * s) * (x.ln() * i0 - i1);
    }
    out
}

/// Smallest C with m(ξ) ≤ C (1 + ξ^{2s}(1 + |ln ξ|)) on the given frequencies.
pub fn fit_multiplier_bound(xis: &[f64], params: &OperatorParams) -> Result<f64> {
    let s = params.s();
    let mut c: f64 = 0.0;
    for &x in xis {
        let m = form_multiplier(x, params)?;
        let env = 1.0 + x.powf(2.0 * s) * (1.0 + x.ln().abs());
        c = c.max(m / env);
    }
    Ok(c)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::specfun::EULER_GAMMA;
    use std::f64::consts::{LN_2, PI};

    fn p(n: usize, s: f64) -> OperatorParams {
        OperatorParams::new(n, s).unwrap()
    }

    #[test]
    fn kernel_split_examples() {
        let k = kernel_split(1.0, &p(1, 0.5)).unwrap();
        assert!((k.full - (2.0 - 2.0 * EULER_GAMMA) / PI).abs() < 1e-14);
        assert_eq!(k.plus, 0.0);
        assert_eq!(k.minus, 0.0);

        let k = kernel_split(0.5, &p(1, 0.5)).unwrap();
        assert!((k.plus - 4.0 * LN_2 / PI).abs() < 1e-14);
        assert_eq!(k.minus, 0.0);

        let r0 = kernel_sign_radius(&p(1, 0.5));
        assert!(kernel_split(r0, &p(1, 0.5)).unwrap().full.abs() < 1e-14);
        assert!(kernel_split(0.0, &p(1, 0.5)).is_err());
        assert!(kernel_split(-1.0, &p(1, 0.5)).is_err());
    }

    #[test]
    fn sign_radius_values() {
        assert!((kernel_sign_radius(&p(1, 0.5)) - (1.0 - EULER_GAMMA).exp()).abs() < 1e-13);
        assert!((kernel_sign_radius(&p(2, 0.5)) - (2.0 - EULER_GAMMA - LN_2).exp()).abs() < 1e-13);
        for params in [p(1, 0.3), p(2, 0.7), p(1, 0.9)] {
            let r = kernel_sign_radius(&params);
            assert!(kernel_split(r * (1.0 - 1e-6), &params).unwrap().full > 0.0);
            assert!(kernel_split(r * (1.0 + 1e-6), &params).unwrap().full < 0.0);
        }
    }

    #[test]
    fn symbol_examples() {
        let q = p(1, 0.5);
        assert_eq!(symbol(1.0, SymbolKind::Fraclog, &q), 0.0);
        assert_eq!(symbol(0.0, SymbolKind::Fraclog, &q), 0.0);
        assert!((symbol(2.0, SymbolKind::Fraclog, &q) - 4.0 * LN_2).abs() < 1e-14);
        assert_eq!(symbol(0.0, SymbolKind::Logarithmic, &q), f64::NEG_INFINITY);
    }

    #[test]
    fn tails_match_quadrature() {
        for params in [p(1, 0.3), p(2, 0.6)] {
            let k = RadialKernel::new(params);
            let n = params.n() as i32;
            for part in [
                KernelPart::Full,
                KernelPart::Plus,
                KernelPart::Minus,
                KernelPart::Fractional,
            ] {
                for a in [0.2f64, 0.9, 1.0, 3.0] {
                    // substitute r = a / u on (0, 1]
                    let breaks = quadrature::graded_toward_start(0.0, 1.0, 0.5, 70);
                    let br = quadrature::merge_breaks(
                        breaks.into_iter().chain([a.min(1.0)]).collect(),
                        0.0,
                        1.0,
                    );
                    let num = gl16().composite(&br, |u| {
                        let r = a / u;
                        k.value(part, r) * r.powi(n - 1) * a / (u * u)
                    });
                    let exact = k.tail(part, a);
                    assert!(
                        (num - exact).abs() < 1e-9 * exact.abs().max(1.0),
                        "{part:?} a={a}: {num} vs {exact}"
                    );
                }
            }
        }
    }

    #[test]
    fn multiplier_zero_and_monotone() {
        let q = p(1, 0.5);
        assert_eq!(form_multiplier(0.0, &q).unwrap(), 0.0);
        let vals: Vec<f64> = [0.5, 1.0, 2.0, 4.0, 8.0]
            .iter()
            .map(|&x| form_multiplier(x, &q).unwrap())
            .collect();
        assert!(vals.windows(2).all(|w| w[1] >= w[0]), "{vals:?}");
    }

    #[test]
    fn multiplier_table_matches_pointwise() {
        for params in [p(1, 0.5), p(2, 0.25), p(2, 0.8)] {
            let xis: Vec<f64> = vec![0.0, 0.3, 1.0, 2.5, 7.0, 40.0, 300.0, 1.0];
            let table = form_multiplier_table(&xis, &params);
            for (x, t) in xis.iter().zip(&table) {
                let direct = form_multiplier(*x, &params).unwrap();
                assert!(
                    (direct - t).abs() <= 1e-9 * direct.abs().max(1e-12),
                    "x={x}: {direct} vs {t}"
                );
            }
        }
    }
}
