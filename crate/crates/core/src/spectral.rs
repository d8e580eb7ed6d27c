//! Weyl-law machinery: exact torus spectra, counting functions, Riesz means
//! and the phase-space integral.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::kernels::{symbol, SymbolKind};
use crate::parallel;
use crate::specfun::OperatorParams;

/// Lattice points examined before `torus_spectrum` gives up.
pub const DEFAULT_BUDGET: usize = 50_000_000;

/// Largest |ξ| whose symbol can be ≤ `lambda_max`.
fn symbol_radius_bound(lambda_max: f64, kind: SymbolKind, params: &OperatorParams) -> f64 {
    match kind {
        SymbolKind::Fraclog => {
            if lambda_max > 0.0 {
                symbol_ball_radius(lambda_max, params).unwrap_or(1.0)
            } else {
                1.0
            }
        }
        SymbolKind::Fractional => lambda_max.max(0.0).powf(0.5 / params.s()),
        SymbolKind::Logarithmic => (0.5 * lambda_max).exp(),
    }
}

/// Eigenvalues σ(|2πk/L|), k ∈ ℤⁿ, of the operator on the torus (ℝ/Lℤ)ⁿ that
/// do not exceed `lambda_max`, with multiplicity, sorted.
pub fn torus_spectrum_of(
    side: f64,
    params: &OperatorParams,
    lambda_max: f64,
    kind: SymbolKind,
    budget: usize,
) -> Result<Vec<f64>> {
    if !(side > 0.0 && side.is_finite()) {
        return Err(Error::domain(format!(
            "torus side must be positive, got {side}"
        )));
    }
    if !lambda_max.is_finite() {
        return Err(Error::domain("lambda_max must be finite"));
    }
    let n = params.n();
    let dxi = 2.0 * std::f64::consts::PI / side;
    let radius = symbol_radius_bound(lambda_max, kind, params);
    // one extra index absorbs rounding at the ball edge; values are re-tested
    let kmax = (radius / dxi).floor() as i64 + 1;
    let width = |k0: i64| -> i64 {
        if n == 1 {
            return 1;
        }
        let rem = (kmax * kmax - k0 * k0).max(0) as f64;
        2 * (rem.sqrt().floor() as i64) + 1
    };
    let rows: Vec<i64> = if n == 1 {
        vec![0]
    } else {
        (-kmax..=kmax).collect()
    };
    let row_nodes = |k0: i64| {
        if n == 1 {
            (2 * kmax + 1) as usize
        } else {
            width(k0) as usize
        }
    };
    let total: usize = rows.iter().map(|&r| row_nodes(r)).sum();
    let (rows, over) = if total > budget {
        let mut used = 0usize;
        let mut kept = Vec::new();
        for &r in &rows {
            if used + row_nodes(r) > budget {
                break;
            }
            used += row_nodes(r);
            kept.push(r);
        }
        (kept, true)
    } else {
        (rows, false)
    };
    let per_row = parallel::map_slice(&rows, |&k0| {
        let mut out = Vec::new();
        if n == 1 {
            for k in -kmax..=kmax {
                let v = symbol((k as f64 * dxi).abs(), kind, params);
                if v <= lambda_max {
                    out.push(v);
                }
            }
        } else {
            let half = (width(k0) - 1) / 2;
            for k1 in -half..=half {
                let r = dxi * ((k0 * k0 + k1 * k1) as f64).sqrt();
                let v = symbol(r, kind, params);
                if v <= lambda_max {
                    out.push(v);
                }
            }
        }
        out
    });
    let mut eigs: Vec<f64> = per_row.into_iter().flatten().collect();
    if over {
        return Err(Error::Budget {
            budget,
            partial: eigs.len(),
        });
    }
    eigs.sort_by(|a, b| a.total_cmp(b));
    Ok(eigs)
}

pub fn torus_spectrum(side: f64, params: &OperatorParams, lambda_max: f64) -> Result<Vec<f64>> {
    torus_spectrum_of(
        side,
        params,
        lambda_max,
        SymbolKind::Fraclog,
        DEFAULT_BUDGET,
    )
}

/// Number of k ∈ ℤⁿ with |2πk/L| ≤ r, by integer arithmetic.
pub fn lattice_ball_count(side: f64, n: usize, r: f64) -> u64 {
    let rho = r * side / (2.0 * std::f64::consts::PI);
    let inside = |k2: i64| (k2 as f64) <= rho * rho * (1.0 + 1e-15);
    let m = rho.floor() as i64 + 1;
    let m = (-m..=m)
        .filter(|k| inside(k * k))
        .map(i64::abs)
        .max()
        .unwrap_or(-1);
    if m < 0 {
        return 0;
    }
    if n == 1 {
        return (2 * m + 1) as u64;
    }
    let mut count = 0u64;
    for k0 in -m..=m {
        let mut w = ((rho * rho - (k0 * k0) as f64).max(0.0)).sqrt().floor() as i64 + 1;
        while w >= 0 && !inside(k0 * k0 + w * w) {
            w -= 1;
        }
        if w >= 0 {
            count += (2 * w + 1) as u64;
        }
    }
    count
}

/// The root r > 1 of r^{2s}·2 ln r = Λ.
pub fn symbol_ball_radius(lambda: f64, params: &OperatorParams) -> Result<f64> {
    if !(lambda > 0.0 && lambda.is_finite()) {
        return Err(Error::domain(format!(
            "lambda must be positive, got {lambda}"
        )));
    }
    let s = params.s();
    // in u = ln r: g(u) = ln(2u) + 2su − ln Λ is increasing and concave
    let target = lambda.ln();
    let g = |u: f64| (2.0 * u).ln() + 2.0 * s * u - target;
    let mut lo = f64::MIN_POSITIVE;
    let mut hi = 1.0f64.max(target / (2.0 * s));
    let mut u = 0.5 * (lo + hi);
    for _ in 0..200 {
        let gu = g(u);
        if gu.abs() < 1e-15 {
            break;
        }
        if gu > 0.0 {
            hi = u;
        } else {
            lo = u;
        }
        let newton = u - gu / (1.0 / u + 2.0 * s);
        u = if newton > lo && newton < hi {
            newton
        } else {
            0.5 * (lo + hi)
        };
        if (hi - lo) <= 1e-15 * hi {
            break;
        }
    }
    Ok(u.exp())
}

/// ∫(σ(ξ) − Λ)₋ dξ in closed form.
pub fn phase_space_riesz(lambda: f64, params: &OperatorParams) -> Result<f64> {
    let r = symbol_ball_radius(lambda, params)?;
    let n = params.n() as f64;
    let s = params.s();
    let a = n + 2.0 * s;
    let sphere = params.constants().sphere_measure;
    Ok(sphere * (2.0 * s * lambda * r.powf(n) / (n * a) + 2.0 * r.powf(a) / (a * a)))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CountingData {
    pub thresholds: Vec<f64>,
    pub counts: Vec<u64>,
    /// Tr(· − Λ)₋ = Σ_{λ_k ≤ Λ} (Λ − λ_k).
    pub riesz: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CountingAnalysis {
    pub data: CountingData,
    /// (2π)^{−n}|Ω| ∫(σ − Λ)₋.
    pub phase_space: Vec<f64>,
    /// N(Λ)/((2π)^{−n}|Ω|ω_n r_Λⁿ).
    pub geometric_ratio: Vec<f64>,
    /// N(Λ)Λ^{−n/2s}(ln Λ)^{n/2s} divided by its limit (2π)^{−n}s^{n/2s}ω_n|Ω|.
    pub weyl_ratio: Vec<f64>,
}

/// N(Λ) and Riesz means of a sorted eigenvalue list.
pub fn counting(eigs: &[f64], lambdas: &[f64]) -> Result<CountingData> {
    if eigs.windows(2).any(|w| w[0] > w[1]) {
        return Err(Error::config("eigenvalues must be sorted nondecreasing"));
    }
    let mut counts = Vec::with_capacity(lambdas.len());
    let mut riesz = Vec::with_capacity(lambdas.len());
    for &l in lambdas {
        let k = eigs.partition_point(|&e| e <= l);
        counts.push(k as u64);
        // summing the gaps directly keeps every term nonnegative
        riesz.push(eigs[..k].iter().map(|e| l - e).sum());
    }
    Ok(CountingData {
        thresholds: lambdas.to_vec(),
        counts,
        riesz,
    })
}

pub fn counting_analysis(
    eigs: &[f64],
    lambdas: &[f64],
    omega_volume: f64,
    params: &OperatorParams,
) -> Result<CountingAnalysis> {
    if !(omega_volume > 0.0) {
        return Err(Error::domain("|Ω| must be positive"));
    }
    let data = counting(eigs, lambdas)?;
    let n = params.n() as f64;
    let s = params.s();
    let consts = params.constants();
    let two_pi_n = (2.0 * std::f64::consts::PI).powf(n);
    let mut phase_space = Vec::new();
    let mut geometric_ratio = Vec::new();
    let mut weyl_ratio = Vec::new();
    for (&l, &c) in lambdas.iter().zip(&data.counts) {
        if l > 0.0 {
            let r = symbol_ball_radius(l, params)?;
            phase_space.push(omega_volume / two_pi_n * phase_space_riesz(l, params)?);
            geometric_ratio
                .push(c as f64 / (omega_volume * consts.ball_volume * r.powf(n) / two_pi_n));
        } else {
            phase_space.push(f64::NAN);
            geometric_ratio.push(f64::NAN);
        }
        if l > 1.0 {
            let e = n / (2.0 * s);
            let limit = s.powf(e) * consts.ball_volume * omega_volume / two_pi_n;
            weyl_ratio.push(c as f64 * l.powf(-e) * l.ln().powf(e) / limit);
        } else {
            weyl_ratio.push(f64::NAN);
        }
    }
    Ok(CountingAnalysis {
        data,
        phase_space,
        geometric_ratio,
        weyl_ratio,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KthLaw {
    /// (k, λ_k k^{−2s/n} / ln k) for k ≥ 2, 1-based.
    pub ratios: Vec<(usize, f64)>,
    /// (2/n)(2π)^{2s}(ω_n|Ω|)^{−2s/n}.
    pub target: f64,
}

pub fn kth_eigenvalue_law(
    eigs: &[f64],
    params: &OperatorParams,
    omega_volume: f64,
) -> Result<KthLaw> {
    if eigs.len() < 2 {
        return Err(Error::config(
            "the k-th eigenvalue law needs at least two eigenvalues",
        ));
    }
    let n = params.n() as f64;
    let s = params.s();
    let wn = params.constants().ball_volume;
    let target = 2.0 / n
        * (2.0 * std::f64::consts::PI).powf(2.0 * s)
        * (wn * omega_volume).powf(-2.0 * s / n);
    let ratios = eigs
        .iter()
        .enumerate()
        .skip(1)
        .map(|(i, &l)| {
            let k = (i + 1) as f64;
            (i + 1, l * k.powf(-2.0 * s / n) / k.ln())
        })
        .collect();
    Ok(KthLaw { ratios, target })
}

/// The fractional-only control: λ_k k^{−2s/n} against (2π)^{2s}(ω_n|Ω|)^{−2s/n}.
pub fn kth_fractional_law(
    eigs: &[f64],
    params: &OperatorParams,
    omega_volume: f64,
) -> (Vec<(usize, f64)>, f64) {
    let n = params.n() as f64;
    let s = params.s();
    let wn = params.constants().ball_volume;
    let target =
        (2.0 * std::f64::consts::PI).powf(2.0 * s) * (wn * omega_volume).powf(-2.0 * s / n);
    let ratios = eigs
        .iter()
        .enumerate()
        .map(|(i, &l)| (i + 1, l * ((i + 1) as f64).powf(-2.0 * s / n)))
        .collect();
    (ratios, target)
}
