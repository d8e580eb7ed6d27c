//! Energy forms E₊, E₋, E_s and 𝓔_{s+Log} on compactly supported fields.
//!
//! A field is the piecewise-linear (1D) or bilinear (2D) interpolant of its
//! grid samples, extended by zero. For hat functions φ_i every form is
//! Toeplitz in the node offset d:
//!
//! g_X(d) = ∫ k_X(|z|) (2R(dh) − R(dh+z) − R(dh−z)) dz,
//!
//! where R is the autocorrelation of one hat (a cubic B-spline per axis).
//! The radial integrals are done by Gauss–Legendre panels aligned with the
//! kinks of R, an analytic head at z → 0 and an analytic kernel tail, so the
//! exterior of Ω is accounted for exactly.

use rustfft::num_complex::Complex;
use rustfft::FftPlanner;
use serde::{Deserialize, Serialize};

use crate::domain::Grid;
use crate::error::{Error, Result};
use crate::kernels::{form_multiplier_table, KernelPart, RadialKernel};
use crate::parallel;
use crate::quadrature::{self, gl16, gl24, gl8, power_log_head};
use crate::specfun::{OperatorConstants, OperatorParams};

const HEAD_LEVELS: usize = 40;

/// Samples of a function vanishing outside a box, on all grid nodes
/// (boundary samples are zero).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CompactField {
    pub grid: Grid,
    pub samples: Vec<f64>,
}

impl CompactField {
    pub fn new(grid: Grid, mut samples: Vec<f64>) -> Result<Self> {
        if samples.len() != grid.node_count() {
            return Err(Error::config(format!(
                "expected {} samples, got {}",
                grid.node_count(),
                samples.len()
            )));
        }
        if samples.iter().any(|v| !v.is_finite()) {
            return Err(Error::config("field samples must be finite"));
        }
        let scale = samples.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        for (k, v) in samples.iter_mut().enumerate() {
            if grid.is_boundary(k) {
                if v.abs() > 1e-12 * scale {
                    return Err(Error::config(format!(
                        "sample at boundary node {k} is {v}; fields must vanish on the boundary"
                    )));
                }
                *v = 0.0;
            }
        }
        Ok(Self { grid, samples })
    }

    /// Samples `f` at interior nodes; boundary nodes are set to zero.
    pub fn from_fn<F: Fn(&[f64]) -> f64>(grid: Grid, f: F) -> Self {
        let samples = (0..grid.node_count())
            .map(|k| {
                if grid.is_boundary(k) {
                    0.0
                } else {
                    f(&grid.node_point(k))
                }
            })
            .collect();
        Self { grid, samples }
    }

    pub fn zeros(grid: Grid) -> Self {
        let samples = vec![0.0; grid.node_count()];
        Self { grid, samples }
    }

    pub fn from_coefficients(grid: Grid, coeffs: &[f64]) -> Result<Self> {
        if coeffs.len() != grid.interior_count() {
            return Err(Error::config(
                "coefficient count does not match the interior node count",
            ));
        }
        let mut samples = vec![0.0; grid.node_count()];
        for (j, k) in grid.interior_nodes().into_iter().enumerate() {
            samples[k] = coeffs[j];
        }
        Ok(Self { grid, samples })
    }

    pub fn grid_spacing(&self) -> f64 {
        self.grid.h
    }

    /// Interior samples, the hat-basis coefficients.
    pub fn coefficients(&self) -> Vec<f64> {
        self.grid
            .interior_nodes()
            .into_iter()
            .map(|k| self.samples[k])
            .collect()
    }

    pub fn scaled(&self, alpha: f64) -> Self {
        Self {
            grid: self.grid.clone(),
            samples: self.samples.iter().map(|v| alpha * v).collect(),
        }
    }

    /// Nodal modulus |c|.
    pub fn abs(&self) -> Self {
        Self {
            grid: self.grid.clone(),
            samples: self.samples.iter().map(|v| v.abs()).collect(),
        }
    }

    pub fn is_zero(&self) -> bool {
        self.samples.iter().all(|&v| v == 0.0)
    }

    pub fn changes_sign(&self) -> bool {
        self.samples.iter().any(|&v| v > 0.0) && self.samples.iter().any(|&v| v < 0.0)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FormBreakdown {
    pub e_plus: f64,
    pub e_minus: f64,
    pub e_s: f64,
    /// e_plus − e_minus + (b_{n,s} c_{n,s} / 2) e_s
    pub total: f64,
    pub l2_norm_sq: f64,
}

/// Cubic B-spline autocorrelation of the unit hat: ∫ hat(x) hat(x−τ) dx.
fn hat_autocorr(tau: f64) -> f64 {
    let a = tau.abs();
    if a <= 1.0 {
        2.0 / 3.0 - a * a + 0.5 * a * a * a
    } else if a < 2.0 {
        let b = 2.0 - a;
        b * b * b / 6.0
    } else {
        0.0
    }
}

fn hat_autocorr_dd(tau: f64) -> f64 {
    let a = tau.abs();
    if a <= 1.0 {
        -2.0 + 3.0 * a
    } else if a < 2.0 {
        2.0 - a
    } else {
        0.0
    }
}

fn hat_autocorr_d(tau: f64) -> f64 {
    let a = tau.abs();
    let v = if a <= 1.0 {
        -2.0 * a + 1.5 * a * a
    } else if a < 2.0 {
        -0.5 * (2.0 - a) * (2.0 - a)
    } else {
        0.0
    };
    v * tau.signum()
}

/// Third derivative on the open piece containing tau.
fn hat_autocorr_ddd(tau: f64) -> f64 {
    let a = tau.abs();
    let v = if a < 1.0 {
        3.0
    } else if a < 2.0 {
        -1.0
    } else {
        0.0
    };
    v * tau.signum()
}

/// Exact Taylor data of R₁(t) = h B(t/h) about the node offset dh, valid
/// for increments |t| ≤ h: R₁(dh + t) − R₁(dh) and its even part.
struct LocalSpline {
    h: f64,
    b1: f64,
    b2: f64,
    b3_right: f64,
    b3_left: f64,
}

impl LocalSpline {
    fn new(d: usize, h: f64) -> Self {
        let df = d as f64;
        Self {
            h,
            b1: hat_autocorr_d(df),
            b2: hat_autocorr_dd(df),
            b3_right: hat_autocorr_ddd(df + 0.5),
            b3_left: hat_autocorr_ddd(df - 0.5),
        }
    }

    fn increment(&self, t: f64) -> f64 {
        let tau = t / self.h;
        let b3 = if tau >= 0.0 {
            self.b3_right
        } else {
            self.b3_left
        };
        self.h * tau * (self.b1 + tau * (0.5 * self.b2 + tau * b3 / 6.0))
    }

    /// R₁(dh + t) + R₁(dh − t) − 2R₁(dh).
    fn even(&self, t: f64) -> f64 {
        let tau = t.abs() / self.h;
        self.h * tau * tau * (self.b2 + tau * (self.b3_right - self.b3_left) / 6.0)
    }
}

const PARTS: [KernelPart; 3] = [KernelPart::Plus, KernelPart::Minus, KernelPart::Fractional];

/// ∫_0^ε k_X(r) r^{n+1} dr for ε < 1.
fn kernel_head(kernel: &RadialKernel, eps: f64) -> [f64; 3] {
    let s = kernel.params.s();
    let ph = power_log_head(2.0 - 2.0 * s, eps);
    [kernel.consts.c_ns * ph[1], 0.0, ph[0]]
}

fn kernel_values(kernel: &RadialKernel, r: f64) -> [f64; 3] {
    [
        kernel.value(PARTS[0], r),
        kernel.value(PARTS[1], r),
        kernel.value(PARTS[2], r),
    ]
}

fn kernel_tails(kernel: &RadialKernel, a: f64) -> [f64; 3] {
    [
        kernel.tail(PARTS[0], a),
        kernel.tail(PARTS[1], a),
        kernel.tail(PARTS[2], a),
    ]
}

/// g_X(d) for P1 hats in 1D, X ∈ {plus, minus, fractional}.
fn hat_pair_1d(d: usize, h: f64, kernel: &RadialKernel) -> [f64; 3] {
    let df = d as f64;
    let r0 = h * hat_autocorr(df);
    let rr = |t: f64| h * hat_autocorr(t / h);
    let dh = df * h;
    let z_hi = (df + 2.0) * h;
    let mut pts: Vec<f64> = Vec::new();
    let z_lo = if d >= 3 { (df - 2.0) * h } else { 0.0 };
    if d <= 2 {
        pts.extend(quadrature::graded_toward_start(0.0, h, 0.5, HEAD_LEVELS));
    }
    for k in 0..=(d + 2) {
        pts.push(k as f64 * h);
    }
    pts.push(1.0);
    let pts = quadrature::merge_breaks(pts, z_lo, z_hi);
    let mut out = [0.0; 3];
    let start = if d <= 2 {
        let eps = pts[1];
        let head = kernel_head(kernel, eps);
        let kappa = -2.0 * hat_autocorr_dd(df) / h;
        for j in 0..3 {
            out[j] += kappa * head[j];
        }
        1
    } else {
        0
    };
    let local = LocalSpline::new(d, h);
    let rule = gl24();
    for w in pts[start..].windows(2) {
        let (a, b) = (w[0], w[1]);
        let half = 0.5 * (b - a);
        let mid = 0.5 * (a + b);
        for (t, wt) in rule.nodes().iter().zip(rule.weights()) {
            let z = mid + half * t;
            let az = if d <= 2 && z <= h {
                -local.even(z)
            } else {
                2.0 * r0 - rr(dh + z) - rr(dh - z)
            };
            let k = kernel_values(kernel, z);
            for j in 0..3 {
                out[j] += 2.0 * wt * half * k[j] * az;
            }
        }
    }
    if r0 != 0.0 {
        let tails = kernel_tails(kernel, z_hi);
        for j in 0..3 {
            out[j] += 4.0 * r0 * tails[j];
        }
    }
    out
}

/// Angles in [0, 2π] where r cos θ or r sin θ is a multiple of h.
fn kink_angles(r: f64, h: f64) -> Vec<f64> {
    let two_pi = 2.0 * std::f64::consts::PI;
    let mut out = vec![
        0.0,
        0.5 * std::f64::consts::PI,
        std::f64::consts::PI,
        1.5 * std::f64::consts::PI,
        two_pi,
    ];
    let kmax = (r / h).floor() as i64;
    for k in -kmax..=kmax {
        let c = (k as f64 * h / r).clamp(-1.0, 1.0);
        let a = c.acos();
        let b = c.asin();
        for th in [a, two_pi - a, b, std::f64::consts::PI - b] {
            out.push(th.rem_euclid(two_pi));
        }
    }
    quadrature::merge_breaks(out, 0.0, two_pi)
}

/// g_X(d) for Q1 hats in 2D at an offset near the diagonal, in polar
/// coordinates.
fn hat_pair_2d_near(d: [usize; 2], h: f64, kernel: &RadialKernel) -> [f64; 3] {
    let r1 = |t: f64| h * hat_autocorr(t / h);
    let r1dd = |t: f64| hat_autocorr_dd(t / h) / h;
    let dh = [d[0] as f64 * h, d[1] as f64 * h];
    let r0 = r1(dh[0]) * r1(dh[1]);
    let lap = r1dd(dh[0]) * r1(dh[1]) + r1(dh[0]) * r1dd(dh[1]);
    let m = d[0].max(d[1]) as f64;
    let z_hi = std::f64::consts::SQRT_2 * (m + 2.0) * h;
    let kmax = (z_hi / h).ceil() as usize;

    let mut pts = quadrature::graded_toward_start(0.0, h, 0.5, HEAD_LEVELS);
    for k in 0..=kmax {
        for l in 0..=kmax {
            pts.push(h * ((k * k + l * l) as f64).sqrt());
        }
    }
    pts.push(1.0);
    let pts = quadrature::merge_breaks(pts, 0.0, z_hi);
    let pts = quadrature::refine_breaks(&pts, 0.5 * h);
    let eps = pts[1];

    let lx = LocalSpline::new(d[0], h);
    let ly = LocalSpline::new(d[1], h);
    let (r1x, r1y) = (r1(dh[0]), r1(dh[1]));
    let theta = |r: f64| -> f64 {
        let angles = kink_angles(r, h);
        let rule = gl16();
        let mut acc = 0.0;
        if r <= h {
            // cancellation-free: R(dh+z) + R(dh−z) − 2R(dh) from local Taylor data
            for w in angles.windows(2) {
                acc += rule.integrate(w[0], w[1], |th| {
                    let (zx, zy) = (r * th.cos(), r * th.sin());
                    r1x * ly.even(zy)
                        + r1y * lx.even(zx)
                        + lx.increment(zx) * ly.increment(zy)
                        + lx.increment(-zx) * ly.increment(-zy)
                });
            }
            return -acc;
        }
        for w in angles.windows(2) {
            acc += rule.integrate(w[0], w[1], |th| {
                r1(dh[0] + r * th.cos()) * r1(dh[1] + r * th.sin())
            });
        }
        2.0 * std::f64::consts::PI * 2.0 * r0 - 2.0 * acc
    };

    let panels: Vec<(f64, f64)> = pts[1..].windows(2).map(|w| (w[0], w[1])).collect();
    let parts = parallel::map_slice(&panels, |&(a, b)| {
        let rule = gl16();
        let half = 0.5 * (b - a);
        let mid = 0.5 * (a + b);
        let mut acc = [0.0; 3];
        for (t, wt) in rule.nodes().iter().zip(rule.weights()) {
            let r = mid + half * t;
            let th = theta(r);
            let k = kernel_values(kernel, r);
            for j in 0..3 {
                acc[j] += wt * half * k[j] * r * th;
            }
        }
        acc
    });
    let head = kernel_head(kernel, eps);
    let mut out = [0.0; 3];
    for j in 0..3 {
        out[j] = -std::f64::consts::PI * lap * head[j];
    }
    for p in parts {
        for j in 0..3 {
            out[j] += p[j];
        }
    }
    if r0 != 0.0 {
        let tails = kernel_tails(kernel, z_hi);
        for j in 0..3 {
            out[j] += 2.0 * r0 * 2.0 * std::f64::consts::PI * tails[j];
        }
    }
    out
}

/// g_X(d) = −2∫ k(|z|) R(dh − z) dz over the 4×4 cells around dh, for
/// offsets whose support box stays at least one cell away from z = 0.
fn hat_pair_2d_far(d: [usize; 2], h: f64, kernel: &RadialKernel) -> [f64; 3] {
    let r1 = |t: f64| h * hat_autocorr(t / h);
    let dh = [d[0] as f64 * h, d[1] as f64 * h];
    let rule = gl8();
    let mut out = [0.0; 3];
    for a in -2i32..2 {
        for b in -2i32..2 {
            let x0 = dh[0] + a as f64 * h;
            let y0 = dh[1] + b as f64 * h;
            // split cells the kernel kink r = 1 passes through
            let corners = [(x0, y0), (x0 + h, y0), (x0, y0 + h), (x0 + h, y0 + h)];
            let rmin = {
                let cx = (0.0f64).clamp(x0, x0 + h);
                let cy = (0.0f64).clamp(y0, y0 + h);
                (cx * cx + cy * cy).sqrt()
            };
            let rmax = corners
                .iter()
                .map(|(x, y)| (x * x + y * y).sqrt())
                .fold(0.0, f64::max);
            let sub = if rmin < 1.0 && rmax > 1.0 {
                8
            } else if rmin < 2.5 * h {
                4
            } else {
                1
            };
            let hs = h / sub as f64;
            for i in 0..sub {
                for j in 0..sub {
                    let xa = x0 + i as f64 * hs;
                    let ya = y0 + j as f64 * hs;
                    for (tx, wx) in rule.nodes().iter().zip(rule.weights()) {
                        let zx = xa + 0.5 * hs * (tx + 1.0);
                        let rx = r1(dh[0] - zx);
                        for (ty, wy) in rule.nodes().iter().zip(rule.weights()) {
                            let zy = ya + 0.5 * hs * (ty + 1.0);
                            let w = 0.25 * hs * hs * wx * wy * rx * r1(dh[1] - zy);
                            let r = (zx * zx + zy * zy).sqrt();
                            let k = kernel_values(kernel, r);
                            for p in 0..3 {
                                out[p] -= 2.0 * w * k[p];
                            }
                        }
                    }
                }
            }
        }
    }
    out
}

/// Toeplitz tables of the three hat-pair forms on one grid.
#[derive(Debug, Clone)]
pub struct FormTables {
    pub params: OperatorParams,
    pub consts: OperatorConstants,
    pub h: f64,
    /// Interior nodes per axis.
    pub len: Vec<usize>,
    diam: f64,
    plus: Vec<f64>,
    minus: Vec<f64>,
    frac: Vec<f64>,
}

impl FormTables {
    pub fn new(grid: &Grid, params: &OperatorParams) -> Result<Self> {
        if grid.dim() != params.n() {
            return Err(Error::config(format!(
                "grid dimension {} does not match n = {}",
                grid.dim(),
                params.n()
            )));
        }
        let kernel = RadialKernel::new(*params);
        let len = grid.interior_per_axis();
        let h = grid.h;
        let (plus, minus, frac) = if grid.dim() == 1 {
            let vals = parallel::map_indexed(len[0], |d| hat_pair_1d(d, h, &kernel));
            split3(vals)
        } else {
            let total = len[0] * len[1];
            let vals = parallel::map_indexed(total, |k| {
                let d = [k % len[0], k / len[0]];
                if d[0].max(d[1]) <= 2 {
                    hat_pair_2d_near(d, h, &kernel)
                } else {
                    hat_pair_2d_far(d, h, &kernel)
                }
            });
            split3(vals)
        };
        Ok(Self {
            params: *params,
            consts: kernel.consts,
            h,
            len,
            diam: grid.domain.diam(),
            plus,
            minus,
            frac,
        })
    }

    fn offset(&self, i: usize, j: usize) -> usize {
        if self.len.len() == 1 {
            i.abs_diff(j)
        } else {
            let l0 = self.len[0];
            let (i0, i1) = (i % l0, i / l0);
            let (j0, j1) = (j % l0, j / l0);
            i0.abs_diff(j0) + l0 * i1.abs_diff(j1)
        }
    }

    pub fn size(&self) -> usize {
        self.len.iter().product()
    }

    /// Entries (E₊, E₋, E_s) of the hat pair (i, j).
    pub fn entry(&self, i: usize, j: usize) -> [f64; 3] {
        let o = self.offset(i, j);
        [self.plus[o], self.minus[o], self.frac[o]]
    }

    /// Stiffness entry 𝓔_{s+Log}(φ_i, φ_j).
    pub fn stiffness_entry(&self, i: usize, j: usize) -> f64 {
        let [p, m, f] = self.entry(i, j);
        p - m + 0.5 * self.consts.b_ns * self.consts.c_ns * f
    }

    /// P1 mass entry ∫φ_iφ_j.
    pub fn mass_entry(&self, i: usize, j: usize) -> f64 {
        let one = |a: usize, b: usize| match a.abs_diff(b) {
            0 => 2.0 * self.h / 3.0,
            1 => self.h / 6.0,
            _ => 0.0,
        };
        if self.len.len() == 1 {
            one(i, j)
        } else {
            let l0 = self.len[0];
            one(i % l0, j % l0) * one(i / l0, j / l0)
        }
    }

    /// (G_+ b, G_− b, G_s b, M b).
    fn apply_all(&self, b: &[f64]) -> Vec<[f64; 4]> {
        let n = self.size();
        parallel::map_indexed(n, |i| {
            let mut acc = [0.0; 4];
            for (j, bj) in b.iter().enumerate() {
                if *bj == 0.0 {
                    continue;
                }
                let o = self.offset(i, j);
                acc[0] += self.plus[o] * bj;
                acc[1] += self.minus[o] * bj;
                acc[2] += self.frac[o] * bj;
                acc[3] += self.mass_entry(i, j) * bj;
            }
            acc
        })
    }

    /// All forms evaluated on the coefficient vectors a and b.
    pub fn bilinear(&self, a: &[f64], b: &[f64]) -> Result<FormBreakdown> {
        if a.len() != self.size() || b.len() != self.size() {
            return Err(Error::config(
                "coefficient vector does not match the table size",
            ));
        }
        let gb = self.apply_all(b);
        let mut sums = [0.0; 4];
        for (ai, g) in a.iter().zip(&gb) {
            for k in 0..4 {
                sums[k] += ai * g[k];
            }
        }
        let total = sums[0] - sums[1] + 0.5 * self.consts.b_ns * self.consts.c_ns * sums[2];
        Ok(FormBreakdown {
            e_plus: sums[0],
            e_minus: sums[1],
            e_s: sums[2],
            total,
            l2_norm_sq: sums[3],
        })
    }

    pub fn breakdown(&self, u: &CompactField) -> Result<FormBreakdown> {
        self.check_field(u)?;
        let c = u.coefficients();
        self.bilinear(&c, &c)
    }

    fn check_field(&self, u: &CompactField) -> Result<()> {
        if u.grid.interior_per_axis() != self.len || (u.grid.h - self.h).abs() > 1e-14 * self.h {
            return Err(Error::config("field grid does not match the form tables"));
        }
        Ok(())
    }

    fn s_and_sphere(&self) -> (f64, f64) {
        (self.params.s(), self.consts.sphere_measure)
    }

    /// (1/s²) c |S| ‖u‖² − E₋(u,u).
    pub fn e_minus_bound_slack(&self, u: &CompactField) -> Result<f64> {
        let f = self.breakdown(u)?;
        let (s, sph) = self.s_and_sphere();
        Ok(self.consts.c_ns * sph / (s * s) * f.l2_norm_sq - f.e_minus)
    }

    /// E₊ − E₋ minus its lower bound (1/s) c |S| diam^{−2s}(ln(1/diam) − 1/(2s)) ‖u‖².
    pub fn small_diameter_slack(&self, u: &CompactField) -> Result<f64> {
        if self.diam >= 1.0 {
            return Err(Error::Precondition(format!(
                "the lower bound needs diam(Ω) < 1, got {}",
                self.diam
            )));
        }
        let f = self.breakdown(u)?;
        let (s, sph) = self.s_and_sphere();
        let bound = self.consts.c_ns * sph / s
            * self.diam.powf(-2.0 * s)
            * ((1.0 / self.diam).ln() - 0.5 / s);
        Ok(f.e_plus - f.e_minus - bound * f.l2_norm_sq)
    }

    /// E₊ / ‖u‖².
    pub fn poincare_ratio(&self, u: &CompactField) -> Result<f64> {
        if u.is_zero() {
            return Err(Error::Degenerate("Poincaré ratio of the zero field".into()));
        }
        let f = self.breakdown(u)?;
        Ok(f.e_plus / f.l2_norm_sq)
    }

    /// E₊/(c ln(1/r)) + (2/s)|S| r^{−2s}‖u‖² − E_s.
    pub fn split_bound_slack(&self, u: &CompactField, r: f64) -> Result<f64> {
        if !(r > 0.0 && r < 1.0) {
            return Err(Error::domain(format!(
                "split radius must lie in (0, 1), got {r}"
            )));
        }
        let f = self.breakdown(u)?;
        let (s, sph) = self.s_and_sphere();
        let rhs = f.e_plus / (self.consts.c_ns * (1.0 / r).ln())
            + 2.0 / s * sph * r.powf(-2.0 * s) * f.l2_norm_sq;
        Ok(rhs - f.e_s)
    }

    /// 𝓔(u,u) − 𝓔(|u|,|u|) with the nodal modulus.
    pub fn modulus_contraction(&self, u: &CompactField) -> Result<f64> {
        let s = self.params.s();
        let limit = (-0.5 / s).exp();
        if self.diam >= limit {
            return Err(Error::Precondition(format!(
                "hypothesis diam(Ω) < e^(-1/(2s)) = {limit} fails: diam = {}",
                self.diam
            )));
        }
        if self.consts.b_ns < 0.0 {
            return Err(Error::Precondition(format!(
                "hypothesis b_(n,s) >= 0 fails: b = {}",
                self.consts.b_ns
            )));
        }
        let a = self.breakdown(u)?;
        let b = self.breakdown(&u.abs())?;
        Ok(a.total - b.total)
    }
}

fn split3(vals: Vec<[f64; 3]>) -> (Vec<f64>, Vec<f64>, Vec<f64>) {
    let mut a = Vec::with_capacity(vals.len());
    let mut b = Vec::with_capacity(vals.len());
    let mut c = Vec::with_capacity(vals.len());
    for v in vals {
        a.push(v[0]);
        b.push(v[1]);
        c.push(v[2]);
    }
    (a, b, c)
}

pub fn form_components(u: &CompactField, params: &OperatorParams) -> Result<FormBreakdown> {
    FormTables::new(&u.grid, params)?.breakdown(u)
}

pub fn poincare_ratio(u: &CompactField, params: &OperatorParams) -> Result<f64> {
    if u.is_zero() {
        return Err(Error::Degenerate("Poincaré ratio of the zero field".into()));
    }
    FormTables::new(&u.grid, params)?.poincare_ratio(u)
}

pub fn split_bound_check(u: &CompactField, r: f64, params: &OperatorParams) -> Result<f64> {
    if !(r > 0.0 && r < 1.0) {
        return Err(Error::domain(format!(
            "split radius must lie in (0, 1), got {r}"
        )));
    }
    FormTables::new(&u.grid, params)?.split_bound_slack(u, r)
}

pub fn modulus_contraction_check(u: &CompactField, params: &OperatorParams) -> Result<f64> {
    FormTables::new(&u.grid, params)?.modulus_contraction(u)
}

/// Torus side and points per axis used by the multiplier route.
pub fn multiplier_torus(grid: &Grid) -> (f64, usize) {
    let side = 4.0 * grid.domain.diam() + 2.0;
    let m = ((side / grid.h).ceil() as usize).next_power_of_two();
    (m as f64 * grid.h, m)
}

/// E₊(u,u) = ∫ m(ξ)|û(ξ)|² dξ evaluated on a zero-padded torus: the samples
/// are transformed by FFT and Σ m(ξ_k)|U_k|² (2π/T)^n is returned, i.e. the
/// energy of the trigonometric interpolant of the samples.
pub fn form_via_multiplier(u: &CompactField, params: &OperatorParams) -> Result<f64> {
    let grid = &u.grid;
    if grid.dim() != params.n() {
        return Err(Error::config("field dimension does not match n"));
    }
    if u.is_zero() {
        return Ok(0.0);
    }
    let n = grid.dim();
    let (side, m) = multiplier_torus(grid);
    let h = grid.h;
    let mut planner = FftPlanner::<f64>::new();
    let fft = planner.plan_fft_forward(m);
    let mut data = vec![Complex::new(0.0, 0.0); m.pow(n as u32)];
    for k in 0..grid.node_count() {
        let idx = grid.node_index(k);
        let flat = if n == 1 { idx[0] } else { idx[0] + m * idx[1] };
        data[flat] = Complex::new(u.samples[k], 0.0);
    }
    if n == 1 {
        fft.process(&mut data);
    } else {
        for row in data.chunks_mut(m) {
            fft.process(row);
        }
        let mut col = vec![Complex::new(0.0, 0.0); m];
        for c in 0..m {
            for r in 0..m {
                col[r] = data[c + m * r];
            }
            fft.process(&mut col);
            for r in 0..m {
                data[c + m * r] = col[r];
            }
        }
    }
    let dxi = 2.0 * std::f64::consts::PI / side;
    let signed = |k: usize| {
        if k < m / 2 {
            k as f64
        } else {
            k as f64 - m as f64
        }
    };
    let norms: Vec<f64> = (0..data.len())
        .map(|k| {
            if n == 1 {
                (signed(k) * dxi).abs()
            } else {
                let (a, b) = (signed(k % m), signed(k / m));
                dxi * (a * a + b * b).sqrt()
            }
        })
        .collect();
    let mult = form_multiplier_table(&norms, params);
    let norm = (2.0 * std::f64::consts::PI).powi(-(n as i32)) * h.powi(2 * n as i32);
    let total: f64 = data
        .iter()
        .zip(&mult)
        .map(|(z, mk)| mk * z.norm_sqr())
        .sum();
    Ok(total * norm * dxi.powi(n as i32))
}
