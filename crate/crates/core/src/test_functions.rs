//! Closed-form test functions: Gaussians and smooth bumps.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Family {
    Gaussian,
    Bump,
}

impl std::str::FromStr for Family {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "gaussian" => Ok(Family::Gaussian),
            "bump" => Ok(Family::Bump),
            other => Err(Error::config(format!(
                "unknown test-function family '{other}'"
            ))),
        }
    }
}

/// `amplitude · exp(−|x−c|²/(2w²))` or `amplitude · exp(−1/(1−|x−c|²/w²))`
/// inside the ball of radius w.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AnalyticTestFunction {
    pub family: Family,
    pub center: Vec<f64>,
    pub width: f64,
    pub amplitude: f64,
}

/// Below this fraction of the width the bump's second difference is taken
/// from its Hessian.
const BUMP_TAYLOR_RADIUS: f64 = 1e-4;

impl AnalyticTestFunction {
    pub fn new(family: Family, center: Vec<f64>, width: f64, amplitude: f64) -> Result<Self> {
        if !(1..=2).contains(&center.len()) {
            return Err(Error::config(format!(
                "center must have 1 or 2 coordinates, got {}",
                center.len()
            )));
        }
        if center.iter().any(|c| !c.is_finite()) {
            return Err(Error::config("center coordinates must be finite"));
        }
        if !(width > 0.0 && width.is_finite()) {
            return Err(Error::config(format!(
                "width must be positive, got {width}"
            )));
        }
        if !amplitude.is_finite() {
            return Err(Error::config("amplitude must be finite"));
        }
        Ok(Self {
            family,
            center,
            width,
            amplitude,
        })
    }

    pub fn gaussian(center: Vec<f64>, width: f64, amplitude: f64) -> Result<Self> {
        Self::new(Family::Gaussian, center, width, amplitude)
    }

    pub fn bump(center: Vec<f64>, width: f64, amplitude: f64) -> Result<Self> {
        Self::new(Family::Bump, center, width, amplitude)
    }

    pub fn dim(&self) -> usize {
        self.center.len()
    }

    pub fn scaled(&self, alpha: f64) -> Self {
        Self {
            amplitude: alpha * self.amplitude,
            ..self.clone()
        }
    }

    pub fn translated(&self, a: &[f64]) -> Self {
        let center = self.center.iter().zip(a).map(|(c, d)| c + d).collect();
        Self {
            center,
            ..self.clone()
        }
    }

    /// Radius around the center outside which the function is zero (bump)
    /// or below e^{−50} of its peak (Gaussian).
    pub fn support_radius(&self) -> f64 {
        match self.family {
            Family::Gaussian => 10.0 * self.width,
            Family::Bump => self.width,
        }
    }

    pub fn sup_norm(&self) -> f64 {
        match self.family {
            Family::Gaussian => self.amplitude.abs(),
            Family::Bump => self.amplitude.abs() * (-1.0f64).exp(),
        }
    }

    pub fn check_point(&self, x: &[f64]) -> Result<()> {
        if x.len() != self.dim() {
            return Err(Error::config(format!(
                "point has {} coordinates but the test function lives in dimension {}",
                x.len(),
                self.dim()
            )));
        }
        if x.iter().any(|v| !v.is_finite()) {
            return Err(Error::domain("evaluation point must be finite"));
        }
        Ok(())
    }

    fn offset_sq(&self, x: &[f64]) -> f64 {
        x.iter()
            .zip(&self.center)
            .map(|(a, c)| (a - c) * (a - c))
            .sum()
    }

    pub fn value(&self, x: &[f64]) -> f64 {
        let r2 = self.offset_sq(x);
        let w2 = self.width * self.width;
        match self.family {
            Family::Gaussian => self.amplitude * (-0.5 * r2 / w2).exp(),
            Family::Bump => {
                let rho = r2 / w2;
                if rho >= 1.0 {
                    0.0
                } else {
                    self.amplitude * (-1.0 / (1.0 - rho)).exp()
                }
            }
        }
    }

    /// Hessian as a row-major n×n array (n ≤ 2).
    pub fn hessian(&self, x: &[f64]) -> [[f64; 2]; 2] {
        let n = self.dim();
        let w2 = self.width * self.width;
        let z: Vec<f64> = x.iter().zip(&self.center).map(|(a, c)| a - c).collect();
        let mut h = [[0.0; 2]; 2];
        match self.family {
            Family::Gaussian => {
                let u = self.value(x);
                for i in 0..n {
                    for j in 0..n {
                        let delta = if i == j { 1.0 } else { 0.0 };
                        h[i][j] = u * (z[i] * z[j] / (w2 * w2) - delta / w2);
                    }
                }
            }
            Family::Bump => {
                let rho = self.offset_sq(x) / w2;
                if rho < 1.0 {
                    let g = self.amplitude * (-1.0 / (1.0 - rho)).exp();
                    let om = 1.0 - rho;
                    let g1 = -g / (om * om);
                    let g2 = g * (2.0 * rho - 1.0) / (om * om * om * om);
                    for i in 0..n {
                        for j in 0..n {
                            let delta = if i == j { 1.0 } else { 0.0 };
                            h[i][j] = g2 * 4.0 * z[i] * z[j] / (w2 * w2) + g1 * 2.0 * delta / w2;
                        }
                    }
                }
            }
        }
        h
    }

    pub fn laplacian(&self, x: &[f64]) -> f64 {
        let h = self.hessian(x);
        (0..self.dim()).map(|i| h[i][i]).sum()
    }

    /// 2u(x) − u(x+y) − u(x−y), free of cancellation for small |y|.
    pub fn second_difference(&self, x: &[f64], y: &[f64]) -> f64 {
        let n = self.dim();
        let y2: f64 = y.iter().map(|v| v * v).sum();
        match self.family {
            Family::Gaussian => {
                let w2 = self.width * self.width;
                let p = 0.5 * y2 / w2;
                let q: f64 = (0..n).map(|i| (x[i] - self.center[i]) * y[i]).sum::<f64>() / w2;
                if q.abs() < 40.0 {
                    let sh = (0.5 * q).sinh();
                    -2.0 * self.value(x) * ((-p).exp_m1() + 2.0 * (-p).exp() * sh * sh)
                } else {
                    self.direct_difference(x, y)
                }
            }
            Family::Bump => {
                if y2.sqrt() < BUMP_TAYLOR_RADIUS * self.width {
                    let h = self.hessian(x);
                    let mut quad = 0.0;
                    for i in 0..n {
                        for j in 0..n {
                            quad += y[i] * h[i][j] * y[j];
                        }
                    }
                    -quad
                } else {
                    self.direct_difference(x, y)
                }
            }
        }
    }

    fn direct_difference(&self, x: &[f64], y: &[f64]) -> f64 {
        let mut xp = [0.0; 2];
        let mut xm = [0.0; 2];
        for i in 0..self.dim() {
            xp[i] = x[i] + y[i];
            xm[i] = x[i] - y[i];
        }
        let n = self.dim();
        2.0 * self.value(x) - self.value(&xp[..n]) - self.value(&xm[..n])
    }

    /// Unitary Fourier transform (2π)^{−n/2}∫u(x)e^{−iξ·x}dx as (re, im).
    /// Available for Gaussians only.
    pub fn fourier_transform(&self, xi: &[f64]) -> Result<(f64, f64)> {
        match self.family {
            Family::Gaussian => {
                let w = self.width;
                let xi2: f64 = xi.iter().map(|v| v * v).sum();
                let mag = self.amplitude * w.powi(self.dim() as i32) * (-0.5 * w * w * xi2).exp();
                let phase: f64 = -xi.iter().zip(&self.center).map(|(a, c)| a * c).sum::<f64>();
                Ok((mag * phase.cos(), mag * phase.sin()))
            }
            Family::Bump => Err(Error::Unsupported(
                "the bump family has no closed-form Fourier transform".into(),
            )),
        }
    }
}
