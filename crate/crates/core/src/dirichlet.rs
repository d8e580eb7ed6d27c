//! Galerkin discretization of the Dirichlet problem with P1/Q1 hats that
//! vanish on and outside ∂Ω.

use nalgebra::{Cholesky, DMatrix, DVector, SymmetricEigen};
use rustfft::num_complex::Complex;
use rustfft::FftPlanner;
use serde::{Deserialize, Serialize};

use crate::domain::{DomainSpec, Grid};
use crate::energy::FormTables;
use crate::error::{Error, Result};
use crate::kernels::{symbol, KernelPart, RadialKernel, SymbolKind};
use crate::parallel;
use crate::specfun::OperatorParams;

/// Lattice shells of periodic images removed from the torus route.
const IMAGE_SHELLS: usize = 32;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AssemblyRoute {
    Kernel,
    TorusSymbol,
}

impl AssemblyRoute {
    pub fn as_str(self) -> &'static str {
        match self {
            AssemblyRoute::Kernel => "kernel",
            AssemblyRoute::TorusSymbol => "torus_symbol",
        }
    }
}

impl std::str::FromStr for AssemblyRoute {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "kernel" => Ok(AssemblyRoute::Kernel),
            "torus_symbol" | "torus" => Ok(AssemblyRoute::TorusSymbol),
            other => Err(Error::config(format!("unknown assembly route '{other}'"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Basis {
    P1Hat,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Discretization {
    pub elements_per_axis: usize,
    pub basis: Basis,
    /// Side T of the periodic box used by the symbol route.
    pub torus_side: f64,
    /// Frequencies per axis on that box (a power of two).
    pub torus_points: usize,
}

impl Discretization {
    /// Default torus: T = M h with M the smallest power of two such that
    /// T ≥ 4·diam + 2, and q·M frequencies per axis (q = 16 in 1D, 4 in 2D).
    pub fn new(domain: &DomainSpec, elements_per_axis: usize) -> Result<Self> {
        let grid = Grid::new(domain.clone(), elements_per_axis)?;
        let m = ((4.0 * domain.diam() + 2.0) / grid.h).ceil() as usize;
        let m = m.next_power_of_two();
        let q = if domain.dim() == 1 { 16 } else { 4 };
        Ok(Self {
            elements_per_axis,
            basis: Basis::P1Hat,
            torus_side: m as f64 * grid.h,
            torus_points: m * q,
        })
    }

    pub fn with_torus(mut self, side: f64, points: usize) -> Self {
        self.torus_side = side;
        self.torus_points = points;
        self
    }

    pub fn grid(&self, domain: &DomainSpec) -> Result<Grid> {
        Grid::new(domain.clone(), self.elements_per_axis)
    }

    /// Checks the padding rules and returns the number of torus samples per
    /// grid cell.
    fn validate_torus(&self, grid: &Grid) -> Result<usize> {
        let need = 4.0 * grid.domain.diam() + 2.0;
        if !(self.torus_side >= need * (1.0 - 1e-12)) {
            return Err(Error::config(format!(
                "torus side {} is below 4·diam + 2 = {need}",
                self.torus_side
            )));
        }
        if !self.torus_points.is_power_of_two() {
            return Err(Error::config(format!(
                "torus points {} is not a power of two",
                self.torus_points
            )));
        }
        let per_cell = self.torus_points as f64 * grid.h / self.torus_side;
        let q = per_cell.round();
        if q < 2.0 || (per_cell - q).abs() > 1e-9 * per_cell {
            return Err(Error::config(format!(
                "torus sample spacing must divide the grid spacing at least twice, got {per_cell} samples per cell"
            )));
        }
        Ok(q as usize)
    }
}

pub struct AssembledSystem {
    pub stiffness: DMatrix<f64>,
    pub mass: DMatrix<f64>,
    pub route: AssemblyRoute,
    pub params: OperatorParams,
    pub domain: DomainSpec,
    pub grid: Grid,
}

impl std::fmt::Debug for AssembledSystem {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("AssembledSystem")
            .field("dim", &self.stiffness.nrows())
            .field("route", &self.route)
            .field("params", &self.params)
            .field("domain", &self.domain)
            .finish()
    }
}

impl AssembledSystem {
    pub fn dim(&self) -> usize {
        self.stiffness.nrows()
    }

    /// ‖S − Sᵀ‖_F / ‖S‖_F.
    pub fn symmetry_defect(&self) -> f64 {
        (&self.stiffness - self.stiffness.transpose()).norm() / self.stiffness.norm()
    }
}

fn toeplitz_matrix(grid: &Grid, entry: impl Fn(&[usize]) -> f64 + Sync + Send) -> DMatrix<f64> {
    let n = grid.interior_count();
    let rows = parallel::map_indexed(n, |i| {
        let a = grid.interior_index(i);
        (0..n)
            .map(|j| {
                let b = grid.interior_index(j);
                let d: Vec<usize> = a.iter().zip(&b).map(|(x, y)| x.abs_diff(*y)).collect();
                entry(&d)
            })
            .collect::<Vec<f64>>()
    });
    DMatrix::from_fn(n, n, |i, j| rows[i][j])
}

fn mass_1d(d: usize, h: f64) -> f64 {
    match d {
        0 => 2.0 * h / 3.0,
        1 => h / 6.0,
        _ => 0.0,
    }
}

pub fn mass_matrix(grid: &Grid) -> DMatrix<f64> {
    let h = grid.h;
    toeplitz_matrix(grid, |d| d.iter().map(|&x| mass_1d(x, h)).product())
}

/// Offsets-table of 𝓔_{s+Log}(φ_0, φ_d) by Plancherel on the padded torus:
/// (2π/T)^n Σ_k σ(ξ_k) |φ̂(ξ_k)|² e^{iξ_k·dh}, evaluated for all d at once by
/// an inverse FFT.
fn torus_table(grid: &Grid, disc: &Discretization, params: &OperatorParams, q: usize) -> Vec<f64> {
    let n = grid.dim();
    let p = disc.torus_points;
    let t = disc.torus_side;
    let h = grid.h;
    let dxi = 2.0 * std::f64::consts::PI / t;
    let freq = |k: usize| if k < p / 2 { k as f64 } else { k as f64 - p as f64 } * dxi;
    let hat_sq = |xi: f64| {
        let a = 0.5 * xi * h;
        let sc = if a.abs() < 1e-8 { 1.0 } else { a.sin() / a };
        h * h * sc.powi(4) / (2.0 * std::f64::consts::PI)
    };
    let total = p.pow(n as u32);
    let values = parallel::map_indexed(total, |k| {
        let (x, y) = if n == 1 {
            (freq(k), 0.0)
        } else {
            (freq(k % p), freq(k / p))
        };
        let r = (x * x + y * y).sqrt();
        let w = if n == 1 {
            hat_sq(x)
        } else {
            hat_sq(x) * hat_sq(y)
        };
        Complex::new(
            symbol(r, SymbolKind::Fraclog, params) * w * dxi.powi(n as i32),
            0.0,
        )
    });
    let mut data = values;
    let mut planner = FftPlanner::<f64>::new();
    let fft = planner.plan_fft_inverse(p);
    if n == 1 {
        fft.process(&mut data);
    } else {
        for row in data.chunks_mut(p) {
            fft.process(row);
        }
        let mut col = vec![Complex::new(0.0, 0.0); p];
        for c in 0..p {
            for r in 0..p {
                col[r] = data[c + p * r];
            }
            fft.process(&mut col);
            for r in 0..p {
                data[c + p * r] = col[r];
            }
        }
    }
    let len = grid.interior_per_axis();
    let offsets: Vec<[usize; 2]> = if n == 1 {
        (0..len[0]).map(|d| [d, 0]).collect()
    } else {
        (0..len[1])
            .flat_map(|d1| (0..len[0]).map(move |d0| [d0, d1]))
            .collect()
    };
    let kernel = RadialKernel::new(*params);
    parallel::map_slice(&offsets, |&[d0, d1]| {
        let raw = data[d0 * q + p * d1 * q].re;
        raw - periodic_images(&kernel, [d0 as f64 * h, d1 as f64 * h], t, h)
    })
}

/// Σ_{j≠0} 𝓔(φ_0, φ_{x+jT}) for the lattice images the torus sum adds, using
/// the far-field value −h^{2n} K(|x + jT|) and a continuous tail beyond
/// |j| > IMAGE_SHELLS.
fn periodic_images(kernel: &RadialKernel, x: [f64; 2], t: f64, h: f64) -> f64 {
    let n = kernel.params.n();
    let jmax = IMAGE_SHELLS as i64;
    let mut acc = 0.0;
    let range2 = if n == 1 { 0..=0 } else { -jmax..=jmax };
    for j0 in -jmax..=jmax {
        for j1 in range2.clone() {
            if (j0, j1) == (0, 0) || j0 * j0 + j1 * j1 > jmax * jmax {
                continue;
            }
            let a = x[0] + j0 as f64 * t;
            let b = x[1] + j1 as f64 * t;
            acc += kernel.value(KernelPart::Full, (a * a + b * b).sqrt());
        }
    }
    let radius = (jmax as f64 + 0.5) * t;
    let sphere = kernel.consts.sphere_measure;
    acc += sphere * kernel.tail(KernelPart::Full, radius) / t.powi(n as i32);
    -h.powi(2 * n as i32) * acc
}

pub fn assemble(
    domain: &DomainSpec,
    disc: &Discretization,
    params: &OperatorParams,
    route: AssemblyRoute,
) -> Result<AssembledSystem> {
    if domain.dim() != params.n() {
        return Err(Error::config(format!(
            "domain dimension {} does not match n = {}",
            domain.dim(),
            params.n()
        )));
    }
    let grid = disc.grid(domain)?;
    let stiffness = match route {
        AssemblyRoute::Kernel => {
            let tables = FormTables::new(&grid, params)?;
            let n = grid.interior_count();
            let rows = parallel::map_indexed(n, |i| {
                (0..n)
                    .map(|j| tables.stiffness_entry(i, j))
                    .collect::<Vec<f64>>()
            });
            DMatrix::from_fn(n, n, |i, j| rows[i][j])
        }
        AssemblyRoute::TorusSymbol => {
            let q = disc.validate_torus(&grid)?;
            let table = torus_table(&grid, disc, params, q);
            let l0 = grid.interior_per_axis()[0];
            toeplitz_matrix(&grid, |d| {
                if d.len() == 1 {
                    table[d[0]]
                } else {
                    table[d[0] + l0 * d[1]]
                }
            })
        }
    };
    if stiffness.iter().any(|v| !v.is_finite()) {
        return Err(Error::Integrity(
            "stiffness matrix has non-finite entries".into(),
        ));
    }
    let mass = mass_matrix(&grid);
    Ok(AssembledSystem {
        stiffness,
        mass,
        route,
        params: *params,
        domain: domain.clone(),
        grid,
    })
}

#[derive(Debug, Clone)]
pub struct SpectrumResult {
    pub eigenvalues: Vec<f64>,
    /// Mass-orthonormal eigenvectors as columns.
    pub eigenvectors: Option<DMatrix<f64>>,
    pub route: AssemblyRoute,
    /// ‖S v − λ M v‖ per pair.
    pub residuals: Vec<f64>,
}

impl SpectrumResult {
    /// max |VᵀMV − I|.
    pub fn gram_defect(&self, mass: &DMatrix<f64>) -> Option<f64> {
        let v = self.eigenvectors.as_ref()?;
        let g = v.transpose() * mass * v;
        let id = DMatrix::<f64>::identity(g.nrows(), g.ncols());
        Some((g - id).abs().max())
    }
}

fn normalize_sign(v: &mut DVector<f64>) {
    let scale = v.amax();
    if let Some(first) = v.iter().find(|x| x.abs() > 1e-10 * scale).copied() {
        if first < 0.0 {
            v.neg_mut();
        }
    }
}

/// Lowest `count` pairs of S v = λ M v.
pub fn solve_generalized(
    stiffness: &DMatrix<f64>,
    mass: &DMatrix<f64>,
    count: usize,
) -> Result<(Vec<f64>, DMatrix<f64>, Vec<f64>)> {
    let n = stiffness.nrows();
    if count == 0 || count > n {
        return Err(Error::config(format!(
            "eigenpair count must lie in 1..={n}, got {count}"
        )));
    }
    let chol = Cholesky::new(mass.clone())
        .ok_or_else(|| Error::Integrity("mass matrix is not symmetric positive definite".into()))?;
    let l = chol.l();
    let x = l
        .solve_lower_triangular(stiffness)
        .ok_or_else(|| Error::Integrity("singular Cholesky factor".into()))?;
    let a = l
        .solve_lower_triangular(&x.transpose())
        .ok_or_else(|| Error::Integrity("singular Cholesky factor".into()))?;
    let a = 0.5 * (&a + a.transpose());
    let eig = SymmetricEigen::new(a);
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| eig.eigenvalues[i].partial_cmp(&eig.eigenvalues[j]).unwrap());
    let lt = l.transpose();
    let mut values = Vec::with_capacity(count);
    let mut vectors = DMatrix::zeros(n, count);
    let mut residuals = Vec::with_capacity(count);
    for (c, &i) in order.iter().take(count).enumerate() {
        let lambda = eig.eigenvalues[i];
        let y = eig.eigenvectors.column(i).into_owned();
        let mut v = lt
            .solve_upper_triangular(&y)
            .ok_or_else(|| Error::Integrity("singular Cholesky factor".into()))?;
        normalize_sign(&mut v);
        residuals.push((stiffness * &v - lambda * (mass * &v)).norm());
        values.push(lambda);
        vectors.set_column(c, &v);
    }
    Ok((values, vectors, residuals))
}

pub fn solve_eigs(system: &AssembledSystem, count: usize) -> Result<SpectrumResult> {
    let (eigenvalues, v, residuals) = solve_generalized(&system.stiffness, &system.mass, count)?;
    Ok(SpectrumResult {
        eigenvalues,
        eigenvectors: Some(v),
        route: system.route,
        residuals,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CoercivityCertificate {
    pub alpha_r: f64,
    pub condition_rhs: f64,
    /// Grid minimum of V, standing in for its essential infimum.
    pub min_v: f64,
    pub certified: bool,
}

/// c|S|/s² + (|b| c/s)|S| r^{−2s}, the lower bound V must exceed.
pub fn coercivity_threshold(params: &OperatorParams, r: f64) -> f64 {
    let c = params.constants();
    let s = params.s();
    c.c_ns * c.sphere_measure / (s * s)
        + c.b_ns.abs() * c.c_ns / s * c.sphere_measure * r.powf(-2.0 * s)
}

/// 1 − |b| / (2 ln(1/r)).
pub fn alpha_r(params: &OperatorParams, r: f64) -> f64 {
    1.0 - params.constants().b_ns.abs() / (2.0 * (1.0 / r).ln())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PoissonSolution {
    /// Values at the interior nodes.
    pub coefficients: Vec<f64>,
    pub certificate: CoercivityCertificate,
    /// ‖(S + M_V)c − M f‖ / ‖M f‖ (0 when f = 0).
    pub residual: f64,
    /// [u]_{s+Log,+} / (‖f‖_dual / α_r); at most 1 when certified.
    pub a_priori_ratio: f64,
    pub sup_norm: f64,
}

/// 1D integral of three P1 hats whose node indices are i, j, k.
fn triple_1d(i: usize, j: usize, k: usize, h: f64) -> f64 {
    let lo = i.min(j).min(k);
    let hi = i.max(j).max(k);
    if hi - lo > 1 {
        0.0
    } else if hi == lo {
        h / 2.0
    } else {
        h / 12.0
    }
}

/// ∫ V_h φ_i φ_j with V_h the P1/Q1 interpolant of the node samples of V.
fn potential_matrix(grid: &Grid, v_nodes: &[f64]) -> DMatrix<f64> {
    let n = grid.interior_count();
    let dim = grid.dim();
    let np = grid.nodes_per_axis();
    let h = grid.h;
    // interior multi-index → node multi-index is a shift by one
    let node_of =
        |j: usize| -> Vec<usize> { grid.interior_index(j).into_iter().map(|x| x + 1).collect() };
    let rows = parallel::map_indexed(n, |i| {
        let a = node_of(i);
        let mut row = vec![0.0; n];
        for (j, slot) in row.iter_mut().enumerate() {
            let b = node_of(j);
            if a.iter().zip(&b).any(|(x, y)| x.abs_diff(*y) > 1) {
                continue;
            }
            let mut acc = 0.0;
            let offsets: Vec<[i64; 2]> = if dim == 1 {
                (-1..=1).map(|o| [o, 0]).collect()
            } else {
                (-1..=1)
                    .flat_map(|o| (-1..=1).map(move |p| [o, p]))
                    .collect()
            };
            for off in offsets {
                let k: Vec<usize> = (0..dim)
                    .map(|ax| (a[ax] as i64 + off[ax]) as usize)
                    .collect();
                let flat = if dim == 1 { k[0] } else { k[0] + np[0] * k[1] };
                let w: f64 = (0..dim)
                    .map(|ax| triple_1d(a[ax], b[ax], k[ax], h))
                    .product();
                acc += w * v_nodes[flat];
            }
            *slot = acc;
        }
        row
    });
    DMatrix::from_fn(n, n, |i, j| rows[i][j])
}

/// ∫ f_h φ_i with f_h the interpolant of the node samples of f.
fn load_vector(grid: &Grid, f_nodes: &[f64]) -> DVector<f64> {
    let n = grid.interior_count();
    let np = grid.nodes_per_axis();
    let h = grid.h;
    DVector::from_fn(n, |i, _| {
        let a: Vec<usize> = grid.interior_index(i).into_iter().map(|x| x + 1).collect();
        if a.len() == 1 {
            (0..3)
                .map(|o| mass_1d(1usize.abs_diff(o), h) * f_nodes[a[0] + o - 1])
                .sum()
        } else {
            let mut acc = 0.0;
            for o in 0..3 {
                for p in 0..3 {
                    let k = (a[0] + o - 1) + np[0] * (a[1] + p - 1);
                    acc += mass_1d(1usize.abs_diff(o), h)
                        * mass_1d(1usize.abs_diff(p), h)
                        * f_nodes[k];
                }
            }
            acc
        }
    })
}

/// Solves 𝓔(u, φ) + ∫V u φ = ∫ f φ for all hats φ. `v_nodes` and `f_nodes`
/// are samples at every grid node. If V fails the coercivity condition the
/// solve is still carried out and returned inside [`Error::Uncertified`].
pub fn solve_poisson(
    system: &AssembledSystem,
    v_nodes: &[f64],
    f_nodes: &[f64],
    r: f64,
) -> Result<PoissonSolution> {
    let grid = &system.grid;
    let params = &system.params;
    let b = params.constants().b_ns;
    let r_max = (-0.5 * b.abs()).exp();
    if !(r > 0.0 && r < r_max) {
        return Err(Error::domain(format!(
            "r must lie in (0, e^(-|b|/2)) = (0, {r_max}), got {r}"
        )));
    }
    let nodes = grid.node_count();
    if v_nodes.len() != nodes || f_nodes.len() != nodes {
        return Err(Error::config(format!("V and f need {nodes} node samples")));
    }
    if v_nodes.iter().chain(f_nodes).any(|x| !x.is_finite()) {
        return Err(Error::config("V and f samples must be finite"));
    }
    let min_v = v_nodes.iter().copied().fold(f64::INFINITY, f64::min);
    let condition_rhs = coercivity_threshold(params, r);
    let alpha = alpha_r(params, r);
    let certificate = CoercivityCertificate {
        alpha_r: alpha,
        condition_rhs,
        min_v,
        certified: min_v >= condition_rhs,
    };

    let a = &system.stiffness + potential_matrix(grid, v_nodes);
    let rhs = load_vector(grid, f_nodes);
    let coeffs = match Cholesky::new(a.clone()) {
        Some(ch) => ch.solve(&rhs),
        None => a.clone().lu().solve(&rhs).ok_or_else(|| Error::Numerical {
            what: "Poisson system solve (singular matrix)".into(),
            estimate: f64::NAN,
        })?,
    };
    let rhs_norm = rhs.norm();
    let residual = if rhs_norm == 0.0 {
        (&a * &coeffs).norm()
    } else {
        (&a * &coeffs - &rhs).norm() / rhs_norm
    };

    // ‖u‖ = [u]_+, ‖f‖_dual = sup ⟨f,φ⟩/[φ]_+ = sqrt(bᵀ G₊⁻¹ b)
    let tables = FormTables::new(grid, params)?;
    let n = grid.interior_count();
    let rows = parallel::map_indexed(n, |i| {
        (0..n).map(|j| tables.entry(i, j)[0]).collect::<Vec<f64>>()
    });
    let gplus = DMatrix::from_fn(n, n, |i, j| rows[i][j]);
    let u_norm = coeffs.dot(&(&gplus * &coeffs)).max(0.0).sqrt();
    let dual = match Cholesky::new(gplus) {
        Some(ch) => rhs.dot(&ch.solve(&rhs)).max(0.0).sqrt(),
        None => {
            return Err(Error::Integrity(
                "E₊ Gram matrix is not positive definite".into(),
            ))
        }
    };
    let a_priori_ratio = if dual == 0.0 {
        0.0
    } else {
        u_norm / (dual / alpha)
    };
    let sup_norm = coeffs.amax();
    let solution = PoissonSolution {
        coefficients: coeffs.iter().copied().collect(),
        certificate,
        residual,
        a_priori_ratio,
        sup_norm,
    };
    if certificate.certified {
        Ok(solution)
    } else {
        Err(Error::Uncertified {
            min_v,
            required: condition_rhs,
            solution: Box::new(solution),
        })
    }
}
