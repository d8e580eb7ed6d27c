//! Box domains and the uniform grids the Galerkin and energy code live on.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Shape {
    Interval,
    Box,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DomainSpec {
    pub shape: Shape,
    pub bounds: Vec<(f64, f64)>,
}

impl DomainSpec {
    pub fn new(bounds: Vec<(f64, f64)>) -> Result<Self> {
        let shape = match bounds.len() {
            1 => Shape::Interval,
            2 => Shape::Box,
            k => {
                return Err(Error::config(format!(
                    "domains must be 1- or 2-dimensional, got {k} axes"
                )))
            }
        };
        for (i, &(lo, hi)) in bounds.iter().enumerate() {
            if !(lo.is_finite() && hi.is_finite() && lo < hi) {
                return Err(Error::config(format!(
                    "axis {i}: need low < high, got ({lo}, {hi})"
                )));
            }
        }
        Ok(Self { shape, bounds })
    }

    pub fn interval(lo: f64, hi: f64) -> Result<Self> {
        Self::new(vec![(lo, hi)])
    }

    pub fn square(lo: f64, hi: f64) -> Result<Self> {
        Self::new(vec![(lo, hi), (lo, hi)])
    }

    pub fn dim(&self) -> usize {
        self.bounds.len()
    }

    pub fn lengths(&self) -> Vec<f64> {
        self.bounds.iter().map(|(a, b)| b - a).collect()
    }

    /// Euclidean diameter of the box.
    pub fn diam(&self) -> f64 {
        self.lengths().iter().map(|l| l * l).sum::<f64>().sqrt()
    }

    pub fn volume(&self) -> f64 {
        self.lengths().iter().product()
    }
}

/// Uniform grid with equal spacing h on every axis, nodes on the boundary.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Grid {
    pub domain: DomainSpec,
    pub h: f64,
    /// Elements (cells) per axis.
    pub elements: Vec<usize>,
}

impl Grid {
    /// Grid with `elements_first` cells on the first axis; the other axes get
    /// the same spacing and must be an integer number of cells long.
    pub fn new(domain: DomainSpec, elements_first: usize) -> Result<Self> {
        let lens = domain.lengths();
        let h = lens[0] / elements_first as f64;
        let mut elements = vec![elements_first];
        for (i, &l) in lens.iter().enumerate().skip(1) {
            let e = l / h;
            let r = e.round();
            if (e - r).abs() > 1e-9 * e || r < 1.0 {
                return Err(Error::config(format!(
                    "axis {i} of length {l} is not a whole number of cells of width {h}"
                )));
            }
            elements.push(r as usize);
        }
        if elements.iter().any(|&e| e < 8) {
            return Err(Error::Resolution(format!(
                "at least 8 cells per axis are required, got {elements:?}"
            )));
        }
        Ok(Self {
            domain,
            h,
            elements,
        })
    }

    pub fn dim(&self) -> usize {
        self.elements.len()
    }

    /// Nodes per axis including the boundary.
    pub fn nodes_per_axis(&self) -> Vec<usize> {
        self.elements.iter().map(|e| e + 1).collect()
    }

    /// Interior nodes per axis.
    pub fn interior_per_axis(&self) -> Vec<usize> {
        self.elements.iter().map(|e| e - 1).collect()
    }

    pub fn node_count(&self) -> usize {
        self.nodes_per_axis().iter().product()
    }

    pub fn interior_count(&self) -> usize {
        self.interior_per_axis().iter().product()
    }

    pub fn coordinate(&self, axis: usize, i: usize) -> f64 {
        self.domain.bounds[axis].0 + i as f64 * self.h
    }

    /// Multi-index of flat node `k` (first axis fastest).
    pub fn node_index(&self, k: usize) -> Vec<usize> {
        let np = self.nodes_per_axis();
        let mut out = Vec::with_capacity(np.len());
        let mut rem = k;
        for &m in &np {
            out.push(rem % m);
            rem /= m;
        }
        out
    }

    pub fn node_point(&self, k: usize) -> Vec<f64> {
        self.node_index(k)
            .iter()
            .enumerate()
            .map(|(a, &i)| self.coordinate(a, i))
            .collect()
    }

    pub fn is_boundary(&self, k: usize) -> bool {
        self.node_index(k)
            .iter()
            .zip(&self.elements)
            .any(|(&i, &e)| i == 0 || i == e)
    }

    /// Flat node index of each interior unknown, in interior order.
    pub fn interior_nodes(&self) -> Vec<usize> {
        (0..self.node_count())
            .filter(|&k| !self.is_boundary(k))
            .collect()
    }

    /// Interior multi-index (0-based) of each interior unknown.
    pub fn interior_index(&self, j: usize) -> Vec<usize> {
        let ip = self.interior_per_axis();
        let mut out = Vec::with_capacity(ip.len());
        let mut rem = j;
        for &m in &ip {
            out.push(rem % m);
            rem /= m;
        }
        out
    }

    pub fn interior_points(&self) -> Vec<Vec<f64>> {
        self.interior_nodes()
            .into_iter()
            .map(|k| self.node_point(k))
            .collect()
    }
}
