//! Boxes, tensor grids and nodal potentials.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Default cap on the total number of grid nodes. Dense eigendecomposition
/// is cubic in the node count.
pub const DEFAULT_NODE_CAP: usize = 5000;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum BoundaryCondition {
    Dirichlet,
    Neumann,
}

/// Open box `(α_1, β_1) × … × (α_d, β_d)` with finite extents, `d ∈ {1, 2, 3}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoxDomain {
    intervals: Vec<(f64, f64)>,
}

impl BoxDomain {
    pub fn new(intervals: Vec<(f64, f64)>) -> Result<Self> {
        if intervals.is_empty() || intervals.len() > 3 {
            return Err(Error::invalid(format!(
                "box dimension must be 1, 2 or 3, got {}",
                intervals.len()
            )));
        }
        for (i, &(a, b)) in intervals.iter().enumerate() {
            if !a.is_finite() || !b.is_finite() {
                return Err(Error::invalid(format!("axis {i}: extents must be finite")));
            }
            if a >= b {
                return Err(Error::invalid(format!(
                    "axis {i}: lower end {a} must be below upper end {b}"
                )));
            }
        }
        Ok(Self { intervals })
    }

    /// `(lo, hi)^d`.
    pub fn cube(dim: usize, lo: f64, hi: f64) -> Result<Self> {
        Self::new(vec![(lo, hi); dim])
    }

    /// `(-L/2, L/2)^d`, the box `Λ_L`.
    pub fn centered(dim: usize, side: f64) -> Result<Self> {
        Self::cube(dim, -side / 2.0, side / 2.0)
    }

    pub fn dim(&self) -> usize {
        self.intervals.len()
    }

    pub fn intervals(&self) -> &[(f64, f64)] {
        &self.intervals
    }

    pub fn lower(&self, axis: usize) -> f64 {
        self.intervals[axis].0
    }

    pub fn upper(&self, axis: usize) -> f64 {
        self.intervals[axis].1
    }

    pub fn extent(&self, axis: usize) -> f64 {
        let (a, b) = self.intervals[axis];
        b - a
    }

    pub fn volume(&self) -> f64 {
        (0..self.dim()).map(|i| self.extent(i)).product()
    }

    /// Euclidean distance from `x` to the closed box (zero inside).
    pub fn distance_to(&self, x: &[f64]) -> f64 {
        self.intervals
            .iter()
            .zip(x)
            .map(|(&(a, b), &xi)| {
                let d = if xi < a {
                    a - xi
                } else if xi > b {
                    xi - b
                } else {
                    0.0
                };
                d * d
            })
            .sum::<f64>()
            .sqrt()
    }
}

/// Uniform tensor grid on a [`BoxDomain`].
///
/// Dirichlet grids hold the interior nodes `α + (i+1)h`, `h = (β-α)/(n+1)`;
/// Neumann grids are cell centred, `α + (i+½)h` with `h = (β-α)/n`. Nodes are
/// numbered with the last axis varying fastest.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Grid {
    domain: BoxDomain,
    points: Vec<usize>,
    spacing: Vec<f64>,
    bc: BoundaryCondition,
}

impl Grid {
    pub fn new(domain: BoxDomain, points_per_axis: &[usize], bc: BoundaryCondition) -> Result<Self> {
        Self::with_cap(domain, points_per_axis, bc, DEFAULT_NODE_CAP)
    }

    pub fn with_cap(
        domain: BoxDomain,
        points_per_axis: &[usize],
        bc: BoundaryCondition,
        cap: usize,
    ) -> Result<Self> {
        if points_per_axis.len() != domain.dim() {
            return Err(Error::invalid(format!(
                "{} point counts given for a {}-dimensional box",
                points_per_axis.len(),
                domain.dim()
            )));
        }
        if let Some(&n) = points_per_axis.iter().find(|&&n| n < 2) {
            return Err(Error::invalid(format!(
                "points per axis must be at least 2, got {n}"
            )));
        }
        let nodes = points_per_axis
            .iter()
            .try_fold(1usize, |acc, &n| acc.checked_mul(n))
            .unwrap_or(usize::MAX);
        if nodes > cap {
            return Err(Error::GridCapExceeded { nodes, cap });
        }
        let spacing = points_per_axis
            .iter()
            .enumerate()
            .map(|(axis, &n)| match bc {
                BoundaryCondition::Dirichlet => domain.extent(axis) / (n as f64 + 1.0),
                BoundaryCondition::Neumann => domain.extent(axis) / n as f64,
            })
            .collect();
        Ok(Self {
            domain,
            points: points_per_axis.to_vec(),
            spacing,
            bc,
        })
    }

    /// Grid with spacing close to `1/resolution` on every axis.
    pub fn with_resolution(
        domain: BoxDomain,
        resolution: f64,
        bc: BoundaryCondition,
        cap: usize,
    ) -> Result<Self> {
        if !(resolution > 0.0 && resolution.is_finite()) {
            return Err(Error::invalid(format!(
                "resolution must be positive, got {resolution}"
            )));
        }
        let points: Vec<usize> = (0..domain.dim())
            .map(|axis| {
                let cells = (domain.extent(axis) * resolution).round().max(1.0) as usize;
                match bc {
                    BoundaryCondition::Dirichlet => cells.saturating_sub(1).max(2),
                    BoundaryCondition::Neumann => cells.max(2),
                }
            })
            .collect();
        Self::with_cap(domain, &points, bc, cap)
    }

    pub fn domain(&self) -> &BoxDomain {
        &self.domain
    }

    pub fn dim(&self) -> usize {
        self.domain.dim()
    }

    pub fn points_per_axis(&self) -> &[usize] {
        &self.points
    }

    pub fn spacing(&self) -> &[f64] {
        &self.spacing
    }

    pub fn boundary(&self) -> BoundaryCondition {
        self.bc
    }

    pub fn len(&self) -> usize {
        self.points.iter().product()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Quadrature weight `Π h_i` of a single node.
    pub fn cell_volume(&self) -> f64 {
        self.spacing.iter().product()
    }

    /// Coordinate of the `i`-th node along `axis`.
    pub fn axis_coordinate(&self, axis: usize, i: usize) -> f64 {
        let (a, b) = self.domain.intervals[axis];
        let n = self.points[axis] as f64;
        match self.bc {
            BoundaryCondition::Dirichlet => a + (b - a) * (i as f64 + 1.0) / (n + 1.0),
            BoundaryCondition::Neumann => a + (b - a) * (i as f64 + 0.5) / n,
        }
    }

    pub fn multi_index(&self, mut node: usize) -> [usize; 3] {
        let mut out = [0usize; 3];
        for axis in (0..self.dim()).rev() {
            out[axis] = node % self.points[axis];
            node /= self.points[axis];
        }
        out
    }

    pub fn linear_index(&self, multi: &[usize]) -> usize {
        multi
            .iter()
            .zip(&self.points)
            .fold(0, |acc, (&i, &n)| acc * n + i)
    }

    /// Coordinates of a node; entries beyond `dim()` are zero.
    pub fn node(&self, node: usize) -> [f64; 3] {
        let idx = self.multi_index(node);
        let mut x = [0.0; 3];
        for axis in 0..self.dim() {
            x[axis] = self.axis_coordinate(axis, idx[axis]);
        }
        x
    }

    /// The h-weighted inner product `Π h_i · Σ u_k v_k`.
    pub fn inner(&self, u: &[f64], v: &[f64]) -> f64 {
        self.cell_volume() * u.iter().zip(v).map(|(a, b)| a * b).sum::<f64>()
    }

    pub fn norm(&self, u: &[f64]) -> f64 {
        self.inner(u, u).sqrt()
    }
}

/// Real potential sampled at grid nodes.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Potential {
    values: Vec<f64>,
    min: f64,
    max: f64,
}

impl Potential {
    pub fn new(values: Vec<f64>) -> Result<Self> {
        if values.is_empty() {
            return Err(Error::invalid("potential has no values"));
        }
        if let Some(pos) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::invalid(format!("potential value at node {pos} is not finite")));
        }
        let min = values.iter().copied().fold(f64::INFINITY, f64::min);
        let max = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        Ok(Self { values, min, max })
    }

    pub fn zeros(len: usize) -> Self {
        Self::constant(len, 0.0)
    }

    pub fn constant(len: usize, value: f64) -> Self {
        Self {
            values: vec![value; len.max(1)],
            min: value,
            max: value,
        }
    }

    pub fn from_fn(grid: &Grid, f: impl Fn(&[f64]) -> f64) -> Result<Self> {
        let d = grid.dim();
        Self::new((0..grid.len()).map(|k| f(&grid.node(k)[..d])).collect())
    }

    /// `amplitude · (1 + cos(2π x_i / period)) / 2` summed over axes: a smooth
    /// periodic bump landscape, mirror symmetric about multiples of `period / 2`.
    pub fn cos_bump(grid: &Grid, amplitude: f64, period: f64) -> Result<Self> {
        if !(period > 0.0) {
            return Err(Error::invalid("cos-bump period must be positive"));
        }
        Self::from_fn(grid, |x| {
            x.iter()
                .map(|&xi| 0.5 * amplitude * (1.0 + (2.0 * std::f64::consts::PI * xi / period).cos()))
                .sum()
        })
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn min(&self) -> f64 {
        self.min
    }

    pub fn max(&self) -> f64 {
        self.max
    }

    /// `‖V‖_∞`.
    pub fn sup_norm(&self) -> f64 {
        self.max.abs().max(self.min.abs())
    }

    /// `‖V - λ‖_∞`.
    pub fn shifted_sup(&self, lambda: f64) -> f64 {
        (self.max - lambda).max(lambda - self.min)
    }

    pub fn is_nonnegative(&self) -> bool {
        self.min >= 0.0
    }

    /// `self + t · other`.
    pub fn add_scaled(&self, other: &Potential, t: f64) -> Result<Potential> {
        if other.len() != self.len() {
            return Err(Error::ShapeMismatch {
                expected: self.len(),
                found: other.len(),
            });
        }
        Potential::new(
            self.values
                .iter()
                .zip(&other.values)
                .map(|(a, b)| a + t * b)
                .collect(),
        )
    }
}
