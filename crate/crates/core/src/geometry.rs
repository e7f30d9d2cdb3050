//! `(G, δ)`-equidistributed point sequences and the observation set
//! `S_{δ,Z} = ∪_j B(z_j, δ) ∩ Γ` as a nodal 0/1 mask.
//!
//! The lattice of cells is anchored at the lower corner of the domain: cell
//! `k ∈ N^d` is `α + kG + (0, G)^d`. Cells that only partly lie inside the
//! box keep their point when its ball meets the box.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::{BoxDomain, Grid};
use crate::rng::{lattice_key, rng_for, stream};

/// Relative slack for geometric comparisons against `δ` and cell walls.
const GEOM_TOL: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LatticePoint {
    pub cell: Vec<i64>,
    pub z: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EquidistributedSequence {
    #[serde(rename = "G")]
    pub g: f64,
    pub delta: f64,
    /// Lattice anchor, the lower corner of the domain.
    pub anchor: Vec<f64>,
    pub points: Vec<LatticePoint>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Violation {
    pub cell: Vec<i64>,
    pub reason: String,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct ValidationReport {
    pub delta_in_range: bool,
    pub violations: Vec<Violation>,
}

impl ValidationReport {
    pub fn is_ok(&self) -> bool {
        self.delta_in_range && self.violations.is_empty()
    }
}

fn cell_counts(domain: &BoxDomain, g: f64) -> Vec<i64> {
    (0..domain.dim())
        .map(|axis| ((domain.extent(axis) / g) * (1.0 - GEOM_TOL)).ceil().max(1.0) as i64)
        .collect()
}

fn for_each_cell(counts: &[i64], mut f: impl FnMut(&[i64])) {
    let mut idx = vec![0i64; counts.len()];
    loop {
        f(&idx);
        let mut axis = counts.len();
        loop {
            if axis == 0 {
                return;
            }
            axis -= 1;
            idx[axis] += 1;
            if idx[axis] < counts[axis] {
                break;
            }
            idx[axis] = 0;
        }
    }
}

fn delta_in_range(g: f64, delta: f64) -> bool {
    g > 0.0 && delta > 0.0 && delta < g / 2.0
}

impl EquidistributedSequence {
    pub fn cell_center(&self, cell: &[i64]) -> Vec<f64> {
        cell.iter()
            .zip(&self.anchor)
            .map(|(&k, &a)| a + (k as f64 + 0.5) * self.g)
            .collect()
    }

    /// Every point at its cell centre.
    pub fn centers(g: f64, delta: f64, domain: &BoxDomain) -> Result<Self> {
        check_params(g, delta)?;
        let anchor: Vec<f64> = domain.intervals().iter().map(|iv| iv.0).collect();
        let mut seq = Self {
            g,
            delta,
            anchor,
            points: Vec::new(),
        };
        for_each_cell(&cell_counts(domain, g), |cell| {
            let z = seq.cell_center(cell);
            if domain.distance_to(&z) < delta {
                seq.points.push(LatticePoint {
                    cell: cell.to_vec(),
                    z,
                });
            }
        });
        Ok(seq)
    }

    /// Build from explicit points, assigning each to the cell containing it.
    pub fn from_points(g: f64, delta: f64, domain: &BoxDomain, points: Vec<Vec<f64>>) -> Result<Self> {
        if !(g > 0.0) {
            return Err(Error::invalid("cell size G must be positive"));
        }
        let anchor: Vec<f64> = domain.intervals().iter().map(|iv| iv.0).collect();
        let points = points
            .into_iter()
            .map(|z| {
                if z.len() != domain.dim() {
                    return Err(Error::ShapeMismatch {
                        expected: domain.dim(),
                        found: z.len(),
                    });
                }
                let cell = z
                    .iter()
                    .zip(&anchor)
                    .map(|(&x, &a)| ((x - a) / g).floor() as i64)
                    .collect();
                Ok(LatticePoint { cell, z })
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(Self {
            g,
            delta,
            anchor,
            points,
        })
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        Ok(serde_json::from_str(text)?)
    }
}

fn check_params(g: f64, delta: f64) -> Result<()> {
    if !delta_in_range(g, delta) {
        return Err(Error::invalid(format!(
            "delta not in (0, G/2): G = {g}, delta = {delta}"
        )));
    }
    Ok(())
}

/// Check `δ ∈ (0, G/2)` and `B(z_j, δ) ⊂ cell_j` for every point.
pub fn validate_equidistributed(seq: &EquidistributedSequence, domain: &BoxDomain) -> ValidationReport {
    let mut report = ValidationReport {
        delta_in_range: delta_in_range(seq.g, seq.delta),
        violations: Vec::new(),
    };
    if !report.delta_in_range {
        report.violations.push(Violation {
            cell: Vec::new(),
            reason: "delta not in (0, G/2)".into(),
        });
    }
    let counts = cell_counts(domain, seq.g);
    let mut seen = std::collections::HashSet::new();
    let slack = GEOM_TOL * seq.g;
    for p in &seq.points {
        if p.cell.len() != domain.dim() || p.z.len() != domain.dim() {
            report.violations.push(Violation {
                cell: p.cell.clone(),
                reason: "dimension mismatch".into(),
            });
            continue;
        }
        if !seen.insert(p.cell.clone()) {
            report.violations.push(Violation {
                cell: p.cell.clone(),
                reason: "more than one point in cell".into(),
            });
        }
        if p.cell.iter().zip(&counts).any(|(&k, &n)| k < 0 || k >= n) {
            report.violations.push(Violation {
                cell: p.cell.clone(),
                reason: "cell does not meet the domain".into(),
            });
            continue;
        }
        let center = seq.cell_center(&p.cell);
        let fits = p
            .z
            .iter()
            .zip(&center)
            .all(|(&z, &c)| (z - c).abs() <= seq.g / 2.0 - seq.delta + slack);
        if !fits {
            report.violations.push(Violation {
                cell: p.cell.clone(),
                reason: "ball leaves its cell".into(),
            });
        }
    }
    report
}

/// Independent uniform point in each shrunken cell `(-G/2+δ, G/2-δ)^d + center`.
/// Each cell draws from its own counter-derived stream.
pub fn sample_equidistributed(g: f64, delta: f64, domain: &BoxDomain, seed: u64) -> Result<EquidistributedSequence> {
    check_params(g, delta)?;
    let anchor: Vec<f64> = domain.intervals().iter().map(|iv| iv.0).collect();
    let mut seq = EquidistributedSequence {
        g,
        delta,
        anchor,
        points: Vec::new(),
    };
    let half = g / 2.0 - delta;
    for_each_cell(&cell_counts(domain, g), |cell| {
        let mut rng = rng_for(seed, stream::OBSERVATION_POINTS, lattice_key(cell));
        let center = seq.cell_center(cell);
        let z: Vec<f64> = center
            .iter()
            .map(|&c| c + half * (2.0 * rng.random::<f64>() - 1.0))
            .collect();
        if domain.distance_to(&z) < delta {
            seq.points.push(LatticePoint {
                cell: cell.to_vec(),
                z,
            });
        }
    });
    let report = validate_equidistributed(&seq, domain);
    if !report.is_ok() {
        return Err(Error::invalid(format!(
            "sampled sequence failed validation: {:?}",
            report.violations
        )));
    }
    Ok(seq)
}

/// Diagonal 0/1 weight per grid node.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ObservationMask {
    weights: Vec<f64>,
    covered_fraction: f64,
    #[serde(default)]
    warnings: Vec<String>,
}

impl ObservationMask {
    pub fn from_weights(weights: Vec<f64>) -> Result<Self> {
        if weights.is_empty() {
            return Err(Error::invalid("mask has no nodes"));
        }
        if weights.iter().any(|&w| w != 0.0 && w != 1.0) {
            return Err(Error::invalid("mask weights must be 0 or 1"));
        }
        let covered = weights.iter().filter(|&&w| w == 1.0).count();
        let covered_fraction = covered as f64 / weights.len() as f64;
        Ok(Self {
            weights,
            covered_fraction,
            warnings: Vec::new(),
        })
    }

    pub fn full(len: usize) -> Self {
        Self::from_weights(vec![1.0; len.max(1)]).expect("ones are valid weights")
    }

    pub fn empty(len: usize) -> Self {
        Self::from_weights(vec![0.0; len.max(1)]).expect("zeros are valid weights")
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }

    pub fn covered_fraction(&self) -> f64 {
        self.covered_fraction
    }

    pub fn warnings(&self) -> &[String] {
        &self.warnings
    }

    /// Indices of observed nodes.
    pub fn support(&self) -> Vec<usize> {
        self.weights
            .iter()
            .enumerate()
            .filter(|(_, &w)| w == 1.0)
            .map(|(k, _)| k)
            .collect()
    }

    pub fn apply(&self, x: &[f64]) -> Vec<f64> {
        x.iter().zip(&self.weights).map(|(a, w)| a * w).collect()
    }

    /// Pointwise maximum of two masks.
    pub fn union(&self, other: &ObservationMask) -> Result<ObservationMask> {
        if self.len() != other.len() {
            return Err(Error::ShapeMismatch {
                expected: self.len(),
                found: other.len(),
            });
        }
        Self::from_weights(
            self.weights
                .iter()
                .zip(&other.weights)
                .map(|(a, b)| a.max(*b))
                .collect(),
        )
    }
}

/// Nodes strictly inside some ball `B(z_j, δ)`. Nodes within a relative
/// `1e-12` of a sphere count as on the sphere and are excluded.
pub fn observation_mask(grid: &Grid, seq: &EquidistributedSequence) -> ObservationMask {
    let d = grid.dim();
    let radius = seq.delta * (1.0 - GEOM_TOL);
    let r2 = radius * radius;
    let mut weights = vec![0.0; grid.len()];
    let mut hits = vec![0usize; seq.points.len()];
    for (node, w) in weights.iter_mut().enumerate() {
        let x = grid.node(node);
        for (j, p) in seq.points.iter().enumerate() {
            let dist2: f64 = p.z.iter().zip(&x[..d]).map(|(a, b)| (a - b) * (a - b)).sum();
            if dist2 < r2 {
                *w = 1.0;
                hits[j] += 1;
            }
        }
    }
    let mut mask = ObservationMask::from_weights(weights).expect("0/1 weights");
    let empty: Vec<_> = seq
        .points
        .iter()
        .zip(&hits)
        .filter(|(_, &h)| h == 0)
        .map(|(p, _)| p.cell.clone())
        .collect();
    if !empty.is_empty() {
        let msg = format!(
            "{} observation ball(s) contain no grid node (first at cell {:?}); refine the grid",
            empty.len(),
            empty[0]
        );
        log::warn!("{msg}");
        mask.warnings.push(msg);
    }
    mask
}
