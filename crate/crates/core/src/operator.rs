//! Finite-difference Schrödinger operators `H = -Δ + V`.

use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::grid::{BoundaryCondition, Grid, Potential};

/// Dense symmetric matrix of `-Δ_h + V` on a [`Grid`].
#[derive(Debug, Clone)]
pub struct Hamiltonian {
    matrix: DMatrix<f64>,
    grid: Grid,
    potential: Potential,
}

/// Second-order stencil with homogeneous Dirichlet data, or with ghost-node
/// reflection for Neumann so constants lie in the kernel of the Laplacian.
pub fn assemble_hamiltonian(grid: &Grid, potential: &Potential) -> Result<Hamiltonian> {
    let n = grid.len();
    if potential.len() != n {
        return Err(Error::ShapeMismatch {
            expected: n,
            found: potential.len(),
        });
    }
    let mut matrix = DMatrix::<f64>::zeros(n, n);
    let dim = grid.dim();
    let counts = grid.points_per_axis();
    for node in 0..n {
        let idx = grid.multi_index(node);
        let mut diag = potential.values()[node];
        for axis in 0..dim {
            let inv_h2 = 1.0 / (grid.spacing()[axis] * grid.spacing()[axis]);
            let i = idx[axis];
            let mut neighbours = 0;
            let stride: usize = counts[axis + 1..dim].iter().product();
            if i > 0 {
                matrix[(node, node - stride)] = -inv_h2;
                neighbours += 1;
            }
            if i + 1 < counts[axis] {
                matrix[(node, node + stride)] = -inv_h2;
                neighbours += 1;
            }
            diag += match grid.boundary() {
                BoundaryCondition::Dirichlet => 2.0 * inv_h2,
                BoundaryCondition::Neumann => neighbours as f64 * inv_h2,
            };
        }
        matrix[(node, node)] = diag;
    }
    Ok(Hamiltonian {
        matrix,
        grid: grid.clone(),
        potential: potential.clone(),
    })
}

impl Hamiltonian {
    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.matrix
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn potential(&self) -> &Potential {
        &self.potential
    }

    pub fn len(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// `H + t W` with `W` acting as a multiplication operator.
    pub fn perturbed(&self, w: &Potential, t: f64) -> Result<Hamiltonian> {
        let potential = self.potential.add_scaled(w, t)?;
        let mut matrix = self.matrix.clone();
        for (k, wk) in w.values().iter().enumerate() {
            matrix[(k, k)] += t * wk;
        }
        Ok(Hamiltonian {
            matrix,
            grid: self.grid.clone(),
            potential,
        })
    }

    /// Ascending eigenvalues only.
    pub fn eigenvalues(&self) -> Vec<f64> {
        let mut ev: Vec<f64> = self.matrix.clone().symmetric_eigenvalues().iter().copied().collect();
        ev.sort_by(f64::total_cmp);
        ev
    }

    fn tridiagonal(&self) -> Option<(Vec<f64>, Vec<f64>)> {
        if self.grid.dim() != 1 {
            return None;
        }
        let n = self.len();
        let diag = (0..n).map(|k| self.matrix[(k, k)]).collect();
        let off = (0..n.saturating_sub(1)).map(|k| self.matrix[(k + 1, k)]).collect();
        Some((diag, off))
    }

    /// Number of eigenvalues in the closed interval `[lo, hi]`.
    ///
    /// One-dimensional operators are tridiagonal and are counted with Sturm
    /// sequences in `O(n)`; higher dimensions fall back to the full spectrum.
    pub fn count_in_interval(&self, lo: f64, hi: f64) -> usize {
        if hi < lo {
            return 0;
        }
        match self.tridiagonal() {
            Some((diag, off)) => {
                let below_hi_inclusive = diag.len() - sturm_count(&diag, &off, hi, Side::Above);
                let below_lo = sturm_count(&diag, &off, lo, Side::Below);
                below_hi_inclusive.saturating_sub(below_lo)
            }
            None => self
                .eigenvalues()
                .iter()
                .filter(|&&l| l >= lo && l <= hi)
                .count(),
        }
    }
}

#[derive(Clone, Copy)]
enum Side {
    Below,
    Above,
}

/// Inertia of `T - x I` for a symmetric tridiagonal `T`: the number of
/// eigenvalues strictly below (`Side::Below`) or strictly above
/// (`Side::Above`) `x`, read off the signs of the LDLᵀ pivots.
fn sturm_count(diag: &[f64], off: &[f64], x: f64, side: Side) -> usize {
    let scale = diag
        .iter()
        .map(|d| d.abs())
        .chain(off.iter().map(|e| e.abs()))
        .fold(x.abs(), f64::max)
        .max(f64::MIN_POSITIVE);
    let tiny = f64::EPSILON * scale * 1e-3;
    let mut count = 0;
    let mut pivot = 1.0;
    for (k, &d) in diag.iter().enumerate() {
        let coupling = if k == 0 { 0.0 } else { off[k - 1] * off[k - 1] / pivot };
        pivot = d - x - coupling;
        if pivot == 0.0 {
            pivot = -tiny;
            if let Side::Above = side {
                pivot = tiny;
            }
        }
        match side {
            Side::Below if pivot < 0.0 => count += 1,
            Side::Above if pivot > 0.0 => count += 1,
            _ => {}
        }
    }
    count
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::BoxDomain;
    use approx::assert_relative_eq;

    fn line(n: usize, bc: BoundaryCondition) -> Grid {
        Grid::new(BoxDomain::cube(1, 0.0, 1.0).unwrap(), &[n], bc).unwrap()
    }

    #[test]
    fn two_point_dirichlet_stencil() {
        let g = line(2, BoundaryCondition::Dirichlet);
        let h = assemble_hamiltonian(&g, &Potential::zeros(2)).unwrap();
        let m = h.matrix();
        assert_relative_eq!(m[(0, 0)], 18.0, epsilon = 1e-12);
        assert_relative_eq!(m[(0, 1)], -9.0, epsilon = 1e-12);
        assert_relative_eq!(m[(1, 0)], -9.0, epsilon = 1e-12);
        assert_relative_eq!(m[(1, 1)], 18.0, epsilon = 1e-12);
    }

    #[test]
    fn neumann_annihilates_constants() {
        for dims in [vec![7usize], vec![4, 5], vec![3, 3, 4]] {
            let dom = BoxDomain::cube(dims.len(), -1.0, 2.0).unwrap();
            let g = Grid::new(dom, &dims, BoundaryCondition::Neumann).unwrap();
            let h = assemble_hamiltonian(&g, &Potential::zeros(g.len())).unwrap();
            let ones = nalgebra::DVector::from_element(g.len(), 1.0);
            let out = h.matrix() * ones;
            assert!(out.amax() < 1e-9, "{}", out.amax());
        }
    }

    #[test]
    fn constant_potential_shifts_diagonal() {
        let g = Grid::new(
            BoxDomain::cube(2, 0.0, 1.0).unwrap(),
            &[3, 4],
            BoundaryCondition::Dirichlet,
        )
        .unwrap();
        let h0 = assemble_hamiltonian(&g, &Potential::zeros(g.len())).unwrap();
        let h5 = assemble_hamiltonian(&g, &Potential::constant(g.len(), 5.0)).unwrap();
        let diff = h5.matrix() - h0.matrix();
        for i in 0..g.len() {
            for j in 0..g.len() {
                let expect = if i == j { 5.0 } else { 0.0 };
                assert_eq!(diff[(i, j)], expect);
            }
        }
    }

    #[test]
    fn stencil_is_symmetric_with_axis_couplings() {
        let g = Grid::new(
            BoxDomain::new(vec![(0.0, 1.0), (0.0, 2.0)]).unwrap(),
            &[3, 3],
            BoundaryCondition::Dirichlet,
        )
        .unwrap();
        let h = assemble_hamiltonian(&g, &Potential::zeros(9)).unwrap();
        let m = h.matrix();
        assert_eq!(m, &m.transpose());
        let h0 = g.spacing()[0];
        let h1 = g.spacing()[1];
        assert_relative_eq!(m[(0, 3)], -1.0 / (h0 * h0));
        assert_relative_eq!(m[(0, 1)], -1.0 / (h1 * h1));
        assert_relative_eq!(m[(0, 0)], 2.0 / (h0 * h0) + 2.0 / (h1 * h1));
    }

    #[test]
    fn shape_mismatch_is_reported() {
        let g = line(4, BoundaryCondition::Dirichlet);
        assert!(matches!(
            assemble_hamiltonian(&g, &Potential::zeros(3)),
            Err(Error::ShapeMismatch { expected: 4, found: 3 })
        ));
    }

    #[test]
    fn sturm_counts_agree_with_eigenvalues() {
        let g = line(40, BoundaryCondition::Neumann);
        let v = Potential::from_fn(&g, |x| 30.0 * (7.0 * x[0]).sin()).unwrap();
        let h = assemble_hamiltonian(&g, &v).unwrap();
        let ev = h.eigenvalues();
        for &(lo, hi) in &[(-100.0, 100.0), (0.0, 500.0), (0.5 * (ev[2] + ev[3]), 0.5 * (ev[9] + ev[10])), (1e5, 2e5), (-1e9, 1e9)] {
            let direct = ev.iter().filter(|&&l| l >= lo && l <= hi).count();
            assert_eq!(h.count_in_interval(lo, hi), direct, "[{lo}, {hi}]");
        }
    }
}
