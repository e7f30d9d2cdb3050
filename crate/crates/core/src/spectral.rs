//! Spectral calculus of a symmetric operator: sorted eigenpairs, spectral
//! subspaces, eigenvalue counts and the heat semigroup `e^{-tH}`.
//!
//! Eigenvectors are normalized in the h-weighted inner product
//! `⟨u, v⟩_h = w Σ u_k v_k`, `w` the grid cell volume, so coefficient vectors
//! `c = w Vᵀ x` live in a Euclidean space isometric to `L²` on the grid.

use nalgebra::{DMatrix, DVector, SymmetricEigen};

use crate::error::{Error, Result};
use crate::operator::Hamiltonian;

pub const DEFAULT_EIGEN_TOL: f64 = 1e-10;

// 0 lets the QR sweep run until convergence.
const MAX_QR_SWEEPS: usize = 0;

#[derive(Debug, Clone)]
pub struct SpectralData {
    eigenvalues: Vec<f64>,
    vectors: DMatrix<f64>,
    cell_volume: f64,
    residual: f64,
}

pub fn eigendecompose(h: &Hamiltonian, tol: f64) -> Result<SpectralData> {
    SpectralData::from_symmetric(h.matrix().clone(), h.grid().cell_volume(), tol)
}

impl SpectralData {
    /// Decompose an arbitrary symmetric matrix; `cell_volume` is the weight
    /// of the inner product in which the returned vectors are orthonormal.
    pub fn from_symmetric(matrix: DMatrix<f64>, cell_volume: f64, tol: f64) -> Result<Self> {
        if !matrix.is_square() || matrix.nrows() == 0 {
            return Err(Error::invalid("matrix must be square and nonempty"));
        }
        if !(cell_volume > 0.0) {
            return Err(Error::invalid("cell volume must be positive"));
        }
        if !(tol > 0.0) {
            return Err(Error::invalid("tolerance must be positive"));
        }
        let n = matrix.nrows();
        let asym = (&matrix - matrix.transpose()).amax();
        if asym > tol * matrix.amax().max(1.0) {
            return Err(Error::invalid(format!("matrix is not symmetric (defect {asym:e})")));
        }
        let eig = SymmetricEigen::try_new(matrix.clone(), f64::EPSILON, MAX_QR_SWEEPS)
            .ok_or_else(|| Error::Convergence("symmetric QR iteration did not converge".into()))?;

        let mut order: Vec<usize> = (0..n).collect();
        order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));

        let mut eigenvalues = Vec::with_capacity(n);
        let mut unit = DMatrix::<f64>::zeros(n, n);
        for (dst, &src) in order.iter().enumerate() {
            eigenvalues.push(eig.eigenvalues[src]);
            let mut col = eig.eigenvectors.column(src).into_owned();
            let cutoff = 1e-12 * col.amax();
            if let Some(first) = col.iter().find(|x| x.abs() > cutoff) {
                if *first < 0.0 {
                    col.neg_mut();
                }
            }
            unit.set_column(dst, &col);
        }

        let scale = eigenvalues.iter().fold(0.0f64, |m, l| m.max(l.abs()));
        let mut residual = 0.0f64;
        if scale > 0.0 {
            let hv = &matrix * &unit;
            for (k, l) in eigenvalues.iter().enumerate() {
                let r = (hv.column(k) - unit.column(k) * *l).norm() / scale;
                residual = residual.max(r);
            }
        }
        let gram = unit.transpose() * &unit;
        let ortho = (gram - DMatrix::<f64>::identity(n, n)).amax();
        if residual > tol || ortho > tol {
            return Err(Error::Convergence(format!(
                "residual {residual:e}, orthogonality defect {ortho:e} exceed tolerance {tol:e}"
            )));
        }

        Ok(Self {
            eigenvalues,
            vectors: unit / cell_volume.sqrt(),
            cell_volume,
            residual: residual.max(ortho),
        })
    }

    pub fn len(&self) -> usize {
        self.eigenvalues.len()
    }

    pub fn is_empty(&self) -> bool {
        self.eigenvalues.is_empty()
    }

    pub fn eigenvalues(&self) -> &[f64] {
        &self.eigenvalues
    }

    /// Columns are eigenvectors, orthonormal in the h-weighted product.
    pub fn vectors(&self) -> &DMatrix<f64> {
        &self.vectors
    }

    pub fn cell_volume(&self) -> f64 {
        self.cell_volume
    }

    /// Largest relative residual / orthogonality defect observed.
    pub fn residual(&self) -> f64 {
        self.residual
    }

    /// `κ = inf σ(H)`.
    pub fn ground_energy(&self) -> f64 {
        self.eigenvalues[0]
    }

    pub fn inner(&self, u: &DVector<f64>, v: &DVector<f64>) -> f64 {
        self.cell_volume * u.dot(v)
    }

    pub fn norm(&self, u: &DVector<f64>) -> f64 {
        self.inner(u, u).sqrt()
    }

    /// Number of eigenvalues `λ_k ≤ energy`.
    pub fn count_below(&self, energy: f64) -> usize {
        self.eigenvalues.partition_point(|&l| l <= energy)
    }

    /// Orthonormal basis of `span{v_k : λ_k ≤ energy}`; zero columns when the
    /// subspace is empty.
    pub fn spectral_subspace(&self, energy: f64) -> DMatrix<f64> {
        let k = self.count_below(energy);
        self.vectors.columns(0, k).into_owned()
    }

    /// Expansion coefficients `c_k = ⟨v_k, x⟩_h`.
    pub fn coefficients(&self, x: &DVector<f64>) -> Result<DVector<f64>> {
        self.check_len(x.len())?;
        Ok(self.vectors.tr_mul(x) * self.cell_volume)
    }

    /// Inverse of [`coefficients`](Self::coefficients).
    pub fn synthesize(&self, c: &DVector<f64>) -> Result<DVector<f64>> {
        self.check_len(c.len())?;
        Ok(&self.vectors * c)
    }

    /// `e^{-tH} x`.
    pub fn semigroup_apply(&self, t: f64, x: &DVector<f64>) -> Result<DVector<f64>> {
        if !(t >= 0.0) {
            return Err(Error::invalid(format!("semigroup time must be nonnegative, got {t}")));
        }
        let mut c = self.coefficients(x)?;
        for (ck, &l) in c.iter_mut().zip(&self.eigenvalues) {
            *ck *= (-l * t).exp();
        }
        self.synthesize(&c)
    }

    /// Number of eigenvalues in the closed interval `[lo, hi]`.
    pub fn count_eigenvalues(&self, lo: f64, hi: f64) -> usize {
        if hi < lo {
            return 0;
        }
        let below_lo = self.eigenvalues.partition_point(|&l| l < lo);
        let upto_hi = self.eigenvalues.partition_point(|&l| l <= hi);
        upto_hi - below_lo
    }

    fn check_len(&self, len: usize) -> Result<()> {
        if len != self.len() {
            return Err(Error::ShapeMismatch {
                expected: self.len(),
                found: len,
            });
        }
        Ok(())
    }
}
