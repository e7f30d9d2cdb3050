//! Scale-free unique continuation: the constant
//!
//! ```text
//! C_uc(V, E) = sup_λ (δ/G)^{N (1 + G^{4/3} ‖V-λ‖_∞^{2/3} + G √((E-λ)_+))}
//! ```
//!
//! and the exact minimal ratio `‖ψ‖²_{S} / ‖ψ‖²_{Γ}` over the spectral
//! subspace `Ran 1_{(-∞, E]}(H)`.

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::ObservationMask;
use crate::grid::Potential;
use crate::optimize::scan_minimize;
use crate::spectral::SpectralData;

/// Default dimensional constant `N`. Reports always print the value used.
pub const DEFAULT_N: f64 = 10.0;

const LAMBDA_SCAN_POINTS: usize = 1000;
const EXPONENT_REL_TOL: f64 = 1e-8;

/// Ratios within this of 0 or 1 are roundoff of the exact endpoint.
const RATIO_SNAP: f64 = 1e-13;

fn snap_ratio(r: f64) -> f64 {
    if r < RATIO_SNAP {
        0.0
    } else if r > 1.0 - RATIO_SNAP {
        1.0
    } else {
        r
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct UcpParameters {
    pub n_const: f64,
    pub g: f64,
    pub delta: f64,
    pub energy: f64,
}

impl UcpParameters {
    pub fn validate(&self) -> Result<()> {
        check(self.g, self.delta, self.n_const)
    }
}

fn check(g: f64, delta: f64, n_const: f64) -> Result<()> {
    if !(g > 0.0 && delta > 0.0 && delta < g / 2.0) {
        return Err(Error::invalid(format!("delta not in (0, G/2): G = {g}, delta = {delta}")));
    }
    check_formula(g, delta, n_const)
}

/// The formula itself only needs `δ/G ∈ (0, 1)`.
fn check_formula(g: f64, delta: f64, n_const: f64) -> Result<()> {
    if !(g > 0.0 && delta > 0.0 && delta < g) {
        return Err(Error::invalid(format!("delta/G not in (0, 1): G = {g}, delta = {delta}")));
    }
    if !(n_const > 0.0 && n_const.is_finite()) {
        return Err(Error::invalid(format!("N must be positive, got {n_const}")));
    }
    Ok(())
}

/// Exponent `1 + G^{4/3} ‖V-λ‖_∞^{2/3} + G √((E-λ)_+)` for a potential with
/// range `[v_min, v_max]`.
pub fn exponent(v_min: f64, v_max: f64, energy: f64, g: f64, lambda: f64) -> f64 {
    let sup = (v_max - lambda).max(lambda - v_min);
    1.0 + g.powf(4.0 / 3.0) * sup.powf(2.0 / 3.0) + g * (energy - lambda).max(0.0).sqrt()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CucValue {
    pub cuc: f64,
    pub lambda_star: f64,
    /// Minimized exponent `g(λ*)`.
    pub exponent: f64,
}

pub fn eval_cuc(v: &Potential, energy: f64, g: f64, delta: f64, n_const: f64) -> Result<CucValue> {
    eval_cuc_range(v.min(), v.max(), energy, g, delta, n_const)
}

/// [`eval_cuc`] for a potential known only through its range.
///
/// `δ/G < 1`, so maximizing over `λ` means minimizing the exponent. Outside
/// `[min V - |E|, max(max V, E)]` the exponent is monotone, so the search
/// is confined there; kinks at `min V`, `max V`, their midpoint and `E` are
/// evaluated explicitly.
pub fn eval_cuc_range(v_min: f64, v_max: f64, energy: f64, g: f64, delta: f64, n_const: f64) -> Result<CucValue> {
    check_formula(g, delta, n_const)?;
    if !(v_min <= v_max) || !energy.is_finite() {
        return Err(Error::invalid("potential range and energy must be finite"));
    }
    let lo = v_min - energy.abs();
    let hi = v_max.max(energy);
    let candidates = [v_min, v_max, 0.5 * (v_min + v_max), energy];
    let best = scan_minimize(
        |l| exponent(v_min, v_max, energy, g, l),
        lo,
        hi,
        LAMBDA_SCAN_POINTS,
        &candidates,
        EXPONENT_REL_TOL,
    );
    Ok(CucValue {
        cuc: (n_const * best.value * (delta / g).ln()).exp(),
        lambda_star: best.x,
        exponent: best.value,
    })
}

#[derive(Debug, Clone)]
pub struct SubspaceRatio {
    pub ratio: f64,
    /// Unit (h-weighted) minimizer in grid coordinates.
    pub psi: DVector<f64>,
    pub dim: usize,
}

/// Mask quadratic form `w Qᵀ M Q` restricted to the first `k` eigenvectors.
pub(crate) fn mask_form(spec: &SpectralData, mask: &ObservationMask, k: usize) -> DMatrix<f64> {
    let support = mask.support();
    let v = spec.vectors();
    let mut rows = DMatrix::<f64>::zeros(support.len(), k);
    for (r, &node) in support.iter().enumerate() {
        for c in 0..k {
            rows[(r, c)] = v[(node, c)];
        }
    }
    rows.tr_mul(&rows) * spec.cell_volume()
}

/// Exact `min_{ψ ∈ Ran 1_{(-∞,E]}(H)} ‖ψ‖²_S / ‖ψ‖²`: the smallest
/// eigenvalue of the compressed mask form.
pub fn min_subspace_ratio(spec: &SpectralData, energy: f64, mask: &ObservationMask) -> Result<SubspaceRatio> {
    if mask.len() != spec.len() {
        return Err(Error::ShapeMismatch {
            expected: spec.len(),
            found: mask.len(),
        });
    }
    let k = spec.count_below(energy);
    if k == 0 {
        return Err(Error::EmptySubspace { energy });
    }
    let form = mask_form(spec, mask, k);
    let eig = SymmetricEigen::new(form);
    let (imin, &ratio) = eig
        .eigenvalues
        .iter()
        .enumerate()
        .min_by(|a, b| a.1.total_cmp(b.1))
        .expect("nonempty subspace");
    let coeffs = eig.eigenvectors.column(imin).into_owned();
    let psi = spec.vectors().columns(0, k) * coeffs;
    Ok(SubspaceRatio {
        ratio: snap_ratio(ratio),
        psi,
        dim: k,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct UcpResult {
    pub cuc: f64,
    pub lambda_star: f64,
    pub exponent: f64,
    pub ratio: f64,
    pub satisfied: bool,
    pub subspace_dim: usize,
    pub params: UcpParameters,
}

pub fn verify_ucp_instance(
    spec: &SpectralData,
    mask: &ObservationMask,
    potential: &Potential,
    params: &UcpParameters,
) -> Result<UcpResult> {
    params.validate()?;
    let c = eval_cuc(potential, params.energy, params.g, params.delta, params.n_const)?;
    let r = min_subspace_ratio(spec, params.energy, mask)?;
    Ok(UcpResult {
        cuc: c.cuc,
        lambda_star: c.lambda_star,
        exponent: c.exponent,
        ratio: r.ratio,
        satisfied: r.ratio >= c.cuc,
        subspace_dim: r.dim,
        params: *params,
    })
}

/// One observation for [`estimate_n_empirical`].
#[derive(Debug, Clone, Copy)]
pub struct UcpInstance<'a> {
    pub spec: &'a SpectralData,
    pub energy: f64,
    pub mask: &'a ObservationMask,
    pub g: f64,
    pub delta: f64,
    pub potential: &'a Potential,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InstanceN {
    pub ratio: f64,
    pub exponent: f64,
    pub lambda_star: f64,
    /// `None` when the instance was excluded (zero ratio).
    pub n_inst: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NEstimate {
    /// Smallest `N` for which the bound holds on every usable instance.
    pub n_hat: f64,
    pub instances: Vec<InstanceN>,
    pub diagnostics: Vec<String>,
}

/// `N_inst` from a measured ratio by inverting `ratio = (δ/G)^{N g(λ*)}`.
pub fn invert_n(ratio: f64, exponent: f64, g: f64, delta: f64) -> Option<f64> {
    if !(ratio > 0.0) {
        return None;
    }
    let n = ratio.min(1.0).ln() / (exponent * (delta / g).ln());
    Some(if n == 0.0 { 0.0 } else { n })
}

pub fn estimate_n_empirical(instances: &[UcpInstance<'_>]) -> Result<NEstimate> {
    let mut out = Vec::with_capacity(instances.len());
    let mut diagnostics = Vec::new();
    let mut n_hat = 0.0f64;
    for (i, inst) in instances.iter().enumerate() {
        // N only enters C_uc as a positive factor of the exponent; evaluate with N = 1.
        let c = eval_cuc(inst.potential, inst.energy, inst.g, inst.delta, 1.0)?;
        let r = min_subspace_ratio(inst.spec, inst.energy, inst.mask)?;
        let n_inst = invert_n(r.ratio, c.exponent, inst.g, inst.delta);
        match n_inst {
            Some(n) => n_hat = n_hat.max(n),
            None => diagnostics.push(format!(
                "instance {i}: mask misses the spectral subspace (ratio 0); excluded"
            )),
        }
        out.push(InstanceN {
            ratio: r.ratio,
            exponent: c.exponent,
            lambda_star: c.lambda_star,
            n_inst,
        });
    }
    if out.iter().all(|x| x.n_inst.is_none()) {
        return Err(Error::invalid("no usable instance for N estimation"));
    }
    Ok(NEstimate {
        n_hat,
        instances: out,
        diagnostics,
    })
}
