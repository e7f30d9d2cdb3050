//! Motion of spectral-gap edges of `H + tW` for `W ≥ ϑ 1_S`.
//!
//! Finite matrices have no essential spectrum. Gaps are read off the
//! discrete spectrum (typically of a periodic supercell) and the edge
//! functions use the windows
//!
//! ```text
//! f_-(t) = sup( σ(H + tW) ∩ (-∞, b - t_- ‖W‖_∞) )
//! f_+(t) = inf( σ(H + tW) ∩ (a + t_+ ‖W‖_∞, ∞) )
//! ```
//!
//! on the full discrete spectrum, a discrete surrogate for `σ_ess`.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::ObservationMask;
use crate::grid::Potential;
use crate::operator::Hamiltonian;
use crate::ucp::eval_cuc;

/// Slack on the upper Lipschitz bound.
pub const UPPER_SLACK: f64 = 1e-10;

/// Points of the `s`-grid for `sup_{0 ≤ s ≤ 1} C_uc(V + sW, ·)`.
pub const CUC_SUP_POINTS: usize = 11;

pub const SURROGATE_NOTE: &str = "discrete surrogate for the essential spectrum";

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SpectralGap {
    pub a: f64,
    pub b: f64,
    /// Index of `a` in the ascending spectrum.
    pub lower_index: usize,
}

impl SpectralGap {
    pub fn width(&self) -> f64 {
        self.b - self.a
    }

    /// `t_0 = (b - a) / ‖W‖_∞`.
    pub fn t0(&self, w_sup: f64) -> f64 {
        self.width() / w_sup
    }
}

/// Gaps between consecutive eigenvalues at least `min_width` wide.
pub fn find_gaps(eigenvalues: &[f64], min_width: f64) -> Vec<SpectralGap> {
    eigenvalues
        .windows(2)
        .enumerate()
        .filter(|(_, w)| w[1] - w[0] >= min_width)
        .map(|(i, w)| SpectralGap {
            a: w[0],
            b: w[1],
            lower_index: i,
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LiftSample {
    pub t: f64,
    pub f_minus: Option<f64>,
    pub f_plus: Option<f64>,
}

impl LiftSample {
    /// Either window was empty.
    pub fn flagged(&self) -> bool {
        self.f_minus.is_none() || self.f_plus.is_none()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LiftCurve {
    pub gap: SpectralGap,
    pub w_sup: f64,
    pub samples: Vec<LiftSample>,
}

/// Eigenvalues within this relative distance of a window end count as lying
/// on it, so the open windows are not decided by roundoff.
const WINDOW_TOL: f64 = 1e-9;

fn edges(eigenvalues: &[f64], gap: &SpectralGap, t: f64, w_sup: f64) -> LiftSample {
    let tol = WINDOW_TOL * gap.a.abs().max(gap.b.abs()).max(1.0);
    let upper = gap.b - (-t).max(0.0) * w_sup - tol;
    let lower = gap.a + t.max(0.0) * w_sup + tol;
    let f_minus = eigenvalues.iter().copied().rfind(|&l| l < upper);
    let f_plus = eigenvalues.iter().copied().find(|&l| l > lower);
    LiftSample { t, f_minus, f_plus }
}

/// Edge functions `f_±` at the given `t` samples (strictly increasing, in
/// `(-t_0, t_0)`). Each sample is an independent eigenvalue computation.
pub fn lift_curve(h: &Hamiltonian, w: &Potential, gap: &SpectralGap, ts: &[f64]) -> Result<LiftCurve> {
    if w.len() != h.len() {
        return Err(Error::ShapeMismatch {
            expected: h.len(),
            found: w.len(),
        });
    }
    if !w.is_nonnegative() {
        return Err(Error::invalid("perturbation W must be nonnegative"));
    }
    let w_sup = w.sup_norm();
    if !(w_sup > 0.0) {
        return Err(Error::invalid("perturbation W must not vanish identically"));
    }
    if !(gap.a < gap.b) {
        return Err(Error::invalid("gap edges must satisfy a < b"));
    }
    let t0 = gap.t0(w_sup);
    if ts.iter().any(|&t| !(t.abs() < t0)) {
        return Err(Error::invalid(format!("t samples must lie in (-t0, t0) with t0 = {t0}")));
    }
    if ts.windows(2).any(|p| p[1] <= p[0]) {
        return Err(Error::invalid("t samples must be strictly increasing"));
    }
    let samples = ts
        .par_iter()
        .map(|&t| -> Result<LiftSample> {
            let ev = if t == 0.0 { h.eigenvalues() } else { h.perturbed(w, t)?.eigenvalues() };
            Ok(edges(&ev, gap, t, w_sup))
        })
        .collect::<Result<Vec<_>>>()?;
    for s in samples.iter().filter(|s| s.flagged()) {
        log::warn!("lift curve: empty tracking window at t = {}", s.t);
    }
    Ok(LiftCurve {
        gap: *gap,
        w_sup,
        samples,
    })
}

/// Largest `ϑ` with `W ≥ ϑ 1_S` nodally.
pub fn extract_theta(w: &Potential, mask: &ObservationMask) -> Result<f64> {
    if w.len() != mask.len() {
        return Err(Error::ShapeMismatch {
            expected: w.len(),
            found: mask.len(),
        });
    }
    mask.support()
        .into_iter()
        .map(|k| w.values()[k])
        .reduce(f64::min)
        .ok_or_else(|| Error::invalid("observation mask is empty"))
}

/// `max_{s ∈ {0, 0.1, …, 1}} C_uc(V + sW, b + ‖W‖_∞)`.
pub fn cuc_sup(v: &Potential, w: &Potential, b: f64, g: f64, delta: f64, n_const: f64) -> Result<f64> {
    let energy = b + w.sup_norm();
    let mut best = 0.0f64;
    for i in 0..CUC_SUP_POINTS {
        let s = i as f64 / (CUC_SUP_POINTS - 1) as f64;
        let c = eval_cuc(&v.add_scaled(w, s)?, energy, g, delta, n_const)?;
        best = best.max(c.cuc);
    }
    Ok(best)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IncrementCheck {
    pub t_from: f64,
    pub t_to: f64,
    pub df_minus: Option<f64>,
    pub df_plus: Option<f64>,
    /// `ε ϑ sup C_uc`.
    pub lower_bound: f64,
    /// `ε ‖W‖_∞`.
    pub upper_bound: f64,
    /// `min_± (Δf_± - lower)`; negative means the lower bound failed.
    pub margin_lo: Option<f64>,
    /// `min_± (upper + slack - Δf_±)`; negative means the upper bound failed.
    pub margin_hi: Option<f64>,
}

impl IncrementCheck {
    pub fn lower_ok(&self) -> bool {
        self.margin_lo.is_some_and(|m| m >= 0.0)
    }

    pub fn upper_ok(&self) -> bool {
        self.margin_hi.is_some_and(|m| m >= 0.0)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LipschitzReport {
    pub theta: f64,
    pub cuc_sup: f64,
    pub w_sup: f64,
    pub increments: Vec<IncrementCheck>,
    pub lower_violations: usize,
    pub upper_violations: usize,
    pub note: String,
}

impl LipschitzReport {
    pub fn all_ok(&self) -> bool {
        self.lower_violations == 0 && self.upper_violations == 0
    }
}

/// Check `ε ϑ C ≤ f_±(t+ε) - f_±(t) ≤ ε ‖W‖_∞` on consecutive samples.
/// Violations are findings, not errors.
pub fn check_lipschitz(curve: &LiftCurve, theta: f64, cuc_sup: f64) -> Result<LipschitzReport> {
    if curve.samples.len() < 2 {
        return Err(Error::invalid("lift curve needs at least two samples"));
    }
    if !(theta > 0.0) {
        return Err(Error::invalid("theta must be positive"));
    }
    let mut increments = Vec::with_capacity(curve.samples.len() - 1);
    for pair in curve.samples.windows(2) {
        let (p, q) = (&pair[0], &pair[1]);
        let eps = q.t - p.t;
        let lower = eps * theta * cuc_sup;
        let upper = eps * curve.w_sup;
        let diff = |a: Option<f64>, b: Option<f64>| a.zip(b).map(|(x, y)| y - x);
        let df_minus = diff(p.f_minus, q.f_minus);
        let df_plus = diff(p.f_plus, q.f_plus);
        let both = [df_minus, df_plus];
        let margin = |f: &dyn Fn(f64) -> f64| -> Option<f64> {
            if both.iter().any(Option::is_none) {
                return None;
            }
            both.iter().flatten().map(|&d| f(d)).reduce(f64::min)
        };
        increments.push(IncrementCheck {
            t_from: p.t,
            t_to: q.t,
            df_minus,
            df_plus,
            lower_bound: lower,
            upper_bound: upper,
            margin_lo: margin(&|d| d - lower),
            margin_hi: margin(&|d| upper + UPPER_SLACK - d),
        });
    }
    let lower_violations = increments.iter().filter(|c| !c.lower_ok()).count();
    let upper_violations = increments.iter().filter(|c| !c.upper_ok()).count();
    Ok(LipschitzReport {
        theta,
        cuc_sup,
        w_sup: curve.w_sup,
        increments,
        lower_violations,
        upper_violations,
        note: SURROGATE_NOTE.to_string(),
    })
}

/// Uniform samples `t_k = -frac·t_0 + 2k·frac·t_0/(count-1)`.
pub fn symmetric_samples(t0: f64, frac: f64, count: usize) -> Vec<f64> {
    let count = count.max(2);
    (0..count)
        .map(|k| t0 * frac * (-1.0 + 2.0 * k as f64 / (count - 1) as f64))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::{BoundaryCondition, BoxDomain, Grid};
    use crate::operator::assemble_hamiltonian;
    use approx::assert_relative_eq;

    #[test]
    fn gaps_in_small_spectrum() {
        let gaps = find_gaps(&[1.0, 2.0, 5.0, 6.0], 2.0);
        assert_eq!(gaps.len(), 1);
        assert_eq!((gaps[0].a, gaps[0].b), (2.0, 5.0));
        assert!(find_gaps(&[0.0, 1.0, 2.0, 3.0], 1.5).is_empty());
    }

    fn periodic_line(cells: usize) -> Hamiltonian {
        let g = Grid::new(
            BoxDomain::cube(1, 0.0, cells as f64).unwrap(),
            &[cells * 20],
            BoundaryCondition::Neumann,
        )
        .unwrap();
        let v = Potential::cos_bump(&g, 10.0, 1.0).unwrap();
        assemble_hamiltonian(&g, &v).unwrap()
    }

    #[test]
    fn constant_perturbation_shifts_edges() {
        let h = periodic_line(4);
        let ev = h.eigenvalues();
        let gap = find_gaps(&ev, 3.0)[0];
        let w = Potential::constant(h.len(), 1.0);
        let ts = symmetric_samples(gap.t0(1.0), 0.5, 5);
        let curve = lift_curve(&h, &w, &gap, &ts).unwrap();
        for s in &curve.samples {
            assert_relative_eq!(s.f_minus.unwrap(), gap.a + s.t, epsilon = 1e-9);
            assert_relative_eq!(s.f_plus.unwrap(), gap.b + s.t, epsilon = 1e-9);
        }
        let rep = check_lipschitz(&curve, 1.0, 1.0).unwrap();
        for inc in &rep.increments {
            assert!(inc.margin_hi.unwrap() >= 0.0);
            assert!(inc.margin_lo.unwrap().abs() < 1e-9);
        }
    }

    #[test]
    fn edges_at_zero_are_the_gap() {
        let h = periodic_line(3);
        let gap = find_gaps(&h.eigenvalues(), 3.0)[0];
        let w = Potential::from_fn(h.grid(), |x| x[0] / 3.0).unwrap();
        let curve = lift_curve(&h, &w, &gap, &[-0.1, 0.0, 0.1]).unwrap();
        assert_eq!(curve.samples[1].f_minus, Some(gap.a));
        assert_eq!(curve.samples[1].f_plus, Some(gap.b));
    }

    #[test]
    fn preconditions() {
        let h = periodic_line(2);
        let gap = find_gaps(&h.eigenvalues(), 3.0)[0];
        let zero = Potential::zeros(h.len());
        assert!(lift_curve(&h, &zero, &gap, &[0.0]).is_err());
        let neg = Potential::constant(h.len(), -1.0);
        assert!(lift_curve(&h, &neg, &gap, &[0.0]).is_err());
        let one = Potential::constant(h.len(), 1.0);
        assert!(lift_curve(&h, &one, &gap, &[gap.t0(1.0)]).is_err());
        assert!(lift_curve(&h, &one, &gap, &[0.1, 0.0]).is_err());
    }

    #[test]
    fn theta_is_min_over_mask() {
        let w = Potential::new(vec![3.0, 0.5, 2.0, 0.0]).unwrap();
        let mask = ObservationMask::from_weights(vec![1.0, 0.0, 1.0, 0.0]).unwrap();
        assert_eq!(extract_theta(&w, &mask).unwrap(), 2.0);
        assert!(extract_theta(&w, &ObservationMask::empty(4)).is_err());
    }

    #[test]
    fn tiny_n_makes_lower_bound_fail() {
        let h = periodic_line(4);
        let gap = find_gaps(&h.eigenvalues(), 3.0)[0];
        let grid = h.grid().clone();
        let seq = crate::geometry::EquidistributedSequence::centers(1.0, 0.2, grid.domain()).unwrap();
        let mask = crate::geometry::observation_mask(&grid, &seq);
        let w = Potential::new(mask.weights().to_vec()).unwrap();
        let ts = symmetric_samples(gap.t0(1.0), 0.8, 9);
        let curve = lift_curve(&h, &w, &gap, &ts).unwrap();
        let theta = extract_theta(&w, &mask).unwrap();
        let strict = cuc_sup(h.potential(), &w, gap.b, 1.0, 0.2, 1e-4).unwrap();
        assert!(strict > 0.99);
        let rep = check_lipschitz(&curve, theta, strict).unwrap();
        assert!(rep.lower_violations > 0);
        assert_eq!(rep.upper_violations, 0);
        let loose = cuc_sup(h.potential(), &w, gap.b, 1.0, 0.2, crate::ucp::DEFAULT_N).unwrap();
        assert!(check_lipschitz(&curve, theta, loose).unwrap().all_ok());
    }
}
