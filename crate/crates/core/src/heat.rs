//! Observability of `∂_t u + H u = 0` from `S_{δ,Z}` and minimal-norm null
//! controls.
//!
//! Everything is computed in the eigenbasis of `H`. With `c = w Vᵀ φ` the
//! coefficient vector of `φ`, the observed energy is
//!
//! ```text
//! ∫_0^T ‖e^{-Ht} φ‖²_S dt = cᵀ B̃ c,   B̃_kl = M̃_kl · I(λ_k + λ_l, T)
//! ```
//!
//! with `M̃ = w Vᵀ diag(m) V` and `I(s, T) = ∫_0^T e^{-st} dt`. The terminal
//! state is `D c` with `D = diag(e^{-λ_k T})`.

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::ObservationMask;
use crate::grid::Potential;
use crate::optimize::scan_minimize;
use crate::spectral::SpectralData;
use crate::ucp::mask_form;

/// Modes with `e^{-λT}` below this are unobservable in practice.
pub const UNOBSERVABLE_DECAY: f64 = 1e-300;

/// Gramian eigenvalues below `GRAMIAN_CUTOFF · β_max` are treated as zero.
pub const GRAMIAN_CUTOFF: f64 = 1e-13;

pub const DEFAULT_CONTROL_STEPS: usize = 64;

/// Default regularization is `DEFAULT_RHO_SCALE · tr(Λ_T) / N`.
pub const DEFAULT_RHO_SCALE: f64 = 1e-12;

const T_SCAN_POINTS: usize = 2000;

/// `∫_0^T e^{-st} dt`.
pub fn time_integral(s: f64, t: f64) -> f64 {
    if s == 0.0 {
        t
    } else {
        -(-s * t).exp_m1() / s
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ObsConstants {
    pub c1: f64,
    pub c2: f64,
    pub c3: f64,
}

impl Default for ObsConstants {
    fn default() -> Self {
        Self {
            c1: 1.0,
            c2: 1.0,
            c3: 1.0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ObservabilityParameters {
    pub t: f64,
    pub g: f64,
    pub delta: f64,
    /// `‖V‖_∞`.
    pub v_sup: f64,
    /// `‖V - κ‖_∞`.
    pub v_shift_sup: f64,
    /// `κ = inf σ(H)`.
    pub kappa: f64,
    pub constants: ObsConstants,
}

impl ObservabilityParameters {
    pub fn from_potential(v: &Potential, kappa: f64, t: f64, g: f64, delta: f64, constants: ObsConstants) -> Self {
        Self {
            t,
            g,
            delta,
            v_sup: v.sup_norm(),
            v_shift_sup: v.shifted_sup(kappa),
            kappa,
            constants,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.t > 0.0 && self.t.is_finite()) {
            return Err(Error::invalid(format!("time horizon must be positive, got {}", self.t)));
        }
        if !(self.g > 0.0 && self.delta > 0.0 && self.delta < self.g / 2.0) {
            return Err(Error::invalid(format!(
                "delta/G must lie in (0, 1/2): G = {}, delta = {}",
                self.g, self.delta
            )));
        }
        let c = self.constants;
        if !(c.c1 > 0.0 && c.c2 > 0.0 && c.c3 > 0.0) {
            return Err(Error::invalid("C1, C2, C3 must be positive"));
        }
        if !(self.v_sup.is_finite() && self.v_shift_sup.is_finite() && self.kappa.is_finite()) {
            return Err(Error::invalid("potential norms and kappa must be finite"));
        }
        Ok(())
    }

    fn log_ratio(&self) -> f64 {
        (self.delta / self.g).ln()
    }

    /// `C_3 G² ln²(δ/G)`.
    fn heat_coefficient(&self) -> f64 {
        self.constants.c3 * self.g * self.g * self.log_ratio().powi(2)
    }

    fn log_prefactor(&self, sup: f64) -> f64 {
        -self.constants.c2 * (1.0 + self.g.powf(4.0 / 3.0) * sup.powf(2.0 / 3.0)) * self.log_ratio()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Branch {
    Auto,
    First,
    Second,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CobsValue {
    pub c_obs: f64,
    pub branch: Branch,
    pub first: Option<f64>,
    pub second: Option<f64>,
    /// Minimizing `t` of the second branch.
    pub t_star: Option<f64>,
    /// `false` when evaluated outside the stated range of `κ`.
    pub hypothesis_met: bool,
}

/// `ln C_obs` of the first branch.
pub fn log_cobs_first(p: &ObservabilityParameters) -> f64 {
    p.log_prefactor(p.v_sup) + (p.constants.c1 / p.t).ln() + p.heat_coefficient() / p.t
}

/// `ln C_obs` of the second branch and the minimizing `t ∈ [0, T)`.
pub fn log_cobs_second(p: &ObservabilityParameters) -> (f64, f64) {
    let a = p.heat_coefficient();
    let f = |t: f64| {
        let s = p.t - t;
        (p.constants.c1 / s).ln() + a / s - 2.0 * p.kappa * t
    };
    // The integrand blows up as t → T; stop the scan just short of it.
    let hi = p.t * (1.0 - 1e-9);
    let best = scan_minimize(f, 0.0, hi, T_SCAN_POINTS, &[0.0], 1e-12);
    (p.log_prefactor(p.v_shift_sup) + best.value, best.x)
}

pub fn eval_cobs(p: &ObservabilityParameters, branch: Branch) -> Result<CobsValue> {
    p.validate()?;
    let first = || log_cobs_first(p).exp();
    let second = || {
        let (l, t) = log_cobs_second(p);
        (l.exp(), t)
    };
    Ok(match branch {
        Branch::Second => {
            if !(p.kappa > 0.0) {
                return Err(Error::invalid(format!(
                    "second C_obs branch requires kappa > 0, got {}",
                    p.kappa
                )));
            }
            let (c, t) = second();
            CobsValue {
                c_obs: c,
                branch: Branch::Second,
                first: None,
                second: Some(c),
                t_star: Some(t),
                hypothesis_met: true,
            }
        }
        Branch::First => {
            let c = first();
            CobsValue {
                c_obs: c,
                branch: Branch::First,
                first: Some(c),
                second: None,
                t_star: None,
                hypothesis_met: p.kappa >= 0.0,
            }
        }
        Branch::Auto if p.kappa > 0.0 => {
            let c1 = first();
            let (c2, t) = second();
            let (c_obs, used) = if c2 < c1 { (c2, Branch::Second) } else { (c1, Branch::First) };
            CobsValue {
                c_obs,
                branch: used,
                first: Some(c1),
                second: Some(c2),
                t_star: Some(t),
                hypothesis_met: true,
            }
        }
        Branch::Auto => {
            let c = first();
            CobsValue {
                c_obs: c,
                branch: Branch::First,
                first: Some(c),
                second: None,
                t_star: None,
                hypothesis_met: p.kappa >= 0.0,
            }
        }
    })
}

/// `∫_0^T e^{-Ht} M_S e^{-Ht} dt`, held in the eigenbasis of `H`.
#[derive(Debug, Clone)]
pub struct Gramian {
    eigen: DMatrix<f64>,
    horizon: f64,
}

impl Gramian {
    /// `B̃` in eigen coordinates.
    pub fn eigen_matrix(&self) -> &DMatrix<f64> {
        &self.eigen
    }

    pub fn horizon(&self) -> f64 {
        self.horizon
    }

    /// `B = w V B̃ Vᵀ`, self-adjoint in the h-weighted product, so that
    /// `⟨φ, Bφ⟩_h` is the observed energy.
    pub fn grid_matrix(&self, spec: &SpectralData) -> DMatrix<f64> {
        let v = spec.vectors();
        (v * &self.eigen * v.transpose()) * spec.cell_volume()
    }

    pub fn trace(&self) -> f64 {
        self.eigen.trace()
    }
}

pub fn build_gramian(spec: &SpectralData, mask: &ObservationMask, t: f64) -> Result<Gramian> {
    if !(t > 0.0 && t.is_finite()) {
        return Err(Error::invalid(format!("time horizon must be positive, got {t}")));
    }
    if mask.len() != spec.len() {
        return Err(Error::ShapeMismatch {
            expected: spec.len(),
            found: mask.len(),
        });
    }
    let n = spec.len();
    let mut eigen = mask_form(spec, mask, n);
    let lambda = spec.eigenvalues();
    eigen
        .as_mut_slice()
        .par_chunks_mut(n)
        .enumerate()
        .for_each(|(l, col)| {
            for (k, entry) in col.iter_mut().enumerate() {
                *entry *= time_integral(lambda[k] + lambda[l], t);
            }
        });
    Ok(Gramian { eigen, horizon: t })
}

fn decay(spec: &SpectralData, t: f64) -> DVector<f64> {
    DVector::from_iterator(spec.len(), spec.eigenvalues().iter().map(|l| (-l * t).exp()))
}

/// Eigendecomposition of `B̃` split into resolved and numerically null parts.
struct SplitGramian {
    beta: Vec<f64>,
    vectors: DMatrix<f64>,
    kept: Vec<usize>,
    dropped: Vec<usize>,
    cutoff: f64,
}

fn split(gram: &Gramian) -> SplitGramian {
    let eig = SymmetricEigen::new(gram.eigen.clone());
    let beta: Vec<f64> = eig.eigenvalues.iter().copied().collect();
    let top = beta.iter().fold(0.0f64, |m, &b| m.max(b));
    let cutoff = GRAMIAN_CUTOFF * top;
    let (kept, dropped) = (0..beta.len()).partition(|&i| top > 0.0 && beta[i] > cutoff);
    SplitGramian {
        beta,
        vectors: eig.eigenvectors,
        kept,
        dropped,
        cutoff,
    }
}

#[derive(Debug, Clone)]
pub struct ObservabilityMeasurement {
    /// Smallest constant in the observability inequality; infinite when the
    /// Gramian is numerically singular on data that survives to time `T`.
    pub c_meas: f64,
    /// Extremal initial datum, unit h-norm, in grid coordinates.
    pub witness: DVector<f64>,
    pub singular: bool,
    pub null_directions: usize,
    pub unobservable_modes: usize,
    pub warnings: Vec<String>,
}

fn top_eigenvector(m: DMatrix<f64>) -> (f64, DVector<f64>) {
    let eig = SymmetricEigen::new(m);
    let (i, &val) = eig
        .eigenvalues
        .iter()
        .enumerate()
        .max_by(|a, b| a.1.total_cmp(b.1))
        .expect("nonempty matrix");
    let mut v = eig.eigenvectors.column(i).into_owned();
    let amax = v.amax();
    if let Some(first) = v.iter().find(|x| x.abs() > 1e-12 * amax) {
        if *first < 0.0 {
            v.neg_mut();
        }
    }
    (val, v)
}

/// `C_meas² = max_c (cᵀ D² c) / (cᵀ B̃ c) = λ_max(D B̃⁺ D)`.
///
/// Null directions of `B̃` are dropped from the pseudo-inverse. If the part
/// of `D` they carry could dominate the resolved maximum, the Gramian is
/// reported singular with the witness taken from `D P_null D`.
pub fn measure_observability(spec: &SpectralData, mask: &ObservationMask, t: f64) -> Result<ObservabilityMeasurement> {
    let gram = build_gramian(spec, mask, t)?;
    let d = decay(spec, t);
    let sg = split(&gram);
    let n = spec.len();
    let unobservable_modes = d.iter().filter(|&&x| x < UNOBSERVABLE_DECAY).count();
    let mut warnings = Vec::new();

    let mut resolved = DMatrix::<f64>::zeros(n, n);
    for &i in &sg.kept {
        let ud = sg.vectors.column(i).component_mul(&d);
        resolved += (&ud * ud.transpose()) / sg.beta[i];
    }
    let (c2_kept, c_kept) = top_eigenvector(resolved);

    let mut null_part = DMatrix::<f64>::zeros(n, n);
    for &i in &sg.dropped {
        let ud = sg.vectors.column(i).component_mul(&d);
        null_part += &ud * ud.transpose();
    }
    let (null_mass, c_null) = top_eigenvector(null_part);
    let singular = !sg.dropped.is_empty() && (sg.kept.is_empty() || null_mass >= sg.cutoff * c2_kept.max(0.0));
    if !sg.dropped.is_empty() {
        warnings.push(format!(
            "{} Gramian directions below {:e} treated as unobservable",
            sg.dropped.len(),
            sg.cutoff
        ));
    }
    let (c_meas, coeffs) = if singular {
        (f64::INFINITY, c_null)
    } else {
        (c2_kept.max(0.0).sqrt(), c_kept)
    };
    Ok(ObservabilityMeasurement {
        c_meas,
        witness: spec.synthesize(&coeffs)?,
        singular,
        null_directions: sg.dropped.len(),
        unobservable_modes,
        warnings,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ControlOptions {
    /// `None` selects `DEFAULT_RHO_SCALE · tr(Λ_T)/N`.
    pub rho: Option<f64>,
    pub steps: usize,
}

impl Default for ControlOptions {
    fn default() -> Self {
        Self {
            rho: None,
            steps: DEFAULT_CONTROL_STEPS,
        }
    }
}

#[derive(Debug, Clone)]
pub struct ControlResult {
    /// Left ends of the control intervals.
    pub times: Vec<f64>,
    pub step: f64,
    /// Piecewise-constant control per interval, grid coordinates.
    pub controls: Vec<DVector<f64>>,
    /// Masked nodes; controls vanish elsewhere.
    pub support: Vec<usize>,
    /// `‖u‖_{L²((0,T)×S)}` of the continuous-time HUM control.
    pub cost: f64,
    /// Same norm for the piecewise-constant control.
    pub cost_discrete: f64,
    /// Exact terminal state of the continuous control on modes with
    /// `e^{-λT} ≥ UNOBSERVABLE_DECAY`.
    pub terminal_norm: f64,
    /// Exact terminal state of the continuous control, all modes.
    pub terminal_norm_full: f64,
    /// Terminal state under the piecewise-constant control.
    pub terminal_norm_discrete: f64,
    /// `‖y_discrete(T) - y(T)‖`: error from discretizing `u` in time.
    pub quadrature_error: f64,
    pub rho: f64,
    pub initial_norm: f64,
}

/// Penalized HUM: `(Λ_T + ρ) η = e^{-HT} φ0`, `u(s) = -M_S e^{-H(T-s)} η`.
pub fn hum_null_control(
    spec: &SpectralData,
    mask: &ObservationMask,
    t: f64,
    phi0: &DVector<f64>,
    opts: &ControlOptions,
) -> Result<ControlResult> {
    if opts.steps == 0 {
        return Err(Error::invalid("control needs at least one time step"));
    }
    let gram = build_gramian(spec, mask, t)?;
    let n = spec.len();
    let c0 = spec.coefficients(phi0)?;
    let d = decay(spec, t);
    let target = c0.component_mul(&d);
    let rho = opts.rho.unwrap_or(DEFAULT_RHO_SCALE * gram.trace() / n as f64);
    if !(rho >= 0.0 && rho.is_finite()) {
        return Err(Error::invalid(format!("regularization must be nonnegative, got {rho}")));
    }
    let sg = split(&gram);
    if rho == 0.0 && !sg.dropped.is_empty() {
        return Err(Error::Singular(format!(
            "Gramian has {} null directions; rho = 0 needs a definite Gramian",
            sg.dropped.len()
        )));
    }
    let mut eta = DVector::<f64>::zeros(n);
    for (i, &b) in sg.beta.iter().enumerate() {
        let u = sg.vectors.column(i);
        let denom = b.max(0.0) + rho;
        if denom > 0.0 {
            eta += u * (u.dot(&target) / denom);
        }
    }
    let b = gram.eigen_matrix();
    let b_eta = b * &eta;
    let residual = &target - &b_eta;
    let observable: Vec<bool> = d.iter().map(|&x| x >= UNOBSERVABLE_DECAY).collect();
    let projected_norm = |r: &DVector<f64>| {
        r.iter()
            .zip(&observable)
            .filter(|(_, &o)| o)
            .map(|(x, _)| x * x)
            .sum::<f64>()
            .sqrt()
    };
    let cost = eta.dot(&b_eta).max(0.0).sqrt();

    // Piecewise-constant control: interval averages of e^{-λ(T-s)}.
    let steps = opts.steps;
    let step = t / steps as f64;
    let lambda = spec.eigenvalues();
    let mtilde = mask_form(spec, mask, n);
    let support = mask.support();
    let weights = mask.weights();
    let mut times = Vec::with_capacity(steps);
    let mut controls = Vec::with_capacity(steps);
    let mut y_disc = target.clone();
    let mut cost_disc = 0.0;
    for j in 0..steps {
        let s0 = j as f64 * step;
        let tail = t - (s0 + step);
        let avg = DVector::from_iterator(
            n,
            lambda
                .iter()
                .map(|&l| (-l * tail.max(0.0)).exp() * time_integral(l, step) / step),
        );
        let scaled = avg.component_mul(&eta);
        let mut u = spec.synthesize(&scaled)?;
        for (k, x) in u.iter_mut().enumerate() {
            *x *= -weights[k];
        }
        // Exact response to a constant control on [s0, s0 + step].
        let forced = (&mtilde * &scaled).component_mul(&avg) * step;
        y_disc -= forced;
        cost_disc += step * spec.inner(&u, &u);
        times.push(s0);
        controls.push(u);
    }

    Ok(ControlResult {
        times,
        step,
        controls,
        support,
        cost,
        cost_discrete: cost_disc.sqrt(),
        terminal_norm: projected_norm(&residual),
        terminal_norm_full: residual.norm(),
        terminal_norm_discrete: y_disc.norm(),
        quadrature_error: (&y_disc - &residual).norm(),
        rho,
        initial_norm: c0.norm(),
    })
}
