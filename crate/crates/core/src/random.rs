//! Random breather and alloy-type potentials on `Λ_L = (-L/2, L/2)^d` and
//! Monte Carlo estimation of the Wegner trace
//! `E[Tr 1_{[E-ε, E+ε]}(H_{ω,L})]`.
//!
//! The coupling or radius at lattice site `j` of realization `i` is drawn
//! from `rng_for(derive_seed(seed, REALIZATIONS, i), DISORDER_SITES,
//! lattice_key(j))`, so nested boxes built from the same seed share their
//! common sites.

use rand::distr::weighted::WeightedIndex;
use rand::Rng;
use rand_distr::{Beta, Distribution};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use statrs::function::beta::ln_beta;

use crate::error::{Error, Result};
use crate::grid::{BoundaryCondition, BoxDomain, Grid, Potential, DEFAULT_NODE_CAP};
use crate::operator::assemble_hamiltonian;
use crate::rng::{derive_seed, lattice_key, rng_for, stream};

/// Radii must stay below this so breather balls never overlap.
pub const MAX_OMEGA: f64 = 0.25;

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum Sampler {
    #[default]
    Uniform,
    /// `Beta(α, β)` rescaled onto `[ω_-, ω_+]`; bounded density needs
    /// `α, β ≥ 1`.
    TruncatedBeta { alpha: f64, beta: f64 },
    /// Piecewise-constant density on equal bins of `[ω_-, ω_+]`; weights are
    /// normalized.
    CustomTable { weights: Vec<f64> },
}


#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SingleSiteMeasure {
    pub omega_minus: f64,
    pub omega_plus: f64,
    /// Declared `‖ν‖_∞`; the analytic sup when absent.
    #[serde(default)]
    pub nu_sup: Option<f64>,
    #[serde(default)]
    pub sampler: Sampler,
}

impl SingleSiteMeasure {
    pub fn uniform(omega_minus: f64, omega_plus: f64) -> Result<Self> {
        let m = Self {
            omega_minus,
            omega_plus,
            nu_sup: None,
            sampler: Sampler::Uniform,
        };
        m.validate()?;
        Ok(m)
    }

    /// Point mass at `r`; stands for the periodic (non-random) case.
    pub fn deterministic(r: f64) -> Result<Self> {
        Self::uniform(r, r)
    }

    pub fn is_degenerate(&self) -> bool {
        self.omega_minus == self.omega_plus
    }

    fn width(&self) -> f64 {
        self.omega_plus - self.omega_minus
    }

    pub fn validate(&self) -> Result<()> {
        let (a, b) = (self.omega_minus, self.omega_plus);
        if !(a >= 0.0 && a <= b && b < MAX_OMEGA) {
            return Err(Error::invalid(format!(
                "single-site support must satisfy 0 <= omega_minus <= omega_plus < 1/4, got [{a}, {b}]"
            )));
        }
        match &self.sampler {
            Sampler::Uniform => {}
            Sampler::TruncatedBeta { alpha, beta } => {
                if !(*alpha >= 1.0 && *beta >= 1.0 && alpha.is_finite() && beta.is_finite()) {
                    return Err(Error::invalid("truncated-beta needs alpha, beta >= 1 for a bounded density"));
                }
            }
            Sampler::CustomTable { weights } => {
                if weights.is_empty() || weights.iter().any(|w| !(*w >= 0.0 && w.is_finite())) {
                    return Err(Error::invalid("custom-table weights must be nonnegative and finite"));
                }
                if !(weights.iter().sum::<f64>() > 0.0) {
                    return Err(Error::invalid("custom-table weights must not all vanish"));
                }
            }
        }
        if let (Some(declared), Some(exact)) = (self.nu_sup, self.density_sup()) {
            if declared < exact * (1.0 - 1e-12) {
                return Err(Error::invalid(format!(
                    "declared nu_sup {declared} is below the density sup {exact}"
                )));
            }
        }
        Ok(())
    }

    /// Exact `sup ν`; `None` for the point mass, which has no density.
    pub fn density_sup(&self) -> Option<f64> {
        if self.is_degenerate() {
            return None;
        }
        let w = self.width();
        Some(match &self.sampler {
            Sampler::Uniform => 1.0 / w,
            Sampler::TruncatedBeta { alpha, beta } => {
                let (a, b) = (*alpha, *beta);
                let mode = if a + b > 2.0 { (a - 1.0) / (a + b - 2.0) } else { 0.5 };
                let log_pdf = |x: f64| {
                    let la = if a == 1.0 { 0.0 } else { (a - 1.0) * x.ln() };
                    let lb = if b == 1.0 { 0.0 } else { (b - 1.0) * (1.0 - x).ln() };
                    la + lb - ln_beta(a, b)
                };
                log_pdf(mode).exp() / w
            }
            Sampler::CustomTable { weights } => {
                let total: f64 = weights.iter().sum();
                let bin = w / weights.len() as f64;
                weights.iter().fold(0.0f64, |m, &x| m.max(x)) / (total * bin)
            }
        })
    }

    /// `‖ν‖_∞` used in bounds: the declared value or the exact sup.
    pub fn nu_sup(&self) -> Option<f64> {
        self.nu_sup.or_else(|| self.density_sup())
    }

    pub fn mean(&self) -> f64 {
        let (a, w) = (self.omega_minus, self.width());
        match &self.sampler {
            Sampler::Uniform => a + 0.5 * w,
            Sampler::TruncatedBeta { alpha, beta } => a + w * alpha / (alpha + beta),
            Sampler::CustomTable { weights } => {
                let total: f64 = weights.iter().sum();
                let n = weights.len() as f64;
                a + w * weights
                    .iter()
                    .enumerate()
                    .map(|(i, &x)| x * (i as f64 + 0.5) / n)
                    .sum::<f64>()
                    / total
            }
        }
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        if self.is_degenerate() {
            return self.omega_minus;
        }
        let (a, w) = (self.omega_minus, self.width());
        let u = match &self.sampler {
            Sampler::Uniform => rng.random::<f64>(),
            Sampler::TruncatedBeta { alpha, beta } => Beta::new(*alpha, *beta)
                .expect("validated shape parameters")
                .sample(rng),
            Sampler::CustomTable { weights } => {
                let idx = WeightedIndex::new(weights)
                    .expect("validated weights")
                    .sample(rng);
                (idx as f64 + rng.random::<f64>()) / weights.len() as f64
            }
        };
        a + w * u
    }
}

/// Box `Λ_L` and its grid. Spacing is exactly `1/resolution`, so grids of
/// nested boxes share their nodes.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BoxSpec {
    pub dim: usize,
    pub l: u32,
    /// Grid cells per unit length.
    pub resolution: usize,
    pub bc: BoundaryCondition,
}

impl BoxSpec {
    pub fn grid(&self) -> Result<Grid> {
        self.grid_with_cap(DEFAULT_NODE_CAP)
    }

    pub fn grid_with_cap(&self, cap: usize) -> Result<Grid> {
        if self.l == 0 || self.resolution == 0 {
            return Err(Error::invalid("box size L and resolution must be positive"));
        }
        let cells = self.l as usize * self.resolution;
        let n = match self.bc {
            BoundaryCondition::Dirichlet => cells - 1,
            BoundaryCondition::Neumann => cells,
        };
        let domain = BoxDomain::centered(self.dim, self.l as f64)?;
        Grid::with_cap(domain, &vec![n; self.dim], self.bc, cap)
    }
}

/// Lattice sites `j ∈ Z^d` with `|j_i| <= L/2 + reach`.
pub fn lattice_sites(dim: usize, l: u32, reach: f64) -> Vec<Vec<i64>> {
    let m = (l as f64 / 2.0 + reach).floor() as i64;
    let mut sites = vec![Vec::new()];
    for _ in 0..dim {
        sites = sites
            .into_iter()
            .flat_map(|s| {
                (-m..=m).map(move |c| {
                    let mut t = s.clone();
                    t.push(c);
                    t
                })
            })
            .collect();
    }
    sites
}

fn distance(x: &[f64], j: &[i64]) -> f64 {
    x.iter()
        .zip(j)
        .map(|(a, &b)| (a - b as f64).powi(2))
        .sum::<f64>()
        .sqrt()
}

fn site_values(measure: &SingleSiteMeasure, sites: &[Vec<i64>], seed: u64) -> Vec<f64> {
    sites
        .iter()
        .map(|j| measure.sample(&mut rng_for(seed, stream::DISORDER_SITES, lattice_key(j))))
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BreatherRealization {
    pub l: u32,
    pub sites: Vec<Vec<i64>>,
    pub radii: Vec<f64>,
    pub potential: Potential,
    pub warnings: Vec<String>,
}

/// `V(x) = #{j : |x - j| < ω_j}` at every node.
pub fn breather_potential(grid: &Grid, sites: &[Vec<i64>], radii: &[f64]) -> Result<Potential> {
    if sites.len() != radii.len() {
        return Err(Error::ShapeMismatch {
            expected: sites.len(),
            found: radii.len(),
        });
    }
    let dim = grid.dim();
    let values = (0..grid.len())
        .map(|k| {
            let x = &grid.node(k)[..dim];
            sites
                .iter()
                .zip(radii)
                .filter(|(j, &r)| distance(x, j) < r)
                .count() as f64
        })
        .collect();
    Potential::new(values)
}

pub fn sample_breather(measure: &SingleSiteMeasure, spec: &BoxSpec, seed: u64) -> Result<BreatherRealization> {
    measure.validate()?;
    let grid = spec.grid()?;
    sample_breather_on(measure, spec.l, &grid, seed)
}

fn sample_breather_on(measure: &SingleSiteMeasure, l: u32, grid: &Grid, seed: u64) -> Result<BreatherRealization> {
    let sites = lattice_sites(grid.dim(), l, measure.omega_plus);
    let radii = site_values(measure, &sites, seed);
    let potential = breather_potential(grid, &sites, &radii)?;
    let mut warnings = Vec::new();
    let h = grid.spacing().iter().fold(0.0f64, |m, &x| m.max(x));
    if h > measure.omega_minus / 2.0 {
        warnings.push(format!(
            "grid spacing {h} does not resolve omega_minus = {} (needs h <= omega_minus/2)",
            measure.omega_minus
        ));
    }
    Ok(BreatherRealization {
        l,
        sites,
        radii,
        potential,
        warnings,
    })
}

/// Single-site profile `u` of the alloy model.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum Bump {
    /// `1_{|x| < radius}`.
    Indicator { radius: f64 },
    /// `(1 - |x|/radius)_+`.
    Tent { radius: f64 },
}

impl Bump {
    pub fn radius(&self) -> f64 {
        match *self {
            Bump::Indicator { radius } | Bump::Tent { radius } => radius,
        }
    }

    pub fn eval(&self, r: f64) -> f64 {
        match *self {
            Bump::Indicator { radius } => f64::from(u8::from(r < radius)),
            Bump::Tent { radius } => (1.0 - r / radius).max(0.0),
        }
    }

    /// Largest `c` with `u >= c 1_{B_δ}`.
    pub fn lower_bound(&self, delta: f64) -> f64 {
        match *self {
            Bump::Indicator { radius } => f64::from(u8::from(delta <= radius)),
            Bump::Tent { radius } => (1.0 - delta / radius).max(0.0),
        }
    }

    fn validate(&self) -> Result<()> {
        let r = self.radius();
        if !(r > 0.0 && r.is_finite()) {
            return Err(Error::invalid("bump radius must be positive"));
        }
        Ok(())
    }
}

/// Periodic background `Σ_j ½ amplitude (1 + cos(2π x_i / period))`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Background {
    pub amplitude: f64,
    #[serde(default = "unit_period")]
    pub period: f64,
}

fn unit_period() -> f64 {
    1.0
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AlloyModel {
    pub measure: SingleSiteMeasure,
    pub bump: Bump,
    #[serde(default)]
    pub background: Option<Background>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AlloyRealization {
    pub l: u32,
    pub sites: Vec<Vec<i64>>,
    pub couplings: Vec<f64>,
    pub potential: Potential,
}

impl AlloyModel {
    pub fn validate(&self) -> Result<()> {
        self.measure.validate()?;
        self.bump.validate()
    }

    pub fn sites(&self, dim: usize, l: u32) -> Vec<Vec<i64>> {
        lattice_sites(dim, l, self.bump.radius())
    }

    pub fn background_potential(&self, grid: &Grid) -> Result<Potential> {
        match self.background {
            Some(b) => Potential::cos_bump(grid, b.amplitude, b.period),
            None => Ok(Potential::zeros(grid.len())),
        }
    }

    /// `V_per + Σ_j ω_j u(· - j)` for explicit couplings.
    pub fn potential(&self, grid: &Grid, sites: &[Vec<i64>], couplings: &[f64]) -> Result<Potential> {
        if sites.len() != couplings.len() {
            return Err(Error::ShapeMismatch {
                expected: sites.len(),
                found: couplings.len(),
            });
        }
        let dim = grid.dim();
        let mut values = self.background_potential(grid)?.values().to_vec();
        for (k, v) in values.iter_mut().enumerate() {
            let x = &grid.node(k)[..dim];
            for (j, &w) in sites.iter().zip(couplings) {
                *v += w * self.bump.eval(distance(x, j));
            }
        }
        Potential::new(values)
    }
}

pub fn sample_alloy(model: &AlloyModel, spec: &BoxSpec, seed: u64) -> Result<AlloyRealization> {
    model.validate()?;
    let grid = spec.grid()?;
    sample_alloy_on(model, spec.l, &grid, seed)
}

fn sample_alloy_on(model: &AlloyModel, l: u32, grid: &Grid, seed: u64) -> Result<AlloyRealization> {
    let sites = model.sites(grid.dim(), l);
    let couplings = site_values(&model.measure, &sites, seed);
    let potential = model.potential(grid, &sites, &couplings)?;
    Ok(AlloyRealization {
        l,
        sites,
        couplings,
        potential,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "model", rename_all = "kebab-case")]
pub enum DisorderModel {
    Breather { measure: SingleSiteMeasure },
    Alloy(AlloyModel),
}

impl DisorderModel {
    pub fn measure(&self) -> &SingleSiteMeasure {
        match self {
            DisorderModel::Breather { measure } => measure,
            DisorderModel::Alloy(m) => &m.measure,
        }
    }

    pub fn validate(&self) -> Result<()> {
        match self {
            DisorderModel::Breather { measure } => measure.validate(),
            DisorderModel::Alloy(m) => m.validate(),
        }
    }

    /// Potential of realization `index` under `seed`.
    pub fn realize(&self, grid: &Grid, l: u32, seed: u64, index: u64) -> Result<Potential> {
        let s = derive_seed(seed, stream::REALIZATIONS, index);
        Ok(match self {
            DisorderModel::Breather { measure } => sample_breather_on(measure, l, grid, s)?.potential,
            DisorderModel::Alloy(m) => sample_alloy_on(m, l, grid, s)?.potential,
        })
    }
}

/// `ε_max = ¼ · 8^{-N(2 + √|E_0 + 1|)}`.
pub fn epsilon_max(e0: f64, n_const: f64) -> f64 {
    0.25 * 8f64.powf(-n_const * (2.0 + (e0 + 1.0).abs().sqrt()))
}

/// `C ‖ν‖_∞ ε^{1/(N(2 + √|E_0+1|))} |ln ε|^d L^d`.
pub fn wegner_bound(e0: f64, epsilon: f64, l: f64, dim: usize, n_const: f64, c_const: f64, nu_sup: f64) -> Result<f64> {
    if !(epsilon > 0.0 && epsilon < 1.0) {
        return Err(Error::invalid(format!("epsilon must lie in (0, 1), got {epsilon}")));
    }
    if !(n_const > 0.0 && c_const > 0.0 && nu_sup > 0.0 && l > 0.0) {
        return Err(Error::invalid("N, C, nu_sup and L must be positive"));
    }
    let d = dim as i32;
    let exponent = 1.0 / (n_const * (2.0 + (e0 + 1.0).abs().sqrt()));
    Ok(c_const * nu_sup * epsilon.powf(exponent) * epsilon.ln().abs().powi(d) * l.powi(d))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WegnerParameters {
    pub energy: f64,
    /// `E_0` of the bound; defaults to `energy` upstream.
    pub e0: f64,
    pub n_const: f64,
    pub c_const: f64,
    pub samples: usize,
    /// Accept `ε > ε_max`.
    pub force: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WegnerEstimate {
    pub energy: f64,
    pub epsilon: f64,
    pub l: u32,
    pub samples: usize,
    pub mean: f64,
    pub stderr: f64,
    /// `None` when the bound is undefined (`ε >= 1` or no density).
    pub bound: Option<f64>,
    /// `None` when there is no bound, or when both mean and bound are zero.
    pub ratio: Option<f64>,
    pub epsilon_max: f64,
    pub n_const: f64,
    pub c_const: f64,
}

/// Mean and standard error from exact integer sums; order independent.
fn moments(counts: impl Iterator<Item = usize>) -> (f64, f64, usize) {
    let (mut m, mut s, mut ss) = (0u128, 0u128, 0u128);
    for c in counts {
        m += 1;
        s += c as u128;
        ss += (c as u128) * (c as u128);
    }
    let mean = s as f64 / m as f64;
    // M·SS - S² is exact in integers.
    let num = (m * ss - s * s) as f64;
    let var = num / (m as f64 * (m as f64 - 1.0));
    (mean, (var / m as f64).sqrt(), m as usize)
}

/// `mean / bound`; an underflowed bound gives `inf` against a positive mean
/// and no ratio against a zero mean.
fn bound_ratio(mean: f64, bound: f64) -> Option<f64> {
    if bound > 0.0 {
        Some(mean / bound)
    } else if mean > 0.0 {
        Some(f64::INFINITY)
    } else {
        None
    }
}

/// Wegner traces for every `ε` on the same `M` realizations (matched seeds).
pub fn wegner_sweep(
    model: &DisorderModel,
    spec: &BoxSpec,
    epsilons: &[f64],
    params: &WegnerParameters,
    seed: u64,
) -> Result<Vec<WegnerEstimate>> {
    model.validate()?;
    if params.samples < 2 {
        return Err(Error::invalid("wegner_mc needs at least 2 samples"));
    }
    if epsilons.is_empty() {
        return Err(Error::invalid("epsilon sweep is empty"));
    }
    let eps_max = epsilon_max(params.e0, params.n_const);
    for &e in epsilons {
        if !(e > 0.0 && e.is_finite()) {
            return Err(Error::invalid(format!("epsilon must be positive, got {e}")));
        }
        if e > eps_max && !params.force {
            return Err(Error::invalid(format!(
                "epsilon {e} exceeds epsilon_max = {eps_max:e}; pass force to relax"
            )));
        }
    }
    let grid = spec.grid()?;
    let per_sample = (0..params.samples as u64)
        .into_par_iter()
        .map(|i| -> Result<Vec<usize>> {
            let v = model.realize(&grid, spec.l, seed, i)?;
            let h = assemble_hamiltonian(&grid, &v)?;
            Ok(epsilons
                .iter()
                .map(|&e| h.count_in_interval(params.energy - e, params.energy + e))
                .collect())
        })
        .collect::<Result<Vec<_>>>()?;
    let nu = model.measure().nu_sup();
    epsilons
        .iter()
        .enumerate()
        .map(|(k, &e)| {
            let (mean, stderr, m) = moments(per_sample.iter().map(|c| c[k]));
            let bound = match nu {
                Some(nu) if e < 1.0 => Some(wegner_bound(
                    params.e0,
                    e,
                    spec.l as f64,
                    spec.dim,
                    params.n_const,
                    params.c_const,
                    nu,
                )?),
                _ => None,
            };
            Ok(WegnerEstimate {
                energy: params.energy,
                epsilon: e,
                l: spec.l,
                samples: m,
                mean,
                stderr,
                bound,
                ratio: bound.and_then(|b| bound_ratio(mean, b)),
                epsilon_max: eps_max,
                n_const: params.n_const,
                c_const: params.c_const,
            })
        })
        .collect()
}

pub fn wegner_mc(
    model: &DisorderModel,
    spec: &BoxSpec,
    epsilon: f64,
    params: &WegnerParameters,
    seed: u64,
) -> Result<WegnerEstimate> {
    Ok(wegner_sweep(model, spec, &[epsilon], params, seed)?.remove(0))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WegnerFit {
    pub slope: f64,
    pub intercept: f64,
    /// Root-mean-square residual of the regression.
    pub residual: f64,
    pub points_used: usize,
    pub diagnostics: Vec<String>,
}

/// Least-squares slope of `ln(mean / |ln ε|^d)` against `ln ε`.
pub fn fit_wegner_exponent(points: &[(f64, f64)], dim: usize) -> Result<WegnerFit> {
    let mut diagnostics = Vec::new();
    let mut xy = Vec::new();
    for &(eps, mean) in points {
        if !(eps > 0.0 && eps < 1.0) {
            diagnostics.push(format!("epsilon {eps} outside (0, 1); dropped"));
        } else if !(mean > 0.0) {
            diagnostics.push(format!("zero mean at epsilon {eps}; dropped"));
        } else {
            xy.push((eps.ln(), mean.ln() - dim as f64 * eps.ln().abs().ln()));
        }
    }
    if xy.len() < 4 {
        return Err(Error::invalid(format!(
            "need at least 4 usable sweep points, have {}",
            xy.len()
        )));
    }
    let (lo, hi) = xy
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), p| (a.min(p.0), b.max(p.0)));
    if hi - lo < 2.0 * std::f64::consts::LN_10 * (1.0 - 1e-12) {
        return Err(Error::invalid("epsilon sweep must span at least two decades"));
    }
    let n = xy.len() as f64;
    let mx = xy.iter().map(|p| p.0).sum::<f64>() / n;
    let my = xy.iter().map(|p| p.1).sum::<f64>() / n;
    let sxx: f64 = xy.iter().map(|p| (p.0 - mx).powi(2)).sum();
    let sxy: f64 = xy.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let residual = (xy
        .iter()
        .map(|p| (p.1 - intercept - slope * p.0).powi(2))
        .sum::<f64>()
        / n)
        .sqrt();
    Ok(WegnerFit {
        slope,
        intercept,
        residual,
        points_used: xy.len(),
        diagnostics,
    })
}
