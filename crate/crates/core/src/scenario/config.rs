//! JSON scenario configuration.

use std::fmt;
use std::path::PathBuf;
use std::str::FromStr;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{observation_mask, sample_equidistributed, EquidistributedSequence, ObservationMask};
use crate::grid::{BoundaryCondition, BoxDomain, Grid, Potential};
use crate::heat::ObsConstants;
use crate::random::{Background, DisorderModel};
use crate::rng::{derive_seed, rng_for, stream};
use crate::ucp::DEFAULT_N;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Kind {
    Ucp,
    Lifting,
    Wegner,
    Observability,
    Control,
    #[serde(rename = "estimate-N")]
    EstimateN,
}

impl Kind {
    pub const ALL: [Kind; 6] = [
        Kind::Ucp,
        Kind::Lifting,
        Kind::Wegner,
        Kind::Observability,
        Kind::Control,
        Kind::EstimateN,
    ];

    pub fn as_str(&self) -> &'static str {
        match self {
            Kind::Ucp => "ucp",
            Kind::Lifting => "lifting",
            Kind::Wegner => "wegner",
            Kind::Observability => "observability",
            Kind::Control => "control",
            Kind::EstimateN => "estimate-N",
        }
    }
}

impl fmt::Display for Kind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Kind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Kind::ALL
            .into_iter()
            .find(|k| k.as_str().eq_ignore_ascii_case(s))
            .ok_or_else(|| Error::Config {
                path: "kind".into(),
                message: format!("unknown experiment kind `{s}`"),
            })
    }
}

fn one() -> f64 {
    1.0
}

fn one_dim() -> usize {
    1
}

fn default_n() -> f64 {
    DEFAULT_N
}

fn dirichlet() -> BoundaryCondition {
    BoundaryCondition::Dirichlet
}

fn neumann() -> BoundaryCondition {
    BoundaryCondition::Neumann
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum PotentialConfig {
    #[default]
    Zero,
    Constant { value: f64 },
    CosBump {
        amplitude: f64,
        #[serde(default = "one")]
        period: f64,
    },
    /// IID nodal values, uniform on `[min, max]`.
    RandomUniform { min: f64, max: f64 },
}

impl PotentialConfig {
    /// Potential of instance `index`; random kinds draw from the
    /// `POTENTIALS` stream.
    pub fn build(&self, grid: &Grid, seed: u64, index: u64) -> Result<Potential> {
        match *self {
            PotentialConfig::Zero => Ok(Potential::zeros(grid.len())),
            PotentialConfig::Constant { value } => Potential::new(vec![value; grid.len()]),
            PotentialConfig::CosBump { amplitude, period } => Potential::cos_bump(grid, amplitude, period),
            PotentialConfig::RandomUniform { min, max } => {
                if !(min <= max) {
                    return Err(Error::invalid("random-uniform potential needs min <= max"));
                }
                let mut rng = rng_for(seed, stream::POTENTIALS, index);
                Potential::new((0..grid.len()).map(|_| min + (max - min) * rng.random::<f64>()).collect())
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum PointPlacement {
    /// One uniform point per shrunken cell, seeded.
    #[default]
    Random,
    /// Cell centres.
    Centers,
}

/// Observation set `S_{δ,Z}` for instance `index`.
pub fn build_mask(
    grid: &Grid,
    g: f64,
    delta: f64,
    placement: PointPlacement,
    seed: u64,
    index: u64,
) -> Result<(EquidistributedSequence, ObservationMask)> {
    let seq = match placement {
        PointPlacement::Centers => EquidistributedSequence::centers(g, delta, grid.domain())?,
        PointPlacement::Random => sample_equidistributed(
            g,
            delta,
            grid.domain(),
            derive_seed(seed, stream::OBSERVATION_POINTS, index),
        )?,
    };
    let mask = observation_mask(grid, &seq);
    Ok((seq, mask))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct UcpSection {
    #[serde(default = "one_dim")]
    pub dim: usize,
    /// Box sides `L`; the box is `(0, L)^d`.
    pub lengths: Vec<f64>,
    /// Grid cells per unit length.
    #[serde(default = "default_resolution")]
    pub resolution: f64,
    #[serde(default = "dirichlet")]
    pub bc: BoundaryCondition,
    #[serde(rename = "G", default = "one")]
    pub g: f64,
    pub delta: f64,
    #[serde(default = "default_energies")]
    pub energies: Vec<f64>,
    #[serde(rename = "N", default = "default_n")]
    pub n_const: f64,
    #[serde(default)]
    pub potential: PotentialConfig,
    #[serde(default)]
    pub points: PointPlacement,
}

fn default_resolution() -> f64 {
    20.0
}

fn default_energies() -> Vec<f64> {
    vec![10.0]
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum PerturbationConfig {
    /// `W = height · 1_S`.
    Mask {
        #[serde(default = "one")]
        height: f64,
    },
    Constant { value: f64 },
}

impl Default for PerturbationConfig {
    fn default() -> Self {
        PerturbationConfig::Mask { height: 1.0 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LiftingSection {
    #[serde(default = "one_dim")]
    pub dim: usize,
    /// Supercell side in periods.
    pub cells: usize,
    /// Grid nodes per period.
    #[serde(default = "default_lift_resolution")]
    pub resolution: usize,
    #[serde(default = "neumann")]
    pub bc: BoundaryCondition,
    pub background: Background,
    #[serde(rename = "G", default = "one")]
    pub g: f64,
    pub delta: f64,
    #[serde(rename = "N", default = "default_n")]
    pub n_const: f64,
    #[serde(default)]
    pub perturbation: PerturbationConfig,
    #[serde(default = "one")]
    pub gap_min_width: f64,
    #[serde(default)]
    pub gap_index: usize,
    #[serde(default = "default_lift_samples")]
    pub samples: usize,
    /// Samples cover `[-frac·t0, frac·t0]`.
    #[serde(default = "default_t_fraction")]
    pub t_fraction: f64,
    #[serde(default)]
    pub points: PointPlacement,
}

fn default_lift_resolution() -> usize {
    20
}

fn default_lift_samples() -> usize {
    11
}

fn default_t_fraction() -> f64 {
    0.9
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct WegnerSection {
    pub model: DisorderModel,
    #[serde(default = "one_dim")]
    pub dim: usize,
    pub lengths: Vec<u32>,
    #[serde(default = "default_wegner_resolution")]
    pub resolution: usize,
    #[serde(default = "dirichlet")]
    pub bc: BoundaryCondition,
    pub energy: f64,
    /// `E_0` of the bound; defaults to `energy`.
    #[serde(default)]
    pub e0: Option<f64>,
    pub epsilons: Vec<f64>,
    pub samples: usize,
    #[serde(rename = "N", default = "default_n")]
    pub n_const: f64,
    #[serde(rename = "C", default = "one")]
    pub c_const: f64,
}

fn default_wegner_resolution() -> usize {
    40
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BoxGridConfig {
    #[serde(default = "one_dim")]
    pub dim: usize,
    #[serde(default = "one")]
    pub length: f64,
    /// Nodes per axis.
    pub points: usize,
    #[serde(default = "dirichlet")]
    pub bc: BoundaryCondition,
}

impl BoxGridConfig {
    pub fn grid(&self) -> Result<Grid> {
        let domain = BoxDomain::cube(self.dim, 0.0, self.length)?;
        Grid::new(domain, &vec![self.points; self.dim], self.bc)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ObservabilitySection {
    pub grid: BoxGridConfig,
    #[serde(default)]
    pub potential: PotentialConfig,
    #[serde(rename = "G", default = "one")]
    pub g: f64,
    pub deltas: Vec<f64>,
    pub horizons: Vec<f64>,
    #[serde(default)]
    pub constants: ObsConstants,
    #[serde(default)]
    pub points: PointPlacement,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum InitialData {
    /// IID uniform nodal values on `[-1, 1]`.
    #[default]
    Random,
    GroundState,
    Constant { value: f64 },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ControlSection {
    pub grid: BoxGridConfig,
    #[serde(default)]
    pub potential: PotentialConfig,
    #[serde(rename = "G", default = "one")]
    pub g: f64,
    pub delta: f64,
    pub horizon: f64,
    #[serde(default)]
    pub initial: InitialData,
    #[serde(default)]
    pub rho: Option<f64>,
    #[serde(default = "default_steps")]
    pub steps: usize,
    #[serde(default)]
    pub constants: ObsConstants,
    #[serde(default)]
    pub points: PointPlacement,
}

fn default_steps() -> usize {
    crate::heat::DEFAULT_CONTROL_STEPS
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioConfig {
    pub kind: Kind,
    pub seed: u64,
    #[serde(default)]
    pub output: Option<PathBuf>,
    /// Accept `ε > ε_max` in Wegner runs.
    #[serde(default)]
    pub force: bool,
    #[serde(default)]
    pub ucp: Option<UcpSection>,
    #[serde(default)]
    pub lifting: Option<LiftingSection>,
    #[serde(default)]
    pub wegner: Option<WegnerSection>,
    #[serde(default)]
    pub observability: Option<ObservabilitySection>,
    #[serde(default)]
    pub control: Option<ControlSection>,
}

/// Top-level scalars the command line may override.
#[derive(Debug, Clone, Default)]
pub struct Overrides {
    pub kind: Option<Kind>,
    pub seed: Option<u64>,
    pub output: Option<PathBuf>,
    pub force: bool,
}

fn config_error(path: impl Into<String>, message: impl Into<String>) -> Error {
    Error::Config {
        path: path.into(),
        message: message.into(),
    }
}

/// Parse a configuration, apply overrides and return it with the effective
/// JSON value (the input to the config hash).
pub fn parse_config(text: &str, overrides: &Overrides) -> Result<(ScenarioConfig, serde_json::Value)> {
    let mut value: serde_json::Value =
        serde_json::from_str(text).map_err(|e| config_error("", format!("invalid JSON: {e}")))?;
    let obj = value
        .as_object_mut()
        .ok_or_else(|| config_error("", "configuration must be a JSON object"))?;
    if let Some(kind) = overrides.kind {
        if let Some(existing) = obj.get("kind") {
            if existing.as_str() != Some(kind.as_str()) {
                return Err(config_error(
                    "kind",
                    format!("configuration declares kind {existing}, command line asks for `{kind}`"),
                ));
            }
        }
        obj.insert("kind".into(), kind.as_str().into());
    }
    if let Some(seed) = overrides.seed {
        obj.insert("seed".into(), seed.into());
    }
    if let Some(out) = &overrides.output {
        obj.insert("output".into(), out.to_string_lossy().into_owned().into());
    }
    if overrides.force {
        obj.insert("force".into(), true.into());
    }
    let config: ScenarioConfig = serde_path_to_error::deserialize(&value).map_err(|e| {
        let mut path = e.path().to_string();
        let message = e.inner().to_string();
        if let Some(field) = missing_field(&message) {
            path = if path == "." { field.to_string() } else { format!("{path}.{field}") };
        }
        config_error(path, message)
    })?;
    config.validate()?;
    Ok((config, value))
}

fn missing_field(message: &str) -> Option<&str> {
    let rest = message.strip_prefix("missing field `")?;
    rest.split('`').next()
}

impl ScenarioConfig {
    fn validate(&self) -> Result<()> {
        let (section, present) = match self.kind {
            Kind::Ucp | Kind::EstimateN => ("ucp", self.ucp.is_some()),
            Kind::Lifting => ("lifting", self.lifting.is_some()),
            Kind::Wegner => ("wegner", self.wegner.is_some()),
            Kind::Observability => ("observability", self.observability.is_some()),
            Kind::Control => ("control", self.control.is_some()),
        };
        if !present {
            return Err(config_error(section, format!("`{}` runs need a `{section}` section", self.kind)));
        }
        let nonempty = |path: &str, len: usize| {
            if len == 0 {
                Err(config_error(path, "sweep must not be empty"))
            } else {
                Ok(())
            }
        };
        if let Some(u) = &self.ucp {
            nonempty("ucp.lengths", u.lengths.len())?;
            nonempty("ucp.energies", u.energies.len())?;
        }
        if let Some(w) = &self.wegner {
            nonempty("wegner.lengths", w.lengths.len())?;
            nonempty("wegner.epsilons", w.epsilons.len())?;
        }
        if let Some(o) = &self.observability {
            nonempty("observability.deltas", o.deltas.len())?;
            nonempty("observability.horizons", o.horizons.len())?;
        }
        Ok(())
    }

    pub fn output_dir(&self) -> PathBuf {
        self.output
            .clone()
            .unwrap_or_else(|| PathBuf::from(format!("ucplab-{}", self.kind)))
    }
}
