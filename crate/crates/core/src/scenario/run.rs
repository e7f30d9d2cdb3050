//! One runner per experiment kind.

use std::path::Path;

use nalgebra::DVector;
use rand::Rng;
use serde_json::json;

use super::config::{
    build_mask, ControlSection, InitialData, Kind, LiftingSection, ObservabilitySection, PerturbationConfig,
    ScenarioConfig, UcpSection, WegnerSection,
};
use super::manifest::{
    config_hash, file_entry, prepare_output_dir, seed_info, write_atomic, FileEntry, RunManifest, MANIFEST_JSON,
    RESULTS_CSV, RESULTS_JSON,
};
use super::report::{Cell, Report};
use crate::error::{Error, Result};
use crate::grid::{BoxDomain, Grid, Potential, DEFAULT_NODE_CAP};
use crate::heat::{eval_cobs, hum_null_control, measure_observability, Branch, ControlOptions, ObservabilityParameters};
use crate::lifting::{check_lipschitz, cuc_sup, extract_theta, find_gaps, lift_curve, symmetric_samples, SpectralGap};
use crate::operator::assemble_hamiltonian;
use crate::random::{fit_wegner_exponent, wegner_sweep, BoxSpec, WegnerParameters};
use crate::rng::{rng_for, stream};
use crate::spectral::{eigendecompose, SpectralData, DEFAULT_EIGEN_TOL};
use crate::ucp::{estimate_n_empirical, verify_ucp_instance, UcpInstance, UcpParameters};

/// Results of a run before anything touches the disk.
#[derive(Debug, Clone)]
pub struct Outcome {
    pub report: Report,
    /// Bound violations and other results worth a human look. They do not
    /// make the run fail.
    pub findings: Vec<String>,
}

pub fn compute(config: &ScenarioConfig) -> Result<Outcome> {
    let missing = |s: &str| Error::Config {
        path: s.into(),
        message: format!("`{}` runs need a `{s}` section", config.kind),
    };
    match config.kind {
        Kind::Ucp => run_ucp(config.ucp.as_ref().ok_or_else(|| missing("ucp"))?, config.seed),
        Kind::EstimateN => run_estimate_n(config.ucp.as_ref().ok_or_else(|| missing("ucp"))?, config.seed),
        Kind::Lifting => run_lifting(config.lifting.as_ref().ok_or_else(|| missing("lifting"))?, config.seed),
        Kind::Wegner => run_wegner(
            config.wegner.as_ref().ok_or_else(|| missing("wegner"))?,
            config.seed,
            config.force,
        ),
        Kind::Observability => run_observability(
            config.observability.as_ref().ok_or_else(|| missing("observability"))?,
            config.seed,
        ),
        Kind::Control => run_control(config.control.as_ref().ok_or_else(|| missing("control"))?, config.seed),
    }
}

/// Compute, then write `results.csv`, `results.json` and `manifest.json`
/// into `out`.
pub fn run_scenario(config: &ScenarioConfig, raw: &serde_json::Value, out: &Path) -> Result<RunManifest> {
    let started = chrono::Utc::now().to_rfc3339();
    prepare_output_dir(out)?;
    let outcome = compute(config)?;
    let csv = outcome.report.to_csv()?;
    let json = outcome.report.to_json()?;
    write_atomic(out, RESULTS_CSV, csv.as_bytes())?;
    write_atomic(out, RESULTS_JSON, json.as_bytes())?;
    let manifest = RunManifest {
        artifact: "ucplab".into(),
        version: env!("CARGO_PKG_VERSION").into(),
        kind: config.kind.to_string(),
        config_hash: config_hash(raw),
        started,
        finished: chrono::Utc::now().to_rfc3339(),
        threads: rayon::current_num_threads(),
        seeds: seed_info(config.seed),
        findings: outcome.findings,
        files: vec![
            file_entry(RESULTS_CSV, csv.as_bytes()),
            file_entry(RESULTS_JSON, json.as_bytes()),
            FileEntry {
                name: MANIFEST_JSON.into(),
                bytes: None,
                sha256: None,
            },
        ],
    };
    let mut text = serde_json::to_string_pretty(&manifest)?;
    text.push('\n');
    write_atomic(out, MANIFEST_JSON, text.as_bytes())?;
    Ok(manifest)
}

fn box_grid(section: &UcpSection, l: f64) -> Result<Grid> {
    let domain = BoxDomain::cube(section.dim, 0.0, l)?;
    Grid::with_resolution(domain, section.resolution, section.bc, DEFAULT_NODE_CAP)
}

fn spectrum(grid: &Grid, v: &Potential) -> Result<SpectralData> {
    eigendecompose(&assemble_hamiltonian(grid, v)?, DEFAULT_EIGEN_TOL)
}

struct UcpBox {
    l: f64,
    potential: Potential,
    spec: SpectralData,
    mask: crate::geometry::ObservationMask,
}

fn ucp_boxes(section: &UcpSection, seed: u64) -> Result<Vec<UcpBox>> {
    section
        .lengths
        .iter()
        .enumerate()
        .map(|(i, &l)| {
            let grid = box_grid(section, l)?;
            let potential = section.potential.build(&grid, seed, i as u64)?;
            let (_, mask) = build_mask(&grid, section.g, section.delta, section.points, seed, i as u64)?;
            let spec = spectrum(&grid, &potential)?;
            Ok(UcpBox {
                l,
                potential,
                spec,
                mask,
            })
        })
        .collect()
}

fn run_ucp(section: &UcpSection, seed: u64) -> Result<Outcome> {
    let mut report = Report::new(
        "ucp",
        &[
            ("L", "length"),
            ("G", "length"),
            ("delta", "length"),
            ("E", "energy"),
            ("N", "1"),
            ("C_uc", "1"),
            ("ratio", "1"),
            ("satisfied", "bool"),
        ],
    );
    let mut findings = Vec::new();
    for b in ucp_boxes(section, seed)? {
        for &energy in &section.energies {
            let params = UcpParameters {
                n_const: section.n_const,
                g: section.g,
                delta: section.delta,
                energy,
            };
            let lead = [b.l.into(), section.g.into(), section.delta.into(), energy.into(), section.n_const.into()];
            match verify_ucp_instance(&b.spec, &b.mask, &b.potential, &params) {
                Ok(r) => {
                    if !r.satisfied {
                        findings.push(format!(
                            "L = {}, E = {energy}: ratio {:e} below C_uc {:e}",
                            b.l, r.ratio, r.cuc
                        ));
                    }
                    report.push([&lead[..], &[r.cuc.into(), r.ratio.into(), r.satisfied.into()]].concat());
                }
                Err(Error::EmptySubspace { .. }) => {
                    report
                        .diagnostics
                        .push(format!("L = {}, E = {energy}: no eigenvalue below E", b.l));
                    report.push([&lead[..], &[Cell::Empty, Cell::Empty, Cell::Empty]].concat());
                }
                Err(e) => return Err(e),
            }
        }
        report.diagnostics.extend(b.mask.warnings().iter().cloned());
    }
    report.summary = json!({ "findings": findings.len() });
    Ok(Outcome { report, findings })
}

fn run_estimate_n(section: &UcpSection, seed: u64) -> Result<Outcome> {
    let mut report = Report::new(
        "estimate-N",
        &[
            ("L", "length"),
            ("G", "length"),
            ("delta", "length"),
            ("E", "energy"),
            ("ratio", "1"),
            ("exponent", "1"),
            ("lambda_star", "energy"),
            ("N_inst", "1"),
        ],
    );
    let boxes = ucp_boxes(section, seed)?;
    let mut instances = Vec::new();
    let mut labels = Vec::new();
    for b in &boxes {
        for &energy in &section.energies {
            if b.spec.count_below(energy) == 0 {
                report
                    .diagnostics
                    .push(format!("L = {}, E = {energy}: no eigenvalue below E; skipped", b.l));
                continue;
            }
            instances.push(UcpInstance {
                spec: &b.spec,
                energy,
                mask: &b.mask,
                g: section.g,
                delta: section.delta,
                potential: &b.potential,
            });
            labels.push((b.l, energy));
        }
    }
    let est = estimate_n_empirical(&instances)?;
    for ((l, energy), inst) in labels.iter().zip(&est.instances) {
        report.push(vec![
            (*l).into(),
            section.g.into(),
            section.delta.into(),
            (*energy).into(),
            inst.ratio.into(),
            inst.exponent.into(),
            inst.lambda_star.into(),
            Cell::opt(inst.n_inst),
        ]);
    }
    report.diagnostics.extend(est.diagnostics.iter().cloned());
    report.summary = json!({ "N_hat": est.n_hat, "instances": est.instances.len() });
    Ok(Outcome {
        report,
        findings: Vec::new(),
    })
}

fn lifting_grid(section: &LiftingSection, cells: usize) -> Result<Grid> {
    let domain = BoxDomain::cube(section.dim, 0.0, cells as f64)?;
    Grid::with_resolution(domain, section.resolution as f64, section.bc, DEFAULT_NODE_CAP)
}

fn select_gap(eigenvalues: &[f64], section: &LiftingSection) -> Result<SpectralGap> {
    let gaps = find_gaps(eigenvalues, section.gap_min_width);
    gaps.get(section.gap_index).copied().ok_or_else(|| Error::Config {
        path: "lifting.gap_index".into(),
        message: format!(
            "found {} gaps of width >= {}; index {} is out of range",
            gaps.len(),
            section.gap_min_width,
            section.gap_index
        ),
    })
}

fn run_lifting(section: &LiftingSection, seed: u64) -> Result<Outcome> {
    if section.cells == 0 {
        return Err(Error::invalid("lifting needs at least one cell"));
    }
    let grid = lifting_grid(section, section.cells)?;
    let v = Potential::cos_bump(&grid, section.background.amplitude, section.background.period)?;
    let h = assemble_hamiltonian(&grid, &v)?;
    let eigenvalues = h.eigenvalues();
    let gap = select_gap(&eigenvalues, section)?;
    let (_, mask) = build_mask(&grid, section.g, section.delta, section.points, seed, 0)?;
    let (w, theta) = match section.perturbation {
        PerturbationConfig::Mask { height } => {
            let w = Potential::new(mask.weights().iter().map(|m| height * m).collect())?;
            let theta = extract_theta(&w, &mask)?;
            (w, theta)
        }
        PerturbationConfig::Constant { value } => (Potential::constant(grid.len(), value), value),
    };
    let ts = symmetric_samples(gap.t0(w.sup_norm()), section.t_fraction, section.samples);
    let curve = lift_curve(&h, &w, &gap, &ts)?;
    let csup = cuc_sup(&v, &w, gap.b, section.g, section.delta, section.n_const)?;
    let check = check_lipschitz(&curve, theta, csup)?;

    let mut report = Report::new(
        "lifting",
        &[
            ("t", "1"),
            ("f_minus", "energy"),
            ("f_plus", "energy"),
            ("lower_bound", "energy"),
            ("upper_bound", "energy"),
            ("margin_lo", "energy"),
            ("margin_hi", "energy"),
        ],
    );
    for (k, s) in curve.samples.iter().enumerate() {
        let mut row = vec![s.t.into(), Cell::opt(s.f_minus), Cell::opt(s.f_plus)];
        match k.checked_sub(1).map(|i| &check.increments[i]) {
            Some(inc) => row.extend([
                inc.lower_bound.into(),
                inc.upper_bound.into(),
                Cell::opt(inc.margin_lo),
                Cell::opt(inc.margin_hi),
            ]),
            None => row.extend([Cell::Empty, Cell::Empty, Cell::Empty, Cell::Empty]),
        }
        report.push(row);
    }
    let mut findings = Vec::new();
    if check.lower_violations > 0 {
        findings.push(format!("{} increments below the lower Lipschitz bound", check.lower_violations));
    }
    if check.upper_violations > 0 {
        findings.push(format!("{} increments above the upper Lipschitz bound", check.upper_violations));
    }
    let flagged = curve.samples.iter().filter(|s| s.flagged()).count();
    if flagged > 0 {
        report
            .diagnostics
            .push(format!("{flagged} samples with an empty tracking window"));
    }
    report.diagnostics.push(check.note.clone());

    // The same gap on a supercell of twice the side; a stable surrogate keeps
    // its edges.
    let doubled = match lifting_grid(section, 2 * section.cells) {
        Ok(g2) => {
            let v2 = Potential::cos_bump(&g2, section.background.amplitude, section.background.period)?;
            let ev2 = assemble_hamiltonian(&g2, &v2)?.eigenvalues();
            let near = find_gaps(&ev2, section.gap_min_width)
                .into_iter()
                .min_by(|p, q| {
                    let d = |x: &SpectralGap| (x.a - gap.a).abs() + (x.b - gap.b).abs();
                    d(p).total_cmp(&d(q))
                });
            near.map(|g| json!({ "a": g.a, "b": g.b, "shift_a": g.a - gap.a, "shift_b": g.b - gap.b }))
        }
        Err(Error::GridCapExceeded { .. }) => {
            report
                .diagnostics
                .push("supercell doubling skipped: grid cap exceeded".into());
            None
        }
        Err(e) => return Err(e),
    };
    report.summary = json!({
        "gap": { "a": gap.a, "b": gap.b, "lower_index": gap.lower_index },
        "t0": gap.t0(check.w_sup),
        "theta": check.theta,
        "cuc_sup": check.cuc_sup,
        "w_sup": check.w_sup,
        "lower_violations": check.lower_violations,
        "upper_violations": check.upper_violations,
        "doubled_supercell_gap": doubled,
    });
    Ok(Outcome { report, findings })
}

fn run_wegner(section: &WegnerSection, seed: u64, force: bool) -> Result<Outcome> {
    let params = WegnerParameters {
        energy: section.energy,
        e0: section.e0.unwrap_or(section.energy),
        n_const: section.n_const,
        c_const: section.c_const,
        samples: section.samples,
        force,
    };
    let mut report = Report::new(
        "wegner",
        &[
            ("epsilon", "energy"),
            ("L", "length"),
            ("mean", "1"),
            ("stderr", "1"),
            ("bound", "1"),
            ("ratio", "1"),
        ],
    );
    let mut findings = Vec::new();
    let mut fits = Vec::new();
    for &l in &section.lengths {
        let spec = BoxSpec {
            dim: section.dim,
            l,
            resolution: section.resolution,
            bc: section.bc,
        };
        // One seed for every L: nested boxes see the same disorder.
        let estimates = wegner_sweep(&section.model, &spec, &section.epsilons, &params, seed)?;
        for e in &estimates {
            if e.ratio.is_some_and(|r| r > 1.0) {
                findings.push(format!(
                    "L = {l}, epsilon = {}: mean {} exceeds bound {:e}",
                    e.epsilon,
                    e.mean,
                    e.bound.unwrap_or(f64::NAN)
                ));
            }
            report.push(vec![
                e.epsilon.into(),
                l.into(),
                e.mean.into(),
                e.stderr.into(),
                Cell::opt(e.bound),
                Cell::opt(e.ratio),
            ]);
        }
        let points: Vec<(f64, f64)> = estimates.iter().map(|e| (e.epsilon, e.mean)).collect();
        match fit_wegner_exponent(&points, section.dim) {
            Ok(fit) => fits.push(json!({ "L": l, "slope": fit.slope, "residual": fit.residual,
                                         "points_used": fit.points_used })),
            Err(e) => report.diagnostics.push(format!("L = {l}: no exponent fit ({e})")),
        }
    }
    report.summary = json!({
        "epsilon_max": crate::random::epsilon_max(params.e0, params.n_const),
        "nu_sup": section.model.measure().nu_sup(),
        "fits": fits,
    });
    Ok(Outcome { report, findings })
}

fn run_observability(section: &ObservabilitySection, seed: u64) -> Result<Outcome> {
    let grid = section.grid.grid()?;
    let v = section.potential.build(&grid, seed, 0)?;
    let spec = spectrum(&grid, &v)?;
    let kappa = spec.ground_energy();
    let mut report = Report::new(
        "observability",
        &[
            ("T", "time"),
            ("delta", "length"),
            ("C_meas", "1"),
            ("C_obs_branch1", "1"),
            ("C_obs_branch2", "1"),
        ],
    );
    let mut findings = Vec::new();
    for (i, &delta) in section.deltas.iter().enumerate() {
        let (_, mask) = build_mask(&grid, section.g, delta, section.points, seed, i as u64)?;
        for &t in &section.horizons {
            let p = ObservabilityParameters::from_potential(&v, kappa, t, section.g, delta, section.constants);
            let first = eval_cobs(&p, Branch::First)?;
            let second = if kappa > 0.0 {
                Some(eval_cobs(&p, Branch::Second)?.c_obs)
            } else {
                None
            };
            let m = measure_observability(&spec, &mask, t)?;
            let best = eval_cobs(&p, Branch::Auto)?;
            if best.hypothesis_met && m.c_meas > best.c_obs {
                findings.push(format!(
                    "T = {t}, delta = {delta}: C_meas {:e} exceeds C_obs {:e}",
                    m.c_meas, best.c_obs
                ));
            }
            if !best.hypothesis_met {
                report
                    .diagnostics
                    .push(format!("T = {t}: kappa = {kappa} outside the range of the bound"));
            }
            report.diagnostics.extend(m.warnings.iter().map(|w| format!("T = {t}, delta = {delta}: {w}")));
            report.push(vec![t.into(), delta.into(), m.c_meas.into(), first.c_obs.into(), Cell::opt(second)]);
        }
    }
    report.summary = json!({ "kappa": kappa, "nodes": grid.len() });
    Ok(Outcome { report, findings })
}

fn initial_data(section: &ControlSection, spec: &SpectralData, seed: u64) -> Result<DVector<f64>> {
    let n = spec.len();
    Ok(match section.initial {
        InitialData::Random => {
            let mut rng = rng_for(seed, stream::INITIAL_DATA, 0);
            DVector::from_fn(n, |_, _| 2.0 * rng.random::<f64>() - 1.0)
        }
        InitialData::GroundState => spec.vectors().column(0).into_owned(),
        InitialData::Constant { value } => DVector::from_element(n, value),
    })
}

fn run_control(section: &ControlSection, seed: u64) -> Result<Outcome> {
    let grid = section.grid.grid()?;
    let v = section.potential.build(&grid, seed, 0)?;
    let spec = spectrum(&grid, &v)?;
    let (_, mask) = build_mask(&grid, section.g, section.delta, section.points, seed, 0)?;
    let phi0 = initial_data(section, &spec, seed)?;
    let opts = ControlOptions {
        rho: section.rho,
        steps: section.steps,
    };
    let c = hum_null_control(&spec, &mask, section.horizon, &phi0, &opts)?;
    let m = measure_observability(&spec, &mask, section.horizon)?;
    let p = ObservabilityParameters::from_potential(
        &v,
        spec.ground_energy(),
        section.horizon,
        section.g,
        section.delta,
        section.constants,
    );
    let cobs = eval_cobs(&p, Branch::Auto)?;

    let mut report = Report::new("control", &[("t", "time"), ("node", "index"), ("value", "1")]);
    for (t, u) in c.times.iter().zip(&c.controls) {
        for &k in &c.support {
            report.push(vec![(*t).into(), k.into(), u[k].into()]);
        }
    }
    let mut findings = Vec::new();
    let budget = cobs.c_obs * c.initial_norm;
    if cobs.hypothesis_met && c.cost > budget {
        findings.push(format!("control cost {:e} exceeds C_obs ||phi0|| = {budget:e}", c.cost));
    }
    report.diagnostics.extend(m.warnings.iter().cloned());
    report.summary = json!({
        "cost": c.cost,
        "cost_discrete": c.cost_discrete,
        "terminal_norm": c.terminal_norm,
        "terminal_norm_full": c.terminal_norm_full,
        "terminal_norm_discrete": c.terminal_norm_discrete,
        "quadrature_error": c.quadrature_error,
        "rho": c.rho,
        "initial_norm": c.initial_norm,
        "step": c.step,
        "C_meas": m.c_meas,
        "C_obs": cobs.c_obs,
        "cost_over_C_meas_norm": c.cost / (m.c_meas * c.initial_norm),
    });
    Ok(Outcome { report, findings })
}
