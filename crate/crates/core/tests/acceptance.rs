//! Acceptance suite: one PASS/FAIL line per criterion.
//!
//! Every reference value is computed here, independently of the library
//! path it checks (closed forms, brute-force scans, direct quadrature,
//! dense matrix exponentials). Criteria listed in `KNOWN_FAILURES` are
//! reported as FAIL but do not fail the run; if one of them starts passing,
//! the run fails so the list gets updated.

use std::f64::consts::PI;
use std::process::ExitCode;
use std::time::{Duration, Instant};

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use ucplab::heat::{
    build_gramian, eval_cobs, hum_null_control, measure_observability, Branch, ControlOptions, ObsConstants,
    ObservabilityParameters,
};
use ucplab::lifting::{check_lipschitz, cuc_sup, extract_theta, find_gaps, lift_curve, symmetric_samples};
use ucplab::random::{fit_wegner_exponent, wegner_sweep, BoxSpec, DisorderModel, SingleSiteMeasure, WegnerParameters};
use ucplab::scenario::{parse_config, run_scenario, Overrides};
use ucplab::ucp::{eval_cuc, estimate_n_empirical, min_subspace_ratio, UcpInstance, DEFAULT_N};
use ucplab::{
    assemble_hamiltonian, eigendecompose, observation_mask, sample_equidistributed, BoundaryCondition, BoxDomain,
    EquidistributedSequence, Grid, ObservationMask, Potential, SpectralData, DEFAULT_EIGEN_TOL,
};

const SEED: u64 = 42;

/// Criteria that cannot be met as stated; see the detail line for why.
const KNOWN_FAILURES: &[u32] = &[3];

struct Verdict {
    pass: bool,
    detail: String,
}

impl Verdict {
    fn new(pass: bool, detail: impl Into<String>) -> Self {
        Self {
            pass,
            detail: detail.into(),
        }
    }
}

type Outcome = Result<Verdict, Box<dyn std::error::Error>>;

fn rng(tag: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(SEED ^ (tag << 32))
}

fn line_grid(n: usize, lo: f64, hi: f64) -> Grid {
    Grid::new(BoxDomain::cube(1, lo, hi).unwrap(), &[n], BoundaryCondition::Dirichlet).unwrap()
}

fn spectrum(grid: &Grid, v: &Potential) -> SpectralData {
    eigendecompose(&assemble_hamiltonian(grid, v).unwrap(), DEFAULT_EIGEN_TOL).unwrap()
}

fn random_potential(grid: &Grid, lo: f64, hi: f64, r: &mut ChaCha8Rng) -> Potential {
    Potential::new((0..grid.len()).map(|_| r.random_range(lo..hi)).collect()).unwrap()
}

fn list(x: &[f64]) -> String {
    x.iter().map(|v| format!("{v:.4e}")).collect::<Vec<_>>().join(", ")
}

fn h_norm(x: &DVector<f64>, w: f64) -> f64 {
    (w * x.norm_squared()).sqrt()
}

// 1. Dirichlet eigenvalues against the tridiagonal closed form.
fn discretization() -> Outcome {
    let mut worst = 0.0f64;
    for n in [31usize, 127] {
        let h = 1.0 / (n + 1) as f64;
        let spec = spectrum(&line_grid(n, 0.0, 1.0), &Potential::zeros(n));
        for (j, &lam) in spec.eigenvalues().iter().enumerate() {
            let exact = 4.0 / (h * h) * ((j + 1) as f64 * PI / (2.0 * (n + 1) as f64)).sin().powi(2);
            worst = worst.max((lam - exact).abs() / exact);
        }
    }
    Ok(Verdict::new(worst <= 1e-10, format!("max relative error {worst:.2e} (tol 1e-10)")))
}

// 2. Semigroup law and identity at t = 0.
fn semigroup() -> Outcome {
    let mut r = rng(2);
    let mut worst = 0.0f64;
    for i in 0..50 {
        let grid = if i % 5 == 4 {
            let m = r.random_range(4..=14usize);
            Grid::new(BoxDomain::cube(2, 0.0, 1.0)?, &[m, m], BoundaryCondition::Neumann)?
        } else {
            line_grid(r.random_range(10..=200usize), 0.0, r.random_range(1.0..5.0))
        };
        let v = random_potential(&grid, -2.0, 5.0, &mut r);
        let spec = spectrum(&grid, &v);
        let phi = DVector::from_fn(grid.len(), |_, _| r.random_range(-1.0..1.0));
        let w = grid.cell_volume();
        let norm = h_norm(&phi, w);
        let (t, s) = (r.random_range(0.0..2.0), r.random_range(0.0..2.0));
        let composed = spec.semigroup_apply(t, &spec.semigroup_apply(s, &phi)?)?;
        let direct = spec.semigroup_apply(t + s, &phi)?;
        let identity = spec.semigroup_apply(0.0, &phi)?;
        worst = worst
            .max(h_norm(&(composed - direct), w) / norm)
            .max(h_norm(&(identity - &phi), w) / norm);
    }
    Ok(Verdict::new(worst <= 1e-10, format!("50 instances, max defect {worst:.2e} (tol 1e-10)")))
}

/// Observed fraction of the mass of a nodal vector, straight from the
/// 0/1 weights.
fn observed_fraction(psi: &DVector<f64>, mask: &ObservationMask) -> f64 {
    let on: f64 = psi.iter().zip(mask.weights()).map(|(x, m)| m * x * x).sum();
    on / psi.norm_squared()
}

// 3. Exact minimal ratio vs sampling, and the sin² instance.
fn ucp_exactness() -> Outcome {
    let mut r = rng(3);
    let mut above = f64::NEG_INFINITY;
    let mut attained = 0.0f64;
    let mut gap_sum = 0.0;
    for _ in 0..20 {
        let n = r.random_range(40..=120usize);
        let l = r.random_range(3.0..8.0);
        let grid = line_grid(n, 0.0, l);
        let v = random_potential(&grid, 0.0, 10.0, &mut r);
        let spec = spectrum(&grid, &v);
        let k = r.random_range(2..=8usize);
        let ev = spec.eigenvalues();
        let energy = 0.5 * (ev[k - 1] + ev[k]);
        let seq = sample_equidistributed(1.0, 0.3, grid.domain(), r.random())?;
        let mask = observation_mask(&grid, &seq);
        let exact = min_subspace_ratio(&spec, energy, &mask)?;
        let q = spec.vectors().columns(0, k);
        let mut best = f64::INFINITY;
        for _ in 0..1000 {
            let c = DVector::from_fn(k, |_, _| StandardNormal.sample(&mut r));
            best = best.min(observed_fraction(&(q * c), &mask));
        }
        // The minimizer is itself a subspace element; it must attain the value.
        let own = observed_fraction(&exact.psi, &mask);
        above = above.max(exact.ratio - best);
        attained = attained.max((own - exact.ratio).abs());
        gap_sum += best - exact.ratio;
    }
    let sampling_ok = above <= 1e-12 && attained <= 1e-12;

    let closed = |x: f64| x / 2.0 - (2.0 * PI * x).sin() / (4.0 * PI);
    let target = (closed(0.6) - closed(0.4)) / (closed(1.0) - closed(0.0));
    let sin_ratio = |n: usize| -> Result<f64, Box<dyn std::error::Error>> {
        let grid = line_grid(n, 0.0, 1.0);
        let seq = EquidistributedSequence::from_points(1.0, 0.1, grid.domain(), vec![vec![0.5]])?;
        let mask = observation_mask(&grid, &seq);
        let spec = spectrum(&grid, &Potential::zeros(n));
        Ok(min_subspace_ratio(&spec, 20.0, &mask)?.ratio)
    };
    let at_199 = sin_ratio(199)?;
    let rel = (at_199 - target) / target;
    let trend: Vec<String> = [99usize, 399]
        .iter()
        .map(|&n| sin_ratio(n).map(|x| format!("n={n}: {:+.2}%", 100.0 * (x - target) / target)))
        .collect::<Result<_, _>>()?;
    Ok(Verdict::new(
        sampling_ok && rel.abs() <= 0.01,
        format!(
            "sampling: max(exact - min over 1000 samples) {above:.1e}, minimizer attains to {attained:.1e}, \
             mean sampling gap {:.2e}; sin² at n=199: {at_199:.6} vs {target:.6} ({:+.2}%, tol 1%) \
             [nodal 0/1 ball converges at O(h): {}]",
            gap_sum / 20.0,
            100.0 * rel,
            trend.join(", ")
        ),
    ))
}

// 4. Scale-free probe over box sizes.
fn scale_free() -> Outcome {
    let mut ratios = Vec::new();
    let mut n_hats = Vec::new();
    for l in [5.0, 10.0, 20.0] {
        let domain = BoxDomain::cube(1, 0.0, l)?;
        let grid = Grid::with_resolution(domain, 40.0, BoundaryCondition::Dirichlet, ucplab::DEFAULT_NODE_CAP)?;
        let v = Potential::zeros(grid.len());
        let spec = spectrum(&grid, &v);
        let seq = EquidistributedSequence::centers(1.0, 0.1, grid.domain())?;
        let mask = observation_mask(&grid, &seq);
        let est = estimate_n_empirical(&[UcpInstance {
            spec: &spec,
            energy: 50.0,
            mask: &mask,
            g: 1.0,
            delta: 0.1,
            potential: &v,
        }])?;
        ratios.push(est.instances[0].ratio);
        n_hats.push(est.n_hat);
    }
    let spread = |x: &[f64]| {
        let (lo, hi) = x.iter().fold((f64::INFINITY, 0.0f64), |(a, b), &v| (a.min(v), b.max(v)));
        hi / lo
    };
    let (rs, ns) = (spread(&ratios), spread(&n_hats));
    Ok(Verdict::new(
        rs < 2.0 && ns - 1.0 <= 0.2,
        format!(
            "ratios [{}] (max/min {rs:.3}, tol 2); N_hat [{}] (max/min - 1 = {:.3}, tol 0.2)",
            list(&ratios),
            list(&n_hats),
            ns - 1.0
        ),
    ))
}

// 5. C_uc optimizer vs a 10^6-point scan of the exponent.
fn cuc_optimizer() -> Outcome {
    let mut r = rng(5);
    let mut worst = 0.0f64;
    for _ in 0..20 {
        let vmin = r.random_range(-5.0..3.0);
        let vmax = vmin + r.random_range(0.0..10.0);
        let grid = line_grid(16, 0.0, 1.0);
        let mut vals: Vec<f64> = (0..16).map(|_| r.random_range(vmin..vmax)).collect();
        vals[0] = vmin;
        vals[15] = vmax;
        let v = Potential::new(vals)?;
        debug_assert_eq!(grid.len(), v.len());
        let e = r.random_range(-5.0..60.0);
        let g: f64 = r.random_range(0.5..2.0);
        let exponent = |lam: f64| {
            let sup = (vmax - lam).abs().max((vmin - lam).abs());
            1.0 + g.powf(4.0 / 3.0) * sup.powf(2.0 / 3.0) + g * (e - lam).max(0.0).sqrt()
        };
        let (lo, hi) = (vmin - e.abs(), vmax.max(e));
        let steps = 1_000_000;
        let brute = (0..=steps)
            .map(|i| exponent(lo + (hi - lo) * i as f64 / steps as f64))
            .fold(f64::INFINITY, f64::min);
        let c = eval_cuc(&v, e, g, 0.1 * g, DEFAULT_N)?;
        let at_opt = exponent(c.lambda_star);
        worst = worst.max((at_opt - brute) / brute).max((c.exponent - at_opt).abs() / at_opt);
    }
    Ok(Verdict::new(
        worst <= 1e-6,
        format!("20 triples, max relative excess of g(lambda*) over brute force {worst:.2e} (tol 1e-6)"),
    ))
}

// 6. Lifting increments.
fn lifting() -> Outcome {
    let mut r = rng(6);
    let mut violations = 0usize;
    let mut checked = 0usize;
    let mut tightest = f64::INFINITY;
    for _ in 0..20 {
        let n = r.random_range(30..=80usize);
        let grid = line_grid(n, 0.0, r.random_range(2.0..6.0));
        let v = random_potential(&grid, 0.0, 10.0, &mut r);
        let w = random_potential(&grid, 0.0, 2.0, &mut r);
        let h = assemble_hamiltonian(&grid, &v)?;
        let w_sup = w.sup_norm();
        let ts: Vec<f64> = (0..=10).map(|i| -1.0 + 0.2 * i as f64).collect();
        let spectra: Vec<Vec<f64>> = ts
            .iter()
            .map(|&t| h.perturbed(&w, t).map(|p| p.eigenvalues()))
            .collect::<Result<_, _>>()?;
        for (pair, tp) in spectra.windows(2).zip(ts.windows(2)) {
            let eps = tp[1] - tp[0];
            for (a, b) in pair[0].iter().zip(&pair[1]) {
                let d = b - a;
                checked += 1;
                if !(d >= 0.0 && d <= eps * w_sup + 1e-10) {
                    violations += 1;
                }
                tightest = tightest.min(eps * w_sup + 1e-10 - d);
            }
        }
        // Gap edges through the tracking windows.
        let ev = h.eigenvalues();
        if let Some(gap) = find_gaps(&ev, 0.0).into_iter().max_by(|p, q| p.width().total_cmp(&q.width())) {
            let ts = symmetric_samples(gap.t0(w_sup), 0.9, 9);
            let curve = lift_curve(&h, &w, &gap, &ts)?;
            for pair in curve.samples.windows(2) {
                let eps = pair[1].t - pair[0].t;
                for d in [
                    pair[0].f_minus.zip(pair[1].f_minus).map(|(a, b)| b - a),
                    pair[0].f_plus.zip(pair[1].f_plus).map(|(a, b)| b - a),
                ]
                .into_iter()
                .flatten()
                {
                    checked += 1;
                    if !(d >= 0.0 && d <= eps * w_sup + 1e-10) {
                        violations += 1;
                    }
                }
            }
        }
    }

    // Lower bound at the default N on a periodic 1D gap.
    let grid = Grid::with_resolution(
        BoxDomain::cube(1, 0.0, 6.0)?,
        12.0,
        BoundaryCondition::Neumann,
        ucplab::DEFAULT_NODE_CAP,
    )?;
    let v = Potential::cos_bump(&grid, 20.0, 1.0)?;
    let h = assemble_hamiltonian(&grid, &v)?;
    let gap = find_gaps(&h.eigenvalues(), 0.5)[0];
    let mask = observation_mask(&grid, &EquidistributedSequence::centers(1.0, 0.2, grid.domain())?);
    let w = Potential::new(mask.weights().to_vec())?;
    let curve = lift_curve(&h, &w, &gap, &symmetric_samples(gap.t0(1.0), 0.9, 9))?;
    let theta = extract_theta(&w, &mask)?;
    let csup = cuc_sup(&v, &w, gap.b, 1.0, 0.2, DEFAULT_N)?;
    let report = check_lipschitz(&curve, theta, csup)?;
    let margin = report
        .increments
        .iter()
        .filter_map(|c| c.margin_lo)
        .fold(f64::INFINITY, f64::min);
    Ok(Verdict::new(
        violations == 0,
        format!(
            "{checked} increments, {violations} outside [0, eps*|W| + 1e-10], tightest upper slack {tightest:.2e}; \
             gap ({:.4}, {:.4}) lower bound at N = {DEFAULT_N}: {} violations, min margin {margin:.3e} \
             (theta {theta}, C_uc_sup {csup:.3e})",
            gap.a, gap.b, report.lower_violations
        ),
    ))
}

// 7. Wegner structure.
fn wegner() -> Outcome {
    let model = DisorderModel::Breather {
        measure: SingleSiteMeasure::uniform(0.05, 0.2)?,
    };
    let params = WegnerParameters {
        energy: 1.0,
        e0: 1.0,
        n_const: DEFAULT_N,
        c_const: 1.0,
        samples: 500,
        force: true,
    };
    let spec = |l| BoxSpec {
        dim: 1,
        l,
        resolution: 40,
        bc: BoundaryCondition::Dirichlet,
    };
    let epsilons = [0.01, 0.05, 0.1, 0.2];
    let z_at = |seed: u64| -> Result<(f64, f64, f64, bool), Box<dyn std::error::Error>> {
        let s10 = wegner_sweep(&model, &spec(10), &epsilons, &params, seed)?;
        let s20 = wegner_sweep(&model, &spec(20), &epsilons, &params, seed)?;
        let (a, b) = (&s10[3], &s20[3]);
        let z = (b.mean - 2.0 * a.mean).abs() / (b.stderr.powi(2) + 4.0 * a.stderr.powi(2)).sqrt();
        let monotone = [&s10, &s20]
            .iter()
            .all(|s| s.windows(2).all(|p| p[1].mean >= p[0].mean));
        Ok((z, a.mean, b.mean, monotone))
    };
    let (z, m10, m20, monotone) = z_at(SEED)?;
    let (z_other, ..) = z_at(7)?;

    let synthetic: Vec<(f64, f64)> = (0..8)
        .map(|i| {
            let eps = 10f64.powf(-1.0 - 0.5 * i as f64);
            (eps, 3.0 * eps.sqrt() * eps.ln().abs())
        })
        .collect();
    let fit = fit_wegner_exponent(&synthetic, 1)?;
    let fit_err = (fit.slope - 0.5).abs();
    Ok(Verdict::new(
        z <= 3.0 && monotone && fit_err <= 1e-6,
        format!(
            "E=1, eps=0.2, M=500: mean L=10 {m10:.4}, L=20 {m20:.4}, |m20 - 2 m10| = {z:.2} SE (tol 3); \
             monotone in eps: {monotone}; synthetic slope error {fit_err:.1e} (tol 1e-6) \
             [fragile: the same check at seed 7 gives {z_other:.2} SE; counts are near-deterministic]"
        ),
    ))
}

/// Composite Simpson over `[0, t]` of `exp(-sH) M exp(-sH)` with the
/// exponential taken directly from the operator matrix.
fn simpson_gramian(h: &DMatrix<f64>, mask: &[f64], t: f64, panels: usize) -> DMatrix<f64> {
    let n = h.nrows();
    let m = DMatrix::from_diagonal(&DVector::from_column_slice(mask));
    let step = t / panels as f64;
    let mut acc = DMatrix::<f64>::zeros(n, n);
    for i in 0..=panels {
        let e = (h * -(i as f64 * step)).exp();
        let weight = if i == 0 || i == panels {
            1.0
        } else if i % 2 == 1 {
            4.0
        } else {
            2.0
        };
        acc += (&e * &m * &e) * weight;
    }
    acc * (step / 3.0)
}

// 8. Gramian closed form vs quadrature, and the scalar observability formula.
fn gramian() -> Outcome {
    let mut r = rng(8);
    let mut worst = 0.0f64;
    for _ in 0..20 {
        let grid = line_grid(20, 0.0, 60.0);
        let v = random_potential(&grid, 0.0, 1.0, &mut r);
        let h = assemble_hamiltonian(&grid, &v)?;
        let spec = eigendecompose(&h, DEFAULT_EIGEN_TOL)?;
        let weights: Vec<f64> = (0..20).map(|_| if r.random_bool(0.4) { 1.0 } else { 0.0 }).collect();
        let mask = ObservationMask::from_weights(weights.clone())?;
        let t = r.random_range(0.5..2.0);
        let closed = build_gramian(&spec, &mask, t)?.grid_matrix(&spec);
        let quad = simpson_gramian(h.matrix(), &weights, t, 200);
        worst = worst.max((&closed - &quad).norm() / quad.norm());
    }
    let mut scalar = 0.0f64;
    for (lam, t) in [(0.0, 2.0), (0.0, 0.3), (1.0, 1.0), (0.5, 3.0), (7.5, 0.2), (40.0, 1.0), (1e-9, 1.0)] {
        let spec = SpectralData::from_symmetric(DMatrix::from_element(1, 1, lam), 1.0, DEFAULT_EIGEN_TOL)?;
        let m = measure_observability(&spec, &ObservationMask::full(1), t)?;
        let exact = if lam == 0.0 {
            1.0 / t
        } else {
            (-2.0 * lam * t).exp() * 2.0 * lam / -(-2.0 * lam * t).exp_m1()
        };
        scalar = scalar.max((m.c_meas.powi(2) - exact).abs() / exact);
    }
    Ok(Verdict::new(
        worst <= 1e-8 && scalar <= 1e-10,
        format!("20 instances, max relative Simpson gap {worst:.2e} (tol 1e-8); scalar C_meas² error {scalar:.2e} (tol 1e-10)"),
    ))
}

fn control_instance() -> (Grid, SpectralData, ObservationMask) {
    let grid = line_grid(63, 0.0, 1.0);
    let spec = spectrum(&grid, &Potential::zeros(63));
    let seq = EquidistributedSequence::centers(1.0, 0.1, grid.domain()).unwrap();
    let mask = observation_mask(&grid, &seq);
    (grid, spec, mask)
}

// 9. Null control on n = 63.
fn null_control() -> Outcome {
    let (grid, spec, mask) = control_instance();
    let mut r = rng(9);
    let phi = DVector::from_fn(grid.len(), |_, _| r.random_range(-1.0..1.0));
    let c = hum_null_control(&spec, &mask, 1.0, &phi, &ControlOptions::default())?;
    let m = measure_observability(&spec, &mask, 1.0)?;
    let terminal = c.terminal_norm / c.initial_norm;
    let cost = c.cost / (m.c_meas * c.initial_norm);
    let cm: Vec<f64> = [0.5, 1.0, 2.0]
        .iter()
        .map(|&t| measure_observability(&spec, &mask, t).map(|x| x.c_meas))
        .collect::<Result<_, _>>()?;
    let nonincreasing = cm.windows(2).all(|p| p[1] <= p[0]);
    Ok(Verdict::new(
        terminal <= 1e-6 && cost <= 1.01 && nonincreasing,
        format!(
            "covered {:.4}, terminal/|phi0| {terminal:.2e} (tol 1e-6), cost/(C_meas |phi0|) {cost:.3e} (tol 1.01), \
             C_meas(T=0.5,1,2) = [{}] nonincreasing: {nonincreasing}",
            mask.covered_fraction(),
            list(&cm)
        ),
    ))
}

// 10. Measured constant against the theoretical one.
fn consistency() -> Outcome {
    let configs = [
        ObsConstants { c1: 1.0, c2: 1.0, c3: 1.0 },
        ObsConstants { c1: 1.0, c2: 2.0, c3: 1.0 },
        ObsConstants { c1: 2.0, c2: 1.0, c3: 2.0 },
    ];
    let mut instances = 0;
    let mut covered = 0;
    let mut per_config = [0usize; 3];
    for (vname, amplitude) in [("V=0", 0.0), ("cos bump 5", 5.0), ("cos bump 20", 20.0)] {
        let grid = line_grid(63, 0.0, 2.0);
        let v = Potential::cos_bump(&grid, amplitude, 1.0)?;
        let spec = spectrum(&grid, &v);
        let kappa = spec.ground_energy();
        for delta in [0.1, 0.2] {
            let mask = observation_mask(&grid, &EquidistributedSequence::centers(1.0, delta, grid.domain())?);
            for t in [0.5, 1.0, 2.0] {
                let m = measure_observability(&spec, &mask, t)?;
                instances += 1;
                let mut any = false;
                for (k, c) in configs.iter().enumerate() {
                    let p = ObservabilityParameters::from_potential(&v, kappa, t, 1.0, delta, *c);
                    if m.c_meas <= eval_cobs(&p, Branch::Auto)?.c_obs {
                        per_config[k] += 1;
                        any = true;
                    }
                }
                if any {
                    covered += 1;
                } else {
                    eprintln!("  consistency: {vname}, delta {delta}, T {t}: C_meas {:e} above all configurations", m.c_meas);
                }
            }
        }
    }
    Ok(Verdict::new(
        covered == instances,
        format!("{covered}/{instances} instances bounded by some configuration; per configuration {per_config:?}"),
    ))
}

const SCENARIOS: &[(&str, &str)] = &[
    ("ucp", r#"{"ucp": {"lengths": [3, 5], "delta": 0.2, "energies": [5, 40], "resolution": 12}}"#),
    ("estimate-N", r#"{"ucp": {"lengths": [3, 5], "delta": 0.1, "energies": [50], "resolution": 12}}"#),
    (
        "lifting",
        r#"{"lifting": {"cells": 6, "resolution": 12, "background": {"amplitude": 20}, "delta": 0.2,
            "gap_min_width": 0.5, "samples": 7}}"#,
    ),
    (
        "wegner",
        r#"{"wegner": {"model": {"model": "breather", "measure": {"omega_minus": 0.05, "omega_plus": 0.2}},
            "lengths": [5, 10], "resolution": 20, "energy": 1.0, "epsilons": [0.05, 0.2], "samples": 64, "N": 1e-3}}"#,
    ),
    (
        "observability",
        r#"{"observability": {"grid": {"points": 31}, "potential": {"kind": "random-uniform", "min": 0, "max": 3},
            "deltas": [0.1], "horizons": [0.5, 1]}}"#,
    ),
    ("control", r#"{"control": {"grid": {"points": 31}, "delta": 0.1, "horizon": 1, "steps": 16}}"#),
];

// 11. Byte-identical CSV across reruns and thread counts.
fn determinism() -> Outcome {
    let dir = tempfile::tempdir()?;
    let mut mismatches = Vec::new();
    for (kind, text) in SCENARIOS {
        let overrides = Overrides {
            kind: Some(kind.parse()?),
            seed: Some(SEED),
            ..Overrides::default()
        };
        let (config, raw) = parse_config(text, &overrides)?;
        let mut outputs = Vec::new();
        for (run, threads) in [1usize, 1, 8, 8].into_iter().enumerate() {
            let pool = rayon::ThreadPoolBuilder::new().num_threads(threads).build()?;
            let out = dir.path().join(format!("{kind}-{run}"));
            pool.install(|| run_scenario(&config, &raw, &out))?;
            outputs.push(std::fs::read(out.join("results.csv"))?);
        }
        if outputs.windows(2).any(|p| p[0] != p[1]) {
            mismatches.push(*kind);
        }
    }
    Ok(Verdict::new(
        mismatches.is_empty(),
        format!(
            "{} kinds x 2 reruns x {{1, 8}} threads; differing: {mismatches:?}",
            SCENARIOS.len()
        ),
    ))
}

struct Criterion {
    id: u32,
    name: &'static str,
    budget: Duration,
    run: fn() -> Outcome,
}

fn main() -> ExitCode {
    let criteria = [
        Criterion { id: 1, name: "discretization oracle", budget: Duration::from_secs(1), run: discretization },
        Criterion { id: 2, name: "semigroup suite", budget: Duration::from_secs(10), run: semigroup },
        Criterion { id: 3, name: "ucp exactness", budget: Duration::from_secs(30), run: ucp_exactness },
        Criterion { id: 4, name: "scale-free probe", budget: Duration::from_secs(120), run: scale_free },
        Criterion { id: 5, name: "C_uc optimizer", budget: Duration::from_secs(30), run: cuc_optimizer },
        Criterion { id: 6, name: "lifting bounds", budget: Duration::from_secs(120), run: lifting },
        Criterion { id: 7, name: "wegner structure", budget: Duration::from_secs(600), run: wegner },
        Criterion { id: 8, name: "gramian oracle", budget: Duration::from_secs(10), run: gramian },
        Criterion { id: 9, name: "null control", budget: Duration::from_secs(60), run: null_control },
        Criterion { id: 10, name: "consistency chain", budget: Duration::from_secs(60), run: consistency },
        Criterion { id: 11, name: "determinism", budget: Duration::from_secs(60), run: determinism },
    ];
    let mut unexpected = Vec::new();
    for c in &criteria {
        let start = Instant::now();
        let outcome = (c.run)();
        let elapsed = start.elapsed();
        let (pass, detail) = match outcome {
            Ok(v) => (v.pass && elapsed <= c.budget, v.detail),
            Err(e) => (false, format!("error: {e}")),
        };
        let known = KNOWN_FAILURES.contains(&c.id);
        let tag = match (pass, known) {
            (true, _) => "PASS",
            (false, true) => "FAIL (known)",
            (false, false) => "FAIL",
        };
        println!(
            "[{tag}] {:>2} {}: {detail} ({:.2} s, budget {} s)",
            c.id,
            c.name,
            elapsed.as_secs_f64(),
            c.budget.as_secs()
        );
        if pass == known {
            unexpected.push(c.id);
        }
    }
    if unexpected.is_empty() {
        ExitCode::SUCCESS
    } else {
        println!("unexpected outcome for criteria {unexpected:?}");
        ExitCode::FAILURE
    }
}
