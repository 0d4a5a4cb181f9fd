use std::fs;
use std::path::{Path, PathBuf};

use hjs::embedding::{admissibility_coefficient, embed, extract, EmbeddingCandidate};
use hjs::observables::{born_density, interference_modulation, moments, moments_ensemble};
use hjs::oscillator_benchmark::{
    closed_form_moments, compare, initial_state, BenchmarkTolerances, ErrorMode, QuantityError, Tolerance,
};
use hjs::trajectory::RunMeta;
use hjs::{
    solver_linear, solver_madelung, BenchmarkParams, Complex, EnsembleState, Grid, Kappa, LinearRunConfig,
    MadelungRunConfig, MomentSet, PhaseAnchor, Potential, Trajectory, WaveField,
};
use rayon::prelude::*;
use serde::Serialize;
use serde_json::{json, Value};

use crate::config::{ScenarioConfig, Solver};
use crate::output::{cell, fields_path, num, write_series, write_table, SeriesRow, FIELDS_HEADER};
use crate::{write_report, LabError, Scenario};

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Check {
    pub name: String,
    pub value: f64,
    pub bound: f64,
    /// `below` or `above`.
    pub relation: &'static str,
    pub pass: bool,
}

impl Check {
    pub fn below(name: impl Into<String>, value: f64, bound: f64) -> Self {
        Check { name: name.into(), value, bound, relation: "below", pass: value < bound }
    }

    pub fn above(name: impl Into<String>, value: f64, bound: f64) -> Self {
        Check { name: name.into(), value, bound, relation: "above", pass: value > bound }
    }
}

/// What a scenario produced besides its files.
#[derive(Debug, Clone, Default, Serialize)]
pub struct Outcome {
    pub checks: Vec<Check>,
    pub runs: Vec<RunMeta>,
    pub details: Value,
}

impl Outcome {
    pub fn pass(&self) -> bool {
        self.checks.iter().all(|c| c.pass)
    }
}

pub fn run(cfg: &ScenarioConfig, dir: &Path) -> Result<Outcome, LabError> {
    match cfg.scenario {
        Scenario::FreePacket => free_packet(cfg, dir),
        Scenario::HarmonicBenchmark => harmonic_benchmark(cfg, dir).map(|(o, _)| o),
        Scenario::Quartic => quartic(cfg, dir),
        Scenario::KappaSweep => kappa_sweep(cfg, dir),
        Scenario::ThetaInterference => theta_interference(cfg, dir),
        Scenario::EquivalenceCheck => equivalence_check(cfg, dir),
        Scenario::AdmissibilitySuite => admissibility_suite(cfg, dir),
    }
}

fn grid(cfg: &ScenarioConfig) -> Result<Grid, LabError> {
    Ok(Grid::new(cfg.half_width, cfg.n_points)?)
}

fn kappa(cfg: &ScenarioConfig) -> Result<Kappa, LabError> {
    Ok(Kappa::new(cfg.kappa_re, cfg.kappa_im)?)
}

fn benchmark_params(cfg: &ScenarioConfig) -> Result<BenchmarkParams, LabError> {
    Ok(BenchmarkParams { epsilon: cfg.epsilon, sigma: cfg.sigma, p0: cfg.p0, kappa: kappa(cfg)? })
}

/// Step and stride. With `samples`, the step is shrunk so that samples are
/// evenly spaced over `[0, t_final]`, as the benchmark does.
pub fn sampling(cfg: &ScenarioConfig) -> (f64, usize) {
    match cfg.sample_every {
        Some(k) => (cfg.dt, k),
        None => {
            let per_sample = cfg.t_final / (cfg.samples - 1) as f64;
            let k = ((per_sample / cfg.dt).round() as usize).max(1);
            (per_sample / k as f64, k)
        }
    }
}

enum Run {
    Linear(Trajectory<WaveField>),
    Madelung(Trajectory<EnsembleState>),
}

fn evolve(cfg: &ScenarioConfig, state0: &EnsembleState, solver: Solver, potential: Potential) -> Result<Run, LabError> {
    let kappa = kappa(cfg)?;
    let (dt, sample_every) = sampling(cfg);
    Ok(match solver {
        Solver::Linear => {
            let config = LinearRunConfig { dt, t_final: cfg.t_final, sample_every, kappa, mass: cfg.mass, potential };
            Run::Linear(solver_linear::evolve(&embed(state0, kappa)?, &config)?)
        }
        Solver::Madelung => {
            let config = MadelungRunConfig {
                dt,
                t_final: cfg.t_final,
                sample_every,
                kappa,
                mass: cfg.mass,
                potential,
                quantum_term: cfg.quantum_term,
                node_floor: cfg.node_floor,
            };
            Run::Madelung(solver_madelung::evolve(state0, &config)?)
        }
    })
}

impl Run {
    fn meta(&self) -> Option<RunMeta> {
        match self {
            Run::Linear(t) => t.meta.clone(),
            Run::Madelung(t) => t.meta.clone(),
        }
    }

    fn times(&self) -> &[f64] {
        match self {
            Run::Linear(t) => t.times(),
            Run::Madelung(t) => t.times(),
        }
    }

    fn series(&self, kappa: Kappa) -> Result<Vec<SeriesRow>, LabError> {
        let rows = match self {
            Run::Linear(traj) => traj
                .iter()
                .map(|(t, psi)| {
                    let m = if kappa.is_real() { Some(moments(psi, kappa)?) } else { None };
                    Ok(SeriesRow { t, moments: m, norm: psi.norm_sqr(), oracle: None })
                })
                .collect::<hjs::Result<Vec<_>>>()?,
            Run::Madelung(traj) => traj
                .iter()
                .map(|(t, st)| {
                    Ok(SeriesRow {
                        t,
                        moments: Some(moments_ensemble(st, kappa)?),
                        norm: st.grid().integrate(&st.density())?,
                        oracle: None,
                    })
                })
                .collect::<hjs::Result<Vec<_>>>()?,
        };
        Ok(rows)
    }

    /// `count` evenly spaced samples, first and last included.
    fn write_snapshots(&self, kappa: Kappa, count: usize, dir: &Path) -> Result<Vec<PathBuf>, LabError> {
        let len = self.times().len();
        let mut picks: Vec<usize> = match count {
            0 => vec![],
            1 => vec![0],
            c => (0..c).map(|k| (k * (len - 1) + (c - 1) / 2) / (c - 1)).collect(),
        };
        picks.dedup();
        let mut written = Vec::new();
        for j in picks {
            let t = self.times()[j];
            let rows = match self {
                Run::Linear(traj) => field_rows_linear(&traj.states()[j], kappa)?,
                Run::Madelung(traj) => field_rows_ensemble(&traj.states()[j], kappa)?,
            };
            let path = fields_path(dir, t);
            write_table(&path, FIELDS_HEADER, rows)?;
            written.push(path);
        }
        Ok(written)
    }
}

fn argmax(psi: &[Complex]) -> usize {
    (0..psi.len()).fold(0, |best, j| if psi[j].norm() > psi[best].norm() { j } else { best })
}

/// `R` and `S` come from extraction with `S = 0` at the peak; cells stay
/// empty where extraction is impossible (nodes).
fn field_rows_linear(psi: &WaveField, kappa: Kappa) -> Result<Vec<String>, LabError> {
    let theta = kappa.theta()?;
    let peak = argmax(psi.psi());
    let ens = extract(psi, kappa, Some(peak), 0.0).ok();
    let born = born_density(psi, theta, PhaseAnchor::from_action(peak, 0.0, kappa)).ok();
    Ok(psi
        .grid()
        .points()
        .iter()
        .enumerate()
        .map(|(j, &q)| {
            let z = psi.psi()[j];
            [
                Some(q),
                ens.as_ref().map(|e| e.r()[j]),
                ens.as_ref().map(|e| e.s()[j]),
                Some(z.re),
                Some(z.im),
                born.as_ref().map(|b| b[j]),
            ]
            .into_iter()
            .map(cell)
            .collect::<Vec<_>>()
            .join(",")
        })
        .collect())
}

fn field_rows_ensemble(st: &EnsembleState, kappa: Kappa) -> Result<Vec<String>, LabError> {
    let psi = embed(st, kappa)?;
    Ok(st
        .grid()
        .points()
        .iter()
        .enumerate()
        .map(|(j, &q)| {
            let (r, z) = (st.r()[j], psi.psi()[j]);
            [q, r, st.s()[j], z.re, z.im, r * r].map(num).join(",")
        })
        .collect())
}

fn tolerances(cfg: &ScenarioConfig, track_split: bool) -> BenchmarkTolerances {
    let t = &cfg.tolerances;
    let abs = Tolerance { mode: ErrorMode::Absolute, value: t.mean_abs, tracked: true };
    let rel = Tolerance { mode: ErrorMode::Relative, value: t.var_rel, tracked: true };
    let split = Tolerance { tracked: track_split, ..rel };
    BenchmarkTolerances {
        mean_q: abs,
        mean_p: abs,
        var_q: rel,
        var_p_op: rel,
        var_p_hj: split,
        amp_grad: split,
        uncertainty_product: rel,
    }
}

fn oracle_checks(errors: &[QuantityError]) -> Vec<Check> {
    errors
        .iter()
        .filter(|e| e.tolerance.tracked)
        .map(|e| match e.tolerance.mode {
            ErrorMode::Absolute => Check::below(format!("{} max abs error", e.name), e.max_abs, e.tolerance.value),
            ErrorMode::Relative => Check::below(format!("{} max rel error", e.name), e.max_rel, e.tolerance.value),
        })
        .collect()
}

fn norm_check(cfg: &ScenarioConfig, rows: &[SeriesRow]) -> Check {
    let n0 = rows[0].norm;
    let drift = rows.iter().fold(0.0f64, |m, r| m.max((r.norm - n0).abs()));
    Check::below("norm drift", drift, cfg.tolerances.norm)
}

/// Attaches the oracle to each row and compares the tracked quantities.
fn against_oracle(
    rows: &mut [SeriesRow],
    oracle: impl Fn(f64) -> MomentSet,
    tol: &BenchmarkTolerances,
) -> Vec<QuantityError> {
    for row in rows.iter_mut() {
        row.oracle = Some(oracle(row.t));
    }
    let simulated: Vec<MomentSet> = rows.iter().filter_map(|r| r.moments).collect();
    let expected: Vec<MomentSet> = rows.iter().filter_map(|r| r.oracle).collect();
    compare(&expected, &simulated, tol)
}

/// Closed-form moments of a free Gaussian whose density has standard deviation `w` at t = 0.
pub fn free_packet_moments(t: f64, w: f64, q0: f64, p0: f64, kappa: f64, mass: f64) -> MomentSet {
    let tau = kappa * t / (2.0 * mass * w * w);
    let var_q = w * w * (1.0 + tau * tau);
    let var_p = kappa * kappa / (4.0 * w * w);
    let amp = var_p / (1.0 + tau * tau);
    MomentSet {
        mean_q: q0 + p0 * t / mass,
        mean_p: p0,
        var_q,
        var_p_op: var_p,
        var_p_hj: var_p - amp,
        amp_grad: amp,
        uncertainty_product: (var_q * var_p).sqrt(),
    }
}

fn gaussian_state(g: &Grid, center: f64, w: f64, p0: f64) -> Result<EnsembleState, LabError> {
    let pref = (std::f64::consts::TAU * w * w).powf(-0.25);
    let q = g.points();
    let r = q.iter().map(|&x| pref * (-(x - center) * (x - center) / (4.0 * w * w)).exp()).collect();
    let s = q.iter().map(|&x| p0 * x).collect();
    Ok(EnsembleState::new(r, s, g)?)
}

fn free_packet(cfg: &ScenarioConfig, dir: &Path) -> Result<Outcome, LabError> {
    let g = grid(cfg)?;
    let kappa = kappa(cfg)?;
    let state0 = gaussian_state(&g, cfg.q0, cfg.width, cfg.p0)?;
    let run = evolve(cfg, &state0, cfg.solver, Potential::Free)?;
    let mut rows = run.series(kappa)?;
    let mut out = Outcome { runs: run.meta().into_iter().collect(), ..Outcome::default() };
    if kappa.is_real() {
        let oracle = |t| free_packet_moments(t, cfg.width, cfg.q0, cfg.p0, kappa.re, cfg.mass);
        let errors = against_oracle(&mut rows, oracle, &tolerances(cfg, true));
        out.checks = oracle_checks(&errors);
        out.checks.push(norm_check(cfg, &rows));
        out.details = json!({ "errors": errors });
    } else {
        // no closed form, and the plain norm is not conserved
        let n0 = rows[0].norm;
        out.details = json!({ "final_norm_change": rows.last().map(|r| r.norm - n0) });
    }
    write_series(dir, &rows)?;
    let snaps = run.write_snapshots(kappa, cfg.snapshots, dir)?;
    merge(&mut out.details, json!({ "snapshots": snaps }));
    Ok(out)
}

fn harmonic_benchmark(cfg: &ScenarioConfig, dir: &Path) -> Result<(Outcome, Vec<SeriesRow>), LabError> {
    let g = grid(cfg)?;
    let params = benchmark_params(cfg)?;
    let state0 = initial_state(&params, &g)?;
    let run = evolve(cfg, &state0, cfg.solver, Potential::harmonic(cfg.mass, cfg.omega)?)?;
    let mut rows = run.series(params.kappa)?;
    // the closed-form split of the momentum variance is reported, not gated
    let errors = against_oracle(&mut rows, |t| closed_form_moments(t, &params), &tolerances(cfg, false));
    let mut checks = oracle_checks(&errors);
    checks.push(norm_check(cfg, &rows));
    write_series(dir, &rows)?;
    let snaps = run.write_snapshots(params.kappa, cfg.snapshots, dir)?;
    let (var_q0, var_p0) = params.initial_variances();
    let details = json!({
        "errors": errors,
        "initial_variances": { "var_q": var_q0, "var_p": var_p0 },
        "snapshots": snaps,
    });
    Ok((Outcome { checks, runs: run.meta().into_iter().collect(), details }, rows))
}

fn quartic(cfg: &ScenarioConfig, dir: &Path) -> Result<Outcome, LabError> {
    let g = grid(cfg)?;
    let params = benchmark_params(cfg)?;
    let state0 = initial_state(&params, &g)?;
    let run = evolve(cfg, &state0, cfg.solver, Potential::quartic(cfg.mass, cfg.omega, cfg.lambda)?)?;
    let rows = run.series(params.kappa)?;
    write_series(dir, &rows)?;
    let snaps = run.write_snapshots(params.kappa, cfg.snapshots, dir)?;
    let checks = if params.kappa.is_real() { vec![norm_check(cfg, &rows)] } else { vec![] };
    Ok(Outcome { checks, runs: run.meta().into_iter().collect(), details: json!({ "snapshots": snaps }) })
}

fn kappa_sweep(cfg: &ScenarioConfig, dir: &Path) -> Result<Outcome, LabError> {
    type SweepResult = Result<(Outcome, Vec<SeriesRow>), LabError>;
    let results: Vec<(f64, SweepResult)> = cfg
        .kappa_values
        .par_iter()
        .map(|&k| {
            let sub = ScenarioConfig {
                scenario: Scenario::HarmonicBenchmark,
                outdir: dir.join(format!("kappa_{k}")),
                kappa_re: k,
                ..cfg.clone()
            };
            let result = fs::create_dir_all(&sub.outdir)
                .map_err(|source| LabError::Io { path: sub.outdir.clone(), source })
                .and_then(|_| harmonic_benchmark(&sub, &sub.outdir));
            let report = result.as_ref().map(|(o, _)| o).map_err(LabError::info);
            let written = write_report(&sub, &report);
            (k, written.and(result))
        })
        .collect();

    let mut out = Outcome::default();
    let mut curves: Vec<(f64, Vec<SeriesRow>)> = Vec::new();
    for (k, result) in results {
        let (sub, rows) = result?;
        let failing = sub.checks.iter().filter(|c| !c.pass).count();
        out.checks.push(Check::below(format!("kappa={k} failing checks"), failing as f64, 1.0));
        out.runs.extend(sub.runs);
        curves.push((k, rows));
    }
    let (_, first) = &curves[0];
    let mut spread = 0.0f64;
    for (_, rows) in &curves[1..] {
        for (a, b) in first.iter().zip(rows) {
            if let (Some(a), Some(b)) = (a.moments, b.moments) {
                spread = spread.max((a.mean_q - b.mean_q).abs());
            }
        }
    }
    out.checks.push(Check::below("max |<q>(kappa) - <q>(kappa_0)|", spread, cfg.tolerances.sweep_mean));
    let subdirs: Vec<String> = curves.iter().map(|(k, _)| format!("kappa_{k}")).collect();
    out.details = json!({ "subdirectories": subdirs });
    Ok(out)
}

fn packet_field(g: &Grid, center: f64, w: f64, p: f64, kappa: f64, amplitude: f64) -> Result<WaveField, LabError> {
    let pref = amplitude * (std::f64::consts::TAU * w * w).powf(-0.25);
    Ok(WaveField::from_fn(g, |q| {
        Complex::from_polar(pref * (-(q - center) * (q - center) / (4.0 * w * w)).exp(), p * q / kappa)
    })?)
}

fn theta_interference(cfg: &ScenarioConfig, dir: &Path) -> Result<Outcome, LabError> {
    let g = grid(cfg)?;
    let half = cfg.separation / 2.0;
    // unequal weights keep the superposition free of nodes
    let a = packet_field(&g, -half, cfg.width, cfg.p0 / 2.0, cfg.kappa_re, 1.0)?;
    let b = packet_field(&g, half, cfg.width, -cfg.p0 / 2.0, cfg.kappa_re, 0.7)?;
    let rep = interference_modulation(&a, &b, &cfg.theta_values)?;
    let (lo, hi) = rep.window;

    let mut header = vec!["q".to_string(), "in_window".into(), "phase".into()];
    for p in &rep.profiles {
        header.push(format!("m_{}", p.theta));
    }
    for p in rep.profiles.iter().filter(|p| p.f.is_some()) {
        header.push(format!("f_{}", p.theta));
    }
    let rows = g.points().iter().enumerate().map(|(j, &q)| {
        let inside = (lo..=hi).contains(&j);
        let mut cells = vec![num(q), (inside as u8).to_string(), num(rep.phase[j])];
        cells.extend(rep.profiles.iter().map(|p| num(p.m[j])));
        cells.extend(rep.profiles.iter().filter_map(|p| p.f.as_ref()).map(|f| cell(inside.then(|| f[j]))));
        cells.join(",")
    });
    write_table(&dir.join("interference.csv"), &header.join(","), rows)?;

    let central = rep.linearity_spread_central(0.8);
    let details = json!({
        "window": [g.points()[lo], g.points()[hi]],
        "linearity_spread_full_window": rep.linearity_spread,
    });
    Ok(Outcome {
        checks: vec![Check::below("F spread, central 80% of window", central, cfg.tolerances.linearity)],
        runs: vec![],
        details,
    })
}

fn equivalence_check(cfg: &ScenarioConfig, dir: &Path) -> Result<Outcome, LabError> {
    let g = grid(cfg)?;
    let params = benchmark_params(cfg)?;
    let state0 = initial_state(&params, &g)?;
    let potential = Potential::harmonic(cfg.mass, cfg.omega)?;
    let (Run::Linear(lin), Run::Madelung(mad)) =
        (evolve(cfg, &state0, Solver::Linear, potential.clone())?, evolve(cfg, &state0, Solver::Madelung, potential)?)
    else {
        unreachable!("evolve returns the requested solver")
    };
    let rows = Run::Madelung(mad.clone()).series(params.kappa)?;
    write_series(dir, &rows)?;
    let gaps: Vec<f64> = mad
        .states()
        .iter()
        .zip(lin.states())
        .map(|(m, l)| m.density().iter().zip(l.psi()).fold(0.0f64, |w, (r, z)| w.max((r - z.norm_sqr()).abs())))
        .collect();
    let table = lin
        .iter()
        .zip(&gaps)
        .zip(&rows)
        .map(|(((t, psi), gap), row)| [t, *gap, psi.norm_sqr(), row.norm].map(num).join(","));
    write_table(&dir.join("equivalence.csv"), "t,linf_rho,norm_linear,mass_madelung", table)?;
    let worst = gaps.iter().copied().fold(0.0, f64::max);
    Ok(Outcome {
        checks: vec![Check::below("L-inf density gap", worst, cfg.tolerances.equivalence)],
        runs: [lin.meta.clone(), mad.meta.clone()].into_iter().flatten().collect(),
        details: json!({ "max_clip": mad.meta.as_ref().and_then(|m| m.max_clip) }),
    })
}

fn admissibility_suite(cfg: &ScenarioConfig, dir: &Path) -> Result<Outcome, LabError> {
    let n = 101;
    let ratio = cfg.r_max / cfg.r_min;
    let samples: Vec<f64> = (0..n).map(|j| cfg.r_min * ratio.powf(j as f64 / (n - 1) as f64)).collect();
    let tol = &cfg.tolerances;
    let mut checks = Vec::new();
    let mut rows = Vec::new();
    let candidates = std::iter::once((EmbeddingCandidate::canonical(), true))
        .chain(EmbeddingCandidate::perturbed_suite().into_iter().map(|c| (c, false)));
    let mut perturbed = 0;
    for (cand, canonical) in candidates {
        let worst = admissibility_coefficient(&cand, &samples)?.iter().fold(0.0f64, |m, c| m.max(c.norm()));
        let at_one = admissibility_coefficient(&cand, &[1.0])?[0].norm();
        let check = if canonical {
            Check::below(format!("{} max |coefficient|", cand.name), worst, tol.admissible)
        } else {
            perturbed += 1;
            Check::above(format!("{} |coefficient| at R=1", cand.name), at_one, tol.inadmissible)
        };
        let kind = if canonical { "canonical" } else { "perturbed" };
        rows.push(format!("\"{}\",{kind},{},{},{}", cand.name, num(worst), num(at_one), check.pass));
        checks.push(check);
    }
    checks.push(Check::above("perturbed candidates", perturbed as f64, 4.0));
    write_table(&dir.join("admissibility.csv"), "candidate,kind,max_abs_coefficient,abs_coefficient_at_1,pass", rows)?;
    Ok(Outcome { checks, runs: vec![], details: json!({ "r_range": [cfg.r_min, cfg.r_max], "samples": n }) })
}

fn merge(into: &mut Value, extra: Value) {
    match (into, extra) {
        (Value::Object(a), Value::Object(b)) => a.extend(b),
        (slot, extra) => *slot = extra,
    }
}
