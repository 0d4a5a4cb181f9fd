//! Acceptance checks, one line per criterion.
//!
//! Runs without the libtest harness so that every criterion is always
//! evaluated and printed; the process exits nonzero if any gated check fails.

#[path = "../../hjs/tests/common/mod.rs"]
mod common;

use std::f64::consts::PI;
use std::process::ExitCode;
use std::time::Instant;

use hjs::embedding::{admissibility_coefficient, embed, EmbeddingCandidate};
use hjs::observables::{
    born_density, commutator_defect, interference_modulation, moments, moments_ensemble, norm_drift,
    pseudo_unitarity_defect,
};
use hjs::oscillator_benchmark::{initial_state, run_benchmark, SolverKind};
use hjs::solver_linear::{self, time_reversal_defect};
use hjs::solver_madelung::{self, quantum_potential};
use hjs::{
    BenchmarkParams, BenchmarkRun, Complex, EnsembleState, Error, Grid, Kappa, LinearRunConfig, MadelungRunConfig,
    PhaseAnchor, Potential, WaveField,
};

// criterion 1
const BENCH_MEAN_ABS: f64 = 1e-5;
const BENCH_VAR_REL: f64 = 1e-3;
const BENCH_SECONDS: f64 = 15.0;
const INITIAL_VAR_Q: f64 = 0.2254545;
const INITIAL_VAR_P: f64 = 1.9886364;
const QUOTED_DIGITS: f64 = 5e-8;
// criterion 2
const EQUIV_RHO: f64 = 1e-3;
const EQUIV_GAIN: f64 = 3.0;
// criterion 3
const CLASSICAL_RHO: f64 = 1e-4;
const Q_SCALING_REL: f64 = 1e-13;
// criterion 4
const BORN_ABS: f64 = 1e-10;
const BORN_STATES: usize = 20;
// criterion 5
const UNITARY_DEFECT: f64 = 1e-8;
const THETA_BALANCE: f64 = 1e-6;
const NAIVE_DRIFT_MIN: f64 = 1e-3;
// criterion 6
const COMMUTATOR: f64 = 1e-8;
const UNCERTAINTY_SLACK: f64 = 1e-9;
const SATURATION: f64 = 1e-6;
// criterion 7
const IDENTITY_REL: f64 = 1e-8;
const SPLIT_REL: f64 = 1e-3;
/// Samples count as "away from zeros" where the oracle exceeds this share of its peak.
const SPLIT_SUPPORT: f64 = 0.1;
// criterion 8
const ADMISSIBLE: f64 = 1e-10;
const INADMISSIBLE: f64 = 0.1;
const MIN_CANDIDATES: usize = 5;
// criterion 9
const F_SPREAD: f64 = 0.01;
const CENTRAL: f64 = 0.8;
const RATIO_SLOPE: f64 = 20.0;
// criterion 10
const REVERSAL_REAL: f64 = 1e-8;
const REVERSAL_COMPLEX_MIN: f64 = 1e-4;

struct Check {
    label: String,
    value: Result<f64, String>,
    relation: Relation,
}

#[derive(Clone, Copy)]
enum Relation {
    Below(f64),
    Above(f64),
    Info,
}

impl Check {
    fn below(label: impl Into<String>, value: f64, bound: f64) -> Self {
        Check { label: label.into(), value: Ok(value), relation: Relation::Below(bound) }
    }

    fn above(label: impl Into<String>, value: f64, bound: f64) -> Self {
        Check { label: label.into(), value: Ok(value), relation: Relation::Above(bound) }
    }

    fn info(label: impl Into<String>, value: f64) -> Self {
        Check { label: label.into(), value: Ok(value), relation: Relation::Info }
    }

    fn failed(label: impl Into<String>, why: impl ToString, relation: Relation) -> Self {
        Check { label: label.into(), value: Err(why.to_string()), relation }
    }

    fn pass(&self) -> bool {
        match (&self.value, self.relation) {
            (_, Relation::Info) => true,
            (Err(_), _) => false,
            (Ok(v), Relation::Below(b)) => *v < b,
            (Ok(v), Relation::Above(b)) => *v > b,
        }
    }

    fn render(&self) -> String {
        let rel = match self.relation {
            Relation::Below(b) => format!("< {}", bound(b)),
            Relation::Above(b) => format!("> {}", bound(b)),
            Relation::Info => "info".into(),
        };
        let tag = match self.relation {
            Relation::Info => "    ",
            _ if self.pass() => "ok  ",
            _ => "FAIL",
        };
        match &self.value {
            Ok(v) => format!("    {tag} {:<58} {v:>11.3e}  ({rel})", self.label),
            Err(e) => format!("    {tag} {:<58} error: {e}  ({rel})", self.label),
        }
    }
}

fn bound(b: f64) -> String {
    if b.fract() == 0.0 && b.abs() < 1e6 {
        format!("{b}")
    } else {
        format!("{b:e}")
    }
}

fn harmonic() -> Potential {
    Potential::harmonic(1.0, 1.0).unwrap()
}

fn linf_rho(a: &EnsembleState, b: &WaveField) -> f64 {
    a.density().iter().zip(b.psi()).fold(0.0, |m, (r, z)| m.max((r - z.norm_sqr()).abs()))
}

fn criterion_1() -> Vec<Check> {
    let start = Instant::now();
    let report = run_benchmark(&BenchmarkParams::default(), SolverKind::Linear, &BenchmarkRun::default());
    let secs = start.elapsed().as_secs_f64();
    let mut checks = Vec::new();
    match report {
        Err(e) => checks.push(Check::failed("benchmark run", e, Relation::Below(0.0))),
        Ok(r) => {
            for e in &r.errors {
                match e.name {
                    "mean_q" | "mean_p" => {
                        checks.push(Check::below(format!("{} max abs error", e.name), e.max_abs, BENCH_MEAN_ABS))
                    }
                    "var_q" | "var_p_op" => {
                        checks.push(Check::below(format!("{} max relative error", e.name), e.max_rel, BENCH_VAR_REL))
                    }
                    _ => {}
                }
            }
        }
    }
    checks.push(Check::below("runtime [s]", secs, BENCH_SECONDS));
    let (a, b) = BenchmarkParams::default().initial_variances();
    let (qa, qb) = common::quadrature_initial_variances(0.4, 0.4, 1.0);
    checks.push(Check::below("closed-form (dq)0^2 vs quadrature", (a - qa).abs(), 1e-10));
    checks.push(Check::below("closed-form (dp)0^2 vs quadrature", (b - qb).abs(), 1e-10));
    checks.push(Check::below("(dq)0^2 vs 0.2254545", (a - INITIAL_VAR_Q).abs(), QUOTED_DIGITS));
    checks.push(Check::below("(dp)0^2 vs 1.9886364", (b - INITIAL_VAR_P).abs(), QUOTED_DIGITS));
    checks
}

/// Madelung and linear runs from the benchmark state; L-inf density gap over all samples.
fn equivalence_gap(n: usize, dt: f64, t_final: f64) -> Result<f64, Error> {
    let g = Grid::new(20.0, n)?;
    let params = BenchmarkParams::default();
    let st = initial_state(&params, &g)?;
    let sample_every = (0.05 / dt).round() as usize;
    let mcfg = MadelungRunConfig {
        dt,
        t_final,
        sample_every,
        kappa: params.kappa,
        mass: 1.0,
        potential: harmonic(),
        quantum_term: true,
        node_floor: 1e-6,
    };
    let lcfg = LinearRunConfig { dt, t_final, sample_every, kappa: params.kappa, mass: 1.0, potential: harmonic() };
    let m = solver_madelung::evolve(&st, &mcfg)?;
    let l = solver_linear::evolve(&embed(&st, params.kappa)?, &lcfg)?;
    Ok(m.states().iter().zip(l.states()).fold(0.0, |w, (a, b)| w.max(linf_rho(a, b))))
}

fn criterion_2() -> Vec<Check> {
    // explicit RK4 on the Madelung system needs dt below ~5.6/k_max^2
    let runs = [(1024usize, 2e-4f64), (2048, 1e-4)];
    let mut checks = Vec::new();
    let mut gaps = Vec::new();
    for &(n, dt) in &runs {
        let label = format!("L-inf rho gap, T=pi, N={n}, dt={dt:.0e}");
        match equivalence_gap(n, dt, PI) {
            Ok(gap) => {
                gaps.push(Some(gap));
                checks.push(Check::below(label, gap, EQUIV_RHO));
            }
            Err(e) => {
                gaps.push(None);
                // how far the comparison holds before the abort
                if let Error::NodeFormation { step, .. } = e {
                    let reached = step as f64 * PI / (PI / dt).round();
                    let t = (0.9 * reached / 0.05).floor() * 0.05;
                    if t > 0.0 {
                        if let Ok(gap) = equivalence_gap(n, dt, t) {
                            checks.push(Check::info(format!("  gap up to t={t:.2} before the abort"), gap));
                        }
                    }
                    checks.push(Check::info(format!("  abort time, N={n}"), reached));
                }
                checks.push(Check::failed(label, e, Relation::Below(EQUIV_RHO)));
            }
        }
    }
    match (gaps[0], gaps[1]) {
        (Some(a), Some(b)) => checks.push(Check::above("gap reduction under dt/2, 2N", a / b, EQUIV_GAIN)),
        _ => checks.push(Check::failed(
            "gap reduction under dt/2, 2N",
            "not computable: a run aborted",
            Relation::Above(EQUIV_GAIN),
        )),
    }
    checks
}

fn criterion_3() -> Vec<Check> {
    let g = Grid::new(20.0, 1024).unwrap();
    let st = initial_state(&BenchmarkParams::default(), &g).unwrap();
    let kappa = Kappa::real(1e-3).unwrap();
    let cfg = |quantum_term| MadelungRunConfig {
        dt: 1e-3,
        t_final: 1.0,
        sample_every: 100,
        kappa,
        mass: 1.0,
        potential: Potential::Free,
        quantum_term,
        node_floor: 1e-6,
    };
    let mut checks = Vec::new();
    match (solver_madelung::evolve(&st, &cfg(true)), solver_madelung::evolve(&st, &cfg(false))) {
        (Ok(a), Ok(b)) => {
            let gap = a.states().iter().zip(b.states()).fold(0.0f64, |w, (x, y)| {
                x.density().iter().zip(y.density()).fold(w, |w, (p, q)| w.max((p - q).abs()))
            });
            checks.push(Check::below("L-inf rho, quantum term on vs off, kappa=1e-3", gap, CLASSICAL_RHO));
        }
        (Err(e), _) | (_, Err(e)) => {
            checks.push(Check::failed("classical-limit runs", e, Relation::Below(CLASSICAL_RHO)))
        }
    }
    let q1 = quantum_potential(st.r(), Kappa::real(1.0).unwrap(), 1.0, &g, 1e-6).unwrap();
    let peak = q1.iter().fold(0.0f64, |m, x| m.max(x.abs()));
    let q10 = quantum_potential(st.r(), Kappa::real(0.1).unwrap(), 1.0, &g, 1e-6).unwrap();
    let dev = q1.iter().zip(&q10).fold(0.0f64, |m, (a, b)| m.max((100.0 * b - a).abs())) / peak;
    checks.push(Check::below("Q(kappa/10)*100 vs Q(kappa), relative", dev, Q_SCALING_REL));
    let q2 = quantum_potential(st.r(), Kappa::real(2.0).unwrap(), 1.0, &g, 1e-6).unwrap();
    let exact = q1.iter().zip(&q2).filter(|(a, b)| 4.0 * **a != **b).count();
    checks.push(Check::below("points where Q(2 kappa) != 4 Q(kappa) bitwise", exact as f64, 1.0));
    checks
}

fn criterion_4() -> Vec<Check> {
    let g = Grid::new(10.0, 256).unwrap();
    let mut rng = common::rng(4);
    let mut worst = 0.0f64;
    let mut failures = Vec::new();
    for _ in 0..BORN_STATES {
        let base = common::random_positive_state(&mut rng, &g);
        // moderate action keeps |psi| above the node floor even at |theta| = 1
        let s: Vec<f64> = base.s().iter().map(|s| 0.3 * s).collect();
        let st = EnsembleState::new(base.r().to_vec(), s, &g).unwrap();
        let kappa = common::random_kappa(&mut rng);
        let psi = embed(&st, kappa).unwrap();
        let anchor = PhaseAnchor::from_action(128, st.s()[128], kappa);
        match born_density(&psi, kappa.theta().unwrap(), anchor) {
            Ok(h) => {
                worst = worst.max(common::max_abs_diff(&h, &st.density()));
            }
            Err(e) => failures.push(e),
        }
    }
    let mut checks =
        vec![Check::below(format!("max |H - R^2| over {BORN_STATES} states, theta in [-1, 1]"), worst, BORN_ABS)];
    if let Some(e) = failures.first() {
        checks.push(Check::failed("born density evaluation", e, Relation::Below(0.0)));
    }
    checks
}

fn packets(g: &Grid) -> (WaveField, WaveField) {
    let a = WaveField::new(common::gaussian(g, -1.0, 0.8, 0.5, 1.0), g).unwrap();
    let b = WaveField::new(common::gaussian(g, 1.5, 1.1, -0.3, 1.0), g).unwrap();
    (a, b)
}

fn criterion_5() -> Vec<Check> {
    let g = Grid::new(20.0, 512).unwrap();
    let (a, b) = packets(&g);
    let mut checks = Vec::new();
    let run = |psi: &WaveField, kappa: Kappa, t_final: f64, sample_every: usize| {
        let cfg = LinearRunConfig { dt: 1e-3, t_final, sample_every, kappa, mass: 1.0, potential: harmonic() };
        solver_linear::evolve(psi, &cfg)
    };
    let real = Kappa::real(1.0).unwrap();
    match (run(&a, real, 10.0, 100), run(&b, real, 10.0, 100)) {
        (Ok(ta), Ok(tb)) => match pseudo_unitarity_defect(&ta, &tb, 0.0) {
            Ok(d) => checks.push(Check::below(
                "real kappa, theta=0 defect over 1e4 steps",
                d.into_iter().fold(0.0, f64::max),
                UNITARY_DEFECT,
            )),
            Err(e) => checks.push(Check::failed("real kappa defect", e, Relation::Below(UNITARY_DEFECT))),
        },
        (Err(e), _) | (_, Err(e)) => checks.push(Check::failed("real kappa runs", e, Relation::Below(UNITARY_DEFECT))),
    }
    let kappa = Kappa::new(1.0, 0.01).unwrap();
    match (run(&a, kappa, 1.0, 10), run(&b, kappa, 1.0, 10)) {
        (Ok(ta), Ok(tb)) => {
            let theta = kappa.theta().unwrap();
            for (label, x, y) in [
                ("theta-balance defect <phi,psi>, kappa=1+0.01i, T=1", &ta, &tb),
                ("theta-balance defect <psi,psi>, kappa=1+0.01i, T=1", &tb, &tb),
            ] {
                match pseudo_unitarity_defect(x, y, theta) {
                    Ok(d) => checks.push(Check::below(label, d.into_iter().fold(0.0, f64::max), THETA_BALANCE)),
                    Err(e) => checks.push(Check::failed(label, e, Relation::Below(THETA_BALANCE))),
                }
            }
            let drift = norm_drift(&tb).into_iter().fold(0.0, f64::max);
            checks.push(Check::above("naive norm drift on the same run", drift, NAIVE_DRIFT_MIN));
        }
        (Err(e), _) | (_, Err(e)) => {
            checks.push(Check::failed("complex kappa runs", e, Relation::Below(THETA_BALANCE)))
        }
    }
    checks
}

fn criterion_6() -> Vec<Check> {
    let g = Grid::new(20.0, 512).unwrap();
    let mut rng = common::rng(6);
    let mut defect = 0.0f64;
    let mut margin = f64::INFINITY;
    for _ in 0..20 {
        let st = common::random_state(&mut rng, &g);
        let kappa = common::random_kappa(&mut rng);
        let real = Kappa::real(kappa.re).unwrap();
        let psi = embed(&st, real).unwrap();
        defect = defect.max(commutator_defect(&psi, kappa).unwrap());
        defect = defect.max(commutator_defect(&psi, real).unwrap());
        let m = moments(&psi, real).unwrap();
        margin = margin.min(m.uncertainty_margin(real));
        let m = moments_ensemble(&st, real).unwrap();
        margin = margin.min(m.uncertainty_margin(real));
    }
    let kappa = Kappa::real(1.0).unwrap();
    let r: Vec<f64> = g.points().iter().map(|q| (-q * q / (2.0 * 0.4 * 0.4)).exp()).collect();
    let s: Vec<f64> = g.points().to_vec();
    let gauss = EnsembleState::new(r, s, &g).unwrap().normalized().unwrap();
    let sat = moments(&embed(&gauss, kappa).unwrap(), kappa).unwrap().uncertainty_margin(kappa);
    vec![
        Check::below("max commutator defect, 20 random states", defect, COMMUTATOR),
        Check::above("min dq dp - |kappa|/2 over the corpus", margin, -UNCERTAINTY_SLACK),
        Check::below("|dq dp - kappa/2| for a Gaussian at t=0", sat.abs(), SATURATION),
    ]
}

fn criterion_7() -> Vec<Check> {
    let g = Grid::new(20.0, 512).unwrap();
    let mut rng = common::rng(7);
    let mut worst = 0.0f64;
    for _ in 0..20 {
        let st = common::random_state(&mut rng, &g);
        let kappa = Kappa::real(common::random_kappa(&mut rng).re.abs()).unwrap();
        worst = worst.max(moments_ensemble(&st, kappa).unwrap().identity_residual());
        worst = worst.max(moments(&embed(&st, kappa).unwrap(), kappa).unwrap().identity_residual());
    }
    let mut checks = vec![Check::below("momentum identity residual, 20 random states", worst, IDENTITY_REL)];
    match run_benchmark(&BenchmarkParams::default(), SolverKind::Linear, &BenchmarkRun::default()) {
        Ok(r) => {
            let split = |get: fn(&hjs::MomentSet) -> f64| {
                let peak = r.oracle.iter().map(get).fold(0.0f64, f64::max);
                r.oracle
                    .iter()
                    .zip(&r.simulated)
                    .filter(|(o, _)| get(o) > SPLIT_SUPPORT * peak)
                    .fold(0.0f64, |m, (o, s)| m.max((get(s) - get(o)).abs() / get(o)))
            };
            checks.push(Check::below("var_p_hj vs (dq)0^2 sin^2 t, relative", split(|m| m.var_p_hj), SPLIT_REL));
            checks.push(Check::below("amp term vs (dp)0^2 cos^2 t, relative", split(|m| m.amp_grad), SPLIT_REL));
            let at0 = &r.simulated[0];
            checks.push(Check::info("  simulated var_p_hj at t=0", at0.var_p_hj));
            checks.push(Check::info("  simulated amp term at t=0", at0.amp_grad));
        }
        Err(e) => checks.push(Check::failed("benchmark run", e, Relation::Below(SPLIT_REL))),
    }
    checks
}

fn criterion_8() -> Vec<Check> {
    let samples: Vec<f64> = (0..=100).map(|j| 10f64.powf(-1.0 + 2.0 * j as f64 / 100.0)).collect();
    let canon = admissibility_coefficient(&EmbeddingCandidate::canonical(), &samples).unwrap();
    let worst = canon.iter().fold(0.0f64, |m, c| m.max(c.norm()));
    let suite = EmbeddingCandidate::<f64>::perturbed_suite();
    let weakest =
        suite.iter().map(|c| admissibility_coefficient(c, &[1.0]).unwrap()[0].norm()).fold(f64::INFINITY, f64::min);
    vec![
        Check::below("canonical coefficient, R in [0.1, 10]", worst, ADMISSIBLE),
        Check::above("perturbed candidates", suite.len() as f64, (MIN_CANDIDATES - 1) as f64),
        Check::above("weakest perturbed coefficient at R=1", weakest, INADMISSIBLE),
    ]
}

fn criterion_9() -> Vec<Check> {
    let g = Grid::new(10.0, 512).unwrap();
    let a = WaveField::new(common::gaussian(&g, -1.2, 0.9, 0.3, 1.0), &g).unwrap();
    let b: Vec<Complex> =
        common::gaussian(&g, 1.3, 1.0, -0.2, 1.0).into_iter().map(|z| z * Complex::from_polar(0.7, 1.1)).collect();
    let b = WaveField::new(b, &g).unwrap();
    let theta = 1e-3;
    match interference_modulation(&a, &b, &[0.0, theta, 2.0 * theta]) {
        Err(e) => vec![Check::failed("interference modulation", e, Relation::Below(F_SPREAD))],
        Ok(rep) => {
            let (lo, hi) = hjs_central(rep.window, CENTRAL);
            let (m1, m2) = (&rep.profiles[1].m, &rep.profiles[2].m);
            let ratio = (lo..=hi)
                .filter(|&j| m1[j].abs() > 1e3 * f64::EPSILON)
                .fold(0.0f64, |w, j| w.max((m2[j] / m1[j] - 2.0).abs()));
            vec![
                Check::below("F spread across theta, central 80%", rep.linearity_spread_central(CENTRAL), F_SPREAD),
                Check::below(format!("max |M(2t)/M(t) - 2| (bound {RATIO_SLOPE} theta)"), ratio, RATIO_SLOPE * theta),
            ]
        }
    }
}

/// Central `fraction` of an inclusive index window.
fn hjs_central(window: (usize, usize), fraction: f64) -> (usize, usize) {
    let trim = ((1.0 - fraction) / 2.0 * (window.1 - window.0) as f64).round() as usize;
    (window.0 + trim, window.1 - trim)
}

fn criterion_10() -> Vec<Check> {
    // N = 512: with Im kappa > 0 the top modes are anti-diffusive and finer grids amplify roundoff
    let g = Grid::new(20.0, 512).unwrap();
    let psi = WaveField::new(common::gaussian(&g, 0.5, 0.8, 0.5, 1.0), &g).unwrap();
    let defect = |im: f64| {
        let cfg = LinearRunConfig {
            dt: 1e-3,
            t_final: 1.0,
            sample_every: 1000,
            kappa: Kappa::new(1.0, im).unwrap(),
            mass: 1.0,
            potential: harmonic(),
        };
        time_reversal_defect(&psi, &cfg)
    };
    let mut checks = Vec::new();
    match defect(0.0) {
        Ok(d) => checks.push(Check::below("reversal defect, real kappa, T=1", d, REVERSAL_REAL)),
        Err(e) => checks.push(Check::failed("real kappa reversal", e, Relation::Below(REVERSAL_REAL))),
    }
    match defect(0.01) {
        Ok(d) => checks.push(Check::above("reversal defect, Im kappa = 0.01, T=1", d, REVERSAL_COMPLEX_MIN)),
        Err(e) => checks.push(Check::failed("complex kappa reversal", e, Relation::Above(REVERSAL_COMPLEX_MIN))),
    }
    checks
}

fn main() -> ExitCode {
    type Criterion = (&'static str, fn() -> Vec<Check>);
    let criteria: [Criterion; 10] = [
        ("harmonic-oscillator benchmark", criterion_1),
        ("representation equivalence", criterion_2),
        ("classical limit", criterion_3),
        ("Born identity", criterion_4),
        ("pseudo-unitarity", criterion_5),
        ("operator layer", criterion_6),
        ("momentum-dispersion identity", criterion_7),
        ("embedding admissibility", criterion_8),
        ("theta-interference linearity", criterion_9),
        ("time-reversal selector", criterion_10),
    ];
    let mut passed = 0;
    for (i, (title, run)) in criteria.iter().enumerate() {
        let start = Instant::now();
        let checks = run();
        let ok = checks.iter().all(Check::pass);
        passed += ok as usize;
        println!(
            "criterion {:>2} {} {title} ({:.1} s)",
            i + 1,
            if ok { "PASS" } else { "FAIL" },
            start.elapsed().as_secs_f64()
        );
        for c in &checks {
            println!("{}", c.render());
        }
    }
    println!("acceptance: {passed}/{} criteria passed", criteria.len());
    if passed == criteria.len() {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
