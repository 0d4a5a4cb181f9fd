mod common;

use std::f64::consts::{FRAC_PI_2, PI, TAU};

use common::{grid, quadrature_initial_variances};
use hjs::embedding::{embed, extract};
use hjs::oscillator_benchmark::{
    closed_form_moments, initial_state, run_benchmark, series_error, ErrorMode, SolverKind,
};
use hjs::{solver_madelung, BenchmarkParams, BenchmarkRun, Error, Kappa, MadelungRunConfig, Potential};
use proptest::prelude::*;

fn params(epsilon: f64, sigma: f64, kappa: f64) -> BenchmarkParams {
    BenchmarkParams { epsilon, sigma, p0: 1.0, kappa: Kappa::real(kappa).unwrap() }
}

#[test]
fn initial_state_examples() {
    // dx = 1/32 puts q = 0 and q = 1 on the grid
    let g = grid(16.0, 1024);
    let q = g.points();
    let (i0, i1) = (512, 544);
    assert_eq!((q[i0], q[i1]), (0.0, 1.0));
    let st = initial_state(&BenchmarkParams::default(), &g).unwrap();
    let ratio = st.r()[i0] / st.r()[i1];
    let expect = 0.16 / (1.16 * (-1.0f64 / 0.32).exp());
    assert!((ratio - expect).abs() < 1e-12 * expect);
    assert!((st.s()[i1] - st.s()[i0] - 1.0).abs() < 1e-15);
    assert!((g.integrate(&st.density()).unwrap() - 1.0).abs() < 1e-14);
}

#[test]
fn zero_epsilon_has_a_node() {
    let g = grid(16.0, 1024);
    let p = params(0.0, 0.4, 1.0);
    let st = initial_state(&p, &g).unwrap();
    assert_eq!(st.r()[512], 0.0);
    let psi = embed(&st, p.kappa).unwrap();
    assert!(matches!(extract(&psi, p.kappa, None, 0.0), Err(Error::Node { .. })));
    let cfg = MadelungRunConfig {
        dt: 1e-3,
        t_final: 0.01,
        sample_every: 1,
        kappa: p.kappa,
        mass: 1.0,
        potential: Potential::harmonic(1.0, 1.0).unwrap(),
        quantum_term: true,
        node_floor: 1e-6,
    };
    assert!(matches!(solver_madelung::evolve(&st, &cfg), Err(Error::NodeFormation { .. })));
}

#[test]
fn grid_too_small() {
    let err = initial_state(&BenchmarkParams::default(), &grid(3.0, 256)).unwrap_err();
    assert!(matches!(err, Error::GridTooSmall { .. }));
    assert!(initial_state(&params(0.4, -1.0, 1.0), &grid(20.0, 256)).is_err());
    assert!(initial_state(&params(-0.1, 0.4, 1.0), &grid(20.0, 256)).is_err());
}

#[test]
fn closed_forms_at_zero() {
    let m = closed_form_moments(0.0, &BenchmarkParams::default());
    assert!((m.var_q - 62.0 / 275.0).abs() < 1e-15);
    assert!((m.var_p_op - 175.0 / 88.0).abs() < 1e-15);
    assert!((m.var_q - 0.2254545).abs() < 1e-7);
    assert!((m.var_p_op - 1.9886364).abs() < 1e-7);
    assert_eq!((m.mean_q, m.mean_p, m.var_p_hj), (0.0, 1.0, 0.0));
    assert!((m.uncertainty_product - 0.6696).abs() < 1e-4);
}

#[test]
fn closed_forms_agree_with_quadrature() {
    for (e, s, k) in [(0.4, 0.4, 1.0), (0.1, 0.7, 1.0), (1.0, 0.5, 2.0), (0.3, 1.2, 0.5)] {
        let (a, b) = params(e, s, k).initial_variances();
        let (qa, qb) = quadrature_initial_variances(e, s, k);
        assert!((a - qa).abs() < 1e-10 * qa, "{e} {s}: {a} vs {qa}");
        assert!((b - qb).abs() < 1e-10 * qb, "{e} {s}: {b} vs {qb}");
    }
}

#[test]
fn closed_forms_quarter_period_swap() {
    let p = BenchmarkParams::default();
    let (m0, m1) = (closed_form_moments(0.0, &p), closed_form_moments(FRAC_PI_2, &p));
    assert!((m1.mean_q - 1.0).abs() < 1e-15 && m1.mean_p.abs() < 1e-15);
    assert!((m1.var_q - m0.var_p_op).abs() < 1e-15);
    assert!((m1.var_p_op - m0.var_q).abs() < 1e-15);
}

#[test]
fn closed_forms_gaussian_limit() {
    let (sigma, k) = (0.4, 1.0);
    let m = closed_form_moments(0.0, &params(1e4, sigma, k));
    assert!((m.var_q - sigma * sigma / 2.0).abs() < 1e-8);
    assert!((m.var_p_op - k * k / (2.0 * sigma * sigma)).abs() < 1e-8);
    assert!((m.uncertainty_product - k / 2.0).abs() < 1e-8);
    let m = closed_form_moments(PI, &params(1e4, sigma, k));
    assert!((m.uncertainty_product - k / 2.0).abs() < 1e-8);
}

#[test]
fn band_shrinks_with_kappa() {
    let q = |k: f64| closed_form_moments(FRAC_PI_2, &params(0.4, 0.4, k)).var_q;
    // at t = pi/2 the position spread is the initial momentum spread, which scales as kappa^2
    assert!((q(1e-2) / q(1.0) - 1e-4).abs() < 1e-15);
    assert!(q(0.5) < q(1.0) && q(1.0) < q(2.0));
}

#[test]
fn series_error_floors_denominator() {
    let oracle = [0.0, 1.0, 0.0, -1.0];
    let sim = [1e-6, 1.0, 0.0, -1.0];
    let (abs, rel) = series_error(&oracle, &sim);
    assert_eq!(abs, 1e-6);
    assert!((rel - 1e-3).abs() < 1e-12);
}

#[test]
fn linear_benchmark_passes() {
    let report = run_benchmark(&BenchmarkParams::default(), SolverKind::Linear, &BenchmarkRun::default()).unwrap();
    assert!(report.pass);
    assert_eq!(report.times.len(), 64);
    assert!((report.times[63] - TAU).abs() < 1e-12);
    for e in &report.errors {
        match e.name {
            "mean_q" | "mean_p" => assert!(e.max_abs < 1e-5 && e.tolerance.mode == ErrorMode::Absolute),
            "var_q" | "var_p_op" | "uncertainty_product" => assert!(e.max_rel < 1e-4, "{e:?}"),
            _ => assert!(!e.tolerance.tracked),
        }
    }
    for n in &report.norms {
        assert!((n - 1.0).abs() < 1e-10);
    }
    let meta = report.meta.unwrap();
    assert_eq!(meta.sample_every, 100);
    assert_eq!(meta.steps, 6300);
}

#[test]
fn mean_position_is_kappa_independent() {
    // at kappa = 2 the quarter-period position spread still has weight near q = 20
    let run = BenchmarkRun { half_width: 30.0, ..BenchmarkRun::default() };
    let reports: Vec<_> = [0.5, 1.0, 2.0]
        .iter()
        .map(|&k| run_benchmark(&params(0.4, 0.4, k), SolverKind::Linear, &run).unwrap())
        .collect();
    for r in &reports[1..] {
        for (a, b) in r.simulated.iter().zip(&reports[0].simulated) {
            assert!((a.mean_q - b.mean_q).abs() < 1e-6, "{:e}", (a.mean_q - b.mean_q).abs());
        }
    }
}

#[test]
fn variances_are_pi_periodic() {
    // 65 samples put t and t + pi on the grid
    let run = BenchmarkRun { samples: 65, ..BenchmarkRun::default() };
    let report = run_benchmark(&BenchmarkParams::default(), SolverKind::Linear, &run).unwrap();
    for j in 0..=32 {
        let (a, b) = (&report.simulated[j], &report.simulated[j + 32]);
        assert!((a.var_q - b.var_q).abs() < 1e-3 * a.var_q);
        assert!((a.var_p_op - b.var_p_op).abs() < 1e-3 * a.var_p_op);
    }
}

#[test]
fn simulated_momentum_identity() {
    let report = run_benchmark(&BenchmarkParams::default(), SolverKind::Linear, &BenchmarkRun::default()).unwrap();
    for m in &report.simulated {
        assert!(m.identity_residual() < 1e-3);
    }
}

#[test]
fn madelung_and_linear_reports_agree_on_short_horizon() {
    let run = BenchmarkRun { t_final: 0.2, samples: 5, dt: 2e-4, ..BenchmarkRun::default() };
    let p = BenchmarkParams::default();
    let lin = run_benchmark(&p, SolverKind::Linear, &run).unwrap();
    let mad = run_benchmark(&p, SolverKind::Madelung, &run).unwrap();
    assert!(mad.meta.as_ref().unwrap().max_clip.is_some());
    for (a, b) in lin.simulated.iter().zip(&mad.simulated) {
        assert!((a.var_q - b.var_q).abs() < 1e-3 * a.var_q);
        assert!((a.var_p_op - b.var_p_op).abs() < 1e-3 * a.var_p_op);
        assert!((a.mean_p - b.mean_p).abs() < 1e-3);
    }
}

#[test]
fn benchmark_rejects_complex_kappa_and_bad_runs() {
    let p = BenchmarkParams { kappa: Kappa::new(1.0, 0.1).unwrap(), ..BenchmarkParams::default() };
    let run = BenchmarkRun { t_final: 0.1, samples: 3, ..BenchmarkRun::default() };
    assert!(matches!(run_benchmark(&p, SolverKind::Linear, &run), Err(Error::Parameter(_))));
    assert!(matches!(run_benchmark(&p, SolverKind::Madelung, &run), Err(Error::Parameter(_))));
    let bad = BenchmarkRun { samples: 1, ..BenchmarkRun::default() };
    assert!(matches!(run_benchmark(&BenchmarkParams::default(), SolverKind::Linear, &bad), Err(Error::Config(_))));
}

proptest! {
    #[test]
    fn closed_form_uncertainty_bound(e in 0.0f64..2.0, s in 0.1f64..2.0, k in 0.05f64..3.0, t in 0.0f64..TAU) {
        let m = closed_form_moments(t, &params(e, s, k));
        prop_assert!(m.uncertainty_product >= k / 2.0 - 1e-12);
        prop_assert!((m.var_p_op - m.var_p_hj - m.amp_grad).abs() <= 1e-14 * m.var_p_op);
    }

    #[test]
    fn closed_forms_are_pi_periodic(t in 0.0f64..TAU) {
        let p = BenchmarkParams::default();
        let (a, b) = (closed_form_moments(t, &p), closed_form_moments(t + PI, &p));
        prop_assert!((a.var_q - b.var_q).abs() < 1e-12);
        prop_assert!((a.mean_q + b.mean_q).abs() < 1e-12);
    }
}
