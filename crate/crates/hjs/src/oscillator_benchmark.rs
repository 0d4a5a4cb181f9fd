//! Harmonic-oscillator benchmark (m = omega = 1): polynomially modified
//! Gaussian initial data, closed-form moments, and solver comparisons.

use num_complex::Complex;
use serde::Serialize;

use crate::embedding::embed;
use crate::error::{Error, Result};
use crate::grid::Grid;
use crate::observables::{moments, moments_ensemble, MomentSet};
use crate::scalar::Real;
use crate::solver_linear::{self, LinearRunConfig};
use crate::solver_madelung::{self, MadelungRunConfig, DEFAULT_NODE_FLOOR};
use crate::state::{EnsembleState, Kappa, Potential};
use crate::trajectory::RunMeta;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct BenchmarkParams<T> {
    pub epsilon: T,
    pub sigma: T,
    pub p0: T,
    pub kappa: Kappa<T>,
}

impl<T: Real> Default for BenchmarkParams<T> {
    fn default() -> Self {
        BenchmarkParams {
            epsilon: T::lit(0.4),
            sigma: T::lit(0.4),
            p0: T::one(),
            kappa: Kappa { re: T::one(), im: T::zero() },
        }
    }
}

impl<T: Real> BenchmarkParams<T> {
    pub fn validate(&self) -> Result<()> {
        if !(self.sigma > T::zero()) || !self.sigma.is_finite() {
            return Err(Error::Parameter(format!("sigma must be positive, got {}", self.sigma)));
        }
        if !(self.epsilon >= T::zero()) || !self.epsilon.is_finite() {
            return Err(Error::Parameter(format!("epsilon must be nonnegative, got {}", self.epsilon)));
        }
        if !self.p0.is_finite() {
            return Err(Error::Parameter("p0 must be finite".into()));
        }
        self.kappa.require_nonzero()
    }

    /// `(var_q, var_p)` at t = 0.
    pub fn initial_variances(&self) -> (T, T) {
        let (e2, s2) = (self.epsilon * self.epsilon, self.sigma * self.sigma);
        let (e4, s4) = (e2 * e2, s2 * s2);
        let den = e4 + e2 * s2 + T::lit(0.75) * s4;
        let var_q = s2 / T::lit(2.0) * (e4 + T::lit(3.0) * e2 * s2 + T::lit(3.75) * s4) / den;
        let var_p = self.kappa.norm_sqr() / (T::lit(2.0) * s2) * (e4 - e2 * s2 + T::lit(1.75) * s4) / den;
        (var_q, var_p)
    }
}

/// `R = (q^2 + eps^2) exp(-q^2 / 2 sigma^2)`, `S = p0 q`, normalized.
pub fn initial_state<T: Real>(params: &BenchmarkParams<T>, grid: &Grid<T>) -> Result<EnsembleState<T>> {
    params.validate()?;
    let required = T::lit(8.0) * params.sigma;
    if grid.half_width() < required {
        return Err(Error::GridTooSmall { half_width: grid.half_width().as_f64(), required: required.as_f64() });
    }
    let e2 = params.epsilon * params.epsilon;
    let two_s2 = T::lit(2.0) * params.sigma * params.sigma;
    let q = grid.points();
    let r = q.iter().map(|&x| (x * x + e2) * (-x * x / two_s2).exp()).collect();
    let s = q.iter().map(|&x| params.p0 * x).collect();
    EnsembleState::new(r, s, grid)?.normalized()
}

/// Moments at time `t` from the closed forms: classical means, rotating
/// variances, flow part `var_q0 sin^2 t` and amplitude part `var_p0 cos^2 t`.
pub fn closed_form_moments<T: Real>(t: T, params: &BenchmarkParams<T>) -> MomentSet<T> {
    let (a, b) = params.initial_variances();
    let (s, c) = t.sin_cos();
    let (s2, c2) = (s * s, c * c);
    let var_q = a * c2 + b * s2;
    let var_p_op = b * c2 + a * s2;
    MomentSet {
        mean_q: params.p0 * s,
        mean_p: params.p0 * c,
        var_q,
        var_p_op,
        var_p_hj: a * s2,
        amp_grad: b * c2,
        uncertainty_product: (var_q * var_p_op).sqrt(),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum SolverKind {
    Linear,
    Madelung,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum ErrorMode {
    Absolute,
    Relative,
}

/// Tolerance on one moment. Untracked quantities are reported but never fail.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Tolerance {
    pub mode: ErrorMode,
    pub value: f64,
    pub tracked: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct BenchmarkTolerances {
    pub mean_q: Tolerance,
    pub mean_p: Tolerance,
    pub var_q: Tolerance,
    pub var_p_op: Tolerance,
    pub var_p_hj: Tolerance,
    pub amp_grad: Tolerance,
    pub uncertainty_product: Tolerance,
}

impl Default for BenchmarkTolerances {
    fn default() -> Self {
        let abs = |value| Tolerance { mode: ErrorMode::Absolute, value, tracked: true };
        let rel = |value| Tolerance { mode: ErrorMode::Relative, value, tracked: true };
        // the closed-form split of the momentum variance does not describe the
        // dynamics (see README); it is reported against the oracle but not gated
        let info = Tolerance { mode: ErrorMode::Relative, value: 1e-3, tracked: false };
        BenchmarkTolerances {
            mean_q: abs(1e-5),
            mean_p: abs(1e-5),
            var_q: rel(1e-3),
            var_p_op: rel(1e-3),
            var_p_hj: info,
            amp_grad: info,
            uncertainty_product: rel(1e-3),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BenchmarkRun<T> {
    pub half_width: T,
    pub n_points: usize,
    /// Requested step; adjusted so samples fall on a whole number of steps.
    pub dt: T,
    pub t_final: T,
    /// Number of sample times including both ends.
    pub samples: usize,
    pub node_floor: T,
    pub tolerances: BenchmarkTolerances,
}

impl<T: Real> Default for BenchmarkRun<T> {
    fn default() -> Self {
        BenchmarkRun {
            half_width: T::lit(20.0),
            n_points: 1024,
            dt: T::lit(1e-3),
            t_final: T::TAU(),
            samples: 64,
            node_floor: T::lit(DEFAULT_NODE_FLOOR),
            tolerances: BenchmarkTolerances::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct QuantityError {
    pub name: &'static str,
    pub tolerance: Tolerance,
    pub max_abs: f64,
    pub max_rel: f64,
    pub pass: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct ComparisonReport<T> {
    pub solver: SolverKind,
    pub params: BenchmarkParams<T>,
    pub times: Vec<T>,
    pub oracle: Vec<MomentSet<T>>,
    pub simulated: Vec<MomentSet<T>>,
    /// `integral of rho` at each sample.
    pub norms: Vec<T>,
    pub errors: Vec<QuantityError>,
    pub pass: bool,
    pub meta: Option<RunMeta>,
}

type Getter<T> = fn(&MomentSet<T>) -> T;

fn quantities<T: Real>(tol: &BenchmarkTolerances) -> [(&'static str, Getter<T>, Tolerance); 7] {
    [
        ("mean_q", |m| m.mean_q, tol.mean_q),
        ("mean_p", |m| m.mean_p, tol.mean_p),
        ("var_q", |m| m.var_q, tol.var_q),
        ("var_p_op", |m| m.var_p_op, tol.var_p_op),
        ("var_p_hj", |m| m.var_p_hj, tol.var_p_hj),
        ("amp_grad", |m| m.amp_grad, tol.amp_grad),
        ("uncertainty_product", |m| m.uncertainty_product, tol.uncertainty_product),
    ]
}

/// Max absolute and floored-relative error of one quantity over a series.
/// Relative denominators are at least `1e-3 * max_t |oracle|`.
pub fn series_error<T: Real>(oracle: &[T], simulated: &[T]) -> (f64, f64) {
    let peak = oracle.iter().fold(T::zero(), |m, x| m.max(x.abs()));
    let floor = T::lit(1e-3) * peak;
    let mut max_abs = T::zero();
    let mut max_rel = T::zero();
    for (o, s) in oracle.iter().zip(simulated) {
        let e = (*o - *s).abs();
        max_abs = max_abs.max(e);
        let den = o.abs().max(floor);
        if den > T::zero() {
            max_rel = max_rel.max(e / den);
        } else if e > T::zero() {
            max_rel = T::infinity();
        }
    }
    (max_abs.as_f64(), max_rel.as_f64())
}

/// Compares two moment series quantity by quantity.
pub fn compare<T: Real>(
    oracle: &[MomentSet<T>],
    simulated: &[MomentSet<T>],
    tolerances: &BenchmarkTolerances,
) -> Vec<QuantityError> {
    quantities::<T>(tolerances)
        .into_iter()
        .map(|(name, get, tolerance)| {
            let o: Vec<T> = oracle.iter().map(get).collect();
            let s: Vec<T> = simulated.iter().map(get).collect();
            let (max_abs, max_rel) = series_error(&o, &s);
            let measured = match tolerance.mode {
                ErrorMode::Absolute => max_abs,
                ErrorMode::Relative => max_rel,
            };
            QuantityError { name, tolerance, max_abs, max_rel, pass: measured < tolerance.value }
        })
        .collect()
}

/// Simulates the benchmark and compares every sample against the closed forms.
/// Tolerance failures give a failing report; solver errors are returned as `Err`.
pub fn run_benchmark<T: Real>(
    params: &BenchmarkParams<T>,
    solver: SolverKind,
    run: &BenchmarkRun<T>,
) -> Result<ComparisonReport<T>> {
    params.validate()?;
    if run.samples < 2 {
        return Err(Error::Config("benchmark needs at least two samples".into()));
    }
    let grid = Grid::new(run.half_width, run.n_points)?;
    let state0 = initial_state(params, &grid)?;
    let intervals = T::from_usize_lossy(run.samples - 1);
    let per_sample = run.t_final / intervals;
    let sample_every = (per_sample / run.dt).round().to_usize().unwrap_or(1).max(1);
    let dt = per_sample / T::from_usize_lossy(sample_every);
    let potential = Potential::harmonic(T::one(), T::one())?;

    let (times, simulated, norms, meta) = match solver {
        SolverKind::Linear => {
            let config = LinearRunConfig {
                dt,
                t_final: run.t_final,
                sample_every,
                kappa: params.kappa,
                mass: T::one(),
                potential,
            };
            let traj = solver_linear::evolve(&embed(&state0, params.kappa)?, &config)?;
            let sims = traj.states().iter().map(|s| moments(s, params.kappa)).collect::<Result<Vec<_>>>()?;
            let norms = traj.states().iter().map(|s| s.norm_sqr()).collect();
            (traj.times().to_vec(), sims, norms, traj.meta.clone())
        }
        SolverKind::Madelung => {
            let config = MadelungRunConfig {
                dt,
                t_final: run.t_final,
                sample_every,
                kappa: params.kappa,
                mass: T::one(),
                potential,
                quantum_term: true,
                node_floor: run.node_floor,
            };
            let traj = solver_madelung::evolve(&state0, &config)?;
            let sims = traj.states().iter().map(|s| moments_ensemble(s, params.kappa)).collect::<Result<Vec<_>>>()?;
            let norms = traj.states().iter().map(|s| grid.integrate(&s.density())).collect::<Result<Vec<_>>>()?;
            (traj.times().to_vec(), sims, norms, traj.meta.clone())
        }
    };
    let oracle: Vec<MomentSet<T>> = times.iter().map(|&t| closed_form_moments(t, params)).collect();
    let errors = compare(&oracle, &simulated, &run.tolerances);
    let pass = errors.iter().all(|e| e.pass || !e.tolerance.tracked);
    Ok(ComparisonReport { solver, params: *params, times, oracle, simulated, norms, errors, pass, meta })
}

/// Free Gaussian `exp(-(q - q0)^2 / 4 s^2 + i p0 q / kappa)` evolved in
/// closed form for real kappa, normalized to unit L2 norm at every time.
pub fn free_gaussian<T: Real>(q: T, t: T, center: T, width: T, p0: T, kappa: T, mass: T) -> Complex<T> {
    let one = Complex::new(T::one(), T::zero());
    let i = Complex::new(T::zero(), T::one());
    let s2 = width * width;
    // complex width parameter a(t) = 1 + i kappa t / (2 m s^2)
    let a = one + i * (kappa * t / (T::lit(2.0) * mass * s2));
    let x = q - center - p0 * t / mass;
    let pref = (T::TAU() * s2).powf(T::lit(-0.25));
    let phase =
        i * (p0 * (q - center) / kappa - p0 * p0 * t / (T::lit(2.0) * mass * kappa)) + i * (p0 * center / kappa);
    let gauss = -(x * x) / (T::lit(4.0) * s2);
    (Complex::new(gauss, T::zero()) / a + phase).exp() * pref / a.sqrt()
}
