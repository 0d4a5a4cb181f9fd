//! RK4 integrator for the coupled amplitude/action system at real kappa:
//!
//! ```text
//! dR/dt = -(1/m) R' S' - (R/2m) S''
//! dS/dt = -S'^2/2m - V - Q[R],    Q = -(kappa^2/2m) R''/R
//! ```

use num_complex::Complex;

use crate::error::{Error, Result};
use crate::grid::{Grid, Method, Order};
use crate::scalar::{max_abs, Real};
use crate::solver_linear::BLOWUP_FACTOR;
use crate::state::{EnsembleState, Kappa, Potential};
use crate::trajectory::{plan_steps, RunMeta, Trajectory};

/// Default relative amplitude floor regularizing `R''/R`.
pub const DEFAULT_NODE_FLOOR: f64 = 1e-6;

#[derive(Debug, Clone, PartialEq)]
pub struct MadelungRunConfig<T> {
    pub dt: T,
    pub t_final: T,
    pub sample_every: usize,
    pub kappa: Kappa<T>,
    pub mass: T,
    pub potential: Potential<T>,
    /// `false` drops Q and integrates the classical Hamilton-Jacobi flow.
    pub quantum_term: bool,
    pub node_floor: T,
}

impl<T: Real> MadelungRunConfig<T> {
    pub fn validate(&self) -> Result<()> {
        if !self.kappa.is_real() {
            return Err(Error::Parameter("the amplitude/action solver requires real kappa".into()));
        }
        self.kappa.require_nonzero()?;
        if !(self.mass > T::zero()) || !self.mass.is_finite() {
            return Err(Error::Parameter(format!("mass must be positive, got {}", self.mass)));
        }
        if !(self.node_floor > T::zero() && self.node_floor < T::lit(1e-3)) {
            return Err(Error::Parameter(format!("node_floor must lie in (0, 1e-3), got {}", self.node_floor)));
        }
        plan_steps(self.dt, self.t_final, self.sample_every)?;
        Ok(())
    }

    fn meta(&self, dt: T, steps: usize, max_clip: T) -> RunMeta {
        RunMeta {
            solver: if self.quantum_term { "madelung-rk4" } else { "classical-hj-rk4" }.into(),
            dt: dt.as_f64(),
            requested_dt: self.dt.as_f64(),
            t_final: self.t_final.as_f64(),
            steps,
            sample_every: self.sample_every,
            kappa_re: self.kappa.re.as_f64(),
            kappa_im: self.kappa.im.as_f64(),
            mass: self.mass.as_f64(),
            potential: self.potential.label().into(),
            max_clip: Some(max_clip.as_f64()),
        }
    }
}

/// `Q = -(kappa^2/2m) R'' / max(R, node_floor * max R)` with a spectral Laplacian.
pub fn quantum_potential<T: Real>(r: &[T], kappa: Kappa<T>, mass: T, grid: &Grid<T>, node_floor: T) -> Result<Vec<T>> {
    grid.check_len(r.len())?;
    let rmax = max_abs(r);
    if !(rmax > T::zero()) {
        return Err(Error::DegenerateState);
    }
    let floor = node_floor * rmax;
    let r2 = grid.derivative_real(r, Order::Second, Method::Spectral)?;
    let c = -kappa.norm_sqr() / (T::lit(2.0) * mass);
    Ok(r.iter().zip(&r2).map(|(&r, &d2)| c * d2 / r.max(floor)).collect())
}

/// First and second derivatives of the action, `(S', S'')`.
///
/// S is generally not periodic (a plane-wave factor makes it a ramp), so it
/// is never differentiated spectrally by itself. The endpoint ramp `s q` is
/// removed, and the rest is read off the periodic field
/// `phi = R exp(i (S - s q)/kappa)`:
/// `S' = s + kappa Im(phi* phi') / R^2`. Denominators are regularized with
/// `floor^2`, so where R vanishes only the ramp slope survives.
pub fn action_gradients<T: Real>(r: &[T], s: &[T], kappa: T, grid: &Grid<T>, floor: T) -> Result<(Vec<T>, Vec<T>)> {
    grid.check_len(r.len())?;
    grid.check_len(s.len())?;
    let q = grid.points();
    let n = q.len();
    let slope = (s[n - 1] - s[0]) / (q[n - 1] - q[0]);
    let phi: Vec<Complex<T>> = (0..n).map(|j| Complex::from_polar(r[j], (s[j] - slope * q[j]) / kappa)).collect();
    let p1 = grid.derivative(&phi, Order::First, Method::Spectral)?;
    let p2 = grid.derivative(&phi, Order::Second, Method::Spectral)?;
    let r1 = grid.derivative_real(r, Order::First, Method::Spectral)?;
    let f2 = floor * floor;
    let mut s1 = Vec::with_capacity(n);
    let mut s2 = Vec::with_capacity(n);
    for j in 0..n {
        let a2 = phi[j].norm_sqr();
        let den = a2 + f2;
        let g = kappa * (phi[j].conj() * p1[j]).im;
        let g2 = kappa * (phi[j].conj() * p2[j]).im;
        s1.push(slope + g / den);
        s2.push((g2 - T::lit(2.0) * r[j] * r1[j] * g / den) / den);
    }
    Ok((s1, s2))
}

/// `(dR/dt, dS/dt)` for the configured system.
pub fn rhs<T: Real>(state: &EnsembleState<T>, config: &MadelungRunConfig<T>) -> Result<(Vec<T>, Vec<T>)> {
    config.validate()?;
    let v = config.potential.evaluate(state.grid())?;
    let (dr, ds) = rhs_fields(state.r(), state.s(), state.grid(), &v, config)?;
    if let Some(index) = dr.iter().chain(&ds).position(|x| !x.is_finite()) {
        return Err(Error::NonFinite { step: 0, index: index % state.grid().len() });
    }
    Ok((dr, ds))
}

fn rhs_fields<T: Real>(
    r: &[T],
    s: &[T],
    grid: &Grid<T>,
    v: &[T],
    config: &MadelungRunConfig<T>,
) -> Result<(Vec<T>, Vec<T>)> {
    let rmax = max_abs(r);
    if !(rmax > T::zero()) {
        return Err(Error::DegenerateState);
    }
    let m = config.mass;
    let two = T::lit(2.0);
    let r1 = grid.derivative_real(r, Order::First, Method::Spectral)?;
    let (s1, s2) = action_gradients(r, s, config.kappa.re, grid, config.node_floor * rmax)?;
    let q = if config.quantum_term {
        quantum_potential(r, config.kappa, m, grid, config.node_floor)?
    } else {
        vec![T::zero(); r.len()]
    };
    let dr = (0..r.len()).map(|j| -(r1[j] * s1[j] + r[j] * s2[j] / two) / m).collect();
    let ds = (0..r.len()).map(|j| -(s1[j] * s1[j] / (two * m) + v[j] + q[j])).collect();
    Ok((dr, ds))
}

/// One classical RK4 step, then negative amplitudes are clipped to zero.
/// Returns the new state and the largest clipped magnitude.
pub fn step_rk4<T: Real>(state: &EnsembleState<T>, config: &MadelungRunConfig<T>) -> Result<(EnsembleState<T>, T)> {
    config.validate()?;
    let v = config.potential.evaluate(state.grid())?;
    let (r, s, clip) = rk4(state.r(), state.s(), state.grid(), &v, config, config.dt)?;
    if let Some(index) = r.iter().chain(&s).position(|x| !x.is_finite()) {
        return Err(Error::NonFinite { step: 1, index: index % r.len() });
    }
    Ok((EnsembleState::from_raw(r, s, state.grid(), state.is_normalized()), clip))
}

type Fields<T> = (Vec<T>, Vec<T>, T);

fn rk4<T: Real>(r: &[T], s: &[T], grid: &Grid<T>, v: &[T], config: &MadelungRunConfig<T>, dt: T) -> Result<Fields<T>> {
    let half = dt / T::lit(2.0);
    let axpy = |x: &[T], k: &[T], h: T| -> Vec<T> { x.iter().zip(k).map(|(&x, &k)| x + h * k).collect() };
    let (kr1, ks1) = rhs_fields(r, s, grid, v, config)?;
    let (kr2, ks2) = rhs_fields(&axpy(r, &kr1, half), &axpy(s, &ks1, half), grid, v, config)?;
    let (kr3, ks3) = rhs_fields(&axpy(r, &kr2, half), &axpy(s, &ks2, half), grid, v, config)?;
    let (kr4, ks4) = rhs_fields(&axpy(r, &kr3, dt), &axpy(s, &ks3, dt), grid, v, config)?;
    let sixth = dt / T::lit(6.0);
    let two = T::lit(2.0);
    let mut clip = T::zero();
    let mut r_new = Vec::with_capacity(r.len());
    let mut s_new = Vec::with_capacity(r.len());
    for j in 0..r.len() {
        let x = r[j] + sixth * (kr1[j] + two * kr2[j] + two * kr3[j] + kr4[j]);
        if x < T::zero() {
            clip = clip.max(-x);
        }
        r_new.push(x.max(T::zero()));
        s_new.push(s[j] + sixth * (ks1[j] + two * ks2[j] + two * ks3[j] + ks4[j]));
    }
    Ok((r_new, s_new, clip))
}

/// Rejects initial data whose detrended phase `(S - s q)/kappa` changes by
/// more than the unwrap limit between neighbouring supported points.
pub fn check_phase_resolution<T: Real>(state: &EnsembleState<T>, kappa: T, node_floor: T) -> Result<()> {
    let (r, s, q) = (state.r(), state.s(), state.grid().points());
    let n = q.len();
    let slope = (s[n - 1] - s[0]) / (q[n - 1] - q[0]);
    let floor = node_floor * max_abs(r);
    let limit = T::lit(crate::embedding::MAX_PHASE_STEP);
    for j in 0..n - 1 {
        if r[j] > floor && r[j + 1] > floor {
            let inc = ((s[j + 1] - s[j]) - slope * (q[j + 1] - q[j])) / kappa;
            if inc.abs() > limit {
                return Err(Error::PhaseResolution { index: j, increment: inc.as_f64() });
            }
        }
    }
    Ok(())
}

/// Index of a point below `node_floor/10` lying between points that carry
/// real amplitude (above `sqrt(node_floor)` of the peak), if any. Dips at the
/// edge of the regularized tails do not count.
fn interior_node<T: Real>(r: &[T], node_floor: T) -> Option<usize> {
    let rmax = max_abs(r);
    let strong = node_floor.sqrt() * rmax;
    let first = r.iter().position(|&x| x > strong)?;
    let last = r.iter().rposition(|&x| x > strong)?;
    let deep = node_floor * rmax / T::lit(10.0);
    (first..=last).find(|&j| r[j] < deep)
}

/// Integrates to `t_final` with fixed RK4 steps and samples like the linear solver.
///
/// Aborts with [`Error::NodeFormation`] once a node opens up between
/// supported regions, and with [`Error::Blowup`] on runaway amplitude.
pub fn evolve<T: Real>(
    state: &EnsembleState<T>,
    config: &MadelungRunConfig<T>,
) -> Result<Trajectory<T, EnsembleState<T>>> {
    config.validate()?;
    let grid = state.grid();
    let mass = grid.integrate(&state.density())?;
    if (mass - T::one()).abs() > T::lit(1e-6) {
        return Err(Error::Input(format!("initial state must be normalized, mass = {mass}")));
    }
    check_phase_resolution(state, config.kappa.re, config.node_floor)?;
    let (steps, dt) = plan_steps(config.dt, config.t_final, config.sample_every)?;
    let v = config.potential.evaluate(grid)?;
    let limit = T::lit(BLOWUP_FACTOR) * max_abs(state.r());
    let mut r = state.r().to_vec();
    let mut s = state.s().to_vec();
    let mut max_clip = T::zero();
    let mut times = vec![T::zero()];
    let mut states = vec![state.clone()];
    for n in 1..=steps {
        let (r_new, s_new, clip) = rk4(&r, &s, grid, &v, config, dt)?;
        if let Some(index) = r_new.iter().chain(&s_new).position(|x| !x.is_finite()) {
            return Err(Error::NonFinite { step: n, index: index % r_new.len() });
        }
        let peak = max_abs(&r_new);
        if peak > limit {
            return Err(Error::Blowup {
                step: n,
                reason: format!("max R = {:.3e} exceeds {:.3e}", peak.as_f64(), limit.as_f64()),
            });
        }
        if let Some(index) = interior_node(&r_new, config.node_floor) {
            return Err(Error::NodeFormation { step: n, index });
        }
        max_clip = max_clip.max(clip);
        r = r_new;
        s = s_new;
        if n % config.sample_every == 0 {
            times.push(T::from_usize_lossy(n) * dt);
            states.push(EnsembleState::from_raw(r.clone(), s.clone(), grid, true));
        }
    }
    Trajectory::new(times, states, Some(config.meta(dt, steps, max_clip)))
}
