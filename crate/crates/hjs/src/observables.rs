//! Born density, theta inner product, moments, and the diagnostics built on them.

use num_complex::Complex;
use serde::Serialize;

use crate::embedding::{embed, unwrap_phase, PhaseAnchor, PhaseProfile, NODE_FLOOR};
use crate::error::{Error, Result};
use crate::grid::{Method, Order};
use crate::scalar::{max_abs, Real};
use crate::solver_madelung::action_gradients;
use crate::state::{EnsembleState, Kappa, WaveField};
use crate::trajectory::Trajectory;

/// Imaginary parts of real-kappa expectations above this are a bug, not roundoff.
pub const HERMITICITY_TOL: f64 = 1e-10;

/// `H = |psi|^2 exp(-2 theta phi)` with `phi` the unwrapped phase.
/// At `theta = 0` this is `|psi|^2` and nodes are allowed.
pub fn born_density<T: Real>(field: &WaveField<T>, theta: T, anchor: PhaseAnchor<T>) -> Result<Vec<T>> {
    if !theta.is_finite() {
        return Err(Error::Parameter("theta must be finite".into()));
    }
    let psi = field.psi();
    if theta == T::zero() {
        return Ok(psi.iter().map(|z| z.norm_sqr()).collect());
    }
    let profile = unwrap_phase(psi, anchor, T::lit(NODE_FLOOR))?;
    Ok(born_from_profile(psi, &profile, theta))
}

fn born_from_profile<T: Real>(psi: &[Complex<T>], profile: &PhaseProfile<T>, theta: T) -> Vec<T> {
    let two = T::lit(2.0);
    psi.iter().zip(&profile.phase).map(|(z, &p)| z.norm_sqr() * (-two * theta * p).exp()).collect()
}

/// `<phi, psi>_theta` with both phases anchored at their peaks.
pub fn theta_inner_product<T: Real>(phi: &WaveField<T>, psi: &WaveField<T>, theta: T) -> Result<Complex<T>> {
    theta_inner_product_anchored(phi, psi, theta, PhaseAnchor::MaxAmplitude, PhaseAnchor::MaxAmplitude)
}

/// `integral of phi*^(1 - i theta) psi^(1 + i theta)`, powers taken on the unwrapped polar form.
pub fn theta_inner_product_anchored<T: Real>(
    phi: &WaveField<T>,
    psi: &WaveField<T>,
    theta: T,
    anchor_phi: PhaseAnchor<T>,
    anchor_psi: PhaseAnchor<T>,
) -> Result<Complex<T>> {
    let grid = phi.grid();
    grid.check_len(psi.psi().len())?;
    if phi.grid() != psi.grid() {
        return Err(Error::Input("fields live on different grids".into()));
    }
    if theta == T::zero() {
        let f: Vec<Complex<T>> = phi.psi().iter().zip(psi.psi()).map(|(a, b)| a.conj() * b).collect();
        return grid.integrate_complex(&f);
    }
    let pa = unwrap_phase(phi.psi(), anchor_phi, T::lit(NODE_FLOOR))?;
    let pb = unwrap_phase(psi.psi(), anchor_psi, T::lit(NODE_FLOOR))?;
    grid.integrate_complex(&theta_integrand(phi.psi(), &pa.phase, psi.psi(), &pb.phase, theta))
}

fn theta_integrand<T: Real>(
    a: &[Complex<T>],
    phase_a: &[T],
    b: &[Complex<T>],
    phase_b: &[T],
    theta: T,
) -> Vec<Complex<T>> {
    (0..a.len())
        .map(|j| {
            let (ra, rb) = (a[j].norm(), b[j].norm());
            if ra == T::zero() || rb == T::zero() {
                return Complex::new(T::zero(), T::zero());
            }
            let modulus = ra * rb * (-theta * (phase_a[j] + phase_b[j])).exp();
            let angle = (phase_b[j] - phase_a[j]) + theta * (rb.ln() - ra.ln());
            Complex::from_polar(modulus, angle)
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Observable {
    Position,
    Momentum,
    PositionSquared,
    MomentumSquared,
}

impl Observable {
    /// `A psi` with `p = -i kappa d/dq` (spectral).
    pub fn apply<T: Real>(&self, field: &WaveField<T>, kappa: Kappa<T>) -> Result<Vec<Complex<T>>> {
        let grid = field.grid();
        let psi = field.psi();
        let q = grid.points();
        let k = kappa.as_complex();
        Ok(match self {
            Observable::Position => psi.iter().zip(q).map(|(z, &x)| z.scale(x)).collect(),
            Observable::PositionSquared => psi.iter().zip(q).map(|(z, &x)| z.scale(x * x)).collect(),
            Observable::Momentum => {
                let d = grid.derivative(psi, Order::First, Method::Spectral)?;
                let c = Complex::new(T::zero(), -T::one()) * k;
                d.into_iter().map(|z| c * z).collect()
            }
            Observable::MomentumSquared => {
                let d = grid.derivative(psi, Order::Second, Method::Spectral)?;
                let c = -(k * k);
                d.into_iter().map(|z| c * z).collect()
            }
        })
    }
}

/// `<psi, A psi>_theta` for a normalized `psi`. For real kappa the result is
/// checked to be real (|Im| < [`HERMITICITY_TOL`]) and returned with zero
/// imaginary part. For complex kappa both phases are unwrapped; `A psi` is
/// anchored at its peak on the branch continuous with `psi`.
pub fn expectation<T: Real>(field: &WaveField<T>, kappa: Kappa<T>, obs: Observable) -> Result<Complex<T>> {
    kappa.require_nonzero()?;
    let a_psi = obs.apply(field, kappa)?;
    let grid = field.grid();
    if kappa.is_real() {
        let f: Vec<Complex<T>> = field.psi().iter().zip(&a_psi).map(|(a, b)| a.conj() * b).collect();
        let v = grid.integrate_complex(&f)?;
        if v.im.abs() > T::lit(HERMITICITY_TOL) {
            return Err(Error::Consistency(format!(
                "<{obs:?}> has imaginary part {:.3e} at real kappa",
                v.im.as_f64()
            )));
        }
        return Ok(Complex::new(v.re, T::zero()));
    }
    let theta = kappa.theta()?;
    let psi = field.psi();
    let profile = unwrap_phase(psi, PhaseAnchor::MaxAmplitude, T::lit(NODE_FLOOR))?;
    let peak = crate::embedding::argmax_abs(&a_psi);
    if psi[peak].norm() == T::zero() {
        return Err(Error::Node { index: peak });
    }
    let anchor = PhaseAnchor::At { index: peak, phase: profile.phase[peak] + (a_psi[peak] / psi[peak]).arg() };
    let pa = unwrap_phase(&a_psi, anchor, T::lit(NODE_FLOOR))?;
    grid.integrate_complex(&theta_integrand(psi, &profile.phase, &a_psi, &pa.phase, theta))
}

/// First and second moments of position and momentum.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct MomentSet<T> {
    pub mean_q: T,
    pub mean_p: T,
    pub var_q: T,
    /// Operator variance `<p^2> - <p>^2` with `p = -i kappa d/dq`.
    pub var_p_op: T,
    /// Ensemble variance of the flow momentum `S'`.
    pub var_p_hj: T,
    /// `kappa^2 integral of rho (ln R)'^2`.
    pub amp_grad: T,
    /// `sqrt(var_q var_p_op)`.
    pub uncertainty_product: T,
}

impl<T: Real> MomentSet<T> {
    /// `|var_p_op - var_p_hj - amp_grad| / var_p_op`.
    pub fn identity_residual(&self) -> T {
        let d = (self.var_p_op - self.var_p_hj - self.amp_grad).abs();
        if self.var_p_op > T::zero() {
            d / self.var_p_op
        } else {
            d
        }
    }

    /// `uncertainty_product - |kappa|/2`; nonnegative for every physical state.
    pub fn uncertainty_margin(&self, kappa: Kappa<T>) -> T {
        self.uncertainty_product - kappa.norm() / T::lit(2.0)
    }
}

/// Moments of a wave field at real kappa.
///
/// The flow and amplitude parts use the current `j = kappa Im(psi* psi')`
/// and `kappa Re(psi* psi')`, i.e. `rho S'` and `kappa R R'`, so no phase
/// unwrapping is needed and states with nodes are handled.
pub fn moments<T: Real>(field: &WaveField<T>, kappa: Kappa<T>) -> Result<MomentSet<T>> {
    if !kappa.is_real() {
        return Err(Error::Parameter("moments are defined here for real kappa only".into()));
    }
    kappa.require_nonzero()?;
    let k = kappa.re;
    let grid = field.grid();
    let psi = field.psi();
    let q = grid.points();
    let rho: Vec<T> = psi.iter().map(|z| z.norm_sqr()).collect();
    let norm = grid.integrate(&rho)?;
    if !(norm > T::zero()) {
        return Err(Error::DegenerateState);
    }
    let d1 = grid.derivative(psi, Order::First, Method::Spectral)?;
    let mean_q = weighted(grid, &rho, |j| q[j]) / norm;
    let var_q = (weighted(grid, &rho, |j| q[j] * q[j]) / norm - mean_q * mean_q).max(T::zero());

    let p_hat = expectation(field, kappa, Observable::Momentum)?.re / norm;
    let p2_hat = expectation(field, kappa, Observable::MomentumSquared)?.re / norm;
    let var_p_op = (p2_hat - p_hat * p_hat).max(T::zero());

    let cross: Vec<Complex<T>> = psi.iter().zip(&d1).map(|(a, b)| a.conj() * b).collect();
    let mut flow2 = T::zero();
    let mut amp = T::zero();
    for j in 0..psi.len() {
        if rho[j] > T::zero() {
            let c = cross[j].scale(k);
            flow2 = flow2 + c.im * c.im / rho[j];
            amp = amp + c.re * c.re / rho[j];
        }
    }
    let mean_p = grid.integrate(&cross.iter().map(|c| k * c.im).collect::<Vec<_>>())? / norm;
    let var_p_hj = (flow2 * grid.dx() / norm - mean_p * mean_p).max(T::zero());
    let amp_grad = amp * grid.dx() / norm;
    Ok(MomentSet {
        mean_q,
        mean_p,
        var_q,
        var_p_op,
        var_p_hj,
        amp_grad,
        uncertainty_product: (var_q * var_p_op).sqrt(),
    })
}

/// Moments of an amplitude/action pair at real kappa. Flow parts come from
/// `S'`, the amplitude term from `R'`, and the operator variance from the
/// embedded field, so the momentum identity is a genuine check here too.
pub fn moments_ensemble<T: Real>(state: &EnsembleState<T>, kappa: Kappa<T>) -> Result<MomentSet<T>> {
    if !kappa.is_real() {
        return Err(Error::Parameter("moments are defined here for real kappa only".into()));
    }
    kappa.require_nonzero()?;
    let grid = state.grid();
    let r = state.r();
    let rho = state.density();
    let norm = grid.integrate(&rho)?;
    if !(norm > T::zero()) {
        return Err(Error::DegenerateState);
    }
    let q = grid.points();
    let floor = T::lit(NODE_FLOOR) * max_abs(r);
    let (s1, _) = action_gradients(r, state.s(), kappa.re, grid, floor)?;
    let r1 = grid.derivative_real(r, Order::First, Method::Spectral)?;
    let mean_q = weighted(grid, &rho, |j| q[j]) / norm;
    let var_q = (weighted(grid, &rho, |j| q[j] * q[j]) / norm - mean_q * mean_q).max(T::zero());
    let mean_p = weighted(grid, &rho, |j| s1[j]) / norm;
    let var_p_hj = weighted(grid, &rho, |j| (s1[j] - mean_p).powi(2)) / norm;
    let amp_grad = kappa.norm_sqr() * grid.integrate(&r1.iter().map(|d| *d * *d).collect::<Vec<_>>())? / norm;
    let psi = embed(state, kappa)?;
    let p_hat = expectation(&psi, kappa, Observable::Momentum)?.re / norm;
    let p2_hat = expectation(&psi, kappa, Observable::MomentumSquared)?.re / norm;
    let var_p_op = (p2_hat - p_hat * p_hat).max(T::zero());
    Ok(MomentSet {
        mean_q,
        mean_p,
        var_q,
        var_p_op,
        var_p_hj,
        amp_grad,
        uncertainty_product: (var_q * var_p_op).sqrt(),
    })
}

fn weighted<T: Real>(grid: &crate::grid::Grid<T>, rho: &[T], f: impl Fn(usize) -> T) -> T {
    (0..rho.len()).map(|j| rho[j] * f(j)).sum::<T>() * grid.dx()
}

/// `v = S'/m`. S need not be periodic; the nine-point stencil is used.
pub fn velocity_field<T: Real>(state: &EnsembleState<T>, mass: T) -> Vec<T> {
    let grid = state.grid();
    grid.derivative_real(state.s(), Order::First, Method::Stencil)
        .expect("state fields match their grid")
        .into_iter()
        .map(|d| d / mass)
        .collect()
}

/// `||(q p - p q) psi - i kappa psi||_inf / ||psi||_inf` over `|q| <= 0.8 L`.
pub fn commutator_defect<T: Real>(field: &WaveField<T>, kappa: Kappa<T>) -> Result<T> {
    let grid = field.grid();
    let psi = field.psi();
    let q = grid.points();
    let k = kappa.as_complex();
    let minus_ik = Complex::new(T::zero(), -T::one()) * k;
    let d_psi = grid.derivative(psi, Order::First, Method::Spectral)?;
    let q_psi: Vec<Complex<T>> = psi.iter().zip(q).map(|(z, &x)| z.scale(x)).collect();
    let d_qpsi = grid.derivative(&q_psi, Order::First, Method::Spectral)?;
    let i_k = Complex::new(T::zero(), T::one()) * k;
    let inner = T::lit(0.8) * grid.half_width();
    let mut worst = T::zero();
    let mut scale = T::zero();
    for j in 0..psi.len() {
        if q[j].abs() > inner {
            continue;
        }
        let lhs = minus_ik * d_psi[j].scale(q[j]) - minus_ik * d_qpsi[j];
        worst = worst.max((lhs - i_k * psi[j]).norm());
        scale = scale.max(psi[j].norm());
    }
    if !(scale > T::zero()) {
        return Err(Error::DegenerateState);
    }
    Ok(worst / scale)
}

/// Tracks unwrapped phases along a trajectory so that consecutive samples
/// stay on continuous branches.
struct PhaseTracker<T> {
    previous: Option<Vec<T>>,
}

impl<T: Real> PhaseTracker<T> {
    fn next(&mut self, psi: &[Complex<T>]) -> Result<Vec<T>> {
        let anchor = match &self.previous {
            None => PhaseAnchor::MaxAmplitude,
            Some(prev) => {
                let index = crate::embedding::argmax_abs(psi);
                PhaseAnchor::At { index, phase: prev[index] }
            }
        };
        let profile = unwrap_phase(psi, anchor, T::lit(NODE_FLOOR))?;
        self.previous = Some(profile.phase.clone());
        Ok(profile.phase)
    }
}

/// `|B(t) - B(0)|` per sample with
/// `B = <phi(t), psi(t)>_theta + <psi(t), phi(t)>_theta`.
///
/// Phases are followed continuously in time from a peak anchor at t = 0, so
/// the sample spacing must keep the phase change at the peak below π.
pub fn pseudo_unitarity_defect<T: Real>(
    traj_phi: &Trajectory<T, WaveField<T>>,
    traj_psi: &Trajectory<T, WaveField<T>>,
    theta: T,
) -> Result<Vec<T>> {
    if traj_phi.len() != traj_psi.len() || traj_phi.is_empty() {
        return Err(Error::Input("trajectories must be non-empty and of equal length".into()));
    }
    let h = traj_phi.spacing().unwrap_or(T::one());
    for (a, b) in traj_phi.times().iter().zip(traj_psi.times()) {
        if (*a - *b).abs() > T::lit(1e-9) * h {
            return Err(Error::Input("trajectories must share sample times".into()));
        }
    }
    if let (Some(ma), Some(mb)) = (&traj_phi.meta, &traj_psi.meta) {
        if ma.kappa_re != mb.kappa_re || ma.kappa_im != mb.kappa_im {
            return Err(Error::Input("trajectories must share kappa".into()));
        }
    }
    let grid = traj_phi.states()[0].grid();
    let mut track_a = PhaseTracker { previous: None };
    let mut track_b = PhaseTracker { previous: None };
    let mut balance = Vec::with_capacity(traj_phi.len());
    for (a, b) in traj_phi.states().iter().zip(traj_psi.states()) {
        if a.grid() != grid || b.grid() != grid {
            return Err(Error::Input("trajectories must share one grid".into()));
        }
        let value = if theta == T::zero() {
            let f: Vec<Complex<T>> = a.psi().iter().zip(b.psi()).map(|(x, y)| x.conj() * y).collect();
            let ab = grid.integrate_complex(&f)?;
            ab + ab.conj()
        } else {
            let pa = track_a.next(a.psi())?;
            let pb = track_b.next(b.psi())?;
            let ab = grid.integrate_complex(&theta_integrand(a.psi(), &pa, b.psi(), &pb, theta))?;
            let ba = grid.integrate_complex(&theta_integrand(b.psi(), &pb, a.psi(), &pa, theta))?;
            ab + ba
        };
        balance.push(value);
    }
    let b0 = balance[0];
    Ok(balance.iter().map(|b| (*b - b0).norm()).collect())
}

/// `|integral |psi(t)|^2 - integral |psi(0)|^2|` per sample.
pub fn norm_drift<T: Real>(traj: &Trajectory<T, WaveField<T>>) -> Vec<T> {
    let n0 = traj.states().first().map(|s| s.norm_sqr()).unwrap_or(T::zero());
    traj.states().iter().map(|s| (s.norm_sqr() - n0).abs()).collect()
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ModulationProfile<T> {
    pub theta: T,
    /// `H_theta / H_0 - 1` on the window, zero outside.
    pub m: Vec<T>,
    /// `M / theta`; absent for `theta = 0`.
    pub f: Option<Vec<T>>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct InterferenceReport<T> {
    pub profiles: Vec<ModulationProfile<T>>,
    /// Unwrapped phase of the superposition.
    pub phase: Vec<T>,
    /// Inclusive index range where the superposition is above the node floor.
    pub window: (usize, usize),
    /// Largest relative spread of F across the nonzero thetas over the window.
    pub linearity_spread: T,
}

impl<T: Real> InterferenceReport<T> {
    /// Spread restricted to the central `fraction` of the window.
    pub fn linearity_spread_central(&self, fraction: T) -> T {
        let (lo, hi) = central(self.window, fraction);
        spread(&self.profiles, lo, hi)
    }
}

pub(crate) fn central<T: Real>(window: (usize, usize), fraction: T) -> (usize, usize) {
    let width = T::from_usize_lossy(window.1 - window.0);
    let trim = ((T::one() - fraction) / T::lit(2.0) * width).round().to_usize().unwrap_or(0);
    (window.0 + trim, window.1 - trim)
}

fn spread<T: Real>(profiles: &[ModulationProfile<T>], lo: usize, hi: usize) -> T {
    let fs: Vec<&Vec<T>> = profiles.iter().filter_map(|p| p.f.as_ref()).collect();
    let count = T::from_usize_lossy(fs.len());
    let mut worst = T::zero();
    for j in lo..=hi {
        let (mut mn, mut mx, mut sum) = (T::infinity(), T::neg_infinity(), T::zero());
        for f in &fs {
            mn = mn.min(f[j]);
            mx = mx.max(f[j]);
            sum = sum + f[j];
        }
        let width = mx - mn;
        if width > T::zero() {
            worst = worst.max(width / (sum / count).abs());
        }
    }
    worst
}

/// Relative change of the Born density of `psi1 + psi2` at small theta.
pub fn interference_modulation<T: Real>(
    psi1: &WaveField<T>,
    psi2: &WaveField<T>,
    theta_values: &[T],
) -> Result<InterferenceReport<T>> {
    let small = T::lit(1e-2);
    if !theta_values.iter().any(|t| *t == T::zero()) {
        return Err(Error::Input("theta values must include 0".into()));
    }
    let nonzero = theta_values.iter().filter(|t| **t != T::zero()).count();
    if nonzero < 2 {
        return Err(Error::Input("need at least two nonzero theta values".into()));
    }
    if theta_values.iter().any(|t| !(t.abs() <= small)) {
        return Err(Error::Input("theta values must satisfy |theta| <= 1e-2".into()));
    }
    let sum = psi1.combine(Complex::new(T::one(), T::zero()), psi2, Complex::new(T::one(), T::zero()))?;
    let psi = sum.psi();
    let profile = unwrap_phase(psi, PhaseAnchor::MaxAmplitude, T::lit(NODE_FLOOR))?;
    let window = profile.support;
    let h0 = born_from_profile(psi, &profile, T::zero());
    let profiles: Vec<ModulationProfile<T>> = theta_values
        .iter()
        .map(|&theta| {
            let h = born_from_profile(psi, &profile, theta);
            let m: Vec<T> = (0..psi.len())
                .map(|j| if profile.in_support(j) { h[j] / h0[j] - T::one() } else { T::zero() })
                .collect();
            let f = (theta != T::zero()).then(|| m.iter().map(|&x| x / theta).collect());
            ModulationProfile { theta, m, f }
        })
        .collect();
    let linearity_spread = spread(&profiles, window.0, window.1);
    Ok(InterferenceReport { profiles, phase: profile.phase, window, linearity_spread })
}
