//! Maps between `(R, S)` and `psi = R exp(iS/kappa)`, admissibility of
//! alternative embeddings, and equation residuals along trajectories.

use std::fmt;

use num_complex::Complex;

use crate::error::{Error, Result};
use crate::grid::{Method, Order};
use crate::scalar::Real;
use crate::solver_madelung::{action_gradients, quantum_potential};
use crate::state::{EnsembleState, Kappa, Potential, WaveField};
use crate::trajectory::Trajectory;

/// Relative amplitude below which the phase of a field is treated as undefined.
pub const NODE_FLOOR: f64 = 1e-8;

/// Largest phase increment between neighbouring points accepted by the unwrapper.
pub const MAX_PHASE_STEP: f64 = std::f64::consts::FRAC_PI_2;

/// Fixes the additive 2π freedom of an unwrapped phase.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum PhaseAnchor<T> {
    /// Principal argument at the point of largest modulus.
    MaxAmplitude,
    /// The branch at `index` closest to `phase`.
    At { index: usize, phase: T },
}

impl<T: Real> PhaseAnchor<T> {
    /// Anchor that makes the extracted action equal `action` at `index`.
    pub fn from_action(index: usize, action: T, kappa: Kappa<T>) -> Self {
        PhaseAnchor::At { index, phase: action * kappa.re / kappa.norm_sqr() }
    }
}

/// Unwrapped phase plus the contiguous index range where it is meaningful.
#[derive(Debug, Clone, PartialEq)]
pub struct PhaseProfile<T> {
    pub phase: Vec<T>,
    /// Inclusive bounds of the above-floor region containing the anchor.
    /// Outside it (the decaying tails) the phase is held at the edge value.
    pub support: (usize, usize),
}

impl<T> PhaseProfile<T> {
    pub fn in_support(&self, j: usize) -> bool {
        self.support.0 <= j && j <= self.support.1
    }
}

/// Sequential unwrap outward from the anchor.
///
/// Points below `floor_rel * max|psi|` are only allowed in the tails. A
/// sub-floor point with above-floor points on both sides is a node and
/// yields [`Error::Node`].
pub fn unwrap_phase<T: Real>(psi: &[Complex<T>], anchor: PhaseAnchor<T>, floor_rel: T) -> Result<PhaseProfile<T>> {
    let n = psi.len();
    let (imax, amax) =
        psi.iter().enumerate().fold((0, T::zero()), |(i, m), (j, z)| if z.norm() > m { (j, z.norm()) } else { (i, m) });
    if !(amax > T::zero()) {
        return Err(Error::DegenerateState);
    }
    let floor = floor_rel * amax;
    let (start, anchor_phase) = match anchor {
        PhaseAnchor::MaxAmplitude => (imax, psi[imax].arg()),
        PhaseAnchor::At { index, phase } => {
            if index >= n {
                return Err(Error::Input(format!("anchor index {index} outside grid of {n}")));
            }
            // snap to the branch of the data nearest the requested value
            let data = psi[index].arg();
            (index, phase + wrap(data - phase))
        }
    };
    if psi[start].norm() <= floor {
        return Err(Error::Node { index: start });
    }
    let max_step = T::lit(MAX_PHASE_STEP);
    let mut phase = vec![T::zero(); n];
    phase[start] = anchor_phase;

    let mut hi = start;
    while hi + 1 < n && psi[hi + 1].norm() > floor {
        let inc = (psi[hi + 1] * psi[hi].conj()).arg();
        if inc.abs() > max_step {
            return Err(Error::PhaseResolution { index: hi, increment: inc.as_f64() });
        }
        phase[hi + 1] = phase[hi] + inc;
        hi += 1;
    }
    let mut lo = start;
    while lo > 0 && psi[lo - 1].norm() > floor {
        let inc = (psi[lo - 1] * psi[lo].conj()).arg();
        if inc.abs() > max_step {
            return Err(Error::PhaseResolution { index: lo - 1, increment: inc.as_f64() });
        }
        phase[lo - 1] = phase[lo] + inc;
        lo -= 1;
    }
    if (hi + 1..n).any(|j| psi[j].norm() > floor) {
        return Err(Error::Node { index: hi + 1 });
    }
    if (0..lo).any(|j| psi[j].norm() > floor) {
        return Err(Error::Node { index: lo - 1 });
    }
    let (left, right) = (phase[lo], phase[hi]);
    phase[..lo].fill(left);
    phase[hi + 1..].fill(right);
    Ok(PhaseProfile { phase, support: (lo, hi) })
}

/// Maps an angle difference into (-π, π].
fn wrap<T: Real>(x: T) -> T {
    let two_pi = T::TAU();
    let y = x - two_pi * (x / two_pi).round();
    if y <= -T::PI() {
        y + two_pi
    } else {
        y
    }
}

/// `psi = R exp(iS/kappa)`, so `|psi| = R exp(S b/|kappa|^2)` and `arg psi = S a/|kappa|^2`.
pub fn embed<T: Real>(state: &EnsembleState<T>, kappa: Kappa<T>) -> Result<WaveField<T>> {
    kappa.require_nonzero()?;
    let k2 = kappa.norm_sqr();
    let psi = state
        .r()
        .iter()
        .zip(state.s())
        .map(|(&r, &s)| {
            let z = Complex::new(s * kappa.im / k2, s * kappa.re / k2);
            z.exp().scale(r)
        })
        .collect();
    WaveField::new(psi, state.grid())
}

/// Inverse of [`embed`]. `anchor_index` defaults to the peak of `|psi|`; the
/// extracted action equals `anchor_s` there. Tails below the node floor keep
/// the action of the nearest supported point.
pub fn extract<T: Real>(
    field: &WaveField<T>,
    kappa: Kappa<T>,
    anchor_index: Option<usize>,
    anchor_s: T,
) -> Result<EnsembleState<T>> {
    if kappa.re == T::zero() {
        return Err(Error::Parameter("Re(kappa) = 0: the phase carries no action information".into()));
    }
    let psi = field.psi();
    let index = anchor_index.unwrap_or_else(|| argmax_abs(psi));
    let anchor = PhaseAnchor::from_action(index, anchor_s, kappa);
    let profile = unwrap_phase(psi, anchor, T::lit(NODE_FLOOR))?;
    let k2 = kappa.norm_sqr();
    let s: Vec<T> = profile.phase.iter().map(|&p| k2 * p / kappa.re).collect();
    let r = psi.iter().zip(&s).map(|(z, &s)| z.norm() * (-s * kappa.im / k2).exp()).collect();
    EnsembleState::new(r, s, field.grid())
}

pub(crate) fn argmax_abs<T: Real>(psi: &[Complex<T>]) -> usize {
    psi.iter().enumerate().fold((0, T::zero()), |(i, m), (j, z)| if z.norm() > m { (j, z.norm()) } else { (i, m) }).0
}

type ScalarFn<T> = Box<dyn Fn(T) -> T + Send + Sync>;

/// Trial embedding `g = A(R) + c1 S`, `f = B(R) exp(c2 S)`.
pub struct EmbeddingCandidate<T> {
    pub name: String,
    a: ScalarFn<T>,
    b: ScalarFn<T>,
    pub c1: T,
    pub c2: T,
}

impl<T: Real> fmt::Debug for EmbeddingCandidate<T> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("EmbeddingCandidate")
            .field("name", &self.name)
            .field("c1", &self.c1)
            .field("c2", &self.c2)
            .finish()
    }
}

impl<T: Real> EmbeddingCandidate<T> {
    pub fn new(
        name: impl Into<String>,
        a: impl Fn(T) -> T + Send + Sync + 'static,
        b: impl Fn(T) -> T + Send + Sync + 'static,
        c1: T,
        c2: T,
    ) -> Result<Self> {
        if !c1.is_finite() || !c2.is_finite() {
            return Err(Error::Parameter("c1 and c2 must be finite".into()));
        }
        if c1 == T::zero() && c2 == T::zero() {
            return Err(Error::Parameter("c1 and c2 cannot both vanish".into()));
        }
        Ok(EmbeddingCandidate { name: name.into(), a: Box::new(a), b: Box::new(b), c1, c2 })
    }

    /// `A = const`, `B = R`: the admissible embedding.
    pub fn canonical() -> Self {
        Self::new("A=0, B=R", |_| T::zero(), |r| r, T::one(), T::zero()).expect("valid constants")
    }

    /// Candidates that violate at least one admissibility constraint.
    pub fn perturbed_suite() -> Vec<Self> {
        let one = T::one();
        let half = T::lit(0.5);
        vec![
            Self::new("A=R, B=R", |r| r, |r| r, one, T::zero()),
            Self::new("A=ln R, B=R", |r: T| r.ln(), |r| r, one, T::zero()),
            Self::new("A=R^2/2, B=R", move |r: T| half * r * r, |r| r, one, T::zero()),
            Self::new("A=0, B=R^2", |_| T::zero(), |r: T| r * r, one, T::zero()),
            Self::new("A=0, B=sqrt R", |_| T::zero(), |r: T| r.sqrt(), one, T::zero()),
            Self::new("A=0, B=R+R^2", |_| T::zero(), |r: T| r + r * r, one, T::zero()),
            Self::new("A=0, B=R exp R", |_| T::zero(), |r: T| r * r.exp(), one, T::zero()),
        ]
        .into_iter()
        .map(|c| c.expect("valid constants"))
        .collect()
    }

    pub fn a(&self, r: T) -> T {
        (self.a)(r)
    }

    pub fn b(&self, r: T) -> T {
        (self.b)(r)
    }

    /// Deformation parameter implied by the action coefficients: `1/(c1 - i c2)`.
    pub fn kappa(&self) -> Kappa<T> {
        let d = self.c1 * self.c1 + self.c2 * self.c2;
        Kappa { re: self.c1 / d, im: self.c2 / d }
    }
}

/// `i B R A' + R B' - B` at each sample. All values vanish iff the candidate is admissible.
pub fn admissibility_coefficient<T: Real>(cand: &EmbeddingCandidate<T>, samples: &[T]) -> Result<Vec<Complex<T>>> {
    samples
        .iter()
        .map(|&r| {
            if !(r > T::zero()) || !r.is_finite() {
                return Err(Error::Domain(format!("amplitude samples must be positive, got {r}")));
            }
            let b = cand.b(r);
            if !(b > T::zero()) {
                return Err(Error::Domain(format!("B(R) must be positive, got B({r}) = {b}")));
            }
            let da = richardson(|x| cand.a(x), r);
            let db = richardson(|x| cand.b(x), r);
            Ok(Complex::new(r * db - b, b * r * da))
        })
        .collect()
}

/// Richardson-extrapolated central difference with step `1e-5 x`.
fn richardson<T: Real>(f: impl Fn(T) -> T, x: T) -> T {
    let h = T::lit(1e-5) * x;
    let d1 = central(&f, x, h);
    let d2 = central(&f, x, h * T::lit(0.5));
    (T::lit(4.0) * d2 - d1) / T::lit(3.0)
}

fn central<T: Real>(f: &impl Fn(T) -> T, x: T, h: T) -> T {
    // divide by the representable spacing, not the nominal one
    let xp = x + h;
    let xm = x - h;
    (f(xp) - f(xm)) / (xp - xm)
}

fn check_samples<T: Real, S>(traj: &Trajectory<T, S>) -> Result<T> {
    if traj.len() < 3 {
        return Err(Error::Input(format!("residuals need at least 3 samples, got {}", traj.len())));
    }
    Ok(traj.spacing().expect("three samples"))
}

/// `|| i kappa dpsi/dt + (kappa^2/2m) psi'' - V psi ||_inf / ||psi||_inf` at each
/// interior sample, with a centered time difference.
pub fn linear_residual<T: Real>(
    traj: &Trajectory<T, WaveField<T>>,
    potential: &Potential<T>,
    kappa: Kappa<T>,
    mass: T,
) -> Result<Vec<T>> {
    let h = check_samples(traj)?;
    kappa.require_nonzero()?;
    let states = traj.states();
    let grid = states[0].grid();
    let v = potential.evaluate(grid)?;
    let k = kappa.as_complex();
    let i = Complex::new(T::zero(), T::one());
    let c = k * k / (T::lit(2.0) * mass);
    (1..states.len() - 1)
        .map(|j| {
            let (prev, cur, next) = (&states[j - 1], &states[j], &states[j + 1]);
            if cur.grid() != grid || prev.grid() != grid || next.grid() != grid {
                return Err(Error::Input("trajectory states must share one grid".into()));
            }
            let lap = grid.derivative(cur.psi(), Order::Second, Method::Spectral)?;
            let two_h = T::lit(2.0) * h;
            let worst = (0..grid.len()).fold(T::zero(), |m, p| {
                let dt = (next.psi()[p] - prev.psi()[p]).unscale(two_h);
                let r = i * k * dt + c * lap[p] - cur.psi()[p].scale(v[p]);
                m.max(r.norm())
            });
            let scale = cur.max_abs();
            if !(scale > T::zero()) {
                return Err(Error::DegenerateState);
            }
            Ok(worst / scale)
        })
        .collect()
}

/// Sup-norm residuals `(R equation, S equation)` at each interior sample,
/// evaluated where `R > node_floor * max R`. The R residual is relative to
/// `max R`; the S residual is absolute.
pub fn madelung_residual<T: Real>(
    traj: &Trajectory<T, EnsembleState<T>>,
    potential: &Potential<T>,
    kappa: Kappa<T>,
    mass: T,
    node_floor: T,
) -> Result<Vec<(T, T)>> {
    let h = check_samples(traj)?;
    if !kappa.is_real() {
        return Err(Error::Parameter("Madelung residual requires real kappa".into()));
    }
    kappa.require_nonzero()?;
    let states = traj.states();
    let grid = states[0].grid();
    let v = potential.evaluate(grid)?;
    let two_h = T::lit(2.0) * h;
    let two_m = T::lit(2.0) * mass;
    (1..states.len() - 1)
        .map(|j| {
            let (prev, cur, next) = (&states[j - 1], &states[j], &states[j + 1]);
            if cur.grid() != grid || prev.grid() != grid || next.grid() != grid {
                return Err(Error::Input("trajectory states must share one grid".into()));
            }
            let r = cur.r();
            let rmax = crate::scalar::max_abs(r);
            if !(rmax > T::zero()) {
                return Err(Error::DegenerateState);
            }
            let floor = node_floor * rmax;
            let r1 = grid.derivative_real(r, Order::First, Method::Spectral)?;
            // regularize well below the mask so the gradients are unbiased where evaluated
            let (s1, s2) = action_gradients(r, cur.s(), kappa.re, grid, floor * T::lit(1e-3))?;
            let q = quantum_potential(r, kappa, mass, grid, node_floor)?;
            let mut res_r = T::zero();
            let mut res_s = T::zero();
            for p in 0..grid.len() {
                if r[p] <= floor {
                    continue;
                }
                let dr = (next.r()[p] - prev.r()[p]) / two_h;
                let ds = (next.s()[p] - prev.s()[p]) / two_h;
                let er = dr + r1[p] * s1[p] / mass + r[p] * s2[p] / two_m;
                let es = ds + s1[p] * s1[p] / two_m + v[p] + q[p];
                res_r = res_r.max(er.abs());
                res_s = res_s.max(es.abs());
            }
            Ok((res_r / rmax, res_s))
        })
        .collect()
}
