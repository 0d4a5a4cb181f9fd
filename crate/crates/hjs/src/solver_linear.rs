//! Strang split-step spectral integrator for `i kappa dpsi/dt = -(kappa^2/2m) psi'' + V psi`.

use num_complex::Complex;

use crate::error::{Error, Result};
use crate::grid::Grid;
use crate::scalar::Real;
use crate::state::{Kappa, Potential, WaveField};
use crate::trajectory::{plan_steps, RunMeta, Trajectory};

/// Abort once `max|psi|` exceeds this multiple of its initial value.
pub const BLOWUP_FACTOR: f64 = 1e6;

#[derive(Debug, Clone, PartialEq)]
pub struct LinearRunConfig<T> {
    pub dt: T,
    pub t_final: T,
    pub sample_every: usize,
    pub kappa: Kappa<T>,
    pub mass: T,
    pub potential: Potential<T>,
}

impl<T: Real> LinearRunConfig<T> {
    fn validate(&self) -> Result<()> {
        self.kappa.require_nonzero()?;
        if !(self.mass > T::zero()) || !self.mass.is_finite() {
            return Err(Error::Parameter(format!("mass must be positive, got {}", self.mass)));
        }
        plan_steps(self.dt, self.t_final, self.sample_every)?;
        Ok(())
    }

    fn meta(&self, dt: T, steps: usize) -> RunMeta {
        RunMeta {
            solver: "linear-strang".into(),
            dt: dt.as_f64(),
            requested_dt: self.dt.as_f64(),
            t_final: self.t_final.as_f64(),
            steps,
            sample_every: self.sample_every,
            kappa_re: self.kappa.re.as_f64(),
            kappa_im: self.kappa.im.as_f64(),
            mass: self.mass.as_f64(),
            potential: self.potential.label().into(),
            max_clip: None,
        }
    }
}

/// Per-mode free-flight multiplier `exp(-i kappa k^2 dt / 2m)`.
pub fn kinetic_factor<T: Real>(kappa: Kappa<T>, mass: T, dt: T, grid: &Grid<T>) -> Result<Vec<Complex<T>>> {
    kappa.require_nonzero()?;
    let minus_i = Complex::new(T::zero(), -T::one());
    let c = minus_i * kappa.as_complex() * (dt / (T::lit(2.0) * mass));
    Ok(grid.wavenumbers().iter().map(|&k| (c * (k * k)).exp()).collect())
}

/// Precomputed factors of one Strang step: potential half, kinetic, potential half.
#[derive(Debug, Clone)]
pub struct SplitStep<T: Real> {
    half_potential: Vec<Complex<T>>,
    kinetic: Vec<Complex<T>>,
    grid: Grid<T>,
}

impl<T: Real> SplitStep<T> {
    pub fn new(config: &LinearRunConfig<T>, grid: &Grid<T>, dt: T) -> Result<Self> {
        let v = config.potential.evaluate(grid)?;
        let kappa = config.kappa.as_complex();
        let minus_i = Complex::new(T::zero(), -T::one());
        let c = minus_i * (dt / T::lit(2.0)) / kappa;
        Ok(SplitStep {
            half_potential: v.iter().map(|&v| (c * v).exp()).collect(),
            kinetic: kinetic_factor(config.kappa, config.mass, dt, grid)?,
            grid: grid.clone(),
        })
    }

    pub fn apply(&self, psi: &mut [Complex<T>]) {
        for (z, p) in psi.iter_mut().zip(&self.half_potential) {
            *z = *z * p;
        }
        self.grid.fft(psi);
        for (z, k) in psi.iter_mut().zip(&self.kinetic) {
            *z = *z * k;
        }
        self.grid.ifft(psi);
        for (z, p) in psi.iter_mut().zip(&self.half_potential) {
            *z = *z * p;
        }
    }
}

/// One step of size `config.dt`.
pub fn step<T: Real>(field: &WaveField<T>, config: &LinearRunConfig<T>) -> Result<WaveField<T>> {
    config.kappa.require_nonzero()?;
    let prop = SplitStep::new(config, field.grid(), config.dt)?;
    let mut psi = field.psi().to_vec();
    prop.apply(&mut psi);
    check_finite(&psi, 0)?;
    Ok(WaveField::from_raw(psi, field.grid()))
}

/// Integrates to `t_final`, storing every `sample_every`-th state including
/// both ends. The step is adjusted (see [`RunMeta::dt`]) so that `t_final`
/// is reached exactly with a whole number of samples.
pub fn evolve<T: Real>(field: &WaveField<T>, config: &LinearRunConfig<T>) -> Result<Trajectory<T, WaveField<T>>> {
    config.validate()?;
    let (steps, dt) = plan_steps(config.dt, config.t_final, config.sample_every)?;
    let grid = field.grid();
    let prop = SplitStep::new(config, grid, dt)?;
    let limit = T::lit(BLOWUP_FACTOR) * field.max_abs();
    let mut psi = field.psi().to_vec();
    let mut times = vec![T::zero()];
    let mut states = vec![field.clone()];
    for n in 1..=steps {
        prop.apply(&mut psi);
        guard(&psi, n, limit)?;
        if n % config.sample_every == 0 {
            times.push(T::from_usize_lossy(n) * dt);
            states.push(WaveField::from_raw(psi.clone(), grid));
        }
    }
    Trajectory::new(times, states, Some(config.meta(dt, steps)))
}

/// Final state only; same stepping as [`evolve`].
pub fn propagate<T: Real>(field: &WaveField<T>, config: &LinearRunConfig<T>) -> Result<WaveField<T>> {
    config.validate()?;
    let (steps, dt) = plan_steps(config.dt, config.t_final, config.sample_every)?;
    let grid = field.grid();
    let prop = SplitStep::new(config, grid, dt)?;
    let limit = T::lit(BLOWUP_FACTOR) * field.max_abs();
    let mut psi = field.psi().to_vec();
    for n in 1..=steps {
        prop.apply(&mut psi);
        guard(&psi, n, limit)?;
    }
    Ok(WaveField::from_raw(psi, grid))
}

/// Evolves for `t_final`, conjugates, evolves forward again and conjugates
/// back. Returns `max|psi_back - psi_0| / max|psi_0|`; this vanishes only
/// when the dynamics are time-reversal symmetric (real kappa).
pub fn time_reversal_defect<T: Real>(field: &WaveField<T>, config: &LinearRunConfig<T>) -> Result<T> {
    let forward = propagate(field, config)?;
    let back = propagate(&forward.conj(), config)?.conj();
    let worst = field.psi().iter().zip(back.psi()).fold(T::zero(), |m, (a, b)| m.max((a - b).norm()));
    Ok(worst / field.max_abs())
}

fn check_finite<T: Real>(psi: &[Complex<T>], step: usize) -> Result<()> {
    match psi.iter().position(|z| !z.re.is_finite() || !z.im.is_finite()) {
        Some(index) => Err(Error::NonFinite { step, index }),
        None => Ok(()),
    }
}

fn guard<T: Real>(psi: &[Complex<T>], step: usize, limit: T) -> Result<()> {
    check_finite(psi, step)?;
    let peak = psi.iter().fold(T::zero(), |m, z| m.max(z.norm()));
    if peak > limit {
        return Err(Error::Blowup {
            step,
            reason: format!("max|psi| = {:.3e} exceeds {:.3e}", peak.as_f64(), limit.as_f64()),
        });
    }
    Ok(())
}
