use serde::Serialize;

use crate::error::{Error, Result};
use crate::scalar::Real;

/// Echo of the run that produced a trajectory.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunMeta {
    pub solver: String,
    /// Step actually used; `t_final` is always hit exactly, so this may differ
    /// slightly from the requested step.
    pub dt: f64,
    pub requested_dt: f64,
    pub t_final: f64,
    pub steps: usize,
    pub sample_every: usize,
    pub kappa_re: f64,
    pub kappa_im: f64,
    pub mass: f64,
    pub potential: String,
    /// Largest negative amplitude removed by clipping (Madelung only).
    pub max_clip: Option<f64>,
}

/// Uniformly sampled states of one run.
#[derive(Debug, Clone)]
pub struct Trajectory<T: Real, S> {
    times: Vec<T>,
    states: Vec<S>,
    pub meta: Option<RunMeta>,
}

impl<T: Real, S> Trajectory<T, S> {
    /// Checks equal lengths, strictly increasing times and uniform spacing.
    pub fn new(times: Vec<T>, states: Vec<S>, meta: Option<RunMeta>) -> Result<Self> {
        if times.len() != states.len() {
            return Err(Error::Input(format!("{} times but {} states", times.len(), states.len())));
        }
        if times.len() >= 2 {
            let h = times[1] - times[0];
            if !(h > T::zero()) {
                return Err(Error::Input("times must increase".into()));
            }
            let t_last = times[times.len() - 1].abs();
            let tol = T::lit(1e-6) * h + T::lit(8.0) * T::epsilon() * t_last;
            for w in times.windows(2) {
                if ((w[1] - w[0]) - h).abs() > tol {
                    return Err(Error::Input("times must be uniformly spaced".into()));
                }
            }
        }
        Ok(Trajectory { times, states, meta })
    }

    pub fn times(&self) -> &[T] {
        &self.times
    }

    pub fn states(&self) -> &[S] {
        &self.states
    }

    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    pub fn last(&self) -> Option<&S> {
        self.states.last()
    }

    pub fn spacing(&self) -> Option<T> {
        (self.times.len() >= 2).then(|| self.times[1] - self.times[0])
    }

    pub fn iter(&self) -> impl Iterator<Item = (T, &S)> {
        self.times.iter().copied().zip(self.states.iter())
    }
}

/// Splits `t_final` into `samples * sample_every` equal steps close to `dt`.
pub(crate) fn plan_steps<T: Real>(dt: T, t_final: T, sample_every: usize) -> Result<(usize, T)> {
    if !(dt > T::zero()) || !dt.is_finite() {
        return Err(Error::Config(format!("time step must be positive, got {dt}")));
    }
    if !(t_final >= dt) || !t_final.is_finite() {
        return Err(Error::Config(format!("final time must be at least one step, got {t_final}")));
    }
    if sample_every == 0 {
        return Err(Error::Config("sample_every must be at least 1".into()));
    }
    let per_sample = dt * T::from_usize_lossy(sample_every);
    let samples = (t_final / per_sample).round().to_usize().unwrap_or(0).max(1);
    let steps = samples * sample_every;
    Ok((steps, t_final / T::from_usize_lossy(steps)))
}
