//! Deformation parameter, the two state representations, and potentials.

use num_complex::Complex;
use serde::Serialize;

use crate::embedding::PhaseAnchor;
use crate::error::{Error, Result};
use crate::grid::Grid;
use crate::observables::born_density;
use crate::scalar::Real;

/// Complex deformation parameter `kappa = re + i im`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Kappa<T> {
    pub re: T,
    pub im: T,
}

impl<T: Real> Kappa<T> {
    pub fn new(re: T, im: T) -> Result<Self> {
        if !re.is_finite() || !im.is_finite() {
            return Err(Error::Parameter(format!("kappa must be finite, got {re} + {im}i")));
        }
        Ok(Kappa { re, im })
    }

    pub fn real(re: T) -> Result<Self> {
        Self::new(re, T::zero())
    }

    pub fn as_complex(&self) -> Complex<T> {
        Complex::new(self.re, self.im)
    }

    pub fn norm(&self) -> T {
        self.re.hypot(self.im)
    }

    pub fn norm_sqr(&self) -> T {
        self.re * self.re + self.im * self.im
    }

    pub fn is_real(&self) -> bool {
        self.im == T::zero()
    }

    /// `im / re`. Undefined when the real part vanishes.
    pub fn theta(&self) -> Result<T> {
        if self.re == T::zero() {
            return Err(Error::Parameter("theta is undefined for Re(kappa) = 0".into()));
        }
        Ok(self.im / self.re)
    }

    pub(crate) fn require_nonzero(&self) -> Result<()> {
        if self.norm() > T::zero() {
            Ok(())
        } else {
            Err(Error::Parameter("|kappa| must be positive".into()))
        }
    }
}

/// Amplitude/action pair `(R, S)` on a grid.
#[derive(Debug, Clone, PartialEq)]
pub struct EnsembleState<T: Real> {
    r: Vec<T>,
    s: Vec<T>,
    grid: Grid<T>,
    normalized: bool,
}

impl<T: Real> EnsembleState<T> {
    pub fn new(r: Vec<T>, s: Vec<T>, grid: &Grid<T>) -> Result<Self> {
        grid.check_len(r.len())?;
        grid.check_len(s.len())?;
        if let Some(j) = r.iter().position(|x| !x.is_finite() || *x < T::zero()) {
            return Err(Error::Input(format!("amplitude must be finite and nonnegative (index {j})")));
        }
        if let Some(j) = s.iter().position(|x| !x.is_finite()) {
            return Err(Error::Input(format!("action must be finite (index {j})")));
        }
        Ok(EnsembleState { r, s, grid: grid.clone(), normalized: false })
    }

    pub fn r(&self) -> &[T] {
        &self.r
    }

    pub fn s(&self) -> &[T] {
        &self.s
    }

    pub fn grid(&self) -> &Grid<T> {
        &self.grid
    }

    pub fn is_normalized(&self) -> bool {
        self.normalized
    }

    pub fn density(&self) -> Vec<T> {
        self.r.iter().map(|&r| r * r).collect()
    }

    pub fn into_parts(self) -> (Vec<T>, Vec<T>) {
        (self.r, self.s)
    }

    /// Rescales R so that the integral of R^2 is one. S is untouched.
    pub fn normalized(&self) -> Result<Self> {
        let mass = self.grid.integrate(&self.density())?;
        if !(mass > T::zero()) {
            return Err(Error::DegenerateState);
        }
        let c = mass.sqrt().recip();
        Ok(EnsembleState {
            r: self.r.iter().map(|&r| r * c).collect(),
            s: self.s.clone(),
            grid: self.grid.clone(),
            normalized: true,
        })
    }

    /// Assembles a state from solver output; R is assumed already validated.
    pub(crate) fn from_raw(r: Vec<T>, s: Vec<T>, grid: &Grid<T>, normalized: bool) -> Self {
        EnsembleState { r, s, grid: grid.clone(), normalized }
    }
}

/// Complex field `psi` on a grid.
#[derive(Debug, Clone, PartialEq)]
pub struct WaveField<T: Real> {
    psi: Vec<Complex<T>>,
    grid: Grid<T>,
}

impl<T: Real> WaveField<T> {
    pub fn new(psi: Vec<Complex<T>>, grid: &Grid<T>) -> Result<Self> {
        grid.check_len(psi.len())?;
        if let Some(j) = psi.iter().position(|z| !z.re.is_finite() || !z.im.is_finite()) {
            return Err(Error::Input(format!("field must be finite (index {j})")));
        }
        Ok(WaveField { psi, grid: grid.clone() })
    }

    pub fn from_fn(grid: &Grid<T>, f: impl Fn(T) -> Complex<T>) -> Result<Self> {
        Self::new(grid.points().iter().map(|&q| f(q)).collect(), grid)
    }

    pub fn psi(&self) -> &[Complex<T>] {
        &self.psi
    }

    pub fn grid(&self) -> &Grid<T> {
        &self.grid
    }

    pub fn into_vec(self) -> Vec<Complex<T>> {
        self.psi
    }

    pub fn norm_sqr(&self) -> T {
        self.psi.iter().map(|z| z.norm_sqr()).sum::<T>() * self.grid.dx()
    }

    pub fn max_abs(&self) -> T {
        self.psi.iter().fold(T::zero(), |m, z| m.max(z.norm()))
    }

    pub fn conj(&self) -> Self {
        WaveField { psi: self.psi.iter().map(|z| z.conj()).collect(), grid: self.grid.clone() }
    }

    pub fn scaled(&self, c: Complex<T>) -> Self {
        WaveField { psi: self.psi.iter().map(|&z| z * c).collect(), grid: self.grid.clone() }
    }

    /// Pointwise `a*self + b*other`.
    pub fn combine(&self, a: Complex<T>, other: &Self, b: Complex<T>) -> Result<Self> {
        self.grid.check_len(other.psi.len())?;
        let psi = self.psi.iter().zip(&other.psi).map(|(&x, &y)| a * x + b * y).collect();
        Ok(WaveField { psi, grid: self.grid.clone() })
    }

    /// Rescales so the Born density (with the given anchor) integrates to one.
    /// At `theta = 0` this is the ordinary L2 normalization and nodes are allowed.
    pub fn normalized(&self, theta: T, anchor: PhaseAnchor<T>) -> Result<Self> {
        let h = born_density(self, theta, anchor)?;
        let total = self.grid.integrate(&h)?;
        if !(total > T::zero()) {
            return Err(Error::DegenerateState);
        }
        Ok(self.scaled(Complex::new(total.sqrt().recip(), T::zero())))
    }

    pub(crate) fn from_raw(psi: Vec<Complex<T>>, grid: &Grid<T>) -> Self {
        WaveField { psi, grid: grid.clone() }
    }
}

/// External potential V(q).
#[derive(Debug, Clone, PartialEq)]
pub enum Potential<T> {
    Free,
    Harmonic { mass: T, omega: T },
    Quartic { mass: T, omega: T, lambda: T },
    Tabulated(Vec<T>),
}

impl<T: Real> Potential<T> {
    pub fn harmonic(mass: T, omega: T) -> Result<Self> {
        check_mass_omega(mass, omega)?;
        Ok(Potential::Harmonic { mass, omega })
    }

    pub fn quartic(mass: T, omega: T, lambda: T) -> Result<Self> {
        check_mass_omega(mass, omega)?;
        if !lambda.is_finite() {
            return Err(Error::Parameter("quartic coupling must be finite".into()));
        }
        Ok(Potential::Quartic { mass, omega, lambda })
    }

    pub fn evaluate(&self, grid: &Grid<T>) -> Result<Vec<T>> {
        let half = T::lit(0.5);
        let q = grid.points();
        Ok(match self {
            Potential::Free => vec![T::zero(); q.len()],
            Potential::Harmonic { mass, omega } => {
                let c = half * *mass * *omega * *omega;
                q.iter().map(|&x| c * x * x).collect()
            }
            Potential::Quartic { mass, omega, lambda } => {
                let c = half * *mass * *omega * *omega;
                q.iter().map(|&x| c * x * x + *lambda * x.powi(4)).collect()
            }
            Potential::Tabulated(v) => {
                grid.check_len(v.len())?;
                v.clone()
            }
        })
    }

    pub fn label(&self) -> &'static str {
        match self {
            Potential::Free => "free",
            Potential::Harmonic { .. } => "harmonic",
            Potential::Quartic { .. } => "quartic",
            Potential::Tabulated(_) => "tabulated",
        }
    }
}

fn check_mass_omega<T: Real>(mass: T, omega: T) -> Result<()> {
    if !(mass > T::zero()) || !mass.is_finite() {
        return Err(Error::Parameter(format!("mass must be positive, got {mass}")));
    }
    if !(omega >= T::zero()) || !omega.is_finite() {
        return Err(Error::Parameter(format!("frequency must be nonnegative, got {omega}")));
    }
    Ok(())
}
