//! Uniform periodic grid on [-L, L) with derivative operators and quadrature.

use std::fmt;
use std::sync::Arc;

use num_complex::Complex;
use rustfft::{Fft, FftPlanner};
use serde::Serialize;

use crate::error::{Error, Result};
use crate::scalar::Real;

/// Which derivative to take.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Order {
    First,
    Second,
}

/// Discretization used by [`Grid::derivative`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Method {
    /// Fourier multiplier `(i k)^order`; exact for band-limited periodic fields.
    Spectral,
    /// Second-order centered stencil with periodic wrap.
    Central,
    /// Nine-point finite differences without wrap (one-sided near the ends).
    /// Exact for polynomials up to degree eight, so it also serves fields
    /// such as a linear action that are not periodic.
    Stencil,
}

const STENCIL_POINTS: usize = 9;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct GridSpec {
    pub half_width: f64,
    pub n_points: usize,
}

/// Immutable grid. Cloning is cheap; FFT plans are shared.
#[derive(Clone)]
pub struct Grid<T: Real> {
    half_width: T,
    dx: T,
    points: Vec<T>,
    wavenumbers: Vec<T>,
    forward: Arc<dyn Fft<T>>,
    inverse: Arc<dyn Fft<T>>,
}

impl<T: Real> fmt::Debug for Grid<T> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Grid")
            .field("half_width", &self.half_width)
            .field("n_points", &self.len())
            .field("dx", &self.dx)
            .finish()
    }
}

impl<T: Real> PartialEq for Grid<T> {
    fn eq(&self, other: &Self) -> bool {
        self.half_width == other.half_width && self.len() == other.len()
    }
}

impl<T: Real> Grid<T> {
    pub fn new(half_width: T, n_points: usize) -> Result<Self> {
        if !(half_width > T::zero()) || !half_width.is_finite() {
            return Err(Error::Config(format!("half width must be positive and finite, got {half_width}")));
        }
        if n_points < 8 || !n_points.is_power_of_two() {
            return Err(Error::Config(format!("point count must be a power of two >= 8, got {n_points}")));
        }
        let n = T::from_usize_lossy(n_points);
        let two = T::lit(2.0);
        let dx = two * half_width / n;
        let points = (0..n_points).map(|j| -half_width + T::from_usize_lossy(j) * dx).collect();
        let dk = T::PI() / half_width;
        let wavenumbers =
            (0..n_points)
                .map(|j| {
                    if j < n_points / 2 {
                        T::from_usize_lossy(j) * dk
                    } else {
                        -T::from_usize_lossy(n_points - j) * dk
                    }
                })
                .collect();
        let mut planner = FftPlanner::new();
        let forward = planner.plan_fft_forward(n_points);
        let inverse = planner.plan_fft_inverse(n_points);
        Ok(Grid { half_width, dx, points, wavenumbers, forward, inverse })
    }

    pub fn half_width(&self) -> T {
        self.half_width
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn dx(&self) -> T {
        self.dx
    }

    pub fn points(&self) -> &[T] {
        &self.points
    }

    /// Angular wavenumbers in FFT order: `0, dk, ..., -dk`. The Nyquist mode is negative.
    pub fn wavenumbers(&self) -> &[T] {
        &self.wavenumbers
    }

    pub fn spec(&self) -> GridSpec {
        GridSpec { half_width: self.half_width.as_f64(), n_points: self.len() }
    }

    pub(crate) fn check_len(&self, found: usize) -> Result<()> {
        if found == self.len() {
            Ok(())
        } else {
            Err(Error::Shape { expected: self.len(), found })
        }
    }

    /// Unnormalized forward transform in place.
    pub fn fft(&self, buf: &mut [Complex<T>]) {
        self.forward.process(buf);
    }

    /// Inverse transform in place, including the 1/N factor.
    pub fn ifft(&self, buf: &mut [Complex<T>]) {
        self.inverse.process(buf);
        let scale = T::one() / T::from_usize_lossy(buf.len());
        for z in buf.iter_mut() {
            *z = z.scale(scale);
        }
    }

    /// Rectangle-rule quadrature, which is the trapezoid rule on a periodic grid.
    pub fn integrate(&self, f: &[T]) -> Result<T> {
        self.check_len(f.len())?;
        Ok(f.iter().copied().sum::<T>() * self.dx)
    }

    pub fn integrate_complex(&self, f: &[Complex<T>]) -> Result<Complex<T>> {
        self.check_len(f.len())?;
        let s = f.iter().fold(Complex::new(T::zero(), T::zero()), |a, &z| a + z);
        Ok(s.scale(self.dx))
    }

    pub fn derivative(&self, f: &[Complex<T>], order: Order, method: Method) -> Result<Vec<Complex<T>>> {
        self.check_len(f.len())?;
        Ok(match method {
            Method::Spectral => self.spectral(f, order),
            Method::Central => self.central(f, order),
            Method::Stencil => self.stencil(f, order),
        })
    }

    pub fn derivative_real(&self, f: &[T], order: Order, method: Method) -> Result<Vec<T>> {
        self.check_len(f.len())?;
        let z: Vec<Complex<T>> = f.iter().map(|&x| Complex::new(x, T::zero())).collect();
        Ok(self.derivative(&z, order, method)?.into_iter().map(|c| c.re).collect())
    }

    fn spectral(&self, f: &[Complex<T>], order: Order) -> Vec<Complex<T>> {
        let mut buf = f.to_vec();
        self.fft(&mut buf);
        let nyquist = self.len() / 2;
        for (j, (z, &k)) in buf.iter_mut().zip(&self.wavenumbers).enumerate() {
            *z = match order {
                // the odd-order Nyquist multiplier is not real-symmetric; drop it
                Order::First if j == nyquist => Complex::new(T::zero(), T::zero()),
                Order::First => *z * Complex::new(T::zero(), k),
                Order::Second => z.scale(-k * k),
            };
        }
        self.ifft(&mut buf);
        buf
    }

    fn central(&self, f: &[Complex<T>], order: Order) -> Vec<Complex<T>> {
        let n = f.len();
        let dx = self.dx;
        (0..n)
            .map(|j| {
                let l = f[(j + n - 1) % n];
                let r = f[(j + 1) % n];
                match order {
                    Order::First => (r - l).unscale(T::lit(2.0) * dx),
                    Order::Second => (r - f[j].scale(T::lit(2.0)) + l).unscale(dx * dx),
                }
            })
            .collect()
    }

    fn stencil(&self, f: &[Complex<T>], order: Order) -> Vec<Complex<T>> {
        let n = f.len();
        let m = match order {
            Order::First => 1,
            Order::Second => 2,
        };
        let half = STENCIL_POINTS / 2;
        let scale = self.dx.powi(m as i32);
        // weights depend only on where the evaluation point sits inside the window
        let tables: Vec<Vec<T>> = (0..STENCIL_POINTS)
            .map(|pos| {
                let nodes: Vec<f64> = (0..STENCIL_POINTS).map(|i| i as f64 - pos as f64).collect();
                fornberg(0.0, &nodes, m).into_iter().map(T::lit).collect()
            })
            .collect();
        (0..n)
            .map(|j| {
                let start = j.saturating_sub(half).min(n - STENCIL_POINTS);
                let w = &tables[j - start];
                let acc =
                    (0..STENCIL_POINTS).fold(Complex::new(T::zero(), T::zero()), |a, i| a + f[start + i].scale(w[i]));
                acc.unscale(scale)
            })
            .collect()
    }
}

/// Finite-difference weights for the `m`-th derivative at `z` from values at `x`
/// (Fornberg's recursion).
pub(crate) fn fornberg(z: f64, x: &[f64], m: usize) -> Vec<f64> {
    let n = x.len();
    let mut c = vec![vec![0.0; m + 1]; n];
    let mut c1 = 1.0;
    let mut c4 = x[0] - z;
    c[0][0] = 1.0;
    for i in 1..n {
        let mn = i.min(m);
        let mut c2 = 1.0;
        let c5 = c4;
        c4 = x[i] - z;
        for j in 0..i {
            let c3 = x[i] - x[j];
            c2 *= c3;
            if j == i - 1 {
                for k in (1..=mn).rev() {
                    c[i][k] = c1 * (k as f64 * c[i - 1][k - 1] - c5 * c[i - 1][k]) / c2;
                }
                c[i][0] = -c1 * c5 * c[i - 1][0] / c2;
            }
            for k in (1..=mn).rev() {
                c[j][k] = (c4 * c[j][k] - k as f64 * c[j][k - 1]) / c3;
            }
            c[j][0] = c4 * c[j][0] / c3;
        }
        c1 = c2;
    }
    c.into_iter().map(|row| row[m]).collect()
}
