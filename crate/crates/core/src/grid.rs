//! Uniform periodic 1D grid and its Fourier wavenumber ladder.
//!
//! Every spatial derivative in the solver goes through this module. Samples sit
//! at `x_min + j*dx` for `j = 0..n`; the point `x_max` is identified with
//! `x_min`, so `dx = (x_max - x_min) / n`.

use std::f64::consts::PI;
use std::fmt;
use std::sync::Arc;

use num_complex::Complex64;
use rustfft::{Fft, FftPlanner};

use crate::error::{check_len, Result, SolverError};

/// Smallest grid accepted by [`Grid::new`].
pub const MIN_POINTS: usize = 8;

#[derive(Clone)]
pub struct Grid {
    n_points: usize,
    x_min: f64,
    x_max: f64,
    dx: f64,
    wavenumbers: Vec<f64>,
    forward: Arc<dyn Fft<f64>>,
    inverse: Arc<dyn Fft<f64>>,
}

impl fmt::Debug for Grid {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Grid")
            .field("n_points", &self.n_points)
            .field("x_min", &self.x_min)
            .field("x_max", &self.x_max)
            .field("dx", &self.dx)
            .finish()
    }
}

impl PartialEq for Grid {
    fn eq(&self, other: &Self) -> bool {
        self.n_points == other.n_points && self.x_min == other.x_min && self.x_max == other.x_max
    }
}

impl Grid {
    /// Builds a grid of `n_points` samples on `[x_min, x_max)`.
    ///
    /// `n_points` must be a power of two no smaller than [`MIN_POINTS`].
    pub fn new(n_points: usize, x_min: f64, x_max: f64) -> Result<Self> {
        if n_points < MIN_POINTS || !n_points.is_power_of_two() {
            return Err(SolverError::InvalidGrid(format!(
                "n_points must be a power of two >= {MIN_POINTS}, got {n_points}"
            )));
        }
        if !x_min.is_finite() || !x_max.is_finite() || x_max <= x_min {
            return Err(SolverError::InvalidGrid(format!(
                "domain requires x_max > x_min, got [{x_min}, {x_max}]"
            )));
        }
        let length = x_max - x_min;
        let dx = length / n_points as f64;
        let wavenumbers = fft_frequencies(n_points)
            .map(|f| 2.0 * PI * f / length)
            .collect();
        let mut planner = FftPlanner::new();
        let forward = planner.plan_fft_forward(n_points);
        let inverse = planner.plan_fft_inverse(n_points);
        Ok(Grid {
            n_points,
            x_min,
            x_max,
            dx,
            wavenumbers,
            forward,
            inverse,
        })
    }

    pub fn n_points(&self) -> usize {
        self.n_points
    }

    pub fn x_min(&self) -> f64 {
        self.x_min
    }

    pub fn x_max(&self) -> f64 {
        self.x_max
    }

    pub fn dx(&self) -> f64 {
        self.dx
    }

    pub fn length(&self) -> f64 {
        self.x_max - self.x_min
    }

    /// Midpoint of the domain.
    pub fn center(&self) -> f64 {
        0.5 * (self.x_min + self.x_max)
    }

    /// Position of sample `j`.
    pub fn x(&self, j: usize) -> f64 {
        self.x_min + j as f64 * self.dx
    }

    pub fn positions(&self) -> Vec<f64> {
        (0..self.n_points).map(|j| self.x(j)).collect()
    }

    /// Angular wavenumbers in FFT order: `0, 1, .., n/2-1, -n/2, .., -1` times `2*pi/L`.
    pub fn wavenumbers(&self) -> &[f64] {
        &self.wavenumbers
    }

    /// Unnormalized forward DFT, in place.
    pub fn fft(&self, buf: &mut [Complex64]) {
        self.forward.process(buf);
    }

    /// Inverse DFT including the `1/n` factor, in place.
    pub fn ifft(&self, buf: &mut [Complex64]) {
        self.inverse.process(buf);
        let scale = 1.0 / self.n_points as f64;
        for z in buf.iter_mut() {
            *z *= scale;
        }
    }

    /// First derivative `IFFT(i k FFT(field))`.
    ///
    /// The Nyquist mode is its own alias (`+k_N` and `-k_N` sample identically),
    /// so its derivative is set to zero. That keeps the derivative of a real
    /// field real; every other mode is differentiated exactly.
    pub fn spectral_derivative(&self, field: &[Complex64]) -> Result<Vec<Complex64>> {
        check_len(self.n_points, field.len())?;
        let mut buf = field.to_vec();
        self.fft(&mut buf);
        let nyquist = self.n_points / 2;
        for (j, (z, &k)) in buf.iter_mut().zip(&self.wavenumbers).enumerate() {
            *z = if j == nyquist {
                Complex64::new(0.0, 0.0)
            } else {
                Complex64::new(-z.im * k, z.re * k)
            };
        }
        self.ifft(&mut buf);
        Ok(buf)
    }

    /// Rectangle-rule integral, which is the trapezoid rule on a periodic grid.
    pub fn integrate(&self, values: impl IntoIterator<Item = f64>) -> f64 {
        values.into_iter().sum::<f64>() * self.dx
    }

    /// `sum |psi_j|^2 dx`.
    pub fn norm(&self, psi: &[Complex64]) -> f64 {
        self.integrate(psi.iter().map(|z| z.norm_sqr()))
    }
}

/// Signed DFT frequency indices in standard order.
fn fft_frequencies(n: usize) -> impl Iterator<Item = f64> {
    let half = n / 2;
    (0..n).map(move |j| {
        if j < half {
            j as f64
        } else {
            j as f64 - n as f64
        }
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn eight_point_ladder() {
        let g = Grid::new(8, 0.0, 8.0).unwrap();
        assert_eq!(g.dx(), 1.0);
        let expected = [0.0, 1.0, 2.0, 3.0, -4.0, -3.0, -2.0, -1.0];
        for (k, f) in g.wavenumbers().iter().zip(expected) {
            assert!((k - 2.0 * PI / 8.0 * f).abs() < 1e-15);
        }
        // the Nyquist entry -n/2 has no positive partner
        let paired: f64 = g.wavenumbers().iter().enumerate().filter(|(j, _)| *j != 4).map(|(_, k)| k).sum();
        assert!(paired.abs() < 1e-12);
    }

    #[test]
    fn spacing_and_first_wavenumber() {
        let g = Grid::new(16, -10.0, 10.0).unwrap();
        assert_eq!(g.dx(), 1.25);
        assert!((g.wavenumbers()[1] - 0.314_159_265_358_979_3).abs() < 1e-15);
        assert_eq!(g.x(0), -10.0);
        assert_eq!(g.x(15), 8.75);
    }

    #[test]
    fn rejects_bad_grids() {
        assert!(Grid::new(8, 5.0, 5.0).is_err());
        assert!(Grid::new(8, 5.0, 1.0).is_err());
        assert!(Grid::new(12, 0.0, 1.0).is_err());
        assert!(Grid::new(4, 0.0, 1.0).is_err());
        assert!(Grid::new(16, f64::NAN, 1.0).is_err());
    }

    #[test]
    fn derivative_of_plane_wave() {
        let g = Grid::new(16, 0.0, 2.0 * PI).unwrap();
        let k1 = g.wavenumbers()[1];
        let f: Vec<_> = (0..16).map(|j| Complex64::from_polar(1.0, k1 * g.x(j))).collect();
        let d = g.spectral_derivative(&f).unwrap();
        for (dj, fj) in d.iter().zip(&f) {
            assert!((dj - c(0.0, k1) * fj).norm() < 1e-13);
        }
    }

    #[test]
    fn derivative_of_constant_vanishes() {
        let g = Grid::new(32, -3.0, 7.0).unwrap();
        let d = g.spectral_derivative(&vec![c(2.5, -1.0); 32]).unwrap();
        assert!(d.iter().all(|z| z.norm() < 1e-14));
    }

    #[test]
    fn derivative_of_sine_matches_cosine() {
        let g = Grid::new(64, -5.0, 5.0).unwrap();
        let k1 = g.wavenumbers()[1];
        let f: Vec<_> = g.positions().iter().map(|&x| c((k1 * x).sin(), 0.0)).collect();
        let d = g.spectral_derivative(&f).unwrap();
        let err = d
            .iter()
            .zip(g.positions())
            .map(|(dj, x)| (dj - c(k1 * (k1 * x).cos(), 0.0)).norm())
            .fold(0.0, f64::max);
        assert!(err < 1e-12, "max error {err}");
    }

    #[test]
    fn twice_differentiated_mode_gives_minus_k_squared() {
        let g = Grid::new(32, 0.0, 3.0).unwrap();
        for j in [1usize, 5, 15, 17, 31] {
            let k = g.wavenumbers()[j];
            let f: Vec<_> = g.positions().iter().map(|&x| Complex64::from_polar(1.0, k * x)).collect();
            let d2 = g.spectral_derivative(&g.spectral_derivative(&f).unwrap()).unwrap();
            for (a, b) in d2.iter().zip(&f) {
                assert!((a + k * k * b).norm() < 1e-10 * k * k);
            }
        }
    }

    #[test]
    fn derivative_of_real_field_is_real() {
        let g = Grid::new(16, -4.0, 4.0).unwrap();
        let f: Vec<_> = g.positions().iter().map(|&x| c((-x * x).exp() + 0.3 * x.cos(), 0.0)).collect();
        let d = g.spectral_derivative(&f).unwrap();
        assert!(d.iter().all(|z| z.im.abs() < 1e-15));
    }

    #[test]
    fn length_mismatch_is_reported() {
        let g = Grid::new(8, 0.0, 1.0).unwrap();
        assert_eq!(
            g.spectral_derivative(&[c(1.0, 0.0); 7]),
            Err(SolverError::LengthMismatch { expected: 8, actual: 7 })
        );
    }

    #[test]
    fn parseval_round_trip() {
        let g = Grid::new(128, -10.0, 10.0).unwrap();
        let f: Vec<_> = g
            .positions()
            .iter()
            .map(|&x| Complex64::from_polar((-x * x / 3.0).exp(), 0.7 * x))
            .collect();
        let before = g.norm(&f);
        let mut buf = f.clone();
        g.fft(&mut buf);
        let spectral = buf.iter().map(|z| z.norm_sqr()).sum::<f64>() * g.dx() / 128.0;
        g.ifft(&mut buf);
        let after = g.norm(&buf);
        assert!(((after - before) / before).abs() < 1e-12);
        assert!(((spectral - before) / before).abs() < 1e-12);
    }
}
