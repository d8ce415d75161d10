//! Hydrodynamic fields of a wavefunction: density, flow velocity and its
//! Eulerian time derivative.
//!
//! With `psi = sqrt(rho) exp(i S / hbar)` the flow velocity is `v = grad(S) / m`,
//! which equals `-i (hbar / 2m) grad ln(psi / psi*)`. We evaluate it as the
//! probability current over the density,
//!
//! ```text
//! v = (hbar / m) Im(psi* grad psi) / |psi|^2
//! ```
//!
//! which is the same quantity without a branch cut, so no phase unwrapping is
//! needed. Where `rho < density_floor * max(rho)` the phase carries no usable
//! information and the velocity is pinned to zero; such samples are marked
//! unresolved and never contribute to an acceleration.

use num_complex::Complex64;

use crate::error::{check_len, Result, SolverError};
use crate::grid::Grid;

/// Default floor on `rho / max(rho)` below which the velocity is not resolved.
pub const DEFAULT_DENSITY_FLOOR: f64 = 1e-12;

/// `|psi_j|^2` elementwise.
pub fn density(psi: &[Complex64]) -> Vec<f64> {
    psi.iter().map(|z| z.norm_sqr()).collect()
}

/// A velocity field together with the mask of samples where it is resolved.
#[derive(Debug, Clone, PartialEq)]
pub struct VelocitySample {
    pub velocity: Vec<f64>,
    pub resolved: Vec<bool>,
}

impl VelocitySample {
    pub fn len(&self) -> usize {
        self.velocity.len()
    }

    pub fn is_empty(&self) -> bool {
        self.velocity.is_empty()
    }
}

/// Flow velocity and its resolution mask.
pub fn resolve_velocity(
    psi: &[Complex64],
    grid: &Grid,
    hbar: f64,
    mass: f64,
    density_floor: f64,
) -> Result<VelocitySample> {
    check_len(grid.n_points(), psi.len())?;
    if !(density_floor > 0.0) {
        return Err(SolverError::param("density_floor", "must be > 0"));
    }
    let rho = density(psi);
    let rho_max = rho.iter().cloned().fold(0.0, f64::max);
    let n = psi.len();
    if !(rho_max > 0.0) {
        return Ok(VelocitySample {
            velocity: vec![0.0; n],
            resolved: vec![false; n],
        });
    }
    let threshold = density_floor * rho_max;
    let (carrier, phi, dphi) = demodulated_derivative(psi, grid);
    let scale = hbar / mass;
    let mut velocity = vec![0.0; n];
    let mut resolved = vec![false; n];
    for j in 0..n {
        if rho[j] >= threshold {
            let current = (phi[j].conj() * dphi[j]).im;
            velocity[j] = scale * (carrier + current / rho[j]);
            resolved[j] = true;
        }
    }
    Ok(VelocitySample { velocity, resolved })
}

/// Splits `psi = exp(i k_c x) phi` with `k_c` the grid wavenumber nearest the
/// spectral centroid and returns `(k_c, phi, d_x phi)`.
///
/// Then `Im(psi* d_x psi) = k_c |psi|^2 + Im(phi* d_x phi)`. The carrier part
/// is exact, so the FFT roundoff (which is relative to `max |d_x phi|`, not to
/// the local amplitude) stays small in the low-density tails.
fn demodulated_derivative(psi: &[Complex64], grid: &Grid) -> (f64, Vec<Complex64>, Vec<Complex64>) {
    let n = psi.len();
    let nyquist = n / 2;
    let ks = grid.wavenumbers();
    let mut spectrum = psi.to_vec();
    grid.fft(&mut spectrum);
    let (weighted, total) = spectrum
        .iter()
        .zip(ks)
        .enumerate()
        .filter(|(j, _)| *j != nyquist)
        .fold((0.0, 0.0), |(wk, w), (_, (c, k))| (wk + k * c.norm_sqr(), w + c.norm_sqr()));
    let centroid = if total > 0.0 { weighted / total } else { 0.0 };
    let dk = ks[1];
    let shift = ((centroid / dk).round() as i64).clamp(-(nyquist as i64) + 1, nyquist as i64 - 1);
    let carrier = shift as f64 * dk;
    let m = shift.rem_euclid(n as i64) as usize;

    // FFT(phi)_j = exp(-i k_c x_min) FFT(psi)_{j+m}
    let offset = Complex64::from_polar(1.0, -carrier * grid.x_min());
    let mut dphi: Vec<Complex64> = (0..n)
        .map(|j| {
            if j == nyquist {
                Complex64::new(0.0, 0.0)
            } else {
                Complex64::new(0.0, ks[j]) * offset * spectrum[(j + m) % n]
            }
        })
        .collect();
    grid.ifft(&mut dphi);
    let phi = if shift == 0 {
        psi.to_vec()
    } else {
        psi.iter()
            .enumerate()
            .map(|(j, z)| z * Complex64::from_polar(1.0, -carrier * grid.x(j)))
            .collect()
    };
    (carrier, phi, dphi)
}

/// Flow velocity `v = grad(S)/m`, zero below the density floor.
pub fn velocity_field(
    psi: &[Complex64],
    grid: &Grid,
    hbar: f64,
    mass: f64,
    density_floor: f64,
) -> Result<Vec<f64>> {
    resolve_velocity(psi, grid, hbar, mass, density_floor).map(|s| s.velocity)
}

/// Backward difference `(v_now - v_prev) / dt` at fixed position.
pub fn acceleration_field(v_now: &[f64], v_prev: &[f64], dt: f64) -> Result<Vec<f64>> {
    check_len(v_now.len(), v_prev.len())?;
    check_dt(dt)?;
    Ok(v_now
        .iter()
        .zip(v_prev)
        .map(|(a, b)| (a - b) / dt)
        .collect())
}

/// Second-order backward difference `(3 v_n - 4 v_{n-1} + v_{n-2}) / 2dt`.
pub fn acceleration_field_second_order(
    v_now: &[f64],
    v_prev: &[f64],
    v_prev2: &[f64],
    dt: f64,
) -> Result<Vec<f64>> {
    check_len(v_now.len(), v_prev.len())?;
    check_len(v_now.len(), v_prev2.len())?;
    check_dt(dt)?;
    Ok(v_now
        .iter()
        .zip(v_prev)
        .zip(v_prev2)
        .map(|((a, b), c)| (3.0 * a - 4.0 * b + c) / (2.0 * dt))
        .collect())
}

fn check_dt(dt: f64) -> Result<()> {
    if !(dt > 0.0) || !dt.is_finite() {
        return Err(SolverError::param("dt", format!("must be > 0, got {dt}")));
    }
    Ok(())
}

/// The last two velocity samples of a run, used to difference in time.
///
/// At a sample point the acceleration uses the second-order stencil when the
/// velocity was resolved at all three times, falls back to the first-order
/// difference when only the previous sample is available, and is zero
/// otherwise (including the very first call of a run).
#[derive(Debug, Clone, Default, PartialEq)]
pub struct VelocityHistory {
    prev: Option<VelocitySample>,
    prev2: Option<VelocitySample>,
}

impl VelocityHistory {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn previous(&self) -> Option<&VelocitySample> {
        self.prev.as_ref()
    }

    /// Acceleration of `current` relative to the stored history.
    pub fn acceleration(&self, current: &VelocitySample, dt: f64) -> Result<Vec<f64>> {
        check_dt(dt)?;
        let n = current.len();
        let mut accel = vec![0.0; n];
        let Some(prev) = &self.prev else {
            return Ok(accel);
        };
        check_len(n, prev.len())?;
        let first = acceleration_field(&current.velocity, &prev.velocity, dt)?;
        let second = match &self.prev2 {
            Some(p2) => Some((
                acceleration_field_second_order(&current.velocity, &prev.velocity, &p2.velocity, dt)?,
                &p2.resolved,
            )),
            None => None,
        };
        for j in 0..n {
            if !(current.resolved[j] && prev.resolved[j]) {
                continue;
            }
            accel[j] = match &second {
                Some((a2, mask2)) if mask2[j] => a2[j],
                _ => first[j],
            };
        }
        Ok(accel)
    }

    pub fn push(&mut self, sample: VelocitySample) {
        self.prev2 = self.prev.take();
        self.prev = Some(sample);
    }
}

/// Density, velocity and acceleration of one wavefunction sample.
#[derive(Debug, Clone, PartialEq)]
pub struct MadelungFields {
    pub density: Vec<f64>,
    pub velocity: Vec<f64>,
    pub acceleration: Vec<f64>,
    pub resolved: Vec<bool>,
    pub density_floor: f64,
}

impl MadelungFields {
    /// Extracts the fields of `psi`, differencing against `history` for the
    /// acceleration. The history is not modified.
    pub fn extract(
        psi: &[Complex64],
        grid: &Grid,
        hbar: f64,
        mass: f64,
        density_floor: f64,
        history: &VelocityHistory,
        dt: f64,
    ) -> Result<Self> {
        let sample = resolve_velocity(psi, grid, hbar, mass, density_floor)?;
        let acceleration = history.acceleration(&sample, dt)?;
        Ok(MadelungFields {
            density: density(psi),
            velocity: sample.velocity,
            acceleration,
            resolved: sample.resolved,
            density_floor,
        })
    }
}
