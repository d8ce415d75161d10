//! Brute-force reference integrator for validating the production steppers.
//!
//! Classical RK4 in time on the full right-hand side, with centered finite
//! differences in space: the three-point Laplacian for the kinetic term and a
//! centered first difference for the flow velocity. Nothing here touches the
//! FFT. The work field follows the same memory rule as the production code
//! (trapezoid panels, masked backward-difference accelerations); inside a step
//! it is advanced linearly along the last integrand, `W(t_n + s) = W_n + s g_n`.
//!
//! Meant for small grids and tests only.

use num_complex::Complex64;

use crate::dissipation::DissipationModel;
use crate::error::{check_len, Result, SolverError};
use crate::grid::Grid;
use crate::madelung::{VelocityHistory, VelocitySample};
use crate::memory::WorkField;
use crate::stepper::SimParams;

pub const MAX_POINTS: usize = 128;
/// Explicit stability guard: `dt <= STABILITY_FACTOR * dx^2 * m / hbar`.
pub const STABILITY_FACTOR: f64 = 0.2;

#[derive(Debug, Clone)]
pub struct OracleConfig {
    pub grid: Grid,
    pub psi0: Vec<Complex64>,
    pub potential: Vec<f64>,
    pub model: DissipationModel,
    pub params: SimParams,
}

impl OracleConfig {
    pub fn validate(&self) -> Result<()> {
        let n = self.grid.n_points();
        if n > MAX_POINTS {
            return Err(SolverError::param(
                "n_points",
                format!("oracle supports at most {MAX_POINTS} points, got {n}"),
            ));
        }
        check_len(n, self.psi0.len())?;
        check_len(n, self.potential.len())?;
        let p = &self.params;
        let limit = STABILITY_FACTOR * self.grid.dx().powi(2) * p.mass / p.hbar;
        if !(p.dt > 0.0) || p.dt > limit {
            return Err(SolverError::param(
                "dt",
                format!("oracle requires 0 < dt <= {limit:e}, got {:e}", p.dt),
            ));
        }
        Ok(())
    }
}

/// Final state of an oracle run.
#[derive(Debug, Clone)]
pub struct OracleRun {
    pub psi: Vec<Complex64>,
    pub work: WorkField,
    pub initial_velocity: Vec<f64>,
    /// `None` for inert models.
    pub final_velocity: Option<VelocitySample>,
}

/// Final wavefunction after `n_steps` RK4 steps.
pub fn rk4_reference(config: &OracleConfig, n_steps: u64) -> Result<Vec<Complex64>> {
    rk4_run(config, n_steps).map(|run| run.psi)
}

pub fn rk4_run(config: &OracleConfig, n_steps: u64) -> Result<OracleRun> {
    config.validate()?;
    let p = config.params;
    let n = config.grid.n_points();
    let dx = config.grid.dx();
    let model = config.model;
    let mut psi = config.psi0.clone();

    let first = fd_velocity(&psi, dx, p.hbar, p.mass, p.density_floor);
    let initial_velocity = first.velocity.clone();
    let mut history = VelocityHistory::new();
    let mut work = if model.is_inert() {
        WorkField::new(n)
    } else {
        let g0: Vec<f64> = first.velocity.iter().map(|&v| model.integrand_at(v, 0.0)).collect();
        history.push(first);
        WorkField::primed(g0)
    };

    let rhs = |psi: &[Complex64], u: &[f64]| -> Vec<Complex64> {
        let c = p.hbar * p.hbar / (2.0 * p.mass * dx * dx);
        let minus_i_over_hbar = Complex64::new(0.0, -1.0 / p.hbar);
        (0..n)
            .map(|j| {
                let lap = psi[(j + 1) % n] + psi[(j + n - 1) % n] - 2.0 * psi[j];
                minus_i_over_hbar * (-c * lap + u[j] * psi[j])
            })
            .collect()
    };
    let axpy = |base: &[Complex64], k: &[Complex64], h: f64| -> Vec<Complex64> {
        base.iter().zip(k).map(|(b, k)| b + h * k).collect()
    };

    let dt = p.dt;
    for step in 0..n_steps {
        let u_at = |s: f64| -> Vec<f64> {
            config
                .potential
                .iter()
                .zip(work.extrapolated(s))
                .map(|(v, w)| v + w)
                .collect()
        };
        let (u0, u_half, u1) = (u_at(0.0), u_at(0.5 * dt), u_at(dt));
        let k1 = rhs(&psi, &u0);
        let k2 = rhs(&axpy(&psi, &k1, 0.5 * dt), &u_half);
        let k3 = rhs(&axpy(&psi, &k2, 0.5 * dt), &u_half);
        let k4 = rhs(&axpy(&psi, &k3, dt), &u1);
        for j in 0..n {
            psi[j] += dt / 6.0 * (k1[j] + 2.0 * k2[j] + 2.0 * k3[j] + k4[j]);
        }
        if psi.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
            return Err(SolverError::Instability {
                step: step + 1,
                t: (step + 1) as f64 * dt,
                detail: "oracle state became non-finite".into(),
            });
        }
        if !model.is_inert() {
            let sample = fd_velocity(&psi, dx, p.hbar, p.mass, p.density_floor);
            let accel = history.acceleration(&sample, dt)?;
            let g: Vec<f64> = sample
                .velocity
                .iter()
                .zip(&accel)
                .map(|(&v, &a)| model.integrand_at(v, a))
                .collect();
            if step == 0 && model.kind().needs_acceleration() {
                let start = history.previous().expect("initial sample recorded");
                let g0: Vec<f64> = start.velocity.iter().zip(&accel).map(|(&v, &a)| model.integrand_at(v, a)).collect();
                work.reprime(&g0)?;
            }
            work.update(&g, dt)?;
            history.push(sample);
        }
    }
    Ok(OracleRun {
        psi,
        work,
        initial_velocity,
        final_velocity: history.previous().cloned(),
    })
}

/// `(hbar/m) Im(psi* D1 psi) / |psi|^2` with the centered periodic difference.
fn fd_velocity(psi: &[Complex64], dx: f64, hbar: f64, mass: f64, floor: f64) -> VelocitySample {
    let n = psi.len();
    let rho_max = psi.iter().map(|z| z.norm_sqr()).fold(0.0, f64::max);
    let mut velocity = vec![0.0; n];
    let mut resolved = vec![false; n];
    if rho_max > 0.0 {
        for j in 0..n {
            let rho = psi[j].norm_sqr();
            if rho >= floor * rho_max {
                let d = (psi[(j + 1) % n] - psi[(j + n - 1) % n]) / (2.0 * dx);
                velocity[j] = hbar / mass * (psi[j].conj() * d).im / rho;
                resolved[j] = true;
            }
        }
    }
    VelocitySample { velocity, resolved }
}
