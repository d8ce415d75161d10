//! Time integration of
//!
//! ```text
//! i hbar d_t psi = [ -(hbar^2 / 2m) d_xx + V(x) + W(x, t) ] psi
//! ```
//!
//! where `W` is the work field of the chosen dissipation model. `W` is treated
//! explicitly: it is frozen inside each sub-step and refreshed once per step
//! from the velocity and acceleration of the freshly propagated state.

use std::f64::consts::FRAC_PI_4;
use std::fmt;
use std::str::FromStr;

use num_complex::Complex64;

use crate::diagnostics::{energy_report, EnergyReport};
use crate::dissipation::DissipationModel;
use crate::error::{check_len, Result, SolverError};
use crate::grid::Grid;
use crate::madelung::{resolve_velocity, VelocityHistory, VelocitySample, DEFAULT_DENSITY_FLOOR};
use crate::memory::WorkField;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Scheme {
    /// Strang splitting with exact Fourier-space kinetic propagation.
    #[default]
    Strang,
    /// Crank–Nicolson with a three-point periodic Laplacian.
    CrankNicolson,
}

impl Scheme {
    pub fn name(self) -> &'static str {
        match self {
            Scheme::Strang => "strang",
            Scheme::CrankNicolson => "cn",
        }
    }
}

impl fmt::Display for Scheme {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Scheme {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        match s {
            "strang" => Ok(Scheme::Strang),
            "cn" => Ok(Scheme::CrankNicolson),
            _ => Err(format!("unknown scheme `{s}`, expected one of: strang, cn")),
        }
    }
}

/// Physical and numerical constants of a run.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SimParams {
    pub hbar: f64,
    pub mass: f64,
    pub dt: f64,
    pub density_floor: f64,
    /// Extra fixed-point passes that recompute `W` from the end-of-step state.
    pub picard_iterations: u32,
}

impl Default for SimParams {
    fn default() -> Self {
        SimParams {
            hbar: 1.0,
            mass: 1.0,
            dt: 1e-3,
            density_floor: DEFAULT_DENSITY_FLOOR,
            picard_iterations: 0,
        }
    }
}

impl SimParams {
    pub fn with_dt(self, dt: f64) -> Self {
        SimParams { dt, ..self }
    }

    fn validate(&self) -> Result<()> {
        for (name, value) in [
            ("hbar", self.hbar),
            ("mass", self.mass),
            ("dt", self.dt),
            ("density_floor", self.density_floor),
        ] {
            if !(value > 0.0) || !value.is_finite() {
                return Err(SolverError::param(name, format!("must be > 0, got {value}")));
            }
        }
        Ok(())
    }
}

/// Everything needed to continue a run.
#[derive(Debug, Clone)]
pub struct SimState {
    psi: Vec<Complex64>,
    grid: Grid,
    steps: u64,
    work: WorkField,
    history: VelocityHistory,
    model: DissipationModel,
    potential: Vec<f64>,
    params: SimParams,
    kinetic_phase: Vec<Complex64>,
}

impl SimState {
    /// Sets up a run at `t = 0`.
    ///
    /// The initial velocity field is recorded and the first trapezoid panel of
    /// `W` starts from `g(v_0, 0)`. No earlier velocity exists, so once the
    /// first step produces `v_1` that panel is restarted from
    /// `g(v_0, (v_1 - v_0) / dt)`.
    pub fn new(
        grid: Grid,
        psi: Vec<Complex64>,
        potential: Vec<f64>,
        model: DissipationModel,
        params: SimParams,
    ) -> Result<Self> {
        params.validate()?;
        let n = grid.n_points();
        check_len(n, psi.len())?;
        check_len(n, potential.len())?;
        if psi.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
            return Err(SolverError::param("psi", "initial state has non-finite samples"));
        }
        if potential.iter().any(|v| !v.is_finite()) {
            return Err(SolverError::param("potential", "has non-finite samples"));
        }
        let kinetic_phase = kinetic_phase(&grid, &params);
        let mut history = VelocityHistory::new();
        let work = if model.is_inert() {
            WorkField::new(n)
        } else {
            let sample = resolve_velocity(&psi, &grid, params.hbar, params.mass, params.density_floor)?;
            let g0 = model.integrand(&sample.velocity, &vec![0.0; n])?;
            history.push(sample);
            WorkField::primed(g0)
        };
        Ok(SimState {
            psi,
            grid,
            steps: 0,
            work,
            history,
            model,
            potential,
            params,
            kinetic_phase,
        })
    }

    pub fn psi(&self) -> &[Complex64] {
        &self.psi
    }

    /// Mutable access to the wavefunction, e.g. for time-reversal by conjugation.
    pub fn psi_mut(&mut self) -> &mut [Complex64] {
        &mut self.psi
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn t(&self) -> f64 {
        self.steps as f64 * self.params.dt
    }

    pub fn steps(&self) -> u64 {
        self.steps
    }

    pub fn work(&self) -> &WorkField {
        &self.work
    }

    pub fn model(&self) -> &DissipationModel {
        &self.model
    }

    pub fn potential(&self) -> &[f64] {
        &self.potential
    }

    pub fn params(&self) -> &SimParams {
        &self.params
    }

    /// The velocity field of the last completed step (or of `t = 0`). `None`
    /// for inert models, which never sample it.
    pub fn velocity(&self) -> Option<&VelocitySample> {
        self.history.previous()
    }

    /// `max|V + W| dt / hbar`, the largest phase advanced by one potential step.
    pub fn phase_step_ratio(&self) -> f64 {
        let max = self
            .potential
            .iter()
            .zip(self.work.values())
            .map(|(v, w)| (v + w).abs())
            .fold(0.0, f64::max);
        max * self.params.dt / self.params.hbar
    }

    pub fn step(&mut self, scheme: Scheme) -> Result<()> {
        match scheme {
            Scheme::Strang => self.strang_step(),
            Scheme::CrankNicolson => self.cn_step(),
        }
    }

    /// One Strang step: half potential kick, exact kinetic drift, `W` refresh,
    /// half potential kick with the refreshed `W`.
    pub fn strang_step(&mut self) -> Result<()> {
        self.guard_phase_step()?;
        let dt = self.params.dt;
        let mut psi = self.psi.clone();
        apply_potential_phase(&mut psi, &self.potential, self.work.values(), 0.5 * dt, self.params.hbar);
        self.grid.fft(&mut psi);
        for (z, p) in psi.iter_mut().zip(&self.kinetic_phase) {
            *z *= p;
        }
        self.grid.ifft(&mut psi);

        let mut work = self.work.clone();
        let mut history = self.history.clone();
        if !self.model.is_inert() {
            // The velocity is sampled at the end of the step. The closing kick is
            // applied with the old W first; Picard passes redo it with the new W.
            let mut w_kick = self.work.values().to_vec();
            let mut sample = None;
            for _ in 0..=self.params.picard_iterations {
                let mut trial = psi.clone();
                apply_potential_phase(&mut trial, &self.potential, &w_kick, 0.5 * dt, self.params.hbar);
                let (s, w) = self.refresh_work(&trial)?;
                w_kick = w.values().to_vec();
                work = w;
                sample = Some(s);
            }
            history.push(sample.expect("at least one pass"));
        }
        apply_potential_phase(&mut psi, &self.potential, work.values(), 0.5 * dt, self.params.hbar);
        self.commit(psi, work, history)
    }

    /// One Crank–Nicolson step with the three-point periodic Laplacian.
    ///
    /// `W` is evaluated at the half step by extrapolating along the last
    /// integrand sample, then refreshed from the new state as in
    /// [`SimState::strang_step`].
    pub fn cn_step(&mut self) -> Result<()> {
        self.guard_phase_step()?;
        let dt = self.params.dt;
        let (hbar, mass) = (self.params.hbar, self.params.mass);
        let n = self.grid.n_points();
        let dx = self.grid.dx();
        let w_mid = if self.model.is_inert() {
            vec![0.0; n]
        } else {
            self.work.extrapolated(0.5 * dt)
        };
        let hop = hbar * hbar / (2.0 * mass * dx * dx);
        let half = Complex64::new(0.0, 0.5 * dt / hbar);
        let diag: Vec<Complex64> = (0..n)
            .map(|j| 1.0 + half * (2.0 * hop + self.potential[j] + w_mid[j]))
            .collect();
        let off = -half * hop;
        let rhs: Vec<Complex64> = (0..n)
            .map(|j| {
                let left = self.psi[(j + n - 1) % n];
                let right = self.psi[(j + 1) % n];
                let h_psi =
                    (2.0 * hop + self.potential[j] + w_mid[j]) * self.psi[j] - hop * (left + right);
                self.psi[j] - half * h_psi
            })
            .collect();
        let psi = solve_cyclic_tridiagonal(off, &diag, off, &rhs)?;

        let mut work = self.work.clone();
        let mut history = self.history.clone();
        if !self.model.is_inert() {
            let (sample, w) = self.refresh_work(&psi)?;
            work = w;
            history.push(sample);
        }
        self.commit(psi, work, history)
    }

    /// Velocity of `psi`, and the work field advanced by one panel.
    fn refresh_work(&self, psi: &[Complex64]) -> Result<(VelocitySample, WorkField)> {
        let p = &self.params;
        let sample = resolve_velocity(psi, &self.grid, p.hbar, p.mass, p.density_floor)?;
        let accel = self.history.acceleration(&sample, p.dt)?;
        let g = self.model.integrand(&sample.velocity, &accel)?;
        let mut work = self.work.clone();
        if self.steps == 0 && self.model.kind().needs_acceleration() {
            if let Some(start) = self.history.previous() {
                work.reprime(&self.model.integrand(&start.velocity, &accel)?)?;
            }
        }
        work.update(&g, p.dt)?;
        Ok((sample, work))
    }

    fn guard_phase_step(&self) -> Result<()> {
        let ratio = self.phase_step_ratio();
        if !(ratio <= FRAC_PI_4) {
            return Err(SolverError::PhaseAliasing {
                step: self.steps,
                ratio,
            });
        }
        Ok(())
    }

    fn commit(&mut self, psi: Vec<Complex64>, work: WorkField, history: VelocityHistory) -> Result<()> {
        if let Some(j) = psi.iter().position(|z| !z.re.is_finite() || !z.im.is_finite()) {
            return Err(SolverError::Instability {
                step: self.steps + 1,
                t: self.t() + self.params.dt,
                detail: format!("psi[{j}] = {} at x = {}", psi[j], self.grid.x(j)),
            });
        }
        if let Some(j) = work.values().iter().position(|w| !w.is_finite()) {
            return Err(SolverError::Instability {
                step: self.steps + 1,
                t: self.t() + self.params.dt,
                detail: format!("work field W[{j}] = {} at x = {}", work.values()[j], self.grid.x(j)),
            });
        }
        self.psi = psi;
        self.work = work;
        self.history = history;
        self.steps += 1;
        Ok(())
    }
}

fn kinetic_phase(grid: &Grid, params: &SimParams) -> Vec<Complex64> {
    let c = params.hbar * params.dt / (2.0 * params.mass);
    grid.wavenumbers()
        .iter()
        .map(|k| Complex64::from_polar(1.0, -c * k * k))
        .collect()
}

/// `psi <- exp(-i (V + W) tau / hbar) psi`.
fn apply_potential_phase(psi: &mut [Complex64], v: &[f64], w: &[f64], tau: f64, hbar: f64) {
    let c = tau / hbar;
    for ((z, v), w) in psi.iter_mut().zip(v).zip(w) {
        *z *= Complex64::from_polar(1.0, -c * (v + w));
    }
}

/// Solves a periodic tridiagonal system with constant off-diagonals:
/// `lower x[j-1] + diag[j] x[j] + upper x[j+1] = rhs[j]`, indices mod n.
fn solve_cyclic_tridiagonal(
    lower: Complex64,
    diag: &[Complex64],
    upper: Complex64,
    rhs: &[Complex64],
) -> Result<Vec<Complex64>> {
    let n = diag.len();
    check_len(n, rhs.len())?;
    if n < 3 {
        return Err(SolverError::LinearSolve("cyclic system needs at least 3 unknowns".into()));
    }
    // Sherman–Morrison: A = T + u v^T with u = (gamma, 0, .., 0, lower),
    // v = (1, 0, .., 0, upper / gamma).
    let corner_top = lower; // A[0][n-1]
    let corner_bottom = upper; // A[n-1][0]
    let gamma = -diag[0];
    let mut b = diag.to_vec();
    b[0] -= gamma;
    b[n - 1] -= corner_bottom * corner_top / gamma;
    let x = solve_tridiagonal(lower, &b, upper, rhs)?;
    let mut u = vec![Complex64::new(0.0, 0.0); n];
    u[0] = gamma;
    u[n - 1] = corner_bottom;
    let z = solve_tridiagonal(lower, &b, upper, &u)?;
    let denom = 1.0 + z[0] + corner_top * z[n - 1] / gamma;
    if denom.norm() < f64::EPSILON {
        return Err(SolverError::LinearSolve("singular Sherman-Morrison update".into()));
    }
    let fact = (x[0] + corner_top * x[n - 1] / gamma) / denom;
    Ok(x.iter().zip(&z).map(|(xi, zi)| xi - fact * zi).collect())
}

fn solve_tridiagonal(
    lower: Complex64,
    diag: &[Complex64],
    upper: Complex64,
    rhs: &[Complex64],
) -> Result<Vec<Complex64>> {
    let n = diag.len();
    let mut c = vec![Complex64::new(0.0, 0.0); n];
    let mut d = vec![Complex64::new(0.0, 0.0); n];
    let mut pivot = diag[0];
    for j in 0..n {
        if j > 0 {
            pivot = diag[j] - lower * c[j - 1];
        }
        if pivot.norm() < f64::MIN_POSITIVE {
            return Err(SolverError::LinearSolve(format!("zero pivot at row {j}")));
        }
        c[j] = upper / pivot;
        d[j] = if j == 0 { rhs[0] / pivot } else { (rhs[j] - lower * d[j - 1]) / pivot };
    }
    for j in (0..n - 1).rev() {
        let next = d[j + 1];
        d[j] -= c[j] * next;
    }
    Ok(d)
}

/// Advances `state` by `n_steps`, calling `observer` with an [`EnergyReport`]
/// before the first step and after every `report_stride` steps.
///
/// A `report_stride` of zero disables reporting. Errors from the observer
/// abort the run and surface as [`SolverError::Observer`].
pub fn evolve<F, E>(
    state: &mut SimState,
    n_steps: u64,
    scheme: Scheme,
    report_stride: u64,
    mut observer: F,
) -> Result<()>
where
    F: FnMut(&SimState, &EnergyReport) -> std::result::Result<(), E>,
    E: fmt::Display,
{
    let mut notify = |state: &SimState| {
        observer(state, &energy_report(state)).map_err(|e| SolverError::Observer(e.to_string()))
    };
    if report_stride > 0 {
        notify(state)?;
    }
    for i in 1..=n_steps {
        state.step(scheme)?;
        if report_stride > 0 && i % report_stride == 0 {
            notify(state)?;
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dissipation::ModelKind;
    use crate::scenarios::{gaussian_packet, make_potential, PotentialKind};
    use std::convert::Infallible;
    use std::f64::consts::PI;

    fn free_state(model: DissipationModel, n: usize, params: SimParams) -> SimState {
        let g = Grid::new(n, -20.0, 20.0).unwrap();
        let psi = gaussian_packet(&g, 0.0, 1.0, 0.5, params.hbar).unwrap();
        SimState::new(g, psi, vec![0.0; n], model, params).unwrap()
    }

    #[test]
    fn cyclic_solver_matches_dense_product() {
        let n = 7;
        let lower = Complex64::new(0.3, -0.2);
        let upper = Complex64::new(-0.1, 0.4);
        let diag: Vec<_> = (0..n).map(|j| Complex64::new(2.0 + j as f64 * 0.1, 0.5)).collect();
        let x_true: Vec<_> = (0..n).map(|j| Complex64::new(j as f64 - 2.0, 1.0 / (1.0 + j as f64))).collect();
        let rhs: Vec<_> = (0..n)
            .map(|j| lower * x_true[(j + n - 1) % n] + diag[j] * x_true[j] + upper * x_true[(j + 1) % n])
            .collect();
        let x = solve_cyclic_tridiagonal(lower, &diag, upper, &rhs).unwrap();
        for (a, b) in x.iter().zip(&x_true) {
            assert!((a - b).norm() < 1e-12);
        }
    }

    #[test]
    fn plane_wave_phase_advance() {
        let g = Grid::new(64, 0.0, 10.0).unwrap();
        let k1 = g.wavenumbers()[3];
        let psi0: Vec<_> = g.positions().iter().map(|&x| Complex64::from_polar(0.3, k1 * x)).collect();
        let params = SimParams::default().with_dt(0.01);
        let mut s = SimState::new(g.clone(), psi0.clone(), vec![0.0; 64], DissipationModel::none(), params).unwrap();
        for _ in 0..500 {
            s.strang_step().unwrap();
        }
        let phase = Complex64::from_polar(1.0, -k1 * k1 * s.t() / 2.0);
        for (a, b) in s.psi().iter().zip(&psi0) {
            assert!((a - b * phase).norm() < 1e-12);
        }
    }

    #[test]
    fn zero_kappa_is_bitwise_linear() {
        let params = SimParams::default().with_dt(2e-3);
        let mut reference = free_state(DissipationModel::none(), 128, params);
        for _ in 0..50 {
            reference.strang_step().unwrap();
        }
        for kind in ModelKind::ALL {
            let mut s = free_state(DissipationModel::new(kind, 0.0).unwrap(), 128, params);
            for _ in 0..50 {
                s.strang_step().unwrap();
            }
            assert_eq!(s.psi(), reference.psi(), "{kind}");
        }
    }

    #[test]
    fn tiny_step_barely_moves_state() {
        for scheme in [Scheme::Strang, Scheme::CrankNicolson] {
            let mut changes = Vec::new();
            for dt in [1e-4, 1e-5] {
                let mut s = free_state(DissipationModel::none(), 128, SimParams::default().with_dt(dt));
                let before = s.psi().to_vec();
                s.step(scheme).unwrap();
                let diff: f64 = s.psi().iter().zip(&before).map(|(a, b)| (a - b).norm_sqr()).sum();
                changes.push(diff.sqrt());
            }
            let ratio = changes[0] / changes[1];
            assert!((ratio - 10.0).abs() < 0.5, "{scheme}: {changes:?}");
        }
    }

    #[test]
    fn norm_is_conserved_with_dissipation() {
        let g = Grid::new(256, -20.0, 20.0).unwrap();
        let v = make_potential(&g, PotentialKind::Harmonic { omega: 1.0 }, 1.0).unwrap();
        let psi = gaussian_packet(&g, 3.0, 0.5, 0.0, 1.0).unwrap();
        for kind in [ModelKind::Radiative, ModelKind::LinearDrag, ModelKind::AccelDrag] {
            let model = DissipationModel::new(kind, 0.2).unwrap();
            let mut s = SimState::new(g.clone(), psi.clone(), v.clone(), model, SimParams::default()).unwrap();
            let n0 = g.norm(s.psi());
            for _ in 0..300 {
                s.strang_step().unwrap();
            }
            assert!((g.norm(s.psi()) / n0 - 1.0).abs() < 1e-11, "{kind}");
        }
    }

    #[test]
    fn phase_guard_trips() {
        let g = Grid::new(64, -20.0, 20.0).unwrap();
        let v = vec![1000.0; 64];
        let psi = gaussian_packet(&g, 0.0, 1.0, 0.0, 1.0).unwrap();
        let mut s = SimState::new(g, psi, v, DissipationModel::none(), SimParams::default()).unwrap();
        assert!(matches!(s.strang_step(), Err(SolverError::PhaseAliasing { step: 0, .. })));
        assert_eq!(s.steps(), 0);
    }

    #[test]
    fn non_finite_state_is_an_instability() {
        let g = Grid::new(64, -20.0, 20.0).unwrap();
        let mut psi = gaussian_packet(&g, 0.0, 1.0, 0.0, 1.0).unwrap();
        assert!(SimState::new(g.clone(), {
            let mut bad = psi.clone();
            bad[3] = Complex64::new(f64::NAN, 0.0);
            bad
        }, vec![0.0; 64], DissipationModel::none(), SimParams::default())
        .is_err());
        let mut s = SimState::new(g, psi.clone(), vec![0.0; 64], DissipationModel::none(), SimParams::default()).unwrap();
        psi[10] = Complex64::new(f64::INFINITY, 0.0);
        s.psi_mut().copy_from_slice(&psi);
        let err = s.strang_step().unwrap_err();
        assert!(matches!(err, SolverError::Instability { step: 1, .. }), "{err}");
        assert_eq!(s.steps(), 0);
    }

    #[test]
    fn evolve_report_counting() {
        let mut s = free_state(DissipationModel::none(), 64, SimParams::default());
        let mut count = 0;
        evolve(&mut s, 100, Scheme::Strang, 10, |_, _| {
            count += 1;
            Ok::<(), Infallible>(())
        })
        .unwrap();
        assert_eq!(count, 11);
        assert_eq!(s.steps(), 100);
        assert!((s.t() - 0.1).abs() < 1e-15);
    }

    #[test]
    fn evolve_zero_steps_is_identity() {
        let mut s = free_state(DissipationModel::new(ModelKind::LinearDrag, 0.1).unwrap(), 64, SimParams::default());
        let before = s.psi().to_vec();
        let mut reports = Vec::new();
        evolve(&mut s, 0, Scheme::Strang, 1, |_, r| {
            reports.push(r.clone());
            Ok::<(), Infallible>(())
        })
        .unwrap();
        assert_eq!(s.psi(), &before[..]);
        assert_eq!(s.steps(), 0);
        assert_eq!(reports.len(), 1);
    }

    #[test]
    fn observer_failure_aborts() {
        let mut s = free_state(DissipationModel::none(), 64, SimParams::default());
        let err = evolve(&mut s, 100, Scheme::Strang, 5, |st, _| {
            if st.steps() >= 20 {
                Err("disk full")
            } else {
                Ok(())
            }
        })
        .unwrap_err();
        assert_eq!(err, SolverError::Observer("disk full".into()));
        assert_eq!(s.steps(), 20);
    }

    #[test]
    fn scheme_names() {
        assert_eq!("cn".parse::<Scheme>().unwrap(), Scheme::CrankNicolson);
        assert_eq!("strang".parse::<Scheme>().unwrap(), Scheme::Strang);
        assert!("rk4".parse::<Scheme>().is_err());
    }

    #[test]
    fn cn_plane_wave_follows_discrete_dispersion() {
        let g = Grid::new(64, 0.0, 2.0 * PI).unwrap();
        let k = g.wavenumbers()[2];
        let dx = g.dx();
        let dt = 0.01;
        let psi0: Vec<_> = g.positions().iter().map(|&x| Complex64::from_polar(1.0, k * x)).collect();
        let mut s = SimState::new(g, psi0.clone(), vec![0.0; 64], DissipationModel::none(), SimParams::default().with_dt(dt)).unwrap();
        let steps = 200;
        for _ in 0..steps {
            s.cn_step().unwrap();
        }
        // Cayley transform of the discrete energy E = (1 - cos k dx) / dx^2
        let e = (1.0 - (k * dx).cos()) / (dx * dx);
        let z = Complex64::new(1.0, -0.5 * e * dt) / Complex64::new(1.0, 0.5 * e * dt);
        let factor = z.powu(steps);
        for (a, b) in s.psi().iter().zip(&psi0) {
            assert!((a - b * factor).norm() < 1e-10);
        }
    }
}
