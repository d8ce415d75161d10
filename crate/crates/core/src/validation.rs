//! Self-checks runnable from the command line. Each suite returns one
//! [`Check`] per measured property with the tolerance it is held to.

use std::f64::consts::PI;
use std::fmt;
use std::str::FromStr;

use num_complex::Complex64;

use crate::diagnostics::EnergyReport;
use crate::dissipation::{CubeConvention, DissipationModel, ModelKind};
use crate::error::Result;
use crate::grid::Grid;
use crate::oracle::{rk4_reference, OracleConfig};
use crate::scenarios::{gaussian_packet, make_potential, PotentialKind, Scenario};
use crate::stepper::{evolve, Scheme, SimParams, SimState};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Suite {
    LinearLimit,
    Convergence,
    ClosedForm,
    Oracle,
}

impl Suite {
    pub const ALL: [Suite; 4] = [Suite::LinearLimit, Suite::Convergence, Suite::ClosedForm, Suite::Oracle];

    pub fn name(self) -> &'static str {
        match self {
            Suite::LinearLimit => "linear-limit",
            Suite::Convergence => "convergence",
            Suite::ClosedForm => "closed-form",
            Suite::Oracle => "oracle",
        }
    }
}

impl fmt::Display for Suite {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Suite {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        Suite::ALL.into_iter().find(|suite| suite.name() == s).ok_or_else(|| {
            let names: Vec<_> = Suite::ALL.iter().map(|s| s.name()).collect();
            format!("unknown suite `{s}`, expected one of: {}", names.join(", "))
        })
    }
}

/// How a measured value is compared with its tolerance.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Bound {
    /// Pass when `measured <= tolerance`.
    AtMost,
    /// Pass when `measured >= tolerance`.
    AtLeast,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Check {
    pub name: String,
    pub measured: f64,
    pub tolerance: f64,
    pub bound: Bound,
    pub passed: bool,
}

impl Check {
    fn new(name: impl Into<String>, measured: f64, bound: Bound, tolerance: f64) -> Self {
        let passed = match bound {
            Bound::AtMost => measured <= tolerance,
            Bound::AtLeast => measured >= tolerance,
        };
        Check { name: name.into(), measured, tolerance, bound, passed }
    }
}

pub fn run_suite(suite: Suite) -> Result<Vec<Check>> {
    match suite {
        Suite::LinearLimit => linear_limit(),
        Suite::Convergence => convergence(),
        Suite::ClosedForm => closed_form(),
        Suite::Oracle => oracle(),
    }
}

fn scenario_state(name: &str, model: DissipationModel, dt: f64) -> Result<(SimState, Scenario)> {
    let sc = Scenario::named(name, 1.0, 1.0).expect("built-in scenario");
    let grid = sc.grid()?;
    let psi = sc.initial_state(&grid, 1.0)?;
    let v = sc.potential(&grid, 1.0)?;
    let state = SimState::new(grid, psi, v, model, SimParams::default().with_dt(dt))?;
    Ok((state, sc))
}

fn reports(state: &mut SimState, n: u64, stride: u64) -> Result<Vec<EnergyReport>> {
    let mut rows = Vec::new();
    evolve(state, n, Scheme::Strang, stride, |_, r| {
        rows.push(r.clone());
        Ok::<(), std::convert::Infallible>(())
    })?;
    Ok(rows)
}

fn worst_order(errors: &[f64]) -> f64 {
    errors.windows(2).map(|w| (w[0] / w[1]).log2()).fold(f64::INFINITY, f64::min)
}

fn l2_distance(grid: &Grid, a: &[Complex64], b: &[Complex64]) -> f64 {
    grid.integrate(a.iter().zip(b).map(|(x, y)| (x - y).norm_sqr())).sqrt()
}

fn dissipative_models(kappa: f64) -> Vec<DissipationModel> {
    let mut out: Vec<_> = [ModelKind::Radiative, ModelKind::LinearDrag, ModelKind::AccelDrag]
        .into_iter()
        .map(|k| DissipationModel::new(k, kappa).expect("kappa >= 0"))
        .collect();
    for cube in [CubeConvention::Literal, CubeConvention::SpeedWeighted] {
        out.push(
            DissipationModel::new(ModelKind::QuadraticDrag, kappa)
                .expect("kappa >= 0")
                .with_cube_convention(cube),
        );
    }
    out
}

fn linear_limit() -> Result<Vec<Check>> {
    let mut checks = Vec::new();

    let (mut reference, _) = scenario_state("damped-harmonic", DissipationModel::none(), 1e-3)?;
    let expected = reports(&mut reference, 200, 1)?;
    let mut differing = 0usize;
    for model in dissipative_models(0.0) {
        let (mut s, _) = scenario_state("damped-harmonic", model, 1e-3)?;
        let rows = reports(&mut s, 200, 1)?;
        differing += rows
            .iter()
            .zip(&expected)
            .flat_map(|(a, b)| a.fields().into_iter().zip(b.fields()))
            .filter(|(x, y)| x.to_bits() != y.to_bits())
            .count();
    }
    checks.push(Check::new("kappa=0 fields differing from NONE", differing as f64, Bound::AtMost, 0.0));

    let (mut free, sc) = scenario_state("free-gaussian", DissipationModel::none(), 1e-3)?;
    let s0 = sc.sigma;
    let mut width_err = 0.0f64;
    evolve(&mut free, sc.n_steps, Scheme::Strang, 100, |s, r| {
        let exact = s0 * s0 * (1.0 + (r.t / (2.0 * s0 * s0)).powi(2));
        width_err = width_err.max((position_variance(s) / exact - 1.0).abs());
        Ok::<(), std::convert::Infallible>(())
    })?;
    checks.push(Check::new("free spreading max rel err in sigma^2", width_err, Bound::AtMost, 1e-6));

    let steps = 4096;
    let (mut coh, sc) = scenario_state("coherent-state", DissipationModel::none(), 2.0 * PI / steps as f64)?;
    let coh_err = reports(&mut coh, steps, 16)?
        .iter()
        .map(|r| (r.mean_x - sc.x0 * r.t.cos()).abs() / sc.x0.abs())
        .fold(0.0, f64::max);
    checks.push(Check::new("coherent state max rel err in <x>", coh_err, Bound::AtMost, 1e-6));
    Ok(checks)
}

fn position_variance(state: &SimState) -> f64 {
    let grid = state.grid();
    let psi = state.psi();
    let norm = grid.norm(psi);
    let m1 = grid.integrate(psi.iter().enumerate().map(|(j, z)| grid.x(j) * z.norm_sqr())) / norm;
    let m2 = grid.integrate(psi.iter().enumerate().map(|(j, z)| grid.x(j).powi(2) * z.norm_sqr())) / norm;
    m2 - m1 * m1
}

/// Self-convergence in time against a run with a quarter of the smallest step.
fn convergence() -> Result<Vec<Check>> {
    let mut checks = Vec::new();
    let t_final = 1.0;
    let model = DissipationModel::new(ModelKind::LinearDrag, 0.05)?;
    let grid = Grid::new(256, -12.0, 12.0)?;
    let psi0 = gaussian_packet(&grid, 1.5, 0.8, 0.5, 1.0)?;
    let v = make_potential(&grid, PotentialKind::Harmonic { omega: 1.0 }, 1.0)?;

    for scheme in [Scheme::Strang, Scheme::CrankNicolson] {
        let run = |dt: f64| -> Result<Vec<Complex64>> {
            let mut s = SimState::new(grid.clone(), psi0.clone(), v.clone(), model, SimParams::default().with_dt(dt))?;
            for _ in 0..(t_final / dt).round() as u64 {
                s.step(scheme)?;
            }
            Ok(s.psi().to_vec())
        };
        let dts = [4e-3, 2e-3, 1e-3];
        let reference = run(dts[2] / 4.0)?;
        let errors = dts
            .iter()
            .map(|&dt| run(dt).map(|psi| l2_distance(&grid, &psi, &reference)))
            .collect::<Result<Vec<_>>>()?;
        checks.push(Check::new(
            format!("{scheme} temporal order (linear_drag)"),
            worst_order(&errors),
            Bound::AtLeast,
            1.9,
        ));
    }
    Ok(checks)
}

fn closed_form() -> Result<Vec<Check>> {
    let kappa = 0.1;
    let t_final = 0.5;
    let grid = Grid::new(512, -12.0, 12.0)?;
    let psi0 = gaussian_packet(&grid, 2.0, 0.5, 0.0, 1.0)?;
    let v = make_potential(&grid, PotentialKind::Harmonic { omega: 1.0 }, 1.0)?;
    let model = DissipationModel::new(ModelKind::AccelDrag, kappa)?;

    let n = grid.n_points();
    let dts = [4e-3, 2e-3, 1e-3];
    let mut runs = Vec::new();
    for dt in dts {
        let mut s = SimState::new(grid.clone(), psi0.clone(), v.clone(), model, SimParams::default().with_dt(dt))?;
        let start = s.velocity().expect("dissipative state tracks velocity").clone();
        let mut resolved = start.resolved.clone();
        for _ in 0..(t_final / dt).round() as u64 {
            s.strang_step()?;
            let now = s.velocity().expect("dissipative state tracks velocity");
            for (keep, r) in resolved.iter_mut().zip(&now.resolved) {
                *keep &= *r;
            }
        }
        let end = s.velocity().expect("dissipative state tracks velocity").velocity.clone();
        let closed = crate::memory::accel_drag_closed_form(&end, &start.velocity, kappa)?;
        runs.push((s.work().values().to_vec(), closed, resolved));
    }
    let errors: Vec<f64> = runs
        .iter()
        .map(|(w, closed, _)| {
            (0..n)
                .filter(|&j| runs.iter().all(|r| r.2[j]))
                .map(|j| (w[j] - closed[j]).abs())
                .fold(0.0, f64::max)
        })
        .collect();
    let mut checks: Vec<Check> = dts
        .iter()
        .zip(&errors)
        .map(|(dt, e)| Check::new(format!("max |W - closed form| at dt={dt}"), *e, Bound::AtMost, 1e-3))
        .collect();
    checks.push(Check::new("closed-form error order in dt", worst_order(&errors), Bound::AtLeast, 1.9));
    Ok(checks)
}

/// Spectral Strang against the finite-difference RK4 oracle, refining the
/// grid and the step together at fixed final time.
fn oracle() -> Result<Vec<Check>> {
    let levels = [(32usize, 1e-2, 50u64), (64, 5e-3, 100), (128, 2.5e-3, 200)];
    let mut models = vec![
        DissipationModel::new(ModelKind::LinearDrag, 0.1)?,
        DissipationModel::new(ModelKind::Radiative, 0.1)?,
    ];
    for cube in [CubeConvention::Literal, CubeConvention::SpeedWeighted] {
        models.push(DissipationModel::new(ModelKind::QuadraticDrag, 0.1)?.with_cube_convention(cube));
    }
    let mut checks = Vec::new();
    for model in models {
        let mut errors = Vec::new();
        for (n, dt, steps) in levels {
            let grid = Grid::new(n, -10.0, 10.0)?;
            let psi0 = gaussian_packet(&grid, 1.0, 1.0, 0.8, 1.0)?;
            let v = make_potential(&grid, PotentialKind::Harmonic { omega: 0.5 }, 1.0)?;
            let params = SimParams::default().with_dt(dt);
            let config = OracleConfig { grid: grid.clone(), psi0: psi0.clone(), potential: v.clone(), model, params };
            let reference = rk4_reference(&config, steps)?;
            let mut s = SimState::new(grid.clone(), psi0, v, model, params)?;
            for _ in 0..steps {
                s.strang_step()?;
            }
            errors.push(l2_distance(&grid, s.psi(), &reference));
        }
        let label = match model.kind() {
            ModelKind::QuadraticDrag => format!("{}/{}", model.kind(), model.cube_convention()),
            k => k.to_string(),
        };
        checks.push(Check::new(format!("{label} L2(strang - oracle) at 64 points"), errors[1], Bound::AtMost, 1e-1));
        checks.push(Check::new(format!("{label} combined order"), worst_order(&errors), Bound::AtLeast, 1.9));
    }
    Ok(checks)
}
