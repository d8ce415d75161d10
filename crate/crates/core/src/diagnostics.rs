//! Expectation-value bookkeeping: norm, kinetic, potential and work energies,
//! their sum, the Ehrenfest observables and the dissipated power.

use crate::stepper::SimState;

/// One row of the report series. Energies are plain integrals against the
/// density (not divided by the norm); `mean_x` and `mean_p` are normalized.
#[derive(Debug, Clone, PartialEq)]
pub struct EnergyReport {
    pub t: f64,
    pub norm: f64,
    pub kinetic: f64,
    pub potential: f64,
    pub work: f64,
    pub total: f64,
    pub mean_x: f64,
    pub mean_p: f64,
    pub dissipated_power: f64,
}

impl EnergyReport {
    pub const CSV_HEADER: &'static str =
        "t,norm,kinetic,potential,work,total,mean_x,mean_p,dissipated_power";

    pub fn fields(&self) -> [f64; 9] {
        [
            self.t,
            self.norm,
            self.kinetic,
            self.potential,
            self.work,
            self.total,
            self.mean_x,
            self.mean_p,
            self.dissipated_power,
        ]
    }
}

pub fn energy_report(state: &SimState) -> EnergyReport {
    let grid = state.grid();
    let psi = state.psi();
    let hbar = state.params().hbar;
    let mass = state.params().mass;
    let dpsi = grid
        .spectral_derivative(psi)
        .expect("state length always matches its grid");
    let rho: Vec<f64> = psi.iter().map(|z| z.norm_sqr()).collect();

    let norm = grid.integrate(rho.iter().copied());
    let kinetic = hbar * hbar / (2.0 * mass) * grid.integrate(dpsi.iter().map(|d| d.norm_sqr()));
    let potential = grid.integrate(rho.iter().zip(state.potential()).map(|(r, v)| r * v));
    let work = grid.integrate(rho.iter().zip(state.work().values()).map(|(r, w)| r * w));
    let dissipated_power =
        grid.integrate(rho.iter().zip(state.work().last_integrand()).map(|(r, g)| r * g));
    let first_moment = grid.integrate(rho.iter().enumerate().map(|(j, r)| grid.x(j) * r));
    let momentum = hbar * grid.integrate(psi.iter().zip(&dpsi).map(|(z, d)| (z.conj() * d).im));

    EnergyReport {
        t: state.t(),
        norm,
        kinetic,
        potential,
        work,
        total: kinetic + potential + work,
        mean_x: first_moment / norm,
        mean_p: momentum / norm,
        dissipated_power,
    }
}
