//! Canonical initial states and potentials.

use std::f64::consts::PI;
use std::fmt;

use num_complex::Complex64;

use crate::error::{Result, SolverError};
use crate::grid::Grid;

/// Packets must sit at least this many widths away from either boundary.
pub const MARGIN_SIGMAS: f64 = 5.0;

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum PotentialKind {
    Free,
    /// `m omega^2 (x - x_c)^2 / 2` with `x_c` the domain center.
    Harmonic { omega: f64 },
    /// `slope * (x - x_c)`.
    Linear { slope: f64 },
}

impl fmt::Display for PotentialKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            PotentialKind::Free => write!(f, "free"),
            PotentialKind::Harmonic { omega } => write!(f, "harmonic(omega={omega})"),
            PotentialKind::Linear { slope } => write!(f, "linear(slope={slope})"),
        }
    }
}

pub fn make_potential(grid: &Grid, kind: PotentialKind, mass: f64) -> Result<Vec<f64>> {
    let xc = grid.center();
    match kind {
        PotentialKind::Free => Ok(vec![0.0; grid.n_points()]),
        PotentialKind::Harmonic { omega } => {
            if !(omega > 0.0) || !omega.is_finite() {
                return Err(SolverError::param("omega", format!("must be > 0, got {omega}")));
            }
            if !(mass > 0.0) {
                return Err(SolverError::param("mass", format!("must be > 0, got {mass}")));
            }
            let c = 0.5 * mass * omega * omega;
            Ok(grid.positions().iter().map(|x| c * (x - xc) * (x - xc)).collect())
        }
        PotentialKind::Linear { slope } => {
            if !slope.is_finite() {
                return Err(SolverError::param("slope", "must be finite"));
            }
            Ok(grid.positions().iter().map(|x| slope * (x - xc)).collect())
        }
    }
}

/// Checks that a packet of width `sigma` centered at `x0` keeps the margin.
pub fn check_margin(grid: &Grid, x0: f64, sigma: f64) -> Result<()> {
    if !(sigma > 0.0) || !sigma.is_finite() {
        return Err(SolverError::param("sigma", format!("must be > 0, got {sigma}")));
    }
    let reach = MARGIN_SIGMAS * sigma;
    if x0 - reach < grid.x_min() || x0 + reach > grid.x_max() {
        return Err(SolverError::param(
            "x0",
            format!(
                "packet at {x0} with sigma {sigma} must stay {MARGIN_SIGMAS} widths inside [{}, {}]",
                grid.x_min(),
                grid.x_max()
            ),
        ));
    }
    Ok(())
}

/// `(2 pi sigma^2)^(-1/4) exp(-(x - x0)^2 / 4 sigma^2 + i p0 x / hbar)`,
/// renormalized to unit norm on the grid.
pub fn gaussian_packet(
    grid: &Grid,
    x0: f64,
    sigma: f64,
    p0: f64,
    hbar: f64,
) -> Result<Vec<Complex64>> {
    check_margin(grid, x0, sigma)?;
    if !(hbar > 0.0) {
        return Err(SolverError::param("hbar", format!("must be > 0, got {hbar}")));
    }
    let amp = (2.0 * PI * sigma * sigma).powf(-0.25);
    let mut psi: Vec<Complex64> = grid
        .positions()
        .iter()
        .map(|&x| {
            let envelope = amp * (-(x - x0).powi(2) / (4.0 * sigma * sigma)).exp();
            Complex64::from_polar(envelope, p0 * x / hbar)
        })
        .collect();
    let scale = grid.norm(&psi).sqrt().recip();
    for z in psi.iter_mut() {
        *z *= scale;
    }
    Ok(psi)
}

/// A named initial condition with its recommended run parameters.
#[derive(Debug, Clone, PartialEq)]
pub struct Scenario {
    pub name: &'static str,
    pub x0: f64,
    pub sigma: f64,
    pub p0: f64,
    pub potential: PotentialKind,
    pub n_points: usize,
    pub x_min: f64,
    pub x_max: f64,
    pub dt: f64,
    pub n_steps: u64,
}

impl Scenario {
    pub const NAMES: [&'static str; 5] = [
        "free-gaussian",
        "boosted-gaussian",
        "coherent-state",
        "damped-harmonic",
        "linear-ramp",
    ];

    /// Looks up a scenario. The coherent state's width depends on `hbar` and
    /// `mass` (it is the oscillator ground-state width).
    pub fn named(name: &str, hbar: f64, mass: f64) -> Option<Scenario> {
        let base = Scenario {
            name: "",
            x0: 0.0,
            sigma: 1.0,
            p0: 0.0,
            potential: PotentialKind::Free,
            n_points: 512,
            x_min: -20.0,
            x_max: 20.0,
            dt: 1e-3,
            n_steps: 2000,
        };
        let omega = 1.0;
        let s = match name {
            "free-gaussian" => Scenario {
                name: "free-gaussian",
                // spread until sigma^2 has grown fivefold: t = 4 m sigma^2 / hbar
                n_steps: (4.0 * mass / hbar / base.dt).round() as u64,
                ..base
            },
            "boosted-gaussian" => Scenario {
                name: "boosted-gaussian",
                x0: -5.0,
                p0: 2.0,
                ..base
            },
            "coherent-state" => Scenario {
                name: "coherent-state",
                x0: 2.0,
                sigma: (hbar / (2.0 * mass * omega)).sqrt(),
                potential: PotentialKind::Harmonic { omega },
                n_steps: (2.0 * PI / omega / base.dt).round() as u64,
                ..base
            },
            "damped-harmonic" => Scenario {
                name: "damped-harmonic",
                x0: 3.0,
                sigma: 0.5,
                potential: PotentialKind::Harmonic { omega },
                n_steps: (3.0 * 2.0 * PI / omega / base.dt).round() as u64,
                ..base
            },
            "linear-ramp" => Scenario {
                name: "linear-ramp",
                potential: PotentialKind::Linear { slope: 0.5 },
                ..base
            },
            _ => return None,
        };
        Some(s)
    }

    pub fn grid(&self) -> Result<Grid> {
        Grid::new(self.n_points, self.x_min, self.x_max)
    }

    /// Validates the packet placement and returns the normalized initial state.
    pub fn initial_state(&self, grid: &Grid, hbar: f64) -> Result<Vec<Complex64>> {
        gaussian_packet(grid, self.x0, self.sigma, self.p0, hbar)
    }

    pub fn potential(&self, grid: &Grid, mass: f64) -> Result<Vec<f64>> {
        make_potential(grid, self.potential, mass)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::madelung;

    #[test]
    fn packet_is_normalized_with_expected_moments() {
        let g = Grid::new(512, -20.0, 20.0).unwrap();
        let (x0, p0, hbar) = (1.5, -0.7, 1.0);
        let psi = gaussian_packet(&g, x0, 1.0, p0, hbar).unwrap();
        assert!((g.norm(&psi) - 1.0).abs() < 1e-10);
        let mean_x = g.integrate(psi.iter().zip(g.positions()).map(|(z, x)| x * z.norm_sqr()));
        let dpsi = g.spectral_derivative(&psi).unwrap();
        let mean_p = hbar * g.integrate(psi.iter().zip(&dpsi).map(|(z, d)| (z.conj() * d).im));
        assert!((mean_x - x0).abs() < 1e-8);
        assert!((mean_p - p0).abs() < 1e-8);
    }

    #[test]
    fn unboosted_packet_has_no_flow() {
        let g = Grid::new(256, -20.0, 20.0).unwrap();
        let psi = gaussian_packet(&g, 0.0, 1.0, 0.0, 1.0).unwrap();
        let v = madelung::velocity_field(&psi, &g, 1.0, 1.0, 1e-12).unwrap();
        assert!(v.iter().all(|v| v.abs() < 1e-9));
    }

    #[test]
    fn margin_violations_are_rejected() {
        let g = Grid::new(256, -10.0, 10.0).unwrap();
        assert!(gaussian_packet(&g, 6.0, 1.0, 0.0, 1.0).is_err());
        assert!(gaussian_packet(&g, 0.0, 2.5, 0.0, 1.0).is_err());
        assert!(gaussian_packet(&g, 0.0, 0.0, 0.0, 1.0).is_err());
        assert!(gaussian_packet(&g, 5.0, 1.0, 0.0, 1.0).is_ok());
    }

    #[test]
    fn potential_examples() {
        let g = Grid::new(64, -8.0, 8.0).unwrap();
        assert!(make_potential(&g, PotentialKind::Free, 1.0).unwrap().iter().all(|&v| v == 0.0));

        let v = make_potential(&g, PotentialKind::Harmonic { omega: 1.0 }, 1.0).unwrap();
        // dx = 0.25, so x = 0 is sample 32 and x = 1 is sample 36
        assert_eq!(g.x(32), 0.0);
        assert_eq!(v[32], 0.0);
        assert_eq!(v[36], 0.5);

        let s = 0.3;
        let v = make_potential(&g, PotentialKind::Linear { slope: s }, 1.0).unwrap();
        for j in 1..64 {
            assert!((v[j] - v[j - 1] - s * g.dx()).abs() < 1e-14);
        }

        assert!(make_potential(&g, PotentialKind::Harmonic { omega: 0.0 }, 1.0).is_err());
        assert!(make_potential(&g, PotentialKind::Harmonic { omega: 1.0 }, -1.0).is_err());
    }

    #[test]
    fn every_named_scenario_validates() {
        for name in Scenario::NAMES {
            let s = Scenario::named(name, 1.0, 1.0).unwrap();
            let g = s.grid().unwrap();
            let psi = s.initial_state(&g, 1.0).unwrap();
            assert!((g.norm(&psi) - 1.0).abs() < 1e-10, "{name}");
            s.potential(&g, 1.0).unwrap();
        }
        assert!(Scenario::named("double-well", 1.0, 1.0).is_none());
    }
}
