//! Dissipation models and their real work integrands.
//!
//! Each model adds a history term `W(x, t) psi(x, t)` to the Hamiltonian with
//! `W(x, t) = int_0^t g(v, a) dt'`, where `v` is the flow velocity and `a = dv/dt`
//! at fixed position. In the wave equations the integrands are written through
//! `L = grad ln(psi / psi*)`. Since `v = -i (hbar / 2m) L`, we have
//!
//! ```text
//! L        = 2 i m v / hbar        L^2 = -4 m^2 v^2 / hbar^2
//! d_t L    = 2 i m a / hbar        L^3 = -8 i m^3 v^3 / hbar^3
//! ```
//!
//! and every complex prefactor collapses to a real integrand:
//!
//! | model           | term in the equation                            | reduced `g`     |
//! |-----------------|-------------------------------------------------|-----------------|
//! | radiative       | `-kappa hbar^2/(4 m^2) (d_t L)^2`                | `kappa a^2`     |
//! | linear drag     | `-k hbar^2/(4 m^2) L^2`                          | `k v^2`         |
//! | quadratic drag  | `+i k hbar^3/(8 m^3) L^3`                        | `k v^3`         |
//! | accel. drag     | `-k hbar^2/(4 m^2) L d_t L`                      | `k v a`         |
//!
//! e.g. radiative: `-(hbar^2/4m^2) (2im a/hbar)^2 = -(hbar^2/4m^2)(-4 m^2 a^2/hbar^2) = a^2`,
//! and quadratic drag: `i (hbar^3/8m^3)(-8 i m^3 v^3/hbar^3) = -8 i^2 v^3 / 8 = v^3`.
//! The radiative case reproduces the `+kappa int |dv/dt|^2 dt'` potential of the
//! un-substituted equation: the overall minus sign is cancelled by `(2i)^2 = -4`.
//!
//! Because `W` is real the effective Hamiltonian is Hermitian at every instant,
//! so the evolution conserves the norm exactly.

use std::f64::consts::PI;
use std::fmt;
use std::str::FromStr;

use crate::error::{check_len, Result, SolverError};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ModelKind {
    None,
    Radiative,
    LinearDrag,
    QuadraticDrag,
    AccelDrag,
}

impl ModelKind {
    pub const ALL: [ModelKind; 5] = [
        ModelKind::None,
        ModelKind::Radiative,
        ModelKind::LinearDrag,
        ModelKind::QuadraticDrag,
        ModelKind::AccelDrag,
    ];

    pub fn name(self) -> &'static str {
        match self {
            ModelKind::None => "none",
            ModelKind::Radiative => "radiative",
            ModelKind::LinearDrag => "linear_drag",
            ModelKind::QuadraticDrag => "quadratic_drag",
            ModelKind::AccelDrag => "accel_drag",
        }
    }

    /// Whether the integrand depends on the acceleration field.
    pub fn needs_acceleration(self) -> bool {
        matches!(self, ModelKind::Radiative | ModelKind::AccelDrag)
    }
}

impl fmt::Display for ModelKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for ModelKind {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        ModelKind::ALL
            .into_iter()
            .find(|k| k.name() == s)
            .ok_or_else(|| {
                let names: Vec<_> = ModelKind::ALL.iter().map(|k| k.name()).collect();
                format!("unknown model `{s}`, expected one of: {}", names.join(", "))
            })
    }
}

/// How `v^3` is read for the quadratic drag model.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default)]
pub enum CubeConvention {
    /// `k v^3`, odd in `v`.
    #[default]
    Literal,
    /// `k |v| v^2`, the work done against `F = -k v^2 v/|v|`; never negative.
    SpeedWeighted,
}

impl CubeConvention {
    pub fn name(self) -> &'static str {
        match self {
            CubeConvention::Literal => "literal",
            CubeConvention::SpeedWeighted => "speed_weighted",
        }
    }
}

impl fmt::Display for CubeConvention {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for CubeConvention {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        match s {
            "literal" => Ok(CubeConvention::Literal),
            "speed_weighted" => Ok(CubeConvention::SpeedWeighted),
            _ => Err(format!(
                "unknown cube convention `{s}`, expected one of: literal, speed_weighted"
            )),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DissipationModel {
    kind: ModelKind,
    kappa: f64,
    cube: CubeConvention,
}

impl Default for DissipationModel {
    fn default() -> Self {
        DissipationModel::none()
    }
}

impl DissipationModel {
    pub fn new(kind: ModelKind, kappa: f64) -> Result<Self> {
        if !(kappa >= 0.0) || !kappa.is_finite() {
            return Err(SolverError::param(
                "kappa",
                format!("must satisfy kappa >= 0, got {kappa}"),
            ));
        }
        Ok(DissipationModel {
            kind,
            kappa,
            cube: CubeConvention::Literal,
        })
    }

    pub fn none() -> Self {
        DissipationModel {
            kind: ModelKind::None,
            kappa: 0.0,
            cube: CubeConvention::Literal,
        }
    }

    pub fn with_cube_convention(mut self, cube: CubeConvention) -> Self {
        self.cube = cube;
        self
    }

    pub fn kind(&self) -> ModelKind {
        self.kind
    }

    pub fn kappa(&self) -> f64 {
        self.kappa
    }

    pub fn cube_convention(&self) -> CubeConvention {
        self.cube
    }

    /// True when the integrand vanishes identically (no model, or `kappa == 0`).
    pub fn is_inert(&self) -> bool {
        self.kind == ModelKind::None || self.kappa == 0.0
    }

    /// Pointwise integrand `g(v, a)`.
    pub fn integrand_at(&self, v: f64, a: f64) -> f64 {
        if self.is_inert() {
            return 0.0;
        }
        let k = self.kappa;
        match self.kind {
            ModelKind::None => 0.0,
            ModelKind::Radiative => k * a * a,
            ModelKind::LinearDrag => k * v * v,
            ModelKind::QuadraticDrag => match self.cube {
                CubeConvention::Literal => k * v * v * v,
                CubeConvention::SpeedWeighted => k * v.abs() * v * v,
            },
            ModelKind::AccelDrag => k * v * a,
        }
    }

    /// Elementwise integrand over velocity and acceleration fields.
    pub fn integrand(&self, v: &[f64], a: &[f64]) -> Result<Vec<f64>> {
        check_len(v.len(), a.len())?;
        if self.is_inert() {
            return Ok(vec![0.0; v.len()]);
        }
        Ok(v.iter().zip(a).map(|(&v, &a)| self.integrand_at(v, a)).collect())
    }
}

/// Larmor coefficient `2 e^2 / (3 * 4 pi eps0 * c^3)`.
pub fn larmor_kappa(charge: f64, vacuum_permittivity: f64, light_speed: f64) -> Result<f64> {
    for (name, value) in [
        ("charge", charge),
        ("vacuum_permittivity", vacuum_permittivity),
        ("light_speed", light_speed),
    ] {
        if !(value > 0.0) || !value.is_finite() {
            return Err(SolverError::param(name, format!("must be > 0, got {value}")));
        }
    }
    Ok(2.0 * charge * charge / (3.0 * 4.0 * PI * vacuum_permittivity * light_speed.powi(3)))
}

/// CODATA 2018 SI constants for the electron.
pub mod si {
    pub const ELEMENTARY_CHARGE: f64 = 1.602_176_634e-19;
    pub const VACUUM_PERMITTIVITY: f64 = 8.854_187_812_8e-12;
    pub const SPEED_OF_LIGHT: f64 = 2.997_924_58e8;
}
