//! Analytic densities with closed-form kinetic energies.
//!
//! These serve as oracles for the functional evaluators. Each family is
//! normalized to `electrons` in the dimension of the grid it is sampled on;
//! the closed forms below are for three dimensions unless a method says
//! otherwise.

use std::f64::consts::PI;
use std::fmt;

use crate::error::{Error, Result};
use crate::grid::{integrate, Boundary, Grid, ScalarField};

/// Thomas-Fermi constant `(3/10)(3 pi^2)^(2/3)` in hartree atomic units.
pub fn c_tf() -> f64 {
    0.3 * (3.0 * PI * PI).powf(2.0 / 3.0)
}

const BOUNDARY_DECAY: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Family {
    Gaussian,
    Hydrogenic1s,
    UniformBox,
}

impl fmt::Display for Family {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Family::Gaussian => "gaussian",
            Family::Hydrogenic1s => "hydrogenic",
            Family::UniformBox => "uniform",
        })
    }
}

/// A normalized analytic density.
///
/// `width` is the exponent `gamma` (bohr^-2) for the Gaussian, the nuclear
/// charge `Z` (bohr^-1) for the hydrogenic 1s density and the box edge `a`
/// (bohr) for the uniform box.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DensityModel {
    family: Family,
    electrons: f64,
    width: f64,
}

impl DensityModel {
    pub fn new(family: Family, electrons: f64, width: f64) -> Result<Self> {
        if !(electrons.is_finite() && electrons > 0.0) {
            return Err(Error::InvalidArgument(format!(
                "electron count must be positive, got {electrons}"
            )));
        }
        if !(width.is_finite() && width > 0.0) {
            return Err(Error::InvalidArgument(format!(
                "width parameter must be positive, got {width}"
            )));
        }
        Ok(Self {
            family,
            electrons,
            width,
        })
    }

    pub fn gaussian(electrons: f64, gamma: f64) -> Result<Self> {
        Self::new(Family::Gaussian, electrons, gamma)
    }

    pub fn hydrogenic(electrons: f64, z: f64) -> Result<Self> {
        Self::new(Family::Hydrogenic1s, electrons, z)
    }

    pub fn uniform_box(electrons: f64, edge: f64) -> Result<Self> {
        Self::new(Family::UniformBox, electrons, edge)
    }

    pub fn family(&self) -> Family {
        self.family
    }

    pub fn electrons(&self) -> f64 {
        self.electrons
    }

    pub fn width(&self) -> f64 {
        self.width
    }

    /// Analytic density at distance `r` from the center in `dim` dimensions.
    pub fn density_at(&self, r: f64, dim: usize) -> f64 {
        let ne = self.electrons;
        let d = dim as f64;
        match self.family {
            Family::Gaussian => {
                let g = self.width;
                ne * (g / PI).powf(0.5 * d) * (-g * r * r).exp()
            }
            Family::Hydrogenic1s => {
                let z = self.width;
                let norm = if dim == 3 { z.powi(3) / PI } else { z };
                ne * norm * (-2.0 * z * r).exp()
            }
            Family::UniformBox => ne / self.width.powi(dim as i32),
        }
    }

    /// Peak value of the analytic density.
    pub fn peak(&self, dim: usize) -> f64 {
        self.density_at(0.0, dim)
    }

    /// Default sampling domain for this family.
    ///
    /// Gaussian: open cube `[-8/sqrt(gamma), 8/sqrt(gamma)]`. Hydrogenic: open
    /// cube `[-16/Z, 16/Z]`, shifted by half a spacing when `points` is odd so
    /// the nucleus never coincides with a sample. Uniform: periodic box of
    /// edge `a`.
    pub fn default_grid(&self, dim: usize, points: usize) -> Result<Grid> {
        match self.family {
            Family::Gaussian => Grid::open_cube(dim, points, 8.0 / self.width.sqrt()),
            Family::Hydrogenic1s => {
                let half = 16.0 / self.width;
                let grid = Grid::open_cube(dim, points, half)?;
                if points.is_multiple_of(2) {
                    Ok(grid)
                } else {
                    let shift = -half - 0.5 * grid.spacing();
                    Grid::new(dim, points, grid.spacing(), Boundary::Open, [shift; 3])
                }
            }
            Family::UniformBox => Grid::periodic_box(dim, points, self.width),
        }
    }

    /// Kinetic energy of the von Weizsäcker functional in 3-D.
    pub fn analytic_t_vw(&self) -> f64 {
        self.analytic_t_vw_in(3)
    }

    /// `∫ |∇n|^2 / (8n)` in `dim` dimensions.
    pub fn analytic_t_vw_in(&self, dim: usize) -> f64 {
        match self.family {
            // |∇n|^2/(8n) = gamma^2 r^2 n / 2 and <r^2> = dim / (2 gamma)
            Family::Gaussian => self.electrons * dim as f64 * self.width / 4.0,
            // |∇n|^2/(8n) = Z^2 n / 2 in any dimension
            Family::Hydrogenic1s => self.electrons * self.width * self.width / 2.0,
            Family::UniformBox => 0.0,
        }
    }

    /// `C_TF ∫ n^(5/3)` in 3-D.
    pub fn analytic_t_tf(&self) -> f64 {
        let ne53 = self.electrons.powf(5.0 / 3.0);
        match self.family {
            // ∫ e^(-5 gamma r^2 / 3) = (3 pi / (5 gamma))^(3/2)
            Family::Gaussian => c_tf() * ne53 * (self.width / PI) * 0.6f64.powf(1.5),
            // ∫ e^(-10 Z r / 3) = 8 pi (3 / (10 Z))^3
            Family::Hydrogenic1s => {
                c_tf() * ne53 * (27.0 / 125.0) * self.width * self.width / PI.powf(2.0 / 3.0)
            }
            Family::UniformBox => {
                let a3 = self.width.powi(3);
                c_tf() * (self.electrons / a3).powf(5.0 / 3.0) * a3
            }
        }
    }
}

impl fmt::Display for DensityModel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{}(ne={}, width={})",
            self.family, self.electrons, self.width
        )
    }
}

/// Nonnegative density samples together with the electron count they carry.
#[derive(Debug, Clone, PartialEq)]
pub struct DensityField {
    field: ScalarField,
    electrons: f64,
}

impl DensityField {
    /// Validates the samples and records their quadrature as the electron count.
    pub fn new(field: ScalarField) -> Result<Self> {
        check_nonnegative(field.values())?;
        let electrons = integrate(&field);
        Ok(Self { field, electrons })
    }

    /// Like [`DensityField::new`] but with a known electron count, which must
    /// agree with the quadrature to 1e-10 relative.
    pub fn with_electrons(field: ScalarField, electrons: f64) -> Result<Self> {
        check_nonnegative(field.values())?;
        let integrated = integrate(&field);
        let scale = electrons.abs().max(integrated.abs()).max(f64::MIN_POSITIVE);
        if !electrons.is_finite() || (electrons - integrated).abs() > 1e-10 * scale {
            return Err(Error::ElectronCountMismatch {
                recorded: electrons,
                integrated,
            });
        }
        Ok(Self { field, electrons })
    }

    pub fn field(&self) -> &ScalarField {
        &self.field
    }

    pub fn grid(&self) -> &Grid {
        self.field.grid()
    }

    pub fn values(&self) -> &[f64] {
        self.field.values()
    }

    pub fn electrons(&self) -> f64 {
        self.electrons
    }

    pub fn max(&self) -> f64 {
        self.field.max()
    }
}

fn check_nonnegative(values: &[f64]) -> Result<()> {
    match values.iter().position(|v| !(v.is_finite() && *v >= 0.0)) {
        Some(index) => Err(Error::NegativeDensity {
            index,
            value: values[index],
        }),
        None => Ok(()),
    }
}

fn radius(r: [f64; 3]) -> f64 {
    (r[0] * r[0] + r[1] * r[1] + r[2] * r[2]).sqrt()
}

/// Samples `model` pointwise on `grid`, centered at the coordinate origin.
pub fn sample_density(model: &DensityModel, grid: &Grid) -> Result<DensityField> {
    let dim = grid.dim();
    if model.family == Family::UniformBox {
        if !grid.is_periodic() {
            return Err(Error::WrongBoundary);
        }
        let field = ScalarField::constant(grid.clone(), model.density_at(0.0, dim));
        return DensityField::new(field);
    }

    let peak = model.peak(dim);
    let boundary = grid
        .boundary_points()
        .into_iter()
        .map(|i| model.density_at(radius(grid.position(i)), dim))
        .fold(0.0, f64::max);
    if boundary >= BOUNDARY_DECAY * peak {
        return Err(Error::DomainTooSmall { boundary, peak });
    }

    let field = ScalarField::from_fn(grid.clone(), |r| model.density_at(radius(r), dim));
    DensityField::new(field)
}
