//! Kinetic-energy functionals: von Weizsäcker, Thomas-Fermi and the
//! orbital (Kohn-Sham) kinetic energy.

use std::fmt;

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::grid::{Grid, ScalarField};
use crate::model_densities::{c_tf, DensityField};

/// Relative floor applied to the density in the von Weizsäcker denominator.
pub const VW_DENSITY_FLOOR: f64 = 1e-12;

/// Tolerance of the orthogonality and normalization checks on orbital sets.
pub const ORBITAL_TOLERANCE: f64 = 1e-8;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum FunctionalKind {
    VonWeizsacker,
    ThomasFermi,
    KsOrbital,
    GasDiscrete,
    GasContinuum,
}

impl fmt::Display for FunctionalKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            FunctionalKind::VonWeizsacker => "vW",
            FunctionalKind::ThomasFermi => "TF",
            FunctionalKind::KsOrbital => "KS_orbital",
            FunctionalKind::GasDiscrete => "gas_discrete",
            FunctionalKind::GasContinuum => "gas_continuum",
        })
    }
}

/// What an energy was evaluated on.
#[derive(Debug, Clone, PartialEq)]
pub struct Evaluation {
    pub points: usize,
    pub spacing: Option<f64>,
    pub detail: String,
}

impl Evaluation {
    pub fn on_grid(grid: &Grid, detail: impl Into<String>) -> Self {
        Self {
            points: grid.len(),
            spacing: Some(grid.spacing()),
            detail: detail.into(),
        }
    }
}

/// A kinetic energy in hartree.
#[derive(Debug, Clone, PartialEq)]
pub struct EnergyResult {
    pub value: f64,
    pub functional: FunctionalKind,
    pub metadata: Evaluation,
}

impl EnergyResult {
    pub fn new(value: f64, functional: FunctionalKind, metadata: Evaluation) -> Self {
        debug_assert!(value.is_finite(), "{functional} evaluated to {value}");
        Self {
            value,
            functional,
            metadata,
        }
    }
}

/// Occupied orbitals sampled on a grid.
///
/// Every orbital is `sqrt(prefactor) * samples`; the common prefactor is 1
/// for freshly built sets and absorbs `alpha^m` under scaling. Orbitals are
/// normalized to `(∫n / N_e)^(1/2)` with `N_e = sum of occupations`.
#[derive(Debug, Clone, PartialEq)]
pub struct OrbitalSet {
    grid: Grid,
    orbitals: Vec<Vec<Complex64>>,
    occupations: Vec<f64>,
    electrons: f64,
    prefactor: f64,
}

impl OrbitalSet {
    pub fn new(grid: Grid, orbitals: Vec<Vec<Complex64>>, occupations: Vec<f64>) -> Result<Self> {
        if orbitals.is_empty() {
            return Err(Error::InvalidArgument(
                "an orbital set needs at least one orbital".into(),
            ));
        }
        if orbitals.len() != occupations.len() {
            return Err(Error::InvalidArgument(format!(
                "{} orbitals but {} occupations",
                orbitals.len(),
                occupations.len()
            )));
        }
        if let Some(o) = orbitals.iter().find(|o| o.len() != grid.len()) {
            return Err(Error::ShapeMismatch {
                expected: grid.len(),
                found: o.len(),
            });
        }
        if let Some(occ) = occupations.iter().find(|o| !(0.0..=2.0).contains(*o)) {
            return Err(Error::InvalidArgument(format!(
                "occupation {occ} outside [0, 2]"
            )));
        }
        let electrons: f64 = occupations.iter().sum();
        if !(electrons > 0.0) {
            return Err(Error::InvalidArgument("occupations sum to zero".into()));
        }
        Ok(Self {
            grid,
            orbitals,
            occupations,
            electrons,
            prefactor: 1.0,
        })
    }

    pub fn from_real(grid: Grid, orbitals: Vec<Vec<f64>>, occupations: Vec<f64>) -> Result<Self> {
        let orbitals = orbitals
            .into_iter()
            .map(|o| o.into_iter().map(|v| Complex64::new(v, 0.0)).collect())
            .collect();
        Self::new(grid, orbitals, occupations)
    }

    /// The single orbital `sqrt(n / occupation)` carrying the whole density.
    pub fn single_from_density(n: &DensityField, occupation: f64) -> Result<Self> {
        let orbital = n.values().iter().map(|v| (v / occupation).sqrt()).collect();
        Self::from_real(n.grid().clone(), vec![orbital], vec![occupation])
    }

    pub(crate) fn with_grid_and_prefactor(&self, grid: Grid, prefactor: f64) -> Result<Self> {
        if grid.len() != self.grid.len() {
            return Err(Error::ShapeMismatch {
                expected: self.grid.len(),
                found: grid.len(),
            });
        }
        Ok(Self {
            grid,
            prefactor,
            ..self.clone()
        })
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn len(&self) -> usize {
        self.orbitals.len()
    }

    pub fn is_empty(&self) -> bool {
        self.orbitals.is_empty()
    }

    pub fn occupations(&self) -> &[f64] {
        &self.occupations
    }

    pub fn electrons(&self) -> f64 {
        self.electrons
    }

    pub fn density_prefactor(&self) -> f64 {
        self.prefactor
    }

    /// Stored samples of orbital `i`, before the prefactor.
    pub fn samples(&self, i: usize) -> &[Complex64] {
        &self.orbitals[i]
    }

    /// Orbital `i` including the prefactor.
    pub fn orbital(&self, i: usize) -> Vec<Complex64> {
        let a = self.prefactor.sqrt();
        self.orbitals[i].iter().map(|z| z * a).collect()
    }

    /// `<phi_i | phi_j>` under the grid quadrature.
    pub fn overlap(&self, i: usize, j: usize) -> Complex64 {
        let (a, b) = (&self.orbitals[i], &self.orbitals[j]);
        let re = self.grid.quadrature(|k| (a[k].conj() * b[k]).re);
        let im = self.grid.quadrature(|k| (a[k].conj() * b[k]).im);
        Complex64::new(re, im) * self.prefactor
    }

    /// Checks pairwise orthogonality and the common-norm convention, both to
    /// [`ORBITAL_TOLERANCE`] relative to the required norm `∫n / N_e`.
    pub fn check_invariants(&self) -> Result<()> {
        let norms: Vec<f64> = (0..self.len()).map(|i| self.overlap(i, i).re).collect();
        let integral: f64 = norms
            .iter()
            .zip(&self.occupations)
            .map(|(q, n)| q * n)
            .sum();
        let expected = integral / self.electrons;
        let tol = ORBITAL_TOLERANCE * expected.abs().max(f64::MIN_POSITIVE);
        for i in 0..self.len() {
            for j in i + 1..self.len() {
                let overlap = self.overlap(i, j).norm();
                if overlap > tol {
                    return Err(Error::OrthogonalityViolation { i, j, overlap });
                }
            }
        }
        for (index, &norm) in norms.iter().enumerate() {
            if (norm - expected).abs() > tol {
                return Err(Error::NormalizationViolation {
                    index,
                    norm,
                    expected,
                });
            }
        }
        Ok(())
    }

    /// `n(r) = sum_i n_i |phi_i(r)|^2`.
    pub fn induced_density(&self) -> Result<DensityField> {
        let values = self.grid.map_points(|k| {
            let sum: f64 = self
                .orbitals
                .iter()
                .zip(&self.occupations)
                .map(|(o, n)| n * o[k].norm_sqr())
                .sum();
            self.prefactor * sum
        });
        DensityField::new(ScalarField::new(self.grid.clone(), values)?)
    }

    fn parts(&self, i: usize) -> (Vec<f64>, Option<Vec<f64>>) {
        let o = &self.orbitals[i];
        let re = o.iter().map(|z| z.re).collect();
        let im = o
            .iter()
            .any(|z| z.im != 0.0)
            .then(|| o.iter().map(|z| z.im).collect());
        (re, im)
    }
}

/// `T_vW[n] = (1/8) ∫ |∇n|^2 / n`.
///
/// The denominator is floored at `1e-12 * max(n)` so vanishing tails do not
/// divide by zero.
pub fn t_vw(n: &DensityField) -> Result<EnergyResult> {
    let max = n.max();
    if !(max > 0.0) {
        return Err(Error::EmptyDensity);
    }
    let floor = VW_DENSITY_FLOOR * max;
    let grid = n.grid();
    let values = n.values();
    let integral = grid.quadrature(|i| grid.gradient_norm_sq_at(values, i) / values[i].max(floor));
    Ok(EnergyResult::new(
        integral / 8.0,
        FunctionalKind::VonWeizsacker,
        Evaluation::on_grid(grid, "(1/8) ∫ |∇n|²/n"),
    ))
}

/// `T_TF[n] = C_TF ∫ n^(5/3)`.
pub fn t_tf(n: &DensityField) -> Result<EnergyResult> {
    let values = n.values();
    let integral = n.grid().quadrature(|i| values[i].powf(5.0 / 3.0));
    Ok(EnergyResult::new(
        c_tf() * integral,
        FunctionalKind::ThomasFermi,
        Evaluation::on_grid(n.grid(), "C_TF ∫ n^(5/3)"),
    ))
}

/// `T_s = -(1/2) sum_i n_i ∫ phi_i^* ∇² phi_i`.
pub fn t_s_orbital(phi: &OrbitalSet) -> Result<EnergyResult> {
    phi.check_invariants()?;
    let grid = phi.grid();
    let mut total = 0.0;
    for (i, &occ) in phi.occupations().iter().enumerate() {
        let (re, im) = phi.parts(i);
        let lap_re = grid.laplacian_values(&re);
        let mut term = grid.quadrature(|k| re[k] * lap_re[k]);
        if let Some(im) = im {
            let lap_im = grid.laplacian_values(&im);
            term += grid.quadrature(|k| im[k] * lap_im[k]);
        }
        total += occ * term;
    }
    Ok(EnergyResult::new(
        -0.5 * phi.density_prefactor() * total,
        FunctionalKind::KsOrbital,
        Evaluation::on_grid(
            grid,
            format!("-(1/2) Σ n_i ∫ φ*∇²φ over {} orbitals", phi.len()),
        ),
    ))
}

/// `(1/2) sum_i n_i ∫ |∇phi_i|^2`, the integrated-by-parts form of
/// [`t_s_orbital`]. The two agree up to a boundary term and stencil error.
pub fn t_s_gradient_form(phi: &OrbitalSet) -> Result<EnergyResult> {
    phi.check_invariants()?;
    let grid = phi.grid();
    let mut total = 0.0;
    for (i, &occ) in phi.occupations().iter().enumerate() {
        let (re, im) = phi.parts(i);
        let mut term = grid.quadrature(|k| grid.gradient_norm_sq_at(&re, k));
        if let Some(im) = im {
            term += grid.quadrature(|k| grid.gradient_norm_sq_at(&im, k));
        }
        total += occ * term;
    }
    Ok(EnergyResult::new(
        0.5 * phi.density_prefactor() * total,
        FunctionalKind::KsOrbital,
        Evaluation::on_grid(
            grid,
            format!("(1/2) Σ n_i ∫ |∇φ|² over {} orbitals", phi.len()),
        ),
    ))
}

/// `(T_vW[n], T_s[{sqrt(n/2)}])`: for a single doubly occupied orbital the
/// two must coincide.
pub fn vw_from_orbital_identity(n: &DensityField) -> Result<(EnergyResult, EnergyResult)> {
    let vw = t_vw(n)?;
    let phi = OrbitalSet::single_from_density(n, 2.0)?;
    let ks = t_s_orbital(&phi)?;
    Ok((vw, ks))
}
