//! Generalized homogeneous coordinate scaling.
//!
//! Orbitals scale as `phi(r) -> alpha^(m/2) phi(beta^p r)` and densities as
//! `n(r) -> alpha^m n(beta^p r)`. Scaled fields reuse the original samples:
//! the amplitude is applied to the values and the grid is co-scaled (spacing
//! and origin divided by `beta^p`), so the scaled field is exact at every
//! sample point and the discrete functionals inherit the continuum scaling
//! laws up to rounding.

use std::collections::HashMap;

use crate::error::{Error, Result};
use crate::functionals::OrbitalSet;
use crate::grid::ScalarField;
use crate::model_densities::DensityField;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScalingParams {
    pub alpha: f64,
    pub beta: f64,
    pub m: f64,
    pub p: f64,
}

impl ScalingParams {
    pub const IDENTITY: Self = Self {
        alpha: 1.0,
        beta: 1.0,
        m: 0.0,
        p: 0.0,
    };

    pub fn new(alpha: f64, beta: f64, m: f64, p: f64) -> Result<Self> {
        if !(alpha.is_finite() && alpha > 0.0 && beta.is_finite() && beta > 0.0) {
            return Err(Error::InvalidArgument(format!(
                "alpha and beta must be positive, got alpha={alpha}, beta={beta}"
            )));
        }
        if !(m.is_finite() && p.is_finite()) {
            return Err(Error::InvalidArgument(format!(
                "exponents must be finite, got m={m}, p={p}"
            )));
        }
        Ok(Self { alpha, beta, m, p })
    }

    /// `alpha^m`, the factor applied to density samples.
    pub fn amplitude(&self) -> f64 {
        self.alpha.powf(self.m)
    }

    /// `alpha^(m/2)`, the factor applied to orbital samples.
    pub fn orbital_amplitude(&self) -> f64 {
        self.alpha.powf(0.5 * self.m)
    }

    /// `beta^p`, the factor applied to coordinates.
    pub fn length_factor(&self) -> f64 {
        self.beta.powf(self.p)
    }

    /// `alpha^m / beta^p`: the homogeneous scaling of the non-interacting
    /// kinetic energy.
    pub fn kinetic_factor(&self) -> f64 {
        self.amplitude() / self.length_factor()
    }

    /// Kinetic scaling in `dim` dimensions, `alpha^m beta^((2 - dim) p)`.
    pub fn kinetic_factor_in(&self, dim: usize) -> f64 {
        self.amplitude() * self.beta.powf((2.0 - dim as f64) * self.p)
    }

    /// `alpha^(5m/3) / beta^(3p)`: what direct substitution into the
    /// Thomas-Fermi integral gives.
    pub fn naive_tf_factor(&self) -> f64 {
        self.alpha.powf(5.0 * self.m / 3.0) / self.beta.powf(3.0 * self.p)
    }

    /// `alpha^m / beta^(3p)`: scaling of the electron count.
    pub fn electron_factor(&self) -> f64 {
        self.amplitude() / self.beta.powf(3.0 * self.p)
    }

    /// Amplitude and length factors, checked to be finite and nonzero.
    pub fn checked_factors(&self) -> Result<(f64, f64)> {
        let amplitude = self.amplitude();
        let length = self.length_factor();
        let volume = self.beta.powf(3.0 * self.p);
        let ok = |x: f64| x.is_finite() && x > 0.0;
        if !ok(amplitude) {
            return Err(Error::Overflow("alpha^m"));
        }
        if !(ok(length) && ok(volume) && ok(1.0 / volume)) {
            return Err(Error::Overflow("beta^(-3p)"));
        }
        Ok((amplitude, length))
    }

    /// Probe ladder for exponent extraction: alpha and beta each run over
    /// {0.5, 0.8, 1.25, 2.0} with the other held at 1 and m = p = 1.
    pub fn default_probe() -> Vec<Self> {
        const LADDER: [f64; 4] = [0.5, 0.8, 1.25, 2.0];
        let along_alpha = LADDER.iter().map(|&a| Self {
            alpha: a,
            beta: 1.0,
            m: 1.0,
            p: 1.0,
        });
        let along_beta = LADDER.iter().map(|&b| Self {
            alpha: 1.0,
            beta: b,
            m: 1.0,
            p: 1.0,
        });
        along_alpha.chain(along_beta).collect()
    }
}

impl Default for ScalingParams {
    fn default() -> Self {
        Self::IDENTITY
    }
}

/// `n'(r) = alpha^m n(beta^p r)` on the co-scaled grid.
pub fn scale_density(n: &DensityField, s: &ScalingParams) -> Result<DensityField> {
    let (amplitude, length) = s.checked_factors()?;
    let grid = n.grid().co_scaled(length)?;
    let values: Vec<f64> = n.values().iter().map(|v| amplitude * v).collect();
    if values.iter().any(|v| !v.is_finite()) {
        return Err(Error::Overflow("scaled density sample"));
    }
    let field = ScalarField::new(grid, values)?;
    let dim = n.grid().dim() as f64;
    DensityField::with_electrons(field, n.electrons() * amplitude / s.beta.powf(dim * s.p))
}

/// `phi'_i(r) = alpha^(m/2) phi_i(beta^p r)` on the co-scaled grid.
///
/// The amplitude is folded into the set's common density prefactor rather
/// than into the samples, so the induced density of the result equals
/// [`scale_density`] of the original induced density bit for bit.
pub fn scale_orbitals(phi: &OrbitalSet, s: &ScalingParams) -> Result<OrbitalSet> {
    let (amplitude, length) = s.checked_factors()?;
    let grid = phi.grid().co_scaled(length)?;
    let prefactor = phi.density_prefactor() * amplitude;
    if !(prefactor.is_finite() && prefactor > 0.0) {
        return Err(Error::Overflow("orbital amplitude"));
    }
    phi.with_grid_and_prefactor(grid, prefactor)
}

/// Least-squares homogeneity exponents of a functional.
///
/// Fits `ln T[n_s] = c + a (m ln alpha) + b (p ln beta)` over the probe set
/// and returns `(a, b)`. A functional obeying the kinetic-energy scaling law
/// gives `(1, -1)`.
pub fn homogeneity_exponents<F>(
    functional: F,
    n: &DensityField,
    probe: &[ScalingParams],
) -> Result<(f64, f64)>
where
    F: Fn(&DensityField) -> Result<f64>,
{
    check_probe(probe)?;

    let mut rows = Vec::with_capacity(probe.len());
    for s in probe {
        let value = functional(&scale_density(n, s)?)?;
        if !(value > 0.0) {
            return Err(Error::NonPositiveValue(value));
        }
        rows.push((s.m * s.alpha.ln(), s.p * s.beta.ln(), value.ln()));
    }

    let count = rows.len() as f64;
    let mean = rows.iter().fold((0.0, 0.0, 0.0), |acc, r| {
        (
            acc.0 + r.0 / count,
            acc.1 + r.1 / count,
            acc.2 + r.2 / count,
        )
    });
    let (mut sxx, mut sxy, mut syy, mut sxz, mut syz) = (0.0, 0.0, 0.0, 0.0, 0.0);
    for &(x, y, z) in &rows {
        let (x, y, z) = (x - mean.0, y - mean.1, z - mean.2);
        sxx += x * x;
        sxy += x * y;
        syy += y * y;
        sxz += x * z;
        syz += y * z;
    }
    let det = sxx * syy - sxy * sxy;
    if !(det > 1e-12 * sxx * syy) {
        return Err(Error::InsufficientProbe(
            "alpha and beta variations are collinear".into(),
        ));
    }
    let slope_alpha = (sxz * syy - syz * sxy) / det;
    let slope_beta = (syz * sxx - sxz * sxy) / det;
    Ok((slope_alpha, slope_beta))
}

// At least four distinct alpha settings must share one beta setting, and
// vice versa.
fn check_probe(probe: &[ScalingParams]) -> Result<()> {
    fn widest_group(pairs: impl Iterator<Item = (f64, f64)>) -> usize {
        let mut groups: HashMap<u64, Vec<u64>> = HashMap::new();
        for (fixed, varying) in pairs {
            let entry = groups.entry(fixed.to_bits()).or_default();
            if !entry.contains(&varying.to_bits()) {
                entry.push(varying.to_bits());
            }
        }
        groups.values().map(Vec::len).max().unwrap_or(0)
    }
    let x = |s: &ScalingParams| s.m * s.alpha.ln() + 0.0;
    let y = |s: &ScalingParams| s.p * s.beta.ln() + 0.0;
    let along_alpha = widest_group(probe.iter().map(|s| (y(s), x(s))));
    let along_beta = widest_group(probe.iter().map(|s| (x(s), y(s))));
    if along_alpha < 4 || along_beta < 4 {
        return Err(Error::InsufficientProbe(format!(
            "{along_alpha} alpha settings at fixed beta, {along_beta} beta settings at fixed alpha"
        )));
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::functionals::{t_tf, t_vw};
    use crate::grid::integrate;
    use crate::model_densities::{sample_density, DensityModel};

    fn gaussian(points: usize) -> DensityField {
        let model = DensityModel::gaussian(1.0, 1.0).unwrap();
        sample_density(&model, &model.default_grid(3, points).unwrap()).unwrap()
    }

    #[test]
    fn rejects_invalid_params() {
        assert!(ScalingParams::new(0.0, 1.0, 1.0, 1.0).is_err());
        assert!(ScalingParams::new(1.0, -2.0, 1.0, 1.0).is_err());
        assert!(ScalingParams::new(1.0, 1.0, f64::NAN, 1.0).is_err());
    }

    #[test]
    fn identity_leaves_density_unchanged() {
        let n = gaussian(24);
        let scaled = scale_density(&n, &ScalingParams::IDENTITY).unwrap();
        assert_eq!(scaled, n);
    }

    #[test]
    fn pure_amplitude_scaling_of_uniform_box() {
        let model = DensityModel::uniform_box(1.0, 1.0).unwrap();
        let n = sample_density(&model, &model.default_grid(3, 8).unwrap()).unwrap();
        let s = ScalingParams::new(2.0, 3.7, 1.0, 0.0).unwrap();
        let scaled = scale_density(&n, &s).unwrap();
        assert!(scaled.values().iter().all(|&v| v == 2.0));
        assert_eq!(scaled.grid(), n.grid());
    }

    #[test]
    fn electron_count_follows_change_of_variables() {
        let n = gaussian(32);
        let s = ScalingParams::new(2.0, 2.0, 1.0, 1.0).unwrap();
        let scaled = scale_density(&n, &s).unwrap();
        assert!((integrate(scaled.field()) - 0.25).abs() < 1e-10);
        assert!((scaled.electrons() - 0.25).abs() < 1e-10);
    }

    #[test]
    fn overflow_is_reported() {
        let n = gaussian(16);
        let s = ScalingParams::new(1e10, 1.0, 400.0, 0.0).unwrap();
        assert!(matches!(scale_density(&n, &s), Err(Error::Overflow(_))));
        let s = ScalingParams::new(1.0, 1e-10, 0.0, 50.0).unwrap();
        assert!(matches!(scale_density(&n, &s), Err(Error::Overflow(_))));
    }

    #[test]
    fn scaled_samples_match_the_analytic_scaled_density() {
        let model = DensityModel::gaussian(1.0, 1.0).unwrap();
        let n = sample_density(&model, &model.default_grid(3, 16).unwrap()).unwrap();
        let s = ScalingParams::new(3.0, 1.5, 0.5, 2.0).unwrap();
        let scaled = scale_density(&n, &s).unwrap();
        let (amp, len) = (s.amplitude(), s.length_factor());
        for i in (0..scaled.values().len()).step_by(37) {
            let r = scaled.grid().position(i);
            let rr = (r[0] * r[0] + r[1] * r[1] + r[2] * r[2]).sqrt();
            let expected = amp * model.density_at(len * rr, 3);
            assert!((scaled.values()[i] - expected).abs() <= 1e-13 * amp * model.peak(3));
        }
    }

    #[test]
    fn vw_and_tf_exponents() {
        let n = gaussian(32);
        let probe = ScalingParams::default_probe();
        let vw = homogeneity_exponents(|d| Ok(t_vw(d)?.value), &n, &probe).unwrap();
        assert!(
            (vw.0 - 1.0).abs() < 1e-6 && (vw.1 + 1.0).abs() < 1e-6,
            "{vw:?}"
        );
        let tf = homogeneity_exponents(|d| Ok(t_tf(d)?.value), &n, &probe).unwrap();
        assert!(
            (tf.0 - 5.0 / 3.0).abs() < 1e-6 && (tf.1 + 3.0).abs() < 1e-6,
            "{tf:?}"
        );
        let count = homogeneity_exponents(|d| Ok(integrate(d.field())), &n, &probe).unwrap();
        assert!((count.0 - 1.0).abs() < 1e-9 && (count.1 + 3.0).abs() < 1e-9);
    }

    #[test]
    fn thin_probe_is_rejected() {
        let n = gaussian(16);
        let probe = &ScalingParams::default_probe()[..6];
        assert!(matches!(
            homogeneity_exponents(|d| Ok(t_tf(d)?.value), &n, probe),
            Err(Error::InsufficientProbe(_))
        ));
    }

    #[test]
    fn non_positive_functional_is_rejected() {
        let n = gaussian(16);
        let probe = ScalingParams::default_probe();
        assert!(matches!(
            homogeneity_exponents(|_| Ok(0.0), &n, &probe),
            Err(Error::NonPositiveValue(_))
        ));
    }
}
