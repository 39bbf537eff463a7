use std::f64::consts::PI;

use ke_lab_core::constrained_search::{minimize_ts, objective_gradient_check, SearchConfig};
use ke_lab_core::electron_gas::{
    continuum_convergence, fill_fermi_sphere, kinetic_discrete, t_g_continuum, tf_scaled_corrected,
};
use ke_lab_core::functionals::{t_s_gradient_form, t_s_orbital, t_tf, t_vw, OrbitalSet};
use ke_lab_core::model_densities::{sample_density, DensityField, DensityModel};
use ke_lab_core::scaling::{scale_density, scale_orbitals, ScalingParams};
use ke_lab_core::Error;

use crate::table::{Cell, Table};
use crate::{Failure, FunctionalArg, RunSpec};

const SCALING_TOL: f64 = 1e-12;
const CONTINUUM_TOL: f64 = 0.02;
const SEARCH_RESIDUAL_TOL: f64 = 1e-4;
const SEARCH_ENERGY_TOL: f64 = 1e-6;
const GRADIENT_CHECK_TOL: f64 = 1e-5;
const GRADIENT_CHECK_STEP: f64 = 1e-5;

/// Twelve tuples with alpha, beta in {0.5, 2} and m, p in {-1, 0.5, 1, 2},
/// every value of each parameter appearing at least twice.
pub fn standard_sweep() -> Vec<ScalingParams> {
    const TUPLES: [(f64, f64, f64, f64); 12] = [
        (0.5, 0.5, -1.0, -1.0),
        (2.0, 2.0, 0.5, 0.5),
        (0.5, 2.0, 1.0, 1.0),
        (2.0, 0.5, 2.0, 2.0),
        (0.5, 0.5, 2.0, -1.0),
        (2.0, 2.0, 1.0, 0.5),
        (0.5, 2.0, 0.5, 2.0),
        (2.0, 0.5, -1.0, 1.0),
        (2.0, 2.0, -1.0, 2.0),
        (0.5, 0.5, 0.5, 1.0),
        (2.0, 0.5, 1.0, -1.0),
        (0.5, 2.0, 2.0, 0.5),
    ];
    TUPLES
        .iter()
        .map(|&(a, b, m, p)| ScalingParams {
            alpha: a,
            beta: b,
            m,
            p,
        })
        .collect()
}

fn density_3d(model: &DensityModel, points: usize) -> Result<DensityField, Failure> {
    Ok(sample_density(model, &model.default_grid(3, points)?)?)
}

fn relative(observed: f64, expected: f64) -> f64 {
    if expected == 0.0 {
        observed.abs()
    } else {
        (observed - expected).abs() / expected.abs()
    }
}

fn finish(table: Table, failures: Vec<String>) -> Result<Table, Failure> {
    if failures.is_empty() {
        Ok(table)
    } else {
        Err(Failure::Assertion(table, failures))
    }
}

fn params_cells(s: &ScalingParams) -> [Cell; 4] {
    [s.alpha.into(), s.beta.into(), s.m.into(), s.p.into()]
}

// One orbital carrying the whole density, at most doubly occupied.
fn single_orbital(n: &DensityField) -> Result<OrbitalSet, Failure> {
    Ok(OrbitalSet::single_from_density(n, n.electrons().min(2.0))?)
}

fn scaled_value(
    functional: FunctionalArg,
    n: &DensityField,
    phi: &OrbitalSet,
    s: &ScalingParams,
) -> Result<f64, Error> {
    Ok(match functional {
        FunctionalArg::Vw => t_vw(&scale_density(n, s)?)?.value,
        FunctionalArg::Tf => t_tf(&scale_density(n, s)?)?.value,
        FunctionalArg::TfCorrected => tf_scaled_corrected(n, s)?.value,
        FunctionalArg::Ks => t_s_orbital(&scale_orbitals(phi, s)?)?.value,
    })
}

pub fn verify_scaling(spec: &RunSpec) -> Result<Table, Failure> {
    let model = spec.model()?;
    let n = density_3d(&model, spec.grid as usize)?;
    let phi = single_orbital(&n)?;
    let params = spec.scaling_params()?;
    let functionals = match spec.functional {
        Some(f) => vec![f],
        None => vec![
            FunctionalArg::Vw,
            FunctionalArg::Tf,
            FunctionalArg::TfCorrected,
            FunctionalArg::Ks,
        ],
    };

    let mut table = Table::new(&[
        "functional",
        "alpha",
        "beta",
        "m",
        "p",
        "observed",
        "predicted",
        "deviation",
    ]);
    let mut failures = Vec::new();
    for f in functionals {
        let base = scaled_value(f, &n, &phi, &ScalingParams::IDENTITY)?;
        if base == 0.0 {
            if spec.functional.is_some() {
                return Err(Failure::Validation(format!(
                    "{f} vanishes for {model}; no scaling factor to observe"
                )));
            }
            table.meta("skipped", format!("{f} vanishes for this density"));
            continue;
        }
        for s in &params {
            let observed = scaled_value(f, &n, &phi, s)? / base;
            let predicted = match f {
                FunctionalArg::Tf => s.naive_tf_factor(),
                _ => s.kinetic_factor(),
            };
            let deviation = relative(observed, predicted);
            if !(deviation <= SCALING_TOL) {
                failures.push(format!(
                    "{f} at alpha={} beta={} m={} p={}: deviation {deviation:e}",
                    s.alpha, s.beta, s.m, s.p
                ));
            }
            let mut row = vec![Cell::from(f.to_string())];
            row.extend(params_cells(s));
            row.extend([observed.into(), predicted.into(), deviation.into()]);
            table.push(row);
        }
    }
    finish(table, failures)
}

fn ladder_counts(ladder: &[f64]) -> Result<Vec<u64>, Failure> {
    if ladder.is_empty() {
        return Ok(vec![100, 1_000, 10_000, 100_000]);
    }
    ladder
        .iter()
        .map(|&x| {
            if (2.0..=1e9).contains(&x) && x.fract() == 0.0 {
                Ok(x as u64)
            } else {
                Err(Failure::Validation(format!(
                    "ladder electron counts must be integers in [2, 1e9], got {x}"
                )))
            }
        })
        .collect()
}

pub fn gas_converge(spec: &RunSpec) -> Result<Table, Failure> {
    let ladder = ladder_counts(&spec.ladder)?;
    let rows = continuum_convergence(spec.nbar, &ladder)?;
    let continuum = t_g_continuum(spec.nbar)?;

    let mut table = Table::new(&[
        "electrons",
        "edge",
        "energy_density",
        "continuum",
        "relative_error",
    ]);
    table.meta("nbar", spec.nbar);
    for r in &rows {
        table.push(vec![
            r.electrons.into(),
            r.edge.into(),
            r.energy_density.into(),
            continuum.into(),
            r.relative_error.into(),
        ]);
    }

    let mut failures = Vec::new();
    if let (Some(first), Some(last)) = (rows.first(), rows.last()) {
        if last.electrons >= 100_000 && !(last.relative_error <= CONTINUUM_TOL) {
            failures.push(format!(
                "{} electrons: error {:e} above {CONTINUUM_TOL}",
                last.electrons, last.relative_error
            ));
        }
        if rows.len() > 1
            && last.electrons > first.electrons
            && !(last.relative_error < first.relative_error)
        {
            failures.push("continuum error does not decrease along the ladder".into());
        }
    }
    finish(table, failures)
}

pub fn paradox(spec: &RunSpec) -> Result<Table, Failure> {
    let model = spec.model()?;
    let n = density_3d(&model, spec.grid as usize)?;
    let params = spec.scaling_params()?;
    let base = t_tf(&n)?.value;
    if !(base > 0.0) {
        return Err(Failure::Validation(format!(
            "Thomas-Fermi energy of {model} is zero"
        )));
    }

    let mut table = Table::new(&[
        "alpha",
        "beta",
        "m",
        "p",
        "t_tf",
        "t_tf_scaled",
        "naive_factor",
        "corrected_factor",
        "kinetic_factor",
        "naive_over_corrected",
        "expected_ratio",
        "deviation",
    ]);
    table.meta("density", model);
    let mut failures = Vec::new();
    for s in &params {
        let scaled = t_tf(&scale_density(&n, s)?)?.value;
        let corrected = tf_scaled_corrected(&n, s)?.value;
        let naive_factor = scaled / base;
        let corrected_factor = corrected / base;
        let ratio = scaled / corrected;
        let expected = s.alpha.powf(2.0 * s.m / 3.0) / s.beta.powf(2.0 * s.p);
        let deviation =
            relative(corrected_factor, s.kinetic_factor()).max(relative(ratio, expected));
        if !(deviation <= SCALING_TOL) {
            failures.push(format!(
                "alpha={} beta={} m={} p={}: deviation {deviation:e}",
                s.alpha, s.beta, s.m, s.p
            ));
        }
        let mut row: Vec<Cell> = params_cells(s).into();
        row.extend([
            base.into(),
            scaled.into(),
            naive_factor.into(),
            corrected_factor.into(),
            s.kinetic_factor().into(),
            ratio.into(),
            expected.into(),
            deviation.into(),
        ]);
        table.push(row);
    }
    finish(table, failures)
}

pub fn search(spec: &RunSpec) -> Result<Table, Failure> {
    let model = spec.model()?;
    let n = sample_density(&model, &model.default_grid(1, spec.grid as usize)?)?;
    let ladder = if spec.ladder.is_empty() {
        vec![SearchConfig::default().penalty_weight]
    } else {
        spec.ladder.clone()
    };
    let reference = t_s_gradient_form(&OrbitalSet::single_from_density(&n, 1.0)?)?.value;

    let mut table = Table::new(&[
        "penalty_weight",
        "orbitals",
        "energy",
        "vw_reference",
        "relative_gap",
        "density_residual",
        "penalty",
        "gradient_norm",
        "iterations",
        "multiplier_updates",
        "converged",
        "gradient_check",
    ]);
    table.meta("density", format!("{model} on {} points", n.grid().len()));
    let mut failures = Vec::new();
    for &lambda in &ladder {
        let cfg = SearchConfig {
            orbital_count: spec.orbitals,
            penalty_weight: lambda,
            seed: spec.seed,
            ..Default::default()
        };
        let result = match minimize_ts(&n, &cfg) {
            Ok(r) => r,
            Err(Error::NotConverged(best)) => *best,
            Err(e) => return Err(e.into()),
        };
        let check = objective_gradient_check(&n, &cfg, GRADIENT_CHECK_STEP)?;
        let gap = relative(result.energy, reference);

        let label = format!("penalty {lambda:e}");
        if !result.converged {
            failures.push(format!(
                "{label}: not converged after {} iterations",
                result.iterations
            ));
        }
        if !(result.density_residual <= SEARCH_RESIDUAL_TOL) {
            failures.push(format!(
                "{label}: density residual {:e}",
                result.density_residual
            ));
        }
        if !(check <= GRADIENT_CHECK_TOL) {
            failures.push(format!("{label}: gradient check {check:e}"));
        }
        if spec.orbitals == 1 && !(gap <= SEARCH_ENERGY_TOL && result.energy >= reference - 1e-8) {
            failures.push(format!(
                "{label}: energy {} against bound {reference}",
                result.energy
            ));
        }

        table.push(vec![
            lambda.into(),
            spec.orbitals.into(),
            result.energy.into(),
            reference.into(),
            gap.into(),
            result.density_residual.into(),
            result.penalty.into(),
            result.gradient_norm.into(),
            result.iterations.into(),
            result.multiplier_updates.into(),
            result.converged.into(),
            check.into(),
        ]);
    }
    finish(table, failures)
}

pub fn tabulate(spec: &RunSpec) -> Result<Table, Failure> {
    let points = spec.grid as usize;
    let oracles = [
        DensityModel::gaussian(1.0, 1.0)?,
        DensityModel::hydrogenic(2.0, 1.0)?,
        DensityModel::uniform_box(1.0, 1.0)?,
    ];

    let mut table = Table::new(&[
        "density",
        "ne",
        "width",
        "functional",
        "value",
        "reference",
        "relative_error",
    ]);
    let mut failures = Vec::new();
    let row = |table: &mut Table,
               name: String,
               ne: f64,
               width: f64,
               functional: &str,
               value: f64,
               reference: Option<f64>| {
        let error = reference.map(|r| relative(value, r));
        table.push(vec![
            name.into(),
            ne.into(),
            width.into(),
            functional.into(),
            value.into(),
            reference.into(),
            error.into(),
        ]);
        error
    };

    for model in &oracles {
        let n = density_3d(model, points)?;
        let phi = single_orbital(&n)?;
        let name = model.family().to_string();
        let (ne, width) = (model.electrons(), model.width());
        let vw = model.analytic_t_vw();
        let tf = model.analytic_t_tf();
        let ks_laplacian = t_s_orbital(&phi)?.value;
        let ks_gradient = t_s_gradient_form(&phi)?.value;

        row(
            &mut table,
            name.clone(),
            ne,
            width,
            "vW",
            t_vw(&n)?.value,
            Some(vw),
        );
        let tf_error = row(
            &mut table,
            name.clone(),
            ne,
            width,
            "TF",
            t_tf(&n)?.value,
            Some(tf),
        );
        row(
            &mut table,
            name.clone(),
            ne,
            width,
            "KS_orbital",
            ks_laplacian,
            Some(vw),
        );
        row(
            &mut table,
            name.clone(),
            ne,
            width,
            "KS_gradient_form",
            ks_gradient,
            Some(vw),
        );
        row(
            &mut table,
            name.clone(),
            ne,
            width,
            "KS_boundary_term",
            ks_laplacian - ks_gradient,
            None,
        );
        if model.family() == ke_lab_core::model_densities::Family::UniformBox {
            if let Some(e) = tf_error.filter(|e| !(*e <= SCALING_TOL)) {
                failures.push(format!("uniform TF error {e:e}"));
            }
        }
    }

    let (electrons, edge) = (14u64, 1.0);
    let gas = fill_fermi_sphere(edge, electrons)?;
    let t_g = kinetic_discrete(&gas).value;
    let gas_name = "gas".to_string();
    let exact = 6.0 * (2.0 * PI).powi(2);
    if let Some(e) = row(
        &mut table,
        gas_name.clone(),
        electrons as f64,
        edge,
        "gas_discrete",
        t_g,
        Some(exact),
    )
    .filter(|e| !(*e <= SCALING_TOL))
    {
        failures.push(format!("14-electron gas error {e:e}"));
    }
    let continuum = t_g_continuum(gas.mean_density())? * gas.volume();
    row(
        &mut table,
        gas_name,
        electrons as f64,
        edge,
        "gas_continuum",
        t_g,
        Some(continuum),
    );
    finish(table, failures)
}
