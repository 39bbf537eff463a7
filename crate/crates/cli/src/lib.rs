//! Command-line driver: runs the scaling, gas and search checks and prints
//! the results as TSV or JSON tables.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

mod commands;
pub mod table;

use std::ffi::OsString;
use std::fmt;
use std::io::Write;

use clap::{Parser, Subcommand, ValueEnum};
use ke_lab_core::model_densities::{DensityModel, Family};
use ke_lab_core::scaling::ScalingParams;
use ke_lab_core::Error;

pub use commands::standard_sweep;
use table::Table;

pub const EXIT_OK: i32 = 0;
pub const EXIT_ASSERTION: i32 = 1;
pub const EXIT_VALIDATION: i32 = 2;

#[derive(Debug, Clone, Parser)]
#[command(
    name = "ke-lab",
    version,
    about = "Kinetic-energy functional scaling checks"
)]
pub struct RunSpec {
    #[command(subcommand)]
    pub command: Command,

    #[arg(long, value_enum, default_value_t = FamilyArg::Gaussian, global = true)]
    pub family: FamilyArg,

    /// Electron count; defaults to 2 for hydrogenic and 1 otherwise.
    #[arg(long, global = true)]
    pub ne: Option<f64>,

    /// Gaussian exponent, hydrogenic charge or uniform box edge.
    #[arg(long, default_value_t = 1.0, global = true)]
    pub width: f64,

    /// Points per axis.
    #[arg(long, default_value_t = 64, value_parser = clap::value_parser!(u16).range(16..=256), global = true)]
    pub grid: u16,

    #[arg(long, value_delimiter = ',', global = true)]
    pub alpha: Vec<f64>,

    #[arg(long, value_delimiter = ',', global = true)]
    pub beta: Vec<f64>,

    #[arg(
        long,
        value_delimiter = ',',
        global = true,
        allow_negative_numbers = true
    )]
    pub m: Vec<f64>,

    #[arg(
        long,
        value_delimiter = ',',
        global = true,
        allow_negative_numbers = true
    )]
    pub p: Vec<f64>,

    #[arg(long, value_enum, global = true)]
    pub functional: Option<FunctionalArg>,

    /// Electron counts for gas-converge, penalty weights for search.
    #[arg(long, value_delimiter = ',', global = true)]
    pub ladder: Vec<f64>,

    /// Mean density of the gas ladder.
    #[arg(long, default_value_t = 1.0, global = true)]
    pub nbar: f64,

    /// Orbitals used by the search.
    #[arg(long, default_value_t = 1, global = true)]
    pub orbitals: usize,

    #[arg(long, value_enum, default_value_t = Format::Tsv, global = true)]
    pub format: Format,

    #[arg(long, global = true)]
    pub seed: Option<u64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Subcommand)]
pub enum Command {
    /// Observed against predicted scaling factors of each functional.
    VerifyScaling,
    /// Discrete gas energy density against the continuum limit.
    GasConverge,
    /// Naive against corrected Thomas-Fermi scaling.
    Paradox,
    /// Constrained search for the orbital kinetic energy on a 1-D grid.
    Search,
    /// Functional values for the reference densities.
    Tabulate,
}

impl fmt::Display for Command {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Command::VerifyScaling => "verify-scaling",
            Command::GasConverge => "gas-converge",
            Command::Paradox => "paradox",
            Command::Search => "search",
            Command::Tabulate => "tabulate",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum FamilyArg {
    Gaussian,
    Hydrogenic,
    Uniform,
}

impl From<FamilyArg> for Family {
    fn from(f: FamilyArg) -> Self {
        match f {
            FamilyArg::Gaussian => Family::Gaussian,
            FamilyArg::Hydrogenic => Family::Hydrogenic1s,
            FamilyArg::Uniform => Family::UniformBox,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum FunctionalArg {
    Vw,
    Tf,
    TfCorrected,
    Ks,
}

impl fmt::Display for FunctionalArg {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            FunctionalArg::Vw => "vW",
            FunctionalArg::Tf => "TF",
            FunctionalArg::TfCorrected => "TF_corrected",
            FunctionalArg::Ks => "KS_orbital",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Tsv,
    Json,
}

/// Why a run did not finish cleanly.
#[derive(Debug)]
pub enum Failure {
    Validation(String),
    /// The table was produced but some checks failed.
    Assertion(Table, Vec<String>),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure::Validation(e.to_string())
    }
}

impl RunSpec {
    pub fn model(&self) -> Result<DensityModel, Failure> {
        let family = Family::from(self.family);
        let ne = self.ne.unwrap_or(match family {
            Family::Hydrogenic1s => 2.0,
            _ => 1.0,
        });
        Ok(DensityModel::new(family, ne, self.width)?)
    }

    /// Scaling tuples from the comma lists; a list of length one is
    /// broadcast, and no lists at all give the standard sweep.
    pub fn scaling_params(&self) -> Result<Vec<ScalingParams>, Failure> {
        let lists = [&self.alpha, &self.beta, &self.m, &self.p];
        if lists.iter().all(|l| l.is_empty()) {
            return Ok(standard_sweep());
        }
        let len = lists.iter().map(|l| l.len()).max().unwrap_or(0);
        if lists.iter().any(|l| l.len() > 1 && l.len() != len) {
            return Err(Failure::Validation(
                "--alpha, --beta, --m and --p lists must have equal lengths or length 1".into(),
            ));
        }
        let pick = |l: &Vec<f64>, i: usize, default: f64| match l.len() {
            0 => default,
            1 => l[0],
            _ => l[i],
        };
        (0..len)
            .map(|i| {
                ScalingParams::new(
                    pick(&self.alpha, i, 1.0),
                    pick(&self.beta, i, 1.0),
                    pick(&self.m, i, 1.0),
                    pick(&self.p, i, 1.0),
                )
                .map_err(Failure::from)
            })
            .collect()
    }

    fn echo(&self) -> String {
        let list = |l: &[f64]| l.iter().map(f64::to_string).collect::<Vec<_>>().join(",");
        let mut s = format!(
            "family={} ne={} width={} grid={}",
            Family::from(self.family),
            self.ne.map_or("default".into(), |n| n.to_string()),
            self.width,
            self.grid
        );
        for (name, l) in [
            ("alpha", &self.alpha),
            ("beta", &self.beta),
            ("m", &self.m),
            ("p", &self.p),
        ] {
            if !l.is_empty() {
                s += &format!(" {name}={}", list(l));
            }
        }
        if let Some(f) = self.functional {
            s += &format!(" functional={f}");
        }
        if !self.ladder.is_empty() {
            s += &format!(" ladder={}", list(&self.ladder));
        }
        s += &format!(" nbar={} orbitals={}", self.nbar, self.orbitals);
        if let Some(seed) = self.seed {
            s += &format!(" seed={seed}");
        }
        s
    }

    /// Runs the command and returns its table.
    pub fn execute(&self) -> Result<Table, Failure> {
        let mut table = match self.command {
            Command::VerifyScaling => commands::verify_scaling(self),
            Command::GasConverge => commands::gas_converge(self),
            Command::Paradox => commands::paradox(self),
            Command::Search => commands::search(self),
            Command::Tabulate => commands::tabulate(self),
        };
        let header = |t: &mut Table| {
            let mut meta = vec![
                ("version".to_string(), env!("CARGO_PKG_VERSION").to_string()),
                ("command".to_string(), self.command.to_string()),
                ("spec".to_string(), self.echo()),
            ];
            meta.append(&mut t.metadata);
            t.metadata = meta;
        };
        match &mut table {
            Ok(t) | Err(Failure::Assertion(t, _)) => header(t),
            Err(Failure::Validation(_)) => {}
        }
        table
    }
}

/// Sizes the global thread pool from `KE_LAB_THREADS` (0 or unset = auto).
pub fn configure_threads() -> Result<(), String> {
    let threads = match std::env::var("KE_LAB_THREADS") {
        Ok(v) => v
            .trim()
            .parse::<usize>()
            .map_err(|_| format!("KE_LAB_THREADS must be a nonnegative integer, got {v:?}"))?,
        Err(_) => 0,
    };
    // a pool that already exists keeps its size
    let _ = rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build_global();
    Ok(())
}

fn emit(table: &Table, format: Format, out: &mut dyn Write) -> std::io::Result<()> {
    match format {
        Format::Tsv => table.write_tsv(out),
        Format::Json => table.write_json(out),
    }
}

/// Parses `args` (program name first), runs the command and returns the
/// exit code: 0 on success, 1 when a check fails, 2 on invalid input.
pub fn run<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let spec = match RunSpec::try_parse_from(args) {
        Ok(spec) => spec,
        Err(e) => {
            let code = if e.use_stderr() {
                EXIT_VALIDATION
            } else {
                EXIT_OK
            };
            let text = e.render().to_string();
            let _ = if e.use_stderr() {
                write!(err, "{text}")
            } else {
                write!(out, "{text}")
            };
            return code;
        }
    };
    let (table, failures) = match spec.execute() {
        Ok(table) => (table, Vec::new()),
        Err(Failure::Assertion(table, failures)) => (table, failures),
        Err(Failure::Validation(msg)) => {
            let _ = writeln!(err, "error: {msg}");
            return EXIT_VALIDATION;
        }
    };
    if let Err(e) = emit(&table, spec.format, out) {
        let _ = writeln!(err, "error: {e}");
        return EXIT_VALIDATION;
    }
    if failures.is_empty() {
        EXIT_OK
    } else {
        for f in &failures {
            let _ = writeln!(err, "check failed: {f}");
        }
        EXIT_ASSERTION
    }
}
