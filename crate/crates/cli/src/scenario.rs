//! Scenario files: a single TOML document describing one run.
//!
//! ```toml
//! dimension = 3
//!
//! [potential]
//! magnetic = { kind = "ex13" }
//! electric = { kind = "screened", strength = 0.5 }
//!
//! [grid]
//! half_width = 8.0
//! spacing = 0.25
//!
//! [run]
//! kind = "sweep"
//! lambda = 1.0
//! epsilons = [1.0, 0.1, 0.01]
//! datum = { kind = "gaussian", width = 1.0 }
//! ```

use std::path::{Path, PathBuf};

use morcam::fields::PotentialSpec;
use morcam::resolvent::{DatumSpec, SolverOptions};
use serde::{Deserialize, Serialize};

fn default_dimension() -> usize {
    3
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Scenario {
    #[serde(default = "default_dimension")]
    pub dimension: usize,
    #[serde(default)]
    pub potential: PotentialSpec,
    #[serde(default)]
    pub grid: GridSection,
    pub run: RunSpec,
    #[serde(default)]
    pub solver: SolverSection,
    #[serde(default)]
    pub output: OutputSection,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridSection {
    pub half_width: f64,
    pub spacing: f64,
}

impl Default for GridSection {
    fn default() -> Self {
        Self {
            half_width: 8.0,
            spacing: 0.25,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SolverSection {
    pub tol: f64,
    pub restart: usize,
    pub max_iterations: usize,
}

impl Default for SolverSection {
    fn default() -> Self {
        let d = SolverOptions::default();
        Self {
            tol: d.tol,
            restart: d.restart,
            max_iterations: d.max_iterations,
        }
    }
}

impl From<SolverSection> for SolverOptions {
    fn from(s: SolverSection) -> Self {
        SolverOptions {
            tol: s.tol,
            restart: s.restart,
            max_iterations: s.max_iterations,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OutputSection {
    /// Relative paths are resolved against the scenario file's directory.
    pub directory: PathBuf,
    /// Prefix for every file written by the run.
    pub prefix: String,
}

impl Default for OutputSection {
    fn default() -> Self {
        Self {
            directory: PathBuf::from("."),
            prefix: String::new(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Differentiation {
    #[default]
    Both,
    Analytic,
    FiniteDifference,
}

fn default_samples() -> usize {
    1000
}
fn default_beta() -> f64 {
    morcam::multipliers::DEFAULT_BETA
}
fn default_true() -> bool {
    true
}
fn default_epsilons() -> Vec<f64> {
    vec![1.0, 0.1, 0.01, 0.001]
}
fn default_lambda() -> f64 {
    1.0
}
fn default_datum() -> DatumSpec {
    DatumSpec::Gaussian {
        width: 1.0,
        amplitude: 1.0,
        center: None,
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum RunSpec {
    /// Samples `|B_τ|` and `∂_r V` at random points of the ball of radius `radius`.
    FieldsCheck {
        #[serde(default = "default_samples")]
        samples: usize,
        #[serde(default)]
        seed: u64,
        /// Defaults to the grid half-width.
        #[serde(default)]
        radius: Option<f64>,
        #[serde(default)]
        differentiation: Differentiation,
    },
    Admissibility {},
    Solve {
        #[serde(default = "default_lambda")]
        lambda: f64,
        epsilon: f64,
        #[serde(default = "default_datum")]
        datum: DatumSpec,
        #[serde(default, rename = "M")]
        m: Option<f64>,
        #[serde(default)]
        delta: Option<f64>,
        /// Radii for the resonance functionals; default `{2, 4, ..., L}`.
        #[serde(default)]
        radii: Option<Vec<f64>>,
        #[serde(default = "default_true")]
        snapshot: bool,
    },
    VerifyIdentity {
        #[serde(default)]
        lambda: f64,
        #[serde(default = "default_epsilon_identity")]
        epsilon: f64,
        /// Manufactured solution `u` when `manufactured`, else the datum `f`.
        datum: DatumSpec,
        #[serde(default = "default_true")]
        manufactured: bool,
        #[serde(default, rename = "M")]
        m: Option<f64>,
        #[serde(default = "default_beta")]
        beta: f64,
        /// Multiplier scales; default `{L/8, L/4, L/2}`.
        #[serde(default)]
        radii: Option<Vec<f64>>,
        /// Worst relative residual above which the run fails with an accuracy error.
        #[serde(default)]
        tolerance: Option<f64>,
    },
    Sweep {
        #[serde(default = "default_lambda")]
        lambda: f64,
        #[serde(default = "default_epsilons")]
        epsilons: Vec<f64>,
        #[serde(default = "default_datum")]
        datum: DatumSpec,
        #[serde(default, rename = "M")]
        m: Option<f64>,
        #[serde(default)]
        delta: Option<f64>,
        #[serde(default = "default_epsilon_factor")]
        epsilon_min_factor: f64,
    },
}

fn default_epsilon_identity() -> f64 {
    1.0
}
fn default_epsilon_factor() -> f64 {
    morcam::resolvent::EPSILON_MIN_FACTOR
}

impl RunSpec {
    pub fn name(&self) -> &'static str {
        match self {
            RunSpec::FieldsCheck { .. } => "fields-check",
            RunSpec::Admissibility {} => "admissibility",
            RunSpec::Solve { .. } => "solve",
            RunSpec::VerifyIdentity { .. } => "verify-identity",
            RunSpec::Sweep { .. } => "sweep",
        }
    }
}

/// Parse failure with a human-readable location.
#[derive(Debug)]
pub struct ParseError {
    pub message: String,
}

impl std::fmt::Display for ParseError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.message)
    }
}

pub fn parse(text: &str, origin: &str) -> Result<Scenario, ParseError> {
    toml::from_str(text).map_err(|e| {
        let location = match e.span() {
            Some(span) => {
                let (line, col) = line_col(text, span.start);
                format!("{origin}:{line}:{col}")
            }
            None => origin.to_string(),
        };
        ParseError {
            message: format!("{location}: {}", e.message()),
        }
    })
}

fn line_col(text: &str, offset: usize) -> (usize, usize) {
    let before = &text[..offset.min(text.len())];
    let line = before.matches('\n').count() + 1;
    let col = before.rsplit('\n').next().map_or(0, |s| s.chars().count()) + 1;
    (line, col)
}

pub fn load(path: &Path) -> Result<Scenario, ParseError> {
    let text = std::fs::read_to_string(path).map_err(|e| ParseError {
        message: format!("{}: {e}", path.display()),
    })?;
    parse(&text, &path.display().to_string())
}
