//! Scenario files: JSON documents describing one system, its initial data, the
//! time grid and which quantities to report.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::path::Path;

use corrdyn::dynamics::HamiltonianSpec;
use corrdyn::tensorspace::{is_hermitian, CMatrix, Space, Statistics};
use num_complex::Complex64;
use serde::Deserialize;
use thiserror::Error;

/// Complex matrix as rows of `[re, im]` pairs.
pub type MatrixJson = Vec<Vec<[f64; 2]>>;

const HERMITIAN_TOL: f64 = 1e-12;

#[derive(Debug, Error)]
pub enum ScenarioError {
    #[error("cannot read {path}: {source}")]
    Io { path: String, source: std::io::Error },
    #[error("parse error at line {line}, column {column}: {message}")]
    Parse { line: usize, column: usize, message: String },
    #[error("invalid field `{field}`: {message}")]
    Field { field: String, message: String },
}

fn field_error(field: impl Into<String>, message: impl Into<String>) -> ScenarioError {
    ScenarioError::Field { field: field.into(), message: message.into() }
}

/// Quantities a run can report per time point.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Output {
    Correlations,
    MarginalDensities,
    MarginalCorrelations,
    Averages,
    Dispersion,
    ParticleNumber,
    Truncation,
    Residuals,
}

impl Output {
    pub const ALL: [Output; 8] = [
        Output::Correlations,
        Output::MarginalDensities,
        Output::MarginalCorrelations,
        Output::Averages,
        Output::Dispersion,
        Output::ParticleNumber,
        Output::Truncation,
        Output::Residuals,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Output::Correlations => "correlations",
            Output::MarginalDensities => "marginal_densities",
            Output::MarginalCorrelations => "marginal_correlations",
            Output::Averages => "averages",
            Output::Dispersion => "dispersion",
            Output::ParticleNumber => "particle_number",
            Output::Truncation => "truncation",
            Output::Residuals => "residuals",
        }
    }
}

impl fmt::Display for Output {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Tolerances {
    #[serde(default = "default_oracle_tol")]
    pub oracle: f64,
    #[serde(default = "default_fd_tol")]
    pub finite_difference: f64,
    #[serde(default = "default_algebraic_tol")]
    pub algebraic: f64,
}

fn default_oracle_tol() -> f64 {
    1e-8
}

fn default_fd_tol() -> f64 {
    1e-5
}

fn default_algebraic_tol() -> f64 {
    1e-10
}

impl Default for Tolerances {
    fn default() -> Self {
        Tolerances {
            oracle: default_oracle_tol(),
            finite_difference: default_fd_tol(),
            algebraic: default_algebraic_tol(),
        }
    }
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct TimeGridJson {
    start: f64,
    stop: f64,
    steps: usize,
}

#[derive(Debug, Deserialize)]
#[serde(tag = "mode", rename_all = "snake_case", deny_unknown_fields)]
enum InitialJson {
    Chaos { density: MatrixJson },
    Correlations { components: Vec<MatrixJson> },
    Densities { components: Vec<MatrixJson> },
}

fn default_hbar() -> f64 {
    1.0
}

fn default_true() -> bool {
    true
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct ScenarioJson {
    d: usize,
    #[serde(alias = "N")]
    cutoff: usize,
    #[serde(default = "default_hbar")]
    hbar: f64,
    statistics: String,
    kinetic: MatrixJson,
    #[serde(default)]
    potentials: BTreeMap<String, MatrixJson>,
    initial: InitialJson,
    #[serde(default = "default_true")]
    normalize: bool,
    time: TimeGridJson,
    #[serde(default)]
    outputs: Option<Vec<Output>>,
    #[serde(default)]
    observable: Option<MatrixJson>,
    #[serde(default)]
    oracle: bool,
    #[serde(default)]
    tolerances: Tolerances,
}

/// Initial data after validation; matrices have the shapes of their sectors.
#[derive(Debug, Clone, PartialEq)]
pub enum InitialData {
    /// One-particle density, all higher correlations zero.
    Chaos(CMatrix),
    /// `g_1, …, g_k`, padded with zeros up to the cutoff.
    Correlations(Vec<CMatrix>),
    /// `D_1, …, D_k` with unit vacuum, padded with zeros up to the cutoff.
    Densities(Vec<CMatrix>),
}

impl InitialData {
    pub fn mode(&self) -> &'static str {
        match self {
            InitialData::Chaos(_) => "chaos",
            InitialData::Correlations(_) => "correlations",
            InitialData::Densities(_) => "densities",
        }
    }
}

#[derive(Debug, Clone)]
pub struct Scenario {
    pub d: usize,
    pub cutoff: usize,
    pub statistics: Statistics,
    pub spec: HamiltonianSpec,
    pub initial: InitialData,
    pub normalize: bool,
    pub times: Vec<f64>,
    pub outputs: BTreeSet<Output>,
    /// One-particle kernel of the additive observable used by averages and dispersion.
    pub observable: CMatrix,
    pub oracle: bool,
    pub tolerances: Tolerances,
}

pub fn load_scenario(path: &Path) -> Result<Scenario, ScenarioError> {
    let text = std::fs::read_to_string(path)
        .map_err(|source| ScenarioError::Io { path: path.display().to_string(), source })?;
    parse_scenario(&text)
}

pub fn parse_scenario(text: &str) -> Result<Scenario, ScenarioError> {
    let raw: ScenarioJson = serde_json::from_str(text).map_err(|e| ScenarioError::Parse {
        line: e.line(),
        column: e.column(),
        message: e.to_string(),
    })?;
    validate(raw)
}

fn matrix(field: &str, rows: &MatrixJson, dim: usize) -> Result<CMatrix, ScenarioError> {
    if rows.len() != dim || rows.iter().any(|r| r.len() != dim) {
        let shape = rows.iter().map(Vec::len).collect::<Vec<_>>();
        return Err(field_error(field, format!("expected a {dim}x{dim} matrix, found rows of lengths {shape:?}")));
    }
    let m = CMatrix::from_fn(dim, dim, |i, j| Complex64::new(rows[i][j][0], rows[i][j][1]));
    if m.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
        return Err(field_error(field, "entries must be finite"));
    }
    Ok(m)
}

fn hermitian(field: &str, rows: &MatrixJson, dim: usize) -> Result<CMatrix, ScenarioError> {
    let m = matrix(field, rows, dim)?;
    if !is_hermitian(&m, HERMITIAN_TOL) {
        return Err(field_error(field, "matrix is not Hermitian"));
    }
    Ok(m)
}

fn unit_trace(field: &str, m: CMatrix) -> Result<CMatrix, ScenarioError> {
    let tr = m.trace();
    if tr.norm() < 1e-300 {
        return Err(field_error(field, "cannot normalize a matrix with zero trace"));
    }
    Ok(m / tr)
}

fn sequence(
    field: &str,
    components: &[MatrixJson],
    space: &Space,
    cutoff: usize,
    normalize: bool,
) -> Result<Vec<CMatrix>, ScenarioError> {
    if components.len() > cutoff {
        return Err(field_error(field, format!("{} components exceed the cutoff {cutoff}", components.len())));
    }
    let mut out = Vec::with_capacity(cutoff);
    for n in 1..=cutoff {
        let dim = space.dim(n).map_err(|e| field_error("cutoff", e.to_string()))?;
        match components.get(n - 1) {
            Some(rows) => {
                let name = format!("{field}[{}]", n - 1);
                let m = hermitian(&name, rows, dim)?;
                out.push(if normalize { unit_trace(&name, m)? } else { m });
            }
            None => out.push(CMatrix::zeros(dim, dim)),
        }
    }
    Ok(out)
}

fn validate(raw: ScenarioJson) -> Result<Scenario, ScenarioError> {
    if raw.d == 0 {
        return Err(field_error("d", "one-particle dimension must be positive"));
    }
    if raw.cutoff == 0 {
        return Err(field_error("cutoff", "particle cutoff must be at least 1"));
    }
    if !(raw.hbar.is_finite() && raw.hbar > 0.0) {
        return Err(field_error("hbar", "must be positive and finite"));
    }
    let statistics: Statistics = raw.statistics.parse().map_err(|_| {
        field_error("statistics", format!("unknown selector {:?}, expected bose, fermi or boltzmann", raw.statistics))
    })?;
    let space = Space::new(raw.d).map_err(|e| field_error("d", e.to_string()))?;

    let mut spec = HamiltonianSpec::free(hermitian("kinetic", &raw.kinetic, raw.d)?).with_hbar(raw.hbar);
    for (key, rows) in &raw.potentials {
        let field = format!("potentials.{key}");
        let k: usize =
            key.parse().map_err(|_| field_error(&field, "key must be the particle number of the potential"))?;
        if k < 2 {
            return Err(field_error(&field, "interaction potentials act on at least two particles"));
        }
        let dim = space.dim(k).map_err(|e| field_error(&field, e.to_string()))?;
        spec = spec.with_potential(k, hermitian(&field, rows, dim)?);
    }
    spec.validate(&space).map_err(|e| field_error("potentials", e.to_string()))?;

    let initial = match &raw.initial {
        InitialJson::Chaos { density } => {
            let m = hermitian("initial.density", density, raw.d)?;
            InitialData::Chaos(if raw.normalize { unit_trace("initial.density", m)? } else { m })
        }
        InitialJson::Correlations { components } => {
            InitialData::Correlations(sequence("initial.components", components, &space, raw.cutoff, false)?)
        }
        InitialJson::Densities { components } => {
            InitialData::Densities(sequence("initial.components", components, &space, raw.cutoff, raw.normalize)?)
        }
    };

    let grid = &raw.time;
    if !grid.start.is_finite() || !grid.stop.is_finite() {
        return Err(field_error("time", "start and stop must be finite"));
    }
    if grid.steps == 0 && grid.start != grid.stop {
        return Err(field_error("time.steps", "a grid with distinct start and stop needs at least one step"));
    }
    let times = if grid.steps == 0 {
        vec![grid.start]
    } else {
        (0..=grid.steps).map(|i| grid.start + (grid.stop - grid.start) * i as f64 / grid.steps as f64).collect()
    };

    let outputs: BTreeSet<Output> = match raw.outputs {
        Some(list) => list.into_iter().collect(),
        None => Output::ALL.into_iter().collect(),
    };
    let observable = match &raw.observable {
        Some(rows) => hermitian("observable", rows, raw.d)?,
        None => CMatrix::identity(raw.d, raw.d),
    };
    let tol = raw.tolerances;
    for (name, value) in
        [("oracle", tol.oracle), ("finite_difference", tol.finite_difference), ("algebraic", tol.algebraic)]
    {
        if !(value.is_finite() && value > 0.0) {
            return Err(field_error(format!("tolerances.{name}"), "must be positive and finite"));
        }
    }

    Ok(Scenario {
        d: raw.d,
        cutoff: raw.cutoff,
        statistics,
        spec,
        initial,
        normalize: raw.normalize,
        times,
        outputs,
        observable,
        oracle: raw.oracle,
        tolerances: tol,
    })
}

pub fn matrix_to_json(m: &CMatrix) -> MatrixJson {
    (0..m.nrows()).map(|i| (0..m.ncols()).map(|j| [m[(i, j)].re, m[(i, j)].im]).collect()).collect()
}
