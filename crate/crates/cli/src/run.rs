//! Run orchestration: builds the system, sweeps the time grid (points in parallel,
//! assembled in grid order) and evaluates the requested outputs and checks.

use std::collections::BTreeMap;
use std::time::Instant;

use corrdyn::error::Error as CoreError;
use corrdyn::hierarchy::{marginal_correlation, marginal_density, CorrelationDynamics, CorrelationState};
use corrdyn::observables::{
    average_correlation, average_grandcanonical_graded, dispersion, mean_particle_number, Observable,
};
use corrdyn::seqalgebra::{d_cluster, exp_star, ln_star, FockSpace, OperatorSequence};
use corrdyn::tensorspace::{max_abs_diff, CMatrix, Space, Statistics};
use num_complex::Complex64;
use rayon::prelude::*;

use crate::report::{Averages, CheckReport, Component, PointReport, RunReport, SystemSummary, Timing, Truncation};
use crate::scenario::{matrix_to_json, InitialData, Output, Scenario, Tolerances};

/// Step of the central difference behind the strong-solution residual.
pub const DIFFERENCE_STEP: f64 = 1e-4;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Mode {
    /// Requested outputs, plus the oracle comparison when the scenario enables it.
    Run,
    /// Invariant checks only.
    Check,
    /// Requested outputs with the oracle comparison forced on.
    Oracle,
}

impl Mode {
    pub fn name(self) -> &'static str {
        match self {
            Mode::Run => "run",
            Mode::Check => "check",
            Mode::Oracle => "oracle",
        }
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct RunOptions {
    /// Replaces all three scenario tolerances.
    pub tol: Option<f64>,
    /// Replaces the scenario cutoff; initial sequences are cut or zero-padded.
    pub cutoff: Option<usize>,
}

/// System and initial data ready for evaluation. Building it performs every
/// dimension-budget check, so failures surface before any time point runs.
pub struct Prepared {
    pub system: CorrelationDynamics,
    pub initial: CorrelationState,
    /// Grand-canonical densities at `t = 0`, vacuum 1.
    pub densities: OperatorSequence,
    /// Same data one particle number lower, for truncation deltas.
    pub lower: Option<(CorrelationDynamics, CorrelationState)>,
    pub tolerances: Tolerances,
}

fn resized(components: &[CMatrix], fs: &FockSpace) -> Vec<CMatrix> {
    (1..=fs.cutoff())
        .map(|n| components.get(n - 1).cloned().unwrap_or_else(|| CMatrix::zeros(fs.dim(n), fs.dim(n))))
        .collect()
}

fn initial_state(fs: &FockSpace, data: &InitialData) -> Result<CorrelationState, CoreError> {
    match data {
        InitialData::Chaos(rho) => CorrelationState::chaos(fs, rho.clone()),
        InitialData::Correlations(g) => {
            CorrelationState::new(OperatorSequence::new(fs, Complex64::new(0.0, 0.0), resized(g, fs))?)
        }
        InitialData::Densities(d) => {
            let densities = OperatorSequence::new(fs, Complex64::new(1.0, 0.0), resized(d, fs))?;
            CorrelationState::new(ln_star(fs, &densities)?)
        }
    }
}

pub fn prepare(scenario: &Scenario, options: &RunOptions) -> Result<Prepared, CoreError> {
    let cutoff = options.cutoff.unwrap_or(scenario.cutoff);
    let fs = FockSpace::new(Space::new(scenario.d)?, cutoff, scenario.statistics)?;
    let system = CorrelationDynamics::new(fs.clone(), scenario.spec.clone())?;
    let initial = initial_state(&fs, &scenario.initial)?;
    let densities = exp_star(&fs, &initial)?;
    let lower = if cutoff >= 2 {
        let lower_fs = fs.truncated(cutoff - 1)?;
        let lower_initial = CorrelationState::new(initial.truncated(cutoff - 1))?;
        Some((CorrelationDynamics::new(lower_fs, scenario.spec.clone())?, lower_initial))
    } else {
        None
    };
    let mut tolerances = scenario.tolerances;
    if let Some(tol) = options.tol {
        tolerances = Tolerances { oracle: tol, finite_difference: tol, algebraic: tol };
    }
    Ok(Prepared { system, initial, densities, lower, tolerances })
}

fn components(
    fs: &FockSpace,
    mut op: impl FnMut(usize) -> Result<CMatrix, CoreError>,
) -> Result<Vec<Component>, CoreError> {
    (1..=fs.cutoff()).map(|n| Ok(Component { n, matrix: matrix_to_json(&op(n)?) })).collect()
}

fn pair(z: Complex64) -> [f64; 2] {
    [z.re, z.im]
}

fn max_of(values: &[f64]) -> f64 {
    values.iter().copied().fold(0.0, f64::max)
}

/// One-particle marginal and ⟨N⟩ of the correlations `g`.
fn truncation_summary(fs: &FockSpace, g: &CorrelationState) -> Result<(CMatrix, Complex64), CoreError> {
    Ok((marginal_density(fs, &d_cluster(fs, g, 1)?)?, mean_particle_number(fs, g)?))
}

struct PointResult {
    point: PointReport,
    checks: Vec<CheckReport>,
    seconds: f64,
}

fn evaluate_point(prepared: &Prepared, scenario: &Scenario, mode: Mode, t: f64) -> PointResult {
    let started = Instant::now();
    let system = &prepared.system;
    let fs = system.fock();
    let tol = prepared.tolerances;
    let mut point = PointReport { t, ..Default::default() };
    let mut checks = Vec::new();
    let fail = |output: &str, err: CoreError, point: &mut PointReport| {
        point.errors.insert(output.to_string(), err.to_string());
    };

    let evolved = system.evolve(&prepared.initial, t);
    let outputs: Vec<Output> =
        if mode == Mode::Check { Vec::new() } else { scenario.outputs.iter().copied().collect() };

    for output in outputs {
        let g = match &evolved {
            Ok(g) => g,
            Err(e) => {
                fail(output.name(), e.clone(), &mut point);
                continue;
            }
        };
        let result: Result<(), CoreError> = (|| {
            match output {
                Output::Correlations => point.correlations = Some(components(fs, |n| Ok(g.component(n).clone()))?),
                Output::MarginalDensities => {
                    point.marginal_densities = Some(components(fs, |s| marginal_density(fs, &d_cluster(fs, g, s)?))?)
                }
                Output::MarginalCorrelations => {
                    point.marginal_correlations = Some(components(fs, |s| marginal_correlation(fs, g, s))?)
                }
                Output::Averages => {
                    let observable = Observable::additive(fs, scenario.observable.clone())?;
                    let densities = system.propagate_densities(&prepared.densities, t)?;
                    point.averages = Some(Averages {
                        correlation: pair(average_correlation(fs, &observable, g)?),
                        grand_canonical: pair(average_grandcanonical_graded(fs, &observable, &densities)?),
                    });
                }
                Output::Dispersion => point.dispersion = Some(pair(dispersion(fs, &scenario.observable, g)?)),
                Output::ParticleNumber => point.particle_number = Some(pair(mean_particle_number(fs, g)?)),
                Output::Truncation => {
                    let Some((lower, lower_initial)) = &prepared.lower else {
                        return Err(CoreError::Invalid("truncation deltas need a cutoff of at least 2".into()));
                    };
                    let (f1, number) = truncation_summary(fs, g)?;
                    let (f1_lower, number_lower) = truncation_summary(lower.fock(), &lower.evolve(lower_initial, t)?)?;
                    point.truncation = Some(Truncation {
                        particle_number: (number - number_lower).norm(),
                        marginal_density: max_abs_diff(&f1, &f1_lower),
                    });
                }
                Output::Residuals => {
                    let residual = system.strong_solution_residual(&prepared.initial, t, DIFFERENCE_STEP)?;
                    checks.push(CheckReport::new("strong_solution", Some(t), max_of(&residual), tol.finite_difference));
                    point.residuals = Some(residual);
                }
            }
            Ok(())
        })();
        if let Err(e) = result {
            fail(output.name(), e, &mut point);
            if output == Output::Residuals {
                checks.push(CheckReport::failed("strong_solution", Some(t), tol.finite_difference));
            }
        }
    }

    if mode == Mode::Check {
        checks.push(match system.strong_solution_residual(&prepared.initial, t, DIFFERENCE_STEP) {
            Ok(r) => CheckReport::new("strong_solution", Some(t), max_of(&r), tol.finite_difference),
            Err(e) => {
                fail("strong_solution", e, &mut point);
                CheckReport::failed("strong_solution", Some(t), tol.finite_difference)
            }
        });
    }
    if mode != Mode::Run || scenario.oracle {
        let oracle = evolved.clone().and_then(|g| {
            let direct = system.evolve_by_densities(&prepared.initial, t)?;
            Ok(max_of(&g.trace_norm_diffs(&direct)))
        });
        checks.push(match oracle {
            Ok(r) => CheckReport::new("oracle", Some(t), r, tol.oracle),
            Err(e) => {
                fail("oracle", e, &mut point);
                CheckReport::failed("oracle", Some(t), tol.oracle)
            }
        });
    }
    PointResult { point, checks, seconds: started.elapsed().as_secs_f64() }
}

fn round_trip_check(prepared: &Prepared) -> CheckReport {
    let fs = prepared.system.fock();
    let tol = prepared.tolerances.algebraic;
    let forward = exp_star(fs, &prepared.initial).and_then(|d| ln_star(fs, &d));
    match forward {
        Ok(back) => CheckReport::new("round_trip", None, back.max_abs_diff(&prepared.initial), tol),
        Err(_) => CheckReport::failed("round_trip", None, tol),
    }
}

/// Boltzmann selectors leave sectors unprojected; marginal routes assume
/// permutation-symmetric data, so asymmetric input is flagged.
fn warnings(scenario: &Scenario, prepared: &Prepared) -> Vec<String> {
    let mut out = Vec::new();
    let fs = prepared.system.fock();
    if scenario.statistics == Statistics::Boltzmann {
        if let Ok(bose) = FockSpace::new(*fs.space(), fs.cutoff(), Statistics::Bose) {
            let asymmetric = (1..=fs.cutoff()).find(|&n| {
                let g = prepared.initial.component(n);
                max_abs_diff(&bose.project(n, g), g) > prepared.tolerances.algebraic
            });
            if let Some(n) = asymmetric {
                out.push(format!(
                    "initial {n}-particle correlation is not permutation symmetric; marginal quantities assume symmetric data"
                ));
            }
        }
    }
    out
}

/// Evaluates every time point and assembles the report in grid order.
pub fn execute(scenario: &Scenario, prepared: &Prepared, mode: Mode) -> (RunReport, Timing) {
    let started = Instant::now();
    let results: Vec<PointResult> =
        scenario.times.par_iter().map(|&t| evaluate_point(prepared, scenario, mode, t)).collect();

    let mut checks = Vec::new();
    if mode == Mode::Check {
        checks.push(round_trip_check(prepared));
    }
    let mut points = Vec::with_capacity(results.len());
    let mut per_point_seconds = Vec::with_capacity(results.len());
    for result in results {
        checks.extend(result.checks);
        per_point_seconds.push(result.seconds);
        if mode != Mode::Check || !result.point.errors.is_empty() {
            points.push(result.point);
        }
    }
    let passed = checks.iter().all(|c| c.passed) && points.iter().all(|p| p.errors.is_empty());
    let fs = prepared.system.fock();
    let spec = prepared.system.dynamics().spec();
    let report = RunReport {
        mode: mode.name().to_string(),
        system: SystemSummary {
            d: fs.d(),
            cutoff: fs.cutoff(),
            statistics: fs.stats().to_string(),
            hbar: prepared.system.dynamics().hbar(),
            potentials: (2..=fs.cutoff()).filter(|&k| spec.potential(k).is_some()).collect(),
            initial: scenario.initial.mode().to_string(),
        },
        times: scenario.times.clone(),
        warnings: warnings(scenario, prepared),
        points,
        checks,
        passed,
    };
    (report, Timing { total_seconds: started.elapsed().as_secs_f64(), per_point_seconds })
}

/// Prepares and executes a scenario.
pub fn run(scenario: &Scenario, mode: Mode, options: &RunOptions) -> Result<(RunReport, Timing), CoreError> {
    let prepared = prepare(scenario, options)?;
    Ok(execute(scenario, &prepared, mode))
}

/// Labels of the per-point error entries, for diagnostics.
pub fn error_summary(report: &RunReport) -> BTreeMap<String, usize> {
    let mut counts = BTreeMap::new();
    for point in &report.points {
        for key in point.errors.keys() {
            *counts.entry(key.clone()).or_insert(0) += 1;
        }
    }
    counts
}
