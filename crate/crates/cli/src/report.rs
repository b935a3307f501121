//! Report documents and their serialization: `report.json` (deterministic),
//! `timing.json` (wall clock) and one CSV time series per reported quantity.

use std::collections::BTreeMap;
use std::fs;
use std::path::Path;

use anyhow::{Context, Result};
use serde::Serialize;

use crate::scenario::{MatrixJson, Output};

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SystemSummary {
    pub d: usize,
    pub cutoff: usize,
    pub statistics: String,
    pub hbar: f64,
    pub potentials: Vec<usize>,
    pub initial: String,
}

/// One operator of a sequence; `n` is its particle number.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Component {
    pub n: usize,
    pub matrix: MatrixJson,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Averages {
    pub correlation: [f64; 2],
    pub grand_canonical: [f64; 2],
}

/// Differences between cutoff `N` and `N - 1`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Truncation {
    pub particle_number: f64,
    pub marginal_density: f64,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize)]
pub struct PointReport {
    pub t: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub correlations: Option<Vec<Component>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub marginal_densities: Option<Vec<Component>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub marginal_correlations: Option<Vec<Component>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub averages: Option<Averages>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub dispersion: Option<[f64; 2]>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub particle_number: Option<[f64; 2]>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub truncation: Option<Truncation>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub residuals: Option<Vec<f64>>,
    #[serde(skip_serializing_if = "BTreeMap::is_empty")]
    pub errors: BTreeMap<String, String>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CheckReport {
    pub name: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub t: Option<f64>,
    pub residual: f64,
    pub tolerance: f64,
    pub passed: bool,
}

impl CheckReport {
    pub fn new(name: &str, t: Option<f64>, residual: f64, tolerance: f64) -> Self {
        CheckReport { name: name.to_string(), t, residual, tolerance, passed: residual <= tolerance }
    }

    /// A check whose computation failed; it never passes.
    pub fn failed(name: &str, t: Option<f64>, tolerance: f64) -> Self {
        CheckReport { name: name.to_string(), t, residual: f64::INFINITY, tolerance, passed: false }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunReport {
    pub mode: String,
    pub system: SystemSummary,
    pub times: Vec<f64>,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub warnings: Vec<String>,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub points: Vec<PointReport>,
    pub checks: Vec<CheckReport>,
    pub passed: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Timing {
    pub total_seconds: f64,
    pub per_point_seconds: Vec<f64>,
}

pub fn to_json(report: &RunReport) -> String {
    // infinite residuals of failed checks are written as null by serde_json
    serde_json::to_string_pretty(report).expect("reports serialize")
}

/// Writes `report.json`, `timing.json` and one CSV per quantity present in the points.
pub fn write_outputs(dir: &Path, report: &RunReport, timing: &Timing) -> Result<()> {
    fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
    fs::write(dir.join("report.json"), to_json(report) + "\n").context("writing report.json")?;
    let timing_text = serde_json::to_string_pretty(timing).expect("timing serializes");
    fs::write(dir.join("timing.json"), timing_text + "\n").context("writing timing.json")?;
    for output in Output::ALL {
        if let Some(table) = csv_table(output, &report.points) {
            let path = dir.join(format!("{}.csv", output.name()));
            fs::write(&path, table).with_context(|| format!("writing {}", path.display()))?;
        }
    }
    Ok(())
}

fn flatten_components(prefix: &str, comps: &[Component], header: &mut Vec<String>, row: &mut Vec<f64>) {
    for c in comps {
        for (i, r) in c.matrix.iter().enumerate() {
            for (j, z) in r.iter().enumerate() {
                header.push(format!("{prefix}{}_{i}_{j}_re", c.n));
                header.push(format!("{prefix}{}_{i}_{j}_im", c.n));
                row.extend_from_slice(z);
            }
        }
    }
}

fn flatten(output: Output, point: &PointReport) -> Option<(Vec<String>, Vec<f64>)> {
    let mut header = Vec::new();
    let mut row = Vec::new();
    let mut pair = |name: &str, z: [f64; 2], header: &mut Vec<String>| {
        header.push(format!("{name}_re"));
        header.push(format!("{name}_im"));
        row.extend_from_slice(&z);
    };
    match output {
        Output::Correlations => flatten_components("g", point.correlations.as_ref()?, &mut header, &mut row),
        Output::MarginalDensities => flatten_components("F", point.marginal_densities.as_ref()?, &mut header, &mut row),
        Output::MarginalCorrelations => {
            flatten_components("G", point.marginal_correlations.as_ref()?, &mut header, &mut row)
        }
        Output::Averages => {
            let a = point.averages.as_ref()?;
            pair("correlation", a.correlation, &mut header);
            pair("grand_canonical", a.grand_canonical, &mut header);
        }
        Output::Dispersion => pair("dispersion", point.dispersion?, &mut header),
        Output::ParticleNumber => pair("particle_number", point.particle_number?, &mut header),
        Output::Truncation => {
            let tr = point.truncation.as_ref()?;
            header.extend(["particle_number_delta".to_string(), "marginal_density_delta".to_string()]);
            row.extend([tr.particle_number, tr.marginal_density]);
        }
        Output::Residuals => {
            for (k, r) in point.residuals.as_ref()?.iter().enumerate() {
                header.push(format!("component_{}", k + 1));
                row.push(*r);
            }
        }
    }
    Some((header, row))
}

/// CSV with columns `t` and the flattened values; `None` when no point has the quantity.
pub fn csv_table(output: Output, points: &[PointReport]) -> Option<String> {
    let mut header: Option<Vec<String>> = None;
    let mut lines = Vec::new();
    for point in points {
        if let Some((h, row)) = flatten(output, point) {
            header.get_or_insert(h);
            let values: Vec<String> = std::iter::once(point.t).chain(row).map(|x| format!("{x:e}")).collect();
            lines.push(values.join(","));
        }
    }
    let header = header?;
    let mut out = std::iter::once("t".to_string()).chain(header).collect::<Vec<_>>().join(",");
    out.push('\n');
    for line in lines {
        out += &line;
        out.push('\n');
    }
    Some(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn csv_has_time_and_re_im_columns() {
        let points = vec![
            PointReport { t: 0.0, dispersion: Some([1.0, 0.0]), ..Default::default() },
            PointReport { t: 0.5, dispersion: Some([0.25, -1e-17]), ..Default::default() },
        ];
        let table = csv_table(Output::Dispersion, &points).unwrap();
        assert_eq!(table, "t,dispersion_re,dispersion_im\n0e0,1e0,0e0\n5e-1,2.5e-1,-1e-17\n");
        assert!(csv_table(Output::Averages, &points).is_none());
    }

    #[test]
    fn component_columns() {
        let point = PointReport {
            t: 1.0,
            correlations: Some(vec![Component { n: 1, matrix: vec![vec![[1.0, 2.0]]] }]),
            ..Default::default()
        };
        let table = csv_table(Output::Correlations, &[point]).unwrap();
        assert_eq!(table.lines().next().unwrap(), "t,g1_0_0_re,g1_0_0_im");
    }
}
