//! Scenario-driven runs of the correlation hierarchy: loading, orchestration and reports.

pub mod report;
pub mod run;
pub mod scenario;
