//! CSV renderings of solver output.

use std::fs;
use std::path::Path;

use super::problem::FormationMetrics;
use super::solver::SolverReport;
use crate::astro::TimeGrid;
use crate::error::{Error, Result};

pub fn convergence_csv(report: &SolverReport) -> String {
    let mut out = String::from("iter,objective_kg,feasibility,optimality\n");
    for r in &report.history {
        out.push_str(&format!(
            "{},{},{},{}\n",
            r.iteration, r.objective, r.feasibility, r.optimality
        ));
    }
    out
}

pub fn report_convergence(report: &SolverReport, path: &Path) -> Result<()> {
    if report.history.is_empty() {
        return Err(Error::invalid("report", "no iterations recorded"));
    }
    fs::write(path, convergence_csv(report)).map_err(|e| Error::io(path, e))
}

/// Thrust rows `t, T1x..T2z` at the start of each control step.
pub fn thrust_csv(grid: &TimeGrid, thrusts: &[f64]) -> String {
    let mut out = String::from("t,T1x,T1y,T1z,T2x,T2y,T2z\n");
    for (k, row) in thrusts.chunks_exact(6).enumerate() {
        out.push_str(&grid.time(k).to_string());
        for v in row {
            out.push_str(&format!(",{v}"));
        }
        out.push('\n');
    }
    out
}

pub fn metrics_csv(metrics: &[FormationMetrics]) -> String {
    let mut out = String::from(
        "t,separation_km,length_along_sun_m,pointing_error_arcsec,view_plane_error_m,in_window\n",
    );
    for m in metrics {
        out.push_str(&format!(
            "{},{},{},{},{},{}\n",
            m.t,
            m.separation_km,
            m.length_along_sun_m,
            m.pointing_error_arcsec,
            m.view_plane_error_m,
            u8::from(m.in_window)
        ));
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::trajopt::solver::{IterationRecord, Termination};

    #[test]
    fn one_row_report() {
        let report = SolverReport {
            history: vec![IterationRecord {
                iteration: 1,
                objective: 0.0,
                feasibility: 0.0,
                optimality: 0.0,
                penalty: 10.0,
                inner_iterations: 0,
            }],
            inner_merits: vec![vec![0.0]],
            termination: Termination::Converged,
        };
        let csv = convergence_csv(&report);
        assert_eq!(csv, "iter,objective_kg,feasibility,optimality\n1,0,0,0\n");
        let empty = SolverReport {
            history: vec![],
            inner_merits: vec![],
            termination: Termination::IterationCap,
        };
        assert!(report_convergence(&empty, Path::new("/nonexistent/x.csv")).is_err());
    }
}
