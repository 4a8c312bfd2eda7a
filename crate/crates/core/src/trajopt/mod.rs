//! Virtual-telescope formation trajectory optimization: minimum-propellant
//! thrust profiles for the optics and detector spacecraft subject to
//! telescope length, pointing and separation requirements.

pub mod geometry;
pub mod problem;
pub mod report;
pub mod solver;

pub use geometry::TelescopeGeometry;
pub use problem::{
    aggregate_families, pointwise_constraints, propellant_objective, telescope_constraints,
    ConstraintFamily, Evaluation, FamilyValue, FormationMetrics, PointConstraint, TrajOptProblem,
};
pub use report::{convergence_csv, metrics_csv, report_convergence, thrust_csv};
pub use solver::{solve, IterationRecord, Solution, SolverOptions, SolverReport, Termination};
