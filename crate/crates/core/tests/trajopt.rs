mod common;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use taloskit::trajopt::*;

use common::{build, short_mission};

fn random_thrusts(rng: &mut ChaCha8Rng, n: usize, scale: f64) -> Vec<f64> {
    (0..n)
        .map(|_| scale * rng.random_range(-1.0..1.0))
        .collect()
}

fn axpy(x: &[f64], h: f64, d: &[f64]) -> Vec<f64> {
    x.iter().zip(d).map(|(a, b)| a + h * b).collect()
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn relative_error(adjoint: f64, fd: f64) -> f64 {
    (adjoint - fd).abs() / fd.abs().max(adjoint.abs()).max(1e-10)
}

#[test]
fn objective_and_constraint_gradients_match_central_differences() {
    let model = build(&short_mission(600.0, 60, vec![[300.0, 600.0]]));
    let problem = TrajOptProblem::new(&model).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let x = random_thrusts(&mut rng, problem.dimension(), 1e-5);
    let eval = problem.evaluate(&x).unwrap();
    let families = eval.constraints.len();
    for _ in 0..4 {
        let d = random_thrusts(&mut rng, problem.dimension(), 1e-5);
        let h = 1e-3;
        let plus = problem.evaluate(&axpy(&x, h, &d)).unwrap();
        let minus = problem.evaluate(&axpy(&x, -h, &d)).unwrap();
        // Thrusts near zero sit inside the smoothing band, so the objective
        // needs a smaller step than the constraints.
        let ho = 1e-5;
        let fd = (problem.evaluate(&axpy(&x, ho, &d)).unwrap().objective
            - problem.evaluate(&axpy(&x, -ho, &d)).unwrap().objective)
            / (2.0 * ho);
        let err = relative_error(dot(&eval.objective_gradient, &d), fd);
        assert!(err < 1e-5, "objective: {err:e}");
        for f in 0..families {
            let mut w = vec![0.0; families];
            w[f] = 1.0;
            let grad = problem.constraint_gradient(&eval, &w).unwrap();
            let fd = (plus.constraints[f].ks - minus.constraints[f].ks) / (2.0 * h);
            let err = relative_error(dot(&grad, &d), fd);
            assert!(
                err < 1e-5,
                "{:?}: adjoint {:e} fd {fd:e} err {err:e}",
                eval.constraints[f].family,
                dot(&grad, &d)
            );
        }
    }
}

#[test]
fn zero_thrust_costs_nothing() {
    let model = build(&short_mission(600.0, 60, vec![[300.0, 600.0]]));
    let problem = TrajOptProblem::new(&model).unwrap();
    let eval = problem.evaluate(&vec![0.0; problem.dimension()]).unwrap();
    assert_eq!(eval.objective, 0.0);
    assert!(eval.objective_gradient.iter().all(|&g| g == 0.0));
}

#[test]
fn objective_is_nonnegative() {
    let model = build(&short_mission(600.0, 60, vec![]));
    let problem = TrajOptProblem::new(&model).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    for scale in [1e-9, 1e-6, 1e-3] {
        let x = random_thrusts(&mut rng, problem.dimension(), scale);
        assert!(problem.evaluate(&x).unwrap().objective >= 0.0);
    }
}

#[test]
fn windowless_mission_converges_at_once() {
    let model = build(&short_mission(600.0, 60, vec![]));
    let problem = TrajOptProblem::new(&model).unwrap();
    let solution = solve(&problem, &SolverOptions::default(), None).unwrap();
    assert!(solution.report.converged(), "{:?}", solution.report);
    assert_eq!(solution.report.history.len(), 1);
    assert_eq!(solution.evaluation.objective, 0.0);
    assert!(solution.thrusts.iter().all(|&t| t == 0.0));
}

#[test]
fn short_window_becomes_feasible_with_monotone_merit() {
    let model = build(&short_mission(1200.0, 120, vec![[900.0, 1200.0]]));
    let problem = TrajOptProblem::new(&model).unwrap();
    let options = SolverOptions::default();
    let solution = solve(&problem, &options, None).unwrap();
    let last = solution.report.last();
    assert!(
        last.feasibility < options.feas_tol,
        "{:?}",
        solution.report.history
    );
    assert!(solution.evaluation.max_violation() < options.feas_tol);
    assert!(solution.evaluation.objective > 0.0);
    for merits in &solution.report.inner_merits {
        for pair in merits.windows(2) {
            assert!(pair[1] <= pair[0] + 1e-12 * pair[0].abs(), "{pair:?}");
        }
    }
    assert!(solution
        .thrusts
        .iter()
        .all(|t| t.abs() <= problem.max_thrust_n));
}

#[test]
fn convergence_report_is_written() {
    let model = build(&short_mission(600.0, 60, vec![]));
    let problem = TrajOptProblem::new(&model).unwrap();
    let solution = solve(&problem, &SolverOptions::default(), None).unwrap();
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("convergence.csv");
    report_convergence(&solution.report, &path).unwrap();
    let text = std::fs::read_to_string(&path).unwrap();
    let mut lines = text.lines();
    assert_eq!(
        lines.next(),
        Some("iter,objective_kg,feasibility,optimality")
    );
    assert_eq!(lines.count(), solution.report.history.len());
}

#[test]
fn wrong_design_length_is_rejected() {
    let model = build(&short_mission(600.0, 60, vec![]));
    let problem = TrajOptProblem::new(&model).unwrap();
    assert!(problem.evaluate(&[0.0; 5]).is_err());
    assert!(solve(&problem, &SolverOptions::default(), Some(&[0.0; 7])).is_err());
    let bad = SolverOptions {
        feas_tol: 0.0,
        ..Default::default()
    };
    assert!(solve(&problem, &bad, None).is_err());
}
