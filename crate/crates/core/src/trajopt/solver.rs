//! Augmented-Lagrangian solver with a bound-constrained Gauss-Newton inner
//! loop.
//!
//! Variables are scaled thrusts `x = T / thrust_scale`; the objective is
//! scaled so that each of its partial derivatives lies in `[−1, 1]`. Each
//! normalized pointwise constraint `c_i ≤ 0` carries its own multiplier and
//! the merit function is `f + Σ (max(0, λ_i + μ c_i)² − λ_i²) / (2μ)`.
//!
//! Each inner step minimizes a Gauss-Newton model of the merit over the
//! linearized constraints near activity, with `diag(f'' + σ)` for the
//! objective. The model is solved in its dual through a small dense system,
//! with a semismooth Newton loop deciding which linearized constraints are
//! active. `σ` adapts like a Levenberg-Marquardt damping term.

use nalgebra::{DMatrix, DVector};

use super::geometry::sun_chord_curvature;
use super::problem::{ConstraintFamily, Evaluation, TrajOptProblem};
use crate::astro::Vec3;
use crate::error::{Error, Result};
use crate::ode::Trajectory;

#[derive(Debug, Clone, PartialEq)]
pub struct SolverOptions {
    pub max_outer: usize,
    /// Inner iterations per outer iteration.
    pub max_inner: usize,
    pub feas_tol: f64,
    pub opt_tol: f64,
    pub initial_penalty: f64,
    pub max_penalty: f64,
    /// Thrust corresponding to one unit of the scaled variables, N. `None`
    /// picks the thrust that moves the most sensitive normalized constraint
    /// by one unit at the initial guess.
    pub thrust_scale_n: Option<f64>,
}

impl Default for SolverOptions {
    fn default() -> Self {
        Self {
            max_outer: 30,
            max_inner: 50,
            feas_tol: 1e-3,
            opt_tol: 1e-6,
            initial_penalty: 10.0,
            max_penalty: 1e8,
            thrust_scale_n: None,
        }
    }
}

impl SolverOptions {
    fn validate(&self) -> Result<()> {
        for (name, v) in [
            ("feas_tol", self.feas_tol),
            ("opt_tol", self.opt_tol),
            ("initial_penalty", self.initial_penalty),
            ("max_penalty", self.max_penalty),
            ("thrust_scale_n", self.thrust_scale_n.unwrap_or(1.0)),
        ] {
            if !(v.is_finite() && v > 0.0) {
                return Err(Error::invalid(
                    name,
                    format!("must be finite and > 0, got {v}"),
                ));
            }
        }
        if self.max_outer == 0 || self.max_inner == 0 {
            return Err(Error::invalid("iterations", "iteration caps must be >= 1"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Termination {
    Converged,
    IterationCap,
    LineSearchFailure,
}

impl Termination {
    pub fn describe(self) -> &'static str {
        match self {
            Termination::Converged => "converged",
            Termination::IterationCap => "outer iteration cap reached",
            Termination::LineSearchFailure => "line search failed to make progress",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IterationRecord {
    pub iteration: usize,
    /// Propellant mass, kg.
    pub objective: f64,
    /// Largest pointwise constraint value, floored at 0, in tolerance units.
    pub feasibility: f64,
    /// Infinity norm of the projected Lagrangian gradient (scaled variables).
    pub optimality: f64,
    pub penalty: f64,
    pub inner_iterations: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SolverReport {
    pub history: Vec<IterationRecord>,
    /// Merit values of the accepted inner iterates, one list per outer
    /// iteration, starting point first.
    pub inner_merits: Vec<Vec<f64>>,
    pub termination: Termination,
}

impl SolverReport {
    pub fn converged(&self) -> bool {
        self.termination == Termination::Converged
    }

    pub fn last(&self) -> &IterationRecord {
        self.history
            .last()
            .expect("report has at least one iteration")
    }
}

#[derive(Debug, Clone)]
pub struct Solution {
    /// Thrust profile, N, `N × 6` row-major.
    pub thrusts: Vec<f64>,
    pub trajectories: [Trajectory; 2],
    pub evaluation: Evaluation,
    pub multipliers: Vec<f64>,
    pub report: SolverReport,
}

struct Scaled<'p, 'a> {
    problem: &'p TrajOptProblem<'a>,
    thrust_scale: f64,
    objective_scale: f64,
}

/// Half-width, in smoothing lengths, of the band around zero thrust inside
/// which steps may change sign.
const ORTHANT_EPSILONS: f64 = 10.0;

struct MeritPoint {
    x: Vec<f64>,
    value: f64,
    grad: Vec<f64>,
    /// `max(0, λ_i + μ c_i)` per pointwise constraint.
    shifted: Vec<f64>,
    eval: Evaluation,
}

impl Scaled<'_, '_> {
    fn thrusts(&self, x: &[f64]) -> Vec<f64> {
        x.iter().map(|v| v * self.thrust_scale).collect()
    }

    fn merit(&self, x: Vec<f64>, lambda: &[f64], mu: f64) -> Result<MeritPoint> {
        let eval = self.problem.evaluate(&self.thrusts(&x))?;
        let mut value = self.objective_scale * eval.objective;
        let mut shifted = Vec::with_capacity(eval.points.len());
        for (p, l) in eval.points.iter().zip(lambda) {
            let s = (l + mu * p.value).max(0.0);
            value += (s * s - l * l) / (2.0 * mu);
            shifted.push(s);
        }
        let cg = self.problem.pointwise_gradient(&eval, &shifted)?;
        let grad = eval
            .objective_gradient
            .iter()
            .zip(&cg)
            .map(|(o, c)| self.thrust_scale * (self.objective_scale * o + c))
            .collect();
        Ok(MeritPoint {
            x,
            value,
            grad,
            shifted,
            eval,
        })
    }

    fn objective_gradient(&self, eval: &Evaluation) -> Vec<f64> {
        eval.objective_gradient
            .iter()
            .map(|o| self.thrust_scale * self.objective_scale * o)
            .collect()
    }

    /// Second derivative of the scaled objective in each scaled variable.
    fn objective_curvature(&self, x: &[f64]) -> Vec<f64> {
        let grid = self.problem.grid();
        let isp = self.problem.isp();
        let g0 = self.problem.model.constants.g0;
        let eps = self.problem.epsilon_n;
        x.iter()
            .enumerate()
            .map(|(i, &xi)| {
                let t = xi * self.thrust_scale;
                let scale = grid.dt / (g0 * isp[(i % 6) / 3]);
                let root = t.hypot(eps);
                self.objective_scale * scale * eps * eps / (root * root * root)
                    * self.thrust_scale
                    * self.thrust_scale
            })
            .collect()
    }

    /// `merit(a) − merit(b)` summed term by term, so that decreases far
    /// below the merit value itself are still resolved.
    fn merit_decrease(&self, a: &MeritPoint, b: &MeritPoint, lambda: &[f64], mu: f64) -> f64 {
        let grid = self.problem.grid();
        let isp = self.problem.isp();
        let g0 = self.problem.model.constants.g0;
        let eps = self.problem.epsilon_n;
        let mut objective = 0.0;
        for (i, (&xa, &xb)) in a.x.iter().zip(&b.x).enumerate() {
            let (ta, tb) = (xa * self.thrust_scale, xb * self.thrust_scale);
            let scale = grid.dt / (g0 * isp[(i % 6) / 3]);
            objective += scale * (ta - tb) * (ta + tb) / (ta.hypot(eps) + tb.hypot(eps));
        }
        let mut penalty = 0.0;
        for ((pa, pb), l) in a.eval.points.iter().zip(&b.eval.points).zip(lambda) {
            let sa = (l + mu * pa.value).max(0.0);
            let sb = (l + mu * pb.value).max(0.0);
            penalty += (sa - sb) * (sa + sb);
        }
        self.objective_scale * objective + penalty / (2.0 * mu)
    }

    /// Rows `vᵀ ∂d_k/∂x` in scaled variables for each `(k, v)`.
    fn separation_rows(&self, eval: &Evaluation, rows: &[(usize, Vec3)]) -> Result<DMatrix<f64>> {
        let mut indices: Vec<usize> = rows.iter().map(|r| r.0).collect();
        indices.sort_unstable();
        indices.dedup();
        let blocks = self.problem.separation_jacobians(eval, &indices)?;
        let mut a = DMatrix::zeros(rows.len(), self.problem.dimension());
        for (r, (k, v)) in rows.iter().enumerate() {
            let block = &blocks[indices.binary_search(k).expect("index collected above")];
            a.row_mut(r)
                .copy_from(&(v.transpose() * block * self.thrust_scale));
        }
        Ok(a)
    }

    /// Local model of the merit function at `cur`.
    fn model<'m>(
        &self,
        cur: &MeritPoint,
        lambda: &[f64],
        mu: f64,
        g_obj: &'m [f64],
        curvature: &'m [f64],
    ) -> Result<MeritModel<'m>> {
        let points = &cur.eval.points;
        let candidates: Vec<usize> = (0..points.len())
            .filter(|&i| {
                points[i].family != ConstraintFamily::Separation
                    || points[i].value > -0.5
                    || lambda[i] > 0.0
            })
            .collect();
        let s = self.problem.model.requirements.sun_direction;
        let chord_alpha = 2.0 * (0.5 * self.problem.model.requirements.halfangle_rad).sin();
        let [t1, t2] = &cur.eval.trajectories;
        let mut rows: Vec<(usize, Vec3)> = candidates
            .iter()
            .map(|&i| (points[i].k, points[i].d_gradient))
            .collect();
        let mut n_curved = 0;
        for (i, p) in points.iter().enumerate() {
            if p.family != ConstraintFamily::Pointing || cur.shifted[i] <= 0.0 {
                continue;
            }
            let d = Vec3::from_column_slice(&t2.state(p.k)[..3])
                - Vec3::from_column_slice(&t1.state(p.k)[..3]);
            if let Some((t, w)) = sun_chord_curvature(&d, &s) {
                rows.push((p.k, (cur.shifted[i] * w / chord_alpha).sqrt() * t));
                n_curved += 1;
            }
        }
        let all = self.separation_rows(&cur.eval, &rows)?;
        let m = candidates.len();
        Ok(MeritModel {
            a: all.rows(0, m).into_owned(),
            b: all.rows(m, n_curved).into_owned(),
            values: candidates.iter().map(|&i| points[i].value).collect(),
            lambda: candidates.iter().map(|&i| lambda[i]).collect(),
            g_obj,
            curvature,
            mu,
        })
    }
}

fn projected_gradient_norm(x: &[f64], g: &[f64], bound: f64) -> f64 {
    x.iter()
        .zip(g)
        .map(|(&xi, &gi)| ((xi - gi).clamp(-bound, bound) - xi).abs())
        .fold(0.0, f64::max)
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Local model of the merit function around the current iterate:
///
/// `g_objᵀp + ½pᵀ(diag(curvature) + BᵀB)p
///  + Σ (max(0, λ_i + μ(c_i + a_iᵀp))² − max(0, λ_i + μ c_i)²) / (2μ)`
///
/// over a candidate set of constraints with Jacobian rows `a`. The rows of
/// `B` carry the multiplier-weighted curvature of the pointing constraints.
struct MeritModel<'m> {
    a: DMatrix<f64>,
    b: DMatrix<f64>,
    values: Vec<f64>,
    lambda: Vec<f64>,
    g_obj: &'m [f64],
    curvature: &'m [f64],
    mu: f64,
}

impl MeritModel<'_> {
    fn penalty(&self, shift: Option<&DVector<f64>>) -> f64 {
        (0..self.values.len())
            .map(|i| {
                let c = self.values[i] + shift.map_or(0.0, |s| s[i]);
                (self.lambda[i] + self.mu * c).max(0.0).powi(2)
            })
            .sum::<f64>()
            / (2.0 * self.mu)
    }

    /// `m(0) − m(p)`.
    fn predicted_decrease(&self, p: &[f64]) -> f64 {
        let p = DVector::from_column_slice(p);
        let ap = &self.a * &p;
        let bp = &self.b * &p;
        let linear = dot(self.g_obj, p.as_slice());
        let quad: f64 = self
            .curvature
            .iter()
            .zip(p.iter())
            .map(|(c, v)| c * v * v)
            .sum::<f64>()
            + bp.norm_squared();
        self.penalty(None) - self.penalty(Some(&ap)) - linear - 0.5 * quad
    }

    /// Minimizer of the model with `damping` added to the diagonal and the
    /// non-free variables held fixed.
    ///
    /// With `C = [A; B]` and `w = [y; z]`, optimality reads
    /// `D p = −(g_obj + Cᵀw)`, `z = B p` and `y = max(0, λ + μ(c + A p))`.
    /// Eliminating `p` leaves a system in `w` whose `y` part is solved by
    /// semismooth Newton over the active set.
    fn step(&self, damping: f64, free: &[bool]) -> Vec<f64> {
        let n = self.g_obj.len();
        let m = self.a.nrows();
        let r = self.b.nrows();
        let inv_d: Vec<f64> = (0..n)
            .map(|i| {
                if free[i] {
                    1.0 / (self.curvature[i] + damping)
                } else {
                    0.0
                }
            })
            .collect();
        let weighted = DVector::from_iterator(n, (0..n).map(|i| self.g_obj[i] * inv_d[i]));
        let mut w = DVector::zeros(m + r);
        if m + r > 0 {
            let mut stacked = DMatrix::zeros(m + r, n);
            stacked.rows_mut(0, m).copy_from(&self.a);
            stacked.rows_mut(m, r).copy_from(&self.b);
            let rhs_base = -(&stacked * &weighted);
            for (j, mut col) in stacked.column_iter_mut().enumerate() {
                col *= inv_d[j].sqrt();
            }
            let gram = &stacked * stacked.transpose();
            let mut rhs = rhs_base;
            for i in 0..m {
                rhs[i] += self.lambda[i] / self.mu + self.values[i];
            }
            let mut active: Vec<bool> = (0..m)
                .map(|i| rhs[i] > 0.0)
                .chain((0..r).map(|_| true))
                .collect();
            for _ in 0..50 {
                let idx: Vec<usize> = (0..m + r).filter(|&i| active[i]).collect();
                w.fill(0.0);
                let k = idx.len();
                if k > 0 {
                    let mut sub = DMatrix::from_fn(k, k, |a, b| gram[(idx[a], idx[b])]);
                    for (a, &i) in idx.iter().enumerate() {
                        sub[(a, a)] += if i < m { 1.0 / self.mu } else { 1.0 };
                    }
                    let eq: Vec<f64> = (0..k).map(|a| 1.0 / sub[(a, a)].sqrt()).collect();
                    for a in 0..k {
                        for b in 0..k {
                            sub[(a, b)] *= eq[a] * eq[b];
                        }
                    }
                    let sub_rhs = DVector::from_iterator(k, (0..k).map(|a| eq[a] * rhs[idx[a]]));
                    let z = match sub.clone().cholesky() {
                        Some(ch) => ch.solve(&sub_rhs),
                        None => sub
                            .lu()
                            .solve(&sub_rhs)
                            .unwrap_or_else(|| DVector::zeros(k)),
                    };
                    for a in 0..k {
                        w[idx[a]] = eq[a] * z[a];
                    }
                }
                let gw = &gram * &w;
                let next: Vec<bool> = (0..m)
                    .map(|i| rhs[i] - gw[i] > 0.0)
                    .chain((0..r).map(|_| true))
                    .collect();
                if next == active {
                    break;
                }
                active = next;
            }
            let ctw = self.a.transpose() * w.rows(0, m) + self.b.transpose() * w.rows(m, r);
            return (0..n)
                .map(|i| -inv_d[i] * (self.g_obj[i] + ctw[i]))
                .collect();
        }
        (0..n).map(|i| -weighted[i]).collect()
    }
}

enum InnerStatus {
    Converged,
    IterationCap,
    LineSearchFailure,
}

struct InnerResult {
    merits: Vec<f64>,
    point: MeritPoint,
    iterations: usize,
    status: InnerStatus,
}

/// Projected Gauss-Newton on the box `|x_i| ≤ bound` with Levenberg-Marquardt
/// damping driven by the ratio of actual to predicted merit decrease.
#[allow(clippy::too_many_arguments)]
fn minimize_merit(
    scaled: &Scaled,
    x0: Vec<f64>,
    lambda: &[f64],
    mu: f64,
    bound: f64,
    tol: f64,
    damping: &mut f64,
    options: &SolverOptions,
) -> Result<InnerResult> {
    let x0 = x0.into_iter().map(|v| v.clamp(-bound, bound)).collect();
    let mut cur = scaled.merit(x0, lambda, mu)?;
    let n = cur.x.len();
    let kink = ORTHANT_EPSILONS * scaled.problem.epsilon_n / scaled.thrust_scale;
    let mut merits = vec![cur.value];
    for iter in 0..options.max_inner {
        if projected_gradient_norm(&cur.x, &cur.grad, bound) <= tol {
            return Ok(InnerResult {
                merits,
                point: cur,
                iterations: iter,
                status: InnerStatus::Converged,
            });
        }
        let (x, g) = (&cur.x, &cur.grad);
        let free: Vec<bool> = (0..n)
            .map(|i| !((x[i] <= -bound && g[i] > 0.0) || (x[i] >= bound && g[i] < 0.0)))
            .collect();
        let curvature = scaled.objective_curvature(x);
        let g_obj = scaled.objective_gradient(&cur.eval);
        let model = scaled.model(&cur, lambda, mu, &g_obj, &curvature)?;
        // Components well outside the smoothing region stop at zero rather
        // than cross it, where the model of |T| stops being valid.
        let lower: Vec<f64> = x
            .iter()
            .map(|&v| if v > kink { 0.0 } else { -bound })
            .collect();
        let upper: Vec<f64> = x
            .iter()
            .map(|&v| if v < -kink { 0.0 } else { bound })
            .collect();
        let mut accepted = None;
        for _ in 0..40 {
            let p = model.step(*damping, &free);
            let trial: Vec<f64> = (0..n)
                .map(|i| (x[i] + p[i]).clamp(lower[i], upper[i]))
                .collect();
            let moved: Vec<f64> = trial.iter().zip(x).map(|(t, xi)| t - xi).collect();
            let predicted = model.predicted_decrease(&moved);
            if predicted > 0.0 {
                if let Ok(next) = scaled.merit(trial, lambda, mu) {
                    let ratio = scaled.merit_decrease(&cur, &next, lambda, mu) / predicted;
                    if next.value.is_finite() && ratio > 1e-4 {
                        if ratio > 0.75 {
                            *damping = (*damping / 3.0).max(1e-12);
                        } else if ratio < 0.25 {
                            *damping = (*damping * 2.0).min(1e12);
                        }
                        accepted = Some(next);
                        break;
                    }
                }
            }
            *damping = (*damping * 4.0).min(1e12);
        }
        match accepted {
            Some(next) => {
                merits.push(next.value);
                cur = next;
            }
            None => {
                return Ok(InnerResult {
                    merits,
                    point: cur,
                    iterations: iter,
                    status: InnerStatus::LineSearchFailure,
                })
            }
        }
    }
    Ok(InnerResult {
        merits,
        point: cur,
        iterations: options.max_inner,
        status: InnerStatus::IterationCap,
    })
}

/// Reciprocal of the largest `|∂c_i/∂T_j|` over the pointwise constraints,
/// falling back to the thrust bound when nothing depends on the thrust.
fn automatic_thrust_scale(problem: &TrajOptProblem, thrusts: &[f64]) -> Result<f64> {
    let eval = problem.evaluate(thrusts)?;
    let rows: Vec<(usize, Vec3)> = eval.points.iter().map(|p| (p.k, p.d_gradient)).collect();
    let mut indices: Vec<usize> = rows.iter().map(|r| r.0).collect();
    indices.sort_unstable();
    indices.dedup();
    let blocks = problem.separation_jacobians(&eval, &indices)?;
    let mut largest: f64 = 0.0;
    for (k, v) in &rows {
        let block = &blocks[indices.binary_search(k).expect("index collected above")];
        largest = largest.max((v.transpose() * block).amax());
    }
    Ok(if largest > 0.0 && largest.is_finite() {
        1.0 / largest
    } else {
        problem.max_thrust_n
    })
}

/// Minimizes propellant subject to the formation constraints, starting from
/// `initial_thrusts` (zero thrust when `None`).
pub fn solve(
    problem: &TrajOptProblem,
    options: &SolverOptions,
    initial_thrusts: Option<&[f64]>,
) -> Result<Solution> {
    options.validate()?;
    let n = problem.dimension();
    let initial: Vec<f64> = match initial_thrusts {
        Some(t) if t.len() != n => {
            return Err(Error::DimensionMismatch {
                context: "initial thrusts",
                expected: n,
                actual: t.len(),
            })
        }
        Some(t) => t.to_vec(),
        None => vec![0.0; n],
    };
    let ts = match options.thrust_scale_n {
        Some(ts) => ts,
        None => automatic_thrust_scale(problem, &initial)?,
    };
    let x0: Vec<f64> = initial.iter().map(|v| v / ts).collect();
    let isp_min = problem.isp()[0].min(problem.isp()[1]);
    let scaled = Scaled {
        problem,
        thrust_scale: ts,
        objective_scale: problem.model.constants.g0 * isp_min / (problem.grid().dt * ts),
    };
    let bound = problem.max_thrust_n / ts;

    let points = problem.evaluate(&vec![0.0; n])?.points.len();
    let mut lambda = vec![0.0; points];
    let mut mu = options.initial_penalty;
    let mut damping = 1.0;
    let mut x = x0;
    let mut history = Vec::new();
    let mut inner_merits = Vec::new();
    let mut inner_tol = 1e-2f64.max(options.opt_tol);
    let mut previous_feasibility = f64::INFINITY;
    let mut best: Option<(Vec<f64>, Evaluation, Vec<f64>, f64)> = None;
    let mut termination = Termination::IterationCap;

    for iteration in 1..=options.max_outer {
        let inner = minimize_merit(
            &scaled,
            x,
            &lambda,
            mu,
            bound,
            inner_tol,
            &mut damping,
            options,
        )?;
        inner_merits.push(inner.merits);
        let MeritPoint {
            x: x_new,
            grad,
            shifted,
            eval,
            ..
        } = inner.point;
        x = x_new;
        let feasibility = eval.max_violation();
        let optimality = projected_gradient_norm(&x, &grad, bound);
        history.push(IterationRecord {
            iteration,
            objective: eval.objective,
            feasibility,
            optimality,
            penalty: mu,
            inner_iterations: inner.iterations,
        });

        let better = match &best {
            None => true,
            Some((_, be, _, bf)) => {
                let feasible = feasibility <= options.feas_tol;
                let best_feasible = *bf <= options.feas_tol;
                match (feasible, best_feasible) {
                    (true, true) => eval.objective <= be.objective,
                    (true, false) => true,
                    (false, true) => false,
                    (false, false) => feasibility <= *bf,
                }
            }
        };
        if better {
            best = Some((x.clone(), eval, shifted.clone(), feasibility));
        }

        if feasibility < options.feas_tol && optimality < options.opt_tol {
            termination = Termination::Converged;
            break;
        }
        if matches!(inner.status, InnerStatus::LineSearchFailure) && optimality > inner_tol {
            let no_progress = history.len() >= 2
                && history[history.len() - 2].feasibility <= feasibility
                && mu >= options.max_penalty;
            let stuck_feasible = feasibility < options.feas_tol && inner.iterations == 0;
            let stalled = no_progress || stuck_feasible;
            if stalled {
                termination = Termination::LineSearchFailure;
                break;
            }
        }
        lambda = shifted;
        if feasibility > 0.25 * previous_feasibility && feasibility > options.feas_tol {
            mu = (mu * 10.0).min(options.max_penalty);
        }
        previous_feasibility = feasibility;
        inner_tol = (inner_tol * 0.1).max(0.1 * options.opt_tol);
    }

    let (xb, eval, multipliers, _) = best.expect("at least one outer iteration");
    let thrusts = scaled.thrusts(&xb);
    Ok(Solution {
        thrusts,
        trajectories: eval.trajectories.clone(),
        evaluation: eval,
        multipliers,
        report: SolverReport {
            history,
            inner_merits,
            termination,
        },
    })
}
