//! Propellant objective, aggregated formation constraints and their
//! adjoint gradients with respect to the thrust profile.
//!
//! The design vector holds `N` rows of `[T1x, T1y, T1z, T2x, T2y, T2z]` in
//! newtons, one row per control step. Pointwise constraints are normalized by
//! their tolerance so that each is `≤ 0` when satisfied and `1` means one
//! tolerance of violation, then each family is reduced with a KS aggregate.

use nalgebra::{DMatrix, Matrix3x6, Matrix6, Matrix6x3, Vector6};
use rayon::prelude::*;

use super::geometry::{sun_chord, TelescopeGeometry};
use crate::aggregate::ks_aggregate;
use crate::astro::{TimeGrid, Vec3};
use crate::error::{Error, Result};
use crate::gravity::RelativeOrbitDynamics;
use crate::mission::{MissionModel, TelescopeRequirements};
use crate::ode::{adjoint_gradient, rk4_propagate, step_sensitivities, Trajectory};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum ConstraintFamily {
    /// Two-sided band on `d·ŝ` inside observation windows.
    Length,
    /// Cone about `ŝ` inside observation windows.
    Pointing,
    /// `|d| ≤ max separation` at every grid point.
    Separation,
}

impl ConstraintFamily {
    pub fn name(self) -> &'static str {
        match self {
            ConstraintFamily::Length => "length",
            ConstraintFamily::Pointing => "pointing",
            ConstraintFamily::Separation => "separation",
        }
    }
}

/// One aggregated constraint family at a design point.
#[derive(Debug, Clone, PartialEq)]
pub struct FamilyValue {
    pub family: ConstraintFamily,
    /// KS aggregate of the normalized pointwise values.
    pub ks: f64,
    /// Largest normalized pointwise value.
    pub max_pointwise: f64,
    /// Number of pointwise constraints aggregated.
    pub count: usize,
    /// `∂ks/∂d_k` for every grid point `k`, km⁻¹.
    pub d_sensitivity: Vec<Vec3>,
}

impl FamilyValue {
    /// Upper bound of `ks − max_pointwise`.
    pub fn ks_gap(&self, rho: f64) -> f64 {
        (self.count as f64).ln() / rho
    }
}

/// Propellant mass (kg) with the smoothed `|ṁ|` and its gradient in N⁻¹·kg.
pub fn propellant_objective(
    thrusts: &[f64],
    isp: [f64; 2],
    g0: f64,
    grid: &TimeGrid,
    epsilon: f64,
) -> Result<(f64, Vec<f64>)> {
    if !(epsilon > 0.0) {
        return Err(Error::invalid("epsilon", "must be > 0"));
    }
    if thrusts.len() != 6 * grid.n {
        return Err(Error::DimensionMismatch {
            context: "thrust profile",
            expected: 6 * grid.n,
            actual: thrusts.len(),
        });
    }
    let mut total = 0.0;
    let mut grad = vec![0.0; thrusts.len()];
    for (i, (&t, g)) in thrusts.iter().zip(grad.iter_mut()).enumerate() {
        let scale = grid.dt / (g0 * isp[(i % 6) / 3]);
        let root = t.hypot(epsilon);
        total += scale * (root - epsilon);
        *g = scale * t / root;
    }
    Ok((total, grad))
}

/// One normalized pointwise constraint `value ≤ 0`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PointConstraint {
    pub family: ConstraintFamily,
    /// Grid index.
    pub k: usize,
    pub value: f64,
    /// `∂value/∂d_k`, km⁻¹.
    pub d_gradient: Vec3,
}

/// Every normalized pointwise constraint for a trajectory pair, in grid
/// order.
pub fn pointwise_constraints(
    traj1: &Trajectory,
    traj2: &Trajectory,
    requirements: &TelescopeRequirements,
) -> Result<Vec<PointConstraint>> {
    let grid = *traj1.grid();
    if traj2.grid() != &grid {
        return Err(Error::invalid(
            "trajectories",
            "spacecraft trajectories must share a grid",
        ));
    }
    let s = requirements.sun_direction;
    let chord_alpha = 2.0 * (0.5 * requirements.halfangle_rad).sin();
    let tol_km = requirements.length_tol_m * 1e-3;
    let length_km = requirements.length_m * 1e-3;
    let mut out = Vec::new();
    for k in 0..=grid.n {
        let u1 = Vec3::from_column_slice(&traj1.state(k)[..3]);
        let u2 = Vec3::from_column_slice(&traj2.state(k)[..3]);
        let d = u2 - u1;
        let t = grid.time(k);
        let norm = d.norm();
        let point = |family, value, d_gradient| PointConstraint {
            family,
            k,
            value,
            d_gradient,
        };
        if requirements.in_window(t) {
            if norm == 0.0 {
                return Err(Error::ZeroSeparation { t });
            }
            let along = d.dot(&s);
            out.push(point(
                ConstraintFamily::Length,
                (along - length_km) / tol_km - 1.0,
                s / tol_km,
            ));
            out.push(point(
                ConstraintFamily::Length,
                (length_km - along) / tol_km - 1.0,
                -s / tol_km,
            ));
            let (chord, grad) = sun_chord(&d, &s);
            out.push(point(
                ConstraintFamily::Pointing,
                chord / chord_alpha - 1.0,
                grad / chord_alpha,
            ));
        }
        let unit = if norm > 0.0 { d / norm } else { Vec3::zeros() };
        out.push(point(
            ConstraintFamily::Separation,
            norm / requirements.max_separation_km - 1.0,
            unit / requirements.max_separation_km,
        ));
    }
    Ok(out)
}

/// KS aggregate of each family of pointwise constraints. Families without
/// any member are omitted.
pub fn aggregate_families(
    points: &[PointConstraint],
    n_grid: usize,
    rho: f64,
) -> Result<Vec<FamilyValue>> {
    let mut out = Vec::new();
    for family in [
        ConstraintFamily::Length,
        ConstraintFamily::Pointing,
        ConstraintFamily::Separation,
    ] {
        let members: Vec<&PointConstraint> = points.iter().filter(|p| p.family == family).collect();
        if members.is_empty() {
            continue;
        }
        let values: Vec<f64> = members.iter().map(|p| p.value).collect();
        let (ks, weights) = ks_aggregate(&values, rho)?;
        let mut sens = vec![Vec3::zeros(); n_grid];
        for (w, p) in weights.iter().zip(&members) {
            sens[p.k] += *w * p.d_gradient;
        }
        out.push(FamilyValue {
            family,
            ks,
            max_pointwise: values.iter().copied().fold(f64::NEG_INFINITY, f64::max),
            count: members.len(),
            d_sensitivity: sens,
        });
    }
    Ok(out)
}

/// Normalized pointwise constraints reduced to KS aggregates per family.
pub fn telescope_constraints(
    traj1: &Trajectory,
    traj2: &Trajectory,
    requirements: &TelescopeRequirements,
    rho: f64,
) -> Result<Vec<FamilyValue>> {
    let points = pointwise_constraints(traj1, traj2, requirements)?;
    aggregate_families(&points, traj1.grid().n + 1, rho)
}

/// Objective, constraints and (optionally) a weighted gradient at one design
/// point.
#[derive(Debug, Clone)]
pub struct Evaluation {
    pub objective: f64,
    pub objective_gradient: Vec<f64>,
    pub constraints: Vec<FamilyValue>,
    pub points: Vec<PointConstraint>,
    pub trajectories: [Trajectory; 2],
}

impl Evaluation {
    /// `max(0, max_i value_i)` over the pointwise constraints.
    pub fn max_violation(&self) -> f64 {
        self.points.iter().map(|p| p.value).fold(0.0, f64::max)
    }
}

/// The formation-keeping problem over a mission's grid.
pub struct TrajOptProblem<'a> {
    pub model: &'a MissionModel,
    systems: [RelativeOrbitDynamics<'a>; 2],
    initial: [Vector6<f64>; 2],
    pub max_thrust_n: f64,
    pub epsilon_n: f64,
    pub ks_rho: f64,
}

impl<'a> TrajOptProblem<'a> {
    pub fn new(model: &'a MissionModel) -> Result<Self> {
        let systems = [model.relative_system(0)?, model.relative_system(1)?];
        systems[0].check_grid(&model.grid)?;
        let opt = &model.optimizer;
        Ok(Self {
            model,
            systems,
            initial: [
                model.spacecraft[0].initial_offset,
                model.spacecraft[1].initial_offset,
            ],
            max_thrust_n: opt.max_thrust_n,
            epsilon_n: opt.smoothing_epsilon_n,
            ks_rho: opt.ks_rho,
        })
    }

    pub fn grid(&self) -> &TimeGrid {
        &self.model.grid
    }

    pub fn dimension(&self) -> usize {
        6 * self.model.grid.n
    }

    pub fn isp(&self) -> [f64; 2] {
        [
            self.model.spacecraft[0].specific_impulse,
            self.model.spacecraft[1].specific_impulse,
        ]
    }

    fn check_design(&self, thrusts: &[f64]) -> Result<()> {
        if thrusts.len() != self.dimension() {
            return Err(Error::DimensionMismatch {
                context: "design vector",
                expected: self.dimension(),
                actual: thrusts.len(),
            });
        }
        Ok(())
    }

    /// Per-spacecraft `N × 3` control sequences from the design vector.
    pub fn split_controls(thrusts: &[f64]) -> [Vec<f64>; 2] {
        let mut a = Vec::with_capacity(thrusts.len() / 2);
        let mut b = Vec::with_capacity(thrusts.len() / 2);
        for row in thrusts.chunks_exact(6) {
            a.extend_from_slice(&row[..3]);
            b.extend_from_slice(&row[3..]);
        }
        [a, b]
    }

    fn merge_controls(a: &[f64], b: &[f64]) -> Vec<f64> {
        a.chunks_exact(3)
            .zip(b.chunks_exact(3))
            .flat_map(|(x, y)| x.iter().chain(y).copied())
            .collect()
    }

    pub fn propagate(&self, thrusts: &[f64]) -> Result<[Trajectory; 2]> {
        self.check_design(thrusts)?;
        let [c1, c2] = Self::split_controls(thrusts);
        let grid = self.model.grid;
        let (t1, t2) = rayon::join(
            || rk4_propagate(&self.systems[0], self.initial[0].as_slice(), &c1, &grid),
            || rk4_propagate(&self.systems[1], self.initial[1].as_slice(), &c2, &grid),
        );
        Ok([t1?, t2?])
    }

    pub fn evaluate(&self, thrusts: &[f64]) -> Result<Evaluation> {
        let trajectories = self.propagate(thrusts)?;
        let (objective, objective_gradient) = propellant_objective(
            thrusts,
            self.isp(),
            self.model.constants.g0,
            self.grid(),
            self.epsilon_n,
        )?;
        let points =
            pointwise_constraints(&trajectories[0], &trajectories[1], &self.model.requirements)?;
        let constraints = aggregate_families(&points, self.grid().n + 1, self.ks_rho)?;
        Ok(Evaluation {
            objective,
            objective_gradient,
            constraints,
            points,
            trajectories,
        })
    }

    /// Gradient of `Σ weights[f]·ks_f` with respect to the design vector.
    pub fn constraint_gradient(&self, eval: &Evaluation, weights: &[f64]) -> Result<Vec<f64>> {
        if weights.len() != eval.constraints.len() {
            return Err(Error::DimensionMismatch {
                context: "constraint weights",
                expected: eval.constraints.len(),
                actual: weights.len(),
            });
        }
        let mut sens = vec![Vec3::zeros(); self.grid().n + 1];
        for (w, fam) in weights.iter().zip(&eval.constraints) {
            for (acc, g) in sens.iter_mut().zip(&fam.d_sensitivity) {
                *acc += *w * g;
            }
        }
        self.separation_gradient(eval, &sens)
    }

    /// Gradient of `Σ weights[i]·points[i].value` with respect to the design
    /// vector.
    pub fn pointwise_gradient(&self, eval: &Evaluation, weights: &[f64]) -> Result<Vec<f64>> {
        if weights.len() != eval.points.len() {
            return Err(Error::DimensionMismatch {
                context: "pointwise weights",
                expected: eval.points.len(),
                actual: weights.len(),
            });
        }
        let mut sens = vec![Vec3::zeros(); self.grid().n + 1];
        for (w, p) in weights.iter().zip(&eval.points) {
            sens[p.k] += *w * p.d_gradient;
        }
        self.separation_gradient(eval, &sens)
    }

    /// Chains `∂F/∂d_k` through both spacecraft's dynamics, one adjoint sweep
    /// each.
    pub fn separation_gradient(
        &self,
        eval: &Evaluation,
        d_sensitivity: &[Vec3],
    ) -> Result<Vec<f64>> {
        let grid = self.model.grid;
        if d_sensitivity.len() != grid.n + 1 {
            return Err(Error::DimensionMismatch {
                context: "separation sensitivity",
                expected: grid.n + 1,
                actual: d_sensitivity.len(),
            });
        }
        let mut dj_dx2 = vec![0.0; 6 * (grid.n + 1)];
        for (k, g) in d_sensitivity.iter().enumerate() {
            dj_dx2[6 * k..6 * k + 3].copy_from_slice(g.as_slice());
        }
        let dj_dx1: Vec<f64> = dj_dx2.iter().map(|v| -v).collect();
        let zero_u = vec![0.0; 3 * grid.n];
        let [t1, t2] = &eval.trajectories;
        let (g1, g2) = rayon::join(
            || adjoint_gradient(&self.systems[0], t1, &dj_dx1, &zero_u),
            || adjoint_gradient(&self.systems[1], t2, &dj_dx2, &zero_u),
        );
        Ok(Self::merge_controls(&g1?.controls, &g2?.controls))
    }

    /// `∂d_k/∂T` as a dense `3 × 6N` block for each requested grid index.
    pub fn separation_jacobians(
        &self,
        eval: &Evaluation,
        indices: &[usize],
    ) -> Result<Vec<DMatrix<f64>>> {
        let grid = self.model.grid;
        if let Some(&k) = indices.iter().find(|&&k| k > grid.n) {
            return Err(Error::invalid(
                "indices",
                format!("grid index {k} beyond {}", grid.n),
            ));
        }
        let [t1, t2] = &eval.trajectories;
        let (s1, s2) = rayon::join(
            || step_sensitivities(&self.systems[0], t1),
            || step_sensitivities(&self.systems[1], t2),
        );
        let fixed =
            |steps: Vec<crate::ode::StepSensitivity>| -> Vec<(Matrix6<f64>, Matrix6x3<f64>)> {
                steps
                    .into_iter()
                    .map(|s| {
                        (
                            s.state.fixed_view::<6, 6>(0, 0).into(),
                            s.control.fixed_view::<6, 3>(0, 0).into(),
                        )
                    })
                    .collect()
            };
        let sens = [fixed(s1?), fixed(s2?)];
        Ok(indices
            .par_iter()
            .map(|&k| {
                let mut jac = DMatrix::zeros(3, 6 * grid.n);
                for (sc, sign) in [(0usize, -1.0), (1, 1.0)] {
                    let mut pick = Matrix3x6::<f64>::identity();
                    for j in (0..k).rev() {
                        let (phi, gamma) = &sens[sc][j];
                        let block = sign * pick * gamma;
                        jac.fixed_view_mut::<3, 3>(0, 6 * j + 3 * sc)
                            .copy_from(&block);
                        pick *= phi;
                    }
                }
                jac
            })
            .collect())
    }

    /// Formation metrics at each grid point.
    pub fn metrics(&self, trajectories: &[Trajectory; 2]) -> Result<Vec<FormationMetrics>> {
        let grid = self.model.grid;
        let req = &self.model.requirements;
        (0..=grid.n)
            .map(|k| {
                let geom = TelescopeGeometry::new(
                    Vec3::from_column_slice(&trajectories[0].state(k)[..3]),
                    Vec3::from_column_slice(&trajectories[1].state(k)[..3]),
                    req.sun_direction,
                )?;
                let t = grid.time(k);
                Ok(FormationMetrics {
                    t,
                    separation_km: geom.separation_km(),
                    length_along_sun_m: geom.length_along_sun_m(),
                    pointing_error_arcsec: geom.pointing_error_rad().to_degrees() * 3600.0,
                    view_plane_error_m: geom.view_plane_error_m(),
                    in_window: req.in_window(t),
                })
            })
            .collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FormationMetrics {
    pub t: f64,
    pub separation_km: f64,
    pub length_along_sun_m: f64,
    pub pointing_error_arcsec: f64,
    pub view_plane_error_m: f64,
    pub in_window: bool,
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn objective_zero_and_constant() {
        let grid = TimeGrid::new(0.0, 10.0, 5).unwrap();
        let (j, g) = propellant_objective(&[0.0; 30], [47.0, 47.0], 9.80665, &grid, 1e-6).unwrap();
        assert_eq!(j, 0.0);
        assert!(g.iter().all(|&v| v == 0.0));
        let mut t = vec![0.0; 30];
        for row in 0..5 {
            t[6 * row + 4] = 0.01;
        }
        let (j, _) = propellant_objective(&t, [47.0, 47.0], 9.80665, &grid, 1e-6).unwrap();
        let expected = 50.0 * 0.01 / (9.80665 * 47.0);
        assert!((j - expected).abs() / expected < 1e-3);
        assert!(propellant_objective(&t, [47.0, 47.0], 9.80665, &grid, 0.0).is_err());
        assert!(propellant_objective(&t[1..], [47.0, 47.0], 9.80665, &grid, 1e-6).is_err());
    }
}
