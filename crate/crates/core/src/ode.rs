//! Fixed-step RK4 propagation with zero-order-hold controls, and the discrete
//! adjoint of the RK4 step map.
//!
//! The adjoint differentiates the exact arithmetic the forward sweep
//! performs, so gradients are consistent with the propagated functional to
//! round-off, independently of the truncation error of the integrator.

use nalgebra::DMatrix;
use rayon::prelude::*;

use crate::astro::TimeGrid;
use crate::error::{Error, Result};

/// Which of the four RK4 stage inputs an evaluation belongs to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Stage {
    /// `x_k` at `t_k`.
    Start,
    /// `x_k + dt/2·k1` at `t_k + dt/2`.
    FirstMid,
    /// `x_k + dt/2·k2` at `t_k + dt/2`.
    SecondMid,
    /// `x_k + dt·k3` at `t_k + dt`.
    End,
}

impl Stage {
    pub const ALL: [Stage; 4] = [Stage::Start, Stage::FirstMid, Stage::SecondMid, Stage::End];

    pub fn index(self) -> usize {
        match self {
            Stage::Start => 0,
            Stage::FirstMid => 1,
            Stage::SecondMid => 2,
            Stage::End => 3,
        }
    }
}

/// Evaluation point handed to a system: the time, plus where it sits in the
/// RK4 stage structure of the grid being propagated.
///
/// Systems driven by a precomputed exogenous trajectory use `grid`, `step`
/// and `stage` to look up stage-exact samples; everything else only needs `t`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StagePoint {
    pub t: f64,
    pub grid: TimeGrid,
    pub step: usize,
    pub stage: Stage,
}

impl StagePoint {
    pub fn new(grid: TimeGrid, step: usize, stage: Stage) -> Self {
        let t = match stage {
            Stage::Start => grid.time(step),
            Stage::FirstMid | Stage::SecondMid => grid.time(step) + 0.5 * grid.dt,
            Stage::End => grid.time(step) + grid.dt,
        };
        Self {
            t,
            grid,
            step,
            stage,
        }
    }

    /// Point at a bare time, outside any propagation.
    pub fn at_time(t: f64) -> Self {
        Self {
            t,
            grid: TimeGrid {
                t0: t,
                dt: 1.0,
                n: 0,
            },
            step: 0,
            stage: Stage::Start,
        }
    }
}

/// First-order system `ẋ = f(t, x, u)` with analytic Jacobians.
pub trait OdeSystem: Sync {
    fn state_dim(&self) -> usize;
    fn control_dim(&self) -> usize;

    fn rhs(&self, at: &StagePoint, x: &[f64], u: &[f64], dx: &mut [f64]) -> Result<()>;

    /// `∂f/∂x`, `state_dim × state_dim`.
    fn jac_x(&self, at: &StagePoint, x: &[f64], u: &[f64], out: &mut DMatrix<f64>) -> Result<()>;

    /// `∂f/∂u`, `state_dim × control_dim`.
    fn jac_u(&self, at: &StagePoint, x: &[f64], u: &[f64], out: &mut DMatrix<f64>) -> Result<()>;
}

impl<S: OdeSystem + ?Sized> OdeSystem for &S {
    fn state_dim(&self) -> usize {
        (**self).state_dim()
    }
    fn control_dim(&self) -> usize {
        (**self).control_dim()
    }
    fn rhs(&self, at: &StagePoint, x: &[f64], u: &[f64], dx: &mut [f64]) -> Result<()> {
        (**self).rhs(at, x, u, dx)
    }
    fn jac_x(&self, at: &StagePoint, x: &[f64], u: &[f64], out: &mut DMatrix<f64>) -> Result<()> {
        (**self).jac_x(at, x, u, out)
    }
    fn jac_u(&self, at: &StagePoint, x: &[f64], u: &[f64], out: &mut DMatrix<f64>) -> Result<()> {
        (**self).jac_u(at, x, u, out)
    }
}

/// An [`OdeSystem`] assembled from closures. Handy for small analytic
/// problems.
pub struct FnSystem<F, Jx, Ju> {
    pub state_dim: usize,
    pub control_dim: usize,
    pub f: F,
    pub jx: Jx,
    pub ju: Ju,
}

impl<F, Jx, Ju> OdeSystem for FnSystem<F, Jx, Ju>
where
    F: Fn(f64, &[f64], &[f64], &mut [f64]) + Sync,
    Jx: Fn(f64, &[f64], &[f64], &mut DMatrix<f64>) + Sync,
    Ju: Fn(f64, &[f64], &[f64], &mut DMatrix<f64>) + Sync,
{
    fn state_dim(&self) -> usize {
        self.state_dim
    }
    fn control_dim(&self) -> usize {
        self.control_dim
    }
    fn rhs(&self, at: &StagePoint, x: &[f64], u: &[f64], dx: &mut [f64]) -> Result<()> {
        (self.f)(at.t, x, u, dx);
        Ok(())
    }
    fn jac_x(&self, at: &StagePoint, x: &[f64], u: &[f64], out: &mut DMatrix<f64>) -> Result<()> {
        (self.jx)(at.t, x, u, out);
        Ok(())
    }
    fn jac_u(&self, at: &StagePoint, x: &[f64], u: &[f64], out: &mut DMatrix<f64>) -> Result<()> {
        (self.ju)(at.t, x, u, out);
        Ok(())
    }
}

/// Propagated state and control history on a grid.
#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    grid: TimeGrid,
    state_dim: usize,
    control_dim: usize,
    states: Vec<f64>,
    controls: Vec<f64>,
}

impl Trajectory {
    pub fn grid(&self) -> &TimeGrid {
        &self.grid
    }

    pub fn state_dim(&self) -> usize {
        self.state_dim
    }

    pub fn control_dim(&self) -> usize {
        self.control_dim
    }

    /// State at grid point `k` (`0..=n`).
    pub fn state(&self, k: usize) -> &[f64] {
        &self.states[k * self.state_dim..(k + 1) * self.state_dim]
    }

    /// Control held over step `k` (`0..n`).
    pub fn control(&self, k: usize) -> &[f64] {
        &self.controls[k * self.control_dim..(k + 1) * self.control_dim]
    }

    pub fn final_state(&self) -> &[f64] {
        self.state(self.grid.n)
    }

    /// Row-major `(n + 1) × state_dim` state history.
    pub fn states(&self) -> &[f64] {
        &self.states
    }

    /// Row-major `n × control_dim` control history.
    pub fn controls(&self) -> &[f64] {
        &self.controls
    }

    pub fn len(&self) -> usize {
        self.grid.n + 1
    }

    pub fn is_empty(&self) -> bool {
        false
    }
}

struct Rk4Work {
    k: [Vec<f64>; 4],
    tmp: Vec<f64>,
}

impl Rk4Work {
    fn new(nx: usize) -> Self {
        Self {
            k: [vec![0.0; nx], vec![0.0; nx], vec![0.0; nx], vec![0.0; nx]],
            tmp: vec![0.0; nx],
        }
    }
}

/// Stage input for `stage` given the stage slopes computed so far.
fn stage_input(stage: Stage, dt: f64, x: &[f64], k: &[Vec<f64>; 4], out: &mut [f64]) {
    match stage {
        Stage::Start => out.copy_from_slice(x),
        Stage::FirstMid => {
            for i in 0..x.len() {
                out[i] = x[i] + 0.5 * dt * k[0][i];
            }
        }
        Stage::SecondMid => {
            for i in 0..x.len() {
                out[i] = x[i] + 0.5 * dt * k[1][i];
            }
        }
        Stage::End => {
            for i in 0..x.len() {
                out[i] = x[i] + dt * k[2][i];
            }
        }
    }
}

/// Evaluates the four stage slopes of step `step` from state `x`.
fn stages<S: OdeSystem + ?Sized>(
    sys: &S,
    grid: &TimeGrid,
    step: usize,
    x: &[f64],
    u: &[f64],
    work: &mut Rk4Work,
) -> Result<()> {
    for stage in Stage::ALL {
        let at = StagePoint::new(*grid, step, stage);
        let Rk4Work { k, tmp } = work;
        stage_input(stage, grid.dt, x, k, tmp);
        sys.rhs(&at, tmp, u, &mut k[stage.index()])?;
    }
    Ok(())
}

/// The four RK4 stage input states of step `step` starting from `x`, computed
/// with exactly the arithmetic [`rk4_propagate`] uses.
pub fn rk4_stage_inputs<S: OdeSystem + ?Sized>(
    sys: &S,
    grid: &TimeGrid,
    step: usize,
    x: &[f64],
    u: &[f64],
) -> Result<[Vec<f64>; 4]> {
    let mut work = Rk4Work::new(x.len());
    stages(sys, grid, step, x, u, &mut work)?;
    let mut out: [Vec<f64>; 4] = Default::default();
    for stage in Stage::ALL {
        let mut buf = vec![0.0; x.len()];
        stage_input(stage, grid.dt, x, &work.k, &mut buf);
        out[stage.index()] = buf;
    }
    Ok(out)
}

fn check_controls<S: OdeSystem + ?Sized>(sys: &S, controls: &[f64], grid: &TimeGrid) -> Result<()> {
    let expected = grid.n * sys.control_dim();
    if controls.len() != expected {
        return Err(Error::DimensionMismatch {
            context: "control sequence",
            expected,
            actual: controls.len(),
        });
    }
    Ok(())
}

/// Classic RK4 with the control held constant over each step.
pub fn rk4_propagate<S: OdeSystem + ?Sized>(
    sys: &S,
    x0: &[f64],
    controls: &[f64],
    grid: &TimeGrid,
) -> Result<Trajectory> {
    let nx = sys.state_dim();
    let nu = sys.control_dim();
    if x0.len() != nx {
        return Err(Error::DimensionMismatch {
            context: "initial state",
            expected: nx,
            actual: x0.len(),
        });
    }
    check_controls(sys, controls, grid)?;
    if x0.iter().any(|v| !v.is_finite()) {
        return Err(Error::invalid("x0", "initial state must be finite"));
    }

    let mut states = Vec::with_capacity((grid.n + 1) * nx);
    states.extend_from_slice(x0);
    let mut work = Rk4Work::new(nx);
    let mut next = vec![0.0; nx];
    let sixth = grid.dt / 6.0;
    for step in 0..grid.n {
        let x = &states[step * nx..(step + 1) * nx];
        let u = &controls[step * nu..(step + 1) * nu];
        stages(sys, grid, step, x, u, &mut work)?;
        let k = &work.k;
        for i in 0..nx {
            next[i] = x[i] + sixth * (k[0][i] + 2.0 * k[1][i] + 2.0 * k[2][i] + k[3][i]);
        }
        if next.iter().any(|v| !v.is_finite()) {
            return Err(Error::Divergence { step });
        }
        states.extend_from_slice(&next);
    }

    Ok(Trajectory {
        grid: *grid,
        state_dim: nx,
        control_dim: nu,
        states,
        controls: controls.to_vec(),
    })
}

/// Gradient of a trajectory functional with respect to its inputs.
#[derive(Debug, Clone, PartialEq)]
pub struct AdjointGradient {
    pub initial_state: Vec<f64>,
    /// Row-major `n × control_dim`.
    pub controls: Vec<f64>,
}

/// Reverse sweep through the RK4 step maps.
///
/// `dj_dx` holds the explicit partial derivative of the functional with
/// respect to each stored state (`(n + 1) × state_dim`), `dj_du` with respect
/// to each control row (`n × control_dim`). Returns the total derivative with
/// respect to the initial state and every control.
pub fn adjoint_gradient<S: OdeSystem + ?Sized>(
    sys: &S,
    traj: &Trajectory,
    dj_dx: &[f64],
    dj_du: &[f64],
) -> Result<AdjointGradient> {
    let nx = sys.state_dim();
    let nu = sys.control_dim();
    let grid = traj.grid;
    if traj.state_dim != nx || traj.control_dim != nu {
        return Err(Error::DimensionMismatch {
            context: "trajectory/system dimensions",
            expected: nx,
            actual: traj.state_dim,
        });
    }
    if dj_dx.len() != (grid.n + 1) * nx {
        return Err(Error::DimensionMismatch {
            context: "state cost gradient",
            expected: (grid.n + 1) * nx,
            actual: dj_dx.len(),
        });
    }
    if dj_du.len() != grid.n * nu {
        return Err(Error::DimensionMismatch {
            context: "control cost gradient",
            expected: grid.n * nu,
            actual: dj_du.len(),
        });
    }

    let dt = grid.dt;
    let mut lambda = dj_dx[grid.n * nx..].to_vec();
    let mut grad_u = dj_du.to_vec();
    let mut work = Rk4Work::new(nx);
    let mut jx = DMatrix::zeros(nx, nx);
    let mut ju = DMatrix::zeros(nx, nu);
    // Adjoints of the stage slopes k1..k4.
    let mut kbar = [vec![0.0; nx], vec![0.0; nx], vec![0.0; nx], vec![0.0; nx]];
    let mut xbar = vec![0.0; nx];
    let mut sbar = vec![0.0; nx];

    for step in (0..grid.n).rev() {
        let x = traj.state(step);
        let u = traj.control(step);
        stages(sys, &grid, step, x, u, &mut work)?;

        for i in 0..nx {
            kbar[0][i] = dt / 6.0 * lambda[i];
            kbar[1][i] = dt / 3.0 * lambda[i];
            kbar[2][i] = dt / 3.0 * lambda[i];
            kbar[3][i] = dt / 6.0 * lambda[i];
        }
        xbar.copy_from_slice(&lambda);

        for stage in Stage::ALL.into_iter().rev() {
            let s = stage.index();
            let at = StagePoint::new(grid, step, stage);
            stage_input(stage, dt, x, &work.k, &mut work.tmp);
            sys.jac_x(&at, &work.tmp, u, &mut jx)?;
            // sbar = Jxᵀ kbar[s]: adjoint of the stage input.
            for j in 0..nx {
                let mut acc = 0.0;
                for i in 0..nx {
                    acc += jx[(i, j)] * kbar[s][i];
                }
                sbar[j] = acc;
            }
            if nu > 0 {
                sys.jac_u(&at, &work.tmp, u, &mut ju)?;
                let gu = &mut grad_u[step * nu..(step + 1) * nu];
                for j in 0..nu {
                    let mut acc = 0.0;
                    for i in 0..nx {
                        acc += ju[(i, j)] * kbar[s][i];
                    }
                    gu[j] += acc;
                }
            }
            for j in 0..nx {
                xbar[j] += sbar[j];
            }
            let coeff = match stage {
                Stage::End => dt,
                Stage::SecondMid | Stage::FirstMid => 0.5 * dt,
                Stage::Start => 0.0,
            };
            if s > 0 {
                for j in 0..nx {
                    kbar[s - 1][j] += coeff * sbar[j];
                }
            }
        }

        let explicit = &dj_dx[step * nx..(step + 1) * nx];
        for i in 0..nx {
            lambda[i] = xbar[i] + explicit[i];
        }
    }

    Ok(AdjointGradient {
        initial_state: lambda,
        controls: grad_u,
    })
}

/// Linearization of one RK4 step map `x_{k+1} = Φ(x_k, u_k)`.
#[derive(Debug, Clone, PartialEq)]
pub struct StepSensitivity {
    /// `∂x_{k+1}/∂x_k`.
    pub state: DMatrix<f64>,
    /// `∂x_{k+1}/∂u_k`.
    pub control: DMatrix<f64>,
}

/// Exact derivatives of every RK4 step map along a trajectory. Chaining the
/// transposes backward reproduces [`adjoint_gradient`].
pub fn step_sensitivities<S: OdeSystem + ?Sized>(
    sys: &S,
    traj: &Trajectory,
) -> Result<Vec<StepSensitivity>> {
    let nx = sys.state_dim();
    let nu = sys.control_dim();
    let grid = traj.grid;
    let dt = grid.dt;
    (0..grid.n)
        .into_par_iter()
        .map(|step| {
            let x = traj.state(step);
            let u = traj.control(step);
            let mut work = Rk4Work::new(nx);
            stages(sys, &grid, step, x, u, &mut work)?;
            let mut jx = DMatrix::zeros(nx, nx);
            let mut ju = DMatrix::zeros(nx, nu);
            let mut dkx: Vec<DMatrix<f64>> = Vec::with_capacity(4);
            let mut dku: Vec<DMatrix<f64>> = Vec::with_capacity(4);
            for stage in Stage::ALL {
                let at = StagePoint::new(grid, step, stage);
                stage_input(stage, dt, x, &work.k, &mut work.tmp);
                sys.jac_x(&at, &work.tmp, u, &mut jx)?;
                sys.jac_u(&at, &work.tmp, u, &mut ju)?;
                let coeff = match stage {
                    Stage::Start => 0.0,
                    Stage::FirstMid | Stage::SecondMid => 0.5 * dt,
                    Stage::End => dt,
                };
                let (input_x, input_u) = match (dkx.last(), dku.last()) {
                    (Some(px), Some(pu)) => (DMatrix::identity(nx, nx) + coeff * px, coeff * pu),
                    _ => (DMatrix::identity(nx, nx), DMatrix::zeros(nx, nu)),
                };
                dkx.push(&jx * input_x);
                dku.push(&jx * input_u + &ju);
            }
            let w = [dt / 6.0, dt / 3.0, dt / 3.0, dt / 6.0];
            let mut state = DMatrix::identity(nx, nx);
            let mut control = DMatrix::zeros(nx, nu);
            for s in 0..4 {
                state += w[s] * &dkx[s];
                control += w[s] * &dku[s];
            }
            Ok(StepSensitivity { state, control })
        })
        .collect()
}

/// Result of an observed-order estimate.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ObservedOrder {
    /// Both error measurements vanish to round-off: the integrator is exact
    /// on this problem.
    Exact,
    Order(f64),
}

fn refine_controls(controls: &[f64], nu: usize, factor: usize) -> Vec<f64> {
    controls
        .chunks(nu.max(1))
        .flat_map(|row| std::iter::repeat_n(row, factor).flatten().copied())
        .collect()
}

/// Observed convergence order `log2(e(dt)/e(dt/2))`, with errors measured on
/// the final state against a `dt/8` propagation.
pub fn richardson_order_check<S: OdeSystem + ?Sized>(
    sys: &S,
    x0: &[f64],
    controls: &[f64],
    grid: &TimeGrid,
) -> Result<ObservedOrder> {
    let nu = sys.control_dim();
    check_controls(sys, controls, grid)?;
    let run = |factor: usize| -> Result<Vec<f64>> {
        let g = TimeGrid::new(grid.t0, grid.dt / factor as f64, grid.n * factor)?;
        let c = if nu == 0 {
            Vec::new()
        } else {
            refine_controls(controls, nu, factor)
        };
        Ok(rk4_propagate(sys, x0, &c, &g)?.final_state().to_vec())
    };
    let coarse = run(1)?;
    let half = run(2)?;
    let fine = run(8)?;
    let dist = |a: &[f64], b: &[f64]| {
        a.iter()
            .zip(b)
            .map(|(p, q)| (p - q) * (p - q))
            .sum::<f64>()
            .sqrt()
    };
    let e1 = dist(&coarse, &fine);
    let e2 = dist(&half, &fine);
    let scale = fine.iter().map(|v| v.abs()).fold(1.0, f64::max);
    let floor = 64.0 * f64::EPSILON * scale;
    if e1 <= floor && e2 <= floor {
        return Ok(ObservedOrder::Exact);
    }
    Ok(ObservedOrder::Order((e1 / e2).log2()))
}

/// Largest relative discrepancy between the analytic Jacobians of `sys` and
/// central differences of its right-hand side at one point.
///
/// Relative error uses `max(|analytic|, |fd|, floor)` in the denominator.
pub fn jacobian_fd_discrepancy<S: OdeSystem + ?Sized>(
    sys: &S,
    at: &StagePoint,
    x: &[f64],
    u: &[f64],
    floor: f64,
) -> Result<f64> {
    let nx = sys.state_dim();
    let nu = sys.control_dim();
    let mut jx = DMatrix::zeros(nx, nx);
    let mut ju = DMatrix::zeros(nx, nu);
    sys.jac_x(at, x, u, &mut jx)?;
    sys.jac_u(at, x, u, &mut ju)?;
    let mut plus = vec![0.0; nx];
    let mut minus = vec![0.0; nx];
    let mut worst: f64 = 0.0;
    let mut compare = |analytic: &DMatrix<f64>, col: usize, plus: &[f64], minus: &[f64], h: f64| {
        // Scale the tolerance to the magnitude of the whole column.
        let col_scale = (0..nx)
            .map(|i| analytic[(i, col)].abs())
            .fold(floor, f64::max);
        for i in 0..nx {
            let fd = (plus[i] - minus[i]) / (2.0 * h);
            let err = (fd - analytic[(i, col)]).abs() / col_scale.max(fd.abs());
            worst = worst.max(err);
        }
    };
    let mut xp = x.to_vec();
    for j in 0..nx {
        let h = 1e-6 * x[j].abs().max(1e-3);
        xp[j] = x[j] + h;
        sys.rhs(at, &xp, u, &mut plus)?;
        xp[j] = x[j] - h;
        sys.rhs(at, &xp, u, &mut minus)?;
        xp[j] = x[j];
        compare(&jx, j, &plus, &minus, h);
    }
    let mut up = u.to_vec();
    for j in 0..nu {
        let h = 1e-6 * u[j].abs().max(1e-3);
        up[j] = u[j] + h;
        sys.rhs(at, x, &up, &mut plus)?;
        up[j] = u[j] - h;
        sys.rhs(at, x, &up, &mut minus)?;
        up[j] = u[j];
        compare(&ju, j, &plus, &minus, h);
    }
    Ok(worst)
}
