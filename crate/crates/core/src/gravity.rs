//! Zonal gravity (J2, J3, J4) and orbital dynamics in absolute and
//! reference-relative coordinates.
//!
//! The relative formulation integrates `u = r − r⁰` directly, with
//! `ü = a(r⁰ + u) − a(r⁰) + T/(1000·m)`. When the propagation grid is aligned
//! with the reference grid, `r⁰` is looked up at the reference's own RK4
//! stage inputs, which makes a relative propagation identical (up to
//! round-off) to differencing two absolute propagations.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use nalgebra::{DMatrix, Matrix3};
use sha2::{Digest, Sha256};

use crate::astro::{PhysicalConstants, StateVec6, TimeGrid, Vec3};
use crate::error::{Error, Result};
use crate::ode::{rk4_propagate, rk4_stage_inputs, OdeSystem, Stage, StagePoint};

fn guard(constants: &PhysicalConstants, r: &Vec3) -> Result<f64> {
    let radius = r.norm();
    let limit = 0.5 * constants.re;
    if !(radius > limit) {
        return Err(Error::GuardRadius {
            radius,
            guard: limit,
        });
    }
    Ok(radius)
}

/// Point-mass plus J2/J3/J4 acceleration (km/s²) at ECI position `r` (km).
pub fn zonal_gravity_accel(constants: &PhysicalConstants, r: &Vec3) -> Result<Vec3> {
    let rn = guard(constants, r)?;
    let PhysicalConstants {
        mu, re, j2, j3, j4, ..
    } = *constants;
    let rz = r.z;
    let zhat = Vec3::z();
    let r2 = rn * rn;
    let r3 = r2 * rn;
    let r5 = r3 * r2;
    let r7 = r5 * r2;

    let point_mass = -mu / r3 * r;

    let j2_term = -(3.0 * mu * j2 * re * re) / (2.0 * r5)
        * ((1.0 - 5.0 * rz * rz / r2) * r + 2.0 * rz * zhat);

    // (3 r_z − 3r²/(5 r_z))·r_z expanded so the equatorial plane is regular.
    let j3_term = -(5.0 * mu * j3 * re.powi(3)) / (2.0 * r7)
        * ((3.0 * rz - 7.0 * rz.powi(3) / r2) * r + (3.0 * rz * rz - 3.0 * r2 / 5.0) * zhat);

    let j4_term = (15.0 * mu * j4 * re.powi(4)) / (8.0 * r7)
        * ((1.0 - 14.0 * rz * rz / r2 + 21.0 * rz.powi(4) / (r2 * r2)) * r
            + (4.0 - 28.0 * rz * rz / (3.0 * r2)) * rz * zhat);

    Ok(point_mass + j2_term + j3_term + j4_term)
}

/// Monomial `coeff · |r|^p · r_z^q`.
struct Monomial {
    coeff: f64,
    p: i32,
    q: i32,
}

impl Monomial {
    fn eval(&self, rn: f64, rz: f64) -> (f64, f64, f64) {
        let base = self.coeff * rn.powi(self.p);
        let value = base * rz.powi(self.q);
        let d_rn = self.coeff * self.p as f64 * rn.powi(self.p - 1) * rz.powi(self.q);
        let d_rz = if self.q == 0 {
            0.0
        } else {
            base * self.q as f64 * rz.powi(self.q - 1)
        };
        (value, d_rn, d_rz)
    }
}

/// The acceleration written as `A(|r|, r_z)·r + B(|r|, r_z)·ẑ`.
fn radial_axial_monomials(c: &PhysicalConstants) -> ([Monomial; 8], [Monomial; 5]) {
    let k2 = -1.5 * c.mu * c.j2 * c.re.powi(2);
    let k3 = -2.5 * c.mu * c.j3 * c.re.powi(3);
    let k4 = 15.0 / 8.0 * c.mu * c.j4 * c.re.powi(4);
    let m = |coeff, p, q| Monomial { coeff, p, q };
    let a = [
        m(-c.mu, -3, 0),
        m(k2, -5, 0),
        m(-5.0 * k2, -7, 2),
        m(3.0 * k3, -7, 1),
        m(-7.0 * k3, -9, 3),
        m(k4, -7, 0),
        m(-14.0 * k4, -9, 2),
        m(21.0 * k4, -11, 4),
    ];
    let b = [
        m(2.0 * k2, -5, 1),
        m(3.0 * k3, -7, 2),
        m(-0.6 * k3, -5, 0),
        m(4.0 * k4, -7, 1),
        m(-28.0 / 3.0 * k4, -9, 3),
    ];
    (a, b)
}

/// `∂a/∂r` (1/s²) of [`zonal_gravity_accel`].
pub fn zonal_gravity_jacobian(constants: &PhysicalConstants, r: &Vec3) -> Result<Matrix3<f64>> {
    let rn = guard(constants, r)?;
    let (a_terms, b_terms) = radial_axial_monomials(constants);
    let sum = |terms: &[Monomial]| {
        terms.iter().fold((0.0, 0.0, 0.0), |acc, m| {
            let (v, dr, dz) = m.eval(rn, r.z);
            (acc.0 + v, acc.1 + dr, acc.2 + dz)
        })
    };
    let (a, a_rn, a_rz) = sum(&a_terms);
    let (_, b_rn, b_rz) = sum(&b_terms);
    let rhat = r / rn;
    let zhat = Vec3::z();
    let grad_a = a_rn * rhat + a_rz * zhat;
    let grad_b = b_rn * rhat + b_rz * zhat;
    Ok(Matrix3::identity() * a + r * grad_a.transpose() + zhat * grad_b.transpose())
}

fn check_mass(mass: f64) -> Result<()> {
    if !(mass.is_finite() && mass > 0.0) {
        return Err(Error::invalid(
            "mass",
            format!("must be finite and > 0, got {mass}"),
        ));
    }
    Ok(())
}

fn check_isp(isp: f64) -> Result<()> {
    if !(isp.is_finite() && isp > 0.0) {
        return Err(Error::invalid(
            "isp",
            format!("must be finite and > 0, got {isp}"),
        ));
    }
    Ok(())
}

/// Absolute ECI dynamics `(r, v)` under zonal gravity and thrust (N).
#[derive(Debug, Clone)]
pub struct AbsoluteOrbitDynamics {
    pub constants: PhysicalConstants,
    pub mass: f64,
    pub isp: f64,
}

pub fn make_absolute_system(
    constants: PhysicalConstants,
    mass: f64,
    isp: f64,
) -> Result<AbsoluteOrbitDynamics> {
    check_mass(mass)?;
    check_isp(isp)?;
    Ok(AbsoluteOrbitDynamics {
        constants,
        mass,
        isp,
    })
}

/// km/s² per N for a spacecraft of `mass` kg.
fn thrust_gain(mass: f64) -> f64 {
    1.0 / (1000.0 * mass)
}

fn write_state_jacobian(g: &Matrix3<f64>, out: &mut DMatrix<f64>) {
    out.fill(0.0);
    for i in 0..3 {
        out[(i, i + 3)] = 1.0;
        for j in 0..3 {
            out[(i + 3, j)] = g[(i, j)];
        }
    }
}

fn write_thrust_jacobian(mass: f64, out: &mut DMatrix<f64>) {
    out.fill(0.0);
    let k = thrust_gain(mass);
    for i in 0..3 {
        out[(i + 3, i)] = k;
    }
}

impl OdeSystem for AbsoluteOrbitDynamics {
    fn state_dim(&self) -> usize {
        6
    }

    fn control_dim(&self) -> usize {
        3
    }

    fn rhs(&self, _at: &StagePoint, x: &[f64], u: &[f64], dx: &mut [f64]) -> Result<()> {
        let r = Vec3::new(x[0], x[1], x[2]);
        let a = zonal_gravity_accel(&self.constants, &r)?;
        let k = thrust_gain(self.mass);
        dx[..3].copy_from_slice(&x[3..6]);
        for i in 0..3 {
            dx[3 + i] = a[i] + k * u[i];
        }
        Ok(())
    }

    fn jac_x(&self, _at: &StagePoint, x: &[f64], _u: &[f64], out: &mut DMatrix<f64>) -> Result<()> {
        let g = zonal_gravity_jacobian(&self.constants, &Vec3::new(x[0], x[1], x[2]))?;
        write_state_jacobian(&g, out);
        Ok(())
    }

    fn jac_u(
        &self,
        _at: &StagePoint,
        _x: &[f64],
        _u: &[f64],
        out: &mut DMatrix<f64>,
    ) -> Result<()> {
        write_thrust_jacobian(self.mass, out);
        Ok(())
    }
}

/// Circular orbit at 600 km altitude and 97.8° inclination, ascending node
/// on the x-axis. A toolkit default, close to sun-synchronous.
pub fn sun_synchronous_default(constants: &PhysicalConstants) -> StateVec6 {
    let r = constants.re + 600.0;
    let v = (constants.mu / r).sqrt();
    let inc = 97.8_f64.to_radians();
    StateVec6::new(r, 0.0, 0.0, 0.0, v * inc.cos(), v * inc.sin())
}

/// Where a [`ReferenceOrbit`] came from.
#[derive(Debug, Clone, PartialEq)]
pub enum ReferenceSource {
    Computed,
    CacheHit,
    /// Computed, but the cache could not be read or written.
    ComputedCacheFailed(String),
}

/// Unthrusted reference trajectory precomputed ahead of any optimization.
#[derive(Debug, Clone)]
pub struct ReferenceOrbit {
    constants: PhysicalConstants,
    grid: TimeGrid,
    samples: Vec<f64>,
    /// Position inputs of the four RK4 stages of every step.
    stage_positions: Vec<[Vec3; 4]>,
    hash: [u8; 32],
    source: ReferenceSource,
}

pub const REFERENCE_CACHE_VERSION: u32 = 1;
const HEADER_LEN: usize = 4 + 32 + 8 + 8 + 8;

/// SHA-256 over the inputs that determine a reference orbit.
pub fn reference_provenance_hash(
    constants: &PhysicalConstants,
    initial_state: &StateVec6,
    grid: &TimeGrid,
) -> [u8; 32] {
    let mut hasher = Sha256::new();
    hasher.update(b"taloskit/reference-orbit");
    hasher.update(REFERENCE_CACHE_VERSION.to_le_bytes());
    hasher.update(constants.to_le_bytes());
    for v in initial_state.iter() {
        hasher.update(v.to_le_bytes());
    }
    hasher.update(grid.to_le_bytes());
    hasher.finalize().into()
}

pub fn hex(bytes: &[u8]) -> String {
    bytes.iter().map(|b| format!("{b:02x}")).collect()
}

impl ReferenceOrbit {
    fn from_samples(
        constants: PhysicalConstants,
        grid: TimeGrid,
        samples: Vec<f64>,
        hash: [u8; 32],
        source: ReferenceSource,
    ) -> Result<Self> {
        let sys = AbsoluteOrbitDynamics {
            constants,
            mass: 1.0,
            isp: 1.0,
        };
        let zero = [0.0; 3];
        let mut stage_positions = Vec::with_capacity(grid.n);
        for step in 0..grid.n {
            let x = &samples[step * 6..step * 6 + 6];
            let inputs = rk4_stage_inputs(&sys, &grid, step, x, &zero)?;
            stage_positions.push(inputs.map(|s| Vec3::new(s[0], s[1], s[2])));
        }
        Ok(Self {
            constants,
            grid,
            samples,
            stage_positions,
            hash,
            source,
        })
    }

    pub fn grid(&self) -> &TimeGrid {
        &self.grid
    }

    pub fn constants(&self) -> &PhysicalConstants {
        &self.constants
    }

    pub fn provenance_hash(&self) -> [u8; 32] {
        self.hash
    }

    pub fn source(&self) -> &ReferenceSource {
        &self.source
    }

    /// Row-major `(n + 1) × 6` samples.
    pub fn samples(&self) -> &[f64] {
        &self.samples
    }

    pub fn state(&self, k: usize) -> StateVec6 {
        StateVec6::from_column_slice(&self.samples[k * 6..k * 6 + 6])
    }

    pub fn covers(&self, grid: &TimeGrid) -> bool {
        let slack = 1e-9 * self.grid.dt.max(1.0);
        grid.t0 >= self.grid.t0 - slack && grid.t_final() <= self.grid.t_final() + slack
    }

    /// Step offset of `grid` into the reference when both grids share step
    /// size and phase.
    fn aligned_offset(&self, grid: &TimeGrid) -> Option<usize> {
        if grid.dt != self.grid.dt {
            return None;
        }
        let offset = (grid.t0 - self.grid.t0) / self.grid.dt;
        let rounded = offset.round();
        if rounded < 0.0 || (offset - rounded).abs() > 1e-9 {
            return None;
        }
        Some(rounded as usize)
    }

    /// Reference position for an evaluation point: stage-exact when the
    /// propagation grid is aligned, cubic Hermite interpolation otherwise.
    pub fn position_at(&self, at: &StagePoint) -> Result<Vec3> {
        if let Some(offset) = self.aligned_offset(&at.grid) {
            let step = offset + at.step;
            if step < self.grid.n {
                return Ok(self.stage_positions[step][at.stage.index()]);
            }
            if step == self.grid.n && at.stage == Stage::Start {
                let s = self.state(step);
                return Ok(Vec3::new(s[0], s[1], s[2]));
            }
        }
        self.interpolate(at.t)
    }

    /// Cubic Hermite interpolation of the reference position at time `t`.
    pub fn interpolate(&self, t: f64) -> Result<Vec3> {
        let start = self.grid.t0;
        let end = self.grid.t_final();
        let slack = 1e-9 * self.grid.dt.max(1.0);
        if !(t >= start - slack && t <= end + slack) {
            return Err(Error::OutsideReference { t, start, end });
        }
        if self.grid.n == 0 {
            let s = self.state(0);
            return Ok(Vec3::new(s[0], s[1], s[2]));
        }
        let h = self.grid.dt;
        let tau = ((t - start) / h).clamp(0.0, self.grid.n as f64);
        let k = (tau.floor() as usize).min(self.grid.n - 1);
        let s = tau - k as f64;
        let a = self.state(k);
        let b = self.state(k + 1);
        let h00 = 2.0 * s.powi(3) - 3.0 * s * s + 1.0;
        let h10 = s.powi(3) - 2.0 * s * s + s;
        let h01 = -2.0 * s.powi(3) + 3.0 * s * s;
        let h11 = s.powi(3) - s * s;
        Ok(Vec3::from_fn(|i, _| {
            h00 * a[i] + h10 * h * a[i + 3] + h01 * b[i] + h11 * h * b[i + 3]
        }))
    }

    fn cache_path(dir: &Path, hash: &[u8; 32]) -> PathBuf {
        dir.join(format!("{}.ref", hex(hash)))
    }

    /// Serialized cache image: header then `(n + 1) × 6` little-endian f64.
    pub fn to_cache_bytes(&self) -> Vec<u8> {
        let mut out = Vec::with_capacity(HEADER_LEN + self.samples.len() * 8);
        out.extend_from_slice(&REFERENCE_CACHE_VERSION.to_le_bytes());
        out.extend_from_slice(&self.hash);
        out.extend_from_slice(&(self.grid.n as u64).to_le_bytes());
        out.extend_from_slice(&self.grid.dt.to_le_bytes());
        out.extend_from_slice(&self.grid.t0.to_le_bytes());
        for v in &self.samples {
            out.extend_from_slice(&v.to_le_bytes());
        }
        out
    }

    fn parse_cache(bytes: &[u8], hash: &[u8; 32], grid: &TimeGrid) -> Option<Vec<f64>> {
        if bytes.len() < HEADER_LEN {
            return None;
        }
        let version = u32::from_le_bytes(bytes[0..4].try_into().ok()?);
        let n = u64::from_le_bytes(bytes[36..44].try_into().ok()?);
        let dt = f64::from_le_bytes(bytes[44..52].try_into().ok()?);
        let t0 = f64::from_le_bytes(bytes[52..60].try_into().ok()?);
        if version != REFERENCE_CACHE_VERSION
            || &bytes[4..36] != hash
            || n != grid.n as u64
            || dt.to_bits() != grid.dt.to_bits()
            || t0.to_bits() != grid.t0.to_bits()
        {
            return None;
        }
        let body = &bytes[HEADER_LEN..];
        if body.len() != (grid.n + 1) * 6 * 8 {
            return None;
        }
        Some(
            body.chunks_exact(8)
                .map(|c| f64::from_le_bytes(c.try_into().expect("8-byte chunk")))
                .collect(),
        )
    }

    fn write_cache(&self, dir: &Path) -> std::io::Result<()> {
        fs::create_dir_all(dir)?;
        let path = Self::cache_path(dir, &self.hash);
        let tmp = dir.join(format!(
            ".{}.{}.tmp",
            hex(&self.hash[..8]),
            std::process::id()
        ));
        {
            let mut f = fs::File::create(&tmp)?;
            f.write_all(&self.to_cache_bytes())?;
            f.sync_all()?;
        }
        fs::rename(&tmp, &path)
    }
}

/// Propagates the unthrusted reference orbit, reusing a cached copy keyed by
/// the provenance hash when `cache_dir` holds one. Cache failures fall back
/// to recomputation.
pub fn precompute_reference(
    constants: &PhysicalConstants,
    initial_state: &StateVec6,
    grid: &TimeGrid,
    cache_dir: Option<&Path>,
) -> Result<ReferenceOrbit> {
    let hash = reference_provenance_hash(constants, initial_state, grid);
    let mut failure = None;
    if let Some(dir) = cache_dir {
        let path = ReferenceOrbit::cache_path(dir, &hash);
        match fs::read(&path) {
            Ok(bytes) => match ReferenceOrbit::parse_cache(&bytes, &hash, grid) {
                Some(samples) => {
                    return ReferenceOrbit::from_samples(
                        *constants,
                        *grid,
                        samples,
                        hash,
                        ReferenceSource::CacheHit,
                    )
                }
                None => failure = Some(format!("{}: stale or corrupt cache entry", path.display())),
            },
            Err(e) if e.kind() == std::io::ErrorKind::NotFound => {}
            Err(e) => failure = Some(format!("{}: {e}", path.display())),
        }
    }

    let sys = AbsoluteOrbitDynamics {
        constants: *constants,
        mass: 1.0,
        isp: 1.0,
    };
    let controls = vec![0.0; grid.n * 3];
    let traj = rk4_propagate(&sys, initial_state.as_slice(), &controls, grid)?;
    let mut reference = ReferenceOrbit::from_samples(
        *constants,
        *grid,
        traj.states().to_vec(),
        hash,
        ReferenceSource::Computed,
    )?;
    if let Some(dir) = cache_dir {
        if let Err(e) = reference.write_cache(dir) {
            failure = Some(format!("{}: {e}", dir.display()));
        }
    }
    if let Some(msg) = failure {
        reference.source = ReferenceSource::ComputedCacheFailed(msg);
    }
    Ok(reference)
}

/// Dynamics of the offset `u = r − r⁰` from a precomputed reference orbit.
#[derive(Debug, Clone)]
pub struct RelativeOrbitDynamics<'a> {
    pub reference: &'a ReferenceOrbit,
    pub constants: PhysicalConstants,
    pub mass: f64,
    pub isp: f64,
}

pub fn make_relative_system(
    reference: &ReferenceOrbit,
    constants: PhysicalConstants,
    mass: f64,
    isp: f64,
) -> Result<RelativeOrbitDynamics<'_>> {
    check_mass(mass)?;
    check_isp(isp)?;
    Ok(RelativeOrbitDynamics {
        reference,
        constants,
        mass,
        isp,
    })
}

impl RelativeOrbitDynamics<'_> {
    /// Errors when `grid` extends past the reference samples.
    pub fn check_grid(&self, grid: &TimeGrid) -> Result<()> {
        if self.reference.covers(grid) {
            Ok(())
        } else {
            Err(Error::OutsideReference {
                t: grid.t_final(),
                start: self.reference.grid.t0,
                end: self.reference.grid.t_final(),
            })
        }
    }
}

impl OdeSystem for RelativeOrbitDynamics<'_> {
    fn state_dim(&self) -> usize {
        6
    }

    fn control_dim(&self) -> usize {
        3
    }

    fn rhs(&self, at: &StagePoint, x: &[f64], u: &[f64], dx: &mut [f64]) -> Result<()> {
        let r0 = self.reference.position_at(at)?;
        let offset = Vec3::new(x[0], x[1], x[2]);
        let a_sc = zonal_gravity_accel(&self.constants, &(r0 + offset))?;
        let a_ref = zonal_gravity_accel(&self.constants, &r0)?;
        let k = thrust_gain(self.mass);
        dx[..3].copy_from_slice(&x[3..6]);
        for i in 0..3 {
            dx[3 + i] = (a_sc[i] - a_ref[i]) + k * u[i];
        }
        Ok(())
    }

    fn jac_x(&self, at: &StagePoint, x: &[f64], _u: &[f64], out: &mut DMatrix<f64>) -> Result<()> {
        let r0 = self.reference.position_at(at)?;
        let g = zonal_gravity_jacobian(&self.constants, &(r0 + Vec3::new(x[0], x[1], x[2])))?;
        write_state_jacobian(&g, out);
        Ok(())
    }

    fn jac_u(
        &self,
        _at: &StagePoint,
        _x: &[f64],
        _u: &[f64],
        out: &mut DMatrix<f64>,
    ) -> Result<()> {
        write_thrust_jacobian(self.mass, out);
        Ok(())
    }
}
