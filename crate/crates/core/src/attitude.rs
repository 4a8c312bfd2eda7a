//! Gravity-gradient attitude dynamics of an unsymmetric rigid body in a
//! circular orbit.
//!
//! The state carries the inertial body rate `ω` (body axes) and two rows of
//! the orbit-to-body direction-cosine matrix: `C3`, the orbit normal in body
//! axes, and `C1`, the local radial direction in body axes. The along-track
//! row is rebuilt as `C2 = C3 × C1` whenever it is needed.
//!
//! ```text
//! ω̇ₓ = Kₓ(ω_y ω_z − 3Ω² C12 C13)      Ċ3 = C3 × ω
//! ω̇_y = K_y(ω_z ωₓ − 3Ω² C13 C11)     Ċ1 = C1 × ω + Ω·C2
//! ω̇_z = K_z(ωₓ ω_y − 3Ω² C11 C12)
//! ```
//!
//! with `Kₓ = (I₂ − I₃)/I₁`, `K_y = (I₃ − I₁)/I₂`, `K_z = (I₁ − I₂)/I₃`.
//! A body locked to the orbit frame (`C = I`, `ω = Ω·ẑ`) is an equilibrium.

use nalgebra::{DMatrix, Matrix3};

use crate::astro::Vec3;
use crate::error::{Error, Result};
use crate::ode::{OdeSystem, StagePoint};

/// Body rate and the two stored direction-cosine rows.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AttitudeState {
    pub omega: Vec3,
    /// `(C31, C32, C33)`: orbit normal in body axes.
    pub c3: Vec3,
    /// `(C11, C12, C13)`: radial direction in body axes.
    pub c1: Vec3,
}

impl AttitudeState {
    /// Validates the row invariants (`|C1| = |C3| = 1`, `C1·C3 = 0`) to `tol`.
    pub fn new(omega: Vec3, c3: Vec3, c1: Vec3, tol: f64) -> Result<Self> {
        let state = Self { omega, c3, c1 };
        let drift = state.orthonormality_drift();
        if !(drift <= tol) {
            return Err(Error::invalid(
                "attitude",
                format!("direction-cosine rows not orthonormal (drift {drift:e})"),
            ));
        }
        Ok(state)
    }

    /// Body frame aligned with the orbit frame, spinning with it.
    pub fn orbit_locked(orbit_rate: f64) -> Self {
        Self {
            omega: Vec3::new(0.0, 0.0, orbit_rate),
            c3: Vec3::z(),
            c1: Vec3::x(),
        }
    }

    pub fn c2(&self) -> Vec3 {
        self.c3.cross(&self.c1)
    }

    pub fn to_array(&self) -> [f64; 9] {
        [
            self.omega.x,
            self.omega.y,
            self.omega.z,
            self.c3.x,
            self.c3.y,
            self.c3.z,
            self.c1.x,
            self.c1.y,
            self.c1.z,
        ]
    }

    pub fn from_slice(x: &[f64]) -> Self {
        Self {
            omega: Vec3::new(x[0], x[1], x[2]),
            c3: Vec3::new(x[3], x[4], x[5]),
            c1: Vec3::new(x[6], x[7], x[8]),
        }
    }

    /// `max(|C1·C3|, ||C1| − 1|, ||C3| − 1|)`.
    pub fn orthonormality_drift(&self) -> f64 {
        self.c1
            .dot(&self.c3)
            .abs()
            .max((self.c1.norm() - 1.0).abs())
            .max((self.c3.norm() - 1.0).abs())
    }
}

/// Principal inertia and orbit rate, with the derived `K` coefficients.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AttitudeDynamics {
    inertia: [f64; 3],
    orbit_rate: f64,
    k: [f64; 3],
}

impl AttitudeDynamics {
    /// Rejects nonpositive moments and inertia triples that violate the
    /// triangle inequality `I_i + I_j ≥ I_k`.
    pub fn new(inertia: [f64; 3], orbit_rate: f64) -> Result<Self> {
        if inertia.iter().any(|&i| !(i.is_finite() && i > 0.0)) {
            return Err(Error::invalid("inertia", "moments must be finite and > 0"));
        }
        let [i1, i2, i3] = inertia;
        // Relative slack keeps exact flat-plate triples like (1, 2, 3) valid.
        let slack = 1e-12 * (i1 + i2 + i3);
        if i1 + i2 < i3 - slack || i2 + i3 < i1 - slack || i3 + i1 < i2 - slack {
            return Err(Error::invalid(
                "inertia",
                format!("{inertia:?} violates the triangle inequality"),
            ));
        }
        if !(orbit_rate.is_finite() && orbit_rate > 0.0) {
            return Err(Error::invalid("orbit_rate", "must be finite and > 0"));
        }
        let k = [(i2 - i3) / i1, (i3 - i1) / i2, (i1 - i2) / i3];
        Ok(Self {
            inertia,
            orbit_rate,
            k,
        })
    }

    pub fn inertia(&self) -> [f64; 3] {
        self.inertia
    }

    pub fn orbit_rate(&self) -> f64 {
        self.orbit_rate
    }

    pub fn k(&self) -> [f64; 3] {
        self.k
    }
}

/// Time derivative of the nine-component attitude state.
pub fn attitude_rhs(state: &AttitudeState, dynamics: &AttitudeDynamics) -> [f64; 9] {
    let AttitudeState { omega: w, c3, c1 } = *state;
    let [kx, ky, kz] = dynamics.k;
    let big_omega = dynamics.orbit_rate;
    let gg = 3.0 * big_omega * big_omega;

    let wdot = Vec3::new(
        kx * (w.y * w.z - gg * c1.y * c1.z),
        ky * (w.z * w.x - gg * c1.z * c1.x),
        kz * (w.x * w.y - gg * c1.x * c1.y),
    );
    let c3dot = c3.cross(&w);
    let c1dot = c1.cross(&w) + big_omega * c3.cross(&c1);
    [
        wdot.x, wdot.y, wdot.z, c3dot.x, c3dot.y, c3dot.z, c1dot.x, c1dot.y, c1dot.z,
    ]
}

/// `[a]×` such that `[a]× b = a × b`.
fn skew(a: &Vec3) -> Matrix3<f64> {
    Matrix3::new(0.0, -a.z, a.y, a.z, 0.0, -a.x, -a.y, a.x, 0.0)
}

/// `∂(attitude_rhs)/∂x`.
pub fn attitude_jacobian(state: &AttitudeState, dynamics: &AttitudeDynamics) -> DMatrix<f64> {
    let AttitudeState { omega: w, c3, c1 } = *state;
    let [kx, ky, kz] = dynamics.k;
    let big_omega = dynamics.orbit_rate;
    let gg = 3.0 * big_omega * big_omega;
    let mut j = DMatrix::zeros(9, 9);

    // ω̇ rows
    j[(0, 1)] = kx * w.z;
    j[(0, 2)] = kx * w.y;
    j[(0, 7)] = -kx * gg * c1.z;
    j[(0, 8)] = -kx * gg * c1.y;
    j[(1, 0)] = ky * w.z;
    j[(1, 2)] = ky * w.x;
    j[(1, 6)] = -ky * gg * c1.z;
    j[(1, 8)] = -ky * gg * c1.x;
    j[(2, 0)] = kz * w.y;
    j[(2, 1)] = kz * w.x;
    j[(2, 6)] = -kz * gg * c1.y;
    j[(2, 7)] = -kz * gg * c1.x;

    let blocks = [
        // (row block, col block, matrix)
        (1, 0, skew(&c3)),
        (1, 1, -skew(&w)),
        (2, 0, skew(&c1)),
        (2, 1, -big_omega * skew(&c1)),
        (2, 2, -skew(&w) + big_omega * skew(&c3)),
    ];
    for (rb, cb, m) in blocks {
        for r in 0..3 {
            for c in 0..3 {
                j[(3 * rb + r, 3 * cb + c)] = m[(r, c)];
            }
        }
    }
    j
}

/// The attitude equations as an uncontrolled [`OdeSystem`].
#[derive(Debug, Clone, Copy)]
pub struct AttitudeSystem {
    pub dynamics: AttitudeDynamics,
}

pub fn make_attitude_system(dynamics: AttitudeDynamics) -> AttitudeSystem {
    AttitudeSystem { dynamics }
}

impl OdeSystem for AttitudeSystem {
    fn state_dim(&self) -> usize {
        9
    }

    fn control_dim(&self) -> usize {
        0
    }

    fn rhs(&self, _at: &StagePoint, x: &[f64], _u: &[f64], dx: &mut [f64]) -> Result<()> {
        dx.copy_from_slice(&attitude_rhs(&AttitudeState::from_slice(x), &self.dynamics));
        Ok(())
    }

    fn jac_x(&self, _at: &StagePoint, x: &[f64], _u: &[f64], out: &mut DMatrix<f64>) -> Result<()> {
        out.copy_from(&attitude_jacobian(
            &AttitudeState::from_slice(x),
            &self.dynamics,
        ));
        Ok(())
    }

    fn jac_u(
        &self,
        _at: &StagePoint,
        _x: &[f64],
        _u: &[f64],
        _out: &mut DMatrix<f64>,
    ) -> Result<()> {
        Ok(())
    }
}

/// Angle (rad) between the body 3-axis and the orbit normal: `acos(C33)`,
/// with `C33` clamped to `[-1, 1]`.
pub fn nutation_angle(state: &AttitudeState) -> f64 {
    state.c3.z.clamp(-1.0, 1.0).acos()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ode::jacobian_fd_discrepancy;

    #[test]
    fn k_coefficients_cyclic() {
        let d = AttitudeDynamics::new([2.0, 3.0, 4.0], 1e-3).unwrap();
        let [kx, ky, kz] = d.k();
        assert_eq!(kx, -0.5);
        assert_eq!(ky, 2.0 / 3.0);
        assert_eq!(kz, -0.25);
        let sym = AttitudeDynamics::new([5.0; 3], 1e-3).unwrap();
        assert_eq!(sym.k(), [0.0; 3]);
    }

    #[test]
    fn invalid_inertia_rejected() {
        assert!(AttitudeDynamics::new([1.0, 1.0, 3.0], 1e-3).is_err());
        assert!(AttitudeDynamics::new([0.0, 1.0, 1.0], 1e-3).is_err());
        assert!(AttitudeDynamics::new([1.0, 2.0, 3.0], 1e-3).is_ok());
        assert!(AttitudeDynamics::new([1.0, 2.0, 2.5], 0.0).is_err());
    }

    #[test]
    fn identity_attitude_at_rest() {
        let d = AttitudeDynamics::new([1.0, 2.0, 3.0], 1e-3).unwrap();
        let s = AttitudeState {
            omega: Vec3::zeros(),
            c3: Vec3::z(),
            c1: Vec3::x(),
        };
        let dx = attitude_rhs(&s, &d);
        assert_eq!(&dx[..6], &[0.0; 6]);
        // Orbit frame turns at Ω under an inertially fixed body.
        assert_eq!(&dx[6..], &[0.0, 1e-3, 0.0]);
    }

    #[test]
    fn orbit_locked_is_stationary() {
        let d = AttitudeDynamics::new([1.0, 2.0, 3.0], 1e-3).unwrap();
        let dx = attitude_rhs(&AttitudeState::orbit_locked(1e-3), &d);
        assert_eq!(dx, [0.0; 9]);
    }

    #[test]
    fn symmetric_body_has_constant_rate() {
        let d = AttitudeDynamics::new([2.0; 3], 1e-3).unwrap();
        let c1 = Vec3::new(0.6, 0.8, 0.0);
        let c3 = Vec3::new(0.0, 0.0, 1.0);
        let s = AttitudeState {
            omega: Vec3::new(0.1, -0.2, 0.3),
            c3,
            c1,
        };
        let dx = attitude_rhs(&s, &d);
        assert_eq!(&dx[..3], &[0.0; 3]);
    }

    #[test]
    fn jacobian_matches_differences() {
        let d = AttitudeDynamics::new([1.0, 2.0, 2.7], 1.1e-3).unwrap();
        let axis = Vec3::new(0.3, -0.5, 0.8).normalize();
        let rot = nalgebra::Rotation3::from_axis_angle(&nalgebra::Unit::new_normalize(axis), 0.7);
        let s = AttitudeState {
            omega: Vec3::new(0.01, -0.02, 0.005),
            c3: rot * Vec3::z(),
            c1: rot * Vec3::x(),
        };
        let sys = make_attitude_system(d);
        let err =
            jacobian_fd_discrepancy(&sys, &StagePoint::at_time(0.0), &s.to_array(), &[], 1e-12)
                .unwrap();
        assert!(err < 1e-6, "{err}");
    }

    #[test]
    fn nutation_values() {
        let s = AttitudeState::orbit_locked(1e-3);
        assert_eq!(nutation_angle(&s), 0.0);
        let tilted = AttitudeState {
            c3: Vec3::new(1.0, 0.0, 0.0),
            c1: Vec3::new(0.0, 0.0, 1.0),
            ..s
        };
        assert!((nutation_angle(&tilted) - std::f64::consts::FRAC_PI_2).abs() < 1e-15);
        let over = AttitudeState {
            c3: Vec3::new(0.0, 0.0, 1.0 + 1e-12),
            ..s
        };
        assert_eq!(nutation_angle(&over), 0.0);
    }

    #[test]
    fn state_validation() {
        assert!(AttitudeState::new(Vec3::zeros(), Vec3::z(), Vec3::x(), 1e-9).is_ok());
        assert!(
            AttitudeState::new(Vec3::zeros(), Vec3::z(), Vec3::new(0.0, 0.1, 1.0), 1e-6).is_err()
        );
    }
}
