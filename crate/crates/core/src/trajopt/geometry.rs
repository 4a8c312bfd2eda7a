//! Formation geometry of the two telescope spacecraft and the pointwise
//! constraint functions built on it.

use crate::astro::Vec3;
use crate::error::{Error, Result};

/// Relative positions (km) of the optics (`u1`) and detector (`u2`)
/// spacecraft with the sun direction.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TelescopeGeometry {
    pub u1: Vec3,
    pub u2: Vec3,
    pub s_hat: Vec3,
}

impl TelescopeGeometry {
    pub fn new(u1: Vec3, u2: Vec3, s_hat: Vec3) -> Result<Self> {
        if (s_hat.norm() - 1.0).abs() > 1e-12 {
            return Err(Error::invalid(
                "s_hat",
                "sun direction must be a unit vector",
            ));
        }
        Ok(Self { u1, u2, s_hat })
    }

    /// `d = u2 − u1`, km.
    pub fn separation_vector(&self) -> Vec3 {
        self.u2 - self.u1
    }

    pub fn separation_km(&self) -> f64 {
        self.separation_vector().norm()
    }

    /// Signed `d·ŝ` in metres.
    pub fn length_along_sun_m(&self) -> f64 {
        1e3 * self.separation_vector().dot(&self.s_hat)
    }

    /// Angle between `d` and `ŝ`, in `[0, π]`.
    pub fn pointing_error_rad(&self) -> f64 {
        let d = self.separation_vector();
        d.cross(&self.s_hat).norm().atan2(d.dot(&self.s_hat))
    }

    /// Component of `d` orthogonal to `ŝ`, metres.
    pub fn view_plane_error_m(&self) -> f64 {
        let d = self.separation_vector();
        1e3 * (d - d.dot(&self.s_hat) * self.s_hat).norm()
    }
}

/// Chord `|d/|d| − s| = 2 sin(θ/2)` between the direction of `d` and unit
/// `s`, with its gradient in `d` (zero where the chord vanishes).
pub fn sun_chord(d: &Vec3, s: &Vec3) -> (f64, Vec3) {
    let norm = d.norm();
    let unit = d / norm;
    let chord = (unit - s).norm();
    if chord == 0.0 {
        return (0.0, Vec3::zeros());
    }
    let grad = -(s - unit.dot(s) * unit) / (norm * chord);
    (chord, grad)
}

/// Direction `t ⟂ d, ŝ` along which [`sun_chord`] curves, with the second
/// derivative of the chord along it. `None` when the chord vanishes or `d`
/// points away from `s`.
pub fn sun_chord_curvature(d: &Vec3, s: &Vec3) -> Option<(Vec3, f64)> {
    let norm = d.norm();
    let unit = d / norm;
    let cos = unit.dot(s);
    let chord = (unit - s).norm();
    if chord == 0.0 || cos <= 0.0 {
        return None;
    }
    let t = s.cross(&unit).try_normalize(0.0)?;
    Some((t, cos / (norm * norm * chord)))
}
