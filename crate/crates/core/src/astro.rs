//! Physical constants, time grids and Earth-fixed placement shared by every
//! discipline model.
//!
//! Positions are in km, velocities in km/s. Thrust is in N and masses in kg;
//! the dynamics modules do the N to km/s² conversion.

use std::f64::consts::TAU;

use nalgebra::{Matrix3, Vector3, Vector6};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub type Vec3 = Vector3<f64>;
pub type StateVec6 = Vector6<f64>;

/// Earth model constants.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PhysicalConstants {
    /// Gravitational parameter, km³/s².
    pub mu: f64,
    /// Equatorial radius, km.
    pub re: f64,
    pub j2: f64,
    pub j3: f64,
    pub j4: f64,
    /// Standard gravity, m/s².
    pub g0: f64,
    /// Speed of light, m/s.
    pub c: f64,
    /// Boltzmann constant, J/K.
    pub k_b: f64,
    /// Earth rotation rate, rad/s.
    pub omega_e: f64,
}

impl PhysicalConstants {
    /// Standard geodetic values (EGM2008 zonals, WGS84 radius and rotation rate).
    pub const fn standard_earth() -> Self {
        Self {
            mu: 3.986004418e5,
            re: 6378.137,
            j2: 1.08262668e-3,
            j3: -2.53265648e-6,
            j4: -1.61962159e-6,
            g0: 9.80665,
            c: 299_792_458.0,
            k_b: 1.380649e-23,
            omega_e: 7.2921159e-5,
        }
    }

    /// Same constants with the zonal harmonics switched off.
    pub fn point_mass(self) -> Self {
        Self {
            j2: 0.0,
            j3: 0.0,
            j4: 0.0,
            ..self
        }
    }

    /// Period of a circular orbit of radius `r` km.
    pub fn circular_period(&self, r: f64) -> f64 {
        TAU * (r * r * r / self.mu).sqrt()
    }

    /// Fixed little-endian byte image used for provenance hashing.
    pub fn to_le_bytes(&self) -> Vec<u8> {
        [
            self.mu,
            self.re,
            self.j2,
            self.j3,
            self.j4,
            self.g0,
            self.c,
            self.k_b,
            self.omega_e,
        ]
        .iter()
        .flat_map(|v| v.to_le_bytes())
        .collect()
    }
}

impl Default for PhysicalConstants {
    fn default() -> Self {
        Self::standard_earth()
    }
}

pub fn standard_earth_constants() -> PhysicalConstants {
    PhysicalConstants::standard_earth()
}

/// Uniform time grid with points `t0 + i·dt` for `i` in `0..=n`.
///
/// `n` counts steps, so a grid has `n + 1` points. A zero-step grid is a
/// single instant and is accepted for degenerate propagations.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TimeGrid {
    pub t0: f64,
    pub dt: f64,
    pub n: usize,
}

impl TimeGrid {
    pub fn new(t0: f64, dt: f64, n: usize) -> Result<Self> {
        if !t0.is_finite() {
            return Err(Error::invalid("t0", "must be finite"));
        }
        if !(dt.is_finite() && dt > 0.0) {
            return Err(Error::invalid(
                "dt",
                format!("must be finite and > 0, got {dt}"),
            ));
        }
        Ok(Self { t0, dt, n })
    }

    /// Grid covering `[t0, t0 + duration]` with the largest step not above
    /// `max_dt` that divides the span evenly.
    pub fn spanning(t0: f64, duration: f64, max_dt: f64) -> Result<Self> {
        if !(duration.is_finite() && duration > 0.0) {
            return Err(Error::invalid("duration", "must be finite and > 0"));
        }
        if !(max_dt.is_finite() && max_dt > 0.0) {
            return Err(Error::invalid(
                "dt",
                format!("must be finite and > 0, got {max_dt}"),
            ));
        }
        let n = (duration / max_dt).ceil().max(1.0) as usize;
        Self::new(t0, duration / n as f64, n)
    }

    pub fn time(&self, i: usize) -> f64 {
        self.t0 + i as f64 * self.dt
    }

    pub fn t_final(&self) -> f64 {
        self.time(self.n)
    }

    pub fn times(&self) -> impl Iterator<Item = f64> + '_ {
        (0..=self.n).map(|i| self.time(i))
    }

    pub fn to_le_bytes(&self) -> Vec<u8> {
        let mut out = Vec::with_capacity(24);
        out.extend_from_slice(&self.t0.to_le_bytes());
        out.extend_from_slice(&self.dt.to_le_bytes());
        out.extend_from_slice(&(self.n as u64).to_le_bytes());
        out
    }
}

/// ECI to ECEF rotation at `t` seconds past epoch (prime meridian aligned
/// with the ECI x-axis at `t = 0`).
pub fn gmst_rotation(constants: &PhysicalConstants, t: f64) -> Matrix3<f64> {
    let theta = constants.omega_e * t;
    let (s, c) = theta.sin_cos();
    Matrix3::new(c, s, 0.0, -s, c, 0.0, 0.0, 0.0, 1.0)
}

/// Station position in ECI on a spherical Earth.
pub fn geodetic_to_eci(
    constants: &PhysicalConstants,
    lon_deg: f64,
    lat_deg: f64,
    alt_km: f64,
    t: f64,
) -> Result<Vec3> {
    if !(-90.0..=90.0).contains(&lat_deg) {
        return Err(Error::invalid(
            "lat",
            format!("{lat_deg} outside [-90, 90]"),
        ));
    }
    if !(-180.0..=180.0).contains(&lon_deg) {
        return Err(Error::invalid(
            "lon",
            format!("{lon_deg} outside [-180, 180]"),
        ));
    }
    if !(alt_km >= 0.0) || !alt_km.is_finite() {
        return Err(Error::invalid(
            "alt",
            format!("{alt_km} must be finite and >= 0"),
        ));
    }
    let radius = constants.re + alt_km;
    let (slat, clat) = lat_deg.to_radians().sin_cos();
    let (slon, clon) = lon_deg.to_radians().sin_cos();
    let ecef = Vec3::new(radius * clat * clon, radius * clat * slon, radius * slat);
    Ok(gmst_rotation(constants, t).transpose() * ecef)
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    #[test]
    fn standard_values() {
        let c = standard_earth_constants();
        assert_eq!(c.mu, 3.986004418e5);
        assert_eq!(c.g0, 9.80665);
        assert!(c.j2 > 0.0 && c.j3 < 0.0 && c.j4 < 0.0);
        let again = standard_earth_constants();
        assert_eq!(c.to_le_bytes(), again.to_le_bytes());
    }

    #[test]
    fn gmst_special_angles() {
        let c = standard_earth_constants();
        assert_eq!(gmst_rotation(&c, 0.0), Matrix3::identity());
        let day = gmst_rotation(&c, TAU / c.omega_e);
        assert!((day - Matrix3::identity()).abs().max() < 1e-12);
        let half = gmst_rotation(&c, PI / c.omega_e) * Vec3::x();
        assert!((half - Vec3::new(-1.0, 0.0, 0.0)).norm() < 1e-12);
    }

    #[test]
    fn station_placement() {
        let c = standard_earth_constants();
        let p = geodetic_to_eci(&c, 0.0, 0.0, 0.0, 0.0).unwrap();
        assert_eq!(p, Vec3::new(c.re, 0.0, 0.0));
        for t in [0.0, 1234.5, 86_000.0] {
            let pole = geodetic_to_eci(&c, 37.0, 90.0, 0.0, t).unwrap();
            assert!((pole - Vec3::new(0.0, 0.0, c.re)).norm() < 1e-9);
        }
        let sd = geodetic_to_eci(&c, -117.2340, 32.8801, 0.4849, 0.0).unwrap();
        assert!((sd.norm() - (c.re + 0.4849)).abs() < 1e-9);
    }

    #[test]
    fn station_range_checks() {
        let c = standard_earth_constants();
        assert!(geodetic_to_eci(&c, 0.0, 95.0, 0.0, 0.0).is_err());
        assert!(geodetic_to_eci(&c, 181.0, 0.0, 0.0, 0.0).is_err());
        assert!(geodetic_to_eci(&c, 0.0, 0.0, -1.0, 0.0).is_err());
    }

    #[test]
    fn grid_layout() {
        let g = TimeGrid::new(10.0, 0.5, 4).unwrap();
        let t: Vec<f64> = g.times().collect();
        assert_eq!(t, vec![10.0, 10.5, 11.0, 11.5, 12.0]);
        assert!(TimeGrid::new(0.0, 0.0, 3).is_err());
        let s = TimeGrid::spanning(0.0, 100.0, 30.0).unwrap();
        assert_eq!(s.n, 4);
        assert_eq!(s.dt, 25.0);
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        proptest! {
            #[test]
            fn rotation_is_proper_orthonormal(t in -1e7f64..1e7) {
                let c = standard_earth_constants();
                let r = gmst_rotation(&c, t);
                prop_assert!((r.transpose() * r - Matrix3::identity()).abs().max() < 1e-12);
                prop_assert!((r.determinant() - 1.0).abs() < 1e-12);
            }

            #[test]
            fn placement_radius(lon in -180.0f64..=180.0, lat in -90.0f64..=90.0,
                                alt in 0.0f64..5.0, t in -1e6f64..1e6) {
                let c = standard_earth_constants();
                let p = geodetic_to_eci(&c, lon, lat, alt, t).unwrap();
                prop_assert!((p.norm() - (c.re + alt)).abs() < 1e-9);
            }
        }
    }
}
