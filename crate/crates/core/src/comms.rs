//! Ground-station downlink: line of sight, link-budget rate and integrated
//! data volume.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::aggregate::ks_aggregate;
use crate::astro::{geodetic_to_eci, PhysicalConstants, TimeGrid, Vec3};
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GroundStationSpec {
    pub name: String,
    /// Longitude, degrees east.
    pub lon: f64,
    /// Geodetic latitude, degrees.
    pub lat: f64,
    /// Altitude above the spherical Earth, km.
    pub alt: f64,
}

impl GroundStationSpec {
    pub fn position_eci(&self, constants: &PhysicalConstants, t: f64) -> Result<Vec3> {
        geodetic_to_eci(constants, self.lon, self.lat, self.alt, t)
    }
}

/// Link-budget parameters. The defaults are toolkit values for a UHF
/// CubeSat downlink, not mission data.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LinkParameters {
    /// Receiver gain.
    #[serde(rename = "Gr")]
    pub gr: f64,
    /// Transmitter gain.
    #[serde(rename = "Gt")]
    pub gt: f64,
    /// Line loss factor in (0, 1].
    #[serde(rename = "Ll")]
    pub ll: f64,
    /// Carrier frequency, Hz.
    pub f: f64,
    /// System noise temperature, K.
    #[serde(rename = "Ts")]
    pub ts: f64,
    #[serde(rename = "SNR")]
    pub snr: f64,
    /// Amplifier efficiency in (0, 1].
    pub eta_p: f64,
    /// Transmit power, W.
    #[serde(rename = "P_comm")]
    pub p_comm: f64,
}

impl Default for LinkParameters {
    fn default() -> Self {
        Self {
            gr: 1e4,
            gt: 10.0,
            ll: 0.9,
            f: 437e6,
            ts: 500.0,
            snr: 10.0,
            eta_p: 0.3,
            p_comm: 5.0,
        }
    }
}

impl LinkParameters {
    /// Checks the invariants, returning the offending field name on failure.
    pub fn validate(&self) -> std::result::Result<(), (&'static str, String)> {
        let positive = [
            ("Gr", self.gr),
            ("Gt", self.gt),
            ("f", self.f),
            ("Ts", self.ts),
            ("SNR", self.snr),
            ("P_comm", self.p_comm),
        ];
        for (name, v) in positive {
            if !(v.is_finite() && v > 0.0) {
                return Err((name, format!("must be finite and > 0, got {v}")));
            }
        }
        for (name, v) in [("Ll", self.ll), ("eta_p", self.eta_p)] {
            if !(v > 0.0 && v <= 1.0) {
                return Err((name, format!("must be in (0, 1], got {v}")));
            }
        }
        Ok(())
    }
}

/// Whether the spacecraft is strictly above the station's local horizon
/// plane.
pub fn line_of_sight(r_sc: &Vec3, r_gs: &Vec3) -> bool {
    (r_sc - r_gs).dot(r_gs) > 0.0
}

/// Downlink rate in bit/s for a slant range in km.
pub fn download_rate(
    link: &LinkParameters,
    constants: &PhysicalConstants,
    range_km: f64,
    los: bool,
) -> Result<f64> {
    if !(range_km > 0.0 && range_km.is_finite()) {
        return Err(Error::invalid(
            "range",
            format!("must be finite and > 0, got {range_km}"),
        ));
    }
    if !los {
        return Ok(0.0);
    }
    let s = range_km * 1e3;
    let c = constants.c;
    let noise = 16.0 * PI * PI * link.f * link.f * constants.k_b * link.ts * link.snr;
    Ok(c * c * link.gr * link.ll / noise * (link.eta_p * link.p_comm * link.gt) / (s * s))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum RateAggregation {
    /// Exact maximum.
    Hard,
    /// KS smooth maximum with sharpness `rho` (1/(bit/s)).
    Smooth { rho: f64 },
}

pub fn max_rate(rates: &[f64], mode: RateAggregation) -> Result<f64> {
    if rates.is_empty() {
        return Err(Error::invalid("rates", "no ground stations"));
    }
    match mode {
        RateAggregation::Hard => Ok(rates.iter().copied().fold(f64::NEG_INFINITY, f64::max)),
        RateAggregation::Smooth { rho } => Ok(ks_aggregate(rates, rho)?.0),
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LinkSample {
    pub t: f64,
    /// Per-station rates, bit/s, in station order.
    pub rates: Vec<f64>,
    pub los: Vec<bool>,
    pub max_rate: f64,
    /// Data downlinked since the first grid point, bit.
    pub cumulative_bits: f64,
}

/// Link samples along a spacecraft path of ECI positions (km), one per grid
/// point, with trapezoidal integration of the hard maximum rate.
pub fn total_data(
    positions: &[Vec3],
    stations: &[GroundStationSpec],
    link: &LinkParameters,
    constants: &PhysicalConstants,
    grid: &TimeGrid,
) -> Result<Vec<LinkSample>> {
    if positions.len() != grid.n + 1 {
        return Err(Error::DimensionMismatch {
            context: "positions vs time grid",
            expected: grid.n + 1,
            actual: positions.len(),
        });
    }
    if stations.is_empty() {
        return Err(Error::invalid("stations", "no ground stations"));
    }
    if let Err((name, reason)) = link.validate() {
        return Err(Error::invalid(name, reason));
    }
    let mut out: Vec<LinkSample> = Vec::with_capacity(positions.len());
    for (k, r_sc) in positions.iter().enumerate() {
        let t = grid.time(k);
        let mut rates = Vec::with_capacity(stations.len());
        let mut los = Vec::with_capacity(stations.len());
        for station in stations {
            let r_gs = station.position_eci(constants, t)?;
            let visible = line_of_sight(r_sc, &r_gs);
            let range = (r_sc - r_gs).norm();
            rates.push(download_rate(link, constants, range, visible)?);
            los.push(visible);
        }
        let max = max_rate(&rates, RateAggregation::Hard)?;
        let cumulative = match out.last() {
            Some(prev) => prev.cumulative_bits + 0.5 * grid.dt * (prev.max_rate + max),
            None => 0.0,
        };
        out.push(LinkSample {
            t,
            rates,
            los,
            max_rate: max,
            cumulative_bits: cumulative,
        });
    }
    Ok(out)
}

pub fn link_samples_to_csv(stations: &[GroundStationSpec], samples: &[LinkSample]) -> String {
    let mut out = String::from("t");
    for s in stations {
        out.push_str(&format!(",rate_{}", s.name));
    }
    for s in stations {
        out.push_str(&format!(",los_{}", s.name));
    }
    out.push_str(",max_rate,cumulative_bits\n");
    for sample in samples {
        out.push_str(&sample.t.to_string());
        for r in &sample.rates {
            out.push_str(&format!(",{r}"));
        }
        for l in &sample.los {
            out.push_str(if *l { ",1" } else { ",0" });
        }
        out.push_str(&format!(
            ",{},{}\n",
            sample.max_rate, sample.cumulative_bits
        ));
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::astro::standard_earth_constants;

    #[test]
    fn los_cases() {
        let gs = Vec3::new(6378.137, 0.0, 0.0);
        assert!(line_of_sight(&Vec3::new(7000.0, 0.0, 0.0), &gs));
        assert!(!line_of_sight(&Vec3::new(-7000.0, 0.0, 0.0), &gs));
        assert!(!line_of_sight(&Vec3::new(6378.137, 500.0, 0.0), &gs));
    }

    #[test]
    fn rate_gating_and_scaling() {
        let c = standard_earth_constants();
        let link = LinkParameters::default();
        assert_eq!(download_rate(&link, &c, 1000.0, false).unwrap(), 0.0);
        let r1 = download_rate(&link, &c, 1000.0, true).unwrap();
        let r2 = download_rate(&link, &c, 2000.0, true).unwrap();
        assert!((r1 / r2 - 4.0).abs() < 1e-12);
        assert!(download_rate(&link, &c, 0.0, true).is_err());
        assert!(download_rate(&link, &c, -3.0, false).is_err());
    }

    #[test]
    fn link_validation() {
        assert!(LinkParameters::default().validate().is_ok());
        let bad = LinkParameters {
            ll: 1.5,
            ..Default::default()
        };
        assert_eq!(bad.validate().unwrap_err().0, "Ll");
        let bad = LinkParameters {
            ts: 0.0,
            ..Default::default()
        };
        assert_eq!(bad.validate().unwrap_err().0, "Ts");
    }

    #[test]
    fn aggregation_modes() {
        assert_eq!(
            max_rate(&[1.0, 2.0, 3.0], RateAggregation::Hard).unwrap(),
            3.0
        );
        assert_eq!(
            max_rate(&[7.0], RateAggregation::Smooth { rho: 3.0 }).unwrap(),
            7.0
        );
        assert!(max_rate(&[], RateAggregation::Hard).is_err());
        let s = max_rate(&[1.0, 2.0, 3.0], RateAggregation::Smooth { rho: 50.0 }).unwrap();
        assert!((3.0..=3.0 + 3f64.ln() / 50.0).contains(&s));
    }

    #[test]
    fn constant_rate_integrates_exactly() {
        let c = standard_earth_constants();
        let grid = TimeGrid::new(0.0, 10.0, 30).unwrap();
        let station = GroundStationSpec {
            name: "pole".into(),
            lon: 0.0,
            lat: 90.0,
            alt: 0.0,
        };
        // Fixed point above the pole: constant range and visibility.
        let positions = vec![Vec3::new(0.0, 0.0, c.re + 1000.0); 31];
        let link = LinkParameters::default();
        let samples = total_data(&positions, &[station], &link, &c, &grid).unwrap();
        let rate = samples[0].max_rate;
        let total = samples.last().unwrap().cumulative_bits;
        assert!((total - rate * 300.0).abs() <= 1e-12 * total);
        assert!(total_data(&positions[1..], &[], &link, &c, &grid).is_err());
    }
}
