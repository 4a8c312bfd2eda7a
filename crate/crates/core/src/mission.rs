//! Mission specification documents and their assembly into discipline
//! models.
//!
//! A mission file is one JSON object with a `format_version` and exactly one
//! of `cubesat` or `virtual_telescope`. Unknown fields are rejected and every
//! validation error names the offending field path.

use std::collections::BTreeMap;
use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::astro::{PhysicalConstants, StateVec6, TimeGrid, Vec3};
use crate::attitude::AttitudeDynamics;
use crate::comms::{GroundStationSpec, LinkParameters};
use crate::error::{Error, Result};
use crate::gravity::{
    make_relative_system, precompute_reference, ReferenceOrbit, RelativeOrbitDynamics,
};

pub const FORMAT_VERSION: u32 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum OrbitModel {
    Absolute,
    Relative,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AttitudeSpec {
    /// Principal moments of inertia `(I1, I2, I3)`, kg·m².
    pub inertia_kg_m2: [f64; 3],
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CubesatSpec {
    pub name: String,
    pub groundstations: BTreeMap<String, GroundStationSpec>,
    pub orbit_model: OrbitModel,
    /// `null` leaves attitude unmodeled.
    #[serde(default)]
    pub attitude: Option<AttitudeSpec>,
    /// kg.
    pub dry_mass: f64,
    /// Absolute ECI state, or the offset from the reference orbit when
    /// `orbit_model` is `relative` (km, km/s).
    pub initial_orbit_state: [f64; 6],
    /// s.
    pub specific_impulse: f64,
    #[serde(default)]
    pub link: LinkParameters,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OptimizerSettings {
    /// Bound on each thrust component, N.
    pub max_thrust_n: f64,
    /// KS aggregation sharpness for the normalized constraint families.
    pub ks_rho: f64,
    /// Smoothing of `|ṁ|` expressed as a thrust, N.
    pub smoothing_epsilon_n: f64,
}

impl Default for OptimizerSettings {
    fn default() -> Self {
        Self {
            max_thrust_n: 0.02,
            ks_rho: 100.0,
            smoothing_epsilon_n: 1e-6,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct VirtualTelescopeSpec {
    pub optics_cubesat: CubesatSpec,
    pub detector_cubesat: CubesatSpec,
    pub groundstations: BTreeMap<String, GroundStationSpec>,
    pub telescope_length_m: f64,
    pub telescope_length_tol_mm: f64,
    pub telescope_view_halfangle_tol_arcsec: f64,
    pub max_separation_all_phases_km: f64,
    /// `[t_start, t_end]` pairs in seconds from mission start.
    #[serde(default)]
    pub observation_windows: Vec<[f64; 2]>,
    /// Absolute ECI state of the reference orbit at mission start.
    pub reference_orbit_initial_state: [f64; 6],
    /// Inertial direction toward the sun; normalized on assembly.
    pub sun_direction: [f64; 3],
    pub mission_duration_s: f64,
    pub num_time_steps: usize,
    #[serde(default)]
    pub optimizer: OptimizerSettings,
}

#[derive(Debug, Clone, PartialEq)]
#[allow(clippy::large_enum_variant)]
pub enum MissionSpec {
    Cubesat(CubesatSpec),
    VirtualTelescope(VirtualTelescopeSpec),
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct MissionDocument {
    format_version: u32,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    cubesat: Option<CubesatSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    virtual_telescope: Option<VirtualTelescopeSpec>,
}

fn join(prefix: &str, field: &str) -> String {
    if prefix.is_empty() {
        field.to_string()
    } else {
        format!("{prefix}.{field}")
    }
}

fn positive(path: String, v: f64) -> Result<()> {
    if v.is_finite() && v > 0.0 {
        Ok(())
    } else {
        Err(Error::spec(
            path,
            format!("must be finite and > 0, got {v}"),
        ))
    }
}

fn finite_all(path: String, values: &[f64]) -> Result<()> {
    match values.iter().position(|v| !v.is_finite()) {
        Some(i) => Err(Error::spec(format!("{path}[{i}]"), "must be finite")),
        None => Ok(()),
    }
}

fn validate_stations(prefix: &str, stations: &BTreeMap<String, GroundStationSpec>) -> Result<()> {
    for (key, gs) in stations {
        let at = join(prefix, &format!("groundstations.{key}"));
        if gs.name.is_empty() {
            return Err(Error::spec(join(&at, "name"), "must be nonempty"));
        }
        if gs.name != *key {
            return Err(Error::spec(
                join(&at, "name"),
                format!("`{}` does not match its map key `{key}`", gs.name),
            ));
        }
        if !(-90.0..=90.0).contains(&gs.lat) {
            return Err(Error::spec(
                join(&at, "lat"),
                format!("{} outside [-90, 90]", gs.lat),
            ));
        }
        if !(-180.0..=180.0).contains(&gs.lon) {
            return Err(Error::spec(
                join(&at, "lon"),
                format!("{} outside [-180, 180]", gs.lon),
            ));
        }
        if !(gs.alt.is_finite() && gs.alt >= 0.0) {
            return Err(Error::spec(
                join(&at, "alt"),
                format!("{} must be finite and >= 0", gs.alt),
            ));
        }
    }
    Ok(())
}

impl CubesatSpec {
    pub fn validate(&self, prefix: &str) -> Result<()> {
        if self.name.is_empty() {
            return Err(Error::spec(join(prefix, "name"), "must be nonempty"));
        }
        validate_stations(prefix, &self.groundstations)?;
        positive(join(prefix, "dry_mass"), self.dry_mass)?;
        positive(join(prefix, "specific_impulse"), self.specific_impulse)?;
        finite_all(
            join(prefix, "initial_orbit_state"),
            &self.initial_orbit_state,
        )?;
        if let Some(att) = &self.attitude {
            AttitudeDynamics::new(att.inertia_kg_m2, 1.0)
                .map_err(|e| Error::spec(join(prefix, "attitude.inertia_kg_m2"), e.to_string()))?;
        }
        if let Err((field, reason)) = self.link.validate() {
            return Err(Error::spec(join(prefix, &format!("link.{field}")), reason));
        }
        Ok(())
    }

    pub fn initial_state(&self) -> StateVec6 {
        StateVec6::from_column_slice(&self.initial_orbit_state)
    }
}

impl VirtualTelescopeSpec {
    pub fn validate(&self, prefix: &str) -> Result<()> {
        validate_stations(prefix, &self.groundstations)?;
        for (field, sat) in [
            ("optics_cubesat", &self.optics_cubesat),
            ("detector_cubesat", &self.detector_cubesat),
        ] {
            let at = join(prefix, field);
            sat.validate(&at)?;
            if sat.orbit_model != OrbitModel::Relative {
                return Err(Error::spec(
                    join(&at, "orbit_model"),
                    "virtual telescope spacecraft must use the relative orbit model",
                ));
            }
            for (key, gs) in &sat.groundstations {
                if self.groundstations.get(key) != Some(gs) {
                    return Err(Error::spec(
                        join(&at, &format!("groundstations.{key}")),
                        "must also appear, identically, in the telescope's groundstations",
                    ));
                }
            }
        }
        if self.optics_cubesat.name == self.detector_cubesat.name {
            return Err(Error::spec(
                join(prefix, "detector_cubesat.name"),
                "must differ from optics_cubesat.name",
            ));
        }
        positive(join(prefix, "telescope_length_m"), self.telescope_length_m)?;
        positive(
            join(prefix, "telescope_length_tol_mm"),
            self.telescope_length_tol_mm,
        )?;
        positive(
            join(prefix, "telescope_view_halfangle_tol_arcsec"),
            self.telescope_view_halfangle_tol_arcsec,
        )?;
        positive(
            join(prefix, "max_separation_all_phases_km"),
            self.max_separation_all_phases_km,
        )?;
        positive(join(prefix, "mission_duration_s"), self.mission_duration_s)?;
        if self.num_time_steps == 0 {
            return Err(Error::spec(join(prefix, "num_time_steps"), "must be >= 1"));
        }
        finite_all(
            join(prefix, "reference_orbit_initial_state"),
            &self.reference_orbit_initial_state,
        )?;
        let sun = Vec3::from(self.sun_direction);
        if !(sun.iter().all(|v| v.is_finite()) && sun.norm() > 0.0) {
            return Err(Error::spec(
                join(prefix, "sun_direction"),
                "must be finite and nonzero",
            ));
        }
        let mut previous_end = f64::NEG_INFINITY;
        for (i, &[start, end]) in self.observation_windows.iter().enumerate() {
            let at = join(prefix, &format!("observation_windows[{i}]"));
            if !(start.is_finite() && end.is_finite() && start < end) {
                return Err(Error::spec(
                    at,
                    format!("needs start < end, got [{start}, {end}]"),
                ));
            }
            if start < 0.0 || end > self.mission_duration_s {
                return Err(Error::spec(
                    at,
                    format!(
                        "[{start}, {end}] outside the mission [0, {}]",
                        self.mission_duration_s
                    ),
                ));
            }
            if start < previous_end {
                return Err(Error::spec(at, "overlaps or precedes the previous window"));
            }
            previous_end = end;
        }
        let opt = &self.optimizer;
        positive(join(prefix, "optimizer.max_thrust_n"), opt.max_thrust_n)?;
        positive(join(prefix, "optimizer.ks_rho"), opt.ks_rho)?;
        positive(
            join(prefix, "optimizer.smoothing_epsilon_n"),
            opt.smoothing_epsilon_n,
        )?;
        Ok(())
    }

    pub fn grid(&self) -> Result<TimeGrid> {
        TimeGrid::new(
            0.0,
            self.mission_duration_s / self.num_time_steps as f64,
            self.num_time_steps,
        )
    }

    pub fn requirements(&self) -> TelescopeRequirements {
        TelescopeRequirements {
            length_m: self.telescope_length_m,
            length_tol_m: self.telescope_length_tol_mm * 1e-3,
            halfangle_rad: (self.telescope_view_halfangle_tol_arcsec / 3600.0).to_radians(),
            max_separation_km: self.max_separation_all_phases_km,
            windows: self
                .observation_windows
                .iter()
                .map(|w| (w[0], w[1]))
                .collect(),
            sun_direction: Vec3::from(self.sun_direction).normalize(),
        }
    }
}

/// Formation requirements in solver units (m, rad, km, s).
#[derive(Debug, Clone, PartialEq)]
pub struct TelescopeRequirements {
    pub length_m: f64,
    pub length_tol_m: f64,
    pub halfangle_rad: f64,
    pub max_separation_km: f64,
    pub windows: Vec<(f64, f64)>,
    pub sun_direction: Vec3,
}

impl TelescopeRequirements {
    /// Whether `t` lies in a closed observation window.
    pub fn in_window(&self, t: f64) -> bool {
        self.windows.iter().any(|&(a, b)| a <= t && t <= b)
    }
}

impl MissionSpec {
    pub fn validate(&self) -> Result<()> {
        match self {
            MissionSpec::Cubesat(c) => c.validate("cubesat"),
            MissionSpec::VirtualTelescope(v) => v.validate("virtual_telescope"),
        }
    }
}

/// Parses and validates a mission document.
pub fn parse_mission(text: &str) -> Result<MissionSpec> {
    let de = &mut serde_json::Deserializer::from_str(text);
    let doc: MissionDocument = serde_path_to_error::deserialize(de).map_err(|e| {
        let path = e.path().to_string();
        let path = if path == "." {
            "(root)".to_string()
        } else {
            path
        };
        Error::spec(path, e.into_inner().to_string())
    })?;
    if doc.format_version != FORMAT_VERSION {
        return Err(Error::spec(
            "format_version",
            format!(
                "unsupported version {}, expected {FORMAT_VERSION}",
                doc.format_version
            ),
        ));
    }
    let spec = match (doc.cubesat, doc.virtual_telescope) {
        (Some(c), None) => MissionSpec::Cubesat(c),
        (None, Some(v)) => MissionSpec::VirtualTelescope(v),
        _ => {
            return Err(Error::spec(
                "(root)",
                "needs exactly one of `cubesat` or `virtual_telescope`",
            ))
        }
    };
    spec.validate()?;
    Ok(spec)
}

pub fn load_mission(path: &Path) -> Result<MissionSpec> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_mission(&text).map_err(|e| match e {
        Error::Spec {
            path: field,
            message,
        } => Error::Spec {
            path: format!("{}: {field}", path.display()),
            message,
        },
        other => other,
    })
}

/// Canonical JSON: fixed field order, sorted maps, every default written out,
/// shortest round-trip float formatting.
pub fn spec_roundtrip(spec: &MissionSpec) -> String {
    let doc = match spec {
        MissionSpec::Cubesat(c) => MissionDocument {
            format_version: FORMAT_VERSION,
            cubesat: Some(c.clone()),
            virtual_telescope: None,
        },
        MissionSpec::VirtualTelescope(v) => MissionDocument {
            format_version: FORMAT_VERSION,
            cubesat: None,
            virtual_telescope: Some(v.clone()),
        },
    };
    let mut text = serde_json::to_string_pretty(&doc).expect("spec serializes");
    text.push('\n');
    text
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord)]
pub enum Discipline {
    Orbit { cubesat: String },
    Attitude { cubesat: String },
    Comm { cubesat: String, station: String },
    Telescope,
}

#[derive(Debug, Clone)]
pub struct SpacecraftModel {
    pub name: String,
    pub dry_mass: f64,
    pub specific_impulse: f64,
    /// Offset from the reference orbit at mission start.
    pub initial_offset: StateVec6,
    pub attitude: Option<AttitudeDynamics>,
    pub stations: Vec<GroundStationSpec>,
    pub link: LinkParameters,
}

/// An assembled virtual-telescope mission: the precomputed reference orbit,
/// the optics (index 0) and detector (index 1) spacecraft, and the formation
/// requirements.
#[derive(Debug, Clone)]
pub struct MissionModel {
    pub constants: PhysicalConstants,
    pub grid: TimeGrid,
    pub reference: ReferenceOrbit,
    pub spacecraft: [SpacecraftModel; 2],
    pub requirements: TelescopeRequirements,
    pub optimizer: OptimizerSettings,
}

impl MissionModel {
    pub fn relative_system(&self, index: usize) -> Result<RelativeOrbitDynamics<'_>> {
        let sc = &self.spacecraft[index];
        make_relative_system(
            &self.reference,
            self.constants,
            sc.dry_mass,
            sc.specific_impulse,
        )
    }

    /// Active disciplines in a fixed order.
    pub fn disciplines(&self) -> Vec<Discipline> {
        let mut out = Vec::new();
        for sc in &self.spacecraft {
            out.push(Discipline::Orbit {
                cubesat: sc.name.clone(),
            });
            if sc.attitude.is_some() {
                out.push(Discipline::Attitude {
                    cubesat: sc.name.clone(),
                });
            }
            for gs in &sc.stations {
                out.push(Discipline::Comm {
                    cubesat: sc.name.clone(),
                    station: gs.name.clone(),
                });
            }
        }
        out.push(Discipline::Telescope);
        out
    }
}

/// Mean motion of the orbit through `state`, from its vis-viva semi-major
/// axis.
pub fn mean_motion(constants: &PhysicalConstants, state: &StateVec6) -> Result<f64> {
    let r = state.fixed_rows::<3>(0).norm();
    let v2 = state.fixed_rows::<3>(3).norm_squared();
    let inv_a = 2.0 / r - v2 / constants.mu;
    if !(inv_a > 0.0) {
        return Err(Error::invalid("orbit", "state is not on a bound orbit"));
    }
    Ok((constants.mu * inv_a.powi(3)).sqrt())
}

fn spacecraft_model(sat: &CubesatSpec, orbit_rate: f64) -> Result<SpacecraftModel> {
    Ok(SpacecraftModel {
        name: sat.name.clone(),
        dry_mass: sat.dry_mass,
        specific_impulse: sat.specific_impulse,
        initial_offset: sat.initial_state(),
        attitude: sat
            .attitude
            .as_ref()
            .map(|a| AttitudeDynamics::new(a.inertia_kg_m2, orbit_rate))
            .transpose()?,
        stations: sat.groundstations.values().cloned().collect(),
        link: sat.link,
    })
}

/// Builds the mission model, precomputing (or loading) the reference orbit
/// over `grid`.
pub fn assemble(
    spec: &VirtualTelescopeSpec,
    constants: &PhysicalConstants,
    grid: &TimeGrid,
    cache_dir: Option<&Path>,
) -> Result<MissionModel> {
    spec.validate("virtual_telescope")?;
    let x0 = StateVec6::from_column_slice(&spec.reference_orbit_initial_state);
    let reference = precompute_reference(constants, &x0, grid, cache_dir)?;
    let orbit_rate = mean_motion(constants, &x0)?;
    Ok(MissionModel {
        constants: *constants,
        grid: *grid,
        reference,
        spacecraft: [
            spacecraft_model(&spec.optics_cubesat, orbit_rate)?,
            spacecraft_model(&spec.detector_cubesat, orbit_rate)?,
        ],
        requirements: spec.requirements(),
        optimizer: spec.optimizer.clone(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cubesat_json(name: &str) -> String {
        format!(
            r#"{{"name": "{name}", "groundstations": {{}}, "orbit_model": "relative",
               "attitude": null, "dry_mass": 1.3,
               "initial_orbit_state": [0.02, 0.001, -0.003, 0.0, 0.0, 0.0],
               "specific_impulse": 47.0}}"#
        )
    }

    #[test]
    fn cubesat_defaults_materialize() {
        let text = format!(
            r#"{{"format_version": 1, "cubesat": {}}}"#,
            cubesat_json("optics")
        );
        let spec = parse_mission(&text).unwrap();
        let canonical = spec_roundtrip(&spec);
        assert!(canonical.contains("\"dry_mass\": 1.3,"));
        assert!(canonical.contains("\"link\""));
        assert!(canonical.contains("\"eta_p\": 0.3"));
        assert_eq!(
            spec_roundtrip(&parse_mission(&canonical).unwrap()),
            canonical
        );
    }

    #[test]
    fn errors_name_paths() {
        let bad = cubesat_json("a").replace("\"dry_mass\": 1.3", "\"dry_mas\": 1.3");
        let err =
            parse_mission(&format!(r#"{{"format_version": 1, "cubesat": {bad}}}"#)).unwrap_err();
        assert!(err.to_string().contains("dry_mas"), "{err}");
        let bad = cubesat_json("a").replace("1.3", "-1.0");
        let err =
            parse_mission(&format!(r#"{{"format_version": 1, "cubesat": {bad}}}"#)).unwrap_err();
        assert!(err.to_string().starts_with("cubesat.dry_mass"), "{err}");
        let err = parse_mission(r#"{"format_version": 2}"#).unwrap_err();
        assert!(err.to_string().starts_with("format_version"));
        let err = parse_mission(r#"{"format_version": 1}"#).unwrap_err();
        assert!(err.to_string().starts_with("(root)"));
    }

    #[test]
    fn windows_are_checked() {
        let spec = VirtualTelescopeSpec {
            optics_cubesat: serde_json::from_str(&cubesat_json("optics")).unwrap(),
            detector_cubesat: serde_json::from_str(&cubesat_json("detector")).unwrap(),
            groundstations: BTreeMap::new(),
            telescope_length_m: 40.0,
            telescope_length_tol_mm: 0.15,
            telescope_view_halfangle_tol_arcsec: 90.0,
            max_separation_all_phases_km: 5.0,
            observation_windows: vec![[100.0, 200.0], [150.0, 300.0]],
            reference_orbit_initial_state: [7000.0, 0.0, 0.0, 0.0, 7.5, 0.0],
            sun_direction: [0.0, 1.0, 0.0],
            mission_duration_s: 1000.0,
            num_time_steps: 100,
            optimizer: OptimizerSettings::default(),
        };
        let err = spec.validate("vt").unwrap_err();
        assert!(
            err.to_string().starts_with("vt.observation_windows[1]"),
            "{err}"
        );
        let ok = VirtualTelescopeSpec {
            observation_windows: vec![[100.0, 200.0]],
            ..spec
        };
        ok.validate("vt").unwrap();
        let r = ok.requirements();
        assert!((r.halfangle_rad - 90.0 / 206_264.806_247_096_36).abs() < 1e-15);
        assert_eq!(r.length_tol_m, 0.15e-3);
        assert!(r.in_window(100.0) && r.in_window(200.0) && !r.in_window(200.5));
    }
}
