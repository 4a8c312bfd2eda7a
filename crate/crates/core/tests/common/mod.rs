#![allow(dead_code)]

use std::path::PathBuf;

use taloskit::astro::standard_earth_constants;
use taloskit::mission::{assemble, load_mission, MissionModel, MissionSpec, VirtualTelescopeSpec};

pub fn repo_path(rel: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR"))
        .join("../..")
        .join(rel)
}

pub fn visors_like() -> VirtualTelescopeSpec {
    match load_mission(&repo_path("data/missions/visors_like.json")).unwrap() {
        MissionSpec::VirtualTelescope(vt) => vt,
        other => panic!("expected a virtual telescope mission, got {other:?}"),
    }
}

/// The demo mission shortened to `n` steps over `duration` seconds.
pub fn short_mission(duration: f64, n: usize, windows: Vec<[f64; 2]>) -> VirtualTelescopeSpec {
    VirtualTelescopeSpec {
        mission_duration_s: duration,
        num_time_steps: n,
        observation_windows: windows,
        ..visors_like()
    }
}

pub fn build(spec: &VirtualTelescopeSpec) -> MissionModel {
    let grid = spec.grid().unwrap();
    assemble(spec, &standard_earth_constants(), &grid, None).unwrap()
}
