//! Solar-array illumination: ray tracing over a triangle mesh and a smooth
//! surrogate of the lit fraction as a function of sun azimuth and elevation.
//!
//! The sun direction in the body frame is
//! `(cos el · cos az, cos el · sin az, sin el)`.

pub mod mesh;
pub mod raytrace;
pub mod surrogate;

pub use mesh::{example_cubesat, parse_panel_sidecar, MeshBuilder, TriangleMesh};
pub use raytrace::{
    generate_offset_grid, generate_training_grid, intersect_ray_triangle, ray_trace_illumination,
    samples_to_csv, sun_direction, triangle_sample_weights, write_samples_csv, IlluminationSample,
};
pub use surrogate::{fit_surrogate, surrogate_eval, surrogate_rmse, IlluminationSurrogate};
