//! Shadow-aware sampling of illuminated solar-array area.

use std::f64::consts::{FRAC_PI_2, TAU};
use std::fs;
use std::path::Path;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::mesh::TriangleMesh;
use crate::astro::Vec3;
use crate::error::{Error, Result};

/// Offset applied along the sun direction before casting a shadow ray.
pub const RAY_OFFSET_M: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct IlluminationSample {
    pub azimuth: f64,
    pub elevation: f64,
    pub illuminated_fraction: f64,
}

/// Body-frame unit vector toward the sun.
pub fn sun_direction(azimuth: f64, elevation: f64) -> Vec3 {
    let (sa, ca) = azimuth.sin_cos();
    let (se, ce) = elevation.sin_cos();
    Vec3::new(ce * ca, ce * sa, se)
}

/// Watertight ray/triangle test. Returns the hit distance for `t > 0`.
pub fn intersect_ray_triangle(origin: &Vec3, dir: &Vec3, tri: &[Vec3; 3]) -> Option<f64> {
    let kz = dir.iamax();
    let kx = (kz + 1) % 3;
    let ky = (kx + 1) % 3;
    let d = Vec3::new(dir[kx], dir[ky], dir[kz]);
    let sx = -d.x / d.z;
    let sy = -d.y / d.z;
    let sz = 1.0 / d.z;
    let shear = |p: &Vec3| {
        let q = p - origin;
        let q = Vec3::new(q[kx], q[ky], q[kz]);
        Vec3::new(q.x + sx * q.z, q.y + sy * q.z, q.z)
    };
    let p0 = shear(&tri[0]);
    let p1 = shear(&tri[1]);
    let p2 = shear(&tri[2]);
    let e0 = p1.x * p2.y - p1.y * p2.x;
    let e1 = p2.x * p0.y - p2.y * p0.x;
    let e2 = p0.x * p1.y - p0.y * p1.x;
    if (e0 < 0.0 || e1 < 0.0 || e2 < 0.0) && (e0 > 0.0 || e1 > 0.0 || e2 > 0.0) {
        return None;
    }
    let det = e0 + e1 + e2;
    if det == 0.0 {
        return None;
    }
    let t_scaled = (e0 * p0.z + e1 * p1.z + e2 * p2.z) * sz;
    if (det < 0.0 && t_scaled >= 0.0) || (det > 0.0 && t_scaled <= 0.0) {
        return None;
    }
    Some(t_scaled / det)
}

/// Barycentric weights of `n` low-discrepancy points in a triangle, built
/// from base-4 digit-driven recursive subdivision. When `n` is a power of 4
/// every sub-triangle at that depth holds exactly one point.
pub fn triangle_sample_weights(n: usize) -> Vec<[f64; 3]> {
    let mut levels = 0;
    while 4usize.pow(levels) < n {
        levels += 1;
    }
    (0..n)
        .map(|i| {
            let mut a = [1.0, 0.0, 0.0];
            let mut b = [0.0, 1.0, 0.0];
            let mut c = [0.0, 0.0, 1.0];
            let mid = |p: &[f64; 3], q: &[f64; 3]| {
                [
                    0.5 * (p[0] + q[0]),
                    0.5 * (p[1] + q[1]),
                    0.5 * (p[2] + q[2]),
                ]
            };
            let mut digits = i;
            for _ in 0..levels {
                let (ab, bc, ca) = (mid(&a, &b), mid(&b, &c), mid(&c, &a));
                (a, b, c) = match digits % 4 {
                    0 => (bc, ca, ab),
                    1 => (a, ab, ca),
                    2 => (ab, b, bc),
                    _ => (ca, bc, c),
                };
                digits /= 4;
            }
            [
                (a[0] + b[0] + c[0]) / 3.0,
                (a[1] + b[1] + c[1]) / 3.0,
                (a[2] + b[2] + c[2]) / 3.0,
            ]
        })
        .collect()
}

/// Area-weighted fraction of solar-array area lit by a sun at infinity.
pub fn ray_trace_illumination(
    mesh: &TriangleMesh,
    azimuth: f64,
    elevation: f64,
    samples_per_triangle: usize,
) -> Result<f64> {
    if samples_per_triangle == 0 {
        return Err(Error::invalid("samples_per_triangle", "must be >= 1"));
    }
    if !(azimuth.is_finite() && elevation.is_finite()) {
        return Err(Error::invalid("sun angle", "must be finite"));
    }
    let weights = triangle_sample_weights(samples_per_triangle);
    Ok(trace_with_weights(
        mesh,
        &sun_direction(azimuth, elevation),
        &weights,
    ))
}

fn trace_with_weights(mesh: &TriangleMesh, sun: &Vec3, weights: &[[f64; 3]]) -> f64 {
    let mut lit_area = 0.0;
    let total = mesh.total_panel_area();
    for i in (0..mesh.len()).filter(|&i| mesh.is_panel(i)) {
        if mesh.normal(i).dot(sun) <= 0.0 {
            continue;
        }
        let [a, b, c] = mesh.corners(i);
        let lit = weights
            .iter()
            .filter(|w| {
                let origin = a * w[0] + b * w[1] + c * w[2] + RAY_OFFSET_M * sun;
                !(0..mesh.len())
                    .filter(|&j| j != i)
                    .any(|j| intersect_ray_triangle(&origin, sun, &mesh.corners(j)).is_some())
            })
            .count();
        lit_area += mesh.area(i) * lit as f64 / weights.len() as f64;
    }
    (lit_area / total).clamp(0.0, 1.0)
}

fn check_grid(n_az: usize, n_el: usize) -> Result<()> {
    if n_az < 4 {
        return Err(Error::invalid("n_az", format!("must be >= 4, got {n_az}")));
    }
    if n_el < 3 {
        return Err(Error::invalid("n_el", format!("must be >= 3, got {n_el}")));
    }
    Ok(())
}

fn trace_grid(
    mesh: &TriangleMesh,
    angles: Vec<(f64, f64)>,
    samples_per_triangle: usize,
) -> Result<Vec<IlluminationSample>> {
    if samples_per_triangle == 0 {
        return Err(Error::invalid("samples_per_triangle", "must be >= 1"));
    }
    let weights = triangle_sample_weights(samples_per_triangle);
    Ok(angles
        .into_par_iter()
        .map(|(azimuth, elevation)| IlluminationSample {
            azimuth,
            elevation,
            illuminated_fraction: trace_with_weights(
                mesh,
                &sun_direction(azimuth, elevation),
                &weights,
            ),
        })
        .collect())
}

/// Uniform `n_az × n_el` grid over `[0, 2π) × [−π/2, π/2]`, azimuth-major.
pub fn generate_training_grid(
    mesh: &TriangleMesh,
    n_az: usize,
    n_el: usize,
    samples_per_triangle: usize,
) -> Result<Vec<IlluminationSample>> {
    check_grid(n_az, n_el)?;
    let angles = (0..n_az)
        .flat_map(|i| {
            (0..n_el).map(move |j| {
                (
                    TAU * i as f64 / n_az as f64,
                    -FRAC_PI_2 + std::f64::consts::PI * j as f64 / (n_el - 1) as f64,
                )
            })
        })
        .collect();
    trace_grid(mesh, angles, samples_per_triangle)
}

/// Cell-centred `n_az × n_el` grid, so no point coincides with a
/// training-grid point and elevations stay off the poles.
pub fn generate_offset_grid(
    mesh: &TriangleMesh,
    n_az: usize,
    n_el: usize,
    samples_per_triangle: usize,
) -> Result<Vec<IlluminationSample>> {
    check_grid(n_az, n_el)?;
    let angles = (0..n_az)
        .flat_map(|i| {
            (0..n_el).map(move |j| {
                (
                    TAU * (i as f64 + 0.5) / n_az as f64,
                    -FRAC_PI_2 + std::f64::consts::PI * (j as f64 + 0.5) / n_el as f64,
                )
            })
        })
        .collect();
    trace_grid(mesh, angles, samples_per_triangle)
}

pub fn samples_to_csv(samples: &[IlluminationSample]) -> String {
    let mut out = String::from("azimuth_rad,elevation_rad,fraction\n");
    for s in samples {
        out.push_str(&format!(
            "{},{},{}\n",
            s.azimuth, s.elevation, s.illuminated_fraction
        ));
    }
    out
}

pub fn write_samples_csv(path: &Path, samples: &[IlluminationSample]) -> Result<()> {
    fs::write(path, samples_to_csv(samples)).map_err(|e| Error::io(path, e))
}
