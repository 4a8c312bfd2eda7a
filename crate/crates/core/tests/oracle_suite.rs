mod oracles;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use taloskit::astro::{standard_earth_constants, Vec3};
use taloskit::gravity::zonal_gravity_accel;
use taloskit::illumination::{ray_trace_illumination, MeshBuilder};

use oracles::fd::{oracle_fd_directional, oracle_fd_gradient};
use oracles::gravity::{oracle_gravity, Zonal, EARTH};
use oracles::shadow::{oracle_shadow_geometry, FlatRect};
use oracles::OracleResult;

fn norm(v: [f64; 3]) -> f64 {
    (v[0] * v[0] + v[1] * v[1] + v[2] * v[2]).sqrt()
}

#[test]
fn oracle_constants_match_toolkit() {
    let c = standard_earth_constants();
    assert_eq!(
        [c.mu, c.re, c.j2, c.j3, c.j4],
        [EARTH.mu, EARTH.re, EARTH.j2, EARTH.j3, EARTH.j4]
    );
}

#[test]
fn gravity_matches_main_at_random_radii() {
    let c = standard_earth_constants();
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let mut worst: f64 = 0.0;
    for _ in 0..1000 {
        let dir = Vec3::new(
            rng.random_range(-1.0..1.0),
            rng.random_range(-1.0..1.0),
            rng.random_range(-1.0..1.0),
        );
        let r = dir.normalize() * rng.random_range(6600.0..42_000.0);
        let main = zonal_gravity_accel(&c, &r).unwrap();
        let oracle = oracle_gravity(&EARTH, [r.x, r.y, r.z]);
        let diff = [main.x - oracle[0], main.y - oracle[1], main.z - oracle[2]];
        worst = worst.max(norm(diff) / norm(oracle));
    }
    let result = OracleResult::new("zonal gravity, 1000 radii", worst, 1e-14);
    assert!(result.pass, "{result}");
}

#[test]
fn gravity_point_mass_reduction() {
    let point = Zonal {
        j2: 0.0,
        j3: 0.0,
        j4: 0.0,
        ..EARTH
    };
    let r = [7000.0, -1200.0, 3100.0];
    let a = oracle_gravity(&point, r);
    let rn = norm(r);
    for i in 0..3 {
        assert!((a[i] + point.mu * r[i] / rn.powi(3)).abs() <= 1e-15 * norm(a));
    }
}

#[test]
fn equatorial_z_acceleration_vanishes_only_without_j3() {
    let r = [4000.0, 5800.0, 0.0];
    assert_ne!(oracle_gravity(&EARTH, r)[2], 0.0);
    let no_j3 = Zonal { j3: 0.0, ..EARTH };
    assert_eq!(oracle_gravity(&no_j3, r)[2], 0.0);
    let c = standard_earth_constants();
    let main = zonal_gravity_accel(&c, &Vec3::new(r[0], r[1], r[2])).unwrap();
    assert!((main.z - oracle_gravity(&EARTH, r)[2]).abs() <= 1e-14 * main.z.abs());
}

#[test]
fn fd_is_exact_on_linear_and_second_order_on_quadratic() {
    let linear = |x: &[f64]| 3.0 * x[0] - 2.0 * x[1] + 0.5;
    let g = oracle_fd_gradient(linear, &[1.0, 2.0], 1e-6);
    assert!((g[0] - 3.0).abs() < 1e-9 && (g[1] + 2.0).abs() < 1e-9);
    let quadratic = |x: &[f64]| x[0] * x[0] + 3.0 * x[0] * x[1];
    let x = [1.5, -0.5];
    let g = oracle_fd_gradient(quadratic, &x, 1e-5);
    assert!((g[0] - (2.0 * x[0] + 3.0 * x[1])).abs() < 1e-8);
    assert!((g[1] - 3.0 * x[0]).abs() < 1e-8);
    let d = oracle_fd_directional(quadratic, &x, &[1.0, 1.0], 1e-5);
    assert!((d - (2.0 * x[0] + 3.0 * x[1] + 3.0 * x[0])).abs() < 1e-8);
}

fn plate() -> FlatRect {
    FlatRect {
        x: (0.0, 1.0),
        y: (0.0, 1.0),
        z: 0.0,
    }
}

fn quad(b: &mut MeshBuilder, r: &FlatRect, panel: bool) {
    let v = |x, y| Vec3::new(x, y, r.z);
    b.quad(
        v(r.x.0, r.y.0),
        v(r.x.1, r.y.0),
        v(r.x.1, r.y.1),
        v(r.x.0, r.y.1),
        panel,
    );
}

/// Ray-traced lit fraction of the plate scene for a sun at (az, el).
fn traced(occluders: &[FlatRect], az: f64, el: f64, spt: usize) -> f64 {
    let mut b = MeshBuilder::new();
    quad(&mut b, &plate(), true);
    for o in occluders {
        quad(&mut b, o, false);
    }
    ray_trace_illumination(&b.build().unwrap(), az, el, spt).unwrap()
}

fn sun(az: f64, el: f64) -> [f64; 3] {
    [el.cos() * az.cos(), el.cos() * az.sin(), el.sin()]
}

#[test]
fn shadow_oracle_basic_scenes() {
    let up = [0.0, 0.0, 1.0];
    assert_eq!(oracle_shadow_geometry(&plate(), &[], up).unwrap(), 1.0);
    let cover = FlatRect {
        x: (-0.5, 1.5),
        y: (-0.5, 1.5),
        z: 1.0,
    };
    assert_eq!(oracle_shadow_geometry(&plate(), &[cover], up).unwrap(), 0.0);
    let half = FlatRect {
        x: (0.0, 0.5),
        y: (0.0, 1.0),
        z: 1.0,
    };
    assert_eq!(oracle_shadow_geometry(&plate(), &[half], up).unwrap(), 0.5);
    // Overlapping occluders are not double counted.
    let half2 = FlatRect {
        x: (0.25, 0.5),
        y: (0.0, 1.0),
        z: 0.5,
    };
    assert_eq!(
        oracle_shadow_geometry(&plate(), &[half, half2], up).unwrap(),
        0.5
    );
    assert_eq!(
        oracle_shadow_geometry(&plate(), &[], [0.0, 0.0, -1.0]).unwrap(),
        0.0
    );
    assert!(oracle_shadow_geometry(&plate(), &[FlatRect { z: -1.0, ..half }], up).is_err());
}

#[test]
fn shadow_oracle_rejects_tilted_input() {
    let tilted = [
        [0.0, 0.0, 0.0],
        [1.0, 0.0, 0.1],
        [1.0, 1.0, 0.1],
        [0.0, 1.0, 0.0],
    ];
    assert!(FlatRect::from_corners(tilted).is_err());
    let rotated = [
        [0.5, 0.0, 0.0],
        [1.0, 0.5, 0.0],
        [0.5, 1.0, 0.0],
        [0.0, 0.5, 0.0],
    ];
    assert!(FlatRect::from_corners(rotated).is_err());
    let ok = [
        [0.0, 0.0, 2.0],
        [1.0, 0.0, 2.0],
        [1.0, 3.0, 2.0],
        [0.0, 3.0, 2.0],
    ];
    assert_eq!(FlatRect::from_corners(ok).unwrap().area(), 3.0);
}

#[test]
fn ray_tracer_matches_shadow_oracle() {
    let spt = 256;
    let bound = 2.0 / (spt as f64).sqrt();
    let scenes: Vec<(Vec<FlatRect>, f64, f64)> = vec![
        (vec![], 0.3, 1.2),
        (
            vec![FlatRect {
                x: (-0.5, 1.5),
                y: (-0.5, 1.5),
                z: 1.0,
            }],
            0.0,
            std::f64::consts::FRAC_PI_2,
        ),
        (
            vec![FlatRect {
                x: (0.0, 0.5),
                y: (0.0, 1.0),
                z: 1.0,
            }],
            0.0,
            std::f64::consts::FRAC_PI_2,
        ),
        (
            vec![FlatRect {
                x: (0.2, 0.7),
                y: (0.1, 0.6),
                z: 0.8,
            }],
            0.7,
            1.0,
        ),
        (
            vec![
                FlatRect {
                    x: (0.0, 0.4),
                    y: (0.0, 1.0),
                    z: 0.5,
                },
                FlatRect {
                    x: (0.3, 0.9),
                    y: (0.5, 0.8),
                    z: 1.5,
                },
            ],
            2.0,
            1.1,
        ),
    ];
    for (occluders, az, el) in scenes {
        let exact = oracle_shadow_geometry(&plate(), &occluders, sun(az, el)).unwrap();
        let got = traced(&occluders, az, el, spt);
        let result = OracleResult::new(
            format!("{} occluders at ({az}, {el})", occluders.len()),
            (got - exact).abs(),
            bound,
        );
        assert!(result.pass, "{result}: traced {got}, exact {exact}");
    }
}

#[test]
fn oracle_files_import_nothing_from_the_toolkit() {
    let dir = std::path::Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/oracles");
    for entry in std::fs::read_dir(&dir).unwrap() {
        let path = entry.unwrap().path();
        let text = std::fs::read_to_string(&path).unwrap();
        for line in text.lines().filter(|l| !l.trim_start().starts_with("//")) {
            assert!(
                !line.contains("taloskit") && !line.contains("crate::"),
                "{}: `{line}`",
                path.display()
            );
        }
    }
}
