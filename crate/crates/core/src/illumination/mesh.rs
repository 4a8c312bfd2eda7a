//! Triangle meshes read from ASCII STL plus a panel-index sidecar.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use crate::astro::Vec3;
use crate::error::{Error, Result};

/// Body-frame triangle mesh (metres) with per-triangle solar-array flags.
#[derive(Debug, Clone, PartialEq)]
pub struct TriangleMesh {
    vertices: Vec<Vec3>,
    triangles: Vec<[usize; 3]>,
    panel: Vec<bool>,
    normals: Vec<Vec3>,
    areas: Vec<f64>,
}

impl TriangleMesh {
    pub fn new(vertices: Vec<Vec3>, triangles: Vec<[usize; 3]>, panel: Vec<bool>) -> Result<Self> {
        if panel.len() != triangles.len() {
            return Err(Error::DimensionMismatch {
                context: "panel flags",
                expected: triangles.len(),
                actual: panel.len(),
            });
        }
        let mut normals = Vec::with_capacity(triangles.len());
        let mut areas = Vec::with_capacity(triangles.len());
        for (index, tri) in triangles.iter().enumerate() {
            if tri.iter().any(|&v| v >= vertices.len()) {
                return Err(Error::Mesh(format!(
                    "triangle {index} references a vertex outside 0..{}",
                    vertices.len()
                )));
            }
            let [a, b, c] = tri.map(|v| vertices[v]);
            if !(a
                .iter()
                .chain(b.iter())
                .chain(c.iter())
                .all(|v| v.is_finite()))
            {
                return Err(Error::Mesh(format!(
                    "triangle {index} has non-finite vertices"
                )));
            }
            let cross = (b - a).cross(&(c - a));
            let area = 0.5 * cross.norm();
            let scale = (b - a).norm_squared().max((c - a).norm_squared());
            if !(area > 1e-14 * scale) || area == 0.0 {
                return Err(Error::DegenerateTriangle { index });
            }
            normals.push(cross.normalize());
            areas.push(area);
        }
        if !panel.iter().any(|&p| p) {
            return Err(Error::Mesh("mesh has no solar-array triangles".into()));
        }
        Ok(Self {
            vertices,
            triangles,
            panel,
            normals,
            areas,
        })
    }

    pub fn vertices(&self) -> &[Vec3] {
        &self.vertices
    }

    pub fn triangles(&self) -> &[[usize; 3]] {
        &self.triangles
    }

    pub fn is_panel(&self, index: usize) -> bool {
        self.panel[index]
    }

    pub fn panel_flags(&self) -> &[bool] {
        &self.panel
    }

    pub fn len(&self) -> usize {
        self.triangles.len()
    }

    pub fn is_empty(&self) -> bool {
        self.triangles.is_empty()
    }

    /// Unit normal from the counter-clockwise winding.
    pub fn normal(&self, index: usize) -> Vec3 {
        self.normals[index]
    }

    pub fn area(&self, index: usize) -> f64 {
        self.areas[index]
    }

    pub fn corners(&self, index: usize) -> [Vec3; 3] {
        self.triangles[index].map(|v| self.vertices[v])
    }

    pub fn total_panel_area(&self) -> f64 {
        self.areas
            .iter()
            .zip(&self.panel)
            .filter(|(_, &p)| p)
            .map(|(a, _)| a)
            .sum()
    }

    /// Copy of the mesh without its non-panel triangles.
    pub fn panels_only(&self) -> Result<Self> {
        let keep: Vec<usize> = (0..self.len()).filter(|&i| self.panel[i]).collect();
        Self::new(
            self.vertices.clone(),
            keep.iter().map(|&i| self.triangles[i]).collect(),
            vec![true; keep.len()],
        )
    }

    /// Parses an ASCII STL document. Facet normals in the file are ignored;
    /// orientation comes from vertex winding.
    pub fn from_stl_ascii(text: &str, panel_indices: &[usize]) -> Result<Self> {
        let mut vertices = Vec::new();
        let mut triangles = Vec::new();
        let mut pending: Vec<usize> = Vec::with_capacity(3);
        let mut saw_solid = false;
        for (lineno, line) in text.lines().enumerate() {
            let mut words = line.split_whitespace();
            match words.next() {
                Some("solid") => saw_solid = true,
                Some("vertex") => {
                    let coords: Vec<f64> = words
                        .map(|w| w.parse::<f64>())
                        .collect::<std::result::Result<_, _>>()
                        .map_err(|e| Error::Mesh(format!("line {}: {e}", lineno + 1)))?;
                    if coords.len() != 3 {
                        return Err(Error::Mesh(format!(
                            "line {}: vertex needs 3 coordinates",
                            lineno + 1
                        )));
                    }
                    pending.push(vertices.len());
                    vertices.push(Vec3::new(coords[0], coords[1], coords[2]));
                }
                Some("endloop") => {
                    if pending.len() != 3 {
                        return Err(Error::Mesh(format!(
                            "line {}: facet loop has {} vertices, expected 3",
                            lineno + 1,
                            pending.len()
                        )));
                    }
                    triangles.push([pending[0], pending[1], pending[2]]);
                    pending.clear();
                }
                Some("facet" | "outer" | "endfacet" | "endsolid") | None => {}
                Some(other) => {
                    return Err(Error::Mesh(format!(
                        "line {}: unexpected keyword `{other}`",
                        lineno + 1
                    )))
                }
            }
        }
        if !saw_solid {
            return Err(Error::Mesh(
                "not an ASCII STL document (missing `solid`)".into(),
            ));
        }
        let mut panel = vec![false; triangles.len()];
        for &i in panel_indices {
            if i >= triangles.len() {
                return Err(Error::Mesh(format!(
                    "panel index {i} out of range for {} triangles",
                    triangles.len()
                )));
            }
            panel[i] = true;
        }
        Self::new(vertices, triangles, panel)
    }

    /// Loads an STL file and its sidecar of panel triangle indices.
    pub fn load(stl: &Path, panels: &Path) -> Result<Self> {
        let text = fs::read_to_string(stl).map_err(|e| Error::io(stl, e))?;
        let sidecar = fs::read_to_string(panels).map_err(|e| Error::io(panels, e))?;
        let indices = parse_panel_sidecar(&sidecar)?;
        Self::from_stl_ascii(&text, &indices)
    }

    pub fn to_stl_ascii(&self, name: &str) -> String {
        let mut out = format!("solid {name}\n");
        for i in 0..self.len() {
            let n = self.normal(i);
            let _ = writeln!(out, "  facet normal {} {} {}", n.x, n.y, n.z);
            out.push_str("    outer loop\n");
            for v in self.corners(i) {
                let _ = writeln!(out, "      vertex {} {} {}", v.x, v.y, v.z);
            }
            out.push_str("    endloop\n  endfacet\n");
        }
        let _ = writeln!(out, "endsolid {name}");
        out
    }

    pub fn panel_sidecar(&self) -> String {
        (0..self.len())
            .filter(|&i| self.panel[i])
            .map(|i| format!("{i}\n"))
            .collect()
    }
}

/// One triangle index per line; blank lines are skipped.
pub fn parse_panel_sidecar(text: &str) -> Result<Vec<usize>> {
    text.lines()
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty())
        .map(|(n, l)| {
            l.trim()
                .parse::<usize>()
                .map_err(|e| Error::Mesh(format!("panel sidecar line {}: {e}", n + 1)))
        })
        .collect()
}

/// Builder for meshes made of flat quads and boxes.
#[derive(Debug, Default, Clone)]
pub struct MeshBuilder {
    vertices: Vec<Vec3>,
    triangles: Vec<[usize; 3]>,
    panel: Vec<bool>,
}

impl MeshBuilder {
    pub fn new() -> Self {
        Self::default()
    }

    /// Quad `a, b, c, d` (counter-clockwise seen from the front) as two
    /// triangles.
    pub fn quad(&mut self, a: Vec3, b: Vec3, c: Vec3, d: Vec3, panel: bool) -> &mut Self {
        let base = self.vertices.len();
        self.vertices.extend([a, b, c, d]);
        self.triangles.push([base, base + 1, base + 2]);
        self.triangles.push([base, base + 2, base + 3]);
        self.panel.extend([panel, panel]);
        self
    }

    /// Axis-aligned box with outward-facing walls; `panel_faces` flags the
    /// faces in the order -x, +x, -y, +y, -z, +z.
    pub fn cuboid(&mut self, min: Vec3, max: Vec3, panel_faces: [bool; 6]) -> &mut Self {
        let p = |x: f64, y: f64, z: f64| Vec3::new(x, y, z);
        let (x0, y0, z0) = (min.x, min.y, min.z);
        let (x1, y1, z1) = (max.x, max.y, max.z);
        self.quad(
            p(x0, y0, z0),
            p(x0, y0, z1),
            p(x0, y1, z1),
            p(x0, y1, z0),
            panel_faces[0],
        );
        self.quad(
            p(x1, y0, z0),
            p(x1, y1, z0),
            p(x1, y1, z1),
            p(x1, y0, z1),
            panel_faces[1],
        );
        self.quad(
            p(x0, y0, z0),
            p(x1, y0, z0),
            p(x1, y0, z1),
            p(x0, y0, z1),
            panel_faces[2],
        );
        self.quad(
            p(x0, y1, z0),
            p(x0, y1, z1),
            p(x1, y1, z1),
            p(x1, y1, z0),
            panel_faces[3],
        );
        self.quad(
            p(x0, y0, z0),
            p(x0, y1, z0),
            p(x1, y1, z0),
            p(x1, y0, z0),
            panel_faces[4],
        );
        self.quad(
            p(x0, y0, z1),
            p(x1, y0, z1),
            p(x1, y1, z1),
            p(x0, y1, z1),
            panel_faces[5],
        );
        self
    }

    pub fn build(&self) -> Result<TriangleMesh> {
        TriangleMesh::new(
            self.vertices.clone(),
            self.triangles.clone(),
            self.panel.clone(),
        )
    }
}

/// The example spacecraft: a 3U body with arrays on its four long faces and
/// its +z end, plus four single-sided array wings hinged at the +z edges and
/// canted 60° outward. Each wing has a 2 mm non-array substrate behind it.
pub fn example_cubesat() -> TriangleMesh {
    let v = Vec3::new;
    let quarter_turn = |p: Vec3, k: usize| {
        let (s, c) = (std::f64::consts::FRAC_PI_2 * k as f64).sin_cos();
        v(c * p.x - s * p.y, s * p.x + c * p.y, p.z)
    };
    let mut b = MeshBuilder::new();
    b.cuboid(
        v(-0.05, -0.05, -0.15),
        v(0.05, 0.05, 0.15),
        [true, true, true, true, false, true],
    );
    let (sc, cc) = 60f64.to_radians().sin_cos();
    let span = v(sc, 0.0, -cc) * 0.3;
    let face = v(cc, 0.0, sc) * 0.002;
    for k in 0..4 {
        let a = v(0.05, -0.05, 0.15);
        let d = v(0.05, 0.05, 0.15);
        let [a, d, span, face] = [a, d, span, face].map(|p| quarter_turn(p, k));
        b.quad(a + face, a + span + face, d + span + face, d + face, true);
        b.quad(a, d, d + span, a + span, false);
    }
    b.build().expect("example mesh is valid")
}
