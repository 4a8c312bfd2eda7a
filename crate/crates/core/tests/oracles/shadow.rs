//! Exact lit fraction of a horizontal plate under horizontal rectangular
//! occluders, by projecting each occluder along the sun direction.

/// Rectangle in the plane `z = const`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FlatRect {
    pub x: (f64, f64),
    pub y: (f64, f64),
    pub z: f64,
}

impl FlatRect {
    /// Accepts four corners of a rectangle parallel to the xy plane with
    /// edges along x and y.
    pub fn from_corners(c: [[f64; 3]; 4]) -> Result<Self, String> {
        let z = c[0][2];
        if c.iter().any(|p| p[2] != z) {
            return Err("rectangle is not parallel to the xy plane".into());
        }
        let xs: Vec<f64> = c.iter().map(|p| p[0]).collect();
        let ys: Vec<f64> = c.iter().map(|p| p[1]).collect();
        let (x0, x1) = (
            xs.iter().copied().fold(f64::INFINITY, f64::min),
            xs.iter().copied().fold(f64::NEG_INFINITY, f64::max),
        );
        let (y0, y1) = (
            ys.iter().copied().fold(f64::INFINITY, f64::min),
            ys.iter().copied().fold(f64::NEG_INFINITY, f64::max),
        );
        let on_corner = |p: &[f64; 3]| (p[0] == x0 || p[0] == x1) && (p[1] == y0 || p[1] == y1);
        if !(x1 > x0 && y1 > y0) || !c.iter().all(on_corner) {
            return Err("corners do not form an axis-aligned rectangle".into());
        }
        Ok(Self {
            x: (x0, x1),
            y: (y0, y1),
            z,
        })
    }

    pub fn area(&self) -> f64 {
        (self.x.1 - self.x.0) * (self.y.1 - self.y.0)
    }
}

fn overlap(a: (f64, f64), b: (f64, f64)) -> Option<(f64, f64)> {
    let lo = a.0.max(b.0);
    let hi = a.1.min(b.1);
    (hi > lo).then_some((lo, hi))
}

/// Rectangle as (x range, y range).
type Extent = ((f64, f64), (f64, f64));

/// Area of a union of rectangles by coordinate compression.
fn union_area(rects: &[Extent]) -> f64 {
    let mut xs: Vec<f64> = rects.iter().flat_map(|r| [r.0 .0, r.0 .1]).collect();
    let mut ys: Vec<f64> = rects.iter().flat_map(|r| [r.1 .0, r.1 .1]).collect();
    xs.sort_by(f64::total_cmp);
    ys.sort_by(f64::total_cmp);
    let mut area = 0.0;
    for wx in xs.windows(2) {
        for wy in ys.windows(2) {
            let (cx, cy) = (0.5 * (wx[0] + wx[1]), 0.5 * (wy[0] + wy[1]));
            let covered = rects
                .iter()
                .any(|r| r.0 .0 <= cx && cx <= r.0 .1 && r.1 .0 <= cy && cy <= r.1 .1);
            if covered {
                area += (wx[1] - wx[0]) * (wy[1] - wy[0]);
            }
        }
    }
    area
}

/// Lit fraction of an upward-facing `plate` for a sun along `sun` (need not
/// be unit). Occluders must lie above the plate.
pub fn oracle_shadow_geometry(
    plate: &FlatRect,
    occluders: &[FlatRect],
    sun: [f64; 3],
) -> Result<f64, String> {
    if sun[2] <= 0.0 {
        return Ok(0.0);
    }
    let mut shadows = Vec::new();
    for o in occluders {
        let height = o.z - plate.z;
        if height <= 0.0 {
            return Err("occluder is not above the plate".into());
        }
        let (dx, dy) = (-height * sun[0] / sun[2], -height * sun[1] / sun[2]);
        let shadow = ((o.x.0 + dx, o.x.1 + dx), (o.y.0 + dy, o.y.1 + dy));
        if let (Some(x), Some(y)) = (overlap(shadow.0, plate.x), overlap(shadow.1, plate.y)) {
            shadows.push((x, y));
        }
    }
    Ok(1.0 - union_area(&shadows) / plate.area())
}
