//! Zonal gravity written out term by term from the printed equation.

#[derive(Debug, Clone, Copy)]
pub struct Zonal {
    pub mu: f64,
    pub re: f64,
    pub j2: f64,
    pub j3: f64,
    pub j4: f64,
}

pub const EARTH: Zonal = Zonal {
    mu: 3.986004418e5,
    re: 6378.137,
    j2: 1.08262668e-3,
    j3: -2.53265648e-6,
    j4: -1.61962159e-6,
};

/// Acceleration in km/s² at position `r` (km).
pub fn oracle_gravity(g: &Zonal, r: [f64; 3]) -> [f64; 3] {
    let [x, y, z] = r;
    let rn = (x * x + y * y + z * z).sqrt();
    let r2 = rn * rn;

    let point = -g.mu / rn.powi(3);

    let c2 = -3.0 * g.mu * g.j2 * g.re.powi(2) / (2.0 * rn.powi(5));
    let j2_r = c2 * (1.0 - 5.0 * z * z / r2);
    let j2_z = c2 * 2.0 * z;

    let c3 = -5.0 * g.mu * g.j3 * g.re.powi(3) / (2.0 * rn.powi(7));
    let j3_r = c3 * (3.0 * z - 7.0 * z.powi(3) / r2);
    // (3 r_z − 3r²/(5 r_z))·r_z, with its limit −3r²/5 on the equator.
    let j3_factor = if z == 0.0 {
        -3.0 * r2 / 5.0
    } else {
        (3.0 * z - 3.0 * r2 / (5.0 * z)) * z
    };
    let j3_z = c3 * j3_factor;

    let c4 = 15.0 * g.mu * g.j4 * g.re.powi(4) / (8.0 * rn.powi(7));
    let j4_r = c4 * (1.0 - 14.0 * z * z / r2 + 21.0 * z.powi(4) / r2.powi(2));
    let j4_z = c4 * (4.0 - 28.0 * z * z / (3.0 * r2)) * z;

    let radial = point + j2_r + j3_r + j4_r;
    [radial * x, radial * y, radial * z + j2_z + j3_z + j4_z]
}
