//! Gravity-gradient attitude equations written component by component.
//!
//! State layout: `ω (3)`, `C3 = (C31, C32, C33)`, `C1 = (C11, C12, C13)`.

pub fn oracle_attitude_rhs(inertia: [f64; 3], orbit_rate: f64, s: &[f64; 9]) -> [f64; 9] {
    let [i1, i2, i3] = inertia;
    let (kx, ky, kz) = ((i2 - i3) / i1, (i3 - i1) / i2, (i1 - i2) / i3);
    let (wx, wy, wz) = (s[0], s[1], s[2]);
    let (c31, c32, c33) = (s[3], s[4], s[5]);
    let (c11, c12, c13) = (s[6], s[7], s[8]);
    let n2 = orbit_rate * orbit_rate;
    // C2 = C3 × C1.
    let c21 = c32 * c13 - c33 * c12;
    let c22 = c33 * c11 - c31 * c13;
    let c23 = c31 * c12 - c32 * c11;
    [
        kx * (wy * wz - 3.0 * n2 * c12 * c13),
        ky * (wz * wx - 3.0 * n2 * c13 * c11),
        kz * (wx * wy - 3.0 * n2 * c11 * c12),
        c32 * wz - c33 * wy,
        c33 * wx - c31 * wz,
        c31 * wy - c32 * wx,
        c12 * wz - c13 * wy + orbit_rate * c21,
        c13 * wx - c11 * wz + orbit_rate * c22,
        c11 * wy - c12 * wx + orbit_rate * c23,
    ]
}
