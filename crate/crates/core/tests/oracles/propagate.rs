//! Fixed-step RK4 of unthrusted absolute motion under the oracle gravity.

use super::gravity::{oracle_gravity, Zonal};

fn deriv(g: &Zonal, s: &[f64; 6]) -> [f64; 6] {
    let a = oracle_gravity(g, [s[0], s[1], s[2]]);
    [s[3], s[4], s[5], a[0], a[1], a[2]]
}

fn offset(s: &[f64; 6], k: &[f64; 6], h: f64) -> [f64; 6] {
    std::array::from_fn(|i| s[i] + h * k[i])
}

/// States at `t = i·dt` for `i` in `0..=n`.
pub fn oracle_propagate(g: &Zonal, x0: [f64; 6], dt: f64, n: usize) -> Vec<[f64; 6]> {
    let mut out = Vec::with_capacity(n + 1);
    let mut s = x0;
    out.push(s);
    for _ in 0..n {
        let k1 = deriv(g, &s);
        let k2 = deriv(g, &offset(&s, &k1, dt / 2.0));
        let k3 = deriv(g, &offset(&s, &k2, dt / 2.0));
        let k4 = deriv(g, &offset(&s, &k3, dt));
        s = std::array::from_fn(|i| s[i] + dt / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]));
        out.push(s);
    }
    out
}
