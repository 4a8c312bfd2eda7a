//! Regularized tensor-product cubic spline over sun azimuth and elevation.
//!
//! Azimuth uses a periodic uniform cubic B-spline basis, elevation a clamped
//! uniform cubic basis on `[−π/2, π/2]`. The fit minimizes
//! `Σ (s − f)² + λ ∫∫ (s_aa² + 2 s_ae² + s_ee²)`.

use std::f64::consts::{FRAC_PI_2, PI, TAU};
use std::fs;
use std::path::Path;

use nalgebra::{Cholesky, DMatrix, DVector};
use serde::{Deserialize, Serialize};

use super::raytrace::IlluminationSample;
use crate::error::{Error, Result};

const ELEVATION_SLACK: f64 = 1e-12;

/// Pivot ratio below which the normal matrix is treated as singular.
const RANK_TOLERANCE: f64 = 1e-15;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IlluminationSurrogate {
    /// Number of uniform azimuth intervals over `[0, 2π)`; also the number
    /// of periodic basis functions.
    pub n_az_knots: usize,
    /// Number of uniform elevation intervals over `[−π/2, π/2]`.
    pub n_el_knots: usize,
    pub lambda: f64,
    /// Row-major `[azimuth basis][elevation basis]`.
    pub coefficients: Vec<f64>,
}

/// Non-zero basis functions at a point: index, value, first and second
/// derivative.
type Support = [(usize, f64, f64, f64); 4];

fn periodic_support(m: usize, azimuth: f64) -> Support {
    let h = TAU / m as f64;
    let a = azimuth.rem_euclid(TAU);
    let u = a / h;
    let i = (u.floor() as usize).min(m - 1);
    let t = u - i as f64;
    let t2 = t * t;
    let t3 = t2 * t;
    let s = 1.0 - t;
    let vals = [
        s * s * s / 6.0,
        (3.0 * t3 - 6.0 * t2 + 4.0) / 6.0,
        (-3.0 * t3 + 3.0 * t2 + 3.0 * t + 1.0) / 6.0,
        t3 / 6.0,
    ];
    let d1 = [
        -0.5 * s * s,
        1.5 * t2 - 2.0 * t,
        -1.5 * t2 + t + 0.5,
        0.5 * t2,
    ];
    let d2 = [s, 3.0 * t - 2.0, -3.0 * t + 1.0, t];
    std::array::from_fn(|k| ((i + k) % m, vals[k], d1[k] / h, d2[k] / (h * h)))
}

fn clamped_knots(m: usize) -> Vec<f64> {
    let h = PI / m as f64;
    let mut knots = vec![-FRAC_PI_2; 3];
    knots.extend((0..=m).map(|i| {
        if i == m {
            FRAC_PI_2
        } else {
            -FRAC_PI_2 + i as f64 * h
        }
    }));
    knots.extend([FRAC_PI_2; 3]);
    knots
}

/// Cubic basis values and two derivatives on a clamped knot vector.
fn clamped_support(knots: &[f64], m: usize, x: f64) -> Support {
    const P: usize = 3;
    let h = PI / m as f64;
    let span = P + (((x + FRAC_PI_2) / h).floor().max(0.0) as usize).min(m - 1);
    let mut ndu = [[0.0; P + 1]; P + 1];
    let mut left = [0.0; P + 1];
    let mut right = [0.0; P + 1];
    ndu[0][0] = 1.0;
    for j in 1..=P {
        left[j] = x - knots[span + 1 - j];
        right[j] = knots[span + j] - x;
        let mut saved = 0.0;
        for r in 0..j {
            ndu[j][r] = right[r + 1] + left[j - r];
            let temp = ndu[r][j - 1] / ndu[j][r];
            ndu[r][j] = saved + right[r + 1] * temp;
            saved = left[j - r] * temp;
        }
        ndu[j][j] = saved;
    }
    let mut ders = [[0.0; P + 1]; 3];
    for j in 0..=P {
        ders[0][j] = ndu[j][P];
    }
    for r in 0..=P as i64 {
        let mut a = [[0.0; P + 1]; 2];
        let (mut s1, mut s2) = (0, 1);
        a[0][0] = 1.0;
        for k in 1..=2i64 {
            let mut d = 0.0;
            let rk = r - k;
            let pk = P as i64 - k;
            if r >= k {
                a[s2][0] = a[s1][0] / ndu[(pk + 1) as usize][rk as usize];
                d = a[s2][0] * ndu[rk as usize][pk as usize];
            }
            let j1 = if rk >= -1 { 1 } else { -rk };
            let j2 = if r - 1 <= pk { k - 1 } else { P as i64 - r };
            for j in j1..=j2 {
                let (j, rkj) = (j as usize, (rk + j) as usize);
                a[s2][j] = (a[s1][j] - a[s1][j - 1]) / ndu[(pk + 1) as usize][rkj];
                d += a[s2][j] * ndu[rkj][pk as usize];
            }
            if r <= pk {
                let k = k as usize;
                a[s2][k] = -a[s1][k - 1] / ndu[(pk + 1) as usize][r as usize];
                d += a[s2][k] * ndu[r as usize][pk as usize];
            }
            ders[k as usize][r as usize] = d;
            std::mem::swap(&mut s1, &mut s2);
        }
    }
    let mut factor = P as f64;
    for (k, row) in ders.iter_mut().enumerate().skip(1) {
        for v in row.iter_mut() {
            *v *= factor;
        }
        factor *= (P - k) as f64;
    }
    std::array::from_fn(|k| (span - P + k, ders[0][k], ders[1][k], ders[2][k]))
}

const GAUSS4: [(f64, f64); 4] = [
    (-0.861_136_311_594_052_6, 0.347_854_845_137_453_9),
    (-0.339_981_043_584_856_3, 0.652_145_154_862_546_1),
    (0.339_981_043_584_856_3, 0.652_145_154_862_546_1),
    (0.861_136_311_594_052_6, 0.347_854_845_137_453_9),
];

/// Mass, first- and second-derivative Gram matrices of a 1-D basis.
fn gram_matrices(
    n_basis: usize,
    intervals: usize,
    lo: f64,
    hi: f64,
    support: impl Fn(f64) -> Support,
) -> [DMatrix<f64>; 3] {
    let mut grams = [
        DMatrix::zeros(n_basis, n_basis),
        DMatrix::zeros(n_basis, n_basis),
        DMatrix::zeros(n_basis, n_basis),
    ];
    let h = (hi - lo) / intervals as f64;
    for i in 0..intervals {
        let mid = lo + (i as f64 + 0.5) * h;
        for (node, weight) in GAUSS4 {
            let w = weight * 0.5 * h;
            let sup = support(mid + 0.5 * h * node);
            for &(p, v0, v1, v2) in &sup {
                for &(q, u0, u1, u2) in &sup {
                    grams[0][(p, q)] += w * v0 * u0;
                    grams[1][(p, q)] += w * v1 * u1;
                    grams[2][(p, q)] += w * v2 * u2;
                }
            }
        }
    }
    grams
}

impl IlluminationSurrogate {
    pub fn n_el_basis(&self) -> usize {
        self.n_el_knots + 3
    }

    /// Breakpoints of the periodic azimuth basis, `0..=2π`.
    pub fn azimuth_knots(&self) -> Vec<f64> {
        (0..=self.n_az_knots)
            .map(|i| TAU * i as f64 / self.n_az_knots as f64)
            .collect()
    }

    /// Breakpoints of the elevation basis, `−π/2..=π/2`.
    pub fn elevation_knots(&self) -> Vec<f64> {
        clamped_knots(self.n_el_knots)[3..self.n_el_knots + 4].to_vec()
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        let text = serde_json::to_string_pretty(self).expect("surrogate serializes");
        fs::write(path, text).map_err(|e| Error::io(path, e))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let s: Self = serde_json::from_str(&text)
            .map_err(|e| Error::spec(path.display().to_string(), e.to_string()))?;
        if s.n_az_knots < 4
            || s.n_el_knots < 1
            || s.coefficients.len() != s.n_az_knots * s.n_el_basis()
        {
            return Err(Error::spec(
                path.display().to_string(),
                "coefficient count does not match knot counts",
            ));
        }
        Ok(s)
    }
}

/// Least-squares fit with energy penalty `lambda`.
pub fn fit_surrogate(
    samples: &[IlluminationSample],
    n_az_knots: usize,
    n_el_knots: usize,
    lambda: f64,
) -> Result<IlluminationSurrogate> {
    if n_az_knots < 4 {
        return Err(Error::invalid(
            "n_az_knots",
            format!("must be >= 4, got {n_az_knots}"),
        ));
    }
    if n_el_knots < 1 {
        return Err(Error::invalid("n_el_knots", "must be >= 1"));
    }
    if !(lambda >= 0.0 && lambda.is_finite()) {
        return Err(Error::invalid(
            "lambda",
            format!("must be finite and >= 0, got {lambda}"),
        ));
    }
    let needed = (n_az_knots * n_el_knots).div_ceil(2);
    if samples.len() < needed {
        return Err(Error::invalid(
            "samples",
            format!("need at least {needed} samples, got {}", samples.len()),
        ));
    }
    let n_el = n_el_knots + 3;
    let n = n_az_knots * n_el;
    let knots = clamped_knots(n_el_knots);

    let mut normal = DMatrix::<f64>::zeros(n, n);
    let mut rhs = DVector::<f64>::zeros(n);
    for s in samples {
        if !(s.elevation.abs() <= FRAC_PI_2 + ELEVATION_SLACK)
            || !s.azimuth.is_finite()
            || !s.illuminated_fraction.is_finite()
        {
            return Err(Error::invalid(
                "samples",
                format!("bad sample at ({}, {})", s.azimuth, s.elevation),
            ));
        }
        let sa = periodic_support(n_az_knots, s.azimuth);
        let se = clamped_support(&knots, n_el_knots, s.elevation.clamp(-FRAC_PI_2, FRAC_PI_2));
        let row: Vec<(usize, f64)> = sa
            .iter()
            .flat_map(|&(i, va, _, _)| se.iter().map(move |&(j, ve, _, _)| (i * n_el + j, va * ve)))
            .collect();
        for &(p, vp) in &row {
            rhs[p] += vp * s.illuminated_fraction;
            for &(q, vq) in &row {
                normal[(p, q)] += vp * vq;
            }
        }
    }
    if lambda > 0.0 {
        let [ma, d1a, d2a] = gram_matrices(n_az_knots, n_az_knots, 0.0, TAU, |a| {
            periodic_support(n_az_knots, a)
        });
        let [me, d1e, d2e] = gram_matrices(n_el, n_el_knots, -FRAC_PI_2, FRAC_PI_2, |e| {
            clamped_support(&knots, n_el_knots, e)
        });
        let energy = d2a.kronecker(&me) + 2.0 * d1a.kronecker(&d1e) + ma.kronecker(&d2e);
        normal += lambda * energy;
    }
    let chol = Cholesky::new(normal).ok_or(Error::RankDeficient)?;
    let diag = chol.l_dirty().diagonal();
    let (lo, hi) = (diag.min(), diag.max());
    if !(lo > 0.0) || (lo / hi).powi(2) < RANK_TOLERANCE {
        return Err(Error::RankDeficient);
    }
    let coefficients = chol.solve(&rhs);
    Ok(IlluminationSurrogate {
        n_az_knots,
        n_el_knots,
        lambda,
        coefficients: coefficients.iter().copied().collect(),
    })
}

/// Value and partial derivatives with respect to azimuth and elevation.
pub fn surrogate_eval(
    s: &IlluminationSurrogate,
    azimuth: f64,
    elevation: f64,
) -> Result<(f64, f64, f64)> {
    if !(elevation.abs() <= FRAC_PI_2 + ELEVATION_SLACK) {
        return Err(Error::invalid(
            "elevation",
            format!("{elevation} outside [-pi/2, pi/2]"),
        ));
    }
    if !azimuth.is_finite() {
        return Err(Error::invalid("azimuth", "must be finite"));
    }
    let n_el = s.n_el_basis();
    let knots = clamped_knots(s.n_el_knots);
    let sa = periodic_support(s.n_az_knots, azimuth);
    let se = clamped_support(&knots, s.n_el_knots, elevation.clamp(-FRAC_PI_2, FRAC_PI_2));
    let (mut f, mut fa, mut fe) = (0.0, 0.0, 0.0);
    for &(i, va, da, _) in &sa {
        for &(j, ve, de, _) in &se {
            let c = s.coefficients[i * n_el + j];
            f += c * va * ve;
            fa += c * da * ve;
            fe += c * va * de;
        }
    }
    Ok((f, fa, fe))
}

/// Root-mean-square error of the surrogate on a sample set.
pub fn surrogate_rmse(s: &IlluminationSurrogate, samples: &[IlluminationSample]) -> Result<f64> {
    if samples.is_empty() {
        return Err(Error::invalid("samples", "empty"));
    }
    let mut sum = 0.0;
    for p in samples {
        let (f, _, _) = surrogate_eval(s, p.azimuth, p.elevation)?;
        sum += (f - p.illuminated_fraction).powi(2);
    }
    Ok((sum / samples.len() as f64).sqrt())
}
