//! Kreisselmeier–Steinhauser smooth maximum.

use crate::error::{Error, Result};

/// KS aggregate `max + ln(Σ exp(ρ(x_i − max)))/ρ` and its gradient weights
/// (a softmax, summing to 1). Bounded by `max ≤ KS ≤ max + ln(n)/ρ`.
pub fn ks_aggregate(values: &[f64], rho: f64) -> Result<(f64, Vec<f64>)> {
    if values.is_empty() {
        return Err(Error::invalid("values", "KS aggregate of an empty set"));
    }
    if !(rho > 0.0 && rho.is_finite()) {
        return Err(Error::invalid(
            "rho",
            format!("must be finite and > 0, got {rho}"),
        ));
    }
    let max = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let mut weights: Vec<f64> = values.iter().map(|v| (rho * (v - max)).exp()).collect();
    let sum: f64 = weights.iter().sum();
    for w in &mut weights {
        *w /= sum;
    }
    Ok((max + sum.ln() / rho, weights))
}
