//! Independent reference implementations for the acceptance and oracle
//! tests. Nothing here may import from `taloskit`; see CONTRIBUTING.md.
#![allow(dead_code)]

pub mod attitude;
pub mod fd;
pub mod gravity;
pub mod propagate;
pub mod shadow;

use std::fmt;

/// One oracle comparison.
#[derive(Debug, Clone, PartialEq)]
pub struct OracleResult {
    pub label: String,
    /// Largest discrepancy found.
    pub value: f64,
    pub tolerance: f64,
    pub pass: bool,
}

impl OracleResult {
    pub fn new(label: impl Into<String>, value: f64, tolerance: f64) -> Self {
        Self {
            label: label.into(),
            value,
            tolerance,
            pass: value <= tolerance,
        }
    }

    /// Largest relative error `|a − b| / max(|b|, floor)` over paired values.
    pub fn relative(
        label: impl Into<String>,
        computed: &[f64],
        reference: &[f64],
        tolerance: f64,
        floor: f64,
    ) -> Self {
        assert_eq!(computed.len(), reference.len(), "paired values");
        let worst = computed
            .iter()
            .zip(reference)
            .map(|(a, b)| (a - b).abs() / b.abs().max(floor))
            .fold(0.0, f64::max);
        Self::new(label, worst, tolerance)
    }
}

impl fmt::Display for OracleResult {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{} {}: {:.3e} (tolerance {:.1e})",
            if self.pass { "PASS" } else { "FAIL" },
            self.label,
            self.value,
            self.tolerance
        )
    }
}
