//! Panel-level global statistics.
//!
//! Each tick produces one local value per stream; a global statistic
//! collapses the panel into a single number compared against the
//! control limit. The quantile-gap statistic is the primary one: it
//! compares the sorted local values against their expected in-control
//! quantiles and accumulates only upward gaps, so it reacts to a few
//! large values and to many small ones alike. The others are baselines:
//! the same construction on the logistic scale of in-control
//! probabilities, a soft-threshold sum, and the plain maximum and sum.

use crate::error::{Error, Result};
use crate::pool::QuantileTable;

/// Quantile function of the standard logistic distribution,
/// `ln(p / (1 - p))`; `p` must lie strictly inside (0, 1).
pub fn logistic_quantile(p: f64) -> Result<f64> {
    if !(p > 0.0 && p < 1.0) {
        return Err(Error::OutsideUnitInterval(p));
    }
    Ok((p / (1.0 - p)).ln())
}

/// Quantile-gap statistic: the sum of squared upward gaps between the
/// sorted local values and the expected quantiles in `table`. Values
/// exactly on their expected quantile contribute nothing; only strict
/// exceedances count.
pub fn quantile_exceedance(values: &[f64], table: &QuantileTable) -> Result<f64> {
    if values.is_empty() {
        return Err(Error::EmptyInput("local statistic panel"));
    }
    if values.len() != table.len() {
        return Err(Error::LengthMismatch { expected: table.len(), got: values.len() });
    }
    let mut sorted = values.to_vec();
    sorted.sort_unstable_by(f64::total_cmp);
    let total: f64 = sorted
        .iter()
        .zip(table.expected())
        .filter(|(w, q)| *w > *q)
        .map(|(w, q)| (w - q) * (w - q))
        .sum();
    // An empty sum is IEEE -0.0; keep the zero unsigned.
    Ok(total + 0.0)
}

/// Logistic-scale variant computed directly from in-control
/// probabilities `u` (each strictly inside (0, 1)): squared log-odds
/// ratios between the sorted probabilities and the plotting positions,
/// accumulated where the sorted value exceeds its position.
///
/// Mapping `u` through [`logistic_quantile`] and calling
/// [`quantile_exceedance`] against [`QuantileTable::logistic`] yields
/// the same number.
pub fn logistic_exceedance(u: &[f64]) -> Result<f64> {
    if u.is_empty() {
        return Err(Error::EmptyInput("probability panel"));
    }
    for &v in u {
        if !(v > 0.0 && v < 1.0) {
            return Err(Error::OutsideUnitInterval(v));
        }
    }
    let mut sorted = u.to_vec();
    sorted.sort_unstable_by(f64::total_cmp);
    let m = sorted.len() as f64;
    let total: f64 = sorted
        .iter()
        .enumerate()
        .filter_map(|(idx, &v)| {
            let p = (idx as f64 + 0.25) / (m - 0.5);
            if v > p {
                // Stable form of (1/v - 1)/(1/p - 1): computing 1/v - 1
                // directly loses precision as v approaches 1.
                let t = (((1.0 - v) * p) / (v * (1.0 - p))).ln();
                Some(t * t)
            } else {
                None
            }
        })
        .sum();
    // An empty sum is IEEE -0.0; keep the zero unsigned.
    Ok(total + 0.0)
}

/// Soft-threshold sum: total excess of the local values over `b`.
pub fn soft_threshold(values: &[f64], b: f64) -> Result<f64> {
    if values.is_empty() {
        return Err(Error::EmptyInput("local statistic panel"));
    }
    let total: f64 = values.iter().map(|&w| (w - b).max(0.0)).sum();
    Ok(total + 0.0)
}

/// Largest local value.
pub fn max_statistic(values: &[f64]) -> Result<f64> {
    if values.is_empty() {
        return Err(Error::EmptyInput("local statistic panel"));
    }
    Ok(values.iter().copied().fold(f64::NEG_INFINITY, f64::max))
}

/// Sum of the local values.
pub fn sum_statistic(values: &[f64]) -> Result<f64> {
    if values.is_empty() {
        return Err(Error::EmptyInput("local statistic panel"));
    }
    Ok(values.iter().sum())
}

/// Which global statistic a scheme runs.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum GlobalKind {
    /// Quantile-gap statistic against pool quantiles.
    Quantile,
    /// Quantile-gap statistic on the logistic scale of pool CDF values.
    Logistic,
    /// Soft-threshold sum with offset `b`.
    SoftThreshold { b: f64 },
    /// Maximum local value.
    Max,
    /// Sum of local values.
    Sum,
}

impl GlobalKind {
    /// Stable label used in reports and configuration files.
    pub fn label(&self) -> String {
        match self {
            GlobalKind::Quantile => "quantile".into(),
            GlobalKind::Logistic => "logistic".into(),
            GlobalKind::SoftThreshold { b } => format!("soft:{b}"),
            GlobalKind::Max => "max".into(),
            GlobalKind::Sum => "sum".into(),
        }
    }

    /// Parses a label as written in configuration files.
    pub fn parse(text: &str) -> Result<GlobalKind> {
        let t = text.trim();
        match t {
            "quantile" => return Ok(GlobalKind::Quantile),
            "logistic" => return Ok(GlobalKind::Logistic),
            "max" => return Ok(GlobalKind::Max),
            "sum" => return Ok(GlobalKind::Sum),
            _ => {}
        }
        if let Some(b_text) = t.strip_prefix("soft:") {
            let b: f64 = b_text.trim().parse().map_err(|_| {
                Error::InvalidParameter(format!("soft threshold offset {b_text:?} is not a number"))
            })?;
            if !b.is_finite() {
                return Err(Error::InvalidParameter(format!(
                    "soft threshold offset must be finite, got {b}"
                )));
            }
            return Ok(GlobalKind::SoftThreshold { b });
        }
        Err(Error::InvalidParameter(format!(
            "unknown global statistic {t:?}; expected quantile, logistic, soft:<b>, max, or sum"
        )))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::pool::quantile_positions;
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    fn table_from(expected: Vec<f64>) -> QuantileTable {
        let m = expected.len();
        QuantileTable::with_expected(quantile_positions(m).unwrap(), expected)
    }

    #[test]
    fn quantile_exceedance_counts_only_upward_gaps() {
        let table = table_from(vec![0.0, 1.0]);
        let g = quantile_exceedance(&[2.0, 0.5], &table).unwrap();
        // Sorted values (0.5, 2.0): gaps 0.5 over 0.0 and 1.0 over 1.0.
        assert_relative_eq!(g, 0.25 + 1.0, max_relative = 1e-15);
        let zero = quantile_exceedance(&[0.0, 1.0], &table).unwrap();
        assert_eq!(zero, 0.0);
        let below = quantile_exceedance(&[-5.0, -3.0], &table).unwrap();
        assert_eq!(below, 0.0);
    }

    #[test]
    fn empty_exceedance_sums_are_positive_zero() {
        // Without normalization the empty fold yields IEEE -0.0, which
        // leaks a minus sign into formatted output.
        let table = table_from(vec![1.0, 2.0]);
        assert_eq!(quantile_exceedance(&[0.0, 0.0], &table).unwrap().to_bits(), 0);
        assert_eq!(logistic_exceedance(&[0.01, 0.02]).unwrap().to_bits(), 0);
        assert_eq!(soft_threshold(&[0.5, 0.5], 1.0).unwrap().to_bits(), 0);
    }

    #[test]
    fn quantile_exceedance_checks_lengths() {
        let table = QuantileTable::logistic(3).unwrap();
        assert!(matches!(
            quantile_exceedance(&[1.0], &table),
            Err(Error::LengthMismatch { expected: 3, got: 1 })
        ));
        assert!(quantile_exceedance(&[], &table).is_err());
    }

    #[test]
    fn logistic_exceedance_single_value() {
        // One stream at u = 0.9 against position 0.5: log odds ratio
        // ln((1/0.9 - 1) / 1) = ln(1/9).
        let g = logistic_exceedance(&[0.9]).unwrap();
        let expect = (1.0f64 / 9.0).ln().powi(2);
        assert_relative_eq!(g, expect, max_relative = 1e-14);
        assert_relative_eq!(g, 4.82775, max_relative = 1e-5);
    }

    #[test]
    fn logistic_exceedance_rejects_bad_probabilities() {
        assert!(logistic_exceedance(&[0.5, 1.0]).is_err());
        assert!(logistic_exceedance(&[0.0]).is_err());
        assert!(logistic_exceedance(&[]).is_err());
    }

    #[test]
    fn logistic_routes_agree() {
        // Direct probability-scale evaluation equals the quantile-gap
        // statistic after the logistic transform.
        let u = [0.31, 0.92, 0.044, 0.76, 0.5, 0.981, 0.12, 0.66];
        let direct = logistic_exceedance(&u).unwrap();
        let w: Vec<f64> = u.iter().map(|&v| logistic_quantile(v).unwrap()).collect();
        let table = QuantileTable::logistic(u.len()).unwrap();
        let via_table = quantile_exceedance(&w, &table).unwrap();
        assert_relative_eq!(direct, via_table, epsilon = 1e-12);
    }

    #[test]
    fn soft_threshold_and_plain_aggregates() {
        let w = [1.2, 0.3, 2.5];
        assert_relative_eq!(soft_threshold(&w, 0.5).unwrap(), 0.7 + 2.0, max_relative = 1e-15);
        assert_eq!(soft_threshold(&w, 10.0).unwrap(), 0.0);
        assert_eq!(max_statistic(&w).unwrap(), 2.5);
        assert_relative_eq!(sum_statistic(&w).unwrap(), 4.0, max_relative = 1e-15);
        assert!(max_statistic(&[]).is_err());
        assert!(sum_statistic(&[]).is_err());
        assert!(soft_threshold(&[], 0.5).is_err());
    }

    #[test]
    fn labels_roundtrip() {
        for kind in [
            GlobalKind::Quantile,
            GlobalKind::Logistic,
            GlobalKind::SoftThreshold { b: 0.5 },
            GlobalKind::SoftThreshold { b: 100f64.ln() },
            GlobalKind::Max,
            GlobalKind::Sum,
        ] {
            assert_eq!(GlobalKind::parse(&kind.label()).unwrap(), kind);
        }
        assert!(GlobalKind::parse("median").is_err());
        assert!(GlobalKind::parse("soft:abc").is_err());
    }

    proptest! {
        #[test]
        fn quantile_exceedance_is_nonnegative_and_monotone(
            values in prop::collection::vec(-10f64..10.0, 1..40),
            bump_idx in 0usize..40,
            bump in 0f64..5.0,
        ) {
            let m = values.len();
            let table = QuantileTable::logistic(m).unwrap();
            let g = quantile_exceedance(&values, &table).unwrap();
            prop_assert!(g >= 0.0);
            // Raising any one value never lowers the statistic.
            let mut bumped = values.clone();
            let idx = bump_idx % m;
            bumped[idx] += bump;
            let g2 = quantile_exceedance(&bumped, &table).unwrap();
            prop_assert!(g2 >= g - 1e-12);
        }

        #[test]
        fn logistic_equivalence_randomized(
            u in prop::collection::vec(0.001f64..0.999, 1..30),
        ) {
            let direct = logistic_exceedance(&u).unwrap();
            let w: Vec<f64> = u.iter().map(|&v| logistic_quantile(v).unwrap()).collect();
            let table = QuantileTable::logistic(u.len()).unwrap();
            let via = quantile_exceedance(&w, &table).unwrap();
            prop_assert!((direct - via).abs() <= 1e-10);
        }
    }
}
