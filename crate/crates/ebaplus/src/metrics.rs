use serde::Serialize;

use crate::error::{Error, Result};

/// Accuracy summary over a set of predictions. `mmre` and `mdmre` are
/// fractions (0.25 means a 25% relative error); `pred25` is the percentage
/// of predictions whose relative error is at most 25%.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct MetricSummary {
    pub mmre: f64,
    pub mdmre: f64,
    pub pred25: f64,
    pub n: usize,
}

/// Magnitude of relative error: `|actual - estimated| / actual`.
pub fn mre(actual: f64, estimated: f64) -> Result<f64> {
    if !(actual.is_finite() && actual > 0.0) {
        return Err(Error::InvalidArgument(format!(
            "actual effort must be positive and finite, got {actual}"
        )));
    }
    if !estimated.is_finite() {
        return Err(Error::InvalidArgument(format!(
            "estimated effort must be finite, got {estimated}"
        )));
    }
    Ok((actual - estimated).abs() / actual)
}

/// Mean MRE, median MRE (mean of the central pair for even counts) and
/// PRED(25) over a non-empty vector of relative errors.
pub fn summarize(mres: &[f64]) -> Result<MetricSummary> {
    if mres.is_empty() {
        return Err(Error::InvalidArgument(
            "cannot summarize zero predictions".into(),
        ));
    }
    let n = mres.len();
    let mmre = mres.iter().sum::<f64>() / n as f64;
    let mut sorted = mres.to_vec();
    sorted.sort_by(f64::total_cmp);
    let mdmre = if n % 2 == 1 {
        sorted[n / 2]
    } else {
        (sorted[n / 2 - 1] + sorted[n / 2]) / 2.0
    };
    let within = mres.iter().filter(|&&v| v <= 0.25).count();
    let pred25 = 100.0 * within as f64 / n as f64;
    Ok(MetricSummary {
        mmre,
        mdmre,
        pred25,
        n,
    })
}

#[cfg(test)]
mod tests {
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;

    use super::*;

    #[test]
    fn mre_is_relative_to_actual() {
        assert_abs_diff_eq!(mre(100.0, 120.0).unwrap(), 0.2);
        assert_abs_diff_eq!(mre(100.0, 80.0).unwrap(), 0.2);
        assert_eq!(mre(50.0, 50.0).unwrap(), 0.0);
        assert!(mre(0.0, 10.0).is_err());
        assert!(mre(-5.0, 10.0).is_err());
        assert!(mre(10.0, f64::NAN).is_err());
    }

    #[test]
    fn summary_of_a_known_vector() {
        let s = summarize(&[0.1, 0.3, 0.2, 0.5]).unwrap();
        assert_abs_diff_eq!(s.mmre, 0.275, epsilon = 1e-12);
        assert_abs_diff_eq!(s.mdmre, 0.25, epsilon = 1e-12);
        assert_eq!(s.pred25, 50.0);
        assert_eq!(s.n, 4);
    }

    #[test]
    fn odd_count_takes_the_middle_value() {
        let s = summarize(&[0.9, 0.1, 0.4]).unwrap();
        assert_eq!(s.mdmre, 0.4);
        assert!(summarize(&[]).is_err());
    }

    #[test]
    fn perfect_predictions_score_perfectly() {
        let s = summarize(&[0.0, 0.0, 0.0]).unwrap();
        assert_eq!(s.mmre, 0.0);
        assert_eq!(s.mdmre, 0.0);
        assert_eq!(s.pred25, 100.0);
    }

    proptest! {
        #[test]
        fn summary_ignores_record_order(
            values in proptest::collection::vec(0.0..2.0f64, 1..30),
            swap in any::<prop::sample::Index>(),
        ) {
            let a = summarize(&values).unwrap();
            let mut shuffled = values.clone();
            let i = swap.index(shuffled.len());
            shuffled.swap(0, i);
            let b = summarize(&shuffled).unwrap();
            prop_assert_eq!(a.mdmre, b.mdmre);
            prop_assert_eq!(a.pred25, b.pred25);
            prop_assert!((a.mmre - b.mmre).abs() < 1e-12);
        }

        #[test]
        fn pred25_counts_the_threshold_inclusively(extra in 0.0..0.25f64) {
            let s = summarize(&[0.25, extra, 0.2500001]).unwrap();
            prop_assert!((s.pred25 - 200.0 / 3.0).abs() < 1e-9);
        }
    }
}
