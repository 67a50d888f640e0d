use serde::{Deserialize, Serialize};

use crate::error::{config_err, Error, Result};

/// Accuracy of a surrogate on a test set.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ErrorReport {
    /// Mean relative error.
    pub mre: f64,
    /// Maximum relative error.
    pub max_re: f64,
    pub mse: f64,
    pub n_test: usize,
}

/// Relative metrics divide by `|truth|`; a zero truth value is an error rather than
/// being regularised.
pub fn error_metrics(truth: &[f64], predictions: &[f64]) -> Result<ErrorReport> {
    if truth.is_empty() {
        return Err(config_err("error metrics need at least one test point"));
    }
    if truth.len() != predictions.len() {
        return Err(config_err(format!("{} truth values for {} predictions", truth.len(), predictions.len())));
    }
    if let Some(index) = truth.iter().position(|t| *t == 0.0) {
        return Err(Error::ZeroTruth { index });
    }
    let n = truth.len() as f64;
    let (mut sum_re, mut max_re, mut sum_sq) = (0.0, 0.0f64, 0.0);
    for (t, p) in truth.iter().zip(predictions) {
        let e = t - p;
        let re = e.abs() / t.abs();
        sum_re += re;
        max_re = max_re.max(re);
        sum_sq += e * e;
    }
    Ok(ErrorReport { mre: sum_re / n, max_re, mse: sum_sq / n, n_test: truth.len() })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn examples() {
        let r = error_metrics(&[1.0, 2.0], &[1.0, 2.0]).unwrap();
        assert_eq!((r.mre, r.max_re, r.mse), (0.0, 0.0, 0.0));
        let r = error_metrics(&[1.0, 2.0], &[1.1, 1.8]).unwrap();
        assert!((r.mre - 0.1).abs() < 1e-12);
        assert!((r.max_re - 0.1).abs() < 1e-12);
        assert!((r.mse - 0.025).abs() < 1e-12);
        let r = error_metrics(&[2.0], &[1.0]).unwrap();
        assert_eq!((r.mre, r.max_re, r.mse, r.n_test), (0.5, 0.5, 1.0, 1));
    }

    #[test]
    fn zero_truth_names_the_index() {
        assert!(matches!(error_metrics(&[1.0, 0.0, 3.0], &[1.0, 1.0, 1.0]), Err(Error::ZeroTruth { index: 1 })));
        assert!(error_metrics(&[], &[]).is_err());
        assert!(error_metrics(&[1.0], &[1.0, 2.0]).is_err());
    }
}
