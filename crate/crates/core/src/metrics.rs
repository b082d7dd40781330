//! Evaluation metrics for predicted objective values.

use crate::error::{Error, Result};

/// Mean relative objective error in percent:
/// `(1/|D|)·Σ |(obj − obj*)/obj*|·100` over `(predicted, optimal)` pairs.
/// An empty set gives 0.
pub fn mean_relative_objective_error(pairs: &[(f64, f64)]) -> Result<f64> {
    if pairs.is_empty() {
        return Ok(0.0);
    }
    let mut sum = 0.0;
    for (i, &(pred, opt)) in pairs.iter().enumerate() {
        if !(pred.is_finite() && opt.is_finite()) {
            return Err(Error::InvalidInput(format!("pair {i} is not finite")));
        }
        if opt == 0.0 {
            return Err(Error::InvalidInput(format!("pair {i} has optimal objective 0")));
        }
        sum += ((pred - opt) / opt).abs() * 100.0;
    }
    Ok(sum / pairs.len() as f64)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn examples() {
        assert_eq!(mean_relative_objective_error(&[(3.0, 3.0), (-2.0, -2.0)]).unwrap(), 0.0);
        assert!((mean_relative_objective_error(&[(-1.485, -1.5)]).unwrap() - 1.0).abs() < 1e-12);
        assert_eq!(mean_relative_objective_error(&[(2.0, 1.0), (0.5, 1.0)]).unwrap(), 75.0);
    }

    #[test]
    fn zero_optimum_names_its_index() {
        let err = mean_relative_objective_error(&[(1.0, 1.0), (1.0, 0.0)]).unwrap_err();
        assert!(err.to_string().contains("pair 1"));
    }
}
