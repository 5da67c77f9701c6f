//! Comparison metrics over replicated data sets: RMSE, relative efficiency
//! and posterior perturbation.

use crate::error::{invalid, Result};

fn mean_square_gap(a: &[f64], b: &[f64]) -> Result<f64> {
    if a.len() != b.len() {
        return Err(invalid(format!("shape mismatch: {} vs {}", a.len(), b.len())));
    }
    if a.is_empty() {
        return Err(invalid("no values to compare"));
    }
    Ok(a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum::<f64>() / a.len() as f64)
}

/// Root mean squared error over all elements.
///
/// `estimates[i]` is replication `i`, flattened over parameters (and time);
/// the square is averaged over replications, parameters and time points.
pub fn rmse(estimates: &[Vec<f64>], truth: &[f64]) -> Result<f64> {
    if estimates.is_empty() {
        return Err(invalid("no replications"));
    }
    let mut acc = 0.0;
    for e in estimates {
        acc += mean_square_gap(e, truth)?;
    }
    Ok((acc / estimates.len() as f64).sqrt())
}

/// RMSE with a separate truth per replication.
pub fn rmse_paired(estimates: &[Vec<f64>], truths: &[Vec<f64>]) -> Result<f64> {
    if estimates.is_empty() || estimates.len() != truths.len() {
        return Err(invalid("estimates and truths differ in replication count"));
    }
    let mut acc = 0.0;
    for (e, t) in estimates.iter().zip(truths) {
        acc += mean_square_gap(e, t)?;
    }
    Ok((acc / estimates.len() as f64).sqrt())
}

/// `rmse_time / rmse_approx`.
pub fn efficiency(rmse_time: f64, rmse_approx: f64) -> Result<f64> {
    if !(rmse_approx > 0.0) {
        return Err(invalid("efficiency needs a positive approximate RMSE"));
    }
    Ok(rmse_time / rmse_approx)
}

/// Root mean squared gap between matching quantiles of two posteriors.
///
/// `approx[i]` and `exact[i]` hold the quantiles of replication `i`,
/// flattened over probabilities, parameters (and time).
pub fn perturbation(approx: &[Vec<f64>], exact: &[Vec<f64>]) -> Result<f64> {
    rmse_paired(approx, exact)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rmse_examples() {
        assert_eq!(rmse(&[vec![0.5, 0.2]], &[0.5, 0.2]).unwrap(), 0.0);
        assert!((rmse(&[vec![0.8]], &[0.5]).unwrap() - 0.3).abs() < 1e-15);
        let r = rmse(&[vec![0.1, 0.1], vec![0.3, 0.3]], &[0.0, 0.0]).unwrap();
        assert!((r - 0.05f64.sqrt()).abs() < 1e-15);
        assert!(rmse(&[vec![0.1]], &[0.0, 0.0]).is_err());
    }

    #[test]
    fn efficiency_examples() {
        assert_eq!(efficiency(0.2, 0.2).unwrap(), 1.0);
        assert_eq!(efficiency(0.1, 0.2).unwrap(), 0.5);
        assert!(efficiency(0.3, 0.2).unwrap() > 1.0);
        assert!(efficiency(0.1, 0.0).is_err());
    }

    #[test]
    fn perturbation_examples() {
        assert_eq!(perturbation(&[vec![1.0, 2.0]], &[vec![1.0, 2.0]]).unwrap(), 0.0);
        assert!((perturbation(&[vec![0.2]], &[vec![0.0]]).unwrap() - 0.2).abs() < 1e-15);
        let g = perturbation(&[vec![0.1, 0.3]], &[vec![0.0, 0.0]]).unwrap();
        assert!((g - 0.05f64.sqrt()).abs() < 1e-15);
    }
}
