//! Posterior summaries: sample quantiles and piecewise-constant interpolation
//! of per-state summaries onto the time axis.

use crate::error::{invalid, Error, Result};

/// Sample quantile of sorted data by linear interpolation between order
/// statistics at position `(n - 1) * prob` (0-based).
pub fn quantile_sorted(sorted: &[f64], prob: f64) -> f64 {
    let n = sorted.len();
    let h = (n - 1) as f64 * prob.clamp(0.0, 1.0);
    let lo = h.floor() as usize;
    let hi = (lo + 1).min(n - 1);
    sorted[lo] + (h - lo as f64) * (sorted[hi] - sorted[lo])
}

/// Quantiles of unsorted draws; needs at least two draws.
pub fn quantiles(draws: &[f64], probs: &[f64]) -> Result<Vec<f64>> {
    if draws.len() < 2 {
        return Err(Error::DegeneratePosterior(format!("need at least 2 draws, got {}", draws.len())));
    }
    if let Some(p) = probs.iter().find(|p| !(0.0..=1.0).contains(*p)) {
        return Err(invalid(format!("quantile probability {p} outside [0, 1]")));
    }
    let mut s = draws.to_vec();
    s.sort_by(|a, b| a.total_cmp(b));
    Ok(probs.iter().map(|&p| quantile_sorted(&s, p)).collect())
}

/// Quantiles indexed by `(probability, point, parameter)`.
#[derive(Debug, Clone, PartialEq)]
pub struct QuantileTable {
    pub probs: Vec<f64>,
    pub n_points: usize,
    pub n_params: usize,
    values: Vec<f64>,
}

impl QuantileTable {
    pub fn new(probs: Vec<f64>, n_points: usize, n_params: usize, values: Vec<f64>) -> Result<Self> {
        if values.len() != probs.len() * n_points * n_params {
            return Err(invalid("quantile table shape mismatch"));
        }
        Ok(Self { probs, n_points, n_params, values })
    }

    /// Builds the table from draws laid out as `(draw, point, parameter)`.
    pub fn from_draws(draws: &[f64], n_draws: usize, n_points: usize, n_params: usize, probs: &[f64]) -> Result<Self> {
        if draws.len() != n_draws * n_points * n_params {
            return Err(invalid("draw array shape mismatch"));
        }
        let r = probs.len();
        let mut values = vec![0.0; r * n_points * n_params];
        let mut col = vec![0.0; n_draws];
        for s in 0..n_points {
            for k in 0..n_params {
                for (d, c) in col.iter_mut().enumerate() {
                    *c = draws[(d * n_points + s) * n_params + k];
                }
                let q = quantiles(&col, probs)?;
                for (i, v) in q.into_iter().enumerate() {
                    values[(i * n_points + s) * n_params + k] = v;
                }
            }
        }
        Self::new(probs.to_vec(), n_points, n_params, values)
    }

    pub fn get(&self, prob_index: usize, point: usize, param: usize) -> f64 {
        self.values[(prob_index * self.n_points + point) * self.n_params + param]
    }

    /// Values over points for one probability and parameter.
    pub fn series(&self, prob_index: usize, param: usize) -> Vec<f64> {
        (0..self.n_points).map(|s| self.get(prob_index, s, param)).collect()
    }

    pub fn prob_index(&self, prob: f64) -> Option<usize> {
        self.probs.iter().position(|p| (p - prob).abs() < 1e-12)
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    /// Maps each point summary onto `t = 1..t_len` with [`interpolate_path`].
    pub fn interpolate(&self, centers: &[usize], t_len: usize) -> Result<Self> {
        if centers.len() != self.n_points {
            return Err(invalid("centers do not match the number of points"));
        }
        let map = interpolation_index(centers, t_len)?;
        let mut values = Vec::with_capacity(self.probs.len() * t_len * self.n_params);
        for i in 0..self.probs.len() {
            for &s in &map {
                for k in 0..self.n_params {
                    values.push(self.get(i, s, k));
                }
            }
        }
        Self::new(self.probs.clone(), t_len, self.n_params, values)
    }
}

/// For each `t = 1..t_len`, the index of the last center at or before `t`
/// (the first center for earlier times).
pub fn interpolation_index(centers: &[usize], t_len: usize) -> Result<Vec<usize>> {
    if centers.is_empty() {
        return Err(invalid("cannot interpolate an empty path"));
    }
    if centers.windows(2).any(|w| w[0] >= w[1]) {
        return Err(invalid("centers must be strictly increasing"));
    }
    let mut out = Vec::with_capacity(t_len);
    let mut s = 0;
    for t in 1..=t_len {
        while s + 1 < centers.len() && centers[s + 1] <= t {
            s += 1;
        }
        out.push(s);
    }
    Ok(out)
}

/// Piecewise-constant extension of per-center values to `t = 1..t_len`.
pub fn interpolate_path(values: &[f64], centers: &[usize], t_len: usize) -> Result<Vec<f64>> {
    if values.len() != centers.len() {
        return Err(invalid("values and centers differ in length"));
    }
    Ok(interpolation_index(centers, t_len)?.into_iter().map(|s| values[s]).collect())
}
