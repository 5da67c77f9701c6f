//! Time-varying AR(p) paths: stability parameterization, simulation with
//! optional stochastic volatility, and the three experiment data-generating
//! processes.

pub mod stability;

use rand::Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::error::{domain, invalid, Result};
use crate::scalar::Real;
use crate::spectral::TimeSeries;
pub use stability::{
    is_stable, monahan, phi_to_r, phi_to_theta, r_to_phi, r_to_theta, theta_to_phi, theta_to_phi_into, theta_to_r,
    PartialAutocorrs, StableArCoeffs, UnrestrictedParams,
};

/// Burn-in length used before the first observation.
pub const DEFAULT_BURN_IN: usize = 200;

/// Per-time AR parameters and innovation variances, `t = 1..T`.
///
/// Stored row-major: row `i` (0-based) holds the parameters at time `i + 1`.
#[derive(Debug, Clone, PartialEq)]
pub struct TvarPath<T> {
    order: usize,
    theta: Vec<T>,
    phi: Vec<T>,
    sigma2: Vec<T>,
    log_variance: Option<Vec<T>>,
}

impl<T: Real> TvarPath<T> {
    fn check_shape(order: usize, flat: &[T], sigma2: &[T]) -> Result<usize> {
        let t_len = sigma2.len();
        if t_len == 0 {
            return Err(invalid("empty path"));
        }
        if flat.len() != order * t_len {
            return Err(invalid(format!("parameter path has {} values, expected {order} x {t_len}", flat.len())));
        }
        if let Some(v) = sigma2.iter().find(|v| !(**v > T::zero()) || !v.is_finite()) {
            return Err(domain(format!("innovation variance {v} must be positive")));
        }
        Ok(t_len)
    }

    /// Path from AR coefficients; fails if any `phi_t` is unstable.
    pub fn from_phi(order: usize, phi: Vec<T>, sigma2: Vec<T>) -> Result<Self> {
        let t_len = Self::check_shape(order, &phi, &sigma2)?;
        let mut theta = Vec::with_capacity(phi.len());
        for t in 0..t_len {
            let row = &phi[t * order..(t + 1) * order];
            let th = phi_to_theta(row).map_err(|e| domain(format!("time {}: {e}", t + 1)))?;
            theta.extend_from_slice(&th);
        }
        Ok(Self { order, theta, phi, sigma2, log_variance: None })
    }

    /// Path from unrestricted parameters; always stable.
    pub fn from_theta(order: usize, theta: Vec<T>, sigma2: Vec<T>) -> Result<Self> {
        let t_len = Self::check_shape(order, &theta, &sigma2)?;
        let mut phi = vec![T::zero(); theta.len()];
        for t in 0..t_len {
            theta_to_phi_into(&theta[t * order..(t + 1) * order], &mut phi[t * order..(t + 1) * order]);
        }
        Ok(Self { order, theta, phi, sigma2, log_variance: None })
    }

    pub fn constant(phi: &[T], sigma2: T, t_len: usize) -> Result<Self> {
        let flat = phi.iter().copied().cycle().take(phi.len() * t_len).collect();
        Self::from_phi(phi.len(), flat, vec![sigma2; t_len])
    }

    /// Replaces the variance path by `exp(log_variance)` and remembers the log path.
    pub fn with_log_variance(mut self, log_variance: Vec<T>) -> Result<Self> {
        if log_variance.len() != self.len() {
            return Err(invalid("log-variance path length differs from parameter path"));
        }
        self.sigma2 = log_variance.iter().map(|h| h.exp()).collect();
        self.log_variance = Some(log_variance);
        Ok(self)
    }

    pub fn with_variance(mut self, sigma2: Vec<T>) -> Result<Self> {
        Self::check_shape(self.order, &self.phi, &sigma2)?;
        self.sigma2 = sigma2;
        self.log_variance = None;
        Ok(self)
    }

    pub fn len(&self) -> usize {
        self.sigma2.len()
    }

    pub fn is_empty(&self) -> bool {
        self.sigma2.is_empty()
    }

    pub fn order(&self) -> usize {
        self.order
    }

    /// Coefficients at 1-based time `t`.
    pub fn phi_at(&self, t: usize) -> &[T] {
        &self.phi[(t - 1) * self.order..t * self.order]
    }

    pub fn theta_at(&self, t: usize) -> &[T] {
        &self.theta[(t - 1) * self.order..t * self.order]
    }

    pub fn sigma2_at(&self, t: usize) -> T {
        self.sigma2[t - 1]
    }

    pub fn phi(&self) -> &[T] {
        &self.phi
    }

    pub fn theta(&self) -> &[T] {
        &self.theta
    }

    pub fn sigma2(&self) -> &[T] {
        &self.sigma2
    }

    pub fn log_variance(&self) -> Option<&[T]> {
        self.log_variance.as_deref()
    }
}

/// Gaussian random walk `h_t = h_{t-1} + zeta_t`, `zeta_t ~ N(0, sigma2_zeta)`, started at `h0`.
pub fn simulate_log_variance<T: Real, R: Rng + ?Sized>(h0: T, sigma2_zeta: T, t_len: usize, rng: &mut R) -> Vec<T>
where
    StandardNormal: Distribution<T>,
{
    let sd = sigma2_zeta.sqrt();
    let mut h = h0;
    (0..t_len)
        .map(|_| {
            let z: T = StandardNormal.sample(rng);
            h = h + sd * z;
            h
        })
        .collect()
}

/// Simulates `x_t = sum_j phi_{jt} x_{t-j} + e_t`, `e_t ~ N(0, sigma2_t)`.
///
/// `burn_in` steps at the `t = 1` parameters, started from zeros, precede the
/// path and are discarded.
pub fn simulate_tvar<T: Real, R: Rng + ?Sized>(path: &TvarPath<T>, rng: &mut R, burn_in: usize) -> Result<TimeSeries<T>>
where
    StandardNormal: Distribution<T>,
{
    let p = path.order();
    for t in 1..=path.len() {
        if !is_stable(path.phi_at(t)) {
            return Err(domain(format!("AR coefficients at time {t} are not stable")));
        }
    }
    let total = burn_in + path.len();
    let mut x: Vec<T> = Vec::with_capacity(total);
    for i in 0..total {
        let t = if i < burn_in { 1 } else { i - burn_in + 1 };
        let phi = path.phi_at(t);
        let mut mean = T::zero();
        for j in 0..p.min(i) {
            mean = mean + phi[j] * x[i - 1 - j];
        }
        let z: T = StandardNormal.sample(rng);
        x.push(mean + path.sigma2_at(t).sqrt() * z);
    }
    TimeSeries::new(x.split_off(burn_in))
}

/// Experiment 1: `phi_1t = -1.8 cos(1.5 - cos(4 pi u))`, `u = (t-1)/(T-1)`, `phi_2t = -0.9`.
pub fn dgp_experiment1<T: Real>(t_len: usize) -> Result<TvarPath<T>> {
    if t_len < 2 {
        return Err(invalid("experiment 1 needs T >= 2"));
    }
    let denom = T::from_usize_lossy(t_len - 1);
    let four_pi = T::lit(4.0) * T::PI();
    let phi = (1..=t_len)
        .flat_map(|t| {
            let u = T::from_usize_lossy(t - 1) / denom;
            [T::lit(-1.8) * (T::lit(1.5) - (four_pi * u).cos()).cos(), T::lit(-0.9)]
        })
        .collect();
    TvarPath::from_phi(2, phi, vec![T::one(); t_len])
}

/// Experiment 2: constant AR(3) `(1.4, -0.7, 0.2)`.
pub fn dgp_experiment2<T: Real>(t_len: usize) -> Result<TvarPath<T>> {
    TvarPath::constant(&[T::lit(1.4), T::lit(-0.7), T::lit(0.2)], T::one(), t_len)
}

pub const EXPERIMENT3_LEN: usize = 1500;

/// Experiment 3: three-piece linear `theta` paths (500 points each) mapped to
/// the stability region.
///
/// The formulas are defined for `T = 1500`. With `rescale` the time axis of
/// any other `T` is stretched onto `1..=1500`; without it other lengths are
/// rejected.
pub fn dgp_experiment3<T: Real>(t_len: usize, rescale: bool) -> Result<TvarPath<T>> {
    if t_len != EXPERIMENT3_LEN && !rescale {
        return Err(invalid(format!(
            "experiment 3 is defined for T = {EXPERIMENT3_LEN}; got {t_len} (enable rescaling to stretch the time axis)"
        )));
    }
    if t_len < 2 {
        return Err(invalid("experiment 3 needs T >= 2"));
    }
    let l = T::lit;
    let theta = (1..=t_len)
        .flat_map(|t| {
            let u = if t_len == EXPERIMENT3_LEN {
                T::from_usize_lossy(t)
            } else {
                T::one() + T::from_usize_lossy(t - 1) * l(1499.0) / T::from_usize_lossy(t_len - 1)
            };
            if u < l(501.0) {
                [l(1.5) - l(4.0) * (u - l(1.0)) / l(500.0), l(1.0) - l(2.0) * (u - l(1.0)) / l(500.0)]
            } else if u < l(1001.0) {
                [l(-2.5) + l(4.5) * (u - l(501.0)) / l(500.0), l(-1.0) + (u - l(501.0)) / l(500.0)]
            } else {
                [l(2.0) - l(4.0) * (u - l(1001.0)) / l(500.0), l(-0.5) * (u - l(1001.0)) / l(500.0)]
            }
        })
        .collect();
    TvarPath::from_theta(2, theta, vec![T::one(); t_len])
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn experiment1_values() {
        let path = dgp_experiment1::<f64>(1500).unwrap();
        assert!((path.phi_at(1)[0] - (-1.8 * 0.5_f64.cos())).abs() < 1e-12);
        assert!((path.phi_at(1)[0] + 1.579649).abs() < 1e-6);
        assert!((1..=1500).all(|t| path.phi_at(t)[1] == -0.9));
    }

    #[test]
    fn experiment2_constant_and_stable() {
        let path = dgp_experiment2::<f64>(50).unwrap();
        assert!((1..=50).all(|t| path.phi_at(t) == [1.4, -0.7, 0.2]));
        let r = phi_to_r(&[1.4_f64, -0.7, 0.2]).unwrap();
        assert!(r.iter().all(|v| v.abs() < 1.0));
    }

    #[test]
    fn experiment3_values() {
        let path = dgp_experiment3::<f64>(1500, false).unwrap();
        assert_eq!(path.theta_at(1), &[1.5, 1.0]);
        let r = theta_to_r(path.theta_at(1));
        assert!((r[0] - 0.83205).abs() < 1e-5 && (r[1] - 0.70711).abs() < 1e-5);
        assert_eq!(path.theta_at(501), &[-2.5, -1.0]);
        assert_eq!(path.theta_at(1001), &[2.0, 0.0]);
        assert!(dgp_experiment3::<f64>(500, false).is_err());
        let scaled = dgp_experiment3::<f64>(500, true).unwrap();
        assert_eq!(scaled.theta_at(1), &[1.5, 1.0]);
        assert!((scaled.theta_at(500)[0] - (2.0 - 4.0 * 499.0 / 500.0)).abs() < 1e-12);
    }

    #[test]
    fn simulate_is_deterministic() {
        let path = dgp_experiment1::<f64>(300).unwrap();
        let a = simulate_tvar(&path, &mut ChaCha8Rng::seed_from_u64(9), DEFAULT_BURN_IN).unwrap();
        let b = simulate_tvar(&path, &mut ChaCha8Rng::seed_from_u64(9), DEFAULT_BURN_IN).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.len(), 300);
    }

    #[test]
    fn unstable_path_rejected() {
        assert!(TvarPath::constant(&[1.2_f64], 1.0, 10).is_err());
        assert!(TvarPath::constant(&[0.2_f64], 0.0, 10).is_err());
    }

    #[test]
    fn white_noise_lag1_acf() {
        let t_len = 4000;
        let path = TvarPath::constant(&[0.0_f64], 1.0, t_len).unwrap();
        let x = simulate_tvar(&path, &mut ChaCha8Rng::seed_from_u64(3), 0).unwrap();
        let v = x.values();
        let c0: f64 = v.iter().map(|a| a * a).sum();
        let c1: f64 = v.windows(2).map(|w| w[0] * w[1]).sum();
        assert!((c1 / c0).abs() < 3.0 / (t_len as f64).sqrt());
    }

    #[test]
    fn ar1_stationary_variance() {
        let path = TvarPath::constant(&[0.8_f64], 1.0, 20_000).unwrap();
        let x = simulate_tvar(&path, &mut ChaCha8Rng::seed_from_u64(5), DEFAULT_BURN_IN).unwrap();
        let var = x.values().iter().map(|a| a * a).sum::<f64>() / 20_000.0;
        let target: f64 = 1.0 / (1.0 - 0.64);
        // Var of the sample variance for AR(1): 2 gamma0^2 (1+phi^2)/(1-phi^2) / n
        let se = (2.0 * target * target * (1.0 + 0.64) / (1.0 - 0.64) / 20_000.0).sqrt();
        assert!((var - target).abs() < 3.0 * se, "{var} vs {target} (se {se})");
    }

    #[test]
    fn log_variance_path() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let h = simulate_log_variance(0.5_f64, 0.0, 5, &mut rng);
        assert_eq!(h, vec![0.5; 5]);
        let path = TvarPath::constant(&[0.1_f64], 1.0, 5).unwrap().with_log_variance(h).unwrap();
        assert!((path.sigma2_at(3) - 0.5_f64.exp()).abs() < 1e-15);
    }
}
