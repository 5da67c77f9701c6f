//! Fourier primitives: Fourier grids, the DFT, periodograms, AR spectral
//! densities, the stationary Whittle likelihood, the exact AR(1) likelihood
//! and grid posteriors.
//!
//! The DFT convention is `J(w) = sum_{t=1}^{T} x_t exp(-i w t)`: time starts
//! at one. FFT output (indexed from zero) is multiplied by `exp(-i w)` to
//! match. The modulus is unaffected, the phase matters for the predictive
//! DFT in [`crate::modify`].

use num_complex::Complex;
use rustfft::FftPlanner;

use crate::error::{domain, invalid, Error, Result};
use crate::scalar::Real;
use crate::tvar::stability::is_stable;

/// Observed series, zero mean by convention, unit spacing.
#[derive(Debug, Clone, PartialEq)]
pub struct TimeSeries<T> {
    values: Vec<T>,
}

impl<T: Real> TimeSeries<T> {
    pub fn new(values: Vec<T>) -> Result<Self> {
        if values.len() < 2 {
            return Err(invalid(format!("series needs T >= 2, got {}", values.len())));
        }
        if let Some(i) = values.iter().position(|v| !v.is_finite()) {
            return Err(invalid(format!("non-finite value at index {}", i + 1)));
        }
        Ok(Self { values })
    }

    pub fn values(&self) -> &[T] {
        &self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn mean(&self) -> T {
        self.values.iter().copied().sum::<T>() / T::from_usize_lossy(self.len())
    }

    /// Subtracts the sample mean; returns the centered series and the mean removed.
    pub fn centered(&self) -> (Self, T) {
        let mu = self.mean();
        let values = self.values.iter().map(|&v| v - mu).collect();
        (Self { values }, mu)
    }

    pub fn first_difference(&self) -> Result<Self> {
        Self::new(self.values.windows(2).map(|w| w[1] - w[0]).collect())
    }
}

/// Fourier frequencies `2 pi k / origin` for a set of integer `k`.
#[derive(Debug, Clone, PartialEq)]
pub struct FourierGrid {
    origin: usize,
    indices: Vec<usize>,
}

impl FourierGrid {
    /// Builds a grid from explicit indices; each must satisfy `0 < 2 pi k / origin <= pi`.
    pub fn from_indices(origin: usize, indices: Vec<usize>) -> Result<Self> {
        if origin < 1 {
            return Err(invalid("grid origin must be positive"));
        }
        if indices.windows(2).any(|w| w[0] >= w[1]) {
            return Err(invalid("grid indices must be strictly increasing"));
        }
        if indices.iter().any(|&k| k == 0 || 2 * k > origin) {
            return Err(invalid(format!("grid indices must lie in 1..={} for origin {origin}", origin / 2)));
        }
        Ok(Self { origin, indices })
    }

    pub fn origin(&self) -> usize {
        self.origin
    }

    pub fn indices(&self) -> &[usize] {
        &self.indices
    }

    pub fn len(&self) -> usize {
        self.indices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.indices.is_empty()
    }

    pub fn omega<T: Real>(&self, i: usize) -> T {
        T::two_pi() * T::from_usize_lossy(self.indices[i]) / T::from_usize_lossy(self.origin)
    }

    pub fn frequencies<T: Real>(&self) -> Vec<T> {
        (0..self.len()).map(|i| self.omega(i)).collect()
    }

    /// True when the grid contains the Nyquist frequency `pi`.
    pub fn has_nyquist(&self) -> bool {
        self.indices.last().is_some_and(|&k| 2 * k == self.origin)
    }
}

/// `w_k = 2 pi k / T` for `k = 1..ceil(T/2)-1`, plus `pi` for even `T` when
/// `include_boundary` is set. Zero is never included.
pub fn fourier_frequencies(t_len: usize, include_boundary: bool) -> Result<FourierGrid> {
    if t_len < 2 {
        return Err(invalid(format!("Fourier grid needs T >= 2, got {t_len}")));
    }
    let last_interior = t_len.div_ceil(2) - 1;
    let mut indices: Vec<usize> = (1..=last_interior).collect();
    if include_boundary && t_len % 2 == 0 {
        indices.push(t_len / 2);
    }
    FourierGrid::from_indices(t_len, indices)
}

/// Direct evaluation of `sum_{t=1}^T x_t exp(-i w t)`.
pub fn dft<T: Real>(x: &[T], omega: T) -> Complex<T> {
    // rotate by a fixed step rather than calling sin/cos per term
    let step = Complex::from_polar(T::one(), -omega);
    let mut phase = step;
    let mut acc = Complex::new(T::zero(), T::zero());
    for &v in x {
        acc = acc + phase * v;
        phase = phase * step;
    }
    acc
}

/// Exact per-term evaluation; slower than [`dft`] but free of rotation drift.
pub fn dft_naive<T: Real>(x: &[T], omega: T) -> Complex<T> {
    x.iter()
        .enumerate()
        .map(|(i, &v)| Complex::from_polar(v, -omega * T::from_usize_lossy(i + 1)))
        .fold(Complex::new(T::zero(), T::zero()), |a, b| a + b)
}

/// DFT at every grid frequency.
///
/// When the grid is built on `x.len()` this uses one FFT (`O(T log T)`);
/// otherwise each frequency is evaluated directly.
pub fn dft_grid<T: Real>(x: &[T], grid: &FourierGrid) -> Vec<Complex<T>> {
    if grid.origin() != x.len() {
        return (0..grid.len()).map(|i| dft_naive(x, grid.omega(i))).collect();
    }
    let n = x.len();
    let mut buf: Vec<Complex<T>> = x.iter().map(|&v| Complex::new(v, T::zero())).collect();
    let mut planner = FftPlanner::<T>::new();
    planner.plan_fft_forward(n).process(&mut buf);
    grid.indices()
        .iter()
        .enumerate()
        .map(|(i, &k)| buf[k] * Complex::from_polar(T::one(), -grid.omega::<T>(i)))
        .collect()
}

#[derive(Debug, Clone, PartialEq)]
pub struct Periodogram<T> {
    pub grid: FourierGrid,
    pub ordinates: Vec<T>,
}

impl<T: Real> Periodogram<T> {
    pub fn frequencies(&self) -> Vec<T> {
        self.grid.frequencies()
    }
}

/// `I(w_k) = |J(w_k)|^2 / (2 pi T)`.
pub fn periodogram<T: Real>(x: &TimeSeries<T>, grid: &FourierGrid) -> Result<Periodogram<T>> {
    if grid.origin() != x.len() {
        return Err(invalid(format!("grid built for T={} but series has length {}", grid.origin(), x.len())));
    }
    let norm = T::two_pi() * T::from_usize_lossy(x.len());
    let ordinates = dft_grid(x.values(), grid).into_iter().map(|j| j.norm_sqr() / norm).collect();
    Ok(Periodogram { grid: grid.clone(), ordinates })
}

/// Stable AR(p) model with innovation variance.
#[derive(Debug, Clone, PartialEq)]
pub struct ArSpec<T> {
    phi: Vec<T>,
    sigma2: T,
}

impl<T: Real> ArSpec<T> {
    pub fn new(phi: Vec<T>, sigma2: T) -> Result<Self> {
        if !(sigma2 > T::zero()) || !sigma2.is_finite() {
            return Err(domain(format!("innovation variance must be positive, got {sigma2}")));
        }
        if !is_stable(&phi) {
            return Err(domain(format!("AR coefficients {phi:?} are not stable")));
        }
        Ok(Self { phi, sigma2 })
    }

    pub fn phi(&self) -> &[T] {
        &self.phi
    }

    pub fn sigma2(&self) -> T {
        self.sigma2
    }

    pub fn order(&self) -> usize {
        self.phi.len()
    }

    pub fn spectral_density(&self, omega: T) -> T {
        ar_density_unchecked(&self.phi, self.sigma2, omega)
    }
}

/// Lag polynomial `1 - sum_j phi_j exp(-i w j)`.
pub fn transfer_function<T: Real>(phi: &[T], omega: T) -> Complex<T> {
    let mut acc = Complex::new(T::one(), T::zero());
    for (j, &p) in phi.iter().enumerate() {
        acc = acc - Complex::from_polar(p, -omega * T::from_usize_lossy(j + 1));
    }
    acc
}

/// `|1 - sum_j phi_j exp(-i w j)|^2`.
#[inline]
pub fn squared_gain<T: Real>(phi: &[T], omega: T) -> T {
    transfer_function(phi, omega).norm_sqr()
}

#[inline]
pub(crate) fn ar_density_unchecked<T: Real>(phi: &[T], sigma2: T, omega: T) -> T {
    sigma2 / (T::two_pi() * squared_gain(phi, omega))
}

/// `f(w) = sigma2 / (2 pi) |1 - sum_j phi_j exp(-i w j)|^{-2}`.
pub fn ar_spectral_density<T: Real>(spec: &ArSpec<T>, omega: T) -> T {
    spec.spectral_density(omega)
}

fn check_density<T: Real>(fk: T, k: usize) -> Result<T> {
    if fk > T::zero() && fk.is_finite() {
        Ok(fk)
    } else {
        Err(domain(format!("spectral density {fk} not positive at grid point {k}")))
    }
}

/// `-1/2 sum_k [log f(w_k) + I(w_k) / f(w_k)]` over the grid as given.
pub fn whittle_loglik<T: Real>(pg: &Periodogram<T>, f: impl Fn(T) -> T) -> Result<T> {
    let half = T::lit(0.5);
    let mut acc = T::zero();
    for (k, &ik) in pg.ordinates.iter().enumerate() {
        let fk = check_density(f(pg.grid.omega(k)), k)?;
        acc = acc - half * (fk.ln() + ik / fk);
    }
    Ok(acc)
}

/// Whittle log-likelihood summed over the symmetric Fourier set `{+-w_k}`.
///
/// Each interior frequency contributes twice, once for `w` and once for
/// `-w`; a Nyquist point in the grid contributes once. This is the
/// normalisation under which the Whittle and exact Gaussian log-likelihoods
/// are on the same scale.
pub fn whittle_loglik_symmetric<T: Real>(pg: &Periodogram<T>, f: impl Fn(T) -> T) -> Result<T> {
    let half = T::lit(0.5);
    let mut acc = T::zero();
    let last = pg.ordinates.len().saturating_sub(1);
    for (k, &ik) in pg.ordinates.iter().enumerate() {
        let fk = check_density(f(pg.grid.omega(k)), k)?;
        let mult = if k == last && pg.grid.has_nyquist() { half } else { T::one() };
        acc = acc - mult * (fk.ln() + ik / fk);
    }
    Ok(acc)
}

#[inline]
fn normal_logpdf<T: Real>(x: T, mean: T, var: T) -> T {
    let d = x - mean;
    -T::lit(0.5) * ((T::two_pi() * var).ln() + d * d / var)
}

/// Exact Gaussian AR(1) log-likelihood with `x_1` drawn from the stationary distribution.
pub fn exact_ar1_loglik<T: Real>(x: &TimeSeries<T>, phi: T, sigma2: T) -> Result<T> {
    if !(phi.abs() < T::one()) {
        return Err(domain(format!("AR(1) coefficient {phi} must lie in (-1, 1)")));
    }
    if !(sigma2 > T::zero()) {
        return Err(domain(format!("innovation variance must be positive, got {sigma2}")));
    }
    let v = x.values();
    let mut ll = normal_logpdf(v[0], T::zero(), sigma2 / (T::one() - phi * phi));
    for w in v.windows(2) {
        ll = ll + normal_logpdf(w[1], phi * w[0], sigma2);
    }
    Ok(ll)
}

/// Probabilities of the seven posterior quantiles used throughout.
pub const QUANTILE_PROBS: [f64; 7] = [0.025, 0.10, 0.25, 0.50, 0.75, 0.90, 0.975];

/// Default number of equispaced points on `[-0.999, 0.999]`.
pub const DEFAULT_GRID_POINTS: usize = 1999;

pub fn default_phi_grid<T: Real>(points: usize) -> Vec<T> {
    let lo = T::lit(-0.999);
    let hi = T::lit(0.999);
    if points == 1 {
        return vec![T::zero()];
    }
    let step = (hi - lo) / T::from_usize_lossy(points - 1);
    (0..points).map(|i| lo + step * T::from_usize_lossy(i)).collect()
}

/// Normalised posterior over a parameter grid under a uniform prior.
#[derive(Debug, Clone, PartialEq)]
pub struct GridPosterior<T> {
    pub grid: Vec<T>,
    pub weights: Vec<T>,
    pub loglik: Vec<T>,
}

impl<T: Real> GridPosterior<T> {
    /// Grid point with the largest log-likelihood.
    pub fn mode(&self) -> T {
        let mut best = 0;
        for (i, &l) in self.loglik.iter().enumerate() {
            if l > self.loglik[best] {
                best = i;
            }
        }
        self.grid[best]
    }

    /// Quantile by linear interpolation of the cumulative grid distribution.
    pub fn quantile(&self, prob: T) -> T {
        let mut cum = T::zero();
        let mut prev_cum = T::zero();
        for (i, &w) in self.weights.iter().enumerate() {
            cum = cum + w;
            if cum >= prob {
                if i == 0 || cum <= prev_cum {
                    return self.grid[i];
                }
                let frac = (prob - prev_cum) / (cum - prev_cum);
                return self.grid[i - 1] + frac * (self.grid[i] - self.grid[i - 1]);
            }
            prev_cum = cum;
        }
        *self.grid.last().expect("non-empty grid")
    }

    pub fn quantiles(&self, probs: &[f64]) -> Vec<T> {
        probs.iter().map(|&p| self.quantile(T::lit(p))).collect()
    }

    pub fn default_quantiles(&self) -> Vec<T> {
        self.quantiles(&QUANTILE_PROBS)
    }
}

pub fn grid_posterior<T: Real>(
    x: &TimeSeries<T>,
    grid_phi: &[T],
    loglik: impl Fn(&TimeSeries<T>, T) -> Result<T>,
) -> Result<GridPosterior<T>> {
    if grid_phi.is_empty() {
        return Err(invalid("empty parameter grid"));
    }
    let lls: Vec<T> = grid_phi
        .iter()
        .map(|&phi| loglik(x, phi).map(|l| if l.is_nan() { T::neg_infinity() } else { l }))
        .collect::<Result<_>>()?;
    let max = lls.iter().copied().fold(T::neg_infinity(), T::max);
    if !max.is_finite() {
        return Err(Error::DegeneratePosterior("every grid point has zero likelihood".into()));
    }
    let raw: Vec<T> = lls.iter().map(|&l| (l - max).exp()).collect();
    let total: T = raw.iter().copied().sum();
    let weights = raw.into_iter().map(|w| w / total).collect();
    Ok(GridPosterior { grid: grid_phi.to_vec(), weights, loglik: lls })
}
