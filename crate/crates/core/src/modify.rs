//! Bias-reduction modifications of segment periodograms.
//!
//! * Hanning tapering, optionally followed by rescaling the tapered segment
//!   to the raw segment's empirical variance.
//! * Prewhitening with an AR filter fitted by Burg's method (order by
//!   Hannan-Quinn), undone through the filter's squared gain.
//! * Boundary correction: the complete DFT adds the Fourier transform of the
//!   best linear predictions beyond both ends of the segment, and the complete
//!   periodogram `Re[J_complete conj(J)] / (2 pi N)` is unbiased for `f`.
//!
//! The predictive DFT uses the same convention as [`crate::spectral::dft`]:
//! `sum_tau Xhat_tau exp(-i w tau)` with no extra normalisation, so it can be
//! added to the standard DFT directly.

use std::fmt;
use std::str::FromStr;

use num_complex::Complex;

use crate::error::{domain, invalid, Error, Result};
use crate::localper::segment_periodogram;
use crate::scalar::Real;
use crate::spectral::{dft, dft_grid, squared_gain, FourierGrid};
use crate::tvar::stability::is_stable;

/// Taper weights `h(s/N)`, `s = 1..N`, with `H_N = sum_{j=0}^{N-1} h^2(j/N)`.
#[derive(Debug, Clone, PartialEq)]
pub struct TaperWindow<T> {
    weights: Vec<T>,
    normalizer: T,
    pub rescale: bool,
}

impl<T: Real> TaperWindow<T> {
    pub fn new(weights: Vec<T>, normalizer: T, rescale: bool) -> Result<Self> {
        if weights.is_empty() {
            return Err(invalid("empty taper"));
        }
        if weights.iter().any(|w| !(*w >= T::zero() && *w <= T::one())) {
            return Err(invalid("taper weights must lie in [0, 1]"));
        }
        if !(normalizer > T::zero()) {
            return Err(invalid("taper normaliser must be positive"));
        }
        Ok(Self { weights, normalizer, rescale })
    }

    /// `h = 1`, `H_N = N`: reproduces the untapered periodogram.
    pub fn identity(n: usize) -> Self {
        Self { weights: vec![T::one(); n], normalizer: T::from_usize_lossy(n), rescale: false }
    }

    pub fn weights(&self) -> &[T] {
        &self.weights
    }

    pub fn normalizer(&self) -> T {
        self.normalizer
    }

    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }

    pub fn weight_sum(&self) -> T {
        self.weights.iter().copied().sum()
    }

    pub fn apply(&self, segment: &[T]) -> Vec<T> {
        segment.iter().zip(&self.weights).map(|(&x, &h)| x * h).collect()
    }
}

/// Hanning taper `h(u) = (1 - cos(2 pi u)) / 2` sampled at `u = s/N`.
pub fn hanning_window<T: Real>(n: usize) -> Result<TaperWindow<T>> {
    if n < 2 {
        return Err(invalid(format!("Hanning window needs N >= 2, got {n}")));
    }
    let nn = T::from_usize_lossy(n);
    let h = |u: T| T::lit(0.5) * (T::one() - (T::two_pi() * u).cos());
    let weights: Vec<T> = (1..=n).map(|s| h(T::from_usize_lossy(s) / nn)).collect();
    let normalizer = (0..n).map(|j| h(T::from_usize_lossy(j) / nn).powi(2)).sum();
    Ok(TaperWindow { weights, normalizer, rescale: false })
}

#[derive(Debug, Clone, PartialEq)]
pub struct RescaledSegment<T> {
    pub values: Vec<T>,
    pub factor: T,
    /// Set when either variance is zero; `values` is then the tapered input unchanged.
    pub degenerate: bool,
}

fn empirical_sd<T: Real>(x: &[T]) -> T {
    let n = T::from_usize_lossy(x.len());
    let mean = x.iter().copied().sum::<T>() / n;
    (x.iter().map(|&v| (v - mean) * (v - mean)).sum::<T>() / n).sqrt()
}

/// Scales `tapered` so its empirical standard deviation equals that of `raw`.
pub fn rescale_tapered_segment<T: Real>(raw: &[T], tapered: &[T]) -> RescaledSegment<T> {
    let sd_raw = empirical_sd(raw);
    let sd_tap = empirical_sd(tapered);
    if !(sd_raw > T::zero()) || !(sd_tap > T::zero()) {
        return RescaledSegment { values: tapered.to_vec(), factor: T::one(), degenerate: true };
    }
    let factor = sd_raw / sd_tap;
    RescaledSegment { values: tapered.iter().map(|&v| v * factor).collect(), factor, degenerate: false }
}

/// AR fit `x_t = sum_j phi_j x_{t-j} + e_t` with residual variance estimate.
#[derive(Debug, Clone, PartialEq)]
pub struct FittedAr<T> {
    pub phi: Vec<T>,
    pub sigma2: T,
}

impl<T: Real> FittedAr<T> {
    pub fn order(&self) -> usize {
        self.phi.len()
    }

    pub fn white_noise(sigma2: T) -> Self {
        Self { phi: Vec::new(), sigma2 }
    }
}

/// Burg fits of every order `0..=max_order`.
///
/// The order-0 variance is the sample mean square (zero-mean convention);
/// each stage multiplies it by `1 - k^2`.
pub fn burg<T: Real>(x: &[T], max_order: usize) -> Vec<FittedAr<T>> {
    let n = x.len();
    let mut f = x.to_vec();
    let mut b = x.to_vec();
    let mut phi: Vec<T> = Vec::with_capacity(max_order);
    let mut err = x.iter().map(|&v| v * v).sum::<T>() / T::from_usize_lossy(n.max(1));
    let mut fits = vec![FittedAr { phi: Vec::new(), sigma2: err }];
    let k_max = T::one() - T::epsilon();
    for m in 1..=max_order.min(n.saturating_sub(1)) {
        let mut num = T::zero();
        let mut den = T::zero();
        for t in m..n {
            num = num + f[t] * b[t - 1];
            den = den + f[t] * f[t] + b[t - 1] * b[t - 1];
        }
        let k = if den > T::zero() { (T::lit(2.0) * num / den).max(-k_max).min(k_max) } else { T::zero() };
        for t in (m..n).rev() {
            let ft = f[t];
            let bt = b[t - 1];
            f[t] = ft - k * bt;
            b[t] = bt - k * ft;
        }
        let prev = phi.clone();
        for j in 0..prev.len() {
            phi[j] = prev[j] - k * prev[m - 2 - j];
        }
        phi.push(k);
        err = err * (T::one() - k * k);
        fits.push(FittedAr { phi: phi.clone(), sigma2: err });
    }
    fits
}

/// Hannan-Quinn criterion `log(sigma2) + 2 p log(log n) / n`.
pub fn hannan_quinn<T: Real>(sigma2: T, order: usize, n: usize) -> T {
    let nn = T::from_usize_lossy(n);
    sigma2.ln() + T::lit(2.0) * T::from_usize_lossy(order) * nn.ln().ln() / nn
}

/// Burg fit with the order in `0..=p_max` minimising Hannan-Quinn.
pub fn fit_ar_hq<T: Real>(segment: &[T], p_max: usize) -> Result<FittedAr<T>> {
    let n = segment.len();
    if n <= p_max + 1 {
        return Err(invalid(format!("segment of length {n} too short for p_max = {p_max}")));
    }
    let fits = burg(segment, p_max);
    if !(fits[0].sigma2 > T::zero()) {
        return Ok(fits.into_iter().next().expect("order 0 fit"));
    }
    let mut best = 0;
    let mut best_hq = T::infinity();
    for (p, fit) in fits.iter().enumerate() {
        if !(fit.sigma2 > T::zero()) {
            break;
        }
        let hq = hannan_quinn(fit.sigma2, p, n);
        if hq < best_hq {
            best_hq = hq;
            best = p;
        }
    }
    Ok(fits.into_iter().nth(best).expect("selected order exists"))
}

fn check_filter<T: Real>(fitted: &FittedAr<T>) -> Result<()> {
    if is_stable(&fitted.phi) {
        Ok(())
    } else {
        Err(domain(format!("AR filter {:?} is not stable", fitted.phi)))
    }
}

/// Residuals `e_t = x_t - sum_j phi_j x_{t-j}` for `t = p+1..N`.
pub fn ar_residuals<T: Real>(x: &[T], phi: &[T]) -> Vec<T> {
    let p = phi.len();
    (p..x.len()).map(|t| x[t] - phi.iter().enumerate().map(|(j, &c)| c * x[t - 1 - j]).sum::<T>()).collect()
}

/// Prewhitened periodogram `|phi(e^{-iw})|^{-2} I_e(w)` where `I_e` is the
/// periodogram of the `N - p` residuals (normaliser `2 pi (N - p)`) evaluated
/// on the segment's grid.
pub fn prewhiten_periodogram<T: Real>(segment: &[T], fitted: &FittedAr<T>, grid: &FourierGrid) -> Result<Vec<T>> {
    check_filter(fitted)?;
    if segment.len() <= fitted.order() {
        return Err(invalid("segment shorter than the filter order"));
    }
    let resid = ar_residuals(segment, &fitted.phi);
    let norm = T::two_pi() * T::from_usize_lossy(resid.len());
    Ok((0..grid.len())
        .map(|i| {
            let w: T = grid.omega(i);
            dft(&resid, w).norm_sqr() / norm / squared_gain(&fitted.phi, w)
        })
        .collect())
}

/// Relative size below which predictions beyond the boundary are dropped.
pub const PREDICTION_TOL: f64 = 1e-12;
const MAX_PREDICTIONS: usize = 1_000_000;

/// Best linear predictions beyond both ends under the AR model:
/// `left[s] = Xhat_{-s}` (`s >= 0`) and `right[s] = Xhat_{N+1+s}`.
///
/// Both sequences obey the AR recursion and decay geometrically; they stop
/// once `p` consecutive predictions fall below `PREDICTION_TOL * max|x|`.
pub fn boundary_predictions<T: Real>(x: &[T], phi: &[T]) -> (Vec<T>, Vec<T>) {
    let p = phi.len();
    let scale = x.iter().map(|v| v.abs()).fold(T::zero(), T::max);
    if p == 0 || scale == T::zero() {
        return (Vec::new(), Vec::new());
    }
    let tol = T::lit(PREDICTION_TOL) * scale;
    let extend = |seed: Vec<T>| -> Vec<T> {
        // seed is ordered from the boundary outward: seed[0] is nearest the new value
        let mut hist: Vec<T> = seed;
        let mut out = Vec::new();
        let mut small_run = 0;
        while out.len() < MAX_PREDICTIONS {
            let next: T = phi.iter().zip(&hist).map(|(&c, &v)| c * v).sum();
            out.push(next);
            hist.rotate_right(1);
            hist[0] = next;
            small_run = if next.abs() < tol { small_run + 1 } else { 0 };
            if small_run >= p {
                break;
            }
        }
        out
    };
    // left: Xhat_0 = sum_j phi_j X_j, needs X_1..X_p (X_1 nearest)
    let left = extend(x.iter().take(p).copied().collect());
    // right: Xhat_{N+1} = sum_j phi_j X_{N+1-j}, needs X_N, X_{N-1}, ...
    let right = extend(x.iter().rev().take(p).copied().collect());
    (left, right)
}

/// Standard, predictive and complete DFTs on a grid.
#[derive(Debug, Clone, PartialEq)]
pub struct CompleteDft<T> {
    pub standard: Vec<Complex<T>>,
    pub predictive: Vec<Complex<T>>,
    pub complete: Vec<Complex<T>>,
}

/// Predictive DFT `sum_{tau <= 0} Xhat_tau e^{-i w tau} + sum_{tau > N} Xhat_tau e^{-i w tau}`.
pub fn predictive_dft<T: Real>(x: &[T], fitted: &FittedAr<T>, grid: &FourierGrid) -> Result<Vec<Complex<T>>> {
    check_filter(fitted)?;
    if x.len() < fitted.order() {
        return Err(invalid("segment shorter than the filter order"));
    }
    let (left, right) = boundary_predictions(x, &fitted.phi);
    let n = x.len();
    Ok((0..grid.len())
        .map(|i| {
            let w: T = grid.omega(i);
            // left: sum_s left[s] e^{+i w s}
            let lsum = dft(&left, -w) * Complex::from_polar(T::one(), -w);
            // right: e^{-i w (N+1)} sum_s right[s] e^{-i w s}
            let rsum = dft(&right, w) * Complex::from_polar(T::one(), -w * T::from_usize_lossy(n));
            lsum + rsum
        })
        .collect())
}

pub fn complete_dft<T: Real>(x: &[T], fitted: &FittedAr<T>, grid: &FourierGrid) -> Result<CompleteDft<T>> {
    let standard = dft_grid(x, grid);
    let predictive = predictive_dft(x, fitted, grid)?;
    let complete = standard.iter().zip(&predictive).map(|(a, b)| a + b).collect();
    Ok(CompleteDft { standard, predictive, complete })
}

/// `Re[J_complete(w) conj(J(w))] / (2 pi N)`; negative values are kept.
pub fn complete_periodogram<T: Real>(x: &[T], fitted: &FittedAr<T>, grid: &FourierGrid) -> Result<Vec<T>> {
    let c = complete_dft(x, fitted, grid)?;
    let norm = T::two_pi() * T::from_usize_lossy(x.len());
    Ok(c.complete.iter().zip(&c.standard).map(|(a, b)| (a * b.conj()).re / norm).collect())
}

/// Tapered complete periodogram `Re[J_complete(w) conj(J_h(w))] / (2 pi sum_s h_s)`,
/// where `J_h` is the DFT of the tapered segment.
pub fn complete_periodogram_tapered<T: Real>(
    x: &[T],
    fitted: &FittedAr<T>,
    grid: &FourierGrid,
    window: &TaperWindow<T>,
) -> Result<Vec<T>> {
    if window.len() != x.len() {
        return Err(invalid("taper length differs from segment length"));
    }
    let complete = complete_dft(x, fitted, grid)?.complete;
    let tapered = dft_grid(&window.apply(x), grid);
    let norm = T::two_pi() * window.weight_sum();
    Ok(complete.iter().zip(&tapered).map(|(a, b)| (a * b.conj()).re / norm).collect())
}

/// Periodogram variant applied to every segment.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Modification {
    None,
    Taper,
    TaperRescaled,
    Prewhiten,
    BoundaryCorrect { with_taper: bool },
}

impl Modification {
    /// Short label: `none`, `ta`, `tar`, `pw`, `bc` (with taper), `bcnt` (no taper).
    pub fn label(&self) -> &'static str {
        match self {
            Self::None => "none",
            Self::Taper => "ta",
            Self::TaperRescaled => "tar",
            Self::Prewhiten => "pw",
            Self::BoundaryCorrect { with_taper: true } => "bc",
            Self::BoundaryCorrect { with_taper: false } => "bcnt",
        }
    }

    pub fn needs_filter(&self) -> bool {
        matches!(self, Self::Prewhiten | Self::BoundaryCorrect { .. })
    }
}

impl fmt::Display for Modification {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

impl FromStr for Modification {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "none" | "raw" => Ok(Self::None),
            "ta" | "taper" => Ok(Self::Taper),
            "tar" | "taper-rescaled" | "taper_rescaled" => Ok(Self::TaperRescaled),
            "pw" | "prewhiten" => Ok(Self::Prewhiten),
            "bc" | "boundary" => Ok(Self::BoundaryCorrect { with_taper: true }),
            "bcnt" | "bc-notaper" | "bc_notaper" => Ok(Self::BoundaryCorrect { with_taper: false }),
            other => Err(invalid(format!("unknown modification '{other}'"))),
        }
    }
}

/// Default maximum AR order of the per-segment filters.
pub const DEFAULT_P_MAX: usize = 10;

/// Segment ordinates under a modification. Filters are fitted on the segment itself.
pub fn apply_modification<T: Real>(
    scheme: Modification,
    segment: &[T],
    grid: &FourierGrid,
    p_max: usize,
) -> Result<Vec<T>> {
    let n = segment.len();
    match scheme {
        Modification::None => segment_periodogram(segment, grid, None),
        Modification::Taper => segment_periodogram(segment, grid, Some(&hanning_window(n)?)),
        Modification::TaperRescaled => {
            let window = hanning_window(n)?;
            let rescaled = rescale_tapered_segment(segment, &window.apply(segment));
            if rescaled.degenerate {
                segment_periodogram(segment, grid, Some(&window))
            } else {
                segment_periodogram(&rescaled.values, grid, None)
            }
        }
        Modification::Prewhiten => {
            let fit = fit_ar_hq(segment, p_max.min(n.saturating_sub(2)))?;
            prewhiten_periodogram(segment, &fit, grid)
        }
        Modification::BoundaryCorrect { with_taper } => {
            let fit = fit_ar_hq(segment, p_max.min(n.saturating_sub(2)))?;
            if with_taper {
                complete_periodogram_tapered(segment, &fit, grid, &hanning_window(n)?)
            } else {
                complete_periodogram(segment, &fit, grid)
            }
        }
    }
}
