//! Log-likelihoods used for inference: the conditional time-domain tvAR
//! likelihood, the stationary Whittle likelihood, the block Whittle and the
//! dynamic Whittle likelihoods.
//!
//! The frequency-domain likelihoods are written as the log-density of
//! independent exponential ordinates with means `f(w_k, t_j)`:
//!
//! ```text
//! sum_j sum_k -[ log f(w_k, t_j) + I(w_k, t_j) / f(w_k, t_j) ]
//! ```
//!
//! Global constants that only rescale the log-likelihood (Riemann weights,
//! `4 pi^2`) are not included.

use std::fmt;
use std::str::FromStr;

use crate::error::{domain, invalid, Error, Result};
use crate::localper::{
    moving_periodogram_with, segment_geometry, BlockPeriodogram, MovingPeriodogram, SegmentGeometry,
};
use crate::modify::{apply_modification, Modification, DEFAULT_P_MAX};
use crate::scalar::Real;
use crate::spectral::{ar_density_unchecked, fourier_frequencies, Periodogram, TimeSeries};
use crate::tvar::{is_stable, TvarPath};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Family {
    TimeDomain,
    WhittleStationary,
    BlockWhittle { seg_len: usize, step: usize },
    DynamicWhittle { m: usize },
}

impl Family {
    pub fn is_spectral(&self) -> bool {
        !matches!(self, Self::TimeDomain)
    }
}

impl fmt::Display for Family {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::TimeDomain => write!(f, "td"),
            Self::WhittleStationary => write!(f, "whittle"),
            Self::BlockWhittle { seg_len, step } => write!(f, "bw:{seg_len}:{step}"),
            Self::DynamicWhittle { m } => write!(f, "dw:{m}"),
        }
    }
}

impl FromStr for Family {
    type Err = Error;

    /// Accepts `td`, `whittle`, `bw:<N>:<S>` and `dw:<m>`.
    fn from_str(s: &str) -> Result<Self> {
        let parts: Vec<&str> = s.split(':').collect();
        let num = |v: &str| v.parse::<usize>().map_err(|_| invalid(format!("bad number '{v}' in family '{s}'")));
        match parts.as_slice() {
            ["td"] => Ok(Self::TimeDomain),
            ["whittle"] => Ok(Self::WhittleStationary),
            ["bw", n, step] => Ok(Self::BlockWhittle { seg_len: num(n)?, step: num(step)? }),
            ["dw", m] => Ok(Self::DynamicWhittle { m: num(m)? }),
            _ => Err(invalid(format!("unknown likelihood family '{s}'"))),
        }
    }
}

/// Likelihood family, periodogram modification and model order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct LikelihoodSpec {
    pub family: Family,
    pub modification: Modification,
    /// AR order `p` of the fitted model.
    pub order: usize,
    /// Log-variance follows a random walk as an extra state.
    pub sv: bool,
    /// Largest order considered by the per-segment AR filters.
    pub p_max: usize,
}

impl LikelihoodSpec {
    pub fn new(family: Family, modification: Modification, order: usize) -> Self {
        Self { family, modification, order, sv: false, p_max: DEFAULT_P_MAX }
    }

    pub fn with_sv(mut self, sv: bool) -> Self {
        self.sv = sv;
        self
    }

    /// Label such as `dw:15+ta` or `td`.
    pub fn label(&self) -> String {
        match (self.family, self.modification) {
            (Family::TimeDomain, _) | (_, Modification::None) => self.family.to_string(),
            (fam, m) => format!("{fam}+{m}"),
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.family == Family::TimeDomain && self.modification != Modification::None {
            return Err(invalid("periodogram modifications only apply to frequency-domain families"));
        }
        if let Family::DynamicWhittle { m } = self.family {
            if m == 0 {
                return Err(invalid("dynamic Whittle needs m >= 1"));
            }
        }
        Ok(())
    }
}

/// Data frozen before inference: the series itself or the (modified) periodogram data.
#[derive(Debug, Clone, PartialEq)]
pub enum PreparedData<T> {
    TimeDomain(TimeSeries<T>),
    Stationary(Periodogram<T>),
    Block(BlockPeriodogram<T>),
    Dynamic(MovingPeriodogram<T>),
}

impl<T: Real> PreparedData<T> {
    /// Number of latent parameter states the data informs.
    pub fn n_states(&self) -> usize {
        match self {
            Self::TimeDomain(x) => x.len(),
            Self::Stationary(_) => 1,
            Self::Block(b) => b.n_segments(),
            Self::Dynamic(d) => d.len(),
        }
    }

    /// 1-based time attached to each state.
    pub fn centers(&self) -> Vec<usize> {
        match self {
            Self::TimeDomain(x) => (1..=x.len()).collect(),
            Self::Stationary(p) => vec![p.grid.origin().div_ceil(2)],
            Self::Block(b) => b.geometry.centers.clone(),
            Self::Dynamic(d) => d.entries.iter().map(|e| e.t).collect(),
        }
    }

    pub fn series_len(&self) -> usize {
        match self {
            Self::TimeDomain(x) => x.len(),
            Self::Stationary(p) => p.grid.origin(),
            Self::Block(b) => b.geometry.t_len,
            Self::Dynamic(d) => d.t_len,
        }
    }

    /// Number of periodogram ordinates (0 for the time-domain family).
    pub fn n_ordinates(&self) -> usize {
        match self {
            Self::TimeDomain(_) => 0,
            Self::Stationary(p) => p.ordinates.len(),
            Self::Block(b) => b.n_segments() * b.n_freqs(),
            Self::Dynamic(d) => d.len(),
        }
    }
}

/// Computes the periodogram data (with filters fitted per segment) once.
pub fn prepare<T: Real>(x: &TimeSeries<T>, spec: &LikelihoodSpec) -> Result<PreparedData<T>> {
    spec.validate()?;
    let scheme = spec.modification;
    match spec.family {
        Family::TimeDomain => Ok(PreparedData::TimeDomain(x.clone())),
        Family::WhittleStationary => {
            let grid = fourier_frequencies(x.len(), false)?;
            let ordinates = apply_modification(scheme, x.values(), &grid, spec.p_max)?;
            Ok(PreparedData::Stationary(Periodogram { grid, ordinates }))
        }
        Family::BlockWhittle { seg_len, step } => {
            let geometry = segment_geometry(x.len(), seg_len, step)?;
            Ok(PreparedData::Block(block_data(x, &geometry, scheme, spec.p_max)?))
        }
        Family::DynamicWhittle { m } => Ok(PreparedData::Dynamic(moving_periodogram_with(x, m, |seg, grid| {
            apply_modification(scheme, seg, grid, spec.p_max)
        })?)),
    }
}

fn block_data<T: Real>(
    x: &TimeSeries<T>,
    geometry: &SegmentGeometry,
    scheme: Modification,
    p_max: usize,
) -> Result<BlockPeriodogram<T>> {
    let grid = fourier_frequencies(geometry.seg_len, false)?;
    let ordinates = (0..geometry.n_segments())
        .map(|j| apply_modification(scheme, geometry.segment(x.values(), j), &grid, p_max))
        .collect::<Result<_>>()?;
    Ok(BlockPeriodogram { geometry: geometry.clone(), grid, ordinates })
}

fn check_path<T: Real>(path: &TvarPath<T>, expected: usize) -> Result<()> {
    if path.len() != expected {
        return Err(invalid(format!("path has {} states, data needs {expected}", path.len())));
    }
    for t in 1..=path.len() {
        if !is_stable(path.phi_at(t)) {
            return Err(domain(format!("AR coefficients at state {t} are not stable")));
        }
    }
    Ok(())
}

/// `-[log f + I / f]` for one exponential ordinate.
#[inline]
fn exp_term<T: Real>(ordinate: T, f: T) -> T {
    -(f.ln() + ordinate / f)
}

/// Block Whittle log-likelihood; `path` holds one state per segment.
pub fn block_whittle_loglik<T: Real>(data: &BlockPeriodogram<T>, path: &TvarPath<T>) -> Result<T> {
    check_path(path, data.n_segments())?;
    let freqs: Vec<T> = data.grid.frequencies();
    let mut total = T::zero();
    for (j, row) in data.ordinates.iter().enumerate() {
        let phi = path.phi_at(j + 1);
        let s2 = path.sigma2_at(j + 1);
        total = total + row.iter().zip(&freqs).map(|(&i, &w)| exp_term(i, ar_density_unchecked(phi, s2, w))).sum::<T>();
    }
    Ok(total)
}

/// Dynamic Whittle log-likelihood; `path` holds one state per moving-periodogram entry.
pub fn dynamic_whittle_loglik<T: Real>(data: &MovingPeriodogram<T>, path: &TvarPath<T>) -> Result<T> {
    check_path(path, data.len())?;
    Ok(data
        .entries
        .iter()
        .enumerate()
        .map(|(i, e)| {
            exp_term(e.ordinate, ar_density_unchecked(path.phi_at(i + 1), path.sigma2_at(i + 1), data.omega(e)))
        })
        .sum())
}

/// Stationary Whittle log-likelihood in the exponential-model form.
pub fn stationary_whittle_loglik<T: Real>(data: &Periodogram<T>, phi: &[T], sigma2: T) -> Result<T> {
    if !is_stable(phi) || !(sigma2 > T::zero()) {
        return Err(domain("unstable coefficients or nonpositive variance"));
    }
    Ok(data
        .ordinates
        .iter()
        .enumerate()
        .map(|(k, &i)| exp_term(i, ar_density_unchecked(phi, sigma2, data.grid.omega(k))))
        .sum())
}

/// Conditional Gaussian log-likelihood `sum_{t=p+1}^T log N(x_t; sum_j phi_jt x_{t-j}, sigma2_t)`.
pub fn time_domain_tvar_loglik<T: Real>(x: &TimeSeries<T>, path: &TvarPath<T>) -> Result<T> {
    check_path(path, x.len())?;
    let p = path.order();
    let v = x.values();
    let half = T::lit(0.5);
    let mut total = T::zero();
    for t in p + 1..=v.len() {
        let phi = path.phi_at(t);
        let mean: T = (0..p).map(|j| phi[j] * v[t - 2 - j]).sum();
        let s2 = path.sigma2_at(t);
        let d = v[t - 1] - mean;
        total = total - half * ((T::two_pi() * s2).ln() + d * d / s2);
    }
    Ok(total)
}

/// Log-likelihood of a prepared data set along a path of matching length.
pub fn loglik<T: Real>(data: &PreparedData<T>, path: &TvarPath<T>) -> Result<T> {
    match data {
        PreparedData::TimeDomain(x) => time_domain_tvar_loglik(x, path),
        PreparedData::Stationary(pg) => {
            check_path(path, 1)?;
            stationary_whittle_loglik(pg, path.phi_at(1), path.sigma2_at(1))
        }
        PreparedData::Block(b) => block_whittle_loglik(b, path),
        PreparedData::Dynamic(d) => dynamic_whittle_loglik(d, path),
    }
}

/// Flattened exponential observations grouped by state, with the complex
/// exponentials `e^{-i w l}` (`l = 1..p`) precomputed.
///
/// This is the form evaluated inside the particle sampler.
#[derive(Debug, Clone)]
pub struct SpectralObservations<T> {
    order: usize,
    offsets: Vec<usize>,
    ordinates: Vec<T>,
    cos: Vec<T>,
    sin: Vec<T>,
}

impl<T: Real> SpectralObservations<T> {
    pub fn new(data: &PreparedData<T>, order: usize) -> Result<Self> {
        let mut groups: Vec<Vec<(T, T)>> = Vec::new();
        match data {
            PreparedData::TimeDomain(_) => {
                return Err(invalid("time-domain data has no spectral observations"));
            }
            PreparedData::Stationary(pg) => {
                groups.push((0..pg.ordinates.len()).map(|k| (pg.grid.omega(k), pg.ordinates[k])).collect());
            }
            PreparedData::Block(b) => {
                let freqs: Vec<T> = b.grid.frequencies();
                for row in &b.ordinates {
                    groups.push(freqs.iter().copied().zip(row.iter().copied()).collect());
                }
            }
            PreparedData::Dynamic(d) => {
                for e in &d.entries {
                    groups.push(vec![(d.omega(e), e.ordinate)]);
                }
            }
        }
        let mut offsets = vec![0];
        let mut ordinates = Vec::new();
        let mut cos = Vec::new();
        let mut sin = Vec::new();
        for g in &groups {
            for &(w, i) in g {
                ordinates.push(i);
                for l in 1..=order {
                    let a = w * T::from_usize_lossy(l);
                    cos.push(a.cos());
                    sin.push(a.sin());
                }
            }
            offsets.push(ordinates.len());
        }
        Ok(Self { order, offsets, ordinates, cos, sin })
    }

    pub fn n_steps(&self) -> usize {
        self.offsets.len() - 1
    }

    pub fn n_ordinates(&self) -> usize {
        self.ordinates.len()
    }

    pub fn order(&self) -> usize {
        self.order
    }

    #[inline]
    fn gain(&self, obs: usize, phi: &[T]) -> T {
        let p = self.order;
        let c = &self.cos[obs * p..(obs + 1) * p];
        let s = &self.sin[obs * p..(obs + 1) * p];
        let mut re = T::one();
        let mut im = T::zero();
        for l in 0..p {
            re = re - phi[l] * c[l];
            im = im + phi[l] * s[l];
        }
        re * re + im * im
    }

    /// Exponential log-density of the ordinates attached to `step`.
    #[inline]
    pub fn step_loglik(&self, step: usize, phi: &[T], sigma2: T) -> T {
        let ln_s2 = sigma2.ln();
        let ln_2pi = T::two_pi().ln();
        let mut acc = T::zero();
        for obs in self.offsets[step]..self.offsets[step + 1] {
            let g = self.gain(obs, phi);
            // log f = log s2 - log 2pi - log g
            acc = acc - (ln_s2 - ln_2pi - g.ln() + T::two_pi() * g * self.ordinates[obs] / sigma2);
        }
        acc
    }

    /// `(sum of 2 pi |phi(e^{-iw})|^2 I, count)` over the ordinates of `step`.
    pub fn step_whitened(&self, step: usize, phi: &[T]) -> (T, usize) {
        let range = self.offsets[step]..self.offsets[step + 1];
        let n = range.len();
        let s = range.map(|obs| T::two_pi() * self.gain(obs, phi) * self.ordinates[obs]).sum();
        (s, n)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::localper::block_periodogram;
    use crate::spectral::{exact_ar1_loglik, fourier_frequencies, periodogram, whittle_loglik};

    fn series(n: usize) -> TimeSeries<f64> {
        TimeSeries::new((0..n).map(|i| ((i * 37 % 23) as f64 - 11.0) / 5.0).collect()).unwrap()
    }

    #[test]
    fn family_parse_round_trip() {
        for f in [
            Family::TimeDomain,
            Family::WhittleStationary,
            Family::BlockWhittle { seg_len: 30, step: 15 },
            Family::DynamicWhittle { m: 15 },
        ] {
            assert_eq!(f.to_string().parse::<Family>().unwrap(), f);
        }
        assert!("bw:30".parse::<Family>().is_err());
    }

    #[test]
    fn prepare_shapes() {
        let x = series(1500);
        let td = prepare(&x, &LikelihoodSpec::new(Family::TimeDomain, Modification::None, 2)).unwrap();
        assert_eq!(td, PreparedData::TimeDomain(x.clone()));
        let bw =
            prepare(&x, &LikelihoodSpec::new(Family::BlockWhittle { seg_len: 30, step: 15 }, Modification::None, 2))
                .unwrap();
        match &bw {
            PreparedData::Block(b) => {
                assert_eq!(b.n_segments(), 99);
                assert_eq!(b.n_freqs(), 14);
            }
            _ => panic!(),
        }
        let dw = prepare(&x, &LikelihoodSpec::new(Family::DynamicWhittle { m: 15 }, Modification::None, 2)).unwrap();
        assert_eq!(dw.n_ordinates(), 1470);
        assert_eq!(dw.centers()[0], 16);
        let bad = LikelihoodSpec::new(Family::TimeDomain, Modification::Taper, 2);
        assert!(prepare(&x, &bad).is_err());
    }

    #[test]
    fn single_segment_reduces_to_stationary_whittle() {
        let x = series(40);
        let g = segment_geometry(40, 40, 1).unwrap();
        let bp = block_periodogram(&x, &g, None).unwrap();
        let path = TvarPath::constant(&[0.4], 1.3, 1).unwrap();
        let bw = block_whittle_loglik(&bp, &path).unwrap();
        let pg = periodogram(&x, &fourier_frequencies(40, false).unwrap()).unwrap();
        let spec = crate::spectral::ArSpec::new(vec![0.4], 1.3).unwrap();
        // exponential-model form is twice the 1/2-weighted Whittle sum
        let w = whittle_loglik(&pg, |om| spec.spectral_density(om)).unwrap();
        assert!((bw - 2.0 * w).abs() < 1e-10);
    }

    #[test]
    fn ordinates_equal_density() {
        let c = 0.37;
        let g = segment_geometry(20, 10, 5).unwrap();
        let grid = fourier_frequencies(10, false).unwrap();
        let bp = BlockPeriodogram { geometry: g.clone(), grid, ordinates: vec![vec![c; 4]; 3] };
        // white noise with f = c: sigma2 = 2 pi c
        let path = TvarPath::constant(&[], std::f64::consts::TAU * c, 3).unwrap();
        let ll = block_whittle_loglik(&bp, &path).unwrap();
        assert!((ll + 12.0 * (c.ln() + 1.0)).abs() < 1e-12);
    }

    #[test]
    fn time_domain_hand_case() {
        let x = TimeSeries::new(vec![0.0, 1.0, 2.0]).unwrap();
        let path = TvarPath::constant(&[0.5], 1.0, 3).unwrap();
        let lp = |v: f64, m: f64| -0.5 * ((std::f64::consts::TAU).ln() + (v - m) * (v - m));
        let want = lp(1.0, 0.0) + lp(2.0, 0.5);
        assert!((time_domain_tvar_loglik(&x, &path).unwrap() - want).abs() < 1e-14);
    }

    #[test]
    fn time_domain_matches_exact_ar1_without_initial_term() {
        let x = series(25);
        let path = TvarPath::constant(&[0.6], 0.8, 25).unwrap();
        let td = time_domain_tvar_loglik(&x, &path).unwrap();
        let exact = exact_ar1_loglik(&x, 0.6, 0.8).unwrap();
        let v0 = 0.8 / (1.0 - 0.36);
        let x1 = x.values()[0];
        let init = -0.5 * ((std::f64::consts::TAU * v0).ln() + x1 * x1 / v0);
        assert!((td - (exact - init)).abs() < 1e-10);
    }

    #[test]
    fn observation_table_matches_direct_loglik() {
        let x = series(200);
        for spec in [
            LikelihoodSpec::new(Family::BlockWhittle { seg_len: 20, step: 10 }, Modification::Taper, 2),
            LikelihoodSpec::new(Family::DynamicWhittle { m: 7 }, Modification::Prewhiten, 2),
        ] {
            let data = prepare(&x, &spec).unwrap();
            let n = data.n_states();
            let theta: Vec<f64> = (0..n * 2).map(|i| ((i % 13) as f64 - 6.0) / 4.0).collect();
            let s2: Vec<f64> = (0..n).map(|i| 0.5 + (i % 5) as f64 * 0.3).collect();
            let path = TvarPath::from_theta(2, theta, s2).unwrap();
            let direct = loglik(&data, &path).unwrap();
            let table = SpectralObservations::new(&data, 2).unwrap();
            let via: f64 = (0..n).map(|j| table.step_loglik(j, path.phi_at(j + 1), path.sigma2_at(j + 1))).sum();
            assert!(((direct - via) / direct).abs() < 1e-12, "{direct} vs {via}");
        }
    }

    #[test]
    fn length_mismatch_rejected() {
        let x = series(40);
        let data = prepare(&x, &LikelihoodSpec::new(Family::DynamicWhittle { m: 3 }, Modification::None, 1)).unwrap();
        let path = TvarPath::constant(&[0.1], 1.0, 5).unwrap();
        assert!(loglik(&data, &path).is_err());
    }
}
