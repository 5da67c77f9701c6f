//! Time-localised periodograms: segment geometry for the block Whittle
//! likelihood, block (local) periodograms, the single-frequency moving
//! periodogram of the dynamic Whittle likelihood, and the preperiodogram.
//!
//! Times are 1-based throughout, matching the indexing of the likelihoods.

use num_complex::Complex;

use crate::error::{invalid, Error, Result};
use crate::modify::TaperWindow;
use crate::scalar::Real;
use crate::spectral::{dft_grid, fourier_frequencies, FourierGrid, TimeSeries};

/// Sliding-window layout: `M = (T - N)/S + 1` segments of length `N`,
/// segment `j` covering `S(j-1)+1 ..= S(j-1)+N` with center `S(j-1) + N/2`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SegmentGeometry {
    pub t_len: usize,
    pub seg_len: usize,
    pub step: usize,
    pub centers: Vec<usize>,
}

impl SegmentGeometry {
    pub fn n_segments(&self) -> usize {
        self.centers.len()
    }

    /// 0-based start offset of segment `j` (0-based).
    pub fn start(&self, j: usize) -> usize {
        self.step * j
    }

    pub fn segment<'a, T>(&self, x: &'a [T], j: usize) -> &'a [T] {
        let s = self.start(j);
        &x[s..s + self.seg_len]
    }
}

pub fn segment_geometry(t_len: usize, seg_len: usize, step: usize) -> Result<SegmentGeometry> {
    let geom_err = |msg: String, hint: &str| Error::Geometry { msg, hint: hint.to_string() };
    if seg_len < 2 || seg_len > t_len {
        return Err(geom_err(
            format!("segment length N={seg_len} must satisfy 2 <= N <= T={t_len}"),
            "choose a shorter segment",
        ));
    }
    if seg_len % 2 != 0 {
        return Err(geom_err(
            format!("segment length N={seg_len} must be even so that N/2 is a time index"),
            "use an even N",
        ));
    }
    if step == 0 || (step > seg_len && t_len != seg_len) {
        return Err(geom_err(format!("step S={step} must satisfy 1 <= S <= N={seg_len}"), "choose S between 1 and N"));
    }
    if t_len == seg_len {
        return Ok(SegmentGeometry { t_len, seg_len, step, centers: vec![seg_len / 2] });
    }
    let rem = (t_len - seg_len) % step;
    if rem != 0 {
        return Err(geom_err(
            format!("(T - N) = {} is not divisible by S = {step}", t_len - seg_len),
            &format!("trim the series to T = {}", t_len - rem),
        ));
    }
    let m = (t_len - seg_len) / step + 1;
    let centers = (0..m).map(|j| step * j + seg_len / 2).collect();
    Ok(SegmentGeometry { t_len, seg_len, step, centers })
}

/// Periodogram of one segment, optionally tapered.
///
/// Untapered: `|sum_s x_s e^{-i w s}|^2 / (2 pi N)`. Tapered: weights
/// `h(s/N)` inside the sum and normaliser `2 pi H_N`.
pub fn segment_periodogram<T: Real>(
    segment: &[T],
    grid: &FourierGrid,
    window: Option<&TaperWindow<T>>,
) -> Result<Vec<T>> {
    let n = segment.len();
    let (data, norm) = match window {
        None => (segment.to_vec(), T::from_usize_lossy(n)),
        Some(w) => {
            if w.len() != n {
                return Err(invalid(format!("taper of length {} applied to segment of length {n}", w.len())));
            }
            (w.apply(segment), w.normalizer())
        }
    };
    let scale = T::two_pi() * norm;
    Ok(dft_grid(&data, grid).into_iter().map(|j| j.norm_sqr() / scale).collect())
}

/// Local periodogram of the length-`N` window around 1-based `center`, covering
/// `center - N/2 + 1 ..= center + N/2`.
pub fn local_periodogram<T: Real>(
    x: &TimeSeries<T>,
    center: usize,
    seg_len: usize,
    grid: &FourierGrid,
    window: Option<&TaperWindow<T>>,
) -> Result<Vec<T>> {
    let half = seg_len / 2;
    if center < half || center + (seg_len - half) > x.len() {
        return Err(Error::Boundary(format!("segment of length {seg_len} around t={center} leaves 1..={}", x.len())));
    }
    let start = center - half; // 0-based index of x_{t-N/2+1}
    segment_periodogram(&x.values()[start..start + seg_len], grid, window)
}

/// Local periodograms at every segment of a geometry, on the segment's
/// interior Fourier grid (`K = ceil(N/2) - 1` frequencies).
#[derive(Debug, Clone, PartialEq)]
pub struct BlockPeriodogram<T> {
    pub geometry: SegmentGeometry,
    pub grid: FourierGrid,
    /// `M x K`, row per segment.
    pub ordinates: Vec<Vec<T>>,
}

impl<T: Real> BlockPeriodogram<T> {
    pub fn n_segments(&self) -> usize {
        self.ordinates.len()
    }

    pub fn n_freqs(&self) -> usize {
        self.grid.len()
    }

    pub fn grand_mean(&self) -> T {
        let n = self.n_segments() * self.n_freqs();
        self.ordinates.iter().flatten().copied().sum::<T>() / T::from_usize_lossy(n)
    }
}

pub fn block_periodogram<T: Real>(
    x: &TimeSeries<T>,
    geometry: &SegmentGeometry,
    window: Option<&TaperWindow<T>>,
) -> Result<BlockPeriodogram<T>> {
    check_geometry(x, geometry)?;
    let grid = fourier_frequencies(geometry.seg_len, false)?;
    let ordinates = geometry
        .centers
        .iter()
        .map(|&c| local_periodogram(x, c, geometry.seg_len, &grid, window))
        .collect::<Result<_>>()?;
    Ok(BlockPeriodogram { geometry: geometry.clone(), grid, ordinates })
}

pub(crate) fn check_geometry<T: Real>(x: &TimeSeries<T>, geometry: &SegmentGeometry) -> Result<()> {
    if geometry.t_len != x.len() {
        return Err(invalid(format!("geometry built for T={} but series has length {}", geometry.t_len, x.len())));
    }
    Ok(())
}

/// Frequency index `1 + ((t - 1) mod m)` used by the moving periodogram at time `t`.
#[inline]
pub fn moving_freq_index(t: usize, m: usize) -> usize {
    1 + ((t - 1) % m)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MovingEntry<T> {
    /// 1-based time of the window center.
    pub t: usize,
    /// Index `k` of `w_k = 2 pi k / (2m + 1)`.
    pub freq_index: usize,
    pub ordinate: T,
}

/// One single-frequency ordinate per time `t = m+1 ..= T-m`.
#[derive(Debug, Clone, PartialEq)]
pub struct MovingPeriodogram<T> {
    pub m: usize,
    pub t_len: usize,
    pub entries: Vec<MovingEntry<T>>,
}

impl<T: Real> MovingPeriodogram<T> {
    pub fn window_len(&self) -> usize {
        2 * self.m + 1
    }

    pub fn omega(&self, entry: &MovingEntry<T>) -> T {
        T::two_pi() * T::from_usize_lossy(entry.freq_index) / T::from_usize_lossy(self.window_len())
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }
}

/// The window `x_{t-m} ..= x_{t+m}` (1-based) used at time `t`.
pub fn moving_window<T>(x: &[T], t: usize, m: usize) -> &[T] {
    &x[t - m - 1..t + m]
}

/// Single-frequency grid for the moving window at time `t`.
pub fn moving_grid(t: usize, m: usize) -> FourierGrid {
    FourierGrid::from_indices(2 * m + 1, vec![moving_freq_index(t, m)])
        .expect("index within 1..=m is valid for origin 2m+1")
}

pub fn moving_periodogram<T: Real>(
    x: &TimeSeries<T>,
    m: usize,
    window: Option<&TaperWindow<T>>,
) -> Result<MovingPeriodogram<T>> {
    moving_periodogram_with(x, m, |seg, grid| segment_periodogram(seg, grid, window))
}

/// Moving periodogram where each window's ordinate comes from `ordinate`
/// (used to plug in the bias-reduction modifications).
pub fn moving_periodogram_with<T: Real>(
    x: &TimeSeries<T>,
    m: usize,
    ordinate: impl Fn(&[T], &FourierGrid) -> Result<Vec<T>>,
) -> Result<MovingPeriodogram<T>> {
    let t_len = x.len();
    if m < 1 || t_len < 2 * m + 1 {
        return Err(invalid(format!("moving periodogram needs m >= 1 and T >= 2m+1 (T={t_len}, m={m})")));
    }
    let entries = (m + 1..=t_len - m)
        .map(|t| {
            let grid = moving_grid(t, m);
            let ord = ordinate(moving_window(x.values(), t, m), &grid)?;
            Ok(MovingEntry { t, freq_index: grid.indices()[0], ordinate: ord[0] })
        })
        .collect::<Result<_>>()?;
    Ok(MovingPeriodogram { m, t_len, entries })
}

/// Preperiodogram at 1-based time `t`:
/// `(1/2pi) sum_k x_{floor(t+0.5+k/2)} x_{floor(t+0.5-k/2)} e^{-i w k}`
/// over the `k` for which both indices lie in `1..=T`.
///
/// The terms for `k` and `-k` are complex conjugates, so the sum is real.
pub fn preperiodogram<T: Real>(x: &[T], t: usize, omega: T) -> Result<T> {
    let n = x.len() as i64;
    if t < 1 || t as i64 > n {
        return Err(invalid(format!("time {t} outside 1..={n}")));
    }
    let t = t as i64;
    let mut acc = Complex::new(T::zero(), T::zero());
    for k in -2 * n..=2 * n {
        let a = t + (k + 1).div_euclid(2);
        let b = t + (1 - k).div_euclid(2);
        if a < 1 || b < 1 || a > n || b > n {
            continue;
        }
        let prod = x[(a - 1) as usize] * x[(b - 1) as usize];
        acc = acc + Complex::from_polar(prod, -omega * T::from_i64(k).expect("small integer"));
    }
    let scale = x.iter().map(|v| v.abs()).fold(T::zero(), T::max);
    debug_assert!(
        acc.im.abs() <= T::lit(1e-10) * (T::one() + scale * scale * T::from_i64(n).unwrap()),
        "preperiodogram imaginary part {}",
        acc.im
    );
    Ok(acc.re / T::two_pi())
}
