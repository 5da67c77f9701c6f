//! Particle Gibbs with ancestor sampling for a Gaussian random-walk state
//! `x_j = x_{j-1} + eta_j`, `eta_j ~ N(0, Q)`, started from a fixed `x_0`.

use nalgebra::DMatrix;
use rand::Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::error::{Error, Result};

/// Observation side of a state-space model with one log-density per step.
pub trait ObservationModel {
    fn n_steps(&self) -> usize;
    fn state_dim(&self) -> usize;
    /// `log p(y_j | x_j)` for 0-based step `j`.
    fn log_density(&self, step: usize, state: &[f64]) -> f64;
}

/// Random-walk transition `N(0, Q)` in factored form.
#[derive(Debug, Clone)]
pub struct RandomWalk {
    dim: usize,
    /// Lower Cholesky factor of `Q`, row-major.
    chol: Vec<f64>,
    /// `Q^{-1}`, row-major.
    precision: Vec<f64>,
}

impl RandomWalk {
    pub fn new(q: &DMatrix<f64>) -> Result<Self> {
        let dim = q.nrows();
        let chol = super::distributions::cholesky_lower(q, "state covariance Q")?;
        let prec = super::distributions::spd_inverse(q, "state covariance Q")?;
        let flat = |m: &DMatrix<f64>| (0..dim).flat_map(|i| (0..dim).map(move |j| (i, j))).map(|ij| m[ij]).collect();
        Ok(Self { dim, chol: flat(&chol), precision: flat(&prec) })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    #[inline]
    fn step<R: Rng + ?Sized>(&self, from: &[f64], out: &mut [f64], z: &mut [f64], rng: &mut R) {
        let d = self.dim;
        for zi in z.iter_mut() {
            *zi = StandardNormal.sample(rng);
        }
        for i in 0..d {
            let row = &self.chol[i * d..i * d + i + 1];
            out[i] = from[i] + row.iter().zip(&z[..=i]).map(|(l, zz)| l * zz).sum::<f64>();
        }
    }

    /// `-1/2 (b - a)^T Q^{-1} (b - a)`.
    #[inline]
    fn log_kernel(&self, a: &[f64], b: &[f64]) -> f64 {
        let d = self.dim;
        let mut acc = 0.0;
        for i in 0..d {
            let di = b[i] - a[i];
            let row = &self.precision[i * d..(i + 1) * d];
            let mut s = 0.0;
            for j in 0..d {
                s += row[j] * (b[j] - a[j]);
            }
            acc += di * s;
        }
        -0.5 * acc
    }
}

/// Normalised weights from log-weights; fails if the largest is not finite.
fn normalise(logw: &[f64], out: &mut [f64], step: usize) -> Result<()> {
    let max = logw.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if !max.is_finite() {
        return Err(Error::Collapse { step: step + 1, n_particles: logw.len() });
    }
    let mut total = 0.0;
    for (o, &l) in out.iter_mut().zip(logw) {
        *o = (l - max).exp();
        total += *o;
    }
    for o in out.iter_mut() {
        *o /= total;
    }
    Ok(())
}

/// Multinomial resampling of `n` independent indices from normalised `weights`.
pub fn multinomial_resample<R: Rng + ?Sized>(
    weights: &[f64],
    n: usize,
    rng: &mut R,
    cumulative: &mut Vec<f64>,
    out: &mut Vec<usize>,
) {
    cumulative.clear();
    let mut acc = 0.0;
    cumulative.extend(weights.iter().map(|w| {
        acc += w;
        acc
    }));
    let last = weights.len() - 1;
    out.clear();
    out.extend((0..n).map(|_| {
        let u = rng.random::<f64>() * acc;
        cumulative.partition_point(|&c| c <= u).min(last)
    }));
}

fn categorical<R: Rng + ?Sized>(weights: &[f64], rng: &mut R) -> usize {
    let u: f64 = rng.random();
    let mut cum = 0.0;
    for (i, w) in weights.iter().enumerate() {
        cum += w;
        if u < cum {
            return i;
        }
    }
    weights.len() - 1
}

/// Reusable buffers for repeated sweeps.
#[derive(Debug, Clone, Default)]
pub struct PgasWorkspace {
    particles: Vec<f64>,
    ancestors: Vec<usize>,
    logw: Vec<f64>,
    weights: Vec<f64>,
    resampled: Vec<usize>,
    cumulative: Vec<f64>,
}

/// One conditional SMC sweep with ancestor sampling.
///
/// `reference` is the retained trajectory (`n_steps * dim`, row-major);
/// it is kept in the last particle slot. Returns the new trajectory.
pub fn pgas_sweep<M: ObservationModel + ?Sized, R: Rng + ?Sized>(
    model: &M,
    transition: &RandomWalk,
    x0: &[f64],
    reference: &[f64],
    n_particles: usize,
    ws: &mut PgasWorkspace,
    rng: &mut R,
) -> Result<Vec<f64>> {
    let d = model.state_dim();
    let steps = model.n_steps();
    let n = n_particles;
    if n < 2 {
        return Err(Error::InvalidInput("PGAS needs at least 2 particles".into()));
    }
    if transition.dim() != d || x0.len() != d || reference.len() != steps * d {
        return Err(Error::InvalidInput("PGAS state dimensions disagree".into()));
    }
    let last = n - 1;
    ws.particles.resize(steps * n * d, 0.0);
    ws.ancestors.resize(steps * n, 0);
    ws.logw.resize(n, 0.0);
    ws.weights.resize(n, 0.0);
    let mut z = vec![0.0; d];

    for j in 0..steps {
        let (before, current) = ws.particles.split_at_mut(j * n * d);
        let current = &mut current[..n * d];
        let anc = &mut ws.ancestors[j * n..(j + 1) * n];
        let ref_j = &reference[j * d..(j + 1) * d];
        if j == 0 {
            for i in 0..last {
                transition.step(x0, &mut current[i * d..(i + 1) * d], &mut z, rng);
                anc[i] = 0;
            }
            anc[last] = 0;
        } else {
            normalise(&ws.logw, &mut ws.weights, j - 1)?;
            let prev = &before[(j - 1) * n * d..];
            multinomial_resample(&ws.weights, last, rng, &mut ws.cumulative, &mut ws.resampled);
            for i in 0..last {
                let a = ws.resampled[i];
                anc[i] = a;
                transition.step(&prev[a * d..(a + 1) * d], &mut current[i * d..(i + 1) * d], &mut z, rng);
            }
            // ancestor of the reference: w_{j-1}^i N(ref_j; x_{j-1}^i, Q)
            for i in 0..n {
                ws.logw[i] = ws.weights[i].ln() + transition.log_kernel(&prev[i * d..(i + 1) * d], ref_j);
            }
            let logw = std::mem::take(&mut ws.logw);
            normalise(&logw, &mut ws.weights, j)?;
            ws.logw = logw;
            anc[last] = categorical(&ws.weights, rng);
        }
        current[last * d..].copy_from_slice(ref_j);
        for i in 0..n {
            ws.logw[i] = model.log_density(j, &current[i * d..(i + 1) * d]);
        }
    }
    normalise(&ws.logw, &mut ws.weights, steps - 1)?;
    let mut k = categorical(&ws.weights, rng);
    let mut out = vec![0.0; steps * d];
    for j in (0..steps).rev() {
        let src = &ws.particles[(j * n + k) * d..(j * n + k + 1) * d];
        out[j * d..(j + 1) * d].copy_from_slice(src);
        k = ws.ancestors[j * n + k];
    }
    Ok(out)
}
