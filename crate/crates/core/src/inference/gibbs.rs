//! The Gibbs sampler: PGAS for the parameter path, then conjugate draws of
//! `Q`, the innovation variance and the initial state.

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::distributions::{spd_inverse, InverseGamma, InverseWishart, MultivariateNormal};
use super::pgas::{pgas_sweep, ObservationModel, PgasWorkspace, RandomWalk};
use super::summary::QuantileTable;
use crate::error::{invalid, Error, Result};
use crate::likelihood::{prepare, Family, LikelihoodSpec, PreparedData, SpectralObservations};
use crate::modify::burg;
use crate::spectral::TimeSeries;
use crate::tvar::{is_stable, phi_to_theta, theta_to_phi_into, TvarPath};

pub const DEFAULT_PARTICLES: usize = 100;
/// Largest AR order the sampler accepts.
pub const MAX_ORDER: usize = 16;

/// Conjugate priors: `Q ~ IW(q_dof, q_scale)`, `sigma2 ~ IG(shape, scale)`,
/// `theta_0 ~ N(init_mean, init_cov)`.
#[derive(Debug, Clone, PartialEq)]
pub struct Priors {
    pub q_dof: f64,
    pub q_scale: DMatrix<f64>,
    pub sigma2_shape: f64,
    pub sigma2_scale: f64,
    pub init_mean: DVector<f64>,
    pub init_cov: DMatrix<f64>,
}

impl Priors {
    /// `Q ~ IW(10, 0.005 (10 - p - 1) I_p)`, `sigma2 ~ IG(0.01, 0.01)`, `theta_0 ~ N(0, 10 I_p)`.
    pub fn standard(p: usize) -> Self {
        let c = 0.005 * (10.0 - p as f64 - 1.0);
        Self {
            q_dof: 10.0,
            q_scale: DMatrix::identity(p, p) * c,
            sigma2_shape: 0.01,
            sigma2_scale: 0.01,
            init_mean: DVector::zeros(p),
            init_cov: DMatrix::identity(p, p) * 10.0,
        }
    }

    /// State `(theta, log sigma2)`: `Q ~ IW(10, Diag(1e-4, .., 1e-4, 1e-3))`, `theta_0 ~ N(0, 10 I_{p+1})`.
    pub fn sv_default(p: usize) -> Self {
        let mut diag = vec![1e-4; p];
        diag.push(1e-3);
        Self {
            q_dof: 10.0,
            q_scale: DMatrix::from_diagonal(&DVector::from_vec(diag)),
            sigma2_shape: 0.01,
            sigma2_scale: 0.01,
            init_mean: DVector::zeros(p + 1),
            init_cov: DMatrix::identity(p + 1, p + 1) * 10.0,
        }
    }

    /// Defaults for a likelihood spec; block Whittle scales the `Q` prior by the step size.
    pub fn for_spec(spec: &LikelihoodSpec) -> Self {
        let base = if spec.sv { Self::sv_default(spec.order) } else { Self::standard(spec.order) };
        match spec.family {
            Family::BlockWhittle { step, .. } => base.scale_q(step as f64),
            _ => base,
        }
    }

    pub fn scale_q(mut self, factor: f64) -> Self {
        self.q_scale *= factor;
        self
    }

    pub fn dim(&self) -> usize {
        self.q_scale.nrows()
    }

    pub fn validate(&self, dim: usize) -> Result<()> {
        if self.q_scale.nrows() != dim || self.init_mean.len() != dim || self.init_cov.nrows() != dim {
            return Err(invalid(format!("priors have dimension {}, state has {dim}", self.q_scale.nrows())));
        }
        if !(self.sigma2_shape > 0.0 && self.sigma2_scale > 0.0) {
            return Err(invalid("inverse-gamma prior needs positive shape and scale"));
        }
        InverseWishart::new(self.q_dof, self.q_scale.clone())?;
        MultivariateNormal::new(self.init_mean.clone(), &self.init_cov)?;
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct GibbsConfig {
    pub n_iter: usize,
    pub burn_in: usize,
    pub thin: usize,
    pub n_particles: usize,
    pub seed: u64,
}

impl Default for GibbsConfig {
    fn default() -> Self {
        Self { n_iter: 12_000, burn_in: 2_000, thin: 2, n_particles: DEFAULT_PARTICLES, seed: 0 }
    }
}

impl GibbsConfig {
    pub fn validate(&self) -> Result<()> {
        if self.n_iter <= self.burn_in {
            return Err(invalid("n_iter must exceed burn_in"));
        }
        if self.thin == 0 {
            return Err(invalid("thin must be at least 1"));
        }
        if self.n_particles < 2 {
            return Err(invalid("need at least 2 particles"));
        }
        Ok(())
    }

    pub fn n_stored(&self) -> usize {
        (self.n_iter - self.burn_in) / self.thin
    }

    fn keeps(&self, iter: usize) -> bool {
        iter >= self.burn_in && (iter - self.burn_in + 1) % self.thin == 0
    }
}

/// `IW(nu_0 + M, S_0 + sum_j (theta_j - theta_{j-1})(theta_j - theta_{j-1})^T)`, with `theta_0` as the first state.
pub fn update_q<R: Rng + ?Sized>(path: &[f64], theta0: &[f64], priors: &Priors, rng: &mut R) -> Result<DMatrix<f64>> {
    let d = theta0.len();
    if d == 0 || path.is_empty() || path.len() % d != 0 {
        return Err(invalid("state path shape does not match theta_0"));
    }
    let m = path.len() / d;
    let mut scale = priors.q_scale.clone();
    let mut prev = theta0;
    for j in 0..m {
        let cur = &path[j * d..(j + 1) * d];
        for a in 0..d {
            let da = cur[a] - prev[a];
            for b in 0..d {
                scale[(a, b)] += da * (cur[b] - prev[b]);
            }
        }
        prev = cur;
    }
    Ok(InverseWishart::new(priors.q_dof + m as f64, scale)?.sample(rng))
}

/// `IG(alpha + n, beta + sum 2 pi |phi(e^{-iw})|^2 I)` over all spectral observations.
pub fn update_sigma2<R: Rng + ?Sized>(
    obs: &SpectralObservations<f64>,
    phi_path: &[f64],
    priors: &Priors,
    rng: &mut R,
) -> Result<f64> {
    let p = obs.order();
    let mut total = 0.0;
    let mut count = 0;
    for j in 0..obs.n_steps() {
        let (s, n) = obs.step_whitened(j, &phi_path[j * p..(j + 1) * p]);
        total += s;
        count += n;
    }
    if !total.is_finite() {
        return Err(Error::Numerical("whitened periodogram sum is not finite".into()));
    }
    if priors.sigma2_scale + total <= 0.0 {
        return Err(Error::DegeneratePosterior(format!(
            "innovation variance conditional is improper: prior scale + whitened ordinate sum = {} <= 0 \
             (negative periodogram ordinates dominate)",
            priors.sigma2_scale + total
        )));
    }
    Ok(InverseGamma::new(priors.sigma2_shape + count as f64, priors.sigma2_scale + total)?.sample(rng))
}

/// Sum of squared one-step residuals `x_t - sum_j phi_jt x_{t-j}` for `t > p`.
pub fn conditional_ssr(x: &[f64], phi_path: &[f64], p: usize) -> f64 {
    (p..x.len())
        .map(|i| {
            let phi = &phi_path[i * p..(i + 1) * p];
            let r = x[i] - (0..p).map(|l| phi[l] * x[i - 1 - l]).sum::<f64>();
            r * r
        })
        .sum()
}

/// `IG(alpha + (T - p) / 2, beta + SSR / 2)` for the time-domain model.
pub fn update_sigma2_time_domain<R: Rng + ?Sized>(
    x: &[f64],
    phi_path: &[f64],
    p: usize,
    priors: &Priors,
    rng: &mut R,
) -> Result<f64> {
    let ssr = conditional_ssr(x, phi_path, p);
    let n = x.len() - p;
    Ok(InverseGamma::new(priors.sigma2_shape + n as f64 / 2.0, priors.sigma2_scale + ssr / 2.0)?.sample(rng))
}

/// Mean and covariance of `theta_0 | theta_1, Q`.
pub fn initial_state_conditional(
    theta1: &[f64],
    q: &DMatrix<f64>,
    priors: &Priors,
) -> Result<(DVector<f64>, DMatrix<f64>)> {
    let q_inv = spd_inverse(q, "Q")?;
    let p0_inv = spd_inverse(&priors.init_cov, "P_0")?;
    let omega = spd_inverse(&(&q_inv + &p0_inv), "posterior precision of theta_0")?;
    let mean = &omega * (q_inv * DVector::from_column_slice(theta1) + p0_inv * &priors.init_mean);
    Ok((mean, omega))
}

/// Draws `theta_0 ~ N(m, Omega)`, `Omega^{-1} = Q^{-1} + P_0^{-1}`, `m = Omega (Q^{-1} theta_1 + P_0^{-1} a_0)`.
pub fn update_initial_state<R: Rng + ?Sized>(
    theta1: &[f64],
    q: &DMatrix<f64>,
    priors: &Priors,
    rng: &mut R,
) -> Result<Vec<f64>> {
    let (mean, cov) = initial_state_conditional(theta1, q, priors)?;
    Ok(MultivariateNormal::new(mean, &cov)?.sample(rng).iter().copied().collect())
}

#[inline]
fn phi_of(state: &[f64], p: usize) -> [f64; MAX_ORDER] {
    let mut buf = [0.0; MAX_ORDER];
    theta_to_phi_into(&state[..p], &mut buf[..p]);
    buf
}

struct SpectralModel<'a> {
    obs: &'a SpectralObservations<f64>,
    p: usize,
    sv: bool,
    sigma2: f64,
}

impl ObservationModel for SpectralModel<'_> {
    fn n_steps(&self) -> usize {
        self.obs.n_steps()
    }

    fn state_dim(&self) -> usize {
        self.p + usize::from(self.sv)
    }

    #[inline]
    fn log_density(&self, step: usize, state: &[f64]) -> f64 {
        let phi = phi_of(state, self.p);
        let s2 = if self.sv { state[self.p].exp() } else { self.sigma2 };
        self.obs.step_loglik(step, &phi[..self.p], s2)
    }
}

struct TimeDomainModel<'a> {
    x: &'a [f64],
    p: usize,
    sv: bool,
    sigma2: f64,
}

impl ObservationModel for TimeDomainModel<'_> {
    fn n_steps(&self) -> usize {
        self.x.len()
    }

    fn state_dim(&self) -> usize {
        self.p + usize::from(self.sv)
    }

    #[inline]
    fn log_density(&self, step: usize, state: &[f64]) -> f64 {
        if step < self.p {
            return 0.0;
        }
        let phi = phi_of(state, self.p);
        let mean: f64 = (0..self.p).map(|l| phi[l] * self.x[step - 1 - l]).sum();
        let (s2, ln_s2) = if self.sv { (state[self.p].exp(), state[self.p]) } else { (self.sigma2, self.sigma2.ln()) };
        let d = self.x[step] - mean;
        -0.5 * (std::f64::consts::TAU.ln() + ln_s2 + d * d / s2)
    }
}

/// Current values of all blocks of the sampler.
#[derive(Debug, Clone, PartialEq)]
pub struct GibbsState {
    /// State path, `n_states * dim` row-major; `theta` first, then log-variance under SV.
    pub path: Vec<f64>,
    pub theta0: Vec<f64>,
    pub q: DMatrix<f64>,
    /// Static innovation variance (unused under SV).
    pub sigma2: f64,
}

/// Prepared data plus sampler state; [`GibbsSampler::sweep`] runs one Gibbs iteration.
pub struct GibbsSampler {
    spec: LikelihoodSpec,
    priors: Priors,
    data: PreparedData<f64>,
    obs: Option<SpectralObservations<f64>>,
    n_particles: usize,
    workspace: PgasWorkspace,
    state: GibbsState,
}

impl GibbsSampler {
    pub fn new(data: PreparedData<f64>, spec: LikelihoodSpec, priors: Priors, n_particles: usize) -> Result<Self> {
        spec.validate()?;
        let p = spec.order;
        if p == 0 || p > MAX_ORDER {
            return Err(invalid(format!("model order must be in 1..={MAX_ORDER}, got {p}")));
        }
        if n_particles < 2 {
            return Err(invalid("need at least 2 particles"));
        }
        let dim = p + usize::from(spec.sv);
        priors.validate(dim)?;
        let obs = match &data {
            PreparedData::TimeDomain(x) => {
                if x.len() <= p {
                    return Err(invalid("series shorter than the model order"));
                }
                None
            }
            d => Some(SpectralObservations::new(d, p)?),
        };
        let n_states = data.n_states();
        let mut row = vec![0.0; dim];
        let mut sigma2 = match (&data, &obs) {
            (PreparedData::TimeDomain(x), _) => {
                let v = x.values();
                v.iter().map(|a| a * a).sum::<f64>() / v.len() as f64
            }
            (_, Some(o)) => {
                let zero = [0.0; MAX_ORDER];
                let (s, n) = (0..o.n_steps())
                    .map(|j| o.step_whitened(j, &zero[..p]))
                    .fold((0.0, 0), |a, b| (a.0 + b.0, a.1 + b.1));
                s / n as f64
            }
            _ => unreachable!(),
        };
        if !(sigma2 > 0.0 && sigma2.is_finite()) {
            sigma2 = 1.0;
        }
        if spec.sv {
            row[p] = sigma2.ln();
        }
        let path = row.iter().copied().cycle().take(n_states * dim).collect();
        let q = &priors.q_scale / (priors.q_dof + dim as f64 + 1.0);
        let state = GibbsState { path, theta0: row, q, sigma2 };
        Ok(Self { spec, priors, data, obs, n_particles, workspace: PgasWorkspace::default(), state })
    }

    /// Restarts the path at constant AR coefficients `phi` and sets the
    /// innovation variance to its conditional mean estimate given `phi`.
    pub fn initialize_from_ar(&mut self, phi: &[f64]) -> Result<()> {
        let (p, d) = (self.spec.order, self.dim());
        if phi.len() != p {
            return Err(invalid("initial AR coefficients have the wrong order"));
        }
        let theta = phi_to_theta(phi)?;
        let n_states = self.n_states();
        let flat: Vec<f64> = phi.iter().copied().cycle().take(n_states * p).collect();
        let sigma2 = match (&self.data, &self.obs) {
            (PreparedData::TimeDomain(x), _) => conditional_ssr(x.values(), &flat, p) / (x.len() - p) as f64,
            (_, Some(o)) => {
                let (s, n) =
                    (0..o.n_steps()).map(|j| o.step_whitened(j, phi)).fold((0.0, 0), |a, b| (a.0 + b.0, a.1 + b.1));
                s / n as f64
            }
            _ => unreachable!(),
        };
        if sigma2 > 0.0 && sigma2.is_finite() {
            self.state.sigma2 = sigma2;
        }
        let mut row = theta.into_inner();
        if self.spec.sv {
            row.push(self.state.sigma2.ln());
        }
        debug_assert_eq!(row.len(), d);
        self.state.path = row.iter().copied().cycle().take(n_states * d).collect();
        self.state.theta0 = row;
        Ok(())
    }

    pub fn dim(&self) -> usize {
        self.spec.order + usize::from(self.spec.sv)
    }

    pub fn n_states(&self) -> usize {
        self.data.n_states()
    }

    pub fn spec(&self) -> &LikelihoodSpec {
        &self.spec
    }

    pub fn priors(&self) -> &Priors {
        &self.priors
    }

    pub fn data(&self) -> &PreparedData<f64> {
        &self.data
    }

    pub fn state(&self) -> &GibbsState {
        &self.state
    }

    pub fn set_state(&mut self, state: GibbsState) -> Result<()> {
        let d = self.dim();
        if state.path.len() != self.n_states() * d || state.theta0.len() != d || state.q.nrows() != d {
            return Err(invalid("state has the wrong shape for this sampler"));
        }
        self.state = state;
        Ok(())
    }

    /// AR coefficients along the current path, `n_states * p`.
    pub fn phi_path(&self) -> Vec<f64> {
        let (p, d) = (self.spec.order, self.dim());
        let mut out = vec![0.0; self.n_states() * p];
        for (s, row) in self.state.path.chunks(d).enumerate() {
            theta_to_phi_into(&row[..p], &mut out[s * p..(s + 1) * p]);
        }
        out
    }

    /// Innovation variance along the current path.
    pub fn sigma2_path(&self) -> Vec<f64> {
        let (p, d) = (self.spec.order, self.dim());
        if self.spec.sv {
            self.state.path.chunks(d).map(|r| r[p].exp()).collect()
        } else {
            vec![self.state.sigma2; self.n_states()]
        }
    }

    pub fn current_path(&self) -> Result<TvarPath<f64>> {
        let p = self.spec.order;
        let theta: Vec<f64> = self.state.path.chunks(self.dim()).flat_map(|r| r[..p].to_vec()).collect();
        TvarPath::from_theta(p, theta, self.sigma2_path())
    }

    fn pgas<R: Rng + ?Sized>(&mut self, rng: &mut R) -> Result<Vec<f64>> {
        let rw = RandomWalk::new(&self.state.q)?;
        let (p, sv, sigma2) = (self.spec.order, self.spec.sv, self.state.sigma2);
        match (&self.data, &self.obs) {
            (PreparedData::TimeDomain(x), _) => {
                let model = TimeDomainModel { x: x.values(), p, sv, sigma2 };
                pgas_sweep(
                    &model,
                    &rw,
                    &self.state.theta0,
                    &self.state.path,
                    self.n_particles,
                    &mut self.workspace,
                    rng,
                )
            }
            (_, Some(obs)) => {
                let model = SpectralModel { obs, p, sv, sigma2 };
                pgas_sweep(
                    &model,
                    &rw,
                    &self.state.theta0,
                    &self.state.path,
                    self.n_particles,
                    &mut self.workspace,
                    rng,
                )
            }
            _ => unreachable!(),
        }
    }

    /// One iteration: path, `Q`, innovation variance (skipped under SV), `theta_0`.
    pub fn sweep<R: Rng + ?Sized>(&mut self, rng: &mut R) -> Result<()> {
        self.state.path = self.pgas(rng)?;
        self.state.q = update_q(&self.state.path, &self.state.theta0, &self.priors, rng)?;
        if !self.spec.sv {
            let phi = self.phi_path();
            self.state.sigma2 = match (&self.data, &self.obs) {
                (PreparedData::TimeDomain(x), _) => {
                    update_sigma2_time_domain(x.values(), &phi, self.spec.order, &self.priors, rng)?
                }
                (_, Some(obs)) => update_sigma2(obs, &phi, &self.priors, rng)?,
                _ => unreachable!(),
            };
        }
        let d = self.dim();
        self.state.theta0 = update_initial_state(&self.state.path[..d], &self.state.q, &self.priors, rng)?;
        Ok(())
    }
}

/// Stored draws of a Gibbs run.
#[derive(Debug, Clone, PartialEq)]
pub struct PosteriorDraws {
    pub spec: LikelihoodSpec,
    pub order: usize,
    pub n_draws: usize,
    pub n_states: usize,
    /// 1-based time of each state.
    pub centers: Vec<usize>,
    pub t_len: usize,
    /// `(draw, state, lag)`.
    pub phi: Vec<f64>,
    /// `(draw, state)`.
    pub sigma2: Vec<f64>,
    /// `(draw, row, col)` of the state covariance.
    pub q: Vec<f64>,
    /// `(draw, component)`.
    pub theta0: Vec<f64>,
    /// Fraction of iterations in which each state changed.
    pub update_rate: Vec<f64>,
}

impl PosteriorDraws {
    pub fn dim(&self) -> usize {
        self.theta0.len() / self.n_draws.max(1)
    }

    pub fn phi_quantiles(&self, probs: &[f64]) -> Result<QuantileTable> {
        QuantileTable::from_draws(&self.phi, self.n_draws, self.n_states, self.order, probs)
    }

    pub fn sigma2_quantiles(&self, probs: &[f64]) -> Result<QuantileTable> {
        QuantileTable::from_draws(&self.sigma2, self.n_draws, self.n_states, 1, probs)
    }

    pub fn log_variance_quantiles(&self, probs: &[f64]) -> Result<QuantileTable> {
        let h: Vec<f64> = self.sigma2.iter().map(|s| s.ln()).collect();
        QuantileTable::from_draws(&h, self.n_draws, self.n_states, 1, probs)
    }

    /// Posterior median of `phi` at each state, `n_states * p`.
    pub fn phi_median(&self) -> Result<Vec<f64>> {
        Ok(self.phi_quantiles(&[0.5])?.values().to_vec())
    }

    pub fn phi_draw(&self, draw: usize) -> &[f64] {
        let w = self.n_states * self.order;
        &self.phi[draw * w..(draw + 1) * w]
    }

    pub fn mean_update_rate(&self) -> f64 {
        self.update_rate.iter().sum::<f64>() / self.update_rate.len().max(1) as f64
    }
}

/// Runs the sampler on prepared data, optionally starting from constant AR coefficients.
pub fn gibbs_run_prepared(
    data: PreparedData<f64>,
    spec: &LikelihoodSpec,
    priors: &Priors,
    config: &GibbsConfig,
    initial_ar: Option<&[f64]>,
) -> Result<PosteriorDraws> {
    config.validate()?;
    let centers = data.centers();
    let t_len = data.series_len();
    let mut sampler = GibbsSampler::new(data, *spec, priors.clone(), config.n_particles)?;
    if let Some(phi) = initial_ar {
        sampler.initialize_from_ar(phi)?;
    }
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let (p, d, n_states) = (spec.order, sampler.dim(), sampler.n_states());
    let n_keep = config.n_stored();
    let mut draws = PosteriorDraws {
        spec: *spec,
        order: p,
        n_draws: 0,
        n_states,
        centers,
        t_len,
        phi: Vec::with_capacity(n_keep * n_states * p),
        sigma2: Vec::with_capacity(n_keep * n_states),
        q: Vec::with_capacity(n_keep * d * d),
        theta0: Vec::with_capacity(n_keep * d),
        update_rate: vec![0.0; n_states],
    };
    for iter in 0..config.n_iter {
        let before = sampler.state.path.clone();
        sampler.sweep(&mut rng)?;
        for (s, (a, b)) in before.chunks(d).zip(sampler.state.path.chunks(d)).enumerate() {
            if a != b {
                draws.update_rate[s] += 1.0;
            }
        }
        if config.keeps(iter) {
            let phi = sampler.phi_path();
            if let Some(s) = phi.chunks(p).position(|row| !is_stable(row)) {
                return Err(Error::Numerical(format!("unstable AR coefficients stored at state {}", s + 1)));
            }
            draws.phi.extend_from_slice(&phi);
            draws.sigma2.extend(sampler.sigma2_path());
            draws.q.extend(sampler.state.q.transpose().iter());
            draws.theta0.extend_from_slice(&sampler.state.theta0);
            draws.n_draws += 1;
        }
    }
    for r in &mut draws.update_rate {
        *r /= config.n_iter as f64;
    }
    Ok(draws)
}

/// Prepares the data for `spec` and runs the sampler, started from a Burg
/// AR(p) fit to the whole series.
pub fn gibbs_run(
    x: &TimeSeries<f64>,
    spec: &LikelihoodSpec,
    priors: &Priors,
    config: &GibbsConfig,
) -> Result<PosteriorDraws> {
    let start = initial_ar_fit(x, spec.order);
    gibbs_run_prepared(prepare(x, spec)?, spec, priors, config, start.as_deref())
}

/// Order-`p` Burg coefficients of the whole series, if stable.
pub fn initial_ar_fit(x: &TimeSeries<f64>, p: usize) -> Option<Vec<f64>> {
    if x.len() <= p + 1 {
        return None;
    }
    burg(x.values(), p).pop().map(|f| f.phi).filter(|phi| phi.len() == p && is_stable(phi))
}
