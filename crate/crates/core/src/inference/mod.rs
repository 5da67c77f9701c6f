//! Posterior sampling for tvAR models with time-domain or Whittle-type likelihoods.

pub mod distributions;
pub mod gibbs;
pub mod pgas;
pub mod summary;

pub use distributions::{InverseGamma, InverseWishart, MultivariateNormal};
pub use gibbs::{
    conditional_ssr, gibbs_run, gibbs_run_prepared, initial_ar_fit, initial_state_conditional, update_initial_state,
    update_q, update_sigma2, update_sigma2_time_domain, GibbsConfig, GibbsSampler, GibbsState, PosteriorDraws, Priors,
    DEFAULT_PARTICLES, MAX_ORDER,
};
pub use pgas::{multinomial_resample, pgas_sweep, ObservationModel, PgasWorkspace, RandomWalk};
pub use summary::{interpolate_path, interpolation_index, quantile_sorted, quantiles, QuantileTable};
