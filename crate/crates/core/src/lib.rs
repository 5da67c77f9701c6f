//! Whittle-type likelihoods for time-varying autoregressive models.
//!
//! The numerical building blocks ([`spectral`], [`localper`], [`modify`],
//! [`tvar`], [`likelihood`]) are generic over [`Real`] (`f32` or `f64`).
//! The sampler in [`inference`] and the [`metrics`] work in `f64`.

pub mod error;
pub mod inference;
pub mod likelihood;
pub mod localper;
pub mod metrics;
pub mod modify;
pub mod scalar;
pub mod spectral;
pub mod tvar;

pub use error::{Error, Result};
pub use likelihood::{prepare, Family, LikelihoodSpec, PreparedData};
pub use modify::Modification;
pub use scalar::Real;
pub use spectral::{FourierGrid, TimeSeries};
pub use tvar::TvarPath;

pub type TimeSeries64 = spectral::TimeSeries<f64>;
pub type TimeSeries32 = spectral::TimeSeries<f32>;
pub type Periodogram64 = spectral::Periodogram<f64>;
pub type BlockPeriodogram64 = localper::BlockPeriodogram<f64>;
pub type MovingPeriodogram64 = localper::MovingPeriodogram<f64>;
pub type TvarPath64 = tvar::TvarPath<f64>;
pub type PreparedData64 = likelihood::PreparedData<f64>;
