//! Spectral heat content of isotropic processes on bounded domains.
//!
//! The crate is organised bottom-up:
//!
//! * [`geometry`]: domains, level-set fields, signed distance, volume, perimeter
//!   and point sampling.
//! * [`processes`]: exact-in-law path samplers for Brownian motion, isotropic
//!   stable processes, fractional Brownian motion, subordinators, inverse clocks
//!   and time-changed compositions.
//! * [`estimators`]: Monte Carlo estimators of the heat content `Q`, the
//!   normaliser `mu`, tails, sup-moments and the functional heat content.
//! * [`asymptotics`]: reference normalisers, predicted limits, the cached
//!   constants table and ladder extrapolation.
//!
//! Every numeric routine is generic over [`Real`] (`f32` or `f64`). The aliases
//! at the crate root fix the scalar to `f64`, which is what the harness uses.

pub mod asymptotics;
pub mod error;
pub mod estimators;
pub mod geometry;
pub mod processes;
pub mod rng;
pub mod scalar;
pub mod special;
pub mod stats;

pub use error::{Error, Result};
pub use rng::RngStream;
pub use scalar::Real;

pub type Domain = geometry::DomainSpec<f64>;
pub type LevelSet = geometry::LevelSetField<f64>;
pub type Process = processes::ProcessSpec<f64>;
pub type Clock = processes::ClockSpec<f64>;
pub type Subordinator = processes::SubordinatorSpec<f64>;
pub type Path = processes::PathGrid<f64>;
pub use estimators::{Estimate as McEstimate, McConfig};
