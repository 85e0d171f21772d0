//! Leaf-degree models of Gnutella ultrapeers as finite-life loss queues.
//!
//! * [`model`]: capacities, state spaces, admission rules and generators.
//! * [`equilibrium`]: closed-form and linear-solve equilibria, marginals,
//!   L1 distance.
//! * [`fitting`]: Nelder-Mead fit of rates to an empirical degree histogram.
//! * [`ssa`]: event-by-event simulation used as an independent oracle.
//! * [`report`]: CSV and key=value text formats.
//!
//! The analytic pipeline is generic over [`Scalar`] (`f32`/`f64`); the
//! aliases below fix it to `f64`, which fitting and simulation use.

pub mod equilibrium;
pub mod error;
pub mod fitting;
pub mod linalg;
pub mod model;
pub mod report;
pub mod scalar;
pub mod ssa;

pub use error::{Error, Result};
pub use model::{
    build_generator, can_admit, enumerate_states, CapacityConfig, ConnClass, ModelKind, QueueModel,
    State, StateSpace,
};
pub use scalar::Scalar;

pub type RateParams = model::RateParams<f64>;
pub type Generator = model::Generator<f64>;
pub type Distribution = equilibrium::Distribution<f64>;
pub type MarginalReport = equilibrium::MarginalReport<f64>;

pub type RateParamsF32 = model::RateParams<f32>;
pub type GeneratorF32 = model::Generator<f32>;
pub type DistributionF32 = equilibrium::Distribution<f32>;
