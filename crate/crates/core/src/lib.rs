//! Tools for studying one-pass streaming algorithms with bounded memory that
//! try to tell whether their input was sampled uniformly with or without
//! replacement from `[N]`.
//!
//! * [`entropy`]: binary entropy, its inverse, the bottleneck function, KL
//!   divergence and mutual information over finite distributions.
//! * [`model`]: memory profiles, fixed-width states, the step-function
//!   contract, stream runners and samplers.
//! * [`bounds`]: per-step and chained information bounds, leading-order
//!   upper bounds and the lower bound achieved by the collision detector.
//! * [`collision`]: the list-storing collision detector.
//! * [`oracle`]: exhaustive enumeration of both input distributions.
//! * [`monte_carlo`]: sampled acceptance probabilities at scale.
//! * [`properties`]: grid checks of the analytic facts the bounds use.
//! * [`cli`]: the batch front-end behind the `switchlab` binary.

pub mod bounds;
pub mod cli;
pub mod collision;
pub mod entropy;
mod error;
pub mod model;
pub mod monte_carlo;
pub mod oracle;
pub mod properties;

pub use error::{Error, Result};
