//! Optimal investment, consumption and insurance with a durable and a
//! perishable consumption good in a jump-diffusion market.
//!
//! The crate has two solvers:
//!
//! * [`no_tc`]: the frictionless problem, where every control is a constant
//!   fraction of wealth and the value function is known up to one constant.
//! * [`hjbqvi`]: proportional transaction costs on the durable good. The
//!   problem becomes a quasi-variational inequality in transformed wealth
//!   `z = x / (k p)`, solved by stopping-time iteration with policy
//!   iteration and projected SOR on a monotone finite-difference grid.
//!
//! [`sim`] is a Monte Carlo simulator of the market and wealth dynamics that
//! serves as an independent check on both solvers.

pub mod error;
pub mod hjbqvi;
pub mod no_tc;
pub mod optimize;
pub mod params;
pub mod scenario;
pub mod sim;
pub mod utility;

pub use error::{Error, Result};
pub use params::{DerivedParams, ModelParams, Transversality, Violation};
pub use scenario::Scenario;
pub use utility::utility;
