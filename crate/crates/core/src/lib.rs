//! Three-party incentive bargaining for electric ride-hailing fleets.
//!
//! A ride-service provider assigns EVs to ride and charge requests by solving a
//! linear assignment problem. Customers' bids and the power utility's
//! incentives for charging on renewable surplus shift that assignment. The
//! parties iterate best responses ([`bargain`]) until the assignment and the
//! incentives stop moving, and [`equilibrium`] certifies the result with a
//! regularized-gap merit function. [`sim`] embeds the mechanism in a
//! minute-resolution day of fleet operation.

#![allow(clippy::needless_range_loop)]

pub mod assign;
pub mod bargain;
pub mod cli;
pub mod equilibrium;
pub mod error;
pub mod incentive;
pub mod ingest;
pub mod model;
pub mod sim;
pub mod snapshot;
pub mod synth;

pub use error::{Error, Result};
