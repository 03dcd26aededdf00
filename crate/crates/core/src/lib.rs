//! Renewable energy community simulator with a hierarchical energy
//! management system.
//!
//! Every node runs a self-consumption dispatcher; a community-level fuzzy
//! controller, trained by a genetic algorithm against the community net
//! cost, overwrites each node's battery engagement `alpha` once per
//! 15-minute slot.

pub mod dispatch;
pub mod domain;
pub mod error;
pub mod ess;
pub mod forecast;
pub mod fuzzy;
pub mod ga;
pub mod hems;
pub mod io;
pub mod refine;
pub mod tariff;

pub use error::{Error, Result};
