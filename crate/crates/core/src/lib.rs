//! A cell-probe laboratory: simulated `w`-bit memory with probe accounting,
//! rank certificates, non-deterministic full persistence over a version tree,
//! and the reduction from butterfly reachability to persistent marked ancestor.
//!
//! Every layer is paired with a brute-force oracle so the whole chain can be
//! checked end to end.

pub mod butterfly;
pub mod cell;
pub mod cli;
pub mod dynamic;
pub mod error;
pub mod fixtures;
pub mod persistence;
pub mod rank;
pub mod reduction;

pub use error::{Error, Result};
