//! Weighted subgraph statistics of Erdős–Rényi graphs and the discrete chaos
//! calculus used to bound their distance to the normal law.
//!
//! The crate is organised by concern:
//!
//! * [`pattern`]: pattern graphs, subgraph lattices, copy enumeration.
//! * [`weights`]: nonnegative edge-weight laws.
//! * [`graph_stats`]: sampling weighted `G(n, p)` and exact moments of the combined weight.
//! * [`bounds`]: Wasserstein rate bounds and their regime specialisations.
//! * [`distance`]: exact Wasserstein-1 distance of a sample to the standard normal.
//! * [`chaos`]: grid-discretised multiple stochastic integrals and their calculus.
//! * [`artifacts`]: run configuration echo and CSV/JSON serialisation.

pub mod artifacts;
pub mod bounds;
pub mod chaos;
pub mod distance;
pub mod error;
pub mod graph_stats;
pub mod pattern;
pub mod rng;
pub mod weights;

mod util;

pub use error::{Error, Result};
