//! Nested quantum annealing correction (NQAC) simulator and analysis toolkit.
//!
//! Pipeline: a logical Ising problem on `K_N` is nested at level `C`,
//! minor-embedded onto a Chimera hardware graph with balanced chains, sampled
//! through a quasi-static (Gibbs-at-freezing) device model with control
//! noise, and decoded by two rounds of majority vote. The analysis layer
//! extracts success curves, effective inverse temperatures, the energy boost
//! `mu_C` via data collapse, and its power-law exponent `eta`.

pub mod analysis;
pub mod bm;
pub mod chimera;
pub mod error;
pub mod experiment;
pub mod io;
pub mod ising;
pub mod nesting;
pub mod reads;
pub mod samplers;
pub mod seeds;
pub mod spline;

pub use error::{Error, Result};
pub use ising::{EnergyHistogram, IsingProblem, SpinConfig};
pub use nesting::{NestedProblem, ResourceCount};
pub use reads::{Provenance, ReadSet};
