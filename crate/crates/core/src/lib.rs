//! Genealogies of the power-law urn.
//!
//! Site `n` copies site `n - R` with `P(R >= k) = k^{-alpha} L(k)`. The
//! renewal weights and pair coalescence probabilities are computed exactly
//! and serve as oracles for the lineage simulator. The coloured partial sums
//! are checked against their fractional Brownian limit.

pub mod convolution;
pub mod diagnostics;
pub mod error;
pub mod increments;
pub mod lineages;
pub mod paths;
pub mod quad;
pub mod renewal;
pub mod rng;
pub mod seedbank;
pub mod special;

pub use error::{Error, Result};
pub use increments::{IncrementLaw, TailVariant};
pub use renewal::{AsymptoticConstants, RenewalMode, RenewalTable};
