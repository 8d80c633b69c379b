//! Exact computation on the Walsh phase plane.
//!
//! Everything downstream of the step-function layer runs over the field
//! extension Q(√2), so inner products, projections, sizes and the quartile
//! trilinear form are computed without rounding. Floating point appears only
//! at the final root/power stage of norm evaluation and in the measured
//! constants reported by the audits.
//!
//! Layout:
//! - [`scalar`]: elements a + b√2 with arbitrary-precision rational a, b
//! - [`dyadic`]: dyadic intervals, unions of intervals, step functions
//! - [`walsh`]: Walsh functions and wave packets
//! - [`plane`]: tiles, quartiles, the Fefferman order, convexity, shadows
//! - [`tree`]: trees, disjointified tile families, phase-space projections
//! - [`model`]: the quartile operator and its trilinear form
//! - [`decomp`]: sizes, the size lemma, forests, the forest estimate
//! - [`mfcz`]: dyadic maximal functions, exceptional sets, the
//!   multi-frequency Calderon-Zygmund decomposition
//! - [`analysis`]: decreasing rearrangements, Lorentz quasi-norms, layers
//! - [`fixtures`]: seeded random generators shared by tests and the CLI

pub mod analysis;
pub mod decomp;
pub mod dyadic;
mod error;
pub mod fixtures;
pub mod mfcz;
pub mod model;
pub mod plane;
pub mod scalar;
pub mod tree;
pub mod walsh;

pub use dyadic::{DyadicInterval, DyadicUnion, Exponent, StepFunction};
pub use error::{Error, Result};
pub use plane::{Quartile, Region, Tile};
pub use scalar::ExactScalar;
pub use tree::Tree;

/// Crate version embedded in reports for replayability.
pub const VERSION: &str = env!("CARGO_PKG_VERSION");
