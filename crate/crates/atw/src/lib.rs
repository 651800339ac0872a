//! Grid-based minimizing-movements simulator for mean curvature flow of
//! mean convex sets, with a verification suite for the scheme's structural
//! invariants (nestedness, outward minimality, curvature monotonicity,
//! comparison) and its arrival-time convergence.

pub mod contour;
pub mod dist;
pub mod error;
pub mod grid;
pub mod oracles;
pub mod scheme;
pub mod tv;

pub use error::{Error, Result};
