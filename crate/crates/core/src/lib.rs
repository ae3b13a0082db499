//! Multi-marginal convex analysis on uniform grids.
//!
//! The building blocks are extended-real grid functions ([`GridFunction`]),
//! their discrete Fenchel conjugates ([`transforms`]), and the N-marginal
//! c-conjugate for the correlation cost `c(x) = Σ_{i<j} ⟨xᵢ, xⱼ⟩`
//! ([`multiconj`]). On top of these sit contact sets and sum sets
//! ([`contact`]), a c-cyclical monotonicity checker ([`monotone`]),
//! closed-form reference examples ([`gallery`]) and a tiny brute-force
//! multi-marginal transport oracle ([`mmot`]).
//!
//! Dimensions are restricted to d ∈ {1, 2} for grid transforms; tuple
//! arithmetic works in any dimension.

pub mod cloud;
pub mod contact;
pub mod descriptor;
pub mod error;
pub mod extended;
pub mod gallery;
pub mod grid;
pub mod mmot;
pub mod monotone;
pub mod multiconj;
pub mod random;
pub mod report;
pub mod transforms;
pub mod verify;
pub mod tuple;

pub use cloud::{Marginal, PointCloud};
pub use error::{Error, Result};
pub use extended::ExtReal;
pub use grid::{Axis, Grid, GridFunction};
pub use report::{CheckRecord, Report, ToleranceConfig};
pub use tuple::{cost_c, PointTuple};
