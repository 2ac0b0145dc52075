//! A desk-scale laboratory for the Kurdyka–Łojasiewicz inequality in the
//! plane: slope profiles and desingularization functions for a zoo of
//! analytically known fields, subgradient flows and proximal/gradient
//! schemes with length certificates, and an explicit convex function whose
//! sublevel sets have a divergent Hausdorff sum.

// `!(x > 0.0)` style guards are deliberate: they also reject NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod algorithms;
pub mod analysis;
pub mod counterexample;
pub mod error;
pub mod exec;
pub mod flows;
pub mod format;
pub mod geometry;
pub mod report;
pub mod zoo;

pub use error::{Error, Result};
pub use exec::Exec;
pub use geometry::{ConvexBody, Point, UnitDirection};
