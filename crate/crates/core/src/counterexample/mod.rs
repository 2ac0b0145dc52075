//! A convex function on the plane that fails every KŁ inequality.
//!
//! The construction nests polygon-arc bodies whose consecutive Hausdorff
//! distances are not summable, assigns them levels with summable gaps, and
//! interpolates a convex function with exactly these sublevel sets.

pub mod field;
pub mod levels;
pub mod persist;
pub mod rings;
pub mod verify;
pub mod witness;

pub use field::{CexEval, CexField, Location, DEFAULT_DIRS, DEFAULT_NMAX};
pub use levels::{assign_levels, torralba_k, PrescribedLevels};
pub use persist::{read_cex, write_cex};
pub use rings::{build_rings, NestedBodies, RingParams};
pub use verify::{
    check_level_gaps, check_midpoint_convexity, check_reconstruction, reconstruct_body, reconstruction_report,
};
pub use witness::{generation_gradient_max, generation_sums_closed_form, kl_failure_witness, WitnessTable};
