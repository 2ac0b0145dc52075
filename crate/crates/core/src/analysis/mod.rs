//! Level profiles, desingularization functions, talwegs, and finite-sample
//! checks of the KŁ inequality and its equivalent forms.

pub mod checks;
pub mod growth;
pub mod level;
pub mod profile;
pub mod talweg;

pub use checks::{
    check_brezis, check_curve_lengths, check_error_bound, check_kl, check_restart_family, check_sublevel_lipschitz,
    kl_margin, Composed, Desingularization, LipschitzMode, OraclePhi, PowerPhi,
};
pub use growth::{growth_phi, GrowthPhi};
pub use level::{
    band_samples, geometric_grid, level_point, level_slopes, radial_level_point, sublevel_body, trace_level,
};
pub use profile::{
    build_phi, build_phi_relative, integrability_test, slope_profile, slope_profile_with, Integrability, LevelProfile,
    TailFit, TailModel,
};
pub use talweg::{extract_talweg, talweg_path, Talweg};
