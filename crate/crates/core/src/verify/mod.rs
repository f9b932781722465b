//! Diagnostic suites that check the structural identities of the discrete
//! operators and emit machine-readable reports.

mod checks;
mod corner;
mod ensemble;
mod rellich;
mod suites;

pub use checks::*;
pub use corner::{
    corner_bump, corner_exponent_fit, sector_commutator_residual, single_mixed_corner, CommutatorResidual, CornerFit,
};
pub use ensemble::{jacobi_smooth, sample_rng, Ensemble, JACOBI_SWEEPS};
pub use rellich::{rellich_residual, rellich_residual_with, AffineField, BoundaryGradient, RellichResidual};
pub use suites::{
    run_suite, run_suite_on, Check, Relation, Suite, SuiteParams, SuiteReport, COMMUTATOR_GRADING,
    COMMUTATOR_LEVELS, COMMUTATOR_SUPPORT, CORNER_ANGLES,
};
