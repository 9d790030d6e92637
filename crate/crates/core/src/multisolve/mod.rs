//! Eigenbasis of the Schrödinger operator, fountain-geometry checks and the
//! multi-solution finder.

pub mod eigen;
pub mod geometry;
pub mod solve;

pub use eigen::{schrodinger_eigenbasis, schrodinger_eigenbasis_with, EigenBasis, EigenOptions};
pub use geometry::{
    beta_k_estimate, coercivity_scan, ring_check, run_geometry, select_m, CoercivityReport, GeometryConfig,
    GeometryReport, MSelection, RingReport,
};
pub use solve::{
    find_solutions, nehari_project, symmetrize, verify_solution, Outcome, Parity, SolutionRecord, SolutionSet,
    SolverOptions, VerificationReport, CANONICAL_CLASSES,
};
