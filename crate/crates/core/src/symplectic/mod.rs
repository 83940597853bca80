//! Symplectic paths generated by time-dependent quadratic Hamiltonians and
//! their Maslov-type indices.

mod corollary;
mod crossing;
mod family;
mod path;

pub use corollary::{index_corollary1, index_corollary1_report, Corollary1Report, EigenOneCrossing};
pub use crossing::{
    crossing_form, crossing_times, index_maslov, index_maslov_report, maslov_index, Crossing, CrossingContribution,
    MaslovIndex, DEFAULT_DET_TOL, DEFAULT_EPSILON, DEFAULT_STEPS,
};
pub use family::{FamilySpec, MatrixFn, Smoothness, TimeSymmetricFamily, TrigSeries};
pub use path::{
    integrate_linear_hamiltonian, theorem3_path, Junction, PathPiece, Side, SymplecticPath, MIN_STEPS,
    SYMPLECTICITY_LIMIT,
};
