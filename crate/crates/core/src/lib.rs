// `!(x > 0.0)` is used on purpose so that NaN is rejected too.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod carnot;
pub mod degree;
pub mod error;
pub mod forms;
pub mod galerkin;
pub mod linalg;
pub mod morse;
mod par;
mod scalar;
pub mod symplectic;
pub mod torus;

pub use carnot::{
    alphas, check_simple_spectrum, limit_measure_b, limit_measure_r, line_samples, CarnotAlgebra, Measure1D,
    MeasureOptions,
};
pub use degree::{ls_degree, sphere_degree, DegreeOptions, FiniteRankMap, SphereMap};
pub use error::{Error, Result};
pub use forms::{
    inertia, relative_signature, signature, FnFamily, InertiaTriple, RelativeSignature, SignaturePoint, SymmetricForm,
    TruncationFamily, ZeroTol,
};
pub use galerkin::{assemble, bq_kernel_dimension, index_galerkin, GalerkinOptions};
pub use morse::{betti_torus, check_morse_inequalities, morse_report, MorseOptions};
pub use symplectic::{index_corollary1, index_maslov, TimeSymmetricFamily};
pub use torus::{find_periodic_orbits, TorusHamiltonian};
