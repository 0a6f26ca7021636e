//! Sturm–Liouville spectral machinery for the wave equation with a singular
//! first-order coefficient `p` and a distributional potential `q = ν'`.
//!
//! The pipeline is:
//!
//! 1. [`coefficients`] describes `p` and `ν` as piecewise-smooth functions with
//!    explicit jump locations, computes the weight `g = exp(-½∫p)` and builds
//!    mollified (classical) regularizations.
//! 2. [`eigensolver`] integrates the modified Prüfer system for the
//!    quasi-derivative pair `(z, z' - νz)` and locates eigenvalues from the
//!    phase condition `θ(1, λ) = πn`.
//! 3. [`spectral`] and [`evolution`] expand data in the resulting basis and
//!    evolve the homogeneous and forced wave problems mode by mode.
//! 4. [`estimates`] evaluates both sides of the energy inequalities, and
//!    [`veryweak`] runs ε-ladders of regularized problems.
//! 5. [`oracle`] is an independent finite-difference reference.
//!
//! The crate is `no_std` (with `alloc`); enable the `std` feature for
//! `std::error::Error` integration.

#![cfg_attr(not(any(test, feature = "std")), no_std)]

extern crate alloc;

pub mod coefficients;
pub mod eigensolver;
mod error;
pub mod estimates;
pub mod evolution;
pub(crate) mod math;
pub mod ode;
pub mod oracle;
pub mod quadrature;
pub mod spectral;
pub mod veryweak;

pub use coefficients::{
    compute_weight, merged_breakpoints, mollify, CoefficientDescriptor, CoefficientSet, Grid,
    Jump, MollifierSpec, PiecewiseSmoothFn, Profile, RegularityClass, SingularDescriptor,
    WeightSamples,
};
pub use eigensolver::{
    build_basis, eigenpair, eigenvalue, prufer_integrate, EigenPair, PruferTrace, SpectralBasis,
};
pub use error::{Error, Result};
pub use evolution::{
    solve_forced, solve_homogeneous, Channel, ForcingTerm, InitialData, SeriesSolution, Snapshot,
};
pub use spectral::{forward, inverse, sobolev_norm, SpectralCoefficients};
