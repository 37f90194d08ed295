//! Constraint analysis for finite-dimensional linear presymplectic systems,
//! together with the mimetic grid operators, spectral wave propagation and
//! discrete Hodge decomposition needed to apply it to scalar and Maxwell
//! boundary-field models.
//!
//! The crate is organized around five subsystems:
//!
//! * [`presym`] — the Gotay–Nester–Hinds constraint chain, Hamiltonian
//!   vector-field solution with gauge freedom, and the geometric
//!   classification of constraint subspaces.
//! * [`grid`] / [`ops`] — staggered rectangular grids and the mimetic
//!   discrete operators (grad, curl, weak divergence, Laplacians, traces)
//!   whose structural identities hold to round-off.
//! * [`spectral`] — eigendecomposition of symmetric nonnegative operators
//!   and the exact closed-form wave propagator.
//! * [`hodge`] — harmonic / transverse / longitudinal splitting of edge
//!   fields under relative or absolute boundary conditions.
//! * [`models`] — the concrete scalar and Maxwell systems assembled from the
//!   pieces above.

pub mod error;
pub mod grid;
pub mod hodge;
pub mod io;
pub mod linalg;
pub mod models;
pub mod ops;
pub mod presym;
pub mod spectral;

pub use error::{Error, Result};
pub use grid::{EntityKind, GridSpec, HoleBox, StaggeredField};
pub use hodge::{HarmonicBasis, HodgeDecomposition, HodgeProjector};
pub use ops::{BoundaryConditionSpec, DiscreteOperator, ScalarBc, TraceKind, VectorBc};
pub use presym::{
    classify_submanifold, constraint_chain, flat_map, solvability_subspace,
    symplectic_orthogonal, AffineSubspace, ClassificationReport, ConstraintChainResult,
    PresymplecticForm, PresymplecticSystem, QuadraticHamiltonian, SubmanifoldClass,
    VectorFieldSolution,
};
pub use spectral::{SpectralDecomposition, WaveState};
