//! Desk-scale numerics for scale-free unique continuation on boxes.
//!
//! The crate discretizes Schrödinger operators `H = -Δ + V` on finite boxes,
//! builds observation sets from `(G, δ)`-equidistributed point sequences and
//! measures the quantities that unique-continuation estimates bound:
//!
//! * [`ucp`]: the constant `C_uc(V, E)` and the exact minimal observed-mass
//!   ratio over spectral subspaces,
//! * [`lifting`]: motion of spectral-gap edges of `H + tW`,
//! * [`random`]: random breather / alloy potentials and Wegner trace sampling,
//! * [`heat`]: observability constants, Gramians and minimal-norm null controls.
//!
//! [`scenario`] ties these together behind JSON configurations and the
//! `ucplab` binary.

// `!(x > 0.0)` guards reject NaN along with the bad range.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod error;
pub mod geometry;
pub mod grid;
pub mod heat;
pub mod lifting;
pub mod operator;
pub mod optimize;
pub mod random;
pub mod rng;
pub mod scenario;
pub mod spectral;
pub mod ucp;

pub use error::{Error, Result};
pub use geometry::{
    observation_mask, sample_equidistributed, validate_equidistributed, EquidistributedSequence,
    ObservationMask, ValidationReport,
};
pub use grid::{BoundaryCondition, BoxDomain, Grid, Potential, DEFAULT_NODE_CAP};
pub use operator::{assemble_hamiltonian, Hamiltonian};
pub use spectral::{eigendecompose, SpectralData, DEFAULT_EIGEN_TOL};
