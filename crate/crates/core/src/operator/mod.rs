//! Dense operator algebra on small tensor-product spaces and the state metrics
//! built on it.
//!
//! Basis convention: index 0 of every qubit is `|0⟩`, the `−1` eigenstate of
//! `σ_z`; index 1 is `|1⟩`. Subsystem order follows [`HilbertSpace::dims`],
//! most significant first.

mod density;
mod matrix;
mod metrics;
mod space;

pub use density::{thermal_state, DensityMatrix, StateAudit, StateTolerance, Temperature};
pub use matrix::{
    basis, eigh_matrix, embed, hermitian_part, hermiticity_deviation, max_abs, trace, CMatrix,
    CVector, Eigh, Operator, HERMITIAN_TOL,
};
pub(crate) use matrix::{I, ONE};
pub use metrics::{
    coherence_mode_weight, coherence_modes, fidelity, purity, von_neumann_entropy, CoherenceMode,
    MODE_TOL,
};
pub use space::{HilbertSpace, DEFAULT_DIM_CAP};
