//! Numerical toolkit for open quantum systems and decoherence measures.
//!
//! Everything is in natural units (ħ = k_B = 1). Composite spaces use the
//! Kronecker convention in which the first tensor factor is the slow index:
//! the basis state `|i⟩ ⊗ |j⟩` of `A ⊗ B` sits at position `i * dim(B) + j`.

pub mod envmodels;
pub mod error;
pub mod histories;
pub mod qbm;
pub mod qstate;
pub mod quantify;
pub mod rng;
pub mod tolerance;
pub mod wigner;

pub use error::{Error, Result};
pub use qstate::{C64, ComplexOperator, DensityMatrix, OrthonormalBasis, Projector, StateVector};

/// Library version embedded in CLI manifests.
pub const VERSION: &str = env!("CARGO_PKG_VERSION");
