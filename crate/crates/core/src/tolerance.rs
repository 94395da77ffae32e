//! Global numerical tolerances.
//!
//! Values are validated at construction boundaries only. The defaults can be
//! replaced once per process with [`configure`], before first use.

use std::sync::OnceLock;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Tolerances {
    /// Hermiticity, unit trace, normalization and orthonormality checks.
    pub exact: f64,
    /// Smallest admissible eigenvalue of a density matrix.
    pub psd: f64,
    /// Eigenvalues below this are exact zeros in entropy sums.
    pub entropy_zero: f64,
    /// Denominator floor for off-diagonal ratios.
    pub ratio_floor: f64,
    /// Grid state checks (wavefunction norm, grid density matrix trace).
    pub grid: f64,
    /// Wigner normalization and marginals.
    pub wigner: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Self {
            exact: 1e-10,
            psd: 1e-9,
            entropy_zero: 1e-12,
            ratio_floor: 1e-12,
            grid: 1e-8,
            wigner: 1e-6,
        }
    }
}

static TOLERANCES: OnceLock<Tolerances> = OnceLock::new();

/// Install process-wide tolerances. Returns `false` if they were already set
/// (explicitly or by first use).
pub fn configure(tol: Tolerances) -> bool {
    TOLERANCES.set(tol).is_ok()
}

pub fn tolerances() -> &'static Tolerances {
    TOLERANCES.get_or_init(Tolerances::default)
}
