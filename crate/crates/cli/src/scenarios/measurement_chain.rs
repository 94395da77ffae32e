use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use decolab::envmodels::{
    dephase, dephase_dense, pre_measurement, schmidt_coefficients, von_neumann_reduce, DephasingEnvironment,
    MeasurementChain,
};
use decolab::qstate::tensor;
use decolab::quantify::decoherence_gap;
use decolab::{ComplexOperator, DensityMatrix, OrthonormalBasis, StateVector, C64};

use super::Experiment;
use crate::error::CliError;
use crate::output::{num, Output};

/// Ideal pre-measurement of a system superposition, then dephasing of the
/// apparatus by `0..=max_units` environment units. The gap is that of the
/// joint state in the basis `I ⊗ pointer`.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct MeasurementChainRun {
    pub dim: usize,
    /// Real system amplitudes, normalized on use; uniform when empty.
    pub amplitudes: Vec<f64>,
    pub theta: f64,
    pub max_units: usize,
    /// Largest environment size also checked against the dense route.
    pub dense_max_units: usize,
}

impl Default for MeasurementChainRun {
    fn default() -> Self {
        Self { dim: 2, amplitudes: Vec::new(), theta: std::f64::consts::FRAC_PI_4, max_units: 30, dense_max_units: 8 }
    }
}

const DENSE_LIMIT: usize = 4096;

impl Experiment for MeasurementChainRun {
    fn violations(&self) -> Vec<String> {
        let mut v = Vec::new();
        if self.dim < 2 {
            v.push(format!("dim = {} must be at least 2", self.dim));
        }
        if !self.amplitudes.is_empty() && (self.amplitudes.len() != self.dim || self.amplitudes.iter().all(|a| *a == 0.0)) {
            v.push(format!("amplitudes must list {} reals, not all zero", self.dim));
        }
        if let Err(e) = DephasingEnvironment::new(self.max_units, self.theta) {
            v.push(e.to_string());
        }
        if self.dim > 2 && self.theta.cos() < -1.0 / (self.dim as f64 - 1.0) {
            v.push(format!("cos θ = {} is below −1/(dim−1) for a {}-state pointer", self.theta.cos(), self.dim));
        }
        v
    }

    fn run(&self, out: &mut Output) -> Result<Value, CliError> {
        let d = self.dim;
        let amplitudes = if self.amplitudes.is_empty() { vec![1.0; d] } else { self.amplitudes.clone() };
        let psi = StateVector::normalized(amplitudes.into_iter().map(|a| C64::new(a, 0.0)).collect())?;
        let chain = MeasurementChain::ideal(d)?;
        let joint = pre_measurement(&chain, &psi)?;
        let schmidt = schmidt_coefficients(&joint, (d, d))?;
        let reduction = von_neumann_reduce(&joint, &chain)?;

        let rho = DensityMatrix::from_pure(&joint);
        let pointer = OrthonormalBasis::computational(d);
        let lifted = OrthonormalBasis::from_unitary(tensor(&ComplexOperator::identity(d), pointer.unitary()))?;
        let mut rows = Vec::new();
        let (mut law_error, mut dense_error): (f64, f64) = (0.0, 0.0);
        let mut monotone = true;
        let mut last_gap = f64::INFINITY;
        for n in 0..=self.max_units {
            let env = DephasingEnvironment::new(n, self.theta)?;
            let suppression = env.suppression();
            let after = dephase(&rho, &env, &pointer)?;
            let mut coherence: f64 = 0.0;
            for row in 0..d * d {
                for col in 0..d * d {
                    if row % d != col % d {
                        let x = after.get(row, col);
                        coherence = coherence.max(x.norm());
                        law_error = law_error.max((x - rho.get(row, col) * suppression).norm());
                    }
                }
            }
            if n <= self.dense_max_units && d.checked_pow(n as u32).is_some_and(|e| d * d * e <= DENSE_LIMIT) {
                dense_error = dense_error.max(after.op().max_abs_diff(dephase_dense(&rho, &env, &pointer)?.op()));
            }
            let gap = decoherence_gap(&after, &lifted)?.gap;
            monotone &= gap <= last_gap + 1e-12;
            last_gap = gap;
            rows.push(vec![n.to_string(), num(suppression), num(coherence), num(gap)]);
        }
        out.write_rows("dephasing.csv", &["n", "suppression", "max_pointer_coherence", "pointer_gap"], &rows)?;
        Ok(json!({
            "schmidt_coefficients": schmidt,
            "schmidt_rank": schmidt.iter().filter(|c| **c > 1e-12).count(),
            "leakage": reduction.leakage,
            "max_law_error": law_error,
            "max_dense_route_error": dense_error,
            "pointer_gap_monotone": monotone,
        }))
    }
}
