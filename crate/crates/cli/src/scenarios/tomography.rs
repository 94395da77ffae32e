use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use decolab::envmodels::{
    decoherence_detection_pipeline, dephase, reconstruct_exact, reconstruct_state, simulate_measurements,
    write_pipeline_csv, DephasingEnvironment, TomographyPlan,
};
use decolab::qstate::OperatorJson;
use decolab::{rng, DensityMatrix, OrthonormalBasis, StateVector, C64};

use super::{slope, Experiment};
use crate::error::CliError;
use crate::output::{num, Output};

/// Qubit `a|0⟩ + b|1⟩` dephased by `n` environment units per sample; the
/// pipeline reconstructs each state from Pauli counts.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TomographyPipeline {
    /// Real amplitudes `[a, b]`, normalized on use.
    pub amplitudes: Vec<f64>,
    pub theta: f64,
    /// Environment sizes sampled by the pipeline (used as the time label).
    pub units: Vec<usize>,
    pub shots: u64,
    /// Shot counts for the error-scaling study.
    pub scaling_shots: Vec<u64>,
    pub repeats: usize,
}

impl Default for TomographyPipeline {
    fn default() -> Self {
        Self {
            amplitudes: vec![0.6, 0.8],
            theta: std::f64::consts::FRAC_PI_4,
            units: (0..=20).step_by(2).collect(),
            shots: 1000,
            scaling_shots: vec![100, 1_000, 10_000, 100_000],
            repeats: 20,
        }
    }
}

impl TomographyPipeline {
    fn initial(&self) -> decolab::Result<DensityMatrix> {
        let psi = StateVector::normalized(self.amplitudes.iter().map(|&a| C64::new(a, 0.0)).collect())?;
        Ok(DensityMatrix::from_pure(&psi))
    }
}

impl Experiment for TomographyPipeline {
    fn violations(&self) -> Vec<String> {
        let mut v = Vec::new();
        if self.amplitudes.len() != 2 || self.amplitudes.iter().all(|a| *a == 0.0) {
            v.push("amplitudes must be two reals, not both zero".into());
        }
        if let Err(e) = DephasingEnvironment::new(0, self.theta) {
            v.push(e.to_string());
        }
        if self.shots == 0 || self.scaling_shots.contains(&0) {
            v.push("shot counts must be positive".into());
        }
        if !self.scaling_shots.is_empty() && (self.scaling_shots.len() < 2 || self.repeats == 0) {
            v.push("the scaling study needs at least two shot counts and one repeat".into());
        }
        v
    }

    fn run(&self, out: &mut Output) -> Result<Value, CliError> {
        let seed = out.seed();
        let rho0 = self.initial()?;
        let pointer = OrthonormalBasis::computational(2);
        let states = self
            .units
            .iter()
            .map(|&n| Ok((n as f64, dephase(&rho0, &DephasingEnvironment::new(n, self.theta)?, &pointer)?)))
            .collect::<decolab::Result<Vec<_>>>()?;
        let plan = TomographyPlan::pauli(self.shots, seed);
        let points = decoherence_detection_pipeline(&states, &plan, &pointer)?;
        out.write("pipeline.csv", |f| Ok(write_pipeline_csv(f, seed, &points)?))?;
        if let Some((_, first)) = states.first() {
            let counts = simulate_measurements(first, &plan)?;
            out.write("counts.csv", |f| Ok(counts.write_csv(f)?))?;
        }

        let exact = reconstruct_exact(&rho0, &plan)?;
        let mut rows = Vec::new();
        let mut fit = Vec::new();
        for &n in &self.scaling_shots {
            let mut total = 0.0;
            for k in 0..self.repeats {
                let plan = TomographyPlan::pauli(n, rng::child_seed(rng::child_seed(seed, n), k as u64));
                let counts = simulate_measurements(&rho0, &plan)?;
                let rec = reconstruct_state(&counts, &plan, Some(&rho0))?;
                total += rec.diagnostics.trace_distance_to_reference.unwrap_or(f64::NAN);
            }
            let mean = total / self.repeats as f64;
            rows.push(vec![n.to_string(), num(mean)]);
            fit.push(((n as f64).ln(), mean.ln()));
        }
        if !rows.is_empty() {
            out.write_rows("tomography_scaling.csv", &["shots", "mean_trace_distance"], &rows)?;
        }
        let bracketed = points.iter().filter(|p| p.brackets(2.0)).count();
        Ok(json!({
            "pipeline_points": points.len(),
            "bracketed_within_2_sigma": bracketed,
            "final_gap_estimate": points.last().map(|p| p.gap_estimate),
            "final_exact_gap": points.last().map(|p| p.exact_gap),
            "exact_reconstruction_error": exact.state.op().max_abs_diff(rho0.op()),
            "initial_state": OperatorJson::from(rho0.op().clone()),
            "scaling_slope": (fit.len() >= 2).then(|| slope(&fit)),
        }))
    }
}
