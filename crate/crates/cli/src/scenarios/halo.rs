use rand::Rng as _;
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use decolab::qstate::{random, OperatorJson};
use decolab::quantify::{decoherence_gap, halo_sweep, write_halo_csv};
use decolab::{rng, DensityMatrix, OrthonormalBasis};

use super::Experiment;
use crate::error::CliError;
use crate::output::{num, Output};

/// Gap halo around the computational basis for a diagonal state, plus a
/// sweep of the gap over random state/basis pairs.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Halo {
    /// Diagonal of the state in the computational basis.
    pub diagonal: Vec<f64>,
    pub radius: f64,
    pub samples: usize,
    /// Random (state, basis) pairs in the sweep.
    pub pairs: usize,
    pub max_dim: usize,
}

impl Default for Halo {
    fn default() -> Self {
        Self { diagonal: vec![0.9, 0.1], radius: 0.1, samples: 100, pairs: 1000, max_dim: 8 }
    }
}

impl Experiment for Halo {
    fn violations(&self) -> Vec<String> {
        let mut v = Vec::new();
        if let Err(e) = DensityMatrix::from_diagonal(&self.diagonal) {
            v.push(format!("diagonal: {e}"));
        }
        if !(self.radius >= 0.0) {
            v.push(format!("radius = {} must be nonnegative", self.radius));
        }
        if self.pairs > 0 && self.max_dim < 1 {
            v.push("max_dim must be positive".into());
        }
        v
    }

    fn run(&self, out: &mut Output) -> Result<Value, CliError> {
        let rho = DensityMatrix::from_diagonal(&self.diagonal)?;
        let basis = OrthonormalBasis::computational(rho.dim());
        let halo = halo_sweep(&rho, &basis, self.radius, self.samples, out.seed())?;
        out.write("halo.csv", |f| Ok(write_halo_csv(f, &halo)?))?;
        let gaps: Vec<f64> = halo.iter().map(|s| s.report.gap).collect();

        let mut r = rng::stream(out.seed(), u64::MAX);
        let mut rows = Vec::with_capacity(self.pairs);
        let (mut min_gap, mut max_diag_gap) = (f64::INFINITY, 0.0f64);
        for k in 0..self.pairs {
            let dim = 1 + k % self.max_dim;
            let rank = 1 + r.random_range(0..dim);
            let state = random::density_matrix(dim, rank, &mut r);
            let b = random::basis(dim, &mut r);
            let gap = decoherence_gap(&state, &b)?.gap;
            let weights: Vec<f64> = (0..dim).map(|_| r.random::<f64>()).collect();
            let total: f64 = weights.iter().sum();
            let diagonal = DensityMatrix::from_diagonal(&weights.iter().map(|w| w / total).collect::<Vec<_>>())?;
            let diag_gap = decoherence_gap(&diagonal.conjugate_by(b.unitary()), &b)?.gap;
            min_gap = min_gap.min(gap);
            max_diag_gap = max_diag_gap.max(diag_gap.abs());
            rows.push(vec![k.to_string(), dim.to_string(), rank.to_string(), num(gap), num(diag_gap)]);
        }
        out.write_rows("gap_sweep.csv", &["pair", "dim", "rank", "gap", "diagonal_state_gap"], &rows)?;
        Ok(json!({
            "state": OperatorJson::from(rho.op().clone()),
            "unperturbed_gap": decoherence_gap(&rho, &basis)?.gap,
            "halo_min_gap": gaps.iter().copied().fold(f64::INFINITY, f64::min),
            "halo_mean_gap": gaps.iter().sum::<f64>() / gaps.len().max(1) as f64,
            "halo_max_gap": gaps.iter().copied().fold(0.0, f64::max),
            "sweep": {
                "pairs": self.pairs,
                "min_gap": (self.pairs > 0).then_some(min_gap),
                "max_abs_diagonal_state_gap": max_diag_gap,
            },
        }))
    }
}
