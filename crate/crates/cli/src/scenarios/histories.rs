use rand::Rng as _;
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use decolab::histories::{
    consistency_check_with, write_defect_csv, ConsistencyMode, HistorySet, ProjectiveDecomposition,
};
use decolab::qstate::random;
use decolab::{rng, ComplexOperator, DensityMatrix, OrthonormalBasis, Projector};

use super::Experiment;
use crate::error::CliError;
use crate::output::{num, Output};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Model {
    /// Hamiltonian, initial state and every projector share one random eigenbasis.
    Conserved,
    /// Independent random Hamiltonian, state and projector bases.
    Random,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct HistoriesCheck {
    pub model: Model,
    pub dim: usize,
    pub slots: usize,
    pub instances: usize,
    pub epsilon: f64,
    pub mode: ConsistencyMode,
}

impl Default for HistoriesCheck {
    fn default() -> Self {
        Self { model: Model::Conserved, dim: 4, slots: 3, instances: 40, epsilon: 1e-10, mode: ConsistencyMode::Absolute }
    }
}

const MAX_HISTORIES: usize = 4096;

fn blocks(basis: &OrthonormalBasis, dim: usize, r: &mut rng::Rng) -> decolab::Result<ProjectiveDecomposition> {
    let mut bounds: Vec<usize> = std::iter::once(0).chain((1..dim).filter(|_| r.random_bool(0.5))).collect();
    bounds.push(dim);
    let projectors = bounds
        .windows(2)
        .map(|w| Projector::onto(&(w[0]..w[1]).map(|k| basis.vector(k)).collect::<Vec<_>>()))
        .collect::<decolab::Result<_>>()?;
    ProjectiveDecomposition::new(projectors)
}

impl HistoriesCheck {
    fn instance(&self, r: &mut rng::Rng) -> decolab::Result<HistorySet> {
        let d = self.dim;
        let mut t = 0.0;
        let times: Vec<f64> = (0..self.slots)
            .map(|_| {
                t += r.random_range(0.2..1.5);
                t
            })
            .collect();
        let rank = 1 + r.random_range(0..d);
        let (h, rho, decs) = match self.model {
            Model::Conserved => {
                let basis = random::basis(d, r);
                let energies: Vec<f64> = (0..d).map(|_| r.random_range(-2.0..2.0)).collect();
                let u = basis.unitary();
                let h = &(u * &ComplexOperator::from_real_diagonal(&energies)) * &u.adjoint();
                let weights: Vec<f64> = (0..d).map(|k| if k < rank { r.random::<f64>() } else { 0.0 }).collect();
                let total: f64 = weights.iter().sum();
                let rho = DensityMatrix::from_diagonal(&weights.iter().map(|w| w / total).collect::<Vec<_>>())?.conjugate_by(u);
                let decs = (0..self.slots).map(|_| blocks(&basis, d, r)).collect::<decolab::Result<Vec<_>>>()?;
                (h, rho, decs)
            }
            Model::Random => {
                let h = random::hermitian(d, r);
                let rho = random::density_matrix(d, rank, r);
                let decs = (0..self.slots)
                    .map(|_| {
                        let basis = random::basis(d, r);
                        blocks(&basis, d, r)
                    })
                    .collect::<decolab::Result<Vec<_>>>()?;
                (h, rho, decs)
            }
        };
        HistorySet::new(times, decs, h, rho)
    }
}

impl Experiment for HistoriesCheck {
    fn violations(&self) -> Vec<String> {
        let mut v = Vec::new();
        if self.dim == 0 || self.slots == 0 {
            v.push("dim and slots must be positive".into());
        } else if self.dim.checked_pow(self.slots as u32).is_none_or(|n| n > MAX_HISTORIES) {
            v.push(format!("dim^slots exceeds {MAX_HISTORIES} histories"));
        }
        if !(self.epsilon >= 0.0) {
            v.push(format!("epsilon = {} must be nonnegative", self.epsilon));
        }
        v
    }

    fn run(&self, out: &mut Output) -> Result<Value, CliError> {
        let mut rows = Vec::new();
        let (mut max_offdiag, mut max_additivity): (f64, f64) = (0.0, 0.0);
        let mut consistent = 0;
        for k in 0..self.instances {
            let set = self.instance(&mut rng::stream(out.seed(), k as u64))?;
            let report = consistency_check_with(&set, self.epsilon, self.mode)?;
            if k == 0 {
                out.write("decoherence_table.csv", |f| Ok(write_defect_csv(f, &report)?))?;
            }
            max_offdiag = max_offdiag.max(report.max_offdiag);
            // dropping the last slot must sum the finer probabilities
            let additivity = match (&report.probabilities, self.slots > 1) {
                (Some(probs), true) => {
                    consistent += 1;
                    let shorter = HistorySet::new(
                        set.times()[..self.slots - 1].to_vec(),
                        set.decompositions()[..self.slots - 1].to_vec(),
                        set.hamiltonian().clone(),
                        set.initial_state().clone(),
                    )?;
                    let coarse = consistency_check_with(&shorter, f64::INFINITY, self.mode)?;
                    let coarse = coarse.defect_table;
                    let last = set.decompositions()[self.slots - 1].len();
                    let err = (0..coarse.len())
                        .map(|g| {
                            let summed: f64 = probs.values()[g * last..(g + 1) * last].iter().sum();
                            (summed - coarse.re[g][g]).abs()
                        })
                        .fold(0.0, f64::max);
                    max_additivity = max_additivity.max(err);
                    Some(err)
                }
                (Some(_), false) => {
                    consistent += 1;
                    None
                }
                (None, _) => None,
            };
            rows.push(vec![
                k.to_string(),
                set.history_count().to_string(),
                num(report.max_offdiag),
                report.consistent.to_string(),
                additivity.map(num).unwrap_or_default(),
            ]);
        }
        out.write_rows("instances.csv", &["instance", "histories", "max_offdiag", "consistent", "coarse_grain_error"], &rows)?;
        Ok(json!({
            "instances": self.instances,
            "consistent_instances": consistent,
            "max_offdiag": max_offdiag,
            "max_coarse_grain_error": max_additivity,
        }))
    }
}
