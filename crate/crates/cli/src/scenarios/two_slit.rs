use std::f64::consts::PI;

use rand::Rng as _;
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use decolab::histories::{
    additivity_defect, consistency_check, interference_term, two_slit_history_set, two_slit_probabilities,
    write_defect_csv, ProjectiveDecomposition, DEFAULT_EPSILON,
};
use decolab::qstate::random;
use decolab::{rng, OrthonormalBasis, Projector, StateVector, C64};

use super::Experiment;
use crate::error::CliError;
use crate::output::{num, Output};

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TwoSlit {
    /// Fixed four-level instance instead of a random one.
    pub demo: bool,
    pub dim: usize,
    /// Random instances in the defect-identity sweep.
    pub instances: usize,
    pub max_dim: usize,
}

impl Default for TwoSlit {
    fn default() -> Self {
        Self { demo: false, dim: 6, instances: 500, max_dim: 8 }
    }
}

struct Instance {
    psi: StateVector,
    slits: ProjectiveDecomposition,
    screen: ProjectiveDecomposition,
}

fn span(basis: &OrthonormalBasis, range: std::ops::Range<usize>) -> decolab::Result<Projector> {
    Projector::onto(&range.map(|k| basis.vector(k)).collect::<Vec<_>>())
}

/// Uniform superposition of four sites, slits over sites {0,1} and {2,3},
/// screen cells in the discrete Fourier basis.
fn demo() -> decolab::Result<Instance> {
    let psi = StateVector::new(vec![C64::new(0.5, 0.0); 4])?;
    let slits = ProjectiveDecomposition::from_index_blocks(4, &[vec![0, 1], vec![2, 3]])?;
    let fourier: Vec<StateVector> = (0..4)
        .map(|j| StateVector::new((0..4).map(|k| C64::from_polar(0.5, 2.0 * PI * (j * k) as f64 / 4.0)).collect()))
        .collect::<decolab::Result<_>>()?;
    let screen = ProjectiveDecomposition::new(fourier.iter().map(|v| Projector::onto(std::slice::from_ref(v))).collect::<decolab::Result<_>>()?)?;
    Ok(Instance { psi, slits, screen })
}

fn random_instance(dim: usize, r: &mut rng::Rng) -> decolab::Result<Instance> {
    let psi = random::state(dim, r);
    let slit_basis = random::basis(dim, r);
    let cut = 1 + r.random_range(0..dim - 1);
    let slits = ProjectiveDecomposition::new(vec![span(&slit_basis, 0..cut)?, span(&slit_basis, cut..dim)?])?;
    let screen_basis = random::basis(dim, r);
    let screen = ProjectiveDecomposition::new((0..dim).map(|k| span(&screen_basis, k..k + 1)).collect::<decolab::Result<_>>()?)?;
    Ok(Instance { psi, slits, screen })
}

impl Experiment for TwoSlit {
    fn violations(&self) -> Vec<String> {
        let mut v = Vec::new();
        if !self.demo && self.dim < 2 {
            v.push(format!("dim = {}: two slits need at least two levels", self.dim));
        }
        if self.instances > 0 && self.max_dim < 2 {
            v.push(format!("max_dim = {} must be at least 2", self.max_dim));
        }
        v
    }

    fn run(&self, out: &mut Output) -> Result<Value, CliError> {
        let inst = if self.demo { demo()? } else { random_instance(self.dim, &mut rng::stream(out.seed(), 0))? };
        let (psi, slits, screen) = (&inst.psi, &inst.slits, &inst.screen);
        let table = two_slit_probabilities(psi, slits, screen)?;
        let mut rows = Vec::new();
        let mut sums = [0.0; 5];
        let mut identity_error: f64 = 0.0;
        for (j, (&first, &second)) in table[0].iter().zip(&table[1]).enumerate() {
            let direct = psi.sandwich(screen.projector(j).op()).re;
            let defect = additivity_defect(psi, slits, screen, j)?;
            let interference = interference_term(psi, slits, screen, j)?;
            identity_error = identity_error.max((defect - interference).abs());
            let fields = [direct, first, second, defect, interference];
            sums.iter_mut().zip(fields).for_each(|(s, x)| *s += x);
            rows.push(std::iter::once(j.to_string()).chain(fields.map(num)).collect());
        }
        rows.push(std::iter::once("sum".to_string()).chain(sums.map(num)).collect());
        out.write_rows(
            "defect_table.csv",
            &["screen_cell", "p_screen", "p_slit_1", "p_slit_2", "defect", "interference_term"],
            &rows,
        )?;
        let report = consistency_check(&two_slit_history_set(psi, slits, screen)?, DEFAULT_EPSILON)?;
        out.write("histories.csv", |f| Ok(write_defect_csv(f, &report)?))?;

        let mut r = rng::stream(out.seed(), 1);
        let (mut sweep_identity, mut sweep_sum): (f64, f64) = (0.0, 0.0);
        for k in 0..self.instances {
            let inst = random_instance(2 + k % (self.max_dim - 1), &mut r)?;
            let mut total = 0.0;
            for j in 0..inst.screen.len() {
                let d = additivity_defect(&inst.psi, &inst.slits, &inst.screen, j)?;
                let i = interference_term(&inst.psi, &inst.slits, &inst.screen, j)?;
                sweep_identity = sweep_identity.max((d - i).abs());
                total += d;
            }
            sweep_sum = sweep_sum.max(total.abs());
        }
        Ok(json!({
            "defect_sum": sums[3],
            "max_defect_identity_error": identity_error,
            "histories_max_offdiag": report.max_offdiag,
            "histories_consistent": report.consistent,
            "sweep": {
                "instances": self.instances,
                "max_defect_identity_error": sweep_identity,
                "max_abs_defect_sum": sweep_sum,
            },
        }))
    }
}
