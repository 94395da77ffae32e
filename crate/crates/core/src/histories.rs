//! Decoherence functional for finite sets of histories.
//!
//! A history picks one projector from each time's decomposition. Its class
//! operator is the time-ordered product of Heisenberg-picture projectors,
//! `C_α = P_n(t_n) ⋯ P_1(t_1)` with `P(t) = e^{iHt} P e^{−iHt}`, and
//!
//! ```text
//! d(α, β) = Tr(C_α ρ₀ C_β†)
//! ```
//!
//! so that `d(α, α)` is the sequential-measurement probability with the
//! earliest projector adjacent to `ρ₀`. Histories are enumerated
//! lexicographically with the earliest time slot most significant.

use std::io::Write;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::qstate::{ComplexOperator, DensityMatrix, Projector, StateVector, C64};
use crate::quantify::ProbabilityVector;
use crate::tolerance::tolerances;

/// Default absolute consistency threshold on `|d(α,β)|`.
pub const DEFAULT_EPSILON: f64 = 1e-8;

/// Exhaustive, mutually exclusive set of projectors.
#[derive(Debug, Clone, PartialEq)]
pub struct ProjectiveDecomposition {
    projectors: Vec<Projector>,
}

impl ProjectiveDecomposition {
    pub fn new(projectors: Vec<Projector>) -> Result<Self> {
        let dim = projectors.first().map(|p| p.dim()).ok_or_else(|| Error::invalid("decomposition", "no projectors"))?;
        let tol = tolerances().exact;
        let mut sum = ComplexOperator::zeros(dim);
        for (j, p) in projectors.iter().enumerate() {
            if p.dim() != dim {
                return Err(Error::DimensionMismatch { expected: dim, found: p.dim() });
            }
            sum = &sum + p.op();
            for q in &projectors[j + 1..] {
                let overlap = (p.op() * q.op()).max_abs();
                if overlap > tol {
                    return Err(Error::invalid("decomposition", format!("projectors overlap ({overlap:.3e})")));
                }
            }
        }
        let dev = sum.max_abs_diff(&ComplexOperator::identity(dim));
        if dev > tol {
            return Err(Error::invalid("decomposition", format!("incomplete (deviation {dev:.3e})")));
        }
        Ok(Self { projectors })
    }

    /// Rank-one projectors onto the computational basis.
    pub fn computational(dim: usize) -> Self {
        let projectors = (0..dim).map(|i| Projector::computational(dim, &[i]).expect("valid index")).collect();
        Self { projectors }
    }

    /// Computational projectors grouped into blocks of indices.
    pub fn from_index_blocks(dim: usize, blocks: &[Vec<usize>]) -> Result<Self> {
        Self::new(blocks.iter().map(|b| Projector::computational(dim, b)).collect::<Result<_>>()?)
    }

    pub fn dim(&self) -> usize {
        self.projectors[0].dim()
    }

    pub fn len(&self) -> usize {
        self.projectors.len()
    }

    pub fn is_empty(&self) -> bool {
        self.projectors.is_empty()
    }

    pub fn projector(&self, k: usize) -> &Projector {
        &self.projectors[k]
    }

    pub fn projectors(&self) -> &[Projector] {
        &self.projectors
    }
}

/// One projector index per time.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(transparent)]
pub struct HistoryIndex(pub Vec<usize>);

impl HistoryIndex {
    pub fn label(&self) -> String {
        self.0.iter().map(|k| k.to_string()).collect::<Vec<_>>().join("-")
    }
}

#[derive(Debug, Clone)]
pub struct HistorySet {
    times: Vec<f64>,
    decompositions: Vec<ProjectiveDecomposition>,
    hamiltonian: ComplexOperator,
    initial_state: DensityMatrix,
    /// `e^{iHt_k}` per time slot.
    forward: Vec<ComplexOperator>,
}

impl HistorySet {
    pub fn new(
        times: Vec<f64>,
        decompositions: Vec<ProjectiveDecomposition>,
        hamiltonian: ComplexOperator,
        initial_state: DensityMatrix,
    ) -> Result<Self> {
        if times.is_empty() || times.len() != decompositions.len() {
            return Err(Error::invalid("history set", "need one decomposition per time"));
        }
        if times.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(Error::invalid("history set", "times must be strictly increasing"));
        }
        let dim = initial_state.dim();
        for d in &decompositions {
            if d.dim() != dim {
                return Err(Error::DimensionMismatch { expected: dim, found: d.dim() });
            }
        }
        if hamiltonian.dim() != dim {
            return Err(Error::DimensionMismatch { expected: dim, found: hamiltonian.dim() });
        }
        let forward = times
            .iter()
            .map(|&t| hamiltonian.unitary_propagator(-t))
            .collect::<Result<Vec<_>>>()?;
        Ok(Self { times, decompositions, hamiltonian, initial_state, forward })
    }

    pub fn times(&self) -> &[f64] {
        &self.times
    }

    pub fn decompositions(&self) -> &[ProjectiveDecomposition] {
        &self.decompositions
    }

    pub fn hamiltonian(&self) -> &ComplexOperator {
        &self.hamiltonian
    }

    pub fn initial_state(&self) -> &DensityMatrix {
        &self.initial_state
    }

    pub fn dim(&self) -> usize {
        self.initial_state.dim()
    }

    pub fn history_count(&self) -> usize {
        self.decompositions.iter().map(|d| d.len()).product()
    }

    /// All histories in lexicographic order.
    pub fn histories(&self) -> Vec<HistoryIndex> {
        let sizes: Vec<usize> = self.decompositions.iter().map(|d| d.len()).collect();
        (0..self.history_count())
            .map(|mut flat| {
                let mut choice = vec![0; sizes.len()];
                for slot in (0..sizes.len()).rev() {
                    choice[slot] = flat % sizes[slot];
                    flat /= sizes[slot];
                }
                HistoryIndex(choice)
            })
            .collect()
    }

    fn check(&self, alpha: &HistoryIndex) -> Result<()> {
        if alpha.0.len() != self.times.len() {
            return Err(Error::DimensionMismatch { expected: self.times.len(), found: alpha.0.len() });
        }
        for (k, d) in alpha.0.iter().zip(&self.decompositions) {
            if *k >= d.len() {
                return Err(Error::IndexOutOfRange { index: *k, limit: d.len() });
            }
        }
        Ok(())
    }

    /// Heisenberg-picture projector `e^{iHt} P e^{−iHt}` for slot and choice.
    pub fn heisenberg_projector(&self, slot: usize, choice: usize) -> ComplexOperator {
        let u = &self.forward[slot];
        &(u * self.decompositions[slot].projector(choice).op()) * &u.adjoint()
    }
}

/// `C_α = P_n(t_n) ⋯ P_1(t_1)`
pub fn class_operator(set: &HistorySet, alpha: &HistoryIndex) -> Result<ComplexOperator> {
    set.check(alpha)?;
    let mut c = ComplexOperator::identity(set.dim());
    for (slot, &choice) in alpha.0.iter().enumerate() {
        c = &set.heisenberg_projector(slot, choice) * &c;
    }
    Ok(c)
}

fn functional_of(c_alpha: &ComplexOperator, rho: &DensityMatrix, c_beta: &ComplexOperator) -> C64 {
    (&(c_alpha * rho.op()) * &c_beta.adjoint()).trace()
}

/// `d(α, β) = Tr(C_α ρ₀ C_β†)`
pub fn decoherence_functional(set: &HistorySet, alpha: &HistoryIndex, beta: &HistoryIndex) -> Result<C64> {
    let ca = class_operator(set, alpha)?;
    let cb = class_operator(set, beta)?;
    Ok(functional_of(&ca, set.initial_state(), &cb))
}

/// Full table `d(α, β)` over [`HistorySet::histories`], rows in parallel.
pub fn decoherence_table(set: &HistorySet) -> Result<Vec<Vec<C64>>> {
    let histories = set.histories();
    let classes: Vec<ComplexOperator> =
        histories.iter().map(|h| class_operator(set, h)).collect::<Result<_>>()?;
    let rho = set.initial_state();
    Ok(classes
        .par_iter()
        .map(|ca| classes.iter().map(|cb| functional_of(ca, rho, cb)).collect())
        .collect())
}

/// How off-diagonal entries are compared against `epsilon`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum ConsistencyMode {
    /// `|d(α,β)| ≤ ε`
    #[default]
    Absolute,
    /// `|d(α,β)| / sqrt(d(α,α) d(β,β)) ≤ ε`; undefined pairs (a vanishing
    /// diagonal) are reported and skipped.
    Relative,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConsistencyReport {
    pub epsilon: f64,
    pub mode: ConsistencyMode,
    pub max_offdiag: f64,
    pub consistent: bool,
    pub probabilities: Option<ProbabilityVector>,
    pub labels: Vec<String>,
    pub defect_table: DefectTable,
    /// Pairs skipped in relative mode because a diagonal entry vanished.
    pub undefined_pairs: usize,
}

/// Complex table serialized as nested real and imaginary arrays.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DefectTable {
    pub re: Vec<Vec<f64>>,
    pub im: Vec<Vec<f64>>,
}

impl DefectTable {
    pub fn from_complex(t: &[Vec<C64>]) -> Self {
        Self {
            re: t.iter().map(|r| r.iter().map(|z| z.re).collect()).collect(),
            im: t.iter().map(|r| r.iter().map(|z| z.im).collect()).collect(),
        }
    }

    pub fn get(&self, a: usize, b: usize) -> C64 {
        C64::new(self.re[a][b], self.im[a][b])
    }

    pub fn len(&self) -> usize {
        self.re.len()
    }

    pub fn is_empty(&self) -> bool {
        self.re.is_empty()
    }
}

pub fn consistency_check(set: &HistorySet, epsilon: f64) -> Result<ConsistencyReport> {
    consistency_check_with(set, epsilon, ConsistencyMode::Absolute)
}

pub fn consistency_check_with(set: &HistorySet, epsilon: f64, mode: ConsistencyMode) -> Result<ConsistencyReport> {
    if !(epsilon >= 0.0) {
        return Err(Error::invalid("epsilon", format!("{epsilon} must be nonnegative")));
    }
    let table = decoherence_table(set)?;
    let n = table.len();
    let floor = tolerances().ratio_floor;
    let mut max_offdiag: f64 = 0.0;
    let mut undefined_pairs = 0;
    for a in 0..n {
        for b in 0..n {
            if a == b {
                continue;
            }
            let v = table[a][b].norm();
            match mode {
                ConsistencyMode::Absolute => max_offdiag = max_offdiag.max(v),
                ConsistencyMode::Relative => {
                    let denom = (table[a][a].re * table[b][b].re).max(0.0).sqrt();
                    if denom < floor {
                        undefined_pairs += 1;
                    } else {
                        max_offdiag = max_offdiag.max(v / denom);
                    }
                }
            }
        }
    }
    let consistent = max_offdiag <= epsilon;
    let probabilities = if consistent {
        let diag: Vec<f64> = (0..n).map(|a| table[a][a].re).collect();
        Some(ProbabilityVector::from_raw(diag, 1e-10)?)
    } else {
        None
    };
    Ok(ConsistencyReport {
        epsilon,
        mode,
        max_offdiag,
        consistent,
        probabilities,
        labels: set.histories().iter().map(HistoryIndex::label).collect(),
        defect_table: DefectTable::from_complex(&table),
        undefined_pairs,
    })
}

/// Merge histories into coarse-grained classes: `groups[g]` lists the
/// fine-grained row indices forming class `g`. Entries add by linearity of
/// the class operators.
pub fn coarse_grain(table: &[Vec<C64>], groups: &[Vec<usize>]) -> Result<Vec<Vec<C64>>> {
    let n = table.len();
    let mut seen = vec![false; n];
    for &i in groups.iter().flatten() {
        if i >= n {
            return Err(Error::IndexOutOfRange { index: i, limit: n });
        }
        if std::mem::replace(&mut seen[i], true) {
            return Err(Error::invalid("coarse graining", format!("history {i} appears twice")));
        }
    }
    if seen.iter().any(|s| !s) {
        return Err(Error::invalid("coarse graining", "groups do not cover every history"));
    }
    Ok(groups
        .iter()
        .map(|ga| {
            groups
                .iter()
                .map(|gb| ga.iter().flat_map(|&a| gb.iter().map(move |&b| (a, b))).map(|(a, b)| table[a][b]).sum())
                .collect()
        })
        .collect())
}

/// CSV with a label column followed by `re:<label>` and `im:<label>` columns.
pub fn write_defect_csv<W: Write>(out: W, report: &ConsistencyReport) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    let cerr = |e: csv::Error| Error::invalid("csv output", e.to_string());
    let mut header = vec!["history".to_string()];
    header.extend(report.labels.iter().map(|l| format!("re:{l}")));
    header.extend(report.labels.iter().map(|l| format!("im:{l}")));
    w.write_record(&header).map_err(cerr)?;
    for (a, label) in report.labels.iter().enumerate() {
        let mut row = vec![label.clone()];
        row.extend(report.defect_table.re[a].iter().map(|v| format!("{v:e}")));
        row.extend(report.defect_table.im[a].iter().map(|v| format!("{v:e}")));
        w.write_record(&row).map_err(cerr)?;
    }
    w.flush().map_err(|e| Error::invalid("csv output", e.to_string()))
}

fn check_two_slit(psi: &StateVector, slits: &ProjectiveDecomposition, screen: &ProjectiveDecomposition) -> Result<()> {
    if slits.len() != 2 {
        return Err(Error::invalid("two-slit setup", format!("expected 2 slit projectors, got {}", slits.len())));
    }
    for d in [slits.dim(), screen.dim()] {
        if d != psi.dim() {
            return Err(Error::DimensionMismatch { expected: psi.dim(), found: d });
        }
    }
    Ok(())
}

/// `p(i, t₁; j, t₂) = ⟨ψ|P_i Q_j P_i|ψ⟩` with zero Hamiltonian; rows are
/// slits, columns screen cells.
pub fn two_slit_probabilities(
    psi: &StateVector,
    slits: &ProjectiveDecomposition,
    screen: &ProjectiveDecomposition,
) -> Result<Vec<Vec<f64>>> {
    check_two_slit(psi, slits, screen)?;
    Ok(slits
        .projectors()
        .iter()
        .map(|p| {
            screen.projectors().iter().map(|q| psi.sandwich(&(&(p.op() * q.op()) * p.op())).re).collect()
        })
        .collect())
}

/// `p(j, t₂) − Σ_i p(i, t₁; j, t₂)`
pub fn additivity_defect(
    psi: &StateVector,
    slits: &ProjectiveDecomposition,
    screen: &ProjectiveDecomposition,
    j: usize,
) -> Result<f64> {
    check_two_slit(psi, slits, screen)?;
    if j >= screen.len() {
        return Err(Error::IndexOutOfRange { index: j, limit: screen.len() });
    }
    let table = two_slit_probabilities(psi, slits, screen)?;
    let direct = psi.sandwich(screen.projector(j).op()).re;
    Ok(direct - table[0][j] - table[1][j])
}

/// `2 Re⟨ψ|P₁ Q_j P₂|ψ⟩`, the interference form of [`additivity_defect`].
pub fn interference_term(
    psi: &StateVector,
    slits: &ProjectiveDecomposition,
    screen: &ProjectiveDecomposition,
    j: usize,
) -> Result<f64> {
    check_two_slit(psi, slits, screen)?;
    if j >= screen.len() {
        return Err(Error::IndexOutOfRange { index: j, limit: screen.len() });
    }
    let op = &(slits.projector(0).op() * screen.projector(j).op()) * slits.projector(1).op();
    Ok(2.0 * psi.sandwich(&op).re)
}

/// Two-time history set (slits, then screen) with zero Hamiltonian.
pub fn two_slit_history_set(
    psi: &StateVector,
    slits: &ProjectiveDecomposition,
    screen: &ProjectiveDecomposition,
) -> Result<HistorySet> {
    check_two_slit(psi, slits, screen)?;
    HistorySet::new(
        vec![1.0, 2.0],
        vec![slits.clone(), screen.clone()],
        ComplexOperator::zeros(psi.dim()),
        DensityMatrix::from_pure(psi),
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::qstate::{random, StateVector};
    use crate::rng;

    fn c(x: f64) -> C64 {
        C64::new(x, 0.0)
    }

    fn qubit_set(h: ComplexOperator, rho: DensityMatrix, times: Vec<f64>) -> HistorySet {
        let decs = times.iter().map(|_| ProjectiveDecomposition::computational(2)).collect();
        HistorySet::new(times, decs, h, rho).unwrap()
    }

    #[test]
    fn decomposition_validation() {
        assert!(ProjectiveDecomposition::from_index_blocks(3, &[vec![0], vec![1]]).is_err());
        assert!(ProjectiveDecomposition::from_index_blocks(3, &[vec![0, 1], vec![1, 2]]).is_err());
        assert!(ProjectiveDecomposition::from_index_blocks(3, &[vec![0, 2], vec![1]]).is_ok());
    }

    #[test]
    fn history_set_validation() {
        let rho = DensityMatrix::maximally_mixed(2);
        let decs = vec![ProjectiveDecomposition::computational(2); 2];
        assert!(HistorySet::new(vec![1.0, 1.0], decs.clone(), ComplexOperator::zeros(2), rho.clone()).is_err());
        assert!(HistorySet::new(vec![1.0], decs, ComplexOperator::zeros(2), rho).is_err());
    }

    #[test]
    fn enumeration_is_lexicographic() {
        let rho = DensityMatrix::maximally_mixed(3);
        let set = HistorySet::new(
            vec![0.0, 1.0],
            vec![
                ProjectiveDecomposition::from_index_blocks(3, &[vec![0], vec![1, 2]]).unwrap(),
                ProjectiveDecomposition::computational(3),
            ],
            ComplexOperator::zeros(3),
            rho,
        )
        .unwrap();
        let labels: Vec<String> = set.histories().iter().map(HistoryIndex::label).collect();
        assert_eq!(labels, ["0-0", "0-1", "0-2", "1-0", "1-1", "1-2"]);
    }

    #[test]
    fn identity_history_is_identity() {
        let rho = DensityMatrix::maximally_mixed(2);
        let id = ProjectiveDecomposition::new(vec![Projector::computational(2, &[0, 1]).unwrap()]).unwrap();
        let set = HistorySet::new(vec![0.5], vec![id], ComplexOperator::pauli_x(), rho).unwrap();
        let cop = class_operator(&set, &HistoryIndex(vec![0])).unwrap();
        assert!(cop.max_abs_diff(&ComplexOperator::identity(2)) < 1e-14);
    }

    #[test]
    fn zero_hamiltonian_gives_plain_product() {
        let mut r = rng::stream(21, 0);
        let rho = random::density_matrix(2, 2, &mut r);
        let set = qubit_set(ComplexOperator::zeros(2), rho, vec![0.3, 0.9]);
        let cop = class_operator(&set, &HistoryIndex(vec![0, 1])).unwrap();
        let p0 = set.decompositions()[0].projector(0).op().clone();
        let p1 = set.decompositions()[1].projector(1).op().clone();
        assert!(cop.max_abs_diff(&(&p1 * &p0)) < 1e-15);
    }

    #[test]
    fn pauli_z_two_times_by_hand() {
        // Z commutes with computational projectors, so P(t) = P and C = P_b P_a;
        // with a non-commuting choice use H = X instead and compare with the
        // explicit 2×2 product.
        let rho = DensityMatrix::maximally_mixed(2);
        let (t1, t2) = (0.4, 1.1);
        let set = qubit_set(ComplexOperator::pauli_z(), rho.clone(), vec![t1, t2]);
        let cop = class_operator(&set, &HistoryIndex(vec![0, 0])).unwrap();
        assert!(cop.max_abs_diff(&ComplexOperator::from_real_diagonal(&[1.0, 0.0])).abs() < 1e-14);
        assert!(class_operator(&set, &HistoryIndex(vec![0, 1])).unwrap().max_abs() < 1e-14);

        let set = qubit_set(ComplexOperator::pauli_x(), rho, vec![t1, t2]);
        // e^{iXt}|0⟩ = cos t|0⟩ + i sin t|1⟩, so P0(t) is its outer product
        let p0 = |t: f64| {
            let (co, si) = (f64::cos(t), f64::sin(t));
            ComplexOperator::from_rows(
                2,
                &[c(co * co), C64::new(0.0, -co * si), C64::new(0.0, co * si), c(si * si)],
            )
            .unwrap()
        };
        let expected = &p0(t2) * &p0(t1);
        let cop = class_operator(&set, &HistoryIndex(vec![0, 0])).unwrap();
        assert!(cop.max_abs_diff(&expected) < 1e-14);
    }

    #[test]
    fn functional_examples() {
        let mut r = rng::stream(22, 0);
        let rho = random::density_matrix(2, 2, &mut r);
        let set = qubit_set(random::hermitian(2, &mut r), rho.clone(), vec![0.0, 0.7, 1.9]);
        let table = decoherence_table(&set).unwrap();
        let total: f64 = (0..table.len()).map(|a| table[a][a].re).sum();
        assert!((total - 1.0).abs() < 1e-10);

        // single time: Tr(P_α ρ P_β) = Tr(P_β P_α ρ) vanishes off the diagonal
        let single = qubit_set(ComplexOperator::zeros(2), rho.clone(), vec![0.0]);
        let d01 = decoherence_functional(&single, &HistoryIndex(vec![0]), &HistoryIndex(vec![1])).unwrap();
        assert!(d01.norm() < 1e-15);
        let d11 = decoherence_functional(&single, &HistoryIndex(vec![1]), &HistoryIndex(vec![1])).unwrap();
        assert!((d11 - rho.get(1, 1)).norm() < 1e-15);
        let diag = DensityMatrix::from_diagonal(&[0.3, 0.7]).unwrap();
        let single = qubit_set(ComplexOperator::zeros(2), diag, vec![0.0]);
        let rep = consistency_check(&single, 1e-10).unwrap();
        assert!(rep.consistent);
        assert!(decoherence_functional(&single, &HistoryIndex(vec![2]), &HistoryIndex(vec![0])).is_err());
    }

    #[test]
    fn two_slit_diagonal_reproduces_sequential_probabilities() {
        let mut r = rng::stream(23, 0);
        let psi = random::state(4, &mut r);
        let slits = ProjectiveDecomposition::from_index_blocks(4, &[vec![0, 1], vec![2, 3]]).unwrap();
        let u = random::unitary(4, &mut r);
        let screen = ProjectiveDecomposition::new(
            (0..4).map(|k| Projector::onto(&[StateVector::new(u.matrix().column(k).iter().copied().collect()).unwrap()]).unwrap()).collect(),
        )
        .unwrap();
        let probs = two_slit_probabilities(&psi, &slits, &screen).unwrap();
        let set = two_slit_history_set(&psi, &slits, &screen).unwrap();
        let table = decoherence_table(&set).unwrap();
        for (a, h) in set.histories().iter().enumerate() {
            assert!((table[a][a].re - probs[h.0[0]][h.0[1]]).abs() < 1e-12);
        }
    }

    #[test]
    fn two_slit_small_examples() {
        let s = 0.5f64.sqrt();
        let slits = ProjectiveDecomposition::computational(2);
        let psi = StateVector::new(vec![c(s), c(s)]).unwrap();
        let p = two_slit_probabilities(&psi, &slits, &slits).unwrap();
        assert!((p[0][0] - 0.5).abs() < 1e-15 && (p[1][1] - 0.5).abs() < 1e-15);
        assert!(p[0][1].abs() < 1e-15 && p[1][0].abs() < 1e-15);

        let one = StateVector::basis(2, 0).unwrap();
        let p = two_slit_probabilities(&one, &slits, &slits).unwrap();
        assert!(p[1].iter().all(|v| v.abs() < 1e-15));
        assert_eq!(additivity_defect(&one, &slits, &slits, 0).unwrap(), 0.0);

        let three = ProjectiveDecomposition::computational(3);
        let psi3 = StateVector::basis(3, 0).unwrap();
        assert!(two_slit_probabilities(&psi3, &three, &three).is_err());
        assert!(additivity_defect(&psi, &slits, &slits, 5).is_err());
    }

    #[test]
    fn coarse_graining_adds_entries() {
        let mut r = rng::stream(24, 0);
        let rho = random::density_matrix(3, 3, &mut r);
        let set = HistorySet::new(
            vec![0.0, 1.0],
            vec![ProjectiveDecomposition::computational(3), ProjectiveDecomposition::computational(3)],
            random::hermitian(3, &mut r),
            rho,
        )
        .unwrap();
        let table = decoherence_table(&set).unwrap();
        let groups: Vec<Vec<usize>> = vec![vec![0, 1], (2..9).collect()];
        let coarse = coarse_grain(&table, &groups).unwrap();
        let manual: C64 = [0, 1].iter().flat_map(|&a| (2..9).map(move |b| (a, b))).map(|(a, b)| table[a][b]).sum();
        assert!((coarse[0][1] - manual).norm() < 1e-15);
        assert!(coarse_grain(&table, &[vec![0, 0]]).is_err());
        assert!(coarse_grain(&table, &[vec![0]]).is_err());
    }

    #[test]
    fn relative_mode_skips_vanishing_diagonals() {
        let rho = DensityMatrix::from_diagonal(&[1.0, 0.0]).unwrap();
        let set = qubit_set(ComplexOperator::zeros(2), rho, vec![0.0]);
        let rep = consistency_check_with(&set, 1e-8, ConsistencyMode::Relative).unwrap();
        assert_eq!(rep.undefined_pairs, 2);
        assert!(rep.consistent);
    }

    #[test]
    fn report_serializes_and_writes_csv() {
        let s = 0.5f64.sqrt();
        let psi = StateVector::new(vec![c(s), c(s)]).unwrap();
        let slits = ProjectiveDecomposition::computational(2);
        let set = two_slit_history_set(&psi, &slits, &slits).unwrap();
        let rep = consistency_check(&set, DEFAULT_EPSILON).unwrap();
        let j = serde_json::to_value(&rep).unwrap();
        assert_eq!(j["defect_table"]["re"].as_array().unwrap().len(), 4);
        let mut buf = Vec::new();
        write_defect_csv(&mut buf, &rep).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert!(text.starts_with("history,re:0-0,re:0-1,re:1-0,re:1-1,im:0-0"));
    }
}
