//! Finite system + apparatus + environment models: the measurement chain,
//! environment-induced dephasing of a pointer, recurrences in a finite
//! oscillator bath, and ensemble state tomography.
//!
//! Composite spaces are ordered system ⊗ apparatus ⊗ environment.

use std::io::Write;

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use rand_distr::{Binomial, Distribution};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::qstate::{
    partial_trace_op, hermitian_eigen, ComplexOperator, DensityMatrix, OrthonormalBasis, StateVector, C64,
};
use crate::quantify::decoherence_gap;
use crate::rng;

/// `|i⟩|R₀⟩ → |i⟩|R_i⟩`
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MeasurementChain {
    system_dim: usize,
    apparatus_dim: usize,
    correlation_map: Vec<usize>,
    initial_pointer: usize,
}

impl MeasurementChain {
    pub fn new(system_dim: usize, apparatus_dim: usize, correlation_map: Vec<usize>, initial_pointer: usize) -> Result<Self> {
        if system_dim == 0 || apparatus_dim == 0 {
            return Err(Error::invalid("measurement chain", "dimensions must be positive"));
        }
        if correlation_map.len() != system_dim {
            return Err(Error::DimensionMismatch { expected: system_dim, found: correlation_map.len() });
        }
        if initial_pointer >= apparatus_dim {
            return Err(Error::IndexOutOfRange { index: initial_pointer, limit: apparatus_dim });
        }
        let mut seen = vec![false; apparatus_dim];
        for &r in &correlation_map {
            if r >= apparatus_dim {
                return Err(Error::IndexOutOfRange { index: r, limit: apparatus_dim });
            }
            if std::mem::replace(&mut seen[r], true) {
                return Err(Error::invalid("measurement chain", format!("pointer {r} used twice")));
            }
        }
        Ok(Self { system_dim, apparatus_dim, correlation_map, initial_pointer })
    }

    /// Identity map into an apparatus of the same size, starting at pointer 0.
    pub fn ideal(dim: usize) -> Result<Self> {
        Self::new(dim, dim, (0..dim).collect(), 0)
    }

    pub fn system_dim(&self) -> usize {
        self.system_dim
    }

    pub fn apparatus_dim(&self) -> usize {
        self.apparatus_dim
    }

    pub fn correlation_map(&self) -> &[usize] {
        &self.correlation_map
    }

    pub fn initial_pointer(&self) -> usize {
        self.initial_pointer
    }

    pub fn dim(&self) -> usize {
        self.system_dim * self.apparatus_dim
    }

    /// `Σ_i |i⟩⟨i| ⊗ S_i`, where `S_i` swaps `R₀` and `R_i`.
    pub fn unitary(&self) -> ComplexOperator {
        let da = self.apparatus_dim;
        let mut m = DMatrix::zeros(self.dim(), self.dim());
        for (i, &ri) in self.correlation_map.iter().enumerate() {
            for a in 0..da {
                let b = if a == self.initial_pointer {
                    ri
                } else if a == ri {
                    self.initial_pointer
                } else {
                    a
                };
                m[(i * da + b, i * da + a)] = C64::new(1.0, 0.0);
            }
        }
        ComplexOperator::new(m).expect("square")
    }
}

pub fn pre_measurement(chain: &MeasurementChain, psi: &StateVector) -> Result<StateVector> {
    if psi.dim() != chain.system_dim {
        return Err(Error::DimensionMismatch { expected: chain.system_dim, found: psi.dim() });
    }
    let joint = psi.tensor(&StateVector::basis(chain.apparatus_dim, chain.initial_pointer)?);
    StateVector::new(chain.unitary().apply(&joint).iter().copied().collect())
}

/// Schmidt coefficients of a bipartite pure state, descending.
pub fn schmidt_coefficients(psi: &StateVector, dims: (usize, usize)) -> Result<Vec<f64>> {
    if dims.0 * dims.1 != psi.dim() {
        return Err(Error::DimensionMismatch { expected: psi.dim(), found: dims.0 * dims.1 });
    }
    let m = DMatrix::from_fn(dims.0, dims.1, |i, a| psi.amplitude(i * dims.1 + a));
    let mut s: Vec<f64> = m.svd(false, false).singular_values.iter().copied().collect();
    s.sort_by(|a, b| b.total_cmp(a));
    Ok(s)
}

/// Number of Schmidt coefficients above `tol`.
pub fn schmidt_rank(psi: &StateVector, dims: (usize, usize), tol: f64) -> Result<usize> {
    Ok(schmidt_coefficients(psi, dims)?.into_iter().filter(|&s| s > tol).count())
}

#[derive(Debug, Clone, PartialEq)]
pub struct Reduction {
    pub state: DensityMatrix,
    /// Weight outside the correlated pairs `(i, R_i)`, before renormalizing.
    pub leakage: f64,
}

/// `Σ_i |d_{iR_i}|² |i⟩⟨i| ⊗ |R_i⟩⟨R_i|`, renormalized.
pub fn von_neumann_reduce(state: &StateVector, chain: &MeasurementChain) -> Result<Reduction> {
    if state.dim() != chain.dim() {
        return Err(Error::DimensionMismatch { expected: chain.dim(), found: state.dim() });
    }
    let da = chain.apparatus_dim;
    let weights: Vec<(usize, f64)> = chain
        .correlation_map
        .iter()
        .enumerate()
        .map(|(i, &r)| (i * da + r, state.amplitude(i * da + r).norm_sqr()))
        .collect();
    let total: f64 = weights.iter().map(|w| w.1).sum();
    if !(total > 0.0) {
        return Err(Error::Normalization("state has no weight on correlated pairs".into()));
    }
    let mut diag = vec![0.0; chain.dim()];
    for (idx, w) in weights {
        diag[idx] = w / total;
    }
    Ok(Reduction { state: DensityMatrix::from_diagonal(&diag)?, leakage: (1.0 - total).max(0.0) })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DephasingEnvironment {
    pub n_qubits: usize,
    pub theta: f64,
}

impl DephasingEnvironment {
    pub fn new(n_qubits: usize, theta: f64) -> Result<Self> {
        let env = Self { n_qubits, theta };
        env.validate()?;
        Ok(env)
    }

    pub fn validate(&self) -> Result<()> {
        if !(0.0..=std::f64::consts::PI).contains(&self.theta) {
            return Err(Error::invalid("theta", format!("{} outside [0, π]", self.theta)));
        }
        Ok(())
    }

    /// `(cos θ)^n`, the closed-form off-diagonal factor.
    pub fn suppression(&self) -> f64 {
        self.theta.cos().powi(self.n_qubits as i32)
    }
}

/// States `|e_j⟩` one environment unit ends in when the pointer is `j`.
///
/// For a two-state pointer the unit is a qubit rotated by θ when the
/// pointer is 1, so `⟨e_0|e_1⟩ = cos θ`. Larger pointers use a qudit of
/// the same dimension with Gram matrix `(1 − c)I + cJ`, `c = cos θ`.
pub fn environment_unit_states(pointer_dim: usize, theta: f64) -> Result<Vec<StateVector>> {
    let c = theta.cos();
    match pointer_dim {
        0 => Err(Error::invalid("pointer", "dimension must be positive")),
        1 => Ok(vec![StateVector::basis(1, 0)?]),
        2 => Ok(vec![
            StateVector::basis(2, 0)?,
            StateVector::new(vec![C64::new(c, 0.0), C64::new(theta.sin(), 0.0)])?,
        ]),
        d => {
            if c < -1.0 / (d as f64 - 1.0) - 1e-12 {
                return Err(Error::invalid(
                    "theta",
                    format!("cos θ = {c} below −1/(d−1): no {d} states with equal pairwise overlap"),
                ));
            }
            let gram = DMatrix::from_fn(d, d, |j, k| if j == k { 1.0 } else { c });
            let eig = SymmetricEigen::new(gram);
            let factor = DMatrix::from_fn(d, d, |m, j| eig.eigenvalues[m].max(0.0).sqrt() * eig.eigenvectors[(j, m)]);
            (0..d)
                .map(|j| StateVector::normalized(factor.column(j).iter().map(|&v| C64::new(v, 0.0)).collect()))
                .collect()
        }
    }
}

fn split_dims(rho: &DensityMatrix, pointer_dim: usize) -> Result<usize> {
    if pointer_dim == 0 || !rho.dim().is_multiple_of(pointer_dim) {
        return Err(Error::DimensionMismatch { expected: rho.dim(), found: pointer_dim });
    }
    Ok(rho.dim() / pointer_dim)
}

/// `I_S ⊗ B` for the pointer basis `B`.
fn lift_basis(system_dim: usize, pointer_basis: &OrthonormalBasis) -> ComplexOperator {
    crate::qstate::tensor(&ComplexOperator::identity(system_dim), pointer_basis.unitary())
}

/// Couples `env.n_qubits` environment units to the apparatus (the last
/// factor of `rho_sa`) in `pointer_basis` and traces them out. The
/// environment factor for pointer pair `(j, k)` is the contracted overlap
/// `Π_m ⟨e_k|e_j⟩`, equal to `(cos θ)^n` for `j ≠ k`.
pub fn dephase(rho_sa: &DensityMatrix, env: &DephasingEnvironment, pointer_basis: &OrthonormalBasis) -> Result<DensityMatrix> {
    env.validate()?;
    let da = pointer_basis.dim();
    let ds = split_dims(rho_sa, da)?;
    let units = environment_unit_states(da, env.theta)?;
    let overlap = DMatrix::from_fn(da, da, |j, k| {
        let o = units[k].inner(&units[j]);
        (0..env.n_qubits).fold(C64::new(1.0, 0.0), |acc, _| acc * o)
    });
    let v = lift_basis(ds, pointer_basis);
    let mut r = (&(&v.adjoint() * rho_sa.op()) * &v).into_matrix();
    for row in 0..r.nrows() {
        for col in 0..r.ncols() {
            r[(row, col)] *= overlap[(row % da, col % da)];
        }
    }
    let back = &(&v * &ComplexOperator::new(r)?) * &v.adjoint();
    Ok(DensityMatrix::from_trusted(back))
}

/// Same map as [`dephase`], built literally: the isometry
/// `Σ_j (I ⊗ |a_j⟩⟨a_j|) ⊗ |e_j⟩^{⊗n}` on the full space, then a partial
/// trace over the environment. Limited to joint dimensions ≤ 4096.
pub fn dephase_dense(
    rho_sa: &DensityMatrix,
    env: &DephasingEnvironment,
    pointer_basis: &OrthonormalBasis,
) -> Result<DensityMatrix> {
    env.validate()?;
    let da = pointer_basis.dim();
    let ds = split_dims(rho_sa, da)?;
    let units = environment_unit_states(da, env.theta)?;
    let env_dim = da
        .checked_pow(env.n_qubits as u32)
        .filter(|&d| d.saturating_mul(rho_sa.dim()) <= 4096)
        .ok_or_else(|| Error::Unsupported("dense dephasing limited to joint dimension 4096".into()))?;
    let env_states: Vec<DVector<C64>> = units
        .iter()
        .map(|e| {
            (0..env.n_qubits).fold(DVector::from_element(1, C64::new(1.0, 0.0)), |acc, _| acc.kronecker(e.amplitudes()))
        })
        .collect();
    let sa = rho_sa.dim();
    let mut w = DMatrix::zeros(sa * env_dim, sa);
    for (j, state) in env_states.iter().enumerate() {
        let proj = lift_basis(ds, pointer_basis).matrix()
            * DMatrix::from_fn(sa, sa, |r, c| if r == c && r % da == j { C64::new(1.0, 0.0) } else { C64::new(0.0, 0.0) })
            * lift_basis(ds, pointer_basis).adjoint().matrix();
        let e = DMatrix::from_column_slice(env_dim, 1, state.as_slice());
        w += proj.kronecker(&e);
    }
    let joint = &w * rho_sa.op().matrix() * w.adjoint();
    let reduced = partial_trace_op(&ComplexOperator::new(joint)?, &[sa, env_dim], &[0])?;
    Ok(DensityMatrix::from_trusted(reduced))
}

/// Modes of a pure-dephasing spin–boson bath,
/// `H = Σ ω_k a_k†a_k + σ_z Σ g_k (a_k + a_k†)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FiniteBath {
    pub frequencies: Vec<f64>,
    pub couplings: Vec<f64>,
}

/// Oscillator levels kept per mode.
pub const DEFAULT_LEVELS: usize = 12;

/// Largest admissible population of the top kept level.
pub const TRUNCATION_BOUND: f64 = 1e-8;

impl FiniteBath {
    pub fn new(frequencies: Vec<f64>, couplings: Vec<f64>) -> Result<Self> {
        let b = Self { frequencies, couplings };
        b.validate()?;
        Ok(b)
    }

    /// `n` modes at frequency `omega`, each with coupling `g`.
    pub fn degenerate(n: usize, omega: f64, g: f64) -> Result<Self> {
        Self::new(vec![omega; n], vec![g; n])
    }

    pub fn validate(&self) -> Result<()> {
        if self.frequencies.len() != self.couplings.len() {
            return Err(Error::DimensionMismatch { expected: self.frequencies.len(), found: self.couplings.len() });
        }
        if self.frequencies.iter().any(|w| !(*w > 0.0) || !w.is_finite()) {
            return Err(Error::invalid("bath", "frequencies must be positive and finite"));
        }
        if self.couplings.iter().any(|g| !g.is_finite()) {
            return Err(Error::invalid("bath", "couplings must be finite"));
        }
        Ok(())
    }

    pub fn n_modes(&self) -> usize {
        self.frequencies.len()
    }

    /// `⟨φ⁻(t)|φ⁺(t)⟩ = exp(−4 Σ (g/ω)² (1 − cos ωt))` for the untruncated bath.
    pub fn analytic_overlap(&self, t: f64) -> f64 {
        let s: f64 = self
            .frequencies
            .iter()
            .zip(&self.couplings)
            .map(|(w, g)| (g / w).powi(2) * (1.0 - (w * t).cos()))
            .sum();
        (-4.0 * s).exp()
    }
}

/// Truncated `ω a†a + sign·g (a + a†)`.
fn mode_hamiltonian(omega: f64, g: f64, levels: usize) -> ComplexOperator {
    ComplexOperator::from_fn(levels, |r, c| {
        let v = if r == c {
            omega * r as f64
        } else if r == c + 1 || c == r + 1 {
            g * (r.max(c) as f64).sqrt()
        } else {
            0.0
        };
        C64::new(v, 0.0)
    })
}

struct ModeEvolution {
    values: Vec<f64>,
    /// `V† |0⟩`: vacuum in the eigenbasis.
    vacuum: DVector<C64>,
    vectors: DMatrix<C64>,
}

impl ModeEvolution {
    fn new(h: &ComplexOperator) -> Self {
        let eig = h.eigh();
        let vacuum = DVector::from_iterator(eig.values.len(), eig.vectors.row(0).iter().map(|z| z.conj()));
        Self { values: eig.values, vacuum, vectors: eig.vectors }
    }

    /// `e^{−iHt}|0⟩` in the number basis.
    fn state(&self, t: f64) -> DVector<C64> {
        let c = DVector::from_fn(self.values.len(), |k, _| self.vacuum[k] * C64::from_polar(1.0, -self.values[k] * t));
        &self.vectors * c
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RecurrenceSeries {
    pub times: Vec<f64>,
    /// `|ρ₀₁(t)|`
    pub magnitudes: Vec<f64>,
    pub initial: f64,
    /// Largest top-level population over modes, branches and times.
    pub max_top_population: f64,
}

impl RecurrenceSeries {
    /// Index of the first sample with `|ρ₀₁| < fraction·|ρ₀₁(0)|`.
    pub fn first_collapse(&self, fraction: f64) -> Option<usize> {
        self.magnitudes.iter().position(|&m| m < fraction * self.initial)
    }

    /// Largest `|ρ₀₁| / |ρ₀₁(0)|` after the first collapse below `fraction`.
    pub fn max_revival_after_collapse(&self, fraction: f64) -> Option<f64> {
        let start = self.first_collapse(fraction)?;
        Some(self.magnitudes[start..].iter().copied().fold(0.0, f64::max) / self.initial)
    }

    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        let cerr = |e: csv::Error| Error::invalid("csv output", e.to_string());
        w.write_record(["t", "abs_rho01"]).map_err(cerr)?;
        for (t, m) in self.times.iter().zip(&self.magnitudes) {
            w.write_record([format!("{t:e}"), format!("{m:e}")]).map_err(cerr)?;
        }
        w.flush().map_err(|e| Error::invalid("csv output", e.to_string()))
    }
}

/// Coherence of a qubit coupled to a finite bath in its vacuum, sampled at
/// `samples` evenly spaced times in `[0, t_max]`. Each mode evolves exactly in
/// a `levels`-dimensional truncation; `ρ₀₁(t) = ρ₀₁(0) Π_k ⟨φ_k⁻(t)|φ_k⁺(t)⟩`.
pub fn finite_bath_recurrence(
    system: &DensityMatrix,
    bath: &FiniteBath,
    t_max: f64,
    samples: usize,
    levels: usize,
) -> Result<RecurrenceSeries> {
    bath.validate()?;
    if system.dim() != 2 {
        return Err(Error::DimensionMismatch { expected: 2, found: system.dim() });
    }
    if samples < 2 || !(t_max > 0.0) {
        return Err(Error::invalid("recurrence sampling", "need t_max > 0 and at least two samples"));
    }
    if levels < 2 {
        return Err(Error::invalid("levels", "need at least two oscillator levels"));
    }
    let modes: Vec<(ModeEvolution, ModeEvolution)> = bath
        .frequencies
        .iter()
        .zip(&bath.couplings)
        .map(|(&w, &g)| (ModeEvolution::new(&mode_hamiltonian(w, g, levels)), ModeEvolution::new(&mode_hamiltonian(w, -g, levels))))
        .collect();
    let rho01 = system.get(0, 1);
    let times: Vec<f64> = (0..samples).map(|k| t_max * k as f64 / (samples - 1) as f64).collect();
    let rows: Vec<(f64, f64)> = times
        .par_iter()
        .map(|&t| {
            let mut factor = C64::new(1.0, 0.0);
            let mut top: f64 = 0.0;
            for (plus, minus) in &modes {
                let (p, m) = (plus.state(t), minus.state(t));
                top = top.max(p[levels - 1].norm_sqr()).max(m[levels - 1].norm_sqr());
                factor *= m.dotc(&p);
            }
            ((rho01 * factor).norm(), top)
        })
        .collect();
    let max_top_population = rows.iter().map(|r| r.1).fold(0.0, f64::max);
    if max_top_population > TRUNCATION_BOUND {
        return Err(Error::Truncation { population: max_top_population });
    }
    Ok(RecurrenceSeries {
        magnitudes: rows.into_iter().map(|r| r.0).collect(),
        initial: rho01.norm(),
        times,
        max_top_population,
    })
}

/// Full qubit ⊗ modes evolution and partial trace; for cross-checks with
/// one or two modes.
pub fn finite_bath_recurrence_dense(system: &DensityMatrix, bath: &FiniteBath, t: f64, levels: usize) -> Result<C64> {
    bath.validate()?;
    let bath_dim = levels
        .checked_pow(bath.n_modes() as u32)
        .filter(|&d| d <= 512)
        .ok_or_else(|| Error::Unsupported("dense bath limited to 512 levels".into()))?;
    let sz = ComplexOperator::pauli_z();
    let mut h = ComplexOperator::zeros(2 * bath_dim);
    for (k, (&w, &g)) in bath.frequencies.iter().zip(&bath.couplings).enumerate() {
        let before = levels.pow(k as u32);
        let after = bath_dim / (before * levels);
        let embed = |op: &ComplexOperator| {
            let left = crate::qstate::tensor(&ComplexOperator::identity(before), op);
            crate::qstate::tensor(&left, &ComplexOperator::identity(after))
        };
        let number = mode_hamiltonian(1.0, 0.0, levels);
        let position = mode_hamiltonian(0.0, 1.0, levels);
        h = &h + &crate::qstate::tensor(&ComplexOperator::identity(2), &embed(&number.scale_real(w)));
        h = &h + &crate::qstate::tensor(&sz, &embed(&position.scale_real(g)));
    }
    let vacuum = DensityMatrix::from_pure(&StateVector::basis(bath_dim, 0)?);
    let joint = DensityMatrix::from_trusted(crate::qstate::tensor(system.op(), vacuum.op()));
    let evolved = crate::qstate::evolve_unitary(&joint, &h, t)?;
    Ok(partial_trace_op(evolved.op(), &[2, bath_dim], &[0])?.get(0, 1))
}

/// Observables measured on identically prepared copies.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TomographyPlan {
    pub observables: Vec<ComplexOperator>,
    pub shots_per_observable: u64,
    pub seed: u64,
}

/// Eigen-decomposition of one observable into outcome projectors.
#[derive(Debug, Clone)]
struct Outcomes {
    eigenvalues: Vec<f64>,
    projectors: Vec<DMatrix<C64>>,
}

fn outcomes_of(a: &ComplexOperator) -> Outcomes {
    let eig = a.eigh();
    let mut eigenvalues: Vec<f64> = Vec::new();
    let mut projectors: Vec<DMatrix<C64>> = Vec::new();
    for (k, &lambda) in eig.values.iter().enumerate() {
        let v = eig.vectors.column(k);
        let p = v * v.adjoint();
        match eigenvalues.last() {
            Some(&last) if (lambda - last).abs() <= 1e-9 * (1.0 + last.abs()) => {
                *projectors.last_mut().expect("paired") += p;
            }
            _ => {
                eigenvalues.push(lambda);
                projectors.push(p);
            }
        }
    }
    Outcomes { eigenvalues, projectors }
}

impl TomographyPlan {
    pub fn new(observables: Vec<ComplexOperator>, shots_per_observable: u64, seed: u64) -> Result<Self> {
        let plan = Self { observables, shots_per_observable, seed };
        plan.validate()?;
        Ok(plan)
    }

    /// Pauli X, Y, Z on a qubit.
    pub fn pauli(shots: u64, seed: u64) -> Self {
        Self {
            observables: vec![ComplexOperator::pauli_x(), ComplexOperator::pauli_y(), ComplexOperator::pauli_z()],
            shots_per_observable: shots,
            seed,
        }
    }

    /// Generalized Gell-Mann matrices (symmetric, antisymmetric and diagonal),
    /// spanning the traceless Hermitian operators in `dim` dimensions.
    pub fn gell_mann(dim: usize, shots: u64, seed: u64) -> Self {
        let mut obs = Vec::new();
        let unit = |r: usize, c: usize, v: C64| {
            ComplexOperator::from_fn(dim, |i, j| {
                if (i, j) == (r, c) {
                    v
                } else if (i, j) == (c, r) {
                    v.conj()
                } else {
                    C64::new(0.0, 0.0)
                }
            })
        };
        for r in 0..dim {
            for c in r + 1..dim {
                obs.push(unit(r, c, C64::new(1.0, 0.0)));
                obs.push(unit(r, c, C64::new(0.0, -1.0)));
            }
        }
        for l in 1..dim {
            let norm = (2.0 / (l * (l + 1)) as f64).sqrt();
            let diag: Vec<f64> = (0..dim).map(|i| if i < l { norm } else if i == l { -(l as f64) * norm } else { 0.0 }).collect();
            obs.push(ComplexOperator::from_real_diagonal(&diag));
        }
        Self { observables: obs, shots_per_observable: shots, seed }
    }

    pub fn validate(&self) -> Result<()> {
        let first = self.observables.first().ok_or_else(|| Error::invalid("tomography plan", "no observables"))?;
        for a in &self.observables {
            if a.dim() != first.dim() {
                return Err(Error::DimensionMismatch { expected: first.dim(), found: a.dim() });
            }
            a.require_hermitian()?;
        }
        Ok(())
    }

    pub fn dim(&self) -> usize {
        self.observables[0].dim()
    }

    fn outcomes(&self) -> Vec<Outcomes> {
        self.observables.iter().map(outcomes_of).collect()
    }
}

/// Real coordinates of a Hermitian matrix in an orthonormal basis of the
/// Hilbert–Schmidt space: diagonal entries, then `√2 Re` and `√2 Im` of the
/// upper triangle.
fn hermitian_to_real(m: &DMatrix<C64>) -> DVector<f64> {
    let d = m.nrows();
    let mut v = Vec::with_capacity(d * d);
    v.extend((0..d).map(|i| m[(i, i)].re));
    let s = std::f64::consts::SQRT_2;
    for i in 0..d {
        for j in i + 1..d {
            v.push(s * m[(i, j)].re);
            v.push(s * m[(i, j)].im);
        }
    }
    DVector::from_vec(v)
}

fn real_to_hermitian(v: &DVector<f64>, d: usize) -> DMatrix<C64> {
    let mut m = DMatrix::zeros(d, d);
    for i in 0..d {
        m[(i, i)] = C64::new(v[i], 0.0);
    }
    let s = std::f64::consts::FRAC_1_SQRT_2;
    let mut k = d;
    for i in 0..d {
        for j in i + 1..d {
            let z = C64::new(v[k] * s, v[k + 1] * s);
            m[(i, j)] = z;
            m[(j, i)] = z.conj();
            k += 2;
        }
    }
    m
}

/// Per-observable outcome counts; rows follow the plan's order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CountsTable {
    pub seed: u64,
    pub shots: u64,
    pub rows: Vec<ObservableCounts>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ObservableCounts {
    pub eigenvalues: Vec<f64>,
    pub counts: Vec<u64>,
}

impl CountsTable {
    /// CSV with a `# seed=…` comment line, then
    /// `observable,outcome,eigenvalue,count`.
    pub fn write_csv<W: Write>(&self, mut out: W) -> Result<()> {
        let io = |e: std::io::Error| Error::invalid("csv output", e.to_string());
        writeln!(out, "# seed={} shots={}", self.seed, self.shots).map_err(io)?;
        let mut w = csv::Writer::from_writer(out);
        let cerr = |e: csv::Error| Error::invalid("csv output", e.to_string());
        w.write_record(["observable", "outcome", "eigenvalue", "count"]).map_err(cerr)?;
        for (k, row) in self.rows.iter().enumerate() {
            for (m, (ev, c)) in row.eigenvalues.iter().zip(&row.counts).enumerate() {
                w.write_record([k.to_string(), m.to_string(), format!("{ev:e}"), c.to_string()]).map_err(cerr)?;
            }
        }
        w.flush().map_err(|e| Error::invalid("csv output", e.to_string()))
    }

    fn frequencies(&self) -> Vec<Vec<f64>> {
        let n = self.shots.max(1) as f64;
        self.rows.iter().map(|r| r.counts.iter().map(|&c| c as f64 / n).collect()).collect()
    }
}

/// Multinomial counts by sequential binomial draws.
fn multinomial(probs: &[f64], shots: u64, r: &mut rng::Rng) -> Vec<u64> {
    let mut left = shots;
    let mut mass = 1.0;
    let mut counts = Vec::with_capacity(probs.len());
    for (m, &p) in probs.iter().enumerate() {
        if m + 1 == probs.len() {
            counts.push(left);
            break;
        }
        let q = if mass > 0.0 { (p / mass).clamp(0.0, 1.0) } else { 0.0 };
        let c = if left == 0 { 0 } else { Binomial::new(left, q).expect("valid probability").sample(r) };
        counts.push(c);
        left -= c;
        mass -= p;
    }
    counts
}

fn outcome_probabilities(rho: &DensityMatrix, outcomes: &[Outcomes]) -> Vec<Vec<f64>> {
    outcomes
        .iter()
        .map(|o| {
            let raw: Vec<f64> =
                o.projectors.iter().map(|p| (p * rho.op().matrix()).trace().re.max(0.0)).collect();
            let total: f64 = raw.iter().sum();
            raw.into_iter().map(|x| x / total).collect()
        })
        .collect()
}

fn simulate_with_seed(rho: &DensityMatrix, plan: &TomographyPlan, outcomes: &[Outcomes], seed: u64) -> CountsTable {
    let probs = outcome_probabilities(rho, outcomes);
    let rows = probs
        .par_iter()
        .zip(outcomes)
        .enumerate()
        .map(|(k, (p, o))| {
            let mut r = rng::stream(seed, k as u64);
            ObservableCounts { eigenvalues: o.eigenvalues.clone(), counts: multinomial(p, plan.shots_per_observable, &mut r) }
        })
        .collect();
    CountsTable { seed, shots: plan.shots_per_observable, rows }
}

/// Draw `shots_per_observable` outcomes for each observable; observable `k`
/// uses random stream `k` of the plan's seed.
pub fn simulate_measurements(rho: &DensityMatrix, plan: &TomographyPlan) -> Result<CountsTable> {
    plan.validate()?;
    if rho.dim() != plan.dim() {
        return Err(Error::DimensionMismatch { expected: plan.dim(), found: rho.dim() });
    }
    Ok(simulate_with_seed(rho, plan, &plan.outcomes(), plan.seed))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TomographyDiagnostics {
    /// Smallest eigenvalue of the linear-inversion estimate.
    pub raw_min_eigenvalue: f64,
    /// Frobenius distance moved by the projection onto density matrices.
    pub projection_distance: f64,
    /// Smallest eigenvalue of the frame operator.
    pub frame_min_eigenvalue: f64,
    pub trace_distance_to_reference: Option<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Reconstruction {
    pub state: DensityMatrix,
    pub diagnostics: TomographyDiagnostics,
}

/// Euclidean projection of `v` onto the probability simplex.
fn project_to_simplex(v: &[f64]) -> Vec<f64> {
    let mut u = v.to_vec();
    u.sort_by(|a, b| b.total_cmp(a));
    let mut cum = 0.0;
    let mut theta = 0.0;
    for (j, &x) in u.iter().enumerate() {
        cum += x;
        let t = (cum - 1.0) / (j + 1) as f64;
        if x - t > 0.0 {
            theta = t;
        }
    }
    v.iter().map(|x| (x - theta).max(0.0)).collect()
}

/// Frame data shared by every reconstruction from one plan.
struct Frame {
    dim: usize,
    vectors: Vec<Vec<DVector<f64>>>,
    inverse: DMatrix<f64>,
    min_eigenvalue: f64,
}

fn frame_of(plan: &TomographyPlan, outcomes: &[Outcomes]) -> Result<Frame> {
    let d = plan.dim();
    let vectors: Vec<Vec<DVector<f64>>> =
        outcomes.iter().map(|o| o.projectors.iter().map(hermitian_to_real).collect()).collect();
    let mut s = DMatrix::<f64>::zeros(d * d, d * d);
    for v in vectors.iter().flatten() {
        s += v * v.transpose();
    }
    let eig = SymmetricEigen::new(s);
    let min = eig.eigenvalues.iter().copied().fold(f64::INFINITY, f64::min);
    let max = eig.eigenvalues.iter().copied().fold(0.0, f64::max);
    if !(min > 1e-10 * max.max(1.0)) {
        return Err(Error::SingularFrame { min_eigenvalue: min });
    }
    let inv_diag = DMatrix::from_diagonal(&eig.eigenvalues.map(|l| 1.0 / l));
    let inverse = &eig.eigenvectors * inv_diag * eig.eigenvectors.transpose();
    Ok(Frame { dim: d, vectors, inverse, min_eigenvalue: min })
}

/// Check that the plan's outcome projectors span the Hermitian operators.
pub fn check_frame(plan: &TomographyPlan) -> Result<f64> {
    plan.validate()?;
    Ok(frame_of(plan, &plan.outcomes())?.min_eigenvalue)
}

fn reconstruct_with(
    frequencies: &[Vec<f64>],
    frame: &Frame,
    reference: Option<&DensityMatrix>,
) -> Result<Reconstruction> {
    let d = frame.dim;
    let mut acc = DVector::<f64>::zeros(d * d);
    for (row, vs) in frequencies.iter().zip(&frame.vectors) {
        if row.len() != vs.len() {
            return Err(Error::DimensionMismatch { expected: vs.len(), found: row.len() });
        }
        for (f, v) in row.iter().zip(vs) {
            acc += v * *f;
        }
    }
    let raw = real_to_hermitian(&(&frame.inverse * acc), d);
    let eig = hermitian_eigen(raw.clone());
    let projected = project_to_simplex(&eig.values);
    let diag = DMatrix::from_diagonal(&DVector::from_iterator(d, projected.iter().map(|&p| C64::new(p, 0.0))));
    let rebuilt = &eig.vectors * diag * eig.vectors.adjoint();
    let projection_distance = (&rebuilt - &raw).iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
    let state = DensityMatrix::new(ComplexOperator::new(rebuilt)?)?;
    let trace_distance_to_reference = reference.map(|r| state.trace_distance(r)).transpose()?;
    Ok(Reconstruction {
        state,
        diagnostics: TomographyDiagnostics {
            raw_min_eigenvalue: eig.values[0],
            projection_distance,
            frame_min_eigenvalue: frame.min_eigenvalue,
            trace_distance_to_reference,
        },
    })
}

/// Least-squares linear inversion of the outcome frequencies through the
/// dual frame of the outcome projectors, projected onto density matrices
/// (eigenvalues moved to the nearest point of the probability simplex).
pub fn reconstruct_state(
    counts: &CountsTable,
    plan: &TomographyPlan,
    reference: Option<&DensityMatrix>,
) -> Result<Reconstruction> {
    plan.validate()?;
    if counts.rows.len() != plan.observables.len() {
        return Err(Error::DimensionMismatch { expected: plan.observables.len(), found: counts.rows.len() });
    }
    let outcomes = plan.outcomes();
    reconstruct_with(&counts.frequencies(), &frame_of(plan, &outcomes)?, reference)
}

/// Infinite-shot reconstruction from exact outcome probabilities of `rho`.
pub fn reconstruct_exact(rho: &DensityMatrix, plan: &TomographyPlan) -> Result<Reconstruction> {
    plan.validate()?;
    if rho.dim() != plan.dim() {
        return Err(Error::DimensionMismatch { expected: plan.dim(), found: rho.dim() });
    }
    let outcomes = plan.outcomes();
    let frame = frame_of(plan, &outcomes)?;
    reconstruct_with(&outcome_probabilities(rho, &outcomes), &frame, Some(rho))
}

/// Resamples used for pipeline error bars.
pub const BOOTSTRAP_RESAMPLES: usize = 100;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PipelinePoint {
    pub t: f64,
    pub gap_estimate: f64,
    pub gap_std: f64,
    pub exact_gap: f64,
    pub seed: u64,
}

impl PipelinePoint {
    /// Whether the exact gap lies within `k` bootstrap standard deviations.
    pub fn brackets(&self, k: f64) -> bool {
        (self.gap_estimate - self.exact_gap).abs() <= k * self.gap_std
    }
}

/// At each time: simulate the plan, reconstruct, and evaluate the gap in
/// `basis`, with a parametric bootstrap over the observed frequencies for
/// the error bar. Time `i` uses seed `child_seed(plan.seed, i)`.
pub fn decoherence_detection_pipeline(
    states: &[(f64, DensityMatrix)],
    plan: &TomographyPlan,
    basis: &OrthonormalBasis,
) -> Result<Vec<PipelinePoint>> {
    plan.validate()?;
    let outcomes = plan.outcomes();
    let frame = frame_of(plan, &outcomes)?;
    states
        .iter()
        .enumerate()
        .map(|(i, (t, rho))| {
            if rho.dim() != plan.dim() || basis.dim() != plan.dim() {
                return Err(Error::DimensionMismatch { expected: plan.dim(), found: rho.dim() });
            }
            let seed = rng::child_seed(plan.seed, i as u64);
            let counts = simulate_with_seed(rho, plan, &outcomes, seed);
            let freqs = counts.frequencies();
            let estimate = reconstruct_with(&freqs, &frame, None)?;
            let gap_estimate = decoherence_gap(&estimate.state, basis)?.gap;
            let gaps: Vec<f64> = (0..BOOTSTRAP_RESAMPLES)
                .into_par_iter()
                .map(|b| {
                    let bseed = rng::child_seed(seed, 1 + b as u64);
                    let rows = freqs
                        .iter()
                        .zip(&outcomes)
                        .enumerate()
                        .map(|(k, (p, o))| {
                            let mut r = rng::stream(bseed, k as u64);
                            ObservableCounts { eigenvalues: o.eigenvalues.clone(), counts: multinomial(p, plan.shots_per_observable, &mut r) }
                        })
                        .collect();
                    let resampled = CountsTable { seed: bseed, shots: plan.shots_per_observable, rows };
                    let est = reconstruct_with(&resampled.frequencies(), &frame, None)?;
                    Ok(decoherence_gap(&est.state, basis)?.gap)
                })
                .collect::<Result<_>>()?;
            let mean = gaps.iter().sum::<f64>() / gaps.len() as f64;
            let var = gaps.iter().map(|g| (g - mean).powi(2)).sum::<f64>() / (gaps.len() - 1) as f64;
            Ok(PipelinePoint { t: *t, gap_estimate, gap_std: var.sqrt(), exact_gap: decoherence_gap(rho, basis)?.gap, seed })
        })
        .collect()
}

/// CSV with a `# seed=…` comment line, then
/// `t,gap_estimate,gap_std,exact_gap`.
pub fn write_pipeline_csv<W: Write>(mut out: W, seed: u64, points: &[PipelinePoint]) -> Result<()> {
    let io = |e: std::io::Error| Error::invalid("csv output", e.to_string());
    writeln!(out, "# seed={seed} resamples={BOOTSTRAP_RESAMPLES}").map_err(io)?;
    let mut w = csv::Writer::from_writer(out);
    let cerr = |e: csv::Error| Error::invalid("csv output", e.to_string());
    w.write_record(["t", "gap_estimate", "gap_std", "exact_gap"]).map_err(cerr)?;
    for p in points {
        w.write_record([format!("{:e}", p.t), format!("{:e}", p.gap_estimate), format!("{:e}", p.gap_std), format!("{:e}", p.exact_gap)])
            .map_err(cerr)?;
    }
    w.flush().map_err(|e| Error::invalid("csv output", e.to_string()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::qstate::{partial_trace, random};
    use std::f64::consts::{FRAC_1_SQRT_2, PI};

    fn c(x: f64) -> C64 {
        C64::new(x, 0.0)
    }

    #[test]
    fn chain_validation() {
        assert!(MeasurementChain::new(2, 3, vec![1, 1], 0).is_err());
        assert!(MeasurementChain::new(2, 3, vec![1, 3], 0).is_err());
        assert!(MeasurementChain::new(2, 3, vec![1, 2], 3).is_err());
        let chain = MeasurementChain::new(3, 4, vec![1, 2, 3], 0).unwrap();
        let u = chain.unitary();
        assert!((&u * &u.adjoint()).max_abs_diff(&ComplexOperator::identity(12)) < 1e-15);
    }

    #[test]
    fn basis_inputs_give_product_states() {
        let chain = MeasurementChain::new(3, 4, vec![1, 2, 3], 0).unwrap();
        for i in 0..3 {
            let out = pre_measurement(&chain, &StateVector::basis(3, i).unwrap()).unwrap();
            let expected = StateVector::basis(3, i).unwrap().tensor(&StateVector::basis(4, i + 1).unwrap());
            assert!((out.inner(&expected).norm() - 1.0).abs() < 1e-15);
            assert_eq!(schmidt_rank(&out, (3, 4), 1e-12).unwrap(), 1);
            let rho = DensityMatrix::from_pure(&out);
            for keep in [0, 1] {
                let marginal = partial_trace(&rho, &[3, 4], &[keep]).unwrap();
                assert!((marginal.purity() - 1.0).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn superposition_becomes_entangled() {
        let chain = MeasurementChain::new(3, 4, vec![1, 2, 3], 0).unwrap();
        let psi = StateVector::new(vec![c(0.0), c(FRAC_1_SQRT_2), c(FRAC_1_SQRT_2)]).unwrap();
        let out = pre_measurement(&chain, &psi).unwrap();
        assert_eq!(schmidt_rank(&out, (3, 4), 1e-12).unwrap(), 2);
        let s = schmidt_coefficients(&out, (3, 4)).unwrap();
        assert!((s[0] - FRAC_1_SQRT_2).abs() < 1e-14 && (s[1] - FRAC_1_SQRT_2).abs() < 1e-14);

        let red = von_neumann_reduce(&out, &chain).unwrap();
        assert!(red.leakage < 1e-15);
        assert!((red.state.get(6, 6).re - 0.5).abs() < 1e-15);
        assert!((red.state.get(11, 11).re - 0.5).abs() < 1e-15);
        assert!((red.state.purity() - 0.5).abs() < 1e-14);
    }

    #[test]
    fn reduction_edge_cases() {
        let chain = MeasurementChain::ideal(2).unwrap();
        let product = pre_measurement(&chain, &StateVector::basis(2, 1).unwrap()).unwrap();
        let red = von_neumann_reduce(&product, &chain).unwrap();
        assert_eq!(red.leakage, 0.0);
        assert!(red.state.op().max_abs_diff(&product.projector()) < 1e-15);

        // half the weight on |0⟩|1⟩, which the chain never produces
        let off = StateVector::new(vec![c(FRAC_1_SQRT_2), c(FRAC_1_SQRT_2), c(0.0), c(0.0)]).unwrap();
        let red = von_neumann_reduce(&off, &chain).unwrap();
        assert!((red.leakage - 0.5).abs() < 1e-15);
        let random = random::state(3, &mut rng::stream(41, 0));
        let out = pre_measurement(&MeasurementChain::ideal(3).unwrap(), &random).unwrap();
        assert!((out.inner(&out).re - 1.0).abs() < 1e-14);
    }

    fn plus_pointer(system_dim: usize) -> DensityMatrix {
        let s = 1.0 / (2.0 * system_dim as f64).sqrt();
        DensityMatrix::from_pure(&StateVector::new(vec![c(s); 2 * system_dim]).unwrap())
    }

    #[test]
    fn dephase_trivial_cases() {
        let rho = random::density_matrix(4, 4, &mut rng::stream(42, 0));
        let basis = random::basis(2, &mut rng::stream(42, 1));
        for env in [DephasingEnvironment::new(0, 1.0).unwrap(), DephasingEnvironment::new(7, 0.0).unwrap()] {
            let out = dephase(&rho, &env, &basis).unwrap();
            assert!(out.op().max_abs_diff(rho.op()) < 1e-14);
        }
        assert!(DephasingEnvironment::new(1, 4.0).is_err());
        assert!(dephase(&random::density_matrix(3, 3, &mut rng::stream(42, 2)), &DephasingEnvironment::new(1, 1.0).unwrap(), &basis).is_err());
    }

    #[test]
    fn dephase_matches_closed_form() {
        let rho = plus_pointer(1);
        let env = DephasingEnvironment::new(20, PI / 4.0).unwrap();
        let out = dephase(&rho, &env, &OrthonormalBasis::computational(2)).unwrap();
        let expected = 0.5 * FRAC_1_SQRT_2.powi(20);
        assert!((out.get(0, 1).re - expected).abs() < 1e-16);
        assert!((0.5 * env.suppression() - expected).abs() < 1e-18);
        assert!((expected - 0.5 * 9.765625e-4).abs() < 1e-15);
        assert!((out.get(0, 0).re - 0.5).abs() < 1e-15);
    }

    #[test]
    fn dense_route_agrees() {
        let mut r = rng::stream(43, 0);
        for (ds, da, n) in [(1, 2, 6), (2, 2, 4), (1, 3, 3), (2, 3, 2)] {
            let rho = random::density_matrix(ds * da, 2, &mut r);
            let basis = random::basis(da, &mut r);
            let env = DephasingEnvironment::new(n, 1.1).unwrap();
            let fast = dephase(&rho, &env, &basis).unwrap();
            let dense = dephase_dense(&rho, &env, &basis).unwrap();
            assert!(fast.op().max_abs_diff(dense.op()) < 1e-12, "{ds} {da} {n}");
        }
    }

    #[test]
    fn qudit_environment_overlaps() {
        let states = environment_unit_states(4, 1.0).unwrap();
        for j in 0..4 {
            for k in 0..4 {
                let expected = if j == k { 1.0 } else { 1f64.cos() };
                assert!((states[j].inner(&states[k]) - c(expected)).norm() < 1e-12);
            }
        }
        assert!(environment_unit_states(3, PI).is_err());
    }

    fn spin_half(g_over_w: f64, modes: usize) -> FiniteBath {
        FiniteBath::degenerate(modes, 1.3, g_over_w * 1.3).unwrap()
    }

    fn plus_qubit() -> DensityMatrix {
        DensityMatrix::from_pure(&StateVector::new(vec![c(FRAC_1_SQRT_2), c(FRAC_1_SQRT_2)]).unwrap())
    }

    #[test]
    fn single_mode_recurs() {
        let bath = spin_half(0.2, 1);
        let period = 2.0 * PI / 1.3;
        let series = finite_bath_recurrence(&plus_qubit(), &bath, period, 101, DEFAULT_LEVELS).unwrap();
        assert!((series.magnitudes[100] - series.initial).abs() < 1e-6);
        for (t, m) in series.times.iter().zip(&series.magnitudes) {
            assert!((m - 0.5 * bath.analytic_overlap(*t)).abs() < 1e-8);
        }
        let mid = series.magnitudes[50] / series.initial;
        assert!((mid - (-8.0 * 0.04f64).exp()).abs() < 1e-8);
    }

    #[test]
    fn dense_bath_agrees() {
        for bath in [spin_half(0.2, 1), FiniteBath::new(vec![1.0, 1.7], vec![0.15, 0.3]).unwrap()] {
            let series = finite_bath_recurrence(&plus_qubit(), &bath, 2.0, 5, 8).unwrap();
            for (t, m) in series.times.iter().zip(&series.magnitudes) {
                let dense = finite_bath_recurrence_dense(&plus_qubit(), &bath, *t, 8).unwrap();
                assert!((dense.norm() - m).abs() < 1e-10);
            }
        }
    }

    #[test]
    fn truncation_guard_fires() {
        let strong = FiniteBath::degenerate(1, 1.0, 3.0).unwrap();
        let err = finite_bath_recurrence(&plus_qubit(), &strong, 3.0, 10, DEFAULT_LEVELS).unwrap_err();
        assert!(matches!(err, Error::Truncation { .. }));
    }

    #[test]
    fn eigenstate_measurements_are_deterministic() {
        let plan = TomographyPlan::pauli(1000, 7);
        let up = DensityMatrix::from_pure(&StateVector::basis(2, 0).unwrap());
        let counts = simulate_measurements(&up, &plan).unwrap();
        assert_eq!(counts.rows[2].eigenvalues, vec![-1.0, 1.0]);
        assert_eq!(counts.rows[2].counts, vec![0, 1000]);
        assert_eq!(counts, simulate_measurements(&up, &plan).unwrap());
        let mut buf = Vec::new();
        counts.write_csv(&mut buf).unwrap();
        assert!(String::from_utf8(buf).unwrap().starts_with("# seed=7 shots=1000\nobservable,outcome,eigenvalue,count\n"));
    }

    #[test]
    fn mixed_state_splits_binomially() {
        let plan = TomographyPlan::pauli(10_000, 8);
        let counts = simulate_measurements(&DensityMatrix::maximally_mixed(2), &plan).unwrap();
        let up = counts.rows[2].counts[1] as f64;
        assert!((up - 5000.0).abs() <= 3.0 * 50.0);
    }

    #[test]
    fn exact_reconstruction_is_identity() {
        let mut r = rng::stream(44, 0);
        for d in 2..=4 {
            let plan = TomographyPlan::gell_mann(d, 0, 0);
            for rank in [1, d] {
                let rho = random::density_matrix(d, rank, &mut r);
                let rec = reconstruct_exact(&rho, &plan).unwrap();
                assert!(rec.state.op().max_abs_diff(rho.op()) < 1e-10);
            }
        }
    }

    #[test]
    fn single_observable_plan_is_singular() {
        let plan = TomographyPlan::new(vec![ComplexOperator::pauli_z()], 100, 1).unwrap();
        let rho = DensityMatrix::maximally_mixed(2);
        assert!(matches!(reconstruct_exact(&rho, &plan), Err(Error::SingularFrame { .. })));
        assert!(check_frame(&plan).is_err());
    }

    #[test]
    fn plus_state_from_ten_thousand_shots() {
        let plus = plus_qubit();
        let plan = TomographyPlan::pauli(10_000, 9);
        let counts = simulate_measurements(&plus, &plan).unwrap();
        let rec = reconstruct_state(&counts, &plan, Some(&plus)).unwrap();
        assert!(rec.diagnostics.trace_distance_to_reference.unwrap() < 0.02);
    }

    #[test]
    fn simplex_projection() {
        assert_eq!(project_to_simplex(&[0.5, 0.5]), vec![0.5, 0.5]);
        let p = project_to_simplex(&[1.1, 0.1, -0.2]);
        assert!((p.iter().sum::<f64>() - 1.0).abs() < 1e-15);
        assert!((p[0] - 1.0).abs() < 1e-15 && (p[1] - 0.0).abs() < 1e-15);
        let p = project_to_simplex(&[0.6, 0.5, -0.05]);
        assert!((p[0] - 0.55).abs() < 1e-15 && (p[1] - 0.45).abs() < 1e-15 && p[2] == 0.0);
    }

    #[test]
    fn static_diagonal_pipeline_has_zero_gap() {
        let rho = DensityMatrix::from_diagonal(&[0.7, 0.3]).unwrap();
        let states: Vec<(f64, DensityMatrix)> = (0..3).map(|k| (k as f64, rho.clone())).collect();
        let plan = TomographyPlan::pauli(20_000, 10);
        let pts = decoherence_detection_pipeline(&states, &plan, &OrthonormalBasis::computational(2)).unwrap();
        for p in &pts {
            assert!(p.exact_gap.abs() < 1e-12);
            assert!(p.gap_estimate.abs() <= 3.0 * p.gap_std + 1e-3, "{p:?}");
        }
        let mut buf = Vec::new();
        write_pipeline_csv(&mut buf, plan.seed, &pts).unwrap();
        assert!(String::from_utf8(buf).unwrap().starts_with("# seed=10 resamples=100\nt,gap_estimate,gap_std,exact_gap\n"));
    }

    #[test]
    fn plan_json_round_trip() {
        let plan = TomographyPlan::pauli(50, 3);
        let text = serde_json::to_string(&plan).unwrap();
        assert_eq!(serde_json::from_str::<TomographyPlan>(&text).unwrap(), plan);
        assert!(serde_json::from_str::<TomographyPlan>(r#"{"observables":[],"shots_per_observable":1,"seed":1,"x":0}"#).is_err());
    }
}
