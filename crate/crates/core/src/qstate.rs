//! Finite-dimensional Hilbert-space algebra: operators, states, projectors,
//! bases, tensor products and partial traces.
//!
//! All values are immutable after construction and validated once, at
//! construction, against [`crate::tolerance::tolerances`].

use std::ops::{Add, Mul, Sub};

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::tolerance::tolerances;

pub type C64 = Complex64;

pub(crate) const I: C64 = C64::new(0.0, 1.0);

/// Dense square complex matrix.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(into = "OperatorJson", try_from = "OperatorJson")]
pub struct ComplexOperator(DMatrix<C64>);

/// Eigen-decomposition of a Hermitian operator, eigenvalues ascending.
#[derive(Debug, Clone)]
pub struct HermitianEigen {
    pub values: Vec<f64>,
    /// Eigenvectors as columns, in the order of `values`.
    pub vectors: DMatrix<C64>,
}

impl ComplexOperator {
    pub fn new(m: DMatrix<C64>) -> Result<Self> {
        if m.nrows() != m.ncols() || m.nrows() == 0 {
            return Err(Error::invalid(
                "operator",
                format!("expected a non-empty square matrix, got {}x{}", m.nrows(), m.ncols()),
            ));
        }
        Ok(Self(m))
    }

    pub fn from_fn(dim: usize, f: impl FnMut(usize, usize) -> C64) -> Self {
        Self(DMatrix::from_fn(dim, dim, f))
    }

    /// Row-major entries.
    pub fn from_rows(dim: usize, entries: &[C64]) -> Result<Self> {
        if entries.len() != dim * dim {
            return Err(Error::DimensionMismatch { expected: dim * dim, found: entries.len() });
        }
        Self::new(DMatrix::from_row_slice(dim, dim, entries))
    }

    pub fn zeros(dim: usize) -> Self {
        Self(DMatrix::zeros(dim, dim))
    }

    pub fn identity(dim: usize) -> Self {
        Self(DMatrix::identity(dim, dim))
    }

    pub fn from_real_diagonal(diag: &[f64]) -> Self {
        let v = DVector::from_iterator(diag.len(), diag.iter().map(|&d| C64::new(d, 0.0)));
        Self(DMatrix::from_diagonal(&v))
    }

    pub fn pauli_x() -> Self {
        Self::from_fn(2, |i, j| if i != j { C64::new(1.0, 0.0) } else { C64::new(0.0, 0.0) })
    }

    pub fn pauli_y() -> Self {
        Self::from_fn(2, |i, j| match (i, j) {
            (0, 1) => C64::new(0.0, -1.0),
            (1, 0) => C64::new(0.0, 1.0),
            _ => C64::new(0.0, 0.0),
        })
    }

    pub fn pauli_z() -> Self {
        Self::from_real_diagonal(&[1.0, -1.0])
    }

    /// `|a⟩⟨b|`
    pub fn outer(a: &StateVector, b: &StateVector) -> Self {
        Self(&a.0 * b.0.adjoint())
    }

    pub fn dim(&self) -> usize {
        self.0.nrows()
    }

    pub fn matrix(&self) -> &DMatrix<C64> {
        &self.0
    }

    pub fn into_matrix(self) -> DMatrix<C64> {
        self.0
    }

    pub fn get(&self, i: usize, j: usize) -> C64 {
        self.0[(i, j)]
    }

    pub fn adjoint(&self) -> Self {
        Self(self.0.adjoint())
    }

    pub fn trace(&self) -> C64 {
        self.0.trace()
    }

    pub fn scale(&self, s: C64) -> Self {
        Self(&self.0 * s)
    }

    pub fn scale_real(&self, s: f64) -> Self {
        self.scale(C64::new(s, 0.0))
    }

    pub fn commutator(&self, other: &Self) -> Self {
        Self(&self.0 * &other.0 - &other.0 * &self.0)
    }

    pub fn apply(&self, v: &StateVector) -> DVector<C64> {
        &self.0 * &v.0
    }

    /// `max |a_ij - b_ij|`
    pub fn max_abs_diff(&self, other: &Self) -> f64 {
        self.0.iter().zip(other.0.iter()).map(|(a, b)| (a - b).norm()).fold(0.0, f64::max)
    }

    pub fn max_abs(&self) -> f64 {
        self.0.iter().map(|a| a.norm()).fold(0.0, f64::max)
    }

    pub fn hermiticity_deviation(&self) -> f64 {
        let n = self.dim();
        let mut dev: f64 = 0.0;
        for i in 0..n {
            for j in i..n {
                dev = dev.max((self.0[(i, j)] - self.0[(j, i)].conj()).norm());
            }
        }
        dev
    }

    pub fn is_hermitian(&self, tol: f64) -> bool {
        self.hermiticity_deviation() <= tol
    }

    pub(crate) fn require_hermitian(&self) -> Result<()> {
        let deviation = self.hermiticity_deviation();
        if deviation > tolerances().exact {
            return Err(Error::NotHermitian { deviation });
        }
        Ok(())
    }

    fn hermitian_part(&self) -> DMatrix<C64> {
        (&self.0 + self.0.adjoint()) * C64::new(0.5, 0.0)
    }

    /// Eigen-decomposition of the Hermitian part, eigenvalues ascending.
    pub fn eigh(&self) -> HermitianEigen {
        hermitian_eigen(self.hermitian_part())
    }

    /// Largest absolute eigenvalue of the Hermitian part.
    pub fn spectral_norm_hermitian(&self) -> f64 {
        self.eigh().values.iter().fold(0.0, |m, v| f64::max(m, v.abs()))
    }

    /// `e^{-i H t}` for Hermitian `H = self`.
    pub fn unitary_propagator(&self, t: f64) -> Result<Self> {
        self.require_hermitian()?;
        Ok(self.hermitian_function(|lambda| (-I * lambda * t).exp()))
    }

    /// `f(H)` through the spectral decomposition of the Hermitian part.
    pub fn hermitian_function(&self, f: impl Fn(f64) -> C64) -> Self {
        let eig = self.eigh();
        let n = self.dim();
        let mut scaled = eig.vectors.clone();
        for (k, &lambda) in eig.values.iter().enumerate() {
            let fk = f(lambda);
            for i in 0..n {
                scaled[(i, k)] *= fk;
            }
        }
        Self(scaled * eig.vectors.adjoint())
    }
}

pub(crate) fn hermitian_eigen(m: DMatrix<C64>) -> HermitianEigen {
    let eig = nalgebra::linalg::SymmetricEigen::new(m);
    let mut order: Vec<usize> = (0..eig.eigenvalues.len()).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
    let values = order.iter().map(|&k| eig.eigenvalues[k]).collect();
    let vectors = DMatrix::from_fn(eig.eigenvectors.nrows(), order.len(), |i, k| {
        eig.eigenvectors[(i, order[k])]
    });
    HermitianEigen { values, vectors }
}

impl Add for &ComplexOperator {
    type Output = ComplexOperator;
    fn add(self, rhs: Self) -> ComplexOperator {
        ComplexOperator(&self.0 + &rhs.0)
    }
}

impl Sub for &ComplexOperator {
    type Output = ComplexOperator;
    fn sub(self, rhs: Self) -> ComplexOperator {
        ComplexOperator(&self.0 - &rhs.0)
    }
}

impl Mul for &ComplexOperator {
    type Output = ComplexOperator;
    fn mul(self, rhs: Self) -> ComplexOperator {
        ComplexOperator(&self.0 * &rhs.0)
    }
}

/// Interchange form shared by operators and state vectors: row-major real
/// and imaginary parts. State vectors carry `dim` entries, operators `dim²`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OperatorJson {
    pub dim: usize,
    pub re: Vec<f64>,
    pub im: Vec<f64>,
}

impl From<ComplexOperator> for OperatorJson {
    fn from(op: ComplexOperator) -> Self {
        let n = op.dim();
        let mut re = Vec::with_capacity(n * n);
        let mut im = Vec::with_capacity(n * n);
        for i in 0..n {
            for j in 0..n {
                re.push(op.0[(i, j)].re);
                im.push(op.0[(i, j)].im);
            }
        }
        Self { dim: n, re, im }
    }
}

impl TryFrom<OperatorJson> for ComplexOperator {
    type Error = Error;
    fn try_from(j: OperatorJson) -> Result<Self> {
        if j.re.len() != j.im.len() {
            return Err(Error::DimensionMismatch { expected: j.re.len(), found: j.im.len() });
        }
        let entries: Vec<C64> = j.re.iter().zip(&j.im).map(|(&r, &i)| C64::new(r, i)).collect();
        ComplexOperator::from_rows(j.dim, &entries)
    }
}

/// Normalized pure state.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(into = "OperatorJson", try_from = "OperatorJson")]
pub struct StateVector(DVector<C64>);

impl StateVector {
    pub fn new(amplitudes: Vec<C64>) -> Result<Self> {
        if amplitudes.is_empty() {
            return Err(Error::invalid("state vector", "empty"));
        }
        let norm2: f64 = amplitudes.iter().map(|a| a.norm_sqr()).sum();
        if (norm2 - 1.0).abs() > tolerances().exact {
            return Err(Error::Normalization(format!("state vector has squared norm {norm2}")));
        }
        Ok(Self(DVector::from_vec(amplitudes)))
    }

    /// Rescale to unit norm.
    pub fn normalized(amplitudes: Vec<C64>) -> Result<Self> {
        let norm = amplitudes.iter().map(|a| a.norm_sqr()).sum::<f64>().sqrt();
        if amplitudes.is_empty() || norm == 0.0 || !norm.is_finite() {
            return Err(Error::invalid("state vector", "cannot normalize a zero or non-finite vector"));
        }
        Ok(Self(DVector::from_iterator(amplitudes.len(), amplitudes.into_iter().map(|a| a / norm))))
    }

    pub fn basis(dim: usize, index: usize) -> Result<Self> {
        if index >= dim {
            return Err(Error::IndexOutOfRange { index, limit: dim });
        }
        let mut v = DVector::zeros(dim);
        v[index] = C64::new(1.0, 0.0);
        Ok(Self(v))
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }

    pub fn amplitudes(&self) -> &DVector<C64> {
        &self.0
    }

    pub fn amplitude(&self, i: usize) -> C64 {
        self.0[i]
    }

    /// `⟨self|other⟩`
    pub fn inner(&self, other: &Self) -> C64 {
        self.0.dotc(&other.0)
    }

    /// `⟨self|A|self⟩`
    pub fn sandwich(&self, op: &ComplexOperator) -> C64 {
        self.0.dotc(&(&op.0 * &self.0))
    }

    pub fn projector(&self) -> ComplexOperator {
        ComplexOperator::outer(self, self)
    }

    pub fn tensor(&self, other: &Self) -> Self {
        Self(self.0.kronecker(&other.0))
    }
}

impl From<StateVector> for OperatorJson {
    fn from(v: StateVector) -> Self {
        Self {
            dim: v.dim(),
            re: v.0.iter().map(|a| a.re).collect(),
            im: v.0.iter().map(|a| a.im).collect(),
        }
    }
}

impl TryFrom<OperatorJson> for StateVector {
    type Error = Error;
    fn try_from(j: OperatorJson) -> Result<Self> {
        if j.re.len() != j.dim || j.im.len() != j.dim {
            return Err(Error::DimensionMismatch { expected: j.dim, found: j.re.len() });
        }
        StateVector::new(j.re.iter().zip(&j.im).map(|(&r, &i)| C64::new(r, i)).collect())
    }
}

/// Hermitian, unit-trace, positive semidefinite operator.
#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(transparent)]
pub struct DensityMatrix(ComplexOperator);

impl DensityMatrix {
    pub fn new(op: ComplexOperator) -> Result<Self> {
        let tol = tolerances();
        op.require_hermitian()?;
        let tr = op.trace();
        if (tr - C64::new(1.0, 0.0)).norm() > tol.exact {
            return Err(Error::Normalization(format!("density matrix trace {tr}")));
        }
        let min = op.eigh().values[0];
        if min < -tol.psd {
            return Err(Error::invalid("density matrix", format!("negative eigenvalue {min:.3e}")));
        }
        Ok(Self(op))
    }

    /// Caller guarantees the invariants (e.g. outputs of trace- and
    /// positivity-preserving maps applied to valid states).
    pub(crate) fn from_trusted(op: ComplexOperator) -> Self {
        Self(ComplexOperator(op.hermitian_part()))
    }

    pub fn from_pure(psi: &StateVector) -> Self {
        Self(psi.projector())
    }

    pub fn maximally_mixed(dim: usize) -> Self {
        Self(ComplexOperator::identity(dim).scale_real(1.0 / dim as f64))
    }

    pub fn from_diagonal(p: &[f64]) -> Result<Self> {
        Self::new(ComplexOperator::from_real_diagonal(p))
    }

    /// Convex combination `Σ w_k ρ_k`; weights must be nonnegative and sum to one.
    pub fn mixture(parts: &[(f64, &DensityMatrix)]) -> Result<Self> {
        let first = parts.first().ok_or_else(|| Error::invalid("mixture", "no components"))?;
        let dim = first.1.dim();
        let mut acc = ComplexOperator::zeros(dim);
        for (w, rho) in parts {
            if rho.dim() != dim {
                return Err(Error::DimensionMismatch { expected: dim, found: rho.dim() });
            }
            if *w < 0.0 {
                return Err(Error::invalid("mixture", "negative weight"));
            }
            acc = &acc + &rho.0.scale_real(*w);
        }
        Self::new(acc)
    }

    pub fn dim(&self) -> usize {
        self.0.dim()
    }

    pub fn op(&self) -> &ComplexOperator {
        &self.0
    }

    pub fn get(&self, i: usize, j: usize) -> C64 {
        self.0.get(i, j)
    }

    pub fn eigenvalues(&self) -> Vec<f64> {
        self.0.eigh().values
    }

    pub fn purity(&self) -> f64 {
        self.0.0.iter().map(|a| a.norm_sqr()).sum()
    }

    /// `½ ‖ρ − σ‖₁`
    pub fn trace_distance(&self, other: &Self) -> Result<f64> {
        if self.dim() != other.dim() {
            return Err(Error::DimensionMismatch { expected: self.dim(), found: other.dim() });
        }
        let diff = &self.0 - &other.0;
        Ok(0.5 * diff.eigh().values.iter().map(|v| v.abs()).sum::<f64>())
    }

    /// `U ρ U†`; `U` must be unitary.
    pub fn conjugate_by(&self, u: &ComplexOperator) -> Self {
        Self::from_trusted(&(u * &self.0) * &u.adjoint())
    }
}

impl<'de> Deserialize<'de> for DensityMatrix {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let op = ComplexOperator::deserialize(d)?;
        DensityMatrix::new(op).map_err(serde::de::Error::custom)
    }
}

/// Orthogonal projector with its rank.
#[derive(Debug, Clone, PartialEq)]
pub struct Projector {
    op: ComplexOperator,
    rank: usize,
}

impl Projector {
    pub fn new(op: ComplexOperator) -> Result<Self> {
        let tol = tolerances().exact;
        op.require_hermitian()?;
        let sq = &op * &op;
        let dev = sq.max_abs_diff(&op);
        if dev > tol {
            return Err(Error::invalid("projector", format!("not idempotent (deviation {dev:.3e})")));
        }
        let tr = op.trace().re;
        let rank = tr.round();
        if (tr - rank).abs() > 1e-8 || rank < 1.0 {
            return Err(Error::invalid("projector", format!("trace {tr} is not a positive integer")));
        }
        Ok(Self { op, rank: rank as usize })
    }

    /// Projector onto the span of orthonormal `vectors`.
    pub fn onto(vectors: &[StateVector]) -> Result<Self> {
        let first = vectors.first().ok_or_else(|| Error::invalid("projector", "no vectors"))?;
        let mut acc = ComplexOperator::zeros(first.dim());
        for v in vectors {
            acc = &acc + &v.projector();
        }
        Self::new(acc)
    }

    /// Projector onto the computational basis states listed in `indices`.
    pub fn computational(dim: usize, indices: &[usize]) -> Result<Self> {
        let mut diag = vec![0.0; dim];
        for &i in indices {
            if i >= dim {
                return Err(Error::IndexOutOfRange { index: i, limit: dim });
            }
            diag[i] = 1.0;
        }
        Self::new(ComplexOperator::from_real_diagonal(&diag))
    }

    pub fn op(&self) -> &ComplexOperator {
        &self.op
    }

    pub fn rank(&self) -> usize {
        self.rank
    }

    pub fn dim(&self) -> usize {
        self.op.dim()
    }
}

/// Ordered orthonormal basis, stored as the columns of a unitary matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct OrthonormalBasis {
    unitary: ComplexOperator,
}

impl OrthonormalBasis {
    pub fn from_unitary(u: ComplexOperator) -> Result<Self> {
        let gram = &u.adjoint() * &u;
        let dev = gram.max_abs_diff(&ComplexOperator::identity(u.dim()));
        if dev > tolerances().exact {
            return Err(Error::invalid("orthonormal basis", format!("Gram deviation {dev:.3e}")));
        }
        Ok(Self { unitary: u })
    }

    pub fn from_vectors(vectors: &[StateVector]) -> Result<Self> {
        let dim = vectors.first().map(|v| v.dim()).unwrap_or(0);
        if vectors.len() != dim || dim == 0 {
            return Err(Error::invalid("orthonormal basis", "need exactly dim vectors"));
        }
        if let Some(v) = vectors.iter().find(|v| v.dim() != dim) {
            return Err(Error::DimensionMismatch { expected: dim, found: v.dim() });
        }
        let m = DMatrix::from_fn(dim, dim, |i, k| vectors[k].amplitude(i));
        Self::from_unitary(ComplexOperator(m))
    }

    pub fn computational(dim: usize) -> Self {
        Self { unitary: ComplexOperator::identity(dim) }
    }

    /// Eigenbasis of a Hermitian operator, eigenvalues ascending.
    pub fn eigenbasis(op: &ComplexOperator) -> Self {
        Self { unitary: ComplexOperator(op.eigh().vectors) }
    }

    pub fn dim(&self) -> usize {
        self.unitary.dim()
    }

    /// Columns are the basis vectors.
    pub fn unitary(&self) -> &ComplexOperator {
        &self.unitary
    }

    pub fn vector(&self, k: usize) -> StateVector {
        StateVector(self.unitary.0.column(k).into_owned())
    }

    /// The basis `{U|v_k⟩}`.
    pub fn transformed(&self, u: &ComplexOperator) -> Result<Self> {
        Self::from_unitary(u * &self.unitary)
    }

    /// Matrix elements `⟨v_i|A|v_j⟩`.
    pub fn represent(&self, op: &ComplexOperator) -> Result<ComplexOperator> {
        if op.dim() != self.dim() {
            return Err(Error::DimensionMismatch { expected: self.dim(), found: op.dim() });
        }
        Ok(&(&self.unitary.adjoint() * op) * &self.unitary)
    }
}

/// Kronecker product `a ⊗ b`; the first factor is the slow index.
pub fn tensor(a: &ComplexOperator, b: &ComplexOperator) -> ComplexOperator {
    ComplexOperator(a.0.kronecker(&b.0))
}

/// Reduced operator on the subsystems listed in `keep` (kept in their
/// original order) of a composite with factor dimensions `dims`.
pub fn partial_trace_op(op: &ComplexOperator, dims: &[usize], keep: &[usize]) -> Result<ComplexOperator> {
    let total: usize = dims.iter().product();
    if dims.is_empty() || total != op.dim() {
        return Err(Error::DimensionMismatch { expected: op.dim(), found: total });
    }
    let mut keep_sorted = keep.to_vec();
    keep_sorted.sort_unstable();
    keep_sorted.dedup();
    if let Some(&k) = keep_sorted.iter().find(|&&k| k >= dims.len()) {
        return Err(Error::IndexOutOfRange { index: k, limit: dims.len() });
    }
    let traced: Vec<usize> = (0..dims.len()).filter(|k| !keep_sorted.contains(k)).collect();

    // strides of each factor in the full index
    let mut strides = vec![1usize; dims.len()];
    for k in (0..dims.len().saturating_sub(1)).rev() {
        strides[k] = strides[k + 1] * dims[k + 1];
    }
    let offsets = |factors: &[usize]| -> Vec<usize> {
        let size: usize = factors.iter().map(|&k| dims[k]).product();
        (0..size)
            .map(|mut idx| {
                let mut off = 0;
                for &k in factors.iter().rev() {
                    off += (idx % dims[k]) * strides[k];
                    idx /= dims[k];
                }
                off
            })
            .collect()
    };
    let kept_off = offsets(&keep_sorted);
    let traced_off = offsets(&traced);

    let d = kept_off.len();
    let m = &op.0;
    let out = DMatrix::from_fn(d, d, |a, b| {
        traced_off.iter().map(|&e| m[(kept_off[a] + e, kept_off[b] + e)]).sum()
    });
    Ok(ComplexOperator(out))
}

pub fn partial_trace(rho: &DensityMatrix, dims: &[usize], keep: &[usize]) -> Result<DensityMatrix> {
    Ok(DensityMatrix::from_trusted(partial_trace_op(rho.op(), dims, keep)?))
}

/// `e^{-iHt} ρ e^{+iHt}`
pub fn evolve_unitary(rho: &DensityMatrix, h: &ComplexOperator, t: f64) -> Result<DensityMatrix> {
    if h.dim() != rho.dim() {
        return Err(Error::DimensionMismatch { expected: rho.dim(), found: h.dim() });
    }
    let u = h.unitary_propagator(t)?;
    Ok(rho.conjugate_by(&u))
}

/// `Tr(ρA)` for Hermitian `A`.
pub fn expectation(rho: &DensityMatrix, a: &ComplexOperator) -> Result<f64> {
    if a.dim() != rho.dim() {
        return Err(Error::DimensionMismatch { expected: rho.dim(), found: a.dim() });
    }
    a.require_hermitian()?;
    let v = (rho.op() * a).trace();
    if v.im.abs() > tolerances().exact {
        return Err(Error::invalid("expectation", format!("imaginary residue {:.3e}", v.im)));
    }
    Ok(v.re)
}

/// Random states and unitaries for sweeps and property tests.
pub mod random {
    use super::*;

    fn gaussian_c64<R: Rng + ?Sized>(rng: &mut R) -> C64 {
        C64::new(rng.sample(StandardNormal), rng.sample(StandardNormal))
    }

    pub fn ginibre<R: Rng + ?Sized>(rows: usize, cols: usize, rng: &mut R) -> DMatrix<C64> {
        DMatrix::from_fn(rows, cols, |_, _| gaussian_c64(rng))
    }

    /// Hermitian matrix with Gaussian entries (GUE up to scale).
    pub fn hermitian<R: Rng + ?Sized>(dim: usize, rng: &mut R) -> ComplexOperator {
        let g = ginibre(dim, dim, rng);
        ComplexOperator((&g + g.adjoint()) * C64::new(0.5, 0.0))
    }

    /// Haar-random unitary (QR of a Ginibre matrix with phase correction).
    pub fn unitary<R: Rng + ?Sized>(dim: usize, rng: &mut R) -> ComplexOperator {
        let qr = ginibre(dim, dim, rng).qr();
        let (mut q, r) = qr.unpack();
        for k in 0..dim {
            let d = r[(k, k)];
            let phase = if d.norm() > 0.0 { d / d.norm() } else { C64::new(1.0, 0.0) };
            for i in 0..dim {
                q[(i, k)] *= phase;
            }
        }
        ComplexOperator(q)
    }

    pub fn state<R: Rng + ?Sized>(dim: usize, rng: &mut R) -> StateVector {
        let v: Vec<C64> = (0..dim).map(|_| gaussian_c64(rng)).collect();
        StateVector::normalized(v).expect("Gaussian vector is nonzero")
    }

    /// `G G† / Tr` with `G` of shape `dim × rank`.
    pub fn density_matrix<R: Rng + ?Sized>(dim: usize, rank: usize, rng: &mut R) -> DensityMatrix {
        let g = ginibre(dim, rank.max(1), rng);
        let m = &g * g.adjoint();
        let tr = m.trace();
        DensityMatrix::from_trusted(ComplexOperator(m / tr))
    }

    pub fn basis<R: Rng + ?Sized>(dim: usize, rng: &mut R) -> OrthonormalBasis {
        OrthonormalBasis { unitary: unitary(dim, rng) }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng;

    fn c(re: f64) -> C64 {
        C64::new(re, 0.0)
    }

    #[test]
    fn tensor_identity_and_diagonal() {
        let id = tensor(&ComplexOperator::identity(2), &ComplexOperator::identity(3));
        assert_eq!(id, ComplexOperator::identity(6));
        let d = tensor(
            &ComplexOperator::from_real_diagonal(&[1.0, 0.0]),
            &ComplexOperator::from_real_diagonal(&[0.0, 1.0]),
        );
        assert_eq!(d, ComplexOperator::from_real_diagonal(&[0.0, 1.0, 0.0, 0.0]));
    }

    #[test]
    fn xx_flips_both_qubits() {
        let xx = tensor(&ComplexOperator::pauli_x(), &ComplexOperator::pauli_x());
        let out = xx.apply(&StateVector::basis(4, 0).unwrap());
        let expected = StateVector::basis(4, 3).unwrap();
        assert!((out - expected.amplitudes()).norm() < 1e-15);
    }

    #[test]
    fn bell_state_reduces_to_maximally_mixed() {
        let s = 0.5f64.sqrt();
        let bell = StateVector::new(vec![c(s), c(0.0), c(0.0), c(s)]).unwrap();
        let rho = DensityMatrix::from_pure(&bell);
        let red = partial_trace(&rho, &[2, 2], &[0]).unwrap();
        // environment sum by hand: ρ_A(i,j) = Σ_e ρ(2i+e, 2j+e)
        let m = rho.op().matrix();
        for i in 0..2 {
            for j in 0..2 {
                let brute = m[(2 * i, 2 * j)] + m[(2 * i + 1, 2 * j + 1)];
                assert!((red.get(i, j) - brute).norm() < 1e-15);
            }
        }
        assert!(red.op().max_abs_diff(&ComplexOperator::from_real_diagonal(&[0.5, 0.5])) < 1e-15);
    }

    #[test]
    fn partial_trace_keep_all_and_bad_dims() {
        let mut r = rng::stream(1, 0);
        let rho = random::density_matrix(6, 6, &mut r);
        let same = partial_trace(&rho, &[2, 3], &[0, 1]).unwrap();
        assert!(same.op().max_abs_diff(rho.op()) < 1e-15);
        assert!(matches!(
            partial_trace(&rho, &[2, 2], &[0]),
            Err(Error::DimensionMismatch { .. })
        ));
    }

    #[test]
    fn partial_trace_middle_factor() {
        let mut r = rng::stream(2, 0);
        let a = random::density_matrix(2, 2, &mut r);
        let b = random::density_matrix(3, 3, &mut r);
        let cc = random::density_matrix(2, 2, &mut r);
        let abc = DensityMatrix::from_trusted(tensor(&tensor(a.op(), b.op()), cc.op()));
        let ac = partial_trace(&abc, &[2, 3, 2], &[2, 0]).unwrap();
        assert!(ac.op().max_abs_diff(&tensor(a.op(), cc.op())) < 1e-12);
        let bonly = partial_trace(&abc, &[2, 3, 2], &[1]).unwrap();
        assert!(bonly.op().max_abs_diff(b.op()) < 1e-12);
    }

    #[test]
    fn evolve_pauli_z_rotates_plus_around_equator() {
        let s = 0.5f64.sqrt();
        let plus = StateVector::new(vec![c(s), c(s)]).unwrap();
        let rho = DensityMatrix::from_pure(&plus);
        let z = ComplexOperator::pauli_z();
        // e^{-iZt}|+⟩ = (e^{-it}|0⟩ + e^{it}|1⟩)/√2, off-diagonal ρ01 = e^{-2it}/2
        let cases = [
            (std::f64::consts::FRAC_PI_4, C64::new(0.0, -0.5)), // |+i⟩
            (std::f64::consts::FRAC_PI_2, c(-0.5)),             // |−⟩
            (3.0 * std::f64::consts::FRAC_PI_4, C64::new(0.0, 0.5)), // |−i⟩
        ];
        for (t, off) in cases {
            let out = evolve_unitary(&rho, &z, t).unwrap();
            let expected = ComplexOperator::from_rows(2, &[c(0.5), off, off.conj(), c(0.5)]).unwrap();
            assert!(out.op().max_abs_diff(&expected) < 1e-12, "t = {t}");
        }
    }

    #[test]
    fn evolve_with_zero_hamiltonian_is_identity() {
        let mut r = rng::stream(3, 0);
        let rho = random::density_matrix(4, 2, &mut r);
        let out = evolve_unitary(&rho, &ComplexOperator::zeros(4), 2.7).unwrap();
        assert!(out.op().max_abs_diff(rho.op()) < 1e-14);
    }

    #[test]
    fn evolve_rejects_non_hermitian() {
        let rho = DensityMatrix::maximally_mixed(2);
        let h = ComplexOperator::from_rows(2, &[c(0.0), c(1.0), c(0.0), c(0.0)]).unwrap();
        assert!(matches!(evolve_unitary(&rho, &h, 1.0), Err(Error::NotHermitian { .. })));
    }

    #[test]
    fn expectation_examples() {
        let z = ComplexOperator::pauli_z();
        assert!((expectation(&DensityMatrix::maximally_mixed(2), &ComplexOperator::identity(2)).unwrap() - 1.0).abs() < 1e-15);
        let zero = DensityMatrix::from_pure(&StateVector::basis(2, 0).unwrap());
        assert_eq!(expectation(&zero, &z).unwrap(), 1.0);
        let rho = DensityMatrix::from_diagonal(&[0.25, 0.75]).unwrap();
        assert!((expectation(&rho, &z).unwrap() + 0.5).abs() < 1e-15);
        let bad = ComplexOperator::from_rows(2, &[c(0.0), c(1.0), c(0.0), c(0.0)]).unwrap();
        assert!(expectation(&rho, &bad).is_err());
    }

    #[test]
    fn density_matrix_validation() {
        assert!(DensityMatrix::from_diagonal(&[0.5, 0.4]).is_err());
        assert!(DensityMatrix::from_diagonal(&[1.2, -0.2]).is_err());
        let nonherm = ComplexOperator::from_rows(2, &[c(0.5), c(0.1), c(0.0), c(0.5)]).unwrap();
        assert!(matches!(DensityMatrix::new(nonherm), Err(Error::NotHermitian { .. })));
    }

    #[test]
    fn projector_validation_and_rank() {
        let p = Projector::computational(4, &[0, 2]).unwrap();
        assert_eq!(p.rank(), 2);
        assert!(Projector::new(ComplexOperator::from_real_diagonal(&[0.5, 0.0])).is_err());
    }

    #[test]
    fn json_round_trip() {
        let op = ComplexOperator::pauli_y();
        let s = serde_json::to_string(&op).unwrap();
        assert_eq!(s, r#"{"dim":2,"re":[0.0,0.0,0.0,0.0],"im":[0.0,-1.0,1.0,0.0]}"#);
        let back: ComplexOperator = serde_json::from_str(&s).unwrap();
        assert_eq!(back, op);
        let bad: std::result::Result<ComplexOperator, _> = serde_json::from_str(r#"{"dim":2,"re":[1.0],"im":[0.0]}"#);
        assert!(bad.is_err());
    }

    #[test]
    fn basis_rejects_non_orthonormal() {
        let a = StateVector::basis(2, 0).unwrap();
        assert!(OrthonormalBasis::from_vectors(&[a.clone(), a]).is_err());
    }
}
