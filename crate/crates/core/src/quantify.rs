//! Basis-relative decoherence measures.
//!
//! The central quantity is the decoherence gap `I[p] − S[ρ]`, the Shannon
//! information of the diagonal of `ρ` in a chosen basis minus the von Neumann
//! entropy of `ρ`. It is nonnegative and vanishes exactly when `ρ` is diagonal
//! in that basis. All entropies are in nats.

use std::io::Write;

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::qstate::{random, ComplexOperator, DensityMatrix, OrthonormalBasis, I};
use crate::rng;
use crate::tolerance::tolerances;

/// Default threshold (nats) below which a gap counts as approximately diagonal.
pub const DEFAULT_GAP_THRESHOLD: f64 = 0.01;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct ProbabilityVector(Vec<f64>);

impl ProbabilityVector {
    pub fn new(p: Vec<f64>) -> Result<Self> {
        if p.is_empty() {
            return Err(Error::invalid("probability vector", "empty"));
        }
        if let Some(x) = p.iter().find(|x| !(**x >= 0.0)) {
            return Err(Error::invalid("probability vector", format!("negative or NaN entry {x}")));
        }
        let total: f64 = p.iter().sum();
        if (total - 1.0).abs() > tolerances().exact {
            return Err(Error::Normalization(format!("probabilities sum to {total}")));
        }
        Ok(Self(p))
    }

    /// Clamp entries within `-tol` of zero, then renormalize.
    pub(crate) fn from_raw(mut p: Vec<f64>, tol: f64) -> Result<Self> {
        for x in &mut p {
            if *x < 0.0 && *x >= -tol {
                *x = 0.0;
            }
        }
        let total: f64 = p.iter().sum();
        if total > 0.0 {
            p.iter_mut().for_each(|x| *x /= total);
        }
        Self::new(p)
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }

    pub fn values(&self) -> &[f64] {
        &self.0
    }
}

/// Off-diagonal magnitude relative to the diagonal; undefined when some
/// diagonal entry vanishes.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind", content = "value")]
pub enum OffdiagRatio {
    Value(f64),
    Undefined,
}

impl OffdiagRatio {
    pub fn value(self) -> Option<f64> {
        match self {
            OffdiagRatio::Value(v) => Some(v),
            OffdiagRatio::Undefined => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DecoherenceReport {
    pub basis_label: String,
    pub gap: f64,
    pub shannon: f64,
    pub von_neumann: f64,
    /// `max_{i≠j} |ρ_ij| / sqrt(ρ_ii ρ_jj)`; `None` when undefined.
    pub max_offdiag_ratio: Option<f64>,
    /// `max_{i≠j} |ρ_ij / ρ_ii|`, the unsymmetrized ratio; `None` when undefined.
    pub raw_offdiag_ratio: Option<f64>,
}

impl DecoherenceReport {
    /// Gap below `threshold` nats (see [`DEFAULT_GAP_THRESHOLD`]).
    pub fn approximately_diagonal(&self, threshold: f64) -> bool {
        self.gap <= threshold
    }
}

fn check_dims(rho: &DensityMatrix, basis: &OrthonormalBasis) -> Result<()> {
    if rho.dim() != basis.dim() {
        return Err(Error::DimensionMismatch { expected: rho.dim(), found: basis.dim() });
    }
    Ok(())
}

/// `p_i = ⟨i|ρ|i⟩`
pub fn diagonal_distribution(rho: &DensityMatrix, basis: &OrthonormalBasis) -> Result<ProbabilityVector> {
    check_dims(rho, basis)?;
    let u = basis.unitary().matrix();
    let m = rho.op().matrix();
    let p = (0..rho.dim())
        .map(|i| {
            let v = u.column(i);
            v.dotc(&(m * v)).re
        })
        .collect();
    ProbabilityVector::from_raw(p, tolerances().psd)
}

fn entropy_of(values: impl Iterator<Item = f64>) -> f64 {
    let zero = tolerances().entropy_zero;
    -values.filter(|&x| x > zero).map(|x| x * x.ln()).sum::<f64>()
}

/// `−Σ p ln p`
pub fn shannon_information(p: &ProbabilityVector) -> f64 {
    entropy_of(p.values().iter().copied())
}

/// `−Tr ρ ln ρ`
pub fn von_neumann_entropy(rho: &DensityMatrix) -> f64 {
    entropy_of(rho.eigenvalues().into_iter())
}

pub fn decoherence_gap(rho: &DensityMatrix, basis: &OrthonormalBasis) -> Result<DecoherenceReport> {
    decoherence_gap_labeled(rho, basis, "basis")
}

pub fn decoherence_gap_labeled(
    rho: &DensityMatrix,
    basis: &OrthonormalBasis,
    label: &str,
) -> Result<DecoherenceReport> {
    let p = diagonal_distribution(rho, basis)?;
    let shannon = shannon_information(&p);
    let von_neumann = von_neumann_entropy(rho);
    let (sym, raw) = offdiag_ratios(rho, basis)?;
    Ok(DecoherenceReport {
        basis_label: label.to_string(),
        gap: shannon - von_neumann,
        shannon,
        von_neumann,
        max_offdiag_ratio: sym.value(),
        raw_offdiag_ratio: raw.value(),
    })
}

/// `max_{i≠j} |ρ_ij| / sqrt(ρ_ii ρ_jj)` in `basis`.
pub fn offdiag_ratio(rho: &DensityMatrix, basis: &OrthonormalBasis) -> Result<OffdiagRatio> {
    Ok(offdiag_ratios(rho, basis)?.0)
}

fn offdiag_ratios(rho: &DensityMatrix, basis: &OrthonormalBasis) -> Result<(OffdiagRatio, OffdiagRatio)> {
    check_dims(rho, basis)?;
    let r = basis.represent(rho.op())?;
    let n = r.dim();
    let floor = tolerances().ratio_floor;
    let diag: Vec<f64> = (0..n).map(|i| r.get(i, i).re).collect();
    if diag.iter().any(|&d| d < floor) {
        return Ok((OffdiagRatio::Undefined, OffdiagRatio::Undefined));
    }
    let mut sym: f64 = 0.0;
    let mut raw: f64 = 0.0;
    for i in 0..n {
        for j in 0..n {
            if i != j {
                let a = r.get(i, j).norm();
                sym = sym.max(a / (diag[i] * diag[j]).sqrt());
                raw = raw.max(a / diag[i]);
            }
        }
    }
    Ok((OffdiagRatio::Value(sym), OffdiagRatio::Value(raw)))
}

/// One perturbed-basis evaluation of [`halo_sweep`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HaloSample {
    pub sample_index: usize,
    pub epsilon: f64,
    pub report: DecoherenceReport,
}

/// Random Hermitian generator of unit operator norm.
fn unit_generator<R: Rng + ?Sized>(dim: usize, rng: &mut R) -> ComplexOperator {
    let k = random::hermitian(dim, rng);
    let norm = k.spectral_norm_hermitian();
    if norm > 0.0 {
        k.scale_real(1.0 / norm)
    } else {
        k
    }
}

/// Evaluate the gap in `samples` bases `U·exp(iεK)` near `basis`, with `K` a
/// random unit-norm Hermitian generator and `ε` uniform in `[0, radius]`.
/// Sample `k` draws from random stream `k` of `seed`.
pub fn halo_sweep(
    rho: &DensityMatrix,
    basis: &OrthonormalBasis,
    radius: f64,
    samples: usize,
    seed: u64,
) -> Result<Vec<HaloSample>> {
    check_dims(rho, basis)?;
    if !(radius >= 0.0) {
        return Err(Error::invalid("halo radius", format!("{radius} must be nonnegative")));
    }
    let dim = rho.dim();
    (0..samples)
        .into_par_iter()
        .map(|k| {
            let mut r = rng::stream(seed, k as u64);
            let generator = unit_generator(dim, &mut r);
            let u: f64 = r.random();
            let epsilon = radius * u;
            let rotation = generator.hermitian_function(|lambda| (I * lambda * epsilon).exp());
            let perturbed = OrthonormalBasis::from_unitary(basis.unitary() * &rotation)?;
            let report = decoherence_gap_labeled(rho, &perturbed, &format!("halo-{k}"))?;
            Ok(HaloSample { sample_index: k, epsilon, report })
        })
        .collect()
}

/// CSV with columns `sample_index, epsilon, gap, shannon, von_neumann,
/// max_offdiag_ratio` (empty ratio field when undefined).
pub fn write_halo_csv<W: Write>(out: W, samples: &[HaloSample]) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    let io = |e: csv::Error| Error::invalid("csv output", e.to_string());
    w.write_record(["sample_index", "epsilon", "gap", "shannon", "von_neumann", "max_offdiag_ratio"])
        .map_err(io)?;
    for s in samples {
        w.write_record([
            s.sample_index.to_string(),
            format!("{:e}", s.epsilon),
            format!("{:e}", s.report.gap),
            format!("{:e}", s.report.shannon),
            format!("{:e}", s.report.von_neumann),
            s.report.max_offdiag_ratio.map(|v| format!("{v:e}")).unwrap_or_default(),
        ])
        .map_err(io)?;
    }
    w.flush().map_err(|e| Error::invalid("csv output", e.to_string()))
}

/// Largest off-diagonal magnitude of `ρ` in `basis`.
pub fn max_offdiag_abs(rho: &DensityMatrix, basis: &OrthonormalBasis) -> Result<f64> {
    let r = basis.represent(rho.op())?;
    let n = r.dim();
    let mut m: f64 = 0.0;
    for i in 0..n {
        for j in 0..n {
            if i != j {
                m = m.max(r.get(i, j).norm());
            }
        }
    }
    Ok(m)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::qstate::{StateVector, C64};

    fn real(x: f64) -> C64 {
        C64::new(x, 0.0)
    }

    fn plus() -> DensityMatrix {
        let s = 0.5f64.sqrt();
        DensityMatrix::from_pure(&StateVector::new(vec![real(s), real(s)]).unwrap())
    }

    #[test]
    fn diagonal_distribution_examples() {
        let comp = OrthonormalBasis::computational(2);
        let rho = DensityMatrix::from_diagonal(&[0.3, 0.7]).unwrap();
        let p = diagonal_distribution(&rho, &comp).unwrap();
        assert!((p.values()[0] - 0.3).abs() < 1e-15 && (p.values()[1] - 0.7).abs() < 1e-15);
        let p = diagonal_distribution(&plus(), &comp).unwrap();
        assert!((p.values()[0] - 0.5).abs() < 1e-15);

        let mut r = rng::stream(11, 0);
        let rho = random::density_matrix(5, 3, &mut r);
        let eb = OrthonormalBasis::eigenbasis(rho.op());
        let p = diagonal_distribution(&rho, &eb).unwrap();
        for (a, b) in p.values().iter().zip(rho.eigenvalues()) {
            assert!((a - b.max(0.0)).abs() < 1e-10);
        }
        assert!(diagonal_distribution(&rho, &comp).is_err());
    }

    #[test]
    fn shannon_examples() {
        assert_eq!(shannon_information(&ProbabilityVector::new(vec![1.0, 0.0]).unwrap()), 0.0);
        let u = ProbabilityVector::new(vec![0.25; 4]).unwrap();
        assert!((shannon_information(&u) - 4f64.ln()).abs() < 1e-15);
        let p = ProbabilityVector::new(vec![0.25, 0.75]).unwrap();
        let direct = -0.25 * 0.25f64.ln() - 0.75 * 0.75f64.ln();
        assert!((shannon_information(&p) - direct).abs() < 1e-15);
        assert!((direct - 0.5623351446188083).abs() < 1e-15);
    }

    #[test]
    fn von_neumann_examples() {
        let mut r = rng::stream(12, 0);
        let pure = DensityMatrix::from_pure(&random::state(4, &mut r));
        assert!(von_neumann_entropy(&pure).abs() < 1e-9);
        assert!((von_neumann_entropy(&DensityMatrix::maximally_mixed(2)) - 2f64.ln()).abs() < 1e-14);
        let rho = DensityMatrix::from_diagonal(&[0.25, 0.75]).unwrap();
        let p = ProbabilityVector::new(vec![0.25, 0.75]).unwrap();
        assert!((von_neumann_entropy(&rho) - shannon_information(&p)).abs() < 1e-14);
    }

    #[test]
    fn gap_examples() {
        let comp = OrthonormalBasis::computational(2);
        let diag = DensityMatrix::from_diagonal(&[0.2, 0.8]).unwrap();
        assert!(decoherence_gap(&diag, &comp).unwrap().gap.abs() <= 1e-9);
        let rep = decoherence_gap(&plus(), &comp).unwrap();
        assert!((rep.shannon - 2f64.ln()).abs() < 1e-14);
        assert!(rep.von_neumann.abs() < 1e-9);
        assert!((rep.gap - 2f64.ln()).abs() < 1e-9);
        let mut r = rng::stream(13, 0);
        let b = random::basis(3, &mut r);
        assert!(decoherence_gap(&DensityMatrix::maximally_mixed(3), &b).unwrap().gap.abs() < 1e-12);
    }

    #[test]
    fn offdiag_examples() {
        let comp = OrthonormalBasis::computational(2);
        let diag = DensityMatrix::from_diagonal(&[0.4, 0.6]).unwrap();
        assert_eq!(offdiag_ratio(&diag, &comp).unwrap(), OffdiagRatio::Value(0.0));
        let v = offdiag_ratio(&plus(), &comp).unwrap().value().unwrap();
        assert!((v - 1.0).abs() < 1e-14);
        let pure0 = DensityMatrix::from_diagonal(&[1.0, 0.0]).unwrap();
        assert_eq!(offdiag_ratio(&pure0, &comp).unwrap(), OffdiagRatio::Undefined);
        let rep = decoherence_gap(&pure0, &comp).unwrap();
        assert_eq!(rep.max_offdiag_ratio, None);
    }

    #[test]
    fn halo_radius_zero_reproduces_unperturbed() {
        let mut r = rng::stream(14, 0);
        let rho = random::density_matrix(3, 3, &mut r);
        let b = random::basis(3, &mut r);
        let base = decoherence_gap(&rho, &b).unwrap();
        for s in halo_sweep(&rho, &b, 0.0, 10, 5).unwrap() {
            assert_eq!(s.epsilon, 0.0);
            assert!((s.report.gap - base.gap).abs() < 1e-12);
        }
    }

    #[test]
    fn halo_of_maximally_mixed_is_flat() {
        let b = OrthonormalBasis::computational(4);
        for s in halo_sweep(&DensityMatrix::maximally_mixed(4), &b, 0.5, 20, 9).unwrap() {
            assert!(s.report.gap.abs() < 1e-12);
        }
    }

    #[test]
    fn halo_rejects_negative_radius() {
        let b = OrthonormalBasis::computational(2);
        assert!(halo_sweep(&DensityMatrix::maximally_mixed(2), &b, -0.1, 3, 1).is_err());
    }

    #[test]
    fn halo_csv_layout() {
        let b = OrthonormalBasis::computational(2);
        let rho = DensityMatrix::from_diagonal(&[0.9, 0.1]).unwrap();
        let samples = halo_sweep(&rho, &b, 0.1, 2, 3).unwrap();
        let mut buf = Vec::new();
        write_halo_csv(&mut buf, &samples).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let mut lines = text.lines();
        assert_eq!(lines.next().unwrap(), "sample_index,epsilon,gap,shannon,von_neumann,max_offdiag_ratio");
        assert_eq!(lines.count(), 2);
    }

    #[test]
    fn halo_sweep_regression() {
        let b = OrthonormalBasis::computational(2);
        let rho = DensityMatrix::from_diagonal(&[0.9, 0.1]).unwrap();
        let samples = halo_sweep(&rho, &b, 0.1, 100, 2024).unwrap();
        let mean = samples.iter().map(|s| s.report.gap).sum::<f64>() / 100.0;
        let max = samples.iter().map(|s| s.report.gap).fold(0.0, f64::max);
        assert!((mean - 1.817_116_075_964_357_8e-3).abs() < 1e-12);
        assert!((max - 1.222_103_965_095_910_9e-2).abs() < 1e-12);
    }
}
