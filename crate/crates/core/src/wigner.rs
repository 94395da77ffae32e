//! Phase-space representation of grid states.
//!
//! The transform evaluates `W(q,p) = (1/2π) ∫ dy e^{-ipy} ρ(q+y/2, q−y/2)`
//! with `q` on the position grid and the relative coordinate sampled at
//! `y = 2m·dx`, so both arguments land on grid points. Pairs leaving the box
//! contribute zero (no periodic wrap), which keeps each pair `(x, x')` at its
//! true midpoint. The momentum axis is then fixed by the grid: `n` points
//! spaced `dp = π/(n·dx)`, centered at zero.

use std::f64::consts::PI;
use std::io::Write;
use std::sync::Arc;

use nalgebra::DMatrix;
use rayon::prelude::*;
use rustfft::{Fft, FftPlanner};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::qstate::{hermitian_eigen, C64};
use crate::tolerance::tolerances;

/// Uniform periodic-style grid `x_k = x_min + k·dx`, `k = 0..n`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SpatialGrid {
    n: usize,
    x_min: f64,
    x_max: f64,
}

impl SpatialGrid {
    pub fn new(n: usize, x_min: f64, x_max: f64) -> Result<Self> {
        if n < 16 || !n.is_power_of_two() {
            return Err(Error::invalid("grid", format!("n = {n} must be a power of two ≥ 16")));
        }
        if !(x_max > x_min) || !x_min.is_finite() || !x_max.is_finite() {
            return Err(Error::invalid("grid", format!("bounds [{x_min}, {x_max}] are empty")));
        }
        Ok(Self { n, x_min, x_max })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn x_min(&self) -> f64 {
        self.x_min
    }

    pub fn x_max(&self) -> f64 {
        self.x_max
    }

    pub fn length(&self) -> f64 {
        self.x_max - self.x_min
    }

    pub fn dx(&self) -> f64 {
        self.length() / self.n as f64
    }

    pub fn x(&self, k: usize) -> f64 {
        self.x_min + k as f64 * self.dx()
    }

    pub fn points(&self) -> Vec<f64> {
        (0..self.n).map(|k| self.x(k)).collect()
    }

    /// Spacing of the Wigner momentum axis.
    pub fn wigner_dp(&self) -> f64 {
        PI / (self.n as f64 * self.dx())
    }

    /// Angular wavenumbers of the FFT ordering, `2π·j/(n·dx)` with `j`
    /// wrapped to `[-n/2, n/2)`.
    pub fn fft_wavenumbers(&self) -> Vec<f64> {
        let n = self.n as i64;
        let dk = 2.0 * PI / self.length();
        (0..n).map(|j| if j < n / 2 { j } else { j - n }).map(|j| j as f64 * dk).collect()
    }
}

/// Sampled wavefunction with `Σ|ψ_k|² dx = 1`.
#[derive(Debug, Clone, PartialEq)]
pub struct GridWavefunction {
    grid: SpatialGrid,
    values: Vec<C64>,
}

impl GridWavefunction {
    pub fn new(grid: SpatialGrid, values: Vec<C64>) -> Result<Self> {
        if values.len() != grid.n() {
            return Err(Error::DimensionMismatch { expected: grid.n(), found: values.len() });
        }
        let norm: f64 = values.iter().map(|v| v.norm_sqr()).sum::<f64>() * grid.dx();
        if (norm - 1.0).abs() > tolerances().grid {
            return Err(Error::Normalization(format!("wavefunction norm {norm}")));
        }
        Ok(Self { grid, values })
    }

    pub fn normalized(grid: SpatialGrid, values: Vec<C64>) -> Result<Self> {
        if values.len() != grid.n() {
            return Err(Error::DimensionMismatch { expected: grid.n(), found: values.len() });
        }
        let norm = (values.iter().map(|v| v.norm_sqr()).sum::<f64>() * grid.dx()).sqrt();
        if !(norm > 0.0) || !norm.is_finite() {
            return Err(Error::Normalization("cannot normalize a zero wavefunction".into()));
        }
        Ok(Self { grid, values: values.into_iter().map(|v| v / norm).collect() })
    }

    /// `ψ(x) ∝ exp(−(x−center)²/2σ² + i·momentum·x)`.
    pub fn gaussian(grid: SpatialGrid, center: f64, sigma: f64, momentum: f64) -> Result<Self> {
        if !(sigma > 0.0) {
            return Err(Error::invalid("gaussian", "sigma must be positive"));
        }
        let values = grid
            .points()
            .into_iter()
            .map(|x| C64::from_polar((-(x - center).powi(2) / (2.0 * sigma * sigma)).exp(), momentum * x))
            .collect();
        Self::normalized(grid, values)
    }

    pub fn grid(&self) -> &SpatialGrid {
        &self.grid
    }

    pub fn values(&self) -> &[C64] {
        &self.values
    }

    /// Probability density `|ψ|²` at the two boundary points (max of both).
    pub fn edge_density(&self) -> f64 {
        self.values[0].norm_sqr().max(self.values[self.grid.n() - 1].norm_sqr())
    }
}

/// Sampled kernel `ρ(x_j, x_k)` with `Σ ρ(x_k,x_k) dx = 1`.
#[derive(Debug, Clone, PartialEq)]
pub struct GridDensityMatrix {
    grid: SpatialGrid,
    values: DMatrix<C64>,
}

impl GridDensityMatrix {
    pub fn new(grid: SpatialGrid, values: DMatrix<C64>) -> Result<Self> {
        let n = grid.n();
        if values.nrows() != n || values.ncols() != n {
            return Err(Error::DimensionMismatch { expected: n, found: values.nrows() });
        }
        let out = Self { grid, values };
        let tol = tolerances().grid;
        let dev = out.hermiticity_deviation();
        if dev > tol {
            return Err(Error::NotHermitian { deviation: dev });
        }
        let tr = out.trace();
        if (tr - 1.0).abs() > tol {
            return Err(Error::Normalization(format!("grid density matrix trace {tr}")));
        }
        Ok(out)
    }

    pub fn from_wavefunction(psi: &GridWavefunction) -> Self {
        let n = psi.grid.n();
        let v = &psi.values;
        Self { grid: psi.grid, values: DMatrix::from_fn(n, n, |j, k| v[j] * v[k].conj()) }
    }

    /// Convex combination; weights must be nonnegative and sum to one.
    pub fn mixture(parts: &[(f64, &GridDensityMatrix)]) -> Result<Self> {
        let first = parts.first().ok_or_else(|| Error::invalid("mixture", "no components"))?;
        let grid = first.1.grid;
        let mut acc = DMatrix::zeros(grid.n(), grid.n());
        for (w, rho) in parts {
            if rho.grid != grid {
                return Err(Error::invalid("mixture", "components live on different grids"));
            }
            if *w < 0.0 {
                return Err(Error::invalid("mixture", "negative weight"));
            }
            acc += &rho.values * C64::new(*w, 0.0);
        }
        Self::new(grid, acc)
    }

    pub fn grid(&self) -> &SpatialGrid {
        &self.grid
    }

    pub fn values(&self) -> &DMatrix<C64> {
        &self.values
    }

    pub(crate) fn values_mut(&mut self) -> &mut DMatrix<C64> {
        &mut self.values
    }

    pub fn trace(&self) -> f64 {
        self.values.diagonal().iter().map(|v| v.re).sum::<f64>() * self.grid.dx()
    }

    pub fn hermiticity_deviation(&self) -> f64 {
        let n = self.grid.n();
        let mut dev: f64 = 0.0;
        for k in 0..n {
            for j in k..n {
                dev = dev.max((self.values[(j, k)] - self.values[(k, j)].conj()).norm());
            }
        }
        dev
    }

    /// `ρ(x_k, x_k)`
    pub fn position_density(&self) -> Vec<f64> {
        self.values.diagonal().iter().map(|v| v.re).collect()
    }

    /// `⟨x^power⟩`
    pub fn position_moment(&self, power: i32) -> f64 {
        let dx = self.grid.dx();
        (0..self.grid.n()).map(|k| self.values[(k, k)].re * self.grid.x(k).powi(power)).sum::<f64>() * dx
    }

    /// Eigenvalues of the discrete operator `ρ·dx`, ascending.
    pub fn operator_eigenvalues(&self) -> Vec<f64> {
        let m = (&self.values + self.values.adjoint()) * C64::new(0.5 * self.grid.dx(), 0.0);
        hermitian_eigen(m).values
    }

    /// `Tr ρ²` of the discrete operator.
    pub fn purity(&self) -> f64 {
        self.values.iter().map(|v| v.norm_sqr()).sum::<f64>() * self.grid.dx().powi(2)
    }

    /// Largest `|ρ|·dx` on the boundary rows and columns.
    pub fn edge_weight(&self) -> f64 {
        let n = self.grid.n();
        let mut m: f64 = 0.0;
        for k in 0..n {
            for v in [self.values[(0, k)], self.values[(n - 1, k)], self.values[(k, 0)], self.values[(k, n - 1)]] {
                m = m.max(v.norm());
            }
        }
        m * self.grid.dx()
    }
}

/// `W(q_k, p_j)` on the position grid times the centered momentum axis.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WignerField {
    pub grid: SpatialGrid,
    pub p_min: f64,
    pub p_max: f64,
    pub dp: f64,
    /// Row-major: `values[k * n + j] = W(q_k, p_j)`.
    pub values: Vec<f64>,
}

impl WignerField {
    pub fn n_q(&self) -> usize {
        self.grid.n()
    }

    pub fn n_p(&self) -> usize {
        self.values.len() / self.grid.n()
    }

    pub fn q(&self, k: usize) -> f64 {
        self.grid.x(k)
    }

    pub fn p(&self, j: usize) -> f64 {
        self.p_min + j as f64 * self.dp
    }

    pub fn get(&self, k: usize, j: usize) -> f64 {
        self.values[k * self.n_p() + j]
    }

    fn cell(&self) -> f64 {
        self.grid.dx() * self.dp
    }

    /// `ΣΣ W dq dp`
    pub fn normalization(&self) -> f64 {
        self.values.iter().sum::<f64>() * self.cell()
    }

    /// `Σ_p W dp` at each `q_k`.
    pub fn position_marginal(&self) -> Vec<f64> {
        let np = self.n_p();
        self.values.chunks(np).map(|row| row.iter().sum::<f64>() * self.dp).collect()
    }

    /// `2π ΣΣ W² dq dp`; equals `Tr ρ²`.
    pub fn purity(&self) -> f64 {
        2.0 * PI * self.values.iter().map(|w| w * w).sum::<f64>() * self.cell()
    }

    pub fn min_value(&self) -> f64 {
        self.values.iter().copied().fold(f64::INFINITY, f64::min)
    }

    /// Pointwise difference; both fields must share axes.
    pub fn difference(&self, other: &WignerField) -> Result<WignerField> {
        if self.grid != other.grid || self.values.len() != other.values.len() {
            return Err(Error::invalid("wigner field", "axes differ"));
        }
        let values = self.values.iter().zip(&other.values).map(|(a, b)| a - b).collect();
        Ok(WignerField { values, ..self.clone() })
    }

    /// Sup-norm distance to a closed form `f(q, p)`.
    pub fn sup_distance(&self, f: impl Fn(f64, f64) -> f64) -> f64 {
        let np = self.n_p();
        let mut m: f64 = 0.0;
        for k in 0..self.n_q() {
            for j in 0..np {
                m = m.max((self.get(k, j) - f(self.q(k), self.p(j))).abs());
            }
        }
        m
    }

    /// CSV: one `#` metadata line with the axes, a `q,p,w` header, then one
    /// row per sample in `q`-major order.
    pub fn write_csv<W: Write>(&self, mut out: W) -> Result<()> {
        let io = |e: std::io::Error| Error::invalid("csv output", e.to_string());
        writeln!(
            out,
            "# n_q={} q_min={:e} dq={:e} n_p={} p_min={:e} dp={:e}",
            self.n_q(),
            self.grid.x_min(),
            self.grid.dx(),
            self.n_p(),
            self.p_min,
            self.dp
        )
        .map_err(io)?;
        let mut w = csv::Writer::from_writer(out);
        let cerr = |e: csv::Error| Error::invalid("csv output", e.to_string());
        w.write_record(["q", "p", "w"]).map_err(cerr)?;
        for k in 0..self.n_q() {
            for j in 0..self.n_p() {
                w.write_record([
                    format!("{:e}", self.q(k)),
                    format!("{:e}", self.p(j)),
                    format!("{:e}", self.get(k, j)),
                ])
                .map_err(cerr)?;
            }
        }
        w.flush().map_err(|e| Error::invalid("csv output", e.to_string()))
    }

    pub fn to_json(&self) -> WignerJson {
        WignerJson {
            n_q: self.n_q(),
            q_min: self.grid.x_min(),
            dq: self.grid.dx(),
            n_p: self.n_p(),
            p_min: self.p_min,
            dp: self.dp,
            values: self.values.clone(),
        }
    }
}

/// Compact JSON form of a [`WignerField`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct WignerJson {
    pub n_q: usize,
    pub q_min: f64,
    pub dq: f64,
    pub n_p: usize,
    pub p_min: f64,
    pub dp: f64,
    pub values: Vec<f64>,
}

/// Reusable transform for one grid size.
pub struct WignerTransformer {
    n: usize,
    fft: Arc<dyn Fft<f64>>,
}

impl WignerTransformer {
    pub fn new(n: usize) -> Self {
        Self { n, fft: FftPlanner::new().plan_fft_forward(n) }
    }

    pub fn transform(&self, rho: &GridDensityMatrix) -> Result<WignerField> {
        let grid = *rho.grid();
        let n = grid.n();
        if n != self.n {
            return Err(Error::DimensionMismatch { expected: self.n, found: n });
        }
        let tol = tolerances();
        let dev = rho.hermiticity_deviation();
        if dev > tol.grid {
            return Err(Error::NotHermitian { deviation: dev });
        }
        let dx = grid.dx();
        let dp = grid.wigner_dp();
        let half = (n / 2) as i64;
        let m = rho.values();

        let rows: Vec<(Vec<f64>, f64)> = (0..n)
            .into_par_iter()
            .map(|k| {
                let mut buf = vec![C64::new(0.0, 0.0); n];
                let ki = k as i64;
                for s in -half..half {
                    let (a, b) = (ki + s, ki - s);
                    if a >= 0 && b >= 0 && (a as usize) < n && (b as usize) < n {
                        buf[s.rem_euclid(n as i64) as usize] = m[(a as usize, b as usize)];
                    }
                }
                let mut scratch = vec![C64::new(0.0, 0.0); self.fft.get_inplace_scratch_len()];
                self.fft.process_with_scratch(&mut buf, &mut scratch);
                let scale = dx / PI;
                let mut residue: f64 = 0.0;
                let row = (0..n)
                    .map(|j| {
                        let v = buf[(j + n / 2) % n] * scale;
                        residue = residue.max(v.im.abs());
                        v.re
                    })
                    .collect();
                (row, residue)
            })
            .collect();

        let residue = rows.iter().map(|r| r.1).fold(0.0, f64::max);
        if residue > tol.grid {
            return Err(Error::NotHermitian { deviation: residue });
        }
        let values: Vec<f64> = rows.into_iter().flat_map(|r| r.0).collect();
        let p_min = -(n as f64 / 2.0) * dp;
        let field = WignerField { grid, p_min, p_max: p_min + (n - 1) as f64 * dp, dp, values };

        let norm = field.normalization();
        if (norm - 1.0).abs() > tol.wigner {
            return Err(Error::Normalization(format!("Wigner normalization {norm}")));
        }
        let density = rho.position_density();
        let worst = field
            .position_marginal()
            .iter()
            .zip(&density)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max);
        if worst > tol.wigner {
            return Err(Error::Normalization(format!("Wigner marginal deviates by {worst:.3e}")));
        }
        Ok(field)
    }
}

pub fn wigner_transform(rho: &GridDensityMatrix) -> Result<WignerField> {
    WignerTransformer::new(rho.grid().n()).transform(rho)
}

/// Two-Gaussian superposition `e^{−x²/2σ²} + e^{−(x−L)²/2σ²}`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CatStateParams {
    sigma: f64,
    separation: f64,
}

impl CatStateParams {
    pub fn new(sigma: f64, separation: f64) -> Result<Self> {
        if !(sigma > 0.0) || !sigma.is_finite() {
            return Err(Error::invalid("cat state", format!("sigma = {sigma} must be positive")));
        }
        if !(separation >= 0.0) || !separation.is_finite() {
            return Err(Error::invalid("cat state", format!("L = {separation} must be nonnegative")));
        }
        Ok(Self { sigma, separation })
    }

    pub fn sigma(&self) -> f64 {
        self.sigma
    }

    pub fn separation(&self) -> f64 {
        self.separation
    }

    /// Squared normalization of the two-Gaussian sum, `1/(2σ√π(1 + e^{−L²/4σ²}))`.
    pub fn norm_squared(&self) -> f64 {
        let (s, l) = (self.sigma, self.separation);
        1.0 / (2.0 * s * PI.sqrt() * (1.0 + (-l * l / (4.0 * s * s)).exp()))
    }

    fn prefactor(&self) -> f64 {
        // N² σ/√π
        1.0 / (2.0 * PI * (1.0 + (-self.separation.powi(2) / (4.0 * self.sigma.powi(2))).exp()))
    }

    /// Weight of the two diagonal humps in the normalized cat, `1/(1 + e^{−L²/4σ²})`.
    pub fn hump_weight(&self) -> f64 {
        2.0 * PI * self.prefactor()
    }
}

/// Cat state sampled on `grid`, renormalized on-grid. The grid must span
/// `[−4σ, L+4σ]` and the density must fall below `1e−12` at both edges.
pub fn cat_state_wavefunction(params: CatStateParams, grid: SpatialGrid) -> Result<GridWavefunction> {
    let (s, l) = (params.sigma, params.separation);
    if grid.x_min() > -4.0 * s || grid.x_max() < l + 4.0 * s {
        return Err(Error::GridTooSmall(format!(
            "grid [{}, {}] does not span [{}, {}]",
            grid.x_min(),
            grid.x_max(),
            -4.0 * s,
            l + 4.0 * s
        )));
    }
    let values = grid
        .points()
        .into_iter()
        .map(|x| {
            let g0 = (-x * x / (2.0 * s * s)).exp();
            let gl = (-(x - l).powi(2) / (2.0 * s * s)).exp();
            C64::new(g0 + gl, 0.0)
        })
        .collect();
    let psi = GridWavefunction::normalized(grid, values)?;
    let edge = psi.edge_density();
    if edge > 1e-12 {
        return Err(Error::GridTooSmall(format!("density {edge:.3e} at the grid edge exceeds 1e-12")));
    }
    Ok(psi)
}

/// Each of the two displaced Gaussians alone, normalized on-grid, mixed 50/50.
pub fn cat_incoherent_mixture(params: CatStateParams, grid: SpatialGrid) -> Result<GridDensityMatrix> {
    cat_state_wavefunction(params, grid)?;
    let a = GridWavefunction::gaussian(grid, 0.0, params.sigma, 0.0)?;
    let b = GridWavefunction::gaussian(grid, params.separation, params.sigma, 0.0)?;
    GridDensityMatrix::mixture(&[
        (0.5, &GridDensityMatrix::from_wavefunction(&a)),
        (0.5, &GridDensityMatrix::from_wavefunction(&b)),
    ])
}

/// Closed-form Wigner function of the normalized cat state:
///
/// ```text
/// W = e^{−σ²p²} [e^{−q²/σ²} + e^{−(q−L)²/σ²} + 2 e^{−(q−L/2)²/σ²} cos(Lp)]
///     / (2π (1 + e^{−L²/4σ²}))
/// ```
pub fn cat_wigner_oracle(params: CatStateParams, q: f64, p: f64) -> f64 {
    cat_hump_oracle(params, q, p) + cat_interference_oracle(params, q, p)
}

/// The two classical humps of [`cat_wigner_oracle`].
pub fn cat_hump_oracle(params: CatStateParams, q: f64, p: f64) -> f64 {
    let (s, l) = (params.sigma, params.separation);
    let envelope = (-s * s * p * p).exp();
    params.prefactor() * envelope * ((-q * q / (s * s)).exp() + (-(q - l).powi(2) / (s * s)).exp())
}

/// The oscillating cross term of [`cat_wigner_oracle`].
pub fn cat_interference_oracle(params: CatStateParams, q: f64, p: f64) -> f64 {
    let (s, l) = (params.sigma, params.separation);
    let envelope = (-s * s * p * p).exp();
    params.prefactor() * envelope * 2.0 * (-(q - l / 2.0).powi(2) / (s * s)).exp() * (l * p).cos()
}

/// Total negative mass `ΣΣ (|W| − W)/2 dq dp`.
pub fn negativity_volume(w: &WignerField) -> f64 {
    w.values.iter().map(|&v| if v < 0.0 { -v } else { 0.0 }).sum::<f64>() * w.cell()
}

fn window_max(w: &WignerField, params: CatStateParams, residual: impl Fn(usize, usize) -> f64) -> f64 {
    let (s, l) = (params.sigma, params.separation);
    let (lo, hi) = (l / 2.0 - s, l / 2.0 + s);
    let mut m: f64 = 0.0;
    for k in 0..w.n_q() {
        let q = w.q(k);
        if q < lo || q > hi {
            continue;
        }
        for j in 0..w.n_p() {
            m = m.max(residual(k, j).abs());
        }
    }
    m
}

/// Largest `|W − humps|` over `q ∈ [L/2 − σ, L/2 + σ]`, with the cat's
/// closed-form classical humps as the background.
pub fn interference_peak(w: &WignerField, params: CatStateParams) -> f64 {
    window_max(w, params, |k, j| w.get(k, j) - cat_hump_oracle(params, w.q(k), w.p(j)))
}

/// As [`interference_peak`], with an explicit background field in place of the
/// closed-form humps (e.g. a co-evolved incoherent mixture).
pub fn interference_peak_against(w: &WignerField, background: &WignerField, params: CatStateParams) -> Result<f64> {
    let diff = w.difference(background)?;
    Ok(window_max(&diff, params, |k, j| diff.get(k, j)))
}

/// Largest magnitude of the closed-form interference term over the same
/// window, evaluated on the field's axes.
pub fn oracle_interference_peak(w: &WignerField, params: CatStateParams) -> f64 {
    window_max(w, params, |k, j| cat_interference_oracle(params, w.q(k), w.p(j)))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn box_grid(n: usize) -> SpatialGrid {
        SpatialGrid::new(n, -8.0, 14.0).unwrap()
    }

    #[test]
    fn grid_validation() {
        assert!(SpatialGrid::new(8, 0.0, 1.0).is_err());
        assert!(SpatialGrid::new(100, 0.0, 1.0).is_err());
        assert!(SpatialGrid::new(64, 1.0, 1.0).is_err());
        let g = box_grid(256);
        assert!((g.dx() - 22.0 / 256.0).abs() < 1e-15);
        assert!((g.wigner_dp() - PI / 22.0).abs() < 1e-15);
    }

    #[test]
    fn ground_state_wigner_is_positive_gaussian() {
        let g = box_grid(256);
        let psi = GridWavefunction::gaussian(g, 0.0, 1.0, 0.0).unwrap();
        let w = wigner_transform(&GridDensityMatrix::from_wavefunction(&psi)).unwrap();
        let err = w.sup_distance(|q, p| (-q * q - p * p).exp() / PI);
        assert!(err < 1e-6, "sup error {err}");
        assert!(w.min_value() > -1e-12);
        assert!(negativity_volume(&w) <= 1e-8);
    }

    #[test]
    fn maximally_mixed_grid_state_is_flat() {
        let g = SpatialGrid::new(32, -4.0, 4.0).unwrap();
        let diag = C64::new(1.0 / (g.n() as f64 * g.dx()), 0.0);
        let rho = GridDensityMatrix::new(g, DMatrix::from_diagonal_element(32, 32, diag)).unwrap();
        let w = wigner_transform(&rho).unwrap();
        let expected = 1.0 / (PI * g.n() as f64);
        assert!(w.values.iter().all(|v| (v - expected).abs() < 1e-14));
    }

    #[test]
    fn cat_wavefunction_examples() {
        let g = box_grid(256);
        let single = cat_state_wavefunction(CatStateParams::new(1.0, 0.0).unwrap(), g).unwrap();
        let gauss = GridWavefunction::gaussian(g, 0.0, 1.0, 0.0).unwrap();
        let diff = single.values().iter().zip(gauss.values()).map(|(a, b)| (a - b).norm()).fold(0.0, f64::max);
        assert!(diff < 1e-14);
        for l in [0.0, 2.0, 5.5] {
            let psi = cat_state_wavefunction(CatStateParams::new(1.0, l).unwrap(), g).unwrap();
            let norm: f64 = psi.values().iter().map(|v| v.norm_sqr()).sum::<f64>() * g.dx();
            assert!((norm - 1.0).abs() < 1e-10);
        }
        // overlap of the two normalized humps at L = 8σ is e^{−L²/4σ²}
        let g2 = SpatialGrid::new(512, -10.0, 18.0).unwrap();
        let a = GridWavefunction::gaussian(g2, 0.0, 1.0, 0.0).unwrap();
        let b = GridWavefunction::gaussian(g2, 8.0, 1.0, 0.0).unwrap();
        let overlap: f64 = a.values().iter().zip(b.values()).map(|(x, y)| (x.conj() * y).re).sum::<f64>() * g2.dx();
        assert!((overlap - (-16.0f64).exp()).abs() < 1e-12);
        assert!((overlap - 1.125e-7).abs() < 1e-9);
    }

    #[test]
    fn cat_wavefunction_rejects_small_grid() {
        let g = SpatialGrid::new(128, -3.0, 10.0).unwrap();
        let err = cat_state_wavefunction(CatStateParams::new(1.0, 6.0).unwrap(), g).unwrap_err();
        assert!(matches!(err, Error::GridTooSmall(_)));
        // spans [−4σ, L+4σ] but does not decay below 1e-12 at the edge
        let g = SpatialGrid::new(128, -4.5, 10.5).unwrap();
        assert!(matches!(
            cat_state_wavefunction(CatStateParams::new(1.0, 6.0).unwrap(), g),
            Err(Error::GridTooSmall(_))
        ));
    }

    #[test]
    fn oracle_limits_and_oscillation() {
        let single = CatStateParams::new(1.0, 0.0).unwrap();
        for (q, p) in [(0.0f64, 0.0f64), (0.7, -1.3), (-2.0, 0.4)] {
            let expected = (-q * q - p * p).exp() / PI;
            assert!((cat_wigner_oracle(single, q, p) - expected).abs() < 1e-15);
        }
        let cat = CatStateParams::new(1.0, 6.0).unwrap();
        let period = 2.0 * PI / 6.0;
        for p in [0.1f64, 0.5, 1.2] {
            let a = cat_interference_oracle(cat, 3.0, p) / (-p * p).exp();
            let b = cat_interference_oracle(cat, 3.0, p + period) / (-(p + period).powi(2)).exp();
            assert!((a - b).abs() < 1e-12);
        }
        assert!(cat_wigner_oracle(cat, 3.0, PI / 6.0) < 0.0);
    }

    #[test]
    fn mixture_has_no_interference() {
        let g = box_grid(256);
        let cat = CatStateParams::new(1.0, 6.0).unwrap();
        let mix = cat_incoherent_mixture(cat, g).unwrap();
        let w = wigner_transform(&mix).unwrap();
        assert!(w.min_value() >= -1e-6);
        assert!(negativity_volume(&w) <= 1e-6);
        assert!(interference_peak(&w, cat) <= 1e-6);
    }

    #[test]
    fn fresh_cat_peak_matches_oracle_amplitude() {
        let g = box_grid(256);
        let cat = CatStateParams::new(1.0, 6.0).unwrap();
        let psi = cat_state_wavefunction(cat, g).unwrap();
        let w = wigner_transform(&GridDensityMatrix::from_wavefunction(&psi)).unwrap();
        let peak = interference_peak(&w, cat);
        let oracle = oracle_interference_peak(&w, cat);
        assert!((peak - oracle).abs() <= 0.05 * oracle);
        assert!(negativity_volume(&w) > 0.0);
    }

    #[test]
    fn csv_and_json_forms() {
        let g = SpatialGrid::new(16, -4.0, 4.0).unwrap();
        let psi = GridWavefunction::gaussian(g, 0.0, 0.5, 0.0).unwrap();
        let w = wigner_transform(&GridDensityMatrix::from_wavefunction(&psi)).unwrap();
        let mut buf = Vec::new();
        w.write_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let lines: Vec<&str> = text.lines().collect();
        assert!(lines[0].starts_with("# n_q=16 "));
        assert_eq!(lines[1], "q,p,w");
        assert_eq!(lines.len(), 2 + 16 * 16);
        let j = serde_json::to_value(w.to_json()).unwrap();
        assert_eq!(j["n_p"], 16);
        assert_eq!(j["values"].as_array().unwrap().len(), 256);
    }
}
