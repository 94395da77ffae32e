//! Quantum Brownian motion in the ohmic, high-temperature Markov limit.
//!
//! The grid density matrix `ρ(x, x′)` obeys
//!
//! ```text
//! ∂ρ/∂t = −i[H, ρ] − iγ[x, {p, ρ}] − 2MγT[x, [x, ρ]]
//! ```
//!
//! which in position representation reads
//! `−i[H,ρ] − γ(x−x′)(∂x − ∂x′)ρ − 2MγT(x−x′)²ρ`. One step is a Strang
//! splitting: half a kinetic step (exact, in Fourier space on both indices),
//! half a potential-plus-decoherence step (exact pointwise phases and
//! damping factors), a full dissipation step (centered differences, RK2),
//! then the two halves again in reverse order.

use std::io::Write;
use std::sync::Arc;

use nalgebra::DMatrix;
use rand::Rng as _;
use rayon::prelude::*;
use rustfft::{Fft, FftPlanner};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::qstate::C64;
use crate::rng::Rng;
use crate::tolerance::tolerances;
use crate::wigner::{
    cat_incoherent_mixture, cat_state_wavefunction, interference_peak_against, CatStateParams, GridDensityMatrix,
    SpatialGrid, WignerTransformer,
};

/// Lower bound on the smallest eigenvalue of `ρ·dx` during evolution.
pub const POSITIVITY_BOUND: f64 = -1e-4;

/// Default factor separating consecutive timescales in [`Timescales`].
pub const DEFAULT_SEPARATION: f64 = 10.0;

/// `I(ω) = γ ω^s e^{−ω²/Λ²}`
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SpectralDensityParams {
    pub gamma: f64,
    pub s: f64,
    #[serde(rename = "Lambda")]
    pub lambda: f64,
}

impl SpectralDensityParams {
    pub fn new(gamma: f64, s: f64, lambda: f64) -> Result<Self> {
        let p = Self { gamma, s, lambda };
        p.validate()?;
        Ok(p)
    }

    pub fn ohmic(gamma: f64, lambda: f64) -> Result<Self> {
        Self::new(gamma, 1.0, lambda)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.gamma >= 0.0) || !self.gamma.is_finite() {
            return Err(Error::invalid("gamma", format!("{} must be finite and nonnegative", self.gamma)));
        }
        if !(self.lambda > 0.0) || !self.lambda.is_finite() {
            return Err(Error::invalid("Lambda", format!("{} must be positive", self.lambda)));
        }
        if !(self.s > 0.0) || !self.s.is_finite() {
            return Err(Error::invalid("s", format!("{} must be positive", self.s)));
        }
        Ok(())
    }
}

/// At most quadratic potentials.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum Potential {
    Free,
    /// `½ M ω² x²`
    Harmonic { omega: f64 },
    /// `c0 + c1·x + c2·x²`
    Quadratic { c0: f64, c1: f64, c2: f64 },
}

impl Potential {
    pub fn value(&self, mass: f64, x: f64) -> f64 {
        match *self {
            Potential::Free => 0.0,
            Potential::Harmonic { omega } => 0.5 * mass * omega * omega * x * x,
            Potential::Quadratic { c0, c1, c2 } => c0 + c1 * x + c2 * x * x,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "QbmParamsJson", into = "QbmParamsJson")]
pub struct QbmParams {
    pub mass: f64,
    pub potential: Potential,
    pub spectral: SpectralDensityParams,
    pub temperature: f64,
}

/// Flat JSON form: `{"M", "gamma", "T", "Lambda", "s", "potential"}`.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct QbmParamsJson {
    #[serde(rename = "M")]
    mass: f64,
    gamma: f64,
    #[serde(rename = "T")]
    temperature: f64,
    #[serde(rename = "Lambda")]
    lambda: f64,
    #[serde(default = "one")]
    s: f64,
    #[serde(default = "free")]
    potential: Potential,
}

fn one() -> f64 {
    1.0
}

fn free() -> Potential {
    Potential::Free
}

impl TryFrom<QbmParamsJson> for QbmParams {
    type Error = Error;

    fn try_from(j: QbmParamsJson) -> Result<Self> {
        QbmParams::new(j.mass, j.potential, SpectralDensityParams::new(j.gamma, j.s, j.lambda)?, j.temperature)
    }
}

impl From<QbmParams> for QbmParamsJson {
    fn from(p: QbmParams) -> Self {
        Self {
            mass: p.mass,
            gamma: p.spectral.gamma,
            temperature: p.temperature,
            lambda: p.spectral.lambda,
            s: p.spectral.s,
            potential: p.potential,
        }
    }
}

impl QbmParams {
    pub fn new(mass: f64, potential: Potential, spectral: SpectralDensityParams, temperature: f64) -> Result<Self> {
        let p = Self { mass, potential, spectral, temperature };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.mass > 0.0) || !self.mass.is_finite() {
            return Err(Error::invalid("M", format!("{} must be positive", self.mass)));
        }
        if !(self.temperature >= 0.0) || !self.temperature.is_finite() {
            return Err(Error::invalid("T", format!("{} must be nonnegative", self.temperature)));
        }
        self.spectral.validate()?;
        match self.potential {
            Potential::Harmonic { omega } if !omega.is_finite() => Err(Error::invalid("potential", "omega must be finite")),
            Potential::Quadratic { c0, c1, c2 } if ![c0, c1, c2].iter().all(|c| c.is_finite()) => {
                Err(Error::invalid("potential", "coefficients must be finite"))
            }
            _ => Ok(()),
        }
    }

    /// `2MγT`, the coefficient of `(x−x′)²` in the decoherence term.
    pub fn diffusion_coefficient(&self) -> f64 {
        2.0 * self.mass * self.spectral.gamma * self.temperature
    }

    /// `2MγTL²`
    pub fn predicted_decoherence_rate(&self, separation: f64) -> f64 {
        self.diffusion_coefficient() * separation * separation
    }
}

pub fn spectral_density(omega: f64, params: &SpectralDensityParams) -> Result<f64> {
    if !(omega >= 0.0) {
        return Err(Error::invalid("omega", format!("{omega} must be nonnegative")));
    }
    Ok(params.gamma * omega.powf(params.s) * (-(omega / params.lambda).powi(2)).exp())
}

/// Bath of independent oscillators `(c_α, m_α, ω_α)`.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct DiscreteBath {
    pub couplings: Vec<f64>,
    pub masses: Vec<f64>,
    pub frequencies: Vec<f64>,
}

impl DiscreteBath {
    /// Unit-mass ohmic bath of `count` oscillators whose binned weights
    /// approximate `γω e^{−ω²/Λ²}`. Frequencies are drawn by stratified
    /// inverse-CDF sampling of the normalized density.
    pub fn sample_ohmic(params: &SpectralDensityParams, count: usize, rng: &mut Rng) -> Result<Self> {
        params.validate()?;
        if params.s != 1.0 {
            return Err(Error::Unsupported("bath sampling implemented for s = 1 only".into()));
        }
        let total = 0.5 * params.gamma * params.lambda * params.lambda;
        let weight = total / count.max(1) as f64;
        let frequencies: Vec<f64> = (0..count)
            .map(|k| {
                let u = (k as f64 + rng.random::<f64>()) / count as f64;
                params.lambda * (-(1.0 - u).ln()).sqrt()
            })
            .collect();
        let couplings = frequencies.iter().map(|w| (2.0 * weight).sqrt() * w).collect();
        Ok(Self { couplings, masses: vec![1.0; count], frequencies })
    }
}

/// Binned weights `Σ_{α in bin} c_α²/(2 m_α ω_α²)` for the bins
/// `[edges[i], edges[i+1])`.
pub fn discrete_bath_spectral_density(
    couplings: &[f64],
    masses: &[f64],
    frequencies: &[f64],
    edges: &[f64],
) -> Result<Vec<f64>> {
    if masses.len() != couplings.len() {
        return Err(Error::DimensionMismatch { expected: couplings.len(), found: masses.len() });
    }
    if frequencies.len() != couplings.len() {
        return Err(Error::DimensionMismatch { expected: couplings.len(), found: frequencies.len() });
    }
    if edges.len() < 2 || edges.windows(2).any(|w| !(w[1] > w[0])) {
        return Err(Error::invalid("bins", "need at least two strictly increasing edges"));
    }
    if masses.iter().chain(frequencies).any(|v| !(*v > 0.0)) {
        return Err(Error::invalid("bath", "masses and frequencies must be positive"));
    }
    let mut hist = vec![0.0; edges.len() - 1];
    for ((c, m), w) in couplings.iter().zip(masses).zip(frequencies) {
        let bin = edges.partition_point(|e| e <= w);
        if bin == 0 || bin == edges.len() {
            continue;
        }
        hist[bin - 1] += c * c / (2.0 * m * w * w);
    }
    Ok(hist)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Timescales {
    /// `Λ⁻¹`
    pub cutoff_time: f64,
    /// `(MγT)^{−1/2}`; undefined for `γT = 0`.
    pub classicalisation_time: Option<f64>,
    /// `γ⁻¹`; undefined for `γ = 0`.
    pub relaxation_time: Option<f64>,
    /// `(MγTL²)⁻¹`; undefined for `γT = 0` or `L = 0`.
    pub decoherence_time: Option<f64>,
    pub separation_factor: f64,
    /// `Λ⁻¹ ≪ t_cl ≪ γ⁻¹`, each by at least `separation_factor`.
    pub ordered: bool,
}

pub fn timescales(params: &QbmParams, separation: f64) -> Timescales {
    timescales_with(params, separation, DEFAULT_SEPARATION)
}

pub fn timescales_with(params: &QbmParams, separation: f64, factor: f64) -> Timescales {
    let (m, g, t) = (params.mass, params.spectral.gamma, params.temperature);
    let mgt = m * g * t;
    let positive = |v: f64| (v.is_finite() && v > 0.0).then_some(v);
    let cutoff_time = 1.0 / params.spectral.lambda;
    let classicalisation_time = positive(mgt.powf(-0.5));
    let relaxation_time = positive(1.0 / g);
    let decoherence_time = positive(1.0 / (mgt * separation * separation));
    let ordered = match (classicalisation_time, relaxation_time) {
        (Some(tcl), Some(tr)) => cutoff_time * factor <= tcl && tcl * factor <= tr,
        _ => false,
    };
    Timescales { cutoff_time, classicalisation_time, relaxation_time, decoherence_time, separation_factor: factor, ordered }
}

/// `0.1·min(M dx², 1/(2MγT L_box²))`
pub fn stability_bound(grid: &SpatialGrid, params: &QbmParams) -> f64 {
    let kinetic = params.mass * grid.dx().powi(2);
    let a = params.diffusion_coefficient();
    let decoherence = if a > 0.0 { 1.0 / (a * grid.length().powi(2)) } else { f64::INFINITY };
    0.1 * kinetic.min(decoherence)
}

/// Which terms of the generator a [`KramersPropagator`] applies.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Terms {
    pub kinetic: bool,
    pub potential: bool,
    pub dissipation: bool,
    pub decoherence: bool,
}

impl Default for Terms {
    fn default() -> Self {
        Self { kinetic: true, potential: true, dissipation: true, decoherence: true }
    }
}

pub struct KramersPropagator {
    grid: SpatialGrid,
    params: QbmParams,
    dt: f64,
    terms: Terms,
    fft: Arc<dyn Fft<f64>>,
    ifft: Arc<dyn Fft<f64>>,
    /// `e^{−ik²(dt/2)/2M}/n` in FFT order.
    kinetic_phase: Vec<C64>,
    /// Half-step potential phase times half-step decoherence factor.
    pointwise: DMatrix<C64>,
}

impl KramersPropagator {
    pub fn new(grid: SpatialGrid, params: QbmParams, dt: f64) -> Result<Self> {
        Self::with_terms(grid, params, dt, Terms::default())
    }

    /// Propagator restricted to a subset of terms.
    pub fn with_terms(grid: SpatialGrid, params: QbmParams, dt: f64, terms: Terms) -> Result<Self> {
        params.validate()?;
        if params.spectral.s != 1.0 {
            return Err(Error::Unsupported(format!(
                "Kramers evolution requires an ohmic bath (s = 1), got s = {}",
                params.spectral.s
            )));
        }
        if !(dt > 0.0) || !dt.is_finite() {
            return Err(Error::invalid("dt", format!("{dt} must be positive")));
        }
        let bound = stability_bound(&grid, &params);
        if dt > bound {
            return Err(Error::StabilityBound { dt, bound });
        }
        let n = grid.n();
        let mut planner = FftPlanner::new();
        let fft = planner.plan_fft_forward(n);
        let ifft = planner.plan_fft_inverse(n);
        let half = 0.5 * dt;
        let kinetic_phase = grid
            .fft_wavenumbers()
            .into_iter()
            .map(|k| C64::from_polar(1.0 / n as f64, -k * k * half / (2.0 * params.mass)))
            .collect();
        let a = params.diffusion_coefficient();
        let v: Vec<f64> = grid.points().iter().map(|&x| params.potential.value(params.mass, x)).collect();
        let pointwise = DMatrix::from_fn(n, n, |j, k| {
            let phase = if terms.potential { -(v[j] - v[k]) * half } else { 0.0 };
            let damp = if terms.decoherence { -a * (grid.x(j) - grid.x(k)).powi(2) * half } else { 0.0 };
            C64::from_polar(damp.exp(), phase)
        });
        Ok(Self { grid, params, dt, terms, fft, ifft, kinetic_phase, pointwise })
    }

    pub fn grid(&self) -> &SpatialGrid {
        &self.grid
    }

    pub fn params(&self) -> &QbmParams {
        &self.params
    }

    pub fn dt(&self) -> f64 {
        self.dt
    }

    /// `U ρ U†` with `U` the half-step free propagator.
    fn kinetic_half(&self, rho: &mut DMatrix<C64>) {
        self.apply_to_columns(rho);
        rho.adjoint_mut();
        self.apply_to_columns(rho);
        rho.adjoint_mut();
    }

    fn apply_to_columns(&self, m: &mut DMatrix<C64>) {
        let n = self.grid.n();
        m.as_mut_slice().par_chunks_mut(n).for_each(|col| {
            self.fft.process(col);
            col.iter_mut().zip(&self.kinetic_phase).for_each(|(c, p)| *c *= p);
            self.ifft.process(col);
        });
    }

    /// `−γ (x−x′) [(∂x − ∂x′)ρ]` with centered differences.
    fn dissipation_rate(&self, rho: &DMatrix<C64>) -> DMatrix<C64> {
        let n = self.grid.n();
        let dx = self.grid.dx();
        let gamma = self.params.spectral.gamma;
        let along_rows = derivative_columns(rho, dx);
        let along_cols = derivative_columns(&rho.transpose(), dx).transpose();
        let xs = self.grid.points();
        DMatrix::from_fn(n, n, |j, k| (along_rows[(j, k)] - along_cols[(j, k)]) * (-gamma * (xs[j] - xs[k])))
    }

    fn dissipate(&self, rho: &mut DMatrix<C64>) {
        let h = C64::new(self.dt, 0.0);
        let k1 = self.dissipation_rate(rho);
        let mid = &*rho + &k1 * (h * 0.5);
        let k2 = self.dissipation_rate(&mid);
        *rho += k2 * h;
    }

    /// One Strang step on the raw kernel.
    pub fn step_values(&self, rho: &mut DMatrix<C64>) {
        let t = self.terms;
        if t.kinetic {
            self.kinetic_half(rho);
        }
        if t.potential || t.decoherence {
            rho.component_mul_assign(&self.pointwise);
        }
        if t.dissipation && self.params.spectral.gamma > 0.0 {
            self.dissipate(rho);
        }
        if t.potential || t.decoherence {
            rho.component_mul_assign(&self.pointwise);
        }
        if t.kinetic {
            self.kinetic_half(rho);
        }
    }

    /// Advance `steps` steps, checking grid support after each.
    pub fn evolve(&self, rho: &GridDensityMatrix, steps: usize) -> Result<GridDensityMatrix> {
        if *rho.grid() != self.grid {
            return Err(Error::invalid("grid density matrix", "grid differs from the propagator's"));
        }
        let mut out = rho.clone();
        self.advance(&mut out, steps, 0)?;
        Ok(out)
    }

    fn advance(&self, rho: &mut GridDensityMatrix, steps: usize, offset: usize) -> Result<()> {
        let limit = tolerances().grid;
        for s in 0..steps {
            self.step_values(rho.values_mut());
            let weight = rho.edge_weight();
            if !(weight <= limit) {
                return Err(Error::GridSupport { weight, step: offset + s + 1 });
            }
        }
        Ok(())
    }
}

/// Centered derivative of every column, one-sided at the ends.
fn derivative_columns(m: &DMatrix<C64>, dx: f64) -> DMatrix<C64> {
    let n = m.nrows();
    let mut out = DMatrix::zeros(n, m.ncols());
    let (c, e) = (0.5 / dx, 1.0 / dx);
    out.as_mut_slice().par_chunks_mut(n).zip(m.as_slice().par_chunks(n)).for_each(|(d, col)| {
        d[0] = (col[1] - col[0]) * e;
        for j in 1..n - 1 {
            d[j] = (col[j + 1] - col[j - 1]) * c;
        }
        d[n - 1] = (col[n - 1] - col[n - 2]) * e;
    });
    out
}

fn check_positivity(rho: &GridDensityMatrix) -> Result<f64> {
    let min = rho.operator_eigenvalues()[0];
    if min < POSITIVITY_BOUND {
        return Err(Error::Positivity { min_eigenvalue: min, bound: POSITIVITY_BOUND });
    }
    Ok(min)
}

/// Evolve `steps` steps of size `dt`, then apply the positivity watch.
pub fn kramers_evolve(rho: &GridDensityMatrix, params: &QbmParams, dt: f64, steps: usize) -> Result<GridDensityMatrix> {
    let prop = KramersPropagator::new(*rho.grid(), *params, dt)?;
    let out = prop.evolve(rho, steps)?;
    check_positivity(&out)?;
    Ok(out)
}

/// `⟨p^power⟩` from the momentum distribution of the kernel.
pub fn momentum_moment(rho: &GridDensityMatrix, power: i32) -> f64 {
    let n = rho.grid().n();
    let fft = FftPlanner::new().plan_fft_forward(n);
    let mut m = rho.values().clone();
    m.as_mut_slice().chunks_mut(n).for_each(|c| fft.process(c));
    m.adjoint_mut();
    m.as_mut_slice().chunks_mut(n).for_each(|c| fft.process(c));
    let weights: Vec<f64> = m.diagonal().iter().map(|v| v.re).collect();
    let total: f64 = weights.iter().sum();
    rho.grid().fft_wavenumbers().iter().zip(&weights).map(|(k, w)| k.powi(power) * w).sum::<f64>() / total
}

/// Least-squares slope of `ln y` against `t`, negated; `None` with fewer
/// than two usable points.
pub fn fit_exponential_rate(points: &[(f64, f64)]) -> Option<f64> {
    let pts: Vec<(f64, f64)> = points.iter().filter(|(_, y)| *y > 0.0).map(|&(t, y)| (t, y.ln())).collect();
    if pts.len() < 2 {
        return None;
    }
    let n = pts.len() as f64;
    let tm = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let ym = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxx: f64 = pts.iter().map(|p| (p.0 - tm).powi(2)).sum();
    let sxy: f64 = pts.iter().map(|p| (p.0 - tm) * (p.1 - ym)).sum();
    (sxx > 0.0).then(|| -sxy / sxx)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SeriesPoint {
    pub t: f64,
    pub interference_peak: f64,
    pub trace_error: f64,
    pub min_eigenvalue: f64,
    pub fitted_rate_so_far: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DecoherenceSeries {
    pub points: Vec<SeriesPoint>,
    pub fitted_rate: Option<f64>,
    pub predicted_rate: f64,
    /// `[t_lo, t_hi]`: samples with `t > 10Λ⁻¹` and `t ≤ 0.3·t_dec`.
    pub fit_window: [f64; 2],
    pub timescales: Timescales,
}

impl DecoherenceSeries {
    /// `|fitted − predicted| / predicted`
    pub fn relative_error(&self) -> Option<f64> {
        self.fitted_rate.map(|r| (r - self.predicted_rate).abs() / self.predicted_rate)
    }

    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        let cerr = |e: csv::Error| Error::invalid("csv output", e.to_string());
        w.write_record(["t", "interference_peak", "trace_error", "min_eigenvalue", "fitted_rate_so_far"]).map_err(cerr)?;
        for p in &self.points {
            let fitted = p.fitted_rate_so_far.map(|r| format!("{r:e}")).unwrap_or_default();
            w.write_record([
                format!("{:e}", p.t),
                format!("{:e}", p.interference_peak),
                format!("{:e}", p.trace_error),
                format!("{:e}", p.min_eigenvalue),
                fitted,
            ])
            .map_err(cerr)?;
        }
        w.flush().map_err(|e| Error::invalid("csv output", e.to_string()))
    }
}

/// Evolves a cat state and its incoherent two-hump mixture side by side and
/// tracks the interference peak of their Wigner difference every
/// `sample_every` steps.
pub fn decoherence_experiment(
    cat: CatStateParams,
    params: &QbmParams,
    grid: SpatialGrid,
    dt: f64,
    steps: usize,
    sample_every: usize,
) -> Result<DecoherenceSeries> {
    match params.potential {
        Potential::Free | Potential::Harmonic { .. } => {}
        Potential::Quadratic { .. } => {
            return Err(Error::Unsupported("decoherence experiment needs a free or harmonic potential".into()))
        }
    }
    if sample_every == 0 {
        return Err(Error::invalid("sample_every", "must be positive"));
    }
    let prop = KramersPropagator::new(grid, *params, dt)?;
    let mut rho = GridDensityMatrix::from_wavefunction(&cat_state_wavefunction(cat, grid)?);
    let mut mix = cat_incoherent_mixture(cat, grid)?;
    let wigner = WignerTransformer::new(grid.n());
    let weight = cat.hump_weight();

    let ts = timescales(params, cat.separation());
    let lo = 10.0 * ts.cutoff_time;
    let hi = ts.decoherence_time.map_or(f64::INFINITY, |t| 0.3 * t);
    let mut points = Vec::new();
    let mut in_window = Vec::new();
    let mut step = 0;
    loop {
        let t = step as f64 * dt;
        let w_cat = wigner.transform(&rho)?;
        let mut background = wigner.transform(&mix)?;
        background.values.iter_mut().for_each(|v| *v *= weight);
        let peak = interference_peak_against(&w_cat, &background, cat)?;
        let min_eigenvalue = check_positivity(&rho)?;
        if t > lo && t <= hi {
            in_window.push((t, peak));
        }
        points.push(SeriesPoint {
            t,
            interference_peak: peak,
            trace_error: (rho.trace() - 1.0).abs(),
            min_eigenvalue,
            fitted_rate_so_far: fit_exponential_rate(&in_window),
        });
        if step >= steps {
            break;
        }
        let chunk = sample_every.min(steps - step);
        prop.advance(&mut rho, chunk, step)?;
        prop.advance(&mut mix, chunk, step)?;
        step += chunk;
    }
    Ok(DecoherenceSeries {
        fitted_rate: fit_exponential_rate(&in_window),
        predicted_rate: params.predicted_decoherence_rate(cat.separation()),
        fit_window: [lo, hi.min(steps as f64 * dt)],
        timescales: ts,
        points,
    })
}

/// Steps needed to reach `0.3·t_dec` for the given separation.
pub fn steps_for_fit_window(params: &QbmParams, separation: f64, dt: f64) -> Option<usize> {
    timescales(params, separation).decoherence_time.map(|t| (0.3 * t / dt).ceil() as usize)
}
