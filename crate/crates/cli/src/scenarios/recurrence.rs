use std::f64::consts::{FRAC_1_SQRT_2, PI};

use rand::Rng as _;
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use decolab::envmodels::{finite_bath_recurrence, FiniteBath, RecurrenceSeries, DEFAULT_LEVELS};
use decolab::{rng, DensityMatrix, StateVector, C64};

use super::Experiment;
use crate::error::CliError;
use crate::output::Output;

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DegenerateBath {
    pub modes: usize,
    pub omega: f64,
    /// `g/ω`
    pub coupling_ratio: f64,
    pub periods: usize,
    pub samples_per_period: usize,
}

impl Default for DegenerateBath {
    fn default() -> Self {
        Self { modes: 5, omega: 1.0, coupling_ratio: 0.2, periods: 3, samples_per_period: 100 }
    }
}

/// Frequencies drawn uniformly from `[omega_min, omega_max]`.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct BandBath {
    pub modes: usize,
    pub omega_min: f64,
    pub omega_max: f64,
    pub coupling_ratio: f64,
    /// Duration in periods of the band centre.
    pub periods: usize,
    pub samples_per_period: usize,
}

impl Default for BandBath {
    fn default() -> Self {
        Self { modes: 60, omega_min: 0.5, omega_max: 1.5, coupling_ratio: 0.25, periods: 10, samples_per_period: 400 }
    }
}

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Recurrence {
    pub degenerate: DegenerateBath,
    pub band: BandBath,
    /// Oscillator levels kept per mode.
    pub levels: Option<usize>,
}

fn write(out: &mut Output, name: &str, series: &RecurrenceSeries) -> Result<(), CliError> {
    out.write(name, |f| Ok(series.write_csv(f)?))
}

impl Experiment for Recurrence {
    fn violations(&self) -> Vec<String> {
        let mut v = Vec::new();
        let d = &self.degenerate;
        if d.modes == 0 || !(d.omega > 0.0) || d.periods == 0 || d.samples_per_period == 0 {
            v.push("degenerate bath needs modes, omega, periods and samples_per_period positive".into());
        }
        let b = &self.band;
        if b.modes == 0 || !(b.omega_min > 0.0) || !(b.omega_max >= b.omega_min) || b.periods == 0 || b.samples_per_period == 0 {
            v.push("band bath needs modes, periods, samples_per_period positive and 0 < omega_min ≤ omega_max".into());
        }
        if self.levels.is_some_and(|l| l < 2) {
            v.push("levels must be at least 2".into());
        }
        v
    }

    fn run(&self, out: &mut Output) -> Result<Value, CliError> {
        let levels = self.levels.unwrap_or(DEFAULT_LEVELS);
        let plus = DensityMatrix::from_pure(&StateVector::new(vec![C64::new(FRAC_1_SQRT_2, 0.0); 2])?);

        let d = &self.degenerate;
        let period = 2.0 * PI / d.omega;
        let bath = FiniteBath::degenerate(d.modes, d.omega, d.coupling_ratio * d.omega)?;
        let series = finite_bath_recurrence(&plus, &bath, d.periods as f64 * period, d.periods * d.samples_per_period + 1, levels)?;
        write(out, "recurrence_degenerate.csv", &series)?;
        let periodic_error = (1..=d.periods)
            .map(|k| (series.magnitudes[k * d.samples_per_period] - series.initial).abs())
            .fold(0.0, f64::max);
        let minimum = series.magnitudes.iter().copied().fold(f64::INFINITY, f64::min) / series.initial;

        let b = &self.band;
        let mut r = rng::stream(out.seed(), 0);
        let frequencies: Vec<f64> = (0..b.modes).map(|_| r.random_range(b.omega_min..=b.omega_max)).collect();
        let couplings = frequencies.iter().map(|w| b.coupling_ratio * w).collect();
        let band = FiniteBath::new(frequencies, couplings)?;
        let centre = 2.0 * PI / (0.5 * (b.omega_min + b.omega_max));
        let spread = finite_bath_recurrence(&plus, &band, b.periods as f64 * centre, b.periods * b.samples_per_period + 1, levels)?;
        write(out, "recurrence_band.csv", &spread)?;

        Ok(json!({
            "degenerate": {
                "period": period,
                "max_periodicity_error": periodic_error,
                "min_relative_coherence": minimum,
                "max_top_population": series.max_top_population,
            },
            "band": {
                "first_collapse_time": spread.first_collapse(0.1).map(|i| spread.times[i]),
                "max_relative_coherence_after_collapse": spread.max_revival_after_collapse(0.1),
                "max_top_population": spread.max_top_population,
            },
        }))
    }
}
