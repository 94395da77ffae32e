use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use decolab::qbm::{
    decoherence_experiment, stability_bound, steps_for_fit_window, timescales, DecoherenceSeries, Potential,
    QbmParams, SpectralDensityParams,
};
use decolab::wigner::{CatStateParams, SpatialGrid};

use super::{cat_fits, grid_violations, Experiment};
use crate::error::CliError;
use crate::output::{num, Output};

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct QbmDecoherence {
    #[serde(rename = "M")]
    pub mass: f64,
    pub gamma: f64,
    #[serde(rename = "T")]
    pub temperature: f64,
    #[serde(rename = "Lambda")]
    pub lambda: f64,
    pub s: f64,
    pub potential: Potential,
    pub sigma: f64,
    #[serde(rename = "L")]
    pub separation: f64,
    pub n: usize,
    pub x_min: f64,
    pub x_max: f64,
    /// Time step; the stability bound when absent.
    pub dt: Option<f64>,
    /// Step count; enough to cover the fit window when absent.
    pub steps: Option<usize>,
    /// Approximate number of samples in the time series.
    pub samples: usize,
    /// Separations for the L² scaling scan.
    pub separations: Vec<f64>,
}

impl Default for QbmDecoherence {
    fn default() -> Self {
        Self {
            mass: 1.0,
            gamma: 1e-3,
            temperature: 50.0,
            lambda: 1e3,
            s: 1.0,
            potential: Potential::Free,
            sigma: 1.0,
            separation: 6.0,
            n: 256,
            x_min: -8.0,
            x_max: 14.0,
            dt: None,
            steps: None,
            samples: 20,
            separations: Vec::new(),
        }
    }
}

impl QbmDecoherence {
    fn params(&self) -> decolab::Result<QbmParams> {
        QbmParams::new(self.mass, self.potential, SpectralDensityParams::new(self.gamma, self.s, self.lambda)?, self.temperature)
    }

    fn grid(&self) -> decolab::Result<SpatialGrid> {
        SpatialGrid::new(self.n, self.x_min, self.x_max)
    }

    fn experiment(&self, params: &QbmParams, grid: SpatialGrid, dt: f64, separation: f64, steps: Option<usize>) -> Result<DecoherenceSeries, CliError> {
        let steps = steps
            .or_else(|| steps_for_fit_window(params, separation, dt))
            .ok_or_else(|| CliError::Validation(format!("L = {separation}: no decoherence fit window")))?;
        let every = (steps / self.samples.max(1)).max(1);
        Ok(decoherence_experiment(CatStateParams::new(self.sigma, separation)?, params, grid, dt, steps, every)?)
    }
}

impl Experiment for QbmDecoherence {
    fn violations(&self) -> Vec<String> {
        let mut v = grid_violations(self.n, self.x_min, self.x_max);
        let params = match self.params() {
            Ok(p) => p,
            Err(e) => {
                v.push(e.to_string());
                return v;
            }
        };
        if self.s != 1.0 {
            v.push(format!("s = {}: only ohmic (s = 1) baths are propagated", self.s));
        }
        if !(self.sigma > 0.0) {
            v.push(format!("sigma = {} must be positive", self.sigma));
            return v;
        }
        if self.samples == 0 {
            v.push("samples must be positive".into());
        }
        for &l in std::iter::once(&self.separation).chain(&self.separations) {
            if !(l > 0.0) {
                v.push(format!("L = {l} must be positive"));
            } else if let Some(msg) = cat_fits(self.sigma, l, self.x_min, self.x_max) {
                v.push(msg);
            }
        }
        let Ok(grid) = self.grid() else { return v };
        let bound = stability_bound(&grid, &params);
        if let Some(dt) = self.dt {
            if !(dt > 0.0) {
                v.push(format!("dt = {dt} must be positive"));
            } else if dt > bound {
                v.push(format!("dt = {dt:e} exceeds the stability bound {bound:e}"));
            }
        }
        if self.steps.is_none() && params.predicted_decoherence_rate(self.separation) <= 0.0 {
            v.push("no decoherence fit window at T = 0 or gamma = 0; give steps explicitly".into());
        }
        v
    }

    fn timescales(&self) -> Option<Value> {
        let params = self.params().ok()?;
        serde_json::to_value(timescales(&params, self.separation)).ok()
    }

    fn run(&self, out: &mut Output) -> Result<Value, CliError> {
        let params = self.params()?;
        let grid = self.grid()?;
        let bound = stability_bound(&grid, &params);
        let dt = self.dt.unwrap_or(bound);
        let series = self.experiment(&params, grid, dt, self.separation, self.steps)?;
        out.write("timeseries.csv", |f| Ok(series.write_csv(f)?))?;

        let mut scaling = Vec::new();
        for &l in &self.separations {
            let s = if l == self.separation { series.clone() } else { self.experiment(&params, grid, dt, l, None)? };
            scaling.push((l, s));
        }
        let scan = if scaling.is_empty() {
            Value::Null
        } else {
            let rows: Vec<Vec<String>> = scaling
                .iter()
                .map(|(l, s)| {
                    vec![
                        num(*l),
                        s.fitted_rate.map(num).unwrap_or_default(),
                        num(s.predicted_rate),
                        s.fitted_rate.map(|r| num(r / (l * l))).unwrap_or_default(),
                    ]
                })
                .collect();
            out.write_rows("scaling.csv", &["L", "fitted_rate", "predicted_rate", "fitted_over_L2"], &rows)?;
            let reference = series.fitted_rate.map(|r| r / self.separation.powi(2));
            let spread = reference.and_then(|reference| {
                scaling
                    .iter()
                    .map(|(l, s)| s.fitted_rate.map(|r| (r / (l * l) / reference - 1.0).abs()))
                    .try_fold(0.0f64, |m, x| x.map(|x| m.max(x)))
            });
            json!({
                "rows": scaling.iter().map(|(l, s)| json!({
                    "L": l,
                    "fitted_rate": s.fitted_rate,
                    "predicted_rate": s.predicted_rate,
                })).collect::<Vec<_>>(),
                "max_relative_deviation_from_L2": spread,
            })
        };
        let last = series.points.last();
        Ok(json!({
            "fitted_rate": series.fitted_rate,
            "predicted_rate": series.predicted_rate,
            "relative_error": series.relative_error(),
            "fit_window": series.fit_window,
            "timescales": series.timescales,
            "dt": dt,
            "stability_bound": bound,
            "steps": self.steps.or_else(|| steps_for_fit_window(&params, self.separation, dt)),
            "final_min_eigenvalue": last.map(|p| p.min_eigenvalue),
            "final_trace_error": last.map(|p| p.trace_error),
            "scaling": scan,
        }))
    }
}
