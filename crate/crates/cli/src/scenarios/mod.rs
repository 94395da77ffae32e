mod cat_wigner;
mod halo;
mod histories;
mod measurement_chain;
mod qbm;
mod recurrence;
mod tomography;
mod two_slit;

use serde::de::DeserializeOwned;
use serde::Serialize;
use serde_json::{Map, Value};

use crate::config::Scenario;
use crate::error::CliError;
use crate::output::Output;

pub trait Experiment {
    /// Schema-level and physical-range problems, empty when runnable.
    fn violations(&self) -> Vec<String>;

    fn timescales(&self) -> Option<Value> {
        None
    }

    /// Writes the scenario's CSVs and returns the manifest `results`.
    fn run(&self, out: &mut Output) -> Result<Value, CliError>;
}

/// Scenario parameters after defaults are filled in.
pub struct Prepared {
    params: Value,
    experiment: Box<dyn Experiment>,
}

impl Prepared {
    pub fn params_json(&self) -> &Value {
        &self.params
    }

    pub fn violations(&self) -> Vec<String> {
        self.experiment.violations()
    }

    pub fn timescales(&self) -> Option<Value> {
        self.experiment.timescales()
    }

    pub fn run(&self, out: &mut Output) -> Result<Value, CliError> {
        self.experiment.run(out)
    }
}

fn typed<T>(params: Map<String, Value>) -> Result<Prepared, CliError>
where
    T: DeserializeOwned + Serialize + Experiment + 'static,
{
    let parsed: T = serde_json::from_value(Value::Object(params)).map_err(|e| CliError::Validation(format!("params: {e}")))?;
    let params = serde_json::to_value(&parsed).map_err(|e| CliError::Validation(format!("params: {e}")))?;
    Ok(Prepared { params, experiment: Box::new(parsed) })
}

pub fn prepare(scenario: Scenario, params: Map<String, Value>) -> Result<Prepared, CliError> {
    match scenario {
        Scenario::CatWigner => typed::<cat_wigner::CatWigner>(params),
        Scenario::QbmDecoherence => typed::<qbm::QbmDecoherence>(params),
        Scenario::TwoSlit => typed::<two_slit::TwoSlit>(params),
        Scenario::HistoriesCheck => typed::<histories::HistoriesCheck>(params),
        Scenario::TomographyPipeline => typed::<tomography::TomographyPipeline>(params),
        Scenario::Recurrence => typed::<recurrence::Recurrence>(params),
        Scenario::MeasurementChain => typed::<measurement_chain::MeasurementChainRun>(params),
        Scenario::Halo => typed::<halo::Halo>(params),
    }
}

/// Least-squares slope of `y` against `x`.
pub(crate) fn slope(points: &[(f64, f64)]) -> f64 {
    let n = points.len() as f64;
    let xm = points.iter().map(|p| p.0).sum::<f64>() / n;
    let ym = points.iter().map(|p| p.1).sum::<f64>() / n;
    let sxy: f64 = points.iter().map(|p| (p.0 - xm) * (p.1 - ym)).sum();
    let sxx: f64 = points.iter().map(|p| (p.0 - xm).powi(2)).sum();
    sxy / sxx
}

/// Grid-box check shared by the phase-space scenarios.
pub(crate) fn cat_fits(sigma: f64, separation: f64, x_min: f64, x_max: f64) -> Option<String> {
    let (lo, hi) = (-4.0 * sigma, separation + 4.0 * sigma);
    (x_min > lo || x_max < hi).then(|| {
        format!("L = {separation} exceeds the grid box [{x_min}, {x_max}]: the cat state needs [{lo}, {hi}]")
    })
}

pub(crate) fn grid_violations(n: usize, x_min: f64, x_max: f64) -> Vec<String> {
    let mut v = Vec::new();
    if n < 16 {
        v.push(format!("n = {n}: grid needs at least 16 points"));
    }
    if !(x_max > x_min) {
        v.push(format!("grid box [{x_min}, {x_max}] is empty"));
    }
    v
}
