use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use decolab::wigner::{
    cat_incoherent_mixture, cat_state_wavefunction, cat_wigner_oracle, interference_peak, negativity_volume,
    oracle_interference_peak, wigner_transform, CatStateParams, GridDensityMatrix, GridWavefunction, SpatialGrid,
};

use super::{cat_fits, grid_violations, Experiment};
use crate::error::CliError;
use crate::output::Output;

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CatWigner {
    pub sigma: f64,
    #[serde(rename = "L")]
    pub separation: f64,
    pub n: usize,
    pub x_min: f64,
    pub x_max: f64,
    /// Further separations compared against the closed form.
    pub oracle_separations: Vec<f64>,
}

impl Default for CatWigner {
    fn default() -> Self {
        Self { sigma: 1.0, separation: 6.0, n: 256, x_min: -8.0, x_max: 14.0, oracle_separations: Vec::new() }
    }
}

impl CatWigner {
    fn oracle_distance(&self, grid: SpatialGrid, separation: f64) -> Result<f64, CliError> {
        let params = CatStateParams::new(self.sigma, separation)?;
        let rho = GridDensityMatrix::from_wavefunction(&cat_state_wavefunction(params, grid)?);
        Ok(wigner_transform(&rho)?.sup_distance(|q, p| cat_wigner_oracle(params, q, p)))
    }
}

impl Experiment for CatWigner {
    fn violations(&self) -> Vec<String> {
        let mut v = grid_violations(self.n, self.x_min, self.x_max);
        if !(self.sigma > 0.0) {
            v.push(format!("sigma = {} must be positive", self.sigma));
            return v;
        }
        for &l in std::iter::once(&self.separation).chain(&self.oracle_separations) {
            if !(l >= 0.0) {
                v.push(format!("L = {l} must be nonnegative"));
            } else if let Some(msg) = cat_fits(self.sigma, l, self.x_min, self.x_max) {
                v.push(msg);
            }
        }
        v
    }

    fn run(&self, out: &mut Output) -> Result<Value, CliError> {
        let grid = SpatialGrid::new(self.n, self.x_min, self.x_max)?;
        let params = CatStateParams::new(self.sigma, self.separation)?;
        let cat = GridDensityMatrix::from_wavefunction(&cat_state_wavefunction(params, grid)?);
        let w = wigner_transform(&cat)?;
        out.write("wigner_field.csv", |f| Ok(w.write_csv(f)?))?;

        let mixture = wigner_transform(&cat_incoherent_mixture(params, grid)?)?;
        let gaussian = GridDensityMatrix::from_wavefunction(&GridWavefunction::gaussian(grid, 0.0, self.sigma, 0.0)?);
        let scan = self
            .oracle_separations
            .iter()
            .map(|&l| Ok(json!({ "L": l, "sup_distance": self.oracle_distance(grid, l)? })))
            .collect::<Result<Vec<_>, CliError>>()?;
        Ok(json!({
            "negativity_volume": negativity_volume(&w),
            "mixture_negativity_volume": negativity_volume(&mixture),
            "gaussian_negativity_volume": negativity_volume(&wigner_transform(&gaussian)?),
            "oracle_sup_distance": w.sup_distance(|q, p| cat_wigner_oracle(params, q, p)),
            "oracle_scan": scan,
            "normalization": w.normalization(),
            "purity": w.purity(),
            "interference_peak": interference_peak(&w, params),
            "oracle_interference_peak": oracle_interference_peak(&w, params),
        }))
    }
}
