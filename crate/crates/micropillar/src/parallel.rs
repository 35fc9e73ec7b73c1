//! Multi-threaded drivers whose results match the sequential core functions
//! exactly: points are gathered in input order and the first failure in that
//! order is reported.

use rayon::prelude::*;

use micropillar_core::efficiency::{
    check_grid, design_point, optimize_diameter, DesignConfig, EfficiencyCurve, OptimizeReport, Provenance,
};
use micropillar_core::photon_mc::{batch_count, simulate_batch, ChannelRates, FateTally};
use micropillar_core::{Error, Result};

fn first_error<T: Send>(results: Vec<Result<T>>) -> Result<Vec<T>> {
    results.into_iter().collect()
}

pub fn sweep(d_grid: &[f64], q_2d: f64, cfg: &DesignConfig) -> Result<EfficiencyCurve> {
    check_grid(d_grid)?;
    let points = first_error(d_grid.par_iter().map(|&d| design_point(d, q_2d, cfg)).collect())?;
    Ok(EfficiencyCurve {
        points,
        provenance: Provenance::new(cfg, q_2d),
    })
}

pub fn optimize(q_2d_grid: &[f64], d_range: (f64, f64), cfg: &DesignConfig) -> Result<OptimizeReport> {
    let optima = first_error(
        q_2d_grid
            .par_iter()
            .map(|&q| optimize_diameter(q, d_range, cfg))
            .collect(),
    )?;
    OptimizeReport::from_optima(optima)
}

pub fn simulate(rates: &ChannelRates, n_photons: u64, seed: u64) -> Result<FateTally> {
    if n_photons == 0 {
        return Err(Error::InputDomain("need at least one photon".into()));
    }
    let mut tally = FateTally {
        seed,
        ..FateTally::default()
    };
    let batches: Vec<FateTally> = (0..batch_count(n_photons))
        .into_par_iter()
        .map(|k| simulate_batch(rates, n_photons, seed, k))
        .collect();
    for b in &batches {
        tally.merge(b);
    }
    Ok(tally)
}
