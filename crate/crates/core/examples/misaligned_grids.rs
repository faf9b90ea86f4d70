//! Incidence reported every other day, recoveries daily: the smoother fills
//! the gaps and predictions land on the recovery stamps.

use epidelay::epimetrics::TransmissionProfile;
use epidelay::fitter::{fit, FitConfig, Target};
use epidelay::gammadist::GammaParams;
use epidelay::simulator::{
    export_dataset, simulate_distributed, RemovalModel, Sampling, SimConfig,
};
use epidelay::smoother::KernelSmoother;
use epidelay::timeseries::{SeriesLabel, TimeSeries, TimeUnit};

fn main() -> epidelay::Result<()> {
    let sim = SimConfig {
        population: 1e6,
        susceptible0: 0.999e6,
        infected0: 1000.0,
        transmission: TransmissionProfile::Constant { value: 0.25 },
        removal: RemovalModel::Distributed {
            recovery: GammaParams::new(5.0, 3.0)?,
            death: GammaParams::new(5.0, 2.0)?,
            survival_probability: 0.97,
        },
        step: 0.1,
        horizon: 200.0,
    };
    let data = export_dataset(&simulate_distributed(&sim)?, Sampling::Daily, None, 0.0)?;

    // keep every second incidence report, each covering two days
    let (times, values): (Vec<f64>, Vec<f64>) = data
        .incidence
        .values()
        .chunks(2)
        .enumerate()
        .filter(|(_, pair)| pair.len() == 2)
        .map(|(i, pair)| (2.0 * i as f64 + 0.5, 0.5 * (pair[0] + pair[1])))
        .unzip();
    let sparse = TimeSeries::new(times, values, SeriesLabel::Incidence)?;
    println!(
        "{} incidence reports, {} recovery reports",
        sparse.len(),
        data.incidence.len()
    );

    let smoother = KernelSmoother::new(sparse, 1.0)?;
    let observed = data.new_recoveries.clone().expect("exported");
    let mut cfg = FitConfig::defaults(Target::Recovery, TimeUnit::Days, 0.97);
    cfg.shape_max = 10.0;
    cfg.scale_max = 10.0;
    cfg.shape_step = 0.1;
    cfg.scale_step = 0.1;
    let result = fit(&smoother, &observed, &cfg)?;
    println!(
        "fitted ({:.2}, {:.2}) with mean {:.2}; truth (5, 3) with mean 15",
        result.optimal.shape, result.optimal.scale, result.summary.mean
    );
    println!(
        "predictions carry the recovery stamps: {}",
        result.predicted.times() == observed.times()
    );
    Ok(())
}
