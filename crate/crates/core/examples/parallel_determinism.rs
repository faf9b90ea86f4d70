//! The grid search gives bit-identical answers whatever the worker count.

use std::time::Instant;

use epidelay::epimetrics::TransmissionProfile;
use epidelay::fitter::{fit_with_workers, FitConfig, Target};
use epidelay::gammadist::GammaParams;
use epidelay::simulator::{
    export_dataset, simulate_distributed, RemovalModel, Sampling, SimConfig,
};
use epidelay::smoother::KernelSmoother;
use epidelay::timeseries::TimeUnit;

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
    let data = export_dataset(&simulate_distributed(&sim)?, Sampling::Daily, Some(3), 0.1)?;
    let smoother = KernelSmoother::new(data.incidence.clone(), 1.0)?;
    let observed = data.new_recoveries.clone().expect("exported");
    let mut cfg = FitConfig::defaults(Target::Recovery, TimeUnit::Days, 0.97);
    cfg.shape_max = 10.0;
    cfg.scale_max = 10.0;

    let mut first = None;
    for workers in [1, 2, 4, 8] {
        let start = Instant::now();
        let r = fit_with_workers(&smoother, &observed, &cfg, workers)?;
        println!(
            "{workers} workers: ({}, {}) sse {:e} [bits {:016x}]  {:.2}s",
            r.optimal.shape,
            r.optimal.scale,
            r.sse,
            r.sse.to_bits(),
            start.elapsed().as_secs_f64()
        );
        match &first {
            None => first = Some(r),
            Some(f) => assert_eq!(f, &r),
        }
    }
    Ok(())
}
