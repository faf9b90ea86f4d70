//! Compares a fitted recovery kernel with constant-rate estimators driven by
//! its mean, median and mode.

use epidelay::baseline::{
    compare, three_sigma_band, BaselineSpec, Tendency, DEFAULT_SURVEY_SIZE_RECOVERY,
};
use epidelay::epimetrics::TransmissionProfile;
use epidelay::fitter::{evaluate_kernel, Target};
use epidelay::gammadist::GammaParams;
use epidelay::simulator::{
    export_dataset, simulate_distributed, RemovalModel, Sampling, SimConfig,
};
use epidelay::smoother::KernelSmoother;

fn main() -> epidelay::Result<()> {
    let kernel = GammaParams::new(4.7, 4.5)?;
    let p0 = 0.97;
    let sim = SimConfig {
        population: 1e6,
        susceptible0: 0.999e6,
        infected0: 1000.0,
        transmission: TransmissionProfile::Constant { value: 0.2 },
        removal: RemovalModel::Distributed {
            recovery: kernel,
            death: GammaParams::new(4.95, 2.05)?,
            survival_probability: p0,
        },
        step: 0.1,
        horizon: 180.0,
    };
    let data = export_dataset(&simulate_distributed(&sim)?, Sampling::Daily, None, 0.0)?;
    let smoother = KernelSmoother::new(data.incidence.clone(), 1.0)?;
    let observed = data.new_recoveries.clone().expect("exported");
    let active = data.active.clone().expect("exported");

    let fit = evaluate_kernel(&smoother, &observed, &kernel, Target::Recovery, p0, 0.25)?;
    let specs: Vec<BaselineSpec> = Tendency::ALL
        .iter()
        .map(|&tendency| BaselineSpec {
            tendency,
            target: Target::Recovery,
            survival_probability: p0,
            gamma: kernel,
            survey_sample_size: Some(DEFAULT_SURVEY_SIZE_RECOVERY),
        })
        .collect();
    let report = compare(&fit, &specs, &active, &observed)?;

    println!("distributed kernel sse {:.4e}", report.distributed_sse);
    for b in &report.baselines {
        println!(
            "{:<7} rate {:.4}  sse {:.4e}",
            b.tendency.name(),
            b.rate,
            b.sse
        );
    }
    println!("ranking: {}", report.ordering.join(" < "));

    let (lo, hi) = three_sigma_band(&specs[0], &active)?;
    let day = 60;
    println!(
        "day {day}: observed {:.0}, mean-rate band [{:.0}, {:.0}]",
        observed.values()[day],
        lo.values()[day],
        hi.values()[day]
    );
    println!("{}", report.band_convention);
    Ok(())
}
