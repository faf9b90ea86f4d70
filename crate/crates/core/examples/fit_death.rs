//! Fits the death kernel with p0 estimated from the cumulative counts.

use epidelay::epimetrics::{estimate_survival_probability, TransmissionProfile};
use epidelay::fitter::{fit, FitConfig, Target};
use epidelay::gammadist::GammaParams;
use epidelay::simulator::{
    export_dataset, simulate_distributed, RemovalModel, Sampling, SimConfig,
};
use epidelay::smoother::KernelSmoother;
use epidelay::timeseries::TimeUnit;

fn main() -> epidelay::Result<()> {
    let death = GammaParams::new(4.0, 2.5)?;
    let sim = SimConfig {
        population: 5e5,
        susceptible0: 5e5 - 500.0,
        infected0: 500.0,
        transmission: TransmissionProfile::Constant { value: 0.3 },
        removal: RemovalModel::Distributed {
            recovery: GammaParams::new(5.0, 3.0)?,
            death,
            survival_probability: 0.9,
        },
        step: 0.1,
        horizon: 250.0,
    };
    let data = export_dataset(&simulate_distributed(&sim)?, Sampling::Daily, None, 0.0)?;

    let recovered = data
        .cumulative_recoveries
        .as_ref()
        .expect("exported")
        .last_value();
    let dead = data
        .cumulative_deaths
        .as_ref()
        .expect("exported")
        .last_value();
    let p0 = estimate_survival_probability(recovered, dead)?;
    println!("estimated p0 = {p0:.4} from {recovered:.0} recoveries and {dead:.0} deaths");

    let smoother = KernelSmoother::new(data.incidence.clone(), 1.0)?;
    let observed = data.new_deaths.clone().expect("exported");
    let mut cfg = FitConfig::defaults(Target::Death, TimeUnit::Days, p0);
    cfg.shape_max = 8.0;
    cfg.scale_max = 8.0;
    cfg.shape_step = 0.1;
    cfg.scale_step = 0.1;
    let result = fit(&smoother, &observed, &cfg)?;
    println!(
        "death kernel ({:.2}, {:.2}), true ({}, {}); mean {:.2} vs {:.2}",
        result.optimal.shape,
        result.optimal.scale,
        death.shape,
        death.scale,
        result.summary.mean,
        death.mean()
    );
    let peak = observed.values().iter().copied().fold(0.0, f64::max);
    println!("peak daily deaths {peak:.0}, sse {:.3e}", result.sse);
    Ok(())
}
