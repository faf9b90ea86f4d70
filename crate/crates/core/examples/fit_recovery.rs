//! Simulates an outbreak with a known recovery kernel, exports daily counts and
//! recovers the kernel by grid search.

use epidelay::epimetrics::TransmissionProfile;
use epidelay::fitter::{fit, FitConfig, Target};
use epidelay::gammadist::GammaParams;
use epidelay::simulator::{
    export_dataset, simulate_distributed, RemovalModel, Sampling, SimConfig,
};
use epidelay::smoother::KernelSmoother;
use epidelay::timeseries::TimeUnit;

fn main() -> epidelay::Result<()> {
    let truth = GammaParams::new(5.0, 3.0)?;
    let p0 = 0.97;
    let sim = SimConfig {
        population: 1e6,
        susceptible0: 0.999e6,
        infected0: 1000.0,
        transmission: TransmissionProfile::Constant { value: 0.25 },
        removal: RemovalModel::Distributed {
            recovery: truth,
            death: GammaParams::new(5.0, 2.0)?,
            survival_probability: p0,
        },
        step: 0.1,
        horizon: 200.0,
    };
    let state = simulate_distributed(&sim)?;
    let data = export_dataset(&state, Sampling::Daily, Some(1), 0.05)?;

    let smoother = KernelSmoother::new(data.incidence.clone(), 1.0)?;
    let observed = data.new_recoveries.clone().expect("exported");
    let mut cfg = FitConfig::defaults(Target::Recovery, TimeUnit::Days, p0);
    cfg.shape_max = 10.0;
    cfg.scale_max = 10.0;
    cfg.shape_step = 0.1;
    cfg.scale_step = 0.1;
    cfg.mode_lower = 5.0;
    cfg.mode_upper = 25.0;

    let result = fit(&smoother, &observed, &cfg)?;
    println!(
        "true kernel   ({}, {})  mean {:.2}",
        truth.shape,
        truth.scale,
        truth.mean()
    );
    println!(
        "fitted kernel ({:.2}, {:.2})  mean {:.2}  mode {:.2}  sse {:.4e}",
        result.optimal.shape,
        result.optimal.scale,
        result.summary.mean,
        result.summary.mode,
        result.sse
    );
    println!(
        "{} feasible cells scored; runner-up cells:",
        result.evaluated_cells
    );
    for cell in result.surface_minima.iter().skip(1) {
        println!(
            "  ({:.2}, {:.2})  sse {:.4e}",
            cell.shape, cell.scale, cell.sse
        );
    }
    Ok(())
}
