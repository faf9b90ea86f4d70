//! Runs the classical and distributed models side by side and writes a weekly
//! dataset that the fitting commands can read.

use epidelay::epimetrics::TransmissionProfile;
use epidelay::gammadist::GammaParams;
use epidelay::simulator::{
    export_dataset, simulate_classical, simulate_distributed, RemovalModel, Sampling, SimConfig,
};
use epidelay::timeseries::write_dataset;

fn main() -> epidelay::Result<()> {
    let recovery = GammaParams::new(5.0, 3.0)?;
    let death = GammaParams::new(5.0, 2.0)?;
    let p0 = 0.97;
    let distributed = SimConfig {
        population: 1e6,
        susceptible0: 0.999e6,
        infected0: 1000.0,
        transmission: TransmissionProfile::Constant { value: 0.25 },
        removal: RemovalModel::Distributed {
            recovery,
            death,
            survival_probability: p0,
        },
        step: 0.1,
        horizon: 210.0,
    };
    // constant rates chosen from the kernel means
    let classical = SimConfig {
        removal: RemovalModel::Classical {
            recovery_rate: p0 / recovery.mean(),
            death_rate: (1.0 - p0) / death.mean(),
        },
        ..distributed.clone()
    };

    let a = simulate_classical(&classical)?;
    let b = simulate_distributed(&distributed)?;
    println!("{:>5}{:>12}{:>12}", "day", "I classical", "I distrib.");
    for day in (0..=210).step_by(15) {
        let k = day * 10;
        println!("{day:>5}{:>12.0}{:>12.0}", a.infected[k], b.infected[k]);
    }
    println!(
        "final deaths: {:.0} vs {:.0}",
        a.dead.last().unwrap(),
        b.dead.last().unwrap()
    );
    println!("conservation error: {:.2e}", b.conservation_error());

    let weekly = export_dataset(&b, Sampling::Weekly, Some(7), 0.1)?;
    let dir = std::env::temp_dir().join("epidelay-weekly");
    let manifest = write_dataset(&weekly, &dir)?;
    println!(
        "{} weekly buckets written to {}",
        weekly.incidence.len(),
        manifest.display()
    );
    Ok(())
}
