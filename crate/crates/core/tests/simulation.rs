use epidelay::epimetrics::TransmissionProfile;
use epidelay::gammadist::GammaParams;
use epidelay::simulator::{self, RemovalModel, Sampling, SimConfig, SimState};
use statrs::distribution::{Continuous, Gamma};

fn distributed(
    beta: f64,
    recovery: (f64, f64),
    death: (f64, f64),
    p0: f64,
    step: f64,
    horizon: f64,
) -> SimConfig {
    SimConfig {
        population: 1e5,
        susceptible0: 0.99e5,
        infected0: 1e3,
        transmission: TransmissionProfile::Constant { value: beta },
        removal: RemovalModel::Distributed {
            recovery: GammaParams::new(recovery.0, recovery.1).unwrap(),
            death: GammaParams::new(death.0, death.1).unwrap(),
            survival_probability: p0,
        },
        step,
        horizon,
    }
}

fn check_shape_invariants(state: &SimState) {
    for n in 0..state.len() {
        for v in [
            state.susceptible[n],
            state.infected[n],
            state.recovered[n],
            state.dead[n],
        ] {
            assert!(v >= 0.0, "negative compartment at step {n}");
        }
        if n > 0 {
            assert!(state.susceptible[n] <= state.susceptible[n - 1]);
            assert!(state.recovered[n] >= state.recovered[n - 1]);
            assert!(state.dead[n] >= state.dead[n - 1]);
        }
    }
}

#[test]
fn single_pulse_reproduces_the_recovery_density() {
    let p0 = 0.95;
    let cfg = distributed(0.0, (4.0, 2.5), (3.0, 2.0), p0, 0.1, 60.0);
    let state = simulator::simulate_distributed(&cfg).unwrap();
    let reference = Gamma::new(4.0, 1.0 / 2.5).unwrap();
    for n in 1..state.len() {
        let t = state.times[n];
        let expected = p0 * cfg.infected0 * reference.pdf(t);
        let got = state.new_recoveries[n];
        assert!(
            (got - expected).abs() <= 1e-9 * cfg.infected0,
            "t={t}: {got} vs {expected}"
        );
    }
    check_shape_invariants(&state);
}

#[test]
fn eventual_removals_balance_cumulative_incidence() {
    let cfg = distributed(0.3, (5.0, 3.0), (5.0, 2.0), 0.97, 0.1, 400.0);
    let state = simulator::simulate_distributed(&cfg).unwrap();
    let dt = cfg.step;
    let n = state.len() - 1;
    // the first incidence entry carries the seed pulse, i.e. I0 / dt
    let infected_total: f64 = state.incidence[..n].iter().map(|j| dt * j).sum();
    let removed = state.recovered[n] + state.dead[n];
    assert!(
        (removed - infected_total).abs() < 1e-6 * cfg.population,
        "{removed} vs {infected_total}"
    );
    assert!(
        (infected_total - cfg.infected0 - (cfg.susceptible0 - state.susceptible[n])).abs()
            < 1e-6 * cfg.population
    );
    check_shape_invariants(&state);
}

fn memoryless_pair(shape: f64) -> (SimState, SimState) {
    let (r0, d0) = (0.09, 0.01);
    let rate = r0 + d0;
    let kernel = (shape, 1.0 / rate);
    let mut dist = distributed(0.3, kernel, kernel, r0 / rate, 0.01, 120.0);
    dist.infected0 = 100.0;
    dist.susceptible0 = dist.population - 100.0;
    let classical = SimConfig {
        removal: RemovalModel::Classical {
            recovery_rate: r0,
            death_rate: d0,
        },
        ..dist.clone()
    };
    (
        simulator::simulate_distributed(&dist).unwrap(),
        simulator::simulate_classical(&classical).unwrap(),
    )
}

#[test]
fn memoryless_kernel_tracks_the_classical_model() {
    // Shape 1.01 stretches the mean infectious period by 1%, which shifts the
    // epidemic in time; the gap is measured against the peak, not pointwise.
    let (a, b) = memoryless_pair(1.01);
    let peak = b.infected.iter().copied().fold(0.0, f64::max);
    let gap = a
        .infected
        .iter()
        .zip(&b.infected)
        .map(|(x, y)| (x - y).abs())
        .fold(0.0, f64::max);
    assert!(
        gap < 0.05 * peak,
        "largest gap on I(t) is {:.2}% of peak",
        100.0 * gap / peak
    );

    // with an exactly exponential kernel the two schemes agree pointwise
    let (a, b) = memoryless_pair(1.0);
    for (x, y) in a.infected.iter().zip(&b.infected) {
        if *y > 0.01 * peak {
            assert!((x - y).abs() < 0.01 * y, "{x} vs {y}");
        }
    }
}

#[test]
fn weekly_export_buckets_and_sums() {
    let cfg = distributed(0.25, (5.0, 3.0), (5.0, 2.0), 0.97, 0.1, 70.0);
    let state = simulator::simulate_distributed(&cfg).unwrap();
    let ds = simulator::export_dataset(&state, Sampling::Weekly, None, 0.0).unwrap();
    assert_eq!(ds.incidence.len(), 10);
    let recoveries = ds.new_recoveries.as_ref().unwrap();
    let direct: f64 = state.new_recoveries[..state.len() - 1]
        .iter()
        .map(|v| v * cfg.step)
        .sum();
    assert!((recoveries.total() - direct).abs() <= 1e-9 * direct);
    assert_eq!(
        ds.cumulative_recoveries.as_ref().unwrap().last_value(),
        recoveries.total()
    );

    let noisy = simulator::export_dataset(&state, Sampling::Daily, Some(11), 0.1).unwrap();
    let again = simulator::export_dataset(&state, Sampling::Daily, Some(11), 0.1).unwrap();
    assert_eq!(noisy, again);
    assert_ne!(
        noisy.incidence,
        simulator::export_dataset(&state, Sampling::Daily, Some(12), 0.1)
            .unwrap()
            .incidence
    );
}
