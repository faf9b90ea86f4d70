//! Forward Euler integration of the constant-rate SIR model and of the model
//! whose removals are convolutions of past incidence with recovery and death
//! kernels.
//!
//! Both schemes move mass between compartments with matched increments, so
//! `S + I + R + D` stays at `N` up to rounding.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, LogNormal};
use serde::{Deserialize, Serialize};

use crate::epimetrics::TransmissionProfile;
use crate::error::{Error, Result};
use crate::gammadist::{GammaParams, DEFAULT_TAIL_MASS};
use crate::timeseries::{EpiDataset, SeriesLabel, TimeSeries, TimeUnit};

/// Classical runs warn when `dt (r0 + d0)` exceeds this.
pub const STABILITY_LIMIT: f64 = 0.5;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "mode", rename_all = "snake_case")]
pub enum RemovalModel {
    Classical {
        recovery_rate: f64,
        death_rate: f64,
    },
    Distributed {
        recovery: GammaParams,
        death: GammaParams,
        survival_probability: f64,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimConfig {
    pub population: f64,
    pub susceptible0: f64,
    pub infected0: f64,
    pub transmission: TransmissionProfile,
    pub removal: RemovalModel,
    #[serde(default = "default_step")]
    pub step: f64,
    pub horizon: f64,
}

fn default_step() -> f64 {
    0.1
}

impl SimConfig {
    pub fn diagnostics(&self) -> Vec<String> {
        let mut out = Vec::new();
        if !(self.population > 0.0) {
            out.push(format!("population must be positive: {}", self.population));
        }
        if !(self.susceptible0 > 0.0) {
            out.push(format!(
                "susceptible0 must be positive: {}",
                self.susceptible0
            ));
        }
        if !(self.infected0 >= 0.0) {
            out.push(format!(
                "infected0 must be non-negative: {}",
                self.infected0
            ));
        }
        if self.susceptible0 + self.infected0 > self.population * (1.0 + 1e-12) {
            out.push("susceptible0 + infected0 exceeds population".into());
        }
        if !(self.step > 0.0) {
            out.push(format!("step must be positive: {}", self.step));
        }
        if !(self.horizon > self.step) {
            out.push(format!("horizon must exceed step: {}", self.horizon));
        }
        if !matches!(self.transmission, TransmissionProfile::Constant { .. }) {
            out.push("transmission must be constant for simulation".into());
        }
        match &self.removal {
            RemovalModel::Classical {
                recovery_rate,
                death_rate,
            } => {
                if !(*recovery_rate >= 0.0) || !(*death_rate >= 0.0) {
                    out.push("removal rates must be non-negative".into());
                }
            }
            RemovalModel::Distributed {
                recovery,
                death,
                survival_probability,
            } => {
                if !(0.0..=1.0).contains(survival_probability) {
                    out.push(format!(
                        "survival_probability out of [0,1]: {survival_probability}"
                    ));
                }
                for (name, k) in [("recovery", recovery), ("death", death)] {
                    if GammaParams::new(k.shape, k.scale).is_err() || k.shape < 1.0 {
                        out.push(format!("{name} kernel needs shape >= 1 and scale > 0"));
                    }
                }
            }
        }
        out
    }

    fn beta(&self) -> f64 {
        match self.transmission {
            TransmissionProfile::Constant { value } => value,
            TransmissionProfile::Tabulated { .. } => f64::NAN,
        }
    }

    fn steps(&self) -> usize {
        (self.horizon / self.step).round() as usize
    }
}

/// Trajectories on the uniform grid `0, dt, …, T`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimState {
    pub times: Vec<f64>,
    pub susceptible: Vec<f64>,
    pub infected: Vec<f64>,
    pub recovered: Vec<f64>,
    pub dead: Vec<f64>,
    /// Incidence driving removals. In distributed runs the first entry
    /// carries the seed pulse `I0 / dt` on top of `βSI/N`.
    pub incidence: Vec<f64>,
    pub new_recoveries: Vec<f64>,
    pub new_deaths: Vec<f64>,
    pub step: f64,
    pub population: f64,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub warnings: Vec<String>,
}

impl SimState {
    fn with_capacity(cfg: &SimConfig) -> Self {
        let n = cfg.steps() + 1;
        Self {
            times: (0..n).map(|k| k as f64 * cfg.step).collect(),
            susceptible: Vec::with_capacity(n),
            infected: Vec::with_capacity(n),
            recovered: Vec::with_capacity(n),
            dead: Vec::with_capacity(n),
            incidence: Vec::with_capacity(n),
            new_recoveries: Vec::with_capacity(n),
            new_deaths: Vec::with_capacity(n),
            step: cfg.step,
            population: cfg.population,
            warnings: Vec::new(),
        }
    }

    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    /// Largest `|S + I + R + D - N|` over the run.
    pub fn conservation_error(&self) -> f64 {
        (0..self.len())
            .map(|k| {
                (self.susceptible[k] + self.infected[k] + self.recovered[k] + self.dead[k]
                    - self.population)
                    .abs()
            })
            .fold(0.0, f64::max)
    }

    pub fn to_csv_string(&self) -> String {
        let mut out = String::from("t,S,I,R,D,J,R_new,D_new\n");
        for k in 0..self.len() {
            out.push_str(&format!(
                "{},{},{},{},{},{},{},{}\n",
                self.times[k],
                self.susceptible[k],
                self.infected[k],
                self.recovered[k],
                self.dead[k],
                self.incidence[k],
                self.new_recoveries[k],
                self.new_deaths[k]
            ));
        }
        out
    }
}

fn validate(cfg: &SimConfig) -> Result<()> {
    match cfg.diagnostics().into_iter().next() {
        None => Ok(()),
        Some(msg) => Err(Error::InvalidParameter(msg)),
    }
}

/// Explicit Euler for constant removal rates.
pub fn simulate_classical(cfg: &SimConfig) -> Result<SimState> {
    validate(cfg)?;
    let (r0, d0) = match cfg.removal {
        RemovalModel::Classical {
            recovery_rate,
            death_rate,
        } => (recovery_rate, death_rate),
        RemovalModel::Distributed { .. } => {
            return Err(Error::invalid(
                "simulate_classical needs classical removal rates",
            ))
        }
    };
    let beta = cfg.beta();
    let n = cfg.population;
    let dt = cfg.step;
    let mut state = SimState::with_capacity(cfg);
    if dt * (r0 + d0) > STABILITY_LIMIT {
        state.warnings.push(format!(
            "dt*(r0+d0) = {} exceeds {STABILITY_LIMIT}; compartments may go negative",
            dt * (r0 + d0)
        ));
    }

    let (mut s, mut i) = (cfg.susceptible0, cfg.infected0);
    let mut r = n - cfg.susceptible0 - cfg.infected0;
    let mut d = 0.0;
    for k in 0..state.times.len() {
        let j = beta * s * i / n;
        let rn = r0 * i;
        let dn = d0 * i;
        state.susceptible.push(s);
        state.infected.push(i);
        state.recovered.push(r);
        state.dead.push(d);
        state.incidence.push(j);
        state.new_recoveries.push(rn);
        state.new_deaths.push(dn);
        if k + 1 < state.times.len() {
            s -= dt * j;
            i += dt * (j - rn - dn);
            r += dt * rn;
            d += dt * dn;
        }
    }
    Ok(state)
}

/// `weight * f(m dt)` for lags up to the kernel's tail point.
fn kernel_table(kernel: &GammaParams, weight: f64, dt: f64) -> Result<Vec<f64>> {
    if weight == 0.0 {
        return Ok(vec![0.0]);
    }
    let horizon = kernel.truncation_time(DEFAULT_TAIL_MASS)?;
    let len = (horizon / dt).ceil() as usize + 1;
    Ok((0..len)
        .map(|m| weight * kernel.density(m as f64 * dt))
        .collect())
}

/// History-weighted convolution `dt Σ_k w_k K[n-k] h[k]` with the current
/// node at half weight.
fn history_sum(table: &[f64], history: &[f64], dt: f64) -> f64 {
    let n = history.len() - 1;
    let start = n.saturating_sub(table.len() - 1);
    let mut acc = 0.5 * table[0] * history[n];
    for k in start..n {
        acc += table[n - k] * history[k];
    }
    dt * acc
}

/// Explicit Euler with the removal convolutions summed over the stored
/// incidence history. The initial infected enter the history as a pulse of
/// height `I0 / dt` over the first step.
pub fn simulate_distributed(cfg: &SimConfig) -> Result<SimState> {
    validate(cfg)?;
    let (recovery, death, p0) = match &cfg.removal {
        RemovalModel::Distributed {
            recovery,
            death,
            survival_probability,
        } => (*recovery, *death, *survival_probability),
        RemovalModel::Classical { .. } => {
            return Err(Error::invalid(
                "simulate_distributed needs gamma removal kernels",
            ))
        }
    };
    let beta = cfg.beta();
    let n = cfg.population;
    let dt = cfg.step;
    let rec_table = kernel_table(&recovery, p0, dt)?;
    let death_table = kernel_table(&death, 1.0 - p0, dt)?;

    let mut state = SimState::with_capacity(cfg);
    let (mut s, mut i) = (cfg.susceptible0, cfg.infected0);
    let mut r = n - cfg.susceptible0 - cfg.infected0;
    let mut d = 0.0;
    for k in 0..state.times.len() {
        let j = beta * s * i / n;
        let seed = if k == 0 { cfg.infected0 / dt } else { 0.0 };
        state.incidence.push(j + seed);
        let rn = history_sum(&rec_table, &state.incidence, dt);
        let dn = history_sum(&death_table, &state.incidence, dt);
        state.susceptible.push(s);
        state.infected.push(i);
        state.recovered.push(r);
        state.dead.push(d);
        state.new_recoveries.push(rn);
        state.new_deaths.push(dn);
        if k + 1 < state.times.len() {
            s -= dt * j;
            i += dt * (j - rn - dn);
            r += dt * rn;
            d += dt * dn;
        }
    }
    Ok(state)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Sampling {
    Daily,
    Weekly,
}

impl Sampling {
    /// Bucket width in simulation days.
    pub fn interval(self) -> f64 {
        match self {
            Sampling::Daily => 1.0,
            Sampling::Weekly => 7.0,
        }
    }

    pub fn unit(self) -> TimeUnit {
        match self {
            Sampling::Daily => TimeUnit::Days,
            Sampling::Weekly => TimeUnit::Weeks,
        }
    }
}

/// Buckets a run into reported series.
///
/// Incidence, new recoveries and new deaths are integrated over each bucket;
/// active cases are read at the bucket start. Bucket `b` is stamped `b` in
/// the sampling unit (days or weeks). With `noise_scale > 0` every count is
/// multiplied by an independent log-normal factor `exp(noise_scale * Z)`.
pub fn export_dataset(
    state: &SimState,
    sampling: Sampling,
    noise_seed: Option<u64>,
    noise_scale: f64,
) -> Result<EpiDataset> {
    let interval = sampling.interval();
    if interval < state.step {
        return Err(Error::invalid(
            "sampling interval shorter than the simulation step",
        ));
    }
    if !(noise_scale >= 0.0) {
        return Err(Error::invalid(format!(
            "noise scale {noise_scale} must be >= 0"
        )));
    }
    let per_bucket = (interval / state.step).round() as usize;
    let buckets = (state.len() - 1) / per_bucket;
    if buckets == 0 {
        return Err(Error::invalid("run shorter than one sampling bucket"));
    }

    let mut noise: Box<dyn FnMut(f64) -> f64> = if noise_scale > 0.0 {
        let mut rng = match noise_seed {
            Some(seed) => ChaCha8Rng::seed_from_u64(seed),
            None => ChaCha8Rng::from_os_rng(),
        };
        let dist = LogNormal::new(0.0, noise_scale)
            .map_err(|e| Error::invalid(format!("noise distribution: {e}")))?;
        Box::new(move |v| v * dist.sample(&mut rng))
    } else {
        Box::new(|v| v)
    };

    let dt = state.step;
    let bucket_sum = |series: &[f64], b: usize| -> f64 {
        series[b * per_bucket..(b + 1) * per_bucket]
            .iter()
            .map(|v| dt * v)
            .sum()
    };

    let times: Vec<f64> = (0..buckets).map(|b| b as f64).collect();
    let mut incidence = Vec::with_capacity(buckets);
    let mut active = Vec::with_capacity(buckets);
    let mut recoveries = Vec::with_capacity(buckets);
    let mut deaths = Vec::with_capacity(buckets);
    for b in 0..buckets {
        incidence.push(noise(bucket_sum(&state.incidence, b)).max(0.0));
        active.push(noise(state.infected[b * per_bucket]).max(0.0));
        recoveries.push(noise(bucket_sum(&state.new_recoveries, b)).max(0.0));
        deaths.push(noise(bucket_sum(&state.new_deaths, b)).max(0.0));
    }
    let running = |v: &[f64]| -> Vec<f64> {
        v.iter()
            .scan(0.0, |acc, x| {
                *acc += x;
                Some(*acc)
            })
            .collect()
    };
    let cum_r = running(&recoveries);
    let cum_d = running(&deaths);

    let series = |values: Vec<f64>, label| TimeSeries::new(times.clone(), values, label);
    Ok(
        EpiDataset::new(series(incidence, SeriesLabel::Incidence)?, sampling.unit())
            .with(series(active, SeriesLabel::Active)?)
            .with(series(recoveries, SeriesLabel::NewRecoveries)?)
            .with(series(deaths, SeriesLabel::NewDeaths)?)
            .with(series(cum_r, SeriesLabel::CumulativeRecoveries)?)
            .with(series(cum_d, SeriesLabel::CumulativeDeaths)?),
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn classical(beta: f64, r0: f64, d0: f64) -> SimConfig {
        SimConfig {
            population: 1000.0,
            susceptible0: 990.0,
            infected0: 10.0,
            transmission: TransmissionProfile::constant(beta).unwrap(),
            removal: RemovalModel::Classical {
                recovery_rate: r0,
                death_rate: d0,
            },
            step: 0.1,
            horizon: 50.0,
        }
    }

    fn distributed(beta: f64, p0: f64) -> SimConfig {
        SimConfig {
            population: 1e6,
            susceptible0: 0.999e6,
            infected0: 1000.0,
            transmission: TransmissionProfile::constant(beta).unwrap(),
            removal: RemovalModel::Distributed {
                recovery: GammaParams::new(5.0, 3.0).unwrap(),
                death: GammaParams::new(5.0, 2.0).unwrap(),
                survival_probability: p0,
            },
            step: 0.1,
            horizon: 200.0,
        }
    }

    #[test]
    fn no_transmission_decays_geometrically() {
        let st = simulate_classical(&classical(0.0, 0.1, 0.02)).unwrap();
        assert!(st.susceptible.iter().all(|&s| s == 990.0));
        let factor: f64 = 1.0 - 0.12 * 0.1;
        for k in [1usize, 10, 100] {
            assert_relative_eq!(
                st.infected[k],
                10.0 * factor.powi(k as i32),
                max_relative = 1e-12
            );
        }
    }

    #[test]
    fn no_removal_keeps_r_and_d_zero() {
        let st = simulate_classical(&classical(0.3, 0.0, 0.0)).unwrap();
        assert!(st.recovered.iter().all(|&r| r == 0.0));
        assert!(st.dead.iter().all(|&d| d == 0.0));
        for k in 0..st.len() {
            assert_relative_eq!(
                st.susceptible[k] + st.infected[k],
                1000.0,
                max_relative = 1e-12
            );
        }
    }

    #[test]
    fn conservation_both_modes() {
        let st = simulate_classical(&classical(0.4, 0.1, 0.01)).unwrap();
        assert!(st.conservation_error() < 1e-9 * 1000.0);
        let st = simulate_distributed(&distributed(0.25, 0.97)).unwrap();
        assert!(
            st.conservation_error() < 1e-9 * 1e6,
            "{}",
            st.conservation_error()
        );
    }

    #[test]
    fn stability_warning() {
        let mut cfg = classical(0.1, 4.0, 2.0);
        cfg.step = 0.1;
        assert!(!simulate_classical(&cfg).unwrap().warnings.is_empty());
        assert!(simulate_classical(&classical(0.1, 0.1, 0.0))
            .unwrap()
            .warnings
            .is_empty());
    }

    #[test]
    fn full_survival_means_no_deaths() {
        let st = simulate_distributed(&distributed(0.25, 1.0)).unwrap();
        assert!(st.dead.iter().all(|&d| d == 0.0));
        assert!(st.new_deaths.iter().all(|&d| d == 0.0));
    }

    #[test]
    fn wrong_mode_and_bad_config_rejected() {
        assert!(simulate_distributed(&classical(0.1, 0.1, 0.0)).is_err());
        assert!(simulate_classical(&distributed(0.1, 0.9)).is_err());
        let mut cfg = classical(0.1, 0.1, 0.0);
        cfg.infected0 = 20.0;
        assert!(!cfg.diagnostics().is_empty());
        let mut cfg = classical(0.1, 0.1, 0.0);
        cfg.horizon = 0.05;
        assert!(simulate_classical(&cfg).is_err());
    }

    #[test]
    fn export_shapes_and_sums() {
        let mut cfg = distributed(0.25, 0.97);
        cfg.horizon = 70.0;
        let st = simulate_distributed(&cfg).unwrap();
        let weekly = export_dataset(&st, Sampling::Weekly, None, 0.0).unwrap();
        assert_eq!(weekly.incidence.len(), 10);
        assert_eq!(weekly.time_unit, TimeUnit::Weeks);

        let daily = export_dataset(&st, Sampling::Daily, None, 0.0).unwrap();
        assert_eq!(daily.incidence.len(), 70);
        let steps = st.len() - 1;
        let direct: f64 = st.new_recoveries[..steps].iter().map(|v| v * st.step).sum();
        assert_relative_eq!(
            daily.new_recoveries.as_ref().unwrap().total(),
            direct,
            max_relative = 1e-12
        );
        let direct: f64 = st.incidence[..steps].iter().map(|v| v * st.step).sum();
        assert_relative_eq!(daily.incidence.total(), direct, max_relative = 1e-12);
        assert_relative_eq!(
            daily.cumulative_recoveries.as_ref().unwrap().last_value(),
            daily.new_recoveries.as_ref().unwrap().total(),
            max_relative = 1e-12
        );
    }

    #[test]
    fn noisy_export_is_seeded() {
        let mut cfg = distributed(0.25, 0.97);
        cfg.horizon = 30.0;
        let st = simulate_distributed(&cfg).unwrap();
        let a = export_dataset(&st, Sampling::Daily, Some(7), 0.1).unwrap();
        let b = export_dataset(&st, Sampling::Daily, Some(7), 0.1).unwrap();
        let c = export_dataset(&st, Sampling::Daily, Some(8), 0.1).unwrap();
        assert_eq!(a, b);
        assert_ne!(a, c);
        let clean = export_dataset(&st, Sampling::Daily, Some(7), 0.0).unwrap();
        assert_ne!(a, clean);
    }
}
