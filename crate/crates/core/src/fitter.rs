//! Constrained gamma fitting of recovery and death kernels.
//!
//! A candidate kernel `f(·; a, b)` predicts new events at time `t` as the
//! convolution `w ∫_0^t f(t - η) Ĵ(η) dη`, where `w` is `p0` for recoveries and
//! `1 - p0` for deaths and Ĵ is the smoothed incidence. Every cell of a
//! regular (shape, scale) mesh whose mode `(a - 1) b` lies in the configured
//! window is scored by the sum of squared errors against the observed series,
//! and the best cell wins.
//!
//! The convolution uses the composite trapezoidal rule on nodes
//! `0, dt, 2dt, …` plus a final partial step ending at `t`.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::gammadist::{GammaParams, GammaSummary};
use crate::smoother::KernelSmoother;
use crate::timeseries::{SeriesLabel, TimeSeries, TimeUnit};

/// Number of best cells kept in `FitResult::surface_minima`.
pub const SURFACE_MINIMA: usize = 5;

/// Slack on the mode-window comparison so cells on the boundary survive rounding.
const MODE_SLACK: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Target {
    Recovery,
    Death,
}

impl Target {
    /// Fraction of infections ending in this outcome.
    pub fn weight(self, survival_probability: f64) -> f64 {
        match self {
            Target::Recovery => survival_probability,
            Target::Death => 1.0 - survival_probability,
        }
    }

    pub fn label(self) -> SeriesLabel {
        match self {
            Target::Recovery => SeriesLabel::NewRecoveries,
            Target::Death => SeriesLabel::NewDeaths,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitConfig {
    pub survival_probability: f64,
    pub shape_max: f64,
    pub scale_max: f64,
    pub shape_step: f64,
    pub scale_step: f64,
    pub mode_lower: f64,
    pub mode_upper: f64,
    pub quadrature_step: f64,
    pub target: Target,
}

impl FitConfig {
    /// Defaults for the given time unit. `survival_probability` still has to
    /// be supplied or estimated.
    pub fn defaults(target: Target, unit: TimeUnit, survival_probability: f64) -> Self {
        match unit {
            TimeUnit::Days => Self {
                survival_probability,
                shape_max: 20.0,
                scale_max: 20.0,
                shape_step: 0.05,
                scale_step: 0.05,
                mode_lower: 3.0,
                mode_upper: 40.0,
                quadrature_step: 0.25,
                target,
            },
            TimeUnit::Weeks => Self {
                survival_probability,
                shape_max: 40.0,
                scale_max: 2.0,
                shape_step: 0.05,
                scale_step: 0.005,
                mode_lower: 0.5,
                mode_upper: 4.0,
                quadrature_step: 0.05,
                target,
            },
        }
    }

    /// One message per offending field; empty when the config is usable.
    pub fn diagnostics(&self) -> Vec<String> {
        let mut out = Vec::new();
        let p0 = self.survival_probability;
        if !(0.0..=1.0).contains(&p0) {
            out.push(format!("survival_probability out of [0,1]: {p0}"));
        }
        for (name, v) in [
            ("shape_max", self.shape_max),
            ("scale_max", self.scale_max),
            ("shape_step", self.shape_step),
            ("scale_step", self.scale_step),
            ("quadrature_step", self.quadrature_step),
        ] {
            if !(v > 0.0 && v.is_finite()) {
                out.push(format!("{name} must be positive: {v}"));
            }
        }
        if !(self.mode_lower >= 0.0) {
            out.push(format!(
                "mode_lower must be non-negative: {}",
                self.mode_lower
            ));
        }
        if !(self.mode_lower < self.mode_upper) {
            out.push(format!(
                "mode_lower must be below mode_upper: [{}, {}]",
                self.mode_lower, self.mode_upper
            ));
        }
        out
    }

    pub fn validate(&self) -> Result<()> {
        match self.diagnostics().into_iter().next() {
            None => Ok(()),
            Some(msg) => Err(Error::InvalidParameter(msg)),
        }
    }

    fn axis(max: f64, step: f64) -> Vec<f64> {
        let n = (max / step + 1e-9).floor() as usize;
        // snap to ten decimals so 117 * 0.05 reports as 5.85
        (1..=n)
            .map(|i| (i as f64 * step * 1e10).round() / 1e10)
            .collect()
    }

    /// Mesh cells satisfying `a > 1` and the mode window, shape-major.
    pub fn feasible_cells(&self) -> Vec<GammaParams> {
        let scales = Self::axis(self.scale_max, self.scale_step);
        Self::axis(self.shape_max, self.shape_step)
            .into_iter()
            .filter(|&a| a > 1.0)
            .flat_map(|a| {
                scales
                    .iter()
                    .map(move |&b| GammaParams { shape: a, scale: b })
            })
            .filter(|p| self.mode_feasible(p))
            .collect()
    }

    pub fn mode_feasible(&self, p: &GammaParams) -> bool {
        let mode = (p.shape - 1.0) * p.scale;
        p.shape > 1.0
            && mode >= self.mode_lower - MODE_SLACK
            && mode <= self.mode_upper + MODE_SLACK
    }
}

/// Trapezoidal quadrature of the incidence convolution at a fixed set of
/// evaluation times.
///
/// Ĵ is evaluated once per node; the kernel enters only through its values at
/// the distinct lags `t - η`, so scoring a new (a, b) costs one density
/// evaluation per distinct lag plus a weighted sum.
#[derive(Debug, Clone)]
pub struct ConvolutionPlan {
    lags: Vec<f64>,
    offsets: Vec<usize>,
    lag_index: Vec<u32>,
    coef: Vec<f64>,
}

impl ConvolutionPlan {
    pub fn new(smoother: &KernelSmoother, times: &[f64], dt: f64) -> Self {
        assert!(
            dt > 0.0 && dt.is_finite(),
            "quadrature step must be positive"
        );

        let t_max = times.iter().copied().fold(0.0, f64::max);
        let n_grid = (t_max / dt).floor() as usize + 1;
        let grid: Vec<f64> = (0..=n_grid).map(|k| k as f64 * dt).collect();
        let j_grid = smoother.evaluate_grid(&grid);

        let mut terms: Vec<Vec<(f64, f64)>> = Vec::with_capacity(times.len());
        for &t in times {
            let mut row = Vec::new();
            if t > 0.0 {
                let ratio = t / dt;
                let mut full = ratio.floor() as usize;
                if (ratio - ratio.round()).abs() < 1e-9 {
                    full = ratio.round() as usize;
                }
                let remainder = t - full as f64 * dt;
                let has_partial = remainder > 1e-12 * dt.max(t);
                let mut coefs = vec![0.0; full + 1];
                for k in 0..full {
                    coefs[k] += 0.5 * dt;
                    coefs[k + 1] += 0.5 * dt;
                }
                for (k, c) in coefs.iter().enumerate() {
                    if *c != 0.0 {
                        row.push((t - grid[k], c * j_grid[k]));
                    }
                }
                if has_partial {
                    // node `full*dt` gains half the partial width, node `t` the other half
                    let half = 0.5 * remainder;
                    row.push((t - grid[full], half * j_grid[full]));
                    row.push((0.0, half * smoother.evaluate(t)));
                }
            }
            terms.push(row);
        }

        let mut lags: Vec<f64> = terms.iter().flatten().map(|&(lag, _)| lag).collect();
        lags.sort_by(|a, b| a.partial_cmp(b).expect("finite lags"));
        lags.dedup();

        let mut offsets = Vec::with_capacity(times.len() + 1);
        let mut lag_index = Vec::new();
        let mut coef = Vec::new();
        offsets.push(0);
        for row in terms {
            for (lag, c) in row {
                let idx = lags.partition_point(|&l| l < lag);
                lag_index.push(idx as u32);
                coef.push(c);
            }
            offsets.push(lag_index.len());
        }
        Self {
            lags,
            offsets,
            lag_index,
            coef,
        }
    }

    pub fn len(&self) -> usize {
        self.offsets.len() - 1
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// `∫_0^t f(t - η) Ĵ(η) dη` at every planned time.
    pub fn convolve(&self, kernel: &GammaParams) -> Vec<f64> {
        let table: Vec<f64> = self.lags.iter().map(|&l| kernel.density(l)).collect();
        self.offsets
            .windows(2)
            .map(|w| {
                (w[0]..w[1])
                    .map(|i| self.coef[i] * table[self.lag_index[i] as usize])
                    .sum()
            })
            .collect()
    }

    /// Weighted convolution scored against `observed` without allocating the
    /// prediction vector.
    fn sse_against(&self, kernel: &GammaParams, weight: f64, observed: &[f64]) -> f64 {
        let table: Vec<f64> = self.lags.iter().map(|&l| kernel.density(l)).collect();
        self.offsets
            .windows(2)
            .zip(observed)
            .map(|(w, &obs)| {
                let conv: f64 = (w[0]..w[1])
                    .map(|i| self.coef[i] * table[self.lag_index[i] as usize])
                    .sum();
                let r = weight * conv - obs;
                r * r
            })
            .sum()
    }
}

/// Predicted new recoveries at `t` for kernel `p`. Panics if `dt <= 0`.
pub fn predicted_new_recoveries(
    smoother: &KernelSmoother,
    p: &GammaParams,
    p0: f64,
    t: f64,
    dt: f64,
) -> f64 {
    Target::Recovery.weight(p0) * ConvolutionPlan::new(smoother, &[t], dt).convolve(p)[0]
}

/// Predicted new deaths at `t` for kernel `p`. Panics if `dt <= 0`.
pub fn predicted_new_deaths(
    smoother: &KernelSmoother,
    p: &GammaParams,
    p0: f64,
    t: f64,
    dt: f64,
) -> f64 {
    Target::Death.weight(p0) * ConvolutionPlan::new(smoother, &[t], dt).convolve(p)[0]
}

/// Sum of squared residuals.
pub fn sse(predicted: &[f64], observed: &TimeSeries) -> Result<f64> {
    if predicted.len() != observed.len() {
        return Err(Error::LengthMismatch {
            predicted: predicted.len(),
            observed: observed.len(),
        });
    }
    Ok(predicted
        .iter()
        .zip(observed.values())
        .map(|(p, o)| (p - o) * (p - o))
        .sum())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SurfaceCell {
    pub shape: f64,
    pub scale: f64,
    pub sse: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitResult {
    pub target: Target,
    pub survival_probability: f64,
    pub optimal: GammaParams,
    pub sse: f64,
    pub predicted: TimeSeries,
    pub cumulative_predicted: TimeSeries,
    pub summary: GammaSummary,
    pub surface_minima: Vec<SurfaceCell>,
    pub evaluated_cells: usize,
}

/// Running sum of `values[j] * Δ_j`, with `Δ_j = t_j - t_{j-1}` and the first
/// spacing copied from the second (1 for a single point).
pub fn cumulative(series: &TimeSeries, label: SeriesLabel) -> Result<TimeSeries> {
    let t = series.times();
    let first_gap = if t.len() > 1 { t[1] - t[0] } else { 1.0 };
    let mut acc = 0.0;
    let values = series
        .values()
        .iter()
        .enumerate()
        .map(|(j, &v)| {
            let gap = if j == 0 { first_gap } else { t[j] - t[j - 1] };
            acc += v * gap;
            acc
        })
        .collect();
    series.with_values(values, label)
}

/// SSE of every feasible cell, in `FitConfig::feasible_cells` order.
pub fn sse_surface(
    smoother: &KernelSmoother,
    observed: &TimeSeries,
    cfg: &FitConfig,
) -> Result<Vec<SurfaceCell>> {
    cfg.validate()?;
    let cells = cfg.feasible_cells();
    if cells.is_empty() {
        return Err(Error::EmptyFeasibleRegion);
    }
    let plan = ConvolutionPlan::new(smoother, observed.times(), cfg.quadrature_step);
    let weight = cfg.target.weight(cfg.survival_probability);
    let obs = observed.values();
    // collect keeps cell order, so the result does not depend on scheduling
    Ok(cells
        .par_iter()
        .map(|p| SurfaceCell {
            shape: p.shape,
            scale: p.scale,
            sse: plan.sse_against(p, weight, obs),
        })
        .collect())
}

/// Grid search over the feasible mesh on the current rayon pool.
///
/// Ties go to the smallest shape, then the smallest scale.
pub fn fit(smoother: &KernelSmoother, observed: &TimeSeries, cfg: &FitConfig) -> Result<FitResult> {
    let surface = sse_surface(smoother, observed, cfg)?;

    let mut best = 0;
    for (i, cell) in surface.iter().enumerate() {
        if cell.sse < surface[best].sse || surface[best].sse.is_nan() {
            best = i;
        }
    }
    let winner = surface[best];
    let optimal = GammaParams::new(winner.shape, winner.scale)?;

    let mut order: Vec<usize> = (0..surface.len()).collect();
    order.sort_by(|&i, &j| surface[i].sse.total_cmp(&surface[j].sse).then(i.cmp(&j)));
    let surface_minima = order
        .iter()
        .take(SURFACE_MINIMA)
        .map(|&i| surface[i])
        .collect();

    let mut result = evaluate_kernel(
        smoother,
        observed,
        &optimal,
        cfg.target,
        cfg.survival_probability,
        cfg.quadrature_step,
    )?;
    // keep the search's own score so `sse` is bit-identical to the surface
    result.sse = winner.sse;
    result.surface_minima = surface_minima;
    result.evaluated_cells = surface.len();
    Ok(result)
}

/// Scores one kernel without searching; the result has a single surface cell.
pub fn evaluate_kernel(
    smoother: &KernelSmoother,
    observed: &TimeSeries,
    kernel: &GammaParams,
    target: Target,
    survival_probability: f64,
    quadrature_step: f64,
) -> Result<FitResult> {
    if !(quadrature_step > 0.0) {
        return Err(Error::invalid(format!(
            "quadrature step {quadrature_step} must be positive"
        )));
    }
    let weight = target.weight(survival_probability);
    let plan = ConvolutionPlan::new(smoother, observed.times(), quadrature_step);
    let values: Vec<f64> = plan
        .convolve(kernel)
        .into_iter()
        .map(|c| (weight * c).max(0.0))
        .collect();
    let sse = sse(&values, observed)?;
    let predicted = observed.with_values(values, target.label())?;
    let cumulative_label = match target {
        Target::Recovery => SeriesLabel::CumulativeRecoveries,
        Target::Death => SeriesLabel::CumulativeDeaths,
    };
    let cumulative_predicted = cumulative(&predicted, cumulative_label)?;

    Ok(FitResult {
        target,
        survival_probability,
        optimal: *kernel,
        sse,
        predicted,
        cumulative_predicted,
        summary: kernel.summary()?,
        surface_minima: vec![SurfaceCell {
            shape: kernel.shape,
            scale: kernel.scale,
            sse,
        }],
        evaluated_cells: 1,
    })
}

/// `fit` on a dedicated pool of `workers` threads.
pub fn fit_with_workers(
    smoother: &KernelSmoother,
    observed: &TimeSeries,
    cfg: &FitConfig,
    workers: usize,
) -> Result<FitResult> {
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers.max(1))
        .build()
        .map_err(|e| Error::invalid(format!("worker pool: {e}")))?;
    pool.install(|| fit(smoother, observed, cfg))
}

/// Serialized fit with the observed series alongside for plotting.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitReport {
    #[serde(flatten)]
    pub result: FitResult,
    pub observed: TimeSeries,
}

pub fn fit_report(result: &FitResult, observed: &TimeSeries) -> FitReport {
    FitReport {
        result: result.clone(),
        observed: observed.clone(),
    }
}

impl FitReport {
    /// `t,observed,predicted` rows.
    pub fn to_csv_string(&self) -> String {
        let mut out = String::from("t,observed,predicted,cumulative_predicted\n");
        for ((t, o), (p, c)) in self.observed.iter().zip(
            self.result
                .predicted
                .values()
                .iter()
                .zip(self.result.cumulative_predicted.values()),
        ) {
            out.push_str(&format!("{t},{o},{p},{c}\n"));
        }
        out
    }
}
