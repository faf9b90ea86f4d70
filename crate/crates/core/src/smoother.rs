//! Nadaraya-Watson (local-constant) kernel regression of incidence.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::timeseries::TimeSeries;

/// Shifted denominators below this fall back to the nearest observation.
const DENOMINATOR_FLOOR: f64 = 1e-300;

/// `multiplier * n^(-1/5)`.
pub fn default_bandwidth(n: usize, multiplier: f64) -> Result<f64> {
    if n == 0 {
        return Err(Error::invalid("bandwidth needs at least one observation"));
    }
    if !(multiplier > 0.0) || !multiplier.is_finite() {
        return Err(Error::invalid(format!(
            "bandwidth multiplier {multiplier} must be positive"
        )));
    }
    Ok(multiplier * (n as f64).powf(-0.2))
}

/// Standard normal density.
pub fn gaussian_kernel(x: f64) -> f64 {
    (-0.5 * x * x).exp() / (2.0 * PI).sqrt()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KernelSmoother {
    points: TimeSeries,
    bandwidth: f64,
    bandwidth_multiplier: f64,
}

impl KernelSmoother {
    /// Uses the default `n^(-1/5)` bandwidth scaled by `multiplier`.
    pub fn new(points: TimeSeries, multiplier: f64) -> Result<Self> {
        let bandwidth = default_bandwidth(points.len(), multiplier)?;
        Ok(Self {
            points,
            bandwidth,
            bandwidth_multiplier: multiplier,
        })
    }

    pub fn with_bandwidth(points: TimeSeries, bandwidth: f64) -> Result<Self> {
        if !(bandwidth > 0.0) || !bandwidth.is_finite() {
            return Err(Error::invalid(format!(
                "bandwidth {bandwidth} must be positive"
            )));
        }
        Ok(Self {
            points,
            bandwidth,
            bandwidth_multiplier: 1.0,
        })
    }

    pub fn bandwidth(&self) -> f64 {
        self.bandwidth
    }

    pub fn bandwidth_multiplier(&self) -> f64 {
        self.bandwidth_multiplier
    }

    pub fn points(&self) -> &TimeSeries {
        &self.points
    }

    /// Normalized weights at `xi`, or `None` when the shifted denominator
    /// underflows.
    ///
    /// The kernel constant cancels in the ratio, so weights are formed from
    /// the exponent alone, shifted by its maximum.
    pub fn weights(&self, xi: f64) -> Option<Vec<f64>> {
        let h = self.bandwidth;
        let exponents: Vec<f64> = self
            .points
            .times()
            .iter()
            .map(|&t| {
                let u = (xi - t) / h;
                -0.5 * u * u
            })
            .collect();
        let shift = exponents.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let raw: Vec<f64> = exponents.iter().map(|e| (e - shift).exp()).collect();
        let denom: f64 = raw.iter().sum();
        if !(denom >= DENOMINATOR_FLOOR) {
            return None;
        }
        Some(raw.into_iter().map(|w| w / denom).collect())
    }

    /// Ĵ(ξ): Gaussian-weighted average of the observations.
    pub fn evaluate(&self, xi: f64) -> f64 {
        let h = self.bandwidth;
        let times = self.points.times();
        let values = self.points.values();

        let shift = times
            .iter()
            .map(|&t| {
                let u = (xi - t) / h;
                -0.5 * u * u
            })
            .fold(f64::NEG_INFINITY, f64::max);

        let mut num = 0.0;
        let mut den = 0.0;
        for (&t, &v) in times.iter().zip(values) {
            let u = (xi - t) / h;
            let w = (-0.5 * u * u - shift).exp();
            num += w * v;
            den += w;
        }
        if !(den >= DENOMINATOR_FLOOR) {
            return self.nearest_value(xi);
        }
        let est = num / den;
        // rounding can push a convex combination a hair outside its hull
        est.clamp(self.points.min_value(), self.points.max_value())
    }

    pub fn evaluate_grid(&self, grid: &[f64]) -> Vec<f64> {
        grid.iter().map(|&xi| self.evaluate(xi)).collect()
    }

    fn nearest_value(&self, xi: f64) -> f64 {
        let times = self.points.times();
        let idx = times.partition_point(|&t| t < xi);
        let pick = match idx {
            0 => 0,
            i if i == times.len() => i - 1,
            i if (times[i] - xi) < (xi - times[i - 1]) => i,
            i => i - 1,
        };
        self.points.values()[pick]
    }
}
