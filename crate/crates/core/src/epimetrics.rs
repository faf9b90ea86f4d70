//! Survival probability, the distributed-rate basic reproduction number and
//! the herd-immunity threshold.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::gammadist::{GammaParams, DEFAULT_TAIL_MASS};

/// Transmission rate as a function of time since infection.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum TransmissionProfile {
    Constant {
        value: f64,
    },
    /// Piecewise-linear between knots, flat after the last one.
    Tabulated {
        knots: Vec<(f64, f64)>,
    },
}

impl TransmissionProfile {
    pub fn constant(value: f64) -> Result<Self> {
        if !(value >= 0.0) || !value.is_finite() {
            return Err(Error::invalid(format!(
                "transmission rate {value} must be non-negative"
            )));
        }
        Ok(Self::Constant { value })
    }

    pub fn tabulated(knots: Vec<(f64, f64)>) -> Result<Self> {
        let first = knots
            .first()
            .ok_or_else(|| Error::invalid("transmission table is empty"))?;
        if first.0 != 0.0 {
            return Err(Error::invalid("transmission table must start at eta = 0"));
        }
        for (i, &(eta, beta)) in knots.iter().enumerate() {
            if !(beta >= 0.0) || !beta.is_finite() || !eta.is_finite() {
                return Err(Error::invalid(format!(
                    "bad transmission knot ({eta}, {beta})"
                )));
            }
            if i > 0 && eta <= knots[i - 1].0 {
                return Err(Error::invalid(
                    "transmission table eta must increase strictly",
                ));
            }
        }
        Ok(Self::Tabulated { knots })
    }

    /// Reads an `eta,beta` CSV.
    pub fn from_csv(path: &Path) -> Result<Self> {
        let mut reader = csv::ReaderBuilder::new()
            .trim(csv::Trim::All)
            .from_path(path)
            .map_err(|e| Error::MalformedRow {
                line: 0,
                message: format!("{}: {e}", path.display()),
            })?;
        let mut knots = Vec::new();
        for rec in reader.records() {
            let rec = rec.map_err(|e| Error::MalformedRow {
                line: e.position().map_or(0, |p| p.line()),
                message: e.to_string(),
            })?;
            let line = rec.position().map_or(0, |p| p.line());
            let num = |i: usize| -> Result<f64> {
                rec.get(i)
                    .and_then(|s| s.parse().ok())
                    .ok_or_else(|| Error::MalformedRow {
                        line,
                        message: "expected numeric eta,beta".into(),
                    })
            };
            knots.push((num(0)?, num(1)?));
        }
        Self::tabulated(knots)
    }

    pub fn at(&self, eta: f64) -> f64 {
        match self {
            Self::Constant { value } => *value,
            Self::Tabulated { knots } => {
                let idx = knots.partition_point(|&(e, _)| e <= eta);
                if idx == 0 {
                    knots[0].1
                } else if idx == knots.len() {
                    knots[idx - 1].1
                } else {
                    let (e0, b0) = knots[idx - 1];
                    let (e1, b1) = knots[idx];
                    b0 + (b1 - b0) * (eta - e0) / (e1 - e0)
                }
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EpiContext {
    pub susceptible_initial: f64,
    pub population: f64,
    #[serde(default)]
    pub latent_period: f64,
}

impl EpiContext {
    pub fn new(susceptible_initial: f64, population: f64, latent_period: f64) -> Result<Self> {
        if !(population > 0.0) || !(susceptible_initial > 0.0) || susceptible_initial > population {
            return Err(Error::invalid(format!(
                "need 0 < S0 <= N, got S0={susceptible_initial} N={population}"
            )));
        }
        if !(latent_period >= 0.0) {
            return Err(Error::invalid(format!(
                "latent period {latent_period} must be >= 0"
            )));
        }
        Ok(Self {
            susceptible_initial,
            population,
            latent_period,
        })
    }

    pub fn susceptible_fraction(&self) -> f64 {
        self.susceptible_initial / self.population
    }
}

/// Fraction of closed cases that recovered.
pub fn estimate_survival_probability(recovered: f64, deaths: f64) -> Result<f64> {
    if !(recovered >= 0.0) || !(deaths >= 0.0) {
        return Err(Error::invalid("cumulative counts must be non-negative"));
    }
    let closed = recovered + deaths;
    if closed <= 0.0 {
        return Err(Error::invalid(
            "no closed cases to estimate survival probability",
        ));
    }
    Ok(recovered / closed)
}

/// `(S0/N) ∫_τ^U β(η) η (p0 f_r(η) + (1 - p0) f_d(η)) dη` by the trapezoidal rule
/// with step `dt`, where `U` is the later of the two kernels' 1e-12 tail
/// points.
pub fn basic_reproduction_number(
    ctx: &EpiContext,
    profile: &TransmissionProfile,
    recovery: &GammaParams,
    death: &GammaParams,
    p0: f64,
    dt: f64,
) -> Result<f64> {
    if !(dt > 0.0) || !dt.is_finite() {
        return Err(Error::invalid(format!(
            "quadrature step {dt} must be positive"
        )));
    }
    if !(0.0..=1.0).contains(&p0) {
        return Err(Error::invalid(format!(
            "survival probability {p0} out of [0,1]"
        )));
    }
    let upper = recovery
        .truncation_time(DEFAULT_TAIL_MASS)?
        .max(death.truncation_time(DEFAULT_TAIL_MASS)?);
    let lower = ctx.latent_period;
    if lower >= upper {
        return Ok(0.0);
    }

    let integrand = |eta: f64| {
        let removal = p0 * recovery.density(eta) + (1.0 - p0) * death.density(eta);
        let value = eta * removal;
        match profile {
            TransmissionProfile::Constant { .. } => value,
            TransmissionProfile::Tabulated { .. } => profile.at(eta) * value,
        }
    };

    let steps = ((upper - lower) / dt).floor() as usize;
    let mut sum = 0.0;
    let mut prev = integrand(lower);
    for k in 1..=steps {
        let cur = integrand(lower + k as f64 * dt);
        sum += 0.5 * dt * (prev + cur);
        prev = cur;
    }
    let tail_start = lower + steps as f64 * dt;
    if upper > tail_start {
        sum += 0.5 * (upper - tail_start) * (prev + integrand(upper));
    }

    let beta = match profile {
        TransmissionProfile::Constant { value } => *value,
        TransmissionProfile::Tabulated { .. } => 1.0,
    };
    Ok(beta * ctx.susceptible_fraction() * sum)
}

/// `1 - 1/R0`, floored at 0.
pub fn herd_immunity_threshold(r0: f64) -> Result<f64> {
    if !(r0 > 0.0) || !r0.is_finite() {
        return Err(Error::invalid(format!(
            "reproduction number {r0} must be positive"
        )));
    }
    Ok((1.0 - 1.0 / r0).max(0.0))
}
