//! Classical constant-rate estimators `R_new = r0 I(t)` and `D_new = d0 I(t)`,
//! with the rate taken from a central tendency of a fitted gamma.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fitter::{self, FitResult, Target};
use crate::gammadist::GammaParams;
use crate::timeseries::{SeriesLabel, TimeSeries};

/// Survey sizes used for the band when none is given.
pub const DEFAULT_SURVEY_SIZE_RECOVERY: u32 = 120;
pub const DEFAULT_SURVEY_SIZE_DEATH: u32 = 31;

/// Recorded in every comparison report.
pub const BAND_CONVENTION: &str = "band rates are p/(T -/+ 3*sigma/sqrt(n)) with sigma the fitted \
gamma standard deviation and n the survey sample size; an artifact convention";

/// Tolerance for matching time stamps across series.
const STAMP_TOL: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Tendency {
    Mean,
    Median,
    Mode,
}

impl Tendency {
    pub const ALL: [Tendency; 3] = [Tendency::Mean, Tendency::Median, Tendency::Mode];

    pub fn of(self, gamma: &GammaParams) -> Result<f64> {
        match self {
            Tendency::Mean => Ok(gamma.mean()),
            Tendency::Median => Ok(gamma.median()),
            Tendency::Mode => gamma.mode(),
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Tendency::Mean => "mean",
            Tendency::Median => "median",
            Tendency::Mode => "mode",
        }
    }
}

impl std::str::FromStr for Tendency {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "mean" => Ok(Tendency::Mean),
            "median" => Ok(Tendency::Median),
            "mode" => Ok(Tendency::Mode),
            other => Err(Error::invalid(format!("unknown tendency {other:?}"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BaselineSpec {
    pub tendency: Tendency,
    pub target: Target,
    pub survival_probability: f64,
    pub gamma: GammaParams,
    pub survey_sample_size: Option<u32>,
}

impl BaselineSpec {
    fn tendency_value(&self) -> Result<f64> {
        let t = self.tendency.of(&self.gamma)?;
        if !(t > 0.0) {
            return Err(Error::invalid(format!(
                "{} of the gamma is {t}; constant rate undefined",
                self.tendency.name()
            )));
        }
        Ok(t)
    }

    fn label(&self) -> SeriesLabel {
        self.target.label()
    }
}

/// `p0 / T` for recoveries, `(1 - p0) / T` for deaths.
pub fn constant_rate(spec: &BaselineSpec) -> Result<f64> {
    Ok(spec.target.weight(spec.survival_probability) / spec.tendency_value()?)
}

fn scaled(active: &TimeSeries, rate: f64, label: SeriesLabel) -> Result<TimeSeries> {
    active.with_values(active.values().iter().map(|i| rate * i).collect(), label)
}

pub fn classical_curve(spec: &BaselineSpec, active: &TimeSeries) -> Result<TimeSeries> {
    scaled(active, constant_rate(spec)?, spec.label())
}

/// Lower and upper curves from perturbing the tendency by three standard
/// errors.
pub fn three_sigma_band(
    spec: &BaselineSpec,
    active: &TimeSeries,
) -> Result<(TimeSeries, TimeSeries)> {
    let n = spec
        .survey_sample_size
        .ok_or_else(|| Error::invalid("three-sigma band needs a survey sample size"))?;
    if n == 0 {
        return Err(Error::invalid("survey sample size must be positive"));
    }
    let centre = spec.tendency_value()?;
    let half = 3.0 * spec.gamma.variance().sqrt() / f64::from(n).sqrt();
    let near = centre - half;
    if !(near > 0.0) {
        return Err(Error::invalid(format!(
            "band denominator {near} is not positive; spread too large for {}",
            spec.tendency.name()
        )));
    }
    let weight = spec.target.weight(spec.survival_probability);
    let lower = scaled(active, weight / (centre + half), spec.label())?;
    let upper = scaled(active, weight / near, spec.label())?;
    Ok((lower, upper))
}

/// Indices `(i, j)` with `a.times()[i] == b.times()[j]` up to a tiny tolerance.
pub fn common_stamps(a: &TimeSeries, b: &TimeSeries) -> Vec<(usize, usize)> {
    let (ta, tb) = (a.times(), b.times());
    let (mut i, mut j) = (0, 0);
    let mut out = Vec::new();
    while i < ta.len() && j < tb.len() {
        let d = ta[i] - tb[j];
        if d.abs() <= STAMP_TOL * ta[i].abs().max(1.0) {
            out.push((i, j));
            i += 1;
            j += 1;
        } else if d < 0.0 {
            i += 1;
        } else {
            j += 1;
        }
    }
    out
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BaselineOutcome {
    pub tendency: Tendency,
    pub tendency_value: f64,
    pub rate: f64,
    pub sse: f64,
    pub curve: TimeSeries,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub band: Option<(TimeSeries, TimeSeries)>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComparisonReport {
    pub target: Target,
    pub common_times: Vec<f64>,
    pub distributed_sse: f64,
    pub baselines: Vec<BaselineOutcome>,
    /// Estimator names sorted by SSE, best first.
    pub ordering: Vec<String>,
    pub band_convention: String,
}

/// Scores the distributed fit and each baseline on the stamps shared by the
/// active and observed series.
pub fn compare(
    fit: &FitResult,
    baselines: &[BaselineSpec],
    active: &TimeSeries,
    observed: &TimeSeries,
) -> Result<ComparisonReport> {
    let pairs = common_stamps(active, observed);
    if pairs.is_empty() {
        return Err(Error::NoCommonGrid);
    }
    if fit.predicted.len() != observed.len() {
        return Err(Error::LengthMismatch {
            predicted: fit.predicted.len(),
            observed: observed.len(),
        });
    }
    let common_times: Vec<f64> = pairs.iter().map(|&(_, j)| observed.times()[j]).collect();
    let obs_common = TimeSeries::new(
        common_times.clone(),
        pairs.iter().map(|&(_, j)| observed.values()[j]).collect(),
        observed.label(),
    )?;
    let active_common = TimeSeries::new(
        common_times.clone(),
        pairs.iter().map(|&(i, _)| active.values()[i]).collect(),
        SeriesLabel::Active,
    )?;
    let fit_common: Vec<f64> = pairs
        .iter()
        .map(|&(_, j)| fit.predicted.values()[j])
        .collect();
    let distributed_sse = fitter::sse(&fit_common, &obs_common)?;

    let mut outcomes = Vec::with_capacity(baselines.len());
    for spec in baselines {
        let rate = constant_rate(spec)?;
        let curve = classical_curve(spec, &active_common)?;
        let sse = fitter::sse(curve.values(), &obs_common)?;
        let band = match spec.survey_sample_size {
            Some(_) => Some(three_sigma_band(spec, &active_common)?),
            None => None,
        };
        outcomes.push(BaselineOutcome {
            tendency: spec.tendency,
            tendency_value: spec.tendency_value()?,
            rate,
            sse,
            curve,
            band,
        });
    }

    let mut ranked: Vec<(String, f64)> =
        std::iter::once(("distributed".to_string(), distributed_sse))
            .chain(
                outcomes
                    .iter()
                    .map(|o| (o.tendency.name().to_string(), o.sse)),
            )
            .collect();
    ranked.sort_by(|a, b| a.1.total_cmp(&b.1));

    Ok(ComparisonReport {
        target: fit.target,
        common_times,
        distributed_sse,
        baselines: outcomes,
        ordering: ranked.into_iter().map(|(name, _)| name).collect(),
        band_convention: BAND_CONVENTION.to_string(),
    })
}
