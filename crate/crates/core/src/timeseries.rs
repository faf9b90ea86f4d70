//! Epidemiological series: data model, CSV ingestion, dataset manifests and
//! windowing.
//!
//! Series never need to share a time grid. Incidence can be daily while
//! recoveries are reported every few days; the only requirement is that all
//! members of a dataset live on the same window.

use std::fmt;
use std::fs;
use std::path::{Path, PathBuf};

use chrono::NaiveDate;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// What a series measures.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SeriesLabel {
    Incidence,
    Active,
    NewRecoveries,
    NewDeaths,
    CumulativeRecoveries,
    CumulativeDeaths,
}

impl fmt::Display for SeriesLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            SeriesLabel::Incidence => "incidence",
            SeriesLabel::Active => "active",
            SeriesLabel::NewRecoveries => "new_recoveries",
            SeriesLabel::NewDeaths => "new_deaths",
            SeriesLabel::CumulativeRecoveries => "cumulative_recoveries",
            SeriesLabel::CumulativeDeaths => "cumulative_deaths",
        };
        f.write_str(s)
    }
}

/// Unit of the time axis. Metadata only; every computation is unit-agnostic.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TimeUnit {
    #[default]
    Days,
    Weeks,
}

/// Irregularly sampled non-negative observations.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TimeSeries {
    times: Vec<f64>,
    values: Vec<f64>,
    label: SeriesLabel,
}

impl TimeSeries {
    /// Validates strictly increasing finite times and non-negative finite values.
    pub fn new(times: Vec<f64>, values: Vec<f64>, label: SeriesLabel) -> Result<Self> {
        if times.len() != values.len() {
            return Err(Error::InvalidSeries(format!(
                "{label}: {} times but {} values",
                times.len(),
                values.len()
            )));
        }
        if times.is_empty() {
            return Err(Error::InvalidSeries(format!("{label}: no observations")));
        }
        for (i, (&t, &v)) in times.iter().zip(&values).enumerate() {
            if !t.is_finite() || !v.is_finite() {
                return Err(Error::InvalidSeries(format!(
                    "{label}: non-finite entry at index {i}"
                )));
            }
            if v < 0.0 {
                return Err(Error::InvalidSeries(format!(
                    "{label}: negative value at index {i}"
                )));
            }
            if i > 0 && t <= times[i - 1] {
                return Err(Error::InvalidSeries(format!(
                    "{label}: times not strictly increasing at index {i}"
                )));
            }
        }
        Ok(Self {
            times,
            values,
            label,
        })
    }

    pub fn times(&self) -> &[f64] {
        &self.times
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn label(&self) -> SeriesLabel {
        self.label
    }

    pub fn len(&self) -> usize {
        self.times.len()
    }

    /// Always false for a constructed series; kept for API symmetry with `len`.
    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (f64, f64)> + '_ {
        self.times.iter().copied().zip(self.values.iter().copied())
    }

    pub fn first_time(&self) -> f64 {
        self.times[0]
    }

    pub fn last_time(&self) -> f64 {
        self.times[self.times.len() - 1]
    }

    pub fn last_value(&self) -> f64 {
        self.values[self.values.len() - 1]
    }

    pub fn min_value(&self) -> f64 {
        self.values.iter().copied().fold(f64::INFINITY, f64::min)
    }

    pub fn max_value(&self) -> f64 {
        self.values
            .iter()
            .copied()
            .fold(f64::NEG_INFINITY, f64::max)
    }

    pub fn total(&self) -> f64 {
        self.values.iter().sum()
    }

    /// Same grid, new values. Values are re-validated.
    pub fn with_values(&self, values: Vec<f64>, label: SeriesLabel) -> Result<Self> {
        TimeSeries::new(self.times.clone(), values, label)
    }

    /// Points with `lo <= t <= hi`, shifted by `-shift`. `None` when nothing survives.
    fn filtered(&self, lo: f64, hi: f64, shift: f64) -> Option<Self> {
        let (times, values): (Vec<f64>, Vec<f64>) = self
            .iter()
            .filter(|&(t, _)| t >= lo && t <= hi)
            .map(|(t, v)| (t - shift, v))
            .unzip();
        if times.is_empty() {
            return None;
        }
        Some(Self {
            times,
            values,
            label: self.label,
        })
    }

    /// Renders as `t,value` CSV. Floats use the shortest round-trip form.
    pub fn to_csv_string(&self) -> String {
        let mut out = String::from("t,value\n");
        for (t, v) in self.iter() {
            out.push_str(&format!("{t},{v}\n"));
        }
        out
    }

    pub fn write_csv(&self, path: &Path) -> Result<()> {
        fs::write(path, self.to_csv_string()).map_err(|source| Error::Io {
            path: path.to_path_buf(),
            source,
        })
    }
}

enum RawTimes {
    Numeric(Vec<f64>),
    Dates(Vec<NaiveDate>),
}

struct RawSeries {
    times: RawTimes,
    values: Vec<f64>,
    lines: Vec<u64>,
}

fn read_raw(text: &str) -> Result<RawSeries> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .trim(csv::Trim::All)
        .from_reader(text.as_bytes());

    let headers = reader.headers().map_err(|e| Error::MalformedRow {
        line: 1,
        message: e.to_string(),
    })?;
    if headers.len() != 2 || &headers[0] != "t" || &headers[1] != "value" {
        return Err(Error::MalformedRow {
            line: 1,
            message: "expected header \"t,value\"".into(),
        });
    }

    let mut numeric = Vec::new();
    let mut dates = Vec::new();
    let mut values = Vec::new();
    let mut lines = Vec::new();

    for record in reader.records() {
        let record = record.map_err(|e| Error::MalformedRow {
            line: e.position().map_or(0, |p| p.line()),
            message: e.to_string(),
        })?;
        let line = record.position().map_or(0, |p| p.line());
        if record.len() != 2 {
            return Err(Error::MalformedRow {
                line,
                message: format!("expected 2 fields, found {}", record.len()),
            });
        }
        let t_field = &record[0];
        let v_field = &record[1];

        let value: f64 = v_field.parse().map_err(|_| Error::MalformedRow {
            line,
            message: format!("value {v_field:?} is not a number"),
        })?;
        if !value.is_finite() {
            return Err(Error::MalformedRow {
                line,
                message: "non-finite value".into(),
            });
        }

        if let Ok(t) = t_field.parse::<f64>() {
            if !dates.is_empty() || !t.is_finite() {
                return Err(Error::MalformedRow {
                    line,
                    message: format!("time {t_field:?} mixes with date rows or is not finite"),
                });
            }
            numeric.push(t);
        } else if let Ok(d) = NaiveDate::parse_from_str(t_field, "%Y-%m-%d") {
            if !numeric.is_empty() {
                return Err(Error::MalformedRow {
                    line,
                    message: "date row in a numeric-time file".into(),
                });
            }
            dates.push(d);
        } else {
            return Err(Error::MalformedRow {
                line,
                message: format!("time {t_field:?} is neither a number nor an ISO date"),
            });
        }

        if value < 0.0 {
            return Err(Error::NegativeValue { line });
        }
        values.push(value);
        lines.push(line);
    }

    if values.is_empty() {
        return Err(Error::MalformedRow {
            line: 2,
            message: "no data rows".into(),
        });
    }

    let times = if dates.is_empty() {
        RawTimes::Numeric(numeric)
    } else {
        RawTimes::Dates(dates)
    };
    Ok(RawSeries {
        times,
        values,
        lines,
    })
}

impl RawSeries {
    fn earliest_date(&self) -> Option<NaiveDate> {
        match &self.times {
            RawTimes::Dates(d) => d.iter().min().copied(),
            RawTimes::Numeric(_) => None,
        }
    }

    fn into_series(self, label: SeriesLabel, epoch: Option<NaiveDate>) -> Result<TimeSeries> {
        let times: Vec<f64> = match self.times {
            RawTimes::Numeric(t) => t,
            RawTimes::Dates(d) => {
                let origin = epoch
                    .or_else(|| d.iter().min().copied())
                    .expect("date column is nonempty");
                d.iter()
                    .map(|day| (*day - origin).num_days() as f64)
                    .collect()
            }
        };
        for i in 1..times.len() {
            if times[i] <= times[i - 1] {
                return Err(Error::NonMonotoneTimes {
                    line: self.lines[i],
                });
            }
        }
        Ok(TimeSeries {
            times,
            values: self.values,
            label,
        })
    }
}

fn read_file(path: &Path) -> Result<String> {
    fs::read_to_string(path).map_err(|source| Error::Io {
        path: path.to_path_buf(),
        source,
    })
}

/// Parses `t,value` CSV text. ISO dates become day offsets from the earliest
/// date in the text.
pub fn parse_csv_str(text: &str, label: SeriesLabel) -> Result<TimeSeries> {
    read_raw(text)?.into_series(label, None)
}

/// Reads and validates a `t,value` CSV file.
pub fn parse_csv(path: &Path, label: SeriesLabel) -> Result<TimeSeries> {
    parse_csv_str(&read_file(path)?, label)
}

/// A set of series observed over a common window.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpiDataset {
    pub incidence: TimeSeries,
    pub active: Option<TimeSeries>,
    pub new_recoveries: Option<TimeSeries>,
    pub new_deaths: Option<TimeSeries>,
    pub cumulative_recoveries: Option<TimeSeries>,
    pub cumulative_deaths: Option<TimeSeries>,
    window: (f64, f64),
    /// Position of local t=0 on the original time axis.
    origin: f64,
    pub time_unit: TimeUnit,
}

impl EpiDataset {
    /// Builds a dataset whose window spans every member series.
    pub fn new(incidence: TimeSeries, time_unit: TimeUnit) -> Self {
        let window = (incidence.first_time(), incidence.last_time());
        Self {
            incidence,
            active: None,
            new_recoveries: None,
            new_deaths: None,
            cumulative_recoveries: None,
            cumulative_deaths: None,
            window,
            origin: 0.0,
            time_unit,
        }
    }

    /// Attaches an optional series, widening the window if needed.
    pub fn with(mut self, series: TimeSeries) -> Self {
        self.window.0 = self.window.0.min(series.first_time());
        self.window.1 = self.window.1.max(series.last_time());
        match series.label() {
            SeriesLabel::Incidence => self.incidence = series,
            SeriesLabel::Active => self.active = Some(series),
            SeriesLabel::NewRecoveries => self.new_recoveries = Some(series),
            SeriesLabel::NewDeaths => self.new_deaths = Some(series),
            SeriesLabel::CumulativeRecoveries => self.cumulative_recoveries = Some(series),
            SeriesLabel::CumulativeDeaths => self.cumulative_deaths = Some(series),
        }
        self
    }

    pub fn window(&self) -> (f64, f64) {
        self.window
    }

    pub fn origin(&self) -> f64 {
        self.origin
    }

    pub fn members(&self) -> impl Iterator<Item = &TimeSeries> {
        std::iter::once(&self.incidence).chain(
            [
                &self.active,
                &self.new_recoveries,
                &self.new_deaths,
                &self.cumulative_recoveries,
                &self.cumulative_deaths,
            ]
            .into_iter()
            .flatten(),
        )
    }

    pub fn series(&self, label: SeriesLabel) -> Option<&TimeSeries> {
        match label {
            SeriesLabel::Incidence => Some(&self.incidence),
            SeriesLabel::Active => self.active.as_ref(),
            SeriesLabel::NewRecoveries => self.new_recoveries.as_ref(),
            SeriesLabel::NewDeaths => self.new_deaths.as_ref(),
            SeriesLabel::CumulativeRecoveries => self.cumulative_recoveries.as_ref(),
            SeriesLabel::CumulativeDeaths => self.cumulative_deaths.as_ref(),
        }
    }

    /// Restricts every member to `[t0, t1]` and rebases so the window starts at 0.
    ///
    /// `t0` and `t1` are positions on the original time axis, so applying the
    /// same window twice is the same as applying it once. Optional series with
    /// no points inside the window are dropped.
    pub fn restrict_window(&self, t0: f64, t1: f64) -> Result<EpiDataset> {
        if !(t0 < t1) || !t0.is_finite() || !t1.is_finite() {
            return Err(Error::invalid(format!(
                "window ({t0}, {t1}) must satisfy t0 < t1"
            )));
        }
        let lo = t0 - self.origin;
        let hi = t1 - self.origin;
        let incidence = self
            .incidence
            .filtered(lo, hi, lo)
            .ok_or(Error::EmptyWindow)?;
        let keep = |s: &Option<TimeSeries>| s.as_ref().and_then(|s| s.filtered(lo, hi, lo));
        Ok(EpiDataset {
            incidence,
            active: keep(&self.active),
            new_recoveries: keep(&self.new_recoveries),
            new_deaths: keep(&self.new_deaths),
            cumulative_recoveries: keep(&self.cumulative_recoveries),
            cumulative_deaths: keep(&self.cumulative_deaths),
            window: (0.0, hi - lo),
            origin: t0,
            time_unit: self.time_unit,
        })
    }
}

/// JSON manifest naming the files of a dataset.
///
/// Relative paths resolve against the manifest's directory. Date-stamped files
/// share one epoch: `epoch` when given, otherwise the earliest date over all
/// files.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DatasetManifest {
    pub incidence: PathBuf,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub active: Option<PathBuf>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub new_recoveries: Option<PathBuf>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub new_deaths: Option<PathBuf>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub cumulative_recoveries: Option<PathBuf>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub cumulative_deaths: Option<PathBuf>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub window: Option<(f64, f64)>,
    #[serde(default)]
    pub time_unit: TimeUnit,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub epoch: Option<NaiveDate>,
}

impl DatasetManifest {
    pub fn read(path: &Path) -> Result<Self> {
        Ok(serde_json::from_str(&read_file(path)?)?)
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        let text = serde_json::to_string_pretty(self)?;
        fs::write(path, text + "\n").map_err(|source| Error::Io {
            path: path.to_path_buf(),
            source,
        })
    }

    fn entries(&self) -> Vec<(SeriesLabel, &PathBuf)> {
        let mut out = vec![(SeriesLabel::Incidence, &self.incidence)];
        let optional = [
            (SeriesLabel::Active, &self.active),
            (SeriesLabel::NewRecoveries, &self.new_recoveries),
            (SeriesLabel::NewDeaths, &self.new_deaths),
            (
                SeriesLabel::CumulativeRecoveries,
                &self.cumulative_recoveries,
            ),
            (SeriesLabel::CumulativeDeaths, &self.cumulative_deaths),
        ];
        out.extend(
            optional
                .into_iter()
                .filter_map(|(l, p)| p.as_ref().map(|p| (l, p))),
        );
        out
    }

    /// Loads the dataset, resolving paths relative to `base_dir`.
    pub fn load(&self, base_dir: &Path) -> Result<EpiDataset> {
        let mut raws = Vec::new();
        for (label, rel) in self.entries() {
            let path = if rel.is_absolute() {
                rel.clone()
            } else {
                base_dir.join(rel)
            };
            raws.push((label, read_raw(&read_file(&path)?)?));
        }
        let epoch = self
            .epoch
            .or_else(|| raws.iter().filter_map(|(_, r)| r.earliest_date()).min());

        let mut series = raws
            .into_iter()
            .map(|(label, raw)| raw.into_series(label, epoch));
        let incidence = series.next().expect("incidence entry always present")?;
        let mut ds = EpiDataset::new(incidence, self.time_unit);
        for s in series {
            ds = ds.with(s?);
        }
        match self.window {
            Some((t0, t1)) => ds.restrict_window(t0, t1),
            None => Ok(ds),
        }
    }
}

/// Writes every member as `<label>.csv` plus `manifest.json` into `dir`.
/// Returns the manifest path.
pub fn write_dataset(ds: &EpiDataset, dir: &Path) -> Result<PathBuf> {
    fs::create_dir_all(dir).map_err(|source| Error::Io {
        path: dir.to_path_buf(),
        source,
    })?;
    let mut manifest = DatasetManifest {
        incidence: PathBuf::new(),
        active: None,
        new_recoveries: None,
        new_deaths: None,
        cumulative_recoveries: None,
        cumulative_deaths: None,
        window: None,
        time_unit: ds.time_unit,
        epoch: None,
    };
    for s in ds.members() {
        let name = PathBuf::from(format!("{}.csv", s.label()));
        s.write_csv(&dir.join(&name))?;
        let slot = match s.label() {
            SeriesLabel::Incidence => {
                manifest.incidence = name;
                continue;
            }
            SeriesLabel::Active => &mut manifest.active,
            SeriesLabel::NewRecoveries => &mut manifest.new_recoveries,
            SeriesLabel::NewDeaths => &mut manifest.new_deaths,
            SeriesLabel::CumulativeRecoveries => &mut manifest.cumulative_recoveries,
            SeriesLabel::CumulativeDeaths => &mut manifest.cumulative_deaths,
        };
        *slot = Some(name);
    }
    let path = dir.join("manifest.json");
    manifest.write(&path)?;
    Ok(path)
}

/// Reads a manifest file and loads its dataset.
pub fn load_dataset(manifest_path: &Path) -> Result<EpiDataset> {
    let manifest = DatasetManifest::read(manifest_path)?;
    let base = manifest_path.parent().unwrap_or_else(|| Path::new("."));
    manifest.load(base)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn series(times: &[f64], label: SeriesLabel) -> TimeSeries {
        TimeSeries::new(times.to_vec(), vec![1.0; times.len()], label).unwrap()
    }

    #[test]
    fn parses_numeric_rows() {
        let ts = parse_csv_str("t,value\n0,5\n1,7\n2,4\n", SeriesLabel::Incidence).unwrap();
        assert_eq!(ts.times(), &[0.0, 1.0, 2.0]);
        assert_eq!(ts.values(), &[5.0, 7.0, 4.0]);
    }

    #[test]
    fn dates_become_day_offsets() {
        let ts = parse_csv_str(
            "t,value\n2020-01-23,10\n2020-01-25,12\n",
            SeriesLabel::Incidence,
        )
        .unwrap();
        assert_eq!(ts.times(), &[0.0, 2.0]);
    }

    #[test]
    fn negative_value_reports_line() {
        let err = parse_csv_str("t,value\n0,5\n1,-3\n", SeriesLabel::Incidence).unwrap_err();
        assert!(matches!(err, Error::NegativeValue { line: 3 }), "{err:?}");
    }

    #[test]
    fn non_monotone_and_malformed_rows() {
        let err = parse_csv_str("t,value\n0,5\n2,1\n1,1\n", SeriesLabel::Active).unwrap_err();
        assert!(
            matches!(err, Error::NonMonotoneTimes { line: 4 }),
            "{err:?}"
        );

        let err = parse_csv_str("t,value\n0,5\nx,1\n", SeriesLabel::Active).unwrap_err();
        assert!(
            matches!(err, Error::MalformedRow { line: 3, .. }),
            "{err:?}"
        );

        let err = parse_csv_str("time,count\n0,5\n", SeriesLabel::Active).unwrap_err();
        assert!(
            matches!(err, Error::MalformedRow { line: 1, .. }),
            "{err:?}"
        );

        let err = parse_csv_str("t,value\n", SeriesLabel::Active).unwrap_err();
        assert!(matches!(err, Error::MalformedRow { .. }), "{err:?}");
    }

    #[test]
    fn fractional_times_allowed() {
        let ts = parse_csv_str("t,value\n0.5,1\n1.25,2\n", SeriesLabel::Incidence).unwrap();
        assert_eq!(ts.times(), &[0.5, 1.25]);
    }

    #[test]
    fn window_rebases_and_filters() {
        let times: Vec<f64> = (0..=100).map(f64::from).collect();
        let ds = EpiDataset::new(series(&times, SeriesLabel::Incidence), TimeUnit::Days);
        let w = ds.restrict_window(10.0, 20.0).unwrap();
        let expected: Vec<f64> = (0..=10).map(f64::from).collect();
        assert_eq!(w.incidence.times(), expected.as_slice());
        assert_eq!(w.window(), (0.0, 10.0));
        assert_eq!(w.origin(), 10.0);

        assert!(matches!(
            ds.restrict_window(200.0, 300.0),
            Err(Error::EmptyWindow)
        ));
        assert!(ds.restrict_window(5.0, 5.0).is_err());

        let full = ds.restrict_window(0.0, 100.0).unwrap();
        assert_eq!(full.incidence, ds.incidence);
    }

    #[test]
    fn window_is_idempotent_and_drops_empty_optionals() {
        let ds = EpiDataset::new(
            series(&[0.0, 1.0, 5.0, 9.0], SeriesLabel::Incidence),
            TimeUnit::Days,
        )
        .with(series(&[0.0, 8.0], SeriesLabel::NewRecoveries))
        .with(series(&[2.0, 3.0], SeriesLabel::Active));
        let once = ds.restrict_window(4.0, 9.0).unwrap();
        let twice = once.restrict_window(4.0, 9.0).unwrap();
        assert_eq!(once, twice);
        assert!(once.active.is_none());
        assert_eq!(once.new_recoveries.as_ref().unwrap().times(), &[4.0]);
        // input untouched
        assert_eq!(ds.incidence.len(), 4);
    }

    #[test]
    fn manifest_aligns_dates_across_files() {
        let dir = tempfile::tempdir().unwrap();
        fs::write(
            dir.path().join("j.csv"),
            "t,value\n2020-01-23,10\n2020-01-24,12\n2020-01-26,3\n",
        )
        .unwrap();
        fs::write(
            dir.path().join("r.csv"),
            "t,value\n2020-01-25,1\n2020-01-26,2\n",
        )
        .unwrap();
        let manifest = r#"{"incidence": "j.csv", "new_recoveries": "r.csv"}"#;
        let mpath = dir.path().join("m.json");
        fs::write(&mpath, manifest).unwrap();
        let ds = load_dataset(&mpath).unwrap();
        assert_eq!(ds.incidence.times(), &[0.0, 1.0, 3.0]);
        assert_eq!(ds.new_recoveries.unwrap().times(), &[2.0, 3.0]);
    }
}
