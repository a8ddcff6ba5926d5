//! Source CSV adapters and the canonical long-format table.
//!
//! Upstream open-data files differ in delimiter, date format, region encoding
//! and column names, and those layouts have drifted over time. Each file is
//! therefore read through a [`SourceAdapterConfig`], a JSON-describable column
//! map, into [`CanonicalRecord`]s keyed by `(region, indicator, date)`.
//!
//! The canonical on-disk form is a comma-separated file with the header
//! `region,indicator,date,value`, ISO dates and `.` decimals, sorted by key.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt::Write as _;

use chrono::{Datelike, NaiveDate};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::region::{Indicator, RegionCode};
use crate::series::DailySeries;

pub const CANONICAL_HEADER: &str = "region,indicator,date,value";

/// Canonical field name routing a death count to `deces_<year>` by the row's date.
pub const DEATHS_BY_YEAR_FIELD: &str = "deaths";

#[derive(Debug, Clone, PartialEq, Error)]
pub enum IngestError {
    #[error("invalid adapter config: {0}")]
    InvalidConfig(String),
    #[error("input is not valid UTF-8 (byte {0})")]
    NotUtf8(usize),
    #[error("malformed CSV: {0}")]
    Csv(String),
    #[error("missing column {0:?}")]
    MissingColumn(String),
    #[error("line {row}: cannot parse date {text:?}")]
    BadDate { row: u64, text: String },
    #[error("line {row}: cannot parse value {text:?}")]
    BadValue { row: u64, text: String },
    #[error("line {row}: negative value")]
    NegativeValue { row: u64 },
    #[error("duplicate record for region {region}, indicator {indicator}, date {date}")]
    DuplicateKey {
        region: RegionCode,
        indicator: Indicator,
        date: NaiveDate,
    },
    #[error("no records for region {region}, indicator {indicator}")]
    NoData { region: RegionCode, indicator: Indicator },
}

#[derive(Debug, Clone, PartialEq, Error)]
#[error("canonical file, line {line}: {message}")]
pub struct CanonicalParseError {
    pub line: u64,
    pub message: String,
}

/// One value of one indicator for one region on one day.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CanonicalRecord {
    pub region: RegionCode,
    pub indicator: Indicator,
    pub date: NaiveDate,
    pub value: f64,
}

impl CanonicalRecord {
    pub fn key(&self) -> (RegionCode, Indicator, NaiveDate) {
        (self.region, self.indicator, self.date)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SourceId {
    InseeDeaths,
    HospIncidence,
    InsermCert,
    Tests,
    EmergencySos,
}

impl SourceId {
    pub fn as_str(self) -> &'static str {
        match self {
            SourceId::InseeDeaths => "insee_deaths",
            SourceId::HospIncidence => "hosp_incidence",
            SourceId::InsermCert => "inserm_cert",
            SourceId::Tests => "tests",
            SourceId::EmergencySos => "emergency_sos",
        }
    }

    /// Indicators a file of this family may carry.
    pub fn indicators(self) -> &'static [Indicator] {
        use Indicator::*;
        match self {
            SourceId::InseeDeaths => &[Deces2018, Deces2019, Deces2020],
            SourceId::HospIncidence => &[IncidHosp, IncidRea, IncidDc, IncidRad],
            SourceId::InsermCert => &[IncidInserm],
            SourceId::Tests => &[Test, Pos],
            SourceId::EmergencySos => &[
                NbrePassTot,
                NbrePassCorona,
                NbreHospitCorona,
                NbreActeTot,
                NbreActeCorona,
            ],
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RegionColumnKind {
    #[default]
    Code,
    Name,
}

fn default_delimiter() -> char {
    ';'
}

fn default_date_format() -> String {
    "%Y-%m-%d".to_string()
}

/// How to read one source file.
///
/// `column_map` maps canonical field names to source headers. It must name
/// `region` and `date`, plus at least one value field: an indicator tag
/// allowed for `source_id` (wide layout, one record per mapped column), or,
/// for `insee_deaths`, the field `deaths` whose indicator is chosen from the
/// row's year. `row_filter` keeps only rows whose listed columns hold the
/// given values, e.g. the all-sexes or all-ages rows of a stratified file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SourceAdapterConfig {
    pub source_id: SourceId,
    pub column_map: BTreeMap<String, String>,
    #[serde(default = "default_delimiter")]
    pub delimiter: char,
    #[serde(default = "default_date_format")]
    pub date_format: String,
    #[serde(default)]
    pub region_column_kind: RegionColumnKind,
    #[serde(default)]
    pub row_filter: BTreeMap<String, String>,
}

enum ValueTarget {
    Fixed(Indicator),
    ByYear,
}

impl SourceAdapterConfig {
    pub fn from_json(text: &str) -> Result<Self, IngestError> {
        let cfg: Self =
            serde_json::from_str(text).map_err(|e| IngestError::InvalidConfig(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<(), IngestError> {
        self.value_targets().map(|_| ())
    }

    fn value_targets(&self) -> Result<Vec<(ValueTarget, &str)>, IngestError> {
        if !self.delimiter.is_ascii() {
            return Err(IngestError::InvalidConfig(format!(
                "delimiter {:?} must be a single ASCII character",
                self.delimiter
            )));
        }
        for field in ["region", "date"] {
            if !self.column_map.contains_key(field) {
                return Err(IngestError::InvalidConfig(format!(
                    "column_map lacks required field {field:?}"
                )));
            }
        }
        let mut targets = Vec::new();
        for (field, column) in &self.column_map {
            if field == "region" || field == "date" {
                continue;
            }
            if field == DEATHS_BY_YEAR_FIELD && self.source_id == SourceId::InseeDeaths {
                targets.push((ValueTarget::ByYear, column.as_str()));
                continue;
            }
            let indicator: Indicator = field
                .parse()
                .map_err(|e| IngestError::InvalidConfig(format!("{e}")))?;
            if !self.source_id.indicators().contains(&indicator) {
                return Err(IngestError::InvalidConfig(format!(
                    "indicator {indicator} is not provided by source {}",
                    self.source_id.as_str()
                )));
            }
            targets.push((ValueTarget::Fixed(indicator), column.as_str()));
        }
        if targets.is_empty() {
            return Err(IngestError::InvalidConfig(
                "column_map names no value column".to_string(),
            ));
        }
        Ok(targets)
    }
}

/// Result of reading one source file.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct ParseOutcome {
    pub records: Vec<CanonicalRecord>,
    /// Rows whose region is not one of the 13 mainland regions.
    pub dropped_region_rows: usize,
    /// Rows rejected by `row_filter`.
    pub filtered_rows: usize,
    /// Empty or `NA` cells, and year-routed deaths outside 2018–2020.
    pub skipped_values: usize,
}

fn is_missing(text: &str) -> bool {
    matches!(text, "" | "NA" | "na" | "NaN" | "nan")
}

fn parse_value(text: &str, delimiter: char) -> Option<f64> {
    let parsed = text.parse::<f64>().ok().or_else(|| {
        (delimiter != ',' && text.contains(','))
            .then(|| text.replace(',', ".").parse::<f64>().ok())
            .flatten()
    })?;
    parsed.is_finite().then_some(parsed)
}

/// Reads one source file into canonical records.
pub fn parse_source(raw: &[u8], config: &SourceAdapterConfig) -> Result<ParseOutcome, IngestError> {
    let targets = config.value_targets()?;
    std::str::from_utf8(raw).map_err(|e| IngestError::NotUtf8(e.valid_up_to()))?;

    let mut reader = csv::ReaderBuilder::new()
        .delimiter(config.delimiter as u8)
        .trim(csv::Trim::All)
        .from_reader(raw);
    let headers = reader
        .headers()
        .map_err(|e| IngestError::Csv(e.to_string()))?
        .clone();
    let column = |name: &str| -> Result<usize, IngestError> {
        headers
            .iter()
            .position(|h| h.trim_start_matches('\u{feff}') == name)
            .ok_or_else(|| IngestError::MissingColumn(name.to_string()))
    };

    let region_col = column(&config.column_map["region"])?;
    let date_col = column(&config.column_map["date"])?;
    let value_cols = targets
        .iter()
        .map(|(target, name)| Ok((target, column(name)?)))
        .collect::<Result<Vec<_>, IngestError>>()?;
    let filters = config
        .row_filter
        .iter()
        .map(|(name, want)| Ok((column(name)?, want.as_str())))
        .collect::<Result<Vec<_>, IngestError>>()?;

    let mut outcome = ParseOutcome::default();
    let mut seen = BTreeSet::new();
    for row in reader.records() {
        let row = row.map_err(|e| IngestError::Csv(e.to_string()))?;
        let line = row.position().map(|p| p.line()).unwrap_or(0);
        let cell = |i: usize| row.get(i).unwrap_or("");

        if filters.iter().any(|(i, want)| cell(*i) != *want) {
            outcome.filtered_rows += 1;
            continue;
        }
        let region = match config.region_column_kind {
            RegionColumnKind::Code => cell(region_col).parse::<RegionCode>().ok(),
            RegionColumnKind::Name => RegionCode::from_name(cell(region_col)),
        };
        let Some(region) = region else {
            outcome.dropped_region_rows += 1;
            continue;
        };
        let date_text = cell(date_col);
        let date = NaiveDate::parse_from_str(date_text, &config.date_format).map_err(|_| {
            IngestError::BadDate {
                row: line,
                text: date_text.to_string(),
            }
        })?;

        for (target, col) in &value_cols {
            let text = cell(*col);
            if is_missing(text) {
                outcome.skipped_values += 1;
                continue;
            }
            let indicator = match target {
                ValueTarget::Fixed(ind) => *ind,
                ValueTarget::ByYear => match Indicator::deaths_for_year(date.year()) {
                    Some(ind) => ind,
                    None => {
                        outcome.skipped_values += 1;
                        continue;
                    }
                },
            };
            let value = parse_value(text, config.delimiter).ok_or_else(|| IngestError::BadValue {
                row: line,
                text: text.to_string(),
            })?;
            if value < 0.0 {
                return Err(IngestError::NegativeValue { row: line });
            }
            let record = CanonicalRecord {
                region,
                indicator,
                date,
                value,
            };
            if !seen.insert(record.key()) {
                return Err(IngestError::DuplicateKey {
                    region,
                    indicator,
                    date,
                });
            }
            outcome.records.push(record);
        }
    }
    Ok(outcome)
}

/// A daily series rebuilt from records, with interior gaps interpolated.
#[derive(Debug, Clone, PartialEq)]
pub struct FilledSeries {
    pub series: DailySeries,
    /// Dates absent from the records and filled by linear interpolation.
    pub interpolated: Vec<NaiveDate>,
}

/// Assembles the contiguous series of one `(region, indicator)` pair. The
/// result spans the first to the last observed date; missing days in between
/// are linearly interpolated and reported.
pub fn to_daily_series(
    records: &[CanonicalRecord],
    region: RegionCode,
    indicator: Indicator,
) -> Result<FilledSeries, IngestError> {
    let mut points: Vec<(NaiveDate, f64)> = records
        .iter()
        .filter(|r| r.region == region && r.indicator == indicator)
        .map(|r| (r.date, r.value))
        .collect();
    if points.is_empty() {
        return Err(IngestError::NoData { region, indicator });
    }
    points.sort_by_key(|p| p.0);
    if let Some(w) = points.windows(2).find(|w| w[0].0 == w[1].0) {
        return Err(IngestError::DuplicateKey {
            region,
            indicator,
            date: w[0].0,
        });
    }

    let start = points[0].0;
    let mut values = Vec::with_capacity((points[points.len() - 1].0 - start).num_days() as usize + 1);
    let mut interpolated = Vec::new();
    values.push(points[0].1);
    for pair in points.windows(2) {
        let (d0, v0) = pair[0];
        let (d1, v1) = pair[1];
        let gap = (d1 - d0).num_days();
        for step in 1..gap {
            let t = step as f64 / gap as f64;
            values.push(v0 + t * (v1 - v0));
            interpolated.push(d0 + chrono::Days::new(step as u64));
        }
        values.push(v1);
    }
    let series = DailySeries::new(region, indicator, start, values)
        .expect("records hold finite values");
    Ok(FilledSeries {
        series,
        interpolated,
    })
}

/// Every `(region, indicator)` series present in `records`.
pub fn group_series(
    records: &[CanonicalRecord],
) -> Result<BTreeMap<(RegionCode, Indicator), FilledSeries>, IngestError> {
    let keys: BTreeSet<_> = records.iter().map(|r| (r.region, r.indicator)).collect();
    keys.into_iter()
        .map(|(region, indicator)| Ok(((region, indicator), to_daily_series(records, region, indicator)?)))
        .collect()
}

/// Flattens series back into canonical records.
pub fn series_to_records<'a>(series: impl IntoIterator<Item = &'a DailySeries>) -> Vec<CanonicalRecord> {
    series
        .into_iter()
        .flat_map(|s| {
            s.values().iter().enumerate().map(move |(k, &value)| CanonicalRecord {
                region: s.region(),
                indicator: s.tag(),
                date: s.date_at(k),
                value,
            })
        })
        .collect()
}

fn sort_records(records: &mut [CanonicalRecord]) {
    records.sort_by_key(CanonicalRecord::key);
}

/// Serializes records as canonical CSV, sorted by `(region, indicator, date)`.
pub fn write_canonical(records: &[CanonicalRecord]) -> Vec<u8> {
    let mut sorted = records.to_vec();
    sort_records(&mut sorted);
    let mut out = String::with_capacity(32 * (sorted.len() + 1));
    out.push_str(CANONICAL_HEADER);
    out.push('\n');
    for r in &sorted {
        // `{}` on f64 prints the shortest string that parses back exactly.
        writeln!(out, "{},{},{},{}", r.region, r.indicator, r.date.format("%Y-%m-%d"), r.value)
            .expect("writing to a String");
    }
    out.into_bytes()
}

/// Parses a canonical CSV file.
pub fn read_canonical(bytes: &[u8]) -> Result<Vec<CanonicalRecord>, CanonicalParseError> {
    let err = |line: u64, message: String| CanonicalParseError { line, message };
    let text = std::str::from_utf8(bytes).map_err(|e| err(1, format!("not UTF-8: {e}")))?;
    let mut lines = text.lines().enumerate();
    match lines.next() {
        Some((_, header)) if header.trim_end() == CANONICAL_HEADER => {}
        Some((_, header)) => return Err(err(1, format!("expected header {CANONICAL_HEADER:?}, found {header:?}"))),
        None => return Err(err(1, "empty file".to_string())),
    }

    let mut records = Vec::new();
    let mut seen = BTreeSet::new();
    for (idx, line) in lines {
        let line_no = idx as u64 + 1;
        if line.trim().is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split(',').collect();
        if fields.len() != 4 {
            return Err(err(line_no, format!("expected 4 fields, found {}", fields.len())));
        }
        let region: RegionCode = fields[0].parse().map_err(|e| err(line_no, format!("{e}")))?;
        let indicator: Indicator = fields[1].parse().map_err(|e| err(line_no, format!("{e}")))?;
        let date = NaiveDate::parse_from_str(fields[2], "%Y-%m-%d")
            .map_err(|_| err(line_no, format!("bad date {:?}", fields[2])))?;
        let value: f64 = fields[3]
            .trim()
            .parse()
            .ok()
            .filter(|v: &f64| v.is_finite())
            .ok_or_else(|| err(line_no, format!("bad value {:?}", fields[3])))?;
        if indicator.is_source() && value < 0.0 {
            return Err(err(line_no, format!("negative value for source indicator {indicator}")));
        }
        let record = CanonicalRecord {
            region,
            indicator,
            date,
            value,
        };
        if !seen.insert(record.key()) {
            return Err(err(line_no, format!("duplicate key ({region}, {indicator}, {date})")));
        }
        records.push(record);
    }
    Ok(records)
}
