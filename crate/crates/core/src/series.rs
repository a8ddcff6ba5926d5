//! Date-indexed daily series and date windows.

use chrono::{Days, NaiveDate};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::region::{Indicator, RegionCode};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SeriesError {
    #[error("a daily series needs at least one value")]
    Empty,
    #[error("non-finite value {value} at index {index}")]
    NonFinite { index: usize, value: f64 },
    #[error("series {region}/{tag} spans {start}..={end}, which does not cover {want_start}..={want_end}")]
    NotCovered {
        region: RegionCode,
        tag: Indicator,
        start: NaiveDate,
        end: NaiveDate,
        want_start: NaiveDate,
        want_end: NaiveDate,
    },
    #[error("window end {end} must be after its start {start}")]
    BadWindow { start: NaiveDate, end: NaiveDate },
}

/// Contiguous daily values for one region and one indicator. Value `k`
/// belongs to `start + k` days.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DailySeries {
    region: RegionCode,
    tag: Indicator,
    start: NaiveDate,
    values: Vec<f64>,
}

impl DailySeries {
    pub fn new(
        region: RegionCode,
        tag: Indicator,
        start: NaiveDate,
        values: Vec<f64>,
    ) -> Result<Self, SeriesError> {
        if values.is_empty() {
            return Err(SeriesError::Empty);
        }
        if let Some((index, &value)) = values.iter().enumerate().find(|(_, v)| !v.is_finite()) {
            return Err(SeriesError::NonFinite { index, value });
        }
        Ok(Self {
            region,
            tag,
            start,
            values,
        })
    }

    pub fn region(&self) -> RegionCode {
        self.region
    }

    pub fn tag(&self) -> Indicator {
        self.tag
    }

    pub fn start(&self) -> NaiveDate {
        self.start
    }

    /// Last covered day (inclusive).
    pub fn end(&self) -> NaiveDate {
        self.date_at(self.values.len() - 1)
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn date_at(&self, k: usize) -> NaiveDate {
        self.start + Days::new(k as u64)
    }

    /// Index of `date`, if it falls inside the series.
    pub fn index_of(&self, date: NaiveDate) -> Option<usize> {
        let offset = (date - self.start).num_days();
        (offset >= 0 && (offset as usize) < self.values.len()).then_some(offset as usize)
    }

    pub fn get(&self, date: NaiveDate) -> Option<f64> {
        self.index_of(date).map(|k| self.values[k])
    }

    pub fn max(&self) -> f64 {
        self.values.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }

    pub fn covers(&self, window: &FitWindow) -> bool {
        self.start <= window.start && self.end() >= window.end
    }

    /// Restriction of the series to `window`.
    pub fn slice(&self, window: &FitWindow) -> Result<DailySeries, SeriesError> {
        if !self.covers(window) {
            return Err(SeriesError::NotCovered {
                region: self.region,
                tag: self.tag,
                start: self.start,
                end: self.end(),
                want_start: window.start,
                want_end: window.end,
            });
        }
        let lo = self.index_of(window.start).expect("covered");
        let hi = self.index_of(window.end).expect("covered");
        Ok(DailySeries {
            region: self.region,
            tag: self.tag,
            start: window.start,
            values: self.values[lo..=hi].to_vec(),
        })
    }

    /// Same region and dates, new tag and values of the same length.
    pub fn with_values(&self, tag: Indicator, values: Vec<f64>) -> Result<DailySeries, SeriesError> {
        assert_eq!(values.len(), self.values.len(), "length must be preserved");
        DailySeries::new(self.region, tag, self.start, values)
    }

    pub fn scaled(&self, c: f64) -> DailySeries {
        DailySeries {
            values: self.values.iter().map(|v| c * v).collect(),
            ..self.clone()
        }
    }
}

/// Inclusive day range `[start, end]`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "RawWindow")]
pub struct FitWindow {
    pub start: NaiveDate,
    pub end: NaiveDate,
}

#[derive(Deserialize)]
struct RawWindow {
    start: NaiveDate,
    end: NaiveDate,
}

impl TryFrom<RawWindow> for FitWindow {
    type Error = SeriesError;

    fn try_from(raw: RawWindow) -> Result<Self, Self::Error> {
        FitWindow::new(raw.start, raw.end)
    }
}

impl FitWindow {
    pub fn new(start: NaiveDate, end: NaiveDate) -> Result<Self, SeriesError> {
        if end <= start {
            return Err(SeriesError::BadWindow { start, end });
        }
        Ok(Self { start, end })
    }

    /// Number of days in the window, both ends included.
    pub fn len(&self) -> usize {
        (self.end - self.start).num_days() as usize + 1
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn contains(&self, date: NaiveDate) -> bool {
        self.start <= date && date <= self.end
    }

    pub fn dates(&self) -> impl Iterator<Item = NaiveDate> + '_ {
        self.start.iter_days().take(self.len())
    }
}

impl Default for FitWindow {
    /// Lockdown day through the end of April 2020.
    fn default() -> Self {
        Self {
            start: NaiveDate::from_ymd_opt(2020, 3, 17).unwrap(),
            end: NaiveDate::from_ymd_opt(2020, 4, 28).unwrap(),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn d(y: i32, m: u32, day: u32) -> NaiveDate {
        NaiveDate::from_ymd_opt(y, m, day).unwrap()
    }

    fn region() -> RegionCode {
        RegionCode::new(84).unwrap()
    }

    #[test]
    fn default_window_is_43_days() {
        let w = FitWindow::default();
        assert_eq!(w.len(), 43);
        assert_eq!(w.dates().last(), Some(d(2020, 4, 28)));
    }

    #[test]
    fn rejects_bad_values_and_windows() {
        assert_eq!(
            DailySeries::new(region(), Indicator::Pos, d(2020, 1, 1), vec![]),
            Err(SeriesError::Empty)
        );
        assert!(matches!(
            DailySeries::new(region(), Indicator::Pos, d(2020, 1, 1), vec![1.0, f64::NAN]),
            Err(SeriesError::NonFinite { index: 1, .. })
        ));
        assert!(FitWindow::new(d(2020, 3, 1), d(2020, 3, 1)).is_err());
        let err = serde_json::from_str::<FitWindow>(r#"{"start":"2020-03-02","end":"2020-03-01"}"#);
        assert!(err.is_err());
    }

    #[test]
    fn slicing_and_lookup() {
        let s = DailySeries::new(region(), Indicator::Pos, d(2020, 2, 27), (0..10).map(f64::from).collect())
            .unwrap();
        assert_eq!(s.end(), d(2020, 3, 7));
        assert_eq!(s.get(d(2020, 2, 29)), Some(2.0));
        assert_eq!(s.index_of(d(2020, 2, 26)), None);
        let w = FitWindow::new(d(2020, 3, 1), d(2020, 3, 3)).unwrap();
        assert_eq!(s.slice(&w).unwrap().values(), &[3.0, 4.0, 5.0]);
        let outside = FitWindow::new(d(2020, 3, 1), d(2020, 3, 9)).unwrap();
        assert!(matches!(s.slice(&outside), Err(SeriesError::NotCovered { .. })));
    }
}
