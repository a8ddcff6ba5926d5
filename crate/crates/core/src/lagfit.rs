//! Lag/scale fits `H(t) = mu * f(t - eta)` of measured indicators against
//! the model signal `f`.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use chrono::{Days, NaiveDate};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::region::{Indicator, RegionCode};
use crate::series::{DailySeries, FitWindow};

#[derive(Debug, Clone, PartialEq, Eq, Error, Serialize, Deserialize)]
pub enum LagFitError {
    #[error("no date in the window has both H(t) and f(t - {eta})")]
    EmptyOverlap { eta: i32 },
    #[error("f(t - {eta}) is zero over the whole overlap")]
    DegenerateSource { eta: i32 },
    #[error("no lag in [{eta_min}, {eta_max}] gives a usable overlap")]
    NoFeasibleEta { eta_min: i32, eta_max: i32 },
    #[error("lag range [{eta_min}, {eta_max}] is empty")]
    BadRange { eta_min: i32, eta_max: i32 },
    #[error("no model signal for region {0}")]
    MissingModel(RegionCode),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct LagSearchSpec {
    pub eta_min: i32,
    pub eta_max: i32,
    pub window: FitWindow,
}

impl Default for LagSearchSpec {
    fn default() -> Self {
        Self {
            eta_min: -10,
            eta_max: 15,
            window: FitWindow::new(
                NaiveDate::from_ymd_opt(2020, 3, 17).unwrap(),
                NaiveDate::from_ymd_opt(2020, 5, 31).unwrap(),
            )
            .unwrap(),
        }
    }
}

/// Least-squares scale for one fixed lag.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ScaleFit {
    pub mu: f64,
    pub sse: f64,
    pub n_overlap: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LagScaleFit {
    pub region: RegionCode,
    pub indicator: Indicator,
    pub eta: i32,
    pub mu: f64,
    pub sse: f64,
    pub n_overlap: usize,
}

fn shift(date: NaiveDate, eta: i32) -> NaiveDate {
    if eta >= 0 {
        date - Days::new(eta as u64)
    } else {
        date + Days::new(eta.unsigned_abs() as u64)
    }
}

/// Pairs `(H(t), f(t - eta))` over the window.
fn overlap(h: &DailySeries, f: &DailySeries, eta: i32, window: &FitWindow) -> Vec<(f64, f64)> {
    window
        .dates()
        .filter_map(|t| Some((h.get(t)?, f.get(shift(t, eta))?)))
        .collect()
}

/// `mu = sum H f / sum f^2` over the overlap, clamped at zero.
pub fn best_mu(h: &DailySeries, f: &DailySeries, eta: i32, window: &FitWindow) -> Result<ScaleFit, LagFitError> {
    let pairs = overlap(h, f, eta, window);
    if pairs.is_empty() {
        return Err(LagFitError::EmptyOverlap { eta });
    }
    let sff: f64 = pairs.iter().map(|(_, fv)| fv * fv).sum();
    if sff == 0.0 {
        return Err(LagFitError::DegenerateSource { eta });
    }
    let shf: f64 = pairs.iter().map(|(hv, fv)| hv * fv).sum();
    let mu = (shf / sff).max(0.0);
    let sse = pairs.iter().map(|(hv, fv)| (hv - mu * fv).powi(2)).sum();
    Ok(ScaleFit {
        mu,
        sse,
        n_overlap: pairs.len(),
    })
}

/// Scans every integer lag in the spec's range and keeps the one with the
/// smallest mean squared error. Ties go to the smaller `|eta|`, then the
/// smaller `eta`.
pub fn fit_lag_scale(h: &DailySeries, f: &DailySeries, spec: &LagSearchSpec) -> Result<LagScaleFit, LagFitError> {
    if spec.eta_min > spec.eta_max {
        return Err(LagFitError::BadRange {
            eta_min: spec.eta_min,
            eta_max: spec.eta_max,
        });
    }
    let mut best: Option<(i32, ScaleFit)> = None;
    for eta in spec.eta_min..=spec.eta_max {
        let Ok(fit) = best_mu(h, f, eta, &spec.window) else {
            continue;
        };
        let mse = fit.sse / fit.n_overlap as f64;
        let better = match &best {
            None => true,
            Some((best_eta, b)) => {
                let best_mse = b.sse / b.n_overlap as f64;
                mse < best_mse || (mse == best_mse && (eta.abs(), eta) < (best_eta.abs(), *best_eta))
            }
        };
        if better {
            best = Some((eta, fit));
        }
    }
    let (eta, fit) = best.ok_or(LagFitError::NoFeasibleEta {
        eta_min: spec.eta_min,
        eta_max: spec.eta_max,
    })?;
    Ok(LagScaleFit {
        region: h.region(),
        indicator: h.tag(),
        eta,
        mu: fit.mu,
        sse: fit.sse,
        n_overlap: fit.n_overlap,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PairFailure {
    pub region: RegionCode,
    pub indicator: Indicator,
    pub error: LagFitError,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct ValidationReport {
    pub fits: Vec<LagScaleFit>,
    pub failures: Vec<PairFailure>,
}

/// Fits every measured validation indicator against its region's model
/// signal. Indicators outside [`Indicator::VALIDATION`] are ignored; per-pair
/// failures are collected rather than aborting the run.
pub fn validate_all(
    model_f: &BTreeMap<RegionCode, DailySeries>,
    measured: &BTreeMap<(RegionCode, Indicator), DailySeries>,
    spec: &LagSearchSpec,
) -> ValidationReport {
    let pairs: Vec<_> = measured
        .iter()
        .filter(|((_, ind), _)| Indicator::VALIDATION.contains(ind))
        .collect();
    let outcomes: Vec<_> = pairs
        .par_iter()
        .map(|(&(region, indicator), h)| {
            let result = model_f
                .get(&region)
                .ok_or(LagFitError::MissingModel(region))
                .and_then(|f| fit_lag_scale(h, f, spec))
                .map(|fit| LagScaleFit { indicator, ..fit });
            (region, indicator, result)
        })
        .collect();
    let mut report = ValidationReport::default();
    for (region, indicator, result) in outcomes {
        match result {
            Ok(fit) => report.fits.push(fit),
            Err(error) => report.failures.push(PairFailure {
                region,
                indicator,
                error,
            }),
        }
    }
    report
}

/// One row per region, `<indicator>_eta,<indicator>_mu` column pairs in the
/// order of [`Indicator::VALIDATION`]; cells without a fit are left empty.
pub fn lag_table_csv(fits: &[LagScaleFit]) -> String {
    let mut by_region: BTreeMap<RegionCode, BTreeMap<Indicator, &LagScaleFit>> = BTreeMap::new();
    for fit in fits {
        by_region.entry(fit.region).or_default().insert(fit.indicator, fit);
    }
    let mut out = String::from("region");
    for ind in Indicator::VALIDATION {
        write!(out, ",{ind}_eta,{ind}_mu").unwrap();
    }
    out.push('\n');
    for (region, cells) in &by_region {
        write!(out, "{region}").unwrap();
        for ind in Indicator::VALIDATION {
            match cells.get(&ind) {
                Some(fit) => write!(out, ",{},{:.6}", fit.eta, fit.mu).unwrap(),
                None => out.push_str(",,"),
            }
        }
        out.push('\n');
    }
    out
}
