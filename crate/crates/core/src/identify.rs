//! Joint identification of `(a, u)` and the per-region initial states.
//!
//! All regions share `a` and `u`; each region has its own `(f0, delta0)`.
//! The cost is the weighted sum of squared differences between the
//! simulated `f` and the corrected excess-death signal over the fit window.
//! A convex regression on empirical growth rates gives the starting point,
//! and the full `2 + 2R` variable problem is then solved with multidirectional
//! search.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::dynamics::{simulate, GlobalParams, RegionInit};
use crate::region::{Indicator, RegionCode};
use crate::series::{DailySeries, FitWindow, SeriesError};
use crate::torczon::{self, Bounds, MdsConfig, MdsError, StopReason};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum IdentifyError {
    #[error("region {region}: value at index {index} is not positive")]
    NonPositiveValue { region: RegionCode, index: usize },
    #[error("region {0}: growth-rate series needs at least 3 points")]
    TooShort(RegionCode),
    #[error("pooled growth-rate regression is rank-deficient")]
    DegenerateRegression,
    #[error("region {0}: series maximum is not positive")]
    NonPositiveMax(RegionCode),
    #[error("region {0}: weight must be positive and finite")]
    BadWeight(RegionCode),
    #[error("region {0} has data but no weight")]
    MissingWeight(RegionCode),
    #[error("no regions to fit")]
    NoData,
    #[error(transparent)]
    Series(#[from] SeriesError),
    #[error(transparent)]
    Solver(#[from] MdsError),
}

/// Per-region error weights `q_i`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "BTreeMap<RegionCode, f64>", into = "BTreeMap<RegionCode, f64>")]
pub struct RegionWeights(BTreeMap<RegionCode, f64>);

impl TryFrom<BTreeMap<RegionCode, f64>> for RegionWeights {
    type Error = IdentifyError;

    fn try_from(map: BTreeMap<RegionCode, f64>) -> Result<Self, Self::Error> {
        RegionWeights::new(map)
    }
}

impl From<RegionWeights> for BTreeMap<RegionCode, f64> {
    fn from(w: RegionWeights) -> Self {
        w.0
    }
}

impl RegionWeights {
    pub fn new(map: BTreeMap<RegionCode, f64>) -> Result<Self, IdentifyError> {
        if let Some((&region, _)) = map.iter().find(|(_, q)| !(q.is_finite() && **q > 0.0)) {
            return Err(IdentifyError::BadWeight(region));
        }
        Ok(Self(map))
    }

    pub fn get(&self, region: RegionCode) -> Option<f64> {
        self.0.get(&region).copied()
    }

    pub fn iter(&self) -> impl Iterator<Item = (RegionCode, f64)> + '_ {
        self.0.iter().map(|(r, q)| (*r, *q))
    }
}

/// `q_i = 1 / max_k f_i(k)^2`, which puts regions of very different scale
/// on a relative-error footing.
pub fn default_weights(data: &BTreeMap<RegionCode, DailySeries>) -> Result<RegionWeights, IdentifyError> {
    let map = data
        .iter()
        .map(|(&region, s)| {
            let max = s.max();
            if max > 0.0 {
                Ok((region, 1.0 / (max * max)))
            } else {
                Err(IdentifyError::NonPositiveMax(region))
            }
        })
        .collect::<Result<_, _>>()?;
    RegionWeights::new(map)
}

/// `f(k+1) / f(k) - 1`, one value shorter than `f`.
pub fn empirical_delta(f: &DailySeries) -> Result<DailySeries, IdentifyError> {
    let region = f.region();
    if let Some(index) = f.values().iter().position(|&v| v <= 0.0) {
        return Err(IdentifyError::NonPositiveValue { region, index });
    }
    if f.len() < 2 {
        return Err(IdentifyError::TooShort(region));
    }
    let values = f.values().windows(2).map(|w| w[1] / w[0] - 1.0).collect();
    Ok(DailySeries::new(region, Indicator::Delta, f.start(), values)?)
}

/// Starting point from the growth-rate dynamics alone.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WarmStart {
    /// May violate `a > -1` on pathological data; [`identify`] clamps it.
    pub params: GlobalParams,
    pub delta0: BTreeMap<RegionCode, f64>,
}

/// Pooled least squares of `delta(k+1) = p delta(k) + u` over all regions,
/// with `a = p - 1` and each region's `delta0` its first empirical rate.
pub fn convex_warm_start(deltas: &BTreeMap<RegionCode, DailySeries>) -> Result<WarmStart, IdentifyError> {
    if deltas.is_empty() {
        return Err(IdentifyError::NoData);
    }
    let mut pairs = Vec::new();
    for (&region, s) in deltas {
        if s.len() < 3 {
            return Err(IdentifyError::TooShort(region));
        }
        pairs.extend(s.values().windows(2).map(|w| (w[0], w[1])));
    }
    let n = pairs.len() as f64;
    let x_mean = pairs.iter().map(|p| p.0).sum::<f64>() / n;
    let y_mean = pairs.iter().map(|p| p.1).sum::<f64>() / n;
    let sxx: f64 = pairs.iter().map(|p| (p.0 - x_mean).powi(2)).sum();
    let sum_sq: f64 = pairs.iter().map(|p| p.0 * p.0).sum();
    if sxx <= 1e-14 * sum_sq || sxx == 0.0 {
        return Err(IdentifyError::DegenerateRegression);
    }
    let sxy: f64 = pairs.iter().map(|p| (p.0 - x_mean) * (p.1 - y_mean)).sum();
    let p = sxy / sxx;
    let u = y_mean - p * x_mean;
    Ok(WarmStart {
        params: GlobalParams { a: p - 1.0, u },
        delta0: deltas.iter().map(|(&r, s)| (r, s.values()[0])).collect(),
    })
}

/// Weighted squared error of the simulated trajectories against `data`.
///
/// Each series is compared with a trajectory started at its first day.
/// Returns `+inf` for invalid parameters, missing inits or weights, or a
/// non-finite trajectory.
pub fn objective(
    params: &GlobalParams,
    inits: &BTreeMap<RegionCode, RegionInit>,
    data: &BTreeMap<RegionCode, DailySeries>,
    weights: &RegionWeights,
) -> f64 {
    let mut total = 0.0;
    for (&region, series) in data {
        let (Some(init), Some(q)) = (inits.get(&region), weights.get(region)) else {
            return f64::INFINITY;
        };
        let Ok(traj) = simulate(params, init, series.len() - 1) else {
            return f64::INFINITY;
        };
        let sse: f64 = traj
            .f
            .iter()
            .zip(series.values())
            .map(|(fhat, f)| (fhat - f).powi(2))
            .sum();
        total += q * sse;
    }
    if total.is_nan() { f64::INFINITY } else { total }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct IdentifyOptions {
    /// Configuration of each individual search run.
    pub solver: MdsConfig,
    /// Lower bound on every `f0`, in deaths/day.
    pub f_floor: f64,
    /// Extra runs started from the best point with a fresh simplex.
    pub max_restarts: usize,
    /// Restarting stops once a run lowers the cost by less than this
    /// fraction.
    pub restart_rtol: f64,
    /// Relative simplex edge length of restarted runs.
    pub restart_step: f64,
}

impl Default for IdentifyOptions {
    fn default() -> Self {
        Self {
            solver: MdsConfig {
                max_evals: 3_000,
                ..MdsConfig::default()
            },
            f_floor: 0.5,
            max_restarts: 1_000,
            restart_rtol: 1e-10,
            restart_step: 0.01,
        }
    }
}

/// Variable layout `(a, u, delta0_1..delta0_R, f0_1..f0_R)`, regions in code order.
struct Packing {
    regions: Vec<RegionCode>,
}

impl Packing {
    fn dim(&self) -> usize {
        2 + 2 * self.regions.len()
    }

    fn pack(&self, params: &GlobalParams, inits: &BTreeMap<RegionCode, RegionInit>) -> Vec<f64> {
        let mut x = vec![params.a, params.u];
        x.extend(self.regions.iter().map(|r| inits[r].delta0));
        x.extend(self.regions.iter().map(|r| inits[r].f0));
        x
    }

    fn unpack(&self, x: &[f64]) -> (GlobalParams, BTreeMap<RegionCode, RegionInit>) {
        let r = self.regions.len();
        let params = GlobalParams { a: x[0], u: x[1] };
        let inits = self
            .regions
            .iter()
            .enumerate()
            .map(|(i, &region)| {
                (
                    region,
                    RegionInit {
                        delta0: x[2 + i],
                        f0: x[2 + r + i],
                    },
                )
            })
            .collect();
        (params, inits)
    }

    fn bounds(&self, data: &BTreeMap<RegionCode, DailySeries>, f_floor: f64) -> Result<Bounds, MdsError> {
        let r = self.regions.len();
        let mut lower = vec![-0.99, -1.0];
        let mut upper = vec![0.99, 1.0];
        lower.extend(std::iter::repeat_n(-0.99, r));
        upper.extend(std::iter::repeat_n(2.0, r));
        for region in &self.regions {
            lower.push(f_floor);
            upper.push(10.0 * data[region].max());
        }
        Bounds::new(lower, upper)
    }
}

/// Outcome of [`identify`].
#[derive(Debug, Clone, PartialEq)]
pub struct IdentifiedModel {
    pub params: GlobalParams,
    pub inits: BTreeMap<RegionCode, RegionInit>,
    pub window: FitWindow,
    pub weights: RegionWeights,
    pub cost: f64,
    pub warm_start_cost: f64,
    pub solver_evals: usize,
    pub restarts: usize,
    pub stop_reason: StopReason,
    pub options: IdentifyOptions,
}

fn clamp_inside(v: f64, lo: f64, hi: f64) -> f64 {
    let margin = 1e-3 * (hi - lo);
    if v <= lo {
        lo + margin
    } else if v >= hi {
        hi - margin
    } else {
        v
    }
}

/// Starting point for the joint problem: the warm start for `(a, u, delta0)`
/// and `f0 = max(f(k0), f_floor)`, pulled inside the box where needed.
pub fn initial_guess(
    data: &BTreeMap<RegionCode, DailySeries>,
    f_floor: f64,
) -> Result<(GlobalParams, BTreeMap<RegionCode, RegionInit>), IdentifyError> {
    let deltas = data
        .values()
        .map(|s| Ok((s.region(), empirical_delta(s)?)))
        .collect::<Result<BTreeMap<_, _>, IdentifyError>>()?;
    let warm = convex_warm_start(&deltas)?;
    let params = GlobalParams {
        a: clamp_inside(warm.params.a, -0.99, 0.99),
        u: clamp_inside(warm.params.u, -1.0, 1.0),
    };
    let inits = data
        .iter()
        .map(|(&region, s)| {
            let init = RegionInit {
                f0: s.values()[0].max(f_floor),
                delta0: clamp_inside(warm.delta0[&region], -0.99, 2.0),
            };
            (region, init)
        })
        .collect();
    Ok((params, inits))
}

// Edge lengths relative to the current point, floored so that a coordinate
// that has drifted to zero can still move.
fn restart_steps(x: &[f64], x0: &[f64], rel: f64) -> Vec<f64> {
    x.iter()
        .zip(x0)
        .map(|(v, v0)| rel * v.abs().max(0.1 * v0.abs()).max(1e-3))
        .collect()
}

/// Fits the shared model to every region in `data` over `window`.
pub fn identify(
    data: &BTreeMap<RegionCode, DailySeries>,
    window: &FitWindow,
    weights: &RegionWeights,
    options: &IdentifyOptions,
) -> Result<IdentifiedModel, IdentifyError> {
    if data.is_empty() {
        return Err(IdentifyError::NoData);
    }
    let windowed = data
        .iter()
        .map(|(&r, s)| Ok((r, s.slice(window)?)))
        .collect::<Result<BTreeMap<_, _>, IdentifyError>>()?;
    if let Some(region) = windowed.keys().find(|r| weights.get(**r).is_none()) {
        return Err(IdentifyError::MissingWeight(*region));
    }
    let (params, inits) = initial_guess(&windowed, options.f_floor)?;
    identify_from(&windowed, *window, weights, options, &params, &inits)
}

/// Like [`identify`] but from a caller-supplied starting point; `data` must
/// already be restricted to `window`.
pub fn identify_from(
    data: &BTreeMap<RegionCode, DailySeries>,
    window: FitWindow,
    weights: &RegionWeights,
    options: &IdentifyOptions,
    start_params: &GlobalParams,
    start_inits: &BTreeMap<RegionCode, RegionInit>,
) -> Result<IdentifiedModel, IdentifyError> {
    let packing = Packing {
        regions: data.keys().copied().collect(),
    };
    let bounds = packing.bounds(data, options.f_floor)?;
    let x0 = packing.pack(start_params, start_inits);
    debug_assert_eq!(x0.len(), packing.dim());

    let cost_at = |x: &[f64]| {
        let (params, inits) = packing.unpack(x);
        objective(&params, &inits, data, weights)
    };
    let warm_start_cost = cost_at(&x0);
    let mut result = torczon::minimize(cost_at, &x0, &bounds, &options.solver)?;
    let mut evals = result.evals;
    let mut restarts = 0;
    while restarts < options.max_restarts && result.cost_best > 0.0 {
        let solver = MdsConfig {
            initial_steps: Some(restart_steps(&result.x_best, &x0, options.restart_step)),
            ..options.solver.clone()
        };
        let next = torczon::minimize(cost_at, &result.x_best, &bounds, &solver)?;
        evals += next.evals;
        restarts += 1;
        let gain = result.cost_best - next.cost_best;
        if next.cost_best < result.cost_best {
            result = next;
        }
        if gain <= options.restart_rtol * result.cost_best {
            break;
        }
    }
    let (params, inits) = packing.unpack(&result.x_best);
    Ok(IdentifiedModel {
        params,
        inits,
        window,
        weights: weights.clone(),
        cost: result.cost_best,
        warm_start_cost,
        solver_evals: evals,
        restarts,
        stop_reason: result.stop_reason,
        options: options.clone(),
    })
}

impl IdentifiedModel {
    /// Simulated `f` and `delta` series per region, starting at the window
    /// start and running for `days` days.
    pub fn trajectories(&self, days: usize) -> BTreeMap<RegionCode, (DailySeries, DailySeries)> {
        self.inits
            .iter()
            .filter_map(|(&region, init)| {
                let traj = simulate(&self.params, init, days.saturating_sub(1)).ok()?;
                let f = DailySeries::new(region, Indicator::Fhat, self.window.start, traj.f).ok()?;
                let d = DailySeries::new(region, Indicator::Delta, self.window.start, traj.delta).ok()?;
                Some((region, (f, d)))
            })
            .collect()
    }

    pub fn recompute_cost(&self, data: &BTreeMap<RegionCode, DailySeries>) -> Result<f64, IdentifyError> {
        let windowed = data
            .iter()
            .map(|(&r, s)| Ok((r, s.slice(&self.window)?)))
            .collect::<Result<BTreeMap<_, _>, IdentifyError>>()?;
        Ok(objective(&self.params, &self.inits, &windowed, &self.weights))
    }

    pub fn to_document(&self) -> ModelDocument {
        ModelDocument {
            a: self.params.a,
            u: self.params.u,
            window: self.window,
            regions: self
                .inits
                .iter()
                .map(|(&r, init)| {
                    (
                        r,
                        RegionEntry {
                            delta0: init.delta0,
                            f0: init.f0,
                            q: self.weights.get(r).unwrap_or(f64::NAN),
                        },
                    )
                })
                .collect(),
            cost: self.cost,
            warm_start_cost: self.warm_start_cost,
            evals: self.solver_evals,
            restarts: self.restarts,
            stop_reason: self.stop_reason,
            solver: self.options.clone(),
        }
    }

    pub fn from_document(doc: ModelDocument) -> Result<Self, IdentifyError> {
        let weights = RegionWeights::new(doc.regions.iter().map(|(&r, e)| (r, e.q)).collect())?;
        Ok(Self {
            params: GlobalParams { a: doc.a, u: doc.u },
            inits: doc
                .regions
                .iter()
                .map(|(&r, e)| {
                    (
                        r,
                        RegionInit {
                            f0: e.f0,
                            delta0: e.delta0,
                        },
                    )
                })
                .collect(),
            window: doc.window,
            weights,
            cost: doc.cost,
            warm_start_cost: doc.warm_start_cost,
            solver_evals: doc.evals,
            restarts: doc.restarts,
            stop_reason: doc.stop_reason,
            options: doc.solver,
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RegionEntry {
    pub delta0: f64,
    pub f0: f64,
    pub q: f64,
}

/// JSON form of an [`IdentifiedModel`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelDocument {
    pub a: f64,
    pub u: f64,
    pub window: FitWindow,
    pub regions: BTreeMap<RegionCode, RegionEntry>,
    pub cost: f64,
    pub warm_start_cost: f64,
    pub evals: usize,
    pub restarts: usize,
    pub stop_reason: StopReason,
    pub solver: IdentifyOptions,
}
