//! Torczon multidirectional search for box-constrained, derivative-free
//! minimization.
//!
//! The simplex keeps `n + 1` vertices. Every iteration reflects all the
//! non-best vertices through the best one; if that improves on the best
//! cost, an expansion along the same directions is tried and the better of
//! the two sets is kept, otherwise the simplex contracts toward the best
//! vertex. The best vertex never moves unless something strictly better is
//! found, so the best cost is non-increasing.
//!
//! Box constraints are handled with an infinite-cost barrier: trial points
//! outside the box get `+inf` without calling the objective.

use std::fmt::Write as _;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum MdsError {
    #[error("initial step {index} is {step}; steps must be positive and finite")]
    ZeroStep { index: usize, step: f64 },
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("bounds at coordinate {index} are not ordered: {lower} >= {upper}")]
    BadBounds { index: usize, lower: f64, upper: f64 },
    #[error("starting point lies outside the box")]
    StartOutsideBox,
    #[error("objective is not finite at the starting point")]
    InfeasibleStart,
    #[error("invalid solver configuration: {0}")]
    BadConfig(String),
}

/// Per-coordinate bounds; either side may be infinite.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Bounds {
    lower: Vec<f64>,
    upper: Vec<f64>,
}

impl Bounds {
    pub fn new(lower: Vec<f64>, upper: Vec<f64>) -> Result<Self, MdsError> {
        if lower.len() != upper.len() {
            return Err(MdsError::DimensionMismatch {
                expected: lower.len(),
                got: upper.len(),
            });
        }
        for (index, (&lo, &hi)) in lower.iter().zip(&upper).enumerate() {
            if lo.is_nan() || hi.is_nan() || lo >= hi {
                return Err(MdsError::BadBounds {
                    index,
                    lower: lo,
                    upper: hi,
                });
            }
        }
        Ok(Self { lower, upper })
    }

    pub fn unbounded(dim: usize) -> Self {
        Self {
            lower: vec![f64::NEG_INFINITY; dim],
            upper: vec![f64::INFINITY; dim],
        }
    }

    pub fn dim(&self) -> usize {
        self.lower.len()
    }

    pub fn lower(&self) -> &[f64] {
        &self.lower
    }

    pub fn upper(&self) -> &[f64] {
        &self.upper
    }

    pub fn contains(&self, x: &[f64]) -> bool {
        x.iter()
            .zip(self.lower.iter().zip(&self.upper))
            .all(|(&v, (&lo, &hi))| lo <= v && v <= hi)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct MdsConfig {
    pub expansion: f64,
    pub contraction: f64,
    /// Stop once the simplex diameter falls below this fraction of the
    /// initial diameter.
    pub size_tol: f64,
    pub max_evals: usize,
    /// Simplex edge length per coordinate; `None` uses [`default_steps`].
    pub initial_steps: Option<Vec<f64>>,
    /// Evaluate the vertices of each trial set on the rayon pool.
    pub parallel: bool,
}

impl Default for MdsConfig {
    fn default() -> Self {
        Self {
            expansion: 2.0,
            contraction: 0.5,
            size_tol: 1e-8,
            max_evals: 200_000,
            initial_steps: None,
            parallel: false,
        }
    }
}

impl MdsConfig {
    pub fn validate(&self) -> Result<(), MdsError> {
        if !(0.0 < self.contraction && self.contraction < 1.0 && 1.0 < self.expansion && self.expansion.is_finite()) {
            return Err(MdsError::BadConfig(format!(
                "need 0 < contraction < 1 < expansion, got contraction {} and expansion {}",
                self.contraction, self.expansion
            )));
        }
        if !(self.size_tol > 0.0) {
            return Err(MdsError::BadConfig(format!("size_tol must be positive, got {}", self.size_tol)));
        }
        if self.max_evals == 0 {
            return Err(MdsError::BadConfig("max_evals must be positive".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StopReason {
    SizeTol,
    MaxEvals,
}

/// State at the start of one iteration.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TraceRow {
    pub iteration: usize,
    pub best_cost: f64,
    pub simplex_diameter: f64,
    pub evals: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MdsResult {
    pub x_best: Vec<f64>,
    pub cost_best: f64,
    pub evals: usize,
    pub iterations: usize,
    pub stop_reason: StopReason,
    pub trace: Vec<TraceRow>,
}

/// `0.1 |x_j|` for nonzero coordinates, `0.01` otherwise.
pub fn default_steps(x0: &[f64]) -> Vec<f64> {
    x0.iter()
        .map(|&v| if v != 0.0 { 0.1 * v.abs() } else { 0.01 })
        .collect()
}

/// `x0` followed by `x0 + steps[j] e_j` for each coordinate `j`.
pub fn initial_simplex(x0: &[f64], steps: &[f64]) -> Result<Vec<Vec<f64>>, MdsError> {
    if steps.len() != x0.len() {
        return Err(MdsError::DimensionMismatch {
            expected: x0.len(),
            got: steps.len(),
        });
    }
    if let Some((index, &step)) = steps
        .iter()
        .enumerate()
        .find(|(_, s)| !(**s > 0.0 && s.is_finite()))
    {
        return Err(MdsError::ZeroStep { index, step });
    }
    let mut simplex = Vec::with_capacity(x0.len() + 1);
    simplex.push(x0.to_vec());
    for (j, &step) in steps.iter().enumerate() {
        let mut v = x0.to_vec();
        v[j] += step;
        simplex.push(v);
    }
    Ok(simplex)
}

fn distance(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).powi(2)).sum::<f64>().sqrt()
}

/// Largest distance between two vertices.
pub fn simplex_diameter(simplex: &[Vec<f64>]) -> f64 {
    let mut diam: f64 = 0.0;
    for (i, a) in simplex.iter().enumerate() {
        for b in &simplex[i + 1..] {
            diam = diam.max(distance(a, b));
        }
    }
    diam
}

// Lowest index wins ties.
fn argmin(costs: &[f64]) -> usize {
    let mut best = 0;
    for (i, &c) in costs.iter().enumerate().skip(1) {
        if c < costs[best] {
            best = i;
        }
    }
    best
}

struct Evaluator<'a, F> {
    objective: F,
    bounds: &'a Bounds,
    parallel: bool,
    evals: usize,
}

impl<F: Fn(&[f64]) -> f64 + Sync> Evaluator<'_, F> {
    fn cost(&self, x: &[f64]) -> Option<f64> {
        self.bounds.contains(x).then(|| {
            let c = (self.objective)(x);
            if c.is_nan() { f64::INFINITY } else { c }
        })
    }

    /// Costs in input order; out-of-box points cost `+inf` and are not counted.
    fn batch(&mut self, points: &[Vec<f64>]) -> Vec<f64> {
        let raw: Vec<Option<f64>> = if self.parallel {
            points.par_iter().map(|p| self.cost(p)).collect()
        } else {
            points.iter().map(|p| self.cost(p)).collect()
        };
        self.evals += raw.iter().filter(|c| c.is_some()).count();
        raw.into_iter().map(|c| c.unwrap_or(f64::INFINITY)).collect()
    }
}

/// Moves every vertex except `best` to `best + factor (v - best)`.
fn transform(simplex: &[Vec<f64>], best: usize, factor: f64) -> Vec<Vec<f64>> {
    let pivot = &simplex[best];
    simplex
        .iter()
        .enumerate()
        .filter(|(j, _)| *j != best)
        .map(|(_, v)| pivot.iter().zip(v).map(|(&b, &x)| b + factor * (x - b)).collect())
        .collect()
}

fn replace_others(simplex: &mut [Vec<f64>], costs: &mut [f64], best: usize, points: Vec<Vec<f64>>, new_costs: Vec<f64>) {
    let others = (0..simplex.len()).filter(|&j| j != best);
    for ((j, p), c) in others.zip(points).zip(new_costs) {
        simplex[j] = p;
        costs[j] = c;
    }
}

fn min_cost(costs: &[f64]) -> f64 {
    costs.iter().copied().fold(f64::INFINITY, f64::min)
}

/// Minimizes `objective` over `bounds` starting from `x0`.
pub fn minimize<F>(objective: F, x0: &[f64], bounds: &Bounds, cfg: &MdsConfig) -> Result<MdsResult, MdsError>
where
    F: Fn(&[f64]) -> f64 + Sync,
{
    cfg.validate()?;
    let n = x0.len();
    if bounds.dim() != n {
        return Err(MdsError::DimensionMismatch {
            expected: n,
            got: bounds.dim(),
        });
    }
    if !bounds.contains(x0) {
        return Err(MdsError::StartOutsideBox);
    }
    let steps = cfg.initial_steps.clone().unwrap_or_else(|| default_steps(x0));
    let mut simplex = initial_simplex(x0, &steps)?;

    let mut eval = Evaluator {
        objective,
        bounds,
        parallel: cfg.parallel,
        evals: 0,
    };
    let mut costs = eval.batch(&simplex[..1]);
    if !costs[0].is_finite() {
        return Err(MdsError::InfeasibleStart);
    }
    costs.extend(eval.batch(&simplex[1..]));

    let initial_diameter = simplex_diameter(&simplex);
    let mut trace = Vec::new();
    let mut iteration = 0;
    let stop_reason = loop {
        let best = argmin(&costs);
        let diameter = simplex_diameter(&simplex);
        trace.push(TraceRow {
            iteration,
            best_cost: costs[best],
            simplex_diameter: diameter,
            evals: eval.evals,
        });
        if diameter < cfg.size_tol * initial_diameter {
            break StopReason::SizeTol;
        }
        if eval.evals + n > cfg.max_evals {
            break StopReason::MaxEvals;
        }
        iteration += 1;

        let reflected = transform(&simplex, best, -1.0);
        let reflected_costs = eval.batch(&reflected);
        let reflected_min = min_cost(&reflected_costs);
        if reflected_min < costs[best] {
            if eval.evals + n <= cfg.max_evals {
                let expanded = transform(&simplex, best, -cfg.expansion);
                let expanded_costs = eval.batch(&expanded);
                if min_cost(&expanded_costs) < reflected_min {
                    replace_others(&mut simplex, &mut costs, best, expanded, expanded_costs);
                    continue;
                }
            }
            replace_others(&mut simplex, &mut costs, best, reflected, reflected_costs);
        } else {
            let contracted = transform(&simplex, best, cfg.contraction);
            let contracted_costs = eval.batch(&contracted);
            replace_others(&mut simplex, &mut costs, best, contracted, contracted_costs);
        }
    };

    let best = argmin(&costs);
    Ok(MdsResult {
        x_best: simplex.swap_remove(best),
        cost_best: costs[best],
        evals: eval.evals,
        iterations: iteration,
        stop_reason,
        trace,
    })
}

/// Trace as CSV with header `iteration,best_cost,simplex_diameter,evals`.
pub fn trace_csv(trace: &[TraceRow]) -> String {
    let mut out = String::from("iteration,best_cost,simplex_diameter,evals\n");
    for row in trace {
        writeln!(out, "{},{:e},{:e},{}", row.iteration, row.best_cost, row.simplex_diameter, row.evals)
            .expect("writing to a String");
    }
    out
}
