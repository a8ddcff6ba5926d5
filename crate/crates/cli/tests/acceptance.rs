//! Acceptance suite: one PASS/FAIL line per criterion. Criterion 8 runs only
//! when `REGIOFIT_REAL_CONFIG` points at a pipeline configuration for the
//! real source files, and never fails the run.

mod common;

use std::collections::BTreeMap;
use std::process::ExitCode;
use std::time::Instant;

use chrono::{Days, NaiveDate};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;
use regiofit::dynamics::{delta_closed_form, peak_step, simulate};
use regiofit::identify::{default_weights, identify, objective, IdentifyOptions};
use regiofit::ingest::{read_canonical, write_canonical, CanonicalRecord};
use regiofit::lagfit::{best_mu, fit_lag_scale, LagSearchSpec};
use regiofit::synthetic::{reference_dataset, reference_inits, reference_params, two_sided_signal};
use regiofit::torczon::{minimize, Bounds, MdsConfig, MdsResult};
use regiofit::{DailySeries, FitWindow, GlobalParams, Indicator, RegionCode, RegionInit, MAINLAND_REGIONS};

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: String) -> Outcome {
    Outcome { pass, detail }
}

fn d(m: u32, day: u32) -> NaiveDate {
    NaiveDate::from_ymd_opt(2020, m, day).unwrap()
}

fn region(code: i64) -> RegionCode {
    RegionCode::new(code).unwrap()
}

fn noise_free_recovery() -> Outcome {
    let w = FitWindow::default();
    let data = reference_dataset(&w, None);
    let q = default_weights(&data).unwrap();
    let t = Instant::now();
    let m = identify(&data, &w, &q, &IdentifyOptions::default()).unwrap();
    let secs = t.elapsed().as_secs_f64();
    let p = reference_params();
    let (da, du) = ((m.params.a - p.a).abs(), (m.params.u - p.u).abs());
    let ratio = m.cost / m.warm_start_cost;
    let pass = da <= 5e-3 && du <= 5e-4 && ratio <= 1e-6 && secs < 300.0;
    outcome(
        pass,
        format!(
            "|da|={da:.3e} |du|={du:.3e} warm={:.3e} final={:.3e} ratio={ratio:.3e} time={secs:.1}s",
            m.warm_start_cost, m.cost
        ),
    )
}

fn noisy_recovery() -> Outcome {
    let w = FitWindow::default();
    let p = reference_params();
    let errs: Vec<(u64, f64, f64)> = (1..=5u64)
        .into_par_iter()
        .map(|seed| {
            let data = reference_dataset(&w, Some((0.05, seed)));
            let q = default_weights(&data).unwrap();
            let m = identify(&data, &w, &q, &IdentifyOptions::default()).unwrap();
            (seed, (m.params.a / p.a - 1.0).abs(), (m.params.u / p.u - 1.0).abs())
        })
        .collect();
    let pass = errs.iter().all(|&(_, ea, eu)| ea <= 0.15 && eu <= 0.15);
    let detail = errs
        .iter()
        .map(|(s, ea, eu)| format!("seed {s}: a {:.1}% u {:.1}%", 100.0 * ea, 100.0 * eu))
        .collect::<Vec<_>>()
        .join(", ");
    outcome(pass, detail)
}

fn closed_form_equivalence() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let mut worst = 0.0f64;
    for _ in 0..1000 {
        let a = rng.random_range(-0.5..0.2);
        let u = rng.random_range(-0.05..0.05);
        let delta0 = rng.random_range(-0.5..1.0);
        let p = GlobalParams::new(a, u).unwrap();
        let mut dk = delta0;
        let t = simulate(&p, &RegionInit::new(1.0, delta0).unwrap(), 200);
        for k in 0..=200u32 {
            if let Ok(t) = &t {
                dk = t.delta[k as usize];
            }
            let closed = delta_closed_form(&p, delta0, k);
            let scale = dk.abs().max(closed.abs());
            if scale > 0.0 {
                worst = worst.max((closed - dk).abs() / scale);
            }
            if t.is_err() {
                dk = (1.0 + a) * dk + u;
            }
        }
    }
    outcome(worst <= 1e-10, format!("max relative deviation {worst:.3e} over 1000 draws x 200 steps"))
}

fn peak_timing() -> Outcome {
    let p = reference_params();
    let init = reference_inits()[&region(84)];
    let star = p.delta_limit();
    let crossing = ((-star) / (init.delta0 - star)).ln() / (1.0 + p.a).ln();
    let expected = crossing.ceil() as usize;
    let got = peak_step(&p, &init, 365);
    outcome(got == Some(expected) && expected == 21, format!("peak_step={got:?} closed form={expected}"))
}

fn scaling_law() -> Outcome {
    let w = FitWindow::default();
    let data = reference_dataset(&w, Some((0.05, 11)));
    let q = default_weights(&data).unwrap();
    let inits: BTreeMap<_, _> = reference_inits()
        .into_iter()
        .map(|(r, i)| (r, RegionInit { f0: i.f0 * 1.1, delta0: i.delta0 * 0.95 }))
        .collect();
    let params = GlobalParams::new(-0.06, -0.007).unwrap();
    let base = objective(&params, &inits, &data, &q);
    let mut worst_obj = 0.0f64;
    let mut worst_lin = 0.0f64;
    for c in [0.5, 3.0, 10.0] {
        let sd: BTreeMap<_, _> = data.iter().map(|(r, s)| (*r, s.scaled(c))).collect();
        let si: BTreeMap<_, _> = inits.iter().map(|(r, i)| (*r, RegionInit { f0: c * i.f0, ..*i })).collect();
        let scaled = objective(&params, &si, &sd, &q);
        worst_obj = worst_obj.max((scaled - c * c * base).abs() / (c * c * base));
        for (r, init) in &inits {
            let a = simulate(&params, init, 60).unwrap();
            let b = simulate(&params, &si[r], 60).unwrap();
            for (x, y) in a.f.iter().zip(&b.f) {
                worst_lin = worst_lin.max((y - c * x).abs() / (c * x));
            }
        }
    }
    outcome(
        worst_obj <= 1e-9 && worst_lin <= 1e-12,
        format!("objective scaling rel err {worst_obj:.3e}, f-linearity rel err {worst_lin:.3e}"),
    )
}

fn model_f(code: i64) -> DailySeries {
    let r = region(code);
    let back = (FitWindow::default().start - d(2, 1)).num_days() as usize;
    let values = two_sided_signal(&reference_params(), &reference_inits()[&r], back, 106);
    DailySeries::new(r, Indicator::Fhat, d(2, 1), values).unwrap()
}

fn planted(f: &DailySeries, eta: i32, mu: f64, rel: f64, rng: &mut ChaCha8Rng) -> DailySeries {
    let start = f.start().checked_add_signed(chrono::Duration::days(eta.into())).unwrap();
    let values = f
        .values()
        .iter()
        .map(|v| {
            let z: f64 = StandardNormal.sample(rng);
            mu * v * (1.0 + rel * z)
        })
        .collect();
    DailySeries::new(f.region(), Indicator::IncidHosp, start, values).unwrap()
}

fn lag_oracles() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    let window = FitWindow::new(d(3, 10), d(4, 20)).unwrap();
    let mut grid_err = 0.0f64;
    for _ in 0..100 {
        let f: Vec<f64> = (0..80).map(|_| rng.random_range(0.0..20.0)).collect();
        let mu: f64 = rng.random_range(0.0..8.0);
        let h: Vec<f64> = f.iter().map(|v| mu * v + rng.random_range(-5.0..5.0)).collect();
        let eta = rng.random_range(-10..=15);
        let f = DailySeries::new(region(44), Indicator::Fhat, d(2, 25), f).unwrap();
        let h = DailySeries::new(region(44), Indicator::IncidHosp, d(2, 25), h).unwrap();
        let fit = best_mu(&h, &f, eta, &window).unwrap();
        let pairs: Vec<(f64, f64)> = window
            .dates()
            .filter_map(|t| {
                let ft = f.get(t.checked_add_signed(chrono::Duration::days(-i64::from(eta)))?)?;
                Some((h.get(t)?, ft))
            })
            .collect();
        let sse = |m: f64| pairs.iter().map(|(h, f)| (h - m * f).powi(2)).sum::<f64>();
        let grid_best = (0..=100_000)
            .map(|i| i as f64 * 1e-4)
            .min_by(|x, y| sse(*x).total_cmp(&sse(*y)))
            .unwrap();
        grid_err = grid_err.max((grid_best - fit.mu).abs());
    }
    let spec = LagSearchSpec::default();
    let mut misses = Vec::new();
    for code in [11, 44, 84] {
        let f = model_f(code);
        for (eta, mu) in [(4, 2.89), (-2, 0.47), (-5, 0.95), (0, 0.33), (11, 0.39), (-10, 1.2), (15, 0.7)] {
            let fit = fit_lag_scale(&planted(&f, eta, mu, 0.02, &mut rng), &f, &spec).unwrap();
            if fit.eta != eta || (fit.mu / mu - 1.0).abs() > 0.05 {
                misses.push(format!("{code}: planted ({eta},{mu}) got ({},{:.3})", fit.eta, fit.mu));
            }
        }
    }
    outcome(
        grid_err <= 1e-4 && misses.is_empty(),
        format!("max |mu - grid| {grid_err:.2e}; planted lags missed: {}", misses.len()),
    )
}

fn rosenbrock(x: &[f64]) -> f64 {
    100.0 * (x[1] - x[0] * x[0]).powi(2) + (1.0 - x[0]).powi(2)
}

fn monotone(r: &MdsResult) -> bool {
    r.trace.windows(2).all(|w| w[1].best_cost <= w[0].best_cost)
}

fn optimizer_suite() -> Outcome {
    let mut runs = Vec::new();
    let center = [1.0, -2.0, 0.5, 3.0];
    let quad = |x: &[f64]| x.iter().zip(&center).map(|(a, b)| (a - b).powi(2)).sum::<f64>();
    let q = minimize(quad, &[0.0; 4], &Bounds::unbounded(4), &MdsConfig::default()).unwrap();
    let quad_err = q.x_best.iter().zip(&center).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
    runs.push(q);
    let cfg = MdsConfig { max_evals: 20_000, ..MdsConfig::default() };
    let r = minimize(rosenbrock, &[-1.2, 1.0], &Bounds::unbounded(2), &cfg).unwrap();
    let rosen = (r.cost_best, r.evals);
    runs.push(r);
    for parallel in [false, true] {
        let b = Bounds::new(vec![-2.0, -0.5], vec![0.5, 2.0]).unwrap();
        let cfg = MdsConfig { max_evals: 5_000, parallel, ..MdsConfig::default() };
        runs.push(minimize(rosenbrock, &[0.0, 0.0], &b, &cfg).unwrap());
    }
    let mono = runs.iter().all(monotone);
    outcome(
        quad_err <= 1e-4 && rosen.0 < 1e-3 && rosen.1 <= 20_000 && mono,
        format!(
            "quadratic max err {quad_err:.2e}; rosenbrock cost {:.2e} in {} evals; monotone {mono}",
            rosen.0, rosen.1
        ),
    )
}

type LagRow = [(Indicator, i32, f64); 9];

const TABLE: [(i64, LagRow); 3] = {
    use Indicator::*;
    [
        (11, [(IncidHosp, 4, 2.890469), (IncidRea, 6, 0.530296), (IncidDc, -2, 0.474127), (IncidRad, -5, 0.951683), (IncidInserm, -1, 0.275693), (Pos, 5, 1.496454), (NbrePassCorona, 7, 1.053246), (NbreHospitCorona, 7, 0.470787), (NbreActeCorona, 11, 0.385416)]),
        (44, [(IncidHosp, 3, 2.846007), (IncidRea, 5, 0.524773), (IncidDc, -1, 0.505064), (IncidRad, -5, 0.966889), (IncidInserm, 0, 0.331267), (Pos, -1, 0.853961), (NbrePassCorona, 2, 2.487286), (NbreHospitCorona, 3, 1.116551), (NbreActeCorona, 6, 0.859851)]),
        (84, [(IncidHosp, 5, 3.430858), (IncidRea, 6, 0.806820), (IncidDc, -3, 0.399725), (IncidRad, -3, 1.261361), (IncidInserm, -2, 0.343933), (Pos, 5, 0.693771), (NbrePassCorona, 6, 5.060418), (NbreHospitCorona, 7, 2.269344), (NbreActeCorona, 10, 1.831710)]),
    ]
};

fn real_data() -> Option<Outcome> {
    let cfg = std::env::var("REGIOFIT_REAL_CONFIG").ok()?;
    let out = tempfile::tempdir().unwrap();
    let o = common::run(&["report", "--config", &cfg, "--out", out.path().to_str().unwrap()]);
    if !o.status.success() {
        return Some(outcome(false, format!("report failed: {}", common::stderr(&o).trim())));
    }
    let read = |name: &str| -> serde_json::Value {
        serde_json::from_slice(&std::fs::read(out.path().join(name)).unwrap()).unwrap()
    };
    let model = read("model.json");
    let lags = read("lag_table.json");
    let p = reference_params();
    let ea = (model["a"].as_f64().unwrap() / p.a - 1.0).abs();
    let eu = (model["u"].as_f64().unwrap() / p.u - 1.0).abs();
    let mut misses = 0;
    for (code, row) in TABLE {
        for (ind, eta, mu) in row {
            let cell = &lags["cells"][code.to_string()][ind.as_str()];
            let ok = cell["eta"].as_i64().is_some_and(|e| (e - i64::from(eta)).abs() <= 2)
                && cell["mu"].as_f64().is_some_and(|m| (m / mu - 1.0).abs() <= 0.2);
            misses += usize::from(!ok);
        }
    }
    Some(outcome(
        ea <= 0.1 && eu <= 0.1 && misses == 0,
        format!("a {:.1}% u {:.1}%; lag cells outside tolerance: {misses}/27", 100.0 * ea, 100.0 * eu),
    ))
}

fn random_record(rng: &mut ChaCha8Rng) -> CanonicalRecord {
    let indicators = [Indicator::Deces2020, Indicator::IncidHosp, Indicator::Pos, Indicator::MeanExcess20Corr];
    let indicator = indicators[rng.random_range(0..indicators.len())];
    let value = match rng.random_range(0..3) {
        0 => f64::from(rng.random_range(0u32..5000)),
        1 => rng.random_range(-1e3..1e3),
        _ => rng.random::<f64>() * 10f64.powi(rng.random_range(-12..12)),
    };
    CanonicalRecord {
        region: MAINLAND_REGIONS[rng.random_range(0..13)],
        indicator,
        date: NaiveDate::from_ymd_opt(2018, 1, 1).unwrap() + Days::new(rng.random_range(0..1000)),
        // source counts are non-negative; derived series may go below zero
        value: if indicator.is_source() { value.abs() } else { value },
    }
}

fn determinism() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let mut records = BTreeMap::new();
    while records.len() < 1000 {
        let r = random_record(&mut rng);
        records.insert(r.key(), r);
    }
    let records: Vec<_> = records.into_values().collect();
    let bytes = write_canonical(&records);
    let back = read_canonical(&bytes).unwrap();
    let round_trip = back == records && write_canonical(&back) == bytes;

    let dir = tempfile::tempdir().unwrap();
    let cfg = common::write_fixture(dir.path(), &[11, 44, 84], "");
    let mut trees = Vec::new();
    for name in ["run1", "run2"] {
        let out = dir.path().join(name);
        let o = common::run(&["report", "--config", cfg.to_str().unwrap(), "--out", out.to_str().unwrap()]);
        if !o.status.success() {
            return outcome(false, format!("report failed: {}", common::stderr(&o).trim()));
        }
        let mut files = BTreeMap::new();
        for entry in walk(&out) {
            files.insert(entry.strip_prefix(&out).unwrap().to_path_buf(), std::fs::read(&entry).unwrap());
        }
        trees.push(files);
    }
    let identical = trees[0] == trees[1];
    outcome(
        round_trip && identical,
        format!("round-trip {round_trip}; {} pipeline outputs byte-identical {identical}", trees[0].len()),
    )
}

fn walk(dir: &std::path::Path) -> Vec<std::path::PathBuf> {
    let mut out = Vec::new();
    for e in std::fs::read_dir(dir).unwrap().flatten() {
        let p = e.path();
        if p.is_dir() {
            out.extend(walk(&p));
        } else {
            out.push(p);
        }
    }
    out
}

fn main() -> ExitCode {
    let criteria: [(u8, fn() -> Outcome); 8] = [
        (1, noise_free_recovery),
        (2, noisy_recovery),
        (3, closed_form_equivalence),
        (4, peak_timing),
        (5, scaling_law),
        (6, lag_oracles),
        (7, optimizer_suite),
        (9, determinism),
    ];
    let mut failed = Vec::new();
    for (n, check) in criteria {
        let o = check();
        println!("criterion {n}: {} {}", if o.pass { "PASS" } else { "FAIL" }, o.detail);
        if !o.pass {
            failed.push(n);
        }
        if n == 7 {
            match real_data() {
                Some(o) => println!("criterion 8: {} (non-gating) {}", if o.pass { "PASS" } else { "FAIL" }, o.detail),
                None => println!("criterion 8: SKIP (non-gating) REGIOFIT_REAL_CONFIG not set"),
            }
        }
    }
    if failed.is_empty() {
        ExitCode::SUCCESS
    } else {
        println!("failing criteria: {failed:?}");
        ExitCode::FAILURE
    }
}
