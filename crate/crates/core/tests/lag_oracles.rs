use std::collections::BTreeMap;

use chrono::{Days, NaiveDate};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use regiofit::lagfit::{best_mu, fit_lag_scale, validate_all, LagSearchSpec};
use regiofit::synthetic::{reference_inits, reference_params, two_sided_signal};
use regiofit::{DailySeries, FitWindow, Indicator, RegionCode};

fn d(m: u32, day: u32) -> NaiveDate {
    NaiveDate::from_ymd_opt(2020, m, day).unwrap()
}

fn region(code: i64) -> RegionCode {
    RegionCode::new(code).unwrap()
}

/// Reference model signal for `code` on 2020-02-01..2020-07-01.
fn model_f(code: i64) -> DailySeries {
    let r = region(code);
    let back = (FitWindow::default().start - d(2, 1)).num_days() as usize;
    let values = two_sided_signal(&reference_params(), &reference_inits()[&r], back, 106);
    DailySeries::new(r, Indicator::Fhat, d(2, 1), values).unwrap()
}

/// `mu * f(t - eta)` on every date where the source exists, times `1 + rel * N(0,1)`.
fn planted(f: &DailySeries, ind: Indicator, eta: i32, mu: f64, noise: Option<(f64, &mut ChaCha8Rng)>) -> DailySeries {
    let start = if eta >= 0 {
        f.start() + Days::new(eta as u64)
    } else {
        f.start() - Days::new(eta.unsigned_abs() as u64)
    };
    let mut values: Vec<f64> = f.values().iter().map(|v| mu * v).collect();
    if let Some((rel, rng)) = noise {
        for v in &mut values {
            let z: f64 = StandardNormal.sample(rng);
            *v *= 1.0 + rel * z;
        }
    }
    DailySeries::new(f.region(), ind, start, values).unwrap()
}

#[test]
fn best_mu_matches_dense_grid() {
    let mut rng = ChaCha8Rng::seed_from_u64(100);
    let window = FitWindow::new(d(3, 10), d(4, 20)).unwrap();
    for _ in 0..100 {
        let r = region(44);
        let f: Vec<f64> = (0..80).map(|_| rng.random_range(0.0..20.0)).collect();
        let true_mu = rng.random_range(0.0..8.0);
        let h: Vec<f64> = f.iter().map(|v| true_mu * v + rng.random_range(-5.0..5.0)).collect();
        let eta = rng.random_range(-10..=15);
        let f = DailySeries::new(r, Indicator::Fhat, d(2, 25), f).unwrap();
        let h = DailySeries::new(r, Indicator::IncidHosp, d(2, 25), h).unwrap();
        let fit = best_mu(&h, &f, eta, &window).unwrap();

        let pairs: Vec<(f64, f64)> = window
            .dates()
            .filter_map(|t| {
                let s = if eta >= 0 { t - Days::new(eta as u64) } else { t + Days::new((-eta) as u64) };
                Some((h.get(t)?, f.get(s)?))
            })
            .collect();
        assert_eq!(pairs.len(), fit.n_overlap);
        let sse = |mu: f64| pairs.iter().map(|(hv, fv)| (hv - mu * fv).powi(2)).sum::<f64>();
        let grid_mu = (0..=100_000)
            .map(|i| i as f64 * 1e-4)
            .min_by(|a, b| sse(*a).total_cmp(&sse(*b)))
            .unwrap();
        assert!((fit.mu - grid_mu).abs() <= 1e-4, "mu {} grid {}", fit.mu, grid_mu);
        assert!(fit.sse <= sse(grid_mu) * (1.0 + 1e-12));
    }
}

#[test]
fn planted_lags_recovered_under_noise() {
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    let spec = LagSearchSpec::default();
    for code in [11, 44, 84] {
        let f = model_f(code);
        for (eta, mu) in [(6, 0.8), (-2, 0.47), (11, 0.39), (-5, 0.95)] {
            let h = planted(&f, Indicator::IncidRea, eta, mu, Some((0.02, &mut rng)));
            let fit = fit_lag_scale(&h, &f, &spec).unwrap();
            assert_eq!(fit.eta, eta, "region {code}");
            assert!((fit.mu / mu - 1.0).abs() < 0.05, "region {code}: mu {} vs {mu}", fit.mu);
        }
    }
}

#[test]
fn scale_and_shift_equivariance() {
    let f = model_f(84);
    let spec = LagSearchSpec::default();
    let h = planted(&f, Indicator::Pos, 3, 1.7, None);
    let base = fit_lag_scale(&h, &f, &spec).unwrap();
    assert_eq!((base.eta, base.n_overlap > 0), (3, true));
    for c in [0.25, 4.0] {
        let scaled = fit_lag_scale(&h.scaled(c), &f, &spec).unwrap();
        assert_eq!(scaled.eta, base.eta);
        assert!((scaled.mu - c * base.mu).abs() <= 1e-9 * c * base.mu);
    }
    for shift in [-4, 2, 7] {
        let moved = planted(&f, Indicator::Pos, 3 + shift, 1.7, None);
        assert_eq!(fit_lag_scale(&moved, &f, &spec).unwrap().eta, 3 + shift);
    }
}

#[test]
fn validate_all_three_regions_nine_indicators() {
    let lags = [
        (Indicator::IncidHosp, 4, 2.89),
        (Indicator::IncidRea, 6, 0.53),
        (Indicator::IncidDc, -2, 0.47),
        (Indicator::IncidRad, -5, 0.95),
        (Indicator::Pos, 5, 1.5),
        (Indicator::IncidInserm, -1, 0.28),
        (Indicator::NbrePassCorona, 7, 1.05),
        (Indicator::NbreHospitCorona, 8, 0.47),
        (Indicator::NbreActeCorona, 11, 0.39),
    ];
    let mut model = BTreeMap::new();
    let mut measured = BTreeMap::new();
    for code in [11, 44, 84] {
        let f = model_f(code);
        for (ind, eta, mu) in lags {
            measured.insert((f.region(), ind), planted(&f, ind, eta, mu, None));
        }
        model.insert(f.region(), f);
    }
    let report = validate_all(&model, &measured, &LagSearchSpec::default());
    assert!(report.failures.is_empty());
    assert_eq!(report.fits.len(), 27);
    for fit in &report.fits {
        let (_, eta, mu) = lags.iter().find(|(i, _, _)| *i == fit.indicator).unwrap();
        assert_eq!(fit.eta, *eta);
        assert!((fit.mu - mu).abs() <= 1e-6);
    }
    let keys: Vec<_> = report.fits.iter().map(|f| (f.region, f.indicator)).collect();
    let mut sorted = keys.clone();
    sorted.sort();
    assert_eq!(keys, sorted);
}

#[test]
fn missing_model_is_reported_not_fatal() {
    let f = model_f(84);
    let mut measured = BTreeMap::new();
    measured.insert((region(84), Indicator::IncidDc), planted(&f, Indicator::IncidDc, 1, 0.5, None));
    measured.insert((region(11), Indicator::IncidDc), planted(&f, Indicator::IncidDc, 1, 0.5, None));
    let model = BTreeMap::from([(region(84), f)]);
    let report = validate_all(&model, &measured, &LagSearchSpec::default());
    assert_eq!(report.fits.len(), 1);
    assert_eq!(report.failures.len(), 1);
    assert_eq!(report.failures[0].region, region(11));
}
