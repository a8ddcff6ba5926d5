//! Reference parameter set and deterministic synthetic data.
//!
//! The reference values are the published optimum for the 13 regions. They
//! drive noise-free and noisy identification datasets, and a set of raw
//! source files (one per adapter family) for exercising the whole pipeline.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use chrono::{Datelike, Days, NaiveDate};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::dynamics::{simulate, GlobalParams, RegionInit};
use crate::region::{Indicator, RegionCode};
use crate::series::{DailySeries, FitWindow};

pub const REFERENCE_A: f64 = -7.1139e-2;
pub const REFERENCE_U: f64 = -6.2489e-3;

/// `(region, delta0, f0)` at the window start.
pub const REFERENCE_INITS: [(u8, f64, f64); 13] = [
    (84, 0.3221, 7.0714),
    (27, 0.2667, 6.277),
    (24, 0.3598, 1.7143),
    (44, 0.2054, 42.8393),
    (32, 0.3032, 7.9161),
    (11, 0.3211, 37.0938),
    (75, 0.3167, 1.0),
    (76, 0.295, 3.4643),
    (52, 0.3088, 2.3189),
    (53, 0.2284, 1.8857),
    (94, 0.1204, 1.3255),
    (28, 0.3737, 1.2857),
    (93, 0.2923, 5.2883),
];

pub fn reference_params() -> GlobalParams {
    GlobalParams::new(REFERENCE_A, REFERENCE_U).expect("reference parameters are valid")
}

pub fn reference_inits() -> BTreeMap<RegionCode, RegionInit> {
    REFERENCE_INITS
        .iter()
        .map(|&(code, delta0, f0)| {
            (
                RegionCode::new(code.into()).expect("mainland code"),
                RegionInit::new(f0, delta0).expect("valid init"),
            )
        })
        .collect()
}

/// Model output over `window` for every region in `inits`, optionally with
/// multiplicative noise `1 + rel_noise * z`, `z` standard normal.
pub fn model_dataset(
    params: &GlobalParams,
    inits: &BTreeMap<RegionCode, RegionInit>,
    window: &FitWindow,
    noise: Option<(f64, u64)>,
) -> BTreeMap<RegionCode, DailySeries> {
    let mut rng = noise.map(|(_, seed)| ChaCha8Rng::seed_from_u64(seed));
    inits
        .iter()
        .map(|(&region, init)| {
            let mut f = simulate(params, init, window.len() - 1)
                .expect("reference dynamics stay finite")
                .f;
            if let (Some((rel, _)), Some(rng)) = (noise, rng.as_mut()) {
                for v in &mut f {
                    let z: f64 = StandardNormal.sample(rng);
                    *v *= 1.0 + rel * z;
                }
            }
            let s = DailySeries::new(region, Indicator::MeanExcess20Corr, window.start, f)
                .expect("finite values");
            (region, s)
        })
        .collect()
}

/// Reference dataset over `window`.
pub fn reference_dataset(window: &FitWindow, noise: Option<(f64, u64)>) -> BTreeMap<RegionCode, DailySeries> {
    model_dataset(&reference_params(), &reference_inits(), window, noise)
}

/// Runs the model backward from `(f0, delta0)` at `k0` for `back` days and
/// forward for `ahead` days; element `back` is the state at `k0`.
pub fn two_sided_signal(params: &GlobalParams, init: &RegionInit, back: usize, ahead: usize) -> Vec<f64> {
    let growth = 1.0 + params.a;
    let mut earlier = Vec::with_capacity(back);
    let (mut f, mut delta) = (init.f0, init.delta0);
    for _ in 0..back {
        delta = (delta - params.u) / growth;
        f /= 1.0 + delta;
        earlier.push(f);
    }
    earlier.reverse();
    let forward = simulate(params, init, ahead).expect("reference dynamics stay finite").f;
    earlier.extend(forward);
    earlier
}

/// Planted `(eta, mu)` per validation indicator in the fixture sources.
pub const FIXTURE_LAGS: [(Indicator, i32, f64); 9] = [
    (Indicator::IncidHosp, 4, 2.89),
    (Indicator::IncidRea, 6, 0.53),
    (Indicator::IncidDc, -2, 0.47),
    (Indicator::IncidRad, -5, 0.95),
    (Indicator::IncidInserm, -1, 0.28),
    (Indicator::Pos, 5, 1.5),
    (Indicator::NbrePassCorona, 7, 1.05),
    (Indicator::NbreHospitCorona, 7, 0.47),
    (Indicator::NbreActeCorona, 11, 0.39),
];

/// One raw source file and the adapter that reads it.
#[derive(Debug, Clone, PartialEq)]
pub struct FixtureSource {
    pub file_name: String,
    pub contents: String,
    pub adapter_name: String,
    pub adapter_json: String,
}

fn date(y: i32, m: u32, d: u32) -> NaiveDate {
    NaiveDate::from_ymd_opt(y, m, d).expect("valid date")
}

/// Raw source files for `regions` covering Jan–Jun of 2018–2020, with
/// excess deaths following the reference dynamics and each validation
/// indicator a rounded, scaled and shifted copy of it. Two rows for an
/// overseas region (code 01) are included in every file.
pub fn fixture_sources(regions: &[RegionCode], seed: u64) -> Vec<FixtureSource> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let params = reference_params();
    let inits = reference_inits();
    let k0 = FitWindow::default().start;
    let first = date(2020, 1, 1);
    let last = date(2020, 6, 30);
    let back = (k0 - first).num_days() as usize;
    let ahead = (last - k0).num_days() as usize;

    // Signal per region on 2020-01-01..=2020-06-30.
    let signal: BTreeMap<RegionCode, Vec<f64>> = regions
        .iter()
        .map(|r| (*r, two_sided_signal(&params, &inits[r], back, ahead)))
        .collect();
    let signal_at = |r: &RegionCode, d: NaiveDate| -> f64 {
        let k = (d - first).num_days();
        if k < 0 {
            0.0
        } else {
            signal[r].get(k as usize).copied().unwrap_or(0.0)
        }
    };
    let mut noise = |scale: f64| -> f64 {
        let z: f64 = StandardNormal.sample(&mut rng);
        scale * z
    };

    let mut deaths = String::from("REG,JOUR,N\n");
    for year in [2018, 2019, 2020] {
        for r in regions {
            let base = 20.0 + f64::from(r.code()) / 2.0;
            let mut d = date(year, 1, 1);
            while d <= date(year, 6, 30) {
                let season = 1.0 + 0.15 * (2.0 * std::f64::consts::PI * f64::from(d.ordinal0()) / 365.0).cos();
                let excess = if year == 2020 { signal_at(r, d) } else { 0.0 };
                let n = (base * season + excess + noise(base.sqrt())).round().max(0.0);
                writeln!(deaths, "{},{},{}", r.code(), d.format("%d/%m/%Y"), n).unwrap();
                d = d + Days::new(1);
            }
        }
        writeln!(deaths, "1,01/03/{year},4").unwrap();
    }

    let lag = |ind: Indicator| FIXTURE_LAGS.iter().find(|(i, _, _)| *i == ind).expect("planted lag");
    let mut measured = |r: &RegionCode, d: NaiveDate, ind: Indicator| -> f64 {
        let (_, eta, mu) = *lag(ind);
        let shifted = if eta >= 0 {
            d - Days::new(eta as u64)
        } else {
            d + Days::new(eta.unsigned_abs() as u64)
        };
        let v = mu * signal_at(r, shifted);
        (v + noise(0.05 * v.sqrt())).round().max(0.0)
    };

    let days_from = |start: NaiveDate| start.iter_days().take_while(move |d| *d <= last);
    let mut hosp = String::from("reg;jour;incid_hosp;incid_rea;incid_dc;incid_rad\n");
    let mut inserm = String::from("region;date;nb_deces\n");
    let mut tests = String::from("reg;jour;cl_age90;T;P\n");
    let mut sos = String::from("region_name\tdate_de_passage\tnbre_pass_tot\tnbre_pass_corona\tnbre_hospit_corona\tnbre_acte_tot\tnbre_acte_corona\n");
    for r in regions {
        for d in days_from(date(2020, 3, 1)) {
            writeln!(
                hosp,
                "{};{};{};{};{};{}",
                r.code(),
                d,
                measured(r, d, Indicator::IncidHosp),
                measured(r, d, Indicator::IncidRea),
                measured(r, d, Indicator::IncidDc),
                measured(r, d, Indicator::IncidRad)
            )
            .unwrap();
            writeln!(inserm, "{};{};{}", r.code(), d.format("%d/%m/%Y"), measured(r, d, Indicator::IncidInserm)).unwrap();
            let pos = measured(r, d, Indicator::Pos);
            writeln!(tests, "{};{};0;{};{}", r.code(), d, (pos * 8.0).round(), pos).unwrap();
            writeln!(tests, "{};{};09;{};{}", r.code(), d, 1.0, 0.0).unwrap();
            let pass = measured(r, d, Indicator::NbrePassCorona);
            let hospit = measured(r, d, Indicator::NbreHospitCorona);
            let acte = measured(r, d, Indicator::NbreActeCorona);
            writeln!(
                sos,
                "{}\t{}\t{}\t{}\t{}\t{}\t{}",
                r.name(),
                d,
                pass + 400.0,
                pass,
                hospit,
                acte + 150.0,
                acte
            )
            .unwrap();
        }
    }
    writeln!(hosp, "01;2020-03-18;1;0;0;0").unwrap();
    writeln!(inserm, "01;18/03/2020;0").unwrap();
    writeln!(tests, "01;2020-03-18;0;5;1").unwrap();
    writeln!(sos, "Guadeloupe\t2020-03-18\t30\t1\t0\t4\t0").unwrap();

    vec![
        FixtureSource {
            file_name: "deces.csv".into(),
            contents: deaths,
            adapter_name: "insee_deaths.json".into(),
            adapter_json: r#"{"source_id":"insee_deaths","delimiter":",","date_format":"%d/%m/%Y","column_map":{"region":"REG","date":"JOUR","deaths":"N"}}"#.into(),
        },
        FixtureSource {
            file_name: "hospit-incid-reg.csv".into(),
            contents: hosp,
            adapter_name: "hosp_incidence.json".into(),
            adapter_json: r#"{"source_id":"hosp_incidence","column_map":{"region":"reg","date":"jour","incid_hosp":"incid_hosp","incid_rea":"incid_rea","incid_dc":"incid_dc","incid_rad":"incid_rad"}}"#.into(),
        },
        FixtureSource {
            file_name: "cepidc.csv".into(),
            contents: inserm,
            adapter_name: "inserm_cert.json".into(),
            adapter_json: r#"{"source_id":"inserm_cert","date_format":"%d/%m/%Y","column_map":{"region":"region","date":"date","incid_inserm":"nb_deces"}}"#.into(),
        },
        FixtureSource {
            file_name: "sp-pos-quot-reg.csv".into(),
            contents: tests,
            adapter_name: "tests.json".into(),
            adapter_json: r#"{"source_id":"tests","row_filter":{"cl_age90":"0"},"column_map":{"region":"reg","date":"jour","test":"T","pos":"P"}}"#.into(),
        },
        FixtureSource {
            file_name: "sursaud-reg.tsv".into(),
            contents: sos,
            adapter_name: "emergency_sos.json".into(),
            adapter_json: r#"{"source_id":"emergency_sos","delimiter":"\t","region_column_kind":"name","column_map":{"region":"region_name","date":"date_de_passage","nbre_pass_tot":"nbre_pass_tot","nbre_pass_corona":"nbre_pass_corona","nbre_hospit_corona":"nbre_hospit_corona","nbre_acte_tot":"nbre_acte_tot","nbre_acte_corona":"nbre_acte_corona"}}"#.into(),
        },
    ]
}
