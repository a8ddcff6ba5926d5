use std::collections::BTreeMap;

use chrono::{Days, NaiveDate};
use proptest::prelude::*;
use regiofit::ingest::{
    group_series, parse_source, read_canonical, write_canonical, CanonicalRecord, SourceAdapterConfig,
};
use regiofit::synthetic::fixture_sources;
use regiofit::{Indicator, RegionCode, MAINLAND_REGIONS};

fn record() -> impl Strategy<Value = CanonicalRecord> {
    (
        0..MAINLAND_REGIONS.len(),
        0..Indicator::SOURCE.len(),
        0u64..2_000,
        prop_oneof![
            0.0f64..1e6,
            (0u32..100_000).prop_map(f64::from),
            1e-300f64..1e-290,
            1e290f64..1e300,
        ],
    )
        .prop_map(|(r, i, day, value)| CanonicalRecord {
            region: MAINLAND_REGIONS[r],
            indicator: Indicator::SOURCE[i],
            date: NaiveDate::from_ymd_opt(2018, 1, 1).unwrap() + Days::new(day),
            value,
        })
}

fn unique(records: Vec<CanonicalRecord>) -> Vec<CanonicalRecord> {
    let by_key: BTreeMap<_, _> = records.into_iter().map(|r| (r.key(), r)).collect();
    by_key.into_values().collect()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn canonical_round_trip(records in prop::collection::vec(record(), 1000).prop_map(unique)) {
        let bytes = write_canonical(&records);
        let back = read_canonical(&bytes).unwrap();
        prop_assert_eq!(&back, &records);
        prop_assert_eq!(write_canonical(&back), bytes);
    }

    #[test]
    fn write_ignores_input_order(records in prop::collection::vec(record(), 50).prop_map(unique)) {
        let mut reversed = records.clone();
        reversed.reverse();
        prop_assert_eq!(write_canonical(&reversed), write_canonical(&records));
    }
}

#[test]
fn fixture_sources_parse_to_mainland_series() {
    let regions: Vec<RegionCode> = [11, 44, 84].map(|c| RegionCode::new(c).unwrap()).to_vec();
    let sources = fixture_sources(&regions, 3);
    assert_eq!(sources.len(), 5);
    let mut all = Vec::new();
    for src in &sources {
        let cfg = SourceAdapterConfig::from_json(&src.adapter_json).unwrap();
        let out = parse_source(src.contents.as_bytes(), &cfg).unwrap();
        assert!(out.dropped_region_rows > 0, "{} keeps its overseas rows", src.file_name);
        assert!(out.records.iter().all(|r| regions.contains(&r.region)));
        all.extend(out.records);
    }
    let series = group_series(&all).unwrap();
    for r in &regions {
        for ind in Indicator::VALIDATION {
            assert!(series.contains_key(&(*r, ind)), "{r} {ind}");
        }
        for ind in [Indicator::Deces2018, Indicator::Deces2019, Indicator::Deces2020] {
            assert!(series[&(*r, ind)].interpolated.is_empty());
        }
    }
    let bytes = write_canonical(&all);
    assert_eq!(read_canonical(&bytes).unwrap().len(), all.len());
}
