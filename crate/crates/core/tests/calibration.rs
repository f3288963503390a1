mod common;

use chrono::{Datelike, NaiveDate};
use common::*;
use proptest::prelude::*;
use rand::seq::SliceRandom;
use rand::Rng;
use rand_distr::{Distribution, Normal};
use storage_game::market_data::{
    build_scenarios, calibrate, fit_price_slope, load_market_csv, parse_market_csv,
    select_representative_day, CsvColumns, HourlyRecord, MarketDataError, MonthKey,
};
use storage_game::synthetic::{write_market_csv, SyntheticMarket};

fn month() -> MonthKey {
    MonthKey {
        year: 2019,
        month: 3,
    }
}

fn record(day: u32, hour: u8, price: f64, net_demand: f64) -> HourlyRecord {
    HourlyRecord {
        date: NaiveDate::from_ymd_opt(2019, 3, day).unwrap(),
        hour,
        price,
        net_demand,
    }
}

fn day_records(day: u32, profile: &[f64]) -> Vec<HourlyRecord> {
    profile
        .iter()
        .enumerate()
        .map(|(h, &p)| record(day, h as u8, p, 20_000.0 + 100.0 * h as f64 + day as f64))
        .collect()
}

#[test]
fn noisy_month_slope_is_recovered() {
    let mut rng = rng(720);
    let noise = Normal::new(0.0, 1.0).unwrap();
    let records: Vec<HourlyRecord> = (0..720)
        .map(|k| {
            let demand = rng.random_range(15_000.0..35_000.0);
            record(
                1 + (k / 24) as u32,
                (k % 24) as u8,
                3.0 + 0.004 * demand + noise.sample(&mut rng),
                demand,
            )
        })
        .collect();
    let fit = fit_price_slope(&records, month()).unwrap();
    assert_eq!(fit.points, 720);
    assert!((0.0035..=0.0045).contains(&fit.slope), "{}", fit.slope);
}

#[test]
fn three_day_month_picks_the_nearest_day() {
    // Offsets from the common mean: lengths 5.0, 2.0 and 6.9, summing to zero.
    // Three offsets around their own centroid obey the triangle inequality,
    // so the largest cannot exceed the sum of the other two.
    let cos = (6.9_f64.powi(2) - 29.0) / 20.0;
    let sin = (1.0 - cos * cos).sqrt();
    let offsets = [
        (5.0, 0.0),
        (2.0 * cos, 2.0 * sin),
        (-5.0 - 2.0 * cos, -2.0 * sin),
    ];
    let base: Vec<f64> = (0..24)
        .map(|h| 40.0 + (h as f64 / 3.0).sin() * 10.0)
        .collect();
    let mut records = Vec::new();
    for (k, (dx, dy)) in offsets.iter().enumerate() {
        let mut profile = base.clone();
        profile[5] += dx;
        profile[17] += dy;
        records.extend(day_records(4 + k as u32, &profile));
    }
    let (date, distance) = brute_force_pick(&records);
    let pick = select_representative_day(&records, month()).unwrap();
    assert_eq!(pick.date.day(), 5);
    assert_eq!(pick.date, date);
    assert!((pick.distance - 2.0).abs() < 1e-9 && (distance - 2.0).abs() < 1e-9);
    assert_eq!(pick.complete_days, 3);
}

#[test]
fn selection_matches_brute_force_scan_on_random_months() {
    let mut rng = rng(99);
    for _ in 0..50 {
        let mut records = Vec::new();
        let days = rng.random_range(1..=28);
        for day in 1..=days {
            let profile: Vec<f64> = (0..24).map(|_| rng.random_range(-20.0..120.0)).collect();
            let mut rows = day_records(day, &profile);
            if day > 1 && rng.random_bool(0.2) {
                let drop = rng.random_range(0..24);
                rows.remove(drop);
            }
            records.extend(rows);
        }
        records.shuffle(&mut rng);
        let (date, distance) = brute_force_pick(&records);
        let pick = select_representative_day(&records, month()).unwrap();
        assert_eq!(pick.date, date);
        assert!((pick.distance - distance).abs() <= 1e-9 * distance.max(1.0));
        let observed: Vec<f64> = (0..24)
            .map(|h| {
                records
                    .iter()
                    .find(|r| r.date == date && r.hour == h)
                    .unwrap()
                    .price
            })
            .collect();
        assert_eq!(pick.profile, observed);
    }
}

proptest! {
    #[test]
    fn noise_free_slope_recovery(
        intercept in -100.0..100.0f64,
        slope in prop_oneof![1e-4..1e-2f64, -1e-2..-1e-4f64, 0.01..10.0f64],
        demands in proptest::collection::vec(0.0..50_000.0f64, 2..200),
    ) {
        let spread = demands.iter().copied().fold(f64::NEG_INFINITY, f64::max)
            - demands.iter().copied().fold(f64::INFINITY, f64::min);
        prop_assume!(spread > 1.0);
        let records: Vec<HourlyRecord> = demands
            .iter()
            .enumerate()
            .map(|(k, &d)| record(1 + (k / 24) as u32, (k % 24) as u8, intercept + slope * d, d))
            .collect();
        let fit = fit_price_slope(&records, month()).unwrap();
        prop_assert!((fit.slope - slope).abs() <= 1e-10 * slope.abs(), "{} vs {}", fit.slope, slope);
    }

    #[test]
    fn slope_ignores_record_order(seed in 0u64..1_000_000) {
        let mut rng = rng(seed);
        let mut records: Vec<HourlyRecord> = (0..240)
            .map(|k| {
                let d = rng.random_range(10_000.0..30_000.0);
                record(1 + (k / 24) as u32, (k % 24) as u8, rng.random_range(-10.0..90.0) + 0.003 * d, d)
            })
            .collect();
        let reference = fit_price_slope(&records, month()).unwrap();
        records.shuffle(&mut rng);
        prop_assert_eq!(fit_price_slope(&records, month()).unwrap(), reference);
    }

    #[test]
    fn scenario_probabilities_are_uniform(months in 1u32..=12) {
        let market = SyntheticMarket::default();
        let records: Vec<HourlyRecord> = market
            .generate(2019)
            .into_iter()
            .filter(|r| r.date.month() <= months)
            .collect();
        let set = build_scenarios(&records).unwrap();
        prop_assert_eq!(set.len(), months as usize);
        let total: f64 = set.iter().map(|s| s.probability).sum();
        prop_assert!((total - 1.0).abs() <= 1e-12);
        for s in &set {
            prop_assert_eq!(s.probability, 1.0 / months as f64);
            prop_assert!(s.slope.iter().all(|&a| a > 0.0 && a == s.slope[0]));
        }
    }
}

#[test]
fn synthetic_year_has_8760_rows_through_the_csv_path() {
    let records = SyntheticMarket::default().generate(2019);
    let mut csv = Vec::new();
    write_market_csv(&records, &mut csv).unwrap();
    let back = parse_market_csv(csv.as_slice(), &CsvColumns::default()).unwrap();
    assert_eq!(back.len(), 8760);
    assert_eq!(back, records);
}

#[test]
fn bundled_fixture_matches_the_generator() {
    let committed = std::fs::read_to_string(data_dir().join("synthetic_2019.csv")).unwrap();
    let mut regenerated = Vec::new();
    write_market_csv(&SyntheticMarket::default().generate(2019), &mut regenerated).unwrap();
    assert!(
        committed.as_bytes() == regenerated.as_slice(),
        "fixture is stale; regenerate it"
    );
}

#[test]
fn bundled_scenarios_match_calibrating_the_fixture() {
    let records = load_market_csv(data_dir().join("synthetic_2019.csv")).unwrap();
    assert_eq!(records.len(), 8760);
    let cal = calibrate(&records).unwrap();
    assert_eq!(cal.scenarios.len(), 12);
    let bundled =
        storage_game::market_data::ScenarioSet::load(data_dir().join("scenarios_2019.json"))
            .unwrap();
    assert_eq!(bundled, cal.scenarios);
    for (m, s) in cal.months.iter().zip(&cal.scenarios) {
        assert_eq!(s.id, m.month.to_string());
        assert!(m.fit.slope > 0.0);
    }
}

#[test]
fn flat_month_aborts_calibration_with_its_label() {
    let mut records = SyntheticMarket::default().generate(2019);
    records.retain(|r| r.date.month() <= 2);
    for r in records.iter_mut().filter(|r| r.date.month() == 2) {
        r.price = 40.0;
    }
    match calibrate(&records) {
        Err(e @ MarketDataError::NonPositiveSlope { .. }) => {
            assert!(e.to_string().contains("2019-02"))
        }
        other => panic!("unexpected {other:?}"),
    }
}
