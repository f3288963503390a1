//! Deterministic synthetic market year.
//!
//! Net demand follows a "duck" shape (morning shoulder, solar trough, evening
//! ramp) whose depth varies by month; price is an affine function of net
//! demand plus Gaussian noise. The bundled fixture under `data/` is the output
//! of [`SyntheticMarket::default`] for 2019, seed [`DEFAULT_SEED`].

use std::io::Write;

use chrono::{Datelike, NaiveDate};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use crate::market_data::{HourlyRecord, ScenarioSet};

pub const DEFAULT_SEED: u64 = 2019;

/// Calibrated scenario set of the bundled 2019 fixture, as JSON.
pub const BUNDLED_SCENARIOS_JSON: &str = include_str!("../data/scenarios_2019.json");

/// The twelve monthly scenarios calibrated from the bundled fixture.
pub fn bundled_scenarios() -> ScenarioSet {
    ScenarioSet::from_json(BUNDLED_SCENARIOS_JSON).expect("bundled scenarios parse")
}

#[derive(Clone, Debug, PartialEq)]
pub struct MonthProfile {
    /// Price at zero net demand.
    pub intercept: f64,
    /// Price increase per MW of net demand.
    pub slope: f64,
    /// Overnight net demand level (MW).
    pub base: f64,
    /// Evening ramp height (MW).
    pub evening_peak: f64,
    /// Midday solar trough depth (MW).
    pub solar_depth: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct SyntheticMarket {
    /// Twelve months, January first.
    pub months: Vec<MonthProfile>,
    pub price_noise: f64,
    pub demand_noise: f64,
    pub seed: u64,
}

impl Default for SyntheticMarket {
    fn default() -> Self {
        // (intercept, slope, base, evening peak, solar depth)
        let table = [
            (-20.0, 0.0032, 21_000.0, 7_000.0, 5_000.0),
            (-18.0, 0.0031, 20_500.0, 6_500.0, 6_000.0),
            (-22.0, 0.0030, 19_500.0, 7_000.0, 8_000.0),
            (-24.0, 0.0029, 19_000.0, 7_500.0, 9_500.0),
            (-26.0, 0.0030, 19_500.0, 8_000.0, 10_000.0),
            (-28.0, 0.0033, 21_500.0, 9_000.0, 9_000.0),
            (-32.0, 0.0036, 24_000.0, 10_500.0, 8_000.0),
            (-34.0, 0.0038, 25_000.0, 11_000.0, 7_500.0),
            (-30.0, 0.0036, 23_500.0, 10_000.0, 7_000.0),
            (-25.0, 0.0034, 22_000.0, 8_500.0, 6_500.0),
            (-22.0, 0.0033, 21_000.0, 7_500.0, 5_500.0),
            (-21.0, 0.0033, 21_500.0, 7_500.0, 4_500.0),
        ];
        Self {
            months: table
                .iter()
                .map(
                    |&(intercept, slope, base, evening_peak, solar_depth)| MonthProfile {
                        intercept,
                        slope,
                        base,
                        evening_peak,
                        solar_depth,
                    },
                )
                .collect(),
            price_noise: 2.0,
            demand_noise: 600.0,
            seed: DEFAULT_SEED,
        }
    }
}

fn bump(hour: f64, centre: f64, width: f64) -> f64 {
    let z = (hour - centre) / width;
    (-0.5 * z * z).exp()
}

impl MonthProfile {
    /// Mean net demand at `hour` before noise.
    pub fn net_demand(&self, hour: usize) -> f64 {
        let h = hour as f64;
        self.base
            + 0.3 * self.evening_peak * bump(h, 7.5, 1.5)
            + self.evening_peak * bump(h, 19.0, 2.0)
            - self.solar_depth * bump(h, 13.0, 2.5)
    }
}

impl SyntheticMarket {
    /// Hourly records for every day of `year`, in timestamp order. Prices are
    /// rounded to 1e-3 and net demand to 1e-1 so a CSV round trip is exact.
    pub fn generate(&self, year: i32) -> Vec<HourlyRecord> {
        assert_eq!(
            self.months.len(),
            12,
            "synthetic market needs twelve months"
        );
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        let price_noise = Normal::new(0.0, self.price_noise).expect("finite sigma");
        let demand_noise = Normal::new(0.0, self.demand_noise).expect("finite sigma");
        let day_scale = Normal::new(1.0, 0.08).expect("finite sigma");
        let mut out = Vec::with_capacity(8784);
        let mut date = NaiveDate::from_ymd_opt(year, 1, 1).expect("valid year");
        while date.year() == year {
            let month = &self.months[date.month0() as usize];
            let scale: f64 = day_scale.sample(&mut rng);
            for hour in 0..24 {
                let mean = month.base + scale * (month.net_demand(hour) - month.base);
                let nd = mean + demand_noise.sample(&mut rng);
                let price = month.intercept + month.slope * nd + price_noise.sample(&mut rng);
                out.push(HourlyRecord {
                    date,
                    hour: hour as u8,
                    price: (price * 1e3).round() / 1e3,
                    net_demand: (nd * 10.0).round() / 10.0,
                });
            }
            date = date.succ_opt().expect("date in range");
        }
        out
    }
}

/// Writes records in the `timestamp,price,net_demand` layout accepted by
/// [`crate::market_data::load_market_csv`].
pub fn write_market_csv<W: Write>(records: &[HourlyRecord], mut w: W) -> std::io::Result<()> {
    writeln!(w, "timestamp,price,net_demand")?;
    for r in records {
        writeln!(
            w,
            "{} {:02},{:.3},{:.1}",
            r.date.format("%Y-%m-%d"),
            r.hour,
            r.price,
            r.net_demand
        )?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn bundled_set_has_twelve_months() {
        let set = bundled_scenarios();
        assert_eq!(set.len(), 12);
        assert_eq!(set.slots(), 24);
    }

    #[test]
    fn full_year_in_order() {
        let recs = SyntheticMarket::default().generate(2019);
        assert_eq!(recs.len(), 8760);
        assert!(recs
            .windows(2)
            .all(|w| (w[0].date, w[0].hour) < (w[1].date, w[1].hour)));
        assert_eq!(SyntheticMarket::default().generate(2020).len(), 8784);
    }

    #[test]
    fn duck_shape_has_evening_peak_above_midday() {
        for m in &SyntheticMarket::default().months {
            assert!(m.net_demand(19) > m.net_demand(13));
            assert!(m.net_demand(13) > 0.0);
        }
    }
}
