//! Seeded synthetic hourly weather with a daily cycle, slow drift and
//! autocorrelated noise.

use alloc::vec::Vec;

use chrono::{NaiveDateTime, TimeDelta, Timelike};
use rand::Rng as _;
use rand_distr::{Distribution, Exp, StandardNormal};

use crate::data::{ObservationRecord, ObservationSeries, VARIABLE_COUNT};
use crate::error::Result;
use crate::math;
use crate::seed;

const TAU: f64 = core::f64::consts::TAU;

fn clamp(v: f64, lo: f64, hi: f64) -> f64 {
    v.max(lo).min(hi)
}

/// `hours` consecutive hourly records starting at `start`.
///
/// Temperature follows a daily sinusoid peaking mid-afternoon plus a yearly
/// term and AR(1) noise. Humidity and pressure move against temperature;
/// clouds follow humidity and cut solar radiation; rain falls mostly when
/// humidity is high.
pub fn generate(hours: usize, start: NaiveDateTime, seed: u64) -> Result<ObservationSeries> {
    let mut rng = seed::rng(seed);
    let mut normal = move || -> f64 { StandardNormal.sample(&mut rng) };
    let mut rain_rng = seed::rng(seed::derive(seed, 1));
    let rain = Exp::new(1.5).expect("positive rate");
    let (mut e_t, mut e_h, mut e_p, mut e_w) = (0.0, 0.0, 0.0, 0.0);
    let mut records = Vec::with_capacity(hours);
    for i in 0..hours {
        let ts = start + TimeDelta::hours(i as i64);
        let hour = ts.hour() as f64;
        let day = i as f64 / 24.0;
        e_t = 0.8 * e_t + 0.6 * normal();
        e_h = 0.7 * e_h + 2.0 * normal();
        e_p = 0.95 * e_p + 0.4 * normal();
        e_w = 0.6 * e_w + 0.8 * normal();
        let temp = 14.0
            + 6.0 * math::sin(TAU * (hour - 9.0) / 24.0)
            + 4.0 * math::sin(TAU * day / 365.0)
            + 0.001 * day
            + e_t;
        let humidity = clamp(70.0 - 2.2 * (temp - 14.0) + e_h, 5.0, 100.0);
        let pressure = 1013.0 - 0.4 * (temp - 14.0) + e_p;
        let windspeed = (3.5 + 1.5 * math::sin(TAU * (hour - 14.0) / 24.0) + e_w).max(0.0);
        let cloudcover = clamp(1.6 * (humidity - 45.0) + 5.0 * normal(), 0.0, 100.0);
        let precip = if humidity > 80.0 && rain_rng.random::<f64>() < 0.3 {
            math::round(rain.sample(&mut rain_rng) * 10.0) / 10.0
        } else {
            0.0
        };
        let sun = math::sin(TAU * (hour - 6.0) / 24.0).max(0.0);
        let solar = 800.0 * sun * (1.0 - 0.7 * cloudcover / 100.0);
        let values: [f64; VARIABLE_COUNT] = [temp, humidity, precip, windspeed, pressure, cloudcover, solar];
        records.push(ObservationRecord::complete(ts, values));
    }
    ObservationSeries::from_records(records)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::{PhysicalBounds, Variable};
    use crate::features::pearson_correlation;
    use crate::matrix::Matrix;
    use chrono::NaiveDate;

    fn t0() -> NaiveDateTime {
        NaiveDate::from_ymd_opt(2023, 1, 1).unwrap().and_hms_opt(0, 0, 0).unwrap()
    }

    #[test]
    fn seeded_and_in_bounds() {
        let a = generate(500, t0(), 3).unwrap();
        assert_eq!(a, generate(500, t0(), 3).unwrap());
        assert_ne!(a, generate(500, t0(), 4).unwrap());
        let bounds = PhysicalBounds::default();
        for r in a.records() {
            for v in Variable::ALL {
                assert!(bounds.get(v).contains(r.get(v).unwrap()), "{v} {:?}", r.get(v));
            }
        }
        assert!(a.grid_gaps().is_empty());
    }

    #[test]
    fn humidity_against_temperature() {
        let s = generate(2000, t0(), 42).unwrap();
        let cols = [Variable::Temp, Variable::Humidity, Variable::Sealevelpressure]
            .map(|v| s.complete_column(v).unwrap());
        let c = pearson_correlation(&Matrix::from_columns(&cols).unwrap()).unwrap();
        assert!(c.r.get(0, 1) < -0.5, "{}", c.r.get(0, 1));
        assert!(c.r.get(0, 2) < -0.3, "{}", c.r.get(0, 2));
    }
}
