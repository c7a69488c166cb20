use chrono::{NaiveDate, NaiveDateTime};
use hourcast_core::data::{ObservationSeries, Variable};
use hourcast_core::features::{assemble_matrix, FeatureSpec};
use hourcast_core::sequence::{build_windows, fit_sequence, SequenceParams};
use hourcast_core::synthetic;
use proptest::prelude::*;

fn start() -> NaiveDateTime {
    NaiveDate::from_ymd_opt(2024, 3, 1).unwrap().and_hms_opt(0, 0, 0).unwrap()
}

fn mutate(series: &ObservationSeries, at: usize, delta: f64) -> ObservationSeries {
    let mut records = series.records().to_vec();
    for v in Variable::ALL {
        let old = records[at].get(v).unwrap();
        records[at].set(v, Some(old + delta));
    }
    ObservationSeries::from_records(records).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn later_rows_never_reach_earlier_features(seed in 0u64..1000, t_off in 0usize..60, gap in 1usize..30, delta in -50.0f64..50.0) {
        let series = synthetic::generate(120, start(), seed).unwrap();
        let spec = FeatureSpec::default();
        let t = spec.first_row() + t_off;
        let s = (t + gap).min(series.len() - 1);
        prop_assume!(s > t);
        let before = assemble_matrix(&series, &spec).unwrap();
        let after = assemble_matrix(&mutate(&series, s, delta), &spec).unwrap();
        for (r, &idx) in before.row_index.iter().enumerate() {
            if idx <= t {
                prop_assert_eq!(before.x.row(r), after.x.row(r));
                prop_assert_eq!(before.y.row(r), after.y.row(r));
            }
        }
    }
}

#[test]
fn sequence_predictions_ignore_the_target_hour_and_later() {
    let series = synthetic::generate(200, start(), 5).unwrap();
    let window = 12;
    let batch = build_windows(&series, window).unwrap();
    let mut params = SequenceParams::lstm(1, 6);
    params.train.max_epochs = 3;
    let model = fit_sequence(&batch.x, &batch.y, &params, 1).unwrap();
    let base = model.predict(&batch.x).unwrap();
    for s in [window, 60, 150, 199] {
        let changed = build_windows(&mutate(&series, s, 25.0), window).unwrap();
        let pred = model.predict(&changed.x).unwrap();
        for i in 0..batch.origins.len() {
            // sample i targets hour window + i
            if window + i <= s {
                assert_eq!(base.row(i), pred.row(i), "sample {i} after mutating row {s}");
            }
        }
        // the final row feeds no window
        if s + 1 < series.len() {
            assert!(base != pred, "mutating row {s} changed nothing");
        }
    }
}
