use pepfrag::metrics::{relative_error_pct, summarize, ErrorReport, ErrorRow};
use proptest::prelude::*;

proptest! {
    #[test]
    fn relative_error_is_scale_invariant(gt in -2000.0f64..-0.5, em in -2000.0f64..-0.5, k in 1e-3f64..1e3) {
        let a = relative_error_pct(gt, em).unwrap();
        let b = relative_error_pct(gt * k, em * k).unwrap();
        prop_assert!(a >= 0.0);
        prop_assert!((a - b).abs() <= 1e-9 * a.max(1.0));
    }

    #[test]
    fn relative_error_vanishes_only_on_equality(gt in -2000.0f64..-0.5, d in -1.0f64..1.0) {
        let re = relative_error_pct(gt, gt + d).unwrap();
        prop_assert_eq!(re == 0.0, d == 0.0);
        prop_assert_eq!(relative_error_pct(gt, gt).unwrap(), 0.0);
    }

    #[test]
    fn equal_values_have_zero_spread(v in 0.0f64..5.0, n in 2usize..40) {
        let s = summarize(&vec![v; n]).unwrap();
        prop_assert!((s.mean - v).abs() <= 1e-12 * v.max(1.0));
        prop_assert!(s.std <= 1e-12 * v.max(1.0));
    }

    #[test]
    fn spread_ignores_shift_and_order(values in prop::collection::vec(0.0f64..1.0, 2..30), c in 0.0f64..10.0) {
        let a = summarize(&values).unwrap();
        let shifted: Vec<f64> = values.iter().rev().map(|v| v + c).collect();
        let b = summarize(&shifted).unwrap();
        prop_assert!((a.std - b.std).abs() < 1e-9);
        prop_assert!((a.mean + c - b.mean).abs() < 1e-9);
    }

    #[test]
    fn report_rows_are_sorted_and_csv_has_one_line_each(
        rows in prop::collection::btree_map("[A-Z][a-z]{2}-[A-Z][a-z]{2}", (-900.0f64..-1.0, -1e-2f64..1e-2), 1..12)
    ) {
        let r = ErrorReport::new(rows.iter().map(|(l, &(gt, d))| ErrorRow::new(l.clone(), gt, gt + d).unwrap()).collect());
        let labels: Vec<&String> = r.rows.iter().map(|r| &r.label).collect();
        prop_assert_eq!(labels, rows.keys().collect::<Vec<_>>());
        prop_assert_eq!(r.to_csv_string().lines().count(), rows.len() + 1);
        prop_assert_eq!(r.summary.is_some(), rows.len() >= 2);
    }
}
