use chatscreen::metrics::{
    accuracy, binary_metrics, confusion, f1_weighted, per_class_f1, rank_auc, roc_auc,
    roc_auc_multiclass,
};
use proptest::prelude::*;

fn labels(max_len: usize, k: usize) -> impl Strategy<Value = (Vec<usize>, Vec<usize>)> {
    (1..max_len).prop_flat_map(move |n| {
        (
            prop::collection::vec(0..k, n),
            prop::collection::vec(0..k, n),
        )
    })
}

/// At least one row of each side, scores drawn from a small grid so ties
/// are common.
fn scored() -> impl Strategy<Value = (Vec<bool>, Vec<f64>)> {
    (2usize..60).prop_flat_map(|n| {
        (
            prop::collection::vec(any::<bool>(), n)
                .prop_filter("both classes", |v| v.contains(&true) && v.contains(&false)),
            prop::collection::vec((0u8..8).prop_map(|s| s as f64 / 4.0), n),
        )
    })
}

proptest! {
    #[test]
    fn binary_metrics_match_set_counts((t, p) in labels(120, 2)) {
        let cm = confusion(&t, &p, 1, 2).unwrap();
        let m = binary_metrics(&cm);
        let idx = |f: &dyn Fn(usize) -> bool| (0..t.len()).filter(|&i| f(i)).count();
        let predicted_pos = idx(&|i| p[i] == 1);
        let actual_pos = idx(&|i| t[i] == 1);
        let hits = idx(&|i| p[i] == 1 && t[i] == 1);
        let agree = idx(&|i| p[i] == t[i]);
        prop_assert_eq!(cm.total(), t.len());
        if predicted_pos > 0 {
            prop_assert_eq!(m.precision, hits as f64 / predicted_pos as f64);
        } else {
            prop_assert!(m.undefined.iter().any(|u| u == "precision"));
        }
        if actual_pos > 0 {
            prop_assert_eq!(m.recall, hits as f64 / actual_pos as f64);
        } else {
            prop_assert!(m.undefined.iter().any(|u| u == "recall"));
        }
        prop_assert_eq!(m.accuracy, agree as f64 / t.len() as f64);
        prop_assert_eq!(accuracy(&t, &p).unwrap(), m.accuracy);
        if m.precision + m.recall > 0.0 {
            let f1 = 2.0 * m.precision * m.recall / (m.precision + m.recall);
            prop_assert!((m.f1 - f1).abs() <= 1e-15);
        }
    }

    #[test]
    fn weighted_f1_is_support_weighted((t, p) in labels(80, 3)) {
        let per = per_class_f1(&t, &p, 3).unwrap();
        let mut want = 0.0;
        for (c, f) in per.iter().enumerate() {
            want += f * t.iter().filter(|&&v| v == c).count() as f64;
        }
        want /= t.len() as f64;
        let got = f1_weighted(&t, &p, 3).unwrap();
        prop_assert!((got - want).abs() < 1e-12);
        prop_assert!((0.0..=1.0).contains(&got));
    }

    #[test]
    fn trapezoid_equals_rank_statistic((pos, s) in scored()) {
        let curve = roc_auc(&pos, &s).unwrap();
        prop_assert!((curve.auc - rank_auc(&pos, &s).unwrap()).abs() <= 1e-12);
        let first = curve.points.first().unwrap();
        let last = curve.points.last().unwrap();
        prop_assert_eq!((first.fpr, first.tpr), (0.0, 0.0));
        prop_assert_eq!((last.fpr, last.tpr), (1.0, 1.0));
        for w in curve.points.windows(2) {
            prop_assert!(w[1].fpr >= w[0].fpr && w[1].tpr >= w[0].tpr);
        }
    }

    #[test]
    fn auc_is_rank_invariant((pos, s) in scored()) {
        let base = roc_auc(&pos, &s).unwrap().auc;
        let shifted: Vec<f64> = s.iter().map(|v| 3.0 * v.exp() - 7.0).collect();
        prop_assert!((roc_auc(&pos, &shifted).unwrap().auc - base).abs() <= 1e-12);
        let flipped: Vec<f64> = s.iter().map(|v| -v).collect();
        prop_assert!((roc_auc(&pos, &flipped).unwrap().auc - (1.0 - base)).abs() <= 1e-12);
    }

    #[test]
    fn multiclass_auc_is_weighted_one_vs_rest(
        rows in prop::collection::vec((0usize..3, prop::collection::vec(0.0f64..1.0, 3)), 6..50)
    ) {
        let y: Vec<usize> = rows.iter().map(|r| r.0).collect();
        prop_assume!((0..3).all(|c| y.contains(&c)));
        let scores: Vec<Vec<f64>> = rows.iter().map(|r| r.1.clone()).collect();
        let mut want = 0.0;
        for c in 0..3 {
            let pos: Vec<bool> = y.iter().map(|&v| v == c).collect();
            let col: Vec<f64> = scores.iter().map(|r| r[c]).collect();
            let support = pos.iter().filter(|&&b| b).count() as f64;
            want += support * rank_auc(&pos, &col).unwrap();
        }
        want /= y.len() as f64;
        prop_assert!((roc_auc_multiclass(&y, &scores, 3).unwrap() - want).abs() < 1e-12);
    }
}
