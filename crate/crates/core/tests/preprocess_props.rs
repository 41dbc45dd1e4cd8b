use chatscreen::preprocess::{
    apply_means, apply_standardization, fit_means, fit_standardization, smote_resample,
    stratified_split, stratified_test_counts, NumericMatrix, SmoteConfig,
};
use proptest::prelude::*;

/// Labels over `k` classes with every class at least `min` strong.
fn class_labels(k: usize, min: usize, max: usize) -> impl Strategy<Value = Vec<usize>> {
    prop::collection::vec(min..max, k).prop_flat_map(|sizes| {
        let labels: Vec<usize> = sizes
            .iter()
            .enumerate()
            .flat_map(|(c, &n)| std::iter::repeat_n(c, n))
            .collect();
        Just(labels).prop_shuffle()
    })
}

fn rows_for(labels: Vec<usize>, d: usize) -> impl Strategy<Value = (Vec<Vec<f64>>, Vec<usize>)> {
    let n = labels.len();
    (
        prop::collection::vec(prop::collection::vec(-10.0f64..10.0, d), n),
        Just(labels),
    )
}

proptest! {
    #[test]
    fn split_partitions_and_stratifies(labels in class_labels(3, 2, 25), frac in 0.05f64..0.95, seed in any::<u64>()) {
        let (train, test) = stratified_split(&labels, frac, seed).unwrap();
        let mut all: Vec<usize> = train.iter().chain(&test).copied().collect();
        all.sort_unstable();
        prop_assert_eq!(all, (0..labels.len()).collect::<Vec<_>>());
        prop_assert!(train.windows(2).all(|w| w[0] < w[1]) && test.windows(2).all(|w| w[0] < w[1]));
        let sizes: Vec<usize> = (0..3).map(|c| labels.iter().filter(|&&l| l == c).count()).collect();
        let want = stratified_test_counts(&sizes, frac);
        for c in 0..3 {
            let got = test.iter().filter(|&&i| labels[i] == c).count();
            prop_assert_eq!(got, want[c]);
            prop_assert!(got >= 1 && got < sizes[c]);
        }
        prop_assert_eq!(stratified_split(&labels, frac, seed).unwrap(), (train, test));
    }

    #[test]
    fn smote_balances_and_interpolates(
        (x, y) in class_labels(3, 6, 30).prop_flat_map(|l| rows_for(l, 4)),
        k in 1usize..6,
        seed in any::<u64>(),
    ) {
        let cfg = SmoteConfig { k_neighbors: k, random_state: seed, ..SmoteConfig::default() };
        let out = smote_resample(&x, &y, &cfg).unwrap();
        let max = (0..3).map(|c| y.iter().filter(|&&v| v == c).count()).max().unwrap();
        for c in 0..3 {
            prop_assert_eq!(out.y.iter().filter(|&&v| v == c).count(), max);
        }
        prop_assert_eq!(&out.x[..x.len()], &x[..]);
        prop_assert_eq!(&out.y[..y.len()], &y[..]);
        prop_assert_eq!(out.synthetic.len(), out.x.len() - x.len());
        for (s, (row, &label)) in out.synthetic.iter().zip(out.x[x.len()..].iter().zip(&out.y[y.len()..])) {
            prop_assert!((0.0..1.0).contains(&s.u));
            prop_assert_eq!(y[s.base], label);
            prop_assert_eq!(y[s.neighbor], label);
            prop_assert_ne!(s.base, s.neighbor);
            for j in 0..4 {
                let (a, b) = (x[s.base][j], x[s.neighbor][j]);
                prop_assert!(row[j] >= a.min(b) - 1e-12 && row[j] <= a.max(b) + 1e-12);
                prop_assert!((row[j] - (a + s.u * (b - a))).abs() <= 1e-12);
            }
        }
        let again = smote_resample(&x, &y, &cfg).unwrap();
        prop_assert_eq!(again, out);
    }

    #[test]
    fn imputation_fills_only_masked_cells(
        cells in prop::collection::vec(prop::collection::vec((-5.0f64..5.0, prop::bool::weighted(0.2)), 3), 2..20)
    ) {
        let m = NumericMatrix {
            names: vec!["a".into(), "b".into(), "c".into()],
            x: cells.iter().map(|r| r.iter().map(|c| c.0).collect()).collect(),
            missing: cells.iter().map(|r| r.iter().map(|c| c.1).collect()).collect(),
        };
        prop_assume!((0..3).all(|j| m.missing.iter().any(|r| !r[j])));
        let means = fit_means(&m).unwrap();
        for (j, mu) in means.iter().enumerate() {
            let obs: Vec<f64> = (0..m.x.len()).filter(|&i| !m.missing[i][j]).map(|i| m.x[i][j]).collect();
            prop_assert!((mu - obs.iter().sum::<f64>() / obs.len() as f64).abs() < 1e-12);
        }
        let filled = apply_means(&m, &means);
        for i in 0..m.x.len() {
            for j in 0..3 {
                let want = if m.missing[i][j] { means[j] } else { m.x[i][j] };
                prop_assert_eq!(filled[i][j], want);
            }
        }
    }

    #[test]
    fn standardized_columns_are_centered(x in prop::collection::vec(prop::collection::vec(-100.0f64..100.0, 3), 2..40)) {
        let s = fit_standardization(&x).unwrap();
        let z = apply_standardization(&x, &s);
        let n = x.len() as f64;
        for j in 0..3 {
            let mean = z.iter().map(|r| r[j]).sum::<f64>() / n;
            prop_assert!(mean.abs() < 1e-9);
            if !s[j].constant {
                let var = z.iter().map(|r| r[j] * r[j]).sum::<f64>() / n;
                prop_assert!((var - 1.0).abs() < 1e-9);
            }
        }
    }
}
