use chatscreen::learners::logistic::{fit_head, loss, loss_and_grad};
use chatscreen::learners::svm::{
    kernel_matrix, max_iterations, max_kkt_violation, scale_gamma, solve_binary,
};
use chatscreen::learners::{
    train, ClassifierConfig, ClassifierKind, ModelParameters, TrainedModel,
};
use chatscreen::preprocess::PreprocessParams;
use proptest::prelude::*;

fn labels2() -> Vec<String> {
    vec!["neg".into(), "pos".into()]
}

/// Two-class rows with both classes present at least three times.
fn two_class(max_n: usize, d: usize) -> impl Strategy<Value = (Vec<Vec<f64>>, Vec<usize>)> {
    (6..max_n)
        .prop_flat_map(move |n| {
            (
                prop::collection::vec(prop::collection::vec(-3.0f64..3.0, d), n),
                prop::collection::vec(0usize..2, n),
            )
        })
        .prop_filter("both classes", |(_, y)| {
            let ones = y.iter().filter(|&&v| v == 1).count();
            ones >= 3 && y.len() - ones >= 3
        })
        .prop_map(|(mut x, y)| {
            // Shift class 1 so the problem carries some signal.
            for (r, &c) in x.iter_mut().zip(&y) {
                r[0] += 1.5 * c as f64;
            }
            (x, y)
        })
}

fn norm(v: &[f64]) -> f64 {
    v.iter().map(|a| a * a).sum::<f64>().sqrt()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn logistic_gradient_matches_central_differences(
        (x, y) in two_class(20, 4),
        w in prop::collection::vec(-2.0f64..2.0, 4),
        b in -1.0f64..1.0,
        l2 in 0.0f64..3.0,
    ) {
        let t: Vec<f64> = y.iter().map(|&c| c as f64).collect();
        let (_, gw, gb) = loss_and_grad(&x, &t, &w, b, l2);
        let h = 1e-6;
        let mut fd = Vec::with_capacity(5);
        for j in 0..4 {
            let (mut up, mut down) = (w.clone(), w.clone());
            up[j] += h;
            down[j] -= h;
            fd.push((loss(&x, &t, &up, b, l2) - loss(&x, &t, &down, b, l2)) / (2.0 * h));
        }
        fd.push((loss(&x, &t, &w, b + h, l2) - loss(&x, &t, &w, b - h, l2)) / (2.0 * h));
        let mut g = gw.clone();
        g.push(gb);
        let diff: Vec<f64> = g.iter().zip(&fd).map(|(a, c)| a - c).collect();
        let rel = norm(&diff) / norm(&g).max(norm(&fd)).max(1e-8);
        prop_assert!(rel < 1e-5, "relative error {rel}");
    }

    #[test]
    fn logistic_loss_never_increases((x, y) in two_class(30, 3), l2 in 0.01f64..3.0) {
        let t: Vec<f64> = y.iter().map(|&c| c as f64).collect();
        let fit = fit_head(&x, &t, l2, 200, 1e-6);
        for w in fit.loss_history.windows(2) {
            prop_assert!(w[1] <= w[0], "{} -> {}", w[0], w[1]);
        }
    }

    #[test]
    fn svm_solution_satisfies_kkt((x, y) in two_class(40, 3)) {
        let gamma = scale_gamma(&x).unwrap();
        let k = kernel_matrix(&x, gamma);
        let ypm: Vec<f64> = y.iter().map(|&c| if c == 1 { 1.0 } else { -1.0 }).collect();
        let sol = solve_binary(&k, &ypm, 1.0, 1e-3, max_iterations(x.len()));
        prop_assert!(sol.converged);
        prop_assert!(max_kkt_violation(&k, &ypm, 1.0, &sol) <= 1e-3);
        let balance: f64 = sol.alpha.iter().zip(&ypm).map(|(a, t)| a * t).sum();
        prop_assert!(balance.abs() < 1e-9);
        prop_assert!(sol.alpha.iter().all(|&a| (0.0..=1.0).contains(&a)));
    }

    #[test]
    fn naive_bayes_matches_closed_form((x, y) in two_class(30, 3), probe in prop::collection::vec(-3.0f64..3.0, 3)) {
        let cfg = ClassifierConfig::new(ClassifierKind::GaussianNb);
        let model = train(&cfg, &x, &y, &labels2(), PreprocessParams::identity(3)).unwrap();
        let n = x.len() as f64;
        let col_var = |rows: &[&Vec<f64>], j: usize| {
            let m = rows.iter().map(|r| r[j]).sum::<f64>() / rows.len() as f64;
            (m, rows.iter().map(|r| (r[j] - m).powi(2)).sum::<f64>() / rows.len() as f64)
        };
        let all: Vec<&Vec<f64>> = x.iter().collect();
        let eps = cfg.nb_var_smoothing * (0..3).map(|j| col_var(&all, j).1).fold(0.0, f64::max);
        let mut log_post = Vec::new();
        for c in 0..2 {
            let rows: Vec<&Vec<f64>> = x.iter().zip(&y).filter(|(_, &v)| v == c).map(|(r, _)| r).collect();
            let mut lp = (rows.len() as f64 / n).ln();
            for (j, v) in probe.iter().enumerate() {
                let (m, var) = col_var(&rows, j);
                let var = var + eps;
                lp += -0.5 * (2.0 * std::f64::consts::PI * var).ln() - (v - m).powi(2) / (2.0 * var);
            }
            log_post.push(lp);
        }
        let top = log_post[0].max(log_post[1]);
        let z: f64 = log_post.iter().map(|v| (v - top).exp()).sum();
        let got = model.predict_scores(std::slice::from_ref(&probe)).unwrap();
        for c in 0..2 {
            prop_assert!((got[0][c] - (log_post[c] - top).exp() / z).abs() < 1e-9);
        }
    }

    #[test]
    fn knn_matches_brute_force((x, y) in two_class(30, 2), probe in prop::collection::vec(-3.0f64..3.0, 2), k in 1usize..6) {
        let mut cfg = ClassifierConfig::new(ClassifierKind::Knn);
        cfg.knn_k = k;
        let model = train(&cfg, &x, &y, &labels2(), PreprocessParams::identity(2)).unwrap();
        let mut order: Vec<usize> = (0..x.len()).collect();
        let dist = |i: usize| (x[i][0] - probe[0]).powi(2) + (x[i][1] - probe[1]).powi(2);
        order.sort_by(|&a, &b| dist(a).total_cmp(&dist(b)).then(a.cmp(&b)));
        let ones = order[..k].iter().filter(|&&i| y[i] == 1).count();
        let got = model.predict_scores(std::slice::from_ref(&probe)).unwrap();
        prop_assert_eq!(got[0].clone(), vec![(k - ones) as f64 / k as f64, ones as f64 / k as f64]);
    }

    #[test]
    fn models_survive_json((x, y) in two_class(30, 3), seed in any::<u64>()) {
        for kind in ClassifierKind::ALL {
            let mut cfg = ClassifierConfig::new(kind);
            cfg.seed = seed;
            cfg.rf_n_estimators = 10;
            let model = train(&cfg, &x, &y, &labels2(), PreprocessParams::identity(3)).unwrap();
            let back = TrainedModel::from_json(&model.to_json()).unwrap();
            prop_assert_eq!(&back, &model);
            prop_assert_eq!(back.predict_scores(&x).unwrap(), model.predict_scores(&x).unwrap());
        }
    }

    #[test]
    fn forest_trees_respect_depth((x, y) in two_class(40, 4), seed in any::<u64>(), depth in 1usize..4) {
        let mut cfg = ClassifierConfig::new(ClassifierKind::RandomForest);
        cfg.seed = seed;
        cfg.rf_n_estimators = 20;
        cfg.rf_max_depth = depth;
        let model = train(&cfg, &x, &y, &labels2(), PreprocessParams::identity(4)).unwrap();
        let ModelParameters::RandomForest(f) = &model.parameters else { unreachable!() };
        prop_assert!(f.trees.iter().all(|t| t.depth() <= depth));
        let imp = model.feature_importances().unwrap();
        let total: f64 = imp.iter().sum();
        prop_assert!(total == 0.0 || (total - 1.0).abs() < 1e-9);
        let again = train(&cfg, &x, &y, &labels2(), PreprocessParams::identity(4)).unwrap();
        prop_assert_eq!(again, model);
    }
}
