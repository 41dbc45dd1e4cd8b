//! Random forest of shallow Gini trees.
//!
//! Tree `t` draws its bootstrap rows and per-node candidate features from
//! the stream `derive(seed, "forest", t)`. Thresholds are midpoints between
//! consecutive distinct values. Among equally good splits the lowest
//! feature index wins, then the lowest threshold.

use serde::{Deserialize, Serialize};

use super::ClassifierConfig;
use crate::rng::SeededStream;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Node {
    Split {
        feature: usize,
        threshold: f64,
        /// Child indices; rows with `x[feature] <= threshold` go left.
        left: usize,
        right: usize,
    },
    Leaf {
        /// Class frequencies of the bootstrap rows reaching the leaf.
        distribution: Vec<f64>,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Tree {
    /// Root first.
    pub nodes: Vec<Node>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ForestModel {
    pub n_classes: usize,
    pub trees: Vec<Tree>,
    /// Mean impurity decrease, normalized per tree then overall.
    pub importances: Vec<f64>,
}

pub fn gini(counts: &[f64]) -> f64 {
    let total: f64 = counts.iter().sum();
    if total <= 0.0 {
        return 0.0;
    }
    1.0 - counts.iter().map(|c| (c / total).powi(2)).sum::<f64>()
}

pub fn max_features(d: usize) -> usize {
    ((d as f64).sqrt().ceil() as usize).clamp(1, d.max(1))
}

struct Builder<'a> {
    x: &'a [Vec<f64>],
    y: &'a [usize],
    k: usize,
    max_depth: usize,
    m_try: usize,
    n_total: f64,
    nodes: Vec<Node>,
    importance: Vec<f64>,
}

struct BestSplit {
    feature: usize,
    threshold: f64,
    impurity: f64,
}

impl Builder<'_> {
    fn counts(&self, rows: &[usize]) -> Vec<f64> {
        let mut c = vec![0.0; self.k];
        for &r in rows {
            c[self.y[r]] += 1.0;
        }
        c
    }

    fn best_split(&self, rows: &[usize], features: &[usize]) -> Option<BestSplit> {
        let n = rows.len() as f64;
        let mut best: Option<BestSplit> = None;
        for &f in features {
            let mut sorted: Vec<(f64, usize)> =
                rows.iter().map(|&r| (self.x[r][f], self.y[r])).collect();
            sorted.sort_by(|a, b| a.0.total_cmp(&b.0));
            let mut left = vec![0.0; self.k];
            let mut right = self.counts(rows);
            for i in 0..sorted.len() - 1 {
                left[sorted[i].1] += 1.0;
                right[sorted[i].1] -= 1.0;
                if sorted[i].0 == sorted[i + 1].0 {
                    continue;
                }
                let nl = (i + 1) as f64;
                let impurity = (nl * gini(&left) + (n - nl) * gini(&right)) / n;
                let threshold = sorted[i].0 + (sorted[i + 1].0 - sorted[i].0) / 2.0;
                if best.as_ref().is_none_or(|b| impurity < b.impurity) {
                    best = Some(BestSplit {
                        feature: f,
                        threshold,
                        impurity,
                    });
                }
            }
        }
        best
    }

    fn grow(&mut self, rows: Vec<usize>, depth: usize, rng: &mut SeededStream) -> usize {
        let counts = self.counts(&rows);
        let node_gini = gini(&counts);
        let id = self.nodes.len();
        self.nodes.push(Node::Leaf {
            distribution: Vec::new(),
        });
        let leaf = |counts: &[f64]| {
            let total: f64 = counts.iter().sum();
            Node::Leaf {
                distribution: counts.iter().map(|c| c / total).collect(),
            }
        };
        if depth >= self.max_depth || node_gini == 0.0 || rows.len() < 2 {
            self.nodes[id] = leaf(&counts);
            return id;
        }
        let d = self.x[0].len();
        let mut features = rng.sample_without_replacement(d, self.m_try);
        features.sort_unstable();
        let Some(split) = self.best_split(&rows, &features) else {
            self.nodes[id] = leaf(&counts);
            return id;
        };
        let n = rows.len() as f64;
        self.importance[split.feature] += n / self.n_total * (node_gini - split.impurity);
        let (l, r): (Vec<usize>, Vec<usize>) = rows
            .into_iter()
            .partition(|&row| self.x[row][split.feature] <= split.threshold);
        let left = self.grow(l, depth + 1, rng);
        let right = self.grow(r, depth + 1, rng);
        self.nodes[id] = Node::Split {
            feature: split.feature,
            threshold: split.threshold,
            left,
            right,
        };
        id
    }
}

pub(super) fn fit(cfg: &ClassifierConfig, x: &[Vec<f64>], y: &[usize], k: usize) -> ForestModel {
    let n = x.len();
    let d = x[0].len();
    let mut trees = Vec::with_capacity(cfg.rf_n_estimators);
    let mut importances = vec![0.0; d];
    for t in 0..cfg.rf_n_estimators {
        let mut rng = SeededStream::derive(cfg.seed, "forest", t as u64);
        let rows: Vec<usize> = (0..n).map(|_| rng.below(n)).collect();
        let mut b = Builder {
            x,
            y,
            k,
            max_depth: cfg.rf_max_depth,
            m_try: max_features(d),
            n_total: n as f64,
            nodes: Vec::new(),
            importance: vec![0.0; d],
        };
        b.grow(rows, 0, &mut rng);
        let total: f64 = b.importance.iter().sum();
        if total > 0.0 {
            for (acc, v) in importances.iter_mut().zip(&b.importance) {
                *acc += v / total;
            }
        }
        trees.push(Tree { nodes: b.nodes });
    }
    let total: f64 = importances.iter().sum();
    if total > 0.0 {
        for v in &mut importances {
            *v /= total;
        }
    }
    ForestModel {
        n_classes: k,
        trees,
        importances,
    }
}

impl Tree {
    pub fn leaf_for(&self, row: &[f64]) -> &[f64] {
        let mut at = 0;
        loop {
            match &self.nodes[at] {
                Node::Leaf { distribution } => return distribution,
                Node::Split {
                    feature,
                    threshold,
                    left,
                    right,
                } => {
                    at = if row[*feature] <= *threshold {
                        *left
                    } else {
                        *right
                    }
                }
            }
        }
    }

    /// Longest root-to-leaf path, in edges.
    pub fn depth(&self) -> usize {
        fn walk(nodes: &[Node], at: usize) -> usize {
            match &nodes[at] {
                Node::Leaf { .. } => 0,
                Node::Split { left, right, .. } => 1 + walk(nodes, *left).max(walk(nodes, *right)),
            }
        }
        walk(&self.nodes, 0)
    }
}

impl ForestModel {
    pub fn scores(&self, row: &[f64]) -> Vec<f64> {
        let mut acc = vec![0.0; self.n_classes];
        for t in &self.trees {
            for (a, p) in acc.iter_mut().zip(t.leaf_for(row)) {
                *a += p;
            }
        }
        let n = self.trees.len() as f64;
        acc.iter().map(|v| v / n).collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::learners::ClassifierKind;

    #[test]
    fn gini_values() {
        assert_eq!(gini(&[5.0, 0.0]), 0.0);
        assert_eq!(gini(&[2.0, 2.0]), 0.5);
        assert_eq!(max_features(50), 8);
        assert_eq!(max_features(1), 1);
    }

    #[test]
    fn unanimous_trees_give_full_score() {
        let leaf = |p: Vec<f64>| Tree {
            nodes: vec![Node::Leaf { distribution: p }],
        };
        let m = ForestModel {
            n_classes: 2,
            trees: vec![leaf(vec![0.0, 1.0]), leaf(vec![0.0, 1.0])],
            importances: vec![],
        };
        assert_eq!(m.scores(&[0.0]), vec![0.0, 1.0]);
    }

    #[test]
    fn depth_limit_and_reproducibility() {
        let mut rng = SeededStream::new(3, "test");
        let x: Vec<Vec<f64>> = (0..60)
            .map(|_| (0..4).map(|_| rng.normal()).collect())
            .collect();
        let y: Vec<usize> = x
            .iter()
            .map(|r| usize::from(r[0] + r[1] * r[2] > 0.0))
            .collect();
        let cfg = ClassifierConfig::new(ClassifierKind::RandomForest);
        let a = fit(&cfg, &x, &y, 2);
        assert!(a.trees.iter().all(|t| t.depth() <= 2));
        assert_eq!(a, fit(&cfg, &x, &y, 2));
        assert!((a.importances.iter().sum::<f64>() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn ties_pick_lowest_feature_then_threshold() {
        // Features 0 and 1 are identical copies; the split must use 0.
        let x = vec![
            vec![0.0, 0.0],
            vec![1.0, 1.0],
            vec![2.0, 2.0],
            vec![3.0, 3.0],
        ];
        let y = vec![0, 0, 1, 1];
        let b = Builder {
            x: &x,
            y: &y,
            k: 2,
            max_depth: 2,
            m_try: 2,
            n_total: 4.0,
            nodes: Vec::new(),
            importance: vec![0.0; 2],
        };
        let s = b.best_split(&[0, 1, 2, 3], &[0, 1]).unwrap();
        assert_eq!((s.feature, s.threshold, s.impurity), (0, 1.5, 0.0));
        let y2 = vec![0, 1, 0, 1];
        let b2 = Builder { y: &y2, ..b };
        assert_eq!(b2.best_split(&[0, 1, 2, 3], &[0]).unwrap().threshold, 0.5);
    }
}
