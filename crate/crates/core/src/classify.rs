//! Built-in binary classifiers: k-nearest neighbours and a CART random forest.

use rand::seq::index::sample;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Result, VoxError};
use crate::matrix::Label;

/// Output of one fit-and-predict call.
#[derive(Debug, Clone, PartialEq)]
pub struct Predictions {
    pub labels: Vec<Label>,
    /// Out-of-bag accuracy in percent, for ensembles that have one.
    pub oob_accuracy: Option<f64>,
}

/// A two-class learner; any external model can be plugged into the experiment harness
/// through this trait.
pub trait Classifier: Sync {
    fn name(&self) -> String;

    /// Trains on `(x, y)` and labels every row of `test`. Deterministic given `seed`.
    fn fit_predict(&self, x: &[Vec<f64>], y: &[Label], test: &[Vec<f64>], seed: u64) -> Result<Predictions>;
}

fn check_training(x: &[Vec<f64>], y: &[Label]) -> Result<usize> {
    if x.len() != y.len() {
        return Err(VoxError::InvalidParameter("feature and label counts differ".into()));
    }
    if !y.contains(&Label::Healthy) || !y.contains(&Label::Pathological) {
        return Err(VoxError::InsufficientData("training set must contain both classes".into()));
    }
    let d = x[0].len();
    if x.iter().any(|r| r.len() != d) {
        return Err(VoxError::InvalidParameter("training rows differ in length".into()));
    }
    Ok(d)
}

fn majority(pathological: usize, healthy: usize) -> Label {
    if pathological > healthy {
        Label::Pathological
    } else {
        Label::Healthy
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Knn {
    pub k: usize,
}

impl Default for Knn {
    fn default() -> Self {
        Knn { k: 5 }
    }
}

impl Knn {
    /// Majority vote over the `k` nearest training rows by Euclidean distance.
    /// Equal distances rank the smaller training index first; a tied vote goes
    /// to the class of the nearest neighbour.
    pub fn predict_one(&self, x: &[Vec<f64>], y: &[Label], q: &[f64]) -> Label {
        let mut dist: Vec<(f64, usize)> = x
            .iter()
            .enumerate()
            .map(|(i, r)| (r.iter().zip(q).map(|(a, b)| (a - b).powi(2)).sum::<f64>(), i))
            .collect();
        dist.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
        let k = self.k.clamp(1, dist.len());
        let pos = dist[..k].iter().filter(|(_, i)| y[*i].is_positive()).count();
        match (2 * pos).cmp(&k) {
            std::cmp::Ordering::Greater => Label::Pathological,
            std::cmp::Ordering::Less => Label::Healthy,
            std::cmp::Ordering::Equal => y[dist[0].1],
        }
    }
}

impl Classifier for Knn {
    fn name(&self) -> String {
        format!("knn(k={})", self.k)
    }

    fn fit_predict(&self, x: &[Vec<f64>], y: &[Label], test: &[Vec<f64>], _seed: u64) -> Result<Predictions> {
        if self.k == 0 {
            return Err(VoxError::InvalidParameter("k must be positive".into()));
        }
        check_training(x, y)?;
        Ok(Predictions { labels: test.iter().map(|q| self.predict_one(x, y, q)).collect(), oob_accuracy: None })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct RandomForest {
    pub trees: usize,
    pub max_depth: usize,
    /// Features tried per split; `None` means `⌈√d⌉`.
    pub max_features: Option<usize>,
    /// Each tree sees a bootstrap resample; otherwise every tree sees all rows once.
    pub bootstrap: bool,
}

impl Default for RandomForest {
    fn default() -> Self {
        RandomForest { trees: 100, max_depth: 16, max_features: None, bootstrap: true }
    }
}

#[derive(Debug, Clone, PartialEq)]
enum Node {
    Leaf(Label),
    Split { feature: usize, threshold: f64, left: Box<Node>, right: Box<Node> },
}

impl Node {
    fn predict(&self, q: &[f64]) -> Label {
        match self {
            Node::Leaf(l) => *l,
            Node::Split { feature, threshold, left, right } => {
                if q[*feature] <= *threshold {
                    left.predict(q)
                } else {
                    right.predict(q)
                }
            }
        }
    }
}

/// A fitted CART tree.
#[derive(Debug, Clone, PartialEq)]
pub struct Tree {
    root: Node,
}

impl Tree {
    pub fn predict(&self, q: &[f64]) -> Label {
        self.root.predict(q)
    }

    /// Threshold of the root split, if the root is not a leaf.
    pub fn root_split(&self) -> Option<(usize, f64)> {
        match &self.root {
            Node::Leaf(_) => None,
            Node::Split { feature, threshold, .. } => Some((*feature, *threshold)),
        }
    }
}

fn gini(pos: usize, n: usize) -> f64 {
    if n == 0 {
        return 0.0;
    }
    let p = pos as f64 / n as f64;
    2.0 * p * (1.0 - p)
}

struct Grower<'a> {
    x: &'a [Vec<f64>],
    y: &'a [Label],
    mtry: usize,
    max_depth: usize,
}

impl Grower<'_> {
    fn grow(&self, idx: &mut [usize], depth: usize, rng: &mut ChaCha8Rng) -> Node {
        let n = idx.len();
        let pos = idx.iter().filter(|&&i| self.y[i].is_positive()).count();
        let leaf = Node::Leaf(majority(pos, n - pos));
        if pos == 0 || pos == n || depth >= self.max_depth {
            return leaf;
        }
        let d = self.x[0].len();
        let parent = gini(pos, n) * n as f64;
        // (weighted impurity, feature, threshold)
        let mut best: Option<(f64, usize, f64)> = None;
        for feature in sample(rng, d, self.mtry.min(d)).into_iter() {
            idx.sort_by(|&a, &b| self.x[a][feature].total_cmp(&self.x[b][feature]).then(a.cmp(&b)));
            let mut left_pos = 0;
            for s in 1..n {
                left_pos += usize::from(self.y[idx[s - 1]].is_positive());
                let (lo, hi) = (self.x[idx[s - 1]][feature], self.x[idx[s]][feature]);
                if lo == hi {
                    continue;
                }
                let impurity = gini(left_pos, s) * s as f64 + gini(pos - left_pos, n - s) * (n - s) as f64;
                if impurity < parent && best.map_or(true, |b| impurity < b.0) {
                    best = Some((impurity, feature, lo + (hi - lo) / 2.0));
                }
            }
        }
        let Some((_, feature, threshold)) = best else {
            return leaf;
        };
        idx.sort_by(|&a, &b| self.x[a][feature].total_cmp(&self.x[b][feature]).then(a.cmp(&b)));
        let cut = idx.partition_point(|&i| self.x[i][feature] <= threshold);
        let (l, r) = idx.split_at_mut(cut);
        Node::Split {
            feature,
            threshold,
            left: Box::new(self.grow(l, depth + 1, rng)),
            right: Box::new(self.grow(r, depth + 1, rng)),
        }
    }
}

/// A fitted forest with its out-of-bag accuracy.
#[derive(Debug, Clone, PartialEq)]
pub struct Forest {
    pub trees: Vec<Tree>,
    pub oob_accuracy: Option<f64>,
}

impl Forest {
    pub fn predict(&self, q: &[f64]) -> Label {
        let pos = self.trees.iter().filter(|t| t.predict(q).is_positive()).count();
        majority(pos, self.trees.len() - pos)
    }
}

impl RandomForest {
    pub fn fit(&self, x: &[Vec<f64>], y: &[Label], seed: u64) -> Result<Forest> {
        if self.trees == 0 {
            return Err(VoxError::InvalidParameter("a forest needs at least one tree".into()));
        }
        let d = check_training(x, y)?;
        if d == 0 {
            return Err(VoxError::InsufficientData("no features to split on".into()));
        }
        let mtry = self.max_features.unwrap_or_else(|| (d as f64).sqrt().ceil() as usize).max(1);
        let grower = Grower { x, y, mtry, max_depth: self.max_depth };
        let n = x.len();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut trees = Vec::with_capacity(self.trees);
        // Per-row out-of-bag votes (pathological, healthy).
        let mut votes = vec![(0usize, 0usize); n];
        for _ in 0..self.trees {
            let mut in_bag = vec![!self.bootstrap; n];
            let mut idx: Vec<usize> = if self.bootstrap {
                (0..n)
                    .map(|_| {
                        let i = rng.gen_range(0..n);
                        in_bag[i] = true;
                        i
                    })
                    .collect()
            } else {
                (0..n).collect()
            };
            let tree = Tree { root: grower.grow(&mut idx, 0, &mut rng) };
            for i in (0..n).filter(|&i| !in_bag[i]) {
                match tree.predict(&x[i]) {
                    Label::Pathological => votes[i].0 += 1,
                    Label::Healthy => votes[i].1 += 1,
                }
            }
            trees.push(tree);
        }
        let voted: Vec<usize> = (0..n).filter(|&i| votes[i].0 + votes[i].1 > 0).collect();
        let oob_accuracy = (!voted.is_empty()).then(|| {
            let hits = voted.iter().filter(|&&i| majority(votes[i].0, votes[i].1) == y[i]).count();
            100.0 * hits as f64 / voted.len() as f64
        });
        Ok(Forest { trees, oob_accuracy })
    }
}

impl Classifier for RandomForest {
    fn name(&self) -> String {
        format!("forest(trees={}, max_depth={})", self.trees, self.max_depth)
    }

    fn fit_predict(&self, x: &[Vec<f64>], y: &[Label], test: &[Vec<f64>], seed: u64) -> Result<Predictions> {
        let forest = self.fit(x, y, seed)?;
        Ok(Predictions { labels: test.iter().map(|q| forest.predict(q)).collect(), oob_accuracy: forest.oob_accuracy })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand_distr::{Distribution, Normal};

    fn blobs(per_class: usize, seed: u64) -> (Vec<Vec<f64>>, Vec<Label>) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let noise = Normal::new(0.0, 0.5).unwrap();
        let mut x = Vec::new();
        let mut y = Vec::new();
        for i in 0..2 * per_class {
            let (c, label) = if i % 2 == 0 { (-3.0, Label::Healthy) } else { (3.0, Label::Pathological) };
            x.push(vec![c + noise.sample(&mut rng), c + noise.sample(&mut rng)]);
            y.push(label);
        }
        (x, y)
    }

    fn accuracy(pred: &[Label], truth: &[Label]) -> f64 {
        100.0 * pred.iter().zip(truth).filter(|(a, b)| a == b).count() as f64 / truth.len() as f64
    }

    #[test]
    fn separated_blobs_are_classified_perfectly() {
        let (x, y) = blobs(40, 1);
        let (tx, ty) = blobs(10, 2);
        for clf in [&Knn::default() as &dyn Classifier, &RandomForest::default()] {
            let p = clf.fit_predict(&x, &y, &tx, 7).unwrap();
            assert_eq!(accuracy(&p.labels, &ty), 100.0, "{}", clf.name());
        }
    }

    #[test]
    fn one_nearest_neighbour_memorizes_training_set() {
        let (x, y) = blobs(20, 3);
        let mut y = y;
        y.swap(0, 1);
        let p = Knn { k: 1 }.fit_predict(&x, &y, &x, 0).unwrap();
        assert_eq!(p.labels, y);
    }

    #[test]
    fn knn_distance_ties_prefer_smaller_index() {
        let x = vec![vec![1.0], vec![-1.0], vec![5.0]];
        let y = vec![Label::Pathological, Label::Healthy, Label::Healthy];
        assert_eq!(Knn { k: 1 }.predict_one(&x, &y, &[0.0]), Label::Pathological);
        let y = vec![Label::Healthy, Label::Pathological, Label::Healthy];
        assert_eq!(Knn { k: 1 }.predict_one(&x, &y, &[0.0]), Label::Healthy);
    }

    #[test]
    fn stumps_recover_threshold_within_one_gap() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let mut v: Vec<f64> = (0..60).map(|_| rng.gen_range(0.0..10.0)).collect();
        v.sort_by(f64::total_cmp);
        let x: Vec<Vec<f64>> = v.iter().map(|&a| vec![a]).collect();
        let y: Vec<Label> = v.iter().map(|&a| if a > 6.3 { Label::Pathological } else { Label::Healthy }).collect();
        let below = v.iter().copied().filter(|&a| a <= 6.3).fold(f64::MIN, f64::max);
        let above = v.iter().copied().filter(|&a| a > 6.3).fold(f64::MAX, f64::min);

        let stump = RandomForest { trees: 3, max_depth: 1, max_features: None, bootstrap: false };
        for tree in stump.fit(&x, &y, 5).unwrap().trees {
            let (f, t) = tree.root_split().unwrap();
            assert_eq!(f, 0);
            assert!(t > below && t < above, "threshold {t} outside ({below}, {above})");
        }

        let bagged = RandomForest { trees: 25, max_depth: 1, ..stump };
        let forest = bagged.fit(&x, &y, 5).unwrap();
        assert!(x.iter().zip(&y).all(|(q, &l)| forest.predict(q) == l));
    }

    #[test]
    fn forest_is_seed_deterministic_and_reports_oob() {
        let (x, y) = blobs(30, 4);
        let f = RandomForest::default();
        let a = f.fit(&x, &y, 9).unwrap();
        assert_eq!(a, f.fit(&x, &y, 9).unwrap());
        assert_eq!(a.oob_accuracy, Some(100.0));
    }

    #[test]
    fn rejects_single_class_training() {
        let x = vec![vec![0.0], vec![1.0]];
        let y = vec![Label::Healthy; 2];
        assert!(Knn::default().fit_predict(&x, &y, &x, 0).is_err());
        assert!(RandomForest::default().fit(&x, &y, 0).is_err());
        let both = vec![Label::Healthy, Label::Pathological];
        assert!(Knn::default().fit_predict(&x, &both, &[], 0).unwrap().labels.is_empty());
    }
}
