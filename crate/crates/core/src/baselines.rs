//! Classical classifiers used for comparison and as stacking base learners.

use rand::seq::index::sample;
use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::anneal::stream_rng;
use crate::data::Standardizer;
use crate::error::{Error, Result};
use crate::svm::{sign_label, Kernel, TrainingSet};

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "rule", content = "value", rename_all = "snake_case")]
pub enum MaxFeatures {
    #[default]
    All,
    Sqrt,
    Count(usize),
}

impl MaxFeatures {
    fn resolve(&self, d: usize) -> usize {
        match *self {
            MaxFeatures::All => d,
            MaxFeatures::Sqrt => ((d as f64).sqrt().round() as usize).clamp(1, d),
            MaxFeatures::Count(c) => c.clamp(1, d),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TreeParams {
    /// `None` grows until leaves are pure.
    pub max_depth: Option<usize>,
    pub min_samples_split: usize,
}

impl Default for TreeParams {
    fn default() -> Self {
        Self {
            max_depth: None,
            min_samples_split: 2,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum BaselineSpec {
    Knn {
        k: usize,
    },
    GaussianNb {
        var_smoothing: f64,
    },
    Logistic {
        epochs: usize,
        learning_rate: f64,
    },
    DecisionTree {
        #[serde(flatten)]
        params: TreeParams,
    },
    RandomForest {
        trees: usize,
        #[serde(flatten)]
        params: TreeParams,
        bootstrap: bool,
        max_features: MaxFeatures,
        seed: u64,
    },
    Svm {
        c: f64,
        kernel: Kernel,
        tol: f64,
    },
}

impl BaselineSpec {
    pub fn knn() -> Self {
        BaselineSpec::Knn { k: 3 }
    }

    pub fn gaussian_nb() -> Self {
        BaselineSpec::GaussianNb { var_smoothing: 1e-9 }
    }

    pub fn logistic() -> Self {
        BaselineSpec::Logistic {
            epochs: 1000,
            learning_rate: 0.1,
        }
    }

    pub fn decision_tree() -> Self {
        BaselineSpec::DecisionTree {
            params: TreeParams::default(),
        }
    }

    pub fn random_forest(seed: u64) -> Self {
        BaselineSpec::RandomForest {
            trees: 100,
            params: TreeParams::default(),
            bootstrap: true,
            max_features: MaxFeatures::Sqrt,
            seed,
        }
    }

    pub fn svm(kernel: Kernel) -> Self {
        BaselineSpec::Svm {
            c: 1.0,
            kernel,
            tol: 1e-3,
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            BaselineSpec::Knn { .. } => "KNN",
            BaselineSpec::GaussianNb { .. } => "Naive Bayes",
            BaselineSpec::Logistic { .. } => "Logistic Regression",
            BaselineSpec::DecisionTree { .. } => "Decision Tree",
            BaselineSpec::RandomForest { .. } => "Random Forest",
            BaselineSpec::Svm { kernel: Kernel::Linear, .. } => "SVM Lin",
            BaselineSpec::Svm { .. } => "SVM RBF",
        }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::InvalidParameter(m));
        match self {
            BaselineSpec::Knn { k } if *k == 0 => bad("knn k must be >= 1".into()),
            BaselineSpec::GaussianNb { var_smoothing } if !(*var_smoothing >= 0.0) => {
                bad("var_smoothing must be >= 0".into())
            }
            BaselineSpec::Logistic { epochs, learning_rate } if *epochs == 0 || !(*learning_rate > 0.0) => {
                bad("logistic needs epochs >= 1 and a positive learning rate".into())
            }
            BaselineSpec::DecisionTree { params } | BaselineSpec::RandomForest { params, .. }
                if params.min_samples_split < 2 || params.max_depth == Some(0) =>
            {
                bad("trees need min_samples_split >= 2 and max_depth >= 1".into())
            }
            BaselineSpec::RandomForest { trees: 0, .. } => bad("forest needs at least one tree".into()),
            BaselineSpec::Svm { c, kernel, tol } => {
                kernel.validate()?;
                if !(*c > 0.0) || !(*tol > 0.0) {
                    return bad("svm needs positive C and tolerance".into());
                }
                Ok(())
            }
            _ => Ok(()),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "node", rename_all = "snake_case")]
pub enum TreeNode {
    Leaf {
        label: i8,
    },
    /// `x[feature] <= threshold` goes left.
    Split {
        feature: usize,
        threshold: f64,
        left: usize,
        right: usize,
    },
}

/// CART tree with Gini impurity, nodes stored in an arena rooted at 0.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DecisionTree {
    pub n_features: usize,
    pub nodes: Vec<TreeNode>,
}

impl DecisionTree {
    pub fn predict_unchecked(&self, x: &[f64]) -> i8 {
        let mut at = 0;
        loop {
            match self.nodes[at] {
                TreeNode::Leaf { label } => return label,
                TreeNode::Split {
                    feature,
                    threshold,
                    left,
                    right,
                } => at = if x[feature] <= threshold { left } else { right },
            }
        }
    }

    pub fn depth(&self) -> usize {
        fn walk(t: &DecisionTree, at: usize) -> usize {
            match t.nodes[at] {
                TreeNode::Leaf { .. } => 0,
                TreeNode::Split { left, right, .. } => 1 + walk(t, left).max(walk(t, right)),
            }
        }
        walk(self, 0)
    }
}

fn majority(pos: usize, neg: usize) -> i8 {
    if pos >= neg {
        1
    } else {
        -1
    }
}

fn gini(pos: usize, total: usize) -> f64 {
    if total == 0 {
        return 0.0;
    }
    let p = pos as f64 / total as f64;
    2.0 * p * (1.0 - p)
}

struct TreeBuilder<'a, R: Rng> {
    x: &'a [Vec<f64>],
    y: &'a [i8],
    params: TreeParams,
    features_per_split: usize,
    rng: Option<R>,
    nodes: Vec<TreeNode>,
}

impl<R: Rng> TreeBuilder<'_, R> {
    fn build(&mut self, rows: &mut [usize], depth: usize) -> usize {
        let id = self.nodes.len();
        self.nodes.push(TreeNode::Leaf { label: 1 });
        let pos = rows.iter().filter(|&&r| self.y[r] == 1).count();
        let total = rows.len();
        let leaf = TreeNode::Leaf {
            label: majority(pos, total - pos),
        };
        let stop = pos == 0
            || pos == total
            || total < self.params.min_samples_split
            || self.params.max_depth.is_some_and(|m| depth >= m);
        if stop {
            self.nodes[id] = leaf;
            return id;
        }
        let Some((feature, threshold)) = self.best_split(rows, pos) else {
            self.nodes[id] = leaf;
            return id;
        };
        let mut split = 0;
        for i in 0..rows.len() {
            if self.x[rows[i]][feature] <= threshold {
                rows.swap(i, split);
                split += 1;
            }
        }
        let (l, r) = rows.split_at_mut(split);
        let left = self.build(l, depth + 1);
        let right = self.build(r, depth + 1);
        self.nodes[id] = TreeNode::Split {
            feature,
            threshold,
            left,
            right,
        };
        id
    }

    fn best_split(&mut self, rows: &[usize], pos: usize) -> Option<(usize, f64)> {
        let d = self.x[0].len();
        let features: Vec<usize> = match self.rng.as_mut() {
            Some(rng) if self.features_per_split < d => {
                let mut f = sample(rng, d, self.features_per_split).into_vec();
                f.sort_unstable();
                f
            }
            _ => (0..d).collect(),
        };
        let total = rows.len();
        let parent = gini(pos, total);
        let mut best: Option<(f64, usize, f64)> = None;
        let mut order: Vec<usize> = rows.to_vec();
        for &f in &features {
            order.sort_by(|&a, &b| self.x[a][f].total_cmp(&self.x[b][f]));
            let mut left_pos = 0;
            for i in 0..total - 1 {
                left_pos += usize::from(self.y[order[i]] == 1);
                let (lo, hi) = (self.x[order[i]][f], self.x[order[i + 1]][f]);
                if lo == hi {
                    continue;
                }
                let nl = i + 1;
                let nr = total - nl;
                let impurity = (nl as f64 * gini(left_pos, nl) + nr as f64 * gini(pos - left_pos, nr)) / total as f64;
                if impurity < parent - 1e-12 && best.is_none_or(|(b, _, _)| impurity < b - 1e-12) {
                    best = Some((impurity, f, 0.5 * (lo + hi)));
                }
            }
        }
        best.map(|(_, f, t)| (f, t))
    }
}

fn grow_tree<R: Rng>(
    x: &[Vec<f64>],
    y: &[i8],
    rows: &mut [usize],
    params: TreeParams,
    features_per_split: usize,
    rng: Option<R>,
) -> DecisionTree {
    let mut b = TreeBuilder {
        x,
        y,
        params,
        features_per_split,
        rng,
        nodes: Vec::new(),
    };
    b.build(rows, 0);
    DecisionTree {
        n_features: x[0].len(),
        nodes: b.nodes,
    }
}

/// Dual SVM solved by two-coordinate updates on the maximal violating pair.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClassicalSvm {
    pub kernel: Kernel,
    pub c: f64,
    pub x: Vec<Vec<f64>>,
    pub y: Vec<i8>,
    pub alphas: Vec<f64>,
    pub bias: f64,
    pub iterations: usize,
}

impl ClassicalSvm {
    const MAX_ITERS: usize = 1_000_000;

    pub fn train(ts: &TrainingSet, kernel: Kernel, c: f64, tol: f64) -> Result<Self> {
        let n = ts.len();
        let x = ts.x();
        let y: Vec<f64> = ts.y().iter().map(|&v| f64::from(v)).collect();
        let k: Vec<Vec<f64>> = (0..n)
            .map(|i| (0..n).map(|j| kernel.eval_unchecked(&x[i], &x[j])).collect())
            .collect();
        let mut alpha = vec![0.0; n];
        // Gradient of ½αᵀQα − Σα with Q_ij = y_i y_j K_ij.
        let mut grad = vec![-1.0; n];
        let up = |a: f64, yt: f64| (yt > 0.0 && a < c) || (yt < 0.0 && a > 0.0);
        let low = |a: f64, yt: f64| (yt > 0.0 && a > 0.0) || (yt < 0.0 && a < c);
        let mut iterations = 0;
        let (m_up, m_low) = loop {
            let mut i = usize::MAX;
            let mut j = usize::MAX;
            let mut m = f64::NEG_INFINITY;
            let mut big_m = f64::INFINITY;
            for t in 0..n {
                let v = -y[t] * grad[t];
                if up(alpha[t], y[t]) && v > m {
                    m = v;
                    i = t;
                }
                if low(alpha[t], y[t]) && v < big_m {
                    big_m = v;
                    j = t;
                }
            }
            if i == usize::MAX || j == usize::MAX || m - big_m < tol || iterations >= Self::MAX_ITERS {
                break (m, big_m);
            }
            iterations += 1;
            let curvature = (k[i][i] + k[j][j] - 2.0 * k[i][j]).max(1e-12);
            let mut step = (m - big_m) / curvature;
            step = step.min(if y[i] > 0.0 { c - alpha[i] } else { alpha[i] });
            step = step.min(if y[j] > 0.0 { alpha[j] } else { c - alpha[j] });
            alpha[i] += y[i] * step;
            alpha[j] -= y[j] * step;
            for t in 0..n {
                grad[t] += step * y[t] * (k[t][i] - k[t][j]);
            }
        };
        let free: Vec<f64> = (0..n)
            .filter(|&t| alpha[t] > 1e-12 && alpha[t] < c - 1e-12)
            .map(|t| -y[t] * grad[t])
            .collect();
        let bias = if !free.is_empty() {
            free.iter().sum::<f64>() / free.len() as f64
        } else if m_up.is_finite() && m_low.is_finite() {
            0.5 * (m_up + m_low)
        } else {
            0.0
        };
        Ok(Self {
            kernel,
            c,
            x: x.to_vec(),
            y: ts.y().to_vec(),
            alphas: alpha,
            bias,
            iterations,
        })
    }

    pub fn decision_unchecked(&self, q: &[f64]) -> f64 {
        self.alphas
            .iter()
            .zip(&self.x)
            .zip(&self.y)
            .filter(|((a, _), _)| **a != 0.0)
            .map(|((a, xi), &yi)| a * f64::from(yi) * self.kernel.eval_unchecked(xi, q))
            .sum::<f64>()
            + self.bias
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClassStats {
    pub log_prior: f64,
    pub mean: Vec<f64>,
    pub var: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ClassifierModel {
    Knn {
        k: usize,
        x: Vec<Vec<f64>>,
        y: Vec<i8>,
    },
    GaussianNb {
        positive: ClassStats,
        negative: ClassStats,
    },
    Logistic {
        standardizer: Standardizer,
        weights: Vec<f64>,
        intercept: f64,
    },
    DecisionTree(DecisionTree),
    RandomForest {
        trees: Vec<DecisionTree>,
    },
    Svm(ClassicalSvm),
}

pub fn train(spec: &BaselineSpec, ts: &TrainingSet) -> Result<ClassifierModel> {
    spec.validate()?;
    if !matches!(spec, BaselineSpec::Knn { .. }) && !ts.has_both_classes() {
        return Err(Error::SingleClass);
    }
    let x = ts.x();
    let y = ts.y();
    let d = ts.dim();
    Ok(match *spec {
        BaselineSpec::Knn { k } => ClassifierModel::Knn {
            k,
            x: x.to_vec(),
            y: y.to_vec(),
        },
        BaselineSpec::GaussianNb { var_smoothing } => {
            let overall = Standardizer::fit(x);
            let max_var = overall.scale.iter().map(|s| s * s).fold(0.0, f64::max);
            let eps = var_smoothing * max_var.max(1e-300);
            let stats = |label: i8| {
                let rows: Vec<Vec<f64>> = x.iter().zip(y).filter(|(_, &l)| l == label).map(|(r, _)| r.clone()).collect();
                let n = rows.len() as f64;
                let mean: Vec<f64> = (0..d).map(|j| rows.iter().map(|r| r[j]).sum::<f64>() / n).collect();
                let var = (0..d)
                    .map(|j| rows.iter().map(|r| (r[j] - mean[j]).powi(2)).sum::<f64>() / n + eps)
                    .map(|v: f64| v.max(1e-300))
                    .collect();
                ClassStats {
                    log_prior: (n / x.len() as f64).ln(),
                    mean,
                    var,
                }
            };
            ClassifierModel::GaussianNb {
                positive: stats(1),
                negative: stats(-1),
            }
        }
        BaselineSpec::Logistic { epochs, learning_rate } => {
            let standardizer = Standardizer::fit(x);
            let z: Vec<Vec<f64>> = x.iter().map(|r| standardizer.apply(r)).collect();
            let t: Vec<f64> = y.iter().map(|&l| if l == 1 { 1.0 } else { 0.0 }).collect();
            let n = z.len() as f64;
            let mut w = vec![0.0; d];
            let mut b = 0.0;
            for _ in 0..epochs {
                let mut gw = vec![0.0; d];
                let mut gb = 0.0;
                for (row, &target) in z.iter().zip(&t) {
                    let s = row.iter().zip(&w).map(|(a, b)| a * b).sum::<f64>() + b;
                    let err = sigmoid(s) - target;
                    for (g, v) in gw.iter_mut().zip(row) {
                        *g += err * v;
                    }
                    gb += err;
                }
                for (wj, g) in w.iter_mut().zip(&gw) {
                    *wj -= learning_rate * g / n;
                }
                b -= learning_rate * gb / n;
            }
            ClassifierModel::Logistic {
                standardizer,
                weights: w,
                intercept: b,
            }
        }
        BaselineSpec::DecisionTree { params } => {
            let mut rows: Vec<usize> = (0..x.len()).collect();
            ClassifierModel::DecisionTree(grow_tree::<rand_chacha::ChaCha8Rng>(x, y, &mut rows, params, d, None))
        }
        BaselineSpec::RandomForest {
            trees,
            params,
            bootstrap,
            max_features,
            seed,
        } => {
            let per_split = max_features.resolve(d);
            let forest = (0..trees)
                .into_par_iter()
                .map(|t| {
                    let mut rng = stream_rng(seed, t as u64);
                    let mut rows: Vec<usize> = if bootstrap {
                        (0..x.len()).map(|_| rng.random_range(0..x.len())).collect()
                    } else {
                        (0..x.len()).collect()
                    };
                    grow_tree(x, y, &mut rows, params, per_split, Some(rng))
                })
                .collect();
            ClassifierModel::RandomForest { trees: forest }
        }
        BaselineSpec::Svm { c, kernel, tol } => ClassifierModel::Svm(ClassicalSvm::train(ts, kernel, c, tol)?),
    })
}

fn sigmoid(s: f64) -> f64 {
    1.0 / (1.0 + (-s).exp())
}

fn log_likelihood(s: &ClassStats, x: &[f64]) -> f64 {
    s.log_prior
        + x.iter()
            .zip(s.mean.iter().zip(&s.var))
            .map(|(v, (m, var))| -0.5 * ((2.0 * std::f64::consts::PI * var).ln() + (v - m).powi(2) / var))
            .sum::<f64>()
}

impl ClassifierModel {
    pub fn dim(&self) -> usize {
        match self {
            ClassifierModel::Knn { x, .. } => x[0].len(),
            ClassifierModel::GaussianNb { positive, .. } => positive.mean.len(),
            ClassifierModel::Logistic { weights, .. } => weights.len(),
            ClassifierModel::DecisionTree(t) => t.n_features,
            ClassifierModel::RandomForest { trees } => trees[0].n_features,
            ClassifierModel::Svm(s) => s.x[0].len(),
        }
    }

    /// Real-valued score whose sign is the prediction (`0` maps to `+1`).
    pub fn score(&self, x: &[f64]) -> Result<f64> {
        let d = self.dim();
        if x.len() != d {
            return Err(Error::DimensionMismatch {
                expected: d,
                got: x.len(),
            });
        }
        Ok(match self {
            ClassifierModel::Knn { k, x: train_x, y } => {
                let mut order: Vec<(f64, usize)> = train_x
                    .iter()
                    .enumerate()
                    .map(|(i, r)| (r.iter().zip(x).map(|(a, b)| (a - b) * (a - b)).sum(), i))
                    .collect();
                order.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
                let votes: i32 = order.iter().take(*k).map(|&(_, i)| i32::from(y[i])).sum();
                if votes == 0 {
                    f64::from(y[order[0].1])
                } else {
                    f64::from(votes)
                }
            }
            ClassifierModel::GaussianNb { positive, negative } => log_likelihood(positive, x) - log_likelihood(negative, x),
            ClassifierModel::Logistic {
                standardizer,
                weights,
                intercept,
            } => {
                let z = standardizer.apply(x);
                z.iter().zip(weights).map(|(a, b)| a * b).sum::<f64>() + intercept
            }
            ClassifierModel::DecisionTree(t) => f64::from(t.predict_unchecked(x)),
            ClassifierModel::RandomForest { trees } => trees.iter().map(|t| f64::from(t.predict_unchecked(x))).sum(),
            ClassifierModel::Svm(s) => s.decision_unchecked(x),
        })
    }

    pub fn predict(&self, x: &[f64]) -> Result<i8> {
        self.score(x).map(sign_label)
    }

    pub fn predict_all(&self, rows: &[Vec<f64>]) -> Result<Vec<i8>> {
        rows.iter().map(|r| self.predict(r)).collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::anneal::stream_rng;
    use rand_distr::StandardNormal;

    fn ts(x: Vec<Vec<f64>>, y: Vec<i8>) -> TrainingSet {
        TrainingSet::new(x, y).unwrap()
    }

    fn blobs(seed: u64, n: usize, gap: f64) -> TrainingSet {
        let mut rng = stream_rng(seed, 0);
        let mut x = Vec::new();
        let mut y = Vec::new();
        for i in 0..n {
            let label: i8 = if i % 2 == 0 { 1 } else { -1 };
            let c = f64::from(label) * gap;
            let a: f64 = rng.sample(StandardNormal);
            let b: f64 = rng.sample(StandardNormal);
            x.push(vec![c + a * 0.5, c + b * 0.5]);
            y.push(label);
        }
        ts(x, y)
    }

    #[test]
    fn knn_exact_match_wins() {
        let t = ts(vec![vec![0.0], vec![1.0], vec![2.0]], vec![1, -1, 1]);
        let m = train(&BaselineSpec::Knn { k: 2 }, &t).unwrap();
        assert_eq!(m.predict(&[1.0]).unwrap(), -1);
        let m = train(&BaselineSpec::knn(), &t).unwrap();
        assert_eq!(m.predict(&[0.0]).unwrap(), 1);
        let single = ts(vec![vec![0.0], vec![1.0]], vec![-1, -1]);
        assert!(train(&BaselineSpec::knn(), &single).is_ok());
    }

    #[test]
    fn svm_two_point_example() {
        let t = ts(vec![vec![1.0, 0.0], vec![-1.0, 0.0]], vec![1, -1]);
        let m = train(&BaselineSpec::Svm { c: 10.0, kernel: Kernel::Linear, tol: 1e-3 }, &t).unwrap();
        let ClassifierModel::Svm(s) = &m else { unreachable!() };
        assert!((s.alphas[0] - s.alphas[1]).abs() < 1e-9);
        assert!((s.alphas[0] - 0.5).abs() < 1e-6);
        assert!(s.bias.abs() < 1e-9);
        assert!(m.score(&[2.0, 0.0]).unwrap() > 0.0);
        assert!(m.score(&[0.0, 3.0]).unwrap().abs() < 1e-9);
    }

    #[test]
    fn svm_dual_constraints_and_kkt() {
        for seed in 0..20 {
            let t = blobs(seed, 30, 1.5);
            let c = 5.0;
            let s = ClassicalSvm::train(&t, Kernel::Linear, c, 1e-3).unwrap();
            let eq: f64 = s.alphas.iter().zip(t.y()).map(|(a, &y)| a * f64::from(y)).sum();
            assert!(eq.abs() < 1e-6, "seed {seed}: Σαy = {eq}");
            assert!(s.alphas.iter().all(|&a| (-1e-12..=c + 1e-12).contains(&a)));
            for (i, &a) in s.alphas.iter().enumerate() {
                let margin = f64::from(t.y()[i]) * s.decision_unchecked(&t.x()[i]);
                if a < 1e-9 {
                    assert!(margin >= 1.0 - 2e-3, "seed {seed} i {i} margin {margin}");
                } else if a > c - 1e-9 {
                    assert!(margin <= 1.0 + 2e-3);
                } else {
                    assert!((margin - 1.0).abs() < 2e-3);
                }
            }
        }
    }

    #[test]
    fn naive_bayes_identical_classes_follow_prior() {
        let x = vec![vec![0.0], vec![1.0], vec![0.0], vec![1.0], vec![0.0], vec![1.0]];
        let y = vec![1, 1, -1, -1, -1, -1];
        let m = train(&BaselineSpec::gaussian_nb(), &ts(x, y)).unwrap();
        for q in [-3.0, 0.0, 0.5, 1.0, 9.0] {
            assert_eq!(m.predict(&[q]).unwrap(), -1);
        }
    }

    #[test]
    fn forest_of_one_tree_is_the_tree() {
        let t = blobs(3, 40, 0.6);
        let tree = train(&BaselineSpec::decision_tree(), &t).unwrap();
        let forest = train(
            &BaselineSpec::RandomForest {
                trees: 1,
                params: TreeParams::default(),
                bootstrap: false,
                max_features: MaxFeatures::All,
                seed: 9,
            },
            &t,
        )
        .unwrap();
        let (ClassifierModel::DecisionTree(a), ClassifierModel::RandomForest { trees }) = (&tree, &forest) else {
            unreachable!()
        };
        assert_eq!(a, &trees[0]);
    }

    #[test]
    fn tree_fits_training_data() {
        let t = blobs(4, 40, 0.3);
        let m = train(&BaselineSpec::decision_tree(), &t).unwrap();
        assert_eq!(m.predict_all(t.x()).unwrap(), t.y());
        let shallow = train(
            &BaselineSpec::DecisionTree {
                params: TreeParams { max_depth: Some(1), min_samples_split: 2 },
            },
            &t,
        )
        .unwrap();
        let ClassifierModel::DecisionTree(s) = shallow else { unreachable!() };
        assert!(s.depth() <= 1);
    }

    #[test]
    fn separable_blobs_learned_by_all() {
        let t = blobs(5, 40, 3.0);
        let test = blobs(6, 100, 3.0);
        for spec in [
            BaselineSpec::knn(),
            BaselineSpec::gaussian_nb(),
            BaselineSpec::logistic(),
            BaselineSpec::decision_tree(),
            BaselineSpec::random_forest(1),
            BaselineSpec::svm(Kernel::Linear),
            BaselineSpec::svm(Kernel::Rbf { gamma: 0.5 }),
        ] {
            let m = train(&spec, &t).unwrap();
            let hits = m.predict_all(test.x()).unwrap().iter().zip(test.y()).filter(|(a, b)| a == b).count();
            assert!(hits >= 98, "{} got {hits}/100", spec.name());
        }
    }

    #[test]
    fn single_class_rejected() {
        let t = ts(vec![vec![0.0], vec![1.0]], vec![1, 1]);
        assert!(matches!(train(&BaselineSpec::logistic(), &t), Err(Error::SingleClass)));
        assert!(matches!(train(&BaselineSpec::svm(Kernel::Linear), &t), Err(Error::SingleClass)));
    }

    #[test]
    fn forest_deterministic_and_serializable() {
        let t = blobs(7, 30, 1.0);
        let a = train(&BaselineSpec::random_forest(4), &t).unwrap();
        let b = train(&BaselineSpec::random_forest(4), &t).unwrap();
        assert_eq!(a, b);
        let json = serde_json::to_string(&a).unwrap();
        let back: ClassifierModel = serde_json::from_str(&json).unwrap();
        assert_eq!(back, a);
        let spec_json = serde_json::to_string(&BaselineSpec::random_forest(4)).unwrap();
        assert_eq!(serde_json::from_str::<BaselineSpec>(&spec_json).unwrap(), BaselineSpec::random_forest(4));
    }

    #[test]
    fn dimension_checked() {
        let t = blobs(8, 10, 2.0);
        let m = train(&BaselineSpec::logistic(), &t).unwrap();
        assert!(m.predict(&[1.0]).is_err());
    }
}
