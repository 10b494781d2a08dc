//! Random forests for classification and regression.
//!
//! CART trees are grown on bootstrap resamples without a depth limit. At
//! every node a random subset of features is examined (⌈√p⌉ for
//! classification, ⌈p/3⌉ for regression); features that are constant within
//! the node are skipped and do not count toward the subset. Candidate
//! thresholds are midpoints between consecutive distinct values, splits
//! maximize the Gini decrease or the variance reduction, and the first best
//! split in (feature index, threshold) order wins. Feature importance is the
//! mean decrease in impurity, normalized per tree and again over the forest.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::par::Execution;
use crate::rng::{derive_seed, rng_from_seed};
use crate::{Error, Result};

pub const FORMAT_VERSION: u32 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Task {
    Classify,
    Regress,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ForestParams {
    pub n_trees: usize,
    /// Features examined per split; `None` picks the task default.
    pub max_features: Option<usize>,
    pub min_leaf: usize,
    pub bootstrap: bool,
    pub seed: u64,
}

impl Default for ForestParams {
    fn default() -> Self {
        ForestParams {
            n_trees: 100,
            max_features: None,
            min_leaf: 1,
            bootstrap: true,
            seed: 0,
        }
    }
}

impl ForestParams {
    fn features_per_split(&self, task: Task, p: usize) -> usize {
        let default = match task {
            Task::Classify => (p as f64).sqrt().ceil() as usize,
            Task::Regress => p.div_ceil(3),
        };
        self.max_features.unwrap_or(default).clamp(1, p.max(1))
    }
}

/// Row-major feature matrix view.
#[derive(Debug, Clone, Copy)]
pub struct Dataset<'a> {
    values: &'a [f64],
    n_rows: usize,
    n_features: usize,
}

impl<'a> Dataset<'a> {
    pub fn new(values: &'a [f64], n_features: usize) -> Result<Self> {
        if n_features == 0 || values.len() % n_features != 0 {
            return Err(Error::InvalidConfig(format!(
                "{} values do not form rows of {n_features} features",
                values.len()
            )));
        }
        if values.iter().any(|v| v.is_nan()) {
            return Err(Error::InvalidConfig("feature matrix contains NaN".into()));
        }
        Ok(Dataset {
            values,
            n_rows: values.len() / n_features,
            n_features,
        })
    }

    pub fn n_rows(&self) -> usize {
        self.n_rows
    }

    pub fn n_features(&self) -> usize {
        self.n_features
    }

    #[inline]
    fn get(&self, row: usize, feature: usize) -> f64 {
        self.values[row * self.n_features + feature]
    }

    pub fn row(&self, r: usize) -> &'a [f64] {
        &self.values[r * self.n_features..(r + 1) * self.n_features]
    }
}

#[derive(Debug, Clone, Copy)]
pub enum Targets<'a> {
    Classes(&'a [u32]),
    Values(&'a [f64]),
}

impl Targets<'_> {
    fn len(&self) -> usize {
        match self {
            Targets::Classes(c) => c.len(),
            Targets::Values(v) => v.len(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum Node {
    Split {
        feature: usize,
        threshold: f64,
        left: usize,
        right: usize,
    },
    /// Class distribution (classification) or a single mean (regression).
    Leaf { value: Vec<f64> },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Tree {
    pub nodes: Vec<Node>,
}

impl Tree {
    fn leaf(&self, x: &[f64]) -> &[f64] {
        let mut i = 0;
        loop {
            match &self.nodes[i] {
                Node::Split {
                    feature,
                    threshold,
                    left,
                    right,
                } => i = if x[*feature] <= *threshold { *left } else { *right },
                Node::Leaf { value } => return value,
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Prediction {
    Class(u32),
    Value(f64),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ForestModel {
    pub format_version: u32,
    pub task: Task,
    pub params: ForestParams,
    pub n_features: usize,
    /// Sorted class labels (classification only).
    pub classes: Vec<u32>,
    pub trees: Vec<Tree>,
    pub importances: Vec<f64>,
    /// Hash of the column dictionary the model was trained against, if known.
    #[serde(default)]
    pub columns_hash: Option<String>,
}

/// Internal per-node label representation.
enum Labels {
    Classes { idx: Vec<usize>, n_classes: usize },
    Values(Vec<f64>),
}

pub fn train_forest(data: &Dataset, targets: Targets, params: &ForestParams, exec: Execution) -> Result<ForestModel> {
    let n = data.n_rows();
    if n == 0 {
        return Err(Error::EmptyTrainingSet);
    }
    if targets.len() != n {
        return Err(Error::LengthMismatch {
            left: n,
            right: targets.len(),
        });
    }
    if params.n_trees == 0 || params.min_leaf == 0 {
        return Err(Error::InvalidConfig(
            "forest needs at least one tree and min_leaf >= 1".into(),
        ));
    }
    let (task, classes, labels) = match targets {
        Targets::Classes(c) => {
            let mut classes = c.to_vec();
            classes.sort_unstable();
            classes.dedup();
            let idx = c.iter().map(|l| classes.binary_search(l).unwrap()).collect();
            let n_classes = classes.len();
            (Task::Classify, classes, Labels::Classes { idx, n_classes })
        }
        Targets::Values(v) => {
            if v.iter().any(|x| !x.is_finite()) {
                return Err(Error::InvalidConfig("regression targets must be finite".into()));
            }
            (Task::Regress, Vec::new(), Labels::Values(v.to_vec()))
        }
    };
    let mtry = params.features_per_split(task, data.n_features());
    let columns = Columns::new(data, exec);
    let grown: Vec<(Tree, Vec<f64>)> = exec.map_range(params.n_trees, |t| {
        let mut rng = rng_from_seed(derive_seed(params.seed, t as u64));
        let rows: Vec<usize> = if params.bootstrap {
            (0..n).map(|_| rng.random_range(0..n)).collect()
        } else {
            (0..n).collect()
        };
        TreeBuilder {
            columns: &columns,
            labels: &labels,
            mtry,
            min_leaf: params.min_leaf,
            nodes: Vec::new(),
            importance: vec![0.0; data.n_features()],
            root_weight: rows.len() as f64,
        }
        .build(rows, &mut rng)
    });

    let mut importances = vec![0.0; data.n_features()];
    let mut trees = Vec::with_capacity(grown.len());
    for (tree, mut imp) in grown {
        normalize(&mut imp);
        importances.iter_mut().zip(&imp).for_each(|(a, b)| *a += b);
        trees.push(tree);
    }
    normalize(&mut importances);
    Ok(ForestModel {
        format_version: FORMAT_VERSION,
        task,
        params: *params,
        n_features: data.n_features(),
        classes,
        trees,
        importances,
        columns_hash: None,
    })
}

fn normalize(v: &mut [f64]) {
    let total: f64 = v.iter().sum();
    if total > 0.0 {
        v.iter_mut().for_each(|x| *x /= total);
    }
}

/// Column-major copy of the training matrix with each column presorted by
/// (value, row).
struct Columns {
    n: usize,
    raw: Vec<f64>,
    sorted: Vec<f64>,
    row_at: Vec<u32>,
    rank: Vec<u32>,
}

impl Columns {
    fn new(data: &Dataset, exec: Execution) -> Self {
        let n = data.n_rows();
        let per_feature = exec.map_range(data.n_features(), |f| {
            let raw: Vec<f64> = (0..n).map(|r| data.get(r, f)).collect();
            let mut row_at: Vec<u32> = (0..n as u32).collect();
            row_at.sort_unstable_by(|&a, &b| raw[a as usize].total_cmp(&raw[b as usize]).then(a.cmp(&b)));
            (raw, row_at)
        });
        let len = n * data.n_features();
        let mut columns = Columns {
            n,
            raw: Vec::with_capacity(len),
            sorted: Vec::with_capacity(len),
            row_at: Vec::with_capacity(len),
            rank: vec![0; len],
        };
        for (f, (raw, row_at)) in per_feature.into_iter().enumerate() {
            for (k, &r) in row_at.iter().enumerate() {
                columns.rank[f * n + r as usize] = k as u32;
            }
            columns.sorted.extend(row_at.iter().map(|&r| raw[r as usize]));
            columns.raw.extend(raw);
            columns.row_at.extend(row_at);
        }
        columns
    }

    #[inline]
    fn column(&self, f: usize) -> &[f64] {
        &self.raw[f * self.n..(f + 1) * self.n]
    }

    /// Fills `order` with `(value, row)` for `rows` sorted by value, then row.
    fn sort_rows(
        &self,
        f: usize,
        rows: &[usize],
        ranks: &mut Vec<u32>,
        counts: &mut [u32],
        order: &mut Vec<(f64, usize)>,
    ) {
        let base = f * self.n;
        let rank = &self.rank[base..base + self.n];
        let (sorted, row_at) = (&self.sorted[base..base + self.n], &self.row_at[base..base + self.n]);
        order.clear();
        let m = rows.len();
        if m * (usize::BITS - m.leading_zeros()) as usize > 2 * self.n {
            rows.iter().for_each(|&r| counts[rank[r] as usize] += 1);
            for (k, c) in counts.iter_mut().enumerate() {
                for _ in 0..*c {
                    order.push((sorted[k], row_at[k] as usize));
                }
                *c = 0;
            }
        } else {
            ranks.clear();
            ranks.extend(rows.iter().map(|&r| rank[r]));
            ranks.sort_unstable();
            order.extend(ranks.iter().map(|&k| (sorted[k as usize], row_at[k as usize] as usize)));
        }
    }
}

struct TreeBuilder<'a> {
    columns: &'a Columns,
    labels: &'a Labels,
    mtry: usize,
    min_leaf: usize,
    nodes: Vec<Node>,
    importance: Vec<f64>,
    root_weight: f64,
}

struct Scratch {
    ranks: Vec<u32>,
    counts: Vec<u32>,
    order: Vec<(f64, usize)>,
    best_order: Vec<(f64, usize)>,
}

struct Split {
    feature: usize,
    threshold: f64,
    decrease: f64,
}

impl TreeBuilder<'_> {
    fn build<R: Rng>(mut self, rows: Vec<usize>, rng: &mut R) -> (Tree, Vec<f64>) {
        let mut features: Vec<usize> = (0..self.importance.len()).collect();
        let mut scratch = Scratch {
            ranks: Vec::new(),
            counts: vec![0; self.columns.n],
            order: Vec::new(),
            best_order: Vec::new(),
        };
        self.nodes.push(Node::Leaf { value: Vec::new() });
        let mut stack = vec![(0usize, rows)];
        while let Some((slot, rows)) = stack.pop() {
            match self.best_split(&rows, &mut features, &mut scratch, rng) {
                Some(split) => {
                    self.importance[split.feature] += split.decrease;
                    let column = self.columns.column(split.feature);
                    let (l, r): (Vec<usize>, Vec<usize>) = rows.iter().partition(|&&i| column[i] <= split.threshold);
                    let left = self.nodes.len();
                    self.nodes.push(Node::Leaf { value: Vec::new() });
                    self.nodes.push(Node::Leaf { value: Vec::new() });
                    self.nodes[slot] = Node::Split {
                        feature: split.feature,
                        threshold: split.threshold,
                        left,
                        right: left + 1,
                    };
                    stack.push((left + 1, r));
                    stack.push((left, l));
                }
                None => {
                    self.nodes[slot] = Node::Leaf {
                        value: self.leaf_value(&rows),
                    }
                }
            }
        }
        (Tree { nodes: self.nodes }, self.importance)
    }

    fn leaf_value(&self, rows: &[usize]) -> Vec<f64> {
        match self.labels {
            Labels::Classes { idx, n_classes } => {
                let mut dist = vec![0.0; *n_classes];
                rows.iter().for_each(|&r| dist[idx[r]] += 1.0);
                let n = rows.len() as f64;
                dist.iter_mut().for_each(|p| *p /= n);
                dist
            }
            Labels::Values(y) => vec![rows.iter().map(|&r| y[r]).sum::<f64>() / rows.len() as f64],
        }
    }

    fn best_split<R: Rng>(
        &self,
        rows: &[usize],
        features: &mut [usize],
        scratch: &mut Scratch,
        rng: &mut R,
    ) -> Option<Split> {
        let n = rows.len();
        if n < 2 * self.min_leaf {
            return None;
        }
        let is_pure = match self.labels {
            Labels::Classes { idx, .. } => rows.iter().all(|&r| idx[r] == idx[rows[0]]),
            Labels::Values(y) => rows.iter().all(|&r| y[r] == y[rows[0]]),
        };
        if is_pure {
            return None;
        }

        // Lazy Fisher–Yates: draw features until `mtry` non-constant ones are found.
        let mut chosen = Vec::with_capacity(self.mtry);
        let p = features.len();
        for drawn in 0..p {
            let j = rng.random_range(drawn..p);
            features.swap(drawn, j);
            let f = features[drawn];
            let column = self.columns.column(f);
            let first = column[rows[0]];
            if rows.iter().any(|&r| column[r] != first) {
                chosen.push(f);
                if chosen.len() == self.mtry {
                    break;
                }
            }
        }
        chosen.sort_unstable();

        let Scratch {
            ranks,
            counts,
            order,
            best_order,
        } = scratch;
        let mut best: Option<(usize, f64, usize)> = None;
        for &f in &chosen {
            self.columns.sort_rows(f, rows, ranks, counts, order);
            if let Some((score, cut)) = self.scan_feature(order) {
                if best.is_none_or(|(_, s, _)| score > s) {
                    best = Some((f, score, cut));
                    std::mem::swap(order, best_order);
                }
            }
        }
        let (feature, _, cut) = best?;
        let order = &best_order[..];
        let (lo, hi) = (order[cut].0, order[cut + 1].0);
        let mut threshold = lo + (hi - lo) / 2.0;
        if threshold >= hi {
            threshold = lo;
        }
        Some(Split {
            feature,
            threshold,
            decrease: self.decrease(order, cut).max(0.0),
        })
    }

    /// Best `(score, cut)` on one feature given rows sorted by that feature;
    /// the cut falls after position `cut`.
    fn scan_feature(&self, order: &[(f64, usize)]) -> Option<(f64, usize)> {
        let n = order.len();
        let nf = n as f64;
        let mut best: Option<(f64, usize)> = None;
        match self.labels {
            Labels::Classes { idx, n_classes } => {
                let mut total = vec![0.0; *n_classes];
                order.iter().for_each(|&(_, r)| total[idx[r]] += 1.0);
                let mut left = vec![0.0; *n_classes];
                let mut sq_l = 0.0;
                let mut sq_r: f64 = total.iter().map(|c| c * c).sum();
                for i in 0..n - 1 {
                    let c = idx[order[i].1];
                    // (a+1)^2 - a^2 = 2a + 1 ; (b-1)^2 - b^2 = 1 - 2b
                    sq_l += 2.0 * left[c] + 1.0;
                    sq_r += 1.0 - 2.0 * (total[c] - left[c]);
                    left[c] += 1.0;
                    if let Some(score) = self.candidate(order, i, sq_l, sq_r) {
                        if best.is_none_or(|(s, _)| score > s) {
                            best = Some((score, i));
                        }
                    }
                }
            }
            Labels::Values(y) => {
                let total: f64 = order.iter().map(|&(_, r)| y[r]).sum();
                let mut sum_l = 0.0;
                for i in 0..n - 1 {
                    sum_l += y[order[i].1];
                    let nl = (i + 1) as f64;
                    let sum_r = total - sum_l;
                    if let Some(score) = self.candidate(order, i, sum_l * sum_l / nl, sum_r * sum_r / (nf - nl)) {
                        if best.is_none_or(|(s, _)| score > s) {
                            best = Some((score, i));
                        }
                    }
                }
            }
        }
        best
    }

    /// Impurity decrease of cutting `order` after position `cut`, weighted by
    /// the node's share of the root.
    fn decrease(&self, order: &[(f64, usize)], cut: usize) -> f64 {
        let nf = order.len() as f64;
        let nl = (cut + 1) as f64;
        let nr = nf - nl;
        let (parent, gl, gr) = match self.labels {
            Labels::Classes { idx, n_classes } => {
                let mut total = vec![0.0; *n_classes];
                order.iter().for_each(|&(_, r)| total[idx[r]] += 1.0);
                let mut l = vec![0.0; *n_classes];
                order[..=cut].iter().for_each(|&(_, r)| l[idx[r]] += 1.0);
                let parent = 1.0 - total.iter().map(|c| c * c).sum::<f64>() / (nf * nf);
                let gl = 1.0 - l.iter().map(|c| (c / nl) * (c / nl)).sum::<f64>();
                let gr = 1.0
                    - total
                        .iter()
                        .zip(&l)
                        .map(|(t, c)| ((t - c) / nr) * ((t - c) / nr))
                        .sum::<f64>();
                (parent, gl, gr)
            }
            Labels::Values(y) => {
                let var = |part: &[(f64, usize)]| {
                    let m = part.iter().map(|&(_, r)| y[r]).sum::<f64>() / part.len() as f64;
                    part.iter().map(|&(_, r)| (y[r] - m) * (y[r] - m)).sum::<f64>() / part.len() as f64
                };
                (var(order), var(&order[..=cut]), var(&order[cut + 1..]))
            }
        };
        (nf * parent - nl * gl - nr * gr) / self.root_weight
    }

    /// Split score for a cut after position `i`, or `None` if the cut falls
    /// between equal values or leaves a child below `min_leaf`.
    #[inline]
    fn candidate(&self, order: &[(f64, usize)], i: usize, left_term: f64, right_term: f64) -> Option<f64> {
        let nl = i + 1;
        let nr = order.len() - nl;
        if order[i].0 == order[i + 1].0 || nl < self.min_leaf || nr < self.min_leaf {
            return None;
        }
        Some(match self.labels {
            Labels::Classes { .. } => left_term / nl as f64 + right_term / nr as f64,
            Labels::Values(_) => left_term + right_term,
        })
    }
}

impl ForestModel {
    pub fn predict(&self, x: &[f64]) -> Result<Prediction> {
        if x.len() != self.n_features {
            return Err(Error::ArityMismatch {
                expected: self.n_features,
                got: x.len(),
            });
        }
        Ok(match self.task {
            Task::Classify => {
                let mut votes = vec![0usize; self.classes.len()];
                for t in &self.trees {
                    votes[argmax(t.leaf(x))] += 1;
                }
                let winner = votes
                    .iter()
                    .enumerate()
                    .fold(0, |best, (i, &v)| if v > votes[best] { i } else { best });
                Prediction::Class(self.classes[winner])
            }
            Task::Regress => {
                let total: f64 = self.trees.iter().map(|t| t.leaf(x)[0]).sum();
                Prediction::Value(total / self.trees.len() as f64)
            }
        })
    }

    pub fn predict_class(&self, x: &[f64]) -> Result<u32> {
        match self.predict(x)? {
            Prediction::Class(c) => Ok(c),
            Prediction::Value(_) => Err(Error::InvalidConfig("regression forest has no classes".into())),
        }
    }

    pub fn predict_value(&self, x: &[f64]) -> Result<f64> {
        match self.predict(x)? {
            Prediction::Value(v) => Ok(v),
            Prediction::Class(_) => Err(Error::InvalidConfig("classification forest predicts classes".into())),
        }
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string(self)?)
    }

    pub fn from_json(s: &str) -> Result<Self> {
        let model: ForestModel = serde_json::from_str(s)?;
        if model.format_version != FORMAT_VERSION {
            return Err(Error::InvalidConfig(format!(
                "unsupported model format version {}",
                model.format_version
            )));
        }
        Ok(model)
    }
}

/// First index of the maximum.
fn argmax(xs: &[f64]) -> usize {
    xs.iter()
        .enumerate()
        .fold(0, |best, (i, &v)| if v > xs[best] { i } else { best })
}

/// Top-`k` feature indices with their dimension-0 / dimension-1 split.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Selection {
    pub indices: Vec<usize>,
    pub n_dim0: usize,
    pub n_dim1: usize,
}

/// Indices of the `k` largest importances (ties to the lower index), in rank
/// order. `dims[i]` is the homological dimension of feature `i`.
pub fn select_top_features(importances: &[f64], k: usize, dims: &[u8]) -> Result<Selection> {
    if k > importances.len() {
        return Err(Error::KTooLarge {
            k,
            available: importances.len(),
        });
    }
    if dims.len() != importances.len() {
        return Err(Error::LengthMismatch {
            left: importances.len(),
            right: dims.len(),
        });
    }
    let mut order: Vec<usize> = (0..importances.len()).collect();
    order.sort_by(|&a, &b| importances[b].total_cmp(&importances[a]).then(a.cmp(&b)));
    order.truncate(k);
    let n_dim0 = order.iter().filter(|&&i| dims[i] == 0).count();
    Ok(Selection {
        n_dim1: k - n_dim0,
        n_dim0,
        indices: order,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn params(seed: u64) -> ForestParams {
        ForestParams {
            n_trees: 25,
            seed,
            ..Default::default()
        }
    }

    #[test]
    fn separable_one_dimensional() {
        let x: Vec<f64> = (0..40).map(|i| i as f64).collect();
        let y: Vec<u32> = (0..40).map(|i| u32::from(i >= 20)).collect();
        let data = Dataset::new(&x, 1).unwrap();
        let m = train_forest(&data, Targets::Classes(&y), &params(1), Execution::Sequential).unwrap();
        let acc = (0..40).filter(|&i| m.predict_class(&[x[i]]).unwrap() == y[i]).count();
        assert_eq!(acc, 40);
        assert_eq!(m.importances, vec![1.0]);
    }

    #[test]
    fn deterministic_given_seed_and_execution_independent() {
        let x: Vec<f64> = (0..300).map(|i| ((i * 37) % 101) as f64).collect();
        let y: Vec<u32> = (0..100).map(|i| (i % 3) as u32).collect();
        let data = Dataset::new(&x, 3).unwrap();
        let a = train_forest(&data, Targets::Classes(&y), &params(5), Execution::Sequential).unwrap();
        let b = train_forest(&data, Targets::Classes(&y), &params(5), Execution::Parallel).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn informative_feature_beats_noise() {
        let mut x = Vec::new();
        let mut y = Vec::new();
        let mut rng = rng_from_seed(99);
        for i in 0..200 {
            let label = (i % 2) as u32;
            x.push(label as f64 * 2.0 + rng.random::<f64>());
            x.push(rng.random::<f64>() * 3.0);
            y.push(label);
        }
        let data = Dataset::new(&x, 2).unwrap();
        for seed in 0..5 {
            let m = train_forest(&data, Targets::Classes(&y), &params(seed), Execution::Sequential).unwrap();
            assert!(m.importances[0] > m.importances[1]);
            assert!((m.importances.iter().sum::<f64>() - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn constant_columns_get_no_importance() {
        let mut x = Vec::new();
        let mut y = Vec::new();
        for i in 0..60 {
            x.extend([i as f64, 7.0, ((i * 13) % 17) as f64]);
            y.push((i / 20) as u32);
        }
        let data = Dataset::new(&x, 3).unwrap();
        let m = train_forest(&data, Targets::Classes(&y), &params(3), Execution::Sequential).unwrap();
        assert_eq!(m.importances[1], 0.0);
    }

    #[test]
    fn regression_mean_and_constant_target() {
        let x: Vec<f64> = (0..30).map(|i| i as f64).collect();
        let data = Dataset::new(&x, 1).unwrap();
        let y = vec![4.5; 30];
        let m = train_forest(&data, Targets::Values(&y), &params(2), Execution::Sequential).unwrap();
        assert_eq!(m.predict_value(&[3.0]).unwrap(), 4.5);

        let two = ForestModel {
            format_version: FORMAT_VERSION,
            task: Task::Regress,
            params: params(0),
            n_features: 1,
            classes: vec![],
            trees: vec![
                Tree {
                    nodes: vec![Node::Leaf { value: vec![1.0] }],
                },
                Tree {
                    nodes: vec![Node::Leaf { value: vec![3.0] }],
                },
            ],
            importances: vec![0.0],
            columns_hash: None,
        };
        assert_eq!(two.predict_value(&[0.0]).unwrap(), 2.0);
    }

    #[test]
    fn vote_ties_go_to_smallest_label() {
        let leaf = |v: Vec<f64>| Tree {
            nodes: vec![Node::Leaf { value: v }],
        };
        let m = ForestModel {
            format_version: FORMAT_VERSION,
            task: Task::Classify,
            params: params(0),
            n_features: 2,
            classes: vec![3, 8],
            trees: vec![leaf(vec![0.0, 1.0]), leaf(vec![1.0, 0.0])],
            importances: vec![0.0, 0.0],
            columns_hash: None,
        };
        assert_eq!(m.predict_class(&[0.0, 0.0]).unwrap(), 3);
        assert!(matches!(
            m.predict(&[0.0]),
            Err(Error::ArityMismatch { expected: 2, got: 1 })
        ));
    }

    #[test]
    fn errors() {
        let empty = Dataset::new(&[], 2).unwrap();
        assert!(matches!(
            train_forest(&empty, Targets::Classes(&[]), &params(0), Execution::Sequential),
            Err(Error::EmptyTrainingSet)
        ));
        assert!(Dataset::new(&[f64::NAN, 1.0], 2).is_err());
    }

    #[test]
    fn json_round_trip() {
        let x: Vec<f64> = (0..20).map(|i| (i % 7) as f64).collect();
        let y: Vec<u32> = (0..20).map(|i| (i % 2) as u32).collect();
        let data = Dataset::new(&x, 1).unwrap();
        let m = train_forest(&data, Targets::Classes(&y), &params(4), Execution::Sequential).unwrap();
        let back = ForestModel::from_json(&m.to_json().unwrap()).unwrap();
        assert_eq!(m, back);
    }

    #[test]
    fn top_feature_selection() {
        let s = select_top_features(&[0.5, 0.3, 0.2], 2, &[0, 1, 0]).unwrap();
        assert_eq!(s.indices, vec![0, 1]);
        assert_eq!((s.n_dim0, s.n_dim1), (1, 1));
        let all = select_top_features(&[0.1, 0.1, 0.8], 3, &[0, 0, 0]).unwrap();
        assert_eq!(all.indices, vec![2, 0, 1]);
        assert!(matches!(
            select_top_features(&[0.1], 2, &[0]),
            Err(Error::KTooLarge { .. })
        ));
    }

    proptest::proptest! {
        #[test]
        fn presorted_rows_match_direct_sort(
            column in proptest::collection::vec(0u8..6, 1..40),
            picks in proptest::collection::vec(0usize..1000, 1..120),
        ) {
            let values: Vec<f64> = column.iter().map(|&v| v as f64 * 0.5).collect();
            let data = Dataset::new(&values, 1).unwrap();
            let columns = Columns::new(&data, Execution::Sequential);
            let rows: Vec<usize> = picks.iter().map(|p| p % values.len()).collect();
            let mut want: Vec<(f64, usize)> = rows.iter().map(|&r| (values[r], r)).collect();
            want.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
            let (mut ranks, mut counts, mut order) = (Vec::new(), vec![0; values.len()], Vec::new());
            columns.sort_rows(0, &rows, &mut ranks, &mut counts, &mut order);
            proptest::prop_assert_eq!(&order, &want);
            proptest::prop_assert!(counts.iter().all(|&c| c == 0));
        }
    }
}
