//! Binary decision-tree ensembles: Gini random forests and completely-random
//! forests.
//!
//! Trees are grown to purity by default. Per-tree RNG streams come from
//! [`crate::seed::derive`] so training is independent of how rayon schedules
//! the trees.

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::matrix::Matrix;
use crate::seed;

/// Class index of genuine presentations.
pub const GENUINE: u8 = 0;
/// Class index of presentation attacks.
pub const SPOOF: u8 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum ForestKind {
    /// Bootstrap samples, `ceil(sqrt(d))` candidate features, best Gini split.
    #[serde(rename = "random")]
    Random,
    /// Full sample set, one random feature, uniform random threshold.
    #[serde(rename = "completely_random")]
    CompletelyRandom,
}

impl ForestKind {
    pub fn name(self) -> &'static str {
        match self {
            ForestKind::Random => "random",
            ForestKind::CompletelyRandom => "completely_random",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ForestParams {
    pub kind: ForestKind,
    pub n_trees: usize,
    /// `None` grows to purity.
    pub max_depth: Option<usize>,
    pub min_leaf: usize,
}

impl ForestParams {
    pub fn new(kind: ForestKind, n_trees: usize) -> Self {
        ForestParams {
            kind,
            n_trees,
            max_depth: None,
            min_leaf: 1,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Node {
    Split {
        feature: u32,
        threshold: f64,
        left: u32,
        right: u32,
    },
    Leaf {
        leaf: [f64; 2],
    },
}

/// A tree stored as a flat pre-order node array; node 0 is the root and
/// samples with `x[feature] <= threshold` go left.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Tree {
    nodes: Vec<Node>,
}

impl Tree {
    pub fn from_nodes(nodes: Vec<Node>) -> Self {
        Tree { nodes }
    }

    pub fn nodes(&self) -> &[Node] {
        &self.nodes
    }

    #[inline]
    fn leaf_for(&self, value: impl Fn(usize) -> f32) -> &[f64; 2] {
        let mut i = 0usize;
        loop {
            match &self.nodes[i] {
                Node::Leaf { leaf } => return leaf,
                Node::Split {
                    feature,
                    threshold,
                    left,
                    right,
                } => {
                    i = if value(*feature as usize) as f64 <= *threshold {
                        *left as usize
                    } else {
                        *right as usize
                    };
                }
            }
        }
    }

    pub fn predict(&self, x: &[f32]) -> [f64; 2] {
        *self.leaf_for(|f| x[f])
    }

    pub fn depth(&self) -> usize {
        fn go(nodes: &[Node], i: usize) -> usize {
            match &nodes[i] {
                Node::Leaf { .. } => 0,
                Node::Split { left, right, .. } => {
                    1 + go(nodes, *left as usize).max(go(nodes, *right as usize))
                }
            }
        }
        go(&self.nodes, 0)
    }

    fn validate(&self, n_features: usize) -> std::result::Result<(), String> {
        if self.nodes.is_empty() {
            return Err("tree without nodes".into());
        }
        let n = self.nodes.len();
        for (i, node) in self.nodes.iter().enumerate() {
            match node {
                Node::Leaf { leaf } => {
                    if leaf.iter().any(|p| !(0.0..=1.0).contains(p))
                        || (leaf[0] + leaf[1] - 1.0).abs() > 1e-9
                    {
                        return Err(format!("node {i}: leaf {leaf:?} is not a distribution"));
                    }
                }
                Node::Split {
                    feature,
                    threshold,
                    left,
                    right,
                } => {
                    if *feature as usize >= n_features {
                        return Err(format!("node {i}: feature {feature} out of range"));
                    }
                    if !threshold.is_finite() {
                        return Err(format!("node {i}: non-finite threshold"));
                    }
                    // Pre-order layout: children always follow their parent.
                    for c in [*left, *right] {
                        if c as usize <= i || c as usize >= n {
                            return Err(format!("node {i}: bad child index {c}"));
                        }
                    }
                }
            }
        }
        Ok(())
    }
}

/// Training data held column-major so that per-feature scans during split
/// search touch contiguous memory.
#[derive(Debug, Clone)]
pub struct TrainSet {
    n_samples: usize,
    n_features: usize,
    columns: Vec<f32>,
    labels: Vec<u8>,
}

impl TrainSet {
    pub fn new(x: &Matrix, y: &[u8]) -> Result<Self> {
        let (n, d) = (x.rows(), x.cols());
        if n == 0 || d == 0 {
            return Err(Error::degenerate("empty training matrix"));
        }
        if y.len() != n {
            return Err(Error::DimensionMismatch {
                expected: n,
                got: y.len(),
            });
        }
        if let Some(bad) = y.iter().find(|&&l| l > SPOOF) {
            return Err(Error::invalid(format!("label {bad} is not 0 or 1")));
        }
        if x.as_slice().iter().any(|v| v.is_nan()) {
            return Err(Error::invalid("training matrix contains NaN"));
        }
        let mut columns = vec![0f32; n * d];
        for i in 0..n {
            for (j, &v) in x.row(i).iter().enumerate() {
                columns[j * n + i] = v;
            }
        }
        Ok(TrainSet {
            n_samples: n,
            n_features: d,
            columns,
            labels: y.to_vec(),
        })
    }

    pub fn n_samples(&self) -> usize {
        self.n_samples
    }

    pub fn n_features(&self) -> usize {
        self.n_features
    }

    pub fn labels(&self) -> &[u8] {
        &self.labels
    }

    #[inline]
    pub fn column(&self, f: usize) -> &[f32] {
        &self.columns[f * self.n_samples..(f + 1) * self.n_samples]
    }

    #[inline]
    pub fn value(&self, i: usize, f: usize) -> f32 {
        self.columns[f * self.n_samples + i]
    }
}

/// A trained ensemble.
#[derive(Debug, Clone, PartialEq)]
pub struct Forest {
    kind: ForestKind,
    seed: u64,
    n_features: usize,
    trees: Vec<Tree>,
    oob_accuracy: Option<f64>,
}

impl Forest {
    /// Assembles a forest from existing trees (used by deserialization and
    /// hand-built test fixtures).
    pub fn from_trees(
        kind: ForestKind,
        seed: u64,
        n_features: usize,
        trees: Vec<Tree>,
    ) -> Result<Self> {
        if trees.is_empty() {
            return Err(Error::invalid("a forest needs at least one tree"));
        }
        for (t, tree) in trees.iter().enumerate() {
            tree.validate(n_features).map_err(|reason| Error::Format {
                what: "forest",
                reason: format!("tree {t}: {reason}"),
            })?;
        }
        Ok(Forest {
            kind,
            seed,
            n_features,
            trees,
            oob_accuracy: None,
        })
    }

    pub fn kind(&self) -> ForestKind {
        self.kind
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn n_features(&self) -> usize {
        self.n_features
    }

    pub fn n_trees(&self) -> usize {
        self.trees.len()
    }

    pub fn trees(&self) -> &[Tree] {
        &self.trees
    }

    /// Out-of-bag accuracy, available for freshly trained random forests.
    pub fn oob_accuracy(&self) -> Option<f64> {
        self.oob_accuracy
    }

    /// Mean of the leaf distributions reached in every tree.
    pub fn predict_proba(&self, x: &[f32]) -> Result<[f64; 2]> {
        if x.len() != self.n_features {
            return Err(Error::DimensionMismatch {
                expected: self.n_features,
                got: x.len(),
            });
        }
        Ok(self.mean_leaf(|f| x[f]))
    }

    fn mean_leaf(&self, value: impl Fn(usize) -> f32 + Copy) -> [f64; 2] {
        let mut acc = [0.0f64; 2];
        for tree in &self.trees {
            let leaf = tree.leaf_for(value);
            acc[0] += leaf[0];
            acc[1] += leaf[1];
        }
        let t = self.trees.len() as f64;
        [acc[0] / t, acc[1] / t]
    }

    /// Row-wise [`Forest::predict_proba`].
    pub fn predict_matrix(&self, x: &Matrix) -> Result<Vec<[f64; 2]>> {
        if x.cols() != self.n_features {
            return Err(Error::DimensionMismatch {
                expected: self.n_features,
                got: x.cols(),
            });
        }
        Ok((0..x.rows())
            .into_par_iter()
            .map(|i| {
                let row = x.row(i);
                self.mean_leaf(|f| row[f])
            })
            .collect())
    }

    fn predict_train_row(&self, data: &TrainSet, i: usize) -> [f64; 2] {
        self.mean_leaf(|f| data.value(i, f))
    }
}

/// Predicted class: spoof when its probability is strictly larger.
#[inline]
pub fn argmax(p: &[f64; 2]) -> u8 {
    if p[1] > p[0] {
        SPOOF
    } else {
        GENUINE
    }
}

fn check_samples(data: &TrainSet, samples: &[usize]) -> Result<()> {
    if samples.is_empty() {
        return Err(Error::degenerate("no training samples"));
    }
    if let Some(&bad) = samples.iter().find(|&&i| i >= data.n_samples) {
        return Err(Error::invalid(format!("sample index {bad} out of range")));
    }
    let spoof = samples
        .iter()
        .filter(|&&i| data.labels[i] == SPOOF)
        .count();
    if spoof == 0 || spoof == samples.len() {
        return Err(Error::degenerate("training labels contain a single class"));
    }
    Ok(())
}

/// Trains a forest on the rows `samples` of `data`.
pub fn train_forest(
    data: &TrainSet,
    samples: &[usize],
    params: &ForestParams,
    seed: u64,
) -> Result<Forest> {
    if params.n_trees == 0 {
        return Err(Error::invalid("n_trees must be positive"));
    }
    if params.min_leaf == 0 {
        return Err(Error::invalid("min_leaf must be positive"));
    }
    check_samples(data, samples)?;
    let grown: Vec<(Tree, Option<Vec<bool>>)> = (0..params.n_trees)
        .into_par_iter()
        .map(|t| grow_tree(data, samples, params, seed::derive(seed, &[t as u64])))
        .collect();
    let mut in_bag = Vec::new();
    let trees = grown
        .into_iter()
        .map(|(tree, bag)| {
            in_bag.extend(bag);
            tree
        })
        .collect();
    let mut forest = Forest {
        kind: params.kind,
        seed,
        n_features: data.n_features,
        trees,
        oob_accuracy: None,
    };
    if params.kind == ForestKind::Random {
        forest.oob_accuracy = oob_accuracy(&forest, data, samples, &in_bag);
    }
    Ok(forest)
}

fn oob_accuracy(forest: &Forest, data: &TrainSet, samples: &[usize], in_bag: &[Vec<bool>]) -> Option<f64> {
    let mut correct = 0usize;
    let mut scored = 0usize;
    for &i in samples {
        let mut acc = [0.0f64; 2];
        let mut votes = 0usize;
        for (tree, bag) in forest.trees.iter().zip(in_bag) {
            if bag[i] {
                continue;
            }
            let leaf = tree.leaf_for(|f| data.value(i, f));
            acc[0] += leaf[0];
            acc[1] += leaf[1];
            votes += 1;
        }
        if votes > 0 {
            scored += 1;
            if argmax(&acc) == data.labels[i] {
                correct += 1;
            }
        }
    }
    (scored > 0).then(|| correct as f64 / scored as f64)
}

/// Random forest on a dense matrix: bootstrap rows, `ceil(sqrt(d))`
/// candidate features per node, best Gini split.
pub fn train_random_forest(x: &Matrix, y: &[u8], n_trees: usize, seed: u64) -> Result<Forest> {
    let data = TrainSet::new(x, y)?;
    let all: Vec<usize> = (0..data.n_samples).collect();
    train_forest(&data, &all, &ForestParams::new(ForestKind::Random, n_trees), seed)
}

/// Completely-random forest on a dense matrix: every row, one random
/// feature and a uniform random threshold per node.
pub fn train_completely_random_forest(
    x: &Matrix,
    y: &[u8],
    n_trees: usize,
    seed: u64,
) -> Result<Forest> {
    let data = TrainSet::new(x, y)?;
    let all: Vec<usize> = (0..data.n_samples).collect();
    train_forest(
        &data,
        &all,
        &ForestParams::new(ForestKind::CompletelyRandom, n_trees),
        seed,
    )
}

#[inline]
fn gini(c0: usize, c1: usize) -> f64 {
    let n = (c0 + c1) as f64;
    1.0 - ((c0 * c0 + c1 * c1) as f64) / (n * n)
}

struct Split {
    feature: usize,
    threshold: f64,
}

struct Grower<'a, R: Rng> {
    data: &'a TrainSet,
    params: &'a ForestParams,
    rng: R,
    /// Feature permutation consumed by partial Fisher-Yates at each node.
    order: Vec<u32>,
    mtry: usize,
    values: Vec<(f32, u8)>,
    nodes: Vec<Node>,
}

fn grow_tree(
    data: &TrainSet,
    samples: &[usize],
    params: &ForestParams,
    tree_seed: u64,
) -> (Tree, Option<Vec<bool>>) {
    grow_tree_with(data, samples, params, tree_seed, params.kind == ForestKind::Random)
}

fn grow_tree_with(
    data: &TrainSet,
    samples: &[usize],
    params: &ForestParams,
    tree_seed: u64,
    bootstrap: bool,
) -> (Tree, Option<Vec<bool>>) {
    let mut rng = seed::rng(tree_seed);
    let (mut idx, bag) = match bootstrap {
        true => {
            let n = samples.len();
            let drawn: Vec<usize> = (0..n).map(|_| samples[rng.gen_range(0..n)]).collect();
            let mut bag = vec![false; data.n_samples];
            for &i in &drawn {
                bag[i] = true;
            }
            (drawn, Some(bag))
        }
        false => (samples.to_vec(), None),
    };
    let d = data.n_features;
    let mtry = match params.kind {
        ForestKind::Random => ((d as f64).sqrt().ceil() as usize).clamp(1, d),
        ForestKind::CompletelyRandom => 1,
    };
    let mut grower = Grower {
        data,
        params,
        rng,
        order: (0..d as u32).collect(),
        mtry,
        values: Vec::with_capacity(idx.len()),
        nodes: Vec::new(),
    };
    grower.grow(&mut idx, 0);
    (Tree { nodes: grower.nodes }, bag)
}

impl<R: Rng> Grower<'_, R> {
    fn leaf(&mut self, c0: usize, c1: usize) -> u32 {
        let n = (c0 + c1) as f64;
        let p1 = c1 as f64 / n;
        self.nodes.push(Node::Leaf {
            leaf: [1.0 - p1, p1],
        });
        (self.nodes.len() - 1) as u32
    }

    fn grow(&mut self, idx: &mut [usize], depth: usize) -> u32 {
        let c1 = idx
            .iter()
            .filter(|&&i| self.data.labels[i] == SPOOF)
            .count();
        let c0 = idx.len() - c1;
        let at_depth_cap = self.params.max_depth.is_some_and(|m| depth >= m);
        if c0 == 0 || c1 == 0 || idx.len() < 2 * self.params.min_leaf || at_depth_cap {
            return self.leaf(c0, c1);
        }
        let split = match self.params.kind {
            ForestKind::Random => self.best_gini_split(idx, c0, c1),
            ForestKind::CompletelyRandom => self.random_split(idx),
        };
        let Some(split) = split else {
            return self.leaf(c0, c1);
        };
        let column = self.data.column(split.feature);
        let mut n_left = 0;
        for j in 0..idx.len() {
            if column[idx[j]] as f64 <= split.threshold {
                idx.swap(n_left, j);
                n_left += 1;
            }
        }
        debug_assert!(n_left > 0 && n_left < idx.len());
        let me = self.nodes.len();
        self.nodes.push(Node::Leaf { leaf: [0.0, 0.0] });
        let (l, r) = idx.split_at_mut(n_left);
        let left = self.grow(l, depth + 1);
        let right = self.grow(r, depth + 1);
        self.nodes[me] = Node::Split {
            feature: split.feature as u32,
            threshold: split.threshold,
            left,
            right,
        };
        me as u32
    }

    /// Draws the next unvisited feature uniformly at random, or `None` once
    /// every feature has been drawn at this node.
    #[inline]
    fn draw_feature(&mut self, drawn: usize) -> Option<usize> {
        let d = self.order.len();
        if drawn >= d {
            return None;
        }
        let j = self.rng.gen_range(drawn..d);
        self.order.swap(drawn, j);
        Some(self.order[drawn] as usize)
    }

    fn min_max(&self, idx: &[usize], feature: usize) -> (f32, f32) {
        let column = self.data.column(feature);
        idx.iter().fold((f32::INFINITY, f32::NEG_INFINITY), |(lo, hi), &i| {
            let v = column[i];
            (lo.min(v), hi.max(v))
        })
    }

    /// Uniform feature among those not constant on the node, threshold
    /// uniform in `[min, max)`.
    fn random_split(&mut self, idx: &[usize]) -> Option<Split> {
        let mut drawn = 0;
        while let Some(feature) = self.draw_feature(drawn) {
            drawn += 1;
            let (lo, hi) = self.min_max(idx, feature);
            if lo < hi {
                let (lo, hi) = (lo as f64, hi as f64);
                let mut threshold = lo + self.rng.gen::<f64>() * (hi - lo);
                if threshold >= hi {
                    threshold = lo;
                }
                return Some(Split { feature, threshold });
            }
        }
        None
    }

    /// Best Gini split over `mtry` non-constant candidate features. Constant
    /// features are skipped without counting toward `mtry`. Ties go to the
    /// lowest feature index, then the lowest threshold.
    fn best_gini_split(&mut self, idx: &[usize], c0: usize, c1: usize) -> Option<Split> {
        let n = idx.len();
        let parent_score = ((c0 * c0 + c1 * c1) as f64) / n as f64;
        let min_leaf = self.params.min_leaf;
        let mut best: Option<(f64, usize, f64)> = None;
        let mut evaluated = 0;
        let mut drawn = 0;
        while evaluated < self.mtry {
            let Some(feature) = self.draw_feature(drawn) else {
                break;
            };
            drawn += 1;
            let column = self.data.column(feature);
            self.values.clear();
            self.values
                .extend(idx.iter().map(|&i| (column[i], self.data.labels[i])));
            let (lo, hi) = self
                .values
                .iter()
                .fold((f32::INFINITY, f32::NEG_INFINITY), |(lo, hi), &(v, _)| {
                    (lo.min(v), hi.max(v))
                });
            if lo == hi {
                continue;
            }
            evaluated += 1;
            self.values.sort_unstable_by(|a, b| a.0.total_cmp(&b.0));
            let (mut l0, mut l1) = (0usize, 0usize);
            for i in 0..n - 1 {
                if self.values[i].1 == SPOOF {
                    l1 += 1;
                } else {
                    l0 += 1;
                }
                let (v, next) = (self.values[i].0, self.values[i + 1].0);
                if v == next {
                    continue;
                }
                let nl = i + 1;
                let nr = n - nl;
                if nl < min_leaf || nr < min_leaf {
                    continue;
                }
                let (r0, r1) = (c0 - l0, c1 - l1);
                // Maximizing this minimizes the weighted child Gini impurity.
                let score = ((l0 * l0 + l1 * l1) as f64) / nl as f64
                    + ((r0 * r0 + r1 * r1) as f64) / nr as f64;
                let threshold = (v as f64 + next as f64) / 2.0;
                let better = match best {
                    None => true,
                    Some((bs, bf, bt)) => {
                        score > bs || (score == bs && (feature, threshold) < (bf, bt))
                    }
                };
                if better {
                    best = Some((score, feature, threshold));
                }
            }
        }
        let (score, feature, threshold) = best?;
        // Require a strict decrease of the weighted Gini impurity.
        if (score - parent_score) / n as f64 <= 1e-12 {
            return None;
        }
        assert!(
            1.0 - score / (n as f64) < gini(c0, c1),
            "split does not reduce impurity"
        );
        Some(Split { feature, threshold })
    }
}

/// Which samples trained, and which samples were predicted by, one fold's
/// forest.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FoldRecord {
    pub train: Vec<usize>,
    pub held_out: Vec<usize>,
}

/// Output of [`kfold_class_vectors`].
#[derive(Debug, Clone)]
pub struct KFoldOutput {
    /// Cross-fitted class distribution for every entry of `samples`, in the
    /// same order.
    pub vectors: Vec<[f64; 2]>,
    /// Forest trained on all of `samples`, for inference.
    pub final_forest: Forest,
    pub folds: Vec<FoldRecord>,
}

/// Stratified fold assignment: within each class, shuffle then deal
/// round-robin, continuing the deal across classes so fold sizes differ by
/// at most one.
pub fn stratified_folds(labels: &[u8], samples: &[usize], k: usize, seed: u64) -> Result<Vec<usize>> {
    use rand::seq::SliceRandom;
    if k < 2 {
        return Err(Error::invalid("k must be at least 2"));
    }
    if k > samples.len() {
        return Err(Error::invalid(format!(
            "k = {k} exceeds the sample count {}",
            samples.len()
        )));
    }
    let mut rng = seed::rng(seed);
    let mut fold_of = vec![0usize; samples.len()];
    let mut next = 0usize;
    for class in [GENUINE, SPOOF] {
        let mut members: Vec<usize> = (0..samples.len())
            .filter(|&p| labels[samples[p]] == class)
            .collect();
        members.shuffle(&mut rng);
        for p in members {
            fold_of[p] = next % k;
            next += 1;
        }
    }
    Ok(fold_of)
}

/// gcForest-style class-vector augmentation: every sample's vector comes
/// from a forest trained on the other `k - 1` stratified folds.
pub fn kfold_class_vectors(
    data: &TrainSet,
    samples: &[usize],
    params: &ForestParams,
    k: usize,
    seed: u64,
) -> Result<KFoldOutput> {
    check_samples(data, samples)?;
    let fold_of = stratified_folds(&data.labels, samples, k, seed::derive(seed, &[0]))?;
    let mut folds = Vec::with_capacity(k);
    for fold in 0..k {
        let mut train = Vec::new();
        let mut held_out = Vec::new();
        for (p, &s) in samples.iter().enumerate() {
            if fold_of[p] == fold {
                held_out.push(s);
            } else {
                train.push(s);
            }
        }
        let spoof = train.iter().filter(|&&i| data.labels[i] == SPOOF).count();
        if spoof == 0 || spoof == train.len() {
            return Err(Error::degenerate(format!(
                "training folds for fold {fold} lack a class"
            )));
        }
        folds.push(FoldRecord { train, held_out });
    }
    let fold_forests: Vec<Forest> = folds
        .par_iter()
        .enumerate()
        .map(|(f, rec)| train_forest(data, &rec.train, params, seed::derive(seed, &[1, f as u64])))
        .collect::<Result<_>>()?;
    let final_forest = train_forest(data, samples, params, seed::derive(seed, &[2]))?;

    let position: std::collections::HashMap<usize, usize> =
        samples.iter().enumerate().map(|(p, &s)| (s, p)).collect();
    let mut vectors = vec![[0.0; 2]; samples.len()];
    for (forest, rec) in fold_forests.iter().zip(&folds) {
        for &s in &rec.held_out {
            vectors[position[&s]] = forest.predict_train_row(data, s);
        }
    }
    Ok(KFoldOutput {
        vectors,
        final_forest,
        folds,
    })
}

/// On-disk JSON form of a forest.
#[derive(Debug, Serialize, Deserialize)]
struct ForestFile {
    format: String,
    version: u32,
    kind: ForestKind,
    seed: u64,
    n_features: usize,
    n_trees: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    oob_accuracy: Option<f64>,
    trees: Vec<Tree>,
}

const FOREST_FORMAT: &str = "lbpforest.forest";
const FOREST_VERSION: u32 = 1;

impl Forest {
    pub fn to_json(&self) -> String {
        let file = ForestFile {
            format: FOREST_FORMAT.to_string(),
            version: FOREST_VERSION,
            kind: self.kind,
            seed: self.seed,
            n_features: self.n_features,
            n_trees: self.trees.len(),
            oob_accuracy: self.oob_accuracy,
            trees: self.trees.clone(),
        };
        serde_json::to_string(&file).expect("forest serialization cannot fail")
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let file: ForestFile = serde_json::from_str(text).map_err(|e| Error::Format {
            what: "forest",
            reason: e.to_string(),
        })?;
        if file.format != FOREST_FORMAT || file.version != FOREST_VERSION {
            return Err(Error::Format {
                what: "forest",
                reason: format!("unsupported format {} v{}", file.format, file.version),
            });
        }
        if file.n_trees != file.trees.len() {
            return Err(Error::Format {
                what: "forest",
                reason: format!("n_trees = {} but {} trees stored", file.n_trees, file.trees.len()),
            });
        }
        let mut forest = Forest::from_trees(file.kind, file.seed, file.n_features, file.trees)?;
        forest.oob_accuracy = file.oob_accuracy;
        Ok(forest)
    }
}
