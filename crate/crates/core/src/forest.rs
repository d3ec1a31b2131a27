//! Regression forests built from scratch: bootstrap resampling, per-node
//! feature subsampling and recursive binary splitting on a mean-squared-error
//! criterion. Used as the nuisance learner in [`crate::dml`].
//!
//! Randomness is fully determined by [`ForestParams::seed`]. Tree `b` draws
//! from its own ChaCha stream seeded with `substream_seed(seed, b)`, consumed
//! in a fixed order: first the `n` bootstrap indices, then one feature subset
//! per visited node in depth-first, left-before-right order.

use nalgebra::DMatrix;
use rand::seq::index;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::numeric::{self, substream_seed};

/// How many features are candidates at each node.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SplitFeatures {
    /// `max(1, floor(sqrt(p)))`.
    Sqrt,
    /// Every feature; no subsampling.
    All,
    Count(usize),
}

impl SplitFeatures {
    fn resolve(self, p: usize) -> Result<usize> {
        match self {
            SplitFeatures::Sqrt => Ok(((p as f64).sqrt().floor() as usize).max(1)),
            SplitFeatures::All => Ok(p),
            SplitFeatures::Count(m) if m >= 1 && m <= p => Ok(m),
            SplitFeatures::Count(m) => Err(Error::Config(format!(
                "{m} split features requested but data has {p}"
            ))),
        }
    }
}

/// Loss minimized when choosing a split.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum SplitCriterion {
    /// `MSE_L + MSE_R`: the unweighted sum of the two children's mean squared
    /// errors about their own means. Small pure children score well under
    /// this rule, so trees tend to peel off a few extreme rows at a time.
    ChildMseSum,
    /// `(n_L * MSE_L + n_R * MSE_R) / n`, the size-weighted impurity used by
    /// CART implementations.
    #[default]
    WeightedMse,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ForestParams {
    pub n_trees: usize,
    pub max_depth: usize,
    pub min_samples_split: usize,
    pub split_features: SplitFeatures,
    pub criterion: SplitCriterion,
    /// Disabled only by oracle tests: trees then see the full sample.
    pub bootstrap: bool,
    pub seed: u64,
}

impl ForestParams {
    /// 50 trees of depth at most 5 with `sqrt(p)` candidate features.
    pub fn compact() -> Self {
        Self {
            n_trees: 50,
            max_depth: 5,
            min_samples_split: 2,
            split_features: SplitFeatures::Sqrt,
            criterion: SplitCriterion::default(),
            bootstrap: true,
            seed: 42,
        }
    }

    /// 200 trees, depth 15, minimum split size 5, all features per node.
    pub fn large() -> Self {
        Self {
            n_trees: 200,
            max_depth: 15,
            min_samples_split: 5,
            split_features: SplitFeatures::All,
            criterion: SplitCriterion::default(),
            bootstrap: true,
            seed: 42,
        }
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_trees == 0 {
            return Err(Error::Config("n_trees must be at least 1".into()));
        }
        if self.max_depth == 0 {
            return Err(Error::Config("max_depth must be at least 1".into()));
        }
        if self.min_samples_split < 2 {
            return Err(Error::Config("min_samples_split must be at least 2".into()));
        }
        Ok(())
    }
}

impl Default for ForestParams {
    fn default() -> Self {
        Self::compact()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Node {
    Leaf {
        value: f64,
    },
    Split {
        feature: usize,
        threshold: f64,
        left: usize,
        right: usize,
    },
}

/// A single fitted tree. Node 0 is the root; rows with
/// `x[feature] <= threshold` go left.
#[derive(Debug, Clone, PartialEq)]
pub struct RegressionTree {
    nodes: Vec<Node>,
    n_features: usize,
}

impl RegressionTree {
    pub fn nodes(&self) -> &[Node] {
        &self.nodes
    }

    /// `(feature, threshold)` of the root, or `None` for a single leaf.
    pub fn root_split(&self) -> Option<(usize, f64)> {
        match self.nodes[0] {
            Node::Split {
                feature, threshold, ..
            } => Some((feature, threshold)),
            Node::Leaf { .. } => None,
        }
    }

    /// Number of edges on the longest root-to-leaf path.
    pub fn depth(&self) -> usize {
        fn walk(nodes: &[Node], i: usize) -> usize {
            match nodes[i] {
                Node::Leaf { .. } => 0,
                Node::Split { left, right, .. } => 1 + walk(nodes, left).max(walk(nodes, right)),
            }
        }
        walk(&self.nodes, 0)
    }

    pub fn leaf_values(&self) -> Vec<f64> {
        self.nodes
            .iter()
            .filter_map(|n| match n {
                Node::Leaf { value } => Some(*value),
                Node::Split { .. } => None,
            })
            .collect()
    }

    pub fn predict_row(&self, row: impl Fn(usize) -> f64) -> f64 {
        let mut i = 0;
        loop {
            match self.nodes[i] {
                Node::Leaf { value } => return value,
                Node::Split {
                    feature,
                    threshold,
                    left,
                    right,
                } => {
                    i = if row(feature) <= threshold {
                        left
                    } else {
                        right
                    }
                }
            }
        }
    }
}

/// Averaged ensemble of regression trees.
#[derive(Debug, Clone, PartialEq)]
pub struct RegressionForest {
    trees: Vec<RegressionTree>,
    params: ForestParams,
    n_features: usize,
}

impl RegressionForest {
    /// Fits `params.n_trees` trees to `(x, y)`; trees are built in parallel
    /// but each depends only on its own substream, so the result is
    /// independent of scheduling.
    pub fn fit(x: &DMatrix<f64>, y: &[f64], params: &ForestParams) -> Result<Self> {
        params.validate()?;
        let (n, p) = x.shape();
        if n != y.len() {
            return Err(Error::Shape(format!(
                "X has {n} rows but y has {}",
                y.len()
            )));
        }
        if n < 2 {
            return Err(Error::Fit(format!("need at least 2 observations, got {n}")));
        }
        if p == 0 {
            return Err(Error::Fit("need at least one feature".into()));
        }
        if x.iter().chain(y).any(|v| !v.is_finite()) {
            return Err(Error::Fit("non-finite value in training data".into()));
        }
        let m = params.split_features.resolve(p)?;

        let trees = (0..params.n_trees)
            .into_par_iter()
            .map(|b| {
                let mut rng = ChaCha8Rng::seed_from_u64(substream_seed(params.seed, b as u64));
                let rows: Vec<usize> = if params.bootstrap {
                    (0..n).map(|_| rng.random_range(0..n)).collect()
                } else {
                    (0..n).collect()
                };
                TreeBuilder {
                    x,
                    y,
                    params,
                    m,
                    rng,
                    nodes: Vec::new(),
                }
                .build(rows)
            })
            .collect();
        Ok(Self {
            trees,
            params: params.clone(),
            n_features: p,
        })
    }

    /// Builds a forest directly from trees (used to assemble fixtures).
    pub fn from_trees(trees: Vec<RegressionTree>, params: ForestParams) -> Result<Self> {
        let n_features = trees
            .first()
            .map(|t| t.n_features)
            .ok_or_else(|| Error::Config("forest needs at least one tree".into()))?;
        if trees.iter().any(|t| t.n_features != n_features) {
            return Err(Error::Shape("trees disagree on feature count".into()));
        }
        Ok(Self {
            trees,
            params,
            n_features,
        })
    }

    pub fn trees(&self) -> &[RegressionTree] {
        &self.trees
    }

    pub fn params(&self) -> &ForestParams {
        &self.params
    }

    pub fn n_features(&self) -> usize {
        self.n_features
    }

    /// Mean of the per-tree predictions for every row of `x`.
    pub fn predict(&self, x: &DMatrix<f64>) -> Result<Vec<f64>> {
        if x.ncols() != self.n_features {
            return Err(Error::Shape(format!(
                "forest was trained on {} features, got {}",
                self.n_features,
                x.ncols()
            )));
        }
        let b = self.trees.len() as f64;
        Ok((0..x.nrows())
            .map(|i| {
                let total = numeric::sum(self.trees.iter().map(|t| t.predict_row(|j| x[(i, j)])));
                total / b
            })
            .collect())
    }
}

impl RegressionTree {
    /// A tree consisting of one leaf.
    pub fn constant(value: f64, n_features: usize) -> Self {
        Self {
            nodes: vec![Node::Leaf { value }],
            n_features,
        }
    }
}

/// Best split found at a node.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SplitCandidate {
    pub feature: usize,
    pub threshold: f64,
    pub loss: f64,
}

/// Exhaustive search over `features` for the split of `rows` minimizing
/// `criterion`. Thresholds are midpoints between consecutive distinct sorted
/// values; ties keep the lowest feature, then the lowest threshold.
pub fn best_split(
    x: &DMatrix<f64>,
    y: &[f64],
    rows: &[usize],
    features: &[usize],
    criterion: SplitCriterion,
) -> Option<SplitCandidate> {
    let n = rows.len();
    if n < 2 {
        return None;
    }
    // Centering on the node mean keeps the prefix sums well conditioned and
    // makes the search invariant to shifts of y.
    let centre = numeric::mean(&rows.iter().map(|&r| y[r]).collect::<Vec<_>>());
    let mut best: Option<SplitCandidate> = None;
    let mut pairs: Vec<(f64, f64)> = Vec::with_capacity(n);
    for &feature in features {
        pairs.clear();
        pairs.extend(rows.iter().map(|&r| (x[(r, feature)], y[r] - centre)));
        pairs.sort_by(|a, b| a.0.total_cmp(&b.0));
        if pairs[0].0 == pairs[n - 1].0 {
            continue;
        }
        let total_s: f64 = pairs.iter().map(|p| p.1).sum();
        let total_ss: f64 = pairs.iter().map(|p| p.1 * p.1).sum();
        let (mut s, mut ss) = (0.0, 0.0);
        for k in 0..n - 1 {
            s += pairs[k].1;
            ss += pairs[k].1 * pairs[k].1;
            let (lo, hi) = (pairs[k].0, pairs[k + 1].0);
            if lo == hi {
                continue;
            }
            let nl = (k + 1) as f64;
            let nr = (n - k - 1) as f64;
            let mse_l = node_mse(s, ss, nl);
            let mse_r = node_mse(total_s - s, total_ss - ss, nr);
            let loss = match criterion {
                SplitCriterion::ChildMseSum => mse_l + mse_r,
                SplitCriterion::WeightedMse => (nl * mse_l + nr * mse_r) / n as f64,
            };
            let threshold = midpoint(lo, hi);
            let better = best.is_none_or(|b| {
                loss < b.loss || (loss == b.loss && (feature, threshold) < (b.feature, b.threshold))
            });
            if better {
                best = Some(SplitCandidate {
                    feature,
                    threshold,
                    loss,
                });
            }
        }
    }
    best
}

fn node_mse(s: f64, ss: f64, n: f64) -> f64 {
    (ss / n - (s / n) * (s / n)).max(0.0)
}

fn midpoint(lo: f64, hi: f64) -> f64 {
    let mid = lo + (hi - lo) / 2.0;
    if mid < hi {
        mid
    } else {
        lo
    }
}

struct TreeBuilder<'a> {
    x: &'a DMatrix<f64>,
    y: &'a [f64],
    params: &'a ForestParams,
    m: usize,
    rng: ChaCha8Rng,
    nodes: Vec<Node>,
}

impl TreeBuilder<'_> {
    fn build(mut self, rows: Vec<usize>) -> RegressionTree {
        self.grow(&rows, 0);
        RegressionTree {
            nodes: self.nodes,
            n_features: self.x.ncols(),
        }
    }

    fn grow(&mut self, rows: &[usize], depth: usize) -> usize {
        let id = self.nodes.len();
        let values: Vec<f64> = rows.iter().map(|&r| self.y[r]).collect();
        let leaf_value = numeric::mean(&values);
        self.nodes.push(Node::Leaf { value: leaf_value });

        if depth >= self.params.max_depth || rows.len() < self.params.min_samples_split {
            return id;
        }
        let p = self.x.ncols();
        let mut features = if self.m == p {
            (0..p).collect()
        } else {
            index::sample(&mut self.rng, p, self.m).into_vec()
        };
        features.sort_unstable();

        let centre = leaf_value;
        let parent_mse = numeric::mean(
            &values
                .iter()
                .map(|v| (v - centre) * (v - centre))
                .collect::<Vec<_>>(),
        );
        let Some(split) = best_split(self.x, self.y, rows, &features, self.params.criterion) else {
            return id;
        };
        if !(parent_mse > 0.0 && split.loss < parent_mse) {
            return id;
        }

        let (left_rows, right_rows): (Vec<usize>, Vec<usize>) = rows
            .iter()
            .partition(|&&r| self.x[(r, split.feature)] <= split.threshold);
        let left = self.grow(&left_rows, depth + 1);
        let right = self.grow(&right_rows, depth + 1);
        self.nodes[id] = Node::Split {
            feature: split.feature,
            threshold: split.threshold,
            left,
            right,
        };
        id
    }
}
