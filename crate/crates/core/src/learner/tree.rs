//! CART with Gini impurity, grown level by level over presorted columns.
//!
//! Each level makes one pass per feature through that feature's global sort
//! order, routing every row to the accumulator of the open node it currently
//! sits in. A level therefore costs O(n * k) regardless of how many nodes are
//! open. Bootstrap resamples are represented as per-row multiplicities, which
//! is equivalent to duplicating rows.

use rand::Rng as _;
use rayon::prelude::*;

use super::{check_fit_inputs, FittedModel, ForestConfig, Model, TreeConfig};
use crate::data::Dataset;
use crate::rng::{child_seed, seeded, Rng};
use crate::{Error, Result};


#[derive(Debug, Clone, PartialEq)]
enum Node {
    Leaf(f64),
    Split {
        feature: usize,
        threshold: f64,
        left: usize,
        right: usize,
    },
}

/// A fitted tree. Feature indices are positions in the model's own column list.
#[derive(Debug, Clone, PartialEq)]
pub struct Tree {
    nodes: Vec<Node>,
}

impl Tree {
    pub fn predict_row(&self, row: &[f64]) -> f64 {
        let mut at = 0;
        loop {
            match self.nodes[at] {
                Node::Leaf(p) => return p,
                Node::Split {
                    feature,
                    threshold,
                    left,
                    right,
                } => at = if row[feature] <= threshold { left } else { right },
            }
        }
    }

    pub fn n_leaves(&self) -> usize {
        self.nodes.iter().filter(|n| matches!(n, Node::Leaf(_))).count()
    }

    pub fn depth(&self) -> usize {
        fn walk(nodes: &[Node], at: usize) -> usize {
            match nodes[at] {
                Node::Leaf(_) => 0,
                Node::Split { left, right, .. } => 1 + walk(nodes, left).max(walk(nodes, right)),
            }
        }
        walk(&self.nodes, 0)
    }
}

/// Row order of every column sorted by value (ties by row index). Computed
/// once per training set and shared by every fit on it.
#[derive(Debug, Clone)]
pub struct SortedColumns {
    orders: Vec<Vec<u32>>,
}

impl SortedColumns {
    pub fn new(d: &Dataset) -> Self {
        SortedColumns {
            orders: (0..d.n_features()).map(|j| sort_order(d.column(j))).collect(),
        }
    }

    fn order(&self, j: usize) -> &[u32] {
        &self.orders[j]
    }
}

fn sort_order(col: &[f64]) -> Vec<u32> {
    let mut idx: Vec<u32> = (0..col.len() as u32).collect();
    idx.sort_by(|&a, &b| col[a as usize].total_cmp(&col[b as usize]).then(a.cmp(&b)));
    idx
}

struct OpenNode {
    node: usize,
    depth: usize,
    weight: u64,
    positives: u64,
    /// Segment of every per-feature row order holding this node's rows.
    start: usize,
    end: usize,
}

#[derive(Clone, Copy)]
struct Best {
    /// `lp²/lw + rp²/rw`; maximizing it minimizes the weighted Gini impurity
    /// of the children.
    purity: f64,
    feature: usize,
    threshold: f64,
    left_weight: u64,
    left_positives: u64,
}

/// One row of a feature's sorted order. `wl` packs `weight << 1 | label`.
#[derive(Clone, Copy)]
struct Entry {
    value: f64,
    row: u32,
    wl: u32,
}

fn midpoint(lo: f64, hi: f64) -> f64 {
    let mid = lo + (hi - lo) / 2.0;
    if mid < hi {
        mid
    } else {
        lo
    }
}

struct Grower<'a> {
    cols: Vec<&'a [f64]>,
    orders: Vec<&'a [u32]>,
    labels: &'a [u8],
    cfg: &'a TreeConfig,
    max_features: usize,
}

impl Grower<'_> {
    fn best_split(&self, o: &OpenNode, f: usize, seg: &[Entry], recip: &[f64], best: &mut Option<Best>) {
        let (mut lw, mut lp) = (0u64, 0u64);
        let mut last = seg[0].value;
        for e in seg {
            if e.value > last {
                let (rw, rp) = (o.weight - lw, o.positives - lp);
                let (lpf, rpf) = (lp as f64, rp as f64);
                let purity = lpf * lpf * recip[lw as usize] + rpf * rpf * recip[rw as usize];
                if best.map_or(true, |b| purity > b.purity) {
                    *best = Some(Best {
                        purity,
                        feature: f,
                        threshold: midpoint(last, e.value),
                        left_weight: lw,
                        left_positives: lp,
                    });
                }
            }
            let w = (e.wl >> 1) as u64;
            lw += w;
            lp += w * (e.wl & 1) as u64;
            last = e.value;
        }
    }

    fn grow(&self, weights: &[u32], rng: &mut Rng) -> Tree {
        let k = self.cols.len();
        // Per-feature sorted entries restricted to rows with positive weight.
        let mut idx: Vec<Vec<Entry>> = self
            .orders
            .iter()
            .zip(&self.cols)
            .map(|(order, col)| {
                order
                    .iter()
                    .filter(|&&r| weights[r as usize] > 0)
                    .map(|&r| Entry {
                        value: col[r as usize],
                        row: r,
                        wl: weights[r as usize] << 1 | self.labels[r as usize] as u32,
                    })
                    .collect()
            })
            .collect();
        let n_live = idx[0].len();
        let (weight, positives) = weights
            .iter()
            .zip(self.labels)
            .fold((0u64, 0u64), |(w, p), (&wt, &y)| (w + wt as u64, p + wt as u64 * y as u64));
        let recip: Vec<f64> = (0..=weight).map(|w| if w == 0 { 0.0 } else { 1.0 / w as f64 }).collect();

        let mut nodes = vec![Node::Leaf(0.0)];
        let mut open = vec![OpenNode {
            node: 0,
            depth: 0,
            weight,
            positives,
            start: 0,
            end: n_live,
        }];
        let mut goes_left = vec![false; weights.len()];
        let mut scratch: Vec<Entry> = Vec::with_capacity(n_live);
        let all_features: Vec<usize> = (0..k).collect();

        while !open.is_empty() {
            let mut active = Vec::with_capacity(open.len());
            for o in open {
                let pure = o.positives == 0 || o.positives == o.weight;
                if pure || o.depth >= self.cfg.max_depth || o.weight < self.cfg.min_samples_split as u64 {
                    nodes[o.node] = Node::Leaf(leaf_value(&o));
                } else {
                    active.push(o);
                }
            }
            if active.is_empty() {
                break;
            }

            let mut next = Vec::with_capacity(2 * active.len());
            for o in &active {
                let features = if self.max_features < k {
                    sample_candidates(k, self.max_features, rng)
                } else {
                    all_features.clone()
                };
                let mut best = None;
                for &f in &features {
                    self.best_split(o, f, &idx[f][o.start..o.end], &recip, &mut best);
                }
                let Some(b) = best else {
                    nodes[o.node] = Node::Leaf(leaf_value(o));
                    continue;
                };

                let mut n_left = 0;
                for e in &idx[b.feature][o.start..o.end] {
                    let l = e.value <= b.threshold;
                    goes_left[e.row as usize] = l;
                    n_left += usize::from(l);
                }
                let splittable = |w: u64, p: u64| {
                    o.depth + 1 < self.cfg.max_depth
                        && w >= self.cfg.min_samples_split as u64
                        && p != 0
                        && p != w
                };
                let needs_rows = splittable(b.left_weight, b.left_positives)
                    || splittable(o.weight - b.left_weight, o.positives - b.left_positives);
                for order in idx.iter_mut().filter(|_| needs_rows) {
                    let seg = &mut order[o.start..o.end];
                    scratch.clear();
                    let mut l = 0;
                    for i in 0..seg.len() {
                        let e = seg[i];
                        if goes_left[e.row as usize] {
                            seg[l] = e;
                            l += 1;
                        } else {
                            scratch.push(e);
                        }
                    }
                    seg[l..].copy_from_slice(&scratch);
                }

                let left = nodes.len();
                nodes.push(Node::Leaf(0.0));
                nodes.push(Node::Leaf(0.0));
                nodes[o.node] = Node::Split {
                    feature: b.feature,
                    threshold: b.threshold,
                    left,
                    right: left + 1,
                };
                let mid = o.start + n_left;
                next.push(OpenNode {
                    node: left,
                    depth: o.depth + 1,
                    weight: b.left_weight,
                    positives: b.left_positives,
                    start: o.start,
                    end: mid,
                });
                next.push(OpenNode {
                    node: left + 1,
                    depth: o.depth + 1,
                    weight: o.weight - b.left_weight,
                    positives: o.positives - b.left_positives,
                    start: mid,
                    end: o.end,
                });
            }
            open = next;
        }
        Tree { nodes }
    }
}

fn leaf_value(o: &OpenNode) -> f64 {
    if o.weight == 0 {
        0.0
    } else {
        o.positives as f64 / o.weight as f64
    }
}

/// Partial Fisher-Yates draw of `m` of `k` feature positions, returned in
/// ascending order so ties resolve to the lowest feature.
fn sample_candidates(k: usize, m: usize, rng: &mut Rng) -> Vec<usize> {
    let mut pool: Vec<usize> = (0..k).collect();
    for i in 0..m {
        let j = rng.gen_range(i..k);
        pool.swap(i, j);
    }
    pool.truncate(m);
    pool.sort_unstable();
    pool
}

fn grower<'a>(
    train: &'a Dataset,
    sorted: &'a SortedColumns,
    cols: &[usize],
    cfg: &'a TreeConfig,
    max_features: usize,
) -> Grower<'a> {
    Grower {
        cols: cols.iter().map(|&j| train.column(j)).collect(),
        orders: cols.iter().map(|&j| sorted.order(j)).collect(),
        labels: train.labels(),
        cfg,
        max_features,
    }
}

/// Single CART tree over `cols`, considering every column at every split.
pub fn fit_tree(train: &Dataset, cols: &[usize], cfg: &TreeConfig) -> Result<FittedModel> {
    check_fit_inputs(train, cols)?;
    cfg.validate()?;
    let sorted = SortedColumns {
        orders: (0..train.n_features())
            .map(|j| if cols.contains(&j) { sort_order(train.column(j)) } else { Vec::new() })
            .collect(),
    };
    let g = grower(train, &sorted, cols, cfg, cols.len());
    let tree = g.grow(&vec![1; train.n_rows()], &mut seeded(cfg.seed));
    Ok(FittedModel {
        model: Model::Tree(tree),
        feature_indices: cols.to_vec(),
    })
}

pub fn fit_forest(train: &Dataset, cols: &[usize], cfg: &ForestConfig) -> Result<FittedModel> {
    check_fit_inputs(train, cols)?;
    let sorted = SortedColumns {
        orders: (0..train.n_features())
            .map(|j| if cols.contains(&j) { sort_order(train.column(j)) } else { Vec::new() })
            .collect(),
    };
    fit_forest_presorted(train, &sorted, cols, cfg)
}

/// Bagged forest reusing precomputed sort orders of `train`. Tree `i` draws
/// from its own RNG seeded by mixing `cfg.seed` with `i`, so the result is
/// independent of `cfg.threads`.
pub fn fit_forest_presorted(
    train: &Dataset,
    sorted: &SortedColumns,
    cols: &[usize],
    cfg: &ForestConfig,
) -> Result<FittedModel> {
    check_fit_inputs(train, cols)?;
    cfg.validate()?;
    if sorted.orders.len() != train.n_features() {
        return Err(Error::ColumnMismatch {
            expected: train.n_features(),
            got: sorted.orders.len(),
        });
    }
    let n = train.n_rows();
    let g = grower(train, sorted, cols, &cfg.tree, cfg.max_features.resolve(cols.len()));
    let fit_one = |i: usize| {
        let mut rng = seeded(child_seed(cfg.seed, i as u64));
        let weights = if cfg.bootstrap {
            let mut w = vec![0u32; n];
            for _ in 0..n {
                w[rng.gen_range(0..n)] += 1;
            }
            w
        } else {
            vec![1; n]
        };
        g.grow(&weights, &mut rng)
    };
    let trees: Vec<Tree> = if cfg.threads > 1 {
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(cfg.threads)
            .build()
            .map_err(|e| Error::invalid(format!("thread pool: {e}")))?;
        pool.install(|| (0..cfg.n_trees).into_par_iter().map(fit_one).collect())
    } else {
        (0..cfg.n_trees).map(fit_one).collect()
    };
    Ok(FittedModel {
        model: Model::Forest(trees),
        feature_indices: cols.to_vec(),
    })
}
