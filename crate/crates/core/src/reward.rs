//! Composite reward for a feature subset and the bias-score audit.
//!
//! ```text
//! total = auc - direct - indirect - size + shaped
//! ```
//!
//! Every penalty is reported as a non-negative magnitude and subtracted.

use std::collections::{HashMap, HashSet};

use serde::{Deserialize, Serialize};

use crate::corrgraph::{CorrelationGraph, DistanceMode, DEFAULT_THRESHOLD};
use crate::data::Dataset;
use crate::learner::{auc, LearnerConfig, SortedColumns};
use crate::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RewardConfig {
    /// Direct penalty per selected sensitive feature.
    pub psi: f64,
    /// Scale of the indirect (proxy) penalty.
    pub lambda: f64,
    /// Bonus per selected preferred feature.
    pub rho: f64,
    /// Slope of the size penalty outside `[m_min, m_max]`.
    pub xi: f64,
    pub m_min: usize,
    pub m_max: usize,
    pub sensitive: Vec<String>,
    pub rewarded: Vec<String>,
    pub corr_threshold: f64,
    #[serde(default)]
    pub distance_mode: DistanceMode,
}

impl Default for RewardConfig {
    fn default() -> Self {
        RewardConfig {
            psi: 8.0,
            lambda: 3.0,
            rho: 0.05,
            xi: 1.0,
            m_min: 8,
            m_max: 20,
            sensitive: Vec::new(),
            rewarded: Vec::new(),
            corr_threshold: DEFAULT_THRESHOLD,
            distance_mode: DistanceMode::Signed,
        }
    }
}

impl RewardConfig {
    /// Checks the numeric invariants and that every named feature exists.
    pub fn validate(&self, names: &[String]) -> Result<()> {
        for (key, v) in [("psi", self.psi), ("lambda", self.lambda), ("rho", self.rho), ("xi", self.xi)] {
            if !(v >= 0.0 && v.is_finite()) {
                return Err(Error::invalid(format!("{key} must be a finite value >= 0, got {v}")));
            }
        }
        if self.m_min < 1 {
            return Err(Error::invalid("m_min must be >= 1"));
        }
        if self.m_min > self.m_max {
            return Err(Error::invalid(format!("m_min ({}) exceeds m_max ({})", self.m_min, self.m_max)));
        }
        if !(self.corr_threshold > 0.0 && self.corr_threshold <= 1.0) {
            return Err(Error::invalid(format!(
                "corr_threshold must lie in (0,1], got {}",
                self.corr_threshold
            )));
        }
        let sensitive: HashSet<&str> = self.sensitive.iter().map(String::as_str).collect();
        if let Some(both) = self.rewarded.iter().find(|r| sensitive.contains(r.as_str())) {
            return Err(Error::invalid(format!("`{both}` is both sensitive and rewarded")));
        }
        for name in self.sensitive.iter().chain(&self.rewarded) {
            if !names.contains(name) {
                return Err(Error::UnknownFeature(name.clone()));
            }
        }
        Ok(())
    }

    /// Binds feature names to column indices of a dataset.
    pub fn resolve(&self, names: &[String]) -> Result<RewardModel> {
        self.validate(names)?;
        let index = |n: &String| names.iter().position(|x| x == n).expect("validated above");
        let mut is_sensitive = vec![false; names.len()];
        let mut is_rewarded = vec![false; names.len()];
        let mut sensitive: Vec<usize> = self.sensitive.iter().map(index).collect();
        sensitive.sort_unstable();
        sensitive.dedup();
        for &i in &sensitive {
            is_sensitive[i] = true;
        }
        for i in self.rewarded.iter().map(index) {
            is_rewarded[i] = true;
        }
        Ok(RewardModel {
            cfg: self.clone(),
            sensitive,
            is_sensitive,
            is_rewarded,
        })
    }
}

/// `φ(k)`: `(m_min - k)·ξ` below the bounds, `(k - m_max)·ξ` above, else 0.
pub fn size_penalty(k: usize, cfg: &RewardConfig) -> f64 {
    if k < cfg.m_min {
        (cfg.m_min - k) as f64 * cfg.xi
    } else if k > cfg.m_max {
        (k - cfg.m_max) as f64 * cfg.xi
    } else {
        0.0
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct RewardBreakdown {
    pub auc: f64,
    pub direct: f64,
    pub indirect: f64,
    pub size: f64,
    pub shaped: f64,
    pub total: f64,
}

impl RewardBreakdown {
    pub fn compose(auc: f64, direct: f64, indirect: f64, size: f64, shaped: f64) -> Self {
        RewardBreakdown {
            auc,
            direct,
            indirect,
            size,
            shaped,
            total: auc - direct - indirect - size + shaped,
        }
    }

    pub fn is_consistent(&self) -> bool {
        self.total == self.auc - self.direct - self.indirect - self.size + self.shaped
    }
}

/// Per-feature bias contributions and their sum.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BiasReport {
    pub per_feature: Vec<(String, f64)>,
    pub total: f64,
}

/// A [`RewardConfig`] resolved against one dataset's columns.
#[derive(Debug, Clone, PartialEq)]
pub struct RewardModel {
    cfg: RewardConfig,
    sensitive: Vec<usize>,
    is_sensitive: Vec<bool>,
    is_rewarded: Vec<bool>,
}

impl RewardModel {
    pub fn config(&self) -> &RewardConfig {
        &self.cfg
    }

    pub fn sensitive(&self) -> &[usize] {
        &self.sensitive
    }

    pub fn is_sensitive(&self, j: usize) -> bool {
        self.is_sensitive[j]
    }

    pub fn n_features(&self) -> usize {
        self.is_sensitive.len()
    }

    fn check_subset(&self, subset: &[usize]) -> Result<()> {
        match subset.iter().find(|&&j| j >= self.n_features()) {
            Some(&j) => Err(Error::IndexOutOfRange {
                index: j,
                len: self.n_features(),
            }),
            None => Ok(()),
        }
    }

    fn check_graph(&self, g: &CorrelationGraph) -> Result<()> {
        if g.node_count() != self.n_features() {
            return Err(Error::Shape(format!(
                "graph has {} nodes, dataset has {} features",
                g.node_count(),
                self.n_features()
            )));
        }
        Ok(())
    }

    /// `ψ · |S ∩ B|`
    pub fn direct_penalty(&self, subset: &[usize]) -> f64 {
        let hits = subset.iter().filter(|&&j| self.is_sensitive[j]).count();
        self.cfg.psi * hits as f64
    }

    /// Sum over sensitive `b` and selected non-sensitive `s` connected in the
    /// graph of `|r(b, s)| · λ / dist(b, s)`.
    pub fn indirect_penalty(&self, subset: &[usize], g: &CorrelationGraph) -> Result<f64> {
        self.check_subset(subset)?;
        self.check_graph(g)?;
        let mut total = 0.0;
        for &b in &self.sensitive {
            for &s in subset.iter().filter(|&&s| !self.is_sensitive[s]) {
                if g.path_exists(b, s)? {
                    total += g.corr(b, s).abs() * self.cfg.lambda / g.euclid_distance(b, s)?;
                }
            }
        }
        Ok(total)
    }

    pub fn size_penalty(&self, k: usize) -> f64 {
        size_penalty(k, &self.cfg)
    }

    /// `ρ · |S ∩ R|`
    pub fn shaped_reward(&self, subset: &[usize]) -> f64 {
        let hits = subset.iter().filter(|&&j| self.is_rewarded[j]).count();
        self.cfg.rho * hits as f64
    }

    /// Scores each feature of `subset`: ψ if sensitive, λ over the distance to
    /// the nearest reachable sensitive feature, or 0 when none is reachable.
    pub fn bias_score(&self, subset: &[usize], g: &CorrelationGraph) -> Result<BiasReport> {
        self.check_subset(subset)?;
        self.check_graph(g)?;
        let mut per_feature = Vec::with_capacity(subset.len());
        let mut total = 0.0;
        for &v in subset {
            let score = if self.is_sensitive[v] {
                self.cfg.psi
            } else if self.sensitive.is_empty() {
                0.0
            } else {
                match g.distance_to_set(v, &self.sensitive)? {
                    Some(d) => self.cfg.lambda / d,
                    None => 0.0,
                }
            };
            total += score;
            per_feature.push((g.names()[v].clone(), score));
        }
        Ok(BiasReport { per_feature, total })
    }

    /// Every term except the learner's AUC.
    pub fn penalties(&self, subset: &[usize], g: &CorrelationGraph, auc_w: f64) -> Result<RewardBreakdown> {
        Ok(RewardBreakdown::compose(
            auc_w,
            self.direct_penalty(subset),
            self.indirect_penalty(subset, g)?,
            self.size_penalty(subset.len()),
            self.shaped_reward(subset),
        ))
    }
}

/// Fits the learner on `train[subset]`, scores `valid`, and composes the
/// reward. The empty subset scores exactly zero on every term.
pub fn composite_reward(
    subset: &[usize],
    train: &Dataset,
    valid: &Dataset,
    learner: &LearnerConfig,
    model: &RewardModel,
    g: &CorrelationGraph,
) -> Result<RewardBreakdown> {
    composite_with(subset, train, None, valid, learner, model, g)
}

fn composite_with(
    subset: &[usize],
    train: &Dataset,
    sorted: Option<&SortedColumns>,
    valid: &Dataset,
    learner: &LearnerConfig,
    model: &RewardModel,
    g: &CorrelationGraph,
) -> Result<RewardBreakdown> {
    if subset.is_empty() {
        return Ok(RewardBreakdown::default());
    }
    let fitted = learner.fit(train, sorted, subset)?;
    let w = auc(&fitted.predict_dataset(valid)?, valid.labels())?;
    model.penalties(subset, g, w)
}

/// Memoizing [`composite_reward`] over one fixed train/valid pair. Results are
/// identical to uncached evaluation; only the cost changes.
pub struct RewardEvaluator<'a> {
    train: &'a Dataset,
    valid: &'a Dataset,
    learner: LearnerConfig,
    model: RewardModel,
    graph: &'a CorrelationGraph,
    sorted: Option<SortedColumns>,
    cache: HashMap<Vec<u64>, RewardBreakdown>,
    misses: usize,
}

impl<'a> RewardEvaluator<'a> {
    pub fn new(
        train: &'a Dataset,
        valid: &'a Dataset,
        learner: LearnerConfig,
        reward: &RewardConfig,
        graph: &'a CorrelationGraph,
    ) -> Result<Self> {
        learner.validate()?;
        if train.names() != valid.names() {
            return Err(Error::Shape("train and valid columns differ".into()));
        }
        let model = reward.resolve(train.names())?;
        model.check_graph(graph)?;
        let [neg, pos] = valid.class_counts();
        if neg == 0 || pos == 0 {
            return Err(Error::SingleClass.context("validation split"));
        }
        let sorted = matches!(learner, LearnerConfig::Forest(_)).then(|| SortedColumns::new(train));
        Ok(RewardEvaluator {
            train,
            valid,
            learner,
            model,
            graph,
            sorted,
            cache: HashMap::new(),
            misses: 0,
        })
    }

    pub fn model(&self) -> &RewardModel {
        &self.model
    }

    pub fn graph(&self) -> &CorrelationGraph {
        self.graph
    }

    pub fn n_features(&self) -> usize {
        self.train.n_features()
    }

    /// Number of evaluations that required a learner fit.
    pub fn fits(&self) -> usize {
        self.misses
    }

    pub fn evaluate_subset(&mut self, subset: &[usize]) -> Result<RewardBreakdown> {
        let mut key = vec![0u64; self.n_features().div_ceil(64)];
        for &j in subset {
            if j >= self.n_features() {
                return Err(Error::IndexOutOfRange {
                    index: j,
                    len: self.n_features(),
                });
            }
            key[j / 64] |= 1 << (j % 64);
        }
        if let Some(hit) = self.cache.get(&key) {
            return Ok(*hit);
        }
        let mut sorted_subset = subset.to_vec();
        sorted_subset.sort_unstable();
        sorted_subset.dedup();
        let r = composite_with(
            &sorted_subset,
            self.train,
            self.sorted.as_ref(),
            self.valid,
            &self.learner,
            &self.model,
            self.graph,
        )?;
        self.misses += 1;
        self.cache.insert(key, r);
        Ok(r)
    }
}
