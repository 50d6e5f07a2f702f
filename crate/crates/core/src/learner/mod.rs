//! From-scratch base learners used as the black-box reward evaluator and as
//! baselines: CART trees, bagged random forests, logistic regression, plus
//! ranking metrics.

mod logistic;
mod metrics;
mod tree;

use serde::{Deserialize, Serialize};

use crate::data::Dataset;
use crate::{Error, Result};

pub use logistic::{fit_logistic, fit_logistic_traced, LogisticModel};
pub use metrics::{auc, roc_points, trapezoid_area};
pub use tree::{fit_forest, fit_forest_presorted, fit_tree, SortedColumns, Tree};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TreeConfig {
    pub max_depth: usize,
    pub min_samples_split: usize,
    pub seed: u64,
}

impl Default for TreeConfig {
    fn default() -> Self {
        TreeConfig {
            max_depth: 8,
            min_samples_split: 10,
            seed: 0,
        }
    }
}

impl TreeConfig {
    pub fn validate(&self) -> Result<()> {
        if self.max_depth < 1 {
            return Err(Error::invalid("max_depth must be >= 1"));
        }
        if self.min_samples_split < 2 {
            return Err(Error::invalid("min_samples_split must be >= 2"));
        }
        Ok(())
    }
}

/// Candidate features drawn (without replacement) at every split.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum MaxFeatures {
    Sqrt,
    Count(usize),
}

impl MaxFeatures {
    pub fn resolve(self, n_features: usize) -> usize {
        match self {
            MaxFeatures::Sqrt => ((n_features as f64).sqrt().floor() as usize).max(1),
            MaxFeatures::Count(c) => c.clamp(1, n_features.max(1)),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ForestConfig {
    pub n_trees: usize,
    pub max_features: MaxFeatures,
    pub bootstrap: bool,
    pub tree: TreeConfig,
    pub seed: u64,
    /// Worker threads for fitting trees; 0 or 1 fits sequentially. Results do
    /// not depend on this value.
    #[serde(default)]
    pub threads: usize,
}

impl Default for ForestConfig {
    fn default() -> Self {
        ForestConfig {
            n_trees: 25,
            max_features: MaxFeatures::Sqrt,
            bootstrap: true,
            tree: TreeConfig::default(),
            seed: 0,
            threads: 0,
        }
    }
}

impl ForestConfig {
    pub fn validate(&self) -> Result<()> {
        if self.n_trees < 1 {
            return Err(Error::invalid("n_trees must be >= 1"));
        }
        if self.max_features == MaxFeatures::Count(0) {
            return Err(Error::invalid("max_features must be >= 1"));
        }
        self.tree.validate()
    }
}

/// Which learner scores a feature subset inside the reward.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum LearnerConfig {
    Tree(TreeConfig),
    Forest(ForestConfig),
}

impl Default for LearnerConfig {
    fn default() -> Self {
        LearnerConfig::Forest(ForestConfig::default())
    }
}

impl LearnerConfig {
    pub fn validate(&self) -> Result<()> {
        match self {
            LearnerConfig::Tree(t) => t.validate(),
            LearnerConfig::Forest(f) => f.validate(),
        }
    }

    pub fn fit(&self, train: &Dataset, sorted: Option<&SortedColumns>, cols: &[usize]) -> Result<FittedModel> {
        match (self, sorted) {
            (LearnerConfig::Tree(t), _) => fit_tree(train, cols, t),
            (LearnerConfig::Forest(f), Some(s)) => fit_forest_presorted(train, s, cols, f),
            (LearnerConfig::Forest(f), None) => fit_forest(train, cols, f),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Model {
    Tree(Tree),
    Forest(Vec<Tree>),
    Logistic(LogisticModel),
}

/// A trained model together with the dataset columns it consumes.
#[derive(Debug, Clone, PartialEq)]
pub struct FittedModel {
    pub model: Model,
    pub feature_indices: Vec<usize>,
}

impl FittedModel {
    pub fn kind(&self) -> &'static str {
        match self.model {
            Model::Tree(_) => "tree",
            Model::Forest(_) => "forest",
            Model::Logistic(_) => "logistic",
        }
    }

    fn score_row(&self, row: &[f64]) -> f64 {
        match &self.model {
            Model::Tree(t) => t.predict_row(row),
            Model::Forest(trees) => {
                trees.iter().map(|t| t.predict_row(row)).sum::<f64>() / trees.len() as f64
            }
            Model::Logistic(m) => m.predict_row(row),
        }
    }

    /// Class-1 probabilities for rows laid out in `feature_indices` order.
    pub fn predict_proba(&self, rows: &[Vec<f64>]) -> Result<Vec<f64>> {
        let expected = self.feature_indices.len();
        if let Some(bad) = rows.iter().find(|r| r.len() != expected) {
            return Err(Error::ColumnMismatch {
                expected,
                got: bad.len(),
            });
        }
        Ok(rows.iter().map(|r| self.score_row(r)).collect())
    }

    /// Scores every row of a dataset sharing the training column layout.
    pub fn predict_dataset(&self, d: &Dataset) -> Result<Vec<f64>> {
        if let Some(&bad) = self.feature_indices.iter().find(|&&j| j >= d.n_features()) {
            return Err(Error::IndexOutOfRange {
                index: bad,
                len: d.n_features(),
            });
        }
        let cols: Vec<&[f64]> = self.feature_indices.iter().map(|&j| d.column(j)).collect();
        let mut row = vec![0.0; cols.len()];
        Ok((0..d.n_rows())
            .map(|i| {
                for (slot, c) in row.iter_mut().zip(&cols) {
                    *slot = c[i];
                }
                self.score_row(&row)
            })
            .collect())
    }
}

fn check_fit_inputs(train: &Dataset, cols: &[usize]) -> Result<()> {
    if cols.is_empty() {
        return Err(Error::invalid("learner needs at least one feature column"));
    }
    if train.n_rows() == 0 {
        return Err(Error::invalid("learner needs a nonempty training set"));
    }
    if let Some(&bad) = cols.iter().find(|&&j| j >= train.n_features()) {
        return Err(Error::IndexOutOfRange {
            index: bad,
            len: train.n_features(),
        });
    }
    Ok(())
}
