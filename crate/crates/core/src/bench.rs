//! Baseline models and summaries of training runs.

use serde::{Deserialize, Serialize};

use crate::agent::EpisodeSummary;
use crate::corrgraph::CorrelationGraph;
use crate::data::Dataset;
use crate::learner::{auc, fit_logistic, roc_points, FittedModel, ForestConfig, LearnerConfig};
use crate::reward::{RewardConfig, RewardModel};
use crate::{Error, Result};

pub const LOGISTIC_ALL: &str = "logistic_all";
pub const FOREST_ALL: &str = "forest_all";
pub const FOREST_NO_SENSITIVE: &str = "forest_no_sensitive";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BaselineResult {
    pub model: String,
    pub auc: f64,
    pub roc: Vec<(f64, f64)>,
    pub bias_total: f64,
    pub features: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchConfig {
    pub forest: ForestConfig,
    pub logistic_lr: f64,
    pub logistic_epochs: usize,
}

impl Default for BenchConfig {
    fn default() -> Self {
        BenchConfig {
            forest: ForestConfig::default(),
            logistic_lr: 0.1,
            logistic_epochs: 500,
        }
    }
}

/// Scores an already fitted model on `valid` and audits its feature set.
pub fn score_model(
    name: &str,
    fitted: &FittedModel,
    valid: &Dataset,
    model: &RewardModel,
    graph: &CorrelationGraph,
) -> Result<BaselineResult> {
    let scores = fitted.predict_dataset(valid)?;
    let cols = &fitted.feature_indices;
    Ok(BaselineResult {
        model: name.to_string(),
        auc: auc(&scores, valid.labels())?,
        roc: roc_points(&scores, valid.labels())?,
        bias_total: model.bias_score(cols, graph)?.total,
        features: cols.iter().map(|&j| valid.names()[j].clone()).collect(),
    })
}

/// Fits a learner on `cols` and scores it like a baseline.
pub fn evaluate_subset(
    name: &str,
    train: &Dataset,
    valid: &Dataset,
    cols: &[usize],
    learner: &LearnerConfig,
    model: &RewardModel,
    graph: &CorrelationGraph,
) -> Result<BaselineResult> {
    let fitted = learner.fit(train, None, cols)?;
    score_model(name, &fitted, valid, model, graph)
}

/// Logistic regression and a forest on all features, plus a forest with the
/// sensitive features dropped.
pub fn run_baselines(
    train: &Dataset,
    valid: &Dataset,
    cfg: &RewardConfig,
    graph: &CorrelationGraph,
    bench: &BenchConfig,
) -> Result<Vec<BaselineResult>> {
    let model = cfg.resolve(train.names())?;
    let all: Vec<usize> = (0..train.n_features()).collect();
    let kept: Vec<usize> = all.iter().copied().filter(|&j| !model.is_sensitive(j)).collect();
    if kept.is_empty() {
        return Err(Error::invalid("every feature is sensitive; nothing left for the exclusion baseline"));
    }
    let forest = LearnerConfig::Forest(bench.forest.clone());
    let logistic = fit_logistic(train, &all, bench.logistic_lr, bench.logistic_epochs)?;
    Ok(vec![
        score_model(LOGISTIC_ALL, &logistic, valid, &model, graph)?,
        evaluate_subset(FOREST_ALL, train, valid, &all, &forest, &model, graph)?,
        evaluate_subset(FOREST_NO_SENSITIVE, train, valid, &kept, &forest, &model, graph)?,
    ])
}

/// Trailing mean over the last `min(window, i + 1)` values.
pub fn moving_average(series: &[f64], window: usize) -> Result<Vec<f64>> {
    if series.is_empty() {
        return Err(Error::Shape("moving average of an empty series".into()));
    }
    if window < 1 {
        return Err(Error::invalid("window must be >= 1"));
    }
    let mut out = Vec::with_capacity(series.len());
    let mut sum = 0.0;
    for i in 0..series.len() {
        sum += series[i];
        if i >= window {
            sum -= series[i - window];
        }
        let n = (i + 1).min(window);
        out.push(if n == 1 { series[i] } else { sum / n as f64 });
    }
    Ok(out)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Histogram2d {
    /// `reward_edges.len() == counts.len() + 1`
    pub reward_edges: Vec<f64>,
    pub feature_edges: Vec<f64>,
    /// `counts[reward_bin][feature_bin]`
    pub counts: Vec<Vec<usize>>,
}

fn edges(min: f64, max: f64, bins: usize) -> Vec<f64> {
    let width = (max - min) / bins as f64;
    (0..=bins).map(|i| if i == bins { max } else { min + width * i as f64 }).collect()
}

fn bin_of(x: f64, min: f64, max: f64, bins: usize) -> usize {
    if max <= min {
        return 0;
    }
    let b = ((x - min) / (max - min) * bins as f64).floor() as usize;
    b.min(bins - 1)
}

/// Episode total reward against final subset size, equal-width bins over the
/// observed range of each axis. The top edge is inclusive.
pub fn reward_feature_histogram(logs: &[EpisodeSummary], reward_bins: usize, feature_bins: usize) -> Result<Histogram2d> {
    if logs.is_empty() {
        return Err(Error::Shape("histogram needs at least one episode".into()));
    }
    if reward_bins < 1 || feature_bins < 1 {
        return Err(Error::invalid("bin counts must be >= 1"));
    }
    let rewards: Vec<f64> = logs.iter().map(|l| l.total).collect();
    let sizes: Vec<f64> = logs.iter().map(|l| l.final_size as f64).collect();
    let range = |v: &[f64]| v.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &x| (lo.min(x), hi.max(x)));
    let (r_lo, r_hi) = range(&rewards);
    let (f_lo, f_hi) = range(&sizes);
    let mut counts = vec![vec![0usize; feature_bins]; reward_bins];
    for (r, f) in rewards.iter().zip(&sizes) {
        counts[bin_of(*r, r_lo, r_hi, reward_bins)][bin_of(*f, f_lo, f_hi, feature_bins)] += 1;
    }
    Ok(Histogram2d {
        reward_edges: edges(r_lo, r_hi, reward_bins),
        feature_edges: edges(f_lo, f_hi, feature_bins),
        counts,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PhaseStats {
    pub first_episode: usize,
    pub n_episodes: usize,
    pub mean_reward: f64,
    pub mean_subset_size: f64,
    pub mean_indirect: f64,
}

/// Splits the run into `phases` contiguous blocks; sizes differ by at most one
/// with the larger blocks first.
pub fn phase_summary(logs: &[EpisodeSummary], phases: usize) -> Result<Vec<PhaseStats>> {
    if phases < 1 {
        return Err(Error::invalid("phases must be >= 1"));
    }
    if logs.len() < phases {
        return Err(Error::Shape(format!("{} episodes cannot fill {phases} phases", logs.len())));
    }
    let base = logs.len() / phases;
    let extra = logs.len() % phases;
    let mut out = Vec::with_capacity(phases);
    let mut start = 0;
    for p in 0..phases {
        let len = base + usize::from(p < extra);
        let block = &logs[start..start + len];
        let mean = |f: &dyn Fn(&EpisodeSummary) -> f64| block.iter().map(f).sum::<f64>() / len as f64;
        out.push(PhaseStats {
            first_episode: start,
            n_episodes: len,
            mean_reward: mean(&|l| l.total),
            mean_subset_size: mean(&|l| l.final_size as f64),
            mean_indirect: mean(&|l| l.indirect),
        });
        start += len;
    }
    Ok(out)
}
