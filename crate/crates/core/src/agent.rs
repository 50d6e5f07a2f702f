//! REINFORCE training loop over the feature-subset MDP.

use rand::Rng as _;
use serde::{Deserialize, Serialize};

use crate::corrgraph::CorrelationGraph;
use crate::data::Dataset;
use crate::env::{self, Action, EnvState};
use crate::learner::LearnerConfig;
use crate::policy::{self, init_params, Optimizer, OptimizerKind, PolicyParams, StepCache, DEFAULT_HIDDEN};
use crate::reward::{RewardBreakdown, RewardConfig, RewardEvaluator};
use crate::rng::{child_seed, seeded, Rng};
use crate::{Error, Result};

const STREAM_INIT: u64 = 1;
const STREAM_ACTIONS: u64 = 2;
const STREAM_BASELINE: u64 = 3;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub enum StartMode {
    #[default]
    Empty,
    /// Each feature starts selected with probability 1/2.
    Random,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub enum RewardMode {
    /// Composite reward after every transition.
    #[default]
    PerStep,
    /// Only the final subset of an episode is scored; earlier steps get 0.
    Terminal,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainConfig {
    pub episodes: usize,
    pub steps_per_episode: usize,
    pub learning_rate: f64,
    pub discount: f64,
    pub seed: u64,
    pub normalize_returns: bool,
    pub hidden_size: usize,
    pub optimizer: OptimizerKind,
    pub start: StartMode,
    pub reward_mode: RewardMode,
    pub reward: RewardConfig,
    pub learner: LearnerConfig,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            episodes: 1000,
            steps_per_episode: 25,
            learning_rate: 0.01,
            discount: 0.99,
            seed: 0,
            normalize_returns: true,
            hidden_size: DEFAULT_HIDDEN,
            optimizer: OptimizerKind::Adam,
            start: StartMode::Empty,
            reward_mode: RewardMode::PerStep,
            reward: RewardConfig::default(),
            learner: LearnerConfig::default(),
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        if self.episodes < 1 {
            return Err(Error::invalid("episodes must be >= 1"));
        }
        if self.steps_per_episode < 1 {
            return Err(Error::invalid("steps_per_episode must be >= 1"));
        }
        if !(self.learning_rate > 0.0 && self.learning_rate.is_finite()) {
            return Err(Error::invalid(format!("learning_rate must be > 0, got {}", self.learning_rate)));
        }
        if !(0.0..=1.0).contains(&self.discount) {
            return Err(Error::invalid(format!("discount must lie in [0,1], got {}", self.discount)));
        }
        if self.hidden_size < 1 {
            return Err(Error::invalid("hidden_size must be >= 1"));
        }
        self.learner.validate()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpisodeLog {
    pub episode: usize,
    pub steps: Vec<RewardBreakdown>,
    /// Subset size after each step.
    pub subset_sizes: Vec<usize>,
    pub total: f64,
    pub best_step_auc: f64,
    /// Highest reward among scored steps with a non-empty subset, and that
    /// subset (earliest step on ties). Falls back to the empty subset only
    /// when no scored step selected anything.
    pub best_step_reward: f64,
    pub best_step_subset: Vec<usize>,
    pub final_subset: Vec<usize>,
}

impl EpisodeLog {
    pub fn final_size(&self) -> usize {
        self.final_subset.len()
    }

    pub fn indirect_total(&self) -> f64 {
        self.steps.iter().map(|s| s.indirect).sum()
    }

    pub fn summary(&self) -> EpisodeSummary {
        EpisodeSummary {
            total: self.total,
            final_size: self.final_size(),
            indirect: self.indirect_total(),
        }
    }
}

/// The per-episode quantities the analysis helpers need.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EpisodeSummary {
    pub total: f64,
    pub final_size: usize,
    /// Indirect penalty summed over the episode's steps.
    pub indirect: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainingReport {
    pub logs: Vec<EpisodeLog>,
    pub best_episode: usize,
    pub best_total_reward: f64,
    pub best_auc: f64,
    /// The highest-reward subset reached by the policy during training.
    pub best_subset: Vec<String>,
    pub best_subset_indices: Vec<usize>,
    pub best_subset_reward: f64,
    /// Per-episode totals of a uniform-random-action run of equal length.
    pub random_baseline: Vec<f64>,
}

/// A finished run: the report plus the final policy.
#[derive(Debug, Clone)]
pub struct TrainOutcome {
    pub report: TrainingReport,
    pub params: PolicyParams,
    pub optimizer_steps: u64,
    /// Distinct subsets for which a learner was fitted.
    pub learner_fits: usize,
}

/// `G_t = r_t + γ G_{t+1}`, computed backwards.
pub fn discounted_returns(rewards: &[f64], gamma: f64) -> Vec<f64> {
    let mut out = vec![0.0; rewards.len()];
    let mut running = 0.0;
    for t in (0..rewards.len()).rev() {
        running = rewards[t] + gamma * running;
        out[t] = running;
    }
    out
}

/// Standardizes returns; a spread below 1e-8 is clamped so constant returns
/// become zeros.
pub fn normalize(returns: &[f64]) -> Vec<f64> {
    let n = returns.len() as f64;
    let mean = returns.iter().sum::<f64>() / n;
    let var = returns.iter().map(|g| (g - mean) * (g - mean)).sum::<f64>() / n;
    let std = var.sqrt().max(1e-8);
    returns.iter().map(|g| (g - mean) / std).collect()
}

fn start_state(d: usize, mode: StartMode, rng: &mut Rng) -> Result<EnvState> {
    match mode {
        StartMode::Empty => env::reset(d),
        StartMode::Random => Ok(EnvState::from_selection((0..d).map(|_| rng.gen::<bool>()).collect())),
    }
}

fn rollout<F>(
    evaluator: &mut RewardEvaluator<'_>,
    cfg: &TrainConfig,
    episode: usize,
    rng: &mut Rng,
    mut choose: F,
) -> Result<(Vec<StepCache>, EpisodeLog)>
where
    F: FnMut(&EnvState, &mut Rng) -> Result<(Action, Option<StepCache>)>,
{
    let d = evaluator.n_features();
    let t_max = cfg.steps_per_episode;
    let mut state = start_state(d, cfg.start, rng)?;
    let mut caches = Vec::with_capacity(t_max);
    let mut steps = Vec::with_capacity(t_max);
    let mut sizes = Vec::with_capacity(t_max);
    let mut best_step: Option<(f64, Vec<usize>)> = None;
    for t in 0..t_max {
        let (action, cache) = choose(&state, rng)?;
        caches.extend(cache);
        state = env::step(&state, action)?;
        let scored = cfg.reward_mode == RewardMode::PerStep || t + 1 == t_max;
        let r = if scored {
            let subset = state.subset();
            let r = evaluator
                .evaluate_subset(&subset)
                .map_err(|e| e.context(format!("episode {episode}, step {t}")))?;
            if best_step.as_ref().map_or(true, |(b, s)| beats(r.total, &subset, *b, s)) {
                best_step = Some((r.total, subset));
            }
            r
        } else {
            RewardBreakdown::default()
        };
        steps.push(r);
        sizes.push(state.subset_size());
    }
    let total = steps.iter().map(|s| s.total).sum();
    let best_step_auc = steps.iter().map(|s| s.auc).fold(0.0, f64::max);
    let (best_step_reward, best_step_subset) = best_step.expect("the last step is always scored");
    Ok((
        caches,
        EpisodeLog {
            episode,
            steps,
            subset_sizes: sizes,
            total,
            best_step_auc,
            best_step_reward,
            best_step_subset,
            final_subset: state.subset(),
        },
    ))
}

/// Non-empty subsets outrank the empty one; otherwise higher reward wins.
fn beats(reward: f64, subset: &[usize], best_reward: f64, best_subset: &[usize]) -> bool {
    match (subset.is_empty(), best_subset.is_empty()) {
        (false, true) => true,
        (true, false) => false,
        _ => reward > best_reward,
    }
}

/// Rolls out `cfg.steps_per_episode` policy-sampled steps, scoring the subset
/// reached after each one.
pub fn run_episode(
    evaluator: &mut RewardEvaluator<'_>,
    params: &PolicyParams,
    cfg: &TrainConfig,
    episode: usize,
    rng: &mut Rng,
) -> Result<(Vec<StepCache>, EpisodeLog)> {
    rollout(evaluator, cfg, episode, rng, |state, rng| {
        let act = policy::forward(params, state)?;
        let (a, _) = policy::sample_action(&act.probs, rng);
        Ok((Action(a), Some(StepCache::new(act, a))))
    })
}

fn run_random_episode(
    evaluator: &mut RewardEvaluator<'_>,
    cfg: &TrainConfig,
    episode: usize,
    rng: &mut Rng,
) -> Result<EpisodeLog> {
    let n_actions = 2 * evaluator.n_features();
    rollout(evaluator, cfg, episode, rng, |_, rng| Ok((Action(rng.gen_range(0..n_actions)), None))).map(|(_, log)| log)
}

/// One optimizer step on `-Σ G_t log π(a_t|s_t)`. Consumes the trajectory.
/// When every (normalized) return is zero the gradient vanishes and the step
/// is skipped, so optimizer momentum cannot move the parameters.
pub fn update_policy(
    params: &mut PolicyParams,
    optimizer: &mut Optimizer,
    trajectory: Vec<StepCache>,
    returns: &[f64],
    cfg: &TrainConfig,
) -> Result<()> {
    if trajectory.len() != returns.len() {
        return Err(Error::Shape(format!(
            "{} trajectory steps vs {} returns",
            trajectory.len(),
            returns.len()
        )));
    }
    let coeffs = if cfg.normalize_returns {
        normalize(returns)
    } else {
        returns.to_vec()
    };
    if coeffs.iter().all(|&g| g == 0.0) {
        return Ok(());
    }
    let grads = policy::policy_gradient(params, &trajectory, &coeffs)?;
    optimizer.step(params, &grads, cfg.learning_rate)
}

/// Trains from scratch, then runs the random-action baseline.
pub fn train(
    train_set: &Dataset,
    valid_set: &Dataset,
    graph: &CorrelationGraph,
    cfg: &TrainConfig,
) -> Result<TrainOutcome> {
    train_with(train_set, valid_set, graph, cfg, |_| {})
}

/// [`train`] with a callback invoked after each policy episode.
pub fn train_with<F: FnMut(&EpisodeLog)>(
    train_set: &Dataset,
    valid_set: &Dataset,
    graph: &CorrelationGraph,
    cfg: &TrainConfig,
    mut on_episode: F,
) -> Result<TrainOutcome> {
    cfg.validate()?;
    let mut evaluator = RewardEvaluator::new(train_set, valid_set, cfg.learner.clone(), &cfg.reward, graph)?;
    let d = evaluator.n_features();
    let mut params = init_params(d, cfg.hidden_size, child_seed(cfg.seed, STREAM_INIT))?;
    let mut optimizer = Optimizer::new(cfg.optimizer, d, cfg.hidden_size);
    let mut rng = seeded(child_seed(cfg.seed, STREAM_ACTIONS));

    let mut logs = Vec::with_capacity(cfg.episodes);
    for episode in 0..cfg.episodes {
        let (trajectory, log) = run_episode(&mut evaluator, &params, cfg, episode, &mut rng)?;
        let rewards: Vec<f64> = log.steps.iter().map(|s| s.total).collect();
        let returns = discounted_returns(&rewards, cfg.discount);
        update_policy(&mut params, &mut optimizer, trajectory, &returns, cfg)
            .map_err(|e| e.context(format!("policy update after episode {episode}")))?;
        on_episode(&log);
        logs.push(log);
    }

    let mut baseline_rng = seeded(child_seed(cfg.seed, STREAM_BASELINE));
    let random_baseline = (0..cfg.episodes)
        .map(|episode| run_random_episode(&mut evaluator, cfg, episode, &mut baseline_rng).map(|l| l.total))
        .collect::<Result<Vec<f64>>>()?;

    let (mut best, mut best_state) = (0, 0);
    for (i, log) in logs.iter().enumerate() {
        if log.total > logs[best].total {
            best = i;
        }
        let b = &logs[best_state];
        if beats(log.best_step_reward, &log.best_step_subset, b.best_step_reward, &b.best_step_subset) {
            best_state = i;
        }
    }
    let best_auc = logs.iter().map(|l| l.best_step_auc).fold(0.0, f64::max);
    let best_subset_indices = logs[best_state].best_step_subset.clone();
    let report = TrainingReport {
        best_episode: best,
        best_total_reward: logs[best].total,
        best_auc,
        best_subset: best_subset_indices.iter().map(|&j| train_set.names()[j].clone()).collect(),
        best_subset_indices,
        best_subset_reward: logs[best_state].best_step_reward,
        random_baseline,
        logs,
    };
    Ok(TrainOutcome {
        report,
        optimizer_steps: optimizer.steps(),
        learner_fits: evaluator.fits(),
        params,
    })
}

/// Samples `rollouts` episodes from a trained policy and returns the visited
/// subset with the highest composite reward (ties: earliest). Under terminal
/// scoring only final subsets compete.
pub fn select_subset(
    evaluator: &mut RewardEvaluator<'_>,
    params: &PolicyParams,
    cfg: &TrainConfig,
    rollouts: usize,
) -> Result<(Vec<usize>, RewardBreakdown)> {
    if params.d != evaluator.n_features() {
        return Err(Error::ColumnMismatch {
            expected: evaluator.n_features(),
            got: params.d,
        });
    }
    let mut rng = seeded(child_seed(cfg.seed, STREAM_ACTIONS));
    let mut best: Option<EpisodeLog> = None;
    for i in 0..rollouts.max(1) {
        let (_, log) = run_episode(evaluator, params, cfg, i, &mut rng)?;
        if best
            .as_ref()
            .map_or(true, |b| beats(log.best_step_reward, &log.best_step_subset, b.best_step_reward, &b.best_step_subset))
        {
            best = Some(log);
        }
    }
    let subset = best.expect("at least one rollout").best_step_subset;
    let r = evaluator.evaluate_subset(&subset)?;
    Ok((subset, r))
}
