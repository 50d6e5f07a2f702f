//! Flat `key = value` run configuration.
//!
//! Blank lines and `#` comments are ignored, every key may appear at most
//! once, and unknown keys are rejected. Relative paths resolve against the
//! directory holding the config file.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use fairsel::agent::{RewardMode, StartMode, TrainConfig};
use fairsel::bench::BenchConfig;
use fairsel::corrgraph::DistanceMode;
use fairsel::data::{DEFAULT_SENTINEL, DEFAULT_VALID_FRACTION, LABEL_COLUMN};
use fairsel::learner::{ForestConfig, LearnerConfig, MaxFeatures};
use fairsel::policy::OptimizerKind;

use crate::error::{CliError, Result};

/// Every accepted key, in echo order.
pub const KEYS: &[&str] = &[
    "data",
    "target",
    "sentinel",
    "valid_fraction",
    "split_seed",
    "output_dir",
    "checkpoint",
    "rollouts",
    "features",
    "plots",
    "seed",
    "episodes",
    "steps_per_episode",
    "learning_rate",
    "discount",
    "normalize_returns",
    "hidden_size",
    "optimizer",
    "start",
    "reward_mode",
    "psi",
    "lambda",
    "rho",
    "xi",
    "m_min",
    "m_max",
    "sensitive",
    "rewarded",
    "corr_threshold",
    "distance_mode",
    "learner",
    "n_trees",
    "max_features",
    "bootstrap",
    "max_depth",
    "min_samples_split",
    "learner_seed",
    "threads",
    "logistic_lr",
    "logistic_epochs",
];

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LearnerKind {
    Forest,
    Tree,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub data: Option<PathBuf>,
    pub target: String,
    pub sentinel: f64,
    pub valid_fraction: f64,
    pub split_seed: u64,
    pub output_dir: PathBuf,
    pub checkpoint: Option<PathBuf>,
    /// Policy rollouts sampled when extracting a subset from a checkpoint.
    pub rollouts: usize,
    /// Features audited by `bias-score`; `None` audits every feature.
    pub features: Option<Vec<String>>,
    pub plots: bool,
    pub learner_kind: LearnerKind,
    pub forest: ForestConfig,
    pub train: TrainConfig,
    pub logistic_lr: f64,
    pub logistic_epochs: usize,
}

impl Default for RunConfig {
    fn default() -> Self {
        let bench = BenchConfig::default();
        let mut cfg = RunConfig {
            data: None,
            target: LABEL_COLUMN.to_string(),
            sentinel: DEFAULT_SENTINEL,
            valid_fraction: DEFAULT_VALID_FRACTION,
            split_seed: 0,
            output_dir: PathBuf::from("fairsel_out"),
            checkpoint: None,
            rollouts: 20,
            features: None,
            plots: true,
            learner_kind: LearnerKind::Forest,
            forest: ForestConfig::default(),
            train: TrainConfig::default(),
            logistic_lr: bench.logistic_lr,
            logistic_epochs: bench.logistic_epochs,
        };
        cfg.sync_learner();
        cfg
    }
}

fn parse_bool(v: &str) -> std::result::Result<bool, String> {
    match v {
        "true" => Ok(true),
        "false" => Ok(false),
        _ => Err(format!("expected true or false, got {v:?}")),
    }
}

fn parse_num<T: std::str::FromStr>(v: &str) -> std::result::Result<T, String> {
    v.parse::<T>().map_err(|_| format!("cannot parse {v:?} as a number"))
}

fn parse_list(v: &str) -> Vec<String> {
    v.split(',').map(str::trim).filter(|s| !s.is_empty()).map(String::from).collect()
}

fn resolve(base: &Path, v: &str) -> PathBuf {
    let p = PathBuf::from(v);
    if p.is_absolute() {
        p
    } else {
        base.join(p)
    }
}

impl RunConfig {
    /// Reads and validates a config file.
    pub fn from_file(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|source| CliError::Io {
            path: path.to_path_buf(),
            source,
        })?;
        let base = path.parent().unwrap_or(Path::new("."));
        Self::parse(&text, base, &path.display().to_string())
    }

    /// Parses config text. `origin` names the source in error messages.
    pub fn parse(text: &str, base: &Path, origin: &str) -> Result<Self> {
        let mut cfg = RunConfig {
            output_dir: resolve(base, "fairsel_out"),
            ..RunConfig::default()
        };
        let mut seen: BTreeMap<String, usize> = BTreeMap::new();
        for (i, raw) in text.lines().enumerate() {
            let line_no = i + 1;
            let err = |msg: String| CliError::Config {
                origin: origin.to_string(),
                line: line_no,
                msg,
            };
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| err(format!("expected `key = value`, got {line:?}")))?;
            let (key, value) = (key.trim(), value.trim());
            if !KEYS.contains(&key) {
                return Err(err(format!("unknown key {key:?}")));
            }
            if let Some(prev) = seen.insert(key.to_string(), line_no) {
                return Err(err(format!("duplicate key {key:?} (first set on line {prev})")));
            }
            cfg.set(key, value, base).map_err(|m| err(format!("{key}: {m}")))?;
        }
        cfg.sync_learner();
        cfg.validate(origin)?;
        Ok(cfg)
    }

    fn set(&mut self, key: &str, v: &str, base: &Path) -> std::result::Result<(), String> {
        let t = &mut self.train;
        let r = &mut t.reward;
        match key {
            "data" => self.data = (!v.is_empty()).then(|| resolve(base, v)),
            "target" => self.target = v.to_string(),
            "sentinel" => self.sentinel = parse_num(v)?,
            "valid_fraction" => self.valid_fraction = parse_num(v)?,
            "split_seed" => self.split_seed = parse_num(v)?,
            "output_dir" => self.output_dir = resolve(base, v),
            "checkpoint" => self.checkpoint = (!v.is_empty()).then(|| resolve(base, v)),
            "rollouts" => self.rollouts = parse_num(v)?,
            "features" => self.features = Some(parse_list(v)),
            "plots" => self.plots = parse_bool(v)?,
            "seed" => t.seed = parse_num(v)?,
            "episodes" => t.episodes = parse_num(v)?,
            "steps_per_episode" => t.steps_per_episode = parse_num(v)?,
            "learning_rate" => t.learning_rate = parse_num(v)?,
            "discount" => t.discount = parse_num(v)?,
            "normalize_returns" => t.normalize_returns = parse_bool(v)?,
            "hidden_size" => t.hidden_size = parse_num(v)?,
            "optimizer" => {
                t.optimizer = match v {
                    "adam" => OptimizerKind::Adam,
                    "sgd" => OptimizerKind::Sgd,
                    _ => return Err(format!("expected adam or sgd, got {v:?}")),
                }
            }
            "start" => {
                t.start = match v {
                    "empty" => StartMode::Empty,
                    "random" => StartMode::Random,
                    _ => return Err(format!("expected empty or random, got {v:?}")),
                }
            }
            "reward_mode" => {
                t.reward_mode = match v {
                    "per_step" => RewardMode::PerStep,
                    "terminal" => RewardMode::Terminal,
                    _ => return Err(format!("expected per_step or terminal, got {v:?}")),
                }
            }
            "psi" => r.psi = parse_num(v)?,
            "lambda" => r.lambda = parse_num(v)?,
            "rho" => r.rho = parse_num(v)?,
            "xi" => r.xi = parse_num(v)?,
            "m_min" => r.m_min = parse_num(v)?,
            "m_max" => r.m_max = parse_num(v)?,
            "sensitive" => r.sensitive = parse_list(v),
            "rewarded" => r.rewarded = parse_list(v),
            "corr_threshold" => r.corr_threshold = parse_num(v)?,
            "distance_mode" => {
                r.distance_mode = match v {
                    "signed" => DistanceMode::Signed,
                    "absolute" => DistanceMode::Absolute,
                    _ => return Err(format!("expected signed or absolute, got {v:?}")),
                }
            }
            "learner" => {
                self.learner_kind = match v {
                    "forest" => LearnerKind::Forest,
                    "tree" => LearnerKind::Tree,
                    _ => return Err(format!("expected forest or tree, got {v:?}")),
                }
            }
            "n_trees" => self.forest.n_trees = parse_num(v)?,
            "max_features" => {
                self.forest.max_features = match v {
                    "sqrt" => MaxFeatures::Sqrt,
                    n => MaxFeatures::Count(parse_num(n)?),
                }
            }
            "bootstrap" => self.forest.bootstrap = parse_bool(v)?,
            "max_depth" => self.forest.tree.max_depth = parse_num(v)?,
            "min_samples_split" => self.forest.tree.min_samples_split = parse_num(v)?,
            "learner_seed" => {
                let s = parse_num(v)?;
                self.forest.seed = s;
                self.forest.tree.seed = s;
            }
            "threads" => self.forest.threads = parse_num(v)?,
            "logistic_lr" => self.logistic_lr = parse_num(v)?,
            "logistic_epochs" => self.logistic_epochs = parse_num(v)?,
            _ => unreachable!("key list and setter disagree on {key}"),
        }
        Ok(())
    }

    /// Rebuilds the reward learner from the forest settings.
    fn sync_learner(&mut self) {
        self.train.learner = match self.learner_kind {
            LearnerKind::Forest => LearnerConfig::Forest(self.forest.clone()),
            LearnerKind::Tree => LearnerConfig::Tree(self.forest.tree.clone()),
        };
    }

    /// Caps learner parallelism; results do not depend on it.
    pub fn set_threads(&mut self, threads: usize) {
        self.forest.threads = threads;
        self.sync_learner();
    }

    fn validate(&self, origin: &str) -> Result<()> {
        let wrap = |e: fairsel::Error| CliError::Core(e.context(origin.to_string()));
        self.train.validate().map_err(wrap)?;
        self.forest.validate().map_err(wrap)?;
        if !(self.valid_fraction > 0.0 && self.valid_fraction < 1.0) {
            return Err(wrap(fairsel::Error::invalid(format!(
                "valid_fraction must lie in (0,1), got {}",
                self.valid_fraction
            ))));
        }
        if self.rollouts < 1 {
            return Err(wrap(fairsel::Error::invalid("rollouts must be >= 1")));
        }
        if !(self.logistic_lr > 0.0) {
            return Err(wrap(fairsel::Error::invalid("logistic_lr must be > 0")));
        }
        for (key, path) in [("data", &self.data), ("checkpoint", &self.checkpoint)] {
            if let Some(p) = path {
                if !p.is_file() {
                    return Err(CliError::Config {
                        origin: origin.to_string(),
                        line: 0,
                        msg: format!("{key}: file not found: {}", p.display()),
                    });
                }
            }
        }
        Ok(())
    }

    pub fn bench(&self) -> BenchConfig {
        BenchConfig {
            forest: self.forest.clone(),
            logistic_lr: self.logistic_lr,
            logistic_epochs: self.logistic_epochs,
        }
    }

    /// The dataset path, required by every data-driven command.
    pub fn data_path(&self) -> Result<&Path> {
        self.data.as_deref().ok_or_else(|| CliError::Config {
            origin: "config".into(),
            line: 0,
            msg: "data: required for this command".into(),
        })
    }

    /// Every key with its effective value. Parsing the result as config text
    /// yields an equal `RunConfig`.
    pub fn echo(&self) -> BTreeMap<String, String> {
        self.pairs().into_iter().collect()
    }

    fn pairs(&self) -> Vec<(String, String)> {
        let t = &self.train;
        let r = &t.reward;
        let path = |p: &Option<PathBuf>| p.as_ref().map(|p| p.display().to_string()).unwrap_or_default();
        let values: Vec<String> = vec![
            path(&self.data),
            self.target.clone(),
            self.sentinel.to_string(),
            self.valid_fraction.to_string(),
            self.split_seed.to_string(),
            self.output_dir.display().to_string(),
            path(&self.checkpoint),
            self.rollouts.to_string(),
            self.features.as_ref().map(|f| f.join(",")).unwrap_or_default(),
            self.plots.to_string(),
            t.seed.to_string(),
            t.episodes.to_string(),
            t.steps_per_episode.to_string(),
            t.learning_rate.to_string(),
            t.discount.to_string(),
            t.normalize_returns.to_string(),
            t.hidden_size.to_string(),
            match t.optimizer {
                OptimizerKind::Adam => "adam",
                OptimizerKind::Sgd => "sgd",
            }
            .into(),
            match t.start {
                StartMode::Empty => "empty",
                StartMode::Random => "random",
            }
            .into(),
            match t.reward_mode {
                RewardMode::PerStep => "per_step",
                RewardMode::Terminal => "terminal",
            }
            .into(),
            r.psi.to_string(),
            r.lambda.to_string(),
            r.rho.to_string(),
            r.xi.to_string(),
            r.m_min.to_string(),
            r.m_max.to_string(),
            r.sensitive.join(","),
            r.rewarded.join(","),
            r.corr_threshold.to_string(),
            match r.distance_mode {
                DistanceMode::Signed => "signed",
                DistanceMode::Absolute => "absolute",
            }
            .into(),
            match self.learner_kind {
                LearnerKind::Forest => "forest",
                LearnerKind::Tree => "tree",
            }
            .into(),
            self.forest.n_trees.to_string(),
            match self.forest.max_features {
                MaxFeatures::Sqrt => "sqrt".to_string(),
                MaxFeatures::Count(n) => n.to_string(),
            },
            self.forest.bootstrap.to_string(),
            self.forest.tree.max_depth.to_string(),
            self.forest.tree.min_samples_split.to_string(),
            self.forest.seed.to_string(),
            self.forest.threads.to_string(),
            self.logistic_lr.to_string(),
            self.logistic_epochs.to_string(),
        ];
        let mut out: Vec<(String, String)> = KEYS.iter().map(|k| k.to_string()).zip(values).collect();
        // an absent feature list must not echo as an explicit empty one
        out.retain(|(k, v)| !(k == "features" && self.features.is_none() && v.is_empty()));
        out
    }

    /// Config text that re-parses to this configuration.
    pub fn to_text(&self) -> String {
        self.pairs().iter().map(|(k, v)| format!("{k} = {v}\n")).collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use fairsel::learner::TreeConfig;

    fn parse(text: &str) -> Result<RunConfig> {
        RunConfig::parse(text, Path::new("/base"), "test.cfg")
    }

    #[test]
    fn defaults_and_overrides() {
        let c = parse("# comment\n\nepisodes = 7  # trailing\nsensitive = a, b\nlearner = tree\nmax_depth = 3\n").unwrap();
        assert_eq!(c.train.episodes, 7);
        assert_eq!(c.train.reward.sensitive, vec!["a", "b"]);
        assert_eq!(c.train.learner, LearnerConfig::Tree(TreeConfig { max_depth: 3, ..TreeConfig::default() }));
        assert_eq!(c.train.steps_per_episode, 25);
        assert_eq!(c.output_dir, PathBuf::from("/base/fairsel_out"));
    }

    #[test]
    fn rejects_unknown_duplicate_and_malformed() {
        let e = parse("episodes = 3\nepisdoes = 4\n").unwrap_err();
        assert!(matches!(&e, CliError::Config { line: 2, .. }), "{e}");
        assert_eq!(e.exit_code(), 2);
        assert!(matches!(parse("seed = 1\nseed = 2\n"), Err(CliError::Config { line: 2, .. })));
        assert!(matches!(parse("no equals sign\n"), Err(CliError::Config { line: 1, .. })));
        assert!(matches!(parse("episodes = many\n"), Err(CliError::Config { .. })));
        assert!(matches!(parse("optimizer = rmsprop\n"), Err(CliError::Config { .. })));
    }

    #[test]
    fn invariant_violations_are_config_errors() {
        let e = parse("discount = 1.5\n").unwrap_err();
        assert_eq!(e.exit_code(), 2, "{e}");
        assert_eq!(parse("steps_per_episode = 0\n").unwrap_err().exit_code(), 2);
        assert_eq!(parse("valid_fraction = 1\n").unwrap_err().exit_code(), 2);
        assert_eq!(parse("data = missing.csv\n").unwrap_err().exit_code(), 2);
    }

    #[test]
    fn echo_round_trips() {
        let dir = tempfile::tempdir().unwrap();
        let data = dir.path().join("d.csv");
        std::fs::write(&data, "x,target\n1,0\n").unwrap();
        let text = format!(
            "data = {}\nseed = 9\nlearning_rate = 0.003\npsi = 7.5\nmax_features = 2\nfeatures = a,b\nreward_mode = terminal\n",
            data.display()
        );
        let c = RunConfig::parse(&text, dir.path(), "x").unwrap();
        let again = RunConfig::parse(&c.to_text(), Path::new("/elsewhere"), "echo").unwrap();
        assert_eq!(again, c);
        let d = parse("").unwrap();
        assert_eq!(RunConfig::parse(&d.to_text(), Path::new("/other"), "echo").unwrap(), d);
        assert_eq!(c.echo().len(), KEYS.len());
        assert_eq!(d.echo().len(), KEYS.len() - 1);
    }
}
