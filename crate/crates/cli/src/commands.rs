//! The five subcommands. Each returns its result so tests can inspect it;
//! printing is left to the binary.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use fairsel::agent::{self, EpisodeLog, EpisodeSummary, TrainOutcome};
use fairsel::bench::{self, BaselineResult, PhaseStats};
use fairsel::corrgraph::{build_graph, CorrelationGraph};
use fairsel::data::{generate_synthetic, load_csv, split, standardize, Dataset, SyntheticSpec};
use fairsel::learner::LearnerConfig;
use fairsel::policy::PolicyParams;
use fairsel::reward::{BiasReport, RewardEvaluator};
use serde::{Deserialize, Serialize};

use crate::config::RunConfig;
use crate::error::{CliError, Result};
use crate::svg::{Cell, Chart, PALETTE};

pub const EPISODES_CSV: &str = "episodes.csv";
pub const REPORT_JSON: &str = "report.json";
pub const CHECKPOINT: &str = "policy.ckpt";
pub const HEATMAP_CSV: &str = "heatmap.csv";
pub const ROC_CSV: &str = "roc.csv";
pub const BIAS_ACCURACY_CSV: &str = "bias_accuracy.csv";
pub const BIAS_SCORE_JSON: &str = "bias_score.json";
pub const GRAPH_EDGES_CSV: &str = "graph_edges.csv";
pub const RL_POLICY: &str = "rl_policy";

const EPISODE_HEADER: [&str; 9] = ["episode", "step", "auc", "direct", "indirect", "size", "shaped", "total", "subset_size"];
const MOVING_AVERAGE_WINDOW: usize = 50;
const PHASES: usize = 3;
const HEATMAP_BINS: usize = 10;

/// Train/validation split, standardized with training statistics, plus the
/// correlation graph of the standardized training split.
pub struct Prepared {
    pub train: Dataset,
    pub valid: Dataset,
    pub graph: CorrelationGraph,
}

pub fn prepare(cfg: &RunConfig) -> Result<Prepared> {
    let data = load_csv(cfg.data_path()?, &cfg.target, cfg.sentinel)?;
    let (train, valid) = split(&data, cfg.valid_fraction, cfg.split_seed)?;
    let (train, scaler) = standardize(&train);
    let valid = scaler.apply(&valid)?;
    let r = &cfg.train.reward;
    let graph = build_graph(&train, r.corr_threshold, r.distance_mode)?;
    Ok(Prepared { train, valid, graph })
}

fn create_dir(dir: &Path) -> Result<()> {
    std::fs::create_dir_all(dir).map_err(|source| CliError::Io {
        path: dir.to_path_buf(),
        source,
    })
}

fn write_file(path: &Path, contents: &str) -> Result<()> {
    std::fs::write(path, contents).map_err(|source| CliError::Io {
        path: path.to_path_buf(),
        source,
    })
}

fn write_csv<I, R>(path: &Path, header: &[&str], rows: I) -> Result<()>
where
    I: IntoIterator<Item = R>,
    R: IntoIterator<Item = String>,
{
    let csv_err = |source| CliError::Csv {
        path: path.to_path_buf(),
        source,
    };
    let mut w = csv::Writer::from_path(path).map_err(csv_err)?;
    w.write_record(header).map_err(csv_err)?;
    for row in rows {
        w.write_record(row.into_iter().collect::<Vec<_>>()).map_err(csv_err)?;
    }
    w.flush().map_err(|source| CliError::Io {
        path: path.to_path_buf(),
        source,
    })
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value).map_err(|source| CliError::Json {
        path: path.to_path_buf(),
        source,
    })?;
    text.push('\n');
    write_file(path, &text)
}

/// Writes a synthetic dataset and returns a one-line description.
pub fn cmd_synth(spec: &SyntheticSpec, out: &Path) -> Result<String> {
    let data = generate_synthetic(spec)?;
    if let Some(dir) = out.parent().filter(|d| !d.as_os_str().is_empty()) {
        create_dir(dir)?;
    }
    data.write_csv(out)?;
    Ok(format!(
        "wrote {} rows x {} features (+ target) to {}",
        data.n_rows(),
        data.n_features(),
        out.display()
    ))
}

/// Contents of `report.json`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReportFile {
    pub best_total_reward: f64,
    pub best_episode: usize,
    pub best_auc: f64,
    pub best_subset: Vec<String>,
    pub best_subset_reward: f64,
    pub episodes: usize,
    pub steps_per_episode: usize,
    pub learner_fits: usize,
    pub optimizer_steps: u64,
    pub random_baseline: Vec<f64>,
    pub config: BTreeMap<String, String>,
}

/// Trains, then writes episodes.csv, report.json, heatmap.csv, the policy
/// checkpoint and (optionally) SVG plots into `output_dir`.
pub fn cmd_train<F: FnMut(&EpisodeLog)>(cfg: &RunConfig, progress: F) -> Result<TrainOutcome> {
    let p = prepare(cfg)?;
    let outcome = agent::train_with(&p.train, &p.valid, &p.graph, &cfg.train, progress)?;
    let dir = &cfg.output_dir;
    create_dir(dir)?;
    let r = &outcome.report;

    let rows = r.logs.iter().flat_map(|log| {
        log.steps.iter().zip(&log.subset_sizes).enumerate().map(move |(t, (s, k))| {
            vec![
                log.episode.to_string(),
                t.to_string(),
                s.auc.to_string(),
                s.direct.to_string(),
                s.indirect.to_string(),
                s.size.to_string(),
                s.shaped.to_string(),
                s.total.to_string(),
                k.to_string(),
            ]
        })
    });
    write_csv(&dir.join(EPISODES_CSV), &EPISODE_HEADER, rows)?;

    let file = ReportFile {
        best_total_reward: r.best_total_reward,
        best_episode: r.best_episode,
        best_auc: r.best_auc,
        best_subset: r.best_subset.clone(),
        best_subset_reward: r.best_subset_reward,
        episodes: r.logs.len(),
        steps_per_episode: cfg.train.steps_per_episode,
        learner_fits: outcome.learner_fits,
        optimizer_steps: outcome.optimizer_steps,
        random_baseline: r.random_baseline.clone(),
        config: cfg.echo(),
    };
    write_json(&dir.join(REPORT_JSON), &file)?;
    outcome.params.save(&dir.join(CHECKPOINT), outcome.optimizer_steps)?;

    let summaries: Vec<EpisodeSummary> = r.logs.iter().map(EpisodeLog::summary).collect();
    let hist = bench::reward_feature_histogram(&summaries, HEATMAP_BINS, HEATMAP_BINS)?;
    let cells: Vec<[String; 3]> = hist
        .counts
        .iter()
        .enumerate()
        .flat_map(|(i, row)| {
            let hist = &hist;
            row.iter().enumerate().map(move |(j, c)| {
                [hist.reward_edges[i].to_string(), hist.feature_edges[j].to_string(), c.to_string()]
            })
        })
        .collect();
    write_csv(&dir.join(HEATMAP_CSV), &["reward_bin_low", "feature_bin_low", "count"], cells)?;

    if cfg.plots {
        write_training_plots(dir, &summaries, &r.random_baseline, &hist)?;
    }
    Ok(outcome)
}

fn indexed(series: &[f64]) -> Vec<(f64, f64)> {
    series.iter().enumerate().map(|(i, &y)| (i as f64, y)).collect()
}

fn write_training_plots(
    dir: &Path,
    summaries: &[EpisodeSummary],
    random: &[f64],
    hist: &bench::Histogram2d,
) -> Result<()> {
    let totals: Vec<f64> = summaries.iter().map(|s| s.total).collect();
    let window = MOVING_AVERAGE_WINDOW.min(totals.len());
    let chart = Chart::new("Total reward per episode", "episode", "total reward")
        .line("policy", PALETTE[0], indexed(&totals))
        .line("policy (moving avg)", PALETTE[2], indexed(&bench::moving_average(&totals, window)?))
        .line("random actions", PALETTE[1], indexed(random));
    write_file(&dir.join("reward_trajectory.svg"), &chart.render())?;

    let indirect: Vec<f64> = summaries.iter().map(|s| s.indirect).collect();
    let chart = Chart::new("Indirect penalty (moving average)", "episode", "indirect penalty")
        .line("indirect", PALETTE[3], indexed(&bench::moving_average(&indirect, window)?));
    write_file(&dir.join("indirect_penalty.svg"), &chart.render())?;

    let phases = PHASES.min(summaries.len());
    let stats = bench::phase_summary(summaries, phases)?;
    let mut chart = Chart::new("Reward vs selected features by phase", "selected features", "total reward");
    for (p, st) in stats.iter().enumerate() {
        let pts = summaries[st.first_episode..st.first_episode + st.n_episodes]
            .iter()
            .map(|s| (s.final_size as f64, s.total))
            .collect();
        chart = chart.scatter(&format!("phase {}", p + 1), PALETTE[p % PALETTE.len()], pts);
    }
    write_file(&dir.join("phase_scatter.svg"), &chart.render())?;

    let mut cells = Vec::new();
    for (i, row) in hist.counts.iter().enumerate() {
        for (j, &c) in row.iter().enumerate() {
            cells.push(Cell {
                x0: hist.feature_edges[j],
                x1: hist.feature_edges[j + 1],
                y0: hist.reward_edges[i],
                y1: hist.reward_edges[i + 1],
                value: c as f64,
            });
        }
    }
    let chart = Chart::new("Episode density: reward vs selected features", "selected features", "total reward")
        .heatmap(cells);
    write_file(&dir.join("heatmap.svg"), &chart.render())
}

/// Runs the baselines (plus the checkpoint policy's subset when configured)
/// and writes roc.csv, bias_accuracy.csv and optionally roc.svg.
pub fn cmd_benchmark(cfg: &RunConfig) -> Result<Vec<BaselineResult>> {
    let p = prepare(cfg)?;
    let reward = &cfg.train.reward;
    let mut results = bench::run_baselines(&p.train, &p.valid, reward, &p.graph, &cfg.bench())?;
    if let Some(ckpt) = &cfg.checkpoint {
        let (params, _) = PolicyParams::load(ckpt)?;
        let mut evaluator = RewardEvaluator::new(&p.train, &p.valid, cfg.train.learner.clone(), reward, &p.graph)?;
        let (subset, _) = agent::select_subset(&mut evaluator, &params, &cfg.train, cfg.rollouts)
            .map_err(|e| e.context(ckpt.display().to_string()))?;
        if subset.is_empty() {
            return Err(CliError::Inconsistent {
                path: ckpt.clone(),
                msg: "the policy never reached a non-empty subset".into(),
            });
        }
        let model = reward.resolve(p.train.names())?;
        let forest = LearnerConfig::Forest(cfg.forest.clone());
        results.push(bench::evaluate_subset(RL_POLICY, &p.train, &p.valid, &subset, &forest, &model, &p.graph)?);
    }

    let dir = &cfg.output_dir;
    create_dir(dir)?;
    let roc_rows = results.iter().flat_map(|r| {
        r.roc
            .iter()
            .map(move |&(fpr, tpr)| vec![r.model.clone(), fpr.to_string(), tpr.to_string()])
    });
    write_csv(&dir.join(ROC_CSV), &["model", "fpr", "tpr"], roc_rows)?;
    let rows = results
        .iter()
        .map(|r| vec![r.model.clone(), r.auc.to_string(), r.bias_total.to_string()]);
    write_csv(&dir.join(BIAS_ACCURACY_CSV), &["model", "auc", "bias_total"], rows)?;
    if cfg.plots {
        let mut chart = Chart::new("ROC curves", "false positive rate", "true positive rate")
            .line("chance", "#999999", vec![(0.0, 0.0), (1.0, 1.0)]);
        for (i, r) in results.iter().enumerate() {
            chart = chart.line(&format!("{} ({:.3})", r.model, r.auc), PALETTE[i % PALETTE.len()], r.roc.clone());
        }
        write_file(&dir.join("roc.svg"), &chart.render())?;
    }
    Ok(results)
}

/// Audits `features` (or the config's list, or every feature) against the
/// correlation graph of the whole dataset. Writes bias_score.json and
/// graph_edges.csv.
pub fn cmd_bias_score(cfg: &RunConfig, features: Option<&[String]>) -> Result<BiasReport> {
    let data = load_csv(cfg.data_path()?, &cfg.target, cfg.sentinel)?;
    let reward = &cfg.train.reward;
    let graph = build_graph(&data, reward.corr_threshold, reward.distance_mode)?;
    let model = reward.resolve(data.names())?;
    let subset = match features.or(cfg.features.as_deref()) {
        Some(names) => data.indices_of(names)?,
        None => (0..data.n_features()).collect(),
    };
    let report = model.bias_score(&subset, &graph)?;
    let dir = &cfg.output_dir;
    create_dir(dir)?;
    write_json(&dir.join(BIAS_SCORE_JSON), &report)?;
    graph.write_edge_list(&dir.join(GRAPH_EDGES_CSV))?;
    Ok(report)
}

/// Per-phase table and best-episode line for a finished training run.
#[derive(Debug, Clone, PartialEq)]
pub struct RunSummary {
    pub phases: Vec<PhaseStats>,
    pub best_episode: usize,
    pub best_total_reward: f64,
    pub best_auc: f64,
    pub best_subset: Vec<String>,
}

impl RunSummary {
    pub fn render(&self) -> String {
        let mut out = String::from("phase  episodes       mean_reward  mean_features  mean_indirect\n");
        for (i, p) in self.phases.iter().enumerate() {
            let _ = writeln!(
                out,
                "{:>5}  {:>8}  {:>16.4}  {:>13.3}  {:>13.4}",
                i + 1,
                format!("{}-{}", p.first_episode, p.first_episode + p.n_episodes - 1),
                p.mean_reward,
                p.mean_subset_size,
                p.mean_indirect
            );
        }
        let _ = writeln!(
            out,
            "best episode {}: total reward {}, best AUC {}, features [{}]",
            self.best_episode,
            self.best_total_reward,
            self.best_auc,
            self.best_subset.join(", ")
        );
        out
    }
}

fn close(a: f64, b: f64) -> bool {
    (a - b).abs() <= 1e-9 * a.abs().max(b.abs()).max(1.0)
}

/// Reads a training run directory and cross-checks episodes.csv against
/// report.json.
pub fn cmd_report(dir: &Path) -> Result<RunSummary> {
    let csv_path = dir.join(EPISODES_CSV);
    let json_path = dir.join(REPORT_JSON);
    for p in [&csv_path, &json_path] {
        if !p.is_file() {
            return Err(CliError::Io {
                path: p.clone(),
                source: std::io::Error::new(std::io::ErrorKind::NotFound, "missing run file"),
            });
        }
    }
    let text = std::fs::read_to_string(&json_path).map_err(|source| CliError::Io {
        path: json_path.clone(),
        source,
    })?;
    let report: ReportFile = serde_json::from_str(&text).map_err(|source| CliError::Json {
        path: json_path.clone(),
        source,
    })?;

    let summaries = read_episodes(&csv_path, report.steps_per_episode)?;
    let bad = |path: &PathBuf, msg: String| CliError::Inconsistent { path: path.clone(), msg };
    if summaries.len() != report.episodes {
        return Err(bad(
            &csv_path,
            format!("{} episodes in the csv, {} in {REPORT_JSON}", summaries.len(), report.episodes),
        ));
    }
    let max = summaries.iter().map(|s| s.total).fold(f64::NEG_INFINITY, f64::max);
    if !close(max, report.best_total_reward) {
        return Err(bad(
            &json_path,
            format!("best_total_reward {} but the best episode in {EPISODES_CSV} sums to {max}", report.best_total_reward),
        ));
    }
    match summaries.get(report.best_episode) {
        Some(s) if close(s.total, report.best_total_reward) => {}
        _ => {
            return Err(bad(
                &json_path,
                format!("best_episode {} does not carry best_total_reward", report.best_episode),
            ))
        }
    }
    if report.random_baseline.len() != report.episodes {
        return Err(bad(&json_path, "random_baseline length differs from the episode count".into()));
    }
    let phases = bench::phase_summary(&summaries, PHASES.min(summaries.len()))?;
    Ok(RunSummary {
        phases,
        best_episode: report.best_episode,
        best_total_reward: report.best_total_reward,
        best_auc: report.best_auc,
        best_subset: report.best_subset,
    })
}

fn read_episodes(path: &Path, steps: usize) -> Result<Vec<EpisodeSummary>> {
    let csv_err = |source| CliError::Csv {
        path: path.to_path_buf(),
        source,
    };
    let bad = |msg: String| CliError::Inconsistent {
        path: path.to_path_buf(),
        msg,
    };
    let mut rdr = csv::Reader::from_path(path).map_err(csv_err)?;
    let header = rdr.headers().map_err(csv_err)?.clone();
    if header.iter().ne(EPISODE_HEADER) {
        return Err(bad(format!("unexpected header {:?}", header.iter().collect::<Vec<_>>())));
    }
    let mut out: Vec<EpisodeSummary> = Vec::new();
    let mut step_totals: Vec<f64> = Vec::new();
    let mut indirect: Vec<f64> = Vec::new();
    for (line, rec) in rdr.records().enumerate() {
        let rec = rec.map_err(csv_err)?;
        let field = |i: usize| -> Result<f64> {
            rec[i]
                .parse::<f64>()
                .map_err(|_| bad(format!("row {}: bad {} value {:?}", line + 2, EPISODE_HEADER[i], &rec[i])))
        };
        let (episode, step) = (field(0)? as usize, field(1)? as usize);
        if episode != out.len() || step != step_totals.len() {
            return Err(bad(format!("row {}: expected episode {} step {}", line + 2, out.len(), step_totals.len())));
        }
        step_totals.push(field(7)?);
        indirect.push(field(4)?);
        if step_totals.len() == steps {
            out.push(EpisodeSummary {
                total: step_totals.iter().sum(),
                final_size: field(8)? as usize,
                indirect: indirect.iter().sum(),
            });
            step_totals.clear();
            indirect.clear();
        }
    }
    if !step_totals.is_empty() {
        return Err(bad(format!("last episode has {} of {steps} steps", step_totals.len())));
    }
    if out.is_empty() {
        return Err(bad("no episodes".into()));
    }
    Ok(out)
}
