use std::path::{Path, PathBuf};
use std::process::Command;

use fairsel::data::SyntheticSpec;
use fairsel_cli::commands::{
    cmd_benchmark, cmd_bias_score, cmd_report, cmd_synth, cmd_train, BIAS_ACCURACY_CSV, BIAS_SCORE_JSON, CHECKPOINT,
    EPISODES_CSV, GRAPH_EDGES_CSV, REPORT_JSON, RL_POLICY, ROC_CSV,
};
use fairsel_cli::{CliError, RunConfig};

fn fixture(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures").join(name)
}

fn fixture_config(name: &str, out: &Path) -> RunConfig {
    let mut cfg = RunConfig::from_file(&fixture(name)).unwrap();
    cfg.output_dir = out.to_path_buf();
    cfg
}

/// A small synthetic dataset and a config pointing at it.
fn small_run(dir: &Path, extra: &str) -> RunConfig {
    let data = dir.join("data.csv");
    cmd_synth(&SyntheticSpec { n_rows: 400, seed: 1, ..SyntheticSpec::default() }, &data).unwrap();
    let text = format!(
        "data = data.csv\nsensitive = sens_0, sens_1\noutput_dir = out\nn_trees = 5\nlogistic_epochs = 50\n{extra}"
    );
    RunConfig::parse(&text, dir, "small.cfg").unwrap()
}

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_fairsel"))
}

#[test]
fn synth_writes_header_plus_rows_deterministically() {
    let tmp = tempfile::tempdir().unwrap();
    let spec = SyntheticSpec { n_rows: 50, seed: 3, ..SyntheticSpec::default() };
    let (a, b) = (tmp.path().join("a.csv"), tmp.path().join("nested/b.csv"));
    cmd_synth(&spec, &a).unwrap();
    cmd_synth(&spec, &b).unwrap();
    let text = std::fs::read_to_string(&a).unwrap();
    assert_eq!(text.lines().count(), 51);
    assert_eq!(text, std::fs::read_to_string(&b).unwrap());
    assert!(text.lines().next().unwrap().starts_with("sens_0,"));
}

#[test]
fn synth_rejects_out_of_range_correlation() {
    let tmp = tempfile::tempdir().unwrap();
    let spec = SyntheticSpec { proxy_correlation: 1.5, ..SyntheticSpec::default() };
    let err = cmd_synth(&spec, &tmp.path().join("x.csv")).unwrap_err();
    assert_eq!(err.exit_code(), 2);
    let status = bin()
        .args(["synth", "--out"])
        .arg(tmp.path().join("y.csv"))
        .args(["--proxy-correlation", "1.5"])
        .status()
        .unwrap();
    assert_eq!(status.code(), Some(2));
}

#[test]
fn train_writes_one_row_per_step_and_a_consistent_report() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = small_run(tmp.path(), "episodes = 2\nsteps_per_episode = 3\n");
    let mut seen = 0;
    cmd_train(&cfg, |_| seen += 1).unwrap();
    assert_eq!(seen, 2);
    let out = &cfg.output_dir;
    let csv = std::fs::read_to_string(out.join(EPISODES_CSV)).unwrap();
    assert_eq!(
        csv.lines().next().unwrap(),
        "episode,step,auc,direct,indirect,size,shaped,total,subset_size"
    );
    assert_eq!(csv.lines().count(), 1 + 6);
    for name in [REPORT_JSON, CHECKPOINT, "heatmap.csv", "reward_trajectory.svg", "indirect_penalty.svg", "heatmap.svg"] {
        assert!(out.join(name).is_file(), "{name} missing");
    }
    let summary = cmd_report(out).unwrap();
    assert_eq!(summary.phases.iter().map(|p| p.n_episodes).sum::<usize>(), 2);
    assert!(summary.render().contains("best episode"));
}

#[test]
fn report_detects_missing_and_tampered_files() {
    let tmp = tempfile::tempdir().unwrap();
    assert!(matches!(cmd_report(tmp.path()), Err(CliError::Io { .. })));

    let cfg = small_run(tmp.path(), "episodes = 3\nsteps_per_episode = 2\nplots = false\n");
    cmd_train(&cfg, |_| {}).unwrap();
    let path = cfg.output_dir.join(REPORT_JSON);
    let mut report: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(&path).unwrap()).unwrap();
    let best = report["best_total_reward"].as_f64().unwrap();
    report["best_total_reward"] = serde_json::json!(best + 1.0);
    std::fs::write(&path, serde_json::to_string(&report).unwrap()).unwrap();
    let err = cmd_report(&cfg.output_dir).unwrap_err();
    assert!(matches!(err, CliError::Inconsistent { .. }), "{err}");
    assert_eq!(err.exit_code(), 3);
}

#[test]
fn benchmark_rows_with_and_without_checkpoint() {
    let tmp = tempfile::tempdir().unwrap();
    let mut cfg = small_run(tmp.path(), "episodes = 3\nsteps_per_episode = 10\n");
    let rows = cmd_benchmark(&cfg).unwrap();
    assert_eq!(rows.len(), 3);
    for r in &rows {
        assert_eq!(r.roc.first(), Some(&(0.0, 0.0)));
        assert_eq!(r.roc.last(), Some(&(1.0, 1.0)));
        assert!((0.0..=1.0).contains(&r.auc));
    }
    let all = rows.iter().find(|r| r.model == "forest_all").unwrap();
    let kept = rows.iter().find(|r| r.model == "forest_no_sensitive").unwrap();
    assert!(kept.bias_total < all.bias_total);

    cmd_train(&cfg, |_| {}).unwrap();
    cfg.checkpoint = Some(cfg.output_dir.join(CHECKPOINT));
    let rows = cmd_benchmark(&cfg).unwrap();
    assert_eq!(rows.len(), 4);
    assert_eq!(rows[3].model, RL_POLICY);
    let csv = std::fs::read_to_string(cfg.output_dir.join(BIAS_ACCURACY_CSV)).unwrap();
    assert_eq!(csv.lines().count(), 5);
    assert!(cfg.output_dir.join(ROC_CSV).is_file() && cfg.output_dir.join("roc.svg").is_file());
}

#[test]
fn bias_score_fixtures() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = fixture_config("case1.cfg", tmp.path());
    let r = cmd_bias_score(&cfg, None).unwrap();
    assert_eq!(r.total, 10.0);
    assert_eq!(
        r.per_feature,
        vec![("Age".into(), 8.0), ("Level of Education".into(), 2.0), ("Income".into(), 0.0)]
    );
    assert!(tmp.path().join(BIAS_SCORE_JSON).is_file() && tmp.path().join(GRAPH_EDGES_CSV).is_file());

    let cfg = fixture_config("case2.cfg", tmp.path());
    assert_eq!(cmd_bias_score(&cfg, None).unwrap().total, 16.0);
    let only_income = ["Income".to_string(), "Credit Line".to_string()];
    assert_eq!(cmd_bias_score(&cfg, Some(&only_income)).unwrap().total, 0.0);
    assert_eq!(cmd_bias_score(&cfg, Some(&[])).unwrap().total, 0.0);
    assert!(cmd_bias_score(&cfg, Some(&["Shoe Size".to_string()])).is_err());
}

#[test]
fn binary_bias_score_and_config_errors() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg_path = tmp.path().join("case1.cfg");
    let text = std::fs::read_to_string(fixture("case1.cfg")).unwrap();
    let text = text
        .replace("data = case1.csv", &format!("data = {}", fixture("case1.csv").display()))
        .replace("output_dir = out/case1", "output_dir = out");
    std::fs::write(&cfg_path, text).unwrap();
    let out = bin().arg("bias-score").arg(&cfg_path).output().unwrap();
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    assert!(String::from_utf8_lossy(&out.stdout).contains("P_total = 10\n"));

    let bad = tmp.path().join("bad.cfg");
    std::fs::write(&bad, "episodes = 10\nno_such_key = 1\n").unwrap();
    let status = bin().arg("train").arg(&bad).status().unwrap();
    assert_eq!(status.code(), Some(2));
}

#[test]
fn config_echo_round_trips() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = small_run(tmp.path(), "psi = 6.5\nrewarded = info_0\nlearner = tree\nmax_depth = 4\n");
    let again = RunConfig::parse(&cfg.to_text(), tmp.path(), "echo.cfg").unwrap();
    assert_eq!(again, cfg);
}
