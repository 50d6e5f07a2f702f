use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use fairsel::data::SyntheticSpec;
use fairsel_cli::commands;
use fairsel_cli::{CliError, RunConfig};

/// Fairness-aware feature selection with policy-gradient reinforcement learning.
#[derive(Parser)]
#[command(name = "fairsel", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Write a synthetic dataset with planted sensitive features and proxies.
    Synth {
        #[arg(long)]
        out: PathBuf,
        #[arg(long, default_value_t = SyntheticSpec::default().n_rows)]
        rows: usize,
        #[arg(long, default_value_t = SyntheticSpec::default().n_sensitive)]
        sensitive: usize,
        #[arg(long, default_value_t = SyntheticSpec::default().n_proxies_per_sensitive)]
        proxies_per_sensitive: usize,
        #[arg(long, default_value_t = SyntheticSpec::default().proxy_correlation, allow_negative_numbers = true)]
        proxy_correlation: f64,
        #[arg(long, default_value_t = SyntheticSpec::default().n_informative)]
        informative: usize,
        #[arg(long, default_value_t = SyntheticSpec::default().n_noise)]
        noise: usize,
        #[arg(long, default_value_t = SyntheticSpec::default().label_signal_strength)]
        signal_strength: f64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// Train the selection policy described by a config file.
    Train { config: PathBuf },
    /// Compare baseline models (and optionally a trained policy).
    Benchmark {
        config: PathBuf,
        /// Policy checkpoint; overrides the config's `checkpoint` key.
        #[arg(long)]
        checkpoint: Option<PathBuf>,
    },
    /// Score a feature set for direct and proxy bias.
    BiasScore {
        config: PathBuf,
        /// Comma-separated feature names; overrides the config's `features`.
        #[arg(long)]
        features: Option<String>,
    },
    /// Summarize a finished training run directory.
    Report { dir: PathBuf },
}

fn load(path: &PathBuf) -> Result<RunConfig, CliError> {
    let mut cfg = RunConfig::from_file(path)?;
    if let Ok(v) = std::env::var("FAIRSEL_THREADS") {
        let threads = v.trim().parse().map_err(|_| CliError::Config {
            origin: "FAIRSEL_THREADS".into(),
            line: 0,
            msg: format!("expected a thread count, got {v:?}"),
        })?;
        cfg.set_threads(threads);
    }
    Ok(cfg)
}

fn run(cli: Cli) -> Result<(), CliError> {
    match cli.command {
        Command::Synth {
            out,
            rows,
            sensitive,
            proxies_per_sensitive,
            proxy_correlation,
            informative,
            noise,
            signal_strength,
            seed,
        } => {
            let spec = SyntheticSpec {
                n_rows: rows,
                n_sensitive: sensitive,
                n_proxies_per_sensitive: proxies_per_sensitive,
                proxy_correlation,
                n_informative: informative,
                n_noise: noise,
                label_signal_strength: signal_strength,
                seed,
            };
            println!("{}", commands::cmd_synth(&spec, &out)?);
        }
        Command::Train { config } => {
            let cfg = load(&config)?;
            let total = cfg.train.episodes;
            let every = (total / 20).max(1);
            let out = commands::cmd_train(&cfg, |log| {
                if (log.episode + 1) % every == 0 || log.episode + 1 == total {
                    eprintln!("episode {}/{total}: total reward {:.4}", log.episode + 1, log.total);
                }
            })?;
            let r = &out.report;
            println!("best total reward: {} (episode {})", r.best_total_reward, r.best_episode);
            println!("best AUC: {}", r.best_auc);
            println!("best selected features: {}", r.best_subset.join(", "));
            println!("outputs written to {}", cfg.output_dir.display());
        }
        Command::Benchmark { config, checkpoint } => {
            let mut cfg = load(&config)?;
            if checkpoint.is_some() {
                cfg.checkpoint = checkpoint;
            }
            println!("{:<22} {:>8} {:>10}", "model", "auc", "bias");
            for r in commands::cmd_benchmark(&cfg)? {
                println!("{:<22} {:>8.4} {:>10.4}", r.model, r.auc, r.bias_total);
            }
        }
        Command::BiasScore { config, features } => {
            let cfg = load(&config)?;
            let list: Option<Vec<String>> = features.map(|f| {
                f.split(',').map(str::trim).filter(|s| !s.is_empty()).map(String::from).collect()
            });
            let report = commands::cmd_bias_score(&cfg, list.as_deref())?;
            for (name, score) in &report.per_feature {
                println!("P({name}) = {score}");
            }
            println!("P_total = {}", report.total);
        }
        Command::Report { dir } => print!("{}", commands::cmd_report(&dir)?.render()),
    }
    Ok(())
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
