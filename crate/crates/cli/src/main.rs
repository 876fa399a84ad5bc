use anyhow::{bail, Context, Result};
use clap::{Parser, Subcommand};
use serde::Serialize;
use sidewalk_analytics::{read_log, report, EventLog, Thresholds};
use sidewalk_core::agents::{AgentRng, Algorithm};
use sidewalk_core::checkpoint::Checkpoint;
use sidewalk_core::harness::replay::{replay, EpisodeLog};
use sidewalk_core::harness::train::RunMetadata;
use sidewalk_core::harness::{
    calibrate, compare, episode_seed, evaluate, reference_detection_pct, run_episode, train, CalibrationConfig,
    Mode, SidewalkEnv, TrainConfig, Validation, MAX_EPISODE_STEPS,
};
use sidewalk_core::scenario::ScenarioConfig;
use sidewalk_core::sensing::SensorConfig;
use sidewalk_gateway::{serve, Gateway, GatewayConfig, SharedLog};
use sidewalk_soca::SocaAgent;
use rand::SeedableRng;
use std::fs::{self, File, OpenOptions};
use std::io::{BufReader, Write};
use std::path::{Path, PathBuf};
use std::sync::Arc;

#[derive(Parser)]
#[command(name = "sidewalk", version, about = "Sidewalk navigation learners, evaluation and walk sessions")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Train one learner and write checkpoint.json, curve.csv and run.toml.
    Train {
        #[arg(long)]
        algo: Algorithm,
        /// Scenario file, or `standard` / `empty`.
        #[arg(long, default_value = "standard")]
        scenario: String,
        #[arg(long, default_value_t = 2000)]
        episodes: u32,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Keep the best greedy snapshot, checked every N episodes. Defaults
        /// to 100 for dqn and off otherwise; 0 turns it off.
        #[arg(long)]
        validate_every: Option<u32>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Greedy evaluation of a checkpoint: detection.csv, summary.json,
    /// run.toml and optional episode logs.
    Evaluate {
        #[arg(long)]
        checkpoint: PathBuf,
        #[arg(long, default_value = "standard")]
        scenario: String,
        #[arg(long, default_value_t = 10_000)]
        episodes: u32,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Also write replayable logs of the first N episodes.
        #[arg(long, default_value_t = 0)]
        record: u32,
        #[arg(long)]
        out: PathBuf,
    },
    /// Re-simulate an episode log; fails if any step diverges.
    Replay {
        #[arg(long)]
        log: PathBuf,
    },
    /// Train Q-learning, SARSA and DQN over the same seeds and compare
    /// their late returns.
    Compare {
        #[arg(long, default_value = "standard")]
        scenario: String,
        #[arg(long, default_value_t = 200)]
        episodes: u32,
        #[arg(long, default_value_t = 10)]
        seeds: u64,
        #[arg(long, default_value_t = 1)]
        first_seed: u64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Fit per-kind sensor dropout so trained policies match the reference
    /// detection rates.
    Calibrate {
        #[arg(long, default_value = "standard")]
        scenario: String,
        #[arg(long, default_value_t = 2000)]
        train_episodes: u32,
        #[arg(long, default_value_t = 1000)]
        eval_episodes: u32,
        #[arg(long, default_value_t = 3)]
        rounds: u32,
        #[arg(long)]
        out: PathBuf,
    },
    /// Run the walk-session server.
    Serve {
        /// Extra scenario files (*.toml) served by file stem.
        #[arg(long)]
        scenarios: Option<PathBuf>,
        #[arg(long, requires = "domain")]
        nlu: Option<PathBuf>,
        #[arg(long, requires = "nlu")]
        domain: Option<PathBuf>,
        /// Checkpoints for agent-steered walks, named by file stem.
        #[arg(long)]
        checkpoint: Vec<PathBuf>,
        #[arg(long, default_value = "127.0.0.1:7878")]
        listen: String,
        /// Append analytics events to this file.
        #[arg(long)]
        log: Option<PathBuf>,
    },
    /// Usage metrics from an analytics log.
    Report {
        #[arg(long)]
        log: PathBuf,
        #[arg(long, default_value_t = 10_000)]
        keep_alive_ms: u64,
        /// Per-session CSV instead of JSON.
        #[arg(long)]
        csv: bool,
    },
}

fn load_scenario(arg: &str) -> Result<ScenarioConfig> {
    match arg {
        "standard" => Ok(ScenarioConfig::standard()),
        "empty" => Ok(ScenarioConfig::empty()),
        path => ScenarioConfig::load(Path::new(path)).with_context(|| format!("loading scenario {path}")),
    }
}

fn write_meta(dir: &Path, meta: &RunMetadata) -> Result<()> {
    fs::write(dir.join("run.toml"), meta.to_toml())?;
    Ok(())
}

#[derive(Serialize)]
struct EvalSummary {
    episodes: usize,
    mean_return: f64,
    collision_rate: f64,
    goal_rate: f64,
    detection_average: Option<f64>,
}

fn main() -> Result<()> {
    tracing_subscriber::fmt()
        .with_env_filter(
            tracing_subscriber::EnvFilter::try_from_default_env().unwrap_or_else(|_| "info".into()),
        )
        .with_writer(std::io::stderr)
        .init();
    match Cli::parse().command {
        Command::Train { algo, scenario, episodes, seed, validate_every, out } => {
            let scenario = load_scenario(&scenario)?;
            let mut cfg = TrainConfig::new(algo, episodes, seed);
            let every = validate_every.unwrap_or(if algo == Algorithm::Dqn { 100 } else { 0 });
            if every > 0 {
                cfg.validation = Some(Validation { every, episodes: 50 });
            }
            let output = train(&cfg, &scenario)?;
            output.write_to(&out)?;
            println!("{algo}: last-50 mean return {:.1}", output.curve.mean_last(50));
        }
        Command::Evaluate { checkpoint, scenario, episodes, seed, record, out } => {
            let ckpt = Checkpoint::load(&checkpoint).with_context(|| format!("loading {}", checkpoint.display()))?;
            let scenario = load_scenario(&scenario)?;
            let ev = evaluate(&ckpt, &scenario, &ckpt.sensor, episodes, seed, MAX_EPISODE_STEPS)?;
            fs::create_dir_all(&out)?;
            ev.table.write_csv(File::create(out.join("detection.csv"))?)?;
            let summary = EvalSummary {
                episodes: ev.records.len(),
                mean_return: ev.mean_return,
                collision_rate: ev.collision_rate,
                goal_rate: ev.goal_rate,
                detection_average: ev.table.average(),
            };
            fs::write(out.join("summary.json"), serde_json::to_string_pretty(&summary)?)?;
            write_meta(
                &out,
                &RunMetadata {
                    command: "evaluate".into(),
                    algorithm: ckpt.model.algorithm(),
                    scenario: scenario.name.clone(),
                    episodes,
                    seed,
                    version: env!("CARGO_PKG_VERSION").into(),
                },
            )?;
            if record > 0 {
                let dir = out.join("episodes");
                fs::create_dir_all(&dir)?;
                let mut env = SidewalkEnv::new(scenario.clone(), ckpt.sensor.clone())?;
                let mut policy = ckpt.policy();
                for i in 0..record.min(episodes) {
                    let ep_seed = episode_seed(seed, u64::from(i));
                    let mut rng = AgentRng::seed_from_u64(ep_seed);
                    let s = run_episode(&mut env, &mut policy, ep_seed, Mode::Greedy, &mut rng, MAX_EPISODE_STEPS, true);
                    let log = EpisodeLog::from_summary(&scenario, env.dt, &s);
                    log.write_jsonl(File::create(dir.join(format!("episode_{i:05}.jsonl")))?)?;
                }
            }
            println!("{}", serde_json::to_string_pretty(&summary)?);
            for row in &ev.table.rows {
                match row.percent() {
                    Some(p) => println!("{:<20} {p:5.1}", row.kind.to_string()),
                    None => println!("{:<20}   n/a", row.kind.to_string()),
                }
            }
        }
        Command::Replay { log } => {
            let episode = EpisodeLog::read_jsonl(BufReader::new(File::open(&log)?))?;
            let steps = replay(&episode)?;
            let mut out = std::io::stdout().lock();
            writeln!(out, "tick,action,x,y,reward,terminal")?;
            for s in &steps {
                writeln!(out, "{},{},{:.3},{:.3},{},{}", s.tick, s.action, s.x, s.y, s.outcome.reward, s.outcome.terminal)?;
            }
            writeln!(out, "replayed {} steps, return {}", steps.len(), episode.total_return())?;
        }
        Command::Compare { scenario, episodes, seeds, first_seed, out } => {
            if seeds < 2 {
                bail!("need at least two seeds for a paired interval");
            }
            let scenario = load_scenario(&scenario)?;
            let seed_list: Vec<u64> = (first_seed..first_seed + seeds).collect();
            let cmp = compare(&scenario, &SensorConfig::default(), &Algorithm::COMPARED, episodes, &seed_list)?;
            for algo in Algorithm::COMPARED {
                println!("{:<10} last-50 mean {:8.2}", algo.as_str(), cmp.score(algo));
            }
            let (lo, hi) = cmp.gap_ci(Algorithm::Dqn, Algorithm::QLearning, 10_000, 0);
            println!("dqn - qlearning 95% interval [{lo:.2}, {hi:.2}]");
            if let Some(dir) = out {
                fs::create_dir_all(&dir)?;
                cmp.write_csv(File::create(dir.join("compare.csv"))?)?;
            }
        }
        Command::Calibrate { scenario, train_episodes, eval_episodes, rounds, out } => {
            let scenario = load_scenario(&scenario)?;
            let cfg = CalibrationConfig { train_episodes, eval_episodes, rounds, ..Default::default() };
            let mut base = SensorConfig::default();
            base.dropout.clear();
            let result = calibrate(&scenario, &base, &reference_detection_pct(), &cfg)?;
            fs::create_dir_all(&out)?;
            let mut sensor = SensorConfig::default();
            sensor.dropout = result.dropout.clone();
            fs::write(out.join("sensor.toml"), toml::to_string(&sensor)?)?;
            result.table.write_csv(File::create(out.join("detection.csv"))?)?;
            for (kind, d) in &result.dropout {
                println!("{:<20} dropout {d:.4}", kind.to_string());
            }
            println!("largest miss {:.1} points", result.max_error);
        }
        Command::Serve { scenarios, nlu, domain, checkpoint, listen, log } => {
            let mut cfg = GatewayConfig::new();
            if let Some(dir) = scenarios {
                for entry in fs::read_dir(&dir)? {
                    let path = entry?.path();
                    if path.extension().is_some_and(|e| e == "toml") {
                        let s = ScenarioConfig::load(&path)?;
                        let name = path.file_stem().unwrap_or_default().to_string_lossy().into_owned();
                        cfg.scenarios.insert(name, s);
                    }
                }
            }
            if let (Some(nlu), Some(domain)) = (nlu, domain) {
                cfg.agent = SocaAgent::from_texts(&fs::read_to_string(&nlu)?, &fs::read_to_string(&domain)?)?;
            }
            for path in checkpoint {
                let name = path.file_stem().unwrap_or_default().to_string_lossy().into_owned();
                cfg.checkpoints.insert(name, Checkpoint::load(&path)?);
            }
            if let Some(path) = log {
                let file = OpenOptions::new().create(true).append(true).open(&path)?;
                let log: SharedLog = Arc::new(parking_lot::Mutex::new(EventLog::new(Box::new(file))));
                cfg.log = Some(log);
            }
            let runtime = tokio::runtime::Runtime::new()?;
            runtime.block_on(async move {
                let listener = tokio::net::TcpListener::bind(&listen).await?;
                println!("listening on {}", listener.local_addr()?);
                serve(listener, Arc::new(Gateway::new(cfg))).await?;
                Ok::<_, anyhow::Error>(())
            })?;
        }
        Command::Report { log, keep_alive_ms, csv } => {
            let events = read_log(BufReader::new(File::open(&log)?))?;
            let r = report(&events, &Thresholds::with_period(keep_alive_ms));
            if csv {
                print!("{}", r.to_csv()?);
            } else {
                println!("{}", r.to_json());
            }
        }
    }
    Ok(())
}
