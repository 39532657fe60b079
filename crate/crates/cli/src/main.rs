//! Command-line front-end: run optimizations, compare methods, inspect run
//! logs, and list the bundled datasets.
//!
//! Exit codes: 0 completed, 2 configuration/usage error, 3 log I/O failure.

mod settings;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use optimind_core::agents::{HeuristicDecider, HeuristicRecommender};
use optimind_core::baselines::{compare, Method};
use optimind_core::data::{builtin, load_csv, Dataset, LabelColumn, BUILTIN_NAMES};
use optimind_core::gateway::{live_transport, LlmDecider, LlmRecommender};
use optimind_core::orchestrator::{
    generate_run_id, replay, run, JsonlSink, ReplayedRun, RunError,
};

use settings::{AgentBackend, Settings};

const EXIT_OK: u8 = 0;
const EXIT_CONFIG: u8 = 2;
const EXIT_LOG_IO: u8 = 3;

#[derive(Parser)]
#[command(
    name = "optimind",
    version,
    about = "Multi-agent hyperparameter optimization over native classifiers"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
#[allow(clippy::large_enum_variant)]
enum Command {
    /// Run one optimization and write a replayable JSONL log
    Run(RunArgs),
    /// Compare optimization methods on one dataset
    Compare(CompareArgs),
    /// Replay a run log and print the per-trial table
    Report(ReportArgs),
    /// List the bundled datasets
    Datasets,
}

#[derive(Args)]
struct RunArgs {
    /// JSON config file; command-line flags override its keys
    #[arg(long)]
    config: Option<PathBuf>,
    /// Builtin dataset name (breast_cancer, iris, wine) or a CSV path
    #[arg(long)]
    dataset: Option<String>,
    /// Label column for CSV datasets
    #[arg(long)]
    label_column: Option<String>,
    /// Comma-separated model allow-list (logistic_regression,random_forest)
    #[arg(long, value_delimiter = ',')]
    model: Vec<String>,
    #[arg(long)]
    target_accuracy: Option<f64>,
    #[arg(long)]
    max_iterations: Option<usize>,
    #[arg(long)]
    min_trials: Option<usize>,
    #[arg(long)]
    patience: Option<usize>,
    #[arg(long)]
    exploration_threshold: Option<f64>,
    #[arg(long)]
    k_folds: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    /// Agent backend: heuristic or llm
    #[arg(long)]
    agents: Option<String>,
    /// Directory receiving <run_id>.jsonl
    #[arg(long, default_value = ".")]
    out_dir: PathBuf,
    /// Chat endpoint URL (llm backend)
    #[arg(long)]
    endpoint: Option<String>,
    /// Model name sent to the endpoint (llm backend)
    #[arg(long)]
    model_name: Option<String>,
    /// Environment variable holding the API key
    #[arg(long)]
    api_key_env: Option<String>,
    #[arg(long)]
    timeout_s: Option<f64>,
    #[arg(long)]
    max_retries: Option<u32>,
    #[arg(long)]
    min_interval_s: Option<f64>,
}

#[derive(Args)]
struct CompareArgs {
    /// Builtin dataset name or CSV path
    #[arg(long)]
    dataset: String,
    /// Label column for CSV datasets
    #[arg(long, default_value = "target")]
    label_column: String,
    /// Comma-separated methods: random, tpe, multiagent
    #[arg(long, value_delimiter = ',', required = true)]
    methods: Vec<String>,
    /// Trial budget per method
    #[arg(long, default_value_t = 10)]
    budget: usize,
    #[arg(long, default_value_t = 5)]
    k_folds: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Target accuracy for the multiagent method
    #[arg(long, default_value_t = 0.99)]
    target_accuracy: f64,
    /// Write the Markdown table to this file as well
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct ReportArgs {
    /// Path to a <run_id>.jsonl log
    log: PathBuf,
    /// Emit a machine-readable JSON summary instead of the table
    #[arg(long)]
    json: bool,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let code = match cli.command {
        Command::Run(args) => cmd_run(args),
        Command::Compare(args) => cmd_compare(args),
        Command::Report(args) => cmd_report(args),
        Command::Datasets => cmd_datasets(),
    };
    ExitCode::from(code)
}

fn config_error(message: impl std::fmt::Display) -> u8 {
    eprintln!("error: {message}");
    EXIT_CONFIG
}

fn resolve_dataset(name: &str, label_column: &str) -> Result<Dataset, String> {
    if BUILTIN_NAMES.contains(&name) {
        return builtin(name).map_err(|e| e.to_string());
    }
    let path = PathBuf::from(name);
    if path.exists() {
        return load_csv(&path, &LabelColumn::Name(label_column.to_string()))
            .map_err(|e| e.to_string());
    }
    Err(format!(
        "unknown dataset {name:?}; builtin datasets: {} (or pass a CSV path)",
        BUILTIN_NAMES.join(", ")
    ))
}

fn cmd_run(args: RunArgs) -> u8 {
    let settings = match Settings::resolve(&args) {
        Ok(s) => s,
        Err(e) => return config_error(e),
    };
    if let Err(e) = settings.goals.validate() {
        return config_error(e);
    }
    let dataset = match resolve_dataset(&settings.dataset, &settings.label_column) {
        Ok(d) => d,
        Err(e) => return config_error(e),
    };

    let spaces = settings.spaces.clone();
    // Build the agents first: a missing API key must fail before any log
    // file exists or any trial starts.
    #[allow(clippy::large_enum_variant)]
    enum Agents {
        Heuristic(HeuristicRecommender, HeuristicDecider),
        Llm(
            Box<LlmRecommender<optimind_core::gateway::ResilientTransport<optimind_core::gateway::HttpChat, optimind_core::gateway::SystemClock>>>,
            Box<LlmDecider<optimind_core::gateway::ResilientTransport<optimind_core::gateway::HttpChat, optimind_core::gateway::SystemClock>>>,
        ),
    }
    let mut agents = match settings.backend {
        AgentBackend::Heuristic => Agents::Heuristic(
            HeuristicRecommender::new(spaces.clone(), settings.seed),
            HeuristicDecider,
        ),
        AgentBackend::Llm => {
            let recommender_transport = match live_transport(settings.transport.clone()) {
                Ok(t) => t,
                Err(e) => return config_error(e),
            };
            let decider_transport = match live_transport(settings.transport.clone()) {
                Ok(t) => t,
                Err(e) => return config_error(e),
            };
            Agents::Llm(
                Box::new(LlmRecommender::new(recommender_transport, spaces.clone())),
                Box::new(LlmDecider::new(decider_transport)),
            )
        }
    };

    let run_id = generate_run_id(settings.seed);
    let log_path = args.out_dir.join(format!("{run_id}.jsonl"));
    let mut sink = match JsonlSink::create(&log_path) {
        Ok(s) => s,
        Err(e) => {
            eprintln!("error: cannot create log {}: {e}", log_path.display());
            return EXIT_LOG_IO;
        }
    };

    let result = match &mut agents {
        Agents::Heuristic(recommender, decider) => run(
            &dataset,
            &spaces,
            &settings.goals,
            recommender,
            decider,
            settings.k_folds,
            settings.seed,
            &run_id,
            &mut sink,
        ),
        Agents::Llm(recommender, decider) => run(
            &dataset,
            &spaces,
            &settings.goals,
            recommender.as_mut(),
            decider.as_mut(),
            settings.k_folds,
            settings.seed,
            &run_id,
            &mut sink,
        ),
    };

    match result {
        Ok(result) => {
            println!("run_id: {run_id}");
            println!("dataset: {}", dataset.name());
            println!("trials: {}", result.history.len());
            println!("termination: {}", result.termination);
            match &result.best {
                Some(best) => {
                    println!("best_trial: {}", best.trial_id);
                    println!("best_accuracy: {:.4}", best.report.mean_accuracy);
                    println!(
                        "best_config: {}",
                        serde_json::to_string(&best.config).expect("config serializes")
                    );
                }
                None => println!("best_trial: none (no successful trial)"),
            }
            println!("total_wall_time_s: {:.2}", result.total_wall_time_s);
            println!("trials_per_second: {:.2}", result.trials_per_second);
            println!("log: {}", log_path.display());
            EXIT_OK
        }
        Err(RunError::Log(e)) => {
            eprintln!("error: log write failed: {e}");
            EXIT_LOG_IO
        }
        Err(e) => config_error(e),
    }
}

fn cmd_compare(args: CompareArgs) -> u8 {
    let mut methods = Vec::new();
    for raw in &args.methods {
        match raw.parse::<Method>() {
            Ok(m) => methods.push(m),
            Err(e) => return config_error(e),
        }
    }
    if args.budget < 1 {
        return config_error("budget must be >= 1");
    }
    let dataset = match resolve_dataset(&args.dataset, &args.label_column) {
        Ok(d) => d,
        Err(e) => return config_error(e),
    };
    let goals = optimind_core::agents::RunGoals {
        target_accuracy: args.target_accuracy,
        max_iterations: args.budget,
        ..Default::default()
    };
    let spaces = optimind_core::space::default_spaces();
    match compare(
        &dataset,
        &spaces,
        &methods,
        args.budget,
        args.k_folds,
        args.seed,
        &goals,
    ) {
        Ok(report) => {
            let markdown = report.to_markdown();
            print!("{markdown}");
            if let Some(out) = &args.out {
                if let Err(e) = std::fs::write(out, &markdown) {
                    eprintln!("error: cannot write {}: {e}", out.display());
                    return EXIT_LOG_IO;
                }
            }
            EXIT_OK
        }
        Err(e) => config_error(e),
    }
}

fn print_report_table(replayed: &ReplayedRun) {
    println!("run_id: {}", replayed.run_id);
    println!("dataset: {}", replayed.dataset);
    println!("trial | model | accuracy | verdict | explore");
    for record in replayed.history.records() {
        let verdict = match record.decision.verdict {
            optimind_core::agents::Verdict::Accept => "accept",
            optimind_core::agents::Verdict::Reject => "reject",
        };
        let accuracy = if record.report.status.is_success() {
            format!("{:.4}", record.report.mean_accuracy)
        } else {
            "failed".to_string()
        };
        println!(
            "{} | {} | {} | {} | {}",
            record.trial_id,
            record.config.family(),
            accuracy,
            verdict,
            record.explore_flag
        );
    }
    match (&replayed.termination, replayed.history.incumbent()) {
        (Some(reason), Some(best)) => println!(
            "termination: {reason} (best trial {} at {:.4})",
            best.trial_id, best.report.mean_accuracy
        ),
        (Some(reason), None) => println!("termination: {reason} (no successful trial)"),
        (None, _) => println!("termination: incomplete (log truncated)"),
    }
}

fn cmd_report(args: ReportArgs) -> u8 {
    let replayed = match replay(&args.log) {
        Ok(r) => r,
        Err(e) => return config_error(e),
    };
    if args.json {
        let best = replayed.history.incumbent();
        let summary = serde_json::json!({
            "run_id": replayed.run_id,
            "dataset": replayed.dataset,
            "k": replayed.k,
            "seed": replayed.seed,
            "n_trials": replayed.history.len(),
            "complete": replayed.is_complete(),
            "termination": replayed.termination.map(|t| t.to_string()),
            "best_trial": best.map(|b| b.trial_id),
            "best_accuracy": best.map(|b| b.report.mean_accuracy),
            "trials": replayed.history.records().iter().map(|r| {
                serde_json::json!({
                    "trial_id": r.trial_id,
                    "config": r.config,
                    "mean_accuracy": r.report.mean_accuracy,
                    "success": r.report.status.is_success(),
                    "explore": r.explore_flag,
                })
            }).collect::<Vec<_>>(),
        });
        println!(
            "{}",
            serde_json::to_string_pretty(&summary).expect("summary serializes")
        );
    } else {
        print_report_table(&replayed);
    }
    EXIT_OK
}

fn cmd_datasets() -> u8 {
    println!("name | samples | features | classes");
    for name in BUILTIN_NAMES {
        let ds = builtin(name).expect("bundled datasets load");
        println!(
            "{} | {} | {} | {}",
            name,
            ds.n_samples(),
            ds.n_features(),
            ds.n_classes()
        );
    }
    EXIT_OK
}
