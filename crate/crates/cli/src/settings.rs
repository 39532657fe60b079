//! Run settings resolution: defaults, then the JSON config file, then
//! command-line flags (flags win). Everything validates before any work
//! starts.

use serde::Deserialize;

use optimind_core::agents::RunGoals;
use optimind_core::gateway::TransportConfig;
use optimind_core::space::{default_space, ModelFamily, SearchSpace};

use crate::RunArgs;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum AgentBackend {
    Heuristic,
    Llm,
}

/// Flat JSON config file; every key optional, unknown keys rejected.
#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct FileConfig {
    dataset: Option<String>,
    label_column: Option<String>,
    models: Option<Vec<String>>,
    target_accuracy: Option<f64>,
    max_iterations: Option<usize>,
    exploration_ratio_threshold: Option<f64>,
    min_trials: Option<usize>,
    patience: Option<usize>,
    k_folds: Option<usize>,
    seed: Option<u64>,
    agent_backend: Option<String>,
    endpoint_url: Option<String>,
    model_name: Option<String>,
    api_key_env_var: Option<String>,
    timeout_s: Option<f64>,
    max_retries: Option<u32>,
    min_request_interval_s: Option<f64>,
}

/// Fully resolved run settings.
pub struct Settings {
    pub dataset: String,
    pub label_column: String,
    pub spaces: Vec<SearchSpace>,
    pub goals: RunGoals,
    pub k_folds: usize,
    pub seed: u64,
    pub backend: AgentBackend,
    pub transport: TransportConfig,
}

fn parse_families(names: &[String]) -> Result<Vec<SearchSpace>, String> {
    let mut families: Vec<ModelFamily> = Vec::new();
    for name in names {
        let family: ModelFamily = name.parse().map_err(|e| format!("{e}"))?;
        if !families.contains(&family) {
            families.push(family);
        }
    }
    if families.is_empty() {
        return Err("model allow-list must not be empty".to_string());
    }
    Ok(families.into_iter().map(default_space).collect())
}

impl Settings {
    pub fn resolve(args: &RunArgs) -> Result<Settings, String> {
        let file: FileConfig = match &args.config {
            Some(path) => {
                let text = std::fs::read_to_string(path)
                    .map_err(|e| format!("cannot read config {}: {e}", path.display()))?;
                serde_json::from_str(&text)
                    .map_err(|e| format!("invalid config {}: {e}", path.display()))?
            }
            None => FileConfig::default(),
        };

        let dataset = args
            .dataset
            .clone()
            .or(file.dataset)
            .ok_or("no dataset given (use --dataset or the config file)")?;
        let label_column = args
            .label_column
            .clone()
            .or(file.label_column)
            .unwrap_or_else(|| "target".to_string());

        let model_names: Vec<String> = if !args.model.is_empty() {
            args.model.clone()
        } else if let Some(models) = file.models {
            models
        } else {
            ModelFamily::ALL.iter().map(|f| f.to_string()).collect()
        };
        let spaces = parse_families(&model_names)?;

        let defaults = RunGoals::default();
        let max_iterations = args
            .max_iterations
            .or(file.max_iterations)
            .unwrap_or(defaults.max_iterations);
        let goals = RunGoals {
            target_accuracy: args
                .target_accuracy
                .or(file.target_accuracy)
                .unwrap_or(defaults.target_accuracy),
            max_iterations,
            exploration_ratio_threshold: args
                .exploration_threshold
                .or(file.exploration_ratio_threshold)
                .unwrap_or(defaults.exploration_ratio_threshold),
            // The default clamps to the budget; an explicit value that
            // exceeds it is a configuration error caught by validation.
            min_trials: args
                .min_trials
                .or(file.min_trials)
                .unwrap_or(defaults.min_trials.min(max_iterations)),
            patience: args.patience.or(file.patience).unwrap_or(defaults.patience),
        };

        let backend = match args
            .agents
            .clone()
            .or(file.agent_backend)
            .unwrap_or_else(|| "heuristic".to_string())
            .as_str()
        {
            "heuristic" => AgentBackend::Heuristic,
            "llm" => AgentBackend::Llm,
            other => return Err(format!("unknown agent backend {other:?} (heuristic or llm)")),
        };

        let transport_defaults = TransportConfig::default();
        let transport = TransportConfig {
            endpoint_url: args
                .endpoint
                .clone()
                .or(file.endpoint_url)
                .unwrap_or(transport_defaults.endpoint_url),
            model_name: args
                .model_name
                .clone()
                .or(file.model_name)
                .unwrap_or(transport_defaults.model_name),
            api_key_env_var: args
                .api_key_env
                .clone()
                .or(file.api_key_env_var)
                .unwrap_or(transport_defaults.api_key_env_var),
            timeout_s: args
                .timeout_s
                .or(file.timeout_s)
                .unwrap_or(transport_defaults.timeout_s),
            max_retries: args
                .max_retries
                .or(file.max_retries)
                .unwrap_or(transport_defaults.max_retries),
            min_request_interval_s: args
                .min_interval_s
                .or(file.min_request_interval_s)
                .unwrap_or(transport_defaults.min_request_interval_s),
        };
        transport.validate()?;

        Ok(Settings {
            dataset,
            label_column,
            spaces,
            goals,
            k_folds: args.k_folds.or(file.k_folds).unwrap_or(5),
            seed: args.seed.or(file.seed).unwrap_or(0),
            backend,
            transport,
        })
    }
}
