//! Random-search and TPE optimizers over the same search spaces and
//! evaluation stack as the agent loop, plus a comparison harness rendering
//! the accuracy/efficiency table.

mod tpe;

pub use tpe::{
    bad_set_density, prior_density, tpe_candidates, tpe_propose, tpe_select, TpeParams, TpeState,
};

use std::fmt::Write as _;
use std::str::FromStr;
use std::time::Instant;

use chrono::Utc;
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::agents::{
    Decision, HeuristicDecider, HeuristicRecommender, NextAction, OptimizationHistory, RunGoals,
    TrialRecord, Verdict,
};
use crate::data::Dataset;
use crate::evaluation::evaluate;
use crate::orchestrator::{generate_run_id, run, MemorySink, RunError};
use crate::space::{Configuration, SearchSpace};

/// Wrap one baseline evaluation into a trial record. Baselines do not steer,
/// so the decision is a plain accept/reject bookkeeping entry.
fn baseline_record(
    history: &OptimizationHistory,
    config: Configuration,
    dataset: &Dataset,
    k: usize,
    seed: u64,
    explore: bool,
) -> TrialRecord {
    let started_at = Utc::now();
    let report = evaluate(dataset, &config, k, seed);
    let ended_at = Utc::now();
    let improved = report.status.is_success()
        && history
            .best_accuracy()
            .is_none_or(|b| report.mean_accuracy > b);
    TrialRecord {
        trial_id: history.len(),
        config,
        report,
        decision: Decision {
            verdict: if improved { Verdict::Accept } else { Verdict::Reject },
            next_action: NextAction::Explore,
            guidance: String::new(),
        },
        explore_flag: explore,
        started_at,
        ended_at,
    }
}

/// Pure random search: each trial picks a family uniformly, then samples its
/// space uniformly. Deterministic per seed.
pub fn random_search(
    dataset: &Dataset,
    spaces: &[SearchSpace],
    n_trials: usize,
    k: usize,
    seed: u64,
) -> OptimizationHistory {
    assert!(!spaces.is_empty() && n_trials >= 1);
    let mut rng = ChaCha8Rng::seed_from_u64(crate::seeding::derive(seed, 0x5A3D0));
    let mut history = OptimizationHistory::new();
    for _ in 0..n_trials {
        let space = &spaces[rng.gen_range(0..spaces.len())];
        let config = space.sample(&mut rng);
        let record = baseline_record(&history, config, dataset, k, seed, true);
        history.append(record).expect("contiguous trial ids");
    }
    history
}

/// TPE search with one independent estimator state per model family.
///
/// Family selection: while the total trial count is below `n_startup`,
/// families alternate round-robin; afterwards the family with the better
/// best-observed objective wins, alternating on ties. Within a family the
/// proposal is random until that family has `n_startup` observations, then
/// model-based. Failed evaluations stay in the history but are not fed to
/// the estimators.
pub fn tpe_search(
    dataset: &Dataset,
    spaces: &[SearchSpace],
    n_trials: usize,
    k: usize,
    seed: u64,
    params: TpeParams,
) -> OptimizationHistory {
    assert!(!spaces.is_empty() && n_trials >= 1);
    let mut rng = ChaCha8Rng::seed_from_u64(crate::seeding::derive(seed, 0x79E5));
    let mut states: Vec<TpeState> = spaces.iter().map(|_| TpeState::new(params)).collect();
    let mut history = OptimizationHistory::new();
    let mut tie_counter = 0usize;

    for trial in 0..n_trials {
        let family_idx = if trial < params.n_startup || spaces.len() == 1 {
            trial % spaces.len()
        } else {
            // Greedy on best observed objective; ties alternate.
            let best: Vec<Option<f64>> = states.iter().map(TpeState::best_objective).collect();
            let top = best
                .iter()
                .filter_map(|b| *b)
                .fold(f64::NEG_INFINITY, f64::max);
            let tied: Vec<usize> = (0..spaces.len())
                .filter(|&i| best[i] == Some(top))
                .collect();
            match tied.len() {
                0 => trial % spaces.len(), // nothing observed yet anywhere
                1 => tied[0],
                _ => {
                    let pick = tied[tie_counter % tied.len()];
                    tie_counter += 1;
                    pick
                }
            }
        };

        let space = &spaces[family_idx];
        let state = &states[family_idx];
        let (config, explore) = if state.ready() {
            (tpe_propose(state, space, &mut rng), false)
        } else {
            (space.sample(&mut rng), true)
        };

        let record = baseline_record(&history, config.clone(), dataset, k, seed, explore);
        let observed = record
            .report
            .status
            .is_success()
            .then_some(record.report.mean_accuracy);
        history.append(record).expect("contiguous trial ids");
        if let Some(y) = observed {
            states[family_idx].observe(config, y);
        }
    }
    history
}

/// Optimization methods the comparison harness can run.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Method {
    Random,
    Tpe,
    MultiAgentHeuristic,
}

impl Method {
    pub fn name(&self) -> &'static str {
        match self {
            Method::Random => "random",
            Method::Tpe => "tpe",
            Method::MultiAgentHeuristic => "multiagent",
        }
    }
}

impl FromStr for Method {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "random" => Ok(Method::Random),
            "tpe" => Ok(Method::Tpe),
            "multiagent" => Ok(Method::MultiAgentHeuristic),
            other => Err(format!(
                "unknown method {other:?}; valid methods: random, tpe, multiagent"
            )),
        }
    }
}

/// One comparison row: best accuracy and computational efficiency.
#[derive(Debug, Clone, PartialEq)]
pub struct ComparisonRow {
    pub method: String,
    pub model: String,
    pub accuracy: f64,
    pub time_s: f64,
    pub trials_per_s: f64,
    pub n_trials: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ComparisonReport {
    pub dataset: String,
    pub rows: Vec<ComparisonRow>,
}

impl ComparisonReport {
    /// Deterministic Markdown table with the fixed column set.
    pub fn to_markdown(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "### {}", self.dataset);
        out.push_str("| method | model | accuracy | time_s | trials_per_s | n_trials |\n");
        out.push_str("|---|---|---|---|---|---|\n");
        for row in &self.rows {
            let _ = writeln!(
                out,
                "| {} | {} | {:.4} | {:.2} | {:.2} | {} |",
                row.method, row.model, row.accuracy, row.time_s, row.trials_per_s, row.n_trials
            );
        }
        out
    }
}

fn row_from_history(method: Method, history: &OptimizationHistory, time_s: f64) -> ComparisonRow {
    let (model, accuracy) = match history.incumbent() {
        Some(best) => (
            best.config.family().to_string(),
            best.report.mean_accuracy,
        ),
        None => ("-".to_string(), 0.0),
    };
    ComparisonRow {
        method: method.name().to_string(),
        model,
        accuracy,
        time_s,
        trials_per_s: history.len() as f64 / time_s,
        n_trials: history.len(),
    }
}

/// Run each method with the shared trial budget and collect the table. The
/// multi-agent method runs with heuristic agents and may stop early; the
/// baselines always spend the full budget.
pub fn compare(
    dataset: &Dataset,
    spaces: &[SearchSpace],
    methods: &[Method],
    budget: usize,
    k: usize,
    seed: u64,
    multiagent_goals: &RunGoals,
) -> Result<ComparisonReport, RunError> {
    assert!(budget >= 1);
    let mut rows = Vec::with_capacity(methods.len());
    for &method in methods {
        let started = Instant::now();
        let history = match method {
            Method::Random => random_search(dataset, spaces, budget, k, seed),
            Method::Tpe => tpe_search(dataset, spaces, budget, k, seed, TpeParams::default()),
            Method::MultiAgentHeuristic => {
                let goals = RunGoals {
                    max_iterations: budget,
                    min_trials: multiagent_goals.min_trials.min(budget),
                    ..multiagent_goals.clone()
                };
                let mut recommender =
                    HeuristicRecommender::new(spaces.to_vec(), crate::seeding::derive(seed, 0xA6E));
                let mut decider = HeuristicDecider;
                let mut sink = MemorySink::new();
                let result = run(
                    dataset,
                    spaces,
                    &goals,
                    &mut recommender,
                    &mut decider,
                    k,
                    seed,
                    &generate_run_id(seed),
                    &mut sink,
                )?;
                result.history
            }
        };
        rows.push(row_from_history(method, &history, started.elapsed().as_secs_f64()));
    }
    Ok(ComparisonReport {
        dataset: dataset.name().to_string(),
        rows,
    })
}
