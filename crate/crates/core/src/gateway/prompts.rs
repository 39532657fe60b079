//! Deterministic prompt templates for the two LLM-backed agents. The history
//! window is capped at the last 10 trials; the full record stays in the run
//! log.

use std::fmt::Write as _;

use super::ChatRequest;
use crate::agents::{OptimizationHistory, PendingTrial, RunGoals, TrialRecord};
use crate::data::DatasetSummary;
use crate::space::{ParamDomain, Scale, SearchSpace};

const HISTORY_WINDOW: usize = 10;

const RECOMMENDER_SYSTEM: &str = "You are the recommender agent in a hyperparameter \
optimization loop for tabular classification. You study the dataset profile and the trial \
history, then propose one model configuration worth evaluating next, with your reasoning. \
Respond with exactly one JSON object and no other text.";

const DECISION_SYSTEM: &str = "You are the decision agent in a hyperparameter optimization \
loop. You judge the newest cross-validation report against the run goals and the trial \
history, then accept or reject it and choose the next action. Respond with exactly one JSON \
object and no other text.";

fn domain_line(domain: &ParamDomain) -> String {
    match domain {
        ParamDomain::Continuous { low, high, scale } => {
            let scale = match scale {
                Scale::Linear => "linear",
                Scale::Log10 => "log10",
            };
            format!("continuous [{low}, {high}], {scale} scale")
        }
        ParamDomain::Integer { low, high } => format!("integer [{low}, {high}]"),
        ParamDomain::Categorical { choices } => format!("one of [{}]", choices.join(", ")),
    }
}

fn push_spaces(out: &mut String, spaces: &[SearchSpace]) {
    out.push_str("## Allowed models and hyperparameter domains\n");
    for space in spaces {
        let _ = writeln!(out, "- model \"{}\":", space.family());
        for (name, domain) in space.params() {
            let _ = writeln!(out, "    {name}: {}", domain_line(domain));
        }
    }
}

fn trial_line(record: &TrialRecord) -> String {
    let status = if record.report.status.is_success() {
        "success"
    } else {
        "failed"
    };
    format!(
        "{{\"trial_id\":{},\"config\":{},\"mean_accuracy\":{:.6},\"status\":\"{}\",\"explore\":{}}}",
        record.trial_id,
        serde_json::to_string(&record.config).expect("config serializes"),
        record.report.mean_accuracy,
        status,
        record.explore_flag,
    )
}

fn push_history(out: &mut String, history: &OptimizationHistory) {
    let _ = writeln!(out, "## Trial history (last {HISTORY_WINDOW})");
    if history.is_empty() {
        out.push_str("No trials yet.\n");
        return;
    }
    let records = history.records();
    let start = records.len().saturating_sub(HISTORY_WINDOW);
    for record in &records[start..] {
        out.push_str(&trial_line(record));
        out.push('\n');
    }
    if let Some(best) = history.incumbent() {
        let _ = writeln!(
            out,
            "Current best: trial {} with mean accuracy {:.6}.",
            best.trial_id, best.report.mean_accuracy
        );
    }
}

/// Prompt asking for the next configuration. Same inputs produce identical
/// text.
pub fn render_recommender_prompt(
    summary: &DatasetSummary,
    history: &OptimizationHistory,
    guidance: &str,
    spaces: &[SearchSpace],
) -> ChatRequest {
    let mut out = String::new();
    let _ = writeln!(out, "## Dataset profile");
    let _ = writeln!(out, "name: {}", summary.name);
    let _ = writeln!(out, "samples: {}", summary.n_samples);
    let _ = writeln!(out, "features: {}", summary.n_features);
    let _ = writeln!(out, "classes: {}", summary.n_classes);
    let _ = writeln!(out, "class_counts: {:?}", summary.class_counts);
    let _ = writeln!(out, "missing_values: {}", summary.missing_count);
    out.push_str("feature statistics (population std):\n");
    out.push_str("name | mean | std | min | max\n");
    for fs in &summary.feature_stats {
        let _ = writeln!(
            out,
            "{} | {:.6} | {:.6} | {:.6} | {:.6}",
            fs.name, fs.mean, fs.std, fs.min, fs.max
        );
    }
    out.push('\n');

    push_spaces(&mut out, spaces);
    out.push('\n');

    push_history(&mut out, history);
    out.push('\n');

    out.push_str("## Guidance from the decision agent\n");
    if guidance.is_empty() {
        out.push_str("(none)\n");
    } else {
        let _ = writeln!(out, "{guidance}");
    }
    out.push('\n');

    out.push_str(
        "## Output contract\n\
         Respond with exactly one JSON object of this shape and nothing else:\n\
         {\"model\": \"<one of the allowed models>\", \"hyperparameters\": {<name>: <value>, ...}, \
         \"reasoning\": \"<one or two sentences>\", \"explore\": <true|false>}\n\
         Every hyperparameter must be inside its stated domain. Set \"explore\" to true when \
         trying something new and diverse, false when refining a known good configuration.\n",
    );

    ChatRequest::new(RECOMMENDER_SYSTEM, out)
}

/// Prompt asking for a verdict on the newest report. Deterministic.
pub fn render_decision_prompt(
    history: &OptimizationHistory,
    latest: &PendingTrial,
    goals: &RunGoals,
) -> ChatRequest {
    let mut out = String::new();
    let _ = writeln!(out, "## Run goals");
    let _ = writeln!(out, "target_accuracy: {:.4}", goals.target_accuracy);
    let _ = writeln!(out, "max_iterations: {}", goals.max_iterations);
    let _ = writeln!(
        out,
        "exploration_ratio_threshold: {:.4}",
        goals.exploration_ratio_threshold
    );
    let _ = writeln!(out, "min_trials: {}", goals.min_trials);
    let _ = writeln!(out, "patience: {}", goals.patience);
    out.push('\n');

    push_history(&mut out, history);
    out.push('\n');

    let _ = writeln!(out, "## Latest evaluation (trial {})", latest.trial_id);
    let _ = writeln!(
        out,
        "config: {}",
        serde_json::to_string(&latest.config).expect("config serializes")
    );
    match &latest.report.status {
        crate::evaluation::EvalStatus::Success => {
            let fold_accs: Vec<String> = latest
                .report
                .fold_metrics
                .iter()
                .map(|m| format!("{:.6}", m.accuracy))
                .collect();
            let _ = writeln!(out, "fold_accuracies: [{}]", fold_accs.join(", "));
            let _ = writeln!(out, "mean_accuracy: {:.6}", latest.report.mean_accuracy);
            let _ = writeln!(out, "mean_f1_macro: {:.6}", latest.report.mean_f1_macro);
        }
        crate::evaluation::EvalStatus::Failed { reason } => {
            let _ = writeln!(out, "status: failed ({reason})");
        }
    }
    let _ = writeln!(out, "explore_flag: {}", latest.explore_flag);
    out.push('\n');

    out.push_str(
        "## Output contract\n\
         Respond with exactly one JSON object of this shape and nothing else:\n\
         {\"verdict\": \"accept\"|\"reject\", \"next_action\": \"refine\"|\"explore\"|\"terminate\", \
         \"reason\": \"target_reached\"|\"max_iterations\"|\"exploration_satisfied\", \
         \"guidance\": \"<steering note for the recommender>\"}\n\
         Include \"reason\" only when next_action is \"terminate\". Accept the trial only if it \
         improves on the current best. Terminate only when a goal criterion is genuinely met.\n",
    );

    ChatRequest::new(DECISION_SYSTEM, out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::agents::{Decision, NextAction, TrialRecord, Verdict};
    use crate::data::builtin;
    use crate::evaluation::{EvalStatus, EvaluationReport, MetricSet};
    use crate::space::{default_space, default_spaces, ModelFamily};
    use chrono::Utc;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn record(trial_id: usize, accuracy: f64) -> TrialRecord {
        let config = default_space(ModelFamily::LogisticRegression)
            .sample(&mut ChaCha8Rng::seed_from_u64(trial_id as u64));
        TrialRecord {
            trial_id,
            config: config.clone(),
            report: EvaluationReport {
                config,
                fold_metrics: vec![MetricSet {
                    accuracy,
                    precision_macro: accuracy,
                    recall_macro: accuracy,
                    f1_macro: accuracy,
                }],
                mean_accuracy: accuracy,
                mean_f1_macro: accuracy,
                wall_time_s: 0.1,
                status: EvalStatus::Success,
            },
            decision: Decision {
                verdict: Verdict::Accept,
                next_action: NextAction::Refine,
                guidance: String::new(),
            },
            explore_flag: true,
            started_at: Utc::now(),
            ended_at: Utc::now(),
        }
    }

    fn history_of(n: usize) -> OptimizationHistory {
        let mut h = OptimizationHistory::new();
        for i in 0..n {
            h.append(record(i, 0.5 + 0.01 * i as f64)).unwrap();
        }
        h
    }

    #[test]
    fn same_inputs_render_identically() {
        let summary = builtin("iris").unwrap().summarize();
        let history = history_of(3);
        let a = render_recommender_prompt(&summary, &history, "explore", &default_spaces());
        let b = render_recommender_prompt(&summary, &history, "explore", &default_spaces());
        assert_eq!(a, b);
    }

    #[test]
    fn empty_history_says_no_trials_yet() {
        let summary = builtin("iris").unwrap().summarize();
        let prompt = render_recommender_prompt(
            &summary,
            &OptimizationHistory::new(),
            "",
            &default_spaces(),
        );
        assert!(prompt.user_message.contains("No trials yet.\n"));
    }

    #[test]
    fn history_window_keeps_last_ten() {
        let summary = builtin("iris").unwrap().summarize();
        let history = history_of(12);
        let prompt = render_recommender_prompt(&summary, &history, "", &default_spaces());
        assert!(!prompt.user_message.contains("\"trial_id\":0,"));
        assert!(!prompt.user_message.contains("\"trial_id\":1,"));
        for t in 2..12 {
            assert!(
                prompt.user_message.contains(&format!("\"trial_id\":{t},")),
                "missing trial {t}"
            );
        }
    }

    #[test]
    fn prompt_lists_domains_and_contract() {
        let summary = builtin("wine").unwrap().summarize();
        let prompt =
            render_recommender_prompt(&summary, &OptimizationHistory::new(), "", &default_spaces());
        let text = &prompt.user_message;
        assert!(text.contains("logistic_regression"));
        assert!(text.contains("random_forest"));
        assert!(text.contains("c: continuous [0.0001, 10000], log10 scale"));
        assert!(text.contains("n_estimators: integer [10, 300]"));
        assert!(text.contains("\"explore\": <true|false>"));
        assert_eq!(prompt.temperature, 0.2);
    }

    #[test]
    fn decision_prompt_shows_goals_and_latest() {
        let history = history_of(2);
        let r = record(2, 0.91);
        let latest = crate::agents::PendingTrial {
            trial_id: r.trial_id,
            config: r.config,
            report: r.report,
            explore_flag: false,
            started_at: r.started_at,
            ended_at: r.ended_at,
        };
        let prompt = render_decision_prompt(&history, &latest, &RunGoals::default());
        let text = &prompt.user_message;
        assert!(text.contains("target_accuracy: 0.9900"));
        assert!(text.contains("Latest evaluation (trial 2)"));
        assert!(text.contains("mean_accuracy: 0.910000"));
        assert!(text.contains("\"reason\""));
    }
}
