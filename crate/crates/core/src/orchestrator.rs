//! The core optimization loop: recommend, evaluate, decide, log, terminate.
//! Every step emits a flushed JSONL event, so a crash mid-run leaves a log
//! that still replays into the completed prefix of the history.

use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;
use std::time::Instant;

use chrono::{DateTime, Utc};
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::agents::{
    heuristic_decide, heuristic_recommend, termination_for, views_of, Candidate, Decision,
    DecisionAgent, OptimizationHistory, PendingTrial, Recommendation, RecommenderAgent, RunGoals,
    TerminationReason, TrialRecord,
};
use crate::data::{stratified_folds, Dataset};
use crate::evaluation::{evaluate, EvaluationReport};
use crate::space::{Configuration, ModelFamily, SearchSpace};

#[derive(Debug, thiserror::Error)]
pub enum RunError {
    #[error("invalid goals: {0}")]
    InvalidGoals(String),
    #[error("invalid run setup: {0}")]
    Setup(String),
    #[error("log write failed: {0}")]
    Log(String),
}

/// One line of the run log.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LogEvent {
    pub ts: DateTime<Utc>,
    pub run_id: String,
    pub seq: u64,
    #[serde(flatten)]
    pub body: EventBody,
}

/// Event payloads, tagged by `kind` in the serialized form.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum EventBody {
    RunStarted {
        dataset: String,
        goals: RunGoals,
        k: usize,
        seed: u64,
        families: Vec<ModelFamily>,
    },
    Recommendation {
        trial_id: usize,
        candidates: Vec<Candidate>,
        reasoning: String,
        source: String,
        attempts: u32,
        fallback: bool,
    },
    Evaluation {
        trial_id: usize,
        explore: bool,
        started_at: DateTime<Utc>,
        ended_at: DateTime<Utc>,
        report: EvaluationReport,
    },
    Decision {
        trial_id: usize,
        decision: Decision,
        source: String,
        attempts: u32,
        fallback: bool,
        /// True when the agent asked to terminate but the termination check
        /// disagreed and the run continued.
        overridden: bool,
    },
    Termination {
        reason: TerminationReason,
        best_trial: Option<usize>,
        n_trials: usize,
        total_wall_time_s: f64,
        trials_per_second: f64,
    },
}

impl EventBody {
    pub fn kind(&self) -> &'static str {
        match self {
            EventBody::RunStarted { .. } => "run_started",
            EventBody::Recommendation { .. } => "recommendation",
            EventBody::Evaluation { .. } => "evaluation",
            EventBody::Decision { .. } => "decision",
            EventBody::Termination { .. } => "termination",
        }
    }
}

/// Destination for log events. Emitting must persist the event before
/// returning; a sink failure aborts the run.
pub trait EventSink {
    fn emit(&mut self, event: &LogEvent) -> std::io::Result<()>;
}

/// JSONL file sink; every event is written as one line and flushed.
pub struct JsonlSink {
    writer: BufWriter<File>,
}

impl JsonlSink {
    pub fn create(path: impl AsRef<Path>) -> std::io::Result<Self> {
        Ok(JsonlSink {
            writer: BufWriter::new(File::create(path)?),
        })
    }
}

impl EventSink for JsonlSink {
    fn emit(&mut self, event: &LogEvent) -> std::io::Result<()> {
        let line = serde_json::to_string(event)
            .map_err(|e| std::io::Error::new(std::io::ErrorKind::InvalidData, e))?;
        writeln!(self.writer, "{line}")?;
        self.writer.flush()
    }
}

/// In-memory sink for tests and embedded use.
#[derive(Default)]
pub struct MemorySink {
    pub events: Vec<LogEvent>,
}

impl MemorySink {
    pub fn new() -> Self {
        Self::default()
    }
}

impl EventSink for MemorySink {
    fn emit(&mut self, event: &LogEvent) -> std::io::Result<()> {
        self.events.push(event.clone());
        Ok(())
    }
}

/// Final state of a completed run.
#[derive(Debug, Clone, PartialEq)]
pub struct RunResult {
    pub run_id: String,
    pub history: OptimizationHistory,
    pub best: Option<TrialRecord>,
    pub termination: TerminationReason,
    pub total_wall_time_s: f64,
    pub trials_per_second: f64,
}

/// Check the three termination criteria over the recorded history, in
/// priority order: target reached, then iteration budget, then exploration
/// satisfied.
pub fn check_termination(
    history: &OptimizationHistory,
    goals: &RunGoals,
) -> Option<TerminationReason> {
    termination_for(&views_of(history), goals)
}

struct Emitter<'a> {
    sink: &'a mut dyn EventSink,
    run_id: String,
    seq: u64,
}

impl Emitter<'_> {
    fn emit(&mut self, body: EventBody) -> Result<(), RunError> {
        let event = LogEvent {
            ts: Utc::now(),
            run_id: self.run_id.clone(),
            seq: self.seq,
            body,
        };
        self.sink
            .emit(&event)
            .map_err(|e| RunError::Log(e.to_string()))?;
        self.seq += 1;
        Ok(())
    }
}

/// Fresh run identifier: UTC timestamp plus four seed-derived hex chars.
pub fn generate_run_id(seed: u64) -> String {
    let mut rng = ChaCha8Rng::seed_from_u64(crate::seeding::derive(seed, 0xC0FFEE));
    format!(
        "{}-{:04x}",
        Utc::now().format("%Y%m%dT%H%M%SZ"),
        rng.gen_range(0u16..=0xFFFF)
    )
}

/// Run the optimization loop until a termination criterion fires.
///
/// Agent failures never abort the run: each agent gets one retry, then the
/// deterministic heuristic stands in for that step. Evaluation failures are
/// recorded as failed trials and the loop continues. Log failures abort.
#[allow(clippy::too_many_arguments)]
pub fn run(
    dataset: &Dataset,
    spaces: &[SearchSpace],
    goals: &RunGoals,
    recommender: &mut dyn RecommenderAgent,
    decider: &mut dyn DecisionAgent,
    k: usize,
    seed: u64,
    run_id: &str,
    sink: &mut dyn EventSink,
) -> Result<RunResult, RunError> {
    goals.validate().map_err(RunError::InvalidGoals)?;
    if spaces.is_empty() {
        return Err(RunError::Setup("no model families allowed".into()));
    }
    stratified_folds(dataset, k, seed).map_err(|e| RunError::Setup(e.to_string()))?;

    let run_id = run_id.to_string();
    let mut emitter = Emitter {
        sink,
        run_id: run_id.clone(),
        seq: 0,
    };

    let started = Instant::now();
    let summary = dataset.summarize();
    emitter.emit(EventBody::RunStarted {
        dataset: dataset.name().to_string(),
        goals: goals.clone(),
        k,
        seed,
        families: spaces.iter().map(|s| s.family()).collect(),
    })?;

    let mut fallback_rng =
        ChaCha8Rng::seed_from_u64(crate::seeding::derive(seed, 0xFA11BACC));
    let mut history = OptimizationHistory::new();
    let mut guidance = String::new();

    let termination = loop {
        let trial_id = history.len();

        // Recommend: primary agent with one retry, then heuristic fallback.
        let (recommendation, config, explore, source, attempts, fallback) = obtain_candidate(
            recommender,
            spaces,
            &summary,
            &history,
            &guidance,
            &mut fallback_rng,
        );
        emitter.emit(EventBody::Recommendation {
            trial_id,
            candidates: recommendation.candidates.clone(),
            reasoning: recommendation.reasoning.clone(),
            source,
            attempts,
            fallback,
        })?;

        // Evaluate.
        let started_at = Utc::now();
        let report = evaluate(dataset, &config, k, seed);
        let ended_at = Utc::now();
        emitter.emit(EventBody::Evaluation {
            trial_id,
            explore,
            started_at,
            ended_at,
            report: report.clone(),
        })?;

        let pending = PendingTrial {
            trial_id,
            config,
            report,
            explore_flag: explore,
            started_at,
            ended_at,
        };

        // Decide: same retry-then-fallback policy.
        let (decision, d_source, d_attempts, d_fallback) =
            obtain_decision(decider, &history, &pending, goals);

        history
            .append(pending.into_record(decision.clone()))
            .expect("trial ids are assigned contiguously");

        // The agent's terminate stands only when the deterministic check
        // agrees; a disagreement is logged and the run continues.
        let checked = check_termination(&history, goals);
        let overridden = decision.next_action.is_terminate() && checked.is_none();
        emitter.emit(EventBody::Decision {
            trial_id,
            decision: decision.clone(),
            source: d_source,
            attempts: d_attempts,
            fallback: d_fallback,
            overridden,
        })?;

        if let Some(reason) = checked {
            break reason;
        }
        guidance = if overridden {
            "explore".to_string()
        } else {
            decision.guidance.clone()
        };
    };

    let total_wall_time_s = started.elapsed().as_secs_f64();
    let trials_per_second = history.len() as f64 / total_wall_time_s;
    emitter.emit(EventBody::Termination {
        reason: termination,
        best_trial: history.incumbent_index(),
        n_trials: history.len(),
        total_wall_time_s,
        trials_per_second,
    })?;

    Ok(RunResult {
        run_id,
        best: history.incumbent().cloned(),
        history,
        termination,
        total_wall_time_s,
        trials_per_second,
    })
}

/// First candidate that is valid for one of the allowed spaces.
fn first_valid(
    recommendation: &Recommendation,
    spaces: &[SearchSpace],
) -> Option<(Configuration, bool)> {
    recommendation.candidates.iter().find_map(|candidate| {
        spaces
            .iter()
            .find(|s| s.family() == candidate.config.family())
            .filter(|s| s.is_valid(&candidate.config))
            .map(|_| (candidate.config.clone(), candidate.explore))
    })
}

fn obtain_candidate(
    recommender: &mut dyn RecommenderAgent,
    spaces: &[SearchSpace],
    summary: &crate::data::DatasetSummary,
    history: &OptimizationHistory,
    guidance: &str,
    fallback_rng: &mut ChaCha8Rng,
) -> (Recommendation, Configuration, bool, String, u32, bool) {
    let mut attempts = 0u32;
    for _ in 0..2 {
        attempts += 1;
        if let Ok(rec) = recommender.recommend(summary, history, guidance) {
            if let Some((config, explore)) = first_valid(&rec, spaces) {
                return (
                    rec,
                    config,
                    explore,
                    recommender.backend().to_string(),
                    attempts,
                    false,
                );
            }
        }
    }
    let rec = heuristic_recommend(spaces, summary, history, guidance, fallback_rng);
    let (config, explore) = first_valid(&rec, spaces).expect("heuristic candidates are valid");
    (
        rec,
        config,
        explore,
        "heuristic_fallback".to_string(),
        attempts + 1,
        true,
    )
}

fn obtain_decision(
    decider: &mut dyn DecisionAgent,
    history: &OptimizationHistory,
    pending: &PendingTrial,
    goals: &RunGoals,
) -> (Decision, String, u32, bool) {
    let mut attempts = 0u32;
    for _ in 0..2 {
        attempts += 1;
        if let Ok(decision) = decider.decide(history, pending, goals) {
            return (decision, decider.backend().to_string(), attempts, false);
        }
    }
    (
        heuristic_decide(history, pending, goals),
        "heuristic_fallback".to_string(),
        attempts + 1,
        true,
    )
}

// ---------------------------------------------------------------------------
// Replay.

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum ReplayError {
    #[error("cannot read log: {0}")]
    Io(String),
    #[error("malformed log line {line}: {detail}")]
    MalformedLine { line: usize, detail: String },
    #[error("missing run_started event")]
    MissingRunStarted,
    #[error("log line {line}: sequence gap (expected {expected}, got {got})")]
    SequenceGap { line: usize, expected: u64, got: u64 },
}

/// A run reconstructed from its log.
#[derive(Debug, Clone, PartialEq)]
pub struct ReplayedRun {
    pub run_id: String,
    pub dataset: String,
    pub goals: RunGoals,
    pub k: usize,
    pub seed: u64,
    pub families: Vec<ModelFamily>,
    pub history: OptimizationHistory,
    /// None when the log is truncated before its termination event.
    pub termination: Option<TerminationReason>,
}

impl ReplayedRun {
    pub fn is_complete(&self) -> bool {
        self.termination.is_some()
    }
}

struct PendingEvaluation {
    trial_id: usize,
    explore: bool,
    started_at: DateTime<Utc>,
    ended_at: DateTime<Utc>,
    report: EvaluationReport,
}

/// Rebuild the history from a JSONL run log. Truncated tails (dangling
/// recommendation or evaluation events, missing termination) reconstruct the
/// completed prefix and mark the run incomplete.
pub fn replay(path: impl AsRef<Path>) -> Result<ReplayedRun, ReplayError> {
    let file = File::open(path.as_ref()).map_err(|e| ReplayError::Io(e.to_string()))?;
    let mut run: Option<ReplayedRun> = None;
    let mut pending: Option<PendingEvaluation> = None;
    let mut expected_seq = 0u64;

    for (idx, line) in BufReader::new(file).lines().enumerate() {
        let lineno = idx + 1;
        let line = line.map_err(|e| ReplayError::Io(e.to_string()))?;
        if line.trim().is_empty() {
            continue;
        }
        let event: LogEvent =
            serde_json::from_str(&line).map_err(|e| ReplayError::MalformedLine {
                line: lineno,
                detail: e.to_string(),
            })?;
        if event.seq != expected_seq {
            return Err(ReplayError::SequenceGap {
                line: lineno,
                expected: expected_seq,
                got: event.seq,
            });
        }
        expected_seq += 1;

        match event.body {
            EventBody::RunStarted {
                dataset,
                goals,
                k,
                seed,
                families,
            } => {
                if run.is_some() {
                    return Err(ReplayError::MalformedLine {
                        line: lineno,
                        detail: "duplicate run_started".to_string(),
                    });
                }
                run = Some(ReplayedRun {
                    run_id: event.run_id,
                    dataset,
                    goals,
                    k,
                    seed,
                    families,
                    history: OptimizationHistory::new(),
                    termination: None,
                });
            }
            EventBody::Recommendation { .. } => {
                run.as_ref().ok_or(ReplayError::MissingRunStarted)?;
            }
            EventBody::Evaluation {
                trial_id,
                explore,
                started_at,
                ended_at,
                report,
            } => {
                run.as_ref().ok_or(ReplayError::MissingRunStarted)?;
                pending = Some(PendingEvaluation {
                    trial_id,
                    explore,
                    started_at,
                    ended_at,
                    report,
                });
            }
            EventBody::Decision {
                trial_id, decision, ..
            } => {
                let run = run.as_mut().ok_or(ReplayError::MissingRunStarted)?;
                let Some(eval) = pending.take() else {
                    return Err(ReplayError::MalformedLine {
                        line: lineno,
                        detail: "decision without a preceding evaluation".to_string(),
                    });
                };
                if eval.trial_id != trial_id {
                    return Err(ReplayError::MalformedLine {
                        line: lineno,
                        detail: format!(
                            "decision for trial {trial_id} after evaluation of trial {}",
                            eval.trial_id
                        ),
                    });
                }
                let record = TrialRecord {
                    trial_id,
                    config: eval.report.config.clone(),
                    report: eval.report,
                    decision,
                    explore_flag: eval.explore,
                    started_at: eval.started_at,
                    ended_at: eval.ended_at,
                };
                run.history
                    .append(record)
                    .map_err(|e| ReplayError::MalformedLine {
                        line: lineno,
                        detail: e.to_string(),
                    })?;
            }
            EventBody::Termination { reason, .. } => {
                let run = run.as_mut().ok_or(ReplayError::MissingRunStarted)?;
                run.termination = Some(reason);
            }
        }
    }

    run.ok_or(ReplayError::MissingRunStarted)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::agents::{AgentError, HeuristicDecider, HeuristicRecommender};
    use crate::data::builtin;
    use crate::space::default_spaces;

    fn quick_goals() -> RunGoals {
        RunGoals {
            target_accuracy: 0.5,
            max_iterations: 3,
            ..RunGoals::default()
        }
    }

    #[test]
    fn low_target_terminates_on_first_trial() {
        let ds = builtin("iris").unwrap();
        let spaces = default_spaces();
        let mut recommender = HeuristicRecommender::new(spaces.clone(), 0);
        let mut decider = HeuristicDecider;
        let mut sink = MemorySink::new();
        let result = run(
            &ds,
            &spaces,
            &quick_goals(),
            &mut recommender,
            &mut decider,
            5,
            0,
            "test-run",
            &mut sink,
        )
        .unwrap();
        assert_eq!(result.termination, TerminationReason::TargetReached);
        assert_eq!(result.history.len(), 1);
        assert!(result.best.unwrap().report.mean_accuracy > 0.5);
    }

    #[test]
    fn max_iterations_one_runs_exactly_one_trial() {
        let ds = builtin("iris").unwrap();
        let spaces = default_spaces();
        let goals = RunGoals {
            target_accuracy: 0.9999,
            max_iterations: 1,
            min_trials: 1,
            ..RunGoals::default()
        };
        let mut recommender = HeuristicRecommender::new(spaces.clone(), 1);
        let mut decider = HeuristicDecider;
        let mut sink = MemorySink::new();
        let result = run(
            &ds,
            &spaces,
            &goals,
            &mut recommender,
            &mut decider,
            5,
            1,
            "test-run",
            &mut sink,
        )
        .unwrap();
        assert_eq!(result.history.len(), 1);
        assert!(matches!(
            result.termination,
            TerminationReason::MaxIterations | TerminationReason::TargetReached
        ));
    }

    struct AlwaysFailing;

    impl RecommenderAgent for AlwaysFailing {
        fn recommend(
            &mut self,
            _summary: &crate::data::DatasetSummary,
            _history: &OptimizationHistory,
            _guidance: &str,
        ) -> Result<crate::agents::Recommendation, AgentError> {
            Err(AgentError::Transport("nope".into()))
        }

        fn backend(&self) -> &'static str {
            "always_failing"
        }
    }

    #[test]
    fn failing_recommender_falls_back_to_heuristic() {
        let ds = builtin("iris").unwrap();
        let spaces = default_spaces();
        let mut recommender = AlwaysFailing;
        let mut decider = HeuristicDecider;
        let mut sink = MemorySink::new();
        let result = run(
            &ds,
            &spaces,
            &quick_goals(),
            &mut recommender,
            &mut decider,
            5,
            0,
            "test-run",
            &mut sink,
        )
        .unwrap();
        assert!(!result.history.is_empty());
        let rec_events: Vec<_> = sink
            .events
            .iter()
            .filter_map(|e| match &e.body {
                EventBody::Recommendation {
                    fallback, attempts, ..
                } => Some((*fallback, *attempts)),
                _ => None,
            })
            .collect();
        assert!(rec_events.iter().all(|(fallback, attempts)| *fallback && *attempts == 3));
    }

    #[test]
    fn all_malformed_llm_output_never_deadlocks() {
        use crate::gateway::{LlmDecider, LlmRecommender, ScriptedTransport};
        let garbage = |n: usize| {
            ScriptedTransport::new(
                (0..n)
                    .map(|i| Ok(format!("reply {i} with no structure at all")))
                    .collect(),
            )
        };
        let ds = builtin("iris").unwrap();
        let spaces = default_spaces();
        let goals = RunGoals {
            target_accuracy: 0.999,
            max_iterations: 3,
            min_trials: 1,
            ..RunGoals::default()
        };
        let mut recommender = LlmRecommender::new(garbage(20), spaces.clone());
        let mut decider = LlmDecider::new(garbage(20));
        let mut sink = MemorySink::new();
        let result = run(
            &ds,
            &spaces,
            &goals,
            &mut recommender,
            &mut decider,
            5,
            4,
            "fallback-run",
            &mut sink,
        )
        .unwrap();
        assert_eq!(result.history.len(), 3);
        for event in &sink.events {
            match &event.body {
                EventBody::Recommendation { fallback, .. }
                | EventBody::Decision { fallback, .. } => assert!(fallback),
                _ => {}
            }
        }
    }

    #[test]
    fn events_are_contiguous_and_ordered() {
        let ds = builtin("wine").unwrap();
        let spaces = default_spaces();
        let goals = RunGoals {
            target_accuracy: 0.9999,
            max_iterations: 3,
            min_trials: 1,
            ..RunGoals::default()
        };
        let mut recommender = HeuristicRecommender::new(spaces.clone(), 5);
        let mut decider = HeuristicDecider;
        let mut sink = MemorySink::new();
        run(
            &ds,
            &spaces,
            &goals,
            &mut recommender,
            &mut decider,
            5,
            5,
            "test-run",
            &mut sink,
        )
        .unwrap();

        for (i, event) in sink.events.iter().enumerate() {
            assert_eq!(event.seq, i as u64);
        }
        assert_eq!(sink.events.first().unwrap().body.kind(), "run_started");
        assert_eq!(sink.events.last().unwrap().body.kind(), "termination");
        let kinds: Vec<&str> = sink.events.iter().map(|e| e.body.kind()).collect();
        for trial_chunk in kinds[1..kinds.len() - 1].chunks(3) {
            assert_eq!(trial_chunk, ["recommendation", "evaluation", "decision"]);
        }
    }

    #[test]
    fn check_termination_empty_history_is_none() {
        assert_eq!(
            check_termination(&OptimizationHistory::new(), &RunGoals::default()),
            None
        );
    }

    #[test]
    fn replay_roundtrips_run_history() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("run.jsonl");
        let ds = builtin("iris").unwrap();
        let spaces = default_spaces();
        let goals = RunGoals {
            target_accuracy: 0.98,
            max_iterations: 4,
            min_trials: 1,
            ..RunGoals::default()
        };
        let mut recommender = HeuristicRecommender::new(spaces.clone(), 2);
        let mut decider = HeuristicDecider;
        let mut sink = JsonlSink::create(&path).unwrap();
        let result = run(
            &ds,
            &spaces,
            &goals,
            &mut recommender,
            &mut decider,
            5,
            2,
            "test-run",
            &mut sink,
        )
        .unwrap();

        let replayed = replay(&path).unwrap();
        assert!(replayed.is_complete());
        assert_eq!(replayed.termination, Some(result.termination));
        assert_eq!(replayed.goals, goals);
        assert_eq!(replayed.history, result.history);
        assert_eq!(replayed.k, 5);
        assert_eq!(replayed.seed, 2);
    }

    #[test]
    fn truncated_log_replays_as_incomplete() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("run.jsonl");
        let ds = builtin("iris").unwrap();
        let spaces = default_spaces();
        let mut recommender = HeuristicRecommender::new(spaces.clone(), 3);
        let mut decider = HeuristicDecider;
        let mut sink = JsonlSink::create(&path).unwrap();
        let result = run(
            &ds,
            &spaces,
            &quick_goals(),
            &mut recommender,
            &mut decider,
            5,
            3,
            "test-run",
            &mut sink,
        )
        .unwrap();

        // Drop the termination line.
        let text = std::fs::read_to_string(&path).unwrap();
        let mut lines: Vec<&str> = text.lines().collect();
        assert!(lines.last().unwrap().contains("termination"));
        lines.pop();
        std::fs::write(&path, lines.join("\n")).unwrap();

        let replayed = replay(&path).unwrap();
        assert!(!replayed.is_complete());
        assert_eq!(replayed.history, result.history);
    }

    #[test]
    fn empty_log_is_missing_run_started() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("empty.jsonl");
        std::fs::write(&path, "").unwrap();
        assert_eq!(replay(&path), Err(ReplayError::MissingRunStarted));
    }

    #[test]
    fn malformed_line_reports_line_number() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("bad.jsonl");
        std::fs::write(&path, "this is not json\n").unwrap();
        match replay(&path) {
            Err(ReplayError::MalformedLine { line, .. }) => assert_eq!(line, 1),
            other => panic!("expected malformed line, got {other:?}"),
        }
    }

    #[test]
    fn newlines_in_reasoning_stay_on_one_line() {
        let event = LogEvent {
            ts: Utc::now(),
            run_id: "r".into(),
            seq: 0,
            body: EventBody::Recommendation {
                trial_id: 0,
                candidates: vec![],
                reasoning: "line one\nline two".into(),
                source: "llm".into(),
                attempts: 1,
                fallback: false,
            },
        };
        let line = serde_json::to_string(&event).unwrap();
        assert!(!line.contains('\n'));
        let back: LogEvent = serde_json::from_str(&line).unwrap();
        assert_eq!(back, event);
    }
}
