//! Typed messages and interfaces for the three agent roles, plus
//! deterministic heuristic implementations of the recommender and decision
//! agents used for offline runs and CI.

use std::fmt;

use chrono::{DateTime, Utc};
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::data::DatasetSummary;
use crate::evaluation::EvaluationReport;
use crate::space::{Configuration, ParamDomain, ParamValue, SearchSpace};
use crate::stats::norm_ppf;

/// Why an optimization run stopped.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TerminationReason {
    TargetReached,
    MaxIterations,
    ExplorationSatisfied,
}

impl fmt::Display for TerminationReason {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            TerminationReason::TargetReached => "target_reached",
            TerminationReason::MaxIterations => "max_iterations",
            TerminationReason::ExplorationSatisfied => "exploration_satisfied",
        };
        f.write_str(s)
    }
}

impl std::str::FromStr for TerminationReason {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "target_reached" => Ok(TerminationReason::TargetReached),
            "max_iterations" => Ok(TerminationReason::MaxIterations),
            "exploration_satisfied" => Ok(TerminationReason::ExplorationSatisfied),
            other => Err(format!("unknown termination reason {other:?}")),
        }
    }
}

/// Optimization goals and budgets for a run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunGoals {
    pub target_accuracy: f64,
    pub max_iterations: usize,
    pub exploration_ratio_threshold: f64,
    pub min_trials: usize,
    /// No-improvement window, in trials.
    pub patience: usize,
}

impl RunGoals {
    pub fn validate(&self) -> Result<(), String> {
        if !(self.target_accuracy > 0.0 && self.target_accuracy <= 1.0) {
            return Err(format!(
                "target_accuracy must be in (0, 1], got {}",
                self.target_accuracy
            ));
        }
        if self.max_iterations < 1 {
            return Err("max_iterations must be >= 1".into());
        }
        if !(0.0..=1.0).contains(&self.exploration_ratio_threshold) {
            return Err(format!(
                "exploration_ratio_threshold must be in [0, 1], got {}",
                self.exploration_ratio_threshold
            ));
        }
        if self.min_trials < 1 {
            return Err("min_trials must be >= 1".into());
        }
        if self.patience < 1 {
            return Err("patience must be >= 1".into());
        }
        if self.min_trials > self.max_iterations {
            return Err(format!(
                "min_trials ({}) must not exceed max_iterations ({})",
                self.min_trials, self.max_iterations
            ));
        }
        Ok(())
    }
}

impl Default for RunGoals {
    fn default() -> Self {
        RunGoals {
            target_accuracy: 0.99,
            max_iterations: 10,
            exploration_ratio_threshold: 0.9,
            min_trials: 3,
            patience: 3,
        }
    }
}

/// Accept/reject verdict on the latest trial.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Verdict {
    Accept,
    Reject,
}

/// What the decision agent wants the loop to do next.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum NextAction {
    Refine,
    Explore,
    Terminate(TerminationReason),
}

impl NextAction {
    pub fn is_terminate(&self) -> bool {
        matches!(self, NextAction::Terminate(_))
    }
}

/// A decision-agent message: verdict on the latest trial plus steering for
/// the recommender.
#[derive(Debug, Clone, PartialEq)]
pub struct Decision {
    pub verdict: Verdict,
    pub next_action: NextAction,
    pub guidance: String,
}

#[derive(Serialize, Deserialize)]
struct DecisionWire {
    verdict: Verdict,
    next_action: String,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    reason: Option<TerminationReason>,
    guidance: String,
}

impl Serialize for Decision {
    fn serialize<S: serde::Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        let (next_action, reason) = match self.next_action {
            NextAction::Refine => ("refine", None),
            NextAction::Explore => ("explore", None),
            NextAction::Terminate(r) => ("terminate", Some(r)),
        };
        DecisionWire {
            verdict: self.verdict,
            next_action: next_action.to_string(),
            reason,
            guidance: self.guidance.clone(),
        }
        .serialize(serializer)
    }
}

impl<'de> Deserialize<'de> for Decision {
    fn deserialize<D: serde::Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let wire = DecisionWire::deserialize(deserializer)?;
        let next_action = match wire.next_action.as_str() {
            "refine" => NextAction::Refine,
            "explore" => NextAction::Explore,
            "terminate" => NextAction::Terminate(wire.reason.ok_or_else(|| {
                serde::de::Error::custom("terminate requires a termination reason")
            })?),
            other => {
                return Err(serde::de::Error::custom(format!(
                    "unknown next_action {other:?}"
                )))
            }
        };
        Ok(Decision {
            verdict: wire.verdict,
            next_action,
            guidance: wire.guidance,
        })
    }
}

/// One proposed configuration with the recommender's exploration intent.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Candidate {
    pub config: Configuration,
    pub explore: bool,
}

/// A recommender-agent message: 1 to 3 candidates with reasoning.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Recommendation {
    pub candidates: Vec<Candidate>,
    pub reasoning: String,
}

impl Recommendation {
    pub fn new(candidates: Vec<Candidate>, reasoning: impl Into<String>) -> Result<Self, AgentError> {
        if candidates.is_empty() || candidates.len() > 3 {
            return Err(AgentError::Invalid(format!(
                "expected 1-3 candidates, got {}",
                candidates.len()
            )));
        }
        Ok(Recommendation {
            candidates,
            reasoning: reasoning.into(),
        })
    }
}

/// One evaluated configuration with its report and decision.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrialRecord {
    pub trial_id: usize,
    pub config: Configuration,
    pub report: EvaluationReport,
    pub decision: Decision,
    pub explore_flag: bool,
    pub started_at: DateTime<Utc>,
    pub ended_at: DateTime<Utc>,
}

/// An evaluated trial awaiting its decision; becomes a [`TrialRecord`] once
/// the decision agent has spoken.
#[derive(Debug, Clone, PartialEq)]
pub struct PendingTrial {
    pub trial_id: usize,
    pub config: Configuration,
    pub report: EvaluationReport,
    pub explore_flag: bool,
    pub started_at: DateTime<Utc>,
    pub ended_at: DateTime<Utc>,
}

impl PendingTrial {
    pub fn into_record(self, decision: Decision) -> TrialRecord {
        TrialRecord {
            trial_id: self.trial_id,
            config: self.config,
            report: self.report,
            decision,
            explore_flag: self.explore_flag,
            started_at: self.started_at,
            ended_at: self.ended_at,
        }
    }
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum HistoryError {
    #[error("trial_id {got} out of order; expected {expected}")]
    OutOfOrder { expected: usize, got: usize },
}

/// Append-only log of all past trials, the collective memory shared by every
/// agent. Tracks the incumbent: the best successful trial by mean accuracy,
/// earliest on ties.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct OptimizationHistory {
    records: Vec<TrialRecord>,
    incumbent: Option<usize>,
}

impl OptimizationHistory {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn append(&mut self, record: TrialRecord) -> Result<(), HistoryError> {
        if record.trial_id != self.records.len() {
            return Err(HistoryError::OutOfOrder {
                expected: self.records.len(),
                got: record.trial_id,
            });
        }
        let improved = record.report.status.is_success()
            && self
                .incumbent
                .is_none_or(|i| record.report.mean_accuracy > self.records[i].report.mean_accuracy);
        self.records.push(record);
        if improved {
            self.incumbent = Some(self.records.len() - 1);
        }
        Ok(())
    }

    pub fn records(&self) -> &[TrialRecord] {
        &self.records
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    pub fn incumbent_index(&self) -> Option<usize> {
        self.incumbent
    }

    pub fn incumbent(&self) -> Option<&TrialRecord> {
        self.incumbent.map(|i| &self.records[i])
    }

    /// Best successful mean accuracy so far.
    pub fn best_accuracy(&self) -> Option<f64> {
        self.incumbent().map(|r| r.report.mean_accuracy)
    }
}

/// Fraction of trials the recommender flagged as exploratory; 0 for an empty
/// history.
pub fn exploration_ratio(history: &OptimizationHistory) -> f64 {
    if history.is_empty() {
        return 0.0;
    }
    let explored = history.records().iter().filter(|r| r.explore_flag).count();
    explored as f64 / history.len() as f64
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum AgentError {
    #[error("transport failure: {0}")]
    Transport(String),
    #[error("unparseable agent output: {0}")]
    Parse(String),
    #[error("invalid agent output: {0}")]
    Invalid(String),
}

/// Proposes configurations from dataset characteristics and history.
pub trait RecommenderAgent {
    fn recommend(
        &mut self,
        summary: &DatasetSummary,
        history: &OptimizationHistory,
        guidance: &str,
    ) -> Result<Recommendation, AgentError>;

    /// Short label used in log events ("heuristic", "llm", ...).
    fn backend(&self) -> &'static str;
}

/// Judges the latest trial and steers or terminates the loop.
pub trait DecisionAgent {
    fn decide(
        &mut self,
        history: &OptimizationHistory,
        latest: &PendingTrial,
        goals: &RunGoals,
    ) -> Result<Decision, AgentError>;

    fn backend(&self) -> &'static str;
}

// ---------------------------------------------------------------------------
// Shared termination rule.
//
// The decision agent judges the run state *including* the trial it is
// deciding on, while the orchestrator re-checks after the record is appended.
// Both paths reduce to this view so they always agree.

pub(crate) struct TrialView {
    pub success: bool,
    pub mean_accuracy: f64,
    pub explore: bool,
}

impl TrialView {
    fn of_record(r: &TrialRecord) -> TrialView {
        TrialView {
            success: r.report.status.is_success(),
            mean_accuracy: r.report.mean_accuracy,
            explore: r.explore_flag,
        }
    }

    fn of_pending(p: &PendingTrial) -> TrialView {
        TrialView {
            success: p.report.status.is_success(),
            mean_accuracy: p.report.mean_accuracy,
            explore: p.explore_flag,
        }
    }
}

pub(crate) fn views_of(history: &OptimizationHistory) -> Vec<TrialView> {
    history.records().iter().map(TrialView::of_record).collect()
}

fn best_accuracy(views: &[TrialView]) -> Option<f64> {
    views
        .iter()
        .filter(|v| v.success)
        .map(|v| v.mean_accuracy)
        .fold(None, |acc, v| Some(acc.map_or(v, |a: f64| a.max(v))))
}

/// Whether any of the last `patience` trials improved on the best accuracy
/// seen before it.
fn improved_in_window(views: &[TrialView], patience: usize) -> bool {
    let start = views.len().saturating_sub(patience);
    for t in start..views.len() {
        if !views[t].success {
            continue;
        }
        let prior_best = best_accuracy(&views[..t]);
        if prior_best.is_none_or(|b| views[t].mean_accuracy > b) {
            return true;
        }
    }
    false
}

/// Termination check over a sequence of trial views, in priority order:
/// target reached, then iteration budget, then exploration satisfied.
pub(crate) fn termination_for(views: &[TrialView], goals: &RunGoals) -> Option<TerminationReason> {
    if best_accuracy(views).is_some_and(|b| b >= goals.target_accuracy) {
        return Some(TerminationReason::TargetReached);
    }
    if views.len() >= goals.max_iterations {
        return Some(TerminationReason::MaxIterations);
    }
    if !views.is_empty() {
        let ratio = views.iter().filter(|v| v.explore).count() as f64 / views.len() as f64;
        if views.len() >= goals.min_trials
            && ratio >= goals.exploration_ratio_threshold
            && !improved_in_window(views, goals.patience)
        {
            return Some(TerminationReason::ExplorationSatisfied);
        }
    }
    None
}

// ---------------------------------------------------------------------------
// Heuristic agents.

/// Deterministic recommendation rule:
/// - trials 0 and 1 sample each allowed family in fixed order (explore);
/// - if the guidance asks to explore or there is no incumbent, sample the
///   least recently tried family (explore);
/// - otherwise perturb the incumbent with sigma = 0.1 Gaussian noise in
///   normalized space, clipped to the domain; categorical values are
///   re-sampled with probability 0.1 (exploit).
pub fn heuristic_recommend<R: Rng>(
    spaces: &[SearchSpace],
    _summary: &DatasetSummary,
    history: &OptimizationHistory,
    guidance: &str,
    rng: &mut R,
) -> Recommendation {
    assert!(!spaces.is_empty(), "need at least one allowed search space");
    let n = history.len();

    if n < 2 {
        let space = &spaces[n % spaces.len()];
        let config = space.sample(rng);
        return Recommendation {
            reasoning: format!("startup: sampling family {}", space.family()),
            candidates: vec![Candidate {
                config,
                explore: true,
            }],
        };
    }

    let incumbent = history.incumbent();
    if guidance.contains("explore") || incumbent.is_none() {
        let space = least_recently_tried(spaces, history);
        let config = space.sample(rng);
        return Recommendation {
            reasoning: format!(
                "explore: sampling least recently tried family {}",
                space.family()
            ),
            candidates: vec![Candidate {
                config,
                explore: true,
            }],
        };
    }

    let incumbent = incumbent.expect("checked above");
    let space = spaces
        .iter()
        .find(|s| s.family() == incumbent.config.family())
        .expect("incumbent family is always among the allowed spaces");
    let config = perturb(space, &incumbent.config, 0.1, rng);
    Recommendation {
        reasoning: format!("exploit: perturbing incumbent trial {}", incumbent.trial_id),
        candidates: vec![Candidate {
            config,
            explore: false,
        }],
    }
}

fn least_recently_tried<'a>(
    spaces: &'a [SearchSpace],
    history: &OptimizationHistory,
) -> &'a SearchSpace {
    let mut best: Option<(&SearchSpace, Option<usize>)> = None;
    for space in spaces {
        let last_seen = history
            .records()
            .iter()
            .rposition(|r| r.config.family() == space.family());
        let stale_beats = match (&best, &last_seen) {
            (None, _) => true,
            (Some((_, None)), _) => false, // a never-tried family already leads
            (Some((_, Some(_))), None) => true,
            (Some((_, Some(cur))), Some(new)) => new < cur,
        };
        if stale_beats {
            best = Some((space, last_seen));
        }
    }
    best.expect("spaces is non-empty").0
}

/// Gaussian perturbation of a configuration in normalized space.
fn perturb<R: Rng>(
    space: &SearchSpace,
    base: &Configuration,
    sigma: f64,
    rng: &mut R,
) -> Configuration {
    let values = space
        .params()
        .iter()
        .map(|(name, domain)| {
            let current = base.get(name).expect("base validates against space");
            let value = match domain {
                ParamDomain::Categorical { choices } => {
                    if rng.gen_range(0.0..1.0) < 0.1 {
                        ParamValue::Text(choices[rng.gen_range(0..choices.len())].clone())
                    } else {
                        current.clone()
                    }
                }
                _ => {
                    let t = domain.normalize(current).expect("numeric domain");
                    let z = norm_ppf(rng.gen_range(0.0..1.0));
                    domain.denormalize(t + sigma * z)
                }
            };
            (name.clone(), value)
        })
        .collect();
    Configuration::new(base.family(), values)
}

/// Deterministic decision rule. Accept iff the latest trial succeeded and
/// beats the incumbent; terminate per [`termination_for`] over the history
/// including the latest trial; otherwise explore after `patience` trials
/// without improvement, else refine.
pub fn heuristic_decide(
    history: &OptimizationHistory,
    latest: &PendingTrial,
    goals: &RunGoals,
) -> Decision {
    let accept = latest.report.status.is_success()
        && history
            .best_accuracy()
            .is_none_or(|b| latest.report.mean_accuracy > b);
    let verdict = if accept { Verdict::Accept } else { Verdict::Reject };

    let mut views = views_of(history);
    views.push(TrialView::of_pending(latest));

    if let Some(reason) = termination_for(&views, goals) {
        return Decision {
            verdict,
            next_action: NextAction::Terminate(reason),
            guidance: String::new(),
        };
    }

    if improved_in_window(&views, goals.patience) {
        Decision {
            verdict,
            next_action: NextAction::Refine,
            guidance: "refine incumbent".to_string(),
        }
    } else {
        Decision {
            verdict,
            next_action: NextAction::Explore,
            guidance: "explore".to_string(),
        }
    }
}

/// [`RecommenderAgent`] backed by [`heuristic_recommend`] with its own seeded
/// RNG stream.
pub struct HeuristicRecommender {
    spaces: Vec<SearchSpace>,
    rng: rand_chacha::ChaCha8Rng,
}

impl HeuristicRecommender {
    pub fn new(spaces: Vec<SearchSpace>, seed: u64) -> Self {
        use rand::SeedableRng;
        HeuristicRecommender {
            spaces,
            rng: rand_chacha::ChaCha8Rng::seed_from_u64(seed),
        }
    }
}

impl RecommenderAgent for HeuristicRecommender {
    fn recommend(
        &mut self,
        summary: &DatasetSummary,
        history: &OptimizationHistory,
        guidance: &str,
    ) -> Result<Recommendation, AgentError> {
        Ok(heuristic_recommend(
            &self.spaces,
            summary,
            history,
            guidance,
            &mut self.rng,
        ))
    }

    fn backend(&self) -> &'static str {
        "heuristic"
    }
}

/// [`DecisionAgent`] backed by [`heuristic_decide`].
#[derive(Default)]
pub struct HeuristicDecider;

impl DecisionAgent for HeuristicDecider {
    fn decide(
        &mut self,
        history: &OptimizationHistory,
        latest: &PendingTrial,
        goals: &RunGoals,
    ) -> Result<Decision, AgentError> {
        Ok(heuristic_decide(history, latest, goals))
    }

    fn backend(&self) -> &'static str {
        "heuristic"
    }
}
