//! Provider-agnostic chat-completion transport with prompt rendering and
//! strict structured-output parsing. A scripted mock and a record/replay
//! decorator keep every test offline.

mod parse;
mod prompts;
mod replay;
mod transport;

pub use parse::{parse_decision, parse_recommendation, ParseError};
pub use prompts::{render_decision_prompt, render_recommender_prompt};
pub use replay::{RecordingTransport, ReplayTransport};
pub use transport::{
    live_transport, CallFailure, ChatTransport, Clock, HttpChat, MockClock, RawChat,
    ResilientTransport, ScriptedRaw, ScriptedTransport, SystemClock,
};

use serde::{Deserialize, Serialize};

use crate::agents::{
    AgentError, Decision, DecisionAgent, OptimizationHistory, PendingTrial, Recommendation,
    RecommenderAgent, RunGoals,
};
use crate::data::DatasetSummary;
use crate::space::SearchSpace;

/// Default name of the environment variable holding the API key.
pub const DEFAULT_API_KEY_ENV: &str = "OPTIMIND_API_KEY";

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum GatewayError {
    #[error("missing API key: environment variable {0} is not set")]
    MissingApiKey(String),
    #[error("transport failed after {attempts} attempts: {last_error}")]
    Exhausted { attempts: u32, last_error: String },
    #[error("chat call failed: {0}")]
    Call(String),
    #[error("no recorded response for request hash {0}")]
    NoRecordedResponse(String),
    #[error("replay store error: {0}")]
    Store(String),
}

/// One chat-completion request: a system prompt plus a single user message.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChatRequest {
    pub system_prompt: String,
    pub user_message: String,
    pub temperature: f64,
    pub max_output_tokens: u32,
}

impl ChatRequest {
    pub fn new(system_prompt: impl Into<String>, user_message: impl Into<String>) -> Self {
        ChatRequest {
            system_prompt: system_prompt.into(),
            user_message: user_message.into(),
            temperature: 0.2,
            max_output_tokens: 1024,
        }
    }

    /// SHA-256 of the canonical JSON serialization; the record/replay key.
    pub fn sha256(&self) -> String {
        use sha2::{Digest, Sha256};
        let json = serde_json::to_string(self).expect("ChatRequest always serializes");
        let digest = Sha256::digest(json.as_bytes());
        let mut hex = String::with_capacity(64);
        for byte in digest {
            hex.push_str(&format!("{byte:02x}"));
        }
        hex
    }
}

/// Settings for a live chat endpoint (any OpenAI-compatible shape).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TransportConfig {
    pub endpoint_url: String,
    pub model_name: String,
    pub api_key_env_var: String,
    pub timeout_s: f64,
    pub max_retries: u32,
    pub min_request_interval_s: f64,
}

impl Default for TransportConfig {
    fn default() -> Self {
        TransportConfig {
            endpoint_url:
                "https://generativelanguage.googleapis.com/v1beta/openai/chat/completions"
                    .to_string(),
            model_name: "gemini-2.0-flash".to_string(),
            api_key_env_var: DEFAULT_API_KEY_ENV.to_string(),
            timeout_s: 30.0,
            max_retries: 3,
            min_request_interval_s: 0.5,
        }
    }
}

impl TransportConfig {
    pub fn validate(&self) -> Result<(), String> {
        if !self.timeout_s.is_finite() || self.timeout_s <= 0.0 {
            return Err(format!("timeout_s must be > 0, got {}", self.timeout_s));
        }
        if self.min_request_interval_s < 0.0 {
            return Err("min_request_interval_s must be >= 0".into());
        }
        Ok(())
    }
}

/// Recommender that renders a prompt, calls the transport, and parses the
/// structured reply. Parse and transport failures surface as typed agent
/// errors; the orchestrator retries once and then falls back to the
/// heuristic recommender.
pub struct LlmRecommender<T: ChatTransport> {
    transport: T,
    spaces: Vec<SearchSpace>,
}

impl<T: ChatTransport> LlmRecommender<T> {
    pub fn new(transport: T, spaces: Vec<SearchSpace>) -> Self {
        LlmRecommender { transport, spaces }
    }
}

impl<T: ChatTransport> RecommenderAgent for LlmRecommender<T> {
    fn recommend(
        &mut self,
        summary: &DatasetSummary,
        history: &OptimizationHistory,
        guidance: &str,
    ) -> Result<Recommendation, AgentError> {
        let request = render_recommender_prompt(summary, history, guidance, &self.spaces);
        let text = self
            .transport
            .complete(&request)
            .map_err(|e| AgentError::Transport(e.to_string()))?;
        parse_recommendation(&text).map_err(|e| AgentError::Parse(e.to_string()))
    }

    fn backend(&self) -> &'static str {
        "llm"
    }
}

/// Decision agent over the same transport; falls back analogously.
pub struct LlmDecider<T: ChatTransport> {
    transport: T,
}

impl<T: ChatTransport> LlmDecider<T> {
    pub fn new(transport: T) -> Self {
        LlmDecider { transport }
    }
}

impl<T: ChatTransport> DecisionAgent for LlmDecider<T> {
    fn decide(
        &mut self,
        history: &OptimizationHistory,
        latest: &PendingTrial,
        goals: &RunGoals,
    ) -> Result<Decision, AgentError> {
        let request = render_decision_prompt(history, latest, goals);
        let text = self
            .transport
            .complete(&request)
            .map_err(|e| AgentError::Transport(e.to_string()))?;
        parse_decision(&text).map_err(|e| AgentError::Parse(e.to_string()))
    }

    fn backend(&self) -> &'static str {
        "llm"
    }
}
