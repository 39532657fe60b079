//! Transport layer: the `ChatTransport` trait, a resilient wrapper adding
//! retries with exponential backoff and a minimum request interval, the live
//! HTTP client, and scripted mocks for offline tests.

use std::cell::RefCell;
use std::collections::VecDeque;
use std::rc::Rc;
use std::time::Instant;

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::{ChatRequest, GatewayError, TransportConfig};

/// Anything that can answer a chat request with raw model text.
pub trait ChatTransport {
    fn complete(&mut self, request: &ChatRequest) -> Result<String, GatewayError>;
}

/// Low-level single attempt; the resilient wrapper turns this into a
/// retrying [`ChatTransport`].
pub trait RawChat {
    fn send(&mut self, request: &ChatRequest) -> Result<String, CallFailure>;
}

/// Failure classification for one attempt.
#[derive(Debug, Clone, PartialEq)]
pub enum CallFailure {
    /// Timeouts, connection errors, 429 and 5xx responses.
    Retryable(String),
    /// Anything else; retrying will not help.
    Fatal(String),
}

/// Clock abstraction so backoff and rate limiting are testable without
/// real sleeps.
pub trait Clock {
    /// Seconds since an arbitrary fixed origin.
    fn now(&self) -> f64;
    fn sleep(&self, seconds: f64);
}

/// Wall clock.
pub struct SystemClock {
    origin: Instant,
}

impl SystemClock {
    pub fn new() -> Self {
        SystemClock {
            origin: Instant::now(),
        }
    }
}

impl Default for SystemClock {
    fn default() -> Self {
        Self::new()
    }
}

impl Clock for SystemClock {
    fn now(&self) -> f64 {
        self.origin.elapsed().as_secs_f64()
    }

    fn sleep(&self, seconds: f64) {
        if seconds > 0.0 {
            std::thread::sleep(std::time::Duration::from_secs_f64(seconds));
        }
    }
}

/// Simulated clock; `sleep` advances time instantly.
#[derive(Clone, Default)]
pub struct MockClock {
    now: Rc<RefCell<f64>>,
}

impl MockClock {
    pub fn new() -> Self {
        Self::default()
    }
}

impl Clock for MockClock {
    fn now(&self) -> f64 {
        *self.now.borrow()
    }

    fn sleep(&self, seconds: f64) {
        *self.now.borrow_mut() += seconds.max(0.0);
    }
}

/// Retry with exponential backoff (base 1 s, doubling, jittered) plus a
/// minimum interval between consecutive calls. Records the start time of
/// every attempt for rate-limit assertions.
pub struct ResilientTransport<R: RawChat, C: Clock> {
    raw: R,
    clock: C,
    max_retries: u32,
    min_interval_s: f64,
    backoff_base_s: f64,
    jitter_rng: ChaCha8Rng,
    last_call: Option<f64>,
    call_timestamps: Vec<f64>,
}

impl<R: RawChat, C: Clock> ResilientTransport<R, C> {
    pub fn new(raw: R, clock: C, max_retries: u32, min_interval_s: f64) -> Self {
        ResilientTransport {
            raw,
            clock,
            max_retries,
            min_interval_s,
            backoff_base_s: 1.0,
            jitter_rng: ChaCha8Rng::seed_from_u64(0),
            last_call: None,
            call_timestamps: Vec::new(),
        }
    }

    /// Start times of every attempt issued so far.
    pub fn call_timestamps(&self) -> &[f64] {
        &self.call_timestamps
    }

    fn respect_rate_limit(&mut self) {
        if let Some(last) = self.last_call {
            let next_allowed = last + self.min_interval_s;
            let now = self.clock.now();
            if now < next_allowed {
                self.clock.sleep(next_allowed - now);
            }
        }
    }
}

impl<R: RawChat, C: Clock> ChatTransport for ResilientTransport<R, C> {
    fn complete(&mut self, request: &ChatRequest) -> Result<String, GatewayError> {
        let mut attempts = 0u32;
        loop {
            self.respect_rate_limit();
            let started = self.clock.now();
            self.last_call = Some(started);
            self.call_timestamps.push(started);
            attempts += 1;
            match self.raw.send(request) {
                Ok(text) => return Ok(text),
                Err(CallFailure::Fatal(msg)) => return Err(GatewayError::Call(msg)),
                Err(CallFailure::Retryable(msg)) => {
                    if attempts > self.max_retries {
                        return Err(GatewayError::Exhausted {
                            attempts,
                            last_error: msg,
                        });
                    }
                    let doubling = self.backoff_base_s * f64::powi(2.0, attempts as i32 - 1);
                    let jitter = 0.5 + 0.5 * self.jitter_rng.gen_range(0.0..1.0);
                    self.clock.sleep(doubling * jitter);
                }
            }
        }
    }
}

/// Scripted raw sender for retry tests: pops one reply per attempt and
/// counts attempts.
pub struct ScriptedRaw {
    replies: VecDeque<Result<String, CallFailure>>,
    pub attempts: u32,
}

impl ScriptedRaw {
    pub fn new(replies: Vec<Result<String, CallFailure>>) -> Self {
        ScriptedRaw {
            replies: replies.into(),
            attempts: 0,
        }
    }
}

impl RawChat for ScriptedRaw {
    fn send(&mut self, _request: &ChatRequest) -> Result<String, CallFailure> {
        self.attempts += 1;
        self.replies
            .pop_front()
            .unwrap_or_else(|| Err(CallFailure::Fatal("script exhausted".to_string())))
    }
}

/// Scripted transport used to drive agents offline: replies verbatim, in
/// order, and records every request.
pub struct ScriptedTransport {
    replies: VecDeque<Result<String, String>>,
    pub requests: Vec<ChatRequest>,
}

impl ScriptedTransport {
    pub fn new(replies: Vec<Result<String, String>>) -> Self {
        ScriptedTransport {
            replies: replies.into(),
            requests: Vec::new(),
        }
    }

    /// Convenience constructor when every scripted reply succeeds.
    pub fn replies(texts: Vec<&str>) -> Self {
        Self::new(texts.into_iter().map(|t| Ok(t.to_string())).collect())
    }

    pub fn remaining(&self) -> usize {
        self.replies.len()
    }
}

impl ChatTransport for ScriptedTransport {
    fn complete(&mut self, request: &ChatRequest) -> Result<String, GatewayError> {
        self.requests.push(request.clone());
        match self.replies.pop_front() {
            Some(Ok(text)) => Ok(text),
            Some(Err(msg)) => Err(GatewayError::Call(msg)),
            None => Err(GatewayError::Call("script exhausted".to_string())),
        }
    }
}

/// Live OpenAI-compatible chat call over HTTP.
pub struct HttpChat {
    config: TransportConfig,
    api_key: String,
    agent: ureq::Agent,
}

impl HttpChat {
    /// Reads the API key from the configured environment variable; fails
    /// before any network activity when it is missing.
    pub fn new(config: TransportConfig) -> Result<Self, GatewayError> {
        config.validate().map_err(GatewayError::Call)?;
        let api_key = std::env::var(&config.api_key_env_var)
            .map_err(|_| GatewayError::MissingApiKey(config.api_key_env_var.clone()))?;
        let agent = ureq::AgentBuilder::new()
            .timeout(std::time::Duration::from_secs_f64(config.timeout_s))
            .build();
        Ok(HttpChat {
            config,
            api_key,
            agent,
        })
    }
}

impl RawChat for HttpChat {
    fn send(&mut self, request: &ChatRequest) -> Result<String, CallFailure> {
        let body = ureq::json!({
            "model": self.config.model_name,
            "messages": [
                {"role": "system", "content": request.system_prompt},
                {"role": "user", "content": request.user_message},
            ],
            "temperature": request.temperature,
            "max_tokens": request.max_output_tokens,
        });
        let response = self
            .agent
            .post(&self.config.endpoint_url)
            .set("Authorization", &format!("Bearer {}", self.api_key))
            .set("Content-Type", "application/json")
            .send_json(body);
        match response {
            Ok(resp) => {
                let value: serde_json::Value = resp
                    .into_json()
                    .map_err(|e| CallFailure::Fatal(format!("malformed response body: {e}")))?;
                value["choices"][0]["message"]["content"]
                    .as_str()
                    .map(str::to_string)
                    .ok_or_else(|| {
                        CallFailure::Fatal("response lacks choices[0].message.content".to_string())
                    })
            }
            Err(ureq::Error::Status(code, resp)) => {
                let detail = resp.into_string().unwrap_or_default();
                let msg = format!("HTTP {code}: {detail}");
                if code == 429 || code == 408 || code >= 500 {
                    Err(CallFailure::Retryable(msg))
                } else {
                    Err(CallFailure::Fatal(msg))
                }
            }
            Err(ureq::Error::Transport(t)) => Err(CallFailure::Retryable(t.to_string())),
        }
    }
}

/// Build the live transport stack for a config: env-keyed HTTP client behind
/// retry and rate limiting.
pub fn live_transport(
    config: TransportConfig,
) -> Result<ResilientTransport<HttpChat, SystemClock>, GatewayError> {
    let max_retries = config.max_retries;
    let min_interval = config.min_request_interval_s;
    let raw = HttpChat::new(config)?;
    Ok(ResilientTransport::new(
        raw,
        SystemClock::new(),
        max_retries,
        min_interval,
    ))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn req() -> ChatRequest {
        ChatRequest::new("sys", "msg")
    }

    #[test]
    fn scripted_reply_comes_back_verbatim() {
        let mut t = ScriptedTransport::replies(vec!["hello there"]);
        assert_eq!(t.complete(&req()).unwrap(), "hello there");
        assert_eq!(t.requests.len(), 1);
    }

    #[test]
    fn two_failures_then_success_takes_three_attempts() {
        let raw = ScriptedRaw::new(vec![
            Err(CallFailure::Retryable("503".into())),
            Err(CallFailure::Retryable("timeout".into())),
            Ok("fine".into()),
        ]);
        let mut t = ResilientTransport::new(raw, MockClock::new(), 3, 0.0);
        assert_eq!(t.complete(&req()).unwrap(), "fine");
        assert_eq!(t.raw.attempts, 3);
    }

    #[test]
    fn retries_exhaust_into_transport_error() {
        let raw = ScriptedRaw::new(vec![
            Err(CallFailure::Retryable("500".into())),
            Err(CallFailure::Retryable("500".into())),
            Err(CallFailure::Retryable("500".into())),
        ]);
        let mut t = ResilientTransport::new(raw, MockClock::new(), 2, 0.0);
        match t.complete(&req()) {
            Err(GatewayError::Exhausted { attempts, .. }) => assert_eq!(attempts, 3),
            other => panic!("expected exhaustion, got {other:?}"),
        }
    }

    #[test]
    fn fatal_failure_is_not_retried() {
        let raw = ScriptedRaw::new(vec![Err(CallFailure::Fatal("401".into())), Ok("nope".into())]);
        let mut t = ResilientTransport::new(raw, MockClock::new(), 5, 0.0);
        assert!(matches!(t.complete(&req()), Err(GatewayError::Call(_))));
        assert_eq!(t.raw.attempts, 1);
    }

    #[test]
    fn rate_limit_spaces_consecutive_calls() {
        let raw = ScriptedRaw::new(vec![Ok("a".into()), Ok("b".into()), Ok("c".into())]);
        let clock = MockClock::new();
        let mut t = ResilientTransport::new(raw, clock, 0, 2.5);
        t.complete(&req()).unwrap();
        t.complete(&req()).unwrap();
        t.complete(&req()).unwrap();
        let ts = t.call_timestamps();
        assert_eq!(ts.len(), 3);
        for pair in ts.windows(2) {
            assert!(
                pair[1] - pair[0] >= 2.5 - 1e-12,
                "calls too close: {pair:?}"
            );
        }
    }

    #[test]
    fn backoff_doubles_between_attempts() {
        let raw = ScriptedRaw::new(vec![
            Err(CallFailure::Retryable("x".into())),
            Err(CallFailure::Retryable("x".into())),
            Ok("done".into()),
        ]);
        let clock = MockClock::new();
        let mut t = ResilientTransport::new(raw, clock, 3, 0.0);
        t.complete(&req()).unwrap();
        let ts = t.call_timestamps().to_vec();
        // Jitter scales each wait into [0.5, 1.0] * base * 2^(attempt-1).
        let w1 = ts[1] - ts[0];
        let w2 = ts[2] - ts[1];
        assert!((0.5..=1.0).contains(&w1), "first wait {w1}");
        assert!((1.0..=2.0).contains(&w2), "second wait {w2}");
    }

    #[test]
    fn missing_api_key_fails_before_network() {
        let config = TransportConfig {
            api_key_env_var: "OPTIMIND_TEST_KEY_THAT_DOES_NOT_EXIST".to_string(),
            ..TransportConfig::default()
        };
        match HttpChat::new(config) {
            Err(GatewayError::MissingApiKey(var)) => {
                assert_eq!(var, "OPTIMIND_TEST_KEY_THAT_DOES_NOT_EXIST")
            }
            Err(other) => panic!("expected MissingApiKey, got {other:?}"),
            Ok(_) => panic!("expected MissingApiKey, got a transport"),
        }
    }
}
