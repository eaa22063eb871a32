//! Chat-completion HTTP backend.

use std::sync::Arc;
use std::time::Duration;

use serde::Deserialize;
use serde_json::json;
use tracing::warn;

use super::{GatewayError, LanguageModel, Result, SamplingParams};

pub const ENV_BASE_URL: &str = "ATTITUDE_SIM_BASE_URL";
pub const ENV_MODEL: &str = "ATTITUDE_SIM_MODEL";
pub const ENV_API_KEY: &str = "ATTITUDE_SIM_API_KEY";

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RetryPolicy {
    pub attempts: u32,
    pub initial_backoff: Duration,
    pub multiplier: u32,
}

impl Default for RetryPolicy {
    fn default() -> Self {
        Self {
            attempts: 3,
            initial_backoff: Duration::from_millis(500),
            multiplier: 2,
        }
    }
}

impl RetryPolicy {
    /// Delay before attempt `n` (1-based); zero before the first.
    pub fn backoff(&self, attempt: u32) -> Duration {
        if attempt <= 1 {
            return Duration::ZERO;
        }
        self.initial_backoff * self.multiplier.pow(attempt - 2)
    }
}

#[derive(Debug, Deserialize)]
struct ChatResponse {
    choices: Vec<ChatChoice>,
}

#[derive(Debug, Deserialize)]
struct ChatChoice {
    message: ChatMessage,
}

#[derive(Debug, Deserialize)]
struct ChatMessage {
    #[serde(default)]
    content: Option<String>,
}

enum Failure {
    Retryable(String),
    Fatal(String),
}

pub struct ChatCompletionBackend {
    base_url: String,
    model: String,
    api_key: Option<String>,
    agent: ureq::Agent,
    retry: RetryPolicy,
}

impl std::fmt::Debug for ChatCompletionBackend {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("ChatCompletionBackend")
            .field("base_url", &self.base_url)
            .field("model", &self.model)
            .field("retry", &self.retry)
            .finish()
    }
}

impl ChatCompletionBackend {
    pub fn new(
        base_url: impl Into<String>,
        model: impl Into<String>,
        api_key: Option<String>,
    ) -> Self {
        let agent = ureq::AgentBuilder::new()
            .timeout_connect(Duration::from_secs(10))
            .timeout(Duration::from_secs(300))
            .build();
        Self {
            base_url: base_url.into().trim_end_matches('/').to_string(),
            model: model.into(),
            api_key,
            agent,
            retry: RetryPolicy::default(),
        }
    }

    pub fn with_retry(mut self, retry: RetryPolicy) -> Self {
        self.retry = retry;
        self
    }

    /// Reads the endpoint, model and key from the environment.
    pub fn from_env() -> Result<Self> {
        let base = std::env::var(ENV_BASE_URL)
            .map_err(|_| GatewayError::BackendUnavailable(format!("{ENV_BASE_URL} is not set")))?;
        let model = std::env::var(ENV_MODEL)
            .map_err(|_| GatewayError::BackendUnavailable(format!("{ENV_MODEL} is not set")))?;
        let key = std::env::var(ENV_API_KEY).ok().filter(|k| !k.is_empty());
        Ok(Self::new(base, model, key))
    }

    pub fn endpoint(&self) -> String {
        format!("{}/chat/completions", self.base_url)
    }

    fn request_body(&self, prompt: &str, params: &SamplingParams) -> serde_json::Value {
        let mut body = json!({
            "model": self.model,
            "messages": [{ "role": "user", "content": prompt }],
            "temperature": params.temperature,
            "max_tokens": params.max_tokens,
        });
        if let Some(seed) = params.seed {
            body["seed"] = json!(seed);
        }
        body
    }

    fn attempt(&self, body: &serde_json::Value) -> std::result::Result<String, Failure> {
        let mut request = self
            .agent
            .post(&self.endpoint())
            .set("Content-Type", "application/json");
        if let Some(key) = &self.api_key {
            request = request.set("Authorization", &format!("Bearer {key}"));
        }
        match request.send_json(body.clone()) {
            Ok(response) => {
                let parsed: ChatResponse = response
                    .into_json()
                    .map_err(|e| Failure::Retryable(format!("bad response body: {e}")))?;
                let content = parsed
                    .choices
                    .into_iter()
                    .next()
                    .and_then(|c| c.message.content)
                    .unwrap_or_default();
                if content.trim().is_empty() {
                    Err(Failure::Retryable("empty completion".into()))
                } else {
                    Ok(content)
                }
            }
            Err(ureq::Error::Status(code, response)) => {
                let text = response.into_string().unwrap_or_default();
                let msg = format!(
                    "HTTP {code}: {}",
                    text.chars().take(200).collect::<String>()
                );
                if code == 429 || code >= 500 {
                    Err(Failure::Retryable(msg))
                } else {
                    Err(Failure::Fatal(msg))
                }
            }
            Err(ureq::Error::Transport(t)) => Err(Failure::Retryable(t.to_string())),
        }
    }
}

impl LanguageModel for ChatCompletionBackend {
    fn complete(&self, prompt: &str, params: &SamplingParams) -> Result<String> {
        let body = self.request_body(prompt, params);
        let mut last = String::new();
        for attempt in 1..=self.retry.attempts.max(1) {
            std::thread::sleep(self.retry.backoff(attempt));
            match self.attempt(&body) {
                Ok(text) => return Ok(text),
                Err(Failure::Fatal(msg)) => return Err(GatewayError::BackendUnavailable(msg)),
                Err(Failure::Retryable(msg)) => {
                    warn!(attempt, error = %msg, "chat completion failed");
                    last = msg;
                }
            }
        }
        Err(GatewayError::BackendUnavailable(format!(
            "gave up after {} attempts: {last}",
            self.retry.attempts
        )))
    }

    fn fork(self: Arc<Self>) -> Arc<dyn LanguageModel> {
        self
    }
}
