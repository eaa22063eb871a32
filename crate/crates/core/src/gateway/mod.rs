//! Language-model port.
//!
//! Every model interaction in a simulation goes through a [`Gateway`], which
//! wraps a shared [`LanguageModel`] backend and keeps the per-simulation run
//! trace. Two backends exist: [`live::ChatCompletionBackend`] speaks the common
//! chat-completion HTTP schema, and [`scripted::ScriptedBackend`] replays
//! matcher/response pairs from script files.

pub mod choice;
pub mod live;
pub mod scripted;

use std::sync::{Arc, Mutex};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::templates::{self, TemplateId};

#[derive(Debug, Error)]
pub enum GatewayError {
    #[error("prompt is empty")]
    EmptyPrompt,
    #[error("prompt contains unresolved placeholder {0}")]
    UnresolvedPlaceholder(String),
    #[error("invalid sampling parameters: {0}")]
    InvalidParams(String),
    #[error("choice requires at least one option")]
    NoOptions,
    #[error("backend unavailable: {0}")]
    BackendUnavailable(String),
    #[error("no scripted exchange matches prompt starting {prompt_head:?}")]
    ScriptMiss { prompt_head: String },
    #[error("could not parse a choice among {n_options} options from {completion:?}")]
    UnparseableChoice {
        completion: String,
        n_options: usize,
    },
    #[error("script error: {0}")]
    Script(String),
}

pub type Result<T> = std::result::Result<T, GatewayError>;

/// A fully assembled prompt prefix.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PromptText {
    text: String,
    template: Option<&'static str>,
}

impl PromptText {
    pub fn new(text: impl Into<String>) -> Result<Self> {
        let text = text.into();
        if text.trim().is_empty() {
            return Err(GatewayError::EmptyPrompt);
        }
        if let Some(marker) = templates::unresolved_placeholder(&text) {
            return Err(GatewayError::UnresolvedPlaceholder(marker.to_string()));
        }
        Ok(Self {
            text,
            template: None,
        })
    }

    /// Tags the prompt with the template that produced its question.
    pub fn from_template(text: impl Into<String>, template: TemplateId) -> Result<Self> {
        let mut prompt = Self::new(text)?;
        prompt.template = Some(template.key());
        Ok(prompt)
    }

    pub fn as_str(&self) -> &str {
        &self.text
    }

    pub fn template(&self) -> Option<&'static str> {
        self.template
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct CompletionText(String);

impl CompletionText {
    pub fn as_str(&self) -> &str {
        &self.0
    }

    pub fn into_string(self) -> String {
        self.0
    }

    /// Completion with surrounding whitespace removed.
    pub fn trimmed(&self) -> &str {
        self.0.trim()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SamplingParams {
    pub temperature: f64,
    pub max_tokens: u32,
    pub seed: Option<u64>,
}

impl SamplingParams {
    pub fn free_text() -> Self {
        Self {
            temperature: 0.7,
            max_tokens: 512,
            seed: None,
        }
    }

    pub fn choice() -> Self {
        Self {
            temperature: 0.0,
            max_tokens: 64,
            seed: None,
        }
    }

    pub fn with_seed(mut self, seed: Option<u64>) -> Self {
        self.seed = seed;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if !self.temperature.is_finite() || self.temperature < 0.0 {
            return Err(GatewayError::InvalidParams(format!(
                "temperature must be finite and >= 0, got {}",
                self.temperature
            )));
        }
        if self.max_tokens == 0 {
            return Err(GatewayError::InvalidParams(
                "max_tokens must be >= 1".into(),
            ));
        }
        Ok(())
    }
}

impl Default for SamplingParams {
    fn default() -> Self {
        Self::free_text()
    }
}

/// A text-completion backend. Implementations must be safe to share across
/// concurrently running simulations.
pub trait LanguageModel: Send + Sync {
    fn complete(&self, prompt: &str, params: &SamplingParams) -> Result<String>;

    /// Per-simulation instance. Stateful backends (scripts with consumable
    /// entries) return a fresh copy; stateless ones share themselves.
    fn fork(self: Arc<Self>) -> Arc<dyn LanguageModel>;
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TraceKind {
    Completion,
    Choice,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TraceEntry {
    pub seq: usize,
    pub kind: TraceKind,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub template: Option<String>,
    pub prompt: String,
    pub completion: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub options: Option<Vec<String>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub chosen: Option<usize>,
    /// Backend round trips behind this entry (choice retries included).
    pub attempts: usize,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ChoiceOutcome {
    pub index: usize,
    pub completion: String,
}

pub struct Gateway {
    backend: Arc<dyn LanguageModel>,
    trace: Mutex<Vec<TraceEntry>>,
    choice_retries: usize,
    seed: Option<u64>,
}

impl std::fmt::Debug for Gateway {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Gateway")
            .field("calls", &self.call_count())
            .field("choice_retries", &self.choice_retries)
            .finish()
    }
}

impl Gateway {
    pub const DEFAULT_CHOICE_RETRIES: usize = 2;

    pub fn new(backend: Arc<dyn LanguageModel>) -> Self {
        Self {
            backend,
            trace: Mutex::new(Vec::new()),
            choice_retries: Self::DEFAULT_CHOICE_RETRIES,
            seed: None,
        }
    }

    pub fn with_choice_retries(mut self, retries: usize) -> Self {
        self.choice_retries = retries;
        self
    }

    /// Seed forwarded to the backend with every request.
    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = Some(seed);
        self
    }

    fn raw_complete(&self, prompt: &str, params: &SamplingParams) -> Result<String> {
        params.validate()?;
        let params = params.with_seed(params.seed.or(self.seed));
        self.backend.complete(prompt, &params)
    }

    fn push(&self, mut entry: TraceEntry) {
        let mut trace = self.trace.lock().expect("trace lock poisoned");
        entry.seq = trace.len();
        trace.push(entry);
    }

    pub fn complete_text(
        &self,
        prompt: &PromptText,
        params: &SamplingParams,
    ) -> Result<CompletionText> {
        let text = self.raw_complete(prompt.as_str(), params)?;
        if text.trim().is_empty() {
            return Err(GatewayError::BackendUnavailable(
                "backend returned an empty completion".into(),
            ));
        }
        self.push(TraceEntry {
            seq: 0,
            kind: TraceKind::Completion,
            template: prompt.template().map(str::to_string),
            prompt: prompt.as_str().to_string(),
            completion: text.clone(),
            options: None,
            chosen: None,
            attempts: 1,
        });
        Ok(CompletionText(text))
    }

    /// Asks a multiple-choice question by appending lettered options to the
    /// prompt. A single option is returned without contacting the backend.
    pub fn choose_option(
        &self,
        prompt: &PromptText,
        options: &[String],
        params: &SamplingParams,
    ) -> Result<ChoiceOutcome> {
        if options.is_empty() {
            return Err(GatewayError::NoOptions);
        }
        let rendered = choice::render_options(prompt.as_str(), options);
        if options.len() == 1 {
            self.push(TraceEntry {
                seq: 0,
                kind: TraceKind::Choice,
                template: prompt.template().map(str::to_string),
                prompt: rendered,
                completion: String::new(),
                options: Some(options.to_vec()),
                chosen: Some(0),
                attempts: 0,
            });
            return Ok(ChoiceOutcome {
                index: 0,
                completion: String::new(),
            });
        }

        let mut attempts = 0;
        let mut last = String::new();
        let mut request = rendered.clone();
        while attempts <= self.choice_retries {
            attempts += 1;
            last = self.raw_complete(&request, params)?;
            if let Some(index) = choice::parse_choice(&last, options) {
                self.push(TraceEntry {
                    seq: 0,
                    kind: TraceKind::Choice,
                    template: prompt.template().map(str::to_string),
                    prompt: rendered,
                    completion: last.clone(),
                    options: Some(options.to_vec()),
                    chosen: Some(index),
                    attempts,
                });
                return Ok(ChoiceOutcome {
                    index,
                    completion: last,
                });
            }
            request = format!("{rendered}\n\n{}", TemplateId::ChoiceReminder.text());
        }
        self.push(TraceEntry {
            seq: 0,
            kind: TraceKind::Choice,
            template: prompt.template().map(str::to_string),
            prompt: rendered,
            completion: last.clone(),
            options: Some(options.to_vec()),
            chosen: None,
            attempts,
        });
        Err(GatewayError::UnparseableChoice {
            completion: last,
            n_options: options.len(),
        })
    }

    pub fn trace(&self) -> Vec<TraceEntry> {
        self.trace.lock().expect("trace lock poisoned").clone()
    }

    pub fn call_count(&self) -> usize {
        self.trace.lock().expect("trace lock poisoned").len()
    }
}
