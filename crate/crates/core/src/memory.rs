//! Append-only associative memory for a single actor.

use std::collections::BTreeSet;

use chrono::{Duration, NaiveDateTime};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum MemoryError {
    #[error("memory text is empty")]
    EmptyText,
    #[error("clock regression: {attempted} is earlier than last recorded {last}")]
    ClockRegression {
        last: NaiveDateTime,
        attempted: NaiveDateTime,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MemoryTag {
    Observation,
    Thought,
    IntentReflection,
    Formative,
    Untagged,
}

impl MemoryTag {
    /// Marker written in front of the text, e.g. `[observation] `.
    pub fn marker(self) -> &'static str {
        match self {
            MemoryTag::Observation => "[observation] ",
            MemoryTag::Thought => "[thought] ",
            MemoryTag::IntentReflection => "[intent reflection] ",
            MemoryTag::Formative | MemoryTag::Untagged => "",
        }
    }
}

pub const TIMESTAMP_FORMAT: &str = "%d %b %Y %H:%M:%S";

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct MemoryEntry {
    pub timestamp: NaiveDateTime,
    pub tag: MemoryTag,
    pub text: String,
    /// Insertion ordinal, assigned by the store.
    pub seq: u64,
}

impl MemoryEntry {
    pub fn new(timestamp: NaiveDateTime, tag: MemoryTag, text: impl Into<String>) -> Self {
        Self {
            timestamp,
            tag,
            text: text.into(),
            seq: 0,
        }
    }

    /// `[01 Oct 2024 14:00:00] [observation] text`
    pub fn render(&self) -> String {
        format!(
            "[{}] {}{}",
            self.timestamp.format(TIMESTAMP_FORMAT),
            self.tag.marker(),
            self.text
        )
    }
}

/// Renders entries one per paragraph, as they appear in prompts.
pub fn render_entries(entries: &[MemoryEntry]) -> String {
    entries
        .iter()
        .map(MemoryEntry::render)
        .collect::<Vec<_>>()
        .join("\n\n")
}

#[derive(Debug, Clone, PartialEq)]
pub enum MemoryQuery {
    All,
    /// Entries with timestamp in `(now - minutes, now]`.
    RecentWindow {
        minutes: u32,
        now: NaiveDateTime,
    },
    /// Up to `k` entries ranked by relevance to `query_text`, best first.
    TopKRelevant {
        k: usize,
        query_text: String,
    },
    ByTag(MemoryTag),
}

/// Scores an entry's relevance to a query. `recency` is in `[0, 1]`, 1 for
/// the newest entry.
pub trait RelevanceScorer: Send + Sync {
    fn score(&self, query: &str, entry: &MemoryEntry, recency: f64) -> f64;
}

const STOPWORDS: &[&str] = &[
    "a", "an", "and", "are", "as", "at", "be", "by", "for", "from", "had", "has", "have", "he",
    "her", "his", "in", "is", "it", "its", "of", "on", "or", "she", "that", "the", "their", "them",
    "they", "this", "to", "was", "were", "with",
];

pub fn keywords(text: &str) -> BTreeSet<String> {
    text.split(|c: char| !c.is_alphanumeric())
        .filter(|w| !w.is_empty())
        .map(|w| w.to_lowercase())
        .filter(|w| !STOPWORDS.contains(&w.as_str()))
        .collect()
}

/// Keyword overlap (fraction of query keywords present in the entry) blended
/// with recency.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KeywordRecencyScorer {
    pub keyword_weight: f64,
    pub recency_weight: f64,
}

impl Default for KeywordRecencyScorer {
    fn default() -> Self {
        Self {
            keyword_weight: 0.7,
            recency_weight: 0.3,
        }
    }
}

impl RelevanceScorer for KeywordRecencyScorer {
    fn score(&self, query: &str, entry: &MemoryEntry, recency: f64) -> f64 {
        let q = keywords(query);
        let overlap = if q.is_empty() {
            0.0
        } else {
            let e = keywords(&entry.text);
            q.intersection(&e).count() as f64 / q.len() as f64
        };
        self.keyword_weight * overlap + self.recency_weight * recency
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct MemoryStore {
    entries: Vec<MemoryEntry>,
}

#[derive(Serialize)]
struct TraceLine<'a> {
    timestamp: String,
    tag: MemoryTag,
    text: &'a str,
}

impl MemoryStore {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn record(&mut self, mut entry: MemoryEntry) -> Result<&MemoryEntry, MemoryError> {
        if entry.text.trim().is_empty() {
            return Err(MemoryError::EmptyText);
        }
        if let Some(last) = self.entries.last() {
            if entry.timestamp < last.timestamp {
                return Err(MemoryError::ClockRegression {
                    last: last.timestamp,
                    attempted: entry.timestamp,
                });
            }
        }
        entry.seq = self.entries.len() as u64;
        self.entries.push(entry);
        Ok(self.entries.last().expect("just pushed"))
    }

    pub fn add(
        &mut self,
        timestamp: NaiveDateTime,
        tag: MemoryTag,
        text: impl Into<String>,
    ) -> Result<&MemoryEntry, MemoryError> {
        self.record(MemoryEntry::new(timestamp, tag, text))
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn entries(&self) -> &[MemoryEntry] {
        &self.entries
    }

    pub fn last_timestamp(&self) -> Option<NaiveDateTime> {
        self.entries.last().map(|e| e.timestamp)
    }

    pub fn retrieve(&self, query: &MemoryQuery) -> Vec<MemoryEntry> {
        self.retrieve_with(query, &KeywordRecencyScorer::default())
    }

    pub fn retrieve_with(
        &self,
        query: &MemoryQuery,
        scorer: &dyn RelevanceScorer,
    ) -> Vec<MemoryEntry> {
        match query {
            MemoryQuery::All => self.entries.clone(),
            MemoryQuery::RecentWindow { minutes, now } => {
                let start = *now - Duration::minutes(i64::from(*minutes));
                self.entries
                    .iter()
                    .filter(|e| e.timestamp > start && e.timestamp <= *now)
                    .cloned()
                    .collect()
            }
            MemoryQuery::ByTag(tag) => self
                .entries
                .iter()
                .filter(|e| e.tag == *tag)
                .cloned()
                .collect(),
            MemoryQuery::TopKRelevant { k, query_text } => {
                let n = self.entries.len();
                let mut scored: Vec<(f64, &MemoryEntry)> = self
                    .entries
                    .iter()
                    .enumerate()
                    .map(|(i, e)| {
                        let recency = if n <= 1 {
                            1.0
                        } else {
                            i as f64 / (n - 1) as f64
                        };
                        (scorer.score(query_text, e, recency), e)
                    })
                    .collect();
                scored.sort_by(|a, b| {
                    b.0.total_cmp(&a.0)
                        .then(b.1.timestamp.cmp(&a.1.timestamp))
                        .then(b.1.seq.cmp(&a.1.seq))
                });
                scored
                    .into_iter()
                    .take(*k)
                    .map(|(_, e)| e.clone())
                    .collect()
            }
        }
    }

    /// Line-delimited `{timestamp, tag, text}` records.
    pub fn to_trace_lines(&self) -> String {
        let mut out = String::new();
        for e in &self.entries {
            let line = TraceLine {
                timestamp: e.timestamp.format("%Y-%m-%dT%H:%M:%S").to_string(),
                tag: e.tag,
                text: &e.text,
            };
            out.push_str(&serde_json::to_string(&line).expect("memory line serializes"));
            out.push('\n');
        }
        out
    }

    /// SHA-256 over the trace lines.
    pub fn digest(&self) -> String {
        let mut hasher = Sha256::new();
        hasher.update(self.to_trace_lines().as_bytes());
        format!("{:x}", hasher.finalize())
    }
}
