//! Deterministic scripted backend.
//!
//! A script is an ordered list of exchanges. For each prompt the first
//! exchange whose matcher accepts it (and that has not been consumed) answers.
//! Pattern matchers are regular expressions; their responses may reference
//! capture groups as `$1` / `${name}` (write `$$` for a literal dollar sign).
//!
//! Script files are TOML:
//!
//! ```toml
//! [[exchange]]
//! matcher = "What kind of person is Rory?"
//! response = "Rory is a kind, compassionate, and socially-oriented person."
//! consume_once = false
//!
//! [[exchange]]
//! matcher = "What would (\\w+) do for the next 2 minutes"
//! pattern = true
//! response = "$1 sits quietly."
//! ```

use std::path::Path;
use std::sync::{Arc, Mutex};

use regex::Regex;
use serde::{Deserialize, Serialize};

use super::{GatewayError, LanguageModel, Result, SamplingParams};

#[derive(Debug, Clone)]
pub enum Matcher {
    Substring(String),
    Pattern(Regex),
}

impl Matcher {
    fn source(&self) -> &str {
        match self {
            Matcher::Substring(s) => s,
            Matcher::Pattern(re) => re.as_str(),
        }
    }
}

#[derive(Debug, Clone)]
pub struct ScriptedExchange {
    pub matcher: Matcher,
    pub response: String,
    pub consume_once: bool,
}

impl ScriptedExchange {
    pub fn substring(
        matcher: impl Into<String>,
        response: impl Into<String>,
        consume_once: bool,
    ) -> Result<Self> {
        let matcher = matcher.into();
        if matcher.is_empty() {
            return Err(GatewayError::Script("matcher must be non-empty".into()));
        }
        Ok(Self {
            matcher: Matcher::Substring(matcher),
            response: response.into(),
            consume_once,
        })
    }

    pub fn pattern(pattern: &str, response: impl Into<String>, consume_once: bool) -> Result<Self> {
        if pattern.is_empty() {
            return Err(GatewayError::Script("matcher must be non-empty".into()));
        }
        let re = Regex::new(pattern)
            .map_err(|e| GatewayError::Script(format!("bad pattern {pattern:?}: {e}")))?;
        Ok(Self {
            matcher: Matcher::Pattern(re),
            response: response.into(),
            consume_once,
        })
    }

    fn answer(&self, prompt: &str) -> Option<String> {
        match &self.matcher {
            Matcher::Substring(s) => prompt.contains(s.as_str()).then(|| self.response.clone()),
            Matcher::Pattern(re) => re.captures(prompt).map(|caps| {
                let mut out = String::new();
                caps.expand(&self.response, &mut out);
                out
            }),
        }
    }
}

#[derive(Debug, Serialize, Deserialize)]
struct ExchangeRecord {
    matcher: String,
    response: String,
    #[serde(default)]
    consume_once: bool,
    #[serde(default)]
    pattern: bool,
}

#[derive(Debug, Serialize, Deserialize)]
struct ScriptFile {
    #[serde(default)]
    exchange: Vec<ExchangeRecord>,
}

#[derive(Debug)]
pub struct ScriptedBackend {
    exchanges: Vec<ScriptedExchange>,
    consumed: Mutex<Vec<bool>>,
}

impl ScriptedBackend {
    pub fn new(exchanges: Vec<ScriptedExchange>) -> Self {
        let consumed = Mutex::new(vec![false; exchanges.len()]);
        Self {
            exchanges,
            consumed,
        }
    }

    pub fn parse_toml(text: &str) -> Result<Vec<ScriptedExchange>> {
        let file: ScriptFile =
            toml::from_str(text).map_err(|e| GatewayError::Script(e.to_string()))?;
        file.exchange
            .into_iter()
            .map(|r| {
                if r.pattern {
                    ScriptedExchange::pattern(&r.matcher, r.response, r.consume_once)
                } else {
                    ScriptedExchange::substring(r.matcher, r.response, r.consume_once)
                }
            })
            .collect()
    }

    pub fn from_toml(text: &str) -> Result<Self> {
        Ok(Self::new(Self::parse_toml(text)?))
    }

    pub fn from_file(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| GatewayError::Script(format!("{}: {e}", path.display())))?;
        Self::from_toml(&text)
    }

    /// Loads every `*.toml` file in `dir`, in file-name order.
    pub fn from_dir(dir: &Path) -> Result<Self> {
        let mut paths: Vec<_> = std::fs::read_dir(dir)
            .map_err(|e| GatewayError::Script(format!("{}: {e}", dir.display())))?
            .filter_map(|entry| entry.ok().map(|e| e.path()))
            .filter(|p| p.extension().is_some_and(|ext| ext == "toml"))
            .collect();
        paths.sort();
        if paths.is_empty() {
            return Err(GatewayError::Script(format!(
                "no .toml scripts in {}",
                dir.display()
            )));
        }
        let mut exchanges = Vec::new();
        for path in paths {
            let text = std::fs::read_to_string(&path)
                .map_err(|e| GatewayError::Script(format!("{}: {e}", path.display())))?;
            exchanges.extend(Self::parse_toml(&text)?);
        }
        Ok(Self::new(exchanges))
    }

    /// Serializes the script back to TOML.
    pub fn to_toml(&self) -> String {
        let file = ScriptFile {
            exchange: self
                .exchanges
                .iter()
                .map(|e| ExchangeRecord {
                    matcher: e.matcher.source().to_string(),
                    response: e.response.clone(),
                    consume_once: e.consume_once,
                    pattern: matches!(e.matcher, Matcher::Pattern(_)),
                })
                .collect(),
        };
        toml::to_string(&file).expect("script serializes")
    }

    pub fn exchanges(&self) -> &[ScriptedExchange] {
        &self.exchanges
    }

    /// Same script with all consumable entries restored.
    pub fn fresh(&self) -> Self {
        Self::new(self.exchanges.clone())
    }
}

impl LanguageModel for ScriptedBackend {
    fn complete(&self, prompt: &str, _params: &SamplingParams) -> Result<String> {
        let mut consumed = self.consumed.lock().expect("script lock poisoned");
        for (i, exchange) in self.exchanges.iter().enumerate() {
            if consumed[i] {
                continue;
            }
            if let Some(response) = exchange.answer(prompt) {
                if exchange.consume_once {
                    consumed[i] = true;
                }
                return Ok(response);
            }
        }
        let head: String = prompt.chars().take(120).collect();
        Err(GatewayError::ScriptMiss { prompt_head: head })
    }

    fn fork(self: Arc<Self>) -> Arc<dyn LanguageModel> {
        Arc::new(self.fresh())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn first_matching_entry_answers() {
        let b = ScriptedBackend::new(vec![
            ScriptedExchange::substring("alpha", "A", false).unwrap(),
            ScriptedExchange::substring("alpha beta", "B", false).unwrap(),
        ]);
        assert_eq!(
            b.complete("alpha beta", &SamplingParams::default())
                .unwrap(),
            "A"
        );
    }

    #[test]
    fn consumed_entry_falls_through() {
        let b = ScriptedBackend::new(vec![
            ScriptedExchange::substring("q", "first", true).unwrap(),
            ScriptedExchange::substring("q", "later", false).unwrap(),
        ]);
        let p = SamplingParams::default();
        assert_eq!(b.complete("q", &p).unwrap(), "first");
        assert_eq!(b.complete("q", &p).unwrap(), "later");
        assert_eq!(b.complete("q", &p).unwrap(), "later");
    }

    #[test]
    fn pattern_expands_captures() {
        let b = ScriptedBackend::new(vec![ScriptedExchange::pattern(
            r"What would (\w+) do",
            "$1 pays $$5.",
            false,
        )
        .unwrap()]);
        assert_eq!(
            b.complete("What would Priya do?", &SamplingParams::default())
                .unwrap(),
            "Priya pays $5."
        );
    }

    #[test]
    fn empty_matcher_rejected() {
        assert!(ScriptedExchange::substring("", "x", false).is_err());
        assert!(ScriptedExchange::pattern("", "x", false).is_err());
    }

    #[test]
    fn toml_round_trip() {
        let text = r#"
[[exchange]]
matcher = "hello"
response = "hi"
consume_once = true

[[exchange]]
matcher = "name is (\\w+)"
pattern = true
response = "Hi $1"
"#;
        let b = ScriptedBackend::from_toml(text).unwrap();
        assert_eq!(b.exchanges().len(), 2);
        let again = ScriptedBackend::from_toml(&b.to_toml()).unwrap();
        assert_eq!(
            again
                .complete("my name is Jin", &SamplingParams::default())
                .unwrap(),
            "Hi Jin"
        );
    }

    #[test]
    fn fork_restores_consumed_entries() {
        let b = Arc::new(ScriptedBackend::new(vec![ScriptedExchange::substring(
            "q", "once", true,
        )
        .unwrap()]));
        assert!(b.complete("q", &SamplingParams::default()).is_ok());
        assert!(b.complete("q", &SamplingParams::default()).is_err());
        let forked = b.clone().fork();
        assert_eq!(
            forked.complete("q", &SamplingParams::default()).unwrap(),
            "once"
        );
    }
}
