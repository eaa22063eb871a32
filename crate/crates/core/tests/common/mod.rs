#![allow(dead_code)]

use std::collections::BTreeMap;
use std::path::PathBuf;
use std::sync::Arc;

use chrono::{NaiveDate, NaiveDateTime};
use serde::Deserialize;

use attitude_core::gateway::scripted::ScriptedBackend;
use attitude_core::gateway::Gateway;
use attitude_core::logics::{AttitudeLedger, ComponentContext, Logic, PrefixSection, SectionKind};
use attitude_core::memory::{MemoryEntry, MemoryStore, MemoryTag, RelevanceScorer};

pub fn fixtures() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures")
}

pub fn at(text: &str) -> NaiveDateTime {
    NaiveDateTime::parse_from_str(text, "%Y-%m-%d %H:%M:%S").expect("fixture time")
}

pub fn oct1(h: u32, m: u32) -> NaiveDateTime {
    NaiveDate::from_ymd_opt(2024, 10, 1)
        .unwrap()
        .and_hms_opt(h, m, 0)
        .unwrap()
}

#[derive(Debug, Deserialize)]
pub struct FixtureMemory {
    pub time: String,
    pub tag: MemoryTag,
    pub text: String,
}

#[derive(Debug, Deserialize)]
pub struct FixtureSection {
    pub kind: SectionKind,
    pub header: String,
    pub body: String,
}

#[derive(Debug, Deserialize)]
pub struct GoldenCase {
    pub agent: String,
    pub logic: Logic,
    pub now: String,
    #[serde(default)]
    pub relevance: BTreeMap<String, Vec<u64>>,
    pub expected: BTreeMap<String, String>,
    #[serde(default)]
    pub section: Vec<FixtureSection>,
    #[serde(default)]
    pub memory: Vec<FixtureMemory>,
}

impl GoldenCase {
    pub fn load(name: &str) -> (GoldenCase, Gateway) {
        let dir = fixtures().join("golden").join(name);
        let case: GoldenCase =
            toml::from_str(&std::fs::read_to_string(dir.join("case.toml")).unwrap()).unwrap();
        let backend = ScriptedBackend::from_file(&dir.join("script.toml")).unwrap();
        (case, Gateway::new(Arc::new(backend)))
    }

    pub fn now(&self) -> NaiveDateTime {
        at(&self.now)
    }

    pub fn memory(&self) -> MemoryStore {
        let mut store = MemoryStore::new();
        for m in &self.memory {
            store
                .record(MemoryEntry::new(at(&m.time), m.tag, m.text.clone()))
                .unwrap();
        }
        store
    }

    pub fn sections(&self) -> Vec<PrefixSection> {
        self.section
            .iter()
            .map(|s| PrefixSection {
                kind: s.kind,
                header: s.header.clone(),
                body: s.body.clone(),
            })
            .collect()
    }

    pub fn expected(&self, key: &str) -> &str {
        self.expected
            .get(key)
            .unwrap_or_else(|| panic!("fixture has no expected.{key}"))
    }

    pub fn scorer(&self) -> ListedScorer {
        ListedScorer {
            lists: self.relevance.clone(),
        }
    }
}

/// Ranks the memories listed for the first key the query mentions; every
/// other memory scores zero.
pub struct ListedScorer {
    pub lists: BTreeMap<String, Vec<u64>>,
}

impl RelevanceScorer for ListedScorer {
    fn score(&self, query: &str, entry: &MemoryEntry, _recency: f64) -> f64 {
        let query = query.to_lowercase();
        self.lists
            .iter()
            .find(|(key, _)| query.contains(&key.to_lowercase()))
            .and_then(|(_, seqs)| seqs.iter().position(|s| *s == entry.seq))
            .map_or(0.0, |rank| 100.0 - rank as f64)
    }
}

pub struct Harness {
    pub memory: MemoryStore,
    pub ledger: AttitudeLedger,
}

impl Harness {
    pub fn context<'a>(
        &'a mut self,
        agent_name: &'a str,
        now: NaiveDateTime,
        gateway: &'a Gateway,
        scorer: &'a dyn RelevanceScorer,
        sections: Vec<PrefixSection>,
    ) -> ComponentContext<'a> {
        ComponentContext {
            agent_name,
            now,
            memory: &mut self.memory,
            ledger: &mut self.ledger,
            gateway,
            scorer,
            sections,
        }
    }
}

pub fn scripted(toml_text: &str) -> Gateway {
    Gateway::new(Arc::new(ScriptedBackend::from_toml(toml_text).unwrap()))
}
pub mod checks;
