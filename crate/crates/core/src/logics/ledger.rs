use std::cell::Cell;
use std::collections::BTreeMap;

use chrono::NaiveDateTime;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Stance {
    pub stance: String,
    pub updated_at: NaiveDateTime,
}

/// Persistent topic to stance store. Updates overwrite; topics are never
/// removed, so the topic count only grows.
#[derive(Debug, Clone, Default, Serialize, Deserialize)]
pub struct AttitudeLedger {
    entries: BTreeMap<String, Stance>,
    #[serde(skip)]
    reads: Cell<u64>,
}

impl PartialEq for AttitudeLedger {
    fn eq(&self, other: &Self) -> bool {
        self.entries == other.entries
    }
}

impl AttitudeLedger {
    pub fn new() -> Self {
        Self::default()
    }

    fn touch(&self) {
        self.reads.set(self.reads.get() + 1);
    }

    /// Number of read or write accesses since creation.
    pub fn access_count(&self) -> u64 {
        self.reads.get()
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn topics(&self) -> Vec<String> {
        self.touch();
        self.entries.keys().cloned().collect()
    }

    pub fn get(&self, topic: &str) -> Option<&Stance> {
        self.touch();
        self.entries.get(topic)
    }

    /// Case-insensitive exact topic lookup.
    pub fn find_exact(&self, domain: &str) -> Option<String> {
        self.touch();
        let wanted = domain.trim().to_lowercase();
        self.entries
            .keys()
            .find(|k| k.to_lowercase() == wanted)
            .cloned()
    }

    pub fn upsert(&mut self, topic: &str, stance: &str, at: NaiveDateTime) {
        self.touch();
        self.entries.insert(
            topic.trim().to_string(),
            Stance {
                stance: stance.trim().to_string(),
                updated_at: at,
            },
        );
    }

    pub fn entries(&self) -> &BTreeMap<String, Stance> {
        &self.entries
    }

    /// SHA-256 over the serialized entries.
    pub fn digest(&self) -> String {
        let json = serde_json::to_string(&self.entries).expect("ledger serializes");
        format!("{:x}", Sha256::digest(json.as_bytes()))
    }
}
