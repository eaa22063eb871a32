//! Persona sampling and background-memory generation.
//!
//! Big Five scores only condition the formative-memory prompts. They are
//! skipped by serialization and dropped from the bundle once generation ends.

use chrono::{Datelike, NaiveDate, NaiveDateTime};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::gateway::{Gateway, GatewayError, PromptText, SamplingParams};
use crate::memory::{render_entries, MemoryEntry, MemoryError, MemoryStore, MemoryTag};
use crate::templates::{render, TemplateId};

#[derive(Debug, Error)]
pub enum PersonaError {
    #[error(transparent)]
    Gateway(#[from] GatewayError),
    #[error(transparent)]
    Memory(#[from] MemoryError),
    #[error("persona config invalid: {0}")]
    Config(String),
}

pub type Result<T> = std::result::Result<T, PersonaError>;

pub const COHORT_SPAN_YEARS: i32 = 16;
pub const FORMATIVE_AGES: [i32; 7] = [6, 9, 13, 16, 19, 21, 23];

pub const DEFAULT_NAMES: &[&str] = &[
    "Elodie", "Nigel", "Jin", "Sandra", "Rory", "Priya", "Mateo", "Aisha", "Tomasz", "Grace",
    "Kwame", "Lena", "Dmitri", "Rosa", "Hiroshi", "Fatima", "Connor", "Mei", "Samuel", "Ingrid",
    "Omar", "Beatriz", "Felix", "Nadia",
];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PersonaConfig {
    pub names: Vec<String>,
    /// First birth year of each 16-year cohort band.
    pub cohorts: Vec<i32>,
    pub town: String,
    pub study_time: NaiveDateTime,
    /// When the residence and sign-up memories are dated.
    pub context_time: NaiveDateTime,
    pub prelab_time: NaiveDateTime,
}

fn datetime(y: i32, mo: u32, d: u32, h: u32, mi: u32) -> NaiveDateTime {
    NaiveDate::from_ymd_opt(y, mo, d)
        .and_then(|d| d.and_hms_opt(h, mi, 0))
        .expect("valid constant date")
}

impl Default for PersonaConfig {
    fn default() -> Self {
        Self {
            names: DEFAULT_NAMES.iter().map(|s| s.to_string()).collect(),
            cohorts: vec![1938, 1954, 1970, 1986],
            town: "Riverbend".to_string(),
            study_time: datetime(2024, 10, 1, 14, 0),
            context_time: datetime(2024, 9, 25, 9, 50),
            prelab_time: datetime(2024, 10, 1, 13, 0),
        }
    }
}

impl PersonaConfig {
    pub fn validate(&self) -> Result<()> {
        if self.names.is_empty() || self.names.iter().any(|n| n.trim().is_empty()) {
            return Err(PersonaError::Config(
                "name list must be non-empty with no blank names".into(),
            ));
        }
        if self.cohorts.is_empty() {
            return Err(PersonaError::Config(
                "at least one cohort band is required".into(),
            ));
        }
        let latest_birth = self.cohorts.iter().max().expect("non-empty") + COHORT_SPAN_YEARS - 1;
        let last_age = FORMATIVE_AGES[FORMATIVE_AGES.len() - 1];
        if latest_birth + last_age > self.context_time.year() {
            return Err(PersonaError::Config(format!(
                "cohort starting {} is too young for a memory at age {last_age}",
                latest_birth - COHORT_SPAN_YEARS + 1
            )));
        }
        Ok(())
    }

    /// "1st of October 2024 at 14:00"
    pub fn study_date_text(&self) -> String {
        let day = self.study_time.day();
        let suffix = match (day % 10, day % 100) {
            (1, n) if n != 11 => "st",
            (2, n) if n != 12 => "nd",
            (3, n) if n != 13 => "rd",
            _ => "th",
        };
        format!(
            "{day}{suffix} of {} at {}",
            self.study_time.format("%B %Y"),
            self.study_time.format("%H:%M")
        )
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BigFive {
    pub openness: f64,
    pub conscientiousness: f64,
    pub extraversion: f64,
    pub agreeableness: f64,
    pub neuroticism: f64,
}

impl BigFive {
    pub fn as_array(&self) -> [f64; 5] {
        [
            self.openness,
            self.conscientiousness,
            self.extraversion,
            self.agreeableness,
            self.neuroticism,
        ]
    }

    /// Plain-language rendering used to condition generation prompts.
    pub fn describe(&self) -> String {
        const WORDS: [[&str; 3]; 5] = [
            [
                "conventional and practical",
                "moderately curious",
                "curious and imaginative",
            ],
            [
                "spontaneous and easygoing",
                "reasonably organized",
                "disciplined and organized",
            ],
            [
                "reserved and quiet",
                "sociable in small doses",
                "outgoing and talkative",
            ],
            [
                "blunt and competitive",
                "fairly cooperative",
                "warm and compassionate",
            ],
            [
                "calm and emotionally steady",
                "sometimes anxious",
                "sensitive and easily worried",
            ],
        ];
        let level = |v: f64| {
            if v < 1.0 / 3.0 {
                0
            } else if v < 2.0 / 3.0 {
                1
            } else {
                2
            }
        };
        let parts: Vec<&str> = self
            .as_array()
            .iter()
            .zip(WORDS.iter())
            .map(|(v, w)| w[level(*v)])
            .collect();
        format!(
            "{}, {}, {}, {}, and {}",
            parts[0], parts[1], parts[2], parts[3], parts[4]
        )
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Persona {
    pub name: String,
    pub cohort_start_year: i32,
    pub birth_date: NaiveDate,
    #[serde(skip)]
    pub big_five: Option<BigFive>,
    pub traits_summary: String,
}

impl Persona {
    pub fn cohort_end_year(&self) -> i32 {
        self.cohort_start_year + COHORT_SPAN_YEARS - 1
    }

    /// Birthday at `age`, at midnight.
    pub fn birthday(&self, age: i32) -> NaiveDateTime {
        self.birth_date
            .with_year(self.birth_date.year() + age)
            .and_then(|d| d.and_hms_opt(0, 0, 0))
            .expect("birth day is at most the 28th")
    }
}

pub fn sample_persona(seed: u64, config: &PersonaConfig) -> Result<Persona> {
    config.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let name = config
        .names
        .choose(&mut rng)
        .expect("validated non-empty")
        .clone();
    let cohort_start_year = *config
        .cohorts
        .choose(&mut rng)
        .expect("validated non-empty");
    let year = cohort_start_year + rng.gen_range(0..COHORT_SPAN_YEARS);
    let month = rng.gen_range(1..=12);
    let day = rng.gen_range(1..=28);
    let birth_date = NaiveDate::from_ymd_opt(year, month, day).expect("day <= 28 is always valid");
    let big_five = BigFive {
        openness: rng.gen(),
        conscientiousness: rng.gen(),
        extraversion: rng.gen(),
        agreeableness: rng.gen(),
        neuroticism: rng.gen(),
    };
    Ok(Persona {
        traits_summary: format!("{name} is {}.", big_five.describe()),
        name,
        cohort_start_year,
        birth_date,
        big_five: Some(big_five),
    })
}

fn complete(gateway: &Gateway, text: String, template: TemplateId) -> Result<String> {
    let prompt = PromptText::from_template(text, template)?;
    Ok(gateway
        .complete_text(&prompt, &SamplingParams::free_text())?
        .trimmed()
        .to_string())
}

pub fn generate_formative_memories(
    persona: &Persona,
    gateway: &Gateway,
) -> Result<Vec<MemoryEntry>> {
    let mut out: Vec<MemoryEntry> = Vec::with_capacity(FORMATIVE_AGES.len());
    for age in FORMATIVE_AGES {
        let previous = if out.is_empty() {
            "None yet.".to_string()
        } else {
            out.iter()
                .map(|m| m.text.as_str())
                .collect::<Vec<_>>()
                .join("\n")
        };
        let text = render(
            TemplateId::PersonaFormative,
            &[
                ("agent_name", &persona.name),
                (
                    "birth_date",
                    &persona.birth_date.format("%d %B %Y").to_string(),
                ),
                ("cohort_start", &persona.cohort_start_year.to_string()),
                ("cohort_end", &persona.cohort_end_year().to_string()),
                ("personality", &persona.traits_summary),
                ("previous", &previous),
                ("age", &age.to_string()),
                ("year", &(persona.birth_date.year() + age).to_string()),
            ],
        );
        let memory = complete(gateway, text, TemplateId::PersonaFormative)?;
        out.push(MemoryEntry::new(
            persona.birthday(age),
            MemoryTag::Formative,
            memory,
        ));
    }
    Ok(out)
}

/// Whether the text names the appointment: the study day and its hour.
pub fn mentions_appointment(text: &str, config: &PersonaConfig) -> bool {
    let lower = text.to_lowercase();
    let month = config.study_time.format("%B").to_string().to_lowercase();
    let day = config.study_time.day().to_string();
    let hour24 = config.study_time.format("%H:%M").to_string();
    let hour12 = config.study_time.format("%-I:%M").to_string();
    let names_day = lower.contains(&month) && lower.contains(&day);
    let names_hour = lower.contains(&hour24) || lower.contains(&hour12);
    names_day && names_hour
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ContextMemories {
    pub residence: MemoryEntry,
    pub signup: MemoryEntry,
    pub prelab_premise: String,
}

pub fn generate_context_memories(
    persona: &Persona,
    formative: &[MemoryEntry],
    config: &PersonaConfig,
    gateway: &Gateway,
) -> Result<ContextMemories> {
    let name = persona.name.as_str();
    let residence = MemoryEntry::new(
        config.context_time,
        MemoryTag::Untagged,
        format!("{name} is a resident of {}.", config.town),
    );
    let study_date = config.study_date_text();
    let signup_prompt = render(
        TemplateId::PersonaSignup,
        &[
            ("agent_name", name),
            ("memories", &render_entries(formative)),
            ("town", &config.town),
            ("study_date", &study_date),
        ],
    );
    let mut signup = complete(gateway, signup_prompt, TemplateId::PersonaSignup)?;
    if !mentions_appointment(&signup, config) {
        signup =
            format!("{signup} {name} has an appointment at the research lab on the {study_date}.");
    }
    let signup = MemoryEntry::new(config.context_time, MemoryTag::Untagged, signup);

    let mut so_far = formative.to_vec();
    so_far.push(residence.clone());
    so_far.push(signup.clone());
    let prelab_prompt = render(
        TemplateId::PersonaPrelab,
        &[
            ("agent_name", name),
            ("memories", &render_entries(&so_far)),
            (
                "prelab_time",
                &config.prelab_time.format("%H:%M on %-d %B %Y").to_string(),
            ),
        ],
    );
    let prelab_premise = complete(gateway, prelab_prompt, TemplateId::PersonaPrelab)?;
    Ok(ContextMemories {
        residence,
        signup,
        prelab_premise,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PersonaBundle {
    pub persona: Persona,
    pub formative_memories: Vec<MemoryEntry>,
    pub residence_memory: MemoryEntry,
    pub signup_memory: MemoryEntry,
    pub prelab_scene_premise: String,
}

impl PersonaBundle {
    /// Background memories in chronological order.
    pub fn background(&self) -> Vec<MemoryEntry> {
        let mut all = self.formative_memories.clone();
        all.push(self.residence_memory.clone());
        all.push(self.signup_memory.clone());
        all
    }

    pub fn memory_store(&self) -> Result<MemoryStore> {
        let mut store = MemoryStore::new();
        for entry in self.background() {
            store.record(entry)?;
        }
        Ok(store)
    }
}

/// Samples a persona, generates its background, then discards the Big Five.
pub fn forge_persona(
    seed: u64,
    config: &PersonaConfig,
    gateway: &Gateway,
) -> Result<PersonaBundle> {
    let mut persona = sample_persona(seed, config)?;
    let formative = generate_formative_memories(&persona, gateway)?;
    let context = generate_context_memories(&persona, &formative, config, gateway)?;
    persona.big_five = None;
    Ok(PersonaBundle {
        persona,
        formative_memories: formative,
        residence_memory: context.residence,
        signup_memory: context.signup,
        prelab_scene_premise: context.prelab_premise,
    })
}
