//! Prompt-chain decision logics and the per-timestep actor cycle.
//!
//! Each actor runs its pipeline's components in order to build a prefix,
//! then completes the prefix with one action suffix. Festinger and Aronson
//! actors share Attitudes and Beliefs before their conflict components; the
//! Bem actor asks its three self-perception questions instead; the Minimal
//! actor stops after the situation summary.

pub mod components;
pub mod conflict;
pub mod ledger;
pub mod perception;

use std::fmt;
use std::str::FromStr;

use chrono::NaiveDateTime;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::gateway::{CompletionText, Gateway, GatewayError, PromptText, SamplingParams};
use crate::memory::{KeywordRecencyScorer, MemoryError, MemoryStore, RelevanceScorer};
use crate::templates::{render_named, TemplateId};

pub use conflict::{ConflictOutcome, ConflictStatus};
pub use ledger::AttitudeLedger;

pub const PROMPT_TIME_FORMAT: &str = "%Y-%m-%d %H:%M:%S";
pub const NOTHING_NOTABLE: &str = "Nothing notable.";

#[derive(Debug, Error)]
pub enum LogicError {
    #[error(transparent)]
    Gateway(#[from] GatewayError),
    #[error(transparent)]
    Memory(#[from] MemoryError),
    #[error("actor has no memories to summarize")]
    EmptyMemory,
    #[error("{0} requires the situation summary")]
    MissingSummary(&'static str),
    #[error("could not split three domains from {0:?}")]
    DomainParse(String),
    #[error("could not split three focal entities from {0:?}")]
    EntityParse(String),
    #[error("could not extract three resolutions from {0:?}")]
    ResolutionParse(String),
}

pub type Result<T> = std::result::Result<T, LogicError>;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Logic {
    Festinger,
    Aronson,
    Bem,
    Minimal,
}

impl Logic {
    pub const ALL: [Logic; 4] = [Logic::Festinger, Logic::Aronson, Logic::Bem, Logic::Minimal];

    pub fn as_str(self) -> &'static str {
        match self {
            Logic::Festinger => "festinger",
            Logic::Aronson => "aronson",
            Logic::Bem => "bem",
            Logic::Minimal => "minimal",
        }
    }
}

impl fmt::Display for Logic {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Logic {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        match s.trim().to_lowercase().as_str() {
            "festinger" => Ok(Logic::Festinger),
            "aronson" => Ok(Logic::Aronson),
            "bem" => Ok(Logic::Bem),
            "minimal" => Ok(Logic::Minimal),
            other => Err(format!(
                "unknown logic {other:?} (expected festinger, aronson, bem or minimal)"
            )),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Component {
    Instructions,
    Behaviors,
    Attitudes,
    Beliefs,
    CognitiveDissonance,
    SelfConsistency,
    SelfPerception,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PipelineSpec {
    pub logic: Logic,
    pub components: Vec<Component>,
}

impl PipelineSpec {
    pub fn for_logic(logic: Logic) -> Self {
        use Component::*;
        let components = match logic {
            Logic::Festinger => vec![
                Instructions,
                Behaviors,
                Attitudes,
                Beliefs,
                CognitiveDissonance,
            ],
            Logic::Aronson => vec![Instructions, Behaviors, Attitudes, Beliefs, SelfConsistency],
            Logic::Bem => vec![Instructions, Behaviors, SelfPerception],
            Logic::Minimal => vec![Instructions, Behaviors],
        };
        Self { logic, components }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SectionKind {
    Instructions,
    Summary,
    Attitudes,
    Beliefs,
    RecentThoughts,
    SelfPerception,
}

impl SectionKind {
    pub fn for_component(component: Component) -> Self {
        match component {
            Component::Instructions => SectionKind::Instructions,
            Component::Behaviors => SectionKind::Summary,
            Component::Attitudes => SectionKind::Attitudes,
            Component::Beliefs => SectionKind::Beliefs,
            Component::CognitiveDissonance | Component::SelfConsistency => {
                SectionKind::RecentThoughts
            }
            Component::SelfPerception => SectionKind::SelfPerception,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PrefixSection {
    pub kind: SectionKind,
    /// Empty for sections that carry their own labels (self-perception Q/A).
    pub header: String,
    pub body: String,
}

impl PrefixSection {
    pub fn render(&self) -> String {
        if self.header.is_empty() {
            self.body.clone()
        } else {
            format!("{}\n{}", self.header, self.body)
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Prefix {
    pub sections: Vec<PrefixSection>,
}

impl Prefix {
    pub fn render(&self) -> String {
        self.sections
            .iter()
            .map(PrefixSection::render)
            .collect::<Vec<_>>()
            .join("\n\n")
    }

    pub fn kinds(&self) -> Vec<SectionKind> {
        self.sections.iter().map(|s| s.kind).collect()
    }

    pub fn section(&self, kind: SectionKind) -> Option<&PrefixSection> {
        self.sections.iter().find(|s| s.kind == kind)
    }
}

/// Everything a component needs during one timestep.
pub struct ComponentContext<'a> {
    pub agent_name: &'a str,
    pub now: NaiveDateTime,
    pub memory: &'a mut MemoryStore,
    pub ledger: &'a mut AttitudeLedger,
    pub gateway: &'a Gateway,
    pub scorer: &'a dyn RelevanceScorer,
    pub sections: Vec<PrefixSection>,
}

impl ComponentContext<'_> {
    pub fn section(&self, kind: SectionKind) -> Option<&PrefixSection> {
        self.sections.iter().find(|s| s.kind == kind)
    }

    pub fn summary_section(&self, needed_by: &'static str) -> Result<&PrefixSection> {
        self.section(SectionKind::Summary)
            .ok_or(LogicError::MissingSummary(needed_by))
    }

    pub fn now_text(&self) -> String {
        self.now.format(PROMPT_TIME_FORMAT).to_string()
    }

    pub fn named(&self, id: TemplateId) -> String {
        render_named(id, self.agent_name)
    }

    pub fn complete(&self, text: String, question: TemplateId) -> Result<String> {
        let prompt = PromptText::from_template(text, question)?;
        let completion = self
            .gateway
            .complete_text(&prompt, &SamplingParams::free_text())?;
        Ok(completion.trimmed().to_string())
    }

    pub fn choose(&self, text: String, question: TemplateId, options: &[String]) -> Result<usize> {
        let prompt = PromptText::from_template(text, question)?;
        Ok(self
            .gateway
            .choose_option(&prompt, options, &SamplingParams::choice())?
            .index)
    }
}

/// Splits a model-written list into items, dropping bullets and numbering.
pub fn parse_list(text: &str) -> Vec<String> {
    text.lines()
        .map(|line| {
            let mut t = line.trim();
            t = t.trim_start_matches(['-', '*', '•']).trim_start();
            let digits = t.chars().take_while(|c| c.is_ascii_digit()).count();
            if digits > 0 {
                let rest = &t[digits..];
                if let Some(r) = rest.strip_prefix('.').or_else(|| rest.strip_prefix(')')) {
                    t = r.trim_start();
                }
            } else if let Some(r) = t.strip_prefix('(') {
                let d = r.chars().take_while(|c| c.is_ascii_digit()).count();
                if d > 0 && r[d..].starts_with(')') {
                    t = r[d + 1..].trim_start();
                }
            }
            let t = t.trim();
            let t = t
                .strip_prefix('"')
                .and_then(|s| s.strip_suffix('"'))
                .unwrap_or(t);
            t.trim().to_string()
        })
        .filter(|t| !t.is_empty())
        .collect()
}

/// Result of one actor timestep.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Turn {
    pub prefix: Prefix,
    pub suffix: CompletionText,
    pub conflict: Option<ConflictOutcome>,
}

/// Output of running the pipeline up to (not including) the action.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PrefixBuild {
    pub prefix: Prefix,
    pub conflict: Option<ConflictOutcome>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Actor {
    pub name: String,
    pub logic: Logic,
    pub memory: MemoryStore,
    pub ledger: AttitudeLedger,
}

impl Actor {
    pub fn new(name: impl Into<String>, logic: Logic) -> Self {
        Self {
            name: name.into(),
            logic,
            memory: MemoryStore::new(),
            ledger: AttitudeLedger::new(),
        }
    }

    pub fn with_memory(mut self, memory: MemoryStore) -> Self {
        self.memory = memory;
        self
    }

    pub fn pipeline(&self) -> PipelineSpec {
        PipelineSpec::for_logic(self.logic)
    }

    pub fn build_prefix(&mut self, gateway: &Gateway, now: NaiveDateTime) -> Result<PrefixBuild> {
        self.build_prefix_with(gateway, now, &KeywordRecencyScorer::default())
    }

    /// Runs every component of the pipeline in order.
    pub fn build_prefix_with(
        &mut self,
        gateway: &Gateway,
        now: NaiveDateTime,
        scorer: &dyn RelevanceScorer,
    ) -> Result<PrefixBuild> {
        let spec = self.pipeline();
        let mut ctx = ComponentContext {
            agent_name: &self.name,
            now,
            memory: &mut self.memory,
            ledger: &mut self.ledger,
            gateway,
            scorer,
            sections: Vec::new(),
        };
        let mut conflict = None;
        for component in spec.components {
            let section = match component {
                Component::Instructions => components::render_instructions(ctx.agent_name),
                Component::Behaviors => components::run_behaviors(&ctx)?,
                Component::Attitudes => components::run_attitudes(&mut ctx)?,
                Component::Beliefs => components::run_beliefs(&ctx)?,
                Component::CognitiveDissonance => {
                    let outcome = conflict::run_cognitive_dissonance(&mut ctx)?;
                    let section = outcome.section();
                    conflict = Some(outcome);
                    section
                }
                Component::SelfConsistency => {
                    let outcome = conflict::run_self_consistency(&mut ctx)?;
                    let section = outcome.section();
                    conflict = Some(outcome);
                    section
                }
                Component::SelfPerception => perception::run_self_perception(&mut ctx)?,
            };
            ctx.sections.push(section);
        }
        Ok(PrefixBuild {
            prefix: Prefix {
                sections: ctx.sections,
            },
            conflict,
        })
    }

    /// The full action prompt: prefix, then the exercise.
    pub fn action_prompt_text(&self, prefix: &Prefix, action_prompt: &str) -> String {
        let clause = render_named(TemplateId::ActionObjectClause, &self.name);
        format!(
            "{}\n\nExercise: {} {}",
            prefix.render(),
            action_prompt.trim(),
            clause
        )
    }

    /// The default action question for this actor.
    pub fn default_action_prompt(&self) -> String {
        render_named(TemplateId::ActionDefault, &self.name)
    }

    /// One gateway call completing the prefix with an action suffix.
    pub fn act(
        &self,
        gateway: &Gateway,
        prefix: &Prefix,
        action_prompt: &str,
    ) -> Result<CompletionText> {
        let prompt = PromptText::from_template(
            self.action_prompt_text(prefix, action_prompt),
            TemplateId::ActionDefault,
        )?;
        Ok(gateway.complete_text(&prompt, &SamplingParams::free_text())?)
    }

    pub fn take_turn(
        &mut self,
        gateway: &Gateway,
        now: NaiveDateTime,
        action_prompt: &str,
    ) -> Result<Turn> {
        let built = self.build_prefix(gateway, now)?;
        let suffix = self.act(gateway, &built.prefix, action_prompt)?;
        Ok(Turn {
            prefix: built.prefix,
            suffix,
            conflict: built.conflict,
        })
    }

    pub fn memory_digest(&self) -> String {
        self.memory.digest()
    }

    pub fn ledger_digest(&self) -> String {
        self.ledger.digest()
    }
}
