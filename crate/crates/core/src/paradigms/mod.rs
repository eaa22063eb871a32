//! Experiment scripts: Item Rating, Boring Task and Worm, with the optional
//! self-affirmation prelude.

mod items;
mod scenario;

pub use items::{
    items_list, qualifying_pairs, sample_items, select_choice_pair, with_article, ITEMS_SHOWN,
};
pub use scenario::{CommonFile, ExperimentFile, ScenarioLibrary, SceneSpec};

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::gm::Scene;

#[derive(Debug, Error)]
pub enum ParadigmError {
    #[error("condition {condition} does not belong to the {experiment} experiment")]
    InvalidCondition {
        experiment: Experiment,
        condition: Condition,
    },
    #[error("no pair of items satisfies the {condition} condition")]
    NoQualifyingPair { condition: Condition },
    #[error("pair selection needs 3 rated items, got {0}")]
    WrongItemCount(usize),
    #[error("scenario file {file}: {message}")]
    Scenario { file: String, message: String },
    #[error("unknown {kind} {value:?}")]
    Unknown { kind: &'static str, value: String },
}

pub type Result<T> = std::result::Result<T, ParadigmError>;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Experiment {
    ItemRating,
    BoringTask,
    Worm,
}

impl Experiment {
    pub const ALL: [Experiment; 3] = [
        Experiment::ItemRating,
        Experiment::BoringTask,
        Experiment::Worm,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            Experiment::ItemRating => "item_rating",
            Experiment::BoringTask => "boring_task",
            Experiment::Worm => "worm",
        }
    }

    pub fn conditions(self) -> &'static [Condition] {
        match self {
            Experiment::ItemRating => &[Condition::Hard, Condition::Easy],
            Experiment::BoringTask => &[Condition::Five, Condition::TwoHundred, Condition::Control],
            Experiment::Worm => &[Condition::Forced, Condition::Choice],
        }
    }
}

impl fmt::Display for Experiment {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Experiment {
    type Err = ParadigmError;

    fn from_str(s: &str) -> Result<Self> {
        let key = s.trim().to_lowercase().replace('-', "_");
        Experiment::ALL
            .into_iter()
            .find(|e| e.as_str() == key)
            .ok_or_else(|| ParadigmError::Unknown {
                kind: "experiment",
                value: s.to_string(),
            })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Condition {
    Hard,
    Easy,
    Five,
    TwoHundred,
    Control,
    Forced,
    Choice,
}

impl Condition {
    pub const ALL: [Condition; 7] = [
        Condition::Hard,
        Condition::Easy,
        Condition::Five,
        Condition::TwoHundred,
        Condition::Control,
        Condition::Forced,
        Condition::Choice,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            Condition::Hard => "hard",
            Condition::Easy => "easy",
            Condition::Five => "five",
            Condition::TwoHundred => "two_hundred",
            Condition::Control => "control",
            Condition::Forced => "forced",
            Condition::Choice => "choice",
        }
    }

    pub fn experiment(self) -> Experiment {
        match self {
            Condition::Hard | Condition::Easy => Experiment::ItemRating,
            Condition::Five | Condition::TwoHundred | Condition::Control => Experiment::BoringTask,
            Condition::Forced | Condition::Choice => Experiment::Worm,
        }
    }
}

impl fmt::Display for Condition {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Condition {
    type Err = ParadigmError;

    fn from_str(s: &str) -> Result<Self> {
        let key = match s.trim().to_lowercase().replace('-', "_").as_str() {
            "$5" | "5" => "five".to_string(),
            "$200" | "200" => "two_hundred".to_string(),
            other => other.to_string(),
        };
        Condition::ALL
            .into_iter()
            .find(|c| c.as_str() == key)
            .ok_or_else(|| ParadigmError::Unknown {
                kind: "condition",
                value: s.to_string(),
            })
    }
}

/// A fully built, immutable experiment script. Premises are still templates;
/// the game master substitutes names and run-time values on injection.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScenarioScript {
    pub experiment: Experiment,
    pub condition: Condition,
    pub affirmation: bool,
    pub seed: u64,
    pub scenes: Vec<Scene>,
    /// The three sampled items (Item Rating only), in display order.
    pub items: Vec<String>,
}

impl ScenarioScript {
    /// Variables known when the script is built.
    pub fn static_vars(&self) -> BTreeMap<String, String> {
        let mut vars = BTreeMap::new();
        if !self.items.is_empty() {
            vars.insert("items_list".to_string(), items_list(&self.items));
        }
        vars
    }

    pub fn scene(&self, name: &str) -> Option<&Scene> {
        self.scenes.iter().find(|s| s.name == name)
    }

    pub fn total_timesteps(&self) -> u32 {
        self.scenes.iter().map(|s| s.timestep_budget).sum()
    }
}

/// Builds the script from the built-in scenario files.
pub fn build_scenario(
    experiment: Experiment,
    condition: Condition,
    affirmation: bool,
    seed: u64,
) -> Result<ScenarioScript> {
    ScenarioLibrary::builtin()?.build(experiment, condition, affirmation, seed)
}

/// The condition-specific memories injected at `scene_name`, rendered.
pub fn inject_condition_memories(
    script: &ScenarioScript,
    scene_name: &str,
    agent_name: &str,
) -> Result<Vec<String>> {
    let library = ScenarioLibrary::builtin()?;
    let file = library.experiment(script.experiment);
    let spec = file
        .scene
        .iter()
        .find(|s| s.name == scene_name)
        .ok_or_else(|| ParadigmError::Unknown {
            kind: "scene",
            value: scene_name.to_string(),
        })?;
    Ok(spec
        .by_condition
        .get(script.condition.as_str())
        .map(|list| {
            list.iter()
                .map(|t| crate::templates::substitute(t, &[("agent_name", agent_name)]))
                .collect()
        })
        .unwrap_or_default())
}

/// The self-affirmation prelude scenes.
pub fn build_affirmation_prelude() -> Result<Vec<Scene>> {
    let library = ScenarioLibrary::builtin()?;
    library
        .common
        .affirmation
        .iter()
        .map(|s| s.to_scene(&[], None, "common"))
        .collect()
}
