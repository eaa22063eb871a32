//! Scenario files: the on-disk form of the experiment scripts.

use std::collections::BTreeMap;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{sample_items, Condition, Experiment, ParadigmError, Result, ScenarioScript};
use crate::gm::{BeatKind, NpcSpec, Scene, SceneStart};
use crate::probes::ProbeId;

const EXPLANATION_MARK: &str = "@explanation";
const CONDITION_MARK: &str = "@condition";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SceneSpec {
    pub name: String,
    pub location: String,
    pub start: SceneStart,
    #[serde(default)]
    pub steps: u32,
    #[serde(default)]
    pub beat: BeatKind,
    #[serde(default)]
    pub premise: Vec<String>,
    /// Condition name to the memories replacing `@condition`.
    #[serde(default)]
    pub by_condition: BTreeMap<String, Vec<String>>,
    pub protocol: String,
    pub action_prompt: Option<String>,
    #[serde(default)]
    pub npc: Vec<NpcSpec>,
    #[serde(default)]
    pub probes: Vec<ProbeId>,
    pub step_cue: Option<String>,
    #[serde(default)]
    pub select_pair: bool,
}

impl SceneSpec {
    pub fn to_scene(
        &self,
        explanation: &[String],
        condition: Option<Condition>,
        file: &str,
    ) -> Result<Scene> {
        let err = |message: String| ParadigmError::Scenario {
            file: file.to_string(),
            message,
        };
        let mut premise = Vec::with_capacity(self.premise.len());
        for line in &self.premise {
            match line.as_str() {
                EXPLANATION_MARK => premise.extend(explanation.iter().cloned()),
                CONDITION_MARK => {
                    let condition = condition
                        .ok_or_else(|| err(format!("scene {:?} needs a condition", self.name)))?;
                    let lines = self.by_condition.get(condition.as_str()).ok_or_else(|| {
                        err(format!(
                            "scene {:?} has no memories for condition {condition}",
                            self.name
                        ))
                    })?;
                    premise.extend(lines.iter().cloned());
                }
                _ => premise.push(line.clone()),
            }
        }
        Ok(Scene {
            name: self.name.clone(),
            location: self.location.clone(),
            start: self.start,
            timestep_budget: self.steps,
            beat: self.beat,
            premise_memories: premise,
            protocol: self.protocol.clone(),
            action_prompt_override: self.action_prompt.clone(),
            npc_specs: self.npc.clone(),
            probe_points: self.probes.clone(),
            step_cue: self.step_cue.clone(),
            select_pair: self.select_pair,
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CommonFile {
    pub prelab: SceneSpec,
    pub intake: SceneSpec,
    pub affirmation: Vec<SceneSpec>,
    pub post: SceneSpec,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentFile {
    pub experiment: Experiment,
    pub conditions: Vec<Condition>,
    #[serde(default)]
    pub item_pool: Vec<String>,
    pub explanation: Vec<String>,
    pub scene: Vec<SceneSpec>,
}

impl ExperimentFile {
    fn validate(&self, file: &str) -> Result<()> {
        let err = |message: String| ParadigmError::Scenario {
            file: file.to_string(),
            message,
        };
        for c in &self.conditions {
            if c.experiment() != self.experiment {
                return Err(err(format!("condition {c} belongs to {}", c.experiment())));
            }
        }
        for scene in &self.scene {
            for key in scene.by_condition.keys() {
                if !self.conditions.iter().any(|c| c.as_str() == key) {
                    return Err(err(format!(
                        "scene {:?} names unknown condition {key:?}",
                        scene.name
                    )));
                }
            }
        }
        if self.experiment == Experiment::ItemRating && self.item_pool.len() < super::ITEMS_SHOWN {
            return Err(err("item pool needs at least three items".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScenarioLibrary {
    pub common: CommonFile,
    pub item_rating: ExperimentFile,
    pub boring_task: ExperimentFile,
    pub worm: ExperimentFile,
}

fn parse<T: serde::de::DeserializeOwned>(file: &str, text: &str) -> Result<T> {
    toml::from_str(text).map_err(|e| ParadigmError::Scenario {
        file: file.to_string(),
        message: e.to_string(),
    })
}

impl ScenarioLibrary {
    pub fn from_sources(
        common: &str,
        item_rating: &str,
        boring_task: &str,
        worm: &str,
    ) -> Result<Self> {
        let library = Self {
            common: parse("common.toml", common)?,
            item_rating: parse("item_rating.toml", item_rating)?,
            boring_task: parse("boring_task.toml", boring_task)?,
            worm: parse("worm.toml", worm)?,
        };
        for e in Experiment::ALL {
            let file = library.experiment(e);
            if file.experiment != e {
                return Err(ParadigmError::Scenario {
                    file: format!("{e}.toml"),
                    message: format!("declares experiment {}", file.experiment),
                });
            }
            file.validate(&format!("{e}.toml"))?;
        }
        Ok(library)
    }

    pub fn builtin() -> Result<Self> {
        Self::from_sources(
            include_str!("../../assets/scenarios/common.toml"),
            include_str!("../../assets/scenarios/item_rating.toml"),
            include_str!("../../assets/scenarios/boring_task.toml"),
            include_str!("../../assets/scenarios/worm.toml"),
        )
    }

    /// Loads `common.toml`, `item_rating.toml`, `boring_task.toml` and
    /// `worm.toml` from a directory.
    pub fn from_dir(dir: &Path) -> Result<Self> {
        let read = |name: &str| {
            std::fs::read_to_string(dir.join(name)).map_err(|e| ParadigmError::Scenario {
                file: name.to_string(),
                message: e.to_string(),
            })
        };
        Self::from_sources(
            &read("common.toml")?,
            &read("item_rating.toml")?,
            &read("boring_task.toml")?,
            &read("worm.toml")?,
        )
    }

    pub fn experiment(&self, experiment: Experiment) -> &ExperimentFile {
        match experiment {
            Experiment::ItemRating => &self.item_rating,
            Experiment::BoringTask => &self.boring_task,
            Experiment::Worm => &self.worm,
        }
    }

    /// Pre-lab, intake, optional prelude, the experiment's scenes, post.
    pub fn build(
        &self,
        experiment: Experiment,
        condition: Condition,
        affirmation: bool,
        seed: u64,
    ) -> Result<ScenarioScript> {
        let file = self.experiment(experiment);
        if condition.experiment() != experiment || !file.conditions.contains(&condition) {
            return Err(ParadigmError::InvalidCondition {
                experiment,
                condition,
            });
        }
        let name = format!("{experiment}.toml");
        let mut scenes = vec![
            self.common.prelab.to_scene(&[], None, "common.toml")?,
            self.common
                .intake
                .to_scene(&file.explanation, None, "common.toml")?,
        ];
        if affirmation {
            for spec in &self.common.affirmation {
                scenes.push(spec.to_scene(&[], None, "common.toml")?);
            }
        }
        for spec in &file.scene {
            scenes.push(spec.to_scene(&[], Some(condition), &name)?);
        }
        scenes.push(self.common.post.to_scene(&[], None, "common.toml")?);
        let items = if experiment == Experiment::ItemRating {
            sample_items(&file.item_pool, seed)
        } else {
            Vec::new()
        };
        Ok(ScenarioScript {
            experiment,
            condition,
            affirmation,
            seed,
            scenes,
            items,
        })
    }
}
