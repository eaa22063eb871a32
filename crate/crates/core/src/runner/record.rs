//! One simulation: persona, script, game master, and the resulting record.

use std::collections::BTreeMap;
use std::sync::Arc;

use chrono::{NaiveDate, NaiveDateTime};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::gateway::{Gateway, LanguageModel, TraceEntry};
use crate::gm::{GameMaster, GmError, WorldState, WORM_OPTIONS};
use crate::logics::{Actor, Logic};
use crate::memory::MemoryError;
use crate::paradigms::{Condition, Experiment, ParadigmError, ScenarioLibrary};
use crate::persona::{forge_persona, PersonaConfig, PersonaError};
use crate::probes::{ProbeId, ProbeResult};

#[derive(Debug, Error)]
pub enum SimulationError {
    #[error(transparent)]
    Persona(#[from] PersonaError),
    #[error(transparent)]
    Paradigm(#[from] ParadigmError),
    #[error(transparent)]
    Gm(#[from] GmError),
    #[error(transparent)]
    Memory(#[from] MemoryError),
}

impl SimulationError {
    pub fn is_no_qualifying_pair(&self) -> bool {
        matches!(
            self,
            SimulationError::Paradigm(ParadigmError::NoQualifyingPair { .. })
                | SimulationError::Gm(GmError::Paradigm(ParadigmError::NoQualifyingPair { .. }))
        )
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct SimulationSpec {
    pub experiment: Experiment,
    pub condition: Condition,
    pub affirmation: bool,
    pub logic: Logic,
    pub seed: u64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum WormChoice {
    Eat,
    Measure,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ItemRatingState {
    pub sampled_items: Vec<String>,
    pub pre_ratings: Vec<(String, u8)>,
    pub chosen_pair: (String, String),
    pub choice: String,
    pub post_ratings: Vec<(String, u8)>,
}

impl ItemRatingState {
    fn rating(list: &[(String, u8)], item: &str) -> Option<u8> {
        list.iter().find(|(i, _)| i == item).map(|(_, r)| *r)
    }

    /// post - pre for each item rated in both phases.
    pub fn deltas(&self) -> BTreeMap<String, i32> {
        self.pre_ratings
            .iter()
            .filter_map(|(item, pre)| {
                Self::rating(&self.post_ratings, item)
                    .map(|post| (item.clone(), i32::from(post) - i32::from(*pre)))
            })
            .collect()
    }

    pub fn rejected(&self) -> &str {
        if self.chosen_pair.0 == self.choice {
            &self.chosen_pair.1
        } else {
            &self.chosen_pair.0
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunRecord {
    pub experiment: Experiment,
    pub condition: Condition,
    pub affirmation: bool,
    pub logic: Logic,
    pub seed: u64,
    pub persona_name: String,
    pub birth_date: NaiveDate,
    pub probes: Vec<ProbeResult>,
    pub items: Option<ItemRatingState>,
    pub worm_choice: Option<WormChoice>,
    pub deltas: BTreeMap<String, i32>,
    pub timesteps: u32,
    pub final_clock: NaiveDateTime,
    pub memory_digest: String,
    pub ledger_digest: String,
    pub gateway_calls: usize,
}

impl Experiment {
    /// Metric names reported for this experiment, in table order.
    pub fn metrics(self) -> &'static [&'static str] {
        match self {
            Experiment::ItemRating => &["chosen_delta", "rejected_delta"],
            Experiment::BoringTask => &["q1", "q2", "q3", "q4"],
            Experiment::Worm => &["eat_rate"],
        }
    }
}

impl RunRecord {
    pub fn spec(&self) -> SimulationSpec {
        SimulationSpec {
            experiment: self.experiment,
            condition: self.condition,
            affirmation: self.affirmation,
            logic: self.logic,
            seed: self.seed,
        }
    }

    /// The last value recorded for a probe question.
    pub fn final_probe(&self, id: ProbeId) -> Option<i32> {
        self.probes
            .iter()
            .rev()
            .find(|p| p.probe == id)
            .map(|p| p.value)
    }

    pub fn metrics(&self) -> BTreeMap<&'static str, f64> {
        let mut out = BTreeMap::new();
        match self.experiment {
            Experiment::ItemRating => {
                if let Some(items) = &self.items {
                    if let Some(d) = self.deltas.get(&items.choice) {
                        out.insert("chosen_delta", f64::from(*d));
                    }
                    if let Some(d) = self.deltas.get(items.rejected()) {
                        out.insert("rejected_delta", f64::from(*d));
                    }
                }
            }
            Experiment::BoringTask => {
                for (name, id) in ["q1", "q2", "q3", "q4"].into_iter().zip(ProbeId::ALL) {
                    if let Some(v) = self.final_probe(id) {
                        out.insert(name, f64::from(v));
                    }
                }
            }
            Experiment::Worm => {
                if let Some(choice) = self.worm_choice {
                    out.insert(
                        "eat_rate",
                        if choice == WormChoice::Eat {
                            100.0
                        } else {
                            0.0
                        },
                    );
                }
            }
        }
        out
    }
}

#[derive(Debug)]
pub struct Simulation {
    pub record: RunRecord,
    pub world: WorldState,
    pub trace: Vec<TraceEntry>,
}

pub fn simulate(
    spec: SimulationSpec,
    backend: Arc<dyn LanguageModel>,
    persona_config: &PersonaConfig,
    scenarios: &ScenarioLibrary,
) -> Result<Simulation, SimulationError> {
    let gateway = Gateway::new(backend.fork()).with_seed(spec.seed);
    let script = scenarios.build(spec.experiment, spec.condition, spec.affirmation, spec.seed)?;
    let bundle = forge_persona(spec.seed, persona_config, &gateway)?;
    let actor =
        Actor::new(bundle.persona.name.clone(), spec.logic).with_memory(bundle.memory_store()?);
    let mut vars = BTreeMap::new();
    vars.insert("agent_name".to_string(), bundle.persona.name.clone());
    vars.insert(
        "prelab_premise".to_string(),
        bundle.prelab_scene_premise.clone(),
    );
    let gm = GameMaster::new(
        &gateway,
        &script,
        actor,
        persona_config.study_time.date(),
        vars,
    )?;
    let world = gm.run()?;

    let m = &world.measurements;
    let items = match (&m.presented, &m.item_choice) {
        (Some(pair), Some(choice)) => Some(ItemRatingState {
            sampled_items: script.items.clone(),
            pre_ratings: m.pre_ratings.clone(),
            chosen_pair: pair.clone(),
            choice: choice.clone(),
            post_ratings: m.post_ratings.clone(),
        }),
        _ => None,
    };
    let worm_choice = m.worm_choice.as_deref().map(|label| {
        if label == WORM_OPTIONS[0] {
            WormChoice::Eat
        } else {
            WormChoice::Measure
        }
    });
    let record = RunRecord {
        experiment: spec.experiment,
        condition: spec.condition,
        affirmation: spec.affirmation,
        logic: spec.logic,
        seed: spec.seed,
        persona_name: bundle.persona.name.clone(),
        birth_date: bundle.persona.birth_date,
        probes: m.probes.clone(),
        deltas: items
            .as_ref()
            .map(ItemRatingState::deltas)
            .unwrap_or_default(),
        items,
        worm_choice,
        timesteps: world.timestep,
        final_clock: world.clock,
        memory_digest: world.actor.memory_digest(),
        ledger_digest: world.actor.ledger_digest(),
        gateway_calls: gateway.call_count(),
    };
    Ok(Simulation {
        record,
        world,
        trace: gateway.trace(),
    })
}
