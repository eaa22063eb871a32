//! Game master: scene schedule, clock, premises, adjudication and NPCs.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use chrono::{Duration, NaiveDate, NaiveDateTime, NaiveTime};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::gateway::{Gateway, GatewayError, PromptText, SamplingParams};
use crate::logics::{Actor, LogicError};
use crate::memory::{MemoryError, MemoryTag};
use crate::paradigms::{select_choice_pair, ParadigmError, ScenarioScript};
use crate::probes::{self, ProbeError, ProbeId, ProbeResult, RatingPhase};
use crate::templates::{render, substitute, unresolved_placeholder, TemplateId};

pub const STEP_MINUTES: i64 = 2;

#[derive(Debug, Error)]
pub enum GmError {
    #[error(transparent)]
    Logic(#[from] LogicError),
    #[error(transparent)]
    Probe(#[from] ProbeError),
    #[error(transparent)]
    Gateway(#[from] GatewayError),
    #[error(transparent)]
    Memory(#[from] MemoryError),
    #[error(transparent)]
    Paradigm(#[from] ParadigmError),
    #[error("scene {scene:?} has no timesteps left")]
    SceneExhausted { scene: String },
    #[error("no scene is active")]
    NoActiveScene,
    #[error("the script has no scenes left")]
    ScriptFinished,
    #[error("action suffix is empty")]
    EmptySuffix,
    #[error("scene {scene:?} starts at {start} but the clock already reads {clock}")]
    ClockRegression {
        scene: String,
        clock: NaiveDateTime,
        start: NaiveDateTime,
    },
    #[error("the first scene must start at a fixed time")]
    NoStartTime,
    #[error("scene {scene:?} references unknown variable {name}")]
    MissingVariable { scene: String, name: String },
    #[error("scene {scene:?} has {budget} steps but only {items} items to rate")]
    ItemsMissing {
        scene: String,
        budget: u32,
        items: usize,
    },
}

pub type Result<T> = std::result::Result<T, GmError>;

/// When a scene begins relative to the clock.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub enum SceneStart {
    At(NaiveTime),
    Continue,
    AfterGap { minutes: i64 },
}

impl FromStr for SceneStart {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        let s = s.trim();
        if s == "continue" {
            return Ok(SceneStart::Continue);
        }
        if let Some(m) = s.strip_prefix('+') {
            return m
                .parse()
                .map(|minutes| SceneStart::AfterGap { minutes })
                .map_err(|_| format!("bad gap {s:?}"));
        }
        NaiveTime::parse_from_str(s, "%H:%M")
            .map(SceneStart::At)
            .map_err(|_| format!("bad scene start {s:?}"))
    }
}

impl TryFrom<String> for SceneStart {
    type Error = String;

    fn try_from(s: String) -> std::result::Result<Self, String> {
        s.parse()
    }
}

impl fmt::Display for SceneStart {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            SceneStart::At(t) => write!(f, "{}", t.format("%H:%M")),
            SceneStart::Continue => f.write_str("continue"),
            SceneStart::AfterGap { minutes } => write!(f, "+{minutes}"),
        }
    }
}

impl From<SceneStart> for String {
    fn from(s: SceneStart) -> String {
        s.to_string()
    }
}

/// What each timestep of a scene consists of.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BeatKind {
    #[default]
    Act,
    RatePre,
    RatePost,
    DecideItem,
    DecideWorm,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct NpcSpec {
    pub name: String,
    pub behaviour_instructions: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Scene {
    pub name: String,
    pub location: String,
    pub start: SceneStart,
    pub timestep_budget: u32,
    pub beat: BeatKind,
    /// Templates, injected in order at the scene's start time.
    pub premise_memories: Vec<String>,
    pub protocol: String,
    pub action_prompt_override: Option<String>,
    pub npc_specs: Vec<NpcSpec>,
    pub probe_points: Vec<ProbeId>,
    /// Observation injected before each rating step; `{item}` names the item.
    pub step_cue: Option<String>,
    pub select_pair: bool,
}

pub const WORM_OPTIONS: [&str; 2] = ["eat the worm", "measure the worm"];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum EventKind {
    SceneStart {
        location: String,
    },
    Premise {
        text: String,
    },
    Cue {
        text: String,
    },
    Action {
        suffix: String,
    },
    Outcome {
        text: String,
    },
    Npc {
        name: String,
        utterance: String,
    },
    Rating {
        item: String,
        phase: RatingPhase,
        value: u8,
    },
    Choice {
        label: String,
        restated: bool,
    },
    Probes {
        results: Vec<ProbeResult>,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GmEvent {
    pub seq: u64,
    pub time: NaiveDateTime,
    pub scene: String,
    pub timestep: u32,
    #[serde(flatten)]
    pub kind: EventKind,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Measurements {
    pub pre_ratings: Vec<(String, u8)>,
    pub post_ratings: Vec<(String, u8)>,
    pub presented: Option<(String, String)>,
    pub item_choice: Option<String>,
    pub worm_choice: Option<String>,
    pub probes: Vec<ProbeResult>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WorldState {
    pub clock: NaiveDateTime,
    pub current_scene: usize,
    pub scene_entered: bool,
    pub steps_in_scene: u32,
    /// Timesteps taken across all scenes.
    pub timestep: u32,
    pub actor: Actor,
    pub vars: BTreeMap<String, String>,
    pub last_outcome: Option<String>,
    pub dialogue: Vec<String>,
    pub events: Vec<GmEvent>,
    pub measurements: Measurements,
}

/// Renders a template against the variables, failing on anything unresolved.
pub fn fill(scene: &str, text: &str, vars: &BTreeMap<String, String>) -> Result<String> {
    let pairs: Vec<(&str, &str)> = vars.iter().map(|(k, v)| (k.as_str(), v.as_str())).collect();
    let out = substitute(text, &pairs);
    match unresolved_placeholder(&out) {
        Some(name) => Err(GmError::MissingVariable {
            scene: scene.to_string(),
            name: name.to_string(),
        }),
        None => Ok(out),
    }
}

pub fn adjudicate(
    gateway: &Gateway,
    scene: &Scene,
    vars: &BTreeMap<String, String>,
    last_outcome: Option<&str>,
    suffix: &str,
) -> Result<String> {
    let suffix = suffix.trim();
    if suffix.is_empty() {
        return Err(GmError::EmptySuffix);
    }
    let agent_name = vars
        .get("agent_name")
        .map(String::as_str)
        .unwrap_or_default();
    let text = render(
        TemplateId::GmAdjudicate,
        &[
            ("scene_name", &scene.name),
            ("location", &fill(&scene.name, &scene.location, vars)?),
            ("protocol", &fill(&scene.name, &scene.protocol, vars)?),
            ("last_outcome", last_outcome.unwrap_or("None yet.")),
            ("agent_name", agent_name),
            ("suffix", suffix),
        ],
    );
    let prompt = PromptText::from_template(text, TemplateId::GmAdjudicate)?;
    Ok(gateway
        .complete_text(&prompt, &SamplingParams::free_text())?
        .trimmed()
        .to_string())
}

pub fn npc_turn(
    gateway: &Gateway,
    npc: &NpcSpec,
    instructions: &str,
    dialogue: &[String],
) -> Result<String> {
    let text = render(
        TemplateId::GmNpc,
        &[
            ("npc_name", &npc.name),
            ("instructions", instructions),
            ("dialogue", &dialogue.join("\n")),
        ],
    );
    let prompt = PromptText::from_template(text, TemplateId::GmNpc)?;
    let reply = gateway.complete_text(&prompt, &SamplingParams::free_text())?;
    let reply = reply.trimmed();
    let reply = reply
        .strip_prefix(&format!("{}:", npc.name))
        .unwrap_or(reply)
        .trim();
    Ok(reply.trim_matches('"').trim().to_string())
}

pub struct GameMaster<'a> {
    gateway: &'a Gateway,
    script: &'a ScenarioScript,
    world: WorldState,
}

impl<'a> GameMaster<'a> {
    /// `vars` must provide `agent_name` and anything else the premises use.
    pub fn new(
        gateway: &'a Gateway,
        script: &'a ScenarioScript,
        actor: Actor,
        date: NaiveDate,
        mut vars: BTreeMap<String, String>,
    ) -> Result<Self> {
        let first = script.scenes.first().ok_or(GmError::ScriptFinished)?;
        let SceneStart::At(time) = first.start else {
            return Err(GmError::NoStartTime);
        };
        vars.entry("agent_name".to_string())
            .or_insert_with(|| actor.name.clone());
        vars.extend(script.static_vars());
        Ok(Self {
            gateway,
            script,
            world: WorldState {
                clock: date.and_time(time),
                current_scene: 0,
                scene_entered: false,
                steps_in_scene: 0,
                timestep: 0,
                actor,
                vars,
                last_outcome: None,
                dialogue: Vec::new(),
                events: Vec::new(),
                measurements: Measurements::default(),
            },
        })
    }

    pub fn world(&self) -> &WorldState {
        &self.world
    }

    pub fn into_world(self) -> WorldState {
        self.world
    }

    pub fn current_scene(&self) -> Option<&'a Scene> {
        self.script.scenes.get(self.world.current_scene)
    }

    fn event(&mut self, kind: EventKind) {
        let scene = self
            .current_scene()
            .map(|s| s.name.clone())
            .unwrap_or_default();
        self.world.events.push(GmEvent {
            seq: self.world.events.len() as u64,
            time: self.world.clock,
            scene,
            timestep: self.world.timestep,
            kind,
        });
    }

    fn observe(&mut self, text: String) -> Result<()> {
        self.world
            .actor
            .memory
            .add(self.world.clock, MemoryTag::Observation, text)?;
        Ok(())
    }

    /// Sets the clock for the current scene and injects its premises.
    pub fn enter_scene(&mut self) -> Result<()> {
        let scene = self.current_scene().ok_or(GmError::ScriptFinished)?;
        match scene.start {
            SceneStart::At(time) => {
                let start = self.world.clock.date().and_time(time);
                if start < self.world.clock {
                    return Err(GmError::ClockRegression {
                        scene: scene.name.clone(),
                        clock: self.world.clock,
                        start,
                    });
                }
                self.world.clock = start;
            }
            SceneStart::AfterGap { minutes } => self.world.clock += Duration::minutes(minutes),
            SceneStart::Continue => {}
        }
        if scene.select_pair {
            let (a, b) = select_choice_pair(
                &self.world.measurements.pre_ratings,
                self.script.condition,
                self.script.seed,
            )?;
            self.world
                .vars
                .insert("presented_item[0]".into(), a.clone());
            self.world
                .vars
                .insert("presented_item[1]".into(), b.clone());
            self.world.measurements.presented = Some((a, b));
        }
        self.world.scene_entered = true;
        self.world.steps_in_scene = 0;
        self.world.dialogue.clear();
        let location = fill(&scene.name, &scene.location, &self.world.vars)?;
        self.event(EventKind::SceneStart { location });
        for template in &scene.premise_memories {
            let text = fill(&scene.name, template, &self.world.vars)?;
            self.observe(text.clone())?;
            self.event(EventKind::Premise { text });
        }
        Ok(())
    }

    /// One timestep of the current scene.
    pub fn step(&mut self) -> Result<Vec<GmEvent>> {
        let scene = self.current_scene().ok_or(GmError::ScriptFinished)?;
        if !self.world.scene_entered {
            return Err(GmError::NoActiveScene);
        }
        if self.world.steps_in_scene >= scene.timestep_budget {
            return Err(GmError::SceneExhausted {
                scene: scene.name.clone(),
            });
        }
        let first_event = self.world.events.len();
        match scene.beat {
            BeatKind::Act => {
                self.act_step(scene, None)?;
            }
            BeatKind::DecideItem => {
                let (a, b) = self.world.measurements.presented.clone().ok_or_else(|| {
                    GmError::MissingVariable {
                        scene: scene.name.clone(),
                        name: "presented_item[0]".into(),
                    }
                })?;
                let label = self
                    .act_step(scene, Some(vec![a, b]))?
                    .expect("decision beat yields a choice");
                self.world.vars.insert("chosen_item".into(), label.clone());
                self.world.measurements.item_choice = Some(label);
            }
            BeatKind::DecideWorm => {
                let options = WORM_OPTIONS.iter().map(|s| s.to_string()).collect();
                let label = self
                    .act_step(scene, Some(options))?
                    .expect("decision beat yields a choice");
                self.world.measurements.worm_choice = Some(label);
            }
            BeatKind::RatePre => self.rate_step(scene, RatingPhase::Pre)?,
            BeatKind::RatePost => self.rate_step(scene, RatingPhase::Post)?,
        }
        if !scene.probe_points.is_empty() {
            let questions: Vec<_> = scene.probe_points.iter().map(|p| p.question()).collect();
            let results = probes::administer_probes(
                &self.world.actor,
                self.gateway,
                self.world.clock,
                self.world.timestep,
                &questions,
            )?;
            self.world
                .measurements
                .probes
                .extend(results.iter().cloned());
            self.event(EventKind::Probes { results });
        }
        self.world.steps_in_scene += 1;
        self.world.timestep += 1;
        self.world.clock += Duration::minutes(STEP_MINUTES);
        Ok(self.world.events[first_event..].to_vec())
    }

    /// Actor turn, adjudication, optional choice capture, then NPC replies.
    fn act_step(&mut self, scene: &Scene, decision: Option<Vec<String>>) -> Result<Option<String>> {
        let action_prompt = match &scene.action_prompt_override {
            Some(t) => fill(&scene.name, t, &self.world.vars)?,
            None => self.world.actor.default_action_prompt(),
        };
        let now = self.world.clock;
        let turn = self
            .world
            .actor
            .take_turn(self.gateway, now, &action_prompt)?;
        let suffix = turn.suffix.trimmed().to_string();
        if suffix.is_empty() {
            return Err(GmError::EmptySuffix);
        }
        self.event(EventKind::Action {
            suffix: suffix.clone(),
        });
        let outcome = adjudicate(
            self.gateway,
            scene,
            &self.world.vars,
            self.world.last_outcome.as_deref(),
            &suffix,
        )?;
        self.observe(outcome.clone())?;
        self.event(EventKind::Outcome {
            text: outcome.clone(),
        });
        self.world.dialogue.push(outcome.clone());
        self.world.last_outcome = Some(outcome.clone());

        let mut chosen = None;
        if let Some(options) = decision {
            let choice = probes::capture_final_choice(
                &self.world.actor,
                self.gateway,
                &turn.prefix,
                &suffix,
                &outcome,
                &options,
            )?;
            self.event(EventKind::Choice {
                label: choice.label.clone(),
                restated: choice.restated,
            });
            chosen = Some(choice.label);
        }

        for npc in &scene.npc_specs {
            let instructions = fill(&scene.name, &npc.behaviour_instructions, &self.world.vars)?;
            let utterance = npc_turn(self.gateway, npc, &instructions, &self.world.dialogue)?;
            let line = format!("{} says: \"{utterance}\"", npc.name);
            self.observe(line.clone())?;
            self.world.dialogue.push(line);
            self.event(EventKind::Npc {
                name: npc.name.clone(),
                utterance,
            });
        }
        Ok(chosen)
    }

    fn rate_step(&mut self, scene: &Scene, phase: RatingPhase) -> Result<()> {
        let index = self.world.steps_in_scene as usize;
        let item = self
            .script
            .items
            .get(index)
            .cloned()
            .ok_or_else(|| GmError::ItemsMissing {
                scene: scene.name.clone(),
                budget: scene.timestep_budget,
                items: self.script.items.len(),
            })?;
        if let Some(cue) = &scene.step_cue {
            let mut vars = self.world.vars.clone();
            vars.insert("item".into(), item.clone());
            let text = fill(&scene.name, cue, &vars)?;
            self.observe(text.clone())?;
            self.event(EventKind::Cue { text });
        }
        let value = probes::capture_item_rating(
            &mut self.world.actor,
            self.gateway,
            self.world.clock,
            &item,
        )?;
        let record = match phase {
            RatingPhase::Pre => &mut self.world.measurements.pre_ratings,
            RatingPhase::Post => &mut self.world.measurements.post_ratings,
        };
        record.push((item.clone(), value));
        self.world.last_outcome = Some(probes::rating_observation(
            &self.world.actor.name,
            &item,
            value,
        ));
        self.event(EventKind::Rating { item, phase, value });
        Ok(())
    }

    /// Moves to the next scene and injects its premises.
    pub fn next_scene(&mut self) -> Result<()> {
        if self.world.scene_entered {
            self.world.current_scene += 1;
            self.world.scene_entered = false;
        }
        self.enter_scene()
    }

    pub fn run_scene(&mut self) -> Result<()> {
        self.next_scene()?;
        let budget = self.current_scene().map(|s| s.timestep_budget).unwrap_or(0);
        for _ in 0..budget {
            self.step()?;
        }
        Ok(())
    }

    /// Runs every remaining scene to the end of the script.
    pub fn run(mut self) -> Result<WorldState> {
        while self.world.current_scene + usize::from(self.world.scene_entered)
            < self.script.scenes.len()
        {
            self.run_scene()?;
        }
        Ok(self.world)
    }
}
