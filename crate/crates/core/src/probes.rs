//! Survey probes, item ratings and final-choice capture.

use chrono::NaiveDateTime;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::gateway::{Gateway, GatewayError, PromptText, SamplingParams};
use crate::logics::{Actor, LogicError, Prefix};
use crate::memory::{MemoryError, MemoryTag};
use crate::templates::{render, TemplateId};

#[derive(Debug, Error)]
pub enum ProbeError {
    #[error(transparent)]
    Logic(#[from] LogicError),
    #[error(transparent)]
    Memory(#[from] MemoryError),
    #[error("no rating on the {scale_min}..{scale_max} scale in {completion:?}")]
    UnparseableRating {
        completion: String,
        scale_min: i32,
        scale_max: i32,
    },
    #[error("could not classify action {suffix:?} into any of {options:?}")]
    UnclassifiableAction {
        suffix: String,
        options: Vec<String>,
    },
    #[error(transparent)]
    Gateway(#[from] GatewayError),
}

pub type Result<T> = std::result::Result<T, ProbeError>;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ProbeId {
    Q1,
    Q2,
    Q3,
    Q4,
}

impl ProbeId {
    pub const ALL: [ProbeId; 4] = [ProbeId::Q1, ProbeId::Q2, ProbeId::Q3, ProbeId::Q4];

    pub fn as_str(self) -> &'static str {
        match self {
            ProbeId::Q1 => "q1",
            ProbeId::Q2 => "q2",
            ProbeId::Q3 => "q3",
            ProbeId::Q4 => "q4",
        }
    }

    pub fn question(self) -> ProbeQuestion {
        let (text, scale_min, scale_max, low, high) = match self {
            ProbeId::Q1 => (
                "Was the experiment task interesting and enjoyable? In what way? In what way was it not?",
                -5,
                5,
                "extremely dull/boring",
                "extremely interesting/enjoyable",
            ),
            ProbeId::Q2 => (
                "Did the experiment give you an opportunity to learn about your own ability to perform these tasks? In what way? In what way not?",
                0,
                10,
                "learned nothing",
                "learned a great deal",
            ),
            ProbeId::Q3 => (
                "From what you know about the experiment and what's involved, would you say the experiment was measuring anything important? That is, do you think the results may have scientific value? In what way? In what way not?",
                0,
                10,
                "no scientific value/importance",
                "a great deal of value/importance",
            ),
            ProbeId::Q4 => (
                "Would you have any desire to participate in another similar experiment? Why? Why not?",
                -5,
                5,
                "definite dislike to participate",
                "definitely like to participate",
            ),
        };
        ProbeQuestion {
            id: self,
            text: text.to_string(),
            scale_min,
            scale_max,
            anchors: (low.to_string(), high.to_string()),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ProbeQuestion {
    pub id: ProbeId,
    pub text: String,
    pub scale_min: i32,
    pub scale_max: i32,
    pub anchors: (String, String),
}

impl ProbeQuestion {
    /// Scale points as option strings; signed scales print "+n" above zero.
    pub fn scale_options(&self) -> Vec<String> {
        let signed = self.scale_min < 0;
        (self.scale_min..=self.scale_max)
            .map(|v| {
                if signed && v > 0 {
                    format!("+{v}")
                } else {
                    v.to_string()
                }
            })
            .collect()
    }

    pub fn contains(&self, value: i32) -> bool {
        (self.scale_min..=self.scale_max).contains(&value)
    }

    pub fn render(&self, agent_name: &str) -> String {
        render(
            TemplateId::ProbeScale,
            &[
                ("question", &self.text),
                ("scale_min", &self.scale_options()[0]),
                ("low_anchor", &self.anchors.0),
                (
                    "scale_max",
                    self.scale_options().last().expect("non-empty scale"),
                ),
                ("high_anchor", &self.anchors.1),
                ("agent_name", agent_name),
            ],
        )
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProbeResult {
    pub probe: ProbeId,
    pub timestep: u32,
    pub time: NaiveDateTime,
    pub value: i32,
    pub raw: String,
}

fn choose_on_scale(
    gateway: &Gateway,
    text: String,
    template: TemplateId,
    options: &[String],
    scale: (i32, i32),
) -> Result<(i32, String)> {
    let prompt = PromptText::from_template(text, template)?;
    match gateway.choose_option(&prompt, options, &SamplingParams::choice()) {
        Ok(outcome) => Ok((scale.0 + outcome.index as i32, outcome.completion)),
        Err(GatewayError::UnparseableChoice { completion, .. }) => {
            Err(ProbeError::UnparseableRating {
                completion,
                scale_min: scale.0,
                scale_max: scale.1,
            })
        }
        Err(e) => Err(e.into()),
    }
}

/// Administers several questions against one prefix built on a throwaway
/// copy of the actor, so the actor itself is never touched.
pub fn administer_probes(
    actor: &Actor,
    gateway: &Gateway,
    now: NaiveDateTime,
    timestep: u32,
    questions: &[ProbeQuestion],
) -> Result<Vec<ProbeResult>> {
    let mut view = actor.clone();
    let prefix = view.build_prefix(gateway, now)?.prefix.render();
    questions
        .iter()
        .map(|q| {
            let text = format!("{prefix}\n\n{}", q.render(&actor.name));
            let (value, raw) = choose_on_scale(
                gateway,
                text,
                TemplateId::ProbeScale,
                &q.scale_options(),
                (q.scale_min, q.scale_max),
            )?;
            Ok(ProbeResult {
                probe: q.id,
                timestep,
                time: now,
                value,
                raw,
            })
        })
        .collect()
}

pub fn administer_probe(
    actor: &Actor,
    gateway: &Gateway,
    now: NaiveDateTime,
    timestep: u32,
    question: &ProbeQuestion,
) -> Result<ProbeResult> {
    Ok(administer_probes(
        actor,
        gateway,
        now,
        timestep,
        std::slice::from_ref(question),
    )?
    .remove(0))
}

pub const RATING_MIN: i32 = 1;
pub const RATING_MAX: i32 = 8;

/// Anchor labels of the eight-point desirability scale.
pub const RATING_LABELS: [&str; 8] = [
    "definitely not at all desirable",
    "very undesirable",
    "moderately undesirable",
    "slightly undesirable",
    "slightly desirable",
    "moderately desirable",
    "very desirable",
    "extremely desirable",
];

pub fn rating_label(value: u8) -> &'static str {
    RATING_LABELS[(value.clamp(1, 8) - 1) as usize]
}

/// `Sandra rates the framed art print a 7 - "very desirable".`
pub fn rating_observation(agent_name: &str, item: &str, value: u8) -> String {
    format!(
        "{agent_name} rates the {item} a {value} - \"{}\".",
        rating_label(value)
    )
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum RatingPhase {
    Pre,
    Post,
}

/// An in-world rating act: runs the actor's pipeline, asks the rating
/// question and records the rating as an observation.
pub fn capture_item_rating(
    actor: &mut Actor,
    gateway: &Gateway,
    now: NaiveDateTime,
    item: &str,
) -> Result<u8> {
    let prefix = actor.build_prefix(gateway, now)?.prefix;
    rate_with_prefix(actor, gateway, &prefix, now, item)
}

pub fn rate_with_prefix(
    actor: &mut Actor,
    gateway: &Gateway,
    prefix: &Prefix,
    now: NaiveDateTime,
    item: &str,
) -> Result<u8> {
    let question = render(
        TemplateId::RatingQuestion,
        &[("item", item), ("agent_name", &actor.name)],
    );
    let options: Vec<String> = (RATING_MIN..=RATING_MAX).map(|v| v.to_string()).collect();
    let (value, _) = choose_on_scale(
        gateway,
        format!("{}\n\n{question}", prefix.render()),
        TemplateId::RatingQuestion,
        &options,
        (RATING_MIN, RATING_MAX),
    )?;
    let value = value as u8;
    actor.memory.add(
        now,
        MemoryTag::Observation,
        rating_observation(&actor.name, item, value),
    )?;
    Ok(value)
}

/// Option appended to every classification so ambiguous actions are caught.
pub const UNCLEAR_OPTION: &str = "none of these, or unclear";

fn classify(
    gateway: &Gateway,
    agent_name: &str,
    suffix: &str,
    outcome: &str,
    options: &[String],
) -> Result<Option<usize>> {
    let mut all = options.to_vec();
    all.push(UNCLEAR_OPTION.to_string());
    let text = render(
        TemplateId::GmClassify,
        &[
            ("agent_name", agent_name),
            ("suffix", suffix),
            ("outcome", outcome),
        ],
    );
    let prompt = PromptText::from_template(text, TemplateId::GmClassify)?;
    let outcome = gateway.choose_option(&prompt, &all, &SamplingParams::choice())?;
    Ok((outcome.index < options.len()).then_some(outcome.index))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FinalChoice {
    pub index: usize,
    pub label: String,
    /// The suffix that was classified (the restatement if one was needed).
    pub suffix: String,
    pub restated: bool,
}

/// Classifies the decision suffix into one of `options`. An unclear action
/// gets one explicit restatement from the actor before failing.
pub fn capture_final_choice(
    actor: &Actor,
    gateway: &Gateway,
    prefix: &Prefix,
    suffix: &str,
    outcome: &str,
    options: &[String],
) -> Result<FinalChoice> {
    if let Some(index) = classify(gateway, &actor.name, suffix, outcome, options)? {
        return Ok(FinalChoice {
            index,
            label: options[index].clone(),
            suffix: suffix.to_string(),
            restated: false,
        });
    }
    let listed = options.join(" or ");
    let restate = render(
        TemplateId::GmRestate,
        &[("agent_name", &actor.name), ("options", &listed)],
    );
    let restated = actor.act(gateway, prefix, &restate)?.trimmed().to_string();
    match classify(gateway, &actor.name, &restated, &restated, options)? {
        Some(index) => Ok(FinalChoice {
            index,
            label: options[index].clone(),
            suffix: restated,
            restated: true,
        }),
        None => Err(ProbeError::UnclassifiableAction {
            suffix: restated,
            options: options.to_vec(),
        }),
    }
}
