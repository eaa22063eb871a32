//! Prompt templates, embedded as versioned text assets.
//!
//! Every template is addressed by a [`TemplateId`]; its key (`name@version`)
//! is what the gateway records in the run trace next to each exchange.

use std::sync::OnceLock;

use regex::Regex;

macro_rules! templates {
    ($( $variant:ident => ($file:literal, $version:literal) ),+ $(,)?) => {
        #[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
        pub enum TemplateId {
            $( $variant ),+
        }

        impl TemplateId {
            pub const ALL: &'static [TemplateId] = &[$( TemplateId::$variant ),+];

            /// Raw template text with `{placeholder}` markers.
            pub fn text(self) -> &'static str {
                match self {
                    $( TemplateId::$variant => include_str!(concat!("../assets/templates/", $file, ".txt")) ),+
                }
            }

            /// Stable key recorded in traces, e.g. `behaviors_summary@1`.
            pub fn key(self) -> &'static str {
                match self {
                    $( TemplateId::$variant => concat!($file, "@", $version) ),+
                }
            }
        }
    };
}

templates! {
    Instructions => ("instructions", "1"),
    BehaviorsSummary => ("behaviors_summary", "1"),
    AttitudesIdentify => ("attitudes_identify", "1"),
    AttitudesTopicMatch => ("attitudes_topic_match", "1"),
    AttitudesExisting => ("attitudes_existing", "1"),
    AttitudesSynthesize => ("attitudes_synthesize", "1"),
    AttitudesConvert => ("attitudes_convert", "1"),
    BeliefsIdentify => ("beliefs_identify", "1"),
    BeliefsQuery => ("beliefs_query", "1"),
    BeliefsKnowledge => ("beliefs_knowledge", "1"),
    DissonanceDetect => ("dissonance_detect", "1"),
    DissonanceConfirm => ("dissonance_confirm", "1"),
    DissonanceDiscomfort => ("dissonance_discomfort", "1"),
    DissonanceResolutions => ("dissonance_resolutions", "1"),
    DissonanceSelect => ("dissonance_select", "1"),
    DissonanceExpress => ("dissonance_express", "1"),
    ConsistencyStandards => ("consistency_standards", "1"),
    ConsistencyClause => ("consistency_clause", "1"),
    ConsistencyDetect => ("consistency_detect", "1"),
    ConsistencyAffirmation => ("consistency_affirmation", "1"),
    ConsistencyBuffer => ("consistency_buffer", "1"),
    ConsistencyReaffirm => ("consistency_reaffirm", "1"),
    PerceptionPerson => ("perception_person", "1"),
    PerceptionSituation => ("perception_situation", "1"),
    PerceptionAction => ("perception_action", "1"),
    ActionDefault => ("action_default", "1"),
    ActionObjectClause => ("action_object_clause", "1"),
    GmAdjudicate => ("gm_adjudicate", "1"),
    GmNpc => ("gm_npc", "1"),
    GmClassify => ("gm_classify", "1"),
    GmRestate => ("gm_restate", "1"),
    ProbeScale => ("probe_scale", "1"),
    RatingQuestion => ("rating_question", "1"),
    ChoiceReminder => ("choice_reminder", "1"),
    ListReminder => ("list_reminder", "1"),
    ResolutionReminder => ("resolution_reminder", "1"),
    SelectReminder => ("select_reminder", "1"),
    PersonaFormative => ("persona_formative", "1"),
    PersonaSignup => ("persona_signup", "1"),
    PersonaPrelab => ("persona_prelab", "1"),
}

fn placeholder_re() -> &'static Regex {
    static RE: OnceLock<Regex> = OnceLock::new();
    RE.get_or_init(|| Regex::new(r"\{[a-z][a-z0-9_]*(?:\[\d+\])?\}").expect("valid regex"))
}

/// Substitutes `{key}` markers. Unknown keys are left in place.
pub fn substitute(text: &str, vars: &[(&str, &str)]) -> String {
    let mut out = text.to_string();
    for (key, value) in vars {
        out = out.replace(&format!("{{{key}}}"), value);
    }
    out
}

/// Returns the first unresolved `{placeholder}` in `text`, if any.
pub fn unresolved_placeholder(text: &str) -> Option<&str> {
    placeholder_re().find(text).map(|m| m.as_str())
}

pub fn render(id: TemplateId, vars: &[(&str, &str)]) -> String {
    substitute(id.text(), vars)
}

/// Renders a template that only needs the actor's name.
pub fn render_named(id: TemplateId, agent_name: &str) -> String {
    render(id, &[("agent_name", agent_name)])
}
