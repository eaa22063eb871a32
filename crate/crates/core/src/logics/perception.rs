//! Self-perception (Bem) component: person, situation and action questions.

use crate::memory::{render_entries, MemoryTag};
use crate::templates::TemplateId;

use super::{ComponentContext, PrefixSection, Result, SectionKind};

fn qa(question: &str, answer: &str) -> String {
    format!("Question: {question}\nAnswer: {answer}")
}

/// Makes the action answer read "{name} would ...".
pub fn force_would(agent_name: &str, completion: &str) -> String {
    let lead = format!("{agent_name} would");
    let text = completion.trim();
    if text.starts_with(&lead) {
        text.to_string()
    } else {
        format!("{lead} {text}")
    }
}

pub fn run_self_perception(ctx: &mut ComponentContext) -> Result<PrefixSection> {
    let name = ctx.agent_name;
    let summary = ctx.summary_section("self-perception")?.render();
    let context = format!(
        "{name}'s memories:\n\n{}\n\n{summary}",
        render_entries(ctx.memory.entries())
    );

    let person_q = ctx.named(TemplateId::PerceptionPerson);
    let person = ctx.complete(
        format!("{context}\n\nQuestion: {person_q}\nAnswer:"),
        TemplateId::PerceptionPerson,
    )?;

    let situation_q = ctx.named(TemplateId::PerceptionSituation);
    let situation = ctx.complete(
        format!("{context}\n\nQuestion: {situation_q}\nAnswer:"),
        TemplateId::PerceptionSituation,
    )?;

    let action_q = ctx.named(TemplateId::PerceptionAction);
    let prompt = format!(
        "{context}\n\n{}\n\n{}\n\nQuestion: {action_q}\nAnswer: {name} would",
        qa(&person_q, &person),
        qa(&situation_q, &situation)
    );
    let action = force_would(name, &ctx.complete(prompt, TemplateId::PerceptionAction)?);
    ctx.memory
        .add(ctx.now, MemoryTag::IntentReflection, action.clone())?;

    let body = [
        qa(&person_q, &person),
        qa(&situation_q, &situation),
        qa(&action_q, &action),
    ]
    .join("\n\n");
    Ok(PrefixSection {
        kind: SectionKind::SelfPerception,
        header: String::new(),
        body,
    })
}
