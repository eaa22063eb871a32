//! Instructions, Behaviors, Attitudes and Beliefs components.

use crate::memory::{render_entries, MemoryEntry, MemoryQuery};
use crate::templates::{render, render_named, TemplateId};

use super::{parse_list, ComponentContext, LogicError, PrefixSection, Result, SectionKind};

pub const BELIEF_WINDOW_MINUTES: u32 = 10;
pub const RELEVANT_MEMORIES: usize = 3;

pub fn render_instructions(agent_name: &str) -> PrefixSection {
    PrefixSection {
        kind: SectionKind::Instructions,
        header: "Role-playing instructions:".to_string(),
        body: render_named(TemplateId::Instructions, agent_name),
    }
}

pub fn summary_header(agent_name: &str) -> String {
    format!("{agent_name}'s summary of recent observations:")
}

pub fn attitudes_header(agent_name: &str) -> String {
    format!("{agent_name}'s relevant attitudes:")
}

pub fn beliefs_header(agent_name: &str) -> String {
    format!("{agent_name}'s beliefs about the current situation:")
}

fn memories_block(label: &str, entries: &[MemoryEntry]) -> String {
    format!("{label}\n\n{}", render_entries(entries))
}

/// Parses exactly three distinct items from a list completion.
fn three_items(text: &str) -> Option<Vec<String>> {
    let mut items: Vec<String> = Vec::new();
    for item in parse_list(text) {
        let item = item.trim_end_matches('.').trim().to_string();
        if !item.is_empty() && !items.iter().any(|i| i.eq_ignore_ascii_case(&item)) {
            items.push(item);
        }
    }
    (items.len() >= 3).then(|| items.into_iter().take(3).collect())
}

/// Asks for a three-item list, retrying once with a stricter reminder.
/// The inner error carries the last unparseable completion.
fn ask_three(
    ctx: &ComponentContext,
    prompt: String,
    question: TemplateId,
) -> Result<std::result::Result<Vec<String>, String>> {
    let first = ctx.complete(prompt.clone(), question)?;
    if let Some(items) = three_items(&first) {
        return Ok(Ok(items));
    }
    let retry = format!("{prompt}\n\n{}", TemplateId::ListReminder.text());
    let second = ctx.complete(retry, question)?;
    Ok(three_items(&second).ok_or(second))
}

pub fn run_behaviors(ctx: &ComponentContext) -> Result<PrefixSection> {
    if ctx.memory.is_empty() {
        return Err(LogicError::EmptyMemory);
    }
    let name = ctx.agent_name;
    let prompt = format!(
        "{}\n\nCurrent time: {}.\n\n{}",
        memories_block(&format!("{name}'s memories:"), ctx.memory.entries()),
        ctx.now_text(),
        ctx.named(TemplateId::BehaviorsSummary)
    );
    let summary = ctx.complete(prompt, TemplateId::BehaviorsSummary)?;
    Ok(PrefixSection {
        kind: SectionKind::Summary,
        header: summary_header(name),
        body: summary,
    })
}

/// Resolves a domain to its ledger topic: exact match first, then the
/// multiple-choice equivalence query. Returns `None` for a new topic.
fn match_topic(ctx: &ComponentContext, domain: &str) -> Result<Option<String>> {
    if let Some(topic) = ctx.ledger.find_exact(domain) {
        return Ok(Some(topic));
    }
    let topics = ctx.ledger.topics();
    if topics.is_empty() {
        return Ok(None);
    }
    let mut options = topics.clone();
    options.push("None of these topics".to_string());
    let question = render(TemplateId::AttitudesTopicMatch, &[("domain", domain)]);
    let index = ctx.choose(question, TemplateId::AttitudesTopicMatch, &options)?;
    Ok(topics.get(index).cloned())
}

pub fn run_attitudes(ctx: &mut ComponentContext) -> Result<PrefixSection> {
    let name = ctx.agent_name;
    let summary = ctx.summary_section("attitudes")?.render();
    let identify = format!(
        "{}\n\nThe current time is {}.\n\n{}\n\n{}",
        memories_block(&format!("{name}'s memories:"), ctx.memory.entries()),
        ctx.now_text(),
        summary,
        ctx.named(TemplateId::AttitudesIdentify)
    );
    let domains = match ask_three(ctx, identify, TemplateId::AttitudesIdentify)? {
        Ok(d) => d,
        Err(raw) => return Err(LogicError::DomainParse(raw)),
    };

    let mut stances = Vec::with_capacity(domains.len());
    for domain in &domains {
        let topic = match_topic(ctx, domain)?;
        let memories = ctx.memory.retrieve_with(
            &MemoryQuery::TopKRelevant {
                k: RELEVANT_MEMORIES,
                query_text: domain.clone(),
            },
            ctx.scorer,
        );
        let mut prompt = format!(
            "Domain/topic: {domain}\nCurrent time: {}\n\n{}\n\n",
            ctx.now_text(),
            memories_block("Relevant memories:", &memories)
        );
        if let Some(stance) = topic.as_deref().and_then(|t| ctx.ledger.get(t)) {
            prompt.push_str(&render(
                TemplateId::AttitudesExisting,
                &[
                    ("agent_name", name),
                    ("domain", domain),
                    ("prev_attitude", &stance.stance),
                ],
            ));
            prompt.push_str("\n\n");
        }
        prompt.push_str(&render(
            TemplateId::AttitudesSynthesize,
            &[("agent_name", name), ("domain", domain)],
        ));
        let stance = ctx.complete(prompt, TemplateId::AttitudesSynthesize)?;
        let key = topic.unwrap_or_else(|| domain.clone());
        ctx.ledger.upsert(&key, &stance, ctx.now);
        stances.push(stance);
    }

    let convert = format!(
        "Identified attitudes:\n{}\n\n{}",
        stances.join("\n"),
        ctx.named(TemplateId::AttitudesConvert)
    );
    let statements = ctx.complete(convert, TemplateId::AttitudesConvert)?;
    let lines = parse_list(&statements);
    let body = if lines.is_empty() {
        statements
    } else {
        lines.join("\n")
    };
    Ok(PrefixSection {
        kind: SectionKind::Attitudes,
        header: attitudes_header(name),
        body,
    })
}

pub fn run_beliefs(ctx: &ComponentContext) -> Result<PrefixSection> {
    let name = ctx.agent_name;
    let summary = ctx.summary_section("beliefs")?.render();
    let recent = ctx.memory.retrieve(&MemoryQuery::RecentWindow {
        minutes: BELIEF_WINDOW_MINUTES,
        now: ctx.now,
    });
    let identify = format!(
        "{}\n\nCurrent time: {}\n\n{}\n\n{}",
        memories_block(&format!("{name}'s recent memories:"), &recent),
        ctx.now_text(),
        summary,
        ctx.named(TemplateId::BeliefsIdentify)
    );
    let entities = match ask_three(ctx, identify, TemplateId::BeliefsIdentify)? {
        Ok(e) => e,
        Err(raw) => return Err(LogicError::EntityParse(raw)),
    };

    let mut beliefs = Vec::with_capacity(entities.len());
    for entity in &entities {
        let query = render(
            TemplateId::BeliefsQuery,
            &[("agent_name", name), ("entity", entity)],
        );
        let memories = ctx.memory.retrieve_with(
            &MemoryQuery::TopKRelevant {
                k: RELEVANT_MEMORIES,
                query_text: query,
            },
            ctx.scorer,
        );
        let prompt = format!(
            "Current focal entity: {entity}\n\n{}\n\n{}",
            memories_block("Relevant past memories:", &memories),
            render(
                TemplateId::BeliefsKnowledge,
                &[("agent_name", name), ("entity", entity)]
            )
        );
        let belief = ctx.complete(prompt, TemplateId::BeliefsKnowledge)?;
        beliefs.push(
            belief
                .lines()
                .map(str::trim)
                .filter(|l| !l.is_empty())
                .collect::<Vec<_>>()
                .join(" "),
        );
    }
    Ok(PrefixSection {
        kind: SectionKind::Beliefs,
        header: beliefs_header(name),
        body: beliefs.join("\n"),
    })
}
