//! Cognitive dissonance (Festinger) and self-consistency (Aronson) components.

use serde::{Deserialize, Serialize};

use crate::memory::{render_entries, MemoryQuery, MemoryTag};
use crate::templates::TemplateId;

use super::{
    parse_list, ComponentContext, LogicError, PrefixSection, Result, SectionKind, NOTHING_NOTABLE,
};

pub const CONFLICT_WINDOW_MINUTES: u32 = 15;
pub const AFFIRMATION_WINDOW_MINUTES: u32 = 60;
pub const RECENT_THOUGHTS_HEADER: &str = "Recent thoughts:";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ConflictStatus {
    None,
    Resolved,
    Buffered,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConflictOutcome {
    pub status: ConflictStatus,
    pub conflict_text: Option<String>,
    pub self_standards: Option<String>,
    pub affirmation: Option<String>,
    pub resolutions: Option<Vec<String>>,
    pub chosen_resolution: Option<String>,
    /// The `[thought]` committed this timestep, if any.
    pub thought: Option<String>,
    pub prefix_fragment: String,
}

impl ConflictOutcome {
    fn none(conflict_text: Option<String>, self_standards: Option<String>) -> Self {
        Self {
            status: ConflictStatus::None,
            conflict_text,
            self_standards,
            affirmation: None,
            resolutions: None,
            chosen_resolution: None,
            thought: None,
            prefix_fragment: NOTHING_NOTABLE.to_string(),
        }
    }

    pub fn section(&self) -> PrefixSection {
        PrefixSection {
            kind: SectionKind::RecentThoughts,
            header: RECENT_THOUGHTS_HEADER.to_string(),
            body: self.prefix_fragment.clone(),
        }
    }
}

/// Free-text detector answers count as "no conflict" when they contain the
/// phrase, ignoring case.
pub fn is_no_conflict(text: &str) -> bool {
    text.to_lowercase().contains("no conflict")
}

pub fn is_no_affirmation(text: &str) -> bool {
    text.to_lowercase().contains("no affirmation")
}

fn recent_block(ctx: &ComponentContext, minutes: u32) -> String {
    let recent = ctx.memory.retrieve(&MemoryQuery::RecentWindow {
        minutes,
        now: ctx.now,
    });
    format!("Recent memories:\n\n{}", render_entries(&recent))
}

fn rendered(ctx: &ComponentContext, kind: SectionKind) -> Option<String> {
    ctx.section(kind).map(PrefixSection::render)
}

/// Picks one of the resolutions from the selector's free-text answer:
/// the option it restates, or the option number it leads with.
pub fn match_resolution(answer: &str, options: &[String]) -> Option<usize> {
    let norm = |s: &str| {
        s.to_lowercase()
            .chars()
            .filter(|c| c.is_alphanumeric() || c.is_whitespace())
            .collect::<String>()
            .split_whitespace()
            .collect::<Vec<_>>()
            .join(" ")
    };
    let a = norm(answer);
    if a.is_empty() {
        return None;
    }
    let hits: Vec<usize> = options
        .iter()
        .enumerate()
        .filter(|(_, o)| {
            let o = norm(o);
            !o.is_empty() && (a.contains(&o) || o.contains(&a))
        })
        .map(|(i, _)| i)
        .collect();
    if hits.len() == 1 {
        return Some(hits[0]);
    }
    let lead: String = answer
        .trim()
        .trim_start_matches(['(', '#'])
        .chars()
        .take_while(|c| c.is_ascii_digit())
        .collect();
    match lead.parse::<usize>() {
        Ok(n) if (1..=options.len()).contains(&n) => Some(n - 1),
        _ => None,
    }
}

fn parse_resolutions(text: &str) -> Option<Vec<String>> {
    let items = parse_list(text);
    (items.len() == 3).then_some(items)
}

/// Discomfort, three resolutions, rationalisation-biased selection, and the
/// subconscious-belief restatement committed as a `[thought]`.
fn resolve(
    ctx: &mut ComponentContext,
    context: &str,
    conflict: &str,
) -> Result<(Vec<String>, String, String)> {
    let base = format!(
        "{context}\n\nIdentified conflict:\n{conflict}\n\n{}",
        ctx.named(TemplateId::DissonanceDiscomfort)
    );

    let ask = format!("{base}\n\n{}", ctx.named(TemplateId::DissonanceResolutions));
    let first = ctx.complete(ask.clone(), TemplateId::DissonanceResolutions)?;
    let resolutions = match parse_resolutions(&first) {
        Some(r) => r,
        None => {
            let retry = format!("{ask}\n\n{}", TemplateId::ResolutionReminder.text());
            let second = ctx.complete(retry, TemplateId::DissonanceResolutions)?;
            parse_resolutions(&second).ok_or(LogicError::ResolutionParse(second))?
        }
    };

    let numbered: Vec<String> = resolutions
        .iter()
        .enumerate()
        .map(|(i, r)| format!("{}. {r}", i + 1))
        .collect();
    let select = format!(
        "{base}\n\nResolution options:\n{}\n\n{}",
        numbered.join("\n"),
        ctx.named(TemplateId::DissonanceSelect)
    );
    let answer = ctx.complete(select.clone(), TemplateId::DissonanceSelect)?;
    let index = match match_resolution(&answer, &resolutions) {
        Some(i) => i,
        None => {
            let retry = format!("{select}\n\n{}", TemplateId::SelectReminder.text());
            let again = ctx.complete(retry, TemplateId::DissonanceSelect)?;
            match_resolution(&again, &resolutions).unwrap_or(0)
        }
    };
    let chosen = resolutions[index].clone();

    let express = format!(
        "{base}\n\nChosen resolution:\n{chosen}\n\n{}",
        ctx.named(TemplateId::DissonanceExpress)
    );
    let thought = ctx.complete(express, TemplateId::DissonanceExpress)?;
    ctx.memory
        .add(ctx.now, MemoryTag::Thought, thought.clone())?;
    Ok((resolutions, chosen, thought))
}

pub fn run_cognitive_dissonance(ctx: &mut ComponentContext) -> Result<ConflictOutcome> {
    let mut context = format!(
        "{}\n\nThe current time is {}",
        recent_block(ctx, CONFLICT_WINDOW_MINUTES),
        ctx.now_text()
    );
    for kind in [
        SectionKind::Summary,
        SectionKind::Attitudes,
        SectionKind::Beliefs,
    ] {
        if let Some(text) = rendered(ctx, kind) {
            context.push_str("\n\n");
            context.push_str(&text);
        }
    }
    let detect = format!("{context}\n\n{}", ctx.named(TemplateId::DissonanceDetect));
    let conflict = ctx.complete(detect, TemplateId::DissonanceDetect)?;
    if is_no_conflict(&conflict) {
        return Ok(ConflictOutcome::none(None, None));
    }

    let confirm = format!(
        "{context}\n\nIdentified conflict:\n{conflict}\n\n{}",
        ctx.named(TemplateId::DissonanceConfirm)
    );
    let options = ["Yes".to_string(), "No".to_string()];
    if ctx.choose(confirm, TemplateId::DissonanceConfirm, &options)? != 0 {
        return Ok(ConflictOutcome::none(Some(conflict), None));
    }

    let (resolutions, chosen, thought) = resolve(ctx, &context, &conflict)?;
    Ok(ConflictOutcome {
        status: ConflictStatus::Resolved,
        conflict_text: Some(conflict),
        self_standards: None,
        affirmation: None,
        resolutions: Some(resolutions),
        chosen_resolution: Some(chosen),
        prefix_fragment: thought.clone(),
        thought: Some(thought),
    })
}

pub fn run_self_consistency(ctx: &mut ComponentContext) -> Result<ConflictOutcome> {
    let name = ctx.agent_name;
    let standards_prompt = format!(
        "{name}'s memories:\n\n{}\n\n{}",
        render_entries(ctx.memory.entries()),
        ctx.named(TemplateId::ConsistencyStandards)
    );
    let standards = ctx.complete(standards_prompt, TemplateId::ConsistencyStandards)?;
    let self_concept = format!("{standards} {}", ctx.named(TemplateId::ConsistencyClause));

    let mut context = format!(
        "{}\n\nThe current time is {}",
        recent_block(ctx, CONFLICT_WINDOW_MINUTES),
        ctx.now_text()
    );
    for kind in [SectionKind::Attitudes, SectionKind::Beliefs] {
        if let Some(text) = rendered(ctx, kind) {
            context.push_str("\n\n");
            context.push_str(&text);
        }
    }
    context.push_str(&format!("\n\n{name}'s self-concepts:\n{self_concept}"));
    if let Some(text) = rendered(ctx, SectionKind::Summary) {
        context.push_str("\n\n");
        context.push_str(&text);
    }

    let detect = format!("{context}\n\n{}", ctx.named(TemplateId::ConsistencyDetect));
    let conflict = ctx.complete(detect, TemplateId::ConsistencyDetect)?;
    if is_no_conflict(&conflict) {
        return Ok(ConflictOutcome::none(None, Some(self_concept)));
    }

    let affirmation_prompt = format!(
        "{}\n\n{}",
        recent_block(ctx, AFFIRMATION_WINDOW_MINUTES),
        ctx.named(TemplateId::ConsistencyAffirmation)
    );
    let affirmation = ctx.complete(affirmation_prompt, TemplateId::ConsistencyAffirmation)?;
    let affirmation = (!is_no_affirmation(&affirmation)).then_some(affirmation);

    if let Some(affirmed) = &affirmation {
        let buffer = format!(
            "Recent conflict:\n{conflict}\n\n{}",
            ctx.named(TemplateId::ConsistencyBuffer)
        );
        let options = ["Yes".to_string(), "No".to_string()];
        let genuine_threat = ctx.choose(buffer, TemplateId::ConsistencyBuffer, &options)? == 0;
        if !genuine_threat {
            let reaffirm = format!(
                "Recent conflict:\n{conflict}\n\nRecent self-affirmation:\n{affirmed}\n\n{}",
                ctx.named(TemplateId::ConsistencyReaffirm)
            );
            let thought = ctx.complete(reaffirm, TemplateId::ConsistencyReaffirm)?;
            ctx.memory
                .add(ctx.now, MemoryTag::Thought, thought.clone())?;
            return Ok(ConflictOutcome {
                status: ConflictStatus::Buffered,
                conflict_text: Some(conflict),
                self_standards: Some(self_concept),
                affirmation,
                resolutions: None,
                chosen_resolution: None,
                prefix_fragment: thought.clone(),
                thought: Some(thought),
            });
        }
    }

    let (resolutions, chosen, thought) = resolve(ctx, &context, &conflict)?;
    Ok(ConflictOutcome {
        status: ConflictStatus::Resolved,
        conflict_text: Some(conflict),
        self_standards: Some(self_concept),
        affirmation,
        resolutions: Some(resolutions),
        chosen_resolution: Some(chosen),
        prefix_fragment: thought.clone(),
        thought: Some(thought),
    })
}
