//! One check per acceptance criterion. Each returns a description of the
//! first mismatch it finds.

use std::collections::BTreeMap;
use std::sync::Arc;
use std::time::{Duration, Instant};

use chrono::NaiveDateTime;
use proptest::prelude::*;
use proptest::test_runner::{Config, TestCaseError, TestRunner};

use attitude_core::gateway::scripted::{ScriptedBackend, ScriptedExchange};
use attitude_core::gateway::Gateway;
use attitude_core::gm::{EventKind, GmEvent};
use attitude_core::logics::{components, conflict, Actor, ConflictStatus, Logic, SectionKind};
use attitude_core::logics::{AttitudeLedger, NOTHING_NOTABLE};
use attitude_core::memory::{MemoryStore, MemoryTag};
use attitude_core::paradigms::{
    qualifying_pairs, select_choice_pair, Condition, Experiment, ParadigmError, ScenarioLibrary,
};
use attitude_core::persona::PersonaConfig;
use attitude_core::probes::{administer_probes, rate_with_prefix, ProbeId, RATING_MAX, RATING_MIN};
use attitude_core::runner::{aggregate, simulate, SimulationSpec, OFFLINE_SCRIPT};

use super::{oct1, GoldenCase, Harness};

pub type Check = Result<(), String>;

macro_rules! ensure {
    ($cond:expr, $($msg:tt)+) => {
        if !$cond {
            return Err(format!($($msg)+));
        }
    };
}

fn same(label: &str, got: &str, want: &str) -> Check {
    if got == want {
        return Ok(());
    }
    let at = got
        .chars()
        .zip(want.chars())
        .take_while(|(a, b)| a == b)
        .count();
    let tail = |s: &str| {
        s.chars()
            .skip(at.saturating_sub(20))
            .take(60)
            .collect::<String>()
    };
    Err(format!(
        "{label}: first difference at char {at}: got {:?}, want {:?}",
        tail(got),
        tail(want)
    ))
}

fn thoughts(memory: &MemoryStore) -> Vec<String> {
    memory
        .entries()
        .iter()
        .filter(|e| e.tag == MemoryTag::Thought)
        .map(|e| e.text.clone())
        .collect()
}

// ---- golden traces -------------------------------------------------------

pub fn golden_behaviors() -> Check {
    let (case, gateway) = GoldenCase::load("behaviors");
    let mut h = Harness {
        memory: case.memory(),
        ledger: AttitudeLedger::new(),
    };
    let scorer = case.scorer();
    let ctx = h.context(&case.agent, case.now(), &gateway, &scorer, Vec::new());
    let section = components::run_behaviors(&ctx).map_err(|e| e.to_string())?;
    same("summary", &section.body, case.expected("output"))?;
    same(
        "summary prompt",
        &gateway.trace()[0].prompt,
        case.expected("prompt"),
    )
}

pub fn golden_attitudes() -> Check {
    let (case, gateway) = GoldenCase::load("attitudes");
    let mut h = Harness {
        memory: case.memory(),
        ledger: AttitudeLedger::new(),
    };
    let scorer = case.scorer();
    let mut ctx = h.context(&case.agent, case.now(), &gateway, &scorer, case.sections());
    let section = components::run_attitudes(&mut ctx).map_err(|e| e.to_string())?;
    same("attitudes", &section.body, case.expected("output"))?;
    for (topic, key) in [
        ("Books", "books"),
        ("Tea", "tea"),
        ("Scientific research", "research"),
    ] {
        let stance = h
            .ledger
            .entries()
            .get(topic)
            .ok_or(format!("ledger lacks {topic}"))?;
        same(topic, &stance.stance, case.expected(key))?;
    }
    Ok(())
}

pub fn golden_beliefs() -> Check {
    let (case, gateway) = GoldenCase::load("beliefs");
    let mut h = Harness {
        memory: case.memory(),
        ledger: AttitudeLedger::new(),
    };
    let scorer = case.scorer();
    let ctx = h.context(&case.agent, case.now(), &gateway, &scorer, case.sections());
    let section = components::run_beliefs(&ctx).map_err(|e| e.to_string())?;
    same("beliefs", &section.body, case.expected("output"))?;
    same(
        "beliefs prompt",
        &gateway.trace()[0].prompt,
        case.expected("prompt"),
    )
}

pub fn golden_self_consistency() -> Check {
    let (case, gateway) = GoldenCase::load("self_consistency");
    let mut h = Harness {
        memory: case.memory(),
        ledger: AttitudeLedger::new(),
    };
    let scorer = case.scorer();
    let mut ctx = h.context(&case.agent, case.now(), &gateway, &scorer, case.sections());
    let outcome = conflict::run_self_consistency(&mut ctx).map_err(|e| e.to_string())?;
    ensure!(
        outcome.status == ConflictStatus::Buffered,
        "status {:?}, want buffered",
        outcome.status
    );
    same(
        "thought",
        outcome.thought.as_deref().unwrap_or_default(),
        case.expected("output"),
    )?;
    same("prefix", &outcome.prefix_fragment, case.expected("output"))?;
    same(
        "conflict",
        outcome.conflict_text.as_deref().unwrap_or_default(),
        case.expected("conflict"),
    )?;
    same(
        "affirmation",
        outcome.affirmation.as_deref().unwrap_or_default(),
        case.expected("affirmation"),
    )?;
    same(
        "self-concept",
        outcome.self_standards.as_deref().unwrap_or_default(),
        case.expected("self_concept"),
    )?;
    ensure!(
        thoughts(&h.memory) == [case.expected("output")],
        "expected one [thought] write"
    );
    Ok(())
}

pub fn golden_self_perception() -> Check {
    let (case, gateway) = GoldenCase::load("self_perception");
    let mut actor = Actor::new(case.agent.clone(), Logic::Bem).with_memory(case.memory());
    let prompt = actor.default_action_prompt();
    let turn = actor
        .take_turn(&gateway, case.now(), &prompt)
        .map_err(|e| e.to_string())?;
    same("action", turn.suffix.trimmed(), case.expected("output"))?;
    let body = |kind| {
        turn.prefix
            .section(kind)
            .map(|s| s.body.clone())
            .unwrap_or_default()
    };
    same(
        "instructions",
        &body(SectionKind::Instructions),
        case.expected("instructions"),
    )?;
    same(
        "summary",
        &body(SectionKind::Summary),
        case.expected("summary"),
    )?;
    let perception = body(SectionKind::SelfPerception);
    for key in ["person", "intent"] {
        let line = format!("Answer: {}", case.expected(key));
        ensure!(
            perception.contains(&line),
            "self-perception section lacks {line:?}"
        );
    }
    let intents: Vec<_> = actor
        .memory
        .entries()
        .iter()
        .filter(|e| e.tag == MemoryTag::IntentReflection)
        .map(|e| e.text.as_str())
        .collect();
    ensure!(
        intents == [case.expected("intent")],
        "intent reflections {intents:?}"
    );
    Ok(())
}

pub fn criterion_golden() -> Check {
    let started = Instant::now();
    golden_behaviors().map_err(|e| format!("behaviors: {e}"))?;
    golden_attitudes().map_err(|e| format!("attitudes: {e}"))?;
    golden_beliefs().map_err(|e| format!("beliefs: {e}"))?;
    golden_self_consistency().map_err(|e| format!("self-consistency: {e}"))?;
    golden_self_perception().map_err(|e| format!("self-perception: {e}"))?;
    let elapsed = started.elapsed();
    ensure!(elapsed < Duration::from_secs(5), "took {elapsed:?}");
    Ok(())
}

// ---- scripted branches ----------------------------------------------------

pub const CONFLICT: &str =
    "Choosing one item over an equally rated one conflicts with being a careful judge of value.";
pub const RESOLUTIONS: [&str; 3] = [
    "Decide the chosen item was better made all along.",
    "Focus on how rarely the rejected item would be used.",
    "Plan to give the rejected item less attention.",
];
pub const RESOLVED: &str =
    "The chosen item's craftsmanship makes it clearly more valuable than the other one.";
pub const AFFIRMED: &str =
    "The actor affirmed the value of creativity in a recent writing exercise.";
pub const REAFFIRMED: &str =
    "The chosen item is appealing even though the other one was just as practical.";

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Branch {
    pub conflict: bool,
    pub confirm: bool,
    pub affirmed: bool,
    pub threat: bool,
}

impl Branch {
    pub const QUIET: Branch = Branch {
        conflict: false,
        confirm: true,
        affirmed: false,
        threat: true,
    };
}

fn pat(pattern: &str, response: &str) -> ScriptedExchange {
    ScriptedExchange::pattern(pattern, response, false).expect("valid test pattern")
}

fn once(pattern: &str, response: &str) -> ScriptedExchange {
    ScriptedExchange::pattern(pattern, response, true).expect("valid test pattern")
}

pub const DETECT_DISSONANCE: &str = r#"(?s)If no conflicts have been identified, state "No conflicts"\. Answer in one sentence\.\s*\z"#;
pub const DETECT_CONSISTENCY: &str =
    r"(?s)externally justified\. State the answer in 1-2 sentences\.\s*\z";
pub const CONFIRM: &str = r"(?s)need to resolve it\?\n\n\(a\) Yes\n\(b\) No.*\z";
pub const RESOLUTIONS_Q: &str = r"(?s)based on the above ways in the current situation\.\s*\z";
pub const RESOLUTIONS_RETRY: &str = r"(?s)no preamble and no other text\.\s*\z";
pub const SELECT: &str = r"(?s)maintain cognitive consistency\.\s*\z";
pub const SELECT_RETRY: &str = r"(?s)word for word\.\s*\z";
pub const EXPRESS: &str =
    r"(?s)enough to influence \w+'s actions in \w+'s current situation\.\s*\z";
pub const AFFIRMATION_Q: &str = r"(?s)If no, state 'No affirmation\.'\s*\z";
pub const BUFFER: &str = r"(?s)compared to the recent affirmation\.\n\n\(a\) Yes\n\(b\) No.*\z";
pub const REAFFIRM: &str = r"(?s)frame it as a subconscious affirmation\.\s*\z";

/// Detector and resolution answers for `branch`, ahead of the offline script.
pub fn branch_exchanges(branch: Branch) -> Vec<ScriptedExchange> {
    let detect = if branch.conflict {
        CONFLICT
    } else {
        "No conflicts"
    };
    let listed = RESOLUTIONS
        .iter()
        .enumerate()
        .map(|(i, r)| format!("{}. {r}", i + 1))
        .collect::<Vec<_>>()
        .join("\n");
    vec![
        pat(DETECT_DISSONANCE, detect),
        pat(DETECT_CONSISTENCY, detect),
        pat(CONFIRM, if branch.confirm { "(a) Yes" } else { "(b) No" }),
        pat(RESOLUTIONS_Q, &listed),
        pat(RESOLUTIONS_RETRY, &listed),
        pat(SELECT, RESOLUTIONS[1]),
        pat(SELECT_RETRY, RESOLUTIONS[1]),
        pat(EXPRESS, RESOLVED),
        pat(
            AFFIRMATION_Q,
            if branch.affirmed {
                AFFIRMED
            } else {
                "No affirmation."
            },
        ),
        pat(BUFFER, if branch.threat { "(a) Yes" } else { "(b) No" }),
        pat(REAFFIRM, REAFFIRMED),
    ]
}

pub fn gateway_with(mut overrides: Vec<ScriptedExchange>) -> Gateway {
    overrides.extend(ScriptedBackend::parse_toml(OFFLINE_SCRIPT).expect("offline script parses"));
    Gateway::new(Arc::new(ScriptedBackend::new(overrides)))
}

/// An actor partway through the item-choice scenes.
pub fn study_actor(name: &str, logic: Logic) -> Actor {
    let mut memory = MemoryStore::new();
    let lines = [
        (14, 0, format!("{name} arrives in the reception room of the research facility.")),
        (14, 2, format!("{name} writes about why creativity matters to {name}.")),
        (14, 10, format!("{name} rates the framed art print a 7 - \"very desirable\".")),
        (14, 12, format!("{name} rates the high-performance blender a 7 - \"very desirable\".")),
        (14, 20, format!("{name} chooses to take home the framed art print instead of the high-performance blender.")),
    ];
    for (h, m, text) in lines {
        memory
            .add(oct1(h, m), MemoryTag::Observation, text)
            .unwrap();
    }
    Actor::new(name, logic).with_memory(memory)
}

fn expected_kinds(logic: Logic) -> Vec<SectionKind> {
    Actor::new("x", logic)
        .pipeline()
        .components
        .into_iter()
        .map(SectionKind::for_component)
        .collect()
}

// ---- criterion 2 ----------------------------------------------------------

fn shape_case(logic: Logic, branch: Branch, minute: u32) -> Result<(), TestCaseError> {
    let gateway = gateway_with(branch_exchanges(branch));
    let mut actor = study_actor("Mara", logic);
    let now = oct1(14, 22) + chrono::Duration::minutes(i64::from(minute));
    let prompt = actor.default_action_prompt();
    let turn = actor
        .take_turn(&gateway, now, &prompt)
        .map_err(|e| TestCaseError::fail(e.to_string()))?;
    let kinds = turn.prefix.kinds();
    prop_assert_eq!(
        &kinds,
        &expected_kinds(logic),
        "section order for {}",
        logic
    );
    let rendered = turn.prefix.render();
    let mut cursor = 0;
    for section in &turn.prefix.sections {
        let text = section.render();
        let found = rendered[cursor..].find(&text);
        prop_assert!(found.is_some(), "{:?} section not in place", section.kind);
        cursor += found.unwrap() + text.len();
    }
    match logic {
        Logic::Bem => {
            prop_assert_eq!(actor.ledger.access_count(), 0);
            prop_assert!(turn.conflict.is_none());
        }
        Logic::Minimal => {
            for kind in [
                SectionKind::Attitudes,
                SectionKind::Beliefs,
                SectionKind::RecentThoughts,
            ] {
                prop_assert!(!kinds.contains(&kind));
            }
            prop_assert_eq!(actor.ledger.access_count(), 0);
            prop_assert!(turn.conflict.is_none());
        }
        Logic::Festinger | Logic::Aronson => {
            prop_assert!(!actor.ledger.is_empty());
            prop_assert!(turn.conflict.is_some());
        }
    }
    Ok(())
}

pub fn criterion_pipeline_shape() -> Check {
    let mut runner = TestRunner::new(Config {
        cases: 100,
        failure_persistence: None,
        ..Config::default()
    });
    let strategy = (
        prop::sample::select(Logic::ALL.to_vec()),
        any::<[bool; 4]>(),
        0u32..30,
    );
    runner
        .run(&strategy, |(logic, flags, minute)| {
            let branch = Branch {
                conflict: flags[0],
                confirm: flags[1],
                affirmed: flags[2],
                threat: flags[3],
            };
            shape_case(logic, branch, minute)
        })
        .map_err(|e| e.to_string())
}

// ---- criterion 3 ----------------------------------------------------------

pub struct BranchRun {
    pub outcome: attitude_core::logics::ConflictOutcome,
    pub new_thoughts: Vec<String>,
    pub calls: usize,
}

pub fn run_branch(logic: Logic, overrides: Vec<ScriptedExchange>) -> Result<BranchRun, String> {
    let gateway = gateway_with(overrides);
    let mut actor = study_actor("Mara", logic);
    let before = thoughts(&actor.memory).len();
    let built = actor
        .build_prefix(&gateway, oct1(14, 22))
        .map_err(|e| e.to_string())?;
    let outcome = built.conflict.ok_or("no conflict outcome")?;
    let recent = built
        .prefix
        .section(SectionKind::RecentThoughts)
        .ok_or("no recent-thoughts section")?;
    ensure!(
        recent.body == outcome.prefix_fragment,
        "section body differs from the outcome fragment"
    );
    Ok(BranchRun {
        outcome,
        new_thoughts: thoughts(&actor.memory)[before..].to_vec(),
        calls: gateway.call_count(),
    })
}

fn expect_quiet(run: &BranchRun) -> Check {
    ensure!(
        run.outcome.status == ConflictStatus::None,
        "status {:?}",
        run.outcome.status
    );
    ensure!(
        run.outcome.prefix_fragment == NOTHING_NOTABLE,
        "fragment {:?}",
        run.outcome.prefix_fragment
    );
    ensure!(
        run.new_thoughts.is_empty(),
        "unexpected thoughts {:?}",
        run.new_thoughts
    );
    Ok(())
}

fn expect_resolved(run: &BranchRun) -> Check {
    ensure!(
        run.outcome.status == ConflictStatus::Resolved,
        "status {:?}",
        run.outcome.status
    );
    let resolutions = run.outcome.resolutions.clone().unwrap_or_default();
    ensure!(resolutions == RESOLUTIONS, "resolutions {resolutions:?}");
    ensure!(
        run.new_thoughts == [RESOLVED],
        "thoughts {:?}",
        run.new_thoughts
    );
    ensure!(
        run.outcome.prefix_fragment == RESOLVED,
        "fragment {:?}",
        run.outcome.prefix_fragment
    );
    Ok(())
}

pub fn conflict_branches() -> Vec<(&'static str, Check)> {
    let b = |conflict, confirm, affirmed, threat| Branch {
        conflict,
        confirm,
        affirmed,
        threat,
    };
    let mut out: Vec<(&'static str, Check)> = Vec::new();

    for logic in [Logic::Festinger, Logic::Aronson] {
        let name = if logic == Logic::Festinger {
            "festinger: no conflicts"
        } else {
            "aronson: no conflicts"
        };
        out.push((
            name,
            run_branch(logic, branch_exchanges(Branch::QUIET)).and_then(|r| expect_quiet(&r)),
        ));
    }
    out.push((
        "festinger: conflict not confirmed",
        run_branch(
            Logic::Festinger,
            branch_exchanges(b(true, false, false, true)),
        )
        .and_then(|r| {
            expect_quiet(&r)?;
            ensure!(
                r.outcome.conflict_text.as_deref() == Some(CONFLICT),
                "conflict text lost"
            );
            Ok(())
        }),
    ));
    out.push((
        "festinger: confirmed conflict resolved",
        run_branch(
            Logic::Festinger,
            branch_exchanges(b(true, true, false, true)),
        )
        .and_then(|r| expect_resolved(&r)),
    ));
    out.push((
        "aronson: no affirmation, resolved",
        run_branch(Logic::Aronson, branch_exchanges(b(true, true, false, true))).and_then(|r| {
            expect_resolved(&r)?;
            ensure!(
                r.outcome.affirmation.is_none(),
                "affirmation {:?}",
                r.outcome.affirmation
            );
            Ok(())
        }),
    ));
    out.push((
        "aronson: affirmed but threatened, resolved",
        run_branch(Logic::Aronson, branch_exchanges(b(true, true, true, true))).and_then(|r| {
            expect_resolved(&r)?;
            ensure!(
                r.outcome.affirmation.as_deref() == Some(AFFIRMED),
                "affirmation {:?}",
                r.outcome.affirmation
            );
            Ok(())
        }),
    ));
    out.push((
        "aronson: affirmed and buffered",
        run_branch(Logic::Aronson, branch_exchanges(b(true, true, true, false))).and_then(|r| {
            ensure!(
                r.outcome.status == ConflictStatus::Buffered,
                "status {:?}",
                r.outcome.status
            );
            ensure!(
                r.outcome.resolutions.is_none(),
                "buffered path generated resolutions"
            );
            ensure!(
                r.new_thoughts == [REAFFIRMED],
                "thoughts {:?}",
                r.new_thoughts
            );
            ensure!(
                r.outcome.prefix_fragment == REAFFIRMED,
                "fragment {:?}",
                r.outcome.prefix_fragment
            );
            Ok(())
        }),
    ));

    let resolving = branch_exchanges(b(true, true, false, true));
    let with_first = |first: Vec<ScriptedExchange>| {
        let mut v = first;
        v.extend(resolving.iter().cloned());
        v
    };
    out.push((
        "resolutions unparseable once, then parsed",
        run_branch(
            Logic::Festinger,
            with_first(vec![once(RESOLUTIONS_Q, "I am not sure.")]),
        )
        .and_then(|r| expect_resolved(&r)),
    ));
    out.push((
        "resolutions unparseable twice",
        match run_branch(
            Logic::Festinger,
            with_first(vec![
                once(RESOLUTIONS_Q, "Just one idea."),
                once(RESOLUTIONS_RETRY, "Still one idea."),
            ]),
        ) {
            Err(e) if e.contains("three resolutions") => Ok(()),
            Err(e) => Err(format!("unexpected error {e}")),
            Ok(_) => Err("resolution parse failure was accepted".into()),
        },
    ));
    out.push((
        "selection unmatched once, then matched",
        run_branch(
            Logic::Festinger,
            with_first(vec![
                once(SELECT, "Something else entirely."),
                once(SELECT_RETRY, RESOLUTIONS[1]),
            ]),
        )
        .and_then(|r| {
            ensure!(
                r.outcome.chosen_resolution.as_deref() == Some(RESOLUTIONS[1]),
                "chose {:?}",
                r.outcome.chosen_resolution
            );
            expect_resolved(&r)
        }),
    ));
    out.push((
        "selection unmatched twice falls back to the first option",
        run_branch(
            Logic::Festinger,
            with_first(vec![
                once(SELECT, "Something else entirely."),
                once(SELECT_RETRY, "Nothing fits."),
            ]),
        )
        .and_then(|r| {
            ensure!(
                r.outcome.chosen_resolution.as_deref() == Some(RESOLUTIONS[0]),
                "chose {:?}",
                r.outcome.chosen_resolution
            );
            expect_resolved(&r)
        }),
    ));
    out
}

pub fn criterion_conflict_branches() -> Check {
    let failures: Vec<String> = conflict_branches()
        .into_iter()
        .filter_map(|(name, r)| r.err().map(|e| format!("{name}: {e}")))
        .collect();
    if failures.is_empty() {
        Ok(())
    } else {
        Err(failures.join("; "))
    }
}

// ---- criterion 4 ----------------------------------------------------------

fn probe_answer(id: ProbeId) -> &'static str {
    match id {
        ProbeId::Q1 => "Was the experiment task interesting",
        ProbeId::Q2 => "Did the experiment give you an opportunity",
        ProbeId::Q3 => "From what you know about the experiment",
        ProbeId::Q4 => "Would you have any desire to participate",
    }
}

fn probe_case(
    logic: Logic,
    picks: Vec<(ProbeId, usize, bool)>,
    rating: usize,
    minute: u32,
) -> Result<(), TestCaseError> {
    let mut overrides = Vec::new();
    for (id, index, as_letter) in &picks {
        let q = id.question();
        let options = q.scale_options();
        let i = index % options.len();
        let answer = if *as_letter {
            format!("({})", attitude_core::gateway::choice::option_letter(i))
        } else {
            options[i].clone()
        };
        overrides.push(pat(
            &format!(
                r"(?s){}.*How would \w+ answer this question on the rating scale\?\n\n\(a\).*\z",
                regex_escape(probe_answer(*id))
            ),
            &answer,
        ));
    }
    overrides.push(pat(
        r"(?s)rate the desirability of the [^\n]*\?\n\n\(a\).*\z",
        &(RATING_MIN as usize + rating % 8).to_string(),
    ));
    overrides.extend(branch_exchanges(Branch::QUIET));
    let gateway = gateway_with(overrides);
    let actor = study_actor("Ilse", logic);
    let memory_before = actor.memory_digest();
    let ledger_before = actor.ledger_digest();
    let now = oct1(14, 30) + chrono::Duration::minutes(i64::from(minute));
    let questions: Vec<_> = picks.iter().map(|(id, _, _)| id.question()).collect();
    let results = administer_probes(&actor, &gateway, now, 7, &questions)
        .map_err(|e| TestCaseError::fail(e.to_string()))?;
    prop_assert_eq!(&actor.memory_digest(), &memory_before);
    prop_assert_eq!(&actor.ledger_digest(), &ledger_before);
    prop_assert_eq!(results.len(), picks.len());
    for (result, (id, index, _)) in results.iter().zip(&picks) {
        let q = id.question();
        prop_assert!(
            q.contains(result.value),
            "{:?} value {} outside scale",
            id,
            result.value
        );
        prop_assert_eq!(
            result.value,
            q.scale_min + (index % q.scale_options().len()) as i32
        );
        let bounds = match id {
            ProbeId::Q1 | ProbeId::Q4 => (-5, 5),
            ProbeId::Q2 | ProbeId::Q3 => (0, 10),
        };
        prop_assert!(result.value >= bounds.0 && result.value <= bounds.1);
    }
    let mut view = actor.clone();
    let prefix = view
        .build_prefix(&gateway, now)
        .map_err(|e| TestCaseError::fail(e.to_string()))?
        .prefix;
    let value = rate_with_prefix(&mut view, &gateway, &prefix, now, "framed art print")
        .map_err(|e| TestCaseError::fail(e.to_string()))?;
    prop_assert!((RATING_MIN..=RATING_MAX).contains(&i32::from(value)));
    prop_assert_eq!(&actor.memory_digest(), &memory_before);
    Ok(())
}

fn regex_escape(text: &str) -> String {
    regex::escape(text)
}

pub fn criterion_probe_isolation() -> Check {
    let mut runner = TestRunner::new(Config {
        cases: 50,
        failure_persistence: None,
        ..Config::default()
    });
    let strategy = (
        prop::sample::select(Logic::ALL.to_vec()),
        prop::collection::vec(
            (
                prop::sample::select(ProbeId::ALL.to_vec()),
                0usize..11,
                any::<bool>(),
            ),
            1..=4,
        ),
        0usize..8,
        0u32..60,
    );
    runner
        .run(&strategy, |(logic, mut picks, rating, minute)| {
            picks.sort_by_key(|p| p.0);
            picks.dedup_by_key(|p| p.0);
            probe_case(logic, picks, rating, minute)
        })
        .map_err(|e| e.to_string())
}

// ---- criterion 5 ----------------------------------------------------------

pub fn brute_force_pairs(ratings: [u8; 3], condition: Condition) -> Vec<(usize, usize)> {
    [(0, 1), (0, 2), (1, 2)]
        .into_iter()
        .filter(|&(i, j)| {
            let d = (i32::from(ratings[i]) - i32::from(ratings[j])).abs();
            match condition {
                Condition::Hard => d <= 1,
                Condition::Easy => d >= 3,
                _ => false,
            }
        })
        .collect()
}

pub fn criterion_pair_oracle() -> Check {
    let names = ["first item", "second item", "third item"];
    let mut checked = 0;
    for a in 1..=8u8 {
        for b in 1..=8u8 {
            for c in 1..=8u8 {
                let ratings = [a, b, c];
                let rated: Vec<(String, u8)> = names
                    .iter()
                    .zip(ratings)
                    .map(|(n, r)| (n.to_string(), r))
                    .collect();
                for condition in [Condition::Hard, Condition::Easy] {
                    let oracle = brute_force_pairs(ratings, condition);
                    let listed =
                        qualifying_pairs(&ratings, condition).map_err(|e| e.to_string())?;
                    ensure!(
                        listed == oracle,
                        "{ratings:?} {condition}: listed {listed:?}, oracle {oracle:?}"
                    );
                    let seed = u64::from(a) * 64 + u64::from(b) * 8 + u64::from(c);
                    match select_choice_pair(&rated, condition, seed) {
                        Ok((x, y)) => {
                            let i = names.iter().position(|n| *n == x).unwrap();
                            let j = names.iter().position(|n| *n == y).unwrap();
                            ensure!(
                                oracle.contains(&(i, j)),
                                "{ratings:?} {condition}: picked ({i}, {j}), oracle {oracle:?}"
                            );
                        }
                        Err(ParadigmError::NoQualifyingPair { .. }) => {
                            ensure!(
                                oracle.is_empty(),
                                "{ratings:?} {condition}: no pair, oracle {oracle:?}"
                            );
                        }
                        Err(e) => return Err(format!("{ratings:?} {condition}: {e}")),
                    }
                    checked += 1;
                }
            }
        }
    }
    ensure!(checked == 1024, "checked {checked} cases");
    Ok(())
}

// ---- criterion 6 ----------------------------------------------------------

fn is_step_event(kind: &EventKind) -> bool {
    !matches!(
        kind,
        EventKind::SceneStart { .. } | EventKind::Premise { .. }
    )
}

/// Per scene, in order: the (timestep, time) of each step.
pub fn scene_steps(events: &[GmEvent]) -> Vec<(String, Vec<(u32, NaiveDateTime)>)> {
    let mut out: Vec<(String, Vec<(u32, NaiveDateTime)>)> = Vec::new();
    for e in events {
        if matches!(e.kind, EventKind::SceneStart { .. }) {
            out.push((e.scene.clone(), Vec::new()));
        }
        if is_step_event(&e.kind) {
            let steps = &mut out.last_mut().expect("scene started").1;
            if steps.last().map(|s| s.0) != Some(e.timestep) {
                steps.push((e.timestep, e.time));
            }
        }
    }
    out
}

pub fn run_offline(
    experiment: Experiment,
    condition: Condition,
    affirmation: bool,
    seed: u64,
) -> Result<attitude_core::runner::Simulation, String> {
    let backend = Arc::new(ScriptedBackend::from_toml(OFFLINE_SCRIPT).map_err(|e| e.to_string())?);
    let library = ScenarioLibrary::builtin().map_err(|e| e.to_string())?;
    let spec = SimulationSpec {
        experiment,
        condition,
        affirmation,
        logic: Logic::Festinger,
        seed,
    };
    simulate(spec, backend, &PersonaConfig::default(), &library).map_err(|e| e.to_string())
}

pub fn check_clock(
    events: &[GmEvent],
    memory: &MemoryStore,
) -> Result<BTreeMap<String, usize>, String> {
    let mut counts = BTreeMap::new();
    for (scene, steps) in scene_steps(events) {
        for pair in steps.windows(2) {
            ensure!(
                pair[1].0 == pair[0].0 + 1,
                "{scene}: timesteps {} then {}",
                pair[0].0,
                pair[1].0
            );
            let gap = pair[1].1 - pair[0].1;
            ensure!(
                gap == chrono::Duration::minutes(2),
                "{scene}: step gap {gap}"
            );
        }
        counts.insert(scene, steps.len());
    }
    let times: Vec<_> = memory.entries().iter().map(|e| e.timestamp).collect();
    ensure!(
        times.windows(2).all(|w| w[0] <= w[1]),
        "memory timestamps go backwards"
    );
    Ok(counts)
}

pub fn criterion_clock() -> Check {
    let cases = [
        (Experiment::ItemRating, Condition::Hard, false),
        (Experiment::ItemRating, Condition::Hard, true),
        (Experiment::BoringTask, Condition::Five, false),
        (Experiment::BoringTask, Condition::TwoHundred, true),
        (Experiment::Worm, Condition::Forced, false),
        (Experiment::Worm, Condition::Choice, true),
    ];
    for (experiment, condition, affirmation) in cases {
        let label = format!("{experiment}/{condition}/affirmation={affirmation}");
        let mut sims = Vec::new();
        for seed in 0..8 {
            match run_offline(experiment, condition, affirmation, seed) {
                Ok(sim) => {
                    sims.push(sim);
                    break;
                }
                Err(e) if e.contains("no pair of items") => continue,
                Err(e) => return Err(format!("{label}: {e}")),
            }
        }
        let sim = sims
            .pop()
            .ok_or(format!("{label}: no seed produced a run"))?;
        let counts = check_clock(&sim.world.events, &sim.world.actor.memory)
            .map_err(|e| format!("{label}: {e}"))?;
        let script = &sim.world;
        let total: usize = counts.values().sum();
        ensure!(
            total as u32 == script.timestep,
            "{label}: {total} steps counted, clock at timestep {}",
            script.timestep
        );
        match experiment {
            Experiment::BoringTask => ensure!(
                counts.get("peg task") == Some(&5),
                "{label}: peg task {:?}",
                counts.get("peg task")
            ),
            Experiment::Worm => ensure!(
                counts.get("worm wait") == Some(&5),
                "{label}: worm wait {:?}",
                counts.get("worm wait")
            ),
            Experiment::ItemRating => {}
        }
        let writing = counts.get("value writing").copied().unwrap_or(0);
        ensure!(
            writing == if affirmation { 3 } else { 0 },
            "{label}: {writing} writing steps"
        );
        let prelude: usize = ["value selection", "value writing", "value collection"]
            .iter()
            .filter_map(|s| counts.get(*s))
            .sum();
        ensure!(
            prelude == if affirmation { 4 } else { 0 },
            "{label}: prelude has {prelude} steps"
        );
    }
    Ok(())
}

// ---- criterion 7 ----------------------------------------------------------

/// Exact sum of floats (Shewchuk partials), rounded once at the end.
pub fn exact_sum(values: impl IntoIterator<Item = f64>) -> f64 {
    let mut partials: Vec<f64> = Vec::new();
    for mut x in values {
        let mut kept = 0;
        for i in 0..partials.len() {
            let mut y = partials[i];
            if x.abs() < y.abs() {
                std::mem::swap(&mut x, &mut y);
            }
            let hi = x + y;
            let lo = y - (hi - x);
            if lo != 0.0 {
                partials[kept] = lo;
                kept += 1;
            }
            x = hi;
        }
        partials.truncate(kept);
        partials.push(x);
    }
    partials.iter().rev().fold(0.0, |acc, p| acc + p)
}

pub fn two_pass(values: &[f64]) -> (f64, f64) {
    let n = values.len() as f64;
    let mean = exact_sum(values.iter().copied()) / n;
    if values.len() < 2 {
        return (mean, 0.0);
    }
    let ss = exact_sum(values.iter().map(|v| (v - mean) * (v - mean)));
    (mean, (ss / (n - 1.0) / n).sqrt())
}

fn close(a: f64, b: f64) -> bool {
    a == b || (a - b).abs() <= 1e-12 * a.abs().max(b.abs())
}

pub fn criterion_aggregation() -> Check {
    let (mean, se) = aggregate(&[1.0, 2.0, 3.0]).map_err(|e| e.to_string())?;
    ensure!(mean == 2.0, "mean of [1,2,3] is {mean}");
    ensure!(close(se, 1.0 / 3f64.sqrt()), "se of [1,2,3] is {se}");
    ensure!(exact_sum([1e16, 1.0, -1e16, 1.0]) == 2.0, "oracle sum is not exact");
    let mut runner = TestRunner::new(Config {
        cases: 1000,
        failure_persistence: None,
        ..Config::default()
    });
    runner
        .run(&prop::collection::vec(-1.0e3..1.0e3f64, 1..200), |values| {
            let (m, s) = aggregate(&values).map_err(|e| TestCaseError::fail(e.to_string()))?;
            let (om, os) = two_pass(&values);
            prop_assert!(close(m, om), "mean {} vs {}", m, om);
            prop_assert!(close(s, os), "se {} vs {}", s, os);
            Ok(())
        })
        .map_err(|e| e.to_string())
}
