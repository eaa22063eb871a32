//! Multiple-choice rendering and answer parsing.
//!
//! Parse order: the first `(x)` letter marker naming a valid option, then the
//! first standalone option letter (`b.`, `b)`, `b:` or a bare letter as the
//! whole answer), then a match against the option text itself.

use std::sync::OnceLock;

use regex::Regex;

pub fn option_letter(index: usize) -> char {
    debug_assert!(index < 26);
    (b'a' + index as u8) as char
}

pub fn render_options(prompt: &str, options: &[String]) -> String {
    let mut out = String::with_capacity(prompt.len() + options.len() * 16);
    out.push_str(prompt);
    out.push('\n');
    for (i, option) in options.iter().enumerate() {
        out.push('\n');
        out.push('(');
        out.push(option_letter(i));
        out.push_str(") ");
        out.push_str(option);
    }
    out
}

fn letter_index(c: char, n_options: usize) -> Option<usize> {
    let c = c.to_ascii_lowercase();
    if !c.is_ascii_lowercase() {
        return None;
    }
    let index = (c as u8 - b'a') as usize;
    (index < n_options).then_some(index)
}

fn marker_re() -> &'static Regex {
    static RE: OnceLock<Regex> = OnceLock::new();
    RE.get_or_init(|| Regex::new(r"\(([A-Za-z])\)").expect("valid regex"))
}

fn normalize(text: &str) -> String {
    let t = text.trim().trim_end_matches('.').trim();
    let t = t.trim_matches(|c| c == '"' || c == '\'' || c == '`').trim();
    let t = t.strip_prefix('+').unwrap_or(t);
    t.to_lowercase()
}

pub fn parse_choice(completion: &str, options: &[String]) -> Option<usize> {
    let n = options.len();
    if n == 0 {
        return None;
    }

    for caps in marker_re().captures_iter(completion) {
        let c = caps[1].chars().next()?;
        if let Some(i) = letter_index(c, n) {
            return Some(i);
        }
    }

    let trimmed = completion.trim();
    let mut chars = trimmed.chars();
    if let (Some(c), None) = (chars.next(), chars.next()) {
        if let Some(i) = letter_index(c, n) {
            return Some(i);
        }
    }
    for token in trimmed.split_whitespace() {
        let mut cs = token.chars();
        if let (Some(c), Some(p), None) = (cs.next(), cs.next(), cs.next()) {
            if matches!(p, '.' | ')' | ':') {
                if let Some(i) = letter_index(c, n) {
                    return Some(i);
                }
            }
        }
    }

    let answer = normalize(completion);
    if let Some(i) = options.iter().position(|o| normalize(o) == answer) {
        return Some(i);
    }
    // Longest option first so "10" wins over "1".
    let mut by_len: Vec<(usize, String)> =
        options.iter().map(|o| normalize(o)).enumerate().collect();
    by_len.sort_by(|a, b| b.1.len().cmp(&a.1.len()).then(a.0.cmp(&b.0)));
    by_len.into_iter().find_map(|(i, opt)| {
        let rest = answer.strip_prefix(opt.as_str())?;
        (!opt.is_empty() && rest.chars().next().is_none_or(|c| !c.is_alphanumeric())).then_some(i)
    })
}
