//! Prompt templates for every agent and parsers for their replies.

mod annotate;
mod templates;

pub use annotate::build_error_annotation;
pub use templates::{render_prompt, PromptKind, PromptVars, TEMPLATE_VERSION};

use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::services::TheoremHit;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum AgentError {
    #[error("template {kind:?} needs `{name}`")]
    MissingVariable { kind: PromptKind, name: String },
    #[error("response contains no <search> queries")]
    NoQueries,
    #[error("response contains no `Judgement:` line")]
    NoJudgement,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Verdict {
    Appropriate,
    Inappropriate,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Judgement {
    pub verdict: Verdict,
    pub rationale: String,
}

/// Contents of every `<search>…</search>` pair, trimmed, in order. Empty
/// pairs are skipped.
pub fn parse_search_queries(response: &str) -> Result<Vec<String>, AgentError> {
    const OPEN: &str = "<search>";
    const CLOSE: &str = "</search>";
    let mut out = Vec::new();
    let mut rest = response;
    while let Some(i) = rest.find(OPEN) {
        let after = &rest[i + OPEN.len()..];
        let Some(j) = after.find(CLOSE) else { break };
        let q = after[..j].trim();
        if !q.is_empty() {
            out.push(q.to_string());
        }
        rest = &after[j + CLOSE.len()..];
    }
    if out.is_empty() {
        Err(AgentError::NoQueries)
    } else {
        Ok(out)
    }
}

fn strip_markup(line: &str) -> &str {
    line.trim().trim_start_matches(['*', '#', '_', ' ']).trim_start()
}

fn label_value<'a>(line: &'a str, label: &str) -> Option<&'a str> {
    let l = strip_markup(line);
    let head = l.get(..label.len())?;
    if !head.eq_ignore_ascii_case(label) {
        return None;
    }
    let rest = l[label.len()..].trim_start_matches(['*', '_']);
    rest.strip_prefix(':')
}

fn parse_verdict(value: &str) -> Option<Verdict> {
    let v = value
        .trim()
        .trim_matches(|c: char| c == '*' || c == '_' || c == '[' || c == ']' || c == '`' || c.is_whitespace())
        .to_ascii_lowercase();
    if v.starts_with("inappropriate") {
        Some(Verdict::Inappropriate)
    } else if v.starts_with("appropriate") {
        Some(Verdict::Appropriate)
    } else {
        None
    }
}

/// The verdict on the last `Judgement:` line that names one, with the text
/// of the `Thought:` section before it as rationale.
pub fn parse_judgement(response: &str) -> Result<Judgement, AgentError> {
    let lines: Vec<&str> = response.lines().collect();
    let (idx, verdict) = lines
        .iter()
        .enumerate()
        .rev()
        .find_map(|(i, l)| label_value(l, "judgement").and_then(parse_verdict).map(|v| (i, v)))
        .ok_or(AgentError::NoJudgement)?;
    let rationale = lines[..idx]
        .iter()
        .rposition(|l| label_value(l, "thought").is_some())
        .map(|t| {
            let first = label_value(lines[t], "thought").unwrap_or_default();
            std::iter::once(first)
                .chain(lines[t + 1..idx].iter().copied())
                .collect::<Vec<_>>()
                .join("\n")
                .trim()
                .to_string()
        })
        .unwrap_or_default();
    Ok(Judgement { verdict, rationale })
}

/// `theorem_` followed by the first 12 hex digits of the SHA-256 of the
/// trimmed statement.
pub fn generate_theorem_name(informal: &str) -> String {
    let digest = Sha256::digest(informal.trim().as_bytes());
    let hex: String = digest.iter().take(6).map(|b| format!("{b:02x}")).collect();
    format!("theorem_{hex}")
}

/// The retrieved-theorem list for the sketching prompts: one
/// `- <full_name> : <statement>` line per hit, at most `cap` lines.
pub fn render_hints_section(hits: &[TheoremHit], cap: usize) -> String {
    hits.iter()
        .take(cap)
        .map(|h| format!("- {} : {}", h.full_name, collapse(&h.statement)))
        .collect::<Vec<_>>()
        .join("\n")
}

fn collapse(s: &str) -> String {
    s.split_whitespace().collect::<Vec<_>>().join(" ")
}
