use serde::{Deserialize, Serialize};

use super::AgentError;

pub const TEMPLATE_VERSION: &str = "v1";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum PromptKind {
    Formalizer,
    ProverInitial,
    ProverCorrection,
    QueryInitial,
    QueryBacktrack,
    DecomposerInitial,
    DecomposerCorrection,
    DecomposerBacktrack,
    SemanticCheck,
}

impl PromptKind {
    pub const ALL: [PromptKind; 9] = [
        PromptKind::Formalizer,
        PromptKind::ProverInitial,
        PromptKind::ProverCorrection,
        PromptKind::QueryInitial,
        PromptKind::QueryBacktrack,
        PromptKind::DecomposerInitial,
        PromptKind::DecomposerCorrection,
        PromptKind::DecomposerBacktrack,
        PromptKind::SemanticCheck,
    ];

    pub fn template(self) -> &'static str {
        match self {
            PromptKind::Formalizer => include_str!("../../templates/v1/formalizer.md"),
            PromptKind::ProverInitial => include_str!("../../templates/v1/prover_initial.md"),
            PromptKind::ProverCorrection => include_str!("../../templates/v1/prover_correction.md"),
            PromptKind::QueryInitial => include_str!("../../templates/v1/query_initial.md"),
            PromptKind::QueryBacktrack => include_str!("../../templates/v1/query_backtrack.md"),
            PromptKind::DecomposerInitial => include_str!("../../templates/v1/decomposer_initial.md"),
            PromptKind::DecomposerCorrection => include_str!("../../templates/v1/decomposer_correction.md"),
            PromptKind::DecomposerBacktrack => include_str!("../../templates/v1/decomposer_backtrack.md"),
            PromptKind::SemanticCheck => include_str!("../../templates/v1/semantic_check.md"),
        }
    }

    /// Placeholder names in template order, without repeats.
    pub fn placeholders(self) -> Vec<&'static str> {
        let mut out = Vec::new();
        for seg in segments(self.template()) {
            if let Segment::Var(v) = seg {
                if !out.contains(&v) {
                    out.push(v);
                }
            }
        }
        out
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct PromptVars {
    pub formal_statement_name: Option<String>,
    pub informal_statement: Option<String>,
    pub formal_statement: Option<String>,
    pub formal_theorem: Option<String>,
    pub prev_round_num: Option<String>,
    pub error_message_for_prev_round: Option<String>,
    pub theorem_hints_section: Option<String>,
}

impl PromptVars {
    pub fn get(&self, name: &str) -> Option<&str> {
        let v = match name {
            "formal_statement_name" => &self.formal_statement_name,
            "informal_statement" => &self.informal_statement,
            "formal_statement" => &self.formal_statement,
            "formal_theorem" => &self.formal_theorem,
            "prev_round_num" => &self.prev_round_num,
            "error_message_for_prev_round" => &self.error_message_for_prev_round,
            "theorem_hints_section" => &self.theorem_hints_section,
            _ => return None,
        };
        v.as_deref()
    }
}

enum Segment<'a> {
    Text(&'a str),
    Var(&'a str),
}

fn segments(template: &str) -> Vec<Segment<'_>> {
    let mut out = Vec::new();
    let mut rest = template;
    while let Some(i) = rest.find("{{") {
        let Some(j) = rest[i..].find("}}") else { break };
        out.push(Segment::Text(&rest[..i]));
        out.push(Segment::Var(rest[i + 2..i + j].trim()));
        rest = &rest[i + j + 2..];
    }
    out.push(Segment::Text(rest));
    out
}

/// Fill `{{ name }}` markers in one pass; substituted text is never
/// re-scanned.
pub fn render_prompt(kind: PromptKind, vars: &PromptVars) -> Result<String, AgentError> {
    let mut out = String::new();
    for seg in segments(kind.template()) {
        match seg {
            Segment::Text(t) => out.push_str(t),
            Segment::Var(name) => out.push_str(vars.get(name).ok_or_else(|| AgentError::MissingVariable {
                kind,
                name: name.to_string(),
            })?),
        }
    }
    Ok(out)
}
