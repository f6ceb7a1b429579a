//! Text-level manipulation of Lean 4 code: preamble handling, proof-body
//! extraction, `sorry` substitution and fenced-code-block parsing.
//!
//! Everything here is a pure function over its inputs.

mod lexer;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use lexer::{tokenize, Token, TokenKind};

pub(crate) use lexer::{is_ident_continue, is_ident_start};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum LeanSourceError {
    #[error("no top-level `by` block in declaration")]
    NoByBlock,
    #[error("no unproven `have {name}` in sketch")]
    SubgoalNotFound { name: String },
    #[error("`have {name}` occurs {count} times as an unproven subgoal")]
    AmbiguousSubgoal { name: String, count: usize },
    #[error("no fenced ```lean4 code block in response")]
    NoCodeBlock,
}

/// The canonical header every formal artifact carries, in this order.
pub const CANONICAL_PREAMBLE: [&str; 4] = [
    "import Mathlib",
    "import Aesop",
    "set_option maxHeartbeats 0",
    "open BigOperators Real Nat Topology Rat",
];

const HEADER_COMMANDS: &[&str] = &["import", "open", "set_option", "variable"];

const DECL_KEYWORDS: &[&str] = &["theorem", "lemma", "example", "def", "abbrev", "instance"];

/// A Lean artifact split into header and declaration.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct LeanSource {
    pub preamble: String,
    pub body: String,
}

impl LeanSource {
    pub fn new(preamble: impl Into<String>, body: impl Into<String>) -> Self {
        Self {
            preamble: preamble.into(),
            body: body.into(),
        }
    }

    /// Same body, preamble replaced by its canonical form.
    pub fn normalized(&self) -> Self {
        Self {
            preamble: normalize_preamble(&self.preamble).render(),
            body: self.body.clone(),
        }
    }

    /// Preamble, one blank line, body.
    pub fn to_code(&self) -> String {
        let body = self.body.trim_end();
        if self.preamble.trim().is_empty() {
            format!("{body}\n")
        } else {
            format!("{}\n\n{body}\n", self.preamble.trim_end())
        }
    }
}

/// Normalized header lines. Always starts with the canonical block; extra
/// user commands follow, deduplicated, with extra imports hoisted next to the
/// canonical imports because Lean only accepts `import` at the top of a file.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CanonicalPreamble {
    lines: Vec<String>,
}

impl Default for CanonicalPreamble {
    fn default() -> Self {
        Self {
            lines: CANONICAL_PREAMBLE.iter().map(|s| s.to_string()).collect(),
        }
    }
}

impl CanonicalPreamble {
    pub fn lines(&self) -> &[String] {
        &self.lines
    }

    /// Header text with a blank line wherever the leading command changes,
    /// which reproduces the usual `import` / `set_option` / `open` layout.
    pub fn render(&self) -> String {
        let mut out = String::new();
        let mut prev: Option<&str> = None;
        for line in &self.lines {
            let head = line.split_whitespace().next().unwrap_or("");
            if let Some(p) = prev {
                out.push('\n');
                if p != head {
                    out.push('\n');
                }
            }
            out.push_str(line);
            prev = Some(head);
        }
        out
    }
}

fn first_word(line: &str) -> &str {
    line.split(|c: char| c.is_whitespace() || c == '(' || c == '{' || c == '[')
        .next()
        .unwrap_or("")
}

/// Drop an end-of-line `--` comment from a header command.
fn strip_line_comment(line: &str) -> &str {
    match line.find("--") {
        Some(i) => line[..i].trim_end(),
        None => line,
    }
}

/// Header line classification for [`split_source`]; tracks block comments.
struct HeaderScanner {
    in_block_comment: bool,
    after_command: bool,
}

impl HeaderScanner {
    fn accepts(&mut self, line: &str) -> bool {
        let trimmed = line.trim();
        if self.in_block_comment {
            if trimmed.contains("-/") {
                self.in_block_comment = false;
            }
            return true;
        }
        if trimmed.is_empty() {
            self.after_command = false;
            return true;
        }
        if trimmed.starts_with("--") {
            return true;
        }
        if trimmed.starts_with("/-") && !trimmed.starts_with("/--") {
            let rest = &trimmed[2..];
            self.in_block_comment = !rest.contains("-/");
            return true;
        }
        let indented = line.starts_with(char::is_whitespace);
        if indented && self.after_command {
            return true;
        }
        if indented {
            return false;
        }
        let is_command = HEADER_COMMANDS.contains(&first_word(trimmed));
        // `open Foo in` scopes the declaration that follows it.
        let scoped = strip_line_comment(trimmed).ends_with(" in");
        self.after_command = is_command && !scoped;
        self.after_command
    }
}

/// Split Lean code into a header (imports, `open`, `set_option`, `variable`,
/// comments and blank lines) and the remaining body.
pub fn split_source(code: &str) -> LeanSource {
    let mut scanner = HeaderScanner {
        in_block_comment: false,
        after_command: false,
    };
    let lines: Vec<&str> = code.lines().collect();
    let split = lines
        .iter()
        .position(|l| !scanner.accepts(l))
        .unwrap_or(lines.len());
    let preamble = lines[..split].join("\n").trim_end().to_string();
    let body = lines[split..].join("\n").trim_end().to_string();
    LeanSource { preamble, body }
}

/// Canonicalize a header: the mandatory lines first, then any user commands
/// not already present. Comments and blank lines are dropped and conflicting
/// `maxHeartbeats` settings are replaced by the canonical one. Idempotent.
pub fn normalize_preamble(preamble: &str) -> CanonicalPreamble {
    let mut commands: Vec<String> = Vec::new();
    let mut in_block = false;
    for line in preamble.lines() {
        let trimmed = line.trim();
        if in_block {
            in_block = !trimmed.contains("-/");
            continue;
        }
        if let Some(rest) = trimmed.strip_prefix("/-") {
            in_block = !rest.contains("-/");
            continue;
        }
        let text = strip_line_comment(trimmed);
        if text.is_empty() {
            continue;
        }
        let collapsed = text.split_whitespace().collect::<Vec<_>>().join(" ");
        match commands.last_mut() {
            Some(prev) if line.starts_with(char::is_whitespace) => {
                prev.push(' ');
                prev.push_str(&collapsed);
            }
            _ => commands.push(collapsed),
        }
    }

    let mut imports: Vec<String> = CANONICAL_PREAMBLE[..2].iter().map(|s| s.to_string()).collect();
    let mut rest: Vec<String> = CANONICAL_PREAMBLE[2..].iter().map(|s| s.to_string()).collect();
    for cmd in commands {
        if cmd.starts_with("set_option maxHeartbeats") {
            continue;
        }
        let bucket = if first_word(&cmd) == "import" {
            &mut imports
        } else {
            &mut rest
        };
        if !bucket.contains(&cmd) {
            bucket.push(cmd);
        }
    }
    imports.extend(rest);
    CanonicalPreamble { lines: imports }
}

/// The proof of a declaration, either a tactic block or a term.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum ProofBody {
    Tactics(String),
    Term(String),
}

impl ProofBody {
    /// Tactic text usable inside a `by` block; terms become `exact (<term>)`.
    pub fn into_tactics(self) -> String {
        match self {
            ProofBody::Tactics(t) => t,
            ProofBody::Term(t) if t.contains('\n') => format!("exact (\n  {})", indent_tail(&t, 2)),
            ProofBody::Term(t) => format!("exact ({t})"),
        }
    }
}

fn indent_tail(text: &str, n: usize) -> String {
    let pad = " ".repeat(n);
    text.lines()
        .enumerate()
        .map(|(i, l)| {
            if i == 0 || l.trim().is_empty() {
                l.to_string()
            } else {
                format!("{pad}{l}")
            }
        })
        .collect::<Vec<_>>()
        .join("\n")
}

/// Index of the first declaration keyword token.
fn find_declaration(tokens: &[Token<'_>]) -> Option<usize> {
    tokens
        .iter()
        .position(|t| t.kind == TokenKind::Ident && DECL_KEYWORDS.contains(&t.text))
}

/// Index of the declaration's own `:=`, skipping `let x := ...` and
/// `have h := ...` inside the statement, and anything nested in brackets.
fn find_decl_assign(tokens: &[Token<'_>], decl: usize) -> Option<usize> {
    let mut depth = 0usize;
    let mut pending_bindings = 0usize;
    for (i, t) in tokens.iter().enumerate().skip(decl + 1) {
        match t.kind {
            TokenKind::Open => depth += 1,
            TokenKind::Close => depth = depth.saturating_sub(1),
            TokenKind::Ident if depth == 0 && (t.text == "let" || t.text == "have") => {
                pending_bindings += 1
            }
            TokenKind::Symbol if depth == 0 && t.text == ":=" => {
                if pending_bindings == 0 {
                    return Some(i);
                }
                pending_bindings -= 1;
            }
            _ => {}
        }
        // A column-0 token on a later line starts the next command.
        if t.col == 0 && t.line > tokens[decl].line && i > decl + 1 {
            return None;
        }
    }
    None
}

/// Byte offset where the declaration containing token `from` ends.
fn decl_end(src: &str, tokens: &[Token<'_>], from: usize) -> usize {
    let line = tokens[from].line;
    tokens[from + 1..]
        .iter()
        .find(|t| t.col == 0 && t.line > line)
        .map(|t| t.start)
        .unwrap_or(src.len())
}

fn leading_ws(line: &str) -> usize {
    line.chars().take_while(|c| c.is_whitespace()).count()
}

/// Join the remainder of the first line with the following lines, removing
/// the common indentation of the latter.
fn dedent_block(first: &str, rest: &str) -> String {
    let rest_lines: Vec<&str> = rest.lines().collect();
    let min_indent = rest_lines
        .iter()
        .filter(|l| !l.trim().is_empty())
        .map(|l| leading_ws(l))
        .min()
        .unwrap_or(0);
    let mut out: Vec<String> = Vec::new();
    let first = first.trim();
    if !first.is_empty() {
        out.push(first.to_string());
    }
    for l in rest_lines {
        if l.trim().is_empty() {
            out.push(String::new());
        } else {
            out.push(l.chars().skip(min_indent).collect::<String>().trim_end().to_string());
        }
    }
    while out.first().is_some_and(|l| l.is_empty()) {
        out.remove(0);
    }
    while out.last().is_some_and(|l| l.is_empty()) {
        out.pop();
    }
    out.join("\n")
}

fn split_first_line(text: &str) -> (&str, &str) {
    match text.find('\n') {
        Some(i) => (&text[..i], &text[i + 1..]),
        None => (text, ""),
    }
}

/// The proof of the first declaration in `proof`: the tactics after its
/// top-level `:= by`, or the term after its `:=`.
pub fn proof_body(proof: &str) -> Result<ProofBody, LeanSourceError> {
    let tokens = tokenize(proof);
    let decl = find_declaration(&tokens).ok_or(LeanSourceError::NoByBlock)?;
    let assign = find_decl_assign(&tokens, decl).ok_or(LeanSourceError::NoByBlock)?;
    let next = tokens.get(assign + 1).ok_or(LeanSourceError::NoByBlock)?;
    let end = decl_end(proof, &tokens, assign);
    if next.is_ident("by") {
        let (first, rest) = split_first_line(&proof[next.end..end]);
        Ok(ProofBody::Tactics(dedent_block(first, rest)))
    } else {
        let (first, rest) = split_first_line(&proof[tokens[assign].end..end]);
        Ok(ProofBody::Term(dedent_block(first, rest)))
    }
}

/// Everything after the declaration's first top-level `:= by`, with relative
/// indentation preserved. Term-mode proofs yield [`LeanSourceError::NoByBlock`].
pub fn extract_proof_body(proof: &str) -> Result<String, LeanSourceError> {
    match proof_body(proof)? {
        ProofBody::Tactics(t) => Ok(t),
        ProofBody::Term(_) => Err(LeanSourceError::NoByBlock),
    }
}

/// The declaration's statement (name, binders and type) with whitespace
/// collapsed, used to detect a completion that altered the theorem.
pub fn statement_header(code: &str) -> Option<String> {
    let tokens = tokenize(code);
    let decl = find_declaration(&tokens)?;
    let assign = find_decl_assign(&tokens, decl)?;
    let start = tokens.get(decl + 1)?.start;
    let text = &code[start..tokens[assign].start];
    Some(text.split_whitespace().collect::<Vec<_>>().join(" "))
}

/// `code` up to its first declaration's `:=`, followed by `by sorry` on an
/// indented line; anything after the declaration is dropped.
pub fn statement_with_sorry(code: &str) -> Result<String, LeanSourceError> {
    let tokens = tokenize(code);
    let decl = find_declaration(&tokens).ok_or(LeanSourceError::NoByBlock)?;
    let assign = find_decl_assign(&tokens, decl).ok_or(LeanSourceError::NoByBlock)?;
    Ok(format!("{} by\n  sorry", code[..tokens[assign].end].trim()))
}

/// Name of the first declaration, if any.
pub fn declaration_name(code: &str) -> Option<String> {
    let tokens = tokenize(code);
    let decl = find_declaration(&tokens)?;
    tokens
        .get(decl + 1)
        .filter(|t| t.kind == TokenKind::Ident)
        .map(|t| t.text.to_string())
}

pub fn has_declaration(code: &str) -> bool {
    find_declaration(&tokenize(code)).is_some()
}

/// Where the `sorry` of an unproven `have` sits and how it is written.
struct SorrySite {
    have_col: usize,
    /// Byte range replaced by the new proof.
    range: (usize, usize),
    /// Text placed before the indented body inside `range`.
    lead: &'static str,
}

fn unproven_have_sites(src: &str, tokens: &[Token<'_>], name: &str) -> Vec<SorrySite> {
    let mut sites = Vec::new();
    for i in 0..tokens.len().saturating_sub(1) {
        if !(tokens[i].is_ident("have") && tokens[i + 1].is_ident(name)) {
            continue;
        }
        let have = tokens[i];
        let mut depth = 0usize;
        let mut j = i + 2;
        let assign = loop {
            let Some(t) = tokens.get(j) else { break None };
            match t.kind {
                TokenKind::Open => depth += 1,
                TokenKind::Close => depth = depth.saturating_sub(1),
                TokenKind::Symbol if depth == 0 && t.text == ":=" => break Some(j),
                TokenKind::Ident if depth == 0 && t.text == "have" => break None,
                _ => {}
            }
            j += 1;
        };
        let Some(assign) = assign else { continue };
        let (by, sorry_idx) = match (tokens.get(assign + 1), tokens.get(assign + 2)) {
            (Some(b), Some(s)) if b.is_ident("by") && s.is_ident("sorry") => (Some(*b), assign + 2),
            (Some(s), _) if s.is_ident("sorry") => (None, assign + 1),
            _ => continue,
        };
        let sorry = tokens[sorry_idx];
        // The sorry must be the whole proof: nothing after it on its line and,
        // for a block on its own line, no further tactic at the same column.
        if let Some(after) = tokens.get(sorry_idx + 1) {
            let own_line = by.is_some_and(|b| sorry.line > b.line);
            if after.line == sorry.line || (own_line && after.col >= sorry.col) {
                continue;
            }
        }
        let site = match by {
            Some(b) if sorry.line > b.line => {
                let line_start = src[..sorry.start].rfind('\n').map(|p| p + 1).unwrap_or(0);
                SorrySite {
                    have_col: have.col,
                    range: (line_start, sorry.end),
                    lead: "",
                }
            }
            Some(b) => SorrySite {
                have_col: have.col,
                range: (b.end, sorry.end),
                lead: "\n",
            },
            None => SorrySite {
                have_col: have.col,
                range: (sorry.start, sorry.end),
                lead: "by\n",
            },
        };
        sites.push(site);
    }
    sites
}

/// Indent every non-blank line of `body` by `n` spaces.
pub fn indent_lines(body: &str, n: usize) -> String {
    let pad = " ".repeat(n);
    body.lines()
        .map(|l| {
            if l.trim().is_empty() {
                String::new()
            } else {
                format!("{pad}{l}")
            }
        })
        .collect::<Vec<_>>()
        .join("\n")
}

/// Replace the `sorry` proving `have <name>` with `proof_body`, nested two
/// columns right of the `have`. All other text is left byte-identical.
pub fn replace_subgoal(sketch: &str, name: &str, proof_body: &str) -> Result<String, LeanSourceError> {
    let tokens = tokenize(sketch);
    let mut sites = unproven_have_sites(sketch, &tokens, name);
    let site = match sites.len() {
        0 => {
            return Err(LeanSourceError::SubgoalNotFound {
                name: name.to_string(),
            })
        }
        1 => sites.pop().unwrap(),
        count => {
            return Err(LeanSourceError::AmbiguousSubgoal {
                name: name.to_string(),
                count,
            })
        }
    };
    let body = proof_body.trim_end();
    let body = if body.trim().is_empty() { "sorry" } else { body };
    let mut out = String::with_capacity(sketch.len() + body.len() + 16);
    out.push_str(&sketch[..site.range.0]);
    out.push_str(site.lead);
    out.push_str(&indent_lines(body, site.have_col + 2));
    out.push_str(&sketch[site.range.1..]);
    Ok(out)
}

/// Contents of the last fenced ```lean4 (or ```lean) block in a completion.
pub fn extract_code_block(response: &str) -> Result<String, LeanSourceError> {
    let mut found = None;
    let mut search = 0;
    while let Some(rel) = response[search..].find("```") {
        let fence = search + rel;
        let after = &response[fence + 3..];
        let tag_len = after
            .find(|c: char| c.is_whitespace())
            .unwrap_or(after.len());
        let tag = &after[..tag_len];
        if tag != "lean4" && tag != "lean" {
            search = fence + 3;
            continue;
        }
        let header_rest = &after[tag_len..];
        let Some(nl) = header_rest.find('\n') else { break };
        if !header_rest[..nl].trim().is_empty() {
            search = fence + 3;
            continue;
        }
        let content_start = fence + 3 + tag_len + nl + 1;
        let Some(close_rel) = response[content_start..].find("```") else { break };
        let content = &response[content_start..content_start + close_rel];
        found = Some(content.trim_end().trim_start_matches('\n').to_string());
        search = content_start + close_rel + 3;
    }
    found.ok_or(LeanSourceError::NoCodeBlock)
}

/// Number of `sorry` tokens outside comments and string literals.
pub fn count_sorries(code: &str) -> usize {
    tokenize(code).iter().filter(|t| t.is_ident("sorry")).count()
}

/// Whether `ident` occurs as a whole identifier token in `text`.
pub fn mentions_ident(text: &str, ident: &str) -> bool {
    tokenize(text).iter().any(|t| t.is_ident(ident))
}

/// Lean identifier check for generated declaration names.
pub fn is_valid_ident(name: &str) -> bool {
    !name.is_empty()
        && name.split('.').all(|part| {
            let mut chars = part.chars();
            chars.next().is_some_and(is_ident_start) && chars.all(is_ident_continue)
        })
}
