//! Syntax trees returned by the verification service's AST endpoint, and
//! the traversal that turns a sketch's unproven `have`s into standalone
//! subgoal theorems.
//!
//! # Payload schema
//!
//! The exporter output is consumed as
//!
//! ```json
//! { "ast": <node>, "sorries": [{"goal": "...", "pos": {"line": 1, "column": 0}}], "error": null, "time": 0.4 }
//! ```
//!
//! where a node is `{"kind": ..., "value"?: ..., "pos"?: ..., "end_pos"?: ..., "children"?: [...]}`.
//! `args`/`val`/`endPos` are accepted as aliases and unknown fields are
//! ignored. Lines are 1-based, columns 0-based (Lean's convention).
//!
//! Node kinds recognized by the traversal are Lean's own syntax kinds
//! (`Lean.Parser.Tactic.tacticHave_`, `Lean.Parser.Term.haveId`,
//! `Lean.Parser.Term.byTactic`, `Lean.Parser.Tactic.tacticSorry`, ...) or
//! their last path component.

use serde::{Deserialize, Serialize};
use serde_json::Value;
use thiserror::Error;

use crate::lean_source::{is_valid_ident, mentions_ident, CanonicalPreamble};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum AstError {
    #[error("malformed AST payload: {0}")]
    MalformedAst(String),
    #[error("sorry at {line}:{column} is not the proof of a named `have`")]
    AnonymousSorry { line: u32, column: u32 },
    #[error("no sorries metadata for subgoal `{0}`")]
    MissingSorryInfo(String),
    #[error("no subgoal named `{0}`")]
    SubgoalNotFound(String),
    #[error("subgoal name `{name}` is used {} times (at {})", .positions.len(), fmt_positions(.positions))]
    DuplicateSubgoalName { name: String, positions: Vec<Position> },
    #[error("`{0}` is not a valid Lean identifier")]
    InvalidName(String),
}

fn fmt_positions(ps: &[Position]) -> String {
    ps.iter()
        .map(|p| format!("{}:{}", p.line, p.column))
        .collect::<Vec<_>>()
        .join(", ")
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize, Default)]
pub struct Position {
    pub line: u32,
    pub column: u32,
}

impl Position {
    pub fn new(line: u32, column: u32) -> Self {
        Self { line, column }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AstNode {
    pub kind: String,
    #[serde(default, alias = "val", skip_serializing_if = "Option::is_none")]
    pub value: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub pos: Option<Position>,
    #[serde(default, alias = "endPos", skip_serializing_if = "Option::is_none")]
    pub end_pos: Option<Position>,
    #[serde(default, alias = "args", skip_serializing_if = "Vec::is_empty")]
    pub children: Vec<AstNode>,
}

impl AstNode {
    pub fn new(kind: impl Into<String>) -> Self {
        Self {
            kind: kind.into(),
            value: None,
            pos: None,
            end_pos: None,
            children: Vec::new(),
        }
    }

    pub fn with_value(mut self, value: impl Into<String>) -> Self {
        self.value = Some(value.into());
        self
    }

    pub fn at(mut self, pos: Position) -> Self {
        self.pos = Some(pos);
        self
    }

    pub fn child(mut self, child: AstNode) -> Self {
        self.children.push(child);
        self
    }

    /// Pre-order walk.
    pub fn walk<'a>(&'a self, f: &mut impl FnMut(&'a AstNode)) {
        f(self);
        for c in &self.children {
            c.walk(f);
        }
    }

    pub fn node_count(&self) -> usize {
        let mut n = 0;
        self.walk(&mut |_| n += 1);
        n
    }

    fn is(&self, short: &str) -> bool {
        self.kind == short || self.kind.rsplit('.').next() == Some(short)
    }

    fn is_have(&self) -> bool {
        self.is("tacticHave_") || self.is("have")
    }

    fn is_sorry(&self) -> bool {
        self.is("tacticSorry") || self.is("sorry")
    }

    fn is_by(&self) -> bool {
        self.is("byTactic") || self.is("by")
    }

    /// Syntax nodes that only group tactics.
    fn is_transparent(&self) -> bool {
        self.kind.contains("tacticSeq") || self.kind == "null"
    }

    fn is_atom(&self) -> bool {
        self.kind == "atom"
    }
}

/// A hypothesis in a goal's local context.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Binder {
    pub name: String,
    pub ty: String,
}

impl Binder {
    pub fn new(name: impl Into<String>, ty: impl Into<String>) -> Self {
        Self {
            name: name.into(),
            ty: ty.into(),
        }
    }

    /// Hypothesis syntax for a theorem signature. Inaccessible instance
    /// names (`inst✝`) become instance binders; other inaccessible names get
    /// a plain suffix so they can be written down.
    pub fn render(&self) -> String {
        if self.name.starts_with("inst") && self.name.contains('✝') {
            return format!("[{}]", self.ty);
        }
        format!("({} : {})", self.name.replace('✝', "_"), self.ty)
    }
}

/// Type information Lean reports for one `sorry`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SorryInfo {
    pub goal_type: String,
    pub binders: Vec<Binder>,
    pub position: Position,
}

impl SorryInfo {
    /// Parse a pretty-printed goal (`h : T` lines, then `⊢ goal`).
    pub fn from_goal(goal: &str, position: Position) -> Self {
        let (binders, goal_type) = parse_goal(goal);
        Self {
            goal_type,
            binders,
            position,
        }
    }
}

fn collapse_ws(s: &str) -> String {
    s.split_whitespace().collect::<Vec<_>>().join(" ")
}

/// Split a goal display into hypotheses and target. Continuation lines of a
/// wrapped hypothesis or target are indented.
pub fn parse_goal(goal: &str) -> (Vec<Binder>, String) {
    let mut items: Vec<String> = Vec::new();
    for line in goal.lines() {
        if line.trim().is_empty() || line.starts_with("case ") {
            continue;
        }
        match items.last_mut() {
            Some(last) if line.starts_with(char::is_whitespace) => {
                last.push(' ');
                last.push_str(line.trim());
            }
            _ => items.push(line.trim().to_string()),
        }
    }
    let mut binders = Vec::new();
    let mut target = None;
    for item in items {
        if let Some(t) = item.strip_prefix('⊢') {
            // Only the first goal matters for a `have` proof.
            target.get_or_insert_with(|| collapse_ws(t));
            continue;
        }
        if target.is_some() {
            continue;
        }
        let Some((names, ty)) = split_hypothesis(&item) else {
            continue;
        };
        for name in names.split_whitespace() {
            binders.push(Binder::new(name, collapse_ws(ty)));
        }
    }
    match target {
        Some(t) => (binders, t),
        None => (Vec::new(), collapse_ws(goal)),
    }
}

/// `a b : T` → (`a b`, `T`); `x : T := v` keeps only the type.
fn split_hypothesis(item: &str) -> Option<(&str, &str)> {
    let idx = item.find(" : ")?;
    let names = &item[..idx];
    let mut ty = &item[idx + 3..];
    if let Some(i) = ty.find(" := ") {
        ty = &ty[..i];
    }
    Some((names, ty))
}

#[derive(Deserialize)]
struct RawSorry {
    goal: String,
    pos: Position,
}

/// Parse an AST-endpoint payload into the tree and its sorries metadata.
/// Accepts either the full response object or a bare tree.
pub fn parse_ast(payload: &str) -> Result<(AstNode, Vec<SorryInfo>), AstError> {
    let value: Value =
        serde_json::from_str(payload).map_err(|e| AstError::MalformedAst(e.to_string()))?;
    ast_from_value(value)
}

pub(crate) fn ast_from_value(mut value: Value) -> Result<(AstNode, Vec<SorryInfo>), AstError> {
    let obj = value
        .as_object_mut()
        .ok_or_else(|| AstError::MalformedAst("payload is not an object".into()))?;
    let (tree, sorries) = match obj.remove("ast") {
        Some(tree) => (tree, obj.remove("sorries").unwrap_or(Value::Null)),
        None => (value, Value::Null),
    };
    let tree: AstNode =
        serde_json::from_value(tree).map_err(|e| AstError::MalformedAst(e.to_string()))?;
    check_kinds(&tree)?;
    let sorries: Vec<RawSorry> = match sorries {
        Value::Null => Vec::new(),
        v => serde_json::from_value(v).map_err(|e| AstError::MalformedAst(e.to_string()))?,
    };
    let infos = sorries
        .into_iter()
        .map(|s| SorryInfo::from_goal(&s.goal, s.pos))
        .collect();
    Ok((tree, infos))
}

fn check_kinds(tree: &AstNode) -> Result<(), AstError> {
    let mut ok = true;
    tree.walk(&mut |n| ok &= !n.kind.is_empty());
    if ok {
        Ok(())
    } else {
        Err(AstError::MalformedAst("node with empty kind".into()))
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Subgoal {
    pub name: String,
    pub goal_type: String,
    pub context_binders: Vec<Binder>,
    pub standalone_statement: String,
    /// Position of the `sorry` this subgoal replaces.
    pub position: Position,
}

impl Subgoal {
    pub fn new(name: impl Into<String>, goal_type: impl Into<String>, context_binders: Vec<Binder>) -> Self {
        let name = name.into();
        let goal_type = goal_type.into();
        let standalone_statement = render_theorem(&name, &context_binders, &goal_type);
        Self {
            name,
            goal_type,
            context_binders,
            standalone_statement,
            position: Position::default(),
        }
    }
}

fn render_theorem(name: &str, binders: &[Binder], goal_type: &str) -> String {
    let mut head = format!("theorem {name}");
    for b in binders {
        head.push(' ');
        head.push_str(&b.render());
    }
    format!("{head} : {goal_type} := by\n  sorry")
}

/// A `have` found in the tree, with the sorry node that is its whole proof.
struct HaveSite<'a> {
    name: Option<String>,
    sorry: Option<&'a AstNode>,
}

fn have_name(have: &AstNode) -> Option<String> {
    let mut name = None;
    have.walk(&mut |n| {
        if name.is_none() && n.is("haveId") {
            let mut ident = None;
            n.walk(&mut |m| {
                if ident.is_none() && m.kind == "ident" {
                    ident = m.value.clone();
                }
            });
            name = ident.or_else(|| n.value.clone());
        }
    });
    name
}

/// Tactics of a `by` block, looking through grouping nodes and separators.
fn block_tactics(node: &AstNode) -> Vec<&AstNode> {
    let mut out = Vec::new();
    for c in &node.children {
        if c.is_transparent() {
            out.extend(block_tactics(c));
        } else if !c.is_atom() {
            out.push(c);
        }
    }
    out
}

/// The proof node of a `have`: the first `by` block or bare `sorry` that is
/// not part of its type.
fn have_proof_sorry(have: &AstNode) -> Option<&AstNode> {
    fn find(n: &AstNode) -> Option<&AstNode> {
        for c in &n.children {
            if c.is_have() || c.is("typeSpec") {
                continue;
            }
            if c.is_by() {
                let tactics = block_tactics(c);
                return match tactics.as_slice() {
                    [only] if only.is_sorry() => Some(only),
                    _ => None,
                };
            }
            if c.is_sorry() {
                return Some(c);
            }
            if let Some(s) = find(c) {
                return Some(s);
            }
        }
        None
    }
    find(have)
}

/// Pre-order collection of `have` sites and of every sorry node.
fn collect<'a>(node: &'a AstNode, haves: &mut Vec<HaveSite<'a>>, sorries: &mut Vec<&'a AstNode>) {
    if node.is_have() {
        haves.push(HaveSite {
            name: have_name(node),
            sorry: have_proof_sorry(node),
        });
    }
    if node.is_sorry() {
        sorries.push(node);
    }
    for c in &node.children {
        collect(c, haves, sorries);
    }
}

/// Names and sorry nodes of unproven `have`s in source order; errors on any
/// sorry that is not the whole proof of a named `have`.
fn unproven_haves(ast: &AstNode) -> Result<(Vec<&AstNode>, Vec<HaveSite<'_>>), AstError> {
    let mut haves = Vec::new();
    let mut sorries = Vec::new();
    collect(ast, &mut haves, &mut sorries);
    for s in &sorries {
        let owned = haves
            .iter()
            .any(|h| h.name.is_some() && h.sorry.is_some_and(|hs| std::ptr::eq(hs, *s)));
        if !owned {
            let p = s.pos.unwrap_or_default();
            return Err(AstError::AnonymousSorry {
                line: p.line,
                column: p.column,
            });
        }
    }
    Ok((sorries, haves))
}

/// Names of the `have`s whose proof is `sorry`, in source order. Duplicates
/// are listed as often as they occur.
pub fn get_unproven_subgoal_names(ast: &AstNode) -> Result<Vec<String>, AstError> {
    let (_, haves) = unproven_haves(ast)?;
    Ok(haves
        .into_iter()
        .filter(|h| h.sorry.is_some())
        .filter_map(|h| h.name)
        .collect())
}

/// One [`Subgoal`] per unproven `have`, paired with its sorries metadata by
/// position (or by rank when the tree carries no positions).
///
/// Hypotheses naming earlier `have`s are kept only when the goal mentions
/// them; all other context is kept in Lean's order.
pub fn extract_subgoals(ast: &AstNode, sorries: &[SorryInfo]) -> Result<Vec<Subgoal>, AstError> {
    let (sorry_nodes, haves) = unproven_haves(ast)?;
    let mut by_rank: Vec<&SorryInfo> = sorries.iter().collect();
    by_rank.sort_by_key(|s| s.position);
    let rank_usable = by_rank.len() == sorry_nodes.len();

    let mut earlier: Vec<String> = Vec::new();
    let mut out = Vec::new();
    for have in &haves {
        let (Some(name), Some(node)) = (&have.name, have.sorry) else {
            if let Some(n) = &have.name {
                earlier.push(n.clone());
            }
            continue;
        };
        let info = node
            .pos
            .and_then(|p| sorries.iter().find(|s| s.position == p))
            .or_else(|| {
                let rank = sorry_nodes.iter().position(|s| std::ptr::eq(*s, node))?;
                rank_usable.then(|| by_rank[rank])
            })
            .ok_or_else(|| AstError::MissingSorryInfo(name.clone()))?;
        let binders = info
            .binders
            .iter()
            .filter(|b| !earlier.contains(&b.name) || mentions_ident(&info.goal_type, &b.name))
            .cloned()
            .collect();
        let mut sg = Subgoal::new(name.clone(), info.goal_type.clone(), binders);
        sg.position = info.position;
        out.push(sg);
        earlier.push(name.clone());
    }
    out.sort_by_key(|s| s.position);
    Ok(out)
}

/// A self-contained Lean unit proving subgoal `name` by `sorry`: preamble,
/// then the theorem with enclosing and context hypotheses.
pub fn get_named_subgoal_code(
    subgoals: &[Subgoal],
    name: &str,
    preamble: &CanonicalPreamble,
    enclosing_binders: &[Binder],
) -> Result<String, AstError> {
    let body = named_subgoal_statement(subgoals, name, enclosing_binders)?;
    Ok(format!("{}\n\n{body}\n", preamble.render()))
}

/// The theorem text of [`get_named_subgoal_code`] without the preamble.
pub fn named_subgoal_statement(
    subgoals: &[Subgoal],
    name: &str,
    enclosing_binders: &[Binder],
) -> Result<String, AstError> {
    let matches: Vec<&Subgoal> = subgoals.iter().filter(|s| s.name == name).collect();
    let sg = match matches.as_slice() {
        [] => return Err(AstError::SubgoalNotFound(name.to_string())),
        [one] => *one,
        many => {
            return Err(AstError::DuplicateSubgoalName {
                name: name.to_string(),
                positions: many.iter().map(|s| s.position).collect(),
            })
        }
    };
    if !is_valid_ident(name) {
        return Err(AstError::InvalidName(name.to_string()));
    }
    let mut binders: Vec<Binder> = enclosing_binders.to_vec();
    for b in &sg.context_binders {
        if !binders.iter().any(|e| e.name == b.name) {
            binders.push(b.clone());
        }
    }
    Ok(render_theorem(name, &binders, &sg.goal_type))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn have(name: &str, sorry_at: Position) -> AstNode {
        AstNode::new("Lean.Parser.Tactic.tacticHave_")
            .child(AstNode::new("atom").with_value("have"))
            .child(
                AstNode::new("Lean.Parser.Term.haveDecl").child(
                    AstNode::new("Lean.Parser.Term.haveIdDecl")
                        .child(AstNode::new("Lean.Parser.Term.haveId").child(AstNode::new("ident").with_value(name)))
                        .child(AstNode::new("atom").with_value(":="))
                        .child(
                            AstNode::new("Lean.Parser.Term.byTactic")
                                .child(AstNode::new("atom").with_value("by"))
                                .child(
                                    AstNode::new("Lean.Parser.Tactic.tacticSeq")
                                        .child(AstNode::new("Lean.Parser.Tactic.tacticSorry").at(sorry_at)),
                                ),
                        ),
                ),
            )
    }

    fn module(children: Vec<AstNode>) -> AstNode {
        let mut m = AstNode::new("module");
        m.children = children;
        m
    }

    #[test]
    fn parse_minimal_and_malformed() {
        let (tree, sorries) = parse_ast(r#"{"kind":"module","children":[]}"#).unwrap();
        assert_eq!(tree.node_count(), 1);
        assert!(sorries.is_empty());
        assert!(matches!(parse_ast(r#"{"children":[]}"#), Err(AstError::MalformedAst(_))));
        assert!(matches!(parse_ast(r#"{"kind":""}"#), Err(AstError::MalformedAst(_))));
        assert!(matches!(parse_ast("[1,2]"), Err(AstError::MalformedAst(_))));
        assert!(matches!(
            parse_ast(r#"{"ast":{"kind":"m","children":{"x":1}}}"#),
            Err(AstError::MalformedAst(_))
        ));
    }

    #[test]
    fn parse_accepts_aliases_and_extra_fields() {
        let (tree, sorries) = parse_ast(
            r#"{"ast":{"kind":"m","args":[{"kind":"atom","val":"x","info":{}}]},"sorries":[{"goal":"⊢ True","pos":{"line":2,"column":4},"endPos":null}],"time":0.1,"error":null}"#,
        )
        .unwrap();
        assert_eq!(tree.children[0].value.as_deref(), Some("x"));
        assert_eq!(sorries[0].goal_type, "True");
        assert_eq!(sorries[0].position, Position::new(2, 4));
    }

    #[test]
    fn goal_parsing() {
        let (b, t) = parse_goal("n : ℕ\nh : 4 ≤ n\na b : ℝ\n⊢ n ^ 2 ≤\n    n !");
        assert_eq!(
            b,
            vec![
                Binder::new("n", "ℕ"),
                Binder::new("h", "4 ≤ n"),
                Binder::new("a", "ℝ"),
                Binder::new("b", "ℝ")
            ]
        );
        assert_eq!(t, "n ^ 2 ≤ n !");
        let (b, t) = parse_goal("x : ℕ := 3\n⊢ x = 3");
        assert_eq!(b, vec![Binder::new("x", "ℕ")]);
        assert_eq!(t, "x = 3");
        assert_eq!(parse_goal("True").1, "True");
    }

    #[test]
    fn binder_rendering() {
        assert_eq!(Binder::new("n", "ℕ").render(), "(n : ℕ)");
        assert_eq!(Binder::new("inst✝", "Fintype α").render(), "[Fintype α]");
        assert_eq!(Binder::new("n✝", "ℕ").render(), "(n_ : ℕ)");
    }

    #[test]
    fn extraction_pairs_by_position_and_filters_siblings() {
        let p1 = Position::new(3, 4);
        let p2 = Position::new(5, 4);
        let ast = module(vec![have("h1", p1), have("h2", p2)]);
        let sorries = vec![
            SorryInfo::from_goal("n : ℕ\nh1 : 0 < n\n⊢ n ≠ 0", p2),
            SorryInfo::from_goal("n : ℕ\n⊢ 0 < n", p1),
        ];
        let sgs = extract_subgoals(&ast, &sorries).unwrap();
        assert_eq!(sgs[0].name, "h1");
        assert_eq!(sgs[0].standalone_statement, "theorem h1 (n : ℕ) : 0 < n := by\n  sorry");
        // h1 is not mentioned by h2's goal, so it is dropped.
        assert_eq!(sgs[1].context_binders, vec![Binder::new("n", "ℕ")]);

        let sorries = vec![
            SorryInfo::from_goal("n : ℕ\n⊢ 0 < n", p1),
            SorryInfo::from_goal("n : ℕ\nh1 : 0 < n\n⊢ h1 = h1", p2),
        ];
        let sgs = extract_subgoals(&ast, &sorries).unwrap();
        assert_eq!(sgs[1].context_binders.len(), 2);
    }

    #[test]
    fn extraction_falls_back_to_rank_without_positions() {
        let mut a = have("a", Position::default());
        let mut b = have("b", Position::default());
        for n in [&mut a, &mut b] {
            clear_positions(n);
        }
        let ast = module(vec![a, b]);
        let sorries = vec![
            SorryInfo::from_goal("⊢ B", Position::new(9, 4)),
            SorryInfo::from_goal("⊢ A", Position::new(4, 4)),
        ];
        let sgs = extract_subgoals(&ast, &sorries).unwrap();
        assert_eq!(
            sgs.iter().map(|s| s.goal_type.as_str()).collect::<Vec<_>>(),
            ["A", "B"]
        );
        assert!(matches!(
            extract_subgoals(&ast, &sorries[..1]),
            Err(AstError::MissingSorryInfo(_))
        ));
    }

    fn clear_positions(n: &mut AstNode) {
        n.pos = None;
        for c in &mut n.children {
            clear_positions(c);
        }
    }

    #[test]
    fn anonymous_sorry_is_an_error() {
        let stray = AstNode::new("Lean.Parser.Tactic.tacticSorry").at(Position::new(7, 2));
        let ast = module(vec![have("a", Position::new(3, 4)), stray]);
        assert_eq!(
            get_unproven_subgoal_names(&ast),
            Err(AstError::AnonymousSorry { line: 7, column: 2 })
        );
    }

    #[test]
    fn fully_proven_and_empty_trees() {
        assert!(get_unproven_subgoal_names(&AstNode::new("module")).unwrap().is_empty());
        let proven = AstNode::new("Lean.Parser.Tactic.tacticHave_").child(
            AstNode::new("Lean.Parser.Term.byTactic")
                .child(AstNode::new("Lean.Parser.Tactic.tacticSeq").child(AstNode::new("Lean.Parser.Tactic.simp"))),
        );
        assert!(extract_subgoals(&module(vec![proven]), &[]).unwrap().is_empty());
    }

    #[test]
    fn duplicate_names_are_listed_then_rejected_at_codegen() {
        let ast = module(vec![have("a", Position::new(2, 4)), have("a", Position::new(4, 4))]);
        assert_eq!(get_unproven_subgoal_names(&ast).unwrap(), ["a", "a"]);
        let sorries = vec![
            SorryInfo::from_goal("⊢ True", Position::new(2, 4)),
            SorryInfo::from_goal("⊢ True", Position::new(4, 4)),
        ];
        let sgs = extract_subgoals(&ast, &sorries).unwrap();
        let err = get_named_subgoal_code(&sgs, "a", &CanonicalPreamble::default(), &[]).unwrap_err();
        assert_eq!(
            err,
            AstError::DuplicateSubgoalName {
                name: "a".into(),
                positions: vec![Position::new(2, 4), Position::new(4, 4)]
            }
        );
        assert!(err.to_string().contains("2:4, 4:4"));
    }

    #[test]
    fn named_subgoal_code() {
        let base = Subgoal::new("base_case", "4 ^ 2 ≤ 4 !", vec![]);
        let code = get_named_subgoal_code(std::slice::from_ref(&base), "base_case", &CanonicalPreamble::default(), &[]).unwrap();
        assert_eq!(
            code,
            "import Mathlib\nimport Aesop\n\nset_option maxHeartbeats 0\n\nopen BigOperators Real Nat Topology Rat\n\ntheorem base_case : 4 ^ 2 ≤ 4 ! := by\n  sorry\n"
        );
        let with_n = Subgoal::new("step", "n + 0 = n", vec![Binder::new("n", "ℕ")]);
        let stmt = named_subgoal_statement(&[with_n], "step", &[Binder::new("n", "ℕ"), Binder::new("P", "Prop")]).unwrap();
        assert_eq!(stmt, "theorem step (n : ℕ) (P : Prop) : n + 0 = n := by\n  sorry");
        assert_eq!(
            get_named_subgoal_code(&[base], "nope", &CanonicalPreamble::default(), &[]),
            Err(AstError::SubgoalNotFound("nope".into()))
        );
    }
}
