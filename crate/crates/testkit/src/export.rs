//! A stand-in for the server's AST export. It reads `have` statements off
//! the text line by line and reports each `sorry` with the goal Lean would
//! show: the theorem's explicit binders, earlier `have`s, and the `have`'s
//! own type.

use recprover::ast::{AstNode, Position};
use serde_json::{json, Value};

struct Have {
    name: String,
    ty: String,
    sorry: Option<Position>,
    term_mode: bool,
}

fn collapse(s: &str) -> String {
    s.split_whitespace().collect::<Vec<_>>().join(" ")
}

fn char_col(line: &str, byte: usize) -> u32 {
    line[..byte].chars().count() as u32
}

fn strip_comment(line: &str) -> &str {
    line.find("--").map_or(line, |i| &line[..i])
}

/// Explicit `(a b : T)` groups of a declaration header, before its type.
fn header_binders(header: &str) -> Vec<(String, String)> {
    let mut out = Vec::new();
    let mut depth = 0usize;
    let mut group_start = None;
    for (i, ch) in header.char_indices() {
        match ch {
            '(' | '[' | '{' => {
                if depth == 0 && ch == '(' {
                    group_start = Some(i + 1);
                }
                depth += 1;
            }
            ')' | ']' | '}' => {
                depth = depth.saturating_sub(1);
                if depth == 0 {
                    if let Some(s) = group_start.take() {
                        if let Some((names, ty)) = header[s..i].split_once(" : ") {
                            for n in names.split_whitespace() {
                                out.push((n.to_string(), collapse(ty)));
                            }
                        }
                    }
                }
            }
            ':' if depth == 0 => break,
            _ => {}
        }
    }
    out
}

fn find_word(line: &str, word: &str) -> Option<usize> {
    let mut from = 0;
    while let Some(i) = line[from..].find(word).map(|i| i + from) {
        let before = line[..i].chars().next_back();
        let after = line[i + word.len()..].chars().next();
        let ident = |c: Option<char>| c.is_some_and(|c| c.is_alphanumeric() || c == '_' || c == '.' || c == '\'');
        if !ident(before) && !ident(after) {
            return Some(i);
        }
        from = i + word.len();
    }
    None
}

/// `{"ast": …, "sorries": […]}` for `code`, as the AST endpoint returns it.
pub fn fake_ast_export(code: &str) -> Value {
    let lines: Vec<&str> = code.split('\n').collect();
    let decl = lines
        .iter()
        .position(|l| l.starts_with("theorem ") || l.starts_with("lemma "))
        .unwrap_or(0);
    let mut header = String::new();
    for l in &lines[decl..] {
        let l = strip_comment(l);
        match l.find(":=") {
            Some(i) => {
                header.push_str(&l[..i]);
                break;
            }
            None => {
                header.push_str(l);
                header.push(' ');
            }
        }
    }
    let after_name = header.split_whitespace().skip(2).collect::<Vec<_>>().join(" ");
    let binders = header_binders(&after_name);

    let mut haves: Vec<Have> = Vec::new();
    let mut owned: Vec<Position> = Vec::new();
    let mut i = decl + 1;
    while i < lines.len() {
        let line = strip_comment(lines[i]);
        let Some(at) = find_word(line, "have") else {
            i += 1;
            continue;
        };
        let rest = line[at + 4..].trim_start();
        let name: String = rest
            .chars()
            .take_while(|c| !c.is_whitespace() && *c != ':')
            .collect();
        // Gather the statement up to `:=`.
        let mut text = rest[name.len()..].to_string();
        let mut end = i;
        while !text.contains(":=") && end + 1 < lines.len() {
            end += 1;
            text.push(' ');
            text.push_str(strip_comment(lines[end]));
        }
        let (ty, proof) = text.split_once(":=").unwrap_or((&text, ""));
        let ty = collapse(ty.trim().trim_start_matches(':'));
        let proof = proof.trim();
        let tail_line = strip_comment(lines[end]);
        let mut sorry = None;
        let mut term_mode = false;
        if proof == "by" {
            if let Some(j) = (end + 1..lines.len()).find(|&j| !strip_comment(lines[j]).trim().is_empty()) {
                if strip_comment(lines[j]).trim() == "sorry" {
                    let col = lines[j].find("sorry").expect("checked");
                    sorry = Some(Position::new(j as u32 + 1, char_col(lines[j], col)));
                }
            }
        } else if proof == "by sorry" || proof == "sorry" {
            term_mode = proof == "sorry";
            let col = tail_line.rfind("sorry").expect("checked");
            sorry = Some(Position::new(end as u32 + 1, char_col(tail_line, col)));
        }
        if let Some(p) = sorry {
            owned.push(p);
        }
        haves.push(Have {
            name,
            ty,
            sorry,
            term_mode,
        });
        i = end + 1;
    }

    let mut anonymous = Vec::new();
    for (j, l) in lines.iter().enumerate().skip(decl) {
        let body = strip_comment(l);
        let mut from = 0;
        while let Some(k) = find_word(&body[from..], "sorry").map(|k| k + from) {
            let p = Position::new(j as u32 + 1, char_col(body, k));
            if !owned.contains(&p) {
                anonymous.push(p);
            }
            from = k + 5;
        }
    }

    let mut tactics = Vec::new();
    let mut sorries = Vec::new();
    let mut context: Vec<(String, String)> = binders.clone();
    for h in &haves {
        let mut node = AstNode::new("Lean.Parser.Tactic.tacticHave_")
            .child(AstNode::new("atom").with_value("have"))
            .child(AstNode::new("Lean.Parser.Term.haveId").child(AstNode::new("ident").with_value(h.name.clone())))
            .child(AstNode::new("atom").with_value(":="));
        match (h.sorry, h.term_mode) {
            (Some(p), true) => node = node.child(AstNode::new("Lean.Parser.Tactic.tacticSorry").at(p)),
            (Some(p), false) => {
                node = node.child(
                    AstNode::new("Lean.Parser.Term.byTactic")
                        .child(AstNode::new("atom").with_value("by"))
                        .child(
                            AstNode::new("Lean.Parser.Tactic.tacticSeq")
                                .child(AstNode::new("Lean.Parser.Tactic.tacticSorry").at(p)),
                        ),
                )
            }
            (None, _) => {
                node = node.child(
                    AstNode::new("Lean.Parser.Term.byTactic")
                        .child(AstNode::new("Lean.Parser.Tactic.tacticSeq").child(AstNode::new("Lean.Parser.Tactic.other"))),
                )
            }
        }
        if let Some(p) = h.sorry {
            let mut goal: Vec<String> = context.iter().map(|(n, t)| format!("{n} : {t}")).collect();
            goal.push(format!("⊢ {}", h.ty));
            sorries.push(json!({"pos": p, "endPos": Position::new(p.line, p.column + 5), "goal": goal.join("\n")}));
        }
        tactics.push(node);
        context.push((h.name.clone(), h.ty.clone()));
    }
    for p in anonymous {
        tactics.push(AstNode::new("Lean.Parser.Tactic.tacticSorry").at(p));
        sorries.push(json!({"pos": p, "endPos": Position::new(p.line, p.column + 5), "goal": "⊢ False"}));
    }
    let mut seq = AstNode::new("Lean.Parser.Tactic.tacticSeq1Indented");
    seq.children = tactics;
    let ast = AstNode::new("module").child(
        AstNode::new("Lean.Parser.Command.declaration")
            .child(AstNode::new("Lean.Parser.Command.theorem").child(
                AstNode::new("Lean.Parser.Term.byTactic")
                    .child(AstNode::new("atom").with_value("by"))
                    .child(seq),
            )),
    );
    sorries.sort_by_key(|s| (s["pos"]["line"].as_u64(), s["pos"]["column"].as_u64()));
    json!({"ast": ast, "sorries": sorries})
}
