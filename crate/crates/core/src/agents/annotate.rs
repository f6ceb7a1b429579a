use crate::ast::Position;
use crate::services::{Diagnostic, Severity, VerificationResult};

/// Byte offset of a (1-based line, 0-based char column) position, clamped to
/// the end of its line. `None` when the line does not exist.
fn offset(code: &str, pos: Position) -> Option<usize> {
    let line_idx = (pos.line as usize).checked_sub(1)?;
    let mut start = 0;
    for (i, line) in code.split('\n').enumerate() {
        if i == line_idx {
            let col = line
                .char_indices()
                .nth(pos.column as usize)
                .map_or(line.len(), |(b, _)| b);
            return Some(start + col);
        }
        start += line.len() + 1;
    }
    None
}

fn line_end(code: &str, from: usize) -> usize {
    code[from..].find('\n').map_or(code.len(), |i| from + i)
}

fn describe(d: &Diagnostic) -> String {
    match d.span {
        Some(s) => format!("line {}, column {}: {}", s.start.line, s.start.column, d.message),
        None => d.message.clone(),
    }
}

/// The submitted code with each error span wrapped in `<error></error>`,
/// followed by the error messages. When the result has no error-severity
/// diagnostics, every diagnostic is shown instead.
pub fn build_error_annotation(code: &str, result: &VerificationResult) -> String {
    let errors: Vec<&Diagnostic> = result.errors().collect();
    let shown: Vec<&Diagnostic> = if errors.is_empty() {
        result.diagnostics.iter().collect()
    } else {
        errors
    };

    let mut marks: Vec<(usize, usize)> = Vec::new();
    let mut trailing: Vec<String> = Vec::new();
    let mut positioned: Vec<String> = Vec::new();
    for d in &shown {
        let start = d.span.and_then(|s| offset(code, s.start));
        match start {
            Some(start) => {
                let end = d
                    .span
                    .and_then(|s| s.end)
                    .and_then(|e| offset(code, e))
                    .filter(|&e| e > start)
                    .unwrap_or_else(|| line_end(code, start).max(start));
                marks.push((start, end));
                positioned.push(describe(d));
            }
            None => trailing.push(describe(d)),
        }
    }

    // Insert from the back so earlier offsets stay valid.
    let mut inserts: Vec<(usize, bool)> = marks
        .iter()
        .flat_map(|&(s, e)| [(s, true), (e, false)])
        .collect();
    inserts.sort_by(|a, b| b.0.cmp(&a.0).then(b.1.cmp(&a.1)));
    let mut annotated = code.to_string();
    for (at, open) in inserts {
        annotated.insert_str(at, if open { "<error>" } else { "</error>" });
    }

    let mut messages = positioned;
    messages.extend(trailing);
    if messages.is_empty() {
        messages.push("unknown error".into());
    }
    let label = |d: &&Diagnostic| d.severity == Severity::Error;
    let heading = if shown.iter().any(label) || shown.is_empty() {
        "Errors:"
    } else {
        "Messages:"
    };
    format!(
        "```lean4\n{}\n```\n\n{heading}\n{}",
        annotated.trim_end_matches('\n'),
        messages.iter().map(|m| format!("- {m}")).collect::<Vec<_>>().join("\n")
    )
}
