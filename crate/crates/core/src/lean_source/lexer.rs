//! A small Lean 4 tokenizer.
//!
//! This is not a parser. It only knows enough of the lexical grammar to skip
//! comments and string literals, keep bracket depth, and report token positions,
//! which is all the splicing and extraction code needs.

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub(crate) enum TokenKind {
    Ident,
    Number,
    Str,
    Char,
    Open,
    Close,
    Symbol,
}

#[derive(Debug, Clone, Copy)]
pub(crate) struct Token<'a> {
    pub kind: TokenKind,
    pub text: &'a str,
    /// Byte offset of the first byte.
    pub start: usize,
    /// Byte offset one past the last byte.
    pub end: usize,
    /// 0-based line.
    pub line: usize,
    /// 0-based column, counted in chars.
    pub col: usize,
}

impl Token<'_> {
    pub fn is_ident(&self, s: &str) -> bool {
        self.kind == TokenKind::Ident && self.text == s
    }

    #[cfg(test)]
    pub fn is_symbol(&self, s: &str) -> bool {
        self.kind == TokenKind::Symbol && self.text == s
    }
}

const MULTI_CHAR_SYMBOLS: &[&str] = &[":=", "<;>", "=>", "<-", "->", "..", "::"];

fn is_open(c: char) -> bool {
    matches!(c, '(' | '[' | '{' | '⟨' | '⦃')
}

fn is_close(c: char) -> bool {
    matches!(c, ')' | ']' | '}' | '⟩' | '⦄')
}

pub(crate) fn is_ident_start(c: char) -> bool {
    c == '_' || (c.is_alphabetic() && c != 'λ')
}

pub(crate) fn is_ident_continue(c: char) -> bool {
    c == '_' || c == '\'' || c == '!' || c == '?' || (c.is_alphanumeric() && c != 'λ')
}

struct Cursor<'a> {
    src: &'a str,
    pos: usize,
    line: usize,
    col: usize,
}

impl<'a> Cursor<'a> {
    fn peek(&self) -> Option<char> {
        self.src[self.pos..].chars().next()
    }

    fn peek_nth(&self, n: usize) -> Option<char> {
        self.src[self.pos..].chars().nth(n)
    }

    fn starts_with(&self, s: &str) -> bool {
        self.src[self.pos..].starts_with(s)
    }

    fn bump(&mut self) -> Option<char> {
        let c = self.peek()?;
        self.pos += c.len_utf8();
        if c == '\n' {
            self.line += 1;
            self.col = 0;
        } else {
            self.col += 1;
        }
        Some(c)
    }

    fn bump_n(&mut self, n: usize) {
        for _ in 0..n {
            self.bump();
        }
    }

    fn skip_line_comment(&mut self) {
        while let Some(c) = self.peek() {
            if c == '\n' {
                break;
            }
            self.bump();
        }
    }

    /// Block comments nest in Lean.
    fn skip_block_comment(&mut self) {
        self.bump_n(2);
        let mut depth = 1usize;
        while self.peek().is_some() {
            if self.starts_with("/-") {
                self.bump_n(2);
                depth += 1;
            } else if self.starts_with("-/") {
                self.bump_n(2);
                depth -= 1;
                if depth == 0 {
                    return;
                }
            } else {
                self.bump();
            }
        }
    }

    fn skip_string(&mut self) {
        self.bump();
        while let Some(c) = self.bump() {
            match c {
                '\\' => {
                    self.bump();
                }
                '"' => return,
                _ => {}
            }
        }
    }
}

/// Tokenize Lean source. Never fails: malformed input (an unterminated string
/// or comment) simply runs to the end of the text.
pub(crate) fn tokenize(src: &str) -> Vec<Token<'_>> {
    let mut cur = Cursor {
        src,
        pos: 0,
        line: 0,
        col: 0,
    };
    let mut out = Vec::new();
    while let Some(c) = cur.peek() {
        if c.is_whitespace() {
            cur.bump();
            continue;
        }
        if cur.starts_with("--") {
            cur.skip_line_comment();
            continue;
        }
        if cur.starts_with("/-") {
            cur.skip_block_comment();
            continue;
        }
        let (start, line, col) = (cur.pos, cur.line, cur.col);
        let kind = if c == '"' {
            cur.skip_string();
            TokenKind::Str
        } else if c == '\'' && is_char_literal(&cur) {
            cur.bump();
            if cur.peek() == Some('\\') {
                cur.bump();
            }
            cur.bump();
            cur.bump();
            TokenKind::Char
        } else if c == '«' {
            while let Some(c) = cur.bump() {
                if c == '»' {
                    break;
                }
            }
            TokenKind::Ident
        } else if is_ident_start(c) {
            lex_ident(&mut cur);
            TokenKind::Ident
        } else if c.is_ascii_digit() {
            while cur.peek().is_some_and(|c| c.is_ascii_alphanumeric() || c == '_') {
                cur.bump();
            }
            if cur.peek() == Some('.') && cur.peek_nth(1).is_some_and(|c| c.is_ascii_digit()) {
                cur.bump();
                while cur.peek().is_some_and(|c| c.is_ascii_digit()) {
                    cur.bump();
                }
            }
            TokenKind::Number
        } else if is_open(c) {
            cur.bump();
            TokenKind::Open
        } else if is_close(c) {
            cur.bump();
            TokenKind::Close
        } else {
            match MULTI_CHAR_SYMBOLS.iter().find(|s| cur.starts_with(s)) {
                Some(s) => cur.bump_n(s.chars().count()),
                None => {
                    cur.bump();
                }
            }
            TokenKind::Symbol
        };
        out.push(Token {
            kind,
            text: &src[start..cur.pos],
            start,
            end: cur.pos,
            line,
            col,
        });
    }
    out
}

fn is_char_literal(cur: &Cursor<'_>) -> bool {
    match (cur.peek_nth(1), cur.peek_nth(2), cur.peek_nth(3)) {
        (Some('\\'), Some(_), Some('\'')) => true,
        (Some(c), Some('\''), _) => c != '\'' && c != '\n',
        _ => false,
    }
}

fn lex_ident(cur: &mut Cursor<'_>) {
    cur.bump();
    loop {
        match cur.peek() {
            Some(c) if is_ident_continue(c) => {
                cur.bump();
            }
            Some('.') if cur.peek_nth(1).is_some_and(is_ident_start) => {
                cur.bump();
            }
            _ => break,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn texts(src: &str) -> Vec<&str> {
        tokenize(src).into_iter().map(|t| t.text).collect()
    }

    #[test]
    fn skips_comments_and_strings() {
        let src = "-- sorry\n/- nested /- sorry -/ still -/ have h : \"sorry\" := by sorry";
        let toks = tokenize(src);
        let sorries = toks.iter().filter(|t| t.is_ident("sorry")).count();
        assert_eq!(sorries, 1);
        assert!(toks.iter().any(|t| t.kind == TokenKind::Str));
    }

    #[test]
    fn dotted_and_primed_identifiers() {
        assert_eq!(
            texts("Nat.succ_le h' n ! x₁"),
            vec!["Nat.succ_le", "h'", "n", "!", "x₁"]
        );
    }

    #[test]
    fn multi_char_symbols_and_positions() {
        let toks = tokenize("theorem t :\n  ∀ x, x = x := by rfl");
        let assign = toks.iter().find(|t| t.is_symbol(":=")).unwrap();
        assert_eq!((assign.line, assign.col), (1, 13));
        assert_eq!(toks.last().unwrap().text, "rfl");
    }

    #[test]
    fn char_literals_and_unterminated_input() {
        assert_eq!(texts("'a' 'b"), vec!["'a'", "'", "b"]);
        assert_eq!(tokenize("\"never closed").len(), 1);
        assert!(tokenize("/- never closed").is_empty());
    }
}
