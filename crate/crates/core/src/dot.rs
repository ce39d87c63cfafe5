//! The digraph interchange format: a DOT subset where every statement is a
//! quoted edge carrying `arrowhead = vee` (positive) or `arrowhead = tee`
//! (negative).
//!
//! ```text
//! digraph    := "digraph" [identifier] "{" edge* "}"
//! edge       := qstring "->" qstring "[" "arrowhead" "=" ("vee"|"tee") "]" [";"]
//! qstring    := '"' (any char except unescaped '"')* '"'
//! ```
//!
//! Strict parsing rejects anything outside the grammar. Lenient parsing is
//! meant for model output: it skips statements it cannot read, keeps the
//! first link of a duplicated pair and reports everything as warnings.

use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec::Vec;
use core::fmt;

use serde::Serialize;
use thiserror::Error;

use crate::diagram::{CausalLoopDiagram, Link, Polarity};
use crate::loops::enumerate_loops;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Severity {
    Error,
    Warning,
}

/// A located parser message. Lines and columns are 1-based; columns count
/// characters.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct ParseDiagnostic {
    pub line: usize,
    pub column: usize,
    pub message: String,
    pub severity: Severity,
}

impl fmt::Display for ParseDiagnostic {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let level = match self.severity {
            Severity::Error => "error",
            Severity::Warning => "warning",
        };
        write!(f, "{}:{}: {level}: {}", self.line, self.column, self.message)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ParseMode {
    Strict,
    Lenient,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum DotError {
    #[error("syntax error at {}:{}: {}", .0.line, .0.column, .0.message)]
    Syntax(ParseDiagnostic),
    #[error("no digraph found in completion")]
    NoDigraphFound,
}

/// Result of a successful parse.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ParsedDigraph {
    pub diagram: CausalLoopDiagram,
    pub diagnostics: Vec<ParseDiagnostic>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
enum Tok {
    Word(String),
    Quoted(String),
    Arrow,
    LBrace,
    RBrace,
    LBracket,
    RBracket,
    Equals,
    Semi,
    Comma,
    Other(char),
}

impl Tok {
    fn describe(&self) -> String {
        match self {
            Tok::Word(w) => format!("'{w}'"),
            Tok::Quoted(q) => format!("\"{q}\""),
            Tok::Arrow => "'->'".to_string(),
            Tok::LBrace => "'{'".to_string(),
            Tok::RBrace => "'}'".to_string(),
            Tok::LBracket => "'['".to_string(),
            Tok::RBracket => "']'".to_string(),
            Tok::Equals => "'='".to_string(),
            Tok::Semi => "';'".to_string(),
            Tok::Comma => "','".to_string(),
            Tok::Other(c) => format!("'{c}'"),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
struct Pos {
    line: usize,
    column: usize,
}

struct Lexed {
    tokens: Vec<(Tok, Pos)>,
    /// Unterminated string start, if the input ended inside quotes.
    unterminated: Option<Pos>,
    end: Pos,
}

fn is_word_char(c: char) -> bool {
    c.is_alphanumeric() || c == '_' || c == '.'
}

fn lex(text: &str) -> Lexed {
    let mut tokens = Vec::new();
    let mut chars = text.chars().peekable();
    let mut pos = Pos { line: 1, column: 1 };
    let advance = |pos: &mut Pos, c: char| {
        if c == '\n' {
            pos.line += 1;
            pos.column = 1;
        } else {
            pos.column += 1;
        }
    };
    while let Some(&c) = chars.peek() {
        let start = pos;
        if c.is_whitespace() {
            chars.next();
            advance(&mut pos, c);
            continue;
        }
        if c == '"' {
            chars.next();
            advance(&mut pos, c);
            let mut value = String::new();
            let mut closed = false;
            while let Some(c) = chars.next() {
                advance(&mut pos, c);
                match c {
                    '"' => {
                        closed = true;
                        break;
                    }
                    '\\' if chars.peek() == Some(&'"') => {
                        chars.next();
                        advance(&mut pos, '"');
                        value.push('"');
                    }
                    _ => value.push(c),
                }
            }
            if !closed {
                return Lexed {
                    tokens,
                    unterminated: Some(start),
                    end: pos,
                };
            }
            tokens.push((Tok::Quoted(value), start));
            continue;
        }
        if is_word_char(c) {
            let mut word = String::new();
            while let Some(&c) = chars.peek() {
                if !is_word_char(c) {
                    break;
                }
                word.push(c);
                chars.next();
                advance(&mut pos, c);
            }
            tokens.push((Tok::Word(word), start));
            continue;
        }
        chars.next();
        advance(&mut pos, c);
        let tok = match c {
            '-' if chars.peek() == Some(&'>') => {
                chars.next();
                advance(&mut pos, '>');
                Tok::Arrow
            }
            '{' => Tok::LBrace,
            '}' => Tok::RBrace,
            '[' => Tok::LBracket,
            ']' => Tok::RBracket,
            '=' => Tok::Equals,
            ';' => Tok::Semi,
            ',' => Tok::Comma,
            other => Tok::Other(other),
        };
        tokens.push((tok, start));
    }
    Lexed {
        tokens,
        unterminated: None,
        end: pos,
    }
}

struct Parser {
    tokens: Vec<(Tok, Pos)>,
    at: usize,
    end: Pos,
    mode: ParseMode,
    diagnostics: Vec<ParseDiagnostic>,
}

type Step<T> = Result<T, ParseDiagnostic>;

impl Parser {
    fn peek(&self) -> Option<&Tok> {
        self.tokens.get(self.at).map(|(t, _)| t)
    }

    fn peek_at(&self, offset: usize) -> Option<&Tok> {
        self.tokens.get(self.at + offset).map(|(t, _)| t)
    }

    fn pos(&self) -> Pos {
        self.tokens.get(self.at).map(|(_, p)| *p).unwrap_or(self.end)
    }

    fn bump(&mut self) -> Option<Tok> {
        let tok = self.tokens.get(self.at).map(|(t, _)| t.clone());
        if tok.is_some() {
            self.at += 1;
        }
        tok
    }

    fn diag_at(&self, pos: Pos, message: String) -> ParseDiagnostic {
        ParseDiagnostic {
            line: pos.line,
            column: pos.column,
            message,
            severity: match self.mode {
                ParseMode::Strict => Severity::Error,
                ParseMode::Lenient => Severity::Warning,
            },
        }
    }

    fn unexpected(&self, wanted: &str) -> ParseDiagnostic {
        let found = match self.peek() {
            Some(t) => t.describe(),
            None => "end of input".to_string(),
        };
        self.diag_at(self.pos(), format!("expected {wanted}, found {found}"))
    }

    /// Records a problem: an error in strict mode, a warning in lenient mode.
    fn complain(&mut self, diag: ParseDiagnostic) -> Step<()> {
        match self.mode {
            ParseMode::Strict => Err(diag),
            ParseMode::Lenient => {
                self.diagnostics.push(diag);
                Ok(())
            }
        }
    }

    fn is_keyword(&self, keyword: &str) -> bool {
        matches!(self.peek(), Some(Tok::Word(w)) if w.eq_ignore_ascii_case(keyword))
    }

    /// Consumes the header. Returns whether an opening brace was seen.
    fn header(&mut self) -> Step<bool> {
        if !self.is_keyword("digraph") {
            let diag = self.unexpected("'digraph'");
            self.complain(diag)?;
            match self.tokens.iter().position(
                |(t, _)| matches!(t, Tok::Word(w) if w.eq_ignore_ascii_case("digraph")),
            ) {
                Some(i) => self.at = i,
                None => return Ok(false),
            }
        }
        self.bump();
        if matches!(self.peek(), Some(Tok::Word(_) | Tok::Quoted(_))) {
            self.bump();
        }
        if self.peek() == Some(&Tok::LBrace) {
            self.bump();
            Ok(true)
        } else {
            let diag = self.unexpected("'{'");
            self.complain(diag)?;
            Ok(false)
        }
    }

    fn endpoint(&mut self) -> Step<(String, Pos)> {
        let pos = self.pos();
        match self.peek().cloned() {
            Some(Tok::Quoted(name)) => {
                self.bump();
                Ok((name, pos))
            }
            Some(Tok::Word(name)) if self.mode == ParseMode::Lenient => {
                self.bump();
                self.diagnostics.push(
                    self.diag_at(pos, format!("unquoted variable name '{name}' accepted")),
                );
                Ok((name, pos))
            }
            _ => Err(self.unexpected("a quoted variable name")),
        }
    }

    fn attr_value(&mut self) -> Step<String> {
        match self.peek().cloned() {
            Some(Tok::Word(v)) => {
                self.bump();
                Ok(v)
            }
            Some(Tok::Quoted(v)) if self.mode == ParseMode::Lenient => {
                self.bump();
                Ok(v)
            }
            _ => Err(self.unexpected("an attribute value")),
        }
    }

    /// Parses `[ key = value, ... ]` and resolves the polarity.
    fn attributes(&mut self) -> Step<Polarity> {
        let open = self.pos();
        self.bump();
        let mut polarity = None;
        loop {
            match self.peek() {
                Some(Tok::RBracket) => {
                    self.bump();
                    break;
                }
                Some(Tok::Comma | Tok::Semi) if self.mode == ParseMode::Lenient => {
                    self.bump();
                    continue;
                }
                Some(Tok::Word(_)) => {}
                _ => return Err(self.unexpected("'arrowhead' or ']'")),
            }
            let key_pos = self.pos();
            let Some(Tok::Word(key)) = self.bump() else {
                unreachable!()
            };
            if self.peek() != Some(&Tok::Equals) {
                return Err(self.unexpected("'='"));
            }
            self.bump();
            let value_pos = self.pos();
            let value = self.attr_value()?;
            if key != "arrowhead" {
                let diag = self.diag_at(key_pos, format!("unsupported attribute '{key}'"));
                self.complain(diag)?;
                continue;
            }
            if polarity.is_some() {
                let diag = self.diag_at(key_pos, "repeated arrowhead attribute".to_string());
                self.complain(diag)?;
                continue;
            }
            polarity = Some(match Polarity::from_arrowhead(&value) {
                Some(p) => p,
                None => {
                    let diag = self.diag_at(
                        value_pos,
                        format!("unknown arrowhead '{value}', treated as vee"),
                    );
                    self.complain(diag)?;
                    Polarity::Positive
                }
            });
        }
        match polarity {
            Some(p) => Ok(p),
            None => {
                let diag = self.diag_at(open, "missing arrowhead, treated as vee".to_string());
                self.complain(diag)?;
                Ok(Polarity::Positive)
            }
        }
    }

    fn edge(&mut self) -> Step<(Link, Pos)> {
        let (source, start) = self.endpoint()?;
        if self.peek() != Some(&Tok::Arrow) {
            return Err(self.unexpected("'->'"));
        }
        self.bump();
        let (target, target_pos) = self.endpoint()?;
        let polarity = if self.peek() == Some(&Tok::LBracket) {
            self.attributes()?
        } else {
            let diag = self.diag_at(self.pos(), "missing attribute list, treated as vee".to_string());
            self.complain(diag)?;
            Polarity::Positive
        };
        if self.peek() == Some(&Tok::Semi) {
            self.bump();
        }
        let empty_at = if source.trim().is_empty() {
            Some(start)
        } else if target.trim().is_empty() {
            Some(target_pos)
        } else {
            None
        };
        if let Some(pos) = empty_at {
            return Err(self.diag_at(pos, "empty variable name".to_string()));
        }
        let link = Link::new(&source, &target, polarity).expect("names checked non-empty");
        Ok((link, start))
    }

    fn starts_edge(&self) -> bool {
        matches!(self.peek(), Some(Tok::Quoted(_) | Tok::Word(_)))
            && self.peek_at(1) == Some(&Tok::Arrow)
    }

    /// Skips to the next plausible statement start after a bad statement.
    fn recover(&mut self, from: usize) {
        if self.at == from {
            self.at += 1;
        }
        while let Some(tok) = self.peek() {
            match tok {
                Tok::Semi => {
                    self.bump();
                    return;
                }
                Tok::RBrace => return,
                Tok::LBracket => {
                    self.bump();
                    // an unclosed list must not swallow the next edge
                    while !self.starts_edge() {
                        match self.bump() {
                            Some(Tok::RBracket) | None => break,
                            _ => {}
                        }
                    }
                }
                _ if self.starts_edge() => return,
                _ => {
                    self.bump();
                }
            }
        }
    }

    fn body(&mut self, braced: bool) -> Step<Vec<(Link, Pos)>> {
        let mut links = Vec::new();
        loop {
            match self.peek() {
                None => {
                    if braced {
                        let diag = self.unexpected("'}'");
                        self.complain(diag)?;
                    }
                    return Ok(links);
                }
                Some(Tok::RBrace) => {
                    let close = self.pos();
                    self.bump();
                    if !braced {
                        let diag = self.diag_at(close, "unmatched '}'".to_string());
                        self.complain(diag)?;
                        continue;
                    }
                    if self.peek().is_some() {
                        let diag = self.unexpected("end of input after '}'");
                        self.complain(diag)?;
                    }
                    return Ok(links);
                }
                Some(Tok::Semi) if self.mode == ParseMode::Lenient => {
                    self.bump();
                }
                _ => {
                    let from = self.at;
                    match self.edge() {
                        Ok(edge) => links.push(edge),
                        Err(diag) => {
                            self.complain(diag)?;
                            self.diagnostics.last_mut().unwrap().message.push_str("; statement skipped");
                            self.recover(from);
                        }
                    }
                }
            }
        }
    }
}

/// Parses digraph text into a diagram.
///
/// Strict mode returns the first problem as [`DotError::Syntax`]. Lenient
/// mode never fails; problems come back as warnings next to whatever links
/// could be read.
pub fn parse_digraph(text: &str, mode: ParseMode) -> Result<ParsedDigraph, DotError> {
    let lexed = lex(text);
    let mut parser = Parser {
        tokens: lexed.tokens,
        at: 0,
        end: lexed.end,
        mode,
        diagnostics: Vec::new(),
    };
    let edges = parser
        .header()
        .and_then(|braced| parser.body(braced))
        .map_err(DotError::Syntax)?;
    if let Some(pos) = lexed.unterminated {
        let diag = parser.diag_at(pos, "unterminated quoted string".to_string());
        parser.complain(diag).map_err(DotError::Syntax)?;
    }

    let mut positions = Vec::with_capacity(edges.len());
    let links: Vec<Link> = edges
        .into_iter()
        .map(|(link, pos)| {
            positions.push(pos);
            link
        })
        .collect();
    let mut seen = alloc::collections::BTreeSet::new();
    for (link, pos) in links.iter().zip(&positions) {
        let (s, t) = link.key();
        if !seen.insert((String::from(s), String::from(t))) {
            let diag = parser.diag_at(
                *pos,
                format!(
                    "duplicate link \"{}\" -> \"{}\"; first occurrence kept",
                    link.source, link.target
                ),
            );
            parser.complain(diag).map_err(DotError::Syntax)?;
        }
    }
    let (diagram, _) = CausalLoopDiagram::first_wins(links);
    Ok(ParsedDigraph {
        diagram,
        diagnostics: parser.diagnostics,
    })
}

fn quote(name: &str) -> String {
    let mut out = String::with_capacity(name.len() + 2);
    out.push('"');
    for c in name.chars() {
        if c == '"' {
            out.push('\\');
        }
        out.push(c);
    }
    out.push('"');
    out
}

/// Canonical digraph text: one `"SRC" -> "DST" [arrowhead = vee|tee]` line
/// per link in diagram order, raw names, no trailing newline.
pub fn emit_digraph(diagram: &CausalLoopDiagram) -> String {
    let mut out = String::from("digraph {\n");
    for link in diagram.links() {
        out.push_str(&quote(link.source.raw()));
        out.push_str(" -> ");
        out.push_str(&quote(link.target.raw()));
        out.push_str(" [arrowhead = ");
        out.push_str(link.polarity.arrowhead());
        out.push_str("]\n");
    }
    out.push('}');
    out
}

/// Finds the first `digraph [id] { ... }` block in free text and returns it
/// from the keyword through its matching closing brace. A block truncated
/// before its closing brace is returned through the end of the text.
pub fn extract_digraph_block(completion: &str) -> Result<&str, DotError> {
    let bytes = completion.as_bytes();
    let keyword = b"digraph";
    let mut search = 0;
    while let Some(found) = find_ascii_ci(&bytes[search..], keyword) {
        let start = search + found;
        search = start + keyword.len();
        let boundary_before = start == 0 || !is_word_byte(bytes[start - 1]);
        let boundary_after = bytes.get(search).is_none_or(|&b| !is_word_byte(b));
        if !boundary_before || !boundary_after {
            continue;
        }
        let Some(open) = opening_brace(completion, search) else {
            continue;
        };
        return Ok(match closing_brace(completion, open) {
            Some(close) => &completion[start..=close],
            None => completion[start..].trim_end(),
        });
    }
    Err(DotError::NoDigraphFound)
}

fn is_word_byte(b: u8) -> bool {
    b.is_ascii_alphanumeric() || b == b'_'
}

fn find_ascii_ci(haystack: &[u8], needle: &[u8]) -> Option<usize> {
    haystack
        .windows(needle.len())
        .position(|w| w.eq_ignore_ascii_case(needle))
}

/// Index of `{` if only whitespace and an optional graph id follow the keyword.
fn opening_brace(text: &str, from: usize) -> Option<usize> {
    let rest = &text[from..];
    let trimmed = rest.trim_start();
    let mut offset = from + (rest.len() - trimmed.len());
    let after_id = if let Some(quoted) = trimmed.strip_prefix('"') {
        let close = quoted.find('"')?;
        &quoted[close + 1..]
    } else {
        trimmed.trim_start_matches(|c: char| c.is_alphanumeric() || c == '_')
    };
    offset += trimmed.len() - after_id.len();
    let after_ws = after_id.trim_start();
    offset += after_id.len() - after_ws.len();
    after_ws.starts_with('{').then_some(offset)
}

fn closing_brace(text: &str, open: usize) -> Option<usize> {
    let mut depth = 0usize;
    let mut in_string = false;
    let mut escaped = false;
    for (i, c) in text[open..].char_indices() {
        if in_string {
            match c {
                _ if escaped => escaped = false,
                '\\' => escaped = true,
                '"' => in_string = false,
                _ => {}
            }
            continue;
        }
        match c {
            '"' => in_string = true,
            '{' => depth += 1,
            '}' => {
                depth -= 1;
                if depth == 0 {
                    return Some(open + i);
                }
            }
            _ => {}
        }
    }
    None
}

/// DOT for an external renderer. With `annotate_loops`, every feedback loop
/// gets a plaintext label node (`R1`, `B1`, ...) preceded by a comment
/// listing its members.
pub fn emit_render_dot(diagram: &CausalLoopDiagram, annotate_loops: bool) -> String {
    let mut out = String::from("digraph {\n");
    for link in diagram.links() {
        out.push_str(&format!(
            "  {} -> {} [arrowhead={}];\n",
            quote(link.source.raw()),
            quote(link.target.raw()),
            link.polarity.arrowhead()
        ));
    }
    if annotate_loops {
        match enumerate_loops(diagram) {
            Ok(loops) => {
                let (mut reinforcing, mut balancing) = (0, 0);
                for feedback in &loops {
                    let counter = match feedback.kind() {
                        crate::loops::LoopKind::Reinforcing => &mut reinforcing,
                        crate::loops::LoopKind::Balancing => &mut balancing,
                    };
                    *counter += 1;
                    let label = format!("{}{}", feedback.kind().letter(), counter);
                    let members: Vec<&str> = feedback.members().map(|m| m.raw()).collect();
                    out.push_str(&format!("  // {label}: {}\n", members.join(" -> ")));
                    out.push_str(&format!(
                        "  {} [label={}, shape=plaintext, loop_members={}];\n",
                        quote(&format!("loop {label}")),
                        quote(&label),
                        quote(&members.join(", "))
                    ));
                }
            }
            Err(err) => out.push_str(&format!("  // loops not annotated: {err}\n")),
        }
    }
    out.push('}');
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;

    const TABLE_1: &str = r#"digraph { "births" -> "rabbit population" [arrowhead = vee] "rabbit population" -> "births"[arrowhead = vee] "birth fraction" -> "births"[arrowhead = vee] }"#;

    fn strict(text: &str) -> ParsedDigraph {
        parse_digraph(text, ParseMode::Strict).unwrap()
    }

    fn lenient(text: &str) -> ParsedDigraph {
        parse_digraph(text, ParseMode::Lenient).unwrap()
    }

    #[test]
    fn parses_rabbit_digraph() {
        let parsed = strict(TABLE_1);
        assert!(parsed.diagnostics.is_empty());
        assert_eq!(parsed.diagram.variables().len(), 3);
        assert_eq!(parsed.diagram.links().len(), 3);
        assert!(parsed
            .diagram
            .links()
            .iter()
            .all(|l| l.polarity == Polarity::Positive));
    }

    #[test]
    fn empty_graph_is_valid() {
        assert!(strict("digraph { }").diagram.is_empty());
        assert!(strict("digraph G {}").diagram.is_empty());
    }

    #[test]
    fn duplicate_pair_strict_vs_lenient() {
        let text = r#"digraph { "a" -> "b" [arrowhead = vee] "a" -> "b" [arrowhead = tee] }"#;
        let err = parse_digraph(text, ParseMode::Strict).unwrap_err();
        let DotError::Syntax(diag) = err else {
            panic!("expected syntax error")
        };
        assert_eq!((diag.line, diag.column), (1, 40));
        let parsed = lenient(text);
        assert_eq!(parsed.diagram.links().len(), 1);
        assert_eq!(parsed.diagram.links()[0].polarity, Polarity::Positive);
        assert_eq!(parsed.diagnostics.len(), 1);
        assert_eq!(parsed.diagnostics[0].severity, Severity::Warning);
    }

    #[test]
    fn attribute_spacing_is_insignificant() {
        let forms = ["[arrowhead=vee]", "[arrowhead = vee]", "[ arrowhead =vee ]", "[\n arrowhead\n=\nvee\n]"];
        let expected = strict(r#"digraph { "a" -> "b" [arrowhead = vee] }"#);
        for form in forms {
            let text = format!("digraph {{ \"a\" -> \"b\" {form} }}");
            assert_eq!(strict(&text), expected, "{form}");
        }
    }

    #[test]
    fn strict_errors_carry_position() {
        let text = "digraph {\n  \"a\" -> \"b\" [arrowhead = vee]\n  \"b\" => \"c\"\n}";
        let DotError::Syntax(diag) = parse_digraph(text, ParseMode::Strict).unwrap_err() else {
            panic!()
        };
        assert_eq!((diag.line, diag.column), (3, 7));
        assert_eq!(diag.severity, Severity::Error);
        assert!(!diag.message.is_empty());
    }

    #[test]
    fn strict_rejects_outside_grammar() {
        for bad in [
            "graph { }",
            "digraph {",
            "digraph { } trailing",
            r#"digraph { "a" -> "b" }"#,
            r#"digraph { "a" -> "b" [arrowhead = normal] }"#,
            r#"digraph { "a" -> "b" [arrowhead = vee, color = red] }"#,
            r#"digraph { a -> "b" [arrowhead = vee] }"#,
            r#"digraph { "" -> "b" [arrowhead = vee] }"#,
            r#"digraph { node [shape = box] }"#,
            r#"digraph { "a -> "b" [arrowhead = vee] }"#,
        ] {
            assert!(parse_digraph(bad, ParseMode::Strict).is_err(), "{bad}");
        }
    }

    #[test]
    fn lenient_recovers_from_near_misses() {
        let text = r#"digraph G {
            rankdir = LR;
            node [shape = box];
            "a" -> "b" [arrowhead = normal];
            "b" -> "c" [arrowhead = tee, color = red];
            c -> d [arrowhead = vee]
            "d" -> ;
            "d" -> "a"
        }"#;
        let parsed = lenient(text);
        let links: Vec<(&str, &str, Polarity)> = parsed
            .diagram
            .links()
            .iter()
            .map(|l| (l.source.raw(), l.target.raw(), l.polarity))
            .collect();
        assert_eq!(
            links,
            vec![
                ("a", "b", Polarity::Positive),
                ("b", "c", Polarity::Negative),
                ("c", "d", Polarity::Positive),
                ("d", "a", Polarity::Positive),
            ]
        );
        assert!(parsed
            .diagnostics
            .iter()
            .all(|d| d.severity == Severity::Warning));
        assert!(parsed.diagnostics.len() >= 6);
    }

    #[test]
    fn lenient_tolerates_missing_header_and_brace() {
        let parsed = lenient(r#""a" -> "b" [arrowhead = tee]"#);
        assert_eq!(parsed.diagram.links().len(), 1);
        let parsed = lenient(r#"digraph { "a" -> "b" [arrowhead = tee]"#);
        assert_eq!(parsed.diagram.links().len(), 1);
        assert_eq!(parsed.diagnostics.len(), 1);
        let parsed = lenient("digraph { \"a\" -> \"b\" [arrowhead = tee] \"c");
        assert_eq!(parsed.diagram.links().len(), 1);
    }

    #[test]
    fn escaped_quotes_in_names() {
        let parsed = strict(r#"digraph { "the \"best\" price" -> "b" [arrowhead = vee] }"#);
        assert_eq!(parsed.diagram.links()[0].source.raw(), "the \"best\" price");
        let text = emit_digraph(&parsed.diagram);
        assert_eq!(strict(&text), parsed);
    }

    #[test]
    fn emits_canonical_form() {
        let d = strict(TABLE_1).diagram;
        assert_eq!(
            emit_digraph(&d),
            "digraph {\n\"births\" -> \"rabbit population\" [arrowhead = vee]\n\"rabbit population\" -> \"births\" [arrowhead = vee]\n\"birth fraction\" -> \"births\" [arrowhead = vee]\n}"
        );
        assert_eq!(emit_digraph(&CausalLoopDiagram::empty()), "digraph {\n}");
    }

    #[test]
    fn extracts_fenced_block() {
        let completion = "Here is the CLD:\n```\ndigraph { \"a\" -> \"b\" [arrowhead = vee] }\n```\nHope this helps.";
        assert_eq!(
            extract_digraph_block(completion).unwrap(),
            "digraph { \"a\" -> \"b\" [arrowhead = vee] }"
        );
    }

    #[test]
    fn extraction_is_identity_on_bare_digraph() {
        let text = emit_digraph(&strict(TABLE_1).diagram);
        assert_eq!(extract_digraph_block(&text).unwrap(), text);
    }

    #[test]
    fn prose_has_no_digraph() {
        assert_eq!(
            extract_digraph_block("The loop between smoking and addiction is reinforcing."),
            Err(DotError::NoDigraphFound)
        );
        assert_eq!(
            extract_digraph_block("A digraph is a directed graph."),
            Err(DotError::NoDigraphFound)
        );
    }

    #[test]
    fn extraction_skips_prose_mentions_and_braces_in_names() {
        let completion = "The digraph below:\n```dot\ndigraph CLD {\n\"a}\" -> \"b\" [arrowhead = tee]\n}\n```";
        assert_eq!(
            extract_digraph_block(completion).unwrap(),
            "digraph CLD {\n\"a}\" -> \"b\" [arrowhead = tee]\n}"
        );
    }

    #[test]
    fn truncated_block_runs_to_end() {
        let completion = "digraph {\n\"a\" -> \"b\" [arrowhead = tee]\n";
        assert_eq!(
            extract_digraph_block(completion).unwrap(),
            "digraph {\n\"a\" -> \"b\" [arrowhead = tee]"
        );
    }

    #[test]
    fn render_dot_marks_polarity() {
        let d = strict(TABLE_1).diagram;
        let dot = emit_render_dot(&d, false);
        assert_eq!(dot.matches("arrowhead=vee").count(), 3);
        assert_eq!(dot.matches("arrowhead=tee").count(), 0);

        let d = strict(r#"digraph { "a" -> "b" [arrowhead = tee] "b" -> "c" [arrowhead = vee] }"#).diagram;
        assert_eq!(emit_render_dot(&d, true).matches("arrowhead=tee").count(), 1);
    }

    #[test]
    fn render_dot_labels_loops() {
        let d = strict(TABLE_1).diagram;
        let dot = emit_render_dot(&d, true);
        assert!(dot.contains("label=\"R1\""));
        assert!(dot.contains("// R1: births -> rabbit population"));
        assert!(!dot.contains("B1"));
    }
}
