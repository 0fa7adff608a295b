//! Recursive-descent parser for `.ifc` circuit files.
//!
//! Grammar:
//!
//! ```text
//! circuit := "circuit" IDENT "{" stmt* "}"
//! stmt    := "modes" IDENT ("," IDENT)* ";"
//!          | "source" "excite" IDENT ";"
//!          | "bs" IDENT IDENT ";"
//!          | "phase" IDENT ("0" | "pi") ";"
//!          | "measure" IDENT ("nondestructive" | "destructive") ";"
//!          | "block" IDENT ";"
//!          | "divert" IDENT ";"
//!          | "fresh" IDENT ";"
//!          | "detect" IDENT ("," IDENT)* ";"
//! ```
//!
//! `#` starts a comment running to end of line; whitespace is insignificant.
//! `block m` is sugar for `measure m destructive` and is canonicalized at
//! parse time. Semantic constraints (single source, terminal detect,
//! liveness) live in the validator; the parser only rejects what the
//! grammar cannot express, plus duplicate mode declarations.

use std::fmt;

use super::ast::{Circuit, Element, ModeDecl, ModeOrigin};
use crate::dynamics::PhaseAngle;
use crate::ontology::ModeId;

/// Syntax error with a position inside the input (1-based line and column).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ParseError {
    pub line: usize,
    pub column: usize,
    pub message: String,
    pub expected: Vec<String>,
}

impl fmt::Display for ParseError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}: {}", self.line, self.column, self.message)?;
        if !self.expected.is_empty() {
            write!(f, " (expected {})", self.expected.join(" | "))?;
        }
        Ok(())
    }
}

impl std::error::Error for ParseError {}

#[derive(Debug, Clone, PartialEq, Eq)]
enum TokenKind {
    Ident(String),
    Number(String),
    LBrace,
    RBrace,
    Semi,
    Comma,
    Slash,
}

impl TokenKind {
    fn describe(&self) -> String {
        match self {
            TokenKind::Ident(s) => format!("'{s}'"),
            TokenKind::Number(s) => format!("'{s}'"),
            TokenKind::LBrace => "'{'".into(),
            TokenKind::RBrace => "'}'".into(),
            TokenKind::Semi => "';'".into(),
            TokenKind::Comma => "','".into(),
            TokenKind::Slash => "'/'".into(),
        }
    }
}

#[derive(Debug, Clone)]
struct Token {
    kind: TokenKind,
    line: usize,
    column: usize,
}

fn lex(text: &str) -> Result<Vec<Token>, ParseError> {
    let mut tokens = Vec::new();
    let mut line = 1usize;
    let mut column = 1usize;
    let mut chars = text.chars().peekable();
    while let Some(&ch) = chars.peek() {
        let (tline, tcol) = (line, column);
        let bump = |c: char, line: &mut usize, column: &mut usize| {
            if c == '\n' {
                *line += 1;
                *column = 1;
            } else {
                *column += 1;
            }
        };
        match ch {
            '#' => {
                while let Some(&c) = chars.peek() {
                    chars.next();
                    bump(c, &mut line, &mut column);
                    if c == '\n' {
                        break;
                    }
                }
            }
            c if c.is_whitespace() => {
                chars.next();
                bump(c, &mut line, &mut column);
            }
            c if c.is_ascii_alphabetic() || c == '_' => {
                let mut ident = String::new();
                while let Some(&c) = chars.peek() {
                    if c.is_ascii_alphanumeric() || c == '_' {
                        ident.push(c);
                        chars.next();
                        bump(c, &mut line, &mut column);
                    } else {
                        break;
                    }
                }
                tokens.push(Token {
                    kind: TokenKind::Ident(ident),
                    line: tline,
                    column: tcol,
                });
            }
            c if c.is_ascii_digit() => {
                let mut number = String::new();
                while let Some(&c) = chars.peek() {
                    if c.is_ascii_digit() || c == '.' {
                        number.push(c);
                        chars.next();
                        bump(c, &mut line, &mut column);
                    } else {
                        break;
                    }
                }
                tokens.push(Token {
                    kind: TokenKind::Number(number),
                    line: tline,
                    column: tcol,
                });
            }
            '{' | '}' | ';' | ',' | '/' => {
                let kind = match ch {
                    '{' => TokenKind::LBrace,
                    '}' => TokenKind::RBrace,
                    ';' => TokenKind::Semi,
                    ',' => TokenKind::Comma,
                    _ => TokenKind::Slash,
                };
                chars.next();
                bump(ch, &mut line, &mut column);
                tokens.push(Token {
                    kind,
                    line: tline,
                    column: tcol,
                });
            }
            other => {
                return Err(ParseError {
                    line: tline,
                    column: tcol,
                    message: format!("unexpected character '{other}'"),
                    expected: Vec::new(),
                });
            }
        }
    }
    Ok(tokens)
}

const STATEMENT_KEYWORDS: &[&str] = &[
    "modes", "source", "bs", "phase", "measure", "block", "divert", "fresh", "detect",
];

struct Parser {
    tokens: Vec<Token>,
    pos: usize,
    end_line: usize,
    end_column: usize,
    modes: Vec<ModeDecl>,
}

impl Parser {
    fn new(tokens: Vec<Token>, text: &str) -> Self {
        let end_line = text.lines().count().max(1);
        let end_column = text.lines().last().map_or(1, |l| l.chars().count() + 1);
        Parser {
            tokens,
            pos: 0,
            end_line,
            end_column,
            modes: Vec::new(),
        }
    }

    fn peek(&self) -> Option<&Token> {
        self.tokens.get(self.pos)
    }

    fn next(&mut self) -> Option<Token> {
        let token = self.tokens.get(self.pos).cloned();
        if token.is_some() {
            self.pos += 1;
        }
        token
    }

    fn error_at_end(&self, message: impl Into<String>, expected: &[&str]) -> ParseError {
        ParseError {
            line: self.end_line,
            column: self.end_column,
            message: message.into(),
            expected: expected.iter().map(|s| s.to_string()).collect(),
        }
    }

    fn error_at(&self, token: &Token, message: impl Into<String>, expected: &[&str]) -> ParseError {
        ParseError {
            line: token.line,
            column: token.column,
            message: message.into(),
            expected: expected.iter().map(|s| s.to_string()).collect(),
        }
    }

    fn expect_ident(&mut self, what: &str) -> Result<(String, Token), ParseError> {
        match self.next() {
            Some(token) => match token.kind.clone() {
                TokenKind::Ident(name) => Ok((name, token)),
                other => Err(self.error_at(
                    &token,
                    format!("expected {what}, found {}", other.describe()),
                    &["identifier"],
                )),
            },
            None => Err(self.error_at_end(
                format!("expected {what}, found end of input"),
                &["identifier"],
            )),
        }
    }

    fn expect_keyword(&mut self, keyword: &str) -> Result<(), ParseError> {
        match self.next() {
            Some(token) => match &token.kind {
                TokenKind::Ident(name) if name == keyword => Ok(()),
                other => Err(self.error_at(
                    &token,
                    format!("expected '{keyword}', found {}", other.describe()),
                    &[keyword],
                )),
            },
            None => Err(self.error_at_end(
                format!("expected '{keyword}', found end of input"),
                &[keyword],
            )),
        }
    }

    fn expect_kind(&mut self, kind: TokenKind, describe: &str) -> Result<(), ParseError> {
        match self.next() {
            Some(token) if token.kind == kind => Ok(()),
            Some(token) => Err(self.error_at(
                &token,
                format!("expected {describe}, found {}", token.kind.describe()),
                &[describe],
            )),
            None => Err(self.error_at_end(
                format!("expected {describe}, found end of input"),
                &[describe],
            )),
        }
    }

    fn declare_mode(&mut self, name: String, token: &Token) -> Result<(), ParseError> {
        if let Some(existing) = self.modes.iter_mut().find(|d| d.name == name) {
            match existing.origin {
                // A use can precede the declaration statement; upgrade it.
                ModeOrigin::Implicit => {
                    existing.origin = ModeOrigin::Declared;
                    Ok(())
                }
                _ => Err(self.error_at(token, format!("duplicate mode declaration '{name}'"), &[])),
            }
        } else {
            self.modes.push(ModeDecl {
                name,
                origin: ModeOrigin::Declared,
            });
            Ok(())
        }
    }

    fn resolve_mode(&mut self, name: &str) -> ModeId {
        if let Some(idx) = self.modes.iter().position(|d| d.name == name) {
            ModeId(idx)
        } else {
            self.modes.push(ModeDecl {
                name: name.to_string(),
                origin: ModeOrigin::Implicit,
            });
            ModeId(self.modes.len() - 1)
        }
    }

    fn resolve_fresh(&mut self, name: &str) -> ModeId {
        if let Some(idx) = self.modes.iter().position(|d| d.name == name) {
            // An earlier reference registered the name implicitly; the
            // fresh statement owns it. Re-introduction of declared or
            // already-fresh modes is left for the validator to report.
            if self.modes[idx].origin == ModeOrigin::Implicit {
                self.modes[idx].origin = ModeOrigin::Fresh;
            }
            ModeId(idx)
        } else {
            self.modes.push(ModeDecl {
                name: name.to_string(),
                origin: ModeOrigin::Fresh,
            });
            ModeId(self.modes.len() - 1)
        }
    }

    fn parse_mode_list(&mut self, what: &str) -> Result<Vec<(String, Token)>, ParseError> {
        let mut names = vec![self.expect_ident(what)?];
        while matches!(self.peek().map(|t| &t.kind), Some(TokenKind::Comma)) {
            self.next();
            names.push(self.expect_ident(what)?);
        }
        Ok(names)
    }

    fn parse_phase_angle(&mut self) -> Result<PhaseAngle, ParseError> {
        let token = match self.next() {
            Some(t) => t,
            None => {
                return Err(
                    self.error_at_end("expected phase value, found end of input", &["0", "pi"])
                )
            }
        };
        let angle = match &token.kind {
            TokenKind::Number(n) if n == "0" => PhaseAngle::Zero,
            TokenKind::Ident(s) if s == "pi" => PhaseAngle::Pi,
            other => {
                return Err(self.error_at(
                    &token,
                    format!(
                        "unsupported phase {}: only 0 and pi are admitted",
                        other.describe()
                    ),
                    &["0", "pi"],
                ));
            }
        };
        // Catch "pi/2" and friends with a phase-specific message rather
        // than a generic statement error.
        if let Some(next) = self.peek() {
            if !matches!(next.kind, TokenKind::Semi) {
                let next = next.clone();
                return Err(self.error_at(
                    &next,
                    format!(
                        "unsupported phase continuation {}: only 0 and pi are admitted",
                        next.kind.describe()
                    ),
                    &[";"],
                ));
            }
        }
        Ok(angle)
    }

    fn parse_statement(
        &mut self,
        keyword: &str,
        token: &Token,
        elements: &mut Vec<Element>,
    ) -> Result<(), ParseError> {
        match keyword {
            "modes" => {
                for (name, tok) in self.parse_mode_list("mode name")? {
                    self.declare_mode(name, &tok)?;
                }
            }
            "source" => {
                self.expect_keyword("excite")?;
                let (name, _) = self.expect_ident("mode name")?;
                let mode = self.resolve_mode(&name);
                elements.push(Element::Source { mode });
            }
            "bs" => {
                let (first, _) = self.expect_ident("mode name")?;
                let (second, _) = self.expect_ident("mode name")?;
                let a = self.resolve_mode(&first);
                let b = self.resolve_mode(&second);
                elements.push(Element::Beamsplitter { a, b });
            }
            "phase" => {
                let (name, _) = self.expect_ident("mode name")?;
                let angle = self.parse_phase_angle()?;
                let mode = self.resolve_mode(&name);
                elements.push(Element::PhaseShift { mode, angle });
            }
            "measure" => {
                let (name, _) = self.expect_ident("mode name")?;
                let (kind, kind_token) = self.expect_ident("measurement kind")?;
                let destructive = match kind.as_str() {
                    "nondestructive" => false,
                    "destructive" => true,
                    other => {
                        return Err(self.error_at(
                            &kind_token,
                            format!("unknown measurement kind '{other}'"),
                            &["nondestructive", "destructive"],
                        ));
                    }
                };
                let mode = self.resolve_mode(&name);
                elements.push(Element::Measure { mode, destructive });
            }
            "block" => {
                let (name, _) = self.expect_ident("mode name")?;
                let mode = self.resolve_mode(&name);
                elements.push(Element::Measure {
                    mode,
                    destructive: true,
                });
            }
            "divert" => {
                let (name, _) = self.expect_ident("mode name")?;
                let mode = self.resolve_mode(&name);
                elements.push(Element::Divert { mode });
            }
            "fresh" => {
                let (name, _) = self.expect_ident("mode name")?;
                let mode = self.resolve_fresh(&name);
                elements.push(Element::Fresh { mode });
            }
            "detect" => {
                let mut modes = Vec::new();
                for (name, _) in self.parse_mode_list("detector mode")? {
                    modes.push(self.resolve_mode(&name));
                }
                elements.push(Element::Detect { modes });
            }
            other => {
                return Err(self.error_at(
                    token,
                    format!("unknown statement keyword '{other}'"),
                    STATEMENT_KEYWORDS,
                ));
            }
        }
        self.expect_kind(TokenKind::Semi, "';'")
    }
}

/// Renumbers modes canonically: declared modes first (in declaration
/// order), then fresh modes in element order, then implicit references.
/// Makes mode ids independent of where statements appear in the file, so
/// the canonical serialization parses back to an identical circuit.
fn normalize(name: String, modes: Vec<ModeDecl>, elements: Vec<Element>) -> Circuit {
    let mut order: Vec<usize> = Vec::with_capacity(modes.len());
    for (i, d) in modes.iter().enumerate() {
        if d.origin == ModeOrigin::Declared {
            order.push(i);
        }
    }
    for element in &elements {
        if let Element::Fresh { mode } = element {
            if modes[mode.0].origin == ModeOrigin::Fresh && !order.contains(&mode.0) {
                order.push(mode.0);
            }
        }
    }
    for i in 0..modes.len() {
        if !order.contains(&i) {
            order.push(i);
        }
    }
    let mut remap = vec![0usize; modes.len()];
    for (new, &old) in order.iter().enumerate() {
        remap[old] = new;
    }
    let map = |m: ModeId| ModeId(remap[m.0]);
    let new_modes = order.iter().map(|&old| modes[old].clone()).collect();
    let new_elements = elements
        .into_iter()
        .map(|e| match e {
            Element::Source { mode } => Element::Source { mode: map(mode) },
            Element::Beamsplitter { a, b } => Element::Beamsplitter {
                a: map(a),
                b: map(b),
            },
            Element::PhaseShift { mode, angle } => Element::PhaseShift {
                mode: map(mode),
                angle,
            },
            Element::Measure { mode, destructive } => Element::Measure {
                mode: map(mode),
                destructive,
            },
            Element::Divert { mode } => Element::Divert { mode: map(mode) },
            Element::Fresh { mode } => Element::Fresh { mode: map(mode) },
            Element::Detect { modes } => Element::Detect {
                modes: modes.into_iter().map(map).collect(),
            },
            Element::CrossPhase { target, control } => Element::CrossPhase {
                target: map(target),
                control: map(control),
            },
        })
        .collect();
    Circuit {
        name,
        modes: new_modes,
        elements: new_elements,
    }
}

/// Parses circuit text. Returns the first syntax error with its position;
/// semantic problems are left to [`super::validate`].
pub fn parse(text: &str) -> Result<Circuit, ParseError> {
    let tokens = lex(text)?;
    let mut parser = Parser::new(tokens, text);

    parser.expect_keyword("circuit")?;
    let (name, _) = parser.expect_ident("circuit name")?;
    parser.expect_kind(TokenKind::LBrace, "'{'")?;

    let mut elements = Vec::new();
    loop {
        match parser.peek().cloned() {
            None => return Err(parser.error_at_end("unterminated circuit body", &["}"])),
            Some(token) => match &token.kind {
                TokenKind::RBrace => {
                    parser.next();
                    break;
                }
                TokenKind::Ident(keyword) => {
                    let keyword = keyword.clone();
                    parser.next();
                    parser.parse_statement(&keyword, &token, &mut elements)?;
                }
                other => {
                    return Err(parser.error_at(
                        &token,
                        format!("expected a statement, found {}", other.describe()),
                        STATEMENT_KEYWORDS,
                    ));
                }
            },
        }
    }
    if let Some(extra) = parser.peek() {
        let extra = extra.clone();
        return Err(parser.error_at(
            &extra,
            format!("unexpected trailing {}", extra.kind.describe()),
            &[],
        ));
    }

    let modes = std::mem::take(&mut parser.modes);
    Ok(normalize(name, modes, elements))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dsl::ast::serialize;

    const MZ: &str =
        "circuit mz { modes a,b; source excite a; bs a b; phase a 0; bs a b; detect a,b; }";

    #[test]
    fn parses_the_canonical_interferometer() {
        let c = parse(MZ).unwrap();
        assert_eq!(c.name, "mz");
        assert_eq!(c.mode_count(), 2);
        assert_eq!(c.elements.len(), 5);
        assert_eq!(c.elements[0], Element::Source { mode: ModeId(0) });
        assert_eq!(
            c.elements[4],
            Element::Detect {
                modes: vec![ModeId(0), ModeId(1)]
            }
        );
    }

    #[test]
    fn comments_and_whitespace_are_insignificant() {
        let noisy = "circuit mz { # header\n  modes a , b ;\n# mid\n source excite a ; bs a b ;\n phase a 0; bs a b; detect a , b ; }\n# trailing";
        assert_eq!(parse(noisy).unwrap(), parse(MZ).unwrap());
    }

    #[test]
    fn block_is_sugar_for_destructive_measure() {
        let c = parse("circuit x { modes a; source excite a; block a; detect a; }").unwrap();
        assert_eq!(
            c.elements[1],
            Element::Measure {
                mode: ModeId(0),
                destructive: true
            }
        );
    }

    #[test]
    fn rejects_fractional_phase_with_a_phase_specific_message() {
        let err = parse(
            "circuit mz { modes a,b; source excite a; bs a b; phase a pi/2; bs a b; detect a,b; }",
        )
        .unwrap_err();
        assert!(err.message.contains("unsupported phase"), "{err}");
        assert_eq!(err.line, 1);
        assert!(
            err.column >= 59,
            "position should sit in the phase argument: {err}"
        );
    }

    #[test]
    fn rejects_decimal_phase() {
        let err =
            parse("circuit x { modes a; source excite a; phase a 0.5; detect a; }").unwrap_err();
        assert!(err.message.contains("unsupported phase"), "{err}");
    }

    #[test]
    fn rejects_unknown_keyword_with_expected_set() {
        let err = parse("circuit x { modes a; teleport a; detect a; }").unwrap_err();
        assert!(err.message.contains("unknown statement keyword 'teleport'"));
        assert!(err.expected.contains(&"measure".to_string()));
    }

    #[test]
    fn rejects_duplicate_mode_declaration() {
        let err = parse("circuit x { modes a, b, a; detect a; }").unwrap_err();
        assert!(
            err.message.contains("duplicate mode declaration 'a'"),
            "{err}"
        );
    }

    #[test]
    fn reports_position_of_missing_semicolon() {
        let err = parse("circuit x { modes a\nsource excite a; detect a; }").unwrap_err();
        assert_eq!(err.line, 2);
        assert_eq!(err.column, 1);
    }

    #[test]
    fn missing_detect_still_parses() {
        // Terminal-detect enforcement is the validator's job.
        let c = parse("circuit x { modes a; source excite a; }").unwrap();
        assert!(c.detect_modes().is_none());
    }

    #[test]
    fn serialize_then_parse_is_identity_even_with_odd_statement_order() {
        let shuffled = "circuit odd { source excite a; modes b, a; fresh c; bs a c; detect a, c; }";
        let c = parse(shuffled).unwrap();
        let text = serialize(&c);
        let reparsed = parse(&text).unwrap();
        assert_eq!(reparsed, c);
        assert_eq!(serialize(&reparsed), text);
    }
}
