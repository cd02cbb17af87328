//! Line-oriented scenario parser.
//!
//! A document declares its space dimension, named kets, unitaries, and
//! PDIs, a time grid, one family (plus an optional intervened variant),
//! and any number of queries. Every statement is validated as soon as it
//! is parsed: kets must be normalized columns, unitaries unitary, PDIs
//! complete and orthogonal, and the family is fully constructed so a
//! document that parses is a document that runs. Errors carry the line
//! and column they were detected at, pointing at the opening bracket for
//! unterminated literals.
//!
//! Matrix expressions resolve eagerly to dense matrices; the document
//! stores no expression trees. Newlines inside brackets are ignored, so
//! literals may span lines. `#` starts a comment.

use chq_core::scenarios::{rotation_unitary, SpinDirection};
use chq_core::{
    ComplexMatrix, ComplexScalar, Event, HistoryFamily, Ket, Pdi, Projector, TimeGrid, Tolerance,
    UnitarySchedule,
};

use std::collections::HashMap;
use thiserror::Error;

/// Largest declarable space dimension.
pub const MAX_DIM: usize = 64;

/// Deepest allowed expression nesting.
const MAX_EXPR_DEPTH: usize = 64;

fn expected_suffix(expected: &Option<String>) -> String {
    match expected {
        Some(e) => format!(" (expected {e})"),
        None => String::new(),
    }
}

/// A positioned parse or validation failure.
#[derive(Debug, Clone, PartialEq, Error)]
#[error("{line}:{column}: {message}{}", expected_suffix(expected))]
pub struct ParseError {
    /// 1-based source line.
    pub line: usize,
    /// 1-based source column.
    pub column: usize,
    /// What went wrong.
    pub message: String,
    /// What the parser was looking for, when that is meaningful.
    pub expected: Option<String>,
}

fn err<T>(
    line: usize,
    column: usize,
    message: impl Into<String>,
    expected: Option<&str>,
) -> Result<T, ParseError> {
    Err(ParseError {
        line,
        column,
        message: message.into(),
        expected: expected.map(str::to_string),
    })
}

// ---------------------------------------------------------------------
// Document model
// ---------------------------------------------------------------------

/// Family definition by name reference.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FamilyDef {
    /// Initial ket name.
    pub init: String,
    /// Unitary name per step.
    pub steps: Vec<String>,
    /// PDI name per question slot.
    pub pdis: Vec<String>,
}

/// Intervened-family definition by name reference.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct InterventionDef {
    /// Unitary name per step.
    pub steps: Vec<String>,
    /// PDI name per question slot (defaults to the family's).
    pub pdis: Vec<String>,
}

/// An event reference: time label plus `pdi.member`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct EventRef {
    /// Time label from the `times` statement.
    pub time: String,
    /// PDI name.
    pub pdi: String,
    /// Member label within that PDI.
    pub member: String,
}

/// One query statement.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Query {
    /// Consistency verdict of the family.
    Consistency,
    /// History probability table.
    Probs,
    /// Is F a cause of G?
    Cause { f: EventRef, g: EventRef },
    /// Common causes of F and G at earlier times.
    CommonCause { f: EventRef, g: EventRef },
    /// Conditional Pr(G|F) in the family versus the intervened family.
    Compare { f: EventRef, g: EventRef },
}

/// A parsed, validated scenario: resolved definitions plus the built
/// families.
#[derive(Debug, Clone, PartialEq)]
pub struct ScenarioDoc {
    dim: usize,
    kets: Vec<(String, Ket)>,
    unitaries: Vec<(String, ComplexMatrix)>,
    pdis: Vec<(String, Pdi)>,
    times: Vec<String>,
    family_def: Option<FamilyDef>,
    intervened_def: Option<InterventionDef>,
    queries: Vec<Query>,
    family: Option<HistoryFamily>,
    intervened: Option<HistoryFamily>,
}

impl ScenarioDoc {
    /// Declared space dimension.
    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Named kets in definition order.
    pub fn kets(&self) -> &[(String, Ket)] {
        &self.kets
    }

    /// Named unitaries in definition order.
    pub fn unitaries(&self) -> &[(String, ComplexMatrix)] {
        &self.unitaries
    }

    /// Named PDIs in definition order.
    pub fn pdis(&self) -> &[(String, Pdi)] {
        &self.pdis
    }

    /// Time labels, empty when no `times` statement was given.
    pub fn times(&self) -> &[String] {
        &self.times
    }

    /// The family definition, if declared.
    pub fn family_def(&self) -> Option<&FamilyDef> {
        self.family_def.as_ref()
    }

    /// The intervened definition, if declared.
    pub fn intervened_def(&self) -> Option<&InterventionDef> {
        self.intervened_def.as_ref()
    }

    /// Queries in source order.
    pub fn queries(&self) -> &[Query] {
        &self.queries
    }

    /// The built family, if declared.
    pub fn family(&self) -> Option<&HistoryFamily> {
        self.family.as_ref()
    }

    /// The built intervened family, if declared.
    pub fn intervened(&self) -> Option<&HistoryFamily> {
        self.intervened.as_ref()
    }

    /// Looks up a ket by name.
    pub fn lookup_ket(&self, name: &str) -> Option<&Ket> {
        self.kets.iter().find(|(n, _)| n == name).map(|(_, k)| k)
    }

    /// Looks up a unitary by name.
    pub fn lookup_unitary(&self, name: &str) -> Option<&ComplexMatrix> {
        self.unitaries
            .iter()
            .find(|(n, _)| n == name)
            .map(|(_, m)| m)
    }

    /// Looks up a PDI by name.
    pub fn lookup_pdi(&self, name: &str) -> Option<&Pdi> {
        self.pdis.iter().find(|(n, _)| n == name).map(|(_, p)| p)
    }

    /// Resolves an event reference against the document; `None` for an
    /// unknown time, PDI, or member, or a reference to the initial time.
    pub fn resolve_event(&self, r: &EventRef) -> Option<Event> {
        let time_index = self.times.iter().position(|t| t == &r.time)?;
        if time_index == 0 {
            return None;
        }
        let pdi = self.lookup_pdi(&r.pdi)?;
        let member = pdi.labels().iter().position(|l| l == &r.member)?;
        Some(Event::new(
            time_index,
            pdi.member(member).clone(),
            format!("{}.{}", r.pdi, r.member),
        ))
    }
}

// ---------------------------------------------------------------------
// Lexer
// ---------------------------------------------------------------------

#[derive(Debug, Clone, PartialEq)]
enum Tok {
    Ident(String),
    Number(f64),
    Imag(f64),
    Sym(char),
    Newline,
    Eof,
}

#[derive(Debug, Clone)]
struct Token {
    tok: Tok,
    line: usize,
    col: usize,
}

impl Token {
    fn describe(&self) -> String {
        match &self.tok {
            Tok::Ident(name) => format!("`{name}`"),
            Tok::Number(v) => format!("number {v}"),
            Tok::Imag(v) => format!("imaginary number {v}i"),
            Tok::Sym(c) => format!("`{c}`"),
            Tok::Newline => "end of line".to_string(),
            Tok::Eof => "end of input".to_string(),
        }
    }
}

const SYMBOLS: &str = "={}[](),:.+-*/";

fn lex(src: &str) -> Result<Vec<Token>, ParseError> {
    let chars: Vec<char> = src.chars().collect();
    let mut tokens = Vec::new();
    let mut i = 0;
    let mut line = 1;
    let mut col = 1;
    let mut depth: usize = 0;
    while i < chars.len() {
        let ch = chars[i];
        if ch == '\n' {
            if depth == 0 {
                tokens.push(Token {
                    tok: Tok::Newline,
                    line,
                    col,
                });
            }
            i += 1;
            line += 1;
            col = 1;
            continue;
        }
        if ch == ' ' || ch == '\t' || ch == '\r' {
            i += 1;
            col += 1;
            continue;
        }
        if ch == '#' {
            while i < chars.len() && chars[i] != '\n' {
                i += 1;
                col += 1;
            }
            continue;
        }
        if ch.is_ascii_digit() {
            let start = i;
            let start_col = col;
            while i < chars.len() && chars[i].is_ascii_digit() {
                i += 1;
            }
            if i < chars.len() && chars[i] == '.' {
                i += 1;
                while i < chars.len() && chars[i].is_ascii_digit() {
                    i += 1;
                }
            }
            if i < chars.len() && (chars[i] == 'e' || chars[i] == 'E') {
                let mut j = i + 1;
                if j < chars.len() && (chars[j] == '+' || chars[j] == '-') {
                    j += 1;
                }
                if j < chars.len() && chars[j].is_ascii_digit() {
                    i = j;
                    while i < chars.len() && chars[i].is_ascii_digit() {
                        i += 1;
                    }
                } else {
                    return err(line, start_col, "malformed number exponent", Some("digits"));
                }
            }
            let text: String = chars[start..i].iter().collect();
            let value: f64 = match text.parse() {
                Ok(v) => v,
                Err(_) => return err(line, start_col, format!("malformed number `{text}`"), None),
            };
            if !value.is_finite() {
                return err(line, start_col, format!("number `{text}` is out of range"), None);
            }
            let imaginary = i < chars.len()
                && chars[i] == 'i'
                && !(i + 1 < chars.len()
                    && (chars[i + 1].is_ascii_alphanumeric() || chars[i + 1] == '_'));
            if imaginary {
                i += 1;
            }
            col += i - start;
            tokens.push(Token {
                tok: if imaginary {
                    Tok::Imag(value)
                } else {
                    Tok::Number(value)
                },
                line,
                col: start_col,
            });
            continue;
        }
        if ch.is_ascii_alphabetic() || ch == '_' {
            let start = i;
            let start_col = col;
            while i < chars.len() && (chars[i].is_ascii_alphanumeric() || chars[i] == '_') {
                i += 1;
            }
            col += i - start;
            tokens.push(Token {
                tok: Tok::Ident(chars[start..i].iter().collect()),
                line,
                col: start_col,
            });
            continue;
        }
        if SYMBOLS.contains(ch) {
            match ch {
                '[' | '(' | '{' => depth += 1,
                ']' | ')' | '}' => depth = depth.saturating_sub(1),
                _ => {}
            }
            tokens.push(Token {
                tok: Tok::Sym(ch),
                line,
                col,
            });
            i += 1;
            col += 1;
            continue;
        }
        return err(line, col, format!("unexpected character `{ch}`"), None);
    }
    tokens.push(Token {
        tok: Tok::Eof,
        line,
        col,
    });
    Ok(tokens)
}

// ---------------------------------------------------------------------
// Parser
// ---------------------------------------------------------------------

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum NameKind {
    Ket(usize),
    Unitary(usize),
    Pdi(usize),
}

impl NameKind {
    fn noun(&self) -> &'static str {
        match self {
            NameKind::Ket(_) => "ket",
            NameKind::Unitary(_) => "unitary",
            NameKind::Pdi(_) => "pdi",
        }
    }
}

struct Parser {
    tokens: Vec<Token>,
    pos: usize,
    tol: Tolerance,
    depth: usize,
    dim: Option<usize>,
    names: HashMap<String, NameKind>,
    kets: Vec<(String, Ket)>,
    unitaries: Vec<(String, ComplexMatrix)>,
    pdis: Vec<(String, Pdi)>,
    times: Vec<String>,
    family_def: Option<FamilyDef>,
    intervened_def: Option<InterventionDef>,
    queries: Vec<Query>,
    family: Option<HistoryFamily>,
    intervened: Option<HistoryFamily>,
}

/// Parses a scenario with the default tolerance.
pub fn parse_scenario(src: &str) -> Result<ScenarioDoc, ParseError> {
    parse_scenario_with(src, Tolerance::default())
}

/// Parses a scenario, validating against the given tolerance.
pub fn parse_scenario_with(src: &str, tol: Tolerance) -> Result<ScenarioDoc, ParseError> {
    Parser::new(lex(src)?, tol).run()
}

/// Parses a single scalar expression, e.g. `0.6`, `0.8i`, `1/sqrt2`,
/// `pi/4`, `(1+2i)/2`.
pub fn parse_scalar(src: &str) -> Result<ComplexScalar, ParseError> {
    let mut parser = Parser::new(lex(src)?, Tolerance::default());
    parser.skip_newlines();
    let (value, _, _) = parser.scalar_expr()?;
    parser.skip_newlines();
    let t = parser.peek().clone();
    if t.tok != Tok::Eof {
        return err(
            t.line,
            t.col,
            format!("unexpected {} after the expression", t.describe()),
            None,
        );
    }
    Ok(value)
}

impl Parser {
    fn new(tokens: Vec<Token>, tol: Tolerance) -> Self {
        Parser {
            tokens,
            pos: 0,
            tol,
            depth: 0,
            dim: None,
            names: HashMap::new(),
            kets: Vec::new(),
            unitaries: Vec::new(),
            pdis: Vec::new(),
            times: Vec::new(),
            family_def: None,
            intervened_def: None,
            queries: Vec::new(),
            family: None,
            intervened: None,
        }
    }

    fn peek(&self) -> &Token {
        &self.tokens[self.pos.min(self.tokens.len() - 1)]
    }

    fn bump(&mut self) -> Token {
        let t = self.peek().clone();
        if self.pos < self.tokens.len() - 1 {
            self.pos += 1;
        }
        t
    }

    fn skip_newlines(&mut self) {
        while self.peek().tok == Tok::Newline {
            self.bump();
        }
    }

    fn expect_sym(&mut self, c: char, context: &str) -> Result<Token, ParseError> {
        let t = self.bump();
        if t.tok == Tok::Sym(c) {
            Ok(t)
        } else {
            err(
                t.line,
                t.col,
                format!("unexpected {} in {context}", t.describe()),
                Some(&format!("`{c}`")),
            )
        }
    }

    fn expect_ident(&mut self, context: &str) -> Result<(String, Token), ParseError> {
        let t = self.bump();
        match t.tok.clone() {
            Tok::Ident(name) => Ok((name, t)),
            _ => err(
                t.line,
                t.col,
                format!("unexpected {} in {context}", t.describe()),
                Some("a name"),
            ),
        }
    }

    fn expect_keyword(&mut self, keyword: &str, context: &str) -> Result<Token, ParseError> {
        let t = self.bump();
        if t.tok == Tok::Ident(keyword.to_string()) {
            Ok(t)
        } else {
            err(
                t.line,
                t.col,
                format!("unexpected {} in {context}", t.describe()),
                Some(&format!("`{keyword}`")),
            )
        }
    }

    fn expect_statement_end(&mut self) -> Result<(), ParseError> {
        let t = self.bump();
        match t.tok {
            Tok::Newline | Tok::Eof => Ok(()),
            _ => err(
                t.line,
                t.col,
                format!("unexpected {} after the statement", t.describe()),
                Some("end of line"),
            ),
        }
    }

    fn require_dim(&self, at: &Token) -> Result<usize, ParseError> {
        match self.dim {
            Some(d) => Ok(d),
            None => err(at.line, at.col, "space must be declared first", None),
        }
    }

    fn define_name(&mut self, name: &str, kind: NameKind, at: &Token) -> Result<(), ParseError> {
        if let Some(existing) = self.names.get(name) {
            return err(
                at.line,
                at.col,
                format!("`{name}` is already defined as a {}", existing.noun()),
                None,
            );
        }
        self.names.insert(name.to_string(), kind);
        Ok(())
    }

    fn run(mut self) -> Result<ScenarioDoc, ParseError> {
        loop {
            self.skip_newlines();
            if self.peek().tok == Tok::Eof {
                break;
            }
            let (word, t) = self.expect_ident("a statement")?;
            match word.as_str() {
                "space" => self.space_stmt(&t)?,
                "ket" => self.ket_stmt(&t)?,
                "unitary" => self.unitary_stmt(&t)?,
                "pdi" => self.pdi_stmt(&t)?,
                "times" => self.times_stmt(&t)?,
                "family" => self.family_stmt(&t)?,
                "intervened" => self.intervened_stmt(&t)?,
                "query" => self.query_stmt(&t)?,
                other => {
                    return err(
                        t.line,
                        t.col,
                        format!("unknown statement `{other}`"),
                        Some("space, ket, unitary, pdi, times, family, intervened, or query"),
                    )
                }
            }
            self.expect_statement_end()?;
        }
        if self.dim.is_none() {
            let t = self.peek().clone();
            return err(t.line, t.col, "document declares no space", None);
        }
        Ok(ScenarioDoc {
            dim: self.dim.unwrap(),
            kets: self.kets,
            unitaries: self.unitaries,
            pdis: self.pdis,
            times: self.times,
            family_def: self.family_def,
            intervened_def: self.intervened_def,
            queries: self.queries,
            family: self.family,
            intervened: self.intervened,
        })
    }

    fn space_stmt(&mut self, at: &Token) -> Result<(), ParseError> {
        if self.dim.is_some() {
            return err(at.line, at.col, "space is already declared", None);
        }
        let t = self.bump();
        let value = match t.tok {
            Tok::Number(v) => v,
            _ => {
                return err(
                    t.line,
                    t.col,
                    format!("unexpected {} in space declaration", t.describe()),
                    Some("a dimension"),
                )
            }
        };
        if value.fract() != 0.0 || value < 1.0 || value > MAX_DIM as f64 {
            return err(
                t.line,
                t.col,
                format!("space dimension must be an integer in 1..={MAX_DIM}"),
                None,
            );
        }
        self.dim = Some(value as usize);
        Ok(())
    }

    fn ket_stmt(&mut self, at: &Token) -> Result<(), ParseError> {
        let dim = self.require_dim(at)?;
        let (name, name_tok) = self.expect_ident("ket declaration")?;
        self.expect_sym('=', "ket declaration")?;
        let matrix = self.matrix_expr()?;
        if matrix.cols() != 1 {
            return err(
                name_tok.line,
                name_tok.col,
                format!(
                    "ket `{name}` must be a column, got {}x{}",
                    matrix.rows(),
                    matrix.cols()
                ),
                None,
            );
        }
        if matrix.rows() != dim {
            return err(
                name_tok.line,
                name_tok.col,
                format!(
                    "ket `{name}` has {} entries, space is {dim}",
                    matrix.rows()
                ),
                None,
            );
        }
        let ket = match Ket::new(matrix) {
            Ok(k) => k,
            Err(e) => return err(name_tok.line, name_tok.col, e.to_string(), None),
        };
        let norm = ket.norm();
        if (norm - 1.0).abs() > self.tol.eps() {
            return err(
                name_tok.line,
                name_tok.col,
                format!("ket `{name}` has norm {norm}, must be 1"),
                None,
            );
        }
        self.define_name(&name, NameKind::Ket(self.kets.len()), &name_tok)?;
        self.kets.push((name, ket));
        Ok(())
    }

    fn unitary_stmt(&mut self, at: &Token) -> Result<(), ParseError> {
        let dim = self.require_dim(at)?;
        let (name, name_tok) = self.expect_ident("unitary declaration")?;
        self.expect_sym('=', "unitary declaration")?;
        let matrix = self.matrix_expr()?;
        if matrix.rows() != dim || matrix.cols() != dim {
            return err(
                name_tok.line,
                name_tok.col,
                format!(
                    "unitary `{name}` is {}x{}, space is {dim}",
                    matrix.rows(),
                    matrix.cols()
                ),
                None,
            );
        }
        if !matrix.is_unitary(self.tol) {
            return err(
                name_tok.line,
                name_tok.col,
                format!("`{name}` is not unitary"),
                None,
            );
        }
        self.define_name(&name, NameKind::Unitary(self.unitaries.len()), &name_tok)?;
        self.unitaries.push((name, matrix));
        Ok(())
    }

    fn pdi_stmt(&mut self, at: &Token) -> Result<(), ParseError> {
        let dim = self.require_dim(at)?;
        let (name, name_tok) = self.expect_ident("pdi declaration")?;
        self.expect_sym('=', "pdi declaration")?;
        self.expect_sym('{', "pdi declaration")?;
        let mut members = Vec::new();
        let mut labels: Vec<String> = Vec::new();
        loop {
            if self.peek().tok == Tok::Eof {
                return err(
                    name_tok.line,
                    name_tok.col,
                    format!("unterminated pdi `{name}`"),
                    Some("`}`"),
                );
            }
            let (label, label_tok) = self.expect_ident("pdi member")?;
            if labels.iter().any(|l| l == &label) {
                return err(
                    label_tok.line,
                    label_tok.col,
                    format!("duplicate member label `{label}` in pdi `{name}`"),
                    None,
                );
            }
            self.expect_sym(':', "pdi member")?;
            let matrix = self.matrix_expr()?;
            if matrix.rows() != dim || matrix.cols() != dim {
                return err(
                    label_tok.line,
                    label_tok.col,
                    format!(
                        "member `{label}` is {}x{}, space is {dim}",
                        matrix.rows(),
                        matrix.cols()
                    ),
                    None,
                );
            }
            let projector = match Projector::new(matrix, self.tol) {
                Ok(p) => p,
                Err(e) => {
                    return err(
                        label_tok.line,
                        label_tok.col,
                        format!("member `{label}`: {e}"),
                        None,
                    )
                }
            };
            members.push(projector);
            labels.push(label);
            let t = self.bump();
            match t.tok {
                Tok::Sym(',') => {
                    if self.peek().tok == Tok::Sym('}') {
                        self.bump();
                        break;
                    }
                }
                Tok::Sym('}') => break,
                _ => {
                    return err(
                        t.line,
                        t.col,
                        format!("unexpected {} in pdi `{name}`", t.describe()),
                        Some("`,` or `}`"),
                    )
                }
            }
        }
        let pdi = match Pdi::new(members, labels, self.tol) {
            Ok(p) => p,
            Err(e) => return err(name_tok.line, name_tok.col, format!("pdi `{name}`: {e}"), None),
        };
        self.define_name(&name, NameKind::Pdi(self.pdis.len()), &name_tok)?;
        self.pdis.push((name, pdi));
        Ok(())
    }

    fn times_stmt(&mut self, at: &Token) -> Result<(), ParseError> {
        self.require_dim(at)?;
        if !self.times.is_empty() {
            return err(at.line, at.col, "times are already declared", None);
        }
        let mut labels = Vec::new();
        loop {
            match &self.peek().tok {
                Tok::Newline | Tok::Eof => break,
                _ => {}
            }
            let (label, label_tok) = self.expect_ident("times declaration")?;
            if labels.iter().any(|l| l == &label) {
                return err(
                    label_tok.line,
                    label_tok.col,
                    format!("duplicate time label `{label}`"),
                    None,
                );
            }
            labels.push(label);
        }
        if labels.len() < 2 {
            return err(
                at.line,
                at.col,
                format!("times needs at least 2 labels, got {}", labels.len()),
                None,
            );
        }
        self.times = labels;
        Ok(())
    }

    fn name_list(
        &mut self,
        kind: &str,
        context: &str,
    ) -> Result<Vec<(String, Token)>, ParseError> {
        let open = self.expect_sym('[', context)?;
        let mut names = Vec::new();
        if self.peek().tok == Tok::Sym(']') {
            self.bump();
            return Ok(names);
        }
        loop {
            if self.peek().tok == Tok::Eof {
                return err(
                    open.line,
                    open.col,
                    format!("unterminated {kind} list"),
                    Some("`]`"),
                );
            }
            names.push(self.expect_ident(context)?);
            let t = self.bump();
            match t.tok {
                Tok::Sym(',') => continue,
                Tok::Sym(']') => break,
                _ => {
                    return err(
                        t.line,
                        t.col,
                        format!("unexpected {} in {context}", t.describe()),
                        Some("`,` or `]`"),
                    )
                }
            }
        }
        Ok(names)
    }

    fn resolve_unitaries(
        &self,
        names: &[(String, Token)],
    ) -> Result<Vec<ComplexMatrix>, ParseError> {
        names
            .iter()
            .map(|(name, t)| match self.names.get(name) {
                Some(NameKind::Unitary(i)) => Ok(self.unitaries[*i].1.clone()),
                Some(other) => err(
                    t.line,
                    t.col,
                    format!("`{name}` is a {}, not a unitary", other.noun()),
                    None,
                ),
                None => err(t.line, t.col, format!("unknown unitary `{name}`"), None),
            })
            .collect()
    }

    fn resolve_pdis(&self, names: &[(String, Token)]) -> Result<Vec<Pdi>, ParseError> {
        names
            .iter()
            .map(|(name, t)| match self.names.get(name) {
                Some(NameKind::Pdi(i)) => Ok(self.pdis[*i].1.clone()),
                Some(other) => err(
                    t.line,
                    t.col,
                    format!("`{name}` is a {}, not a pdi", other.noun()),
                    None,
                ),
                None => err(t.line, t.col, format!("unknown pdi `{name}`"), None),
            })
            .collect()
    }

    fn family_stmt(&mut self, at: &Token) -> Result<(), ParseError> {
        self.require_dim(at)?;
        if self.family_def.is_some() {
            return err(at.line, at.col, "family is already declared", None);
        }
        if self.times.is_empty() {
            return err(at.line, at.col, "family needs times declared first", None);
        }
        self.expect_keyword("init", "family declaration")?;
        self.expect_sym('=', "family declaration")?;
        let (init_name, init_tok) = self.expect_ident("family declaration")?;
        let initial = match self.names.get(&init_name) {
            Some(NameKind::Ket(i)) => self.kets[*i].1.clone(),
            Some(other) => {
                return err(
                    init_tok.line,
                    init_tok.col,
                    format!("`{init_name}` is a {}, not a ket", other.noun()),
                    None,
                )
            }
            None => {
                return err(
                    init_tok.line,
                    init_tok.col,
                    format!("unknown ket `{init_name}`"),
                    None,
                )
            }
        };
        self.expect_keyword("steps", "family declaration")?;
        self.expect_sym('=', "family declaration")?;
        let step_names = self.name_list("steps", "family declaration")?;
        self.expect_keyword("pdis", "family declaration")?;
        self.expect_sym('=', "family declaration")?;
        let pdi_names = self.name_list("pdis", "family declaration")?;

        let steps = self.resolve_unitaries(&step_names)?;
        let pdis = self.resolve_pdis(&pdi_names)?;
        let grid = TimeGrid::new(self.times.clone()).expect("validated at the times statement");
        let schedule = match UnitarySchedule::new(steps, self.tol) {
            Ok(s) => s,
            Err(e) => return err(at.line, at.col, e.to_string(), None),
        };
        let family = match HistoryFamily::new(initial, grid, schedule, pdis, self.tol) {
            Ok(f) => f,
            Err(e) => return err(at.line, at.col, e.to_string(), None),
        };
        self.family = Some(family);
        self.family_def = Some(FamilyDef {
            init: init_name,
            steps: step_names.into_iter().map(|(n, _)| n).collect(),
            pdis: pdi_names.into_iter().map(|(n, _)| n).collect(),
        });
        Ok(())
    }

    fn intervened_stmt(&mut self, at: &Token) -> Result<(), ParseError> {
        self.require_dim(at)?;
        if self.intervened_def.is_some() {
            return err(at.line, at.col, "intervened is already declared", None);
        }
        let family = match &self.family {
            Some(f) => f.clone(),
            None => {
                return err(
                    at.line,
                    at.col,
                    "intervened needs a family declared first",
                    None,
                )
            }
        };
        self.expect_keyword("steps", "intervened declaration")?;
        self.expect_sym('=', "intervened declaration")?;
        let step_names = self.name_list("steps", "intervened declaration")?;
        let pdi_names = if self.peek().tok == Tok::Ident("pdis".to_string()) {
            self.bump();
            self.expect_sym('=', "intervened declaration")?;
            Some(self.name_list("pdis", "intervened declaration")?)
        } else {
            None
        };

        let steps = self.resolve_unitaries(&step_names)?;
        let family_def = self.family_def.as_ref().expect("family checked above");
        let (pdis, pdi_name_strings) = match &pdi_names {
            Some(names) => (
                self.resolve_pdis(names)?,
                names.iter().map(|(n, _)| n.clone()).collect(),
            ),
            None => (family.pdis().to_vec(), family_def.pdis.clone()),
        };
        let schedule = match UnitarySchedule::new(steps, self.tol) {
            Ok(s) => s,
            Err(e) => return err(at.line, at.col, e.to_string(), None),
        };
        let built = match HistoryFamily::new(
            family.initial().clone(),
            family.grid().clone(),
            schedule,
            pdis,
            self.tol,
        ) {
            Ok(f) => f,
            Err(e) => return err(at.line, at.col, e.to_string(), None),
        };
        self.intervened = Some(built);
        self.intervened_def = Some(InterventionDef {
            steps: step_names.into_iter().map(|(n, _)| n).collect(),
            pdis: pdi_name_strings,
        });
        Ok(())
    }

    fn event_ref(&mut self, context: &str) -> Result<EventRef, ParseError> {
        self.expect_sym('(', context)?;
        let (time, time_tok) = self.expect_ident(context)?;
        self.expect_sym(',', context)?;
        let (pdi, pdi_tok) = self.expect_ident(context)?;
        self.expect_sym('.', context)?;
        let (member, member_tok) = self.expect_ident(context)?;
        self.expect_sym(')', context)?;

        let time_index = match self.times.iter().position(|t| t == &time) {
            Some(i) => i,
            None => {
                return err(
                    time_tok.line,
                    time_tok.col,
                    format!("unknown time label `{time}`"),
                    None,
                )
            }
        };
        if time_index == 0 {
            return err(
                time_tok.line,
                time_tok.col,
                format!("`{time}` is the initial time, events start one step later"),
                None,
            );
        }
        let pdi_value = match self.names.get(&pdi) {
            Some(NameKind::Pdi(i)) => &self.pdis[*i].1,
            Some(other) => {
                return err(
                    pdi_tok.line,
                    pdi_tok.col,
                    format!("`{pdi}` is a {}, not a pdi", other.noun()),
                    None,
                )
            }
            None => {
                return err(
                    pdi_tok.line,
                    pdi_tok.col,
                    format!("unknown pdi `{pdi}`"),
                    None,
                )
            }
        };
        if !pdi_value.labels().iter().any(|l| l == &member) {
            return err(
                member_tok.line,
                member_tok.col,
                format!("pdi `{pdi}` has no member `{member}`"),
                None,
            );
        }
        Ok(EventRef { time, pdi, member })
    }

    fn query_stmt(&mut self, at: &Token) -> Result<(), ParseError> {
        self.require_dim(at)?;
        if self.family.is_none() {
            return err(at.line, at.col, "query needs a family declared first", None);
        }
        let (kind, kind_tok) = self.expect_ident("query")?;
        let query = match kind.as_str() {
            "consistency" => Query::Consistency,
            "probs" => Query::Probs,
            "cause" | "common_cause" | "compare" => {
                let context = format!("{kind} query");
                if kind == "compare" && self.intervened.is_none() {
                    return err(
                        kind_tok.line,
                        kind_tok.col,
                        "compare needs an intervened declaration first",
                        None,
                    );
                }
                self.expect_keyword("F", &context)?;
                self.expect_sym('=', &context)?;
                let f = self.event_ref(&context)?;
                self.expect_keyword("G", &context)?;
                self.expect_sym('=', &context)?;
                let g = self.event_ref(&context)?;
                match kind.as_str() {
                    "cause" => Query::Cause { f, g },
                    "common_cause" => Query::CommonCause { f, g },
                    _ => Query::Compare { f, g },
                }
            }
            other => {
                return err(
                    kind_tok.line,
                    kind_tok.col,
                    format!("unknown query `{other}`"),
                    Some("consistency, probs, cause, common_cause, or compare"),
                )
            }
        };
        self.queries.push(query);
        Ok(())
    }

    // -----------------------------------------------------------------
    // Matrix expressions
    // -----------------------------------------------------------------

    fn matrix_expr(&mut self) -> Result<ComplexMatrix, ParseError> {
        self.depth += 1;
        if self.depth > MAX_EXPR_DEPTH {
            let t = self.peek().clone();
            return err(t.line, t.col, "expression nested too deeply", None);
        }
        let mut acc = self.matrix_term()?;
        loop {
            let (op, op_tok) = match self.peek().tok {
                Tok::Sym('+') => ('+', self.bump()),
                Tok::Sym('-') => ('-', self.bump()),
                _ => break,
            };
            let rhs = self.matrix_term()?;
            let combined = if op == '+' { acc.add(&rhs) } else { acc.sub(&rhs) };
            acc = match combined {
                Ok(m) => m,
                Err(e) => return err(op_tok.line, op_tok.col, e.to_string(), None),
            };
        }
        self.depth -= 1;
        Ok(acc)
    }

    fn matrix_term(&mut self) -> Result<ComplexMatrix, ParseError> {
        let t = self.peek().clone();
        match &t.tok {
            Tok::Sym('[') => self.matrix_literal(),
            Tok::Ident(name) => match name.as_str() {
                "proj" => self.proj_call(),
                "rot" => self.rot_call(),
                "kron" => self.kron_call(),
                "ident" => self.ident_call(),
                _ => {
                    self.bump();
                    match self.names.get(name) {
                        Some(NameKind::Ket(i)) => Ok(self.kets[*i].1.amplitudes().clone()),
                        Some(NameKind::Unitary(i)) => Ok(self.unitaries[*i].1.clone()),
                        Some(NameKind::Pdi(_)) => err(
                            t.line,
                            t.col,
                            format!("pdi `{name}` cannot appear in a matrix expression"),
                            None,
                        ),
                        None => err(t.line, t.col, format!("unknown name `{name}`"), None),
                    }
                }
            },
            _ => err(
                t.line,
                t.col,
                format!("unexpected {} in a matrix expression", t.describe()),
                Some("a matrix"),
            ),
        }
    }

    fn literal_entry(&mut self, open: &Token) -> Result<ComplexScalar, ParseError> {
        if self.peek().tok == Tok::Eof {
            return err(
                open.line,
                open.col,
                "unterminated matrix literal",
                Some("`]`"),
            );
        }
        let (value, line, col) = self.scalar_expr()?;
        if !value.re.is_finite() || !value.im.is_finite() {
            return err(line, col, "matrix entry is not finite", None);
        }
        Ok(value)
    }

    fn matrix_literal(&mut self) -> Result<ComplexMatrix, ParseError> {
        let open = self.expect_sym('[', "a matrix literal")?;
        if self.peek().tok == Tok::Sym(']') {
            let t = self.bump();
            return err(t.line, t.col, "empty matrix literal", None);
        }
        if self.peek().tok == Tok::Sym('[') {
            // Rows of entries.
            let mut rows: Vec<Vec<ComplexScalar>> = Vec::new();
            loop {
                if self.peek().tok == Tok::Eof {
                    return err(
                        open.line,
                        open.col,
                        "unterminated matrix literal",
                        Some("`]`"),
                    );
                }
                let row_open = self.expect_sym('[', "a matrix row")?;
                let mut row = Vec::new();
                loop {
                    row.push(self.literal_entry(&row_open)?);
                    if row.len() > MAX_DIM {
                        return err(
                            row_open.line,
                            row_open.col,
                            format!("matrix row exceeds {MAX_DIM} entries"),
                            None,
                        );
                    }
                    let t = self.bump();
                    match t.tok {
                        Tok::Sym(',') => {
                            if self.peek().tok == Tok::Sym(']') {
                                self.bump();
                                break;
                            }
                        }
                        Tok::Sym(']') => break,
                        Tok::Eof => {
                            return err(
                                row_open.line,
                                row_open.col,
                                "unterminated matrix literal",
                                Some("`]`"),
                            )
                        }
                        _ => {
                            return err(
                                t.line,
                                t.col,
                                format!("unexpected {} in a matrix row", t.describe()),
                                Some("`,` or `]`"),
                            )
                        }
                    }
                }
                if let Some(first) = rows.first() {
                    if row.len() != first.len() {
                        return err(
                            row_open.line,
                            row_open.col,
                            format!(
                                "row has {} entries, previous rows have {}",
                                row.len(),
                                first.len()
                            ),
                            None,
                        );
                    }
                }
                rows.push(row);
                if rows.len() > MAX_DIM {
                    return err(
                        open.line,
                        open.col,
                        format!("matrix exceeds {MAX_DIM} rows"),
                        None,
                    );
                }
                let t = self.bump();
                match t.tok {
                    Tok::Sym(',') => {
                        if self.peek().tok == Tok::Sym(']') {
                            self.bump();
                            break;
                        }
                    }
                    Tok::Sym(']') => break,
                    Tok::Eof => {
                        return err(
                            open.line,
                            open.col,
                            "unterminated matrix literal",
                            Some("`]`"),
                        )
                    }
                    _ => {
                        return err(
                            t.line,
                            t.col,
                            format!("unexpected {} in a matrix literal", t.describe()),
                            Some("`,` or `]`"),
                        )
                    }
                }
            }
            ComplexMatrix::from_rows(&rows)
                .map_err(|e| ParseError {
                    line: open.line,
                    column: open.col,
                    message: e.to_string(),
                    expected: None,
                })
        } else {
            // A flat list of entries: a column vector.
            let mut entries = Vec::new();
            loop {
                entries.push(self.literal_entry(&open)?);
                if entries.len() > MAX_DIM {
                    return err(
                        open.line,
                        open.col,
                        format!("column exceeds {MAX_DIM} entries"),
                        None,
                    );
                }
                let t = self.bump();
                match t.tok {
                    Tok::Sym(',') => {
                        if self.peek().tok == Tok::Sym(']') {
                            self.bump();
                            break;
                        }
                    }
                    Tok::Sym(']') => break,
                    Tok::Eof => {
                        return err(
                            open.line,
                            open.col,
                            "unterminated matrix literal",
                            Some("`]`"),
                        )
                    }
                    _ => {
                        return err(
                            t.line,
                            t.col,
                            format!("unexpected {} in a matrix literal", t.describe()),
                            Some("`,` or `]`"),
                        )
                    }
                }
            }
            ComplexMatrix::column(entries).map_err(|e| ParseError {
                line: open.line,
                column: open.col,
                message: e.to_string(),
                expected: None,
            })
        }
    }

    fn proj_call(&mut self) -> Result<ComplexMatrix, ParseError> {
        let at = self.bump();
        self.expect_sym('(', "proj")?;
        let arg = self.matrix_expr()?;
        self.expect_sym(')', "proj")?;
        if arg.cols() != 1 {
            return err(
                at.line,
                at.col,
                format!("proj needs a column, got {}x{}", arg.rows(), arg.cols()),
                None,
            );
        }
        let ket = match Ket::new(arg) {
            Ok(k) => k,
            Err(e) => return err(at.line, at.col, e.to_string(), None),
        };
        match ket.projector(self.tol) {
            Ok(p) => Ok(p.matrix().clone()),
            Err(e) => err(at.line, at.col, e.to_string(), None),
        }
    }

    fn real_arg(&mut self, what: &str) -> Result<f64, ParseError> {
        let (value, line, col) = self.scalar_expr()?;
        if value.im != 0.0 {
            return err(line, col, format!("{what} must be real"), None);
        }
        if !value.re.is_finite() {
            return err(line, col, format!("{what} is not finite"), None);
        }
        Ok(value.re)
    }

    fn rot_call(&mut self) -> Result<ComplexMatrix, ParseError> {
        let at = self.bump();
        self.expect_sym('(', "rot")?;
        self.expect_keyword("axis", "rot")?;
        self.expect_sym('=', "rot")?;
        self.expect_sym('(', "rot axis")?;
        let theta = self.real_arg("the axis polar angle")?;
        self.expect_sym(',', "rot axis")?;
        let phi = self.real_arg("the axis azimuthal angle")?;
        self.expect_sym(')', "rot axis")?;
        self.expect_sym(',', "rot")?;
        self.expect_keyword("angle", "rot")?;
        self.expect_sym('=', "rot")?;
        let angle = self.real_arg("the rotation angle")?;
        self.expect_sym(')', "rot")?;
        let axis = match SpinDirection::new(theta, phi) {
            Ok(a) => a,
            Err(e) => return err(at.line, at.col, e.to_string(), None),
        };
        match rotation_unitary(&axis, angle) {
            Ok(u) => Ok(u),
            Err(e) => err(at.line, at.col, e.to_string(), None),
        }
    }

    fn kron_call(&mut self) -> Result<ComplexMatrix, ParseError> {
        let at = self.bump();
        self.expect_sym('(', "kron")?;
        let a = self.matrix_expr()?;
        self.expect_sym(',', "kron")?;
        let b = self.matrix_expr()?;
        self.expect_sym(')', "kron")?;
        let rows = a.rows() * b.rows();
        let cols = a.cols() * b.cols();
        if rows > MAX_DIM || cols > MAX_DIM {
            return err(
                at.line,
                at.col,
                format!("kron result is {rows}x{cols}, the limit is {MAX_DIM}"),
                None,
            );
        }
        Ok(a.kron(&b))
    }

    fn ident_call(&mut self) -> Result<ComplexMatrix, ParseError> {
        self.bump();
        self.expect_sym('(', "ident")?;
        let t = self.bump();
        let value = match t.tok {
            Tok::Number(v) => v,
            _ => {
                return err(
                    t.line,
                    t.col,
                    format!("unexpected {} in ident", t.describe()),
                    Some("a dimension"),
                )
            }
        };
        if value.fract() != 0.0 || value < 1.0 || value > MAX_DIM as f64 {
            return err(
                t.line,
                t.col,
                format!("ident dimension must be an integer in 1..={MAX_DIM}"),
                None,
            );
        }
        self.expect_sym(')', "ident")?;
        Ok(ComplexMatrix::identity(value as usize))
    }

    // -----------------------------------------------------------------
    // Scalar expressions
    // -----------------------------------------------------------------

    /// Parses a scalar expression, returning its value and start position.
    fn scalar_expr(&mut self) -> Result<(ComplexScalar, usize, usize), ParseError> {
        self.depth += 1;
        if self.depth > MAX_EXPR_DEPTH {
            let t = self.peek().clone();
            return err(t.line, t.col, "expression nested too deeply", None);
        }
        let start = self.peek().clone();
        let mut acc = self.scalar_term()?;
        loop {
            match self.peek().tok {
                Tok::Sym('+') => {
                    self.bump();
                    acc += self.scalar_term()?;
                }
                Tok::Sym('-') => {
                    self.bump();
                    acc -= self.scalar_term()?;
                }
                _ => break,
            }
        }
        self.depth -= 1;
        Ok((acc, start.line, start.col))
    }

    fn scalar_term(&mut self) -> Result<ComplexScalar, ParseError> {
        let mut acc = self.scalar_factor()?;
        loop {
            match self.peek().tok {
                Tok::Sym('*') => {
                    self.bump();
                    acc *= self.scalar_factor()?;
                }
                Tok::Sym('/') => {
                    let t = self.bump();
                    let divisor = self.scalar_factor()?;
                    if divisor.norm() == 0.0 {
                        return err(t.line, t.col, "division by zero", None);
                    }
                    acc /= divisor;
                }
                _ => break,
            }
        }
        Ok(acc)
    }

    fn scalar_factor(&mut self) -> Result<ComplexScalar, ParseError> {
        if self.peek().tok == Tok::Sym('-') {
            self.bump();
            return Ok(-self.scalar_factor()?);
        }
        let t = self.bump();
        match &t.tok {
            Tok::Number(v) => Ok(ComplexScalar::new(*v, 0.0)),
            Tok::Imag(v) => Ok(ComplexScalar::new(0.0, *v)),
            Tok::Ident(name) => match name.as_str() {
                "pi" => Ok(ComplexScalar::new(std::f64::consts::PI, 0.0)),
                "sqrt2" => Ok(ComplexScalar::new(std::f64::consts::SQRT_2, 0.0)),
                _ => err(
                    t.line,
                    t.col,
                    format!("unknown constant `{name}`"),
                    Some("pi, sqrt2, or a number"),
                ),
            },
            Tok::Sym('(') => {
                self.depth += 1;
                if self.depth > MAX_EXPR_DEPTH {
                    return err(t.line, t.col, "expression nested too deeply", None);
                }
                let (value, _, _) = self.scalar_expr()?;
                if self.peek().tok == Tok::Eof {
                    return err(t.line, t.col, "unterminated group", Some("`)`"));
                }
                self.expect_sym(')', "a parenthesized expression")?;
                self.depth -= 1;
                Ok(value)
            }
            _ => err(
                t.line,
                t.col,
                format!("unexpected {} in a scalar expression", t.describe()),
                Some("a number"),
            ),
        }
    }
}
