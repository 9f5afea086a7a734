//! Graphviz export, plus a small validator for the subset of the DOT
//! grammar we emit (no subgraphs, no HTML strings, no ports).

use std::fmt::Write as _;

use thiserror::Error;

use crate::efficiency::PayoffReport;
use crate::model::Network;
use crate::report::fmt9;

/// Light to dark, one colour per payoff quintile.
const PALETTE: [&str; 5] = ["#eff3ff", "#bdd7e7", "#6baed6", "#3182bd", "#08519c"];

fn quintile(normalized: f64) -> usize {
    ((normalized.max(0.0) * 5.0).floor() as usize).min(4)
}

/// Undirected DOT graph; edges are labelled with their distance (5 decimals)
/// and nodes are filled by normalized-payoff quintile when a report is given.
pub fn export_dot(net: &Network, report: Option<&PayoffReport<f64>>) -> String {
    let mut out = String::from("graph collaboration {\n");
    out.push_str("  node [shape=circle, style=filled];\n");
    for &p in net.partners() {
        let idx = report.and_then(|r| r.ids.iter().position(|&x| x == p));
        match (report, idx) {
            (Some(r), Some(i)) => {
                let bucket = quintile(r.normalized[i]);
                let font = if bucket >= 3 { "white" } else { "black" };
                let _ = writeln!(
                    out,
                    "  {p} [fillcolor=\"{}\", fontcolor={font}, payoff=\"{}\"];",
                    PALETTE[bucket],
                    fmt9(r.payoffs[i])
                );
            }
            _ => {
                let _ = writeln!(out, "  {p} [fillcolor=\"white\"];");
            }
        }
    }
    for (a, b, months) in net.edges() {
        let _ = writeln!(
            out,
            "  {a} -- {b} [label=\"{:.5}\", months={months}];",
            1.0 / months as f64
        );
    }
    out.push_str("}\n");
    out
}

#[derive(Debug, Error, PartialEq, Eq)]
#[error("DOT syntax error at token {position}: {message}")]
pub struct DotError {
    pub position: usize,
    pub message: String,
}

#[derive(Debug, Clone, PartialEq, Eq)]
enum Tok {
    Id(String),
    LBrace,
    RBrace,
    LBracket,
    RBracket,
    Eq,
    Semi,
    Comma,
    Edge(&'static str),
}

fn tokenize(text: &str) -> Result<Vec<Tok>, DotError> {
    let chars: Vec<char> = text.chars().collect();
    let mut toks = Vec::new();
    let mut i = 0;
    let err = |position, message: &str| DotError {
        position,
        message: message.into(),
    };
    while i < chars.len() {
        let c = chars[i];
        match c {
            c if c.is_whitespace() => i += 1,
            '{' => (toks.push(Tok::LBrace), i += 1).1,
            '}' => (toks.push(Tok::RBrace), i += 1).1,
            '[' => (toks.push(Tok::LBracket), i += 1).1,
            ']' => (toks.push(Tok::RBracket), i += 1).1,
            '=' => (toks.push(Tok::Eq), i += 1).1,
            ';' => (toks.push(Tok::Semi), i += 1).1,
            ',' => (toks.push(Tok::Comma), i += 1).1,
            '-' if chars.get(i + 1) == Some(&'-') => (toks.push(Tok::Edge("--")), i += 2).1,
            '-' if chars.get(i + 1) == Some(&'>') => (toks.push(Tok::Edge("->")), i += 2).1,
            '"' => {
                let mut s = String::new();
                i += 1;
                loop {
                    match chars.get(i) {
                        None => return Err(err(toks.len(), "unterminated string")),
                        Some('\\') => {
                            if let Some(&n) = chars.get(i + 1) {
                                s.push(n);
                            }
                            i += 2;
                        }
                        Some('"') => {
                            i += 1;
                            break;
                        }
                        Some(&ch) => {
                            s.push(ch);
                            i += 1;
                        }
                    }
                }
                toks.push(Tok::Id(s));
            }
            c if c.is_ascii_digit() || c == '.' || c == '-' => {
                let start = i;
                i += 1;
                while i < chars.len() && (chars[i].is_ascii_digit() || chars[i] == '.') {
                    i += 1;
                }
                let s: String = chars[start..i].iter().collect();
                if s.parse::<f64>().is_err() {
                    return Err(err(toks.len(), "malformed numeral"));
                }
                toks.push(Tok::Id(s));
            }
            c if c.is_alphabetic() || c == '_' => {
                let start = i;
                while i < chars.len() && (chars[i].is_alphanumeric() || chars[i] == '_') {
                    i += 1;
                }
                toks.push(Tok::Id(chars[start..i].iter().collect()));
            }
            _ => return Err(err(toks.len(), &format!("unexpected character {c:?}"))),
        }
    }
    Ok(toks)
}

struct Parser {
    toks: Vec<Tok>,
    pos: usize,
    edge_op: &'static str,
}

impl Parser {
    fn fail<T>(&self, message: impl Into<String>) -> Result<T, DotError> {
        Err(DotError {
            position: self.pos,
            message: message.into(),
        })
    }

    fn peek(&self) -> Option<&Tok> {
        self.toks.get(self.pos)
    }

    fn eat(&mut self, t: &Tok) -> bool {
        if self.peek() == Some(t) {
            self.pos += 1;
            true
        } else {
            false
        }
    }

    fn id(&mut self) -> Result<String, DotError> {
        match self.peek() {
            Some(Tok::Id(s)) => {
                let s = s.clone();
                self.pos += 1;
                Ok(s)
            }
            other => self.fail(format!("expected identifier, found {other:?}")),
        }
    }

    fn keyword(&self, word: &str) -> bool {
        matches!(self.peek(), Some(Tok::Id(s)) if s.eq_ignore_ascii_case(word))
    }

    fn graph(&mut self) -> Result<(), DotError> {
        if self.keyword("strict") {
            self.pos += 1;
        }
        if self.keyword("graph") {
            self.edge_op = "--";
        } else if self.keyword("digraph") {
            self.edge_op = "->";
        } else {
            return self.fail("expected `graph` or `digraph`");
        }
        self.pos += 1;
        if matches!(self.peek(), Some(Tok::Id(_))) {
            self.pos += 1;
        }
        if !self.eat(&Tok::LBrace) {
            return self.fail("expected `{`");
        }
        while !self.eat(&Tok::RBrace) {
            if self.peek().is_none() {
                return self.fail("unexpected end of input, expected `}`");
            }
            self.stmt()?;
            self.eat(&Tok::Semi);
        }
        if self.pos != self.toks.len() {
            return self.fail("trailing tokens after graph body");
        }
        Ok(())
    }

    fn stmt(&mut self) -> Result<(), DotError> {
        if ["graph", "node", "edge"].iter().any(|k| self.keyword(k)) {
            self.pos += 1;
            return self.attr_list(true);
        }
        self.id()?;
        if self.eat(&Tok::Eq) {
            self.id()?;
            return Ok(());
        }
        while let Some(Tok::Edge(op)) = self.peek() {
            if *op != self.edge_op {
                return self.fail(format!("edge operator `{op}` not allowed here"));
            }
            self.pos += 1;
            self.id()?;
        }
        self.attr_list(false)
    }

    fn attr_list(&mut self, required: bool) -> Result<(), DotError> {
        if required && self.peek() != Some(&Tok::LBracket) {
            return self.fail("expected `[`");
        }
        while self.eat(&Tok::LBracket) {
            while !self.eat(&Tok::RBracket) {
                self.id()?;
                if !self.eat(&Tok::Eq) {
                    return self.fail("expected `=` in attribute");
                }
                self.id()?;
                if !self.eat(&Tok::Comma) {
                    self.eat(&Tok::Semi);
                }
            }
        }
        Ok(())
    }
}

/// Checks `text` against the DOT grammar subset described above.
pub fn validate(text: &str) -> Result<(), DotError> {
    let toks = tokenize(text)?;
    Parser {
        toks,
        pos: 0,
        edge_op: "--",
    }
    .graph()
}
