//! Recursive-descent parser for the algebra syntax:
//!
//! ```text
//! expr    := scan | select | project | join | agg
//! scan    := IDENT
//! select  := "sigma" "[" pred "]" "(" expr ")"
//! project := "pi" "[" identList "]" "(" expr ")"
//! join    := "join" "[" eqList? "]" "(" expr "," expr ")"
//! agg     := "agg" "[" identList? ";" FN "(" IDENT? ")" "]" "(" expr ")"
//! pred    := comparison ("and" comparison)*
//! ```

use std::fmt;

use thiserror::Error;

use super::ast::{AggFn, CmpOp, Comparison, Expr, Operand, Predicate};
use crate::relmodel::{Decimal, Value};

/// Words that cannot be used as relation or attribute names.
pub const RESERVED: [&str; 6] = ["sigma", "pi", "join", "agg", "and", "null"];

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("syntax error at {line}:{column}: expected {}, found {found}", expected.join(" or "))]
pub struct SyntaxError {
    pub line: usize,
    pub column: usize,
    pub expected: Vec<String>,
    pub found: String,
}

#[derive(Clone, Debug, PartialEq)]
enum Tok {
    Ident(String),
    Number(Decimal),
    Str(String),
    Sym(&'static str),
    Eof,
}

impl fmt::Display for Tok {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Tok::Ident(s) => write!(f, "`{s}`"),
            Tok::Number(d) => write!(f, "number {d}"),
            Tok::Str(s) => write!(f, "string '{s}'"),
            Tok::Sym(s) => write!(f, "`{s}`"),
            Tok::Eof => f.write_str("end of input"),
        }
    }
}

#[derive(Clone, Copy, Debug)]
struct Pos {
    line: usize,
    column: usize,
}

const SYMBOLS: [&str; 12] = ["<=", ">=", "!=", "[", "]", "(", ")", ",", ";", "=", "<", ">"];

fn lex(text: &str) -> Result<Vec<(Tok, Pos)>, SyntaxError> {
    let chars: Vec<char> = text.chars().collect();
    let mut out = Vec::new();
    let (mut i, mut line, mut column) = (0, 1, 1);
    let err = |pos: Pos, expected: &str, found: String| SyntaxError {
        line: pos.line,
        column: pos.column,
        expected: vec![expected.to_string()],
        found,
    };

    while i < chars.len() {
        let c = chars[i];
        let pos = Pos { line, column };
        if c == '\n' {
            i += 1;
            line += 1;
            column = 1;
            continue;
        }
        if c.is_whitespace() {
            i += 1;
            column += 1;
            continue;
        }
        let start = i;
        if c.is_ascii_alphabetic() || c == '_' {
            while i < chars.len() && (chars[i].is_ascii_alphanumeric() || chars[i] == '_') {
                i += 1;
            }
            out.push((Tok::Ident(chars[start..i].iter().collect()), pos));
        } else if c.is_ascii_digit() || (c == '-' && chars.get(i + 1).is_some_and(char::is_ascii_digit)) {
            i += 1;
            while i < chars.len() && (chars[i].is_ascii_digit() || chars[i] == '.') {
                i += 1;
            }
            let lexeme: String = chars[start..i].iter().collect();
            let d = lexeme.parse().map_err(|_| err(pos, "a decimal number", format!("`{lexeme}`")))?;
            out.push((Tok::Number(d), pos));
        } else if c == '\'' {
            i += 1;
            let mut s = String::new();
            loop {
                match chars.get(i) {
                    None => return Err(err(pos, "closing `'`", "end of input".into())),
                    Some('\'') if chars.get(i + 1) == Some(&'\'') => {
                        s.push('\'');
                        i += 2;
                    }
                    Some('\'') => {
                        i += 1;
                        break;
                    }
                    Some('\n') => return Err(err(pos, "closing `'`", "newline".into())),
                    Some(&ch) => {
                        s.push(ch);
                        i += 1;
                    }
                }
            }
            out.push((Tok::Str(s), pos));
        } else if let Some(sym) = SYMBOLS.iter().find(|s| {
            let sc: Vec<char> = s.chars().collect();
            chars[i..].starts_with(&sc)
        }) {
            i += sym.len();
            out.push((Tok::Sym(sym), pos));
        } else {
            return Err(err(pos, "a token", format!("`{c}`")));
        }
        column += i - start;
    }
    out.push((Tok::Eof, Pos { line, column }));
    Ok(out)
}

struct Parser {
    toks: Vec<(Tok, Pos)>,
    at: usize,
}

impl Parser {
    fn peek(&self) -> &Tok {
        &self.toks[self.at].0
    }

    fn peek_at(&self, n: usize) -> &Tok {
        &self.toks[(self.at + n).min(self.toks.len() - 1)].0
    }

    fn fail<T>(&self, expected: &[&str]) -> Result<T, SyntaxError> {
        let (tok, pos) = &self.toks[self.at];
        Err(SyntaxError {
            line: pos.line,
            column: pos.column,
            expected: expected.iter().map(|s| s.to_string()).collect(),
            found: tok.to_string(),
        })
    }

    fn bump(&mut self) -> Tok {
        let t = self.toks[self.at].0.clone();
        if self.at + 1 < self.toks.len() {
            self.at += 1;
        }
        t
    }

    fn eat(&mut self, sym: &'static str) -> bool {
        if self.peek() == &Tok::Sym(sym) {
            self.bump();
            true
        } else {
            false
        }
    }

    fn expect(&mut self, sym: &'static str) -> Result<(), SyntaxError> {
        if self.eat(sym) {
            Ok(())
        } else {
            self.fail(&[&format!("`{sym}`")])
        }
    }

    fn ident(&mut self) -> Result<String, SyntaxError> {
        match self.peek() {
            Tok::Ident(s) if !RESERVED.contains(&s.as_str()) => {
                let s = s.clone();
                self.bump();
                Ok(s)
            }
            _ => self.fail(&["identifier"]),
        }
    }

    fn keyword(&self) -> Option<&'static str> {
        match (self.peek(), self.peek_at(1)) {
            (Tok::Ident(s), Tok::Sym("[")) => RESERVED[..4].iter().copied().find(|k| k == s),
            _ => None,
        }
    }

    fn expr(&mut self) -> Result<Expr, SyntaxError> {
        match self.keyword() {
            Some("sigma") => {
                self.bump();
                self.expect("[")?;
                let predicate = self.predicate()?;
                self.expect("]")?;
                let input = self.parenthesized()?;
                Ok(Expr::select(predicate, input))
            }
            Some("pi") => {
                self.bump();
                self.expect("[")?;
                let attrs = self.ident_list()?;
                self.expect("]")?;
                let input = self.parenthesized()?;
                Ok(Expr::Project { attrs, input: Box::new(input) })
            }
            Some("join") => {
                self.bump();
                self.expect("[")?;
                let mut on = Vec::new();
                if !matches!(self.peek(), Tok::Sym("]")) {
                    loop {
                        let l = self.ident()?;
                        self.expect("=")?;
                        let r = self.ident()?;
                        on.push((l, r));
                        if !self.eat(",") {
                            break;
                        }
                    }
                }
                self.expect("]")?;
                self.expect("(")?;
                let left = self.expr()?;
                self.expect(",")?;
                let right = self.expr()?;
                self.expect(")")?;
                Ok(Expr::Join { left: Box::new(left), right: Box::new(right), on })
            }
            Some("agg") => {
                self.bump();
                self.expect("[")?;
                let group_by = if matches!(self.peek(), Tok::Sym(";")) { Vec::new() } else { self.ident_list()? };
                self.expect(";")?;
                let func = match self.peek() {
                    Tok::Ident(s) => match AggFn::from_name(s) {
                        Some(f) => f,
                        None => return self.fail(&["avg", "sum", "count", "min", "max"]),
                    },
                    _ => return self.fail(&["avg", "sum", "count", "min", "max"]),
                };
                self.bump();
                self.expect("(")?;
                let target = if matches!(self.peek(), Tok::Sym(")")) { None } else { Some(self.ident()?) };
                self.expect(")")?;
                self.expect("]")?;
                let input = self.parenthesized()?;
                Ok(Expr::Aggregate { group_by, func, target, input: Box::new(input) })
            }
            _ => match self.peek() {
                Tok::Ident(s) if !RESERVED.contains(&s.as_str()) => Ok(Expr::Scan(self.ident()?)),
                _ => self.fail(&["relation name", "`sigma`", "`pi`", "`join`", "`agg`"]),
            },
        }
    }

    fn parenthesized(&mut self) -> Result<Expr, SyntaxError> {
        self.expect("(")?;
        let e = self.expr()?;
        self.expect(")")?;
        Ok(e)
    }

    fn ident_list(&mut self) -> Result<Vec<String>, SyntaxError> {
        let mut out = Vec::new();
        loop {
            out.push(self.ident()?);
            if !self.eat(",") {
                return Ok(out);
            }
        }
    }

    fn predicate(&mut self) -> Result<Predicate, SyntaxError> {
        let mut conjuncts = vec![self.comparison()?];
        while matches!(self.peek(), Tok::Ident(s) if s == "and") {
            self.bump();
            conjuncts.push(self.comparison()?);
        }
        Ok(Predicate { conjuncts })
    }

    fn comparison(&mut self) -> Result<Comparison, SyntaxError> {
        let attr = self.ident()?;
        let op = match self.peek() {
            Tok::Sym(s) => match CmpOp::ALL.into_iter().find(|op| op.symbol() == *s) {
                Some(op) => op,
                None => return self.fail(&["comparison operator"]),
            },
            _ => return self.fail(&["comparison operator"]),
        };
        self.bump();
        let rhs = match self.peek().clone() {
            Tok::Number(d) => {
                self.bump();
                Operand::Const(Value::Num(d))
            }
            Tok::Str(s) => {
                self.bump();
                Operand::Const(Value::Txt(s))
            }
            Tok::Ident(s) if s == "null" => {
                self.bump();
                Operand::Const(Value::Null)
            }
            Tok::Ident(_) => Operand::Attr(self.ident()?),
            _ => return self.fail(&["attribute", "number", "string"]),
        };
        Ok(Comparison { attr, op, rhs })
    }
}

/// Parses query text into an unvalidated expression.
pub fn parse(text: &str) -> Result<Expr, SyntaxError> {
    let mut p = Parser { toks: lex(text)?, at: 0 };
    let e = p.expr()?;
    if p.peek() != &Tok::Eof {
        return p.fail(&["end of input"]);
    }
    Ok(e)
}
