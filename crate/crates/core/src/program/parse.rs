//! Parser for the litmus DSL.
//!
//! ```text
//! node N1 { x=1, y=0 }
//! node N2 { z=0, w=1 }
//! thread T1 on N1 { y := N2.w; N2.z := x; x := 2 }
//! expect not-robust
//! ```

use super::raw::{RawInstr, RawNode, RawProcess, RawProgram, RawRef, RawThread};
use super::{Expectation, Program, ProgramError, Value};

#[derive(Clone, Debug, PartialEq, Eq)]
enum Tok {
    Ident(String),
    Int(Value),
    Sym(&'static str),
    Eof,
}

#[derive(Clone, Debug)]
struct Token {
    tok: Tok,
    line: usize,
    col: usize,
}

const SYMBOLS: [&str; 12] = [":=", "==", "!=", "{", "}", "(", ")", ",", ";", ".", "=", "-"];

fn lex(src: &str) -> Result<Vec<Token>, ProgramError> {
    let mut out = Vec::new();
    let chars: Vec<char> = src.chars().collect();
    let (mut i, mut line, mut col) = (0usize, 1usize, 1usize);
    let err = |line, col, message: String| ProgramError::Syntax { line, col, message };
    while i < chars.len() {
        let c = chars[i];
        if c == '\n' {
            i += 1;
            line += 1;
            col = 1;
            continue;
        }
        if c.is_whitespace() {
            i += 1;
            col += 1;
            continue;
        }
        if c == '#' {
            while i < chars.len() && chars[i] != '\n' {
                i += 1;
            }
            continue;
        }
        let (tl, tc) = (line, col);
        let negative = c == '-' && chars.get(i + 1).is_some_and(|d| d.is_ascii_digit());
        if c.is_ascii_digit() || negative {
            let start = i;
            i += 1;
            while i < chars.len() && chars[i].is_ascii_digit() {
                i += 1;
            }
            let text: String = chars[start..i].iter().collect();
            let v = text
                .parse::<Value>()
                .map_err(|_| err(tl, tc, format!("integer `{text}` out of range")))?;
            col += i - start;
            out.push(Token { tok: Tok::Int(v), line: tl, col: tc });
            continue;
        }
        if c.is_ascii_alphabetic() || c == '_' {
            let start = i;
            while i < chars.len() && (chars[i].is_ascii_alphanumeric() || chars[i] == '_') {
                i += 1;
            }
            col += i - start;
            out.push(Token {
                tok: Tok::Ident(chars[start..i].iter().collect()),
                line: tl,
                col: tc,
            });
            continue;
        }
        let rest: String = chars[i..(i + 2).min(chars.len())].iter().collect();
        let sym = SYMBOLS
            .iter()
            .find(|s| rest.starts_with(**s))
            .ok_or_else(|| err(tl, tc, format!("unexpected character `{c}`")))?;
        i += sym.len();
        col += sym.len();
        out.push(Token { tok: Tok::Sym(sym), line: tl, col: tc });
    }
    out.push(Token { tok: Tok::Eof, line, col });
    Ok(out)
}

const KEYWORDS: [&str; 12] = [
    "node", "thread", "on", "expect", "assume", "rfence", "poll", "nop", "choice", "or", "loop", "cas",
];

struct Parser {
    toks: Vec<Token>,
    pos: usize,
}

impl Parser {
    fn peek(&self) -> &Tok {
        &self.toks[self.pos].tok
    }

    fn peek_at(&self, k: usize) -> &Tok {
        &self.toks[(self.pos + k).min(self.toks.len() - 1)].tok
    }

    fn error<T>(&self, message: impl Into<String>) -> Result<T, ProgramError> {
        let t = &self.toks[self.pos];
        Err(ProgramError::Syntax { line: t.line, col: t.col, message: message.into() })
    }

    fn describe(&self) -> String {
        match self.peek() {
            Tok::Ident(s) => format!("`{s}`"),
            Tok::Int(v) => format!("`{v}`"),
            Tok::Sym(s) => format!("`{s}`"),
            Tok::Eof => "end of input".to_string(),
        }
    }

    fn bump(&mut self) -> Tok {
        let t = self.toks[self.pos].tok.clone();
        if self.pos + 1 < self.toks.len() {
            self.pos += 1;
        }
        t
    }

    fn eat_sym(&mut self, s: &str) -> bool {
        if matches!(self.peek(), Tok::Sym(x) if *x == s) {
            self.bump();
            true
        } else {
            false
        }
    }

    fn expect_sym(&mut self, s: &str) -> Result<(), ProgramError> {
        if self.eat_sym(s) {
            Ok(())
        } else {
            self.error(format!("expected `{s}`, found {}", self.describe()))
        }
    }

    fn is_kw(&self, kw: &str) -> bool {
        matches!(self.peek(), Tok::Ident(s) if s == kw)
    }

    fn expect_kw(&mut self, kw: &str) -> Result<(), ProgramError> {
        if self.is_kw(kw) {
            self.bump();
            Ok(())
        } else {
            self.error(format!("expected `{kw}`, found {}", self.describe()))
        }
    }

    fn ident(&mut self) -> Result<String, ProgramError> {
        match self.peek().clone() {
            Tok::Ident(s) if !KEYWORDS.contains(&s.as_str()) => {
                self.bump();
                Ok(s)
            }
            _ => self.error(format!("expected identifier, found {}", self.describe())),
        }
    }

    fn int(&mut self) -> Result<Value, ProgramError> {
        match *self.peek() {
            Tok::Int(v) => {
                self.bump();
                Ok(v)
            }
            _ => self.error(format!("expected integer, found {}", self.describe())),
        }
    }

    fn program(&mut self) -> Result<RawProgram, ProgramError> {
        let mut raw = RawProgram::default();
        loop {
            match self.peek() {
                Tok::Eof => break,
                Tok::Ident(s) if s == "node" => raw.nodes.push(self.node()?),
                Tok::Ident(s) if s == "thread" => raw.threads.push(self.thread()?),
                Tok::Ident(s) if s == "expect" => {
                    self.bump();
                    if self.is_kw("robust") {
                        self.bump();
                        raw.expect = Some(Expectation::Robust);
                    } else if self.is_kw("not") {
                        self.bump();
                        self.expect_sym("-")?;
                        self.expect_kw("robust")?;
                        raw.expect = Some(Expectation::NotRobust);
                    } else {
                        return self.error("expected `robust` or `not-robust` after `expect`");
                    }
                }
                _ => return self.error(format!("expected `node`, `thread` or `expect`, found {}", self.describe())),
            }
        }
        Ok(raw)
    }

    fn node(&mut self) -> Result<RawNode, ProgramError> {
        self.expect_kw("node")?;
        let name = self.ident()?;
        self.expect_sym("{")?;
        let mut locations = Vec::new();
        while !self.eat_sym("}") {
            let loc = self.ident()?;
            self.expect_sym("=")?;
            let v = self.int()?;
            locations.push((loc, v));
            if !self.eat_sym(",") && !self.eat_sym(";") && !matches!(self.peek(), Tok::Sym("}")) {
                return self.error(format!("expected `,` or `}}`, found {}", self.describe()));
            }
        }
        Ok(RawNode { name, locations })
    }

    fn thread(&mut self) -> Result<RawThread, ProgramError> {
        self.expect_kw("thread")?;
        let name = self.ident()?;
        self.expect_kw("on")?;
        let node = self.ident()?;
        let body = self.block()?;
        Ok(RawThread { name, node, body })
    }

    fn block(&mut self) -> Result<RawProcess, ProgramError> {
        self.expect_sym("{")?;
        let mut stmts = Vec::new();
        loop {
            while self.eat_sym(";") {}
            if self.eat_sym("}") {
                break;
            }
            stmts.push(self.stmt()?);
        }
        Ok(match stmts.len() {
            0 => RawProcess::Nop,
            1 => stmts.pop().unwrap(),
            _ => RawProcess::Seq(stmts),
        })
    }

    fn stmt(&mut self) -> Result<RawProcess, ProgramError> {
        let kw = match self.peek() {
            Tok::Ident(s) => s.clone(),
            _ => return self.error(format!("expected statement, found {}", self.describe())),
        };
        let instr = |i| Ok(RawProcess::Instr(i));
        match kw.as_str() {
            "nop" => {
                self.bump();
                Ok(RawProcess::Nop)
            }
            "assume" => {
                self.bump();
                let loc = self.ident()?;
                if self.eat_sym("==") {
                    instr(RawInstr::AssumeEq(loc, self.int()?))
                } else if self.eat_sym("!=") {
                    instr(RawInstr::AssumeNeq(loc, self.int()?))
                } else {
                    self.error(format!("expected `==` or `!=`, found {}", self.describe()))
                }
            }
            "rfence" => {
                self.bump();
                instr(RawInstr::Rfence(self.ident()?))
            }
            "poll" => {
                self.bump();
                instr(RawInstr::Poll(self.ident()?))
            }
            "choice" => {
                self.bump();
                let mut branches = vec![self.block()?];
                while self.is_kw("or") {
                    self.bump();
                    branches.push(self.block()?);
                }
                Ok(if branches.len() == 1 { branches.pop().unwrap() } else { RawProcess::Choice(branches) })
            }
            "loop" => {
                self.bump();
                Ok(RawProcess::Loop(Box::new(self.block()?)))
            }
            _ => {
                let first = self.ident()?;
                if self.eat_sym(".") {
                    let loc = self.ident()?;
                    self.expect_sym(":=")?;
                    let src = self.ident()?;
                    return instr(RawInstr::RemoteWrite { dst: RawRef::remote(first, loc), src });
                }
                self.expect_sym(":=")?;
                match self.peek().clone() {
                    Tok::Int(v) => {
                        self.bump();
                        instr(RawInstr::Write(first, v))
                    }
                    Tok::Ident(s) if s == "cas" => {
                        self.bump();
                        self.expect_sym("(")?;
                        let target = self.ident()?;
                        self.expect_sym(",")?;
                        let expected = self.int()?;
                        self.expect_sym(",")?;
                        let new = self.int()?;
                        self.expect_sym(")")?;
                        instr(RawInstr::Cas { dst: first, target, expected, new })
                    }
                    Tok::Ident(_) if matches!(self.peek_at(1), Tok::Sym(".")) => {
                        let node = self.ident()?;
                        self.expect_sym(".")?;
                        let loc = self.ident()?;
                        instr(RawInstr::RemoteRead { dst: first, src: RawRef::remote(node, loc) })
                    }
                    _ => self.error(format!(
                        "expected integer, `cas(..)` or `<node>.<loc>` after `:=`, found {}",
                        self.describe()
                    )),
                }
            }
        }
    }
}

/// Parse the raw, unvalidated form of a DSL source.
pub fn parse_raw(text: &str) -> Result<RawProgram, ProgramError> {
    let toks = lex(text)?;
    Parser { toks, pos: 0 }.program()
}

pub fn parse_program(text: &str) -> Result<Program, ProgramError> {
    Program::from_raw(&parse_raw(text)?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::program::{Instr, Process};

    #[test]
    fn smallest_program() {
        let p = parse_program("node N1 { x=0 } thread T1 on N1 { x := 1 }").unwrap();
        assert_eq!(p.nodes().len(), 1);
        assert_eq!(p.threads().len(), 1);
        let x = p.loc_by_name("x").unwrap();
        assert_eq!(p.thread(1).body, Process::Instr(Instr::Write { loc: x, value: 1 }));
        assert_eq!(p.value_domain(), &[0, 1]);
    }

    #[test]
    fn worked_example_program() {
        let src = "node N1 { x=1, y=0 }\nnode N2 { z=0, w=1 }\n\
                   thread T1 on N1 { y := N2.w; N2.z := x; x := 2 }\nexpect not-robust\n";
        let p = parse_program(src).unwrap();
        assert_eq!(p.nodes().len(), 2);
        assert_eq!(p.threads().len(), 1);
        assert_eq!(p.thread(1).body.instructions().len(), 3);
        assert_eq!(p.expectation(), Some(Expectation::NotRobust));
        assert_eq!(p.value_domain(), &[0, 1, 2]);
        let n2 = p.node_by_name("N2").unwrap();
        assert_eq!(p.node_of(p.loc_by_name("w").unwrap()), n2);
    }

    #[test]
    fn malformed_statement_is_a_syntax_error() {
        let e = parse_program("thread T1 on N1 { x := }").unwrap_err();
        assert!(matches!(e, ProgramError::Syntax { line: 1, .. }), "{e}");
    }

    #[test]
    fn semantic_errors() {
        let undeclared = parse_program("node N1 { x=0 } thread T on N1 { q := 1 }").unwrap_err();
        assert_eq!(undeclared, ProgramError::UndeclaredLocation("q".into()));
        let own = parse_program("node N1 { x=0, y=0 } thread T on N1 { x := N1.y }").unwrap_err();
        assert!(matches!(own, ProgramError::RemoteToOwnNode { .. }));
        let dup = parse_program("node N1 { x=0 } node N2 { x=1 }").unwrap_err();
        assert_eq!(dup, ProgramError::DuplicateLocation("x".into()));
        let wrong_node = parse_program("node N1 { x=0 } node N2 { z=0 } node N3 { w=0 } thread T on N1 { x := N2.w }")
            .unwrap_err();
        assert_eq!(wrong_node, ProgramError::UndeclaredLocation("N2.w".into()));
        let not_local = parse_program("node N1 { x=0 } node N2 { z=0 } thread T on N1 { z := 1 }").unwrap_err();
        assert!(matches!(not_local, ProgramError::NotLocal { .. }));
    }

    #[test]
    fn structured_statements_and_comments() {
        let src = "# header\nnode A { a=0, b=0 }\nnode B { c=0 }\n\
                   thread T on A {\n  choice { a := 1 } or { b := cas(a, 0, 2) }\n  loop { assume a != 1; poll B }\n  rfence B; B.c := a\n}\n";
        let p = parse_program(src).unwrap();
        let Process::Seq(parts) = &p.thread(1).body else { panic!() };
        assert_eq!(parts.len(), 4);
        assert!(matches!(parts[0], Process::Choice(ref b) if b.len() == 2));
        assert!(matches!(parts[1], Process::Star(_)));
        assert_eq!(p.value_domain(), &[0, 1, 2]);
    }

    #[test]
    fn negative_values() {
        let p = parse_program("node N { x=-1 } thread T on N { assume x == -1 }").unwrap();
        assert_eq!(p.value_domain(), &[-1]);
    }
}
