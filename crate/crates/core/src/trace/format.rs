//! Line-oriented event listing used to exchange linearisations.
//!
//! Each line is `tid iota kind loc v_r v_w nbar`, with `-` for absent
//! fields, for example `1 3 nlR x 2 - N2`. Blank lines and `#` comments
//! are ignored. When no initialisation events (thread 0) are listed, the
//! program's are prepended.

use std::fmt::Write;

use thiserror::Error;

use super::{init_events, Event};
use crate::program::{Kind, Label, Program, Symbols, Value};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("line {line}: {message}")]
pub struct FormatError {
    pub line: usize,
    pub message: String,
}

pub fn parse_linearisation(text: &str, p: &Program) -> Result<Vec<Event>, FormatError> {
    let sym = p.symbols();
    let mut out = Vec::new();
    for (k, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let err = |message: String| FormatError { line: k + 1, message };
        let f: Vec<&str> = line.split_whitespace().collect();
        if f.len() != 7 {
            return Err(err(format!("expected 7 fields, found {}", f.len())));
        }
        let num = |s: &str, what: &str| s.parse::<usize>().map_err(|_| err(format!("bad {what} `{s}`")));
        let opt_val = |s: &str| -> Result<Option<Value>, FormatError> {
            if s == "-" {
                Ok(None)
            } else {
                s.parse().map(Some).map_err(|_| err(format!("bad value `{s}`")))
            }
        };
        let tid = num(f[0], "thread id")?;
        let iota = num(f[1], "program counter")?;
        let kind = Kind::parse(f[2]).ok_or_else(|| err(format!("unknown kind `{}`", f[2])))?;
        let loc = match f[3] {
            "-" => None,
            s => Some(sym.loc(s).ok_or_else(|| err(format!("unknown location `{s}`")))?),
        };
        let node = match f[6] {
            "-" => None,
            s => Some(sym.node(s).ok_or_else(|| err(format!("unknown node `{s}`")))?),
        };
        let label = Label::from_parts(kind, loc, opt_val(f[4])?, opt_val(f[5])?, node).map_err(err)?;
        out.push(Event::new(tid, iota, label));
    }
    if !out.iter().any(Event::is_init) {
        let mut full = init_events(p);
        full.extend(out);
        out = full;
    }
    Ok(out)
}

pub fn write_linearisation(events: &[Event], sym: &Symbols) -> String {
    let mut out = String::new();
    let opt = |v: Option<Value>| v.map_or("-".to_string(), |v| v.to_string());
    for e in events {
        let l = &e.label;
        let _ = writeln!(
            out,
            "{} {} {} {} {} {} {}",
            e.tid,
            e.iota,
            l.kind(),
            l.loc().map_or("-", |x| sym.loc_name(x)),
            opt(l.read_value()),
            opt(l.write_value()),
            l.remote().map_or("-", |n| sym.node_name(n)),
        );
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::program::parse_program;

    #[test]
    fn round_trip_listing() {
        let p = parse_program("node N1 { x=1, y=0 } node N2 { z=0, w=1 } thread T on N1 { N2.z := x }").unwrap();
        let text = "1 1 nlR x 1 - N2\n1 2 nrW z - 1 N2\n";
        let evs = parse_linearisation(text, &p).unwrap();
        assert_eq!(evs.len(), 6);
        let again = parse_linearisation(&write_linearisation(&evs, &p.symbols()), &p).unwrap();
        assert_eq!(evs, again);
    }

    #[test]
    fn errors_carry_lines() {
        let p = parse_program("node N1 { x=0 }").unwrap();
        let e = parse_linearisation("\n1 1 lW q - 1 -\n", &p).unwrap_err();
        assert_eq!(e.line, 2);
        let e = parse_linearisation("1 1 lW x - - -\n", &p).unwrap_err();
        assert!(e.message.contains("written value"));
    }
}
