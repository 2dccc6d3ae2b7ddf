//! Pretty-printer producing DSL text that parses back to the same program.

use std::fmt::Write;

use super::{Expectation, Instr, Process, Program};

fn instr(p: &Program, i: &Instr) -> String {
    let l = |x: super::LocId| p.locations()[x.index()].name.as_str();
    let n = |x: super::NodeId| p.nodes()[x.index()].name.as_str();
    match *i {
        Instr::Write { loc, value } => format!("{} := {value}", l(loc)),
        Instr::AssumeEq { loc, value } => format!("assume {} == {value}", l(loc)),
        Instr::AssumeNeq { loc, value } => format!("assume {} != {value}", l(loc)),
        Instr::Cas { dst, target, expected, new } => {
            format!("{} := cas({}, {expected}, {new})", l(dst), l(target))
        }
        Instr::RemoteRead { dst, src, node } => format!("{} := {}.{}", l(dst), n(node), l(src)),
        Instr::RemoteWrite { dst, src, node } => format!("{}.{} := {}", n(node), l(dst), l(src)),
        Instr::Rfence(node) => format!("rfence {}", n(node)),
        Instr::Poll(node) => format!("poll {}", n(node)),
    }
}

fn stmts(p: &Program, proc_: &Process, indent: usize, out: &mut String) {
    let pad = "  ".repeat(indent);
    match proc_ {
        Process::Seq(ps) => ps.iter().for_each(|q| stmts(p, q, indent, out)),
        Process::Nop => {
            let _ = writeln!(out, "{pad}nop");
        }
        Process::Instr(i) => {
            let _ = writeln!(out, "{pad}{}", instr(p, i));
        }
        Process::Choice(ps) => {
            for (k, q) in ps.iter().enumerate() {
                let head = if k == 0 { format!("{pad}choice {{") } else { format!("{pad}}} or {{") };
                let _ = writeln!(out, "{head}");
                stmts(p, q, indent + 1, out);
            }
            let _ = writeln!(out, "{pad}}}");
        }
        Process::Star(body) => {
            let _ = writeln!(out, "{pad}loop {{");
            stmts(p, body, indent + 1, out);
            let _ = writeln!(out, "{pad}}}");
        }
    }
}

pub(super) fn print_program(p: &Program) -> String {
    let mut out = String::new();
    for n in p.nodes() {
        let locs: Vec<String> = n
            .locations
            .iter()
            .map(|l| {
                let loc = &p.locations()[l.index()];
                format!("{}={}", loc.name, loc.init)
            })
            .collect();
        let _ = writeln!(out, "node {} {{ {} }}", n.name, locs.join(", "));
    }
    for t in p.threads() {
        let _ = writeln!(out, "thread {} on {} {{", t.name, p.nodes()[t.node.index()].name);
        stmts(p, &t.body, 1, &mut out);
        let _ = writeln!(out, "}}");
    }
    match p.expectation() {
        Some(Expectation::Robust) => out.push_str("expect robust\n"),
        Some(Expectation::NotRobust) => out.push_str("expect not-robust\n"),
        None => {}
    }
    out
}

#[cfg(test)]
mod tests {
    use crate::program::parse_program;

    #[test]
    fn round_trip() {
        let src = "node A { a=0, b=1 }\nnode B { c=0, d=2 }\n\
                   thread T on A { choice { a := 1 } or { nop } or { b := cas(a, 0, 2) }\n\
                   loop { assume a != 1; poll B; choice { rfence B } }\n B.c := a; b := B.d }\n\
                   thread U on B { assume d == 2 }\nexpect robust\n";
        let p = parse_program(src).unwrap();
        let text = p.to_dsl();
        let q = parse_program(&text).unwrap();
        assert_eq!(p, q, "{text}");
    }
}
