use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::{assume, choice, plus, put, receive_ack, RawProcess, BOT, TOP};
use crate::program::{Program, RawProgram, Value};

/// A PCP instance over positive letters: pairs `(u_i, v_i)` for
/// `i = 1..=N`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct PcpInstance {
    pub u: Vec<Vec<Value>>,
    pub v: Vec<Vec<Value>>,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum PcpError {
    #[error("the instance has no words")]
    NoWords,
    #[error("word lists differ in length ({0} and {1})")]
    LengthMismatch(usize, usize),
    #[error("word {0} is empty")]
    EmptyWord(usize),
    #[error("letter {0} is not positive")]
    BadLetter(Value),
}

impl PcpInstance {
    fn validate(&self) -> Result<(), PcpError> {
        if self.u.is_empty() {
            return Err(PcpError::NoWords);
        }
        if self.u.len() != self.v.len() {
            return Err(PcpError::LengthMismatch(self.u.len(), self.v.len()));
        }
        for (i, (a, b)) in self.u.iter().zip(&self.v).enumerate() {
            if a.is_empty() || b.is_empty() {
                return Err(PcpError::EmptyWord(i + 1));
            }
        }
        match self.letters().into_iter().find(|&l| l <= BOT) {
            Some(l) => Err(PcpError::BadLetter(l)),
            None => Ok(()),
        }
    }

    fn letters(&self) -> BTreeSet<Value> {
        self.u.iter().chain(&self.v).flatten().copied().collect()
    }

    /// The end marker: larger than every index and letter.
    pub fn hash(&self) -> Value {
        let top = self.letters().into_iter().max().unwrap_or(0).max(self.u.len() as Value);
        top + 1
    }
}

fn consts(prefix: &str, values: impl IntoIterator<Item = Value>, hash: Value) -> Vec<(String, Value)> {
    let mut out: Vec<(String, Value)> = values.into_iter().map(|v| (format!("{prefix}k{v}"), v)).collect();
    out.push((format!("{prefix}hash"), hash));
    out.push((format!("{prefix}top"), TOP));
    out
}

fn as_refs(v: &[(String, Value)]) -> Vec<(&str, Value)> {
    v.iter().map(|(n, x)| (n.as_str(), *x)).collect()
}

/// Letter forwarder: for each received index `i`, send the letters of
/// `words[i - 1]` to the matcher.
fn forwarder(p: &str, words: &[Vec<Value>], x: &str, f: &str, y: &str, g: &str) -> Vec<RawProcess> {
    let branches = words
        .iter()
        .enumerate()
        .map(|(i, w)| {
            let mut b = vec![assume(x, i as Value + 1)];
            for &l in w {
                b.push(put("N4", y, &format!("{p}k{l}")));
                b.push(put("N4", g, &format!("{p}top")));
            }
            RawProcess::Seq(b)
        })
        .collect();
    let mut round = vec![choice(branches)];
    round.extend(receive_ack(x, f));
    round
}

/// The four-process program whose threads can all terminate iff the
/// instance has a solution.
pub fn gen_pcp(inst: &PcpInstance) -> Result<Program, PcpError> {
    inst.validate()?;
    let n = inst.u.len() as Value;
    let hash = inst.hash();
    let used = |ws: &[Vec<Value>]| ws.iter().flatten().copied().collect::<BTreeSet<_>>();
    let c1 = consts("p1", 1..=n, hash);
    let mut n2 = vec![("x1".to_string(), BOT), ("f1".to_string(), BOT)];
    n2.extend(consts("p2", used(&inst.u), hash));
    let mut n3 = vec![("x2".to_string(), BOT), ("f2".to_string(), BOT)];
    n3.extend(consts("p3", used(&inst.v), hash));
    let mut raw = RawProgram::default();
    raw.node("N1", &as_refs(&c1))
        .node("N2", &as_refs(&n2))
        .node("N3", &as_refs(&n3))
        .node("N4", &[("y1", BOT), ("y2", BOT), ("g1", BOT), ("g2", BOT)]);

    let pick = (1..=n)
        .map(|i| {
            let k = format!("p1k{i}");
            RawProcess::Seq(vec![put("N2", "x1", &k), put("N2", "f1", "p1top"), put("N3", "x2", &k), put("N3", "f2", "p1top")])
        })
        .collect();
    let mut p1 = plus(vec![choice(pick)]);
    p1.extend([put("N2", "x1", "p1hash"), put("N3", "x2", "p1hash")]);

    let mut p2 = plus(forwarder("p2", &inst.u, "x1", "f1", "y1", "g1"));
    p2.extend([assume("x1", hash), assume("f1", BOT), put("N4", "y1", "p2hash")]);
    let mut p3 = plus(forwarder("p3", &inst.v, "x2", "f2", "y2", "g2"));
    p3.extend([assume("x2", hash), assume("f2", BOT), put("N4", "y2", "p3hash")]);

    let matches = inst.letters().into_iter().map(|l| RawProcess::Seq(vec![assume("y1", l), assume("y2", l)])).collect();
    let mut round = vec![choice(matches)];
    round.extend(receive_ack("y1", "g1"));
    round.extend(receive_ack("y2", "g2"));
    let mut p4 = plus(round);
    p4.extend([assume("y1", hash), assume("g1", BOT), assume("y2", hash), assume("g2", BOT)]);

    raw.thread("P1", "N1", p1).thread("P2", "N2", p2).thread("P3", "N3", p3).thread("P4", "N4", p4);
    Ok(Program::from_raw(&raw).expect("generated program is valid"))
}
