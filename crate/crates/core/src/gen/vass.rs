use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::{assume, choice, instr, put, write, RawProcess};
use crate::program::RawRef;
use crate::program::{Program, RawInstr, RawProgram, Value};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct VassTransition {
    pub from: usize,
    /// Counter index in `1..=counters`.
    pub counter: usize,
    /// `+1` or `-1`.
    pub delta: i8,
    pub to: usize,
}

/// A vector addition system with states `0..states`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct VassSpec {
    pub states: usize,
    pub counters: usize,
    pub transitions: Vec<VassTransition>,
    pub initial: usize,
    #[serde(default)]
    pub accepting: Option<usize>,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum VassError {
    #[error("state {0} is not declared")]
    UnknownState(usize),
    #[error("counter {0} is out of range")]
    UnknownCounter(usize),
    #[error("transition delta must be +1 or -1, found {0}")]
    BadDelta(i8),
}

impl VassSpec {
    pub fn validate(&self) -> Result<(), VassError> {
        let state = |q: usize| if q < self.states { Ok(()) } else { Err(VassError::UnknownState(q)) };
        state(self.initial)?;
        if let Some(a) = self.accepting {
            state(a)?;
        }
        for t in &self.transitions {
            state(t.from)?;
            state(t.to)?;
            if t.counter == 0 || t.counter > self.counters {
                return Err(VassError::UnknownCounter(t.counter));
            }
            if t.delta != 1 && t.delta != -1 {
                return Err(VassError::BadDelta(t.delta));
            }
        }
        Ok(())
    }
}

/// The leader program `(C_1 + ... + C_k + C_a)*` simulating `spec`. With
/// `gadget`, reaching the accepting state runs a non-robust fragment on
/// fresh locations and a fresh node.
pub fn gen_vass(spec: &VassSpec, gadget: bool) -> Result<Program, VassError> {
    spec.validate()?;
    let mut raw = RawProgram::default();
    let mut leader: Vec<(String, Value)> = vec![("q".into(), spec.initial as Value), ("one".into(), 1)];
    if gadget {
        leader.extend([("gx".into(), 1), ("gy".into(), 0)]);
    }
    let ls: Vec<(&str, Value)> = leader.iter().map(|(n, v)| (n.as_str(), *v)).collect();
    raw.node("L", &ls);
    for c in 1..=spec.counters {
        raw.node(&format!("C{c}"), &[(format!("x{c}").as_str(), 0)]);
    }
    if gadget {
        raw.node("G", &[("gz", 0), ("gw", 1)]);
    }
    let mut alts: Vec<RawProcess> = spec
        .transitions
        .iter()
        .map(|t| {
            let node = format!("C{}", t.counter);
            let op = if t.delta > 0 {
                put(&node, &format!("x{}", t.counter), "one")
            } else {
                instr(RawInstr::Poll(node))
            };
            RawProcess::Seq(vec![assume("q", t.from as Value), op, write("q", t.to as Value)])
        })
        .collect();
    if let Some(a) = spec.accepting {
        let mut check = vec![assume("q", a as Value)];
        if gadget {
            check.extend([
                instr(RawInstr::RemoteRead { dst: "gy".into(), src: RawRef::remote("G", "gw") }),
                put("G", "gz", "gx"),
                write("gx", 2),
            ]);
        }
        alts.push(RawProcess::Seq(check));
    }
    let body = if alts.is_empty() { vec![RawProcess::Nop] } else { vec![RawProcess::Loop(Box::new(choice(alts)))] };
    raw.thread("Leader", "L", body);
    Ok(Program::from_raw(&raw).expect("generated program is valid"))
}
