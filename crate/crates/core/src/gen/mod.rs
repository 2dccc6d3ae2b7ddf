//! Program generators: VASS simulation, PCP reduction and the alternating
//! bit protocol.

mod abp;
mod pcp;
mod vass;

pub use abp::{gen_abp, gen_abp_pair};
pub use pcp::{gen_pcp, PcpError, PcpInstance};
pub use vass::{gen_vass, VassError, VassSpec, VassTransition};

use crate::program::{RawInstr, RawProcess, RawRef, Value};

fn instr(i: RawInstr) -> RawProcess {
    RawProcess::Instr(i)
}

fn write(loc: &str, v: Value) -> RawProcess {
    instr(RawInstr::Write(loc.to_string(), v))
}

fn assume(loc: &str, v: Value) -> RawProcess {
    instr(RawInstr::AssumeEq(loc.to_string(), v))
}

fn put(node: &str, dst: &str, src: &str) -> RawProcess {
    instr(RawInstr::RemoteWrite { dst: RawRef::remote(node, dst), src: src.to_string() })
}

fn choice(mut alts: Vec<RawProcess>) -> RawProcess {
    if alts.len() == 1 {
        alts.pop().unwrap()
    } else {
        RawProcess::Choice(alts)
    }
}

/// `body; loop { body }`.
fn plus(body: Vec<RawProcess>) -> Vec<RawProcess> {
    let b = RawProcess::Seq(body);
    vec![b.clone(), RawProcess::Loop(Box::new(b))]
}

/// Receiver side of one alternating-bit handshake on data location `x` and
/// flag `g`: reset the data, see the flag unset, then set, reset it and
/// check that no further data has arrived.
fn receive_ack(x: &str, g: &str) -> Vec<RawProcess> {
    vec![write(x, BOT), assume(g, BOT), assume(g, TOP), write(g, BOT), assume(x, BOT)]
}

const BOT: Value = 0;
const TOP: Value = 1;
