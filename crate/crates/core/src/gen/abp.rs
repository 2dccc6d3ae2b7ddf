use std::collections::BTreeSet;

use super::{assume, put, receive_ack, RawProcess, BOT, TOP};
use crate::program::{Program, RawProgram, Value};

/// Sender and receiver exchanging `word` over the alternating bit protocol.
/// Words are written with the first symbol sent rightmost, so `[2, 1]`
/// sends 1 and then 2.
pub fn gen_abp(word: &[Value]) -> Program {
    gen_abp_pair(word, word)
}

/// Sender transmitting `sent` to a receiver that expects `expected`.
/// Symbols must be positive.
pub fn gen_abp_pair(sent: &[Value], expected: &[Value]) -> Program {
    assert!(sent.iter().chain(expected).all(|&v| v > BOT), "symbols must be positive");
    let symbols: BTreeSet<Value> = sent.iter().copied().collect();
    let mut consts: Vec<(String, Value)> = symbols.iter().map(|&v| (format!("k{v}"), v)).collect();
    consts.push(("f".into(), TOP));
    let mut raw = RawProgram::default();
    let cs: Vec<(&str, Value)> = consts.iter().map(|(n, v)| (n.as_str(), *v)).collect();
    raw.node("S", &cs).node("R", &[("x", BOT), ("g", BOT)]);
    let mut send = Vec::new();
    for &v in sent.iter().rev() {
        send.push(put("R", "x", &format!("k{v}")));
        send.push(put("R", "g", "f"));
    }
    let mut recv = Vec::new();
    for &v in expected.iter().rev() {
        recv.push(assume("x", v));
        recv.extend(receive_ack("x", "g"));
    }
    recv.push(assume("x", BOT));
    recv.push(assume("g", BOT));
    if send.is_empty() {
        send.push(RawProcess::Nop);
    }
    raw.thread("Sender", "S", send).thread("Receiver", "R", recv);
    Program::from_raw(&raw).expect("generated program is valid")
}
