//! Control-flow automata compiled from process syntax trees.
//!
//! States are plain indices. Epsilon edges are resolved at construction so
//! that [`Automaton::moves`] directly lists the instructions executable from
//! a state.

use std::collections::BTreeSet;

use super::{Instr, Label, Process, Value};

pub type StateId = u32;

#[derive(Clone, Debug)]
pub struct Automaton {
    start: StateId,
    moves: Vec<Vec<(Instr, StateId)>>,
    finals: Vec<bool>,
}

struct Builder {
    eps: Vec<Vec<StateId>>,
    instr: Vec<Vec<(Instr, StateId)>>,
    bound: Option<usize>,
}

impl Builder {
    fn fresh(&mut self) -> StateId {
        self.eps.push(Vec::new());
        self.instr.push(Vec::new());
        (self.eps.len() - 1) as StateId
    }

    fn eps(&mut self, a: StateId, b: StateId) {
        self.eps[a as usize].push(b);
    }

    /// Compile `p` between `from` and `to`.
    fn build(&mut self, p: &Process, from: StateId, to: StateId) {
        match p {
            Process::Nop => self.eps(from, to),
            Process::Instr(i) => self.instr[from as usize].push((i.clone(), to)),
            Process::Seq(ps) => {
                let mut cur = from;
                for (k, q) in ps.iter().enumerate() {
                    let next = if k + 1 == ps.len() { to } else { self.fresh() };
                    self.build(q, cur, next);
                    cur = next;
                }
                if ps.is_empty() {
                    self.eps(from, to);
                }
            }
            Process::Choice(ps) => {
                for q in ps {
                    self.build(q, from, to);
                }
                if ps.is_empty() {
                    self.eps(from, to);
                }
            }
            Process::Star(body) => match self.bound {
                None => {
                    let hub = self.fresh();
                    self.eps(from, hub);
                    self.eps(hub, to);
                    self.build(body, hub, hub);
                }
                Some(k) => {
                    let mut cur = from;
                    for _ in 0..k {
                        self.eps(cur, to);
                        let next = self.fresh();
                        self.build(body, cur, next);
                        cur = next;
                    }
                    self.eps(cur, to);
                }
            },
        }
    }
}

impl Automaton {
    pub fn compile(p: &Process, loop_bound: Option<usize>) -> Automaton {
        let mut b = Builder { eps: Vec::new(), instr: Vec::new(), bound: loop_bound };
        let start = b.fresh();
        let end = b.fresh();
        b.build(p, start, end);
        let n = b.eps.len();
        let mut moves = Vec::with_capacity(n);
        let mut finals = Vec::with_capacity(n);
        for s in 0..n {
            let mut seen = vec![false; n];
            let mut stack = vec![s];
            seen[s] = true;
            let mut out: Vec<(Instr, StateId)> = Vec::new();
            let mut fin = false;
            while let Some(q) = stack.pop() {
                fin |= q == end as usize;
                for m in &b.instr[q] {
                    if !out.contains(m) {
                        out.push(m.clone());
                    }
                }
                for &r in &b.eps[q] {
                    if !seen[r as usize] {
                        seen[r as usize] = true;
                        stack.push(r as usize);
                    }
                }
            }
            moves.push(out);
            finals.push(fin);
        }
        Automaton { start, moves, finals }
    }

    pub fn start(&self) -> StateId {
        self.start
    }

    pub fn num_states(&self) -> usize {
        self.moves.len()
    }

    /// Instructions executable from `s`, with their successor states.
    pub fn moves(&self, s: StateId) -> &[(Instr, StateId)] {
        &self.moves[s as usize]
    }

    /// Can the thread terminate in `s`?
    pub fn is_final(&self, s: StateId) -> bool {
        self.finals[s as usize]
    }

    /// Whether `labels` is a prefix of some label path of this automaton.
    pub fn accepts_prefix(&self, labels: &[Label], domain: &[Value]) -> bool {
        // Configurations: control state plus the unconsumed tail of the
        // instruction currently being executed.
        let mut configs: BTreeSet<(StateId, Vec<Label>)> = BTreeSet::new();
        configs.insert((self.start, Vec::new()));
        for l in labels {
            let mut next = BTreeSet::new();
            for (s, pending) in &configs {
                if let Some((head, rest)) = pending.split_first() {
                    if head == l {
                        next.insert((*s, rest.to_vec()));
                    }
                    continue;
                }
                for (i, to) in self.moves(*s) {
                    for path in i.label_paths(domain) {
                        if path[0] == *l {
                            next.insert((*to, path[1..].to_vec()));
                        }
                    }
                }
            }
            if next.is_empty() {
                return false;
            }
            configs = next;
        }
        true
    }
}

impl Instr {
    /// The label sequences a single instruction can generate.
    pub fn label_paths(&self, domain: &[Value]) -> Vec<Vec<Label>> {
        match *self {
            Instr::Write { loc, value } => vec![vec![Label::Lw { loc, value }]],
            Instr::AssumeEq { loc, value } => vec![vec![Label::Lr { loc, value }]],
            Instr::AssumeNeq { loc, value } => domain
                .iter()
                .filter(|&&u| u != value)
                .map(|&u| vec![Label::Lr { loc, value: u }])
                .collect(),
            Instr::Cas { dst, target, expected, new } => {
                let mut out = vec![vec![
                    Label::Cas { loc: target, read: expected, written: new },
                    Label::Lw { loc: dst, value: expected },
                ]];
                for &v in domain.iter().filter(|&&v| v != expected) {
                    out.push(vec![Label::Lr { loc: target, value: v }, Label::Lw { loc: dst, value: v }]);
                }
                out
            }
            Instr::RemoteRead { dst, src, node } => domain
                .iter()
                .map(|&v| {
                    vec![
                        Label::NrR { loc: src, value: v, node },
                        Label::NlW { loc: dst, value: v, node },
                    ]
                })
                .collect(),
            Instr::RemoteWrite { dst, src, node } => domain
                .iter()
                .map(|&v| {
                    vec![
                        Label::NlR { loc: src, value: v, node },
                        Label::NrW { loc: dst, value: v, node },
                    ]
                })
                .collect(),
            Instr::Rfence(node) => vec![vec![Label::Nf { node }]],
            Instr::Poll(node) => vec![vec![Label::Poll { node }]],
        }
    }

    /// Number of events the instruction produces.
    pub fn event_count(&self) -> usize {
        match self {
            Instr::Cas { .. } | Instr::RemoteRead { .. } | Instr::RemoteWrite { .. } => 2,
            _ => 1,
        }
    }
}
