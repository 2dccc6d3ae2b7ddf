//! Configurations of the instrumented program and its transition rules.

use std::fmt;

use crate::normal_form::Part;
use crate::program::{Automaton, Instr, Kind, Label, Program, StateId, ThreadId, Value};
use crate::trace::oppo_same_qp;

use super::CheckerConfig;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum RejectReason {
    Phase,
    OppoBackedge,
    RfMismatch,
    PollUnderflow,
    IbBackedge,
    CounterBound,
    NoConnection,
}

impl RejectReason {
    pub fn as_str(self) -> &'static str {
        match self {
            RejectReason::Phase => "phase",
            RejectReason::OppoBackedge => "oppo_backedge",
            RejectReason::RfMismatch => "rf_mismatch",
            RejectReason::PollUnderflow => "poll_underflow",
            RejectReason::IbBackedge => "ib_backedge",
            RejectReason::CounterBound => "counter_bound",
            RejectReason::NoConnection => "no_connection",
        }
    }
}

impl fmt::Display for RejectReason {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Role {
    Entry,
    Exit,
}

/// An event chosen as the first or last event of its thread on the cycle.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct CyclePoint {
    pub loc: u16,
    pub is_write: bool,
    pub part: Part,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash)]
pub struct QpState {
    /// Bit per NIC kind already placed in τ2, see `nic_bit`.
    pub flags: u8,
    pub pending_total: u16,
    pub pending_t1: u16,
    pub frozen: bool,
    pub fence: bool,
}

impl QpState {
    pub fn has(&self, k: Kind) -> bool {
        nic_bit(k).is_some_and(|b| self.flags & b != 0)
    }
}

fn nic_bit(k: Kind) -> Option<u8> {
    match k {
        Kind::NlR => Some(1),
        Kind::NrW => Some(2),
        Kind::NrR => Some(4),
        Kind::NlW => Some(8),
        Kind::Nf => Some(16),
        _ => None,
    }
}

const NIC_KINDS: [Kind; 5] = [Kind::NlR, Kind::NrW, Kind::NrR, Kind::NlW, Kind::Nf];

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct ThreadState {
    pub node: StateId,
    /// Second event of a two-event instruction whose first event ran.
    pub pending: Option<Label>,
    pub locked: bool,
    pub entry: Option<CyclePoint>,
    pub exit: Option<CyclePoint>,
}

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct CheckerState {
    pub threads: Vec<ThreadState>,
    pub mem1: Vec<Value>,
    pub mem2: Vec<Option<Value>>,
    pub guess: Vec<Option<Value>>,
    pub qps: Vec<QpState>,
    /// Bit `i` is set once the exit of `cycle[i]` is connected to the entry
    /// of `cycle[i + 1]` (cyclically).
    pub connected: u32,
}

impl CheckerState {
    pub fn thread(&self, tid: ThreadId) -> &ThreadState {
        &self.threads[tid - 1]
    }

    pub fn max_pending(&self) -> u16 {
        self.qps.iter().map(|q| q.pending_total).max().unwrap_or(0)
    }
}

/// One simulated event together with the configuration it leads to.
#[derive(Clone, Debug)]
pub struct Step {
    pub tid: ThreadId,
    pub label: Label,
    pub part: Part,
    pub state: CheckerState,
}

/// Static data of the instrumented program for one guessed cycle.
pub struct Instrumented<'a> {
    program: &'a Program,
    automata: Vec<Automaton>,
    counter_bound: u16,
    cycle: Vec<ThreadId>,
    tracked: Vec<bool>,
    nnodes: usize,
}

impl<'a> Instrumented<'a> {
    pub fn new(program: &'a Program, config: &CheckerConfig, cycle: Vec<ThreadId>) -> Instrumented<'a> {
        assert!(!cycle.is_empty() && cycle.len() <= 32, "cycle length out of range");
        let nnodes = program.nodes().len();
        let mut tracked = vec![false; program.threads().len() * nnodes];
        for tid in program.thread_ids() {
            for i in program.thread(tid).body.instructions() {
                if let Instr::Poll(n) = i {
                    tracked[(tid - 1) * nnodes + n.index()] = true;
                }
            }
        }
        Instrumented {
            program,
            automata: program.thread_ids().map(|t| program.automaton(t, config.loop_bound)).collect(),
            counter_bound: config.counter_bound.min(u16::MAX as usize) as u16,
            cycle,
            tracked,
            nnodes,
        }
    }

    pub fn cycle(&self) -> &[ThreadId] {
        &self.cycle
    }

    pub fn initial(&self) -> CheckerState {
        let nloc = self.program.locations().len();
        CheckerState {
            threads: self
                .automata
                .iter()
                .map(|a| ThreadState { node: a.start(), pending: None, locked: false, entry: None, exit: None })
                .collect(),
            mem1: self.program.locations().iter().map(|l| l.init).collect(),
            mem2: vec![None; nloc],
            guess: vec![None; nloc],
            qps: vec![QpState::default(); self.program.threads().len() * self.nnodes],
            connected: 0,
        }
    }

    fn qp_index(&self, tid: ThreadId, label: &Label) -> Option<usize> {
        label.remote().map(|n| (tid - 1) * self.nnodes + n.index())
    }

    /// Append the next event of thread `tid` to τ1 or τ2. The thread's
    /// control position is not advanced.
    pub fn admit_event(
        &self,
        s: &CheckerState,
        tid: ThreadId,
        label: Label,
        part: Part,
    ) -> Result<CheckerState, RejectReason> {
        let kind = label.kind();
        if part == Part::E1 && s.thread(tid).locked {
            return Err(RejectReason::Phase);
        }
        let qi = self.qp_index(tid, &label);
        let qp = qi.map(|i| s.qps[i]).unwrap_or_default();
        if part == Part::E1 && kind.is_nic() {
            if NIC_KINDS.iter().any(|&r| qp.has(r) && oppo_same_qp(r, kind)) {
                return Err(RejectReason::OppoBackedge);
            }
            if kind == Kind::NlR && qp.fence {
                return Err(RejectReason::IbBackedge);
            }
        }
        let mut n = s.clone();
        if let (Some(loc), Some(v)) = (label.loc(), label.read_value()) {
            let l = loc.index();
            match part {
                Part::E1 if n.mem1[l] != v => return Err(RejectReason::RfMismatch),
                Part::E1 => {}
                Part::E2 => match n.mem2[l] {
                    Some(u) if u != v => return Err(RejectReason::RfMismatch),
                    Some(_) => {}
                    None => {
                        n.mem2[l] = Some(v);
                        n.guess[l] = Some(v);
                    }
                },
            }
        }
        if let Some(i) = qi.filter(|&i| self.tracked[i]) {
            let q = &mut n.qps[i];
            if kind == Kind::Poll {
                match part {
                    Part::E1 if q.pending_t1 == 0 => return Err(RejectReason::PollUnderflow),
                    Part::E1 => {
                        q.pending_t1 -= 1;
                        q.pending_total -= 1;
                    }
                    Part::E2 if q.pending_total == 0 => return Err(RejectReason::PollUnderflow),
                    Part::E2 => {
                        q.pending_total -= 1;
                        q.pending_t1 = q.pending_t1.saturating_sub(1);
                    }
                }
            } else if kind.is_nic_write() {
                let forcing = part == Part::E2
                    && (kind == Kind::NlW || (q.has(Kind::NlR) || q.has(Kind::Nf)));
                if q.pending_total >= self.counter_bound {
                    return Err(RejectReason::CounterBound);
                }
                q.pending_total += 1;
                if forcing {
                    q.frozen = true;
                } else if !q.frozen {
                    q.pending_t1 += 1;
                }
            }
        }
        if let Some(i) = qi {
            let q = &mut n.qps[i];
            if kind == Kind::Nf && part == Part::E1 && q.has(Kind::NlW) {
                q.fence = true;
            }
            if part == Part::E2 {
                if let Some(b) = nic_bit(kind) {
                    q.flags |= b;
                }
            }
        }
        if part == Part::E2 && kind.is_cpu() {
            n.threads[tid - 1].locked = true;
        }
        if let (Some(loc), Some(v)) = (label.loc(), label.write_value()) {
            match part {
                Part::E1 => n.mem1[loc.index()] = v,
                Part::E2 => n.mem2[loc.index()] = Some(v),
            }
        }
        Ok(n)
    }

    /// Record the event just admitted for `tid` as the thread's entry or
    /// exit point on the guessed cycle.
    pub fn record_cycle_point(
        &self,
        s: &CheckerState,
        tid: ThreadId,
        label: &Label,
        role: Role,
        part: Part,
    ) -> Result<CheckerState, RejectReason> {
        let pos = self.cycle.iter().position(|&t| t == tid).ok_or(RejectReason::NoConnection)?;
        let loc = label.loc().ok_or(RejectReason::NoConnection)?;
        let point = CyclePoint { loc: loc.0, is_write: label.is_write(), part };
        let m = self.cycle.len();
        let mut n = s.clone();
        let ts = &mut n.threads[tid - 1];
        match role {
            Role::Entry => {
                if ts.entry.is_some() {
                    return Err(RejectReason::NoConnection);
                }
                ts.entry = Some(point);
                let prev = (pos + m - 1) % m;
                if let Some(exit) = n.threads[self.cycle[prev] - 1].exit {
                    if !connects(&exit, &point, true) {
                        return Err(RejectReason::NoConnection);
                    }
                    n.connected |= 1 << prev;
                }
            }
            Role::Exit => {
                if ts.entry.is_none() || ts.exit.is_some() {
                    return Err(RejectReason::NoConnection);
                }
                ts.exit = Some(point);
                let next = self.cycle[(pos + 1) % m];
                if let Some(entry) = n.threads[next - 1].entry {
                    if !connects(&point, &entry, false) {
                        return Err(RejectReason::NoConnection);
                    }
                    n.connected |= 1 << pos;
                }
            }
        }
        Ok(n)
    }

    /// Target check: τ1 ends in the guessed memory and the cycle is closed.
    pub fn finalize(&self, s: &CheckerState) -> bool {
        let m = self.cycle.len();
        let full = if m == 32 { u32::MAX } else { (1u32 << m) - 1 };
        s.guess.iter().zip(&s.mem1).all(|(g, v)| g.is_none_or(|g| g == *v))
            && s.connected == full
            && self.cycle.iter().all(|&t| s.thread(t).entry.is_some() && s.thread(t).exit.is_some())
    }

    /// All configurations reachable by simulating one event, in canonical
    /// order. Rejections caused by the counter bound are counted in
    /// `bound_hits`.
    pub fn successors(&self, s: &CheckerState, bound_hits: &mut usize) -> Vec<Step> {
        let domain = self.program.value_domain();
        let mut out = Vec::new();
        for (k, a) in self.automata.iter().enumerate() {
            let tid = k + 1;
            let ts = &s.threads[k];
            let mut options: Vec<(Label, StateId, Option<Label>)> = Vec::new();
            if let Some(l) = ts.pending {
                options.push((l, ts.node, None));
            } else {
                for (instr, next) in a.moves(ts.node) {
                    for path in instr.label_paths(domain) {
                        options.push((path[0], *next, path.get(1).copied()));
                    }
                }
            }
            for (label, next, pending) in options {
                for part in [Part::E1, Part::E2] {
                    let mut n = match self.admit_event(s, tid, label, part) {
                        Ok(n) => n,
                        Err(RejectReason::CounterBound) => {
                            *bound_hits += 1;
                            continue;
                        }
                        Err(_) => continue,
                    };
                    n.threads[k].node = next;
                    n.threads[k].pending = pending;
                    self.push_cycle_choices(n, tid, label, part, &mut out);
                }
            }
        }
        out
    }

    fn push_cycle_choices(&self, n: CheckerState, tid: ThreadId, label: Label, part: Part, out: &mut Vec<Step>) {
        let on_cycle = self.cycle.contains(&tid) && label.loc().is_some();
        let ts = n.thread(tid).clone();
        let mut choices = vec![n.clone()];
        if on_cycle && ts.exit.is_none() {
            if ts.entry.is_none() {
                if let Ok(e) = self.record_cycle_point(&n, tid, &label, Role::Entry, part) {
                    if self.cycle.len() > 1 {
                        if let Ok(x) = self.record_cycle_point(&e, tid, &label, Role::Exit, part) {
                            choices.push(x);
                        }
                    }
                    choices.insert(1, e);
                }
            } else if let Ok(x) = self.record_cycle_point(&n, tid, &label, Role::Exit, part) {
                choices.push(x);
            }
        }
        out.extend(choices.into_iter().map(|state| Step { tid, label, part, state }));
    }
}

/// Whether `exit` can precede `entry` in τ through rf, mo or rb.
fn connects(exit: &CyclePoint, entry: &CyclePoint, exit_first: bool) -> bool {
    if exit.loc != entry.loc || !(exit.is_write || entry.is_write) {
        return false;
    }
    if exit_first {
        exit.part == Part::E1 || entry.part == Part::E2
    } else {
        exit.part == Part::E1 && entry.part == Part::E2
    }
}
