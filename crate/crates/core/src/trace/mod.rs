//! Traces: event sets with program order, polls-from, reads-from,
//! modification order and NIC flush order.

mod derive;
pub mod format;
mod linear;
mod relation;

pub use derive::{build_pf, classify_po_edge, derive, oppo_same_qp, sc_cycle, CycleEdge, Derived, PoClass};
pub use linear::{linearise_ob, linearise_sc, trace_from_linearisation, CyclicOrder};
pub use relation::Relation;

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::program::{Kind, Label, Program, Symbols, ThreadId, INIT_THREAD};

/// Identifies an event by thread and program counter.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct EventId {
    pub tid: ThreadId,
    pub iota: usize,
}

impl fmt::Display for EventId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}.{}", self.tid, self.iota)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Event {
    pub tid: ThreadId,
    pub iota: usize,
    pub label: Label,
}

impl Event {
    pub fn new(tid: ThreadId, iota: usize, label: Label) -> Event {
        Event { tid, iota, label }
    }

    pub fn id(&self) -> EventId {
        EventId { tid: self.tid, iota: self.iota }
    }

    pub fn kind(&self) -> Kind {
        self.label.kind()
    }

    pub fn is_init(&self) -> bool {
        self.tid == INIT_THREAD
    }
}

/// The initialisation events of a program, one per location.
pub fn init_events(p: &Program) -> Vec<Event> {
    p.locations()
        .iter()
        .enumerate()
        .map(|(i, l)| {
            let loc = crate::program::LocId(i as u16);
            Event::new(INIT_THREAD, i, Label::Lw { loc, value: l.init })
        })
        .collect()
}

/// Why an event sequence or relation set does not form a trace.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum Malformed {
    #[error("poll_underflow: poll {0} has no unpolled NIC write on its queue pair")]
    PollUnderflow(EventId),
    #[error("rf_value_mismatch: {read} reads a value {write} did not write")]
    RfValueMismatch { read: EventId, write: EventId },
    #[error("rf_missing_source: {0} has no source write")]
    RfMissingSource(EventId),
    #[error("not_a_path_prefix: events of thread {0} are not a path prefix")]
    NotAPathPrefix(ThreadId),
    #[error("init_not_first: initialisation event {0} is preceded by a write to its location")]
    InitNotFirst(EventId),
    #[error("duplicate_event: {0} occurs twice")]
    DuplicateEvent(EventId),
    #[error("unknown_event: {0} is not in the trace")]
    UnknownEvent(EventId),
    #[error("bad_relation: {0}")]
    BadRelation(String),
}

impl Malformed {
    /// Short machine-readable reason.
    pub fn reason(&self) -> &'static str {
        match self {
            Malformed::PollUnderflow(_) => "poll_underflow",
            Malformed::RfValueMismatch { .. } => "rf_value_mismatch",
            Malformed::RfMissingSource(_) => "rf_missing_source",
            Malformed::NotAPathPrefix(_) => "not_a_path_prefix",
            Malformed::InitNotFirst(_) => "init_not_first",
            Malformed::DuplicateEvent(_) => "duplicate_event",
            Malformed::UnknownEvent(_) => "unknown_event",
            Malformed::BadRelation(_) => "bad_relation",
        }
    }
}

/// A trace. Events are kept sorted by `(tid, iota)`, so initialisation
/// events come first and relations are stored over event indices.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Trace {
    events: Vec<Event>,
    po: Relation,
    pf: Relation,
    rf: Relation,
    mo: Relation,
    nfo: Relation,
}

pub type EdgeSet = BTreeSet<(EventId, EventId)>;

impl Trace {
    /// Build a trace from events sorted by `(tid, iota)` and the three
    /// choice relations; po and pf are computed.
    pub fn assemble(events: Vec<Event>, rf: Relation, mo: Relation, nfo: Relation) -> Result<Trace, Malformed> {
        debug_assert!(events.windows(2).all(|w| w[0].id() < w[1].id()));
        let po = program_order(&events);
        let pf = Relation::from_edges(events.len(), build_pf(&events)?);
        Ok(Trace { events, po, pf, rf, mo, nfo })
    }

    pub(crate) fn from_raw_parts(
        events: Vec<Event>,
        po: Relation,
        pf: Relation,
        rf: Relation,
        mo: Relation,
        nfo: Relation,
    ) -> Trace {
        Trace { events, po, pf, rf, mo, nfo }
    }

    /// Build and validate a trace from events in any order and relations
    /// given by event identifiers.
    pub fn from_edges(
        mut events: Vec<Event>,
        rf: &[(EventId, EventId)],
        mo: &[(EventId, EventId)],
        nfo: &[(EventId, EventId)],
    ) -> Result<Trace, Malformed> {
        events.sort();
        for w in events.windows(2) {
            if w[0].id() == w[1].id() {
                return Err(Malformed::DuplicateEvent(w[0].id()));
            }
        }
        let n = events.len();
        let index = |id: &EventId| {
            events
                .binary_search_by(|e| e.id().cmp(id))
                .map_err(|_| Malformed::UnknownEvent(*id))
        };
        let rel = |edges: &[(EventId, EventId)]| -> Result<Relation, Malformed> {
            let mut r = Relation::new(n);
            for (a, b) in edges {
                r.add(index(a)?, index(b)?);
            }
            Ok(r)
        };
        let (rf, mo, nfo) = (rel(rf)?, rel(mo)?, rel(nfo)?);
        let t = Trace::assemble(events, rf, mo, nfo)?;
        t.validate()?;
        Ok(t)
    }

    pub fn events(&self) -> &[Event] {
        &self.events
    }

    pub fn len(&self) -> usize {
        self.events.len()
    }

    pub fn is_empty(&self) -> bool {
        self.events.is_empty()
    }

    pub fn event(&self, i: usize) -> &Event {
        &self.events[i]
    }

    pub fn index_of(&self, id: EventId) -> Option<usize> {
        self.events.binary_search_by(|e| e.id().cmp(&id)).ok()
    }

    pub fn po(&self) -> &Relation {
        &self.po
    }

    pub fn pf(&self) -> &Relation {
        &self.pf
    }

    pub fn rf(&self) -> &Relation {
        &self.rf
    }

    pub fn mo(&self) -> &Relation {
        &self.mo
    }

    pub fn nfo(&self) -> &Relation {
        &self.nfo
    }

    /// Same queue pair: same thread and same remote node.
    pub fn same_qp(&self, a: usize, b: usize) -> bool {
        same_qp(&self.events[a], &self.events[b])
    }

    /// A relation of this trace as a set of identifier pairs.
    pub fn edge_set(&self, r: &Relation) -> EdgeSet {
        r.edges().map(|(a, b)| (self.events[a].id(), self.events[b].id())).collect()
    }

    /// Number of non-initialisation events per thread.
    pub fn thread_lengths(&self) -> BTreeMap<ThreadId, usize> {
        let mut m = BTreeMap::new();
        for e in self.events.iter().filter(|e| !e.is_init()) {
            *m.entry(e.tid).or_insert(0) += 1;
        }
        m
    }

    /// Non-initialisation labels of a thread in program order.
    pub fn thread_labels(&self, tid: ThreadId) -> Vec<Label> {
        self.events.iter().filter(|e| e.tid == tid).map(|e| e.label).collect()
    }

    pub fn derive(&self) -> Derived {
        derive(self)
    }

    pub fn is_sc_consistent(&self) -> bool {
        self.po.union(&self.rf).union(&self.mo).union(&derive::reads_before(self)).is_acyclic()
    }

    pub fn is_rdma_consistent(&self) -> bool {
        derive::ob_base(self).is_acyclic()
    }

    pub fn is_violating(&self) -> bool {
        !self.is_sc_consistent() && self.is_rdma_consistent()
    }

    /// Check the structural requirements on rf, mo and nfo and the shape
    /// of the event set.
    pub fn validate(&self) -> Result<(), Malformed> {
        let ev = &self.events;
        let n = ev.len();
        for tid in ev.iter().map(|e| e.tid).filter(|&t| t != INIT_THREAD).collect::<BTreeSet<_>>() {
            let iotas: Vec<usize> = ev.iter().filter(|e| e.tid == tid).map(|e| e.iota).collect();
            if iotas.iter().enumerate().any(|(k, &i)| i != k + 1) {
                return Err(Malformed::NotAPathPrefix(tid));
            }
        }
        for e in ev.iter().filter(|e| e.is_init()) {
            if e.kind() != Kind::Lw {
                return Err(Malformed::BadRelation(format!("initialisation event {} is not a local write", e.id())));
            }
        }
        for r in 0..n {
            let srcs: Vec<usize> = (0..n).filter(|&w| self.rf.contains(w, r)).collect();
            if !ev[r].label.is_read() {
                if !srcs.is_empty() {
                    return Err(Malformed::BadRelation(format!("rf targets non-read {}", ev[r].id())));
                }
                continue;
            }
            match srcs.as_slice() {
                [] => return Err(Malformed::RfMissingSource(ev[r].id())),
                [w] => {
                    let (we, re) = (&ev[*w], &ev[r]);
                    if !we.label.is_write() || we.label.loc() != re.label.loc() || *w == r {
                        return Err(Malformed::BadRelation(format!("rf edge {} -> {} is not a write-read pair on one location", we.id(), re.id())));
                    }
                    if we.label.write_value() != re.label.read_value() {
                        return Err(Malformed::RfValueMismatch { read: re.id(), write: we.id() });
                    }
                }
                _ => return Err(Malformed::BadRelation(format!("{} reads from more than one write", ev[r].id()))),
            }
        }
        for (a, b) in self.mo.edges() {
            let (ea, eb) = (&ev[a], &ev[b]);
            if !ea.label.is_write() || !eb.label.is_write() || ea.label.loc() != eb.label.loc() {
                return Err(Malformed::BadRelation(format!("mo edge {} -> {} is not between writes to one location", ea.id(), eb.id())));
            }
        }
        let mo_c = self.mo.closure();
        if mo_c != self.mo || !mo_c.is_irreflexive() {
            return Err(Malformed::BadRelation("mo is not a strict order".into()));
        }
        for a in 0..n {
            for b in (a + 1)..n {
                let (ea, eb) = (&ev[a], &ev[b]);
                if ea.label.is_write() && eb.label.is_write() && ea.label.loc() == eb.label.loc() {
                    if !self.mo.contains(a, b) && !self.mo.contains(b, a) {
                        return Err(Malformed::BadRelation(format!("mo does not order {} and {}", ea.id(), eb.id())));
                    }
                    if eb.is_init() && self.mo.contains(a, b) || ea.is_init() && !self.mo.contains(a, b) {
                        return Err(Malformed::InitNotFirst(if ea.is_init() { ea.id() } else { eb.id() }));
                    }
                }
            }
        }
        for a in 0..n {
            for b in 0..n {
                let mandated = a != b && nfo_pair(&ev[a], &ev[b]);
                if self.nfo.contains(a, b) && !mandated {
                    return Err(Malformed::BadRelation(format!("nfo edge {} -> {} is not a flush pair", ev[a].id(), ev[b].id())));
                }
                if mandated && a < b && self.nfo.contains(a, b) == self.nfo.contains(b, a) {
                    return Err(Malformed::BadRelation(format!("nfo must order {} and {} in exactly one direction", ev[a].id(), ev[b].id())));
                }
            }
        }
        Ok(())
    }

    /// Additionally check the event set against a program: initialisation
    /// values and path prefixes.
    pub fn validate_for(&self, p: &Program) -> Result<(), Malformed> {
        self.validate()?;
        let inits: Vec<Event> = self.events.iter().filter(|e| e.is_init()).copied().collect();
        if inits != init_events(p) {
            return Err(Malformed::BadRelation("initialisation events do not match the program".into()));
        }
        for (tid, _) in self.thread_lengths() {
            if tid > p.threads().len() || !p.accepts_prefix(tid, &self.thread_labels(tid)) {
                return Err(Malformed::NotAPathPrefix(tid));
            }
        }
        Ok(())
    }

    /// The trace obtained by keeping only the events selected by `keep`
    /// (restricting every relation).
    pub fn restrict(&self, keep: impl Fn(&Event) -> bool) -> Result<Trace, Malformed> {
        let kept: Vec<usize> = (0..self.len()).filter(|&i| keep(&self.events[i])).collect();
        let pos: BTreeMap<usize, usize> = kept.iter().enumerate().map(|(k, &i)| (i, k)).collect();
        let m = kept.len();
        let sub = |r: &Relation| {
            Relation::from_edges(
                m,
                r.edges()
                    .filter_map(|(a, b)| Some((*pos.get(&a)?, *pos.get(&b)?)))
                    .collect::<Vec<_>>(),
            )
        };
        let events = kept.iter().map(|&i| self.events[i]).collect();
        Trace::assemble(events, sub(&self.rf), sub(&self.mo), sub(&self.nfo))
    }

    /// Human-readable listing.
    pub fn show(&self, sym: &Symbols) -> String {
        let mut out = String::new();
        let name = |i: usize| format!("{}:{}", self.events[i].id(), sym.show(&self.events[i].label));
        for e in &self.events {
            out.push_str(&format!("{} {}\n", e.id(), sym.show(&e.label)));
        }
        for (tag, r) in [("rf", &self.rf), ("mo", &self.mo), ("nfo", &self.nfo), ("pf", &self.pf)] {
            for (a, b) in r.edges() {
                out.push_str(&format!("{tag}: {} -> {}\n", name(a), name(b)));
            }
        }
        out
    }
}

pub(crate) fn same_qp(a: &Event, b: &Event) -> bool {
    !a.is_init() && a.tid == b.tid && a.label.remote().is_some() && a.label.remote() == b.label.remote()
}

/// Is `(a, b)` one of the pairs nfo has to order (in either direction)?
pub(crate) fn nfo_pair(a: &Event, b: &Event) -> bool {
    if !same_qp(a, b) {
        return false;
    }
    matches!(
        (a.kind(), b.kind()),
        (Kind::NlR, Kind::NlW) | (Kind::NlW, Kind::NlR) | (Kind::NrR, Kind::NrW) | (Kind::NrW, Kind::NrR)
    )
}

fn program_order(events: &[Event]) -> Relation {
    let mut po = Relation::new(events.len());
    for (i, a) in events.iter().enumerate() {
        for (j, b) in events.iter().enumerate().skip(i + 1) {
            if !a.is_init() && a.tid == b.tid && a.iota < b.iota {
                po.add(i, j);
            }
        }
    }
    po
}
