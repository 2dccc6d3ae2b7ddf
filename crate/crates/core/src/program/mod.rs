//! RDMA programs: nodes with initialised memory, threads pinned to nodes, and
//! the labels their instructions generate.

mod automaton;
mod parse;
mod paths;
mod print;
mod raw;

pub use automaton::{Automaton, StateId};
pub use parse::parse_program;
pub use paths::enumerate_paths;
pub use raw::{RawInstr, RawNode, RawProcess, RawProgram, RawRef, RawThread};

use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Memory values. Domains are small and finite.
pub type Value = i64;

/// Thread identifier. Threads are numbered from 1; 0 is the pseudo-thread
/// that owns the initialisation events.
pub type ThreadId = usize;

pub const INIT_THREAD: ThreadId = 0;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct LocId(pub u16);

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct NodeId(pub u16);

impl LocId {
    pub fn index(self) -> usize {
        self.0 as usize
    }
}

impl NodeId {
    pub fn index(self) -> usize {
        self.0 as usize
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Location {
    pub name: String,
    pub node: NodeId,
    pub init: Value,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct NodeDecl {
    pub name: String,
    pub locations: Vec<LocId>,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Thread {
    pub name: String,
    pub node: NodeId,
    pub body: Process,
}

/// A single atomic instruction of the program grammar. Remote instructions
/// carry the node of their remote location so that labels can be produced
/// without consulting the program.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub enum Instr {
    /// `x := v`
    Write { loc: LocId, value: Value },
    /// `assume(x = v)`
    AssumeEq { loc: LocId, value: Value },
    /// `assume(x != v)`
    AssumeNeq { loc: LocId, value: Value },
    /// `x := CAS(z, v_r, v_w)`
    Cas {
        dst: LocId,
        target: LocId,
        expected: Value,
        new: Value,
    },
    /// `x := ȳ`
    RemoteRead { dst: LocId, src: LocId, node: NodeId },
    /// `ȳ := x`
    RemoteWrite { dst: LocId, src: LocId, node: NodeId },
    Rfence(NodeId),
    Poll(NodeId),
}

impl Instr {
    pub fn is_poll(&self) -> bool {
        matches!(self, Instr::Poll(_))
    }

    pub fn is_local(&self) -> bool {
        matches!(
            self,
            Instr::Write { .. } | Instr::AssumeEq { .. } | Instr::AssumeNeq { .. } | Instr::Cas { .. }
        )
    }

    /// The remote node addressed by this instruction, if any.
    pub fn remote(&self) -> Option<NodeId> {
        match *self {
            Instr::RemoteRead { node, .. } | Instr::RemoteWrite { node, .. } => Some(node),
            Instr::Rfence(n) | Instr::Poll(n) => Some(n),
            _ => None,
        }
    }

    fn constants(&self, out: &mut Vec<Value>) {
        match *self {
            Instr::Write { value, .. } | Instr::AssumeEq { value, .. } | Instr::AssumeNeq { value, .. } => {
                out.push(value)
            }
            Instr::Cas { expected, new, .. } => {
                out.push(expected);
                out.push(new);
            }
            _ => {}
        }
    }
}

/// Process syntax tree.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub enum Process {
    Nop,
    Seq(Vec<Process>),
    Choice(Vec<Process>),
    Star(Box<Process>),
    Instr(Instr),
}

impl Process {
    /// Sequential composition, flattening nested sequences and dropping
    /// `Nop`s.
    pub fn seq(parts: Vec<Process>) -> Process {
        let mut flat = Vec::with_capacity(parts.len());
        for p in parts {
            match p {
                Process::Seq(inner) => flat.extend(inner),
                Process::Nop => {}
                p => flat.push(p),
            }
        }
        let parts = flat;
        match parts.len() {
            0 => Process::Nop,
            1 => parts.into_iter().next().unwrap(),
            _ => Process::Seq(parts),
        }
    }

    pub fn instructions(&self) -> Vec<&Instr> {
        let mut out = Vec::new();
        self.collect_instrs(&mut out);
        out
    }

    fn collect_instrs<'a>(&'a self, out: &mut Vec<&'a Instr>) {
        match self {
            Process::Nop => {}
            Process::Seq(ps) | Process::Choice(ps) => ps.iter().for_each(|p| p.collect_instrs(out)),
            Process::Star(p) => p.collect_instrs(out),
            Process::Instr(i) => out.push(i),
        }
    }

    pub fn has_loops(&self) -> bool {
        match self {
            Process::Star(_) => true,
            Process::Seq(ps) | Process::Choice(ps) => ps.iter().any(Process::has_loops),
            _ => false,
        }
    }
}

/// The nine event label kinds.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Kind {
    /// NIC remote read
    NrR,
    /// NIC local write
    NlW,
    /// NIC local read
    NlR,
    /// NIC remote write
    NrW,
    /// NIC fence
    Nf,
    /// CPU local read
    Lr,
    /// CPU local write
    Lw,
    Cas,
    Poll,
}

impl Kind {
    pub const ALL: [Kind; 9] = [
        Kind::NrR,
        Kind::NlW,
        Kind::NlR,
        Kind::NrW,
        Kind::Nf,
        Kind::Lr,
        Kind::Lw,
        Kind::Cas,
        Kind::Poll,
    ];

    pub fn is_cpu(self) -> bool {
        matches!(self, Kind::Lr | Kind::Lw | Kind::Cas | Kind::Poll)
    }

    pub fn is_nic(self) -> bool {
        !self.is_cpu()
    }

    pub fn is_nic_write(self) -> bool {
        matches!(self, Kind::NlW | Kind::NrW)
    }

    pub fn is_write(self) -> bool {
        matches!(self, Kind::NlW | Kind::NrW | Kind::Lw | Kind::Cas)
    }

    pub fn is_read(self) -> bool {
        matches!(self, Kind::NlR | Kind::NrR | Kind::Lr | Kind::Cas)
    }

    /// Everything except NIC writes takes effect instantaneously.
    pub fn is_instantaneous(self) -> bool {
        !self.is_nic_write()
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Kind::NrR => "nrR",
            Kind::NlW => "nlW",
            Kind::NlR => "nlR",
            Kind::NrW => "nrW",
            Kind::Nf => "nF",
            Kind::Lr => "lR",
            Kind::Lw => "lW",
            Kind::Cas => "CAS",
            Kind::Poll => "poll",
        }
    }

    pub fn parse(s: &str) -> Option<Kind> {
        Kind::ALL.into_iter().find(|k| k.as_str() == s)
    }
}

impl fmt::Display for Kind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// An event label. Which fields are present is determined by the kind.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Label {
    NrR { loc: LocId, value: Value, node: NodeId },
    NlW { loc: LocId, value: Value, node: NodeId },
    NlR { loc: LocId, value: Value, node: NodeId },
    NrW { loc: LocId, value: Value, node: NodeId },
    Nf { node: NodeId },
    Lr { loc: LocId, value: Value },
    Lw { loc: LocId, value: Value },
    Cas { loc: LocId, read: Value, written: Value },
    Poll { node: NodeId },
}

impl Label {
    pub fn kind(&self) -> Kind {
        match self {
            Label::NrR { .. } => Kind::NrR,
            Label::NlW { .. } => Kind::NlW,
            Label::NlR { .. } => Kind::NlR,
            Label::NrW { .. } => Kind::NrW,
            Label::Nf { .. } => Kind::Nf,
            Label::Lr { .. } => Kind::Lr,
            Label::Lw { .. } => Kind::Lw,
            Label::Cas { .. } => Kind::Cas,
            Label::Poll { .. } => Kind::Poll,
        }
    }

    pub fn loc(&self) -> Option<LocId> {
        match *self {
            Label::NrR { loc, .. }
            | Label::NlW { loc, .. }
            | Label::NlR { loc, .. }
            | Label::NrW { loc, .. }
            | Label::Lr { loc, .. }
            | Label::Lw { loc, .. }
            | Label::Cas { loc, .. } => Some(loc),
            Label::Nf { .. } | Label::Poll { .. } => None,
        }
    }

    pub fn read_value(&self) -> Option<Value> {
        match *self {
            Label::NrR { value, .. } | Label::NlR { value, .. } | Label::Lr { value, .. } => Some(value),
            Label::Cas { read, .. } => Some(read),
            _ => None,
        }
    }

    pub fn write_value(&self) -> Option<Value> {
        match *self {
            Label::NlW { value, .. } | Label::NrW { value, .. } | Label::Lw { value, .. } => Some(value),
            Label::Cas { written, .. } => Some(written),
            _ => None,
        }
    }

    /// The remote node n̄ of NIC labels and polls.
    pub fn remote(&self) -> Option<NodeId> {
        match *self {
            Label::NrR { node, .. }
            | Label::NlW { node, .. }
            | Label::NlR { node, .. }
            | Label::NrW { node, .. }
            | Label::Nf { node }
            | Label::Poll { node } => Some(node),
            _ => None,
        }
    }

    /// Replace the value carried by a single-valued label. CAS labels are
    /// left unchanged.
    pub fn with_value(self, v: Value) -> Label {
        match self {
            Label::NrR { loc, node, .. } => Label::NrR { loc, value: v, node },
            Label::NlW { loc, node, .. } => Label::NlW { loc, value: v, node },
            Label::NlR { loc, node, .. } => Label::NlR { loc, value: v, node },
            Label::NrW { loc, node, .. } => Label::NrW { loc, value: v, node },
            Label::Lr { loc, .. } => Label::Lr { loc, value: v },
            Label::Lw { loc, .. } => Label::Lw { loc, value: v },
            other => other,
        }
    }

    pub fn is_cpu(&self) -> bool {
        self.kind().is_cpu()
    }

    pub fn is_write(&self) -> bool {
        self.kind().is_write()
    }

    pub fn is_read(&self) -> bool {
        self.kind().is_read()
    }

    /// Build a label from its flat field representation, as used by the
    /// trace and witness exchange formats.
    pub fn from_parts(
        kind: Kind,
        loc: Option<LocId>,
        v_r: Option<Value>,
        v_w: Option<Value>,
        node: Option<NodeId>,
    ) -> Result<Label, String> {
        let need_loc = || loc.ok_or_else(|| format!("{kind} needs a location"));
        let need_node = || node.ok_or_else(|| format!("{kind} needs a remote node"));
        let need_r = || v_r.ok_or_else(|| format!("{kind} needs a read value"));
        let need_w = || v_w.ok_or_else(|| format!("{kind} needs a written value"));
        Ok(match kind {
            Kind::NrR => Label::NrR { loc: need_loc()?, value: need_r()?, node: need_node()? },
            Kind::NlW => Label::NlW { loc: need_loc()?, value: need_w()?, node: need_node()? },
            Kind::NlR => Label::NlR { loc: need_loc()?, value: need_r()?, node: need_node()? },
            Kind::NrW => Label::NrW { loc: need_loc()?, value: need_w()?, node: need_node()? },
            Kind::Nf => Label::Nf { node: need_node()? },
            Kind::Lr => Label::Lr { loc: need_loc()?, value: need_r()? },
            Kind::Lw => Label::Lw { loc: need_loc()?, value: need_w()? },
            Kind::Cas => Label::Cas { loc: need_loc()?, read: need_r()?, written: need_w()? },
            Kind::Poll => Label::Poll { node: need_node()? },
        })
    }
}

/// Names for locations and nodes, used when printing labels and when
/// reading the exchange formats back.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct Symbols {
    pub locs: Vec<String>,
    pub nodes: Vec<String>,
}

impl Symbols {
    pub fn loc_name(&self, l: LocId) -> &str {
        self.locs.get(l.index()).map(String::as_str).unwrap_or("?")
    }

    pub fn node_name(&self, n: NodeId) -> &str {
        self.nodes.get(n.index()).map(String::as_str).unwrap_or("?")
    }

    pub fn loc(&self, name: &str) -> Option<LocId> {
        self.locs.iter().position(|s| s == name).map(|i| LocId(i as u16))
    }

    pub fn node(&self, name: &str) -> Option<NodeId> {
        self.nodes.iter().position(|s| s == name).map(|i| NodeId(i as u16))
    }

    /// Look a location up, registering it if unknown.
    pub fn intern_loc(&mut self, name: &str) -> LocId {
        self.loc(name).unwrap_or_else(|| {
            self.locs.push(name.to_string());
            LocId((self.locs.len() - 1) as u16)
        })
    }

    pub fn intern_node(&mut self, name: &str) -> NodeId {
        self.node(name).unwrap_or_else(|| {
            self.nodes.push(name.to_string());
            NodeId((self.nodes.len() - 1) as u16)
        })
    }

    pub fn show(&self, label: &Label) -> String {
        let l = |x: LocId| self.loc_name(x);
        let n = |x: NodeId| self.node_name(x);
        match *label {
            Label::NrR { loc, value, .. } => format!("nrR({}, {value})", l(loc)),
            Label::NlW { loc, value, node } => format!("nlW({}, {value}, {})", l(loc), n(node)),
            Label::NlR { loc, value, node } => format!("nlR({}, {value}, {})", l(loc), n(node)),
            Label::NrW { loc, value, .. } => format!("nrW({}, {value})", l(loc)),
            Label::Nf { node } => format!("nF({})", n(node)),
            Label::Lr { loc, value } => format!("lR({}, {value})", l(loc)),
            Label::Lw { loc, value } => format!("lW({}, {value})", l(loc)),
            Label::Cas { loc, read, written } => format!("CAS({}, {read}, {written})", l(loc)),
            Label::Poll { node } => format!("poll({})", n(node)),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Expectation {
    Robust,
    NotRobust,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ProgramError {
    #[error("syntax error at {line}:{col}: {message}")]
    Syntax { line: usize, col: usize, message: String },
    #[error("undeclared location `{0}`")]
    UndeclaredLocation(String),
    #[error("undeclared node `{0}`")]
    UndeclaredNode(String),
    #[error("thread `{thread}` addresses its own node `{node}` remotely")]
    RemoteToOwnNode { thread: String, node: String },
    #[error("location `{0}` is declared more than once")]
    DuplicateLocation(String),
    #[error("node `{0}` is declared more than once")]
    DuplicateNode(String),
    #[error("thread `{0}` is declared more than once")]
    DuplicateThread(String),
    #[error("location `{loc}` is not local to node `{node}` of thread `{thread}`")]
    NotLocal { thread: String, loc: String, node: String },
}

/// A validated program.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Program {
    nodes: Vec<NodeDecl>,
    locations: Vec<Location>,
    threads: Vec<Thread>,
    value_domain: Vec<Value>,
    expect: Option<Expectation>,
}

impl Program {
    pub fn nodes(&self) -> &[NodeDecl] {
        &self.nodes
    }

    pub fn locations(&self) -> &[Location] {
        &self.locations
    }

    pub fn threads(&self) -> &[Thread] {
        &self.threads
    }

    /// Thread by id (1-based).
    pub fn thread(&self, tid: ThreadId) -> &Thread {
        &self.threads[tid - 1]
    }

    pub fn thread_ids(&self) -> impl Iterator<Item = ThreadId> {
        1..=self.threads.len()
    }

    /// The finite value domain, sorted ascending.
    pub fn value_domain(&self) -> &[Value] {
        &self.value_domain
    }

    pub fn expectation(&self) -> Option<Expectation> {
        self.expect
    }

    pub fn set_expectation(&mut self, e: Option<Expectation>) {
        self.expect = e;
    }

    pub fn node_of(&self, loc: LocId) -> NodeId {
        self.locations[loc.index()].node
    }

    pub fn init_value(&self, loc: LocId) -> Value {
        self.locations[loc.index()].init
    }

    pub fn loc_by_name(&self, name: &str) -> Option<LocId> {
        self.locations.iter().position(|l| l.name == name).map(|i| LocId(i as u16))
    }

    pub fn node_by_name(&self, name: &str) -> Option<NodeId> {
        self.nodes.iter().position(|n| n.name == name).map(|i| NodeId(i as u16))
    }

    pub fn thread_by_name(&self, name: &str) -> Option<ThreadId> {
        self.threads.iter().position(|t| t.name == name).map(|i| i + 1)
    }

    pub fn symbols(&self) -> Symbols {
        Symbols {
            locs: self.locations.iter().map(|l| l.name.clone()).collect(),
            nodes: self.nodes.iter().map(|n| n.name.clone()).collect(),
        }
    }

    pub fn has_polls(&self) -> bool {
        self.threads.iter().any(|t| t.body.instructions().iter().any(|i| i.is_poll()))
    }

    /// True if no thread issues any remote instruction.
    pub fn is_cpu_only(&self) -> bool {
        self.threads.iter().all(|t| t.body.instructions().iter().all(|i| i.is_local()))
    }

    /// Control automaton of a thread. `loop_bound` unrolls every loop at
    /// most that many times; `None` keeps loops cyclic.
    pub fn automaton(&self, tid: ThreadId, loop_bound: Option<usize>) -> Automaton {
        Automaton::compile(&self.thread(tid).body, loop_bound)
    }

    /// Does the label sequence form a prefix of some path of the thread?
    pub fn accepts_prefix(&self, tid: ThreadId, labels: &[Label]) -> bool {
        self.automaton(tid, None).accepts_prefix(labels, &self.value_domain)
    }

    pub fn to_dsl(&self) -> String {
        print::print_program(self)
    }

    /// Validate and resolve a name-based program description.
    pub fn from_raw(raw: &RawProgram) -> Result<Program, ProgramError> {
        raw::resolve(raw)
    }

    pub(crate) fn assemble(
        nodes: Vec<NodeDecl>,
        locations: Vec<Location>,
        threads: Vec<Thread>,
        expect: Option<Expectation>,
    ) -> Program {
        let mut domain: Vec<Value> = locations.iter().map(|l| l.init).collect();
        for t in &threads {
            for i in t.body.instructions() {
                i.constants(&mut domain);
            }
        }
        if domain.is_empty() {
            domain.push(0);
        }
        domain.sort_unstable();
        domain.dedup();
        Program { nodes, locations, threads, value_domain: domain, expect }
    }
}
