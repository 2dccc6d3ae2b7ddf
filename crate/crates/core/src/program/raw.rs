//! Name-based program descriptions, as produced by the parser and the
//! generators, and their validation into [`Program`].

use std::collections::HashMap;

use super::{
    Expectation, Instr, LocId, Location, NodeDecl, NodeId, Process, Program, ProgramError, Thread,
    Value,
};

/// A location reference, optionally qualified by a node (`N2.w`).
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct RawRef {
    pub node: Option<String>,
    pub loc: String,
}

impl RawRef {
    pub fn local(loc: impl Into<String>) -> RawRef {
        RawRef { node: None, loc: loc.into() }
    }

    pub fn remote(node: impl Into<String>, loc: impl Into<String>) -> RawRef {
        RawRef { node: Some(node.into()), loc: loc.into() }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum RawInstr {
    Write(String, Value),
    AssumeEq(String, Value),
    AssumeNeq(String, Value),
    Cas { dst: String, target: String, expected: Value, new: Value },
    RemoteRead { dst: String, src: RawRef },
    RemoteWrite { dst: RawRef, src: String },
    Rfence(String),
    Poll(String),
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum RawProcess {
    Nop,
    Seq(Vec<RawProcess>),
    Choice(Vec<RawProcess>),
    Loop(Box<RawProcess>),
    Instr(RawInstr),
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct RawNode {
    pub name: String,
    pub locations: Vec<(String, Value)>,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct RawThread {
    pub name: String,
    pub node: String,
    pub body: RawProcess,
}

#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct RawProgram {
    pub nodes: Vec<RawNode>,
    pub threads: Vec<RawThread>,
    pub expect: Option<Expectation>,
}

impl RawProgram {
    pub fn node(&mut self, name: &str, locations: &[(&str, Value)]) -> &mut Self {
        self.nodes.push(RawNode {
            name: name.to_string(),
            locations: locations.iter().map(|(l, v)| (l.to_string(), *v)).collect(),
        });
        self
    }

    pub fn thread(&mut self, name: &str, node: &str, body: Vec<RawProcess>) -> &mut Self {
        self.threads.push(RawThread {
            name: name.to_string(),
            node: node.to_string(),
            body: RawProcess::Seq(body),
        });
        self
    }
}

struct Resolver<'a> {
    node_ids: HashMap<&'a str, NodeId>,
    locs: HashMap<&'a str, LocId>,
    locations: &'a [Location],
    nodes: &'a [NodeDecl],
}

impl Resolver<'_> {
    fn node(&self, name: &str) -> Result<NodeId, ProgramError> {
        self.node_ids
            .get(name)
            .copied()
            .ok_or_else(|| ProgramError::UndeclaredNode(name.to_string()))
    }

    fn local(&self, thread: &RawThread, own: NodeId, name: &str) -> Result<LocId, ProgramError> {
        let id = *self
            .locs
            .get(name)
            .ok_or_else(|| ProgramError::UndeclaredLocation(name.to_string()))?;
        if self.locations[id.index()].node != own {
            return Err(ProgramError::NotLocal {
                thread: thread.name.clone(),
                loc: name.to_string(),
                node: self.nodes[own.index()].name.clone(),
            });
        }
        Ok(id)
    }

    fn remote_node(&self, thread: &RawThread, own: NodeId, name: &str) -> Result<NodeId, ProgramError> {
        let n = self.node(name)?;
        if n == own {
            return Err(ProgramError::RemoteToOwnNode {
                thread: thread.name.clone(),
                node: name.to_string(),
            });
        }
        Ok(n)
    }

    fn remote(&self, thread: &RawThread, own: NodeId, r: &RawRef) -> Result<(LocId, NodeId), ProgramError> {
        let Some(node_name) = &r.node else {
            // An unqualified reference in a remote position still has to name
            // a location on another node.
            let id = *self
                .locs
                .get(r.loc.as_str())
                .ok_or_else(|| ProgramError::UndeclaredLocation(r.loc.clone()))?;
            let n = self.locations[id.index()].node;
            if n == own {
                return Err(ProgramError::RemoteToOwnNode {
                    thread: thread.name.clone(),
                    node: self.nodes[own.index()].name.clone(),
                });
            }
            return Ok((id, n));
        };
        let n = self.remote_node(thread, own, node_name)?;
        let qualified = format!("{node_name}.{}", r.loc);
        let id = *self
            .locs
            .get(r.loc.as_str())
            .ok_or(ProgramError::UndeclaredLocation(qualified.clone()))?;
        if self.locations[id.index()].node != n {
            return Err(ProgramError::UndeclaredLocation(qualified));
        }
        Ok((id, n))
    }

    fn instr(&self, thread: &RawThread, own: NodeId, i: &RawInstr) -> Result<Instr, ProgramError> {
        Ok(match i {
            RawInstr::Write(x, v) => Instr::Write { loc: self.local(thread, own, x)?, value: *v },
            RawInstr::AssumeEq(x, v) => Instr::AssumeEq { loc: self.local(thread, own, x)?, value: *v },
            RawInstr::AssumeNeq(x, v) => Instr::AssumeNeq { loc: self.local(thread, own, x)?, value: *v },
            RawInstr::Cas { dst, target, expected, new } => Instr::Cas {
                dst: self.local(thread, own, dst)?,
                target: self.local(thread, own, target)?,
                expected: *expected,
                new: *new,
            },
            RawInstr::RemoteRead { dst, src } => {
                let dst = self.local(thread, own, dst)?;
                let (src, node) = self.remote(thread, own, src)?;
                Instr::RemoteRead { dst, src, node }
            }
            RawInstr::RemoteWrite { dst, src } => {
                let (dst, node) = self.remote(thread, own, dst)?;
                let src = self.local(thread, own, src)?;
                Instr::RemoteWrite { dst, src, node }
            }
            RawInstr::Rfence(n) => Instr::Rfence(self.remote_node(thread, own, n)?),
            RawInstr::Poll(n) => Instr::Poll(self.remote_node(thread, own, n)?),
        })
    }

    fn process(&self, thread: &RawThread, own: NodeId, p: &RawProcess) -> Result<Process, ProgramError> {
        Ok(match p {
            RawProcess::Nop => Process::Nop,
            RawProcess::Seq(ps) => Process::seq(
                ps.iter()
                    .map(|q| self.process(thread, own, q))
                    .collect::<Result<Vec<_>, _>>()?,
            ),
            RawProcess::Choice(ps) => Process::Choice(
                ps.iter()
                    .map(|q| self.process(thread, own, q))
                    .collect::<Result<Vec<_>, _>>()?,
            ),
            RawProcess::Loop(b) => Process::Star(Box::new(self.process(thread, own, b)?)),
            RawProcess::Instr(i) => Process::Instr(self.instr(thread, own, i)?),
        })
    }
}

pub(super) fn resolve(raw: &RawProgram) -> Result<Program, ProgramError> {
    let mut node_ids = HashMap::new();
    let mut locs = HashMap::new();
    let mut nodes = Vec::new();
    let mut locations = Vec::new();
    for (ni, n) in raw.nodes.iter().enumerate() {
        let id = NodeId(ni as u16);
        if node_ids.insert(n.name.as_str(), id).is_some() {
            return Err(ProgramError::DuplicateNode(n.name.clone()));
        }
        let mut decl = NodeDecl { name: n.name.clone(), locations: Vec::new() };
        for (l, v) in &n.locations {
            let lid = LocId(locations.len() as u16);
            if locs.insert(l.as_str(), lid).is_some() {
                return Err(ProgramError::DuplicateLocation(l.clone()));
            }
            locations.push(Location { name: l.clone(), node: id, init: *v });
            decl.locations.push(lid);
        }
        nodes.push(decl);
    }
    let resolver = Resolver { node_ids, locs, locations: &locations, nodes: &nodes };
    let mut threads = Vec::new();
    let mut names = std::collections::HashSet::new();
    for t in &raw.threads {
        if !names.insert(t.name.as_str()) {
            return Err(ProgramError::DuplicateThread(t.name.clone()));
        }
        let own = resolver.node(&t.node)?;
        let body = resolver.process(t, own, &t.body)?;
        threads.push(Thread { name: t.name.clone(), node: own, body });
    }
    Ok(Program::assemble(nodes, locations, threads, raw.expect))
}
