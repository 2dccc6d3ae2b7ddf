//! Robustness checking by explicit-state search over the instrumented
//! program.
//!
//! A run simulates the threads one event at a time and places every event
//! in τ1 or τ2. τ1 reads the memory that starts from the initial values,
//! τ2 reads a memory that starts from a lazily guessed state. A run is
//! accepting when τ1 ends in the guessed state, so that τ1·τ2 is a trace,
//! and a guessed sc cycle through a simple sequence of threads has been
//! closed. The transition rules reject every step that would create a
//! backward ob edge in τ1·τ2.

mod state;

pub use state::{CheckerState, CyclePoint, Instrumented, QpState, RejectReason, Role, Step, ThreadState};

use rustc_hash::FxHashSet;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::normal_form::{normalize_violation, NormalFormWitness, Part};
use crate::program::{Label, Program, ThreadId};
use crate::trace::{init_events, trace_from_linearisation, Event, Trace};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct CheckerConfig {
    /// Cap on unpolled NIC writes per queue pair.
    pub counter_bound: usize,
    /// Cap on visited configurations per cycle guess.
    pub max_states: usize,
    /// Unroll loops at most this many times. `None` keeps loops unbounded.
    pub loop_bound: Option<usize>,
    /// Longest cycle thread sequence tried. `None` means all threads.
    pub max_cycle_len: Option<usize>,
}

impl Default for CheckerConfig {
    fn default() -> Self {
        CheckerConfig { counter_bound: 4, max_states: 2_000_000, loop_bound: None, max_cycle_len: None }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum BoundHit {
    CounterBound,
    MaxStates,
}

#[derive(Clone, Debug)]
pub struct CheckerWitness {
    /// Thread sequence of the guessed cycle.
    pub cycle: Vec<ThreadId>,
    /// The accepting run's halves in simulation order.
    pub tau1: Vec<Event>,
    pub tau2: Vec<Event>,
    /// T(τ1·τ2).
    pub trace: Trace,
    pub normal_form: NormalFormWitness,
}

#[derive(Clone, Debug)]
pub enum Outcome {
    Robust,
    NotRobust(Box<CheckerWitness>),
    Inconclusive(BoundHit),
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct CheckerStats {
    pub cycle_sequences: usize,
    /// Largest pending-write counter over all visited configurations.
    pub max_pending: usize,
    pub counter_bound_hits: usize,
}

#[derive(Clone, Debug)]
pub struct CheckerVerdict {
    pub outcome: Outcome,
    pub explored_states: usize,
    pub stats: CheckerStats,
}

impl CheckerVerdict {
    pub fn is_robust(&self) -> Option<bool> {
        match self.outcome {
            Outcome::Robust => Some(true),
            Outcome::NotRobust(_) => Some(false),
            Outcome::Inconclusive(_) => None,
        }
    }

    pub fn witness(&self) -> Option<&CheckerWitness> {
        match &self.outcome {
            Outcome::NotRobust(w) => Some(w),
            _ => None,
        }
    }
}

/// Simple thread sequences up to rotation, each starting with its least
/// thread, by length and then lexicographically.
pub fn cycle_sequences(threads: &[ThreadId], max_len: usize) -> Vec<Vec<ThreadId>> {
    fn extend(cur: &mut Vec<ThreadId>, rest: &[ThreadId], len: usize, out: &mut Vec<Vec<ThreadId>>) {
        if cur.len() == len {
            out.push(cur.clone());
            return;
        }
        for &t in rest {
            if !cur.contains(&t) {
                cur.push(t);
                extend(cur, rest, len, out);
                cur.pop();
            }
        }
    }
    let mut out = Vec::new();
    for len in 1..=max_len.min(threads.len()) {
        for (i, &first) in threads.iter().enumerate() {
            extend(&mut vec![first], &threads[i + 1..], len, &mut out);
        }
    }
    out
}

struct SearchResult {
    run: Option<Vec<(ThreadId, Label, Part)>>,
    states: usize,
    max_pending: usize,
    bound_hits: usize,
    out_of_states: bool,
}

fn search(inst: &Instrumented, max_states: usize) -> SearchResult {
    let init = inst.initial();
    let mut visited: FxHashSet<CheckerState> = FxHashSet::default();
    let mut bound_hits = 0;
    let mut max_pending = 0;
    let first = inst.successors(&init, &mut bound_hits);
    visited.insert(init);
    let mut stack: Vec<(Vec<Step>, usize)> = vec![(first, 0)];
    let result = |run, states, out_of_states, bound_hits, max_pending| SearchResult {
        run,
        states,
        max_pending,
        bound_hits,
        out_of_states,
    };
    while let Some((steps, next)) = stack.last_mut() {
        if *next == steps.len() {
            stack.pop();
            continue;
        }
        let k = *next;
        *next += 1;
        let st = &steps[k].state;
        if visited.contains(st) {
            continue;
        }
        if visited.len() >= max_states {
            return result(None, visited.len(), true, bound_hits, max_pending);
        }
        visited.insert(st.clone());
        max_pending = max_pending.max(st.max_pending() as usize);
        if inst.finalize(st) {
            let run = stack
                .iter()
                .map(|(steps, next)| {
                    let s = &steps[next - 1];
                    (s.tid, s.label, s.part)
                })
                .collect();
            return result(Some(run), visited.len(), false, bound_hits, max_pending);
        }
        let succ = inst.successors(st, &mut bound_hits);
        stack.push((succ, 0));
    }
    result(None, visited.len(), false, bound_hits, max_pending)
}

fn build_witness(p: &Program, cycle: Vec<ThreadId>, run: &[(ThreadId, Label, Part)]) -> CheckerWitness {
    let mut counts = vec![0usize; p.threads().len() + 1];
    let (mut tau1, mut tau2) = (Vec::new(), Vec::new());
    for &(tid, label, part) in run {
        counts[tid] += 1;
        let e = Event::new(tid, counts[tid], label);
        match part {
            Part::E1 => tau1.push(e),
            Part::E2 => tau2.push(e),
        }
    }
    let mut tau = init_events(p);
    tau.extend(&tau1);
    tau.extend(&tau2);
    let trace = trace_from_linearisation(&tau).expect("accepting run yields a trace");
    assert!(trace.is_violating(), "accepting run yields a violating trace");
    let normal_form = normalize_violation(&trace).expect("violating trace has a normal form").witness;
    CheckerWitness { cycle, tau1, tau2, trace, normal_form }
}

/// Decide robustness of `p` by searching for an accepting run, one search
/// per cycle thread sequence.
pub fn explore(p: &Program, config: &CheckerConfig) -> CheckerVerdict {
    let threads: Vec<ThreadId> = p.thread_ids().collect();
    let max_len = config.max_cycle_len.unwrap_or(threads.len());
    let seqs = cycle_sequences(&threads, max_len);
    let results: Vec<(Vec<ThreadId>, SearchResult)> = seqs
        .into_par_iter()
        .map(|cycle| {
            let inst = Instrumented::new(p, config, cycle.clone());
            let r = search(&inst, config.max_states);
            (cycle, r)
        })
        .collect();
    let mut stats = CheckerStats { cycle_sequences: results.len(), ..Default::default() };
    let mut explored = 0;
    let mut found = None;
    let mut hit = None;
    for (cycle, r) in results {
        explored += r.states;
        stats.max_pending = stats.max_pending.max(r.max_pending);
        stats.counter_bound_hits += r.bound_hits;
        if r.out_of_states {
            hit = Some(BoundHit::MaxStates);
        } else if r.bound_hits > 0 && hit.is_none() {
            hit = Some(BoundHit::CounterBound);
        }
        if found.is_none() {
            if let Some(run) = r.run {
                found = Some((cycle, run));
            }
        }
    }
    let outcome = match (found, hit) {
        (Some((cycle, run)), _) => Outcome::NotRobust(Box::new(build_witness(p, cycle, &run))),
        (None, Some(h)) => Outcome::Inconclusive(h),
        (None, None) => Outcome::Robust,
    };
    CheckerVerdict { outcome, explored_states: explored, stats }
}
