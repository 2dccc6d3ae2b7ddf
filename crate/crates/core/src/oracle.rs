//! Brute-force enumeration of the traces of a bounded program, used as the
//! reference for consistency, reachability and robustness.
//!
//! Thread prefixes are enumerated as skeletons: CPU events carry concrete
//! values, while the value moved by a remote read or write is left open
//! and fixed later through reads-from. This keeps the number of prefix
//! combinations independent of the value domain for NIC traffic.

use std::collections::{BTreeMap, BTreeSet};
use std::ops::ControlFlow;
use std::sync::atomic::{AtomicU64, Ordering};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::program::{Instr, Label, Program, ThreadId, Value};
use crate::trace::{build_pf, init_events, Event, Relation, Trace};

/// Finitisation of the program for enumeration.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Bounds {
    pub loop_bound: usize,
    pub max_events_per_thread: usize,
}

impl Default for Bounds {
    fn default() -> Bounds {
        Bounds { loop_bound: 2, max_events_per_thread: 64 }
    }
}

/// One skeleton event: a label whose value is open when `open` is set.
type SkEvent = (Label, bool);

/// A distinct prefix of the label paths of one thread.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Prefix {
    pub events: Vec<SkEvent>,
    /// Whether the prefix is also a complete path.
    pub complete: bool,
}

fn skeleton_paths(i: &Instr, domain: &[Value]) -> Vec<Vec<SkEvent>> {
    match *i {
        Instr::RemoteRead { dst, src, node } => vec![vec![
            (Label::NrR { loc: src, value: 0, node }, true),
            (Label::NlW { loc: dst, value: 0, node }, true),
        ]],
        Instr::RemoteWrite { dst, src, node } => vec![vec![
            (Label::NlR { loc: src, value: 0, node }, true),
            (Label::NrW { loc: dst, value: 0, node }, true),
        ]],
        _ => i
            .label_paths(domain)
            .into_iter()
            .map(|p| p.into_iter().map(|l| (l, false)).collect())
            .collect(),
    }
}

/// All distinct skeleton prefixes of a thread, ordered by length and then
/// lexicographically.
pub fn thread_prefixes(p: &Program, tid: ThreadId, bounds: Bounds) -> Vec<Prefix> {
    let a = p.automaton(tid, Some(bounds.loop_bound));
    let domain = p.value_domain();
    let mut found: BTreeMap<Vec<SkEvent>, bool> = BTreeMap::new();
    let mut stack = vec![(a.start(), Vec::<SkEvent>::new())];
    let mut seen = BTreeSet::new();
    while let Some((s, seq)) = stack.pop() {
        if !seen.insert((s, seq.clone())) {
            continue;
        }
        *found.entry(seq.clone()).or_insert(false) |= a.is_final(s);
        for (i, to) in a.moves(s) {
            for path in skeleton_paths(i, domain) {
                let mut ext = seq.clone();
                for (k, ev) in path.iter().enumerate() {
                    if ext.len() == bounds.max_events_per_thread {
                        break;
                    }
                    ext.push(*ev);
                    if k + 1 < path.len() {
                        found.entry(ext.clone()).or_insert(false);
                    }
                }
                if ext.len() == seq.len() + path.len() {
                    stack.push((*to, ext));
                }
            }
        }
    }
    let mut out: Vec<Prefix> = found.into_iter().map(|(events, complete)| Prefix { events, complete }).collect();
    out.sort_by(|x, y| x.events.len().cmp(&y.events.len()).then_with(|| x.events.cmp(&y.events)));
    out
}

/// Union-find over open values with an optional fixed value per class.
#[derive(Clone)]
struct Values {
    parent: Vec<usize>,
    fixed: Vec<Option<Value>>,
}

impl Values {
    fn new(n: usize) -> Values {
        Values { parent: (0..n).collect(), fixed: vec![None; n] }
    }

    fn find(&self, mut v: usize) -> usize {
        while self.parent[v] != v {
            v = self.parent[v];
        }
        v
    }

    fn fix(&mut self, v: usize, val: Value) -> bool {
        let r = self.find(v);
        match self.fixed[r] {
            Some(old) => old == val,
            None => {
                self.fixed[r] = Some(val);
                true
            }
        }
    }

    fn union(&mut self, a: usize, b: usize) -> bool {
        let (ra, rb) = (self.find(a), self.find(b));
        if ra == rb {
            return true;
        }
        let merged = match (self.fixed[ra], self.fixed[rb]) {
            (Some(x), Some(y)) if x != y => return false,
            (x, y) => x.or(y),
        };
        let (lo, hi) = (ra.min(rb), ra.max(rb));
        self.parent[hi] = lo;
        self.fixed[lo] = merged;
        true
    }
}

/// The value of an event's written or read value: fixed or open.
#[derive(Clone, Copy)]
enum Val {
    Fixed(Value),
    Open(usize),
}

/// The per-combination search over rf, mo and nfo.
struct Combo<'a> {
    events: Vec<Event>,
    /// Open value index of each event, if any.
    var: Vec<Option<usize>>,
    nvars: usize,
    po: Relation,
    pf: Relation,
    cands: Vec<Vec<usize>>,
    /// Per location: its initialisation event, its other writes and its
    /// reads.
    by_loc: Vec<(usize, Vec<usize>, Vec<usize>)>,
    nfo_pairs: Vec<(usize, usize)>,
    domain: &'a [Value],
    prune: bool,
}

impl Combo<'_> {
    fn read_val(&self, i: usize) -> Val {
        match self.var[i] {
            Some(v) => Val::Open(v),
            None => Val::Fixed(self.events[i].label.read_value().unwrap()),
        }
    }

    fn write_val(&self, i: usize) -> Val {
        match self.var[i] {
            Some(v) => Val::Open(v),
            None => Val::Fixed(self.events[i].label.write_value().unwrap()),
        }
    }

    fn partial(&self, rf: &Relation, mo: &Relation, nfo: &Relation) -> Trace {
        Trace::from_raw_parts(self.events.clone(), self.po.clone(), self.pf.clone(), rf.clone(), mo.clone(), nfo.clone())
    }

    fn consistent(&self, rf: &Relation, mo: &Relation, nfo: &Relation) -> bool {
        !self.prune || self.partial(rf, mo, nfo).is_rdma_consistent()
    }

    fn run(&self, sink: &mut dyn FnMut(&Trace) -> ControlFlow<()>) -> ControlFlow<()> {
        let n = self.events.len();
        let mut mo = Relation::new(n);
        for (init, ws, _) in &self.by_loc {
            for &w in ws {
                mo.add(*init, w);
            }
        }
        self.choose_loc(0, Relation::new(n), mo, Values::new(self.nvars), sink)
    }

    /// Locations are handled one at a time: first the mo order of its
    /// writes, then the rf source of each of its reads.
    fn choose_loc(
        &self,
        loc: usize,
        rf: Relation,
        mo: Relation,
        vals: Values,
        sink: &mut dyn FnMut(&Trace) -> ControlFlow<()>,
    ) -> ControlFlow<()> {
        if loc == self.by_loc.len() {
            return self.choose_nfo(0, &rf, &mo, Relation::new(self.events.len()), &vals, sink);
        }
        let ws = &self.by_loc[loc].1;
        let mut used = vec![false; ws.len()];
        self.permute(loc, ws, 0, &mut used, &rf, mo, &vals, sink)
    }

    #[allow(clippy::too_many_arguments)]
    fn permute(
        &self,
        loc: usize,
        ws: &[usize],
        placed: usize,
        used: &mut [bool],
        rf: &Relation,
        mo: Relation,
        vals: &Values,
        sink: &mut dyn FnMut(&Trace) -> ControlFlow<()>,
    ) -> ControlFlow<()> {
        if placed == ws.len() {
            return self.choose_rf(loc, 0, rf.clone(), mo, vals.clone(), sink);
        }
        for k in 0..ws.len() {
            if used[k] {
                continue;
            }
            let mut mo2 = mo.clone();
            for (j, &y) in ws.iter().enumerate() {
                if !used[j] && j != k {
                    mo2.add(ws[k], y);
                }
            }
            if !self.consistent(rf, &mo2, &Relation::new(self.events.len())) {
                continue;
            }
            used[k] = true;
            let r = self.permute(loc, ws, placed + 1, used, rf, mo2, vals, sink);
            used[k] = false;
            r?;
        }
        ControlFlow::Continue(())
    }

    fn choose_rf(
        &self,
        loc: usize,
        k: usize,
        rf: Relation,
        mo: Relation,
        vals: Values,
        sink: &mut dyn FnMut(&Trace) -> ControlFlow<()>,
    ) -> ControlFlow<()> {
        let reads = &self.by_loc[loc].2;
        if k == reads.len() {
            return self.choose_loc(loc + 1, rf, mo, vals, sink);
        }
        let r = reads[k];
        for &w in &self.cands[r] {
            let mut v = vals.clone();
            let ok = match (self.read_val(r), self.write_val(w)) {
                (Val::Fixed(a), Val::Fixed(b)) => a == b,
                (Val::Fixed(a), Val::Open(x)) | (Val::Open(x), Val::Fixed(a)) => v.fix(x, a),
                (Val::Open(x), Val::Open(y)) => v.union(x, y),
            };
            if !ok {
                continue;
            }
            let mut rf2 = rf.clone();
            rf2.add(w, r);
            if !self.consistent(&rf2, &mo, &Relation::new(self.events.len())) {
                continue;
            }
            self.choose_rf(loc, k + 1, rf2, mo.clone(), v, sink)?;
        }
        ControlFlow::Continue(())
    }

    fn choose_nfo(
        &self,
        k: usize,
        rf: &Relation,
        mo: &Relation,
        nfo: Relation,
        vals: &Values,
        sink: &mut dyn FnMut(&Trace) -> ControlFlow<()>,
    ) -> ControlFlow<()> {
        if k == self.nfo_pairs.len() {
            return self.emit(rf, mo, &nfo, vals, sink);
        }
        let (a, b) = self.nfo_pairs[k];
        for (x, y) in [(a, b), (b, a)] {
            let mut nfo2 = nfo.clone();
            nfo2.add(x, y);
            if self.consistent(rf, mo, &nfo2) {
                self.choose_nfo(k + 1, rf, mo, nfo2, vals, sink)?;
            }
        }
        ControlFlow::Continue(())
    }

    fn emit(
        &self,
        rf: &Relation,
        mo: &Relation,
        nfo: &Relation,
        vals: &Values,
        sink: &mut dyn FnMut(&Trace) -> ControlFlow<()>,
    ) -> ControlFlow<()> {
        let roots: Vec<usize> =
            (0..self.nvars).filter(|&v| vals.find(v) == v && vals.fixed[v].is_none()).collect();
        let mut choice = vec![0usize; roots.len()];
        loop {
            let value_of = |v: usize| {
                let r = vals.find(v);
                vals.fixed[r].unwrap_or_else(|| self.domain[choice[roots.binary_search(&r).unwrap()]])
            };
            let events: Vec<Event> = self
                .events
                .iter()
                .zip(&self.var)
                .map(|(e, v)| match v {
                    Some(v) => Event { label: e.label.with_value(value_of(*v)), ..*e },
                    None => *e,
                })
                .collect();
            let t = Trace::from_raw_parts(events, self.po.clone(), self.pf.clone(), rf.clone(), mo.clone(), nfo.clone());
            sink(&t)?;
            // next assignment of the unconstrained classes
            let mut i = 0;
            while i < choice.len() {
                choice[i] += 1;
                if choice[i] < self.domain.len() {
                    break;
                }
                choice[i] = 0;
                i += 1;
            }
            if i == choice.len() {
                return ControlFlow::Continue(());
            }
        }
    }
}

/// Enumerates traces of a program within bounds.
pub struct Enumerator<'a> {
    program: &'a Program,
    prefixes: Vec<Vec<Prefix>>,
}

impl<'a> Enumerator<'a> {
    pub fn new(program: &'a Program, bounds: Bounds) -> Enumerator<'a> {
        let prefixes = program.thread_ids().map(|t| thread_prefixes(program, t, bounds)).collect();
        Enumerator { program, prefixes }
    }

    /// Number of prefix combinations (not all of them yield traces).
    pub fn combinations(&self) -> usize {
        self.prefixes.iter().map(Vec::len).product()
    }

    fn combo_indices(&self, k: usize) -> Vec<usize> {
        let mut rest = k;
        let mut idx = vec![0; self.prefixes.len()];
        for t in (0..self.prefixes.len()).rev() {
            idx[t] = rest % self.prefixes[t].len();
            rest /= self.prefixes[t].len();
        }
        idx
    }

    fn combo(&self, idx: &[usize], prune: bool) -> Option<Combo<'a>> {
        let mut events = init_events(self.program);
        let mut var = vec![None; events.len()];
        let mut nvars = 0;
        for (t, &i) in idx.iter().enumerate() {
            let mut open_read = 0;
            for (k, &(label, open)) in self.prefixes[t][i].events.iter().enumerate() {
                events.push(Event::new(t + 1, k + 1, label));
                if open {
                    if label.kind().is_nic_write() {
                        var.push(Some(open_read));
                    } else {
                        open_read = nvars;
                        nvars += 1;
                        var.push(Some(open_read));
                    }
                } else {
                    var.push(None);
                }
            }
        }
        build_combo(events, var, nvars, self.program.value_domain(), prune)
    }

    /// Visit every trace, in canonical order. With `consistent_only`, only
    /// RDMA-consistent traces are produced and inconsistent partial choices
    /// are pruned early.
    pub fn for_each(&self, consistent_only: bool, mut f: impl FnMut(&Trace) -> ControlFlow<()>) -> ControlFlow<()> {
        for k in 0..self.combinations() {
            let idx = self.combo_indices(k);
            if let Some(c) = self.combo(&idx, consistent_only) {
                c.run(&mut f)?;
            }
        }
        ControlFlow::Continue(())
    }

    /// Like [`Enumerator::for_each`], restricted to combinations whose
    /// thread prefixes satisfy `want`.
    pub fn for_each_where(
        &self,
        consistent_only: bool,
        want: impl Fn(&[&Prefix]) -> bool,
        mut f: impl FnMut(&Trace) -> ControlFlow<()>,
    ) -> ControlFlow<()> {
        for k in 0..self.combinations() {
            let idx = self.combo_indices(k);
            let chosen: Vec<&Prefix> = idx.iter().enumerate().map(|(t, &i)| &self.prefixes[t][i]).collect();
            if !want(&chosen) {
                continue;
            }
            if let Some(c) = self.combo(&idx, consistent_only) {
                c.run(&mut f)?;
            }
        }
        ControlFlow::Continue(())
    }

    /// The first trace (in canonical order) satisfying `pred`, searching
    /// combinations in parallel.
    pub fn find_first(&self, consistent_only: bool, pred: impl Fn(&Trace) -> bool + Sync) -> Option<Trace> {
        (0..self.combinations()).into_par_iter().find_map_first(|k| {
            let c = self.combo(&self.combo_indices(k), consistent_only)?;
            let mut hit = None;
            let _ = c.run(&mut |t| {
                if pred(t) {
                    hit = Some(t.clone());
                    ControlFlow::Break(())
                } else {
                    ControlFlow::Continue(())
                }
            });
            hit
        })
    }

    pub fn prefixes(&self, tid: ThreadId) -> &[Prefix] {
        &self.prefixes[tid - 1]
    }
}

fn build_combo(events: Vec<Event>, var: Vec<Option<usize>>, nvars: usize, domain: &[Value], prune: bool) -> Option<Combo<'_>> {
    let n = events.len();
    let pf = Relation::from_edges(n, build_pf(&events).ok()?);
    let mut po = Relation::new(n);
    for a in 0..n {
        for b in a + 1..n {
            if !events[a].is_init() && events[a].tid == events[b].tid {
                po.add(a, b);
            }
        }
    }
    let reads: Vec<usize> = (0..n).filter(|&i| events[i].label.is_read()).collect();
    let mut cands = vec![Vec::new(); n];
    for &r in &reads {
        let loc = events[r].label.loc();
        cands[r] = (0..n)
            .filter(|&w| w != r && events[w].label.is_write() && events[w].label.loc() == loc)
            .filter(|&w| match (var[r], var[w]) {
                (None, None) => events[w].label.write_value() == events[r].label.read_value(),
                _ => true,
            })
            .collect();
        if cands[r].is_empty() {
            return None;
        }
    }
    let mut by_loc = Vec::new();
    for (init, e) in events.iter().enumerate().filter(|(_, e)| e.is_init()) {
        let ws: Vec<usize> = (0..n)
            .filter(|&w| !events[w].is_init() && events[w].label.is_write() && events[w].label.loc() == e.label.loc())
            .collect();
        let rs: Vec<usize> = reads.iter().copied().filter(|&r| events[r].label.loc() == e.label.loc()).collect();
        by_loc.push((init, ws, rs));
    }
    let mut nfo_pairs = Vec::new();
    for a in 0..n {
        for b in a + 1..n {
            if crate::trace::nfo_pair(&events[a], &events[b]) {
                nfo_pairs.push((a, b));
            }
        }
    }
    Some(Combo {
        events,
        var,
        nvars,
        po,
        pf,
        cands,
        by_loc,
        nfo_pairs,
        domain,
        prune,
    })
}

/// Visit every trace over a fixed, fully valued event set (sorted by
/// `(tid, iota)`, initialisation events included), in canonical order.
pub fn for_each_trace_over(
    events: Vec<Event>,
    consistent_only: bool,
    mut f: impl FnMut(&Trace) -> ControlFlow<()>,
) -> ControlFlow<()> {
    let var = vec![None; events.len()];
    match build_combo(events, var, 0, &[], consistent_only) {
        Some(c) => c.run(&mut f),
        None => ControlFlow::Continue(()),
    }
}

/// Visit every well-formed trace of the program within bounds.
pub fn enumerate_traces(p: &Program, bounds: Bounds, f: impl FnMut(&Trace) -> ControlFlow<()>) {
    let _ = Enumerator::new(p, bounds).for_each(false, f);
}

pub fn count_traces(p: &Program, bounds: Bounds) -> usize {
    let mut n = 0;
    enumerate_traces(p, bounds, |_| {
        n += 1;
        ControlFlow::Continue(())
    });
    n
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct OracleStats {
    /// Traces produced by the enumeration. Inconsistent traces are pruned
    /// before they are produced, so this equals `consistent`.
    pub traces: u64,
    pub consistent: u64,
    pub violating: u64,
}

#[derive(Clone, Debug)]
pub struct OracleVerdict {
    pub robust: bool,
    pub witness: Option<Trace>,
    pub stats: OracleStats,
}

/// Search for a violating trace. The witness is the first one in canonical
/// order; statistics are exact only when the program is robust.
pub fn check_robustness_oracle(p: &Program, bounds: Bounds) -> OracleVerdict {
    let en = Enumerator::new(p, bounds);
    let consistent = AtomicU64::new(0);
    let violating = AtomicU64::new(0);
    let witness = en.find_first(true, |t| {
        consistent.fetch_add(1, Ordering::Relaxed);
        let v = !t.is_sc_consistent();
        if v {
            violating.fetch_add(1, Ordering::Relaxed);
        }
        v
    });
    let c = consistent.into_inner();
    OracleVerdict {
        robust: witness.is_none(),
        witness,
        stats: OracleStats { traces: c, consistent: c, violating: violating.into_inner() },
    }
}

/// What a reachability query asks for.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ReachTarget {
    /// The thread has executed at least `count` events.
    EventCount { tid: ThreadId, count: usize },
    /// The thread has run a complete path.
    Terminated { tid: ThreadId },
    /// Every thread has run a complete path.
    AllTerminated,
}

/// Is there an RDMA-consistent trace within bounds meeting the target?
pub fn check_reachability_oracle(p: &Program, target: ReachTarget, bounds: Bounds) -> bool {
    let en = Enumerator::new(p, bounds);
    let want = |chosen: &[&Prefix]| match target {
        ReachTarget::EventCount { tid, count } => chosen[tid - 1].events.len() >= count,
        ReachTarget::Terminated { tid } => chosen[tid - 1].complete,
        ReachTarget::AllTerminated => chosen.iter().all(|c| c.complete),
    };
    (0..en.combinations()).into_par_iter().any(|k| {
        let idx = en.combo_indices(k);
        let chosen: Vec<&Prefix> = idx.iter().enumerate().map(|(t, &i)| &en.prefixes[t][i]).collect();
        if !want(&chosen) {
            return false;
        }
        let Some(c) = en.combo(&idx, true) else { return false };
        c.run(&mut |_| ControlFlow::Break(())).is_break()
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::program::parse_program;

    #[test]
    fn single_write_has_two_traces() {
        let p = parse_program("node N1 { x=0 } thread T1 on N1 { x := 1 }").unwrap();
        assert_eq!(count_traces(&p, Bounds::default()), 2);
    }

    #[test]
    fn empty_program_has_one_trace() {
        let p = parse_program("node N1 { x=0 }").unwrap();
        assert_eq!(count_traces(&p, Bounds::default()), 1);
    }

    #[test]
    fn prefixes_are_sorted_and_flagged() {
        let p = parse_program("node N1 { x=0 } node N2 { z=0 } thread T on N1 { N2.z := x; x := 1 }").unwrap();
        let pre = thread_prefixes(&p, 1, Bounds::default());
        let lens: Vec<usize> = pre.iter().map(|q| q.events.len()).collect();
        assert_eq!(lens, vec![0, 1, 2, 3]);
        assert!(pre[3].complete && !pre[2].complete);
    }

    #[test]
    fn assume_without_writer_is_unreachable() {
        let p = parse_program("node N1 { x=0 } thread T1 on N1 { assume x == 1 }").unwrap();
        let b = Bounds::default();
        assert!(!check_reachability_oracle(&p, ReachTarget::EventCount { tid: 1, count: 1 }, b));
        assert!(check_reachability_oracle(&p, ReachTarget::EventCount { tid: 1, count: 0 }, b));
    }

    #[test]
    fn open_values_follow_reads_from() {
        // The remote read can only see the initial value 1 or the written 2.
        let p = parse_program(
            "node A { a=0 } node B { b=1 } thread T on A { a := B.b } thread U on B { b := 2 }",
        )
        .unwrap();
        let mut seen = BTreeSet::new();
        enumerate_traces(&p, Bounds::default(), |t| {
            for e in t.events() {
                if let Label::NrR { value, .. } = e.label {
                    seen.insert(value);
                }
            }
            ControlFlow::Continue(())
        });
        assert_eq!(seen, BTreeSet::from([1, 2]));
    }
}
