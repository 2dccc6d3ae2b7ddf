//! Linearisations of traces and the trace T(τ) induced by an event order.

use std::cmp::Reverse;
use std::collections::{BTreeMap, BinaryHeap};

use thiserror::Error;

use super::{nfo_pair, Event, EventId, Malformed, Relation, Trace};

/// Build T(τ): rf from the last preceding same-location write, mo and nfo
/// from the order of τ, po and pf from the event set.
pub fn trace_from_linearisation(tau: &[Event]) -> Result<Trace, Malformed> {
    let mut events = tau.to_vec();
    events.sort();
    for w in events.windows(2) {
        if w[0].id() == w[1].id() {
            return Err(Malformed::DuplicateEvent(w[0].id()));
        }
    }
    let n = events.len();
    let idx: BTreeMap<EventId, usize> = events.iter().enumerate().map(|(i, e)| (e.id(), i)).collect();
    let order: Vec<usize> = tau.iter().map(|e| idx[&e.id()]).collect();

    let mut rf = Relation::new(n);
    let mut mo = Relation::new(n);
    let mut nfo = Relation::new(n);
    for (p, &i) in order.iter().enumerate() {
        let e = &events[i];
        let earlier = &order[..p];
        if e.is_init()
            && earlier.iter().any(|&j| events[j].label.is_write() && events[j].label.loc() == e.label.loc())
        {
            return Err(Malformed::InitNotFirst(e.id()));
        }
        if e.label.is_read() {
            let src = earlier
                .iter()
                .rev()
                .copied()
                .find(|&j| events[j].label.is_write() && events[j].label.loc() == e.label.loc())
                .ok_or(Malformed::RfMissingSource(e.id()))?;
            if events[src].label.write_value() != e.label.read_value() {
                return Err(Malformed::RfValueMismatch { read: e.id(), write: events[src].id() });
            }
            rf.add(src, i);
        }
        for &j in earlier {
            let d = &events[j];
            if e.label.is_write() && d.label.is_write() && d.label.loc() == e.label.loc() {
                mo.add(j, i);
            }
            if nfo_pair(d, e) {
                nfo.add(j, i);
            }
        }
    }
    for tid in events.iter().filter(|e| !e.is_init()).map(|e| e.tid) {
        let iotas = events.iter().filter(|e| e.tid == tid).map(|e| e.iota);
        if iotas.enumerate().any(|(k, i)| i != k + 1) {
            return Err(Malformed::NotAPathPrefix(tid));
        }
    }
    Trace::assemble(events, rf, mo, nfo)
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("the {0} relation is cyclic")]
pub struct CyclicOrder(pub &'static str);

fn topological(t: &Trace, r: &Relation, name: &'static str) -> Result<Vec<Event>, CyclicOrder> {
    let n = t.len();
    let mut indeg = vec![0usize; n];
    for (_, b) in r.edges() {
        indeg[b] += 1;
    }
    let mut ready: BinaryHeap<Reverse<(EventId, usize)>> =
        (0..n).filter(|&i| indeg[i] == 0).map(|i| Reverse((t.event(i).id(), i))).collect();
    let mut out = Vec::with_capacity(n);
    while let Some(Reverse((_, i))) = ready.pop() {
        out.push(*t.event(i));
        for j in r.succ(i) {
            indeg[j] -= 1;
            if indeg[j] == 0 {
                ready.push(Reverse((t.event(j).id(), j)));
            }
        }
    }
    if out.len() == n {
        Ok(out)
    } else {
        Err(CyclicOrder(name))
    }
}

/// Topological order of ob, always taking the available event with the
/// smallest `(tid, iota)`.
pub fn linearise_ob(t: &Trace) -> Result<Vec<Event>, CyclicOrder> {
    topological(t, &super::derive::ob_base(t), "ob")
}

/// Topological order of sc with the same tie-break.
pub fn linearise_sc(t: &Trace) -> Result<Vec<Event>, CyclicOrder> {
    let base = t.po().union(t.rf()).union(t.mo()).union(&super::derive::reads_before(t));
    topological(t, &base, "sc")
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::program::{Label, LocId};

    fn init(loc: u16, v: i64) -> Event {
        Event::new(0, loc as usize, Label::Lw { loc: LocId(loc), value: v })
    }

    #[test]
    fn inits_only() {
        let t = trace_from_linearisation(&[init(0, 0), init(1, 5)]).unwrap();
        assert!(t.rf().is_empty() && t.mo().is_empty() && t.nfo().is_empty() && t.pf().is_empty());
        assert!(t.is_sc_consistent() && t.is_rdma_consistent());
    }

    #[test]
    fn read_without_matching_write() {
        let r = Event::new(1, 1, Label::Lr { loc: LocId(0), value: 1 });
        let e = trace_from_linearisation(&[init(0, 0), r]).unwrap_err();
        assert_eq!(e.reason(), "rf_value_mismatch");
        let e = trace_from_linearisation(&[r, init(0, 0)]).unwrap_err();
        assert_eq!(e.reason(), "rf_missing_source");
    }

    #[test]
    fn init_after_write() {
        let w = Event::new(1, 1, Label::Lw { loc: LocId(0), value: 1 });
        let e = trace_from_linearisation(&[w, init(0, 0)]).unwrap_err();
        assert_eq!(e.reason(), "init_not_first");
    }

    #[test]
    fn gap_in_thread() {
        let w = Event::new(1, 2, Label::Lw { loc: LocId(0), value: 1 });
        let e = trace_from_linearisation(&[init(0, 0), w]).unwrap_err();
        assert_eq!(e.reason(), "not_a_path_prefix");
    }

    #[test]
    fn single_write() {
        let w = Event::new(1, 1, Label::Lw { loc: LocId(0), value: 1 });
        let t = trace_from_linearisation(&[init(0, 0), w]).unwrap();
        let d = t.derive();
        assert_eq!(d.sc.edges().collect::<Vec<_>>(), vec![(0, 1)]);
        assert!(d.ob.is_irreflexive());
        assert_eq!(linearise_ob(&t).unwrap(), vec![init(0, 0), w]);
    }

    #[test]
    fn empty_ob_sorts_by_id() {
        let a = Event::new(2, 1, Label::Lw { loc: LocId(1), value: 1 });
        let b = Event::new(1, 1, Label::Lw { loc: LocId(0), value: 1 });
        let t = trace_from_linearisation(&[init(0, 0), init(1, 0), a, b]).unwrap();
        let ids: Vec<_> = linearise_ob(&t).unwrap().iter().map(|e| e.id()).collect();
        assert_eq!(ids, vec![init(0, 0).id(), init(1, 0).id(), b.id(), a.id()]);
    }
}
