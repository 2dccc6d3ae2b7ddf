//! Derived relations and consistency.

use std::collections::{BTreeMap, VecDeque};

use super::{Event, Malformed, Relation, Trace};
use crate::program::{Kind, Label, NodeId, ThreadId};

/// Membership of a po edge in ippo and oppo.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum PoClass {
    InBoth,
    IppoOnly,
    Neither,
}

#[derive(Clone, Copy)]
enum Cell {
    Yes,
    No,
    Sqp,
    IppoSqp,
}

fn column(k: Kind) -> usize {
    match k {
        Kind::Lr | Kind::Lw | Kind::Cas | Kind::Poll => 0,
        Kind::NlR => 1,
        Kind::NrW => 2,
        Kind::NrR => 3,
        Kind::NlW => 4,
        Kind::Nf => 5,
    }
}

const TABLE: [[Cell; 6]; 6] = {
    use Cell::*;
    [
        [Yes, Yes, Yes, Yes, Yes, Yes],
        [No, Sqp, Sqp, Sqp, Sqp, Sqp],
        [No, No, Sqp, Sqp, Sqp, IppoSqp],
        [No, No, No, No, Sqp, Sqp],
        [No, No, No, No, Sqp, IppoSqp],
        [No, Sqp, Sqp, Sqp, Sqp, Sqp],
    ]
};

/// Classify the po edge from an event labelled `l1` to a later event of
/// the same thread labelled `l2`.
pub fn classify_po_edge(l1: &Label, l2: &Label, same_qp: bool) -> PoClass {
    match TABLE[column(l1.kind())][column(l2.kind())] {
        Cell::Yes => PoClass::InBoth,
        Cell::No => PoClass::Neither,
        Cell::Sqp if same_qp => PoClass::InBoth,
        Cell::IppoSqp if same_qp => PoClass::IppoOnly,
        _ => PoClass::Neither,
    }
}

/// Whether a po edge between two events of the same queue pair, of kinds
/// `earlier` and `later`, is in oppo.
pub fn oppo_same_qp(earlier: Kind, later: Kind) -> bool {
    matches!(TABLE[column(earlier)][column(later)], Cell::Yes | Cell::Sqp)
}

/// Polls-from: the k-th poll of a queue pair reads from its k-th NIC write.
/// `events` must be sorted by `(tid, iota)`.
pub fn build_pf(events: &[Event]) -> Result<Vec<(usize, usize)>, Malformed> {
    let mut queues: BTreeMap<(ThreadId, NodeId), VecDeque<usize>> = BTreeMap::new();
    let mut out = Vec::new();
    for (i, e) in events.iter().enumerate() {
        if e.is_init() {
            continue;
        }
        let Some(node) = e.label.remote() else { continue };
        let q = queues.entry((e.tid, node)).or_default();
        if e.kind().is_nic_write() {
            q.push_back(i);
        } else if e.kind() == Kind::Poll {
            let w = q.pop_front().ok_or(Malformed::PollUnderflow(e.id()))?;
            out.push((w, i));
        }
    }
    Ok(out)
}

pub(crate) fn reads_before(t: &Trace) -> Relation {
    let mut rb = t.rf.inverse().compose(&t.mo);
    for i in 0..t.len() {
        rb.remove(i, i);
    }
    rb
}

fn preserved(t: &Trace) -> (Relation, Relation) {
    let n = t.len();
    let mut ippo = Relation::new(n);
    let mut oppo = Relation::new(n);
    for (a, b) in t.po.edges() {
        match classify_po_edge(&t.events[a].label, &t.events[b].label, t.same_qp(a, b)) {
            PoClass::InBoth => {
                ippo.add(a, b);
                oppo.add(a, b);
            }
            PoClass::IppoOnly => ippo.add(a, b),
            PoClass::Neither => {}
        }
    }
    (ippo, oppo)
}

/// All derived relations of a trace, as transitive closures where the
/// definition asks for one.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Derived {
    pub rb: Relation,
    pub sc: Relation,
    pub ippo: Relation,
    pub oppo: Relation,
    pub ib: Relation,
    pub ob: Relation,
}

struct Parts {
    rb: Relation,
    ippo: Relation,
    oppo: Relation,
    ib: Relation,
    ob_base: Relation,
}

fn parts(t: &Trace) -> Parts {
    let rb = reads_before(t);
    let (ippo, oppo) = preserved(t);
    let ib = ippo.union(&t.rf).union(&t.pf).union(&t.nfo).closure();
    let ev = &t.events;
    let mut ob_base = oppo.union(&t.rf).union(&t.nfo).union(&rb).union(&t.mo);
    ob_base.union_with(&t.pf.filter_domain(|a| ev[a].kind() == Kind::NlW));
    ob_base.union_with(&ib.filter_domain(|a| ev[a].kind().is_instantaneous()));
    Parts { rb, ippo, oppo, ib, ob_base }
}

/// The generating edges of ob; ob is their transitive closure.
pub(crate) fn ob_base(t: &Trace) -> Relation {
    parts(t).ob_base
}

pub fn derive(t: &Trace) -> Derived {
    let p = parts(t);
    let sc = t.po.union(&t.rf).union(&p.rb).union(&t.mo).closure();
    Derived { sc, ob: p.ob_base.closure(), rb: p.rb, ippo: p.ippo, oppo: p.oppo, ib: p.ib }
}

/// One edge of an sc cycle, labelled with the base relation it comes from.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct CycleEdge {
    pub from: usize,
    pub to: usize,
    pub rel: &'static str,
}

/// A shortest cycle over immediate po, rf, rb and mo edges, if sc is
/// cyclic. Ties are broken towards the smallest starting event.
pub fn sc_cycle(t: &Trace) -> Option<Vec<CycleEdge>> {
    let n = t.len();
    let mut po_imm = Relation::new(n);
    for (a, b) in t.po.edges() {
        if !t.po.succ(a).any(|m| t.po.contains(m, b)) {
            po_imm.add(a, b);
        }
    }
    let rb = reads_before(t);
    let named = [("po", &po_imm), ("rf", &t.rf), ("rb", &rb), ("mo", &t.mo)];
    let base = po_imm.union(&t.rf).union(&rb).union(&t.mo);
    let mut best: Option<Vec<usize>> = None;
    for s in 0..n {
        let mut parent = vec![usize::MAX; n];
        let mut queue = VecDeque::from([s]);
        let mut seen = vec![false; n];
        let mut found = None;
        while let Some(v) = queue.pop_front() {
            for w in base.succ(v) {
                if w == s {
                    found = Some(v);
                    break;
                }
                if !seen[w] {
                    seen[w] = true;
                    parent[w] = v;
                    queue.push_back(w);
                }
            }
            if found.is_some() {
                break;
            }
        }
        let Some(last) = found else { continue };
        let mut path = vec![last];
        while *path.last().unwrap() != s {
            path.push(parent[*path.last().unwrap()]);
        }
        path.reverse();
        if best.as_ref().is_none_or(|b| path.len() < b.len()) {
            best = Some(path);
        }
    }
    let nodes = best?;
    Some(
        (0..nodes.len())
            .map(|k| {
                let (a, b) = (nodes[k], nodes[(k + 1) % nodes.len()]);
                let rel = named.iter().find(|(_, r)| r.contains(a, b)).map(|(n, _)| *n).unwrap();
                CycleEdge { from: a, to: b, rel }
            })
            .collect(),
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::program::{LocId, NodeId};
    use crate::trace::Event;

    const N: NodeId = NodeId(1);
    const X: LocId = LocId(0);

    fn lw() -> Label {
        Label::Lw { loc: X, value: 1 }
    }
    fn lr() -> Label {
        Label::Lr { loc: X, value: 1 }
    }
    fn nlr() -> Label {
        Label::NlR { loc: X, value: 1, node: N }
    }
    fn nrw() -> Label {
        Label::NrW { loc: LocId(1), value: 1, node: N }
    }
    fn nlw() -> Label {
        Label::NlW { loc: X, value: 1, node: N }
    }
    fn poll() -> Label {
        Label::Poll { node: N }
    }

    #[test]
    fn table_cells() {
        assert_eq!(classify_po_edge(&lw(), &nrw(), false), PoClass::InBoth);
        assert_eq!(classify_po_edge(&lw(), &nrw(), true), PoClass::InBoth);
        assert_eq!(classify_po_edge(&nrw(), &Label::Nf { node: N }, true), PoClass::IppoOnly);
        assert_eq!(classify_po_edge(&nrw(), &Label::Nf { node: N }, false), PoClass::Neither);
        assert_eq!(classify_po_edge(&nlr(), &lr(), true), PoClass::Neither);
        assert_eq!(classify_po_edge(&nlr(), &nrw(), true), PoClass::InBoth);
        assert_eq!(classify_po_edge(&nlw(), &nlr(), true), PoClass::Neither);
    }

    #[test]
    fn nic_edges_need_same_queue_pair() {
        let labels = [lw(), lr(), nlr(), nrw(), nlw(), poll(), Label::Nf { node: N }, Label::NrR { loc: LocId(1), value: 0, node: N }];
        for a in &labels {
            for b in &labels {
                for q in [false, true] {
                    let c = classify_po_edge(a, b, q);
                    if !q && a.kind().is_nic() {
                        assert_eq!(c, PoClass::Neither, "{a:?} {b:?}");
                    }
                }
            }
        }
    }

    fn ev(tid: usize, iota: usize, l: Label) -> Event {
        Event::new(tid, iota, l)
    }

    #[test]
    fn pf_fifo() {
        let evs = vec![
            ev(1, 1, nlw()),
            ev(1, 2, nrw()),
            ev(1, 3, poll()),
            ev(1, 4, poll()),
        ];
        assert_eq!(build_pf(&evs).unwrap(), vec![(0, 2), (1, 3)]);
        assert_eq!(build_pf(&evs[..2]).unwrap(), vec![]);
        assert_eq!(build_pf(&[ev(1, 1, poll())]), Err(Malformed::PollUnderflow(ev(1, 1, poll()).id())));
    }

    #[test]
    fn pf_is_per_queue_pair() {
        let other = Label::NlW { loc: X, value: 1, node: NodeId(2) };
        let evs = vec![ev(1, 1, other), ev(1, 2, poll())];
        assert!(build_pf(&evs).is_err());
        let evs = vec![ev(1, 1, nlw()), ev(2, 1, poll())];
        assert!(build_pf(&evs).is_err());
    }
}
