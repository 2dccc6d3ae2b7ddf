//! Normal forms of violating traces.
//!
//! A violating trace is first shrunk to a minimal one. A maximal event `e`
//! is then removed from an ob-linearisation `τ = τ1·e·τ2`, NIC values are
//! re-bound to obtain τ′, and `e` is reinserted between the two halves
//! reordered along an sc-linearisation σ of T(τ′):
//! `τ″ = τ1↓σ · e · τ2↓σ`.

use std::collections::{BTreeMap, BTreeSet};
use std::ops::ControlFlow;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::oracle::for_each_trace_over;
use crate::program::{Kind, Value};
use crate::trace::{linearise_ob, linearise_sc, trace_from_linearisation, Event, EventId, Malformed, Relation, Trace};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Part {
    E1,
    E2,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct NormalFormWitness {
    /// T″ = T(τ″).
    pub trace_pp: Trace,
    pub partition: BTreeMap<EventId, Part>,
    pub pivot: EventId,
    /// τ″, initialisation events included.
    pub tau_pp: Vec<Event>,
}

/// A witness together with the intermediate objects of its construction.
#[derive(Clone, Debug)]
pub struct Normalization {
    pub witness: NormalFormWitness,
    /// The shrunk violating trace the construction started from.
    pub minimal: Trace,
    /// The ob-linearisation τ of `minimal`.
    pub tau: Vec<Event>,
    /// τ′, the linearisation with the pivot removed.
    pub tau_prime: Vec<Event>,
    /// Events of τ′ whose value differs from τ.
    pub changed: Vec<EventId>,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum NormalFormError {
    #[error("trace is not violating")]
    NotViolating,
    #[error("pivot {0} is not in the linearisation")]
    PivotAbsent(EventId),
    #[error("pivot {0} is not a maximal event")]
    PivotNotMaximal(EventId),
    #[error("malformed intermediate trace: {0}")]
    Malformed(#[from] Malformed),
    #[error("{0}")]
    Internal(String),
}

fn is_maximal(t: &Trace, ib: &Relation, i: usize) -> bool {
    let e = t.event(i);
    !e.is_init() && t.po().succ(i).next().is_none() && !ib.succ(i).any(|j| t.event(j).label.is_cpu())
}

/// The `(tid, iota)`-least maximal event: po-maximal with no CPU event
/// ib-after it. Initialisation events are never chosen.
pub fn find_maximal_event(t: &Trace) -> Option<usize> {
    let ib = t.derive().ib;
    (0..t.len()).find(|&i| is_maximal(t, &ib, i))
}

/// Remove `pivot` from the ob-linearisation `tau`, re-binding NIC reads to
/// the last preceding write and NIC writes to their paired read.
pub fn remove_maximal(tau: &[Event], pivot: EventId) -> Result<Vec<Event>, NormalFormError> {
    if !tau.iter().any(|e| e.id() == pivot) {
        return Err(NormalFormError::PivotAbsent(pivot));
    }
    let t = trace_from_linearisation(tau)?;
    let ib = t.derive().ib;
    let pi = t.index_of(pivot).unwrap();
    if !is_maximal(&t, &ib, pi) {
        return Err(NormalFormError::PivotNotMaximal(pivot));
    }
    Ok(rebind(tau, pivot))
}

fn rebind(tau: &[Event], pivot: EventId) -> Vec<Event> {
    let mut last: BTreeMap<u16, Value> = BTreeMap::new();
    let mut read_value: BTreeMap<EventId, Value> = BTreeMap::new();
    let mut out = Vec::with_capacity(tau.len());
    for e in tau.iter().filter(|e| e.id() != pivot) {
        let label = match e.kind() {
            Kind::NlR | Kind::NrR => {
                let loc = e.label.loc().unwrap();
                last.get(&loc.0).map_or(e.label, |&v| e.label.with_value(v))
            }
            Kind::NlW | Kind::NrW => {
                let pair = EventId { tid: e.tid, iota: e.iota - 1 };
                read_value.get(&pair).map_or(e.label, |&v| e.label.with_value(v))
            }
            _ => e.label,
        };
        if let Some(v) = label.read_value() {
            read_value.insert(e.id(), v);
        }
        if let (Some(loc), Some(v)) = (label.loc(), label.write_value()) {
            last.insert(loc.0, v);
        }
        out.push(Event { label, ..*e });
    }
    out
}

/// Shrink a violating trace: repeatedly drop the last event of some thread
/// when the remaining events still admit a violating trace.
pub fn shrink(t: &Trace) -> Trace {
    let mut cur = t.clone();
    'outer: loop {
        let tids: BTreeSet<usize> = cur.events().iter().filter(|e| !e.is_init()).map(|e| e.tid).collect();
        for tid in tids {
            let last = cur.events().iter().rposition(|e| e.tid == tid).unwrap();
            let events: Vec<Event> =
                cur.events().iter().enumerate().filter(|&(i, _)| i != last).map(|(_, e)| *e).collect();
            let mut found = None;
            let _ = for_each_trace_over(events, true, |cand| {
                if !cand.is_sc_consistent() {
                    found = Some(cand.clone());
                    ControlFlow::Break(())
                } else {
                    ControlFlow::Continue(())
                }
            });
            if let Some(smaller) = found {
                cur = smaller;
                continue 'outer;
            }
        }
        return cur;
    }
}

/// Bring a violating trace into normal form.
pub fn normalize_violation(t: &Trace) -> Result<Normalization, NormalFormError> {
    if !t.is_violating() {
        return Err(NormalFormError::NotViolating);
    }
    let mut start = shrink(t);
    loop {
        let minimal = start.clone();
        let pivot_index = find_maximal_event(&minimal)
            .ok_or_else(|| NormalFormError::Internal("violating trace without a maximal event".into()))?;
        let pivot = minimal.event(pivot_index).id();
        let tau = linearise_ob(&minimal).map_err(|e| NormalFormError::Internal(e.to_string()))?;
        let cut = tau.iter().position(|e| e.id() == pivot).unwrap();
        let tau_prime = rebind(&tau, pivot);
        let t_prime = trace_from_linearisation(&tau_prime)?;
        if t_prime.is_violating() {
            // The pivot was not needed for the violation; continue from the
            // smaller trace.
            start = shrink(&t_prime);
            continue;
        }
        if !t_prime.is_rdma_consistent() {
            return Err(NormalFormError::Internal("T(τ′) is not RDMA-consistent".into()));
        }
        let sigma = linearise_sc(&t_prime).map_err(|e| NormalFormError::Internal(e.to_string()))?;
        let rank: BTreeMap<EventId, usize> = sigma.iter().enumerate().map(|(k, e)| (e.id(), k)).collect();
        let mut tau1: Vec<Event> = tau[..cut].to_vec();
        let mut tau2: Vec<Event> = tau[cut + 1..].to_vec();
        tau1.sort_by_key(|e| rank[&e.id()]);
        tau2.sort_by_key(|e| rank[&e.id()]);
        let mut partition = BTreeMap::new();
        let mut tau_pp = Vec::with_capacity(tau.len());
        for e in &tau1 {
            partition.insert(e.id(), Part::E1);
            tau_pp.push(*e);
        }
        partition.insert(pivot, Part::E1);
        tau_pp.push(tau[cut]);
        for e in &tau2 {
            partition.insert(e.id(), Part::E2);
            tau_pp.push(*e);
        }
        let trace_pp = trace_from_linearisation(&tau_pp)?;
        let changed = tau
            .iter()
            .filter(|e| e.id() != pivot)
            .zip(&tau_prime)
            .filter(|(a, b)| a.label != b.label)
            .map(|(a, _)| a.id())
            .collect();
        return Ok(Normalization {
            witness: NormalFormWitness { trace_pp, partition, pivot, tau_pp },
            minimal,
            tau,
            tau_prime,
            changed,
        });
    }
}

/// Outcome of checking a normal-form witness.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Verification {
    pub ok: bool,
    pub diagnostics: Vec<String>,
}

/// Check the normal-form conditions: sc acyclic inside each part, no ob
/// edge from E2 to E1, the trace violating, and the pivot closing E1.
pub fn verify_normal_form(w: &NormalFormWitness) -> Verification {
    let t = &w.trace_pp;
    let mut diags = Vec::new();
    let part = |i: usize| w.partition.get(&t.event(i).id()).copied();
    if (0..t.len()).any(|i| part(i).is_none()) {
        diags.push("partition does not cover every event".into());
    }
    if !t.is_rdma_consistent() {
        diags.push("trace is not RDMA-consistent".into());
    }
    if t.is_sc_consistent() {
        diags.push("trace is not violating: sc is acyclic".into());
    }
    let d = t.derive();
    let sc_base = t.po().union(t.rf()).union(t.mo()).union(&d.rb);
    for p in [Part::E1, Part::E2] {
        if !sc_base.restrict(|i| part(i) == Some(p)).is_acyclic() {
            diags.push(format!("sc restricted to {p:?} is cyclic"));
        }
    }
    for (a, b) in d.ob.edges() {
        if part(a) == Some(Part::E2) && part(b) == Some(Part::E1) {
            diags.push(format!("ob edge from E2 to E1: {} -> {}", t.event(a).id(), t.event(b).id()));
        }
    }
    match w.partition.get(&w.pivot) {
        Some(Part::E1) => {
            let last_e1 = w.tau_pp.iter().rev().find(|e| w.partition.get(&e.id()) == Some(&Part::E1));
            if last_e1.map(|e| e.id()) != Some(w.pivot) {
                diags.push("pivot is not the last E1 event of τ″".into());
            }
        }
        _ => diags.push("pivot is not in E1".into()),
    }
    Verification { ok: diags.is_empty(), diagnostics: diags }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::program::{Label, LocId};

    fn init(loc: u16, v: i64) -> Event {
        Event::new(0, loc as usize, Label::Lw { loc: LocId(loc), value: v })
    }

    #[test]
    fn single_event_is_maximal() {
        let w = Event::new(1, 1, Label::Lw { loc: LocId(0), value: 1 });
        let t = trace_from_linearisation(&[init(0, 0), w]).unwrap();
        assert_eq!(find_maximal_event(&t), Some(1));
    }

    #[test]
    fn independent_pivot_removal_keeps_values() {
        let a = Event::new(1, 1, Label::Lw { loc: LocId(0), value: 1 });
        let b = Event::new(2, 1, Label::Lw { loc: LocId(1), value: 1 });
        let tau = [init(0, 0), init(1, 0), a, b];
        assert_eq!(remove_maximal(&tau, b.id()).unwrap(), vec![init(0, 0), init(1, 0), a]);
        assert_eq!(
            remove_maximal(&tau, EventId { tid: 3, iota: 1 }),
            Err(NormalFormError::PivotAbsent(EventId { tid: 3, iota: 1 }))
        );
    }

    #[test]
    fn non_violating_input_is_rejected() {
        let t = trace_from_linearisation(&[init(0, 0)]).unwrap();
        assert_eq!(normalize_violation(&t).unwrap_err(), NormalFormError::NotViolating);
    }
}
