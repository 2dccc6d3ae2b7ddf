//! JSON exchange format for traces and normal-form witnesses.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::normal_form::{NormalFormWitness, Part};
use crate::program::{Kind, Label, Symbols, Value};
use crate::trace::{sc_cycle, Event, EventId, Malformed, Relation, Trace};

pub const WITNESS_VERSION: u32 = 1;

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct JsonEvent {
    pub tid: usize,
    pub iota: usize,
    pub kind: String,
    pub loc: Option<String>,
    pub v_r: Option<Value>,
    pub v_w: Option<Value>,
    pub nbar: Option<String>,
    #[serde(default)]
    pub part: Option<Part>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct JsonEdge {
    pub from: EventId,
    pub to: EventId,
    pub rel: String,
}

#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct JsonRelations {
    pub rf: Vec<(EventId, EventId)>,
    pub mo: Vec<(EventId, EventId)>,
    pub nfo: Vec<(EventId, EventId)>,
    #[serde(default)]
    pub pf: Vec<(EventId, EventId)>,
}

/// A trace, optionally partitioned, with events listed in a linearisation
/// order (τ″ for normal-form witnesses).
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct WitnessJson {
    pub v: u32,
    pub events: Vec<JsonEvent>,
    #[serde(default)]
    pub pivot: Option<EventId>,
    #[serde(default)]
    pub sc_cycle: Vec<JsonEdge>,
    pub relations: JsonRelations,
}

#[derive(Debug, Error)]
pub enum WitnessError {
    #[error("unsupported witness version {0}")]
    Version(u32),
    #[error("event {0}: {1}")]
    Label(EventId, String),
    #[error("witness has no pivot or an unpartitioned event")]
    NotPartitioned,
    #[error("pf edges do not match the events")]
    PfMismatch,
    #[error(transparent)]
    Malformed(#[from] Malformed),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

fn edges(t: &Trace, r: &Relation) -> Vec<(EventId, EventId)> {
    t.edge_set(r).into_iter().collect()
}

/// Serialise `t` with its events in the order of `order` (all events of
/// the trace, in any order, when `order` is empty).
pub fn trace_to_json(
    t: &Trace,
    order: &[Event],
    partition: Option<&BTreeMap<EventId, Part>>,
    pivot: Option<EventId>,
    sym: &Symbols,
) -> WitnessJson {
    let listed: Vec<Event> = if order.is_empty() { t.events().to_vec() } else { order.to_vec() };
    let events = listed
        .iter()
        .map(|e| JsonEvent {
            tid: e.tid,
            iota: e.iota,
            kind: e.kind().as_str().to_string(),
            loc: e.label.loc().map(|l| sym.loc_name(l).to_string()),
            v_r: e.label.read_value(),
            v_w: e.label.write_value(),
            nbar: e.label.remote().map(|n| sym.node_name(n).to_string()),
            part: partition.and_then(|p| p.get(&e.id()).copied()),
        })
        .collect();
    let cycle = sc_cycle(t)
        .unwrap_or_default()
        .into_iter()
        .map(|c| JsonEdge { from: t.event(c.from).id(), to: t.event(c.to).id(), rel: c.rel.to_string() })
        .collect();
    WitnessJson {
        v: WITNESS_VERSION,
        events,
        pivot,
        sc_cycle: cycle,
        relations: JsonRelations {
            rf: edges(t, t.rf()),
            mo: edges(t, t.mo()),
            nfo: edges(t, t.nfo()),
            pf: edges(t, t.pf()),
        },
    }
}

pub fn witness_to_json(w: &NormalFormWitness, sym: &Symbols) -> WitnessJson {
    trace_to_json(&w.trace_pp, &w.tau_pp, Some(&w.partition), Some(w.pivot), sym)
}

/// Events in listed order; unknown names are interned into `sym`.
pub fn events_from_json(j: &WitnessJson, sym: &mut Symbols) -> Result<Vec<Event>, WitnessError> {
    if j.v != WITNESS_VERSION {
        return Err(WitnessError::Version(j.v));
    }
    j.events
        .iter()
        .map(|e| {
            let loc = e.loc.as_deref().map(|n| sym.intern_loc(n));
            let node = e.nbar.as_deref().map(|n| sym.intern_node(n));
            let id = EventId { tid: e.tid, iota: e.iota };
            let kind = Kind::parse(&e.kind).ok_or_else(|| WitnessError::Label(id, format!("unknown kind `{}`", e.kind)))?;
            let label = Label::from_parts(kind, loc, e.v_r, e.v_w, node).map_err(|m| WitnessError::Label(id, m))?;
            Ok(Event::new(e.tid, e.iota, label))
        })
        .collect()
}

pub fn trace_from_json(j: &WitnessJson, sym: &mut Symbols) -> Result<Trace, WitnessError> {
    let events = events_from_json(j, sym)?;
    let r = &j.relations;
    let t = Trace::from_edges(events, &r.rf, &r.mo, &r.nfo)?;
    if !r.pf.is_empty() && t.edge_set(t.pf()) != r.pf.iter().copied().collect() {
        return Err(WitnessError::PfMismatch);
    }
    Ok(t)
}

pub fn witness_from_json(j: &WitnessJson, sym: &mut Symbols) -> Result<NormalFormWitness, WitnessError> {
    let trace_pp = trace_from_json(j, sym)?;
    let tau_pp = events_from_json(j, sym)?;
    let pivot = j.pivot.ok_or(WitnessError::NotPartitioned)?;
    let partition = j
        .events
        .iter()
        .map(|e| e.part.map(|p| (EventId { tid: e.tid, iota: e.iota }, p)))
        .collect::<Option<BTreeMap<_, _>>>()
        .ok_or(WitnessError::NotPartitioned)?;
    Ok(NormalFormWitness { trace_pp, partition, pivot, tau_pp })
}

pub fn to_string_pretty(j: &WitnessJson) -> String {
    serde_json::to_string_pretty(j).expect("witness serialises")
}

pub fn from_str(s: &str) -> Result<WitnessJson, WitnessError> {
    Ok(serde_json::from_str(s)?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::normal_form::normalize_violation;
    use crate::oracle::{check_robustness_oracle, Bounds};
    use crate::program::parse_program;

    #[test]
    fn round_trip_through_text() {
        let p = parse_program("node N1 { x=1, y=0 } node N2 { z=0, w=1 } thread T on N1 { y := N2.w; N2.z := x; x := 2 }")
            .unwrap();
        let t = check_robustness_oracle(&p, Bounds::default()).witness.unwrap();
        let w = normalize_violation(&t).unwrap().witness;
        let text = to_string_pretty(&witness_to_json(&w, &p.symbols()));
        assert!(text.contains("\"v\": 1"));
        let mut sym = Symbols::default();
        let back = witness_from_json(&from_str(&text).unwrap(), &mut sym).unwrap();
        assert_eq!(back.partition, w.partition);
        assert_eq!(back.pivot, w.pivot);
        let show = |w: &NormalFormWitness, s: &Symbols| w.tau_pp.iter().map(|e| s.show(&e.label)).collect::<Vec<_>>();
        assert_eq!(show(&back, &sym), show(&w, &p.symbols()));
        assert_eq!(
            back.trace_pp.edge_set(back.trace_pp.rf()),
            w.trace_pp.edge_set(w.trace_pp.rf())
        );
    }

    #[test]
    fn version_is_checked() {
        let j = WitnessJson { v: 7, events: vec![], pivot: None, sc_cycle: vec![], relations: JsonRelations::default() };
        assert!(matches!(events_from_json(&j, &mut Symbols::default()), Err(WitnessError::Version(7))));
    }
}
