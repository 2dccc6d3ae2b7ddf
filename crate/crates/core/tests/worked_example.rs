use rdma_robust::program::{parse_program, Label, Program};
use rdma_robust::trace::{linearise_ob, sc_cycle, trace_from_linearisation, Event, EventId, Trace};

const SRC: &str = "node N1 { x=1, y=0 }\nnode N2 { z=0, w=1 }\n\
                   thread T1 on N1 { y := N2.w; N2.z := x; x := 2 }\n";

fn program() -> Program {
    parse_program(SRC).unwrap()
}

fn id(tid: usize, iota: usize) -> EventId {
    EventId { tid, iota }
}

/// The violating trace where the remote write reads the later local write.
fn delayed_read_trace(p: &Program) -> Trace {
    let l = |n: &str| p.loc_by_name(n).unwrap();
    let n2 = p.node_by_name("N2").unwrap();
    let (x, y, z, w) = (l("x"), l("y"), l("z"), l("w"));
    let mut events = rdma_robust::trace::init_events(p);
    events.extend([
        Event::new(1, 1, Label::NrR { loc: w, value: 1, node: n2 }),
        Event::new(1, 2, Label::NlW { loc: y, value: 1, node: n2 }),
        Event::new(1, 3, Label::NlR { loc: x, value: 2, node: n2 }),
        Event::new(1, 4, Label::NrW { loc: z, value: 2, node: n2 }),
        Event::new(1, 5, Label::Lw { loc: x, value: 2 }),
    ]);
    let init = |loc: rdma_robust::program::LocId| id(0, loc.index());
    let rf = [(init(w), id(1, 1)), (id(1, 5), id(1, 3))];
    let mo = [(init(x), id(1, 5)), (init(y), id(1, 2)), (init(z), id(1, 4))];
    let nfo = [(id(1, 3), id(1, 2)), (id(1, 1), id(1, 4))];
    Trace::from_edges(events, &rf, &mo, &nfo).unwrap()
}

#[test]
fn example_trace_is_violating() {
    let p = program();
    let t = delayed_read_trace(&p);
    t.validate_for(&p).unwrap();
    assert!(t.is_rdma_consistent());
    assert!(!t.is_sc_consistent());
    let d = t.derive();
    let (nlr, nlw, lw) = (t.index_of(id(1, 3)).unwrap(), t.index_of(id(1, 2)).unwrap(), t.index_of(id(1, 5)).unwrap());
    assert!(d.ob.contains(nlr, nlw));
    assert!(d.ob.contains(lw, nlr));
    assert!(d.ob.is_irreflexive());
}

#[test]
fn example_sc_cycle() {
    let p = program();
    let t = delayed_read_trace(&p);
    let cyc = sc_cycle(&t).unwrap();
    let got: Vec<(EventId, EventId, &str)> =
        cyc.iter().map(|e| (t.event(e.from).id(), t.event(e.to).id(), e.rel)).collect();
    let mut got = got;
    got.sort();
    assert_eq!(got, vec![(id(1, 3), id(1, 4), "po"), (id(1, 4), id(1, 5), "po"), (id(1, 5), id(1, 3), "rf")]);
}

#[test]
fn example_linearisation_round_trips() {
    let p = program();
    let t = delayed_read_trace(&p);
    let tau = linearise_ob(&t).unwrap();
    let pos = |i: EventId| tau.iter().position(|e| e.id() == i).unwrap();
    assert!(pos(id(1, 5)) < pos(id(1, 3)));
    assert_eq!(trace_from_linearisation(&tau).unwrap(), t);
}

fn show(p: &Program, evs: &[Event]) -> Vec<String> {
    let sym = p.symbols();
    evs.iter().filter(|e| !e.is_init()).map(|e| sym.show(&e.label)).collect()
}

#[test]
fn example_maximal_event_removal() {
    use rdma_robust::normal_form::{find_maximal_event, remove_maximal};
    let p = program();
    let t = delayed_read_trace(&p);
    let e = find_maximal_event(&t).unwrap();
    assert_eq!(t.event(e).id(), id(1, 5));
    // τ = nrR(w,1) lW(x,2) nlR(x,2,N2) nrW(z,2) nlW(y,1,N2)
    let by = |i: usize| *t.event(t.index_of(id(1, i)).unwrap());
    let mut tau: Vec<Event> = t.events().iter().filter(|e| e.is_init()).copied().collect();
    tau.extend([by(1), by(5), by(3), by(4), by(2)]);
    let tau_prime = remove_maximal(&tau, id(1, 5)).unwrap();
    assert_eq!(show(&p, &tau_prime), ["nrR(w, 1)", "nlR(x, 1, N2)", "nrW(z, 1)", "nlW(y, 1, N2)"]);
}

#[test]
fn example_normal_form() {
    use rdma_robust::normal_form::{normalize_violation, verify_normal_form, Part};
    let p = program();
    let t = delayed_read_trace(&p);
    let n = normalize_violation(&t).unwrap();
    let w = &n.witness;
    assert_eq!(
        show(&p, &w.tau_pp),
        ["nrR(w, 1)", "lW(x, 2)", "nlW(y, 1, N2)", "nlR(x, 2, N2)", "nrW(z, 2)"]
    );
    let v = verify_normal_form(w);
    assert!(v.ok, "{:?}", v.diagnostics);
    let e1: Vec<EventId> = w.partition.iter().filter(|(k, p)| k.tid != 0 && **p == Part::E1).map(|(k, _)| *k).collect();
    assert_eq!(e1, vec![id(1, 1), id(1, 5)]);
    assert_eq!(w.pivot, id(1, 5));
    assert_eq!(n.minimal, t);
    assert_eq!(t.edge_set(&t.derive().sc), w.trace_pp.edge_set(&w.trace_pp.derive().sc));

    let mut swapped = w.clone();
    for (k, part) in swapped.partition.iter_mut() {
        if k.tid != 0 {
            *part = if *part == Part::E1 { Part::E2 } else { Part::E1 };
        }
    }
    let v = verify_normal_form(&swapped);
    assert!(!v.ok);
    assert!(v.diagnostics.iter().any(|d| d.contains("ob edge from E2 to E1: 1.5 -> 1.3")), "{:?}", v.diagnostics);
}
