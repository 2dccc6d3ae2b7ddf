use std::ops::ControlFlow;

use proptest::prelude::*;
use rdma_robust::checker::{explore, CheckerConfig};
use rdma_robust::normal_form::{normalize_violation, verify_normal_form};
use rdma_robust::oracle::{check_robustness_oracle, enumerate_traces, Bounds};
use rdma_robust::program::{enumerate_paths, parse_program};
use rdma_robust::trace::{linearise_ob, trace_from_linearisation, Trace};

fn instr(node: usize) -> impl Strategy<Value = String> {
    let (own, other, remote) = if node == 1 { (["a", "b"], "N2", ["c", "d"]) } else { (["c", "d"], "N1", ["a", "b"]) };
    prop_oneof![
        (0..2usize, 0..3i64).prop_map(move |(l, v)| format!("{} := {v}", own[l])),
        (0..2usize, 0..3i64).prop_map(move |(l, v)| format!("assume {} == {v}", own[l])),
        (0..2usize, 0..3i64).prop_map(move |(l, v)| format!("assume {} != {v}", own[l])),
        (0..2usize, 0..2usize).prop_map(move |(l, m)| format!("{} := {other}.{}", own[l], remote[m])),
        (0..2usize, 0..2usize).prop_map(move |(l, m)| format!("{other}.{} := {}", remote[m], own[l])),
        Just(format!("rfence {other}")),
        Just(format!("poll {other}")),
        (0..2usize, 0..2i64, 0..3i64).prop_map(move |(l, e, n)| format!("{} := cas({}, {e}, {n})", own[1 - l], own[l])),
    ]
}

fn thread(node: usize, max: usize) -> impl Strategy<Value = String> {
    (prop::collection::vec(instr(node), 1..max), any::<bool>()).prop_map(move |(is, lp)| {
        let body = if lp && is.len() > 1 { format!("loop {{ {} }}; {}", is[0], is[1..].join("; ")) } else { is.join("; ") };
        format!("thread T{node} on N{node} {{ {body} }}")
    })
}

fn program(max: usize) -> impl Strategy<Value = String> {
    (thread(1, max), prop::option::of(thread(2, max))).prop_map(|(a, b)| {
        format!("node N1 {{ a=0, b=1 }}\nnode N2 {{ c=0, d=1 }}\n{a}\n{}\n", b.unwrap_or_default())
    })
}

fn bounds() -> Bounds {
    Bounds { loop_bound: 2, ..Bounds::default() }
}

/// Every obligation of the normal-form construction, checked on one
/// violating trace.
fn normal_form_obligations(t: &Trace) -> Result<(), String> {
    let n = normalize_violation(t).map_err(|e| e.to_string())?;
    let w = &n.witness;
    let v = verify_normal_form(w);
    if !v.ok {
        return Err(format!("verify_normal_form: {:?}", v.diagnostics));
    }
    let min = &n.minimal;
    let (dm, dpp) = (min.derive(), w.trace_pp.derive());
    let pivot = min.index_of(w.pivot).unwrap();
    for id in &n.changed {
        if !dm.ib.contains(pivot, min.index_of(*id).unwrap()) {
            return Err(format!("changed event {id} is not ib-after the pivot"));
        }
    }
    let tp = trace_from_linearisation(&n.tau_prime).map_err(|e| e.to_string())?;
    if !tp.edge_set(&tp.derive().ob).is_subset(&min.edge_set(&dm.ob)) {
        return Err("ob' is not contained in ob".into());
    }
    let same = |name: &str, a: &rdma_robust::trace::Relation, b: &rdma_robust::trace::Relation| {
        if min.edge_set(a) == w.trace_pp.edge_set(b) {
            Ok(())
        } else {
            Err(format!("{name}'' differs from {name}"))
        }
    };
    same("po", min.po(), w.trace_pp.po())?;
    same("pf", min.pf(), w.trace_pp.pf())?;
    same("rf", min.rf(), w.trace_pp.rf())?;
    same("mo", min.mo(), w.trace_pp.mo())?;
    same("ippo", &dm.ippo, &dpp.ippo)?;
    same("oppo", &dm.oppo, &dpp.oppo)?;
    same("rb", &dm.rb, &dpp.rb)?;
    same("sc", &dm.sc, &dpp.sc)?;
    let pos = |i: usize| w.tau_pp.iter().position(|e| e.id() == w.trace_pp.event(i).id()).unwrap();
    if let Some((a, b)) = dpp.ob.edges().find(|&(a, b)| pos(a) >= pos(b)) {
        return Err(format!("ob'' edge {} -> {} is backward in tau''", w.trace_pp.event(a).id(), w.trace_pp.event(b).id()));
    }
    Ok(())
}

proptest! {
    #![proptest_config(ProptestConfig { cases: 256, ..ProptestConfig::default() })]

    #[test]
    fn oracle_and_checker_agree(src in program(4)) {
        let p = parse_program(&src).unwrap();
        let o = check_robustness_oracle(&p, bounds());
        let c = explore(&p, &CheckerConfig { loop_bound: Some(2), ..CheckerConfig::default() });
        prop_assert_eq!(Some(o.robust), c.is_robust(), "{}", src);
        if let Some(w) = c.witness() {
            prop_assert!(verify_normal_form(&w.normal_form).ok, "{}", src);
        }
    }

    #[test]
    fn normal_form_of_oracle_witnesses(src in program(4)) {
        let p = parse_program(&src).unwrap();
        if let Some(t) = check_robustness_oracle(&p, bounds()).witness {
            prop_assert!(t.is_violating());
            if let Err(e) = normal_form_obligations(&t) {
                prop_assert!(false, "{}\n{}", e, src);
            }
        }
    }

    #[test]
    fn enumerated_trace_invariants(src in program(3)) {
        let p = parse_program(&src).unwrap();
        let cpu_only = p.is_cpu_only();
        let mut failure = None;
        enumerate_traces(&p, Bounds { loop_bound: 1, ..Bounds::default() }, |t| {
            let d = t.derive();
            let msg = if !d.ib.is_acyclic() && d.ob.is_acyclic() {
                Some("ib cyclic but ob acyclic")
            } else if cpu_only && !d.sc.is_subset(&d.ob) {
                Some("cpu-only sc not contained in ob")
            } else if !d.oppo.is_subset(&d.ippo) || !d.ippo.is_subset(t.po()) {
                Some("oppo, ippo, po not nested")
            } else if d.ob.is_acyclic()
                && linearise_ob(t).ok().and_then(|tau| trace_from_linearisation(&tau).ok()).as_ref() != Some(t)
            {
                Some("ob linearisation does not round-trip")
            } else {
                None
            };
            match msg {
                Some(m) => {
                    failure = Some(m);
                    ControlFlow::Break(())
                }
                None => ControlFlow::Continue(()),
            }
        });
        prop_assert!(failure.is_none(), "{:?}\n{}", failure, src);
    }

    #[test]
    fn paths_grow_with_loop_bound(src in program(4)) {
        let p = parse_program(&src).unwrap();
        for th in p.threads() {
            let mut prev = enumerate_paths(&th.body, 0, p.value_domain());
            for b in 1..3 {
                let next = enumerate_paths(&th.body, b, p.value_domain());
                prop_assert!(prev.is_subset(&next), "{}", src);
                prev = next;
            }
        }
    }
}
