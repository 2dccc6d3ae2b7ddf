use std::ops::ControlFlow;

use rdma_robust::oracle::{
    check_reachability_oracle, check_robustness_oracle, count_traces, enumerate_traces, Bounds, ReachTarget,
};
use rdma_robust::program::{parse_program, Label};

const EXAMPLE: &str = "node N1 { x=1, y=0 }\nnode N2 { z=0, w=1 }\n\
                       thread T1 on N1 { y := N2.w; N2.z := x; x := 2 }\n";

#[test]
fn example_is_not_robust() {
    let p = parse_program(EXAMPLE).unwrap();
    let v = check_robustness_oracle(&p, Bounds::default());
    assert!(!v.robust);
    let w = v.witness.unwrap();
    assert!(w.is_rdma_consistent() && !w.is_sc_consistent());
}

#[test]
fn example_trace_is_enumerated() {
    let p = parse_program(EXAMPLE).unwrap();
    let x = p.loc_by_name("x").unwrap();
    let mut found = 0;
    enumerate_traces(&p, Bounds::default(), |t| {
        let hit = t.rf().edges().any(|(a, b)| {
            matches!(t.event(a).label, Label::Lw { loc, value: 2 } if loc == x && t.event(a).tid == 1)
                && matches!(t.event(b).label, Label::NlR { value: 2, .. })
        });
        if hit && t.is_rdma_consistent() {
            found += 1;
        }
        ControlFlow::Continue(())
    });
    assert!(found > 0);
}

#[test]
fn polls_restore_robustness() {
    let src = "node N1 { x=1, y=0 }\nnode N2 { z=0, w=1 }\n\
               thread T1 on N1 { y := N2.w; N2.z := x; poll N2; poll N2; x := 2 }\n";
    let p = parse_program(src).unwrap();
    assert!(check_robustness_oracle(&p, Bounds::default()).robust);
}

#[test]
fn full_example_is_reachable() {
    let p = parse_program(EXAMPLE).unwrap();
    assert!(check_reachability_oracle(&p, ReachTarget::EventCount { tid: 1, count: 5 }, Bounds::default()));
    assert!(check_reachability_oracle(&p, ReachTarget::AllTerminated, Bounds::default()));
}

#[test]
fn cpu_only_store_buffering_is_robust() {
    let src = "node A { x=0, y=0 }\nthread T on A { x := 1; assume y == 0 }\nthread U on A { y := 1; assume x == 0 }\n";
    let p = parse_program(src).unwrap();
    assert!(check_robustness_oracle(&p, Bounds::default()).robust);
    assert!(count_traces(&p, Bounds::default()) > 4);
}
