use rdma_robust::checker::{explore, CheckerConfig};
use rdma_robust::gen::*;
use rdma_robust::oracle::{check_reachability_oracle, check_robustness_oracle, Bounds, ReachTarget};
use rdma_robust::program::{parse_program, Instr, Process, Program};

fn small() -> Bounds {
    Bounds { loop_bound: 1, ..Bounds::default() }
}

fn t(from: usize, counter: usize, delta: i8, to: usize) -> VassTransition {
    VassTransition { from, counter, delta, to }
}

fn reparses(p: &Program) {
    let back = parse_program(&p.to_dsl()).unwrap();
    assert_eq!(back.to_dsl(), p.to_dsl());
    assert_eq!(back.threads(), p.threads());
}

fn both_engines(p: &Program) -> (bool, Option<bool>) {
    let o = check_robustness_oracle(p, Bounds::default()).robust;
    let c = explore(p, &CheckerConfig { loop_bound: Some(2), ..CheckerConfig::default() }).is_robust();
    (o, c)
}

#[test]
fn abp_delivers_in_order() {
    let p = gen_abp(&[2, 1]);
    reparses(&p);
    let receiver = p.thread_by_name("Receiver").unwrap();
    assert!(check_reachability_oracle(&p, ReachTarget::Terminated { tid: receiver }, small()));
}

#[test]
fn abp_wrong_order_is_unreachable() {
    let p = gen_abp_pair(&[2, 1], &[1, 2]);
    reparses(&p);
    let receiver = p.thread_by_name("Receiver").unwrap();
    assert!(!check_reachability_oracle(&p, ReachTarget::Terminated { tid: receiver }, small()));
    let p = gen_abp_pair(&[1], &[1, 1]);
    assert!(!check_reachability_oracle(&p, ReachTarget::AllTerminated, small()));
}

#[test]
fn abp_empty_word_is_termination_check() {
    let p = gen_abp(&[]);
    reparses(&p);
    let receiver = p.thread_by_name("Receiver").unwrap();
    assert_eq!(p.thread(receiver).body.instructions().len(), 2);
    assert!(p.thread(receiver).body.instructions().iter().all(|i| matches!(i, Instr::AssumeEq { value: 0, .. })));
    assert!(check_reachability_oracle(&p, ReachTarget::AllTerminated, small()));
}

#[test]
fn pcp_solvable_instance_terminates() {
    let p = gen_pcp(&PcpInstance { u: vec![vec![1, 2]], v: vec![vec![1, 2]] }).unwrap();
    reparses(&p);
    assert_eq!(p.nodes().len(), 4);
    assert_eq!(p.threads().len(), 4);
    assert!(check_reachability_oracle(&p, ReachTarget::AllTerminated, small()));
}

#[test]
fn pcp_unsolvable_instance_does_not_terminate() {
    let p = gen_pcp(&PcpInstance { u: vec![vec![1]], v: vec![vec![2]] }).unwrap();
    assert!(!check_reachability_oracle(&p, ReachTarget::AllTerminated, small()));
}

#[test]
fn pcp_uses_only_local_operations_and_remote_writes() {
    let p = gen_pcp(&PcpInstance { u: vec![vec![1], vec![2, 1]], v: vec![vec![1, 2], vec![1]] }).unwrap();
    reparses(&p);
    for th in p.threads() {
        for i in th.body.instructions() {
            assert!(i.is_local() || matches!(i, Instr::RemoteWrite { .. }), "{i:?}");
        }
    }
}

#[test]
fn pcp_rejects_bad_instances() {
    assert_eq!(gen_pcp(&PcpInstance { u: vec![], v: vec![] }).unwrap_err(), PcpError::NoWords);
    assert!(matches!(gen_pcp(&PcpInstance { u: vec![vec![1]], v: vec![vec![]] }), Err(PcpError::EmptyWord(1))));
    assert!(matches!(
        gen_pcp(&PcpInstance { u: vec![vec![1]], v: vec![vec![1], vec![2]] }),
        Err(PcpError::LengthMismatch(1, 2))
    ));
}

#[test]
fn vass_single_increment_structure() {
    let spec = VassSpec { states: 1, counters: 1, transitions: vec![t(0, 1, 1, 0)], initial: 0, accepting: None };
    let p = gen_vass(&spec, false).unwrap();
    reparses(&p);
    assert_eq!(p.nodes().len(), 2);
    assert_eq!(p.threads().len(), 1);
    let Process::Star(body) = &p.threads()[0].body else { panic!("leader is not a loop: {:?}", p.threads()[0].body) };
    let Process::Seq(fragment) = &**body else { panic!("fragment is not a sequence") };
    assert_eq!(fragment.len(), 3);
    assert!(matches!(fragment[0], Process::Instr(Instr::AssumeEq { value: 0, .. })));
    assert!(matches!(fragment[1], Process::Instr(Instr::RemoteWrite { .. })));
    assert!(matches!(fragment[2], Process::Instr(Instr::Write { value: 0, .. })));
}

#[test]
fn vass_decrement_polls() {
    let spec = VassSpec { states: 2, counters: 2, transitions: vec![t(0, 2, -1, 1)], initial: 0, accepting: None };
    let p = gen_vass(&spec, false).unwrap();
    let c2 = p.node_by_name("C2").unwrap();
    assert!(p.threads()[0].body.instructions().contains(&&Instr::Poll(c2)));
}

#[test]
fn vass_rejects_invalid_specs() {
    let bad = |transitions, accepting| VassSpec { states: 2, counters: 1, transitions, initial: 0, accepting };
    assert_eq!(gen_vass(&bad(vec![t(0, 2, 1, 1)], None), false).unwrap_err(), VassError::UnknownCounter(2));
    assert_eq!(gen_vass(&bad(vec![t(0, 1, 1, 3)], None), false).unwrap_err(), VassError::UnknownState(3));
    assert_eq!(gen_vass(&bad(vec![t(0, 1, 2, 1)], None), false).unwrap_err(), VassError::BadDelta(2));
    assert_eq!(gen_vass(&bad(vec![], Some(5)), false).unwrap_err(), VassError::UnknownState(5));
}

fn reach() -> VassSpec {
    VassSpec { states: 2, counters: 1, transitions: vec![t(0, 1, 1, 1)], initial: 0, accepting: Some(1) }
}

fn blocked() -> VassSpec {
    VassSpec { states: 2, counters: 1, transitions: vec![t(0, 1, -1, 1), t(1, 1, 1, 1)], initial: 0, accepting: Some(1) }
}

#[test]
fn vass_without_gadget_is_robust() {
    for spec in [reach(), blocked()] {
        assert_eq!(both_engines(&gen_vass(&spec, false).unwrap()), (true, Some(true)));
    }
}

#[test]
fn vass_gadget_tracks_reachability() {
    assert_eq!(both_engines(&gen_vass(&reach(), true).unwrap()), (false, Some(false)));
    assert_eq!(both_engines(&gen_vass(&blocked(), true).unwrap()), (true, Some(true)));
}
