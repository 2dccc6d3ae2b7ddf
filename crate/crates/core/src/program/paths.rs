//! Bounded path sets of processes.

use std::collections::BTreeSet;

use super::{Label, Process, Value};

type Paths = BTreeSet<Vec<Label>>;

fn concat(a: &Paths, b: &Paths) -> Paths {
    let mut out = Paths::new();
    for x in a {
        for y in b {
            let mut z = x.clone();
            z.extend_from_slice(y);
            out.insert(z);
        }
    }
    out
}

/// All label sequences of `p`, unrolling every loop at most `loop_bound`
/// times and expanding value placeholders over `domain`.
pub fn enumerate_paths(p: &Process, loop_bound: usize, domain: &[Value]) -> BTreeSet<Vec<Label>> {
    match p {
        Process::Nop => Paths::from([Vec::new()]),
        Process::Instr(i) => i.label_paths(domain).into_iter().collect(),
        Process::Seq(ps) => ps
            .iter()
            .fold(Paths::from([Vec::new()]), |acc, q| concat(&acc, &enumerate_paths(q, loop_bound, domain))),
        Process::Choice(ps) => ps.iter().flat_map(|q| enumerate_paths(q, loop_bound, domain)).collect(),
        Process::Star(body) => {
            let once = enumerate_paths(body, loop_bound, domain);
            let mut layer = Paths::from([Vec::new()]);
            let mut out = layer.clone();
            for _ in 0..loop_bound {
                layer = concat(&layer, &once);
                out.extend(layer.iter().cloned());
            }
            out
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::program::{Instr, LocId, NodeId};

    #[test]
    fn nop_is_empty_path() {
        assert_eq!(enumerate_paths(&Process::Nop, 3, &[0]), Paths::from([vec![]]));
    }

    #[test]
    fn remote_write_pairs() {
        let (x, y, n) = (LocId(0), LocId(1), NodeId(1));
        let p = Process::Instr(Instr::RemoteWrite { dst: y, src: x, node: n });
        let expected: Paths = [0, 1]
            .into_iter()
            .map(|v| vec![Label::NlR { loc: x, value: v, node: n }, Label::NrW { loc: y, value: v, node: n }])
            .collect();
        assert_eq!(enumerate_paths(&p, 1, &[0, 1]), expected);
    }

    #[test]
    fn cas_paths() {
        let (x, z) = (LocId(0), LocId(1));
        let p = Process::Instr(Instr::Cas { dst: x, target: z, expected: 0, new: 1 });
        let expected = Paths::from([
            vec![Label::Cas { loc: z, read: 0, written: 1 }, Label::Lw { loc: x, value: 0 }],
            vec![Label::Lr { loc: z, value: 1 }, Label::Lw { loc: x, value: 1 }],
        ]);
        assert_eq!(enumerate_paths(&p, 1, &[0, 1]), expected);
    }

    #[test]
    fn star_unrolling() {
        let l = Label::Lw { loc: LocId(0), value: 1 };
        let p = Process::Star(Box::new(Process::Instr(Instr::Write { loc: LocId(0), value: 1 })));
        assert_eq!(enumerate_paths(&p, 0, &[1]), Paths::from([vec![]]));
        assert_eq!(enumerate_paths(&p, 2, &[1]), Paths::from([vec![], vec![l], vec![l, l]]));
    }
}
