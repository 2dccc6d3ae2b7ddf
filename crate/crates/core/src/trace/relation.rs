//! Dense binary relations over the events of one trace.

use std::fmt;

/// A relation on `0..n`, stored as one bitset row per element.
#[derive(Clone, PartialEq, Eq, Hash)]
pub struct Relation {
    n: usize,
    words: usize,
    bits: Vec<u64>,
}

impl Relation {
    pub fn new(n: usize) -> Relation {
        let words = n.div_ceil(64).max(1);
        Relation { n, words, bits: vec![0; n * words] }
    }

    pub fn from_edges(n: usize, edges: impl IntoIterator<Item = (usize, usize)>) -> Relation {
        let mut r = Relation::new(n);
        for (a, b) in edges {
            r.add(a, b);
        }
        r
    }

    pub fn size(&self) -> usize {
        self.n
    }

    fn row(&self, a: usize) -> &[u64] {
        &self.bits[a * self.words..(a + 1) * self.words]
    }

    fn row_mut(&mut self, a: usize) -> &mut [u64] {
        &mut self.bits[a * self.words..(a + 1) * self.words]
    }

    pub fn add(&mut self, a: usize, b: usize) {
        debug_assert!(a < self.n && b < self.n);
        self.bits[a * self.words + b / 64] |= 1 << (b % 64);
    }

    pub fn remove(&mut self, a: usize, b: usize) {
        self.bits[a * self.words + b / 64] &= !(1 << (b % 64));
    }

    pub fn contains(&self, a: usize, b: usize) -> bool {
        self.bits[a * self.words + b / 64] & (1 << (b % 64)) != 0
    }

    pub fn is_empty(&self) -> bool {
        self.bits.iter().all(|&w| w == 0)
    }

    pub fn len(&self) -> usize {
        self.bits.iter().map(|w| w.count_ones() as usize).sum()
    }

    /// Successors of `a` in ascending order.
    pub fn succ(&self, a: usize) -> impl Iterator<Item = usize> + '_ {
        let n = self.n;
        self.row(a).iter().enumerate().flat_map(move |(wi, &w)| {
            (0..64).filter(move |b| w & (1 << b) != 0).map(move |b| wi * 64 + b)
        })
        .filter(move |&b| b < n)
    }

    /// All edges in lexicographic order.
    pub fn edges(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        (0..self.n).flat_map(move |a| self.succ(a).map(move |b| (a, b)))
    }

    pub fn union_with(&mut self, other: &Relation) {
        debug_assert_eq!(self.n, other.n);
        for (x, y) in self.bits.iter_mut().zip(&other.bits) {
            *x |= *y;
        }
    }

    pub fn union(&self, other: &Relation) -> Relation {
        let mut r = self.clone();
        r.union_with(other);
        r
    }

    pub fn minus(&self, other: &Relation) -> Relation {
        let mut r = self.clone();
        for (x, y) in r.bits.iter_mut().zip(&other.bits) {
            *x &= !*y;
        }
        r
    }

    pub fn intersect(&self, other: &Relation) -> Relation {
        let mut r = self.clone();
        for (x, y) in r.bits.iter_mut().zip(&other.bits) {
            *x &= *y;
        }
        r
    }

    pub fn is_subset(&self, other: &Relation) -> bool {
        self.bits.iter().zip(&other.bits).all(|(x, y)| x & !y == 0)
    }

    pub fn inverse(&self) -> Relation {
        Relation::from_edges(self.n, self.edges().map(|(a, b)| (b, a)).collect::<Vec<_>>())
    }

    /// Relational composition `self ; other`.
    pub fn compose(&self, other: &Relation) -> Relation {
        let mut r = Relation::new(self.n);
        for a in 0..self.n {
            let mids: Vec<usize> = self.succ(a).collect();
            for m in mids {
                let src = other.row(m).to_vec();
                for (x, y) in r.row_mut(a).iter_mut().zip(src) {
                    *x |= y;
                }
            }
        }
        r
    }

    /// Keep only edges whose source satisfies `keep`, i.e. `[S];self`.
    pub fn filter_domain(&self, keep: impl Fn(usize) -> bool) -> Relation {
        let mut r = self.clone();
        for a in 0..self.n {
            if !keep(a) {
                r.row_mut(a).iter_mut().for_each(|w| *w = 0);
            }
        }
        r
    }

    /// Keep only edges with both endpoints satisfying `keep`.
    pub fn restrict(&self, keep: impl Fn(usize) -> bool) -> Relation {
        Relation::from_edges(
            self.n,
            self.edges().filter(|&(a, b)| keep(a) && keep(b)).collect::<Vec<_>>(),
        )
    }

    /// Transitive closure.
    pub fn closure(&self) -> Relation {
        let mut r = self.clone();
        for k in 0..self.n {
            let row_k = r.row(k).to_vec();
            for i in 0..self.n {
                if r.contains(i, k) {
                    for (x, y) in r.row_mut(i).iter_mut().zip(&row_k) {
                        *x |= *y;
                    }
                }
            }
        }
        r
    }

    pub fn is_irreflexive(&self) -> bool {
        (0..self.n).all(|a| !self.contains(a, a))
    }

    /// Acyclicity of the relation's transitive closure, decided by a
    /// depth-first search on the edges themselves.
    pub fn is_acyclic(&self) -> bool {
        self.find_cycle_node().is_none()
    }

    fn find_cycle_node(&self) -> Option<usize> {
        // 0 = unvisited, 1 = on stack, 2 = done
        let mut color = vec![0u8; self.n];
        for s in 0..self.n {
            if color[s] != 0 {
                continue;
            }
            let mut stack: Vec<(usize, Vec<usize>)> = vec![(s, self.succ(s).collect())];
            color[s] = 1;
            while let Some((v, rest)) = stack.last_mut() {
                if let Some(w) = rest.pop() {
                    match color[w] {
                        0 => {
                            color[w] = 1;
                            let succ = self.succ(w).collect();
                            stack.push((w, succ));
                        }
                        1 => return Some(w),
                        _ => {}
                    }
                } else {
                    color[*v] = 2;
                    stack.pop();
                }
            }
        }
        None
    }
}

impl fmt::Debug for Relation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_set().entries(self.edges()).finish()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn closure_of_chain() {
        let r = Relation::from_edges(4, [(0, 1), (1, 2), (2, 3)]);
        let c = r.closure();
        assert_eq!(c.len(), 6);
        assert!(c.contains(0, 3));
        assert!(c.is_irreflexive());
        assert!(r.is_acyclic());
    }

    #[test]
    fn cycle_detection() {
        let r = Relation::from_edges(3, [(0, 1), (1, 2), (2, 0)]);
        assert!(!r.is_acyclic());
        assert!(!r.closure().is_irreflexive());
    }

    #[test]
    fn wide_relations() {
        let n = 130;
        let r = Relation::from_edges(n, (0..n - 1).map(|i| (i, i + 1)));
        let c = r.closure();
        assert!(c.contains(0, n - 1));
        assert_eq!(c.succ(0).count(), n - 1);
    }

    #[test]
    fn compose_and_inverse() {
        let a = Relation::from_edges(3, [(0, 1)]);
        let b = Relation::from_edges(3, [(1, 2)]);
        assert_eq!(a.compose(&b).edges().collect::<Vec<_>>(), vec![(0, 2)]);
        assert_eq!(a.inverse().edges().collect::<Vec<_>>(), vec![(1, 0)]);
    }

    proptest! {
        #[test]
        fn dfs_agrees_with_closure(edges in prop::collection::vec((0usize..7, 0usize..7), 0..14)) {
            let r = Relation::from_edges(7, edges);
            prop_assert_eq!(r.is_acyclic(), r.closure().is_irreflexive());
        }

        #[test]
        fn closure_is_idempotent(edges in prop::collection::vec((0usize..6, 0usize..6), 0..12)) {
            let c = Relation::from_edges(6, edges).closure();
            prop_assert_eq!(c.closure(), c);
        }
    }
}
