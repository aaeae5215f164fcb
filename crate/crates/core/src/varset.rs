//! Variable sets backed by a growable bitset.

use std::fmt;
use std::hash::{Hash, Hasher};

use fixedbitset::FixedBitSet;

use crate::circuit::Var;

/// A set of variables. Equality, ordering and hashing depend only on the
/// members, never on the capacity of the underlying bitset.
#[derive(Clone, Default)]
pub struct VarSet(FixedBitSet);

impl VarSet {
    pub fn new() -> Self {
        VarSet(FixedBitSet::new())
    }

    pub fn singleton(v: Var) -> Self {
        let mut s = VarSet::new();
        s.insert(v);
        s
    }

    pub fn insert(&mut self, v: Var) {
        let i = v.index();
        if i >= self.0.len() {
            self.0.grow(i + 1);
        }
        self.0.insert(i);
    }

    pub fn remove(&mut self, v: Var) {
        if v.index() < self.0.len() {
            self.0.set(v.index(), false);
        }
    }

    pub fn contains(&self, v: Var) -> bool {
        self.0.contains(v.index())
    }

    pub fn len(&self) -> usize {
        self.0.count_ones(..)
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_clear()
    }

    pub fn union_with(&mut self, other: &VarSet) {
        self.0.union_with(&other.0);
    }

    pub fn union(&self, other: &VarSet) -> VarSet {
        let mut s = self.clone();
        s.union_with(other);
        s
    }

    pub fn intersection(&self, other: &VarSet) -> VarSet {
        let mut s = self.clone();
        s.0.intersect_with(&other.0);
        s
    }

    pub fn difference(&self, other: &VarSet) -> VarSet {
        let mut s = self.clone();
        s.0.difference_with(&other.0);
        s
    }

    pub fn is_subset(&self, other: &VarSet) -> bool {
        self.0.ones().all(|i| other.0.contains(i))
    }

    pub fn is_disjoint(&self, other: &VarSet) -> bool {
        self.0.is_disjoint(&other.0)
    }

    /// Members in increasing id order.
    pub fn iter(&self) -> impl Iterator<Item = Var> + '_ {
        self.0.ones().map(|i| Var(i as u32))
    }

    pub fn to_vec(&self) -> Vec<Var> {
        self.iter().collect()
    }

    pub fn max(&self) -> Option<Var> {
        self.0.ones().next_back().map(|i| Var(i as u32))
    }
}

impl FromIterator<Var> for VarSet {
    fn from_iter<I: IntoIterator<Item = Var>>(iter: I) -> Self {
        let mut s = VarSet::new();
        for v in iter {
            s.insert(v);
        }
        s
    }
}

impl PartialEq for VarSet {
    fn eq(&self, other: &Self) -> bool {
        self.0.ones().eq(other.0.ones())
    }
}

impl Eq for VarSet {}

impl Hash for VarSet {
    fn hash<H: Hasher>(&self, state: &mut H) {
        for i in self.0.ones() {
            i.hash(state);
        }
    }
}

impl PartialOrd for VarSet {
    fn partial_cmp(&self, other: &Self) -> Option<std::cmp::Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for VarSet {
    fn cmp(&self, other: &Self) -> std::cmp::Ordering {
        self.0.ones().cmp(other.0.ones())
    }
}

impl fmt::Debug for VarSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_set().entries(self.iter()).finish()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn set(ids: &[u32]) -> VarSet {
        ids.iter().map(|&i| Var(i)).collect()
    }

    #[test]
    fn equality_ignores_capacity() {
        let a = set(&[1, 2]);
        let mut b = set(&[1, 2, 70]);
        b.remove(Var(70));
        assert_eq!(a, b);
        let mut h1 = std::collections::hash_map::DefaultHasher::new();
        let mut h2 = std::collections::hash_map::DefaultHasher::new();
        a.hash(&mut h1);
        b.hash(&mut h2);
        assert_eq!(h1.finish(), h2.finish());
    }

    #[test]
    fn subset_across_lengths() {
        assert!(set(&[3]).is_subset(&set(&[1, 3, 90])));
        assert!(!set(&[90]).is_subset(&set(&[1, 3])));
        assert!(VarSet::new().is_subset(&VarSet::new()));
        assert!(set(&[2]).is_disjoint(&set(&[1, 100])));
        assert_eq!(set(&[1, 5]).union(&set(&[64])).len(), 3);
        assert_eq!(set(&[1, 5, 64]).difference(&set(&[5])), set(&[1, 64]));
    }
}
