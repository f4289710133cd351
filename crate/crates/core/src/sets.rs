//! Small set-algebra helpers shared by the vulnerability calculus and the
//! secret-sharing access-structure solvers.

use std::collections::BTreeSet;

/// Keep only inclusion-minimal sets: every member that is a strict superset
/// of another member is removed. Idempotent.
pub fn prune_supersets<T: Ord + Clone>(sets: Vec<BTreeSet<T>>) -> BTreeSet<BTreeSet<T>> {
    let mut out: BTreeSet<BTreeSet<T>> = BTreeSet::new();
    'next: for candidate in sets {
        for kept in &out {
            if kept.is_subset(&candidate) {
                continue 'next;
            }
        }
        out.retain(|kept| !candidate.is_subset(kept));
        out.insert(candidate);
    }
    out
}

/// True iff `family` contains no set that is a strict superset of another.
pub fn is_antichain<T: Ord>(family: &[BTreeSet<T>]) -> bool {
    for (i, a) in family.iter().enumerate() {
        for (j, b) in family.iter().enumerate() {
            if i != j && a.is_subset(b) {
                return false;
            }
        }
    }
    true
}
