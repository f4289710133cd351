//! GF(2) linear algebra on bit-packed rows.
//!
//! Attack oracles in [`crate::kms`] and [`crate::simexec`] decide key
//! derivability by row reduction: an eavesdropper who knows the values of a
//! set of XOR relations can determine exactly the linear span of those
//! relations. [`Basis`] maintains that span in echelon form and answers
//! membership queries.

/// A linear combination of boolean variables, packed 64 per word.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Row {
    words: Vec<u64>,
}

impl Row {
    pub fn zero(num_vars: usize) -> Self {
        Self {
            words: vec![0; num_vars.div_ceil(64)],
        }
    }

    pub fn unit(num_vars: usize, var: usize) -> Self {
        let mut row = Self::zero(num_vars);
        row.toggle(var);
        row
    }

    pub fn from_vars(num_vars: usize, vars: &[u32]) -> Self {
        let mut row = Self::zero(num_vars);
        for &v in vars {
            row.toggle(v as usize);
        }
        row
    }

    pub fn toggle(&mut self, var: usize) {
        self.words[var / 64] ^= 1 << (var % 64);
    }

    pub fn get(&self, var: usize) -> bool {
        self.words[var / 64] >> (var % 64) & 1 == 1
    }

    pub fn is_zero(&self) -> bool {
        self.words.iter().all(|&w| w == 0)
    }

    fn xor_assign(&mut self, other: &Row) {
        for (a, b) in self.words.iter_mut().zip(&other.words) {
            *a ^= b;
        }
    }

    /// Index of the highest set bit, if any.
    fn leading(&self) -> Option<usize> {
        for (i, &w) in self.words.iter().enumerate().rev() {
            if w != 0 {
                return Some(i * 64 + 63 - w.leading_zeros() as usize);
            }
        }
        None
    }
}

/// Row space of inserted rows, kept in echelon form keyed by leading variable.
#[derive(Debug, Clone, Default)]
pub struct Basis {
    rows: Vec<Row>, // sorted by decreasing leading variable, all distinct
}

impl Basis {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn rank(&self) -> usize {
        self.rows.len()
    }

    /// Insert a row; returns true if it enlarged the span.
    pub fn insert(&mut self, mut row: Row) -> bool {
        while let Some(lead) = row.leading() {
            match self.rows.iter().find(|r| r.leading() == Some(lead)) {
                Some(pivot) => {
                    let pivot = pivot.clone();
                    row.xor_assign(&pivot);
                }
                None => {
                    self.rows.push(row);
                    self.rows.sort_by_key(|r| std::cmp::Reverse(r.leading()));
                    return true;
                }
            }
        }
        false
    }

    /// True iff `row` lies in the span of inserted rows.
    pub fn contains(&self, row: &Row) -> bool {
        let mut r = row.clone();
        while let Some(lead) = r.leading() {
            match self.rows.iter().find(|b| b.leading() == Some(lead)) {
                Some(pivot) => {
                    let pivot = pivot.clone();
                    r.xor_assign(&pivot);
                }
                None => return false,
            }
        }
        true
    }
}

/// Echelon basis of relations with known values: inserting `(row, value)`
/// records that the XOR of the row's variables equals `value`. [`solve`]
/// then evaluates any derivable combination.
///
/// [`solve`]: ValueBasis::solve
#[derive(Debug, Clone, Default)]
pub struct ValueBasis {
    rows: Vec<(Row, bool)>,
}

impl ValueBasis {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn insert(&mut self, mut row: Row, mut value: bool) {
        while let Some(lead) = row.leading() {
            match self.rows.iter().find(|(b, _)| b.leading() == Some(lead)) {
                Some(pivot) => {
                    let (pivot_row, pivot_value) = pivot.clone();
                    row.xor_assign(&pivot_row);
                    value ^= pivot_value;
                }
                None => {
                    self.rows.push((row, value));
                    return;
                }
            }
        }
        debug_assert!(!value, "inconsistent relation inserted");
    }

    /// Value of `row` when derivable from the inserted relations.
    pub fn solve(&self, row: &Row) -> Option<bool> {
        let mut r = row.clone();
        let mut value = false;
        while let Some(lead) = r.leading() {
            let (pivot_row, pivot_value) = self
                .rows
                .iter()
                .find(|(b, _)| b.leading() == Some(lead))?
                .clone();
            r.xor_assign(&pivot_row);
            value ^= pivot_value;
        }
        Some(value)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn span_membership() {
        let n = 4;
        let mut basis = Basis::new();
        // rows: a+b, b+c
        assert!(basis.insert(Row::from_vars(n, &[0, 1])));
        assert!(basis.insert(Row::from_vars(n, &[1, 2])));
        // a+c = (a+b)+(b+c) is in the span
        assert!(basis.contains(&Row::from_vars(n, &[0, 2])));
        // a alone is not
        assert!(!basis.contains(&Row::unit(n, 0)));
        // inserting a dependent row does not grow the basis
        assert!(!basis.insert(Row::from_vars(n, &[0, 2])));
        assert_eq!(basis.rank(), 2);
    }

    #[test]
    fn unit_rows_resolve_combinations() {
        let n = 3;
        let mut basis = Basis::new();
        basis.insert(Row::from_vars(n, &[0, 1, 2]));
        basis.insert(Row::unit(n, 1));
        basis.insert(Row::unit(n, 2));
        assert!(basis.contains(&Row::unit(n, 0)));
    }

    #[test]
    fn empty_row_is_always_contained() {
        let basis = Basis::new();
        assert!(basis.contains(&Row::zero(5)));
        assert!(!basis.contains(&Row::unit(5, 3)));
    }

    #[test]
    fn duplicate_toggle_cancels() {
        let row = Row::from_vars(8, &[3, 3]);
        assert!(row.is_zero());
    }

    #[test]
    fn value_basis_evaluates_combinations() {
        let n = 3;
        let mut basis = ValueBasis::new();
        // a + b = 1, b + c = 0, c = 1  =>  a = 0, b = 1
        basis.insert(Row::from_vars(n, &[0, 1]), true);
        basis.insert(Row::from_vars(n, &[1, 2]), false);
        basis.insert(Row::unit(n, 2), true);
        assert_eq!(basis.solve(&Row::unit(n, 0)), Some(false));
        assert_eq!(basis.solve(&Row::unit(n, 1)), Some(true));
        assert_eq!(basis.solve(&Row::from_vars(n, &[0, 1, 2])), Some(false));
    }

    #[test]
    fn value_basis_reports_underdetermined() {
        let mut basis = ValueBasis::new();
        basis.insert(Row::from_vars(2, &[0, 1]), true);
        assert_eq!(basis.solve(&Row::unit(2, 0)), None);
    }
}
