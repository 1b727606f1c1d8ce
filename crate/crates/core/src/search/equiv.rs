//! Boolean-function identity of formulas.

use crate::maskops::{ConceptId, Formula};

/// Arity cap: truth tables are kept in one `u64` (six variables).
pub const MAX_KEY_ATOMS: usize = 6;

/// The boolean function a formula denotes, reduced to its essential
/// variables. Equal keys iff the formulas are equivalent.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct EquivKey {
    vars: Vec<ConceptId>,
    table: u64,
}

impl EquivKey {
    pub fn vars(&self) -> &[ConceptId] {
        &self.vars
    }

    pub fn is_constant(&self) -> bool {
        self.vars.is_empty()
    }
}

fn distinct_atoms(f: &Formula) -> Vec<ConceptId> {
    let mut atoms: Vec<ConceptId> = f.terms().collect();
    atoms.sort_unstable();
    atoms.dedup();
    atoms
}

fn truth_table(f: &Formula, atoms: &[ConceptId]) -> u64 {
    let rows = 1usize << atoms.len();
    let mut table = 0u64;
    for row in 0..rows {
        let v = f.eval(|c| {
            let i = atoms.binary_search(&c).expect("atom listed");
            row >> i & 1 == 1
        });
        if v {
            table |= 1 << row;
        }
    }
    table
}

/// Panics if the formula has more than [`MAX_KEY_ATOMS`] distinct atoms.
pub fn equivalence_key(f: &Formula) -> EquivKey {
    let atoms = distinct_atoms(f);
    assert!(atoms.len() <= MAX_KEY_ATOMS, "formula has too many atoms for a key");
    let n = atoms.len();
    let table = truth_table(f, &atoms);
    let bit = |t: u64, row: usize| t >> row & 1 == 1;
    let essential: Vec<usize> = (0..n)
        .filter(|&i| (0..1usize << n).any(|row| row >> i & 1 == 0 && bit(table, row) != bit(table, row | 1 << i)))
        .collect();
    // Project the table onto the essential variables; the rest are fixed at 0.
    let mut reduced = 0u64;
    for row in 0..1usize << essential.len() {
        let mut full = 0usize;
        for (j, &i) in essential.iter().enumerate() {
            full |= (row >> j & 1) << i;
        }
        if bit(table, full) {
            reduced |= 1 << row;
        }
    }
    EquivKey {
        vars: essential.iter().map(|&i| atoms[i]).collect(),
        table: reduced,
    }
}

/// True iff `f` and `g` agree on every assignment of their atoms.
pub fn formulas_equivalent(f: &Formula, g: &Formula) -> bool {
    let mut atoms = distinct_atoms(f);
    atoms.extend(distinct_atoms(g));
    atoms.sort_unstable();
    atoms.dedup();
    assert!(atoms.len() <= 2 * MAX_KEY_ATOMS, "too many atoms to compare");
    (0..1usize << atoms.len()).all(|row| {
        let value = |c: ConceptId| row >> atoms.binary_search(&c).unwrap() & 1 == 1;
        f.eval(value) == g.eval(value)
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::maskops::Op;
    use proptest::prelude::*;

    fn c(i: u32) -> ConceptId {
        ConceptId(i)
    }

    #[test]
    fn commutative_or() {
        let f = Formula::new(c(1), vec![(Op::Or, c(2))]);
        let g = Formula::new(c(2), vec![(Op::Or, c(1))]);
        assert!(formulas_equivalent(&f, &g));
        assert_eq!(equivalence_key(&f), equivalence_key(&g));
    }

    #[test]
    fn contradictions_coincide() {
        let f = Formula::new(c(1), vec![(Op::AndNot, c(1))]);
        let g = Formula::new(c(2), vec![(Op::AndNot, c(2))]);
        assert!(formulas_equivalent(&f, &g));
        assert!(equivalence_key(&f).is_constant());
        assert_eq!(equivalence_key(&f), equivalence_key(&g));
    }

    #[test]
    fn association_matters() {
        // ((a OR b) AND c) vs a OR (b AND c), the latter written left-deep as ((b AND c) OR a).
        let f = Formula::new(c(1), vec![(Op::Or, c(2)), (Op::And, c(3))]);
        let g = Formula::new(c(2), vec![(Op::And, c(3)), (Op::Or, c(1))]);
        assert!(!formulas_equivalent(&f, &g));
        assert_ne!(equivalence_key(&f), equivalence_key(&g));
    }

    #[test]
    fn absorption_reduces_to_atom() {
        let f = Formula::new(c(4), vec![(Op::Or, c(4)), (Op::And, c(4))]);
        assert_eq!(equivalence_key(&f), equivalence_key(&Formula::atom(c(4))));
        let g = Formula::new(c(4), vec![(Op::And, c(7)), (Op::Or, c(4))]);
        assert_eq!(equivalence_key(&g), equivalence_key(&Formula::atom(c(4))));
    }

    fn arb_formula() -> impl Strategy<Value = Formula> {
        (1u32..5, proptest::collection::vec((0usize..3, 1u32..5), 0..3))
            .prop_map(|(h, tail)| Formula::new(c(h), tail.into_iter().map(|(o, t)| (Op::ALL[o], c(t))).collect()))
    }

    proptest! {
        #[test]
        fn key_equality_matches_truth_tables(f in arb_formula(), g in arb_formula()) {
            prop_assert_eq!(equivalence_key(&f) == equivalence_key(&g), formulas_equivalent(&f, &g));
        }

        #[test]
        fn canonical_form_is_equivalent(f in arb_formula()) {
            prop_assert!(formulas_equivalent(&f, &f.canonical()));
        }
    }
}
