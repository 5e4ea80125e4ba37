//! Functional-group detection by atom marking.
//!
//! Marking rules over heavy atoms:
//!
//! - R1: every heteroatom (any atom that is not carbon);
//! - R2: every carbon double- or triple-bonded to a heteroatom via a
//!   non-aromatic bond;
//! - R3: both carbons of every non-aromatic carbon-carbon double or triple
//!   bond;
//! - R4: every acetal-like carbon: a non-aromatic carbon with two or more
//!   single bonds to O/N/S atoms that themselves carry no double bond;
//! - R5: all atoms of every 3-membered ring containing a heteroatom.
//!
//! Connected sets of marked atoms form one functional group each, so
//! aromatic heteroatoms become single-atom groups without dragging in
//! their ring.

use crate::smiles::{BondOrder, Molecule};
use std::collections::BTreeSet;

/// A connected set of marked atom indices into the parent molecule.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FunctionalGroup {
    /// Sorted ascending.
    pub atom_indices: Vec<usize>,
}

impl FunctionalGroup {
    pub fn len(&self) -> usize {
        self.atom_indices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.atom_indices.is_empty()
    }

    pub fn contains(&self, atom: usize) -> bool {
        self.atom_indices.binary_search(&atom).is_ok()
    }
}

/// Applies rules R1-R5 and returns the union of marked atoms.
pub fn mark_atoms(m: &Molecule) -> BTreeSet<usize> {
    let mut marked = BTreeSet::new();

    // R1: heteroatoms
    for (i, atom) in m.atoms.iter().enumerate() {
        if !atom.is_carbon() {
            marked.insert(i);
        }
    }

    // R2 + R3: multiple bonds
    for bond in &m.bonds {
        if !matches!(bond.order, BondOrder::Double | BondOrder::Triple) {
            continue;
        }
        let a_carbon = m.atoms[bond.a].is_carbon();
        let b_carbon = m.atoms[bond.b].is_carbon();
        match (a_carbon, b_carbon) {
            (true, false) => {
                marked.insert(bond.a);
            }
            (false, true) => {
                marked.insert(bond.b);
            }
            (true, true) => {
                marked.insert(bond.a);
                marked.insert(bond.b);
            }
            (false, false) => {}
        }
    }

    // R4: acetal-like carbons
    let mut has_double = vec![false; m.num_atoms()];
    for bond in &m.bonds {
        if bond.order == BondOrder::Double {
            has_double[bond.a] = true;
            has_double[bond.b] = true;
        }
    }
    for (i, atom) in m.atoms.iter().enumerate() {
        if !atom.is_carbon() || atom.aromatic {
            continue;
        }
        let single_ons = m
            .neighbors(i)
            .iter()
            .filter(|&&(n, bi)| {
                m.bonds[bi].order == BondOrder::Single
                    && matches!(m.atoms[n].symbol.as_str(), "O" | "N" | "S")
                    && !has_double[n]
            })
            .count();
        if single_ons >= 2 {
            marked.insert(i);
        }
    }

    // R5: 3-membered rings with a heteroatom
    for bond in &m.bonds {
        for &(k, _) in m.neighbors(bond.a) {
            if k == bond.b {
                continue;
            }
            if m.bond_between(bond.b, k).is_some() {
                let tri = [bond.a, bond.b, k];
                if tri.iter().any(|&x| !m.atoms[x].is_carbon()) {
                    marked.extend(tri);
                }
            }
        }
    }

    marked
}

/// Connected components of the subgraph induced by the marked atoms, in
/// deterministic order (by smallest member index).
pub fn extract_fgs(m: &Molecule, marked: &BTreeSet<usize>) -> Vec<FunctionalGroup> {
    let mut seen = BTreeSet::new();
    let mut groups = Vec::new();
    for &start in marked {
        if seen.contains(&start) {
            continue;
        }
        let mut component = BTreeSet::new();
        component.insert(start);
        let mut frontier = vec![start];
        while let Some(u) = frontier.pop() {
            for &(v, _) in m.neighbors(u) {
                if marked.contains(&v) && component.insert(v) {
                    frontier.push(v);
                }
            }
        }
        seen.extend(component.iter().copied());
        groups.push(FunctionalGroup {
            atom_indices: component.into_iter().collect(),
        });
    }
    groups
}

/// Full detection: mark, then split into connected groups.
pub fn detect(m: &Molecule) -> Vec<FunctionalGroup> {
    extract_fgs(m, &mark_atoms(m))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::smiles::parse_smiles;

    fn groups_of(smiles: &str) -> Vec<Vec<usize>> {
        detect(&parse_smiles(smiles).unwrap())
            .into_iter()
            .map(|g| g.atom_indices)
            .collect()
    }

    #[test]
    fn hexane_has_no_groups() {
        assert!(mark_atoms(&parse_smiles("CCCCCC").unwrap()).is_empty());
        assert!(groups_of("CCCCCC").is_empty());
    }

    #[test]
    fn acetic_acid_single_group_of_three() {
        let marked = mark_atoms(&parse_smiles("CC(=O)O").unwrap());
        assert_eq!(marked.into_iter().collect::<Vec<_>>(), vec![1, 2, 3]);
        assert_eq!(groups_of("CC(=O)O"), vec![vec![1, 2, 3]]);
    }

    #[test]
    fn ethene_marks_both_carbons() {
        let marked = mark_atoms(&parse_smiles("C=C").unwrap());
        assert_eq!(marked.into_iter().collect::<Vec<_>>(), vec![0, 1]);
    }

    #[test]
    fn aromatic_ring_carbons_stay_unmarked() {
        assert!(groups_of("c1ccccc1").is_empty());
        // the ring nitrogen is a single-atom group
        assert_eq!(groups_of("c1ccncc1"), vec![vec![3]]);
    }

    #[test]
    fn epoxide_whole_ring_marked() {
        assert_eq!(groups_of("C1CO1"), vec![vec![0, 1, 2]]);
        // carbon-only 3-ring is not
        assert!(groups_of("C1CC1").is_empty());
    }

    #[test]
    fn acetal_carbon_marked() {
        assert_eq!(groups_of("COCOC"), vec![vec![1, 2, 3]]);
        // ester methyl-oxygen carbon is not acetal-like (one O only)
        assert_eq!(groups_of("CC(=O)OC"), vec![vec![1, 2, 3]]);
    }

    #[test]
    fn empty_marked_set_yields_no_groups() {
        let m = parse_smiles("CC").unwrap();
        assert!(extract_fgs(&m, &BTreeSet::new()).is_empty());
    }

    #[test]
    fn ring_cation_is_single_atom_group() {
        // all four heteroatoms of the bis-quinolinium molecule are isolated
        let g = groups_of("Cc1cc(N)c2ccccc2[n+]1CCCCCCCCCC[n+]1c(C)cc(N)c2ccccc21");
        assert_eq!(g.len(), 4);
        assert!(g.iter().all(|grp| grp.len() == 1));
    }

    #[test]
    fn groups_are_disjoint_connected_and_cover_heteroatoms() {
        for smiles in [
            "CC(=O)Nc1ccc(O)cc1",
            "CS(=O)(=O)C",
            "OCC(O)CO",
            "CC(OC)OC",
            "Fc1ccc(Br)cc1",
        ] {
            let m = parse_smiles(smiles).unwrap();
            let groups = detect(&m);
            let mut all = BTreeSet::new();
            for g in &groups {
                for &a in &g.atom_indices {
                    assert!(all.insert(a), "{smiles}: overlap at atom {a}");
                }
                // connectivity of the induced subgraph
                let set: BTreeSet<usize> = g.atom_indices.iter().copied().collect();
                let mut seen = BTreeSet::new();
                seen.insert(g.atom_indices[0]);
                let mut frontier = vec![g.atom_indices[0]];
                while let Some(u) = frontier.pop() {
                    for &(v, _) in m.neighbors(u) {
                        if set.contains(&v) && seen.insert(v) {
                            frontier.push(v);
                        }
                    }
                }
                assert_eq!(seen, set, "{smiles}: group not connected");
            }
            for (i, atom) in m.atoms.iter().enumerate() {
                if !atom.is_carbon() {
                    assert!(all.contains(&i), "{smiles}: heteroatom {i} uncovered");
                }
                if !all.contains(&i) {
                    assert!(atom.is_carbon(), "{smiles}: non-carbon outside groups");
                }
            }
        }
    }
}
