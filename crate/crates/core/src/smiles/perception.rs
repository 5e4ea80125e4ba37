//! Perception passes: ring membership, implicit hydrogens, hybridization,
//! heavy-atom degree, and the conjugation flag.

use super::{default_valence, BondOrder, Hybridization, Molecule};

/// Runs all perception passes in dependency order.
pub fn perceive(m: &mut Molecule) {
    perceive_rings(m);
    assign_implicit_hydrogens(m);
    perceive_hybridization(m);
    perceive_degree(m);
    perceive_conjugation(m);
}

/// Marks `bond.in_ring` for every bond that is not a bridge (i.e. lies on
/// some cycle) and `atom.in_ring` for atoms incident to an in-ring bond.
/// Bridges are found with the usual DFS low-link sweep.
pub fn perceive_rings(m: &mut Molecule) {
    let n = m.num_atoms();
    let mut disc = vec![usize::MAX; n];
    let mut low = vec![0usize; n];
    let mut is_bridge = vec![false; m.num_bonds()];
    let mut time = 0usize;

    // iterative DFS: (node, parent_bond, neighbor cursor)
    let mut stack: Vec<(usize, usize, usize)> = Vec::new();
    for root in 0..n {
        if disc[root] != usize::MAX {
            continue;
        }
        disc[root] = time;
        low[root] = time;
        time += 1;
        stack.push((root, usize::MAX, 0));
        while let Some(&(u, parent_bond, cursor)) = stack.last() {
            if cursor < m.neighbors(u).len() {
                stack.last_mut().unwrap().2 += 1;
                let (v, bi) = m.neighbors(u)[cursor];
                if bi == parent_bond {
                    continue;
                }
                if disc[v] == usize::MAX {
                    disc[v] = time;
                    low[v] = time;
                    time += 1;
                    stack.push((v, bi, 0));
                } else {
                    low[u] = low[u].min(disc[v]);
                }
            } else {
                stack.pop();
                if let Some(&(p, _, _)) = stack.last() {
                    low[p] = low[p].min(low[u]);
                    if low[u] > disc[p] {
                        is_bridge[parent_bond] = true;
                    }
                }
            }
        }
    }

    for (bi, bond) in m.bonds.iter_mut().enumerate() {
        bond.in_ring = !is_bridge[bi];
    }
    for atom in m.atoms.iter_mut() {
        atom.in_ring = false;
    }
    for bi in 0..m.bonds.len() {
        if m.bonds[bi].in_ring {
            let (a, b) = (m.bonds[bi].a, m.bonds[bi].b);
            m.atoms[a].in_ring = true;
            m.atoms[b].in_ring = true;
        }
    }
}

/// Bracket atoms trust their explicit hydrogen count; organic-subset atoms
/// get `max(0, default_valence - bond_order_sum - aromatic_penalty)`, where
/// aromatic bonds count 1 toward the sum and aromatic atoms pay a penalty
/// of 1.
pub fn assign_implicit_hydrogens(m: &mut Molecule) {
    for i in 0..m.num_atoms() {
        let h = match m.atoms[i].explicit_h {
            Some(h) => h,
            None => {
                let default = default_valence(&m.atoms[i].symbol).unwrap_or(0);
                let sum = m.bond_order_sum(i);
                let penalty = u32::from(m.atoms[i].aromatic);
                default.saturating_sub(sum + penalty) as u8
            }
        };
        m.atoms[i].implicit_h = h;
    }
}

/// sp if the atom has a triple bond or at least two double bonds; sp2 if it
/// has exactly one double bond or is aromatic; sp3 otherwise for common
/// main-group elements; `Other` for the rest.
pub fn perceive_hybridization(m: &mut Molecule) {
    const SP3_ELEMENTS: &[&str] = &[
        "C", "N", "O", "S", "P", "B", "Si", "F", "Cl", "Br", "I",
    ];
    for i in 0..m.num_atoms() {
        let mut doubles = 0;
        let mut triples = 0;
        for &(_, bi) in m.neighbors(i) {
            match m.bonds[bi].order {
                BondOrder::Double => doubles += 1,
                BondOrder::Triple => triples += 1,
                _ => {}
            }
        }
        m.atoms[i].hybridization = if triples > 0 || doubles >= 2 {
            Hybridization::Sp
        } else if doubles == 1 || m.atoms[i].aromatic {
            Hybridization::Sp2
        } else if SP3_ELEMENTS.contains(&m.atoms[i].symbol.as_str()) {
            Hybridization::Sp3
        } else {
            Hybridization::Other
        };
    }
}

fn perceive_degree(m: &mut Molecule) {
    for i in 0..m.num_atoms() {
        m.atoms[i].degree = m.neighbors(i).len().min(u8::MAX as usize) as u8;
    }
}

/// A bond is conjugated iff it is aromatic, or both endpoints each take part
/// in at least one double, triple, or aromatic bond.
fn perceive_conjugation(m: &mut Molecule) {
    let mut multiple = vec![false; m.num_atoms()];
    for bond in &m.bonds {
        if bond.order != BondOrder::Single {
            multiple[bond.a] = true;
            multiple[bond.b] = true;
        }
    }
    for bond in m.bonds.iter_mut() {
        bond.conjugated =
            bond.order == BondOrder::Aromatic || (multiple[bond.a] && multiple[bond.b]);
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::smiles::parse_smiles;

    #[test]
    fn cyclohexane_all_bonds_in_ring() {
        let m = parse_smiles("C1CCCCC1").unwrap();
        assert!(m.bonds.iter().all(|b| b.in_ring));
        assert!(m.atoms.iter().all(|a| a.in_ring));
    }

    #[test]
    fn chain_has_no_ring_flags() {
        let m = parse_smiles("CCO").unwrap();
        assert!(m.bonds.iter().all(|b| !b.in_ring));
        assert!(m.atoms.iter().all(|a| !a.in_ring));
    }

    #[test]
    fn toluene_methyl_bond_is_bridge() {
        let m = parse_smiles("Cc1ccccc1").unwrap();
        let methyl_bond = m.bond_between(0, 1).unwrap();
        assert!(!m.bonds[methyl_bond].in_ring);
        assert!(!m.atoms[0].in_ring);
        assert!(m.atoms[1].in_ring);
        assert_eq!(m.bonds.iter().filter(|b| b.in_ring).count(), 6);
    }

    #[test]
    fn bicyclooctane_all_bonds_in_ring() {
        // fused bicycle: every edge lies on some simple cycle, verified
        // against brute-force cycle enumeration below
        let m = parse_smiles("C1CC2CCC1CC2").unwrap();
        assert_eq!(m.num_bonds(), 9);
        let on_cycle = brute_force_cycle_edges(&m);
        for (bi, bond) in m.bonds.iter().enumerate() {
            assert_eq!(bond.in_ring, on_cycle[bi], "bond {bi} disagrees");
        }
        assert!(m.bonds.iter().all(|b| b.in_ring));
    }

    #[test]
    fn spiro_and_pendant_mixture_matches_oracle() {
        let m = parse_smiles("CC1CCC2(CC1)CCCC2").unwrap();
        let on_cycle = brute_force_cycle_edges(&m);
        for (bi, bond) in m.bonds.iter().enumerate() {
            assert_eq!(bond.in_ring, on_cycle[bi], "bond {bi} disagrees");
        }
    }

    /// Independent oracle: an edge is on a cycle iff some simple cycle
    /// contains it, found by exhaustive DFS path enumeration.
    fn brute_force_cycle_edges(m: &Molecule) -> Vec<bool> {
        let mut on_cycle = vec![false; m.num_bonds()];
        for (start_bond, flag) in on_cycle.iter_mut().enumerate() {
            let (a, b) = (m.bonds[start_bond].a, m.bonds[start_bond].b);
            // search a simple path from b back to a avoiding start_bond
            let mut visited = vec![false; m.num_atoms()];
            visited[b] = true;
            if dfs_path(m, b, a, start_bond, &mut visited) {
                *flag = true;
            }
        }
        on_cycle
    }

    fn dfs_path(
        m: &Molecule,
        from: usize,
        target: usize,
        banned_bond: usize,
        visited: &mut Vec<bool>,
    ) -> bool {
        for &(next, bi) in m.neighbors(from) {
            if bi == banned_bond {
                continue;
            }
            if next == target {
                return true;
            }
            if !visited[next] {
                visited[next] = true;
                if dfs_path(m, next, target, banned_bond, visited) {
                    return true;
                }
                visited[next] = false;
            }
        }
        false
    }

    #[test]
    fn implicit_hydrogens() {
        let m = parse_smiles("c1ccccc1").unwrap();
        assert!(m.atoms.iter().all(|a| a.implicit_h == 1));

        let m = parse_smiles("c1ccncc1").unwrap();
        assert_eq!(m.atoms[3].symbol, "N");
        assert_eq!(m.atoms[3].implicit_h, 0);

        let m = parse_smiles("CCO").unwrap();
        assert_eq!(m.atoms[2].implicit_h, 1);
        assert_eq!(m.atoms[0].implicit_h, 3);
        assert_eq!(m.atoms[1].implicit_h, 2);

        // bracket atoms trust the written count
        let m = parse_smiles("C[NH3+]").unwrap();
        assert_eq!(m.atoms[1].implicit_h, 3);
    }

    #[test]
    fn hybridization() {
        let m = parse_smiles("C=C").unwrap();
        assert!(m
            .atoms
            .iter()
            .all(|a| a.hybridization == Hybridization::Sp2));

        let m = parse_smiles("C#N").unwrap();
        assert_eq!(m.atoms[0].hybridization, Hybridization::Sp);
        assert_eq!(m.atoms[1].hybridization, Hybridization::Sp);

        let m = parse_smiles("CCCC").unwrap();
        assert!(m
            .atoms
            .iter()
            .all(|a| a.hybridization == Hybridization::Sp3));

        // allene-style center counts two doubles as sp
        let m = parse_smiles("C=C=C").unwrap();
        assert_eq!(m.atoms[1].hybridization, Hybridization::Sp);

        let m = parse_smiles("c1ccccc1").unwrap();
        assert!(m
            .atoms
            .iter()
            .all(|a| a.hybridization == Hybridization::Sp2));
    }

    #[test]
    fn conjugation_flag() {
        let m = parse_smiles("CCO").unwrap();
        assert!(m.bonds.iter().all(|b| !b.conjugated));

        let m = parse_smiles("c1ccccc1").unwrap();
        assert!(m.bonds.iter().all(|b| b.conjugated));

        // butadiene: central single bond joins two double-bond carbons
        let m = parse_smiles("C=CC=C").unwrap();
        let central = m.bond_between(1, 2).unwrap();
        assert!(m.bonds[central].conjugated);

        // isolated single bond next to one double bond is not conjugated
        let m = parse_smiles("CC=C").unwrap();
        let single = m.bond_between(0, 1).unwrap();
        assert!(!m.bonds[single].conjugated);
    }

    #[test]
    fn degree_counts_heavy_neighbors() {
        let m = parse_smiles("CC(C)(C)C").unwrap();
        assert_eq!(m.atoms[1].degree, 4);
        assert_eq!(m.atoms[0].degree, 1);
    }

    #[test]
    fn valence_conservation_bound() {
        // sum of (bond_order_sum + implicit_h + aromatic_penalty) never
        // exceeds the sum of default valences for organic-subset atoms
        for smiles in ["CCO", "c1ccccc1", "C=CC=C", "CC(=O)O", "c1ccncc1"] {
            let m = parse_smiles(smiles).unwrap();
            let mut lhs = 0u32;
            let mut rhs = 0u32;
            for (i, atom) in m.atoms.iter().enumerate() {
                lhs += m.bond_order_sum(i)
                    + u32::from(atom.implicit_h)
                    + u32::from(atom.aromatic);
                rhs += crate::smiles::default_valence(&atom.symbol).unwrap();
            }
            assert!(lhs <= rhs, "{smiles}: {lhs} > {rhs}");
        }
    }
}
