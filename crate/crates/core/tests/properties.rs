//! Property tests over randomly generated molecules.

use funqg_core::coarsen::{self, Aggregation};
use funqg_core::featurize::{featurize, EDGE_FEATURES, NODE_FEATURES};
use funqg_core::fg;
use funqg_core::smiles::{parse_smiles, write_smiles, Molecule};
use funqg_core::synth::random_molecule;
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use std::collections::BTreeSet;

fn molecule_from_seed(seed: u64) -> Molecule {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    random_molecule(&mut rng)
}

fn atom_label(a: &funqg_core::smiles::Atom) -> (String, bool, i32, u8) {
    (a.symbol.clone(), a.aromatic, a.formal_charge, a.implicit_h)
}

proptest! {
    /// The parser is total: arbitrary input either parses or returns a
    /// structured error, never panicking.
    #[test]
    fn parser_never_panics(input in ".{0,60}") {
        let _ = parse_smiles(&input);
    }

    /// Same, restricted to the SMILES alphabet so the parser gets deeper.
    #[test]
    fn parser_never_panics_on_smiles_alphabet(
        input in "[A-Za-z0-9\\[\\]()=#:+%/\\\\@.-]{0,40}"
    ) {
        let _ = parse_smiles(&input);
    }

    #[test]
    fn smiles_round_trip_preserves_structure(seed in any::<u64>()) {
        let m1 = molecule_from_seed(seed);
        let text = write_smiles(&m1);
        let m2 = parse_smiles(&text)
            .unwrap_or_else(|e| panic!("emitted {text:?} does not parse: {e}"));

        prop_assert_eq!(m1.num_atoms(), m2.num_atoms());
        prop_assert_eq!(m1.num_bonds(), m2.num_bonds());

        let mut l1: Vec<_> = m1.atoms.iter().map(atom_label).collect();
        let mut l2: Vec<_> = m2.atoms.iter().map(atom_label).collect();
        l1.sort();
        l2.sort();
        prop_assert_eq!(l1, l2);

        let mut d1: Vec<_> = m1.atoms.iter().map(|a| a.degree).collect();
        let mut d2: Vec<_> = m2.atoms.iter().map(|a| a.degree).collect();
        d1.sort_unstable();
        d2.sort_unstable();
        prop_assert_eq!(d1, d2);

        let mut o1: Vec<_> = m1.bonds.iter().map(|b| b.order.valence()).collect();
        let mut o2: Vec<_> = m2.bonds.iter().map(|b| b.order.valence()).collect();
        o1.sort_unstable();
        o2.sort_unstable();
        prop_assert_eq!(o1, o2);
    }

    #[test]
    fn feature_widths_and_one_hot_validity(seed in any::<u64>()) {
        let m = molecule_from_seed(seed);
        let g = featurize::<f64>(&m).unwrap();
        prop_assert_eq!(g.n_i(), NODE_FEATURES);
        prop_assert_eq!(g.e_i(), EDGE_FEATURES);

        const NODE_SEGMENTS: [(usize, usize); 6] =
            [(0, 12), (12, 6), (18, 5), (23, 3), (26, 5), (31, 4)];
        for row in g.node_features.rows() {
            for (start, width) in NODE_SEGMENTS {
                let sum: f64 = row.iter().skip(start).take(width).sum();
                prop_assert!((sum - 1.0).abs() < 1e-12);
            }
            prop_assert!(row[36] >= 0.0);
        }
        const EDGE_SEGMENTS: [(usize, usize); 2] = [(0, 4), (6, 3)];
        for row in g.edge_features.rows() {
            for (start, width) in EDGE_SEGMENTS {
                let sum: f64 = row.iter().skip(start).take(width).sum();
                prop_assert!((sum - 1.0).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn functional_groups_are_disjoint_connected_and_cover(seed in any::<u64>()) {
        let m = molecule_from_seed(seed);
        let groups = fg::detect(&m);
        let mut all = BTreeSet::new();
        for g in &groups {
            prop_assert!(!g.atom_indices.is_empty());
            for &a in &g.atom_indices {
                prop_assert!(all.insert(a), "groups overlap at {}", a);
            }
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
            prop_assert_eq!(&seen, &set, "group not connected");
        }
        for (i, atom) in m.atoms.iter().enumerate() {
            if !atom.is_carbon() {
                prop_assert!(all.contains(&i), "heteroatom {} uncovered", i);
            }
            if !all.contains(&i) {
                prop_assert!(atom.is_carbon());
            }
        }
    }

    #[test]
    fn quotient_structure_invariants(seed in any::<u64>()) {
        let m = molecule_from_seed(seed);
        let g = featurize::<f64>(&m).unwrap();
        let fgs = fg::detect(&m);

        let cut = coarsen::compute_cut_edges(&g, &fgs).unwrap();
        let partition = coarsen::components_partition(&g, &cut, &fgs).unwrap();

        // partition property: disjoint cover
        let mut seen = vec![false; g.num_nodes()];
        for block in &partition.blocks {
            prop_assert!(!block.is_empty());
            for &v in block {
                prop_assert!(!seen[v]);
                seen[v] = true;
            }
        }
        prop_assert!(seen.iter().all(|&s| s));

        // two-stage equals one-step structurally
        let two = coarsen::funqg_two_stage(&g, &fgs, Aggregation::Mean, Aggregation::Sum).unwrap();
        let one = coarsen::funqg_one_step(&g, &fgs, Aggregation::Mean, Aggregation::Sum).unwrap();
        prop_assert!(two.same_structure(&one));

        // simple, loopless, node count = block count, monotone
        prop_assert_eq!(two.num_nodes(), partition.num_blocks());
        let mut edge_set = BTreeSet::new();
        for &(u, v) in &two.edges {
            prop_assert!(u < v, "unnormalized or self-loop edge");
            prop_assert!(edge_set.insert((u, v)), "parallel quotient edge");
        }
        prop_assert!(two.num_nodes() <= g.num_nodes());
        let all_singletons = partition.blocks.iter().all(|b| b.len() == 1);
        prop_assert_eq!(two.num_nodes() == g.num_nodes(), all_singletons);

        // connectivity preserved (generated molecules are connected)
        let n = two.num_nodes();
        let mut adj = vec![Vec::new(); n];
        for &(u, v) in &two.edges {
            adj[u].push(v);
            adj[v].push(u);
        }
        let mut vis = vec![false; n];
        vis[0] = true;
        let mut frontier = vec![0usize];
        while let Some(u) = frontier.pop() {
            for &v in &adj[u] {
                if !vis[v] {
                    vis[v] = true;
                    frontier.push(v);
                }
            }
        }
        prop_assert!(vis.iter().all(|&v| v));

        // sum/sum conserves the node-feature total
        let sum_sum = coarsen::funqg_two_stage(&g, &fgs, Aggregation::Sum, Aggregation::Sum).unwrap();
        let a: f64 = g.node_features.sum();
        let b: f64 = sum_sum.node_features.sum();
        prop_assert!((a - b).abs() <= 1e-9 * a.abs().max(1.0));

        // abstraction ratio within (0, 1]
        let ratio = coarsen::abstraction_ratio_counts(&[(g.num_nodes(), two.num_nodes())]).unwrap();
        prop_assert!(ratio > 0.0 && ratio <= 1.0);
    }
}
