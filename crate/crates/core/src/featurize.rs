//! Fixed-width node and edge feature extraction.
//!
//! Node features (length [`NODE_FEATURES`] = 37), concatenated in order:
//! element one-hot over `[B,C,N,O,F,Si,P,S,Cl,Br,I,other]` (12); heavy-atom
//! degree one-hot 0-5 (6); formal charge one-hot over `[-2,-1,0,+1,+2]`
//! with out-of-range clamped to the nearest end (5); chiral tag one-hot
//! `[none,@,@@]` (3); hydrogen count one-hot 0-4 clamped (5); hybridization
//! one-hot `[sp,sp2,sp3,other]` (4); aromatic flag (1); atomic mass / 100
//! (1).
//!
//! Edge features (length [`EDGE_FEATURES`] = 9): bond-order one-hot
//! `[single,double,triple,aromatic]` (4); conjugated flag (1); in-ring flag
//! (1); stereo one-hot `[none,cis,trans]` (3).

use crate::nn::scalar::Scalar;
use crate::nn::Tensor2;
use crate::smiles::{BondOrder, BondStereo, ChiralTag, Hybridization, Molecule};
use thiserror::Error;

/// Node feature width, constant across a dataset.
pub const NODE_FEATURES: usize = 37;
/// Edge feature width, constant across a dataset.
pub const EDGE_FEATURES: usize = 9;

/// Element vocabulary for the one-hot slot; everything else maps to `other`.
pub const ELEMENT_VOCAB: [&str; 11] = [
    "B", "C", "N", "O", "F", "Si", "P", "S", "Cl", "Br", "I",
];

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum FeaturizeError {
    #[error("cannot featurize a molecule with zero atoms")]
    EmptyMolecule,
}

/// Featurized molecular graph. Each undirected bond is stored once;
/// consumers expand to directed arcs.
#[derive(Debug, Clone, PartialEq)]
pub struct MolGraph<S: Scalar = f64> {
    /// `num_atoms x NODE_FEATURES`
    pub node_features: Tensor2<S>,
    /// Undirected edges as node-index pairs, one per bond.
    pub edges: Vec<(usize, usize)>,
    /// `num_bonds x EDGE_FEATURES`
    pub edge_features: Tensor2<S>,
}

impl<S: Scalar> MolGraph<S> {
    pub fn num_nodes(&self) -> usize {
        self.node_features.nrows()
    }

    pub fn num_edges(&self) -> usize {
        self.edges.len()
    }

    /// Node feature width n_i.
    pub fn n_i(&self) -> usize {
        self.node_features.ncols()
    }

    /// Edge feature width e_i.
    pub fn e_i(&self) -> usize {
        self.edge_features.ncols()
    }
}

/// Builds the feature row for one atom.
pub fn atom_features<S: Scalar>(m: &Molecule, atom_index: usize) -> Vec<S> {
    let atom = &m.atoms[atom_index];
    let mut row = Vec::with_capacity(NODE_FEATURES);

    let elem_slot = ELEMENT_VOCAB
        .iter()
        .position(|&e| e == atom.symbol)
        .unwrap_or(ELEMENT_VOCAB.len());
    one_hot(&mut row, elem_slot, ELEMENT_VOCAB.len() + 1);

    one_hot(&mut row, (atom.degree as usize).min(5), 6);

    let charge_slot = (atom.formal_charge.clamp(-2, 2) + 2) as usize;
    one_hot(&mut row, charge_slot, 5);

    let chiral_slot = match atom.chiral {
        ChiralTag::None => 0,
        ChiralTag::Ccw => 1,
        ChiralTag::Cw => 2,
    };
    one_hot(&mut row, chiral_slot, 3);

    one_hot(&mut row, (atom.total_h() as usize).min(4), 5);

    let hyb_slot = match atom.hybridization {
        Hybridization::Sp => 0,
        Hybridization::Sp2 => 1,
        Hybridization::Sp3 => 2,
        Hybridization::Other => 3,
    };
    one_hot(&mut row, hyb_slot, 4);

    row.push(if atom.aromatic { S::one() } else { S::zero() });
    row.push(S::from_f64(atomic_mass(&atom.symbol) / 100.0).unwrap());

    debug_assert_eq!(row.len(), NODE_FEATURES);
    row
}

/// Builds the feature row for one bond.
pub fn bond_features<S: Scalar>(m: &Molecule, bond_index: usize) -> Vec<S> {
    let bond = &m.bonds[bond_index];
    let mut row = Vec::with_capacity(EDGE_FEATURES);

    let order_slot = match bond.order {
        BondOrder::Single => 0,
        BondOrder::Double => 1,
        BondOrder::Triple => 2,
        BondOrder::Aromatic => 3,
    };
    one_hot(&mut row, order_slot, 4);

    row.push(if bond.conjugated { S::one() } else { S::zero() });
    row.push(if bond.in_ring { S::one() } else { S::zero() });

    let stereo_slot = match bond.stereo {
        BondStereo::None => 0,
        BondStereo::Cis => 1,
        BondStereo::Trans => 2,
    };
    one_hot(&mut row, stereo_slot, 3);

    debug_assert_eq!(row.len(), EDGE_FEATURES);
    row
}

/// Converts a perceived molecule into a featurized graph.
pub fn featurize<S: Scalar>(m: &Molecule) -> Result<MolGraph<S>, FeaturizeError> {
    let n = m.num_atoms();
    if n == 0 {
        return Err(FeaturizeError::EmptyMolecule);
    }
    let mut node_features = Tensor2::<S>::zeros((n, NODE_FEATURES));
    for i in 0..n {
        let row = atom_features::<S>(m, i);
        node_features.row_mut(i).assign(&ndarray::aview1(&row));
    }
    let mut edge_features = Tensor2::<S>::zeros((m.num_bonds(), EDGE_FEATURES));
    let mut edges = Vec::with_capacity(m.num_bonds());
    for (bi, bond) in m.bonds.iter().enumerate() {
        let row = bond_features::<S>(m, bi);
        edge_features.row_mut(bi).assign(&ndarray::aview1(&row));
        edges.push((bond.a, bond.b));
    }
    Ok(MolGraph {
        node_features,
        edges,
        edge_features,
    })
}

fn one_hot<S: Scalar>(row: &mut Vec<S>, slot: usize, width: usize) {
    for i in 0..width {
        row.push(if i == slot { S::one() } else { S::zero() });
    }
}

/// Standard atomic weight; 0.0 for elements outside the table.
pub fn atomic_mass(symbol: &str) -> f64 {
    match symbol {
        "H" => 1.00794,
        "B" => 10.811,
        "C" => 12.011,
        "N" => 14.0067,
        "O" => 15.9994,
        "F" => 18.9984032,
        "Na" => 22.98977,
        "Mg" => 24.305,
        "Al" => 26.981538,
        "Si" => 28.0855,
        "P" => 30.973761,
        "S" => 32.065,
        "Cl" => 35.453,
        "K" => 39.0983,
        "Ca" => 40.078,
        "Ti" => 47.867,
        "Cr" => 51.9961,
        "Mn" => 54.938049,
        "Fe" => 55.845,
        "Co" => 58.9332,
        "Ni" => 58.6934,
        "Cu" => 63.546,
        "Zn" => 65.409,
        "Ga" => 69.723,
        "Ge" => 72.64,
        "As" => 74.9216,
        "Se" => 78.96,
        "Br" => 79.904,
        "Sr" => 87.62,
        "Zr" => 91.224,
        "Mo" => 95.94,
        "Pd" => 106.42,
        "Ag" => 107.8682,
        "Cd" => 112.411,
        "In" => 114.818,
        "Sn" => 118.71,
        "Sb" => 121.76,
        "I" => 126.90447,
        "Ba" => 137.327,
        "Gd" => 157.25,
        "Pt" => 195.078,
        "Au" => 196.96655,
        "Hg" => 200.59,
        "Pb" => 207.2,
        "Bi" => 208.98038,
        "Li" => 6.941,
        "Be" => 9.012182,
        _ => 0.0,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::smiles::parse_smiles;

    fn featurize64(smiles: &str) -> MolGraph<f64> {
        featurize(&parse_smiles(smiles).unwrap()).unwrap()
    }

    /// Checks every declared one-hot segment sums to exactly 1.
    fn assert_one_hot_valid(g: &MolGraph<f64>) {
        const NODE_SEGMENTS: [(usize, usize); 6] =
            [(0, 12), (12, 6), (18, 5), (23, 3), (26, 5), (31, 4)];
        for row in g.node_features.rows() {
            for (start, width) in NODE_SEGMENTS {
                let sum: f64 = row.slice(ndarray::s![start..start + width]).sum();
                assert_eq!(sum, 1.0);
            }
            assert!(row[35] == 0.0 || row[35] == 1.0);
            assert!(row[36] >= 0.0);
        }
        const EDGE_SEGMENTS: [(usize, usize); 2] = [(0, 4), (6, 3)];
        for row in g.edge_features.rows() {
            for (start, width) in EDGE_SEGMENTS {
                let sum: f64 = row.slice(ndarray::s![start..start + width]).sum();
                assert_eq!(sum, 1.0);
            }
            for flag in [row[4], row[5]] {
                assert!(flag == 0.0 || flag == 1.0);
            }
        }
    }

    #[test]
    fn methane_atom_row() {
        let g = featurize64("C");
        assert_eq!(g.node_features.shape(), &[1, 37]);
        let row = g.node_features.row(0);
        assert_eq!(row[1], 1.0); // element C
        assert_eq!(row[12], 1.0); // degree 0
        assert_eq!(row[20], 1.0); // charge 0
        assert_eq!(row[23], 1.0); // chiral none
        assert_eq!(row[30], 1.0); // 4 hydrogens
        assert_eq!(row[33], 1.0); // sp3
        assert_eq!(row[35], 0.0); // not aromatic
        assert!((row[36] - 0.12011).abs() < 1e-12);
        assert_one_hot_valid(&g);
    }

    #[test]
    fn benzene_carbon_row() {
        let g = featurize64("c1ccccc1");
        let row = g.node_features.row(0);
        assert_eq!(row[12 + 2], 1.0); // degree 2
        assert_eq!(row[26 + 1], 1.0); // one hydrogen
        assert_eq!(row[31 + 1], 1.0); // sp2
        assert_eq!(row[35], 1.0); // aromatic
        assert_one_hot_valid(&g);
    }

    #[test]
    fn ethanol_oxygen_row() {
        let g = featurize64("CCO");
        assert_eq!(g.node_features.shape(), &[3, 37]);
        assert_eq!(g.edge_features.shape(), &[2, 9]);
        let row = g.node_features.row(2);
        assert_eq!(row[3], 1.0); // element O
        assert_eq!(row[12 + 1], 1.0); // degree 1
        assert_eq!(row[26 + 1], 1.0); // one hydrogen
        assert!((row[36] - 0.159994).abs() < 1e-12);
    }

    #[test]
    fn bond_rows() {
        let g = featurize64("CCO");
        let row = g.edge_features.row(0);
        assert_eq!(row[0], 1.0); // single
        assert_eq!(row[4], 0.0);
        assert_eq!(row[5], 0.0);
        assert_eq!(row[6], 1.0); // stereo none

        let g = featurize64("c1ccccc1");
        let row = g.edge_features.row(0);
        assert_eq!(row[3], 1.0); // aromatic
        assert_eq!(row[4], 1.0); // conjugated
        assert_eq!(row[5], 1.0); // in ring

        let g = featurize64("C/C=C/C");
        let double = g
            .edge_features
            .rows()
            .into_iter()
            .find(|r| r[1] == 1.0)
            .unwrap();
        assert_eq!(double[6 + 2], 1.0); // trans
    }

    #[test]
    fn charge_clamps_to_nearest_end() {
        let g = featurize64("[N+3]");
        let row = g.node_features.row(0);
        assert_eq!(row[18 + 4], 1.0); // +3 clamps to +2 slot
    }

    #[test]
    fn out_of_vocab_element_maps_to_other() {
        let g = featurize64("C[Se]C");
        let row = g.node_features.row(1);
        assert_eq!(row[11], 1.0); // "other" slot
        assert!((row[36] - 0.7896).abs() < 1e-12);
    }

    #[test]
    fn single_atom_molecule_has_no_edges() {
        let g = featurize64("[Na+]");
        assert_eq!(g.num_nodes(), 1);
        assert_eq!(g.num_edges(), 0);
        assert_eq!(g.edge_features.shape(), &[0, 9]);
    }

    #[test]
    fn permutation_equivariance() {
        // parse the same molecule written from two different starting atoms;
        // the multiset of node-feature rows must match
        let a = featurize64("OCC");
        let b = featurize64("CCO");
        let mut rows_a: Vec<Vec<u64>> = a
            .node_features
            .rows()
            .into_iter()
            .map(|r| r.iter().map(|x| x.to_bits()).collect())
            .collect();
        let mut rows_b: Vec<Vec<u64>> = b
            .node_features
            .rows()
            .into_iter()
            .map(|r| r.iter().map(|x| x.to_bits()).collect())
            .collect();
        rows_a.sort();
        rows_b.sort();
        assert_eq!(rows_a, rows_b);
    }

    #[test]
    fn fig4_node_count_matches_parser() {
        let m = parse_smiles(
            "CCc1c2c(nc3ccc(OC(=O)N4CCC(N5CCCCC5)CC4)cc13)-c1cc3c(c(=O)n1C2)COC(=O)[C@]3(O)CC",
        )
        .unwrap();
        assert_eq!(m.num_atoms(), 43);
        let g: MolGraph<f64> = featurize(&m).unwrap();
        assert_eq!(g.num_nodes(), 43);
        assert_one_hot_valid(&g);
    }
}
