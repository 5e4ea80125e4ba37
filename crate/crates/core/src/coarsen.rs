//! Quotient-graph coarsening driven by functional groups.
//!
//! Steps: find the cut edges (edges touching a functional group that do not
//! stay inside it), partition nodes by the connected components left after
//! deleting them, then contract each block to one node. Contraction runs in
//! two stages — carbon chains first with mean aggregation, functional
//! groups second with sum aggregation — and the result is structurally
//! identical to contracting the full partition in one step.

use crate::featurize::MolGraph;
use crate::fg::{self, FunctionalGroup};
use crate::nn::scalar::Scalar;
use crate::nn::Tensor2;
use crate::smiles::Molecule;
use std::collections::{BTreeMap, BTreeSet};
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum CoarsenError {
    #[error("functional groups overlap at atom {atom}")]
    OverlappingFgs { atom: usize },
    #[error("functional group {index} is not a connected component of the cut graph")]
    FgNotComponent { index: usize },
    #[error("edge ({0}, {1}) is out of range")]
    BadEdge(usize, usize),
    #[error("abstraction ratio of an empty dataset is undefined")]
    EmptyDataset,
    #[error(transparent)]
    Featurize(#[from] crate::featurize::FeaturizeError),
}

/// Block flavor in a [`PartitionSet`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BlockKind {
    /// Equals the atom set of exactly one functional group.
    Fg,
    /// A connected carbon remainder.
    NonFg,
}

/// Disjoint, nonempty node sets covering the graph, ordered by smallest
/// member index; members sorted ascending.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PartitionSet {
    pub blocks: Vec<Vec<usize>>,
    pub kinds: Vec<BlockKind>,
}

impl PartitionSet {
    pub fn num_blocks(&self) -> usize {
        self.blocks.len()
    }

    /// Maps each node to its block index; errors are a caller bug, so this
    /// asserts the partition property.
    pub fn block_of(&self, num_nodes: usize) -> Vec<usize> {
        let mut owner = vec![usize::MAX; num_nodes];
        for (bi, block) in self.blocks.iter().enumerate() {
            for &v in block {
                assert!(v < num_nodes, "partition node {v} out of range");
                assert!(owner[v] == usize::MAX, "node {v} in two blocks");
                owner[v] = bi;
            }
        }
        assert!(
            owner.iter().all(|&b| b != usize::MAX),
            "partition does not cover all nodes"
        );
        owner
    }
}

/// Feature aggregation for contracted nodes and edges.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Aggregation {
    Sum,
    Mean,
}

/// Coarsened graph with aggregated features and provenance back to the
/// graph it was contracted from.
#[derive(Debug, Clone, PartialEq)]
pub struct QuotientGraph<S: Scalar = f64> {
    /// `num_blocks x n_i`
    pub node_features: Tensor2<S>,
    /// Unordered block-index pairs, stored `(lo, hi)`, sorted.
    pub edges: Vec<(usize, usize)>,
    /// `num_qedges x e_i`
    pub edge_features: Tensor2<S>,
    /// Original node indices contracted into each quotient node.
    pub node_provenance: Vec<Vec<usize>>,
    /// Original edges contracted into each quotient edge.
    pub edge_provenance: Vec<Vec<(usize, usize)>>,
}

impl<S: Scalar> QuotientGraph<S> {
    pub fn num_nodes(&self) -> usize {
        self.node_features.nrows()
    }

    pub fn num_edges(&self) -> usize {
        self.edges.len()
    }

    /// Structural (not feature) equality: same contracted node sets and
    /// the same edges over them.
    pub fn same_structure(&self, other: &QuotientGraph<S>) -> bool {
        self.node_provenance == other.node_provenance && self.edges == other.edges
    }
}

/// Edges with at least one endpoint in a functional group whose endpoints
/// do not share a group. Returned normalized as `(lo, hi)`.
pub fn compute_cut_edges<S: Scalar>(
    g: &MolGraph<S>,
    fgs: &[FunctionalGroup],
) -> Result<BTreeSet<(usize, usize)>, CoarsenError> {
    let fg_of = fg_membership(g.num_nodes(), fgs)?;
    let mut cut = BTreeSet::new();
    for &(u, v) in &g.edges {
        if u >= g.num_nodes() || v >= g.num_nodes() {
            return Err(CoarsenError::BadEdge(u, v));
        }
        let fu = fg_of[u];
        let fv = fg_of[v];
        let touches_fg = fu.is_some() || fv.is_some();
        if touches_fg && fu != fv {
            cut.insert((u.min(v), u.max(v)));
        }
    }
    Ok(cut)
}

fn fg_membership(
    num_nodes: usize,
    fgs: &[FunctionalGroup],
) -> Result<Vec<Option<usize>>, CoarsenError> {
    let mut fg_of = vec![None; num_nodes];
    for (gi, group) in fgs.iter().enumerate() {
        for &a in &group.atom_indices {
            if a >= num_nodes {
                return Err(CoarsenError::BadEdge(a, a));
            }
            if fg_of[a].is_some() {
                return Err(CoarsenError::OverlappingFgs { atom: a });
            }
            fg_of[a] = Some(gi);
        }
    }
    Ok(fg_of)
}

/// Connected components of the graph with the cut edges removed. Each
/// functional group must come back as exactly one component (flagged
/// [`BlockKind::Fg`]); anything else indicates a cut-rule bug and fails
/// loudly.
pub fn components_partition<S: Scalar>(
    g: &MolGraph<S>,
    cut: &BTreeSet<(usize, usize)>,
    fgs: &[FunctionalGroup],
) -> Result<PartitionSet, CoarsenError> {
    let n = g.num_nodes();
    let fg_of = fg_membership(n, fgs)?;

    let mut adjacency = vec![Vec::new(); n];
    for &(u, v) in &g.edges {
        if !cut.contains(&(u.min(v), u.max(v))) {
            adjacency[u].push(v);
            adjacency[v].push(u);
        }
    }

    let mut component = vec![usize::MAX; n];
    let mut blocks: Vec<Vec<usize>> = Vec::new();
    for start in 0..n {
        if component[start] != usize::MAX {
            continue;
        }
        let id = blocks.len();
        let mut members = vec![start];
        component[start] = id;
        let mut frontier = vec![start];
        while let Some(u) = frontier.pop() {
            for &v in &adjacency[u] {
                if component[v] == usize::MAX {
                    component[v] = id;
                    members.push(v);
                    frontier.push(v);
                }
            }
        }
        members.sort_unstable();
        blocks.push(members);
    }
    // deterministic order: by smallest contained original index
    blocks.sort_by_key(|b| b[0]);

    let mut kinds = Vec::with_capacity(blocks.len());
    let mut fg_seen = vec![false; fgs.len()];
    for block in &blocks {
        match fg_of[block[0]] {
            Some(gi) => {
                if fgs[gi].atom_indices != *block {
                    return Err(CoarsenError::FgNotComponent { index: gi });
                }
                fg_seen[gi] = true;
                kinds.push(BlockKind::Fg);
            }
            None => {
                if let Some(gi) = block.iter().find_map(|&v| fg_of[v]) {
                    return Err(CoarsenError::FgNotComponent { index: gi });
                }
                kinds.push(BlockKind::NonFg);
            }
        }
    }
    if let Some(missing) = fg_seen.iter().position(|&s| !s) {
        return Err(CoarsenError::FgNotComponent { index: missing });
    }

    Ok(PartitionSet { blocks, kinds })
}

/// Contracts each block of `p` to one node. Quotient nodes aggregate their
/// members' feature rows with `node_agg`; each quotient edge aggregates the
/// feature rows of exactly the original edges spanning its block pair with
/// `edge_agg`. Self-loops never arise (intra-block edges are dropped).
pub fn quotient<S: Scalar>(
    g: &MolGraph<S>,
    p: &PartitionSet,
    node_agg: Aggregation,
    edge_agg: Aggregation,
) -> QuotientGraph<S> {
    let owner = p.block_of(g.num_nodes());
    let width = g.node_features.ncols();
    let mut node_features = Tensor2::<S>::zeros((p.num_blocks(), width));
    for (bi, block) in p.blocks.iter().enumerate() {
        let mut acc = ndarray::Array1::<S>::zeros(width);
        for &v in block {
            acc += &g.node_features.row(v);
        }
        if node_agg == Aggregation::Mean {
            let inv = S::one() / S::from_usize(block.len()).unwrap();
            acc.mapv_inplace(|x| x * inv);
        }
        node_features.row_mut(bi).assign(&acc);
    }

    // group spanning edges by their unordered block pair
    let mut spans: BTreeMap<(usize, usize), Vec<usize>> = BTreeMap::new();
    for (ei, &(u, v)) in g.edges.iter().enumerate() {
        let (bu, bv) = (owner[u], owner[v]);
        if bu == bv {
            continue;
        }
        spans.entry((bu.min(bv), bu.max(bv))).or_default().push(ei);
    }

    let ewidth = g.edge_features.ncols();
    let mut edges = Vec::with_capacity(spans.len());
    let mut edge_features = Tensor2::<S>::zeros((spans.len(), ewidth));
    let mut edge_provenance = Vec::with_capacity(spans.len());
    for (qi, (&pair, members)) in spans.iter().enumerate() {
        let mut acc = ndarray::Array1::<S>::zeros(ewidth);
        for &ei in members {
            acc += &g.edge_features.row(ei);
        }
        if edge_agg == Aggregation::Mean {
            let inv = S::one() / S::from_usize(members.len()).unwrap();
            acc.mapv_inplace(|x| x * inv);
        }
        edges.push(pair);
        edge_features.row_mut(qi).assign(&acc);
        edge_provenance.push(members.iter().map(|&ei| g.edges[ei]).collect());
    }

    QuotientGraph {
        node_features,
        edges,
        edge_features,
        node_provenance: p.blocks.clone(),
        edge_provenance,
    }
}

/// Two-stage contraction of a featurized graph given its functional
/// groups: stage (a) contracts the carbon-chain blocks (functional-group
/// atoms stay as singletons) with `stage_a` aggregation, stage (b)
/// contracts the functional groups with `stage_b` aggregation. Provenance
/// in the result refers to the original graph.
pub fn funqg_two_stage<S: Scalar>(
    g: &MolGraph<S>,
    fgs: &[FunctionalGroup],
    stage_a: Aggregation,
    stage_b: Aggregation,
) -> Result<QuotientGraph<S>, CoarsenError> {
    let cut = compute_cut_edges(g, fgs)?;
    let partition = components_partition(g, &cut, fgs)?;

    // stage (a): non-FG blocks plus singletons of every FG atom
    let mut stage_a_parts: Vec<(Vec<usize>, BlockKind)> = Vec::new();
    for (block, kind) in partition.blocks.iter().zip(&partition.kinds) {
        match kind {
            BlockKind::NonFg => stage_a_parts.push((block.clone(), BlockKind::NonFg)),
            BlockKind::Fg => {
                stage_a_parts.extend(block.iter().map(|&v| (vec![v], BlockKind::Fg)))
            }
        }
    }
    stage_a_parts.sort_by_key(|(b, _)| b[0]);
    let (blocks_a, kinds_a) = stage_a_parts.into_iter().unzip();
    let p_a = PartitionSet {
        blocks: blocks_a,
        kinds: kinds_a,
    };
    let qa = quotient(g, &p_a, stage_a, stage_a);

    // stage (b): group the stage-(a) nodes holding FG atoms back into their
    // functional groups; everything else stays a singleton
    let mut atom_to_qa = BTreeMap::new();
    for (qi, prov) in qa.node_provenance.iter().enumerate() {
        for &v in prov {
            atom_to_qa.insert(v, qi);
        }
    }
    let mut stage_b_blocks: Vec<Vec<usize>> = Vec::new();
    let mut stage_b_kinds = Vec::new();
    let mut in_fg_block = vec![false; qa.num_nodes()];
    for (block, kind) in partition.blocks.iter().zip(&partition.kinds) {
        if *kind == BlockKind::Fg {
            let mut qnodes: Vec<usize> = block.iter().map(|&v| atom_to_qa[&v]).collect();
            qnodes.sort_unstable();
            for &q in &qnodes {
                in_fg_block[q] = true;
            }
            stage_b_blocks.push(qnodes);
            stage_b_kinds.push(BlockKind::Fg);
        }
    }
    for (qi, covered) in in_fg_block.iter().enumerate() {
        if !covered {
            stage_b_blocks.push(vec![qi]);
            stage_b_kinds.push(BlockKind::NonFg);
        }
    }
    let order: Vec<usize> = {
        let mut idx: Vec<usize> = (0..stage_b_blocks.len()).collect();
        idx.sort_by_key(|&i| stage_b_blocks[i][0]);
        idx
    };
    let p_b = PartitionSet {
        blocks: order.iter().map(|&i| stage_b_blocks[i].clone()).collect(),
        kinds: order.iter().map(|&i| stage_b_kinds[i]).collect(),
    };
    let qb = quotient_of_quotient(&qa, &p_b, stage_b, stage_b);
    Ok(qb)
}

/// Contracts an already-contracted graph, composing provenance so the
/// result still refers to original atoms and edges.
fn quotient_of_quotient<S: Scalar>(
    qa: &QuotientGraph<S>,
    p: &PartitionSet,
    node_agg: Aggregation,
    edge_agg: Aggregation,
) -> QuotientGraph<S> {
    let as_graph = MolGraph {
        node_features: qa.node_features.clone(),
        edges: qa.edges.clone(),
        edge_features: qa.edge_features.clone(),
    };
    let mut out = quotient(&as_graph, p, node_agg, edge_agg);
    // compose node provenance
    out.node_provenance = out
        .node_provenance
        .iter()
        .map(|qa_nodes| {
            let mut atoms: Vec<usize> = qa_nodes
                .iter()
                .flat_map(|&q| qa.node_provenance[q].iter().copied())
                .collect();
            atoms.sort_unstable();
            atoms
        })
        .collect();
    // compose edge provenance: stage-(b) members are stage-(a) edges
    out.edge_provenance = out
        .edge_provenance
        .iter()
        .map(|qa_edges| {
            let mut orig: Vec<(usize, usize)> = qa_edges
                .iter()
                .flat_map(|&(u, v)| {
                    let pos = qa
                        .edges
                        .iter()
                        .position(|&e| e == (u, v))
                        .expect("stage-(a) edge missing");
                    qa.edge_provenance[pos].iter().copied()
                })
                .collect();
            orig.sort_unstable();
            orig
        })
        .collect();
    out
}

/// The full coarsening pipeline for one molecule: featurize, detect
/// functional groups, then contract with mean aggregation over carbon
/// chains and sum aggregation over functional groups.
pub fn funqg<S: Scalar>(m: &Molecule) -> Result<QuotientGraph<S>, CoarsenError> {
    let g = crate::featurize::featurize::<S>(m)?;
    let fgs = fg::detect(m);
    funqg_two_stage(&g, &fgs, Aggregation::Mean, Aggregation::Sum)
}

/// One-step contraction by the full partition; the independent reference
/// route for the two-stage implementation.
pub fn funqg_one_step<S: Scalar>(
    g: &MolGraph<S>,
    fgs: &[FunctionalGroup],
    node_agg: Aggregation,
    edge_agg: Aggregation,
) -> Result<QuotientGraph<S>, CoarsenError> {
    let cut = compute_cut_edges(g, fgs)?;
    let partition = components_partition(g, &cut, fgs)?;
    Ok(quotient(g, &partition, node_agg, edge_agg))
}

/// Total quotient nodes divided by total molecular-graph nodes.
pub fn abstraction_ratio<S: Scalar>(
    dataset: &[(&MolGraph<S>, &QuotientGraph<S>)],
) -> Result<f64, CoarsenError> {
    let pairs: Vec<(usize, usize)> = dataset
        .iter()
        .map(|(g, q)| (g.num_nodes(), q.num_nodes()))
        .collect();
    abstraction_ratio_counts(&pairs)
}

/// Same ratio from precomputed `(molecular_nodes, quotient_nodes)` counts.
pub fn abstraction_ratio_counts(pairs: &[(usize, usize)]) -> Result<f64, CoarsenError> {
    if pairs.is_empty() {
        return Err(CoarsenError::EmptyDataset);
    }
    let (mol, quot) = pairs.iter().fold((0usize, 0usize), |(m, q), &(gm, gq)| {
        (m + gm, q + gq)
    });
    Ok(quot as f64 / mol as f64)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::featurize::featurize;
    use crate::smiles::parse_smiles;

    fn graph(smiles: &str) -> (Molecule, MolGraph<f64>) {
        let m = parse_smiles(smiles).unwrap();
        let g = featurize(&m).unwrap();
        (m, g)
    }

    #[test]
    fn ethanol_cut_edges() {
        let (m, g) = graph("CCO");
        let fgs = fg::detect(&m);
        let cut = compute_cut_edges(&g, &fgs).unwrap();
        assert_eq!(cut.into_iter().collect::<Vec<_>>(), vec![(1, 2)]);
    }

    #[test]
    fn acetic_acid_keeps_intra_fg_bonds() {
        let (m, g) = graph("CC(=O)O");
        let fgs = fg::detect(&m);
        let cut = compute_cut_edges(&g, &fgs).unwrap();
        assert_eq!(cut.into_iter().collect::<Vec<_>>(), vec![(0, 1)]);
    }

    #[test]
    fn adjacent_singleton_fgs_cut_their_shared_edge() {
        // hydroxylamine with artificially split groups: the N-O edge is cut
        let (_, g) = graph("NO");
        let fgs = vec![
            FunctionalGroup {
                atom_indices: vec![0],
            },
            FunctionalGroup {
                atom_indices: vec![1],
            },
        ];
        let cut = compute_cut_edges(&g, &fgs).unwrap();
        assert_eq!(cut.into_iter().collect::<Vec<_>>(), vec![(0, 1)]);
    }

    #[test]
    fn overlapping_fgs_rejected() {
        let (_, g) = graph("NO");
        let fgs = vec![
            FunctionalGroup {
                atom_indices: vec![0, 1],
            },
            FunctionalGroup {
                atom_indices: vec![1],
            },
        ];
        assert!(matches!(
            compute_cut_edges(&g, &fgs),
            Err(CoarsenError::OverlappingFgs { atom: 1 })
        ));
    }

    #[test]
    fn ethanol_partition() {
        let (m, g) = graph("CCO");
        let fgs = fg::detect(&m);
        let cut = compute_cut_edges(&g, &fgs).unwrap();
        let p = components_partition(&g, &cut, &fgs).unwrap();
        assert_eq!(p.blocks, vec![vec![0, 1], vec![2]]);
        assert_eq!(p.kinds, vec![BlockKind::NonFg, BlockKind::Fg]);
    }

    #[test]
    fn hexane_single_block() {
        let (m, g) = graph("CCCCCC");
        let fgs = fg::detect(&m);
        let cut = compute_cut_edges(&g, &fgs).unwrap();
        assert!(cut.is_empty());
        let p = components_partition(&g, &cut, &fgs).unwrap();
        assert_eq!(p.num_blocks(), 1);
        assert_eq!(p.blocks[0], (0..6).collect::<Vec<_>>());
    }

    #[test]
    fn bad_fg_fails_loudly() {
        // an FG that is not closed under the remaining edges: {C, O} of
        // ethanol's C-O pair split across blocks
        let (_, g) = graph("CCO");
        let fgs = vec![FunctionalGroup {
            atom_indices: vec![0, 2],
        }];
        let cut = compute_cut_edges(&g, &fgs).unwrap();
        assert!(matches!(
            components_partition(&g, &cut, &fgs),
            Err(CoarsenError::FgNotComponent { .. })
        ));
    }

    #[test]
    fn singleton_partition_is_identity() {
        let (_, g) = graph("CC(=O)O");
        let p = PartitionSet {
            blocks: (0..4).map(|i| vec![i]).collect(),
            kinds: vec![BlockKind::NonFg; 4],
        };
        let q = quotient(&g, &p, Aggregation::Sum, Aggregation::Sum);
        assert_eq!(q.num_nodes(), 4);
        assert_eq!(q.num_edges(), g.num_edges());
        assert_eq!(q.node_features, g.node_features);
        let mut orig: Vec<(usize, usize)> = g
            .edges
            .iter()
            .map(|&(u, v)| (u.min(v), u.max(v)))
            .collect();
        orig.sort_unstable();
        assert_eq!(q.edges, orig);
    }

    #[test]
    fn ethanol_quotient_sum_features() {
        let (m, g) = graph("CCO");
        let fgs = fg::detect(&m);
        let q = funqg_one_step(&g, &fgs, Aggregation::Sum, Aggregation::Sum).unwrap();
        assert_eq!(q.num_nodes(), 2);
        assert_eq!(q.num_edges(), 1);
        let expected_chain = &g.node_features.row(0) + &g.node_features.row(1);
        assert_eq!(q.node_features.row(0), expected_chain);
        assert_eq!(q.node_features.row(1), g.node_features.row(2));
    }

    #[test]
    fn ethanol_two_stage_mean_sum() {
        let (m, _) = graph("CCO");
        let q: QuotientGraph<f64> = funqg(&m).unwrap();
        assert_eq!(q.num_nodes(), 2);
        assert_eq!(q.num_edges(), 1);
        let (_, g) = graph("CCO");
        let expected_chain = (&g.node_features.row(0) + &g.node_features.row(1)) / 2.0;
        assert_eq!(q.node_features.row(0), expected_chain);
        // FG node: sum over the singleton = the row itself
        assert_eq!(q.node_features.row(1), g.node_features.row(2));
    }

    #[test]
    fn two_stage_equals_one_step_structure() {
        for smiles in [
            "CCO",
            "CC(=O)O",
            "CC(=O)Nc1ccc(O)cc1",
            "Cc1cc(N)c2ccccc2[n+]1CCCCCCCCCC[n+]1c(C)cc(N)c2ccccc21",
            "CCc1c2c(nc3ccc(OC(=O)N4CCC(N5CCCCC5)CC4)cc13)-c1cc3c(c(=O)n1C2)COC(=O)[C@]3(O)CC",
        ] {
            let (m, g) = graph(smiles);
            let fgs = fg::detect(&m);
            let two = funqg_two_stage(&g, &fgs, Aggregation::Mean, Aggregation::Sum).unwrap();
            let one = funqg_one_step(&g, &fgs, Aggregation::Mean, Aggregation::Sum).unwrap();
            assert!(two.same_structure(&one), "{smiles}: structures differ");
        }
    }

    #[test]
    fn fig3_molecule_counts() {
        // quotient node count from the independent one-step route; stage (b)
        // changes nothing structurally because all groups are single atoms
        let (m, g) = graph("Cc1cc(N)c2ccccc2[n+]1CCCCCCCCCC[n+]1c(C)cc(N)c2ccccc21");
        let fgs = fg::detect(&m);
        let one = funqg_one_step(&g, &fgs, Aggregation::Mean, Aggregation::Sum).unwrap();
        assert_eq!(one.num_nodes(), 7);
        let qa_only = funqg_two_stage(&g, &fgs, Aggregation::Mean, Aggregation::Sum).unwrap();
        assert!(qa_only.same_structure(&one));
    }

    #[test]
    fn fig4_molecule_counts() {
        let (m, g) = graph(
            "CCc1c2c(nc3ccc(OC(=O)N4CCC(N5CCCCC5)CC4)cc13)-c1cc3c(c(=O)n1C2)COC(=O)[C@]3(O)CC",
        );
        let fgs = fg::detect(&m);
        let one = funqg_one_step(&g, &fgs, Aggregation::Mean, Aggregation::Sum).unwrap();
        assert_eq!(one.num_nodes(), 9);
        let two = funqg_two_stage(&g, &fgs, Aggregation::Mean, Aggregation::Sum).unwrap();
        assert!(two.same_structure(&one));
    }

    #[test]
    fn sum_sum_conserves_node_feature_total() {
        for smiles in ["CCO", "CC(=O)Nc1ccc(O)cc1", "CS(=O)(=O)C"] {
            let (m, g) = graph(smiles);
            let fgs = fg::detect(&m);
            let q = funqg_two_stage(&g, &fgs, Aggregation::Sum, Aggregation::Sum).unwrap();
            let total_g: f64 = g.node_features.sum();
            let total_q: f64 = q.node_features.sum();
            assert!(
                (total_g - total_q).abs() <= 1e-9 * total_g.abs().max(1.0),
                "{smiles}: {total_g} vs {total_q}"
            );
        }
    }

    #[test]
    fn abstraction_ratio_examples() {
        // single-atom molecules cannot contract
        assert_eq!(abstraction_ratio_counts(&[(1, 1), (1, 1)]).unwrap(), 1.0);
        // ethanol: 3 atoms -> 2 blocks
        let (m, g) = graph("CCO");
        let q: QuotientGraph<f64> = funqg(&m).unwrap();
        let ratio = abstraction_ratio(&[(&g, &q)]).unwrap();
        assert!((ratio - 2.0 / 3.0).abs() < 1e-15);
        assert!(matches!(
            abstraction_ratio_counts(&[]),
            Err(CoarsenError::EmptyDataset)
        ));
    }

    #[test]
    fn connectivity_preserved() {
        for smiles in ["CCO", "CC(=O)Nc1ccc(O)cc1", "OCC(O)CO"] {
            let (m, _) = graph(smiles);
            let q: QuotientGraph<f64> = funqg(&m).unwrap();
            // BFS over quotient edges reaches every node
            let n = q.num_nodes();
            let mut adj = vec![Vec::new(); n];
            for &(u, v) in &q.edges {
                assert_ne!(u, v, "{smiles}: self-loop");
                adj[u].push(v);
                adj[v].push(u);
            }
            let mut seen = vec![false; n];
            seen[0] = true;
            let mut frontier = vec![0];
            while let Some(u) = frontier.pop() {
                for &v in &adj[u] {
                    if !seen[v] {
                        seen[v] = true;
                        frontier.push(v);
                    }
                }
            }
            assert!(seen.iter().all(|&s| s), "{smiles}: quotient disconnected");
        }
    }
}
