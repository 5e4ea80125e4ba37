//! Batching graphs into one directed-arc structure.

use super::ModelError;
use crate::coarsen::QuotientGraph;
use crate::featurize::MolGraph;
use crate::nn::scalar::Scalar;
use crate::nn::Tensor2;

/// Borrowed view of any featurized graph (molecular or quotient).
#[derive(Debug, Clone, Copy)]
pub struct GraphRef<'a, S: Scalar> {
    pub node_features: &'a Tensor2<S>,
    pub edges: &'a [(usize, usize)],
    pub edge_features: &'a Tensor2<S>,
}

impl<'a, S: Scalar> From<&'a MolGraph<S>> for GraphRef<'a, S> {
    fn from(g: &'a MolGraph<S>) -> Self {
        GraphRef {
            node_features: &g.node_features,
            edges: &g.edges,
            edge_features: &g.edge_features,
        }
    }
}

impl<'a, S: Scalar> From<&'a QuotientGraph<S>> for GraphRef<'a, S> {
    fn from(g: &'a QuotientGraph<S>) -> Self {
        GraphRef {
            node_features: &g.node_features,
            edges: &g.edges,
            edge_features: &g.edge_features,
        }
    }
}

/// A batch of graphs with nodes concatenated and every undirected edge
/// expanded to two directed arcs. `arc_rev` maps each arc to its reverse;
/// arc features are duplicated from the undirected bond, so an arc and its
/// reverse always carry equal features.
#[derive(Debug, Clone)]
pub struct GraphBatch<S: Scalar = f64> {
    pub node_features: Tensor2<S>,
    pub arc_src: Vec<usize>,
    pub arc_dst: Vec<usize>,
    pub arc_rev: Vec<usize>,
    pub arc_features: Tensor2<S>,
    /// Graph id per node, contiguous from 0.
    pub graph_ids: Vec<usize>,
    pub num_graphs: usize,
}

impl<S: Scalar> GraphBatch<S> {
    pub fn num_nodes(&self) -> usize {
        self.node_features.nrows()
    }

    pub fn num_arcs(&self) -> usize {
        self.arc_src.len()
    }
}

/// Concatenates graphs into a single batch.
pub fn build_batch<S: Scalar>(graphs: &[GraphRef<'_, S>]) -> Result<GraphBatch<S>, ModelError> {
    if graphs.is_empty() {
        return Err(ModelError::EmptyBatch);
    }
    let n_i = graphs[0].node_features.ncols();
    let e_i = graphs[0].edge_features.ncols();
    let total_nodes: usize = graphs.iter().map(|g| g.node_features.nrows()).sum();
    let total_arcs: usize = graphs.iter().map(|g| g.edges.len() * 2).sum();

    let mut node_features = Tensor2::<S>::zeros((total_nodes, n_i));
    let mut arc_features = Tensor2::<S>::zeros((total_arcs, e_i));
    let mut arc_src = Vec::with_capacity(total_arcs);
    let mut arc_dst = Vec::with_capacity(total_arcs);
    let mut arc_rev = Vec::with_capacity(total_arcs);
    let mut graph_ids = Vec::with_capacity(total_nodes);

    let mut node_offset = 0usize;
    for (gid, g) in graphs.iter().enumerate() {
        let n = g.node_features.nrows();
        if n == 0 {
            return Err(ModelError::EmptyGraph { graph: gid });
        }
        if g.node_features.ncols() != n_i || g.edge_features.ncols() != e_i {
            return Err(ModelError::FeatureWidthMismatch { graph: gid });
        }
        node_features
            .slice_mut(ndarray::s![node_offset..node_offset + n, ..])
            .assign(g.node_features);
        graph_ids.extend(std::iter::repeat_n(gid, n));

        for (ei, &(u, v)) in g.edges.iter().enumerate() {
            if u >= n || v >= n || u == v {
                return Err(ModelError::BadEdge { graph: gid, u, v });
            }
            let a = arc_src.len();
            arc_src.push(node_offset + u);
            arc_dst.push(node_offset + v);
            arc_src.push(node_offset + v);
            arc_dst.push(node_offset + u);
            arc_rev.push(a + 1);
            arc_rev.push(a);
            arc_features
                .row_mut(a)
                .assign(&g.edge_features.row(ei));
            arc_features
                .row_mut(a + 1)
                .assign(&g.edge_features.row(ei));
        }
        node_offset += n;
    }

    Ok(GraphBatch {
        node_features,
        arc_src,
        arc_dst,
        arc_rev,
        arc_features,
        graph_ids,
        num_graphs: graphs.len(),
    })
}
