//! Node-centric message passing.
//!
//! States start at `h_v = W_i x_v`. Each step sums `cat(h_w, e_wv)` over
//! the neighbors of `v` and updates `h_v <- relu(h_v0 + W_m m_v)`. After T
//! steps the node representation is `relu(W_o cat(x_v, sum_w h_w))`.

use super::GraphBatch;
use crate::nn::scalar::Scalar;
use crate::nn::tape::{NnError, Tape, Var};

#[allow(clippy::too_many_arguments)]
pub(super) fn node_states<S: Scalar>(
    tape: &mut Tape<S>,
    batch: &GraphBatch<S>,
    x: Var,
    e: Var,
    w_i: Var,
    w_m: Var,
    w_o: Var,
    steps: usize,
) -> Result<Var, NnError> {
    let n = batch.num_nodes();
    let h0 = tape.matmul_t(x, w_i)?;
    let mut h = h0;
    for _ in 0..steps {
        let h_src = tape.row_select(h, batch.arc_src.clone())?;
        let messages = tape.concat_cols(h_src, e)?;
        let m = tape.segment_sum(messages, batch.arc_dst.clone(), n)?;
        let update = tape.matmul_t(m, w_m)?;
        let pre = tape.add(h0, update)?;
        h = tape.relu(pre)?;
    }
    // final neighborhood sum of hidden states
    let h_src = tape.row_select(h, batch.arc_src.clone())?;
    let m_v = tape.segment_sum(h_src, batch.arc_dst.clone(), n)?;
    let cat = tape.concat_cols(x, m_v)?;
    let out = tape.matmul_t(cat, w_o)?;
    tape.relu(out)
}
