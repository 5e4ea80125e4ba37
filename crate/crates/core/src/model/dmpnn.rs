//! Directed-edge message passing with totter exclusion.
//!
//! Arc states start at `h_vw = relu(W_i cat(x_v, e_vw))`. Each step feeds
//! arc `(v,w)` the incoming arc states at `v` excluding its own reverse:
//! `m_vw = sum_{k in N(v) \ w} h_kv`, then `h_vw <- relu(h_vw0 + W_m m_vw)`.
//! Node states sum the final outgoing arc states and finish with
//! `relu(W_o cat(x_v, m_v))`.

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
    let x_src = tape.row_select(x, batch.arc_src.clone())?;
    let init = tape.concat_cols(x_src, e)?;
    let pre0 = tape.matmul_t(init, w_i)?;
    let h0 = tape.relu(pre0)?;

    let mut h = h0;
    for _ in 0..steps {
        // incoming arc states at each arc's source, its own reverse
        // excluded; the excluded arc is never read, so the message is
        // exactly independent of it
        let m = tape.arc_messages(
            h,
            batch.arc_src.clone(),
            batch.arc_dst.clone(),
            batch.arc_rev.clone(),
            n,
        )?;
        let update = tape.matmul_t(m, w_m)?;
        let pre = tape.add(h0, update)?;
        h = tape.relu(pre)?;
    }

    let m_v = tape.segment_sum(h, batch.arc_src.clone(), n)?;
    let cat = tape.concat_cols(x, m_v)?;
    let out = tape.matmul_t(cat, w_o)?;
    tape.relu(out)
}
