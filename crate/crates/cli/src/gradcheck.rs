//! Finite-difference verification suite, callable from the CLI and reused
//! by the acceptance tests.

use funqg_core::featurize::featurize;
use funqg_core::model::{
    build_batch, forward_eval, init_params, Architecture, GraphRef, ModelConfig, Readout,
};
use funqg_core::nn::gradcheck::{central_diff, max_rel_error};
use funqg_core::nn::{Tape, Tensor2};
use funqg_core::synth::random_molecule;
use funqg_core::{MolGraph, ParamStore};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const STEP: f64 = 1e-5;

/// One named check with its worst relative gradient error.
#[derive(Debug, Clone)]
pub struct CheckResult {
    pub name: String,
    pub max_rel_error: f64,
}

fn rand_matrix<R: Rng>(rows: usize, cols: usize, rng: &mut R) -> Tensor2<f64> {
    Tensor2::from_shape_fn((rows, cols), |_| rng.random::<f64>() * 2.0 - 1.0)
}

/// Gradient checks for every registered tape operation on random
/// instances. Each op feeds a masked-MSE scalar so its backward rule is
/// exercised in isolation.
pub fn op_suite(seed: u64) -> Vec<CheckResult> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut results = Vec::new();

    // every closure maps a leaf input to a scalar loss through one op
    type OpCase = (
        &'static str,
        (usize, usize),
        Box<dyn Fn(&mut Tape<f64>, funqg_core::nn::Var) -> funqg_core::nn::Var>,
    );

    let b_fixed = rand_matrix(4, 3, &mut rng);
    let bt_fixed = rand_matrix(3, 4, &mut rng);
    let add_fixed = rand_matrix(5, 4, &mut rng);
    let row_fixed = rand_matrix(1, 4, &mut rng);
    let cat_fixed = rand_matrix(5, 2, &mut rng);
    let mask_fixed = Tensor2::from_shape_fn((5, 4), |_| {
        if rng.random::<f64>() < 0.3 {
            0.0
        } else {
            2.0
        }
    });

    let cases: Vec<OpCase> = vec![
        (
            "matmul",
            (5, 4),
            Box::new(move |t, x| {
                let b = t.constant(b_fixed.clone()).unwrap();
                t.matmul(x, b).unwrap()
            }),
        ),
        (
            "matmul_t",
            (5, 4),
            Box::new(move |t, x| {
                let b = t.constant(bt_fixed.clone()).unwrap();
                t.matmul_t(x, b).unwrap()
            }),
        ),
        (
            "add",
            (5, 4),
            Box::new(move |t, x| {
                let b = t.constant(add_fixed.clone()).unwrap();
                t.add(x, b).unwrap()
            }),
        ),
        (
            "sub",
            (5, 4),
            Box::new(move |t, x| {
                let b = t.constant(Tensor2::ones((5, 4))).unwrap();
                t.sub(x, b).unwrap()
            }),
        ),
        (
            "add_row",
            (5, 4),
            Box::new(move |t, x| {
                let r = t.constant(row_fixed.clone()).unwrap();
                t.add_row(x, r).unwrap()
            }),
        ),
        // offset keeps entries away from the ReLU kink where central
        // differences are one-sided
        (
            "relu",
            (5, 4),
            Box::new(|t, x| {
                let off = t.constant(Tensor2::from_elem((5, 4), 0.35)).unwrap();
                let y = t.add(x, off).unwrap();
                t.relu(y).unwrap()
            }),
        ),
        (
            "concat_cols",
            (5, 4),
            Box::new(move |t, x| {
                let b = t.constant(cat_fixed.clone()).unwrap();
                t.concat_cols(x, b).unwrap()
            }),
        ),
        (
            "row_select",
            (5, 4),
            Box::new(|t, x| t.row_select(x, vec![4, 0, 2, 2, 1, 3]).unwrap()),
        ),
        (
            "segment_sum",
            (5, 4),
            Box::new(|t, x| t.segment_sum(x, vec![1, 0, 1, 2, 0], 4).unwrap()),
        ),
        (
            "segment_mean",
            (5, 4),
            Box::new(|t, x| t.segment_mean(x, vec![1, 0, 1, 2, 0], 4).unwrap()),
        ),
        // arcs of the path 0-1-2: [(0,1), (1,0), (1,2), (2,1)]
        (
            "arc_messages",
            (4, 4),
            Box::new(|t, x| {
                t.arc_messages(x, vec![0, 1, 1, 2], vec![1, 0, 2, 1], vec![1, 0, 3, 2], 3)
                    .unwrap()
            }),
        ),
        (
            "mul_mask",
            (5, 4),
            Box::new(move |t, x| t.mul_mask(x, mask_fixed.clone()).unwrap()),
        ),
    ];

    for (name, shape, build) in &cases {
        let x0 = rand_matrix(shape.0, shape.1, &mut rng);
        let (out_rows, out_cols) = {
            let mut tape = Tape::new();
            let x = tape.leaf(x0.clone()).unwrap();
            let y = build(&mut tape, x);
            tape.shape(y)
        };
        let target = rand_matrix(out_rows, out_cols, &mut rng);
        let mask = Tensor2::ones((out_rows, out_cols));

        let eval = |probe: &Tensor2<f64>| -> (f64, Tensor2<f64>) {
            let mut tape = Tape::new();
            let x = tape.leaf(probe.clone()).unwrap();
            let y = build(&mut tape, x);
            let loss = tape.masked_mse(y, &target, &mask).unwrap();
            let value = tape.value(loss)[(0, 0)];
            let grads = tape.backward(loss).unwrap();
            (value, grads.get(x).unwrap().clone())
        };

        let (_, analytic) = eval(&x0);
        let numeric = central_diff(&x0, STEP, |p| eval(p).0);
        results.push(CheckResult {
            name: (*name).to_string(),
            max_rel_error: max_rel_error(&analytic, &numeric),
        });
    }

    // the two losses, differentiated directly
    for loss_name in ["masked_bce", "masked_mse"] {
        let x0 = rand_matrix(4, 3, &mut rng);
        let target = Tensor2::from_shape_fn((4, 3), |_| f64::from(rng.random::<bool>()));
        let mask = Tensor2::from_shape_fn((4, 3), |_| f64::from(rng.random::<f64>() < 0.8));
        let eval = |probe: &Tensor2<f64>| -> (f64, Tensor2<f64>) {
            let mut tape = Tape::new();
            let x = tape.leaf(probe.clone()).unwrap();
            let loss = match loss_name {
                "masked_bce" => tape.masked_bce(x, &target, &mask).unwrap(),
                _ => tape.masked_mse(x, &target, &mask).unwrap(),
            };
            let value = tape.value(loss)[(0, 0)];
            let grads = tape.backward(loss).unwrap();
            (value, grads.get(x).unwrap().clone())
        };
        let (_, analytic) = eval(&x0);
        let numeric = central_diff(&x0, STEP, |p| eval(p).0);
        results.push(CheckResult {
            name: loss_name.to_string(),
            max_rel_error: max_rel_error(&analytic, &numeric),
        });
    }

    results
}

/// End-to-end gradient checks: random two-graph batches through both
/// architectures, every parameter checked against central differences.
/// Returns the worst relative error per instance.
pub fn end_to_end(instances: usize, seed: u64) -> Vec<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut errors = Vec::with_capacity(instances);
    for i in 0..instances {
        let architecture = if i % 2 == 0 {
            Architecture::Dmpnn
        } else {
            Architecture::Mpnn
        };
        let cfg = ModelConfig {
            architecture,
            hidden: rng.random_range(3..7),
            steps: rng.random_range(1..4),
            ffn_hidden: rng.random_range(3..7),
            dropout: 0.0,
            readout: if rng.random::<bool>() {
                Readout::Mean
            } else {
                Readout::Sum
            },
            tasks: rng.random_range(1..3),
        };
        let graphs: Vec<MolGraph> = (0..2)
            .map(|_| featurize::<f64>(&random_molecule(&mut rng)).unwrap())
            .collect();
        let refs: Vec<GraphRef<f64>> = graphs.iter().map(Into::into).collect();
        let batch = build_batch(&refs).unwrap();
        let mut store = init_params::<f64, _>(&cfg, 37, 9, &mut rng).unwrap();
        // zero-initialized biases can leave ReLU pre-activations exactly at
        // the kink, where a central difference is one-sided; jitter them so
        // the check probes differentiable points
        let bias_jitter: Vec<(String, Tensor2<f64>)> = store
            .names()
            .filter(|n| n.ends_with("b1") || n.ends_with("b2") || n.ends_with("b3"))
            .map(str::to_string)
            .collect::<Vec<_>>()
            .into_iter()
            .map(|name| {
                let dim = store.get(&name).dim();
                (name, Tensor2::from_shape_fn(dim, |_| rng.random::<f64>() - 0.5))
            })
            .collect();
        store.restore(&bias_jitter);
        let targets = rand_matrix(2, cfg.tasks, &mut rng);
        let mask = Tensor2::ones((2, cfg.tasks));

        let loss_of = |s: &ParamStore| -> f64 {
            let mut pass = forward_eval(&batch, s, &cfg).unwrap();
            let loss = pass.loss_masked_mse(&targets, &mask).unwrap();
            pass.tape.value(loss)[(0, 0)]
        };

        let mut pass = forward_eval(&batch, &store, &cfg).unwrap();
        let loss = pass.loss_masked_mse(&targets, &mask).unwrap();
        let mut grads = store.clone();
        grads.clear_grads();
        pass.backprop(loss, &mut grads).unwrap();

        let mut worst: f64 = 0.0;
        let names: Vec<String> = store.names().map(str::to_string).collect();
        for name in &names {
            let numeric = central_diff(store.get(name), STEP, |probe| {
                let mut s = store.clone();
                s.restore(&[(name.clone(), probe.clone())]);
                loss_of(&s)
            });
            worst = worst.max(max_rel_error(grads.grad_of(name), &numeric));
        }
        errors.push(worst);
    }
    errors
}
