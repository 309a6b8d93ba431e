mod common;

use std::time::Instant;

use common::{max_gradient_error, random_model};

// Central differences at h = 1e-5 carry about 1e-11 of round-off, so
// components smaller than this are compared on an absolute scale.
const FLOOR: f64 = 1e-4;

#[test]
fn two_layer_gradient_matches_central_differences() {
    let start = Instant::now();
    for seed in 0..20 {
        // e + n = 10, r = 4
        let (model, inst) = random_model(3, 4, 2, seed);
        assert_eq!(model.input_dim(), 10);
        let (err, n) = max_gradient_error(&model, &inst, 1e-5, FLOOR);
        assert!(n > 200);
        assert!(err < 1e-6, "seed {seed}: relative error {err:e}");
    }
    assert!(start.elapsed().as_secs_f64() < 5.0);
}

#[test]
fn gradient_holds_at_other_depths() {
    // depth 3 and 4 switch to ReLU
    for depth in [1, 3, 4] {
        let (model, inst) = random_model(5, 3, depth, 40 + depth as u64);
        let (err, _) = max_gradient_error(&model, &inst, 1e-5, FLOOR);
        assert!(err < 1e-6, "depth {depth}: relative error {err:e}");
    }
}

#[test]
fn single_task_weights_zero_the_other_head() {
    let (mut model, inst) = random_model(3, 4, 2, 9);
    model.loss_weights = (1.0, 0.0);
    model.l1_lambda = 0.0;
    let mut rng = kgcred::seeds::rng(0, "unused");
    let fwd = model
        .forward(inst.features.values(), kgcred::mlp::Mode::Infer, &mut rng)
        .unwrap();
    let g = model.backward(&fwd.cache, &inst).unwrap();
    assert!(g.repair.weights.iter().chain(&g.repair.bias).all(|&v| v == 0.0));
    assert!(g.cred.weights.iter().any(|&v| v != 0.0));
}
