//! Reverse-mode gradients against central finite differences.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use sesg_core::encodings::WalkConfig;
use sesg_core::graph::{Sign, SignedEdge, SignedGraph};
use sesg_core::model::{ModelDims, ModelParams};
use sesg_core::training::{loss_and_param_grad, loss_forward, sample_batch, LossConfig};
use sesg_core::transformer::{encode, Activation, Encoder, EncoderInputs, EncoderOptions};

const EPS: f64 = 1e-4;
const TOL: f64 = 1e-4;
// gradients smaller than this are compared in absolute terms
const FLOOR: f64 = 1e-6;

fn random_graph(n: usize, seed: u64) -> SignedGraph {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut edges = Vec::new();
    for i in 0..n {
        for j in 0..n {
            if i != j && rng.gen_bool(0.2) {
                let s = if rng.gen_bool(0.6) { Sign::Positive } else { Sign::Negative };
                edges.push(SignedEdge::new(i, j, s));
            }
        }
    }
    // reciprocal pairs need matching signs
    let mut seen = std::collections::BTreeMap::new();
    edges.retain(|e| {
        let key = (e.src.min(e.dst), e.src.max(e.dst));
        match seen.get(&key) {
            Some(&s) => s == e.sign,
            None => {
                seen.insert(key, e.sign);
                true
            }
        }
    });
    SignedGraph::from_edges(n, edges).unwrap()
}

fn perturb(params: &ModelParams, tensor: usize, idx: usize, delta: f64) -> ModelParams {
    let mut p = params.clone();
    p.tensors_mut()[tensor].1[idx] += delta;
    p
}

fn check(layers: usize, activation: Activation, seed: u64) {
    let n = 12;
    let g = random_graph(n, seed);
    let dims = ModelDims {
        width: 8,
        heads: 2,
        layers,
        max_degree: 3,
        num_walks: 3,
    };
    let walks = WalkConfig {
        num_walks: 3,
        walk_length: 6,
        max_path_length: 6,
        seed,
    };
    let inputs = EncoderInputs::build(&g, &dims, &walks).unwrap();
    let opts = EncoderOptions {
        activation,
        ..EncoderOptions::default()
    };
    let cfg = LossConfig {
        lambda: 0.7,
        weight_decay: 0.01,
        ..LossConfig::default()
    };
    let batch = sample_batch(&g, 1.0, seed).unwrap();
    let mut params = ModelParams::init(dims, seed).unwrap();
    // move LN and walk weights off their init values
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0xabc);
    for (_, t) in params.tensors_mut() {
        for v in t.iter_mut() {
            *v += rng.gen_range(-0.2..0.2);
        }
    }

    let mut enc = Encoder::new(opts);
    let (_, grads) = loss_and_param_grad(&params, &inputs, &batch, &cfg, &mut enc).unwrap();
    let loss_at = |p: &ModelParams| {
        let z = encode(p, &inputs, &opts).unwrap();
        loss_forward(z.view(), p, &batch, &cfg).unwrap().total
    };

    let names: Vec<String> = params.tensors().into_iter().map(|(n, _)| n).collect();
    let lens: Vec<usize> = params.tensors().iter().map(|(_, t)| t.len()).collect();
    let mut worst = 0.0f64;
    for c in 0..200 {
        let tensor = c % names.len();
        let idx = rng.gen_range(0..lens[tensor]);
        let fd = (loss_at(&perturb(&params, tensor, idx, EPS))
            - loss_at(&perturb(&params, tensor, idx, -EPS)))
            / (2.0 * EPS);
        let an = grads.tensors()[tensor].1[idx];
        let err = (an - fd).abs() / an.abs().max(fd.abs()).max(FLOOR);
        assert!(
            err < TOL,
            "{}[{idx}]: analytic {an:e}, finite difference {fd:e}, relative error {err:e}",
            names[tensor]
        );
        worst = worst.max(err);
    }
    eprintln!("layers={layers} {activation:?}: worst relative error {worst:e}");
}

#[test]
fn one_layer_gelu() {
    check(1, Activation::Gelu, 1);
}

#[test]
fn two_layers_gelu() {
    check(2, Activation::Gelu, 2);
}

#[test]
fn one_layer_relu() {
    check(1, Activation::Relu, 3);
}
