//! Loss, optimizer, and the full-batch training loop.

pub mod adam;
pub mod batch;
pub mod loss;

pub use adam::{optimizer_step, AdamConfig, OptimizerState};
pub use batch::{sample_batch, LabeledPair, PairLabel, TrainBatch, Triplet};
pub use loss::{
    loss_and_grad, loss_forward, pair_probabilities, predict_pair_sign, LossBreakdown, LossConfig,
    LossGrad,
};

use crate::error::{Error, Result};
use crate::graph::SignedGraph;
use crate::model::{ModelDims, ModelParams};
use crate::transformer::{Encoder, EncoderInputs, EncoderOptions};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrainConfig {
    pub dims: ModelDims,
    pub encoder: EncoderOptions,
    pub loss: LossConfig,
    pub adam: AdamConfig,
    pub max_epochs: usize,
    /// Epochs without a relative improvement of at least `tol` before stopping.
    pub patience: usize,
    pub tol: f64,
    pub seed: u64,
}

impl TrainConfig {
    pub fn new(dims: ModelDims) -> Self {
        Self {
            dims,
            encoder: EncoderOptions::default(),
            loss: LossConfig::default(),
            adam: AdamConfig::default(),
            max_epochs: 200,
            patience: 20,
            tol: 1e-4,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone)]
pub struct TrainOutput {
    pub params: ModelParams,
    /// Loss at the start of each epoch, before that epoch's update.
    pub trace: Vec<f64>,
    pub converged: bool,
}

/// Total loss and full parameter gradient at `params`.
pub fn loss_and_param_grad(
    params: &ModelParams,
    inputs: &EncoderInputs,
    batch: &TrainBatch,
    cfg: &LossConfig,
    encoder: &mut Encoder,
) -> Result<(LossBreakdown, ModelParams)> {
    let z = encoder.forward(params, inputs)?;
    let (loss, lg) = loss_and_grad(z.view(), params, batch, cfg)?;
    let mut grads = encoder.backward(params, inputs, lg.dz.view())?;
    grads.classifier += &lg.dclassifier;
    if cfg.weight_decay > 0.0 {
        grads.axpy(cfg.weight_decay, params);
    }
    Ok((loss, grads))
}

/// Full-batch training on `train`.
///
/// The batch is sampled once from `seed`. Training stops after `max_epochs`
/// or once `patience` consecutive epochs fail to improve the best loss by a
/// relative `tol`. A non-finite loss or gradient aborts with
/// [`Error::Diverged`] carrying the last finite parameters.
pub fn train(train: &SignedGraph, inputs: &EncoderInputs, cfg: &TrainConfig) -> Result<TrainOutput> {
    cfg.dims.validate()?;
    cfg.loss.validate()?;
    let mut params = ModelParams::init(cfg.dims, cfg.seed)?;
    if cfg.max_epochs == 0 {
        return Ok(TrainOutput {
            params,
            trace: Vec::new(),
            converged: false,
        });
    }
    let batch = sample_batch(train, cfg.loss.no_link_ratio, crate::rng::substream_seed(cfg.seed, 1))?;
    let mut encoder = Encoder::new(cfg.encoder);
    let mut state = OptimizerState::new(cfg.adam, &params);
    let mut trace = Vec::with_capacity(cfg.max_epochs);
    let mut best = f64::INFINITY;
    let mut stale = 0usize;
    let mut converged = false;

    for epoch in 0..cfg.max_epochs {
        let step = loss_and_param_grad(&params, inputs, &batch, &cfg.loss, &mut encoder);
        let (loss, grads) = match step {
            Ok(v) => v,
            Err(Error::NonFinite(_)) => {
                return Err(Error::Diverged {
                    epoch,
                    last_good: Box::new(params),
                })
            }
            Err(e) => return Err(e),
        };
        if !loss.total.is_finite() || !grads.is_finite() {
            return Err(Error::Diverged {
                epoch,
                last_good: Box::new(params),
            });
        }
        trace.push(loss.total);
        if loss.total < best - cfg.tol * best.abs() || !best.is_finite() {
            best = loss.total;
            stale = 0;
        } else {
            stale += 1;
            if stale >= cfg.patience {
                converged = true;
                break;
            }
        }
        let previous = params.clone();
        optimizer_step(&mut params, &grads, &mut state)?;
        if !params.is_finite() {
            return Err(Error::Diverged {
                epoch,
                last_good: Box::new(previous),
            });
        }
    }
    Ok(TrainOutput {
        params,
        trace,
        converged,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::encodings::WalkConfig;
    use crate::graph::{generate_balanced_graph, SyntheticConfig};

    fn setup(max_epochs: usize) -> (SignedGraph, EncoderInputs, TrainConfig) {
        let g = generate_balanced_graph(&SyntheticConfig {
            nodes_per_block: 8,
            p_intra: 0.4,
            p_inter: 0.4,
            ..SyntheticConfig::default()
        })
        .unwrap();
        let dims = ModelDims {
            width: 4,
            heads: 2,
            layers: 1,
            max_degree: 4,
            num_walks: 2,
        };
        let walk = WalkConfig {
            num_walks: 2,
            walk_length: 6,
            max_path_length: 6,
            seed: 0,
        };
        let inputs = EncoderInputs::build(&g, &dims, &walk).unwrap();
        let mut cfg = TrainConfig::new(dims);
        cfg.max_epochs = max_epochs;
        cfg.adam.lr = 1e-2;
        (g, inputs, cfg)
    }

    #[test]
    fn zero_epochs_returns_initial_params() {
        let (g, inputs, cfg) = setup(0);
        let out = train(&g, &inputs, &cfg).unwrap();
        assert_eq!(out.params, ModelParams::init(cfg.dims, cfg.seed).unwrap());
        assert!(out.trace.is_empty());
    }

    #[test]
    fn same_seed_same_trace() {
        let (g, inputs, cfg) = setup(5);
        let a = train(&g, &inputs, &cfg).unwrap();
        let b = train(&g, &inputs, &cfg).unwrap();
        assert_eq!(a.trace, b.trace);
        assert_eq!(a.params, b.params);
    }

    #[test]
    fn loss_goes_down() {
        let (g, inputs, cfg) = setup(30);
        let out = train(&g, &inputs, &cfg).unwrap();
        assert!(out.trace.last().unwrap() < &out.trace[0]);
    }

    #[test]
    fn huge_learning_rate_reports_divergence_or_finishes_finite() {
        let (g, inputs, mut cfg) = setup(20);
        cfg.adam.lr = 1e300;
        match train(&g, &inputs, &cfg) {
            Err(Error::Diverged { last_good, .. }) => assert!(last_good.is_finite()),
            Ok(out) => assert!(out.params.is_finite()),
            Err(e) => panic!("unexpected error {e}"),
        }
    }
}
