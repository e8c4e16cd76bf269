//! Biased-attention transformer encoder with a hand-written reverse pass.
//!
//! Each layer is pre-LN:
//!
//! ```text
//! h' = MHA(LN1(h)) + h
//! h_out = FFN(LN2(h')) + h'
//! ```
//!
//! and every head scores `QKᵀ/√d_k + B` where `B` is the shared attention
//! bias (normalized adjacency plus weighted walk encoding).

use ndarray::{s, Array1, Array2, ArrayView2, Axis};
use serde::{Deserialize, Serialize};

use crate::encodings::{
    adjacency_bias, centrality_encode_indexed, sample_signed_walks, spectral_init, DegreeIndex,
    WalkConfig, WalkEncoding,
};
use crate::error::{Error, Result};
use crate::graph::SignedGraph;
use crate::model::{LayerParams, ModelDims, ModelParams};

const LN_EPS: f64 = 1e-5;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Activation {
    #[default]
    Gelu,
    Relu,
}

impl Activation {
    fn apply(self, x: f64) -> f64 {
        match self {
            Activation::Gelu => {
                let t = (GELU_C * (x + 0.044715 * x * x * x)).tanh();
                0.5 * x * (1.0 + t)
            }
            Activation::Relu => x.max(0.0),
        }
    }

    fn derivative(self, x: f64) -> f64 {
        match self {
            Activation::Gelu => {
                let t = (GELU_C * (x + 0.044715 * x * x * x)).tanh();
                0.5 * (1.0 + t) + 0.5 * x * (1.0 - t * t) * GELU_C * (1.0 + 3.0 * 0.044715 * x * x)
            }
            Activation::Relu => {
                if x > 0.0 {
                    1.0
                } else {
                    0.0
                }
            }
        }
    }
}

// sqrt(2 / pi), tanh form of GELU
const GELU_C: f64 = 0.797_884_560_802_865_4;

/// Which encodings feed the encoder, plus the dense-attention size guard.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EncoderOptions {
    pub activation: Activation,
    pub use_centrality: bool,
    pub use_adjacency_bias: bool,
    pub use_walk_bias: bool,
    /// Largest node count accepted by the dense `|V|×|V|` attention.
    pub max_nodes: usize,
}

impl Default for EncoderOptions {
    fn default() -> Self {
        Self {
            activation: Activation::Gelu,
            use_centrality: true,
            use_adjacency_bias: true,
            use_walk_bias: true,
            max_nodes: 5000,
        }
    }
}

/// Graph-derived inputs that stay fixed during training.
#[derive(Debug, Clone, PartialEq)]
pub struct EncoderInputs {
    /// Spectral features `x`.
    pub x: Array2<f64>,
    pub degree_index: DegreeIndex,
    /// Normalized adjacency `Â`.
    pub adj_bias: Array2<f64>,
    pub walk: WalkEncoding,
}

impl EncoderInputs {
    pub fn build(g: &SignedGraph, dims: &ModelDims, walk_cfg: &WalkConfig) -> Result<Self> {
        if walk_cfg.num_walks != dims.num_walks {
            return Err(Error::InvalidParameter(format!(
                "walk config samples {} walks but the model has {} walk weights",
                walk_cfg.num_walks, dims.num_walks
            )));
        }
        let walks = sample_signed_walks(g, walk_cfg)?;
        Self::from_walks(g, dims, &walks)
    }

    pub fn from_walks(
        g: &SignedGraph,
        dims: &ModelDims,
        walks: &crate::encodings::WalkSet,
    ) -> Result<Self> {
        Ok(Self {
            x: spectral_init(g, dims.width)?,
            degree_index: DegreeIndex::new(&g.degree_profile(), dims.max_degree),
            adj_bias: adjacency_bias(g),
            walk: WalkEncoding::from_walks(walks, g)?,
        })
    }

    pub fn num_nodes(&self) -> usize {
        self.x.nrows()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LayerNormCache {
    pub xhat: Array2<f64>,
    pub inv_std: Array1<f64>,
    pub out: Array2<f64>,
}

fn layer_norm(x: ArrayView2<f64>, gain: &Array1<f64>, bias: &Array1<f64>) -> LayerNormCache {
    let d = x.ncols() as f64;
    let mut xhat = x.to_owned();
    let mut inv_std = Array1::zeros(x.nrows());
    for (i, mut row) in xhat.rows_mut().into_iter().enumerate() {
        let mean = row.sum() / d;
        row.mapv_inplace(|v| v - mean);
        let var = row.iter().map(|v| v * v).sum::<f64>() / d;
        let is = 1.0 / (var + LN_EPS).sqrt();
        row.mapv_inplace(|v| v * is);
        inv_std[i] = is;
    }
    let out = &xhat * gain + bias;
    LayerNormCache { xhat, inv_std, out }
}

fn layer_norm_backward(
    cache: &LayerNormCache,
    gain: &Array1<f64>,
    dy: ArrayView2<f64>,
    dgain: &mut Array1<f64>,
    dbias: &mut Array1<f64>,
) -> Array2<f64> {
    *dgain += &(&dy * &cache.xhat).sum_axis(Axis(0));
    *dbias += &dy.sum_axis(Axis(0));
    let d = dy.ncols() as f64;
    let mut dx = &dy * gain;
    for (i, mut row) in dx.rows_mut().into_iter().enumerate() {
        let xh = cache.xhat.row(i);
        let mean_d = row.sum() / d;
        let mean_dx = row.iter().zip(xh.iter()).map(|(a, b)| a * b).sum::<f64>() / d;
        let is = cache.inv_std[i];
        for (v, &x) in row.iter_mut().zip(xh.iter()) {
            *v = is * (*v - mean_d - x * mean_dx);
        }
    }
    dx
}

fn softmax_rows(scores: &Array2<f64>) -> Array2<f64> {
    let mut p = scores.clone();
    for mut row in p.rows_mut() {
        let max = row.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        row.mapv_inplace(|v| (v - max).exp());
        let sum = row.sum();
        row.mapv_inplace(|v| v / sum);
    }
    p
}

fn ensure_finite(a: ArrayView2<f64>, what: &str) -> Result<()> {
    if a.iter().all(|v| v.is_finite()) {
        Ok(())
    } else {
        Err(Error::NonFinite(what.to_string()))
    }
}

/// Per-head scores `Ã`, probabilities, and the projected output.
#[derive(Debug, Clone, PartialEq)]
pub struct AttentionActivation {
    pub q: Array2<f64>,
    pub k: Array2<f64>,
    pub v: Array2<f64>,
    pub scores: Vec<Array2<f64>>,
    pub probs: Vec<Array2<f64>>,
    /// Heads concatenated, before the output projection.
    pub concat: Array2<f64>,
    pub output: Array2<f64>,
}

/// Multi-head attention over `h` with an additive bias shared by all heads.
pub fn attention_forward(
    h: ArrayView2<f64>,
    layer: &LayerParams,
    heads: usize,
    bias: ArrayView2<f64>,
) -> Result<AttentionActivation> {
    let (n, d) = h.dim();
    if layer.w_q.dim() != (d, d) || heads == 0 || d % heads != 0 {
        return Err(Error::Shape(format!(
            "input width {d}, projection {:?}, {heads} heads",
            layer.w_q.dim()
        )));
    }
    if bias.dim() != (n, n) {
        return Err(Error::Shape(format!(
            "bias {:?} for {n} nodes",
            bias.dim()
        )));
    }
    ensure_finite(h, "attention input")?;
    ensure_finite(bias, "attention bias")?;
    let dk = d / heads;
    let scale = 1.0 / (dk as f64).sqrt();
    let q = h.dot(&layer.w_q);
    let k = h.dot(&layer.w_k);
    let v = h.dot(&layer.w_v);
    let mut scores = Vec::with_capacity(heads);
    let mut probs = Vec::with_capacity(heads);
    let mut concat = Array2::zeros((n, d));
    for head in 0..heads {
        let cols = s![.., head * dk..(head + 1) * dk];
        let sc = q.slice(cols).dot(&k.slice(cols).t()) * scale + bias;
        let p = softmax_rows(&sc);
        concat.slice_mut(cols).assign(&p.dot(&v.slice(cols)));
        scores.push(sc);
        probs.push(p);
    }
    let output = concat.dot(&layer.w_o);
    ensure_finite(output.view(), "attention output")?;
    Ok(AttentionActivation {
        q,
        k,
        v,
        scores,
        probs,
        concat,
        output,
    })
}

/// Everything a layer's backward pass needs.
#[derive(Debug, Clone, PartialEq)]
pub struct LayerActivation {
    pub h_prev: Array2<f64>,
    pub ln1: LayerNormCache,
    pub attn: AttentionActivation,
    pub h_mid: Array2<f64>,
    pub ln2: LayerNormCache,
    pub ffn_pre: Array2<f64>,
    pub ffn_act: Array2<f64>,
    pub h_out: Array2<f64>,
}

pub fn transformer_layer(
    h_prev: ArrayView2<f64>,
    layer: &LayerParams,
    heads: usize,
    bias: ArrayView2<f64>,
    activation: Activation,
) -> Result<LayerActivation> {
    ensure_finite(h_prev, "layer input")?;
    let ln1 = layer_norm(h_prev, &layer.ln1_gain, &layer.ln1_bias);
    let attn = attention_forward(ln1.out.view(), layer, heads, bias)?;
    let h_mid = &attn.output + &h_prev;
    let ln2 = layer_norm(h_mid.view(), &layer.ln2_gain, &layer.ln2_bias);
    let ffn_pre = ln2.out.dot(&layer.ffn_w1) + &layer.ffn_b1;
    let ffn_act = ffn_pre.mapv(|v| activation.apply(v));
    let h_out = ffn_act.dot(&layer.ffn_w2) + &layer.ffn_b2 + &h_mid;
    ensure_finite(h_out.view(), "layer output")?;
    Ok(LayerActivation {
        h_prev: h_prev.to_owned(),
        ln1,
        attn,
        h_mid,
        ln2,
        ffn_pre,
        ffn_act,
        h_out,
    })
}

fn check_inputs(params: &ModelParams, inputs: &EncoderInputs, opts: &EncoderOptions) -> Result<()> {
    let n = inputs.num_nodes();
    if n > opts.max_nodes {
        return Err(Error::InvalidParameter(format!(
            "{n} nodes exceeds the dense attention limit of {}; raise max_nodes to override",
            opts.max_nodes
        )));
    }
    if inputs.x.ncols() != params.dims.width {
        return Err(Error::Shape(format!(
            "features have width {}, model width {}",
            inputs.x.ncols(),
            params.dims.width
        )));
    }
    if inputs.walk.num_walks() != params.walk_weights.len() {
        return Err(Error::Shape(format!(
            "{} walk matrices, {} walk weights",
            inputs.walk.num_walks(),
            params.walk_weights.len()
        )));
    }
    Ok(())
}

/// Initial embeddings `h0`, with or without centrality.
pub fn initial_embeddings(
    params: &ModelParams,
    inputs: &EncoderInputs,
    opts: &EncoderOptions,
) -> Result<Array2<f64>> {
    if opts.use_centrality {
        centrality_encode_indexed(inputs.x.view(), &inputs.degree_index, &params.centrality)
    } else {
        Ok(inputs.x.clone())
    }
}

/// The attention bias for the current walk weights.
pub fn attention_bias(
    params: &ModelParams,
    inputs: &EncoderInputs,
    opts: &EncoderOptions,
) -> Result<Array2<f64>> {
    let n = inputs.num_nodes();
    let mut bias = if opts.use_adjacency_bias {
        inputs.adj_bias.clone()
    } else {
        Array2::zeros((n, n))
    };
    if opts.use_walk_bias {
        bias += &inputs.walk.bias(params.walk_weights.as_slice().expect("contiguous"))?;
    }
    Ok(bias)
}

/// Forward pass without recording, returning embeddings `z`.
pub fn encode(params: &ModelParams, inputs: &EncoderInputs, opts: &EncoderOptions) -> Result<Array2<f64>> {
    check_inputs(params, inputs, opts)?;
    let bias = attention_bias(params, inputs, opts)?;
    let mut h = initial_embeddings(params, inputs, opts)?;
    for layer in &params.layers {
        h = transformer_layer(h.view(), layer, params.dims.heads, bias.view(), opts.activation)?.h_out;
    }
    Ok(h)
}

#[derive(Debug, Clone)]
struct Tape {
    layers: Vec<LayerActivation>,
}

/// Stateful wrapper that records a forward pass for one backward pass.
#[derive(Debug, Clone, Default)]
pub struct Encoder {
    pub options: EncoderOptions,
    tape: Option<Tape>,
}

impl Encoder {
    pub fn new(options: EncoderOptions) -> Self {
        Self { options, tape: None }
    }

    pub fn forward(&mut self, params: &ModelParams, inputs: &EncoderInputs) -> Result<Array2<f64>> {
        check_inputs(params, inputs, &self.options)?;
        self.tape = None;
        let bias = attention_bias(params, inputs, &self.options)?;
        let mut h = initial_embeddings(params, inputs, &self.options)?;
        let mut layers = Vec::with_capacity(params.layers.len());
        for layer in &params.layers {
            let act = transformer_layer(
                h.view(),
                layer,
                params.dims.heads,
                bias.view(),
                self.options.activation,
            )?;
            h = act.h_out.clone();
            layers.push(act);
        }
        self.tape = Some(Tape { layers });
        Ok(h)
    }

    /// Gradients of every encoder parameter given `dL/dz`. The classifier
    /// slot of the result is left at zero. Consumes the recorded forward pass.
    pub fn backward(
        &mut self,
        params: &ModelParams,
        inputs: &EncoderInputs,
        dz: ArrayView2<f64>,
    ) -> Result<ModelParams> {
        let tape = self
            .tape
            .take()
            .ok_or_else(|| Error::InvalidParameter("backward called before forward".into()))?;
        let n = inputs.num_nodes();
        if dz.dim() != (n, params.dims.width) {
            return Err(Error::Shape(format!(
                "upstream gradient {:?}, embeddings ({n}, {})",
                dz.dim(),
                params.dims.width
            )));
        }
        let opts = self.options;
        let heads = params.dims.heads;
        let dk = params.dims.head_width();
        let scale = 1.0 / (dk as f64).sqrt();
        let mut grads = params.zeros_like();
        let mut dbias = Array2::<f64>::zeros((n, n));
        let mut dh = dz.to_owned();

        for (li, act) in tape.layers.iter().enumerate().rev() {
            let p = &params.layers[li];
            let g = &mut grads.layers[li];

            // FFN branch
            let df = dh.view();
            g.ffn_w2 += &act.ffn_act.t().dot(&df);
            g.ffn_b2 += &df.sum_axis(Axis(0));
            let mut da1 = df.dot(&p.ffn_w2.t());
            da1.zip_mut_with(&act.ffn_pre, |d, &x| *d *= opts.activation.derivative(x));
            g.ffn_w1 += &act.ln2.out.t().dot(&da1);
            g.ffn_b1 += &da1.sum_axis(Axis(0));
            let du2 = da1.dot(&p.ffn_w1.t());
            let mut dh_mid = dh.clone();
            dh_mid += &layer_norm_backward(
                &act.ln2,
                &p.ln2_gain,
                du2.view(),
                &mut g.ln2_gain,
                &mut g.ln2_bias,
            );

            // attention branch
            let a = &act.attn;
            g.w_o += &a.concat.t().dot(&dh_mid);
            let dconcat = dh_mid.dot(&p.w_o.t());
            let mut dq = Array2::zeros(a.q.dim());
            let mut dk_full = Array2::zeros(a.k.dim());
            let mut dv = Array2::zeros(a.v.dim());
            for head in 0..heads {
                let cols = s![.., head * dk..(head + 1) * dk];
                let prob = &a.probs[head];
                let d_out = dconcat.slice(cols);
                let dp = d_out.dot(&a.v.slice(cols).t());
                dv.slice_mut(cols).assign(&prob.t().dot(&d_out));
                let mut ds = dp;
                for (mut ds_row, p_row) in ds.rows_mut().into_iter().zip(prob.rows()) {
                    let dot: f64 = ds_row.iter().zip(p_row.iter()).map(|(a, b)| a * b).sum();
                    ds_row.zip_mut_with(&p_row, |d, &pv| *d = pv * (*d - dot));
                }
                dbias += &ds;
                dq.slice_mut(cols).assign(&(ds.dot(&a.k.slice(cols)) * scale));
                dk_full
                    .slice_mut(cols)
                    .assign(&(ds.t().dot(&a.q.slice(cols)) * scale));
            }
            let u1 = &act.ln1.out;
            g.w_q += &u1.t().dot(&dq);
            g.w_k += &u1.t().dot(&dk_full);
            g.w_v += &u1.t().dot(&dv);
            let du1 = dq.dot(&p.w_q.t()) + dk_full.dot(&p.w_k.t()) + dv.dot(&p.w_v.t());
            let mut dh_prev = dh_mid;
            dh_prev += &layer_norm_backward(
                &act.ln1,
                &p.ln1_gain,
                du1.view(),
                &mut g.ln1_gain,
                &mut g.ln1_bias,
            );
            dh = dh_prev;
        }

        if opts.use_walk_bias {
            for (k, m) in inputs.walk.inv_psi.iter().enumerate() {
                grads.walk_weights[k] = (&dbias * m).sum();
            }
        }
        if opts.use_centrality {
            let idx = &inputs.degree_index;
            for (i, row) in dh.rows().into_iter().enumerate() {
                let mut pos = grads.centrality.c_pos.row_mut(idx.pos[i]);
                pos += &row;
                let mut neg = grads.centrality.c_neg.row_mut(idx.neg[i]);
                neg += &row;
            }
        }
        Ok(grads)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::{Sign, SignedEdge};
    use ndarray::array;

    fn layer(d: usize, seed: u64) -> LayerParams {
        let dims = ModelDims {
            width: d,
            heads: 2,
            layers: 1,
            max_degree: 3,
            num_walks: 1,
        };
        ModelParams::init(dims, seed).unwrap().layers.remove(0)
    }

    #[test]
    fn zero_query_key_gives_uniform_attention() {
        let mut l = layer(4, 1);
        l.w_q.fill(0.0);
        l.w_k.fill(0.0);
        l.w_o = Array2::eye(4);
        let h = array![
            [1.0, 2.0, 3.0, 4.0],
            [0.5, -1.0, 0.0, 2.0],
            [3.0, 1.0, -2.0, 0.0]
        ];
        let act = attention_forward(h.view(), &l, 2, Array2::zeros((3, 3)).view()).unwrap();
        let v = h.dot(&l.w_v);
        let mean = v.mean_axis(Axis(0)).unwrap();
        for row in act.output.rows() {
            for (a, b) in row.iter().zip(mean.iter()) {
                assert!((a - b).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn large_bias_saturates_softmax() {
        let mut l = layer(4, 2);
        l.w_o = Array2::eye(4);
        let h = array![
            [1.0, 2.0, 3.0, 4.0],
            [0.5, -1.0, 0.0, 2.0],
            [3.0, 1.0, -2.0, 0.0]
        ];
        let mut bias = Array2::zeros((3, 3));
        bias[[0, 2]] = 1e6;
        let act = attention_forward(h.view(), &l, 2, bias.view()).unwrap();
        let v = h.dot(&l.w_v);
        for c in 0..4 {
            assert!((act.output[[0, c]] - v[[2, c]]).abs() < 1e-3);
        }
        for p in &act.probs {
            for row in p.rows() {
                assert!((row.sum() - 1.0).abs() < 1e-6);
            }
        }
    }

    #[test]
    fn output_shape() {
        let l = layer(4, 3);
        let h = Array2::from_shape_fn((5, 4), |(i, j)| (i * 4 + j) as f64 * 0.1);
        let act = attention_forward(h.view(), &l, 2, Array2::zeros((5, 5)).view()).unwrap();
        assert_eq!(act.output.dim(), (5, 4));
    }

    #[test]
    fn non_finite_input_fails_fast() {
        let l = layer(4, 3);
        let mut h = Array2::zeros((2, 4));
        h[[1, 1]] = f64::NAN;
        let err = attention_forward(h.view(), &l, 2, Array2::zeros((2, 2)).view()).unwrap_err();
        assert!(matches!(err, Error::NonFinite(_)));
    }

    #[test]
    fn zero_weights_pass_residual_through() {
        let d = 4;
        let mut l = LayerParams {
            ..layer(d, 4)
        };
        for m in [&mut l.w_q, &mut l.w_k, &mut l.w_v, &mut l.w_o, &mut l.ffn_w1, &mut l.ffn_w2] {
            m.fill(0.0);
        }
        l.ffn_b1.fill(0.0);
        l.ffn_b2.fill(0.0);
        l.ln1_bias.fill(0.0);
        l.ln2_bias.fill(0.0);
        let h = array![[1.0, -2.0, 0.5, 3.0], [0.0, 1.0, 1.0, 1.0]];
        let out = transformer_layer(h.view(), &l, 2, Array2::zeros((2, 2)).view(), Activation::Gelu)
            .unwrap();
        assert_eq!(out.h_out, h);
    }

    #[test]
    fn constant_row_normalizes_to_zero() {
        let gain = Array1::from_elem(3, 1.0);
        let bias = Array1::zeros(3);
        let x = array![[2.5, 2.5, 2.5]];
        let c = layer_norm(x.view(), &gain, &bias);
        assert!(c.out.iter().all(|&v| v == 0.0));
    }

    fn small_graph() -> SignedGraph {
        let edges = [
            (0, 1, Sign::Positive),
            (1, 2, Sign::Negative),
            (2, 3, Sign::Positive),
            (3, 0, Sign::Negative),
            (0, 2, Sign::Positive),
            (4, 1, Sign::Negative),
        ];
        SignedGraph::from_edges(5, edges.into_iter().map(|(a, b, s)| SignedEdge::new(a, b, s))).unwrap()
    }

    fn setup(layers: usize) -> (ModelParams, EncoderInputs) {
        let dims = ModelDims {
            width: 4,
            heads: 2,
            layers,
            max_degree: 2,
            num_walks: 2,
        };
        let walk_cfg = WalkConfig {
            num_walks: 2,
            walk_length: 4,
            max_path_length: 4,
            seed: 3,
        };
        let g = small_graph();
        let inputs = EncoderInputs::build(&g, &dims, &walk_cfg).unwrap();
        (ModelParams::init(dims, 11).unwrap(), inputs)
    }

    #[test]
    fn single_layer_encode_matches_layer_call() {
        let (params, inputs) = setup(1);
        let opts = EncoderOptions::default();
        let z = encode(&params, &inputs, &opts).unwrap();
        let bias = attention_bias(&params, &inputs, &opts).unwrap();
        let h0 = initial_embeddings(&params, &inputs, &opts).unwrap();
        let act =
            transformer_layer(h0.view(), &params.layers[0], 2, bias.view(), opts.activation).unwrap();
        assert_eq!(z, act.h_out);
        assert_eq!(z, encode(&params, &inputs, &opts).unwrap());
    }

    #[test]
    fn bias_changes_embeddings() {
        let (params, mut inputs) = setup(1);
        let opts = EncoderOptions::default();
        let z1 = encode(&params, &inputs, &opts).unwrap();
        inputs.adj_bias *= 2.0;
        for m in &mut inputs.walk.inv_psi {
            *m *= 2.0;
        }
        let z2 = encode(&params, &inputs, &opts).unwrap();
        let diff: f64 = (&z1 - &z2).iter().map(|v| v.abs()).sum();
        assert!(diff > 1e-6);
    }

    #[test]
    fn backward_requires_forward() {
        let (params, inputs) = setup(1);
        let mut enc = Encoder::default();
        let dz = Array2::zeros((5, 4));
        assert!(enc.backward(&params, &inputs, dz.view()).is_err());
        enc.forward(&params, &inputs).unwrap();
        assert!(enc.backward(&params, &inputs, dz.view()).is_ok());
    }

    #[test]
    fn zero_upstream_gives_zero_gradients() {
        let (params, inputs) = setup(2);
        let mut enc = Encoder::default();
        enc.forward(&params, &inputs).unwrap();
        let g = enc
            .backward(&params, &inputs, Array2::zeros((5, 4)).view())
            .unwrap();
        assert_eq!(g.squared_norm(), 0.0);
    }

    #[test]
    fn output_bias_gradient_counts_rows() {
        let (params, inputs) = setup(1);
        let mut enc = Encoder::default();
        enc.forward(&params, &inputs).unwrap();
        let g = enc
            .backward(&params, &inputs, Array2::from_elem((5, 4), 1.0).view())
            .unwrap();
        assert!(g.layers[0].ffn_b2.iter().all(|&v| v == 5.0));
    }

    #[test]
    fn size_guard() {
        let (params, inputs) = setup(1);
        let opts = EncoderOptions {
            max_nodes: 4,
            ..EncoderOptions::default()
        };
        assert!(encode(&params, &inputs, &opts).is_err());
    }
}
