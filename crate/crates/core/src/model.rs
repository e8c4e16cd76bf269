//! Learnable parameters of the encoder and classifier, and their checkpoint format.

use std::fs;
use std::io::{Cursor, Read};
use std::path::Path;

use ndarray::{Array1, Array2};
use rand::distributions::{Distribution, Uniform};

use crate::encodings::walks::{read_u32, read_u64};
use crate::encodings::CentralityTables;
use crate::error::{Error, Result};
use crate::rng;

/// Shape of a model.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ModelDims {
    /// Embedding width `d`.
    pub width: usize,
    pub heads: usize,
    pub layers: usize,
    /// Clipping degree `D` of the centrality tables.
    pub max_degree: usize,
    /// Number of walk weights `r`.
    pub num_walks: usize,
}

impl ModelDims {
    pub fn head_width(&self) -> usize {
        self.width / self.heads
    }

    pub fn validate(&self) -> Result<()> {
        if self.width == 0 || self.heads == 0 || self.layers == 0 {
            return Err(Error::InvalidParameter(
                "width, heads and layers must be positive".into(),
            ));
        }
        if self.width % self.heads != 0 {
            return Err(Error::InvalidParameter(format!(
                "width {} is not divisible by {} heads",
                self.width, self.heads
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LayerParams {
    pub ln1_gain: Array1<f64>,
    pub ln1_bias: Array1<f64>,
    pub w_q: Array2<f64>,
    pub w_k: Array2<f64>,
    pub w_v: Array2<f64>,
    /// Projects the concatenated heads back to width `d`.
    pub w_o: Array2<f64>,
    pub ln2_gain: Array1<f64>,
    pub ln2_bias: Array1<f64>,
    pub ffn_w1: Array2<f64>,
    pub ffn_b1: Array1<f64>,
    pub ffn_w2: Array2<f64>,
    pub ffn_b2: Array1<f64>,
}

impl LayerParams {
    fn zeros(d: usize) -> Self {
        Self {
            ln1_gain: Array1::zeros(d),
            ln1_bias: Array1::zeros(d),
            w_q: Array2::zeros((d, d)),
            w_k: Array2::zeros((d, d)),
            w_v: Array2::zeros((d, d)),
            w_o: Array2::zeros((d, d)),
            ln2_gain: Array1::zeros(d),
            ln2_bias: Array1::zeros(d),
            ffn_w1: Array2::zeros((d, d)),
            ffn_b1: Array1::zeros(d),
            ffn_w2: Array2::zeros((d, d)),
            ffn_b2: Array1::zeros(d),
        }
    }
}

/// All learnable tensors. The same type carries gradients.
#[derive(Debug, Clone, PartialEq)]
pub struct ModelParams {
    pub dims: ModelDims,
    pub centrality: CentralityTables,
    pub walk_weights: Array1<f64>,
    pub layers: Vec<LayerParams>,
    /// Maps `[z_i, z_j]` (width `2d`) to logits over `{+, −, ?}`.
    pub classifier: Array2<f64>,
}

impl ModelParams {
    pub fn zeros(dims: ModelDims) -> Self {
        let d = dims.width;
        Self {
            dims,
            centrality: CentralityTables::zeros(dims.max_degree, d),
            walk_weights: Array1::zeros(dims.num_walks),
            layers: (0..dims.layers).map(|_| LayerParams::zeros(d)).collect(),
            classifier: Array2::zeros((2 * d, 3)),
        }
    }

    /// Weight matrices uniform in `±1/√fan_in`, biases zero, layer-norm gains
    /// one, walk weights `1/r`.
    pub fn init(dims: ModelDims, seed: u64) -> Result<Self> {
        dims.validate()?;
        let d = dims.width;
        let mut p = Self::zeros(dims);
        let mut r = rng::rng(seed);
        let mut fill = |a: &mut Array2<f64>, fan_in: usize| {
            let bound = 1.0 / (fan_in as f64).sqrt();
            let dist = Uniform::new_inclusive(-bound, bound);
            a.iter_mut().for_each(|v| *v = dist.sample(&mut r));
        };
        fill(&mut p.centrality.c_pos, d);
        fill(&mut p.centrality.c_neg, d);
        for layer in &mut p.layers {
            layer.ln1_gain.fill(1.0);
            layer.ln2_gain.fill(1.0);
            fill(&mut layer.w_q, d);
            fill(&mut layer.w_k, d);
            fill(&mut layer.w_v, d);
            fill(&mut layer.w_o, d);
            fill(&mut layer.ffn_w1, d);
            fill(&mut layer.ffn_w2, d);
        }
        fill(&mut p.classifier, 2 * d);
        if dims.num_walks > 0 {
            p.walk_weights.fill(1.0 / dims.num_walks as f64);
        }
        Ok(p)
    }

    pub fn zeros_like(&self) -> Self {
        Self::zeros(self.dims)
    }

    /// Named flat views of every tensor, in a fixed order.
    pub fn tensors(&self) -> Vec<(String, &[f64])> {
        fn s<D: ndarray::Dimension>(a: &ndarray::Array<f64, D>) -> &[f64] {
            a.as_slice().expect("standard layout")
        }
        let mut out = vec![
            ("centrality.pos".to_string(), s(&self.centrality.c_pos)),
            ("centrality.neg".to_string(), s(&self.centrality.c_neg)),
            ("walk_weights".to_string(), s(&self.walk_weights)),
        ];
        for (i, l) in self.layers.iter().enumerate() {
            let p = |n: &str| format!("layer{i}.{n}");
            out.extend([
                (p("ln1.gain"), s(&l.ln1_gain)),
                (p("ln1.bias"), s(&l.ln1_bias)),
                (p("attn.w_q"), s(&l.w_q)),
                (p("attn.w_k"), s(&l.w_k)),
                (p("attn.w_v"), s(&l.w_v)),
                (p("attn.w_o"), s(&l.w_o)),
                (p("ln2.gain"), s(&l.ln2_gain)),
                (p("ln2.bias"), s(&l.ln2_bias)),
                (p("ffn.w1"), s(&l.ffn_w1)),
                (p("ffn.b1"), s(&l.ffn_b1)),
                (p("ffn.w2"), s(&l.ffn_w2)),
                (p("ffn.b2"), s(&l.ffn_b2)),
            ]);
        }
        out.push(("classifier".to_string(), s(&self.classifier)));
        out
    }

    /// Mutable counterpart of [`ModelParams::tensors`], same order.
    pub fn tensors_mut(&mut self) -> Vec<(String, &mut [f64])> {
        fn s<D: ndarray::Dimension>(a: &mut ndarray::Array<f64, D>) -> &mut [f64] {
            a.as_slice_mut().expect("standard layout")
        }
        let mut out = vec![
            ("centrality.pos".to_string(), s(&mut self.centrality.c_pos)),
            ("centrality.neg".to_string(), s(&mut self.centrality.c_neg)),
            ("walk_weights".to_string(), s(&mut self.walk_weights)),
        ];
        for (i, l) in self.layers.iter_mut().enumerate() {
            let p = |n: &str| format!("layer{i}.{n}");
            out.extend([
                (p("ln1.gain"), s(&mut l.ln1_gain)),
                (p("ln1.bias"), s(&mut l.ln1_bias)),
                (p("attn.w_q"), s(&mut l.w_q)),
                (p("attn.w_k"), s(&mut l.w_k)),
                (p("attn.w_v"), s(&mut l.w_v)),
                (p("attn.w_o"), s(&mut l.w_o)),
                (p("ln2.gain"), s(&mut l.ln2_gain)),
                (p("ln2.bias"), s(&mut l.ln2_bias)),
                (p("ffn.w1"), s(&mut l.ffn_w1)),
                (p("ffn.b1"), s(&mut l.ffn_b1)),
                (p("ffn.w2"), s(&mut l.ffn_w2)),
                (p("ffn.b2"), s(&mut l.ffn_b2)),
            ]);
        }
        out.push(("classifier".to_string(), s(&mut self.classifier)));
        out
    }

    pub fn num_params(&self) -> usize {
        self.tensors().iter().map(|(_, t)| t.len()).sum()
    }

    pub fn is_finite(&self) -> bool {
        self.tensors()
            .iter()
            .all(|(_, t)| t.iter().all(|v| v.is_finite()))
    }

    pub fn squared_norm(&self) -> f64 {
        self.tensors()
            .iter()
            .flat_map(|(_, t)| t.iter())
            .map(|v| v * v)
            .sum()
    }

    /// `self += alpha * other`, tensor by tensor.
    pub fn axpy(&mut self, alpha: f64, other: &ModelParams) {
        for ((_, dst), (_, src)) in self.tensors_mut().into_iter().zip(other.tensors()) {
            for (a, b) in dst.iter_mut().zip(src) {
                *a += alpha * b;
            }
        }
    }
}

const CKPT_MAGIC: &[u8; 8] = b"SESGCKPT";
const CKPT_VERSION: u32 = 1;

/// Writes parameters plus the hash of the config that produced them.
/// Values are stored as little-endian `f64` bit patterns.
pub fn save_checkpoint(path: impl AsRef<Path>, params: &ModelParams, config_hash: &str) -> Result<()> {
    fs::write(path, encode_checkpoint(params, config_hash))?;
    Ok(())
}

pub fn encode_checkpoint(params: &ModelParams, config_hash: &str) -> Vec<u8> {
    let mut buf = Vec::new();
    buf.extend_from_slice(CKPT_MAGIC);
    buf.extend_from_slice(&CKPT_VERSION.to_le_bytes());
    buf.extend_from_slice(&(config_hash.len() as u32).to_le_bytes());
    buf.extend_from_slice(config_hash.as_bytes());
    let d = params.dims;
    for v in [d.width, d.heads, d.layers, d.max_degree, d.num_walks] {
        buf.extend_from_slice(&(v as u64).to_le_bytes());
    }
    let tensors = params.tensors();
    buf.extend_from_slice(&(tensors.len() as u32).to_le_bytes());
    for (name, data) in tensors {
        buf.extend_from_slice(&(name.len() as u32).to_le_bytes());
        buf.extend_from_slice(name.as_bytes());
        buf.extend_from_slice(&(data.len() as u64).to_le_bytes());
        for v in data {
            buf.extend_from_slice(&v.to_le_bytes());
        }
    }
    buf
}

/// Returns the parameters and the stored config hash.
pub fn load_checkpoint(path: impl AsRef<Path>) -> Result<(ModelParams, String)> {
    decode_checkpoint(&fs::read(path)?)
}

pub fn decode_checkpoint(bytes: &[u8]) -> Result<(ModelParams, String)> {
    let mut cur = Cursor::new(bytes);
    let mut magic = [0u8; 8];
    cur.read_exact(&mut magic)?;
    if &magic != CKPT_MAGIC {
        return Err(Error::Format("not a checkpoint file".into()));
    }
    let version = read_u32(&mut cur)?;
    if version != CKPT_VERSION {
        return Err(Error::Format(format!("unsupported checkpoint version {version}")));
    }
    let hlen = read_u32(&mut cur)? as usize;
    let mut hash = vec![0u8; hlen];
    cur.read_exact(&mut hash)?;
    let hash = String::from_utf8(hash).map_err(|_| Error::Format("config hash is not UTF-8".into()))?;
    let mut dims = [0usize; 5];
    for v in &mut dims {
        *v = read_u64(&mut cur)? as usize;
    }
    let dims = ModelDims {
        width: dims[0],
        heads: dims[1],
        layers: dims[2],
        max_degree: dims[3],
        num_walks: dims[4],
    };
    dims.validate()?;
    let mut params = ModelParams::zeros(dims);
    let count = read_u32(&mut cur)? as usize;
    let mut tensors = params.tensors_mut();
    if count != tensors.len() {
        return Err(Error::Format(format!(
            "checkpoint holds {count} tensors, expected {}",
            tensors.len()
        )));
    }
    for (name, data) in tensors.iter_mut() {
        let nlen = read_u32(&mut cur)? as usize;
        let mut stored = vec![0u8; nlen];
        cur.read_exact(&mut stored)?;
        if stored != name.as_bytes() {
            return Err(Error::Format(format!(
                "tensor {:?} where {name:?} was expected",
                String::from_utf8_lossy(&stored)
            )));
        }
        let len = read_u64(&mut cur)? as usize;
        if len != data.len() {
            return Err(Error::Format(format!(
                "tensor {name} has {len} values, expected {}",
                data.len()
            )));
        }
        for v in data.iter_mut() {
            *v = f64::from_le_bytes({
                let mut b = [0u8; 8];
                cur.read_exact(&mut b)?;
                b
            });
        }
    }
    drop(tensors);
    Ok((params, hash))
}
