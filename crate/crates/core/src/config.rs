//! Run configuration: a flat TOML file whose keys mirror the model's
//! hyperparameters.

use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::encodings::WalkConfig;
use crate::error::{Error, Result};
use crate::explain::DecoderConfig;
use crate::graph::{LoadOptions, SyntheticConfig};
use crate::model::ModelDims;
use crate::srwr::SrwrConfig;
use crate::training::{AdamConfig, LossConfig, TrainConfig};
use crate::transformer::{Activation, EncoderOptions};

/// Every key is optional; missing keys take the defaults below.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Config {
    /// `"synthetic"` or a path to an edge list.
    pub dataset: String,
    pub undirected: bool,
    pub compact_ids: bool,
    pub ratio: f64,
    /// Not part of the config hash.
    pub out_dir: PathBuf,

    pub d: usize,
    pub layers: usize,
    pub heads: usize,
    #[serde(rename = "D")]
    pub max_degree: usize,
    pub r: usize,
    pub l: usize,
    pub m_max: usize,
    pub activation: Activation,
    pub max_nodes: usize,
    pub use_centrality: bool,
    pub use_adjacency_bias: bool,
    pub use_walk_bias: bool,

    pub lr: f64,
    pub weight_decay: f64,
    pub decoupled_weight_decay: f64,
    pub lambda: f64,
    pub no_link_ratio: f64,
    pub class_weights: Option<[f64; 3]>,
    pub max_epochs: usize,
    pub patience: usize,
    pub tol: f64,
    pub seed: u64,

    #[serde(rename = "K")]
    pub k: usize,
    pub n_sample: usize,
    pub symmetric_decoder: bool,
    pub use_diffusion: bool,

    pub srwr_c: f64,
    pub srwr_beta: f64,
    pub srwr_gamma: f64,
    pub srwr_tol: f64,
    pub srwr_max_iters: usize,
    pub threshold_p: f64,
    pub threshold_n: f64,

    pub synthetic_nodes_per_block: usize,
    pub synthetic_blocks: usize,
    pub synthetic_p_intra: f64,
    pub synthetic_p_inter: f64,
    pub synthetic_noise: f64,
    pub synthetic_seed: u64,

    /// Also write a plain-text table next to the JSON report.
    pub text_report: bool,
}

impl Default for Config {
    fn default() -> Self {
        let syn = SyntheticConfig::default();
        let srwr = SrwrConfig::default();
        let walk = WalkConfig::default();
        Self {
            dataset: "synthetic".into(),
            undirected: false,
            compact_ids: false,
            ratio: 0.8,
            out_dir: PathBuf::from("out"),
            d: 128,
            layers: 1,
            heads: 4,
            max_degree: 10,
            r: walk.num_walks,
            l: walk.walk_length,
            m_max: walk.max_path_length,
            activation: Activation::Gelu,
            max_nodes: EncoderOptions::default().max_nodes,
            use_centrality: true,
            use_adjacency_bias: true,
            use_walk_bias: true,
            lr: 1e-3,
            weight_decay: 5e-4,
            decoupled_weight_decay: 0.0,
            lambda: 5.0,
            no_link_ratio: 1.0,
            class_weights: None,
            max_epochs: 200,
            patience: 20,
            tol: 1e-4,
            seed: 0,
            k: 40,
            n_sample: 200,
            symmetric_decoder: false,
            use_diffusion: true,
            srwr_c: srwr.restart_c,
            srwr_beta: srwr.beta,
            srwr_gamma: srwr.gamma,
            srwr_tol: srwr.tol,
            srwr_max_iters: srwr.max_iters,
            threshold_p: srwr.threshold_p,
            threshold_n: srwr.threshold_n,
            synthetic_nodes_per_block: syn.nodes_per_block,
            synthetic_blocks: syn.blocks,
            synthetic_p_intra: syn.p_intra,
            synthetic_p_inter: syn.p_inter,
            synthetic_noise: syn.flip_noise,
            synthetic_seed: syn.seed,
            text_report: false,
        }
    }
}

impl Config {
    pub fn from_toml_str(text: &str) -> Result<Self> {
        let cfg: Config = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = fs::read_to_string(path)
            .map_err(|e| Error::Config(format!("cannot read {}: {e}", path.display())))?;
        Self::from_toml_str(&text)
    }

    pub fn to_toml_string(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }

    pub fn validate(&self) -> Result<()> {
        let wrap = |e: Error| Error::Config(e.to_string());
        self.dims().validate().map_err(wrap)?;
        self.train_config().loss.validate().map_err(wrap)?;
        self.srwr_config().validate().map_err(wrap)?;
        self.decoder_config().validate().map_err(wrap)?;
        if !(self.ratio > 0.0 && self.ratio < 1.0) {
            return Err(Error::Config(format!("ratio {} must lie in (0, 1)", self.ratio)));
        }
        if self.r == 0 || self.l == 0 {
            return Err(Error::Config("r and l must be positive".into()));
        }
        if !(self.lr > 0.0) || !(self.tol >= 0.0) || !(self.decoupled_weight_decay >= 0.0) {
            return Err(Error::Config("lr must be positive, tol and decay non-negative".into()));
        }
        if self.dataset.is_empty() {
            return Err(Error::Config("dataset must be \"synthetic\" or a path".into()));
        }
        Ok(())
    }

    /// Hex digest of every setting that affects results, so `out_dir` and
    /// `text_report` are left out.
    pub fn hash(&self) -> String {
        let mut canonical = self.clone();
        canonical.out_dir = PathBuf::new();
        canonical.text_report = false;
        let json = serde_json::to_vec(&canonical).expect("config serializes");
        hex::encode(&Sha256::digest(&json)[..8])
    }

    pub fn is_synthetic(&self) -> bool {
        self.dataset == "synthetic"
    }

    pub fn load_options(&self) -> LoadOptions {
        LoadOptions {
            undirected: self.undirected,
            compact: self.compact_ids,
        }
    }

    pub fn synthetic_config(&self) -> SyntheticConfig {
        SyntheticConfig {
            nodes_per_block: self.synthetic_nodes_per_block,
            blocks: self.synthetic_blocks,
            p_intra: self.synthetic_p_intra,
            p_inter: self.synthetic_p_inter,
            flip_noise: self.synthetic_noise,
            seed: self.synthetic_seed,
        }
    }

    pub fn dims(&self) -> ModelDims {
        ModelDims {
            width: self.d,
            heads: self.heads,
            layers: self.layers,
            max_degree: self.max_degree,
            num_walks: self.r,
        }
    }

    pub fn walk_config(&self) -> WalkConfig {
        WalkConfig {
            num_walks: self.r,
            walk_length: self.l,
            max_path_length: self.m_max,
            seed: self.seed,
        }
    }

    pub fn encoder_options(&self) -> EncoderOptions {
        EncoderOptions {
            activation: self.activation,
            use_centrality: self.use_centrality,
            use_adjacency_bias: self.use_adjacency_bias,
            use_walk_bias: self.use_walk_bias,
            max_nodes: self.max_nodes,
        }
    }

    pub fn train_config(&self) -> TrainConfig {
        TrainConfig {
            dims: self.dims(),
            encoder: self.encoder_options(),
            loss: LossConfig {
                class_weights: self.class_weights,
                lambda: self.lambda,
                weight_decay: self.weight_decay,
                no_link_ratio: self.no_link_ratio,
            },
            adam: AdamConfig {
                lr: self.lr,
                decoupled_weight_decay: self.decoupled_weight_decay,
                ..AdamConfig::default()
            },
            max_epochs: self.max_epochs,
            patience: self.patience,
            tol: self.tol,
            seed: self.seed,
        }
    }

    pub fn srwr_config(&self) -> SrwrConfig {
        SrwrConfig {
            restart_c: self.srwr_c,
            beta: self.srwr_beta,
            gamma: self.srwr_gamma,
            tol: self.srwr_tol,
            max_iters: self.srwr_max_iters,
            threshold_p: self.threshold_p,
            threshold_n: self.threshold_n,
        }
    }

    pub fn decoder_config(&self) -> DecoderConfig {
        DecoderConfig {
            k: self.k,
            n_sample: self.n_sample,
            seed: self.seed,
            symmetric: self.symmetric_decoder,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_file_gives_defaults() {
        let c = Config::from_toml_str("").unwrap();
        assert_eq!(c, Config::default());
        assert_eq!(c.d, 128);
        assert_eq!(c.k, 40);
        assert_eq!(c.n_sample, 200);
    }

    #[test]
    fn documented_keys_parse() {
        let c = Config::from_toml_str(
            "d = 32\nlayers = 2\nheads = 2\nlr = 0.01\nweight_decay = 0.0\nlambda = 1.0\nK = 5\n\
             n_sample = 50\nD = 6\nr = 4\nl = 10\nm_max = 10\nseed = 9\nmax_epochs = 3\npatience = 2\n",
        )
        .unwrap();
        assert_eq!((c.d, c.layers, c.heads, c.k, c.max_degree, c.r), (32, 2, 2, 5, 6, 4));
        assert_eq!((c.l, c.m_max, c.seed, c.max_epochs, c.patience), (10, 10, 9, 3, 2));
    }

    #[test]
    fn unknown_key_is_a_config_error() {
        assert!(matches!(Config::from_toml_str("dimension = 3"), Err(Error::Config(_))));
        assert!(matches!(Config::from_toml_str("heads = 3"), Err(Error::Config(_))));
    }

    #[test]
    fn hash_ignores_output_directory() {
        let a = Config::default();
        let mut b = a.clone();
        b.out_dir = "elsewhere".into();
        assert_eq!(a.hash(), b.hash());
        b.seed = 1;
        assert_ne!(a.hash(), b.hash());
    }

    #[test]
    fn toml_roundtrip() {
        let mut c = Config::default();
        c.class_weights = Some([1.0, 2.0, 0.5]);
        assert_eq!(Config::from_toml_str(&c.to_toml_string()).unwrap(), c);
    }
}
