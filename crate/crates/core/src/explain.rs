//! Distance-based sign decoder with neighbor explanations.
//!
//! For an edge `(i, j)` the decoder compares `d_ij` against the median
//! distance from `i` to its `K` nearest positive neighbors (`d_ip`) and its
//! `K` farthest negative neighbors (`d_in`), and predicts whichever side
//! `d_ij` is closer to.

use std::cmp::Ordering;
use std::collections::BTreeSet;
use std::io::Write;

use ndarray::ArrayView2;
use rand::seq::SliceRandom;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::{Sign, SignedGraph};
use crate::rng;
use crate::srwr::DiffusionMatrix;

/// Euclidean distance between rows `i` and `j` of `z`.
pub fn pairwise_distance(z: ArrayView2<f64>, i: usize, j: usize) -> f64 {
    z.row(i)
        .iter()
        .zip(z.row(j).iter())
        .map(|(a, b)| (a - b) * (a - b))
        .sum::<f64>()
        .sqrt()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum NeighborSource {
    Adjacency,
    Diffusion,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Neighbor {
    pub id: usize,
    pub dist: f64,
    pub source: NeighborSource,
}

#[derive(Debug, Clone, PartialEq)]
pub struct NeighborContext {
    pub node: usize,
    /// Ascending by distance, ties by id.
    pub k_pos: Vec<Neighbor>,
    /// Descending by distance, ties by id.
    pub k_neg: Vec<Neighbor>,
    pub d_ip: Option<f64>,
    pub d_in: Option<f64>,
}

impl NeighborContext {
    pub fn is_degenerate(&self) -> bool {
        self.k_pos.is_empty() || self.k_neg.is_empty()
    }

    pub fn pos_ids(&self) -> Vec<usize> {
        self.k_pos.iter().map(|n| n.id).collect()
    }

    pub fn neg_ids(&self) -> Vec<usize> {
        self.k_neg.iter().map(|n| n.id).collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DecoderConfig {
    pub k: usize,
    pub n_sample: usize,
    pub seed: u64,
    /// Average the medians of both endpoints instead of using `i` alone.
    pub symmetric: bool,
}

impl Default for DecoderConfig {
    fn default() -> Self {
        Self {
            k: 40,
            n_sample: 200,
            seed: 0,
            symmetric: false,
        }
    }
}

impl DecoderConfig {
    pub fn validate(&self) -> Result<()> {
        if self.k == 0 || self.n_sample < self.k {
            return Err(Error::InvalidParameter(format!(
                "need 1 <= K <= n_sample, got K = {}, n_sample = {}",
                self.k, self.n_sample
            )));
        }
        Ok(())
    }
}

/// Median with the even-length convention of averaging the middle pair.
pub fn median(values: &[f64]) -> Option<f64> {
    if values.is_empty() {
        return None;
    }
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    let m = v.len() / 2;
    Some(if v.len() % 2 == 1 {
        v[m]
    } else {
        0.5 * (v[m - 1] + v[m])
    })
}

fn ascending(a: &Neighbor, b: &Neighbor) -> Ordering {
    a.dist.total_cmp(&b.dist).then(a.id.cmp(&b.id))
}

fn descending(a: &Neighbor, b: &Neighbor) -> Ordering {
    b.dist.total_cmp(&a.dist).then(a.id.cmp(&b.id))
}

fn sample(mut ids: Vec<usize>, limit: usize, rng: &mut rng::Rng) -> Vec<usize> {
    if ids.len() > limit {
        ids.shuffle(rng);
        ids.truncate(limit);
    }
    ids
}

fn measured(z: ArrayView2<f64>, node: usize, ids: &[usize], source: NeighborSource) -> Vec<Neighbor> {
    ids.iter()
        .map(|&id| Neighbor {
            id,
            dist: pairwise_distance(z, node, id),
            source,
        })
        .collect()
}

/// Selects the explanation neighbors of `node`.
///
/// Positive candidates are the positive neighbors in the undirected view of
/// `g`; the diffusion matrix supplies them only when `g` has none. Negative
/// candidates are the negative neighbors of `g`, topped up with the farthest
/// diffusion negatives when fewer than `K` exist. At most `n_sample`
/// candidates per source are drawn without replacement.
pub fn neighbor_context(
    node: usize,
    z: ArrayView2<f64>,
    g: &SignedGraph,
    s: Option<&DiffusionMatrix>,
    cfg: &DecoderConfig,
) -> Result<NeighborContext> {
    cfg.validate()?;
    if node >= g.num_nodes() || z.nrows() != g.num_nodes() {
        return Err(Error::Shape(format!(
            "node {node}, {} embedding rows, {} graph nodes",
            z.nrows(),
            g.num_nodes()
        )));
    }
    let mut rng = rng::substream(cfg.seed, node as u64);
    let by_sign = |sign: Sign| -> Vec<usize> {
        g.neighbors(node)
            .iter()
            .filter(|e| e.1 == sign)
            .map(|e| e.0)
            .collect()
    };

    let mut pos_ids = by_sign(Sign::Positive);
    let mut pos_source = NeighborSource::Adjacency;
    if pos_ids.is_empty() {
        if let Some(s) = s {
            pos_ids = s.with_sign(node, Sign::Positive);
            pos_source = NeighborSource::Diffusion;
        }
    }
    let pos_ids = sample(pos_ids, cfg.n_sample, &mut rng);
    let mut k_pos = measured(z, node, &pos_ids, pos_source);
    k_pos.sort_by(ascending);
    k_pos.truncate(cfg.k);

    let neg_a = sample(by_sign(Sign::Negative), cfg.n_sample, &mut rng);
    let mut k_neg = measured(z, node, &neg_a, NeighborSource::Adjacency);
    k_neg.sort_by(descending);
    k_neg.truncate(cfg.k);
    if k_neg.len() < cfg.k {
        if let Some(s) = s {
            let taken: BTreeSet<usize> = neg_a.iter().copied().collect();
            let extra: Vec<usize> = s
                .with_sign(node, Sign::Negative)
                .into_iter()
                .filter(|id| !taken.contains(id))
                .collect();
            let extra = sample(extra, cfg.n_sample, &mut rng);
            let mut extra = measured(z, node, &extra, NeighborSource::Diffusion);
            extra.sort_by(descending);
            extra.truncate(cfg.k - k_neg.len());
            k_neg.extend(extra);
            k_neg.sort_by(descending);
        }
    }

    let dists = |v: &[Neighbor]| v.iter().map(|n| n.dist).collect::<Vec<_>>();
    Ok(NeighborContext {
        node,
        d_ip: median(&dists(&k_pos)),
        d_in: median(&dists(&k_neg)),
        k_pos,
        k_neg,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExplainedPrediction {
    pub i: usize,
    pub j: usize,
    pub predicted_sign: Sign,
    pub d_ij: f64,
    pub context: NeighborContext,
    /// `|d_ij − d_ip| − |d_ij − d_in|`; absent when the context is degenerate.
    pub margin: Option<f64>,
    /// Either side was empty, so the sign fell back to the majority class.
    pub degenerate: bool,
    /// `d_ij` was exactly equidistant from both medians.
    pub tie: bool,
}

/// The closer-median rule on precomputed medians. Ties go to `+`.
pub fn decide(d_ij: f64, d_ip: f64, d_in: f64) -> (Sign, f64) {
    let margin = (d_ij - d_ip).abs() - (d_ij - d_in).abs();
    let sign = if margin <= 0.0 { Sign::Positive } else { Sign::Negative };
    (sign, margin)
}

pub fn predict_sign(
    i: usize,
    j: usize,
    z: ArrayView2<f64>,
    context: NeighborContext,
    majority: Sign,
) -> ExplainedPrediction {
    predict_with_medians(i, j, z, context.d_ip, context.d_in, context, majority)
}

/// Like [`predict_sign`] but averages each median over the contexts of both
/// endpoints, using whichever side is available.
pub fn predict_sign_symmetric(
    i: usize,
    j: usize,
    z: ArrayView2<f64>,
    context_i: NeighborContext,
    context_j: &NeighborContext,
    majority: Sign,
) -> ExplainedPrediction {
    let avg = |a: Option<f64>, b: Option<f64>| match (a, b) {
        (Some(x), Some(y)) => Some(0.5 * (x + y)),
        (x, y) => x.or(y),
    };
    let d_ip = avg(context_i.d_ip, context_j.d_ip);
    let d_in = avg(context_i.d_in, context_j.d_in);
    predict_with_medians(i, j, z, d_ip, d_in, context_i, majority)
}

fn predict_with_medians(
    i: usize,
    j: usize,
    z: ArrayView2<f64>,
    d_ip: Option<f64>,
    d_in: Option<f64>,
    context: NeighborContext,
    majority: Sign,
) -> ExplainedPrediction {
    let d_ij = pairwise_distance(z, i, j);
    match (d_ip, d_in) {
        (Some(p), Some(n)) => {
            let (sign, margin) = decide(d_ij, p, n);
            ExplainedPrediction {
                i,
                j,
                predicted_sign: sign,
                d_ij,
                context,
                margin: Some(margin),
                degenerate: false,
                tie: margin == 0.0,
            }
        }
        _ => ExplainedPrediction {
            i,
            j,
            predicted_sign: majority,
            d_ij,
            context,
            margin: None,
            degenerate: true,
            tie: false,
        },
    }
}

/// Explains every edge in `queries`, building each source context once.
pub fn explain_edges(
    queries: &[(usize, usize)],
    z: ArrayView2<f64>,
    g: &SignedGraph,
    s: Option<&DiffusionMatrix>,
    cfg: &DecoderConfig,
    majority: Sign,
) -> Result<Vec<ExplainedPrediction>> {
    cfg.validate()?;
    let mut nodes: Vec<usize> = queries.iter().flat_map(|&(i, j)| [i, j]).collect();
    nodes.sort_unstable();
    nodes.dedup();
    let contexts: Vec<NeighborContext> = nodes
        .par_iter()
        .map(|&u| neighbor_context(u, z, g, s, cfg))
        .collect::<Result<_>>()?;
    let ctx = |u: usize| &contexts[nodes.binary_search(&u).expect("context built")];
    Ok(queries
        .par_iter()
        .map(|&(i, j)| {
            if cfg.symmetric {
                predict_sign_symmetric(i, j, z, ctx(i).clone(), ctx(j), majority)
            } else {
                predict_sign(i, j, z, ctx(i).clone(), majority)
            }
        })
        .collect())
}

/// Reference neighbor sets: per node, the `K` nearest and the `K` farthest
/// other nodes under `z_ref`, ties broken by smaller id.
pub fn ground_truth_explanations(z_ref: ArrayView2<f64>, k: usize) -> Result<Vec<(Vec<usize>, Vec<usize>)>> {
    let n = z_ref.nrows();
    if k == 0 || k >= n {
        return Err(Error::InvalidParameter(format!(
            "K = {k} must satisfy 1 <= K < {n} nodes"
        )));
    }
    Ok((0..n)
        .into_par_iter()
        .map(|u| {
            let mut others: Vec<Neighbor> = (0..n)
                .filter(|&v| v != u)
                .map(|v| Neighbor {
                    id: v,
                    dist: pairwise_distance(z_ref, u, v),
                    source: NeighborSource::Adjacency,
                })
                .collect();
            others.sort_by(ascending);
            let near = others[..k].iter().map(|x| x.id).collect();
            others.sort_by(descending);
            let far = others[..k].iter().map(|x| x.id).collect();
            (near, far)
        })
        .collect())
}

/// Mean over nodes and over the two sides of `|predicted ∩ truth| / K`.
pub fn precision_at_k(predicted: &[(Vec<usize>, Vec<usize>)], truth: &[(Vec<usize>, Vec<usize>)], k: usize) -> f64 {
    if predicted.is_empty() || k == 0 {
        return 0.0;
    }
    let overlap = |a: &[usize], b: &[usize]| {
        let b: BTreeSet<usize> = b.iter().copied().collect();
        a.iter().collect::<BTreeSet<_>>().into_iter().filter(|x| b.contains(x)).count()
    };
    // integer hits keep the result independent of summation order
    let hits: usize = predicted
        .iter()
        .zip(truth)
        .map(|((pp, pn), (tp, tn))| overlap(pp, tp) + overlap(pn, tn))
        .sum();
    hits as f64 / (2 * k * predicted.len()) as f64
}

/// One line of the explanations file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExplanationRecord {
    pub i: u64,
    pub j: u64,
    pub predicted_sign: i8,
    pub d_ij: f64,
    pub d_ip: Option<f64>,
    pub d_in: Option<f64>,
    pub k_pos: Vec<NeighborRecord>,
    pub k_neg: Vec<NeighborRecord>,
    pub degenerate: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NeighborRecord {
    pub id: u64,
    pub dist: f64,
    pub source: NeighborSource,
}

impl ExplanationRecord {
    /// Ids are reported in the graph's original numbering.
    pub fn new(p: &ExplainedPrediction, g: &SignedGraph) -> Self {
        let list = |v: &[Neighbor]| {
            v.iter()
                .map(|n| NeighborRecord {
                    id: g.original_id(n.id),
                    dist: n.dist,
                    source: n.source,
                })
                .collect()
        };
        Self {
            i: g.original_id(p.i),
            j: g.original_id(p.j),
            predicted_sign: p.predicted_sign.value(),
            d_ij: p.d_ij,
            d_ip: p.context.d_ip,
            d_in: p.context.d_in,
            k_pos: list(&p.context.k_pos),
            k_neg: list(&p.context.k_neg),
            degenerate: p.degenerate,
        }
    }
}

pub fn write_explanations<W: Write>(mut w: W, predictions: &[ExplainedPrediction], g: &SignedGraph) -> Result<()> {
    for p in predictions {
        serde_json::to_writer(&mut w, &ExplanationRecord::new(p, g))?;
        w.write_all(b"\n")?;
    }
    Ok(())
}

/// Abstraction over sign decoders so callers can swap in a stub.
pub trait EdgeDecoder {
    fn predict(&self, i: usize, j: usize) -> Result<Sign>;
}

/// The median-distance decoder bound to frozen embeddings and graphs.
pub struct MedianDecoder<'a> {
    pub z: ArrayView2<'a, f64>,
    pub graph: &'a SignedGraph,
    pub diffusion: Option<&'a DiffusionMatrix>,
    pub config: DecoderConfig,
    pub majority: Sign,
}

impl EdgeDecoder for MedianDecoder<'_> {
    fn predict(&self, i: usize, j: usize) -> Result<Sign> {
        let ci = neighbor_context(i, self.z, self.graph, self.diffusion, &self.config)?;
        if self.config.symmetric {
            let cj = neighbor_context(j, self.z, self.graph, self.diffusion, &self.config)?;
            Ok(predict_sign_symmetric(i, j, self.z, ci, &cj, self.majority).predicted_sign)
        } else {
            Ok(predict_sign(i, j, self.z, ci, self.majority).predicted_sign)
        }
    }
}
