//! Non-backtracking signed random walks and the walk-distance encoding.

use std::collections::BTreeMap;
use std::fs;
use std::io::{Cursor, Read};
use std::path::Path;

use ndarray::Array2;
use rand::Rng as _;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::graph::{Sign, SignedGraph};
use crate::rng;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct WalkConfig {
    /// Walks per start node (`r`).
    pub num_walks: usize,
    /// Steps per walk (`l`); a walk holds at most `l + 1` nodes.
    pub walk_length: usize,
    /// Largest distance kept; farther or absent pairs read as `max_path_length + 1`.
    pub max_path_length: usize,
    pub seed: u64,
}

impl Default for WalkConfig {
    fn default() -> Self {
        Self {
            num_walks: 8,
            walk_length: 20,
            max_path_length: 20,
            seed: 0,
        }
    }
}

/// `walks[node][k]` is the k-th walk started at `node`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct WalkSet {
    pub walks: Vec<Vec<Vec<usize>>>,
    pub config: WalkConfig,
}

impl WalkSet {
    pub fn num_nodes(&self) -> usize {
        self.walks.len()
    }
}

/// Samples `r` walks from every node over the undirected view.
///
/// The next node is uniform over the current node's neighbors minus the
/// predecessor; the predecessor is allowed only when it is the sole
/// neighbor. A walk stops early when the current node has no neighbors.
/// Each start node draws from its own substream of `seed`.
pub fn sample_signed_walks(g: &SignedGraph, cfg: &WalkConfig) -> Result<WalkSet> {
    if cfg.walk_length < 1 {
        return Err(Error::InvalidParameter("walk length must be >= 1".into()));
    }
    let walks = (0..g.num_nodes())
        .into_par_iter()
        .map(|start| {
            let mut r = rng::substream(cfg.seed, start as u64);
            (0..cfg.num_walks)
                .map(|_| walk_from(g, start, cfg.walk_length, &mut r))
                .collect()
        })
        .collect();
    Ok(WalkSet {
        walks,
        config: *cfg,
    })
}

fn walk_from(g: &SignedGraph, start: usize, steps: usize, r: &mut rng::Rng) -> Vec<usize> {
    let mut walk = Vec::with_capacity(steps + 1);
    walk.push(start);
    let mut prev: Option<usize> = None;
    let mut cur = start;
    for _ in 0..steps {
        let nbrs = g.neighbors(cur);
        let next = match (nbrs.len(), prev) {
            (0, _) => break,
            (1, _) | (_, None) => nbrs[r.gen_range(0..nbrs.len())].0,
            (len, Some(p)) => {
                // predecessor is a neighbor here, so exclude it
                let k = r.gen_range(0..len - 1);
                let mut it = nbrs.iter().map(|&(v, _)| v).filter(|&v| v != p);
                it.nth(k).expect("non-predecessor neighbor")
            }
        };
        walk.push(next);
        prev = Some(cur);
        cur = next;
    }
    walk
}

fn prefix_signs(walk: &[usize], g: &SignedGraph) -> Result<Vec<Sign>> {
    let mut prefix = Vec::with_capacity(walk.len());
    prefix.push(Sign::Positive);
    for w in walk.windows(2) {
        let s = g.undirected_sign(w[0], w[1]).ok_or_else(|| {
            Error::InvalidParameter(format!("walk step {} -> {} is not an edge", w[0], w[1]))
        })?;
        let last = *prefix.last().expect("non-empty");
        prefix.push(last.times(s));
    }
    Ok(prefix)
}

fn signed(prefix: &[Sign], a: usize, b: usize) -> i64 {
    let dist = a.abs_diff(b) as i64;
    dist * prefix[a].times(prefix[b]).value() as i64
}

/// Signed walk distance ψ for every ordered pair co-occurring in `walk`.
///
/// For `q_m = v_i`, `q_n = v_j`, ψ is `|m − n|` times the product of edge
/// signs between the two positions. Among several co-occurrences the
/// smallest `|m − n|` wins, ties going to the earliest `n`. Distances above
/// `max_path_length` are reported as `max_path_length + 1`.
pub fn signed_walk_distances(
    walk: &[usize],
    g: &SignedGraph,
    max_path_length: usize,
) -> Result<BTreeMap<(usize, usize), i64>> {
    let prefix = prefix_signs(walk, g)?;
    let mut best: BTreeMap<(usize, usize), (usize, usize, i64)> = BTreeMap::new();
    for (m, &vi) in walk.iter().enumerate() {
        for (n, &vj) in walk.iter().enumerate() {
            let d = m.abs_diff(n);
            let slot = best.entry((vi, vj)).or_insert((usize::MAX, usize::MAX, 0));
            if d < slot.0 || (d == slot.0 && n < slot.1) {
                *slot = (d, n, signed(&prefix, m, n));
            }
        }
    }
    let cap = max_path_length as i64 + 1;
    Ok(best
        .into_iter()
        .map(|(k, (d, _, psi))| (k, if d > max_path_length { cap } else { psi }))
        .collect())
}

/// ψ from `source` to every node in `walk`, same reduction as
/// [`signed_walk_distances`].
pub fn distances_from(
    walk: &[usize],
    source: usize,
    g: &SignedGraph,
    max_path_length: usize,
) -> Result<Vec<(usize, i64)>> {
    let prefix = prefix_signs(walk, g)?;
    let mut best: BTreeMap<usize, (usize, usize, i64)> = BTreeMap::new();
    for m in walk
        .iter()
        .enumerate()
        .filter(|&(_, &v)| v == source)
        .map(|(m, _)| m)
    {
        for (n, &vj) in walk.iter().enumerate() {
            let d = m.abs_diff(n);
            let slot = best.entry(vj).or_insert((usize::MAX, usize::MAX, 0));
            if d < slot.0 || (d == slot.0 && n < slot.1) {
                *slot = (d, n, signed(&prefix, m, n));
            }
        }
    }
    let cap = max_path_length as i64 + 1;
    Ok(best
        .into_iter()
        .map(|(v, (d, _, psi))| (v, if d > max_path_length { cap } else { psi }))
        .collect())
}

/// Reciprocal walk distances, one dense matrix per walk index.
///
/// `inv_psi[k][[i, j]] = 1 / ψ_k(i, j)` where ψ_k is read from the k-th walk
/// started at `i`. Self pairs hold 0; pairs that never co-occur hold
/// `1 / (max_path_length + 1)`.
#[derive(Debug, Clone, PartialEq)]
pub struct WalkEncoding {
    pub inv_psi: Vec<Array2<f64>>,
    pub max_path_length: usize,
}

impl WalkEncoding {
    pub fn from_walks(walks: &WalkSet, g: &SignedGraph) -> Result<Self> {
        let n = g.num_nodes();
        if walks.num_nodes() != n {
            return Err(Error::Shape(format!(
                "walk set covers {} nodes, graph has {}",
                walks.num_nodes(),
                n
            )));
        }
        let m_max = walks.config.max_path_length;
        let unreachable = 1.0 / (m_max as f64 + 1.0);
        let r = walks.config.num_walks;
        let mut inv_psi = vec![Array2::from_elem((n, n), unreachable); r];
        for (i, node_walks) in walks.walks.iter().enumerate() {
            for (k, walk) in node_walks.iter().enumerate() {
                let mat = &mut inv_psi[k];
                for (j, psi) in distances_from(walk, i, g, m_max)? {
                    mat[[i, j]] = if psi == 0 { 0.0 } else { 1.0 / psi as f64 };
                }
                mat[[i, i]] = 0.0;
            }
        }
        Ok(Self {
            inv_psi,
            max_path_length: m_max,
        })
    }

    pub fn num_walks(&self) -> usize {
        self.inv_psi.len()
    }

    /// `b(i, j) = Σ_k w_k / ψ_k(i, j)`.
    pub fn bias(&self, weights: &[f64]) -> Result<Array2<f64>> {
        if weights.len() != self.inv_psi.len() {
            return Err(Error::Shape(format!(
                "{} walk weights for {} walks",
                weights.len(),
                self.inv_psi.len()
            )));
        }
        let n = self.inv_psi.first().map_or(0, |m| m.nrows());
        let mut out = Array2::zeros((n, n));
        for (w, m) in weights.iter().zip(&self.inv_psi) {
            out.scaled_add(*w, m);
        }
        Ok(out)
    }
}

const WALK_MAGIC: &[u8; 8] = b"SESGWALK";
const WALK_VERSION: u32 = 1;

/// Writes the walk set with a header binding it to a graph fingerprint.
pub fn save_walks(path: impl AsRef<Path>, walks: &WalkSet, fingerprint: &str) -> Result<()> {
    let mut buf = Vec::new();
    buf.extend_from_slice(WALK_MAGIC);
    buf.extend_from_slice(&WALK_VERSION.to_le_bytes());
    buf.extend_from_slice(&(fingerprint.len() as u32).to_le_bytes());
    buf.extend_from_slice(fingerprint.as_bytes());
    let c = &walks.config;
    for v in [
        c.num_walks as u64,
        c.walk_length as u64,
        c.max_path_length as u64,
        c.seed,
        walks.num_nodes() as u64,
    ] {
        buf.extend_from_slice(&v.to_le_bytes());
    }
    for node_walks in &walks.walks {
        for walk in node_walks {
            buf.extend_from_slice(&(walk.len() as u32).to_le_bytes());
            for &v in walk {
                buf.extend_from_slice(&(v as u32).to_le_bytes());
            }
        }
    }
    fs::write(path, buf)?;
    Ok(())
}

/// Loads a cached walk set. Returns `Ok(None)` when the cache was written
/// for a different graph or configuration.
pub fn load_walks(
    path: impl AsRef<Path>,
    fingerprint: &str,
    cfg: &WalkConfig,
) -> Result<Option<WalkSet>> {
    let bytes = fs::read(path)?;
    let mut cur = Cursor::new(bytes.as_slice());
    let mut magic = [0u8; 8];
    cur.read_exact(&mut magic)?;
    if &magic != WALK_MAGIC {
        return Err(Error::Format("not a walk cache file".into()));
    }
    if read_u32(&mut cur)? != WALK_VERSION {
        return Ok(None);
    }
    let flen = read_u32(&mut cur)? as usize;
    let mut fp = vec![0u8; flen];
    cur.read_exact(&mut fp)?;
    let header = [
        read_u64(&mut cur)?,
        read_u64(&mut cur)?,
        read_u64(&mut cur)?,
        read_u64(&mut cur)?,
    ];
    let n = read_u64(&mut cur)? as usize;
    let want = [
        cfg.num_walks as u64,
        cfg.walk_length as u64,
        cfg.max_path_length as u64,
        cfg.seed,
    ];
    if fp != fingerprint.as_bytes() || header != want {
        return Ok(None);
    }
    let mut walks = Vec::with_capacity(n);
    for _ in 0..n {
        let mut node_walks = Vec::with_capacity(cfg.num_walks);
        for _ in 0..cfg.num_walks {
            let len = read_u32(&mut cur)? as usize;
            let walk = (0..len)
                .map(|_| read_u32(&mut cur).map(|v| v as usize))
                .collect::<std::io::Result<Vec<_>>>()?;
            node_walks.push(walk);
        }
        walks.push(node_walks);
    }
    Ok(Some(WalkSet {
        walks,
        config: *cfg,
    }))
}

pub(crate) fn read_u32(cur: &mut impl Read) -> std::io::Result<u32> {
    let mut b = [0u8; 4];
    cur.read_exact(&mut b)?;
    Ok(u32::from_le_bytes(b))
}

pub(crate) fn read_u64(cur: &mut impl Read) -> std::io::Result<u64> {
    let mut b = [0u8; 8];
    cur.read_exact(&mut b)?;
    Ok(u64::from_le_bytes(b))
}
