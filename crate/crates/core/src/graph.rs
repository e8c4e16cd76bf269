//! Signed graph data model, edge-list ingestion, splitting and synthetic generation.

use std::collections::{BTreeMap, HashMap};
use std::fmt;
use std::fs;
use std::io::{BufRead, BufReader, Read, Write};
use std::path::{Path, PathBuf};

use rand::seq::SliceRandom;
use rand::Rng as _;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::rng;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Sign {
    Positive,
    Negative,
}

impl Sign {
    pub fn value(self) -> i8 {
        match self {
            Sign::Positive => 1,
            Sign::Negative => -1,
        }
    }

    pub fn as_f64(self) -> f64 {
        self.value() as f64
    }

    pub fn from_value(v: i64) -> Option<Sign> {
        match v {
            1 => Some(Sign::Positive),
            -1 => Some(Sign::Negative),
            _ => None,
        }
    }

    pub fn flip(self) -> Sign {
        match self {
            Sign::Positive => Sign::Negative,
            Sign::Negative => Sign::Positive,
        }
    }

    /// Sign of a product of two signed quantities.
    pub fn times(self, other: Sign) -> Sign {
        if self == other {
            Sign::Positive
        } else {
            Sign::Negative
        }
    }
}

impl fmt::Display for Sign {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.value())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct SignedEdge {
    pub src: usize,
    pub dst: usize,
    pub sign: Sign,
}

impl SignedEdge {
    pub fn new(src: usize, dst: usize, sign: Sign) -> Self {
        Self { src, dst, sign }
    }
}

/// A directed signed graph with disjoint positive and negative edge sets.
///
/// Immutable once built. Besides the directed out-lists the graph keeps an
/// undirected view, used by the walk sampler, the shortest-path encoding and
/// the explainable decoder. When both `(i, j)` and `(j, i)` exist with
/// opposite signs the undirected view records the pair as negative.
#[derive(Debug, Clone, PartialEq)]
pub struct SignedGraph {
    num_nodes: usize,
    edges: Vec<SignedEdge>,
    out: Vec<Vec<(usize, Sign)>>,
    undirected: Vec<Vec<(usize, Sign)>>,
    original_ids: Option<Vec<u64>>,
}

impl SignedGraph {
    /// Builds a graph from directed edges. Identical duplicates collapse;
    /// self-loops and a pair carrying both signs are rejected.
    pub fn from_edges<I>(num_nodes: usize, edges: I) -> Result<Self>
    where
        I: IntoIterator<Item = SignedEdge>,
    {
        let mut map: BTreeMap<(usize, usize), Sign> = BTreeMap::new();
        for e in edges {
            if e.src >= num_nodes || e.dst >= num_nodes {
                return Err(Error::InvalidParameter(format!(
                    "edge ({}, {}) out of range for {} nodes",
                    e.src, e.dst, num_nodes
                )));
            }
            if e.src == e.dst {
                return Err(Error::Constraint(format!("self-loop on node {}", e.src)));
            }
            match map.insert((e.src, e.dst), e.sign) {
                Some(prev) if prev != e.sign => {
                    return Err(Error::Constraint(format!(
                        "edge ({}, {}) is both positive and negative",
                        e.src, e.dst
                    )));
                }
                _ => {}
            }
        }
        let edges: Vec<SignedEdge> = map
            .into_iter()
            .map(|((src, dst), sign)| SignedEdge { src, dst, sign })
            .collect();
        Ok(Self::from_sorted_unique(num_nodes, edges, None))
    }

    fn from_sorted_unique(
        num_nodes: usize,
        edges: Vec<SignedEdge>,
        original_ids: Option<Vec<u64>>,
    ) -> Self {
        let mut out = vec![Vec::new(); num_nodes];
        for e in &edges {
            out[e.src].push((e.dst, e.sign));
        }
        let mut und: Vec<BTreeMap<usize, Sign>> = vec![BTreeMap::new(); num_nodes];
        for e in &edges {
            for (a, b) in [(e.src, e.dst), (e.dst, e.src)] {
                let slot = und[a].entry(b).or_insert(e.sign);
                if e.sign == Sign::Negative {
                    *slot = Sign::Negative;
                }
            }
        }
        let undirected = und
            .into_iter()
            .map(|m| m.into_iter().collect())
            .collect();
        Self {
            num_nodes,
            edges,
            out,
            undirected,
            original_ids,
        }
    }

    /// Same node set (and id side table) with a different edge set.
    pub fn with_edges<I>(&self, edges: I) -> Result<Self>
    where
        I: IntoIterator<Item = SignedEdge>,
    {
        let mut g = Self::from_edges(self.num_nodes, edges)?;
        g.original_ids = self.original_ids.clone();
        Ok(g)
    }

    /// Adds the reverse of every edge.
    pub fn mirrored(&self) -> Result<Self> {
        let edges = self
            .edges
            .iter()
            .flat_map(|e| [*e, SignedEdge::new(e.dst, e.src, e.sign)]);
        self.with_edges(edges)
    }

    pub fn num_nodes(&self) -> usize {
        self.num_nodes
    }

    pub fn num_edges(&self) -> usize {
        self.edges.len()
    }

    /// Edges sorted by `(src, dst)`.
    pub fn edges(&self) -> &[SignedEdge] {
        &self.edges
    }

    pub fn pos_edges(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        self.edges
            .iter()
            .filter(|e| e.sign == Sign::Positive)
            .map(|e| (e.src, e.dst))
    }

    pub fn neg_edges(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        self.edges
            .iter()
            .filter(|e| e.sign == Sign::Negative)
            .map(|e| (e.src, e.dst))
    }

    pub fn num_pos(&self) -> usize {
        self.pos_edges().count()
    }

    pub fn num_neg(&self) -> usize {
        self.neg_edges().count()
    }

    pub fn out_neighbors(&self, node: usize) -> &[(usize, Sign)] {
        &self.out[node]
    }

    /// Neighbors in the undirected view, sorted by id.
    pub fn neighbors(&self, node: usize) -> &[(usize, Sign)] {
        &self.undirected[node]
    }

    /// Sign of the directed edge `src -> dst`.
    pub fn sign(&self, src: usize, dst: usize) -> Option<Sign> {
        let row = &self.out[src];
        row.binary_search_by_key(&dst, |&(n, _)| n)
            .ok()
            .map(|k| row[k].1)
    }

    /// Sign of the pair in the undirected view.
    pub fn undirected_sign(&self, a: usize, b: usize) -> Option<Sign> {
        let row = &self.undirected[a];
        row.binary_search_by_key(&b, |&(n, _)| n)
            .ok()
            .map(|k| row[k].1)
    }

    /// True when any edge joins `a` and `b` in either direction.
    pub fn is_linked(&self, a: usize, b: usize) -> bool {
        self.undirected_sign(a, b).is_some()
    }

    /// Entry of the signed adjacency matrix.
    pub fn adjacency(&self, src: usize, dst: usize) -> i8 {
        self.sign(src, dst).map_or(0, Sign::value)
    }

    pub fn original_id(&self, node: usize) -> u64 {
        match &self.original_ids {
            Some(ids) => ids[node],
            None => node as u64,
        }
    }

    pub fn original_ids(&self) -> Option<&[u64]> {
        self.original_ids.as_deref()
    }

    pub fn degree_profile(&self) -> DegreeProfile {
        degree_profile(self)
    }

    /// SHA-256 of the canonical edge list, hex encoded.
    pub fn fingerprint(&self) -> String {
        let mut h = Sha256::new();
        h.update((self.num_nodes as u64).to_le_bytes());
        for e in &self.edges {
            h.update((e.src as u64).to_le_bytes());
            h.update((e.dst as u64).to_le_bytes());
            h.update([e.sign.value() as u8]);
        }
        hex::encode(h.finalize())
    }
}

/// Per-node out-degree split by sign.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DegreeProfile {
    pub pos_degree: Vec<usize>,
    pub neg_degree: Vec<usize>,
}

impl DegreeProfile {
    /// Fraction of nodes without any negative out-edge.
    pub fn zero_negative_fraction(&self) -> f64 {
        if self.neg_degree.is_empty() {
            return 0.0;
        }
        let zeros = self.neg_degree.iter().filter(|&&d| d == 0).count();
        zeros as f64 / self.neg_degree.len() as f64
    }
}

pub fn degree_profile(g: &SignedGraph) -> DegreeProfile {
    let mut pos_degree = vec![0; g.num_nodes()];
    let mut neg_degree = vec![0; g.num_nodes()];
    for e in g.edges() {
        match e.sign {
            Sign::Positive => pos_degree[e.src] += 1,
            Sign::Negative => neg_degree[e.src] += 1,
        }
    }
    DegreeProfile {
        pos_degree,
        neg_degree,
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct LoadOptions {
    /// Mirror every edge.
    pub undirected: bool,
    /// Relabel ids to `0..n` in first-seen order, keeping the originals in a
    /// side table. Off by default so that node counts follow `1 + max id`.
    pub compact: bool,
}

/// Reads a `src<TAB>dst<TAB>sign` edge list. Any whitespace separates fields;
/// blank and `#` lines are skipped.
pub fn load_edge_list(path: impl AsRef<Path>, opts: LoadOptions) -> Result<SignedGraph> {
    let path = path.as_ref();
    let file = fs::File::open(path)?;
    parse_edge_list(BufReader::new(file), path, opts)
}

pub fn parse_edge_list<R: Read>(
    reader: BufReader<R>,
    path: &Path,
    opts: LoadOptions,
) -> Result<SignedGraph> {
    let parse_err = |line: usize, message: String| Error::Parse {
        path: path.to_path_buf(),
        line,
        message,
    };

    let mut raw: Vec<(u64, u64, Sign, usize)> = Vec::new();
    for (idx, line) in reader.lines().enumerate() {
        let lineno = idx + 1;
        let line = line?;
        let trimmed = line.trim();
        if trimmed.is_empty() || trimmed.starts_with('#') {
            continue;
        }
        let fields: Vec<&str> = trimmed.split_whitespace().collect();
        if fields.len() != 3 {
            return Err(parse_err(
                lineno,
                format!("expected 3 fields, found {}", fields.len()),
            ));
        }
        let src: u64 = fields[0]
            .parse()
            .map_err(|_| parse_err(lineno, format!("bad source id {:?}", fields[0])))?;
        let dst: u64 = fields[1]
            .parse()
            .map_err(|_| parse_err(lineno, format!("bad target id {:?}", fields[1])))?;
        let sign = fields[2]
            .parse::<i64>()
            .ok()
            .and_then(Sign::from_value)
            .ok_or_else(|| parse_err(lineno, format!("sign must be 1 or -1, got {:?}", fields[2])))?;
        raw.push((src, dst, sign, lineno));
    }

    let (num_nodes, ids, relabel): (usize, Option<Vec<u64>>, HashMap<u64, usize>) = if opts.compact
    {
        let mut map = HashMap::new();
        let mut ids = Vec::new();
        for &(s, d, _, _) in &raw {
            for v in [s, d] {
                map.entry(v).or_insert_with(|| {
                    ids.push(v);
                    ids.len() - 1
                });
            }
        }
        (ids.len(), Some(ids), map)
    } else {
        let max = raw.iter().map(|&(s, d, _, _)| s.max(d)).max();
        let n = max.map_or(0, |m| m as usize + 1);
        (n, None, HashMap::new())
    };
    let index = |v: u64| -> usize {
        if opts.compact {
            relabel[&v]
        } else {
            v as usize
        }
    };

    let mut map: BTreeMap<(usize, usize), Sign> = BTreeMap::new();
    for &(s, d, sign, lineno) in &raw {
        let (s, d) = (index(s), index(d));
        if s == d {
            return Err(Error::Constraint(format!(
                "{}:{}: self-loop on node {}",
                path.display(),
                lineno,
                s
            )));
        }
        let pairs: &[(usize, usize)] = if opts.undirected {
            &[(s, d), (d, s)]
        } else {
            &[(s, d)]
        };
        for &key in pairs {
            if let Some(prev) = map.insert(key, sign) {
                if prev != sign {
                    return Err(Error::Constraint(format!(
                        "{}:{}: edge ({}, {}) is both positive and negative",
                        path.display(),
                        lineno,
                        key.0,
                        key.1
                    )));
                }
            }
        }
    }
    let edges = map
        .into_iter()
        .map(|((src, dst), sign)| SignedEdge { src, dst, sign })
        .collect();
    Ok(SignedGraph::from_sorted_unique(num_nodes, edges, ids))
}

pub fn write_edges<W: Write>(mut w: W, g: &SignedGraph, edges: &[SignedEdge]) -> Result<()> {
    for e in edges {
        writeln!(
            w,
            "{}\t{}\t{}",
            g.original_id(e.src),
            g.original_id(e.dst),
            e.sign
        )?;
    }
    Ok(())
}

pub fn write_edge_list(path: impl AsRef<Path>, g: &SignedGraph) -> Result<()> {
    let mut buf = Vec::new();
    write_edges(&mut buf, g, g.edges())?;
    fs::write(path, buf)?;
    Ok(())
}

/// Train/test partition of a graph's edges.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EdgeSplit {
    pub train: Vec<SignedEdge>,
    pub test: Vec<SignedEdge>,
    pub seed: u64,
    pub ratio: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SplitManifest {
    pub seed: u64,
    pub ratio: f64,
    pub checksum: String,
}

/// Shuffles the edges with `seed` and takes the first `round(ratio * m)` as
/// training edges. If one sign ended up only in the test side, the first
/// such test edge is swapped with the last training edge of the other sign.
/// Both halves come back sorted.
pub fn split_edges(g: &SignedGraph, ratio: f64, seed: u64) -> Result<EdgeSplit> {
    if !(ratio > 0.0 && ratio < 1.0) {
        return Err(Error::InvalidParameter(format!(
            "split ratio must lie in (0, 1), got {ratio}"
        )));
    }
    let m = g.num_edges();
    if m < 2 {
        return Err(Error::InvalidParameter(format!(
            "need at least 2 edges to split, graph has {m}"
        )));
    }
    let mut edges = g.edges().to_vec();
    edges.shuffle(&mut rng::rng(seed));
    let n_train = ((ratio * m as f64).round() as usize).clamp(1, m - 1);
    let (train, test) = edges.split_at_mut(n_train);

    for sign in [Sign::Positive, Sign::Negative] {
        if train.iter().any(|e| e.sign == sign) {
            continue;
        }
        let Some(ti) = test.iter().position(|e| e.sign == sign) else {
            continue;
        };
        // train is non-empty and lacks `sign`, so every train edge has the other sign
        let tr = train.len() - 1;
        std::mem::swap(&mut train[tr], &mut test[ti]);
    }

    let (mut train, mut test) = (train.to_vec(), test.to_vec());
    train.sort();
    test.sort();
    Ok(EdgeSplit {
        train,
        test,
        seed,
        ratio,
    })
}

impl EdgeSplit {
    pub fn train_graph(&self, g: &SignedGraph) -> Result<SignedGraph> {
        g.with_edges(self.train.iter().copied())
    }

    /// Writes `train.tsv`, `test.tsv` and `manifest.json` into `dir`.
    pub fn save(&self, dir: impl AsRef<Path>, g: &SignedGraph) -> Result<SplitManifest> {
        let dir = dir.as_ref();
        fs::create_dir_all(dir)?;
        let mut train = Vec::new();
        write_edges(&mut train, g, &self.train)?;
        let mut test = Vec::new();
        write_edges(&mut test, g, &self.test)?;
        let manifest = SplitManifest {
            seed: self.seed,
            ratio: self.ratio,
            checksum: split_checksum(&train, &test),
        };
        fs::write(dir.join("train.tsv"), &train)?;
        fs::write(dir.join("test.tsv"), &test)?;
        fs::write(
            dir.join("manifest.json"),
            serde_json::to_string_pretty(&manifest)?,
        )?;
        Ok(manifest)
    }

    /// Reads a split written by [`EdgeSplit::save`], verifying the checksum.
    /// Ids in the files are mapped back through `g`'s side table.
    pub fn load(dir: impl AsRef<Path>, g: &SignedGraph) -> Result<Self> {
        let dir = dir.as_ref();
        let manifest: SplitManifest =
            serde_json::from_str(&fs::read_to_string(dir.join("manifest.json"))?)?;
        let train_bytes = fs::read(dir.join("train.tsv"))?;
        let test_bytes = fs::read(dir.join("test.tsv"))?;
        let sum = split_checksum(&train_bytes, &test_bytes);
        if sum != manifest.checksum {
            return Err(Error::Format(format!(
                "split checksum mismatch in {}",
                dir.display()
            )));
        }
        let lookup: HashMap<u64, usize> = (0..g.num_nodes())
            .map(|i| (g.original_id(i), i))
            .collect();
        let read = |bytes: &[u8], name: &str| -> Result<Vec<SignedEdge>> {
            let path = PathBuf::from(dir.join(name));
            let parsed = parse_edge_list(BufReader::new(bytes), &path, LoadOptions::default())?;
            parsed
                .edges()
                .iter()
                .map(|e| {
                    let map = |v: usize| {
                        lookup.get(&(v as u64)).copied().ok_or_else(|| {
                            Error::Format(format!("{}: unknown node id {v}", path.display()))
                        })
                    };
                    Ok(SignedEdge::new(map(e.src)?, map(e.dst)?, e.sign))
                })
                .collect()
        };
        let mut train = read(&train_bytes, "train.tsv")?;
        let mut test = read(&test_bytes, "test.tsv")?;
        train.sort();
        test.sort();
        Ok(Self {
            train,
            test,
            seed: manifest.seed,
            ratio: manifest.ratio,
        })
    }
}

fn split_checksum(train: &[u8], test: &[u8]) -> String {
    let mut h = Sha256::new();
    h.update((train.len() as u64).to_le_bytes());
    h.update(train);
    h.update(test);
    hex::encode(h.finalize())
}

/// Parameters of the planted-partition signed graph generator.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SyntheticConfig {
    pub nodes_per_block: usize,
    pub blocks: usize,
    pub p_intra: f64,
    pub p_inter: f64,
    pub flip_noise: f64,
    pub seed: u64,
}

impl Default for SyntheticConfig {
    fn default() -> Self {
        Self {
            nodes_per_block: 50,
            blocks: 2,
            p_intra: 0.2,
            p_inter: 0.2,
            flip_noise: 0.05,
            seed: 0,
        }
    }
}

impl SyntheticConfig {
    pub fn block_of(&self, node: usize) -> usize {
        node / self.nodes_per_block.max(1)
    }
}

/// Samples every unordered pair once: within a block with `p_intra` as a
/// positive edge, across blocks with `p_inter` as a negative edge. Each sign
/// is then flipped with probability `flip_noise` and the stored direction of
/// the edge is a fair coin.
pub fn generate_balanced_graph(cfg: &SyntheticConfig) -> Result<SignedGraph> {
    for (name, p) in [
        ("p_intra", cfg.p_intra),
        ("p_inter", cfg.p_inter),
        ("flip_noise", cfg.flip_noise),
    ] {
        if !(0.0..=1.0).contains(&p) {
            return Err(Error::InvalidParameter(format!(
                "{name} must be a probability, got {p}"
            )));
        }
    }
    if cfg.blocks == 0 {
        return Err(Error::InvalidParameter("blocks must be >= 1".into()));
    }
    let n = cfg.nodes_per_block * cfg.blocks;
    let mut r = rng::rng(cfg.seed);
    let mut edges = Vec::new();
    for i in 0..n {
        for j in (i + 1)..n {
            let same = cfg.block_of(i) == cfg.block_of(j);
            let p = if same { cfg.p_intra } else { cfg.p_inter };
            if !r.gen_bool(p) {
                continue;
            }
            let mut sign = if same { Sign::Positive } else { Sign::Negative };
            if r.gen_bool(cfg.flip_noise) {
                sign = sign.flip();
            }
            let (src, dst) = if r.gen_bool(0.5) { (i, j) } else { (j, i) };
            edges.push(SignedEdge::new(src, dst, sign));
        }
    }
    SignedGraph::from_edges(n, edges)
}
