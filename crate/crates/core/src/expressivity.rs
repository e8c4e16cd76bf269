//! Distinguishing power of structural encodings on pairs of signed graphs:
//! the extended WL test, exhaustive walk signatures, and shortest-path
//! signatures.

use std::collections::hash_map::DefaultHasher;
use std::collections::BTreeMap;
use std::hash::{Hash, Hasher};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::encodings::shortest_path_signed_encoding;
use crate::error::{Error, Result};
use crate::graph::{Sign, SignedGraph};

/// Walk enumeration stops with an error beyond this many walks.
pub const MAX_ENUMERATED_WALKS: u64 = 10_000_000;

fn hash_of<T: Hash>(value: &T) -> u64 {
    let mut h = DefaultHasher::new();
    value.hash(&mut h);
    h.finish()
}

fn sorted<T: Ord>(mut v: Vec<T>) -> Vec<T> {
    v.sort();
    v
}

/// Per-iteration `(balanced, unbalanced)` labels of every node.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct WlLabeling {
    /// `labels[l][i]` is node `i` after iteration `l + 1`.
    pub labels: Vec<Vec<(u64, u64)>>,
    /// First iteration whose partition equals the previous one.
    pub stabilized_at: Option<usize>,
}

impl WlLabeling {
    pub fn iterations(&self) -> usize {
        self.labels.len()
    }

    /// Sorted multiset of node labels after iteration `l` (1-based).
    pub fn multiset(&self, l: usize) -> Vec<(u64, u64)> {
        sorted(self.labels[l - 1].clone())
    }
}

fn partition(labels: &[(u64, u64)]) -> Vec<usize> {
    let mut ids = BTreeMap::new();
    labels
        .iter()
        .map(|l| {
            let next = ids.len();
            *ids.entry(*l).or_insert(next)
        })
        .collect()
}

/// Extended WL refinement over the undirected view, starting from a uniform
/// label. Iteration 1 hashes each node with the multisets of its positive and
/// of its negative neighbors; later iterations combine the balanced label
/// with positive neighbors' balanced and negative neighbors' unbalanced
/// labels, and symmetrically for the unbalanced label. Runs `iterations`
/// rounds and records the first round at which the partition stopped
/// changing.
pub fn extended_wl_labels(g: &SignedGraph, iterations: usize) -> WlLabeling {
    let n = g.num_nodes();
    let split = |i: usize| {
        let mut pos = Vec::new();
        let mut neg = Vec::new();
        for &(j, s) in g.neighbors(i) {
            match s {
                Sign::Positive => pos.push(j),
                Sign::Negative => neg.push(j),
            }
        }
        (pos, neg)
    };
    let nbrs: Vec<(Vec<usize>, Vec<usize>)> = (0..n).map(split).collect();
    let x0 = 0u64;
    let mut labels: Vec<Vec<(u64, u64)>> = Vec::with_capacity(iterations);
    let mut stabilized_at = None;
    let mut prev_partition = vec![0usize; n];
    for l in 1..=iterations {
        let next: Vec<(u64, u64)> = (0..n)
            .map(|i| {
                let (pos, neg) = &nbrs[i];
                if l == 1 {
                    let b = hash_of(&(1u8, x0, vec![x0; pos.len()]));
                    let u = hash_of(&(1u8, x0, vec![x0; neg.len()]));
                    (b, u)
                } else {
                    let prev = &labels[l - 2];
                    let b = hash_of(&(
                        2u8,
                        prev[i].0,
                        sorted(pos.iter().map(|&j| prev[j].0).collect()),
                        sorted(neg.iter().map(|&j| prev[j].1).collect()),
                    ));
                    let u = hash_of(&(
                        3u8,
                        prev[i].1,
                        sorted(pos.iter().map(|&j| prev[j].1).collect()),
                        sorted(neg.iter().map(|&j| prev[j].0).collect()),
                    ));
                    (b, u)
                }
            })
            .collect();
        let p = partition(&next);
        if stabilized_at.is_none() && p == prev_partition {
            stabilized_at = Some(l);
        }
        prev_partition = p;
        labels.push(next);
    }
    WlLabeling {
        labels,
        stabilized_at,
    }
}

/// One walk outcome: signed hop count `ψ` and whether it ended at its start.
pub type WalkRecord = (i64, bool);

/// Per-node sorted multisets of walk outcomes plus the sorted graph-level
/// multiset of those node signatures.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GraphSignature {
    pub nodes: Vec<Vec<WalkRecord>>,
    pub graph: Vec<Vec<WalkRecord>>,
}

impl GraphSignature {
    fn from_nodes(nodes: Vec<Vec<WalkRecord>>) -> Self {
        let graph = sorted(nodes.clone());
        Self { nodes, graph }
    }

    /// Does some node come back to itself after exactly `steps` steps?
    pub fn has_self_return(&self, steps: i64) -> bool {
        self.nodes
            .iter()
            .flatten()
            .any(|&(psi, back)| back && psi.abs() == steps)
    }
}

fn count_walks(g: &SignedGraph, max_steps: usize) -> u64 {
    // non-backtracking counts: n_t(v) walks of length t from v
    let n = g.num_nodes();
    let mut total = 0u64;
    for v in 0..n {
        let d = g.neighbors(v).len() as u64;
        if d == 0 {
            continue;
        }
        // upper bound d · (Δ-1)^(t-1) per length with Δ the max degree
        let delta = (0..n).map(|u| g.neighbors(u).len() as u64).max().unwrap_or(0);
        let mut per_len = d;
        for _ in 0..max_steps {
            total = total.saturating_add(per_len);
            per_len = per_len.saturating_mul(delta.saturating_sub(1).max(1));
            if total > MAX_ENUMERATED_WALKS {
                return total;
            }
        }
    }
    total
}

/// Exhaustive non-backtracking walks of 1 to `max_steps` steps from every
/// node over the undirected view. Each walk contributes the signed hop count
/// to its endpoint and whether the endpoint is the start.
pub fn walk_signature(g: &SignedGraph, max_steps: usize) -> Result<GraphSignature> {
    if max_steps == 0 {
        return Err(Error::InvalidParameter("max_steps must be at least 1".into()));
    }
    let bound = count_walks(g, max_steps);
    if bound > MAX_ENUMERATED_WALKS {
        return Err(Error::InvalidParameter(format!(
            "walk enumeration would exceed {MAX_ENUMERATED_WALKS} walks; lower max_steps"
        )));
    }
    let nodes = (0..g.num_nodes())
        .into_par_iter()
        .map(|start| {
            let mut out = Vec::new();
            // (current, previous, steps, sign)
            let mut stack = vec![(start, usize::MAX, 0usize, Sign::Positive)];
            while let Some((u, prev, t, sign)) = stack.pop() {
                if t > 0 {
                    out.push((t as i64 * sign.value() as i64, u == start));
                }
                if t == max_steps {
                    continue;
                }
                for &(v, s) in g.neighbors(u) {
                    if v != prev {
                        stack.push((v, u, t + 1, sign.times(s)));
                    }
                }
            }
            sorted(out)
        })
        .collect();
    Ok(GraphSignature::from_nodes(nodes))
}

/// Sorted multiset of per-node sorted shortest-path signed distances to every
/// other node.
pub fn shortest_path_signature(g: &SignedGraph) -> Vec<Vec<i64>> {
    let n = g.num_nodes();
    let spe = shortest_path_signed_encoding(g, n);
    sorted(
        (0..n)
            .map(|i| sorted((0..n).filter(|&j| j != i).map(|j| spe[[i, j]]).collect()))
            .collect(),
    )
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Verdict {
    Same,
    Different,
}

impl Verdict {
    fn of(equal: bool) -> Self {
        if equal {
            Verdict::Same
        } else {
            Verdict::Different
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct EncodingComparison {
    pub spe: Verdict,
    pub walk: Verdict,
    pub wl: Verdict,
}

/// Do both graphs produce identical WL label multisets at every iteration
/// up to the larger node count?
pub fn wl_equivalent(a: &SignedGraph, b: &SignedGraph) -> bool {
    if a.num_nodes() != b.num_nodes() {
        return false;
    }
    let rounds = a.num_nodes().max(1);
    let la = extended_wl_labels(a, rounds);
    let lb = extended_wl_labels(b, rounds);
    (1..=rounds).all(|l| la.multiset(l) == lb.multiset(l))
}

/// Walk enumeration depth used by [`compare_encodings`]: the larger node count.
pub fn default_walk_steps(a: &SignedGraph, b: &SignedGraph) -> usize {
    a.num_nodes().max(b.num_nodes()).max(1)
}

pub fn compare_encodings(a: &SignedGraph, b: &SignedGraph, max_steps: usize) -> Result<EncodingComparison> {
    let walk = walk_signature(a, max_steps)?.graph == walk_signature(b, max_steps)?.graph;
    Ok(EncodingComparison {
        spe: Verdict::of(
            a.num_nodes() == b.num_nodes() && shortest_path_signature(a) == shortest_path_signature(b),
        ),
        walk: Verdict::of(walk),
        wl: Verdict::of(wl_equivalent(a, b)),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::SignedEdge;

    fn undirected(n: usize, edges: &[(usize, usize, i64)]) -> SignedGraph {
        let e = edges.iter().flat_map(|&(a, b, s)| {
            let s = Sign::from_value(s).unwrap();
            [SignedEdge::new(a, b, s), SignedEdge::new(b, a, s)]
        });
        SignedGraph::from_edges(n, e).unwrap()
    }

    fn relabel(g: &SignedGraph, perm: &[usize]) -> SignedGraph {
        SignedGraph::from_edges(
            g.num_nodes(),
            g.edges()
                .iter()
                .map(|e| SignedEdge::new(perm[e.src], perm[e.dst], e.sign)),
        )
        .unwrap()
    }

    #[test]
    fn single_node_stabilizes_immediately() {
        let g = SignedGraph::from_edges(1, []).unwrap();
        assert_eq!(extended_wl_labels(&g, 3).stabilized_at, Some(1));
    }

    #[test]
    fn triangle_with_one_negative_returns_negative() {
        let g = undirected(3, &[(0, 1, 1), (1, 2, 1), (2, 0, -1)]);
        let sig = walk_signature(&g, 3).unwrap();
        for node in &sig.nodes {
            let returns: Vec<_> = node.iter().filter(|r| r.1).collect();
            assert_eq!(returns.len(), 2);
            assert!(returns.iter().all(|r| r.0 == -3));
        }
    }

    #[test]
    fn relabeling_changes_nothing() {
        // balanced: every cycle has an even number of negative edges
        let g = undirected(5, &[(0, 1, 1), (1, 2, -1), (2, 3, 1), (3, 4, -1), (4, 0, 1), (0, 2, -1)]);
        let h = relabel(&g, &[3, 0, 4, 1, 2]);
        let c = compare_encodings(&g, &h, 5).unwrap();
        assert_eq!(c, EncodingComparison { spe: Verdict::Same, walk: Verdict::Same, wl: Verdict::Same });
        let la = extended_wl_labels(&g, 5);
        let lb = extended_wl_labels(&h, 5);
        for l in 1..=5 {
            assert_eq!(la.multiset(l), lb.multiset(l));
        }
    }

    #[test]
    fn shortest_path_sign_depends_on_ids_when_paths_disagree() {
        // 0 reaches 3 through 1 (+,+) or 2 (+,-); BFS keeps the smaller id
        let g = undirected(4, &[(0, 1, 1), (1, 3, 1), (0, 2, 1), (2, 3, -1)]);
        let h = relabel(&g, &[0, 2, 1, 3]);
        assert_ne!(shortest_path_signature(&g), shortest_path_signature(&h));
        assert_eq!(walk_signature(&g, 4).unwrap().graph, walk_signature(&h, 4).unwrap().graph);
    }

    #[test]
    fn walk_guard() {
        let mut e = Vec::new();
        for a in 0..12 {
            for b in a + 1..12 {
                e.push((a, b, 1));
            }
        }
        let g = undirected(12, &e);
        assert!(walk_signature(&g, 12).is_err());
        assert!(walk_signature(&g, 0).is_err());
    }

    #[test]
    fn refinement_only_splits() {
        let g = undirected(6, &[(0, 1, 1), (1, 2, -1), (2, 3, 1), (3, 4, 1), (4, 5, -1)]);
        let wl = extended_wl_labels(&g, 6);
        let mut prev = 1;
        for l in 1..=6 {
            let classes = partition(&wl.labels[l - 1]).into_iter().max().unwrap() + 1;
            assert!(classes >= prev);
            prev = classes;
        }
        assert!(wl.stabilized_at.unwrap() <= 6);
    }
}
