use std::collections::VecDeque;

use ndarray::Array2;

use crate::graph::{Sign, SignedGraph};

/// Signed shortest-path distance between every ordered pair.
///
/// BFS over the undirected view, expanding neighbors in ascending id order;
/// the sign is the product of edge signs along the first shortest path
/// reached. Self pairs are 0 and unreachable pairs `max_path_length + 1`.
pub fn shortest_path_signed_encoding(g: &SignedGraph, max_path_length: usize) -> Array2<i64> {
    let n = g.num_nodes();
    let unreachable = max_path_length as i64 + 1;
    let mut out = Array2::from_elem((n, n), unreachable);
    for s in 0..n {
        let mut dist = vec![usize::MAX; n];
        let mut sign = vec![Sign::Positive; n];
        let mut queue = VecDeque::from([s]);
        dist[s] = 0;
        while let Some(u) = queue.pop_front() {
            for &(v, edge_sign) in g.neighbors(u) {
                if dist[v] == usize::MAX {
                    dist[v] = dist[u] + 1;
                    sign[v] = sign[u].times(edge_sign);
                    queue.push_back(v);
                }
            }
        }
        for t in 0..n {
            if dist[t] != usize::MAX && dist[t] <= max_path_length {
                out[[s, t]] = dist[t] as i64 * sign[t].value() as i64;
            }
        }
    }
    out
}
