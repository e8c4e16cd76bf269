use ndarray::Array2;

use crate::graph::SignedGraph;

/// Sign-preserving symmetric normalization `D̃^{-1/2} A D̃^{-1/2}`.
///
/// `D̃` counts distinct neighbors in the undirected view, so a single
/// directed edge still normalizes to ±1 between two otherwise isolated
/// nodes. Isolated nodes get zero rows.
pub fn adjacency_bias(g: &SignedGraph) -> Array2<f64> {
    let n = g.num_nodes();
    let inv_sqrt: Vec<f64> = (0..n)
        .map(|i| {
            let d = g.neighbors(i).len();
            if d == 0 {
                0.0
            } else {
                1.0 / (d as f64).sqrt()
            }
        })
        .collect();
    let mut out = Array2::zeros((n, n));
    for e in g.edges() {
        out[[e.src, e.dst]] = e.sign.as_f64() * inv_sqrt[e.src] * inv_sqrt[e.dst];
    }
    out
}
