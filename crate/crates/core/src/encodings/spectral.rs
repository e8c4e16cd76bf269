//! Spectral node features from a truncated SVD of the signed adjacency matrix.

use nalgebra::DMatrix;
use ndarray::Array2;

use crate::error::{Error, Result};
use crate::graph::SignedGraph;

/// Rows of `U_d · Σ_d^{1/2}` for the rank-`d` truncated SVD of the signed
/// adjacency matrix.
///
/// Each left singular vector is oriented so that its largest-magnitude entry
/// (first one on ties) is positive.
pub fn spectral_init(g: &SignedGraph, d: usize) -> Result<Array2<f64>> {
    let n = g.num_nodes();
    if d > n {
        return Err(Error::InvalidParameter(format!(
            "embedding width {d} exceeds node count {n}"
        )));
    }
    if n == 0 || d == 0 {
        return Ok(Array2::zeros((n, d)));
    }
    let mut a = DMatrix::<f64>::zeros(n, n);
    for e in g.edges() {
        a[(e.src, e.dst)] = e.sign.as_f64();
    }
    let svd = a.svd(true, false);
    let u = svd
        .u
        .ok_or_else(|| Error::InvalidParameter("SVD did not produce U".into()))?;
    let sv = &svd.singular_values;

    let mut order: Vec<usize> = (0..sv.len()).collect();
    order.sort_by(|&a, &b| sv[b].total_cmp(&sv[a]).then(a.cmp(&b)));

    let mut x = Array2::zeros((n, d));
    for (col, &k) in order.iter().take(d).enumerate() {
        let scale = sv[k].max(0.0).sqrt();
        if scale == 0.0 {
            continue;
        }
        let column = u.column(k);
        let mut pivot = 0;
        for i in 1..n {
            if column[i].abs() > column[pivot].abs() {
                pivot = i;
            }
        }
        let orient = if column[pivot] < 0.0 { -1.0 } else { 1.0 };
        for i in 0..n {
            x[[i, col]] = orient * column[i] * scale;
        }
    }
    Ok(x)
}
