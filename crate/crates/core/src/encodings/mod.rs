//! Structural encodings: spectral features, centrality, and the attention
//! bias built from the normalized adjacency and signed random walks.

mod adjacency;
mod centrality;
mod shortest_path;
mod spectral;
pub mod walks;

use ndarray::Array2;

pub use adjacency::adjacency_bias;
pub use centrality::{centrality_encode, CentralityTables, DegreeIndex};
pub(crate) use centrality::centrality_encode_indexed;
pub use shortest_path::shortest_path_signed_encoding;
pub use spectral::spectral_init;
pub use walks::{
    distances_from, load_walks, sample_signed_walks, save_walks, signed_walk_distances, WalkConfig,
    WalkEncoding, WalkSet,
};

use crate::error::{Error, Result};

/// Elementwise `Â + b_ψ`.
pub fn assemble_attention_bias(adj_bias: &Array2<f64>, walk_bias: &Array2<f64>) -> Result<Array2<f64>> {
    if adj_bias.dim() != walk_bias.dim() {
        return Err(Error::Shape(format!(
            "adjacency bias {:?} vs walk bias {:?}",
            adj_bias.dim(),
            walk_bias.dim()
        )));
    }
    Ok(adj_bias + walk_bias)
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::array;

    #[test]
    fn assemble_adds() {
        let a = array![[0.0, 1.0], [1.0, 0.0]];
        let w = array![[0.0, -0.5], [0.0, 0.0]];
        assert_eq!(assemble_attention_bias(&a, &w).unwrap()[[0, 1]], 0.5);
        let z = Array2::zeros((2, 2));
        assert_eq!(assemble_attention_bias(&z, &z).unwrap(), z);
        assert!(assemble_attention_bias(&a, &Array2::zeros((3, 3))).is_err());
    }
}
