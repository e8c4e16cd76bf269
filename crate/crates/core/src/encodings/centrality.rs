//! Degree centrality encoding.

use ndarray::{Array2, ArrayView2};

use crate::error::{Error, Result};
use crate::graph::DegreeProfile;

/// Learnable per-degree vectors, one table per sign. Row `k` is used for a
/// node of degree `k`; degrees above `max_degree` share the last row.
#[derive(Debug, Clone, PartialEq)]
pub struct CentralityTables {
    pub c_pos: Array2<f64>,
    pub c_neg: Array2<f64>,
    pub max_degree: usize,
}

impl CentralityTables {
    pub fn zeros(max_degree: usize, width: usize) -> Self {
        Self {
            c_pos: Array2::zeros((max_degree + 1, width)),
            c_neg: Array2::zeros((max_degree + 1, width)),
            max_degree,
        }
    }

    pub fn width(&self) -> usize {
        self.c_pos.ncols()
    }

    pub fn index(&self, degree: usize) -> usize {
        degree.min(self.max_degree)
    }
}

/// Clipped table rows for every node.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DegreeIndex {
    pub pos: Vec<usize>,
    pub neg: Vec<usize>,
}

impl DegreeIndex {
    pub fn new(profile: &DegreeProfile, max_degree: usize) -> Self {
        Self {
            pos: profile.pos_degree.iter().map(|&d| d.min(max_degree)).collect(),
            neg: profile.neg_degree.iter().map(|&d| d.min(max_degree)).collect(),
        }
    }

    pub fn len(&self) -> usize {
        self.pos.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pos.is_empty()
    }
}

/// `h0[i] = x[i] + c_neg[deg⁻(i)] + c_pos[deg⁺(i)]` with clipped degrees.
pub fn centrality_encode(
    x: ArrayView2<f64>,
    profile: &DegreeProfile,
    tables: &CentralityTables,
) -> Result<Array2<f64>> {
    let index = DegreeIndex::new(profile, tables.max_degree);
    centrality_encode_indexed(x, &index, tables)
}

pub(crate) fn centrality_encode_indexed(
    x: ArrayView2<f64>,
    index: &DegreeIndex,
    tables: &CentralityTables,
) -> Result<Array2<f64>> {
    if x.ncols() != tables.width() || tables.c_neg.ncols() != tables.width() {
        return Err(Error::Shape(format!(
            "feature width {} vs centrality width {}",
            x.ncols(),
            tables.width()
        )));
    }
    if x.nrows() != index.len() {
        return Err(Error::Shape(format!(
            "{} feature rows vs {} nodes in degree profile",
            x.nrows(),
            index.len()
        )));
    }
    let mut h0 = x.to_owned();
    for (i, mut row) in h0.rows_mut().into_iter().enumerate() {
        row += &tables.c_neg.row(index.neg[i]);
        row += &tables.c_pos.row(index.pos[i]);
    }
    Ok(h0)
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::array;

    fn profile(pos: Vec<usize>, neg: Vec<usize>) -> DegreeProfile {
        DegreeProfile {
            pos_degree: pos,
            neg_degree: neg,
        }
    }

    fn tables() -> CentralityTables {
        let mut t = CentralityTables::zeros(3, 2);
        for k in 0..4 {
            t.c_pos[[k, 0]] = 10.0 * (k as f64 + 1.0);
            t.c_neg[[k, 1]] = 100.0 * (k as f64 + 1.0);
        }
        t
    }

    #[test]
    fn zero_degree_uses_first_rows() {
        let x = array![[1.0, 2.0]];
        let h = centrality_encode(x.view(), &profile(vec![0], vec![0]), &tables()).unwrap();
        assert_eq!(h, array![[11.0, 102.0]]);
    }

    #[test]
    fn zero_tables_are_identity() {
        let x = array![[1.0, -2.0], [0.5, 0.25]];
        let t = CentralityTables::zeros(5, 2);
        let h = centrality_encode(x.view(), &profile(vec![3, 9], vec![1, 0]), &t).unwrap();
        assert_eq!(h, x);
    }

    #[test]
    fn large_degrees_clip_to_last_row() {
        let x = array![[0.0, 0.0]];
        let h = centrality_encode(x.view(), &profile(vec![3 + 5], vec![1]), &tables()).unwrap();
        assert_eq!(h, array![[40.0, 200.0]]);
    }

    #[test]
    fn width_mismatch_is_an_error() {
        let x = array![[0.0, 0.0, 0.0]];
        assert!(centrality_encode(x.view(), &profile(vec![0], vec![0]), &tables()).is_err());
    }
}
