//! Weighted three-class cross-entropy plus triplet hinges plus L2.

use ndarray::{Array1, Array2, ArrayView2};

use super::batch::{PairLabel, TrainBatch};
use crate::error::{Error, Result};
use crate::model::ModelParams;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LossConfig {
    /// Per-class weights `ω_s` indexed by [`PairLabel`]. `None` uses
    /// inverse class frequency over the batch.
    pub class_weights: Option<[f64; 3]>,
    pub lambda: f64,
    /// Coefficient of `(wd / 2) · Σ θ²` over every parameter.
    pub weight_decay: f64,
    pub no_link_ratio: f64,
}

impl Default for LossConfig {
    fn default() -> Self {
        Self {
            class_weights: None,
            lambda: 5.0,
            weight_decay: 5e-4,
            no_link_ratio: 1.0,
        }
    }
}

impl LossConfig {
    pub fn validate(&self) -> Result<()> {
        if let Some(w) = self.class_weights {
            if w.iter().any(|&v| !(v > 0.0) || !v.is_finite()) {
                return Err(Error::InvalidParameter(format!(
                    "class weights must be positive, got {w:?}"
                )));
            }
        }
        if !(self.lambda >= 0.0) || !(self.weight_decay >= 0.0) {
            return Err(Error::InvalidParameter(
                "lambda and weight_decay must be non-negative".into(),
            ));
        }
        Ok(())
    }

    pub fn resolve_weights(&self, batch: &TrainBatch) -> [f64; 3] {
        if let Some(w) = self.class_weights {
            return w;
        }
        let counts = batch.class_counts();
        let present = counts.iter().filter(|&&c| c > 0).count().max(1) as f64;
        let total = batch.pairs.len() as f64;
        counts.map(|c| if c == 0 { 1.0 } else { total / (present * c as f64) })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct LossBreakdown {
    pub total: f64,
    pub cross_entropy: f64,
    pub hinge_pos: f64,
    pub hinge_neg: f64,
    pub regularization: f64,
}

/// Gradients of the data terms with respect to `z` and the classifier.
#[derive(Debug, Clone, PartialEq)]
pub struct LossGrad {
    pub dz: Array2<f64>,
    pub dclassifier: Array2<f64>,
}

fn pair_features(z: ArrayView2<f64>, i: usize, j: usize) -> Array1<f64> {
    let d = z.ncols();
    let mut f = Array1::zeros(2 * d);
    f.slice_mut(ndarray::s![..d]).assign(&z.row(i));
    f.slice_mut(ndarray::s![d..]).assign(&z.row(j));
    f
}

fn log_softmax(logits: &Array1<f64>) -> Array1<f64> {
    let max = logits.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let lse = max + logits.iter().map(|l| (l - max).exp()).sum::<f64>().ln();
    logits.mapv(|l| l - lse)
}

/// Class probabilities `softmax([z_i, z_j] θ)` in [`PairLabel`] order.
pub fn pair_probabilities(z: ArrayView2<f64>, classifier: &Array2<f64>, i: usize, j: usize) -> [f64; 3] {
    let lp = log_softmax(&pair_features(z, i, j).dot(classifier));
    [lp[0].exp(), lp[1].exp(), lp[2].exp()]
}

fn sq_dist(z: ArrayView2<f64>, a: usize, b: usize) -> f64 {
    z.row(a)
        .iter()
        .zip(z.row(b).iter())
        .map(|(x, y)| (x - y) * (x - y))
        .sum()
}

/// Loss value and data-term gradients for embeddings `z`.
///
/// The cross-entropy sum is divided by `|M|`; each hinge mean is over its
/// own triplet set and contributes zero when that set is empty. The L2 term
/// is evaluated on `params` but its gradient (`wd · θ`) is left to the caller.
pub fn loss_and_grad(
    z: ArrayView2<f64>,
    params: &ModelParams,
    batch: &TrainBatch,
    cfg: &LossConfig,
) -> Result<(LossBreakdown, LossGrad)> {
    let (n, d) = z.dim();
    let theta = &params.classifier;
    if theta.dim() != (2 * d, 3) {
        return Err(Error::Shape(format!(
            "classifier {:?} for embeddings of width {d}",
            theta.dim()
        )));
    }
    if batch.pairs.is_empty() {
        return Err(Error::InvalidParameter("batch has no labeled pairs".into()));
    }
    let out_of_range = batch.pairs.iter().any(|p| p.i >= n || p.j >= n)
        || batch
            .triplets_pos
            .iter()
            .chain(&batch.triplets_neg)
            .any(|t| t.i >= n || t.j >= n || t.k >= n);
    if out_of_range {
        return Err(Error::Shape(format!("batch references nodes beyond {n}")));
    }
    let weights = cfg.resolve_weights(batch);

    let mut dz = Array2::zeros((n, d));
    let mut dtheta = Array2::zeros((2 * d, 3));
    let inv_m = 1.0 / batch.pairs.len() as f64;
    let mut ce = 0.0;
    for p in &batch.pairs {
        let s = p.label.index();
        let w = weights[s];
        let f = pair_features(z, p.i, p.j);
        let lp = log_softmax(&f.dot(theta));
        ce -= w * lp[s] * inv_m;
        let mut dl = lp.mapv(f64::exp);
        dl[s] -= 1.0;
        dl *= w * inv_m;
        for a in 0..2 * d {
            for c in 0..3 {
                dtheta[[a, c]] += f[a] * dl[c];
            }
        }
        let df = theta.dot(&dl);
        for c in 0..d {
            dz[[p.i, c]] += df[c];
            dz[[p.j, c]] += df[d + c];
        }
    }

    // positive: j should sit closer to i than k; negative: farther
    let mut hinge = |set: &[super::batch::Triplet], near_is_j: bool| -> f64 {
        if set.is_empty() {
            return 0.0;
        }
        let c = cfg.lambda / set.len() as f64;
        let mut total = 0.0;
        for t in set {
            let (near, far) = if near_is_j { (t.j, t.k) } else { (t.k, t.j) };
            let h = sq_dist(z, t.i, near) - sq_dist(z, t.i, far);
            if h > 0.0 {
                total += h;
                for col in 0..d {
                    let zi = z[[t.i, col]];
                    let zn = z[[near, col]];
                    let zf = z[[far, col]];
                    dz[[t.i, col]] += 2.0 * c * (zf - zn);
                    dz[[near, col]] -= 2.0 * c * (zi - zn);
                    dz[[far, col]] += 2.0 * c * (zi - zf);
                }
            }
        }
        total / set.len() as f64
    };
    let hinge_pos = hinge(&batch.triplets_pos, true);
    let hinge_neg = hinge(&batch.triplets_neg, false);

    let regularization = 0.5 * cfg.weight_decay * params.squared_norm();
    let total = ce + cfg.lambda * (hinge_pos + hinge_neg) + regularization;
    Ok((
        LossBreakdown {
            total,
            cross_entropy: ce,
            hinge_pos,
            hinge_neg,
            regularization,
        },
        LossGrad {
            dz,
            dclassifier: dtheta,
        },
    ))
}

/// Loss value only.
pub fn loss_forward(
    z: ArrayView2<f64>,
    params: &ModelParams,
    batch: &TrainBatch,
    cfg: &LossConfig,
) -> Result<LossBreakdown> {
    loss_and_grad(z, params, batch, cfg).map(|(l, _)| l)
}

/// Predicted sign label for `(i, j)`: positive unless the negative logit is
/// strictly larger. The no-link column is ignored.
pub fn predict_pair_sign(z: ArrayView2<f64>, classifier: &Array2<f64>, i: usize, j: usize) -> PairLabel {
    let logits = pair_features(z, i, j).dot(classifier);
    if logits[1] > logits[0] {
        PairLabel::Negative
    } else {
        PairLabel::Positive
    }
}
