//! Labeled pairs and triplets fed to the loss.

use rand::Rng as _;

use crate::error::{Error, Result};
use crate::graph::{Sign, SignedGraph};
use crate::rng;

/// Class of a labeled pair. The discriminant is the classifier column.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum PairLabel {
    Positive = 0,
    Negative = 1,
    NoLink = 2,
}

impl PairLabel {
    pub const ALL: [PairLabel; 3] = [PairLabel::Positive, PairLabel::Negative, PairLabel::NoLink];

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn from_sign(sign: Sign) -> Self {
        match sign {
            Sign::Positive => PairLabel::Positive,
            Sign::Negative => PairLabel::Negative,
        }
    }
}

/// `(i, j, label)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct LabeledPair {
    pub i: usize,
    pub j: usize,
    pub label: PairLabel,
}

/// `(i, j, k)` where `(i, j)` is a signed edge and `(i, k)` is unlinked.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Triplet {
    pub i: usize,
    pub j: usize,
    pub k: usize,
}

#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct TrainBatch {
    pub pairs: Vec<LabeledPair>,
    pub triplets_pos: Vec<Triplet>,
    pub triplets_neg: Vec<Triplet>,
}

impl TrainBatch {
    pub fn class_counts(&self) -> [usize; 3] {
        let mut c = [0; 3];
        for p in &self.pairs {
            c[p.label.index()] += 1;
        }
        c
    }
}

/// Builds the batch from every training edge plus sampled unlinked pairs.
///
/// `no_link_ratio × |E|` unlinked pairs are drawn uniformly by rejection,
/// and every edge gets one unlinked partner for its triplet. With a ratio of
/// zero neither is sampled. Fails after `100 × |E|` rejected draws.
pub fn sample_batch(train: &SignedGraph, no_link_ratio: f64, seed: u64) -> Result<TrainBatch> {
    let m = train.num_edges();
    if m == 0 {
        return Err(Error::Sampling("training graph has no edges".into()));
    }
    if !(no_link_ratio >= 0.0) || !no_link_ratio.is_finite() {
        return Err(Error::InvalidParameter(format!(
            "no-link ratio must be a finite non-negative number, got {no_link_ratio}"
        )));
    }
    let mut batch = TrainBatch {
        pairs: train
            .edges()
            .iter()
            .map(|e| LabeledPair {
                i: e.src,
                j: e.dst,
                label: PairLabel::from_sign(e.sign),
            })
            .collect(),
        ..TrainBatch::default()
    };
    if no_link_ratio == 0.0 {
        return Ok(batch);
    }

    let n = train.num_nodes();
    let mut rng = rng::rng(seed);
    let budget = 100 * m;
    let mut attempts = 0usize;
    let mut draw = |rng: &mut rng::Rng, i: Option<usize>| -> Result<(usize, usize)> {
        loop {
            attempts += 1;
            if attempts > budget {
                return Err(Error::Sampling(format!(
                    "no unlinked pair found after {budget} attempts; graph is too dense"
                )));
            }
            let a = i.unwrap_or_else(|| rng.gen_range(0..n));
            let b = rng.gen_range(0..n);
            if a != b && !train.is_linked(a, b) {
                return Ok((a, b));
            }
        }
    };

    let target = (no_link_ratio * m as f64).round() as usize;
    for _ in 0..target {
        let (i, j) = draw(&mut rng, None)?;
        batch.pairs.push(LabeledPair {
            i,
            j,
            label: PairLabel::NoLink,
        });
    }
    for e in train.edges() {
        let (_, k) = draw(&mut rng, Some(e.src))?;
        let t = Triplet {
            i: e.src,
            j: e.dst,
            k,
        };
        match e.sign {
            Sign::Positive => batch.triplets_pos.push(t),
            Sign::Negative => batch.triplets_neg.push(t),
        }
    }
    Ok(batch)
}
