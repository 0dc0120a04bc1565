//! Evaluation measures: StabPerf selection stability over LOOCV subsets
//! and rank-based AUC over fold predictions.

use std::collections::BTreeMap;

use crate::error::{Error, Result};
use crate::select::{FeatureSubset, MethodId};

/// The m feature subsets produced by LOOCV for one (method, k) pair.
#[derive(Debug, Clone)]
pub struct SelectionRun {
    pub subsets: Vec<FeatureSubset>,
    pub method: MethodId,
    pub k: usize,
}

impl SelectionRun {
    pub fn new(subsets: Vec<FeatureSubset>, method: MethodId, k: usize) -> Result<Self> {
        if subsets.len() < 2 {
            return Err(Error::EmptySelectionRun);
        }
        for s in &subsets {
            if s.method != method || s.k() != k {
                return Err(Error::InvalidSpec(
                    "all subsets in a run must share method and k".into(),
                ));
            }
        }
        Ok(Self { subsets, method, k })
    }
}

/// One left-out sample's prediction from one classifier.
#[derive(Debug, Clone, PartialEq)]
pub struct FoldPrediction {
    pub sample_index: usize,
    /// +1 or -1.
    pub true_label: f64,
    pub score: f64,
}

/// StabPerf: mean selection frequency over the union of all selected
/// features. `(sum_{f in F} freq(f)/m) / |F|`, in [1/m, 1].
pub fn stabperf(run: &SelectionRun) -> Result<f64> {
    let m = run.subsets.len();
    if m == 0 {
        return Err(Error::EmptySelectionRun);
    }
    if run.subsets.iter().any(|s| s.indices.is_empty()) {
        return Err(Error::EmptySelectionRun);
    }
    let mut freq: BTreeMap<usize, usize> = BTreeMap::new();
    for subset in &run.subsets {
        for &f in &subset.indices {
            *freq.entry(f).or_insert(0) += 1;
        }
    }
    let union = freq.len() as f64;
    let total: f64 = freq.values().map(|&c| c as f64 / m as f64).sum();
    Ok(total / union)
}

/// AUC in its Mann-Whitney form: the fraction of (positive, negative)
/// pairs where the positive outscores the negative, ties counted half.
/// Computed from average ranks in O(n log n).
pub fn auc(preds: &[FoldPrediction]) -> Result<f64> {
    let n_pos = preds.iter().filter(|p| p.true_label > 0.0).count();
    let n_neg = preds.len() - n_pos;
    if n_pos == 0 || n_neg == 0 {
        return Err(Error::SingleClassPredictions);
    }
    if preds.iter().any(|p| !p.score.is_finite()) {
        return Err(Error::InvalidSpec("non-finite prediction score".into()));
    }

    let mut order: Vec<usize> = (0..preds.len()).collect();
    order.sort_by(|&a, &b| preds[a].score.partial_cmp(&preds[b].score).unwrap());

    // Sum of average ranks of the positives.
    let mut rank_sum_pos = 0.0;
    let mut i = 0;
    while i < order.len() {
        let mut j = i;
        while j < order.len() && preds[order[j]].score == preds[order[i]].score {
            j += 1;
        }
        let avg_rank = (i + 1 + j) as f64 / 2.0;
        for &idx in &order[i..j] {
            if preds[idx].true_label > 0.0 {
                rank_sum_pos += avg_rank;
            }
        }
        i = j;
    }

    let u = rank_sum_pos - (n_pos * (n_pos + 1)) as f64 / 2.0;
    Ok(u / (n_pos * n_neg) as f64)
}
