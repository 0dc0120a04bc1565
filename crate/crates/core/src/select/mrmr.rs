//! mRMR greedy selection with the MID (relevance minus redundancy)
//! criterion.
//!
//! Mutual information is estimated with the Gaussian closed form
//! -1/2 log2(1 - rho^2) on the continuous expression values (the
//! correlation-based mRMR variant). A plug-in estimator on discretized
//! values ([`mutual_information`] with [`discretize_feature`]) is kept as
//! a public utility, but at the sample sizes this toolkit targets its
//! order statistics over many null features swamp the relevance signal,
//! so the selector itself uses the continuous estimator.

use crate::data::BinaryView;
use crate::error::{Error, Result};

use super::{FeatureSubset, MethodId};

/// Plug-in mutual information in bits from the empirical joint
/// distribution of two equal-length discrete sequences.
pub fn mutual_information(a: &[usize], b: &[usize]) -> Result<f64> {
    if a.len() != b.len() {
        return Err(Error::LengthMismatch(a.len(), b.len()));
    }
    if a.is_empty() {
        return Err(Error::LengthMismatch(0, 0));
    }
    let ka = a.iter().max().unwrap() + 1;
    let kb = b.iter().max().unwrap() + 1;
    let mut joint = vec![0usize; ka * kb];
    let mut pa = vec![0usize; ka];
    let mut pb = vec![0usize; kb];
    for (&x, &y) in a.iter().zip(b) {
        joint[x * kb + y] += 1;
        pa[x] += 1;
        pb[y] += 1;
    }
    let n = a.len() as f64;
    let mut mi = 0.0;
    for x in 0..ka {
        for y in 0..kb {
            let c = joint[x * kb + y];
            if c == 0 {
                continue; // 0 * log 0 = 0
            }
            let pxy = c as f64 / n;
            let px = pa[x] as f64 / n;
            let py = pb[y] as f64 / n;
            mi += pxy * (pxy / (px * py)).log2();
        }
    }
    Ok(mi.max(0.0))
}

/// Discretize one feature column. With 3 bins the cut points are
/// mu - sigma/2 and mu + sigma/2 (below / within / above), the reference
/// convention for expression data; other bin counts fall back to
/// equal-frequency quantile cuts.
pub fn discretize_feature(values: &[f64], bins: usize) -> Vec<usize> {
    assert!(bins >= 2, "need at least 2 bins");
    if bins == 3 {
        let n = values.len() as f64;
        let mu = values.iter().sum::<f64>() / n;
        let var = values.iter().map(|v| (v - mu).powi(2)).sum::<f64>() / n;
        let half_sigma = var.sqrt() / 2.0;
        values
            .iter()
            .map(|&v| {
                if v < mu - half_sigma {
                    0
                } else if v > mu + half_sigma {
                    2
                } else {
                    1
                }
            })
            .collect()
    } else {
        let mut sorted = values.to_vec();
        sorted.sort_by(|a, b| a.partial_cmp(b).unwrap());
        let cuts: Vec<f64> = (1..bins)
            .map(|b| {
                let pos = b as f64 / bins as f64 * (sorted.len() - 1) as f64;
                let lo = pos.floor() as usize;
                let frac = pos - lo as f64;
                sorted[lo] * (1.0 - frac) + sorted[pos.ceil() as usize] * frac
            })
            .collect();
        values
            .iter()
            .map(|&v| cuts.iter().take_while(|&&c| v > c).count())
            .collect()
    }
}

/// Gaussian closed-form mutual information in bits between two
/// equal-length continuous sequences: -1/2 log2(1 - rho^2) with rho the
/// Pearson correlation. rho^2 is clamped just below 1 so duplicated
/// features get a large finite redundancy; a constant sequence has
/// rho = 0 by convention.
pub fn gaussian_mutual_information(a: &[f64], b: &[f64]) -> Result<f64> {
    if a.len() != b.len() {
        return Err(Error::LengthMismatch(a.len(), b.len()));
    }
    if a.is_empty() {
        return Err(Error::LengthMismatch(0, 0));
    }
    let n = a.len() as f64;
    let mean_a = a.iter().sum::<f64>() / n;
    let mean_b = b.iter().sum::<f64>() / n;
    let mut cross = 0.0;
    let mut var_a = 0.0;
    let mut var_b = 0.0;
    for (x, y) in a.iter().zip(b) {
        let da = x - mean_a;
        let db = y - mean_b;
        cross += da * db;
        var_a += da * da;
        var_b += db * db;
    }
    if var_a == 0.0 || var_b == 0.0 {
        return Ok(0.0);
    }
    let r2 = (cross * cross / (var_a * var_b)).min(1.0 - 1e-12);
    Ok(-0.5 * (1.0 - r2).log2())
}

/// Greedy mRMR with the MID criterion: the first feature maximizes
/// I(x; y); each later step maximizes I(x; y) minus the mean mutual
/// information with the already selected features, both estimated with
/// [`gaussian_mutual_information`]. Ties break to the lowest feature
/// index; the returned order is the selection order.
pub fn mrmr_select(view: &BinaryView<'_>, k: usize) -> Result<FeatureSubset> {
    let n = view.n_features();
    let m = view.n_samples();
    if k > n {
        return Err(Error::SubsetTooLarge { k, n });
    }
    let (n_neg, n_pos) = view.class_counts();
    for (count, label) in [(n_neg, view.negative_label()), (n_pos, view.positive_label())] {
        if count < 2 {
            return Err(Error::TooFewSamples {
                label: label.to_owned(),
                count,
                min: 2,
            });
        }
    }
    let columns: Vec<Vec<f64>> = (0..n)
        .map(|j| (0..m).map(|i| view.value(i, j)).collect())
        .collect();
    let labels: Vec<f64> = (0..m)
        .map(|i| if view.is_positive(i) { 1.0 } else { 0.0 })
        .collect();

    let relevance: Vec<f64> = columns
        .iter()
        .map(|col| gaussian_mutual_information(col, &labels))
        .collect::<Result<_>>()?;

    let mut selected = Vec::with_capacity(k);
    let mut in_subset = vec![false; n];
    // Running sum of MI between each candidate and the selected set.
    let mut redundancy_sum = vec![0.0f64; n];
    for step in 0..k {
        let mut best: Option<(usize, f64)> = None;
        for j in 0..n {
            if in_subset[j] {
                continue;
            }
            let score = if step == 0 {
                relevance[j]
            } else {
                relevance[j] - redundancy_sum[j] / step as f64
            };
            match best {
                Some((_, s)) if score <= s => {}
                _ => best = Some((j, score)),
            }
        }
        let (chosen, _) = best.expect("k <= n guarantees a remaining candidate");
        in_subset[chosen] = true;
        selected.push(chosen);
        if step + 1 < k {
            for j in 0..n {
                if !in_subset[j] {
                    redundancy_sum[j] += gaussian_mutual_information(&columns[j], &columns[chosen])?;
                }
            }
        }
    }
    Ok(FeatureSubset::new(selected, MethodId::Mrmr))
}
