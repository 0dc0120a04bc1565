//! SAM moderated difference-of-means statistic, used as a ranking score.

use crate::data::BinaryView;
use crate::error::{Error, Result};

use super::{FeatureScores, MethodId};

/// Per-feature |d_i| with d_i = (mean_pos - mean_neg) / (s_i + s0).
///
/// s_i is the two-class pooled standard error of the mean difference and
/// s0 the given percentile (default: median) of all s_i, which keeps d
/// finite for zero-variance features.
pub fn sam_scores(view: &BinaryView<'_>, s0_percentile: f64) -> Result<FeatureScores> {
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
    if !(0.0..=100.0).contains(&s0_percentile) {
        return Err(Error::InvalidConfig(format!(
            "s0 percentile {s0_percentile} outside [0, 100]"
        )));
    }

    let m = view.n_samples();
    let n = view.n_features();
    let a = (1.0 / n_pos as f64 + 1.0 / n_neg as f64) / (n_pos + n_neg - 2) as f64;

    let mut diffs = Vec::with_capacity(n);
    let mut errs = Vec::with_capacity(n);
    for j in 0..n {
        let mut sum_pos = 0.0;
        let mut sum_neg = 0.0;
        for i in 0..m {
            if view.is_positive(i) {
                sum_pos += view.value(i, j);
            } else {
                sum_neg += view.value(i, j);
            }
        }
        let mean_pos = sum_pos / n_pos as f64;
        let mean_neg = sum_neg / n_neg as f64;
        let mut ss = 0.0;
        for i in 0..m {
            let mu = if view.is_positive(i) { mean_pos } else { mean_neg };
            ss += (view.value(i, j) - mu).powi(2);
        }
        diffs.push(mean_pos - mean_neg);
        errs.push((a * ss).sqrt());
    }

    let s0 = percentile(&errs, s0_percentile);
    let values = diffs
        .iter()
        .zip(&errs)
        .map(|(d, s)| {
            let denom = s + s0;
            if denom == 0.0 {
                0.0
            } else {
                (d / denom).abs()
            }
        })
        .collect();
    Ok(FeatureScores {
        values,
        method: MethodId::Sam,
    })
}

/// Linear-interpolation percentile of a non-empty slice.
fn percentile(values: &[f64], p: f64) -> f64 {
    let mut sorted = values.to_vec();
    sorted.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let pos = p / 100.0 * (sorted.len() - 1) as f64;
    let lo = pos.floor() as usize;
    let hi = pos.ceil() as usize;
    let frac = pos - lo as f64;
    sorted[lo] * (1.0 - frac) + sorted[hi] * frac
}
