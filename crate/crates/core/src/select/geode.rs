//! Characteristic-direction scores: orientation of a shrinkage-regularized
//! linear-discriminant hyperplane, computed in a PCA-reduced space.

use nalgebra::{DMatrix, DVector};

use crate::data::BinaryView;
use crate::error::{Error, Result};

use super::{FeatureScores, MethodId};

/// Magnitudes |b_i| of the unit characteristic direction b.
///
/// The within-class covariance is shrunk towards a scaled identity with
/// weight `gamma` and b solves the regularized discriminant system
/// (shrunk covariance inverse applied to the class-mean difference). The
/// inverse is applied exactly over the full feature space via the r
/// leading principal components of the class-centered data
/// (r = min(m - 2, numerical rank)) plus their orthogonal complement,
/// then b is normalized to unit length and oriented so that
/// (mean_pos - mean_neg) . b >= 0.
pub fn geode_scores(view: &BinaryView<'_>, gamma: f64, rank_tol: f64) -> Result<FeatureScores> {
    let m = view.n_samples();
    let n = view.n_features();
    if m < 3 {
        return Err(Error::TooFewSamples {
            label: "total".to_owned(),
            count: m,
            min: 3,
        });
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
    if !(0.0..=1.0).contains(&gamma) {
        return Err(Error::InvalidConfig(format!("gamma {gamma} outside [0, 1]")));
    }

    // Class means and mean difference.
    let mut mean_pos = vec![0.0f64; n];
    let mut mean_neg = vec![0.0f64; n];
    for i in 0..m {
        let target = if view.is_positive(i) { &mut mean_pos } else { &mut mean_neg };
        for (t, v) in target.iter_mut().zip(view.row(i)) {
            *t += v;
        }
    }
    for t in mean_pos.iter_mut() {
        *t /= n_pos as f64;
    }
    for t in mean_neg.iter_mut() {
        *t /= n_neg as f64;
    }
    let delta = DVector::from_iterator(n, mean_pos.iter().zip(&mean_neg).map(|(p, q)| p - q));

    // Per-class centered data.
    let mut centered = DMatrix::zeros(m, n);
    for i in 0..m {
        let mu = if view.is_positive(i) { &mean_pos } else { &mean_neg };
        for j in 0..n {
            centered[(i, j)] = view.value(i, j) - mu[j];
        }
    }

    // Principal components via the m x m Gram matrix.
    let gram = &centered * centered.transpose();
    let eig = gram.symmetric_eigen();
    let mut order: Vec<usize> = (0..m).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[b].partial_cmp(&eig.eigenvalues[a]).unwrap());
    // Rank decision on the Gram eigenvalues. Forming the Gram squares the
    // conditioning, so zero directions carry noise of order eps * lambda_max;
    // the floor keeps them out even when `rank_tol` is tighter than that.
    let lambda_max = eig.eigenvalues[order[0]].max(0.0);
    let floor = lambda_max * rank_tol.max(m as f64 * f64::EPSILON);
    let r = order
        .iter()
        .take(m - 2)
        .filter(|&&i| eig.eigenvalues[i] > floor)
        .count();

    if r == 0 {
        // No within-class scatter at all; the mean difference is the only
        // available direction.
        let norm = delta.norm();
        let values = if norm > 0.0 {
            delta.iter().map(|v| (v / norm).abs()).collect()
        } else {
            vec![0.0; n]
        };
        return Ok(FeatureScores {
            values,
            method: MethodId::Geode,
        });
    }

    // Loadings V (n x r), columns orthonormal; projected within-class
    // covariance is diagonal: sigma_i^2 / (m - 2).
    let mut loadings = DMatrix::zeros(n, r);
    let mut scatter = Vec::with_capacity(r);
    for (col, &idx) in order.iter().take(r).enumerate() {
        let sigma = eig.eigenvalues[idx].max(0.0).sqrt();
        let u = eig.eigenvectors.column(idx);
        let v = centered.transpose() * u / sigma;
        loadings.set_column(col, &v);
        scatter.push(sigma * sigma / (m - 2) as f64);
    }

    // Apply (gamma * Sigma_w + (1 - gamma) * mu * I)^-1 to delta: eigenvalue
    // (gamma * scatter_i + (1 - gamma) * mu) on the retained principal
    // directions and (1 - gamma) * mu on their orthogonal complement.
    let trace_avg = scatter.iter().sum::<f64>() / r as f64;
    let delta_red = loadings.transpose() * &delta;
    let mut b_red = delta_red.clone();
    for i in 0..r {
        let d = gamma * scatter[i] + (1.0 - gamma) * trace_avg;
        b_red[i] /= d;
    }
    let off_span = (1.0 - gamma) * trace_avg;
    let mut b = &loadings * b_red;
    if off_span > 0.0 {
        // gamma = 1 leaves the shrunk matrix singular off the span; the
        // pseudo-inverse convention drops the complement there.
        b += (&delta - &loadings * delta_red) / off_span;
    }
    let norm = b.norm();
    if norm > 0.0 {
        b /= norm;
    }
    if delta.dot(&b) < 0.0 {
        b = -b;
    }
    Ok(FeatureScores {
        values: b.iter().map(|v| v.abs()).collect(),
        method: MethodId::Geode,
    })
}
