//! Filter feature-selection strategies behind a common trait.
//!
//! Each method is registered by name and selected at runtime; SAM and GeoDE
//! are score-and-rank methods, mRMR constructs its subset directly.

mod geode;
mod mrmr;
mod sam;

use serde::{Deserialize, Serialize};

use crate::data::BinaryView;
use crate::error::{Error, Result};

pub use geode::geode_scores;
pub use mrmr::{discretize_feature, gaussian_mutual_information, mrmr_select, mutual_information};
pub use sam::sam_scores;

/// Identifier of a feature-selection method.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum MethodId {
    Sam,
    Mrmr,
    Geode,
}

impl MethodId {
    pub const ALL: [MethodId; 3] = [MethodId::Sam, MethodId::Mrmr, MethodId::Geode];

    pub fn as_str(&self) -> &'static str {
        match self {
            MethodId::Sam => "sam",
            MethodId::Mrmr => "mrmr",
            MethodId::Geode => "geode",
        }
    }
}

impl std::fmt::Display for MethodId {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

impl std::str::FromStr for MethodId {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "sam" => Ok(MethodId::Sam),
            "mrmr" => Ok(MethodId::Mrmr),
            "geode" => Ok(MethodId::Geode),
            other => Err(Error::InvalidConfig(format!(
                "unknown selection method {other:?} (expected sam, mrmr or geode)"
            ))),
        }
    }
}

/// Ordered subset of feature indices; order is selection/rank order.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FeatureSubset {
    pub indices: Vec<usize>,
    pub method: MethodId,
}

impl FeatureSubset {
    pub fn new(indices: Vec<usize>, method: MethodId) -> Self {
        debug_assert!({
            let mut sorted = indices.clone();
            sorted.sort_unstable();
            sorted.dedup();
            sorted.len() == indices.len()
        });
        Self { indices, method }
    }

    pub fn k(&self) -> usize {
        self.indices.len()
    }
}

/// Per-feature importance magnitudes for a score-and-rank method.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureScores {
    pub values: Vec<f64>,
    pub method: MethodId,
}

/// Indices of the `k` largest scores, descending; ties broken by lowest
/// feature index.
pub fn select_top_k(scores: &FeatureScores, k: usize) -> Result<FeatureSubset> {
    let n = scores.values.len();
    if k > n {
        return Err(Error::SubsetTooLarge { k, n });
    }
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| {
        scores.values[b]
            .partial_cmp(&scores.values[a])
            .unwrap_or(std::cmp::Ordering::Equal)
            .then(a.cmp(&b))
    });
    order.truncate(k);
    Ok(FeatureSubset::new(order, scores.method))
}

/// Tunable knobs for the selection methods. Defaults follow the reference
/// conventions for each method.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(default)]
pub struct SelectorSettings {
    /// Percentile of the per-feature standard errors used as the SAM fudge
    /// factor s0 (50 = median).
    pub sam_s0_percentile: f64,
    /// Shrinkage weight on the within-class covariance in GeoDE.
    pub geode_gamma: f64,
    /// Relative eigenvalue tolerance for GeoDE's rank decision (floored at
    /// the numerical noise level of the Gram matrix).
    pub geode_rank_tol: f64,
}

impl Default for SelectorSettings {
    fn default() -> Self {
        Self {
            sam_s0_percentile: 50.0,
            geode_gamma: 0.95,
            geode_rank_tol: 1e-10,
        }
    }
}

/// A feature-selection strategy. Implementations are pure functions of the
/// view contents, `k` and their settings, and are safe to call concurrently.
pub trait Selector: Send + Sync {
    fn id(&self) -> MethodId;

    fn select(&self, view: &BinaryView<'_>, k: usize) -> Result<FeatureSubset>;
}

struct SamSelector {
    s0_percentile: f64,
}

impl Selector for SamSelector {
    fn id(&self) -> MethodId {
        MethodId::Sam
    }

    fn select(&self, view: &BinaryView<'_>, k: usize) -> Result<FeatureSubset> {
        let scores = sam_scores(view, self.s0_percentile)?;
        select_top_k(&scores, k)
    }
}

struct MrmrSelector;

impl Selector for MrmrSelector {
    fn id(&self) -> MethodId {
        MethodId::Mrmr
    }

    fn select(&self, view: &BinaryView<'_>, k: usize) -> Result<FeatureSubset> {
        mrmr_select(view, k)
    }
}

struct GeodeSelector {
    gamma: f64,
    rank_tol: f64,
}

impl Selector for GeodeSelector {
    fn id(&self) -> MethodId {
        MethodId::Geode
    }

    fn select(&self, view: &BinaryView<'_>, k: usize) -> Result<FeatureSubset> {
        let scores = geode_scores(view, self.gamma, self.rank_tol)?;
        select_top_k(&scores, k)
    }
}

/// Instantiate the strategy registered under `id`.
pub fn make_selector(id: MethodId, settings: &SelectorSettings) -> Box<dyn Selector> {
    match id {
        MethodId::Sam => Box::new(SamSelector {
            s0_percentile: settings.sam_s0_percentile,
        }),
        MethodId::Mrmr => Box::new(MrmrSelector),
        MethodId::Geode => Box::new(GeodeSelector {
            gamma: settings.geode_gamma,
            rank_tol: settings.geode_rank_tol,
        }),
    }
}

/// Look a strategy up by its registered name.
pub fn selector_by_name(name: &str, settings: &SelectorSettings) -> Result<Box<dyn Selector>> {
    let id: MethodId = name.parse()?;
    Ok(make_selector(id, settings))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn scores(values: Vec<f64>) -> FeatureScores {
        FeatureScores {
            values,
            method: MethodId::Sam,
        }
    }

    #[test]
    fn top_k_sorts_descending() {
        let s = scores(vec![0.1, 0.9, 0.5]);
        assert_eq!(select_top_k(&s, 2).unwrap().indices, vec![1, 2]);
    }

    #[test]
    fn top_k_breaks_ties_by_index() {
        let s = scores(vec![0.5, 0.5, 0.1]);
        assert_eq!(select_top_k(&s, 1).unwrap().indices, vec![0]);
    }

    #[test]
    fn top_k_full_is_a_permutation() {
        let s = scores(vec![0.3, 0.7, 0.1, 0.7]);
        let subset = select_top_k(&s, 4).unwrap();
        assert_eq!(subset.indices, vec![1, 3, 0, 2]);
    }

    #[test]
    fn top_k_too_large_is_error() {
        let s = scores(vec![1.0]);
        assert!(matches!(
            select_top_k(&s, 2),
            Err(crate::error::Error::SubsetTooLarge { k: 2, n: 1 })
        ));
    }

    #[test]
    fn registry_resolves_all_names() {
        let settings = SelectorSettings::default();
        for id in MethodId::ALL {
            let s = selector_by_name(id.as_str(), &settings).unwrap();
            assert_eq!(s.id(), id);
        }
        assert!(selector_by_name("ttest", &settings).is_err());
    }
}
