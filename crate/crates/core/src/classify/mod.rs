//! Classifier strategies behind a common trait: random forest, linear SVM,
//! ridge- and lasso-penalized logistic regression. Every trained model
//! exposes a real-valued decision score for AUC.

mod forest;
mod linear;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub use forest::{train_rf, Forest};
pub use linear::{lasso_lambda_max, train_lasso, train_ridge, train_svm, LinearKind, LinearModel, Scaler};

/// Identifier of a classification method.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ClassifierId {
    Rf,
    Svm,
    Ridge,
    Lasso,
}

impl ClassifierId {
    pub const ALL: [ClassifierId; 4] = [
        ClassifierId::Rf,
        ClassifierId::Svm,
        ClassifierId::Ridge,
        ClassifierId::Lasso,
    ];

    pub fn as_str(&self) -> &'static str {
        match self {
            ClassifierId::Rf => "rf",
            ClassifierId::Svm => "svm",
            ClassifierId::Ridge => "ridge",
            ClassifierId::Lasso => "lasso",
        }
    }
}

impl std::fmt::Display for ClassifierId {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

impl std::str::FromStr for ClassifierId {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "rf" => Ok(ClassifierId::Rf),
            "svm" => Ok(ClassifierId::Svm),
            "ridge" => Ok(ClassifierId::Ridge),
            "lasso" => Ok(ClassifierId::Lasso),
            other => Err(Error::InvalidConfig(format!(
                "unknown classifier {other:?} (expected rf, svm, ridge or lasso)"
            ))),
        }
    }
}

/// Training hyperparameters. The defaults are standard choices on
/// standardized features; all are overridable from the experiment config.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(default)]
pub struct TrainConfig {
    /// Ridge/lasso penalty strength.
    pub lambda: f64,
    /// SVM cost.
    pub c: f64,
    pub n_trees: usize,
    pub max_iter: usize,
    pub tol: f64,
    pub seed: u64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            lambda: 1.0,
            c: 1.0,
            n_trees: 500,
            max_iter: 10_000,
            tol: 1e-6,
            seed: 0,
        }
    }
}

impl TrainConfig {
    pub(crate) fn validate_common(&self) -> Result<()> {
        if !(self.tol > 0.0) {
            return Err(Error::InvalidConfig("tol must be > 0".into()));
        }
        if self.max_iter == 0 {
            return Err(Error::InvalidConfig("max_iter must be > 0".into()));
        }
        Ok(())
    }
}

/// A trained model producing a real-valued decision score; higher means
/// more positive.
pub trait DecisionModel: Send + Sync {
    fn decision_score(&self, x: &[f64]) -> Result<f64>;
}

/// A trainable classification strategy. Training is a pure function of
/// (data, config), so strategies are safe to share across folds.
pub trait Classifier: Send + Sync {
    fn id(&self) -> ClassifierId;

    /// `x` holds one row per sample; `y` holds +1/-1 labels.
    fn train(&self, x: &[Vec<f64>], y: &[f64], cfg: &TrainConfig) -> Result<Box<dyn DecisionModel>>;
}

pub(crate) fn validate_training_set(x: &[Vec<f64>], y: &[f64]) -> Result<()> {
    if x.len() != y.len() {
        return Err(Error::LengthMismatch(x.len(), y.len()));
    }
    if x.len() < 2 {
        return Err(Error::TooFewSamples {
            label: "total".into(),
            count: x.len(),
            min: 2,
        });
    }
    let dim = x[0].len();
    if x.iter().any(|row| row.len() != dim) {
        return Err(Error::InvalidSpec("ragged feature rows".into()));
    }
    let pos = y.iter().filter(|&&v| v > 0.0).count();
    if pos == 0 || pos == y.len() {
        return Err(Error::DegenerateGroups(
            "training set contains a single class".into(),
        ));
    }
    if y.iter().any(|&v| v != 1.0 && v != -1.0) {
        return Err(Error::InvalidSpec("labels must be +1 or -1".into()));
    }
    Ok(())
}

struct RfStrategy;
struct SvmStrategy;
struct RidgeStrategy;
struct LassoStrategy;

impl Classifier for RfStrategy {
    fn id(&self) -> ClassifierId {
        ClassifierId::Rf
    }
    fn train(&self, x: &[Vec<f64>], y: &[f64], cfg: &TrainConfig) -> Result<Box<dyn DecisionModel>> {
        Ok(Box::new(train_rf(x, y, cfg)?))
    }
}

impl Classifier for SvmStrategy {
    fn id(&self) -> ClassifierId {
        ClassifierId::Svm
    }
    fn train(&self, x: &[Vec<f64>], y: &[f64], cfg: &TrainConfig) -> Result<Box<dyn DecisionModel>> {
        Ok(Box::new(train_svm(x, y, cfg)?))
    }
}

impl Classifier for RidgeStrategy {
    fn id(&self) -> ClassifierId {
        ClassifierId::Ridge
    }
    fn train(&self, x: &[Vec<f64>], y: &[f64], cfg: &TrainConfig) -> Result<Box<dyn DecisionModel>> {
        Ok(Box::new(train_ridge(x, y, cfg)?))
    }
}

impl Classifier for LassoStrategy {
    fn id(&self) -> ClassifierId {
        ClassifierId::Lasso
    }
    fn train(&self, x: &[Vec<f64>], y: &[f64], cfg: &TrainConfig) -> Result<Box<dyn DecisionModel>> {
        Ok(Box::new(train_lasso(x, y, cfg)?))
    }
}

/// Instantiate the strategy registered under `id`.
pub fn make_classifier(id: ClassifierId) -> Box<dyn Classifier> {
    match id {
        ClassifierId::Rf => Box::new(RfStrategy),
        ClassifierId::Svm => Box::new(SvmStrategy),
        ClassifierId::Ridge => Box::new(RidgeStrategy),
        ClassifierId::Lasso => Box::new(LassoStrategy),
    }
}

/// Look a strategy up by its registered name.
pub fn classifier_by_name(name: &str) -> Result<Box<dyn Classifier>> {
    let id: ClassifierId = name.parse()?;
    Ok(make_classifier(id))
}
