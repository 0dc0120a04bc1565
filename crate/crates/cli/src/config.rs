//! Flat key/value run-configuration format.
//!
//! One `key = value` pair per line; `#` starts a comment; list values are
//! comma-separated; `dataset` and `condition` may repeat. The canonical
//! emission (`emit`) round-trips through `parse` and is embedded in the
//! JSON summary so any run can be reproduced from its own report.
//!
//! Keys:
//!   dataset   = NAME:PATH                 (repeatable, at least one)
//!   condition = DATASET:NEGATIVE:POSITIVE (repeatable, at least one)
//!   methods     = sam, mrmr, geode
//!   classifiers = rf, svm, ridge, lasso
//!   k_grid      = 12, 24, 40, ...
//!   seed        = 7
//!   alpha       = 0.05
//!   log2        = false
//!   lambda      = 1
//!   c           = 1
//!   n_trees     = 500
//!   max_iter    = 10000
//!   tol         = 1e-6
//!   sam_s0_percentile = 50
//!   geode_gamma       = 0.95
//!   geode_rank_tol    = 1e-10

use selstab_core::classify::ClassifierId;
use selstab_core::harness::{default_k_grid, ConditionSpec, ExperimentConfig};
use selstab_core::select::MethodId;

use crate::CliError;

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    /// (name, path) pairs; paths are kept verbatim.
    pub datasets: Vec<(String, String)>,
    /// Apply a log2 transform to every dataset after loading.
    pub log2: bool,
    pub experiment: ExperimentConfig,
}

fn usage(msg: String) -> CliError {
    CliError::Usage(msg)
}

fn parse_list<T: std::str::FromStr>(value: &str, key: &str) -> Result<Vec<T>, CliError>
where
    T::Err: std::fmt::Display,
{
    value
        .split(',')
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .map(|s| {
            s.parse::<T>()
                .map_err(|e| usage(format!("config key {key}: bad item {s:?}: {e}")))
        })
        .collect()
}

fn parse_scalar<T: std::str::FromStr>(value: &str, key: &str) -> Result<T, CliError>
where
    T::Err: std::fmt::Display,
{
    value
        .trim()
        .parse::<T>()
        .map_err(|e| usage(format!("config key {key}: bad value {value:?}: {e}")))
}

impl RunConfig {
    pub fn parse(text: &str) -> Result<Self, CliError> {
        let mut datasets: Vec<(String, String)> = Vec::new();
        let mut conditions: Vec<ConditionSpec> = Vec::new();
        let mut cfg = ExperimentConfig {
            conditions: Vec::new(),
            methods: MethodId::ALL.to_vec(),
            classifiers: ClassifierId::ALL.to_vec(),
            k_grid: default_k_grid(),
            train: Default::default(),
            selectors: Default::default(),
            seed: 0,
            alpha: 0.05,
        };
        let mut log2 = false;

        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| usage(format!("config line {}: expected key = value", lineno + 1)))?;
            let key = key.trim();
            let value = value.trim();
            match key {
                "dataset" => {
                    let (name, path) = value.split_once(':').ok_or_else(|| {
                        usage(format!("config key dataset: expected NAME:PATH, got {value:?}"))
                    })?;
                    datasets.push((name.trim().to_owned(), path.trim().to_owned()));
                }
                "condition" => {
                    let parts: Vec<&str> = value.split(':').map(str::trim).collect();
                    if parts.len() != 3 {
                        return Err(usage(format!(
                            "config key condition: expected DATASET:NEGATIVE:POSITIVE, got {value:?}"
                        )));
                    }
                    conditions.push(ConditionSpec {
                        dataset: parts[0].to_owned(),
                        negative: parts[1].to_owned(),
                        positive: parts[2].to_owned(),
                    });
                }
                "methods" => cfg.methods = parse_list(value, key)?,
                "classifiers" => cfg.classifiers = parse_list(value, key)?,
                "k_grid" => cfg.k_grid = parse_list(value, key)?,
                "seed" => cfg.seed = parse_scalar(value, key)?,
                "alpha" => cfg.alpha = parse_scalar(value, key)?,
                "log2" => log2 = parse_scalar(value, key)?,
                "lambda" => cfg.train.lambda = parse_scalar(value, key)?,
                "c" => cfg.train.c = parse_scalar(value, key)?,
                "n_trees" => cfg.train.n_trees = parse_scalar(value, key)?,
                "max_iter" => cfg.train.max_iter = parse_scalar(value, key)?,
                "tol" => cfg.train.tol = parse_scalar(value, key)?,
                "sam_s0_percentile" => cfg.selectors.sam_s0_percentile = parse_scalar(value, key)?,
                "geode_gamma" => cfg.selectors.geode_gamma = parse_scalar(value, key)?,
                "geode_rank_tol" => cfg.selectors.geode_rank_tol = parse_scalar(value, key)?,
                other => return Err(usage(format!("unknown config key {other:?}"))),
            }
        }

        if datasets.is_empty() {
            return Err(usage("config declares no dataset".into()));
        }
        if conditions.is_empty() {
            return Err(usage("config declares no condition".into()));
        }
        let mut names: Vec<&str> = datasets.iter().map(|(n, _)| n.as_str()).collect();
        names.sort_unstable();
        names.dedup();
        if names.len() != datasets.len() {
            return Err(usage("duplicate dataset name in config".into()));
        }
        for c in &conditions {
            if !datasets.iter().any(|(n, _)| *n == c.dataset) {
                return Err(usage(format!(
                    "condition references undeclared dataset {:?}",
                    c.dataset
                )));
            }
        }
        cfg.conditions = conditions;
        cfg.validate().map_err(|e| usage(e.to_string()))?;
        Ok(RunConfig {
            datasets,
            log2,
            experiment: cfg,
        })
    }

    /// Canonical flat-text form; `parse(emit(c)) == c` and `emit` is
    /// idempotent, so the echoed config reproduces the run byte-for-byte.
    pub fn emit(&self) -> String {
        let mut out = String::new();
        for (name, path) in &self.datasets {
            out.push_str(&format!("dataset = {name}:{path}\n"));
        }
        for c in &self.experiment.conditions {
            out.push_str(&format!(
                "condition = {}:{}:{}\n",
                c.dataset, c.negative, c.positive
            ));
        }
        let join = |items: Vec<String>| items.join(", ");
        out.push_str(&format!(
            "methods = {}\n",
            join(self.experiment.methods.iter().map(|m| m.to_string()).collect())
        ));
        out.push_str(&format!(
            "classifiers = {}\n",
            join(self.experiment.classifiers.iter().map(|c| c.to_string()).collect())
        ));
        out.push_str(&format!(
            "k_grid = {}\n",
            join(self.experiment.k_grid.iter().map(|k| k.to_string()).collect())
        ));
        out.push_str(&format!("seed = {}\n", self.experiment.seed));
        out.push_str(&format!("alpha = {}\n", self.experiment.alpha));
        out.push_str(&format!("log2 = {}\n", self.log2));
        let t = &self.experiment.train;
        out.push_str(&format!("lambda = {}\n", t.lambda));
        out.push_str(&format!("c = {}\n", t.c));
        out.push_str(&format!("n_trees = {}\n", t.n_trees));
        out.push_str(&format!("max_iter = {}\n", t.max_iter));
        out.push_str(&format!("tol = {}\n", t.tol));
        let s = &self.experiment.selectors;
        out.push_str(&format!("sam_s0_percentile = {}\n", s.sam_s0_percentile));
        out.push_str(&format!("geode_gamma = {}\n", s.geode_gamma));
        out.push_str(&format!("geode_rank_tol = {}\n", s.geode_rank_tol));
        out
    }
}
