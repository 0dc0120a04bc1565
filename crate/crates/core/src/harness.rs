//! The LOOCV comparison engine: per (condition, method, k) cell it runs
//! leave-one-out selection, training and prediction, assembles the
//! stability and accuracy tables, and feeds them to the Tukey HSD test.

use std::collections::BTreeMap;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::classify::{make_classifier, ClassifierId, DecisionModel, TrainConfig};
use crate::data::{binary_view, BinaryView, ExpressionMatrix};
use crate::error::{Error, Result};
use crate::metrics::{auc, stabperf, FoldPrediction, SelectionRun};
use crate::seed::{derive_seed, hash_str};
use crate::select::{make_selector, FeatureSubset, MethodId, Selector, SelectorSettings};
use crate::stats::{tukey_hsd, ComparisonRecord, GroupSamples};

/// One two-class comparison: a dataset plus the (negative, positive) tags.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct ConditionSpec {
    pub dataset: String,
    pub negative: String,
    pub positive: String,
}

impl ConditionSpec {
    pub fn name(&self) -> String {
        format!("{}:{}-vs-{}", self.dataset, self.negative, self.positive)
    }
}

/// The default k grid: 40..400 step 40 plus the fine-grained 12 and 24.
pub fn default_k_grid() -> Vec<usize> {
    let mut grid = vec![12, 24];
    grid.extend((1..=10).map(|i| i * 40));
    grid
}

fn default_alpha() -> f64 {
    0.05
}

/// Full experiment description; everything the engine needs besides the
/// loaded matrices.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct ExperimentConfig {
    pub conditions: Vec<ConditionSpec>,
    pub methods: Vec<MethodId>,
    pub classifiers: Vec<ClassifierId>,
    #[serde(default = "default_k_grid")]
    pub k_grid: Vec<usize>,
    #[serde(default)]
    pub train: TrainConfig,
    #[serde(default)]
    pub selectors: SelectorSettings,
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "default_alpha")]
    pub alpha: f64,
}

impl ExperimentConfig {
    pub fn validate(&self) -> Result<()> {
        if self.conditions.is_empty() {
            return Err(Error::InvalidConfig("no conditions configured".into()));
        }
        if self.methods.is_empty() {
            return Err(Error::InvalidConfig("no selection methods configured".into()));
        }
        if self.classifiers.is_empty() {
            return Err(Error::InvalidConfig("no classifiers configured".into()));
        }
        if self.k_grid.is_empty() {
            return Err(Error::InvalidConfig("empty k grid".into()));
        }
        if !(self.alpha > 0.0 && self.alpha < 1.0) {
            return Err(Error::InvalidConfig(format!(
                "alpha = {} outside (0, 1)",
                self.alpha
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct StabilityRow {
    pub condition: String,
    pub method: MethodId,
    pub k: usize,
    pub stab: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct AccuracyRow {
    pub condition: String,
    pub method: MethodId,
    pub classifier: ClassifierId,
    pub k: usize,
    pub auc: f64,
}

/// A (condition, method, k) cell that could not be evaluated; reported,
/// never silently dropped.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct CellFailure {
    pub condition: String,
    pub method: MethodId,
    pub k: usize,
    pub message: String,
}

#[derive(Debug, Clone, Default, Serialize, Deserialize, PartialEq)]
pub struct ResultTable {
    pub stability: Vec<StabilityRow>,
    pub accuracy: Vec<AccuracyRow>,
    pub failures: Vec<CellFailure>,
}

/// Output of one LOOCV fold, exposed for leakage auditing.
pub struct FoldOutcome {
    pub subset: FeatureSubset,
    pub models: Vec<(ClassifierId, Box<dyn DecisionModel>)>,
    pub prediction_scores: Vec<(ClassifierId, f64)>,
}

fn restrict(row: &[f64], subset: &FeatureSubset) -> Vec<f64> {
    subset.indices.iter().map(|&j| row[j]).collect()
}

/// Run a single fold: select on the training samples only, train each
/// classifier on the selected features, score the left-out sample.
pub fn run_fold(
    view: &BinaryView<'_>,
    fold: usize,
    selector: &dyn Selector,
    k: usize,
    classifiers: &[ClassifierId],
    train: &TrainConfig,
    cell_seed: u64,
) -> Result<FoldOutcome> {
    let training = view.without_sample(fold);
    for (count, label) in {
        let (n_neg, n_pos) = training.class_counts();
        [(n_neg, training.negative_label()), (n_pos, training.positive_label())]
    } {
        if count == 0 {
            return Err(Error::FoldClassVanished {
                fold,
                label: label.to_owned(),
            });
        }
    }

    let subset = selector.select(&training, k)?;
    let x: Vec<Vec<f64>> = (0..training.n_samples())
        .map(|i| restrict(training.row(i), &subset))
        .collect();
    let y: Vec<f64> = (0..training.n_samples()).map(|i| training.sign(i)).collect();
    let probe = restrict(view.row(fold), &subset);

    let fold_seed = derive_seed(cell_seed, &[fold as u64]);
    let mut models = Vec::new();
    let mut prediction_scores = Vec::new();
    for &clf in classifiers {
        let cfg = TrainConfig {
            seed: derive_seed(fold_seed, &[hash_str(clf.as_str())]),
            ..train.clone()
        };
        let model = make_classifier(clf).train(&x, &y, &cfg)?;
        let score = model.decision_score(&probe)?;
        models.push((clf, model));
        prediction_scores.push((clf, score));
    }
    Ok(FoldOutcome {
        subset,
        models,
        prediction_scores,
    })
}

/// Leave-one-out over all m samples of the view: m subsets and m
/// predictions per classifier.
pub fn loocv_run(
    view: &BinaryView<'_>,
    selector: &dyn Selector,
    k: usize,
    classifiers: &[ClassifierId],
    train: &TrainConfig,
    cell_seed: u64,
) -> Result<(SelectionRun, BTreeMap<ClassifierId, Vec<FoldPrediction>>)> {
    let m = view.n_samples();
    if m < 4 {
        return Err(Error::TooFewSamples {
            label: "total".into(),
            count: m,
            min: 4,
        });
    }
    if k > view.n_features() {
        return Err(Error::SubsetTooLarge {
            k,
            n: view.n_features(),
        });
    }

    let mut subsets = Vec::with_capacity(m);
    let mut predictions: BTreeMap<ClassifierId, Vec<FoldPrediction>> = classifiers
        .iter()
        .map(|&c| (c, Vec::with_capacity(m)))
        .collect();
    for fold in 0..m {
        let outcome = run_fold(view, fold, selector, k, classifiers, train, cell_seed)?;
        subsets.push(outcome.subset);
        for (clf, score) in outcome.prediction_scores {
            predictions.get_mut(&clf).unwrap().push(FoldPrediction {
                sample_index: view.sample_indices()[fold],
                true_label: view.sign(fold),
                score,
            });
        }
    }
    let run = SelectionRun::new(subsets, selector.id(), k)?;
    Ok((run, predictions))
}

struct CellOutput {
    stability: StabilityRow,
    accuracy: Vec<AccuracyRow>,
}

/// Wall-clock cost of one evaluated cell. Reported separately from the
/// result table so the deterministic outputs stay timing-free.
#[derive(Debug, Clone, PartialEq)]
pub struct CellTiming {
    pub condition: String,
    pub method: MethodId,
    pub k: usize,
    pub millis: f64,
}

/// Iterate conditions x methods x k grid, evaluating every cell under
/// LOOCV. Deterministic given the master seed and independent of worker
/// scheduling; failed cells are recorded in the table.
pub fn run_experiment(
    cfg: &ExperimentConfig,
    datasets: &BTreeMap<String, ExpressionMatrix>,
) -> Result<ResultTable> {
    run_experiment_timed(cfg, datasets).map(|(table, _)| table)
}

/// [`run_experiment`] plus per-cell wall-clock timings.
pub fn run_experiment_timed(
    cfg: &ExperimentConfig,
    datasets: &BTreeMap<String, ExpressionMatrix>,
) -> Result<(ResultTable, Vec<CellTiming>)> {
    cfg.validate()?;

    let mut views: Vec<(String, BinaryView<'_>)> = Vec::new();
    for cond in &cfg.conditions {
        let matrix = datasets.get(&cond.dataset).ok_or_else(|| {
            Error::InvalidConfig(format!("condition references unknown dataset {:?}", cond.dataset))
        })?;
        let view = binary_view(matrix, &cond.negative, &cond.positive)?;
        for &k in &cfg.k_grid {
            if k > matrix.n_features() {
                return Err(Error::SubsetTooLarge {
                    k,
                    n: matrix.n_features(),
                });
            }
        }
        views.push((cond.name(), view));
    }

    let cells: Vec<(usize, MethodId, usize)> = views
        .iter()
        .enumerate()
        .flat_map(|(ci, _)| {
            cfg.methods
                .iter()
                .flat_map(move |&m| cfg.k_grid.iter().map(move |&k| (ci, m, k)))
        })
        .collect();

    let results: Vec<(std::result::Result<CellOutput, CellFailure>, CellTiming)> = cells
        .par_iter()
        .map(|&(ci, method, k)| {
            let cell_started = std::time::Instant::now();
            let (ref name, ref view) = views[ci];
            let cell_seed = derive_seed(
                cfg.seed,
                &[hash_str(name), hash_str(method.as_str()), k as u64],
            );
            let selector = make_selector(method, &cfg.selectors);
            let outcome = loocv_run(view, selector.as_ref(), k, &cfg.classifiers, &cfg.train, cell_seed)
                .and_then(|(run, preds)| {
                    let stab = stabperf(&run)?;
                    let mut accuracy = Vec::new();
                    for (clf, p) in &preds {
                        accuracy.push(AccuracyRow {
                            condition: name.clone(),
                            method,
                            classifier: *clf,
                            k,
                            auc: auc(p)?,
                        });
                    }
                    Ok(CellOutput {
                        stability: StabilityRow {
                            condition: name.clone(),
                            method,
                            k,
                            stab,
                        },
                        accuracy,
                    })
                });
            let outcome = outcome.map_err(|e| CellFailure {
                condition: name.clone(),
                method,
                k,
                message: e.to_string(),
            });
            let timing = CellTiming {
                condition: name.clone(),
                method,
                k,
                millis: cell_started.elapsed().as_secs_f64() * 1e3,
            };
            (outcome, timing)
        })
        .collect();

    let mut table = ResultTable::default();
    let mut timings = Vec::with_capacity(results.len());
    for (r, timing) in results {
        timings.push(timing);
        match r {
            Ok(cell) => {
                table.stability.push(cell.stability);
                table.accuracy.extend(cell.accuracy);
            }
            Err(failure) => table.failures.push(failure),
        }
    }
    timings.sort_by(|a, b| (&a.condition, a.method, a.k).cmp(&(&b.condition, b.method, b.k)));
    // Canonical ordering, independent of arrival order.
    table
        .stability
        .sort_by(|a, b| (&a.condition, a.method, a.k).cmp(&(&b.condition, b.method, b.k)));
    table.accuracy.sort_by(|a, b| {
        (&a.condition, a.method, a.classifier, a.k).cmp(&(&b.condition, b.method, b.classifier, b.k))
    });
    table
        .failures
        .sort_by(|a, b| (&a.condition, a.method, a.k).cmp(&(&b.condition, b.method, b.k)));
    Ok((table, timings))
}

/// One Tukey HSD comparison within a family (stability family per
/// condition, accuracy family per condition and classifier).
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct ComparisonRow {
    pub condition: String,
    /// None for stability families.
    pub classifier: Option<ClassifierId>,
    pub group_a: String,
    pub group_b: String,
    pub mean_diff: f64,
    pub p_adj: f64,
    pub significant: bool,
}

fn family_rows(
    condition: &str,
    classifier: Option<ClassifierId>,
    groups: Vec<(String, Vec<f64>)>,
    alpha: f64,
) -> Result<Vec<ComparisonRow>> {
    // Drop groups left with too few observations by cell failures.
    let groups: Vec<(String, Vec<f64>)> =
        groups.into_iter().filter(|(_, v)| v.len() >= 2).collect();
    if groups.len() < 2 {
        return Ok(Vec::new());
    }
    let gs = GroupSamples::new(groups)?;
    let records: Vec<ComparisonRecord> = tukey_hsd(&gs, alpha)?;
    Ok(records
        .into_iter()
        .map(|r| ComparisonRow {
            condition: condition.to_owned(),
            classifier,
            group_a: r.group_a,
            group_b: r.group_b,
            mean_diff: r.mean_diff,
            p_adj: r.p_adj,
            significant: r.p_adj < alpha,
        })
        .collect())
}

/// Tukey HSD families over the result table: per condition for stability
/// (one group per method, observations are per-k values) and per
/// (condition, classifier) for accuracy.
pub fn compare_methods(table: &ResultTable, alpha: f64) -> Result<Vec<ComparisonRow>> {
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(Error::InvalidConfig(format!("alpha = {alpha} outside (0, 1)")));
    }
    let mut conditions: Vec<String> = table
        .stability
        .iter()
        .map(|r| r.condition.clone())
        .collect();
    conditions.sort();
    conditions.dedup();

    let mut rows = Vec::new();
    for condition in &conditions {
        let mut groups: BTreeMap<MethodId, Vec<f64>> = BTreeMap::new();
        for r in table.stability.iter().filter(|r| &r.condition == condition) {
            groups.entry(r.method).or_default().push(r.stab);
        }
        let groups: Vec<(String, Vec<f64>)> = groups
            .into_iter()
            .map(|(m, v)| (m.to_string(), v))
            .collect();
        rows.extend(family_rows(condition, None, groups, alpha)?);
    }
    for condition in &conditions {
        let mut classifiers: Vec<ClassifierId> = table
            .accuracy
            .iter()
            .filter(|r| &r.condition == condition)
            .map(|r| r.classifier)
            .collect();
        classifiers.sort();
        classifiers.dedup();
        for clf in classifiers {
            let mut groups: BTreeMap<MethodId, Vec<f64>> = BTreeMap::new();
            for r in table
                .accuracy
                .iter()
                .filter(|r| &r.condition == condition && r.classifier == clf)
            {
                groups.entry(r.method).or_default().push(r.auc);
            }
            let groups: Vec<(String, Vec<f64>)> = groups
                .into_iter()
                .map(|(m, v)| (m.to_string(), v))
                .collect();
            rows.extend(family_rows(condition, Some(clf), groups, alpha)?);
        }
    }
    Ok(rows)
}

/// The classifier maximizing mean AUC across methods and k, per condition.
pub fn best_classifier_per_condition(table: &ResultTable) -> Vec<(String, ClassifierId, f64)> {
    let mut sums: BTreeMap<(String, ClassifierId), (f64, usize)> = BTreeMap::new();
    for r in &table.accuracy {
        let e = sums.entry((r.condition.clone(), r.classifier)).or_insert((0.0, 0));
        e.0 += r.auc;
        e.1 += 1;
    }
    let mut per_condition: BTreeMap<String, (ClassifierId, f64)> = BTreeMap::new();
    for ((condition, clf), (sum, count)) in sums {
        let mean = sum / count as f64;
        match per_condition.get(&condition) {
            Some(&(_, best)) if mean <= best => {}
            _ => {
                per_condition.insert(condition, (clf, mean));
            }
        }
    }
    per_condition
        .into_iter()
        .map(|(c, (clf, mean))| (c, clf, mean))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::{synthesize, SynthSpec, SYNTH_NEGATIVE_LABEL, SYNTH_POSITIVE_LABEL};

    fn small_matrix() -> ExpressionMatrix {
        synthesize(&SynthSpec {
            m_per_class: 10,
            n: 25,
            n_planted: 5,
            effect_size: 2.0,
            correlation_block: 1,
            seed: 21,
        })
        .unwrap()
    }

    fn view(matrix: &ExpressionMatrix) -> BinaryView<'_> {
        binary_view(matrix, SYNTH_NEGATIVE_LABEL, SYNTH_POSITIVE_LABEL).unwrap()
    }

    fn quick_train() -> TrainConfig {
        TrainConfig {
            n_trees: 25,
            ..TrainConfig::default()
        }
    }

    #[test]
    fn loocv_produces_m_subsets_and_m_predictions_per_classifier() {
        // 19 samples, 4 classifiers: 19 subsets and 19*4 trained models.
        let matrix = small_matrix();
        let v = view(&matrix).without_sample(0); // down to 19 samples
        let selector = make_selector(MethodId::Sam, &SelectorSettings::default());
        let (run, preds) = loocv_run(
            &v,
            selector.as_ref(),
            5,
            &ClassifierId::ALL,
            &quick_train(),
            7,
        )
        .unwrap();
        assert_eq!(run.subsets.len(), 19);
        assert_eq!(preds.len(), 4);
        for p in preds.values() {
            assert_eq!(p.len(), 19);
        }
    }

    #[test]
    fn fold_subset_equals_direct_selection_on_reduced_view() {
        let matrix = small_matrix();
        let v = view(&matrix);
        let selector = make_selector(MethodId::Mrmr, &SelectorSettings::default());
        for fold in [0usize, 7, 19] {
            let outcome =
                run_fold(&v, fold, selector.as_ref(), 4, &[ClassifierId::Ridge], &quick_train(), 3)
                    .unwrap();
            let direct = selector.select(&v.without_sample(fold), 4).unwrap();
            assert_eq!(outcome.subset.indices, direct.indices);
        }
    }

    #[test]
    fn experiment_is_deterministic() {
        let matrix = small_matrix();
        let mut datasets = BTreeMap::new();
        datasets.insert("synth".to_string(), matrix);
        let cfg = ExperimentConfig {
            conditions: vec![ConditionSpec {
                dataset: "synth".into(),
                negative: SYNTH_NEGATIVE_LABEL.into(),
                positive: SYNTH_POSITIVE_LABEL.into(),
            }],
            methods: vec![MethodId::Sam, MethodId::Geode],
            classifiers: vec![ClassifierId::Rf, ClassifierId::Svm],
            k_grid: vec![3, 6],
            train: quick_train(),
            selectors: SelectorSettings::default(),
            seed: 99,
            alpha: 0.05,
        };
        let a = run_experiment(&cfg, &datasets).unwrap();
        let b = run_experiment(&cfg, &datasets).unwrap();
        assert_eq!(a, b);
        assert!(a.failures.is_empty(), "{:?}", a.failures);
    }

    #[test]
    fn cardinality_matches_grid() {
        let matrix = small_matrix();
        let mut datasets = BTreeMap::new();
        datasets.insert("synth".to_string(), matrix);
        let cfg = ExperimentConfig {
            conditions: vec![ConditionSpec {
                dataset: "synth".into(),
                negative: SYNTH_NEGATIVE_LABEL.into(),
                positive: SYNTH_POSITIVE_LABEL.into(),
            }],
            methods: MethodId::ALL.to_vec(),
            classifiers: vec![ClassifierId::Ridge, ClassifierId::Lasso],
            k_grid: vec![2, 4, 8],
            train: quick_train(),
            selectors: SelectorSettings::default(),
            seed: 1,
            alpha: 0.05,
        };
        let table = run_experiment(&cfg, &datasets).unwrap();
        assert_eq!(table.stability.len(), 1 * 3 * 3);
        assert_eq!(table.accuracy.len(), 1 * 3 * 3 * 2);
        assert!(table.failures.is_empty());
    }

    #[test]
    fn oversized_k_is_rejected_upfront() {
        let matrix = small_matrix();
        let mut datasets = BTreeMap::new();
        datasets.insert("synth".to_string(), matrix);
        let cfg = ExperimentConfig {
            conditions: vec![ConditionSpec {
                dataset: "synth".into(),
                negative: SYNTH_NEGATIVE_LABEL.into(),
                positive: SYNTH_POSITIVE_LABEL.into(),
            }],
            methods: vec![MethodId::Sam],
            classifiers: vec![ClassifierId::Ridge],
            k_grid: vec![4, 999],
            train: quick_train(),
            selectors: SelectorSettings::default(),
            seed: 1,
            alpha: 0.05,
        };
        assert!(matches!(
            run_experiment(&cfg, &datasets),
            Err(Error::SubsetTooLarge { k: 999, .. })
        ));
    }

    fn dominance_table() -> ResultTable {
        // One method's stability strictly dominates at every k.
        let mut table = ResultTable::default();
        for (method, base) in [
            (MethodId::Sam, 0.30),
            (MethodId::Mrmr, 0.32),
            (MethodId::Geode, 0.80),
        ] {
            for (i, k) in [12, 24, 40, 80].iter().enumerate() {
                table.stability.push(StabilityRow {
                    condition: "c".into(),
                    method,
                    k: *k,
                    stab: base + 0.01 * i as f64,
                });
            }
        }
        table
    }

    #[test]
    fn dominating_method_is_flagged_significant() {
        let rows = compare_methods(&dominance_table(), 0.05).unwrap();
        for r in &rows {
            let involves_geode = r.group_a == "geode" || r.group_b == "geode";
            if involves_geode {
                assert!(r.significant, "{r:?}");
                // The favored side is the group with the higher mean.
                let favored = if r.mean_diff > 0.0 { &r.group_a } else { &r.group_b };
                assert_eq!(favored, "geode");
            } else {
                assert!(!r.significant, "{r:?}");
            }
        }
    }

    #[test]
    fn identical_methods_give_p_one() {
        let mut table = ResultTable::default();
        for method in MethodId::ALL {
            for k in [12, 24, 40] {
                table.stability.push(StabilityRow {
                    condition: "c".into(),
                    method,
                    k,
                    stab: 0.4 + k as f64 / 100.0,
                });
            }
        }
        let rows = compare_methods(&table, 0.05).unwrap();
        assert_eq!(rows.len(), 3);
        for r in rows {
            assert_eq!(r.p_adj, 1.0);
            assert_eq!(r.mean_diff, 0.0);
        }
    }

    #[test]
    fn best_classifier_maximizes_mean_auc() {
        let mut table = ResultTable::default();
        for (clf, auc_base) in [(ClassifierId::Rf, 0.6), (ClassifierId::Ridge, 0.9)] {
            for method in [MethodId::Sam, MethodId::Mrmr] {
                for k in [12, 24] {
                    table.accuracy.push(AccuracyRow {
                        condition: "c".into(),
                        method,
                        classifier: clf,
                        k,
                        auc: auc_base,
                    });
                }
            }
        }
        let best = best_classifier_per_condition(&table);
        assert_eq!(best.len(), 1);
        assert_eq!(best[0].1, ClassifierId::Ridge);
        assert!((best[0].2 - 0.9).abs() < 1e-12);
    }
}
