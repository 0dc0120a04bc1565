//! Report assembly and emission: RFC-4180 CSV tables, a JSON summary with
//! stable key order, and plot-ready tidy tables per report kind.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use selstab_core::classify::ClassifierId;
use selstab_core::harness::{CellTiming, ComparisonRow, ResultTable};
use selstab_core::select::MethodId;

use crate::CliError;

/// Best classifier for one condition (highest mean AUC across methods
/// and k).
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct BestClassifierRow {
    pub condition: String,
    pub classifier: ClassifierId,
    pub mean_auc: f64,
}

/// Self-contained run summary; the `config` echo is the canonical flat
/// config text, so the run can be repeated from the report alone.
/// Field order is the stable JSON key order.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct RunReport {
    pub version: String,
    pub seed: u64,
    pub config: String,
    pub results: ResultTable,
    pub comparisons: Vec<ComparisonRow>,
    pub best_classifier: Vec<BestClassifierRow>,
}

fn csv_string<S, I>(header: &[&str], rows: I) -> Result<String, CliError>
where
    S: Into<Vec<String>>,
    I: IntoIterator<Item = S>,
{
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(header)
        .map_err(|e| CliError::Runtime(e.to_string()))?;
    for row in rows {
        w.write_record(row.into())
            .map_err(|e| CliError::Runtime(e.to_string()))?;
    }
    let bytes = w
        .into_inner()
        .map_err(|e| CliError::Runtime(e.to_string()))?;
    String::from_utf8(bytes).map_err(|e| CliError::Runtime(e.to_string()))
}

fn fmt_f64(v: f64) -> String {
    format!("{v}")
}

pub fn stability_csv(table: &ResultTable) -> Result<String, CliError> {
    csv_string(
        &["condition", "method", "k", "stab"],
        table.stability.iter().map(|r| {
            vec![
                r.condition.clone(),
                r.method.to_string(),
                r.k.to_string(),
                fmt_f64(r.stab),
            ]
        }),
    )
}

pub fn accuracy_csv(table: &ResultTable) -> Result<String, CliError> {
    csv_string(
        &["condition", "method", "classifier", "k", "auc"],
        table.accuracy.iter().map(|r| {
            vec![
                r.condition.clone(),
                r.method.to_string(),
                r.classifier.to_string(),
                r.k.to_string(),
                fmt_f64(r.auc),
            ]
        }),
    )
}

pub fn comparisons_csv(comparisons: &[ComparisonRow]) -> Result<String, CliError> {
    csv_string(
        &[
            "condition",
            "family",
            "group_a",
            "group_b",
            "mean_diff",
            "p_adj",
            "significant",
        ],
        comparisons.iter().map(|r| {
            vec![
                r.condition.clone(),
                family_name(&r.classifier),
                r.group_a.clone(),
                r.group_b.clone(),
                fmt_f64(r.mean_diff),
                fmt_f64(r.p_adj),
                r.significant.to_string(),
            ]
        }),
    )
}

pub fn timings_csv(timings: &[CellTiming]) -> Result<String, CliError> {
    csv_string(
        &["condition", "method", "k", "millis"],
        timings.iter().map(|t| {
            vec![
                t.condition.clone(),
                t.method.to_string(),
                t.k.to_string(),
                format!("{:.3}", t.millis),
            ]
        }),
    )
}

fn family_name(classifier: &Option<ClassifierId>) -> String {
    match classifier {
        None => "stability".to_owned(),
        Some(c) => c.to_string(),
    }
}

/// Report kinds mirroring the result figures/tables.
#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum ReportKind {
    /// Stability vs k, one series per method.
    Stability,
    /// AUC vs k, one series per method, per classifier.
    Accuracy,
    /// Adjusted pairwise comparisons (Tukey HSD).
    Tukey,
}

fn methods_present<'a, I: Iterator<Item = MethodId>>(it: I) -> Vec<MethodId> {
    let mut methods: Vec<MethodId> = it.collect();
    methods.sort();
    methods.dedup();
    methods
}

/// Tidy table for one report kind. Stability/accuracy are wide: x = k,
/// one column ("series") per method, missing cells left empty.
pub fn render(report: &RunReport, kind: ReportKind) -> Result<String, CliError> {
    match kind {
        ReportKind::Stability => {
            let methods = methods_present(report.results.stability.iter().map(|r| r.method));
            let mut header = vec!["condition".to_owned(), "k".to_owned()];
            header.extend(methods.iter().map(|m| m.to_string()));
            let mut cells: BTreeMap<(String, usize), BTreeMap<MethodId, f64>> = BTreeMap::new();
            for r in &report.results.stability {
                cells
                    .entry((r.condition.clone(), r.k))
                    .or_default()
                    .insert(r.method, r.stab);
            }
            let rows = cells.into_iter().map(|((condition, k), by_method)| {
                let mut row = vec![condition, k.to_string()];
                row.extend(
                    methods
                        .iter()
                        .map(|m| by_method.get(m).map(|&v| fmt_f64(v)).unwrap_or_default()),
                );
                row
            });
            csv_string(&header.iter().map(String::as_str).collect::<Vec<_>>(), rows)
        }
        ReportKind::Accuracy => {
            let methods = methods_present(report.results.accuracy.iter().map(|r| r.method));
            let mut header = vec![
                "condition".to_owned(),
                "classifier".to_owned(),
                "k".to_owned(),
            ];
            header.extend(methods.iter().map(|m| m.to_string()));
            let mut cells: BTreeMap<(String, ClassifierId, usize), BTreeMap<MethodId, f64>> =
                BTreeMap::new();
            for r in &report.results.accuracy {
                cells
                    .entry((r.condition.clone(), r.classifier, r.k))
                    .or_default()
                    .insert(r.method, r.auc);
            }
            let rows = cells
                .into_iter()
                .map(|((condition, classifier, k), by_method)| {
                    let mut row = vec![condition, classifier.to_string(), k.to_string()];
                    row.extend(
                        methods
                            .iter()
                            .map(|m| by_method.get(m).map(|&v| fmt_f64(v)).unwrap_or_default()),
                    );
                    row
                });
            csv_string(&header.iter().map(String::as_str).collect::<Vec<_>>(), rows)
        }
        ReportKind::Tukey => csv_string(
            &["condition", "family", "comparison", "direction", "p_adj"],
            report.comparisons.iter().map(|r| {
                let direction = if r.mean_diff > 0.0 {
                    format!("{} > {}", r.group_a, r.group_b)
                } else if r.mean_diff < 0.0 {
                    format!("{} > {}", r.group_b, r.group_a)
                } else {
                    "tied".to_owned()
                };
                vec![
                    r.condition.clone(),
                    family_name(&r.classifier),
                    format!("{} vs {}", r.group_a, r.group_b),
                    direction,
                    fmt_f64(r.p_adj),
                ]
            }),
        ),
    }
}
