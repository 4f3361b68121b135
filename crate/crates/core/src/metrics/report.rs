use std::collections::HashSet;
use std::fmt::Write as _;

use serde::{Deserialize, Deserializer, Serialize, Serializer};

use super::hard::{calinski_harabasz, davies_bouldin, silhouette};
use super::soft::{fpc, fpe, fuzzy_silhouette, mean_membership};
use crate::clustering::{HardAssignment, SoftAssignment};
use crate::diffnet::Matrix;
use crate::error::{Error, Result};
use crate::rules::{violation_report, AttributeVector, RuleSet, ViolationReport};

/// Writes infinities as the strings `"inf"` / `"-inf"`, which JSON numbers cannot hold.
mod extended_float {
    use super::*;

    pub fn serialize<S: Serializer>(v: &f64, s: S) -> std::result::Result<S::Ok, S::Error> {
        if v.is_infinite() {
            s.serialize_str(if *v > 0.0 { "inf" } else { "-inf" })
        } else {
            s.serialize_f64(*v)
        }
    }

    #[derive(Deserialize)]
    #[serde(untagged)]
    enum Repr {
        Num(f64),
        Text(String),
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> std::result::Result<f64, D::Error> {
        match Repr::deserialize(d)? {
            Repr::Num(v) => Ok(v),
            Repr::Text(t) if t == "inf" => Ok(f64::INFINITY),
            Repr::Text(t) if t == "-inf" => Ok(f64::NEG_INFINITY),
            Repr::Text(t) => Err(serde::de::Error::custom(format!(
                "expected a number, got '{t}'"
            ))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunMetadata {
    /// Identifies the run configuration (e.g. the rule subset) in comparisons.
    pub config_id: String,
    pub method: String,
    pub k: usize,
    pub seed: u64,
    pub refined: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HardMetrics {
    pub silhouette: f64,
    pub davies_bouldin: f64,
    #[serde(with = "extended_float")]
    pub calinski_harabasz: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SoftMetrics {
    pub fpc: f64,
    pub fpe: f64,
    pub mean_membership: f64,
    pub fuzzy_silhouette: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvaluationReport {
    pub metadata: RunMetadata,
    pub hard: HardMetrics,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub soft: Option<SoftMetrics>,
    pub violations: ViolationReport,
}

impl EvaluationReport {
    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        Ok(serde_json::from_str(text)?)
    }
}

/// Hard metrics from `hard.labels`, soft metrics when memberships are given,
/// and rule violations under the hard labels.
pub fn evaluate(
    z: &Matrix,
    hard: &HardAssignment,
    soft: Option<&SoftAssignment>,
    ruleset: &RuleSet,
    attrs: &[AttributeVector],
    metadata: RunMetadata,
) -> Result<EvaluationReport> {
    let labels = &hard.labels;
    let hard_metrics = HardMetrics {
        silhouette: silhouette(z, labels)?,
        davies_bouldin: davies_bouldin(z, labels)?,
        calinski_harabasz: calinski_harabasz(z, labels)?,
    };
    let soft_metrics = soft
        .map(|s| -> Result<SoftMetrics> {
            let u = &s.memberships;
            Ok(SoftMetrics {
                fpc: fpc(u)?,
                fpe: fpe(u)?,
                mean_membership: mean_membership(u)?,
                fuzzy_silhouette: fuzzy_silhouette(z, u)?,
            })
        })
        .transpose()?;
    Ok(EvaluationReport {
        metadata,
        hard: hard_metrics,
        soft: soft_metrics,
        violations: violation_report(ruleset, labels, hard.k(), attrs)?,
    })
}

const FIXED_COLUMNS: [&str; 13] = [
    "config_id",
    "method",
    "k",
    "seed",
    "refined",
    "silhouette",
    "davies_bouldin",
    "calinski_harabasz",
    "fpc",
    "fpe",
    "mean_membership",
    "fuzzy_silhouette",
    "violations_total",
];

fn fmt_float(v: f64) -> String {
    if v.is_infinite() {
        if v > 0.0 { "inf" } else { "-inf" }.to_string()
    } else {
        v.to_string()
    }
}

fn csv_field(s: &str) -> String {
    if s.contains([',', '"', '\n', '\r']) {
        format!("\"{}\"", s.replace('"', "\"\""))
    } else {
        s.to_string()
    }
}

/// CSV header: fixed metric columns, then a count and a per-cluster mean
/// column for each rule id.
pub fn summary_header(rule_ids: &[String]) -> String {
    let mut cols: Vec<String> = FIXED_COLUMNS.iter().map(|c| c.to_string()).collect();
    for id in rule_ids {
        cols.push(csv_field(&format!("violations:{id}")));
        cols.push(csv_field(&format!("per_cluster:{id}")));
    }
    cols.join(",")
}

/// One CSV row; rules absent from the report leave their cells empty.
pub fn summary_row(report: &EvaluationReport, rule_ids: &[String]) -> String {
    let m = &report.metadata;
    let soft = report.soft.map_or_else(
        || vec![String::new(); 4],
        |s| {
            [s.fpc, s.fpe, s.mean_membership, s.fuzzy_silhouette]
                .map(fmt_float)
                .to_vec()
        },
    );
    let mut cells = vec![
        csv_field(&m.config_id),
        csv_field(&m.method),
        m.k.to_string(),
        m.seed.to_string(),
        m.refined.to_string(),
        fmt_float(report.hard.silhouette),
        fmt_float(report.hard.davies_bouldin),
        fmt_float(report.hard.calinski_harabasz),
    ];
    cells.extend(soft);
    cells.push(report.violations.total().to_string());
    for id in rule_ids {
        match report.violations.rules.iter().find(|r| &r.rule_id == id) {
            Some(r) => {
                cells.push(r.count.to_string());
                cells.push(fmt_float(r.per_cluster_mean));
            }
            None => cells.extend([String::new(), String::new()]),
        }
    }
    cells.join(",")
}

/// Tabulates reports, one row each. Rule columns are the union of rule ids
/// in order of first appearance. Fails on repeated configuration ids or on
/// a rule id used with different kinds.
pub fn merge_reports(reports: &[EvaluationReport]) -> Result<String> {
    if reports.is_empty() {
        return Err(Error::Merge("no reports to merge".into()));
    }
    let mut seen = HashSet::new();
    let mut rule_ids: Vec<String> = Vec::new();
    let mut kinds: Vec<&str> = Vec::new();
    for r in reports {
        if !seen.insert(r.metadata.config_id.as_str()) {
            return Err(Error::Merge(format!(
                "configuration id '{}' appears more than once",
                r.metadata.config_id
            )));
        }
        for v in &r.violations.rules {
            match rule_ids.iter().position(|id| id == &v.rule_id) {
                Some(i) if kinds[i] != v.kind => {
                    return Err(Error::Merge(format!(
                        "rule '{}' is a {} rule in one report and a {} rule in another",
                        v.rule_id, kinds[i], v.kind
                    )))
                }
                Some(_) => {}
                None => {
                    rule_ids.push(v.rule_id.clone());
                    kinds.push(&v.kind);
                }
            }
        }
    }
    let mut out = summary_header(&rule_ids);
    out.push('\n');
    for r in reports {
        writeln!(out, "{}", summary_row(r, &rule_ids)).expect("write to String");
    }
    Ok(out)
}
