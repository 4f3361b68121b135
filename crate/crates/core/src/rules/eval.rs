//! Violation evaluation at sample and cluster level.
//!
//! Cluster-level rules attribute a violation to the minority side of a mixed
//! cluster:
//!
//! - homogeneity: every sample outside the cluster's majority level (ties go
//!   to the lowest level index), checked per listed attribute;
//! - exclusion: every sample matching the rarer of the two literals (a tie
//!   flags both sides);
//! - numeric spread: when the cluster's range exceeds the bound, every sample
//!   outside `[median − bound/2, median + bound/2]`.

use serde::{Deserialize, Serialize};

use super::definition::{RuleDefinition, RuleKind, RuleSet};
use super::schema::AttributeVector;
use crate::diffnet::Matrix;
use crate::error::{Error, Result};

/// True iff the rule's antecedent holds and its consequent fails.
pub fn sample_violates(rule: &RuleDefinition, attrs: &AttributeVector) -> Result<bool> {
    match &rule.kind {
        RuleKind::SampleImplication {
            antecedent,
            consequent,
        } => Ok(antecedent.iter().all(|l| l.holds(attrs)) && !consequent.holds(attrs)),
        other => Err(Error::usage(format!(
            "rule '{}' is a {} rule, not a sample implication",
            rule.id,
            other.name()
        ))),
    }
}

/// Flags for the members of one cluster, aligned with `members`.
///
/// For sample implications the result does not depend on the grouping.
pub fn cluster_member_flags(
    rule: &RuleDefinition,
    members: &[usize],
    attrs: &[AttributeVector],
) -> Vec<bool> {
    match &rule.kind {
        RuleKind::SampleImplication { .. } => members
            .iter()
            .map(|&i| sample_violates(rule, &attrs[i]).expect("implication rule"))
            .collect(),
        RuleKind::ClusterHomogeneity { attributes } => {
            let mut flags = vec![false; members.len()];
            for &a in attributes {
                let levels = members
                    .iter()
                    .map(|&i| attrs[i].level(a))
                    .max()
                    .map_or(0, |m| m + 1);
                let mut counts = vec![0usize; levels];
                for &i in members {
                    counts[attrs[i].level(a)] += 1;
                }
                // max_by_key keeps the last maximum; scan manually for the first
                let mut majority = 0;
                for (lvl, &c) in counts.iter().enumerate() {
                    if c > counts[majority] {
                        majority = lvl;
                    }
                }
                for (f, &i) in flags.iter_mut().zip(members) {
                    if attrs[i].level(a) != majority {
                        *f = true;
                    }
                }
            }
            flags
        }
        RuleKind::ClusterExclusion { first, second } => {
            let a = members.iter().filter(|&&i| first.holds(&attrs[i])).count();
            let b = members.iter().filter(|&&i| second.holds(&attrs[i])).count();
            if a == 0 || b == 0 {
                return vec![false; members.len()];
            }
            members
                .iter()
                .map(|&i| {
                    let x = &attrs[i];
                    (a <= b && first.holds(x)) || (b <= a && second.holds(x))
                })
                .collect()
        }
        RuleKind::NumericSpread {
            attribute,
            max_range,
        } => {
            if members.is_empty() {
                return Vec::new();
            }
            let mut vals: Vec<f64> = members
                .iter()
                .map(|&i| attrs[i].value(*attribute))
                .collect();
            vals.sort_by(f64::total_cmp);
            let range = vals[vals.len() - 1] - vals[0];
            if range <= *max_range {
                return vec![false; members.len()];
            }
            let n = vals.len();
            let median = if n % 2 == 1 {
                vals[n / 2]
            } else {
                0.5 * (vals[n / 2 - 1] + vals[n / 2])
            };
            let (lo, hi) = (median - max_range / 2.0, median + max_range / 2.0);
            members
                .iter()
                .map(|&i| {
                    let v = attrs[i].value(*attribute);
                    v < lo || v > hi
                })
                .collect()
        }
    }
}

/// Groups sample indices by label. Errors if a label is `>= k`.
pub fn members_by_cluster(labels: &[usize], k: usize) -> Result<Vec<Vec<usize>>> {
    let mut members = vec![Vec::new(); k];
    for (i, &l) in labels.iter().enumerate() {
        if l >= k {
            return Err(Error::usage(format!(
                "sample {i} has label {l}, but k = {k}"
            )));
        }
        members[l].push(i);
    }
    Ok(members)
}

/// Per-sample flags for one rule under a hard assignment with `k` clusters.
pub fn cluster_violation_flags(
    rule: &RuleDefinition,
    labels: &[usize],
    k: usize,
    attrs: &[AttributeVector],
) -> Result<Vec<bool>> {
    if labels.len() != attrs.len() {
        return Err(Error::shape(format!(
            "{} labels for {} attribute vectors",
            labels.len(),
            attrs.len()
        )));
    }
    let groups = members_by_cluster(labels, k)?;
    let mut flags = vec![false; attrs.len()];
    for members in &groups {
        for (&i, f) in members
            .iter()
            .zip(cluster_member_flags(rule, members, attrs))
        {
            flags[i] = f;
        }
    }
    Ok(flags)
}

/// Binary N×M target matrix, column `j` holding the flags of rule `j`.
///
/// Cluster-level columns are all zero when no provisional assignment
/// `(labels, k)` is supplied.
pub fn violation_targets(
    ruleset: &RuleSet,
    attrs: &[AttributeVector],
    provisional: Option<(&[usize], usize)>,
) -> Result<Matrix> {
    let n = attrs.len();
    let m = ruleset.len();
    let mut out = Matrix::zeros(n, m);
    for (j, rule) in ruleset.rules.iter().enumerate() {
        let flags = match (&rule.kind, provisional) {
            (RuleKind::SampleImplication { .. }, _) => attrs
                .iter()
                .map(|a| sample_violates(rule, a))
                .collect::<Result<Vec<_>>>()?,
            (_, Some((labels, k))) => cluster_violation_flags(rule, labels, k, attrs)?,
            (_, None) => continue,
        };
        for (i, f) in flags.into_iter().enumerate() {
            if f {
                out.set(i, j, 1.0);
            }
        }
    }
    Ok(out)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RuleViolations {
    pub rule_id: String,
    pub kind: String,
    /// Number of flagged samples.
    pub count: usize,
    /// `count / N`.
    pub rate: f64,
    /// `count` divided by the number of non-empty clusters.
    pub per_cluster_mean: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ViolationReport {
    pub rules: Vec<RuleViolations>,
    /// N×M flag matrix, rows are samples, columns follow `rules`.
    pub flags: Vec<Vec<bool>>,
}

impl ViolationReport {
    pub fn total(&self) -> usize {
        self.rules.iter().map(|r| r.count).sum()
    }

    pub fn count_for(&self, rule_id: &str) -> Option<usize> {
        self.rules
            .iter()
            .find(|r| r.rule_id == rule_id)
            .map(|r| r.count)
    }
}

pub fn violation_report(
    ruleset: &RuleSet,
    labels: &[usize],
    k: usize,
    attrs: &[AttributeVector],
) -> Result<ViolationReport> {
    let n = attrs.len();
    let columns = ruleset
        .rules
        .iter()
        .map(|r| cluster_violation_flags(r, labels, k, attrs))
        .collect::<Result<Vec<_>>>()?;
    let occupied = members_by_cluster(labels, k)?
        .iter()
        .filter(|m| !m.is_empty())
        .count();

    let rules = ruleset
        .rules
        .iter()
        .zip(&columns)
        .map(|(r, col)| {
            let count = col.iter().filter(|&&f| f).count();
            RuleViolations {
                rule_id: r.id.clone(),
                kind: r.kind.name().to_string(),
                count,
                rate: if n == 0 { 0.0 } else { count as f64 / n as f64 },
                per_cluster_mean: if occupied == 0 {
                    0.0
                } else {
                    count as f64 / occupied as f64
                },
            }
        })
        .collect();
    let flags = (0..n)
        .map(|i| columns.iter().map(|c| c[i]).collect())
        .collect();
    Ok(ViolationReport { rules, flags })
}
