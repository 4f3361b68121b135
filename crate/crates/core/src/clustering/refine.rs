//! Rule-guided reassignment of samples flagged by cluster-level rules.
//!
//! Rules are visited in file order. A sample flagged by the current rule
//! moves to the nearest other cluster (by centroid distance) where
//!
//! - it would not be flagged by any cluster-level rule,
//! - no other sample in either cluster becomes flagged,
//! - the total number of cluster-level flags strictly drops, and
//! - the homogeneity + exclusion flag count does not grow.
//!
//! The second condition keeps a stray from tipping the majority of a
//! cluster another level owns. The last two make every move a strict
//! improvement, so passes cannot cycle. Sample implications depend only on attributes and are left
//! alone.

use serde::{Deserialize, Serialize};

use super::{cluster_means, inertia, HardAssignment};
use crate::diffnet::matrix::squared_distance;
use crate::diffnet::Matrix;
use crate::error::{Error, Result};
use crate::rules::{
    cluster_member_flags, members_by_cluster, AttributeVector, RuleDefinition, RuleKind, RuleSet,
};

pub const MAX_REFINE_PASSES: usize = 10;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RefinementMove {
    pub sample: String,
    pub rule: String,
    pub from: usize,
    pub to: usize,
    /// Euclidean distance from the sample to the target centroid.
    pub distance: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct UnresolvedFlag {
    pub sample: String,
    pub rule: String,
    pub cluster: usize,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct RefinementLog {
    pub moves: Vec<RefinementMove>,
    pub passes: usize,
    /// Cluster-level flags still present after the last pass.
    pub unresolved: Vec<UnresolvedFlag>,
}

/// Flag counts of one cluster: (all cluster-level rules, homogeneity + exclusion).
fn cluster_counts(
    rules: &[&RuleDefinition],
    members: &[usize],
    attrs: &[AttributeVector],
) -> (usize, usize) {
    let mut all = 0;
    let mut structural = 0;
    for rule in rules {
        let n = cluster_member_flags(rule, members, attrs)
            .iter()
            .filter(|&&f| f)
            .count();
        all += n;
        if !matches!(rule.kind, RuleKind::NumericSpread { .. }) {
            structural += n;
        }
    }
    (all, structural)
}

fn flagged_in(
    rules: &[&RuleDefinition],
    members: &[usize],
    sample: usize,
    attrs: &[AttributeVector],
) -> bool {
    let pos = members
        .iter()
        .position(|&i| i == sample)
        .expect("sample is a member");
    rules
        .iter()
        .any(|r| cluster_member_flags(r, members, attrs)[pos])
}

/// Members flagged by at least one cluster-level rule.
fn flagged_members(
    rules: &[&RuleDefinition],
    members: &[usize],
    attrs: &[AttributeVector],
) -> Vec<usize> {
    let mut any = vec![false; members.len()];
    for rule in rules {
        for (a, f) in any
            .iter_mut()
            .zip(cluster_member_flags(rule, members, attrs))
        {
            *a |= f;
        }
    }
    members
        .iter()
        .zip(any)
        .filter(|&(_, f)| f)
        .map(|(&i, _)| i)
        .collect()
}

/// True when some member of `after` other than `sample` is flagged there
/// but was not flagged in `before`.
fn flags_others(
    rules: &[&RuleDefinition],
    before: &[usize],
    after: &[usize],
    sample: usize,
    attrs: &[AttributeVector],
) -> bool {
    let was = flagged_members(rules, before, attrs);
    flagged_members(rules, after, attrs)
        .into_iter()
        .any(|i| i != sample && was.binary_search(&i).is_err())
}

fn without(members: &[usize], sample: usize) -> Vec<usize> {
    members.iter().copied().filter(|&i| i != sample).collect()
}

fn with(members: &[usize], sample: usize) -> Vec<usize> {
    let mut out = members.to_vec();
    let at = out.partition_point(|&i| i < sample);
    out.insert(at, sample);
    out
}

/// Moves flagged samples to nearby compliant clusters. Deterministic for
/// given inputs; `ids` name samples in the log.
pub fn refine(
    assignment: &HardAssignment,
    ruleset: &RuleSet,
    attrs: &[AttributeVector],
    z: &Matrix,
    ids: &[String],
) -> Result<(HardAssignment, RefinementLog)> {
    let n = assignment.labels.len();
    if attrs.len() != n || z.rows() != n || ids.len() != n {
        return Err(Error::shape(format!(
            "refine: {n} labels, {} attribute vectors, {} latent rows, {} ids",
            attrs.len(),
            z.rows(),
            ids.len()
        )));
    }
    let k = assignment.k();
    let rules: Vec<&RuleDefinition> = ruleset
        .rules
        .iter()
        .filter(|r| r.kind.is_cluster_level())
        .collect();
    let mut labels = assignment.labels.clone();
    let mut members = members_by_cluster(&labels, k)?;
    let mut centroids = assignment.centroids.clone();
    let mut log = RefinementLog::default();

    if !rules.is_empty() && k > 1 {
        let mut counts: Vec<(usize, usize)> = members
            .iter()
            .map(|m| cluster_counts(&rules, m, attrs))
            .collect();
        for pass in 1..=MAX_REFINE_PASSES {
            log.passes = pass;
            let mut moved = false;
            for rule in &rules {
                let snapshot: Vec<Vec<bool>> = members
                    .iter()
                    .map(|m| cluster_member_flags(rule, m, attrs))
                    .collect();
                let mut flagged: Vec<usize> = members
                    .iter()
                    .zip(&snapshot)
                    .flat_map(|(m, f)| m.iter().zip(f).filter(|(_, &f)| f).map(|(&i, _)| i))
                    .collect();
                flagged.sort_unstable();

                for s in flagged {
                    let from = labels[s];
                    // earlier moves in this pass may have cleared the flag
                    let pos = members[from].iter().position(|&i| i == s).expect("member");
                    if !cluster_member_flags(rule, &members[from], attrs)[pos] {
                        continue;
                    }
                    let mut candidates: Vec<(usize, f64)> = (0..k)
                        .filter(|&c| c != from)
                        .map(|c| (c, squared_distance(z.row(s), centroids.row(c))))
                        .collect();
                    candidates.sort_by(|a, b| a.1.total_cmp(&b.1).then(a.0.cmp(&b.0)));

                    let from_left = without(&members[from], s);
                    if flags_others(&rules, &members[from], &from_left, s, attrs) {
                        continue;
                    }
                    let left_counts = cluster_counts(&rules, &from_left, attrs);
                    for (c, d2) in candidates {
                        let joined = with(&members[c], s);
                        if flagged_in(&rules, &joined, s, attrs)
                            || flags_others(&rules, &members[c], &joined, s, attrs)
                        {
                            continue;
                        }
                        let joined_counts = cluster_counts(&rules, &joined, attrs);
                        let before = (counts[from].0 + counts[c].0, counts[from].1 + counts[c].1);
                        let after = (
                            left_counts.0 + joined_counts.0,
                            left_counts.1 + joined_counts.1,
                        );
                        if after.0 >= before.0 || after.1 > before.1 {
                            continue;
                        }
                        labels[s] = c;
                        members[from] = from_left;
                        members[c] = joined;
                        counts[from] = left_counts;
                        counts[c] = joined_counts;
                        log.moves.push(RefinementMove {
                            sample: ids[s].clone(),
                            rule: rule.id.clone(),
                            from,
                            to: c,
                            distance: d2.sqrt(),
                        });
                        moved = true;
                        break;
                    }
                }
                centroids = cluster_means(z, &labels, k, Some(&centroids))?;
            }
            if !moved {
                break;
            }
        }
    }

    for rule in &rules {
        for (c, m) in members.iter().enumerate() {
            for (&i, f) in m.iter().zip(cluster_member_flags(rule, m, attrs)) {
                if f {
                    log.unresolved.push(UnresolvedFlag {
                        sample: ids[i].clone(),
                        rule: rule.id.clone(),
                        cluster: c,
                    });
                }
            }
        }
    }

    let inertia = inertia(z, &labels, &centroids);
    Ok((
        HardAssignment {
            labels,
            centroids,
            inertia,
        },
        log,
    ))
}
