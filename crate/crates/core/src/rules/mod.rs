//! Declarative rule DSL, attribute schema and violation evaluation.

mod definition;
mod eval;
mod schema;

pub use definition::{Condition, Literal, RuleDefinition, RuleKind, RuleSet};
pub use eval::{
    cluster_member_flags, cluster_violation_flags, members_by_cluster, sample_violates,
    violation_report, violation_targets, RuleViolations, ViolationReport,
};
pub use schema::{AttributeKind, AttributeSchema, AttributeSpec, AttributeVector};
