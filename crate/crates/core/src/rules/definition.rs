//! Rule definitions and the JSON rule-file format.
//!
//! ```json
//! {
//!   "schema": [{"name": "is_stealth", "kind": "boolean"}, ...],
//!   "rules": [
//!     {"id": "stealth", "kind": "sample_implication",
//!      "antecedent": [{"attribute": "is_stealth", "equals": true}],
//!      "consequent": {"all": [{"attribute": "has_advanced_avionics", "equals": true},
//!                             {"any": [{"attribute": "is_fighter", "equals": true},
//!                                      {"attribute": "has_supercruise", "equals": true}]}]}},
//!     {"id": "uav", "kind": "cluster_homogeneity", "attributes": ["is_uav"]},
//!     {"id": "mission", "kind": "cluster_exclusion",
//!      "literals": [{"attribute": "is_combat", "equals": true},
//!                   {"attribute": "is_transport", "equals": true}]},
//!     {"id": "proportion", "kind": "numeric_spread",
//!      "attribute": "height_to_length", "max_range": 0.08}
//!   ]
//! }
//! ```

use std::collections::HashSet;

use serde_json::{json, Map, Value};

use super::schema::{AttributeKind, AttributeSchema, AttributeVector};
use crate::error::{Error, Result};

/// `attribute == level` for a boolean or categorical attribute.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Literal {
    pub attribute: usize,
    pub level: usize,
}

impl Literal {
    #[inline]
    pub fn holds(&self, attrs: &AttributeVector) -> bool {
        attrs.level(self.attribute) == self.level
    }
}

/// AND/OR tree over literals.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Condition {
    Literal(Literal),
    All(Vec<Condition>),
    Any(Vec<Condition>),
}

impl Condition {
    pub fn holds(&self, attrs: &AttributeVector) -> bool {
        match self {
            Condition::Literal(l) => l.holds(attrs),
            Condition::All(cs) => cs.iter().all(|c| c.holds(attrs)),
            Condition::Any(cs) => cs.iter().any(|c| c.holds(attrs)),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum RuleKind {
    /// Conjunction of literals implies a condition, per sample.
    SampleImplication {
        antecedent: Vec<Literal>,
        consequent: Condition,
    },
    /// Each listed attribute must take a single value within any cluster.
    ClusterHomogeneity { attributes: Vec<usize> },
    /// Two literals must not both occur within any cluster.
    ClusterExclusion { first: Literal, second: Literal },
    /// A numeric attribute's within-cluster range must not exceed `max_range`.
    NumericSpread { attribute: usize, max_range: f64 },
}

impl RuleKind {
    pub fn name(&self) -> &'static str {
        match self {
            RuleKind::SampleImplication { .. } => "sample_implication",
            RuleKind::ClusterHomogeneity { .. } => "cluster_homogeneity",
            RuleKind::ClusterExclusion { .. } => "cluster_exclusion",
            RuleKind::NumericSpread { .. } => "numeric_spread",
        }
    }

    pub fn is_cluster_level(&self) -> bool {
        !matches!(self, RuleKind::SampleImplication { .. })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RuleDefinition {
    pub id: String,
    pub kind: RuleKind,
}

/// Attribute schema plus rules in evaluation order.
#[derive(Debug, Clone, PartialEq)]
pub struct RuleSet {
    pub schema: AttributeSchema,
    pub rules: Vec<RuleDefinition>,
}

fn perr(location: impl Into<String>, message: impl Into<String>) -> Error {
    Error::RuleParse {
        location: location.into(),
        message: message.into(),
    }
}

impl RuleSet {
    pub fn new(schema: AttributeSchema, rules: Vec<RuleDefinition>) -> Result<Self> {
        let mut seen = HashSet::new();
        for (i, r) in rules.iter().enumerate() {
            if !seen.insert(r.id.as_str()) {
                return Err(perr(
                    format!("rules[{i}].id"),
                    format!("duplicate rule id '{}'", r.id),
                ));
            }
        }
        Ok(RuleSet { schema, rules })
    }

    pub fn len(&self) -> usize {
        self.rules.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rules.is_empty()
    }

    pub fn rule_ids(&self) -> Vec<String> {
        self.rules.iter().map(|r| r.id.clone()).collect()
    }

    /// Parses a rule file. Errors name the offending location, e.g.
    /// `rules[2].consequent.any[1]`.
    pub fn parse(text: &str) -> Result<Self> {
        let doc: Value = serde_json::from_str(text).map_err(|e| {
            perr(
                format!("line {} column {}", e.line(), e.column()),
                e.to_string(),
            )
        })?;
        let obj = doc
            .as_object()
            .ok_or_else(|| perr("document", "expected a JSON object"))?;
        for key in obj.keys() {
            if key != "schema" && key != "rules" {
                return Err(perr(key.as_str(), "unknown top-level field"));
            }
        }
        let schema_val = obj
            .get("schema")
            .ok_or_else(|| perr("schema", "missing field"))?;
        let schema =
            AttributeSchema::from_json(schema_val).map_err(|e| perr("schema", e.to_string()))?;

        let rules_val = obj
            .get("rules")
            .ok_or_else(|| perr("rules", "missing field"))?;
        let rules_arr = rules_val
            .as_array()
            .ok_or_else(|| perr("rules", "expected an array"))?;
        let rules = rules_arr
            .iter()
            .enumerate()
            .map(|(i, v)| parse_rule(&schema, v, &format!("rules[{i}]")))
            .collect::<Result<Vec<_>>>()?;
        RuleSet::new(schema, rules)
    }

    /// Serializes back to the rule-file JSON form.
    pub fn to_json(&self) -> Value {
        let rules: Vec<Value> = self
            .rules
            .iter()
            .map(|r| rule_to_json(&self.schema, r))
            .collect();
        json!({"schema": self.schema.to_json(), "rules": rules})
    }

    /// Keeps only the rules whose ids are listed, in file order.
    pub fn subset(&self, ids: &[&str]) -> Result<RuleSet> {
        for id in ids {
            if !self.rules.iter().any(|r| r.id == *id) {
                return Err(Error::usage(format!("no rule with id '{id}'")));
            }
        }
        let rules = self
            .rules
            .iter()
            .filter(|r| ids.contains(&r.id.as_str()))
            .cloned()
            .collect();
        RuleSet::new(self.schema.clone(), rules)
    }
}

fn field<'a>(obj: &'a Map<String, Value>, key: &str, loc: &str) -> Result<&'a Value> {
    obj.get(key)
        .ok_or_else(|| perr(format!("{loc}.{key}"), "missing field"))
}

fn check_fields(obj: &Map<String, Value>, allowed: &[&str], loc: &str) -> Result<()> {
    for key in obj.keys() {
        if !allowed.contains(&key.as_str()) {
            return Err(perr(format!("{loc}.{key}"), "unknown field"));
        }
    }
    Ok(())
}

fn attribute_ref(schema: &AttributeSchema, v: &Value, loc: &str) -> Result<usize> {
    let name = v
        .as_str()
        .ok_or_else(|| perr(loc, "expected an attribute name"))?;
    schema
        .index_of(name)
        .ok_or_else(|| perr(loc, format!("unknown attribute '{name}'")))
}

fn parse_literal(schema: &AttributeSchema, v: &Value, loc: &str) -> Result<Literal> {
    let obj = v
        .as_object()
        .ok_or_else(|| perr(loc, "expected a literal object"))?;
    check_fields(obj, &["attribute", "equals"], loc)?;
    let attribute = attribute_ref(
        schema,
        field(obj, "attribute", loc)?,
        &format!("{loc}.attribute"),
    )?;
    let spec = schema.get(attribute);
    let equals = field(obj, "equals", loc)?;
    let level = match &spec.kind {
        AttributeKind::Boolean => match equals {
            Value::Bool(b) => *b as usize,
            _ => {
                return Err(perr(
                    format!("{loc}.equals"),
                    format!("boolean attribute '{}' needs true or false", spec.name),
                ))
            }
        },
        AttributeKind::Categorical { levels } => {
            let s = equals.as_str().ok_or_else(|| {
                perr(
                    format!("{loc}.equals"),
                    format!("categorical attribute '{}' needs a level name", spec.name),
                )
            })?;
            levels.iter().position(|l| l == s).ok_or_else(|| {
                perr(
                    format!("{loc}.equals"),
                    format!("'{s}' is not a level of '{}'", spec.name),
                )
            })?
        }
        AttributeKind::Numeric { .. } => {
            return Err(perr(
                format!("{loc}.attribute"),
                format!(
                    "numeric attribute '{}' cannot appear in a literal",
                    spec.name
                ),
            ))
        }
    };
    Ok(Literal { attribute, level })
}

fn parse_condition(schema: &AttributeSchema, v: &Value, loc: &str) -> Result<Condition> {
    let obj = v
        .as_object()
        .ok_or_else(|| perr(loc, "expected a condition object"))?;
    for (key, ctor) in [
        ("all", Condition::All as fn(_) -> _),
        ("any", Condition::Any),
    ] {
        if let Some(list) = obj.get(key) {
            check_fields(obj, &[key], loc)?;
            let items = list
                .as_array()
                .ok_or_else(|| perr(format!("{loc}.{key}"), "expected an array"))?;
            if items.is_empty() {
                return Err(perr(format!("{loc}.{key}"), "empty condition list"));
            }
            let parsed = items
                .iter()
                .enumerate()
                .map(|(i, c)| parse_condition(schema, c, &format!("{loc}.{key}[{i}]")))
                .collect::<Result<Vec<_>>>()?;
            return Ok(ctor(parsed));
        }
    }
    parse_literal(schema, v, loc).map(Condition::Literal)
}

fn discrete_attribute(schema: &AttributeSchema, v: &Value, loc: &str) -> Result<usize> {
    let a = attribute_ref(schema, v, loc)?;
    if schema.get(a).kind.level_count().is_none() {
        return Err(perr(
            loc,
            format!(
                "attribute '{}' must be boolean or categorical",
                schema.get(a).name
            ),
        ));
    }
    Ok(a)
}

fn parse_rule(schema: &AttributeSchema, v: &Value, loc: &str) -> Result<RuleDefinition> {
    let obj = v
        .as_object()
        .ok_or_else(|| perr(loc, "expected a rule object"))?;
    let id = field(obj, "id", loc)?
        .as_str()
        .filter(|s| !s.is_empty())
        .ok_or_else(|| perr(format!("{loc}.id"), "expected a non-empty string"))?
        .to_string();
    let kind_name = field(obj, "kind", loc)?
        .as_str()
        .ok_or_else(|| perr(format!("{loc}.kind"), "expected a string"))?;

    let kind = match kind_name {
        "sample_implication" => {
            check_fields(obj, &["id", "kind", "antecedent", "consequent"], loc)?;
            let ante = field(obj, "antecedent", loc)?.as_array().ok_or_else(|| {
                perr(format!("{loc}.antecedent"), "expected an array of literals")
            })?;
            if ante.is_empty() {
                return Err(perr(
                    format!("{loc}.antecedent"),
                    "antecedent needs at least one literal",
                ));
            }
            let antecedent = ante
                .iter()
                .enumerate()
                .map(|(i, l)| parse_literal(schema, l, &format!("{loc}.antecedent[{i}]")))
                .collect::<Result<Vec<_>>>()?;
            let consequent = parse_condition(
                schema,
                field(obj, "consequent", loc)?,
                &format!("{loc}.consequent"),
            )?;
            RuleKind::SampleImplication {
                antecedent,
                consequent,
            }
        }
        "cluster_homogeneity" => {
            check_fields(obj, &["id", "kind", "attributes"], loc)?;
            let list = field(obj, "attributes", loc)?
                .as_array()
                .filter(|a| !a.is_empty())
                .ok_or_else(|| perr(format!("{loc}.attributes"), "expected a non-empty array"))?;
            let attributes = list
                .iter()
                .enumerate()
                .map(|(i, a)| discrete_attribute(schema, a, &format!("{loc}.attributes[{i}]")))
                .collect::<Result<Vec<_>>>()?;
            RuleKind::ClusterHomogeneity { attributes }
        }
        "cluster_exclusion" => {
            check_fields(obj, &["id", "kind", "literals"], loc)?;
            let list = field(obj, "literals", loc)?
                .as_array()
                .filter(|a| a.len() == 2)
                .ok_or_else(|| perr(format!("{loc}.literals"), "expected exactly two literals"))?;
            let first = parse_literal(schema, &list[0], &format!("{loc}.literals[0]"))?;
            let second = parse_literal(schema, &list[1], &format!("{loc}.literals[1]"))?;
            if first == second {
                return Err(perr(format!("{loc}.literals"), "literals must differ"));
            }
            RuleKind::ClusterExclusion { first, second }
        }
        "numeric_spread" => {
            check_fields(obj, &["id", "kind", "attribute", "max_range"], loc)?;
            let attribute = attribute_ref(
                schema,
                field(obj, "attribute", loc)?,
                &format!("{loc}.attribute"),
            )?;
            if !matches!(schema.get(attribute).kind, AttributeKind::Numeric { .. }) {
                return Err(perr(
                    format!("{loc}.attribute"),
                    format!("attribute '{}' must be numeric", schema.get(attribute).name),
                ));
            }
            let max_range = field(obj, "max_range", loc)?
                .as_f64()
                .filter(|r| r.is_finite() && *r > 0.0)
                .ok_or_else(|| perr(format!("{loc}.max_range"), "expected a positive number"))?;
            RuleKind::NumericSpread {
                attribute,
                max_range,
            }
        }
        other => {
            return Err(perr(
                format!("{loc}.kind"),
                format!("unknown rule kind '{other}'"),
            ))
        }
    };
    Ok(RuleDefinition { id, kind })
}

fn literal_to_json(schema: &AttributeSchema, l: &Literal) -> Value {
    let spec = schema.get(l.attribute);
    json!({"attribute": spec.name, "equals": schema.value_to_json(l.attribute, l.level as f64)})
}

fn condition_to_json(schema: &AttributeSchema, c: &Condition) -> Value {
    match c {
        Condition::Literal(l) => literal_to_json(schema, l),
        Condition::All(cs) => {
            json!({"all": cs.iter().map(|c| condition_to_json(schema, c)).collect::<Vec<_>>()})
        }
        Condition::Any(cs) => {
            json!({"any": cs.iter().map(|c| condition_to_json(schema, c)).collect::<Vec<_>>()})
        }
    }
}

fn rule_to_json(schema: &AttributeSchema, r: &RuleDefinition) -> Value {
    let name = |a: usize| schema.get(a).name.clone();
    match &r.kind {
        RuleKind::SampleImplication {
            antecedent,
            consequent,
        } => json!({
            "id": r.id, "kind": r.kind.name(),
            "antecedent": antecedent.iter().map(|l| literal_to_json(schema, l)).collect::<Vec<_>>(),
            "consequent": condition_to_json(schema, consequent),
        }),
        RuleKind::ClusterHomogeneity { attributes } => json!({
            "id": r.id, "kind": r.kind.name(),
            "attributes": attributes.iter().map(|&a| name(a)).collect::<Vec<_>>(),
        }),
        RuleKind::ClusterExclusion { first, second } => json!({
            "id": r.id, "kind": r.kind.name(),
            "literals": [literal_to_json(schema, first), literal_to_json(schema, second)],
        }),
        RuleKind::NumericSpread {
            attribute,
            max_range,
        } => json!({
            "id": r.id, "kind": r.kind.name(),
            "attribute": name(*attribute), "max_range": max_range,
        }),
    }
}
