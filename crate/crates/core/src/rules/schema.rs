use std::collections::HashMap;

use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum AttributeKind {
    Boolean,
    Categorical { levels: Vec<String> },
    Numeric { unit: Option<String> },
}

impl AttributeKind {
    /// Number of discrete levels; `None` for numeric attributes.
    pub fn level_count(&self) -> Option<usize> {
        match self {
            AttributeKind::Boolean => Some(2),
            AttributeKind::Categorical { levels } => Some(levels.len()),
            AttributeKind::Numeric { .. } => None,
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            AttributeKind::Boolean => "boolean",
            AttributeKind::Categorical { .. } => "categorical",
            AttributeKind::Numeric { .. } => "numeric",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AttributeSpec {
    pub name: String,
    pub kind: AttributeKind,
}

/// Ordered attribute declarations shared by rule files and dataset manifests.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct AttributeSchema {
    attributes: Vec<AttributeSpec>,
    index: HashMap<String, usize>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawAttribute {
    name: String,
    kind: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    levels: Option<Vec<String>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    unit: Option<String>,
}

impl AttributeSchema {
    pub fn new(attributes: Vec<AttributeSpec>) -> Result<Self> {
        let mut index = HashMap::with_capacity(attributes.len());
        for (i, a) in attributes.iter().enumerate() {
            if a.name.is_empty() {
                return Err(Error::usage(format!("attribute {i} has an empty name")));
            }
            if let AttributeKind::Categorical { levels } = &a.kind {
                if levels.is_empty() {
                    return Err(Error::usage(format!(
                        "categorical attribute '{}' declares no levels",
                        a.name
                    )));
                }
                let mut seen = std::collections::HashSet::new();
                if let Some(dup) = levels.iter().find(|l| !seen.insert(*l)) {
                    return Err(Error::usage(format!(
                        "attribute '{}' repeats level '{dup}'",
                        a.name
                    )));
                }
            }
            if index.insert(a.name.clone(), i).is_some() {
                return Err(Error::usage(format!(
                    "duplicate attribute name '{}'",
                    a.name
                )));
            }
        }
        Ok(AttributeSchema { attributes, index })
    }

    /// Parses the JSON array form `[{"name", "kind", "levels"?, "unit"?}]`.
    pub fn from_json(value: &Value) -> Result<Self> {
        let raw: Vec<RawAttribute> = serde_json::from_value(value.clone())?;
        let mut specs = Vec::with_capacity(raw.len());
        for (i, r) in raw.into_iter().enumerate() {
            let kind = match r.kind.as_str() {
                "boolean" => AttributeKind::Boolean,
                "categorical" => AttributeKind::Categorical {
                    levels: r.levels.ok_or_else(|| {
                        Error::usage(format!("schema[{i}] categorical '{}' needs levels", r.name))
                    })?,
                },
                "numeric" => AttributeKind::Numeric { unit: r.unit },
                other => {
                    return Err(Error::usage(format!(
                        "schema[{i}] has unknown kind '{other}'"
                    )))
                }
            };
            specs.push(AttributeSpec { name: r.name, kind });
        }
        AttributeSchema::new(specs)
    }

    pub fn to_json(&self) -> Value {
        let raw: Vec<RawAttribute> = self
            .attributes
            .iter()
            .map(|a| {
                let (levels, unit) = match &a.kind {
                    AttributeKind::Boolean => (None, None),
                    AttributeKind::Categorical { levels } => (Some(levels.clone()), None),
                    AttributeKind::Numeric { unit } => (None, unit.clone()),
                };
                RawAttribute {
                    name: a.name.clone(),
                    kind: a.kind.name().to_string(),
                    levels,
                    unit,
                }
            })
            .collect();
        serde_json::to_value(raw).expect("schema serializes")
    }

    pub fn len(&self) -> usize {
        self.attributes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.attributes.is_empty()
    }

    pub fn attributes(&self) -> &[AttributeSpec] {
        &self.attributes
    }

    pub fn get(&self, i: usize) -> &AttributeSpec {
        &self.attributes[i]
    }

    pub fn index_of(&self, name: &str) -> Option<usize> {
        self.index.get(name).copied()
    }

    /// Reads one attribute value from its JSON form: `true`/`false` or 0/1 for
    /// booleans, a level name for categoricals, a number for numerics.
    pub fn parse_value(&self, attr: usize, value: &Value) -> Result<f64> {
        let spec = &self.attributes[attr];
        let bad = || {
            Error::usage(format!(
                "value {value} is not valid for {} attribute '{}'",
                spec.kind.name(),
                spec.name
            ))
        };
        match &spec.kind {
            AttributeKind::Boolean => match value {
                Value::Bool(b) => Ok(if *b { 1.0 } else { 0.0 }),
                Value::Number(n) => match n.as_f64() {
                    Some(v) if v == 0.0 || v == 1.0 => Ok(v),
                    _ => Err(bad()),
                },
                _ => Err(bad()),
            },
            AttributeKind::Categorical { levels } => match value {
                Value::String(s) => levels
                    .iter()
                    .position(|l| l == s)
                    .map(|i| i as f64)
                    .ok_or_else(bad),
                _ => Err(bad()),
            },
            AttributeKind::Numeric { .. } => match value.as_f64() {
                Some(v) if v.is_finite() => Ok(v),
                _ => Err(bad()),
            },
        }
    }

    /// Inverse of [`AttributeSchema::parse_value`].
    pub fn value_to_json(&self, attr: usize, v: f64) -> Value {
        match &self.attributes[attr].kind {
            AttributeKind::Boolean => Value::Bool(v != 0.0),
            AttributeKind::Categorical { levels } => Value::String(levels[v as usize].clone()),
            AttributeKind::Numeric { .. } => serde_json::Number::from_f64(v)
                .map(Value::Number)
                .unwrap_or(Value::Null),
        }
    }

    /// Checks that `values` has one admissible entry per attribute.
    pub fn validate(&self, values: &AttributeVector) -> Result<()> {
        if values.len() != self.len() {
            return Err(Error::shape(format!(
                "attribute vector has {} entries, schema has {}",
                values.len(),
                self.len()
            )));
        }
        for (spec, &v) in self.attributes.iter().zip(values.as_slice()) {
            let ok = match spec.kind.level_count() {
                Some(n) => v >= 0.0 && v.fract() == 0.0 && (v as usize) < n,
                None => v.is_finite(),
            };
            if !ok {
                return Err(Error::usage(format!(
                    "value {v} is not valid for {} attribute '{}'",
                    spec.kind.name(),
                    spec.name
                )));
            }
        }
        Ok(())
    }

    /// Width of the numeric encoding fed to the rule encoder: one column per
    /// boolean or numeric attribute, one per level for categoricals.
    pub fn encoded_width(&self) -> usize {
        self.attributes
            .iter()
            .map(|a| match &a.kind {
                AttributeKind::Categorical { levels } => levels.len(),
                _ => 1,
            })
            .sum()
    }
}

impl Serialize for AttributeSchema {
    fn serialize<S: serde::Serializer>(
        &self,
        serializer: S,
    ) -> std::result::Result<S::Ok, S::Error> {
        self.to_json().serialize(serializer)
    }
}

impl<'de> Deserialize<'de> for AttributeSchema {
    fn deserialize<D: serde::Deserializer<'de>>(
        deserializer: D,
    ) -> std::result::Result<Self, D::Error> {
        let v = Value::deserialize(deserializer)?;
        AttributeSchema::from_json(&v).map_err(serde::de::Error::custom)
    }
}

/// Attribute values in schema order: booleans as 0/1, categoricals as level
/// index, numerics as reals.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct AttributeVector(Vec<f64>);

impl AttributeVector {
    pub fn new(values: Vec<f64>) -> Self {
        AttributeVector(values)
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    #[inline]
    pub fn level(&self, attr: usize) -> usize {
        self.0[attr] as usize
    }

    #[inline]
    pub fn value(&self, attr: usize) -> f64 {
        self.0[attr]
    }
}

impl From<Vec<f64>> for AttributeVector {
    fn from(v: Vec<f64>) -> Self {
        AttributeVector(v)
    }
}
