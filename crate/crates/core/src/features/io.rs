//! Manifest + JSON Lines dataset format.
//!
//! The manifest is `{"schema": [...], "dims": {"visual": Dv, "semantic": Ds},
//! "records_file": path}` with `path` relative to the manifest. Each records
//! line is `{"id", "visual": [...], "semantic": [...], "attributes": {...}}`.
//! Reals are written in plain decimal notation (shortest round-trip form);
//! exponent notation is accepted on input.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};
use serde_json::{Map, Value};

use super::{load_err, Dataset, FeatureRecord};
use crate::error::{Error, Result};
use crate::rules::{AttributeSchema, AttributeVector};

pub const RECORDS_FILE: &str = "records.jsonl";

#[derive(Debug, Serialize, Deserialize)]
struct Dims {
    visual: usize,
    semantic: usize,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct Manifest {
    schema: AttributeSchema,
    dims: Dims,
    records_file: String,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawRecord {
    id: String,
    visual: Vec<f64>,
    semantic: Vec<f64>,
    attributes: Map<String, Value>,
}

pub fn load_dataset(manifest_path: impl AsRef<Path>) -> Result<Dataset> {
    let manifest_path = manifest_path.as_ref();
    let text = fs::read_to_string(manifest_path).map_err(|e| Error::io(manifest_path, e))?;
    let manifest: Manifest = serde_json::from_str(&text)
        .map_err(|e| load_err(None, format!("{}: {e}", manifest_path.display())))?;
    let base = manifest_path.parent().unwrap_or_else(|| Path::new("."));
    let records_path = base.join(&manifest.records_file);
    let body = fs::read_to_string(&records_path).map_err(|e| Error::io(&records_path, e))?;

    let schema = manifest.schema;
    let mut records = Vec::new();
    for (lineno, line) in body.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let raw: RawRecord = serde_json::from_str(line).map_err(|e| {
            load_err(
                None,
                format!("{}:{}: {e}", records_path.display(), lineno + 1),
            )
        })?;
        let attributes = parse_attributes(&schema, &raw.attributes)
            .map_err(|e| load_err(Some(&raw.id), e.to_string()))?;
        records.push(FeatureRecord {
            id: raw.id,
            visual: raw.visual,
            semantic: raw.semantic,
            attributes,
        });
    }
    Dataset::new(
        schema,
        records,
        manifest.dims.visual,
        manifest.dims.semantic,
    )
}

pub(crate) fn parse_attributes(
    schema: &AttributeSchema,
    map: &Map<String, Value>,
) -> Result<AttributeVector> {
    if let Some(extra) = map.keys().find(|k| schema.index_of(k).is_none()) {
        return Err(Error::usage(format!(
            "attribute '{extra}' is not in the schema"
        )));
    }
    let values = schema
        .attributes()
        .iter()
        .enumerate()
        .map(|(i, spec)| {
            let v = map
                .get(&spec.name)
                .ok_or_else(|| Error::usage(format!("missing attribute '{}'", spec.name)))?;
            schema.parse_value(i, v)
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(AttributeVector::new(values))
}

/// Writes `manifest_path` and a records file next to it.
pub fn save_dataset(dataset: &Dataset, manifest_path: impl AsRef<Path>) -> Result<()> {
    let manifest_path = manifest_path.as_ref();
    let base = manifest_path.parent().unwrap_or_else(|| Path::new("."));
    if !base.as_os_str().is_empty() {
        fs::create_dir_all(base).map_err(|e| Error::io(base, e))?;
    }
    let manifest = Manifest {
        schema: dataset.schema().clone(),
        dims: Dims {
            visual: dataset.visual_dim(),
            semantic: dataset.semantic_dim(),
        },
        records_file: RECORDS_FILE.to_string(),
    };
    let mut text = serde_json::to_string_pretty(&manifest)?;
    text.push('\n');
    fs::write(manifest_path, text).map_err(|e| Error::io(manifest_path, e))?;

    let mut out = String::new();
    for r in dataset.records() {
        write_record(&mut out, dataset.schema(), r);
        out.push('\n');
    }
    let records_path = base.join(RECORDS_FILE);
    fs::write(&records_path, out).map_err(|e| Error::io(&records_path, e))
}

fn write_reals(out: &mut String, vals: &[f64]) {
    out.push('[');
    for (i, v) in vals.iter().enumerate() {
        if i > 0 {
            out.push(',');
        }
        // Display never uses exponent notation and round-trips exactly
        write!(out, "{v}").expect("write to String");
    }
    out.push(']');
}

fn write_record(out: &mut String, schema: &AttributeSchema, r: &FeatureRecord) {
    out.push_str("{\"id\":");
    out.push_str(&Value::String(r.id.clone()).to_string());
    out.push_str(",\"visual\":");
    write_reals(out, &r.visual);
    out.push_str(",\"semantic\":");
    write_reals(out, &r.semantic);
    out.push_str(",\"attributes\":{");
    for (i, spec) in schema.attributes().iter().enumerate() {
        if i > 0 {
            out.push(',');
        }
        out.push_str(&Value::String(spec.name.clone()).to_string());
        out.push(':');
        let v = r.attributes.value(i);
        match spec.kind {
            crate::rules::AttributeKind::Numeric { .. } => write!(out, "{v}").expect("write"),
            _ => out.push_str(&schema.value_to_json(i, v).to_string()),
        }
    }
    out.push_str("}}");
}
