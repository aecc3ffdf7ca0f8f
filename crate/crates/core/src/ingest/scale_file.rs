use super::IngestError;
use crate::scale::{validate_scale, ChoiceOption, Dimension, Item, ItemFormat, Partition, ScaleDefinition, SystemTag};
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;
use std::io::Read;

// Mirror of the on-disk layout. Every field is optional so that missing
// fields surface as schema violations with a path instead of parse errors.
#[derive(Debug, Default, Serialize, Deserialize)]
struct ScaleFile {
    #[serde(skip_serializing_if = "Option::is_none")]
    name: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    version: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    bias_catalog: Option<Vec<String>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    hot_cold_partition: Option<BTreeMap<String, String>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    items: Option<Vec<ItemFile>>,
}

#[derive(Debug, Default, Serialize, Deserialize)]
struct ItemFile {
    #[serde(skip_serializing_if = "Option::is_none")]
    id: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    dimension: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    bias_name: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    text: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    format: Option<FormatFile>,
}

#[derive(Debug, Default, Serialize, Deserialize)]
struct FormatFile {
    #[serde(skip_serializing_if = "Option::is_none")]
    kind: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    rational_key: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    options: Option<Vec<ChoiceOption>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    min: Option<i64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    max: Option<i64>,
}

struct Collector(Vec<String>);

impl Collector {
    fn require<T>(&mut self, v: Option<T>, path: &str) -> Option<T> {
        if v.is_none() {
            self.0.push(format!("{path}: missing field"));
        }
        v
    }
}

fn convert_item(raw: ItemFile, i: usize, errs: &mut Collector) -> Option<Item> {
    let path = format!("items[{i}]");
    let id = errs.require(raw.id, &format!("{path}.id"));
    let text = errs.require(raw.text, &format!("{path}.text"));
    let bias = errs.require(raw.bias_name, &format!("{path}.bias_name"));
    let dimension =
        errs.require(raw.dimension, &format!("{path}.dimension"))
            .and_then(|d| match d.parse::<Dimension>() {
                Ok(d) => Some(d),
                Err(e) => {
                    errs.0.push(format!("{path}.dimension: {e}"));
                    None
                }
            });
    let format = errs.require(raw.format, &format!("{path}.format")).and_then(|f| {
        let kind = errs.require(f.kind, &format!("{path}.format.kind"))?;
        match kind.as_str() {
            "multiple_choice" => {
                let options = errs.require(f.options, &format!("{path}.format.options"));
                let key = errs.require(f.rational_key, &format!("{path}.format.rational_key"));
                Some(ItemFormat::MultipleChoice {
                    options: options?,
                    rational_key: key?,
                })
            }
            "likert" => {
                let min = errs.require(f.min, &format!("{path}.format.min"));
                let max = errs.require(f.max, &format!("{path}.format.max"));
                Some(ItemFormat::Likert { min: min?, max: max? })
            }
            other => {
                errs.0.push(format!(
                    "{path}.format.kind: unknown kind '{other}' (expected multiple_choice or likert)"
                ));
                None
            }
        }
    });
    Some(Item {
        id: id?,
        text: text?,
        dimension: dimension?,
        bias_name: bias?,
        format: format?,
    })
}

/// Parses and validates a scale from its text form.
pub fn parse_scale(text: &str) -> Result<ScaleDefinition, IngestError> {
    let raw: ScaleFile = toml::from_str(text).map_err(|e| IngestError::Parse(e.to_string()))?;
    let mut errs = Collector(Vec::new());
    let name = errs.require(raw.name, "name");
    let version = errs.require(raw.version, "version");
    let catalog = errs.require(raw.bias_catalog, "bias_catalog");
    let partition = errs.require(raw.hot_cold_partition, "hot_cold_partition").map(|p| {
        let mut out = Partition::new();
        for (k, v) in p {
            match (k.parse::<Dimension>(), v.parse::<SystemTag>()) {
                (Ok(d), Ok(t)) => {
                    out.insert(d, t);
                }
                (Err(e), _) | (_, Err(e)) => errs.0.push(format!("hot_cold_partition.{k}: {e}")),
            }
        }
        out
    });
    let items: Vec<Option<Item>> = errs
        .require(raw.items, "items")
        .unwrap_or_default()
        .into_iter()
        .enumerate()
        .map(|(i, it)| convert_item(it, i, &mut errs))
        .collect();
    if !errs.0.is_empty() {
        return Err(IngestError::SchemaViolation(errs.0));
    }
    let def = ScaleDefinition {
        name: name.unwrap_or_default(),
        version: version.unwrap_or_default(),
        items: items.into_iter().flatten().collect(),
        bias_catalog: catalog.unwrap_or_default().into_iter().collect(),
        hot_cold_partition: partition.unwrap_or_default(),
    };
    let report = validate_scale(&def);
    if !report.is_valid() {
        return Err(IngestError::SchemaViolation(
            report.errors.iter().map(ToString::to_string).collect(),
        ));
    }
    for w in &report.warnings {
        log::warn!("scale '{}': {w}", def.name);
    }
    Ok(def)
}

pub fn load_scale<R: Read>(mut source: R) -> Result<ScaleDefinition, IngestError> {
    let mut text = String::new();
    source.read_to_string(&mut text)?;
    parse_scale(&text)
}

/// Serializes a scale back to its text form.
pub fn scale_to_toml(def: &ScaleDefinition) -> String {
    let file = ScaleFile {
        name: Some(def.name.clone()),
        version: Some(def.version.clone()),
        bias_catalog: Some(def.bias_catalog.iter().cloned().collect()),
        hot_cold_partition: Some(
            def.hot_cold_partition
                .iter()
                .map(|(d, t)| (d.to_string(), t.to_string()))
                .collect(),
        ),
        items: Some(
            def.items
                .iter()
                .map(|it| ItemFile {
                    id: Some(it.id.clone()),
                    dimension: Some(it.dimension.to_string()),
                    bias_name: Some(it.bias_name.clone()),
                    text: Some(it.text.clone()),
                    format: Some(match &it.format {
                        ItemFormat::MultipleChoice { options, rational_key } => FormatFile {
                            kind: Some("multiple_choice".into()),
                            rational_key: Some(rational_key.clone()),
                            options: Some(options.clone()),
                            ..Default::default()
                        },
                        ItemFormat::Likert { min, max } => FormatFile {
                            kind: Some("likert".into()),
                            min: Some(*min),
                            max: Some(*max),
                            ..Default::default()
                        },
                    }),
                })
                .collect(),
        ),
    };
    toml::to_string_pretty(&file).expect("scale serializes")
}
