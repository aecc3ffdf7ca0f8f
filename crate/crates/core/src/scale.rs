//! Scale schema: items, the five bias dimensions, hot/cold tags, answer
//! keys, and scoring of raw answers.

use crate::ingest::ResponseMatrix;
use crate::stats::round2;
use serde::{Deserialize, Serialize};
use std::collections::{BTreeMap, BTreeSet, HashSet};
use std::fmt;
use std::str::FromStr;
use thiserror::Error;

/// The five bias dimensions. Declaration order is canonical and is used for
/// every tie-break.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Dimension {
    Calculation,
    Belief,
    Information,
    Social,
    Memory,
}

impl Dimension {
    pub const ALL: [Dimension; 5] = [
        Dimension::Calculation,
        Dimension::Belief,
        Dimension::Information,
        Dimension::Social,
        Dimension::Memory,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            Dimension::Calculation => "Calculation",
            Dimension::Belief => "Belief",
            Dimension::Information => "Information",
            Dimension::Social => "Social",
            Dimension::Memory => "Memory",
        }
    }

    pub fn index(self) -> usize {
        self as usize
    }
}

impl fmt::Display for Dimension {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Dimension {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Dimension::ALL
            .into_iter()
            .find(|d| d.as_str().eq_ignore_ascii_case(s.trim()))
            .ok_or_else(|| format!("unknown dimension '{s}'"))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum SystemTag {
    Hot,
    Cold,
}

impl FromStr for SystemTag {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim().to_ascii_lowercase().as_str() {
            "hot" => Ok(SystemTag::Hot),
            "cold" => Ok(SystemTag::Cold),
            _ => Err(format!("unknown system tag '{s}'")),
        }
    }
}

impl fmt::Display for SystemTag {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            SystemTag::Hot => "Hot",
            SystemTag::Cold => "Cold",
        })
    }
}

pub type Partition = BTreeMap<Dimension, SystemTag>;

/// Hot = {Social, Belief}; Cold = {Calculation, Information, Memory}.
pub fn default_partition() -> Partition {
    use Dimension::*;
    [
        (Calculation, SystemTag::Cold),
        (Belief, SystemTag::Hot),
        (Information, SystemTag::Cold),
        (Social, SystemTag::Hot),
        (Memory, SystemTag::Cold),
    ]
    .into_iter()
    .collect()
}

/// Parses `Calculation=Cold,Belief=Hot,...`. Dimensions not named keep their
/// entry from `base`.
pub fn parse_partition(spec: &str, base: &Partition) -> Result<Partition, String> {
    let mut out = base.clone();
    for part in spec.split(',').map(str::trim).filter(|p| !p.is_empty()) {
        let (d, t) = part
            .split_once('=')
            .ok_or_else(|| format!("expected Dimension=Tag, got '{part}'"))?;
        out.insert(d.parse()?, t.parse()?);
    }
    Ok(out)
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ChoiceOption {
    pub id: String,
    pub text: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub enum ItemFormat {
    MultipleChoice {
        options: Vec<ChoiceOption>,
        rational_key: String,
    },
    Likert {
        min: i64,
        max: i64,
    },
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Item {
    pub id: String,
    pub text: String,
    pub dimension: Dimension,
    pub bias_name: String,
    pub format: ItemFormat,
}

impl Item {
    pub fn is_keyed(&self) -> bool {
        matches!(self.format, ItemFormat::MultipleChoice { .. })
    }

    /// Maps a scored value onto `[0, 1]`: keyed items are already 0/1,
    /// Likert values become `(v - min) / (max - min)`.
    pub fn normalize(&self, value: f64) -> f64 {
        match self.format {
            ItemFormat::MultipleChoice { .. } => value,
            ItemFormat::Likert { min, max } => (value - min as f64) / (max - min) as f64,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ScaleDefinition {
    pub name: String,
    pub version: String,
    pub items: Vec<Item>,
    pub bias_catalog: BTreeSet<String>,
    pub hot_cold_partition: Partition,
}

impl ScaleDefinition {
    pub fn item(&self, id: &str) -> Option<&Item> {
        self.items.iter().find(|i| i.id == id)
    }

    pub fn item_position(&self, id: &str) -> Option<usize> {
        self.items.iter().position(|i| i.id == id)
    }

    pub fn items_in(&self, dim: Dimension) -> impl Iterator<Item = &Item> {
        self.items.iter().filter(move |i| i.dimension == dim)
    }

    pub fn dimensions_present(&self) -> Vec<Dimension> {
        Dimension::ALL
            .into_iter()
            .filter(|d| self.items_in(*d).next().is_some())
            .collect()
    }

    pub fn reference(&self) -> ScaleRef {
        ScaleRef {
            name: self.name.clone(),
            version: self.version.clone(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ScaleRef {
    pub name: String,
    pub version: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Error, Serialize, Deserialize)]
pub enum Violation {
    #[error("scale has no items")]
    EmptyScale,
    #[error("duplicate item id '{id}'")]
    DuplicateId { id: String },
    #[error("item '{item_id}' uses bias '{bias}' which is not in the bias catalog")]
    UnknownBias { item_id: String, bias: String },
    #[error("item '{item_id}' has {count} options; at least 2 are required")]
    TooFewOptions { item_id: String, count: usize },
    #[error("item '{item_id}' repeats option id '{option}'")]
    DuplicateOptionId { item_id: String, option: String },
    #[error("item '{item_id}' rational key '{key}' is not one of its options")]
    KeyNotInOptions { item_id: String, key: String },
    #[error("item '{item_id}' has Likert range {min}..{max}; min must be below max")]
    InvalidLikertRange { item_id: String, min: i64, max: i64 },
    #[error("dimension {dimension} has items but no hot/cold partition entry")]
    MissingPartition { dimension: Dimension },
    #[error("dimension {dimension} has no items")]
    DimensionWithoutItems { dimension: Dimension },
}

/// Outcome of [`validate_scale`]. Only `errors` make a scale invalid.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct ValidationReport {
    pub errors: Vec<Violation>,
    pub warnings: Vec<Violation>,
}

impl ValidationReport {
    pub fn is_valid(&self) -> bool {
        self.errors.is_empty()
    }
}

pub fn validate_scale(def: &ScaleDefinition) -> ValidationReport {
    let mut report = ValidationReport::default();
    let errors = &mut report.errors;
    if def.items.is_empty() {
        errors.push(Violation::EmptyScale);
    }
    let mut seen = HashSet::new();
    for item in &def.items {
        if !seen.insert(item.id.as_str()) {
            errors.push(Violation::DuplicateId { id: item.id.clone() });
        }
        if !def.bias_catalog.contains(&item.bias_name) {
            errors.push(Violation::UnknownBias {
                item_id: item.id.clone(),
                bias: item.bias_name.clone(),
            });
        }
        match &item.format {
            ItemFormat::MultipleChoice { options, rational_key } => {
                if options.len() < 2 {
                    errors.push(Violation::TooFewOptions {
                        item_id: item.id.clone(),
                        count: options.len(),
                    });
                }
                let mut ids = HashSet::new();
                for o in options {
                    if !ids.insert(o.id.as_str()) {
                        errors.push(Violation::DuplicateOptionId {
                            item_id: item.id.clone(),
                            option: o.id.clone(),
                        });
                    }
                }
                if !ids.contains(rational_key.as_str()) {
                    errors.push(Violation::KeyNotInOptions {
                        item_id: item.id.clone(),
                        key: rational_key.clone(),
                    });
                }
            }
            ItemFormat::Likert { min, max } => {
                if min >= max {
                    errors.push(Violation::InvalidLikertRange {
                        item_id: item.id.clone(),
                        min: *min,
                        max: *max,
                    });
                }
            }
        }
    }
    for dim in Dimension::ALL {
        let used = def.items_in(dim).next().is_some();
        if used && !def.hot_cold_partition.contains_key(&dim) {
            report.errors.push(Violation::MissingPartition { dimension: dim });
        }
        if !used {
            report
                .warnings
                .push(Violation::DimensionWithoutItems { dimension: dim });
        }
    }
    report
}

/// A scored answer. `correct` is defined only for keyed items.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ScoredValue {
    pub value: f64,
    pub correct: Option<bool>,
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ScaleError {
    #[error("response '{raw}' is not valid for item '{item_id}'")]
    UnparseableResponse { item_id: String, raw: String },
    #[error("no keyed (multiple-choice) cells present")]
    NoKeyedItems,
}

/// Scores one raw answer: option ids for multiple-choice items (compared
/// case-insensitively), integers for Likert items.
pub fn score_response(item: &Item, raw: &str) -> Result<ScoredValue, ScaleError> {
    let raw_t = raw.trim();
    let bad = || ScaleError::UnparseableResponse {
        item_id: item.id.clone(),
        raw: raw.to_string(),
    };
    match &item.format {
        ItemFormat::MultipleChoice { options, rational_key } => {
            let chosen = options
                .iter()
                .find(|o| o.id.eq_ignore_ascii_case(raw_t))
                .ok_or_else(bad)?;
            let correct = chosen.id == *rational_key;
            Ok(ScoredValue {
                value: if correct { 1.0 } else { 0.0 },
                correct: Some(correct),
            })
        }
        ItemFormat::Likert { min, max } => {
            let v: i64 = raw_t
                .parse()
                .ok()
                .or_else(|| {
                    // accept integral floats such as "4.0"
                    let f: f64 = raw_t.parse().ok()?;
                    (f.fract() == 0.0 && f.is_finite()).then_some(f as i64)
                })
                .ok_or_else(bad)?;
            if v < *min || v > *max {
                return Err(bad());
            }
            Ok(ScoredValue {
                value: v as f64,
                correct: None,
            })
        }
    }
}

/// `(correct, total)` over the non-missing keyed cells of `m`.
pub fn keyed_counts(m: &ResponseMatrix, scale: &ScaleDefinition) -> (usize, usize) {
    let mut correct = 0;
    let mut total = 0;
    for (c, id) in m.item_ids.iter().enumerate() {
        if !scale.item(id).is_some_and(Item::is_keyed) {
            continue;
        }
        for r in 0..m.n() {
            if let Some(v) = m.get(r, c) {
                total += 1;
                if v == 1.0 {
                    correct += 1;
                }
            }
        }
    }
    (correct, total)
}

/// Percentage of keyed cells answered with the rational option, rounded to
/// two decimals.
pub fn accuracy(m: &ResponseMatrix, scale: &ScaleDefinition) -> Result<f64, ScaleError> {
    let (correct, total) = keyed_counts(m, scale);
    if total == 0 {
        return Err(ScaleError::NoKeyedItems);
    }
    Ok(round2(100.0 * correct as f64 / total as f64))
}

const DEMO_SCALE_TOML: &str = include_str!("../data/demo.scale.toml");

/// The bundled 20-item demonstration scale (4 items per dimension, synthetic
/// text). It is not the published instrument.
pub fn demo_scale() -> ScaleDefinition {
    crate::ingest::parse_scale(DEMO_SCALE_TOML).expect("bundled demo scale is valid")
}

pub fn demo_scale_source() -> &'static str {
    DEMO_SCALE_TOML
}
