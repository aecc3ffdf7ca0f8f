use super::IngestError;
use crate::scale::{score_response, ItemFormat, ScaleDefinition, ScaleRef};
use serde::{Deserialize, Serialize};
use std::collections::{BTreeMap, HashMap, HashSet};
use std::io::Read;

/// Respondents (or runs) × items grid of scored values. Missing cells are
/// `None` and are never imputed.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResponseMatrix {
    pub group_label: String,
    pub respondent_ids: Vec<String>,
    pub item_ids: Vec<String>,
    cells: Vec<Option<f64>>,
    pub scale_ref: ScaleRef,
}

impl ResponseMatrix {
    /// Builds a matrix from row-major cells.
    pub fn new(
        group_label: impl Into<String>,
        respondent_ids: Vec<String>,
        item_ids: Vec<String>,
        cells: Vec<Option<f64>>,
        scale_ref: ScaleRef,
    ) -> Result<Self, IngestError> {
        if respondent_ids.is_empty() || item_ids.is_empty() {
            return Err(IngestError::EmptyMatrix);
        }
        if cells.len() != respondent_ids.len() * item_ids.len() {
            return Err(IngestError::Shape(format!(
                "{} cells for {}x{} grid",
                cells.len(),
                respondent_ids.len(),
                item_ids.len()
            )));
        }
        let mut seen = HashSet::new();
        for id in &respondent_ids {
            if !seen.insert(id) {
                return Err(IngestError::DuplicateRespondent(id.clone()));
            }
        }
        let mut seen = HashSet::new();
        for id in &item_ids {
            if !seen.insert(id) {
                return Err(IngestError::DuplicateColumn(id.clone()));
            }
        }
        Ok(Self {
            group_label: group_label.into(),
            respondent_ids,
            item_ids,
            cells,
            scale_ref,
        })
    }

    pub fn from_rows(
        group_label: impl Into<String>,
        respondent_ids: Vec<String>,
        item_ids: Vec<String>,
        rows: Vec<Vec<Option<f64>>>,
        scale_ref: ScaleRef,
    ) -> Result<Self, IngestError> {
        if let Some(bad) = rows.iter().find(|r| r.len() != item_ids.len()) {
            return Err(IngestError::Shape(format!(
                "row of length {} for {} items",
                bad.len(),
                item_ids.len()
            )));
        }
        Self::new(
            group_label,
            respondent_ids,
            item_ids,
            rows.into_iter().flatten().collect(),
            scale_ref,
        )
    }

    pub fn n(&self) -> usize {
        self.respondent_ids.len()
    }

    pub fn k(&self) -> usize {
        self.item_ids.len()
    }

    pub fn get(&self, row: usize, col: usize) -> Option<f64> {
        self.cells[row * self.k() + col]
    }

    pub fn row(&self, row: usize) -> &[Option<f64>] {
        let k = self.k();
        &self.cells[row * k..(row + 1) * k]
    }

    pub fn column(&self, col: usize) -> Vec<Option<f64>> {
        (0..self.n()).map(|r| self.get(r, col)).collect()
    }

    pub fn cells(&self) -> &[Option<f64>] {
        &self.cells
    }

    pub fn item_index(&self, id: &str) -> Option<usize> {
        self.item_ids.iter().position(|i| i == id)
    }

    /// Indices of rows with no missing cells.
    pub fn complete_rows(&self) -> Vec<usize> {
        (0..self.n())
            .filter(|&r| self.row(r).iter().all(Option::is_some))
            .collect()
    }

    /// Cell values mapped to `[0, 1]` using each item's format.
    pub fn normalized(&self, scale: &ScaleDefinition) -> Vec<Vec<Option<f64>>> {
        let items: Vec<_> = self.item_ids.iter().map(|id| scale.item(id)).collect();
        (0..self.n())
            .map(|r| {
                self.row(r)
                    .iter()
                    .zip(&items)
                    .map(|(v, it)| match (v, it) {
                        (Some(v), Some(it)) => Some(it.normalize(*v)),
                        _ => None,
                    })
                    .collect()
            })
            .collect()
    }

    /// Sub-matrix over `ids`, in the given order.
    pub fn select_items(&self, ids: &[String]) -> Result<ResponseMatrix, IngestError> {
        let cols: Vec<usize> = ids
            .iter()
            .map(|id| {
                self.item_index(id)
                    .ok_or_else(|| IngestError::UnknownItemColumn(id.clone()))
            })
            .collect::<Result<_, _>>()?;
        let cells = (0..self.n())
            .flat_map(|r| cols.iter().map(move |&c| (r, c)))
            .map(|(r, c)| self.get(r, c))
            .collect();
        ResponseMatrix::new(
            self.group_label.clone(),
            self.respondent_ids.clone(),
            ids.to_vec(),
            cells,
            self.scale_ref.clone(),
        )
    }

    /// Row subset, in the given order.
    pub fn select_rows(&self, rows: &[usize]) -> Result<ResponseMatrix, IngestError> {
        let cells = rows.iter().flat_map(|&r| self.row(r).iter().copied()).collect();
        ResponseMatrix::new(
            self.group_label.clone(),
            rows.iter().map(|&r| self.respondent_ids[r].clone()).collect(),
            self.item_ids.clone(),
            cells,
            self.scale_ref.clone(),
        )
    }

    /// Stacks the rows of `other` below `self`; item lists must agree.
    pub fn concat_rows(&self, other: &ResponseMatrix) -> Result<ResponseMatrix, IngestError> {
        if self.item_ids != other.item_ids {
            return Err(IngestError::Shape("item lists differ".into()));
        }
        let mut ids = self.respondent_ids.clone();
        ids.extend(other.respondent_ids.iter().cloned());
        let mut cells = self.cells.clone();
        cells.extend_from_slice(&other.cells);
        ResponseMatrix::new(
            self.group_label.clone(),
            ids,
            self.item_ids.clone(),
            cells,
            self.scale_ref.clone(),
        )
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum Layout {
    #[default]
    Wide,
    Long,
}

impl std::str::FromStr for Layout {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "wide" => Ok(Layout::Wide),
            "long" => Ok(Layout::Long),
            other => Err(format!("unknown layout '{other}'")),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LoadedResponses {
    pub matrix: ResponseMatrix,
    /// Cells whose raw value could not be scored; they are stored as missing.
    pub unparseable_cells: usize,
}

fn score_cell(scale: &ScaleDefinition, item_id: &str, raw: &str, unparseable: &mut usize) -> Option<f64> {
    if raw.trim().is_empty() {
        return None;
    }
    let item = scale.item(item_id)?;
    match score_response(item, raw) {
        Ok(s) => Some(s.value),
        Err(e) => {
            log::warn!("{e}; stored as missing");
            *unparseable += 1;
            None
        }
    }
}

fn order_items(scale: &ScaleDefinition, present: &HashSet<String>) -> Vec<String> {
    scale
        .items
        .iter()
        .filter(|i| present.contains(&i.id))
        .map(|i| i.id.clone())
        .collect()
}

/// Loads a delimiter-separated response table and scores every cell.
///
/// Item columns are ordered by their position in the scale for both layouts,
/// respondents by first appearance.
pub fn load_responses<R: Read>(
    source: R,
    scale: &ScaleDefinition,
    layout: Layout,
    group_label: &str,
) -> Result<LoadedResponses, IngestError> {
    let mut reader = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(source);
    let headers = reader.headers()?.clone();
    if headers.get(0) != Some("respondent_id") {
        return Err(IngestError::Parse("first column must be named 'respondent_id'".into()));
    }
    let mut unparseable = 0;
    let mut respondents: Vec<String> = Vec::new();
    let mut values: HashMap<(usize, String), Option<f64>> = HashMap::new();
    let mut present = HashSet::new();

    match layout {
        Layout::Wide => {
            let cols: Vec<String> = headers.iter().skip(1).map(str::to_string).collect();
            for c in &cols {
                if scale.item(c).is_none() {
                    return Err(IngestError::UnknownItemColumn(c.clone()));
                }
                if !present.insert(c.clone()) {
                    return Err(IngestError::DuplicateColumn(c.clone()));
                }
            }
            for rec in reader.records() {
                let rec = rec?;
                let rid = rec.get(0).unwrap_or_default().to_string();
                if respondents.contains(&rid) {
                    return Err(IngestError::DuplicateRespondent(rid));
                }
                let r = respondents.len();
                respondents.push(rid);
                for (c, id) in cols.iter().enumerate() {
                    let raw = rec.get(c + 1).unwrap_or("");
                    let v = score_cell(scale, id, raw, &mut unparseable);
                    values.insert((r, id.clone()), v);
                }
            }
        }
        Layout::Long => {
            if headers.len() != 3 || &headers[1] != "item_id" || &headers[2] != "value" {
                return Err(IngestError::Parse(
                    "long layout header must be respondent_id,item_id,value".into(),
                ));
            }
            let mut index: BTreeMap<String, usize> = BTreeMap::new();
            for rec in reader.records() {
                let rec = rec?;
                let rid = rec[0].to_string();
                let item = rec[1].to_string();
                if scale.item(&item).is_none() {
                    return Err(IngestError::UnknownItemColumn(item));
                }
                let r = *index.entry(rid.clone()).or_insert_with(|| {
                    respondents.push(rid.clone());
                    respondents.len() - 1
                });
                if values.contains_key(&(r, item.clone())) {
                    return Err(IngestError::DuplicateCell { respondent: rid, item });
                }
                let v = score_cell(scale, &item, &rec[2], &mut unparseable);
                present.insert(item.clone());
                values.insert((r, item), v);
            }
        }
    }

    let item_ids = order_items(scale, &present);
    if respondents.is_empty() || item_ids.is_empty() {
        return Err(IngestError::EmptyMatrix);
    }
    let mut cells = Vec::with_capacity(respondents.len() * item_ids.len());
    for r in 0..respondents.len() {
        for id in &item_ids {
            cells.push(values.get(&(r, id.clone())).copied().flatten());
        }
    }
    if unparseable > 0 {
        log::warn!("{group_label}: {unparseable} unparseable cell(s) stored as missing");
    }
    Ok(LoadedResponses {
        matrix: ResponseMatrix::new(group_label, respondents, item_ids, cells, scale.reference())?,
        unparseable_cells: unparseable,
    })
}

fn raw_value(scale: &ScaleDefinition, item_id: &str, v: f64) -> String {
    match scale.item(item_id).map(|i| &i.format) {
        Some(ItemFormat::MultipleChoice { options, rational_key }) => {
            if v == 1.0 {
                rational_key.clone()
            } else {
                options
                    .iter()
                    .find(|o| o.id != *rational_key)
                    .map(|o| o.id.clone())
                    .unwrap_or_default()
            }
        }
        Some(ItemFormat::Likert { .. }) => format!("{}", v.round() as i64),
        None => format!("{v}"),
    }
}

/// Wide-layout table of raw answers. Keyed cells scored 1 are written as the
/// rational option, cells scored 0 as the first other option, so reloading
/// reproduces the matrix.
pub fn write_wide(m: &ResponseMatrix, scale: &ScaleDefinition) -> Result<String, IngestError> {
    let mut w = csv::Writer::from_writer(Vec::new());
    let mut header = vec!["respondent_id".to_string()];
    header.extend(m.item_ids.iter().cloned());
    w.write_record(&header)?;
    for r in 0..m.n() {
        let mut rec = vec![m.respondent_ids[r].clone()];
        for (c, id) in m.item_ids.iter().enumerate() {
            rec.push(m.get(r, c).map(|v| raw_value(scale, id, v)).unwrap_or_default());
        }
        w.write_record(&rec)?;
    }
    Ok(String::from_utf8(w.into_inner().map_err(|e| e.into_error())?).expect("utf8"))
}

/// Long-layout table; missing cells are omitted.
pub fn write_long(m: &ResponseMatrix, scale: &ScaleDefinition) -> Result<String, IngestError> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(["respondent_id", "item_id", "value"])?;
    for r in 0..m.n() {
        for (c, id) in m.item_ids.iter().enumerate() {
            if let Some(v) = m.get(r, c) {
                w.write_record([m.respondent_ids[r].as_str(), id, &raw_value(scale, id, v)])?;
            }
        }
    }
    Ok(String::from_utf8(w.into_inner().map_err(|e| e.into_error())?).expect("utf8"))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scale::demo_scale;

    fn wide_fixture() -> String {
        let s = demo_scale();
        let mut out = String::from("respondent_id");
        for it in &s.items {
            out.push(',');
            out.push_str(&it.id);
        }
        out.push('\n');
        for (r, mc, lk) in [("p1", "B", "1"), ("p2", "A", "3"), ("p3", "", "5")] {
            out.push_str(r);
            for it in &s.items {
                out.push(',');
                out.push_str(if it.is_keyed() { mc } else { lk });
            }
            out.push('\n');
        }
        out
    }

    #[test]
    fn wide_three_by_twenty() {
        let s = demo_scale();
        let l = load_responses(wide_fixture().as_bytes(), &s, Layout::Wide, "g").unwrap();
        assert_eq!((l.matrix.n(), l.matrix.k()), (3, 20));
        assert_eq!(l.unparseable_cells, 0);
        assert_eq!(l.matrix.get(2, 0), None);
    }

    #[test]
    fn invalid_option_becomes_missing() {
        let s = demo_scale();
        let text = wide_fixture().replacen("p1,B", "p1,E", 1);
        let l = load_responses(text.as_bytes(), &s, Layout::Wide, "g").unwrap();
        assert_eq!(l.unparseable_cells, 1);
        assert_eq!(l.matrix.get(0, 0), None);
    }

    #[test]
    fn long_duplicate_cell() {
        let s = demo_scale();
        let text = "respondent_id,item_id,value\np1,calc-01,B\np1,calc-01,A\n";
        assert!(matches!(
            load_responses(text.as_bytes(), &s, Layout::Long, "g"),
            Err(IngestError::DuplicateCell { .. })
        ));
    }

    #[test]
    fn unknown_column() {
        let s = demo_scale();
        let text = "respondent_id,calc-01,nope\np1,B,1\n";
        assert!(matches!(
            load_responses(text.as_bytes(), &s, Layout::Wide, "g"),
            Err(IngestError::UnknownItemColumn(c)) if c == "nope"
        ));
    }

    #[test]
    fn empty_matrix() {
        let s = demo_scale();
        let text = "respondent_id,calc-01\n";
        assert!(matches!(
            load_responses(text.as_bytes(), &s, Layout::Wide, "g"),
            Err(IngestError::EmptyMatrix)
        ));
    }

    #[test]
    fn wide_and_long_agree() {
        let s = demo_scale();
        let wide = load_responses(wide_fixture().as_bytes(), &s, Layout::Wide, "g")
            .unwrap()
            .matrix;
        let long_text = write_long(&wide, &s).unwrap();
        let long = load_responses(long_text.as_bytes(), &s, Layout::Long, "g")
            .unwrap()
            .matrix;
        assert_eq!(wide, long);
        let rewide = write_wide(&wide, &s).unwrap();
        let again = load_responses(rewide.as_bytes(), &s, Layout::Wide, "g").unwrap().matrix;
        assert_eq!(wide, again);
    }

    #[test]
    fn columns_follow_scale_order() {
        let s = demo_scale();
        let text = "respondent_id,memory-01,calc-01\np1,B,B\n";
        let m = load_responses(text.as_bytes(), &s, Layout::Wide, "g").unwrap().matrix;
        assert_eq!(m.item_ids, vec!["calc-01", "memory-01"]);
    }
}
