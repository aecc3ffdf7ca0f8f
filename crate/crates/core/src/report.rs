//! The combined alignment report and its on-disk renderings.

use crate::intervention::InterventionReport;
use crate::psychometrics::{
    CfaResult, CriterionResult, FactorSolution, MdsResult, ParallelAnalysis, ReliabilityReport,
};
use crate::rsa::{GroupVariability, Rsm};
use crate::scale::{Dimension, Partition, ScaleRef};
use crate::sna::{CognitiveNetwork, NetworkMetrics, StructureClass};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use std::collections::BTreeSet;
use std::fmt::Write as _;
use std::io;
use std::path::{Path, PathBuf};
use std::str::FromStr;
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReportMetadata {
    pub tool: String,
    pub tool_version: String,
    pub scale: ScaleRef,
    pub seed: u64,
    pub stages: Vec<String>,
    pub isolation_threshold: f64,
    pub density_threshold: f64,
    pub partition: Partition,
    pub missing_policy: String,
    pub prng_algorithm: String,
    pub parallel_analysis_sims: usize,
    pub parallel_analysis_percentile: f64,
    pub mds_dims: usize,
    /// Plain-language statements of how each reported statistic is defined.
    pub conventions: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StageError {
    pub stage: String,
    pub message: String,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct GroupReport {
    pub label: String,
    pub source: String,
    pub n: usize,
    pub k: usize,
    pub unparseable_cells: usize,
    pub accuracy: Option<f64>,
    pub reliability: Option<ReliabilityReport>,
    pub parallel_analysis: Option<ParallelAnalysis>,
    pub efa: Option<FactorSolution>,
    pub cfa: Option<CfaResult>,
    pub mds: Option<MdsResult>,
    pub criterion_validity: Option<Vec<CriterionResult>>,
    pub rsm: Option<Rsm>,
    pub variability: Option<GroupVariability>,
    pub network: Option<CognitiveNetwork>,
    pub metrics: Option<NetworkMetrics>,
    pub structure: Option<StructureClass>,
    pub errors: Vec<StageError>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RsmComparison {
    pub a: String,
    pub b: String,
    pub similarity: Option<f64>,
    pub error: Option<String>,
}

/// Inter-module connectivity summary, one row per group.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConnectivityRow {
    pub group: String,
    pub avg_connectivity: f64,
    pub hot_cold_integration: Option<f64>,
    pub density: f64,
    pub variability_sd: Option<f64>,
}

/// Dominant core and Information status, one row per group.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CoreRow {
    pub group: String,
    pub dominant_core: Dimension,
    pub information_status: String,
    pub isolated_modules: Vec<Dimension>,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct CrossGroup {
    pub rsm_compare: Vec<RsmComparison>,
    pub connectivity_table: Vec<ConnectivityRow>,
    pub core_table: Vec<CoreRow>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AlignmentReport {
    pub metadata: ReportMetadata,
    pub groups: Vec<GroupReport>,
    pub cross_group: CrossGroup,
    pub interventions: Vec<InterventionReport>,
}

#[derive(Debug, Error)]
pub enum ReportError {
    #[error("unsupported format '{0}' (expected json, csv, svg-heatmap or dot-graph)")]
    UnsupportedFormat(String),
    #[error("{path}: {source}")]
    Io { path: PathBuf, source: io::Error },
    #[error("report JSON: {0}")]
    Json(#[from] serde_json::Error),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Format {
    Json,
    Csv,
    SvgHeatmap,
    DotGraph,
}

impl FromStr for Format {
    type Err = ReportError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim().to_ascii_lowercase().as_str() {
            "json" => Ok(Self::Json),
            "csv" => Ok(Self::Csv),
            "svg-heatmap" | "svg" => Ok(Self::SvgHeatmap),
            "dot-graph" | "dot" => Ok(Self::DotGraph),
            other => Err(ReportError::UnsupportedFormat(other.to_string())),
        }
    }
}

impl Format {
    pub fn as_str(self) -> &'static str {
        match self {
            Self::Json => "json",
            Self::Csv => "csv",
            Self::SvgHeatmap => "svg-heatmap",
            Self::DotGraph => "dot-graph",
        }
    }
}

/// Parses a comma-separated format list.
pub fn parse_formats(s: &str) -> Result<BTreeSet<Format>, ReportError> {
    s.split(',')
        .filter(|p| !p.trim().is_empty())
        .map(Format::from_str)
        .collect()
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ManifestEntry {
    pub path: String,
    pub kind: String,
    pub sha256: String,
}

/// JSON formatter that pretty-prints and writes every float with 17
/// significant digits.
struct ReportFormatter(serde_json::ser::PrettyFormatter<'static>);

impl serde_json::ser::Formatter for ReportFormatter {
    fn write_f64<W: ?Sized + io::Write>(&mut self, w: &mut W, v: f64) -> io::Result<()> {
        write!(w, "{v:.16e}")
    }
    fn begin_array<W: ?Sized + io::Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.0.begin_array(w)
    }
    fn end_array<W: ?Sized + io::Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.0.end_array(w)
    }
    fn begin_array_value<W: ?Sized + io::Write>(&mut self, w: &mut W, first: bool) -> io::Result<()> {
        self.0.begin_array_value(w, first)
    }
    fn end_array_value<W: ?Sized + io::Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.0.end_array_value(w)
    }
    fn begin_object<W: ?Sized + io::Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.0.begin_object(w)
    }
    fn end_object<W: ?Sized + io::Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.0.end_object(w)
    }
    fn begin_object_key<W: ?Sized + io::Write>(&mut self, w: &mut W, first: bool) -> io::Result<()> {
        self.0.begin_object_key(w, first)
    }
    fn begin_object_value<W: ?Sized + io::Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.0.begin_object_value(w)
    }
    fn end_object_value<W: ?Sized + io::Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.0.end_object_value(w)
    }
}

/// Serializes any value with the report float convention.
pub fn to_report_json<T: Serialize>(value: &T) -> Result<String, serde_json::Error> {
    let mut buf = Vec::new();
    let mut ser =
        serde_json::Serializer::with_formatter(&mut buf, ReportFormatter(serde_json::ser::PrettyFormatter::new()));
    value.serialize(&mut ser)?;
    buf.push(b'\n');
    Ok(String::from_utf8(buf).expect("serde_json emits UTF-8"))
}

pub fn read_report(text: &str) -> Result<AlignmentReport, ReportError> {
    Ok(serde_json::from_str(text)?)
}

fn file_stem(label: &str) -> String {
    label
        .chars()
        .map(|c| {
            if c.is_ascii_alphanumeric() || c == '-' || c == '_' {
                c
            } else {
                '_'
            }
        })
        .collect()
}

fn csv_num(v: Option<f64>) -> String {
    v.map(|x| format!("{x:.6}")).unwrap_or_default()
}

fn csv_field(s: &str) -> String {
    if s.contains([',', '"', '\n']) {
        format!("\"{}\"", s.replace('"', "\"\""))
    } else {
        s.to_string()
    }
}

fn rsm_csv(rsm: &Rsm) -> String {
    let mut out = String::from("label");
    for l in &rsm.labels {
        out.push(',');
        out.push_str(&csv_field(l));
    }
    out.push('\n');
    for (l, row) in rsm.labels.iter().zip(&rsm.values) {
        out.push_str(&csv_field(l));
        for v in row {
            out.push(',');
            out.push_str(&csv_num(*v));
        }
        out.push('\n');
    }
    out
}

fn edges_csv(net: &CognitiveNetwork) -> String {
    let mut out = String::from("source,target,weight\n");
    for e in &net.edges {
        let _ = writeln!(out, "{},{},{}", e.a, e.b, csv_num(e.weight));
    }
    out
}

fn connectivity_csv(rows: &[ConnectivityRow]) -> String {
    let mut out = String::from("group,avg_connectivity,hot_cold_integration,density,variability_sd\n");
    for r in rows {
        let _ = writeln!(
            out,
            "{},{},{},{},{}",
            csv_field(&r.group),
            csv_num(Some(r.avg_connectivity)),
            csv_num(r.hot_cold_integration),
            csv_num(Some(r.density)),
            csv_num(r.variability_sd)
        );
    }
    out
}

fn core_csv(rows: &[CoreRow]) -> String {
    let mut out = String::from("group,dominant_core,information_status,isolated_modules\n");
    for r in rows {
        let isolated: Vec<&str> = r.isolated_modules.iter().map(|d| d.as_str()).collect();
        let _ = writeln!(
            out,
            "{},{},{},{}",
            csv_field(&r.group),
            r.dominant_core,
            r.information_status,
            isolated.join(";")
        );
    }
    out
}

fn compare_csv(rows: &[RsmComparison]) -> String {
    let mut out = String::from("group_a,group_b,similarity\n");
    for r in rows {
        let _ = writeln!(out, "{},{},{}", csv_field(&r.a), csv_field(&r.b), csv_num(r.similarity));
    }
    out
}

fn interventions_csv(rows: &[InterventionReport]) -> String {
    let mut out = String::from(
        "model,pre_condition,post_condition,pre_accuracy,post_accuracy,delta,t,df,p,rsm_similarity,information_isolation_resolved\n",
    );
    for r in rows {
        let t = r.accuracy.ttest.as_ref();
        let s = r.structures.as_ref();
        let _ = writeln!(
            out,
            "{},{},{},{},{},{},{},{},{},{},{}",
            csv_field(&r.model),
            r.pre_condition,
            r.post_condition,
            csv_num(Some(r.accuracy.pre_accuracy)),
            csv_num(Some(r.accuracy.post_accuracy)),
            csv_num(Some(r.accuracy.delta)),
            csv_num(t.map(|t| t.t)),
            csv_num(t.map(|t| t.df)),
            csv_num(t.map(|t| t.p)),
            csv_num(s.map(|s| s.rsm_similarity)),
            s.and_then(|s| s.isolation_resolved.get(&Dimension::Information))
                .map(|b| b.to_string())
                .unwrap_or_default()
        );
    }
    out
}

/// Diverging blue-white-red fill for a value in [-1, 1].
fn heat_color(v: Option<f64>) -> String {
    let Some(v) = v else {
        return "#cccccc".into();
    };
    let v = v.clamp(-1.0, 1.0);
    let fade = |x: f64| (255.0 * (1.0 - x)).round() as u8;
    let (r, g, b) = if v >= 0.0 {
        (255, fade(v), fade(v))
    } else {
        (fade(-v), fade(-v), 255)
    };
    format!("#{r:02x}{g:02x}{b:02x}")
}

fn xml_escape(s: &str) -> String {
    s.replace('&', "&amp;")
        .replace('<', "&lt;")
        .replace('>', "&gt;")
        .replace('"', "&quot;")
}

pub fn rsm_svg(rsm: &Rsm) -> String {
    let cell = 16;
    let margin = 110;
    let n = rsm.size();
    let side = margin + n * cell;
    let height = side + 50;
    let mut out = String::new();
    let _ = writeln!(
        out,
        "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{side}\" height=\"{height}\" font-family=\"sans-serif\" font-size=\"9\">"
    );
    let _ = writeln!(
        out,
        "<title>{} RSM ({})</title>",
        xml_escape(&rsm.group_label),
        rsm.mode
    );
    for (i, label) in rsm.labels.iter().enumerate() {
        let y = margin + i * cell + cell / 2 + 3;
        let _ = writeln!(
            out,
            "<text x=\"{}\" y=\"{y}\" text-anchor=\"end\">{}</text>",
            margin - 4,
            xml_escape(label)
        );
        let x = margin + i * cell + cell / 2 + 3;
        let _ = writeln!(
            out,
            "<text transform=\"translate({x},{}) rotate(-90)\">{}</text>",
            margin - 4,
            xml_escape(label)
        );
    }
    for i in 0..n {
        for j in 0..n {
            let v = rsm.values[i][j];
            let _ = writeln!(
                out,
                "<rect x=\"{}\" y=\"{}\" width=\"{cell}\" height=\"{cell}\" fill=\"{}\"><title>{} / {}: {}</title></rect>",
                margin + j * cell,
                margin + i * cell,
                heat_color(v),
                xml_escape(&rsm.labels[i]),
                xml_escape(&rsm.labels[j]),
                v.map(|x| format!("{x:.3}")).unwrap_or_else(|| "undefined".into())
            );
        }
    }
    // legend from -1 to 1
    let ly = side + 15;
    for s in 0..=20 {
        let v = -1.0 + s as f64 * 0.1;
        let _ = writeln!(
            out,
            "<rect x=\"{}\" y=\"{ly}\" width=\"8\" height=\"10\" fill=\"{}\"/>",
            margin + s * 8,
            heat_color(Some(v))
        );
    }
    let _ = writeln!(
        out,
        "<text x=\"{}\" y=\"{}\" text-anchor=\"middle\">-1</text>",
        margin + 4,
        ly + 22
    );
    let _ = writeln!(
        out,
        "<text x=\"{}\" y=\"{}\" text-anchor=\"middle\">0</text>",
        margin + 84,
        ly + 22
    );
    let _ = writeln!(
        out,
        "<text x=\"{}\" y=\"{}\" text-anchor=\"middle\">1</text>",
        margin + 164,
        ly + 22
    );
    out.push_str("</svg>\n");
    out
}

/// DOT graph with every node declared and only edges with
/// `|w| >= threshold` drawn, labelled to 3 decimals.
pub fn network_dot(net: &CognitiveNetwork, threshold: f64) -> String {
    let mut out = format!("graph \"{}\" {{\n", net.group_label.replace('"', "'"));
    for node in &net.nodes {
        let tag = net
            .partition
            .get(node)
            .map(|t| format!("{t:?}").to_lowercase())
            .unwrap_or_else(|| "untagged".into());
        let shape = if tag == "hot" { "ellipse" } else { "box" };
        let _ = writeln!(out, "  \"{node}\" [shape={shape}, tag=\"{tag}\"];");
    }
    for e in &net.edges {
        if let Some(w) = e.weight.filter(|w| w.abs() >= threshold) {
            let _ = writeln!(
                out,
                "  \"{}\" -- \"{}\" [label=\"{w:.3}\", penwidth={:.2}];",
                e.a,
                e.b,
                1.0 + 4.0 * w.abs()
            );
        }
    }
    out.push_str("}\n");
    out
}

fn write_file(dest: &Path, name: &str, kind: &str, contents: &str) -> Result<ManifestEntry, ReportError> {
    let path = dest.join(name);
    std::fs::write(&path, contents).map_err(|source| ReportError::Io {
        path: path.clone(),
        source,
    })?;
    Ok(ManifestEntry {
        path: name.to_string(),
        kind: kind.to_string(),
        sha256: hex::encode(Sha256::digest(contents.as_bytes())),
    })
}

/// Writes the requested renderings into `dest` plus `manifest.json`. An
/// empty format set writes nothing.
pub fn emit_report(
    report: &AlignmentReport,
    formats: &BTreeSet<Format>,
    dest: &Path,
) -> Result<Vec<ManifestEntry>, ReportError> {
    if formats.is_empty() {
        return Ok(Vec::new());
    }
    std::fs::create_dir_all(dest).map_err(|source| ReportError::Io {
        path: dest.to_path_buf(),
        source,
    })?;
    let mut manifest = Vec::new();
    let threshold = report.metadata.isolation_threshold;
    for format in formats {
        match format {
            Format::Json => {
                manifest.push(write_file(dest, "report.json", "json", &to_report_json(report)?)?);
            }
            Format::Csv => {
                for g in &report.groups {
                    let stem = file_stem(&g.label);
                    if let Some(rsm) = &g.rsm {
                        manifest.push(write_file(dest, &format!("rsm_{stem}.csv"), "csv", &rsm_csv(rsm))?);
                    }
                    if let Some(net) = &g.network {
                        manifest.push(write_file(dest, &format!("edges_{stem}.csv"), "csv", &edges_csv(net))?);
                    }
                }
                let cg = &report.cross_group;
                if !cg.connectivity_table.is_empty() {
                    manifest.push(write_file(
                        dest,
                        "connectivity.csv",
                        "csv",
                        &connectivity_csv(&cg.connectivity_table),
                    )?);
                }
                if !cg.core_table.is_empty() {
                    manifest.push(write_file(dest, "cores.csv", "csv", &core_csv(&cg.core_table))?);
                }
                if !cg.rsm_compare.is_empty() {
                    manifest.push(write_file(
                        dest,
                        "rsm_compare.csv",
                        "csv",
                        &compare_csv(&cg.rsm_compare),
                    )?);
                }
                if !report.interventions.is_empty() {
                    manifest.push(write_file(
                        dest,
                        "interventions.csv",
                        "csv",
                        &interventions_csv(&report.interventions),
                    )?);
                }
            }
            Format::SvgHeatmap => {
                for g in &report.groups {
                    if let Some(rsm) = &g.rsm {
                        let name = format!("rsm_{}.svg", file_stem(&g.label));
                        manifest.push(write_file(dest, &name, "svg-heatmap", &rsm_svg(rsm))?);
                    }
                }
            }
            Format::DotGraph => {
                for g in &report.groups {
                    if let Some(net) = &g.network {
                        let name = format!("network_{}.dot", file_stem(&g.label));
                        manifest.push(write_file(dest, &name, "dot-graph", &network_dot(net, threshold))?);
                    }
                }
            }
        }
    }
    let text = serde_json::to_string_pretty(&manifest)? + "\n";
    let path = dest.join("manifest.json");
    std::fs::write(&path, text).map_err(|source| ReportError::Io { path, source })?;
    Ok(manifest)
}
