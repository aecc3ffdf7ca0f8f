//! Run configuration and the end-to-end analysis pipeline.

use crate::ingest::{
    load_responses, load_scale, read_transcripts, transcripts_to_matrix, IngestError, Layout, ResponseMatrix,
    TranscriptRecord,
};
use crate::intervention::{compare_accuracy, compare_structures, InterventionReport};
use crate::psychometrics::{
    cfa, classical_mds, correlation_distance, criterion_validity, cronbach_alpha, efa, item_correlations,
    parallel_analysis, respondent_totals, ExternalScores, FactorMapping,
};
use crate::report::{
    AlignmentReport, ConnectivityRow, CoreRow, CrossGroup, GroupReport, ReportMetadata, RsmComparison, StageError,
};
use crate::rsa::{build_rsm, group_variability, rsm_compare, RsmMode};
use crate::scale::{accuracy, parse_partition, ScaleDefinition};
use crate::sna::{
    build_network, classify_structure, network_metrics, DEFAULT_DENSITY_THRESHOLD, DEFAULT_ISOLATION_THRESHOLD,
};
use crate::stats::PRNG_ALGORITHM;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::collections::BTreeSet;
use std::fmt;
use std::fs::File;
use std::io::BufReader;
use std::path::{Path, PathBuf};
use std::str::FromStr;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum PipelineError {
    #[error("configuration error: {0}")]
    Config(String),
    #[error("{path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
    #[error("{path}: {source}")]
    Ingest { path: PathBuf, source: IngestError },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Stage {
    Psychometrics,
    Rsa,
    Sna,
    Intervention,
}

impl Stage {
    pub const ALL: [Stage; 4] = [Stage::Psychometrics, Stage::Rsa, Stage::Sna, Stage::Intervention];

    pub fn as_str(self) -> &'static str {
        match self {
            Self::Psychometrics => "psychometrics",
            Self::Rsa => "rsa",
            Self::Sna => "sna",
            Self::Intervention => "intervention",
        }
    }
}

impl FromStr for Stage {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Stage::ALL
            .into_iter()
            .find(|st| st.as_str() == s.trim().to_ascii_lowercase())
            .ok_or_else(|| format!("unknown stage '{s}'"))
    }
}

pub fn parse_stages(s: &str) -> Result<BTreeSet<Stage>, String> {
    s.split(',')
        .filter(|p| !p.trim().is_empty())
        .map(Stage::from_str)
        .collect()
}

/// How missing cells are handled by correlation-based stages (RSA, SNA).
/// Reliability and factor analysis always use complete rows.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum MissingPolicy {
    #[default]
    Pairwise,
    Listwise,
}

impl FromStr for MissingPolicy {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim().to_ascii_lowercase().as_str() {
            "pairwise" => Ok(Self::Pairwise),
            "listwise" => Ok(Self::Listwise),
            _ => Err(format!("unknown missing-data policy '{s}'")),
        }
    }
}

impl fmt::Display for MissingPolicy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Self::Pairwise => "pairwise",
            Self::Listwise => "listwise",
        })
    }
}

fn default_seed() -> u64 {
    42
}
fn default_stages() -> Vec<String> {
    Stage::ALL.iter().map(|s| s.as_str().to_string()).collect()
}
fn default_isolation() -> f64 {
    DEFAULT_ISOLATION_THRESHOLD
}
fn default_density() -> f64 {
    DEFAULT_DENSITY_THRESHOLD
}
fn default_formats() -> Vec<String> {
    vec!["json".into()]
}
fn default_out() -> PathBuf {
    PathBuf::from("report")
}
fn default_sims() -> usize {
    1000
}
fn default_percentile() -> f64 {
    95.0
}
fn default_mds_dims() -> usize {
    2
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GroupConfig {
    pub label: String,
    /// Response table (CSV).
    pub responses: Option<PathBuf>,
    #[serde(default)]
    pub layout: Option<Layout>,
    /// Transcript file (JSONL); runs become respondents.
    pub transcripts: Option<PathBuf>,
    /// CSV with `respondent_id` and one column per external instrument.
    pub criterion: Option<PathBuf>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InterventionConfig {
    pub model: String,
    pub pre: PathBuf,
    pub post: PathBuf,
}

/// The run configuration file. Relative paths resolve against `base_dir`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub scale: PathBuf,
    #[serde(default = "default_seed")]
    pub seed: u64,
    #[serde(default = "default_stages")]
    pub stages: Vec<String>,
    #[serde(default = "default_isolation")]
    pub isolation_threshold: f64,
    #[serde(default = "default_density")]
    pub density_threshold: f64,
    #[serde(default)]
    pub missing_policy: MissingPolicy,
    /// Overrides on the scale's partition, e.g. `"Belief=Cold"`.
    #[serde(default)]
    pub partition: Option<String>,
    #[serde(default = "default_formats")]
    pub formats: Vec<String>,
    #[serde(default = "default_out")]
    pub out: PathBuf,
    #[serde(default = "default_sims")]
    pub parallel_analysis_sims: usize,
    #[serde(default = "default_percentile")]
    pub parallel_analysis_percentile: f64,
    #[serde(default = "default_mds_dims")]
    pub mds_dims: usize,
    #[serde(default)]
    pub groups: Vec<GroupConfig>,
    #[serde(default)]
    pub interventions: Vec<InterventionConfig>,
    #[serde(skip)]
    pub base_dir: PathBuf,
}

impl RunConfig {
    /// Minimal configuration for `scale` with every default.
    pub fn new(scale: impl Into<PathBuf>) -> Self {
        Self {
            scale: scale.into(),
            seed: default_seed(),
            stages: default_stages(),
            isolation_threshold: default_isolation(),
            density_threshold: default_density(),
            missing_policy: MissingPolicy::default(),
            partition: None,
            formats: default_formats(),
            out: default_out(),
            parallel_analysis_sims: default_sims(),
            parallel_analysis_percentile: default_percentile(),
            mds_dims: default_mds_dims(),
            groups: Vec::new(),
            interventions: Vec::new(),
            base_dir: PathBuf::new(),
        }
    }

    pub fn parse(text: &str, base_dir: &Path) -> Result<Self, PipelineError> {
        let mut cfg: RunConfig = toml::from_str(text).map_err(|e| PipelineError::Config(e.to_string()))?;
        cfg.base_dir = base_dir.to_path_buf();
        Ok(cfg)
    }

    pub fn from_file(path: &Path) -> Result<Self, PipelineError> {
        let text = std::fs::read_to_string(path).map_err(|source| PipelineError::Io {
            path: path.to_path_buf(),
            source,
        })?;
        Self::parse(&text, path.parent().unwrap_or(Path::new("")))
    }

    pub fn resolve(&self, p: &Path) -> PathBuf {
        if p.is_absolute() {
            p.to_path_buf()
        } else {
            self.base_dir.join(p)
        }
    }

    pub fn stage_set(&self) -> Result<BTreeSet<Stage>, PipelineError> {
        self.stages
            .iter()
            .map(|s| s.parse().map_err(PipelineError::Config))
            .collect()
    }
}

/// Analysis settings after validation.
#[derive(Debug, Clone, PartialEq)]
pub struct AnalysisSettings {
    pub seed: u64,
    pub stages: BTreeSet<Stage>,
    pub isolation_threshold: f64,
    pub density_threshold: f64,
    pub missing_policy: MissingPolicy,
    pub n_sims: usize,
    pub percentile: f64,
    pub mds_dims: usize,
}

impl Default for AnalysisSettings {
    fn default() -> Self {
        Self {
            seed: default_seed(),
            stages: Stage::ALL.into_iter().collect(),
            isolation_threshold: default_isolation(),
            density_threshold: default_density(),
            missing_policy: MissingPolicy::default(),
            n_sims: default_sims(),
            percentile: default_percentile(),
            mds_dims: default_mds_dims(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct GroupInput {
    pub label: String,
    pub source: String,
    pub matrix: ResponseMatrix,
    pub unparseable_cells: usize,
    pub external: Vec<ExternalScores>,
}

impl GroupInput {
    pub fn from_matrix(matrix: ResponseMatrix) -> Self {
        Self {
            label: matrix.group_label.clone(),
            source: "in-memory".into(),
            matrix,
            unparseable_cells: 0,
            external: Vec::new(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct InterventionInput {
    pub model: String,
    pub pre: Vec<TranscriptRecord>,
    pub post: Vec<TranscriptRecord>,
}

/// Everything the pipeline analyzes, already loaded.
#[derive(Debug, Clone, PartialEq)]
pub struct PipelineInput {
    pub scale: ScaleDefinition,
    pub groups: Vec<GroupInput>,
    pub interventions: Vec<InterventionInput>,
    pub settings: AnalysisSettings,
}

fn open(path: &Path) -> Result<BufReader<File>, PipelineError> {
    File::open(path)
        .map(BufReader::new)
        .map_err(|source| PipelineError::Io {
            path: path.to_path_buf(),
            source,
        })
}

fn ingest_err(path: &Path) -> impl FnOnce(IngestError) -> PipelineError + '_ {
    move |source| PipelineError::Ingest {
        path: path.to_path_buf(),
        source,
    }
}

/// Reads a criterion table: `respondent_id` then one column per instrument.
pub fn load_criterion(path: &Path) -> Result<Vec<ExternalScores>, PipelineError> {
    let mut reader = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(open(path)?);
    let headers = reader.headers().map_err(|e| ingest_err(path)(e.into()))?.clone();
    if headers.get(0) != Some("respondent_id") || headers.len() < 2 {
        return Err(PipelineError::Ingest {
            path: path.to_path_buf(),
            source: IngestError::Shape("criterion header must be respondent_id,<instrument...>".into()),
        });
    }
    let mut out: Vec<ExternalScores> = headers
        .iter()
        .skip(1)
        .map(|h| ExternalScores {
            name: h.to_string(),
            scores: Vec::new(),
        })
        .collect();
    for rec in reader.records() {
        let rec = rec.map_err(|e| ingest_err(path)(e.into()))?;
        let id = rec.get(0).unwrap_or_default().to_string();
        for (j, ext) in out.iter_mut().enumerate() {
            let raw = rec.get(j + 1).unwrap_or_default();
            if raw.is_empty() {
                continue;
            }
            let v: f64 = raw.parse().map_err(|_| PipelineError::Ingest {
                path: path.to_path_buf(),
                source: IngestError::Parse(format!("non-numeric criterion value '{raw}' for {id}")),
            })?;
            ext.scores.push((id.clone(), v));
        }
    }
    Ok(out)
}

fn load_transcript_file(path: &Path) -> Result<Vec<TranscriptRecord>, PipelineError> {
    read_transcripts(open(path)?).map_err(ingest_err(path))
}

/// Loads the scale, every response source and intervention pair named by
/// `cfg`.
pub fn load_inputs(cfg: &RunConfig) -> Result<PipelineInput, PipelineError> {
    let stages = cfg.stage_set()?;
    if cfg.groups.is_empty() && cfg.interventions.is_empty() {
        return Err(PipelineError::Config("no response sources configured".into()));
    }
    for (name, t) in [
        ("isolation_threshold", cfg.isolation_threshold),
        ("density_threshold", cfg.density_threshold),
    ] {
        if !(t.is_finite() && t >= 0.0) {
            return Err(PipelineError::Config(format!("{name} must be a nonnegative number")));
        }
    }
    if cfg.parallel_analysis_sims < 100 {
        return Err(PipelineError::Config(
            "parallel_analysis_sims must be at least 100".into(),
        ));
    }
    if !(0.0..=100.0).contains(&cfg.parallel_analysis_percentile) {
        return Err(PipelineError::Config(
            "parallel_analysis_percentile must lie in [0, 100]".into(),
        ));
    }
    if cfg.mds_dims == 0 {
        return Err(PipelineError::Config("mds_dims must be at least 1".into()));
    }

    let scale_path = cfg.resolve(&cfg.scale);
    let mut scale = load_scale(open(&scale_path)?).map_err(ingest_err(&scale_path))?;
    if let Some(p) = &cfg.partition {
        scale.hot_cold_partition = parse_partition(p, &scale.hot_cold_partition).map_err(PipelineError::Config)?;
    }

    let mut labels = BTreeSet::new();
    let mut groups = Vec::new();
    for g in &cfg.groups {
        if !labels.insert(g.label.clone()) {
            return Err(PipelineError::Config(format!("duplicate group label '{}'", g.label)));
        }
        let (matrix, unparseable_cells, source) = match (&g.responses, &g.transcripts) {
            (Some(path), None) => {
                let full = cfg.resolve(path);
                let loaded = load_responses(open(&full)?, &scale, g.layout.unwrap_or(Layout::Wide), &g.label)
                    .map_err(ingest_err(&full))?;
                (loaded.matrix, loaded.unparseable_cells, path.display().to_string())
            }
            (None, Some(path)) => {
                let full = cfg.resolve(path);
                let records = load_transcript_file(&full)?;
                let unparseable = records
                    .iter()
                    .filter(|r| !matches!(r.parsed, crate::llm::ParsedOutcome::Scored(_)))
                    .count();
                let m = transcripts_to_matrix(&records, &scale, &g.label).map_err(ingest_err(&full))?;
                (m, unparseable, path.display().to_string())
            }
            _ => {
                return Err(PipelineError::Config(format!(
                    "group '{}' needs exactly one of responses or transcripts",
                    g.label
                )))
            }
        };
        let external = match &g.criterion {
            Some(p) => load_criterion(&cfg.resolve(p))?,
            None => Vec::new(),
        };
        groups.push(GroupInput {
            label: g.label.clone(),
            source,
            matrix,
            unparseable_cells,
            external,
        });
    }

    let interventions = cfg
        .interventions
        .iter()
        .map(|iv| {
            Ok(InterventionInput {
                model: iv.model.clone(),
                pre: load_transcript_file(&cfg.resolve(&iv.pre))?,
                post: load_transcript_file(&cfg.resolve(&iv.post))?,
            })
        })
        .collect::<Result<_, PipelineError>>()?;

    Ok(PipelineInput {
        scale,
        groups,
        interventions,
        settings: AnalysisSettings {
            seed: cfg.seed,
            stages,
            isolation_threshold: cfg.isolation_threshold,
            density_threshold: cfg.density_threshold,
            missing_policy: cfg.missing_policy,
            n_sims: cfg.parallel_analysis_sims,
            percentile: cfg.parallel_analysis_percentile,
            mds_dims: cfg.mds_dims,
        },
    })
}

fn conventions(settings: &AnalysisSettings) -> Vec<String> {
    vec![
        "reliability: raw Cronbach alpha over complete rows".into(),
        "factor analysis: item Pearson correlations over complete rows; EFA is principal-component extraction with Kaiser-normalized varimax".into(),
        "CFA: maximum likelihood on the correlation matrix; baseline is the independence model".into(),
        "MDS: classical scaling of d = sqrt(2(1 - r)) over item correlations".into(),
        format!(
            "RSA: item-space Pearson RSMs with {} deletion; groups compared by Spearman correlation of upper triangles",
            settings.missing_policy
        ),
        "variability: sample SD (n - 1) of per-respondent percent scores, Likert items rescaled to [0, 1]".into(),
        "SNA: edge weight is Pearson correlation of respondent dimension means; strength, density and integration use |w|".into(),
        "intervention: accuracy over parsed keyed responses; Welch t-test with one accuracy value per run".into(),
    ]
}

/// Staggered seed for each group's parallel analysis.
fn group_seed(seed: u64, index: usize) -> u64 {
    seed.wrapping_add(index as u64)
}

fn analyze_group(idx: usize, g: &GroupInput, scale: &ScaleDefinition, settings: &AnalysisSettings) -> GroupReport {
    let mut rep = GroupReport {
        label: g.label.clone(),
        source: g.source.clone(),
        n: g.matrix.n(),
        k: g.matrix.k(),
        unparseable_cells: g.unparseable_cells,
        accuracy: accuracy(&g.matrix, scale).ok(),
        ..Default::default()
    };
    let mut errors = Vec::new();
    let stages = &settings.stages;
    let m = &g.matrix;

    if stages.contains(&Stage::Psychometrics) {
        match cronbach_alpha(m) {
            Ok(r) => rep.reliability = Some(r),
            Err(e) => errors.push(stage_error("reliability", &e)),
        }
        match parallel_analysis(m, settings.n_sims, settings.percentile, group_seed(settings.seed, idx)) {
            Ok(pa) => {
                if pa.retained >= 1 && pa.retained < m.k() {
                    match efa(m, pa.retained) {
                        Ok(f) => rep.efa = Some(f),
                        Err(e) => errors.push(stage_error("efa", &e)),
                    }
                }
                rep.parallel_analysis = Some(pa);
            }
            Err(e) => errors.push(stage_error("parallel_analysis", &e)),
        }
        match FactorMapping::by_dimension(scale, &m.item_ids).and_then(|map| cfa(m, &map)) {
            Ok(c) => rep.cfa = Some(c),
            Err(e) => errors.push(stage_error("cfa", &e)),
        }
        match item_correlations(m).and_then(|(r, _)| classical_mds(&correlation_distance(&r), settings.mds_dims)) {
            Ok(md) => rep.mds = Some(md),
            Err(e) => errors.push(stage_error("mds", &e)),
        }
        if !g.external.is_empty() {
            match criterion_validity(&respondent_totals(m, scale), &g.external) {
                Ok(c) => rep.criterion_validity = Some(c),
                Err(e) => errors.push(stage_error("criterion_validity", &e)),
            }
        }
    }

    let listwise;
    let corr_input = match settings.missing_policy {
        MissingPolicy::Pairwise => m,
        MissingPolicy::Listwise => match m.select_rows(&m.complete_rows()) {
            Ok(sub) => {
                listwise = sub;
                &listwise
            }
            Err(e) => {
                errors.push(stage_error("listwise", &e));
                m
            }
        },
    };
    if stages.contains(&Stage::Rsa) {
        match build_rsm(corr_input, RsmMode::ItemSpace) {
            Ok(r) => rep.rsm = Some(r),
            Err(e) => errors.push(stage_error("rsa", &e)),
        }
        match group_variability(m, scale) {
            Ok(v) => rep.variability = Some(v),
            Err(e) => errors.push(stage_error("variability", &e)),
        }
    }
    if stages.contains(&Stage::Sna) {
        match build_network(corr_input, scale) {
            Ok(net) => {
                match network_metrics(&net, settings.isolation_threshold, settings.density_threshold) {
                    Ok(met) => {
                        rep.structure = Some(classify_structure(&met));
                        rep.metrics = Some(met);
                    }
                    Err(e) => errors.push(stage_error("sna_metrics", &e)),
                }
                rep.network = Some(net);
            }
            Err(e) => errors.push(stage_error("sna", &e)),
        }
    }
    rep.errors = errors;
    rep
}

fn stage_error(stage: &str, e: &dyn std::fmt::Display) -> StageError {
    StageError {
        stage: stage.to_string(),
        message: e.to_string(),
    }
}

fn condition_label(records: &[TranscriptRecord]) -> String {
    let set: BTreeSet<String> = records.iter().map(|r| r.condition.to_string()).collect();
    set.into_iter().collect::<Vec<_>>().join("+")
}

/// Runs the configured stages over loaded inputs. Stage failures are
/// recorded in the affected group's `errors` without stopping other work.
pub fn analyze(input: &PipelineInput) -> AlignmentReport {
    let settings = &input.settings;
    let scale = &input.scale;
    let groups: Vec<GroupReport> = input
        .groups
        .par_iter()
        .enumerate()
        .map(|(i, g)| analyze_group(i, g, scale, settings))
        .collect();

    let mut cross = CrossGroup::default();
    if settings.stages.contains(&Stage::Rsa) {
        for i in 0..groups.len() {
            for j in (i + 1)..groups.len() {
                let (similarity, error) = match (&groups[i].rsm, &groups[j].rsm) {
                    (Some(a), Some(b)) => match rsm_compare(a, b) {
                        Ok(s) => (Some(s), None),
                        Err(e) => (None, Some(e.to_string())),
                    },
                    _ => (None, Some("RSM unavailable for one of the groups".into())),
                };
                cross.rsm_compare.push(RsmComparison {
                    a: groups[i].label.clone(),
                    b: groups[j].label.clone(),
                    similarity,
                    error,
                });
            }
        }
    }
    for g in &groups {
        if let (Some(met), Some(st)) = (&g.metrics, &g.structure) {
            cross.connectivity_table.push(ConnectivityRow {
                group: g.label.clone(),
                avg_connectivity: met.avg_connectivity,
                hot_cold_integration: met.hot_cold_integration,
                density: met.density,
                variability_sd: g.variability.as_ref().map(|v| v.sd),
            });
            cross.core_table.push(CoreRow {
                group: g.label.clone(),
                dominant_core: st.dominant_core,
                information_status: if st.information_isolated {
                    "Isolated"
                } else {
                    "Non-isolated"
                }
                .into(),
                isolated_modules: st.isolated_modules.clone(),
            });
        }
    }

    let interventions = if settings.stages.contains(&Stage::Intervention) {
        input
            .interventions
            .iter()
            .filter_map(|iv| {
                let acc = match compare_accuracy(&iv.pre, &iv.post, scale) {
                    Ok(a) => a,
                    Err(e) => {
                        log::warn!("intervention {}: {e}", iv.model);
                        return None;
                    }
                };
                let structures = transcripts_to_matrix(&iv.pre, scale, "pre")
                    .and_then(|pre| Ok((pre, transcripts_to_matrix(&iv.post, scale, "post")?)))
                    .map_err(|e| e.to_string())
                    .and_then(|(pre, post)| {
                        compare_structures(
                            &pre,
                            &post,
                            scale,
                            settings.isolation_threshold,
                            settings.density_threshold,
                        )
                        .map_err(|e| e.to_string())
                    });
                let (structures, structures_error) = match structures {
                    Ok(s) => (Some(s), None),
                    Err(e) => (None, Some(e)),
                };
                Some(InterventionReport {
                    model: iv.model.clone(),
                    pre_condition: condition_label(&iv.pre),
                    post_condition: condition_label(&iv.post),
                    accuracy: acc,
                    ttest_unit: "run".into(),
                    structures,
                    structures_error,
                })
            })
            .collect()
    } else {
        Vec::new()
    };

    AlignmentReport {
        metadata: ReportMetadata {
            tool: env!("CARGO_PKG_NAME").into(),
            tool_version: env!("CARGO_PKG_VERSION").into(),
            scale: scale.reference(),
            seed: settings.seed,
            stages: settings.stages.iter().map(|s| s.as_str().to_string()).collect(),
            isolation_threshold: settings.isolation_threshold,
            density_threshold: settings.density_threshold,
            partition: scale.hot_cold_partition.clone(),
            missing_policy: settings.missing_policy.to_string(),
            prng_algorithm: PRNG_ALGORITHM.into(),
            parallel_analysis_sims: settings.n_sims,
            parallel_analysis_percentile: settings.percentile,
            mds_dims: settings.mds_dims,
            conventions: conventions(settings),
        },
        groups,
        cross_group: cross,
        interventions,
    }
}

/// Loads everything `cfg` names and analyzes it.
pub fn run_pipeline(cfg: &RunConfig) -> Result<AlignmentReport, PipelineError> {
    Ok(analyze(&load_inputs(cfg)?))
}
