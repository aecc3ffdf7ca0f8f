//! Command-line interface. Exit codes: 0 success, 1 usage error, 2 data
//! error, 3 endpoint error.

use crate::ingest::{load_scale, write_long, write_wide, Layout};
use crate::llm::{administer, AdminError, EndpointConfig, PromptCondition, RequestParams, SessionPlan};
use crate::pipeline::{
    analyze, load_inputs, parse_stages, AnalysisSettings, GroupConfig, InterventionInput, MissingPolicy, PipelineInput,
    RunConfig, Stage,
};
use crate::report::{emit_report, parse_formats, read_report, to_report_json};
use crate::scale::{demo_scale, parse_partition, validate_scale, Dimension, ScaleDefinition};
use crate::synthgen::{gen_llm_like, gen_population, PopulationSpec};
use clap::{Parser, Subcommand, ValueEnum};
use std::io::Write;
use std::path::{Path, PathBuf};

#[derive(Debug, Parser)]
#[command(
    name = "cogalign",
    version,
    about = "Cognitive bias scale analysis for human and LLM respondents"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Check a scale file against the schema.
    ValidateScale { path: PathBuf },
    /// Generate a synthetic response table.
    Synth(SynthArgs),
    /// Administer a scale to a chat-completions endpoint.
    Administer(AdministerArgs),
    /// Run the analysis pipeline and emit the report.
    Analyze(AnalyzeArgs),
    /// Compare pre/post transcripts for one model.
    Intervene(InterveneArgs),
    /// Re-emit renderings from a saved report.json.
    Report(ReportArgs),
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum PopulationKind {
    Human,
    Llm,
}

#[derive(Debug, clap::Args)]
pub struct SynthArgs {
    /// Scale file; defaults to the bundled demo scale.
    #[arg(long)]
    pub scale: Option<PathBuf>,
    #[arg(long, value_enum, default_value = "human")]
    pub kind: PopulationKind,
    #[arg(long, default_value_t = 330)]
    pub n: usize,
    #[arg(long, default_value_t = 42)]
    pub seed: u64,
    #[arg(long, default_value = "synthetic")]
    pub label: String,
    #[arg(long, default_value_t = 1.0)]
    pub variability: f64,
    #[arg(long, default_value_t = 0.6)]
    pub loading: f64,
    /// Common off-diagonal factor correlation.
    #[arg(long, default_value_t = 0.0)]
    pub factor_correlation: f64,
    #[arg(long, default_value_t = 0.5)]
    pub rationality: f64,
    #[arg(long, default_value = "wide")]
    pub layout: String,
    /// Output CSV; standard output when omitted.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, clap::Args)]
pub struct AdministerArgs {
    #[arg(long)]
    pub scale: Option<PathBuf>,
    #[arg(long)]
    pub base_url: String,
    #[arg(long)]
    pub model: String,
    #[arg(long, default_value = "baseline")]
    pub condition: String,
    #[arg(long, default_value_t = 30)]
    pub runs: u32,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Environment variable holding the bearer token.
    #[arg(long)]
    pub auth_env: Option<String>,
    #[arg(long, default_value_t = 4)]
    pub parallelism: usize,
    #[arg(long, default_value_t = 60)]
    pub timeout: u64,
    #[arg(long, default_value_t = 5)]
    pub max_retries: u32,
    #[arg(long, default_value_t = 1000)]
    pub backoff_ms: u64,
    #[arg(long, default_value_t = 0.9)]
    pub temperature: f64,
    #[arg(long, default_value_t = 2000)]
    pub max_tokens: u32,
    #[arg(long, default_value_t = 1.0)]
    pub top_p: f64,
    /// File replacing the default bias-mitigation text.
    #[arg(long)]
    pub mitigation_file: Option<PathBuf>,
    /// Transcript JSONL output.
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, clap::Args)]
pub struct AnalyzeArgs {
    /// Run configuration file.
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long)]
    pub scale: Option<PathBuf>,
    /// `label=path` response table; repeatable.
    #[arg(long = "responses")]
    pub responses: Vec<String>,
    /// `label=path` transcript file; repeatable.
    #[arg(long = "transcripts")]
    pub transcripts: Vec<String>,
    #[arg(long)]
    pub layout: Option<String>,
    /// Comma-separated: psychometrics,rsa,sna,intervention
    #[arg(long)]
    pub stages: Option<String>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub isolation_threshold: Option<f64>,
    #[arg(long)]
    pub density_threshold: Option<f64>,
    /// Partition overrides such as `Belief=Cold,Memory=Hot`.
    #[arg(long)]
    pub partition: Option<String>,
    /// Comma-separated: json,csv,svg-heatmap,dot-graph
    #[arg(long)]
    pub formats: Option<String>,
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long)]
    pub missing_policy: Option<String>,
    #[arg(long)]
    pub sims: Option<usize>,
}

#[derive(Debug, clap::Args)]
pub struct InterveneArgs {
    #[arg(long)]
    pub scale: Option<PathBuf>,
    #[arg(long)]
    pub pre: PathBuf,
    #[arg(long)]
    pub post: PathBuf,
    #[arg(long)]
    pub model: Option<String>,
    #[arg(long, default_value_t = crate::sna::DEFAULT_ISOLATION_THRESHOLD)]
    pub isolation_threshold: f64,
    #[arg(long, default_value_t = crate::sna::DEFAULT_DENSITY_THRESHOLD)]
    pub density_threshold: f64,
    /// JSON output; standard output when omitted.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, clap::Args)]
pub struct ReportArgs {
    #[arg(long)]
    pub input: PathBuf,
    #[arg(long)]
    pub formats: String,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug)]
pub enum CliError {
    Usage(String),
    Data(String),
    Endpoint(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            Self::Usage(_) => 1,
            Self::Data(_) => 2,
            Self::Endpoint(_) => 3,
        }
    }

    fn message(&self) -> &str {
        match self {
            Self::Usage(m) | Self::Data(m) | Self::Endpoint(m) => m,
        }
    }
}

fn usage(e: impl ToString) -> CliError {
    CliError::Usage(e.to_string())
}

fn data(e: impl ToString) -> CliError {
    CliError::Data(e.to_string())
}

fn read_scale(path: Option<&Path>) -> Result<ScaleDefinition, CliError> {
    match path {
        None => Ok(demo_scale()),
        Some(p) => {
            let f = std::fs::File::open(p).map_err(|e| data(format!("{}: {e}", p.display())))?;
            load_scale(f).map_err(|e| data(format!("{}: {e}", p.display())))
        }
    }
}

fn write_output(out: Option<&Path>, text: &str, stdout: &mut dyn Write) -> Result<(), CliError> {
    match out {
        Some(p) => std::fs::write(p, text).map_err(|e| data(format!("{}: {e}", p.display()))),
        None => stdout.write_all(text.as_bytes()).map_err(data),
    }
}

fn cmd_validate(path: &Path, stdout: &mut dyn Write, stderr: &mut dyn Write) -> Result<(), CliError> {
    let scale = read_scale(Some(path))?;
    for w in validate_scale(&scale).warnings {
        let _ = writeln!(stderr, "warning: {w}");
    }
    let _ = writeln!(
        stdout,
        "ok: {} {} ({} items, {} dimensions)",
        scale.name,
        scale.version,
        scale.items.len(),
        scale.dimensions_present().len()
    );
    Ok(())
}

fn cmd_synth(a: &SynthArgs, stdout: &mut dyn Write) -> Result<(), CliError> {
    let scale = read_scale(a.scale.as_deref())?;
    let layout: Layout = a.layout.parse().map_err(usage)?;
    let ipd = scale.items_in(Dimension::Calculation).count();
    let mut spec = PopulationSpec::new(a.label.clone(), a.n, a.seed).with_equicorrelation(a.factor_correlation);
    spec.items_per_dimension = ipd;
    spec.loadings = [a.loading; 5];
    spec.variability_scale = a.variability;
    spec.rationality = [a.rationality; 5];
    spec.keyed_fraction = scale.items.iter().filter(|i| i.is_keyed()).count() as f64 / scale.items.len() as f64;
    spec.validate().map_err(usage)?;
    let m = match a.kind {
        PopulationKind::Human => gen_population(&spec, &scale),
        PopulationKind::Llm => gen_llm_like(&spec, &scale),
    }
    .map_err(data)?;
    let text = match layout {
        Layout::Wide => write_wide(&m, &scale),
        Layout::Long => write_long(&m, &scale),
    }
    .map_err(data)?;
    write_output(a.out.as_deref(), &text, stdout)
}

fn cmd_administer(a: &AdministerArgs, stdout: &mut dyn Write) -> Result<(), CliError> {
    let scale = read_scale(a.scale.as_deref())?;
    let condition: PromptCondition = a.condition.parse().map_err(usage)?;
    let mut endpoint = EndpointConfig::new(a.base_url.clone(), a.model.clone());
    endpoint.auth_env = a.auth_env.clone();
    endpoint.parallelism = a.parallelism;
    endpoint.timeout_secs = a.timeout;
    endpoint.max_retries = a.max_retries;
    endpoint.backoff_base_ms = a.backoff_ms;
    endpoint.request_params = RequestParams {
        temperature: a.temperature,
        max_tokens: a.max_tokens,
        top_p: a.top_p,
    };
    endpoint.validate().map_err(usage)?;
    let mut plan = SessionPlan::new(scale.reference(), condition);
    plan.runs = a.runs;
    plan.seed = a.seed;
    if let Some(p) = &a.mitigation_file {
        plan.mitigation_text = std::fs::read_to_string(p)
            .map_err(|e| data(format!("{}: {e}", p.display())))?
            .trim()
            .to_string();
    }
    let file = std::fs::File::create(&a.out).map_err(|e| data(format!("{}: {e}", a.out.display())))?;
    let mut sink = std::io::BufWriter::new(file);
    let summary = administer(&plan, &endpoint, &scale, &mut sink).map_err(|e| match e {
        AdminError::EndpointUnreachable { .. } | AdminError::AuthFailure { .. } => CliError::Endpoint(e.to_string()),
        AdminError::InvalidConfig(_) => usage(e),
        AdminError::Transcript(_) => data(e),
    })?;
    sink.flush().map_err(data)?;
    let text = serde_json::to_string_pretty(&summary).map_err(data)?;
    let _ = writeln!(stdout, "{text}");
    Ok(())
}

fn split_label(s: &str) -> Result<(String, PathBuf), CliError> {
    let (label, path) = s
        .split_once('=')
        .ok_or_else(|| usage(format!("expected label=path, got '{s}'")))?;
    if label.is_empty() || path.is_empty() {
        return Err(usage(format!("expected label=path, got '{s}'")));
    }
    Ok((label.to_string(), absolute(Path::new(path))))
}

fn absolute(p: &Path) -> PathBuf {
    if p.is_absolute() {
        p.to_path_buf()
    } else {
        std::env::current_dir()
            .map(|d| d.join(p))
            .unwrap_or_else(|_| p.to_path_buf())
    }
}

/// Builds the effective run configuration: the config file (if any) with
/// flags applied on top.
pub fn analyze_config(a: &AnalyzeArgs) -> Result<RunConfig, CliError> {
    let mut cfg = match (&a.config, &a.scale) {
        (Some(path), _) => RunConfig::from_file(path).map_err(data)?,
        (None, Some(scale)) => {
            let mut c = RunConfig::new(absolute(scale));
            c.out = absolute(&c.out);
            c
        }
        (None, None) => return Err(usage("analyze needs --config or --scale")),
    };
    if let Some(s) = &a.scale {
        cfg.scale = absolute(s);
    }
    let layout = match &a.layout {
        Some(l) => Some(l.parse::<Layout>().map_err(usage)?),
        None => None,
    };
    for r in &a.responses {
        let (label, path) = split_label(r)?;
        cfg.groups.push(GroupConfig {
            label,
            responses: Some(path),
            layout,
            transcripts: None,
            criterion: None,
        });
    }
    for t in &a.transcripts {
        let (label, path) = split_label(t)?;
        cfg.groups.push(GroupConfig {
            label,
            responses: None,
            layout: None,
            transcripts: Some(path),
            criterion: None,
        });
    }
    if let Some(s) = &a.stages {
        let set = parse_stages(s).map_err(usage)?;
        cfg.stages = set.iter().map(|s| s.as_str().to_string()).collect();
    }
    if let Some(s) = a.seed {
        cfg.seed = s;
    }
    if let Some(t) = a.isolation_threshold {
        cfg.isolation_threshold = t;
    }
    if let Some(t) = a.density_threshold {
        cfg.density_threshold = t;
    }
    if let Some(p) = &a.partition {
        parse_partition(p, &crate::scale::default_partition()).map_err(usage)?;
        cfg.partition = Some(match &cfg.partition {
            Some(base) => format!("{base},{p}"),
            None => p.clone(),
        });
    }
    if let Some(f) = &a.formats {
        let set = parse_formats(f).map_err(usage)?;
        cfg.formats = set.iter().map(|f| f.as_str().to_string()).collect();
    }
    if let Some(o) = &a.out {
        cfg.out = absolute(o);
    }
    if let Some(m) = &a.missing_policy {
        cfg.missing_policy = m.parse::<MissingPolicy>().map_err(usage)?;
    }
    if let Some(n) = a.sims {
        cfg.parallel_analysis_sims = n;
    }
    Ok(cfg)
}

fn cmd_analyze(a: &AnalyzeArgs, stdout: &mut dyn Write) -> Result<(), CliError> {
    let cfg = analyze_config(a)?;
    let formats = parse_formats(&cfg.formats.join(",")).map_err(data)?;
    let input = load_inputs(&cfg).map_err(data)?;
    let report = analyze(&input);
    let dest = cfg.resolve(&cfg.out);
    let manifest = emit_report(&report, &formats, &dest).map_err(data)?;
    for m in manifest {
        let _ = writeln!(stdout, "{}\t{}", m.kind, dest.join(&m.path).display());
    }
    Ok(())
}

fn read_transcript_file(p: &Path) -> Result<Vec<crate::ingest::TranscriptRecord>, CliError> {
    let f = std::fs::File::open(p).map_err(|e| data(format!("{}: {e}", p.display())))?;
    crate::ingest::read_transcripts(std::io::BufReader::new(f)).map_err(|e| data(format!("{}: {e}", p.display())))
}

fn cmd_intervene(a: &InterveneArgs, stdout: &mut dyn Write) -> Result<(), CliError> {
    let scale = read_scale(a.scale.as_deref())?;
    let pre = read_transcript_file(&a.pre)?;
    let post = read_transcript_file(&a.post)?;
    let model = a
        .model
        .clone()
        .or_else(|| pre.first().map(|r| r.model.clone()))
        .unwrap_or_else(|| "model".into());
    let input = PipelineInput {
        scale,
        groups: Vec::new(),
        interventions: vec![InterventionInput { model, pre, post }],
        settings: AnalysisSettings {
            stages: [Stage::Intervention].into_iter().collect(),
            isolation_threshold: a.isolation_threshold,
            density_threshold: a.density_threshold,
            ..AnalysisSettings::default()
        },
    };
    let report = analyze(&input);
    let iv = report.interventions.first().ok_or_else(|| {
        data("pre/post transcripts could not be compared (no parsed keyed responses or scale mismatch)")
    })?;
    let text = to_report_json(iv).map_err(data)?;
    write_output(a.out.as_deref(), &text, stdout)
}

fn cmd_report(a: &ReportArgs, stdout: &mut dyn Write) -> Result<(), CliError> {
    let formats = parse_formats(&a.formats).map_err(usage)?;
    let text = std::fs::read_to_string(&a.input).map_err(|e| data(format!("{}: {e}", a.input.display())))?;
    let report = read_report(&text).map_err(data)?;
    let manifest = emit_report(&report, &formats, &a.out).map_err(data)?;
    for m in manifest {
        let _ = writeln!(stdout, "{}\t{}", m.kind, a.out.join(&m.path).display());
    }
    Ok(())
}

pub fn execute(cli: &Cli, stdout: &mut dyn Write, stderr: &mut dyn Write) -> Result<(), CliError> {
    match &cli.command {
        Command::ValidateScale { path } => cmd_validate(path, stdout, stderr),
        Command::Synth(a) => cmd_synth(a, stdout),
        Command::Administer(a) => cmd_administer(a, stdout),
        Command::Analyze(a) => cmd_analyze(a, stdout),
        Command::Intervene(a) => cmd_intervene(a, stdout),
        Command::Report(a) => cmd_report(a, stdout),
    }
}

/// Parses `args` (including the program name) and runs the command,
/// returning the process exit code.
pub fn run_with<I, T>(args: I, stdout: &mut dyn Write, stderr: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let text = e.render().to_string();
            if code == 0 {
                let _ = write!(stdout, "{text}");
            } else {
                let _ = write!(stderr, "{text}");
            }
            return code;
        }
    };
    match execute(&cli, stdout, stderr) {
        Ok(()) => 0,
        Err(e) => {
            let _ = writeln!(stderr, "error: {}", e.message());
            e.exit_code()
        }
    }
}

/// Entry point for the binary.
pub fn main_exit_code() -> i32 {
    let _ = env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).try_init();
    run_with(std::env::args_os(), &mut std::io::stdout(), &mut std::io::stderr())
}
