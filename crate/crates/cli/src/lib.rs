//! Subcommands behind the `wardchain` binary.
//!
//! Every run is described by one TOML file:
//!
//! ```toml
//! [input]                      # either a graph file pair ...
//! nodes = "nodes.csv"
//! edges = "edges.csv"
//! num_districts = 8
//!
//! # [input.synthetic]          # ... or a generated grid
//! # rows = 6
//! # cols = 6
//! # num_districts = 3
//!
//! [validity]
//! compactness_mode = "l1"
//! enforce_counties = true
//! enforce_mm = true
//!
//! [chain]
//! steps = 1000000
//! rng_seed = 1
//!
//! [output]
//! report = "l1_counties_mm.json"
//! trace = "l1_counties_mm.trace.csv"
//! ```
//!
//! Input paths are resolved against the config file's directory, output
//! paths against the output directory (the config's directory by default).

use std::fmt;
use std::fs;
use std::io::BufWriter;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use wardchain::chain::CsvTrace;
use wardchain::gridkit::GridSpec;
use wardchain::histogram::Histogram;
use wardchain::ingest::{run_pipeline, GeometryDocument, IngestReport};
use wardchain::outlier::{render_table, EpsilonReport};
use wardchain::{run_trajectory, ChainConfig, DualGraph, Plan, Sinks, ValidityConfig};

pub const EXIT_FAILURE: i32 = 1;
pub const EXIT_CONFIG: i32 = 2;
pub const EXIT_SEED: i32 = 3;
pub const EXIT_IO: i32 = 4;

/// A failure with the process exit code it maps to.
#[derive(Debug)]
pub struct CliError {
    pub code: i32,
    pub message: String,
}

impl CliError {
    fn new(code: i32, message: impl Into<String>) -> Self {
        CliError { code, message: message.into() }
    }

    fn io(path: &Path, e: impl fmt::Display) -> Self {
        CliError::new(EXIT_IO, format!("{}: {e}", path.display()))
    }

    fn core(context: &str, e: wardchain::Error) -> Self {
        use wardchain::Error as E;
        let code = match &e {
            E::InvalidSeedPlan(_)
            | E::DisconnectedDistrict(_)
            | E::EmptyDistrict(_)
            | E::AssignmentLength { .. }
            | E::ZeroVoteDistrict(_) => EXIT_SEED,
            E::Io(_) => EXIT_IO,
            _ => EXIT_CONFIG,
        };
        CliError::new(code, format!("{context}: {e}"))
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.message)
    }
}

impl std::error::Error for CliError {}

pub type CliResult<T> = std::result::Result<T, CliError>;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InputConfig {
    pub nodes: Option<PathBuf>,
    pub edges: Option<PathBuf>,
    pub num_districts: Option<usize>,
    pub synthetic: Option<GridSpec>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputConfig {
    pub report: PathBuf,
    pub trace: Option<PathBuf>,
    pub histogram: Option<PathBuf>,
    pub histogram_svg: Option<PathBuf>,
    #[serde(default = "default_bins")]
    pub histogram_bins: usize,
    /// Labels kept (uniformly at random) for the histogram.
    #[serde(default = "default_samples")]
    pub histogram_samples: usize,
}

fn default_bins() -> usize {
    40
}
fn default_samples() -> usize {
    100_000
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub input: InputConfig,
    #[serde(default)]
    pub validity: ValidityConfig,
    pub chain: ChainConfig,
    pub output: OutputConfig,
}

impl RunConfig {
    pub fn parse(text: &str) -> CliResult<Self> {
        let cfg: RunConfig = toml::from_str(text).map_err(|e| CliError::new(EXIT_CONFIG, e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> CliResult<Self> {
        let text = fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
        RunConfig::parse(&text).map_err(|e| CliError::new(e.code, format!("{}: {}", path.display(), e.message)))
    }

    pub fn validate(&self) -> CliResult<()> {
        let files = [self.input.nodes.is_some(), self.input.edges.is_some(), self.input.num_districts.is_some()];
        match (files, &self.input.synthetic) {
            ([true, true, true], None) | ([false, false, false], Some(_)) => {}
            _ => {
                return Err(CliError::new(
                    EXIT_CONFIG,
                    "[input] needs either nodes, edges and num_districts, or a [input.synthetic] grid",
                ))
            }
        }
        self.validity.validate().map_err(|e| CliError::core("[validity]", e))?;
        self.chain.validate().map_err(|e| CliError::core("[chain]", e))?;
        if self.output.histogram_bins == 0 || self.output.histogram_samples == 0 {
            return Err(CliError::new(EXIT_CONFIG, "[output] histogram_bins and histogram_samples must be positive"));
        }
        Ok(())
    }

    fn wants_histogram(&self) -> bool {
        self.output.histogram.is_some() || self.output.histogram_svg.is_some()
    }
}

/// Loads or generates the instance. Relative paths resolve against `base`.
pub fn load_instance(input: &InputConfig, base: &Path) -> CliResult<(DualGraph, Plan)> {
    if let Some(spec) = &input.synthetic {
        return spec.generate().map_err(|e| CliError::core("[input.synthetic]", e));
    }
    let (nodes, edges, d) = (input.nodes.as_ref().unwrap(), input.edges.as_ref().unwrap(), input.num_districts.unwrap());
    let (nodes, edges) = (base.join(nodes), base.join(edges));
    for p in [&nodes, &edges] {
        if !p.is_file() {
            return Err(CliError::io(p, "no such file"));
        }
    }
    let graph = DualGraph::from_csv_paths(&nodes, &edges, d).map_err(|e| CliError::core("graph", e))?;
    let plan = Plan::build(&graph, None).map_err(|e| CliError::core("seed plan", e))?;
    Ok((graph, plan))
}

/// SHA-256 over the canonical node and edge tables of the graph.
pub fn graph_hash(graph: &DualGraph) -> String {
    let mut nodes = Vec::new();
    let mut edges = Vec::new();
    graph.write_nodes_csv(&mut nodes).expect("writing to memory");
    graph.write_edges_csv(&mut edges).expect("writing to memory");
    let mut h = Sha256::new();
    h.update(&nodes);
    h.update(b"\0");
    h.update(&edges);
    hex::encode(h.finalize())
}

fn create(path: &Path) -> CliResult<BufWriter<fs::File>> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir).map_err(|e| CliError::io(dir, e))?;
    }
    fs::File::create(path).map(BufWriter::new).map_err(|e| CliError::io(path, e))
}

fn write_text(path: &Path, text: &str) -> CliResult<()> {
    use std::io::Write;
    let mut f = create(path)?;
    f.write_all(text.as_bytes()).and_then(|_| f.flush()).map_err(|e| CliError::io(path, e))
}

/// Runs one config. Outputs go under `out_dir` when given, otherwise next
/// to the config file.
pub fn cmd_run(config_path: &Path, seed: Option<u64>, out_dir: Option<&Path>) -> CliResult<EpsilonReport> {
    let mut cfg = RunConfig::load(config_path)?;
    if let Some(s) = seed {
        cfg.chain.rng_seed = s;
    }
    let base = config_path.parent().unwrap_or(Path::new("."));
    run_config(&cfg, base, out_dir.unwrap_or(base))
}

pub fn run_config(cfg: &RunConfig, input_base: &Path, out_dir: &Path) -> CliResult<EpsilonReport> {
    let (graph, plan) = load_instance(&cfg.input, input_base)?;
    let mut trace = match &cfg.output.trace {
        Some(p) => Some((out_dir.join(p), CsvTrace::new(create(&out_dir.join(p))?))),
        None => None,
    };
    let sinks = Sinks {
        trace: trace.as_mut().map(|(_, t)| t as &mut dyn wardchain::chain::TraceSink),
        reservoir: cfg.wants_histogram().then_some(cfg.output.histogram_samples),
    };
    let outcome = run_trajectory(&graph, plan, &cfg.validity, &cfg.chain, sinks).map_err(|e| match e {
        wardchain::Error::Io(io) => CliError::new(EXIT_IO, format!("trace: {io}")),
        e => CliError::core("run", e),
    })?;
    if let Some((path, t)) = trace {
        t.into_inner().map_err(|e| CliError::io(&path, e))?;
    }

    let mut report = outcome.report;
    report.config.graph_hash = Some(graph_hash(&graph));
    let json = serde_json::to_string_pretty(&report).expect("report serializes") + "\n";
    write_text(&out_dir.join(&cfg.output.report), &json)?;

    if let Some(samples) = outcome.accumulator.samples() {
        let hist = Histogram::new(samples, report.seed_label, cfg.output.histogram_bins)
            .map_err(|e| CliError::core("histogram", e))?;
        if let Some(p) = &cfg.output.histogram {
            let path = out_dir.join(p);
            hist.write_csv(create(&path)?).map_err(|e| CliError::io(&path, e))?;
        }
        if let Some(p) = &cfg.output.histogram_svg {
            write_text(&out_dir.join(p), &hist.to_svg(&report.table_cells()[..3].join(", ")))?;
        }
    }
    Ok(report)
}

/// Runs every config on its own thread. Results come back in input order.
pub fn cmd_run_many(configs: &[PathBuf], seed: Option<u64>, out_dir: Option<&Path>) -> Vec<CliResult<EpsilonReport>> {
    std::thread::scope(|s| {
        let handles: Vec<_> = configs.iter().map(|c| s.spawn(move || cmd_run(c, seed, out_dir))).collect();
        handles
            .into_iter()
            .map(|h| h.join().unwrap_or_else(|_| Err(CliError::new(EXIT_FAILURE, "worker thread panicked"))))
            .collect()
    })
}

pub fn load_report(path: &Path) -> CliResult<EpsilonReport> {
    let text = fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
    serde_json::from_str(&text).map_err(|e| CliError::new(EXIT_CONFIG, format!("{}: {e}", path.display())))
}

/// Rendered table plus warnings about reports from different graphs.
pub struct ReportOutput {
    pub table: String,
    pub warnings: Vec<String>,
}

pub fn cmd_report(paths: &[PathBuf], histogram: Option<&Path>, svg: Option<&Path>) -> CliResult<ReportOutput> {
    if paths.is_empty() {
        return Err(CliError::new(EXIT_CONFIG, "no report files given"));
    }
    let reports = paths.iter().map(|p| load_report(p)).collect::<CliResult<Vec<_>>>()?;
    let mut warnings = Vec::new();
    let first = &reports[0].config.graph_hash;
    for (p, r) in paths.iter().zip(&reports).skip(1) {
        if r.config.graph_hash != *first {
            warnings.push(format!("{} was run on a different graph than {}", p.display(), paths[0].display()));
        }
    }
    match (histogram, svg) {
        (Some(h), Some(out)) => {
            let file = fs::File::open(h).map_err(|e| CliError::io(h, e))?;
            let hist = Histogram::read_csv(file, reports[0].seed_label).map_err(|e| CliError::core("histogram", e))?;
            write_text(out, &hist.to_svg(&reports[0].table_cells()[..3].join(", ")))?;
        }
        (None, None) => {}
        _ => return Err(CliError::new(EXIT_CONFIG, "--histogram and --svg go together")),
    }
    Ok(ReportOutput { table: render_table(&reports), warnings })
}

pub fn cmd_ingest(geometry: &Path, out_dir: &Path) -> CliResult<IngestReport> {
    let text = fs::read_to_string(geometry).map_err(|e| CliError::io(geometry, e))?;
    let doc = GeometryDocument::from_json(&text)
        .map_err(|e| CliError::new(EXIT_CONFIG, format!("{}: not a geometry document: {e}", geometry.display())))?;
    let out = run_pipeline(doc).map_err(|e| CliError::new(EXIT_FAILURE, format!("ingest: {e}")))?;
    fs::create_dir_all(out_dir).map_err(|e| CliError::io(out_dir, e))?;
    let nodes = out_dir.join("nodes.csv");
    wardchain::graph::write_node_rows(out.nodes, create(&nodes)?).map_err(|e| CliError::io(&nodes, e))?;
    let edges = out_dir.join("edges.csv");
    wardchain::graph::write_edge_rows(out.edges, create(&edges)?).map_err(|e| CliError::io(&edges, e))?;
    let mut ids = String::from("id,precinct\n");
    for (i, p) in out.precinct_ids.iter().enumerate() {
        ids.push_str(&format!("{i},{p}\n"));
    }
    write_text(&out_dir.join("precinct_ids.csv"), &ids)?;
    let json = serde_json::to_string_pretty(&out.report).expect("report serializes") + "\n";
    write_text(&out_dir.join("ingest_report.json"), &json)?;
    Ok(out.report)
}

pub fn cmd_grid(spec: &GridSpec, out_dir: &Path) -> CliResult<String> {
    let (graph, _) = spec.generate().map_err(|e| CliError::core("grid", e))?;
    fs::create_dir_all(out_dir).map_err(|e| CliError::io(out_dir, e))?;
    let nodes = out_dir.join("nodes.csv");
    graph.write_nodes_csv(create(&nodes)?).map_err(|e| CliError::io(&nodes, e))?;
    let edges = out_dir.join("edges.csv");
    graph.write_edges_csv(create(&edges)?).map_err(|e| CliError::io(&edges, e))?;
    Ok(graph_hash(&graph))
}
