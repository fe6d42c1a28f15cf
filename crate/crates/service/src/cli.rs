//! The `geobim` command line.

use std::ffi::OsString;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use geobim_core::checks::{OverhangLimit, Verdict};
use geobim_core::export::{report_serialize, wkt_csv, Frame, ReportFormat};
use geobim_core::footprint::overlaps_csv;
use geobim_core::pipeline::{self, Config, PipelineError};
use geobim_core::step::parse_step;
use geobim_core::ExecMode;
use serde::Serialize;

use crate::config::FileConfig;
use crate::session::{self, json_bytes};

pub const EXIT_OK: i32 = 0;
pub const EXIT_ERROR: i32 = 1;
pub const EXIT_FAIL: i32 = 2;
pub const EXIT_REVIEW: i32 = 3;
pub const EXIT_USAGE: i32 = 64;

#[derive(Debug, Parser)]
#[command(name = "geobim", version, about = "Storey footprints and planning-rule checks for IFC models")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Parse the files and print schema, instance count, units and georeferencing.
    Parse(Common),
    /// List federated storeys with element counts and repair notes.
    Storeys(Common),
    /// Reconstruct storey footprint polygons.
    Footprints(Common),
    /// Overlap of every storey with the reference storey.
    Overlaps(Common),
    /// Protrusion of storey geometry past facade lines.
    Overhang(OverhangArgs),
    /// Run the full rule suite and write the report.
    Check(Common),
    /// Modelling-guideline findings.
    Lint(Common),
    /// Footprints as WKT with storey elevations.
    ExportWkt(WktArgs),
    /// Start the HTTP service.
    Serve(ServeArgs),
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum Format {
    Json,
    Csv,
}

#[derive(Debug, Args)]
struct Common {
    /// IFC file; repeat to federate discipline models.
    #[arg(long = "model", required = true)]
    models: Vec<PathBuf>,
    /// TOML configuration file.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    reference_storey: Option<String>,
    #[arg(long)]
    ground_storey: Option<String>,
    #[arg(long, allow_negative_numbers = true)]
    cut_offset: Option<f64>,
    #[arg(long)]
    eps: Option<f64>,
    #[arg(long)]
    min_pts: Option<usize>,
    #[arg(long)]
    hull_k: Option<usize>,
    /// Overhang line `x1,y1,x2,y2,side,label,limit`; repeatable.
    #[arg(long = "line", allow_hyphen_values = true)]
    lines: Vec<String>,
    #[arg(long)]
    out_dir: Option<PathBuf>,
    #[arg(long, value_enum, default_value = "json")]
    format: Format,
    /// Reject dangling references and syntax errors instead of skipping them.
    #[arg(long)]
    strict: bool,
    /// Skip storey repair.
    #[arg(long)]
    no_repair: bool,
    /// Disable data-parallel execution.
    #[arg(long)]
    sequential: bool,
}

#[derive(Debug, Args)]
struct OverhangArgs {
    #[command(flatten)]
    common: Common,
    /// Target storey selector; repeatable. Defaults to the top parts.
    #[arg(long = "storey")]
    storeys: Vec<String>,
}

#[derive(Debug, Args)]
struct WktArgs {
    #[command(flatten)]
    common: Common,
    /// model-local or site-projected.
    #[arg(long, default_value = "model-local")]
    frame: String,
}

#[derive(Debug, Args)]
struct ServeArgs {
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    port: Option<u16>,
    #[arg(long)]
    bind: Option<String>,
    #[arg(long)]
    sequential: bool,
}

enum Failure {
    Usage(String),
    Pipeline(PipelineError),
    Io(String),
}

impl From<PipelineError> for Failure {
    fn from(e: PipelineError) -> Self {
        match e {
            PipelineError::Usage(m) => Failure::Usage(m),
            e if e.code() == "invalid_params" => Failure::Usage(e.to_string()),
            e => Failure::Pipeline(e),
        }
    }
}

impl From<std::io::Error> for Failure {
    fn from(e: std::io::Error) -> Self {
        Failure::Io(e.to_string())
    }
}

/// Runs the CLI and returns the process exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
        }
    };
    match dispatch(cli.command) {
        Ok(code) => code,
        Err(Failure::Usage(m)) => {
            eprintln!("usage error: {m}");
            EXIT_USAGE
        }
        Err(Failure::Pipeline(e)) => {
            eprintln!("error [{}]: {e}", e.code());
            EXIT_ERROR
        }
        Err(Failure::Io(m)) => {
            eprintln!("error [io_error]: {m}");
            EXIT_ERROR
        }
    }
}

pub fn exit_code(v: Verdict) -> i32 {
    match v {
        Verdict::Pass => EXIT_OK,
        Verdict::NeedsReview => EXIT_REVIEW,
        Verdict::Fail => EXIT_FAIL,
    }
}

fn mode(sequential: bool) -> ExecMode {
    if sequential {
        ExecMode::Sequential
    } else {
        ExecMode::default()
    }
}

impl Common {
    fn config(&self) -> Result<Config, Failure> {
        let mut cfg = match &self.config {
            Some(p) => FileConfig::load(p).map_err(Failure::Usage)?.pipeline,
            None => Config::default(),
        };
        if let Some(r) = &self.reference_storey {
            cfg.reference_storey = r.clone();
        }
        if let Some(g) = &self.ground_storey {
            cfg.ground_storey = Some(g.clone());
        }
        if let Some(v) = self.cut_offset {
            cfg.footprint.cut_offset = v;
        }
        if let Some(v) = self.eps {
            cfg.footprint.dbscan_eps = v;
        }
        if let Some(v) = self.min_pts {
            cfg.footprint.dbscan_min_pts = v;
        }
        if let Some(v) = self.hull_k {
            cfg.footprint.hull_k = v;
        }
        cfg.strict |= self.strict;
        if self.no_repair {
            cfg.repair_storeys = false;
        }
        for l in &self.lines {
            cfg.regulation.overhang_limits.push(OverhangLimit::parse(l).map_err(|e| Failure::Usage(e.to_string()))?);
        }
        cfg.validate()?;
        Ok(cfg)
    }

    fn files(&self) -> Result<Vec<(String, Vec<u8>)>, Failure> {
        self.models
            .iter()
            .map(|p| {
                let bytes = std::fs::read(p).map_err(|e| Failure::Io(format!("{}: {e}", p.display())))?;
                Ok((file_name(p), bytes))
            })
            .collect()
    }

    /// `<out-dir>/<stem of first model>_<suffix>`.
    fn artifact(&self, suffix: &str) -> Result<PathBuf, Failure> {
        let dir = self.out_dir.clone().unwrap_or_else(|| PathBuf::from("."));
        std::fs::create_dir_all(&dir)?;
        let stem = self.models.first().and_then(|p| p.file_stem()).map(|s| s.to_string_lossy().into_owned()).unwrap_or_else(|| "model".into());
        Ok(dir.join(format!("{stem}_{suffix}")))
    }

    fn load(&self) -> Result<(Config, geobim_core::storey::FederatedModel), Failure> {
        let cfg = self.config()?;
        let model = pipeline::load_model(&self.files()?, &cfg, mode(self.sequential))?;
        Ok((cfg, model))
    }
}

fn file_name(p: &Path) -> String {
    p.file_name().map(|s| s.to_string_lossy().into_owned()).unwrap_or_else(|| p.display().to_string())
}

fn print_bytes(b: &[u8]) {
    use std::io::Write;
    let _ = std::io::stdout().write_all(b);
}

#[derive(Serialize)]
struct ParseSummary {
    file: String,
    schema: String,
    instances: usize,
    length_to_meters: f64,
    georef: geobim_core::step::GeoRef,
    warnings: Vec<String>,
}

fn dispatch(cmd: Command) -> Result<i32, Failure> {
    match cmd {
        Command::Parse(c) => {
            let cfg = c.config()?;
            let mut out = Vec::new();
            for (name, bytes) in c.files()? {
                let g = geobim_core::step::load_ifc(&bytes, &name, cfg.strict).map_err(PipelineError::from);
                let g = match g {
                    Ok(g) => g,
                    // files without units still parse; report what is there
                    Err(PipelineError::Step(geobim_core::step::StepError::NoLengthUnit)) => {
                        let mut g = parse_step(&bytes, cfg.strict).map_err(PipelineError::from)?;
                        g.name = name.clone();
                        g.warnings.push("no length unit assignment".into());
                        g
                    }
                    Err(e) => return Err(e.into()),
                };
                out.push(ParseSummary {
                    file: name,
                    schema: g.schema_id.clone(),
                    instances: g.len(),
                    length_to_meters: g.length_to_meters,
                    georef: g.georef.clone(),
                    warnings: g.warnings.clone(),
                });
            }
            let body = json_bytes(&out);
            if c.out_dir.is_some() {
                std::fs::write(c.artifact("parse.json")?, &body)?;
            }
            print_bytes(&body);
            Ok(EXIT_OK)
        }
        Command::Storeys(c) => {
            let (_, model) = c.load()?;
            let infos = session::storey_infos(&model);
            let body = match c.format {
                Format::Json => json_bytes(&infos),
                Format::Csv => {
                    let mut s = String::from("index,name,elevation_m,element_count,repair_notes\n");
                    for i in &infos {
                        s.push_str(&format!("{},{},{:.3},{},{}\n", i.index, i.name, i.elevation_m, i.element_count, i.repair_notes.len()));
                    }
                    s.into_bytes()
                }
            };
            print_bytes(&body);
            Ok(EXIT_OK)
        }
        Command::Footprints(c) => {
            let (cfg, model) = c.load()?;
            let set = pipeline::footprints(&model, &cfg, mode(c.sequential))?;
            let body = json_bytes(&session::footprints_out(&model, &set));
            std::fs::write(c.artifact("footprints.json")?, &body)?;
            print_bytes(&body);
            Ok(EXIT_OK)
        }
        Command::Overlaps(c) => {
            let (cfg, model) = c.load()?;
            let set = pipeline::footprints(&model, &cfg, mode(c.sequential))?;
            let csv = overlaps_csv(&set);
            std::fs::write(c.artifact("overlaps.csv")?, &csv)?;
            match c.format {
                Format::Csv => print_bytes(csv.as_bytes()),
                Format::Json => print_bytes(&json_bytes(&session::overlaps_out(&model, &set))),
            }
            Ok(EXIT_OK)
        }
        Command::Overhang(a) => {
            let c = &a.common;
            let cfg = c.config()?;
            if cfg.regulation.overhang_limits.is_empty() {
                return Err(Failure::Usage("overhang needs at least one --line x1,y1,x2,y2,side,label,limit".into()));
            }
            let model = pipeline::load_model(&c.files()?, &cfg, mode(c.sequential))?;
            let sel = (!a.storeys.is_empty()).then_some(a.storeys.as_slice());
            let out = session::overhang_out(&model, &cfg, &cfg.regulation.overhang_limits, sel, mode(c.sequential))?;
            let body = json_bytes(&out);
            std::fs::write(c.artifact("overhang.json")?, &body)?;
            print_bytes(&body);
            Ok(exit_code(out.entry.verdict))
        }
        Command::Check(c) => {
            let (cfg, model) = c.load()?;
            let report = pipeline::run_checks(&model, &cfg, mode(c.sequential))?;
            let json = report_serialize(&report, ReportFormat::Json);
            std::fs::write(c.artifact("report.json")?, &json)?;
            std::fs::write(c.artifact("overlaps.csv")?, report_serialize(&report, ReportFormat::Csv))?;
            match c.format {
                Format::Json => print_bytes(&json),
                Format::Csv => print_bytes(&report_serialize(&report, ReportFormat::Csv)),
            }
            for e in &report.entries {
                eprintln!("{}: {}", e.rule, serde_json::to_value(e.verdict).ok().and_then(|v| v.as_str().map(String::from)).unwrap_or_default());
            }
            Ok(exit_code(report.overall()))
        }
        Command::Lint(c) => {
            let (cfg, model) = c.load()?;
            let parking = geobim_core::checks::count_parking_spaces(&model.graphs, &cfg.regulation.bike_keywords);
            let findings = geobim_core::checks::lint_model(&model, &parking, &cfg.lint);
            let body = json_bytes(&findings);
            if c.out_dir.is_some() {
                std::fs::write(c.artifact("lint.json")?, &body)?;
            }
            print_bytes(&body);
            Ok(EXIT_OK)
        }
        Command::ExportWkt(a) => {
            let c = &a.common;
            let frame: Frame = a.frame.parse().map_err(Failure::Usage)?;
            let (cfg, model) = c.load()?;
            let set = pipeline::footprints(&model, &cfg, mode(c.sequential))?;
            let csv = wkt_csv(&pipeline::export_wkt(&model, &set, frame)?);
            std::fs::write(c.artifact("footprints.wkt.csv")?, &csv)?;
            print_bytes(csv.as_bytes());
            Ok(EXIT_OK)
        }
        Command::Serve(s) => {
            let mut cfg = match &s.config {
                Some(p) => FileConfig::load(p).map_err(Failure::Usage)?,
                None => FileConfig::default(),
            };
            cfg.apply_env().map_err(Failure::Usage)?;
            if let Some(p) = s.port {
                cfg.server.port = p;
            }
            if let Some(b) = s.bind {
                cfg.server.bind = b;
            }
            cfg.pipeline.validate()?;
            let _ = tracing_subscriber::fmt().try_init();
            let rt = tokio::runtime::Builder::new_multi_thread().enable_all().build()?;
            rt.block_on(crate::api::serve(cfg, mode(s.sequential)))?;
            Ok(EXIT_OK)
        }
    }
}
