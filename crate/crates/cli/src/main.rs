//! `evtrack`: batch front end to the tracking engine.
//!
//! Every subcommand prints exactly one JSON document on stdout. Input
//! errors exit with status 2 and analysis precondition failures with 3,
//! both with `{"error": ..., "field": ...}` on stderr.

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::error::{ContextKind, ContextValue, ErrorKind};
use clap::{Parser, Subcommand};
use evtrack_core::analysis::{count_intervals, evidence_region, incident_start, ranked_paths, AnalysisOptions};
use evtrack_core::connection::build_graph;
use evtrack_core::evidence_map::{snapshot, MapParams};
use evtrack_core::geometry::{shortest_path, Point, Rect};
use evtrack_core::scenario::{load_scenario, simulate, ReportFilter, Scenario, ScenarioError, SimConfig, Timestamp};
use evtrack_service::{ApiError, ServiceConfig};
use serde::Serialize;

#[derive(Parser)]
#[command(name = "evtrack", version, about = "Evidential multi-sensor submarine tracking")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Simulate an incident into a scenario document.
    Simulate {
        #[arg(long)]
        config: PathBuf,
        /// Overrides the seed in the config.
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        out: Option<PathBuf>,
        /// Embed the map instead of referencing its file.
        #[arg(long)]
        inline_map: bool,
    },
    /// Connection graph between the unflagged reports.
    Graph {
        #[arg(long)]
        scenario: PathBuf,
        #[arg(long = "type")]
        type_id: Option<String>,
        /// Keep only links with plausibility above this value.
        #[arg(long)]
        threshold: Option<f64>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Chains ranked by support under at most `n_subs` submarines.
    Paths {
        #[arg(long)]
        scenario: PathBuf,
        #[arg(long)]
        n_subs: usize,
        #[arg(long)]
        top: Option<usize>,
        /// Beam width used above the exact limit.
        #[arg(long)]
        beam: Option<usize>,
        #[arg(long)]
        exact_limit: Option<usize>,
        #[arg(long = "type")]
        type_id: Option<String>,
    },
    /// Evidence intervals for each number of submarines.
    Counts {
        #[arg(long)]
        scenario: PathBuf,
        #[arg(long = "type")]
        type_id: Option<String>,
    },
    /// Evidence for at least one submarine in a rectangle.
    Region {
        #[arg(long)]
        scenario: PathBuf,
        /// `x0,y0,x1,y1` in map meters.
        #[arg(long, value_parser = parse_rect, allow_hyphen_values = true)]
        rect: Rect,
        /// `t0,t1` in milliseconds.
        #[arg(long, value_parser = parse_window, allow_hyphen_values = true)]
        window: Option<[Timestamp; 2]>,
    },
    /// Time at which the region support first reaches a threshold.
    Incident {
        #[arg(long)]
        scenario: PathBuf,
        #[arg(long)]
        threshold: f64,
        /// Defaults to the whole map.
        #[arg(long, value_parser = parse_rect, allow_hyphen_values = true)]
        rect: Option<Rect>,
    },
    /// Evidence map at time `t` (milliseconds).
    Evmap {
        #[arg(long)]
        scenario: PathBuf,
        #[arg(long, allow_negative_numbers = true)]
        t: i64,
        /// Cell size in meters.
        #[arg(long)]
        cell: Option<f64>,
        #[arg(long = "type")]
        type_id: Option<String>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Shortest navigable route between two points.
    Shortest {
        #[arg(long)]
        scenario: PathBuf,
        /// `x,y` in map meters.
        #[arg(long, value_parser = parse_point, allow_hyphen_values = true)]
        from: Point,
        #[arg(long, value_parser = parse_point, allow_hyphen_values = true)]
        to: Point,
        #[arg(long = "type")]
        type_id: Option<String>,
    },
    /// Run the HTTP service.
    Serve {
        #[arg(long)]
        config: Option<PathBuf>,
    },
}

fn numbers<T: std::str::FromStr>(s: &str, n: usize) -> Result<Vec<T>, String> {
    let v: Vec<T> = s
        .split(',')
        .map(|p| p.trim().parse())
        .collect::<Result<_, _>>()
        .map_err(|_| format!("cannot parse `{s}`"))?;
    if v.len() != n {
        return Err(format!("expected {n} comma-separated numbers"));
    }
    Ok(v)
}

fn parse_point(s: &str) -> Result<Point, String> {
    let v = numbers(s, 2)?;
    Ok(Point::new(v[0], v[1]))
}

fn parse_rect(s: &str) -> Result<Rect, String> {
    let v = numbers(s, 4)?;
    Ok(Rect::from_corners(Point::new(v[0], v[1]), Point::new(v[2], v[3])))
}

fn parse_window(s: &str) -> Result<[Timestamp; 2], String> {
    let v = numbers(s, 2)?;
    Ok([Timestamp(v[0]), Timestamp(v[1])])
}

/// A failure with its exit status.
struct Failure {
    code: u8,
    error: String,
    field: Option<String>,
}

impl Failure {
    fn input(field: &str, error: impl ToString) -> Self {
        Failure {
            code: 2,
            error: error.to_string(),
            field: Some(field.into()),
        }
    }
}

impl<E: Into<ApiError>> From<E> for Failure {
    fn from(e: E) -> Self {
        let e: ApiError = e.into();
        let code = match e {
            ApiError::BadRequest { .. } | ApiError::NotFound(_) => 2,
            ApiError::Conflict(_) | ApiError::Unprocessable { .. } => 3,
            ApiError::Internal(_) => 1,
        };
        Failure {
            code,
            field: e.field().map(String::from),
            error: e.to_string(),
        }
    }
}

fn load(path: &Path) -> Result<Scenario, Failure> {
    load_scenario(path).map_err(|e| match e {
        ScenarioError::Io { .. } => Failure::input("scenario", e),
        e => e.into(),
    })
}

fn pretty(v: &impl Serialize) -> String {
    serde_json::to_string_pretty(v).expect("serialisable output") + "\n"
}

/// Writes `doc` to `out` when given, printing a short receipt instead.
fn emit(doc: String, out: Option<&Path>) -> Result<String, Failure> {
    match out {
        None => Ok(doc),
        Some(path) => {
            std::fs::write(path, &doc).map_err(|e| Failure::input("out", format!("{}: {e}", path.display())))?;
            Ok(pretty(&serde_json::json!({ "out": path.display().to_string(), "bytes": doc.len() })))
        }
    }
}

fn run(command: Command) -> Result<String, Failure> {
    let analysis = ReportFilter::analysis();
    match command {
        Command::Simulate { config, seed, out, inline_map } => {
            let mut cfg = SimConfig::load(&config).map_err(|e| match e {
                ScenarioError::Io { .. } => Failure::input("config", e),
                e => e.into(),
            })?;
            if let Some(seed) = seed {
                cfg.seed = seed;
            }
            let mut scenario = simulate(&cfg, config.parent())?;
            if inline_map {
                scenario.inline_map();
            }
            emit(scenario.to_json_string(), out.as_deref())
        }
        Command::Graph { scenario, type_id, threshold, out } => {
            if threshold.is_some_and(|t| !(0.0..=1.0).contains(&t)) {
                return Err(Failure::input("threshold", "must lie in [0, 1]"));
            }
            let s = load(&scenario)?;
            let g = build_graph(&s, &analysis, type_id.as_deref())?;
            emit(pretty(&g.export(threshold)), out.as_deref())
        }
        Command::Paths { scenario, n_subs, top, beam, exact_limit, type_id } => {
            let defaults = AnalysisOptions::default();
            let opts = AnalysisOptions {
                beam_width: beam.unwrap_or(defaults.beam_width),
                exact_limit: exact_limit.unwrap_or(defaults.exact_limit),
                ..defaults
            };
            if opts.beam_width == 0 {
                return Err(Failure::input("beam", "must be at least 1"));
            }
            let s = load(&scenario)?;
            let g = build_graph(&s, &analysis, type_id.as_deref())?;
            Ok(pretty(&ranked_paths(&g, n_subs, top, &opts)?))
        }
        Command::Counts { scenario, type_id } => {
            let s = load(&scenario)?;
            let g = build_graph(&s, &analysis, type_id.as_deref())?;
            Ok(pretty(&count_intervals(&g, &AnalysisOptions::default())?))
        }
        Command::Region { scenario, rect, window } => {
            let s = load(&scenario)?;
            Ok(pretty(&evidence_region(&s, rect, window)?))
        }
        Command::Incident { scenario, threshold, rect } => {
            let s = load(&scenario)?;
            let rect = rect.unwrap_or(*s.map().bounds());
            let start = incident_start(&s, rect, threshold)?;
            Ok(pretty(&serde_json::json!({ "start": start })))
        }
        Command::Evmap { scenario, t, cell, type_id, out } => {
            let s = load(&scenario)?;
            let params = MapParams {
                cell_size_m: cell,
                ..MapParams::default()
            };
            let field = snapshot(&s, Timestamp(t), type_id.as_deref(), &params)?;
            emit(pretty(&field), out.as_deref())
        }
        Command::Shortest { scenario, from, to, type_id } => {
            let s = load(&scenario)?;
            let sub = s.resolve_type(type_id.as_deref())?;
            Ok(pretty(&shortest_path(s.map(), from, to, sub.draught_m)?))
        }
        Command::Serve { config } => {
            let cfg = match config {
                Some(path) => ServiceConfig::load(&path),
                None => Ok(ServiceConfig::default()),
            }
            .and_then(|c| c.with_env(std::env::vars()))
            .map_err(|e| Failure {
                code: 2,
                field: e.field().map(String::from).or(Some("config".into())),
                error: e.to_string(),
            })?;
            evtrack_service::init_logging();
            evtrack_service::serve_blocking(cfg).map_err(|e| Failure {
                code: 1,
                error: e.to_string(),
                field: None,
            })?;
            Ok(pretty(&serde_json::json!({ "stopped": true })))
        }
    }
}

fn report(f: &Failure) {
    let body = serde_json::json!({ "error": f.error, "field": f.field });
    eprintln!("{body}");
}

fn usage_failure(e: &clap::Error) -> Failure {
    let field = match e.get(ContextKind::InvalidArg) {
        Some(ContextValue::String(arg)) => Some(arg.split_whitespace().next().unwrap_or(arg).trim_start_matches('-').replace('-', "_")),
        _ => None,
    };
    let error = e.render().to_string();
    let error = error.lines().next().unwrap_or_default().trim_start_matches("error: ").to_string();
    Failure { code: 2, error, field }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) if matches!(e.kind(), ErrorKind::DisplayHelp | ErrorKind::DisplayVersion) => {
            let _ = e.print();
            return ExitCode::SUCCESS;
        }
        Err(e) if e.kind() == ErrorKind::DisplayHelpOnMissingArgumentOrSubcommand => {
            let _ = e.print();
            return ExitCode::from(2);
        }
        Err(e) => {
            report(&usage_failure(&e));
            return ExitCode::from(2);
        }
    };
    match run(cli.command) {
        Ok(doc) => {
            print!("{doc}");
            ExitCode::SUCCESS
        }
        Err(f) => {
            report(&f);
            ExitCode::from(f.code)
        }
    }
}
