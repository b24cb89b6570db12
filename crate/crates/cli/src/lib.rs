//! Command-line driver for the failsafe oracles.
//!
//! Vertices are 1-based in every file and in every output line.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::time::Instant;

use clap::{Parser, ValueEnum};
use failsafe_core::full_dso::{radius_for, DEFAULT_ALPHA};
use failsafe_core::{
    Distance, DsoError, Failure, Field, FullDso, FullDsoConfig, Permutation, ShortestPathForests,
    SptConfig, TruncatedDso, WeightedDigraph, INF,
};
use serde::Serialize;
use thiserror::Error;

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Mode {
    Truncated,
    Full,
    Spt,
    Verify,
    Bench,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Tsv,
    Json,
}

#[derive(Debug, Clone, Parser)]
#[command(
    name = "failsafe",
    version,
    about = "Distance sensitivity oracles for weighted digraphs"
)]
pub struct Args {
    #[arg(long, value_enum, default_value_t = Mode::Truncated)]
    pub mode: Mode,
    /// Truncation radius r.
    #[arg(long, conflicts_with = "alpha")]
    pub radius: Option<usize>,
    /// Radius exponent: r = ceil(M n^alpha). Default 0.420645.
    #[arg(long)]
    pub alpha: Option<f64>,
    #[arg(long, env = "FAILSAFE_SEED", default_value_t = 0)]
    pub seed: u64,
    /// Prime modulus for the oracle field.
    #[arg(long)]
    pub prime: Option<u64>,
    /// Witness block size for shortest-path trees. Default ceil(n^0.5286).
    #[arg(long)]
    pub block_size: Option<usize>,
    /// Hitting-set constant C.
    #[arg(long, default_value_t = 3.0)]
    pub hitting_c: f64,
    #[arg(long, value_enum, default_value_t = Format::Tsv)]
    pub format: Format,
    /// Write results here instead of stdout.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Graph file: header `n m M`, then `u v w` per edge.
    pub graph: PathBuf,
    /// Query file: `u v E a b` or `u v V f` per line. All queries if absent.
    pub queries: Option<PathBuf>,
}

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error("{0}")]
    Parse(String),
    #[error("{0} mismatching answers")]
    Mismatch(usize),
    #[error("{0}")]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Oracle(#[from] DsoError),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) => 1,
            CliError::Parse(_) | CliError::Io(_) => 2,
            CliError::Mismatch(_) => 3,
            CliError::Oracle(DsoError::InvalidParameter(_) | DsoError::ZeroRadius) => 1,
            CliError::Oracle(_) => 2,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Query {
    pub u: usize,
    pub v: usize,
    pub failure: Failure,
}

/// Parses a query file against `g`. Malformed lines are errors; well-formed
/// queries that do not fit the graph are dropped with a warning.
pub fn parse_queries(
    text: &str,
    g: &WeightedDigraph,
) -> Result<(Vec<Query>, Vec<String>), CliError> {
    let mut queries = Vec::new();
    let mut warnings = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let bad = |msg: &str| CliError::Parse(format!("query line {}: {msg}", i + 1));
        let tok: Vec<&str> = line.split_whitespace().collect();
        let num = |s: &str| {
            s.parse::<usize>()
                .map_err(|_| bad(&format!("`{s}` is not a vertex id")))
        };
        let (u, v) = match tok.as_slice() {
            [u, v, ..] => (num(u)?, num(v)?),
            _ => return Err(bad("expected `u v E a b` or `u v V f`")),
        };
        let ids = match tok[2..] {
            ["E", a, b] => vec![u, v, num(a)?, num(b)?],
            ["V", f] => vec![u, v, num(f)?],
            _ => return Err(bad("expected `u v E a b` or `u v V f`")),
        };
        if ids.contains(&0) {
            warnings.push(format!(
                "query line {}: vertex ids start at 1, skipped",
                i + 1
            ));
            continue;
        }
        let failure = if ids.len() == 4 {
            Failure::Edge(ids[2] - 1, ids[3] - 1)
        } else {
            Failure::Vertex(ids[2] - 1)
        };
        let q = Query {
            u: u - 1,
            v: v - 1,
            failure,
        };
        match g.check_query(q.u, q.v, q.failure) {
            Ok(()) => queries.push(q),
            Err(e) => warnings.push(format!("query line {}: {e}, skipped", i + 1)),
        }
    }
    Ok((queries, warnings))
}

/// Every valid query on `g`, failures in edge-then-vertex order.
pub fn all_queries(g: &WeightedDigraph) -> Vec<Query> {
    let mut out = Vec::new();
    for failure in g.failures() {
        for u in 0..g.n() {
            for v in 0..g.n() {
                if g.check_query(u, v, failure).is_ok() {
                    out.push(Query { u, v, failure });
                }
            }
        }
    }
    out
}

#[derive(Debug, Serialize)]
struct Record {
    u: usize,
    v: usize,
    failure: String,
    answer: Option<Distance>,
    truncated: bool,
}

fn read(path: &Path) -> Result<String, CliError> {
    fs::read_to_string(path).map_err(|e| CliError::Parse(format!("{}: {e}", path.display())))
}

fn radius(args: &Args, g: &WeightedDigraph) -> Result<usize, CliError> {
    match (args.radius, args.alpha) {
        (Some(0), _) => Err(CliError::Usage("--radius must be at least 1".into())),
        (Some(r), _) => Ok(r),
        (None, alpha) => {
            let a = alpha.unwrap_or(DEFAULT_ALPHA);
            if !(0.0..=1.0).contains(&a) {
                return Err(CliError::Usage(format!("--alpha {a} is outside [0, 1]")));
            }
            Ok(radius_for(g.n(), g.max_weight(), a))
        }
    }
}

fn field(args: &Args) -> Result<Field, CliError> {
    match args.prime {
        None => Ok(Field::goldilocks()),
        Some(p) => Field::new(p).map_err(|e| CliError::Usage(format!("--prime: {e}"))),
    }
}

fn spt_config(args: &Args) -> Result<SptConfig, CliError> {
    if args.block_size == Some(0) {
        return Err(CliError::Usage("--block-size must be at least 1".into()));
    }
    if !(args.hitting_c > 0.0 && args.hitting_c.is_finite()) {
        return Err(CliError::Usage("--hitting-c must be positive".into()));
    }
    Ok(SptConfig {
        hitting_c: args.hitting_c,
        block_size: args.block_size,
    })
}

fn full_config(args: &Args, g: &WeightedDigraph) -> Result<FullDsoConfig, CliError> {
    Ok(FullDsoConfig {
        alpha: args.alpha.unwrap_or(DEFAULT_ALPHA),
        radius: Some(radius(args, g)?),
        field: field(args)?,
        seed: args.seed,
        spt: spt_config(args)?,
    })
}

fn render(records: &[Record], format: Format) -> String {
    match format {
        Format::Json => {
            let mut s = serde_json::to_string_pretty(records).expect("records serialize");
            s.push('\n');
            s
        }
        Format::Tsv => {
            let mut s = String::new();
            for r in records {
                let answer = match (r.answer, r.truncated) {
                    (Some(d), true) => format!(">={d}"),
                    (Some(d), false) => d.to_string(),
                    (None, _) => "INF".to_string(),
                };
                s.push_str(&format!("{} {} {} {}\n", r.u, r.v, r.failure, answer));
            }
            s
        }
    }
}

fn record(q: &Query, answer: Option<Distance>, truncated: bool) -> Record {
    Record {
        u: q.u + 1,
        v: q.v + 1,
        failure: q.failure.to_string(),
        answer,
        truncated,
    }
}

/// `v u parent` per tree vertex, roots in order.
fn forest_lines(n: usize, parent: impl Fn(usize, usize) -> Option<usize>) -> String {
    let mut s = String::new();
    for root in 0..n {
        for x in 0..n {
            if let Some(p) = parent(root, x) {
                s.push_str(&format!("{} {} {}\n", root + 1, x + 1, p + 1));
            }
        }
    }
    s
}

/// Runs one invocation. Primary output goes to `out` unless `--out` is set;
/// warnings and timings go to `err`.
pub fn run(args: &Args, out: &mut dyn Write, err: &mut dyn Write) -> Result<(), CliError> {
    let g = WeightedDigraph::parse(&read(&args.graph)?)
        .map_err(|e| CliError::Parse(format!("{}: {e}", args.graph.display())))?;
    let queries = match &args.queries {
        Some(path) => {
            let (qs, warnings) = parse_queries(&read(path)?, &g)?;
            for w in warnings {
                writeln!(err, "warning: {w}")?;
            }
            qs
        }
        None => all_queries(&g),
    };

    let text = match args.mode {
        Mode::Truncated => {
            let r = radius(args, &g)?;
            let dso = TruncatedDso::preprocess_in(&g, r, args.seed, field(args)?)?;
            let mut records = Vec::with_capacity(queries.len());
            for q in &queries {
                let d = dso.query(q.u, q.v, q.failure)?;
                records.push(record(q, Some(d as Distance), d == r));
            }
            render(&records, args.format)
        }
        Mode::Full => {
            let dso = FullDso::build(&g, &full_config(args, &g)?)?;
            let mut records = Vec::with_capacity(queries.len());
            for q in &queries {
                let d = dso.query_full(q.u, q.v, q.failure)?;
                records.push(record(q, (d != INF).then_some(d), false));
            }
            render(&records, args.format)
        }
        Mode::Spt => {
            let pi = Permutation::random(g.n(), args.seed);
            let forests = ShortestPathForests::compute(&g, &pi, &spt_config(args)?);
            if forests.escalations() > 0 {
                writeln!(
                    err,
                    "warning: hitting set enlarged {} times",
                    forests.escalations()
                )?;
            }
            let t_in = forest_lines(g.n(), |v, u| forests.parent_in(v, u));
            let t_out = forest_lines(g.n(), |u, v| forests.parent_out(u, v));
            match &args.out {
                Some(path) => {
                    fs::write(path, t_in)?;
                    let mut out_path = path.clone().into_os_string();
                    out_path.push(".out");
                    fs::write(out_path, t_out)?;
                    return Ok(());
                }
                None => format!("# in\n{t_in}# out\n{t_out}"),
            }
        }
        Mode::Verify => {
            let dso = FullDso::build(&g, &full_config(args, &g)?)?;
            let r = dso.radius();
            let mut s = String::new();
            let mut mismatches = 0;
            for q in &queries {
                let ans = dso.query_verified(q.u, q.v, q.failure)?;
                let core = dso.core().query(q.u, q.v, q.failure)? as Distance;
                if !ans.agrees() || core != ans.exact.min(r as Distance) {
                    mismatches += 1;
                    let show = |d: Distance| {
                        if d == INF {
                            "INF".to_string()
                        } else {
                            d.to_string()
                        }
                    };
                    s.push_str(&format!(
                        "mismatch {} {} {} full {} core {} exact {}\n",
                        q.u + 1,
                        q.v + 1,
                        q.failure,
                        show(ans.answer),
                        core,
                        show(ans.exact)
                    ));
                }
            }
            s.push_str(&format!(
                "queries {} mismatches {} fallbacks {} radius {}\n",
                queries.len(),
                mismatches,
                dso.fallback_count(),
                r
            ));
            emit(args, out, &s)?;
            if mismatches > 0 {
                return Err(CliError::Mismatch(mismatches));
            }
            return Ok(());
        }
        Mode::Bench => {
            let config = full_config(args, &g)?;
            let t0 = Instant::now();
            let dso = FullDso::build(&g, &config)?;
            let build = t0.elapsed();
            let t1 = Instant::now();
            for q in &queries {
                dso.query_full(q.u, q.v, q.failure)?;
            }
            let answer = t1.elapsed();
            writeln!(err, "preprocess {:.6} s", build.as_secs_f64())?;
            writeln!(
                err,
                "queries {:.6} s ({:.3} us/query)",
                answer.as_secs_f64(),
                answer.as_secs_f64() * 1e6 / queries.len().max(1) as f64
            )?;
            format!(
                "n {} m {} radius {} queries {} fallbacks {} escalations {}\n",
                g.n(),
                g.edge_count(),
                dso.radius(),
                queries.len(),
                dso.fallback_count(),
                dso.forests().escalations()
            )
        }
    };
    emit(args, out, &text)
}

fn emit(args: &Args, out: &mut dyn Write, text: &str) -> Result<(), CliError> {
    match &args.out {
        Some(path) => fs::write(path, text)?,
        None => out.write_all(text.as_bytes())?,
    }
    Ok(())
}
