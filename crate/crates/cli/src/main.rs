use anyhow::{Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use kpz_cli::commands::{self, PointArgs, SeriesOverrides};
use kpz_cli::record::{to_json, Record, Table};
use kpz_cli::selftest::Suite;
use kpz_core::tracy_widom::TwMethod;
use std::path::PathBuf;
use std::process::ExitCode;
use std::time::Instant;

#[derive(Parser, Debug)]
#[command(name = "kpz", version, about = "One-point, two-point and conditional laws of the KPZ fixed point")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum Format {
    Json,
    Csv,
}

#[derive(Args, Debug)]
struct Output {
    /// Seed for every sampled check.
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Worker threads; 0 uses one per core.
    #[arg(long, default_value_t = 0)]
    threads: usize,
    /// Output format; json unless given (selftest prints one line per criterion).
    #[arg(long, value_enum)]
    format: Option<Format>,
    /// Write the output here instead of stdout.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Add the wall-clock duration to the diagnostics. Off by default so that repeated runs
    /// produce identical files.
    #[arg(long)]
    timing: bool,
}

#[derive(Args, Debug)]
struct Series {
    #[arg(long)]
    n1_max: Option<usize>,
    #[arg(long)]
    n2_max: Option<usize>,
    #[arg(long)]
    z_radius: Option<f64>,
    #[arg(long)]
    nodes_l1: Option<usize>,
    #[arg(long)]
    nodes_l2: Option<usize>,
    #[arg(long)]
    z_nodes: Option<usize>,
    #[arg(long)]
    epsilon: Option<f64>,
}

impl From<&Series> for SeriesOverrides {
    fn from(s: &Series) -> Self {
        SeriesOverrides {
            n1_max: s.n1_max,
            n2_max: s.n2_max,
            z_radius: s.z_radius,
            nodes_l1: s.nodes_l1,
            nodes_l2: s.nodes_l2,
            z_nodes: s.z_nodes,
            epsilon: s.epsilon,
        }
    }
}

#[derive(Args, Debug)]
struct Point {
    #[arg(long, default_value_t = 0.0, allow_hyphen_values = true)]
    x: f64,
    #[arg(long, default_value_t = 0.0, allow_hyphen_values = true)]
    xp: f64,
    #[arg(long, default_value_t = 1.0)]
    tau: f64,
    #[arg(long, default_value_t = 1.0)]
    taup: f64,
    #[arg(long, default_value_t = 2.0, allow_hyphen_values = true)]
    h: f64,
    #[arg(long, default_value_t = 4.0, allow_hyphen_values = true)]
    hp: f64,
}

impl From<&Point> for PointArgs {
    fn from(p: &Point) -> Self {
        PointArgs { x: p.x, xp: p.xp, tau: p.tau, taup: p.taup, h: p.h, hp: p.hp }
    }
}

#[derive(Subcommand, Debug)]
enum Command {
    /// GUE Tracy-Widom CDF, density and second derivative.
    Tw {
        #[arg(long, allow_hyphen_values = true, conflicts_with_all = ["h", "x", "tau"])]
        s: Option<f64>,
        #[arg(long, allow_hyphen_values = true, requires_all = ["x", "tau"])]
        h: Option<f64>,
        #[arg(long, allow_hyphen_values = true, requires_all = ["h", "tau"])]
        x: Option<f64>,
        #[arg(long, requires_all = ["h", "x"])]
        tau: Option<f64>,
        /// fredholm, painleve or tail.
        #[arg(long, default_value = "fredholm")]
        method: String,
        #[command(flatten)]
        out: Output,
    },
    /// P(H(x, tau) >= h) from the one-level series.
    OnePoint {
        #[arg(long, default_value_t = 0.0, allow_hyphen_values = true)]
        x: f64,
        #[arg(long, default_value_t = 1.0)]
        tau: f64,
        #[arg(long, default_value_t = 0.0, allow_hyphen_values = true)]
        h: f64,
        /// Compare with an oracle (fredholm).
        #[arg(long)]
        against: Option<String>,
        #[command(flatten)]
        series: Series,
        #[command(flatten)]
        out: Output,
    },
    /// Joint tail P(H(x', tau') >= h', H(x + x', tau + tau') >= h + h').
    TwoPoint {
        #[command(flatten)]
        point: Point,
        #[command(flatten)]
        series: Series,
        #[command(flatten)]
        out: Output,
    },
    /// Conditional law of the increment given H(x', tau') = h'.
    Conditional {
        #[command(flatten)]
        point: Point,
        #[command(flatten)]
        series: Series,
        #[command(flatten)]
        out: Output,
    },
    /// Residuals of the large-h' expansion and their fitted slopes.
    Expansion {
        #[command(flatten)]
        point: Point,
        /// h' samples (repeatable); defaults to 4, 6.25, 9, 12.25.
        #[arg(long = "hp-list", value_delimiter = ',')]
        hp_list: Vec<f64>,
        /// Check the joint/marginal ratio instead of the conditional law.
        #[arg(long)]
        two_point: bool,
        #[command(flatten)]
        series: Series,
        #[command(flatten)]
        out: Output,
    },
    /// Envelope, combinatorial and contour-distance checks.
    Bounds {
        /// Level-1 heights of the envelope grid; defaults to 4, 6, 9.
        #[arg(long, value_delimiter = ',')]
        h: Vec<f64>,
        #[arg(long)]
        epsilon: Option<f64>,
        #[command(flatten)]
        out: Output,
    },
    /// Run the acceptance suite; exits nonzero if any criterion fails.
    Selftest {
        #[arg(long, conflicts_with = "full")]
        fast: bool,
        #[arg(long)]
        full: bool,
        /// Shorthand for --format json.
        #[arg(long)]
        json: bool,
        #[command(flatten)]
        out: Output,
    },
}

fn emit(mut record: Record, table: &Table, out: &Output, format: Format, started: Instant) -> Result<()> {
    if out.timing {
        record.diagnostics["wall_clock_s"] = serde_json::json!(started.elapsed().as_secs_f64());
    }
    record.config["seed"] = serde_json::json!(out.seed);
    record.config["threads"] = serde_json::json!(out.threads);
    let text = match format {
        Format::Json => to_json(&record)?,
        Format::Csv => table.to_csv()?,
    };
    match &out.out {
        Some(p) => std::fs::write(p, text).with_context(|| format!("writing {}", p.display()))?,
        None => print!("{text}"),
    }
    Ok(())
}

fn output(c: &Command) -> &Output {
    match c {
        Command::Tw { out, .. }
        | Command::OnePoint { out, .. }
        | Command::TwoPoint { out, .. }
        | Command::Conditional { out, .. }
        | Command::Expansion { out, .. }
        | Command::Bounds { out, .. }
        | Command::Selftest { out, .. } => out,
    }
}

fn run(cli: Cli) -> Result<bool> {
    let started = Instant::now();
    let out = output(&cli.command);
    let (record, table) = match &cli.command {
        Command::Tw { s, h, x, tau, method, .. } => {
            let hxt = match (h, x, tau) {
                (Some(h), Some(x), Some(t)) => Some((*h, *x, *t)),
                _ => None,
            };
            commands::tw(*s, hxt, method.parse::<TwMethod>()?)?
        }
        Command::OnePoint { x, tau, h, against, series, .. } => {
            commands::one_point(*x, *tau, *h, &series.into(), against.as_deref())?
        }
        Command::TwoPoint { point, series, .. } => commands::two_point(&point.into(), &series.into())?,
        Command::Conditional { point, series, .. } => commands::conditional(&point.into(), &series.into())?,
        Command::Expansion { point, hp_list, two_point, series, .. } => {
            commands::expansion(&point.into(), hp_list, *two_point, &series.into())?
        }
        Command::Bounds { h, epsilon, .. } => commands::bounds(h, *epsilon, out.seed)?,
        Command::Selftest { full, json, .. } => {
            let suite = if *full { Suite::Full } else { Suite::Fast };
            let (record, table, outcomes) = commands::selftest(suite, out.seed)?;
            let format = if *json { Some(Format::Json) } else { out.format };
            match format {
                Some(f) => emit(record, &table, out, f, started)?,
                None => {
                    for o in &outcomes {
                        println!("{}", o.line());
                    }
                }
            }
            return Ok(outcomes.iter().all(|o| o.pass));
        }
    };
    emit(record, &table, out, out.format.unwrap_or(Format::Json), started)?;
    Ok(true)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let threads = output(&cli.command).threads;
    let pool = match rayon::ThreadPoolBuilder::new().num_threads(threads).build() {
        Ok(p) => p,
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(2);
        }
    };
    match pool.install(|| run(cli)) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}
