use std::collections::BTreeSet;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use rumor_core::centrality::centrality_all;
use rumor_core::estimator::{make_suspects_all, map_estimate, SuspectSet};
use rumor_core::exactprob::{
    errata_audit, pc_all_suspects, pc_conditional, pc_connected, pc_general_lower_bound, pc_two_suspects, phi1, phi2,
    phi3, DetectionResult,
};
use rumor_core::harness::{figure_sweep, run_experiment, write_csv, Figure, SweepOverrides};
use rumor_core::probability::format_decimal;
use rumor_core::spread::{simulate_si, SpreadConfig};
use rumor_core::topology::{load_edge_list, regular_tree};
use rumor_core::{
    Arithmetic, Backend, Error, ErrorClass, ExperimentConfig, ExperimentScenario, NodeId, Probability, Snapshot,
};
use serde_json::json;

#[derive(Parser)]
#[command(name = "rumor", version, about = "Rumor source detection with suspects")]
struct Cli {
    #[arg(long, value_enum, global = true, default_value_t = Format::Text)]
    format: Format,
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Text,
    Csv,
    Json,
}

#[derive(Subcommand)]
enum Command {
    /// Run one spreading process and print the infected snapshot.
    Simulate(SimulateArgs),
    /// Estimate the source of a snapshot from a suspect set.
    Estimate(EstimateArgs),
    /// Rumor centrality of every node of a tree snapshot.
    Centrality {
        /// Snapshot JSON file.
        #[arg(long)]
        snapshot: PathBuf,
    },
    /// Exact detection probability on a regular tree.
    Exact {
        #[command(subcommand)]
        which: ExactCmd,
    },
    /// Limiting detection probability as n grows.
    Asymptotic {
        #[command(subcommand)]
        which: AsymptoticCmd,
    },
    /// Monte Carlo experiment against the exact value.
    Experiment(ExperimentArgs),
    /// Data for one of the detection-probability figures.
    Figure(FigureArgs),
    /// Compare the line-graph two-suspect enumeration with the published
    /// closed expression.
    Errata {
        #[arg(long, default_value_t = 3)]
        n_min: u32,
        #[arg(long, default_value_t = 100)]
        n_max: u32,
        #[arg(long, default_value_t = 4)]
        d_max: u32,
    },
}

#[derive(Args)]
struct SimulateArgs {
    /// Edge-list file; when absent, a regular tree of degree --delta.
    #[arg(long, conflicts_with = "delta")]
    graph: Option<PathBuf>,
    #[arg(long)]
    delta: Option<u32>,
    #[arg(long, default_value_t = 0)]
    source: u32,
    #[arg(long)]
    n: usize,
    #[arg(long, value_enum, default_value_t = BackendArg::UniformBoundary)]
    backend: BackendArg,
    #[arg(long)]
    seed: u64,
}

#[derive(Args)]
struct EstimateArgs {
    #[arg(long)]
    snapshot: PathBuf,
    /// Comma-separated suspect ids; every infected node when absent.
    #[arg(long, value_delimiter = ',')]
    suspects: Option<Vec<u32>>,
    /// Seed for breaking ties between equally central suspects.
    #[arg(long)]
    seed: u64,
}

#[derive(Clone, Copy, ValueEnum)]
enum BackendArg {
    UniformBoundary,
    ExponentialClocks,
}

impl From<BackendArg> for Backend {
    fn from(b: BackendArg) -> Backend {
        match b {
            BackendArg::UniformBoundary => Backend::UniformBoundary,
            BackendArg::ExponentialClocks => Backend::ExponentialClocks,
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum ArithArg {
    Auto,
    Exact,
    Float,
}

impl From<ArithArg> for Arithmetic {
    fn from(a: ArithArg) -> Arithmetic {
        match a {
            ArithArg::Auto => Arithmetic::Auto,
            ArithArg::Exact => Arithmetic::Exact,
            ArithArg::Float => Arithmetic::Float,
        }
    }
}

#[derive(Args)]
struct Common {
    #[arg(long)]
    delta: u32,
    #[arg(long)]
    n: u32,
    #[arg(long, value_enum, default_value_t = ArithArg::Auto)]
    arith: ArithArg,
}

#[derive(Subcommand)]
enum ExactCmd {
    AllSuspects(Common),
    Connected {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        k: u64,
    },
    Two {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        d: u32,
    },
    GeneralBound {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        k: u64,
    },
    /// Detection probability given that `m` neighbors of the source are suspects.
    Conditional {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        m: u32,
    },
}

#[derive(Subcommand)]
enum AsymptoticCmd {
    Phi1 {
        #[arg(long)]
        delta: u32,
    },
    Phi2 {
        #[arg(long)]
        delta: u32,
        #[arg(long)]
        k: u64,
    },
    Phi3 {
        #[arg(long)]
        delta: u32,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum ScenarioArg {
    AllSuspects,
    ConnectedK,
    TwoAtD,
}

#[derive(Args)]
struct ExperimentArgs {
    #[arg(long, value_enum)]
    scenario: ScenarioArg,
    #[arg(long)]
    delta: u32,
    #[arg(long)]
    n: u32,
    #[arg(long)]
    k: Option<u64>,
    #[arg(long)]
    d: Option<u32>,
    #[arg(long)]
    trials: u64,
    #[arg(long)]
    seed: u64,
    #[arg(long, value_enum, default_value_t = BackendArg::UniformBoundary)]
    backend: BackendArg,
}

#[derive(Args)]
struct FigureArgs {
    /// fig7, fig8, fig9 or fig10.
    figure: String,
    #[arg(long)]
    seed: u64,
    #[arg(long)]
    n: Option<u32>,
    #[arg(long)]
    trials: Option<u64>,
    #[arg(long, value_delimiter = ',')]
    deltas: Option<Vec<u32>>,
    #[arg(long, value_delimiter = ',')]
    ks: Option<Vec<u64>>,
    #[arg(long, value_delimiter = ',')]
    ds: Option<Vec<u32>>,
    #[arg(long, value_enum)]
    backend: Option<BackendArg>,
    /// Directory for `<figure>.csv` and `<figure>.meta.json`.
    #[arg(long)]
    out: Option<PathBuf>,
}

/// Failure of a command, carrying its exit status.
struct Failure {
    code: u8,
    msg: String,
}

impl From<Error> for Failure {
    fn from(e: Error) -> Failure {
        let code = match e.class() {
            ErrorClass::Usage => 2,
            ErrorClass::Capacity => 3,
            ErrorClass::Validation => 4,
        };
        Failure { code, msg: e.to_string() }
    }
}

fn usage(msg: impl Into<String>) -> Failure {
    Failure { code: 2, msg: msg.into() }
}

fn read(path: &Path) -> Result<String, Failure> {
    std::fs::read_to_string(path).map_err(|e| usage(format!("cannot read {}: {e}", path.display())))
}

fn json_text(v: &impl serde::Serialize) -> String {
    serde_json::to_string_pretty(v).expect("values serialize") + "\n"
}

fn simulate(a: SimulateArgs, format: Format) -> Result<String, Failure> {
    let g = match (&a.graph, a.delta) {
        (Some(p), _) => load_edge_list(&read(p)?)?,
        (None, Some(delta)) => regular_tree(delta, 0)?,
        (None, None) => return Err(usage("either --graph or --delta is required")),
    };
    let cfg = SpreadConfig { source: NodeId(a.source), n: a.n, backend: a.backend.into(), seed: a.seed };
    let snap = simulate_si(&g, &cfg)?;
    Ok(match format {
        Format::Json => snap.to_json() + "\n",
        Format::Csv => {
            let mut s = String::from("u,v\n");
            for (u, v) in snap.edges() {
                writeln!(s, "{u},{v}").unwrap();
            }
            s
        }
        Format::Text => {
            let mut s = format!("# n={} source={}\n", snap.n(), a.source);
            for (u, v) in snap.edges() {
                writeln!(s, "{u} {v}").unwrap();
            }
            s
        }
    })
}

fn load_snapshot(path: &Path) -> Result<Snapshot, Failure> {
    Ok(Snapshot::from_json(&read(path)?)?)
}

fn estimate(a: EstimateArgs, format: Format) -> Result<String, Failure> {
    let snap = load_snapshot(&a.snapshot)?;
    let suspects = match a.suspects {
        Some(ids) => SuspectSet::general(ids.into_iter().map(NodeId))?,
        None => make_suspects_all(&snap),
    };
    let e = map_estimate(&snap, &suspects, a.seed)?;
    let set = |s: &BTreeSet<NodeId>| s.iter().map(|v| v.to_string()).collect::<Vec<_>>();
    Ok(match format {
        Format::Json => json_text(&e),
        Format::Csv => {
            format!("chosen,argmax_set,tie_broken\n{},{},{}\n", e.chosen, set(&e.argmax_set).join(" "), e.tie_broken)
        }
        Format::Text => format!("{}\n", e.chosen),
    })
}

fn centrality(path: &Path, format: Format) -> Result<String, Failure> {
    let report = centrality_all(&load_snapshot(path)?)?;
    Ok(match format {
        Format::Json => json_text(&report),
        Format::Csv | Format::Text => {
            let sep = if format == Format::Csv { "," } else { " " };
            let mut s = ["node", "subtree_size", "log_centrality", "centrality"].join(sep) + "\n";
            for r in &report.rows {
                let cells = [
                    r.node.to_string(),
                    r.subtree_size.to_string(),
                    format_decimal(r.log_centrality),
                    r.centrality.to_string(),
                ];
                s += &(cells.join(sep) + "\n");
            }
            s
        }
    })
}

fn detection(r: &DetectionResult, format: Format) -> String {
    let rational = r.value.as_exact().map(|_| r.value.to_string());
    match format {
        Format::Json => json_text(&json!({
            "value": r.value.to_f64(),
            "rational": rational,
            "method": r.method.label(),
            "scenario": r.scenario.label(),
        })),
        Format::Csv => format!(
            "value,rational,method,scenario\n{},{},{},{}\n",
            r.value.to_f64(),
            rational.unwrap_or_default(),
            r.method.label(),
            r.scenario.label()
        ),
        Format::Text => format!("{}\n", format_decimal(r.value.to_f64())),
    }
}

fn exact(which: ExactCmd, format: Format) -> Result<String, Failure> {
    let r = match which {
        ExactCmd::AllSuspects(c) => pc_all_suspects(c.delta, c.n, c.arith.into())?,
        ExactCmd::Connected { common: c, k } => pc_connected(c.delta, k, c.n, c.arith.into())?,
        ExactCmd::Two { common: c, d } => pc_two_suspects(c.delta, d, c.n, c.arith.into())?,
        ExactCmd::GeneralBound { common: c, k } => pc_general_lower_bound(c.delta, k, c.n, c.arith.into())?,
        ExactCmd::Conditional { common: c, m } => {
            let p: Probability = pc_conditional(c.delta, m, c.n, c.arith.into())?;
            let rational = p.as_exact().map(|_| p.to_string());
            return Ok(match format {
                Format::Json => json_text(&json!({ "value": p.to_f64(), "rational": rational })),
                Format::Csv => format!("value,rational\n{},{}\n", p.to_f64(), rational.unwrap_or_default()),
                Format::Text => format!("{}\n", format_decimal(p.to_f64())),
            });
        }
    };
    Ok(detection(&r, format))
}

fn asymptotic(which: AsymptoticCmd, format: Format) -> Result<String, Failure> {
    let (name, v) = match which {
        AsymptoticCmd::Phi1 { delta } => ("phi1", phi1(delta)?),
        AsymptoticCmd::Phi2 { delta, k } => ("phi2", phi2(delta, k)?),
        AsymptoticCmd::Phi3 { delta } => ("phi3", phi3(delta)?),
    };
    Ok(match format {
        Format::Json => json_text(&json!({ "limit": name, "value": v })),
        Format::Csv => format!("limit,value\n{name},{v}\n"),
        Format::Text => format!("{}\n", format_decimal(v)),
    })
}

fn reports_csv(reports: &[rumor_core::ExperimentReport]) -> Result<String, Failure> {
    let mut out = Vec::new();
    write_csv(&mut out, reports)?;
    Ok(String::from_utf8(out).expect("csv is utf-8"))
}

fn experiment(a: ExperimentArgs, format: Format) -> Result<String, Failure> {
    let scenario = match (a.scenario, a.k, a.d) {
        (ScenarioArg::AllSuspects, None, None) => ExperimentScenario::AllSuspects,
        (ScenarioArg::ConnectedK, Some(k), None) => ExperimentScenario::ConnectedK { k },
        (ScenarioArg::TwoAtD, None, Some(d)) => ExperimentScenario::TwoAtD { d },
        (ScenarioArg::AllSuspects, ..) => return Err(usage("all-suspects takes neither --k nor --d")),
        (ScenarioArg::ConnectedK, ..) => return Err(usage("connected-k takes --k and not --d")),
        (ScenarioArg::TwoAtD, ..) => return Err(usage("two-at-d takes --d and not --k")),
    };
    let cfg = ExperimentConfig {
        scenario,
        delta: a.delta,
        n: a.n,
        trials: a.trials,
        seed: a.seed,
        backend: a.backend.into(),
    };
    let r = run_experiment(&cfg)?;
    Ok(match format {
        Format::Json => json_text(&r),
        Format::Csv => reports_csv(std::slice::from_ref(&r))?,
        Format::Text => {
            let mut s = format!(
                "{} delta={} n={} trials={} seed={}\nempirical_pc {} (95% CI {} to {})\n",
                scenario.label(),
                cfg.delta,
                cfg.n,
                cfg.trials,
                cfg.seed,
                format_decimal(r.empirical_pc),
                format_decimal(r.ci_low),
                format_decimal(r.ci_high)
            );
            if let Some(e) = &r.exact_pc {
                writeln!(s, "exact_pc {} ({})", format_decimal(e.value.to_f64()), e.method.label()).unwrap();
            }
            if let Some(v) = r.asymptotic_pc {
                writeln!(s, "asymptotic_pc {}", format_decimal(v)).unwrap();
            }
            s
        }
    })
}

fn figure(a: FigureArgs, format: Format) -> Result<String, Failure> {
    let fig: Figure = a.figure.parse()?;
    let overrides = SweepOverrides {
        n: a.n,
        trials: a.trials,
        seed: Some(a.seed),
        backend: a.backend.map(Into::into),
        deltas: a.deltas,
        ks: a.ks,
        ds: a.ds,
    };
    let data = figure_sweep(fig, &overrides)?;
    let csv = reports_csv(&data.rows)?;
    if let Some(dir) = &a.out {
        let io = |e: std::io::Error| Failure { code: 4, msg: format!("cannot write to {}: {e}", dir.display()) };
        std::fs::create_dir_all(dir).map_err(io)?;
        std::fs::write(dir.join(format!("{}.csv", a.figure)), &csv).map_err(io)?;
        std::fs::write(dir.join(format!("{}.meta.json", a.figure)), json_text(&data.metadata)).map_err(io)?;
    }
    Ok(match format {
        Format::Json => json_text(&data),
        Format::Csv | Format::Text => csv,
    })
}

fn errata(n_min: u32, n_max: u32, d_max: u32, format: Format) -> Result<String, Failure> {
    if n_min > n_max || d_max == 0 {
        return Err(usage("empty audit range"));
    }
    let rows = errata_audit(n_min..=n_max, 1..=d_max)?;
    Ok(match format {
        Format::Json => json_text(&rows),
        Format::Csv | Format::Text => {
            let mut s = String::from(
                "n,d,enumeration_pc,expression,reads_as_pc,reads_as_pe,corrected_matches,mass_conserved\n",
            );
            for r in &rows {
                writeln!(
                    s,
                    "{},{},{},{},{},{},{},{}",
                    r.n,
                    r.d,
                    r.enumeration_pc,
                    r.expression,
                    r.reads_as_pc,
                    r.reads_as_pe,
                    r.corrected_matches,
                    r.mass_conserved
                )
                .unwrap();
            }
            s
        }
    })
}

fn run(cli: Cli) -> Result<String, Failure> {
    let f = cli.format;
    match cli.command {
        Command::Simulate(a) => simulate(a, f),
        Command::Estimate(a) => estimate(a, f),
        Command::Centrality { snapshot } => centrality(&snapshot, f),
        Command::Exact { which } => exact(which, f),
        Command::Asymptotic { which } => asymptotic(which, f),
        Command::Experiment(a) => experiment(a, f),
        Command::Figure(a) => figure(a, f),
        Command::Errata { n_min, n_max, d_max } => errata(n_min, n_max, d_max, f),
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(out) => {
            print!("{out}");
            ExitCode::SUCCESS
        }
        Err(f) => {
            eprintln!("error: {}", f.msg);
            ExitCode::from(f.code)
        }
    }
}
