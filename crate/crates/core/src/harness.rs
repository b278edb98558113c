//! Monte Carlo experiments on regular trees, compared against the exact and
//! limiting detection probabilities, plus the figure sweeps built on them.

use std::collections::BTreeSet;

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::estimator::{make_suspects_connected, make_suspects_two, map_estimate, SuspectSet};
use crate::exactprob::{
    pc_all_suspects, pc_connected, pc_two_suspects, phi1, phi2, two_suspect_limit, DetectionResult,
};
use crate::probability::Arithmetic;
use crate::spread::{simulate_with_rng, trial_rng, Backend};
use crate::topology::{regular_ball_size, regular_tree, Graph, NodeId, Snapshot};

/// Two-sided 95% normal quantile.
pub const Z95: f64 = 1.959963984540054;

/// Desk-scale defaults for the figure sweeps. The published figures use
/// `n = 1000` and do not state their trial counts.
pub const FIGURE_DEFAULT_N: u32 = 500;
pub const FIGURE_DEFAULT_TRIALS: u64 = 2000;
pub const FIGURE_DEFAULT_SEED: u64 = 20_240_601;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case", tag = "scenario")]
pub enum ExperimentScenario {
    AllSuspects,
    ConnectedK { k: u64 },
    TwoAtD { d: u32 },
}

impl ExperimentScenario {
    pub fn label(self) -> &'static str {
        match self {
            ExperimentScenario::AllSuspects => "all-suspects",
            ExperimentScenario::ConnectedK { .. } => "connected-k",
            ExperimentScenario::TwoAtD { .. } => "two-at-d",
        }
    }

    pub fn k(self) -> Option<u64> {
        match self {
            ExperimentScenario::ConnectedK { k } => Some(k),
            _ => None,
        }
    }

    pub fn d(self) -> Option<u32> {
        match self {
            ExperimentScenario::TwoAtD { d } => Some(d),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    #[serde(flatten)]
    pub scenario: ExperimentScenario,
    pub delta: u32,
    pub n: u32,
    pub trials: u64,
    pub seed: u64,
    #[serde(default)]
    pub backend: Backend,
}

impl ExperimentConfig {
    pub fn validate(&self) -> Result<()> {
        if self.delta < 2 {
            return Err(Error::Domain(format!("delta must be at least 2, got {}", self.delta)));
        }
        if self.n == 0 {
            return Err(Error::Argument("n must be at least 1".into()));
        }
        if self.trials == 0 {
            return Err(Error::Argument("trials must be at least 1".into()));
        }
        match self.scenario {
            ExperimentScenario::ConnectedK { k: 0 } => Err(Error::Config("connected-k needs k >= 1".into())),
            ExperimentScenario::TwoAtD { d: 0 } => Err(Error::Config("two-at-d needs d >= 1".into())),
            _ => Ok(()),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ExperimentReport {
    pub config: ExperimentConfig,
    pub successes: u64,
    /// Trials whose estimate was a fair coin flip between tied suspects.
    pub ties: u64,
    pub empirical_pc: f64,
    pub ci_low: f64,
    pub ci_high: f64,
    pub exact_pc: Option<DetectionResult>,
    pub asymptotic_pc: Option<f64>,
}

/// One CSV record; the column order is part of the output contract.
#[derive(Debug, Clone, Serialize)]
pub struct CsvRow {
    pub scenario: &'static str,
    pub delta: u32,
    pub n: u32,
    pub k: Option<u64>,
    pub d: Option<u32>,
    pub trials: u64,
    pub seed: u64,
    pub empirical_pc: f64,
    pub ci_low: f64,
    pub ci_high: f64,
    pub exact_pc: Option<f64>,
    pub exact_method: Option<&'static str>,
    pub asymptotic_pc: Option<f64>,
}

pub const CSV_COLUMNS: [&str; 13] = [
    "scenario",
    "delta",
    "n",
    "k",
    "d",
    "trials",
    "seed",
    "empirical_pc",
    "ci_low",
    "ci_high",
    "exact_pc",
    "exact_method",
    "asymptotic_pc",
];

impl ExperimentReport {
    pub fn csv_row(&self) -> CsvRow {
        let c = &self.config;
        CsvRow {
            scenario: c.scenario.label(),
            delta: c.delta,
            n: c.n,
            k: c.scenario.k(),
            d: c.scenario.d(),
            trials: c.trials,
            seed: c.seed,
            empirical_pc: self.empirical_pc,
            ci_low: self.ci_low,
            ci_high: self.ci_high,
            exact_pc: self.exact_pc.as_ref().map(|r| r.value.to_f64()),
            exact_method: self.exact_pc.as_ref().map(|r| r.method.label()),
            asymptotic_pc: self.asymptotic_pc,
        }
    }
}

/// Writes reports as CSV with the fixed header.
pub fn write_csv<W: std::io::Write>(out: W, reports: &[ExperimentReport]) -> Result<()> {
    let io = |e: csv::Error| Error::Validation(format!("csv output failed: {e}"));
    let mut w = csv::WriterBuilder::new().has_headers(false).from_writer(out);
    w.write_record(CSV_COLUMNS).map_err(io)?;
    for r in reports {
        w.serialize(r.csv_row()).map_err(io)?;
    }
    w.flush().map_err(|e| Error::Validation(format!("csv output failed: {e}")))
}

/// Wilson score interval for `successes` out of `trials` at quantile `z`.
pub fn wilson_interval(successes: u64, trials: u64, z: f64) -> (f64, f64) {
    if trials == 0 {
        return (0.0, 1.0);
    }
    let t = trials as f64;
    let p = successes as f64 / t;
    let z2 = z * z;
    let denom = 1.0 + z2 / t;
    let center = (p + z2 / (2.0 * t)) / denom;
    let half = z / denom * (p * (1.0 - p) / t + z2 / (4.0 * t * t)).sqrt();
    ((center - half).max(0.0).min(p), (center + half).min(1.0).max(p))
}

/// The tree and suspect set for one experiment. All-suspects runs keep the
/// suspect set implicit: it is whatever ends up infected.
struct Setup {
    graph: Graph,
    suspects: Option<SuspectSet>,
    sources: Vec<NodeId>,
}

fn setup(cfg: &ExperimentConfig) -> Result<Setup> {
    match cfg.scenario {
        ExperimentScenario::AllSuspects => {
            Ok(Setup { graph: regular_tree(cfg.delta, 0)?, suspects: None, sources: vec![NodeId(0)] })
        }
        ExperimentScenario::ConnectedK { k } => {
            let k = usize::try_from(k).map_err(|_| Error::Capacity(format!("k = {k} is too large")))?;
            let mut radius = 0;
            loop {
                match regular_ball_size(cfg.delta, radius) {
                    Some(size) if size >= k => break,
                    Some(_) => radius += 1,
                    None => return Err(Error::Capacity(format!("k = {k} is too large"))),
                }
            }
            let graph = regular_tree(cfg.delta, radius)?;
            let s = make_suspects_connected(&graph, NodeId(0), k)?;
            let sources = s.members().iter().copied().collect();
            Ok(Setup { graph, suspects: Some(s), sources })
        }
        ExperimentScenario::TwoAtD { d } => {
            if cfg.delta == 2 && d > 1 << 20 {
                return Err(Error::Capacity(format!("d = {d} is too large")));
            }
            let graph = regular_tree(cfg.delta, d)?;
            let dist = graph.distances_from(NodeId(0));
            let far = dist
                .iter()
                .filter(|&(_, &r)| r == d)
                .map(|(&v, _)| v)
                .min()
                .ok_or_else(|| Error::Capacity(format!("no node at distance {d}")))?;
            let s = make_suspects_two(&graph, NodeId(0), far)?;
            Ok(Setup { graph, suspects: Some(s), sources: vec![NodeId(0), far] })
        }
    }
}

struct Outcome {
    correct: bool,
    tie: bool,
}

fn run_trial(cfg: &ExperimentConfig, setup: &Setup, index: u64) -> Result<Outcome> {
    let mut rng = trial_rng(cfg.seed, index);
    let source = setup.sources[rng.random_range(0..setup.sources.len())];
    let spread = simulate_with_rng(&setup.graph, source, cfg.n as usize, cfg.backend, &mut rng)?;
    let tie_seed: u64 = rng.random();
    let snap: &Snapshot = &spread.snapshot;
    let all;
    let suspects = match &setup.suspects {
        Some(s) => s,
        None => {
            all = crate::estimator::make_suspects_all(snap);
            &all
        }
    };
    let est = map_estimate(snap, suspects, tie_seed)?;
    Ok(Outcome { correct: est.chosen == source, tie: est.tie_broken })
}

/// Exact value at `n`, or `None` when the two-suspect enumeration runs out
/// of budget.
pub fn exact_reference(cfg: &ExperimentConfig) -> Result<Option<DetectionResult>> {
    let arith = Arithmetic::Auto;
    match cfg.scenario {
        ExperimentScenario::AllSuspects => pc_all_suspects(cfg.delta, cfg.n, arith).map(Some),
        ExperimentScenario::ConnectedK { k } => pc_connected(cfg.delta, k, cfg.n, arith).map(Some),
        ExperimentScenario::TwoAtD { d } => match pc_two_suspects(cfg.delta, d, cfg.n, arith) {
            Ok(r) => Ok(Some(r)),
            Err(Error::Budget { .. }) => Ok(None),
            Err(e) => Err(e),
        },
    }
}

/// Limit as `n → ∞` where one is known.
pub fn asymptotic_reference(scenario: ExperimentScenario, delta: u32) -> Option<f64> {
    match (scenario, delta) {
        (ExperimentScenario::AllSuspects, 2) => Some(0.0),
        (ExperimentScenario::AllSuspects, _) => phi1(delta).ok(),
        (ExperimentScenario::ConnectedK { k }, 2) => Some(1.0 / k as f64),
        (ExperimentScenario::ConnectedK { k }, _) => phi2(delta, k).ok(),
        (ExperimentScenario::TwoAtD { d }, _) => two_suspect_limit(delta, d),
    }
}

/// Runs `cfg.trials` independent trials in parallel. Trial `i` draws from
/// stream `i` of the seed, so the report does not depend on scheduling.
pub fn run_experiment(cfg: &ExperimentConfig) -> Result<ExperimentReport> {
    cfg.validate()?;
    let setup = setup(cfg)?;
    let outcomes: Vec<Outcome> =
        (0..cfg.trials).into_par_iter().map(|i| run_trial(cfg, &setup, i)).collect::<Result<_>>()?;
    let successes = outcomes.iter().filter(|o| o.correct).count() as u64;
    let ties = outcomes.iter().filter(|o| o.tie).count() as u64;
    let (ci_low, ci_high) = wilson_interval(successes, cfg.trials, Z95);
    Ok(ExperimentReport {
        config: *cfg,
        successes,
        ties,
        empirical_pc: successes as f64 / cfg.trials as f64,
        ci_low,
        ci_high,
        exact_pc: exact_reference(cfg)?,
        asymptotic_pc: asymptotic_reference(cfg.scenario, cfg.delta),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Figure {
    Fig7,
    Fig8,
    Fig9,
    Fig10,
}

impl std::str::FromStr for Figure {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "fig7" => Ok(Figure::Fig7),
            "fig8" => Ok(Figure::Fig8),
            "fig9" => Ok(Figure::Fig9),
            "fig10" => Ok(Figure::Fig10),
            _ => Err(Error::Argument(format!("unknown figure {s:?}; expected fig7, fig8, fig9 or fig10"))),
        }
    }
}

pub const FIGURE_DELTAS: [u32; 13] = [2, 3, 4, 5, 6, 8, 10, 12, 16, 20, 30, 40, 50];
pub const FIGURE8_KS: [u64; 3] = [2, 5, 10];
pub const FIGURE9_DS: [u32; 3] = [1, 2, 3];
pub const FIGURE10_KS: [u64; 11] = [2, 5, 10, 20, 50, 100, 200, 500, 1000, 2000, 4000];
pub const FIGURE10_DELTA: u32 = 3;

/// Optional replacements for a sweep's defaults.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct SweepOverrides {
    pub n: Option<u32>,
    pub trials: Option<u64>,
    pub seed: Option<u64>,
    pub backend: Option<Backend>,
    /// Degrees swept for fig7 to fig9, or the single degree of fig10.
    pub deltas: Option<Vec<u32>>,
    /// Series of fig8, or the swept values of fig10.
    pub ks: Option<Vec<u64>>,
    /// Series of fig9.
    pub ds: Option<Vec<u32>>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepMetadata {
    pub figure: Figure,
    pub sweep_variable: &'static str,
    pub n: u32,
    pub trials: u64,
    pub seed: u64,
    pub backend: Backend,
    /// Whether `n` and `trials` are the built-in desk-scale choices rather
    /// than caller overrides.
    pub default_scale: bool,
    pub note: &'static str,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FigureData {
    pub metadata: SweepMetadata,
    pub rows: Vec<ExperimentReport>,
}

const SCALE_NOTE: &str =
    "desk-scale defaults n=500, trials=2000 per point; published figures use n=1000 with unstated trial counts";

/// The configurations swept by `figure`, in output order.
pub fn sweep_configs(figure: Figure, o: &SweepOverrides) -> Result<Vec<ExperimentConfig>> {
    let n = o.n.unwrap_or(FIGURE_DEFAULT_N);
    let trials = o.trials.unwrap_or(FIGURE_DEFAULT_TRIALS);
    let seed = o.seed.unwrap_or(FIGURE_DEFAULT_SEED);
    let backend = o.backend.unwrap_or_default();
    let deltas = o.deltas.clone().unwrap_or_else(|| FIGURE_DELTAS.to_vec());
    let base = |scenario, delta| ExperimentConfig { scenario, delta, n, trials, seed, backend };
    let cfgs: Vec<ExperimentConfig> = match figure {
        Figure::Fig7 => deltas.iter().map(|&d| base(ExperimentScenario::AllSuspects, d)).collect(),
        Figure::Fig8 => {
            let ks = o.ks.clone().unwrap_or_else(|| FIGURE8_KS.to_vec());
            ks.iter()
                .flat_map(|&k| deltas.iter().map(move |&d| (k, d)))
                .map(|(k, d)| base(ExperimentScenario::ConnectedK { k }, d))
                .collect()
        }
        Figure::Fig9 => {
            let ds = o.ds.clone().unwrap_or_else(|| FIGURE9_DS.to_vec());
            ds.iter()
                .flat_map(|&dist| deltas.iter().map(move |&d| (dist, d)))
                .map(|(dist, d)| base(ExperimentScenario::TwoAtD { d: dist }, d))
                .collect()
        }
        Figure::Fig10 => {
            let delta = match o.deltas.as_deref() {
                None => FIGURE10_DELTA,
                Some([d]) => *d,
                Some(_) => return Err(Error::Argument("fig10 sweeps k at a single delta".into())),
            };
            let ks = o.ks.clone().unwrap_or_else(|| FIGURE10_KS.to_vec());
            ks.iter().map(|&k| base(ExperimentScenario::ConnectedK { k }, delta)).collect()
        }
    };
    if cfgs.is_empty() {
        return Err(Error::Argument("sweep is empty".into()));
    }
    let distinct: BTreeSet<_> = cfgs.iter().map(|c| (c.delta, c.scenario.k(), c.scenario.d())).collect();
    if distinct.len() != cfgs.len() {
        return Err(Error::Argument("sweep values repeat".into()));
    }
    cfgs.iter().try_for_each(ExperimentConfig::validate)?;
    Ok(cfgs)
}

pub fn figure_sweep(figure: Figure, overrides: &SweepOverrides) -> Result<FigureData> {
    let cfgs = sweep_configs(figure, overrides)?;
    let rows = cfgs.iter().map(run_experiment).collect::<Result<Vec<_>>>()?;
    let first = cfgs[0];
    Ok(FigureData {
        metadata: SweepMetadata {
            figure,
            sweep_variable: if figure == Figure::Fig10 { "k" } else { "delta" },
            n: first.n,
            trials: first.trials,
            seed: first.seed,
            backend: first.backend,
            default_scale: overrides.n.is_none() && overrides.trials.is_none(),
            note: SCALE_NOTE,
        },
        rows,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cfg(scenario: ExperimentScenario, delta: u32, n: u32, trials: u64) -> ExperimentConfig {
        ExperimentConfig { scenario, delta, n, trials, seed: 3, backend: Backend::UniformBoundary }
    }

    #[test]
    fn wilson_known_values() {
        let (lo, hi) = wilson_interval(50, 100, Z95);
        assert!((lo - 0.403_831).abs() < 1e-6 && (hi - 0.596_169).abs() < 1e-6);
        let (lo, hi) = wilson_interval(0, 10, Z95);
        assert_eq!(lo, 0.0);
        assert!((hi - 0.277_533).abs() < 1e-6);
        let (lo, hi) = wilson_interval(10, 10, Z95);
        assert!((lo - 0.722_467).abs() < 1e-6);
        assert_eq!(hi, 1.0);
    }

    #[test]
    fn tiny_cases_are_certain() {
        let r = run_experiment(&cfg(ExperimentScenario::AllSuspects, 3, 1, 20)).unwrap();
        assert_eq!(r.successes, 20);
        let r = run_experiment(&cfg(ExperimentScenario::ConnectedK { k: 1 }, 4, 30, 20)).unwrap();
        assert_eq!(r.empirical_pc, 1.0);
        assert!(r.ci_low <= r.empirical_pc && r.empirical_pc <= r.ci_high);
    }

    #[test]
    fn reproducible() {
        let c = cfg(ExperimentScenario::TwoAtD { d: 2 }, 3, 40, 200);
        let a = serde_json::to_string(&run_experiment(&c).unwrap()).unwrap();
        let b = serde_json::to_string(&run_experiment(&c).unwrap()).unwrap();
        assert_eq!(a, b);
        let pool = rayon::ThreadPoolBuilder::new().num_threads(1).build().unwrap();
        let c1 = pool.install(|| serde_json::to_string(&run_experiment(&c).unwrap()).unwrap());
        assert_eq!(a, c1);
    }

    #[test]
    fn invalid_configs() {
        let e = run_experiment(&cfg(ExperimentScenario::ConnectedK { k: 0 }, 3, 10, 1)).unwrap_err();
        assert!(matches!(e, Error::Config(_)));
        assert!(run_experiment(&cfg(ExperimentScenario::AllSuspects, 3, 10, 0)).is_err());
        assert!(run_experiment(&cfg(ExperimentScenario::AllSuspects, 1, 10, 5)).is_err());
        assert!(matches!("fig11".parse::<Figure>(), Err(Error::Argument(_))));
    }

    #[test]
    fn csv_header_contract() {
        let r = run_experiment(&cfg(ExperimentScenario::ConnectedK { k: 2 }, 3, 10, 5)).unwrap();
        let mut out = Vec::new();
        write_csv(&mut out, &[r]).unwrap();
        let text = String::from_utf8(out).unwrap();
        let mut lines = text.lines();
        assert_eq!(lines.next().unwrap(), CSV_COLUMNS.join(","));
        let row: Vec<&str> = lines.next().unwrap().split(',').collect();
        assert_eq!(row.len(), 13);
        assert_eq!((row[0], row[3], row[4], row[11]), ("connected-k", "2", "", "closed-form"));
    }

    #[test]
    fn sweep_shapes() {
        let o = SweepOverrides::default();
        assert_eq!(sweep_configs(Figure::Fig7, &o).unwrap().len(), 13);
        assert_eq!(sweep_configs(Figure::Fig8, &o).unwrap().len(), 39);
        assert_eq!(sweep_configs(Figure::Fig10, &o).unwrap().last().unwrap().scenario.k(), Some(4000));
        let o = SweepOverrides { deltas: Some(vec![3, 4]), ..Default::default() };
        assert!(sweep_configs(Figure::Fig10, &o).is_err());
        let o = SweepOverrides { n: Some(20), trials: Some(10), deltas: Some(vec![3, 6]), ..Default::default() };
        let data = figure_sweep(Figure::Fig7, &o).unwrap();
        assert_eq!(data.rows.len(), 2);
        assert!(!data.metadata.default_scale);
    }
}
