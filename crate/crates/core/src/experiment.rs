//! Runs every (scenario, seed) pair of a config and writes the per-run
//! series, the seed-averaged summary and a manifest.

use std::collections::HashMap;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::channel::{uniform_range_probabilities, LinkFailureModel};
use crate::config::{ExperimentKind, RunConfig, Scenario};
use crate::error::{Error, Result};
use crate::graph::NetworkGraph;
use crate::metrics::{regret_series, solve_hindsight, violation_series, HindsightBenchmark, RunRecord};
use crate::problems::{
    CostStream, FeasibleSet, LogisticStream, Problem, ProblemConstants, QcqpStream,
};
use crate::rng::{stream_rng, Stream};
use crate::solver::{coupling_constants, derive_params, run, CouplingConstants, Feedback, SolverParams};

/// Overrides the configured output directory of the command-line runner.
pub const OUTPUT_DIR_ENV: &str = "SADDLE_OCO_OUTPUT_DIR";

pub const SERIES_HEADER: &str =
    "t,cum_regret,rel_avg_regret,mean_rel_avg_violation,max_cum_violation,delivered_frac";

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SeriesRow {
    pub t: usize,
    pub cum_regret: f64,
    pub rel_avg_regret: f64,
    pub mean_rel_avg_violation: f64,
    pub max_cum_violation: f64,
    pub delivered_frac: f64,
}

impl SeriesRow {
    fn write_fields(&self, out: &mut String) {
        write!(
            out,
            "{},{},{},{},{},{}",
            self.t,
            self.cum_regret,
            self.rel_avg_regret,
            self.mean_rel_avg_violation,
            self.max_cum_violation,
            self.delivered_frac
        )
        .expect("writing to a string");
    }
}

/// Per-round rows of one run plus the zero-guard flags of its relative curves.
#[derive(Debug, Clone, PartialEq)]
pub struct Series {
    pub rows: Vec<SeriesRow>,
    pub regret_normalized: bool,
    pub violation_normalized: bool,
}

impl Series {
    pub fn last(&self) -> &SeriesRow {
        self.rows.last().expect("a run has at least one round")
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::with_capacity(64 * (self.rows.len() + 1));
        out.push_str(SERIES_HEADER);
        out.push('\n');
        for row in &self.rows {
            row.write_fields(&mut out);
            out.push('\n');
        }
        out
    }
}

pub fn series(record: &RunRecord, benchmark: &HindsightBenchmark) -> Result<Series> {
    let regret = regret_series(record, benchmark)?;
    let violation = violation_series(record);
    let rows = record
        .rounds
        .iter()
        .enumerate()
        .map(|(k, round)| SeriesRow {
            t: round.t,
            cum_regret: regret.cumulative[k],
            rel_avg_regret: regret.relative[k],
            mean_rel_avg_violation: violation.mean_relative[k],
            max_cum_violation: violation.max_cumulative[k],
            delivered_frac: round.delivered_frac,
        })
        .collect();
    Ok(Series {
        rows,
        regret_normalized: regret.normalized,
        violation_normalized: violation.mean_normalized,
    })
}

pub fn build_graph(config: &RunConfig) -> Result<NetworkGraph> {
    let graph = match &config.graph.edge_list {
        Some(path) => NetworkGraph::load(path)?,
        None => NetworkGraph::erdos_renyi(config.n, config.graph.p_edge, config.graph.seed)?,
    };
    if graph.num_agents() != config.n {
        return Err(Error::Config(vec![format!(
            "edge list has {} agents but n = {}",
            graph.num_agents(),
            config.n
        )]));
    }
    Ok(graph)
}

/// Reads lines `i j p` (receiver, sender, failure probability); `#` starts
/// a comment. Every directed pair of the graph must be listed exactly once.
pub fn parse_pair_probabilities(text: &str, graph: &NetworkGraph) -> Result<Vec<f64>> {
    let mut probs = vec![None; graph.num_directed_pairs()];
    for (lineno, line) in text.lines().enumerate() {
        let line = line.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let bad = || Error::InvalidArgument(format!("line {}: expected `i j p`, got {line:?}", lineno + 1));
        let fields: Vec<&str> = line.split_whitespace().collect();
        let [i, j, p] = fields[..] else { return Err(bad()) };
        let (i, j): (usize, usize) = (i.parse().map_err(|_| bad())?, j.parse().map_err(|_| bad())?);
        let p: f64 = p.parse().map_err(|_| bad())?;
        let k = graph.pair_index(i, j).ok_or_else(|| {
            Error::InvalidArgument(format!("line {}: ({i}, {j}) is not a directed pair of the graph", lineno + 1))
        })?;
        if probs[k].replace(p).is_some() {
            return Err(Error::InvalidArgument(format!("line {}: pair ({i}, {j}) listed twice", lineno + 1)));
        }
    }
    graph
        .directed_pairs()
        .into_iter()
        .zip(probs)
        .map(|((i, j), p)| p.ok_or(Error::MissingProbability(i, j)))
        .collect()
}

pub fn scenario_probabilities(graph: &NetworkGraph, scenario: &Scenario, seed: u64) -> Result<Vec<f64>> {
    match scenario {
        Scenario::Perfect { .. } => Ok(vec![0.0; graph.num_directed_pairs()]),
        Scenario::UniformRange { lo, hi, .. } => Ok(uniform_range_probabilities(graph, *lo, *hi, seed)),
        Scenario::PerPairFile { path, .. } => {
            let text = std::fs::read_to_string(path)?;
            parse_pair_probabilities(&text, graph)
        }
    }
}

pub fn feasible_set(config: &RunConfig) -> Result<FeasibleSet> {
    FeasibleSet::new(config.radius(), config.d)
}

pub fn qcqp_problem(config: &RunConfig, graph: &NetworkGraph, seed: u64) -> Result<Problem<QcqpStream>> {
    QcqpStream::init(graph, feasible_set(config)?, config.qcqp.clone(), seed)
}

pub fn logistic_problem(config: &RunConfig, graph: &NetworkGraph, seed: u64) -> Result<Problem<LogisticStream>> {
    LogisticStream::init(graph, feasible_set(config)?, config.logistic.clone(), seed)
}

/// Configured constants, with the missing ones estimated on the first
/// round of the instance.
pub fn problem_constants<S: CostStream>(config: &RunConfig, mut problem: Problem<S>, seed: u64) -> ProblemConstants {
    let c = &config.constants;
    let estimated = if c.g.is_some() && c.g_tilde.is_some() && c.l.is_some() && c.c.is_some() {
        None
    } else {
        let costs = problem.stream.next_round();
        let mut rng = stream_rng(seed, Stream::Constants);
        Some(ProblemConstants::estimate(&costs, &problem.constraints, &problem.set, c.estimate_samples, &mut rng))
    };
    let pick = |given: Option<f64>, f: fn(&ProblemConstants) -> f64| {
        given.unwrap_or_else(|| f(estimated.as_ref().expect("estimated when missing")))
    };
    ProblemConstants {
        g: pick(c.g, |k| k.g),
        g_tilde: pick(c.g_tilde, |k| k.g_tilde),
        l: pick(c.l, |k| k.l),
        c: pick(c.c, |k| k.c),
        radius: problem.set.radius(),
    }
}

/// The benchmark only depends on the revealed costs, which do not depend
/// on the decisions, so one solve per seed serves every scenario.
pub fn seed_benchmark<S: CostStream>(
    config: &RunConfig,
    graph: &NetworkGraph,
    mut problem: Problem<S>,
) -> Result<HindsightBenchmark> {
    let history: Vec<Vec<S::Cost>> = (0..config.horizon).map(|_| problem.stream.next_round()).collect();
    solve_hindsight(&history, graph, &problem.constraints, &problem.set, &config.benchmark)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TheoryReport {
    pub coupling: CouplingConstants,
    pub min_horizon: usize,
    /// `None` when the horizon is shorter than `min_horizon`.
    pub delta_interval: Option<(f64, f64)>,
}

pub fn theory_report(
    config: &RunConfig,
    graph: &NetworkGraph,
    constants: &ProblemConstants,
    probs: &[f64],
) -> Result<TheoryReport> {
    let feedback = config.solver.feedback;
    let coupling = coupling_constants(constants, graph, probs, config.solver.beta, feedback)?;
    let min_horizon = coupling.min_horizon(config.solver.a);
    let delta_interval =
        match derive_params(constants, graph, probs, config.horizon, config.solver.a, config.solver.beta, feedback) {
            Ok(d) => Some(d.delta_interval),
            Err(Error::HorizonTooShort { .. }) => None,
            Err(e) => return Err(e),
        };
    Ok(TheoryReport { coupling, min_horizon, delta_interval })
}

/// Solver parameters of one run; theorem mode fails on a short horizon.
pub fn solver_params(config: &RunConfig, report: &TheoryReport) -> Result<SolverParams> {
    let s = &config.solver;
    let delta = if s.theorem_mode {
        match report.delta_interval {
            Some((lo, _)) => lo,
            None => {
                return Err(Error::HorizonTooShort {
                    horizon: config.horizon,
                    bound: 8.0 * s.a * s.a * report.coupling.omega,
                    min_horizon: report.min_horizon,
                })
            }
        }
    } else {
        s.delta
    };
    let r = config.interior_radius();
    match (s.feedback, s.zeta, s.alpha) {
        (Feedback::FullInfo, _, _) => SolverParams::full_info(config.horizon, s.a, delta),
        (Feedback::TwoPointBandit, Some(zeta), Some(alpha)) => {
            SolverParams::bandit_with(config.horizon, s.a, delta, zeta, alpha, r)
        }
        (Feedback::TwoPointBandit, _, _) => SolverParams::bandit(config.horizon, s.a, delta, r),
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchmarkSummary {
    pub aggregate_cost: f64,
    pub max_residual: f64,
    pub stationarity: f64,
    pub complementarity: f64,
    pub outer_iterations: usize,
}

impl From<&HindsightBenchmark> for BenchmarkSummary {
    fn from(b: &HindsightBenchmark) -> Self {
        Self {
            aggregate_cost: b.aggregate_cost,
            max_residual: b.max_residual,
            stationarity: b.stationarity,
            complementarity: b.complementarity,
            outer_iterations: b.outer_iterations,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SeedEntry {
    pub seed: u64,
    pub constants: ProblemConstants,
    pub benchmark: BenchmarkSummary,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunEntry {
    pub scenario: String,
    pub seed: u64,
    pub series_file: String,
    pub max_failure_probability: f64,
    pub theory: TheoryReport,
    pub params: SolverParams,
    pub regret_normalized: bool,
    pub violation_normalized: bool,
    pub final_rel_avg_regret: f64,
    pub final_mean_rel_avg_violation: f64,
}

/// One finished run held in memory.
#[derive(Debug, Clone)]
pub struct RunResult {
    pub entry: RunEntry,
    pub series: Series,
}

#[derive(Debug, Clone)]
pub struct ExperimentResult {
    pub graph: NetworkGraph,
    pub seeds: Vec<SeedEntry>,
    /// Scenario-major, seeds in config order.
    pub runs: Vec<RunResult>,
}

impl ExperimentResult {
    pub fn scenario_runs<'a>(&'a self, label: &'a str) -> impl Iterator<Item = &'a RunResult> + 'a {
        self.runs.iter().filter(move |r| r.entry.scenario == label)
    }

    /// Seed average of a final-round quantity for one scenario.
    pub fn final_mean(&self, label: &str, f: impl Fn(&SeriesRow) -> f64) -> f64 {
        let values: Vec<f64> = self.scenario_runs(label).map(|r| f(r.series.last())).collect();
        values.iter().sum::<f64>() / values.len() as f64
    }
}

pub fn series_file_name(scenario: &str, seed: u64) -> String {
    format!("series_{scenario}_{seed}.csv")
}

/// Plays every (scenario, seed) pair without touching the file system.
pub fn run_scenarios(config: &RunConfig) -> Result<ExperimentResult> {
    config.validate()?;
    let graph = build_graph(config)?;
    match config.experiment {
        ExperimentKind::Qcqp => execute(config, graph, qcqp_problem),
        ExperimentKind::Logistic => execute(config, graph, logistic_problem),
    }
}

fn execute<S, F>(config: &RunConfig, graph: NetworkGraph, make: F) -> Result<ExperimentResult>
where
    S: CostStream,
    F: Fn(&RunConfig, &NetworkGraph, u64) -> Result<Problem<S>> + Sync,
{
    let seeds: Vec<(SeedEntry, HindsightBenchmark)> = config
        .seeds
        .par_iter()
        .map(|&seed| {
            let constants = problem_constants(config, make(config, &graph, seed)?, seed);
            let benchmark = seed_benchmark(config, &graph, make(config, &graph, seed)?)?;
            let entry = SeedEntry { seed, constants, benchmark: BenchmarkSummary::from(&benchmark) };
            Ok((entry, benchmark))
        })
        .collect::<Result<_>>()?;
    let by_seed: HashMap<u64, &(SeedEntry, HindsightBenchmark)> =
        seeds.iter().map(|s| (s.0.seed, s)).collect();

    let jobs: Vec<(&Scenario, u64)> = config
        .scenarios
        .iter()
        .flat_map(|s| config.seeds.iter().map(move |&seed| (s, seed)))
        .collect();
    let runs = jobs
        .par_iter()
        .map(|&(scenario, seed)| {
            let (seed_entry, benchmark) = by_seed[&seed];
            let probs = scenario_probabilities(&graph, scenario, seed)?;
            let theory = theory_report(config, &graph, &seed_entry.constants, &probs)?;
            let params = solver_params(config, &theory)?;
            let channel = LinkFailureModel::new(&graph, probs, seed)?;
            let max_failure_probability = channel.max_probability();
            let output = run(make(config, &graph, seed)?, &graph, channel, params, seed)?;
            let series = series(&output.record, benchmark)?;
            let label = scenario.label();
            let last = *series.last();
            Ok(RunResult {
                entry: RunEntry {
                    series_file: series_file_name(&label, seed),
                    scenario: label,
                    seed,
                    max_failure_probability,
                    theory,
                    params,
                    regret_normalized: series.regret_normalized,
                    violation_normalized: series.violation_normalized,
                    final_rel_avg_regret: last.rel_avg_regret,
                    final_mean_rel_avg_violation: last.mean_rel_avg_violation,
                },
                series,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(ExperimentResult {
        graph,
        seeds: seeds.into_iter().map(|s| s.0).collect(),
        runs,
    })
}

/// `scenario,t,...` rows holding the arithmetic mean over seeds of each
/// series column.
pub fn summary_csv(config: &RunConfig, result: &ExperimentResult) -> String {
    let mut out = format!("scenario,{SERIES_HEADER}\n");
    for scenario in &config.scenarios {
        let label = scenario.label();
        let runs: Vec<&RunResult> = result.scenario_runs(&label).collect();
        let k = runs.len() as f64;
        for idx in 0..config.horizon {
            let mean = |f: fn(&SeriesRow) -> f64| runs.iter().map(|r| f(&r.series.rows[idx])).sum::<f64>() / k;
            let row = SeriesRow {
                t: idx + 1,
                cum_regret: mean(|r| r.cum_regret),
                rel_avg_regret: mean(|r| r.rel_avg_regret),
                mean_rel_avg_violation: mean(|r| r.mean_rel_avg_violation),
                max_cum_violation: mean(|r| r.max_cum_violation),
                delivered_frac: mean(|r| r.delivered_frac),
            };
            out.push_str(&label);
            out.push(',');
            row.write_fields(&mut out);
            out.push('\n');
        }
    }
    out
}

pub fn config_hash(config: &RunConfig) -> String {
    let bytes = serde_json::to_vec(config).expect("config serializes");
    hex::encode(Sha256::digest(&bytes))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GraphSummary {
    pub agents: usize,
    pub edges: usize,
    pub directed_pairs: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub version: String,
    pub config_hash: String,
    pub config: RunConfig,
    pub seeds: Vec<u64>,
    pub graph: GraphSummary,
    pub per_seed: Vec<SeedEntry>,
    pub runs: Vec<RunEntry>,
    pub summary_file: String,
    pub wall_clock_seconds: f64,
}

impl Manifest {
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        Ok(serde_json::from_str(&text)?)
    }
}

/// Runs the experiment and writes `series_<scenario>_<seed>.csv`,
/// `summary.csv` and `manifest.json` into `output_dir`.
pub fn run_experiment(config: &RunConfig, output_dir: &Path) -> Result<Manifest> {
    let start = Instant::now();
    let result = run_scenarios(config)?;
    std::fs::create_dir_all(output_dir)?;
    result
        .runs
        .par_iter()
        .map(|r| std::fs::write(output_dir.join(&r.entry.series_file), r.series.to_csv()))
        .collect::<std::io::Result<()>>()?;
    let summary_file = "summary.csv".to_string();
    std::fs::write(output_dir.join(&summary_file), summary_csv(config, &result))?;

    let manifest = Manifest {
        version: env!("CARGO_PKG_VERSION").into(),
        config_hash: config_hash(config),
        config: config.clone(),
        seeds: config.seeds.clone(),
        graph: GraphSummary {
            agents: result.graph.num_agents(),
            edges: result.graph.num_edges(),
            directed_pairs: result.graph.num_directed_pairs(),
        },
        per_seed: result.seeds,
        runs: result.runs.into_iter().map(|r| r.entry).collect(),
        summary_file,
        wall_clock_seconds: start.elapsed().as_secs_f64(),
    };
    std::fs::write(output_dir.join("manifest.json"), serde_json::to_string_pretty(&manifest)? + "\n")?;
    Ok(manifest)
}

/// Output directory: the environment override if set, else the config's.
pub fn output_dir(config: &RunConfig) -> PathBuf {
    match std::env::var_os(OUTPUT_DIR_ENV) {
        Some(dir) if !dir.is_empty() => PathBuf::from(dir),
        _ => config.output_dir.clone(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::config::RunConfig;

    fn tiny(kind: ExperimentKind) -> RunConfig {
        let mut c = match kind {
            ExperimentKind::Qcqp => RunConfig::qcqp_preset(),
            ExperimentKind::Logistic => RunConfig::logistic_preset(),
        };
        c.n = 6;
        c.horizon = 40;
        c.seeds = vec![1, 2];
        c.graph.p_edge = 0.5;
        c
    }

    #[test]
    fn pair_file_round_trip() {
        let g = NetworkGraph::from_edges(3, [(0, 1), (1, 2)]).unwrap();
        let text = "# receiver sender p\n0 1 0.1\n1 0 0.2\n1 2 0.3\n2 1 0.0\n";
        assert_eq!(parse_pair_probabilities(text, &g).unwrap(), vec![0.1, 0.2, 0.3, 0.0]);
        assert!(matches!(
            parse_pair_probabilities("0 1 0.1\n1 0 0.2\n1 2 0.3\n", &g),
            Err(Error::MissingProbability(2, 1))
        ));
        assert!(parse_pair_probabilities("0 2 0.1", &g).is_err());
        assert!(parse_pair_probabilities("0 1 0.1\n0 1 0.1", &g).is_err());
        assert!(parse_pair_probabilities("0 1", &g).is_err());
    }

    #[test]
    fn csv_layout() {
        let s = Series {
            rows: vec![SeriesRow {
                t: 1,
                cum_regret: 0.5,
                rel_avg_regret: 1.0,
                mean_rel_avg_violation: 1.0,
                max_cum_violation: -0.25,
                delivered_frac: 1.0,
            }],
            regret_normalized: true,
            violation_normalized: true,
        };
        assert_eq!(s.to_csv(), format!("{SERIES_HEADER}\n1,0.5,1,1,-0.25,1\n"));
    }

    #[test]
    fn every_scenario_seed_pair_runs_and_is_deterministic() {
        for kind in [ExperimentKind::Qcqp, ExperimentKind::Logistic] {
            let c = tiny(kind);
            let a = run_scenarios(&c).unwrap();
            let b = run_scenarios(&c).unwrap();
            assert_eq!(a.runs.len(), 6);
            for (x, y) in a.runs.iter().zip(&b.runs) {
                assert_eq!(x.series.to_csv(), y.series.to_csv());
                assert_eq!(x.series.rows.len(), 40);
                assert_eq!(x.series.rows[0].rel_avg_regret, 1.0);
            }
            for r in a.scenario_runs("perfect") {
                assert!(r.series.rows.iter().all(|row| row.delivered_frac == 1.0));
            }
        }
    }

    #[test]
    fn summary_is_the_seed_mean() {
        let c = tiny(ExperimentKind::Qcqp);
        let result = run_scenarios(&c).unwrap();
        let summary = summary_csv(&c, &result);
        let lines: Vec<&str> = summary.lines().collect();
        assert_eq!(lines.len(), 1 + 3 * 40);
        let runs: Vec<&RunResult> = result.scenario_runs("p0.25").collect();
        let row = lines.iter().find(|l| l.starts_with("p0.25,7,")).unwrap();
        let expect = (runs[0].series.rows[6].cum_regret + runs[1].series.rows[6].cum_regret) / 2.0;
        assert_eq!(row.split(',').nth(2).unwrap(), format!("{expect}"));
    }

    #[test]
    fn theorem_mode_rejects_short_horizon() {
        let mut c = tiny(ExperimentKind::Qcqp);
        c.solver.theorem_mode = true;
        assert!(matches!(run_scenarios(&c), Err(Error::HorizonTooShort { .. })));
    }
}
