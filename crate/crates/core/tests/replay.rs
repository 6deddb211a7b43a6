//! Neighbor caches and violation sums re-derived from the logs of a run.

mod common;

use common::{reference_trajectory, Replay};
use saddle_oco::channel::{FlagTrace, LinkFailureModel};
use saddle_oco::graph::NetworkGraph;
use saddle_oco::metrics::violation_series;
use saddle_oco::problems::{FeasibleSet, Problem, QcqpSettings, QcqpStream};
use saddle_oco::solver::{run, SolverParams, Simulation};

fn instance(seed: u64) -> (NetworkGraph, Problem<QcqpStream>) {
    let graph = NetworkGraph::erdos_renyi(8, 0.5, seed).unwrap();
    let set = FeasibleSet::new(2f64.sqrt(), 2).unwrap();
    let problem = QcqpStream::init(&graph, set, QcqpSettings::default(), seed).unwrap();
    (graph, problem)
}

#[test]
fn cache_holds_the_last_delivered_decision() {
    let (graph, problem) = instance(3);
    let channel = LinkFailureModel::uniform_range(&graph, 0.2, 0.7, 3).unwrap();
    let params = SolverParams::full_info(300, 0.5, 1.0).unwrap();
    let mut sim = Simulation::new(&graph, problem, channel, params, 3).unwrap();
    let pairs = graph.directed_pairs();
    let mut log = Vec::new();
    while !sim.is_finished() {
        log.push(sim.states().iter().map(|s| s.x.clone()).collect::<Vec<_>>());
        sim.step().unwrap();
        let t = sim.round();
        for (k, &(_, j)) in pairs.iter().enumerate() {
            let s = sim.cache().last_success_round(k);
            assert!(s >= 1 && s <= t);
            assert_eq!(sim.cache().get(k), &log[s - 1][j], "pair {k} at round {t}");
        }
    }
}

#[test]
fn trajectory_matches_a_replay_of_the_delivery_trace() {
    let (graph, problem) = instance(11);
    let radius = problem.set.radius();
    let constraints = problem.constraints.clone();
    let channel = LinkFailureModel::uniform_range(&graph, 0.0, 0.8, 11).unwrap();
    let params = SolverParams::full_info(250, 0.8, 1.0).unwrap();
    let out = run(problem, &graph, channel, params, 11).unwrap();

    // the text form of the trace is what gets replayed
    let trace = FlagTrace::from_text(&out.trace.to_text()).unwrap();
    assert_eq!(trace, out.trace);
    assert!(trace.rounds[0].iter().all(|&f| f));
    assert!(trace.rounds.iter().flatten().any(|&f| !f));

    let x1 = out.record.rounds[0].decisions.clone();
    let reference = reference_trajectory(
        &graph, &constraints, radius, params.eta, params.delta, x1, &out.history, Some(&trace),
    );
    for (round, (x, _)) in out.record.rounds.iter().zip(&reference) {
        assert_eq!(&round.decisions, x, "round {}", round.t);
    }
    let (_, final_lambda) = reference.last().unwrap();
    for (state, lam) in out.final_states.iter().zip(final_lambda) {
        assert_eq!(&state.lambda, lam);
    }

    // ignoring the trace gives a different trajectory
    let perfect = reference_trajectory(
        &graph,
        &constraints,
        radius,
        params.eta,
        params.delta,
        out.record.rounds[0].decisions.clone(),
        &out.history,
        None,
    );
    assert_ne!(perfect.last().unwrap().0, reference.last().unwrap().0);
}

#[test]
fn violation_uses_true_decisions() {
    let (graph, problem) = instance(5);
    let constraints = problem.constraints.clone();
    let channel = LinkFailureModel::uniform_range(&graph, 0.3, 0.6, 5).unwrap();
    let out = run(problem, &graph, channel, SolverParams::full_info(200, 0.5, 1.0).unwrap(), 5).unwrap();
    let pairs = graph.directed_pairs();
    let mut sums = vec![0.0; pairs.len()];
    let series = violation_series(&out.record);
    for (t, round) in out.record.rounds.iter().enumerate() {
        for (k, &(i, j)) in pairs.iter().enumerate() {
            let g = constraints.pair(k).value(&round.decisions[i], &round.decisions[j]);
            assert!((g - round.pair_values[k]).abs() <= 1e-12 * (1.0 + g.abs()));
            sums[k] += round.pair_values[k];
            assert_eq!(series.per_pair[k][t], sums[k]);
        }
    }
}

#[test]
fn replay_stream_reproduces_recorded_costs() {
    let (graph, problem) = instance(9);
    let set = problem.set;
    let constraints = problem.constraints.clone();
    let out = run(problem, &graph, LinkFailureModel::perfect(&graph, 9), SolverParams::full_info(50, 0.5, 1.0).unwrap(), 9)
        .unwrap();
    let replay = Problem {
        set,
        constraints,
        stream: Replay { rounds: out.history.clone(), dim: 2, next: 0 },
    };
    let again = run(replay, &graph, LinkFailureModel::perfect(&graph, 9), SolverParams::full_info(50, 0.5, 1.0).unwrap(), 9)
        .unwrap();
    assert_eq!(again.record, out.record);
}
